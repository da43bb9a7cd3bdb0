//! Dense complex operators on an N-qubit register.
//!
//! [`Operator`] is the carrier for states, gates and observables;
//! [`DensityMatrix`] adds the state invariants on top of it. Qubit 0 is
//! the most significant bit of the basis index, so `|0...0>` is index 0
//! and `kron(a, b)` places `a` on the leading qubits.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance used for Hermiticity, unitarity and trace checks.
pub const TOLERANCE: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Number of qubits for a power-of-two dimension.
pub fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Bit mask selecting `qubit` inside a basis index of an `n`-qubit register.
#[inline]
pub(crate) fn qubit_bit(n_qubits: usize, qubit: usize) -> usize {
    1 << (n_qubits - 1 - qubit)
}

/// Square complex matrix acting on `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    n_qubits: usize,
    mat: DMatrix<Complex64>,
}

impl Operator {
    pub fn from_matrix(mat: DMatrix<Complex64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                actual: mat.ncols(),
            });
        }
        let n_qubits = qubits_for_dim(mat.nrows())?;
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { n_qubits, mat })
    }

    /// Builds an operator from row-major real entries.
    pub fn from_real_rows(dim: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: rows.len(),
            });
        }
        Self::from_matrix(DMatrix::from_fn(dim, dim, |r, c| {
            Complex64::new(rows[r * dim + c], 0.0)
        }))
    }

    pub(crate) fn from_matrix_unchecked(n_qubits: usize, mat: DMatrix<Complex64>) -> Self {
        debug_assert_eq!(mat.nrows(), 1 << n_qubits);
        Self { n_qubits, mat }
    }

    pub fn identity(n_qubits: usize) -> Self {
        let d = 1 << n_qubits;
        Self::from_matrix_unchecked(n_qubits, DMatrix::identity(d, d))
    }

    pub fn zeros(n_qubits: usize) -> Self {
        let d = 1 << n_qubits;
        Self::from_matrix_unchecked(n_qubits, DMatrix::zeros(d, d))
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Result<Self> {
        let n = qubits_for_dim(diag.len())?;
        Ok(Self::from_matrix_unchecked(
            n,
            DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
        ))
    }

    /// Outer product `|a><b|`.
    pub fn outer(a: &DVector<Complex64>, b: &DVector<Complex64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                actual: b.len(),
            });
        }
        Self::from_matrix(a * b.adjoint())
    }

    pub fn pauli_x() -> Self {
        Self::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    pub fn pauli_y() -> Self {
        let i = Complex64::i();
        Self::from_matrix_unchecked(1, DMatrix::from_row_slice(2, 2, &[ZERO, -i, i, ZERO]))
    }

    pub fn pauli_z() -> Self {
        Self::from_real_rows(2, &[1.0, 0.0, 0.0, -1.0]).unwrap()
    }

    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_real_rows(2, &[h, h, h, -h]).unwrap()
    }

    /// Places a single-qubit operator on `qubit` of an `n_qubits` register.
    pub fn embed_single(single: &Operator, qubit: usize, n_qubits: usize) -> Result<Self> {
        if single.n_qubits != 1 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                actual: single.dim(),
            });
        }
        check_qubit(qubit, n_qubits)?;
        let factor = |q: usize| {
            if q == qubit {
                single.clone()
            } else {
                Operator::identity(1)
            }
        };
        Ok((1..n_qubits).fold(factor(0), |acc, q| acc.kron(&factor(q))))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.mat
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.mat[(row, col)]
    }

    pub fn kron(&self, other: &Operator) -> Operator {
        Operator::from_matrix_unchecked(self.n_qubits + other.n_qubits, self.mat.kronecker(&other.mat))
    }

    pub fn adjoint(&self) -> Operator {
        Operator::from_matrix_unchecked(self.n_qubits, self.mat.adjoint())
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.trace()
    }

    pub fn scale(&self, s: Complex64) -> Operator {
        Operator::from_matrix_unchecked(self.n_qubits, &self.mat * s)
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        &self.mat * v
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.mat
            .iter()
            .zip(other.mat.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.mat[(r, c)] - self.mat[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn unitarity_error(&self) -> f64 {
        let prod = self.mat.adjoint() * &self.mat;
        let d = self.dim();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in 0..d {
                let target = if r == c { ONE } else { ZERO };
                worst = worst.max((prod[(r, c)] - target).norm());
            }
        }
        worst
    }

    /// `(A + A†) / 2`.
    pub fn hermitian_part(&self) -> Operator {
        let m = (&self.mat + self.mat.adjoint()) * Complex64::new(0.5, 0.0);
        Operator::from_matrix_unchecked(self.n_qubits, m)
    }

    /// Partial transpose on the qubits of `part.side_a()`.
    pub fn partial_transpose(&self, part: &Bipartition) -> Result<Operator> {
        if part.n_qubits() != self.n_qubits {
            return Err(Error::InvalidBipartition(format!(
                "bipartition covers {} qubits, operator has {}",
                part.n_qubits(),
                self.n_qubits
            )));
        }
        let mask = part
            .side_a()
            .iter()
            .fold(0usize, |m, &q| m | qubit_bit(self.n_qubits, q));
        let d = self.dim();
        let mut out = DMatrix::zeros(d, d);
        for y in 0..d {
            for x in 0..d {
                let xs = (x & !mask) | (y & mask);
                let ys = (y & !mask) | (x & mask);
                out[(xs, ys)] = self.mat[(x, y)];
            }
        }
        Ok(Operator::from_matrix_unchecked(self.n_qubits, out))
    }

    /// Traces out every qubit not listed in `keep`.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Operator> {
        if keep.is_empty() {
            return Err(Error::InvalidArgument("partial trace needs at least one kept qubit".into()));
        }
        let mut keep_sorted = keep.to_vec();
        keep_sorted.sort_unstable();
        keep_sorted.dedup();
        for &q in &keep_sorted {
            check_qubit(q, self.n_qubits)?;
        }
        let n = self.n_qubits;
        let k = keep_sorted.len();
        let keep_mask = keep_sorted.iter().fold(0usize, |m, &q| m | qubit_bit(n, q));
        let compress = |x: usize| -> usize {
            keep_sorted.iter().enumerate().fold(0usize, |acc, (i, &q)| {
                if x & qubit_bit(n, q) != 0 {
                    acc | (1 << (k - 1 - i))
                } else {
                    acc
                }
            })
        };
        let d = self.dim();
        let reduced: Vec<usize> = (0..d).map(compress).collect();
        let mut out = DMatrix::zeros(1 << k, 1 << k);
        for y in 0..d {
            for x in 0..d {
                if x & !keep_mask == y & !keep_mask {
                    out[(reduced[x], reduced[y])] += self.mat[(x, y)];
                }
            }
        }
        Ok(Operator::from_matrix_unchecked(k, out))
    }

    /// Spectral decomposition of a Hermitian operator, eigenvalues ascending.
    pub fn hermitian_eig(&self) -> Result<HermitianEig> {
        let err = self.hermiticity_error();
        if err > TOLERANCE {
            return Err(Error::NotHermitian(err));
        }
        Ok(HermitianEig::of_hermitian(&self.hermitian_part().mat))
    }

    /// Principal square root of a positive semidefinite operator.
    /// Eigenvalues below `dim · ε · λ_max` are treated as exact zeros, since
    /// the square root would otherwise amplify rounding noise.
    pub fn sqrt_psd(&self) -> Result<Operator> {
        let eig = self.hermitian_eig()?;
        let values = eig.clipped_eigenvalues()?;
        let top = values.iter().cloned().fold(0.0, f64::max);
        let floor = self.dim() as f64 * f64::EPSILON * top;
        Ok(eig.reconstruct_with(
            self.n_qubits,
            values.iter().map(|&x| if x <= floor { 0.0 } else { x.sqrt() }),
        ))
    }

    /// Base-2 logarithm restricted to the support; zero eigenvalues map to zero.
    pub fn log2_psd(&self) -> Result<Operator> {
        self.psd_function(|x| if x > 0.0 { x.log2() } else { 0.0 })
    }

    fn psd_function(&self, f: impl Fn(f64) -> f64) -> Result<Operator> {
        let eig = self.hermitian_eig()?;
        let values = eig.clipped_eigenvalues()?;
        Ok(eig.reconstruct_with(self.n_qubits, values.iter().map(|&x| f(x))))
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.mat)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions differ");
        Operator::from_matrix_unchecked(self.n_qubits, &self.mat * &rhs.mat)
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions differ");
        Operator::from_matrix_unchecked(self.n_qubits, &self.mat + &rhs.mat)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions differ");
        Operator::from_matrix_unchecked(self.n_qubits, &self.mat - &rhs.mat)
    }
}

fn check_qubit(index: usize, n_qubits: usize) -> Result<()> {
    if index >= n_qubits {
        Err(Error::QubitOutOfRange { index, n_qubits })
    } else {
        Ok(())
    }
}

/// Eigenvalues (ascending) with the matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<Complex64>,
}

impl HermitianEig {
    fn of_hermitian(mat: &DMatrix<Complex64>) -> Self {
        let eig = mat.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let eigenvectors = DMatrix::from_fn(mat.nrows(), mat.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
        Self {
            eigenvalues,
            eigenvectors,
        }
    }

    /// Eigenvalues with tiny negative drift clipped to zero.
    ///
    /// Fails when an eigenvalue is below `-TOLERANCE`.
    pub fn clipped_eigenvalues(&self) -> Result<Vec<f64>> {
        self.eigenvalues
            .iter()
            .map(|&x| {
                if x < -TOLERANCE {
                    Err(Error::NotPositive(x))
                } else {
                    Ok(x.max(0.0))
                }
            })
            .collect()
    }

    /// `V f(Λ) V†` for the given eigenvalue images.
    pub fn reconstruct_with(&self, n_qubits: usize, values: impl Iterator<Item = f64>) -> Operator {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (c, val) in values.enumerate() {
            scaled.column_mut(c).scale_mut(val);
        }
        Operator::from_matrix_unchecked(n_qubits, scaled * v.adjoint())
    }

    pub fn reconstruct(&self, n_qubits: usize) -> Operator {
        self.reconstruct_with(n_qubits, self.eigenvalues.iter().copied())
    }
}

/// A split of the register into two non-empty, disjoint sides.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bipartition {
    n_qubits: usize,
    side_a: Vec<usize>,
    side_b: Vec<usize>,
}

impl Bipartition {
    /// `side_a` uses zero-based qubit indices.
    pub fn new(n_qubits: usize, side_a: &[usize]) -> Result<Self> {
        let mut a = side_a.to_vec();
        a.sort_unstable();
        a.dedup();
        if a.len() != side_a.len() {
            return Err(Error::InvalidBipartition("repeated qubit index".into()));
        }
        if a.is_empty() || a.len() >= n_qubits {
            return Err(Error::InvalidBipartition(
                "side A must be a non-empty proper subset".into(),
            ));
        }
        for &q in &a {
            check_qubit(q, n_qubits)?;
        }
        let b = (0..n_qubits).filter(|q| !a.contains(q)).collect();
        Ok(Self {
            n_qubits,
            side_a: a,
            side_b: b,
        })
    }

    /// Qubit `qubit` against the rest of the register.
    pub fn one_vs_rest(n_qubits: usize, qubit: usize) -> Result<Self> {
        Self::new(n_qubits, &[qubit])
    }

    /// Every bipartition up to swapping sides, ordered by the size of the
    /// smaller side. Equal-size splits keep qubit 0 on side A.
    pub fn all(n_qubits: usize) -> Vec<Self> {
        let mut out = Vec::new();
        for size in 1..=n_qubits / 2 {
            for mask in 0usize..(1 << n_qubits) {
                if mask.count_ones() as usize != size {
                    continue;
                }
                let side: Vec<usize> = (0..n_qubits).filter(|&q| mask & (1 << (n_qubits - 1 - q)) != 0).collect();
                if 2 * size == n_qubits && !side.contains(&0) {
                    continue;
                }
                out.push(Self::new(n_qubits, &side).expect("valid by construction"));
            }
        }
        out.sort_by(|a, b| a.side_a.len().cmp(&b.side_a.len()).then(a.side_a.cmp(&b.side_a)));
        out
    }

    /// Parses labels such as `1v234` or `12|34` (one-based qubit numbers).
    pub fn parse(label: &str, n_qubits: usize) -> Result<Self> {
        let sep = label
            .find(['v', '|'])
            .ok_or_else(|| Error::InvalidBipartition(format!("missing separator in '{label}'")))?;
        let digits = |s: &str| -> Result<Vec<usize>> {
            s.chars()
                .map(|ch| {
                    ch.to_digit(10)
                        .filter(|&d| d >= 1)
                        .map(|d| d as usize - 1)
                        .ok_or_else(|| Error::InvalidBipartition(format!("bad qubit '{ch}' in '{label}'")))
                })
                .collect()
        };
        let a = digits(&label[..sep])?;
        let b = digits(&label[sep + 1..])?;
        let part = Self::new(n_qubits, &a)?;
        let mut b_sorted = b.clone();
        b_sorted.sort_unstable();
        if b_sorted != part.side_b {
            return Err(Error::InvalidBipartition(format!(
                "'{label}' does not cover the {n_qubits}-qubit register"
            )));
        }
        Ok(part)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn side_a(&self) -> &[usize] {
        &self.side_a
    }

    pub fn side_b(&self) -> &[usize] {
        &self.side_b
    }

    /// Label like `1v234`, using one-based qubit numbers.
    pub fn label(&self) -> String {
        let side = |s: &[usize]| s.iter().map(|q| (q + 1).to_string()).collect::<String>();
        format!("{}v{}", side(&self.side_a), side(&self.side_b))
    }
}

impl fmt::Display for Bipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity (to [`TOLERANCE`]).
    pub fn new(op: Operator) -> Result<Self> {
        let herm = op.hermiticity_error();
        if herm > TOLERANCE {
            return Err(Error::NotHermitian(herm));
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > TOLERANCE || tr.im.abs() > TOLERANCE {
            return Err(Error::TraceNotOne(tr.re));
        }
        let eig = op.hermitian_eig()?;
        if let Some(&min) = eig.eigenvalues.first() {
            if min < -TOLERANCE {
                return Err(Error::NotPositive(min));
            }
        }
        Ok(Self(op))
    }

    pub(crate) fn new_unchecked(op: Operator) -> Self {
        Self(op)
    }

    /// `|ψ><ψ|` for a normalised amplitude vector.
    pub fn from_pure(amplitudes: &DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self(Operator::outer(amplitudes, amplitudes)?))
    }

    /// Maximally mixed state `I / 2^n`.
    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let d = (1usize << n_qubits) as f64;
        Self(Operator::identity(n_qubits).scale(Complex64::new(1.0 / d, 0.0)))
    }

    pub fn operator(&self) -> &Operator {
        &self.0
    }

    pub fn into_operator(self) -> Operator {
        self.0
    }

    pub fn n_qubits(&self) -> usize {
        self.0.n_qubits()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        self.0.matrix()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0.get(row, col)
    }

    pub fn kron(&self, other: &DensityMatrix) -> DensityMatrix {
        Self(self.0.kron(&other.0))
    }

    /// Convex combination `w * self + (1 - w) * other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<DensityMatrix> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidArgument(format!("mixing weight {w} outside [0, 1]")));
        }
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        let m = self.matrix() * Complex64::new(w, 0.0) + other.matrix() * Complex64::new(1.0 - w, 0.0);
        Ok(Self(Operator::from_matrix_unchecked(self.n_qubits(), m)))
    }

    /// Eigenvalues in ascending order.
    pub fn spectrum(&self) -> Vec<f64> {
        HermitianEig::of_hermitian(&self.0.hermitian_part().mat).eigenvalues
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        Ok(Self(self.0.partial_trace(keep)?))
    }
}

impl AsRef<Operator> for DensityMatrix {
    fn as_ref(&self) -> &Operator {
        &self.0
    }
}
