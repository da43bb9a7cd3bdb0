//! Pure-state and gate constructors: GHZ, graph and cluster states, the
//! singlet, Hadamard encoding masks and the collective phase unitary.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::operator::{qubit_bit, DensityMatrix, Operator};
use crate::{Error, Result};

const NORM_TOLERANCE: f64 = 1e-12;

/// Normalised state vector on `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amplitudes: DVector<Complex64>,
}

impl PureState {
    pub fn new(amplitudes: DVector<Complex64>) -> Result<Self> {
        let n_qubits = crate::operator::qubits_for_dim(amplitudes.len())?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Normalises `amplitudes` and fixes the first non-zero amplitude to be
    /// real and positive.
    pub fn normalized(amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        let mut v = amplitudes / Complex64::new(norm, 0.0);
        if let Some(first) = v.iter().find(|a| a.norm() > 1e-14).copied() {
            let phase = first.conj() / first.norm();
            v *= phase;
        }
        Self::new(v)
    }

    /// Computational basis state `|index>`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let d = 1usize << n_qubits;
        if index >= d {
            return Err(Error::InvalidArgument(format!("basis index {index} out of range")));
        }
        let mut v = DVector::zeros(d);
        v[index] = Complex64::new(1.0, 0.0);
        Self::new(v)
    }

    /// `|+>^{⊗n}`.
    pub fn plus_product(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        let a = (d as f64).sqrt().recip();
        Self {
            n_qubits,
            amplitudes: DVector::from_element(d, Complex64::new(a, 0.0)),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `|<self|other>| ≈ 1`, i.e. equal up to a global phase.
    pub fn equals_up_to_phase(&self, other: &PureState, tol: f64) -> bool {
        self.dim() == other.dim() && (self.inner(other).norm() - 1.0).abs() <= tol
    }

    pub fn density_matrix(&self) -> DensityMatrix {
        DensityMatrix::new_unchecked(
            Operator::outer(&self.amplitudes, &self.amplitudes).expect("same length"),
        )
    }

    /// Applies a unitary operator, checking unitarity to 1e-10.
    pub fn evolve(&self, u: &Operator) -> Result<PureState> {
        if u.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: u.dim(),
            });
        }
        let err = u.unitarity_error();
        if err > crate::operator::TOLERANCE {
            return Err(Error::NotUnitary(err));
        }
        Ok(Self {
            n_qubits: self.n_qubits,
            amplitudes: u.apply(&self.amplitudes),
        })
    }
}

/// `(|0...0> + |1...1>) / √2`.
pub fn ghz(n_qubits: usize) -> Result<PureState> {
    if n_qubits < 2 {
        return Err(Error::InvalidArgument(format!(
            "GHZ state needs at least 2 qubits, got {n_qubits}"
        )));
    }
    let d = 1usize << n_qubits;
    let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut v = DVector::zeros(d);
    v[0] = a;
    v[d - 1] = a;
    PureState::new(v)
}

/// `(|01> - |10>) / √2`.
pub fn singlet() -> PureState {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    let v = DVector::from_vec(vec![
        Complex64::new(0.0, 0.0),
        Complex64::new(a, 0.0),
        Complex64::new(-a, 0.0),
        Complex64::new(0.0, 0.0),
    ]);
    PureState::new(v).expect("normalised")
}

/// Simple undirected graph on `n_qubits` vertices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSpec {
    n_qubits: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl GraphSpec {
    /// Edges use zero-based vertex indices.
    pub fn new(n_qubits: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop on vertex {}", a + 1)));
            }
            if a >= n_qubits || b >= n_qubits {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) outside 1..={n_qubits}",
                    a + 1,
                    b + 1
                )));
            }
            if !set.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({}, {})", a + 1, b + 1)));
            }
        }
        Ok(Self {
            n_qubits,
            edges: set,
        })
    }

    pub fn empty(n_qubits: usize) -> Result<Self> {
        Self::new(n_qubits, &[])
    }

    /// Path graph `0 - 1 - ... - (n-1)`; its graph state is the linear cluster.
    pub fn path(n_qubits: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n_qubits).map(|i| (i - 1, i)).collect();
        Self::new(n_qubits, &edges)
    }

    /// Parses a plain-text edge list: the first non-blank line holds the
    /// vertex count, each following line a one-based pair `i j`. Lines
    /// starting with `#` are ignored.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let n: usize = lines
            .next()
            .ok_or_else(|| Error::InvalidGraph("empty edge list".into()))?
            .parse()
            .map_err(|_| Error::InvalidGraph("first line must be the qubit count".into()))?;
        let mut edges = Vec::new();
        for line in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| -> Result<usize> {
                s.parse::<usize>()
                    .ok()
                    .filter(|&v| v >= 1)
                    .map(|v| v - 1)
                    .ok_or_else(|| Error::InvalidGraph(format!("bad vertex '{s}' in line '{line}'")))
            };
            if parts.len() != 2 {
                return Err(Error::InvalidGraph(format!("expected 'i j', got '{line}'")));
            }
            edges.push((parse(parts[0])?, parse(parts[1])?));
        }
        Self::new(n, &edges)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }
}

/// CZ over every edge applied to `|+>^{⊗n}`.
pub fn graph_state(graph: &GraphSpec) -> PureState {
    let n = graph.n_qubits();
    let mut state = PureState::plus_product(n);
    for (a, b) in graph.edges() {
        let (ma, mb) = (qubit_bit(n, a), qubit_bit(n, b));
        for (x, amp) in state.amplitudes.iter_mut().enumerate() {
            if x & ma != 0 && x & mb != 0 {
                *amp = -*amp;
            }
        }
    }
    state
}

/// Linear cluster state: the graph state of a path on `n_qubits` vertices.
pub fn linear_cluster(n_qubits: usize) -> Result<PureState> {
    Ok(graph_state(&GraphSpec::path(n_qubits)?))
}

/// Controlled-Z between qubits `a` and `b` as a diagonal operator.
pub fn cz(n_qubits: usize, a: usize, b: usize) -> Result<Operator> {
    for q in [a, b] {
        if q >= n_qubits {
            return Err(Error::QubitOutOfRange { index: q, n_qubits });
        }
    }
    if a == b {
        return Err(Error::InvalidArgument("CZ needs two distinct qubits".into()));
    }
    let (ma, mb) = (qubit_bit(n_qubits, a), qubit_bit(n_qubits, b));
    let diag: Vec<Complex64> = (0..1usize << n_qubits)
        .map(|x| Complex64::new(if x & ma != 0 && x & mb != 0 { -1.0 } else { 1.0 }, 0.0))
        .collect();
    Operator::from_diagonal(&diag)
}

/// `⊗ⁿ diag(e^{-iφ/2}, e^{+iφ/2})`, i.e. `exp(-iφ G)` with `G = ½ Σ σ_z`.
pub fn phase_unitary(phi: f64, n_qubits: usize) -> Result<Operator> {
    if n_qubits == 0 {
        return Err(Error::InvalidArgument("phase unitary needs at least one qubit".into()));
    }
    let diag: Vec<Complex64> = (0..1usize << n_qubits)
        .map(|x| phase_factor(phi, n_qubits, x))
        .collect();
    Operator::from_diagonal(&diag)
}

/// Diagonal entry `x` of [`phase_unitary`].
#[inline]
pub(crate) fn phase_factor(phi: f64, n_qubits: usize, x: usize) -> Complex64 {
    let ones = x.count_ones() as f64;
    let zeros = n_qubits as f64 - ones;
    Complex64::from_polar(1.0, 0.5 * phi * (ones - zeros))
}

/// Single-qubit encoding choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LocalGate {
    Identity,
    Hadamard,
}

/// Per-qubit Hadamard/identity choice defining the encode and decode maps.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EncodingMask(Vec<LocalGate>);

impl EncodingMask {
    pub fn new(gates: Vec<LocalGate>) -> Self {
        Self(gates)
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self(vec![LocalGate::Identity; n_qubits])
    }

    pub fn all_hadamard(n_qubits: usize) -> Self {
        Self(vec![LocalGate::Hadamard; n_qubits])
    }

    /// Hadamards on the two end qubits of a chain, `H ⊗ 1 ⊗ ... ⊗ 1 ⊗ H`.
    pub fn chain_ends(n_qubits: usize) -> Self {
        let mut gates = vec![LocalGate::Identity; n_qubits];
        if let Some(first) = gates.first_mut() {
            *first = LocalGate::Hadamard;
        }
        if let Some(last) = gates.last_mut() {
            *last = LocalGate::Hadamard;
        }
        Self(gates)
    }

    /// Mask whose qubit `q` carries a Hadamard when bit `q` (MSB = qubit 0)
    /// of `bits` is set.
    pub fn from_bits(n_qubits: usize, bits: usize) -> Self {
        Self(
            (0..n_qubits)
                .map(|q| {
                    if bits & qubit_bit(n_qubits, q) != 0 {
                        LocalGate::Hadamard
                    } else {
                        LocalGate::Identity
                    }
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn gates(&self) -> &[LocalGate] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|g| *g == LocalGate::Identity)
    }

    pub fn hadamard_qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, g)| **g == LocalGate::Hadamard)
            .map(|(q, _)| q)
    }

    /// Full `2^n × 2^n` operator of the mask.
    pub fn operator(&self) -> Operator {
        let single = |g: LocalGate| match g {
            LocalGate::Identity => Operator::identity(1),
            LocalGate::Hadamard => Operator::hadamard(),
        };
        self.0[1..]
            .iter()
            .fold(single(self.0[0]), |acc, &g| acc.kron(&single(g)))
    }
}

impl fmt::Display for EncodingMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for g in &self.0 {
            f.write_str(match g {
                LocalGate::Identity => "0",
                LocalGate::Hadamard => "1",
            })?;
        }
        Ok(())
    }
}

impl FromStr for EncodingMask {
    type Err = Error;

    /// Bitstring such as `1001`; `1` marks a Hadamard.
    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::InvalidArgument("empty mask".into()));
        }
        s.chars()
            .map(|c| match c {
                '0' => Ok(LocalGate::Identity),
                '1' => Ok(LocalGate::Hadamard),
                other => Err(Error::InvalidArgument(format!("mask character '{other}' is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

/// Applies the mask's local gates to a pure state. Hadamard is an
/// involution, so applying the same mask twice is the identity.
pub fn apply_mask(state: &PureState, mask: &EncodingMask) -> Result<PureState> {
    if mask.len() != state.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: state.n_qubits(),
            actual: mask.len(),
        });
    }
    let n = state.n_qubits();
    let mut amps = state.amplitudes.clone();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for q in mask.hadamard_qubits() {
        let bit = qubit_bit(n, q);
        for x in 0..amps.len() {
            if x & bit == 0 {
                let (a0, a1) = (amps[x], amps[x | bit]);
                amps[x] = (a0 + a1) * h;
                amps[x | bit] = (a0 - a1) * h;
            }
        }
    }
    Ok(PureState {
        n_qubits: n,
        amplitudes: amps,
    })
}
