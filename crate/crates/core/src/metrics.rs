//! Scalar figures of merit for density matrices, plus the analytic
//! predictions for dephased GHZ states that the numeric path is checked
//! against.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::operator::{Bipartition, DensityMatrix, Operator, TOLERANCE};
use crate::{Error, Result};

/// Eigenvalue-sum cutoff in the quantum Fisher information kernel.
pub const QFI_CUTOFF: f64 = 1e-12;

/// Sum of the magnitudes of the negative eigenvalues of `ρ^Γ`,
/// i.e. `(‖ρ^Γ‖₁ - 1) / 2`.
pub fn negativity(rho: &DensityMatrix, part: &Bipartition) -> Result<f64> {
    let pt = rho.operator().partial_transpose(part)?;
    let eig = pt.hermitian_eig()?;
    Ok(eig.eigenvalues.iter().filter(|&&l| l < 0.0).map(|l| -l).sum())
}

/// `Tr ρ²`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    // Tr ρ² = Σ |ρ_xy|² for Hermitian ρ
    rho.matrix().iter().map(|z| z.norm_sqr()).sum()
}

/// Von Neumann entropy in bits, summing over strictly positive eigenvalues.
pub fn entropy(rho: &DensityMatrix) -> f64 {
    entropy_of_spectrum(&rho.spectrum())
}

pub fn entropy_of_spectrum(eigenvalues: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Uhlmann fidelity `(Tr √(√σ ρ √σ))²` with `σ = target`.
pub fn fidelity(rho: &DensityMatrix, target: &DensityMatrix) -> Result<f64> {
    if rho.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            actual: rho.dim(),
        });
    }
    // Tr √(√σ ρ √σ) is the sum of singular values of √ρ √σ; the SVD avoids
    // square-rooting eigenvalues that are zero up to rounding.
    let product = rho.operator().sqrt_psd()?.into_matrix() * target.operator().sqrt_psd()?.into_matrix();
    let tr: f64 = product.singular_values().iter().sum();
    Ok((tr * tr).clamp(0.0, 1.0))
}

/// Wootters concurrence of a two-qubit state.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    if rho.n_qubits() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: rho.dim(),
        });
    }
    let yy = Operator::pauli_y().kron(&Operator::pauli_y());
    let conj = Operator::from_matrix(rho.matrix().map(|z| z.conj()))?;
    let tilde = &(&yy * &conj) * &yy;
    // eigenvalues of ρ ρ̃ equal those of √ρ ρ̃ √ρ, which is Hermitian
    let s = rho.operator().sqrt_psd()?;
    let r = (&(&s * &tilde) * &s).hermitian_part();
    let mut lambdas: Vec<f64> = r
        .hermitian_eig()?
        .clipped_eigenvalues()?
        .into_iter()
        .map(f64::sqrt)
        .collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
}

/// Collective phase generator `G = ½ Σ_k σ_z^{(k)}` (diagonal).
pub fn collective_z_generator(n_qubits: usize) -> Operator {
    let diag: Vec<Complex64> = (0..1usize << n_qubits)
        .map(|x| {
            let ones = x.count_ones() as f64;
            Complex64::new(0.5 * (n_qubits as f64 - 2.0 * ones), 0.0)
        })
        .collect();
    Operator::from_diagonal(&diag).expect("power-of-two length")
}

/// Quantum Fisher information of `ρ` for the family `exp(-iφG) ρ exp(iφG)`:
/// `2 Σ_{λi+λj > ε} (λi - λj)² / (λi + λj) |<i|G|j>|²`.
pub fn qfi(rho: &DensityMatrix, generator: &Operator) -> Result<f64> {
    if generator.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: generator.dim(),
        });
    }
    let herm = generator.hermiticity_error();
    if herm > TOLERANCE {
        return Err(Error::NotHermitian(herm));
    }
    let eig = rho.operator().hermitian_eig()?;
    let v = &eig.eigenvectors;
    let g: DMatrix<Complex64> = v.adjoint() * generator.matrix() * v;
    let l = &eig.eigenvalues;
    let d = l.len();
    let mut total = 0.0;
    for i in 0..d {
        for j in (i + 1)..d {
            let s = l[i] + l[j];
            if s > QFI_CUTOFF {
                let diff = l[i] - l[j];
                total += diff * diff / s * g[(i, j)].norm_sqr();
            }
        }
    }
    // the (i, j) and (j, i) terms are equal
    Ok(4.0 * total)
}

/// QFI with the collective generator `½ Σ σ_z`.
pub fn phase_qfi(rho: &DensityMatrix) -> Result<f64> {
    qfi(rho, &collective_z_generator(rho.n_qubits()))
}

/// All scalar figures of merit for one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub negativity: Vec<(String, f64)>,
    pub purity: f64,
    pub entropy: f64,
    pub qfi: f64,
    pub fidelity_to_target: Option<f64>,
}

impl MetricReport {
    pub fn evaluate(
        rho: &DensityMatrix,
        partitions: &[Bipartition],
        target: Option<&DensityMatrix>,
    ) -> Result<Self> {
        let negativity = partitions
            .iter()
            .map(|p| Ok((p.label(), negativity(rho, p)?)))
            .collect::<Result<_>>()?;
        Ok(Self {
            negativity,
            purity: purity(rho),
            entropy: entropy(rho),
            qfi: phase_qfi(rho)?,
            fidelity_to_target: target.map(|t| fidelity(rho, t)).transpose()?,
        })
    }
}

/// Analytic predictions for one dephased GHZ variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormValues {
    /// Non-zero eigenvalues with their multiplicities.
    pub eigenvalues: Vec<(f64, usize)>,
    pub purity: f64,
    pub entropy: f64,
    pub qfi: f64,
    /// Negativity in any bipartition, where a closed form is known.
    pub negativity: Option<f64>,
}

/// Closed forms for the bare and Hadamard-encoded dephased GHZ state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormSuite {
    pub n_qubits: usize,
    pub p: f64,
    pub bare: ClosedFormValues,
    pub encoded: ClosedFormValues,
}

pub fn closed_form_suite(n_qubits: usize, p: f64) -> Result<ClosedFormSuite> {
    if n_qubits < 2 {
        return Err(Error::InvalidArgument(format!("closed forms need n >= 2, got {n_qubits}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::NoiseOutOfRange(p));
    }
    let n = n_qubits as i32;
    let nf = n_qubits as f64;
    let decay = (1.0 - p).powi(n);

    let lam0 = 0.5 * (1.0 - decay);
    let bare_eigs: Vec<(f64, usize)> = [(lam0, 1), (1.0 - lam0, 1)].into_iter().filter(|(l, _)| *l > 0.0).collect();
    let bare = ClosedFormValues {
        entropy: spectrum_entropy(&bare_eigs),
        eigenvalues: bare_eigs,
        purity: 0.5 * (1.0 + decay * decay),
        qfi: nf * nf * decay * decay,
        negativity: Some(0.5 * decay),
    };

    let (a, b) = (1.0 - p / 2.0, p / 2.0);
    let mut enc_eigs: Vec<(f64, usize)> = Vec::with_capacity(n_qubits);
    for k in 0..n {
        let lam = a.powi(n - k) * b.powi(k) + a.powi(k) * b.powi(n - k);
        let mult = binomial(n_qubits - 1, k as usize);
        if lam > 0.0 {
            match enc_eigs.iter_mut().find(|(l, _)| (*l - lam).abs() <= 1e-15) {
                Some(entry) => entry.1 += mult,
                None => enc_eigs.push((lam, mult)),
            }
        }
    }
    let encoded = ClosedFormValues {
        entropy: spectrum_entropy(&enc_eigs),
        eigenvalues: enc_eigs,
        purity: p.powi(n) * a.powi(n) + (1.0 - p + p * p / 2.0).powi(n),
        qfi: nf * nf * (1.0 - p).powi(2) + 4.0 * nf * a * b,
        negativity: if p == 0.0 { Some(0.5) } else { None },
    };

    Ok(ClosedFormSuite {
        n_qubits,
        p,
        bare,
        encoded,
    })
}

fn spectrum_entropy(eigs: &[(f64, usize)]) -> f64 {
    eigs.iter()
        .filter(|(l, _)| *l > 0.0)
        .map(|&(l, m)| -(m as f64) * l * l.log2())
        .sum::<f64>()
        .max(0.0)
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}
