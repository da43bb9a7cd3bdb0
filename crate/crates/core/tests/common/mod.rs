//! Oracles shared by the integration tests. They are built directly on
//! nalgebra so that they do not reuse the library code they check.

#![allow(dead_code)]

use dephase_lab::coherence::{SdpCertificate, SupportIndexSet};
use dephase_lab::operator::{DensityMatrix, Operator};
use dephase_lab::Complex64;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `ρ = A A† / Tr` with `A` a `d × rank` matrix of uniform entries.
pub fn random_density(n_qubits: usize, rank: usize, seed: u64) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 1 << n_qubits;
    let a = DMatrix::from_fn(d, rank, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let m = &a * a.adjoint();
    let tr = m.trace();
    DensityMatrix::new(Operator::from_matrix(m / tr).unwrap()).unwrap()
}

/// `I ⊗ … ⊗ Z ⊗ … ⊗ I` with `Z` on `qubit` (qubit 0 leftmost).
fn z_on(n_qubits: usize, qubit: usize) -> DMatrix<Complex64> {
    let id = DMatrix::<Complex64>::identity(2, 2);
    let z = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
    let mut out = DMatrix::<Complex64>::identity(1, 1);
    for q in 0..n_qubits {
        out = out.kronecker(if q == qubit { &z } else { &id });
    }
    out
}

/// Per-qubit dephasing in Kraus form `{√(1-p/2) I, √(p/2) Z}`.
pub fn kraus_dephase(rho: &DMatrix<Complex64>, n_qubits: usize, strengths: &[f64]) -> DMatrix<Complex64> {
    let mut out = rho.clone();
    for (q, &p) in strengths.iter().enumerate().take(n_qubits) {
        let z = z_on(n_qubits, q);
        out = &out * c(1.0 - p / 2.0) + (&z * &out * &z) * c(p / 2.0);
    }
    out
}

pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Smallest eigenvalue of a Hermitian matrix via its real embedding.
pub fn min_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    let d = m.nrows();
    let real = DMatrix::from_fn(2 * d, 2 * d, |r, col| {
        let z = m[(r % d, col % d)];
        match (r < d, col < d) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let sym = (&real + real.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.min()
}

/// Independent feasibility and optimality check of a robustness certificate.
/// Returns a description of the first violated condition.
pub fn verify_certificate(rho: &DensityMatrix, k: usize, cert: &SdpCertificate, tol: f64) -> Result<(), String> {
    let d = rho.dim();
    let mut total = DMatrix::<Complex64>::zeros(d, d);
    let mut trace_sum = 0.0;
    for (support, block) in &cert.primal_blocks {
        let idx = support.indices();
        if idx.len() != k {
            return Err(format!("support {idx:?} does not have {k} elements"));
        }
        let herm = (block - block.adjoint()).iter().fold(0.0, |m: f64, z| m.max(z.norm()));
        if herm > tol {
            return Err(format!("block on {idx:?} is not Hermitian ({herm:e})"));
        }
        let lam = min_eigenvalue(block);
        if lam < -tol {
            return Err(format!("block on {idx:?} has eigenvalue {lam:e}"));
        }
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                total[(i, j)] += block[(a, b)];
            }
        }
        trace_sum += block.trace().re;
    }
    let slack = min_eigenvalue(&(&total - rho.matrix()));
    if slack < -tol {
        return Err(format!("sum of blocks minus rho has eigenvalue {slack:e}"));
    }
    if ((trace_sum - 1.0) - cert.objective).abs() > tol {
        return Err(format!("objective {} disagrees with block traces {}", cert.objective, trace_sum - 1.0));
    }
    if let Some(w) = &cert.witness {
        let lam = min_eigenvalue(w);
        if lam < -tol {
            return Err(format!("witness has eigenvalue {lam:e}"));
        }
        for support in SupportIndexSet::all(d, k) {
            let idx = support.indices();
            let sub = DMatrix::from_fn(k, k, |a, b| c(if a == b { 1.0 } else { 0.0 }) - w[(idx[a], idx[b])]);
            let lam = min_eigenvalue(&sub);
            if lam < -tol {
                return Err(format!("witness block on {idx:?} exceeds one by {:e}", -lam));
            }
        }
        let lower = (rho.matrix() * w).trace().re - 1.0;
        if lower > cert.objective + tol {
            return Err(format!("dual bound {lower} exceeds primal {}", cert.objective));
        }
        if cert.objective - lower > tol.max(cert.dual_gap) + tol {
            return Err(format!("gap {} between primal and witness bound", cert.objective - lower));
        }
    }
    Ok(())
}
