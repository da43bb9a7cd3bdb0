//! Multilevel coherence: coherence rank and the robustness of `k`-level
//! coherence `R_{C_k}`.
//!
//! `R_{C_k}(ρ)` is the optimum of
//!
//! ```text
//! min  Σ_I Tr σ_I - 1
//! s.t. σ_I ⪰ 0 supported on the k-subset I,   Σ_I σ_I ⪰ ρ
//! ```
//!
//! over all `k`-element subsets `I` of the computational basis. The
//! program is handed to [`sdp::solve`] in real form: a Hermitian `M` is
//! embedded as `[[Re M, -Im M], [Im M, Re M]]`, which doubles every
//! eigenvalue. The real block `X_I` stores `½ embed(σ_I)` so that
//! `Tr X_I = Tr σ_I` and no rescaling of the objective is needed.
//!
//! The dual variable is a Hermitian witness `W ⪰ 0` with every `k × k`
//! principal block `⪯ 1`, and `Tr(ρW) - 1` is a lower bound on the value.

pub mod sdp;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channels::ProbeFamily;
use crate::exec::Execution;
use crate::operator::{DensityMatrix, Operator};
use crate::states::PureState;
use crate::{Error, Result};

use sdp::{BlockSdp, Entry, SolverOptions};

/// Default amplitude threshold for [`coherence_rank`].
pub const RANK_TOLERANCE: f64 = 1e-9;

/// Largest number of support blocks a single program may have.
const MAX_BLOCKS: usize = 100_000;

/// Number of computational-basis amplitudes with modulus above `tol`.
pub fn coherence_rank(state: &PureState, tol: f64) -> usize {
    state.amplitudes().iter().filter(|a| a.norm() > tol).count()
}

/// A `k`-element subset of basis indices (zero-based, ascending).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SupportIndexSet(Vec<usize>);

impl SupportIndexSet {
    pub fn new(dim: usize, indices: &[usize]) -> Result<Self> {
        let mut v = indices.to_vec();
        v.sort_unstable();
        v.dedup();
        if v.len() != indices.len() || v.is_empty() {
            return Err(Error::InvalidArgument("support indices must be distinct and non-empty".into()));
        }
        if let Some(&bad) = v.iter().find(|&&i| i >= dim) {
            return Err(Error::InvalidArgument(format!("support index {bad} outside dimension {dim}")));
        }
        Ok(Self(v))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// All `k`-subsets of `0..dim` in lexicographic order.
    pub fn all(dim: usize, k: usize) -> Vec<Self> {
        let mut out = Vec::new();
        if k == 0 || k > dim {
            return out;
        }
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            out.push(Self(idx.clone()));
            let mut i = k;
            while i > 0 && idx[i - 1] == dim - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                return out;
            }
            idx[i - 1] += 1;
            for j in i..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
}

/// The robustness program for one state and level.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    rho: DensityMatrix,
    k: usize,
    blocks: Vec<SupportIndexSet>,
}

/// Primal blocks `σ_I`, the dual witness and the duality gap of a solve.
#[derive(Debug, Clone)]
pub struct SdpCertificate {
    /// `k × k` Hermitian blocks on their supports.
    pub primal_blocks: Vec<(SupportIndexSet, DMatrix<Complex64>)>,
    /// `Σ Tr σ_I - 1`.
    pub objective: f64,
    /// `Tr(ρW) - 1` for the dual witness `W`.
    pub dual_objective: f64,
    /// `|objective - dual_objective|`.
    pub dual_gap: f64,
    /// Dual witness `W`; `None` when the solve exited early.
    pub witness: Option<DMatrix<Complex64>>,
    pub iterations: usize,
}

impl SdpCertificate {
    /// `Σ_I P_I σ_I P_I` as a full matrix.
    pub fn total(&self, dim: usize) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(dim, dim);
        for (support, block) in &self.primal_blocks {
            let idx = support.indices();
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    out[(i, j)] += block[(a, b)];
                }
            }
        }
        out
    }
}

fn pair_index(d: usize, a: usize, b: usize) -> usize {
    debug_assert!(a < b);
    a * (2 * d - a - 1) / 2 + (b - a - 1)
}

impl SdpProblem {
    pub fn new(rho: &DensityMatrix, k: usize) -> Result<Self> {
        let d = rho.dim();
        if k == 0 || k > d {
            return Err(Error::InvalidArgument(format!("coherence level {k} outside 1..={d}")));
        }
        let count = binomial(d, k);
        if count > MAX_BLOCKS as f64 {
            return Err(Error::InvalidArgument(format!(
                "level {k} in dimension {d} needs {count} support blocks"
            )));
        }
        Ok(Self {
            rho: rho.clone(),
            k,
            blocks: SupportIndexSet::all(d, k),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn blocks(&self) -> &[SupportIndexSet] {
        &self.blocks
    }

    /// Real block SDP: block 0 is the embedded witness `W ⪰ 0`, block `1 + s`
    /// the embedded `1 - P_I W P_I ⪰ 0` for support `s`.
    pub fn to_block_sdp(&self) -> BlockSdp {
        let d = self.rho.dim();
        let k = self.k;
        let pairs = d * (d - 1) / 2;
        let m = d + 2 * pairs;
        let diag_id = |a: usize| a;
        let real_id = |a: usize, b: usize| d + pair_index(d, a, b);
        let imag_id = |a: usize, b: usize| d + pairs + pair_index(d, a, b);

        let mut constraints: Vec<Vec<Entry>> = vec![Vec::new(); m];
        let mut rhs = DVector::zeros(m);
        let e = |block, row, col, value| Entry { block, row, col, value };

        for a in 0..d {
            rhs[diag_id(a)] = self.rho.get(a, a).re;
            constraints[diag_id(a)].extend([e(0, a, a, -1.0), e(0, d + a, d + a, -1.0)]);
            for b in a + 1..d {
                let z = self.rho.get(a, b);
                rhs[real_id(a, b)] = 2.0 * z.re;
                rhs[imag_id(a, b)] = 2.0 * z.im;
                constraints[real_id(a, b)].extend([e(0, a, b, -1.0), e(0, d + a, d + b, -1.0)]);
                constraints[imag_id(a, b)].extend([e(0, a, d + b, 1.0), e(0, b, d + a, -1.0)]);
            }
        }
        for (s, support) in self.blocks.iter().enumerate() {
            let blk = s + 1;
            let idx = support.indices();
            for (ia, &a) in idx.iter().enumerate() {
                constraints[diag_id(a)].extend([e(blk, ia, ia, 1.0), e(blk, k + ia, k + ia, 1.0)]);
                for (ib, &b) in idx.iter().enumerate().skip(ia + 1) {
                    constraints[real_id(a, b)].extend([e(blk, ia, ib, 1.0), e(blk, k + ia, k + ib, 1.0)]);
                    constraints[imag_id(a, b)].extend([e(blk, ia, k + ib, -1.0), e(blk, ib, k + ia, 1.0)]);
                }
            }
        }

        let mut block_sizes = vec![2 * d];
        block_sizes.extend(std::iter::repeat_n(2 * k, self.blocks.len()));
        let mut cost = vec![DMatrix::zeros(2 * d, 2 * d)];
        cost.extend(std::iter::repeat_n(DMatrix::identity(2 * k, 2 * k), self.blocks.len()));
        BlockSdp {
            block_sizes,
            cost,
            constraints,
            rhs,
        }
    }

    /// Certificate without solving, when one is available in closed form:
    /// a diagonal `ρ` lies in `C_1 ⊆ C_k`, and `C_d` holds every state.
    fn trivial_certificate(&self) -> Option<SdpCertificate> {
        let d = self.rho.dim();
        let certificate = |primal_blocks| SdpCertificate {
            primal_blocks,
            objective: 0.0,
            dual_objective: 0.0,
            dual_gap: 0.0,
            witness: None,
            iterations: 0,
        };
        if self.k == d {
            return Some(certificate(vec![(self.blocks[0].clone(), self.rho.matrix().clone())]));
        }
        let diagonal = (0..d).all(|r| (0..d).all(|c| r == c || self.rho.get(r, c).norm() == 0.0));
        if !diagonal {
            return None;
        }
        let mut assigned = vec![false; d];
        let mut primal = Vec::new();
        for support in &self.blocks {
            let mut block = DMatrix::zeros(self.k, self.k);
            let mut used = false;
            for (a, &i) in support.indices().iter().enumerate() {
                if !assigned[i] {
                    assigned[i] = true;
                    block[(a, a)] = self.rho.get(i, i);
                    used = true;
                }
            }
            if used {
                primal.push((support.clone(), block));
            }
        }
        Some(certificate(primal))
    }

    pub fn solve(&self, opts: &SolverOptions) -> Result<(f64, SdpCertificate)> {
        if let Some(cert) = self.trivial_certificate() {
            return Ok((0.0, cert));
        }
        let d = self.rho.dim();
        let k = self.k;
        let problem = self.to_block_sdp();
        let sol = sdp::solve(&problem, opts)?;

        let primal_blocks: Vec<(SupportIndexSet, DMatrix<Complex64>)> = self
            .blocks
            .iter()
            .enumerate()
            .map(|(s, support)| {
                let x = &sol.x[s + 1];
                let block = DMatrix::from_fn(k, k, |a, b| {
                    let re = x[(a, b)] + x[(k + a, k + b)];
                    let im = x[(k + a, b)] - x[(a, k + b)];
                    Complex64::new(re, im)
                });
                (support.clone(), (&block + block.adjoint()) * Complex64::new(0.5, 0.0))
            })
            .collect();

        let mut witness = DMatrix::zeros(d, d);
        for a in 0..d {
            witness[(a, a)] = Complex64::new(sol.y[a], 0.0);
            for b in a + 1..d {
                let re = sol.y[d + pair_index(d, a, b)];
                let im = sol.y[d + d * (d - 1) / 2 + pair_index(d, a, b)];
                // y_re (|a><b| + |b><a|) + y_im (i|a><b| - i|b><a|)
                witness[(a, b)] = Complex64::new(re, im);
                witness[(b, a)] = Complex64::new(re, -im);
            }
        }

        let trace_sum: f64 = primal_blocks.iter().map(|(_, b)| b.trace().re).sum();
        let objective = trace_sum - 1.0;
        let dual_objective = sol.dual_objective - 1.0;
        let cert = SdpCertificate {
            primal_blocks,
            objective,
            dual_objective,
            dual_gap: (objective - dual_objective).abs(),
            witness: Some(witness),
            iterations: sol.iterations,
        };
        Ok((objective.max(0.0), cert))
    }
}

/// `R_{C_k}(ρ)` with its certificate, using the default solver options.
pub fn robustness(rho: &DensityMatrix, k: usize) -> Result<(f64, SdpCertificate)> {
    SdpProblem::new(rho, k)?.solve(&SolverOptions::default())
}

/// Robustness at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessPoint {
    pub p: f64,
    pub value: f64,
    pub dual_gap: f64,
}

/// `R_{C_k}` of the decoded protocol output for every noise strength.
pub fn robustness_curve(
    family: &ProbeFamily,
    k: usize,
    p_grid: &[f64],
    exec: Execution,
) -> Result<Vec<RobustnessPoint>> {
    exec.try_map(p_grid, |&p| {
        let rho = family.state_at(p)?;
        let (value, cert) = robustness(&rho, k)?;
        Ok(RobustnessPoint {
            p,
            value,
            dual_gap: cert.dual_gap,
        })
    })
}

/// `Σ_{i≠j} |ρ_ij|`, the l1 coherence.
pub fn l1_coherence(rho: &DensityMatrix) -> f64 {
    let d = rho.dim();
    let mut total = 0.0;
    for r in 0..d {
        for c in 0..d {
            if r != c {
                total += rho.get(r, c).norm();
            }
        }
    }
    total
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Embeds a `k × k` block on `support` into a full operator.
pub fn embed_block(dim: usize, support: &SupportIndexSet, block: &DMatrix<Complex64>) -> Result<Operator> {
    let mut out = DMatrix::zeros(dim, dim);
    let idx = support.indices();
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            out[(i, j)] = block[(a, b)];
        }
    }
    Operator::from_matrix(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{apply_mask, ghz, EncodingMask};
    use approx::assert_abs_diff_eq;

    #[test]
    fn rank_examples() {
        assert_eq!(coherence_rank(&PureState::basis(3, 5).unwrap(), RANK_TOLERANCE), 1);
        assert_eq!(coherence_rank(&ghz(4).unwrap(), RANK_TOLERANCE), 2);
        let enc = apply_mask(&ghz(4).unwrap(), &EncodingMask::all_hadamard(4)).unwrap();
        assert_eq!(coherence_rank(&enc, RANK_TOLERANCE), 8);
    }

    #[test]
    fn subsets_are_enumerated_lexicographically() {
        let all = SupportIndexSet::all(5, 3);
        assert_eq!(all.len(), 10);
        assert_eq!(all[0].indices(), &[0, 1, 2]);
        assert_eq!(all[9].indices(), &[2, 3, 4]);
        assert_eq!(SupportIndexSet::all(16, 3).len(), 560);
        assert!(SupportIndexSet::new(4, &[1, 1]).is_err());
        assert!(SupportIndexSet::new(4, &[4]).is_err());
    }

    #[test]
    fn diagonal_states_exit_early_with_zero() {
        let rho = ProbeFamily::ghz(3).unwrap().state_at(1.0).unwrap();
        for k in 1..=3 {
            let (value, cert) = robustness(&rho, k).unwrap();
            assert_eq!(value, 0.0);
            assert_eq!(cert.iterations, 0);
            let total = cert.total(8);
            for i in 0..8 {
                assert_eq!(total[(i, i)], rho.get(i, i));
            }
        }
        let basis = PureState::basis(2, 2).unwrap().density_matrix();
        assert_eq!(robustness(&basis, 1).unwrap().0, 0.0);
    }

    #[test]
    fn full_level_is_free() {
        let rho = ghz(2).unwrap().density_matrix();
        assert_eq!(robustness(&rho, 4).unwrap().0, 0.0);
        assert!(robustness(&rho, 5).is_err());
        assert!(robustness(&rho, 0).is_err());
    }

    #[test]
    fn plus_state_has_unit_robustness() {
        let rho = PureState::plus_product(1).density_matrix();
        let (value, cert) = robustness(&rho, 1).unwrap();
        assert_abs_diff_eq!(value, 1.0, epsilon = 1e-7);
        assert!(cert.dual_gap <= 1e-6);
    }

    #[test]
    fn ghz4_level_one_matches_l1_norm() {
        let rho = ghz(4).unwrap().density_matrix();
        let (value, _) = robustness(&rho, 1).unwrap();
        assert_abs_diff_eq!(value, l1_coherence(&rho), epsilon = 1e-6);
    }

    #[test]
    fn witness_block_bounds_hold() {
        let rho = ProbeFamily::cluster(3).unwrap().state_at(0.3).unwrap();
        let (_, cert) = robustness(&rho, 2).unwrap();
        let w = cert.witness.unwrap();
        let lower = (rho.matrix() * &w).trace().re - 1.0;
        assert_abs_diff_eq!(lower, cert.dual_objective, epsilon = 1e-8);
        for support in SupportIndexSet::all(8, 2) {
            let idx = support.indices();
            let sub = DMatrix::from_fn(2, 2, |a, b| w[(idx[a], idx[b])]);
            let top = Operator::from_matrix(sub).unwrap().hermitian_eig().unwrap().eigenvalues[1];
            assert!(top <= 1.0 + 1e-7, "witness block eigenvalue {top}");
        }
    }
}
