//! Primal-dual interior-point solver for small block-diagonal real SDPs.
//!
//! Standard form:
//!
//! ```text
//! primal:  min <C, X>   s.t. <A_i, X> = b_i,  X ⪰ 0
//! dual:    max b·y      s.t. C - Σ y_i A_i = S ⪰ 0
//! ```
//!
//! `X`, `S` and `C` are block diagonal; each `A_i` is a sparse symmetric
//! block-diagonal matrix. Search directions use the HKM scaling with a
//! Mehrotra predictor-corrector step and an infeasible start.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

/// One upper-triangle entry of a sparse symmetric constraint matrix. An
/// off-diagonal entry stands for both `(row, col)` and `(col, row)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct BlockSdp {
    pub block_sizes: Vec<usize>,
    pub cost: Vec<DMatrix<f64>>,
    pub constraints: Vec<Vec<Entry>>,
    pub rhs: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target relative duality gap `|pobj - dobj| / (1 + |pobj| + |dobj|)`.
    pub gap_tolerance: f64,
    /// Target relative primal and dual infeasibility.
    pub feasibility_tolerance: f64,
    /// Gap accepted when the iteration stalls before reaching the target.
    pub acceptable_gap: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gap_tolerance: 1e-10,
            feasibility_tolerance: 1e-11,
            acceptable_gap: 1e-6,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: Vec<DMatrix<f64>>,
    pub s: Vec<DMatrix<f64>>,
    pub y: DVector<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub relative_gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub iterations: usize,
}

/// Constraints touching one block, with block-local entries.
struct BlockTerms {
    constraint: Vec<usize>,
    entries: Vec<Vec<(usize, usize, f64)>>,
}

impl BlockSdp {
    fn validate(&self) -> Result<()> {
        let nb = self.block_sizes.len();
        if self.cost.len() != nb {
            return Err(Error::InvalidArgument("cost blocks do not match block sizes".into()));
        }
        for (c, &n) in self.cost.iter().zip(&self.block_sizes) {
            if c.nrows() != n || c.ncols() != n {
                return Err(Error::InvalidArgument("cost block has wrong shape".into()));
            }
        }
        if self.constraints.len() != self.rhs.len() {
            return Err(Error::InvalidArgument("constraint count does not match rhs".into()));
        }
        for e in self.constraints.iter().flatten() {
            if e.block >= nb || e.row > e.col || e.col >= self.block_sizes[e.block] {
                return Err(Error::InvalidArgument(format!("malformed constraint entry {e:?}")));
            }
        }
        Ok(())
    }

    fn block_terms(&self) -> Vec<BlockTerms> {
        let mut terms: Vec<BlockTerms> = self
            .block_sizes
            .iter()
            .map(|_| BlockTerms {
                constraint: Vec::new(),
                entries: Vec::new(),
            })
            .collect();
        for (i, entries) in self.constraints.iter().enumerate() {
            for e in entries {
                let t = &mut terms[e.block];
                if t.constraint.last() != Some(&i) {
                    t.constraint.push(i);
                    t.entries.push(Vec::new());
                }
                t.entries.last_mut().unwrap().push((e.row, e.col, e.value));
            }
        }
        terms
    }

    /// `<A_i, X>` for every constraint.
    pub fn apply_constraints(&self, x: &[DMatrix<f64>]) -> DVector<f64> {
        DVector::from_iterator(
            self.constraints.len(),
            self.constraints.iter().map(|entries| {
                entries
                    .iter()
                    .map(|e| {
                        let m = &x[e.block];
                        if e.row == e.col {
                            e.value * m[(e.row, e.col)]
                        } else {
                            e.value * (m[(e.row, e.col)] + m[(e.col, e.row)])
                        }
                    })
                    .sum()
            }),
        )
    }

    /// `Σ y_i A_i` as dense blocks.
    pub fn adjoint(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self.block_sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (i, entries) in self.constraints.iter().enumerate() {
            for e in entries {
                let v = y[i] * e.value;
                out[e.block][(e.row, e.col)] += v;
                if e.row != e.col {
                    out[e.block][(e.col, e.row)] += v;
                }
            }
        }
        out
    }

    pub fn total_dim(&self) -> usize {
        self.block_sizes.iter().sum()
    }
}

fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn frob(a: &[DMatrix<f64>]) -> f64 {
    a.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest `α ≤ cap` keeping `X + α ΔX ⪰ 0`, given `chol(X)`.
fn max_step(chol: &[Cholesky<f64, nalgebra::Dyn>], dx: &[DMatrix<f64>], cap: f64) -> f64 {
    let mut alpha = cap;
    for (c, d) in chol.iter().zip(dx) {
        let l = c.l();
        let linv_d = l.solve_lower_triangular(d).expect("cholesky factor is invertible");
        let m = l
            .solve_lower_triangular(&linv_d.transpose())
            .expect("cholesky factor is invertible");
        let min = SymmetricEigen::new(symmetrize(&m)).eigenvalues.min();
        if min < 0.0 {
            alpha = alpha.min(-1.0 / min);
        }
    }
    alpha
}

fn cholesky_blocks(m: &[DMatrix<f64>]) -> Option<Vec<Cholesky<f64, nalgebra::Dyn>>> {
    m.iter().map(|b| Cholesky::new(b.clone())).collect()
}

/// Solves the SDP. Fails with [`Error::SolverNonConvergence`] when the
/// iteration cap is reached (or the iteration stalls) with a relative gap
/// above `acceptable_gap`.
pub fn solve(problem: &BlockSdp, opts: &SolverOptions) -> Result<SdpSolution> {
    problem.validate()?;
    let terms = problem.block_terms();
    let m = problem.rhs.len();
    let n_total = problem.total_dim() as f64;
    let b = &problem.rhs;
    let c = &problem.cost;
    let b_norm = b.norm();
    let c_norm = frob(c);

    // infeasible start scaled to the data
    let scale_x = 10.0 * (1.0 + b_norm).sqrt().max(1.0);
    let scale_s = 10.0 * (1.0 + c_norm).sqrt().max(1.0);
    let mut x: Vec<DMatrix<f64>> = problem.block_sizes.iter().map(|&n| DMatrix::identity(n, n) * scale_x).collect();
    let mut s: Vec<DMatrix<f64>> = problem.block_sizes.iter().map(|&n| DMatrix::identity(n, n) * scale_s).collect();
    let mut y = DVector::zeros(m);

    let mut last = None;
    for iter in 0..=opts.max_iterations {
        let ax = problem.apply_constraints(&x);
        let rp = b - &ax;
        let aty = problem.adjoint(&y);
        let rd: Vec<DMatrix<f64>> = (0..c.len()).map(|k| &c[k] - &s[k] - &aty[k]).collect();
        let pobj = inner(c, &x);
        let dobj = b.dot(&y);
        let gap = inner(&x, &s);
        let mu = gap / n_total;
        let rel_gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let pinf = rp.norm() / (1.0 + b_norm);
        let dinf = frob(&rd) / (1.0 + c_norm);

        let snapshot = SdpSolution {
            x: x.clone(),
            s: s.clone(),
            y: y.clone(),
            primal_objective: pobj,
            dual_objective: dobj,
            relative_gap: rel_gap,
            primal_infeasibility: pinf,
            dual_infeasibility: dinf,
            iterations: iter,
        };
        if rel_gap <= opts.gap_tolerance && pinf <= opts.feasibility_tolerance && dinf <= opts.feasibility_tolerance {
            return Ok(snapshot);
        }
        last = Some(snapshot);
        if iter == opts.max_iterations {
            break;
        }

        let Some(s_chol) = cholesky_blocks(&s) else { break };
        let Some(x_chol) = cholesky_blocks(&x) else { break };
        let s_inv: Vec<DMatrix<f64>> = s_chol.iter().map(|ch| symmetrize(&ch.inverse())).collect();

        // Schur complement M_ij = <A_i, X A_j S^{-1}>
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for (k, t) in terms.iter().enumerate() {
            let nk = problem.block_sizes[k];
            for (jj, j_entries) in t.entries.iter().enumerate() {
                let mut xa = DMatrix::<f64>::zeros(nk, nk);
                for &(r, col, v) in j_entries {
                    for row in 0..nk {
                        xa[(row, col)] += v * x[k][(row, r)];
                        if r != col {
                            xa[(row, r)] += v * x[k][(row, col)];
                        }
                    }
                }
                let g = xa * &s_inv[k];
                let j = t.constraint[jj];
                for (ii, i_entries) in t.entries.iter().enumerate() {
                    let i = t.constraint[ii];
                    let val: f64 = i_entries
                        .iter()
                        .map(|&(r, col, v)| if r == col { v * g[(r, r)] } else { v * (g[(r, col)] + g[(col, r)]) })
                        .sum();
                    schur[(i, j)] += val;
                }
            }
        }
        let schur = symmetrize(&schur);
        let schur_chol = match Cholesky::new(schur.clone()) {
            Some(ch) => ch,
            None => {
                let reg = 1e-14 * schur.diagonal().amax().max(1.0);
                match Cholesky::new(schur + DMatrix::identity(m, m) * reg) {
                    Some(ch) => ch,
                    None => break,
                }
            }
        };

        // X R_d S^{-1} is shared by predictor and corrector
        let xrd: Vec<DMatrix<f64>> = (0..x.len()).map(|k| &x[k] * &rd[k] * &s_inv[k]).collect();
        let a_xrd = problem.apply_constraints(&xrd);

        // direction for complementarity target K S^{-1} (passed in as `ks`)
        let direction = |ks: &[DMatrix<f64>]| -> (DVector<f64>, Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
            let rhs = &rp - problem.apply_constraints(ks) + &a_xrd;
            let dy = schur_chol.solve(&rhs);
            let atdy = problem.adjoint(&dy);
            let ds: Vec<DMatrix<f64>> = (0..rd.len()).map(|k| &rd[k] - &atdy[k]).collect();
            let dx: Vec<DMatrix<f64>> = (0..x.len())
                .map(|k| symmetrize(&(&ks[k] - &x[k] * &ds[k] * &s_inv[k])))
                .collect();
            (dy, dx, ds)
        };

        // predictor: K = -XS, so K S^{-1} = -X
        let neg_x: Vec<DMatrix<f64>> = x.iter().map(|b| -b).collect();
        let (_, dx_a, ds_a) = direction(&neg_x);
        let ap = max_step(&x_chol, &dx_a, 1.0);
        let ad = max_step(&s_chol, &ds_a, 1.0);
        let x_a: Vec<DMatrix<f64>> = (0..x.len()).map(|k| &x[k] + &dx_a[k] * ap).collect();
        let s_a: Vec<DMatrix<f64>> = (0..s.len()).map(|k| &s[k] + &ds_a[k] * ad).collect();
        let mu_aff = inner(&x_a, &s_a) / n_total;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector: K = σμ I - XS - ΔX_a ΔS_a
        let ks: Vec<DMatrix<f64>> = (0..x.len())
            .map(|k| &s_inv[k] * (sigma * mu) - &x[k] - &dx_a[k] * &ds_a[k] * &s_inv[k])
            .collect();
        let (dy, dx, ds) = direction(&ks);
        let ap = (0.98 * max_step(&x_chol, &dx, f64::INFINITY)).min(1.0);
        let ad = (0.98 * max_step(&s_chol, &ds, f64::INFINITY)).min(1.0);
        if ap < 1e-12 && ad < 1e-12 {
            break;
        }
        for k in 0..x.len() {
            x[k] += &dx[k] * ap;
            s[k] += &ds[k] * ad;
        }
        y += dy * ad;
    }

    match last {
        Some(sol)
            if sol.relative_gap <= opts.acceptable_gap
                && sol.primal_infeasibility <= opts.acceptable_gap
                && sol.dual_infeasibility <= opts.acceptable_gap =>
        {
            Ok(sol)
        }
        Some(sol) => Err(Error::SolverNonConvergence {
            iterations: sol.iterations,
            gap: sol.relative_gap,
        }),
        None => Err(Error::SolverNonConvergence {
            iterations: 0,
            gap: f64::INFINITY,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// max λ_min-style test: min Tr(X) s.t. X_{00} + X_{11} ... is awkward, so
    /// use the classic "min <C, X> s.t. Tr X = 1" whose value is λ_min(C).
    #[test]
    fn minimum_eigenvalue_program() {
        let cm = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        let trace: Vec<Entry> = (0..3).map(|i| Entry { block: 0, row: i, col: i, value: 1.0 }).collect();
        let prob = BlockSdp {
            block_sizes: vec![3],
            cost: vec![cm.clone()],
            constraints: vec![trace],
            rhs: DVector::from_vec(vec![1.0]),
        };
        let sol = solve(&prob, &SolverOptions::default()).unwrap();
        let expected = SymmetricEigen::new(cm).eigenvalues.min();
        assert_abs_diff_eq!(sol.primal_objective, expected, epsilon = 1e-8);
        assert_abs_diff_eq!(sol.dual_objective, expected, epsilon = 1e-8);
    }

    #[test]
    fn linear_program_as_diagonal_blocks() {
        // min x1 + 2 x2 s.t. x1 + x2 = 1, x >= 0  -> 1
        let prob = BlockSdp {
            block_sizes: vec![1, 1],
            cost: vec![DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, 2.0)],
            constraints: vec![vec![
                Entry { block: 0, row: 0, col: 0, value: 1.0 },
                Entry { block: 1, row: 0, col: 0, value: 1.0 },
            ]],
            rhs: DVector::from_vec(vec![1.0]),
        };
        let sol = solve(&prob, &SolverOptions::default()).unwrap();
        assert_abs_diff_eq!(sol.primal_objective, 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(sol.x[0][(0, 0)], 1.0, epsilon = 1e-7);
    }

    #[test]
    fn malformed_problem_is_rejected() {
        let prob = BlockSdp {
            block_sizes: vec![2],
            cost: vec![DMatrix::identity(2, 2)],
            constraints: vec![vec![Entry { block: 0, row: 1, col: 0, value: 1.0 }]],
            rhs: DVector::from_vec(vec![1.0]),
        };
        assert!(matches!(solve(&prob, &SolverOptions::default()), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let cm = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]);
        let trace: Vec<Entry> = (0..2).map(|i| Entry { block: 0, row: i, col: i, value: 1.0 }).collect();
        let prob = BlockSdp {
            block_sizes: vec![2],
            cost: vec![cm],
            constraints: vec![trace],
            rhs: DVector::from_vec(vec![1.0]),
        };
        let opts = SolverOptions {
            max_iterations: 1,
            ..SolverOptions::default()
        };
        assert!(matches!(solve(&prob, &opts), Err(Error::SolverNonConvergence { iterations: 1, .. })));
    }
}
