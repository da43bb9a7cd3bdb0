//! Noisy phase estimation: fringes, error-propagation variance and QFI sweeps.
//!
//! The estimator is the probability `ε(φ)` of the all-`|+⟩` outcome after the
//! canonical protocol with phase `φ` imprinted last.

use serde::{Deserialize, Serialize};

use crate::channels::{imprint_phase, ProbeFamily};
use crate::exec::Execution;
use crate::metrics::{closed_form_suite, phase_qfi};
use crate::operator::DensityMatrix;
use crate::states::{ghz, EncodingMask};
use crate::{Error, Result};

/// Central-difference step for fringe slopes, in radians.
pub const DERIVATIVE_STEP: f64 = 1e-3;

/// Largest register accepted by [`qfi_sweep`].
pub const MAX_SWEEP_QUBITS: usize = 10;

/// Slopes at or below this are treated as a flat fringe.
const FLAT_SLOPE: f64 = 1e-12;

/// `ε(φ)` for a fixed output state.
#[derive(Debug, Clone)]
pub struct FringeModel {
    rho: DensityMatrix,
    analytic: Option<AnalyticFringe>,
}

/// Known closed forms of the GHZ fringe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticFringe {
    /// Bare GHZ on `n` qubits: `(1 + (1-p)^n cos nφ) / 2^n`.
    Bare { n: usize, p: f64 },
    /// Fully dephased, Hadamard-encoded GHZ on four qubits:
    /// `(4 cos 2φ + cos 4φ + 11) / 128`.
    EncodedFullDephasing,
}

impl AnalyticFringe {
    pub fn value(&self, phi: f64) -> f64 {
        match *self {
            Self::Bare { n, p } => {
                let nf = n as f64;
                (1.0 + (1.0 - p).powi(n as i32) * (nf * phi).cos()) / 2f64.powi(n as i32)
            }
            Self::EncodedFullDephasing => ((2.0 * phi).cos() * 4.0 + (4.0 * phi).cos() + 11.0) / 128.0,
        }
    }

    pub fn derivative(&self, phi: f64) -> f64 {
        match *self {
            Self::Bare { n, p } => {
                let nf = n as f64;
                -nf * (1.0 - p).powi(n as i32) * (nf * phi).sin() / 2f64.powi(n as i32)
            }
            Self::EncodedFullDephasing => -(8.0 * (2.0 * phi).sin() + 4.0 * (4.0 * phi).sin()) / 128.0,
        }
    }
}

impl FringeModel {
    pub fn new(rho: DensityMatrix, analytic: Option<AnalyticFringe>) -> Self {
        Self { rho, analytic }
    }

    /// `⟨+…+| ρ_φ |+…+⟩`, the mean of all entries of the phase-imprinted state.
    pub fn value(&self, phi: f64) -> f64 {
        let rho = imprint_phase(&self.rho, phi);
        let d = rho.dim();
        let total: f64 = rho.matrix().iter().map(|z| z.re).sum();
        (total / d as f64).clamp(0.0, 1.0)
    }

    /// Central difference with step [`DERIVATIVE_STEP`].
    pub fn slope(&self, phi: f64) -> f64 {
        let h = DERIVATIVE_STEP;
        (self.value(phi + h) - self.value(phi - h)) / (2.0 * h)
    }

    pub fn analytic(&self) -> Option<AnalyticFringe> {
        self.analytic
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.rho
    }
}

/// Fringe values of one family at one noise strength.
#[derive(Debug, Clone)]
pub struct FringeCurve {
    pub family: String,
    pub encoded: bool,
    pub p: f64,
    pub phi_grid: Vec<f64>,
    pub expectation: Vec<f64>,
    pub model: FringeModel,
}

impl FringeCurve {
    /// Closed-form values on the grid, where a closed form is known.
    pub fn closed_form(&self) -> Option<Vec<f64>> {
        self.model
            .analytic()
            .map(|a| self.phi_grid.iter().map(|&phi| a.value(phi)).collect())
    }

    /// `max - min` over the grid.
    pub fn amplitude(&self) -> f64 {
        let max = self.expectation.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = self.expectation.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }
}

fn analytic_for(family: &ProbeFamily, p: f64) -> Option<AnalyticFringe> {
    let n = family.n_qubits();
    if !family.state().equals_up_to_phase(&ghz(n).ok()?, 1e-12) {
        return None;
    }
    match family.mask() {
        None => Some(AnalyticFringe::Bare { n, p }),
        Some(m) if n == 4 && p == 1.0 && *m == EncodingMask::all_hadamard(4) => {
            Some(AnalyticFringe::EncodedFullDephasing)
        }
        Some(_) => None,
    }
}

/// Evaluates the fringe of `family` at noise `p` over `phi_grid`.
pub fn fringe(family: &ProbeFamily, p: f64, phi_grid: &[f64], exec: Execution) -> Result<FringeCurve> {
    if phi_grid.iter().any(|phi| !phi.is_finite()) {
        return Err(Error::NonFinite);
    }
    let model = FringeModel::new(family.state_at(p)?, analytic_for(family, p));
    let expectation = exec.map(phi_grid, |&phi| model.value(phi));
    Ok(FringeCurve {
        family: family.name().to_string(),
        encoded: family.is_encoded(),
        p,
        phi_grid: phi_grid.to_vec(),
        expectation,
        model,
    })
}

/// Error-propagation phase uncertainty at the steepest grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub phi_star: f64,
    pub expectation: f64,
    pub slope: f64,
    /// `ε(1-ε)/ν / |dε/dφ|²`; infinite for a flat fringe.
    pub var_phi: f64,
    pub shots: u64,
}

/// `Var[φ] = Var[ε] / |dε/dφ|²` with binomial `Var[ε] = ε(1-ε)/ν`, at the
/// grid point of largest slope (earliest one on ties).
pub fn phase_variance(curve: &FringeCurve, nu: u64) -> Result<VarianceReport> {
    if nu == 0 {
        return Err(Error::InvalidArgument("shot count must be positive".into()));
    }
    let mut order: Vec<usize> = (0..curve.phi_grid.len()).collect();
    order.sort_by(|&a, &b| curve.phi_grid[a].total_cmp(&curve.phi_grid[b]));
    let mut best: Option<(f64, f64)> = None;
    for i in order {
        let phi = curve.phi_grid[i];
        if phi < 0.0 {
            continue;
        }
        let slope = curve.model.slope(phi);
        if best.is_none_or(|(_, s)| slope.abs() > s.abs() * (1.0 + 1e-9) + 1e-15) {
            best = Some((phi, slope));
        }
    }
    let (phi_star, slope) =
        best.ok_or_else(|| Error::InvalidArgument("fringe grid has no point with phi >= 0".into()))?;
    let eps = curve.model.value(phi_star);
    let var_phi = if slope.abs() <= FLAT_SLOPE {
        f64::INFINITY
    } else {
        eps * (1.0 - eps) / nu as f64 / (slope * slope)
    };
    Ok(VarianceReport {
        phi_star,
        expectation: eps,
        slope,
        var_phi,
        shots: nu,
    })
}

/// One row of a QFI sweep: a probe with and without its encoding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfiRow {
    pub n: usize,
    pub p: f64,
    pub qfi_bare: f64,
    pub qfi_encoded: f64,
    /// Closed forms, known for GHZ probes with the all-Hadamard encoding.
    pub qfi_bare_closed: Option<f64>,
    pub qfi_encoded_closed: Option<f64>,
    /// Shot-noise limit `N`.
    pub snl: f64,
    /// Heisenberg limit `N²`.
    pub hl: f64,
}

/// QFI for every `(N, p)` pair. `family(n)` supplies the probe; it is
/// evaluated as given and with its encoding removed. A probe without an
/// encoding is paired with its all-Hadamard encoding.
pub fn qfi_sweep<F>(family: F, n_range: &[usize], p_grid: &[f64], exec: Execution) -> Result<Vec<QfiRow>>
where
    F: Fn(usize) -> Result<ProbeFamily> + Sync,
{
    if let Some(&n) = n_range.iter().find(|&&n| !(2..=MAX_SWEEP_QUBITS).contains(&n)) {
        return Err(Error::InvalidArgument(format!(
            "qfi sweep needs 2 <= n <= {MAX_SWEEP_QUBITS}, got {n}"
        )));
    }
    let mut pairs = Vec::with_capacity(n_range.len());
    for &n in n_range {
        let fam = family(n)?;
        let encoded = match fam.mask() {
            Some(_) => fam.clone(),
            None => fam.with_mask(Some(EncodingMask::all_hadamard(fam.n_qubits())))?,
        };
        let bare = fam.with_mask(None)?;
        let closed = bare.state().equals_up_to_phase(&ghz(fam.n_qubits())?, 1e-12)
            && encoded.mask() == Some(&EncodingMask::all_hadamard(fam.n_qubits()));
        pairs.push((bare, encoded, closed));
    }
    let points: Vec<(usize, f64)> = (0..pairs.len())
        .flat_map(|i| p_grid.iter().map(move |&p| (i, p)))
        .collect();
    exec.try_map(&points, |&(i, p)| {
        let (bare, encoded, closed) = &pairs[i];
        let n = bare.n_qubits();
        let cf = if *closed { Some(closed_form_suite(n, p)?) } else { None };
        let nf = n as f64;
        Ok(QfiRow {
            n,
            p,
            qfi_bare: phase_qfi(&bare.state_at(p)?)?,
            qfi_encoded: phase_qfi(&encoded.state_at(p)?)?,
            qfi_bare_closed: cf.as_ref().map(|c| c.bare.qfi),
            qfi_encoded_closed: cf.as_ref().map(|c| c.encoded.qfi),
            snl: nf,
            hl: nf * nf,
        })
    })
}
