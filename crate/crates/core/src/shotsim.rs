//! Finite-statistics simulation: Born probabilities, Poisson counts and
//! Monte-Carlo percentile intervals.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`). A run seed selects the key
//! and every task draws from its own stream: stream 0 samples the observed
//! counts and stream `r + 1` drives resample `r`. Results are therefore
//! independent of thread count and scheduling.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::operator::{DensityMatrix, Operator};
use crate::{Complex64, Error, Result};

/// Tolerance on `Σ Π_i = 1` and `Σ p_i = 1`.
pub const COMPLETENESS_TOLERANCE: f64 = 1e-10;

/// Resample count used when none is specified.
pub const DEFAULT_RESAMPLES: usize = 10_000;

/// Fewest resamples accepted for a 3σ interval.
pub const MIN_RESAMPLES_3SIGMA: usize = 1000;

/// `p_i = Tr[ρ Π_i]` for a complete set of projectors.
pub fn born_probabilities(rho: &DensityMatrix, projectors: &[Operator]) -> Result<Vec<f64>> {
    let d = rho.dim();
    let mut sum = DMatrix::<Complex64>::zeros(d, d);
    for proj in projectors {
        if proj.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: proj.dim(),
            });
        }
        sum += proj.matrix();
    }
    let defect = (sum - DMatrix::<Complex64>::identity(d, d))
        .iter()
        .fold(0.0f64, |m, z| m.max(z.norm()));
    if defect > COMPLETENESS_TOLERANCE {
        return Err(Error::IncompleteMeasurement(defect));
    }
    Ok(projectors
        .iter()
        .map(|proj| (rho.matrix() * proj.matrix()).trace().re.max(0.0))
        .collect())
}

/// The `2^n` product projectors onto `⊗|±⟩`, labelled `"++…"`, `"+-…"`, …
/// with qubit 1 leftmost.
pub fn plus_minus_basis(n_qubits: usize) -> Result<Vec<(String, Operator)>> {
    if n_qubits == 0 || n_qubits > 12 {
        return Err(Error::InvalidArgument(format!("unsupported register size {n_qubits}")));
    }
    let d = 1usize << n_qubits;
    let amp = 1.0 / (d as f64).sqrt();
    Ok((0..d)
        .map(|outcome| {
            let label: String = (0..n_qubits)
                .map(|q| if outcome >> (n_qubits - 1 - q) & 1 == 1 { '-' } else { '+' })
                .collect();
            // ⟨x|s⟩ = 2^{-n/2} (-1)^{popcount(x & s)}
            let v: Vec<Complex64> = (0..d)
                .map(|x| {
                    let sign = if (x & outcome).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    Complex64::new(sign * amp, 0.0)
                })
                .collect();
            let col = DMatrix::from_column_slice(d, 1, &v);
            let proj = &col * col.adjoint();
            (label, Operator::from_matrix(proj).expect("projector is Hermitian"))
        })
        .collect())
}

/// Observed counts together with the rates they were drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub labels: Vec<String>,
    pub probabilities: Vec<f64>,
    /// Expected counts `ν p_i`.
    pub rates: Vec<f64>,
    pub counts: Vec<u64>,
    pub shots: u64,
    pub seed: u64,
}

impl CountRecord {
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.counts.len() {
            return Err(Error::DimensionMismatch {
                expected: self.counts.len(),
                actual: labels.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn poisson_draw(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("positive finite mean");
    dist.sample(rng) as u64
}

fn check_probabilities(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidArgument("empty probability vector".into()));
    }
    if probs.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite);
    }
    if let Some(&neg) = probs.iter().find(|&&p| p < 0.0) {
        return Err(Error::InvalidArgument(format!("negative probability {neg}")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > COMPLETENESS_TOLERANCE {
        return Err(Error::IncompleteMeasurement((total - 1.0).abs()));
    }
    Ok(())
}

/// Independent Poisson counts with means `ν p_i`.
pub fn sample_counts(probs: &[f64], nu: u64, seed: u64) -> Result<CountRecord> {
    check_probabilities(probs)?;
    let mut rng = stream_rng(seed, 0);
    let rates: Vec<f64> = probs.iter().map(|p| p * nu as f64).collect();
    let counts = rates.iter().map(|&r| poisson_draw(&mut rng, r)).collect();
    Ok(CountRecord {
        labels: (0..probs.len()).map(|i| i.to_string()).collect(),
        probabilities: probs.to_vec(),
        rates,
        counts,
        shots: nu,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConfidenceLevel {
    OneSigma,
    TwoSigma,
    ThreeSigma,
}

impl ConfidenceLevel {
    /// Lower and upper percentiles (in percent) of the Gaussian `kσ` band.
    pub fn percentiles(self) -> (f64, f64) {
        match self {
            Self::OneSigma => (15.865, 84.135),
            Self::TwoSigma => (2.275, 97.725),
            Self::ThreeSigma => (0.135, 99.865),
        }
    }

    pub fn sigmas(self) -> u32 {
        match self {
            Self::OneSigma => 1,
            Self::TwoSigma => 2,
            Self::ThreeSigma => 3,
        }
    }

    pub fn from_sigmas(k: u32) -> Result<Self> {
        match k {
            1 => Ok(Self::OneSigma),
            2 => Ok(Self::TwoSigma),
            3 => Ok(Self::ThreeSigma),
            _ => Err(Error::InvalidArgument(format!("unsupported confidence level {k} sigma"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    /// Statistic of the observed counts.
    pub center: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: ConfidenceLevel,
    /// Mean and standard deviation over the resamples.
    pub mean: f64,
    pub std_dev: f64,
    /// Resamples with a finite statistic.
    pub resamples: usize,
}

impl ConfidenceInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Frequency of outcome `index` among all recorded counts.
pub fn normalized_frequency(index: usize) -> impl Fn(&[u64]) -> f64 + Sync + Send {
    move |counts: &[u64]| {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            f64::NAN
        } else {
            counts[index] as f64 / total as f64
        }
    }
}

/// Linear-interpolation percentile of sorted data.
fn percentile(sorted: &[f64], pct: f64) -> f64 {
    let pos = pct / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Percentile interval of `statistic` over counts redrawn as Poisson with
/// the observed counts as means. Resamples where the statistic is not finite
/// are discarded.
pub fn mc_interval<F>(
    statistic: F,
    record: &CountRecord,
    resamples: usize,
    level: ConfidenceLevel,
    seed: u64,
    exec: Execution,
) -> Result<ConfidenceInterval>
where
    F: Fn(&[u64]) -> f64 + Sync + Send,
{
    let minimum = if level == ConfidenceLevel::ThreeSigma { MIN_RESAMPLES_3SIGMA } else { 1 };
    if resamples < minimum {
        return Err(Error::InvalidArgument(format!(
            "{resamples} resamples is too few for a {}σ interval (need {minimum})",
            level.sigmas()
        )));
    }
    let center = statistic(&record.counts);
    let draws = exec.map_indexed(resamples, |r| {
        let mut rng = stream_rng(seed, r as u64 + 1);
        let counts: Vec<u64> = record.counts.iter().map(|&c| poisson_draw(&mut rng, c as f64)).collect();
        statistic(&counts)
    });
    let mut values: Vec<f64> = draws.into_iter().filter(|v| v.is_finite()).collect();
    if values.is_empty() {
        return Err(Error::NonFinite);
    }
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let (lo_pct, hi_pct) = level.percentiles();
    let mut lower = percentile(&values, lo_pct);
    let mut upper = percentile(&values, hi_pct);
    if center.is_finite() {
        lower = lower.min(center);
        upper = upper.max(center);
    }
    Ok(ConfidenceInterval {
        center,
        lower,
        upper,
        level,
        mean,
        std_dev: var.sqrt(),
        resamples: values.len(),
    })
}
