//! Dephasing noise, local-unitary conjugation and the
//! encode → dephase → decode → phase protocol.
//!
//! Dephasing with strength `p` on qubit `k` is
//! `ρ ↦ (1 - p/2) ρ + (p/2) Z_k ρ Z_k`. In the computational basis this
//! scales element `(x, y)` by `(1 - p)` for every qubit on which `x` and
//! `y` differ, which is how it is applied here.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::operator::{qubit_bit, DensityMatrix, Operator, TOLERANCE};
use crate::states::{apply_mask, ghz, graph_state, linear_cluster, phase_factor, EncodingMask, GraphSpec, PureState};
use crate::{Error, Result};

/// Per-qubit dephasing strengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    strengths: Vec<f64>,
}

impl NoiseSpec {
    pub fn uniform(n_qubits: usize, p: f64) -> Result<Self> {
        Self::per_qubit(vec![p; n_qubits])
    }

    pub fn per_qubit(strengths: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = strengths.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::NoiseOutOfRange(bad));
        }
        Ok(Self { strengths })
    }

    pub fn n_qubits(&self) -> usize {
        self.strengths.len()
    }

    pub fn strengths(&self) -> &[f64] {
        &self.strengths
    }

    /// Damping factor applied to element `(x, y)`.
    fn factor(&self, diff: usize) -> f64 {
        let n = self.strengths.len();
        self.strengths
            .iter()
            .enumerate()
            .filter(|(q, _)| diff & qubit_bit(n, *q) != 0)
            .map(|(_, p)| 1.0 - p)
            .product()
    }
}

/// Applies independent dephasing to every qubit.
pub fn dephase(rho: &DensityMatrix, spec: &NoiseSpec) -> Result<DensityMatrix> {
    if spec.n_qubits() != rho.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: rho.n_qubits(),
            actual: spec.n_qubits(),
        });
    }
    let n = rho.n_qubits();
    let d = rho.dim();
    // (x ^ y) determines the factor; cache it per difference pattern
    let factors: Vec<f64> = (0..d).map(|diff| spec.factor(diff)).collect();
    let m = DMatrix::from_fn(d, d, |x, y| rho.get(x, y) * factors[x ^ y]);
    Ok(DensityMatrix::new_unchecked(Operator::from_matrix_unchecked(n, m)))
}

/// `u ρ u†` for a unitary `u`.
pub fn conjugate(rho: &DensityMatrix, u: &Operator) -> Result<DensityMatrix> {
    if u.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: u.dim(),
        });
    }
    let err = u.unitarity_error();
    if err > TOLERANCE {
        return Err(Error::NotUnitary(err));
    }
    let m = u.matrix() * rho.matrix() * u.matrix().adjoint();
    Ok(DensityMatrix::new_unchecked(Operator::from_matrix_unchecked(rho.n_qubits(), m)))
}

/// Conjugates by the mask's Hadamards one qubit at a time, O(4^N) per qubit.
pub fn conjugate_mask(rho: &DensityMatrix, mask: &EncodingMask) -> Result<DensityMatrix> {
    if mask.len() != rho.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: rho.n_qubits(),
            actual: mask.len(),
        });
    }
    let n = rho.n_qubits();
    let d = rho.dim();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = rho.matrix().clone();
    for q in mask.hadamard_qubits() {
        let bit = qubit_bit(n, q);
        for x in (0..d).filter(|x| x & bit == 0) {
            for c in 0..d {
                let (a, b) = (m[(x, c)], m[(x | bit, c)]);
                m[(x, c)] = (a + b) * h;
                m[(x | bit, c)] = (a - b) * h;
            }
        }
        for y in (0..d).filter(|y| y & bit == 0) {
            for r in 0..d {
                let (a, b) = (m[(r, y)], m[(r, y | bit)]);
                m[(r, y)] = (a + b) * h;
                m[(r, y | bit)] = (a - b) * h;
            }
        }
    }
    Ok(DensityMatrix::new_unchecked(Operator::from_matrix_unchecked(n, m)))
}

/// Imprints `U_φ^{⊗N}`, which is diagonal: element `(x, y)` picks up
/// `exp(iφ (|x| - |y|))` with `|x|` the Hamming weight.
pub fn imprint_phase(rho: &DensityMatrix, phi: f64) -> DensityMatrix {
    let n = rho.n_qubits();
    let d = rho.dim();
    let phases: Vec<Complex64> = (0..d).map(|x| phase_factor(phi, n, x)).collect();
    let m = DMatrix::from_fn(d, d, |x, y| rho.get(x, y) * phases[x] * phases[y].conj());
    DensityMatrix::new_unchecked(Operator::from_matrix_unchecked(n, m))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stage {
    Encode(EncodingMask),
    Dephase(NoiseSpec),
    Decode(EncodingMask),
    Phase(f64),
}

/// Ordered list of stages applied left to right.
#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    stages: Vec<Stage>,
}

impl Pipeline {
    /// Checks that every decode undoes the most recent open encode.
    pub fn new(stages: Vec<Stage>) -> Result<Self> {
        let mut open: Vec<&EncodingMask> = Vec::new();
        for stage in &stages {
            match stage {
                Stage::Encode(m) => open.push(m),
                Stage::Decode(m) => match open.pop() {
                    Some(enc) if enc == m => {}
                    Some(enc) => {
                        return Err(Error::InvalidPipeline(format!(
                            "decode mask {m} does not match encode mask {enc}"
                        )))
                    }
                    None => return Err(Error::InvalidPipeline(format!("decode {m} without encode"))),
                },
                Stage::Dephase(_) | Stage::Phase(_) => {}
            }
        }
        Ok(Self { stages })
    }

    /// encode → dephase → decode → phase. An identity mask drops the
    /// encode/decode pair.
    pub fn canonical(mask: Option<&EncodingMask>, noise: NoiseSpec, phi: Option<f64>) -> Self {
        let mut stages = Vec::with_capacity(4);
        let mask = mask.filter(|m| !m.is_identity());
        if let Some(m) = mask {
            stages.push(Stage::Encode(m.clone()));
        }
        stages.push(Stage::Dephase(noise));
        if let Some(m) = mask {
            stages.push(Stage::Decode(m.clone()));
        }
        if let Some(phi) = phi {
            stages.push(Stage::Phase(phi));
        }
        Self { stages }
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }
}

/// Runs `pipeline` on the pure input state.
pub fn run_pipeline(state: &PureState, pipeline: &Pipeline) -> Result<DensityMatrix> {
    run_pipeline_on(&state.density_matrix(), pipeline)
}

/// Runs `pipeline` on a mixed input state.
pub fn run_pipeline_on(rho: &DensityMatrix, pipeline: &Pipeline) -> Result<DensityMatrix> {
    pipeline.stages.iter().try_fold(rho.clone(), |rho, stage| match stage {
        Stage::Encode(m) | Stage::Decode(m) => conjugate_mask(&rho, m),
        Stage::Dephase(spec) => dephase(&rho, spec),
        Stage::Phase(phi) => Ok(imprint_phase(&rho, *phi)),
    })
}

/// A probe state together with its optional encoding; evaluates the
/// canonical protocol at a given noise strength.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeFamily {
    name: String,
    state: PureState,
    mask: Option<EncodingMask>,
}

impl ProbeFamily {
    pub fn new(name: impl Into<String>, state: PureState, mask: Option<EncodingMask>) -> Result<Self> {
        if let Some(m) = &mask {
            if m.len() != state.n_qubits() {
                return Err(Error::DimensionMismatch {
                    expected: state.n_qubits(),
                    actual: m.len(),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            state,
            mask: mask.filter(|m| !m.is_identity()),
        })
    }

    pub fn ghz(n_qubits: usize) -> Result<Self> {
        Self::new("ghz", ghz(n_qubits)?, None)
    }

    pub fn ghz_encoded(n_qubits: usize) -> Result<Self> {
        Self::new("ghz_encoded", ghz(n_qubits)?, Some(EncodingMask::all_hadamard(n_qubits)))
    }

    pub fn cluster(n_qubits: usize) -> Result<Self> {
        Self::new("cluster", linear_cluster(n_qubits)?, None)
    }

    pub fn cluster_encoded(n_qubits: usize) -> Result<Self> {
        Self::new(
            "cluster_encoded",
            linear_cluster(n_qubits)?,
            Some(EncodingMask::chain_ends(n_qubits)),
        )
    }

    pub fn product(n_qubits: usize) -> Result<Self> {
        Self::new("product", PureState::plus_product(n_qubits), None)
    }

    pub fn graph(graph: &GraphSpec, mask: Option<EncodingMask>) -> Result<Self> {
        Self::new("graph", graph_state(graph), mask)
    }

    /// Same probe with a different (or no) encoding.
    pub fn with_mask(&self, mask: Option<EncodingMask>) -> Result<Self> {
        Self::new(self.name.clone(), self.state.clone(), mask)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn state(&self) -> &PureState {
        &self.state
    }

    pub fn mask(&self) -> Option<&EncodingMask> {
        self.mask.as_ref()
    }

    pub fn is_encoded(&self) -> bool {
        self.mask.is_some()
    }

    pub fn n_qubits(&self) -> usize {
        self.state.n_qubits()
    }

    pub fn pipeline(&self, p: f64, phi: Option<f64>) -> Result<Pipeline> {
        Ok(Pipeline::canonical(
            self.mask.as_ref(),
            NoiseSpec::uniform(self.n_qubits(), p)?,
            phi,
        ))
    }

    /// Decoded output state at noise strength `p`.
    pub fn state_at(&self, p: f64) -> Result<DensityMatrix> {
        run_pipeline(&self.state, &self.pipeline(p, None)?)
    }

    /// Encoded and dephased, before decoding.
    pub fn pre_decode_state_at(&self, p: f64) -> Result<DensityMatrix> {
        let noise = NoiseSpec::uniform(self.n_qubits(), p)?;
        match &self.mask {
            Some(m) => dephase(&apply_mask(&self.state, m)?.density_matrix(), &noise),
            None => dephase(&self.state.density_matrix(), &noise),
        }
    }
}

impl fmt::Display for ProbeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.mask {
            Some(m) => write!(f, "{}[{}]", self.name, m),
            None => f.write_str(&self.name),
        }
    }
}
