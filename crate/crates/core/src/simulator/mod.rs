//! Seedable circuit simulation with exact and finite-shot modes.
//!
//! Only the ancilla (qubit 0) is ever measured. Gate noise is simulated by
//! Pauli trajectories: each shot draws an error pattern, the ancilla
//! probability for that pattern is computed exactly (and memoized), and the
//! readout channel is applied before the outcome is drawn.

mod noise;
mod product;
mod statevector;

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rand_distr::{Binomial, Distribution, Geometric};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuits::{CircuitSpec, Gate, Unitary2};
use crate::rng::stream_rng;

pub use noise::{ConfusionMatrix, NoiseModel};
pub use product::{is_product_eligible, BranchProductState};
pub use statevector::{apply, prepare, StateVector};

/// Largest statevector the dense simulator will allocate.
pub const MAX_STATEVECTOR_QUBITS: usize = 26;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("{0} qubits exceeds the statevector cap of {MAX_STATEVECTOR_QUBITS}")]
    TooManyQubits(usize),
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("state norm {0} differs from 1")]
    NotNormalized(f64),
    #[error("circuit is not eligible for the product-state path: {0}")]
    NotProductEligible(String),
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error("shot count must be at least 1")]
    NoShots,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_code(code: u32) -> Self {
        match code & 3 {
            0 => Pauli::I,
            1 => Pauli::X,
            2 => Pauli::Y,
            _ => Pauli::Z,
        }
    }

    pub fn unitary(self) -> Option<Unitary2> {
        match self {
            Pauli::I => None,
            Pauli::X => Some(Unitary2::pauli_x()),
            Pauli::Y => Some(Unitary2::pauli_y()),
            Pauli::Z => Some(Unitary2::pauli_z()),
        }
    }
}

/// A simulation state that can follow a single noisy trajectory.
pub trait TrajectoryState {
    fn apply_gate(&mut self, gate: &Gate) -> Result<(), SimError>;
    fn apply_pauli(&mut self, qubit: usize, pauli: Pauli);
    /// Probability that the ancilla (qubit 0) reads 0.
    fn ancilla_p0(&self) -> f64;
}

/// Simulation engine selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Product-state path when the circuit allows it, statevector otherwise.
    #[default]
    Auto,
    Statevector,
    Product,
}

impl Backend {
    fn resolve(self, c: &CircuitSpec) -> Result<Backend, SimError> {
        match self {
            Backend::Auto if is_product_eligible(c) => Ok(Backend::Product),
            Backend::Auto => Ok(Backend::Statevector),
            Backend::Product if !is_product_eligible(c) => Err(SimError::NotProductEligible(
                "register qubits interact".into(),
            )),
            b => Ok(b),
        }
    }
}

/// One inserted error: (gate index, Pauli string code over the gate's qubits,
/// two bits per qubit in gate order).
type ErrorInsertion = (u32, u32);

fn run_trajectory<S: TrajectoryState>(
    mut state: S,
    c: &CircuitSpec,
    errors: &[ErrorInsertion],
) -> Result<f64, SimError> {
    let mut pending = errors.iter().peekable();
    for (gi, g) in c.gates().iter().enumerate() {
        state.apply_gate(g)?;
        while let Some(&&(idx, code)) = pending.peek() {
            if idx as usize != gi {
                break;
            }
            for (slot, &q) in g.qubits().iter().enumerate() {
                state.apply_pauli(q, Pauli::from_code(code >> (2 * slot)));
            }
            pending.next();
        }
    }
    Ok(state.ancilla_p0())
}

fn ancilla_p0_with_errors(
    c: &CircuitSpec,
    errors: &[ErrorInsertion],
    backend: Backend,
) -> Result<f64, SimError> {
    match backend.resolve(c)? {
        Backend::Product => run_trajectory(BranchProductState::zero(c.qubit_count()), c, errors),
        _ => run_trajectory(StateVector::zero(c.qubit_count())?, c, errors),
    }
}

/// Noiseless `P(0) - P(1)` of the ancilla, computed from exact amplitudes.
pub fn exact_ancilla_statistic(c: &CircuitSpec) -> Result<f64, SimError> {
    exact_ancilla_statistic_with(c, Backend::Auto)
}

pub fn exact_ancilla_statistic_with(c: &CircuitSpec, backend: Backend) -> Result<f64, SimError> {
    if c.qubit_count() == 0 {
        return Err(SimError::SizeMismatch("circuit has no ancilla".into()));
    }
    let p0 = ancilla_p0_with_errors(c, &[], backend)?;
    Ok(2.0 * p0 - 1.0)
}

/// Ancilla outcome counts from a finite number of shots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotResult {
    pub shots: u64,
    pub counts: BTreeMap<String, u64>,
    pub seed: u64,
    pub stream: u64,
}

impl ShotResult {
    pub fn count(&self, outcome: &str) -> u64 {
        self.counts.get(outcome).copied().unwrap_or(0)
    }

    /// Observed `(P(0), P(1))`.
    pub fn frequencies(&self) -> [f64; 2] {
        let n = self.shots as f64;
        [self.count("0") as f64 / n, self.count("1") as f64 / n]
    }
}

/// Samples the ancilla of `c` over `shots` noisy shots on RNG stream 0.
pub fn sample(
    c: &CircuitSpec,
    shots: u64,
    noise: &NoiseModel,
    seed: u64,
) -> Result<ShotResult, SimError> {
    sample_with(c, shots, noise, seed, 0, Backend::Auto)
}

/// [`sample`] with an explicit RNG stream and engine.
pub fn sample_with(
    c: &CircuitSpec,
    shots: u64,
    noise: &NoiseModel,
    seed: u64,
    stream: u64,
    backend: Backend,
) -> Result<ShotResult, SimError> {
    if shots == 0 {
        return Err(SimError::NoShots);
    }
    if c.qubit_count() == 0 {
        return Err(SimError::SizeMismatch("circuit has no ancilla".into()));
    }
    let backend = backend.resolve(c)?;
    let mut rng = stream_rng(seed, stream);
    let clean_p0 = ancilla_p0_with_errors(c, &[], backend)?;
    let readout = noise.readout();

    let zeros = if !noise.has_gate_noise() {
        let p = readout.observed_p0(clean_p0).clamp(0.0, 1.0);
        Binomial::new(shots, p)
            .expect("probability clamped to [0,1]")
            .sample(&mut rng)
    } else {
        let sampler = ErrorSampler::new(c, noise);
        let mut memo: HashMap<Vec<ErrorInsertion>, f64> = HashMap::new();
        let mut pattern = Vec::new();
        let mut zeros = 0u64;
        for _ in 0..shots {
            sampler.draw(&mut rng, &mut pattern);
            let p0 = if pattern.is_empty() {
                clean_p0
            } else if let Some(&p) = memo.get(&pattern) {
                p
            } else {
                let p = ancilla_p0_with_errors(c, &pattern, backend)?;
                memo.insert(pattern.clone(), p);
                p
            };
            if rng.random::<f64>() < readout.observed_p0(p0) {
                zeros += 1;
            }
        }
        zeros
    };

    let mut counts = BTreeMap::new();
    counts.insert("0".to_string(), zeros);
    counts.insert("1".to_string(), shots - zeros);
    Ok(ShotResult {
        shots,
        counts,
        seed,
        stream,
    })
}

/// Draws per-shot depolarizing error patterns by geometric skipping over
/// the gates of each error-rate class.
struct ErrorSampler {
    classes: Vec<(Geometric, Vec<(u32, u32)>)>,
}

impl ErrorSampler {
    fn new(c: &CircuitSpec, noise: &NoiseModel) -> Self {
        let mut by_rate: Vec<(f64, Vec<(u32, u32)>)> = Vec::new();
        for (i, g) in c.gates().iter().enumerate() {
            let p = noise.gate_error_rate(g.arity());
            if p == 0.0 {
                continue;
            }
            let strings = (1u32 << (2 * g.arity())) - 1;
            match by_rate.iter_mut().find(|(q, _)| *q == p) {
                Some((_, list)) => list.push((i as u32, strings)),
                None => by_rate.push((p, vec![(i as u32, strings)])),
            }
        }
        let classes = by_rate
            .into_iter()
            .map(|(p, list)| (Geometric::new(p).expect("rate validated in [0,1]"), list))
            .collect();
        Self { classes }
    }

    fn draw<R: Rng>(&self, rng: &mut R, out: &mut Vec<ErrorInsertion>) {
        out.clear();
        for (geom, gates) in &self.classes {
            let mut idx = geom.sample(rng);
            while (idx as usize) < gates.len() {
                let (gate, strings) = gates[idx as usize];
                out.push((gate, rng.random_range(1..=strings)));
                idx = idx.saturating_add(1).saturating_add(geom.sample(rng));
            }
        }
        if self.classes.len() > 1 {
            out.sort_unstable();
        }
    }
}
