use num_complex::Complex64;

use super::{Pauli, SimError, TrajectoryState, MAX_STATEVECTOR_QUBITS};
use crate::circuits::{CircuitSpec, Gate, Unitary2};

/// Dense `2^n` amplitude vector; qubit `q` is bit `q` of the index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    qubit_count: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `qubit_count` qubits.
    pub fn zero(qubit_count: usize) -> Result<Self, SimError> {
        Self::basis(qubit_count, 0)
    }

    pub fn basis(qubit_count: usize, index: usize) -> Result<Self, SimError> {
        if qubit_count > MAX_STATEVECTOR_QUBITS {
            return Err(SimError::TooManyQubits(qubit_count));
        }
        let dim = 1usize << qubit_count;
        if index >= dim {
            return Err(SimError::SizeMismatch(format!(
                "basis index {index} on {qubit_count} qubits"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self {
            qubit_count,
            amplitudes,
        })
    }

    /// Wraps amplitudes whose length is a power of two and whose norm is 1 to 1e-10.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self, SimError> {
        let dim = amplitudes.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(SimError::SizeMismatch(format!("{dim} amplitudes")));
        }
        let qubit_count = dim.trailing_zeros() as usize;
        if qubit_count > MAX_STATEVECTOR_QUBITS {
            return Err(SimError::TooManyQubits(qubit_count));
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(SimError::NotNormalized(norm));
        }
        Ok(Self {
            qubit_count,
            amplitudes,
        })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Probability that qubit `q` reads 0.
    pub fn prob_zero(&self, q: usize) -> f64 {
        let mask = 1usize << q;
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == 0)
            .map(|(_, z)| z.norm_sqr())
            .sum()
    }

    fn apply_controlled(&mut self, controls: &[usize], target: usize, u: &Unitary2) {
        let m = u.matrix();
        let cmask = controls.iter().fold(0usize, |acc, &c| acc | (1 << c));
        let stride = 1usize << target;
        let amps = &mut self.amplitudes;
        let dim = amps.len();
        let mut base = 0;
        while base < dim {
            for i in base..base + stride {
                if i & cmask != cmask {
                    continue;
                }
                let j = i | stride;
                let (a, b) = (amps[i], amps[j]);
                amps[i] = m[0][0] * a + m[0][1] * b;
                amps[j] = m[1][0] * a + m[1][1] * b;
            }
            base += 2 * stride;
        }
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<(), SimError> {
        if let Some(&q) = gate.qubits().iter().find(|&&q| q >= self.qubit_count) {
            return Err(SimError::SizeMismatch(format!(
                "gate {gate} touches qubit {q} of a {}-qubit state",
                self.qubit_count
            )));
        }
        self.apply_controlled(gate.controls(), gate.target(), &gate.target_unitary());
        Ok(())
    }
}

impl TrajectoryState for StateVector {
    fn apply_gate(&mut self, gate: &Gate) -> Result<(), SimError> {
        StateVector::apply_gate(self, gate)
    }

    fn apply_pauli(&mut self, qubit: usize, pauli: Pauli) {
        if let Some(u) = pauli.unitary() {
            self.apply_controlled(&[], qubit, &u);
        }
    }

    fn ancilla_p0(&self) -> f64 {
        self.prob_zero(0)
    }
}

/// Runs `c` on `s`.
pub fn apply(c: &CircuitSpec, s: &StateVector) -> Result<StateVector, SimError> {
    if c.qubit_count() != s.qubit_count {
        return Err(SimError::SizeMismatch(format!(
            "{}-qubit circuit on a {}-qubit state",
            c.qubit_count(),
            s.qubit_count
        )));
    }
    let mut out = s.clone();
    for g in c.gates() {
        out.apply_gate(g)?;
    }
    Ok(out)
}

/// `c|0…0⟩`.
pub fn prepare(c: &CircuitSpec) -> Result<StateVector, SimError> {
    apply(c, &StateVector::zero(c.qubit_count())?)
}
