//! Ancilla-branch product-state simulation.
//!
//! Handles circuits in which the register qubits never interact with each
//! other: every gate is either single-qubit or a single-control gate whose
//! control is the ancilla (qubit 0). The joint state then stays a short sum
//! `Σ_k |a_k⟩ ⊗ |φ_k⟩` of ancilla vectors times register product states, and
//! every operation costs O(terms · n) instead of O(2^n).

use num_complex::Complex64;

use super::{Pauli, SimError, TrajectoryState};
use crate::circuits::{CircuitSpec, Gate, Unitary2};

/// Upper bound on the number of branch terms before giving up.
const MAX_TERMS: usize = 64;

#[derive(Debug, Clone)]
struct Term {
    ancilla: [Complex64; 2],
    register: Vec<[Complex64; 2]>,
}

/// State of an ancilla-controlled product circuit.
#[derive(Debug, Clone)]
pub struct BranchProductState {
    terms: Vec<Term>,
}

/// Whether `c` can be run by [`BranchProductState`].
pub fn is_product_eligible(c: &CircuitSpec) -> bool {
    c.qubit_count() >= 1
        && c.gates().iter().all(|g| {
            g.arity() == 1 || (g.arity() == 2 && g.controls() == [0] && g.target() != 0)
        })
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

impl BranchProductState {
    /// `|0…0⟩` on `qubit_count` qubits (ancilla included).
    pub fn zero(qubit_count: usize) -> Self {
        Self {
            terms: vec![Term {
                ancilla: [ONE, ZERO],
                register: vec![[ONE, ZERO]; qubit_count.saturating_sub(1)],
            }],
        }
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    fn apply_1q(&mut self, qubit: usize, u: &Unitary2) {
        for t in &mut self.terms {
            if qubit == 0 {
                t.ancilla = u.apply(t.ancilla);
            } else {
                t.register[qubit - 1] = u.apply(t.register[qubit - 1]);
            }
        }
    }

    fn apply_ancilla_controlled(&mut self, target: usize, u: &Unitary2) -> Result<(), SimError> {
        let mut split = Vec::new();
        for t in &mut self.terms {
            let [a0, a1] = t.ancilla;
            if a1 == ZERO {
                continue;
            }
            if a0 != ZERO {
                let mut on = t.clone();
                on.ancilla = [ZERO, a1];
                t.ancilla = [a0, ZERO];
                on.register[target - 1] = u.apply(on.register[target - 1]);
                split.push(on);
            } else {
                t.register[target - 1] = u.apply(t.register[target - 1]);
            }
        }
        self.terms.extend(split);
        if self.terms.len() > MAX_TERMS {
            return Err(SimError::NotProductEligible(format!(
                "branch count exceeded {MAX_TERMS}"
            )));
        }
        Ok(())
    }

    /// Unnormalized probabilities of the ancilla reading 0 and 1.
    fn ancilla_weights(&self) -> [f64; 2] {
        let mut w = [0.0; 2];
        for (k, tk) in self.terms.iter().enumerate() {
            for tl in &self.terms[k..] {
                let overlap: Complex64 = tk
                    .register
                    .iter()
                    .zip(&tl.register)
                    .map(|(a, b)| a[0].conj() * b[0] + a[1].conj() * b[1])
                    .product();
                let diag = std::ptr::eq(tk, tl);
                for (bit, wb) in w.iter_mut().enumerate() {
                    let c = tk.ancilla[bit].conj() * tl.ancilla[bit] * overlap;
                    *wb += if diag { c.re } else { 2.0 * c.re };
                }
            }
        }
        w
    }
}

impl TrajectoryState for BranchProductState {
    fn apply_gate(&mut self, gate: &Gate) -> Result<(), SimError> {
        match gate.arity() {
            1 => {
                self.apply_1q(gate.target(), &gate.target_unitary());
                Ok(())
            }
            2 if gate.controls() == [0] && gate.target() != 0 => {
                self.apply_ancilla_controlled(gate.target(), &gate.target_unitary())
            }
            _ => Err(SimError::NotProductEligible(format!("gate {gate}"))),
        }
    }

    fn apply_pauli(&mut self, qubit: usize, pauli: Pauli) {
        if let Some(u) = pauli.unitary() {
            self.apply_1q(qubit, &u);
        }
    }

    fn ancilla_p0(&self) -> f64 {
        let [w0, w1] = self.ancilla_weights();
        let total = w0 + w1;
        (w0 / total).clamp(0.0, 1.0)
    }
}
