use serde::{Deserialize, Serialize};

use super::SimError;

/// Column-stochastic readout confusion matrix: entry `[i][j]` is the
/// probability of reading `i` when the true outcome is `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 2]; 2]", into = "[[f64; 2]; 2]")]
pub struct ConfusionMatrix([[f64; 2]; 2]);

impl ConfusionMatrix {
    pub fn new(m: [[f64; 2]; 2]) -> Result<Self, SimError> {
        if m.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(SimError::InvalidNoise(format!("confusion entries out of [0,1]: {m:?}")));
        }
        for (j, (top, bottom)) in m[0].iter().zip(&m[1]).enumerate() {
            let col = top + bottom;
            if (col - 1.0).abs() > 1e-9 {
                return Err(SimError::InvalidNoise(format!(
                    "confusion column {j} sums to {col}"
                )));
            }
        }
        Ok(Self(m))
    }

    pub const fn identity() -> Self {
        Self([[1.0, 0.0], [0.0, 1.0]])
    }

    /// Flip probabilities `P(read 1 | 0)` and `P(read 0 | 1)`.
    pub fn from_flips(p01: f64, p10: f64) -> Result<Self, SimError> {
        Self::new([[1.0 - p01, p10], [p01, 1.0 - p10]])
    }

    pub fn matrix(&self) -> &[[f64; 2]; 2] {
        &self.0
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn is_identity(&self) -> bool {
        self.0 == Self::identity().0
    }

    /// Observed distribution for a true distribution `p`.
    pub fn forward(&self, p: [f64; 2]) -> [f64; 2] {
        let m = &self.0;
        [
            m[0][0] * p[0] + m[0][1] * p[1],
            m[1][0] * p[0] + m[1][1] * p[1],
        ]
    }

    /// Probability of reading 0 when the true `P(0)` is `p0`.
    pub fn observed_p0(&self, p0: f64) -> f64 {
        self.forward([p0, 1.0 - p0])[0]
    }
}

impl Default for ConfusionMatrix {
    fn default() -> Self {
        Self::identity()
    }
}

impl TryFrom<[[f64; 2]; 2]> for ConfusionMatrix {
    type Error = SimError;

    fn try_from(m: [[f64; 2]; 2]) -> Result<Self, SimError> {
        Self::new(m)
    }
}

impl From<ConfusionMatrix> for [[f64; 2]; 2] {
    fn from(c: ConfusionMatrix) -> Self {
        c.0
    }
}

/// Depolarizing rates per gate arity and the ancilla readout channel.
///
/// After every single-qubit gate, with probability `p1`, one of X, Y, Z is
/// applied uniformly at random; after every multi-qubit gate on `m` qubits,
/// with probability `p2`, one of the `4^m - 1` non-identity Pauli strings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NoiseRepr", into = "NoiseRepr")]
pub struct NoiseModel {
    p1: f64,
    p2: f64,
    readout: ConfusionMatrix,
}

#[derive(Serialize, Deserialize)]
struct NoiseRepr {
    #[serde(default)]
    p1: f64,
    #[serde(default)]
    p2: f64,
    #[serde(default)]
    readout: ConfusionMatrix,
}

impl NoiseModel {
    pub fn new(p1: f64, p2: f64, readout: ConfusionMatrix) -> Result<Self, SimError> {
        for (name, p) in [("p1", p1), ("p2", p2)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::InvalidNoise(format!("{name} = {p} outside [0,1]")));
            }
        }
        Ok(Self { p1, p2, readout })
    }

    pub const fn noiseless() -> Self {
        Self {
            p1: 0.0,
            p2: 0.0,
            readout: ConfusionMatrix::identity(),
        }
    }

    pub fn depolarizing(p1: f64, p2: f64) -> Result<Self, SimError> {
        Self::new(p1, p2, ConfusionMatrix::identity())
    }

    pub fn readout_only(readout: ConfusionMatrix) -> Self {
        Self {
            p1: 0.0,
            p2: 0.0,
            readout,
        }
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    pub fn readout(&self) -> &ConfusionMatrix {
        &self.readout
    }

    /// Depolarizing probability for a gate touching `arity` qubits.
    pub fn gate_error_rate(&self, arity: usize) -> f64 {
        if arity <= 1 {
            self.p1
        } else {
            self.p2
        }
    }

    pub fn has_gate_noise(&self) -> bool {
        self.p1 > 0.0 || self.p2 > 0.0
    }

    pub fn is_noiseless(&self) -> bool {
        !self.has_gate_noise() && self.readout.is_identity()
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::noiseless()
    }
}

impl TryFrom<NoiseRepr> for NoiseModel {
    type Error = SimError;

    fn try_from(r: NoiseRepr) -> Result<Self, SimError> {
        Self::new(r.p1, r.p2, r.readout)
    }
}

impl From<NoiseModel> for NoiseRepr {
    fn from(n: NoiseModel) -> Self {
        NoiseRepr {
            p1: n.p1,
            p2: n.p2,
            readout: n.readout,
        }
    }
}
