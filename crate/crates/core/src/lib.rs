//! Solve `(A + U C V) x = b` for `⟨z|x⟩` and `⟨x|O|x⟩` through the Woodbury
//! identity, with every inner product estimated by a simulated Hadamard or
//! swap test.
//!
//! * [`linalg`]: dense complex matrices, LU, singular values, condition numbers.
//! * [`circuits`]: gate-level circuit descriptions and test-circuit builders.
//! * [`simulator`]: exact and shot-sampled execution with depolarizing and readout noise.
//! * [`estimator`]: inner-product estimation with readout and zero-noise mitigation.
//! * [`solver`]: the Woodbury assembly for rank one, rank k and unitary `A`.
//! * [`oracle`]: dense reference solutions for small registers.
//! * [`experiment`]: scaling sweeps and randomized checks.

pub mod circuits;
pub mod estimator;
pub mod experiment;
pub mod linalg;
pub mod oracle;
pub mod rng;
pub mod simulator;
pub mod solver;

pub use circuits::{CircuitSpec, Gate, GateKind, Unitary2};
pub use estimator::{
    CircuitEstimator, EstimatorConfig, EvaluationMode, InnerProductEstimate, Method,
    MitigationConfig, MitigationMode, OverlapEstimator, OverlapTask,
};
pub use linalg::{ComplexScalar, DenseMatrix, DenseVector};
pub use simulator::{Backend, ConfusionMatrix, NoiseModel};
pub use solver::{APart, HermitianLcu, LowRankFactors, SolveError, SolveReport, WoodburyProblem};
