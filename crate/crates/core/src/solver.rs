//! Woodbury assembly of `⟨z|x⟩` and `⟨x|O|x⟩` from estimated inner products.
//!
//! For `(A + U C V) x = b` with `U = Σ α_i |u_i⟩⟨i|` and `V = Σ β_j |j⟩⟨v_j|`,
//!
//! ```text
//! ⟨z|x⟩ = ⟨z|A⁻¹|b⟩ − y2ᵀ (C⁻¹ + K)⁻¹ y3
//! y2[i] = α_i ⟨z|A⁻¹|u_i⟩,  y3[j] = β_j ⟨v_j|A⁻¹|b⟩,  K[j][i] = α_i β_j ⟨v_j|A⁻¹|u_i⟩
//! ```
//!
//! with `A⁻¹ = I` or `A⁻¹ = Q†`. Only the `k² + 2k + 1` overlaps are
//! estimated; the `k × k` capacitance inversion is classical.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuits::{inverse, CircuitError, CircuitSpec};
use crate::estimator::{
    zne_extrapolate_complex, EstimateError, InnerProductEstimate, OverlapEstimator, OverlapTask,
    ShotPlan,
};
use crate::linalg::{
    condition_number, inverse as matrix_inverse, ComplexScalar, DenseMatrix, DenseVector,
    LinalgError, LuDecomposition,
};
use crate::simulator::SimError;

/// Largest register on which an observable's Hermiticity is checked by
/// building its matrix.
pub const HERMITIAN_CHECK_MAX_QUBITS: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("rank mismatch: {0}")]
    RankMismatch(String),
    #[error("operation needs {expected}, problem has {found}")]
    WrongCase {
        expected: &'static str,
        found: &'static str,
    },
    #[error("|1 + α₀β₀⟨v₀|u₀⟩| = {modulus:e} is below the resolvable threshold {threshold:e}")]
    NearSingular { modulus: f64, threshold: f64 },
    #[error("estimated capacitance matrix is singular (condition estimate {condition:e})")]
    SingularCapacitance { condition: f64 },
    #[error("observable is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("imaginary residue {residue:e} of ⟨x|O|x⟩ exceeds {threshold:e}")]
    ImaginaryResidue { residue: f64, threshold: f64 },
    #[error("unsupported fold levels {0:?}; expected [0] or [0, 1]")]
    FoldLevels(Vec<usize>),
}

/// The easily inverted part of the system matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum APart {
    Identity,
    /// `A = Q` for the unitary prepared by this circuit.
    Unitary(CircuitSpec),
}

impl APart {
    fn name(&self) -> &'static str {
        match self {
            APart::Identity => "A = I",
            APart::Unitary(_) => "A = Q unitary",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowRankFactors {
    pub alphas: Vec<ComplexScalar>,
    pub u_preparers: Vec<CircuitSpec>,
    pub betas: Vec<ComplexScalar>,
    pub v_preparers: Vec<CircuitSpec>,
    pub c_matrix: DenseMatrix,
}

impl LowRankFactors {
    pub fn rank(&self) -> usize {
        self.alphas.len()
    }
}

/// A full instance of `(A + U C V) x = b` plus the probe state `|z⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "json::ProblemRepr", into = "json::ProblemRepr")]
pub struct WoodburyProblem {
    qubits: usize,
    a_part: APart,
    factors: LowRankFactors,
    b_preparer: CircuitSpec,
    z_preparer: CircuitSpec,
    declared_real: bool,
}

impl WoodburyProblem {
    pub fn new(
        a_part: APart,
        factors: LowRankFactors,
        b_preparer: CircuitSpec,
        z_preparer: CircuitSpec,
        declared_real: bool,
    ) -> Result<Self, SolveError> {
        let qubits = b_preparer.qubit_count();
        if qubits == 0 {
            return Err(SolveError::InvalidProblem("register has no qubits".into()));
        }
        let k = factors.alphas.len();
        if k == 0 {
            return Err(SolveError::RankMismatch("rank must be at least 1".into()));
        }
        if factors.u_preparers.len() != k || factors.betas.len() != k || factors.v_preparers.len() != k
        {
            return Err(SolveError::RankMismatch(format!(
                "{} alphas, {} u preparers, {} betas, {} v preparers",
                k,
                factors.u_preparers.len(),
                factors.betas.len(),
                factors.v_preparers.len()
            )));
        }
        if factors.c_matrix.rows() != k || factors.c_matrix.cols() != k {
            return Err(SolveError::RankMismatch(format!(
                "C is {}x{} for rank {k}",
                factors.c_matrix.rows(),
                factors.c_matrix.cols()
            )));
        }
        LuDecomposition::new(&factors.c_matrix).map_err(|e| match e {
            LinalgError::Singular { condition } => {
                SolveError::Linalg(LinalgError::SingularC { condition })
            }
            other => SolveError::Linalg(other),
        })?;
        let mut circuits: Vec<&CircuitSpec> = vec![&z_preparer];
        circuits.extend(&factors.u_preparers);
        circuits.extend(&factors.v_preparers);
        if let APart::Unitary(q) = &a_part {
            circuits.push(q);
        }
        if let Some(c) = circuits.iter().find(|c| c.qubit_count() != qubits) {
            return Err(SolveError::InvalidProblem(format!(
                "circuit on {} qubits in a {qubits}-qubit problem",
                c.qubit_count()
            )));
        }
        Ok(Self {
            qubits,
            a_part,
            factors,
            b_preparer,
            z_preparer,
            declared_real,
        })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn rank(&self) -> usize {
        self.factors.rank()
    }

    pub fn a_part(&self) -> &APart {
        &self.a_part
    }

    pub fn factors(&self) -> &LowRankFactors {
        &self.factors
    }

    pub fn b_preparer(&self) -> &CircuitSpec {
        &self.b_preparer
    }

    pub fn z_preparer(&self) -> &CircuitSpec {
        &self.z_preparer
    }

    pub fn declared_real(&self) -> bool {
        self.declared_real
    }

    /// Same problem with the overlaps declared real (or not).
    pub fn with_declared_real(mut self, declared_real: bool) -> Self {
        self.declared_real = declared_real;
        self
    }

    /// `α₀ c₀₀ β₀` for rank one.
    fn rank1_coupling(&self) -> Complex64 {
        self.factors.alphas[0] * self.factors.c_matrix[(0, 0)] * self.factors.betas[0]
    }
}

/// `O = Σ γ_i W_i` with unitary `W_i` given as circuits.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianLcu {
    gammas: Vec<ComplexScalar>,
    w_circuits: Vec<CircuitSpec>,
}

impl HermitianLcu {
    /// Validates shapes and, on registers of at most
    /// [`HERMITIAN_CHECK_MAX_QUBITS`] qubits, Hermiticity to 1e-10.
    pub fn new(gammas: Vec<ComplexScalar>, w_circuits: Vec<CircuitSpec>) -> Result<Self, SolveError> {
        if gammas.is_empty() || gammas.len() != w_circuits.len() {
            return Err(SolveError::InvalidProblem(format!(
                "{} coefficients for {} unitaries",
                gammas.len(),
                w_circuits.len()
            )));
        }
        let n = w_circuits[0].qubit_count();
        if w_circuits.iter().any(|w| w.qubit_count() != n) {
            return Err(SolveError::InvalidProblem("LCU terms act on different registers".into()));
        }
        let lcu = Self { gammas, w_circuits };
        if n <= HERMITIAN_CHECK_MAX_QUBITS {
            let m = crate::oracle::lcu_matrix(&lcu)?;
            let dev = m.max_abs_diff(&m.adjoint());
            if dev > 1e-10 {
                return Err(SolveError::NotHermitian(dev));
            }
        }
        Ok(lcu)
    }

    pub fn gammas(&self) -> &[ComplexScalar] {
        &self.gammas
    }

    pub fn w_circuits(&self) -> &[CircuitSpec] {
        &self.w_circuits
    }

    pub fn qubit_count(&self) -> usize {
        self.w_circuits[0].qubit_count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    /// Unnormalized `⟨z|x⟩` (zero-noise extrapolated when two fold levels ran).
    pub overlap: ComplexScalar,
    /// Estimates from the unfolded pass, in task order.
    pub per_inner_product: Vec<InnerProductEstimate>,
    pub capacitance_condition: f64,
    /// `α₀β₀ / (1 + α₀β₀⟨v₀|u₀⟩)`, rank one only.
    pub gamma: Option<ComplexScalar>,
    /// Assembled overlap at each fold level.
    pub fold_level_values: Vec<ComplexScalar>,
    /// First-order propagated standard error of `overlap`.
    pub std_error: f64,
    /// Number of estimator invocations across all fold levels.
    pub estimator_calls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectationReport {
    pub value: f64,
    pub imag_residue: f64,
    pub std_error: f64,
    pub per_inner_product: Vec<InnerProductEstimate>,
    pub fold_level_values: Vec<ComplexScalar>,
    pub estimator_calls: usize,
}

/// Result of assembling one fold level's estimates.
struct Assembly {
    value: Complex64,
    std_error: f64,
    capacitance_condition: f64,
    gamma: Option<Complex64>,
}

struct FoldedRun {
    value: Complex64,
    std_error: f64,
    first: Assembly,
    per_inner_product: Vec<InnerProductEstimate>,
    fold_level_values: Vec<Complex64>,
    estimator_calls: usize,
}

fn stream_id(fold_level: usize, task: usize) -> u64 {
    ((fold_level as u64) << 32) | task as u64
}

fn estimate_all<E: OverlapEstimator + ?Sized>(
    estimator: &E,
    tasks: &[OverlapTask],
    fold_level: usize,
) -> Result<Vec<InnerProductEstimate>, SolveError> {
    tasks
        .par_iter()
        .enumerate()
        .map(|(i, t)| estimator.estimate(t, fold_level, stream_id(fold_level, i)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(SolveError::from)
}

/// Runs the whole estimate-and-assemble pipeline at each fold level the
/// estimator asks for and extrapolates the assembled values to zero noise.
fn run_folded<E, F>(estimator: &E, tasks: &[OverlapTask], assemble: F) -> Result<FoldedRun, SolveError>
where
    E: OverlapEstimator + ?Sized,
    F: Fn(&[InnerProductEstimate]) -> Result<Assembly, SolveError>,
{
    let levels = estimator.fold_levels().to_vec();
    if levels != [0] && levels != [0, 1] {
        return Err(SolveError::FoldLevels(levels));
    }
    let mut assemblies = Vec::with_capacity(levels.len());
    let mut first_estimates = None;
    for &level in &levels {
        let estimates = estimate_all(estimator, tasks, level)?;
        assemblies.push(assemble(&estimates)?);
        first_estimates.get_or_insert(estimates);
    }
    let fold_level_values: Vec<Complex64> = assemblies.iter().map(|a| a.value).collect();
    let (value, std_error) = if let [e1, e3] = assemblies.as_slice() {
        (
            zne_extrapolate_complex(e1.value, e3.value),
            (1.5 * e1.std_error).hypot(0.5 * e3.std_error),
        )
    } else {
        (assemblies[0].value, assemblies[0].std_error)
    };
    Ok(FoldedRun {
        value,
        std_error,
        first: assemblies.swap_remove(0),
        per_inner_product: first_estimates.unwrap_or_default(),
        fold_level_values,
        estimator_calls: tasks.len() * levels.len(),
    })
}

impl FoldedRun {
    fn into_report(self) -> SolveReport {
        SolveReport {
            overlap: self.value,
            per_inner_product: self.per_inner_product,
            capacitance_condition: self.first.capacitance_condition,
            gamma: self.first.gamma,
            fold_level_values: self.fold_level_values,
            std_error: self.std_error,
            estimator_calls: self.estimator_calls,
        }
    }
}

fn near_singular_check(denom: Complex64, denom_se: f64) -> Result<(), SolveError> {
    let threshold = (10.0 * denom_se).max(1e-8);
    if denom.norm() < threshold {
        return Err(SolveError::NearSingular {
            modulus: denom.norm(),
            threshold,
        });
    }
    Ok(())
}

fn require_identity(p: &WoodburyProblem) -> Result<(), SolveError> {
    match p.a_part {
        APart::Identity => Ok(()),
        ref other => Err(SolveError::WrongCase {
            expected: "A = I",
            found: other.name(),
        }),
    }
}

/// `⟨z|x⟩` for rank one and `A = I` from the four overlaps
/// `⟨z|b⟩, ⟨v₀|b⟩, ⟨v₀|u₀⟩, ⟨z|u₀⟩`.
pub fn solve_rank1_overlap<E: OverlapEstimator + ?Sized>(
    p: &WoodburyProblem,
    estimator: &E,
) -> Result<SolveReport, SolveError> {
    solve_rank1_overlap_with_plan(p, estimator, None)
}

/// [`solve_rank1_overlap`] with per-overlap shot counts from a [`ShotPlan`].
pub fn solve_rank1_overlap_with_plan<E: OverlapEstimator + ?Sized>(
    p: &WoodburyProblem,
    estimator: &E,
    plan: Option<&ShotPlan>,
) -> Result<SolveReport, SolveError> {
    require_identity(p)?;
    if p.rank() != 1 {
        return Err(SolveError::RankMismatch(format!(
            "rank-one solver called on rank {}",
            p.rank()
        )));
    }
    let f = &p.factors;
    let (z, b, u0, v0) = (&p.z_preparer, &p.b_preparer, &f.u_preparers[0], &f.v_preparers[0]);
    let real = p.declared_real;
    let tasks = vec![
        OverlapTask::new("z|b", z, b).real(real).with_shots(plan.map(|s| s.n_zb)),
        OverlapTask::new("v0|b", v0, b).real(real).with_shots(plan.map(|s| s.n_v0b)),
        OverlapTask::new("v0|u0", v0, u0).real(real).with_shots(plan.map(|s| s.n_v0u0)),
        OverlapTask::new("z|u0", z, u0).real(real).with_shots(plan.map(|s| s.n_zu0)),
    ];
    let ab = p.rank1_coupling();
    let one = Complex64::new(1.0, 0.0);
    let run = run_folded(estimator, &tasks, |e| {
        let (zb, v0b, v0u0, zu0) = (e[0].value, e[1].value, e[2].value, e[3].value);
        let denom = one + ab * v0u0;
        near_singular_check(denom, ab.norm() * e[2].std_error)?;
        let value = zb - ab * v0b * zu0 / denom;
        let g_v0b = (ab * zu0 / denom).norm();
        let g_zu0 = (ab * v0b / denom).norm();
        let g_v0u0 = (ab * ab * v0b * zu0 / (denom * denom)).norm();
        let std_error = (e[0].std_error.powi(2)
            + (g_v0b * e[1].std_error).powi(2)
            + (g_v0u0 * e[2].std_error).powi(2)
            + (g_zu0 * e[3].std_error).powi(2))
        .sqrt();
        Ok(Assembly {
            value,
            std_error,
            capacitance_condition: 1.0,
            gamma: Some(ab / denom),
        })
    })?;
    Ok(run.into_report())
}

/// Overlap tasks for the rank-k assembly, ordered
/// `⟨z|b⟩, ⟨z|u_i⟩…, ⟨v_j|b⟩…, ⟨v_j|u_i⟩…` (row j, column i),
/// each with `middle` interposed.
fn rankk_tasks(p: &WoodburyProblem, middle: Option<&CircuitSpec>) -> Vec<OverlapTask> {
    let f = &p.factors;
    let k = p.rank();
    let real = p.declared_real;
    let (z, b) = (&p.z_preparer, &p.b_preparer);
    let sep = if middle.is_some() { "|Q†|" } else { "|" };
    let task = |bra_name: String, bra: &CircuitSpec, ket_name: String, ket: &CircuitSpec| {
        OverlapTask::new(format!("{bra_name}{sep}{ket_name}"), bra, ket)
            .with_middle(middle)
            .real(real)
    };
    let mut tasks = Vec::with_capacity(k * k + 2 * k + 1);
    tasks.push(task("z".into(), z, "b".into(), b));
    for (i, u) in f.u_preparers.iter().enumerate() {
        tasks.push(task("z".into(), z, format!("u{i}"), u));
    }
    for (j, v) in f.v_preparers.iter().enumerate() {
        tasks.push(task(format!("v{j}"), v, "b".into(), b));
    }
    for (j, v) in f.v_preparers.iter().enumerate() {
        for (i, u) in f.u_preparers.iter().enumerate() {
            tasks.push(task(format!("v{j}"), v, format!("u{i}"), u));
        }
    }
    tasks
}

fn rankk_assemble(
    p: &WoodburyProblem,
    c_inv: &DenseMatrix,
    e: &[InnerProductEstimate],
) -> Result<Assembly, SolveError> {
    let f = &p.factors;
    let k = p.rank();
    let y1 = e[0].value;
    let y2: Vec<Complex64> = (0..k).map(|i| f.alphas[i] * e[1 + i].value).collect();
    let y3: Vec<Complex64> = (0..k).map(|j| f.betas[j] * e[1 + k + j].value).collect();
    let vu = |j: usize, i: usize| &e[1 + 2 * k + j * k + i];

    let mut cap = c_inv.clone();
    for j in 0..k {
        for i in 0..k {
            cap[(j, i)] += f.alphas[i] * f.betas[j] * vu(j, i).value;
        }
    }
    let condition = condition_number(&cap);
    let lu = LuDecomposition::new(&cap).map_err(|e| match e {
        LinalgError::Singular { condition } => SolveError::SingularCapacitance { condition },
        other => SolveError::Linalg(other),
    })?;
    let w = lu.solve(&DenseVector::new(y3)?)?;
    let r = LuDecomposition::new(&cap.transpose())?.solve(&DenseVector::new(y2.clone())?)?;
    let correction: Complex64 = y2.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
    let value = y1 - correction;

    let mut var = e[0].std_error.powi(2);
    for i in 0..k {
        var += (f.alphas[i].norm() * w[i].norm() * e[1 + i].std_error).powi(2);
        var += (f.betas[i].norm() * r[i].norm() * e[1 + k + i].std_error).powi(2);
    }
    for j in 0..k {
        for i in 0..k {
            let g = (f.alphas[i] * f.betas[j]).norm() * r[j].norm() * w[i].norm();
            var += (g * vu(j, i).std_error).powi(2);
        }
    }
    Ok(Assembly {
        value,
        std_error: var.sqrt(),
        capacitance_condition: condition,
        gamma: None,
    })
}

fn solve_rankk_with_middle<E: OverlapEstimator + ?Sized>(
    p: &WoodburyProblem,
    estimator: &E,
    middle: Option<&CircuitSpec>,
) -> Result<SolveReport, SolveError> {
    let tasks = rankk_tasks(p, middle);
    debug_assert_eq!(tasks.len(), p.rank() * p.rank() + 2 * p.rank() + 1);
    let c_inv = matrix_inverse(&p.factors.c_matrix)?;
    let run = run_folded(estimator, &tasks, |e| rankk_assemble(p, &c_inv, e))?;
    Ok(run.into_report())
}

/// `⟨z|x⟩` for rank k and `A = I`: `k² + 2k + 1` estimated overlaps and a
/// classical `k × k` inversion.
pub fn solve_rankk_overlap<E: OverlapEstimator + ?Sized>(
    p: &WoodburyProblem,
    estimator: &E,
) -> Result<SolveReport, SolveError> {
    require_identity(p)?;
    solve_rankk_with_middle(p, estimator, None)
}

/// `⟨z|x⟩` for `A = Q` unitary: the rank-k assembly with `Q†` interposed
/// in every overlap.
pub fn solve_unitary_a_overlap<E: OverlapEstimator + ?Sized>(
    p: &WoodburyProblem,
    estimator: &E,
) -> Result<SolveReport, SolveError> {
    let q = match &p.a_part {
        APart::Unitary(q) => q,
        other => {
            return Err(SolveError::WrongCase {
                expected: "A = Q unitary",
                found: other.name(),
            })
        }
    };
    let q_dagger = inverse(q);
    solve_rankk_with_middle(p, estimator, Some(&q_dagger))
}

/// Dispatches to the rank-one, rank-k or unitary-A solver.
pub fn solve_overlap<E: OverlapEstimator + ?Sized>(
    p: &WoodburyProblem,
    estimator: &E,
) -> Result<SolveReport, SolveError> {
    match (&p.a_part, p.rank()) {
        (APart::Identity, 1) => solve_rank1_overlap(p, estimator),
        (APart::Identity, _) => solve_rankk_overlap(p, estimator),
        (APart::Unitary(_), _) => solve_unitary_a_overlap(p, estimator),
    }
}

/// `⟨x|O|x⟩ = ⟨b|O|b⟩ − 2 Re(c ⟨b|O|u₀⟩) + |c|² ⟨u₀|O|u₀⟩` with
/// `c = α₀β₀⟨v₀|b⟩ / (1 + α₀β₀⟨v₀|u₀⟩)`, rank one and `A = I` only.
/// Each LCU term contributes `⟨b|W_i|b⟩`, `⟨u₀|W_i|u₀⟩` and `⟨b|W_i|u₀⟩`.
pub fn expectation_hermitian<E: OverlapEstimator + ?Sized>(
    p: &WoodburyProblem,
    o: &HermitianLcu,
    estimator: &E,
) -> Result<ExpectationReport, SolveError> {
    require_identity(p)?;
    if p.rank() != 1 {
        return Err(SolveError::RankMismatch(format!(
            "expectation is defined for rank one, problem has rank {}",
            p.rank()
        )));
    }
    if o.qubit_count() != p.qubits {
        return Err(SolveError::InvalidProblem(format!(
            "observable on {} qubits, problem on {}",
            o.qubit_count(),
            p.qubits
        )));
    }
    let f = &p.factors;
    let (b, u0, v0) = (&p.b_preparer, &f.u_preparers[0], &f.v_preparers[0]);
    let mut tasks = vec![
        OverlapTask::new("v0|b", v0, b).real(p.declared_real),
        OverlapTask::new("v0|u0", v0, u0).real(p.declared_real),
    ];
    for (i, w) in o.w_circuits.iter().enumerate() {
        tasks.push(OverlapTask::new(format!("b|W{i}|b"), b, b).with_middle(Some(w)));
        tasks.push(OverlapTask::new(format!("u0|W{i}|u0"), u0, u0).with_middle(Some(w)));
        tasks.push(OverlapTask::new(format!("b|W{i}|u0"), b, u0).with_middle(Some(w)));
    }
    let ab = p.rank1_coupling();
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let run = run_folded(estimator, &tasks, |e| {
        let (v0b, v0u0) = (e[0].value, e[1].value);
        let denom = one + ab * v0u0;
        near_singular_check(denom, ab.norm() * e[1].std_error)?;
        let c = ab * v0b / denom;
        let se_c = ((ab / denom).norm() * e[0].std_error)
            .hypot((ab * ab * v0b / (denom * denom)).norm() * e[1].std_error);

        let (mut bob, mut uou, mut bou) = (zero, zero, zero);
        let mut var = 0.0;
        for (i, g) in o.gammas.iter().enumerate() {
            let (bb, uu, bu) = (&e[2 + 3 * i], &e[3 + 3 * i], &e[4 + 3 * i]);
            bob += g * bb.value;
            uou += g * uu.value;
            bou += g * bu.value;
            var += g.norm_sqr()
                * (bb.std_error.powi(2)
                    + c.norm_sqr().powi(2) * uu.std_error.powi(2)
                    + 4.0 * c.norm_sqr() * bu.std_error.powi(2));
        }
        let cross = c * bou;
        let value = bob - Complex64::new(2.0 * cross.re, 0.0) + c.norm_sqr() * uou;
        var += ((2.0 * bou.norm() + 2.0 * c.norm() * uou.norm()) * se_c).powi(2);
        Ok(Assembly {
            value,
            std_error: var.sqrt(),
            capacitance_condition: 1.0,
            gamma: Some(ab / denom),
        })
    })?;
    let residue = run.value.im.abs();
    let threshold = (5.0 * run.std_error).max(1e-9);
    if residue > threshold {
        return Err(SolveError::ImaginaryResidue { residue, threshold });
    }
    Ok(ExpectationReport {
        value: run.value.re,
        imag_residue: residue,
        std_error: run.std_error,
        per_inner_product: run.per_inner_product,
        fold_level_values: run.fold_level_values,
        estimator_calls: run.estimator_calls,
    })
}

pub mod json {
    //! Flat JSON document for [`WoodburyProblem`]. Complex numbers are either
    //! a bare number (real) or an `[re, im]` pair.

    use super::*;

    #[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
    #[serde(untagged)]
    pub enum JsonComplex {
        Real(f64),
        Pair([f64; 2]),
    }

    impl From<JsonComplex> for Complex64 {
        fn from(c: JsonComplex) -> Self {
            match c {
                JsonComplex::Real(re) => Complex64::new(re, 0.0),
                JsonComplex::Pair([re, im]) => Complex64::new(re, im),
            }
        }
    }

    impl From<Complex64> for JsonComplex {
        fn from(z: Complex64) -> Self {
            if z.im == 0.0 {
                JsonComplex::Real(z.re)
            } else {
                JsonComplex::Pair([z.re, z.im])
            }
        }
    }

    #[derive(Debug, Clone, Serialize, Deserialize)]
    pub struct ProblemRepr {
        pub qubits: usize,
        pub a_part: APart,
        pub alphas: Vec<JsonComplex>,
        pub u_preparers: Vec<CircuitSpec>,
        pub betas: Vec<JsonComplex>,
        pub v_preparers: Vec<CircuitSpec>,
        pub c_matrix: Vec<Vec<JsonComplex>>,
        pub b_preparer: CircuitSpec,
        pub z_preparer: CircuitSpec,
        #[serde(default)]
        pub declared_real: bool,
    }

    impl TryFrom<ProblemRepr> for WoodburyProblem {
        type Error = SolveError;

        fn try_from(r: ProblemRepr) -> Result<Self, SolveError> {
            let rows: Vec<Vec<Complex64>> = r
                .c_matrix
                .into_iter()
                .map(|row| row.into_iter().map(Complex64::from).collect())
                .collect();
            let factors = LowRankFactors {
                alphas: r.alphas.into_iter().map(Complex64::from).collect(),
                u_preparers: r.u_preparers,
                betas: r.betas.into_iter().map(Complex64::from).collect(),
                v_preparers: r.v_preparers,
                c_matrix: DenseMatrix::from_rows(&rows)?,
            };
            let p = WoodburyProblem::new(r.a_part, factors, r.b_preparer, r.z_preparer, r.declared_real)?;
            if p.qubits != r.qubits {
                return Err(SolveError::InvalidProblem(format!(
                    "\"qubits\" is {} but the circuits act on {}",
                    r.qubits, p.qubits
                )));
            }
            Ok(p)
        }
    }

    impl From<WoodburyProblem> for ProblemRepr {
        fn from(p: WoodburyProblem) -> Self {
            let c = &p.factors.c_matrix;
            let c_matrix = (0..c.rows())
                .map(|r| c.row(r).iter().map(|&z| JsonComplex::from(z)).collect())
                .collect();
            ProblemRepr {
                qubits: p.qubits,
                a_part: p.a_part,
                alphas: p.factors.alphas.into_iter().map(JsonComplex::from).collect(),
                u_preparers: p.factors.u_preparers,
                betas: p.factors.betas.into_iter().map(JsonComplex::from).collect(),
                v_preparers: p.factors.v_preparers,
                c_matrix,
                b_preparer: p.b_preparer,
                z_preparer: p.z_preparer,
                declared_real: p.declared_real,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{uniform_preparer, Gate};
    use crate::estimator::{CircuitEstimator, EstimatorConfig};

    fn c1(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn uniform_rank1(n: usize, alpha: f64) -> WoodburyProblem {
        let h = uniform_preparer(n).unwrap();
        WoodburyProblem::new(
            APart::Identity,
            LowRankFactors {
                alphas: vec![c1(alpha)],
                u_preparers: vec![h.clone()],
                betas: vec![c1(1.0)],
                v_preparers: vec![h.clone()],
                c_matrix: DenseMatrix::identity(1),
            },
            h.clone(),
            h,
            true,
        )
        .unwrap()
    }

    #[test]
    fn analytic_instance_is_one_half() {
        let est = CircuitEstimator::new(EstimatorConfig::exact(), 0).unwrap();
        for n in 1..=4 {
            let r = solve_rank1_overlap(&uniform_rank1(n, 1.0), &est).unwrap();
            assert!((r.overlap - c1(0.5)).norm() < 1e-12);
            assert_eq!(r.per_inner_product.len(), 4);
            assert!((r.gamma.unwrap() - c1(0.5)).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_alpha_gives_zb() {
        let est = CircuitEstimator::new(EstimatorConfig::exact(), 0).unwrap();
        let r = solve_rank1_overlap(&uniform_rank1(2, 0.0), &est).unwrap();
        assert!((r.overlap - c1(1.0)).norm() < 1e-12);
    }

    #[test]
    fn resonant_problem_rejected() {
        let est = CircuitEstimator::new(EstimatorConfig::exact(), 0).unwrap();
        let err = solve_rank1_overlap(&uniform_rank1(2, -1.0), &est).unwrap_err();
        assert!(matches!(err, SolveError::NearSingular { .. }), "{err:?}");
    }

    #[test]
    fn case_checks() {
        let est = CircuitEstimator::new(EstimatorConfig::exact(), 0).unwrap();
        let p = uniform_rank1(2, 1.0);
        let q = CircuitSpec::with_gates(2, vec![Gate::x(0)]).unwrap();
        let pu = WoodburyProblem::new(
            APart::Unitary(q),
            p.factors.clone(),
            p.b_preparer.clone(),
            p.z_preparer.clone(),
            true,
        )
        .unwrap();
        assert!(matches!(solve_rank1_overlap(&pu, &est), Err(SolveError::WrongCase { .. })));
        assert!(matches!(solve_unitary_a_overlap(&p, &est), Err(SolveError::WrongCase { .. })));
    }

    #[test]
    fn problem_validation() {
        let h = uniform_preparer(2).unwrap();
        let bad_rank = LowRankFactors {
            alphas: vec![c1(1.0), c1(1.0)],
            u_preparers: vec![h.clone()],
            betas: vec![c1(1.0)],
            v_preparers: vec![h.clone()],
            c_matrix: DenseMatrix::identity(1),
        };
        assert!(matches!(
            WoodburyProblem::new(APart::Identity, bad_rank, h.clone(), h.clone(), false),
            Err(SolveError::RankMismatch(_))
        ));
        let singular_c = LowRankFactors {
            alphas: vec![c1(1.0)],
            u_preparers: vec![h.clone()],
            betas: vec![c1(1.0)],
            v_preparers: vec![h.clone()],
            c_matrix: DenseMatrix::zeros(1, 1),
        };
        assert!(matches!(
            WoodburyProblem::new(APart::Identity, singular_c, h.clone(), h.clone(), false),
            Err(SolveError::Linalg(LinalgError::SingularC { .. }))
        ));
        let other = uniform_preparer(3).unwrap();
        let mismatched = LowRankFactors {
            alphas: vec![c1(1.0)],
            u_preparers: vec![other],
            betas: vec![c1(1.0)],
            v_preparers: vec![h.clone()],
            c_matrix: DenseMatrix::identity(1),
        };
        assert!(matches!(
            WoodburyProblem::new(APart::Identity, mismatched, h.clone(), h, false),
            Err(SolveError::InvalidProblem(_))
        ));
    }

    #[test]
    fn json_document_round_trip() {
        let p = uniform_rank1(2, 1.0);
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.contains(r#""a_part":"identity""#));
        assert!(text.contains(r#""declared_real":true"#));
        let back: WoodburyProblem = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);

        let q = CircuitSpec::with_gates(2, vec![Gate::x(1)]).unwrap();
        let pu = WoodburyProblem::new(
            APart::Unitary(q),
            LowRankFactors {
                alphas: vec![Complex64::new(0.5, -0.25)],
                ..p.factors.clone()
            },
            p.b_preparer.clone(),
            p.z_preparer.clone(),
            false,
        )
        .unwrap();
        let text = serde_json::to_string(&pu).unwrap();
        assert!(text.contains(r#""a_part":{"unitary":{"qubits":2"#));
        assert!(text.contains(r#""alphas":[[0.5,-0.25]]"#));
        assert_eq!(serde_json::from_str::<WoodburyProblem>(&text).unwrap(), pu);
    }

    #[test]
    fn unitary_labels_carry_q_dagger() {
        let p = uniform_rank1(1, 1.0);
        let q = inverse(&uniform_preparer(1).unwrap());
        let tasks = rankk_tasks(&p, Some(&q));
        let labels: Vec<&str> = tasks.iter().map(|t| t.label.as_str()).collect();
        assert_eq!(labels, ["z|Q†|b", "z|Q†|u0", "v0|Q†|b", "v0|Q†|u0"]);
    }
}
