//! Scaling sweep on the all-uniform rank-one instance, plus randomized
//! checks of the conditioning formula and of the solvers against the dense
//! oracle.

use std::collections::BTreeMap;
use std::io;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuits::{uniform_preparer, CircuitError, CircuitSpec, Gate, Unitary2};
use crate::estimator::{
    CircuitEstimator, EstimateError, EstimatorConfig, EvaluationMode, Method, MitigationConfig,
    MitigationMode,
};
use crate::linalg::{
    condition_number, conjectured_condition, singular_values, DenseMatrix, DenseVector,
    LinalgError, MAX_ORACLE_QUBITS,
};
use crate::oracle::dense_overlap;
use crate::rng::{derive_seed, stream_rng};
use crate::simulator::{Backend, NoiseModel};
use crate::solver::{
    solve_rank1_overlap, solve_rankk_overlap, solve_unitary_a_overlap, APart, LowRankFactors,
    SolveError, WoodburyProblem,
};

/// Largest register the statevector backend is asked to handle in a sweep.
pub const MAX_SWEEP_STATEVECTOR_QUBITS: usize = 20;
/// Largest register for [`oracle_check`].
pub const MAX_ORACLE_CHECK_QUBITS: usize = 6;
/// Condition-number ceiling for randomly generated problems.
pub const RANDOM_PROBLEM_MAX_CONDITION: f64 = 100.0;
/// Relative tolerance separating agreement from a counterexample in
/// [`verify_conjecture`].
pub const CONJECTURE_RTOL: f64 = 1e-8;

/// Exact `⟨z|x⟩` of the all-uniform instance at every size.
pub const FIGURE1_EXACT: f64 = 0.5;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn default_shots() -> u64 {
    100_000
}

fn default_mitigations() -> Vec<MitigationMode> {
    vec![MitigationMode::None]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `log₂N` values.
    pub sizes: Vec<usize>,
    #[serde(default = "default_shots")]
    pub shots_per_inner_product: u64,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default = "default_mitigations")]
    pub mitigations: Vec<MitigationMode>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: EvaluationMode,
    #[serde(default)]
    pub backend: Backend,
    /// Fill `wall_time_s`; off by default so output files are reproducible.
    #[serde(default)]
    pub record_wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            sizes: vec![2, 4, 8, 12, 16, 20],
            shots_per_inner_product: default_shots(),
            noise: NoiseModel::noiseless(),
            mitigations: default_mitigations(),
            seed: 0,
            mode: EvaluationMode::Sampled,
            backend: Backend::Auto,
            record_wall_time: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.sizes.is_empty() {
            return Err(ExperimentError::Config("sizes is empty".into()));
        }
        if let Some(s) = self.sizes.iter().find(|&&s| s == 0) {
            return Err(ExperimentError::Config(format!("size {s} must be at least 1")));
        }
        if self.mode == EvaluationMode::Sampled && self.shots_per_inner_product == 0 {
            return Err(ExperimentError::Config("sampled mode needs at least one shot".into()));
        }
        if self.mitigations.is_empty() {
            return Err(ExperimentError::Config("mitigations is empty".into()));
        }
        if self.backend == Backend::Statevector {
            if let Some(s) = self.sizes.iter().find(|&&s| s > MAX_SWEEP_STATEVECTOR_QUBITS) {
                return Err(ExperimentError::Config(format!(
                    "log2_n = {s} exceeds the statevector limit of {MAX_SWEEP_STATEVECTOR_QUBITS}; \
                     use the auto or product backend"
                )));
            }
        }
        Ok(())
    }

    fn estimator_config(&self, mitigation: MitigationMode) -> Result<EstimatorConfig, ExperimentError> {
        Ok(EstimatorConfig {
            mode: self.mode,
            method: Method::Hadamard,
            noise: self.noise,
            mitigation: MitigationConfig::new(mitigation, None, None)?,
            backend: self.backend,
            shots: self.shots_per_inner_product,
            ..EstimatorConfig::default()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub log2_n: usize,
    pub mitigation: MitigationMode,
    pub estimate: f64,
    pub exact: f64,
    pub relative_error: f64,
    pub wall_time_s: f64,
}

/// All preparers `H^{⊗n}`, `α₀ = β₀ = 1`, `C = 1`: `⟨z|x⟩ = 1/2` at every `n`.
pub fn figure1_problem(n: usize) -> Result<WoodburyProblem, ExperimentError> {
    let h = uniform_preparer(n)?;
    Ok(WoodburyProblem::new(
        APart::Identity,
        LowRankFactors {
            alphas: vec![Complex64::new(1.0, 0.0)],
            u_preparers: vec![h.clone()],
            betas: vec![Complex64::new(1.0, 0.0)],
            v_preparers: vec![h.clone()],
            c_matrix: DenseMatrix::identity(1),
        },
        h.clone(),
        h,
        true,
    )?)
}

/// `RY(θ)^{⊗n}` on every qubit.
pub fn ry_product_preparer(n: usize, theta: f64) -> CircuitSpec {
    let gates = (0..n).map(|q| Gate::u1q(q, Unitary2::ry(theta))).collect();
    CircuitSpec::with_gates(n, gates).expect("single-qubit gates on distinct qubits")
}

/// Rank-one instance with `RY` product preparers. Overlaps are
/// `⟨RY(a)^n|RY(b)^n⟩ = cos((a − b)/2)^n`, all real.
pub fn ry_rank1_problem(
    n: usize,
    theta_b: f64,
    theta_z: f64,
    theta_u: f64,
    theta_v: f64,
    alpha: f64,
) -> Result<WoodburyProblem, ExperimentError> {
    Ok(WoodburyProblem::new(
        APart::Identity,
        LowRankFactors {
            alphas: vec![Complex64::new(alpha, 0.0)],
            u_preparers: vec![ry_product_preparer(n, theta_u)],
            betas: vec![Complex64::new(1.0, 0.0)],
            v_preparers: vec![ry_product_preparer(n, theta_v)],
            c_matrix: DenseMatrix::identity(1),
        },
        ry_product_preparer(n, theta_b),
        ry_product_preparer(n, theta_z),
        true,
    )?)
}

/// One row per `(size, mitigation)` pair, sizes outermost, in config order.
/// Rows that share a size share a seed, so mitigation modes are compared on
/// identical raw samples.
pub fn run_figure1(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>, ExperimentError> {
    cfg.validate()?;
    let pairs: Vec<(usize, MitigationMode)> = cfg
        .sizes
        .iter()
        .flat_map(|&n| cfg.mitigations.iter().map(move |&m| (n, m)))
        .collect();
    pairs
        .par_iter()
        .map(|&(n, mitigation)| {
            let problem = figure1_problem(n)?;
            let estimator =
                CircuitEstimator::new(cfg.estimator_config(mitigation)?, derive_seed(cfg.seed, n as u64))?;
            let start = Instant::now();
            let report = solve_rank1_overlap(&problem, &estimator)?;
            let elapsed = start.elapsed().as_secs_f64();
            let estimate = report.overlap.re;
            Ok(ExperimentRow {
                log2_n: n,
                mitigation,
                estimate,
                exact: FIGURE1_EXACT,
                relative_error: (estimate - FIGURE1_EXACT).abs() / FIGURE1_EXACT,
                wall_time_s: if cfg.record_wall_time { elapsed } else { 0.0 },
            })
        })
        .collect()
}

/// CSV with header `log2_n,mitigation,estimate,exact,relative_error,wall_time_s`.
pub fn write_rows_csv<W: io::Write>(writer: W, rows: &[ExperimentRow]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(writer);
    if rows.is_empty() {
        w.write_record(["log2_n", "mitigation", "estimate", "exact", "relative_error", "wall_time_s"])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// `(log2_n, estimate)` series keyed by mitigation label.
pub fn plot_series(rows: &[ExperimentRow]) -> BTreeMap<String, Vec<(usize, f64)>> {
    let mut series: BTreeMap<String, Vec<(usize, f64)>> = BTreeMap::new();
    for row in rows {
        series
            .entry(row.mitigation.label().to_string())
            .or_default()
            .push((row.log2_n, row.estimate));
    }
    series
}

pub fn write_plot_json<W: io::Write>(writer: W, rows: &[ExperimentRow]) -> Result<(), ExperimentError> {
    serde_json::to_writer_pretty(writer, &plot_series(rows))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjectureCounterexample {
    pub trial: usize,
    pub dim: usize,
    pub kappa_conjectured: f64,
    pub kappa_svd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjectureReport {
    pub trials: usize,
    pub dim_max: usize,
    pub max_deviation: f64,
    pub counterexamples: Vec<ConjectureCounterexample>,
    /// Trials skipped because `I + u vᵀ` was numerically singular.
    pub singular: usize,
    /// `u = v =` uniform unit vector in dimension `dim_max`.
    pub canonical_kappa_conjectured: f64,
    pub canonical_kappa_svd: f64,
}

/// `κ(I + u vᵀ)` by SVD. Above 64 dimensions the matrix is reduced to the
/// span of `u, v`, where it acts nontrivially; it is the identity elsewhere.
pub fn svd_condition_rank1_update(u: &[f64], v: &[f64]) -> f64 {
    let dim = u.len();
    if dim <= 64 {
        let rows: Vec<Vec<f64>> = (0..dim)
            .map(|r| (0..dim).map(|c| f64::from(r == c) + u[r] * v[c]).collect())
            .collect();
        let m = DenseMatrix::from_real_rows(&rows).expect("square");
        return condition_number(&m);
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for w in [u, v] {
        let mut e = w.to_vec();
        for q in &basis {
            let p = dot(q, &e);
            e.iter_mut().zip(q).for_each(|(x, y)| *x -= p * y);
        }
        let norm = dot(&e, &e).sqrt();
        if norm > 1e-12 * dot(w, w).sqrt().max(f64::MIN_POSITIVE) && norm > 0.0 {
            e.iter_mut().for_each(|x| *x /= norm);
            basis.push(e);
        }
    }
    let r = basis.len();
    let uc: Vec<f64> = basis.iter().map(|q| dot(q, u)).collect();
    let vc: Vec<f64> = basis.iter().map(|q| dot(q, v)).collect();
    let rows: Vec<Vec<f64>> = (0..r)
        .map(|i| (0..r).map(|j| f64::from(i == j) + uc[i] * vc[j]).collect())
        .collect();
    let mut values = if r == 0 {
        Vec::new()
    } else {
        singular_values(&DenseMatrix::from_real_rows(&rows).expect("square"))
    };
    if dim > r {
        values.push(1.0);
    }
    let hi = values.iter().cloned().fold(0.0, f64::max);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

fn gaussian_vec(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Compares the closed-form conditioning of `I + u vᵀ` with an SVD on random
/// real `u, v` of dimension `2..=dim_max`. Disagreements beyond
/// [`CONJECTURE_RTOL`] are collected, not raised.
pub fn verify_conjecture(dim_max: usize, trials: usize, seed: u64) -> Result<ConjectureReport, ExperimentError> {
    let cap = 1usize << MAX_ORACLE_QUBITS;
    if dim_max == 0 || dim_max > cap {
        return Err(ExperimentError::Config(format!("dim_max must be in 1..={cap}, got {dim_max}")));
    }
    let outcomes: Vec<Option<(usize, f64, f64)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t as u64);
            let dim = rng.random_range(dim_max.min(2)..=dim_max);
            let scale = 1.0 / (dim as f64).sqrt();
            let u = gaussian_vec(&mut rng, dim, scale);
            let v_scale = scale * rng.random_range(0.2..2.0);
            let v = gaussian_vec(&mut rng, dim, v_scale);
            let conj = conjectured_condition(
                &DenseVector::from_real(&u).expect("finite"),
                &DenseVector::from_real(&v).expect("finite"),
            );
            match conj {
                Ok(c) => Some((dim, c.kappa, svd_condition_rank1_update(&u, &v))),
                Err(_) => None,
            }
        })
        .collect();

    let mut report = ConjectureReport {
        trials,
        dim_max,
        max_deviation: 0.0,
        counterexamples: Vec::new(),
        singular: 0,
        canonical_kappa_conjectured: 0.0,
        canonical_kappa_svd: 0.0,
    };
    for (trial, outcome) in outcomes.into_iter().enumerate() {
        let Some((dim, kc, ks)) = outcome else {
            report.singular += 1;
            continue;
        };
        let dev = (kc - ks).abs() / ks;
        report.max_deviation = report.max_deviation.max(dev);
        if dev.is_nan() || dev > CONJECTURE_RTOL {
            report.counterexamples.push(ConjectureCounterexample {
                trial,
                dim,
                kappa_conjectured: kc,
                kappa_svd: ks,
            });
        }
    }
    let e = vec![1.0 / (dim_max as f64).sqrt(); dim_max];
    let ev = DenseVector::from_real(&e)?;
    report.canonical_kappa_conjectured = conjectured_condition(&ev, &ev)?.kappa;
    report.canonical_kappa_svd = svd_condition_rank1_update(&e, &e);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Rank1,
    RankK,
    UnitaryA,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 3] = [ProblemKind::Rank1, ProblemKind::RankK, ProblemKind::UnitaryA];
}

/// Random circuit: `depth` layers of random single-qubit unitaries followed
/// by a CX ladder.
pub fn random_circuit(rng: &mut ChaCha8Rng, n: usize, depth: usize) -> CircuitSpec {
    let mut c = CircuitSpec::new(n);
    let angle = |rng: &mut ChaCha8Rng| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    for _ in 0..depth {
        for q in 0..n {
            let u = Unitary2::euler(angle(rng), angle(rng), angle(rng), angle(rng));
            c.push(Gate::u1q(q, u)).expect("qubit in range");
        }
        for q in 1..n {
            c.push(Gate::cx(q - 1, q).expect("distinct")).expect("qubit in range");
        }
    }
    c
}

fn random_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Random problem of the given kind on `n` qubits with rank `k`, rescaling
/// the low-rank part until the dense system's condition number is at most
/// [`RANDOM_PROBLEM_MAX_CONDITION`].
pub fn random_problem(
    rng: &mut ChaCha8Rng,
    kind: ProblemKind,
    n: usize,
    k: usize,
) -> Result<WoodburyProblem, ExperimentError> {
    let k = if kind == ProblemKind::Rank1 { 1 } else { k.max(1) };
    let depth = 2;
    let a_part = match kind {
        ProblemKind::UnitaryA => APart::Unitary(random_circuit(rng, n, depth)),
        _ => APart::Identity,
    };
    let u_preparers: Vec<_> = (0..k).map(|_| random_circuit(rng, n, depth)).collect();
    let v_preparers: Vec<_> = (0..k).map(|_| random_circuit(rng, n, depth)).collect();
    let b = random_circuit(rng, n, depth);
    let z = random_circuit(rng, n, depth);
    let betas: Vec<Complex64> = (0..k).map(|_| random_complex(rng)).collect();
    let base_alphas: Vec<Complex64> = (0..k).map(|_| random_complex(rng)).collect();
    let c_matrix = loop {
        let rows: Vec<Vec<Complex64>> = (0..k)
            .map(|r| {
                (0..k)
                    .map(|c| random_complex(rng) * 0.3 + f64::from(u8::from(r == c)))
                    .collect()
            })
            .collect();
        let m = DenseMatrix::from_rows(&rows)?;
        if condition_number(&m) < 20.0 {
            break m;
        }
    };
    let mut scale = rng.random_range(0.3..1.5);
    for _ in 0..60 {
        let alphas = base_alphas.iter().map(|a| a * scale).collect();
        let p = WoodburyProblem::new(
            a_part.clone(),
            LowRankFactors {
                alphas,
                u_preparers: u_preparers.clone(),
                betas: betas.clone(),
                v_preparers: v_preparers.clone(),
                c_matrix: c_matrix.clone(),
            },
            b.clone(),
            z.clone(),
            false,
        )?;
        let (m, _, _) = crate::oracle::dense_system(&p)?;
        if condition_number(&m) <= RANDOM_PROBLEM_MAX_CONDITION {
            return Ok(p);
        }
        scale *= 0.7;
    }
    Err(ExperimentError::Config("could not generate a well-conditioned problem".into()))
}

/// Exact-mode solve of any problem kind.
pub fn solve_exact(p: &WoodburyProblem, kind: ProblemKind) -> Result<Complex64, ExperimentError> {
    let est = CircuitEstimator::new(EstimatorConfig::exact(), 0)?;
    let report = match kind {
        ProblemKind::Rank1 => solve_rank1_overlap(p, &est)?,
        ProblemKind::RankK => solve_rankk_overlap(p, &est)?,
        ProblemKind::UnitaryA => solve_unitary_a_overlap(p, &est)?,
    };
    Ok(report.overlap)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCaseSummary {
    pub trials: usize,
    pub max_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub trials: usize,
    pub max_qubits: usize,
    pub max_rank: usize,
    pub max_delta: f64,
    pub per_case: BTreeMap<ProblemKind, OracleCaseSummary>,
}

/// Exact-mode solver output versus the dense oracle on random problems,
/// cycling through rank one, rank k and unitary `A`.
pub fn oracle_check(
    trials: usize,
    max_qubits: usize,
    max_rank: usize,
    seed: u64,
) -> Result<OracleReport, ExperimentError> {
    if max_qubits == 0 || max_qubits > MAX_ORACLE_CHECK_QUBITS {
        return Err(ExperimentError::Config(format!(
            "max_qubits must be in 1..={MAX_ORACLE_CHECK_QUBITS}, got {max_qubits}"
        )));
    }
    if max_rank == 0 {
        return Err(ExperimentError::Config("max_rank must be at least 1".into()));
    }
    let deltas: Vec<(ProblemKind, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t as u64);
            let kind = ProblemKind::ALL[t % 3];
            let n = rng.random_range(1..=max_qubits);
            let k = rng.random_range(1..=max_rank);
            let p = random_problem(&mut rng, kind, n, k)?;
            let delta = (solve_exact(&p, kind)? - dense_overlap(&p)?).norm();
            Ok((kind, delta))
        })
        .collect::<Result<_, ExperimentError>>()?;
    let mut per_case: BTreeMap<ProblemKind, OracleCaseSummary> = BTreeMap::new();
    let mut max_delta = 0.0_f64;
    for (kind, d) in deltas {
        let s = per_case.entry(kind).or_insert(OracleCaseSummary {
            trials: 0,
            max_delta: 0.0,
        });
        s.trials += 1;
        s.max_delta = s.max_delta.max(d);
        max_delta = max_delta.max(d);
    }
    Ok(OracleReport {
        trials,
        max_qubits,
        max_rank,
        max_delta,
        per_case,
    })
}
