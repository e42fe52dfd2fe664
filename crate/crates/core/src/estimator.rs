//! Inner-product estimation from ancilla statistics, shot budgeting, and
//! post-processing (readout correction and zero-noise extrapolation).

use std::fmt;
use std::io;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuits::{
    fold, overlap_test, swap_test, CircuitError, CircuitSpec, HadamardPart, OverlapForm,
};
use crate::linalg::ComplexScalar;
use crate::simulator::{
    exact_ancilla_statistic_with, sample_with, Backend, ConfusionMatrix, NoiseModel, SimError,
};

/// Below this `|det|` a confusion matrix is treated as singular.
const CONFUSION_DET_TOL: f64 = 1e-12;
/// Below this modulus `1 + α₀β₀⟨v₀|u₀⟩` counts as resonant.
const RESONANCE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("confusion matrix is singular (det = {0:e})")]
    SingularConfusion(f64),
    #[error("shot count must be at least 1")]
    NoShots,
    #[error("the swap test needs an overlap declared real and nonnegative")]
    PhaseUnknown,
    #[error("1 + α₀β₀⟨v₀|u₀⟩ = {0} is too close to zero")]
    ResonantDenominator(Complex64),
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("invalid mitigation config: {0}")]
    InvalidMitigation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Hadamard,
    Swap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvaluationMode {
    /// Infinite-shot, noiseless ancilla statistics.
    Exact,
    #[default]
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum MitigationMode {
    #[default]
    #[serde(rename = "none")]
    None,
    #[serde(rename = "mem")]
    Mem,
    #[serde(rename = "mem_zne", alias = "mem+zne")]
    MemZne,
}

impl MitigationMode {
    pub fn label(self) -> &'static str {
        match self {
            MitigationMode::None => "none",
            MitigationMode::Mem => "mem",
            MitigationMode::MemZne => "mem_zne",
        }
    }

    pub fn uses_mem(self) -> bool {
        self != MitigationMode::None
    }

    fn default_fold_levels(self) -> Vec<usize> {
        match self {
            MitigationMode::MemZne => vec![0, 1],
            _ => vec![0],
        }
    }
}

impl fmt::Display for MitigationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MitigationMode {
    type Err = EstimateError;

    fn from_str(s: &str) -> Result<Self, EstimateError> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(MitigationMode::None),
            "mem" => Ok(MitigationMode::Mem),
            "mem_zne" | "mem+zne" | "memzne" => Ok(MitigationMode::MemZne),
            other => Err(EstimateError::InvalidMitigation(format!("unknown mode {other:?}"))),
        }
    }
}

/// Post-processing selection.
///
/// `confusion` is the calibrated readout matrix used by MEM; when absent the
/// noise model's own readout matrix is taken as the calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MitigationRepr", into = "MitigationRepr")]
pub struct MitigationConfig {
    mode: MitigationMode,
    confusion: Option<ConfusionMatrix>,
    fold_levels: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct MitigationRepr {
    mode: MitigationMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    confusion: Option<ConfusionMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fold_levels: Option<Vec<usize>>,
}

impl MitigationConfig {
    pub fn new(
        mode: MitigationMode,
        confusion: Option<ConfusionMatrix>,
        fold_levels: Option<Vec<usize>>,
    ) -> Result<Self, EstimateError> {
        let fold_levels = fold_levels.unwrap_or_else(|| mode.default_fold_levels());
        if fold_levels != mode.default_fold_levels() {
            return Err(EstimateError::InvalidMitigation(format!(
                "mode {mode} requires fold levels {:?}, got {fold_levels:?}",
                mode.default_fold_levels()
            )));
        }
        if let (true, Some(c)) = (mode.uses_mem(), confusion.as_ref()) {
            check_invertible(c)?;
        }
        Ok(Self {
            mode,
            confusion,
            fold_levels,
        })
    }

    pub fn none() -> Self {
        Self {
            mode: MitigationMode::None,
            confusion: None,
            fold_levels: vec![0],
        }
    }

    pub fn mem(confusion: Option<ConfusionMatrix>) -> Result<Self, EstimateError> {
        Self::new(MitigationMode::Mem, confusion, None)
    }

    pub fn mem_zne(confusion: Option<ConfusionMatrix>) -> Result<Self, EstimateError> {
        Self::new(MitigationMode::MemZne, confusion, None)
    }

    pub fn mode(&self) -> MitigationMode {
        self.mode
    }

    pub fn confusion(&self) -> Option<&ConfusionMatrix> {
        self.confusion.as_ref()
    }

    pub fn fold_levels(&self) -> &[usize] {
        &self.fold_levels
    }
}

impl Default for MitigationConfig {
    fn default() -> Self {
        Self::none()
    }
}

impl TryFrom<MitigationRepr> for MitigationConfig {
    type Error = EstimateError;

    fn try_from(r: MitigationRepr) -> Result<Self, EstimateError> {
        Self::new(r.mode, r.confusion, r.fold_levels)
    }
}

impl From<MitigationConfig> for MitigationRepr {
    fn from(m: MitigationConfig) -> Self {
        MitigationRepr {
            mode: m.mode,
            confusion: m.confusion,
            fold_levels: Some(m.fold_levels),
        }
    }
}

fn check_invertible(c: &ConfusionMatrix) -> Result<f64, EstimateError> {
    let det = c.determinant();
    if det.abs() < CONFUSION_DET_TOL {
        return Err(EstimateError::SingularConfusion(det));
    }
    Ok(det)
}

/// Settings shared by every inner-product estimation of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    pub mode: EvaluationMode,
    pub method: Method,
    pub form: OverlapForm,
    pub noise: NoiseModel,
    pub mitigation: MitigationConfig,
    pub backend: Backend,
    /// Shots per circuit unless a task overrides it.
    pub shots: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            mode: EvaluationMode::Sampled,
            method: Method::Hadamard,
            form: OverlapForm::Expectation,
            noise: NoiseModel::noiseless(),
            mitigation: MitigationConfig::none(),
            backend: Backend::Auto,
            shots: 100_000,
        }
    }
}

impl EstimatorConfig {
    pub fn exact() -> Self {
        Self {
            mode: EvaluationMode::Exact,
            ..Self::default()
        }
    }

    pub fn sampled(shots: u64, noise: NoiseModel, mitigation: MitigationConfig) -> Self {
        Self {
            mode: EvaluationMode::Sampled,
            noise,
            mitigation,
            shots,
            ..Self::default()
        }
    }
}

/// One overlap `⟨a|M|b⟩` to estimate, with `|a⟩ = bra|0⟩`, `|b⟩ = ket|0⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapTask {
    pub label: String,
    pub bra: CircuitSpec,
    pub middle: Option<CircuitSpec>,
    pub ket: CircuitSpec,
    /// Caller guarantees the overlap is real; only the real-part test runs.
    pub declared_real: bool,
    pub shots: Option<u64>,
}

impl OverlapTask {
    pub fn new(label: impl Into<String>, bra: &CircuitSpec, ket: &CircuitSpec) -> Self {
        Self {
            label: label.into(),
            bra: bra.clone(),
            middle: None,
            ket: ket.clone(),
            declared_real: false,
            shots: None,
        }
    }

    pub fn with_middle(mut self, middle: Option<&CircuitSpec>) -> Self {
        self.middle = middle.cloned();
        self
    }

    pub fn real(mut self, declared_real: bool) -> Self {
        self.declared_real = declared_real;
        self
    }

    pub fn with_shots(mut self, shots: Option<u64>) -> Self {
        self.shots = shots;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InnerProductEstimate {
    pub label: String,
    pub value: ComplexScalar,
    pub shots_real: u64,
    pub shots_imag: u64,
    pub std_error: f64,
    /// Set when a swap-test radicand went negative and was clamped to 0.
    pub clamped: bool,
}

/// Anything that can turn an [`OverlapTask`] into an estimate.
pub trait OverlapEstimator: Sync {
    /// Fold levels the whole assembly must be evaluated at (`[0]` or `[0, 1]`).
    fn fold_levels(&self) -> &[usize] {
        &[0]
    }

    fn estimate(
        &self,
        task: &OverlapTask,
        fold_level: usize,
        stream: u64,
    ) -> Result<InnerProductEstimate, EstimateError>;
}

/// Estimates overlaps by simulating Hadamard or swap test circuits.
#[derive(Debug, Clone)]
pub struct CircuitEstimator {
    config: EstimatorConfig,
    seed: u64,
}

impl CircuitEstimator {
    pub fn new(config: EstimatorConfig, seed: u64) -> Result<Self, EstimateError> {
        if config.mode == EvaluationMode::Sampled && config.shots == 0 {
            return Err(EstimateError::NoShots);
        }
        if config.mitigation.mode().uses_mem() {
            check_invertible(
                config
                    .mitigation
                    .confusion()
                    .unwrap_or(config.noise.readout()),
            )?;
        }
        Ok(Self { config, seed })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    /// Mitigated ancilla statistic `P(0) - P(1)` and its standard error.
    fn statistic(
        &self,
        circuit: &CircuitSpec,
        fold_level: usize,
        shots: u64,
        stream: u64,
    ) -> Result<(f64, f64), EstimateError> {
        let circuit = fold(circuit, fold_level);
        let cfg = &self.config;
        if cfg.mode == EvaluationMode::Exact {
            return Ok((exact_ancilla_statistic_with(&circuit, cfg.backend)?, 0.0));
        }
        let result = sample_with(&circuit, shots, &cfg.noise, self.seed, stream, cfg.backend)?;
        let observed = result.frequencies();
        let raw = observed[0] - observed[1];
        let raw_se = ((1.0 - raw * raw).max(0.0) / shots as f64).sqrt();
        if !cfg.mitigation.mode().uses_mem() {
            return Ok((raw, raw_se));
        }
        let confusion = cfg.mitigation.confusion().unwrap_or(cfg.noise.readout());
        let det = check_invertible(confusion)?;
        let p = mem_correct(observed, confusion)?;
        Ok((p[0] - p[1], raw_se / det.abs()))
    }
}

impl OverlapEstimator for CircuitEstimator {
    fn fold_levels(&self) -> &[usize] {
        self.config.mitigation.fold_levels()
    }

    fn estimate(
        &self,
        task: &OverlapTask,
        fold_level: usize,
        stream: u64,
    ) -> Result<InnerProductEstimate, EstimateError> {
        let shots = task.shots.unwrap_or(self.config.shots);
        let sampled = self.config.mode == EvaluationMode::Sampled;
        if sampled && shots == 0 {
            return Err(EstimateError::NoShots);
        }
        let counted = if sampled { shots } else { 0 };
        let form = self.config.form;
        match self.config.method {
            Method::Hadamard => {
                let re_circuit =
                    overlap_test(&task.bra, task.middle.as_ref(), &task.ket, HadamardPart::Real, form)?;
                let (re, se_re) = self.statistic(&re_circuit, fold_level, shots, 2 * stream)?;
                let (im, se_im, shots_imag) = if task.declared_real {
                    (0.0, 0.0, 0)
                } else {
                    let im_circuit = overlap_test(
                        &task.bra,
                        task.middle.as_ref(),
                        &task.ket,
                        HadamardPart::Imag,
                        form,
                    )?;
                    let (im, se) = self.statistic(&im_circuit, fold_level, shots, 2 * stream + 1)?;
                    (im, se, counted)
                };
                Ok(InnerProductEstimate {
                    label: task.label.clone(),
                    value: Complex64::new(re, im),
                    shots_real: counted,
                    shots_imag,
                    std_error: se_re.hypot(se_im),
                    clamped: false,
                })
            }
            Method::Swap => {
                if !task.declared_real {
                    return Err(EstimateError::PhaseUnknown);
                }
                let ket = match &task.middle {
                    Some(m) => task.ket.then(m)?,
                    None => task.ket.clone(),
                };
                let circuit = swap_test(&task.bra, &ket)?;
                let (s, se_s) = self.statistic(&circuit, fold_level, shots, 2 * stream)?;
                let clamped = s < 0.0;
                let s = s.max(0.0);
                let value = s.sqrt();
                let std_error = if s > se_s { se_s / (2.0 * value) } else { se_s.sqrt() };
                Ok(InnerProductEstimate {
                    label: task.label.clone(),
                    value: Complex64::new(value, 0.0),
                    shots_real: counted,
                    shots_imag: 0,
                    std_error,
                    clamped,
                })
            }
        }
    }
}

/// Estimates `⟨a|b⟩` for `|a⟩ = prep_a|0⟩`, `|b⟩ = prep_b|0⟩`.
pub fn estimate_inner_product(
    prep_a: &CircuitSpec,
    prep_b: &CircuitSpec,
    config: &EstimatorConfig,
    declared_real: bool,
    seed: u64,
) -> Result<InnerProductEstimate, EstimateError> {
    let estimator = CircuitEstimator::new(config.clone(), seed)?;
    let task = OverlapTask::new("a|b", prep_a, prep_b).real(declared_real);
    estimator.estimate(&task, 0, 0)
}

/// Shot counts for the four rank-one overlaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotPlan {
    pub n_zb: u64,
    pub n_v0b: u64,
    pub n_v0u0: u64,
    pub n_zu0: u64,
}

/// Rounds a real shot requirement up to an integer, tolerating float noise
/// just above an exact integer, with a floor of 1.
fn shots_from(x: f64) -> u64 {
    let nearest = x.round();
    let n = if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        x.ceil()
    };
    (n as u64).max(1)
}

/// First-order shot budget for estimating `⟨z|x⟩` to precision `epsilon`
/// in the rank-one, `A = I` case. Complex inputs enter through their moduli.
pub fn shot_plan(
    epsilon: f64,
    alpha0beta0: ComplexScalar,
    zb: ComplexScalar,
    v0b: ComplexScalar,
    v0u0: ComplexScalar,
    zu0: ComplexScalar,
) -> Result<ShotPlan, EstimateError> {
    let _ = zb; // ⟨z|b⟩ enters with unit sensitivity.
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(EstimateError::InvalidEpsilon(epsilon));
    }
    let denom = Complex64::new(1.0, 0.0) + alpha0beta0 * v0u0;
    if denom.norm() < RESONANCE_TOL {
        return Err(EstimateError::ResonantDenominator(denom));
    }
    let ab = alpha0beta0.norm();
    let d = denom.norm();
    let sq = |x: f64| x * x;
    Ok(ShotPlan {
        n_zb: shots_from(sq(1.0 / epsilon)),
        n_v0b: shots_from(sq(ab * zu0.norm() / (epsilon * d))),
        n_v0u0: shots_from(sq(ab * ab * zu0.norm() * v0b.norm() / (epsilon * d * d))),
        n_zu0: shots_from(sq(ab * v0b.norm() / (epsilon * d))),
    })
}

/// `γ = α₀β₀ / (1 + α₀β₀⟨v₀|u₀⟩)`.
pub fn gamma(alpha0beta0: ComplexScalar, v0u0: ComplexScalar) -> Result<ComplexScalar, EstimateError> {
    let denom = Complex64::new(1.0, 0.0) + alpha0beta0 * v0u0;
    if denom.norm() < RESONANCE_TOL {
        return Err(EstimateError::ResonantDenominator(denom));
    }
    Ok(alpha0beta0 / denom)
}

/// Solves `confusion · p_true = observed`, clips to `[0, 1]` and renormalizes.
pub fn mem_correct(
    observed: [f64; 2],
    confusion: &ConfusionMatrix,
) -> Result<[f64; 2], EstimateError> {
    let det = check_invertible(confusion)?;
    let m = confusion.matrix();
    let p0 = (m[1][1] * observed[0] - m[0][1] * observed[1]) / det;
    let p1 = (m[0][0] * observed[1] - m[1][0] * observed[0]) / det;
    let (p0, p1) = (p0.clamp(0.0, 1.0), p1.clamp(0.0, 1.0));
    let total = p0 + p1;
    if total <= 0.0 {
        return Ok([0.5, 0.5]);
    }
    Ok([p0 / total, p1 / total])
}

/// Linear extrapolation through `(1, e1)` and `(3, e3)` evaluated at 0.
pub fn zne_extrapolate(e1: f64, e3: f64) -> f64 {
    e1 + (e1 - e3) / 2.0
}

/// [`zne_extrapolate`] applied to real and imaginary parts separately.
pub fn zne_extrapolate_complex(e1: ComplexScalar, e3: ComplexScalar) -> ComplexScalar {
    Complex64::new(zne_extrapolate(e1.re, e3.re), zne_extrapolate(e1.im, e3.im))
}

#[derive(Serialize)]
struct EstimateRow<'a> {
    label: &'a str,
    re: f64,
    im: f64,
    shots: u64,
    std_error: f64,
}

/// Writes `label,re,im,shots,std_error` rows.
pub fn write_estimates_csv<W: io::Write>(
    writer: W,
    estimates: &[InnerProductEstimate],
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for e in estimates {
        w.serialize(EstimateRow {
            label: &e.label,
            re: e.value.re,
            im: e.value.im,
            shots: e.shots_real + e.shots_imag,
            std_error: e.std_error,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{uniform_preparer, Gate};

    fn c1(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn shot_plan_unit_inputs() {
        let one = c1(1.0);
        let plan = shot_plan(0.01, one, one, one, one, one).unwrap();
        assert_eq!(
            plan,
            ShotPlan {
                n_zb: 10_000,
                n_v0b: 2_500,
                n_v0u0: 625,
                n_zu0: 2_500
            }
        );
    }

    #[test]
    fn shot_plan_zero_update_and_scaling() {
        let one = c1(1.0);
        let plan = shot_plan(0.01, c1(0.0), one, one, one, one).unwrap();
        assert_eq!((plan.n_zb, plan.n_v0b, plan.n_v0u0, plan.n_zu0), (10_000, 1, 1, 1));

        let coarse = shot_plan(0.02, one, one, one, one, one).unwrap();
        let fine = shot_plan(0.01, one, one, one, one, one).unwrap();
        // halving epsilon quadruples each count, up to ceiling
        for (f, c) in [
            (fine.n_zb, coarse.n_zb),
            (fine.n_v0b, coarse.n_v0b),
            (fine.n_v0u0, coarse.n_v0u0),
            (fine.n_zu0, coarse.n_zu0),
        ] {
            assert!(f <= 4 * c && f + 4 > 4 * c, "{f} vs {c}");
        }
    }

    #[test]
    fn shot_plan_errors() {
        let one = c1(1.0);
        assert!(matches!(
            shot_plan(0.01, c1(-1.0), one, one, one, one),
            Err(EstimateError::ResonantDenominator(_))
        ));
        assert!(matches!(
            shot_plan(0.0, one, one, one, one, one),
            Err(EstimateError::InvalidEpsilon(_))
        ));
    }

    #[test]
    fn gamma_values() {
        assert_eq!(gamma(c1(1.0), c1(1.0)).unwrap(), c1(0.5));
        assert_eq!(gamma(c1(0.0), c1(0.3)).unwrap(), c1(0.0));
        assert!(gamma(c1(1.0), c1(-1.0)).is_err());
    }

    #[test]
    fn mem_correct_cases() {
        let id = ConfusionMatrix::identity();
        assert_eq!(mem_correct([0.3, 0.7], &id).unwrap(), [0.3, 0.7]);

        let c = ConfusionMatrix::new([[0.9, 0.2], [0.1, 0.8]]).unwrap();
        let p = mem_correct([0.9, 0.1], &c).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1].abs() < 1e-15);

        // Outside the image of the channel: clipped then renormalized.
        let p = mem_correct([0.95, 0.05], &c).unwrap();
        assert_eq!(p, [1.0, 0.0]);

        let singular = ConfusionMatrix::new([[0.5, 0.5], [0.5, 0.5]]).unwrap();
        assert!(matches!(
            mem_correct([0.5, 0.5], &singular),
            Err(EstimateError::SingularConfusion(_))
        ));
    }

    #[test]
    fn zne_examples() {
        assert_eq!(zne_extrapolate(0.5, 0.5), 0.5);
        assert!((zne_extrapolate(0.45, 0.35) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mitigation_config_validation_and_json() {
        let singular = ConfusionMatrix::new([[0.5, 0.5], [0.5, 0.5]]).unwrap();
        assert!(MitigationConfig::mem(Some(singular)).is_err());
        assert!(MitigationConfig::new(MitigationMode::Mem, None, Some(vec![0, 1])).is_err());

        let cfg = MitigationConfig::mem_zne(None).unwrap();
        assert_eq!(cfg.fold_levels(), &[0, 1]);
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(text, r#"{"mode":"mem_zne","fold_levels":[0,1]}"#);
        let parsed: MitigationConfig = serde_json::from_str(r#"{"mode":"mem+zne"}"#).unwrap();
        assert_eq!(parsed, cfg);
        assert_eq!("mem+zne".parse::<MitigationMode>().unwrap(), MitigationMode::MemZne);
    }

    #[test]
    fn exact_estimates_of_simple_overlaps() {
        let cfg = EstimatorConfig::exact();
        let u = uniform_preparer(3).unwrap();
        let e = estimate_inner_product(&u, &u, &cfg, false, 0).unwrap();
        assert!((e.value - c1(1.0)).norm() < 1e-12);
        assert_eq!(e.std_error, 0.0);

        let zero = CircuitSpec::new(1);
        let one = CircuitSpec::with_gates(1, vec![Gate::x(0)]).unwrap();
        let e = estimate_inner_product(&zero, &one, &cfg, false, 0).unwrap();
        assert!(e.value.norm() < 1e-12);
    }

    #[test]
    fn swap_requires_declared_phase() {
        let u = uniform_preparer(2).unwrap();
        let cfg = EstimatorConfig {
            method: Method::Swap,
            ..EstimatorConfig::exact()
        };
        assert_eq!(
            estimate_inner_product(&u, &u, &cfg, false, 0),
            Err(EstimateError::PhaseUnknown)
        );
        let e = estimate_inner_product(&u, &u, &cfg, true, 0).unwrap();
        assert!((e.value.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_requires_shots() {
        let cfg = EstimatorConfig::sampled(0, NoiseModel::noiseless(), MitigationConfig::none());
        let u = uniform_preparer(1).unwrap();
        assert_eq!(
            estimate_inner_product(&u, &u, &cfg, true, 0),
            Err(EstimateError::NoShots)
        );
    }

    #[test]
    fn csv_rows() {
        let e = InnerProductEstimate {
            label: "z|b".into(),
            value: Complex64::new(0.5, -0.25),
            shots_real: 100,
            shots_imag: 100,
            std_error: 0.125,
            clamped: false,
        };
        let mut out = Vec::new();
        write_estimates_csv(&mut out, &[e]).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "label,re,im,shots,std_error\nz|b,0.5,-0.25,200,0.125\n"
        );
    }
}
