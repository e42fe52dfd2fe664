//! Gate-level circuits for state preparation and interference tests.
//!
//! Qubit `q` is bit `q` of a basis-state index. Interference circuits put
//! their ancilla at index 0 and shift the register(s) up by one.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const UNITARY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),
    #[error("gate {kind} expects {expected} qubit indices, got {got}")]
    Arity {
        kind: &'static str,
        expected: String,
        got: usize,
    },
    #[error("gate targets repeat a qubit: {0:?}")]
    RepeatedTarget(Vec<usize>),
    #[error("gate touches qubit {qubit} but the circuit has {qubit_count} qubits")]
    QubitOutOfRange { qubit: usize, qubit_count: usize },
    #[error("qubit count mismatch: {0} vs {1}")]
    QubitCountMismatch(usize, usize),
    #[error("a circuit needs at least one qubit")]
    NoQubits,
    #[error("unknown gate kind {0:?}")]
    UnknownKind(String),
    #[error("gate {0} needs a 2x2 matrix payload")]
    MissingMatrix(&'static str),
}

/// Validated 2x2 unitary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2([[Complex64; 2]; 2]);

const fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl Unitary2 {
    pub fn new(m: [[Complex64; 2]; 2]) -> Result<Self, CircuitError> {
        let u = Self(m);
        let dev = u.unitarity_deviation();
        if dev.is_nan() || dev > UNITARY_TOL {
            return Err(CircuitError::NotUnitary(dev));
        }
        Ok(u)
    }

    fn unitarity_deviation(&self) -> f64 {
        let p = self.adjoint().mul(self);
        let id = Self::identity();
        let mut dev = 0.0_f64;
        for r in 0..2 {
            for c in 0..2 {
                dev = dev.max((p.0[r][c] - id.0[r][c]).norm());
            }
        }
        dev
    }

    pub const fn identity() -> Self {
        Self([[cx(1.0, 0.0), cx(0.0, 0.0)], [cx(0.0, 0.0), cx(1.0, 0.0)]])
    }

    pub const fn hadamard() -> Self {
        Self([
            [cx(FRAC_1_SQRT_2, 0.0), cx(FRAC_1_SQRT_2, 0.0)],
            [cx(FRAC_1_SQRT_2, 0.0), cx(-FRAC_1_SQRT_2, 0.0)],
        ])
    }

    pub const fn pauli_x() -> Self {
        Self([[cx(0.0, 0.0), cx(1.0, 0.0)], [cx(1.0, 0.0), cx(0.0, 0.0)]])
    }

    pub const fn pauli_y() -> Self {
        Self([[cx(0.0, 0.0), cx(0.0, -1.0)], [cx(0.0, 1.0), cx(0.0, 0.0)]])
    }

    pub const fn pauli_z() -> Self {
        Self([[cx(1.0, 0.0), cx(0.0, 0.0)], [cx(0.0, 0.0), cx(-1.0, 0.0)]])
    }

    pub const fn s() -> Self {
        Self([[cx(1.0, 0.0), cx(0.0, 0.0)], [cx(0.0, 0.0), cx(0.0, 1.0)]])
    }

    pub const fn sdg() -> Self {
        Self([[cx(1.0, 0.0), cx(0.0, 0.0)], [cx(0.0, 0.0), cx(0.0, -1.0)]])
    }

    /// Square root of X.
    pub const fn sx() -> Self {
        Self([[cx(0.5, 0.5), cx(0.5, -0.5)], [cx(0.5, -0.5), cx(0.5, 0.5)]])
    }

    pub fn ry(theta: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Self([[cx(c, 0.0), cx(-s, 0.0)], [cx(s, 0.0), cx(c, 0.0)]])
    }

    pub fn rz(theta: f64) -> Self {
        let h = theta / 2.0;
        Self([
            [Complex64::from_polar(1.0, -h), cx(0.0, 0.0)],
            [cx(0.0, 0.0), Complex64::from_polar(1.0, h)],
        ])
    }

    /// General single-qubit unitary `e^{iδ} U3(θ, φ, λ)`.
    pub fn euler(theta: f64, phi: f64, lambda: f64, delta: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        let g = Complex64::from_polar(1.0, delta);
        Self([
            [g * c, -g * Complex64::from_polar(s, lambda)],
            [
                g * Complex64::from_polar(s, phi),
                g * Complex64::from_polar(c, phi + lambda),
            ],
        ])
    }

    pub fn matrix(&self) -> &[[Complex64; 2]; 2] {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Self([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = (&self.0, &other.0);
        let mut out = [[cx(0.0, 0.0); 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, entry) in row.iter_mut().enumerate() {
                *entry = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Self(out)
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    H,
    X,
    S,
    Sdg,
    SX,
    /// Controlled X; targets `[control, target]`.
    CX,
    U1Q(Unitary2),
    /// Multi-controlled 2x2 unitary; targets `[controls.., target]`.
    CU1Q(Unitary2),
}

impl GateKind {
    pub fn name(&self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::X => "X",
            GateKind::S => "S",
            GateKind::Sdg => "SDG",
            GateKind::SX => "SX",
            GateKind::CX => "CX",
            GateKind::U1Q(_) => "U1Q",
            GateKind::CU1Q(_) => "CU1Q",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    kind: GateKind,
    targets: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, targets: Vec<usize>) -> Result<Self, CircuitError> {
        let arity_ok = match kind {
            GateKind::CX => targets.len() == 2,
            GateKind::CU1Q(_) => targets.len() >= 2,
            _ => targets.len() == 1,
        };
        if !arity_ok {
            let expected = match kind {
                GateKind::CX => "2",
                GateKind::CU1Q(_) => "at least 2",
                _ => "1",
            };
            return Err(CircuitError::Arity {
                kind: kind.name(),
                expected: expected.into(),
                got: targets.len(),
            });
        }
        for (i, t) in targets.iter().enumerate() {
            if targets[..i].contains(t) {
                return Err(CircuitError::RepeatedTarget(targets));
            }
        }
        Ok(Self { kind, targets })
    }

    pub fn h(q: usize) -> Self {
        Self { kind: GateKind::H, targets: vec![q] }
    }

    pub fn x(q: usize) -> Self {
        Self { kind: GateKind::X, targets: vec![q] }
    }

    pub fn s(q: usize) -> Self {
        Self { kind: GateKind::S, targets: vec![q] }
    }

    pub fn sdg(q: usize) -> Self {
        Self { kind: GateKind::Sdg, targets: vec![q] }
    }

    pub fn sx(q: usize) -> Self {
        Self { kind: GateKind::SX, targets: vec![q] }
    }

    pub fn u1q(q: usize, u: Unitary2) -> Self {
        Self { kind: GateKind::U1Q(u), targets: vec![q] }
    }

    pub fn cx(control: usize, target: usize) -> Result<Self, CircuitError> {
        Self::new(GateKind::CX, vec![control, target])
    }

    pub fn cu1q(controls: &[usize], target: usize, u: Unitary2) -> Result<Self, CircuitError> {
        let mut targets = controls.to_vec();
        targets.push(target);
        Self::new(GateKind::CU1Q(u), targets)
    }

    pub fn kind(&self) -> &GateKind {
        &self.kind
    }

    /// All qubits the gate touches, controls first.
    pub fn qubits(&self) -> &[usize] {
        &self.targets
    }

    pub fn controls(&self) -> &[usize] {
        &self.targets[..self.targets.len() - 1]
    }

    pub fn target(&self) -> usize {
        *self.targets.last().expect("gates have at least one qubit")
    }

    pub fn arity(&self) -> usize {
        self.targets.len()
    }

    /// The 2x2 unitary applied to the target when all controls are set.
    pub fn target_unitary(&self) -> Unitary2 {
        match self.kind {
            GateKind::H => Unitary2::hadamard(),
            GateKind::X | GateKind::CX => Unitary2::pauli_x(),
            GateKind::S => Unitary2::s(),
            GateKind::Sdg => Unitary2::sdg(),
            GateKind::SX => Unitary2::sx(),
            GateKind::U1Q(u) | GateKind::CU1Q(u) => u,
        }
    }

    pub fn adjoint(&self) -> Self {
        let kind = match self.kind {
            GateKind::H => GateKind::H,
            GateKind::X => GateKind::X,
            GateKind::S => GateKind::Sdg,
            GateKind::Sdg => GateKind::S,
            GateKind::SX => GateKind::U1Q(Unitary2::sx().adjoint()),
            GateKind::CX => GateKind::CX,
            GateKind::U1Q(u) => GateKind::U1Q(u.adjoint()),
            GateKind::CU1Q(u) => GateKind::CU1Q(u.adjoint()),
        };
        Self {
            kind,
            targets: self.targets.clone(),
        }
    }

    /// Same gate with one more control qubit in front.
    pub fn with_control(&self, control: usize) -> Result<Self, CircuitError> {
        let kind = match self.kind {
            GateKind::X => GateKind::CX,
            _ => GateKind::CU1Q(self.target_unitary()),
        };
        let mut targets = Vec::with_capacity(self.targets.len() + 1);
        targets.push(control);
        targets.extend_from_slice(&self.targets);
        Self::new(kind, targets)
    }

    pub fn shifted(&self, offset: usize) -> Self {
        Self {
            kind: self.kind,
            targets: self.targets.iter().map(|q| q + offset).collect(),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.kind.name(), self.targets)
    }
}

/// Ordered gate list on a fixed number of qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "json::CircuitRepr", into = "json::CircuitRepr")]
pub struct CircuitSpec {
    qubit_count: usize,
    gates: Vec<Gate>,
}

impl CircuitSpec {
    /// Empty circuit (the identity) on `qubit_count` qubits.
    pub fn new(qubit_count: usize) -> Self {
        Self {
            qubit_count,
            gates: Vec::new(),
        }
    }

    pub fn with_gates(qubit_count: usize, gates: Vec<Gate>) -> Result<Self, CircuitError> {
        let mut c = Self::new(qubit_count);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), CircuitError> {
        if let Some(&q) = gate.qubits().iter().find(|&&q| q >= self.qubit_count) {
            return Err(CircuitError::QubitOutOfRange {
                qubit: q,
                qubit_count: self.qubit_count,
            });
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &CircuitSpec) -> Result<CircuitSpec, CircuitError> {
        if self.qubit_count != next.qubit_count {
            return Err(CircuitError::QubitCountMismatch(self.qubit_count, next.qubit_count));
        }
        let mut gates = self.gates.clone();
        gates.extend_from_slice(&next.gates);
        Ok(CircuitSpec {
            qubit_count: self.qubit_count,
            gates,
        })
    }

    /// Appends `other`'s gates with every qubit index moved up by `offset`.
    pub fn append_shifted(&mut self, other: &CircuitSpec, offset: usize) -> Result<(), CircuitError> {
        if other.qubit_count + offset > self.qubit_count {
            return Err(CircuitError::QubitOutOfRange {
                qubit: other.qubit_count + offset - 1,
                qubit_count: self.qubit_count,
            });
        }
        self.gates.extend(other.gates.iter().map(|g| g.shifted(offset)));
        Ok(())
    }

    /// Widens the circuit to `qubit_count` qubits without moving any gate.
    pub fn widened(&self, qubit_count: usize) -> Result<CircuitSpec, CircuitError> {
        if qubit_count < self.qubit_count {
            return Err(CircuitError::QubitCountMismatch(self.qubit_count, qubit_count));
        }
        Ok(CircuitSpec {
            qubit_count,
            gates: self.gates.clone(),
        })
    }

    /// True when no gate couples two qubits.
    pub fn is_tensor_product(&self) -> bool {
        self.gates.iter().all(|g| g.arity() == 1)
    }
}

/// `n` Hadamards: prepares the uniform superposition over `2^n` basis states.
pub fn uniform_preparer(n: usize) -> Result<CircuitSpec, CircuitError> {
    if n == 0 {
        return Err(CircuitError::NoQubits);
    }
    Ok(CircuitSpec {
        qubit_count: n,
        gates: (0..n).map(Gate::h).collect(),
    })
}

/// Reversed gate order with every gate replaced by its adjoint.
pub fn inverse(c: &CircuitSpec) -> CircuitSpec {
    CircuitSpec {
        qubit_count: c.qubit_count,
        gates: c.gates.iter().rev().map(Gate::adjoint).collect(),
    }
}

/// Controlled version of `c`: control on a fresh qubit 0, register shifted up by one.
pub fn controlled(c: &CircuitSpec) -> CircuitSpec {
    let gates = c
        .gates
        .iter()
        .map(|g| {
            g.shifted(1)
                .with_control(0)
                .expect("shifted targets never include qubit 0")
        })
        .collect();
    CircuitSpec {
        qubit_count: c.qubit_count + 1,
        gates,
    }
}

/// Replaces every gate `Q` by `Q (Q† Q)^foldings`.
pub fn fold(c: &CircuitSpec, foldings: usize) -> CircuitSpec {
    if foldings == 0 {
        return c.clone();
    }
    let mut gates = Vec::with_capacity(c.gates.len() * (2 * foldings + 1));
    for g in &c.gates {
        gates.push(g.clone());
        let adj = g.adjoint();
        for _ in 0..foldings {
            gates.push(adj.clone());
            gates.push(g.clone());
        }
    }
    CircuitSpec {
        qubit_count: c.qubit_count,
        gates,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HadamardPart {
    Real,
    Imag,
}

/// Hadamard test: the ancilla statistic `P(0) - P(1)` equals
/// `Re⟨ψ|w|ψ⟩` (or `Im` with `part = Imag`) for `|ψ⟩ = prep|0⟩`.
pub fn hadamard_test(
    prep: &CircuitSpec,
    w: &CircuitSpec,
    part: HadamardPart,
) -> Result<CircuitSpec, CircuitError> {
    if prep.qubit_count != w.qubit_count {
        return Err(CircuitError::QubitCountMismatch(prep.qubit_count, w.qubit_count));
    }
    let n = prep.qubit_count;
    let mut c = CircuitSpec::new(n + 1);
    c.gates.push(Gate::h(0));
    if part == HadamardPart::Imag {
        c.gates.push(Gate::sdg(0));
    }
    c.append_shifted(prep, 1)?;
    c.gates.extend(controlled(w).gates);
    c.gates.push(Gate::h(0));
    Ok(c)
}

/// Swap test on registers `1..=n` and `n+1..=2n`: ancilla `P(0) = (1 + |⟨a|b⟩|²)/2`.
pub fn swap_test(prep_a: &CircuitSpec, prep_b: &CircuitSpec) -> Result<CircuitSpec, CircuitError> {
    if prep_a.qubit_count != prep_b.qubit_count {
        return Err(CircuitError::QubitCountMismatch(
            prep_a.qubit_count,
            prep_b.qubit_count,
        ));
    }
    let n = prep_a.qubit_count;
    let mut c = CircuitSpec::new(2 * n + 1);
    c.append_shifted(prep_a, 1)?;
    c.append_shifted(prep_b, n + 1)?;
    c.gates.push(Gate::h(0));
    for q in 0..n {
        let (a, b) = (1 + q, 1 + n + q);
        // Fredkin as CX(b→a) · CCX(0,a→b) · CX(b→a).
        c.gates.push(Gate::cx(b, a)?);
        c.gates.push(Gate::cu1q(&[0, a], b, Unitary2::pauli_x())?);
        c.gates.push(Gate::cx(b, a)?);
    }
    c.gates.push(Gate::h(0));
    Ok(c)
}

/// How an overlap `⟨a|M|b⟩` is mapped onto a Hadamard test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlapForm {
    /// `prep = A`, `w = M B A†`: the expectation `⟨a|M B A†|a⟩`.
    #[default]
    Expectation,
    /// `prep = ∅`, `w = A† M B`: the expectation `⟨0|A† M B|0⟩`.
    Direct,
}

/// Hadamard-test circuit for `⟨a|M|b⟩` with `|a⟩ = bra|0⟩`, `|b⟩ = ket|0⟩`
/// and optional middle operator `M`.
pub fn overlap_test(
    bra: &CircuitSpec,
    middle: Option<&CircuitSpec>,
    ket: &CircuitSpec,
    part: HadamardPart,
    form: OverlapForm,
) -> Result<CircuitSpec, CircuitError> {
    let n = bra.qubit_count;
    if ket.qubit_count != n {
        return Err(CircuitError::QubitCountMismatch(n, ket.qubit_count));
    }
    let mut m_b = ket.clone();
    if let Some(m) = middle {
        m_b = m_b.then(m)?;
    }
    let bra_inv = inverse(bra);
    match form {
        OverlapForm::Expectation => hadamard_test(bra, &bra_inv.then(&m_b)?, part),
        OverlapForm::Direct => hadamard_test(&CircuitSpec::new(n), &m_b.then(&bra_inv)?, part),
    }
}

pub mod json {
    //! JSON gate-list representation:
    //! `{"qubits": n, "gates": [{"kind": "H", "targets": [0]}, ...]}`, with
    //! `U1Q`/`CU1Q` carrying `"matrix"` as four `[re, im]` pairs in row-major order.

    use super::*;

    #[derive(Debug, Clone, Serialize, Deserialize)]
    pub struct GateRepr {
        pub kind: String,
        pub targets: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub matrix: Option<[[f64; 2]; 4]>,
    }

    #[derive(Debug, Clone, Serialize, Deserialize)]
    pub struct CircuitRepr {
        pub qubits: usize,
        pub gates: Vec<GateRepr>,
    }

    fn matrix_repr(u: &Unitary2) -> [[f64; 2]; 4] {
        let m = u.matrix();
        [
            [m[0][0].re, m[0][0].im],
            [m[0][1].re, m[0][1].im],
            [m[1][0].re, m[1][0].im],
            [m[1][1].re, m[1][1].im],
        ]
    }

    fn matrix_from_repr(m: &[[f64; 2]; 4]) -> Result<Unitary2, CircuitError> {
        let z = |p: [f64; 2]| Complex64::new(p[0], p[1]);
        Unitary2::new([[z(m[0]), z(m[1])], [z(m[2]), z(m[3])]])
    }

    impl From<Gate> for GateRepr {
        fn from(g: Gate) -> Self {
            let matrix = match g.kind {
                GateKind::U1Q(u) | GateKind::CU1Q(u) => Some(matrix_repr(&u)),
                _ => None,
            };
            GateRepr {
                kind: g.kind.name().to_string(),
                targets: g.targets,
                matrix,
            }
        }
    }

    impl TryFrom<GateRepr> for Gate {
        type Error = CircuitError;

        fn try_from(r: GateRepr) -> Result<Self, CircuitError> {
            let payload = |name| {
                r.matrix
                    .as_ref()
                    .ok_or(CircuitError::MissingMatrix(name))
                    .and_then(matrix_from_repr)
            };
            let kind = match r.kind.to_ascii_uppercase().as_str() {
                "H" => GateKind::H,
                "X" => GateKind::X,
                "S" => GateKind::S,
                "SDG" => GateKind::Sdg,
                "SX" => GateKind::SX,
                "CX" => GateKind::CX,
                "U1Q" => GateKind::U1Q(payload("U1Q")?),
                "CU1Q" => GateKind::CU1Q(payload("CU1Q")?),
                _ => return Err(CircuitError::UnknownKind(r.kind)),
            };
            Gate::new(kind, r.targets)
        }
    }

    impl From<CircuitSpec> for CircuitRepr {
        fn from(c: CircuitSpec) -> Self {
            CircuitRepr {
                qubits: c.qubit_count,
                gates: c.gates.into_iter().map(GateRepr::from).collect(),
            }
        }
    }

    impl TryFrom<CircuitRepr> for CircuitSpec {
        type Error = CircuitError;

        fn try_from(r: CircuitRepr) -> Result<Self, CircuitError> {
            let gates = r
                .gates
                .into_iter()
                .map(Gate::try_from)
                .collect::<Result<Vec<_>, _>>()?;
            CircuitSpec::with_gates(r.qubits, gates)
        }
    }
}
