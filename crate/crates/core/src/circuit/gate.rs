use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{GqcoError, Result};
use crate::scalar::Real;

/// Gate families in the generation pool.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateKind {
    Identity,
    H,
    RX,
    RY,
    RZ,
    CNOT,
    RZZ,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            Self::Identity => 0,
            Self::H | Self::RX | Self::RY | Self::RZ => 1,
            Self::CNOT | Self::RZZ => 2,
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(self, Self::RX | Self::RY | Self::RZ | Self::RZZ)
    }

    /// Gates whose matrix is diagonal in the computational basis.
    pub fn is_diagonal(self) -> bool {
        matches!(self, Self::Identity | Self::RZ | Self::RZZ)
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// The six discrete rotation angles of the pool, in vocabulary order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Angle {
    PlusPiOver3,
    MinusPiOver3,
    PlusPiOver4,
    MinusPiOver4,
    PlusPiOver5,
    MinusPiOver5,
}

impl Angle {
    pub const ALL: [Angle; 6] = [
        Angle::PlusPiOver3,
        Angle::MinusPiOver3,
        Angle::PlusPiOver4,
        Angle::MinusPiOver4,
        Angle::PlusPiOver5,
        Angle::MinusPiOver5,
    ];

    pub fn radians<T: Real>(self) -> T {
        let pi = T::PI();
        match self {
            Angle::PlusPiOver3 => pi / T::lit(3.0),
            Angle::MinusPiOver3 => -pi / T::lit(3.0),
            Angle::PlusPiOver4 => pi / T::lit(4.0),
            Angle::MinusPiOver4 => -pi / T::lit(4.0),
            Angle::PlusPiOver5 => pi / T::lit(5.0),
            Angle::MinusPiOver5 => -pi / T::lit(5.0),
        }
    }

    /// Matches a radian value against the pool within `1e-9`.
    pub fn from_radians(theta: f64) -> Option<Angle> {
        Angle::ALL.into_iter().find(|a| (a.radians::<f64>() - theta).abs() < 1e-9)
    }
}

/// A pool gate: discrete angle, fixed qubit slots.
///
/// CNOT stores `[control, target]`; RZZ stores its pair ascending.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GateSpec {
    pub kind: GateKind,
    qubits: [usize; 2],
    pub angle: Option<Angle>,
}

impl GateSpec {
    pub fn identity() -> Self {
        Self { kind: GateKind::Identity, qubits: [0, 0], angle: None }
    }

    pub fn h(q: usize) -> Self {
        Self { kind: GateKind::H, qubits: [q, 0], angle: None }
    }

    pub fn rotation(kind: GateKind, q: usize, angle: Angle) -> Self {
        assert!(matches!(kind, GateKind::RX | GateKind::RY | GateKind::RZ), "{kind} is not a 1-qubit rotation");
        Self { kind, qubits: [q, 0], angle: Some(angle) }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        assert_ne!(control, target);
        Self { kind: GateKind::CNOT, qubits: [control, target], angle: None }
    }

    pub fn rzz(a: usize, b: usize, angle: Angle) -> Self {
        assert_ne!(a, b);
        Self { kind: GateKind::RZZ, qubits: [a.min(b), a.max(b)], angle: Some(angle) }
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits[..self.kind.arity()]
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.qubits().iter().copied().max()
    }

    pub fn to_gate<T: Real>(&self) -> Gate<T> {
        Gate { kind: self.kind, qubits: self.qubits, theta: self.angle.map(|a| a.radians()).unwrap_or_else(T::zero) }
    }
}

/// A gate with a continuous angle; used by the simulator and by baselines.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate<T> {
    pub kind: GateKind,
    qubits: [usize; 2],
    /// Rotation angle in radians (ignored for H, CNOT, Identity).
    pub theta: T,
}

impl<T: Real> Gate<T> {
    pub fn new(kind: GateKind, qubits: &[usize], theta: T) -> Result<Self> {
        if qubits.len() != kind.arity() {
            return Err(GqcoError::domain(format!("{kind} takes {} qubits, got {}", kind.arity(), qubits.len())));
        }
        let mut q = [0; 2];
        q[..qubits.len()].copy_from_slice(qubits);
        if kind.arity() == 2 {
            if q[0] == q[1] {
                return Err(GqcoError::domain(format!("{kind} needs distinct qubits")));
            }
            if kind == GateKind::RZZ && q[0] > q[1] {
                q.swap(0, 1);
            }
        }
        if !theta.is_finite() {
            return Err(GqcoError::domain("non-finite gate angle"));
        }
        Ok(Self { kind, qubits: q, theta })
    }

    pub fn h(q: usize) -> Self {
        Self { kind: GateKind::H, qubits: [q, 0], theta: T::zero() }
    }

    pub fn rx(q: usize, theta: T) -> Self {
        Self { kind: GateKind::RX, qubits: [q, 0], theta }
    }

    pub fn ry(q: usize, theta: T) -> Self {
        Self { kind: GateKind::RY, qubits: [q, 0], theta }
    }

    pub fn rz(q: usize, theta: T) -> Self {
        Self { kind: GateKind::RZ, qubits: [q, 0], theta }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        assert_ne!(control, target);
        Self { kind: GateKind::CNOT, qubits: [control, target], theta: T::zero() }
    }

    pub fn rzz(a: usize, b: usize, theta: T) -> Self {
        assert_ne!(a, b);
        Self { kind: GateKind::RZZ, qubits: [a.min(b), a.max(b)], theta }
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits[..self.kind.arity()]
    }
}

/// Common view used by circuit metrics.
pub trait GateLike {
    fn kind(&self) -> GateKind;
    fn qubits(&self) -> &[usize];
}

impl GateLike for GateSpec {
    fn kind(&self) -> GateKind {
        self.kind
    }
    fn qubits(&self) -> &[usize] {
        GateSpec::qubits(self)
    }
}

impl<T: Real> GateLike for Gate<T> {
    fn kind(&self) -> GateKind {
        self.kind
    }
    fn qubits(&self) -> &[usize] {
        Gate::qubits(self)
    }
}

/// JSON form of one gate: `{"kind": str, "qubits": [ints], "angle": f64?}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateJson {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub angle: Option<f64>,
}

impl From<&GateSpec> for GateJson {
    fn from(g: &GateSpec) -> Self {
        Self { kind: g.kind, qubits: g.qubits().to_vec(), angle: g.angle.map(|a| a.radians::<f64>()) }
    }
}

impl<T: Real> From<&Gate<T>> for GateJson {
    fn from(g: &Gate<T>) -> Self {
        Self {
            kind: g.kind,
            qubits: g.qubits().to_vec(),
            angle: g.kind.is_rotation().then(|| g.theta.as_f64()),
        }
    }
}

impl TryFrom<&GateJson> for GateSpec {
    type Error = GqcoError;

    fn try_from(j: &GateJson) -> Result<Self> {
        let need = |ok: bool, what: &str| if ok { Ok(()) } else { Err(GqcoError::domain(format!("{}: {what}", j.kind))) };
        need(j.qubits.len() == j.kind.arity(), "wrong qubit count")?;
        let angle = match (j.kind.is_rotation(), j.angle) {
            (true, Some(theta)) => {
                Some(Angle::from_radians(theta).ok_or_else(|| GqcoError::domain(format!("angle {theta} not in pool")))?)
            }
            (true, None) => return Err(GqcoError::domain(format!("{} needs an angle", j.kind))),
            (false, None) => None,
            (false, Some(_)) => return Err(GqcoError::domain(format!("{} takes no angle", j.kind))),
        };
        Ok(match j.kind {
            GateKind::Identity => GateSpec::identity(),
            GateKind::H => GateSpec::h(j.qubits[0]),
            GateKind::RX | GateKind::RY | GateKind::RZ => GateSpec::rotation(j.kind, j.qubits[0], angle.unwrap()),
            GateKind::CNOT => {
                need(j.qubits[0] != j.qubits[1], "qubits must differ")?;
                GateSpec::cnot(j.qubits[0], j.qubits[1])
            }
            GateKind::RZZ => {
                need(j.qubits[0] != j.qubits[1], "qubits must differ")?;
                GateSpec::rzz(j.qubits[0], j.qubits[1], angle.unwrap())
            }
        })
    }
}

impl<T: Real> TryFrom<&GateJson> for Gate<T> {
    type Error = GqcoError;

    fn try_from(j: &GateJson) -> Result<Self> {
        Gate::new(j.kind, &j.qubits, T::lit(j.angle.unwrap_or(0.0)))
    }
}
