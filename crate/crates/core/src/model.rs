//! The susceptible/infective system with mutual interference exponents
//!
//! ```text
//! x1' = -beta * x1^m1 * x2^m2 - S(x1)
//! x2' =  beta * x1^m1 * x2^m2 - gamma * P(x2)
//! ```
//!
//! together with the change of variables `u_k = x_k^(1 - m_k)` that turns
//! the sublinear system into one with locally Lipschitz right-hand side when
//! `m_k >= 1/2`.

use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::math::{pow, pow_nonneg};

/// Vaccination (control) effort acting on susceptibles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ControlSpec {
    None,
    /// Fixed removal rate `u`.
    Constant {
        u: f64,
    },
    /// `S(x1) = x1^p / (v + x1^p)`.
    Saturating {
        p: f64,
        v: f64,
    },
}

impl ControlSpec {
    pub fn eval(&self, x1: f64) -> f64 {
        match *self {
            ControlSpec::None => 0.0,
            ControlSpec::Constant { u } => u,
            ControlSpec::Saturating { p, v } => {
                let xp = pow_nonneg(x1, p);
                xp / (v + xp)
            }
        }
    }

    fn violation(&self) -> Option<&'static str> {
        match *self {
            ControlSpec::None => None,
            ControlSpec::Constant { u } if !(u.is_finite() && u >= 0.0) => {
                Some("constant control u must be finite and >= 0")
            }
            ControlSpec::Saturating { p, .. } if !(p.is_finite() && p > 0.0) => {
                Some("saturating control exponent p must be > 0")
            }
            ControlSpec::Saturating { v, .. } if !(v.is_finite() && v > 0.0) => {
                Some("vaccination effort v must be > 0")
            }
            _ => None,
        }
    }
}

/// Recovery (removal) of infectives, scaled by gamma.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RecoverySpec {
    /// `P(x2) = x2`.
    Linear,
    /// `P(x2) = x2^q`.
    PowerLaw { q: f64 },
}

impl RecoverySpec {
    pub fn eval(&self, x2: f64) -> f64 {
        match *self {
            RecoverySpec::Linear => x2.max(0.0),
            RecoverySpec::PowerLaw { q } => pow_nonneg(x2, q),
        }
    }

    fn violation(&self) -> Option<&'static str> {
        match *self {
            RecoverySpec::PowerLaw { q } if !(q.is_finite() && q > 0.0) => {
                Some("recovery exponent q must be > 0")
            }
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Infection rate per contact, > 0.
    pub beta: f64,
    /// Recovery parameter, >= 0.
    pub gamma: f64,
    /// Interference exponent of susceptibles.
    pub m1: f64,
    /// Interference exponent of infectives.
    pub m2: f64,
    pub control: ControlSpec,
    pub recovery: RecoverySpec,
}

impl ModelParams {
    /// Classical bilinear model with constant vaccination:
    /// beta = 1e-4, gamma = 0.8, m1 = m2 = 1, u = 10.
    pub fn model1() -> Self {
        ModelParams {
            beta: 1e-4,
            gamma: 0.8,
            m1: 1.0,
            m2: 1.0,
            control: ControlSpec::Constant { u: 10.0 },
            recovery: RecoverySpec::Linear,
        }
    }

    /// Sublinear model with saturating vaccination and power-law recovery:
    /// beta = 0.01, gamma = 0.04, m1 = 0.8, m2 = 0.7,
    /// S(x1) = x1^0.4 / (v + x1^0.4), P(x2) = x2^1.2.
    pub fn model2(vaccination_effort: f64) -> Self {
        ModelParams {
            beta: 0.01,
            gamma: 0.04,
            m1: 0.8,
            m2: 0.7,
            control: ControlSpec::Saturating {
                p: 0.4,
                v: vaccination_effort,
            },
            recovery: RecoverySpec::PowerLaw { q: 1.2 },
        }
    }
}

/// Susceptible (`x1`) and infective (`x2`) counts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct State {
    pub x1: f64,
    pub x2: f64,
}

impl State {
    pub const fn new(x1: f64, x2: f64) -> Self {
        State { x1, x2 }
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }
}

/// `u1 = x1^(1 - m1)`, `u2 = x2^(1 - m2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransformedState {
    pub u1: f64,
    pub u2: f64,
}

/// Time derivatives of a two-component state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivativePair {
    pub d1: f64,
    pub d2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Violation {
    M1BelowHalf(f64),
    M2BelowHalf(f64),
    BetaNotPositive(f64),
    GammaNegative(f64),
    NonFinite(&'static str),
    InvalidControl(&'static str),
    InvalidRecovery(&'static str),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::M1BelowHalf(m) => write!(f, "m1 below 1/2 (m1 = {m})"),
            Violation::M2BelowHalf(m) => write!(f, "m2 below 1/2 (m2 = {m})"),
            Violation::BetaNotPositive(b) => write!(f, "beta must be > 0 (beta = {b})"),
            Violation::GammaNegative(g) => write!(f, "gamma must be >= 0 (gamma = {g})"),
            Violation::NonFinite(field) => write!(f, "{field} is not finite"),
            Violation::InvalidControl(msg) | Violation::InvalidRecovery(msg) => f.write_str(msg),
        }
    }
}

/// Result of [`validate_params`]. An empty violation list means admissible.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdmissibilityReport {
    pub violations: Vec<Violation>,
}

impl AdmissibilityReport {
    pub fn is_admissible(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Copy, Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("non-finite derivative at state ({x1}, {x2})")]
    NonFinite { x1: f64, x2: f64 },
    #[error("state component is negative: ({x1}, {x2})")]
    NegativeState { x1: f64, x2: f64 },
    #[error("exponent m{index} = {value} outside the transformable range {range}")]
    ExponentOutOfRange {
        index: u8,
        value: f64,
        range: &'static str,
    },
    #[error("transformed coordinate u{index} = {value} is not positive")]
    Singular { index: u8, value: f64 },
}

/// Collects every admissibility violation; violations are data, not errors.
pub fn validate_params(params: &ModelParams) -> AdmissibilityReport {
    let mut violations = Vec::new();
    let fields = [
        ("beta", params.beta),
        ("gamma", params.gamma),
        ("m1", params.m1),
        ("m2", params.m2),
    ];
    for (name, value) in fields {
        if !value.is_finite() {
            violations.push(Violation::NonFinite(name));
        }
    }
    if params.m1.is_finite() && params.m1 < 0.5 {
        violations.push(Violation::M1BelowHalf(params.m1));
    }
    if params.m2.is_finite() && params.m2 < 0.5 {
        violations.push(Violation::M2BelowHalf(params.m2));
    }
    if params.beta.is_finite() && params.beta <= 0.0 {
        violations.push(Violation::BetaNotPositive(params.beta));
    }
    if params.gamma.is_finite() && params.gamma < 0.0 {
        violations.push(Violation::GammaNegative(params.gamma));
    }
    if let Some(msg) = params.control.violation() {
        violations.push(Violation::InvalidControl(msg));
    }
    if let Some(msg) = params.recovery.violation() {
        violations.push(Violation::InvalidRecovery(msg));
    }
    AdmissibilityReport { violations }
}

/// New infections per unit time, `beta * x1^m1 * x2^m2`.
pub fn rate_of_spread(params: &ModelParams, state: State) -> f64 {
    params.beta * pow_nonneg(state.x1, params.m1) * pow_nonneg(state.x2, params.m2)
}

pub fn rhs(params: &ModelParams, state: State) -> Result<DerivativePair, ModelError> {
    let flow = rate_of_spread(params, state);
    let d = DerivativePair {
        d1: -flow - params.control.eval(state.x1),
        d2: flow - params.gamma * params.recovery.eval(state.x2),
    };
    if d.d1.is_finite() && d.d2.is_finite() {
        Ok(d)
    } else {
        Err(ModelError::NonFinite {
            x1: state.x1,
            x2: state.x2,
        })
    }
}

fn check_transformable(params: &ModelParams) -> Result<(), ModelError> {
    for (index, value) in [(1, params.m1), (2, params.m2)] {
        if !(value > 0.0 && value < 1.0) {
            return Err(ModelError::ExponentOutOfRange {
                index,
                value,
                range: "(0, 1)",
            });
        }
    }
    Ok(())
}

pub fn to_transformed(state: State, params: &ModelParams) -> Result<TransformedState, ModelError> {
    check_transformable(params)?;
    if state.x1 < 0.0 || state.x2 < 0.0 {
        return Err(ModelError::NegativeState {
            x1: state.x1,
            x2: state.x2,
        });
    }
    Ok(TransformedState {
        u1: pow_nonneg(state.x1, 1.0 - params.m1),
        u2: pow_nonneg(state.x2, 1.0 - params.m2),
    })
}

pub fn from_transformed(
    tstate: TransformedState,
    params: &ModelParams,
) -> Result<State, ModelError> {
    check_transformable(params)?;
    if tstate.u1 < 0.0 || tstate.u2 < 0.0 {
        return Err(ModelError::NegativeState {
            x1: tstate.u1,
            x2: tstate.u2,
        });
    }
    Ok(State {
        x1: pow_nonneg(tstate.u1, 1.0 / (1.0 - params.m1)),
        x2: pow_nonneg(tstate.u2, 1.0 / (1.0 - params.m2)),
    })
}

/// Right-hand side of the system in `u` coordinates. Requires
/// `1/2 <= m_k < 1` and strictly positive coordinates.
pub fn transformed_rhs(
    params: &ModelParams,
    tstate: TransformedState,
) -> Result<DerivativePair, ModelError> {
    for (index, value) in [(1, params.m1), (2, params.m2)] {
        if !(0.5..1.0).contains(&value) {
            return Err(ModelError::ExponentOutOfRange {
                index,
                value,
                range: "[1/2, 1)",
            });
        }
    }
    for (index, value) in [(1, tstate.u1), (2, tstate.u2)] {
        if value.is_nan() || value <= 0.0 {
            return Err(ModelError::Singular { index, value });
        }
    }
    let (m1, m2) = (params.m1, params.m2);
    let (a1, a2) = (1.0 - m1, 1.0 - m2);
    let x1 = pow_nonneg(tstate.u1, 1.0 / a1);
    let x2 = pow_nonneg(tstate.u2, 1.0 / a2);
    let d1 = -a1
        * (params.beta * pow_nonneg(tstate.u2, m2 / a2)
            + pow(tstate.u1, -m1 / a1) * params.control.eval(x1));
    let d2 = a2
        * (params.beta * pow_nonneg(tstate.u1, m1 / a1)
            - params.gamma * pow(tstate.u2, -m2 / a2) * params.recovery.eval(x2));
    if d1.is_finite() && d2.is_finite() {
        Ok(DerivativePair { d1, d2 })
    } else {
        Err(ModelError::NonFinite { x1, x2 })
    }
}
