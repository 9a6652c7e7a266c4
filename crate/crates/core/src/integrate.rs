//! Fixed-step classical Runge-Kutta integration of the model.

use alloc::vec::Vec;

use thiserror::Error;

use crate::model::{self, ModelError, ModelParams, State, TransformedState};

/// What to do when the susceptible compartment empties.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StopRule {
    /// Integrate the full horizon; negative values are left as computed.
    None,
    /// Halt at the first step that drives `x1` to zero or below. The
    /// offending state is not emitted.
    #[default]
    StopWhenX1NonPositive,
    /// Clamp both components at zero after every step.
    ClampAtZero,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrationConfig {
    pub step: f64,
    pub t_end: f64,
    /// Emit every n-th step (n >= 1).
    pub sample_every: usize,
    pub stop_rule: StopRule,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig {
            step: 1e-3,
            t_end: 10.0,
            sample_every: 1,
            stop_rule: StopRule::default(),
        }
    }
}

impl IntegrationConfig {
    pub fn validate(&self) -> Result<(), IntegrationError> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(IntegrationError::InvalidConfig("step must be > 0"));
        }
        if !(self.t_end.is_finite() && self.t_end > self.step) {
            return Err(IntegrationError::InvalidConfig("t_end must exceed step"));
        }
        if self.sample_every == 0 {
            return Err(IntegrationError::InvalidConfig("sample_every must be >= 1"));
        }
        Ok(())
    }

    /// Number of RK4 steps covering `[0, t_end]`.
    pub fn steps(&self) -> usize {
        crate::math::round(self.t_end / self.step) as usize
    }
}

/// Sampled solution. `times[i]` is the time of `states[i]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// Time at which the stop rule halted integration, if it fired.
    pub truncated_at: Option<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn push(&mut self, t: f64, state: State) {
        self.times.push(t);
        self.states.push(state);
    }
}

#[derive(Clone, Copy, Debug, Error, PartialEq)]
pub enum IntegrationError {
    #[error("invalid integration config: {0}")]
    InvalidConfig(&'static str),
    #[error("invalid initial state: {0}")]
    InvalidInitialState(&'static str),
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("model evaluation failed at t = {t}: {source}")]
    Model { t: f64, source: ModelError },
}

/// One classical RK4 step of `y' = f(y)` for a two-component system.
pub fn rk4_step<F, E>(f: &F, y: [f64; 2], h: f64) -> Result<[f64; 2], E>
where
    F: Fn([f64; 2]) -> Result<[f64; 2], E>,
{
    let add = |a: [f64; 2], k: [f64; 2], s: f64| [a[0] + s * k[0], a[1] + s * k[1]];
    let k1 = f(y)?;
    let k2 = f(add(y, k1, h / 2.0))?;
    let k3 = f(add(y, k2, h / 2.0))?;
    let k4 = f(add(y, k3, h))?;
    Ok([
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ])
}

/// Integrates the model from `init` at `t = 0`. The first sample is `init`.
pub fn integrate(
    params: &ModelParams,
    init: State,
    config: &IntegrationConfig,
) -> Result<Trajectory, IntegrationError> {
    config.validate()?;
    if !(init.is_finite() && init.x1 >= 0.0 && init.x2 >= 0.0) {
        return Err(IntegrationError::InvalidInitialState(
            "components must be finite and non-negative",
        ));
    }
    let rhs = |y: [f64; 2]| model::rhs(params, State::new(y[0], y[1])).map(|d| [d.d1, d.d2]);
    let n = config.steps();
    let mut traj = Trajectory::default();
    traj.push(0.0, init);
    let mut y = [init.x1, init.x2];
    for i in 1..=n {
        let t = i as f64 * config.step;
        let mut next = rk4_step(&rhs, y, config.step)
            .map_err(|source| IntegrationError::Model { t, source })?;
        if !(next[0].is_finite() && next[1].is_finite()) {
            return Err(IntegrationError::NonFinite { t });
        }
        match config.stop_rule {
            StopRule::None => {}
            StopRule::StopWhenX1NonPositive => {
                if next[0] < 0.0 || (next[0] == 0.0 && y[0] > 0.0) {
                    traj.truncated_at = Some(t);
                    break;
                }
            }
            StopRule::ClampAtZero => {
                next[0] = next[0].max(0.0);
                next[1] = next[1].max(0.0);
            }
        }
        y = next;
        if i % config.sample_every == 0 {
            traj.push(t, State::new(y[0], y[1]));
        }
    }
    Ok(traj)
}

/// Integrates the system in `u = x^(1-m)` coordinates and maps every sample
/// back. Requires `1/2 <= m_k < 1` and a strictly positive initial state.
pub fn integrate_transformed(
    params: &ModelParams,
    init: State,
    config: &IntegrationConfig,
) -> Result<Trajectory, IntegrationError> {
    config.validate()?;
    if !(init.is_finite() && init.x1 > 0.0 && init.x2 > 0.0) {
        return Err(IntegrationError::InvalidInitialState(
            "components must be finite and strictly positive",
        ));
    }
    let model_err = |t: f64| move |source| IntegrationError::Model { t, source };
    let u0 = model::to_transformed(init, params).map_err(model_err(0.0))?;
    let rhs = |u: [f64; 2]| {
        model::transformed_rhs(params, TransformedState { u1: u[0], u2: u[1] })
            .map(|d| [d.d1, d.d2])
    };
    let n = config.steps();
    let mut traj = Trajectory::default();
    traj.push(
        0.0,
        model::from_transformed(u0, params).map_err(model_err(0.0))?,
    );
    let mut u = [u0.u1, u0.u2];
    for i in 1..=n {
        let t = i as f64 * config.step;
        let next = rk4_step(&rhs, u, config.step).map_err(model_err(t))?;
        if !(next[0].is_finite() && next[1].is_finite()) {
            return Err(IntegrationError::NonFinite { t });
        }
        if next[0] <= 0.0 && config.stop_rule == StopRule::StopWhenX1NonPositive {
            traj.truncated_at = Some(t);
            break;
        }
        for (index, value) in [(1, next[0]), (2, next[1])] {
            if value <= 0.0 {
                return Err(IntegrationError::Model {
                    t,
                    source: ModelError::Singular { index, value },
                });
            }
        }
        u = next;
        if i % config.sample_every == 0 {
            let tstate = TransformedState { u1: u[0], u2: u[1] };
            traj.push(
                t,
                model::from_transformed(tstate, params).map_err(model_err(t))?,
            );
        }
    }
    Ok(traj)
}
