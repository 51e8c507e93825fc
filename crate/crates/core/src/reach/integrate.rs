//! Fixed-step explicit integration.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ReachError, Result};
use crate::interval::EmbeddingState;
use crate::systems::ORDER_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Euler,
    #[default]
    Rk4,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Euler => "euler",
            Method::Rk4 => "rk4",
        })
    }
}

impl FromStr for Method {
    type Err = ReachError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "euler" => Ok(Method::Euler),
            "rk4" => Ok(Method::Rk4),
            other => Err(ReachError::Config(format!(
                "unknown integrator `{other}` (expected euler or rk4)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Integration step (s).
    pub step: f64,
    /// Actuation step (s), an integer multiple of `step`.
    pub actuation_step: f64,
}

impl IntegratorConfig {
    /// rk4 with `step = dt / 25`.
    pub fn default_for(actuation_step: f64) -> Self {
        Self {
            method: Method::Rk4,
            step: actuation_step / 25.0,
            actuation_step,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(ReachError::Config(format!("integration step must be positive, got {}", self.step)));
        }
        if !(self.actuation_step >= self.step) {
            return Err(ReachError::Config(format!(
                "actuation step {} is shorter than the integration step {}",
                self.actuation_step, self.step
            )));
        }
        self.steps_for(self.actuation_step).map(|_| ())
    }

    /// Number of steps covering `duration`, which must be a whole multiple
    /// of the step.
    pub fn steps_for(&self, duration: f64) -> Result<usize> {
        if duration < 0.0 || !duration.is_finite() {
            return Err(ReachError::Config(format!("duration must be non-negative, got {duration}")));
        }
        let ratio = duration / self.step;
        let k = ratio.round();
        if (ratio - k).abs() > 1e-9 * ratio.max(1.0) {
            return Err(ReachError::Config(format!(
                "duration {duration} is not a multiple of the integration step {}",
                self.step
            )));
        }
        Ok(k as usize)
    }
}

fn axpy(y: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

fn check_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(ReachError::NonFinite(format!("component {i} of the state is {}", v[i]))),
        None => Ok(()),
    }
}

/// One step of the chosen method on a flat state.
fn step<F>(f: &F, y: &[f64], h: f64, method: Method) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let k1 = f(y)?;
    check_finite(&k1)?;
    match method {
        Method::Euler => Ok(axpy(y, h, &k1)),
        Method::Rk4 => {
            let k2 = f(&axpy(y, 0.5 * h, &k1))?;
            let k3 = f(&axpy(y, 0.5 * h, &k2))?;
            let k4 = f(&axpy(y, h, &k3))?;
            Ok((0..y.len())
                .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect())
        }
    }
}

/// Integrates `y' = f(y)` over `duration`.
pub fn integrate_ode<F>(f: F, y0: &[f64], duration: f64, cfg: &IntegratorConfig) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let steps = cfg.steps_for(duration)?;
    let mut y = y0.to_vec();
    for _ in 0..steps {
        y = step(&f, &y, cfg.step, cfg.method)?;
        check_finite(&y)?;
    }
    Ok(y)
}

/// Integrates an embedding system over `duration`, checking after every
/// step that the state is finite and ordered up to rounding.
pub fn integrate_embedding<F>(
    rhs: F,
    init: &EmbeddingState,
    duration: f64,
    cfg: &IntegratorConfig,
) -> Result<EmbeddingState>
where
    F: Fn(&EmbeddingState) -> Result<Vec<f64>>,
{
    if let Some(i) = (0..init.dim()).find(|&i| init.x[i] > init.xhat[i]) {
        return Err(ReachError::OrderingViolation {
            coord: i,
            lower: init.x[i],
            upper: init.xhat[i],
        });
    }
    let steps = cfg.steps_for(duration)?;
    let flat = |y: &[f64]| rhs(&EmbeddingState::from_stacked(y));
    let mut y = init.stacked();
    let n = init.dim();
    for _ in 0..steps {
        y = step(&flat, &y, cfg.step, cfg.method)?;
        check_finite(&y)?;
        if let Some(i) = (0..n).find(|&i| y[i] > y[n + i] + ORDER_TOL) {
            return Err(ReachError::OrderingViolation {
                coord: i,
                lower: y[i],
                upper: y[n + i],
            });
        }
    }
    Ok(EmbeddingState::from_stacked(&y))
}
