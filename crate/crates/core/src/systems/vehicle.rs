//! Kinematic vehicle with state `[p_x, p_y, phi, v]`, input
//! `[acceleration, front wheel angle]` and an additive disturbance on the
//! acceleration.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::elementary::{cos_range, product_range, sin_range};
use super::{DecompositionArgs, SystemModel, ORDER_TOL};
use crate::error::{ReachError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleModel {
    /// Distance from the center of mass to the front axle (m).
    pub l_f: f64,
    /// Distance from the center of mass to the rear axle (m).
    pub l_r: f64,
    /// Optional steering saturation (rad), applied before the slip angle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steer_limit: Option<f64>,
    /// Use `l_r` instead of `l_f` in the slip-angle numerator (the usual
    /// kinematic bicycle). Off by default.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub rear_slip: bool,
}

impl Default for VehicleModel {
    fn default() -> Self {
        Self {
            l_f: 1.0,
            l_r: 1.0,
            steer_limit: None,
            rear_slip: false,
        }
    }
}

impl VehicleModel {
    pub fn new(l_f: f64, l_r: f64) -> Result<Self> {
        Self::with_steer_limit(l_f, l_r, None)
    }

    pub fn with_steer_limit(l_f: f64, l_r: f64, steer_limit: Option<f64>) -> Result<Self> {
        let m = Self {
            l_f,
            l_r,
            steer_limit,
            rear_slip: false,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l_f > 0.0 && self.l_r > 0.0) {
            return Err(ReachError::Config(format!(
                "vehicle lengths must be positive, got l_f = {}, l_r = {}",
                self.l_f, self.l_r
            )));
        }
        if let Some(s) = self.steer_limit {
            if !(s > 0.0 && s < FRAC_PI_2) {
                return Err(ReachError::Config(format!(
                    "steering limit must lie in (0, pi/2), got {s}"
                )));
            }
        }
        Ok(())
    }

    /// Slip angle `atan(l_f / (l_f + l_r) * tan(u2))`, increasing in `u2`.
    pub fn slip_angle(&self, u2: f64) -> Result<f64> {
        let u2 = match self.steer_limit {
            Some(s) => u2.clamp(-s, s),
            None => u2,
        };
        if !(u2.abs() < FRAC_PI_2) {
            return Err(ReachError::InvalidArgument(format!(
                "steering angle {u2} is outside (-pi/2, pi/2)"
            )));
        }
        let num = if self.rear_slip { self.l_r } else { self.l_f };
        Ok((num / (self.l_f + self.l_r) * u2.tan()).atan())
    }
}

impl SystemModel for VehicleModel {
    fn name(&self) -> &str {
        "vehicle"
    }

    fn state_dim(&self) -> usize {
        4
    }

    fn input_dim(&self) -> usize {
        2
    }

    fn disturbance_dim(&self) -> usize {
        1
    }

    fn state_labels(&self) -> Vec<String> {
        ["p_x", "p_y", "phi", "v"].map(String::from).to_vec()
    }

    fn vector_field(&self, x: &[f64], u: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        DecompositionArgs::diagonal(x, u, w).check_dims(4, 2, 1)?;
        let (phi, v) = (x[2], x[3]);
        let beta = self.slip_angle(u[1])?;
        let heading = phi + beta;
        Ok(vec![
            v * heading.cos(),
            v * heading.sin(),
            (v / self.l_r) * beta.sin(),
            u[0] + w[0],
        ])
    }

    fn decomposition_row(&self, i: usize, a: &DecompositionArgs<'_>) -> Result<f64> {
        a.check_dims(4, 2, 1)?;
        if i >= 4 {
            return Err(ReachError::IndexOutOfRange { index: i, len: 4 });
        }
        if i == 3 {
            return Ok(a.u[0] + a.w[0]);
        }
        let lower = a.orientation(ORDER_TOL).ok_or_else(|| {
            ReachError::InvalidArgument("vehicle decomposition needs consistently ordered pairs".into())
        })?;
        let pick = |(lo, hi): (f64, f64)| if lower { lo } else { hi };
        let span = |p: f64, q: f64| (p.min(q), p.max(q));
        let beta = self.slip_angle(a.u[1])?;
        let beta_hat = self.slip_angle(a.uhat[1])?;
        let (v, v_hat) = (a.x[3], a.xhat[3]);
        let value = match i {
            0 => pick(product_range(
                span(v, v_hat),
                cos_range(a.x[2] + beta, a.xhat[2] + beta_hat),
            )),
            1 => pick(product_range(
                span(v, v_hat),
                sin_range(a.x[2] + beta, a.xhat[2] + beta_hat),
            )),
            _ => pick(product_range(
                span(v / self.l_r, v_hat / self.l_r),
                sin_range(beta, beta_hat),
            )),
        };
        Ok(value)
    }
}
