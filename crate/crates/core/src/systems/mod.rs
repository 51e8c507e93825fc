//! Open-loop plants `x' = f(x, u, w)` together with decomposition functions
//! `F(x, xhat, u, uhat, w, what)`.
//!
//! A decomposition function agrees with `f` on the diagonal, is increasing in
//! `x` (with coordinate `i` pinned on row `i`) and in `u`, `w`, and decreasing
//! in the hatted arguments. Called with the pairs in increasing order it
//! returns a lower bound of each `f_i` over the box with `z_i = x_i`; called
//! with the pairs swapped it returns the matching upper bound.

use std::fmt;

use crate::error::{ReachError, Result};

pub mod elementary;
pub mod linear;
pub mod oracle;
pub mod vehicle;

pub use elementary::{d_bilinear, d_cos, d_sin};
pub use linear::LinearSystemModel;
pub use oracle::{tight_decomposition_oracle, OracleConfig};
pub use vehicle::VehicleModel;

/// Arguments of a decomposition function evaluation.
#[derive(Debug, Clone, Copy)]
pub struct DecompositionArgs<'a> {
    pub x: &'a [f64],
    pub xhat: &'a [f64],
    pub u: &'a [f64],
    pub uhat: &'a [f64],
    pub w: &'a [f64],
    pub what: &'a [f64],
}

impl<'a> DecompositionArgs<'a> {
    /// Diagonal arguments `(x, x, u, u, w, w)`.
    pub fn diagonal(x: &'a [f64], u: &'a [f64], w: &'a [f64]) -> Self {
        Self {
            x,
            xhat: x,
            u,
            uhat: u,
            w,
            what: w,
        }
    }

    /// The same pairs with every argument swapped with its hatted partner.
    pub fn swapped(&self) -> Self {
        Self {
            x: self.xhat,
            xhat: self.x,
            u: self.uhat,
            uhat: self.u,
            w: self.what,
            what: self.w,
        }
    }

    pub(crate) fn check_dims(&self, n: usize, p: usize, q: usize) -> Result<()> {
        let checks = [
            ("state argument", n, self.x.len()),
            ("state argument", n, self.xhat.len()),
            ("input argument", p, self.u.len()),
            ("input argument", p, self.uhat.len()),
            ("disturbance argument", q, self.w.len()),
            ("disturbance argument", q, self.what.len()),
        ];
        for (what, expected, got) in checks {
            if expected != got {
                return Err(ReachError::DimensionMismatch {
                    what,
                    expected,
                    got,
                });
            }
        }
        Ok(())
    }

    /// `Some(true)` when every pair is increasing (within `tol`), `Some(false)`
    /// when every pair is decreasing, `None` for mixed orderings.
    pub fn orientation(&self, tol: f64) -> Option<bool> {
        let pairs = [(self.x, self.xhat), (self.u, self.uhat), (self.w, self.what)];
        let increasing = pairs
            .iter()
            .all(|(a, b)| a.iter().zip(b.iter()).all(|(p, q)| *p <= *q + tol));
        if increasing {
            return Some(true);
        }
        let decreasing = pairs
            .iter()
            .all(|(a, b)| a.iter().zip(b.iter()).all(|(p, q)| *q <= *p + tol));
        decreasing.then_some(false)
    }
}

/// A plant with a decomposition function.
pub trait SystemModel: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn state_dim(&self) -> usize;

    fn input_dim(&self) -> usize;

    fn disturbance_dim(&self) -> usize;

    fn state_labels(&self) -> Vec<String> {
        (0..self.state_dim()).map(|i| format!("x{i}")).collect()
    }

    fn vector_field(&self, x: &[f64], u: &[f64], w: &[f64]) -> Result<Vec<f64>>;

    /// Row `i` of the decomposition function.
    fn decomposition_row(&self, i: usize, args: &DecompositionArgs<'_>) -> Result<f64>;

    fn decomposition(&self, args: &DecompositionArgs<'_>) -> Result<Vec<f64>> {
        (0..self.state_dim())
            .map(|i| self.decomposition_row(i, args))
            .collect()
    }
}

/// Tolerance for rounding-level inversions of argument pairs.
pub(crate) const ORDER_TOL: f64 = 1e-9;

#[cfg(test)]
pub(crate) mod test_support {
    use rand::Rng;

    /// Two sorted samples per coordinate of `[lo, hi]`.
    pub fn ordered_pair<R: Rng>(rng: &mut R, lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut a = Vec::with_capacity(lo.len());
        let mut b = Vec::with_capacity(lo.len());
        for (l, h) in lo.iter().zip(hi) {
            let p = rng.gen_range(*l..=*h);
            let q = rng.gen_range(*l..=*h);
            a.push(p.min(q));
            b.push(p.max(q));
        }
        (a, b)
    }

    pub fn uniform_in<R: Rng>(rng: &mut R, lo: &[f64], hi: &[f64]) -> Vec<f64> {
        lo.iter()
            .zip(hi)
            .map(|(l, h)| if l == h { *l } else { rng.gen_range(*l..=*h) })
            .collect()
    }
}

/// The built-in plants.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Plant {
    Vehicle(VehicleModel),
    Linear(LinearSystemModel),
}

impl Plant {
    pub fn as_linear(&self) -> Option<&LinearSystemModel> {
        match self {
            Plant::Linear(m) => Some(m),
            Plant::Vehicle(_) => None,
        }
    }

    fn inner(&self) -> &dyn SystemModel {
        match self {
            Plant::Vehicle(m) => m,
            Plant::Linear(m) => m,
        }
    }
}

impl SystemModel for Plant {
    fn name(&self) -> &str {
        self.inner().name()
    }

    fn state_dim(&self) -> usize {
        self.inner().state_dim()
    }

    fn input_dim(&self) -> usize {
        self.inner().input_dim()
    }

    fn disturbance_dim(&self) -> usize {
        self.inner().disturbance_dim()
    }

    fn state_labels(&self) -> Vec<String> {
        self.inner().state_labels()
    }

    fn vector_field(&self, x: &[f64], u: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        self.inner().vector_field(x, u, w)
    }

    fn decomposition_row(&self, i: usize, args: &DecompositionArgs<'_>) -> Result<f64> {
        self.inner().decomposition_row(i, args)
    }

    fn decomposition(&self, args: &DecompositionArgs<'_>) -> Result<Vec<f64>> {
        self.inner().decomposition(args)
    }
}

impl From<VehicleModel> for Plant {
    fn from(m: VehicleModel) -> Self {
        Plant::Vehicle(m)
    }
}

impl From<LinearSystemModel> for Plant {
    fn from(m: LinearSystemModel) -> Self {
        Plant::Linear(m)
    }
}
