//! Closed-loop embedding systems: right-hand sides on the stacked state
//! `(x, xhat)` built from a plant decomposition and a network inclusion
//! function.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bounds::{crown_bounds, CrownOptions, LinearBounds};
use crate::error::{ReachError, Result};
use crate::interval::{metzler_split, replace_coord, EmbeddingState, IntervalBox};
use crate::network::FeedForwardNetwork;
use crate::systems::{DecompositionArgs, LinearSystemModel, Plant, SystemModel, ORDER_TOL};

/// How the network inclusion function is wired into the embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// One CROWN call on `[x, xhat]`, evaluated on the whole box.
    Global,
    /// One CROWN call on `[x, xhat]`, evaluated on each pinched face.
    Hybrid,
    /// A CROWN call per pinched face (`2n` per evaluation).
    Local,
    /// Hybrid evaluation of bounds frozen on the partition box.
    FrozenHybrid,
    /// Closed-loop linear form with the combined Metzler split.
    Linear,
    /// Closed-loop linear form with separate Metzler splits.
    LinearHybrid,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Global,
        Strategy::Hybrid,
        Strategy::Local,
        Strategy::FrozenHybrid,
        Strategy::Linear,
        Strategy::LinearHybrid,
    ];

    pub fn cli_name(self) -> &'static str {
        match self {
            Strategy::Global => "global",
            Strategy::Hybrid => "hybrid",
            Strategy::Local => "local",
            Strategy::FrozenHybrid => "frozen-hybrid",
            Strategy::Linear => "linear",
            Strategy::LinearHybrid => "linear-hybrid",
        }
    }

    /// Short tag: G, H, L, Bs, Lin, LinH.
    pub fn tag(self) -> &'static str {
        match self {
            Strategy::Global => "G",
            Strategy::Hybrid => "H",
            Strategy::Local => "L",
            Strategy::FrozenHybrid => "Bs",
            Strategy::Linear => "Lin",
            Strategy::LinearHybrid => "LinH",
        }
    }

    pub fn needs_linear_plant(self) -> bool {
        matches!(self, Strategy::Linear | Strategy::LinearHybrid)
    }

    pub fn is_frozen(self) -> bool {
        self == Strategy::FrozenHybrid
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for Strategy {
    type Err = ReachError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Strategy::ALL
            .into_iter()
            .find(|st| st.cli_name().eq_ignore_ascii_case(s) || st.tag().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                ReachError::Config(format!(
                    "unknown strategy `{s}` (expected one of global, hybrid, local, frozen-hybrid, linear, linear-hybrid)"
                ))
            })
    }
}

/// A plant in feedback with a network controller `u = N(x)`.
#[derive(Debug)]
pub struct ClosedLoop {
    plant: Plant,
    net: FeedForwardNetwork,
    crown: CrownOptions,
    crown_calls: AtomicU64,
}

impl ClosedLoop {
    pub fn new(plant: Plant, net: FeedForwardNetwork, crown: CrownOptions) -> Result<Self> {
        if net.input_dim() != plant.state_dim() {
            return Err(ReachError::DimensionMismatch {
                what: "controller input vs plant state",
                expected: plant.state_dim(),
                got: net.input_dim(),
            });
        }
        if net.output_dim() != plant.input_dim() {
            return Err(ReachError::DimensionMismatch {
                what: "controller output vs plant input",
                expected: plant.input_dim(),
                got: net.output_dim(),
            });
        }
        Ok(Self {
            plant,
            net,
            crown,
            crown_calls: AtomicU64::new(0),
        })
    }

    pub fn plant(&self) -> &Plant {
        &self.plant
    }

    pub fn network(&self) -> &FeedForwardNetwork {
        &self.net
    }

    pub fn crown_options(&self) -> &CrownOptions {
        &self.crown
    }

    pub fn state_dim(&self) -> usize {
        self.plant.state_dim()
    }

    /// Number of CROWN computations since construction or the last reset.
    pub fn crown_calls(&self) -> u64 {
        self.crown_calls.load(Ordering::Relaxed)
    }

    pub fn reset_crown_calls(&self) {
        self.crown_calls.store(0, Ordering::Relaxed);
    }

    /// CROWN envelopes of the controller on `b`, counted.
    pub fn crown(&self, b: &IntervalBox) -> Result<LinearBounds> {
        self.crown_calls.fetch_add(1, Ordering::Relaxed);
        crown_bounds(&self.net, b, &self.crown)
    }

    /// `f(x, N(x), w)`.
    pub fn field(&self, x: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        let u = self.net.forward(x)?;
        self.plant.vector_field(x, &u, w)
    }

    fn check_disturbance(&self, w: &IntervalBox) -> Result<()> {
        if w.dim() != self.plant.disturbance_dim() {
            return Err(ReachError::DimensionMismatch {
                what: "disturbance box",
                expected: self.plant.disturbance_dim(),
                got: w.dim(),
            });
        }
        Ok(())
    }

    fn state_box(&self, state: &EmbeddingState) -> Result<IntervalBox> {
        if state.dim() != self.state_dim() {
            return Err(ReachError::DimensionMismatch {
                what: "embedding state",
                expected: self.state_dim(),
                got: state.dim(),
            });
        }
        state.to_box(ORDER_TOL)
    }

    fn linear_plant(&self) -> Result<&LinearSystemModel> {
        self.plant.as_linear().ok_or_else(|| {
            ReachError::Config(format!(
                "the linear embedding needs a linear plant, got `{}`",
                self.plant.name()
            ))
        })
    }

    /// Lower block row `i` and upper block row `i` given the network
    /// bounds for each block.
    fn rows(
        &self,
        i: usize,
        b: &IntervalBox,
        w: &IntervalBox,
        lower_u: (&[f64], &[f64]),
        upper_u: (&[f64], &[f64]),
    ) -> Result<(f64, f64)> {
        let lo = DecompositionArgs {
            x: b.lower(),
            xhat: b.upper(),
            u: lower_u.0,
            uhat: lower_u.1,
            w: w.lower(),
            what: w.upper(),
        };
        let hi = DecompositionArgs {
            x: b.upper(),
            xhat: b.lower(),
            u: upper_u.1,
            uhat: upper_u.0,
            w: w.upper(),
            what: w.lower(),
        };
        Ok((
            self.plant.decomposition_row(i, &lo)?,
            self.plant.decomposition_row(i, &hi)?,
        ))
    }

    /// Network bounds on the whole box, shared by every row.
    pub fn rhs_global(&self, state: &EmbeddingState, w: &IntervalBox) -> Result<Vec<f64>> {
        self.check_disturbance(w)?;
        let b = self.state_box(state)?;
        let lb = self.crown(&b)?;
        let (ul, uh) = lb.eval(b.lower(), b.upper());
        let n = self.state_dim();
        let mut out = vec![0.0; 2 * n];
        for i in 0..n {
            let (lo, hi) = self.rows(i, &b, w, (&ul, &uh), (&ul, &uh))?;
            out[i] = lo;
            out[n + i] = hi;
        }
        Ok(out)
    }

    /// One CROWN call on the box, evaluated on the pinched faces.
    pub fn rhs_hybrid(&self, state: &EmbeddingState, w: &IntervalBox) -> Result<Vec<f64>> {
        self.check_disturbance(w)?;
        let b = self.state_box(state)?;
        let lb = self.crown(&b)?;
        self.hybrid_with(&b, w, &lb)
    }

    fn hybrid_with(&self, b: &IntervalBox, w: &IntervalBox, lb: &LinearBounds) -> Result<Vec<f64>> {
        let n = self.state_dim();
        let (x, xhat) = (b.lower(), b.upper());
        let mut out = vec![0.0; 2 * n];
        for i in 0..n {
            let pinched_hat = replace_coord(xhat, i, x)?;
            let (ll, lu) = lb.eval(x, &pinched_hat);
            let pinched_low = replace_coord(x, i, xhat)?;
            let (ul, uu) = lb.eval(&pinched_low, xhat);
            let (lo, hi) = self.rows(i, b, w, (&ll, &lu), (&ul, &uu))?;
            out[i] = lo;
            out[n + i] = hi;
        }
        Ok(out)
    }

    /// Fresh CROWN bounds on each pinched face.
    pub fn rhs_local(&self, state: &EmbeddingState, w: &IntervalBox) -> Result<Vec<f64>> {
        self.check_disturbance(w)?;
        let b = self.state_box(state)?;
        let n = self.state_dim();
        let (x, xhat) = (b.lower(), b.upper());
        let mut out = vec![0.0; 2 * n];
        for i in 0..n {
            let lower_face = IntervalBox::new(x.to_vec(), replace_coord(xhat, i, x)?)?;
            let (ll, lu) = self.crown(&lower_face)?.eval(lower_face.lower(), lower_face.upper());
            let upper_face = IntervalBox::new(replace_coord(x, i, xhat)?, xhat.to_vec())?;
            let (ul, uu) = self.crown(&upper_face)?.eval(upper_face.lower(), upper_face.upper());
            let (lo, hi) = self.rows(i, &b, w, (&ll, &lu), (&ul, &uu))?;
            out[i] = lo;
            out[n + i] = hi;
        }
        Ok(out)
    }

    /// Hybrid evaluation with bounds frozen on `ctx`'s box. Fails when the
    /// state has left that box.
    pub fn rhs_frozen(
        &self,
        state: &EmbeddingState,
        w: &IntervalBox,
        ctx: &FrozenBoundsContext,
    ) -> Result<Vec<f64>> {
        self.check_disturbance(w)?;
        let b = self.state_box(state)?;
        let b = ctx.clamp_inside(&b)?;
        self.hybrid_with(&b, w, &ctx.bounds)
    }

    /// Closed-loop linear form on `lb`, combined Metzler splits.
    pub fn rhs_lin(&self, state: &EmbeddingState, w: &IntervalBox, lb: &LinearBounds) -> Result<Vec<f64>> {
        self.linear_form(state, w, lb, false)
    }

    /// Closed-loop linear form on `lb`, separate Metzler splits of `A` and
    /// the feedback term.
    pub fn rhs_lin_hybrid(&self, state: &EmbeddingState, w: &IntervalBox, lb: &LinearBounds) -> Result<Vec<f64>> {
        self.linear_form(state, w, lb, true)
    }

    fn linear_form(
        &self,
        state: &EmbeddingState,
        w: &IntervalBox,
        lb: &LinearBounds,
        separate: bool,
    ) -> Result<Vec<f64>> {
        self.check_disturbance(w)?;
        let m = self.linear_plant()?;
        let b = self.state_box(state)?;
        if lb.valid_on().dim() != b.dim() || lb.output_dim() != m.input_dim() {
            return Err(ReachError::DimensionMismatch {
                what: "linear bounds",
                expected: m.input_dim(),
                got: lb.output_dim(),
            });
        }
        let n = self.state_dim();
        let bs = m.b_split();
        let r = &bs.plus * lb.a_lower() + &bs.minus * lb.a_upper();
        let s = &bs.plus * lb.a_upper() + &bs.minus * lb.a_lower();
        // (coefficient on x, coefficient on xhat) for each block
        let (lower_x, lower_xhat, upper_x, upper_xhat): (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) =
            if separate {
                let a = m.a_split();
                let rs = metzler_split(&r)?;
                let ss = metzler_split(&s)?;
                (
                    &a.mzl + &rs.mzl,
                    &a.nonmzl + &rs.nonmzl,
                    &a.nonmzl + &ss.nonmzl,
                    &a.mzl + &ss.mzl,
                )
            } else {
                let rs = metzler_split(&(m.a() + &r))?;
                let ss = metzler_split(&(m.a() + &s))?;
                (rs.mzl, rs.nonmzl, ss.nonmzl, ss.mzl)
            };
        let (x, xhat) = (b.lower(), b.upper());
        let cs = m.c_split();
        let mut out = vec![0.0; 2 * n];
        for i in 0..n {
            let mut lo = 0.0;
            let mut hi = 0.0;
            for j in 0..n {
                lo += lower_x[(i, j)] * x[j] + lower_xhat[(i, j)] * xhat[j];
                hi += upper_x[(i, j)] * x[j] + upper_xhat[(i, j)] * xhat[j];
            }
            for j in 0..w.dim() {
                lo += cs.plus[(i, j)] * w.lower()[j] + cs.minus[(i, j)] * w.upper()[j];
                hi += cs.minus[(i, j)] * w.lower()[j] + cs.plus[(i, j)] * w.upper()[j];
            }
            for k in 0..m.input_dim() {
                lo += bs.plus[(i, k)] * lb.b_lower()[k] + bs.minus[(i, k)] * lb.b_upper()[k];
                hi += bs.plus[(i, k)] * lb.b_upper()[k] + bs.minus[(i, k)] * lb.b_lower()[k];
            }
            out[i] = lo + m.offset()[i];
            out[n + i] = hi + m.offset()[i];
        }
        Ok(out)
    }
}

/// Network bounds computed once on a partition box and reused while the
/// state stays inside it.
#[derive(Debug, Clone)]
pub struct FrozenBoundsContext {
    pub bounds: LinearBounds,
}

impl FrozenBoundsContext {
    pub fn new(cl: &ClosedLoop, b: &IntervalBox) -> Result<Self> {
        Ok(Self { bounds: cl.crown(b)? })
    }

    pub fn valid_on(&self) -> &IntervalBox {
        self.bounds.valid_on()
    }

    /// Snaps rounding-level excursions back onto the validity box and
    /// reports real escapes.
    fn clamp_inside(&self, b: &IntervalBox) -> Result<IntervalBox> {
        let v = self.bounds.valid_on();
        let mut lower = b.lower().to_vec();
        let mut upper = b.upper().to_vec();
        for i in 0..b.dim() {
            let (vl, vu) = (v.lower()[i], v.upper()[i]);
            if lower[i] < vl - ORDER_TOL || upper[i] > vu + ORDER_TOL {
                return Err(ReachError::BoundsEscape {
                    coord: i,
                    lower: lower[i],
                    upper: upper[i],
                    valid_lower: vl,
                    valid_upper: vu,
                });
            }
            lower[i] = lower[i].clamp(vl, vu);
            upper[i] = upper[i].clamp(lower[i], vu);
        }
        IntervalBox::new(lower, upper)
    }
}

/// A right-hand side ready for integration: strategy, closed loop and
/// disturbance box (and frozen bounds where the strategy needs them).
#[derive(Debug, Clone, Copy)]
pub struct EmbeddingRhs<'a> {
    closed_loop: &'a ClosedLoop,
    strategy: Strategy,
    disturbance: &'a IntervalBox,
    frozen: Option<&'a FrozenBoundsContext>,
}

impl<'a> EmbeddingRhs<'a> {
    /// A live strategy (anything but frozen-hybrid).
    pub fn new(closed_loop: &'a ClosedLoop, strategy: Strategy, disturbance: &'a IntervalBox) -> Result<Self> {
        if strategy.is_frozen() {
            return Err(ReachError::Config(
                "the frozen-hybrid strategy needs frozen bounds".into(),
            ));
        }
        if strategy.needs_linear_plant() {
            closed_loop.linear_plant()?;
        }
        closed_loop.check_disturbance(disturbance)?;
        Ok(Self {
            closed_loop,
            strategy,
            disturbance,
            frozen: None,
        })
    }

    pub fn frozen(
        closed_loop: &'a ClosedLoop,
        disturbance: &'a IntervalBox,
        ctx: &'a FrozenBoundsContext,
    ) -> Result<Self> {
        closed_loop.check_disturbance(disturbance)?;
        Ok(Self {
            closed_loop,
            strategy: Strategy::FrozenHybrid,
            disturbance,
            frozen: Some(ctx),
        })
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn state_dim(&self) -> usize {
        self.closed_loop.state_dim()
    }

    /// Stacked derivative `[lower block; upper block]`.
    pub fn eval(&self, state: &EmbeddingState) -> Result<Vec<f64>> {
        let cl = self.closed_loop;
        let w = self.disturbance;
        match self.strategy {
            Strategy::Global => cl.rhs_global(state, w),
            Strategy::Hybrid => cl.rhs_hybrid(state, w),
            Strategy::Local => cl.rhs_local(state, w),
            Strategy::FrozenHybrid => {
                let ctx = self.frozen.expect("frozen right-hand side carries its bounds");
                cl.rhs_frozen(state, w, ctx)
            }
            Strategy::Linear | Strategy::LinearHybrid => {
                let b = cl.state_box(state)?;
                let lb = cl.crown(&b)?;
                cl.linear_form(state, w, &lb, self.strategy == Strategy::LinearHybrid)
            }
        }
    }
}
