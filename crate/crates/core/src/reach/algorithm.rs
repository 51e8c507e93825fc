//! The partition / sub-partition reachability loop.

use std::time::Instant;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use super::integrate::{integrate_embedding, IntegratorConfig};
use super::partition::uniform_partition;
use super::tube::ReachTube;
use crate::embedding::{ClosedLoop, EmbeddingRhs, FrozenBoundsContext, Strategy};
use crate::error::{ReachError, Result};
use crate::interval::IntervalBox;
use crate::parallel::Workers;
use crate::systems::SystemModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReachSettings {
    pub strategy: Strategy,
    /// Partitions per frame, each with its own network bounds.
    pub d_a: usize,
    /// Sub-partitions per partition, integrated separately.
    pub d_s: usize,
    /// Final time.
    pub horizon: f64,
    pub integrator: IntegratorConfig,
}

impl ReachSettings {
    pub fn actuation_step(&self) -> f64 {
        self.integrator.actuation_step
    }

    pub fn validate(&self) -> Result<()> {
        for (name, d) in [("D_a", self.d_a), ("D_s", self.d_s)] {
            if d == 0 || !d.is_power_of_two() {
                return Err(ReachError::Config(format!(
                    "{name} = {d} is not a power of two (1, 2, 4, 8, 16, ...); \
                     partitions are built by repeated bisection"
                )));
            }
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(ReachError::Config(format!("final time must be non-negative, got {}", self.horizon)));
        }
        self.integrator.validate()
    }

    /// Number of actuation steps, `floor(T / dt)`.
    pub fn steps(&self) -> usize {
        (self.horizon / self.actuation_step() + 1e-9).floor() as usize
    }
}

/// Wall time and CROWN work of one run; kept out of the tube so tubes stay
/// reproducible byte for byte.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReachStats {
    pub frame_seconds: Vec<f64>,
    pub total_seconds: f64,
    pub crown_calls: u64,
}

#[derive(Debug, Clone)]
pub struct ReachRun {
    pub tube: ReachTube,
    pub stats: ReachStats,
}

fn branch_boxes(b: &IntervalBox, d_a: usize, d_s: usize) -> Result<Vec<(usize, usize, IntervalBox)>> {
    let mut out = Vec::with_capacity(d_a * d_s);
    for (k, part) in uniform_partition(b, d_a)?.into_iter().enumerate() {
        for (l, sub) in uniform_partition(&part, d_s)?.into_iter().enumerate() {
            out.push((k, l, sub));
        }
    }
    Ok(out)
}

fn wrap(frame: usize, partition: usize, subpartition: usize) -> impl Fn(ReachError) -> ReachError {
    move |e| ReachError::Branch {
        frame,
        partition,
        subpartition,
        source: Box::new(e),
    }
}

/// Runs the loop from the bounding box of the initial set. Frame 0 holds
/// the initial branch boxes; frame `j` the boxes reached at `j * dt`.
pub fn run_algorithm1(
    cl: &ClosedLoop,
    initial: &IntervalBox,
    disturbance: &IntervalBox,
    settings: &ReachSettings,
    workers: &Workers,
) -> Result<ReachRun> {
    settings.validate()?;
    if initial.dim() != cl.state_dim() {
        return Err(ReachError::DimensionMismatch {
            what: "initial set",
            expected: cl.state_dim(),
            got: initial.dim(),
        });
    }
    if settings.strategy.needs_linear_plant() && cl.plant().as_linear().is_none() {
        return Err(ReachError::Config(format!(
            "strategy `{}` needs a linear plant, got `{}`",
            settings.strategy,
            cl.plant().name()
        )));
    }
    let start = Instant::now();
    let crown_before = cl.crown_calls();
    let dt = settings.actuation_step();
    let steps = settings.steps();

    let mut frames = vec![branch_boxes(initial, settings.d_a, settings.d_s)?
        .into_iter()
        .map(|(_, _, b)| b)
        .collect::<Vec<_>>()];
    let mut times = vec![0.0];
    let mut frame_seconds = Vec::with_capacity(steps);

    for j in 0..steps {
        let t0 = Instant::now();
        let hull = IntervalBox::hull(&frames[j]).expect("frames are never empty");
        let branches = branch_boxes(&hull, settings.d_a, settings.d_s)?;
        let contexts = if settings.strategy.is_frozen() {
            let parts = uniform_partition(&hull, settings.d_a)?;
            Some(workers.try_map(&parts, |k, p| {
                FrozenBoundsContext::new(cl, p).map_err(wrap(j, k, 0))
            })?)
        } else {
            None
        };
        let next = workers.try_map(&branches, |_, (k, l, b)| {
            let rhs = match &contexts {
                Some(ctx) => EmbeddingRhs::frozen(cl, disturbance, &ctx[*k]),
                None => EmbeddingRhs::new(cl, settings.strategy, disturbance),
            }
            .map_err(wrap(j, *k, *l))?;
            let end = integrate_embedding(|s| rhs.eval(s), &b.as_state(), dt, &settings.integrator)
                .map_err(wrap(j, *k, *l))?;
            end.to_box(crate::systems::ORDER_TOL).map_err(wrap(j, *k, *l))
        })?;
        frames.push(next);
        times.push((j + 1) as f64 * dt);
        let secs = t0.elapsed().as_secs_f64();
        debug!("frame {} done in {:.3}s", j + 1, secs);
        frame_seconds.push(secs);
    }

    let stats = ReachStats {
        frame_seconds,
        total_seconds: start.elapsed().as_secs_f64(),
        crown_calls: cl.crown_calls() - crown_before,
    };
    info!(
        "{} strategy: {} frames, {} CROWN calls, {:.3}s",
        settings.strategy,
        frames.len(),
        stats.crown_calls,
        stats.total_seconds
    );
    let tube = ReachTube {
        strategy: settings.strategy,
        state_labels: cl.plant().state_labels(),
        times,
        frames,
        config: serde_json::to_value(settings).expect("settings serialize"),
    };
    Ok(ReachRun { tube, stats })
}
