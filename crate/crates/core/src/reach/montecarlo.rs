//! Sampled closed-loop trajectories and containment checks against tubes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::algorithm::ReachSettings;
use super::integrate::integrate_ode;
use super::tube::ReachTube;
use crate::embedding::ClosedLoop;
use crate::error::{ReachError, Result};
use crate::interval::IntervalBox;
use crate::parallel::Workers;

/// States of one sampled trajectory at every actuation instant.
pub type Trajectory = Vec<Vec<f64>>;

fn sample_box<R: Rng>(rng: &mut R, b: &IntervalBox) -> Vec<f64> {
    b.lower()
        .iter()
        .zip(b.upper())
        .map(|(l, u)| if l == u { *l } else { rng.gen_range(*l..=*u) })
        .collect()
}

/// `count` trajectories of the true closed loop: initial states uniform in
/// `initial`, disturbances uniform in `disturbance` and held over each
/// actuation step, integrated with the same settings as the tube.
pub fn monte_carlo_trajectories(
    cl: &ClosedLoop,
    initial: &IntervalBox,
    disturbance: &IntervalBox,
    settings: &ReachSettings,
    count: usize,
    seed: u64,
    workers: &Workers,
) -> Result<Vec<Trajectory>> {
    settings.integrator.validate()?;
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..count).map(|_| master.gen()).collect();
    let dt = settings.actuation_step();
    let steps = settings.steps();
    workers.try_map(&seeds, |s, &sample_seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
        let mut x = sample_box(&mut rng, initial);
        let mut traj = Vec::with_capacity(steps + 1);
        traj.push(x.clone());
        for j in 0..steps {
            let w = sample_box(&mut rng, disturbance);
            x = integrate_ode(|y| cl.field(y, &w), &x, dt, &settings.integrator).map_err(|e| {
                ReachError::NonFinite(format!("sample {s} failed during step {j}: {e}"))
            })?;
            traj.push(x.clone());
        }
        Ok(traj)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub sample: usize,
    pub frame: usize,
    pub coord: usize,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainmentReport {
    pub samples: usize,
    pub frames: usize,
    pub slack: f64,
    pub violations: Vec<Violation>,
    /// Per frame, the smallest distance from a sample to the hull boundary
    /// (negative when outside).
    pub min_margin: Vec<f64>,
}

impl ContainmentReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// Frames with at least one violation.
    pub fn violating_frames(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self.violations.iter().map(|v| v.frame).collect();
        f.dedup();
        f.sort_unstable();
        f.dedup();
        f
    }
}

/// Checks every sampled state against the hull of its frame.
pub fn check_containment(tube: &ReachTube, trajectories: &[Trajectory], slack: f64) -> Result<ContainmentReport> {
    let hulls = tube.hulls();
    let mut violations = Vec::new();
    let mut min_margin = vec![f64::INFINITY; hulls.len()];
    for (s, traj) in trajectories.iter().enumerate() {
        if traj.len() != hulls.len() {
            return Err(ReachError::InvalidArgument(format!(
                "sample {s} has {} states but the tube has {} frames",
                traj.len(),
                hulls.len()
            )));
        }
        for (j, (x, h)) in traj.iter().zip(&hulls).enumerate() {
            if x.len() != h.dim() {
                return Err(ReachError::DimensionMismatch {
                    what: "sampled state",
                    expected: h.dim(),
                    got: x.len(),
                });
            }
            for (i, v) in x.iter().enumerate() {
                let (l, u) = (h.lower()[i], h.upper()[i]);
                let margin = (v - l).min(u - v);
                min_margin[j] = min_margin[j].min(margin);
                if !(margin >= -slack) {
                    violations.push(Violation {
                        sample: s,
                        frame: j,
                        coord: i,
                        value: *v,
                        lower: l,
                        upper: u,
                    });
                }
            }
        }
    }
    Ok(ContainmentReport {
        samples: trajectories.len(),
        frames: hulls.len(),
        slack,
        violations,
        min_margin,
    })
}

/// CSV rows `sample,frame,time,x0,...`.
pub fn trajectories_csv(trajectories: &[Trajectory], times: &[f64], labels: &[String]) -> String {
    use std::fmt::Write as _;
    let mut out = format!("sample,frame,time,{}\n", labels.join(","));
    for (s, traj) in trajectories.iter().enumerate() {
        for (j, x) in traj.iter().enumerate() {
            let t = times.get(j).copied().unwrap_or(f64::NAN);
            let vals: Vec<String> = x.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{s},{j},{t},{}", vals.join(","));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::CrownOptions;
    use crate::embedding::Strategy;
    use crate::network::FeedForwardNetwork;
    use crate::reach::integrate::{IntegratorConfig, Method};
    use crate::systems::LinearSystemModel;
    use nalgebra::DMatrix;

    fn setup() -> (ClosedLoop, ReachSettings) {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -0.5]);
        let plant = LinearSystemModel::new(a, DMatrix::zeros(2, 1), DMatrix::from_element(2, 1, 1.0), vec![0.0; 2]).unwrap();
        let net = FeedForwardNetwork::new(vec![], DMatrix::zeros(1, 2), vec![0.0]).unwrap();
        let cl = ClosedLoop::new(plant.into(), net, CrownOptions::default()).unwrap();
        let st = ReachSettings {
            strategy: Strategy::Hybrid,
            d_a: 1,
            d_s: 1,
            horizon: 1.0,
            integrator: IntegratorConfig {
                method: Method::Rk4,
                step: 0.05,
                actuation_step: 0.25,
            },
        };
        (cl, st)
    }

    #[test]
    fn point_sets_give_identical_samples() {
        let (cl, st) = setup();
        let init = IntervalBox::point(&[1.0, 0.0]);
        let w = IntervalBox::point(&[0.1]);
        let trajs = monte_carlo_trajectories(&cl, &init, &w, &st, 5, 3, &Workers::sequential()).unwrap();
        assert_eq!(trajs.len(), 5);
        assert!(trajs.iter().all(|t| t == &trajs[0]));
        assert_eq!(trajs[0].len(), 5);
    }

    #[test]
    fn zero_samples_is_empty() {
        let (cl, st) = setup();
        let init = IntervalBox::point(&[1.0, 0.0]);
        let w = IntervalBox::point(&[0.0]);
        assert!(monte_carlo_trajectories(&cl, &init, &w, &st, 0, 3, &Workers::sequential())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn sampling_is_independent_of_workers() {
        let (cl, st) = setup();
        let init = IntervalBox::new(vec![0.5, -0.5], vec![1.0, 0.5]).unwrap();
        let w = IntervalBox::new(vec![-0.1], vec![0.1]).unwrap();
        let a = monte_carlo_trajectories(&cl, &init, &w, &st, 50, 9, &Workers::sequential()).unwrap();
        let b = monte_carlo_trajectories(&cl, &init, &w, &st, 50, 9, &Workers::new(Some(4)).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn corrupted_tube_reports_violations() {
        let (cl, st) = setup();
        let init = IntervalBox::new(vec![0.5, -0.5], vec![1.0, 0.5]).unwrap();
        let w = IntervalBox::new(vec![-0.1], vec![0.1]).unwrap();
        let run = crate::reach::run_algorithm1(&cl, &init, &w, &st, &Workers::sequential()).unwrap();
        let trajs = monte_carlo_trajectories(&cl, &init, &w, &st, 200, 1, &Workers::sequential()).unwrap();
        let report = check_containment(&run.tube, &trajs, 1e-7).unwrap();
        assert!(report.passed(), "{:?}", report.violations.first());
        let mut bad = run.tube.clone();
        let shrunk = IntervalBox::point(&bad.hull(2).center());
        bad.frames[2] = vec![shrunk];
        let report = check_containment(&bad, &trajs, 1e-7).unwrap();
        assert_eq!(report.violating_frames(), vec![2]);
    }
}
