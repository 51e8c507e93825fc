//! Padded-circle obstacle checks on tube frames. A frame is certified safe
//! only when every branch box stays strictly outside every padded circle.

use serde::{Deserialize, Serialize};

use super::tube::ReachTube;
use crate::error::{ReachError, Result};
use crate::interval::IntervalBox;

fn default_dims() -> [usize; 2] {
    [0, 1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub center: [f64; 2],
    pub radius: f64,
    /// Fractional padding: the keep-out radius is `radius * (1 + padding)`.
    #[serde(default)]
    pub padding: f64,
    /// State coordinates the circle lives on.
    #[serde(default = "default_dims")]
    pub dims: [usize; 2],
}

impl Obstacle {
    pub fn keep_out_radius(&self) -> f64 {
        self.radius * (1.0 + self.padding)
    }

    /// Distance from the circle center to the projection of `b`.
    pub fn distance(&self, b: &IntervalBox) -> f64 {
        let [a, c] = self.dims;
        let dx = self.center[0] - self.center[0].clamp(b.lower()[a], b.upper()[a]);
        let dy = self.center[1] - self.center[1].clamp(b.lower()[c], b.upper()[c]);
        dx.hypot(dy)
    }

    /// Distance to the padded circle; positive means strictly outside.
    pub fn clearance(&self, b: &IntervalBox) -> f64 {
        self.distance(b) - self.keep_out_radius()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Safe,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSafety {
    pub frame: usize,
    pub time: f64,
    pub verdict: Verdict,
    /// Smallest clearance over branches and obstacles (infinite without obstacles).
    pub min_clearance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyReport {
    pub verdict: Verdict,
    pub frames: Vec<FrameSafety>,
}

pub fn check_safety(tube: &ReachTube, obstacles: &[Obstacle]) -> Result<SafetyReport> {
    for (k, o) in obstacles.iter().enumerate() {
        if let Some(&d) = o.dims.iter().find(|&&d| d >= tube.dim()) {
            return Err(ReachError::Config(format!(
                "obstacle {k} uses coordinate {d} but the state has {} coordinates",
                tube.dim()
            )));
        }
        if !(o.radius >= 0.0 && o.padding >= 0.0) {
            return Err(ReachError::Config(format!("obstacle {k} has a negative radius or padding")));
        }
    }
    let frames: Vec<FrameSafety> = tube
        .frames
        .iter()
        .enumerate()
        .map(|(j, frame)| {
            let min_clearance = frame
                .iter()
                .flat_map(|b| obstacles.iter().map(move |o| o.clearance(b)))
                .fold(f64::INFINITY, f64::min);
            FrameSafety {
                frame: j,
                time: tube.times[j],
                verdict: if min_clearance > 0.0 { Verdict::Safe } else { Verdict::Unknown },
                min_clearance,
            }
        })
        .collect();
    let verdict = if frames.iter().all(|f| f.verdict == Verdict::Safe) {
        Verdict::Safe
    } else {
        Verdict::Unknown
    };
    Ok(SafetyReport { verdict, frames })
}
