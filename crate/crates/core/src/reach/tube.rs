//! Reach tubes: per actuation instant, the boxes of every partition branch.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::Strategy;
use crate::error::{ReachError, Result};
use crate::interval::IntervalBox;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachTube {
    pub strategy: Strategy,
    pub state_labels: Vec<String>,
    /// Actuation instants `j * dt`, starting at 0.
    pub times: Vec<f64>,
    /// One list of branch boxes per instant.
    pub frames: Vec<Vec<IntervalBox>>,
    /// Settings the tube was computed with.
    #[serde(default)]
    pub config: serde_json::Value,
}

impl ReachTube {
    pub fn dim(&self) -> usize {
        self.state_labels.len()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Componentwise hull of frame `j`.
    pub fn hull(&self, j: usize) -> IntervalBox {
        IntervalBox::hull(&self.frames[j]).expect("frames are never empty")
    }

    pub fn hulls(&self) -> Vec<IntervalBox> {
        (0..self.len()).map(|j| self.hull(j)).collect()
    }

    pub fn final_hull(&self) -> IntervalBox {
        self.hull(self.len() - 1)
    }

    /// Structural checks after loading from disk.
    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.frames.len() {
            return Err(ReachError::InvalidArgument(format!(
                "tube has {} times but {} frames",
                self.times.len(),
                self.frames.len()
            )));
        }
        for (j, frame) in self.frames.iter().enumerate() {
            if frame.is_empty() {
                return Err(ReachError::InvalidArgument(format!("frame {j} is empty")));
            }
            for b in frame {
                if b.dim() != self.dim() {
                    return Err(ReachError::DimensionMismatch {
                        what: "tube box",
                        expected: self.dim(),
                        got: b.dim(),
                    });
                }
                IntervalBox::new(b.lower().to_vec(), b.upper().to_vec())?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tube serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let tube: ReachTube = serde_json::from_str(text).map_err(|source| ReachError::Parse {
            path: "<inline>".into(),
            source,
        })?;
        tube.validate()?;
        Ok(tube)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ReachError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let tube: ReachTube = serde_json::from_str(&text).map_err(|source| ReachError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        tube.validate()?;
        Ok(tube)
    }

    /// Flat rows `time,branch,dim,lower,upper`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,branch,dim,lower,upper\n");
        for (t, frame) in self.times.iter().zip(&self.frames) {
            for (k, b) in frame.iter().enumerate() {
                for i in 0..b.dim() {
                    let _ = writeln!(out, "{t},{k},{i},{},{}", b.lower()[i], b.upper()[i]);
                }
            }
        }
        out
    }

    /// Rectangle corners of every branch projected on `(a, b)`, closed
    /// polygons with five points each.
    pub fn projection_csv(&self, a: usize, b: usize) -> Result<String> {
        for d in [a, b] {
            if d >= self.dim() {
                return Err(ReachError::IndexOutOfRange { index: d, len: self.dim() });
            }
        }
        let mut out = format!(
            "frame,time,branch,vertex,{},{}\n",
            self.state_labels[a], self.state_labels[b]
        );
        for (j, (t, frame)) in self.times.iter().zip(&self.frames).enumerate() {
            for (k, bx) in frame.iter().enumerate() {
                let (xl, xu, yl, yu) = (bx.lower()[a], bx.upper()[a], bx.lower()[b], bx.upper()[b]);
                let corners = [(xl, yl), (xu, yl), (xu, yu), (xl, yu), (xl, yl)];
                for (v, (x, y)) in corners.iter().enumerate() {
                    let _ = writeln!(out, "{j},{t},{k},{v},{x},{y}");
                }
            }
        }
        Ok(out)
    }

    /// Per frame, how far this tube's hull sticks out of `outer`'s hull
    /// (zero or negative when nested).
    pub fn excess_over(&self, outer: &ReachTube) -> Result<Vec<f64>> {
        if self.len() != outer.len() || self.dim() != outer.dim() {
            return Err(ReachError::InvalidArgument(format!(
                "cannot compare a {}-frame tube in {} dims with a {}-frame tube in {} dims",
                self.len(),
                self.dim(),
                outer.len(),
                outer.dim()
            )));
        }
        Ok(self
            .hulls()
            .iter()
            .zip(outer.hulls())
            .map(|(inner, outer)| {
                (0..inner.dim())
                    .map(|i| (outer.lower()[i] - inner.lower()[i]).max(inner.upper()[i] - outer.upper()[i]))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect())
    }

    /// True when every frame hull lies in `outer`'s up to `slack`.
    pub fn nested_in(&self, outer: &ReachTube, slack: f64) -> Result<bool> {
        Ok(self.excess_over(outer)?.iter().all(|e| *e <= slack))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tube() -> ReachTube {
        let b = |l: f64| IntervalBox::new(vec![l, 0.0], vec![l + 1.0, 0.5]).unwrap();
        ReachTube {
            strategy: Strategy::Hybrid,
            state_labels: vec!["a".into(), "b".into()],
            times: vec![0.0, 0.25],
            frames: vec![vec![b(0.0)], vec![b(1.0), b(2.0)]],
            config: serde_json::Value::Null,
        }
    }

    #[test]
    fn json_round_trip() {
        let t = tube();
        assert_eq!(ReachTube::from_json(&t.to_json()).unwrap(), t);
    }

    #[test]
    fn hull_and_csv() {
        let t = tube();
        assert_eq!(t.hull(1), IntervalBox::new(vec![1.0, 0.0], vec![3.0, 0.5]).unwrap());
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 1 + 2 + 4);
        assert!(csv.contains("0.25,1,0,2,3"));
    }

    #[test]
    fn projection_rejects_bad_dims() {
        let t = tube();
        assert!(t.projection_csv(0, 1).is_ok());
        assert!(t.projection_csv(0, 9).is_err());
        assert_eq!(t.projection_csv(1, 0).unwrap().lines().count(), 1 + 3 * 5);
    }

    #[test]
    fn empty_frames_are_invalid() {
        let mut t = tube();
        t.frames[1].clear();
        assert!(ReachTube::from_json(&serde_json::to_string(&t).unwrap()).is_err());
    }

    #[test]
    fn nesting_uses_frame_hulls() {
        let t = tube();
        assert!(t.nested_in(&t, 0.0).unwrap());
        let mut inner = t.clone();
        inner.frames[1] = vec![IntervalBox::new(vec![1.5, 0.1], vec![2.5, 0.4]).unwrap()];
        assert!(inner.nested_in(&t, 0.0).unwrap());
        assert!(!t.nested_in(&inner, 0.0).unwrap());
        assert_eq!(t.excess_over(&inner).unwrap()[1], 0.5);
        let mut short = t.clone();
        short.frames.pop();
        short.times.pop();
        assert!(short.nested_in(&t, 0.0).is_err());
    }
}
