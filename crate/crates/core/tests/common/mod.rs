//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::DMatrix;
use rand::Rng;

use nnreach::reach::{Scenario, ScenarioConfig};
use nnreach::systems::{DecompositionArgs, SystemModel};
use nnreach::{Activation, FeedForwardNetwork, IntervalBox, Layer};

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn scenario(name: &str) -> Scenario {
    ScenarioConfig::load(repo_root().join("scenarios").join(format!("{name}.json")))
        .and_then(|c| c.build())
        .unwrap_or_else(|e| panic!("scenario {name}: {e}"))
}

/// ReLU net with the given hidden widths; weights in [-1, 1], biases in [-0.5, 0.5].
pub fn relu_net<R: Rng>(rng: &mut R, n_in: usize, widths: &[usize], n_out: usize) -> FeedForwardNetwork {
    let mut prev = n_in;
    let mut hidden = Vec::new();
    for &w in widths {
        hidden.push(Layer {
            weight: DMatrix::from_fn(w, prev, |_, _| rng.gen_range(-1.0..=1.0)),
            bias: (0..w).map(|_| rng.gen_range(-0.5..=0.5)).collect(),
            activation: Activation::Relu,
        });
        prev = w;
    }
    let out = DMatrix::from_fn(n_out, prev, |_, _| rng.gen_range(-1.0..=1.0));
    let bias = (0..n_out).map(|_| rng.gen_range(-0.5..=0.5)).collect();
    FeedForwardNetwork::new(hidden, out, bias).unwrap()
}

/// 1 to 3 hidden layers of 1 to 32 neurons, 1 to 4 inputs, 1 to 3 outputs.
pub fn random_relu_net<R: Rng>(rng: &mut R) -> FeedForwardNetwork {
    let depth = rng.gen_range(1..=3);
    let widths: Vec<usize> = (0..depth).map(|_| rng.gen_range(1..=32)).collect();
    let n_in = rng.gen_range(1..=4);
    let n_out = rng.gen_range(1..=3);
    relu_net(rng, n_in, &widths, n_out)
}

pub fn random_box<R: Rng>(rng: &mut R, n: usize, max_width: f64) -> IntervalBox {
    let lo: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..=2.0)).collect();
    let hi = lo.iter().map(|l| l + rng.gen_range(0.0..=max_width)).collect();
    IntervalBox::new(lo, hi).unwrap()
}

pub fn sample_in<R: Rng>(rng: &mut R, b: &IntervalBox) -> Vec<f64> {
    b.lower()
        .iter()
        .zip(b.upper())
        .map(|(l, u)| if l == u { *l } else { rng.gen_range(*l..=*u) })
        .collect()
}

/// Random sub-box of `b`.
pub fn sub_box<R: Rng>(rng: &mut R, b: &IntervalBox) -> IntervalBox {
    let (p, q) = (sample_in(rng, b), sample_in(rng, b));
    let lo = p.iter().zip(&q).map(|(a, c)| a.min(*c)).collect();
    let hi = p.iter().zip(&q).map(|(a, c)| a.max(*c)).collect();
    IntervalBox::new(lo, hi).unwrap()
}

pub fn sorted_pair<R: Rng>(rng: &mut R, lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let b = IntervalBox::new(lo.to_vec(), hi.to_vec()).unwrap();
    let s = sub_box(rng, &b);
    (s.lower().to_vec(), s.upper().to_vec())
}

/// Ranges a decomposition argument tuple is drawn from.
pub struct Domain {
    pub x: (Vec<f64>, Vec<f64>),
    pub u: (Vec<f64>, Vec<f64>),
    pub w: (Vec<f64>, Vec<f64>),
}

/// Owned argument tuple `(x, xhat, u, uhat, w, what)`.
#[derive(Debug, Clone)]
pub struct Tuple {
    pub x: Vec<f64>,
    pub xhat: Vec<f64>,
    pub u: Vec<f64>,
    pub uhat: Vec<f64>,
    pub w: Vec<f64>,
    pub what: Vec<f64>,
}

impl Tuple {
    pub fn args(&self) -> DecompositionArgs<'_> {
        DecompositionArgs {
            x: &self.x,
            xhat: &self.xhat,
            u: &self.u,
            uhat: &self.uhat,
            w: &self.w,
            what: &self.what,
        }
    }

    pub fn swapped(&self) -> Tuple {
        Tuple {
            x: self.xhat.clone(),
            xhat: self.x.clone(),
            u: self.uhat.clone(),
            uhat: self.u.clone(),
            w: self.what.clone(),
            what: self.w.clone(),
        }
    }
}

/// Increasing pairs drawn from `d`.
pub fn ordered_tuple<R: Rng>(rng: &mut R, d: &Domain) -> Tuple {
    let (x, xhat) = sorted_pair(rng, &d.x.0, &d.x.1);
    let (u, uhat) = sorted_pair(rng, &d.u.0, &d.u.1);
    let (w, what) = sorted_pair(rng, &d.w.0, &d.w.1);
    Tuple {
        x,
        xhat,
        u,
        uhat,
        w,
        what,
    }
}

/// A pair nested inside `[lo, hi]`, optionally with coordinate `pin` fixed at `lo`.
pub fn inner_pair<R: Rng>(rng: &mut R, lo: &[f64], hi: &[f64], pin: Option<usize>) -> (Vec<f64>, Vec<f64>) {
    let (mut a, b) = sorted_pair(rng, lo, hi);
    if let Some(i) = pin {
        a[i] = lo[i];
    }
    (a, b)
}

pub fn field_of<'a, M: SystemModel>(m: &'a M) -> impl Fn(&[f64], &[f64], &[f64]) -> nnreach::Result<Vec<f64>> + 'a {
    move |x, u, w| m.vector_field(x, u, w)
}
