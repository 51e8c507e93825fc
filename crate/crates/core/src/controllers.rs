//! Hand-built ReLU controllers for the reference scenarios.
//!
//! Both networks are written down directly instead of trained: a few neurons
//! carry the control law and the rest are seeded random hinges whose output
//! weights are small. The law stays readable while CROWN still sees wide,
//! partly unstable layers.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::network::{Activation, FeedForwardNetwork, Layer};

pub const VEHICLE_SEED: u64 = 0x5EED_0001;
pub const QUADROTOR_SEED: u64 = 0x5EED_0002;

/// Keeps pass-through neurons active on any state the scenarios reach.
const OFFSET: f64 = 10.0;

struct Builder {
    rng: ChaCha8Rng,
}

impl Builder {
    fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn uniform(&mut self, scale: f64) -> f64 {
        self.rng.gen_range(-scale..=scale)
    }

    /// Random rows from index `from` on.
    fn pad(&mut self, w: &mut DMatrix<f64>, b: &mut [f64], from: usize, w_scale: f64, b_scale: f64) {
        for r in from..w.nrows() {
            for c in 0..w.ncols() {
                w[(r, c)] = self.uniform(w_scale);
            }
            b[r] = self.uniform(b_scale);
        }
    }

    fn pad_out(&mut self, w: &mut DMatrix<f64>, from: usize, scale: f64) {
        for r in 0..w.nrows() {
            for c in from..w.ncols() {
                w[(r, c)] = self.uniform(scale);
            }
        }
    }
}

fn relu(weight: DMatrix<f64>, bias: Vec<f64>) -> Layer {
    Layer {
        weight,
        bias,
        activation: Activation::Relu,
    }
}

/// 4 -> 100 -> 100 -> 2 controller for the vehicle `(p_x, p_y, phi, v)`.
///
/// Heading target is straight down above `p_y = 3`, turning linearly to
/// due west at `p_y = 0`; steering is a saturated proportional law on the
/// heading error, acceleration holds `v = 2`.
pub fn vehicle_controller() -> FeedForwardNetwork {
    const K: f64 = 2.0;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut g = Builder::new(VEHICLE_SEED);

    let mut w1 = DMatrix::zeros(100, 4);
    let mut b1 = vec![0.0; 100];
    // n0 - n1 = clamp(1 - p_y / 3, 0, 1)
    w1[(0, 1)] = -1.0 / 3.0;
    b1[0] = 1.0;
    w1[(1, 1)] = -1.0 / 3.0;
    // n2 = phi + 10, n3 = v + 10
    w1[(2, 2)] = 1.0;
    b1[2] = OFFSET;
    w1[(3, 3)] = 1.0;
    b1[3] = OFFSET;
    g.pad(&mut w1, &mut b1, 4, 0.5, 2.0);

    // e = phi_d - phi = -pi/2 - pi/2 (n0 - n1) - (n2 - 10)
    let e_w = [-half_pi, half_pi, -1.0];
    let e_b = -half_pi + OFFSET;
    let mut w2 = DMatrix::zeros(100, 100);
    let mut b2 = vec![0.0; 100];
    // m0 - m1 = clamp(K e + 0.5, 0, 1)
    for (r, shift) in [(0, 0.5), (1, -0.5)] {
        for (c, v) in e_w.iter().enumerate() {
            w2[(r, c)] = K * v;
        }
        b2[r] = K * e_b + shift;
    }
    // m2 = 12 - v
    w2[(2, 3)] = -1.0;
    b2[2] = 12.0 + OFFSET;
    g.pad(&mut w2, &mut b2, 3, 0.05, 1.0);

    let mut w3 = DMatrix::zeros(2, 100);
    w3[(0, 2)] = 1.0;
    w3[(1, 0)] = 1.0;
    w3[(1, 1)] = -1.0;
    g.pad_out(&mut w3, 3, 1e-3);
    let b3 = vec![-OFFSET, -0.5];

    FeedForwardNetwork::new(vec![relu(w1, b1), relu(w2, b2)], w3, b3).expect("vehicle controller shapes")
}

/// 6 -> 32 -> 32 -> 3 controller for the quadrotor `(p, v)` with inputs
/// `(tan theta, tan phi, thrust)`: a PD law toward the origin plus hover
/// thrust, through pass-through neurons.
pub fn quadrotor_controller(gravity: f64) -> FeedForwardNetwork {
    const KP: f64 = 1.0;
    const KD: f64 = 2.0;
    let mut g = Builder::new(QUADROTOR_SEED);

    let mut w1 = DMatrix::zeros(32, 6);
    let mut b1 = vec![0.0; 32];
    for i in 0..6 {
        w1[(i, i)] = 1.0;
        b1[i] = OFFSET;
    }
    g.pad(&mut w1, &mut b1, 6, 0.5, 2.0);

    // accelerations wanted on each axis, -KP p - KD v, shifted up by OFFSET
    let mut w2 = DMatrix::zeros(32, 32);
    let mut b2 = vec![0.0; 32];
    for axis in 0..3 {
        w2[(axis, axis)] = -KP;
        w2[(axis, axis + 3)] = -KD;
        b2[axis] = OFFSET * (1.0 + KP + KD);
    }
    g.pad(&mut w2, &mut b2, 3, 0.05, 1.0);

    // B maps the inputs to (g u_0, -g u_1, u_2)
    let mut w3 = DMatrix::zeros(3, 32);
    w3[(0, 0)] = 1.0 / gravity;
    w3[(1, 1)] = -1.0 / gravity;
    w3[(2, 2)] = 1.0;
    g.pad_out(&mut w3, 3, 1e-3);
    let b3 = vec![-OFFSET / gravity, OFFSET / gravity, gravity - OFFSET];

    FeedForwardNetwork::new(vec![relu(w1, b1), relu(w2, b2)], w3, b3).expect("quadrotor controller shapes")
}
