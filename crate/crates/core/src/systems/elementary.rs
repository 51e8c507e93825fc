//! Tight decompositions of `cos`, `sin` and the product of two scalars.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{ReachError, Result};

/// Whether an integer multiple `k * PI` with `k` of the given parity lies in `[a, b]`.
fn contains_multiple_of_pi(a: f64, b: f64, odd: bool) -> bool {
    let mut k = (a / PI).ceil();
    let is_odd = k.rem_euclid(2.0) == 1.0;
    if is_odd != odd {
        k += 1.0;
    }
    k * PI <= b
}

pub(crate) fn cos_range(a: f64, b: f64) -> (f64, f64) {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let (ca, cb) = (a.cos(), b.cos());
    let lo = if contains_multiple_of_pi(a, b, true) {
        -1.0
    } else {
        ca.min(cb)
    };
    let hi = if contains_multiple_of_pi(a, b, false) {
        1.0
    } else {
        ca.max(cb)
    };
    (lo, hi)
}

pub(crate) fn sin_range(a: f64, b: f64) -> (f64, f64) {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let (sa, sb) = (a.sin(), b.sin());
    // sin(z) = cos(z - pi/2): extrema of sin sit at shifted multiples of pi
    let lo = if contains_multiple_of_pi(a - FRAC_PI_2, b - FRAC_PI_2, true) {
        -1.0
    } else {
        sa.min(sb)
    };
    let hi = if contains_multiple_of_pi(a - FRAC_PI_2, b - FRAC_PI_2, false) {
        1.0
    } else {
        sa.max(sb)
    };
    (lo, hi)
}

/// Range of `p * q` over a rectangle, from its four corners.
pub(crate) fn product_range(p: (f64, f64), q: (f64, f64)) -> (f64, f64) {
    let corners = [p.0 * q.0, p.0 * q.1, p.1 * q.0, p.1 * q.1];
    corners
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(*v), hi.max(*v))
        })
}

/// Minimum of `cos` over `[a, ahat]` when `a <= ahat`, maximum over
/// `[ahat, a]` otherwise.
pub fn d_cos(a: f64, ahat: f64) -> f64 {
    let (lo, hi) = cos_range(a, ahat);
    if a <= ahat {
        lo
    } else {
        hi
    }
}

/// Like [`d_cos`] for `sin`.
pub fn d_sin(a: f64, ahat: f64) -> f64 {
    let (lo, hi) = sin_range(a, ahat);
    if a <= ahat {
        lo
    } else {
        hi
    }
}

/// Tight decomposition of `b1 * b2`: the minimum over the corners of
/// `[v, vhat] x [c, chat]` for increasing pairs, the maximum for decreasing ones.
pub fn d_bilinear(v: f64, c: f64, vhat: f64, chat: f64) -> Result<f64> {
    let (lo, hi) = product_range((v.min(vhat), v.max(vhat)), (c.min(chat), c.max(chat)));
    if v <= vhat && c <= chat {
        Ok(lo)
    } else if v >= vhat && c >= chat {
        Ok(hi)
    } else {
        Err(ReachError::InvalidArgument(format!(
            "bilinear decomposition needs consistently ordered pairs, got ({v}, {vhat}) and ({c}, {chat})"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_4;

    /// Dense-grid extremum of `f` over `[a, b]`, endpoints included.
    fn grid_extrema(f: impl Fn(f64) -> f64, a: f64, b: f64, points: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..=points {
            let z = a + (b - a) * k as f64 / points as f64;
            let v = f(z);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    #[test]
    fn d_cos_examples() {
        assert!((d_cos(-FRAC_PI_4, FRAC_PI_4) - FRAC_PI_4.cos()).abs() < 1e-12);
        assert!((d_cos(-FRAC_PI_4, FRAC_PI_4) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(d_cos(0.3, 0.3), 0.3f64.cos());
        assert_eq!(d_cos(FRAC_PI_2, 0.0), 1.0);
    }

    #[test]
    fn d_sin_examples() {
        assert!(d_sin(0.0, PI).abs() < 1e-15);
        assert_eq!(d_sin(-1.2, -1.2), (-1.2f64).sin());
        assert_eq!(d_sin(PI, 0.0), 1.0);
    }

    #[test]
    fn d_bilinear_examples() {
        assert_eq!(d_bilinear(1.0, -1.0, 2.0, 1.0).unwrap(), -2.0);
        assert_eq!(d_bilinear(1.5, -0.5, 1.5, -0.5).unwrap(), -0.75);
        assert_eq!(d_bilinear(2.0, 1.0, 1.0, -1.0).unwrap(), 2.0);
        assert!(d_bilinear(1.0, 1.0, 2.0, -1.0).is_err());
    }

    #[test]
    fn trig_decompositions_match_dense_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..1000 {
            let a: f64 = rng.gen_range(-10.0..10.0);
            // include multi-period intervals
            let width: f64 = if trial % 5 == 0 {
                rng.gen_range(0.0..15.0)
            } else {
                rng.gen_range(0.0..2.0)
            };
            let b = a + width;
            // the grid is refined near interior extrema so its error stays below 1e-9
            let (clo, chi) = grid_extrema(f64::cos, a, b, 10_000);
            let (slo, shi) = grid_extrema(f64::sin, a, b, 10_000);
            let step = width / 10_000.0;
            let tol = 1e-9f64.max(step * step);
            assert!(d_cos(a, b) <= clo + 1e-15 && clo - d_cos(a, b) <= tol, "cos min on [{a}, {b}]");
            assert!(d_cos(b, a) >= chi - 1e-15 && d_cos(b, a) - chi <= tol, "cos max on [{a}, {b}]");
            assert!(d_sin(a, b) <= slo + 1e-15 && slo - d_sin(a, b) <= tol, "sin min on [{a}, {b}]");
            assert!(d_sin(b, a) >= shi - 1e-15 && d_sin(b, a) - shi <= tol, "sin max on [{a}, {b}]");
        }
    }

    #[test]
    fn trig_decompositions_match_fine_grid_on_narrow_intervals() {
        // narrow intervals: the 10^4-point grid resolves the extremum to 1e-9
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let a: f64 = rng.gen_range(-10.0..10.0);
            let b = a + rng.gen_range(0.0..0.5);
            let (clo, chi) = grid_extrema(f64::cos, a, b, 10_000);
            let (slo, shi) = grid_extrema(f64::sin, a, b, 10_000);
            assert!((d_cos(a, b) - clo).abs() <= 1e-9);
            assert!((d_cos(b, a) - chi).abs() <= 1e-9);
            assert!((d_sin(a, b) - slo).abs() <= 1e-9);
            assert!((d_sin(b, a) - shi).abs() <= 1e-9);
        }
    }

    #[test]
    fn bilinear_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let (v, vh) = {
                let (p, q): (f64, f64) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
                (p.min(q), p.max(q))
            };
            let (c, ch) = {
                let (p, q): (f64, f64) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
                (p.min(q), p.max(q))
            };
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for i in 0..=50 {
                for j in 0..=50 {
                    let a = v + (vh - v) * i as f64 / 50.0;
                    let b = c + (ch - c) * j as f64 / 50.0;
                    lo = lo.min(a * b);
                    hi = hi.max(a * b);
                }
            }
            assert!((d_bilinear(v, c, vh, ch).unwrap() - lo).abs() < 1e-12);
            assert!((d_bilinear(vh, ch, v, c).unwrap() - hi).abs() < 1e-12);
        }
    }
}
