//! Brute-force tight decomposition, for tests on small systems.

use super::DecompositionArgs;
use crate::error::{ReachError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Grid points per free dimension (endpoints included).
    pub grid: usize,
    /// Hard cap on vector field evaluations.
    pub max_evaluations: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            grid: 21,
            max_evaluations: 10_000_000,
        }
    }
}

/// Grid minimum of `f_i` over `z in [x, xhat]` with `z_i = x_i`, `eta in [u, uhat]`,
/// `xi in [w, what]` when the pairs are increasing. With the pairs swapped it
/// returns the grid maximum over the box with `z_i = x_i` (the first argument).
pub fn tight_decomposition_oracle<F>(
    f: F,
    args: &DecompositionArgs<'_>,
    i: usize,
    config: OracleConfig,
) -> Result<f64>
where
    F: Fn(&[f64], &[f64], &[f64]) -> Result<Vec<f64>>,
{
    let n = args.x.len();
    args.check_dims(n, args.u.len(), args.w.len())?;
    if i >= n {
        return Err(ReachError::IndexOutOfRange { index: i, len: n });
    }
    let lower = args.orientation(0.0).ok_or_else(|| {
        ReachError::InvalidArgument("oracle needs consistently ordered pairs".into())
    })?;
    if config.grid < 2 {
        return Err(ReachError::InvalidArgument("oracle grid needs at least 2 points".into()));
    }

    // (lo, hi) per coordinate of the stacked (z, eta, xi) vector
    let mut ranges = Vec::with_capacity(n + args.u.len() + args.w.len());
    for (a, b) in [(args.x, args.xhat), (args.u, args.uhat), (args.w, args.what)] {
        for (p, q) in a.iter().zip(b.iter()) {
            ranges.push((p.min(*q), p.max(*q)));
        }
    }
    ranges[i] = (args.x[i], args.x[i]);
    let free: Vec<usize> = (0..ranges.len()).filter(|&k| ranges[k].0 < ranges[k].1).collect();

    let total = (config.grid as u64)
        .checked_pow(free.len() as u32)
        .filter(|t| *t <= config.max_evaluations)
        .ok_or_else(|| {
            ReachError::InvalidArgument(format!(
                "oracle grid of {} points over {} free dimensions exceeds the budget of {} evaluations",
                config.grid,
                free.len(),
                config.max_evaluations
            ))
        })?;

    let (p, q) = (args.u.len(), args.w.len());
    let mut point: Vec<f64> = ranges.iter().map(|r| r.0).collect();
    let mut best = if lower { f64::INFINITY } else { f64::NEG_INFINITY };
    let steps = (config.grid - 1) as f64;
    for mut idx in 0..total {
        for &k in &free {
            let j = (idx % config.grid as u64) as f64;
            idx /= config.grid as u64;
            let (lo, hi) = ranges[k];
            point[k] = lo + (hi - lo) * j / steps;
        }
        let v = f(&point[..n], &point[n..n + p], &point[n + p..n + p + q])?[i];
        best = if lower { best.min(v) } else { best.max(v) };
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::test_support::ordered_pair;
    use crate::systems::{LinearSystemModel, SystemModel, VehicleModel};
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linear_system_matches_decomposition() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, -0.5, 0.3]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, -2.0]);
        let m = LinearSystemModel::new(a, b, DMatrix::zeros(2, 0), vec![0.1, -0.2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let (x, xh) = ordered_pair(&mut rng, &[-1.0; 2], &[1.0; 2]);
            let (u, uh) = ordered_pair(&mut rng, &[-1.0], &[1.0]);
            let args = DecompositionArgs {
                x: &x,
                xhat: &xh,
                u: &u,
                uhat: &uh,
                w: &[],
                what: &[],
            };
            for i in 0..2 {
                let field = |x: &[f64], u: &[f64], w: &[f64]| m.vector_field(x, u, w);
                let lo = tight_decomposition_oracle(field, &args, i, OracleConfig::default()).unwrap();
                let hi = tight_decomposition_oracle(field, &args.swapped(), i, OracleConfig::default()).unwrap();
                // affine: extrema sit at grid corners, so agreement is exact up to rounding
                assert!((lo - m.decomposition_row(i, &args).unwrap()).abs() < 1e-12);
                assert!((hi - m.decomposition_row(i, &args.swapped()).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn vehicle_row_four_is_exact_and_rows_are_minorants() {
        let m = VehicleModel::default();
        let field = |x: &[f64], u: &[f64], w: &[f64]| m.vector_field(x, u, w);
        let x = [0.0, 0.0, 0.3, 1.0];
        let xh = [0.2, 0.1, 0.6, 1.3];
        let args = DecompositionArgs {
            x: &x,
            xhat: &xh,
            u: &[-0.5, -0.1],
            uhat: &[0.5, 0.2],
            w: &[-0.1],
            what: &[0.1],
        };
        let cfg = OracleConfig { grid: 9, ..Default::default() };
        let row4 = tight_decomposition_oracle(field, &args, 3, cfg).unwrap();
        assert_eq!(row4, -0.6);
        for i in 0..4 {
            let oracle_lo = tight_decomposition_oracle(field, &args, i, cfg).unwrap();
            let oracle_hi = tight_decomposition_oracle(field, &args.swapped(), i, cfg).unwrap();
            assert!(m.decomposition_row(i, &args).unwrap() <= oracle_lo + 1e-12);
            assert!(m.decomposition_row(i, &args.swapped()).unwrap() >= oracle_hi - 1e-12);
        }
    }

    #[test]
    fn point_inputs_give_the_field() {
        let m = VehicleModel::default();
        let x = [1.0, 2.0, 0.4, 1.5];
        let u = [0.3, 0.1];
        let w = [0.05];
        let args = DecompositionArgs::diagonal(&x, &u, &w);
        let f = m.vector_field(&x, &u, &w).unwrap();
        for (i, fi) in f.iter().enumerate() {
            let v = tight_decomposition_oracle(
                |x: &[f64], u: &[f64], w: &[f64]| m.vector_field(x, u, w),
                &args,
                i,
                OracleConfig::default(),
            )
            .unwrap();
            assert_eq!(v, *fi);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let m = VehicleModel::default();
        let args = DecompositionArgs {
            x: &[0.0; 4],
            xhat: &[1.0; 4],
            u: &[0.0, 0.0],
            uhat: &[1.0, 1.0],
            w: &[0.0],
            what: &[1.0],
        };
        let cfg = OracleConfig { grid: 101, max_evaluations: 1_000_000 };
        let err = tight_decomposition_oracle(|x: &[f64], u: &[f64], w: &[f64]| m.vector_field(x, u, w), &args, 0, cfg);
        assert!(err.is_err());
    }
}
