//! Uniform partitions by repeated bisection of the widest axis.

use crate::error::{ReachError, Result};
use crate::interval::IntervalBox;

/// Cells per axis for `d` cells: each doubling goes to the axis whose cells
/// are currently widest (lowest index on ties).
pub fn cuts_per_axis(b: &IntervalBox, d: usize) -> Result<Vec<usize>> {
    if d == 0 {
        return Err(ReachError::Config("partition count must be at least 1".into()));
    }
    if !d.is_power_of_two() {
        return Err(ReachError::Config(format!(
            "partition count {d} is not reachable by bisection: it must be a power of two (1, 2, 4, 8, 16, ...)"
        )));
    }
    if b.dim() == 0 {
        return if d == 1 {
            Ok(vec![])
        } else {
            Err(ReachError::Config("cannot split a zero-dimensional box".into()))
        };
    }
    let mut cuts = vec![1usize; b.dim()];
    while cuts.iter().product::<usize>() < d {
        let mut best = 0;
        for i in 1..b.dim() {
            if b.width(i) / cuts[i] as f64 > b.width(best) / cuts[best] as f64 {
                best = i;
            }
        }
        cuts[best] *= 2;
    }
    Ok(cuts)
}

/// Splits `b` into `d` congruent cells that tile it. Cells are listed with
/// the last axis varying fastest.
pub fn uniform_partition(b: &IntervalBox, d: usize) -> Result<Vec<IntervalBox>> {
    let cuts = cuts_per_axis(b, d)?;
    let n = b.dim();
    // breakpoints per axis with the outer faces reproduced exactly
    let grid: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let (lo, hi, c) = (b.lower()[i], b.upper()[i], cuts[i]);
            (0..=c)
                .map(|k| {
                    if k == 0 {
                        lo
                    } else if k == c {
                        hi
                    } else {
                        lo + (hi - lo) * (k as f64 / c as f64)
                    }
                })
                .collect()
        })
        .collect();
    let mut cells = Vec::with_capacity(d);
    let mut idx = vec![0usize; n];
    loop {
        let lower = (0..n).map(|i| grid[i][idx[i]]).collect();
        let upper = (0..n).map(|i| grid[i][idx[i] + 1]).collect();
        cells.push(IntervalBox::new(lower, upper)?);
        // odometer increment, last axis fastest
        let mut axis = n;
        loop {
            if axis == 0 {
                return Ok(cells);
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < cuts[axis] {
                break;
            }
            idx[axis] = 0;
        }
    }
}
