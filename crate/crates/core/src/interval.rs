//! Interval vectors, the southeast order on stacked states, and the matrix
//! splits used by decomposition and inclusion functions.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ReachError, Result};

/// Axis-aligned box `[lower, upper]` in `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl IntervalBox {
    /// Builds a box, rejecting mismatched lengths, NaNs and inverted bounds.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(ReachError::DimensionMismatch {
                what: "box bounds",
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if l.is_nan() || u.is_nan() {
                return Err(ReachError::NonFinite(format!("box coordinate {i} is NaN")));
            }
            if l > u {
                return Err(ReachError::InvalidArgument(format!(
                    "box coordinate {i}: lower {l} exceeds upper {u}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Degenerate box `[p, p]`.
    pub fn point(p: &[f64]) -> Self {
        Self {
            lower: p.to_vec(),
            upper: p.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn widths(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.width(i)).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    /// Product of the widths.
    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).product()
    }

    pub fn contains_point(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| l <= v && v <= u)
    }

    /// Containment of a point with an additive slack on every face.
    pub fn contains_point_with_slack(&self, p: &[f64], slack: f64) -> bool {
        p.len() == self.dim()
            && p
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| l - slack <= *v && *v <= u + slack)
    }

    /// Smallest box containing every box of a non-empty collection.
    pub fn hull<'a, I>(boxes: I) -> Option<IntervalBox>
    where
        I: IntoIterator<Item = &'a IntervalBox>,
    {
        let mut iter = boxes.into_iter();
        let first = iter.next()?.clone();
        Some(iter.fold(first, |mut acc, b| {
            for i in 0..acc.dim() {
                acc.lower[i] = acc.lower[i].min(b.lower[i]);
                acc.upper[i] = acc.upper[i].max(b.upper[i]);
            }
            acc
        }))
    }

    pub fn as_state(&self) -> EmbeddingState {
        EmbeddingState {
            x: self.lower.clone(),
            xhat: self.upper.clone(),
        }
    }
}

/// Stacked pair `(x, xhat)` of `R^{2n}`; a box when `x <= xhat`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingState {
    pub x: Vec<f64>,
    pub xhat: Vec<f64>,
}

impl EmbeddingState {
    pub fn new(x: Vec<f64>, xhat: Vec<f64>) -> Result<Self> {
        if x.len() != xhat.len() {
            return Err(ReachError::DimensionMismatch {
                what: "embedding state halves",
                expected: x.len(),
                got: xhat.len(),
            });
        }
        Ok(Self { x, xhat })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Flat `[x; xhat]` vector.
    pub fn stacked(&self) -> Vec<f64> {
        let mut v = self.x.clone();
        v.extend_from_slice(&self.xhat);
        v
    }

    pub fn from_stacked(v: &[f64]) -> Self {
        let n = v.len() / 2;
        Self {
            x: v[..n].to_vec(),
            xhat: v[n..].to_vec(),
        }
    }

    /// Largest amount by which `x_i` exceeds `xhat_i` (zero or negative when ordered).
    pub fn max_inversion(&self) -> f64 {
        self.x
            .iter()
            .zip(&self.xhat)
            .map(|(a, b)| a - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Interprets the state as a box, tolerating inversions up to `tol`
    /// (coordinates inverted by less than `tol` collapse to their midpoint).
    pub fn to_box(&self, tol: f64) -> Result<IntervalBox> {
        let mut lower = self.x.clone();
        let mut upper = self.xhat.clone();
        for i in 0..lower.len() {
            if !(lower[i].is_finite() && upper[i].is_finite()) {
                return Err(ReachError::NonFinite(format!(
                    "state coordinate {i} is not finite"
                )));
            }
            if lower[i] > upper[i] {
                let gap = lower[i] - upper[i];
                if gap > tol {
                    return Err(ReachError::OrderingViolation {
                        coord: i,
                        lower: lower[i],
                        upper: upper[i],
                    });
                }
                let mid = 0.5 * (lower[i] + upper[i]);
                lower[i] = mid;
                upper[i] = mid;
            }
        }
        Ok(IntervalBox { lower, upper })
    }
}

/// `plus = max(M, 0)`, `minus = min(M, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedMatrixSplit {
    pub plus: DMatrix<f64>,
    pub minus: DMatrix<f64>,
}

/// Metzler part (full diagonal plus nonnegative off-diagonals) and the remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct MetzlerSplit {
    pub mzl: DMatrix<f64>,
    pub nonmzl: DMatrix<f64>,
}

/// Entrywise sign split. Zero entries go to `plus`.
pub fn signed_split(m: &DMatrix<f64>) -> SignedMatrixSplit {
    let mut plus = DMatrix::zeros(m.nrows(), m.ncols());
    let mut minus = DMatrix::zeros(m.nrows(), m.ncols());
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let v = m[(r, c)];
            if v >= 0.0 {
                plus[(r, c)] = v;
            } else {
                minus[(r, c)] = v;
            }
        }
    }
    SignedMatrixSplit { plus, minus }
}

/// Metzler split of a square matrix; the diagonal always stays in `mzl`.
pub fn metzler_split(a: &DMatrix<f64>) -> Result<MetzlerSplit> {
    if !a.is_square() {
        return Err(ReachError::InvalidArgument(format!(
            "Metzler split needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    let mut mzl = DMatrix::zeros(n, n);
    let mut nonmzl = DMatrix::zeros(n, n);
    for c in 0..n {
        for r in 0..n {
            let v = a[(r, c)];
            if r == c || v >= 0.0 {
                mzl[(r, c)] = v;
            } else {
                nonmzl[(r, c)] = v;
            }
        }
    }
    Ok(MetzlerSplit { mzl, nonmzl })
}

/// `v` with coordinate `i` replaced by `w_i`.
pub fn replace_coord(v: &[f64], i: usize, w: &[f64]) -> Result<Vec<f64>> {
    if v.len() != w.len() {
        return Err(ReachError::DimensionMismatch {
            what: "replace_coord operands",
            expected: v.len(),
            got: w.len(),
        });
    }
    if i >= v.len() {
        return Err(ReachError::IndexOutOfRange {
            index: i,
            len: v.len(),
        });
    }
    let mut out = v.to_vec();
    out[i] = w[i];
    Ok(out)
}

/// Southeast order: `a.x <= b.x` and `b.xhat <= a.xhat`.
pub fn se_leq(a: &EmbeddingState, b: &EmbeddingState) -> Result<bool> {
    if a.dim() != b.dim() || a.xhat.len() != b.xhat.len() {
        return Err(ReachError::DimensionMismatch {
            what: "southeast comparison",
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let lower_ok = a.x.iter().zip(&b.x).all(|(p, q)| p <= q);
    let upper_ok = b.xhat.iter().zip(&a.xhat).all(|(p, q)| p <= q);
    Ok(lower_ok && upper_ok)
}

pub fn box_contains(outer: &IntervalBox, inner: &IntervalBox) -> Result<bool> {
    se_leq(&outer.as_state(), &inner.as_state())
}

/// Containment with an additive slack on every face.
pub fn box_contains_with_slack(outer: &IntervalBox, inner: &IntervalBox, slack: f64) -> Result<bool> {
    if outer.dim() != inner.dim() {
        return Err(ReachError::DimensionMismatch {
            what: "box containment",
            expected: outer.dim(),
            got: inner.dim(),
        });
    }
    Ok((0..outer.dim()).all(|i| {
        outer.lower[i] - slack <= inner.lower[i] && inner.upper[i] <= outer.upper[i] + slack
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), rows[0].len(), |r, c| rows[r][c])
    }

    fn st(x: &[f64], xhat: &[f64]) -> EmbeddingState {
        EmbeddingState::new(x.to_vec(), xhat.to_vec()).unwrap()
    }

    #[test]
    fn signed_split_examples() {
        let s = signed_split(&mat(&[&[1.0, -2.0], &[0.0, 3.0]]));
        assert_eq!(s.plus, mat(&[&[1.0, 0.0], &[0.0, 3.0]]));
        assert_eq!(s.minus, mat(&[&[0.0, -2.0], &[0.0, 0.0]]));

        let z = DMatrix::<f64>::zeros(2, 3);
        let s = signed_split(&z);
        assert_eq!(s.plus, z);
        assert_eq!(s.minus, z);

        let s = signed_split(&mat(&[&[-5.0]]));
        assert_eq!(s.plus, mat(&[&[0.0]]));
        assert_eq!(s.minus, mat(&[&[-5.0]]));
    }

    #[test]
    fn metzler_split_examples() {
        let m = metzler_split(&mat(&[&[-1.0, 2.0], &[-3.0, 4.0]])).unwrap();
        assert_eq!(m.mzl, mat(&[&[-1.0, 2.0], &[0.0, 4.0]]));
        assert_eq!(m.nonmzl, mat(&[&[0.0, 0.0], &[-3.0, 0.0]]));

        let a = mat(&[&[1.0, 0.5], &[0.0, 2.0]]);
        let m = metzler_split(&a).unwrap();
        assert_eq!(m.mzl, a);
        assert_eq!(m.nonmzl, DMatrix::zeros(2, 2));

        let m = metzler_split(&mat(&[&[-1.0, -1.0], &[-1.0, -1.0]])).unwrap();
        assert_eq!(m.mzl, mat(&[&[-1.0, 0.0], &[0.0, -1.0]]));
        assert_eq!(m.nonmzl, mat(&[&[0.0, -1.0], &[-1.0, 0.0]]));
    }

    #[test]
    fn metzler_split_rejects_non_square() {
        assert!(metzler_split(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn replace_coord_examples() {
        assert_eq!(
            replace_coord(&[1.0, 2.0, 3.0], 1, &[9.0, 9.0, 9.0]).unwrap(),
            vec![1.0, 9.0, 3.0]
        );
        assert_eq!(replace_coord(&[4.0, 5.0], 1, &[4.0, 5.0]).unwrap(), vec![4.0, 5.0]);
        assert_eq!(replace_coord(&[0.0, 0.0], 0, &[5.0, 7.0]).unwrap(), vec![5.0, 0.0]);
        assert!(matches!(
            replace_coord(&[0.0, 0.0], 2, &[5.0, 7.0]),
            Err(ReachError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn se_leq_examples() {
        assert!(se_leq(&st(&[0.0], &[2.0]), &st(&[1.0], &[1.5])).unwrap());
        let a = st(&[0.3, -1.0], &[0.4, 2.0]);
        assert!(se_leq(&a, &a).unwrap());
        assert!(!se_leq(&st(&[0.0], &[1.0]), &st(&[-1.0], &[2.0])).unwrap());
        assert!(se_leq(&st(&[0.0], &[1.0]), &st(&[0.0, 1.0], &[1.0, 2.0])).is_err());
    }

    #[test]
    fn box_contains_examples() {
        let unit = IntervalBox::new(vec![0.0], vec![1.0]).unwrap();
        let inner = IntervalBox::new(vec![0.2], vec![0.8]).unwrap();
        let shifted = IntervalBox::new(vec![0.5], vec![1.5]).unwrap();
        assert!(box_contains(&unit, &inner).unwrap());
        assert!(box_contains(&unit, &unit).unwrap());
        assert!(!box_contains(&unit, &shifted).unwrap());
    }

    #[test]
    fn box_rejects_inverted_bounds() {
        assert!(IntervalBox::new(vec![1.0], vec![0.0]).is_err());
        assert!(IntervalBox::new(vec![0.0, 1.0], vec![0.0]).is_err());
    }

    fn matrix_strategy() -> impl Strategy<Value = DMatrix<f64>> {
        (1usize..5, 1usize..5).prop_flat_map(|(r, c)| {
            prop::collection::vec(-10.0f64..10.0, r * c)
                .prop_map(move |v| DMatrix::from_vec(r, c, v))
        })
    }

    fn square_strategy() -> impl Strategy<Value = DMatrix<f64>> {
        (1usize..5).prop_flat_map(|n| {
            prop::collection::vec(-10.0f64..10.0, n * n)
                .prop_map(move |v| DMatrix::from_vec(n, n, v))
        })
    }

    fn state_strategy(n: usize) -> impl Strategy<Value = EmbeddingState> {
        (
            prop::collection::vec(-3i32..3, n),
            prop::collection::vec(-3i32..3, n),
        )
            .prop_map(|(a, b)| EmbeddingState {
                x: a.into_iter().map(f64::from).collect(),
                xhat: b.into_iter().map(f64::from).collect(),
            })
    }

    proptest! {
        #[test]
        fn signed_split_recomposes_exactly(m in matrix_strategy()) {
            let s = signed_split(&m);
            prop_assert!(s.plus.iter().all(|v| *v >= 0.0));
            prop_assert!(s.minus.iter().all(|v| *v <= 0.0));
            prop_assert_eq!(&s.plus + &s.minus, m);
        }

        #[test]
        fn metzler_split_recomposes_exactly(a in square_strategy()) {
            let s = metzler_split(&a).unwrap();
            prop_assert_eq!(&s.mzl + &s.nonmzl, a.clone());
            for i in 0..a.nrows() {
                prop_assert_eq!(s.mzl[(i, i)], a[(i, i)]);
                prop_assert_eq!(s.nonmzl[(i, i)], 0.0);
                for j in 0..a.ncols() {
                    if i != j {
                        prop_assert!(s.mzl[(i, j)] >= 0.0);
                        prop_assert!(s.nonmzl[(i, j)] <= 0.0);
                    }
                }
            }
        }

        #[test]
        fn replace_coord_is_idempotent(
            v in prop::collection::vec(-5.0f64..5.0, 4),
            w in prop::collection::vec(-5.0f64..5.0, 4),
            i in 0usize..4,
        ) {
            let once = replace_coord(&v, i, &w).unwrap();
            let twice = replace_coord(&once, i, &w).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn se_leq_is_a_partial_order(
            a in state_strategy(2),
            b in state_strategy(2),
            c in state_strategy(2),
        ) {
            prop_assert!(se_leq(&a, &a).unwrap());
            if se_leq(&a, &b).unwrap() && se_leq(&b, &a).unwrap() {
                prop_assert_eq!(&a, &b);
            }
            if se_leq(&a, &b).unwrap() && se_leq(&b, &c).unwrap() {
                prop_assert!(se_leq(&a, &c).unwrap());
            }
        }
    }
}
