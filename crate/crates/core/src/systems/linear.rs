//! Linear plants `x' = A x + B u + C w + c`.

use nalgebra::DMatrix;

use super::{DecompositionArgs, SystemModel};
use crate::error::{ReachError, Result};
use crate::interval::{metzler_split, signed_split, MetzlerSplit, SignedMatrixSplit};

#[derive(Debug, Clone)]
pub struct LinearSystemModel {
    name: String,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c_mat: DMatrix<f64>,
    offset: Vec<f64>,
    labels: Option<Vec<String>>,
    a_split: MetzlerSplit,
    b_split: SignedMatrixSplit,
    c_split: SignedMatrixSplit,
}

impl LinearSystemModel {
    /// `a` is `n x n`, `b` is `n x p`, `c_mat` is `n x q` (may have zero
    /// columns), `offset` has length `n`.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c_mat: DMatrix<f64>, offset: Vec<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(ReachError::DimensionMismatch {
                what: "columns of A",
                expected: n,
                got: a.ncols(),
            });
        }
        for (what, got) in [("rows of B", b.nrows()), ("rows of C", c_mat.nrows()), ("offset", offset.len())] {
            if got != n {
                return Err(ReachError::DimensionMismatch {
                    what,
                    expected: n,
                    got,
                });
            }
        }
        let a_split = metzler_split(&a)?;
        let b_split = signed_split(&b);
        let c_split = signed_split(&c_mat);
        Ok(Self {
            name: "linear".into(),
            a,
            b,
            c_mat,
            offset,
            labels: None,
            a_split,
            b_split,
            c_split,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.a.nrows() {
            return Err(ReachError::DimensionMismatch {
                what: "state labels",
                expected: self.a.nrows(),
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c_mat
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn a_split(&self) -> &MetzlerSplit {
        &self.a_split
    }

    pub fn b_split(&self) -> &SignedMatrixSplit {
        &self.b_split
    }

    pub fn c_split(&self) -> &SignedMatrixSplit {
        &self.c_split
    }
}

fn row_dot(m: &DMatrix<f64>, i: usize, v: &[f64]) -> f64 {
    let mut s = 0.0;
    for (j, x) in v.iter().enumerate() {
        s += m[(i, j)] * x;
    }
    s
}

impl SystemModel for LinearSystemModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    fn disturbance_dim(&self) -> usize {
        self.c_mat.ncols()
    }

    fn state_labels(&self) -> Vec<String> {
        match &self.labels {
            Some(l) => l.clone(),
            None => (0..self.state_dim()).map(|i| format!("x{i}")).collect(),
        }
    }

    fn vector_field(&self, x: &[f64], u: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        DecompositionArgs::diagonal(x, u, w).check_dims(
            self.state_dim(),
            self.input_dim(),
            self.disturbance_dim(),
        )?;
        Ok((0..self.state_dim())
            .map(|i| row_dot(&self.a, i, x) + row_dot(&self.b, i, u) + row_dot(&self.c_mat, i, w) + self.offset[i])
            .collect())
    }

    /// `[A]^Mzl x + [A]^nonMzl xhat + B+ u + B- uhat + C+ w + C- what + c`.
    fn decomposition_row(&self, i: usize, a: &DecompositionArgs<'_>) -> Result<f64> {
        a.check_dims(self.state_dim(), self.input_dim(), self.disturbance_dim())?;
        if i >= self.state_dim() {
            return Err(ReachError::IndexOutOfRange {
                index: i,
                len: self.state_dim(),
            });
        }
        Ok(row_dot(&self.a_split.mzl, i, a.x)
            + row_dot(&self.a_split.nonmzl, i, a.xhat)
            + row_dot(&self.b_split.plus, i, a.u)
            + row_dot(&self.b_split.minus, i, a.uhat)
            + row_dot(&self.c_split.plus, i, a.w)
            + row_dot(&self.c_split.minus, i, a.what)
            + self.offset[i])
    }
}
