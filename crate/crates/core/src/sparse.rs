//! Compressed-row operators acting on node-wise scalar fields.

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrOp {
    pub ptr: Vec<usize>,
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
}

impl CsrOp {
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut ptr = Vec::with_capacity(rows.len() + 1);
        let mut idx = Vec::new();
        let mut val = Vec::new();
        ptr.push(0);
        for row in rows {
            for (c, v) in row {
                idx.push(c);
                val.push(v);
            }
            ptr.push(idx.len());
        }
        Self { ptr, idx, val }
    }

    pub fn nrows(&self) -> usize {
        self.ptr.len() - 1
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.ptr[r], self.ptr[r + 1]);
        self.idx[a..b]
            .iter()
            .copied()
            .zip(self.val[a..b].iter().copied())
    }

    pub fn row_dot(&self, r: usize, f: &[f64]) -> f64 {
        self.row(r).map(|(c, v)| v * f[c]).sum()
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..self.nrows()).map(|r| self.row_dot(r, f)).collect()
    }

    /// Entry-wise sum of two operators with identical shape.
    pub fn add(&self, other: &CsrOp) -> CsrOp {
        let rows = (0..self.nrows())
            .map(|r| {
                let mut acc = Accum::default();
                acc.extend(self.row(r), 1.0);
                acc.extend(other.row(r), 1.0);
                acc.finish()
            })
            .collect();
        CsrOp::from_rows(rows)
    }
}

/// Accumulates a linear combination of sparse stencils.
#[derive(Debug, Default, Clone)]
pub struct Accum(BTreeMap<usize, f64>);

impl Accum {
    pub fn push(&mut self, c: usize, v: f64) {
        *self.0.entry(c).or_insert(0.0) += v;
    }

    pub fn extend(&mut self, it: impl IntoIterator<Item = (usize, f64)>, scale: f64) {
        for (c, v) in it {
            self.push(c, scale * v);
        }
    }

    pub fn finish(self) -> Vec<(usize, f64)> {
        self.0.into_iter().filter(|(_, v)| *v != 0.0).collect()
    }
}
