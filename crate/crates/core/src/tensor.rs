//! Dense tensors of fixed rank over an `n`-dimensional index range.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub n: usize,
    pub rank: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(n: usize, rank: usize) -> Self {
        Tensor {
            n,
            rank,
            data: vec![0.0; n.pow(rank as u32)],
        }
    }

    pub fn from_fn(n: usize, rank: usize, f: impl Fn(&[usize]) -> f64) -> Self {
        let mut t = Self::zeros(n, rank);
        let mut idx = vec![0; rank];
        for slot in 0..t.data.len() {
            t.data[slot] = f(&idx);
            increment(&mut idx, n);
        }
        t
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    /// All index tuples in storage order.
    pub fn indices(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::with_capacity(self.data.len());
        let mut idx = vec![0; self.rank];
        for _ in 0..self.data.len() {
            out.push(idx.clone());
            increment(&mut idx, self.n);
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

fn increment(idx: &mut [usize], n: usize) {
    for slot in idx.iter_mut().rev() {
        *slot += 1;
        if *slot < n {
            return;
        }
        *slot = 0;
    }
}

/// Column label such as `B_1_112` with 1-based indices.
pub fn label(prefix: &str, idx: &[usize]) -> String {
    let digits: String = idx.iter().map(|i| (i + 1).to_string()).collect();
    if idx.len() <= 2 {
        format!("{prefix}_{digits}")
    } else {
        format!("{prefix}_{}_{}", &digits[..1], &digits[1..])
    }
}
