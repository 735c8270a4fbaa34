//! Dense tensors of small rank over `R^D` with slotwise operations.
//!
//! Entries are stored row-major: the multi-index `(i_0, …, i_{r-1})` maps to
//! `i_0 D^{r-1} + … + i_{r-1}` and slot `s` has stride `D^{r-1-s}`. The
//! tangential projector `𝐏` applies `P = Id − n ⊗ n` to every slot; its
//! complement is `𝐐 = Id − 𝐏` as an operator on tensors (not slotwise).

use crate::linalg as la;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<const D: usize> {
    rank: usize,
    data: Vec<f64>,
}

impl<const D: usize> Tensor<D> {
    pub fn zeros(rank: usize) -> Self {
        Tensor {
            rank,
            data: vec![0.0; D.pow(rank as u32)],
        }
    }

    pub fn from_data(rank: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), D.pow(rank as u32));
        Tensor { rank, data }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor {
            rank: 0,
            data: vec![v],
        }
    }

    pub fn from_vector(v: &[f64; D]) -> Self {
        Tensor {
            rank: 1,
            data: v.to_vec(),
        }
    }

    pub fn from_matrix(m: &[[f64; D]; D]) -> Self {
        Tensor {
            rank: 2,
            data: m.iter().flat_map(|row| row.iter().copied()).collect(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn stride(&self, slot: usize) -> usize {
        D.pow((self.rank - 1 - slot) as u32)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    fn offset(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| acc * D + i)
    }

    pub fn scale_in_place(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn add_scaled(&mut self, other: &Tensor<D>, s: f64) {
        assert_eq!(self.rank, other.rank);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// Frobenius inner product over all entries.
    pub fn inner(&self, other: &Tensor<D>) -> f64 {
        assert_eq!(self.rank, other.rank);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// Apply a matrix to one slot: `out[.., k, ..] = Σ_l m[k][l] t[.., l, ..]`.
    pub fn apply_matrix_slot(&self, m: &[[f64; D]; D], slot: usize) -> Tensor<D> {
        assert!(slot < self.rank);
        let stride = self.stride(slot);
        let block = stride * D;
        let mut out = Tensor::zeros(self.rank);
        for outer in 0..self.data.len() / block {
            for inner in 0..stride {
                let base = outer * block + inner;
                for k in 0..D {
                    let mut acc = 0.0;
                    for l in 0..D {
                        acc += m[k][l] * self.data[base + l * stride];
                    }
                    out.data[base + k * stride] = acc;
                }
            }
        }
        out
    }

    /// Contract one slot against a vector, lowering the rank by one.
    pub fn contract_slot_with_vector(&self, slot: usize, v: &[f64; D]) -> Tensor<D> {
        assert!(slot < self.rank);
        let stride = self.stride(slot);
        let block = stride * D;
        let mut out = Tensor::zeros(self.rank - 1);
        for outer in 0..self.data.len() / block {
            for inner in 0..stride {
                let base = outer * block + inner;
                let mut acc = 0.0;
                for l in 0..D {
                    acc += v[l] * self.data[base + l * stride];
                }
                out.data[outer * stride + inner] = acc;
            }
        }
        out
    }

    /// Contract the trailing two slots against a matrix:
    /// `out[c] = Σ_{a,b} t[c, a, b] m[a][b]`.
    pub fn contract_last_two(&self, m: &[[f64; D]; D]) -> Tensor<D> {
        assert!(self.rank >= 2);
        let mut out = Tensor::zeros(self.rank - 2);
        for (c, o) in out.data.iter_mut().enumerate() {
            let base = c * D * D;
            let mut acc = 0.0;
            for a in 0..D {
                for b in 0..D {
                    acc += self.data[base + a * D + b] * m[a][b];
                }
            }
            *o = acc;
        }
        out
    }

    /// Append a trailing slot as an outer product with a vector.
    pub fn outer_with_vector(&self, v: &[f64; D]) -> Tensor<D> {
        let mut out = Tensor::zeros(self.rank + 1);
        for (c, &t) in self.data.iter().enumerate() {
            for (j, &vj) in v.iter().enumerate() {
                out.data[c * D + j] = t * vj;
            }
        }
        out
    }
}

/// Slotwise tangential projector `𝐏` for a unit normal and its tensorial
/// complement `𝐐 = Id − 𝐏`.
#[derive(Debug, Clone)]
pub struct TensorProjector<const D: usize> {
    p: [[f64; D]; D],
}

impl<const D: usize> TensorProjector<D> {
    pub fn new(normal: &[f64; D]) -> Self {
        TensorProjector {
            p: la::tangent_projector(normal),
        }
    }

    pub fn matrix(&self) -> &[[f64; D]; D] {
        &self.p
    }

    /// Apply `P = Id − n ⊗ n` to every slot; rank-0 tensors pass through.
    pub fn project(&self, t: &Tensor<D>) -> Tensor<D> {
        let mut out = t.clone();
        for slot in 0..t.rank() {
            out = out.apply_matrix_slot(&self.p, slot);
        }
        out
    }

    /// `𝐐 t = t − 𝐏 t`.
    pub fn complement(&self, t: &Tensor<D>) -> Tensor<D> {
        let mut out = t.clone();
        out.add_scaled(&self.project(t), -1.0);
        out
    }
}
