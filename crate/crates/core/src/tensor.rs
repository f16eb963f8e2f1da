//! Dense row-major `f64` arrays.

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};

/// A dense multi-dimensional array of 64-bit reals stored in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(dim_err(format!("shape {shape:?} must be non-empty with positive extents")));
        }
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(dim_err(format!("shape {shape:?} holds {len} elements but {} were supplied", data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Tensor::new".into()));
        }
        Ok(Self { shape, data })
    }

    /// One-dimensional tensor. Panics on an empty vector.
    pub fn vector(data: Vec<f64>) -> Self {
        assert!(!data.is_empty(), "empty vector");
        Self { shape: vec![data.len()], data }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self { shape, data: vec![0.0; len] }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Number of rows when viewed as a batch: 1 for vectors, the leading extent otherwise.
    pub fn rows(&self) -> usize {
        if self.shape.len() == 1 {
            1
        } else {
            self.shape[0]
        }
    }

    /// Width of each row (product of the trailing extents).
    pub fn row_len(&self) -> usize {
        if self.shape.len() == 1 {
            self.shape[0]
        } else {
            self.shape[1..].iter().product()
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.row_len();
        &self.data[i * w..(i + 1) * w]
    }

    /// Gathers the given rows into a `[rows.len() × row_len]` matrix.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Tensor> {
        if rows.is_empty() {
            return Err(dim_err("cannot select zero rows"));
        }
        let w = self.row_len();
        let mut data = Vec::with_capacity(rows.len() * w);
        for &r in rows {
            if r >= self.rows() {
                return Err(dim_err(format!("row {r} out of range ({} rows)", self.rows())));
            }
            data.extend_from_slice(self.row(r));
        }
        Ok(Tensor { shape: vec![rows.len(), w], data })
    }

    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Tensor> {
        let len: usize = shape.iter().product();
        if len != self.data.len() || shape.contains(&0) {
            return Err(dim_err(format!("cannot reshape {:?} into {shape:?}", self.shape)));
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Index of the largest entry of row `i`; the first index wins on ties.
    pub fn argmax_row(&self, i: usize) -> usize {
        argmax(self.row(i))
    }
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn one_hot(class: usize, classes: usize) -> Tensor {
    let mut data = vec![0.0; classes];
    data[class] = 1.0;
    Tensor::vector(data)
}
