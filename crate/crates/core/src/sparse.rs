use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sparse row: strictly increasing column ids, no stored zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector<F> {
    indices: Vec<usize>,
    values: Vec<F>,
    dim: usize,
}

impl<F: Scalar> SparseVector<F> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            indices: Vec::new(),
            values: Vec::new(),
            dim,
        }
    }

    /// Builds a vector from parallel arrays, checking every invariant.
    pub fn new(indices: Vec<usize>, values: Vec<F>, dim: usize) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: indices.len(),
                right: values.len(),
            });
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("sparse indices must be strictly increasing"));
        }
        if let Some(&last) = indices.last() {
            if last >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: last + 1,
                });
            }
        }
        if values.iter().any(|v| v.is_zero()) {
            return Err(Error::config("sparse vectors must not store zeros"));
        }
        Ok(Self {
            indices,
            values,
            dim,
        })
    }

    /// Builds a vector from unordered `(index, value)` pairs. Duplicate
    /// indices are summed and zero results dropped.
    pub fn from_pairs(mut pairs: Vec<(usize, F)>, dim: usize) -> Result<Self> {
        pairs.sort_unstable_by_key(|&(i, _)| i);
        let mut indices = Vec::with_capacity(pairs.len());
        let mut values: Vec<F> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            if indices.last() == Some(&i) {
                let last = values.last_mut().expect("parallel arrays");
                *last = *last + v;
            } else {
                indices.push(i);
                values.push(v);
            }
        }
        let (indices, values) = indices
            .into_iter()
            .zip(values)
            .filter(|(_, v)| !v.is_zero())
            .unzip();
        Self::new(indices, values, dim)
    }

    pub fn from_dense(dense: &[F]) -> Self {
        let (indices, values) = dense
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(i, &v)| (i, v))
            .unzip();
        Self {
            indices,
            values,
            dim: dense.len(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, F)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn to_dense(&self) -> Vec<F> {
        let mut dense = vec![F::zero(); self.dim];
        for (i, v) in self.iter() {
            dense[i] = v;
        }
        dense
    }

    pub fn norm_sq(&self) -> F {
        self.values.iter().map(|&v| v * v).sum()
    }

    pub fn norm(&self) -> F {
        self.norm_sq().sqrt()
    }

    /// Dot product with a dense vector of length ≥ `dim`.
    #[inline]
    pub fn dot_dense(&self, dense: &[F]) -> F {
        self.iter().map(|(i, v)| v * dense[i]).sum()
    }

    /// `dense += alpha * self`.
    #[inline]
    pub fn axpy(&self, alpha: F, dense: &mut [F]) {
        for (i, v) in self.iter() {
            dense[i] = dense[i] + alpha * v;
        }
    }

    pub fn scaled(&self, factor: F) -> Self {
        if factor.is_zero() {
            return Self::zeros(self.dim);
        }
        Self {
            indices: self.indices.clone(),
            values: self.values.iter().map(|&v| v * factor).collect(),
            dim: self.dim,
        }
    }

    /// Unit-norm copy; the zero vector is returned unchanged.
    pub fn l2_normalized(&self) -> Self {
        let norm = self.norm();
        if norm.is_zero() {
            return self.clone();
        }
        let mut out = self.clone();
        for v in &mut out.values {
            *v = *v / norm;
        }
        out.values.retain(|v| !v.is_zero());
        out
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Row-major collection of sparse vectors sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<F> {
    rows: Vec<SparseVector<F>>,
    dim: usize,
}

impl<F: Scalar> SparseMatrix<F> {
    pub fn new(rows: Vec<SparseVector<F>>, dim: usize) -> Result<Self> {
        if let Some(bad) = rows.iter().find(|r| r.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(Self { rows, dim })
    }

    pub fn from_dense_rows(rows: &[Vec<F>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        Self::new(rows.iter().map(|r| SparseVector::from_dense(r)).collect(), dim)
    }

    pub fn rows(&self) -> &[SparseVector<F>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &SparseVector<F> {
        &self.rows[i]
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Copy with rows in the order given by `order`.
    pub fn select_rows(&self, order: &[usize]) -> Self {
        Self {
            rows: order.iter().map(|&i| self.rows[i].clone()).collect(),
            dim: self.dim,
        }
    }
}
