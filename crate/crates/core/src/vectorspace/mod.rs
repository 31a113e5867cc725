//! Vector representations: TF-IDF document vectors, dense embedding
//! matrices, PCA reduction and cosine similarity.

mod embed;
mod pca;
mod tfidf;

pub use embed::{
    embed, BuiltinEmbeddings, EmbedDoc, EmbeddingProvider, FileEmbeddings, HttpEmbeddings,
};
pub use pca::{pca_reduce, PcaModel};
pub use tfidf::{fit_tfidf, fit_tfidf_limited, transform_tfidf, Vocabulary};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse real vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVec {
    pub dim: usize,
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseVec {
    pub fn zeros(dim: usize) -> Self {
        SparseVec {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from (index, value) pairs; pairs must be sorted by index and
    /// unique. Zero values are dropped.
    pub fn from_sorted(dim: usize, pairs: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (i, v) in pairs {
            debug_assert!(i < dim);
            debug_assert!(indices.last().is_none_or(|&last| (last as usize) < i));
            if v != 0.0 {
                indices.push(i as u32);
                values.push(v);
            }
        }
        SparseVec { dim, indices, values }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        SparseVec::from_sorted(values.len(), values.iter().copied().enumerate())
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&i, &v)| (i as usize, v))
    }

    pub fn get(&self, i: usize) -> f64 {
        match self.indices.binary_search(&(i as u32)) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * dense[i]).sum()
    }

    /// Exact squared Euclidean distance via a merge over both index lists.
    pub fn sq_dist(&self, other: &SparseVec) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut acc = 0.0;
        while a < self.indices.len() || b < other.indices.len() {
            let ia = self.indices.get(a).copied().unwrap_or(u32::MAX);
            let ib = other.indices.get(b).copied().unwrap_or(u32::MAX);
            let d = if ia == ib {
                let d = self.values[a] - other.values[b];
                a += 1;
                b += 1;
                d
            } else if ia < ib {
                a += 1;
                self.values[a - 1]
            } else {
                b += 1;
                other.values[b - 1]
            };
            acc += d * d;
        }
        acc
    }
}

/// A document's feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocVector {
    pub doc_id: String,
    pub values: SparseVec,
    pub norm: f64,
}

/// Dense row-per-document matrix with aligned ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    ids: Vec<String>,
    dim: usize,
    rows: Vec<Vec<f64>>,
}

impl EmbeddingMatrix {
    pub fn new(ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if ids.len() != rows.len() {
            return Err(Error::InvalidParam(format!(
                "{} ids for {} rows",
                ids.len(),
                rows.len()
            )));
        }
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        if !rows.is_empty() && dim == 0 {
            return Err(Error::InvalidParam("embedding dimension is zero".into()));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(Error::InvalidParam(format!("duplicate embedding id {dup:?}")));
        }
        Ok(EmbeddingMatrix { ids, dim, rows })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2_norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sq_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Cosine of the angle between two vectors, clamped to [-1, 1].
/// A zero vector is an error rather than a silent 0.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let (na, nb) = (l2_norm(a), l2_norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}
