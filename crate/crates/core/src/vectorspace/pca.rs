use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::EmbeddingMatrix;
use crate::error::{Error, Result};

/// Fitted principal-component projection.
///
/// Components are unit eigenvectors of the sample covariance in descending
/// eigenvalue order, each sign-fixed so that its largest-magnitude entry is
/// positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
}

fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Indices of eigenvalues sorted descending; ties keep solver order.
fn descending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order
}

impl PcaModel {
    pub fn fit(rows: &[Vec<f64>], out_dim: usize) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::InvalidParam(format!("PCA needs at least 2 rows, got {n}")));
        }
        let dim = rows[0].len();
        if out_dim == 0 || out_dim > dim {
            return Err(Error::InvalidParam(format!(
                "PCA output dimension {out_dim} not in 1..={dim}"
            )));
        }
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let centered = DMatrix::from_fn(n, dim, |i, j| rows[i][j] - mean[j]);
        let denom = (n - 1) as f64;

        let (components, eigenvalues) = if dim <= n {
            let cov = centered.transpose() * &centered / denom;
            let eig = SymmetricEigen::new(cov);
            let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
            descending(&values)
                .into_iter()
                .take(out_dim)
                .map(|k| (eig.eigenvectors.column(k).iter().copied().collect::<Vec<_>>(), values[k]))
                .unzip()
        } else {
            // Wide data: eigenvectors of the n x n Gram matrix map back to
            // covariance eigenvectors through X^T u.
            let gram = &centered * centered.transpose() / denom;
            let eig = SymmetricEigen::new(gram);
            let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
            let mut comps = Vec::with_capacity(out_dim);
            let mut vals = Vec::with_capacity(out_dim);
            for k in descending(&values).into_iter().take(out_dim) {
                let v = centered.transpose() * eig.eigenvectors.column(k);
                let norm = v.norm();
                let v: Vec<f64> = if norm > 1e-12 {
                    v.iter().map(|x| x / norm).collect()
                } else {
                    vec![0.0; dim]
                };
                comps.push(v);
                vals.push(values[k].max(0.0));
            }
            (comps, vals)
        };
        let mut components: Vec<Vec<f64>> = components;
        components.iter_mut().for_each(|c| fix_sign(c));
        Ok(PcaModel {
            mean,
            components,
            eigenvalues,
        })
    }

    pub fn out_dim(&self) -> usize {
        self.components.len()
    }

    pub fn project(&self, row: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(row.iter().zip(&self.mean))
                    .map(|(w, (x, m))| w * (x - m))
                    .sum()
            })
            .collect()
    }
}

/// Centers rows and projects them onto the top `out_dim` principal
/// components.
pub fn pca_reduce(matrix: &EmbeddingMatrix, out_dim: usize) -> Result<EmbeddingMatrix> {
    if out_dim > matrix.dim() {
        return Err(Error::InvalidParam(format!(
            "PCA output dimension {out_dim} exceeds input dimension {}",
            matrix.dim()
        )));
    }
    let model = PcaModel::fit(matrix.rows(), out_dim)?;
    let rows = matrix.rows().iter().map(|r| model.project(r)).collect();
    EmbeddingMatrix::new(matrix.ids().to_vec(), rows)
}
