use serde::{Deserialize, Serialize};

use super::{feature_dim, Dataset, Model, TrainedModel};
use crate::error::{Error, Result};
use crate::label::Label;
use crate::vectorspace::SparseVec;

/// k-nearest neighbors under Euclidean distance. Distance ties go to the
/// lower training index; vote ties go positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub points: Vec<SparseVec>,
    pub labels: Vec<Label>,
}

impl Knn {
    /// Training indices of the `k` nearest points, nearest first.
    pub fn neighbors(&self, x: &SparseVec) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.sq_dist(x), i))
            .collect();
        let k = self.k.min(d.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < d.len() {
            d.select_nth_unstable_by(k, cmp);
            d.truncate(k);
        }
        d.sort_unstable_by(cmp);
        d.into_iter().map(|(_, i)| i).collect()
    }

    pub fn predict(&self, x: &SparseVec) -> Label {
        let pos = self
            .neighbors(x)
            .into_iter()
            .filter(|&i| self.labels[i] == Label::Positive)
            .count();
        if 2 * pos >= self.k {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

pub fn train_knn(train: &Dataset<SparseVec>, k: usize, seed: u64) -> Result<TrainedModel> {
    let dim = feature_dim(train)?;
    if k == 0 || k > train.len() {
        return Err(Error::InvalidParam(format!(
            "k = {k} must lie in 1..={}",
            train.len()
        )));
    }
    Ok(TrainedModel {
        seed,
        dim,
        model: Model::Knn(Knn {
            k,
            points: train.items.iter().map(|e| e.features.clone()).collect(),
            labels: train.labels(),
        }),
    })
}
