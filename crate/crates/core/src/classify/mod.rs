//! Dataset balancing and splitting plus five binary sentiment classifiers:
//! multinomial naive Bayes, k-nearest neighbors, a linear SVM and
//! gradient-boosted trees grown level-wise or leaf-wise.

mod gbt;
mod knn;
mod nb;
mod svm;

pub use gbt::{train_gbt, Gbt, GbtParams, Growth, Node, Tree};
pub use knn::{train_knn, Knn};
pub use nb::{train_nb, NaiveBayes};
pub use svm::{train_svm, LinearSvm, SvmParams};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;
use crate::vectorspace::SparseVec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example<F> {
    pub id: String,
    pub features: F,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset<F> {
    pub items: Vec<Example<F>>,
}

impl<F> Dataset<F> {
    pub fn new(items: Vec<Example<F>>) -> Self {
        Dataset { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Counts indexed by [`Label::index`].
    pub fn class_counts(&self) -> [usize; 2] {
        let mut c = [0; 2];
        for it in &self.items {
            c[it.label.index()] += 1;
        }
        c
    }

    pub fn labels(&self) -> Vec<Label> {
        self.items.iter().map(|e| e.label).collect()
    }

    pub fn map<G>(self, mut f: impl FnMut(&Example<F>) -> G) -> Dataset<G> {
        Dataset {
            items: self
                .items
                .iter()
                .map(|e| Example {
                    id: e.id.clone(),
                    features: f(e),
                    label: e.label,
                })
                .collect(),
        }
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn check_both_classes(counts: [usize; 2]) -> Result<()> {
    for l in Label::ALL {
        if counts[l.index()] == 0 {
            return Err(Error::EmptyClass(l.as_str()));
        }
    }
    Ok(())
}

/// Appends minority-class items drawn uniformly with replacement until the
/// classes are the same size. Existing items keep their order.
pub fn balance_oversample<F: Clone>(data: &Dataset<F>, seed: u64) -> Result<Dataset<F>> {
    let counts = data.class_counts();
    check_both_classes(counts)?;
    let minority = if counts[0] < counts[1] {
        Label::Positive
    } else {
        Label::Negative
    };
    let pool: Vec<usize> = (0..data.len())
        .filter(|&i| data.items[i].label == minority)
        .collect();
    let deficit = counts[0].abs_diff(counts[1]);
    let mut r = rng(seed, 0);
    let mut items = data.items.clone();
    for _ in 0..deficit {
        items.push(data.items[pool[r.random_range(0..pool.len())]].clone());
    }
    Ok(Dataset { items })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
    pub oversample: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_fraction: 0.8,
            seed: 15,
            oversample: true,
        }
    }
}

/// Item indices of each fold, ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified split: each class is shuffled with the seed and its first
/// `floor(n * train_fraction)` items go to training.
pub fn split_indices<F>(data: &Dataset<F>, train_fraction: f64, seed: u64) -> Result<SplitIndices> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParam(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut r = rng(seed, 1);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for l in Label::ALL {
        let mut idx: Vec<usize> = (0..data.len()).filter(|&i| data.items[i].label == l).collect();
        let n = idx.len();
        let n_train = (n as f64 * train_fraction + 1e-9).floor() as usize;
        if n_train == 0 || n_train == n {
            return Err(Error::InvalidParam(format!(
                "class {l} has {n} item(s), too few for both folds at fraction {train_fraction}"
            )));
        }
        idx.shuffle(&mut r);
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}

pub fn subset<F: Clone>(data: &Dataset<F>, idx: &[usize]) -> Dataset<F> {
    Dataset {
        items: idx.iter().map(|&i| data.items[i].clone()).collect(),
    }
}

/// Train/test folds. With `oversample`, balancing runs on the whole
/// dataset before the split.
pub fn split<F: Clone>(data: &Dataset<F>, config: &SplitConfig) -> Result<(Dataset<F>, Dataset<F>)> {
    let pool = if config.oversample {
        balance_oversample(data, config.seed)?
    } else {
        data.clone()
    };
    let s = split_indices(&pool, config.train_fraction, config.seed)?;
    Ok((subset(&pool, &s.train), subset(&pool, &s.test)))
}

/// Splits first and oversamples only the training fold, so no copy of an
/// item can land in both folds.
pub fn split_then_oversample<F: Clone>(data: &Dataset<F>, config: &SplitConfig) -> Result<(Dataset<F>, Dataset<F>)> {
    let s = split_indices(data, config.train_fraction, config.seed)?;
    let train = subset(data, &s.train);
    let train = if config.oversample {
        balance_oversample(&train, config.seed)?
    } else {
        train
    };
    Ok((train, subset(data, &s.test)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Nb,
    Knn,
    Svm,
    GbtLevelwise,
    GbtLeafwise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "snake_case")]
pub enum Model {
    Nb(NaiveBayes),
    Knn(Knn),
    Svm(LinearSvm),
    GbtLevelwise(Gbt),
    GbtLeafwise(Gbt),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub seed: u64,
    pub dim: usize,
    pub model: Model,
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self.model {
            Model::Nb(_) => ModelKind::Nb,
            Model::Knn(_) => ModelKind::Knn,
            Model::Svm(_) => ModelKind::Svm,
            Model::GbtLevelwise(_) => ModelKind::GbtLevelwise,
            Model::GbtLeafwise(_) => ModelKind::GbtLeafwise,
        }
    }

    pub fn predict_one(&self, x: &SparseVec) -> Result<Label> {
        if x.dim != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found: x.dim,
            });
        }
        Ok(match &self.model {
            Model::Nb(m) => m.predict(x),
            Model::Knn(m) => m.predict(x),
            Model::Svm(m) => m.predict(x),
            Model::GbtLevelwise(m) | Model::GbtLeafwise(m) => m.predict(x),
        })
    }
}

pub fn predict(model: &TrainedModel, items: &[SparseVec]) -> Result<Vec<Label>> {
    items.iter().map(|x| model.predict_one(x)).collect()
}

pub(crate) fn feature_dim(train: &Dataset<SparseVec>) -> Result<usize> {
    let first = train.items.first().ok_or(Error::Empty("training set has no items"))?;
    let dim = first.features.dim;
    if let Some(e) = train.items.iter().find(|e| e.features.dim != dim) {
        return Err(Error::DimMismatch {
            expected: dim,
            found: e.features.dim,
        });
    }
    Ok(dim)
}
