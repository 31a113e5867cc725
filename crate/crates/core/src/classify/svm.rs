use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{feature_dim, rng, Dataset, Model, TrainedModel};
use crate::error::{Error, Result};
use crate::label::Label;
use crate::vectorspace::SparseVec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 1e-4,
            epochs: 20,
        }
    }
}

/// Linear SVM. The bias is the weight of an implicit constant feature, so
/// it is regularized along with `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub params: SvmParams,
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Regularized hinge objective before training and after each epoch.
    pub loss_history: Vec<f64>,
}

impl LinearSvm {
    pub fn decision(&self, x: &SparseVec) -> f64 {
        x.dot_dense(&self.weights) + self.bias
    }

    pub fn predict(&self, x: &SparseVec) -> Label {
        if self.decision(x) >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    /// `lambda / 2 * |(w, b)|^2 + mean hinge loss` over `data`.
    pub fn objective(&self, data: &Dataset<SparseVec>) -> f64 {
        let reg = self.weights.iter().map(|w| w * w).sum::<f64>() + self.bias * self.bias;
        let hinge: f64 = data
            .items
            .iter()
            .map(|e| (1.0 - e.label.sign() * self.decision(&e.features)).max(0.0))
            .sum();
        0.5 * self.params.lambda * reg + hinge / data.len() as f64
    }
}

/// Stochastic subgradient descent on the L2-regularized hinge loss with
/// step `1 / (lambda * t)` and a seeded reshuffle every epoch.
pub fn train_svm(train: &Dataset<SparseVec>, params: SvmParams, seed: u64) -> Result<TrainedModel> {
    let dim = feature_dim(train)?;
    if !(params.lambda.is_finite() && params.lambda > 0.0) || params.epochs == 0 {
        return Err(Error::InvalidParam(format!(
            "SVM needs lambda > 0 and epochs >= 1, got {params:?}"
        )));
    }
    let mut m = LinearSvm {
        params,
        weights: vec![0.0; dim],
        bias: 0.0,
        loss_history: Vec::with_capacity(params.epochs + 1),
    };
    m.loss_history.push(m.objective(train));
    let radius = 1.0 / params.lambda.sqrt();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut r = rng(seed, 2);
    let mut t = 0u64;
    for _ in 0..params.epochs {
        order.shuffle(&mut r);
        for &i in &order {
            t += 1;
            let e = &train.items[i];
            let y = e.label.sign();
            let eta = 1.0 / (params.lambda * t as f64);
            let margin = y * m.decision(&e.features);
            let shrink = 1.0 - eta * params.lambda;
            m.weights.iter_mut().for_each(|w| *w *= shrink);
            m.bias *= shrink;
            if margin < 1.0 {
                for (j, v) in e.features.iter() {
                    m.weights[j] += eta * y * v;
                }
                m.bias += eta * y;
            }
            let norm = (m.weights.iter().map(|w| w * w).sum::<f64>() + m.bias * m.bias).sqrt();
            if norm > radius {
                let s = radius / norm;
                m.weights.iter_mut().for_each(|w| *w *= s);
                m.bias *= s;
            }
        }
        m.loss_history.push(m.objective(train));
    }
    Ok(TrainedModel {
        seed,
        dim,
        model: Model::Svm(m),
    })
}
