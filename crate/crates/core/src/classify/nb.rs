use serde::{Deserialize, Serialize};

use super::{feature_dim, Dataset, Model, TrainedModel};
use crate::error::{Error, Result};
use crate::label::Label;
use crate::vectorspace::SparseVec;

/// Multinomial naive Bayes with additive smoothing. Feature values act as
/// fractional term counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    pub alpha: f64,
    /// Indexed by [`Label::index`].
    pub log_prior: [f64; 2],
    /// `log_likelihood[class][term]`.
    pub log_likelihood: [Vec<f64>; 2],
}

impl NaiveBayes {
    /// Log prior plus feature-weighted log likelihoods, per class.
    pub fn log_scores(&self, x: &SparseVec) -> [f64; 2] {
        let mut s = self.log_prior;
        for (c, score) in s.iter_mut().enumerate() {
            *score += x.dot_dense(&self.log_likelihood[c]);
        }
        s
    }

    pub fn predict(&self, x: &SparseVec) -> Label {
        let s = self.log_scores(x);
        if s[0] >= s[1] {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

pub fn train_nb(train: &Dataset<SparseVec>, seed: u64) -> Result<TrainedModel> {
    let dim = feature_dim(train)?;
    let alpha = 1.0;
    let mut mass = [vec![0.0; dim], vec![0.0; dim]];
    let mut counts = [0usize; 2];
    for e in &train.items {
        let c = e.label.index();
        counts[c] += 1;
        for (j, v) in e.features.iter() {
            if v < 0.0 {
                return Err(Error::InvalidParam(format!(
                    "naive Bayes needs non-negative features; {} has {v} at {j}",
                    e.id
                )));
            }
            mass[c][j] += v;
        }
    }
    let n = train.len() as f64;
    let log_prior = [0, 1].map(|c| (counts[c] as f64 / n).ln());
    let log_likelihood = mass.map(|m| {
        let total: f64 = m.iter().sum::<f64>() + alpha * dim as f64;
        m.iter().map(|v| ((v + alpha) / total).ln()).collect()
    });
    Ok(TrainedModel {
        seed,
        dim,
        model: Model::Nb(NaiveBayes {
            alpha,
            log_prior,
            log_likelihood,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::Example;

    fn ex(id: &str, dense: &[f64], label: Label) -> Example<SparseVec> {
        Example {
            id: id.into(),
            features: SparseVec::from_dense(dense),
            label,
        }
    }

    fn nb(m: &TrainedModel) -> &NaiveBayes {
        match &m.model {
            Model::Nb(n) => n,
            _ => unreachable!(),
        }
    }

    #[test]
    fn disjoint_vocabulary() {
        let d = Dataset::new(vec![
            ex("g", &[1.0, 0.0], Label::Positive),
            ex("b", &[0.0, 1.0], Label::Negative),
        ]);
        let m = train_nb(&d, 0).unwrap();
        assert_eq!(m.predict_one(&SparseVec::from_dense(&[1.0, 0.0])).unwrap(), Label::Positive);
        assert_eq!(m.predict_one(&SparseVec::from_dense(&[0.0, 1.0])).unwrap(), Label::Negative);
        // uniform priors and a zero vector tie, which resolves positive
        assert_eq!(m.predict_one(&SparseVec::zeros(2)).unwrap(), Label::Positive);
    }

    #[test]
    fn rejects_negative_features() {
        let d = Dataset::new(vec![ex("a", &[-1.0], Label::Positive), ex("b", &[1.0], Label::Negative)]);
        assert!(train_nb(&d, 0).is_err());
    }

    #[test]
    fn shift_invariance() {
        let d = Dataset::new(vec![
            ex("a", &[2.0, 1.0, 0.0], Label::Positive),
            ex("b", &[0.0, 1.0, 3.0], Label::Negative),
            ex("c", &[1.0, 0.0, 0.0], Label::Negative),
        ]);
        let m = train_nb(&d, 0).unwrap();
        let base = nb(&m).clone();
        let mut shifted = base.clone();
        shifted.log_prior = shifted.log_prior.map(|p| p + 7.5);
        for x in [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.5, 0.5, 0.5]] {
            let x = SparseVec::from_dense(&x);
            assert_eq!(base.predict(&x), shifted.predict(&x));
        }
    }
}
