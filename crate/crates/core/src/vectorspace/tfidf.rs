use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{DocVector, SparseVec};
use crate::error::{Error, Result};

/// Fitted TF-IDF vocabulary. Terms are sorted lexicographically so that
/// index assignment only depends on the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRecord", into = "VocabularyRecord")]
pub struct Vocabulary {
    terms: Vec<String>,
    df: Vec<u64>,
    n_docs: u64,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRecord {
    n_docs: u64,
    terms: Vec<String>,
    df: Vec<u64>,
}

impl From<VocabularyRecord> for Vocabulary {
    fn from(r: VocabularyRecord) -> Self {
        Vocabulary::from_parts(r.terms, r.df, r.n_docs)
    }
}

impl From<Vocabulary> for VocabularyRecord {
    fn from(v: Vocabulary) -> Self {
        VocabularyRecord {
            n_docs: v.n_docs,
            terms: v.terms,
            df: v.df,
        }
    }
}

impl Vocabulary {
    fn from_parts(terms: Vec<String>, df: Vec<u64>, n_docs: u64) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            terms,
            df,
            n_docs,
            index,
        }
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn df(&self, term: &str) -> Option<u64> {
        self.index_of(term).map(|i| self.df[i])
    }

    /// Smoothed inverse document frequency `ln((1 + N) / (1 + df)) + 1`.
    pub fn idf_at(&self, i: usize) -> f64 {
        ((1.0 + self.n_docs as f64) / (1.0 + self.df[i] as f64)).ln() + 1.0
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.index_of(term).map(|i| self.idf_at(i))
    }
}

fn document_frequencies<S: AsRef<str>>(token_lists: &[Vec<S>]) -> Result<BTreeMap<String, u64>> {
    if token_lists.is_empty() {
        return Err(Error::Empty("corpus has no documents"));
    }
    let mut df: BTreeMap<String, u64> = BTreeMap::new();
    for doc in token_lists {
        let unique: HashSet<&str> = doc.iter().map(AsRef::as_ref).collect();
        for t in unique {
            *df.entry(t.to_owned()).or_insert(0) += 1;
        }
    }
    if df.is_empty() {
        return Err(Error::Empty("corpus has no tokens"));
    }
    Ok(df)
}

pub fn fit_tfidf<S: AsRef<str>>(token_lists: &[Vec<S>]) -> Result<Vocabulary> {
    let df = document_frequencies(token_lists)?;
    let (terms, counts) = df.into_iter().unzip();
    Ok(Vocabulary::from_parts(terms, counts, token_lists.len() as u64))
}

/// Like [`fit_tfidf`] but keeps only terms with `df >= min_df`, and at most
/// `max_features` of them (highest df first, ties lexicographic).
pub fn fit_tfidf_limited<S: AsRef<str>>(
    token_lists: &[Vec<S>],
    min_df: u64,
    max_features: Option<usize>,
) -> Result<Vocabulary> {
    let df = document_frequencies(token_lists)?;
    let mut kept: Vec<(String, u64)> = df.into_iter().filter(|(_, c)| *c >= min_df).collect();
    if let Some(max) = max_features {
        if kept.len() > max {
            kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            kept.truncate(max);
            kept.sort_by(|a, b| a.0.cmp(&b.0));
        }
    }
    if kept.is_empty() {
        return Err(Error::Empty("no term survives the document-frequency filter"));
    }
    let (terms, counts) = kept.into_iter().unzip();
    Ok(Vocabulary::from_parts(terms, counts, token_lists.len() as u64))
}

/// Raw term frequency times smoothed idf, L2-normalized. Out-of-vocabulary
/// tokens are ignored; an all-OOV document yields the zero vector.
pub fn transform_tfidf<S: AsRef<str>>(doc_id: &str, tokens: &[S], vocab: &Vocabulary) -> DocVector {
    let mut tf: BTreeMap<usize, u64> = BTreeMap::new();
    for t in tokens {
        if let Some(i) = vocab.index_of(t.as_ref()) {
            *tf.entry(i).or_insert(0) += 1;
        }
    }
    let raw: Vec<(usize, f64)> = tf
        .into_iter()
        .map(|(i, c)| (i, c as f64 * vocab.idf_at(i)))
        .collect();
    let norm = raw.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
    let values = if norm > 0.0 {
        SparseVec::from_sorted(vocab.len(), raw.into_iter().map(|(i, v)| (i, v / norm)))
    } else {
        SparseVec::zeros(vocab.len())
    };
    let norm = values.norm();
    DocVector {
        doc_id: doc_id.to_owned(),
        values,
        norm,
    }
}
