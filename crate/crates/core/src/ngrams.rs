//! Word n-gram frequency tables.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramSpec {
    pub n: usize,
    pub top_k: usize,
}

impl NgramSpec {
    pub fn new(n: usize, top_k: usize) -> Result<Self> {
        if n == 0 || top_k == 0 {
            return Err(Error::InvalidParam(format!(
                "n-gram spec needs n >= 1 and top_k >= 1 (got n={n}, top_k={top_k})"
            )));
        }
        Ok(NgramSpec { n, top_k })
    }
}

/// Ranked n-gram counts: frequency descending, ties lexicographic by gram.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramTable {
    pub n: usize,
    pub entries: Vec<(Vec<String>, u64)>,
}

/// Counts every sliding window of `n` tokens inside each comment.
pub fn count_ngrams<S: AsRef<str>>(tokens_per_comment: &[Vec<S>], n: usize) -> HashMap<Vec<String>, u64> {
    let mut counts: HashMap<Vec<String>, u64> = HashMap::new();
    if n == 0 {
        return counts;
    }
    for tokens in tokens_per_comment {
        for window in tokens.windows(n) {
            let gram: Vec<String> = window.iter().map(|t| t.as_ref().to_owned()).collect();
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

pub fn rank(counts: HashMap<Vec<String>, u64>, n: usize, top_k: usize) -> NgramTable {
    let mut entries: Vec<(Vec<String>, u64)> = counts.into_iter().collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    entries.truncate(top_k);
    NgramTable { n, entries }
}

/// N-grams never span comment boundaries; comments shorter than `n`
/// contribute nothing.
pub fn extract_ngrams<S: AsRef<str>>(tokens_per_comment: &[Vec<S>], spec: NgramSpec) -> NgramTable {
    rank(count_ngrams(tokens_per_comment, spec.n), spec.n, spec.top_k)
}

impl NgramTable {
    /// CSV with header `gram,frequency`, grams space-joined.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["gram", "frequency"])?;
        for (gram, freq) in &self.entries {
            w.write_record([gram.join(" "), freq.to_string()])?;
        }
        w.into_inner()
            .map_err(|e| Error::InvalidParam(format!("csv buffer: {e}")))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let bytes = self.to_csv()?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }
}

/// Builds one table per spec.
pub fn ngram_report<S: AsRef<str>>(tokens_per_comment: &[Vec<S>], specs: &[NgramSpec]) -> Vec<NgramTable> {
    specs
        .iter()
        .map(|spec| extract_ngrams(tokens_per_comment, *spec))
        .collect()
}
