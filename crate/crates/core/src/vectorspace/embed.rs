use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{fit_tfidf_limited, transform_tfidf, EmbeddingMatrix, PcaModel, Vocabulary};
use crate::corpus::tokenize;
use crate::error::{Error, Result};

/// What a provider sees of a document.
#[derive(Debug, Clone, Copy)]
pub struct EmbedDoc<'a> {
    pub id: &'a str,
    pub raw_text: &'a str,
    pub clean_text: &'a str,
}

impl<'a> From<&'a crate::corpus::Comment> for EmbedDoc<'a> {
    fn from(c: &'a crate::corpus::Comment) -> Self {
        EmbedDoc {
            id: &c.id,
            raw_text: &c.raw_text,
            clean_text: &c.clean_text,
        }
    }
}

/// Source of document embeddings. Implementations must return one row per
/// input document, in input order.
pub trait EmbeddingProvider {
    fn embed_docs(&self, docs: &[EmbedDoc<'_>]) -> Result<EmbeddingMatrix>;
}

/// Embeds a list of documents with the given provider.
pub fn embed(docs: &[EmbedDoc<'_>], provider: &dyn EmbeddingProvider) -> Result<EmbeddingMatrix> {
    let m = provider.embed_docs(docs)?;
    if m.len() != docs.len() {
        return Err(Error::Service(format!(
            "provider returned {} rows for {} documents",
            m.len(),
            docs.len()
        )));
    }
    Ok(m)
}

#[derive(Deserialize, Serialize)]
struct EmbeddingRecord {
    id: String,
    vector: Vec<f64>,
}

/// Precomputed vectors keyed by document id.
#[derive(Debug, Clone, Default)]
pub struct FileEmbeddings {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl FileEmbeddings {
    /// Reads NDJSON records `{"id": str, "vector": [float, ...]}`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut out = FileEmbeddings::default();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record_err = |message: String| Error::Record {
                path: path.to_path_buf(),
                line: idx + 1,
                message,
            };
            let rec: EmbeddingRecord =
                serde_json::from_str(line).map_err(|e| record_err(format!("malformed JSON: {e}")))?;
            if rec.vector.is_empty() {
                return Err(record_err(format!("empty vector for {:?}", rec.id)));
            }
            if out.vectors.is_empty() {
                out.dim = rec.vector.len();
            } else if rec.vector.len() != out.dim {
                return Err(record_err(format!(
                    "vector for {:?} has length {}, expected {}",
                    rec.id,
                    rec.vector.len(),
                    out.dim
                )));
            }
            if out.vectors.contains_key(&rec.id) {
                return Err(record_err(format!("duplicate id {:?}", rec.id)));
            }
            out.vectors.insert(rec.id, rec.vector);
        }
        Ok(out)
    }

    pub fn from_matrix(m: &EmbeddingMatrix) -> Self {
        FileEmbeddings {
            dim: m.dim(),
            vectors: m
                .ids()
                .iter()
                .cloned()
                .zip(m.rows().iter().cloned())
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    /// Writes a matrix in the same NDJSON format [`FileEmbeddings::load`] reads.
    pub fn write(path: &Path, m: &EmbeddingMatrix) -> Result<()> {
        let mut buf = Vec::new();
        for (id, row) in m.ids().iter().zip(m.rows()) {
            serde_json::to_writer(
                &mut buf,
                &EmbeddingRecord {
                    id: id.clone(),
                    vector: row.clone(),
                },
            )?;
            buf.push(b'\n');
        }
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }
}

impl EmbeddingProvider for FileEmbeddings {
    fn embed_docs(&self, docs: &[EmbedDoc<'_>]) -> Result<EmbeddingMatrix> {
        let missing: Vec<&str> = docs
            .iter()
            .filter(|d| !self.vectors.contains_key(d.id))
            .map(|d| d.id)
            .collect();
        if !missing.is_empty() {
            let shown: Vec<&str> = missing.iter().take(20).copied().collect();
            let mut msg = shown.join(", ");
            if missing.len() > shown.len() {
                msg.push_str(&format!(" (and {} more)", missing.len() - shown.len()));
            }
            return Err(Error::MissingEmbedding(msg));
        }
        let ids = docs.iter().map(|d| d.id.to_owned()).collect();
        let rows = docs.iter().map(|d| self.vectors[d.id].clone()).collect();
        EmbeddingMatrix::new(ids, rows)
    }
}

/// Client for an embedding service: `POST <base>/embed` with
/// `{"texts": [...]}` answering `{"vectors": [[...], ...]}` in input order.
#[derive(Debug, Clone)]
pub struct HttpEmbeddings {
    pub url: String,
    pub batch_size: usize,
    pub timeout: Duration,
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: Vec<&'a str>,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

impl HttpEmbeddings {
    pub fn new(base_url: &str) -> Self {
        HttpEmbeddings {
            url: base_url.to_owned(),
            batch_size: 64,
            timeout: Duration::from_secs(30),
        }
    }

    fn endpoint(&self) -> String {
        let base = self.url.trim_end_matches('/');
        if base.ends_with("/embed") {
            base.to_owned()
        } else {
            format!("{base}/embed")
        }
    }
}

impl EmbeddingProvider for HttpEmbeddings {
    fn embed_docs(&self, docs: &[EmbedDoc<'_>]) -> Result<EmbeddingMatrix> {
        if self.batch_size == 0 {
            return Err(Error::InvalidParam("batch size must be positive".into()));
        }
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .build();
        let agent = ureq::Agent::new_with_config(config);
        let endpoint = self.endpoint();
        let mut rows = Vec::with_capacity(docs.len());
        for batch in docs.chunks(self.batch_size) {
            let body = EmbedRequest {
                texts: batch.iter().map(|d| d.raw_text).collect(),
            };
            let resp: EmbedResponse = agent
                .post(&endpoint)
                .send_json(&body)
                .map_err(|e| Error::Service(format!("{endpoint}: {e}")))?
                .into_body()
                .read_json()
                .map_err(|e| Error::Service(format!("{endpoint}: bad response: {e}")))?;
            if resp.vectors.len() != batch.len() {
                return Err(Error::Service(format!(
                    "{endpoint}: {} vectors for {} texts",
                    resp.vectors.len(),
                    batch.len()
                )));
            }
            rows.extend(resp.vectors);
        }
        let ids = docs.iter().map(|d| d.id.to_owned()).collect();
        EmbeddingMatrix::new(ids, rows)
    }
}

/// Self-contained fallback: TF-IDF over the fitted corpus projected with PCA.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuiltinEmbeddings {
    pub vocabulary: Vocabulary,
    pub pca: PcaModel,
}

impl BuiltinEmbeddings {
    pub fn fit<S: AsRef<str>>(
        token_lists: &[Vec<S>],
        out_dim: usize,
        max_features: Option<usize>,
    ) -> Result<Self> {
        let vocabulary = fit_tfidf_limited(token_lists, 1, max_features)?;
        let dense: Vec<Vec<f64>> = token_lists
            .iter()
            .map(|t| transform_tfidf("", t, &vocabulary).values.to_dense())
            .collect();
        let pca = PcaModel::fit(&dense, out_dim)?;
        Ok(BuiltinEmbeddings { vocabulary, pca })
    }

    pub fn dim(&self) -> usize {
        self.pca.out_dim()
    }
}

impl EmbeddingProvider for BuiltinEmbeddings {
    fn embed_docs(&self, docs: &[EmbedDoc<'_>]) -> Result<EmbeddingMatrix> {
        let rows = docs
            .iter()
            .map(|d| {
                let v = transform_tfidf(d.id, &tokenize(d.clean_text), &self.vocabulary);
                self.pca.project(&v.values.to_dense())
            })
            .collect();
        EmbeddingMatrix::new(docs.iter().map(|d| d.id.to_owned()).collect(), rows)
    }
}
