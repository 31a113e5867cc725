//! Brand-to-topic association by cosine similarity between a brand vector
//! and topic centroids.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Comment, PreprocessConfig};
use crate::error::{Error, Result};
use crate::topicmodel::TopicModel;
use crate::vectorspace::{cosine_similarity, l2_norm, EmbedDoc, EmbeddingMatrix, EmbeddingProvider};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BrandConfig {
    pub name: String,
    pub aliases: Vec<String>,
}

pub fn load_brands(path: &Path) -> Result<Vec<BrandConfig>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BrandVectorMode {
    /// Mean embedding of the comments that mention an alias.
    #[default]
    MentionCentroid,
    /// The provider's embedding of the brand name.
    NameEmbedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Brand {
    pub name: String,
    /// Each alias as a token sequence.
    pub aliases: Vec<Vec<String>>,
    pub vector: Vec<f64>,
    pub mentions: usize,
}

/// Cleans and tokenizes aliases the same way comments are cleaned.
pub fn alias_tokens(brand: &BrandConfig, pre: &PreprocessConfig) -> Result<Vec<Vec<String>>> {
    if brand.aliases.is_empty() {
        return Err(Error::InvalidParam(format!("brand {:?} has no aliases", brand.name)));
    }
    brand
        .aliases
        .iter()
        .map(|a| {
            let t = tokenize(&pre.clean(a));
            if t.is_empty() {
                Err(Error::InvalidParam(format!(
                    "alias {a:?} of brand {:?} is empty after cleaning",
                    brand.name
                )))
            } else {
                Ok(t)
            }
        })
        .collect()
}

/// Single-token aliases match any token containing them; longer aliases
/// must appear as an exact token sequence.
pub fn mentions(aliases: &[Vec<String>], tokens: &[String]) -> bool {
    aliases.iter().any(|a| match a.as_slice() {
        [one] => tokens.iter().any(|t| t.contains(one.as_str())),
        seq => tokens.windows(seq.len()).any(|w| w == seq),
    })
}

/// Brands that got a vector, plus the names of brands skipped for lack of
/// mentions.
#[derive(Debug, Clone, PartialEq)]
pub struct BrandVectors {
    pub brands: Vec<Brand>,
    pub skipped: Vec<String>,
}

pub fn build_brand_vectors(
    configs: &[BrandConfig],
    pre: &PreprocessConfig,
    comments: &[Comment],
    embeddings: &EmbeddingMatrix,
    mode: BrandVectorMode,
    provider: Option<&dyn EmbeddingProvider>,
) -> Result<BrandVectors> {
    if configs.is_empty() {
        return Err(Error::Empty("brand list"));
    }
    let rows: HashMap<&str, usize> = embeddings
        .ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let tokens: Vec<Vec<String>> = comments.iter().map(|c| tokenize(&c.clean_text)).collect();
    let mut out = BrandVectors {
        brands: Vec::new(),
        skipped: Vec::new(),
    };
    for cfg in configs {
        let aliases = alias_tokens(cfg, pre)?;
        let hits: Vec<usize> = comments
            .iter()
            .zip(&tokens)
            .filter(|(_, t)| mentions(&aliases, t))
            .filter_map(|(c, _)| rows.get(c.id.as_str()).copied())
            .collect();
        let vector = match mode {
            BrandVectorMode::MentionCentroid => {
                if hits.is_empty() {
                    log::warn!("brand {:?} is never mentioned; skipped", cfg.name);
                    out.skipped.push(cfg.name.clone());
                    continue;
                }
                let mut v = vec![0.0; embeddings.dim()];
                for &i in &hits {
                    for (a, x) in v.iter_mut().zip(embeddings.row(i)) {
                        *a += x;
                    }
                }
                v.iter_mut().for_each(|a| *a /= hits.len() as f64);
                v
            }
            BrandVectorMode::NameEmbedding => {
                let provider = provider.ok_or_else(|| {
                    Error::InvalidParam("name-embedding mode needs an embedding provider".into())
                })?;
                let clean = pre.clean(&cfg.name);
                let doc = EmbedDoc {
                    id: &cfg.name,
                    raw_text: &cfg.name,
                    clean_text: &clean,
                };
                provider.embed_docs(&[doc])?.row(0).to_vec()
            }
        };
        out.brands.push(Brand {
            name: cfg.name.clone(),
            aliases,
            vector,
            mentions: hits.len(),
        });
    }
    if out.brands.is_empty() {
        return Err(Error::Empty("no brand is mentioned in the corpus"));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSimilarity {
    pub topic_id: i64,
    pub name: String,
    pub similarity: f64,
}

/// Cosine similarity to every regular topic centroid, highest first; ties
/// by topic id. A zero centroid scores 0.
pub fn rank_topics(brand: &Brand, model: &TopicModel, top_n: usize) -> Result<Vec<TopicSimilarity>> {
    if l2_norm(&brand.vector) == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mut out = Vec::with_capacity(model.topics.len());
    for t in &model.topics {
        if t.centroid.len() != brand.vector.len() {
            return Err(Error::DimMismatch {
                expected: t.centroid.len(),
                found: brand.vector.len(),
            });
        }
        let similarity = match cosine_similarity(&brand.vector, &t.centroid) {
            Ok(s) => s,
            Err(Error::ZeroVector) => 0.0,
            Err(e) => return Err(e),
        };
        out.push(TopicSimilarity {
            topic_id: t.topic_id,
            name: t.display_name(),
            similarity,
        });
    }
    out.sort_by(|a, b| b.similarity.total_cmp(&a.similarity).then(a.topic_id.cmp(&b.topic_id)));
    out.truncate(top_n);
    Ok(out)
}

/// Brand name to its ranked topics.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReputationReport(pub BTreeMap<String, Vec<TopicSimilarity>>);

pub fn reputation_report(brands: &[Brand], model: &TopicModel, top_n: usize) -> Result<ReputationReport> {
    if brands.is_empty() {
        return Err(Error::Empty("brand list"));
    }
    let mut map = BTreeMap::new();
    for b in brands {
        map.insert(b.name.clone(), rank_topics(b, model, top_n)?);
    }
    Ok(ReputationReport(map))
}
