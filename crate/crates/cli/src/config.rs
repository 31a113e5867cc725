//! Pipeline configuration: one JSON document, optionally patched with
//! `--set key.path=value` overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use cladesense::classify::{GbtParams, SvmParams};
use cladesense::metrics::Averaging;
use cladesense::reputation::BrandVectorMode;
use cladesense::topicmodel::TimeBin;

pub const EMBED_URL_ENV: &str = "CLADESENSE_EMBED_URL";

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub out: Option<PathBuf>,
    pub inputs: Inputs,
    pub preprocess: PreprocessSection,
    pub ngrams: NgramSection,
    pub topics: TopicSection,
    pub clades: CladeSection,
    pub train: TrainSection,
    pub evaluate: EvaluateSection,
    pub reputation: ReputationSection,
}

/// Input files. Relative paths resolve against the config file's directory.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    pub comments: Option<PathBuf>,
    pub posts: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub brands: Option<PathBuf>,
    pub topic_names: Option<PathBuf>,
    pub clade_sentiments: Option<PathBuf>,
    pub topic_overrides: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessSection {
    pub lowercase: bool,
    pub strip_emoji: bool,
    /// Include the bundled English and Filipino stopword list.
    pub default_stopwords: bool,
    pub extra_stopwords: Vec<String>,
}

impl Default for PreprocessSection {
    fn default() -> Self {
        PreprocessSection {
            lowercase: true,
            strip_emoji: true,
            default_stopwords: true,
            extra_stopwords: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NgramMode {
    /// Normalized text with stopwords kept.
    Raw,
    /// Normalized text with stopwords removed.
    Clean,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NgramSection {
    pub sizes: Vec<usize>,
    pub top_k: usize,
    pub mode: NgramMode,
}

impl Default for NgramSection {
    fn default() -> Self {
        NgramSection {
            sizes: vec![1, 2, 3],
            top_k: 20,
            mode: NgramMode::Raw,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    File,
    Http,
    Builtin,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopicSection {
    pub provider: ProviderKind,
    pub embedding_url: Option<String>,
    pub batch_size: usize,
    pub timeout_secs: u64,
    /// Output dimension of the built-in TF-IDF + PCA embedder.
    pub builtin_dim: usize,
    pub max_features: Option<usize>,
    /// Dimension clustering runs in; `None` clusters the raw embeddings.
    pub pca_dim: Option<usize>,
    pub eps: f64,
    pub min_members: usize,
    pub top_terms: usize,
    pub time_bin: TimeBin,
    /// Topics to chart over time; defaults to the largest `temporal_top`.
    pub temporal_topics: Option<Vec<i64>>,
    pub temporal_top: usize,
}

impl Default for TopicSection {
    fn default() -> Self {
        TopicSection {
            provider: ProviderKind::File,
            embedding_url: None,
            batch_size: 64,
            timeout_secs: 30,
            builtin_dim: 64,
            max_features: Some(5000),
            pca_dim: Some(5),
            eps: 0.5,
            min_members: 10,
            top_terms: 10,
            time_bin: TimeBin::Day,
            temporal_topics: None,
            temporal_top: 5,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CladeSection {
    pub threshold: Option<f64>,
    pub n_clades: Option<usize>,
    /// Topics left out of the dendrogram entirely.
    pub exclude_topics: Vec<i64>,
    /// Topics whose comments are never labeled.
    pub exclusions: Vec<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub seeds: Vec<u64>,
    pub train_fraction: f64,
    pub oversample: bool,
    /// Split before oversampling, so no item copy lands in both folds.
    pub split_first: bool,
    pub knn_k: Vec<usize>,
    pub svm: SvmParams,
    pub gbt: GbtParams,
    pub max_features: Option<usize>,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            seeds: vec![15, 27, 32, 45, 51],
            train_fraction: 0.8,
            oversample: true,
            split_first: false,
            knn_k: vec![10, 20],
            svm: SvmParams::default(),
            gbt: GbtParams::default(),
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub averaging: Averaging,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReputationSection {
    pub mode: BrandVectorMode,
    pub top_n: usize,
}

impl Default for ReputationSection {
    fn default() -> Self {
        ReputationSection {
            mode: BrandVectorMode::MentionCentroid,
            top_n: 5,
        }
    }
}

/// Sets `path` (dot separated) inside `root`, creating objects on the way.
/// The value is parsed as JSON when possible and kept as a string otherwise.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let Some((key, raw)) = assignment.split_once('=') else {
        bail!("override {assignment:?} is not of the form key=value");
    };
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        bail!("override key {key:?} is malformed");
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        if !cur.is_object() {
            bail!("override {key:?}: {part:?} is not inside an object");
        }
        cur = cur
            .as_object_mut()
            .expect("checked above")
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
        if cur.is_null() {
            *cur = Value::Object(Default::default());
        }
    }
    match cur.as_object_mut() {
        Some(obj) => {
            obj.insert(parts[parts.len() - 1].to_owned(), value);
            Ok(())
        }
        None => bail!("override {key:?} does not address an object field"),
    }
}

/// A loaded configuration plus the directory its relative paths resolve
/// against.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: PipelineConfig,
    pub base_dir: PathBuf,
}

pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Loaded> {
    let (mut value, base_dir) = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?;
            let dir = p.parent().map(Path::to_path_buf).unwrap_or_default();
            (v, dir)
        }
        None => (Value::Object(Default::default()), PathBuf::new()),
    };
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    let mut config: PipelineConfig = serde_json::from_value(value).context("invalid configuration")?;
    if let Ok(url) = std::env::var(EMBED_URL_ENV) {
        if !url.is_empty() {
            config.topics.embedding_url = Some(url);
        }
    }
    validate(&config)?;
    Ok(Loaded { config, base_dir })
}

fn validate(c: &PipelineConfig) -> Result<()> {
    if c.train.seeds.is_empty() {
        bail!("train.seeds must not be empty");
    }
    if c.clades.threshold.is_some() && c.clades.n_clades.is_some() {
        bail!("set at most one of clades.threshold and clades.n_clades");
    }
    if c.ngrams.sizes.is_empty() {
        bail!("ngrams.sizes must not be empty");
    }
    Ok(())
}

impl Loaded {
    /// Resolves an optional input path, failing with the config key name if
    /// it is unset.
    pub fn input(&self, value: &Option<PathBuf>, key: &str) -> Result<PathBuf> {
        match value {
            Some(p) => Ok(self.resolve(p)),
            None => bail!("inputs.{key} is not configured"),
        }
    }

    pub fn optional_input(&self, value: &Option<PathBuf>) -> Option<PathBuf> {
        value.as_ref().map(|p| self.resolve(p))
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}
