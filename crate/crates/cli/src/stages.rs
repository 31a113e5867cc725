//! One function per subcommand. Each reads its inputs (and upstream
//! artifacts), writes into its own directory under the output root and
//! records the result in the manifest.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use cladesense::clades::{
    assign_clade_sentiments, cut_dendrogram, default_threshold, load_clade_sentiments, load_topic_overrides,
    propagate_labels, ward_from_model, CladeCut, CutSpec, Dendrogram, LabeledClades, LabeledSet, Sentiment,
};
use cladesense::classify::{
    predict, split, split_then_oversample, train_gbt, train_knn, train_nb, train_svm, Dataset, Example, Growth,
    SplitConfig, TrainedModel,
};
use cladesense::corpus::{
    default_stopwords, load_corpus, load_stopwords, preprocess_all, tokenize, Comment, LoadMode, PreprocessConfig,
};
use cladesense::metrics::{average_row, evaluate, EvalRow, EvaluationReport};
use cladesense::ngrams::{extract_ngrams, NgramSpec};
use cladesense::reputation::{build_brand_vectors, load_brands, reputation_report, BrandVectorMode, ReputationReport};
use cladesense::svg;
use cladesense::topicmodel::{
    fit_topics, load_topic_names, temporal_distribution, topic_shares, topic_terms, ClusterParams, TemporalSeries,
    TimeBin, TopicModel, TopicShare,
};
use cladesense::vectorspace::{
    embed, fit_tfidf_limited, pca_reduce, transform_tfidf, BuiltinEmbeddings, EmbedDoc, EmbeddingMatrix,
    EmbeddingProvider, FileEmbeddings, HttpEmbeddings, SparseVec, Vocabulary,
};
use cladesense::Label;

use crate::config::{Loaded, NgramMode, ProviderKind};
use crate::output::{OutDir, StageWriter};

pub const STAGES: [&str; 8] = [
    "ngrams",
    "topics",
    "clades",
    "label",
    "train",
    "evaluate",
    "reputation",
    "report",
];

const TOPIC_MODEL: &str = "topics/topic_model.json";
const EMBEDDINGS: &str = "topics/embeddings.jsonl";
const BUILTIN_EMBEDDER: &str = "topics/builtin_embedder.json";
const DENDROGRAM: &str = "clades/dendrogram.json";
const CLADES: &str = "clades/clades.json";
const LABELED: &str = "label/labeled.json";
const LABELED_CLADES: &str = "label/clades.json";
const EVALUATION: &str = "evaluate/evaluation.json";
const REPUTATION: &str = "reputation/reputation.json";

pub struct Ctx {
    pub loaded: Loaded,
    pub out: OutDir,
    pub strict: bool,
}

impl Ctx {
    fn cfg(&self) -> &crate::config::PipelineConfig {
        &self.loaded.config
    }

    pub fn run(&self, stage: &str) -> Result<()> {
        let start = Instant::now();
        let mut w = self.out.stage(stage)?;
        match stage {
            "ngrams" => self.ngrams(&mut w),
            "topics" => self.topics(&mut w),
            "clades" => self.clades(&mut w),
            "label" => self.label(&mut w),
            "train" => self.train(&mut w),
            "evaluate" => self.evaluate(&mut w),
            "reputation" => self.reputation(&mut w),
            "report" => self.report(&mut w),
            other => bail!("unknown stage {other:?}"),
        }
        .with_context(|| format!("stage `{stage}` failed"))?;
        let record = w.commit(start.elapsed().as_secs_f64())?;
        let snapshot = serde_json::to_value(self.cfg())?;
        self.out.record(stage, record, &snapshot)?;
        log::info!("{stage}: done in {:.2?}", start.elapsed());
        Ok(())
    }

    pub fn run_all(&self) -> Result<()> {
        for s in STAGES {
            self.run(s)?;
        }
        Ok(())
    }

    fn preprocess_config(&self, with_stopwords: bool) -> Result<PreprocessConfig> {
        let p = &self.cfg().preprocess;
        let mut words = Vec::new();
        if with_stopwords {
            if p.default_stopwords {
                words.extend(default_stopwords());
            }
            if let Some(path) = self.loaded.optional_input(&self.cfg().inputs.stopwords) {
                words.extend(load_stopwords(&path)?);
            }
            words.extend(p.extra_stopwords.iter().cloned());
        }
        let mut base = PreprocessConfig::default();
        base.lowercase = p.lowercase;
        base.strip_emoji = p.strip_emoji;
        Ok(base.with_stopwords(words)?)
    }

    /// Loads and cleans the comments (stopwords removed).
    fn comments(&self) -> Result<(Vec<Comment>, PreprocessConfig)> {
        let inputs = &self.cfg().inputs;
        let comments_path = self.loaded.input(&inputs.comments, "comments")?;
        let posts_path = self.loaded.optional_input(&inputs.posts);
        let mode = if self.strict { LoadMode::Strict } else { LoadMode::Lenient };
        let corpus = load_corpus(&comments_path, posts_path.as_deref(), mode)?;
        for issue in &corpus.issues {
            log::warn!("skipped record: {issue}");
        }
        let pre = self.preprocess_config(true)?;
        let mut comments = corpus.comments;
        if comments.is_empty() {
            bail!("{} holds no usable comments", comments_path.display());
        }
        preprocess_all(&mut comments, &pre);
        Ok((comments, pre))
    }

    fn read_json<T: for<'de> Deserialize<'de>>(&self, rel: &str, stage: &str) -> Result<T> {
        let path = self.out.require(rel, stage)?;
        let bytes = std::fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
    }

    fn ngrams(&self, w: &mut StageWriter) -> Result<()> {
        let (comments, pre) = self.comments()?;
        let n = &self.cfg().ngrams;
        let tokens: Vec<Vec<String>> = match n.mode {
            NgramMode::Clean => comments.iter().map(|c| tokenize(&c.clean_text)).collect(),
            NgramMode::Raw => {
                let raw = pre.with_stopwords(Vec::<String>::new())?;
                comments.iter().map(|c| tokenize(&raw.clean(&c.raw_text))).collect()
            }
        };
        for &size in &n.sizes {
            let table = extract_ngrams(&tokens, NgramSpec::new(size, n.top_k)?);
            w.write(&format!("ngram_{size}.csv"), &table.to_csv()?)?;
        }
        Ok(())
    }

    fn http_provider(&self) -> Result<HttpEmbeddings> {
        let t = &self.cfg().topics;
        let Some(url) = &t.embedding_url else {
            bail!(
                "the http provider needs topics.embedding_url or {}",
                crate::config::EMBED_URL_ENV
            );
        };
        Ok(HttpEmbeddings {
            batch_size: t.batch_size,
            timeout: Duration::from_secs(t.timeout_secs),
            ..HttpEmbeddings::new(url)
        })
    }

    fn topics(&self, w: &mut StageWriter) -> Result<()> {
        let (comments, _) = self.comments()?;
        let t = &self.cfg().topics;
        let docs: Vec<EmbedDoc> = comments.iter().map(EmbedDoc::from).collect();
        let mut builtin = None;
        let full = match t.provider {
            ProviderKind::File => {
                let path = self.loaded.input(&self.cfg().inputs.embeddings, "embeddings")?;
                embed(&docs, &FileEmbeddings::load(&path)?)?
            }
            ProviderKind::Http => embed(&docs, &self.http_provider()?)?,
            ProviderKind::Builtin => {
                let tokens: Vec<Vec<String>> = comments.iter().map(|c| tokenize(&c.clean_text)).collect();
                let b = BuiltinEmbeddings::fit(&tokens, t.builtin_dim, t.max_features)?;
                let m = embed(&docs, &b)?;
                builtin = Some(b);
                m
            }
        };
        let clustering = match t.pca_dim {
            Some(d) if d < full.dim() => pca_reduce(&full, d)?,
            _ => full.clone(),
        };
        let mut model = fit_topics(&full, &clustering, ClusterParams::new(t.eps, t.min_members)?)?;
        let tokens: HashMap<String, Vec<String>> = comments
            .iter()
            .map(|c| (c.id.clone(), tokenize(&c.clean_text)))
            .collect();
        topic_terms(&mut model, &tokens, t.top_terms);
        if let Some(path) = self.loaded.optional_input(&self.cfg().inputs.topic_names) {
            model.apply_names(&load_topic_names(&path)?);
        }
        log::info!(
            "topics: {} topics, {} outliers of {} comments",
            model.topics.len(),
            model.outlier.member_ids.len(),
            comments.len()
        );

        w.write_json("topic_model.json", &model)?;
        w.write("embeddings.jsonl", &embeddings_jsonl(&full)?)?;
        if let Some(b) = &builtin {
            w.write_json("builtin_embedder.json", b)?;
        }

        let shares = topic_shares(&model, comments.len())?;
        w.write("shares.csv", &shares_csv(&model, &shares)?)?;
        let bars: Vec<(String, f64)> = shares
            .iter()
            .map(|s| (topic_label(&model, s.topic_id), s.percentage))
            .collect();
        w.write(
            "shares.svg",
            svg::horizontal_bars("Topic share of comments", &bars, |v| format!("{v:.1}%")).as_bytes(),
        )?;

        let wanted: BTreeSet<i64> = match &t.temporal_topics {
            Some(ids) => ids.iter().copied().collect(),
            None => shares
                .iter()
                .filter(|s| s.topic_id >= 0)
                .take(t.temporal_top)
                .map(|s| s.topic_id)
                .collect(),
        };
        let series = temporal_distribution(&model, &comments, t.time_bin, &wanted)?;
        w.write_json("temporal.json", &series)?;
        let bin = match t.time_bin {
            TimeBin::Day => "day",
            TimeBin::Week => "week",
        };
        w.write(
            &format!("temporal_{bin}.svg"),
            temporal_svg(&model, &series, bin).as_bytes(),
        )?;
        Ok(())
    }

    fn clades(&self, w: &mut StageWriter) -> Result<()> {
        let model: TopicModel = self.read_json(TOPIC_MODEL, "topics")?;
        let c = &self.cfg().clades;
        let exclude: BTreeSet<i64> = c.exclude_topics.iter().copied().collect();
        let d = ward_from_model(&model, &exclude)?;
        let spec = match (c.threshold, c.n_clades) {
            (_, Some(k)) => CutSpec::NClades(k),
            (Some(t), None) => CutSpec::Threshold(t),
            (None, None) => CutSpec::Threshold(default_threshold(&d)),
        };
        let cut = cut_dendrogram(&d, spec)?;
        w.write_json("dendrogram.json", &d)?;
        w.write_json("clades.json", &cut)?;

        let names: Vec<String> = d.leaves.iter().map(|&id| topic_label(&model, id)).collect();
        let mut clade_of_leaf = vec![0; d.n_leaves()];
        for clade in &cut.clades {
            for t in &clade.member_topic_ids {
                if let Some(i) = d.leaves.iter().position(|l| l == t) {
                    clade_of_leaf[i] = clade.clade_id;
                }
            }
        }
        w.write(
            "dendrogram.svg",
            svg::dendrogram("Topic dendrogram (Ward)", &d, &names, &clade_of_leaf, cut_height(&d, spec)).as_bytes(),
        )?;
        Ok(())
    }

    fn label(&self, w: &mut StageWriter) -> Result<()> {
        let model: TopicModel = self.read_json(TOPIC_MODEL, "topics")?;
        let cut: CladeCut = self.read_json(CLADES, "clades")?;
        let inputs = &self.cfg().inputs;
        let assignment = load_clade_sentiments(&self.loaded.input(&inputs.clade_sentiments, "clade_sentiments")?)?;
        let overrides = match self.loaded.optional_input(&inputs.topic_overrides) {
            Some(p) => load_topic_overrides(&p)?,
            None => BTreeMap::new(),
        };
        let exclusions: BTreeSet<i64> = self.cfg().clades.exclusions.iter().copied().collect();
        let labeled = assign_clade_sentiments(&cut, &assignment, &overrides, &exclusions, self.strict)?;
        for c in labeled.clades.iter().filter(|c| c.sentiment == Sentiment::Unassigned) {
            log::warn!("clade {} has no sentiment; its comments are dropped", c.clade_id);
        }
        let set = propagate_labels(&labeled, &model);
        log::info!(
            "label: {} positive, {} negative, {} dropped",
            set.positive,
            set.negative,
            set.dropped
        );
        if set.positive == 0 || set.negative == 0 {
            log::warn!("labeled set has a single class; training will fail");
        }
        w.write_json("clades.json", &labeled)?;
        w.write_json("labeled.json", &set)?;
        Ok(())
    }

    fn train(&self, w: &mut StageWriter) -> Result<()> {
        let set: LabeledSet = self.read_json(LABELED, "label")?;
        let (comments, _) = self.comments()?;
        let data = token_dataset(&set, &comments)?;
        let tc = &self.cfg().train;
        for &seed in &tc.seeds {
            let split_cfg = SplitConfig {
                train_fraction: tc.train_fraction,
                seed,
                oversample: tc.oversample,
            };
            let (train, test) = if tc.split_first {
                split_then_oversample(&data, &split_cfg)?
            } else {
                split(&data, &split_cfg)?
            };
            let token_lists: Vec<Vec<String>> = train.items.iter().map(|e| e.features.clone()).collect();
            let vocab = fit_tfidf_limited(&token_lists, 1, tc.max_features)?;
            let train_x = vectorize(&train, &vocab);
            let dir = format!("seed_{seed}");
            w.write_json(
                &format!("{dir}/split.json"),
                &SplitRecord {
                    mode: split_mode(tc.split_first).to_owned(),
                    seed,
                    train: fold_record(&train),
                    test: fold_record(&test),
                },
            )?;
            w.write_json(&format!("{dir}/vocabulary.json"), &vocab)?;
            for (name, model) in train_models(&train_x, tc, seed)? {
                w.write_json(&format!("{dir}/{name}.json"), &model)?;
            }
            log::info!("train: seed {seed} done ({} train, {} test)", train.len(), test.len());
        }
        Ok(())
    }

    fn evaluate(&self, w: &mut StageWriter) -> Result<()> {
        let (comments, _) = self.comments()?;
        let tokens: HashMap<&str, Vec<String>> = comments
            .iter()
            .map(|c| (c.id.as_str(), tokenize(&c.clean_text)))
            .collect();
        let tc = &self.cfg().train;
        let names = model_names(tc);
        let mut by_model: BTreeMap<&str, Vec<EvalRow>> = BTreeMap::new();
        let mut split_mode_seen = None;
        for &seed in &tc.seeds {
            let dir = format!("train/seed_{seed}");
            let split: SplitRecord = self.read_json(&format!("{dir}/split.json"), "train")?;
            let vocab: Vocabulary = self.read_json(&format!("{dir}/vocabulary.json"), "train")?;
            split_mode_seen.get_or_insert(split.mode.clone());
            let mut xs = Vec::with_capacity(split.test.len());
            let mut truth = Vec::with_capacity(split.test.len());
            for item in &split.test {
                let t = tokens
                    .get(item.id.as_str())
                    .with_context(|| format!("test item {} is not in the corpus", item.id))?;
                xs.push(transform_tfidf(&item.id, t, &vocab).values);
                truth.push(item.label);
            }
            for name in &names {
                let model: TrainedModel = self.read_json(&format!("{dir}/{name}.json"), "train")?;
                let pred = predict(&model, &xs)?;
                let row = evaluate(name, seed, &truth, &pred, self.cfg().evaluate.averaging)?;
                by_model.entry(name.as_str()).or_default().push(row);
            }
        }
        let mut rows = Vec::new();
        for name in &names {
            let r = &by_model[name.as_str()];
            rows.extend(r.iter().cloned());
            rows.extend(average_row(name, r));
        }
        let report = EvaluationReport {
            averaging: self.cfg().evaluate.averaging,
            split_mode: split_mode_seen.unwrap_or_default(),
            rows,
        };
        w.write_json("evaluation.json", &report)?;
        let mut csv = Vec::new();
        report.write_csv(&mut csv)?;
        w.write("evaluation.csv", &csv)?;
        let averages: Vec<(String, f64)> = report
            .rows
            .iter()
            .filter(|r| r.seed == "AVERAGE")
            .map(|r| (r.model.clone(), r.accuracy * 100.0))
            .collect();
        w.write(
            "accuracy.svg",
            svg::horizontal_bars("Mean test accuracy", &averages, |v| format!("{v:.1}%")).as_bytes(),
        )?;
        Ok(())
    }

    fn reputation(&self, w: &mut StageWriter) -> Result<()> {
        let model: TopicModel = self.read_json(TOPIC_MODEL, "topics")?;
        let emb_path = self.out.require(EMBEDDINGS, "topics")?;
        let (comments, pre) = self.comments()?;
        let configs = load_brands(&self.loaded.input(&self.cfg().inputs.brands, "brands")?)?;
        let file = FileEmbeddings::load(&emb_path)?;
        let docs: Vec<EmbedDoc> = comments.iter().map(EmbedDoc::from).collect();
        let matrix = embed(&docs, &file)?;
        let rc = &self.cfg().reputation;
        let provider: Option<Box<dyn EmbeddingProvider>> = match rc.mode {
            BrandVectorMode::MentionCentroid => None,
            BrandVectorMode::NameEmbedding => Some(match self.cfg().topics.provider {
                ProviderKind::Http => Box::new(self.http_provider()?),
                ProviderKind::Builtin => {
                    let b: BuiltinEmbeddings = self.read_json(BUILTIN_EMBEDDER, "topics")?;
                    Box::new(b)
                }
                ProviderKind::File => bail!("reputation.mode name_embedding needs the http or builtin provider"),
            }),
        };
        let vectors = build_brand_vectors(&configs, &pre, &comments, &matrix, rc.mode, provider.as_deref())?;
        let report = reputation_report(&vectors.brands, &model, rc.top_n)?;
        w.write_json("reputation.json", &report)?;
        w.write_json("skipped.json", &vectors.skipped)?;
        for (brand, ranked) in &report.0 {
            let bars: Vec<(String, f64)> = ranked.iter().map(|t| (t.name.clone(), t.similarity * 100.0)).collect();
            w.write(
                &format!("reputation_{}.svg", slug(brand)),
                svg::horizontal_bars(&format!("{brand}: closest topics"), &bars, |v| format!("{v:.1}%")).as_bytes(),
            )?;
        }
        Ok(())
    }

    fn report(&self, w: &mut StageWriter) -> Result<()> {
        let model: TopicModel = self.read_json(TOPIC_MODEL, "topics")?;
        let labeled: LabeledClades = self.read_json(LABELED_CLADES, "label")?;
        let set: LabeledSet = self.read_json(LABELED, "label")?;
        let dendro: Dendrogram = self.read_json(DENDROGRAM, "clades")?;
        let eval: EvaluationReport = self.read_json(EVALUATION, "evaluate")?;
        let rep: ReputationReport = self.read_json(REPUTATION, "reputation")?;
        let total = model.n_documents();
        let summary = Summary {
            comments: total,
            topics: model.topics.len(),
            outliers: model.outlier.member_ids.len(),
            shares: topic_shares(&model, total)?,
            dendrogram_leaves: dendro.n_leaves(),
            clades: labeled
                .clades
                .iter()
                .map(|c| CladeSummary {
                    clade_id: c.clade_id,
                    sentiment: c.sentiment,
                    topics: c.member_topic_ids.clone(),
                })
                .collect(),
            labeled_positive: set.positive,
            labeled_negative: set.negative,
            dropped: set.dropped,
            split_mode: eval.split_mode.clone(),
            averages: eval.rows.iter().filter(|r| r.seed == "AVERAGE").cloned().collect(),
            reputation: rep,
        };
        w.write_json("summary.json", &summary)?;
        w.write("summary.md", summary_markdown(&summary, &model).as_bytes())?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FoldItem {
    id: String,
    label: Label,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SplitRecord {
    mode: String,
    seed: u64,
    train: Vec<FoldItem>,
    test: Vec<FoldItem>,
}

#[derive(Debug, Serialize)]
struct CladeSummary {
    clade_id: usize,
    sentiment: Sentiment,
    topics: Vec<i64>,
}

#[derive(Debug, Serialize)]
struct Summary {
    comments: usize,
    topics: usize,
    outliers: usize,
    shares: Vec<TopicShare>,
    dendrogram_leaves: usize,
    clades: Vec<CladeSummary>,
    labeled_positive: usize,
    labeled_negative: usize,
    dropped: usize,
    split_mode: String,
    averages: Vec<EvalRow>,
    reputation: ReputationReport,
}

fn split_mode(split_first: bool) -> &'static str {
    if split_first {
        "split_then_oversample"
    } else {
        "oversample_then_split"
    }
}

fn fold_record<F>(d: &Dataset<F>) -> Vec<FoldItem> {
    d.items
        .iter()
        .map(|e| FoldItem {
            id: e.id.clone(),
            label: e.label,
        })
        .collect()
}

fn token_dataset(set: &LabeledSet, comments: &[Comment]) -> Result<Dataset<Vec<String>>> {
    let by_id: HashMap<&str, &Comment> = comments.iter().map(|c| (c.id.as_str(), c)).collect();
    let mut items = Vec::with_capacity(set.items.len());
    for it in &set.items {
        let c = by_id
            .get(it.comment_id.as_str())
            .with_context(|| format!("labeled comment {} is not in the corpus", it.comment_id))?;
        items.push(Example {
            id: it.comment_id.clone(),
            features: tokenize(&c.clean_text),
            label: it.label,
        });
    }
    Ok(Dataset::new(items))
}

fn vectorize(d: &Dataset<Vec<String>>, vocab: &Vocabulary) -> Dataset<SparseVec> {
    d.clone().map(|e| transform_tfidf(&e.id, &e.features, vocab).values)
}

fn model_names(tc: &crate::config::TrainSection) -> Vec<String> {
    let mut names = vec!["nb".to_owned()];
    names.extend(tc.knn_k.iter().map(|k| format!("knn_{k}")));
    names.extend(["svm", "gbt_levelwise", "gbt_leafwise"].map(String::from));
    names
}

fn train_models(
    train: &Dataset<SparseVec>,
    tc: &crate::config::TrainSection,
    seed: u64,
) -> Result<Vec<(String, TrainedModel)>> {
    let mut out = vec![("nb".to_owned(), train_nb(train, seed)?)];
    for &k in &tc.knn_k {
        out.push((format!("knn_{k}"), train_knn(train, k, seed)?));
    }
    out.push(("svm".to_owned(), train_svm(train, tc.svm, seed)?));
    out.push((
        "gbt_levelwise".to_owned(),
        train_gbt(train, Growth::Levelwise, tc.gbt, seed)?,
    ));
    out.push(("gbt_leafwise".to_owned(), train_gbt(train, Growth::Leafwise, tc.gbt, seed)?));
    Ok(out)
}

fn embeddings_jsonl(m: &EmbeddingMatrix) -> Result<Vec<u8>> {
    #[derive(Serialize)]
    struct Row<'a> {
        id: &'a str,
        vector: &'a [f64],
    }
    let mut buf = Vec::new();
    for (id, row) in m.ids().iter().zip(m.rows()) {
        serde_json::to_writer(&mut buf, &Row { id, vector: row })?;
        buf.push(b'\n');
    }
    Ok(buf)
}

fn topic_label(model: &TopicModel, id: i64) -> String {
    match model.topic(id) {
        Some(t) if id >= 0 => format!("{id}: {}", t.display_name()),
        Some(t) => t.display_name(),
        None => format!("topic {id}"),
    }
}

fn shares_csv(model: &TopicModel, shares: &[TopicShare]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["topic_id", "name", "count", "percentage"])?;
    for s in shares {
        let name = model.topic(s.topic_id).map(|t| t.display_name()).unwrap_or_default();
        w.write_record([
            s.topic_id.to_string(),
            name,
            s.count.to_string(),
            format!("{:.5}", s.percentage),
        ])?;
    }
    Ok(w.into_inner()?)
}

fn temporal_svg(model: &TopicModel, series: &[TemporalSeries], bin: &str) -> String {
    let x_labels: Vec<String> = series
        .first()
        .map(|s| s.bins.iter().map(|(d, _)| d.format("%Y-%m-%d").to_string()).collect())
        .unwrap_or_default();
    let lines: Vec<(String, Vec<f64>)> = series
        .iter()
        .map(|s| {
            (
                topic_label(model, s.topic_id),
                s.bins.iter().map(|(_, c)| *c as f64).collect(),
            )
        })
        .collect();
    svg::line_chart(&format!("Comments per {bin} by topic"), &x_labels, &lines)
}

/// Height of the cut line drawn on the dendrogram.
fn cut_height(d: &Dendrogram, spec: CutSpec) -> Option<f64> {
    match spec {
        CutSpec::Threshold(t) => Some(t),
        CutSpec::NClades(k) => {
            let applied = d.n_leaves().checked_sub(k)?;
            let next = d.merges.get(applied)?.distance;
            let prev = applied.checked_sub(1).map_or(0.0, |i| d.merges[i].distance);
            Some((prev + next) / 2.0)
        }
    }
}

fn slug(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    s.trim_matches('_').to_owned()
}

fn summary_markdown(s: &Summary, model: &TopicModel) -> String {
    use std::fmt::Write;
    let mut md = String::new();
    let _ = writeln!(md, "# Pipeline summary\n");
    let _ = writeln!(
        md,
        "{} comments, {} topics, {} outliers.\n",
        s.comments, s.topics, s.outliers
    );
    let _ = writeln!(md, "## Topic shares\n\n| topic | comments | share |\n|---|---:|---:|");
    for sh in &s.shares {
        let _ = writeln!(md, "| {} | {} | {:.2}% |", topic_label(model, sh.topic_id), sh.count, sh.percentage);
    }
    let _ = writeln!(md, "\n## Clades\n\n| clade | sentiment | topics |\n|---|---|---|");
    for c in &s.clades {
        let topics: Vec<String> = c.topics.iter().map(i64::to_string).collect();
        let _ = writeln!(md, "| {} | {:?} | {} |", c.clade_id, c.sentiment, topics.join(", "));
    }
    let _ = writeln!(
        md,
        "\nLabeled comments: {} positive, {} negative, {} dropped.\n",
        s.labeled_positive, s.labeled_negative, s.dropped
    );
    let _ = writeln!(
        md,
        "## Classifiers ({})\n\n| model | accuracy | precision | recall | F1 | kappa | agreement |\n|---|---:|---:|---:|---:|---:|---|",
        s.split_mode
    );
    for r in &s.averages {
        let _ = writeln!(
            md,
            "| {} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} | {} |",
            r.model, r.accuracy, r.precision, r.recall, r.f1, r.kappa, r.band
        );
    }
    let _ = writeln!(md, "\n## Brand reputation\n");
    for (brand, ranked) in &s.reputation.0 {
        let _ = writeln!(md, "### {brand}\n");
        for t in ranked {
            let _ = writeln!(md, "- {} ({:.1}%)", t.name, t.similarity * 100.0);
        }
        md.push('\n');
    }
    md
}

/// Output directory to use: the `--out` flag, then the config's `out`
/// (relative to the config file), then `./out`.
pub fn out_dir(flag: Option<PathBuf>, loaded: &Loaded) -> PathBuf {
    flag.or_else(|| loaded.optional_input(&loaded.config.out))
        .unwrap_or_else(|| PathBuf::from("out"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs() {
        assert_eq!(slug("Pfizer-BioNTech"), "pfizer_biontech");
        assert_eq!(slug(" AZ "), "az");
    }

    #[test]
    fn cut_line_sits_between_merges() {
        let d = cladesense::clades::ward_cluster(&[0, 1, 2], &[vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        let h = cut_height(&d, CutSpec::NClades(2)).unwrap();
        assert!(h > d.merges[0].distance && h < d.merges[1].distance);
        assert_eq!(cut_height(&d, CutSpec::NClades(1)), None);
    }
}
