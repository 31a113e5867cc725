//! Topic discovery over document embeddings.
//!
//! Documents are clustered with density-based clustering (DBSCAN
//! semantics); documents no cluster claims form the outlier topic `-1`.
//! Topic terms are ranked with class-based TF-IDF over the concatenated
//! member texts.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::path::Path;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::corpus::Comment;
use crate::error::{Error, Result};
use crate::vectorspace::{sq_euclidean, EmbeddingMatrix};

pub const OUTLIER_ID: i64 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub eps: f64,
    pub min_members: usize,
}

impl ClusterParams {
    pub fn new(eps: f64, min_members: usize) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidParam(format!("eps must be positive, got {eps}")));
        }
        if min_members < 2 {
            return Err(Error::InvalidParam(format!(
                "min_members must be at least 2, got {min_members}"
            )));
        }
        Ok(ClusterParams { eps, min_members })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topic {
    pub topic_id: i64,
    pub member_ids: Vec<String>,
    /// Mean of the members' full-dimensional embeddings.
    pub centroid: Vec<f64>,
    pub terms: Vec<(String, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl Topic {
    pub fn is_outlier(&self) -> bool {
        self.topic_id == OUTLIER_ID
    }

    /// The assigned name, else the top three terms, else a generic label.
    pub fn display_name(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        if self.is_outlier() {
            return "outlier".to_owned();
        }
        if self.terms.is_empty() {
            return format!("topic {}", self.topic_id);
        }
        self.terms
            .iter()
            .take(3)
            .map(|(t, _)| t.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub topics: Vec<Topic>,
    pub outlier: Topic,
    pub params: ClusterParams,
}

impl TopicModel {
    pub fn topic(&self, id: i64) -> Option<&Topic> {
        if id == OUTLIER_ID {
            Some(&self.outlier)
        } else {
            self.topics.iter().find(|t| t.topic_id == id)
        }
    }

    /// Regular topics followed by the outlier topic.
    pub fn all_topics(&self) -> impl Iterator<Item = &Topic> {
        self.topics.iter().chain(std::iter::once(&self.outlier))
    }

    /// Comment id to topic id.
    pub fn assignment(&self) -> HashMap<&str, i64> {
        self.all_topics()
            .flat_map(|t| t.member_ids.iter().map(move |m| (m.as_str(), t.topic_id)))
            .collect()
    }

    pub fn n_documents(&self) -> usize {
        self.all_topics().map(|t| t.member_ids.len()).sum()
    }

    pub fn apply_names(&mut self, names: &BTreeMap<i64, String>) {
        for t in self.topics.iter_mut().chain(std::iter::once(&mut self.outlier)) {
            if let Some(n) = names.get(&t.topic_id) {
                t.name = Some(n.clone());
            }
        }
    }
}

/// Density clustering of `rows`. Returns one cluster index per row, `None`
/// for noise.
///
/// A point's neighborhood holds every point (itself included) within
/// Euclidean distance `eps`; a point is core when its neighborhood has at
/// least `min_members` points. Clusters are connected components of core
/// points, numbered in order of their lowest-index core point. A border
/// point joins the cluster of its lowest-index core neighbor.
pub fn dbscan(rows: &[Vec<f64>], params: ClusterParams) -> Vec<Option<usize>> {
    let n = rows.len();
    let eps2 = params.eps * params.eps;
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| sq_euclidean(&rows[i], &rows[j]) <= eps2)
                .collect()
        })
        .collect();
    let core: Vec<bool> = neighbors
        .iter()
        .map(|nb| nb.len() >= params.min_members)
        .collect();

    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut next = 0;
    for start in 0..n {
        if !core[start] || labels[start].is_some() {
            continue;
        }
        labels[start] = Some(next);
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            for &q in &neighbors[p] {
                if core[q] && labels[q].is_none() {
                    labels[q] = Some(next);
                    queue.push_back(q);
                }
            }
        }
        next += 1;
    }
    for i in 0..n {
        if !core[i] {
            // neighbor lists are in index order, so the first core hit is
            // the lowest-index one
            labels[i] = neighbors[i].iter().find(|&&j| core[j]).and_then(|&j| labels[j]);
        }
    }
    labels
}

fn centroid(rows: &[&[f64]], dim: usize) -> Vec<f64> {
    let mut c = vec![0.0; dim];
    if rows.is_empty() {
        return c;
    }
    for r in rows {
        for (a, x) in c.iter_mut().zip(r.iter()) {
            *a += x;
        }
    }
    c.iter_mut().for_each(|a| *a /= rows.len() as f64);
    c
}

/// Clusters `clustering` (typically a reduced copy of `full`) and builds
/// topics whose centroids are taken in the full embedding space. Both
/// matrices must list the same ids in the same order.
pub fn fit_topics(full: &EmbeddingMatrix, clustering: &EmbeddingMatrix, params: ClusterParams) -> Result<TopicModel> {
    if full.is_empty() {
        return Err(Error::Empty("embedding matrix has no rows"));
    }
    if full.ids() != clustering.ids() {
        return Err(Error::InvalidParam(
            "full and clustering matrices list different ids".into(),
        ));
    }
    let labels = dbscan(clustering.rows(), params);
    Ok(model_from_labels(full, &labels, params))
}

/// Builds a topic model from precomputed cluster labels.
pub fn model_from_labels(full: &EmbeddingMatrix, labels: &[Option<usize>], params: ClusterParams) -> TopicModel {
    let n_clusters = labels.iter().flatten().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_clusters];
    let mut noise = Vec::new();
    for (i, l) in labels.iter().enumerate() {
        match l {
            Some(c) => members[*c].push(i),
            None => noise.push(i),
        }
    }
    let make = |topic_id: i64, idx: &[usize]| {
        let rows: Vec<&[f64]> = idx.iter().map(|&i| full.row(i)).collect();
        Topic {
            topic_id,
            member_ids: idx.iter().map(|&i| full.ids()[i].clone()).collect(),
            centroid: centroid(&rows, full.dim()),
            terms: Vec::new(),
            name: None,
        }
    };
    TopicModel {
        topics: members
            .iter()
            .enumerate()
            .map(|(c, idx)| make(c as i64, idx))
            .collect(),
        outlier: make(OUTLIER_ID, &noise),
        params,
    }
}

/// Ranks each topic's terms by class-based TF-IDF:
/// `tf(t, c) * ln(1 + A / f(t))`, where `tf(t, c)` counts `t` in topic `c`,
/// `f(t)` counts `t` over all topics and `A` is the mean token count per
/// topic. The outlier topic takes part as a class when it has members.
pub fn topic_terms(model: &mut TopicModel, tokens: &HashMap<String, Vec<String>>, top_terms: usize) {
    let mut classes: Vec<&mut Topic> = model.topics.iter_mut().collect();
    if !model.outlier.member_ids.is_empty() {
        classes.push(&mut model.outlier);
    }
    let counts: Vec<BTreeMap<&str, u64>> = classes
        .iter()
        .map(|t| {
            let mut m = BTreeMap::new();
            for id in &t.member_ids {
                for tok in tokens.get(id).into_iter().flatten() {
                    *m.entry(tok.as_str()).or_insert(0) += 1;
                }
            }
            m
        })
        .collect();
    let mut total: HashMap<&str, u64> = HashMap::new();
    for m in &counts {
        for (t, c) in m {
            *total.entry(t).or_insert(0) += c;
        }
    }
    let n_tokens: u64 = total.values().sum();
    let avg = if classes.is_empty() {
        0.0
    } else {
        n_tokens as f64 / classes.len() as f64
    };
    let ranked: Vec<Vec<(String, f64)>> = counts
        .iter()
        .map(|m| {
            let mut w: Vec<(String, f64)> = m
                .iter()
                .map(|(t, &tf)| {
                    let f = total[t] as f64;
                    (t.to_string(), tf as f64 * (1.0 + avg / f).ln())
                })
                .collect();
            w.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            w.truncate(top_terms);
            w
        })
        .collect();
    for (topic, terms) in classes.iter_mut().zip(ranked) {
        topic.terms = terms;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicShare {
    pub topic_id: i64,
    pub count: usize,
    pub percentage: f64,
}

/// Member count and percentage of `total` for every topic (outlier
/// included), largest first; ties by topic id.
pub fn topic_shares(model: &TopicModel, total: usize) -> Result<Vec<TopicShare>> {
    if total == 0 {
        return Err(Error::InvalidParam("topic shares need a non-empty corpus".into()));
    }
    let mut shares: Vec<TopicShare> = model
        .all_topics()
        .map(|t| share(t.topic_id, t.member_ids.len(), total))
        .collect();
    shares.sort_by(|a, b| b.count.cmp(&a.count).then(a.topic_id.cmp(&b.topic_id)));
    Ok(shares)
}

pub fn share(topic_id: i64, count: usize, total: usize) -> TopicShare {
    TopicShare {
        topic_id,
        count,
        percentage: 100.0 * count as f64 / total as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeBin {
    Day,
    Week,
}

impl std::str::FromStr for TimeBin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "day" => Ok(TimeBin::Day),
            "week" => Ok(TimeBin::Week),
            other => Err(Error::InvalidParam(format!("unknown time bin {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalSeries {
    pub topic_id: i64,
    pub bins: Vec<(NaiveDate, u64)>,
}

/// Per-bin comment counts for each requested topic. Bins are contiguous
/// and cover the corpus' first to last comment date; week bins start on
/// the first date.
pub fn temporal_distribution(
    model: &TopicModel,
    comments: &[Comment],
    bin: TimeBin,
    topic_ids: &BTreeSet<i64>,
) -> Result<Vec<TemporalSeries>> {
    for id in topic_ids {
        if model.topic(*id).is_none() {
            return Err(Error::UnknownTopic(*id));
        }
    }
    let dates: HashMap<&str, NaiveDate> = comments
        .iter()
        .map(|c| (c.id.as_str(), c.timestamp.date_naive()))
        .collect();
    let (Some(&first), Some(&last)) = (dates.values().min(), dates.values().max()) else {
        return Ok(topic_ids
            .iter()
            .map(|&topic_id| TemporalSeries {
                topic_id,
                bins: Vec::new(),
            })
            .collect());
    };
    let width = match bin {
        TimeBin::Day => 1,
        TimeBin::Week => 7,
    };
    let n_bins = ((last - first).num_days() / width + 1) as usize;
    let starts: Vec<NaiveDate> = (0..n_bins)
        .map(|k| first + Duration::days(k as i64 * width))
        .collect();
    let mut out = Vec::with_capacity(topic_ids.len());
    for &topic_id in topic_ids {
        let topic = model.topic(topic_id).expect("checked above");
        let mut counts = vec![0u64; n_bins];
        for m in &topic.member_ids {
            if let Some(d) = dates.get(m.as_str()) {
                counts[((*d - first).num_days() / width) as usize] += 1;
            }
        }
        out.push(TemporalSeries {
            topic_id,
            bins: starts.iter().copied().zip(counts).collect(),
        });
    }
    Ok(out)
}

/// Reads a `topic_id,name` CSV.
pub fn load_topic_names(path: &Path) -> Result<BTreeMap<i64, String>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let id: i64 = rec
            .get(0)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Record {
                path: path.to_path_buf(),
                line: i + 2,
                message: "bad topic_id".into(),
            })?;
        out.insert(id, rec.get(1).unwrap_or("").trim().to_owned());
    }
    Ok(out)
}
