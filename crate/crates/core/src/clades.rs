//! Ward-linkage clustering of topic centroids, dendrogram cuts into clades,
//! and propagation of clade sentiments down to comments.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;
use crate::topicmodel::{TopicModel, OUTLIER_ID};
use crate::vectorspace::sq_euclidean;

/// One agglomeration step. Node ids: leaves are `0..L`, the node created by
/// merge `k` is `L + k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    /// Ward distance on the squared-Euclidean scale.
    pub distance: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    /// Topic id of each leaf, by leaf index.
    pub leaves: Vec<i64>,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn max_distance(&self) -> f64 {
        self.merges.iter().map(|m| m.distance).fold(0.0, f64::max)
    }

    /// Leaf indices under `node`, ascending.
    pub fn leaves_under(&self, node: usize) -> Vec<usize> {
        let n = self.n_leaves();
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(x) = stack.pop() {
            if x < n {
                out.push(x);
            } else {
                let m = &self.merges[x - n];
                stack.push(m.left);
                stack.push(m.right);
            }
        }
        out.sort_unstable();
        out
    }
}

/// Agglomerative clustering with Ward's linkage.
///
/// Initial distances are squared Euclidean; after merging `i` and `j` the
/// distance to every other cluster `k` follows the Lance-Williams update
/// `((n_i + n_k) d(i,k) + (n_j + n_k) d(j,k) - n_k d(i,j)) / (n_i + n_j + n_k)`.
/// The closest pair is merged first; ties go to the lowest `(left, right)`
/// node-id pair.
pub fn ward_cluster(leaves: &[i64], points: &[Vec<f64>]) -> Result<Dendrogram> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InvalidParam(format!(
            "Ward clustering needs at least 2 leaves, got {n}"
        )));
    }
    if leaves.len() != n {
        return Err(Error::InvalidParam(format!(
            "{} leaf ids for {n} points",
            leaves.len()
        )));
    }
    let dim = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimMismatch {
            expected: dim,
            found: p.len(),
        });
    }

    let total = 2 * n - 1;
    let mut d = vec![vec![0.0f64; total]; total];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = sq_euclidean(&points[i], &points[j]);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    let mut size = vec![1usize; total];
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..(n - 1) {
        let mut best: Option<(usize, usize, f64)> = None;
        for (ai, &a) in active.iter().enumerate() {
            for &b in &active[ai + 1..] {
                if best.is_none_or(|(_, _, bd)| d[a][b] < bd) {
                    best = Some((a, b, d[a][b]));
                }
            }
        }
        let (a, b, dist) = best.expect("at least two active clusters");
        let new = n + step;
        let (na, nb) = (size[a] as f64, size[b] as f64);
        for &k in &active {
            if k == a || k == b {
                continue;
            }
            let nk = size[k] as f64;
            let v = ((na + nk) * d[a][k] + (nb + nk) * d[b][k] - nk * dist) / (na + nb + nk);
            d[new][k] = v;
            d[k][new] = v;
        }
        size[new] = size[a] + size[b];
        active.retain(|&x| x != a && x != b);
        active.push(new);
        merges.push(Merge {
            left: a,
            right: b,
            distance: dist,
            size: size[new],
        });
    }
    Ok(Dendrogram {
        leaves: leaves.to_vec(),
        merges,
    })
}

/// Ward clustering of a topic model's centroids, skipping the outlier topic
/// and any topic in `exclude`.
pub fn ward_from_model(model: &TopicModel, exclude: &BTreeSet<i64>) -> Result<Dendrogram> {
    let kept: Vec<_> = model
        .topics
        .iter()
        .filter(|t| t.topic_id != OUTLIER_ID && !exclude.contains(&t.topic_id))
        .collect();
    let ids: Vec<i64> = kept.iter().map(|t| t.topic_id).collect();
    let points: Vec<Vec<f64>> = kept.iter().map(|t| t.centroid.clone()).collect();
    ward_cluster(&ids, &points)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sentiment {
    Positive,
    Negative,
    Excluded,
    Unassigned,
}

impl Sentiment {
    pub fn label(self) -> Option<Label> {
        match self {
            Sentiment::Positive => Some(Label::Positive),
            Sentiment::Negative => Some(Label::Negative),
            _ => None,
        }
    }
}

impl std::str::FromStr for Sentiment {
    type Err = Error;

    /// Accepts the three values a human may assign.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "positive" => Ok(Sentiment::Positive),
            "negative" => Ok(Sentiment::Negative),
            "excluded" => Ok(Sentiment::Excluded),
            other => Err(Error::InvalidParam(format!("unknown sentiment {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clade {
    pub clade_id: usize,
    pub member_topic_ids: Vec<i64>,
    pub sentiment: Sentiment,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutSpec {
    Threshold(f64),
    NClades(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CladeCut {
    pub cut: CutSpec,
    pub clades: Vec<Clade>,
}

/// Conventional coloring threshold: 70% of the highest merge.
pub fn default_threshold(d: &Dendrogram) -> f64 {
    0.7 * d.max_distance()
}

struct DisjointSet(Vec<usize>);

impl DisjointSet {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut x = x;
        while self.0[x] != r {
            let next = self.0[x];
            self.0[x] = r;
            x = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

/// Cuts the dendrogram into clades.
///
/// With a threshold `t`, clades are the maximal subtrees whose internal
/// merges all lie strictly below `t`. With `n_clades = k`, the last `k - 1`
/// merges are undone. Clades are numbered by their lowest leaf index.
pub fn cut_dendrogram(d: &Dendrogram, cut: CutSpec) -> Result<CladeCut> {
    let n = d.n_leaves();
    let mut ds = DisjointSet((0..(2 * n).saturating_sub(1).max(n)).collect());
    match cut {
        CutSpec::Threshold(t) => {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::InvalidParam(format!("cut threshold must be positive, got {t}")));
            }
            let mut good = vec![true; n + d.merges.len()];
            for (k, m) in d.merges.iter().enumerate() {
                let node = n + k;
                good[node] = m.distance < t && good[m.left] && good[m.right];
                if good[node] {
                    ds.union(m.left, node);
                    ds.union(m.right, node);
                }
            }
        }
        CutSpec::NClades(k) => {
            if k == 0 || k > n {
                return Err(Error::InvalidParam(format!(
                    "cannot cut {n} leaves into {k} clades"
                )));
            }
            for (step, m) in d.merges.iter().enumerate().take(n - k) {
                ds.union(m.left, n + step);
                ds.union(m.right, n + step);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for leaf in 0..n {
        groups.entry(ds.find(leaf)).or_default().push(leaf);
    }
    let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
    groups.sort_by_key(|g| g[0]);
    let clades = groups
        .into_iter()
        .enumerate()
        .map(|(clade_id, g)| Clade {
            clade_id,
            member_topic_ids: g.into_iter().map(|l| d.leaves[l]).collect(),
            sentiment: Sentiment::Unassigned,
        })
        .collect();
    Ok(CladeCut { cut, clades })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledClades {
    pub clades: Vec<Clade>,
    /// Effective sentiment of every topic that has one.
    pub topic_sentiments: BTreeMap<i64, Sentiment>,
}

/// Applies human clade sentiments. Precedence per topic: `exclusions`, then
/// `overrides`, then the clade's sentiment. In strict mode every clade must
/// be assigned.
pub fn assign_clade_sentiments(
    cut: &CladeCut,
    assignment: &BTreeMap<usize, Sentiment>,
    overrides: &BTreeMap<i64, Sentiment>,
    exclusions: &BTreeSet<i64>,
    strict: bool,
) -> Result<LabeledClades> {
    if let Some(&bad) = assignment
        .keys()
        .find(|id| !cut.clades.iter().any(|c| c.clade_id == **id))
    {
        return Err(Error::UnknownClade(bad));
    }
    let mut clades = cut.clades.clone();
    for c in &mut clades {
        c.sentiment = match assignment.get(&c.clade_id) {
            Some(s) => *s,
            None if strict => return Err(Error::UnassignedClade(c.clade_id)),
            None => Sentiment::Unassigned,
        };
    }
    let mut topic_sentiments = BTreeMap::new();
    for c in &clades {
        for &t in &c.member_topic_ids {
            topic_sentiments.insert(t, c.sentiment);
        }
    }
    for (&t, &s) in overrides {
        topic_sentiments.insert(t, s);
    }
    for &t in exclusions {
        topic_sentiments.insert(t, Sentiment::Excluded);
    }
    Ok(LabeledClades {
        clades,
        topic_sentiments,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledComment {
    pub comment_id: String,
    pub topic_id: i64,
    pub label: Label,
}

/// Comments carrying a propagated sentiment.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabeledSet {
    pub items: Vec<LabeledComment>,
    pub positive: usize,
    pub negative: usize,
    /// Comments whose topic is excluded, unassigned or the outlier.
    pub dropped: usize,
}

/// Gives every comment of a positive or negative topic that label; all
/// other comments are dropped. Items follow topic order, then member order.
pub fn propagate_labels(labeled: &LabeledClades, model: &TopicModel) -> LabeledSet {
    let mut out = LabeledSet::default();
    for topic in model.all_topics() {
        let label = labeled
            .topic_sentiments
            .get(&topic.topic_id)
            .and_then(|s| s.label())
            .filter(|_| !topic.is_outlier());
        let Some(label) = label else {
            out.dropped += topic.member_ids.len();
            continue;
        };
        for id in &topic.member_ids {
            out.items.push(LabeledComment {
                comment_id: id.clone(),
                topic_id: topic.topic_id,
                label,
            });
        }
        match label {
            Label::Positive => out.positive += topic.member_ids.len(),
            Label::Negative => out.negative += topic.member_ids.len(),
        }
    }
    out
}

fn read_pairs<K: std::str::FromStr>(path: &Path) -> Result<Vec<(K, Sentiment)>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |message: String| Error::Record {
            path: path.to_path_buf(),
            line: i + 2,
            message,
        };
        let key = rec
            .get(0)
            .and_then(|s| s.trim().parse::<K>().ok())
            .ok_or_else(|| bad(format!("bad id {:?}", rec.get(0).unwrap_or(""))))?;
        let sentiment: Sentiment = rec
            .get(1)
            .unwrap_or("")
            .parse()
            .map_err(|e: Error| bad(e.to_string()))?;
        out.push((key, sentiment));
    }
    Ok(out)
}

/// Reads a `clade_id,sentiment` CSV.
pub fn load_clade_sentiments(path: &Path) -> Result<BTreeMap<usize, Sentiment>> {
    Ok(read_pairs(path)?.into_iter().collect())
}

/// Reads a `topic_id,sentiment` override CSV.
pub fn load_topic_overrides(path: &Path) -> Result<BTreeMap<i64, Sentiment>> {
    Ok(read_pairs(path)?.into_iter().collect())
}
