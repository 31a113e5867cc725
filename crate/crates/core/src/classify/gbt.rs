use serde::{Deserialize, Serialize};

use super::{feature_dim, Dataset, Model, TrainedModel};
use crate::error::{Error, Result};
use crate::label::Label;
use crate::vectorspace::SparseVec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Growth {
    /// Split every splittable node of a depth before going deeper.
    Levelwise,
    /// Always split the leaf with the largest gain.
    Leafwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtParams {
    pub rounds: usize,
    pub learning_rate: f64,
    /// Depth cap for level-wise growth.
    pub max_depth: usize,
    /// Leaf cap for leaf-wise growth.
    pub max_leaves: usize,
    pub min_leaf: usize,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            rounds: 100,
            learning_rate: 0.1,
            max_depth: 6,
            max_leaves: 31,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Regression tree rooted at node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_of(&self, x: &SparseVec) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x.get(feature) <= threshold { left } else { right },
            }
        }
    }

    pub fn eval(&self, x: &SparseVec) -> f64 {
        match self.nodes[self.leaf_of(x)] {
            Node::Leaf { value } => value,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }
}

/// Boosted ensemble on the logistic loss; scores are log-odds of positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gbt {
    pub growth: Growth,
    pub params: GbtParams,
    pub base_score: f64,
    pub trees: Vec<Tree>,
    /// Mean training log-loss before the first round and after each round.
    pub loss_history: Vec<f64>,
}

impl Gbt {
    pub fn raw_score(&self, x: &SparseVec) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.eval(x)).sum::<f64>()
    }

    pub fn predict(&self, x: &SparseVec) -> Label {
        if sigmoid(self.raw_score(x)) >= 0.5 {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Logistic loss of raw score `f` for target `y` in {0, 1}.
pub fn log_loss(f: f64, y: f64) -> f64 {
    if y > 0.5 {
        softplus(-f)
    } else {
        softplus(f)
    }
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Best variance-reduction split of `rows` on residuals `r`.
fn best_split(rows: &[usize], x: &[&SparseVec], r: &[f64], min_leaf: usize) -> Option<SplitChoice> {
    let n = rows.len();
    if n < 2 * min_leaf.max(1) {
        return None;
    }
    let total: f64 = rows.iter().map(|&i| r[i]).sum();
    let parent = total * total / n as f64;

    let mut entries: Vec<(usize, f64, f64)> = Vec::new();
    for &i in rows {
        for (j, v) in x[i].iter() {
            entries.push((j, v, r[i]));
        }
    }
    entries.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let mut best: Option<SplitChoice> = None;
    let mut blocks: Vec<(f64, usize, f64)> = Vec::new();
    let mut start = 0;
    while start < entries.len() {
        let feature = entries[start].0;
        let mut end = start;
        while end < entries.len() && entries[end].0 == feature {
            end += 1;
        }
        let group = &entries[start..end];
        start = end;

        // value blocks in ascending order, with the implicit zeros slotted in
        blocks.clear();
        let zeros = n - group.len();
        let zero_sum = total - group.iter().map(|e| e.2).sum::<f64>();
        let mut zero_done = zeros == 0;
        for &(_, v, g) in group {
            if !zero_done && v > 0.0 {
                blocks.push((0.0, zeros, zero_sum));
                zero_done = true;
            }
            match blocks.last_mut() {
                Some(b) if b.0 == v => {
                    b.1 += 1;
                    b.2 += g;
                }
                _ => blocks.push((v, 1, g)),
            }
        }
        if !zero_done {
            blocks.push((0.0, zeros, zero_sum));
        }

        let (mut ln, mut ls) = (0usize, 0.0f64);
        for k in 0..blocks.len().saturating_sub(1) {
            ln += blocks[k].1;
            ls += blocks[k].2;
            let rn = n - ln;
            if ln < min_leaf || rn < min_leaf {
                continue;
            }
            let rs = total - ls;
            let gain = ls * ls / ln as f64 + rs * rs / rn as f64 - parent;
            if gain > 1e-12 && best.as_ref().is_none_or(|b| gain > b.gain) {
                let (lo, hi) = (blocks[k].0, blocks[k + 1].0);
                let mid = lo + (hi - lo) / 2.0;
                best = Some(SplitChoice {
                    feature,
                    threshold: if mid < hi { mid } else { lo },
                    gain,
                });
            }
        }
    }
    best
}

fn partition(rows: &[usize], x: &[&SparseVec], s: &SplitChoice) -> (Vec<usize>, Vec<usize>) {
    rows.iter().partition(|&&i| x[i].get(s.feature) <= s.threshold)
}

fn apply_split(nodes: &mut Vec<Node>, at: usize, s: &SplitChoice) -> (usize, usize) {
    let left = nodes.len();
    nodes.push(Node::Leaf { value: 0.0 });
    nodes.push(Node::Leaf { value: 0.0 });
    nodes[at] = Node::Split {
        feature: s.feature,
        threshold: s.threshold,
        left,
        right: left + 1,
    };
    (left, left + 1)
}

/// Tree structure plus the training rows of each leaf.
fn grow(
    growth: Growth,
    params: &GbtParams,
    x: &[&SparseVec],
    r: &[f64],
) -> (Vec<Node>, Vec<(usize, Vec<usize>)>) {
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let all: Vec<usize> = (0..x.len()).collect();
    match growth {
        Growth::Levelwise => {
            let mut done = Vec::new();
            let mut frontier = vec![(0usize, all)];
            for _ in 0..params.max_depth {
                let mut next = Vec::new();
                for (node, rows) in frontier {
                    match best_split(&rows, x, r, params.min_leaf) {
                        Some(s) => {
                            let (lr, rr) = partition(&rows, x, &s);
                            let (l, rt) = apply_split(&mut nodes, node, &s);
                            next.push((l, lr));
                            next.push((rt, rr));
                        }
                        None => done.push((node, rows)),
                    }
                }
                frontier = next;
            }
            done.extend(frontier);
            (nodes, done)
        }
        Growth::Leafwise => {
            let root_split = best_split(&all, x, r, params.min_leaf);
            let mut leaves = vec![(0usize, all, root_split)];
            while leaves.len() < params.max_leaves {
                let mut pick: Option<usize> = None;
                for (k, (node, _, s)) in leaves.iter().enumerate() {
                    if let Some(s) = s {
                        let better = match pick {
                            None => true,
                            Some(p) => {
                                let (pn, _, ps) = &leaves[p];
                                let pg = ps.as_ref().map_or(f64::NEG_INFINITY, |c| c.gain);
                                s.gain > pg || (s.gain == pg && node < pn)
                            }
                        };
                        if better {
                            pick = Some(k);
                        }
                    }
                }
                let Some(k) = pick else { break };
                let (node, rows, s) = leaves.swap_remove(k);
                let s = s.expect("picked leaves have a split");
                let (lr, rr) = partition(&rows, x, &s);
                let (l, rt) = apply_split(&mut nodes, node, &s);
                let ls = best_split(&lr, x, r, params.min_leaf);
                let rs = best_split(&rr, x, r, params.min_leaf);
                leaves.push((l, lr, ls));
                leaves.push((rt, rr, rs));
            }
            (nodes, leaves.into_iter().map(|(n, rows, _)| (n, rows)).collect())
        }
    }
}

/// Newton step for one leaf, halved until the leaf's own loss does not
/// increase; zero if no halving helps.
fn leaf_value(rows: &[usize], f: &[f64], y: &[f64], lr: f64) -> f64 {
    let (mut g, mut h) = (0.0, 0.0);
    for &i in rows {
        let p = sigmoid(f[i]);
        g += y[i] - p;
        h += p * (1.0 - p);
    }
    let loss = |v: f64| rows.iter().map(|&i| log_loss(f[i] + v, y[i])).sum::<f64>();
    let base = loss(0.0);
    let mut v = lr * g / (h + 1e-12);
    for _ in 0..64 {
        if !v.is_finite() {
            break;
        }
        if loss(v) <= base {
            return v;
        }
        v *= 0.5;
    }
    0.0
}

pub fn train_gbt(train: &Dataset<SparseVec>, growth: Growth, params: GbtParams, seed: u64) -> Result<TrainedModel> {
    let dim = feature_dim(train)?;
    if params.rounds == 0 {
        return Err(Error::InvalidParam("boosting needs at least one round".into()));
    }
    if !(params.learning_rate.is_finite() && params.learning_rate > 0.0) {
        return Err(Error::InvalidParam(format!(
            "learning rate must be positive, got {}",
            params.learning_rate
        )));
    }
    let cap_ok = match growth {
        Growth::Levelwise => params.max_depth >= 1,
        Growth::Leafwise => params.max_leaves >= 2,
    };
    if !cap_ok || params.min_leaf == 0 {
        return Err(Error::InvalidParam(format!("invalid tree size limits {params:?}")));
    }

    let x: Vec<&SparseVec> = train.items.iter().map(|e| &e.features).collect();
    let y: Vec<f64> = train
        .items
        .iter()
        .map(|e| if e.label == Label::Positive { 1.0 } else { 0.0 })
        .collect();
    let n = y.len() as f64;
    let p = (y.iter().sum::<f64>() / n).clamp(1e-6, 1.0 - 1e-6);
    let base_score = (p / (1.0 - p)).ln();
    let mut f = vec![base_score; y.len()];
    let mean_loss = |f: &[f64]| f.iter().zip(&y).map(|(fi, yi)| log_loss(*fi, *yi)).sum::<f64>() / n;

    let mut trees = Vec::with_capacity(params.rounds);
    let mut loss_history = vec![mean_loss(&f)];
    for _ in 0..params.rounds {
        let r: Vec<f64> = f.iter().zip(&y).map(|(fi, yi)| yi - sigmoid(*fi)).collect();
        let (mut nodes, leaves) = grow(growth, &params, &x, &r);
        for (node, rows) in &leaves {
            let v = leaf_value(rows, &f, &y, params.learning_rate);
            nodes[*node] = Node::Leaf { value: v };
            for &i in rows {
                f[i] += v;
            }
        }
        trees.push(Tree { nodes });
        loss_history.push(mean_loss(&f));
    }
    let gbt = Gbt {
        growth,
        params,
        base_score,
        trees,
        loss_history,
    };
    Ok(TrainedModel {
        seed,
        dim,
        model: match growth {
            Growth::Levelwise => Model::GbtLevelwise(gbt),
            Growth::Leafwise => Model::GbtLeafwise(gbt),
        },
    })
}
