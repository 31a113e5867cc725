//! Brute-force reference implementations used to check the library.
//! Each one recomputes its answer from first principles instead of reusing
//! library code paths.
#![allow(dead_code)]

use std::collections::BTreeMap;

/// SplitMix64; enough randomness for generating test instances without
/// pulling in an RNG crate.
pub struct Gen(u64);

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: usize, hi_inclusive: usize) -> usize {
        lo + (self.next_u64() % (hi_inclusive - lo + 1) as u64) as usize
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.unit().max(1e-300);
        let u2 = self.unit();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn points(&mut self, n: usize, dim: usize, scale: f64) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..dim).map(|_| scale * self.normal()).collect())
            .collect()
    }
}

fn mean(points: &[&Vec<f64>]) -> Vec<f64> {
    let dim = points[0].len();
    let mut m = vec![0.0; dim];
    for p in points {
        for k in 0..dim {
            m[k] += p[k];
        }
    }
    m.iter().map(|x| x / points.len() as f64).collect()
}

/// Error sum of squares around the cluster mean.
pub fn ess(points: &[&Vec<f64>]) -> f64 {
    let m = mean(points);
    points
        .iter()
        .map(|p| p.iter().zip(&m).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .sum()
}

/// Ward agglomeration by direct objective evaluation: at every step merge
/// the pair of clusters whose union raises the total error sum of squares
/// least. Heights are reported as twice that increase, which is the scale
/// of squared Euclidean leaf distances. Node ids follow the usual scheme
/// (leaves first, then one id per merge).
pub fn ward(points: &[Vec<f64>]) -> Vec<(usize, usize, f64)> {
    let n = points.len();
    let mut clusters: BTreeMap<usize, Vec<usize>> = (0..n).map(|i| (i, vec![i])).collect();
    let mut out = Vec::new();
    for step in 0..n - 1 {
        let ids: Vec<usize> = clusters.keys().copied().collect();
        let mut best: Option<(usize, usize, f64)> = None;
        for (x, &a) in ids.iter().enumerate() {
            for &b in &ids[x + 1..] {
                let pa: Vec<&Vec<f64>> = clusters[&a].iter().map(|&i| &points[i]).collect();
                let pb: Vec<&Vec<f64>> = clusters[&b].iter().map(|&i| &points[i]).collect();
                let both: Vec<&Vec<f64>> = pa.iter().chain(pb.iter()).copied().collect();
                let h = 2.0 * (ess(&both) - ess(&pa) - ess(&pb));
                if best.is_none_or(|(_, _, bh)| h < bh) {
                    best = Some((a, b, h));
                }
            }
        }
        let (a, b, h) = best.unwrap();
        let mut merged = clusters.remove(&a).unwrap();
        merged.extend(clusters.remove(&b).unwrap());
        clusters.insert(n + step, merged);
        out.push((a, b, h));
    }
    out
}

/// Density clustering by exhaustive pairwise checks and union-find over
/// core points.
pub fn dbscan(points: &[Vec<f64>], eps: f64, min_members: usize) -> Vec<Option<usize>> {
    let n = points.len();
    let close = |i: usize, j: usize| {
        let d: f64 = points[i]
            .iter()
            .zip(&points[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        d <= eps
    };
    let core: Vec<bool> = (0..n)
        .map(|i| (0..n).filter(|&j| close(i, j)).count() >= min_members)
        .collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        if p[x] == x {
            x
        } else {
            let r = find(p, p[x]);
            p[x] = r;
            r
        }
    }
    for i in 0..n {
        for j in 0..n {
            if core[i] && core[j] && close(i, j) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    // components numbered by their lowest core index
    let mut number: BTreeMap<usize, usize> = BTreeMap::new();
    let mut labels = vec![None; n];
    for i in 0..n {
        if core[i] {
            let root = find(&mut parent, i);
            let next = number.len();
            let c = *number.entry(root).or_insert(next);
            labels[i] = Some(c);
        }
    }
    for i in 0..n {
        if !core[i] {
            labels[i] = (0..n).find(|&j| core[j] && close(i, j)).and_then(|j| labels[j]);
        }
    }
    labels
}

/// N-gram counts by enumerating every start position of every comment.
pub fn ngram_counts(comments: &[Vec<String>], n: usize) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    for c in comments {
        if c.len() < n {
            continue;
        }
        for start in 0..=(c.len() - n) {
            let gram = c[start..start + n].join(" ");
            *out.entry(gram).or_insert(0) += 1;
        }
    }
    out
}

/// Accuracy and support-weighted precision, recall and F1 from raw label
/// pairs (0 = positive, 1 = negative).
pub fn weighted_prf(pairs: &[(usize, usize)]) -> (f64, f64, f64, f64) {
    let n = pairs.len() as f64;
    let acc = pairs.iter().filter(|(t, p)| t == p).count() as f64 / n;
    let (mut pw, mut rw, mut fw) = (0.0, 0.0, 0.0);
    for c in 0..2 {
        let tp = pairs.iter().filter(|&&(t, p)| t == c && p == c).count() as f64;
        let predicted = pairs.iter().filter(|&&(_, p)| p == c).count() as f64;
        let actual = pairs.iter().filter(|&&(t, _)| t == c).count() as f64;
        let prec = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let rec = if actual > 0.0 { tp / actual } else { 0.0 };
        let f1 = if prec + rec > 0.0 { 2.0 * prec * rec / (prec + rec) } else { 0.0 };
        pw += actual / n * prec;
        rw += actual / n * rec;
        fw += actual / n * f1;
    }
    (acc, pw, rw, fw)
}

/// Expands a `[truth][pred]` count matrix into label pairs.
pub fn expand(counts: [[u64; 2]; 2]) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for (t, row) in counts.iter().enumerate() {
        for (p, &c) in row.iter().enumerate() {
            v.extend(std::iter::repeat_n((t, p), c as usize));
        }
    }
    v
}

/// Cohen's kappa from label pairs.
pub fn kappa(pairs: &[(usize, usize)]) -> f64 {
    let n = pairs.len() as f64;
    let po = pairs.iter().filter(|(t, p)| t == p).count() as f64 / n;
    let pe: f64 = (0..2)
        .map(|c| {
            let t = pairs.iter().filter(|&&(x, _)| x == c).count() as f64 / n;
            let p = pairs.iter().filter(|&&(_, x)| x == c).count() as f64 / n;
            t * p
        })
        .sum();
    (po - pe) / (1.0 - pe)
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns
/// eigenvalues with unit eigenvectors as columns, unsorted.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut a: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

/// Sample covariance (n - 1 denominator).
pub fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len() as f64;
    let dim = rows[0].len();
    let m: Vec<f64> = (0..dim).map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / n).collect();
    (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| rows.iter().map(|r| (r[i] - m[i]) * (r[j] - m[j])).sum::<f64>() / (n - 1.0))
                .collect()
        })
        .collect()
}

/// Indices of the `k` smallest distances, by full sort on (distance, index).
pub fn knn_indices(train: &[Vec<f64>], q: &[f64], k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, p)| (p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
        .collect();
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    d.into_iter().take(k).map(|(_, i)| i).collect()
}

/// Mean logistic loss of raw scores against 0/1 targets, written out
/// directly from the definition.
pub fn mean_log_loss(scores: &[f64], targets: &[f64]) -> f64 {
    scores
        .iter()
        .zip(targets)
        .map(|(f, y)| {
            let p = 1.0 / (1.0 + (-f).exp());
            if *y > 0.5 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum::<f64>()
        / scores.len() as f64
}
