//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use cladesense::classify::{
    split, train_gbt, train_knn, train_nb, train_svm, Dataset, Example, GbtParams, Growth, Model, SplitConfig,
    SvmParams,
};
use cladesense::clades::ward_cluster;
use cladesense::corpus::{tokenize, PreprocessConfig};
use cladesense::metrics::{cohens_kappa, confusion, prf, Averaging, ConfusionMatrix, KappaBand};
use cladesense::ngrams::{extract_ngrams, NgramSpec};
use cladesense::topicmodel::{fit_topics, model_from_labels, share, topic_shares, ClusterParams, OUTLIER_ID};
use cladesense::vectorspace::{fit_tfidf, EmbeddingMatrix, SparseVec};
use cladesense::Label;
use oracles::Gen;
use sha2::{Digest, Sha256};

type Outcome = Result<String, String>;
/// `None` means the criterion does not apply here.
type Check = fn() -> Option<Outcome>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn balanced(acc: f64) -> ConfusionMatrix {
    let hit = (acc * 1000.0).round() as u64;
    ConfusionMatrix::from_counts([[hit, 1000 - hit], [1000 - hit, hit]])
}

fn kappa_arithmetic() -> Outcome {
    let pairs = [(0.946, 0.893), (0.861, 0.721), (0.893, 0.786), (0.954, 0.907)];
    for (acc, want) in pairs {
        let cm = balanced(acc);
        let k = cohens_kappa(&cm).map_err(|e| e.to_string())?.kappa;
        let got_acc = cm.trace() as f64 / cm.n() as f64;
        ensure!(close(got_acc, acc, 1e-12), "accuracy {got_acc} for target {acc}");
        ensure!(close(k, 2.0 * acc - 1.0, 1e-12), "kappa {k} breaks 2*acc-1 at acc {acc}");
        ensure!(close(k, want, 0.002), "kappa {k} vs reported {want} at acc {acc}");
    }
    Ok("4 pairings within 0.002".into())
}

fn topic_share_arithmetic() -> Outcome {
    let a = share(0, 1895, 4877).percentage;
    let b = share(1, 1357, 4877).percentage;
    ensure!(close(a, 38.85585, 1e-4), "1895/4877 gave {a}");
    ensure!(close(b, 27.82448, 1e-4), "1357/4877 gave {b}");
    // Same numbers through a fitted model.
    let n = 4877;
    let labels: Vec<Option<usize>> = (0..n)
        .map(|i| match i {
            i if i < 1895 => Some(0),
            i if i < 1895 + 1357 => Some(1),
            _ => None,
        })
        .collect();
    let m = EmbeddingMatrix::new((0..n).map(|i| format!("c{i}")).collect(), vec![vec![0.0]; n]).unwrap();
    let model = model_from_labels(&m, &labels, ClusterParams::new(1.0, 2).unwrap());
    let shares = topic_shares(&model, n).map_err(|e| e.to_string())?;
    let of = |id: i64| shares.iter().find(|s| s.topic_id == id).unwrap().percentage;
    ensure!(of(0) == a && of(1) == b, "model shares disagree");
    ensure!(shares[0].topic_id == 0, "largest topic not first");
    Ok(format!("{a:.5}% and {b:.5}%"))
}

fn split_arithmetic() -> Outcome {
    let items: Vec<Example<u32>> = (0..1100)
        .map(|i| Example {
            id: format!("c{i}"),
            features: i,
            label: if i < 700 { Label::Positive } else { Label::Negative },
        })
        .collect();
    let data = Dataset::new(items);
    let (train, test) = split(&data, &SplitConfig::default()).map_err(|e| e.to_string())?;
    ensure!(train.class_counts() == [560, 560], "train {:?}", train.class_counts());
    ensure!(test.class_counts() == [140, 140], "test {:?}", test.class_counts());
    Ok("700/700 -> 560/560 train, 140/140 test".into())
}

fn ward_oracle() -> Outcome {
    let mut g = Gen::new(0x3A7D);
    for case in 0..200 {
        let n = g.range(2, 12);
        let dim = g.range(2, 8);
        let pts = g.points(n, dim, 3.0);
        let leaves: Vec<i64> = (0..n as i64).collect();
        let d = ward_cluster(&leaves, &pts).map_err(|e| e.to_string())?;
        let want = oracles::ward(&pts);
        ensure!(d.merges.len() == want.len(), "case {case}: merge count");
        for (m, (a, b, h)) in d.merges.iter().zip(&want) {
            ensure!((m.left, m.right) == (*a, *b), "case {case}: merged ({},{}) not ({a},{b})", m.left, m.right);
            ensure!(close(m.distance, *h, 1e-8), "case {case}: height {} vs {h}", m.distance);
        }
    }
    let d = ward_cluster(&[0, 1, 2], &[vec![0.0], vec![1.0], vec![3.0]]).map_err(|e| e.to_string())?;
    ensure!(close(d.merges[0].distance, 1.0, 1e-12), "hand case first height {}", d.merges[0].distance);
    ensure!(
        close(d.merges[1].distance, 25.0 / 3.0, 1e-12),
        "hand case second height {}",
        d.merges[1].distance
    );
    Ok("200 random instances + hand case".into())
}

fn clustering_oracle() -> Outcome {
    let mut g = Gen::new(0xC1D5);
    for case in 0..100 {
        let n = g.range(1, 40);
        let dim = g.range(1, 4);
        let centers = g.points(3, dim, 4.0);
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                if i % 5 == 4 {
                    (0..dim).map(|_| 8.0 * g.normal()).collect()
                } else {
                    centers[i % 3].iter().map(|x| x + 0.6 * g.normal()).collect()
                }
            })
            .collect();
        let eps = 0.3 + 1.2 * g.unit();
        let min_members = g.range(2, 5);
        let m = EmbeddingMatrix::new((0..n).map(|i| format!("c{i}")).collect(), pts.clone()).unwrap();
        let model = fit_topics(&m, &m, ClusterParams::new(eps, min_members).unwrap()).map_err(|e| e.to_string())?;
        let a = model.assignment();
        let got: Vec<Option<usize>> = m
            .ids()
            .iter()
            .map(|id| match a[id.as_str()] {
                OUTLIER_ID => None,
                t => Some(t as usize),
            })
            .collect();
        ensure!(got == oracles::dbscan(&pts, eps, min_members), "case {case}: assignments differ");
    }
    Ok("100 random instances, exact".into())
}

fn dataset(rows: &[Vec<f64>], labels: &[Label]) -> Dataset<SparseVec> {
    Dataset::new(
        rows.iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (r, l))| Example {
                id: format!("d{i}"),
                features: SparseVec::from_dense(r),
                label: *l,
            })
            .collect(),
    )
}

fn random_dataset(g: &mut Gen, n: usize, dim: usize) -> Dataset<SparseVec> {
    let rows = g.points(n, dim, 1.0);
    let labels: Vec<Label> = rows
        .iter()
        .map(|r| {
            if r[0] + 0.5 * g.normal() > 0.0 {
                Label::Positive
            } else {
                Label::Negative
            }
        })
        .collect();
    dataset(&rows, &labels)
}

fn classifier_suite() -> Outcome {
    let mut g = Gen::new(0xC1A5);
    // KNN k = 1 memorizes distinct points.
    let d = random_dataset(&mut g, 60, 4);
    let knn = train_knn(&d, 1, 0).map_err(|e| e.to_string())?;
    for e in &d.items {
        ensure!(knn.predict_one(&e.features).unwrap() == e.label, "KNN k=1 missed {}", e.id);
    }

    // NB toy corpus by hand: alpha 1, term mass positive [3,1,0],
    // negative [0,1,3].
    let rows = vec![vec![2.0, 1.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 2.0], vec![0.0, 0.0, 1.0]];
    let labels = [Label::Positive, Label::Positive, Label::Negative, Label::Negative];
    let nb = train_nb(&dataset(&rows, &labels), 0).map_err(|e| e.to_string())?;
    let Model::Nb(nb) = &nb.model else { unreachable!() };
    let s = nb.log_scores(&SparseVec::from_dense(&[2.0, 1.0, 0.0]));
    let half = 0.5f64.ln();
    let pos = half + 2.0 * (4.0f64 / 7.0).ln() + (2.0f64 / 7.0).ln();
    let neg = half + 2.0 * (1.0f64 / 7.0).ln() + (2.0f64 / 7.0).ln();
    ensure!(close(s[0], pos, 1e-9) && close(s[1], neg, 1e-9), "NB log-scores {s:?}");

    // SVM on a separable pair.
    let pair = dataset(&[vec![-1.0, 0.5], vec![1.0, 0.5]], &[Label::Negative, Label::Positive]);
    let svm = train_svm(&pair, SvmParams { lambda: 0.01, epochs: 50 }, 1).map_err(|e| e.to_string())?;
    for e in &pair.items {
        ensure!(svm.predict_one(&e.features).unwrap() == e.label, "SVM misclassified {}", e.id);
    }

    // GBT training loss never increases, both growth modes.
    let params = GbtParams {
        rounds: 30,
        ..GbtParams::default()
    };
    for trial in 0..5 {
        let d = random_dataset(&mut g, 80, 5);
        for growth in [Growth::Levelwise, Growth::Leafwise] {
            let m = train_gbt(&d, growth, params, trial).map_err(|e| e.to_string())?;
            let (Model::GbtLevelwise(gb) | Model::GbtLeafwise(gb)) = &m.model else { unreachable!() };
            for w in gb.loss_history.windows(2) {
                ensure!(w[1].le(&w[0]), "{growth:?} loss rose {} -> {}", w[0], w[1]);
            }
        }
    }

    // Seeded runs are bit-identical.
    let d = random_dataset(&mut g, 70, 6);
    let counts = d.clone().map(|e| {
        let abs: Vec<f64> = e.features.to_dense().iter().map(|x| x.abs()).collect();
        SparseVec::from_dense(&abs)
    });
    let runs = || -> Result<Vec<String>, String> {
        let models = [
            train_nb(&counts, 7),
            train_knn(&d, 5, 7),
            train_svm(&d, SvmParams::default(), 7),
            train_gbt(&d, Growth::Levelwise, params, 7),
            train_gbt(&d, Growth::Leafwise, params, 7),
        ];
        models
            .into_iter()
            .map(|m| m.map_err(|e| e.to_string()).map(|m| serde_json::to_string(&m).unwrap()))
            .collect()
    };
    ensure!(runs()? == runs()?, "a trainer is not deterministic");
    Ok("KNN, NB, SVM, GBT x2, determinism".into())
}

fn metric_identities() -> Outcome {
    ensure!(KappaBand::of(0.20) == KappaBand::None, "0.20 -> {:?}", KappaBand::of(0.20));
    ensure!(KappaBand::of(0.90) == KappaBand::Strong, "0.90 -> {:?}", KappaBand::of(0.90));
    ensure!(
        KappaBand::of(0.901) == KappaBand::AlmostPerfect,
        "0.901 -> {:?}",
        KappaBand::of(0.901)
    );
    let uniform = ConfusionMatrix::from_counts([[25, 25], [25, 25]]);
    let k = cohens_kappa(&uniform).map_err(|e| e.to_string())?.kappa;
    ensure!(k == 0.0, "uniform kappa {k}");
    for (a, b) in [(1, 1), (3, 17), (250, 4)] {
        let k = cohens_kappa(&ConfusionMatrix::from_counts([[a, 0], [0, b]]))
            .map_err(|e| e.to_string())?
            .kappa;
        ensure!(k == 1.0, "diagonal kappa {k}");
    }
    let counts = [[45, 15], [25, 15]];
    let pairs = oracles::expand(counts);
    let truth: Vec<Label> = pairs.iter().map(|p| if p.0 == 0 { Label::Positive } else { Label::Negative }).collect();
    let pred: Vec<Label> = pairs.iter().map(|p| if p.1 == 0 { Label::Positive } else { Label::Negative }).collect();
    let cm = confusion(&truth, &pred).map_err(|e| e.to_string())?;
    ensure!(cm.counts == counts, "tally {:?}", cm.counts);
    let m = prf(&cm, Averaging::Weighted).map_err(|e| e.to_string())?;
    let (acc, p, r, f) = oracles::weighted_prf(&pairs);
    ensure!(close(m.accuracy, acc, 1e-9), "accuracy {} vs {acc}", m.accuracy);
    ensure!(close(m.precision, p, 1e-9), "precision {} vs {p}", m.precision);
    ensure!(close(m.recall, r, 1e-9), "recall {} vs {r}", m.recall);
    ensure!(close(m.f1, f, 1e-9), "f1 {} vs {f}", m.f1);
    Ok(format!("bands, kappa 0/1, weighted P={p:.6} R={r:.6} F1={f:.6}"))
}

fn ngram_tfidf_oracles() -> Outcome {
    let vocab = ["a", "b", "c", "d", "bakuna", "pfizer"];
    let mut g = Gen::new(0x7E57);
    for case in 0..100 {
        let corpus: Vec<Vec<String>> = (0..g.range(0, 12))
            .map(|_| {
                (0..g.range(0, 9))
                    .map(|_| vocab[g.range(0, vocab.len() - 1)].to_string())
                    .collect()
            })
            .collect();
        for n in 1..=3 {
            let table = extract_ngrams(&corpus, NgramSpec::new(n, usize::MAX).unwrap());
            let got: BTreeMap<String, u64> = table.entries.iter().map(|(g, c)| (g.join(" "), *c)).collect();
            ensure!(got == oracles::ngram_counts(&corpus, n), "case {case}, n={n}: counts differ");
        }
    }
    let pre = PreprocessConfig::default();
    let tokens = tokenize(&pre.clean("COVID-19 vaccines work effectively on any of the viral strains."));
    let table = extract_ngrams(&[tokens], NgramSpec::new(3, usize::MAX).unwrap());
    let grams: BTreeSet<String> = table.entries.iter().map(|(g, _)| g.join(" ")).collect();
    for want in ["vaccines work effectively", "the viral strains"] {
        ensure!(grams.contains(want), "missing trigram {want:?} in {grams:?}");
    }
    let docs = vec![vec!["bakuna", "x"], vec!["bakuna"], vec!["y", "bakuna"]];
    let v = fit_tfidf(&docs).map_err(|e| e.to_string())?;
    let idf = v.idf("bakuna").unwrap();
    ensure!(idf == 1.0, "idf of an everywhere term is {idf}");
    Ok("100 corpora, example trigrams, idf = 1".into())
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic")
}

fn run_all(out: &Path) -> Result<Duration, String> {
    let start = Instant::now();
    let res = Command::new(env!("CARGO_BIN_EXE_cladesense"))
        .arg("--config")
        .arg(fixture_dir().join("config.json"))
        .arg("--out")
        .arg(out)
        .arg("run-all")
        .env("RUST_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    let took = start.elapsed();
    if !res.status.success() {
        return Err(format!("run-all failed: {}", String::from_utf8_lossy(&res.stderr)));
    }
    Ok(took)
}

fn files(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn end_to_end() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let t1 = run_all(&a)?;
    let t2 = run_all(&b)?;
    ensure!(t1.as_secs_f64() < 60.0 && t2.as_secs_f64() < 60.0, "too slow: {t1:?}, {t2:?}");

    // Planted sentiments reach every comment.
    let labeled: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("label/labeled.json")).unwrap()).unwrap();
    let got: BTreeMap<String, String> = labeled["items"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| (i["comment_id"].as_str().unwrap().to_owned(), i["label"].as_str().unwrap().to_owned()))
        .collect();
    let mut rdr = csv::Reader::from_path(fixture_dir().join("truth.csv")).unwrap();
    let mut expected = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        if rec[1] != *"none" {
            expected.insert(rec[0].to_owned(), rec[1].to_owned());
        }
    }
    let agree = expected.iter().filter(|(id, l)| got.get(*id) == Some(*l)).count();
    ensure!(
        agree == expected.len() && got.len() == expected.len(),
        "label agreement {agree}/{} with {} labeled",
        expected.len(),
        got.len()
    );

    // Five classifier families on five seeds.
    let eval: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.join("evaluate/evaluation.json")).unwrap()).unwrap();
    let mut seen: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for row in eval["rows"].as_array().unwrap() {
        let seed = row["seed"].as_str().unwrap();
        if seed == "AVERAGE" {
            continue;
        }
        let model = row["model"].as_str().unwrap();
        let family = if model.starts_with("knn") { "knn" } else { model };
        seen.entry(family.to_owned()).or_default().insert(seed.to_owned());
    }
    let families: Vec<&str> = seen.keys().map(String::as_str).collect();
    ensure!(
        families == ["gbt_leafwise", "gbt_levelwise", "knn", "nb", "svm"],
        "model families {families:?}"
    );
    let seeds: BTreeSet<String> = ["15", "27", "32", "45", "51"].map(String::from).into();
    ensure!(seen.values().all(|s| *s == seeds), "seeds per family {seen:?}");

    // Manifest covers every artifact with its checksum.
    let fa = files(&a);
    let manifest: serde_json::Value = serde_json::from_slice(&fa["manifest.json"]).unwrap();
    let mut listed = BTreeMap::new();
    for stage in manifest["stages"].as_object().unwrap().values() {
        for (k, v) in stage["artifacts"].as_object().unwrap() {
            listed.insert(k.clone(), v.as_str().unwrap().to_owned());
        }
    }
    for (rel, bytes) in fa.iter().filter(|(k, _)| *k != "manifest.json") {
        let want = hex::encode(Sha256::digest(bytes));
        ensure!(listed.get(rel) == Some(&want), "manifest entry for {rel} missing or stale");
    }
    ensure!(listed.len() + 1 == fa.len(), "manifest lists files that do not exist");

    // Reruns are byte-identical.
    let mut fb = files(&b);
    let mut fa = fa;
    fa.remove("manifest.json");
    fb.remove("manifest.json");
    ensure!(fa.keys().eq(fb.keys()), "artifact sets differ between runs");
    if let Some(k) = fa.keys().find(|k| fa[*k] != fb[*k]) {
        return Err(format!("{k} differs between runs"));
    }
    Ok(format!(
        "{}/{} labels agree, {} artifacts identical, runs {:.1}s / {:.1}s",
        agree,
        expected.len(),
        fa.len(),
        t1.as_secs_f64(),
        t2.as_secs_f64()
    ))
}

/// Runs only when the study corpus has been converted to the input format
/// and pointed to by `CLADESENSE_STUDY_CONFIG` (or placed under
/// `fixtures/study/config.json`).
fn study_unigrams() -> Option<Outcome> {
    let config = std::env::var_os("CLADESENSE_STUDY_CONFIG")
        .map(PathBuf::from)
        .or_else(|| Some(Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/study/config.json")))
        .filter(|p| p.exists())?;
    Some((|| {
        let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
        let res = Command::new(env!("CARGO_BIN_EXE_cladesense"))
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(tmp.path())
            .args(["--set", "ngrams.mode=clean", "--set", "ngrams.sizes=[1]", "ngrams"])
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(res.status.success(), "ngrams failed: {}", String::from_utf8_lossy(&res.stderr));
        let mut rdr = csv::Reader::from_path(tmp.path().join("ngrams/ngram_1.csv")).map_err(|e| e.to_string())?;
        let first = rdr.records().next().ok_or("empty unigram table")?.map_err(|e| e.to_string())?;
        ensure!(
            &first[0] == "vaccine" && &first[1] == "1541",
            "top unigram {:?} {:?}",
            &first[0],
            &first[1]
        );
        Ok("top unigram vaccine 1541".into())
    })())
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 10] = [
        ("kappa arithmetic", || Some(kappa_arithmetic())),
        ("topic-share arithmetic", || Some(topic_share_arithmetic())),
        ("split arithmetic", || Some(split_arithmetic())),
        ("Ward oracle equivalence", || Some(ward_oracle())),
        ("clustering oracle equivalence", || Some(clustering_oracle())),
        ("classifier property suite", || Some(classifier_suite())),
        ("metric identities", || Some(metric_identities())),
        ("n-gram and TF-IDF oracles", || Some(ngram_tfidf_oracles())),
        ("end-to-end determinism", || Some(end_to_end())),
        ("study corpus top unigram", study_unigrams),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Some(Err("panicked".into())));
        let took = start.elapsed().as_secs_f64();
        match outcome {
            Some(Ok(detail)) => println!("PASS {:>2} {name}: {detail} ({took:.2}s)", i + 1),
            Some(Err(why)) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} ({took:.2}s)", i + 1);
            }
            None => println!("SKIP {:>2} {name}: study corpus not present", i + 1),
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
