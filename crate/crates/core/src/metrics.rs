//! Binary classification metrics: confusion matrix, accuracy, averaged
//! precision/recall/F1 and Cohen's kappa.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;

/// Counts indexed `[truth][prediction]`, positive first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; 2]; 2]) -> Self {
        ConfusionMatrix { counts }
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        self.counts[0][0] + self.counts[1][1]
    }

    pub fn truth_total(&self, c: usize) -> u64 {
        self.counts[c][0] + self.counts[c][1]
    }

    pub fn pred_total(&self, c: usize) -> u64 {
        self.counts[0][c] + self.counts[1][c]
    }
}

pub fn confusion(truth: &[Label], pred: &[Label]) -> Result<ConfusionMatrix> {
    if truth.len() != pred.len() {
        return Err(Error::InvalidParam(format!(
            "{} truth labels but {} predictions",
            truth.len(),
            pred.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Empty("no labels to compare"));
    }
    let mut cm = ConfusionMatrix::default();
    for (t, p) in truth.iter().zip(pred) {
        cm.counts[t.index()][p.index()] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// Per-class scores weighted by true-class support.
    #[default]
    Weighted,
    Macro,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn prf(cm: &ConfusionMatrix, averaging: Averaging) -> Result<Prf> {
    let n = cm.n();
    if n == 0 {
        return Err(Error::Empty("confusion matrix is empty"));
    }
    let mut out = Prf {
        accuracy: ratio(cm.trace(), n),
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };
    for c in 0..2 {
        let tp = cm.counts[c][c];
        let p = ratio(tp, cm.pred_total(c));
        let r = ratio(tp, cm.truth_total(c));
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        let w = match averaging {
            Averaging::Weighted => ratio(cm.truth_total(c), n),
            Averaging::Macro => 0.5,
        };
        out.precision += w * p;
        out.recall += w * r;
        out.f1 += w * f;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaBand {
    None,
    Minimal,
    Weak,
    Moderate,
    Strong,
    AlmostPerfect,
}

impl KappaBand {
    /// Right-closed bands: up to .20 none, .39 minimal, .59 weak,
    /// .79 moderate, .90 strong, above that almost perfect.
    pub fn of(kappa: f64) -> Self {
        match kappa {
            k if k <= 0.20 => KappaBand::None,
            k if k <= 0.39 => KappaBand::Minimal,
            k if k <= 0.59 => KappaBand::Weak,
            k if k <= 0.79 => KappaBand::Moderate,
            k if k <= 0.90 => KappaBand::Strong,
            _ => KappaBand::AlmostPerfect,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            KappaBand::None => "none",
            KappaBand::Minimal => "minimal",
            KappaBand::Weak => "weak",
            KappaBand::Moderate => "moderate",
            KappaBand::Strong => "strong",
            KappaBand::AlmostPerfect => "almost_perfect",
        }
    }
}

impl fmt::Display for KappaBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    pub p_o: f64,
    pub p_e: f64,
    pub kappa: f64,
    pub band: KappaBand,
}

pub fn cohens_kappa(cm: &ConfusionMatrix) -> Result<KappaResult> {
    let n = cm.n();
    if n == 0 {
        return Err(Error::Empty("confusion matrix is empty"));
    }
    let nf = n as f64;
    let p_o = cm.trace() as f64 / nf;
    let p_e: f64 = (0..2)
        .map(|c| (cm.truth_total(c) as f64 / nf) * (cm.pred_total(c) as f64 / nf))
        .sum();
    if p_e >= 1.0 {
        return Err(Error::DegenerateKappa);
    }
    let kappa = (p_o - p_e) / (1.0 - p_e);
    Ok(KappaResult {
        p_o,
        p_e,
        kappa,
        band: KappaBand::of(kappa),
    })
}

/// One model-seed evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub model: String,
    /// Seed as text so the average row can read `AVERAGE`.
    pub seed: String,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub kappa: f64,
    pub band: KappaBand,
    pub confusion: ConfusionMatrix,
}

pub fn evaluate(model: &str, seed: u64, truth: &[Label], pred: &[Label], averaging: Averaging) -> Result<EvalRow> {
    let cm = confusion(truth, pred)?;
    let m = prf(&cm, averaging)?;
    let k = cohens_kappa(&cm)?;
    Ok(EvalRow {
        model: model.to_owned(),
        seed: seed.to_string(),
        accuracy: m.accuracy,
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        kappa: k.kappa,
        band: k.band,
        confusion: cm,
    })
}

/// Mean of each metric over `rows`, with summed confusion counts.
pub fn average_row(model: &str, rows: &[EvalRow]) -> Option<EvalRow> {
    if rows.is_empty() {
        return None;
    }
    let n = rows.len() as f64;
    let mean = |f: fn(&EvalRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    let kappa = mean(|r| r.kappa);
    let mut confusion = ConfusionMatrix::default();
    for r in rows {
        for t in 0..2 {
            for p in 0..2 {
                confusion.counts[t][p] += r.confusion.counts[t][p];
            }
        }
    }
    Some(EvalRow {
        model: model.to_owned(),
        seed: "AVERAGE".to_owned(),
        accuracy: mean(|r| r.accuracy),
        precision: mean(|r| r.precision),
        recall: mean(|r| r.recall),
        f1: mean(|r| r.f1),
        kappa,
        band: KappaBand::of(kappa),
        confusion,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub averaging: Averaging,
    /// `oversample_then_split` or `split_then_oversample`.
    pub split_mode: String,
    pub rows: Vec<EvalRow>,
}

impl EvaluationReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record([
            "model", "seed", "accuracy", "precision", "recall", "f1", "kappa", "band", "tp", "fn", "fp", "tn",
        ])?;
        for r in &self.rows {
            let c = &r.confusion.counts;
            wtr.write_record([
                r.model.clone(),
                r.seed.clone(),
                format!("{:.6}", r.accuracy),
                format!("{:.6}", r.precision),
                format!("{:.6}", r.recall),
                format!("{:.6}", r.f1),
                format!("{:.6}", r.kappa),
                r.band.to_string(),
                c[0][0].to_string(),
                c[0][1].to_string(),
                c[1][0].to_string(),
                c[1][1].to_string(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}
