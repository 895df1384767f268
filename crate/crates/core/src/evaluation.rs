//! Four-class confusion matrix and the derived rates.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::BiRads;

const K: usize = 4;

/// Rows are actual classes, columns predicted, both in B-2..B-5 order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; K]; K],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; K]; K]) -> Self {
        Self { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..K).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn col_sum(&self, class: usize) -> u64 {
        self.counts.iter().map(|r| r[class]).sum()
    }

    /// `(TP, TN, FP, FN)` of one class against the rest.
    pub fn one_vs_rest(&self, class: usize) -> [u64; 4] {
        let tp = self.counts[class][class];
        let fn_ = self.row_sum(class) - tp;
        let fp = self.col_sum(class) - tp;
        let tn = self.total() - tp - fn_ - fp;
        [tp, tn, fp, fn_]
    }
}

/// Tallies `(label, prediction)` pairs given as class indices 0..4.
pub fn confusion(preds: &[usize], labels: &[usize]) -> Result<ConfusionMatrix> {
    if preds.len() != labels.len() {
        return Err(Error::LengthMismatch(preds.len(), labels.len()));
    }
    if preds.is_empty() {
        return Err(Error::InvalidInput("no samples to score".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &a) in preds.iter().zip(labels) {
        if p >= K || a >= K {
            return Err(Error::InvalidInput(format!("class index {} out of range", p.max(a))));
        }
        cm.counts[a][p] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassRates {
    pub class: BiRads,
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub ppv: f64,
    pub npv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub matrix: ConfusionMatrix,
    pub total: u64,
    pub accuracy: f64,
    pub per_class: Vec<ClassRates>,
    pub mean_sensitivity: f64,
    pub mean_specificity: f64,
    pub micro_tp: u64,
    pub micro_tn: u64,
    pub micro_fp: u64,
    pub micro_fn: u64,
    pub micro_ppv: f64,
    pub micro_npv: f64,
    pub micro_mcc: f64,
    pub macro_ppv: f64,
    pub macro_npv: f64,
    /// Rates whose denominator was zero; they are reported as 0.
    pub degenerate: Vec<String>,
}

fn rate(num: u64, den: u64, name: impl FnOnce() -> String, flags: &mut Vec<String>) -> f64 {
    if den == 0 {
        flags.push(name());
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::InvalidInput("empty confusion matrix".into()));
    }
    let mut flags = Vec::new();
    let mut per_class = Vec::with_capacity(K);
    let mut sums = [0u64; 4];
    for (c, class) in BiRads::ALL.iter().enumerate() {
        let [tp, tn, fp, fn_] = cm.one_vs_rest(c);
        for (s, v) in sums.iter_mut().zip([tp, tn, fp, fn_]) {
            *s += v;
        }
        let tag = class.as_str();
        per_class.push(ClassRates {
            class: *class,
            tp,
            tn,
            fp,
            fn_,
            sensitivity: rate(tp, tp + fn_, || format!("{tag} sensitivity"), &mut flags),
            specificity: rate(tn, tn + fp, || format!("{tag} specificity"), &mut flags),
            ppv: rate(tp, tp + fp, || format!("{tag} ppv"), &mut flags),
            npv: rate(tn, tn + fn_, || format!("{tag} npv"), &mut flags),
        });
    }
    let [tp, tn, fp, fn_] = sums;
    let mean = |f: fn(&ClassRates) -> f64| per_class.iter().map(f).sum::<f64>() / K as f64;
    let den = ((tp + fp) as f64 * (tp + fn_) as f64 * (tn + fp) as f64 * (tn + fn_) as f64).sqrt();
    let micro_mcc = if den == 0.0 {
        flags.push("micro mcc".into());
        0.0
    } else {
        (tp as f64 * tn as f64 - fp as f64 * fn_ as f64) / den
    };
    Ok(MetricReport {
        matrix: *cm,
        total,
        accuracy: cm.trace() as f64 / total as f64,
        mean_sensitivity: mean(|r| r.sensitivity),
        mean_specificity: mean(|r| r.specificity),
        macro_ppv: mean(|r| r.ppv),
        macro_npv: mean(|r| r.npv),
        micro_ppv: rate(tp, tp + fp, || "micro ppv".into(), &mut flags),
        micro_npv: rate(tn, tn + fn_, || "micro npv".into(), &mut flags),
        micro_mcc,
        micro_tp: tp,
        micro_tn: tn,
        micro_fp: fp,
        micro_fn: fn_,
        per_class,
        degenerate: flags,
    })
}

impl MetricReport {
    /// Human-readable summary.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# mammocad metric report v1\n");
        let _ = writeln!(out, "samples: {}", self.total);
        let _ = writeln!(out, "accuracy: {:.4}", self.accuracy);
        let _ = writeln!(out, "\nconfusion (rows actual, columns predicted)");
        let _ = writeln!(out, "       B-2   B-3   B-4   B-5");
        for (c, row) in self.matrix.counts.iter().enumerate() {
            let _ = writeln!(
                out,
                "{}  {:>4}  {:>4}  {:>4}  {:>4}",
                BiRads::ALL[c].as_str(),
                row[0],
                row[1],
                row[2],
                row[3]
            );
        }
        let _ = writeln!(out, "\nclass  sensitivity  specificity  ppv     npv");
        for r in &self.per_class {
            let _ = writeln!(
                out,
                "{}    {:.4}       {:.4}       {:.4}  {:.4}",
                r.class.as_str(),
                r.sensitivity,
                r.specificity,
                r.ppv,
                r.npv
            );
        }
        let _ = writeln!(out, "\nmean sensitivity: {:.4}", self.mean_sensitivity);
        let _ = writeln!(out, "mean specificity: {:.4}", self.mean_specificity);
        let _ = writeln!(
            out,
            "micro TP/TN/FP/FN: {}/{}/{}/{}",
            self.micro_tp, self.micro_tn, self.micro_fp, self.micro_fn
        );
        let _ = writeln!(out, "ppv: micro {:.4}, macro {:.4}", self.micro_ppv, self.macro_ppv);
        let _ = writeln!(out, "npv: micro {:.4}, macro {:.4}", self.micro_npv, self.macro_npv);
        let _ = writeln!(out, "mcc (micro): {:.4}", self.micro_mcc);
        if !self.degenerate.is_empty() {
            let _ = writeln!(out, "zero-denominator rates reported as 0: {}", self.degenerate.join(", "));
        }
        out
    }

    pub const CSV_HEADER: &'static str = "samples,accuracy,mean_sensitivity,mean_specificity,\
micro_ppv,micro_npv,micro_mcc,macro_ppv,macro_npv,\
sensitivity_b2,sensitivity_b3,sensitivity_b4,sensitivity_b5,\
specificity_b2,specificity_b3,specificity_b4,specificity_b5";

    /// One flat CSV row matching [`Self::CSV_HEADER`].
    pub fn to_csv_row(&self) -> String {
        let mut cells = vec![
            self.total.to_string(),
            self.accuracy.to_string(),
            self.mean_sensitivity.to_string(),
            self.mean_specificity.to_string(),
            self.micro_ppv.to_string(),
            self.micro_npv.to_string(),
            self.micro_mcc.to_string(),
            self.macro_ppv.to_string(),
            self.macro_npv.to_string(),
        ];
        cells.extend(self.per_class.iter().map(|r| r.sensitivity.to_string()));
        cells.extend(self.per_class.iter().map(|r| r.specificity.to_string()));
        cells.join(",")
    }
}
