//! Precision, recall and F-measure against ground-truth labels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pcd::rank;

/// How scores are turned into outlier predictions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionRule {
    /// The `k` highest scores (ties by ascending id).
    TopK(usize),
    /// Every score `>= t`.
    Threshold(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub decision_rule: DecisionRule,
    pub detector: String,
}

impl EvalReport {
    fn from_predictions(predicted: &[bool], labels: &[bool], rule: DecisionRule) -> Self {
        let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
        for (&p, &l) in predicted.iter().zip(labels) {
            match (p, l) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Self {
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            f_measure: f_measure(precision, recall),
            decision_rule: rule,
            detector: String::new(),
        }
    }

    pub fn with_detector(mut self, name: impl Into<String>) -> Self {
        self.detector = name.into();
        self
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f_measure(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

fn check_lengths(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::LabelLength {
            labels: labels.len(),
            points: scores.len(),
        });
    }
    if scores.is_empty() {
        return Err(Error::invalid("no scores to evaluate"));
    }
    Ok(())
}

/// Outlier predictions for `scores` under `rule`.
pub fn predict(scores: &[f64], rule: DecisionRule) -> Result<Vec<bool>> {
    match rule {
        DecisionRule::TopK(k) => {
            if k == 0 || k > scores.len() {
                return Err(Error::invalid(format!(
                    "top-k must be between 1 and {}, got {k}",
                    scores.len()
                )));
            }
            let mut predicted = vec![false; scores.len()];
            for id in rank(scores).into_iter().take(k) {
                predicted[id] = true;
            }
            Ok(predicted)
        }
        DecisionRule::Threshold(t) => Ok(scores.iter().map(|&s| s >= t).collect()),
    }
}

pub fn evaluate(scores: &[f64], labels: &[bool], rule: DecisionRule) -> Result<EvalReport> {
    check_lengths(scores, labels)?;
    let predicted = predict(scores, rule)?;
    Ok(EvalReport::from_predictions(&predicted, labels, rule))
}

/// Try a threshold at every distinct score and keep the best F-measure;
/// among equal F-measures the lowest threshold wins.
pub fn best_f_sweep(scores: &[f64], labels: &[bool]) -> Result<(f64, EvalReport)> {
    check_lengths(scores, labels)?;
    let total_pos = labels.iter().filter(|&&l| l).count();

    // Walk thresholds from the highest score down; lowering the threshold
    // past a group of equal scores flips that whole group to positive.
    let order = rank(scores);
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut best: Option<(f64, f64)> = None;
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let f = f_measure(ratio(tp, tp + fp), ratio(tp, total_pos));
        if best.is_none_or(|(best_f, _)| f >= best_f) {
            best = Some((f, t));
        }
    }
    let (_, threshold) = best.expect("at least one score");
    let report = evaluate(scores, labels, DecisionRule::Threshold(threshold))?;
    Ok((threshold, report))
}
