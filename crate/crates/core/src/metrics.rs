//! Evaluation metrics and score/metric rank correlation.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassificationReport {
    pub mse: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub pr_auc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionReport {
    pub mse: f64,
    /// `None` when the predictions are constant and ranks carry no information.
    pub spearman_r: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricReport {
    Classification(ClassificationReport),
    Regression(RegressionReport),
}

impl MetricReport {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        match (self, metric) {
            (MetricReport::Classification(r), Metric::Mse) | (MetricReport::Classification(r), Metric::Loss) => {
                Some(r.mse)
            }
            (MetricReport::Classification(r), Metric::Accuracy) => Some(r.accuracy),
            (MetricReport::Classification(r), Metric::F1) => Some(r.f1),
            (MetricReport::Classification(r), Metric::PrAuc) => Some(r.pr_auc),
            (MetricReport::Regression(r), Metric::Mse) | (MetricReport::Regression(r), Metric::Loss) => Some(r.mse),
            (MetricReport::Regression(r), Metric::SpearmanR) => r.spearman_r,
            _ => None,
        }
    }
}

/// Metric selector for correlation reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Mse,
    /// Alias of `Mse`: the training objective evaluated on the test split.
    Loss,
    Accuracy,
    F1,
    PrAuc,
    SpearmanR,
}

impl Metric {
    pub const ALL: [Metric; 6] = [Metric::Mse, Metric::Loss, Metric::Accuracy, Metric::F1, Metric::PrAuc, Metric::SpearmanR];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mse => "mse",
            Metric::Loss => "loss",
            Metric::Accuracy => "accuracy",
            Metric::F1 => "f1",
            Metric::PrAuc => "pr_auc",
            Metric::SpearmanR => "spearman_r",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown metric '{s}'")))
    }
}

fn check_pair(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { left: a, right: b });
    }
    if a == 0 {
        return Err(Error::InvalidInput("empty input".into()));
    }
    Ok(())
}

pub fn mse(preds: &[f64], targets: &[f64]) -> Result<f64> {
    check_pair(preds.len(), targets.len())?;
    Ok(preds.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / preds.len() as f64)
}

/// Average precision for the +1 class. Scores are swept in descending order
/// and tied scores enter together: AP = Σ_k (R_k − R_{k−1}) · P_k over tie
/// groups k.
pub fn average_precision(scores: &[f64], labels: &[f64]) -> Result<f64> {
    check_pair(scores.len(), labels.len())?;
    let total_pos = labels.iter().filter(|&&y| y > 0.0).count();
    if total_pos == 0 || total_pos == labels.len() {
        return Err(Error::InvalidInput("PR-AUC is undefined for a single-class label vector".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut seen, mut ap, mut last_recall) = (0usize, 0usize, 0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] > 0.0 {
                tp += 1;
            }
            j += 1;
        }
        seen = j;
        let recall = tp as f64 / total_pos as f64;
        ap += (recall - last_recall) * (tp as f64 / seen as f64);
        last_recall = recall;
        i = j;
    }
    debug_assert_eq!(seen, order.len());
    Ok(ap)
}

/// MSE on raw scores; accuracy and F1 at threshold 0 with +1 positive;
/// PR-AUC as tie-grouped average precision.
pub fn classification_metrics(scores: &[f64], labels: &[f64]) -> Result<ClassificationReport> {
    check_pair(scores.len(), labels.len())?;
    if let Some(index) = labels.iter().position(|&y| y != 1.0 && y != -1.0) {
        return Err(Error::InvalidLabel { index, value: labels[index] });
    }
    let (mut tp, mut fp, mut fn_, mut correct) = (0usize, 0usize, 0usize, 0usize);
    for (&s, &y) in scores.iter().zip(labels) {
        let predicted = if s >= 0.0 { 1.0 } else { -1.0 };
        if predicted == y {
            correct += 1;
        }
        match (predicted > 0.0, y > 0.0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let f1_denominator = 2 * tp + fp + fn_;
    Ok(ClassificationReport {
        mse: mse(scores, labels)?,
        accuracy: correct as f64 / scores.len() as f64,
        f1: if f1_denominator == 0 { 0.0 } else { 2.0 * tp as f64 / f1_denominator as f64 },
        pr_auc: average_precision(scores, labels)?,
    })
}

pub fn regression_metrics(preds: &[f64], targets: &[f64]) -> Result<RegressionReport> {
    let mse = mse(preds, targets)?;
    let spearman_r = match spearman(preds, targets) {
        Ok(rho) => Some(rho),
        Err(Error::InvalidInput(_)) if is_constant(preds) => None,
        Err(e) => return Err(e),
    };
    Ok(RegressionReport { mse, spearman_r })
}

fn is_constant(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] == w[1])
}

/// 1-based ranks with ties sharing their mean rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = alloc::vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let mean = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = mean;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pair(xs.len(), ys.len())?;
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::InvalidInput("correlation of a constant vector".into()));
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// Pearson correlation of average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pair(xs.len(), ys.len())?;
    if xs.len() < 3 {
        return Err(Error::InvalidInput(format!("spearman needs at least 3 points, got {}", xs.len())));
    }
    if is_constant(xs) || is_constant(ys) {
        return Err(Error::InvalidInput("spearman of a constant vector".into()));
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}

/// One ρ(score, metric) entry of a correlation report.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    pub variant: String,
    pub metric: Metric,
    pub n_circuits: usize,
    pub rho: f64,
    /// (circuit id, score, metric) for every circuit with both values.
    pub points: Vec<(usize, f64, f64)>,
}

/// Joins per-variant scores with per-circuit metrics on circuit id and returns
/// one Spearman row per variant.
pub fn correlation_report(
    variants: &[(String, Vec<(usize, f64)>)],
    metrics: &[(usize, MetricReport)],
    metric: Metric,
) -> Result<Vec<CorrelationRow>> {
    variants
        .iter()
        .map(|(name, scores)| {
            let points: Vec<(usize, f64, f64)> = scores
                .iter()
                .filter_map(|&(id, score)| {
                    let report = metrics.iter().find(|(m_id, _)| *m_id == id)?;
                    Some((id, score, report.1.get(metric)?))
                })
                .collect();
            if points.len() < 3 {
                return Err(Error::InvalidInput(format!(
                    "variant {name}: only {} circuits have both a score and {metric}",
                    points.len()
                )));
            }
            let xs: Vec<f64> = points.iter().map(|p| p.1).collect();
            let ys: Vec<f64> = points.iter().map(|p| p.2).collect();
            Ok(CorrelationRow { variant: name.clone(), metric, n_circuits: points.len(), rho: spearman(&xs, &ys)?, points })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[0.3, -0.2], &[0.3, -0.2]).unwrap(), 0.0);
        assert_eq!(mse(&[1.0, -1.0], &[-1.0, 1.0]).unwrap(), 4.0);
        assert_eq!(mse(&[0.5, 0.0], &[1.0, 0.0]).unwrap(), 0.125);
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mse(&[], &[]).is_err());
    }

    #[test]
    fn perfect_classifier() {
        let labels = [1.0, -1.0, 1.0, -1.0];
        let r = classification_metrics(&labels, &labels).unwrap();
        assert_eq!((r.mse, r.accuracy, r.f1, r.pr_auc), (0.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn tied_scores_give_prevalence() {
        let labels = [1.0, -1.0, 1.0, 1.0, -1.0];
        assert_eq!(average_precision(&[0.2; 5], &labels).unwrap(), 0.6);
    }

    #[test]
    fn hand_sweep() {
        // Sorted: 0.9 (+), 0.8 (−), −0.5 (−). One positive found at rank 1.
        let r = classification_metrics(&[0.9, 0.8, -0.5], &[1.0, -1.0, -1.0]).unwrap();
        assert!((r.accuracy - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.pr_auc, 1.0);
        // Positive ranked second: AP = 1 · 1/2.
        assert_eq!(average_precision(&[0.8, 0.9, -0.5], &[1.0, -1.0, -1.0]).unwrap(), 0.5);
    }

    #[test]
    fn single_class_pr_auc_errors() {
        assert!(classification_metrics(&[0.1, 0.2], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn spearman_examples() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0, 4.0], &[10.0, 20.0, 30.0, 40.0]).unwrap(), 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
        // Ranks (1, 2.5, 2.5, 4) vs (1, 3, 2, 4): Pearson = 4.5 / √(4.5 · 5).
        let rho = spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((rho - 4.5 / libm::sqrt(4.5 * 5.0)).abs() < 1e-15);
        assert!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(spearman(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn constant_regression_predictions_have_no_rank_correlation() {
        let r = regression_metrics(&[0.1, 0.1, 0.1], &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(r.spearman_r, None);
        assert!(r.mse > 0.0);
    }

    #[test]
    fn correlation_report_joins_on_id() {
        let scores = vec![("eq1".into(), vec![(0, 0.1), (1, 0.2), (2, 0.3), (7, 0.9)])];
        let metrics: Vec<(usize, MetricReport)> = (0..3)
            .map(|i| {
                (i, MetricReport::Regression(RegressionReport { mse: i as f64, spearman_r: None }))
            })
            .collect();
        let rows = correlation_report(&scores, &metrics, Metric::Mse).unwrap();
        assert_eq!(rows[0].rho, 1.0);
        assert_eq!(rows[0].n_circuits, 3);
        assert!(correlation_report(&scores, &metrics, Metric::SpearmanR).is_err());
    }
}
