use serde::{Deserialize, Serialize};

use crate::error::MetricError;
use crate::model::Label;

/// Binary classification scores with `Deceptive` as the positive class.
/// Ratios with a zero denominator are reported as 0 and flagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub precision_defined: bool,
    pub recall_defined: bool,
    pub f1_defined: bool,
}

impl DetectionReport {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                (0.0, false)
            } else {
                (num as f64 / den as f64, true)
            }
        };
        let (precision, precision_defined) = ratio(tp, tp + fp);
        let (recall, recall_defined) = ratio(tp, tp + fn_);
        let (f1, f1_defined) = if precision + recall > 0.0 {
            (2.0 * precision * recall / (precision + recall), true)
        } else {
            (0.0, precision_defined && recall_defined)
        };
        let total = tp + fp + fn_ + tn;
        let accuracy = if total == 0 {
            0.0
        } else {
            (tp + tn) as f64 / total as f64
        };
        Self {
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            f1,
            accuracy,
            precision_defined,
            recall_defined,
            f1_defined,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn detection_report(predictions: &[Label], golds: &[Label]) -> Result<DetectionReport, MetricError> {
    if predictions.len() != golds.len() {
        return Err(MetricError::LengthMismatch(predictions.len(), golds.len()));
    }
    if predictions.is_empty() {
        return Err(MetricError::TooFew { min: 1, got: 0 });
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (p, g) in predictions.iter().zip(golds) {
        match (p, g) {
            (Label::Deceptive, Label::Deceptive) => tp += 1,
            (Label::Deceptive, Label::NonDeceptive) => fp += 1,
            (Label::NonDeceptive, Label::Deceptive) => fn_ += 1,
            (Label::NonDeceptive, Label::NonDeceptive) => tn += 1,
        }
    }
    Ok(DetectionReport::from_counts(tp, fp, fn_, tn))
}
