//! Scoring metrics: ROC curves, area under the curve, and thresholded
//! confusion-matrix summaries.
//!
//! The AUC is accumulated in integers — for each distinct score, the
//! trapezoid contribution `delta_fp * (tp_before + tp_after)` is an exact
//! integer, and only the final division by `2 * positives * negatives`
//! happens in floating point. This makes the trapezoid AUC bit-identical to
//! the rank-statistic definition (wins plus half-ties over all
//! positive-negative pairs), and exactly invariant under any strictly
//! monotone transform of the scores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// ROC curve with its exact area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(false positive rate, true positive rate)`, starting at (0, 0) and
    /// ending at (1, 1); one point per distinct score in between.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Builds the ROC curve over `(score, label)` pairs. Requires at least one
/// positive and one negative label, otherwise rates are undefined.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::input(format!(
            "scores ({}) and labels ({}) disagree",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::input("scores must be finite"));
    }
    let pos = labels.iter().filter(|&&l| l).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::input(
            "roc needs at least one positive and one negative label",
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = Vec::with_capacity(scores.len() + 1);
    points.push((0.0, 0.0));
    let mut tp: u64 = 0;
    let mut fp: u64 = 0;
    // Twice the area in units of (1 tp) x (1 fp) rectangles.
    let mut num: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        // All indices sharing one score move together, producing one
        // diagonal segment on the curve.
        let score = scores[order[i]];
        let mut dtp: u64 = 0;
        let mut dfp: u64 = 0;
        while i < order.len() && scores[order[i]] == score {
            if labels[order[i]] {
                dtp += 1;
            } else {
                dfp += 1;
            }
            i += 1;
        }
        num += dfp * (2 * tp + dtp);
        tp += dtp;
        fp += dfp;
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }

    Ok(RocCurve {
        points,
        auc: num as f64 / (2 * pos * neg) as f64,
    })
}

/// Counts at a fixed decision threshold: a score at or above the threshold
/// predicts the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_positives: u64,
    pub false_positives: u64,
    pub true_negatives: u64,
    pub false_negatives: u64,
}

impl Confusion {
    pub fn from_scores(scores: &[f64], labels: &[bool], threshold: f64) -> Self {
        let mut c = Confusion {
            true_positives: 0,
            false_positives: 0,
            true_negatives: 0,
            false_negatives: 0,
        };
        for (&s, &l) in scores.iter().zip(labels) {
            let predicted = s >= threshold;
            match (predicted, l) {
                (true, true) => c.true_positives += 1,
                (true, false) => c.false_positives += 1,
                (false, false) => c.true_negatives += 1,
                (false, true) => c.false_negatives += 1,
            }
        }
        c
    }

    /// Fraction of actual positives predicted positive; 0 when there are no
    /// positives.
    pub fn sensitivity(&self) -> f64 {
        ratio(self.true_positives, self.true_positives + self.false_negatives)
    }

    /// Fraction of actual negatives predicted negative; 0 when there are no
    /// negatives.
    pub fn specificity(&self) -> f64 {
        ratio(self.true_negatives, self.true_negatives + self.false_positives)
    }

    pub fn accuracy(&self) -> f64 {
        ratio(
            self.true_positives + self.true_negatives,
            self.true_positives + self.false_positives + self.true_negatives + self.false_negatives,
        )
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// True positive rate of one curve at a false positive rate, interpolating
/// linearly along the curve. At an exact vertical jump the top of the jump
/// is used.
fn tpr_at(curve: &RocCurve, fpr: f64) -> f64 {
    let pts = &curve.points;
    // Rightmost point with fpr <= query; later points at the same fpr have
    // higher tpr, so this lands on top of any vertical run.
    let mut idx = 0;
    for (k, p) in pts.iter().enumerate() {
        if p.0 <= fpr {
            idx = k;
        } else {
            break;
        }
    }
    let (f0, t0) = pts[idx];
    if f0 >= fpr || idx + 1 >= pts.len() {
        return t0;
    }
    let (f1, t1) = pts[idx + 1];
    t0 + (t1 - t0) * (fpr - f0) / (f1 - f0)
}

/// Pointwise (vertical) average of several ROC curves on an evenly spaced
/// false-positive-rate grid with `grid_points` entries from 0 to 1.
pub fn mean_roc(curves: &[RocCurve], grid_points: usize) -> Vec<(f64, f64)> {
    if curves.is_empty() || grid_points < 2 {
        return Vec::new();
    }
    (0..grid_points)
        .map(|i| {
            let fpr = i as f64 / (grid_points - 1) as f64;
            let mean_tpr =
                curves.iter().map(|c| tpr_at(c, fpr)).sum::<f64>() / curves.len() as f64;
            (fpr, mean_tpr)
        })
        .collect()
}

/// Mean and sample standard deviation (n-1 denominator; 0 for a single
/// value).
pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
