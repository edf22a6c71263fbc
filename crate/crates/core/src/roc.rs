//! Threshold-sweep ROC curves, trapezoidal AUC and TP at fixed FP.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Scores `>= threshold` are called positive.
    pub threshold: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TpAtFp {
    pub fp: f64,
    pub tp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RocSummary {
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub tp_at_fp: Vec<TpAtFp>,
    pub positives: usize,
    pub negatives: usize,
}

fn check_scores(scores: &[f64], what: &str) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::Input(format!("no {what} scores")));
    }
    if let Some(v) = scores.iter().find(|v| v.is_nan()) {
        return Err(Error::Input(format!("{what} score {v} is not a number")));
    }
    Ok(())
}

pub fn roc(positive: &[f64], negative: &[f64], fp_grid: &[f64]) -> Result<RocSummary> {
    check_scores(positive, "positive")?;
    check_scores(negative, "negative")?;
    let mut pos = positive.to_vec();
    let mut neg = negative.to_vec();
    // Descending order.
    pos.sort_by(|a, b| b.total_cmp(a));
    neg.sort_by(|a, b| b.total_cmp(a));
    let mut thresholds: Vec<f64> = pos.iter().chain(&neg).copied().collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();

    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let (mut ip, mut ineg) = (0usize, 0usize);
    for &t in &thresholds {
        while ip < pos.len() && pos[ip] >= t {
            ip += 1;
        }
        while ineg < neg.len() && neg[ineg] >= t {
            ineg += 1;
        }
        points.push(RocPoint {
            fpr: ineg as f64 / nn,
            tpr: ip as f64 / np,
            threshold: t,
        });
    }
    let auc = trapezoid(&points);
    let tp_at_fp = fp_grid
        .iter()
        .map(|&fp| TpAtFp {
            fp,
            tp: points
                .iter()
                .filter(|p| p.fpr <= fp)
                .map(|p| p.tpr)
                .fold(0.0, f64::max),
        })
        .collect();
    Ok(RocSummary {
        points,
        auc,
        tp_at_fp,
        positives: pos.len(),
        negatives: neg.len(),
    })
}

pub fn trapezoid(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
        .sum()
}
