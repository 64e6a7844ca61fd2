//! Noisy-sample detection and hard-clean preservation metrics.
//!
//! A sample is flagged unreliable when its score is strictly greater than the
//! threshold `eta`. AUROC is the Mann-Whitney statistic with ties counted as
//! one half. AUPRC is average precision: the sum over distinct score
//! thresholds (highest first) of `(R_n - R_{n-1}) * P_n`, where tied scores
//! enter together.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RgcError};

/// Detection counts at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPoint {
    pub threshold: f64,
    pub noisy_recall: f64,
    pub hc_fp: f64,
    pub hcpr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub threshold: f64,
    pub noisy_recall: f64,
    pub hc_fp: f64,
    pub hcpr: f64,
    /// Noisy (positive) versus hard-clean samples.
    pub auroc: f64,
    pub auprc: f64,
}

fn check_lengths(scores: &[f64], masks: &[&[bool]]) -> Result<()> {
    if masks.iter().any(|m| m.len() != scores.len()) {
        return Err(RgcError::input("score and mask lengths differ"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(RgcError::input("scores contain NaN"));
    }
    Ok(())
}

pub fn detection_at_threshold(
    scores: &[f64],
    noisy: &[bool],
    hard_clean: &[bool],
    eta: f64,
) -> Result<ThresholdPoint> {
    check_lengths(scores, &[noisy, hard_clean])?;
    let n_noisy = noisy.iter().filter(|&&b| b).count();
    let n_hc = hard_clean.iter().filter(|&&b| b).count();
    if n_noisy == 0 {
        return Err(RgcError::UndefinedMetric("no noisy samples".into()));
    }
    if n_hc == 0 {
        return Err(RgcError::UndefinedMetric("no hard-clean samples".into()));
    }
    let flagged = |mask: &[bool]| {
        scores
            .iter()
            .zip(mask)
            .filter(|(&s, &m)| m && s > eta)
            .count()
    };
    let hc_fp = flagged(hard_clean) as f64 / n_hc as f64;
    Ok(ThresholdPoint {
        threshold: eta,
        noisy_recall: flagged(noisy) as f64 / n_noisy as f64,
        hc_fp,
        hcpr: 1.0 - hc_fp,
    })
}

/// Indices of `scores` sorted ascending, grouped into runs of equal score.
fn tie_groups(scores: &[f64], descending: bool) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        let o = scores[a].total_cmp(&scores[b]);
        if descending {
            o.reverse()
        } else {
            o
        }
    });
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in idx {
        match groups.last_mut() {
            Some(g) if scores[g[0]] == scores[i] => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Rank-based AUROC of `scores` for separating `positive` from the rest.
pub fn auroc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    check_lengths(scores, &[positive])?;
    let n_pos = positive.iter().filter(|&&b| b).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(RgcError::UndefinedMetric(
            "AUROC needs both classes present".into(),
        ));
    }
    let mut rank_sum = 0.0;
    let mut next_rank = 1.0;
    for group in tie_groups(scores, false) {
        let len = group.len() as f64;
        let avg = next_rank + (len - 1.0) / 2.0;
        rank_sum += avg * group.iter().filter(|&&i| positive[i]).count() as f64;
        next_rank += len;
    }
    let p = n_pos as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n_neg as f64))
}

/// Average-precision AUPRC.
pub fn auprc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    check_lengths(scores, &[positive])?;
    let n_pos = positive.iter().filter(|&&b| b).count();
    if n_pos == 0 {
        return Err(RgcError::UndefinedMetric(
            "AUPRC needs at least one positive".into(),
        ));
    }
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for group in tie_groups(scores, true) {
        tp += group.iter().filter(|&&i| positive[i]).count();
        seen += group.len();
        let recall = tp as f64 / n_pos as f64;
        ap += (recall - prev_recall) * (tp as f64 / seen as f64);
        prev_recall = recall;
    }
    Ok(ap)
}

/// Linear-interpolation quantile (`q` in `[0, 1]`) of an ascending-sorted slice.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(RgcError::input("quantile of an empty slice"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&v, q))
}

/// Number of points in the threshold sweep grid.
pub const SWEEP_POINTS: usize = 101;

/// Detection rates at the 101 quantiles `0, 0.01, ..., 1` of the score
/// distribution.
pub fn threshold_sweep(
    scores: &[f64],
    noisy: &[bool],
    hard_clean: &[bool],
) -> Result<Vec<ThresholdPoint>> {
    check_lengths(scores, &[noisy, hard_clean])?;
    if scores.is_empty() {
        return Err(RgcError::input("threshold sweep needs scores"));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    (0..SWEEP_POINTS)
        .map(|k| {
            let eta = quantile_sorted(&sorted, k as f64 / (SWEEP_POINTS - 1) as f64);
            detection_at_threshold(scores, noisy, hard_clean, eta)
        })
        .collect()
}

pub const SWEEP_HEADER: &str = "eta,noisy_rec,hc_fp,hcpr";

pub fn write_sweep_csv<W: std::io::Write>(mut out: W, rows: &[ThresholdPoint]) -> Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.threshold, r.noisy_recall, r.hc_fp, r.hcpr
        )?;
    }
    Ok(())
}

pub fn read_sweep_csv(text: &str) -> Result<Vec<ThresholdPoint>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim_end) != Some(SWEEP_HEADER) {
        return Err(RgcError::parse(
            "threshold sweep",
            "missing or unexpected header",
        ));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let v = l
                .trim_end()
                .split(',')
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|e| RgcError::parse("threshold sweep", e))
                })
                .collect::<Result<Vec<f64>>>()?;
            match v.as_slice() {
                &[threshold, noisy_recall, hc_fp, hcpr] => Ok(ThresholdPoint {
                    threshold,
                    noisy_recall,
                    hc_fp,
                    hcpr,
                }),
                _ => Err(RgcError::parse("threshold sweep", "expected 4 fields")),
            }
        })
        .collect()
}

/// Threshold counts at `eta` plus AUROC/AUPRC of noisy versus hard-clean.
pub fn detection_report(
    scores: &[f64],
    noisy: &[bool],
    hard_clean: &[bool],
    eta: f64,
) -> Result<DetectionReport> {
    let point = detection_at_threshold(scores, noisy, hard_clean, eta)?;
    let (sub_scores, sub_pos) = restrict(scores, noisy, hard_clean);
    Ok(DetectionReport {
        threshold: point.threshold,
        noisy_recall: point.noisy_recall,
        hc_fp: point.hc_fp,
        hcpr: point.hcpr,
        auroc: auroc(&sub_scores, &sub_pos)?,
        auprc: auprc(&sub_scores, &sub_pos)?,
    })
}

/// Scores of the noisy and hard-clean samples only, with noisy as positive.
pub fn restrict(scores: &[f64], noisy: &[bool], hard_clean: &[bool]) -> (Vec<f64>, Vec<bool>) {
    scores
        .iter()
        .zip(noisy.iter().zip(hard_clean))
        .filter(|(_, (&n, &h))| n || h)
        .map(|(&s, (&n, _))| (s, n))
        .unzip()
}

/// Indices of the loss-matched diagnostic subset.
///
/// Losses of the noisy and hard-clean samples are split at their deciles;
/// a decile bin is kept when it holds at least one sample of each group,
/// and every noisy or hard-clean sample in a kept bin is returned.
pub fn matched_difficulty_subset(
    losses: &[f64],
    noisy: &[bool],
    hard_clean: &[bool],
) -> Result<Vec<usize>> {
    check_lengths(losses, &[noisy, hard_clean])?;
    let members: Vec<usize> = (0..losses.len())
        .filter(|&i| noisy[i] || hard_clean[i])
        .collect();
    if members.is_empty() {
        return Err(RgcError::UndefinedMetric(
            "no noisy or hard-clean samples".into(),
        ));
    }
    let mut sorted: Vec<f64> = members.iter().map(|&i| losses[i]).collect();
    sorted.sort_by(f64::total_cmp);
    let edges: Vec<f64> = (1..10)
        .map(|d| quantile_sorted(&sorted, d as f64 / 10.0))
        .collect();
    let bin = |l: f64| edges.partition_point(|&e| e < l);
    let mut has = [[false; 2]; 10];
    for &i in &members {
        has[bin(losses[i])][usize::from(noisy[i])] = true;
    }
    Ok(members
        .into_iter()
        .filter(|&i| {
            let b = bin(losses[i]);
            has[b][0] && has[b][1]
        })
        .collect())
}
