//! Gradient-geometry reliability quantities computed at the classifier head.
//!
//! For a sample with features `h`, prediction `p`, observed label `ỹ` and a
//! teacher reference `q`, the two head gradients are
//! `g_obs = (p - e_ỹ) h^T` and `g_ref = (p - q) h^T`. Their squared norms are
//! the observed and reference traces; one minus their (stabilized) cosine is
//! the conflict. Radial and angular signals are standardized per epoch,
//! fused, smoothed per sample and mapped to a trust weight in `(0, 1)`.
//!
//! The module also carries numerical checkers for the closed-form identities
//! and sufficient conditions that justify the head-only surrogate.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RgcError};
use crate::model::{last_layer_grad, ForwardRecord, PerSampleGrad};
use crate::numerics::{norm_sq, sigmoid, zscore, Matrix, ProbVector};

/// Default `+eps` stabilizer for conflict, radial score and trust weights.
pub const DEFAULT_EPS: f64 = 1e-8;

/// Denominator floor for `kappa = eps_resid / tau_last`.
pub const KAPPA_FLOOR: f64 = 1e-12;

/// `|p - target|^2 |h|^2`, the squared Frobenius norm of the head gradient.
pub fn trace_last(p: &ProbVector, target: &ProbVector, h: &[f64]) -> f64 {
    norm_sq(&p.residual(target)) * norm_sq(h)
}

/// Head trace plus, in exact mode, the full trace and the encoder residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub tau_last: f64,
    pub tau_full: Option<f64>,
    pub epsilon_resid: Option<f64>,
    pub kappa: Option<f64>,
}

impl TraceRecord {
    pub fn last_only(tau_last: f64) -> Self {
        Self {
            tau_last,
            tau_full: None,
            epsilon_resid: None,
            kappa: None,
        }
    }
}

/// Full-model trace from an exact per-sample gradient.
///
/// `tau_full = |grad_W|^2 + |grad_psi|^2`, `epsilon_resid = |grad_psi|^2`,
/// and `kappa` is the tight ratio `epsilon_resid / max(tau_last, KAPPA_FLOOR)`.
pub fn trace_full(grad: &PerSampleGrad) -> TraceRecord {
    let tau_last = grad.grad_w.frobenius_sq();
    let resid = norm_sq(&grad.grad_psi);
    TraceRecord {
        tau_last,
        tau_full: Some(tau_last + resid),
        epsilon_resid: Some(resid),
        kappa: Some(resid / tau_last.max(KAPPA_FLOOR)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderingVerdict {
    Guaranteed,
    NotGuaranteed,
}

/// Sufficient condition for the head trace ordering to carry over to the
/// full trace: `tau_i^last > (1 + kappa_j) tau_j^last`.
pub fn prop1_ordering_check(i: &TraceRecord, j: &TraceRecord) -> Result<OrderingVerdict> {
    let kappa_j = j.kappa.ok_or_else(|| {
        RgcError::input("ordering check needs a kappa bound for the second sample")
    })?;
    if i.tau_last > (1.0 + kappa_j) * j.tau_last {
        Ok(OrderingVerdict::Guaranteed)
    } else {
        Ok(OrderingVerdict::NotGuaranteed)
    }
}

/// Angular comparison of the observed and reference head gradients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConflictRecord {
    /// `1 - <g_obs, g_ref> / (a b + eps)`
    pub conflict: f64,
    /// `a = |g_obs|_F`
    pub obs_norm: f64,
    /// `b = |g_ref|_F`
    pub ref_norm: f64,
    /// `a / b`, absent when `b = 0`.
    pub ratio: Option<f64>,
    /// Unstabilized `1 - cos`, present only when both norms are positive.
    pub raw_conflict: Option<f64>,
}

pub fn conflict(g_obs: &Matrix, g_ref: &Matrix, eps: f64) -> ConflictRecord {
    let inner = g_obs.inner(g_ref);
    let a = g_obs.frobenius();
    let b = g_ref.frobenius();
    let denom = a * b + eps;
    let cos = if denom > 0.0 { inner / denom } else { 0.0 };
    ConflictRecord {
        conflict: 1.0 - cos,
        obs_norm: a,
        ref_norm: b,
        ratio: (b > 0.0).then(|| a / b),
        raw_conflict: (a > 0.0 && b > 0.0).then(|| 1.0 - inner / (a * b)),
    }
}

/// Both sides of the discrepancy identity
/// `|g_obs - g_ref|^2 / b^2 = (r - 1)^2 + 2 r C°`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

pub fn discrepancy_decomposition_check(
    g_obs: &Matrix,
    g_ref: &Matrix,
) -> Result<DecompositionCheck> {
    let rec = conflict(g_obs, g_ref, 0.0);
    let (Some(r), Some(c)) = (rec.ratio, rec.raw_conflict) else {
        return Err(RgcError::DegenerateGeometry(
            "discrepancy decomposition needs both gradients non-zero".into(),
        ));
    };
    let b2 = rec.ref_norm * rec.ref_norm;
    let lhs = g_obs.sub(g_ref).frobenius_sq() / b2;
    let rhs = (r - 1.0) * (r - 1.0) + 2.0 * r * c;
    Ok(DecompositionCheck {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
    })
}

/// Head-gradient error caused by using `q` instead of the clean target `q*`,
/// against the Jacobian bound `|h| |q - q*|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityCheck {
    pub grad_gap: f64,
    pub bound: f64,
}

impl FidelityCheck {
    pub const SLACK: f64 = 1e-10;

    pub fn holds(&self) -> bool {
        self.grad_gap <= self.bound + Self::SLACK
    }
}

pub fn reference_fidelity_check(
    fr: &ForwardRecord,
    q: &ProbVector,
    q_star: &ProbVector,
) -> FidelityCheck {
    let gap = last_layer_grad(fr, q)
        .sub(&last_layer_grad(fr, q_star))
        .frobenius();
    let bound = norm_sq(fr.h()).sqrt() * norm_sq(&q.residual(q_star)).sqrt();
    FidelityCheck {
        grad_gap: gap,
        bound,
    }
}

/// `ln((tau_obs + eps) / (tau_ref + eps))`
pub fn radial_score(tau_obs: f64, tau_ref: f64, eps: f64) -> f64 {
    ((tau_obs + eps) / (tau_ref + eps)).ln()
}

/// `beta * R_hat + (1 - beta) * C_hat`, elementwise.
pub fn fuse_scores(r_hat: &[f64], c_hat: &[f64], beta: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(RgcError::config(
            "beta",
            format!("must be in [0, 1], got {beta}"),
        ));
    }
    if r_hat.len() != c_hat.len() {
        return Err(RgcError::input(
            "radial and conflict score vectors differ in length",
        ));
    }
    Ok(r_hat
        .iter()
        .zip(c_hat)
        .map(|(r, c)| beta * r + (1.0 - beta) * c)
        .collect())
}

/// The half-open interval `[0, m_C / (m_C + m_R))` of fusion weights that
/// keep a noisy sample above a hard-clean one given the two margins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaInterval {
    pub m_c: f64,
    pub m_r: f64,
    pub upper: f64,
}

impl BetaInterval {
    pub fn contains(&self, beta: f64) -> bool {
        (0.0..self.upper).contains(&beta)
    }

    /// Guaranteed lower bound `(1 - beta) m_C - beta m_R` on `s_n - s_h`.
    pub fn ordering_margin(&self, beta: f64) -> f64 {
        (1.0 - beta) * self.m_c - beta * self.m_r
    }
}

pub fn prop2_interval(m_c: f64, m_r: f64) -> Result<BetaInterval> {
    if !(m_c > 0.0) {
        return Err(RgcError::input(format!(
            "directional margin must be positive, got {m_c}"
        )));
    }
    if !(m_r >= 0.0) {
        return Err(RgcError::input(format!(
            "radial slack must be non-negative, got {m_r}"
        )));
    }
    Ok(BetaInterval {
        m_c,
        m_r,
        upper: m_c / (m_c + m_r),
    })
}

/// Per-sample EMA `mu * prev + (1 - mu) * s`; the first observation initializes.
pub fn smooth_score(prev: Option<f64>, s_raw: f64, mu: f64) -> f64 {
    match prev {
        None => s_raw,
        Some(prev) => mu * prev + (1.0 - mu) * s_raw,
    }
}

/// `sigmoid(-alpha * zscore(s_tilde))`.
pub fn trust_weights(s_tilde: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if !(alpha > 0.0) {
        return Err(RgcError::config(
            "alpha",
            format!("must be positive, got {alpha}"),
        ));
    }
    Ok(zscore(s_tilde)?
        .into_iter()
        .map(|z| sigmoid(-alpha * z))
        .collect())
}

/// Smoothed scores indexed by dense sample position, persisted across epochs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreStore {
    smoothed: Vec<Option<f64>>,
}

impl ScoreStore {
    pub fn new(n: usize) -> Self {
        Self {
            smoothed: vec![None; n],
        }
    }

    pub fn len(&self) -> usize {
        self.smoothed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.smoothed.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.smoothed[i]
    }

    /// Fold one epoch of raw scores in and return the smoothed values.
    pub fn update(&mut self, raw: &[f64], mu: f64) -> Result<Vec<f64>> {
        if raw.len() != self.smoothed.len() {
            return Err(RgcError::input("raw score count does not match the store"));
        }
        if !(0.0..1.0).contains(&mu) {
            return Err(RgcError::config(
                "mu",
                format!("must be in [0, 1), got {mu}"),
            ));
        }
        Ok(self
            .smoothed
            .iter_mut()
            .zip(raw)
            .map(|(slot, &s)| {
                let v = smooth_score(*slot, s, mu);
                *slot = Some(v);
                v
            })
            .collect())
    }
}

/// Head-level geometry of one sample under a frozen (student, teacher) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleGeometry {
    pub tau_obs: f64,
    pub tau_ref: f64,
    pub conflict: ConflictRecord,
    pub r_tau: f64,
}

pub fn sample_geometry(
    fr: &ForwardRecord,
    observed: usize,
    q: &ProbVector,
    eps: f64,
) -> Result<SampleGeometry> {
    let e = ProbVector::one_hot(fr.p.len(), observed)?;
    let g_obs = last_layer_grad(fr, &e);
    let g_ref = last_layer_grad(fr, q);
    let tau_obs = g_obs.frobenius_sq();
    let tau_ref = g_ref.frobenius_sq();
    Ok(SampleGeometry {
        tau_obs,
        tau_ref,
        conflict: conflict(&g_obs, &g_ref, eps),
        r_tau: radial_score(tau_obs, tau_ref, eps),
    })
}

/// Standardized radial and conflict signals for one epoch.
pub fn standardize_signals(geometry: &[SampleGeometry]) -> Result<(Vec<f64>, Vec<f64>)> {
    let r: Vec<f64> = geometry.iter().map(|g| g.r_tau).collect();
    let c: Vec<f64> = geometry.iter().map(|g| g.conflict.conflict).collect();
    Ok((zscore(&r)?, zscore(&c)?))
}

/// One row of the per-epoch reliability dump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityRecord {
    pub sample_id: usize,
    pub epoch: usize,
    pub tau_obs: f64,
    pub tau_ref: f64,
    pub conflict: f64,
    pub r_tau: f64,
    pub s_raw: f64,
    pub s_smoothed: f64,
    pub trust_w: f64,
    pub is_noisy: bool,
    pub is_hard_clean: bool,
}

pub const RELIABILITY_HEADER: &str =
    "sample_id,epoch,tau_obs,tau_ref,conflict,R_tau,s_raw,s_smoothed,trust_w,is_noisy,is_hard_clean";

impl ReliabilityRecord {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.sample_id,
            self.epoch,
            self.tau_obs,
            self.tau_ref,
            self.conflict,
            self.r_tau,
            self.s_raw,
            self.s_smoothed,
            self.trust_w,
            u8::from(self.is_noisy),
            u8::from(self.is_hard_clean),
        )
    }

    pub fn from_csv_row(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 11 {
            return Err(RgcError::parse(
                "reliability dump",
                format!("expected 11 fields, got {}", f.len()),
            ));
        }
        let num = |i: usize| {
            f[i].parse::<f64>()
                .map_err(|e| RgcError::parse("reliability dump", e))
        };
        let int = |i: usize| {
            f[i].parse::<usize>()
                .map_err(|e| RgcError::parse("reliability dump", e))
        };
        let flag = |i: usize| match f[i] {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(RgcError::parse(
                "reliability dump",
                format!("bad flag `{other}`"),
            )),
        };
        Ok(Self {
            sample_id: int(0)?,
            epoch: int(1)?,
            tau_obs: num(2)?,
            tau_ref: num(3)?,
            conflict: num(4)?,
            r_tau: num(5)?,
            s_raw: num(6)?,
            s_smoothed: num(7)?,
            trust_w: num(8)?,
            is_noisy: flag(9)?,
            is_hard_clean: flag(10)?,
        })
    }
}

pub fn write_reliability_csv<W: std::io::Write>(
    mut out: W,
    rows: &[ReliabilityRecord],
) -> Result<()> {
    writeln!(out, "{RELIABILITY_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.to_csv_row())?;
    }
    Ok(())
}

pub fn read_reliability_csv(text: &str) -> Result<Vec<ReliabilityRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == RELIABILITY_HEADER => {}
        _ => {
            return Err(RgcError::parse(
                "reliability dump",
                "missing or unexpected header",
            ))
        }
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(ReliabilityRecord::from_csv_row)
        .collect()
}
