//! Two-phase training: observed-label warm-up, then trust-weighted
//! fine-tuning against an EMA teacher.
//!
//! Each fine-tuning epoch first scores every sample against a frozen
//! (student, teacher) snapshot, standardizes the radial and conflict signals
//! over the whole epoch, smooths them per sample and turns them into trust
//! weights. The optimization pass then runs mini-batch SGD on
//! `w * CE(p, ỹ) + lambda * (1 - w) * CE(p, q)` with those frozen weights and
//! snapshot targets, updating the teacher after every step.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{self, DatasetConfig, NoiseSpec, Sample};
use crate::error::{Result, RgcError};
use crate::metrics::{self, DetectionReport, ThresholdPoint};
use crate::model::{self, Architecture, ForwardRecord, ModelParams, TeacherState};
use crate::numerics::{self, ProbVector};
use crate::reliability::{self, ReliabilityRecord, SampleGeometry, ScoreStore};
use crate::seed::{self, SeedStreams};

/// Which reliability components drive the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Observed-label cross-entropy only (`w = 1`, no reference term).
    PlainCe,
    /// Trust weights from the radial score alone (`beta = 1`), no reference term.
    Trace,
    /// `w = 1` plus a fixed-weight reference term `0.5 * lambda * CE(p, q)`.
    Teacher,
    /// Trust weights from the radial score alone, with the gated reference term.
    TraceTeacher,
    /// Radial and conflict fusion with the gated reference term.
    Rgc,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::PlainCe,
        Variant::Trace,
        Variant::Teacher,
        Variant::TraceTeacher,
        Variant::Rgc,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::PlainCe => "plain_ce",
            Variant::Trace => "trace",
            Variant::Teacher => "teacher",
            Variant::TraceTeacher => "trace_teacher",
            Variant::Rgc => "rgc",
        }
    }

    /// Fusion weight and loss weighting this variant uses under `cfg`.
    pub fn objective(&self, cfg: &TrainerConfig) -> Objective {
        match self {
            Variant::PlainCe => Objective {
                beta: cfg.beta,
                weighting: Weighting::Fixed {
                    observed: 1.0,
                    reference: 0.0,
                },
            },
            Variant::Trace => Objective {
                beta: 1.0,
                weighting: Weighting::Trust { lambda: 0.0 },
            },
            Variant::Teacher => Objective {
                beta: cfg.beta,
                weighting: Weighting::Fixed {
                    observed: 1.0,
                    reference: 0.5 * cfg.lambda,
                },
            },
            Variant::TraceTeacher => Objective {
                beta: 1.0,
                weighting: Weighting::Trust { lambda: cfg.lambda },
            },
            Variant::Rgc => Objective {
                beta: cfg.beta,
                weighting: Weighting::Trust { lambda: cfg.lambda },
            },
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = RgcError;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| RgcError::config("variant", format!("unknown variant `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weighting {
    /// Observed weight `w_i`, reference weight `lambda * (1 - w_i)`.
    Trust {
        lambda: f64,
    },
    Fixed {
        observed: f64,
        reference: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub beta: f64,
    pub weighting: Weighting,
}

impl Objective {
    /// `(observed, reference)` loss weights for a sample with trust `w`.
    pub fn loss_weights(&self, w: f64) -> (f64, f64) {
        match self.weighting {
            Weighting::Trust { lambda } => (w, lambda * (1.0 - w)),
            Weighting::Fixed {
                observed,
                reference,
            } => (observed, reference),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainerConfig {
    pub warmup_epochs: usize,
    pub total_epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub hidden: Vec<usize>,
    /// EMA momentum `m`.
    pub momentum: f64,
    /// Sharpening temperature `T`.
    pub temperature: f64,
    /// Score smoothing `mu`.
    pub mu: f64,
    /// Trust sharpness `alpha`.
    pub alpha: f64,
    /// Radial/angular fusion `beta`.
    pub beta: f64,
    /// Reference-loss weight `lambda`.
    pub lambda: f64,
    pub eps: f64,
    pub hard_clean_fraction: f64,
    pub variant: Variant,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            warmup_epochs: 5,
            total_epochs: 35,
            lr: 0.05,
            batch_size: 32,
            hidden: vec![32, 32],
            momentum: 0.999,
            temperature: 0.7,
            mu: 0.9,
            alpha: 0.6,
            beta: 0.2,
            lambda: 1.0,
            eps: reliability::DEFAULT_EPS,
            hard_clean_fraction: 0.2,
            variant: Variant::Rgc,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        let field = |name: &str| format!("trainer.{name}");
        if self.total_epochs < self.warmup_epochs {
            return Err(RgcError::config(
                field("total_epochs"),
                format!("must be at least warmup_epochs ({})", self.warmup_epochs),
            ));
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(RgcError::config(
                field("lr"),
                format!("must be positive, got {}", self.lr),
            ));
        }
        if self.batch_size == 0 {
            return Err(RgcError::config(field("batch_size"), "must be at least 1"));
        }
        if self.hidden.contains(&0) {
            return Err(RgcError::config(
                field("hidden"),
                "layer widths must be positive",
            ));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(RgcError::config(
                field("momentum"),
                format!("must be in [0, 1), got {}", self.momentum),
            ));
        }
        if !(self.temperature > 0.0) {
            return Err(RgcError::config(
                field("temperature"),
                format!("must be > 0, got {}", self.temperature),
            ));
        }
        if !(0.0..1.0).contains(&self.mu) {
            return Err(RgcError::config(
                field("mu"),
                format!("must be in [0, 1), got {}", self.mu),
            ));
        }
        if !(self.alpha > 0.0) {
            return Err(RgcError::config(
                field("alpha"),
                format!("must be > 0, got {}", self.alpha),
            ));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(RgcError::config(
                field("beta"),
                format!("must be in [0, 1], got {}", self.beta),
            ));
        }
        if !(self.lambda >= 0.0) {
            return Err(RgcError::config(
                field("lambda"),
                format!("must be >= 0, got {}", self.lambda),
            ));
        }
        if !(self.eps > 0.0) {
            return Err(RgcError::config(
                field("eps"),
                format!("must be > 0, got {}", self.eps),
            ));
        }
        if !(self.hard_clean_fraction > 0.0 && self.hard_clean_fraction < 1.0) {
            return Err(RgcError::config(
                field("hard_clean_fraction"),
                format!("must be in (0, 1), got {}", self.hard_clean_fraction),
            ));
        }
        Ok(())
    }

    pub fn architecture(&self, input_dim: usize, classes: usize) -> Architecture {
        Architecture {
            input_dim,
            hidden: self.hidden.clone(),
            classes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Warmup,
    Finetune,
}

/// One line of the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub phase: Phase,
    pub mean_loss: f64,
    pub mean_trust_clean: Option<f64>,
    pub mean_trust_noisy: Option<f64>,
    /// Fraction of samples whose sharpened teacher argmax equals the observed label.
    pub teacher_agreement: Option<f64>,
    pub n_clean: usize,
    pub n_noisy: usize,
    pub test_accuracy: Option<f64>,
}

fn diverged(epoch: usize, sample: Option<usize>, detail: impl std::fmt::Display) -> RgcError {
    match sample {
        Some(id) => RgcError::TrainingDiverged(format!("epoch {epoch}, sample {id}: {detail}")),
        None => RgcError::TrainingDiverged(format!("epoch {epoch}: {detail}")),
    }
}

fn forward_checked(params: &ModelParams, s: &Sample, epoch: usize) -> Result<ForwardRecord> {
    model::forward(params, &s.x).map_err(|e| match e {
        RgcError::InvalidInput(msg) if msg.contains("non-finite") => {
            diverged(epoch, Some(s.id), msg)
        }
        other => other,
    })
}

/// Gradient of `obs_w * CE(p, e_observed) + ref_w * CE(p, q)` for one sample.
///
/// Both cross-entropies have logit gradient `p - target`, so the combined
/// logit gradient is the weighted sum of the two residuals.
pub fn objective_grad(
    params: &ModelParams,
    fr: &ForwardRecord,
    observed: usize,
    q: Option<&ProbVector>,
    obs_w: f64,
    ref_w: f64,
) -> ModelParams {
    let p = fr.p.as_slice();
    let mut dlogits: Vec<f64> = p.iter().map(|pk| obs_w * pk).collect();
    dlogits[observed] -= obs_w;
    if let Some(q) = q.filter(|_| ref_w != 0.0) {
        for ((d, pk), qk) in dlogits.iter_mut().zip(p).zip(q.as_slice()) {
            *d += ref_w * (pk - qk);
        }
    }
    model::backward(params, fr, &dlogits)
}

pub fn objective_loss(
    p: &ProbVector,
    observed: usize,
    q: Option<&ProbVector>,
    obs_w: f64,
    ref_w: f64,
) -> f64 {
    let mut loss = obs_w * numerics::hard_cross_entropy(p, observed);
    if let Some(q) = q.filter(|_| ref_w != 0.0) {
        loss += ref_w * numerics::cross_entropy(p, q).expect("dimensions checked at construction");
    }
    loss
}

/// Per-sample loss weights and reference targets frozen for one optimization pass.
pub struct PassTargets<'a> {
    pub weights: &'a [(f64, f64)],
    pub targets: Option<&'a [ProbVector]>,
}

/// One pass of mini-batch SGD over `order`; the teacher, when present, is
/// EMA-updated after every step. Returns the mean per-sample objective.
pub fn optimize_pass(
    student: &mut ModelParams,
    mut teacher: Option<&mut TeacherState>,
    samples: &[Sample],
    targets: &PassTargets<'_>,
    order: &[usize],
    cfg: &TrainerConfig,
    epoch: usize,
) -> Result<f64> {
    let mut total = 0.0;
    for batch in order.chunks(cfg.batch_size) {
        let mut grad = student.zeros_like();
        let scale = 1.0 / batch.len() as f64;
        for &i in batch {
            let s = &samples[i];
            let fr = forward_checked(student, s, epoch)?;
            let (ow, rw) = targets.weights[i];
            let q = targets.targets.map(|t| &t[i]);
            let loss = objective_loss(&fr.p, s.observed_label, q, ow, rw);
            if !loss.is_finite() {
                return Err(diverged(epoch, Some(s.id), "non-finite loss"));
            }
            total += loss;
            grad.axpy(
                scale,
                &objective_grad(student, &fr, s.observed_label, q, ow, rw),
            );
        }
        model::sgd_step(student, &grad, cfg.lr).map_err(|e| match e {
            RgcError::TrainingDiverged(d) => diverged(epoch, None, d),
            other => other,
        })?;
        if let Some(t) = teacher.as_deref_mut() {
            t.ema_update(student)?;
        }
    }
    Ok(total / order.len().max(1) as f64)
}

/// Shuffled sample order for `epoch`, from the batch-order stream.
pub fn epoch_order(n: usize, streams: &SeedStreams, epoch: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut streams.rng_indexed(seed::BATCH_ORDER, epoch as u64));
    order
}

/// Observed-label cross-entropy of every sample under `params`.
pub fn per_sample_losses(params: &ModelParams, samples: &[Sample]) -> Result<Vec<f64>> {
    samples
        .par_iter()
        .map(|s| {
            model::forward(params, &s.x)
                .map(|fr| numerics::hard_cross_entropy(&fr.p, s.observed_label))
        })
        .collect()
}

/// Accuracy of `params` against clean labels.
pub fn accuracy(params: &ModelParams, samples: &[Sample]) -> Result<f64> {
    let hits = samples
        .par_iter()
        .map(|s| model::forward(params, &s.x).map(|fr| usize::from(fr.p.argmax() == s.clean_label)))
        .collect::<Result<Vec<usize>>>()?;
    Ok(hits.iter().sum::<usize>() as f64 / samples.len().max(1) as f64)
}

fn counts(samples: &[Sample]) -> (usize, usize) {
    let noisy = samples.iter().filter(|s| s.is_noisy).count();
    (samples.len() - noisy, noisy)
}

/// Warm-up on observed labels. Returns the per-sample losses of the warmed
/// model (used for hard-clean tagging) and one log per epoch.
pub fn warmup(
    student: &mut ModelParams,
    samples: &[Sample],
    test: &[Sample],
    cfg: &TrainerConfig,
    streams: &SeedStreams,
) -> Result<(Vec<f64>, Vec<EpochLog>)> {
    let weights = vec![(1.0, 0.0); samples.len()];
    let targets = PassTargets {
        weights: &weights,
        targets: None,
    };
    let (n_clean, n_noisy) = counts(samples);
    let mut logs = Vec::with_capacity(cfg.warmup_epochs);
    for epoch in 1..=cfg.warmup_epochs {
        let order = epoch_order(samples.len(), streams, epoch);
        let mean_loss = optimize_pass(student, None, samples, &targets, &order, cfg, epoch)?;
        logs.push(EpochLog {
            epoch,
            phase: Phase::Warmup,
            mean_loss,
            mean_trust_clean: None,
            mean_trust_noisy: None,
            teacher_agreement: None,
            n_clean,
            n_noisy,
            test_accuracy: if test.is_empty() {
                None
            } else {
                Some(accuracy(student, test)?)
            },
        });
    }
    let losses = per_sample_losses(student, samples)?;
    if let Some(i) = losses.iter().position(|l| !l.is_finite()) {
        return Err(diverged(
            cfg.warmup_epochs,
            Some(samples[i].id),
            "non-finite warm-up loss",
        ));
    }
    Ok((losses, logs))
}

/// Scores of every sample under one frozen (student, teacher) snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub targets: Vec<ProbVector>,
    pub geometry: Vec<SampleGeometry>,
    pub s_raw: Vec<f64>,
    pub s_smoothed: Vec<f64>,
    pub trust: Vec<f64>,
    pub teacher_agreement: f64,
}

/// Score pass: teacher targets, head geometry, standardized fusion,
/// smoothing into `store`, and trust weights.
pub fn score_snapshot(
    student: &ModelParams,
    teacher: &TeacherState,
    samples: &[Sample],
    store: &mut ScoreStore,
    objective: &Objective,
    cfg: &TrainerConfig,
    epoch: usize,
) -> Result<Snapshot> {
    let scored = samples
        .par_iter()
        .map(|s| {
            let fr = forward_checked(student, s, epoch)?;
            let q = teacher
                .target(&s.x)
                .map_err(|e| diverged(epoch, Some(s.id), format!("teacher: {e}")))?;
            let g = reliability::sample_geometry(&fr, s.observed_label, &q, cfg.eps)?;
            if !(g.tau_obs.is_finite() && g.tau_ref.is_finite() && g.conflict.conflict.is_finite())
            {
                return Err(diverged(
                    epoch,
                    Some(s.id),
                    "non-finite reliability geometry",
                ));
            }
            Ok((q, g))
        })
        .collect::<Result<Vec<(ProbVector, SampleGeometry)>>>()?;
    let (targets, geometry): (Vec<ProbVector>, Vec<SampleGeometry>) = scored.into_iter().unzip();
    let (r_hat, c_hat) = reliability::standardize_signals(&geometry)?;
    let s_raw = reliability::fuse_scores(&r_hat, &c_hat, objective.beta)?;
    let s_smoothed = store.update(&s_raw, cfg.mu)?;
    let trust = reliability::trust_weights(&s_smoothed, cfg.alpha)?;
    let agree = samples
        .iter()
        .zip(&targets)
        .filter(|(s, q)| q.argmax() == s.observed_label)
        .count();
    Ok(Snapshot {
        targets,
        geometry,
        s_raw,
        s_smoothed,
        trust,
        teacher_agreement: agree as f64 / samples.len() as f64,
    })
}

/// Mutable fine-tuning state carried across epochs.
#[derive(Debug, Clone)]
pub struct RgcState {
    pub student: ModelParams,
    pub teacher: TeacherState,
    pub store: ScoreStore,
}

#[derive(Debug, Clone)]
pub struct EpochOutcome {
    pub log: EpochLog,
    pub records: Vec<ReliabilityRecord>,
    pub snapshot: Snapshot,
}

/// One fine-tuning epoch with the batch order from the seed streams.
pub fn rgc_epoch(
    state: &mut RgcState,
    samples: &[Sample],
    test: &[Sample],
    cfg: &TrainerConfig,
    epoch: usize,
    streams: &SeedStreams,
) -> Result<EpochOutcome> {
    let order = epoch_order(samples.len(), streams, epoch);
    rgc_epoch_with_order(state, samples, test, cfg, epoch, &order)
}

pub fn rgc_epoch_with_order(
    state: &mut RgcState,
    samples: &[Sample],
    test: &[Sample],
    cfg: &TrainerConfig,
    epoch: usize,
    order: &[usize],
) -> Result<EpochOutcome> {
    if epoch <= cfg.warmup_epochs {
        return Err(RgcError::input(format!(
            "fine-tuning epoch {epoch} must follow the {} warm-up epochs",
            cfg.warmup_epochs
        )));
    }
    let objective = cfg.variant.objective(cfg);
    let snapshot = score_snapshot(
        &state.student,
        &state.teacher,
        samples,
        &mut state.store,
        &objective,
        cfg,
        epoch,
    )?;
    let weights: Vec<(f64, f64)> = snapshot
        .trust
        .iter()
        .map(|&w| objective.loss_weights(w))
        .collect();
    let targets = PassTargets {
        weights: &weights,
        targets: Some(&snapshot.targets),
    };
    let mean_loss = optimize_pass(
        &mut state.student,
        Some(&mut state.teacher),
        samples,
        &targets,
        order,
        cfg,
        epoch,
    )?;

    let mean_trust = |noisy: bool| {
        let v: Vec<f64> = samples
            .iter()
            .zip(&snapshot.trust)
            .filter(|(s, _)| s.is_noisy == noisy)
            .map(|(_, &w)| w)
            .collect();
        (!v.is_empty()).then(|| numerics::mean(&v))
    };
    let (n_clean, n_noisy) = counts(samples);
    let log = EpochLog {
        epoch,
        phase: Phase::Finetune,
        mean_loss,
        mean_trust_clean: mean_trust(false),
        mean_trust_noisy: mean_trust(true),
        teacher_agreement: Some(snapshot.teacher_agreement),
        n_clean,
        n_noisy,
        test_accuracy: if test.is_empty() {
            None
        } else {
            Some(accuracy(&state.student, test)?)
        },
    };
    let records = samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let g = &snapshot.geometry[i];
            ReliabilityRecord {
                sample_id: s.id,
                epoch,
                tau_obs: g.tau_obs,
                tau_ref: g.tau_ref,
                conflict: g.conflict.conflict,
                r_tau: g.r_tau,
                s_raw: snapshot.s_raw[i],
                s_smoothed: snapshot.s_smoothed[i],
                trust_w: snapshot.trust[i],
                is_noisy: s.is_noisy,
                is_hard_clean: s.is_hard_clean,
            }
        })
        .collect();
    Ok(EpochOutcome {
        log,
        records,
        snapshot,
    })
}

/// Everything one run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub dataset: DatasetConfig,
    pub noise: NoiseSpec,
    pub trainer: TrainerConfig,
    pub seed: u64,
}

/// Outcome of a full run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub variant: Variant,
    pub seed: u64,
    pub final_test_accuracy: f64,
    /// Detection at the median final-epoch fused score; absent without
    /// noisy or hard-clean samples.
    pub detection: Option<DetectionReport>,
    pub sweep: Vec<ThresholdPoint>,
    pub logs: Vec<EpochLog>,
    /// Reliability rows of every fine-tuning epoch, in epoch order.
    pub records: Vec<ReliabilityRecord>,
    /// Observed-label losses right after warm-up.
    pub warmup_losses: Vec<f64>,
    /// Training samples with noisy and hard-clean tags.
    pub samples: Vec<Sample>,
    pub student: ModelParams,
}

impl RunReport {
    pub fn epoch_records(&self, epoch: usize) -> Vec<ReliabilityRecord> {
        self.records
            .iter()
            .filter(|r| r.epoch == epoch)
            .copied()
            .collect()
    }

    pub fn final_epoch(&self) -> Option<usize> {
        self.records.last().map(|r| r.epoch)
    }
}

/// Detection report and threshold sweep for one epoch's records.
pub fn detection_for_records(
    records: &[ReliabilityRecord],
) -> Result<(Option<DetectionReport>, Vec<ThresholdPoint>)> {
    let scores: Vec<f64> = records.iter().map(|r| r.s_smoothed).collect();
    let noisy: Vec<bool> = records.iter().map(|r| r.is_noisy).collect();
    let hc: Vec<bool> = records.iter().map(|r| r.is_hard_clean).collect();
    if scores.is_empty() || !noisy.contains(&true) || !hc.contains(&true) {
        return Ok((None, Vec::new()));
    }
    let (diagnostic, _) = metrics::restrict(&scores, &noisy, &hc);
    let eta = metrics::quantile(&diagnostic, 0.5)?;
    Ok((
        Some(metrics::detection_report(&scores, &noisy, &hc, eta)?),
        metrics::threshold_sweep(&scores, &noisy, &hc)?,
    ))
}

/// Dataset, warm-up, hard-clean tagging, fine-tuning and final evaluation.
pub fn run_experiment(spec: &RunSpec) -> Result<RunReport> {
    let cfg = &spec.trainer;
    cfg.validate()?;
    let streams = SeedStreams::new(spec.seed);
    let (mut samples, test) = data::build_datasets(&spec.dataset, &spec.noise, &streams)?;
    let arch = cfg.architecture(spec.dataset.dim, spec.dataset.classes);
    let mut student = ModelParams::init(&arch, &mut streams.rng(seed::INIT))?;

    let (warmup_losses, mut logs) = warmup(&mut student, &samples, &test, cfg, &streams)?;
    data::tag_hard_clean(&mut samples, &warmup_losses, cfg.hard_clean_fraction)?;

    let mut state = RgcState {
        teacher: TeacherState::new(&student, cfg.momentum, cfg.temperature)?,
        student,
        store: ScoreStore::new(samples.len()),
    };
    let mut records = Vec::with_capacity(samples.len() * (cfg.total_epochs - cfg.warmup_epochs));
    for epoch in (cfg.warmup_epochs + 1)..=cfg.total_epochs {
        let out = rgc_epoch(&mut state, &samples, &test, cfg, epoch, &streams)?;
        logs.push(out.log);
        records.extend(out.records);
    }

    let final_records: Vec<ReliabilityRecord> = match records.last().map(|r| r.epoch) {
        Some(last) => records
            .iter()
            .filter(|r| r.epoch == last)
            .copied()
            .collect(),
        None => Vec::new(),
    };
    let (detection, sweep) = detection_for_records(&final_records)?;
    Ok(RunReport {
        variant: cfg.variant,
        seed: spec.seed,
        final_test_accuracy: accuracy(&state.student, &test)?,
        detection,
        sweep,
        logs,
        records,
        warmup_losses,
        samples,
        student: state.student,
    })
}
