//! Reliability-guided training under label noise.
//!
//! A small MLP is warmed up on observed labels, then fine-tuned while every
//! sample is scored by the geometry of its classifier-head gradients: the
//! log-ratio of observed-label to teacher-reference gradient energy (radial)
//! and one minus their cosine (angular conflict). The fused, standardized and
//! smoothed score becomes a trust weight that moves supervision from the
//! observed label to a sharpened EMA-teacher target.
//!
//! Modules:
//! - [`numerics`]: probability vectors, dense matrices, softmax/sharpen/zscore.
//! - [`model`]: the MLP, closed-form and backpropagated gradients, EMA teacher.
//! - [`reliability`]: traces, conflict, score fusion, smoothing, trust weights.
//! - [`data`]: Gaussian-mixture data, label noise, hard-clean tagging.
//! - [`trainer`]: warm-up and trust-weighted fine-tuning.
//! - [`metrics`]: NoisyRec, HC-FP, HCPR, AUROC, AUPRC and threshold sweeps.
//! - [`config`] and [`suite`]: experiment configuration and artifact files.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod data;
pub mod error;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod reliability;
pub mod seed;
pub mod suite;
pub mod trainer;

pub use config::{parse_config, parse_config_str, AblationConfig, ExperimentConfig};
pub use data::{DatasetConfig, NoiseKind, NoiseSpec, Sample};
pub use error::{Result, RgcError};
pub use metrics::{DetectionReport, ThresholdPoint};
pub use model::{Architecture, Checkpoint, ForwardRecord, ModelParams, TeacherState};
pub use numerics::{Matrix, ProbVector};
pub use reliability::{ConflictRecord, ReliabilityRecord, ScoreStore, TraceRecord};
pub use seed::SeedStreams;
pub use trainer::{EpochLog, RunReport, RunSpec, TrainerConfig, Variant};
