//! Experiment configuration: a TOML document with `dataset`, `noise`,
//! `trainer` and `ablation` tables plus top-level `output_dir` and `seeds`.
//!
//! Every key is optional; missing keys take their defaults. Unknown keys are
//! rejected. Overrides use dotted keys (`trainer.beta=0.5`) and are applied
//! to the document before it is deserialized, so they go through exactly the
//! same validation as file values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{DatasetConfig, NoiseSpec};
use crate::error::{Result, RgcError};
use crate::trainer::{RunSpec, TrainerConfig, Variant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationConfig {
    pub variants: Vec<Variant>,
    /// Fusion weights to sweep; empty means the trainer value only.
    pub beta_sweep: Vec<f64>,
    /// Trust sharpness values to sweep; empty means the trainer value only.
    pub alpha_sweep: Vec<f64>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            variants: vec![Variant::Rgc],
            beta_sweep: Vec::new(),
            alpha_sweep: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    pub seeds: Vec<u64>,
    pub dataset: DatasetConfig,
    pub noise: NoiseSpec,
    pub trainer: TrainerConfig,
    pub ablation: AblationConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("runs"),
            seeds: vec![0],
            dataset: DatasetConfig::default(),
            noise: NoiseSpec::default(),
            trainer: TrainerConfig::default(),
            ablation: AblationConfig::default(),
        }
    }
}

/// One cell of the ablation grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub variant: Variant,
    pub beta: f64,
    pub alpha: f64,
}

impl GridCell {
    /// Directory name, unique within a grid.
    pub fn label(&self, sweeps_beta: bool, sweeps_alpha: bool) -> String {
        let mut label = self.variant.name().to_string();
        if sweeps_beta {
            label.push_str(&format!("_beta{}", self.beta));
        }
        if sweeps_alpha {
            label.push_str(&format!("_alpha{}", self.alpha));
        }
        label
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        self.noise.validate(self.dataset.classes)?;
        self.trainer.validate()?;
        if self.seeds.is_empty() {
            return Err(RgcError::config("seeds", "must list at least one seed"));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
            return Err(RgcError::config(
                "seeds",
                format!("seed {} listed twice", w[0]),
            ));
        }
        if self.ablation.variants.is_empty() {
            return Err(RgcError::config(
                "ablation.variants",
                "must list at least one variant",
            ));
        }
        for (i, v) in self.ablation.variants.iter().enumerate() {
            if self.ablation.variants[..i].contains(v) {
                return Err(RgcError::config(
                    "ablation.variants",
                    format!("variant `{v}` listed twice"),
                ));
            }
        }
        for &beta in &self.ablation.beta_sweep {
            if !(0.0..=1.0).contains(&beta) {
                return Err(RgcError::config(
                    "ablation.beta_sweep",
                    format!("values must be in [0, 1], got {beta}"),
                ));
            }
        }
        for &alpha in &self.ablation.alpha_sweep {
            if !(alpha > 0.0) || !alpha.is_finite() {
                return Err(RgcError::config(
                    "ablation.alpha_sweep",
                    format!("values must be > 0, got {alpha}"),
                ));
            }
        }
        Ok(())
    }

    /// Variants crossed with the beta and alpha sweeps, in config order.
    pub fn grid(&self) -> Vec<GridCell> {
        let betas = if self.ablation.beta_sweep.is_empty() {
            vec![self.trainer.beta]
        } else {
            self.ablation.beta_sweep.clone()
        };
        let alphas = if self.ablation.alpha_sweep.is_empty() {
            vec![self.trainer.alpha]
        } else {
            self.ablation.alpha_sweep.clone()
        };
        let mut cells = Vec::new();
        for &variant in &self.ablation.variants {
            for &beta in &betas {
                for &alpha in &alphas {
                    cells.push(GridCell {
                        variant,
                        beta,
                        alpha,
                    });
                }
            }
        }
        cells
    }

    pub fn run_spec(&self, cell: &GridCell, seed: u64) -> RunSpec {
        RunSpec {
            dataset: self.dataset.clone(),
            noise: self.noise.clone(),
            trainer: TrainerConfig {
                variant: cell.variant,
                beta: cell.beta,
                alpha: cell.alpha,
                ..self.trainer.clone()
            },
            seed,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| RgcError::parse("config serialization", e))
    }
}

/// Parses an override value as a TOML literal, falling back to a bare string
/// so that `noise.kind=symmetric` works without quotes.
fn override_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn apply_override(doc: &mut toml::Table, key: &str, raw: &str) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(RgcError::config(key, "is not a valid key"));
    }
    let (last, tables) = parts.split_last().expect("split yields at least one part");
    let mut cur = doc;
    for part in tables {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(RgcError::config(key, format!("`{part}` is not a table"))),
        };
    }
    cur.insert(last.to_string(), override_value(raw));
    Ok(())
}

/// Parses and validates config text, applying `overrides` first.
pub fn parse_config_str(text: &str, overrides: &[(String, String)]) -> Result<ExperimentConfig> {
    let mut doc: toml::Table = text.parse().map_err(|e| RgcError::parse("config", e))?;
    for (key, value) in overrides {
        apply_override(&mut doc, key, value)?;
    }
    let cfg: ExperimentConfig = doc
        .try_into()
        .map_err(|e: toml::de::Error| RgcError::parse("config", e.message()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path, overrides: &[(String, String)]) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text, overrides).map_err(|e| match e {
        RgcError::Parse { detail, .. } => RgcError::parse(path.display().to_string(), detail),
        other => other,
    })
}

/// Splits a `key=value` override.
pub fn split_override(arg: &str) -> Result<(String, String)> {
    arg.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| RgcError::config(arg, "override must look like `key=value`"))
}
