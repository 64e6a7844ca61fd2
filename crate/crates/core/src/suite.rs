//! Run orchestration and artifact files.
//!
//! Every run directory holds `run_log.jsonl` (one [`EpochLog`] per line),
//! `reliability.csv` (one row per sample per fine-tuning epoch),
//! `threshold_sweep.csv` (final epoch) and `summary.csv` (one row).
//! A suite additionally writes `summary.csv` at its root with means over seeds
//! and `config.toml` with the resolved configuration.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{ExperimentConfig, GridCell};
use crate::data::{self, Sample};
use crate::error::{Result, RgcError};
use crate::metrics::{self, DetectionReport, ThresholdPoint};
use crate::reliability::{self, ReliabilityRecord};
use crate::seed::SeedStreams;
use crate::trainer::{self, EpochLog, RunReport, Variant};

pub const RUN_LOG: &str = "run_log.jsonl";
pub const RELIABILITY_CSV: &str = "reliability.csv";
pub const SWEEP_CSV: &str = "threshold_sweep.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const ERROR_TXT: &str = "error.txt";

pub const RUN_SUMMARY_HEADER: &str = "variant,beta,alpha,seed,final_accuracy,auroc,hcpr";
pub const SUITE_SUMMARY_HEADER: &str =
    "variant,beta,alpha,n_seeds,mean_accuracy,mean_auroc,mean_hcpr";

/// Summary of one finished run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub variant: Variant,
    pub beta: f64,
    pub alpha: f64,
    pub seed: u64,
    pub final_accuracy: f64,
    /// NaN when the run had no noisy or no hard-clean samples.
    pub auroc: f64,
    pub hcpr: f64,
}

impl SummaryRow {
    pub fn from_report(report: &RunReport, beta: f64, alpha: f64) -> Self {
        Self {
            variant: report.variant,
            beta,
            alpha,
            seed: report.seed,
            final_accuracy: report.final_test_accuracy,
            auroc: report.detection.map_or(f64::NAN, |d| d.auroc),
            hcpr: report.detection.map_or(f64::NAN, |d| d.hcpr),
        }
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.variant,
            self.beta,
            self.alpha,
            self.seed,
            self.final_accuracy,
            self.auroc,
            self.hcpr
        )
    }

    pub fn from_csv_row(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 7 {
            return Err(RgcError::parse(
                "summary row",
                format!("expected 7 fields, got {}", f.len()),
            ));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| RgcError::parse("summary row", e))
        };
        Ok(Self {
            variant: f[0].parse()?,
            beta: num(f[1])?,
            alpha: num(f[2])?,
            seed: f[3]
                .parse()
                .map_err(|e| RgcError::parse("summary row", e))?,
            final_accuracy: num(f[4])?,
            auroc: num(f[5])?,
            hcpr: num(f[6])?,
        })
    }
}

/// Mean of one grid cell over its seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateRow {
    pub variant: Variant,
    pub beta: f64,
    pub alpha: f64,
    pub n_seeds: usize,
    pub mean_accuracy: f64,
    pub mean_auroc: f64,
    pub mean_hcpr: f64,
}

impl AggregateRow {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.variant,
            self.beta,
            self.alpha,
            self.n_seeds,
            self.mean_accuracy,
            self.mean_auroc,
            self.mean_hcpr
        )
    }
}

pub fn aggregate(rows: &[SummaryRow]) -> Vec<AggregateRow> {
    let mut out: Vec<AggregateRow> = Vec::new();
    for r in rows {
        let pos = out
            .iter()
            .position(|a| a.variant == r.variant && a.beta == r.beta && a.alpha == r.alpha);
        let acc = match pos {
            Some(i) => &mut out[i],
            None => {
                out.push(AggregateRow {
                    variant: r.variant,
                    beta: r.beta,
                    alpha: r.alpha,
                    n_seeds: 0,
                    mean_accuracy: 0.0,
                    mean_auroc: 0.0,
                    mean_hcpr: 0.0,
                });
                out.last_mut().expect("just pushed")
            }
        };
        acc.n_seeds += 1;
        acc.mean_accuracy += r.final_accuracy;
        acc.mean_auroc += r.auroc;
        acc.mean_hcpr += r.hcpr;
    }
    for a in &mut out {
        let n = a.n_seeds as f64;
        a.mean_accuracy /= n;
        a.mean_auroc /= n;
        a.mean_hcpr /= n;
    }
    out
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_run_log<W: Write>(mut out: W, logs: &[EpochLog]) -> Result<()> {
    for log in logs {
        serde_json::to_writer(&mut out, log).map_err(|e| RgcError::parse("run log", e))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_run_log(text: &str) -> Result<Vec<EpochLog>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| RgcError::parse(format!("run log line {}", i + 1), e))
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(mut out: W, rows: &[SummaryRow]) -> Result<()> {
    writeln!(out, "{RUN_SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.to_csv_row())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_summary_csv(text: &str) -> Result<Vec<SummaryRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == RUN_SUMMARY_HEADER => {}
        other => {
            return Err(RgcError::parse(
                "summary csv",
                format!("unexpected header {other:?}"),
            ))
        }
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(SummaryRow::from_csv_row)
        .collect()
}

pub fn write_aggregate_csv<W: Write>(mut out: W, rows: &[AggregateRow]) -> Result<()> {
    writeln!(out, "{SUITE_SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.to_csv_row())?;
    }
    out.flush()?;
    Ok(())
}

/// Writes the four per-run artifacts into `dir`, creating it if needed.
pub fn write_run_artifacts(dir: &Path, report: &RunReport, row: &SummaryRow) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_run_log(create(&dir.join(RUN_LOG))?, &report.logs)?;
    reliability::write_reliability_csv(create(&dir.join(RELIABILITY_CSV))?, &report.records)?;
    metrics::write_sweep_csv(create(&dir.join(SWEEP_CSV))?, &report.sweep)?;
    write_summary_csv(create(&dir.join(SUMMARY_CSV))?, std::slice::from_ref(row))?;
    Ok(())
}

/// Single run of `cell` with `seed`, artifacts written to `dir`.
pub fn train_run(
    cfg: &ExperimentConfig,
    cell: &GridCell,
    seed: u64,
    dir: &Path,
) -> Result<(RunReport, SummaryRow)> {
    let report = trainer::run_experiment(&cfg.run_spec(cell, seed))?;
    let row = SummaryRow::from_report(&report, cell.beta, cell.alpha);
    write_run_artifacts(dir, &report, &row)?;
    Ok((report, row))
}

#[derive(Debug)]
pub struct RunFailure {
    pub dir: PathBuf,
    pub error: RgcError,
}

#[derive(Debug)]
pub struct SuiteOutcome {
    pub rows: Vec<SummaryRow>,
    pub aggregate: Vec<AggregateRow>,
    pub failures: Vec<RunFailure>,
}

impl SuiteOutcome {
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Directory of one (cell, seed) run inside the suite output directory.
pub fn run_dir(cfg: &ExperimentConfig, cell: &GridCell, seed: u64) -> PathBuf {
    let label = cell.label(
        !cfg.ablation.beta_sweep.is_empty(),
        !cfg.ablation.alpha_sweep.is_empty(),
    );
    cfg.output_dir.join(label).join(format!("seed_{seed}"))
}

/// Runs every (cell, seed) pair, in parallel, and writes all artifacts.
///
/// A failed run leaves `error.txt` in its directory and is reported in the
/// outcome; the remaining runs still complete and are aggregated.
pub fn run_suite(cfg: &ExperimentConfig) -> Result<SuiteOutcome> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(cfg.output_dir.join("config.toml"), cfg.to_toml()?)?;

    let jobs: Vec<(GridCell, u64)> = cfg
        .grid()
        .into_iter()
        .flat_map(|cell| cfg.seeds.iter().map(move |&s| (cell, s)))
        .collect();
    let results: Vec<(PathBuf, Result<SummaryRow>)> = jobs
        .par_iter()
        .map(|(cell, seed)| {
            let dir = run_dir(cfg, cell, *seed);
            let res = train_run(cfg, cell, *seed, &dir).map(|(_, row)| row);
            (dir, res)
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (dir, res) in results {
        match res {
            Ok(row) => rows.push(row),
            Err(error) => {
                fs::create_dir_all(&dir)?;
                fs::write(dir.join(ERROR_TXT), format!("{error}\n"))?;
                failures.push(RunFailure { dir, error });
            }
        }
    }
    let aggregate = aggregate(&rows);
    write_aggregate_csv(create(&cfg.output_dir.join(SUMMARY_CSV))?, &aggregate)?;
    Ok(SuiteOutcome {
        rows,
        aggregate,
        failures,
    })
}

/// Writes the training and held-out splits as `train.csv` and `test.csv`.
pub fn generate(
    cfg: &ExperimentConfig,
    seed: u64,
    dir: &Path,
) -> Result<(Vec<Sample>, Vec<Sample>)> {
    let (train, test) = data::build_datasets(&cfg.dataset, &cfg.noise, &SeedStreams::new(seed))?;
    fs::create_dir_all(dir)?;
    data::write_dataset_csv(create(&dir.join("train.csv"))?, &train)?;
    data::write_dataset_csv(create(&dir.join("test.csv"))?, &test)?;
    Ok((train, test))
}

#[derive(Debug, Clone)]
pub struct AuditResult {
    pub epoch: usize,
    pub detection: DetectionReport,
    pub sweep: Vec<ThresholdPoint>,
}

/// Recomputes detection metrics for one epoch of a reliability dump; the
/// last epoch present when `epoch` is `None`.
pub fn audit_records(records: &[ReliabilityRecord], epoch: Option<usize>) -> Result<AuditResult> {
    let epoch = match epoch {
        Some(e) => e,
        None => records
            .iter()
            .map(|r| r.epoch)
            .max()
            .ok_or_else(|| RgcError::input("reliability dump has no rows"))?,
    };
    let rows: Vec<ReliabilityRecord> = records
        .iter()
        .filter(|r| r.epoch == epoch)
        .copied()
        .collect();
    if rows.is_empty() {
        return Err(RgcError::input(format!(
            "reliability dump has no rows for epoch {epoch}"
        )));
    }
    match trainer::detection_for_records(&rows)? {
        (Some(detection), sweep) => Ok(AuditResult {
            epoch,
            detection,
            sweep,
        }),
        (None, _) => Err(RgcError::UndefinedMetric(format!(
            "epoch {epoch} has no noisy or no hard-clean samples"
        ))),
    }
}

pub fn audit_file(path: &Path, epoch: Option<usize>) -> Result<AuditResult> {
    let text = fs::read_to_string(path)?;
    audit_records(&reliability::read_reliability_csv(&text)?, epoch)
}
