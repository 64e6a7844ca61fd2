use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rgc_core::config::{self, ExperimentConfig, GridCell};
use rgc_core::{metrics, model, suite, RgcError};

/// Reliability-guided training experiments on synthetic noisy-label data.
#[derive(Parser)]
#[command(name = "rgc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the noisy training split and clean held-out split as CSV.
    Generate(ConfigArgs),
    /// Train one model and write its run artifacts.
    Train(ConfigArgs),
    /// Run every variant / sweep / seed combination of the config.
    Suite(ConfigArgs),
    /// Recompute detection metrics from a reliability dump.
    Audit(AuditArgs),
}

/// Config file plus overrides. Every flag maps onto a config key and wins
/// over the file value.
#[derive(Args)]
struct ConfigArgs {
    /// TOML experiment config; defaults apply when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Arbitrary `dotted.key=value` override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// `output_dir`
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// `seeds`, comma separated. `train` and `generate` use the first.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// `dataset.classes`
    #[arg(long)]
    classes: Option<usize>,
    /// `dataset.per_class`
    #[arg(long)]
    per_class: Option<usize>,
    /// `dataset.dim`
    #[arg(long)]
    dim: Option<usize>,
    /// `dataset.separation`
    #[arg(long)]
    separation: Option<f64>,
    /// `noise.kind`: symmetric, asymmetric or instance_dependent
    #[arg(long)]
    noise_kind: Option<String>,
    /// `noise.rate`
    #[arg(long)]
    noise_rate: Option<f64>,
    /// `trainer.variant`: plain_ce, trace, teacher, trace_teacher or rgc
    #[arg(long)]
    variant: Option<String>,
    /// `trainer.warmup_epochs`
    #[arg(long)]
    warmup_epochs: Option<usize>,
    /// `trainer.total_epochs`
    #[arg(long)]
    total_epochs: Option<usize>,
    /// `trainer.lr`
    #[arg(long)]
    lr: Option<f64>,
    /// `trainer.batch_size`
    #[arg(long)]
    batch_size: Option<usize>,
    /// `trainer.hidden`, comma separated widths
    #[arg(long, value_delimiter = ',')]
    hidden: Vec<usize>,
    /// `trainer.momentum`
    #[arg(long)]
    momentum: Option<f64>,
    /// `trainer.temperature`
    #[arg(long)]
    temperature: Option<f64>,
    /// `trainer.mu`
    #[arg(long)]
    mu: Option<f64>,
    /// `trainer.alpha`
    #[arg(long)]
    alpha: Option<f64>,
    /// `trainer.beta`
    #[arg(long)]
    beta: Option<f64>,
    /// `trainer.lambda`
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args)]
struct AuditArgs {
    /// `reliability.csv` written by `train` or `suite`.
    reliability: PathBuf,
    /// Epoch to audit; the last one in the file by default.
    #[arg(long)]
    epoch: Option<usize>,
    /// Also write the threshold sweep here.
    #[arg(long)]
    sweep_out: Option<PathBuf>,
}

fn list<T: ToString>(v: &[T]) -> String {
    format!(
        "[{}]",
        v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
    )
}

impl ConfigArgs {
    fn overrides(&self) -> Result<Vec<(String, String)>, RgcError> {
        let mut out = self
            .set
            .iter()
            .map(|s| config::split_override(s))
            .collect::<Result<Vec<_>, _>>()?;
        let mut push = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                out.push((key.to_string(), v));
            }
        };
        let s = |v: &Option<String>| v.as_ref().map(|x| format!("{x:?}"));
        push(
            "output_dir",
            self.output_dir
                .as_ref()
                .map(|p| format!("{:?}", p.display().to_string())),
        );
        push("seeds", (!self.seeds.is_empty()).then(|| list(&self.seeds)));
        push("dataset.classes", self.classes.map(|v| v.to_string()));
        push("dataset.per_class", self.per_class.map(|v| v.to_string()));
        push("dataset.dim", self.dim.map(|v| v.to_string()));
        push("dataset.separation", self.separation.map(float));
        push("noise.kind", s(&self.noise_kind));
        push("noise.rate", self.noise_rate.map(float));
        push("trainer.variant", s(&self.variant));
        push(
            "trainer.warmup_epochs",
            self.warmup_epochs.map(|v| v.to_string()),
        );
        push(
            "trainer.total_epochs",
            self.total_epochs.map(|v| v.to_string()),
        );
        push("trainer.lr", self.lr.map(float));
        push("trainer.batch_size", self.batch_size.map(|v| v.to_string()));
        push(
            "trainer.hidden",
            (!self.hidden.is_empty()).then(|| list(&self.hidden)),
        );
        push("trainer.momentum", self.momentum.map(float));
        push("trainer.temperature", self.temperature.map(float));
        push("trainer.mu", self.mu.map(float));
        push("trainer.alpha", self.alpha.map(float));
        push("trainer.beta", self.beta.map(float));
        push("trainer.lambda", self.lambda.map(float));
        Ok(out)
    }

    fn load(&self) -> Result<ExperimentConfig, RgcError> {
        let overrides = self.overrides()?;
        match &self.config {
            Some(path) => config::parse_config(path, &overrides),
            None => config::parse_config_str("", &overrides),
        }
    }
}

/// TOML float literal; integers need a trailing `.0` to parse as floats.
fn float(v: f64) -> String {
    let s = v.to_string();
    if s.contains(['.', 'e', 'E']) || !v.is_finite() {
        s
    } else {
        format!("{s}.0")
    }
}

fn generate(args: &ConfigArgs) -> Result<ExitCode, RgcError> {
    let cfg = args.load()?;
    let seed = cfg.seeds[0];
    let (train, test) = suite::generate(&cfg, seed, &cfg.output_dir)?;
    let noisy = train.iter().filter(|s| s.is_noisy).count();
    println!(
        "wrote {} training samples ({noisy} noisy) and {} held-out samples to {}",
        train.len(),
        test.len(),
        cfg.output_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn train(args: &ConfigArgs) -> Result<ExitCode, RgcError> {
    let cfg = args.load()?;
    let cell = GridCell {
        variant: cfg.trainer.variant,
        beta: cfg.trainer.beta,
        alpha: cfg.trainer.alpha,
    };
    let (report, row) = suite::train_run(&cfg, &cell, cfg.seeds[0], &cfg.output_dir)?;
    model::Checkpoint::from_params(&report.student).save(&cfg.output_dir.join("model.json"))?;
    println!("{}", suite::RUN_SUMMARY_HEADER);
    println!("{}", row.to_csv_row());
    Ok(ExitCode::SUCCESS)
}

fn run_suite(args: &ConfigArgs) -> Result<ExitCode, RgcError> {
    let cfg = args.load()?;
    let outcome = suite::run_suite(&cfg)?;
    println!("{}", suite::SUITE_SUMMARY_HEADER);
    for row in &outcome.aggregate {
        println!("{}", row.to_csv_row());
    }
    if outcome.succeeded() {
        return Ok(ExitCode::SUCCESS);
    }
    for f in &outcome.failures {
        eprintln!("run {} failed: {}", f.dir.display(), f.error);
    }
    let diverged = outcome
        .failures
        .iter()
        .any(|f| matches!(f.error, RgcError::TrainingDiverged(_)));
    Ok(ExitCode::from(if diverged { 3 } else { 1 }))
}

fn audit(args: &AuditArgs) -> Result<ExitCode, RgcError> {
    let result = suite::audit_file(&args.reliability, args.epoch)?;
    let d = &result.detection;
    println!("epoch,threshold,noisy_recall,hc_fp,hcpr,auroc,auprc");
    println!(
        "{},{},{},{},{},{},{}",
        result.epoch, d.threshold, d.noisy_recall, d.hc_fp, d.hcpr, d.auroc, d.auprc
    );
    if let Some(path) = &args.sweep_out {
        metrics::write_sweep_csv(std::fs::File::create(path)?, &result.sweep)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_code(err: &RgcError) -> u8 {
    match err {
        RgcError::InvalidConfig { .. } | RgcError::Parse { .. } => 2,
        RgcError::TrainingDiverged(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train(a),
        Command::Suite(a) => run_suite(a),
        Command::Audit(a) => audit(a),
    };
    result.unwrap_or_else(|err| {
        eprintln!("error: {err}");
        ExitCode::from(exit_code(&err))
    })
}
