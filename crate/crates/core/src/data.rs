//! Synthetic Gaussian-mixture data, label corruption, and the noisy /
//! hard-clean ground-truth tags used by the diagnostics.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, RgcError};
use crate::seed::{self, SeedStreams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: usize,
    pub x: Vec<f64>,
    /// Latent clean label `y`.
    pub clean_label: usize,
    /// Observed, possibly corrupted label `ỹ`.
    pub observed_label: usize,
    pub is_noisy: bool,
    pub is_hard_clean: bool,
}

impl Sample {
    pub fn clean(id: usize, x: Vec<f64>, label: usize) -> Self {
        Self {
            id,
            x,
            clean_label: label,
            observed_label: label,
            is_noisy: false,
            is_hard_clean: false,
        }
    }
}

/// `K` isotropic unit-variance Gaussian clusters.
///
/// When `K <= dim` the centers sit on scaled coordinate axes so that every
/// pair is exactly `separation` apart. Otherwise centers are random
/// directions on the sphere of radius `separation / sqrt(2)`, which gives the
/// same expected pairwise distance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    pub centers: Vec<Vec<f64>>,
}

impl GaussianMixture {
    pub fn new<R: Rng>(classes: usize, dim: usize, separation: f64, rng: &mut R) -> Result<Self> {
        if classes < 2 {
            return Err(RgcError::config(
                "dataset.classes",
                format!("must be at least 2, got {classes}"),
            ));
        }
        if dim < 2 {
            return Err(RgcError::config(
                "dataset.dim",
                format!("must be at least 2, got {dim}"),
            ));
        }
        if !(separation > 0.0) || !separation.is_finite() {
            return Err(RgcError::config(
                "dataset.separation",
                format!("must be positive, got {separation}"),
            ));
        }
        let radius = separation / std::f64::consts::SQRT_2;
        let centers = (0..classes)
            .map(|k| {
                if classes <= dim {
                    let mut c = vec![0.0; dim];
                    c[k] = radius;
                    c
                } else {
                    let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
                    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-12);
                    v.into_iter().map(|a| a * radius / n).collect()
                }
            })
            .collect();
        Ok(Self { centers })
    }

    pub fn classes(&self) -> usize {
        self.centers.len()
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }

    /// `per_class` samples of every class, interleaved by class, with ids
    /// starting at `first_id`.
    pub fn draw<R: Rng>(&self, per_class: usize, first_id: usize, rng: &mut R) -> Vec<Sample> {
        let k = self.classes();
        let mut out = Vec::with_capacity(per_class * k);
        for i in 0..per_class {
            for (label, c) in self.centers.iter().enumerate() {
                let x = c
                    .iter()
                    .map(|&m| {
                        let z: f64 = StandardNormal.sample(rng);
                        m + z
                    })
                    .collect();
                out.push(Sample::clean(first_id + i * k + label, x, label));
            }
        }
        out
    }
}

/// Clean training samples drawn from a fresh mixture.
pub fn make_gaussian_mixture(
    classes: usize,
    per_class: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> Result<Vec<Sample>> {
    let streams = SeedStreams::new(seed);
    let mixture = GaussianMixture::new(classes, dim, separation, &mut streams.rng(seed::CENTERS))?;
    Ok(mixture.draw(per_class, 0, &mut streams.rng(seed::DATASET)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    GaussianMixture,
}

/// Dataset block of an experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub generator: Generator,
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    pub separation: f64,
    /// Clean held-out samples per class.
    pub test_per_class: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            generator: Generator::GaussianMixture,
            classes: 4,
            per_class: 500,
            dim: 8,
            separation: 2.5,
            test_per_class: 250,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(RgcError::config(
                "dataset.classes",
                format!("must be at least 2, got {}", self.classes),
            ));
        }
        if self.dim < 2 {
            return Err(RgcError::config(
                "dataset.dim",
                format!("must be at least 2, got {}", self.dim),
            ));
        }
        if self.per_class == 0 {
            return Err(RgcError::config("dataset.per_class", "must be at least 1"));
        }
        if self.test_per_class == 0 {
            return Err(RgcError::config(
                "dataset.test_per_class",
                "must be at least 1",
            ));
        }
        if !(self.separation > 0.0) || !self.separation.is_finite() {
            return Err(RgcError::config(
                "dataset.separation",
                format!("must be positive, got {}", self.separation),
            ));
        }
        Ok(())
    }
}

/// Noisy training split and clean held-out split sharing one mixture.
///
/// Test ids continue after the training ids, so the two never overlap.
pub fn build_datasets(
    cfg: &DatasetConfig,
    noise: &NoiseSpec,
    streams: &SeedStreams,
) -> Result<(Vec<Sample>, Vec<Sample>)> {
    cfg.validate()?;
    noise.validate(cfg.classes)?;
    let mixture = GaussianMixture::new(
        cfg.classes,
        cfg.dim,
        cfg.separation,
        &mut streams.rng(seed::CENTERS),
    )?;
    let clean = mixture.draw(cfg.per_class, 0, &mut streams.rng(seed::DATASET));
    let test = mixture.draw(
        cfg.test_per_class,
        clean.len(),
        &mut streams.rng(seed::TESTSET),
    );
    let train = inject_noise_with(&clean, cfg.classes, noise, &mut streams.rng(seed::NOISE))?;
    Ok((train, test))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Symmetric,
    Asymmetric,
    InstanceDependent,
}

impl std::str::FromStr for NoiseKind {
    type Err = RgcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(NoiseKind::Symmetric),
            "asymmetric" => Ok(NoiseKind::Asymmetric),
            "instance_dependent" | "instance-dependent" => Ok(NoiseKind::InstanceDependent),
            other => Err(RgcError::config(
                "noise.kind",
                format!("unknown noise kind `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub rate: f64,
    /// For asymmetric noise, `class_map[y]` is the corrupted label of a
    /// selected class-`y` sample. Defaults to `y -> (y + 1) mod K`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class_map: Option<Vec<usize>>,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            kind: NoiseKind::Symmetric,
            rate: 0.0,
            class_map: None,
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self, classes: usize) -> Result<()> {
        if !(0.0..1.0).contains(&self.rate) {
            return Err(RgcError::config(
                "noise.rate",
                format!("must be in [0, 1), got {}", self.rate),
            ));
        }
        if let Some(map) = &self.class_map {
            if map.len() != classes {
                return Err(RgcError::config(
                    "noise.class_map",
                    format!("needs {classes} entries, got {}", map.len()),
                ));
            }
            if let Some(&bad) = map.iter().find(|&&c| c >= classes) {
                return Err(RgcError::config(
                    "noise.class_map",
                    format!("class {bad} out of range"),
                ));
            }
            if self.kind == NoiseKind::Asymmetric
                && self.rate > 0.0
                && map.iter().enumerate().all(|(y, &t)| y == t)
            {
                return Err(RgcError::config(
                    "noise.class_map",
                    "maps every class to itself",
                ));
            }
        }
        Ok(())
    }

    fn class_map_or_default(&self, classes: usize) -> Vec<usize> {
        self.class_map
            .clone()
            .unwrap_or_else(|| (0..classes).map(|y| (y + 1) % classes).collect())
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Per-class means of `x` under the clean labels.
fn class_means(samples: &[Sample], classes: usize) -> Vec<Vec<f64>> {
    let dim = samples[0].x.len();
    let mut sums = vec![vec![0.0; dim]; classes];
    let mut counts = vec![0usize; classes];
    for s in samples {
        counts[s.clean_label] += 1;
        for (acc, v) in sums[s.clean_label].iter_mut().zip(&s.x) {
            *acc += v;
        }
    }
    sums.into_iter()
        .zip(counts)
        .map(|(sum, n)| sum.into_iter().map(|v| v / n.max(1) as f64).collect())
        .collect()
}

/// Flip probabilities `min(1, c * score_i)` with `c` chosen so they sum to `target`.
fn calibrated_probabilities(scores: &[f64], target: f64) -> Vec<f64> {
    let expected = |c: f64| scores.iter().map(|s| (c * s).min(1.0)).sum::<f64>();
    let (mut lo, mut hi) = (0.0, 1.0);
    while expected(hi) < target && hi < 1e12 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if expected(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    scores.iter().map(|s| (c * s).min(1.0)).collect()
}

/// Corrupt observed labels according to `spec`, drawing from `rng`.
///
/// Only `observed_label` and `is_noisy` change.
pub fn inject_noise_with<R: Rng>(
    samples: &[Sample],
    classes: usize,
    spec: &NoiseSpec,
    rng: &mut R,
) -> Result<Vec<Sample>> {
    spec.validate(classes)?;
    if let Some(bad) = samples.iter().find(|s| s.clean_label >= classes) {
        return Err(RgcError::input(format!(
            "sample {} has label outside 0..{classes}",
            bad.id
        )));
    }
    let mut out: Vec<Sample> = samples
        .iter()
        .map(|s| Sample {
            observed_label: s.clean_label,
            is_noisy: false,
            ..s.clone()
        })
        .collect();
    if spec.rate == 0.0 || out.is_empty() {
        return Ok(out);
    }
    match spec.kind {
        NoiseKind::Symmetric => {
            for s in &mut out {
                if rng.random::<f64>() < spec.rate {
                    let shift = rng.random_range(1..classes);
                    s.observed_label = (s.clean_label + shift) % classes;
                }
            }
        }
        NoiseKind::Asymmetric => {
            let map = spec.class_map_or_default(classes);
            for s in &mut out {
                if rng.random::<f64>() < spec.rate {
                    s.observed_label = map[s.clean_label];
                }
            }
        }
        NoiseKind::InstanceDependent => {
            let means = class_means(&out, classes);
            let (scores, nearest): (Vec<f64>, Vec<usize>) = out
                .iter()
                .map(|s| {
                    let own = euclid(&s.x, &means[s.clean_label]);
                    let (other, d_other) = (0..classes)
                        .filter(|&k| k != s.clean_label)
                        .map(|k| (k, euclid(&s.x, &means[k])))
                        .fold((usize::MAX, f64::INFINITY), |best, cand| {
                            if cand.1 < best.1 {
                                cand
                            } else {
                                best
                            }
                        });
                    (own / d_other.max(1e-12), other)
                })
                .unzip();
            let probs = calibrated_probabilities(&scores, spec.rate * out.len() as f64);
            for ((s, p), other) in out.iter_mut().zip(probs).zip(nearest) {
                if rng.random::<f64>() < p {
                    s.observed_label = other;
                }
            }
        }
    }
    for s in &mut out {
        s.is_noisy = s.observed_label != s.clean_label;
    }
    Ok(out)
}

/// [`inject_noise_with`] using the `noise` stream of `seed`.
pub fn inject_noise(
    samples: &[Sample],
    classes: usize,
    spec: &NoiseSpec,
    seed: u64,
) -> Result<Vec<Sample>> {
    inject_noise_with(
        samples,
        classes,
        spec,
        &mut SeedStreams::new(seed).rng(seed::NOISE),
    )
}

/// Mark the `ceil(fraction * |clean|)` highest-loss clean samples as hard-clean.
///
/// Ties are broken by lower sample id. Any previous tags are cleared.
pub fn tag_hard_clean(samples: &mut [Sample], losses: &[f64], fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(RgcError::config(
            "hard_clean_fraction",
            format!("must be in (0, 1), got {fraction}"),
        ));
    }
    if losses.len() != samples.len() {
        return Err(RgcError::input(
            "loss vector length does not match sample count",
        ));
    }
    if losses.iter().any(|l| l.is_nan()) {
        return Err(RgcError::input("loss vector contains NaN"));
    }
    let mut clean: Vec<usize> = (0..samples.len())
        .filter(|&i| !samples[i].is_noisy)
        .collect();
    let count = (fraction * clean.len() as f64).ceil() as usize;
    clean.sort_by(|&a, &b| {
        losses[b]
            .total_cmp(&losses[a])
            .then(samples[a].id.cmp(&samples[b].id))
    });
    samples.iter_mut().for_each(|s| s.is_hard_clean = false);
    for &i in clean.iter().take(count) {
        samples[i].is_hard_clean = true;
    }
    Ok(count)
}

/// Header for `dim`-dimensional dataset files.
pub fn dataset_header(dim: usize) -> String {
    let mut h = String::from("id,y,y_obs");
    for j in 1..=dim {
        h.push_str(&format!(",x_{j}"));
    }
    h
}

pub fn write_dataset_csv<W: std::io::Write>(mut out: W, samples: &[Sample]) -> Result<()> {
    let dim = samples.first().map(|s| s.x.len()).unwrap_or(0);
    writeln!(out, "{}", dataset_header(dim))?;
    for s in samples {
        write!(out, "{},{},{}", s.id, s.clean_label, s.observed_label)?;
        for v in &s.x {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_dataset_csv(text: &str) -> Result<Vec<Sample>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| RgcError::parse("dataset", "empty file"))?;
    let cols: Vec<&str> = header.trim_end().split(',').collect();
    if cols.len() < 3
        || cols[..3] != ["id", "y", "y_obs"]
        || header.trim_end() != dataset_header(cols.len() - 3)
    {
        return Err(RgcError::parse("dataset", "unexpected header"));
    }
    let dim = cols.len() - 3;
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            let ctx = || format!("dataset line {}", n + 2);
            let f: Vec<&str> = line.trim_end().split(',').collect();
            if f.len() != dim + 3 {
                return Err(RgcError::parse(
                    ctx(),
                    format!("expected {} fields", dim + 3),
                ));
            }
            let int = |s: &str| s.parse::<usize>().map_err(|e| RgcError::parse(ctx(), e));
            let x = f[3..]
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| RgcError::parse(ctx(), e)))
                .collect::<Result<Vec<f64>>>()?;
            let (y, y_obs) = (int(f[1])?, int(f[2])?);
            Ok(Sample {
                id: int(f[0])?,
                x,
                clean_label: y,
                observed_label: y_obs,
                is_noisy: y != y_obs,
                is_hard_clean: false,
            })
        })
        .collect()
}
