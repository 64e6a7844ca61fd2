//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

mod common;

use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use rgc_core::config::{ExperimentConfig, GridCell};
use rgc_core::data::{DatasetConfig, NoiseKind, NoiseSpec, Sample};
use rgc_core::metrics;
use rgc_core::model::{self, last_layer_grad, Architecture};
use rgc_core::numerics::{mean, Matrix};
use rgc_core::reliability::{self, OrderingVerdict, TraceRecord};
use rgc_core::suite;
use rgc_core::trainer::{self, RunReport, RunSpec, TrainerConfig, Variant};
use rgc_core::{ProbVector, SeedStreams};

use common::*;

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

struct Outcome {
    passed: bool,
    detail: String,
}

fn check(name: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = limit.is_none_or(|l| elapsed <= l);
    let passed = out.passed && in_time;
    let budget = limit.map_or(String::new(), |l| format!(" / {:.0}s", l.as_secs_f64()));
    println!(
        "[{}] {name}: {} ({:.1}s{budget})",
        if passed { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64()
    );
    passed
}

fn spec(kind: NoiseKind, rate: f64, trainer: TrainerConfig, seed: u64) -> RunSpec {
    RunSpec {
        dataset: DatasetConfig::default(),
        noise: NoiseSpec {
            kind,
            rate,
            class_map: None,
        },
        trainer,
        seed,
    }
}

fn run(spec: &RunSpec) -> RunReport {
    trainer::run_experiment(spec).expect("acceptance run failed")
}

fn with_variant(variant: Variant) -> TrainerConfig {
    TrainerConfig {
        variant,
        ..TrainerConfig::default()
    }
}

fn closed_form_identities() -> Outcome {
    let mut r = rng(101);
    let n = 1000;
    let (mut trace_gap, mut decomp_gap, mut full_gap, mut fidelity_gap) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut fidelity_bound_ok = true;
    for _ in 0..n {
        let arch = random_arch(&mut r, 2);
        let params = random_params(&arch, &mut r);
        let x = random_vec(arch.input_dim, 2.0, &mut r);
        let target = random_target(arch.classes, &mut r);
        let fr = model::forward(&params, &x).unwrap();

        // trace_last against an entry-by-entry Frobenius norm of (p - t) h^T
        let (acts, z) = oracle_forward(&params, &x);
        let p = oracle_softmax(&z);
        let h = acts.last().unwrap();
        let mut frob = 0.0;
        for (pk, tk) in p.iter().zip(target.as_slice()) {
            for hd in h {
                frob += ((pk - tk) * hd).powi(2);
            }
        }
        trace_gap = trace_gap.max((reliability::trace_last(&fr.p, &target, fr.h()) - frob).abs());

        // discrepancy decomposition on random matrix pairs
        let (k, d) = (r.random_range(1..=6), r.random_range(1..=6));
        let spread = 10f64.powf(r.random_range(-2.0..2.0));
        let a = Matrix::from_vec(k, d, random_vec(k * d, spread, &mut r)).unwrap();
        let b = Matrix::from_vec(k, d, random_vec(k * d, 1.0, &mut r)).unwrap();
        let check = reliability::discrepancy_decomposition_check(&a, &b).unwrap();
        let diff: f64 = a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(u, v)| (u - v).powi(2))
            .sum();
        let b2: f64 = b.as_slice().iter().map(|v| v * v).sum();
        let lhs = diff / b2;
        decomp_gap = decomp_gap.max(check.gap).max((check.lhs - lhs).abs());

        // full trace against independent backpropagation
        let g = model::full_grad(&params, &x, &target).unwrap();
        let rec = reliability::trace_full(&g);
        let (enc, head) = oracle_grad(&params, &x, &target);
        let eps: f64 = enc.iter().map(|v| v * v).sum();
        let tau_full: f64 = eps + head.iter().map(|v| v * v).sum::<f64>();
        let tau_last = reliability::trace_last(&fr.p, &target, fr.h());
        full_gap = full_gap
            .max((rec.tau_full.unwrap() - (tau_last + eps)).abs())
            .max((rec.tau_full.unwrap() - tau_full).abs())
            .max((rec.epsilon_resid.unwrap() - eps).abs());

        // reference fidelity holds with equality at the head
        let q = random_prob(arch.classes, &mut r);
        let q_star = random_target(arch.classes, &mut r);
        let fc = reliability::reference_fidelity_check(&fr, &q, &q_star);
        let h_norm = h.iter().map(|v| v * v).sum::<f64>().sqrt();
        let q_dist = q
            .as_slice()
            .iter()
            .zip(q_star.as_slice())
            .map(|(u, v)| (u - v).powi(2))
            .sum::<f64>()
            .sqrt();
        fidelity_gap = fidelity_gap.max((fc.grad_gap - h_norm * q_dist).abs());
        fidelity_bound_ok &= fc.holds();
    }
    let tol = 1e-10;
    Outcome {
        passed: trace_gap < tol && decomp_gap < tol && full_gap < tol && fidelity_gap < tol && fidelity_bound_ok,
        detail: format!(
            "{n} instances, max gaps trace={trace_gap:.1e} decomposition={decomp_gap:.1e} full_trace={full_gap:.1e} fidelity={fidelity_gap:.1e} (tol {tol:.0e})"
        ),
    }
}

fn gradient_checks() -> Outcome {
    let mut r = rng(202);
    let n = 200;
    let (mut coords, mut bad_full, mut bad_head) = (0usize, 0usize, 0usize);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let arch = random_arch(&mut r, 2);
        let params = random_params(&arch, &mut r);
        let x = random_vec(arch.input_dim, 2.0, &mut r);
        let target = random_target(arch.classes, &mut r);
        let fd = finite_difference_grad(&params, &x, &target, 1e-4);
        let g = model::full_grad(&params, &x, &target).unwrap();
        let analytic: Vec<f64> = g
            .grad_psi
            .iter()
            .chain(g.grad_w.as_slice())
            .copied()
            .collect();
        for (a, f) in analytic.iter().zip(&fd) {
            coords += 1;
            worst = worst.max((a - f).abs());
            bad_full += usize::from(!grad_close(*a, *f));
        }
        let fr = model::forward(&params, &x).unwrap();
        let head = last_layer_grad(&fr, &target);
        let fd_head = &fd[fd.len() - head.as_slice().len()..];
        for (a, f) in head.as_slice().iter().zip(fd_head) {
            bad_head += usize::from(!grad_close(*a, *f));
        }
    }
    Outcome {
        passed: bad_full == 0 && bad_head == 0,
        detail: format!(
            "{n} instances, {coords} coordinates, mismatches full_grad={bad_full} last_layer_grad={bad_head}, max abs diff {worst:.1e}"
        ),
    }
}

fn trained_traces() -> Vec<TraceRecord> {
    let streams = SeedStreams::new(303);
    let cfg = DatasetConfig {
        per_class: 100,
        ..DatasetConfig::default()
    };
    let noise = NoiseSpec {
        rate: 0.3,
        ..NoiseSpec::default()
    };
    let (samples, test) = rgc_core::data::build_datasets(&cfg, &noise, &streams).unwrap();
    let trainer_cfg = TrainerConfig {
        hidden: vec![8],
        ..TrainerConfig::default()
    };
    let arch = Architecture {
        input_dim: cfg.dim,
        hidden: trainer_cfg.hidden.clone(),
        classes: cfg.classes,
    };
    let mut params = model::ModelParams::init(&arch, &mut streams.rng("init")).unwrap();
    trainer::warmup(&mut params, &samples, &test, &trainer_cfg, &streams).unwrap();
    samples
        .iter()
        .map(|s| {
            let e = ProbVector::one_hot(cfg.classes, s.observed_label).unwrap();
            reliability::trace_full(&model::full_grad(&params, &s.x, &e).unwrap())
        })
        .filter(|t| t.tau_last >= reliability::KAPPA_FLOOR)
        .collect()
}

fn proposition_checks() -> Outcome {
    // Prop 1: every ordered pair from a trained model
    let traces = trained_traces();
    let (mut pairs, mut guaranteed, mut contradictions) = (0usize, 0usize, 0usize);
    for (i, ti) in traces.iter().enumerate() {
        for (j, tj) in traces.iter().enumerate() {
            if i == j {
                continue;
            }
            pairs += 1;
            if reliability::prop1_ordering_check(ti, tj).unwrap() == OrderingVerdict::Guaranteed {
                guaranteed += 1;
                if ti.tau_full.unwrap() <= tj.tau_full.unwrap() {
                    contradictions += 1;
                }
            }
        }
    }

    // Prop 2: random margins and fusion weights inside the interval
    let mut r = rng(304);
    let draws = 5000;
    let mut violations = 0usize;
    let mut boundary_gap = 0.0f64;
    for _ in 0..draws {
        let m_c = r.random_range(1e-3..3.0);
        let m_r = if r.random_bool(0.1) {
            0.0
        } else {
            r.random_range(0.0..3.0)
        };
        let interval = reliability::prop2_interval(m_c, m_r).unwrap();
        let beta = r.random_range(0.0..interval.upper);
        let (c_h, r_n) = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
        let c_n = c_h + m_c + r.random_range(0.0..1.0) * r.random_range(0.0..1.0);
        let r_h = r_n + m_r - r.random_range(0.0..1.0) * r.random_range(0.0..2.0);
        let s = reliability::fuse_scores(&[r_n, r_h], &[c_n, c_h], beta).unwrap();
        let margin = interval.ordering_margin(beta);
        if !interval.contains(beta) || s[0] - s[1] <= 0.0 || s[0] - s[1] < margin - 1e-12 {
            violations += 1;
        }
        // extremal margins exactly at the bound
        let s =
            reliability::fuse_scores(&[r_n, r_n + m_r], &[c_h + m_c, c_h], interval.upper).unwrap();
        boundary_gap = boundary_gap
            .max((s[0] - s[1]).abs())
            .max(interval.ordering_margin(interval.upper).abs());
        if interval.contains(interval.upper) {
            violations += 1;
        }
    }

    Outcome {
        passed: pairs >= 500 && guaranteed > 0 && contradictions == 0 && violations == 0 && boundary_gap < 1e-12,
        detail: format!(
            "prop1 {pairs} pairs, {guaranteed} guaranteed, {contradictions} contradictions; prop2 {draws} draws, {violations} violations, max boundary |s_n - s_h| {boundary_gap:.1e}"
        ),
    }
}

fn matched_auroc(scores: &[f64], samples: &[Sample], subset: &[usize]) -> f64 {
    let s: Vec<f64> = subset.iter().map(|&i| scores[i]).collect();
    let m: Vec<bool> = subset.iter().map(|&i| samples[i].is_noisy).collect();
    metrics::auroc(&s, &m).unwrap()
}

fn final_smoothed(report: &RunReport) -> Vec<f64> {
    let epoch = report.final_epoch().unwrap();
    report
        .epoch_records(epoch)
        .iter()
        .map(|r| r.s_smoothed)
        .collect()
}

fn directional_separation() -> Outcome {
    let per_seed: Vec<(f64, f64, f64)> = SEEDS
        .par_iter()
        .map(|&seed| {
            let rgc = run(&spec(
                NoiseKind::InstanceDependent,
                0.3,
                with_variant(Variant::Rgc),
                seed,
            ));
            let trace = run(&spec(
                NoiseKind::InstanceDependent,
                0.3,
                with_variant(Variant::Trace),
                seed,
            ));
            let noisy: Vec<bool> = rgc.samples.iter().map(|s| s.is_noisy).collect();
            let hc: Vec<bool> = rgc.samples.iter().map(|s| s.is_hard_clean).collect();
            let subset =
                metrics::matched_difficulty_subset(&rgc.warmup_losses, &noisy, &hc).unwrap();
            (
                matched_auroc(&final_smoothed(&rgc), &rgc.samples, &subset),
                matched_auroc(&rgc.warmup_losses, &rgc.samples, &subset),
                matched_auroc(&final_smoothed(&trace), &trace.samples, &subset),
            )
        })
        .collect();
    let fused = mean(&per_seed.iter().map(|t| t.0).collect::<Vec<_>>());
    let loss = mean(&per_seed.iter().map(|t| t.1).collect::<Vec<_>>());
    let trace = mean(&per_seed.iter().map(|t| t.2).collect::<Vec<_>>());
    Outcome {
        passed: fused >= loss + 0.10 && fused >= trace,
        detail: format!(
            "matched-subset AUROC over {} seeds: fused={fused:.3} loss={loss:.3} trace_only={trace:.3} (need fused >= loss + 0.10 and >= trace_only)",
            SEEDS.len()
        ),
    }
}

fn ordering_sanity() -> Outcome {
    let per_seed: Vec<(f64, f64)> = SEEDS
        .par_iter()
        .map(|&seed| {
            let rep = run(&spec(
                NoiseKind::Symmetric,
                0.4,
                with_variant(Variant::Rgc),
                seed,
            ));
            let last = rep.epoch_records(rep.final_epoch().unwrap());
            let w = |noisy: bool| {
                mean(
                    &last
                        .iter()
                        .filter(|r| r.is_noisy == noisy)
                        .map(|r| r.trust_w)
                        .collect::<Vec<_>>(),
                )
            };
            (
                w(false) - w(true),
                rep.detection.expect("noisy and hard-clean present").hcpr,
            )
        })
        .collect();
    let gap = mean(&per_seed.iter().map(|t| t.0).collect::<Vec<_>>());
    let hcpr = mean(&per_seed.iter().map(|t| t.1).collect::<Vec<_>>());
    Outcome {
        passed: gap >= 0.1 && hcpr >= 0.6,
        detail: format!(
            "symmetric 40%, {} seeds: mean w(clean) - w(noisy) = {gap:.3} (need >= 0.1), HCPR at median = {hcpr:.3} (need >= 0.6)",
            SEEDS.len()
        ),
    }
}

fn no_harm() -> Outcome {
    let pairs: Vec<(u64, f64, f64)> = SEEDS[..3]
        .par_iter()
        .map(|&seed| {
            let rgc = run(&spec(
                NoiseKind::Symmetric,
                0.0,
                with_variant(Variant::Rgc),
                seed,
            ));
            let ce = run(&spec(
                NoiseKind::Symmetric,
                0.0,
                with_variant(Variant::PlainCe),
                seed,
            ));
            (seed, rgc.final_test_accuracy, ce.final_test_accuracy)
        })
        .collect();
    let worst = pairs
        .iter()
        .map(|(_, a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let listed: Vec<String> = pairs
        .iter()
        .map(|(s, a, b)| format!("seed {s}: rgc {a:.3} vs ce {b:.3}"))
        .collect();
    Outcome {
        passed: worst <= 0.02,
        detail: format!(
            "0% noise, {}; max gap {:.3} (need <= 0.020)",
            listed.join(", "),
            worst
        ),
    }
}

fn beta_sensitivity() -> Outcome {
    let betas = [0.0, 0.2, 0.5, 0.8, 1.0];
    let jobs: Vec<(usize, u64)> = (0..betas.len())
        .flat_map(|b| SEEDS.iter().map(move |&s| (b, s)))
        .collect();
    let accs: Vec<(usize, f64)> = jobs
        .par_iter()
        .map(|&(b, seed)| {
            let cfg = TrainerConfig {
                beta: betas[b],
                ..TrainerConfig::default()
            };
            (
                b,
                run(&spec(NoiseKind::Symmetric, 0.4, cfg, seed)).final_test_accuracy,
            )
        })
        .collect();
    let means: Vec<f64> = (0..betas.len())
        .map(|b| {
            mean(
                &accs
                    .iter()
                    .filter(|(i, _)| *i == b)
                    .map(|(_, a)| *a)
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    let listed: Vec<String> = betas
        .iter()
        .zip(&means)
        .map(|(b, m)| format!("{b}:{m:.4}"))
        .collect();
    Outcome {
        passed: means[4] <= means[1],
        detail: format!(
            "symmetric 40%, {} seeds, mean accuracy by beta [{}] (need beta=1 <= beta=0.2)",
            SEEDS.len(),
            listed.join(" ")
        ),
    }
}

fn determinism() -> Outcome {
    let cfg = ExperimentConfig {
        noise: NoiseSpec {
            rate: 0.3,
            ..NoiseSpec::default()
        },
        ..ExperimentConfig::default()
    };
    let cell = GridCell {
        variant: Variant::Rgc,
        beta: cfg.trainer.beta,
        alpha: cfg.trainer.alpha,
    };
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        suite::train_run(&cfg, &cell, 11, d.path()).unwrap();
    }
    let files = [
        suite::SUMMARY_CSV,
        suite::RUN_LOG,
        suite::RELIABILITY_CSV,
        suite::SWEEP_CSV,
    ];
    let identical: Vec<bool> = files
        .iter()
        .map(|f| {
            std::fs::read(dirs[0].path().join(f)).unwrap()
                == std::fs::read(dirs[1].path().join(f)).unwrap()
        })
        .collect();
    Outcome {
        passed: identical.iter().all(|&b| b),
        detail: format!(
            "two train runs, byte-identical: {}",
            files
                .iter()
                .zip(&identical)
                .map(|(f, b)| format!("{f}={b}"))
                .collect::<Vec<_>>()
                .join(" ")
        ),
    }
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        check(
            "1 closed-form identities",
            Some(secs(10)),
            closed_form_identities,
        ),
        check("2 gradient checks", Some(secs(30)), gradient_checks),
        check("3 proposition checkers", None, proposition_checks),
        check(
            "4 directional separation",
            Some(secs(300)),
            directional_separation,
        ),
        check("5 end-to-end ordering", None, ordering_sanity),
        check("6 no harm on clean data", None, no_harm),
        check("7 beta sensitivity", None, beta_sensitivity),
        check("8 determinism", None, determinism),
    ];
    let failed = results.iter().filter(|&&p| !p).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
