//! Fixtures shared by the benchmarks.

use rand::Rng;
use rgc_core::data::{self, DatasetConfig, NoiseKind, NoiseSpec, Sample};
use rgc_core::model::{self, Architecture, ForwardRecord, ModelParams, TeacherState};
use rgc_core::{ProbVector, SeedStreams};

pub struct Fixture {
    pub student: ModelParams,
    pub teacher: TeacherState,
    pub samples: Vec<Sample>,
}

/// Freshly initialised student/teacher pair and a noisy training split.
pub fn fixture(per_class: usize, hidden: &[usize]) -> Fixture {
    let streams = SeedStreams::new(17);
    let cfg = DatasetConfig {
        per_class,
        ..DatasetConfig::default()
    };
    let noise = NoiseSpec {
        kind: NoiseKind::Symmetric,
        rate: 0.4,
        class_map: None,
    };
    let (samples, _) = data::build_datasets(&cfg, &noise, &streams).expect("valid fixture config");
    let arch = Architecture {
        input_dim: cfg.dim,
        hidden: hidden.to_vec(),
        classes: cfg.classes,
    };
    let student = ModelParams::init(&arch, &mut streams.rng("bench")).expect("valid architecture");
    let teacher = TeacherState::new(&student, 0.999, 0.7).expect("valid teacher");
    Fixture {
        student,
        teacher,
        samples,
    }
}

pub fn forward_records(params: &ModelParams, samples: &[Sample]) -> Vec<ForwardRecord> {
    samples
        .iter()
        .map(|s| model::forward(params, &s.x).expect("finite fixture"))
        .collect()
}

pub fn random_prob<R: Rng>(k: usize, rng: &mut R) -> ProbVector {
    let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    ProbVector::new(raw.into_iter().map(|v| v / total).collect()).expect("normalised")
}
