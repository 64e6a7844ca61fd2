//! Encoder + linear classifier head with hand-written backpropagation.
//!
//! The encoder is a stack of dense `tanh` layers producing the feature
//! vector `h`; the head is a bias-free `K x D` matrix so that logits are
//! exactly `z = W h`. A zero-depth encoder is the identity map.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RgcError};
use crate::numerics::{self, axpy, Matrix, ProbVector};

/// Layer widths of the student (and teacher) network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub classes: usize,
}

impl Architecture {
    pub fn feature_dim(&self) -> usize {
        self.hidden.last().copied().unwrap_or(self.input_dim)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// `out x in`
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

/// Student parameters: encoder layers plus the classifier head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub encoder: Vec<DenseLayer>,
    /// `K x D`
    pub head: Matrix,
}

impl ModelParams {
    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng>(arch: &Architecture, rng: &mut R) -> Result<Self> {
        if arch.classes < 2 {
            return Err(RgcError::config("classes", "must be at least 2"));
        }
        if arch.input_dim == 0 || arch.hidden.contains(&0) {
            return Err(RgcError::config("hidden", "layer widths must be positive"));
        }
        let mut glorot = |rows: usize, cols: usize| {
            let limit = (6.0 / (rows + cols) as f64).sqrt();
            let data = (0..rows * cols)
                .map(|_| rng.random_range(-limit..limit))
                .collect();
            Matrix::from_vec(rows, cols, data)
        };
        let mut encoder = Vec::with_capacity(arch.hidden.len());
        let mut fan_in = arch.input_dim;
        for &width in &arch.hidden {
            encoder.push(DenseLayer {
                weight: glorot(width, fan_in)?,
                bias: vec![0.0; width],
            });
            fan_in = width;
        }
        let head = glorot(arch.classes, fan_in)?;
        Ok(Self { encoder, head })
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            input_dim: self
                .encoder
                .first()
                .map(|l| l.weight.cols())
                .unwrap_or(self.head.cols()),
            hidden: self.encoder.iter().map(|l| l.bias.len()).collect(),
            classes: self.head.rows(),
        }
    }

    pub fn classes(&self) -> usize {
        self.head.rows()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            encoder: self
                .encoder
                .iter()
                .map(|l| DenseLayer {
                    weight: Matrix::zeros(l.weight.rows(), l.weight.cols()),
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
            head: Matrix::zeros(self.head.rows(), self.head.cols()),
        }
    }

    /// Parameter arrays in canonical order: each encoder layer's weight then
    /// bias, followed by the head.
    pub fn arrays(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::with_capacity(2 * self.encoder.len() + 1);
        for (i, l) in self.encoder.iter().enumerate() {
            out.push((format!("encoder.{i}.weight"), l.weight.as_slice()));
            out.push((format!("encoder.{i}.bias"), l.bias.as_slice()));
        }
        out.push(("head.weight".to_string(), self.head.as_slice()));
        out
    }

    fn arrays_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(2 * self.encoder.len() + 1);
        for l in &mut self.encoder {
            out.push(l.weight.as_mut_slice());
            out.push(l.bias.as_mut_slice());
        }
        out.push(self.head.as_mut_slice());
        out
    }

    pub fn num_params(&self) -> usize {
        self.arrays().iter().map(|(_, a)| a.len()).sum()
    }

    /// Encoder parameters flattened in canonical order.
    pub fn encoder_flat(&self) -> Vec<f64> {
        self.encoder
            .iter()
            .flat_map(|l| l.weight.as_slice().iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut v = self.encoder_flat();
        v.extend_from_slice(self.head.as_slice());
        v
    }

    /// Overwrite every parameter from a flat vector in [`Self::flatten`] order.
    pub fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(RgcError::input(format!(
                "flat parameter vector has {} entries, model has {}",
                flat.len(),
                self.num_params()
            )));
        }
        let mut offset = 0;
        for a in self.arrays_mut() {
            a.copy_from_slice(&flat[offset..offset + a.len()]);
            offset += a.len();
        }
        Ok(())
    }

    pub fn same_shape(&self, other: &ModelParams) -> bool {
        self.head.shape() == other.head.shape()
            && self.encoder.len() == other.encoder.len()
            && self
                .encoder
                .iter()
                .zip(&other.encoder)
                .all(|(a, b)| a.weight.shape() == b.weight.shape() && a.bias.len() == b.bias.len())
    }

    /// `self += alpha * other`; shapes must already agree.
    pub fn axpy(&mut self, alpha: f64, other: &ModelParams) {
        debug_assert!(self.same_shape(other));
        for (dst, src) in self.arrays_mut().into_iter().zip(other.arrays()) {
            axpy(dst, alpha, src.1);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in self.arrays_mut() {
            a.iter_mut().for_each(|x| *x *= s);
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.arrays()
            .iter()
            .map(|(_, a)| numerics::norm_sq(a))
            .sum()
    }

    /// Euclidean distance between two parameter sets.
    pub fn distance(&self, other: &ModelParams) -> f64 {
        self.arrays()
            .iter()
            .zip(other.arrays())
            .map(|((_, a), (_, b))| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.arrays()
            .iter()
            .all(|(_, a)| a.iter().all(|x| x.is_finite()))
    }
}

/// Everything a single forward pass produces, including the activations
/// needed for backpropagation.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardRecord {
    /// `activations[0]` is the input; `activations[l]` the output of encoder layer `l`.
    pub activations: Vec<Vec<f64>>,
    pub z: Vec<f64>,
    pub p: ProbVector,
}

impl ForwardRecord {
    /// The encoder output `h`.
    pub fn h(&self) -> &[f64] {
        self.activations
            .last()
            .expect("activations always hold the input")
    }
}

pub fn forward(params: &ModelParams, x: &[f64]) -> Result<ForwardRecord> {
    let expected = params
        .encoder
        .first()
        .map(|l| l.weight.cols())
        .unwrap_or(params.head.cols());
    if x.len() != expected {
        return Err(RgcError::input(format!(
            "input has dimension {}, model expects {expected}",
            x.len()
        )));
    }
    let mut activations = Vec::with_capacity(params.encoder.len() + 1);
    activations.push(x.to_vec());
    for layer in &params.encoder {
        let prev = activations.last().expect("non-empty");
        let mut a = layer.weight.matvec(prev);
        for (ai, b) in a.iter_mut().zip(&layer.bias) {
            *ai = (*ai + b).tanh();
        }
        activations.push(a);
    }
    let z = params.head.matvec(activations.last().expect("non-empty"));
    let p = numerics::softmax(&z)?;
    Ok(ForwardRecord { activations, z, p })
}

/// Closed-form classifier-head gradient of cross-entropy: `(p - target) h^T`.
pub fn last_layer_grad(fr: &ForwardRecord, target: &ProbVector) -> Matrix {
    Matrix::outer(&fr.p.residual(target), fr.h())
}

/// Backpropagate a logit-space gradient through head and encoder.
pub fn backward(params: &ModelParams, fr: &ForwardRecord, dlogits: &[f64]) -> ModelParams {
    let h = fr.h();
    let head = Matrix::outer(dlogits, h);
    let mut upstream = params.head.matvec_t(dlogits);
    let mut encoder: Vec<DenseLayer> = Vec::with_capacity(params.encoder.len());
    for (l, layer) in params.encoder.iter().enumerate().rev() {
        let out = &fr.activations[l + 1];
        let input = &fr.activations[l];
        let dpre: Vec<f64> = upstream
            .iter()
            .zip(out)
            .map(|(g, a)| g * (1.0 - a * a))
            .collect();
        let weight = Matrix::outer(&dpre, input);
        if l > 0 {
            upstream = layer.weight.matvec_t(&dpre);
        }
        encoder.push(DenseLayer { weight, bias: dpre });
    }
    encoder.reverse();
    ModelParams { encoder, head }
}

/// Exact per-sample gradient split into head and encoder parts.
#[derive(Debug, Clone, PartialEq)]
pub struct PerSampleGrad {
    pub grad_w: Matrix,
    /// Encoder gradient, flattened in [`ModelParams::encoder_flat`] order.
    pub grad_psi: Vec<f64>,
}

impl PerSampleGrad {
    pub fn norm_sq(&self) -> f64 {
        self.grad_w.frobenius_sq() + numerics::norm_sq(&self.grad_psi)
    }
}

/// Exact backpropagated cross-entropy gradient for one sample.
pub fn full_grad(params: &ModelParams, x: &[f64], target: &ProbVector) -> Result<PerSampleGrad> {
    if target.len() != params.classes() {
        return Err(RgcError::input(
            "target dimension does not match class count",
        ));
    }
    let fr = forward(params, x)?;
    let g = backward(params, &fr, &fr.p.residual(target));
    Ok(PerSampleGrad {
        grad_psi: g.encoder_flat(),
        grad_w: g.head,
    })
}

/// In-place `params -= lr * grad`.
pub fn sgd_step(params: &mut ModelParams, grad: &ModelParams, lr: f64) -> Result<()> {
    if !(lr > 0.0) || !lr.is_finite() {
        return Err(RgcError::config(
            "lr",
            format!("must be positive, got {lr}"),
        ));
    }
    if !params.same_shape(grad) {
        return Err(RgcError::input("gradient shape does not match parameters"));
    }
    if !grad.is_finite() {
        return Err(RgcError::TrainingDiverged("non-finite gradient".into()));
    }
    params.axpy(-lr, grad);
    if !params.is_finite() {
        return Err(RgcError::TrainingDiverged("parameters overflowed".into()));
    }
    Ok(())
}

/// EMA teacher providing sharpened reference targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherState {
    pub params: ModelParams,
    pub momentum: f64,
    pub temperature: f64,
}

impl TeacherState {
    pub fn new(student: &ModelParams, momentum: f64, temperature: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&momentum) {
            return Err(RgcError::config(
                "momentum",
                format!("must be in [0, 1], got {momentum}"),
            ));
        }
        if !(temperature > 0.0) {
            return Err(RgcError::config(
                "temperature",
                format!("must be positive, got {temperature}"),
            ));
        }
        Ok(Self {
            params: student.clone(),
            momentum,
            temperature,
        })
    }

    /// `teacher <- m * teacher + (1 - m) * student`.
    pub fn ema_update(&mut self, student: &ModelParams) -> Result<()> {
        if !self.params.same_shape(student) {
            return Err(RgcError::input("teacher and student shapes differ"));
        }
        let m = self.momentum;
        if m == 0.0 {
            self.params.clone_from(student);
            return Ok(());
        }
        self.params.scale(m);
        self.params.axpy(1.0 - m, student);
        Ok(())
    }

    /// Sharpened teacher softmax for input `x`.
    pub fn target(&self, x: &[f64]) -> Result<ProbVector> {
        let fr = forward(&self.params, x)?;
        numerics::sharpen(&fr.p, self.temperature)
    }
}

/// A named parameter array in a checkpoint file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// JSON checkpoint: a format tag and a flat list of named arrays.
///
/// ```json
/// {"format":"rgc-checkpoint/1","arrays":[{"name":"encoder.0.weight","shape":[32,8],"data":[...]}, ...]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub arrays: Vec<NamedArray>,
}

pub const CHECKPOINT_FORMAT: &str = "rgc-checkpoint/1";

impl Checkpoint {
    pub fn from_params(params: &ModelParams) -> Self {
        let mut arrays = Vec::new();
        for (i, l) in params.encoder.iter().enumerate() {
            arrays.push(NamedArray {
                name: format!("encoder.{i}.weight"),
                shape: vec![l.weight.rows(), l.weight.cols()],
                data: l.weight.as_slice().to_vec(),
            });
            arrays.push(NamedArray {
                name: format!("encoder.{i}.bias"),
                shape: vec![l.bias.len()],
                data: l.bias.clone(),
            });
        }
        arrays.push(NamedArray {
            name: "head.weight".into(),
            shape: vec![params.head.rows(), params.head.cols()],
            data: params.head.as_slice().to_vec(),
        });
        Self {
            format: CHECKPOINT_FORMAT.into(),
            arrays,
        }
    }

    pub fn to_params(&self) -> Result<ModelParams> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(RgcError::parse(
                "checkpoint",
                format!("unknown format `{}`", self.format),
            ));
        }
        let find = |name: &str| {
            self.arrays
                .iter()
                .find(|a| a.name == name)
                .ok_or_else(|| RgcError::parse("checkpoint", format!("missing array `{name}`")))
        };
        let matrix = |a: &NamedArray| match a.shape.as_slice() {
            [r, c] => Matrix::from_vec(*r, *c, a.data.clone()),
            _ => Err(RgcError::parse(
                "checkpoint",
                format!("`{}` is not 2-d", a.name),
            )),
        };
        let layers = self
            .arrays
            .iter()
            .filter(|a| a.name.starts_with("encoder.") && a.name.ends_with(".weight"))
            .count();
        let mut encoder = Vec::with_capacity(layers);
        for i in 0..layers {
            let weight = matrix(find(&format!("encoder.{i}.weight"))?)?;
            let bias = find(&format!("encoder.{i}.bias"))?.data.clone();
            if bias.len() != weight.rows() {
                return Err(RgcError::parse(
                    "checkpoint",
                    format!("encoder.{i}.bias length mismatch"),
                ));
            }
            encoder.push(DenseLayer { weight, bias });
        }
        let head = matrix(find("head.weight")?)?;
        let params = ModelParams { encoder, head };
        let mut fan_in = params.head.cols();
        for l in params.encoder.iter().rev() {
            if l.weight.rows() != fan_in {
                return Err(RgcError::parse("checkpoint", "layer widths do not chain"));
            }
            fan_in = l.weight.cols();
        }
        Ok(params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| RgcError::parse("checkpoint", e))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| RgcError::parse(path.display().to_string(), e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn arch(hidden: &[usize]) -> Architecture {
        Architecture {
            input_dim: 3,
            hidden: hidden.to_vec(),
            classes: 3,
        }
    }

    fn random_params(hidden: &[usize], seed: u64) -> ModelParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ModelParams::init(&arch(hidden), &mut rng).unwrap();
        // non-zero biases so the bias path is exercised
        for l in &mut p.encoder {
            l.bias
                .iter_mut()
                .for_each(|b| *b = rng.random_range(-0.5..0.5));
        }
        p
    }

    fn ce_at(params: &ModelParams, x: &[f64], t: &ProbVector) -> f64 {
        numerics::cross_entropy(&forward(params, x).unwrap().p, t).unwrap()
    }

    fn central_differences(params: &ModelParams, x: &[f64], t: &ProbVector, step: f64) -> Vec<f64> {
        let base = params.flatten();
        let mut probe = params.clone();
        (0..base.len())
            .map(|i| {
                let mut v = base.clone();
                v[i] = base[i] + step;
                probe.assign_flat(&v).unwrap();
                let up = ce_at(&probe, x, t);
                v[i] = base[i] - step;
                probe.assign_flat(&v).unwrap();
                let down = ce_at(&probe, x, t);
                (up - down) / (2.0 * step)
            })
            .collect()
    }

    #[test]
    fn identity_encoder_forward() {
        let params = ModelParams {
            encoder: vec![],
            head: Matrix::identity(2),
        };
        let fr = forward(&params, &[0.0, 0.0]).unwrap();
        assert_eq!(fr.p.as_slice(), &[0.5, 0.5]);
        assert_eq!(fr.h(), &[0.0, 0.0]);
    }

    #[test]
    fn zero_head_gives_uniform() {
        let mut params = random_params(&[4], 1);
        params.head = Matrix::zeros(3, 4);
        let fr = forward(&params, &[1.0, -2.0, 3.0]).unwrap();
        assert!(fr
            .p
            .as_slice()
            .iter()
            .all(|&p| (p - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn forward_is_deterministic_and_checks_shape() {
        let params = random_params(&[5, 4], 2);
        let a = forward(&params, &[0.3, -0.1, 0.7]).unwrap();
        let b = forward(&params, &[0.3, -0.1, 0.7]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.z, params.head.matvec(a.h()));
        assert!(matches!(
            forward(&params, &[1.0]),
            Err(RgcError::InvalidInput(_))
        ));
    }

    #[test]
    fn last_layer_grad_hand_example() {
        let fr = ForwardRecord {
            activations: vec![vec![1.0, 1.0]],
            z: vec![0.0, 0.0],
            p: ProbVector::new(vec![0.5, 0.5]).unwrap(),
        };
        let g = last_layer_grad(&fr, &ProbVector::one_hot(2, 0).unwrap());
        assert_eq!(g.as_slice(), &[-0.5, -0.5, 0.5, 0.5]);
        let zero = last_layer_grad(&fr, &fr.p);
        assert!(zero.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn full_grad_head_matches_closed_form() {
        let params = random_params(&[6, 5], 3);
        let x = [0.2, -0.4, 0.9];
        let t = ProbVector::new(vec![0.1, 0.7, 0.2]).unwrap();
        let g = full_grad(&params, &x, &t).unwrap();
        let closed = last_layer_grad(&forward(&params, &x).unwrap(), &t);
        for (a, b) in g.grad_w.as_slice().iter().zip(closed.as_slice()) {
            assert!((a - b).abs() <= 1e-12);
        }
        assert_eq!(g.grad_psi.len(), params.encoder_flat().len());
    }

    #[test]
    fn zero_depth_full_grad() {
        let params = random_params(&[], 4);
        let x = [0.5, 0.1, -0.3];
        let t = ProbVector::one_hot(3, 2).unwrap();
        let g = full_grad(&params, &x, &t).unwrap();
        assert!(g.grad_psi.is_empty());
        assert_eq!(
            g.grad_w,
            last_layer_grad(&forward(&params, &x).unwrap(), &t)
        );
    }

    #[test]
    fn perfect_fit_has_zero_gradient() {
        let params = random_params(&[4], 5);
        let x = [0.1, 0.2, 0.3];
        let p = forward(&params, &x).unwrap().p;
        let g = full_grad(&params, &x, &p).unwrap();
        assert_eq!(g.norm_sq(), 0.0);
    }

    #[test]
    fn one_hidden_layer_matches_finite_differences() {
        let params = random_params(&[5], 6);
        let x = [0.7, -0.2, 0.4];
        let t = ProbVector::one_hot(3, 1).unwrap();
        let g = full_grad(&params, &x, &t).unwrap();
        let mut analytic = g.grad_psi.clone();
        analytic.extend_from_slice(g.grad_w.as_slice());
        let numeric = central_differences(&params, &x, &t, 1e-4);
        for (a, n) in analytic.iter().zip(&numeric) {
            assert!((a - n).abs() <= (1e-5 * n.abs()).max(1e-7), "{a} vs {n}");
        }
    }

    #[test]
    fn full_grad_norm_decomposes() {
        let params = random_params(&[4, 4], 7);
        let g = full_grad(
            &params,
            &[1.0, 0.0, -1.0],
            &ProbVector::one_hot(3, 0).unwrap(),
        )
        .unwrap();
        let total = g.norm_sq();
        let parts = g.grad_w.frobenius_sq() + numerics::norm_sq(&g.grad_psi);
        assert!((total - parts).abs() <= 1e-12);
    }

    #[test]
    fn sgd_examples() {
        let start = random_params(&[3], 8);
        let mut p = start.clone();
        sgd_step(&mut p, &start.zeros_like(), 0.1).unwrap();
        assert_eq!(p, start);

        sgd_step(&mut p, &start, 1.0).unwrap();
        assert_eq!(p.norm_sq(), 0.0);

        let grad = random_params(&[3], 9);
        let mut once = start.clone();
        sgd_step(&mut once, &grad, 0.2).unwrap();
        let mut twice = start.clone();
        sgd_step(&mut twice, &grad, 0.1).unwrap();
        sgd_step(&mut twice, &grad, 0.1).unwrap();
        assert!(once.distance(&twice) < 1e-14);
    }

    #[test]
    fn sgd_rejects_non_finite_gradient() {
        let mut p = random_params(&[3], 10);
        let mut g = p.zeros_like();
        g.head.set(0, 0, f64::NAN);
        assert!(matches!(
            sgd_step(&mut p, &g, 0.1),
            Err(RgcError::TrainingDiverged(_))
        ));
        let zeros = p.zeros_like();
        assert!(sgd_step(&mut p, &zeros, 0.0).is_err());
    }

    #[test]
    fn ema_examples() {
        let student = random_params(&[3], 11);
        let other = random_params(&[3], 12);

        let mut t = TeacherState::new(&other, 0.0, 1.0).unwrap();
        t.ema_update(&student).unwrap();
        assert_eq!(t.params, student);

        let mut t = TeacherState::new(&other, 1.0, 1.0).unwrap();
        t.ema_update(&student).unwrap();
        assert_eq!(t.params, other);

        let zero = student.zeros_like();
        let mut two = student.zeros_like();
        two.assign_flat(&vec![2.0; student.num_params()]).unwrap();
        let mut t = TeacherState::new(&zero, 0.5, 1.0).unwrap();
        t.ema_update(&two).unwrap();
        assert!(t.params.flatten().iter().all(|&v| v == 1.0));

        let mismatched = random_params(&[4], 13);
        assert!(t.ema_update(&mismatched).is_err());
    }

    #[test]
    fn ema_gap_shrinks_geometrically() {
        let student = random_params(&[3], 14);
        let start = random_params(&[3], 15);
        let m = 0.9;
        let mut t = TeacherState::new(&start, m, 1.0).unwrap();
        let gap0 = start.distance(&student);
        for n in 1..=20 {
            t.ema_update(&student).unwrap();
            let expected = gap0 * m.powi(n);
            assert!((t.params.distance(&student) - expected).abs() <= 1e-9);
        }
    }

    #[test]
    fn teacher_targets() {
        let student = random_params(&[3], 16);
        let x = [0.4, 0.4, -0.2];
        let t = TeacherState::new(&student, 0.999, 1.0).unwrap();
        assert_eq!(t.target(&x).unwrap(), forward(&student, &x).unwrap().p);

        // two-class teacher with softmax [0.6, 0.4]
        let head = Matrix::from_vec(2, 1, vec![(0.6f64 / 0.4).ln(), 0.0]).unwrap();
        let params = ModelParams {
            encoder: vec![],
            head,
        };
        let t = TeacherState::new(&params, 0.5, 0.7).unwrap();
        let q = t.target(&[1.0]).unwrap();
        let a = 0.6f64.powf(1.0 / 0.7);
        let b = 0.4f64.powf(1.0 / 0.7);
        assert!((q.as_slice()[0] - a / (a + b)).abs() < 1e-12);
    }

    #[test]
    fn teacher_rejects_bad_config() {
        let p = random_params(&[2], 17);
        assert!(TeacherState::new(&p, 1.5, 0.7).is_err());
        assert!(TeacherState::new(&p, 0.9, 0.0).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let params = random_params(&[4, 3], 18);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.json");
        Checkpoint::from_params(&params).save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap().to_params().unwrap();
        assert_eq!(back, params);
        assert_eq!(back.architecture(), arch(&[4, 3]));
    }
}
