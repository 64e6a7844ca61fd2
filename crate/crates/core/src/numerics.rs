//! Scalar and vector primitives shared by the rest of the crate.
//!
//! Everything here is a pure function. Probabilities are clamped at
//! [`PROB_FLOOR`] before any logarithm is taken.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RgcError};

/// Floor applied to probabilities before taking a log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Additive stabilizer used by standardization.
pub const ZSCORE_EPS: f64 = 1e-8;

const SUM_TOL: f64 = 1e-9;

/// A categorical distribution over `K` classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(RgcError::input("probability vector is empty"));
        }
        if let Some(bad) = entries.iter().find(|&&e| !(0.0..=1.0).contains(&e)) {
            return Err(RgcError::input(format!(
                "probability entry {bad} outside [0, 1]"
            )));
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(RgcError::input(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(Self(entries))
    }

    /// The one-hot vector `e_class` over `k` classes.
    pub fn one_hot(k: usize, class: usize) -> Result<Self> {
        if class >= k {
            return Err(RgcError::input(format!(
                "class {class} out of range for K={k}"
            )));
        }
        let mut v = vec![0.0; k];
        v[class] = 1.0;
        Ok(Self(v))
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Index of the largest entry; ties resolve to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }

    /// `self - other`, elementwise.
    pub fn residual(&self, other: &ProbVector) -> Vec<f64> {
        self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()
    }
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = RgcError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        ProbVector::new(v)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Self {
        p.0
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(RgcError::input(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// `u v^T`.
    pub fn outer(u: &[f64], v: &[f64]) -> Self {
        let data = u
            .iter()
            .flat_map(|&a| v.iter().map(move |&b| a * b))
            .collect();
        Self {
            rows: u.len(),
            cols: v.len(),
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `self * x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        self.data
            .chunks_exact(self.cols)
            .map(|row| dot(row, x))
            .collect()
    }

    /// `self^T * y`.
    pub fn matvec_t(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (row, &yr) in self.data.chunks_exact(self.cols).zip(y) {
            for (o, &w) in out.iter_mut().zip(row) {
                *o += w * yr;
            }
        }
        out
    }

    /// Frobenius inner product `<self, other>`.
    pub fn inner(&self, other: &Matrix) -> f64 {
        debug_assert_eq!(self.shape(), other.shape());
        dot(&self.data, &other.data)
    }

    pub fn frobenius_sq(&self) -> f64 {
        norm_sq(&self.data)
    }

    pub fn frobenius(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!(self.shape(), other.shape());
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Matrix) {
        debug_assert_eq!(self.shape(), other.shape());
        axpy(&mut self.data, alpha, &other.data);
    }
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn norm_sq(u: &[f64]) -> f64 {
    dot(u, u)
}

/// `y += alpha * x`.
pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population standard deviation.
pub fn population_std(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> Result<ProbVector> {
    if logits.len() < 2 {
        return Err(RgcError::input("softmax needs at least two logits"));
    }
    if logits.iter().any(|z| !z.is_finite()) {
        return Err(RgcError::input("softmax received a non-finite logit"));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(ProbVector(exps.into_iter().map(|e| e / total).collect()))
}

/// Temperature sharpening: `p_k^(1/T)` renormalized.
pub fn sharpen(p: &ProbVector, temperature: f64) -> Result<ProbVector> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(RgcError::config(
            "temperature",
            format!("must be a positive finite number, got {temperature}"),
        ));
    }
    if temperature == 1.0 {
        return Ok(p.clone());
    }
    // Work in log space so small temperatures do not underflow the leading entry.
    let logs: Vec<f64> = p
        .as_slice()
        .iter()
        .map(|&x| {
            if x > 0.0 {
                x.ln() / temperature
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(RgcError::input("cannot sharpen an all-zero vector"));
    }
    let exps: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(ProbVector(exps.into_iter().map(|e| e / total).collect()))
}

/// Soft-label cross-entropy `-sum_k target_k ln p_k`.
pub fn cross_entropy(p: &ProbVector, target: &ProbVector) -> Result<f64> {
    if p.len() != target.len() {
        return Err(RgcError::input(format!(
            "cross-entropy dimension mismatch: {} vs {}",
            p.len(),
            target.len()
        )));
    }
    Ok(p.as_slice()
        .iter()
        .zip(target.as_slice())
        .filter(|(_, &t)| t != 0.0)
        .map(|(&pk, &t)| -t * pk.max(PROB_FLOOR).ln())
        .sum())
}

/// Observed-label cross-entropy `-ln p_label`, without building a one-hot target.
pub fn hard_cross_entropy(p: &ProbVector, label: usize) -> f64 {
    -p.as_slice()[label].max(PROB_FLOOR).ln()
}

/// Stabilized cosine `<u,v> / (|u||v| + eps)`.
pub fn cosine(u: &[f64], v: &[f64], eps: f64) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    let denom = norm_sq(u).sqrt() * norm_sq(v).sqrt() + eps;
    if denom == 0.0 {
        return 0.0;
    }
    dot(u, v) / denom
}

/// Standardize with the population standard deviation plus [`ZSCORE_EPS`].
pub fn zscore(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(RgcError::input(format!(
            "zscore needs at least two values, got {}",
            values.len()
        )));
    }
    let m = mean(values);
    let sd = population_std(values);
    Ok(values.iter().map(|v| (v - m) / (sd + ZSCORE_EPS)).collect())
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
