//! Two-layer tanh perceptron with softmax cross-entropy and hand-written
//! backpropagation.
//!
//! Parameters are flattened as `[W1 (hidden x in), b1, W2 (classes x hidden), b2]`,
//! all row-major.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{check_dim, SampleToken, StochasticProblem};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::vector::Vector;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    n_in: usize,
    n_classes: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
}

impl LabeledSet {
    /// `features` holds one row of `n_in` values per label.
    pub fn new(n_in: usize, n_classes: usize, features: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        if n_in == 0 || n_classes == 0 {
            return Err(Error::InvalidProblem("dataset dimensions must be >= 1".into()));
        }
        if labels.is_empty() {
            return Err(Error::InvalidProblem("dataset is empty".into()));
        }
        if features.len() != n_in * labels.len() {
            return Err(Error::DimensionMismatch {
                expected: n_in * labels.len(),
                got: features.len(),
            });
        }
        if let Some(i) = labels.iter().position(|&l| l >= n_classes) {
            return Err(Error::InvalidProblem(format!(
                "label {} of example {i} is out of range for {n_classes} classes",
                labels[i]
            )));
        }
        if let Some(i) = features.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            n_in,
            n_classes,
            features,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_in..(i + 1) * self.n_in]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}

/// Isotropic unit-variance Gaussian classes centred at `separation * u_k`.
///
/// For `n_in >= 2` the unit directions `u_k` are spread evenly on the circle in
/// the first two coordinates; for `n_in == 1` they are spread evenly on `[-1, 1]`.
/// Rows are grouped by class.
pub fn gaussian_blobs(
    n_per_class: usize,
    n_classes: usize,
    n_in: usize,
    separation: f64,
    rng: &mut RngStream,
) -> Result<LabeledSet> {
    if n_per_class == 0 || n_classes == 0 || n_in == 0 {
        return Err(Error::InvalidProblem("blob counts must be >= 1".into()));
    }
    let mut features = Vec::with_capacity(n_per_class * n_classes * n_in);
    let mut labels = Vec::with_capacity(n_per_class * n_classes);
    for k in 0..n_classes {
        let mut center = vec![0.0; n_in];
        if n_in >= 2 {
            let angle = 2.0 * core::f64::consts::PI * k as f64 / n_classes as f64;
            center[0] = separation * libm::cos(angle);
            center[1] = separation * libm::sin(angle);
        } else if n_classes > 1 {
            center[0] = separation * (-1.0 + 2.0 * k as f64 / (n_classes - 1) as f64);
        }
        for _ in 0..n_per_class {
            features.extend(center.iter().map(|&c| c + rng.standard_normal()));
            labels.push(k);
        }
    }
    LabeledSet::new(n_in, n_classes, features, labels)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpProblem {
    n_in: usize,
    n_hidden: usize,
    n_classes: usize,
    train: LabeledSet,
    holdout: Option<LabeledSet>,
    batch_size: usize,
}

impl MlpProblem {
    pub fn new(n_in: usize, n_hidden: usize, n_classes: usize, train: LabeledSet) -> Result<Self> {
        if n_in == 0 || n_hidden == 0 || n_classes == 0 {
            return Err(Error::InvalidProblem("network dimensions must be >= 1".into()));
        }
        Self::check_set(n_in, n_classes, &train)?;
        let batch_size = train.len().min(32);
        Ok(Self {
            n_in,
            n_hidden,
            n_classes,
            train,
            holdout: None,
            batch_size,
        })
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Result<Self> {
        if batch_size == 0 || batch_size > self.train.len() {
            return Err(Error::InvalidProblem(format!(
                "batch size {batch_size} must be in 1..={}",
                self.train.len()
            )));
        }
        self.batch_size = batch_size;
        Ok(self)
    }

    /// Scores trials on `holdout` instead of the training set.
    pub fn with_holdout(mut self, holdout: LabeledSet) -> Result<Self> {
        Self::check_set(self.n_in, self.n_classes, &holdout)?;
        self.holdout = Some(holdout);
        Ok(self)
    }

    fn check_set(n_in: usize, n_classes: usize, set: &LabeledSet) -> Result<()> {
        if set.n_in() != n_in {
            return Err(Error::DimensionMismatch {
                expected: n_in,
                got: set.n_in(),
            });
        }
        if set.n_classes() > n_classes {
            return Err(Error::DimensionMismatch {
                expected: n_classes,
                got: set.n_classes(),
            });
        }
        Ok(())
    }

    pub fn n_params(n_in: usize, n_hidden: usize, n_classes: usize) -> usize {
        (n_in + 1) * n_hidden + (n_hidden + 1) * n_classes
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn train(&self) -> &LabeledSet {
        &self.train
    }

    /// Class probabilities for one input.
    pub fn predict(&self, w: &Vector, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), w)?;
        let mut hidden = vec![0.0; self.n_hidden];
        let mut probs = vec![0.0; self.n_classes];
        self.forward(w.as_slice(), x, 0, &mut hidden, &mut probs);
        Ok(probs)
    }

    pub fn mean_loss_on(&self, w: &Vector, set: &LabeledSet) -> Result<f64> {
        check_dim(self.dim(), w)?;
        let idx: Vec<usize> = (0..set.len()).collect();
        Ok(self.accumulate(w.as_slice(), set, &idx, None))
    }

    pub fn error_rate_on(&self, w: &Vector, set: &LabeledSet) -> Result<f64> {
        let mut wrong = 0usize;
        for i in 0..set.len() {
            let probs = self.predict(w, set.row(i))?;
            let best = probs
                .iter()
                .enumerate()
                .fold(0, |b, (k, &p)| if p > probs[b] { k } else { b });
            if best != set.label(i) {
                wrong += 1;
            }
        }
        Ok(wrong as f64 / set.len() as f64)
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.n_hidden * self.n_in;
        let w2 = b1 + self.n_hidden;
        let b2 = w2 + self.n_classes * self.n_hidden;
        (b1, w2, b2)
    }

    /// Fills `hidden` with tanh activations and `probs` with the softmax output;
    /// returns `log softmax(z)[label]` computed from the logits.
    fn forward(&self, w: &[f64], x: &[f64], label: usize, hidden: &mut [f64], probs: &mut [f64]) -> f64 {
        let (ob1, ow2, ob2) = self.offsets();
        for (j, h) in hidden.iter_mut().enumerate() {
            let row = &w[j * self.n_in..(j + 1) * self.n_in];
            let pre: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[ob1 + j];
            *h = libm::tanh(pre);
        }
        for (k, z) in probs.iter_mut().enumerate() {
            let row = &w[ow2 + k * self.n_hidden..ow2 + (k + 1) * self.n_hidden];
            *z = row.iter().zip(hidden.iter()).map(|(a, b)| a * b).sum::<f64>() + w[ob2 + k];
        }
        let zmax = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z_label = probs.get(label).copied().unwrap_or(zmax);
        let mut total = 0.0;
        for z in probs.iter_mut() {
            *z = libm::exp(*z - zmax);
            total += *z;
        }
        for z in probs.iter_mut() {
            *z /= total;
        }
        z_label - zmax - libm::log(total)
    }

    /// Mean cross-entropy over `rows`; adds the mean gradient into `grad` when given.
    fn accumulate(&self, w: &[f64], set: &LabeledSet, rows: &[usize], mut grad: Option<&mut [f64]>) -> f64 {
        let (ob1, ow2, ob2) = self.offsets();
        let scale = 1.0 / rows.len() as f64;
        let mut hidden = vec![0.0; self.n_hidden];
        let mut probs = vec![0.0; self.n_classes];
        let mut dhidden = vec![0.0; self.n_hidden];
        let mut loss = 0.0;
        for &r in rows {
            let x = set.row(r);
            let y = set.label(r);
            loss -= self.forward(w, x, y, &mut hidden, &mut probs);
            let Some(g) = grad.as_deref_mut() else {
                continue;
            };
            dhidden.iter_mut().for_each(|d| *d = 0.0);
            for k in 0..self.n_classes {
                let dz = (probs[k] - if k == y { 1.0 } else { 0.0 }) * scale;
                g[ob2 + k] += dz;
                let base = ow2 + k * self.n_hidden;
                for j in 0..self.n_hidden {
                    g[base + j] += dz * hidden[j];
                    dhidden[j] += dz * w[base + j];
                }
            }
            for j in 0..self.n_hidden {
                let dpre = dhidden[j] * (1.0 - hidden[j] * hidden[j]);
                g[ob1 + j] += dpre;
                let base = j * self.n_in;
                for (i, &xi) in x.iter().enumerate() {
                    g[base + i] += dpre * xi;
                }
            }
        }
        loss * scale
    }

    fn rows<'a>(&self, token: &'a SampleToken) -> Result<&'a [usize]> {
        match token {
            SampleToken::Batch(rows) if !rows.is_empty() && rows.iter().all(|&r| r < self.train.len()) => {
                Ok(rows)
            }
            other => Err(Error::InvalidProblem(format!("not a valid mini-batch token: {other:?}"))),
        }
    }

    fn all_rows(&self) -> Vec<usize> {
        (0..self.train.len()).collect()
    }
}

impl StochasticProblem for MlpProblem {
    fn dim(&self) -> usize {
        Self::n_params(self.n_in, self.n_hidden, self.n_classes)
    }

    fn sample(&self, rng: &mut RngStream) -> SampleToken {
        SampleToken::Batch(rand::seq::index::sample(rng, self.train.len(), self.batch_size).into_vec())
    }

    fn loss(&self, w: &Vector, token: &SampleToken) -> Result<f64> {
        check_dim(self.dim(), w)?;
        Ok(self.accumulate(w.as_slice(), &self.train, self.rows(token)?, None))
    }

    fn grad(&self, w: &Vector, token: &SampleToken) -> Result<Vector> {
        check_dim(self.dim(), w)?;
        let mut g = vec![0.0; self.dim()];
        self.accumulate(w.as_slice(), &self.train, self.rows(token)?, Some(&mut g));
        Vector::new(g)
    }

    fn full_grad(&self, w: &Vector) -> Result<Vector> {
        self.grad(w, &SampleToken::Batch(self.all_rows()))
    }

    fn full_loss(&self, w: &Vector) -> Result<f64> {
        self.loss(w, &SampleToken::Batch(self.all_rows()))
    }

    fn eval_loss(&self, w: &Vector) -> Result<f64> {
        match &self.holdout {
            Some(set) => self.mean_loss_on(w, set),
            None => self.full_loss(w),
        }
    }

    /// Glorot-style normal init `N(0, 1/fan_in)` for weights, zero biases.
    fn initial_point(&self, rng: &mut RngStream) -> Vector {
        let (ob1, ow2, ob2) = self.offsets();
        let mut w = vec![0.0; self.dim()];
        let s1 = 1.0 / libm::sqrt(self.n_in as f64);
        let s2 = 1.0 / libm::sqrt(self.n_hidden as f64);
        for x in &mut w[..ob1] {
            *x = s1 * rng.standard_normal();
        }
        for x in &mut w[ow2..ob2] {
            *x = s2 * rng.standard_normal();
        }
        Vector::from_raw(w)
    }
}
