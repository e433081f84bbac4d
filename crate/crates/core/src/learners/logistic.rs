use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    input_vector, BaseLearner, ChainLayout, Example, PredictionResult, SparseVector, TrainingData,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogisticParams {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            epochs: 20,
            learning_rate: 0.1,
            l2: 1e-4,
        }
    }
}

impl LogisticParams {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument(
                "logistic epochs must be >= 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "l2 must be >= 0, got {}",
                self.l2
            )));
        }
        Ok(())
    }
}

/// Multinomial logistic regression trained by seeded SGD on the
/// sample-weighted cross-entropy
/// `sum_i w_i * CE(y_i, softmax(W x_i + b)) + l2/2 * |W|^2` (weights
/// normalized to sum to one).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "LogisticState", try_from = "LogisticState")]
pub struct LogisticRegression {
    n_classes: usize,
    dimension: usize,
    chain: Option<ChainLayout>,
    l2: f64,
    /// Row-major `n_classes x dimension`.
    weights: Vec<f64>,
    bias: Vec<f64>,
    epoch_losses: Vec<f64>,
}

impl LogisticRegression {
    /// All-zero parameters.
    pub fn zeros(n_classes: usize, base_dimension: usize, chain: bool, l2: f64) -> Self {
        let chain = chain.then_some(ChainLayout {
            base_dimension,
            n_classes,
        });
        let dimension = chain.map_or(base_dimension, |l| l.total_dimension());
        Self {
            n_classes,
            dimension,
            chain,
            l2,
            weights: vec![0.0; n_classes * dimension],
            bias: vec![0.0; n_classes],
            epoch_losses: Vec::new(),
        }
    }

    pub fn fit(
        data: &TrainingData<'_>,
        weights: &[f64],
        params: &LogisticParams,
        seed: u64,
    ) -> Result<Self> {
        params.validate()?;
        data.check_weights(weights)?;
        let mut model = Self::zeros(
            data.n_classes,
            data.base_dimension,
            data.has_chain(),
            params.l2,
        );
        let inputs: Vec<SparseVector> = data
            .examples
            .iter()
            .map(|e| input_vector(model.chain.as_ref(), e))
            .collect();

        // Zero-weight samples are left out of the schedule entirely.
        let active: Vec<usize> = (0..data.len()).filter(|&i| weights[i] > 0.0).collect();
        let active_mass: f64 = active.iter().map(|&i| weights[i]).sum();
        let per_step_scale = active.len() as f64 / active_mass;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order = active.clone();
        let lr = params.learning_rate;
        for epoch in 0..params.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let x = &inputs[i];
                let p = model.probabilities(x);
                let s = weights[i] * per_step_scale;
                for (k, &pk) in p.iter().enumerate() {
                    let residual = s * (pk - f64::from(u8::from(data.labels[i] == k)));
                    let row = k * model.dimension;
                    for (f, v) in x.iter() {
                        let w = &mut model.weights[row + f as usize];
                        *w -= lr * (residual * v + model.l2 * *w);
                    }
                    model.bias[k] -= lr * residual;
                }
            }
            let loss = model.loss_on(&inputs, &data.labels, weights);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, loss });
            }
            model.epoch_losses.push(loss);
        }
        Ok(model)
    }

    /// Weighted objective after each training epoch.
    pub fn epoch_losses(&self) -> &[f64] {
        &self.epoch_losses
    }

    pub fn n_parameters(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    /// Flat parameters: weights (row-major) then biases.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = self.weights.clone();
        p.extend_from_slice(&self.bias);
        p
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_parameters() {
            return Err(Error::LengthMismatch {
                expected: self.n_parameters(),
                actual: params.len(),
            });
        }
        let (w, b) = params.split_at(self.weights.len());
        self.weights.copy_from_slice(w);
        self.bias.copy_from_slice(b);
        Ok(())
    }

    fn logits(&self, x: &SparseVector) -> Vec<f64> {
        (0..self.n_classes)
            .map(|k| {
                let row = &self.weights[k * self.dimension..(k + 1) * self.dimension];
                x.dot(row) + self.bias[k]
            })
            .collect()
    }

    fn probabilities(&self, x: &SparseVector) -> Vec<f64> {
        let logits = self.logits(x);
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / total).collect()
    }

    fn loss_on(&self, inputs: &[SparseVector], labels: &[usize], weights: &[f64]) -> f64 {
        let total: f64 = weights.iter().sum();
        let mut loss = 0.0;
        for ((x, &y), &w) in inputs.iter().zip(labels).zip(weights) {
            if w == 0.0 {
                continue;
            }
            let logits = self.logits(x);
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
            loss += (w / total) * (lse - logits[y]);
        }
        loss + 0.5 * self.l2 * self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// The weighted objective on `data`.
    pub fn weighted_loss(&self, data: &TrainingData<'_>, weights: &[f64]) -> Result<f64> {
        data.check_weights(weights)?;
        let inputs: Vec<SparseVector> = data
            .examples
            .iter()
            .map(|e| input_vector(self.chain.as_ref(), e))
            .collect();
        Ok(self.loss_on(&inputs, &data.labels, weights))
    }

    /// Analytic gradient of [`Self::weighted_loss`], laid out like
    /// [`Self::parameters`].
    pub fn weighted_loss_gradient(
        &self,
        data: &TrainingData<'_>,
        weights: &[f64],
    ) -> Result<Vec<f64>> {
        data.check_weights(weights)?;
        let total: f64 = weights.iter().sum();
        let mut grad = vec![0.0; self.n_parameters()];
        let bias_offset = self.weights.len();
        for ((e, &y), &w) in data.examples.iter().zip(&data.labels).zip(weights) {
            if w == 0.0 {
                continue;
            }
            let x = input_vector(self.chain.as_ref(), e);
            let p = self.probabilities(&x);
            let wn = w / total;
            for k in 0..self.n_classes {
                let r = wn * (p[k] - f64::from(u8::from(y == k)));
                for (f, v) in x.iter() {
                    grad[k * self.dimension + f as usize] += r * v;
                }
                grad[bias_offset + k] += r;
            }
        }
        for (g, w) in grad.iter_mut().zip(&self.weights) {
            *g += self.l2 * w;
        }
        Ok(grad)
    }

    /// Coefficient for `(class, feature)`.
    pub fn coefficient(&self, class: usize, feature: usize) -> f64 {
        self.weights[class * self.dimension + feature]
    }
}

impl BaseLearner for LogisticRegression {
    fn predict(&self, example: &Example<'_>) -> Result<PredictionResult> {
        let x = input_vector(self.chain.as_ref(), example);
        Ok(PredictionResult::from_log_scores(&self.logits(&x)))
    }

    fn uses_chain(&self) -> bool {
        self.chain.is_some()
    }
}

/// Serialized form: only nonzero coefficients are stored.
#[derive(Serialize, Deserialize)]
struct LogisticState {
    n_classes: usize,
    dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    chain: Option<ChainLayout>,
    l2: f64,
    bias: Vec<f64>,
    /// `(class, feature, value)`.
    coefficients: Vec<(u32, u32, f64)>,
}

impl From<LogisticRegression> for LogisticState {
    fn from(m: LogisticRegression) -> Self {
        let coefficients = m
            .weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w != 0.0)
            .map(|(i, &w)| ((i / m.dimension) as u32, (i % m.dimension) as u32, w))
            .collect();
        Self {
            n_classes: m.n_classes,
            dimension: m.dimension,
            chain: m.chain,
            l2: m.l2,
            bias: m.bias,
            coefficients,
        }
    }
}

impl TryFrom<LogisticState> for LogisticRegression {
    type Error = String;

    fn try_from(s: LogisticState) -> std::result::Result<Self, String> {
        if s.bias.len() != s.n_classes {
            return Err("bias length does not match class count".into());
        }
        let mut weights = vec![0.0; s.n_classes * s.dimension];
        for (k, f, v) in s.coefficients {
            let (k, f) = (k as usize, f as usize);
            if k >= s.n_classes || f >= s.dimension {
                return Err(format!("coefficient ({k}, {f}) out of range"));
            }
            weights[k * s.dimension + f] = v;
        }
        Ok(Self {
            n_classes: s.n_classes,
            dimension: s.dimension,
            chain: s.chain,
            l2: s.l2,
            weights,
            bias: s.bias,
            epoch_losses: Vec::new(),
        })
    }
}
