//! L2-regularized logistic regression on standardized feature vectors.

use crate::error::{Error, Result};
use crate::sampler::Label;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogisticParams {
    pub learn_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            learn_rate: 0.5,
            epochs: 300,
            l2: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogisticModel {
    /// Input columns that survived standardization (nonzero training std).
    pub kept: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticModel {
    pub fn train(data: &[(Vec<f64>, Label)], params: &LogisticParams) -> Result<Self> {
        if !data.iter().any(|(_, l)| *l == Label::Original) {
            return Err(Error::EmptyClass("original"));
        }
        if !data.iter().any(|(_, l)| *l == Label::Perturbed) {
            return Err(Error::EmptyClass("perturbed"));
        }
        let dim = data[0].0.len();
        let n = data.len() as f64;
        let mut kept = Vec::new();
        let mut mean = Vec::new();
        let mut std = Vec::new();
        for j in 0..dim {
            let mu = data.iter().map(|(x, _)| x[j]).sum::<f64>() / n;
            let var = data.iter().map(|(x, _)| (x[j] - mu).powi(2)).sum::<f64>() / n;
            if var > 1e-24 {
                kept.push(j);
                mean.push(mu);
                std.push(var.sqrt());
            }
        }
        let mut model = Self {
            weights: vec![0.0; kept.len()],
            kept,
            mean,
            std,
            bias: 0.0,
        };
        let rows: Vec<(Vec<f64>, f64)> = data
            .iter()
            .map(|(x, l)| (model.standardize(x), if *l == Label::Original { 1.0 } else { 0.0 }))
            .collect();
        let k = model.weights.len();
        for epoch in 0..params.epochs {
            let mut grad = vec![0.0; k];
            let mut grad_b = 0.0;
            let mut loss = 0.0;
            for (z, y) in &rows {
                let s = model.score_standardized(z);
                loss += softplus(s) - y * s;
                let d = sigmoid(s) - y;
                for (g, x) in grad.iter_mut().zip(z) {
                    *g += d * x;
                }
                grad_b += d;
            }
            loss = loss / n + 0.5 * params.l2 * model.weights.iter().map(|w| w * w).sum::<f64>();
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            for (w, g) in model.weights.iter_mut().zip(&grad) {
                *w -= params.learn_rate * (g / n + params.l2 * *w);
            }
            model.bias -= params.learn_rate * grad_b / n;
            if model.weights.iter().any(|w| !w.is_finite()) || !model.bias.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
        }
        Ok(model)
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        self.kept
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&j, (m, s))| (x[j] - m) / s)
            .collect()
    }

    fn score_standardized(&self, z: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(z).map(|(w, x)| w * x).sum::<f64>()
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        self.score_standardized(&self.standardize(x))
    }

    /// Sign of the linear score; zero answers [`Label::Original`].
    pub fn predict(&self, x: &[f64]) -> Label {
        if self.score(x) >= 0.0 {
            Label::Original
        } else {
            Label::Perturbed
        }
    }
}
