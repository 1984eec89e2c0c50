//! Binary logistic regression trained by full-batch gradient descent on the
//! L2-regularized mean cross-entropy.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::sgns::{log_sigmoid, sigmoid};
use crate::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticParams {
    pub l2: f64,
    pub epochs: usize,
    /// Step size; `None` uses the inverse of a Lipschitz bound of the gradient.
    pub lr: Option<f64>,
    pub seed: u64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            l2: 1e-2,
            epochs: 1000,
            lr: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2: f64,
}

impl LogisticModel {
    pub fn zeros(dim: usize, l2: f64) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
            l2,
        }
    }

    fn logit(&self, x: ndarray::ArrayView1<f64>) -> f64 {
        x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>() + self.bias
    }
}

fn check_labels(y: &[u8]) -> Result<()> {
    match y.iter().find(|&&l| l > 1) {
        Some(l) => Err(Error::InvalidInput(format!("label {l} is not 0 or 1"))),
        None => Ok(()),
    }
}

/// Objective value and gradient `(loss, d/dw, d/db)`.
pub fn logistic_loss_grad(model: &LogisticModel, x: &Matrix, y: &[u8]) -> (f64, Vec<f64>, f64) {
    let n = x.nrows().max(1) as f64;
    let mut gw = vec![0.0; model.weights.len()];
    let mut gb = 0.0;
    let mut loss = 0.0;
    for (row, &label) in x.outer_iter().zip(y) {
        let z = model.logit(row);
        let t = f64::from(label);
        loss -= t * log_sigmoid(z) + (1.0 - t) * log_sigmoid(-z);
        let g = sigmoid(z) - t;
        for (a, &v) in gw.iter_mut().zip(row.iter()) {
            *a += g * v;
        }
        gb += g;
    }
    loss /= n;
    gb /= n;
    let reg: f64 = model.weights.iter().map(|w| w * w).sum::<f64>() * model.l2 / 2.0;
    for (a, &w) in gw.iter_mut().zip(&model.weights) {
        *a = *a / n + model.l2 * w;
    }
    (loss + reg, gw, gb)
}

/// Returns the model and the per-epoch objective.
pub fn train_logistic(x: &Matrix, y: &[u8], params: &LogisticParams) -> Result<(LogisticModel, Vec<f64>)> {
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!("{} rows for {} labels", x.nrows(), y.len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("features must be finite".into()));
    }
    check_labels(y)?;
    let d = x.ncols();
    let mut r = rng::named(params.seed, "logistic");
    let mut model = LogisticModel {
        weights: (0..d).map(|_| r.random_range(-1e-3..1e-3)).collect(),
        bias: 0.0,
        l2: params.l2,
    };
    let lr = params.lr.unwrap_or_else(|| {
        let mean_sq = if x.nrows() > 0 {
            x.iter().map(|v| v * v).sum::<f64>() / x.nrows() as f64
        } else {
            0.0
        };
        1.0 / ((mean_sq + 1.0) / 4.0 + params.l2)
    });
    let mut curve = Vec::with_capacity(params.epochs);
    for _ in 0..params.epochs {
        let (loss, gw, gb) = logistic_loss_grad(&model, x, y);
        curve.push(loss);
        for (w, g) in model.weights.iter_mut().zip(gw) {
            *w -= lr * g;
        }
        model.bias -= lr * gb;
    }
    Ok((model, curve))
}

/// Probability of class 1 per row.
pub fn predict_logistic(model: &LogisticModel, x: &Matrix) -> Result<Vec<f64>> {
    if x.ncols() != model.weights.len() {
        return Err(Error::Shape(format!(
            "model expects {} features, got {}",
            model.weights.len(),
            x.ncols()
        )));
    }
    Ok(x.outer_iter().map(|row| sigmoid(model.logit(row))).collect())
}
