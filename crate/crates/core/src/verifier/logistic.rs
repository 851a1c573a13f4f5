use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::verifier::dataset::LabeledExample;
use crate::verifier::features::{FeatureVector, FEATURE_DIM, FEATURE_SCHEMA};

const FILE_KIND: &str = "sprinter-verifier";
const FILE_VERSION: u32 = 1;

/// Single linear layer followed by a sigmoid; accepts when the score exceeds `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticVerifier {
    pub weights: [f64; FEATURE_DIM],
    pub bias: f64,
    pub tau: f64,
    pub lambda_train: f64,
}

impl LogisticVerifier {
    pub fn new(weights: [f64; FEATURE_DIM], bias: f64, tau: f64, lambda_train: f64) -> Result<Self> {
        check_tau(tau)?;
        Ok(Self {
            weights,
            bias,
            tau,
            lambda_train,
        })
    }

    pub fn score(&self, f: &FeatureVector) -> f64 {
        sigmoid(f.dot(&self.weights) + self.bias)
    }

    /// Strict comparison: a score equal to `tau` is a rejection.
    pub fn decide(&self, f: &FeatureVector) -> bool {
        self.score(f) > self.tau
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        Ok(Self { tau, ..self.clone() })
    }

    pub fn to_json(&self) -> String {
        let file = VerifierFile {
            kind: FILE_KIND.into(),
            version: FILE_VERSION,
            feature_schema: FEATURE_SCHEMA.into(),
            weights: self.weights.to_vec(),
            bias: self.bias,
            tau: self.tau,
            lambda_train: self.lambda_train,
        };
        let mut s = serde_json::to_string_pretty(&file).expect("verifier serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let file: VerifierFile =
            serde_json::from_str(text).map_err(|e| Error::format(path, e.to_string()))?;
        if file.kind != FILE_KIND || file.version != FILE_VERSION {
            return Err(Error::format(
                path,
                format!("expected {FILE_KIND} v{FILE_VERSION}, found {} v{}", file.kind, file.version),
            ));
        }
        if file.feature_schema != FEATURE_SCHEMA {
            return Err(Error::format(
                path,
                format!("feature schema {} is not {FEATURE_SCHEMA}", file.feature_schema),
            ));
        }
        let weights: [f64; FEATURE_DIM] = file
            .weights
            .try_into()
            .map_err(|_| Error::format(path, "wrong number of weights"))?;
        Self::new(weights, file.bias, file.tau, file.lambda_train)
            .map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }
}

#[derive(Serialize, Deserialize)]
struct VerifierFile {
    kind: String,
    version: u32,
    feature_schema: String,
    weights: Vec<f64>,
    bias: f64,
    tau: f64,
    lambda_train: f64,
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidTau(tau))
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Full-batch Adam on binary cross-entropy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub tau: f64,
    /// Label threshold the examples were generated with; recorded in the verifier.
    pub lambda_train: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            lr: 0.01,
            tau: 0.5,
            lambda_train: 1.2,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub initial_loss: f64,
    pub final_loss: f64,
    pub epochs: usize,
}

/// Fits a [`LogisticVerifier`].
///
/// Features are standardized for the optimizer and the scaling is folded back
/// into the returned weights, so the verifier consumes raw features. Weights
/// start at zero, which makes training deterministic.
pub fn train_logistic(
    examples: &[LabeledExample],
    cfg: &TrainConfig,
) -> Result<(LogisticVerifier, TrainReport)> {
    check_tau(cfg.tau)?;
    if cfg.epochs == 0 || !(cfg.lr.is_finite() && cfg.lr > 0.0) {
        return Err(Error::invalid("epochs and learning rate must be positive"));
    }
    let positives = examples.iter().filter(|e| e.label).count();
    if positives == 0 || positives == examples.len() {
        return Err(Error::DegenerateLabels);
    }

    let n = examples.len() as f64;
    let mut mean = [0.0; FEATURE_DIM];
    let mut scale = [0.0; FEATURE_DIM];
    for e in examples {
        for (m, x) in mean.iter_mut().zip(&e.features.0) {
            *m += x / n;
        }
    }
    for e in examples {
        for ((s, x), m) in scale.iter_mut().zip(&e.features.0).zip(&mean) {
            *s += (x - m).powi(2) / n;
        }
    }
    for s in &mut scale {
        *s = if *s > 1e-24 { s.sqrt() } else { 1.0 };
    }
    let xs: Vec<[f64; FEATURE_DIM]> = examples
        .iter()
        .map(|e| std::array::from_fn(|j| (e.features.0[j] - mean[j]) / scale[j]))
        .collect();
    let ys: Vec<f64> = examples.iter().map(|e| e.label as u8 as f64).collect();

    // params[0..DIM] are weights, params[DIM] is the bias
    let mut params = [0.0; FEATURE_DIM + 1];
    let mut m1 = [0.0; FEATURE_DIM + 1];
    let mut m2 = [0.0; FEATURE_DIM + 1];
    let initial_loss = bce(&params, &xs, &ys);
    let mut last_loss = initial_loss;

    for epoch in 1..=cfg.epochs {
        let mut grad = [0.0; FEATURE_DIM + 1];
        let mut loss = 0.0;
        for (x, &y) in xs.iter().zip(&ys) {
            let z = linear(&params, x);
            loss += bce_term(z, y);
            let err = sigmoid(z) - y;
            for j in 0..FEATURE_DIM {
                grad[j] += err * x[j] / n;
            }
            grad[FEATURE_DIM] += err / n;
        }
        last_loss = loss / n;
        let b1t = 1.0 - cfg.beta1.powi(epoch as i32);
        let b2t = 1.0 - cfg.beta2.powi(epoch as i32);
        for j in 0..=FEATURE_DIM {
            m1[j] = cfg.beta1 * m1[j] + (1.0 - cfg.beta1) * grad[j];
            m2[j] = cfg.beta2 * m2[j] + (1.0 - cfg.beta2) * grad[j] * grad[j];
            params[j] -= cfg.lr * (m1[j] / b1t) / ((m2[j] / b2t).sqrt() + cfg.eps);
        }
    }
    let final_loss = bce(&params, &xs, &ys).min(last_loss);

    let mut weights = [0.0; FEATURE_DIM];
    let mut bias = params[FEATURE_DIM];
    for j in 0..FEATURE_DIM {
        weights[j] = params[j] / scale[j];
        bias -= params[j] * mean[j] / scale[j];
    }
    let verifier = LogisticVerifier::new(weights, bias, cfg.tau, cfg.lambda_train)?;
    Ok((
        verifier,
        TrainReport {
            initial_loss,
            final_loss,
            epochs: cfg.epochs,
        },
    ))
}

fn linear(params: &[f64; FEATURE_DIM + 1], x: &[f64; FEATURE_DIM]) -> f64 {
    x.iter().zip(params).map(|(a, b)| a * b).sum::<f64>() + params[FEATURE_DIM]
}

/// Numerically stable `−[y log σ(z) + (1−y) log(1−σ(z))]`.
fn bce_term(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

fn bce(params: &[f64; FEATURE_DIM + 1], xs: &[[f64; FEATURE_DIM]], ys: &[f64]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(x, &y)| bce_term(linear(params, x), y))
        .sum::<f64>()
        / xs.len() as f64
}
