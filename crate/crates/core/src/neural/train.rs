use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Graph, Model, NeuralError, ParamSet};
use crate::corpus::Polarity;
use crate::eval::roc_auc;
use crate::math::{ln, powi, sigmoid, sqrt};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub dropout: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            dropout: 0.0,
            epochs: 10,
            batch_size: 128,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(NeuralError::InvalidConfig(format!(
                "learning rate {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(NeuralError::InvalidConfig(format!("dropout {}", self.dropout)));
        }
        if self.batch_size == 0 {
            return Err(NeuralError::InvalidConfig("batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Adam with the usual defaults (beta 0.9 / 0.999, eps 1e-8).
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64, params: &ParamSet) -> Self {
        let zeros: Vec<Vec<f64>> = params.iter().map(|(_, t)| vec![0.0; t.len()]).collect();
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// Applies one update from the accumulated gradients, then clears them.
    pub fn step(&mut self, params: &mut ParamSet) {
        self.step += 1;
        let c1 = 1.0 - powi(self.beta1, self.step);
        let c2 = 1.0 - powi(self.beta2, self.step);
        for (k, (_, t)) in params.iter_mut().enumerate() {
            let Some(grad) = &mut t.grad else { continue };
            for (i, (x, g)) in t.data.iter_mut().zip(grad.iter_mut()).enumerate() {
                let m = &mut self.m[k][i];
                let v = &mut self.v[k][i];
                *m = self.beta1 * *m + (1.0 - self.beta1) * *g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * *g * *g;
                *x -= self.lr * (*m / c1) / (sqrt(*v / c2) + self.eps);
                *g = 0.0;
            }
        }
    }
}

/// Per-epoch training loss and validation ROC-AUC (`None` when no
/// validation data was given or the AUC is undefined).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainReport {
    pub epoch_loss: Vec<f64>,
    pub validation_auc: Vec<Option<f64>>,
}

fn targets(labels: &[Polarity]) -> Vec<f64> {
    labels.iter().map(|l| l.as_f64()).collect()
}

/// Mini-batch training on mean binary cross-entropy. Deterministic for a
/// fixed `cfg.seed`; the parameters after the last epoch are kept.
pub fn train<M: Model>(
    model: &mut M,
    inputs: &[M::Input],
    labels: &[Polarity],
    validation: Option<(&[M::Input], &[Polarity])>,
    cfg: &TrainConfig,
) -> Result<TrainReport, NeuralError> {
    cfg.validate()?;
    if inputs.len() != labels.len() {
        return Err(NeuralError::Shape(format!(
            "{} inputs, {} labels",
            inputs.len(),
            labels.len()
        )));
    }
    if inputs.is_empty() {
        return Err(NeuralError::EmptyInput);
    }
    model.set_dropout(cfg.dropout);
    let y = targets(labels);
    let mut rng = crate::rng::derive(cfg.seed, 1);
    let mut adam = Adam::new(cfg.learning_rate, model.params());
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut report = TrainReport::default();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&M::Input> = chunk.iter().map(|&i| &inputs[i]).collect();
            let batch_y: Vec<f64> = chunk.iter().map(|&i| y[i]).collect();
            let mut g = Graph::new();
            let vars = model.params().bind(&mut g)?;
            let logits = model.forward(&mut g, &vars, &batch, Some(&mut rng))?;
            let loss = g.bce_with_logits(logits, &batch_y)?;
            let value = g.scalar(loss);
            if !value.is_finite() {
                let bad = g.value(logits).iter().filter(|x| !x.is_finite()).count();
                return Err(NeuralError::NanLoss {
                    epoch,
                    batch: b,
                    detail: format!("loss {value}, {bad} non-finite logits of {}", chunk.len()),
                });
            }
            total += value * chunk.len() as f64;
            g.backward(loss)?;
            model.params_mut().collect_grads(&g, &vars);
            adam.step(model.params_mut());
        }
        report.epoch_loss.push(total / inputs.len() as f64);
        let auc = match validation {
            Some((vx, vy)) => roc_auc(&predict(model, vx, cfg.batch_size)?, vy).ok(),
            None => None,
        };
        report.validation_auc.push(auc);
    }
    Ok(report)
}

/// Positive-class probabilities, dropout off.
pub fn predict<M: Model>(model: &M, inputs: &[M::Input], batch_size: usize) -> Result<Vec<f64>, NeuralError> {
    let mut out = Vec::with_capacity(inputs.len());
    for chunk in inputs.chunks(batch_size.max(1)) {
        let batch: Vec<&M::Input> = chunk.iter().collect();
        let mut g = Graph::new();
        let vars = model.params().bind(&mut g)?;
        let logits = model.forward(&mut g, &vars, &batch, None)?;
        out.extend(g.value(logits).iter().map(|&x| sigmoid(x)));
    }
    Ok(out)
}

pub const PROBABILITY_CLAMP: f64 = 1e-12;

/// Log-loss of a probability, clamped to `[1e-12, 1 - 1e-12]` so it is
/// always finite.
pub fn logistic_loss(p: f64, y: f64) -> f64 {
    let p = p.clamp(PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP);
    -(y * ln(p) + (1.0 - y) * ln(1.0 - p))
}

/// Derivative of [`logistic_loss`] in `p` (zero outside the clamp).
pub fn logistic_loss_grad(p: f64, y: f64) -> f64 {
    if !(PROBABILITY_CLAMP..=1.0 - PROBABILITY_CLAMP).contains(&p) {
        return 0.0;
    }
    -(y / p) + (1.0 - y) / (1.0 - p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub dropout: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOutcome {
    pub point: GridPoint,
    pub score: f64,
    /// Epoch count that produced `score`.
    pub epochs: usize,
}

/// Every combination, ordered by dropout then learning rate (ascending).
pub fn grid_points(dropouts: &[f64], learning_rates: &[f64]) -> Vec<GridPoint> {
    let mut d = dropouts.to_vec();
    let mut l = learning_rates.to_vec();
    d.sort_by(f64::total_cmp);
    l.sort_by(f64::total_cmp);
    d.iter()
        .flat_map(|&dropout| l.iter().map(move |&learning_rate| GridPoint { dropout, learning_rate }))
        .collect()
}

fn score_trace(trace: &[f64], select_epochs: bool) -> (f64, usize) {
    let clean = |x: f64| if x.is_nan() { f64::NEG_INFINITY } else { x };
    if select_epochs {
        let mut best = (f64::NEG_INFINITY, trace.len());
        for (e, &x) in trace.iter().enumerate() {
            if clean(x) > best.0 {
                best = (clean(x), e + 1);
            }
        }
        best
    } else {
        (trace.last().map_or(f64::NEG_INFINITY, |&x| clean(x)), trace.len())
    }
}

/// Picks the best of already evaluated grid points. `results` must follow
/// [`grid_points`] order; a point wins only with a strictly higher
/// score, so ties go to lower dropout and then lower learning rate.
/// With `select_epochs` each trace contributes its best epoch, otherwise
/// its last.
pub fn select_best(results: &[(GridPoint, Vec<f64>)], select_epochs: bool) -> Result<GridOutcome, NeuralError> {
    let mut best: Option<GridOutcome> = None;
    for (point, trace) in results {
        let (score, epochs) = score_trace(trace, select_epochs);
        if best.as_ref().is_none_or(|b| score > b.score) {
            best = Some(GridOutcome {
                point: *point,
                score,
                epochs,
            });
        }
    }
    best.ok_or(NeuralError::EmptyGrid)
}

/// Evaluates `evaluate` (returning a per-epoch validation ROC-AUC trace,
/// NaN for undefined) on every grid point and returns the best.
pub fn grid_search<F>(
    dropouts: &[f64],
    learning_rates: &[f64],
    select_epochs: bool,
    mut evaluate: F,
) -> Result<GridOutcome, NeuralError>
where
    F: FnMut(GridPoint) -> Result<Vec<f64>, NeuralError>,
{
    let points = grid_points(dropouts, learning_rates);
    let mut results = Vec::with_capacity(points.len());
    for p in points {
        results.push((p, evaluate(p)?));
    }
    select_best(&results, select_epochs)
}
