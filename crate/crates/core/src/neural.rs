//! One-hidden-layer back-propagation network: sigmoid hidden units, softmax
//! output over the four BI-RADS classes, cross-entropy loss, mini-batch
//! gradient descent with momentum.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::BiRads;

pub const OUTPUT_COUNT: usize = 4;

/// Hidden-layer width for `inputs` features: `min(floor(4 + 0.75 * I), 2I - 1)`.
pub fn hidden_size(inputs: usize) -> usize {
    assert!(inputs >= 1, "network needs at least one input");
    ((16 + 3 * inputs) / 4).min(2 * inputs - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkShape {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
}

impl NetworkShape {
    /// The standard sizing for `inputs` features.
    pub fn for_inputs(inputs: usize) -> Self {
        Self { inputs, hidden: hidden_size(inputs), outputs: OUTPUT_COUNT }
    }

    /// Arbitrary hidden width; used for diagnostics such as gradient checks.
    pub fn with_hidden(inputs: usize, hidden: usize) -> Self {
        Self { inputs, hidden, outputs: OUTPUT_COUNT }
    }

    fn validate(&self) -> Result<()> {
        if self.inputs == 0 || self.hidden == 0 || self.outputs != OUTPUT_COUNT {
            return Err(Error::InvalidInput(format!("invalid network shape {self:?}")));
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        self.hidden * (self.inputs + 1) + self.outputs * (self.hidden + 1)
    }

    // Parameter layout: [w1 (H x I) | b1 (H) | w2 (O x H) | b2 (O)].
    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.hidden * self.inputs;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.outputs * self.hidden;
        (b1, w2, b2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub early_stop_patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            momentum: 0.9,
            max_epochs: 500,
            batch_size: 16,
            seed: 0,
            early_stop_patience: 50,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidInput("learning_rate must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidInput("momentum must be in [0, 1)".into()));
        }
        if self.max_epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidInput("max_epochs and batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs_run: usize,
    pub final_loss: f64,
}

/// Dense design matrix with class indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    inputs: usize,
    x: Vec<f64>,
    y: Vec<usize>,
}

impl Samples {
    pub fn new(inputs: usize, x: Vec<f64>, y: Vec<usize>) -> Result<Self> {
        if inputs == 0 || x.len() != inputs * y.len() {
            return Err(Error::DimensionMismatch { expected: inputs * y.len(), got: x.len() });
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= OUTPUT_COUNT) {
            return Err(Error::InvalidInput(format!("class index {bad} out of range")));
        }
        Ok(Self { inputs, x, y })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: &[BiRads]) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch(rows.len(), labels.len()));
        }
        let inputs = rows.first().map_or(0, |r| r.len());
        if let Some(r) = rows.iter().find(|r| r.len() != inputs) {
            return Err(Error::DimensionMismatch { expected: inputs, got: r.len() });
        }
        Self::new(inputs, rows.concat(), labels.iter().map(|l| l.index()).collect())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.inputs..(i + 1) * self.inputs]
    }

    pub fn label(&self, i: usize) -> usize {
        self.y[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.y
    }

    /// Keeps the given rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Self {
        let mut x = Vec::with_capacity(rows.len() * self.inputs);
        for &r in rows {
            x.extend_from_slice(self.row(r));
        }
        Self { inputs: self.inputs, x, y: rows.iter().map(|&r| self.y[r]).collect() }
    }

    /// Keeps the given 0-based columns, in the given order.
    pub fn project(&self, columns: &[usize]) -> Self {
        let mut x = Vec::with_capacity(self.len() * columns.len());
        for i in 0..self.len() {
            let row = self.row(i);
            x.extend(columns.iter().map(|&c| row[c]));
        }
        Self { inputs: columns.len(), x, y: self.y.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    shape: NetworkShape,
    params: Vec<f64>,
    pub training: TrainingMeta,
    /// Feature ids the inputs correspond to, when known.
    pub feature_ids: Vec<u16>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub class: BiRads,
    pub scores: [f64; OUTPUT_COUNT],
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn softmax_into(z: &mut [f64; OUTPUT_COUNT]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in z.iter_mut() {
        *v /= total;
    }
}

impl Model {
    /// Uniform weights in `±1/sqrt(fan_in)`, zero biases.
    pub fn init(shape: NetworkShape, seed: u64) -> Result<Self> {
        shape.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; shape.parameter_count()];
        let (b1, w2, b2) = shape.offsets();
        let lim1 = 1.0 / (shape.inputs as f64).sqrt();
        let lim2 = 1.0 / (shape.hidden as f64).sqrt();
        for p in &mut params[..b1] {
            *p = rng.random_range(-lim1..lim1);
        }
        for p in &mut params[w2..b2] {
            *p = rng.random_range(-lim2..lim2);
        }
        Ok(Self {
            shape,
            params,
            training: TrainingMeta { seed, epochs_run: 0, final_loss: f64::NAN },
            feature_ids: Vec::new(),
        })
    }

    pub fn from_parameters(shape: NetworkShape, params: Vec<f64>) -> Result<Self> {
        shape.validate()?;
        if params.len() != shape.parameter_count() {
            return Err(Error::DimensionMismatch {
                expected: shape.parameter_count(),
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("non-finite weight".into()));
        }
        Ok(Self {
            shape,
            params,
            training: TrainingMeta { seed: 0, epochs_run: 0, final_loss: f64::NAN },
            feature_ids: Vec::new(),
        })
    }

    pub fn shape(&self) -> NetworkShape {
        self.shape
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    fn forward(&self, x: &[f64], hidden: &mut [f64]) -> [f64; OUTPUT_COUNT] {
        let NetworkShape { inputs, hidden: h, .. } = self.shape;
        let (b1, w2, b2) = self.shape.offsets();
        for (j, out) in hidden.iter_mut().enumerate().take(h) {
            let w = &self.params[j * inputs..(j + 1) * inputs];
            let z = self.params[b1 + j] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            *out = sigmoid(z);
        }
        let mut z = [0.0; OUTPUT_COUNT];
        for (k, zk) in z.iter_mut().enumerate() {
            let w = &self.params[w2 + k * h..w2 + (k + 1) * h];
            *zk = self.params[b2 + k] + w.iter().zip(hidden.iter()).map(|(a, b)| a * b).sum::<f64>();
        }
        softmax_into(&mut z);
        z
    }

    /// Mean cross-entropy over `data`.
    pub fn loss(&self, data: &Samples) -> f64 {
        let mut hidden = vec![0.0; self.shape.hidden];
        let total: f64 = (0..data.len())
            .map(|i| {
                let p = self.forward(data.row(i), &mut hidden);
                -(p[data.label(i)].max(f64::MIN_POSITIVE)).ln()
            })
            .sum();
        total / data.len() as f64
    }

    /// Mean loss and its gradient with respect to every parameter, over the
    /// listed rows.
    pub fn loss_and_gradient(&self, data: &Samples, rows: &[usize]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let loss = self.accumulate_gradient(data, rows, &mut grad);
        (loss, grad)
    }

    fn accumulate_gradient(&self, data: &Samples, rows: &[usize], grad: &mut [f64]) -> f64 {
        let NetworkShape { inputs, hidden: h, .. } = self.shape;
        let (b1, w2, b2) = self.shape.offsets();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut hidden = vec![0.0; h];
        let mut delta_h = vec![0.0; h];
        let mut loss = 0.0;
        for &i in rows {
            let x = data.row(i);
            let y = data.label(i);
            let mut delta_o = self.forward(x, &mut hidden);
            loss -= delta_o[y].max(f64::MIN_POSITIVE).ln();
            delta_o[y] -= 1.0;
            delta_h.iter_mut().for_each(|d| *d = 0.0);
            for (k, &dk) in delta_o.iter().enumerate() {
                grad[b2 + k] += dk;
                let wrow = w2 + k * h;
                for j in 0..h {
                    grad[wrow + j] += dk * hidden[j];
                    delta_h[j] += dk * self.params[wrow + j];
                }
            }
            for j in 0..h {
                let dj = delta_h[j] * hidden[j] * (1.0 - hidden[j]);
                grad[b1 + j] += dj;
                let g = &mut grad[j * inputs..(j + 1) * inputs];
                for (gv, xv) in g.iter_mut().zip(x) {
                    *gv += dj * xv;
                }
            }
        }
        let n = rows.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        loss / n
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.shape.inputs {
            return Err(Error::DimensionMismatch { expected: self.shape.inputs, got: x.len() });
        }
        let mut hidden = vec![0.0; self.shape.hidden];
        let scores = self.forward(x, &mut hidden);
        let mut best = 0;
        for k in 1..OUTPUT_COUNT {
            if scores[k] > scores[best] {
                best = k;
            }
        }
        Ok(Prediction { class: BiRads::from_index(best).expect("4 outputs"), scores })
    }

    /// Predicted class indices for every row.
    pub fn classify(&self, data: &Samples) -> Result<Vec<usize>> {
        (0..data.len()).map(|i| Ok(self.predict(data.row(i))?.class.index())).collect()
    }

    /// Fraction of rows classified correctly.
    pub fn accuracy(&self, data: &Samples) -> Result<f64> {
        if data.is_empty() {
            return Ok(0.0);
        }
        let preds = self.classify(data)?;
        let hits = preds.iter().zip(data.labels()).filter(|(p, y)| p == y).count();
        Ok(hits as f64 / data.len() as f64)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::fsutil::write_json(path, &ModelFile::from(self))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: ModelFile = crate::fsutil::read_json(path)?;
        file.into_model()
    }
}

const MODEL_FORMAT: &str = "mammocad-model";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    shape: NetworkShape,
    training: TrainingMeta,
    feature_ids: Vec<u16>,
    input_hidden_weights: Vec<Vec<f64>>,
    hidden_bias: Vec<f64>,
    hidden_output_weights: Vec<Vec<f64>>,
    output_bias: Vec<f64>,
}

impl From<&Model> for ModelFile {
    fn from(m: &Model) -> Self {
        let s = m.shape;
        let (b1, w2, b2) = s.offsets();
        Self {
            format: MODEL_FORMAT.into(),
            version: 1,
            shape: s,
            training: m.training,
            feature_ids: m.feature_ids.clone(),
            input_hidden_weights: m.params[..b1].chunks(s.inputs).map(<[f64]>::to_vec).collect(),
            hidden_bias: m.params[b1..w2].to_vec(),
            hidden_output_weights: m.params[w2..b2].chunks(s.hidden).map(<[f64]>::to_vec).collect(),
            output_bias: m.params[b2..].to_vec(),
        }
    }
}

impl ModelFile {
    fn into_model(self) -> Result<Model> {
        if self.format != MODEL_FORMAT || self.version != 1 {
            return Err(Error::Schema(format!("unsupported model {} v{}", self.format, self.version)));
        }
        let mut params = Vec::with_capacity(self.shape.parameter_count());
        for row in &self.input_hidden_weights {
            if row.len() != self.shape.inputs {
                return Err(Error::Schema("input weight row width".into()));
            }
            params.extend_from_slice(row);
        }
        params.extend_from_slice(&self.hidden_bias);
        for row in &self.hidden_output_weights {
            if row.len() != self.shape.hidden {
                return Err(Error::Schema("output weight row width".into()));
            }
            params.extend_from_slice(row);
        }
        params.extend_from_slice(&self.output_bias);
        let mut model = Model::from_parameters(self.shape, params)?;
        model.training = self.training;
        model.feature_ids = self.feature_ids;
        Ok(model)
    }
}

fn check_classes(data: &Samples) -> Result<()> {
    let mut seen = [false; OUTPUT_COUNT];
    for &y in data.labels() {
        seen[y] = true;
    }
    let missing: Vec<&str> = BiRads::ALL
        .iter()
        .filter(|c| !seen[c.index()])
        .map(|c| c.as_str())
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::MissingClass(missing.join(", ")))
    }
}

/// Trains a network; see [`train_traced`].
pub fn train(data: &Samples, shape: NetworkShape, cfg: &TrainConfig) -> Result<Model> {
    train_traced(data, shape, cfg).map(|(m, _)| m)
}

/// Trains and also returns the full-data loss after every epoch.
///
/// An epoch whose loss exceeds the previous one is rolled back, the learning
/// rate is halved and the momentum buffer cleared, so the recorded losses
/// never increase. Training stops after `max_epochs`, after
/// `early_stop_patience` epochs without relative improvement of 1e-6, or
/// once the learning rate underflows.
pub fn train_traced(
    data: &Samples,
    shape: NetworkShape,
    cfg: &TrainConfig,
) -> Result<(Model, Vec<f64>)> {
    cfg.validate()?;
    shape.validate()?;
    if data.inputs() != shape.inputs {
        return Err(Error::DimensionMismatch { expected: shape.inputs, got: data.inputs() });
    }
    if data.is_empty() {
        return Err(Error::InvalidInput("no training samples".into()));
    }
    check_classes(data)?;

    let mut model = Model::init(shape, cfg.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut order: Vec<usize> = (0..data.len()).collect();
    let n_params = model.params.len();
    let mut velocity = vec![0.0; n_params];
    let mut grad = vec![0.0; n_params];
    let mut snapshot = model.params.clone();
    let mut lr = cfg.learning_rate;
    let mut current = model.loss(data);
    if !current.is_finite() {
        return Err(Error::Diverged(0));
    }
    let mut best = current;
    let mut stale = 0;
    let mut history = Vec::with_capacity(cfg.max_epochs);
    let mut epochs_run = 0;

    for epoch in 1..=cfg.max_epochs {
        epochs_run = epoch;
        snapshot.copy_from_slice(&model.params);
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            model.accumulate_gradient(data, batch, &mut grad);
            for ((p, v), g) in model.params.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = cfg.momentum * *v - lr * g;
                *p += *v;
            }
        }
        let loss = model.loss(data);
        if !loss.is_finite() {
            return Err(Error::Diverged(epoch));
        }
        if loss > current {
            model.params.copy_from_slice(&snapshot);
            velocity.iter_mut().for_each(|v| *v = 0.0);
            lr *= 0.5;
        } else {
            current = loss;
        }
        history.push(current);
        if current < best * (1.0 - 1e-6) {
            best = current;
            stale = 0;
        } else {
            stale += 1;
        }
        if stale >= cfg.early_stop_patience || lr < cfg.learning_rate * 1e-9 {
            break;
        }
    }
    model.training = TrainingMeta { seed: cfg.seed, epochs_run, final_loss: current };
    Ok((model, history))
}

/// Central finite differences of the mean loss over `rows`.
pub fn numeric_gradient(model: &Model, data: &Samples, rows: &[usize], step: f64) -> Vec<f64> {
    let sub = data.subset(rows);
    let mut probe = model.clone();
    (0..model.params.len())
        .map(|k| {
            let orig = probe.params[k];
            probe.params[k] = orig + step;
            let up = probe.loss(&sub);
            probe.params[k] = orig - step;
            let down = probe.loss(&sub);
            probe.params[k] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Relative discrepancy `|a - n| / max(|a| + |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Largest relative error between back-propagated and finite-difference
/// gradients on random weights and a random 8-sample batch.
pub fn gradient_check(shape: NetworkShape, seed: u64) -> Result<f64> {
    shape.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = (0..shape.parameter_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let model = Model::from_parameters(shape, params)?;
    let n = 8;
    let x = (0..n * shape.inputs).map(|_| rng.random_range(0.0..1.0)).collect();
    let y = (0..n).map(|_| rng.random_range(0..OUTPUT_COUNT)).collect();
    let data = Samples::new(shape.inputs, x, y)?;
    let rows: Vec<usize> = (0..n).collect();
    let (_, analytic) = model.loss_and_gradient(&data, &rows);
    let numeric = numeric_gradient(&model, &data, &rows, 1e-5);
    Ok(analytic
        .iter()
        .zip(&numeric)
        .map(|(&a, &b)| relative_error(a, b))
        .fold(0.0, f64::max))
}
