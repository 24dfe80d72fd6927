use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Graph, NeuralError, ParamSet, Tensor, Var};
use crate::bow::SparseVector;
use crate::rng::SeededRng;
use crate::wordvec::{EmbeddingMatrix, Sequence};

/// A classifier producing one logit per example.
pub trait Model {
    type Input;

    fn params(&self) -> &ParamSet;
    fn params_mut(&mut self) -> &mut ParamSet;
    fn set_dropout(&mut self, rate: f64);

    /// Builds the forward pass for `batch` on `g`, with `p` the result
    /// of binding [`Model::params`]. Dropout is active only when `rng` is
    /// given. Returns a `batch x 1` logit node.
    fn forward(
        &self,
        g: &mut Graph,
        p: &[Var],
        batch: &[&Self::Input],
        rng: Option<&mut SeededRng>,
    ) -> Result<Var, NeuralError>;
}

/// Inverted dropout; identity when `rng` is `None` or `rate` is zero.
pub fn dropout(g: &mut Graph, v: Var, rate: f64, rng: Option<&mut SeededRng>) -> Result<Var, NeuralError> {
    let Some(rng) = rng else { return Ok(v) };
    if rate <= 0.0 {
        return Ok(v);
    }
    let (n, m) = g.shape(v);
    let keep = 1.0 - rate;
    let mask = (0..n * m)
        .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
        .collect();
    g.dropout_with_mask(v, mask)
}

fn check_rate(rate: f64) -> Result<(), NeuralError> {
    if (0.0..1.0).contains(&rate) {
        Ok(())
    } else {
        Err(NeuralError::InvalidConfig(format!("dropout {rate} outside [0, 1)")))
    }
}

/// Input of the logistic-regression head.
#[derive(Debug, Clone, PartialEq)]
pub enum Features {
    Dense(Vec<f64>),
    Sparse(SparseVector),
}

impl Features {
    pub fn dim(&self) -> usize {
        match self {
            Features::Dense(v) => v.len(),
            Features::Sparse(s) => s.dim(),
        }
    }
}

/// `sigma(x W + b)`: a single linear unit trained on log-loss.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression {
    input_dim: usize,
    params: ParamSet,
}

impl LogisticRegression {
    /// Zero-initialized, so an untrained model predicts 0.5 everywhere.
    pub fn new(input_dim: usize) -> Result<Self, NeuralError> {
        if input_dim == 0 {
            return Err(NeuralError::InvalidConfig("input dimension must be positive".into()));
        }
        let mut params = ParamSet::new();
        params.push("weight", Tensor::zeros(vec![input_dim, 1]));
        params.push("bias", Tensor::zeros(vec![1]));
        Ok(LogisticRegression { input_dim, params })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }
}

impl Model for LogisticRegression {
    type Input = Features;

    fn params(&self) -> &ParamSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn set_dropout(&mut self, _rate: f64) {}

    fn forward(
        &self,
        g: &mut Graph,
        p: &[Var],
        batch: &[&Features],
        _rng: Option<&mut SeededRng>,
    ) -> Result<Var, NeuralError> {
        if let Some(bad) = batch.iter().find(|f| f.dim() != self.input_dim) {
            return Err(NeuralError::Shape(format!(
                "feature dim {} for a {}-input model",
                bad.dim(),
                self.input_dim
            )));
        }
        let linear = match batch.first() {
            None => return Err(NeuralError::EmptyInput),
            Some(Features::Dense(_)) => {
                let mut data = Vec::with_capacity(batch.len() * self.input_dim);
                for f in batch {
                    match f {
                        Features::Dense(v) => data.extend_from_slice(v),
                        Features::Sparse(_) => return Err(NeuralError::MixedFeatures),
                    }
                }
                let x = g.constant(batch.len(), self.input_dim, data)?;
                g.matmul(x, p[0])?
            }
            Some(Features::Sparse(_)) => {
                let mut rows = Vec::with_capacity(batch.len());
                for f in batch {
                    match f {
                        Features::Sparse(s) => rows.push((s.indices().to_vec(), s.values().to_vec())),
                        Features::Dense(_) => return Err(NeuralError::MixedFeatures),
                    }
                }
                g.sparse_linear(rows, p[0])?
            }
        };
        g.add_row_bias(linear, p[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnConfig {
    pub filter_sizes: Vec<usize>,
    pub feature_maps: usize,
    pub embed_dim: usize,
    pub dropout: f64,
    pub seq_len: usize,
}

impl CnnConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        if self.filter_sizes.is_empty() || self.filter_sizes.contains(&0) {
            return Err(NeuralError::InvalidConfig(
                "filter sizes must be a non-empty list of positive widths".into(),
            ));
        }
        let widest = self.filter_sizes.iter().copied().max().unwrap_or(0);
        if self.seq_len < widest {
            return Err(NeuralError::InvalidConfig(format!(
                "sequence length {} is shorter than the widest filter {widest}",
                self.seq_len
            )));
        }
        if self.feature_maps == 0 || self.embed_dim == 0 {
            return Err(NeuralError::InvalidConfig(
                "feature maps and embedding dim must be positive".into(),
            ));
        }
        check_rate(self.dropout)
    }

    /// Width of the pooled feature vector.
    pub fn pooled_dim(&self) -> usize {
        self.feature_maps * self.filter_sizes.len()
    }
}

fn embed_batch(g: &mut Graph, emb: &EmbeddingMatrix, batch: &[&Sequence], steps: usize) -> Result<Var, NeuralError> {
    let e = emb.dim();
    let mut data = Vec::with_capacity(batch.len() * steps * e);
    for s in batch {
        for (t, &id) in s.ids[..steps].iter().enumerate() {
            if id as usize >= emb.rows() {
                return Err(NeuralError::Shape(format!(
                    "token id {id} outside {} embedding rows",
                    emb.rows()
                )));
            }
            // whatever sits past the real length reads as the pad row
            let id = if t < s.len { id } else { 0 };
            data.extend(emb.row(id).iter().map(|&x| x as f64));
        }
    }
    g.constant(batch.len(), steps * e, data)
}

fn check_sequences(batch: &[&Sequence], seq_len: usize) -> Result<usize, NeuralError> {
    if batch.is_empty() {
        return Err(NeuralError::EmptyInput);
    }
    for (row, s) in batch.iter().enumerate() {
        if s.ids.len() != seq_len {
            return Err(NeuralError::Shape(format!(
                "sequence of {} ids, expected {seq_len}",
                s.ids.len()
            )));
        }
        if s.len == 0 {
            return Err(NeuralError::EmptyMask { row });
        }
        if s.len > seq_len {
            return Err(NeuralError::Shape(format!("real length {} over {seq_len}", s.len)));
        }
    }
    Ok(batch.iter().map(|s| s.len).max().unwrap_or(1))
}

/// Convolutions of several widths over frozen word vectors, max-pooled
/// over the real positions, then dropout and a linear logit.
#[derive(Debug, Clone)]
pub struct Cnn {
    config: CnnConfig,
    embeddings: Arc<EmbeddingMatrix>,
    params: ParamSet,
}

impl Cnn {
    pub fn new(config: CnnConfig, embeddings: Arc<EmbeddingMatrix>, seed: u64) -> Result<Self, NeuralError> {
        config.validate()?;
        if embeddings.dim() != config.embed_dim {
            return Err(NeuralError::InvalidConfig(format!(
                "embedding dim {} but config says {}",
                embeddings.dim(),
                config.embed_dim
            )));
        }
        let mut rng = crate::rng::seeded(seed);
        let mut params = ParamSet::new();
        for &k in &config.filter_sizes {
            params.push(
                format!("conv{k}.weight"),
                Tensor::glorot(k * config.embed_dim, config.feature_maps, &mut rng),
            );
            params.push(format!("conv{k}.bias"), Tensor::zeros(vec![config.feature_maps]));
        }
        params.push("out.weight", Tensor::glorot(config.pooled_dim(), 1, &mut rng));
        params.push("out.bias", Tensor::zeros(vec![1]));
        Ok(Cnn {
            config,
            embeddings,
            params,
        })
    }

    pub fn config(&self) -> &CnnConfig {
        &self.config
    }

    /// Pooled features before dropout, `batch x pooled_dim`.
    pub fn encode(&self, g: &mut Graph, p: &[Var], batch: &[&Sequence]) -> Result<Var, NeuralError> {
        let longest = check_sequences(batch, self.config.seq_len)?;
        let widest = self.config.filter_sizes.iter().copied().max().unwrap_or(1);
        // positions past every real token are masked anyway
        let steps = longest.max(widest);
        let e = self.config.embed_dim;
        let x = embed_batch(g, &self.embeddings, batch, steps)?;
        let mut pooled = Vec::with_capacity(self.config.filter_sizes.len());
        for (i, &k) in self.config.filter_sizes.iter().enumerate() {
            let conv = g.conv1d(x, p[2 * i], p[2 * i + 1], e, k)?;
            let act = g.relu(conv);
            // windows starting at a real token; documents shorter than
            // the filter keep the single window at position 0
            let valid: Vec<usize> = batch.iter().map(|s| (s.len + 1).saturating_sub(k).max(1)).collect();
            pooled.push(g.max_time(act, self.config.feature_maps, &valid)?);
        }
        if pooled.len() == 1 {
            Ok(pooled[0])
        } else {
            g.concat_cols(&pooled)
        }
    }
}

impl Model for Cnn {
    type Input = Sequence;

    fn params(&self) -> &ParamSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn set_dropout(&mut self, rate: f64) {
        self.config.dropout = rate;
    }

    fn forward(
        &self,
        g: &mut Graph,
        p: &[Var],
        batch: &[&Sequence],
        rng: Option<&mut SeededRng>,
    ) -> Result<Var, NeuralError> {
        let pooled = self.encode(g, p, batch)?;
        let dropped = dropout(g, pooled, self.config.dropout, rng)?;
        let n = p.len();
        let logit = g.matmul(dropped, p[n - 2])?;
        g.add_row_bias(logit, p[n - 1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    Average,
    Max,
    AverageAndMax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmConfig {
    pub layers: usize,
    pub hidden_size: usize,
    pub pooling: Pooling,
    pub embed_dim: usize,
    pub dropout: f64,
    pub seq_len: usize,
}

impl LstmConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        if !(1..=2).contains(&self.layers) {
            return Err(NeuralError::InvalidConfig(format!(
                "{} layers; only 1 or 2 are supported",
                self.layers
            )));
        }
        if self.hidden_size == 0 || self.embed_dim == 0 || self.seq_len == 0 {
            return Err(NeuralError::InvalidConfig(
                "hidden size, embedding dim and length must be positive".into(),
            ));
        }
        check_rate(self.dropout)
    }

    pub fn pooled_dim(&self) -> usize {
        match self.pooling {
            Pooling::Average | Pooling::Max => 2 * self.hidden_size,
            Pooling::AverageAndMax => 4 * self.hidden_size,
        }
    }
}

/// One LSTM step with gates in the order input, forget, candidate,
/// output. `wx` is `in x 4H`, `wh` is `H x 4H`, `b` has `4H` entries.
#[allow(clippy::too_many_arguments)]
pub fn lstm_cell(
    g: &mut Graph,
    x: Var,
    h: Var,
    c: Var,
    wx: Var,
    wh: Var,
    b: Var,
    hidden: usize,
) -> Result<(Var, Var), NeuralError> {
    let zx = g.matmul(x, wx)?;
    let zh = g.matmul(h, wh)?;
    let z = g.add(zx, zh)?;
    let z = g.add_row_bias(z, b)?;
    let zi = g.slice_cols(z, 0, hidden)?;
    let zf = g.slice_cols(z, hidden, hidden)?;
    let zg = g.slice_cols(z, 2 * hidden, hidden)?;
    let zo = g.slice_cols(z, 3 * hidden, hidden)?;
    let i = g.sigmoid(zi);
    let f = g.sigmoid(zf);
    let cand = g.tanh(zg);
    let o = g.sigmoid(zo);
    let keep = g.mul(f, c)?;
    let write = g.mul(i, cand)?;
    let c_new = g.add(keep, write)?;
    let squashed = g.tanh(c_new);
    let h_new = g.mul(o, squashed)?;
    Ok((h_new, c_new))
}

/// Bidirectional LSTM over frozen word vectors with masked pooling, a
/// ReLU dense layer of the hidden size, dropout and a linear logit.
#[derive(Debug, Clone)]
pub struct Lstm {
    config: LstmConfig,
    embeddings: Arc<EmbeddingMatrix>,
    params: ParamSet,
}

const DIRECTIONS: [&str; 2] = ["fw", "bw"];

impl Lstm {
    pub fn new(config: LstmConfig, embeddings: Arc<EmbeddingMatrix>, seed: u64) -> Result<Self, NeuralError> {
        config.validate()?;
        if embeddings.dim() != config.embed_dim {
            return Err(NeuralError::InvalidConfig(format!(
                "embedding dim {} but config says {}",
                embeddings.dim(),
                config.embed_dim
            )));
        }
        let h = config.hidden_size;
        let mut rng = crate::rng::seeded(seed);
        let mut params = ParamSet::new();
        for layer in 0..config.layers {
            let input = if layer == 0 { config.embed_dim } else { 2 * h };
            for dir in DIRECTIONS {
                params.push(format!("lstm{layer}.{dir}.wx"), Tensor::glorot(input, 4 * h, &mut rng));
                params.push(format!("lstm{layer}.{dir}.wh"), Tensor::glorot(h, 4 * h, &mut rng));
                let mut bias = Tensor::zeros(vec![4 * h]);
                bias.data[h..2 * h].iter_mut().for_each(|x| *x = 1.0);
                params.push(format!("lstm{layer}.{dir}.b"), bias);
            }
        }
        params.push("dense.weight", Tensor::glorot(config.pooled_dim(), h, &mut rng));
        params.push("dense.bias", Tensor::zeros(vec![h]));
        params.push("out.weight", Tensor::glorot(h, 1, &mut rng));
        params.push("out.bias", Tensor::zeros(vec![1]));
        Ok(Lstm {
            config,
            embeddings,
            params,
        })
    }

    pub fn config(&self) -> &LstmConfig {
        &self.config
    }

    /// Per-step states of the last layer, `batch x (steps * 2H)`, and the
    /// number of steps computed.
    pub fn states(&self, g: &mut Graph, p: &[Var], batch: &[&Sequence]) -> Result<(Var, usize), NeuralError> {
        // steps after the longest document leave every state unchanged
        let steps = check_sequences(batch, self.config.seq_len)?;
        let (n, e, h) = (batch.len(), self.config.embed_dim, self.config.hidden_size);
        let x = embed_batch(g, &self.embeddings, batch, steps)?;
        let masks: Vec<Vec<f64>> = (0..steps)
            .map(|t| batch.iter().map(|s| if t < s.len { 1.0 } else { 0.0 }).collect())
            .collect();
        let mut inputs: Vec<Var> = (0..steps)
            .map(|t| g.slice_cols(x, t * e, e))
            .collect::<Result<_, _>>()?;
        let mut last = Vec::new();
        for layer in 0..self.config.layers {
            let mut per_dir: [Vec<Var>; 2] = [Vec::new(), Vec::new()];
            for (d, out) in per_dir.iter_mut().enumerate() {
                let base = (layer * 2 + d) * 3;
                let (wx, wh, b) = (p[base], p[base + 1], p[base + 2]);
                let mut hs = g.constant(n, h, vec![0.0; n * h])?;
                let mut cs = g.constant(n, h, vec![0.0; n * h])?;
                let mut states = vec![hs; steps];
                let order: Vec<usize> = if d == 0 {
                    (0..steps).collect()
                } else {
                    (0..steps).rev().collect()
                };
                for t in order {
                    let (h_new, c_new) = lstm_cell(g, inputs[t], hs, cs, wx, wh, b, h)?;
                    cs = g.mask_blend(cs, c_new, &masks[t])?;
                    hs = g.mask_blend(hs, h_new, &masks[t])?;
                    states[t] = hs;
                }
                *out = states;
            }
            let [fw, bw] = per_dir;
            let joined: Vec<Var> = fw
                .iter()
                .zip(&bw)
                .map(|(&a, &b)| g.concat_cols(&[a, b]))
                .collect::<Result<_, _>>()?;
            if layer + 1 == self.config.layers {
                last = joined;
            } else {
                inputs = joined;
            }
        }
        Ok((g.concat_cols(&last)?, steps))
    }

    /// Masked pooling of the last-layer states, `batch x pooled_dim`.
    pub fn encode(&self, g: &mut Graph, p: &[Var], batch: &[&Sequence]) -> Result<Var, NeuralError> {
        let (states, _) = self.states(g, p, batch)?;
        let feat = 2 * self.config.hidden_size;
        let valid: Vec<usize> = batch.iter().map(|s| s.len).collect();
        match self.config.pooling {
            Pooling::Average => g.mean_time(states, feat, &valid),
            Pooling::Max => g.max_time(states, feat, &valid),
            Pooling::AverageAndMax => {
                let avg = g.mean_time(states, feat, &valid)?;
                let max = g.max_time(states, feat, &valid)?;
                g.concat_cols(&[avg, max])
            }
        }
    }
}

impl Model for Lstm {
    type Input = Sequence;

    fn params(&self) -> &ParamSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn set_dropout(&mut self, rate: f64) {
        self.config.dropout = rate;
    }

    fn forward(
        &self,
        g: &mut Graph,
        p: &[Var],
        batch: &[&Sequence],
        rng: Option<&mut SeededRng>,
    ) -> Result<Var, NeuralError> {
        let pooled = self.encode(g, p, batch)?;
        let k = p.len();
        let dense = g.matmul(pooled, p[k - 4])?;
        let dense = g.add_row_bias(dense, p[k - 3])?;
        let dense = g.relu(dense);
        let dropped = dropout(g, dense, self.config.dropout, rng)?;
        let logit = g.matmul(dropped, p[k - 2])?;
        g.add_row_bias(logit, p[k - 1])
    }
}

/// Model family name used in checkpoints and reports.
pub fn family_name<M: 'static>() -> String {
    String::from(core::any::type_name::<M>().rsplit("::").next().unwrap_or("model"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::sigmoid;

    fn embeddings(dim: usize, words: usize, seed: u64) -> Arc<EmbeddingMatrix> {
        let mut rng = crate::rng::seeded(seed);
        let mut m = EmbeddingMatrix::new(dim);
        for _ in 0..words {
            let v: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
            m.push(&v);
        }
        Arc::new(m)
    }

    fn logits<M: Model>(model: &M, batch: &[&M::Input]) -> Vec<f64> {
        let mut g = Graph::new();
        let p = model.params().bind(&mut g).unwrap();
        let out = model.forward(&mut g, &p, batch, None).unwrap();
        g.value(out).to_vec()
    }

    #[test]
    fn logreg_zero_init_is_half() {
        let m = LogisticRegression::new(3).unwrap();
        let x = Features::Dense(vec![1.0, -2.0, 0.5]);
        assert_eq!(sigmoid(logits(&m, &[&x])[0]), 0.5);
    }

    #[test]
    fn logreg_hand_values() {
        let mut m = LogisticRegression::new(2).unwrap();
        m.params_mut().get_mut("weight").unwrap().data = vec![0.5, -1.0];
        m.params_mut().get_mut("bias").unwrap().data = vec![0.25];
        let dense = Features::Dense(vec![2.0, 3.0]);
        let sparse = Features::Sparse(SparseVector::from_dense(&[2.0, 3.0]));
        let want = 0.5 * 2.0 - 3.0 + 0.25;
        assert!((logits(&m, &[&dense])[0] - want).abs() < 1e-12);
        assert!((logits(&m, &[&sparse])[0] - want).abs() < 1e-12);
        let mut g = Graph::new();
        let p = m.params().bind(&mut g).unwrap();
        assert_eq!(
            m.forward(&mut g, &p, &[&dense, &sparse], None).unwrap_err(),
            NeuralError::MixedFeatures
        );
        let short = Features::Dense(vec![1.0]);
        assert!(matches!(
            m.forward(&mut g, &p, &[&short], None),
            Err(NeuralError::Shape(_))
        ));
    }

    #[test]
    fn cnn_pooled_dim() {
        let cfg = CnnConfig {
            filter_sizes: vec![2, 3],
            feature_maps: 400,
            embed_dim: 4,
            dropout: 0.0,
            seq_len: 6,
        };
        assert_eq!(cfg.pooled_dim(), 800);
        let cnn = Cnn::new(cfg, embeddings(4, 5, 1), 0).unwrap();
        let mut g = Graph::new();
        let p = cnn.params().bind(&mut g).unwrap();
        let s = Sequence {
            ids: vec![1, 2, 3, 0, 0, 0],
            len: 3,
        };
        let pooled = cnn.encode(&mut g, &p, &[&s]).unwrap();
        assert_eq!(g.shape(pooled), (1, 800));
    }

    #[test]
    fn cnn_rejects_short_sequences() {
        let cfg = CnnConfig {
            filter_sizes: vec![2, 5],
            feature_maps: 2,
            embed_dim: 4,
            dropout: 0.0,
            seq_len: 4,
        };
        assert!(matches!(
            Cnn::new(cfg, embeddings(4, 2, 1), 0),
            Err(NeuralError::InvalidConfig(_))
        ));
    }

    #[test]
    fn cnn_ignores_pad_contents() {
        let cfg = CnnConfig {
            filter_sizes: vec![2, 3],
            feature_maps: 3,
            embed_dim: 2,
            dropout: 0.0,
            seq_len: 6,
        };
        let cnn = Cnn::new(cfg, embeddings(2, 6, 4), 9).unwrap();
        let a = Sequence {
            ids: vec![1, 2, 3, 0, 0, 0],
            len: 3,
        };
        // pad slots holding real ids must not change the output
        let b = Sequence {
            ids: vec![1, 2, 3, 5, 4, 6],
            len: 3,
        };
        assert_eq!(logits(&cnn, &[&a]), logits(&cnn, &[&b]));
    }

    #[test]
    fn lstm_zero_weights_give_zero_states() {
        let cfg = LstmConfig {
            layers: 2,
            hidden_size: 3,
            pooling: Pooling::AverageAndMax,
            embed_dim: 2,
            dropout: 0.0,
            seq_len: 4,
        };
        assert_eq!(cfg.pooled_dim(), 12);
        let mut lstm = Lstm::new(cfg, embeddings(2, 3, 2), 5).unwrap();
        for (_, t) in lstm.params_mut().iter_mut() {
            t.data.iter_mut().for_each(|x| *x = 0.0);
        }
        let mut g = Graph::new();
        let p = lstm.params().bind(&mut g).unwrap();
        let s = Sequence {
            ids: vec![1, 2, 3, 0],
            len: 3,
        };
        let (states, steps) = lstm.states(&mut g, &p, &[&s]).unwrap();
        assert_eq!(steps, 3);
        assert!(g.value(states).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn lstm_rejects_empty_mask() {
        let cfg = LstmConfig {
            layers: 1,
            hidden_size: 2,
            pooling: Pooling::Average,
            embed_dim: 2,
            dropout: 0.0,
            seq_len: 3,
        };
        let lstm = Lstm::new(cfg, embeddings(2, 2, 2), 5).unwrap();
        let s = Sequence {
            ids: vec![0, 0, 0],
            len: 0,
        };
        let mut g = Graph::new();
        let p = lstm.params().bind(&mut g).unwrap();
        assert_eq!(
            lstm.forward(&mut g, &p, &[&s], None).unwrap_err(),
            NeuralError::EmptyMask { row: 0 }
        );
    }

    #[test]
    fn dropout_off_is_identity() {
        let mut g = Graph::new();
        let x = g.constant(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(dropout(&mut g, x, 0.5, None).unwrap(), x);
        let mut rng = crate::rng::seeded(1);
        let y = dropout(&mut g, x, 0.5, Some(&mut rng)).unwrap();
        assert!(g
            .value(y)
            .iter()
            .zip(g.value(x))
            .all(|(a, b)| *a == 0.0 || *a == 2.0 * b));
    }
}
