//! Q-network: convolutional encoder (or identity on state vectors) and a
//! three-layer fully connected head over `[embedding, action]`.

use ndarray::{concatenate, s, Array1, Array2, Array4, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

use super::nn::{relu, relu_backward, tanh_backward, Conv2d, Dense, LayerNorm, LayerNormCache};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InputSpec {
    Pixels { height: usize, width: usize, channels: usize },
    State { dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticConfig {
    pub input: InputSpec,
    pub action_dim: usize,
    pub filters: usize,
    pub conv_layers: usize,
    pub embed_dim: usize,
    pub hidden: usize,
}

impl CriticConfig {
    /// Desk-scale default: hidden width 256.
    pub fn new(input: InputSpec, action_dim: usize) -> Self {
        CriticConfig { input, action_dim, filters: 32, conv_layers: 4, embed_dim: 50, hidden: 256 }
    }

    /// Full-size head (hidden width 1024).
    pub fn full_scale(input: InputSpec, action_dim: usize) -> Self {
        CriticConfig { hidden: 1024, ..Self::new(input, action_dim) }
    }

    pub fn with_hidden(mut self, hidden: usize) -> Self {
        self.hidden = hidden;
        self
    }
}

/// A batch of network inputs: NHWC images scaled to [0, 1], or state rows.
#[derive(Debug, Clone, PartialEq)]
pub enum ObsBatch {
    Pixels(Array4<f64>),
    State(Array2<f64>),
}

impl ObsBatch {
    pub fn len(&self) -> usize {
        match self {
            ObsBatch::Pixels(x) => x.dim().0,
            ObsBatch::State(x) => x.nrows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Concatenates batches along the batch axis.
    pub fn stack(parts: &[ObsBatch]) -> Result<ObsBatch> {
        match parts.first() {
            Some(ObsBatch::Pixels(_)) => {
                let views = parts
                    .iter()
                    .map(|p| match p {
                        ObsBatch::Pixels(x) => Ok(x.view()),
                        _ => Err(Error::Shape("mixed observation kinds".into())),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(ObsBatch::Pixels(concatenate(Axis(0), &views).map_err(|e| Error::Shape(e.to_string()))?))
            }
            Some(ObsBatch::State(_)) => {
                let views = parts
                    .iter()
                    .map(|p| match p {
                        ObsBatch::State(x) => Ok(x.view()),
                        _ => Err(Error::Shape("mixed observation kinds".into())),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(ObsBatch::State(concatenate(Axis(0), &views).map_err(|e| Error::Shape(e.to_string()))?))
            }
            None => Err(Error::Shape("empty batch list".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Encoder {
    convs: Vec<Conv2d>,
    dense: Dense,
    norm: LayerNorm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Critic {
    config: CriticConfig,
    encoder: Option<Encoder>,
    head: [Dense; 3],
}

struct EncoderCache {
    shapes: Vec<(usize, usize, usize, usize)>,
    cols: Vec<Array2<f64>>,
    outputs: Vec<Array4<f64>>,
    flat: Array2<f64>,
    norm: LayerNormCache,
}

/// Intermediate activations kept for the backward pass.
pub struct ForwardCache {
    encoder: Option<EncoderCache>,
    embedding: Array2<f64>,
    head_in: Array2<f64>,
    h1: Array2<f64>,
    h2: Array2<f64>,
}

impl Critic {
    pub fn new(config: CriticConfig, rng: &mut Rng) -> Result<Self> {
        if config.action_dim == 0 || config.hidden == 0 {
            return Err(Error::config("critic needs positive action_dim and hidden width"));
        }
        let (encoder, embed_dim) = match config.input {
            InputSpec::State { dim } => (None, dim),
            InputSpec::Pixels { height, width, channels } => {
                if config.conv_layers == 0 || config.filters == 0 || config.embed_dim == 0 {
                    return Err(Error::config("pixel encoder needs conv layers, filters and an embedding"));
                }
                let mut convs = Vec::new();
                let (mut h, mut w, mut c) = (height, width, channels);
                for i in 0..config.conv_layers {
                    let conv = Conv2d::new(c, config.filters, 3, if i == 0 { 2 } else { 1 }, rng);
                    (h, w) = conv.output_size(h, w).ok_or_else(|| {
                        Error::config(format!("{height}x{width} input too small for {} conv layers", config.conv_layers))
                    })?;
                    c = config.filters;
                    convs.push(conv);
                }
                let dense = Dense::new(h * w * c, config.embed_dim, rng);
                (Some(Encoder { convs, dense, norm: LayerNorm::new(config.embed_dim) }), config.embed_dim)
            }
        };
        let head_in = embed_dim + config.action_dim;
        let head = [
            Dense::new(head_in, config.hidden, rng),
            Dense::new(config.hidden, config.hidden, rng),
            Dense::new(config.hidden, 1, rng),
        ];
        Ok(Critic { config, encoder, head })
    }

    pub fn config(&self) -> &CriticConfig {
        &self.config
    }

    fn check_obs(&self, obs: &ObsBatch) -> Result<()> {
        match (self.config.input, obs) {
            (InputSpec::Pixels { height, width, channels }, ObsBatch::Pixels(x)) => {
                let (_, h, w, c) = x.dim();
                if (h, w, c) != (height, width, channels) {
                    return Err(Error::Shape(format!("expected {height}x{width}x{channels} images, got {h}x{w}x{c}")));
                }
            }
            (InputSpec::State { dim }, ObsBatch::State(x)) => {
                if x.ncols() != dim {
                    return Err(Error::Shape(format!("expected state dim {dim}, got {}", x.ncols())));
                }
            }
            _ => return Err(Error::Shape("observation kind does not match the critic".into())),
        }
        Ok(())
    }

    fn encode(&self, obs: &ObsBatch, keep: bool) -> Result<(Array2<f64>, Option<EncoderCache>)> {
        self.check_obs(obs)?;
        match (&self.encoder, obs) {
            (None, ObsBatch::State(x)) => Ok((x.clone(), None)),
            (Some(enc), ObsBatch::Pixels(x)) => {
                let mut shapes = Vec::new();
                let mut cols_all = Vec::new();
                let mut outputs = Vec::new();
                let mut act = x.clone();
                for conv in &enc.convs {
                    shapes.push(act.dim());
                    let (y, cols) = conv.forward(&act);
                    act = relu(&y);
                    if keep {
                        cols_all.push(cols);
                        outputs.push(act.clone());
                    }
                }
                let (n, h, w, c) = act.dim();
                let flat = act.into_shape_with_order((n, h * w * c)).unwrap();
                let (normed, norm) = enc.norm.forward(&enc.dense.forward(&flat));
                let embedding = normed.mapv(f64::tanh);
                let cache = keep.then(|| EncoderCache { shapes, cols: cols_all, outputs, flat, norm });
                Ok((embedding, cache))
            }
            _ => Err(Error::Shape("observation kind does not match the critic".into())),
        }
    }

    /// Observation embeddings, one row per observation.
    pub fn embed(&self, obs: &ObsBatch) -> Result<Array2<f64>> {
        Ok(self.encode(obs, false)?.0)
    }

    fn head_forward(&self, embedding: &Array2<f64>, actions: &Array2<f64>) -> Result<(Array2<f64>, Array2<f64>, Array2<f64>, Array1<f64>)> {
        if actions.ncols() != self.config.action_dim || actions.nrows() != embedding.nrows() {
            return Err(Error::Shape(format!(
                "actions {:?} do not match {} embeddings of action dim {}",
                actions.dim(),
                embedding.nrows(),
                self.config.action_dim
            )));
        }
        let head_in = concatenate![Axis(1), embedding.view(), actions.view()];
        let h1 = relu(&self.head[0].forward(&head_in));
        let h2 = relu(&self.head[1].forward(&h1));
        let q = self.head[2].forward(&h2).column(0).to_owned();
        Ok((head_in, h1, h2, q))
    }

    /// Q values for embedding rows paired with action rows.
    pub fn q_from_embedding(&self, embedding: &Array2<f64>, actions: &Array2<f64>) -> Result<Array1<f64>> {
        Ok(self.head_forward(embedding, actions)?.3)
    }

    pub fn q_values(&self, obs: &ObsBatch, actions: &Array2<f64>) -> Result<Array1<f64>> {
        self.q_from_embedding(&self.embed(obs)?, actions)
    }

    pub fn forward(&self, obs: &ObsBatch, actions: &Array2<f64>) -> Result<(Array1<f64>, ForwardCache)> {
        let (embedding, encoder) = self.encode(obs, true)?;
        let (head_in, h1, h2, q) = self.head_forward(&embedding, actions)?;
        Ok((q, ForwardCache { encoder, embedding, head_in, h1, h2 }))
    }

    /// Gradient of `sum_i dq[i] * q[i]` with respect to all parameters, in
    /// [`Critic::params`] order.
    pub fn backward(&self, cache: &ForwardCache, dq: &Array1<f64>) -> Vec<f64> {
        let mut grads: Vec<Vec<f64>> = Vec::new();
        let d_out = dq.view().insert_axis(Axis(1)).to_owned();
        let (dh2, dw2, db2) = self.head[2].backward(&cache.h2, &d_out);
        let dh2 = relu_backward(&cache.h2, &dh2);
        let (dh1, dw1, db1) = self.head[1].backward(&cache.h1, &dh2);
        let dh1 = relu_backward(&cache.h1, &dh1);
        let (din, dw0, db0) = self.head[0].backward(&cache.head_in, &dh1);
        let head_grads = [dw0.iter().copied().collect::<Vec<f64>>(), db0.to_vec(), dw1.iter().copied().collect::<Vec<f64>>(), db1.to_vec(), dw2.iter().copied().collect::<Vec<f64>>(), db2.to_vec()];

        if let (Some(enc), Some(ec)) = (&self.encoder, &cache.encoder) {
            let embed_dim = cache.embedding.ncols();
            let demb = din.slice(s![.., ..embed_dim]).to_owned();
            let dnormed = tanh_backward(&cache.embedding, &demb);
            let (ddense, dgain, dbias) = enc.norm.backward(&ec.norm, &dnormed);
            let (dflat, dw, db) = enc.dense.backward(&ec.flat, &ddense);
            let last = ec.outputs.last().unwrap().dim();
            let mut d = dflat.into_shape_with_order(last).unwrap();
            let mut conv_grads = Vec::new();
            for i in (0..enc.convs.len()).rev() {
                let dy = relu_backward(&ec.outputs[i], &d);
                if i == 0 {
                    let (cw, cb) = enc.convs[i].param_grads(&ec.cols[i], &dy);
                    conv_grads.push((cw, cb));
                } else {
                    let (dx, cw, cb) = enc.convs[i].backward(&ec.cols[i], ec.shapes[i], &dy);
                    conv_grads.push((cw, cb));
                    d = dx;
                }
            }
            for (cw, cb) in conv_grads.into_iter().rev() {
                grads.push(cw.iter().copied().collect::<Vec<f64>>());
                grads.push(cb.to_vec());
            }
            grads.push(dw.iter().copied().collect::<Vec<f64>>());
            grads.push(db.to_vec());
            grads.push(dgain.to_vec());
            grads.push(dbias.to_vec());
        }
        grads.extend(head_grads);
        grads.concat()
    }

    /// Parameter tensors in a fixed order: conv (w, b) per layer, embedding
    /// dense (w, b), norm (gain, bias), then the head layers (w, b).
    pub fn params(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        if let Some(enc) = &self.encoder {
            for c in &enc.convs {
                out.push(c.w.as_slice().unwrap());
                out.push(c.b.as_slice().unwrap());
            }
            out.push(enc.dense.w.as_slice().unwrap());
            out.push(enc.dense.b.as_slice().unwrap());
            out.push(enc.norm.gain.as_slice().unwrap());
            out.push(enc.norm.bias.as_slice().unwrap());
        }
        for d in &self.head {
            out.push(d.w.as_slice().unwrap());
            out.push(d.b.as_slice().unwrap());
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        if let Some(enc) = &mut self.encoder {
            for c in &mut enc.convs {
                out.push(c.w.as_slice_mut().unwrap());
                out.push(c.b.as_slice_mut().unwrap());
            }
            out.push(enc.dense.w.as_slice_mut().unwrap());
            out.push(enc.dense.b.as_slice_mut().unwrap());
            out.push(enc.norm.gain.as_slice_mut().unwrap());
            out.push(enc.norm.bias.as_slice_mut().unwrap());
        }
        for d in &mut self.head {
            out.push(d.w.as_slice_mut().unwrap());
            out.push(d.b.as_slice_mut().unwrap());
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.params().concat()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Shape(format!("expected {} parameters, got {}", self.num_params(), flat.len())));
        }
        let mut offset = 0;
        for p in self.params_mut() {
            p.copy_from_slice(&flat[offset..offset + p.len()]);
            offset += p.len();
        }
        Ok(())
    }

    /// `self = tau * other + (1 - tau) * self`.
    pub fn polyak_update(&mut self, other: &Critic, tau: f64) {
        for (dst, src) in self.params_mut().into_iter().zip(other.params()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = tau * s + (1.0 - tau) * *d;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng as _;

    fn tiny_pixels() -> CriticConfig {
        CriticConfig { input: InputSpec::Pixels { height: 15, width: 15, channels: 3 }, action_dim: 2, filters: 3, conv_layers: 4, embed_dim: 5, hidden: 7 }
    }

    #[test]
    fn rejects_too_small_images() {
        let mut cfg = tiny_pixels();
        cfg.input = InputSpec::Pixels { height: 14, width: 15, channels: 3 };
        assert!(Critic::new(cfg, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn params_round_trip_and_grad_length() {
        let mut rng = rng_from_seed(3);
        let mut critic = Critic::new(tiny_pixels(), &mut rng).unwrap();
        let flat = critic.flat_params();
        let shifted: Vec<f64> = flat.iter().map(|v| v + 1.0).collect();
        critic.set_flat_params(&shifted).unwrap();
        assert_eq!(critic.flat_params(), shifted);
        let obs = ObsBatch::Pixels(Array4::from_shape_fn((2, 15, 15, 3), |_| rng.random::<f64>()));
        let actions = Array2::from_shape_fn((2, 2), |_| rng.random_range(-1.0..1.0));
        let (q, cache) = critic.forward(&obs, &actions).unwrap();
        assert!(q.iter().all(|v| v.is_finite()));
        assert_eq!(critic.backward(&cache, &Array1::ones(2)).len(), critic.num_params());
        assert_eq!(critic.q_values(&obs, &actions).unwrap(), q);
    }

    #[test]
    fn shape_errors() {
        let mut rng = rng_from_seed(0);
        let critic = Critic::new(CriticConfig::new(InputSpec::State { dim: 4 }, 1), &mut rng).unwrap();
        let obs = ObsBatch::State(Array2::zeros((3, 4)));
        assert!(critic.q_values(&obs, &Array2::zeros((3, 2))).is_err());
        assert!(critic.q_values(&obs, &Array2::zeros((2, 1))).is_err());
        assert!(critic.q_values(&ObsBatch::State(Array2::zeros((3, 5))), &Array2::zeros((3, 1))).is_err());
        assert!(critic.q_values(&obs, &Array2::zeros((3, 1))).is_ok());
    }

    #[test]
    fn polyak_moves_toward_source() {
        let mut rng = rng_from_seed(0);
        let cfg = CriticConfig::new(InputSpec::State { dim: 2 }, 1).with_hidden(4);
        let a = Critic::new(cfg, &mut rng).unwrap();
        let mut b = Critic::new(cfg, &mut rng).unwrap();
        let before = b.flat_params();
        b.polyak_update(&a, 0.25);
        for ((x, y), z) in b.flat_params().iter().zip(&before).zip(a.flat_params()) {
            assert!((x - (0.25 * z + 0.75 * y)).abs() < 1e-15);
        }
        b.polyak_update(&a, 1.0);
        assert_eq!(b, a);
    }
}
