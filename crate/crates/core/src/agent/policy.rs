//! Feed-forward policy/value network over the flattened tabular observation,
//! with hand-rolled backpropagation and an adaptive-moment optimizer.
//!
//! Architecture: two tanh hidden layers shared by an action-logit head and a
//! scalar value head. The parameter count is small enough that f64 and plain
//! `Vec` arithmetic keep the whole trainer bit-deterministic.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// One dense layer, row-major weights `[out x in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Dense {
    w: Vec<f64>,
    b: Vec<f64>,
    inp: usize,
    out: usize,
}

impl Dense {
    fn new(rng: &mut ChaCha8Rng, inp: usize, out: usize, scale: f64) -> Self {
        let bound = scale * (6.0 / (inp + out) as f64).sqrt();
        let w = (0..inp * out).map(|_| rng.gen_range(-bound..bound)).collect();
        Self { w, b: vec![0.0; out], inp, out }
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.out {
            let row = &self.w[o * self.inp..(o + 1) * self.inp];
            out.push(self.b[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>());
        }
    }

    fn zeros_like(&self) -> Dense {
        Dense { w: vec![0.0; self.w.len()], b: vec![0.0; self.b.len()], inp: self.inp, out: self.out }
    }
}

/// Policy network parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyModel {
    l1: Dense,
    l2: Dense,
    head_pi: Dense,
    head_v: Dense,
    pub obs_dim: usize,
    pub n_actions: usize,
}

/// Cached activations for one forward pass.
pub struct ForwardCache {
    pub obs: Vec<f64>,
    h1: Vec<f64>,
    h2: Vec<f64>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    pub value: f64,
}

impl PolicyModel {
    pub fn new(rng: &mut ChaCha8Rng, obs_dim: usize, hidden: usize, n_actions: usize) -> Self {
        Self {
            l1: Dense::new(rng, obs_dim, hidden, 1.0),
            l2: Dense::new(rng, hidden, hidden, 1.0),
            // small heads keep the initial policy near uniform and the
            // initial values near zero, so normalized advantages carry no
            // signal until real rewards arrive
            head_pi: Dense::new(rng, hidden, n_actions, 0.01),
            head_v: Dense::new(rng, hidden, 1, 0.01),
            obs_dim,
            n_actions,
        }
    }

    pub fn parameter_count(&self) -> usize {
        [&self.l1, &self.l2, &self.head_pi, &self.head_v]
            .iter()
            .map(|l| l.w.len() + l.b.len())
            .sum()
    }

    pub fn forward(&self, obs: &[f64]) -> ForwardCache {
        debug_assert_eq!(obs.len(), self.obs_dim);
        let mut pre1 = Vec::new();
        self.l1.forward(obs, &mut pre1);
        let h1: Vec<f64> = pre1.iter().map(|v| v.tanh()).collect();
        let mut pre2 = Vec::new();
        self.l2.forward(&h1, &mut pre2);
        let h2: Vec<f64> = pre2.iter().map(|v| v.tanh()).collect();
        let mut logits = Vec::new();
        self.head_pi.forward(&h2, &mut logits);
        let mut value = Vec::new();
        self.head_v.forward(&h2, &mut value);
        let probs = softmax(&logits);
        ForwardCache { obs: obs.to_vec(), h1, h2, logits, probs, value: value[0] }
    }

    /// Sample an action; returns (action, log-prob, value).
    pub fn sample(&self, obs: &[f64], rng: &mut ChaCha8Rng) -> (usize, f64, f64) {
        let cache = self.forward(obs);
        let u: f64 = rng.gen();
        let mut cum = 0.0;
        let mut action = cache.probs.len() - 1;
        for (i, p) in cache.probs.iter().enumerate() {
            cum += p;
            if u < cum {
                action = i;
                break;
            }
        }
        (action, cache.probs[action].max(1e-30).ln(), cache.value)
    }

    pub fn greedy(&self, obs: &[f64]) -> usize {
        let cache = self.forward(obs);
        cache
            .probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap()
    }

    pub fn value(&self, obs: &[f64]) -> f64 {
        self.forward(obs).value
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Accumulated parameter gradients, same shape as the model.
#[derive(Debug, Clone)]
pub struct Gradients {
    l1: Dense,
    l2: Dense,
    head_pi: Dense,
    head_v: Dense,
    pub samples: usize,
}

impl Gradients {
    pub fn zeros(model: &PolicyModel) -> Self {
        Self {
            l1: model.l1.zeros_like(),
            l2: model.l2.zeros_like(),
            head_pi: model.head_pi.zeros_like(),
            head_v: model.head_v.zeros_like(),
            samples: 0,
        }
    }

    /// Backpropagate one sample given the loss gradients at the heads.
    pub fn accumulate(
        &mut self,
        model: &PolicyModel,
        cache: &ForwardCache,
        dlogits: &[f64],
        dvalue: f64,
    ) {
        self.samples += 1;
        // value head
        let mut dh2 = vec![0.0; model.head_v.inp];
        for i in 0..model.head_v.inp {
            self.head_v.w[i] += dvalue * cache.h2[i];
            dh2[i] += dvalue * model.head_v.w[i];
        }
        self.head_v.b[0] += dvalue;
        // policy head
        for o in 0..model.head_pi.out {
            let g = dlogits[o];
            if g != 0.0 {
                let row = &model.head_pi.w[o * model.head_pi.inp..(o + 1) * model.head_pi.inp];
                let grow =
                    &mut self.head_pi.w[o * model.head_pi.inp..(o + 1) * model.head_pi.inp];
                for i in 0..model.head_pi.inp {
                    grow[i] += g * cache.h2[i];
                    dh2[i] += g * row[i];
                }
                self.head_pi.b[o] += g;
            }
        }
        // through tanh of layer 2
        let mut dh1 = vec![0.0; model.l2.inp];
        for o in 0..model.l2.out {
            let g = dh2[o] * (1.0 - cache.h2[o] * cache.h2[o]);
            if g != 0.0 {
                let row = &model.l2.w[o * model.l2.inp..(o + 1) * model.l2.inp];
                let grow = &mut self.l2.w[o * model.l2.inp..(o + 1) * model.l2.inp];
                for i in 0..model.l2.inp {
                    grow[i] += g * cache.h1[i];
                    dh1[i] += g * row[i];
                }
                self.l2.b[o] += g;
            }
        }
        // through tanh of layer 1; observations are sparse one-hots, skip zeros
        for o in 0..model.l1.out {
            let g = dh1[o] * (1.0 - cache.h1[o] * cache.h1[o]);
            if g != 0.0 {
                let grow = &mut self.l1.w[o * model.l1.inp..(o + 1) * model.l1.inp];
                for (i, &x) in cache.obs.iter().enumerate() {
                    if x != 0.0 {
                        grow[i] += g * x;
                    }
                }
                self.l1.b[o] += g;
            }
        }
    }

    fn layers_mut(&mut self) -> [&mut Dense; 4] {
        [&mut self.l1, &mut self.l2, &mut self.head_pi, &mut self.head_v]
    }

    /// Divide by the sample count and clip to a global L2 norm.
    pub fn finalize(&mut self, max_norm: f64) {
        let n = self.samples.max(1) as f64;
        let mut norm2 = 0.0;
        for layer in self.layers_mut() {
            for v in layer.w.iter_mut().chain(layer.b.iter_mut()) {
                *v /= n;
                norm2 += *v * *v;
            }
        }
        let norm = norm2.sqrt();
        if norm > max_norm {
            let scale = max_norm / norm;
            for layer in self.layers_mut() {
                for v in layer.w.iter_mut().chain(layer.b.iter_mut()) {
                    *v *= scale;
                }
            }
        }
    }
}

/// Adaptive-moment gradient descent state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    pub lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    pub fn new(model: &PolicyModel, lr: f64) -> Self {
        let n = model.parameter_count();
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0, lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    pub fn step(&mut self, model: &mut PolicyModel, grads: &Gradients) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let mut k = 0;
        let model_layers: [&mut Dense; 4] =
            [&mut model.l1, &mut model.l2, &mut model.head_pi, &mut model.head_v];
        let grad_layers: [&Dense; 4] = [&grads.l1, &grads.l2, &grads.head_pi, &grads.head_v];
        for (layer, glayer) in model_layers.into_iter().zip(grad_layers) {
            for (p, g) in
                layer.w.iter_mut().chain(layer.b.iter_mut()).zip(glayer.w.iter().chain(glayer.b.iter()))
            {
                self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g;
                self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g;
                let mhat = self.m[k] / bc1;
                let vhat = self.v[k] / bc2;
                *p -= self.lr * mhat / (vhat.sqrt() + self.eps);
                k += 1;
            }
        }
        debug_assert_eq!(k, self.m.len());
    }
}
