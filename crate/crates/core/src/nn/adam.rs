use alloc::vec;
use alloc::vec::Vec;

use super::{Grads, ParamStore};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Steps over which the learning rate ramps linearly from 0.
    pub warmup: u64,
    /// Total run length; when nonzero the rate follows a cosine from
    /// `decay_start` (or the end of warmup, if later) down to `lr * min_ratio`
    /// at this step.
    pub decay_steps: u64,
    pub decay_start: u64,
    pub min_ratio: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, warmup: 2000, decay_steps: 0, decay_start: 0, min_ratio: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub cfg: AdamConfig,
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(cfg: AdamConfig, store: &ParamStore) -> Self {
        let zeros: Vec<Vec<f64>> = store.iter().map(|(_, t)| vec![0.0; t.len()]).collect();
        Self { cfg, step: 0, m: zeros.clone(), v: zeros }
    }

    /// Learning rate used by step `t` (1-based).
    pub fn lr_at(&self, t: u64) -> f64 {
        let c = &self.cfg;
        if t < c.warmup {
            return c.lr * t as f64 / c.warmup as f64;
        }
        let t0 = c.warmup.max(c.decay_start);
        if c.decay_steps <= t0 || t <= t0 {
            return c.lr;
        }
        let x = ((t - t0) as f64 / (c.decay_steps - t0) as f64).min(1.0);
        let f = c.min_ratio + (1.0 - c.min_ratio) * 0.5 * (1.0 + libm::cos(core::f64::consts::PI * x));
        c.lr * f
    }

    pub fn update(&mut self, store: &mut ParamStore, grads: &Grads) {
        self.step += 1;
        let t = self.step;
        let lr = self.lr_at(t);
        let c = self.cfg;
        let bc1 = 1.0 - libm::pow(c.beta1, t as f64);
        let bc2 = 1.0 - libm::pow(c.beta2, t as f64);
        for (k, id) in store.ids().collect::<Vec<_>>().into_iter().enumerate() {
            let g = grads.get(id);
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            let p = &mut store.get_mut(id).data;
            for i in 0..p.len() {
                m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
                v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
                let mh = m[i] / bc1;
                let vh = v[i] / bc2;
                p[i] -= lr * mh / (libm::sqrt(vh) + c.eps);
            }
        }
    }
}
