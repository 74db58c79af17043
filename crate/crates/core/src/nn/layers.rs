use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Graph, Init, ParamId, ParamStore, Var};

const LN_EPS: f64 = 1e-5;

/// Train-time dropout state; absent in deterministic evaluation.
pub struct Dropout {
    pub p: f64,
    pub rng: ChaCha8Rng,
}

fn dropout(g: &mut Graph, x: Var, d: Option<&mut Dropout>) -> Var {
    match d {
        Some(d) if d.p > 0.0 => g.dropout(x, d.p, &mut d.rng),
        _ => x,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
    pub inputs: usize,
    pub outputs: usize,
}

impl Linear {
    pub fn new(store: &mut ParamStore, name: &str, inputs: usize, outputs: usize, init: Init, rng: &mut impl Rng) -> Self {
        let w = store.add(&format!("{name}.w"), inputs, outputs, init, rng);
        let b = store.add(&format!("{name}.b"), 1, outputs, Init::Zeros, rng);
        Self { w, b, inputs, outputs }
    }

    pub fn forward(&self, g: &mut Graph, x: Var) -> Var {
        let w = g.param(self.w);
        let b = g.param(self.b);
        let y = g.matmul(x, w);
        g.add_row(y, b)
    }
}

/// Affine stack with ReLU between layers; the last layer is linear.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mlp {
    pub layers: Vec<Linear>,
}

impl Mlp {
    /// `dims = [in, hidden.., out]`; `last_init` initializes the output layer.
    pub fn new(store: &mut ParamStore, name: &str, dims: &[usize], last_init: Init, rng: &mut impl Rng) -> Self {
        let n = dims.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let init = if i + 1 == n { last_init } else { Init::Xavier };
                Linear::new(store, &format!("{name}.{i}"), dims[i], dims[i + 1], init, rng)
            })
            .collect();
        Self { layers }
    }

    pub fn forward(&self, g: &mut Graph, mut x: Var) -> Var {
        for (i, l) in self.layers.iter().enumerate() {
            x = l.forward(g, x);
            if i + 1 < self.layers.len() {
                x = g.relu(x);
            }
        }
        x
    }

    /// As `forward` with a ReLU after the last layer too.
    pub fn forward_relu(&self, g: &mut Graph, x: Var) -> Var {
        let y = self.forward(g, x);
        g.relu(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
}

impl LayerNorm {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize, rng: &mut impl Rng) -> Self {
        let gamma = store.add(&format!("{name}.gamma"), 1, dim, Init::Ones, rng);
        let beta = store.add(&format!("{name}.beta"), 1, dim, Init::Zeros, rng);
        Self { gamma, beta }
    }

    pub fn forward(&self, g: &mut Graph, x: Var) -> Var {
        let gamma = g.param(self.gamma);
        let beta = g.param(self.beta);
        g.layer_norm(x, gamma, beta, LN_EPS)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttentionConfig {
    pub heads: usize,
    pub model_dim: usize,
    pub ff_dim: usize,
    pub dropout: f64,
}

impl AttentionConfig {
    pub fn head_dim(&self) -> usize {
        self.model_dim / self.heads
    }

    pub fn is_valid(&self) -> bool {
        self.heads > 0 && self.model_dim % self.heads == 0 && (0.0..1.0).contains(&self.dropout)
    }
}

/// Scaled dot-product multi-head attention without masking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultiHeadAttention {
    pub q: Linear,
    pub k: Linear,
    pub v: Linear,
    pub o: Linear,
    pub heads: usize,
}

impl MultiHeadAttention {
    /// Queries of width `dim`, keys/values projected from width `source_dim`.
    pub fn new(store: &mut ParamStore, name: &str, dim: usize, source_dim: usize, heads: usize, rng: &mut impl Rng) -> Self {
        assert!(heads > 0 && dim % heads == 0, "model dim must be divisible by heads");
        Self {
            q: Linear::new(store, &format!("{name}.q"), dim, dim, Init::Xavier, rng),
            k: Linear::new(store, &format!("{name}.k"), source_dim, dim, Init::Xavier, rng),
            v: Linear::new(store, &format!("{name}.v"), source_dim, dim, Init::Xavier, rng),
            o: Linear::new(store, &format!("{name}.o"), dim, dim, Init::Xavier, rng),
            heads,
        }
    }

    /// Output and the per-head attention weight matrices.
    pub fn forward_with_weights(&self, g: &mut Graph, x: Var, source: Var) -> (Var, Vec<Var>) {
        let dim = self.q.outputs;
        let dh = dim / self.heads;
        let q = self.q.forward(g, x);
        let k = self.k.forward(g, source);
        let v = self.v.forward(g, source);
        let scale = 1.0 / libm::sqrt(dh as f64);
        let mut outs = Vec::with_capacity(self.heads);
        let mut weights = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let (qh, kh, vh) = if self.heads == 1 {
                (q, k, v)
            } else {
                (g.slice_cols(q, h * dh, dh), g.slice_cols(k, h * dh, dh), g.slice_cols(v, h * dh, dh))
            };
            let s = g.matmul_nt(qh, kh);
            let s = g.scale(s, scale);
            let a = g.softmax_rows(s);
            weights.push(a);
            outs.push(g.matmul(a, vh));
        }
        let cat = if outs.len() == 1 { outs[0] } else { g.concat_cols(&outs) };
        (self.o.forward(g, cat), weights)
    }

    pub fn forward(&self, g: &mut Graph, x: Var, source: Var) -> Var {
        self.forward_with_weights(g, x, source).0
    }
}

/// Pre-norm block: `x + SA(LN x)`, then `x + CA(LN x, source)` when present,
/// then `x + FF(LN x)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttentionBlock {
    pub ln_sa: LayerNorm,
    pub sa: MultiHeadAttention,
    pub cross: Option<(LayerNorm, MultiHeadAttention)>,
    pub ln_ff: LayerNorm,
    pub ff: Mlp,
}

impl AttentionBlock {
    pub fn new(store: &mut ParamStore, name: &str, cfg: &AttentionConfig, source_dim: Option<usize>, rng: &mut impl Rng) -> Self {
        let d = cfg.model_dim;
        let ln_sa = LayerNorm::new(store, &format!("{name}.ln_sa"), d, rng);
        let sa = MultiHeadAttention::new(store, &format!("{name}.sa"), d, d, cfg.heads, rng);
        let cross = source_dim.map(|s| {
            (
                LayerNorm::new(store, &format!("{name}.ln_ca"), d, rng),
                MultiHeadAttention::new(store, &format!("{name}.ca"), d, s, cfg.heads, rng),
            )
        });
        let ln_ff = LayerNorm::new(store, &format!("{name}.ln_ff"), d, rng);
        let ff = Mlp::new(store, &format!("{name}.ff"), &[d, cfg.ff_dim, d], Init::Xavier, rng);
        Self { ln_sa, sa, cross, ln_ff, ff }
    }

    pub fn forward(&self, g: &mut Graph, x: Var, source: Option<Var>, mut drop: Option<&mut Dropout>) -> Var {
        let h = self.ln_sa.forward(g, x);
        let a = self.sa.forward(g, h, h);
        let a = dropout(g, a, drop.as_deref_mut());
        let mut x = g.add(x, a);
        if let (Some((ln, ca)), Some(src)) = (&self.cross, source) {
            let h = ln.forward(g, x);
            let a = ca.forward(g, h, src);
            let a = dropout(g, a, drop.as_deref_mut());
            x = g.add(x, a);
        }
        let h = self.ln_ff.forward(g, x);
        let f = self.ff.forward(g, h);
        let f = dropout(g, f, drop.as_deref_mut());
        g.add(x, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{grad_check, Grads};
    use alloc::vec;
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(17)
    }

    fn random(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn zero_mlp_outputs_zero() {
        let mut r = rng();
        let mut s = ParamStore::new();
        let m = Mlp::new(&mut s, "m", &[4, 8, 3], Init::Zeros, &mut r);
        for l in &m.layers {
            s.get_mut(l.w).data.iter_mut().for_each(|x| *x = 0.0);
        }
        let mut g = Graph::new(&s);
        let x = g.input(2, 4, random(&mut r, 8));
        let y = m.forward(&mut g, x);
        assert!(g.value(y).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_linear() {
        let mut r = rng();
        let mut s = ParamStore::new();
        let l = Linear::new(&mut s, "l", 3, 3, Init::Zeros, &mut r);
        for i in 0..3 {
            s.get_mut(l.w).data[i * 3 + i] = 1.0;
        }
        let mut g = Graph::new(&s);
        let xs = random(&mut r, 6);
        let x = g.input(2, 3, xs.clone());
        let y = Mlp { layers: vec![l] }.forward(&mut g, x);
        assert_eq!(g.value(y), &xs[..]);
    }

    #[test]
    fn mlp_matches_matrix_chain_oracle() {
        let mut r = rng();
        let mut s = ParamStore::new();
        let dims = [5, 7, 6, 3];
        let m = Mlp::new(&mut s, "m", &dims, Init::Xavier, &mut r);
        for l in &m.layers {
            s.get_mut(l.b).data = random(&mut r, l.outputs);
        }
        let xs = random(&mut r, 4 * 5);
        let mut g = Graph::new(&s);
        let x = g.input(4, 5, xs.clone());
        let y = m.forward(&mut g, x);
        // straight-line evaluation, one output scalar at a time
        for row in 0..4 {
            let mut h: Vec<f64> = xs[row * 5..row * 5 + 5].to_vec();
            for (li, l) in m.layers.iter().enumerate() {
                let w = &s.get(l.w).data;
                let b = &s.get(l.b).data;
                let mut next = vec![0.0; l.outputs];
                for o in 0..l.outputs {
                    let mut acc = b[o];
                    for i in 0..l.inputs {
                        acc += h[i] * w[i * l.outputs + o];
                    }
                    next[o] = if li + 1 < m.layers.len() { acc.max(0.0) } else { acc };
                }
                h = next;
            }
            for o in 0..3 {
                assert!((g.value(y)[row * 3 + o] - h[o]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn single_token_attention_is_residual_plus_value() {
        let mut r = rng();
        let mut s = ParamStore::new();
        let mha = MultiHeadAttention::new(&mut s, "a", 4, 4, 2, &mut r);
        for l in [mha.q, mha.k, mha.v, mha.o] {
            let t = s.get_mut(l.w);
            t.data.iter_mut().for_each(|x| *x = 0.0);
            for i in 0..4 {
                t.data[i * 4 + i] = 1.0;
            }
        }
        let xs = random(&mut r, 4);
        let mut g = Graph::new(&s);
        let x = g.input(1, 4, xs.clone());
        let a = mha.forward(&mut g, x, x);
        let y = g.add(x, a);
        for i in 0..4 {
            assert!((g.value(y)[i] - 2.0 * xs[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn equal_logits_give_uniform_weights_and_rows_sum_to_one() {
        let s = ParamStore::new();
        let mut g = Graph::new(&s);
        let x = g.input(1, 5, vec![0.3; 5]);
        let p = g.softmax_rows(x);
        assert!(g.value(p).iter().all(|&v| (v - 0.2).abs() < 1e-15));

        let mut r = rng();
        let mut s = ParamStore::new();
        let mha = MultiHeadAttention::new(&mut s, "a", 8, 6, 4, &mut r);
        let mut g = Graph::new(&s);
        let x = g.input(5, 8, random(&mut r, 40));
        let src = g.input(7, 6, random(&mut r, 42));
        let (_, ws) = mha.forward_with_weights(&mut g, x, src);
        for w in ws {
            for row in g.value(w).chunks(7) {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cross_attention_is_key_permutation_invariant() {
        let mut r = rng();
        let mut s = ParamStore::new();
        let mha = MultiHeadAttention::new(&mut s, "a", 8, 6, 2, &mut r);
        let xs = random(&mut r, 24);
        let src = random(&mut r, 5 * 6);
        let perm = [3, 0, 4, 1, 2];
        let src_p: Vec<f64> = perm.iter().flat_map(|&i| src[i * 6..i * 6 + 6].to_vec()).collect();
        let run = |src: Vec<f64>| {
            let mut g = Graph::new(&s);
            let x = g.input(3, 8, xs.clone());
            let k = g.input(5, 6, src);
            let y = mha.forward(&mut g, x, k);
            g.value(y).to_vec()
        };
        for (a, b) in run(src).iter().zip(run(src_p)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn attention_block_gradients() {
        let mut r = rng();
        let mut s = ParamStore::new();
        let cfg = AttentionConfig { heads: 2, model_dim: 8, ff_dim: 12, dropout: 0.0 };
        let block = AttentionBlock::new(&mut s, "b", &cfg, Some(5), &mut r);
        let xs = random(&mut r, 3 * 8);
        let srcs = random(&mut r, 4 * 5);
        let target = random(&mut r, 3 * 8);
        let f = |st: &ParamStore, grads: Option<&mut Grads>| {
            let mut g = Graph::new(st);
            let x = g.input(3, 8, xs.clone());
            let src = g.input(4, 5, srcs.clone());
            let y = block.forward(&mut g, x, Some(src), None);
            let loss = g.mse(y, &target, &[1.0; 24]);
            if let Some(gr) = grads {
                g.backward(loss, gr);
            }
            g.scalar(loss)
        };
        let err = grad_check(&mut s, f, 16, 1e-5, 3);
        assert!(err <= 1e-4, "{err}");
    }

    #[test]
    fn cross_entropy_of_mlp_gradients() {
        let mut r = rng();
        let mut s = ParamStore::new();
        let m = Mlp::new(&mut s, "m", &[6, 10, 10, 4], Init::Xavier, &mut r);
        let xs = random(&mut r, 5 * 6);
        let f = |st: &ParamStore, grads: Option<&mut Grads>| {
            let mut g = Graph::new(st);
            let x = g.input(5, 6, xs.clone());
            let y = m.forward(&mut g, x);
            let loss = g.cross_entropy(y, &[0, 3, 1, 2, 3], &[0.2; 5]).unwrap();
            if let Some(gr) = grads {
                g.backward(loss, gr);
            }
            g.scalar(loss)
        };
        let err = grad_check(&mut s, f, 32, 1e-5, 5);
        assert!(err <= 1e-4, "{err}");
    }
}
