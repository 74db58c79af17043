use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{Grads, NnError, ParamId, ParamStore};

/// Handle to a node of a `Graph`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    MatMulNT(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    LayerNorm { x: Var, gamma: Var, beta: Var, stats: Vec<(f64, f64)> },
    Softmax(Var),
    SliceCols { x: Var, start: usize },
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    GatherRows { x: Var, index: Vec<usize> },
    Reshape(Var),
    GroupMax { x: Var, argmax: Vec<usize> },
    CrossEntropy { logits: Var, targets: Vec<usize>, weights: Vec<f64>, probs: Vec<f64> },
    Mse { pred: Var, target: Vec<f64>, weights: Vec<f64> },
    Dropout { x: Var, mask: Vec<f64> },
    Sum(Vec<Var>),
}

#[derive(Debug)]
struct Node {
    rows: usize,
    cols: usize,
    value: Vec<f64>,
    op: Op,
    needs_grad: bool,
}

/// Reverse-mode tape over row-major matrices. Parameters are read in place
/// from the store; their gradients are accumulated into a `Grads` buffer.
/// Shape errors are programming errors and panic.
pub struct Graph<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
}

fn matmul_into(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (o, bv) in row.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
}

/// `out[m×n] += a[m×k] · b[n×k]ᵀ`
fn matmul_nt_into(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let brow = &b[j * k..(j + 1) * k];
            let mut s = 0.0;
            for (x, y) in arow.iter().zip(brow) {
                s += x * y;
            }
            out[i * n + j] += s;
        }
    }
}

/// `out[k×n] += a[m×k]ᵀ · b[m×n]`
fn matmul_tn_into(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let brow = &b[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let orow = &mut out[p * n..(p + 1) * n];
            for (o, bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Self { params, nodes: Vec::new() }
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, rows: usize, cols: usize, value: Vec<f64>, op: Op, needs_grad: bool) -> Var {
        debug_assert!(matches!(op, Op::Param(_)) || value.len() == rows * cols);
        self.nodes.push(Node { rows, cols, value, op, needs_grad });
        Var(self.nodes.len() - 1)
    }

    fn ng(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn value(&self, v: Var) -> &[f64] {
        match self.nodes[v.0].op {
            Op::Param(id) => &self.params.get(id).data,
            _ => &self.nodes[v.0].value,
        }
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        (self.nodes[v.0].rows, self.nodes[v.0].cols)
    }

    /// The single value of a 1×1 node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v)[0]
    }

    pub fn input(&mut self, rows: usize, cols: usize, data: Vec<f64>) -> Var {
        assert_eq!(data.len(), rows * cols, "input data does not match its shape");
        self.push(rows, cols, data, Op::Leaf, false)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        let (r, c) = self.params.get(id).dims2();
        self.push(r, c, Vec::new(), Op::Param(id), true)
    }

    /// Copy of `x` that blocks gradient flow.
    pub fn detach(&mut self, x: Var) -> Var {
        let (r, c) = self.shape(x);
        let v = self.value(x).to_vec();
        self.push(r, c, v, Op::Leaf, false)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (m, k) = self.shape(a);
        let (k2, n) = self.shape(b);
        assert_eq!(k, k2, "matmul inner dimensions differ");
        let mut out = vec![0.0; m * n];
        matmul_into(self.value(a), self.value(b), &mut out, m, k, n);
        let ng = self.ng(a) || self.ng(b);
        self.push(m, n, out, Op::MatMul(a, b), ng)
    }

    /// `a · bᵀ`
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Var {
        let (m, k) = self.shape(a);
        let (n, k2) = self.shape(b);
        assert_eq!(k, k2, "matmul_nt inner dimensions differ");
        let mut out = vec![0.0; m * n];
        matmul_nt_into(self.value(a), self.value(b), &mut out, m, k, n);
        let ng = self.ng(a) || self.ng(b);
        self.push(m, n, out, Op::MatMulNT(a, b), ng)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        assert_eq!(self.shape(a), self.shape(b), "add shapes differ");
        let (r, c) = self.shape(a);
        let out = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x + y).collect();
        let ng = self.ng(a) || self.ng(b);
        self.push(r, c, out, Op::Add(a, b), ng)
    }

    /// Adds a 1×cols row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let (r, c) = self.shape(a);
        assert_eq!(self.shape(row), (1, c), "add_row expects a 1×cols row");
        let bv = self.value(row);
        let out = self.value(a).chunks(c.max(1)).flat_map(|x| x.iter().zip(bv).map(|(p, q)| p + q)).collect();
        let ng = self.ng(a) || self.ng(row);
        self.push(r, c, out, Op::AddRow(a, row), ng)
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let (r, c) = self.shape(a);
        let out = self.value(a).iter().map(|x| x * s).collect();
        let ng = self.ng(a);
        self.push(r, c, out, Op::Scale(a, s), ng)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let (r, c) = self.shape(a);
        let out = self.value(a).iter().map(|&x| if x > 0.0 { x } else { 0.0 }).collect();
        let ng = self.ng(a);
        self.push(r, c, out, Op::Relu(a), ng)
    }

    /// Row-wise normalization with affine `gamma`, `beta` (1×cols each).
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: f64) -> Var {
        let (r, c) = self.shape(x);
        assert_eq!(self.shape(gamma), (1, c), "layer_norm gamma shape");
        assert_eq!(self.shape(beta), (1, c), "layer_norm beta shape");
        let (xv, g, b) = (self.value(x), self.value(gamma), self.value(beta));
        let mut out = Vec::with_capacity(r * c);
        let mut stats = Vec::with_capacity(r);
        for row in xv.chunks(c) {
            let mean = row.iter().sum::<f64>() / c as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / c as f64;
            let rstd = 1.0 / libm::sqrt(var + eps);
            for j in 0..c {
                out.push((row[j] - mean) * rstd * g[j] + b[j]);
            }
            stats.push((mean, rstd));
        }
        let ng = self.ng(x) || self.ng(gamma) || self.ng(beta);
        self.push(r, c, out, Op::LayerNorm { x, gamma, beta, stats }, ng)
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let (r, c) = self.shape(a);
        let mut out = Vec::with_capacity(r * c);
        for row in self.value(a).chunks(c) {
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let start = out.len();
            let mut s = 0.0;
            for &v in row {
                let e = libm::exp(v - m);
                s += e;
                out.push(e);
            }
            out[start..].iter_mut().for_each(|e| *e /= s);
        }
        let ng = self.ng(a);
        self.push(r, c, out, Op::Softmax(a), ng)
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Var {
        let (r, c) = self.shape(x);
        assert!(start + len <= c, "slice_cols out of range");
        let out = self.value(x).chunks(c).flat_map(|row| row[start..start + len].iter().copied()).collect();
        let ng = self.ng(x);
        self.push(r, len, out, Op::SliceCols { x, start }, ng)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concat_cols of nothing");
        let r = self.shape(parts[0]).0;
        assert!(parts.iter().all(|&p| self.shape(p).0 == r), "concat_cols row counts differ");
        let c: usize = parts.iter().map(|&p| self.shape(p).1).sum();
        let mut out = Vec::with_capacity(r * c);
        for i in 0..r {
            for &p in parts {
                let pc = self.shape(p).1;
                out.extend_from_slice(&self.value(p)[i * pc..(i + 1) * pc]);
            }
        }
        let ng = parts.iter().any(|&p| self.ng(p));
        self.push(r, c, out, Op::ConcatCols(parts.to_vec()), ng)
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concat_rows of nothing");
        let c = self.shape(parts[0]).1;
        assert!(parts.iter().all(|&p| self.shape(p).1 == c), "concat_rows column counts differ");
        let r: usize = parts.iter().map(|&p| self.shape(p).0).sum();
        let mut out = Vec::with_capacity(r * c);
        for &p in parts {
            out.extend_from_slice(self.value(p));
        }
        let ng = parts.iter().any(|&p| self.ng(p));
        self.push(r, c, out, Op::ConcatRows(parts.to_vec()), ng)
    }

    /// Rows of `x` in the order of `index` (repeats allowed).
    pub fn gather_rows(&mut self, x: Var, index: &[usize]) -> Var {
        let (r, c) = self.shape(x);
        assert!(index.iter().all(|&i| i < r), "gather_rows index out of range");
        let xv = self.value(x);
        let mut out = Vec::with_capacity(index.len() * c);
        for &i in index {
            out.extend_from_slice(&xv[i * c..(i + 1) * c]);
        }
        let ng = self.ng(x);
        self.push(index.len(), c, out, Op::GatherRows { x, index: index.to_vec() }, ng)
    }

    pub fn reshape(&mut self, x: Var, rows: usize, cols: usize) -> Var {
        let (r, c) = self.shape(x);
        assert_eq!(r * c, rows * cols, "reshape changes the element count");
        let out = self.value(x).to_vec();
        let ng = self.ng(x);
        self.push(rows, cols, out, Op::Reshape(x), ng)
    }

    /// Column-wise max over consecutive groups of `group` rows.
    pub fn group_max(&mut self, x: Var, group: usize) -> Var {
        let (r, c) = self.shape(x);
        assert!(group > 0 && r % group == 0, "group_max needs rows divisible by the group size");
        let g = r / group;
        let xv = self.value(x);
        let mut out = vec![f64::NEG_INFINITY; g * c];
        let mut argmax = vec![0usize; g * c];
        for gi in 0..g {
            for k in 0..group {
                let row = gi * group + k;
                for j in 0..c {
                    let v = xv[row * c + j];
                    if v > out[gi * c + j] {
                        out[gi * c + j] = v;
                        argmax[gi * c + j] = row;
                    }
                }
            }
        }
        let ng = self.ng(x);
        self.push(g, c, out, Op::GroupMax { x, argmax }, ng)
    }

    /// `Σ_i w_i · (−log softmax(logits_i)[t_i])` as a 1×1 node.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize], weights: &[f64]) -> Result<Var, NnError> {
        let (r, c) = self.shape(logits);
        if targets.len() != r || weights.len() != r {
            return Err(NnError::Shape("cross_entropy targets/weights must have one entry per row"));
        }
        if let Some(&index) = targets.iter().find(|&&t| t >= c) {
            return Err(NnError::ClassOutOfRange { index, classes: c });
        }
        let mut probs = Vec::with_capacity(r * c);
        let mut loss = 0.0;
        for (i, row) in self.value(logits).chunks(c).enumerate() {
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let start = probs.len();
            let mut s = 0.0;
            for &v in row {
                let e = libm::exp(v - m);
                s += e;
                probs.push(e);
            }
            probs[start..].iter_mut().for_each(|e| *e /= s);
            if weights[i] != 0.0 {
                loss += weights[i] * (m + libm::log(s) - row[targets[i]]);
            }
        }
        let ng = self.ng(logits);
        let op = Op::CrossEntropy { logits, targets: targets.to_vec(), weights: weights.to_vec(), probs };
        Ok(self.push(1, 1, vec![loss], op, ng))
    }

    /// `Σ_i w_i · (pred_i − target_i)²` as a 1×1 node.
    pub fn mse(&mut self, pred: Var, target: &[f64], weights: &[f64]) -> Var {
        let n = self.value(pred).len();
        assert!(target.len() == n && weights.len() == n, "mse target/weights length");
        let loss = self.value(pred).iter().zip(target).zip(weights).map(|((p, t), w)| w * (p - t) * (p - t)).sum();
        let ng = self.ng(pred);
        self.push(1, 1, vec![loss], Op::Mse { pred, target: target.to_vec(), weights: weights.to_vec() }, ng)
    }

    /// Inverted dropout; identity when `p == 0`.
    pub fn dropout(&mut self, x: Var, p: f64, rng: &mut impl Rng) -> Var {
        if p <= 0.0 {
            return x;
        }
        let (r, c) = self.shape(x);
        let keep = 1.0 - p;
        let mask: Vec<f64> = (0..r * c).map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 }).collect();
        let out = self.value(x).iter().zip(&mask).map(|(v, m)| v * m).collect();
        let ng = self.ng(x);
        self.push(r, c, out, Op::Dropout { x, mask }, ng)
    }

    /// Sum of 1×1 nodes.
    pub fn sum(&mut self, parts: &[Var]) -> Var {
        assert!(parts.iter().all(|&p| self.shape(p) == (1, 1)), "sum expects scalars");
        let v = parts.iter().map(|&p| self.scalar(p)).sum();
        let ng = parts.iter().any(|&p| self.ng(p));
        self.push(1, 1, vec![v], Op::Sum(parts.to_vec()), ng)
    }

    /// Accumulates `d loss / d param` into `grads` for a 1×1 `loss`.
    pub fn backward(&self, loss: Var, grads: &mut Grads) {
        self.backward_scaled(loss, 1.0, grads)
    }

    /// As `backward`, with the seed gradient `scale` (e.g. 1/batch).
    pub fn backward_scaled(&self, loss: Var, scale: f64, grads: &mut Grads) {
        assert_eq!(self.shape(loss), (1, 1), "backward needs a scalar loss");
        let mut g: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        g[loss.0] = Some(vec![scale]);
        for i in (0..=loss.0).rev() {
            let Some(dy) = g[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            self.propagate(node, &dy, &mut g, grads);
        }
    }

    fn slot<'a>(&self, g: &'a mut [Option<Vec<f64>>], v: Var) -> Option<&'a mut Vec<f64>> {
        let n = &self.nodes[v.0];
        if !n.needs_grad {
            return None;
        }
        Some(g[v.0].get_or_insert_with(|| vec![0.0; n.rows * n.cols]))
    }

    fn propagate(&self, node: &Node, dy: &[f64], g: &mut [Option<Vec<f64>>], grads: &mut Grads) {
        let (rows, cols) = (node.rows, node.cols);
        match &node.op {
            Op::Leaf => {}
            Op::Param(id) => add_into(&mut grads.0[id.0], dy),
            Op::MatMul(a, b) => {
                let (m, k) = self.shape(*a);
                let n = cols;
                if self.ng(*a) {
                    let bv = self.value(*b);
                    let da = self.slot(g, *a).unwrap();
                    matmul_nt_into(dy, bv, da, m, n, k);
                }
                if self.ng(*b) {
                    let av = self.value(*a);
                    let db = self.slot(g, *b).unwrap();
                    matmul_tn_into(av, dy, db, m, k, n);
                }
            }
            Op::MatMulNT(a, b) => {
                let (m, k) = self.shape(*a);
                let n = cols;
                if self.ng(*a) {
                    let bv = self.value(*b);
                    let da = self.slot(g, *a).unwrap();
                    matmul_into(dy, bv, da, m, n, k);
                }
                if self.ng(*b) {
                    let av = self.value(*a);
                    let db = self.slot(g, *b).unwrap();
                    matmul_tn_into(dy, av, db, m, n, k);
                }
            }
            Op::Add(a, b) => {
                for v in [a, b] {
                    if let Some(d) = self.slot(g, *v) {
                        add_into(d, dy);
                    }
                }
            }
            Op::AddRow(a, row) => {
                if let Some(d) = self.slot(g, *a) {
                    add_into(d, dy);
                }
                if let Some(d) = self.slot(g, *row) {
                    for r in dy.chunks(cols) {
                        add_into(d, r);
                    }
                }
            }
            Op::Scale(a, s) => {
                if let Some(d) = self.slot(g, *a) {
                    for (x, y) in d.iter_mut().zip(dy) {
                        *x += s * y;
                    }
                }
            }
            Op::Relu(a) => {
                if let Some(d) = self.slot(g, *a) {
                    for ((x, y), o) in d.iter_mut().zip(dy).zip(&node.value) {
                        if *o > 0.0 {
                            *x += y;
                        }
                    }
                }
            }
            Op::LayerNorm { x, gamma, beta, stats } => {
                let xv = self.value(*x);
                let gv = self.value(*gamma);
                let c = cols;
                let mut xhat = vec![0.0; rows * c];
                for (i, &(mean, rstd)) in stats.iter().enumerate() {
                    for j in 0..c {
                        xhat[i * c + j] = (xv[i * c + j] - mean) * rstd;
                    }
                }
                if let Some(d) = self.slot(g, *gamma) {
                    for (yh, dyv) in xhat.chunks(c).zip(dy.chunks(c)) {
                        for j in 0..c {
                            d[j] += dyv[j] * yh[j];
                        }
                    }
                }
                if let Some(d) = self.slot(g, *beta) {
                    for dyv in dy.chunks(c) {
                        add_into(d, dyv);
                    }
                }
                if let Some(d) = self.slot(g, *x) {
                    let cf = c as f64;
                    for (i, &(_, rstd)) in stats.iter().enumerate() {
                        let yh = &xhat[i * c..(i + 1) * c];
                        let dyv = &dy[i * c..(i + 1) * c];
                        let mut m1 = 0.0;
                        let mut m2 = 0.0;
                        for j in 0..c {
                            let dxh = dyv[j] * gv[j];
                            m1 += dxh;
                            m2 += dxh * yh[j];
                        }
                        m1 /= cf;
                        m2 /= cf;
                        for j in 0..c {
                            let dxh = dyv[j] * gv[j];
                            d[i * c + j] += rstd * (dxh - m1 - yh[j] * m2);
                        }
                    }
                }
            }
            Op::Softmax(a) => {
                if let Some(d) = self.slot(g, *a) {
                    for ((dr, yr), dyr) in d.chunks_mut(cols).zip(node.value.chunks(cols)).zip(dy.chunks(cols)) {
                        let dot: f64 = yr.iter().zip(dyr).map(|(y, t)| y * t).sum();
                        for j in 0..cols {
                            dr[j] += yr[j] * (dyr[j] - dot);
                        }
                    }
                }
            }
            Op::SliceCols { x, start } => {
                let xc = self.shape(*x).1;
                if let Some(d) = self.slot(g, *x) {
                    for (i, dyr) in dy.chunks(cols).enumerate() {
                        add_into(&mut d[i * xc + start..i * xc + start + cols], dyr);
                    }
                }
            }
            Op::ConcatCols(parts) => {
                let mut off = 0;
                for p in parts {
                    let pc = self.shape(*p).1;
                    if let Some(d) = self.slot(g, *p) {
                        for i in 0..rows {
                            add_into(&mut d[i * pc..(i + 1) * pc], &dy[i * cols + off..i * cols + off + pc]);
                        }
                    }
                    off += pc;
                }
            }
            Op::ConcatRows(parts) => {
                let mut off = 0;
                for p in parts {
                    let n = self.value(*p).len();
                    if let Some(d) = self.slot(g, *p) {
                        add_into(d, &dy[off..off + n]);
                    }
                    off += n;
                }
            }
            Op::GatherRows { x, index } => {
                if let Some(d) = self.slot(g, *x) {
                    for (k, &i) in index.iter().enumerate() {
                        add_into(&mut d[i * cols..(i + 1) * cols], &dy[k * cols..(k + 1) * cols]);
                    }
                }
            }
            Op::Reshape(x) => {
                if let Some(d) = self.slot(g, *x) {
                    add_into(d, dy);
                }
            }
            Op::GroupMax { x, argmax } => {
                if let Some(d) = self.slot(g, *x) {
                    for (k, &src) in argmax.iter().enumerate() {
                        d[src * cols + k % cols] += dy[k];
                    }
                }
            }
            Op::CrossEntropy { logits, targets, weights, probs } => {
                let c = self.shape(*logits).1;
                if let Some(d) = self.slot(g, *logits) {
                    for (i, (&t, &w)) in targets.iter().zip(weights).enumerate() {
                        if w == 0.0 {
                            continue;
                        }
                        let s = w * dy[0];
                        for j in 0..c {
                            d[i * c + j] += s * probs[i * c + j];
                        }
                        d[i * c + t] -= s;
                    }
                }
            }
            Op::Mse { pred, target, weights } => {
                let pv = self.value(*pred);
                if let Some(d) = self.slot(g, *pred) {
                    for i in 0..d.len() {
                        d[i] += 2.0 * weights[i] * (pv[i] - target[i]) * dy[0];
                    }
                }
            }
            Op::Dropout { x, mask } => {
                if let Some(d) = self.slot(g, *x) {
                    for ((a, y), m) in d.iter_mut().zip(dy).zip(mask) {
                        *a += y * m;
                    }
                }
            }
            Op::Sum(parts) => {
                for p in parts {
                    if let Some(d) = self.slot(g, *p) {
                        d[0] += dy[0];
                    }
                }
            }
        }
    }
}
