//! Reverse-mode automatic differentiation over a flat operation tape.
//!
//! Values are vectors of f64 (scalars are length 1). Each op records enough
//! to replay its local derivative during the backward sweep; parameter
//! gradients accumulate into the owning [`ParamStore`].
//!
//! The tape also folds every non-smooth branch it takes (relu sign, plus any
//! discrete decision the caller reports) into a `kink_signature`. Two
//! evaluations are differentiable-comparable only when their signatures
//! match, which finite-difference checks use to discard perturbations that
//! crossed a kink.

use super::tensor::{ParamId, ParamStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValueId(usize);

#[derive(Debug, Clone)]
enum Op {
    Input,
    /// W·x (+ b). W is rows×cols with cols == len(x).
    Affine { w: ParamId, b: Option<ParamId>, x: ValueId },
    /// One row of an embedding table.
    EmbedRow { table: ParamId, row: usize },
    Add(ValueId, ValueId),
    /// Elementwise product.
    Mul(ValueId, ValueId),
    Scale(ValueId, f64),
    Relu(ValueId),
    Sigmoid(ValueId),
    Tanh(ValueId),
    Softplus(ValueId),
    Concat(Vec<ValueId>),
    SumVecs(Vec<ValueId>),
    MeanVecs(Vec<ValueId>),
    Dot(ValueId, ValueId),
    Softmax(ValueId),
    LogSumExp(ValueId),
    Index(ValueId, usize),
    /// Σ_i weights[i]·items[i], gradients flowing into both.
    LinComb { weights: ValueId, items: Vec<ValueId> },
}

struct Node {
    op: Op,
    value: Vec<f64>,
}

pub struct Tape {
    nodes: Vec<Node>,
    kinks: u64,
}

fn mix(state: u64, token: u64) -> u64 {
    // FNV-1a style fold; only equality of whole signatures matters.
    (state ^ token).wrapping_mul(0x0000_0100_0000_01b3)
}

impl Tape {
    pub fn new() -> Tape {
        Tape { nodes: Vec::new(), kinks: 0xcbf2_9ce4_8422_2325 }
    }

    fn push(&mut self, op: Op, value: Vec<f64>) -> ValueId {
        let id = ValueId(self.nodes.len());
        self.nodes.push(Node { op, value });
        id
    }

    pub fn value(&self, id: ValueId) -> &[f64] {
        &self.nodes[id.0].value
    }

    pub fn scalar(&self, id: ValueId) -> f64 {
        let v = self.value(id);
        assert_eq!(v.len(), 1, "expected a scalar value");
        v[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn kink_signature(&self) -> u64 {
        self.kinks
    }

    /// Folds a discrete decision taken outside the tape (e.g. a threshold)
    /// into the kink signature.
    pub fn note_decision(&mut self, token: u64) {
        self.kinks = mix(self.kinks, token);
    }

    pub fn input(&mut self, value: Vec<f64>) -> ValueId {
        self.push(Op::Input, value)
    }

    pub fn zeros(&mut self, len: usize) -> ValueId {
        self.push(Op::Input, vec![0.0; len])
    }

    pub fn affine(&mut self, store: &ParamStore, w: ParamId, b: Option<ParamId>, x: ValueId) -> ValueId {
        let wt = store.tensor(w);
        let xv = &self.nodes[x.0].value;
        assert_eq!(wt.cols, xv.len(), "affine shape mismatch");
        let mut out = match b {
            Some(bid) => {
                let bt = store.tensor(bid);
                assert_eq!(bt.len(), wt.rows, "bias length mismatch");
                bt.data.clone()
            }
            None => vec![0.0; wt.rows],
        };
        for (r, slot) in out.iter_mut().enumerate() {
            let row = &wt.data[r * wt.cols..(r + 1) * wt.cols];
            let mut acc = 0.0;
            for (wv, xv) in row.iter().zip(xv.iter()) {
                acc += wv * xv;
            }
            *slot += acc;
        }
        self.push(Op::Affine { w, b, x }, out)
    }

    pub fn embed(&mut self, store: &ParamStore, table: ParamId, row: usize) -> ValueId {
        let t = store.tensor(table);
        assert!(row < t.rows, "embedding row out of range");
        let value = t.data[row * t.cols..(row + 1) * t.cols].to_vec();
        self.push(Op::EmbedRow { table, row }, value)
    }

    pub fn add(&mut self, a: ValueId, b: ValueId) -> ValueId {
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(av.len(), bv.len(), "add length mismatch");
        let value = av.iter().zip(bv).map(|(x, y)| x + y).collect();
        self.push(Op::Add(a, b), value)
    }

    pub fn mul(&mut self, a: ValueId, b: ValueId) -> ValueId {
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(av.len(), bv.len(), "mul length mismatch");
        let value = av.iter().zip(bv).map(|(x, y)| x * y).collect();
        self.push(Op::Mul(a, b), value)
    }

    pub fn scale(&mut self, a: ValueId, factor: f64) -> ValueId {
        let value = self.nodes[a.0].value.iter().map(|x| x * factor).collect();
        self.push(Op::Scale(a, factor), value)
    }

    pub fn relu(&mut self, a: ValueId) -> ValueId {
        let idx = self.nodes.len() as u64;
        let mut kinks = self.kinks;
        let value: Vec<f64> = self.nodes[a.0]
            .value
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let active = x > 0.0;
                kinks = mix(kinks, (idx << 20) ^ ((i as u64) << 1) ^ active as u64);
                if active { x } else { 0.0 }
            })
            .collect();
        self.kinks = kinks;
        self.push(Op::Relu(a), value)
    }

    pub fn sigmoid(&mut self, a: ValueId) -> ValueId {
        let value = self.nodes[a.0]
            .value
            .iter()
            .map(|&x| {
                // Split on sign so neither branch exponentiates a large value.
                if x >= 0.0 { 1.0 / (1.0 + (-x).exp()) } else { let e = x.exp(); e / (1.0 + e) }
            })
            .collect();
        self.push(Op::Sigmoid(a), value)
    }

    pub fn tanh(&mut self, a: ValueId) -> ValueId {
        let value = self.nodes[a.0].value.iter().map(|x| x.tanh()).collect();
        self.push(Op::Tanh(a), value)
    }

    pub fn softplus(&mut self, a: ValueId) -> ValueId {
        let value = self.nodes[a.0]
            .value
            .iter()
            .map(|&x| if x > 30.0 { x } else { x.exp().ln_1p() })
            .collect();
        self.push(Op::Softplus(a), value)
    }

    pub fn concat(&mut self, parts: &[ValueId]) -> ValueId {
        let mut value = Vec::new();
        for &p in parts {
            value.extend_from_slice(&self.nodes[p.0].value);
        }
        self.push(Op::Concat(parts.to_vec()), value)
    }

    pub fn sum_vecs(&mut self, parts: &[ValueId]) -> ValueId {
        assert!(!parts.is_empty(), "sum of no vectors");
        let len = self.nodes[parts[0].0].value.len();
        let mut value = vec![0.0; len];
        for &p in parts {
            let pv = &self.nodes[p.0].value;
            assert_eq!(pv.len(), len, "sum length mismatch");
            for (o, x) in value.iter_mut().zip(pv) {
                *o += x;
            }
        }
        self.push(Op::SumVecs(parts.to_vec()), value)
    }

    pub fn mean_vecs(&mut self, parts: &[ValueId]) -> ValueId {
        assert!(!parts.is_empty(), "mean of no vectors");
        let len = self.nodes[parts[0].0].value.len();
        let inv = 1.0 / parts.len() as f64;
        let mut value = vec![0.0; len];
        for &p in parts {
            let pv = &self.nodes[p.0].value;
            assert_eq!(pv.len(), len, "mean length mismatch");
            for (o, x) in value.iter_mut().zip(pv) {
                *o += x * inv;
            }
        }
        self.push(Op::MeanVecs(parts.to_vec()), value)
    }

    pub fn dot(&mut self, a: ValueId, b: ValueId) -> ValueId {
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(av.len(), bv.len(), "dot length mismatch");
        let value = av.iter().zip(bv).map(|(x, y)| x * y).sum();
        self.push(Op::Dot(a, b), vec![value])
    }

    pub fn softmax(&mut self, a: ValueId) -> ValueId {
        let xv = &self.nodes[a.0].value;
        assert!(!xv.is_empty(), "softmax of empty vector");
        let max = xv.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = xv.iter().map(|x| (x - max).exp()).collect();
        let denom: f64 = exps.iter().sum();
        let value = exps.iter().map(|e| e / denom).collect();
        self.push(Op::Softmax(a), value)
    }

    pub fn log_sum_exp(&mut self, a: ValueId) -> ValueId {
        let xv = &self.nodes[a.0].value;
        assert!(!xv.is_empty(), "log-sum-exp of empty vector");
        let max = xv.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = xv.iter().map(|x| (x - max).exp()).sum();
        self.push(Op::LogSumExp(a), vec![max + sum.ln()])
    }

    pub fn index(&mut self, a: ValueId, i: usize) -> ValueId {
        let value = vec![self.nodes[a.0].value[i]];
        self.push(Op::Index(a, i), value)
    }

    pub fn lin_comb(&mut self, weights: ValueId, items: &[ValueId]) -> ValueId {
        let wv = &self.nodes[weights.0].value;
        assert_eq!(wv.len(), items.len(), "one weight per item");
        assert!(!items.is_empty(), "combination of no items");
        let len = self.nodes[items[0].0].value.len();
        let mut value = vec![0.0; len];
        for (&w, &item) in wv.iter().zip(items) {
            let iv = &self.nodes[item.0].value;
            assert_eq!(iv.len(), len, "item length mismatch");
            for (o, x) in value.iter_mut().zip(iv) {
                *o += w * x;
            }
        }
        let wv = weights;
        self.push(Op::LinComb { weights: wv, items: items.to_vec() }, value)
    }

    /// Backpropagates d(loss)/d(everything) from a scalar loss node,
    /// accumulating parameter gradients into `store`.
    pub fn backward(&self, loss: ValueId, store: &mut ParamStore) {
        assert_eq!(self.nodes[loss.0].value.len(), 1, "loss must be a scalar");
        let mut adj: Vec<Vec<f64>> = self.nodes.iter().map(|n| vec![0.0; n.value.len()]).collect();
        adj[loss.0][0] = 1.0;
        for idx in (0..=loss.0).rev() {
            if adj[idx].iter().all(|&g| g == 0.0) {
                continue;
            }
            let dy = std::mem::take(&mut adj[idx]);
            match &self.nodes[idx].op {
                Op::Input => {}
                Op::Affine { w, b, x } => {
                    let wt = store.tensor(*w);
                    let (rows, cols) = (wt.rows, wt.cols);
                    let xv = self.nodes[x.0].value.clone();
                    let wdata = wt.data.clone();
                    {
                        let gw = store.grad_mut(*w);
                        for r in 0..rows {
                            for c in 0..cols {
                                gw[r * cols + c] += dy[r] * xv[c];
                            }
                        }
                    }
                    if let Some(bid) = b {
                        let gb = store.grad_mut(*bid);
                        for r in 0..rows {
                            gb[r] += dy[r];
                        }
                    }
                    let dx = &mut adj[x.0];
                    for r in 0..rows {
                        for c in 0..cols {
                            dx[c] += wdata[r * cols + c] * dy[r];
                        }
                    }
                }
                Op::EmbedRow { table, row } => {
                    let cols = store.tensor(*table).cols;
                    let gt = store.grad_mut(*table);
                    for (c, g) in dy.iter().enumerate() {
                        gt[row * cols + c] += g;
                    }
                }
                Op::Add(a, b) => {
                    for (g, d) in adj[a.0].iter_mut().zip(&dy) {
                        *g += d;
                    }
                    for (g, d) in adj[b.0].iter_mut().zip(&dy) {
                        *g += d;
                    }
                }
                Op::Mul(a, b) => {
                    let (a, b) = (*a, *b);
                    for i in 0..dy.len() {
                        let (av, bv) = (self.nodes[a.0].value[i], self.nodes[b.0].value[i]);
                        adj[a.0][i] += dy[i] * bv;
                        adj[b.0][i] += dy[i] * av;
                    }
                }
                Op::Scale(a, f) => {
                    for (g, d) in adj[a.0].iter_mut().zip(&dy) {
                        *g += d * f;
                    }
                }
                Op::Relu(a) => {
                    for i in 0..dy.len() {
                        if self.nodes[a.0].value[i] > 0.0 {
                            adj[a.0][i] += dy[i];
                        }
                    }
                }
                Op::Sigmoid(a) => {
                    for i in 0..dy.len() {
                        let y = self.nodes[idx].value[i];
                        adj[a.0][i] += dy[i] * y * (1.0 - y);
                    }
                }
                Op::Tanh(a) => {
                    for i in 0..dy.len() {
                        let y = self.nodes[idx].value[i];
                        adj[a.0][i] += dy[i] * (1.0 - y * y);
                    }
                }
                Op::Softplus(a) => {
                    for i in 0..dy.len() {
                        let x = self.nodes[a.0].value[i];
                        let s = if x >= 0.0 { 1.0 / (1.0 + (-x).exp()) } else { let e = x.exp(); e / (1.0 + e) };
                        adj[a.0][i] += dy[i] * s;
                    }
                }
                Op::Concat(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let len = self.nodes[p.0].value.len();
                        for i in 0..len {
                            adj[p.0][i] += dy[off + i];
                        }
                        off += len;
                    }
                }
                Op::SumVecs(parts) => {
                    for &p in parts {
                        for (g, d) in adj[p.0].iter_mut().zip(&dy) {
                            *g += d;
                        }
                    }
                }
                Op::MeanVecs(parts) => {
                    let inv = 1.0 / parts.len() as f64;
                    for &p in parts {
                        for (g, d) in adj[p.0].iter_mut().zip(&dy) {
                            *g += d * inv;
                        }
                    }
                }
                Op::Dot(a, b) => {
                    let (a, b) = (*a, *b);
                    let g = dy[0];
                    if a == b {
                        let vals = &self.nodes[a.0].value;
                        for (s, &v) in adj[a.0].iter_mut().zip(vals) {
                            *s += 2.0 * g * v;
                        }
                    } else {
                        let bv = &self.nodes[b.0].value;
                        for (s, &v) in adj[a.0].iter_mut().zip(bv) {
                            *s += g * v;
                        }
                        let av = &self.nodes[a.0].value;
                        for (s, &v) in adj[b.0].iter_mut().zip(av) {
                            *s += g * v;
                        }
                    }
                }
                Op::Softmax(a) => {
                    // dx = y ⊙ (dy − y·dy)
                    let y = &self.nodes[idx].value;
                    let inner: f64 = y.iter().zip(&dy).map(|(yi, di)| yi * di).sum();
                    for i in 0..dy.len() {
                        adj[a.0][i] += y[i] * (dy[i] - inner);
                    }
                }
                Op::LogSumExp(a) => {
                    let xv = &self.nodes[a.0].value;
                    let max = xv.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let exps: Vec<f64> = xv.iter().map(|x| (x - max).exp()).collect();
                    let denom: f64 = exps.iter().sum();
                    for i in 0..xv.len() {
                        adj[a.0][i] += dy[0] * exps[i] / denom;
                    }
                }
                Op::Index(a, i) => {
                    adj[a.0][*i] += dy[0];
                }
                Op::LinComb { weights, items } => {
                    let wv = self.nodes[weights.0].value.clone();
                    for (k, &item) in items.iter().enumerate() {
                        let mut wgrad = 0.0;
                        for i in 0..dy.len() {
                            adj[item.0][i] += wv[k] * dy[i];
                            wgrad += dy[i] * self.nodes[item.0].value[i];
                        }
                        adj[weights.0][k] += wgrad;
                    }
                }
            }
        }
    }
}

impl Default for Tape {
    fn default() -> Self {
        Tape::new()
    }
}
