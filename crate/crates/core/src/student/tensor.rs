//! Named parameter tensors with gradient buffers and the Adam update rule.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A dense row-major matrix (vectors are n×1).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Tensor {
        Tensor { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId(pub(crate) usize);

/// Every trainable tensor of a model, registered in a fixed order so
/// initialization and checkpoints are reproducible.
#[derive(Debug, Clone)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    grads: Vec<Vec<f64>>,
    adam_m: Vec<Vec<f64>>,
    adam_v: Vec<Vec<f64>>,
    adam_t: u64,
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

impl ParamStore {
    pub fn new() -> ParamStore {
        ParamStore {
            names: Vec::new(),
            tensors: Vec::new(),
            grads: Vec::new(),
            adam_m: Vec::new(),
            adam_v: Vec::new(),
            adam_t: 0,
        }
    }

    /// Registers a tensor initialized uniformly in ±√(6/(fan_in+fan_out)).
    pub fn register(&mut self, name: &str, rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> ParamId {
        assert!(
            !self.names.iter().any(|n| n == name),
            "duplicate parameter name {name}"
        );
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        let data: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-bound..bound)).collect();
        let id = ParamId(self.tensors.len());
        self.names.push(name.to_string());
        self.tensors.push(Tensor { rows, cols, data });
        self.grads.push(vec![0.0; rows * cols]);
        self.adam_m.push(vec![0.0; rows * cols]);
        self.adam_v.push(vec![0.0; rows * cols]);
        id
    }

    pub fn tensor(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn tensor_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn grad(&self, id: ParamId) -> &[f64] {
        &self.grads[id.0]
    }

    pub(crate) fn grad_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.grads[id.0]
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn param_count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn id_by_name(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn zero_grads(&mut self) {
        for g in &mut self.grads {
            g.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    pub fn scale_grads(&mut self, factor: f64) {
        for g in &mut self.grads {
            g.iter_mut().for_each(|x| *x *= factor);
        }
    }

    /// One Adam step over every tensor from the accumulated gradients.
    pub fn adam_step(&mut self, lr: f64) {
        self.adam_t += 1;
        let t = self.adam_t as i32;
        let bc1 = 1.0 - ADAM_BETA1.powi(t);
        let bc2 = 1.0 - ADAM_BETA2.powi(t);
        for i in 0..self.tensors.len() {
            let (data, grad) = (&mut self.tensors[i].data, &self.grads[i]);
            let (m, v) = (&mut self.adam_m[i], &mut self.adam_v[i]);
            for k in 0..data.len() {
                let g = grad[k];
                m[k] = ADAM_BETA1 * m[k] + (1.0 - ADAM_BETA1) * g;
                v[k] = ADAM_BETA2 * v[k] + (1.0 - ADAM_BETA2) * g * g;
                let m_hat = m[k] / bc1;
                let v_hat = v[k] / bc2;
                data[k] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
            }
        }
    }

    /// Snapshot of everything an optimizer restart needs.
    pub fn to_snapshot(&self) -> StoreSnapshot {
        StoreSnapshot {
            names: self.names.clone(),
            tensors: self.tensors.clone(),
            adam_m: self.adam_m.clone(),
            adam_v: self.adam_v.clone(),
            adam_t: self.adam_t,
        }
    }

    /// Restores tensor data and optimizer state from a snapshot; the store
    /// must have been registered with identical names and shapes.
    pub fn restore(&mut self, snap: &StoreSnapshot) -> Result<(), String> {
        if snap.names != self.names {
            return Err("parameter names do not match the checkpoint".to_string());
        }
        for (t, s) in self.tensors.iter().zip(&snap.tensors) {
            if (t.rows, t.cols) != (s.rows, s.cols) {
                return Err("parameter shapes do not match the checkpoint".to_string());
            }
        }
        self.tensors = snap.tensors.clone();
        self.adam_m = snap.adam_m.clone();
        self.adam_v = snap.adam_v.clone();
        self.adam_t = snap.adam_t;
        Ok(())
    }
}

impl Default for ParamStore {
    fn default() -> Self {
        ParamStore::new()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoreSnapshot {
    pub names: Vec<String>,
    pub tensors: Vec<Tensor>,
    pub adam_m: Vec<Vec<f64>>,
    pub adam_v: Vec<Vec<f64>>,
    pub adam_t: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn registration_is_seed_deterministic() {
        let mut r1 = ChaCha8Rng::seed_from_u64(5);
        let mut r2 = ChaCha8Rng::seed_from_u64(5);
        let mut a = ParamStore::new();
        let mut b = ParamStore::new();
        a.register("w", 4, 3, &mut r1);
        b.register("w", 4, 3, &mut r2);
        assert_eq!(a.tensor(ParamId(0)).data, b.tensor(ParamId(0)).data);
        let bound = (6.0f64 / 7.0).sqrt();
        assert!(a.tensor(ParamId(0)).data.iter().all(|x| x.abs() < bound));
    }

    #[test]
    fn adam_minimizes_a_quadratic() {
        // One parameter, loss = x^2: the gradient is 2x and Adam should walk
        // toward zero.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut store = ParamStore::new();
        let id = store.register("x", 1, 1, &mut rng);
        store.tensor_mut(id).data[0] = 1.0;
        for _ in 0..2000 {
            store.zero_grads();
            let x = store.tensor(id).data[0];
            store.grad_mut(id)[0] = 2.0 * x;
            store.adam_step(1e-2);
        }
        assert!(store.tensor(id).data[0].abs() < 1e-2);
    }

    #[test]
    fn snapshot_round_trips_optimizer_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut store = ParamStore::new();
        let id = store.register("w", 2, 2, &mut rng);
        store.grad_mut(id).iter_mut().for_each(|g| *g = 0.5);
        store.adam_step(1e-3);
        let snap = store.to_snapshot();

        let mut rng2 = ChaCha8Rng::seed_from_u64(99);
        let mut other = ParamStore::new();
        other.register("w", 2, 2, &mut rng2);
        other.restore(&snap).unwrap();

        // Stepping both with equal gradients keeps them in lockstep.
        store.zero_grads();
        other.zero_grads();
        store.grad_mut(id).iter_mut().for_each(|g| *g = -0.3);
        other.grad_mut(id).iter_mut().for_each(|g| *g = -0.3);
        store.adam_step(1e-3);
        other.adam_step(1e-3);
        assert_eq!(store.tensor(id).data, other.tensor(id).data);

        let mut rng3 = ChaCha8Rng::seed_from_u64(0);
        let mut wrong = ParamStore::new();
        wrong.register("v", 2, 2, &mut rng3);
        assert!(wrong.restore(&snap).is_err());
    }
}
