//! Central finite-difference verification of analytic gradients.
//!
//! Perturbations that flip any non-smooth branch (relu sign, threshold
//! decision, argmax pick) make the two-sided difference meaningless, so an
//! evaluation reports its kink signature and mismatching draws are skipped
//! rather than compared.

use super::tensor::ParamStore;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    pub checked: usize,
    pub skipped: usize,
    pub max_rel_err: f64,
}

/// Compares the gradients already accumulated in `store` against central
/// differences of `eval` (which must rebuild the same forward pass and
/// return the loss plus its kink signature). Samples `per_tensor` entries
/// of every tensor.
pub fn check_gradients(
    store: &mut ParamStore,
    mut eval: impl FnMut(&ParamStore) -> (f64, u64),
    per_tensor: usize,
    step: f64,
    rng: &mut ChaCha8Rng,
) -> GradCheckReport {
    let (_, base_sig) = eval(store);
    let mut report = GradCheckReport { checked: 0, skipped: 0, max_rel_err: 0.0 };
    let ids: Vec<_> = (0..store.len()).map(super::tensor::ParamId).collect();
    for id in ids {
        let len = store.tensor(id).len();
        for _ in 0..per_tensor.min(len) {
            let k = rng.random_range(0..len);
            let original = store.tensor(id).data[k];
            store.tensor_mut(id).data[k] = original + step;
            let (hi, sig_hi) = eval(store);
            store.tensor_mut(id).data[k] = original - step;
            let (lo, sig_lo) = eval(store);
            store.tensor_mut(id).data[k] = original;
            if sig_hi != base_sig || sig_lo != base_sig {
                report.skipped += 1;
                continue;
            }
            let numeric = (hi - lo) / (2.0 * step);
            let analytic = store.grad(id)[k];
            let denom = analytic.abs().max(numeric.abs());
            let rel = if denom < 1e-7 { 0.0 } else { (analytic - numeric).abs() / denom };
            report.checked += 1;
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
            }
        }
    }
    report
}
