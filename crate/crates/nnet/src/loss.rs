//! Losses used by the two character models. Probabilities are clamped to
//! `[ε, 1-ε]` with `ε = 1e-12` so both losses are total.

use crate::error::{NnetError, Result};

pub const PROB_EPSILON: f64 = 1e-12;

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPSILON, 1.0 - PROB_EPSILON)
}

/// Binary cross-entropy `-[t ln p + (1-t) ln(1-p)]`.
pub fn bce_loss(pred: f64, target: bool) -> f64 {
    let p = clamp_prob(pred);
    if target {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Gradient of `bce_loss(sigmoid(z), t)` w.r.t. the logit `z`.
pub fn bce_logit_grad(pred: f64, target: bool) -> f64 {
    pred - if target { 1.0 } else { 0.0 }
}

/// Sparse categorical cross-entropy `-ln p[target]`.
pub fn cce_loss(pred: &[f64], target: usize) -> Result<f64> {
    match pred.get(target) {
        Some(&p) => Ok(-clamp_prob(p).ln()),
        None => Err(NnetError::IndexOutOfRange {
            index: target,
            classes: pred.len(),
        }),
    }
}

/// Gradient of `cce_loss(softmax(z), t)` w.r.t. the logits `z`.
pub fn cce_logit_grad(pred: &[f64], target: usize) -> Vec<f64> {
    let mut g = pred.to_vec();
    g[target] -= 1.0;
    g
}
