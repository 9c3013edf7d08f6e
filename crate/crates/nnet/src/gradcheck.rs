//! Central finite-difference gradient checking.

use crate::params::Parameters;

pub const DEFAULT_STEP: f64 = 1e-5;

/// Denominator floor: central differences carry roughly `1e-11` of
/// round-off, which would swamp the relative error of gradients near zero.
const RELATIVE_FLOOR: f64 = 1e-6;

/// Largest relative error between `grad(params)` and central differences of
/// `loss` over every parameter entry. Returns 0 for a parameterless model.
pub fn grad_check<P, L, G>(params: &P, loss: L, grad: G, step: f64) -> f64
where
    P: Parameters + Clone,
    L: Fn(&P) -> f64,
    G: Fn(&P) -> P,
{
    let analytic = grad(params);
    let analytic = analytic.tensors();
    let mut probe = params.clone();
    let mut worst = 0.0f64;
    for (k, tensor) in analytic.iter().enumerate() {
        for (j, &a) in tensor.iter().enumerate() {
            let original = probe.tensors()[k][j];
            probe.tensors_mut()[k][j] = original + step;
            let plus = loss(&probe);
            probe.tensors_mut()[k][j] = original - step;
            let minus = loss(&probe);
            probe.tensors_mut()[k][j] = original;
            let numeric = (plus - minus) / (2.0 * step);
            worst = worst.max(relative_error(a, numeric));
        }
    }
    worst
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    let diff = (a - b).abs();
    diff / a.abs().max(b.abs()).max(RELATIVE_FLOOR)
}
