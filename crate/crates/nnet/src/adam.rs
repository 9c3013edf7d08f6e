use serde::{Deserialize, Serialize};

use crate::error::{check_len, NnetError, Result};
use crate::params::Parameters;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam optimizer state: first/second moment estimates per tensor and the
/// number of applied steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    config: AdamConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new<P: Parameters>(config: AdamConfig, params: &P) -> Self {
        let zeros: Vec<Vec<f64>> = params
            .tensors()
            .iter()
            .map(|t| vec![0.0; t.len()])
            .collect();
        Self {
            config,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn first_moments(&self) -> &[Vec<f64>] {
        &self.m
    }

    pub fn second_moments(&self) -> &[Vec<f64>] {
        &self.v
    }

    /// One bias-corrected Adam update. A non-finite gradient leaves the
    /// parameters, moments and step counter untouched.
    pub fn step<P: Parameters>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        let grad_tensors = grads.tensors();
        check_len("adam gradient tensors", self.m.len(), grad_tensors.len())?;
        for (k, g) in grad_tensors.iter().enumerate() {
            check_len("adam gradient tensor", self.m[k].len(), g.len())?;
            if g.iter().any(|v| !v.is_finite()) {
                return Err(NnetError::NonFiniteGradient { tensor: k });
            }
        }
        let mut param_tensors = params.tensors_mut();
        check_len("adam parameter tensors", self.m.len(), param_tensors.len())?;
        for (k, p) in param_tensors.iter().enumerate() {
            check_len("adam parameter tensor", self.m[k].len(), p.len())?;
        }

        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as i32;
        let bias1 = 1.0 - beta1.powi(t);
        let bias2 = 1.0 - beta2.powi(t);
        for (k, p) in param_tensors.iter_mut().enumerate() {
            let g = grad_tensors[k];
            let m = &mut self.m[k];
            let v = &mut self.v[k];
            for j in 0..p.len() {
                m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
                v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
                let m_hat = m[j] / bias1;
                let v_hat = v[j] / bias2;
                p[j] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone, PartialEq)]
    struct Flat(Vec<f64>);

    impl Parameters for Flat {
        fn tensors(&self) -> Vec<&[f64]> {
            vec![&self.0]
        }
        fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
            vec![&mut self.0]
        }
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = Flat(vec![1.0, -2.0, 3.0]);
        let mut adam = Adam::new(AdamConfig::default(), &p);
        adam.step(&mut p, &Flat(vec![0.0; 3])).unwrap();
        assert_eq!(p, Flat(vec![1.0, -2.0, 3.0]));
        assert!(adam.first_moments()[0].iter().all(|&m| m == 0.0));
        assert!(adam.second_moments()[0].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn first_step_moves_by_learning_rate_times_sign() {
        let cfg = AdamConfig::default();
        let mut p = Flat(vec![0.0, 0.0]);
        let mut adam = Adam::new(cfg, &p);
        adam.step(&mut p, &Flat(vec![0.37, -12.0])).unwrap();
        // m̂ = g, v̂ = g², so Δ = -lr · g / (|g| + ε)
        let expect = |g: f64| -cfg.learning_rate * g / (g.abs() + cfg.epsilon);
        assert!((p.0[0] - expect(0.37)).abs() < 1e-15);
        assert!((p.0[1] - expect(-12.0)).abs() < 1e-15);
        assert!((p.0[0] + cfg.learning_rate).abs() < 1e-9);
        assert!((p.0[1] - cfg.learning_rate).abs() < 1e-9);
    }

    #[test]
    fn deterministic() {
        let run = || {
            let mut p = Flat(vec![0.5, 0.25]);
            let mut adam = Adam::new(AdamConfig::default(), &p);
            for k in 0..5 {
                adam.step(&mut p, &Flat(vec![0.1 * k as f64, -0.3]))
                    .unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn non_finite_gradient_skips_step() {
        let mut p = Flat(vec![1.0, 1.0]);
        let mut adam = Adam::new(AdamConfig::default(), &p);
        let err = adam.step(&mut p, &Flat(vec![f64::NAN, 1.0])).unwrap_err();
        assert_eq!(err, NnetError::NonFiniteGradient { tensor: 0 });
        assert_eq!(p, Flat(vec![1.0, 1.0]));
        assert_eq!(adam.steps_taken(), 0);
    }
}
