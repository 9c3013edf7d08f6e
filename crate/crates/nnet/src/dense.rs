use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, NnetError, Result};
use crate::matrix::{axpy, sigmoid, softmax, Matrix};
use crate::params::Parameters;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Softmax,
    None,
}

impl Activation {
    pub fn apply(self, z: Vec<f64>) -> Vec<f64> {
        match self {
            Activation::Sigmoid => z.into_iter().map(sigmoid).collect(),
            Activation::Softmax => softmax(&z),
            Activation::None => z,
        }
    }
}

/// `activation(W x + b)`
pub fn dense_forward(
    weights: &Matrix,
    bias: &[f64],
    x: &[f64],
    activation: Activation,
) -> Result<Vec<f64>> {
    check_len("dense bias", weights.rows(), bias.len())?;
    let mut z = weights.matvec(x)?;
    for (zi, bi) in z.iter_mut().zip(bias) {
        *zi += bi;
    }
    Ok(activation.apply(z))
}

/// Fully connected layer; the activation is applied by the caller so the
/// loss can fuse its gradient with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    weights: Matrix,
    bias: Vec<f64>,
}

impl Dense {
    pub fn new(weights: Matrix, bias: Vec<f64>) -> Result<Self> {
        let d = Self { weights, bias };
        d.validate()?;
        Ok(d)
    }

    pub fn init<R: Rng + ?Sized>(input_dim: usize, output_dim: usize, rng: &mut R) -> Self {
        Self {
            weights: Matrix::glorot(output_dim, input_dim, rng),
            bias: vec![0.0; output_dim],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn validate(&self) -> Result<()> {
        check_len("dense bias", self.weights.rows(), self.bias.len())?;
        if let Some(tensor) = self
            .tensors()
            .iter()
            .position(|t| t.iter().any(|v| !v.is_finite()))
        {
            return Err(NnetError::NonFiniteParameter { tensor });
        }
        Ok(())
    }

    /// Pre-activation output `W x + b`.
    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        dense_forward(&self.weights, &self.bias, x, Activation::None)
    }

    /// Accumulates parameter gradients for upstream gradient `dz` on the
    /// logits and returns the gradient w.r.t. `x`.
    pub fn backward(&self, x: &[f64], dz: &[f64], grads: &mut Dense) -> Vec<f64> {
        grads.weights.add_outer_unchecked(dz, x);
        axpy(1.0, dz, &mut grads.bias);
        let mut dx = vec![0.0; self.input_dim()];
        self.weights.matvec_t_acc_unchecked(dz, &mut dx);
        dx
    }
}

impl Parameters for Dense {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![self.weights.as_slice(), &self.bias]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.weights.as_mut_slice(), &mut self.bias]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_layer_sigmoid_is_half() {
        let out = dense_forward(
            &Matrix::zeros(3, 2),
            &[0.0; 3],
            &[4.0, -1.0],
            Activation::Sigmoid,
        )
        .unwrap();
        assert_eq!(out, vec![0.5; 3]);
    }

    #[test]
    fn softmax_of_zeros_is_uniform() {
        let out =
            dense_forward(&Matrix::zeros(3, 1), &[0.0; 3], &[1.0], Activation::Softmax).unwrap();
        for p in &out {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_without_activation() {
        let out = dense_forward(
            &Matrix::identity(2),
            &[0.0, 0.0],
            &[1.0, 2.0],
            Activation::None,
        )
        .unwrap();
        assert_eq!(out, vec![1.0, 2.0]);
    }

    #[test]
    fn shape_mismatch() {
        assert!(dense_forward(
            &Matrix::zeros(2, 2),
            &[0.0; 3],
            &[1.0, 2.0],
            Activation::None
        )
        .is_err());
        assert!(dense_forward(&Matrix::zeros(2, 2), &[0.0; 2], &[1.0], Activation::None).is_err());
    }
}
