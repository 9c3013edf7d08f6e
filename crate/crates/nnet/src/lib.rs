//! Small, dependency-light neural numerics for character-level sequence
//! models: embeddings, stacked LSTMs with backpropagation through time,
//! dense heads, cross-entropy losses, Adam, finite-difference gradient
//! checks and a seeded training loop. Everything is `f64`.

pub mod adam;
pub mod dense;
mod error;
pub mod gradcheck;
pub mod loss;
pub mod lstm;
pub mod matrix;
mod params;
pub mod persist;
pub mod sequence;
pub mod train;

pub use adam::{Adam, AdamConfig};
pub use dense::{dense_forward, Activation, Dense};
pub use error::{NnetError, Result};
pub use gradcheck::grad_check;
pub use loss::{bce_loss, cce_loss};
pub use lstm::{Gate, LstmLayerParams, LstmStack, LstmState, StackState};
pub use matrix::{sigmoid, softmax, Matrix};
pub use params::Parameters;
pub use sequence::{CharVocab, ModelDims, SequenceModelParams, SequenceTrace, Special, Symbol};
pub use train::{train, train_with, EpochMetrics, Evaluation, TrainConfig, TrainReport, Trainable};
