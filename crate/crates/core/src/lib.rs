//! Text classification with few labels, regularized by adversarial
//! training, the Pi model and virtual adversarial training.
//!
//! The crate is organized bottom-up:
//!
//! - [`gradcore`]: a small reverse-mode autodiff engine with gradients
//!   with respect to inputs as well as parameters.
//! - [`corpus`]: tokenization, vocabularies, pretrained vectors, CSV
//!   datasets, and the stratified labeled/unlabeled/validation splits.
//! - [`encoders`]: concatenated SWEM, CNN, BiLSTM and BiLSTM with max
//!   pooling, followed by an MLP classifier.
//! - [`smoothing`]: adversarial, Pi-model and virtual adversarial losses.
//! - [`trainer`]: Adam, the training loop with early stopping, and
//!   repeated-run statistics.
//! - [`expcli`]: JSON experiment configs and the `run`, `grid`,
//!   `histogram` and `splits` commands.

pub mod corpus;
pub mod encoders;
pub mod error;
pub mod expcli;
pub mod gradcore;
pub mod smoothing;
pub mod trainer;

pub use error::{Error, Result};
