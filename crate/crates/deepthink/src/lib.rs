//! Weight-tied recurrent convolutional networks and their feed-forward
//! counterparts, a maze-solving dataset pipeline, and test-time exit rules.
//!
//! The crate is organized around a small dense-tensor engine with
//! reverse-mode automatic differentiation ([`tensor`]), a model zoo of
//! recurrent / feed-forward architecture families ([`model`]), maze
//! generation and rasterization ([`maze`]), a deterministic trainer
//! ([`train`]), exit-rule evaluation ([`eval`]), and activation-reuse /
//! thought-process analysis ([`analysis`]).
//!
//! All randomness flows through a documented 64-bit generator
//! ([`rng::SplitMix64`]) so that datasets, parameter initializations, and
//! training trajectories are bit-reproducible from their seeds.

pub mod analysis;
pub mod cifar;
pub mod error;
pub mod eval;
pub mod hash;
pub mod image_io;
pub mod maze;
pub mod model;
pub mod rng;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use tensor::{Tape, Tensor, TensorId};
