//! Construction and verification of loss-landscape pathologies (spurious
//! minima, saddles, projection instability, regularization effects) for
//! squared-loss training of conic approximation schemes.

pub mod activation;
pub mod constructions;
pub mod dataset;
pub mod error;
pub mod optim;
pub mod projection;
pub mod regularized;
pub mod rng;
pub mod scheme;
pub mod theta;
pub mod verify;
pub mod yspace;

pub use activation::Activation;
pub use dataset::Dataset;
pub use error::{Error, Result};
pub use scheme::{Network, Scheme};
pub use yspace::{SubspaceBasis, YVector};
