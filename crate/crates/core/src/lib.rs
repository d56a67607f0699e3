//! Two-step coded-word detection: sequence autoencoders produce latent
//! vectors, per-class mean vectors classify sentences, and single-word
//! encodings surface candidate coded words. Downstream analyses cover
//! outlier-based new-word discovery, cross-class overlap and taxonomies.

pub mod analysis;
pub mod autoencoder;
pub mod corpus;
pub mod detector;
pub mod error;
pub mod eval;

pub use error::{Error, Result};
