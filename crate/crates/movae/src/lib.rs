//! MoVAE: a mixture-of-variational-autoencoders classifier.
//!
//! One VAE is trained per class; a test image is assigned to the class whose
//! VAE reconstructs it with the smallest distance (1 − Pearson correlation by
//! default). Starting from as little as one labeled sample per class, the
//! mixture can grow its per-class training sets by repeatedly claiming the
//! unlabeled samples it reconstructs best ("generalization iterations") and
//! retraining.
//!
//! The crate is organized as:
//! - [`numerics`]: dense layers, hand-derived backprop, RMSProp, seeded PRNG
//! - [`vae`]: the per-class variational autoencoder
//! - [`metrics`]: PCC / RMSE distances and accuracy
//! - [`mixture`]: the classifier over per-class VAEs
//! - [`generalize`]: self-training over an unlabeled pool
//! - [`augment`]: affine grayscale augmentation
//! - [`datasets`]: IDX / PGM ingestion, splits, episodes
//! - [`baselines`]: kNN and random-guess baselines
//! - [`harness`]: experiment protocols, checkpointing, metrics emission

pub mod augment;
pub mod baselines;
pub mod datasets;
mod error;
pub mod generalize;
pub mod harness;
pub mod metrics;
pub mod mixture;
pub mod numerics;
pub mod vae;

pub use error::{Error, Result};

/// Side length of every image handled by the pipeline.
pub const IMAGE_SIDE: usize = 28;
/// Flattened image length (`IMAGE_SIDE` squared).
pub const IMAGE_LEN: usize = IMAGE_SIDE * IMAGE_SIDE;

/// A flattened grayscale image, row-major, pixel intensities in `[0, 1]`.
pub type Image = Vec<f32>;
