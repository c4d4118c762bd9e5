//! Minimal dense-network engine: tensors, layers, explicit gradients,
//! RMSProp, and a deterministic splittable PRNG.
//!
//! Everything here is a pure function of its inputs and the seed; there is no
//! hidden global state, so independent training tasks can run in parallel as
//! long as each owns its model, optimizer state, and PRNG stream.

mod layer;
mod prng;
mod rmsprop;
mod tensor;

pub use layer::{
    backward_pass, forward_pass, init_glorot, Activation, DenseLayer, LayerCache, LayerGrads,
};
pub use prng::{sample_standard_normal, Prng};
pub use rmsprop::RmsPropState;
pub use tensor::Tensor;
