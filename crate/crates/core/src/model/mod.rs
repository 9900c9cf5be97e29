//! Classical head (dense layer + softmax cross-entropy), Adam, and the
//! gradient chain from the loss back into the quantum filter angles.

mod adam;
mod checkpoint;
mod head;
mod hybrid;

pub use adam::AdamState;
pub use checkpoint::Checkpoint;
pub use head::{argmax, softmax, DenseHead, HeadGrad, N_CLASSES};
pub use hybrid::{hybrid_grad, HybridGrad};
