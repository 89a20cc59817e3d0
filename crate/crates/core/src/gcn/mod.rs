//! The fixed two-layer GCN: forward trace, soft-target cross entropy, exact
//! reverse pass (including `∂L/∂Ã`), and the Adam update.

mod backward;
mod checkpoint;
mod forward;
mod loss;
mod model;

pub use backward::{backward, edge_gradient_map, EdgeGradients, Gradients};
pub use checkpoint::Checkpoint;
pub use forward::{argmax, forward, ForwardTrace, Mode};
pub use loss::{loss, LossSpec, PROB_FLOOR};
pub use model::{AdamState, GcnModel, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
