//! ReLU multilayer perceptrons for transport maps.

mod budget;
mod checkpoint;
mod lipschitz;
mod net;
mod optim;

pub use budget::{approx_budget, ApproxBudget};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use lipschitz::{lipschitz_upper_bound, spectral_norm_bounds};
pub use net::{init_net, loss_and_grad, ForwardCache, Gradients, TransportNet};
pub use optim::{adam_step, OptimState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
