//! The feed-forward certificate network and its set-based semantics.

mod activation;
mod graph;
mod model;
mod network;
mod propagate;

pub use activation::{act_deriv_bounds, act_enclose, tanh_prime, ActEnclosure};
pub use graph::{param_grad, LossGraph};
pub use model::{load_model, model_from_json, model_to_json, save_model, ModelMeta};
pub use network::{layer_widths, nn_init, ArchPreset, Layer, Network};
pub use propagate::{nn_forward_set, nn_gradset, GradientSet, SetTrace, TanhRecord};

pub(crate) use propagate::{dot_upper_with_adjoint, hash_signs};
