//! Numerical kernel: similarity, activations, loss, AdamW, a bidirectional
//! GRU with a hand-derived backward pass, the Siamese pair head, and a
//! finite-difference gradient checker.
//!
//! Model math runs in `f64`. Embeddings arrive as `f32` and are widened on
//! entry.

mod activation;
mod adamw;
mod gradcheck;
mod gru;
mod linalg;
mod pair;
mod similarity;

pub use activation::{bce_grad, bce_loss, sigmoid, BCE_CLAMP};
pub use adamw::{adamw_step, AdamWHyper, AdamWState};
pub use gradcheck::gradient_check;
pub use gru::{bigru_backward, bigru_forward, BiGruCache, GruCell, GruParams};
pub use pair::{
    head_backward, head_forward, soe_pair_backward, soe_pair_forward, HeadCache, HeadKind,
    PairCache, PairHead, SiameseGrads, SiameseParams,
};
pub use similarity::{cosine_similarity, cosine_similarity_f64};

/// Parameter containers that can be viewed as one flat vector.
///
/// The flattening order is fixed per type and documented on each
/// implementation; optimizers and gradient checks rely on it.
pub trait FlatParams {
    fn num_params(&self) -> usize;
    fn flatten(&self) -> Vec<f64>;
    /// Overwrites every parameter from `flat`, which must have
    /// `num_params()` entries.
    fn assign(&mut self, flat: &[f64]);
}
