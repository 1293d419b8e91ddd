//! Few-shot classification with Siamese networks over pre-computed embeddings.
//!
//! The crate is organised bottom-up:
//!
//! - [`embedding_store`]: the JSON Lines embedding format, datasets, subword
//!   averaging and a deterministic synthetic fixture generator.
//! - [`numkit`]: cosine similarity, sigmoid, BCE, AdamW, a bidirectional GRU
//!   with hand-derived backward pass, the Siamese pair head and a
//!   finite-difference gradient checker.
//! - [`snn`]: pair construction, the pre-trained SNN classifier (aggregated
//!   cosine similarity) and the second-order-embedding SNN (trainable BiGRU).
//! - [`probe`]: a linear softmax probe over frozen embeddings, used as the
//!   fine-tuned-transformer stand-in.
//! - [`eval`]: N-way-K-shot episodes, macro metrics, M-run averaged
//!   evaluation and the paired t-test over metric triples.

pub mod embedding_store;
pub mod error;
pub mod fsutil;
pub mod eval;
pub mod numkit;
pub mod probe;
pub mod rng;
pub mod snn;

pub use error::{Error, Result};

/// Version string embedded in reports.
pub const ENGINE_VERSION: &str = concat!("fewshot-core ", env!("CARGO_PKG_VERSION"));
