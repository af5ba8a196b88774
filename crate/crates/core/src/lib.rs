//! Two-stage semantic matching for short questions.
//!
//! Stage 1 retrieves top-n candidates from a fixed question pool with a
//! TF-IDF vector space model, scored by plain cosine or by soft cosine
//! through a word-relation matrix derived from embeddings. Stage 2 re-ranks
//! the shortlist with a Siamese LSTM scoring network trained on labeled
//! question pairs. The crate also ships a CBOW embedding trainer and an
//! MRR / success@k evaluation harness.

pub mod corpus;
pub mod embeddings;
mod error;
pub mod eval;
pub mod fsio;
pub mod pipeline;
pub mod reranker;
pub mod retrieval;
pub mod synthetic;
mod wire;

pub use error::{Error, Result};
