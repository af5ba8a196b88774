//! Stage-1 coarse ranking: TF-IDF vector space model, hard and soft cosine,
//! and exact KNN retrieval over the question pool through an inverted index
//! (with a brute-force oracle alongside for verification).

mod index;
mod relation;
mod sparse;
mod tfidf;

pub use index::{build_index, Candidate, Index, Metric};
pub use relation::{
    build_relation_matrix, soft_cosine, RelationConfig, RelationMatrix, RelationTransform,
};
pub use sparse::{cosine, SparseVector};
pub use tfidf::{fit_tfidf, TfIdfModel};
