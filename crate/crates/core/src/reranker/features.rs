use std::collections::HashSet;

use crate::corpus::Question;
use crate::reranker::model::FEATURE_DIM;
use crate::retrieval::{cosine, soft_cosine, RelationMatrix, TfIdfModel};

/// Handcrafted pair features feeding the dense head alongside the LSTM
/// interaction blocks:
///
/// `[shared distinct token count, token-set Jaccard, |len(q1) - len(q2)|,
///   tf-idf cosine, soft cosine]`
///
/// Symmetric in its two questions by construction. Empty token sets yield a
/// Jaccard of 0.
pub fn handcrafted_features(
    q1: &Question,
    q2: &Question,
    tfidf: &TfIdfModel,
    relation: &RelationMatrix,
) -> [f64; FEATURE_DIM] {
    let s1: HashSet<&str> = q1.tokens().iter().map(|t| t.as_str()).collect();
    let s2: HashSet<&str> = q2.tokens().iter().map(|t| t.as_str()).collect();
    let shared = s1.intersection(&s2).count();
    let union = s1.union(&s2).count();
    let jaccard = if union == 0 {
        0.0
    } else {
        shared as f64 / union as f64
    };
    let len_diff = (q1.tokens().len() as f64 - q2.tokens().len() as f64).abs();
    let v1 = tfidf.vectorize(q1.tokens());
    let v2 = tfidf.vectorize(q2.tokens());
    [
        shared as f64,
        jaccard,
        len_diff,
        cosine(&v1, &v2),
        soft_cosine(&v1, &v2, relation),
    ]
}
