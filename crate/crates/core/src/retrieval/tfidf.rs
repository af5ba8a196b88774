use std::collections::HashMap;
use std::sync::Arc;

use crate::corpus::{QuestionPool, Token, Vocabulary};
use crate::error::{Error, Result};
use crate::retrieval::sparse::SparseVector;

/// TF-IDF weighting model fitted over a question pool.
///
/// `idf(t) = ln((1 + N) / (1 + df(t))) + 1`, with `df` counted over the pool's
/// questions, so idf stays strictly positive even for ubiquitous terms.
/// Term frequency is the raw in-question count: pool questions are short, so
/// sublinear tf scaling buys nothing.
#[derive(Debug, Clone)]
pub struct TfIdfModel {
    vocab: Arc<Vocabulary>,
    idf: Vec<f64>,
    doc_count: u64,
}

impl TfIdfModel {
    pub fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn doc_count(&self) -> u64 {
        self.doc_count
    }

    pub fn idf(&self, term: u32) -> f64 {
        self.idf[term as usize]
    }

    /// Maps tokens to a sparse TF-IDF vector. Out-of-vocabulary tokens are
    /// dropped; an all-OOV or empty token list yields the empty vector.
    pub fn vectorize(&self, tokens: &[Token]) -> SparseVector {
        let mut counts: HashMap<u32, u64> = HashMap::new();
        for tok in tokens {
            if let Some(id) = self.vocab.id(tok.as_str()) {
                *counts.entry(id).or_insert(0) += 1;
            }
        }
        let mut entries: Vec<(u32, f64)> = counts
            .into_iter()
            .map(|(id, c)| (id, c as f64 * self.idf[id as usize]))
            .collect();
        entries.sort_unstable_by_key(|&(id, _)| id);
        SparseVector::new(entries).expect("tf-idf weights are positive and ids unique")
    }
}

/// Fits the idf table for `vocab` over `pool`.
pub fn fit_tfidf(pool: &QuestionPool, vocab: Arc<Vocabulary>) -> Result<TfIdfModel> {
    if pool.is_empty() {
        return Err(Error::InvalidInput(
            "cannot fit tf-idf over an empty pool".into(),
        ));
    }
    let n = pool.len() as u64;
    // Document frequency over the pool itself (the vocabulary may have been
    // built over a different corpus).
    let mut df = vec![0u64; vocab.len()];
    let mut seen = vec![usize::MAX; vocab.len()];
    for (doc_idx, q) in pool.iter().enumerate() {
        for tok in q.tokens() {
            if let Some(id) = vocab.id(tok.as_str()) {
                let id = id as usize;
                if seen[id] != doc_idx {
                    seen[id] = doc_idx;
                    df[id] += 1;
                }
            }
        }
    }
    let idf = df
        .iter()
        .map(|&d| ((1 + n) as f64 / (1 + d) as f64).ln() + 1.0)
        .collect();
    Ok(TfIdfModel {
        vocab,
        idf,
        doc_count: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, tokenize, Question, TokenizerMode};

    fn pool(texts: &[&str]) -> QuestionPool {
        let qs = texts
            .iter()
            .enumerate()
            .map(|(i, t)| {
                Question::new(format!("q{}", i), *t, None, TokenizerMode::WhitespaceNormalize)
            })
            .collect();
        QuestionPool::new(qs, TokenizerMode::WhitespaceNormalize).unwrap()
    }

    fn fitted(texts: &[&str]) -> TfIdfModel {
        let p = pool(texts);
        let qs: Vec<Question> = p.iter().cloned().collect();
        let vocab = Arc::new(build_vocabulary(&qs, 1));
        fit_tfidf(&p, vocab).unwrap()
    }

    #[test]
    fn idf_formula_hand_values() {
        let model = fitted(&["common rare", "common", "common other"]);
        let vocab = model.vocabulary().clone();
        // df = N = 3: idf = ln(4/4) + 1 = 1.0
        let common = vocab.id("common").unwrap();
        assert!((model.idf(common) - 1.0).abs() < 1e-12);
        // N=3, df=1: idf = ln(4/2) + 1 = ln 2 + 1
        let rare = vocab.id("rare").unwrap();
        assert!((model.idf(rare) - (2.0f64.ln() + 1.0)).abs() < 1e-12);
        assert!((model.idf(rare) - 1.6931).abs() < 1e-4);
    }

    #[test]
    fn vectorize_counts_times_idf_and_drops_oov() {
        let model = fitted(&["a a b", "a c", "b c"]);
        let vocab = model.vocabulary().clone();
        let toks = tokenize("a a b zzz", TokenizerMode::WhitespaceNormalize);
        let v = model.vectorize(&toks);
        let a = vocab.id("a").unwrap();
        let b = vocab.id("b").unwrap();
        assert_eq!(v.len(), 2);
        assert!((v.get(a).unwrap() - 2.0 * model.idf(a)).abs() < 1e-12);
        assert!((v.get(b).unwrap() - model.idf(b)).abs() < 1e-12);

        let all_oov = tokenize("nope never", TokenizerMode::WhitespaceNormalize);
        assert!(model.vectorize(&all_oov).is_empty());
        assert!(model.vectorize(&[]).is_empty());
    }

    #[test]
    fn empty_pool_is_an_error() {
        let p = pool(&[]);
        let vocab = Arc::new(build_vocabulary(&[], 1));
        assert!(fit_tfidf(&p, vocab).is_err());
    }
}
