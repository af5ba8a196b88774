use std::path::Path;
use std::sync::Arc;

use crate::corpus::{Question, QuestionPool, TokenizerMode, Vocabulary};
use crate::error::{Error, Result};
use crate::fsio;
use crate::retrieval::relation::{bilinear, soft_cosine, RelationMatrix};
use crate::retrieval::sparse::{cosine, SparseVector};
use crate::retrieval::tfidf::{fit_tfidf, TfIdfModel};
use crate::wire::{Reader, Writer};

const INDEX_MAGIC: &[u8; 4] = b"QMIX";
const INDEX_VERSION: u32 = 1;

/// Stage-1 similarity metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Cosine,
    SoftCosine,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Cosine => "cosine",
            Metric::SoftCosine => "soft-cosine",
        }
    }

    pub fn from_name(name: &str) -> Option<Metric> {
        match name {
            "cosine" | "tfidf" => Some(Metric::Cosine),
            "soft-cosine" | "soft" => Some(Metric::SoftCosine),
            _ => None,
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Metric, String> {
        Metric::from_name(s).ok_or_else(|| {
            format!("unknown metric {:?} (expected `cosine` or `soft-cosine`)", s)
        })
    }
}

/// One retrieval hit: a pool question with its stage-1 score and 1-based rank.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub question_id: String,
    pub pool_index: usize,
    pub score: f64,
    pub rank: usize,
}

/// Inverted index over a question pool.
///
/// The index is an acceleration structure, never an approximation: `knn`
/// returns exactly what exhaustive scoring of every pool question returns.
/// For soft cosine that holds because the posting traversal covers every
/// question sharing a term with the query or with any stored neighbor of a
/// query term; all other questions score exactly zero.
///
/// Immutable after construction; safe for unlimited concurrent queries.
pub struct Index {
    pool: QuestionPool,
    model: TfIdfModel,
    relation: Option<RelationMatrix>,
    doc_vectors: Vec<SparseVector>,
    doc_norm: Vec<f64>,
    doc_soft_norm: Vec<f64>,
    postings: Vec<Vec<(u32, f64)>>,
}

impl std::fmt::Debug for Index {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Index")
            .field("docs", &self.pool.len())
            .field("terms", &self.model.vocabulary().len())
            .field("soft", &self.relation.is_some())
            .finish()
    }
}

/// Builds the index; `relation` enables the soft-cosine metric.
pub fn build_index(
    pool: QuestionPool,
    model: TfIdfModel,
    relation: Option<RelationMatrix>,
) -> Result<Index> {
    if pool.is_empty() {
        return Err(Error::InvalidInput("cannot index an empty pool".into()));
    }
    let n_terms = model.vocabulary().len();
    if let Some(m) = &relation {
        if m.n_terms() != n_terms {
            return Err(Error::InvalidInput(format!(
                "relation matrix covers {} terms but the vocabulary has {}",
                m.n_terms(),
                n_terms
            )));
        }
    }
    let doc_vectors: Vec<SparseVector> =
        pool.iter().map(|q| model.vectorize(q.tokens())).collect();
    let doc_norm: Vec<f64> = doc_vectors.iter().map(SparseVector::norm).collect();
    let doc_soft_norm: Vec<f64> = match &relation {
        Some(m) => doc_vectors
            .iter()
            .map(|v| bilinear(v, v, m).sqrt())
            .collect(),
        None => Vec::new(),
    };
    let mut postings: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n_terms];
    for (doc, v) in doc_vectors.iter().enumerate() {
        for &(term, w) in v.entries() {
            postings[term as usize].push((doc as u32, w));
        }
    }
    Ok(Index {
        pool,
        model,
        relation,
        doc_vectors,
        doc_norm,
        doc_soft_norm,
        postings,
    })
}

impl Index {
    pub fn pool(&self) -> &QuestionPool {
        &self.pool
    }

    pub fn model(&self) -> &TfIdfModel {
        &self.model
    }

    pub fn relation(&self) -> Option<&RelationMatrix> {
        self.relation.as_ref()
    }

    pub fn vocabulary(&self) -> &Arc<Vocabulary> {
        self.model.vocabulary()
    }

    pub fn vocabulary_fingerprint(&self) -> [u8; 32] {
        self.model.vocabulary().fingerprint()
    }

    pub fn supports(&self, metric: Metric) -> bool {
        metric == Metric::Cosine || self.relation.is_some()
    }

    /// TF-IDF vector of a stored question.
    pub fn doc_vector(&self, pool_index: usize) -> &SparseVector {
        &self.doc_vectors[pool_index]
    }

    fn require_relation(&self) -> Result<&RelationMatrix> {
        self.relation.as_ref().ok_or_else(|| {
            Error::InvalidInput(
                "index was built without a relation matrix; soft-cosine is unavailable".into(),
            )
        })
    }

    fn check_query(&self, query: &SparseVector, k: usize) -> Result<()> {
        if k < 1 {
            return Err(Error::InvalidInput("knn requires k >= 1".into()));
        }
        let n_terms = self.model.vocabulary().len() as u32;
        if let Some(&(term, _)) = query.entries().iter().find(|&&(t, _)| t >= n_terms) {
            return Err(Error::InvalidInput(format!(
                "query term id {} is outside this index's {}-term vocabulary",
                term, n_terms
            )));
        }
        Ok(())
    }

    /// Exact k-nearest-questions by the chosen metric.
    ///
    /// Returns `min(k, pool size)` candidates in non-increasing score order;
    /// ties break by pool insertion order (earlier first). Identical to
    /// exhaustive scoring of every pool question.
    pub fn knn(&self, query: &SparseVector, k: usize, metric: Metric) -> Result<Vec<Candidate>> {
        self.check_query(query, k)?;
        let n_docs = self.pool.len();
        let mut scores = vec![0.0f64; n_docs];
        let mut touched_mask = vec![false; n_docs];
        let mut touched: Vec<u32> = Vec::new();

        match metric {
            Metric::Cosine => {
                for &(term, wq) in query.entries() {
                    for &(doc, wd) in &self.postings[term as usize] {
                        if !touched_mask[doc as usize] {
                            touched_mask[doc as usize] = true;
                            touched.push(doc);
                        }
                        scores[doc as usize] += wq * wd;
                    }
                }
                let qn = query.norm();
                for &doc in &touched {
                    scores[doc as usize] /= qn * self.doc_norm[doc as usize];
                }
            }
            Metric::SoftCosine => {
                let relation = self.require_relation()?;
                for &(term, wq) in query.entries() {
                    // Diagonal contribution.
                    for &(doc, wd) in &self.postings[term as usize] {
                        if !touched_mask[doc as usize] {
                            touched_mask[doc as usize] = true;
                            touched.push(doc);
                        }
                        scores[doc as usize] += wq * wd;
                    }
                    // Cross terms through stored neighbors.
                    for &(nbr, m) in relation.neighbors(term) {
                        for &(doc, wd) in &self.postings[nbr as usize] {
                            if !touched_mask[doc as usize] {
                                touched_mask[doc as usize] = true;
                                touched.push(doc);
                            }
                            scores[doc as usize] += wq * m * wd;
                        }
                    }
                }
                if !touched.is_empty() {
                    let qn = bilinear(query, query, relation).sqrt();
                    for &doc in &touched {
                        scores[doc as usize] /= qn * self.doc_soft_norm[doc as usize];
                    }
                }
            }
        }

        // Touched docs always score > 0 (weights and relation values are
        // positive); the rest score exactly 0 and rank after them in pool
        // order, as exhaustive scoring would order them.
        touched.sort_unstable_by(|&a, &b| {
            scores[b as usize]
                .total_cmp(&scores[a as usize])
                .then(a.cmp(&b))
        });
        let want = k.min(n_docs);
        let mut out = Vec::with_capacity(want);
        for &doc in touched.iter().take(want) {
            out.push(self.candidate(doc as usize, scores[doc as usize], out.len() + 1));
        }
        if out.len() < want {
            for (doc, _) in touched_mask.iter().enumerate().filter(|(_, &t)| !t) {
                if out.len() == want {
                    break;
                }
                out.push(self.candidate(doc, 0.0, out.len() + 1));
            }
        }
        Ok(out)
    }

    fn candidate(&self, pool_index: usize, score: f64, rank: usize) -> Candidate {
        Candidate {
            question_id: self.pool.get(pool_index).id().to_owned(),
            pool_index,
            score,
            rank,
        }
    }

    /// Brute-force oracle: scores every pool question through the standalone
    /// similarity functions and sorts. Exists to verify `knn` against an
    /// independent path; quadratic, so only suitable for small pools.
    pub fn exhaustive_knn(
        &self,
        query: &SparseVector,
        k: usize,
        metric: Metric,
    ) -> Result<Vec<Candidate>> {
        self.check_query(query, k)?;
        let scores: Vec<f64> = match metric {
            Metric::Cosine => self
                .doc_vectors
                .iter()
                .map(|d| cosine(query, d))
                .collect(),
            Metric::SoftCosine => {
                let relation = self.require_relation()?;
                self.doc_vectors
                    .iter()
                    .map(|d| soft_cosine(query, d, relation))
                    .collect()
            }
        };
        let mut order: Vec<u32> = (0..self.pool.len() as u32).collect();
        order.sort_by(|&a, &b| {
            scores[b as usize]
                .total_cmp(&scores[a as usize])
                .then(a.cmp(&b))
        });
        Ok(order
            .into_iter()
            .take(k.min(self.pool.len()))
            .enumerate()
            .map(|(i, doc)| self.candidate(doc as usize, scores[doc as usize], i + 1))
            .collect())
    }

    /// Serializes the index. Only sources are stored (pool text, vocabulary,
    /// relation matrix); vectors, postings, and idf are recomputed on load,
    /// which keeps the format small and the invariants true by construction.
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.raw(INDEX_MAGIC);
        w.u32(INDEX_VERSION);
        w.raw(&self.vocabulary_fingerprint());
        w.u8(self.pool.mode().tag());
        w.u8(self.relation.is_some() as u8);

        let vocab = self.model.vocabulary();
        w.u64(vocab.min_count());
        w.u64(vocab.len() as u64);
        for id in 0..vocab.len() as u32 {
            w.string(vocab.token(id).as_str());
            w.u64(vocab.corpus_frequency(id));
            w.u32(vocab.document_frequency(id));
        }

        w.u64(self.pool.len() as u64);
        for q in self.pool.iter() {
            w.string(q.id());
            match q.category() {
                Some(c) => {
                    w.u8(1);
                    w.string(c);
                }
                None => w.u8(0),
            }
            w.string(q.text());
        }

        if let Some(relation) = &self.relation {
            for term in 0..relation.n_terms() as u32 {
                let neighbors = relation.neighbors(term);
                w.u32(neighbors.len() as u32);
                for &(j, m) in neighbors {
                    w.u32(j);
                    w.f64(m);
                }
            }
        }
        w.into_bytes()
    }

    /// Decodes and fully validates a serialized index: magic, version,
    /// vocabulary integrity against the stored fingerprint, question id
    /// uniqueness, and relation-matrix invariants.
    pub fn decode(bytes: &[u8]) -> Result<Index> {
        let mut r = Reader::new(bytes);
        let magic = r.bytes(4)?;
        if magic != INDEX_MAGIC {
            return Err(Error::Format("not an index file (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != INDEX_VERSION {
            return Err(Error::Format(format!(
                "unsupported index format version {}",
                version
            )));
        }
        let stored_fingerprint: [u8; 32] = r.bytes(32)?.try_into().unwrap();
        let mode = TokenizerMode::from_tag(r.u8()?)
            .ok_or_else(|| Error::Format("unknown tokenizer mode tag".into()))?;
        let has_relation = match r.u8()? {
            0 => false,
            1 => true,
            t => return Err(Error::Format(format!("bad relation flag {}", t))),
        };

        let min_count = r.u64()?;
        let n_terms = r.count(13)?; // len-prefix + cf + df minimum
        let mut entries = Vec::with_capacity(n_terms);
        for _ in 0..n_terms {
            let token = r.string()?;
            let token = crate::corpus::Token::new(token)
                .ok_or_else(|| Error::Format("vocabulary contains an invalid token".into()))?;
            let cf = r.u64()?;
            let df = r.u32()?;
            entries.push((token, cf, df));
        }
        let vocab = Vocabulary::from_parts(entries, min_count)?;
        if vocab.fingerprint() != stored_fingerprint {
            return Err(Error::FingerprintMismatch(
                "index vocabulary does not match its stored fingerprint".into(),
            ));
        }

        let n_docs = r.count(10)?;
        let mut questions = Vec::with_capacity(n_docs);
        for _ in 0..n_docs {
            let id = r.string()?;
            if id.is_empty() {
                return Err(Error::Format("empty question id".into()));
            }
            let category = match r.u8()? {
                0 => None,
                1 => Some(r.string()?),
                t => return Err(Error::Format(format!("bad category flag {}", t))),
            };
            let text = r.string()?;
            questions.push(Question::new(id, text, category, mode));
        }
        let pool = QuestionPool::new(questions, mode)
            .map_err(|e| Error::Format(e.to_string()))?;

        let relation = if has_relation {
            let mut neighbors = Vec::with_capacity(vocab.len());
            for _ in 0..vocab.len() {
                let n = r.u32()? as usize;
                if n > r.remaining() / 12 {
                    return Err(Error::Format("neighbor count exceeds remaining input".into()));
                }
                let mut list = Vec::with_capacity(n);
                for _ in 0..n {
                    let j = r.u32()?;
                    let m = r.f64()?;
                    list.push((j, m));
                }
                neighbors.push(list);
            }
            Some(RelationMatrix::from_parts(neighbors)?)
        } else {
            None
        };
        r.finish()?;

        let model = fit_tfidf(&pool, Arc::new(vocab))?;
        build_index(pool, model, relation)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fsio::write_atomic(path.as_ref(), &self.encode())
    }

    /// Loads an index file. `expected_vocabulary` guards against combining an
    /// index with artifacts built from a different vocabulary.
    pub fn load(path: impl AsRef<Path>, expected_vocabulary: Option<&[u8; 32]>) -> Result<Index> {
        let path = path.as_ref();
        let index = Index::decode(&fsio::read_bytes(path)?).map_err(|e| e.in_file(path))?;
        if let Some(expected) = expected_vocabulary {
            if &index.vocabulary_fingerprint() != expected {
                return Err(Error::FingerprintMismatch(format!(
                    "index {} was built with a different vocabulary",
                    path.display()
                )));
            }
        }
        Ok(index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, parse_pool, tokenize, Question};
    use crate::embeddings::EmbeddingTable;
    use crate::retrieval::relation::{build_relation_matrix, RelationConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pool_of(texts: &[&str]) -> QuestionPool {
        let qs = texts
            .iter()
            .enumerate()
            .map(|(i, t)| {
                Question::new(format!("q{}", i), *t, None, TokenizerMode::WhitespaceNormalize)
            })
            .collect();
        QuestionPool::new(qs, TokenizerMode::WhitespaceNormalize).unwrap()
    }

    fn simple_index(texts: &[&str]) -> Index {
        let pool = pool_of(texts);
        let qs: Vec<Question> = pool.iter().cloned().collect();
        let vocab = Arc::new(build_vocabulary(&qs, 1));
        let model = fit_tfidf(&pool, vocab.clone()).unwrap();
        build_index(pool, model, Some(RelationMatrix::diagonal(vocab.len()))).unwrap()
    }

    #[test]
    fn knn_exact_match_scores_one() {
        let index = simple_index(&["fever and cough", "broken arm", "sore throat"]);
        let q = index
            .model()
            .vectorize(&tokenize("broken arm", TokenizerMode::WhitespaceNormalize));
        let hits = index.knn(&q, 1, Metric::Cosine).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].question_id, "q1");
        assert!((hits[0].score - 1.0).abs() < 1e-12);
        assert_eq!(hits[0].rank, 1);
    }

    #[test]
    fn knn_rejects_k_zero_and_unsupported_metric() {
        let index = simple_index(&["a b", "b c"]);
        let q = index
            .model()
            .vectorize(&tokenize("a", TokenizerMode::WhitespaceNormalize));
        assert!(index.knn(&q, 0, Metric::Cosine).is_err());

        // Query vectors from a different vocabulary are rejected, not UB.
        let foreign = SparseVector::new(vec![(999, 1.0)]).unwrap();
        assert!(index.knn(&foreign, 1, Metric::Cosine).is_err());
        assert!(index.exhaustive_knn(&foreign, 1, Metric::Cosine).is_err());

        let pool = pool_of(&["a b", "b c"]);
        let qs: Vec<Question> = pool.iter().cloned().collect();
        let vocab = Arc::new(build_vocabulary(&qs, 1));
        let model = fit_tfidf(&pool, vocab).unwrap();
        let hard_only = build_index(pool, model, None).unwrap();
        assert!(hard_only.knn(&q, 1, Metric::SoftCosine).is_err());
        assert!(hard_only.knn(&q, 1, Metric::Cosine).is_ok());
    }

    #[test]
    fn knn_pads_with_zero_score_docs_in_pool_order() {
        let index = simple_index(&["x y", "unrelated words", "other stuff"]);
        let q = index
            .model()
            .vectorize(&tokenize("x", TokenizerMode::WhitespaceNormalize));
        let hits = index.knn(&q, 3, Metric::Cosine).unwrap();
        assert_eq!(hits.len(), 3);
        assert_eq!(hits[0].question_id, "q0");
        assert!(hits[0].score > 0.0);
        // Remaining two are zero-score, in pool order — same as brute force.
        assert_eq!(hits[1].question_id, "q1");
        assert_eq!(hits[2].question_id, "q2");
        assert_eq!(hits[1].score, 0.0);

        let oracle = index.exhaustive_knn(&q, 3, Metric::Cosine).unwrap();
        assert_eq!(hits, oracle);
    }

    /// Random pools: inverted-index knn must equal the brute-force oracle
    /// exactly, for both metrics.
    #[test]
    fn knn_matches_exhaustive_oracle_on_random_pools() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let words = [
            "ache", "bone", "cold", "dose", "ear", "flu", "gut", "head", "itch", "joint",
            "knee", "lung", "mole", "nose", "pain", "rash",
        ];
        for trial in 0..8 {
            let n_docs = rng.random_range(5..100);
            let texts: Vec<String> = (0..n_docs)
                .map(|_| {
                    let len = rng.random_range(1..8);
                    (0..len)
                        .map(|_| words[rng.random_range(0..words.len())])
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .collect();
            let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
            let pool = pool_of(&refs);
            let qs: Vec<Question> = pool.iter().cloned().collect();
            let vocab = Arc::new(build_vocabulary(&qs, 1));
            let model = fit_tfidf(&pool, vocab.clone()).unwrap();

            // Random embeddings give a nontrivial relation matrix.
            let table = EmbeddingTable::from_entries(
                4,
                vocab
                    .tokens()
                    .map(|t| {
                        (
                            t.as_str().to_owned(),
                            (0..4).map(|_| rng.random_range(-1.0..1.0)).collect(),
                        )
                    })
                    .collect::<Vec<_>>(),
                trial,
            )
            .unwrap();
            let relation = build_relation_matrix(
                &table,
                &vocab,
                &RelationConfig {
                    tau: 0.1,
                    top_r: 4,
                    ..RelationConfig::default()
                },
            );
            let index = build_index(pool, model, Some(relation)).unwrap();

            for _ in 0..6 {
                let qlen = rng.random_range(1..6);
                let qtext: Vec<&str> = (0..qlen)
                    .map(|_| words[rng.random_range(0..words.len())])
                    .collect();
                let qv = index.model().vectorize(&tokenize(
                    &qtext.join(" "),
                    TokenizerMode::WhitespaceNormalize,
                ));
                for metric in [Metric::Cosine, Metric::SoftCosine] {
                    for k in [1, 3, 50] {
                        let fast = index.knn(&qv, k, metric).unwrap();
                        let slow = index.exhaustive_knn(&qv, k, metric).unwrap();
                        assert_eq!(fast.len(), slow.len());
                        for (f, s) in fast.iter().zip(&slow) {
                            assert_eq!(f.question_id, s.question_id);
                            assert_eq!(f.rank, s.rank);
                            assert!(
                                (f.score - s.score).abs() < 1e-9,
                                "{} vs {}",
                                f.score,
                                s.score
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn knn_monotone_candidate_sets() {
        let index = simple_index(&["a b c", "b c d", "c d e", "d e f", "e f g"]);
        let q = index
            .model()
            .vectorize(&tokenize("c d", TokenizerMode::WhitespaceNormalize));
        let small = index.knn(&q, 2, Metric::Cosine).unwrap();
        let large = index.knn(&q, 4, Metric::Cosine).unwrap();
        for c in &small {
            assert!(large.iter().any(|d| d.question_id == c.question_id));
        }
    }

    #[test]
    fn index_round_trips_through_bytes() {
        let pool = parse_pool(
            "q1\tcat\tDo I need surgery?\nq2\t\tfever and cough\n# comment\nq3\tx\tsore throat\n",
            TokenizerMode::WhitespaceNormalize,
        )
        .unwrap();
        let qs: Vec<Question> = pool.iter().cloned().collect();
        let vocab = Arc::new(build_vocabulary(&qs, 1));
        let model = fit_tfidf(&pool, vocab.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let table = EmbeddingTable::from_entries(
            3,
            vocab
                .tokens()
                .map(|t| {
                    (
                        t.as_str().to_owned(),
                        (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
                    )
                })
                .collect::<Vec<_>>(),
            9,
        )
        .unwrap();
        let relation = build_relation_matrix(&table, &vocab, &RelationConfig::default());
        let index = build_index(pool, model, Some(relation)).unwrap();

        let bytes = index.encode();
        let back = Index::decode(&bytes).unwrap();
        assert_eq!(back.encode(), bytes, "decode/encode is stable");
        assert_eq!(back.vocabulary_fingerprint(), index.vocabulary_fingerprint());

        // Same scores after the round trip.
        let q = index
            .model()
            .vectorize(&tokenize("fever surgery", TokenizerMode::WhitespaceNormalize));
        let a = index.knn(&q, 3, Metric::SoftCosine).unwrap();
        let b = back.knn(&q, 3, Metric::SoftCosine).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn index_decode_rejects_corruption() {
        let index = simple_index(&["a b", "c d"]);
        let good = index.encode();
        assert!(Index::decode(&good[..good.len() - 1]).is_err(), "truncated");
        assert!(Index::decode(b"nope").is_err(), "bad magic");
        let mut bad_version = good.clone();
        bad_version[4] = 99;
        assert!(Index::decode(&bad_version).is_err());
        // Flip a byte inside the vocabulary region: fingerprint check trips.
        let mut tampered = good.clone();
        let pos = 4 + 4 + 32 + 2 + 8 + 8 + 4 + 1; // into the first token's text
        tampered[pos] ^= 0x01;
        assert!(Index::decode(&tampered).is_err());
    }

    #[test]
    fn index_load_checks_expected_fingerprint() {
        let dir = tempfile::tempdir().unwrap();
        let index = simple_index(&["a b", "c d"]);
        let path = dir.path().join("test.idx");
        index.save(&path).unwrap();
        assert!(Index::load(&path, Some(&index.vocabulary_fingerprint())).is_ok());
        let wrong = [0u8; 32];
        let err = Index::load(&path, Some(&wrong)).unwrap_err();
        assert!(matches!(err, Error::FingerprintMismatch(_)), "{err}");
    }
}
