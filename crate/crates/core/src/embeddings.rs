//! Word embeddings: a from-scratch CBOW trainer with negative sampling,
//! plus loading/saving of the plain-text word2vec format and lookup with a
//! deterministic out-of-vocabulary policy.
//!
//! Unknown tokens resolve to a vector sampled uniformly from `[-0.1, 0.1]^d`.
//! The sample is derived from the table's OOV seed and the token text, so a
//! given token always maps to the same vector, independent of lookup order.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::corpus::{Token, Vocabulary};
use crate::error::{Error, Result};
use crate::fsio;

pub const OOV_RANGE: f64 = 0.1;

/// Sentinel row id used for padding positions in fixed-length sequences.
pub const PAD_ROW: u32 = u32::MAX;

#[derive(Default)]
struct OovCache {
    index: HashMap<String, u32>,
    rows: Vec<f64>,
    tokens: Vec<String>,
}

/// A token-to-vector table of fixed dimension.
///
/// Trained or loaded vectors are immutable. OOV lookups are cached behind a
/// mutex; concurrent lookups are permitted and linearizable, and the sampled
/// vectors depend only on `(oov_seed, token)`.
pub struct EmbeddingTable {
    dim: usize,
    rows: Vec<f64>,
    index: HashMap<String, u32>,
    tokens: Vec<String>,
    oov_seed: u64,
    oov: Mutex<OovCache>,
}

impl std::fmt::Debug for EmbeddingTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EmbeddingTable")
            .field("dim", &self.dim)
            .field("entries", &self.tokens.len())
            .field("oov_seed", &self.oov_seed)
            .finish()
    }
}

impl EmbeddingTable {
    /// Builds a table from `(token, vector)` entries in the given order.
    /// All vectors must have length `dim`; duplicate tokens are rejected.
    pub fn from_entries(
        dim: usize,
        entries: impl IntoIterator<Item = (String, Vec<f64>)>,
        oov_seed: u64,
    ) -> Result<EmbeddingTable> {
        if dim == 0 {
            return Err(Error::InvalidInput("embedding dimension must be >= 1".into()));
        }
        let mut rows = Vec::new();
        let mut index = HashMap::new();
        let mut tokens = Vec::new();
        for (token, vector) in entries {
            if Token::new(token.as_str()).is_none() {
                return Err(Error::InvalidInput(format!(
                    "invalid embedding token {:?}",
                    token
                )));
            }
            if vector.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "vector for {:?} has length {}, expected {}",
                    token,
                    vector.len(),
                    dim
                )));
            }
            if index.insert(token.clone(), tokens.len() as u32).is_some() {
                return Err(Error::InvalidInput(format!("duplicate token {:?}", token)));
            }
            tokens.push(token);
            rows.extend_from_slice(&vector);
        }
        Ok(EmbeddingTable {
            dim,
            rows,
            index,
            tokens,
            oov_seed,
            oov: Mutex::new(OovCache::default()),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored (trained or loaded) vectors, OOV cache excluded.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn oov_seed(&self) -> u64 {
        self.oov_seed
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Stored vector for a known token, or `None` when OOV.
    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index
            .get(token)
            .map(|&row| &self.rows[row as usize * self.dim..(row as usize + 1) * self.dim])
    }

    fn sample_oov(&self, token: &str) -> Vec<f64> {
        let mut h = Sha256::new();
        h.update(self.oov_seed.to_le_bytes());
        h.update(token.as_bytes());
        let digest: [u8; 32] = h.finalize().into();
        let mut rng = ChaCha8Rng::from_seed(digest);
        (0..self.dim)
            .map(|_| rng.random_range(-OOV_RANGE..=OOV_RANGE))
            .collect()
    }

    /// Vector for `token`: the stored vector for known tokens, otherwise a
    /// uniform sample from `[-0.1, 0.1]^d` that is stable for the token.
    pub fn lookup(&self, token: &str) -> Vec<f64> {
        if let Some(v) = self.get(token) {
            return v.to_vec();
        }
        let mut cache = self.oov.lock().expect("oov cache poisoned");
        if let Some(&row) = cache.index.get(token) {
            let start = row as usize * self.dim;
            return cache.rows[start..start + self.dim].to_vec();
        }
        let v = self.sample_oov(token);
        let row = cache.tokens.len() as u32;
        cache.index.insert(token.to_owned(), row);
        cache.tokens.push(token.to_owned());
        cache.rows.extend_from_slice(&v);
        v
    }

    /// Interns `token` to a dense row id usable with [`Self::write_row`].
    /// Known tokens keep their storage row; unknown tokens are assigned
    /// session-local rows past the stored range.
    pub fn intern(&self, token: &str) -> u32 {
        if let Some(&row) = self.index.get(token) {
            return row;
        }
        let mut cache = self.oov.lock().expect("oov cache poisoned");
        if let Some(&row) = cache.index.get(token) {
            return self.tokens.len() as u32 + row;
        }
        let v = self.sample_oov(token);
        let row = cache.tokens.len() as u32;
        cache.index.insert(token.to_owned(), row);
        cache.tokens.push(token.to_owned());
        cache.rows.extend_from_slice(&v);
        self.tokens.len() as u32 + row
    }

    /// Copies the vector for an interned row into `out` (length `dim`).
    pub fn write_row(&self, row: u32, out: &mut [f64]) {
        assert_eq!(out.len(), self.dim, "output buffer length mismatch");
        assert_ne!(row, PAD_ROW, "padding rows have no embedding");
        let known = self.tokens.len() as u32;
        if row < known {
            let start = row as usize * self.dim;
            out.copy_from_slice(&self.rows[start..start + self.dim]);
        } else {
            let cache = self.oov.lock().expect("oov cache poisoned");
            let start = (row - known) as usize * self.dim;
            out.copy_from_slice(&cache.rows[start..start + self.dim]);
        }
    }

    /// Tokens in stored-row order.
    pub fn stored_tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    /// Content hash over dimension, stored tokens, vector bits, and the OOV
    /// seed. Two tables with equal fingerprints resolve every token to the
    /// same vector.
    pub fn fingerprint(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update((self.dim as u64).to_le_bytes());
        h.update(self.oov_seed.to_le_bytes());
        h.update((self.tokens.len() as u64).to_le_bytes());
        for (i, token) in self.tokens.iter().enumerate() {
            h.update((token.len() as u64).to_le_bytes());
            h.update(token.as_bytes());
            for v in &self.rows[i * self.dim..(i + 1) * self.dim] {
                h.update(v.to_le_bytes());
            }
        }
        h.finalize().into()
    }
}

/// Cosine similarity between two equal-length vectors.
pub fn embedding_cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::InvalidInput(format!(
            "cosine of vectors with different lengths: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::InvalidInput("cosine of a zero vector".into()));
    }
    Ok(dot / (nu.sqrt() * nv.sqrt()))
}

/// Configuration for [`train_cbow`].
#[derive(Debug, Clone)]
pub struct CbowConfig {
    pub window: usize,
    pub min_count: u64,
    pub dimension: usize,
    pub negative_samples: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Seed attached to the resulting table for OOV lookups.
    pub oov_seed: u64,
}

impl Default for CbowConfig {
    fn default() -> Self {
        CbowConfig {
            window: 5,
            min_count: 5,
            dimension: 200,
            negative_samples: 5,
            epochs: 5,
            learning_rate: 0.025,
            seed: 1,
            oov_seed: 0,
        }
    }
}

impl CbowConfig {
    fn validate(&self) -> Result<()> {
        if self.window < 1 || self.dimension < 1 || self.negative_samples < 1 {
            return Err(Error::InvalidInput(
                "cbow config requires window >= 1, dimension >= 1, negative_samples >= 1".into(),
            ));
        }
        if self.epochs < 1 {
            return Err(Error::InvalidInput("cbow config requires epochs >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidInput(
                "cbow config requires a positive finite learning rate".into(),
            ));
        }
        Ok(())
    }
}

/// Result of CBOW training: the embedding table plus the mean
/// negative-sampling loss observed in each epoch.
pub struct TrainedCbow {
    pub table: EmbeddingTable,
    pub epoch_loss: Vec<f64>,
}

fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Cumulative unigram^0.75 table for drawing negative samples.
struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    fn new(vocab: &Vocabulary) -> NegativeSampler {
        let mut cumulative = Vec::with_capacity(vocab.len());
        let mut acc = 0.0;
        for id in 0..vocab.len() as u32 {
            acc += (vocab.corpus_frequency(id) as f64).powf(0.75);
            cumulative.push(acc);
        }
        NegativeSampler { cumulative }
    }

    fn draw(&self, rng: &mut ChaCha8Rng, exclude: u32) -> Option<u32> {
        let total = *self.cumulative.last()?;
        for _ in 0..64 {
            let x = rng.random_range(0.0..total);
            let id = self.cumulative.partition_point(|&c| c <= x) as u32;
            let id = id.min(self.cumulative.len() as u32 - 1);
            if id != exclude {
                return Some(id);
            }
        }
        None
    }
}

/// Trains CBOW word embeddings with negative sampling.
///
/// Deterministic for a fixed corpus, config, and seed: training is
/// single-threaded and all randomness comes from one seeded stream. The
/// learning rate decays linearly from `learning_rate` toward a floor of
/// `1e-4 * learning_rate` over all scheduled token positions.
pub fn train_cbow(corpus: &[Vec<Token>], config: &CbowConfig) -> Result<TrainedCbow> {
    config.validate()?;
    let vocab = Vocabulary::from_documents(corpus.iter().map(Vec::as_slice), config.min_count);
    if vocab.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no token reaches min_count {}; cannot train embeddings",
            config.min_count
        )));
    }

    // Sentences as in-vocabulary ids; rare tokens are dropped from the stream.
    let sentences: Vec<Vec<u32>> = corpus
        .iter()
        .map(|s| s.iter().filter_map(|t| vocab.id(t.as_str())).collect())
        .filter(|s: &Vec<u32>| !s.is_empty())
        .collect();

    let dim = config.dimension;
    let v = vocab.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut w_in: Vec<f64> = (0..v * dim)
        .map(|_| rng.random_range(-0.5 / dim as f64..0.5 / dim as f64))
        .collect();
    let mut w_out = vec![0.0f64; v * dim];

    let sampler = NegativeSampler::new(&vocab);
    let total_positions: u64 = sentences.iter().map(|s| s.len() as u64).sum();
    let schedule_total = (config.epochs as u64 * total_positions).max(1);
    let mut processed: u64 = 0;

    let mut epoch_loss = Vec::with_capacity(config.epochs);
    let mut h = vec![0.0f64; dim];
    let mut neu1e = vec![0.0f64; dim];

    for _epoch in 0..config.epochs {
        let mut loss_sum = 0.0;
        let mut loss_count: u64 = 0;
        for sentence in &sentences {
            for (t, &center) in sentence.iter().enumerate() {
                processed += 1;
                let progress = processed as f64 / schedule_total as f64;
                let alpha = config.learning_rate * (1.0 - progress).max(1e-4);

                let lo = t.saturating_sub(config.window);
                let hi = (t + config.window).min(sentence.len() - 1);
                let context: &[u32] = &sentence[lo..=hi];
                if context.len() <= 1 {
                    continue; // the center is the only token in range
                }

                // h = mean of context input vectors (center excluded)
                h.iter_mut().for_each(|x| *x = 0.0);
                let mut cw = 0.0;
                for (j, &c) in context.iter().enumerate() {
                    if lo + j == t {
                        continue;
                    }
                    let base = c as usize * dim;
                    for d in 0..dim {
                        h[d] += w_in[base + d];
                    }
                    cw += 1.0;
                }
                for x in h.iter_mut() {
                    *x /= cw;
                }

                neu1e.iter_mut().for_each(|x| *x = 0.0);
                for sample in 0..=config.negative_samples {
                    let (target, label) = if sample == 0 {
                        (center, 1.0)
                    } else {
                        match sampler.draw(&mut rng, center) {
                            Some(id) => (id, 0.0),
                            None => continue, // vocabulary too small for negatives
                        }
                    };
                    let base = target as usize * dim;
                    let mut f = 0.0;
                    for d in 0..dim {
                        f += h[d] * w_out[base + d];
                    }
                    loss_sum -= if label == 1.0 {
                        log_sigmoid(f)
                    } else {
                        log_sigmoid(-f)
                    };
                    loss_count += 1;
                    let g = (label - sigmoid(f)) * alpha;
                    for d in 0..dim {
                        neu1e[d] += g * w_out[base + d];
                        w_out[base + d] += g * h[d];
                    }
                }
                for (j, &c) in context.iter().enumerate() {
                    if lo + j == t {
                        continue;
                    }
                    let base = c as usize * dim;
                    for d in 0..dim {
                        w_in[base + d] += neu1e[d];
                    }
                }
            }
        }
        epoch_loss.push(if loss_count == 0 {
            0.0
        } else {
            loss_sum / loss_count as f64
        });
    }

    let entries = (0..v).map(|i| {
        (
            vocab.token(i as u32).as_str().to_owned(),
            w_in[i * dim..(i + 1) * dim].to_vec(),
        )
    });
    let table = EmbeddingTable::from_entries(dim, entries, config.oov_seed)?;
    Ok(TrainedCbow { table, epoch_loss })
}

/// Parses the word2vec text format: a `count dim` header, then one
/// `word v1 ... v_dim` line per entry.
pub fn parse_word2vec_text(input: &str, oov_seed: u64) -> Result<EmbeddingTable> {
    let mut lines = input.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "missing `count dim` header"))?;
    let mut parts = header.split_ascii_whitespace();
    let count: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse(1, "header must be `count dim`"))?;
    let dim: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse(1, "header must be `count dim`"))?;
    if parts.next().is_some() {
        return Err(Error::parse(1, "header must be exactly `count dim`"));
    }
    if dim == 0 {
        return Err(Error::parse(1, "dimension must be >= 1"));
    }
    // Header values are untrusted; never pre-allocate from them beyond what
    // the input text could actually hold.
    let cap = |claimed: usize, per_item: usize| claimed.min(input.len() / per_item.max(1) + 1);

    let mut entries: Vec<(String, Vec<f64>)> = Vec::with_capacity(cap(count, 4));
    let mut seen: HashMap<String, usize> = HashMap::with_capacity(cap(count, 4));
    for (lineno, line) in lines {
        let lineno = lineno + 1;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_ascii_whitespace();
        let word = fields
            .next()
            .ok_or_else(|| Error::parse(lineno, "missing word"))?;
        let mut vector = Vec::with_capacity(cap(dim, 2));
        for field in fields {
            let value: f64 = field.parse().map_err(|_| {
                Error::parse(lineno, format!("invalid vector component {:?}", field))
            })?;
            if !value.is_finite() {
                return Err(Error::parse(
                    lineno,
                    format!("non-finite vector component {:?}", field),
                ));
            }
            vector.push(value);
        }
        if vector.len() != dim {
            return Err(Error::parse(
                lineno,
                format!("expected {} vector components, found {}", dim, vector.len()),
            ));
        }
        if let Some(first) = seen.insert(word.to_owned(), lineno) {
            return Err(Error::parse(
                lineno,
                format!("duplicate word {:?} (first seen at line {})", word, first),
            ));
        }
        entries.push((word.to_owned(), vector));
    }
    if entries.len() != count {
        return Err(Error::Format(format!(
            "header declares {} entries but file contains {}",
            count,
            entries.len()
        )));
    }
    EmbeddingTable::from_entries(dim, entries, oov_seed)
}

pub fn load_word2vec_text(path: impl AsRef<Path>, oov_seed: u64) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    parse_word2vec_text(&fsio::read_to_string(path)?, oov_seed).map_err(|e| e.in_file(path))
}

/// Serializes stored vectors in the word2vec text format. Float components
/// are written with shortest round-trip formatting, so save then load yields
/// a bit-identical table.
pub fn word2vec_to_string(table: &EmbeddingTable) -> String {
    let mut out = String::new();
    out.push_str(&format!("{} {}\n", table.len(), table.dim()));
    for token in table.stored_tokens() {
        let v = table.get(token).expect("stored token");
        out.push_str(token);
        for x in v {
            out.push(' ');
            out.push_str(&x.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn save_word2vec_text(table: &EmbeddingTable, path: impl AsRef<Path>) -> Result<()> {
    fsio::write_atomic(path.as_ref(), word2vec_to_string(table).as_bytes())
}
