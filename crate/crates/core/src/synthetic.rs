//! Deterministic synthetic benchmark generation.
//!
//! The generator builds a question pool over "concept" tokens, where every
//! concept has two interchangeable surface forms: pool questions use the `a`
//! form, while user queries randomly substitute the `b` synonym. An
//! accompanying sentence corpus places both forms of each concept amid
//! concept-specific context words, so CBOW training drives the two forms'
//! vectors together — which is exactly the structure the soft-cosine relation
//! matrix and the re-ranker are supposed to exploit. Queries can also carry
//! in-vocabulary noise (a token from an unrelated concept) to keep stage-1
//! retrieval imperfect.
//!
//! Everything is derived from one seed; the same config always yields the
//! same benchmark.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{LabeledPair, Question, QuestionPool, Token, TokenizerMode};
use crate::error::{Error, Result};
use crate::eval::{EvalQuery, GoldSet};

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    /// Number of concept groups; each owns two synonym forms and three
    /// dedicated context words.
    pub concepts: usize,
    pub pool_size: usize,
    pub concepts_per_question: usize,
    /// Shared filler words sprinkled through questions and the corpus.
    pub glue_words: usize,
    pub n_queries: usize,
    /// Probability that a concept token in a query flips to its synonym.
    pub substitution_rate: f64,
    /// Probability that a query picks up unrelated concept tokens.
    pub noise_rate: f64,
    /// How many unrelated concept tokens a noisy query picks up.
    pub noise_tokens: usize,
    /// Sentence budget per concept in the embedding-training corpus. When the
    /// bounds differ, concepts get a linear spread of budgets, so synonym
    /// pairs vary in embedding quality from barely-trained to strong.
    pub sentences_per_concept_min: usize,
    pub sentences_per_concept_max: usize,
    /// Concepts per family. Families share most of their context vocabulary,
    /// which makes cousin concepts embed close together and gives soft cosine
    /// plausible-but-wrong matches to rank. 1 keeps concepts independent.
    pub family_size: usize,
    /// Fraction of pool questions that belong to an order-twin pair: two
    /// questions with the same token set but the leading concepts swapped,
    /// i.e. a different meaning that only word order reveals. Bag-of-words
    /// scoring cannot separate twins; the sequence model can.
    pub twin_fraction: f64,
    /// Labeled pairs to generate (alternating positive/negative).
    pub n_pairs: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            concepts: 80,
            pool_size: 500,
            concepts_per_question: 4,
            glue_words: 6,
            n_queries: 200,
            substitution_rate: 0.5,
            noise_rate: 0.3,
            noise_tokens: 1,
            sentences_per_concept_min: 30,
            sentences_per_concept_max: 30,
            family_size: 1,
            twin_fraction: 0.0,
            n_pairs: 2000,
            seed: 1,
        }
    }
}

/// A generated benchmark: the pool, a corpus to train embeddings on, eval
/// queries with gold answers, and labeled pairs for re-ranker training.
#[derive(Debug)]
pub struct SyntheticBenchmark {
    pub pool: QuestionPool,
    pub embedding_corpus: Vec<Vec<Token>>,
    pub queries: Vec<EvalQuery>,
    pub gold: GoldSet,
    pub pairs: Vec<LabeledPair>,
}

fn concept_a(g: usize) -> String {
    format!("c{}a", g)
}

fn concept_b(g: usize) -> String {
    format!("c{}b", g)
}

fn context_word(g: usize, i: usize) -> String {
    format!("k{}x{}", g, i)
}

fn family_word(f: usize, i: usize) -> String {
    format!("kf{}y{}", f, i)
}

fn glue_word(i: usize) -> String {
    format!("g{}", i)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Slot {
    Concept(usize),
    Glue(usize),
}

struct Generator<'a> {
    config: &'a SyntheticConfig,
    rng: ChaCha8Rng,
    /// Ordered slot layout per pool question, parallel to the pool.
    layouts: Vec<Vec<Slot>>,
}

impl<'a> Generator<'a> {
    /// Query text derived from a pool question. Token order is preserved:
    /// concepts substitute to their synonym in place, the glue word may swap,
    /// and noise concepts are appended at the end.
    fn query_text(&mut self, gold: usize) -> String {
        let c = self.config;
        let layout = self.layouts[gold].clone();
        let mut tokens: Vec<String> = Vec::new();
        let mut used: Vec<usize> = Vec::new();
        for slot in &layout {
            match slot {
                Slot::Concept(g) => {
                    used.push(*g);
                    if self.rng.random_range(0.0..1.0) < c.substitution_rate {
                        tokens.push(concept_b(*g));
                    } else {
                        tokens.push(concept_a(*g));
                    }
                }
                Slot::Glue(j) => {
                    if self.rng.random_range(0..2) == 0 {
                        tokens.push(glue_word(self.rng.random_range(0..c.glue_words)));
                    } else {
                        tokens.push(glue_word(*j));
                    }
                }
            }
        }
        if self.rng.random_range(0.0..1.0) < c.noise_rate {
            let mut picked: Vec<usize> = Vec::new();
            while picked.len() < c.noise_tokens {
                let other = self.rng.random_range(0..c.concepts);
                if !used.contains(&other) && !picked.contains(&other) {
                    tokens.push(concept_a(other));
                    picked.push(other);
                }
            }
        }
        tokens.join(" ")
    }

    fn concepts_of(&self, i: usize) -> Vec<usize> {
        self.layouts[i]
            .iter()
            .filter_map(|s| match s {
                Slot::Concept(g) => Some(*g),
                Slot::Glue(_) => None,
            })
            .collect()
    }

    /// A plausible wrong answer: the highest-concept-overlap question among a
    /// small sample, so negatives are not trivially dissimilar. Order twins
    /// overlap completely and are picked whenever sampled.
    fn hard_negative(&mut self, gold: usize, pool_len: usize) -> usize {
        let gold_set: HashSet<usize> = self.concepts_of(gold).into_iter().collect();
        let mut best = None;
        let mut best_overlap = 0usize;
        for _ in 0..20 {
            let i = self.rng.random_range(0..pool_len);
            if i == gold {
                continue;
            }
            let overlap = self
                .concepts_of(i)
                .into_iter()
                .filter(|g| gold_set.contains(g))
                .count();
            if best.is_none() || overlap > best_overlap {
                best = Some(i);
                best_overlap = overlap;
            }
        }
        best.unwrap_or((gold + 1) % pool_len)
    }
}

pub fn generate(config: &SyntheticConfig) -> Result<SyntheticBenchmark> {
    if config.concepts < config.concepts_per_question + 1
        || config.concepts_per_question < 1
        || config.pool_size < 2
        || config.glue_words < 1
        || config.sentences_per_concept_min > config.sentences_per_concept_max
        || config.sentences_per_concept_min < 1
        || config.family_size < 1
    {
        return Err(Error::InvalidInput(format!(
            "unsatisfiable synthetic config: {:?}",
            config
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // Pool layouts: ordered concept slots with one glue word. Base questions
    // have distinct concept sets; an optional share of them get an order
    // twin — same token set, leading concepts swapped.
    let twin_pairs = ((config.pool_size as f64 * config.twin_fraction / 2.0).round() as usize)
        .min(config.pool_size / 2);
    let base_count = config.pool_size - twin_pairs;
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut layouts: Vec<Vec<Slot>> = Vec::with_capacity(config.pool_size);
    let mut all_concepts: Vec<usize> = (0..config.concepts).collect();
    for _ in 0..base_count {
        let combo = loop {
            all_concepts.shuffle(&mut rng);
            let mut combo = all_concepts[..config.concepts_per_question].to_vec();
            combo.sort_unstable();
            if seen.insert(combo.clone()) {
                break combo;
            }
        };
        let mut layout: Vec<Slot> = combo.iter().map(|&g| Slot::Concept(g)).collect();
        for i in (1..layout.len()).rev() {
            layout.swap(i, rng.random_range(0..=i));
        }
        let at = rng.random_range(0..=layout.len());
        layout.insert(at, Slot::Glue(rng.random_range(0..config.glue_words)));
        layouts.push(layout);
    }
    for t in 0..twin_pairs {
        let mut twin = layouts[t].clone();
        let concept_positions: Vec<usize> = twin
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, Slot::Concept(_)))
            .map(|(i, _)| i)
            .collect();
        twin.swap(concept_positions[0], concept_positions[1]);
        layouts.push(twin);
    }
    // Random pool order so a twin is as likely before as after its partner.
    layouts.shuffle(&mut rng);

    let questions: Vec<Question> = layouts
        .iter()
        .enumerate()
        .map(|(i, layout)| {
            let tokens: Vec<String> = layout
                .iter()
                .map(|slot| match slot {
                    Slot::Concept(g) => concept_a(*g),
                    Slot::Glue(j) => glue_word(*j),
                })
                .collect();
            Question::new(
                format!("s{}", i),
                tokens.join(" "),
                None,
                TokenizerMode::WhitespaceNormalize,
            )
        })
        .collect();
    let pool = QuestionPool::new(questions, TokenizerMode::WhitespaceNormalize)?;

    // Embedding corpus: both synonym forms of a concept co-occur inside the
    // concept's own context vocabulary; glue words float everywhere.
    let mut embedding_corpus =
        Vec::with_capacity(config.concepts * config.sentences_per_concept_max);
    let spread = config
        .sentences_per_concept_max
        .saturating_sub(config.sentences_per_concept_min);
    for g in 0..config.concepts {
        let budget = config.sentences_per_concept_min
            + spread * g / config.concepts.max(2).saturating_sub(1);
        let family = g / config.family_size;
        for _ in 0..budget {
            let mut words = vec![concept_a(g), concept_b(g)];
            for _ in 0..3 {
                if config.family_size > 1 && rng.random_range(0..2) == 0 {
                    words.push(family_word(family, rng.random_range(0..4)));
                } else {
                    words.push(context_word(g, rng.random_range(0..3)));
                }
            }
            if rng.random_range(0.0..1.0) < 0.3 {
                words.push(glue_word(rng.random_range(0..config.glue_words)));
            }
            words.shuffle(&mut rng);
            embedding_corpus.push(
                words
                    .into_iter()
                    .map(|w| Token::new(w).expect("generated tokens are valid"))
                    .collect(),
            );
        }
    }

    let mut generator = Generator {
        config,
        rng,
        layouts,
    };

    // Eval queries with gold answers.
    let mut queries = Vec::with_capacity(config.n_queries);
    let mut gold_entries = Vec::with_capacity(config.n_queries);
    for j in 0..config.n_queries {
        let gold = generator.rng.random_range(0..pool.len());
        let text = generator.query_text(gold);
        queries.push(EvalQuery {
            id: format!("u{}", j),
            text,
        });
        gold_entries.push((format!("u{}", j), pool.get(gold).id().to_owned()));
    }
    let gold = GoldSet::new(gold_entries, &pool)?;

    // Labeled pairs: positives pair a derived query with its source; half the
    // negatives are concept-overlap hard negatives, half uniform.
    let mut pairs = Vec::with_capacity(config.n_pairs);
    for p in 0..config.n_pairs {
        let source = generator.rng.random_range(0..pool.len());
        let text = generator.query_text(source);
        let (standard, label) = if p % 2 == 0 {
            (source, true)
        } else if generator.rng.random_range(0..2) == 0 {
            (generator.hard_negative(source, pool.len()), false)
        } else {
            let wrong = loop {
                let i = generator.rng.random_range(0..pool.len());
                if i != source {
                    break i;
                }
            };
            (wrong, false)
        };
        pairs.push(LabeledPair {
            pair_id: format!("p{}", p),
            user_question: Question::new(
                format!("p{}", p),
                text,
                None,
                TokenizerMode::WhitespaceNormalize,
            ),
            standard_question: pool.get(standard).clone(),
            label,
        });
    }

    Ok(SyntheticBenchmark {
        pool,
        embedding_corpus,
        queries,
        gold,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let config = SyntheticConfig {
            concepts: 12,
            pool_size: 30,
            n_queries: 10,
            n_pairs: 20,
            sentences_per_concept_min: 5,
            sentences_per_concept_max: 5,
            ..SyntheticConfig::default()
        };
        let a = generate(&config).unwrap();
        let b = generate(&config).unwrap();
        assert_eq!(a.pool.len(), 30);
        for (x, y) in a.pool.iter().zip(b.pool.iter()) {
            assert_eq!(x, y);
        }
        assert_eq!(a.queries, b.queries);
        assert_eq!(a.pairs, b.pairs);
        assert_eq!(a.embedding_corpus, b.embedding_corpus);
    }

    #[test]
    fn pool_questions_are_distinct_and_well_formed() {
        let config = SyntheticConfig {
            concepts: 10,
            pool_size: 50,
            concepts_per_question: 3,
            n_queries: 5,
            n_pairs: 10,
            sentences_per_concept_min: 2,
            sentences_per_concept_max: 2,
            ..SyntheticConfig::default()
        };
        let bench = generate(&config).unwrap();
        let mut texts = HashSet::new();
        for q in bench.pool.iter() {
            assert_eq!(q.tokens().len(), 4, "3 concepts + 1 glue");
            texts.insert(
                q.tokens()
                    .iter()
                    .map(|t| t.as_str().to_owned())
                    .collect::<Vec<_>>()
                    .join(" "),
            );
        }
        // Token multisets are distinct up to glue/shuffle; ids unique by pool
        // construction. Gold always resolvable.
        for q in &bench.queries {
            assert!(bench.gold.gold_for(&q.id).is_some());
        }
        let positives = bench.pairs.iter().filter(|p| p.label).count();
        assert_eq!(positives, 5, "alternating labels");
    }

    #[test]
    fn unsatisfiable_configs_error() {
        let config = SyntheticConfig {
            concepts: 3,
            concepts_per_question: 4,
            ..SyntheticConfig::default()
        };
        assert!(generate(&config).is_err());
    }
}
