//! The two-stage query pipeline: a KNN shortlist from the index, optionally
//! re-ranked by the neural scorer. Stage 2 never adds or removes candidates;
//! the final list is always a permutation of the stage-1 shortlist.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Question};
use crate::error::{Error, Result};
use crate::reranker::{handcrafted_features, pad_or_truncate, RerankerModel};
use crate::retrieval::{Index, Metric, RelationMatrix};

/// Pipeline shape: stage-1 metric, shortlist size, and an optional linear
/// blend of the two stage scores (`None` means pure stage-2 ordering with
/// stage-1 tie-breaks).
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub metric: Metric,
    pub candidates: usize,
    pub blend: Option<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            metric: Metric::SoftCosine,
            candidates: 50,
            blend: None,
        }
    }
}

/// One entry of a final ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub question_id: String,
    pub stage1_score: f64,
    pub stage1_rank: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage2_score: Option<f64>,
    pub final_rank: usize,
}

/// Final ranked candidates for one query. `final_rank` is a permutation of
/// `1..=entries.len()` and the entry id set equals the stage-1 candidate set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub query_id: String,
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    /// 1-based final rank of a question id, if present.
    pub fn rank_of(&self, question_id: &str) -> Option<usize> {
        self.entries
            .iter()
            .find(|e| e.question_id == question_id)
            .map(|e| e.final_rank)
    }
}

/// Serializes rankings as JSON lines, one object per query.
pub fn ranked_lists_to_jsonl(lists: &[RankedList]) -> Result<String> {
    let mut out = String::new();
    for list in lists {
        out.push_str(
            &serde_json::to_string(list)
                .map_err(|e| Error::InvalidInput(format!("serialize ranking: {}", e)))?,
        );
        out.push('\n');
    }
    Ok(out)
}

/// An assembled two-stage matcher. Immutable; safe for concurrent queries.
pub struct Pipeline {
    index: Arc<Index>,
    model: Option<Arc<RerankerModel>>,
    config: PipelineConfig,
    /// Used for stage-2 features when the index carries no relation matrix.
    diagonal: RelationMatrix,
}

impl Pipeline {
    pub fn new(
        index: Arc<Index>,
        config: PipelineConfig,
        model: Option<Arc<RerankerModel>>,
    ) -> Result<Pipeline> {
        if config.candidates < 1 {
            return Err(Error::InvalidInput(
                "pipeline needs a candidate count >= 1".into(),
            ));
        }
        if !index.supports(config.metric) {
            return Err(Error::InvalidInput(
                "index was built without a relation matrix; soft-cosine is unavailable".into(),
            ));
        }
        if let Some(blend) = config.blend {
            if !(0.0..=1.0).contains(&blend) {
                return Err(Error::InvalidInput(format!(
                    "blend weight must be in [0, 1], got {}",
                    blend
                )));
            }
        }
        let diagonal = RelationMatrix::diagonal(index.vocabulary().len());
        Ok(Pipeline {
            index,
            model,
            config,
            diagonal,
        })
    }

    pub fn index(&self) -> &Arc<Index> {
        &self.index
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn stage2_enabled(&self) -> bool {
        self.model.is_some()
    }

    /// Runs both stages for one query. An entirely out-of-vocabulary query
    /// yields an empty ranking, not an error.
    pub fn query(&self, query_id: &str, user_text: &str) -> Result<RankedList> {
        let mode = self.index.pool().mode();
        let tokens = tokenize(user_text, mode);
        let query_vector = self.index.model().vectorize(&tokens);
        if query_vector.is_empty() {
            return Ok(RankedList {
                query_id: query_id.to_owned(),
                entries: Vec::new(),
            });
        }
        let candidates =
            self.index
                .knn(&query_vector, self.config.candidates, self.config.metric)?;

        let mut entries: Vec<RankedEntry> = candidates
            .iter()
            .map(|c| RankedEntry {
                question_id: c.question_id.clone(),
                stage1_score: c.score,
                stage1_rank: c.rank,
                stage2_score: None,
                final_rank: 0,
            })
            .collect();

        if let Some(model) = &self.model {
            let user_question = Question::new(query_id, user_text, None, mode);
            let relation = self.index.relation().unwrap_or(&self.diagonal);
            let max_len = model.config().max_len;
            let left = pad_or_truncate(user_question.tokens(), max_len, model.table());
            for (entry, candidate) in entries.iter_mut().zip(&candidates) {
                let standard = self.index.pool().get(candidate.pool_index);
                if standard.tokens().is_empty() {
                    continue; // unencodable; ranks after all scored entries
                }
                let features = handcrafted_features(
                    &user_question,
                    standard,
                    self.index.model(),
                    relation,
                );
                let right = pad_or_truncate(standard.tokens(), max_len, model.table());
                entry.stage2_score = Some(model.forward(&left, &right, &features)?);
            }
            let blend = self.config.blend;
            entries.sort_by(|a, b| {
                let key = |e: &RankedEntry| match (e.stage2_score, blend) {
                    (Some(s2), Some(w)) => w * e.stage1_score + (1.0 - w) * s2,
                    (Some(s2), None) => s2,
                    (None, _) => f64::NEG_INFINITY,
                };
                key(b)
                    .total_cmp(&key(a))
                    .then(b.stage1_score.total_cmp(&a.stage1_score))
                    .then(a.stage1_rank.cmp(&b.stage1_rank))
            });
        }

        for (i, entry) in entries.iter_mut().enumerate() {
            entry.final_rank = i + 1;
        }
        Ok(RankedList {
            query_id: query_id.to_owned(),
            entries,
        })
    }

    /// Element-wise [`Self::query`] over a batch, order preserved.
    pub fn batch_query(&self, queries: &[(String, String)]) -> Result<Vec<RankedList>> {
        queries
            .iter()
            .map(|(id, text)| self.query(id, text))
            .collect()
    }
}
