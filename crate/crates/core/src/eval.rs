//! Evaluation harness: mean reciprocal rank, success counts/ratios at k, and
//! candidate-count sweeps comparing one-stage and two-stage configurations.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::corpus::QuestionPool;
use crate::error::{Error, Result};
use crate::fsio;
use crate::pipeline::{Pipeline, PipelineConfig, RankedList};
use crate::reranker::RerankerModel;
use crate::retrieval::{Index, Metric};

/// One gold standard-question id per query id.
#[derive(Debug, Clone)]
pub struct GoldSet {
    map: HashMap<String, String>,
}

impl GoldSet {
    /// Builds a gold set, requiring every gold id to exist in the pool.
    pub fn new(entries: Vec<(String, String)>, pool: &QuestionPool) -> Result<GoldSet> {
        let mut map = HashMap::with_capacity(entries.len());
        for (query_id, gold_id) in entries {
            if !pool.contains_id(&gold_id) {
                return Err(Error::InvalidInput(format!(
                    "gold id {:?} for query {:?} is not in the pool",
                    gold_id, query_id
                )));
            }
            if map.insert(query_id.clone(), gold_id).is_some() {
                return Err(Error::InvalidInput(format!(
                    "duplicate query id {:?} in gold set",
                    query_id
                )));
            }
        }
        Ok(GoldSet { map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn gold_for(&self, query_id: &str) -> Option<&str> {
        self.map.get(query_id).map(String::as_str)
    }
}

/// An evaluation query: id plus raw text.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalQuery {
    pub id: String,
    pub text: String,
}

/// Queries and their gold answers, parsed together.
#[derive(Debug)]
pub struct EvalSet {
    pub queries: Vec<EvalQuery>,
    pub gold: GoldSet,
}

/// Parses an evaluation set: `query_id<TAB>gold_question_id<TAB>query_text`
/// per line, `#` comments and blank lines ignored. Gold ids must exist in
/// the pool.
pub fn parse_evalset(input: &str, pool: &QuestionPool) -> Result<EvalSet> {
    let mut queries = Vec::new();
    let mut gold_entries = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (lineno, line) in input.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                lineno,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        if fields[0].is_empty() {
            return Err(Error::parse(lineno, "empty query id"));
        }
        if seen.insert(fields[0].to_owned(), lineno).is_some() {
            return Err(Error::parse(
                lineno,
                format!("duplicate query id {:?}", fields[0]),
            ));
        }
        if !pool.contains_id(fields[1]) {
            return Err(Error::parse(
                lineno,
                format!("gold id {:?} is not in the pool", fields[1]),
            ));
        }
        queries.push(EvalQuery {
            id: fields[0].to_owned(),
            text: fields[2].to_owned(),
        });
        gold_entries.push((fields[0].to_owned(), fields[1].to_owned()));
    }
    let gold = GoldSet::new(gold_entries, pool)?;
    Ok(EvalSet { queries, gold })
}

pub fn load_evalset(path: impl AsRef<Path>, pool: &QuestionPool) -> Result<EvalSet> {
    let path = path.as_ref();
    parse_evalset(&fsio::read_to_string(path)?, pool).map_err(|e| e.in_file(path))
}

/// Mean reciprocal rank: the mean over queries of `1/rank(gold)`, where a
/// gold id absent from its ranking contributes 0 (rank -> infinity).
pub fn mrr(rankings: &[RankedList], gold: &GoldSet) -> Result<f64> {
    if rankings.is_empty() {
        return Err(Error::InvalidInput("mrr over no rankings".into()));
    }
    let mut sum = 0.0;
    for ranking in rankings {
        let gold_id = gold.gold_for(&ranking.query_id).ok_or_else(|| {
            Error::InvalidInput(format!(
                "query {:?} has no gold answer",
                ranking.query_id
            ))
        })?;
        if let Some(rank) = ranking.rank_of(gold_id) {
            sum += 1.0 / rank as f64;
        }
    }
    Ok(sum / rankings.len() as f64)
}

/// Mean rank position a given MRR corresponds to (its reciprocal): an MRR of
/// 0.345 reads as "the first correct answer sits near position 2.9".
pub fn mean_position(mrr: f64) -> f64 {
    assert!(mrr > 0.0, "mean position is undefined for MRR = 0");
    1.0 / mrr
}

/// Number and ratio of queries whose gold answer appears in the top `k`.
pub fn success_at_k(rankings: &[RankedList], gold: &GoldSet, k: usize) -> Result<(usize, f64)> {
    if k < 1 {
        return Err(Error::InvalidInput("success_at_k requires k >= 1".into()));
    }
    if rankings.is_empty() {
        return Ok((0, 0.0));
    }
    let mut count = 0usize;
    for ranking in rankings {
        let gold_id = gold.gold_for(&ranking.query_id).ok_or_else(|| {
            Error::InvalidInput(format!(
                "query {:?} has no gold answer",
                ranking.query_id
            ))
        })?;
        if ranking.rank_of(gold_id).is_some_and(|r| r <= k) {
            count += 1;
        }
    }
    Ok((count, count as f64 / rankings.len() as f64))
}

/// One pipeline configuration a sweep evaluates.
#[derive(Clone)]
pub struct SweepConfig {
    pub name: String,
    pub metric: Metric,
    pub model: Option<Arc<RerankerModel>>,
}

impl std::fmt::Debug for SweepConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SweepConfig")
            .field("name", &self.name)
            .field("metric", &self.metric.name())
            .field("two_stage", &self.model.is_some())
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRow {
    pub k: usize,
    pub count: usize,
    pub ratio: f64,
    pub mrr: f64,
}

/// Per-configuration evaluation rows over the swept candidate counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub config: String,
    pub query_count: usize,
    pub rows: Vec<EvalRow>,
}

/// Runs every configuration at every candidate count `k`: the pipeline
/// retrieves `k` candidates per query, and both the success count and MRR
/// are computed over the resulting lists. Deterministic for fixed inputs.
pub fn sweep(
    index: &Arc<Index>,
    queries: &[EvalQuery],
    gold: &GoldSet,
    ks: &[usize],
    configs: &[SweepConfig],
) -> Result<Vec<EvalReport>> {
    if ks.is_empty() {
        return Err(Error::InvalidInput("sweep needs at least one k".into()));
    }
    if ks.iter().any(|&k| k < 1) {
        return Err(Error::InvalidInput("sweep ks must all be >= 1".into()));
    }
    let query_pairs: Vec<(String, String)> = queries
        .iter()
        .map(|q| (q.id.clone(), q.text.clone()))
        .collect();
    let mut reports = Vec::with_capacity(configs.len());
    for config in configs {
        let mut rows = Vec::with_capacity(ks.len());
        for &k in ks {
            let pipeline = Pipeline::new(
                index.clone(),
                PipelineConfig {
                    metric: config.metric,
                    candidates: k,
                    blend: None,
                },
                config.model.clone(),
            )?;
            let rankings = pipeline.batch_query(&query_pairs)?;
            let (count, ratio) = success_at_k(&rankings, gold, k)?;
            rows.push(EvalRow {
                k,
                count,
                ratio,
                mrr: mrr(&rankings, gold)?,
            });
        }
        reports.push(EvalReport {
            config: config.name.clone(),
            query_count: queries.len(),
            rows,
        });
    }
    Ok(reports)
}

/// Flattens reports to `config,k,count,ratio,mrr` CSV.
pub fn reports_to_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("config,k,count,ratio,mrr\n");
    for report in reports {
        for row in &report.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                report.config, row.k, row.count, row.ratio, row.mrr
            ));
        }
    }
    out
}

/// JSON summary of the same reports, plot-ready.
pub fn reports_to_json(reports: &[EvalReport]) -> Result<String> {
    serde_json::to_string_pretty(reports)
        .map_err(|e| Error::InvalidInput(format!("serialize report: {}", e)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::RankedEntry;

    fn ranking(query_id: &str, ids: &[&str]) -> RankedList {
        RankedList {
            query_id: query_id.to_owned(),
            entries: ids
                .iter()
                .enumerate()
                .map(|(i, id)| RankedEntry {
                    question_id: (*id).to_owned(),
                    stage1_score: 1.0 - i as f64 * 0.1,
                    stage1_rank: i + 1,
                    stage2_score: None,
                    final_rank: i + 1,
                })
                .collect(),
        }
    }

    fn pool_with(ids: &[&str]) -> QuestionPool {
        use crate::corpus::{Question, TokenizerMode};
        let qs = ids
            .iter()
            .map(|id| {
                Question::new(*id, "text here", None, TokenizerMode::WhitespaceNormalize)
            })
            .collect();
        QuestionPool::new(qs, TokenizerMode::WhitespaceNormalize).unwrap()
    }

    fn gold_of(entries: &[(&str, &str)], pool: &QuestionPool) -> GoldSet {
        GoldSet::new(
            entries
                .iter()
                .map(|(q, g)| (q.to_string(), g.to_string()))
                .collect(),
            pool,
        )
        .unwrap()
    }

    #[test]
    fn mrr_all_rank_one_is_one() {
        let pool = pool_with(&["g1", "g2", "x"]);
        let gold = gold_of(&[("a", "g1"), ("b", "g2")], &pool);
        let rankings = vec![ranking("a", &["g1", "x"]), ranking("b", &["g2", "x"])];
        assert!((mrr(&rankings, &gold).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mrr_hand_value_seven_twelfths() {
        // Ranks 1, 2, 4 -> (1 + 1/2 + 1/4) / 3 = 7/12.
        let pool = pool_with(&["g", "x", "y", "z"]);
        let gold = gold_of(&[("a", "g"), ("b", "g"), ("c", "g")], &pool);
        let rankings = vec![
            ranking("a", &["g", "x", "y", "z"]),
            ranking("b", &["x", "g", "y", "z"]),
            ranking("c", &["x", "y", "z", "g"]),
        ];
        let got = mrr(&rankings, &gold).unwrap();
        assert!((got - 7.0 / 12.0).abs() < 1e-12, "{}", got);
        assert!((got - 0.5833).abs() < 1e-4);
    }

    #[test]
    fn mrr_missing_gold_contributes_zero() {
        let pool = pool_with(&["g", "x"]);
        let gold = gold_of(&[("a", "g"), ("b", "g")], &pool);
        let rankings = vec![ranking("a", &["g"]), ranking("b", &["x"])];
        assert!((mrr(&rankings, &gold).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mrr_errors() {
        let pool = pool_with(&["g"]);
        let gold = gold_of(&[("a", "g")], &pool);
        assert!(mrr(&[], &gold).is_err(), "empty rankings");
        let rankings = vec![ranking("unknown", &["g"])];
        assert!(mrr(&rankings, &gold).is_err(), "query without gold");
    }

    #[test]
    fn success_at_k_hand_counts() {
        // Gold at ranks 1, 5, 50; k = 10 -> 2 of 3.
        let pool = pool_with(&["g", "x"]);
        let gold = gold_of(&[("a", "g"), ("b", "g"), ("c", "g")], &pool);
        let mk = |rank: usize| {
            let mut ids = vec!["x"; rank.max(1) - 1];
            ids.push("g");
            ids.extend(std::iter::repeat_n("x", 60 - ids.len()));
            // Duplicate filler ids are fine for metric tests.
            RankedList {
                query_id: String::new(),
                entries: ids
                    .iter()
                    .enumerate()
                    .map(|(i, id)| RankedEntry {
                        question_id: (*id).to_owned(),
                        stage1_score: 0.0,
                        stage1_rank: i + 1,
                        stage2_score: None,
                        final_rank: i + 1,
                    })
                    .collect(),
            }
        };
        let mut rankings = vec![mk(1), mk(5), mk(50)];
        rankings[0].query_id = "a".into();
        rankings[1].query_id = "b".into();
        rankings[2].query_id = "c".into();
        let (count, ratio) = success_at_k(&rankings, &gold, 10).unwrap();
        assert_eq!(count, 2);
        assert!((ratio - 2.0 / 3.0).abs() < 1e-12);

        // Monotone non-decreasing in k.
        let mut prev = 0;
        for k in 1..=60 {
            let (c, _) = success_at_k(&rankings, &gold, k).unwrap();
            assert!(c >= prev);
            prev = c;
        }
        assert!(success_at_k(&rankings, &gold, 0).is_err());
    }

    #[test]
    fn q_times_mrr_sits_between_success_counts() {
        // Each rank-r hit contributes 1/r <= 1 and only rank-1 hits give 1.
        let pool = pool_with(&["g", "x"]);
        let ids: Vec<(String, String)> = (0..20)
            .map(|i| (format!("q{}", i), "g".to_string()))
            .collect();
        let gold = GoldSet::new(ids, &pool).unwrap();
        let rankings: Vec<RankedList> = (0..20)
            .map(|i| {
                let mut list = ranking(&format!("q{}", i), &["x"; 12]);
                if i % 3 != 0 {
                    let at = i % 7;
                    list.entries[at].question_id = "g".into();
                }
                list
            })
            .collect();
        let q = rankings.len() as f64;
        let m = mrr(&rankings, &gold).unwrap();
        let (at1, _) = success_at_k(&rankings, &gold, 1).unwrap();
        let (all, _) = success_at_k(&rankings, &gold, 12).unwrap();
        assert!(at1 as f64 <= q * m + 1e-12);
        assert!(q * m <= all as f64 + 1e-12);
    }

    #[test]
    fn gold_set_validates_against_pool() {
        let pool = pool_with(&["g"]);
        assert!(GoldSet::new(vec![("a".into(), "missing".into())], &pool).is_err());
        assert!(
            GoldSet::new(
                vec![("a".into(), "g".into()), ("a".into(), "g".into())],
                &pool
            )
            .is_err(),
            "duplicate query id"
        );
    }

    #[test]
    fn evalset_parses_and_validates() {
        let pool = pool_with(&["s1", "s2"]);
        let set = parse_evalset(
            "# header\nq1\ts1\tsome question text\nq2\ts2\tanother one\n",
            &pool,
        )
        .unwrap();
        assert_eq!(set.queries.len(), 2);
        assert_eq!(set.gold.gold_for("q1"), Some("s1"));

        assert!(parse_evalset("q1\tnope\ttext\n", &pool).is_err());
        assert!(parse_evalset("q1\ts1\n", &pool).is_err());
        let err = parse_evalset("q1\ts1\ta\nq1\ts2\tb\n", &pool).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn mean_position_reads_like_a_rank() {
        assert!((mean_position(0.345) - 2.9).abs() < 0.01);
        assert!((mean_position(0.2303) - 4.3).abs() < 0.05);
        assert_eq!(mean_position(1.0), 1.0);
    }

    #[test]
    fn sweep_single_cell_equals_direct_metric_calls() {
        use crate::corpus::{build_vocabulary, parse_pool};
        use crate::pipeline::{Pipeline, PipelineConfig};
        use crate::retrieval::{build_index, fit_tfidf, RelationMatrix};

        let pool = parse_pool(
            "s1\t\tfever and cough\ns2\t\tbroken arm\ns3\t\tsore throat\n",
            crate::corpus::TokenizerMode::WhitespaceNormalize,
        )
        .unwrap();
        let qs: Vec<crate::corpus::Question> = pool.iter().cloned().collect();
        let vocab = Arc::new(build_vocabulary(&qs, 1));
        let n_terms = vocab.len();
        let model = fit_tfidf(&pool, vocab).unwrap();
        let index = Arc::new(
            build_index(pool, model, Some(RelationMatrix::diagonal(n_terms))).unwrap(),
        );
        let evalset = parse_evalset(
            "u1\ts1\tfever cough\nu2\ts2\tarm broken badly\n",
            index.pool(),
        )
        .unwrap();

        let reports = sweep(
            &index,
            &evalset.queries,
            &evalset.gold,
            &[2],
            &[SweepConfig {
                name: "tfidf".into(),
                metric: Metric::Cosine,
                model: None,
            }],
        )
        .unwrap();

        let pipeline = Pipeline::new(
            index,
            PipelineConfig {
                metric: Metric::Cosine,
                candidates: 2,
                blend: None,
            },
            None,
        )
        .unwrap();
        let rankings = pipeline
            .batch_query(&[
                ("u1".into(), "fever cough".into()),
                ("u2".into(), "arm broken badly".into()),
            ])
            .unwrap();
        let (count, ratio) = success_at_k(&rankings, &evalset.gold, 2).unwrap();
        let direct_mrr = mrr(&rankings, &evalset.gold).unwrap();
        assert_eq!(reports[0].rows[0].count, count);
        assert_eq!(reports[0].rows[0].ratio, ratio);
        assert_eq!(reports[0].rows[0].mrr, direct_mrr);
    }

    #[test]
    fn csv_layout() {
        let reports = vec![EvalReport {
            config: "soft".into(),
            query_count: 2,
            rows: vec![EvalRow {
                k: 10,
                count: 1,
                ratio: 0.5,
                mrr: 0.75,
            }],
        }];
        assert_eq!(
            reports_to_csv(&reports),
            "config,k,count,ratio,mrr\nsoft,10,1,0.5,0.75\n"
        );
        let json = reports_to_json(&reports).unwrap();
        assert!(json.contains("\"config\": \"soft\""));
    }
}
