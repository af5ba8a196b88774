//! Implementations behind the subcommands. Each function takes fully
//! resolved options, does the work through the library, and writes outputs
//! atomically. Progress goes to stderr; data goes to files or stdout.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use qmatch::corpus::{load_pairs, load_pool, tokenize, Token, TokenizerMode, Vocabulary};
use qmatch::embeddings::{load_word2vec_text, save_word2vec_text, train_cbow, CbowConfig};
use qmatch::eval::{load_evalset, reports_to_csv, reports_to_json, sweep, SweepConfig};
use qmatch::fsio::write_atomic;
use qmatch::pipeline::{ranked_lists_to_jsonl, Pipeline, PipelineConfig};
use qmatch::reranker::{
    history_to_csv, load_model, save_model, train, ModelConfig, RerankerModel, TrainConfig,
};
use qmatch::retrieval::{
    build_index, build_relation_matrix, fit_tfidf, Index, Metric, RelationConfig, RelationMatrix,
};
use qmatch::Error;

/// Reads a sentence-per-line text file into token sequences.
fn read_sentence_corpus(path: &Path, mode: TokenizerMode) -> anyhow::Result<Vec<Vec<Token>>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading corpus {}", path.display()))?;
    Ok(text.lines().map(|line| tokenize(line, mode)).collect())
}

pub struct TrainEmbeddingsOpts {
    pub corpus: PathBuf,
    pub out: PathBuf,
    pub mode: TokenizerMode,
    pub cbow: CbowConfig,
}

pub fn train_embeddings(opts: &TrainEmbeddingsOpts) -> anyhow::Result<()> {
    let corpus = read_sentence_corpus(&opts.corpus, opts.mode)?;
    let trained = train_cbow(&corpus, &opts.cbow)?;
    for (i, loss) in trained.epoch_loss.iter().enumerate() {
        eprintln!("epoch {}/{}: loss {:.6}", i + 1, opts.cbow.epochs, loss);
    }
    save_word2vec_text(&trained.table, &opts.out)?;
    eprintln!(
        "wrote {} vectors of dimension {} to {}",
        trained.table.len(),
        trained.table.dim(),
        opts.out.display()
    );
    Ok(())
}

pub struct BuildIndexOpts {
    pub pool: PathBuf,
    pub out: PathBuf,
    pub mode: TokenizerMode,
    pub metric: Metric,
    pub embeddings: Option<PathBuf>,
    /// Extra sentence-per-line text merged into the vocabulary, so query-side
    /// words outside the pool are still representable in the vector space.
    pub corpus: Option<PathBuf>,
    pub min_count: u64,
    pub relation: RelationConfig,
    pub oov_seed: u64,
    pub dump_relation: Option<PathBuf>,
}

pub fn build_index_cmd(opts: &BuildIndexOpts) -> anyhow::Result<()> {
    let pool = load_pool(&opts.pool, opts.mode)?;
    let extra = match &opts.corpus {
        Some(path) => read_sentence_corpus(path, opts.mode)?,
        None => Vec::new(),
    };
    let docs = pool
        .iter()
        .map(|q| q.tokens())
        .chain(extra.iter().map(Vec::as_slice));
    let vocab = Arc::new(Vocabulary::from_documents(docs, opts.min_count));
    let model = fit_tfidf(&pool, vocab.clone())?;

    let relation = match opts.metric {
        Metric::Cosine => None,
        Metric::SoftCosine => {
            let path = opts.embeddings.as_ref().ok_or_else(|| {
                anyhow::anyhow!("a soft-cosine index needs --embeddings")
            })?;
            let table = load_word2vec_text(path, opts.oov_seed)?;
            let relation = build_relation_matrix(&table, &vocab, &opts.relation);
            eprintln!(
                "relation matrix: {} stored edges over {} terms",
                relation.edge_count(),
                vocab.len()
            );
            if let Some(dump) = &opts.dump_relation {
                write_atomic(dump, relation.to_triples(&vocab).as_bytes())?;
            }
            Some(relation)
        }
    };

    let index = build_index(pool, model, relation)?;
    index.save(&opts.out)?;
    eprintln!(
        "indexed {} questions over {} terms -> {}",
        index.pool().len(),
        vocab.len(),
        opts.out.display()
    );
    Ok(())
}

pub struct TrainRerankerOpts {
    pub index: PathBuf,
    pub pairs: PathBuf,
    pub embeddings: PathBuf,
    pub out: PathBuf,
    pub history: Option<PathBuf>,
    pub d_hidden: usize,
    pub dense_hidden: usize,
    pub max_len: usize,
    pub dropout: f64,
    pub train: TrainConfig,
    pub oov_seed: u64,
}

pub fn train_reranker_cmd(opts: &TrainRerankerOpts) -> anyhow::Result<()> {
    let index = Index::load(&opts.index, None)?;
    let pairs = load_pairs(&opts.pairs, index.pool())?;
    let table = Arc::new(load_word2vec_text(&opts.embeddings, opts.oov_seed)?);
    let config = ModelConfig {
        d_embed: table.dim(),
        d_hidden: opts.d_hidden,
        dense_hidden: opts.dense_hidden,
        max_len: opts.max_len,
        dropout: opts.dropout,
        ..ModelConfig::default()
    };
    let model = RerankerModel::init(config, table, opts.train.seed)?;
    // Features must come from the same artifacts the query path will use.
    let diagonal = RelationMatrix::diagonal(index.vocabulary().len());
    let relation = index.relation().unwrap_or(&diagonal);
    let split = pairs.len() - ((pairs.len() as f64 * 0.1).round() as usize).clamp(1, pairs.len() - 1);
    eprintln!("training on {} pairs ({} train / {} validation)", pairs.len(), split, pairs.len() - split);
    let outcome = train(model, &pairs, index.model(), relation, &opts.train, |s| {
        eprintln!(
            "epoch {}/{}: train loss {:.6} acc {:.4} | val loss {:.6} acc {:.4}",
            s.epoch, opts.train.epochs, s.train_loss, s.train_acc, s.val_loss, s.val_acc
        );
    })?;
    eprintln!("best validation loss at epoch {}", outcome.best_epoch);
    save_model(&outcome.model, &opts.out)?;
    if let Some(history) = &opts.history {
        write_atomic(history, history_to_csv(&outcome.history).as_bytes())?;
    }
    eprintln!("wrote model to {}", opts.out.display());
    Ok(())
}

/// Parses a batch query file: `id<TAB>text` per line, `#` comments and blank
/// lines ignored, duplicate ids rejected.
pub fn parse_query_batch(input: &str) -> qmatch::Result<Vec<(String, String)>> {
    let mut queries = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (lineno, line) in input.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, text) = line.split_once('\t').ok_or(Error::Parse {
            line: lineno,
            message: "expected `id<TAB>text`".into(),
        })?;
        if id.is_empty() {
            return Err(Error::Parse {
                line: lineno,
                message: "empty query id".into(),
            });
        }
        if !seen.insert(id.to_owned()) {
            return Err(Error::Parse {
                line: lineno,
                message: format!("duplicate query id {:?}", id),
            });
        }
        queries.push((id.to_owned(), text.to_owned()));
    }
    Ok(queries)
}

pub struct QueryOpts {
    pub index: PathBuf,
    pub model: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub text: Option<String>,
    pub batch: Option<PathBuf>,
    pub query_id: String,
    pub candidates: usize,
    pub metric: Option<Metric>,
    pub stage1_only: bool,
    pub blend: Option<f64>,
    pub out: Option<PathBuf>,
    pub oov_seed: u64,
}

fn load_stage2(
    model_path: &Path,
    embeddings: Option<&PathBuf>,
    oov_seed: u64,
) -> anyhow::Result<Arc<RerankerModel>> {
    let embeddings = embeddings.ok_or_else(|| {
        anyhow::anyhow!("--model also needs --embeddings (the table it was trained with)")
    })?;
    let table = Arc::new(load_word2vec_text(embeddings, oov_seed)?);
    Ok(Arc::new(load_model(model_path, table)?))
}

pub fn query_cmd(opts: &QueryOpts) -> anyhow::Result<()> {
    let index = Arc::new(Index::load(&opts.index, None)?);
    let metric = opts.metric.unwrap_or(if index.relation().is_some() {
        Metric::SoftCosine
    } else {
        Metric::Cosine
    });
    let model = match (&opts.model, opts.stage1_only) {
        (Some(path), false) => Some(load_stage2(path, opts.embeddings.as_ref(), opts.oov_seed)?),
        _ => None,
    };
    let queries: Vec<(String, String)> = match (&opts.text, &opts.batch) {
        (Some(text), None) => vec![(opts.query_id.clone(), text.clone())],
        (None, Some(path)) => {
            let raw = std::fs::read_to_string(path)
                .with_context(|| format!("reading batch file {}", path.display()))?;
            parse_query_batch(&raw)?
        }
        _ => bail!("provide exactly one of --text or --batch"),
    };
    let pipeline = Pipeline::new(
        index,
        PipelineConfig {
            metric,
            candidates: opts.candidates,
            blend: opts.blend,
        },
        model,
    )?;
    let lists = pipeline.batch_query(&queries)?;
    let jsonl = ranked_lists_to_jsonl(&lists)?;
    match &opts.out {
        Some(path) => {
            write_atomic(path, jsonl.as_bytes())?;
            eprintln!("wrote {} rankings to {}", lists.len(), path.display());
        }
        None => print!("{}", jsonl),
    }
    Ok(())
}

pub struct EvaluateOpts {
    pub index: PathBuf,
    pub evalset: PathBuf,
    pub model: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub ks: Vec<usize>,
    pub out: Option<PathBuf>,
    pub json_out: Option<PathBuf>,
    pub oov_seed: u64,
}

pub fn evaluate_cmd(opts: &EvaluateOpts) -> anyhow::Result<()> {
    let index = Arc::new(Index::load(&opts.index, None)?);
    let evalset = load_evalset(&opts.evalset, index.pool())?;
    let model = match &opts.model {
        Some(path) => Some(load_stage2(path, opts.embeddings.as_ref(), opts.oov_seed)?),
        None => None,
    };

    let mut configs = vec![SweepConfig {
        name: "tfidf".into(),
        metric: Metric::Cosine,
        model: None,
    }];
    if index.relation().is_some() {
        configs.push(SweepConfig {
            name: "soft".into(),
            metric: Metric::SoftCosine,
            model: None,
        });
    }
    if let Some(model) = &model {
        configs.push(SweepConfig {
            name: "tfidf+model".into(),
            metric: Metric::Cosine,
            model: Some(model.clone()),
        });
        if index.relation().is_some() {
            configs.push(SweepConfig {
                name: "soft+model".into(),
                metric: Metric::SoftCosine,
                model: Some(model.clone()),
            });
        }
    }

    let reports = sweep(&index, &evalset.queries, &evalset.gold, &opts.ks, &configs)?;
    for report in &reports {
        let best = report.rows.iter().map(|r| r.mrr).fold(0.0f64, f64::max);
        if best > 0.0 {
            eprintln!(
                "{}: best MRR {:.4} (mean position {:.1}) over {} queries",
                report.config,
                best,
                qmatch::eval::mean_position(best),
                report.query_count
            );
        }
    }
    let csv = reports_to_csv(&reports);
    match &opts.out {
        Some(path) => {
            write_atomic(path, csv.as_bytes())?;
            eprintln!("wrote report to {}", path.display());
        }
        None => print!("{}", csv),
    }
    if let Some(path) = &opts.json_out {
        write_atomic(path, reports_to_json(&reports)?.as_bytes())?;
        eprintln!("wrote JSON summary to {}", path.display());
    }
    Ok(())
}
