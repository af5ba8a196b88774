use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use qmatch::corpus::TokenizerMode;
use qmatch::embeddings::CbowConfig;
use qmatch::reranker::TrainConfig;
use qmatch::retrieval::{Metric, RelationConfig, RelationTransform};

use qmatch_cli::commands::{
    build_index_cmd, evaluate_cmd, query_cmd, train_embeddings, train_reranker_cmd,
    BuildIndexOpts, EvaluateOpts, QueryOpts, TrainEmbeddingsOpts, TrainRerankerOpts,
};
use qmatch_cli::config::RunConfig;

/// Two-stage semantic matching of short questions against a fixed pool:
/// sparse retrieval (TF-IDF or soft cosine) plus a Siamese LSTM re-ranker.
#[derive(Parser)]
#[command(name = "qmatch", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat key=value config file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for all randomness in this command.
    #[arg(long)]
    seed: Option<u64>,
    /// Seed for out-of-vocabulary embedding sampling.
    #[arg(long)]
    oov_seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Train CBOW word embeddings on a sentence-per-line corpus.
    TrainEmbeddings {
        #[command(flatten)]
        common: Common,
        /// Corpus file, one sentence per line.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Output path for word2vec text vectors.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        tokenizer_mode: Option<TokenizerMode>,
        /// Embedding dimension.
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        min_count: Option<u64>,
        /// Negative samples per prediction.
        #[arg(long)]
        negative: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
    },
    /// Build the retrieval index over a question pool.
    BuildIndex {
        #[command(flatten)]
        common: Common,
        /// Pool file: `id<TAB>category<TAB>text` per line.
        #[arg(long)]
        pool: Option<PathBuf>,
        /// Output path for the index.
        #[arg(long)]
        out: Option<PathBuf>,
        /// `cosine` builds a plain TF-IDF index; `soft-cosine` adds the
        /// embedding-derived relation matrix.
        #[arg(long)]
        metric: Option<Metric>,
        /// word2vec text vectors (required for soft-cosine).
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Extra sentence-per-line text merged into the vocabulary.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        tokenizer_mode: Option<TokenizerMode>,
        #[arg(long)]
        min_count: Option<u64>,
        /// Relation-value threshold in [0, 1).
        #[arg(long)]
        tau: Option<f64>,
        /// Neighbors kept per term before symmetrization.
        #[arg(long)]
        top_r: Option<usize>,
        /// How embedding cosines map to relation values.
        #[arg(long)]
        transform: Option<RelationTransform>,
        /// Also dump the relation matrix as `term_i<TAB>term_j<TAB>m` triples.
        #[arg(long)]
        dump_relation: Option<PathBuf>,
    },
    /// Train the Siamese LSTM re-ranker on labeled question pairs.
    TrainReranker {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        index: Option<PathBuf>,
        /// Pair file: `pair_id<TAB>user_text<TAB>standard_question_id<TAB>label`.
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Output path for the model checkpoint.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optional CSV of per-epoch train/validation loss and accuracy.
        #[arg(long)]
        history: Option<PathBuf>,
        #[arg(long)]
        d_hidden: Option<usize>,
        #[arg(long)]
        dense_hidden: Option<usize>,
        #[arg(long)]
        max_len: Option<usize>,
        #[arg(long)]
        dropout: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        weight_decay: Option<f64>,
    },
    /// Rank pool questions for one query or a batch of queries.
    Query {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        index: Option<PathBuf>,
        /// Re-ranker checkpoint for two-stage ranking.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// A single query text.
        #[arg(long)]
        text: Option<String>,
        /// Batch file: `id<TAB>text` per line.
        #[arg(long)]
        batch: Option<PathBuf>,
        /// Query id used with --text.
        #[arg(long)]
        query_id: Option<String>,
        /// Stage-1 shortlist size.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        metric: Option<Metric>,
        /// Skip stage 2 even when a model is given.
        #[arg(long)]
        stage1_only: bool,
        /// Optional stage-1/stage-2 score blend weight in [0, 1].
        #[arg(long)]
        blend: Option<f64>,
        /// Write JSON-lines rankings here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep candidate counts and report success counts, ratios, and MRR.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        index: Option<PathBuf>,
        /// Evaluation set: `query_id<TAB>gold_question_id<TAB>text` per line.
        #[arg(long)]
        evalset: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Comma-separated candidate counts, e.g. `10,20,50`.
        #[arg(long)]
        ks: Option<String>,
        /// Write the CSV report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a JSON summary.
        #[arg(long)]
        json_out: Option<PathBuf>,
    },
}

fn parse_ks(raw: &str) -> anyhow::Result<Vec<usize>> {
    raw.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| anyhow::anyhow!("invalid candidate count {:?} in ks", part))
        })
        .collect()
}

fn run() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::TrainEmbeddings {
            common,
            corpus,
            out,
            tokenizer_mode,
            dim,
            window,
            min_count,
            negative,
            epochs,
            learning_rate,
        } => {
            let file = RunConfig::load(common.config.as_deref())?;
            let defaults = CbowConfig::default();
            let opts = TrainEmbeddingsOpts {
                corpus: file.required_path("corpus", corpus)?,
                out: file.required_path("out", out)?,
                mode: file.value(
                    "tokenizer_mode",
                    tokenizer_mode,
                    TokenizerMode::WhitespaceNormalize,
                )?,
                cbow: CbowConfig {
                    dimension: file.value("dim", dim, defaults.dimension)?,
                    window: file.value("window", window, defaults.window)?,
                    min_count: file.value("min_count", min_count, defaults.min_count)?,
                    negative_samples: file.value("negative", negative, defaults.negative_samples)?,
                    epochs: file.value("epochs", epochs, defaults.epochs)?,
                    learning_rate: file.value(
                        "learning_rate",
                        learning_rate,
                        defaults.learning_rate,
                    )?,
                    seed: file.value("seed", common.seed, defaults.seed)?,
                    oov_seed: file.value("oov_seed", common.oov_seed, 0)?,
                },
            };
            train_embeddings(&opts)
        }
        Command::BuildIndex {
            common,
            pool,
            out,
            metric,
            embeddings,
            corpus,
            tokenizer_mode,
            min_count,
            tau,
            top_r,
            transform,
            dump_relation,
        } => {
            let file = RunConfig::load(common.config.as_deref())?;
            let defaults = RelationConfig::default();
            let opts = BuildIndexOpts {
                pool: file.required_path("pool", pool)?,
                out: file.required_path("out", out)?,
                mode: file.value(
                    "tokenizer_mode",
                    tokenizer_mode,
                    TokenizerMode::WhitespaceNormalize,
                )?,
                metric: file.value("metric", metric, Metric::SoftCosine)?,
                embeddings: file.optional_path("embeddings", embeddings)?,
                corpus: file.optional_path("corpus", corpus)?,
                min_count: file.value("min_count", min_count, 1)?,
                relation: RelationConfig {
                    tau: file.value("tau", tau, defaults.tau)?,
                    top_r: file.value("top_r", top_r, defaults.top_r)?,
                    transform: file.value("transform", transform, defaults.transform)?,
                },
                oov_seed: file.value("oov_seed", common.oov_seed, 0)?,
                dump_relation: file.optional_path("dump_relation", dump_relation)?,
            };
            build_index_cmd(&opts)
        }
        Command::TrainReranker {
            common,
            index,
            pairs,
            embeddings,
            out,
            history,
            d_hidden,
            dense_hidden,
            max_len,
            dropout,
            epochs,
            batch_size,
            learning_rate,
            weight_decay,
        } => {
            let file = RunConfig::load(common.config.as_deref())?;
            let defaults = TrainConfig::default();
            let opts = TrainRerankerOpts {
                index: file.required_path("index", index)?,
                pairs: file.required_path("pairs", pairs)?,
                embeddings: file.required_path("embeddings", embeddings)?,
                out: file.required_path("out", out)?,
                history: file.optional_path("history", history)?,
                d_hidden: file.value("d_hidden", d_hidden, 50)?,
                dense_hidden: file.value("dense_hidden", dense_hidden, 64)?,
                max_len: file.value("max_len", max_len, 30)?,
                dropout: file.value("dropout", dropout, 0.2)?,
                train: TrainConfig {
                    epochs: file.value("epochs", epochs, defaults.epochs)?,
                    batch_size: file.value("batch_size", batch_size, defaults.batch_size)?,
                    learning_rate: file.value(
                        "learning_rate",
                        learning_rate,
                        defaults.learning_rate,
                    )?,
                    weight_decay: file.value("weight_decay", weight_decay, 0.0)?,
                    seed: file.value("seed", common.seed, defaults.seed)?,
                    ..defaults
                },
                oov_seed: file.value("oov_seed", common.oov_seed, 0)?,
            };
            train_reranker_cmd(&opts)
        }
        Command::Query {
            common,
            index,
            model,
            embeddings,
            text,
            batch,
            query_id,
            n,
            metric,
            stage1_only,
            blend,
            out,
        } => {
            let file = RunConfig::load(common.config.as_deref())?;
            let opts = QueryOpts {
                index: file.required_path("index", index)?,
                model: file.optional_path("model", model)?,
                embeddings: file.optional_path("embeddings", embeddings)?,
                text: text.or_else(|| file.get("text").map(str::to_owned)),
                batch: file.optional_path("batch", batch)?,
                query_id: file.value("query_id", query_id, "q".to_owned())?,
                candidates: file.value("n", n, 50)?,
                metric: file.optional("metric", metric)?,
                stage1_only: stage1_only
                    || file.value("stage1_only", None::<bool>, false)?,
                blend: file.optional("blend", blend)?,
                out: file.optional_path("out", out)?,
                oov_seed: file.value("oov_seed", common.oov_seed, 0)?,
            };
            query_cmd(&opts)
        }
        Command::Evaluate {
            common,
            index,
            evalset,
            model,
            embeddings,
            ks,
            out,
            json_out,
        } => {
            let file = RunConfig::load(common.config.as_deref())?;
            let ks = match ks.or_else(|| file.get("ks").map(str::to_owned)) {
                Some(raw) => parse_ks(&raw)?,
                None => (10..=100).step_by(5).collect(),
            };
            let opts = EvaluateOpts {
                index: file.required_path("index", index)?,
                evalset: file.required_path("evalset", evalset)?,
                model: file.optional_path("model", model)?,
                embeddings: file.optional_path("embeddings", embeddings)?,
                ks,
                out: file.optional_path("out", out)?,
                json_out: file.optional_path("json_out", json_out)?,
                oov_seed: file.value("oov_seed", common.oov_seed, 0)?,
            };
            evaluate_cmd(&opts)
        }
    }
}

fn main() {
    if let Err(error) = run() {
        eprintln!("error: {:#}", error);
        std::process::exit(1);
    }
}
