use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::LabeledPair;
use crate::error::{Error, Result};
use crate::reranker::features::handcrafted_features;
use crate::reranker::model::RerankerModel;
use crate::reranker::nadam::{nadam_step, NadamState};
use crate::reranker::net::{bce_loss, Gradients, TrainExample};
use crate::reranker::sequence::pad_or_truncate;
use crate::retrieval::{RelationMatrix, TfIdfModel};

/// Training-loop hyperparameters. The optimizer runs at learning rate 0.002
/// with beta1 0.9 and beta2 0.999 unless overridden.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Optional L2 penalty added to the gradients; 0 disables it.
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 32,
            learning_rate: 0.002,
            beta1: 0.9,
            beta2: 0.999,
            weight_decay: 0.0,
            seed: 1,
        }
    }
}

/// Metrics recorded after each epoch (evaluation mode, dropout off).
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

/// A trained model (parameters restored from the best-validation-loss epoch)
/// plus the full per-epoch history.
#[derive(Debug)]
pub struct TrainedReranker {
    pub model: RerankerModel,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
}

/// Turns labeled pairs into network-ready examples using the model's padding
/// length and the retrieval artifacts for handcrafted features.
pub fn prepare_examples(
    model: &RerankerModel,
    pairs: &[LabeledPair],
    tfidf: &TfIdfModel,
    relation: &RelationMatrix,
) -> Result<Vec<TrainExample>> {
    let max_len = model.config().max_len;
    let table = model.table();
    pairs
        .iter()
        .map(|pair| {
            if pair.user_question.tokens().is_empty()
                || pair.standard_question.tokens().is_empty()
            {
                return Err(Error::InvalidInput(format!(
                    "pair {:?} has an empty question after tokenization",
                    pair.pair_id
                )));
            }
            Ok(TrainExample {
                left: pad_or_truncate(pair.user_question.tokens(), max_len, table),
                right: pad_or_truncate(pair.standard_question.tokens(), max_len, table),
                features: handcrafted_features(
                    &pair.user_question,
                    &pair.standard_question,
                    tfidf,
                    relation,
                )
                .to_vec(),
                label: pair.label,
            })
        })
        .collect()
}

fn evaluate(model: &RerankerModel, examples: &[&TrainExample]) -> Result<(f64, f64)> {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for ex in examples {
        let p = model.forward(&ex.left, &ex.right, &ex.features)?;
        loss += bce_loss(p, ex.label);
        if (p > 0.5) == ex.label {
            correct += 1;
        }
    }
    let n = examples.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Trains the re-ranker on labeled pairs with mini-batch Nadam.
///
/// The pairs are split 90/10 into train/validation by a seeded shuffle; both
/// labels must be present. Training is single-threaded and fully seeded:
/// identical inputs and seeds give bit-identical history and parameters.
/// `on_epoch` fires after each epoch with the freshly computed stats.
pub fn train(
    mut model: RerankerModel,
    pairs: &[LabeledPair],
    tfidf: &TfIdfModel,
    relation: &RelationMatrix,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<TrainedReranker> {
    if config.epochs < 1 || config.batch_size < 1 {
        return Err(Error::InvalidInput(
            "training requires epochs >= 1 and batch_size >= 1".into(),
        ));
    }
    if pairs.len() < 2 {
        return Err(Error::InvalidInput(
            "training requires at least 2 labeled pairs".into(),
        ));
    }
    let positives = pairs.iter().filter(|p| p.label).count();
    if positives == 0 || positives == pairs.len() {
        return Err(Error::InvalidInput(
            "training data must contain both labels".into(),
        ));
    }

    let examples = prepare_examples(&model, pairs, tfidf, relation)?;

    // Seeded shuffle, last tenth (at least one pair) held out for validation.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.shuffle(&mut rng);
    let val_count = ((examples.len() as f64 * 0.1).round() as usize)
        .max(1)
        .min(examples.len() - 1);
    let (train_idx, val_idx) = order.split_at(examples.len() - val_count);
    let mut train_idx = train_idx.to_vec();
    let val_set: Vec<&TrainExample> = val_idx.iter().map(|&i| &examples[i]).collect();

    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut optimizer = NadamState::new(
        model.param_count(),
        config.learning_rate,
        config.beta1,
        config.beta2,
    );

    let mut history = Vec::with_capacity(config.epochs);
    let mut best_epoch = 0usize;
    let mut best_val = f64::INFINITY;
    let mut best_params: Vec<f64> = model.params().to_vec();

    for epoch in 1..=config.epochs {
        train_idx.shuffle(&mut rng);
        for chunk in train_idx.chunks(config.batch_size) {
            let scale = 1.0 / chunk.len() as f64;
            let mut grads = Gradients::zeros(model.param_count());
            for &i in chunk {
                let ex = &examples[i];
                let trace = model.forward_traced(
                    &ex.left,
                    &ex.right,
                    &ex.features,
                    Some(&mut dropout_rng),
                )?;
                model.backward(&trace, ex.label, scale, &mut grads);
            }
            if config.weight_decay > 0.0 {
                let params = model.params().to_vec();
                for (g, p) in grads.values_mut().iter_mut().zip(&params) {
                    *g += config.weight_decay * p;
                }
            }
            nadam_step(&mut optimizer, model.params_mut(), &grads)?;
        }

        let train_refs: Vec<&TrainExample> = train_idx.iter().map(|&i| &examples[i]).collect();
        let (train_loss, train_acc) = evaluate(&model, &train_refs)?;
        let (val_loss, val_acc) = evaluate(&model, &val_set)?;
        let stats = EpochStats {
            epoch,
            train_loss,
            train_acc,
            val_loss,
            val_acc,
        };
        if val_loss < best_val {
            best_val = val_loss;
            best_epoch = epoch;
            best_params.copy_from_slice(model.params());
        }
        on_epoch(&stats);
        history.push(stats);
    }

    model.params_mut().copy_from_slice(&best_params);
    Ok(TrainedReranker {
        model,
        history,
        best_epoch,
    })
}

/// History in the `epoch,train_loss,train_acc,val_loss,val_acc` CSV layout.
pub fn history_to_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,train_loss,train_acc,val_loss,val_acc\n");
    for row in history {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.epoch, row.train_loss, row.train_acc, row.val_loss, row.val_acc
        ));
    }
    out
}
