//! Stage-2 fine ranking: a Siamese LSTM with fully shared weights, sum and
//! Manhattan-difference interaction blocks, handcrafted pair features, a
//! dense head with dropout, binary cross-entropy loss with manually derived
//! gradients, and a Nadam optimizer.

mod checkpoint;
mod features;
mod model;
mod nadam;
mod net;
mod sequence;
mod train;

pub use checkpoint::{encode_model, load_model, save_model, Checkpoint};
pub use features::handcrafted_features;
pub use model::{LstmParams, ModelConfig, RerankerModel, FEATURE_DIM};
pub use nadam::{nadam_step, NadamState};
pub use net::{bce_loss, encode, lstm_step, Gradients, TrainExample};
pub use sequence::{pad_or_truncate, PaddedSequence};
pub use train::{
    history_to_csv, prepare_examples, train, EpochStats, TrainConfig, TrainedReranker,
};
