use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};

/// Number of handcrafted pair features (see `handcrafted_features`).
pub const FEATURE_DIM: usize = 5;

/// Network shape and fixed hyperparameters of a re-ranker model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub d_embed: usize,
    pub d_hidden: usize,
    pub dense_hidden: usize,
    pub feat_dim: usize,
    /// Sequences are padded or truncated to this many tokens.
    pub max_len: usize,
    pub dropout: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d_embed: 200,
            d_hidden: 50,
            dense_hidden: 64,
            feat_dim: FEATURE_DIM,
            max_len: 30,
            dropout: 0.2,
        }
    }
}

/// Upper bound on any single model dimension; keeps untrusted checkpoint
/// shapes from overflowing size arithmetic or forcing huge allocations.
const MAX_DIM: usize = 1 << 20;

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_embed < 1
            || self.d_hidden < 1
            || self.dense_hidden < 1
            || self.max_len < 1
            || self.feat_dim != FEATURE_DIM
        {
            return Err(Error::InvalidInput(format!(
                "invalid model shape: {:?}",
                self
            )));
        }
        if self.d_embed > MAX_DIM
            || self.d_hidden > MAX_DIM
            || self.dense_hidden > MAX_DIM
            || self.max_len > MAX_DIM
        {
            return Err(Error::InvalidInput(format!(
                "model dimension exceeds the supported maximum {}: {:?}",
                MAX_DIM, self
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidInput(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        Ok(())
    }

    /// Width of the dense-layer input: sum block + Manhattan block + features.
    pub fn interaction_dim(&self) -> usize {
        2 * self.d_hidden + self.feat_dim
    }

    pub fn param_count(&self) -> usize {
        let (e, h, d) = (self.d_embed, self.d_hidden, self.dense_hidden);
        let z = self.interaction_dim();
        4 * h * e + 4 * h * h + 4 * h + d * z + d + d + 1
    }
}

/// Offsets of each named tensor inside the flat parameter vector.
///
/// Order: W_i W_f W_c W_o | U_i U_f U_c U_o | b_i b_f b_c b_o |
/// dense weights | dense bias | output weights | output bias.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Layout {
    pub w: [usize; 4],
    pub u: [usize; 4],
    pub b: [usize; 4],
    pub dense_w: usize,
    pub dense_b: usize,
    pub out_w: usize,
    pub out_b: usize,
    pub total: usize,
}

pub(crate) const GATE_I: usize = 0;
pub(crate) const GATE_F: usize = 1;
pub(crate) const GATE_C: usize = 2;
pub(crate) const GATE_O: usize = 3;

impl Layout {
    pub fn new(config: &ModelConfig) -> Layout {
        let (e, h, d) = (config.d_embed, config.d_hidden, config.dense_hidden);
        let z = config.interaction_dim();
        let mut cursor = 0;
        let mut take = |n: usize| {
            let at = cursor;
            cursor += n;
            at
        };
        let w = [take(h * e), take(h * e), take(h * e), take(h * e)];
        let u = [take(h * h), take(h * h), take(h * h), take(h * h)];
        let b = [take(h), take(h), take(h), take(h)];
        let dense_w = take(d * z);
        let dense_b = take(d);
        let out_w = take(d);
        let out_b = take(1);
        Layout {
            w,
            u,
            b,
            dense_w,
            dense_b,
            out_w,
            out_b,
            total: cursor,
        }
    }
}

/// Borrowed view of the shared LSTM weights: input matrices `W_*`
/// (d_hidden x d_embed), recurrent matrices `U_*` (d_hidden x d_hidden), and
/// biases `b_*`. Both Siamese arms read the same underlying storage.
#[derive(Clone, Copy)]
pub struct LstmParams<'a> {
    pub(crate) params: &'a [f64],
    pub(crate) layout: Layout,
    pub d_embed: usize,
    pub d_hidden: usize,
}

impl<'a> LstmParams<'a> {
    pub(crate) fn w(&self, gate: usize) -> &'a [f64] {
        let n = self.d_hidden * self.d_embed;
        &self.params[self.layout.w[gate]..self.layout.w[gate] + n]
    }

    pub(crate) fn u(&self, gate: usize) -> &'a [f64] {
        let n = self.d_hidden * self.d_hidden;
        &self.params[self.layout.u[gate]..self.layout.u[gate] + n]
    }

    pub(crate) fn b(&self, gate: usize) -> &'a [f64] {
        &self.params[self.layout.b[gate]..self.layout.b[gate] + self.d_hidden]
    }
}

/// The stage-2 scoring network: one shared set of LSTM weights feeding a
/// dense head over the interaction vector (sum, Manhattan difference, and
/// handcrafted features of the pair).
pub struct RerankerModel {
    pub(crate) config: ModelConfig,
    pub(crate) params: Vec<f64>,
    pub(crate) layout: Layout,
    pub(crate) table: Arc<EmbeddingTable>,
}

impl std::fmt::Debug for RerankerModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RerankerModel")
            .field("config", &self.config)
            .field("params", &self.params.len())
            .finish()
    }
}

impl RerankerModel {
    /// A model with Xavier-uniform weight matrices, zero biases, and the
    /// forget-gate bias at 1.0, drawn from a seeded stream.
    pub fn init(config: ModelConfig, table: Arc<EmbeddingTable>, seed: u64) -> Result<RerankerModel> {
        config.validate()?;
        if table.dim() != config.d_embed {
            return Err(Error::InvalidInput(format!(
                "embedding table has dimension {} but the model expects {}",
                table.dim(),
                config.d_embed
            )));
        }
        let layout = Layout::new(&config);
        let mut params = vec![0.0f64; layout.total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (e, h, d) = (config.d_embed, config.d_hidden, config.dense_hidden);
        let z = config.interaction_dim();
        let fill = |range: std::ops::Range<usize>, fan_in: usize, fan_out: usize,
                        rng: &mut ChaCha8Rng, params: &mut [f64]| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut params[range] {
                *p = rng.random_range(-limit..limit);
            }
        };
        for gate in 0..4 {
            fill(layout.w[gate]..layout.w[gate] + h * e, e, h, &mut rng, &mut params);
        }
        for gate in 0..4 {
            fill(layout.u[gate]..layout.u[gate] + h * h, h, h, &mut rng, &mut params);
        }
        fill(layout.dense_w..layout.dense_w + d * z, z, d, &mut rng, &mut params);
        fill(layout.out_w..layout.out_w + d, d, 1, &mut rng, &mut params);
        // Forget-gate bias starts open so early training can carry state.
        for p in &mut params[layout.b[GATE_F]..layout.b[GATE_F] + h] {
            *p = 1.0;
        }
        Ok(RerankerModel {
            config,
            params,
            layout,
            table,
        })
    }

    pub(crate) fn from_parts(
        config: ModelConfig,
        params: Vec<f64>,
        table: Arc<EmbeddingTable>,
    ) -> Result<RerankerModel> {
        config.validate()?;
        if table.dim() != config.d_embed {
            return Err(Error::InvalidInput(format!(
                "embedding table has dimension {} but the model expects {}",
                table.dim(),
                config.d_embed
            )));
        }
        let layout = Layout::new(&config);
        if params.len() != layout.total {
            return Err(Error::Format(format!(
                "parameter vector has {} values, layout needs {}",
                params.len(),
                layout.total
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Format("non-finite model parameter".into()));
        }
        Ok(RerankerModel {
            config,
            params,
            layout,
            table,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn table(&self) -> &Arc<EmbeddingTable> {
        &self.table
    }

    /// The single LstmParams instance shared by both encoder arms.
    pub fn lstm(&self) -> LstmParams<'_> {
        LstmParams {
            params: &self.params,
            layout: self.layout,
            d_embed: self.config.d_embed,
            d_hidden: self.config.d_hidden,
        }
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Overwrites a single parameter; used for perturbation experiments such
    /// as finite-difference checks.
    pub fn set_param(&mut self, index: usize, value: f64) {
        assert!(value.is_finite(), "parameters must stay finite");
        self.params[index] = value;
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }
}
