//! Forward and backward passes of the Siamese scoring network.
//!
//! Both encoder arms run the same LSTM weights over the embedded tokens of a
//! sequence; the last hidden state of each arm feeds an interaction vector
//! `z = [h1 + h2, |h1 - h2|, x_f]` into a ReLU dense layer, dropout (training
//! only), and a sigmoid output unit. Gradients are computed manually by
//! backpropagation through time over the same cached intermediates the
//! forward pass produced.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::reranker::model::{LstmParams, RerankerModel, GATE_C, GATE_F, GATE_I, GATE_O};
use crate::reranker::sequence::PaddedSequence;

/// Probabilities are clamped into this open interval so the loss stays finite.
const PROB_CLAMP: f64 = 1e-12;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// y = M x (rows x cols, row-major), overwriting `out`.
fn matvec(m: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    for r in 0..rows {
        let row = &m[r * cols..(r + 1) * cols];
        out[r] = row.iter().zip(x).map(|(a, b)| a * b).sum();
    }
}

/// y += M x.
fn matvec_add(m: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    for r in 0..rows {
        let row = &m[r * cols..(r + 1) * cols];
        out[r] += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// x += M^t y.
fn matvec_t_add(m: &[f64], rows: usize, cols: usize, y: &[f64], out: &mut [f64]) {
    for r in 0..rows {
        let row = &m[r * cols..(r + 1) * cols];
        let yr = y[r];
        for (o, &a) in out.iter_mut().zip(row) {
            *o += yr * a;
        }
    }
}

/// M += y (x)^t — rank-one accumulation.
fn outer_add(m: &mut [f64], rows: usize, cols: usize, y: &[f64], x: &[f64]) {
    for r in 0..rows {
        let row = &mut m[r * cols..(r + 1) * cols];
        let yr = y[r];
        for (o, &b) in row.iter_mut().zip(x) {
            *o += yr * b;
        }
    }
}

/// One LSTM cell update:
/// i = sigm(W_i x + U_i h + b_i), f = sigm(W_f x + U_f h + b_f),
/// c~ = tanh(W_c x + U_c h + b_c), c = i*c~ + f*c_prev,
/// o = sigm(W_o x + U_o h + b_o), h = o * tanh(c).
pub fn lstm_step(
    params: &LstmParams<'_>,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(x.len(), params.d_embed);
    assert_eq!(h_prev.len(), params.d_hidden);
    assert_eq!(c_prev.len(), params.d_hidden);
    let h_dim = params.d_hidden;
    let mut gates = [vec![0.0; h_dim], vec![0.0; h_dim], vec![0.0; h_dim], vec![0.0; h_dim]];
    for g in [GATE_I, GATE_F, GATE_C, GATE_O] {
        matvec(params.w(g), h_dim, params.d_embed, x, &mut gates[g]);
        matvec_add(params.u(g), h_dim, h_dim, h_prev, &mut gates[g]);
        for (v, b) in gates[g].iter_mut().zip(params.b(g)) {
            *v += b;
        }
    }
    let mut c = vec![0.0; h_dim];
    let mut h = vec![0.0; h_dim];
    for (j, (cj, hj)) in c.iter_mut().zip(&mut h).enumerate() {
        let i = sigmoid(gates[GATE_I][j]);
        let f = sigmoid(gates[GATE_F][j]);
        let g = gates[GATE_C][j].tanh();
        let o = sigmoid(gates[GATE_O][j]);
        *cj = i * g + f * c_prev[j];
        *hj = o * cj.tanh();
    }
    (h, c)
}

/// Per-timestep activations one arm produced, kept for backprop.
pub(crate) struct ArmTrace {
    len: usize,
    xs: Vec<f64>,    // len x d_embed
    i: Vec<f64>,     // len x d_hidden, post-sigmoid
    f: Vec<f64>,
    g: Vec<f64>,     // c~, post-tanh
    o: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
}

impl ArmTrace {
    pub fn last_h(&self, h_dim: usize) -> &[f64] {
        &self.h[(self.len - 1) * h_dim..self.len * h_dim]
    }
}

// Index loops keep the gate math aligned with the update equations.
#[allow(clippy::needless_range_loop)]
fn run_arm(
    params: &LstmParams<'_>,
    seq: &PaddedSequence,
    table: &EmbeddingTable,
) -> Result<ArmTrace> {
    let len = seq.length();
    if len == 0 {
        return Err(Error::InvalidInput(
            "cannot encode an empty question".into(),
        ));
    }
    let (e_dim, h_dim) = (params.d_embed, params.d_hidden);
    let mut trace = ArmTrace {
        len,
        xs: vec![0.0; len * e_dim],
        i: vec![0.0; len * h_dim],
        f: vec![0.0; len * h_dim],
        g: vec![0.0; len * h_dim],
        o: vec![0.0; len * h_dim],
        c: vec![0.0; len * h_dim],
        tanh_c: vec![0.0; len * h_dim],
        h: vec![0.0; len * h_dim],
    };
    let mut pre = [vec![0.0; h_dim], vec![0.0; h_dim], vec![0.0; h_dim], vec![0.0; h_dim]];
    let zeros = vec![0.0; h_dim];
    for t in 0..len {
        let x = &mut trace.xs[t * e_dim..(t + 1) * e_dim];
        table.write_row(seq.ids()[t], x);
        let x = &trace.xs[t * e_dim..(t + 1) * e_dim];
        let h_prev = if t == 0 {
            &zeros
        } else {
            &trace.h[(t - 1) * h_dim..t * h_dim]
        };
        for g in [GATE_I, GATE_F, GATE_C, GATE_O] {
            matvec(params.w(g), h_dim, e_dim, x, &mut pre[g]);
            matvec_add(params.u(g), h_dim, h_dim, h_prev, &mut pre[g]);
            for (v, b) in pre[g].iter_mut().zip(params.b(g)) {
                *v += b;
            }
        }
        for j in 0..h_dim {
            let at = t * h_dim + j;
            let c_prev = if t == 0 { 0.0 } else { trace.c[at - h_dim] };
            trace.i[at] = sigmoid(pre[GATE_I][j]);
            trace.f[at] = sigmoid(pre[GATE_F][j]);
            trace.g[at] = pre[GATE_C][j].tanh();
            trace.o[at] = sigmoid(pre[GATE_O][j]);
            trace.c[at] = trace.i[at] * trace.g[at] + trace.f[at] * c_prev;
            trace.tanh_c[at] = trace.c[at].tanh();
            trace.h[at] = trace.o[at] * trace.tanh_c[at];
        }
    }
    Ok(trace)
}

/// Runs the LSTM over the real tokens of `seq` (pad positions never update
/// state) and returns the hidden state at position `length - 1`.
pub fn encode(
    params: &LstmParams<'_>,
    seq: &PaddedSequence,
    table: &EmbeddingTable,
) -> Result<Vec<f64>> {
    let trace = run_arm(params, seq, table)?;
    Ok(trace.last_h(params.d_hidden).to_vec())
}

/// Everything the head computed for one example, kept for backprop.
pub(crate) struct ForwardTrace {
    pub left: ArmTrace,
    pub right: ArmTrace,
    pub z: Vec<f64>,
    pub dense_pre: Vec<f64>,
    /// Post-ReLU, post-dropout activations feeding the output unit.
    pub dense_out: Vec<f64>,
    /// Per-unit dropout scale (1/(1-rate) kept, 0 dropped); `None` in eval.
    pub dropout: Option<Vec<f64>>,
    pub probability: f64,
}

impl RerankerModel {
    pub(crate) fn forward_traced(
        &self,
        left: &PaddedSequence,
        right: &PaddedSequence,
        features: &[f64],
        dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<ForwardTrace> {
        if features.len() != self.config.feat_dim {
            return Err(Error::InvalidInput(format!(
                "expected {} features, got {}",
                self.config.feat_dim,
                features.len()
            )));
        }
        let lstm = self.lstm();
        let left = run_arm(&lstm, left, &self.table)?;
        let right = run_arm(&lstm, right, &self.table)?;
        let h_dim = self.config.d_hidden;
        let d = self.config.dense_hidden;
        let z_dim = self.config.interaction_dim();

        let h1 = left.last_h(h_dim);
        let h2 = right.last_h(h_dim);
        let mut z = Vec::with_capacity(z_dim);
        for j in 0..h_dim {
            z.push(h1[j] + h2[j]);
        }
        for j in 0..h_dim {
            z.push((h1[j] - h2[j]).abs());
        }
        z.extend_from_slice(features);

        let mut dense_pre = vec![0.0; d];
        matvec(
            &self.params[self.layout.dense_w..self.layout.dense_w + d * z_dim],
            d,
            z_dim,
            &z,
            &mut dense_pre,
        );
        for (v, b) in dense_pre
            .iter_mut()
            .zip(&self.params[self.layout.dense_b..self.layout.dense_b + d])
        {
            *v += b;
        }

        let dropout = dropout_rng.map(|rng| {
            let rate = self.config.dropout;
            let keep = 1.0 - rate;
            (0..d)
                .map(|_| {
                    if rng.random_range(0.0..1.0) < rate {
                        0.0
                    } else {
                        1.0 / keep
                    }
                })
                .collect::<Vec<f64>>()
        });
        let mut dense_out = vec![0.0; d];
        for j in 0..d {
            let relu = dense_pre[j].max(0.0);
            dense_out[j] = match &dropout {
                Some(mask) => relu * mask[j],
                None => relu,
            };
        }

        let out_w = &self.params[self.layout.out_w..self.layout.out_w + d];
        let logit: f64 = out_w.iter().zip(&dense_out).map(|(a, b)| a * b).sum::<f64>()
            + self.params[self.layout.out_b];
        let probability = sigmoid(logit).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);

        Ok(ForwardTrace {
            left,
            right,
            z,
            dense_pre,
            dense_out,
            dropout,
            probability,
        })
    }

    /// The interaction vector `z = [h1 + h2, |h1 - h2|, x_f]` the dense head
    /// consumes, exposed for inspection: for identical sequences the
    /// Manhattan block (positions `d_hidden..2*d_hidden`) is exactly zero.
    pub fn interaction_vector(
        &self,
        left: &PaddedSequence,
        right: &PaddedSequence,
        features: &[f64],
    ) -> Result<Vec<f64>> {
        Ok(self.forward_traced(left, right, features, None)?.z)
    }

    /// Scores a pair in evaluation mode (no dropout). The output is a
    /// duplicate-probability in the open interval (0, 1) and is exactly
    /// symmetric under swapping the two sequences (given symmetric features).
    pub fn forward(
        &self,
        left: &PaddedSequence,
        right: &PaddedSequence,
        features: &[f64],
    ) -> Result<f64> {
        Ok(self
            .forward_traced(left, right, features, None)?
            .probability)
    }
}

/// Binary cross-entropy of predicting probability `p` against label `y`,
/// with `p` clamped to keep the value finite.
pub fn bce_loss(p: f64, y: bool) -> f64 {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    if y {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Flat parameter-gradient accumulator aligned with the model layout.
#[derive(Debug, Clone)]
pub struct Gradients {
    values: Vec<f64>,
}

impl Gradients {
    pub(crate) fn zeros(n: usize) -> Gradients {
        Gradients {
            values: vec![0.0; n],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// One labeled training example, fully prepared for the network.
#[derive(Debug, Clone)]
pub struct TrainExample {
    pub left: PaddedSequence,
    pub right: PaddedSequence,
    pub features: Vec<f64>,
    pub label: bool,
}

impl RerankerModel {
    /// Mean BCE loss and exact parameter gradients over a batch.
    ///
    /// Dropout is disabled, so the gradients are exact for the evaluation
    /// forward pass; the training loop applies masks through the internal
    /// traced path instead.
    pub fn gradients(&self, batch: &[TrainExample]) -> Result<(f64, Gradients)> {
        if batch.is_empty() {
            return Err(Error::InvalidInput("gradient batch is empty".into()));
        }
        let mut grads = Gradients::zeros(self.params.len());
        let mut loss = 0.0;
        for ex in batch {
            let trace = self.forward_traced(&ex.left, &ex.right, &ex.features, None)?;
            loss += bce_loss(trace.probability, ex.label);
            self.backward(&trace, ex.label, 1.0 / batch.len() as f64, &mut grads);
        }
        Ok((loss / batch.len() as f64, grads))
    }

    /// Accumulates `scale * dLoss/dparams` for one traced example.
    pub(crate) fn backward(
        &self,
        trace: &ForwardTrace,
        label: bool,
        scale: f64,
        grads: &mut Gradients,
    ) {
        let (e_dim, h_dim, d) = (
            self.config.d_embed,
            self.config.d_hidden,
            self.config.dense_hidden,
        );
        let z_dim = self.config.interaction_dim();
        let g = grads.values_mut();

        // d loss / d logit for BCE on a sigmoid output.
        let y = if label { 1.0 } else { 0.0 };
        let dlogit = (trace.probability - y) * scale;

        // Output unit.
        let out_w: Vec<f64> =
            self.params[self.layout.out_w..self.layout.out_w + d].to_vec();
        for j in 0..d {
            g[self.layout.out_w + j] += dlogit * trace.dense_out[j];
        }
        g[self.layout.out_b] += dlogit;

        // Dense layer (through dropout and ReLU).
        let mut d_pre = vec![0.0; d];
        for j in 0..d {
            let up = dlogit * out_w[j];
            let through_dropout = match &trace.dropout {
                Some(mask) => up * mask[j],
                None => up,
            };
            d_pre[j] = if trace.dense_pre[j] > 0.0 {
                through_dropout
            } else {
                0.0
            };
        }
        outer_add(
            &mut g[self.layout.dense_w..self.layout.dense_w + d * z_dim],
            d,
            z_dim,
            &d_pre,
            &trace.z,
        );
        for j in 0..d {
            g[self.layout.dense_b + j] += d_pre[j];
        }
        let mut dz = vec![0.0; z_dim];
        matvec_t_add(
            &self.params[self.layout.dense_w..self.layout.dense_w + d * z_dim],
            d,
            z_dim,
            &d_pre,
            &mut dz,
        );

        // Interaction vector: z = [h1 + h2, |h1 - h2|, x_f].
        let h1 = trace.left.last_h(h_dim);
        let h2 = trace.right.last_h(h_dim);
        let mut dh1 = vec![0.0; h_dim];
        let mut dh2 = vec![0.0; h_dim];
        for j in 0..h_dim {
            let dsum = dz[j];
            let dabs = dz[h_dim + j];
            // Subgradient of |h1 - h2|: 0 where the arms agree exactly.
            let sign = if h1[j] == h2[j] {
                0.0
            } else {
                (h1[j] - h2[j]).signum()
            };
            dh1[j] = dsum + dabs * sign;
            dh2[j] = dsum - dabs * sign;
        }

        self.backward_arm(&trace.left, &dh1, grads);
        self.backward_arm(&trace.right, &dh2, grads);
        let _ = e_dim;
    }

    /// Backpropagation through time for one arm, from the gradient at its
    /// last hidden state. Both arms accumulate into the same shared weights.
    fn backward_arm(&self, arm: &ArmTrace, dh_last: &[f64], grads: &mut Gradients) {
        let (e_dim, h_dim) = (self.config.d_embed, self.config.d_hidden);
        let layout = self.layout;
        let len = arm.len;
        let zeros = vec![0.0; h_dim];

        let mut dh = dh_last.to_vec();
        let mut dc = vec![0.0; h_dim];
        let mut dipre = vec![0.0; h_dim];
        let mut dfpre = vec![0.0; h_dim];
        let mut dgpre = vec![0.0; h_dim];
        let mut dopre = vec![0.0; h_dim];

        for t in (0..len).rev() {
            let at = t * h_dim;
            let i = &arm.i[at..at + h_dim];
            let f = &arm.f[at..at + h_dim];
            let gc = &arm.g[at..at + h_dim];
            let o = &arm.o[at..at + h_dim];
            let tanh_c = &arm.tanh_c[at..at + h_dim];
            let c_prev = if t == 0 {
                &zeros[..]
            } else {
                &arm.c[at - h_dim..at]
            };
            let h_prev = if t == 0 {
                &zeros[..]
            } else {
                &arm.h[at - h_dim..at]
            };
            let x = &arm.xs[t * e_dim..(t + 1) * e_dim];

            for j in 0..h_dim {
                // h = o * tanh(c)
                let do_ = dh[j] * tanh_c[j];
                dopre[j] = do_ * o[j] * (1.0 - o[j]);
                dc[j] += dh[j] * o[j] * (1.0 - tanh_c[j] * tanh_c[j]);
                // c = i*g + f*c_prev
                let di = dc[j] * gc[j];
                dipre[j] = di * i[j] * (1.0 - i[j]);
                let dg = dc[j] * i[j];
                dgpre[j] = dg * (1.0 - gc[j] * gc[j]);
                let df = dc[j] * c_prev[j];
                dfpre[j] = df * f[j] * (1.0 - f[j]);
            }

            for (gate, dpre) in [
                (GATE_I, &dipre),
                (GATE_F, &dfpre),
                (GATE_C, &dgpre),
                (GATE_O, &dopre),
            ] {
                let gslice = grads.values_mut();
                outer_add(
                    &mut gslice[layout.w[gate]..layout.w[gate] + h_dim * e_dim],
                    h_dim,
                    e_dim,
                    dpre,
                    x,
                );
                outer_add(
                    &mut gslice[layout.u[gate]..layout.u[gate] + h_dim * h_dim],
                    h_dim,
                    h_dim,
                    dpre,
                    h_prev,
                );
                for j in 0..h_dim {
                    gslice[layout.b[gate] + j] += dpre[j];
                }
            }

            // State gradients for t-1.
            let mut dh_prev = vec![0.0; h_dim];
            for (gate, dpre) in [
                (GATE_I, &dipre),
                (GATE_F, &dfpre),
                (GATE_C, &dgpre),
                (GATE_O, &dopre),
            ] {
                matvec_t_add(
                    self.lstm().u(gate),
                    h_dim,
                    h_dim,
                    dpre,
                    &mut dh_prev,
                );
            }
            for j in 0..h_dim {
                dc[j] *= f[j];
            }
            dh = dh_prev;
        }
    }
}
