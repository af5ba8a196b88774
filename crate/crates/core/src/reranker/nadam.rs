use crate::error::{Error, Result};
use crate::reranker::net::Gradients;

/// Nesterov-Adam optimizer state: first/second moment accumulators plus the
/// step counter and hyperparameters.
#[derive(Debug, Clone)]
pub struct NadamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl NadamState {
    pub fn new(n_params: usize, learning_rate: f64, beta1: f64, beta2: f64) -> NadamState {
        NadamState {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
            learning_rate,
            beta1,
            beta2,
            epsilon: 1e-8,
        }
    }

    /// Defaults matching the training setup: lr 0.002, beta1 0.9, beta2 0.999.
    pub fn with_defaults(n_params: usize) -> NadamState {
        NadamState::new(n_params, 0.002, 0.9, 0.999)
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One Nadam update: Adam moments with Nesterov-style look-ahead in the
/// bias-corrected first moment.
///
///   m <- b1*m + (1-b1)*g,  v <- b2*v + (1-b2)*g^2
///   m_hat = m / (1 - b1^(t+1)),  g_hat = g / (1 - b1^t),  v_hat = v / (1 - b2^t)
///   theta -= lr * (b1*m_hat + (1-b1)*g_hat) / (sqrt(v_hat) + eps)
pub fn nadam_step(state: &mut NadamState, params: &mut [f64], grads: &Gradients) -> Result<()> {
    let g = grads.values();
    if g.len() != params.len() || g.len() != state.m.len() {
        return Err(Error::InvalidInput(format!(
            "optimizer shape mismatch: {} params, {} grads, {} moments",
            params.len(),
            g.len(),
            state.m.len()
        )));
    }
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(
            "non-finite gradient passed to the optimizer".into(),
        ));
    }
    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let corr1_next = 1.0 - b1.powi(t + 1);
    let corr1 = 1.0 - b1.powi(t);
    let corr2 = 1.0 - b2.powi(t);
    for i in 0..params.len() {
        let gi = g[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * gi;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * gi * gi;
        let m_hat = state.m[i] / corr1_next;
        let g_hat = gi / corr1;
        let v_hat = state.v[i] / corr2;
        let update = b1 * m_hat + (1.0 - b1) * g_hat;
        params[i] -= state.learning_rate * update / (v_hat.sqrt() + state.epsilon);
    }
    Ok(())
}
