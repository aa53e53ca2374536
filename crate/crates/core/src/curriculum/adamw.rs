use serde::{Deserialize, Serialize};

use crate::neural::GruDecoderParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamWState {
    pub m: GruDecoderParams,
    pub v: GruDecoderParams,
    pub t: u64,
}

impl AdamWState {
    pub fn new(params: &GruDecoderParams) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }
}

/// One AdamW update with decoupled weight decay:
/// `theta -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta)`.
pub fn adamw_step(
    params: &mut GruDecoderParams,
    grads: &GruDecoderParams,
    state: &mut AdamWState,
    lr: f64,
    cfg: &AdamWConfig,
) -> Result<()> {
    let shapes = |p: &GruDecoderParams| p.tensors().iter().map(|(_, s, _)| s.clone()).collect::<Vec<_>>();
    let expected = shapes(params);
    if shapes(grads) != expected || shapes(&state.m) != expected || shapes(&state.v) != expected {
        return Err(Error::Shape("optimizer state, gradients and parameters differ in shape".into()));
    }
    state.t += 1;
    let bc1 = 1.0 - cfg.beta1.powf(state.t as f64);
    let bc2 = 1.0 - cfg.beta2.powf(state.t as f64);
    let grads = grads.tensors();
    for (((theta, (_, _, g)), m), v) in params
        .tensors_mut()
        .into_iter()
        .zip(grads)
        .zip(state.m.tensors_mut())
        .zip(state.v.tensors_mut())
    {
        for i in 0..theta.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            theta[i] -= lr * (m_hat / (v_hat.sqrt() + cfg.eps) + cfg.weight_decay * theta[i]);
        }
    }
    Ok(())
}
