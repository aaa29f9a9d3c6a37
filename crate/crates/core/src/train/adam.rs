use crate::error::{Error, Result};
use crate::model::PdfModelParams;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// First and second moments, one buffer per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: i32,
}

impl AdamState {
    pub fn new(params: &PdfModelParams) -> Self {
        let zeros: Vec<Vec<f64>> = params.slices().iter().map(|s| vec![0.0; s.len()]).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    pub fn step(&self) -> i32 {
        self.step
    }
}

/// Adam with bias correction and decoupled weight decay
/// (`p ← p - lr·wd·p` before the moment update is applied).
pub fn adam_step(
    params: &mut PdfModelParams,
    grads: &PdfModelParams,
    state: &mut AdamState,
    lr: f64,
    weight_decay: f64,
) -> Result<()> {
    let grad_slices = grads.slices();
    if grad_slices.iter().any(|s| s.iter().any(|g| !g.is_finite())) {
        return Err(Error::NonFinite("gradients".into()));
    }
    let param_slices = params.slices_mut();
    if param_slices.len() != state.m.len() || param_slices.len() != grad_slices.len() {
        return Err(Error::DimensionMismatch {
            context: "optimizer state tensors",
            expected: state.m.len(),
            actual: param_slices.len(),
        });
    }
    state.step += 1;
    let bc1 = 1.0 - BETA1.powi(state.step);
    let bc2 = 1.0 - BETA2.powi(state.step);
    for (((p, g), m), v) in param_slices
        .into_iter()
        .zip(grad_slices)
        .zip(&mut state.m)
        .zip(&mut state.v)
    {
        for i in 0..p.len() {
            p[i] -= lr * weight_decay * p[i];
            m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
            v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + EPSILON);
        }
    }
    Ok(())
}
