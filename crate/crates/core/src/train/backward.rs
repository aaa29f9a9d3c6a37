//! Reverse pass through the whole model. Family matrices are constants, so
//! gradients flow into the input encoder, transforms, mixers and head only.

use ndarray::{Array1, Array2, Axis};

use super::loss::{loss_and_grad, LossKind};
use crate::error::{Error, Result};
use crate::family::MatrixFamily;
use crate::graph::{Graph, NodeFeatures};
use crate::model::{
    forward_traced, mixer_backward, propagate_backward, ForwardTrace, InputParams, MixInput, Mode,
    ModelConfig, PdfModelParams, Readout,
};

fn check_finite(grads: &PdfModelParams, what: &str) -> Result<()> {
    if grads.slices().iter().any(|s| s.iter().any(|x| !x.is_finite())) {
        return Err(Error::NonFinite(what.to_string()));
    }
    Ok(())
}

/// Accumulates into `grads` the gradient of a scalar whose derivative with
/// respect to the model output is `d_output`.
pub fn backprop(
    features: &NodeFeatures,
    input: &MixInput,
    cfg: &ModelConfig,
    params: &PdfModelParams,
    trace: &ForwardTrace,
    d_output: &Array1<f64>,
    grads: &mut PdfModelParams,
) -> Result<()> {
    let row = |v: &Array1<f64>| v.view().insert_axis(Axis(0)).to_owned();
    let d_out_row = row(d_output);
    grads.head.w += &row(&trace.pooled).t().dot(&d_out_row);
    if let Some(b) = &mut grads.head.b {
        *b += d_output;
    }
    let d_pooled = params.head.w.dot(d_output);

    let n = trace.h_last.nrows();
    let mut d_h = Array2::zeros(trace.h_last.raw_dim());
    match cfg.readout {
        Readout::Mean => d_h += &(row(&d_pooled) / n as f64),
        Readout::Sum => d_h += &row(&d_pooled),
        Readout::Max => {
            for (j, &u) in trace.argmax.iter().enumerate() {
                d_h[[u, j]] += d_pooled[j];
            }
        }
    }

    for (l, (lt, p)) in trace.layers.iter().zip(&params.layers).enumerate().rev() {
        if let Some(mask) = &lt.dropout {
            d_h *= mask;
        }
        let g = &mut grads.layers[l];
        let d_a2 = cfg.activation.backprop(&lt.a2, &d_h);
        g.post.w += &lt.z_mixed.t().dot(&d_a2);
        if let Some(b) = &mut g.post.b {
            *b += &d_a2.sum_axis(Axis(0));
        }
        let d_z_mixed = d_a2.dot(&p.post.w.t());
        let (d_mixed, d_z) = propagate_backward(input, &lt.mix.out, &lt.z, &d_z_mixed);
        mixer_backward(input, &p.mixer, &lt.mix, &d_mixed, &mut g.mixer.layers);
        let d_a1 = cfg.activation.backprop(&lt.a1, &d_z);
        g.pre.w += &lt.h_in.t().dot(&d_a1);
        if let Some(b) = &mut g.pre.b {
            *b += &d_a1.sum_axis(Axis(0));
        }
        d_h = d_a1.dot(&p.pre.w.t());
        check_finite(grads, &format!("layer {l}"))?;
    }

    match (&mut grads.input, features) {
        (InputParams::Embedding(table), NodeFeatures::Labels(labels)) => {
            for (u, &lab) in labels.iter().enumerate() {
                let mut r = table.row_mut(lab);
                r += &d_h.row(u);
            }
        }
        (InputParams::Linear(proj), NodeFeatures::Dense(x)) => {
            proj.w += &x.t().dot(&d_h);
            if let Some(b) = &mut proj.b {
                *b += &d_h.sum_axis(Axis(0));
            }
        }
        _ => {}
    }
    check_finite(grads, "input encoder")
}

/// Loss of one graph and its accumulated gradient, on gathered family entries.
#[allow(clippy::too_many_arguments)]
pub fn backward_prepared(
    features: &NodeFeatures,
    input: &MixInput,
    cfg: &ModelConfig,
    params: &PdfModelParams,
    target: f64,
    kind: LossKind,
    mode: &mut Mode<'_>,
    scale: f64,
    grads: &mut PdfModelParams,
) -> Result<f64> {
    let trace = forward_traced(features, input, cfg, params, mode)?;
    if trace.output.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("model output".into()));
    }
    let (value, d_out) = loss_and_grad(&trace.output, target, kind)?;
    backprop(features, input, cfg, params, &trace, &(d_out * scale), grads)?;
    Ok(value)
}

/// Gradient of the single-graph loss with respect to every parameter, in
/// evaluation mode (no dropout).
pub fn backward(
    g: &Graph,
    fam: &MatrixFamily,
    cfg: &ModelConfig,
    params: &PdfModelParams,
    target: f64,
    kind: LossKind,
) -> Result<(f64, PdfModelParams)> {
    params.check_shapes(cfg)?;
    let input = MixInput::from_family(fam);
    let mut grads = params.zeros_like();
    let value = backward_prepared(
        g.features(),
        &input,
        cfg,
        params,
        target,
        kind,
        &mut Mode::Eval,
        1.0,
        &mut grads,
    )?;
    Ok((value, grads))
}
