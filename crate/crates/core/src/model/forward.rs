use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::activation::Activation;
use super::config::{ModelConfig, Readout};
use super::mixer::{mixer_forward, mixer_forward_with_grad, propagate, MixInput, MixerTrace};
use super::params::{InputParams, PdfLayerParams, PdfModelParams};
use crate::error::{Error, Result};
use crate::family::MatrixFamily;
use crate::graph::{Graph, NodeFeatures};

/// Forward mode. Dropout is active only in `Train` and draws its masks from
/// the supplied stream.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut ChaCha8Rng),
}

/// Everything a PDF layer computed, kept for the reverse pass.
#[derive(Debug, Clone)]
pub struct LayerTrace {
    pub h_in: Array2<f64>,
    /// `H W_1 + b_1`.
    pub a1: Array2<f64>,
    pub z: Array2<f64>,
    pub mix: MixerTrace,
    /// `Z'`.
    pub z_mixed: Array2<f64>,
    /// `Z' W_2 + b_2`.
    pub a2: Array2<f64>,
    /// Inverted-dropout scale per entry (0 or `1/(1-p)`).
    pub dropout: Option<Array2<f64>>,
}

/// One PDF layer on gathered family entries: pre-transform, mixing,
/// post-transform, then dropout.
pub fn layer_forward_traced(
    h: &Array2<f64>,
    input: &MixInput,
    p: &PdfLayerParams,
    activation: Activation,
    dropout: f64,
    mode: &mut Mode<'_>,
) -> Result<(Array2<f64>, LayerTrace)> {
    layer_impl(h, input, p, activation, dropout, mode, true)
}

fn layer_impl(
    h: &Array2<f64>,
    input: &MixInput,
    p: &PdfLayerParams,
    activation: Activation,
    dropout: f64,
    mode: &mut Mode<'_>,
    for_backward: bool,
) -> Result<(Array2<f64>, LayerTrace)> {
    if h.ncols() != p.pre.fan_in() {
        return Err(Error::DimensionMismatch {
            context: "layer input width",
            expected: p.pre.fan_in(),
            actual: h.ncols(),
        });
    }
    if h.nrows() != input.n {
        return Err(Error::DimensionMismatch {
            context: "layer input rows vs family size",
            expected: input.n,
            actual: h.nrows(),
        });
    }
    let a1 = p.pre.affine(h);
    let z = activation.map(&a1);
    let mix = if for_backward {
        mixer_forward_with_grad(input, &p.mixer)?
    } else {
        mixer_forward(input, &p.mixer)?
    };
    if mix.out.ncols() != 1 && mix.out.ncols() != z.ncols() {
        return Err(Error::DimensionMismatch {
            context: "idp mixer channels",
            expected: z.ncols(),
            actual: mix.out.ncols(),
        });
    }
    let z_mixed = propagate(input, &mix.out, &z);
    let a2 = p.post.affine(&z_mixed);
    let mut out = activation.map(&a2);
    let mask = match mode {
        Mode::Train(rng) if dropout > 0.0 => {
            let keep = 1.0 / (1.0 - dropout);
            let mask = Array2::from_shape_simple_fn(out.raw_dim(), || {
                if rng.random::<f64>() < dropout {
                    0.0
                } else {
                    keep
                }
            });
            out *= &mask;
            Some(mask)
        }
        _ => None,
    };
    let trace = LayerTrace {
        h_in: h.clone(),
        a1,
        z,
        mix,
        z_mixed,
        a2,
        dropout: mask,
    };
    Ok((out, trace))
}

/// [`layer_forward_traced`] on a family, returning only the new features.
pub fn layer_forward(
    h: &Array2<f64>,
    fam: &MatrixFamily,
    p: &PdfLayerParams,
    activation: Activation,
    dropout: f64,
    mode: &mut Mode<'_>,
) -> Result<Array2<f64>> {
    let input = MixInput::from_family(fam);
    layer_impl(h, &input, p, activation, dropout, mode, false).map(|(h, _)| h)
}

#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub h0: Array2<f64>,
    pub layers: Vec<LayerTrace>,
    pub h_last: Array2<f64>,
    pub pooled: Array1<f64>,
    /// Per-channel winning node of a max readout.
    pub argmax: Vec<usize>,
    pub output: Array1<f64>,
}

pub fn encode_input(features: &NodeFeatures, params: &PdfModelParams, hidden_dim: usize) -> Result<Array2<f64>> {
    match (&params.input, features) {
        (InputParams::Embedding(table), NodeFeatures::Labels(labels)) => {
            let mut h = Array2::zeros((labels.len(), table.ncols()));
            for (u, &l) in labels.iter().enumerate() {
                if l >= table.nrows() {
                    return Err(Error::Config(format!(
                        "node label {l} has no embedding (table has {} rows)",
                        table.nrows()
                    )));
                }
                h.row_mut(u).assign(&table.row(l));
            }
            Ok(h)
        }
        (InputParams::Linear(proj), NodeFeatures::Dense(x)) => {
            if x.ncols() != proj.fan_in() {
                return Err(Error::DimensionMismatch {
                    context: "node feature width",
                    expected: proj.fan_in(),
                    actual: x.ncols(),
                });
            }
            Ok(proj.affine(x))
        }
        (InputParams::Identity, NodeFeatures::Dense(x)) => {
            if x.ncols() != hidden_dim {
                return Err(Error::DimensionMismatch {
                    context: "identity input needs feature width = hidden_dim",
                    expected: hidden_dim,
                    actual: x.ncols(),
                });
            }
            Ok(x.clone())
        }
        _ => Err(Error::Config("node features do not match the input encoding".into())),
    }
}

pub fn readout(h: &Array2<f64>, kind: Readout) -> (Array1<f64>, Vec<usize>) {
    match kind {
        Readout::Mean => (h.mean_axis(Axis(0)).expect("graph has nodes"), Vec::new()),
        Readout::Sum => (h.sum_axis(Axis(0)), Vec::new()),
        Readout::Max => {
            let mut arg = vec![0; h.ncols()];
            let mut best = h.row(0).to_owned();
            for u in 1..h.nrows() {
                for j in 0..h.ncols() {
                    if h[[u, j]] > best[j] {
                        best[j] = h[[u, j]];
                        arg[j] = u;
                    }
                }
            }
            (best, arg)
        }
    }
}

/// Full forward pass keeping everything the reverse pass needs.
pub fn forward_traced(
    features: &NodeFeatures,
    input: &MixInput,
    cfg: &ModelConfig,
    params: &PdfModelParams,
    mode: &mut Mode<'_>,
) -> Result<ForwardTrace> {
    forward_impl(features, input, cfg, params, mode, true)
}

/// Prediction on gathered family entries, without reverse-pass caches.
pub fn forward_output(
    features: &NodeFeatures,
    input: &MixInput,
    cfg: &ModelConfig,
    params: &PdfModelParams,
    mode: &mut Mode<'_>,
) -> Result<Array1<f64>> {
    forward_impl(features, input, cfg, params, mode, false).map(|t| t.output)
}

fn forward_impl(
    features: &NodeFeatures,
    input: &MixInput,
    cfg: &ModelConfig,
    params: &PdfModelParams,
    mode: &mut Mode<'_>,
    for_backward: bool,
) -> Result<ForwardTrace> {
    if features.len() != input.n {
        return Err(Error::DimensionMismatch {
            context: "node count vs family size",
            expected: input.n,
            actual: features.len(),
        });
    }
    let h0 = encode_input(features, params, cfg.hidden_dim)?;
    let mut h = h0.clone();
    let mut layers = Vec::with_capacity(params.layers.len());
    for p in &params.layers {
        let (next, trace) = layer_impl(&h, input, p, cfg.activation, cfg.dropout, mode, for_backward)?;
        layers.push(trace);
        h = next;
    }
    let (pooled, argmax) = readout(&h, cfg.readout);
    let output = params
        .head
        .affine(&pooled.view().insert_axis(Axis(0)).to_owned())
        .row(0)
        .to_owned();
    Ok(ForwardTrace {
        h0,
        layers,
        h_last: h,
        pooled,
        argmax,
        output,
    })
}

/// Graph-level prediction: a scalar for regression, class logits otherwise.
pub fn model_forward(
    g: &Graph,
    fam: &MatrixFamily,
    cfg: &ModelConfig,
    params: &PdfModelParams,
    mut mode: Mode<'_>,
) -> Result<Array1<f64>> {
    if fam.n() != g.n() {
        return Err(Error::DimensionMismatch {
            context: "family size vs graph",
            expected: g.n(),
            actual: fam.n(),
        });
    }
    if fam.len() != cfg.family_size() {
        return Err(Error::DimensionMismatch {
            context: "family members vs config",
            expected: cfg.family_size(),
            actual: fam.len(),
        });
    }
    params.check_shapes(cfg)?;
    let input = MixInput::from_family(fam);
    forward_output(g.features(), &input, cfg, params, &mut mode)
}
