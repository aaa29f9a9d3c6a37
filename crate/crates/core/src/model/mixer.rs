//! The positionwise family mixer `f_θ` and the propagation it drives.
//!
//! Every upper-triangle position `(u, v)` in the family support contributes a
//! `|G|`-vector of member entries; the mixer maps it to one value (shd) or one
//! value per channel (idp). Lower-triangle entries mirror the upper ones, so
//! mixed operators are symmetric by construction.

use ndarray::{Array2, ArrayView2, Axis};

use super::activation::Activation;
use super::config::{MixerDepth, MixerVariant};
use super::params::{Dense, MixerParams};
use crate::error::{Error, Result};
use crate::family::MatrixFamily;
use crate::linalg::DenseSymMatrix;

/// Family entries gathered by position.
///
/// Positions where every member is zero share one all-zero input row, so the
/// mixer evaluates `f_θ(0)` once per graph.
#[derive(Debug, Clone, PartialEq)]
pub struct MixInput {
    pub n: usize,
    pub positions: Vec<(usize, usize)>,
    /// Input row of each position.
    pub row_of: Vec<usize>,
    /// `R × |G|` distinct input rows.
    pub x: Array2<f64>,
}

impl MixInput {
    pub fn from_family(fam: &MatrixFamily) -> Self {
        let positions = fam.positions();
        let k = fam.len();
        let mut rows: Vec<f64> = Vec::new();
        let mut row_of = Vec::with_capacity(positions.len());
        let mut zero_row = None;
        let mut r = 0;
        let mut entry = vec![0.0; k];
        for &(u, v) in &positions {
            for (i, e) in entry.iter_mut().enumerate() {
                *e = fam.matrix(i).get(u, v);
            }
            if entry.iter().all(|&e| e == 0.0) {
                if let Some(z) = zero_row {
                    row_of.push(z);
                    continue;
                }
                zero_row = Some(r);
            }
            rows.extend_from_slice(&entry);
            row_of.push(r);
            r += 1;
        }
        let x = Array2::from_shape_vec((r, k), rows).expect("row-major gather");
        Self {
            n: fam.n(),
            positions,
            row_of,
            x,
        }
    }

    pub fn family_size(&self) -> usize {
        self.x.ncols()
    }
}

/// Intermediate values of one mixer evaluation.
#[derive(Debug, Clone)]
pub struct MixerTrace {
    /// Pre-activations of each mixer layer.
    pub pre: Vec<Array2<f64>>,
    /// Activation derivatives at `pre`, when requested.
    pub deriv: Option<Vec<Array2<f64>>>,
    /// Inputs to each mixer layer beyond the first.
    pub hidden: Vec<Array2<f64>>,
    /// `R × C` mixed values, one row per distinct input.
    pub out: Array2<f64>,
}

fn mixer_activation(depth: MixerDepth) -> Activation {
    match depth {
        MixerDepth::Lin => Activation::Identity,
        MixerDepth::OneLayer | MixerDepth::TwoLayer => Activation::Gelu,
    }
}

pub fn mixer_forward(input: &MixInput, m: &MixerParams) -> Result<MixerTrace> {
    mixer_forward_impl(input, m, false)
}

/// [`mixer_forward`] that also caches activation derivatives for the reverse pass.
pub fn mixer_forward_with_grad(input: &MixInput, m: &MixerParams) -> Result<MixerTrace> {
    mixer_forward_impl(input, m, true)
}

fn mixer_forward_impl(input: &MixInput, m: &MixerParams, with_grad: bool) -> Result<MixerTrace> {
    if input.family_size() != m.input_width() {
        return Err(Error::DimensionMismatch {
            context: "mixer input width vs family size",
            expected: m.input_width(),
            actual: input.family_size(),
        });
    }
    let act = mixer_activation(m.config.depth);
    let mut pre = Vec::with_capacity(m.layers.len());
    let mut deriv = with_grad.then(Vec::new);
    let mut hidden = Vec::new();
    let mut cur = Array2::zeros((0, 0));
    for (l, layer) in m.layers.iter().enumerate() {
        let z = layer.affine(if l == 0 { &input.x } else { &cur });
        if let Some(d) = &mut deriv {
            let (out, g) = act.map_with_grad(&z);
            cur = out;
            d.push(g);
        } else {
            cur = act.map(&z);
        }
        pre.push(z);
        if l + 1 < m.layers.len() {
            hidden.push(cur.clone());
        }
    }
    Ok(MixerTrace {
        pre,
        deriv,
        hidden,
        out: cur,
    })
}

/// Backpropagates `d_out` (`R × C`) into the mixer layer gradients.
pub fn mixer_backward(input: &MixInput, m: &MixerParams, trace: &MixerTrace, d_out: &Array2<f64>, grads: &mut [Dense]) {
    let act = mixer_activation(m.config.depth);
    let mut upstream = d_out.clone();
    for l in (0..m.layers.len()).rev() {
        let d_pre = match &trace.deriv {
            Some(d) => &upstream * &d[l],
            None => act.backprop(&trace.pre[l], &upstream),
        };
        let layer_in = if l == 0 { &input.x } else { &trace.hidden[l - 1] };
        grads[l].w += &layer_in.t().dot(&d_pre);
        if let Some(b) = &mut grads[l].b {
            *b += &d_pre.sum_axis(Axis(0));
        }
        if l > 0 {
            upstream = d_pre.dot(&m.layers[l].w.t());
        }
    }
}

/// The mixed operator(s) `f_θ(G)`.
#[derive(Debug, Clone, PartialEq)]
pub enum MixedOperator {
    Shared(DenseSymMatrix),
    PerChannel(Vec<DenseSymMatrix>),
}

impl MixedOperator {
    pub fn matrices(&self) -> Vec<&DenseSymMatrix> {
        match self {
            MixedOperator::Shared(m) => vec![m],
            MixedOperator::PerChannel(ms) => ms.iter().collect(),
        }
    }
}

/// Applies the mixer to every supported position of `fam`; unsupported
/// positions stay zero.
pub fn mix_family(fam: &MatrixFamily, m: &MixerParams) -> Result<MixedOperator> {
    let input = MixInput::from_family(fam);
    let trace = mixer_forward(&input, m)?;
    let n = fam.n();
    let channels = trace.out.ncols();
    let mut mats = vec![Array2::<f64>::zeros((n, n)); channels];
    for (&(u, v), &r) in input.positions.iter().zip(&input.row_of) {
        for (c, mat) in mats.iter_mut().enumerate() {
            mat[[u, v]] = trace.out[[r, c]];
            mat[[v, u]] = trace.out[[r, c]];
        }
    }
    let mut mats = mats
        .into_iter()
        .map(DenseSymMatrix::new)
        .collect::<Result<Vec<_>>>()?;
    Ok(match m.config.variant {
        MixerVariant::Shd => MixedOperator::Shared(mats.remove(0)),
        MixerVariant::Idp => MixedOperator::PerChannel(mats),
    })
}

fn row<'a>(a: &'a ArrayView2<'a, f64>, i: usize) -> &'a [f64] {
    let d = a.ncols();
    &a.as_slice().expect("standard layout")[i * d..(i + 1) * d]
}

fn axpy(out: &mut [f64], m: &[f64], x: &[f64]) {
    for ((o, &m), &x) in out.iter_mut().zip(m).zip(x) {
        *o += m * x;
    }
}

/// `Z' = M Z` (shd) or `Z'_{:j} = M_j Z_{:j}` (idp) from mixed input rows.
pub fn propagate(input: &MixInput, mixed: &Array2<f64>, z: &Array2<f64>) -> Array2<f64> {
    let z = z.as_standard_layout();
    let z = z.view();
    let mixed = mixed.as_standard_layout();
    let mixed = mixed.view();
    let d = z.ncols();
    let mut out = Array2::<f64>::zeros(z.raw_dim());
    let shared = mixed.ncols() == 1;
    let o = out.as_slice_mut().expect("standard layout");
    for (&(u, v), &p) in input.positions.iter().zip(&input.row_of) {
        if shared {
            let m = mixed[[p, 0]];
            for j in 0..d {
                o[u * d + j] += m * z[[v, j]];
            }
            if u != v {
                for j in 0..d {
                    o[v * d + j] += m * z[[u, j]];
                }
            }
        } else {
            let m = row(&mixed, p);
            axpy(&mut o[u * d..(u + 1) * d], m, row(&z, v));
            if u != v {
                axpy(&mut o[v * d..(v + 1) * d], m, row(&z, u));
            }
        }
    }
    out
}

/// Gradients of [`propagate`]: returns `(d_mixed, d_z)`; positions sharing an
/// input row accumulate into it.
pub fn propagate_backward(
    input: &MixInput,
    mixed: &Array2<f64>,
    z: &Array2<f64>,
    d_out: &Array2<f64>,
) -> (Array2<f64>, Array2<f64>) {
    let z = z.as_standard_layout();
    let z = z.view();
    let mixed = mixed.as_standard_layout();
    let mixed = mixed.view();
    let d_out = d_out.as_standard_layout();
    let d_out = d_out.view();
    let d = z.ncols();
    let mut d_mixed = Array2::<f64>::zeros(mixed.raw_dim());
    let mut d_z = Array2::<f64>::zeros(z.raw_dim());
    let shared = mixed.ncols() == 1;
    let c = mixed.ncols();
    let dm_all = d_mixed.as_slice_mut().expect("standard layout");
    let dz = d_z.as_slice_mut().expect("standard layout");
    for (&(u, v), &p) in input.positions.iter().zip(&input.row_of) {
        let (gu, gv) = (row(&d_out, u), row(&d_out, v));
        let (zu, zv) = (row(&z, u), row(&z, v));
        if shared {
            let m = mixed[[p, 0]];
            let mut dm = 0.0;
            for j in 0..d {
                dm += gu[j] * zv[j];
                dz[v * d + j] += m * gu[j];
            }
            if u != v {
                for j in 0..d {
                    dm += gv[j] * zu[j];
                    dz[u * d + j] += m * gv[j];
                }
            }
            dm_all[p] += dm;
        } else {
            let m = row(&mixed, p);
            let dm = &mut dm_all[p * c..(p + 1) * c];
            for j in 0..d {
                dm[j] += gu[j] * zv[j];
                dz[v * d + j] += m[j] * gu[j];
            }
            if u != v {
                for j in 0..d {
                    dm[j] += gv[j] * zu[j];
                    dz[u * d + j] += m[j] * gv[j];
                }
            }
        }
    }
    (d_mixed, d_z)
}
