use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::config::{InputEncoding, MixerConfig, MixerDepth, ModelConfig};
use crate::error::{Error, Result};

/// Weight matrix `w` (fan_in × fan_out) with optional bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub w: Array2<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Array1<f64>>,
}

impl Dense {
    fn glorot<R: Rng>(fan_in: usize, fan_out: usize, bias: bool, rng: &mut R) -> Self {
        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
        Self::uniform(fan_in, fan_out, -a, a, bias, rng)
    }

    fn uniform<R: Rng>(fan_in: usize, fan_out: usize, lo: f64, hi: f64, bias: bool, rng: &mut R) -> Self {
        let dist = Uniform::new_inclusive(lo, hi).expect("valid uniform bounds");
        let w = Array2::from_shape_simple_fn((fan_in, fan_out), || dist.sample(rng));
        Self {
            w,
            b: bias.then(|| Array1::zeros(fan_out)),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            w: Array2::zeros(self.w.raw_dim()),
            b: self.b.as_ref().map(|b| Array1::zeros(b.len())),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.w.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.w.ncols()
    }

    /// `x w + b`.
    pub fn affine(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut y = x.dot(&self.w);
        if let Some(b) = &self.b {
            y += b;
        }
        y
    }

    fn slices(&self) -> Vec<&[f64]> {
        let mut out = vec![self.w.as_slice().expect("standard layout")];
        if let Some(b) = &self.b {
            out.push(b.as_slice().expect("standard layout"));
        }
        out
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = vec![self.w.as_slice_mut().expect("standard layout")];
        if let Some(b) = &mut self.b {
            out.push(b.as_slice_mut().expect("standard layout"));
        }
        out
    }
}

/// The family mixer: Lin/1L hold one bias-free `|G| × C` matrix (θ or Θ);
/// 2L holds `|G| × h` and `h × C` layers with biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixerParams {
    pub config: MixerConfig,
    pub layers: Vec<Dense>,
}

impl MixerParams {
    pub fn init<R: Rng>(config: MixerConfig, family_size: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let k = family_size;
        let c = config.out_width(hidden_dim);
        let layers = match config.depth {
            MixerDepth::Lin | MixerDepth::OneLayer => {
                vec![Dense::uniform(k, c, 0.0, 1.0 / k as f64, false, rng)]
            }
            MixerDepth::TwoLayer => {
                let h = config.hidden_width(k);
                vec![Dense::glorot(k, h, true, rng), Dense::glorot(h, c, true, rng)]
            }
        };
        Self { config, layers }
    }

    /// Lin/1L mixer with the given `|G| × C` coefficient matrix.
    pub fn from_theta(config: MixerConfig, theta: Array2<f64>) -> Result<Self> {
        if config.depth == MixerDepth::TwoLayer {
            return Err(Error::Config("a coefficient matrix defines a Lin or 1L mixer".into()));
        }
        Ok(Self {
            config,
            layers: vec![Dense { w: theta, b: None }],
        })
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, Dense::fan_out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdfLayerParams {
    /// `W_1` and bias.
    pub pre: Dense,
    pub mixer: MixerParams,
    /// `W_2` and bias.
    pub post: Dense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputParams {
    Embedding(Array2<f64>),
    Linear(Dense),
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdfModelParams {
    pub input: InputParams,
    pub layers: Vec<PdfLayerParams>,
    pub head: Dense,
}

impl PdfModelParams {
    pub fn init<R: Rng>(cfg: &ModelConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.hidden_dim;
        let input = match cfg.input {
            InputEncoding::Embedding { num_labels } => {
                InputParams::Embedding(Dense::glorot(num_labels, d, false, rng).w)
            }
            InputEncoding::Linear { in_dim } => InputParams::Linear(Dense::glorot(in_dim, d, true, rng)),
            InputEncoding::Identity => InputParams::Identity,
        };
        let layers = (0..cfg.num_layers)
            .map(|_| {
                let pre = Dense::glorot(d, d, true, rng);
                let mixer = MixerParams::init(cfg.mixer, cfg.family_size(), d, rng);
                let post = Dense::glorot(d, d, true, rng);
                PdfLayerParams { pre, mixer, post }
            })
            .collect();
        let head = Dense::glorot(d, cfg.task.output_dim(), true, rng);
        Ok(Self { input, layers, head })
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for s in z.slices_mut() {
            s.fill(0.0);
        }
        z
    }

    /// Every parameter tensor in a fixed order.
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        match &self.input {
            InputParams::Embedding(e) => out.push(e.as_slice().expect("standard layout")),
            InputParams::Linear(l) => out.extend(l.slices()),
            InputParams::Identity => {}
        }
        for layer in &self.layers {
            out.extend(layer.pre.slices());
            for m in &layer.mixer.layers {
                out.extend(m.slices());
            }
            out.extend(layer.post.slices());
        }
        out.extend(self.head.slices());
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        match &mut self.input {
            InputParams::Embedding(e) => out.push(e.as_slice_mut().expect("standard layout")),
            InputParams::Linear(l) => out.extend(l.slices_mut()),
            InputParams::Identity => {}
        }
        for layer in &mut self.layers {
            out.extend(layer.pre.slices_mut());
            for m in &mut layer.mixer.layers {
                out.extend(m.slices_mut());
            }
            out.extend(layer.post.slices_mut());
        }
        out.extend(self.head.slices_mut());
        out
    }

    pub fn n_params(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    /// Parameter `i` in the flattened order of [`Self::slices`].
    pub fn get_flat(&self, mut i: usize) -> f64 {
        for s in self.slices() {
            if i < s.len() {
                return s[i];
            }
            i -= s.len();
        }
        panic!("flat parameter index out of range");
    }

    pub fn set_flat(&mut self, mut i: usize, value: f64) {
        for s in self.slices_mut() {
            if i < s.len() {
                s[i] = value;
                return;
            }
            i -= s.len();
        }
        panic!("flat parameter index out of range");
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.slices().concat()
    }

    /// `self += scale * other`; shapes must agree.
    pub fn add_scaled(&mut self, other: &Self, scale: f64) {
        for (dst, src) in self.slices_mut().into_iter().zip(other.slices()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }

    /// Checks every tensor against the shapes `cfg` implies.
    pub fn check_shapes(&self, cfg: &ModelConfig) -> Result<()> {
        let d = cfg.hidden_dim;
        let mismatch = |context: &'static str, expected: usize, actual: usize| {
            if expected == actual {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    context,
                    expected,
                    actual,
                })
            }
        };
        match (&self.input, cfg.input) {
            (InputParams::Embedding(e), InputEncoding::Embedding { num_labels }) => {
                mismatch("embedding rows", num_labels, e.nrows())?;
                mismatch("embedding width", d, e.ncols())?;
            }
            (InputParams::Linear(l), InputEncoding::Linear { in_dim }) => {
                mismatch("input projection rows", in_dim, l.fan_in())?;
                mismatch("input projection width", d, l.fan_out())?;
            }
            (InputParams::Identity, InputEncoding::Identity) => {}
            _ => return Err(Error::Config("input parameters do not match the encoding".into())),
        }
        mismatch("layer count", cfg.num_layers, self.layers.len())?;
        for layer in &self.layers {
            for t in [&layer.pre, &layer.post] {
                mismatch("transform rows", d, t.fan_in())?;
                mismatch("transform width", d, t.fan_out())?;
            }
            if layer.mixer.config != cfg.mixer {
                return Err(Error::Config("mixer parameters do not match the config".into()));
            }
            mismatch("mixer input width", cfg.family_size(), layer.mixer.input_width())?;
            mismatch("mixer output width", cfg.mixer.out_width(d), layer.mixer.output_width())?;
        }
        mismatch("head rows", d, self.head.fan_in())?;
        mismatch("head width", cfg.task.output_dim(), self.head.fan_out())?;
        Ok(())
    }
}
