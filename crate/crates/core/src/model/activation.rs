use ndarray::Array2;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Gelu,
    Relu,
    Identity,
}

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Exact (erf-based) GELU.
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x * std::f64::consts::FRAC_1_SQRT_2))
}

pub fn gelu_grad(x: f64) -> f64 {
    let cdf = 0.5 * (1.0 + libm::erf(x * std::f64::consts::FRAC_1_SQRT_2));
    cdf + x * FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Gelu => gelu(x),
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    pub fn grad(self, x: f64) -> f64 {
        match self {
            Activation::Gelu => gelu_grad(x),
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn map(self, pre: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Identity => pre.clone(),
            _ => pre.mapv(|x| self.apply(x)),
        }
    }

    /// `(σ(pre), σ'(pre))` in one pass.
    pub fn map_with_grad(self, pre: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        match self {
            Activation::Identity => (pre.clone(), Array2::ones(pre.raw_dim())),
            Activation::Gelu => {
                let mut out = Array2::zeros(pre.raw_dim());
                let mut grad = Array2::zeros(pre.raw_dim());
                ndarray::Zip::from(&mut out).and(&mut grad).and(pre).for_each(|o, g, &x| {
                    let cdf = 0.5 * (1.0 + libm::erf(x * std::f64::consts::FRAC_1_SQRT_2));
                    *o = x * cdf;
                    *g = cdf + x * FRAC_1_SQRT_2PI * (-0.5 * x * x).exp();
                });
                (out, grad)
            }
            Activation::Relu => (self.map(pre), pre.mapv(|x| self.grad(x))),
        }
    }

    /// `upstream ⊙ σ'(pre)`.
    pub fn backprop(self, pre: &Array2<f64>, upstream: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Identity => upstream.clone(),
            _ => {
                let mut out = upstream.clone();
                out.zip_mut_with(pre, |g, &x| *g *= self.grad(x));
                out
            }
        }
    }
}
