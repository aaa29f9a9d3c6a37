//! Symmetric eigendecomposition, graph Fourier transform, smoothness
//! measures and polynomial filters.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{adjacency, degree_matrix, Graph};
use crate::linalg::{max_abs, DenseSymMatrix};

/// Jacobi stops once every off-diagonal entry is below this times `max(1, ‖S‖_max)`.
pub const JACOBI_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Orthonormal eigenbasis (columns of `u`) with ascending eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDecomposition {
    pub u: Array2<f64>,
    pub lambda: Array1<f64>,
}

impl SpectralDecomposition {
    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    /// `U Λ U^T`.
    pub fn reconstruct(&self) -> Array2<f64> {
        let scaled = &self.u * &self.lambda.view().insert_axis(Axis(0));
        scaled.dot(&self.u.t())
    }

    /// `U^T f`.
    pub fn gft(&self, f: &Array1<f64>) -> Result<Array1<f64>> {
        check_len("signal", self.n(), f.len())?;
        Ok(self.u.t().dot(f))
    }

    /// `U f̂`.
    pub fn inverse_gft(&self, f_hat: &Array1<f64>) -> Result<Array1<f64>> {
        check_len("spectral coefficients", self.n(), f_hat.len())?;
        Ok(self.u.dot(f_hat))
    }

    /// Index of the largest-magnitude eigenvalue (last one on ties).
    pub fn leading_index(&self) -> usize {
        let mut best = 0;
        for (i, l) in self.lambda.iter().enumerate() {
            if l.abs() >= self.lambda[best].abs() {
                best = i;
            }
        }
        best
    }
}

fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        });
    }
    Ok(())
}

fn off_diagonal_max(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut off = 0.0_f64;
    for p in 0..n {
        for q in (p + 1)..n {
            off = off.max(a[[p, q]].abs());
        }
    }
    off
}

/// Cyclic Jacobi eigendecomposition.
///
/// Sweeps visit `(p, q)` pairs in row-major order, so the result is a pure
/// function of the input. Eigenvalues come back ascending and every
/// eigenvector has its largest-magnitude entry nonnegative (lowest row on ties).
pub fn eigendecompose(s: &DenseSymMatrix) -> Result<SpectralDecomposition> {
    let n = s.n();
    let mut a = s.values().clone();
    let mut v = Array2::<f64>::eye(n);
    let tol = JACOBI_TOL * s.max_abs().max(1.0);

    let mut converged = off_diagonal_max(&a) <= tol;
    let mut sweeps = 0;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let tau = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[[k, p]], a[[k, q]]);
                    a[[k, p]] = c * akp - sn * akq;
                    a[[k, q]] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[[p, k]], a[[q, k]]);
                    a[[p, k]] = c * apk - sn * aqk;
                    a[[q, k]] = sn * apk + c * aqk;
                }
                a[[p, q]] = 0.0;
                a[[q, p]] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[[k, p]], v[[k, q]]);
                    v[[k, p]] = c * vkp - sn * vkq;
                    v[[k, q]] = sn * vkp + c * vkq;
                }
            }
        }
        sweeps += 1;
        converged = off_diagonal_max(&a) <= tol;
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps,
            residual: off_diagonal_max(&a),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[i, i]].total_cmp(&a[[j, j]]).then(i.cmp(&j)));
    let lambda: Array1<f64> = order.iter().map(|&i| a[[i, i]]).collect();
    let mut u = Array2::zeros((n, n));
    for (col, &src) in order.iter().enumerate() {
        let mut pivot = 0;
        for r in 0..n {
            if v[[r, src]].abs() > v[[pivot, src]].abs() {
                pivot = r;
            }
        }
        let sign = if v[[pivot, src]] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            u[[r, col]] = sign * v[[r, src]];
        }
    }
    Ok(SpectralDecomposition { u, lambda })
}

/// Laplacian quadratic form `½ Σ_ij W_ij (f_i - f_j)²`, summed over the edge
/// list without forming `L`.
pub fn smoothness_quadratic(g: &Graph, f: &Array1<f64>) -> Result<f64> {
    check_len("signal", g.n(), f.len())?;
    Ok(g.edges()
        .iter()
        .map(|e| e.weight * (f[e.u] - f[e.v]).powi(2))
        .sum())
}

/// `f^T L̃ f` for `L̃ = I - D̃^-1/2 Ã D̃^-1/2`, computed over the edge list as
/// `Σ w_uv (f_u/√d̃_u - f_v/√d̃_v)²`.
pub fn smoothness_normalized(g: &Graph, f: &Array1<f64>) -> Result<f64> {
    check_len("signal", g.n(), f.len())?;
    let d_tilde = degree_matrix(&adjacency(g), true);
    Ok(g.edges()
        .iter()
        .map(|e| e.weight * (f[e.u] / d_tilde[e.u].sqrt() - f[e.v] / d_tilde[e.v].sqrt()).powi(2))
        .sum())
}

/// `Σ f̂_i² λ_i` for the decomposition of a Laplacian.
pub fn smoothness_spectral(dec: &SpectralDecomposition, f: &Array1<f64>) -> Result<f64> {
    let f_hat = dec.gft(f)?;
    Ok(f_hat.iter().zip(&dec.lambda).map(|(c, l)| c * c * l).sum())
}

/// `g(x) = Σ_j coeffs[j] x^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PolyFilter {
    coeffs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for PolyFilter {
    type Error = Error;

    fn try_from(coeffs: Vec<f64>) -> Result<Self> {
        Self::new(coeffs)
    }
}

impl From<PolyFilter> for Vec<f64> {
    fn from(p: PolyFilter) -> Self {
        p.coeffs
    }
}

impl PolyFilter {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Config("polynomial filter needs a coefficient".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("filter coefficients".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    /// `g(x) = x^k`.
    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = 1.0;
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `g(M)` by Horner's rule on the matrix itself.
    pub fn eval_matrix(&self, m: &Array2<f64>) -> Array2<f64> {
        let n = m.nrows();
        let eye = Array2::<f64>::eye(n);
        self.coeffs
            .iter()
            .rev()
            .fold(Array2::zeros((n, n)), |acc, &c| acc.dot(m) + &eye * c)
    }
}

/// `U g(Λ) U^T f`.
pub fn poly_filter_apply(
    p: &PolyFilter,
    dec: &SpectralDecomposition,
    f: &Array1<f64>,
) -> Result<Array1<f64>> {
    let mut f_hat = dec.gft(f)?;
    for (c, &l) in f_hat.iter_mut().zip(&dec.lambda) {
        *c *= p.eval(l);
    }
    dec.inverse_gft(&f_hat)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterVerdict {
    Smooths,
    Amplifies,
    Indeterminate,
}

/// Strict-inequality classification of `|g(λ_i)|` against 1.
pub fn classify_filter(p: &PolyFilter, lambda: &Array1<f64>) -> FilterVerdict {
    let gains: Vec<f64> = lambda.iter().map(|&l| p.eval(l).abs()).collect();
    if gains.iter().all(|&g| g < 1.0) {
        FilterVerdict::Smooths
    } else if gains.iter().all(|&g| g > 1.0) {
        FilterVerdict::Amplifies
    } else {
        FilterVerdict::Indeterminate
    }
}

/// Closed-form cosine between `S f` and eigenvector `U_i`, where
/// `S = U g(Λ) U^T` for the decomposition `dec`:
/// `(U_i^T f) g(λ_i) / sqrt(Σ_j (U_j^T f)² g(λ_j)²)`.
pub fn cos_to_eigvec(
    s: &DenseSymMatrix,
    dec: &SpectralDecomposition,
    p: &PolyFilter,
    f: &Array1<f64>,
    i: usize,
) -> Result<f64> {
    check_len("filtered operator", dec.n(), s.n())?;
    if i >= dec.n() {
        return Err(Error::DimensionMismatch {
            context: "eigenvector index",
            expected: dec.n(),
            actual: i,
        });
    }
    let f_hat = dec.gft(f)?;
    let sf = s.matvec(f);
    let scale = f.iter().map(|x| x * x).sum::<f64>().sqrt() * s.max_abs().max(1.0);
    if sf.iter().map(|x| x * x).sum::<f64>().sqrt() <= 1e-12 * scale {
        return Err(Error::DegenerateSignal("S f vanishes".into()));
    }
    let gains: Vec<f64> = dec.lambda.iter().map(|&l| p.eval(l)).collect();
    let denom = f_hat
        .iter()
        .zip(&gains)
        .map(|(c, g)| (c * g).powi(2))
        .sum::<f64>()
        .sqrt();
    if denom == 0.0 {
        return Err(Error::DegenerateSignal("filtered spectrum vanishes".into()));
    }
    Ok(f_hat[i] * gains[i] / denom)
}

/// Cosine between `S f` and column `i` of `dec.u`, by direct products.
pub fn direct_cosine(
    s: &DenseSymMatrix,
    dec: &SpectralDecomposition,
    f: &Array1<f64>,
    i: usize,
) -> Result<f64> {
    check_len("signal", s.n(), f.len())?;
    let sf = s.matvec(f);
    let col = dec.u.column(i);
    let norm = sf.dot(&sf).sqrt() * col.dot(&col).sqrt();
    if norm == 0.0 {
        return Err(Error::DegenerateSignal("S f vanishes".into()));
    }
    Ok(sf.dot(&col) / norm)
}

/// Max-abs residuals `(‖U^T U - I‖, ‖U Λ U^T - S‖)`.
pub fn decomposition_residuals(s: &DenseSymMatrix, dec: &SpectralDecomposition) -> (f64, f64) {
    let n = dec.n();
    let ortho = max_abs(&(dec.u.t().dot(&dec.u) - Array2::<f64>::eye(n)));
    let recon = max_abs(&(dec.reconstruct() - s.values()));
    (ortho, recon)
}
