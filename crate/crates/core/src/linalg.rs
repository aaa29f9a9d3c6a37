//! Dense symmetric matrices and the handful of matrix helpers shared by the
//! family builder, the spectral tools and the verification checks.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative symmetry tolerance accepted by [`DenseSymMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A square real matrix known to be symmetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Array2<f64>", into = "Array2<f64>")]
pub struct DenseSymMatrix(Array2<f64>);

impl DenseSymMatrix {
    /// Wraps `values` after checking it is square and symmetric to
    /// `1e-12 * max(1, |a_uv|)`.
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (rows, cols) = values.dim();
        if rows != cols {
            return Err(Error::DimensionMismatch {
                context: "symmetric matrix must be square",
                expected: rows,
                actual: cols,
            });
        }
        for u in 0..rows {
            for v in (u + 1)..rows {
                let (a, b) = (values[[u, v]], values[[v, u]]);
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::NonFinite(format!("matrix entry ({u}, {v})")));
                }
                if (a - b).abs() > SYMMETRY_TOL * a.abs().max(1.0) {
                    return Err(Error::InvalidGraph(format!(
                        "matrix not symmetric at ({u}, {v}): {a} vs {b}"
                    )));
                }
            }
        }
        Ok(Self(values))
    }

    /// Averages `values` with its transpose, then wraps it.
    pub fn symmetrized(values: Array2<f64>) -> Self {
        let sym = (&values + &values.t()) * 0.5;
        Self(sym)
    }

    pub fn identity(n: usize) -> Self {
        Self(Array2::eye(n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(Array2::zeros((n, n)))
    }

    pub fn from_diagonal(diag: &Array1<f64>) -> Self {
        Self(Array2::from_diag(diag))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.0[[u, v]]
    }

    pub fn matvec(&self, f: &Array1<f64>) -> Array1<f64> {
        self.0.dot(f)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }

    /// `P^T S P`, where `P` is the permutation matrix of `perm`.
    pub fn conjugate(&self, perm: &[usize]) -> Self {
        Self(conjugate_by_permutation(&self.0, perm))
    }
}

impl TryFrom<Array2<f64>> for DenseSymMatrix {
    type Error = Error;

    fn try_from(values: Array2<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<DenseSymMatrix> for Array2<f64> {
    fn from(m: DenseSymMatrix) -> Self {
        m.0
    }
}

pub fn max_abs(m: &Array2<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn frobenius(m: &Array2<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Frobenius norm of `AB - BA`.
pub fn commutator_norm(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    frobenius(&(a.dot(b) - b.dot(a)))
}

/// Permutation matrix with `P[u, perm[u]] = 1`, i.e. old index `u` moves to
/// new index `perm[u]`.
pub fn permutation_matrix(perm: &[usize]) -> Array2<f64> {
    let n = perm.len();
    let mut p = Array2::zeros((n, n));
    for (u, &pu) in perm.iter().enumerate() {
        p[[u, pu]] = 1.0;
    }
    p
}

/// `P^T M P` computed by index copy (no arithmetic).
pub fn conjugate_by_permutation(m: &Array2<f64>, perm: &[usize]) -> Array2<f64> {
    let n = perm.len();
    let mut out = Array2::zeros((n, n));
    for u in 0..n {
        for v in 0..n {
            out[[perm[u], perm[v]]] = m[[u, v]];
        }
    }
    out
}

/// Row permutation `P^T X`: row `u` of `x` becomes row `perm[u]`.
pub fn permute_rows(x: &Array2<f64>, perm: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros(x.dim());
    for (u, &pu) in perm.iter().enumerate() {
        out.row_mut(pu).assign(&x.row(u));
    }
    out
}

pub fn is_permutation(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || seen[p] {
            return false;
        }
        seen[p] = true;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_asymmetric() {
        assert!(DenseSymMatrix::new(array![[0.0, 1.0], [0.5, 0.0]]).is_err());
        assert!(DenseSymMatrix::new(array![[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]).is_err());
        assert!(DenseSymMatrix::new(array![[2.0, 1.0], [1.0, 0.0]]).is_ok());
    }

    #[test]
    fn conjugation_matches_matrix_product() {
        let m = array![[1.0, 2.0, 3.0], [2.0, 4.0, 5.0], [3.0, 5.0, 6.0]];
        let perm = [2, 0, 1];
        let p = permutation_matrix(&perm);
        let direct = p.t().dot(&m).dot(&p);
        assert_eq!(conjugate_by_permutation(&m, &perm), direct);
    }

    #[test]
    fn commutator_of_diagonals_vanishes() {
        let a = Array2::from_diag(&array![1.0, 2.0, 3.0]);
        let b = Array2::from_diag(&array![-1.0, 0.5, 7.0]);
        assert_eq!(commutator_norm(&a, &b), 0.0);
    }
}
