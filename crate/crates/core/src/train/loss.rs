use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Mae,
    CrossEntropy,
}

/// Loss of one prediction and its gradient with respect to the prediction.
///
/// MAE uses subgradient 0 at `pred == target`.
pub fn loss_and_grad(pred: &Array1<f64>, target: f64, kind: LossKind) -> Result<(f64, Array1<f64>)> {
    match kind {
        LossKind::Mae => {
            let diff = pred[0] - target;
            let mut grad = Array1::zeros(pred.len());
            grad[0] = if diff > 0.0 {
                1.0
            } else if diff < 0.0 {
                -1.0
            } else {
                0.0
            };
            Ok((diff.abs(), grad))
        }
        LossKind::CrossEntropy => {
            let class = target as usize;
            if target < 0.0 || target.fract() != 0.0 || class >= pred.len() {
                return Err(Error::ClassOutOfRange {
                    class,
                    num_classes: pred.len(),
                });
            }
            let max = pred.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exp: Array1<f64> = pred.mapv(|z| (z - max).exp());
            let total = exp.sum();
            let mut grad = exp / total;
            let loss = -(grad[class].ln());
            grad[class] -= 1.0;
            Ok((loss, grad))
        }
    }
}

/// Mean loss over a batch.
pub fn loss(preds: &[Array1<f64>], targets: &[f64], kind: LossKind) -> Result<f64> {
    if preds.len() != targets.len() || preds.is_empty() {
        return Err(Error::DimensionMismatch {
            context: "predictions vs targets",
            expected: targets.len(),
            actual: preds.len(),
        });
    }
    let mut total = 0.0;
    for (p, &t) in preds.iter().zip(targets) {
        total += loss_and_grad(p, t, kind)?.0;
    }
    Ok(total / preds.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn loss_examples() {
        assert_eq!(loss(&[array![0.5]], &[0.5], LossKind::Mae).unwrap(), 0.0);
        let ce = loss(&[array![0.0, 0.0]], &[0.0], LossKind::CrossEntropy).unwrap();
        assert!((ce - std::f64::consts::LN_2).abs() < 1e-15);
        let batch = loss(&[array![1.0], array![0.0]], &[0.0, 1.0], LossKind::Mae).unwrap();
        assert_eq!(batch, 1.0);
    }

    #[test]
    fn mae_kink_has_zero_subgradient() {
        let (_, g) = loss_and_grad(&array![2.0], 2.0, LossKind::Mae).unwrap();
        assert_eq!(g[0], 0.0);
    }

    #[test]
    fn cross_entropy_rejects_bad_class() {
        assert!(matches!(
            loss(&[array![0.0, 0.0]], &[2.0], LossKind::CrossEntropy),
            Err(Error::ClassOutOfRange { class: 2, num_classes: 2 })
        ));
    }

    #[test]
    fn cross_entropy_gradient_is_softmax_minus_onehot() {
        let (_, g) = loss_and_grad(&array![1.0, 2.0, 0.5], 1.0, LossKind::CrossEntropy).unwrap();
        assert!(g.sum().abs() < 1e-15);
        assert!(g[1] < 0.0 && g[0] > 0.0 && g[2] > 0.0);
    }
}
