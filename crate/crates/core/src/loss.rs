//! Training objectives with their derivatives with respect to the model score.
//!
//! All three are written in log-sum-exp stable form so that scores up to
//! |s| = 50 (and well beyond) never overflow.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + libm::log1p(libm::exp(-x))
    } else {
        libm::log1p(libm::exp(x))
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Binary cross-entropy on a logit. Returns `(loss, dloss/dscore)`.
pub fn bce_loss_grad(score: f64, positive: bool) -> (f64, f64) {
    if positive {
        (softplus(-score), sigmoid(score) - 1.0)
    } else {
        (softplus(score), sigmoid(score))
    }
}

/// Squared error against a teacher score. Returns `(loss, dloss/dscore)`.
pub fn mse_loss_grad(score: f64, teacher_score: f64) -> (f64, f64) {
    let diff = score - teacher_score;
    (diff * diff, 2.0 * diff)
}

/// Pairwise RankNet loss over a list given in target order (position `i`
/// should outrank every later position):
///
/// ```text
/// loss = sum_{i<j} ln(1 + exp(s_j - s_i))
/// ```
///
/// Returns the loss and its gradient with respect to every score.
pub fn ranknet_loss_grad(scores: &[f64]) -> Result<(f64, Vec<f64>)> {
    if scores.len() < 2 {
        return Err(Error::Invalid(alloc::format!(
            "RankNet needs at least 2 scores, got {}",
            scores.len()
        )));
    }
    let mut loss = 0.0;
    let mut grad = vec![0.0; scores.len()];
    for i in 0..scores.len() {
        for j in (i + 1)..scores.len() {
            let diff = scores[j] - scores[i];
            loss += softplus(diff);
            let g = sigmoid(diff);
            grad[j] += g;
            grad[i] -= g;
        }
    }
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::LN_2;

    #[test]
    fn bce_symmetry_point() {
        assert_eq!(bce_loss_grad(0.0, true), (LN_2, -0.5));
        assert_eq!(bce_loss_grad(0.0, false), (LN_2, 0.5));
    }

    #[test]
    fn bce_known_value() {
        let (l, g) = bce_loss_grad(2.0, true);
        assert!((l - libm::log(1.0 + libm::exp(-2.0))).abs() < 1e-15);
        assert!((g - (sigmoid(2.0) - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn bce_extreme_scores_are_finite() {
        for s in [-50.0, -30.0, 30.0, 50.0, 700.0, -700.0] {
            for y in [true, false] {
                let (l, g) = bce_loss_grad(s, y);
                assert!(l.is_finite() && g.is_finite(), "{s} {y}");
            }
        }
        assert!((bce_loss_grad(50.0, false).0 - 50.0).abs() < 1e-12);
    }

    #[test]
    fn mse_basics() {
        assert_eq!(mse_loss_grad(0.4, 0.4), (0.0, 0.0));
        assert_eq!(mse_loss_grad(1.0, 0.0), (1.0, 2.0));
    }

    #[test]
    fn ranknet_all_ties() {
        let (l, g) = ranknet_loss_grad(&[0.3, 0.3, 0.3]).unwrap();
        assert!((l - 3.0 * LN_2).abs() < 1e-12);
        assert!(g.iter().sum::<f64>().abs() < 1e-15);
    }

    #[test]
    fn ranknet_saturated_order() {
        let (l, _) = ranknet_loss_grad(&[10.0, 0.0, -10.0]).unwrap();
        let expected = 2.0 * libm::log1p(libm::exp(-10.0)) + libm::log1p(libm::exp(-20.0));
        assert!((l - expected).abs() < 1e-15);
        assert!(l < 1e-4);
    }

    #[test]
    fn ranknet_short_list() {
        assert!(ranknet_loss_grad(&[1.0]).is_err());
        assert!(ranknet_loss_grad(&[]).is_err());
    }
}
