//! Analytic gradients against central finite differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rerank_core::features::FeatureVector;
use rerank_core::loss::{bce_loss_grad, mse_loss_grad, ranknet_loss_grad};
use rerank_core::model::ScorerParams;

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;
const DRAWS: usize = 100;

fn central(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    (f(x + H) - f(x - H)) / (2.0 * H)
}

/// `|a - n| / max(|a|, |n|)`, or the absolute gap when both are below 1e-6.
fn rel_err(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < 1e-6 {
        (analytic - numeric).abs()
    } else {
        (analytic - numeric).abs() / scale
    }
}

fn vec_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = analytic
        .iter()
        .map(|a| a * a)
        .sum::<f64>()
        .sqrt()
        .max(numeric.iter().map(|n| n * n).sum::<f64>().sqrt());
    if scale < 1e-6 {
        diff
    } else {
        diff / scale
    }
}

#[test]
fn bce_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..DRAWS {
        let s = rng.random_range(-8.0..8.0);
        let positive = rng.random_bool(0.5);
        let (_, g) = bce_loss_grad(s, positive);
        let n = central(|x| bce_loss_grad(x, positive).0, s);
        assert!(rel_err(g, n) < TOL, "s={s} positive={positive} {g} vs {n}");
    }
}

#[test]
fn mse_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..DRAWS {
        let s = rng.random_range(-8.0..8.0);
        let t = rng.random_range(-8.0..8.0);
        let (_, g) = mse_loss_grad(s, t);
        let n = central(|x| mse_loss_grad(x, t).0, s);
        assert!(rel_err(g, n) < TOL, "{g} vs {n}");
    }
}

#[test]
fn ranknet_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..DRAWS {
        let len = rng.random_range(2..=20);
        let scores: Vec<f64> = (0..len).map(|_| rng.random_range(-5.0..5.0)).collect();
        let (_, g) = ranknet_loss_grad(&scores).unwrap();
        let numeric: Vec<f64> = (0..len)
            .map(|i| {
                central(
                    |x| {
                        let mut s = scores.clone();
                        s[i] = x;
                        ranknet_loss_grad(&s).unwrap().0
                    },
                    scores[i],
                )
            })
            .collect();
        assert!(vec_rel_err(&g, &numeric) < TOL);
    }
}

fn random_batch(rng: &mut ChaCha8Rng, f: usize) -> Vec<FeatureVector> {
    let n = rng.random_range(1..=5);
    (0..n)
        .map(|_| FeatureVector::new((0..f).map(|_| rng.random_range(-2.0..2.0)).collect()))
        .collect()
}

fn numeric_param_grad(params: &ScorerParams, objective: impl Fn(&ScorerParams) -> f64) -> Vec<f64> {
    (0..params.as_flat().len())
        .map(|p| {
            let eval = |delta: f64| {
                let mut q = params.clone();
                q.as_flat_mut()[p] += delta;
                objective(&q)
            };
            (eval(H) - eval(-H)) / (2.0 * H)
        })
        .collect()
}

#[test]
fn mlp_backward_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..DRAWS {
        let f = rng.random_range(1..=8);
        let h = rng.random_range(1..=16);
        let params = ScorerParams::random(f, h, &mut rng);
        let batch = random_batch(&mut rng, f);
        let upstream: Vec<f64> = batch.iter().map(|_| rng.random_range(-2.0..2.0)).collect();
        let analytic = params.backward(&batch, &upstream).unwrap();
        let numeric = numeric_param_grad(&params, |q| {
            q.forward_batch(&batch)
                .unwrap()
                .iter()
                .zip(&upstream)
                .map(|(s, u)| s * u)
                .sum()
        });
        assert!(vec_rel_err(&analytic, &numeric) < TOL);
    }
}

#[test]
fn ranknet_through_mlp_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..DRAWS {
        let params = ScorerParams::random(8, 16, &mut rng);
        let mut list = random_batch(&mut rng, 8);
        list.push(FeatureVector::new(
            (0..8).map(|_| rng.random_range(-2.0..2.0)).collect(),
        ));
        let scores = params.forward_batch(&list).unwrap();
        let (_, d) = ranknet_loss_grad(&scores).unwrap();
        let analytic = params.backward(&list, &d).unwrap();
        let numeric = numeric_param_grad(&params, |q| {
            ranknet_loss_grad(&q.forward_batch(&list).unwrap()).unwrap().0
        });
        assert!(vec_rel_err(&analytic, &numeric) < TOL);
    }
}
