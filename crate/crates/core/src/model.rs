//! Feed-forward scorer `F -> H -> H -> 1` with tanh hidden layers and a
//! linear output, plus its analytic backward pass.
//!
//! Parameters live in one flat vector so the optimizer can treat them
//! uniformly. Layout, row-major per weight matrix:
//!
//! ```text
//! [ w1 (H x F) | b1 (H) | w2 (H x H) | b2 (H) | w3 (H) | b3 (1) ]
//! ```

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};

use crate::features::FeatureVector;
use crate::{Error, Result};

pub const DEFAULT_HIDDEN: usize = 16;

/// `(w1, b1, w2, b2, w3, b3)` borrowed from [`ScorerParams::parts`].
pub type LayerViews<'a> = (&'a [f64], &'a [f64], &'a [f64], &'a [f64], &'a [f64], f64);

#[derive(Debug, Clone, PartialEq)]
pub struct ScorerParams {
    input_dim: usize,
    hidden_dim: usize,
    flat: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    w3: usize,
    b3: usize,
    len: usize,
}

impl Layout {
    fn new(f: usize, h: usize) -> Self {
        let w1 = 0;
        let b1 = w1 + h * f;
        let w2 = b1 + h;
        let b2 = w2 + h * h;
        let w3 = b2 + h;
        let b3 = w3 + h;
        Self {
            w1,
            b1,
            w2,
            b2,
            w3,
            b3,
            len: b3 + 1,
        }
    }
}

/// Hidden activations kept from a forward pass.
struct Activations {
    h1: Vec<f64>,
    h2: Vec<f64>,
}

impl ScorerParams {
    pub fn parameter_count(input_dim: usize, hidden_dim: usize) -> usize {
        Layout::new(input_dim, hidden_dim).len
    }

    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dim,
            flat: vec![0.0; Self::parameter_count(input_dim, hidden_dim)],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn random<R: Rng + ?Sized>(input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(input_dim, hidden_dim);
        let l = p.layout();
        let mut fill = |range: core::ops::Range<usize>, fan_in: usize, fan_out: usize| {
            let a = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
            let dist = Uniform::new_inclusive(-a, a).expect("finite bound");
            for v in &mut p.flat[range] {
                *v = dist.sample(rng);
            }
        };
        fill(l.w1..l.b1, input_dim, hidden_dim);
        fill(l.w2..l.b2, hidden_dim, hidden_dim);
        fill(l.w3..l.b3, hidden_dim, 1);
        p
    }

    /// [`ScorerParams::random`] drawn from a ChaCha8 generator seeded with `seed`.
    pub fn seeded(input_dim: usize, hidden_dim: usize, seed: u64) -> Self {
        Self::random(input_dim, hidden_dim, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn from_flat(input_dim: usize, hidden_dim: usize, flat: Vec<f64>) -> Result<Self> {
        let expected = Self::parameter_count(input_dim, hidden_dim);
        if input_dim == 0 || hidden_dim == 0 || flat.len() != expected {
            return Err(Error::Shape(format!(
                "{} parameters for F={input_dim}, H={hidden_dim}; expected {expected}",
                flat.len()
            )));
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("scorer parameters".into()));
        }
        Ok(Self {
            input_dim,
            hidden_dim,
            flat,
        })
    }

    fn layout(&self) -> Layout {
        Layout::new(self.input_dim, self.hidden_dim)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.flat
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.flat
    }

    pub fn is_finite(&self) -> bool {
        self.flat.iter().all(|v| v.is_finite())
    }

    /// Named views `(w1, b1, w2, b2, w3, b3)` over the flat vector.
    pub fn parts(&self) -> LayerViews<'_> {
        let l = self.layout();
        let p = &self.flat;
        (
            &p[l.w1..l.b1],
            &p[l.b1..l.w2],
            &p[l.w2..l.b2],
            &p[l.b2..l.w3],
            &p[l.w3..l.b3],
            p[l.b3],
        )
    }

    pub fn set_w1(&mut self, row: usize, col: usize, value: f64) {
        let i = self.layout().w1 + row * self.input_dim + col;
        self.flat[i] = value;
    }

    pub fn set_w2(&mut self, row: usize, col: usize, value: f64) {
        let i = self.layout().w2 + row * self.hidden_dim + col;
        self.flat[i] = value;
    }

    pub fn set_w3(&mut self, col: usize, value: f64) {
        let i = self.layout().w3 + col;
        self.flat[i] = value;
    }

    pub fn set_b3(&mut self, value: f64) {
        let i = self.layout().b3;
        self.flat[i] = value;
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::Shape(format!(
                "feature vector of length {}, model expects {}",
                x.len(),
                self.input_dim
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature vector".into()));
        }
        Ok(())
    }

    fn run(&self, x: &[f64]) -> (f64, Activations) {
        let (w1, b1, w2, b2, w3, b3) = self.parts();
        let f = self.input_dim;
        let h = self.hidden_dim;
        let h1: Vec<f64> = (0..h)
            .map(|j| {
                let row = &w1[j * f..(j + 1) * f];
                libm::tanh(b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            })
            .collect();
        let h2: Vec<f64> = (0..h)
            .map(|j| {
                let row = &w2[j * h..(j + 1) * h];
                libm::tanh(b2[j] + row.iter().zip(&h1).map(|(w, v)| w * v).sum::<f64>())
            })
            .collect();
        let score = b3 + w3.iter().zip(&h2).map(|(w, v)| w * v).sum::<f64>();
        (score, Activations { h1, h2 })
    }

    pub fn forward(&self, features: &FeatureVector) -> Result<f64> {
        self.forward_slice(features.values())
    }

    pub fn forward_slice(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let (score, _) = self.run(x);
        if !score.is_finite() {
            return Err(Error::NonFinite("model output".into()));
        }
        Ok(score)
    }

    pub fn forward_batch(&self, batch: &[FeatureVector]) -> Result<Vec<f64>> {
        batch.iter().map(|x| self.forward(x)).collect()
    }

    /// Gradient of `sum_i upstream[i] * score(batch[i])` with respect to every parameter.
    pub fn backward(&self, batch: &[FeatureVector], upstream: &[f64]) -> Result<Vec<f64>> {
        let mut grad = vec![0.0; self.flat.len()];
        self.accumulate_gradient(batch, upstream, &mut grad)?;
        Ok(grad)
    }

    /// Adds the gradient of `sum_i upstream[i] * score(batch[i])` into `grad`.
    pub fn accumulate_gradient(&self, batch: &[FeatureVector], upstream: &[f64], grad: &mut [f64]) -> Result<()> {
        if batch.len() != upstream.len() {
            return Err(Error::Shape(format!(
                "{} feature vectors but {} upstream gradients",
                batch.len(),
                upstream.len()
            )));
        }
        if grad.len() != self.flat.len() {
            return Err(Error::Shape("gradient buffer does not match parameter count".into()));
        }
        let l = self.layout();
        let f = self.input_dim;
        let h = self.hidden_dim;
        let (_, _, w2, _, w3, _) = self.parts();
        let mut dz2 = vec![0.0; h];
        let mut dz1 = vec![0.0; h];
        for (x, &u) in batch.iter().zip(upstream) {
            let x = x.values();
            self.check_input(x)?;
            if u == 0.0 {
                continue;
            }
            let (_, act) = self.run(x);
            grad[l.b3] += u;
            for j in 0..h {
                grad[l.w3 + j] += u * act.h2[j];
                dz2[j] = u * w3[j] * (1.0 - act.h2[j] * act.h2[j]);
            }
            for j in 0..h {
                grad[l.b2 + j] += dz2[j];
                let row = l.w2 + j * h;
                for k in 0..h {
                    grad[row + k] += dz2[j] * act.h1[k];
                }
            }
            for k in 0..h {
                let back: f64 = (0..h).map(|j| w2[j * h + k] * dz2[j]).sum();
                dz1[k] = back * (1.0 - act.h1[k] * act.h1[k]);
            }
            for j in 0..h {
                grad[l.b1 + j] += dz1[j];
                let row = l.w1 + j * f;
                for (i, xi) in x.iter().enumerate() {
                    grad[row + i] += dz1[j] * xi;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::new(v.to_vec())
    }

    #[test]
    fn zero_params_score_zero() {
        let p = ScorerParams::zeros(8, 16);
        assert_eq!(p.forward(&fv(&[1.0, -2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0])).unwrap(), 0.0);
    }

    #[test]
    fn single_tanh_path_closed_form() {
        let mut p = ScorerParams::zeros(3, 4);
        p.set_w1(0, 0, 1.0);
        p.set_w2(0, 0, 1.0);
        p.set_w3(0, 1.0);
        for x in [-3.0, -0.4, 0.0, 0.7, 2.5] {
            let s = p.forward(&fv(&[x, 9.0, -9.0])).unwrap();
            assert!((s - libm::tanh(libm::tanh(x))).abs() < 1e-15);
        }
    }

    #[test]
    fn batch_is_per_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = ScorerParams::random(8, 16, &mut rng);
        let batch: Vec<_> = (0..5).map(|i| fv(&[i as f64 * 0.1; 8])).collect();
        let scores = p.forward_batch(&batch).unwrap();
        for (x, s) in batch.iter().zip(scores) {
            assert_eq!(p.forward(x).unwrap(), s);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let p = ScorerParams::zeros(2, 2);
        assert!(matches!(p.forward(&fv(&[1.0])), Err(Error::Shape(_))));
        assert!(matches!(p.forward(&fv(&[1.0, f64::NAN])), Err(Error::NonFinite(_))));
        assert!(matches!(p.backward(&[fv(&[1.0, 2.0])], &[]), Err(Error::Shape(_))));
    }

    #[test]
    fn zero_upstream_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = ScorerParams::random(8, 16, &mut rng);
        let g = p.backward(&[fv(&[0.3; 8]), fv(&[-0.2; 8])], &[0.0, 0.0]).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_is_linear_in_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = ScorerParams::random(8, 16, &mut rng);
        let a = fv(&[0.1, 0.5, -0.3, 1.0, 0.5, 2.0, 1.1, 0.25]);
        let b = fv(&[1.4, -0.2, 0.3, 0.0, 0.0, 3.0, 0.7, 1.0]);
        let both = p.backward(&[a.clone(), b.clone()], &[0.7, -1.3]).unwrap();
        let ga = p.backward(&[a], &[0.7]).unwrap();
        let gb = p.backward(&[b], &[-1.3]).unwrap();
        for i in 0..both.len() {
            assert!((both[i] - (ga[i] + gb[i])).abs() < 1e-14);
        }
    }

    #[test]
    fn from_flat_checks_shape() {
        assert!(ScorerParams::from_flat(8, 16, vec![0.0; 433]).is_ok());
        assert!(ScorerParams::from_flat(8, 16, vec![0.0; 432]).is_err());
        assert_eq!(ScorerParams::parameter_count(8, 16), 433);
    }
}
