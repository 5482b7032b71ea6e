//! AdamW with decoupled weight decay, and learning-rate schedules.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// `peak * (1 - step / total_steps)`
    LinearDecay,
    Constant,
}

pub fn lr_at(peak: f64, schedule: Schedule, step: usize, total_steps: usize) -> f64 {
    match schedule {
        Schedule::Constant => peak,
        Schedule::LinearDecay => {
            let total = total_steps.max(1) as f64;
            let done = step.min(total_steps) as f64;
            peak * (1.0 - done / total)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdamW {
    config: AdamWConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl AdamW {
    pub fn new(config: AdamWConfig, parameter_count: usize) -> Self {
        Self {
            config,
            m: vec![0.0; parameter_count],
            v: vec![0.0; parameter_count],
            t: 0,
        }
    }

    /// One update: decay `params` by `lr * weight_decay`, then apply the
    /// bias-corrected Adam step.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        debug_assert_eq!(params.len(), self.m.len());
        debug_assert_eq!(grad.len(), self.m.len());
        let c = self.config;
        self.t += 1;
        let bc1 = 1.0 - libm::pow(c.beta1, f64::from(self.t));
        let bc2 = 1.0 - libm::pow(c.beta2, f64::from(self.t));
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = c.beta1 * self.m[i] + (1.0 - c.beta1) * g;
            self.v[i] = c.beta2 * self.v[i] + (1.0 - c.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] *= 1.0 - lr * c.weight_decay;
            params[i] -= lr * m_hat / (libm::sqrt(v_hat) + c.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_decay_endpoints() {
        assert_eq!(lr_at(1e-5, Schedule::LinearDecay, 0, 100), 1e-5);
        assert_eq!(lr_at(1e-5, Schedule::LinearDecay, 100, 100), 0.0);
        assert!((lr_at(1e-5, Schedule::LinearDecay, 50, 100) - 5e-6).abs() < 1e-20);
    }

    #[test]
    fn constant_schedule() {
        for step in [0, 3, 999] {
            assert_eq!(lr_at(5e-5, Schedule::Constant, step, 1000), 5e-5);
        }
    }

    #[test]
    fn first_step_moves_by_lr() {
        // With bias correction the first Adam step has magnitude ~lr.
        let mut opt = AdamW::new(
            AdamWConfig {
                weight_decay: 0.0,
                ..Default::default()
            },
            2,
        );
        let mut p = [1.0, -1.0];
        opt.step(&mut p, &[0.5, -3.0], 0.1);
        assert!((p[0] - 0.9).abs() < 1e-6);
        assert!((p[1] + 0.9).abs() < 1e-6);
    }

    #[test]
    fn weight_decay_is_decoupled() {
        let mut opt = AdamW::new(AdamWConfig::default(), 1);
        let mut p = [2.0];
        opt.step(&mut p, &[0.0], 0.1);
        assert!((p[0] - 2.0 * (1.0 - 0.1 * 0.01)).abs() < 1e-15);
    }
}
