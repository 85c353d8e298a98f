//! First-order optimizers over any [`Parameters`] implementor.

use crate::params::Parameters;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerConfig {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl OptimizerConfig {
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerConfig::Sgd => "sgd",
            OptimizerConfig::Adam { .. } => "adam",
        }
    }
}

/// Stateful optimizer; state is laid out like `flatten()`.
#[derive(Debug, Clone)]
pub struct Optimizer {
    config: OptimizerConfig,
    lr: f64,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Optimizer {
    pub fn new(config: OptimizerConfig, lr: f64, num_params: usize) -> Self {
        let state = match config {
            OptimizerConfig::Sgd => 0,
            OptimizerConfig::Adam { .. } => num_params,
        };
        Optimizer {
            config,
            lr,
            step: 0,
            m: vec![0.0; state],
            v: vec![0.0; state],
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// One descent step along `grads`, which has the same shape as `params`.
    pub fn step<P: Parameters>(&mut self, params: &mut P, grads: &P) {
        self.step += 1;
        let g = grads.flatten();
        let lr = self.lr;
        let mut offset = 0;
        match self.config {
            OptimizerConfig::Sgd => params.visit_blocks_mut("", &mut |_, b| {
                for (x, gi) in b.iter_mut().zip(&g[offset..]) {
                    *x -= lr * gi;
                }
                offset += b.len();
            }),
            OptimizerConfig::Adam { beta1, beta2, eps } => {
                let t = self.step as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                let (m, v) = (&mut self.m, &mut self.v);
                params.visit_blocks_mut("", &mut |_, b| {
                    for (k, x) in b.iter_mut().enumerate() {
                        let i = offset + k;
                        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                        let m_hat = m[i] / c1;
                        let v_hat = v[i] / c2;
                        *x -= lr * m_hat / (v_hat.sqrt() + eps);
                    }
                    offset += b.len();
                });
            }
        }
        debug_assert_eq!(offset, g.len());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    #[derive(Clone)]
    struct Quad(Matrix);

    impl Parameters for Quad {
        fn visit_blocks(&self, _: &str, f: &mut dyn FnMut(String, &[f64])) {
            f("x".into(), self.0.as_slice());
        }
        fn visit_blocks_mut(&mut self, _: &str, f: &mut dyn FnMut(String, &mut [f64])) {
            f("x".into(), self.0.as_mut_slice());
        }
    }

    fn grad(p: &Quad) -> Quad {
        // f(x) = ½‖x − 3‖²
        let mut g = p.clone();
        g.0.as_mut_slice().iter_mut().for_each(|v| *v -= 3.0);
        g
    }

    #[test]
    fn sgd_step() {
        let mut p = Quad(Matrix::from_vec(1, 2, vec![1.0, 5.0]));
        let mut opt = Optimizer::new(OptimizerConfig::Sgd, 0.5, 2);
        let g = grad(&p);
        opt.step(&mut p, &g);
        assert_eq!(p.0.as_slice(), &[2.0, 4.0]);
    }

    #[test]
    fn adam_first_step_is_lr_sized() {
        let mut p = Quad(Matrix::from_vec(1, 2, vec![1.0, 5.0]));
        let mut opt = Optimizer::new(OptimizerConfig::default(), 0.1, 2);
        let g = grad(&p);
        opt.step(&mut p, &g);
        assert!((p.0.as_slice()[0] - 1.1).abs() < 1e-6);
        assert!((p.0.as_slice()[1] - 4.9).abs() < 1e-6);
        for _ in 0..500 {
            let g = grad(&p);
            opt.step(&mut p, &g);
        }
        assert!(p.0.as_slice().iter().all(|v| (v - 3.0).abs() < 1e-2));
    }

    #[test]
    fn zero_lr_is_identity() {
        let mut p = Quad(Matrix::from_vec(1, 2, vec![1.0, 5.0]));
        let before = p.0.clone();
        let mut opt = Optimizer::new(OptimizerConfig::default(), 0.0, 2);
        let g = grad(&p);
        opt.step(&mut p, &g);
        assert_eq!(p.0, before);
    }
}
