use crate::{Error, Result};

/// Adam with bias correction and L2 added to the gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub l2: f64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl Adam {
    pub fn new(num_params: usize) -> Self {
        Adam {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            l2: 1e-3,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }

    pub fn with_lr(mut self, lr: f64) -> Self {
        self.lr = lr;
        self
    }

    pub fn with_l2(mut self, l2: f64) -> Self {
        self.l2 = l2;
        self
    }

    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(Error::ShapeMismatch {
                expected: vec![self.m.len()],
                actual: vec![params.len(), grad.len()],
            });
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grad[i] + self.l2 * params[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_step_size() {
        let mut adam = Adam::new(1).with_l2(0.0);
        let mut p = vec![1.0];
        adam.update(&mut p, &[0.3]).unwrap();
        assert!((p[0] - (1.0 - 1e-4)).abs() < 1e-9);
        assert_eq!(adam.t, 1);
    }

    #[test]
    fn zero_gradient_keeps_params() {
        let mut adam = Adam::new(3).with_l2(0.0);
        let mut p = vec![1.0, -2.0, 0.5];
        adam.update(&mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn first_step_is_scale_invariant() {
        let (mut a, mut b) = (Adam::new(2).with_l2(0.0), Adam::new(2).with_l2(0.0));
        let (mut p, mut q) = (vec![0.0, 0.0], vec![0.0, 0.0]);
        a.update(&mut p, &[0.7, -0.2]).unwrap();
        b.update(&mut q, &[1.4, -0.4]).unwrap();
        for (x, y) in p.iter().zip(&q) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn shape_mismatch() {
        let mut adam = Adam::new(2);
        assert!(matches!(
            adam.update(&mut [0.0; 2], &[0.0]),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
