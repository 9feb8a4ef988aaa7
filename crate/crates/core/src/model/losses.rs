//! Training losses and their gradients with respect to the network
//! parameters.

use super::{FeatureTensor, Network};
use crate::Result;

/// One state on a solution path.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainStep {
    pub features: FeatureTensor,
    /// Action taken from this state; `None` at the solution.
    pub action: Option<usize>,
    /// Actions generated at this state; the policy is renormalized over them.
    pub legal: Vec<bool>,
    /// Remaining distance to the solution.
    pub target: f64,
}

/// Trajectory of a solved problem and the search loss spent to solve it.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainSample {
    pub steps: Vec<TrainStep>,
    pub search_loss: f64,
}

/// Loss value and its gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub loss: f64,
    pub grad: Vec<f64>,
}

impl Gradient {
    fn zeros(n: usize) -> Self {
        Gradient {
            loss: 0.0,
            grad: vec![0.0; n],
        }
    }

    fn add(&mut self, other: &Gradient, scale: f64) {
        self.loss += scale * other.loss;
        for (a, b) in self.grad.iter_mut().zip(&other.grad) {
            *a += scale * b;
        }
    }
}

/// Policy loss used during training.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolicyLoss {
    /// Cross-entropy weighted by the search loss.
    Levin,
    CrossEntropy,
    None,
}

/// Negative masked log-likelihood of `action`, scaled by `weight`, and its
/// gradient with respect to the logits.
pub fn masked_nll_logit_grad(
    log_probs: &[f64],
    legal: &[bool],
    action: usize,
    weight: f64,
) -> (f64, Vec<f64>) {
    let m = log_probs
        .iter()
        .zip(legal)
        .filter(|(_, &ok)| ok)
        .map(|(&l, _)| l)
        .fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = log_probs
        .iter()
        .zip(legal)
        .filter(|(_, &ok)| ok)
        .map(|(&l, _)| (l - m).exp())
        .sum();
    let lse = m + z.ln();
    let mut grad = vec![0.0; log_probs.len()];
    for (i, (&l, &ok)) in log_probs.iter().zip(legal).enumerate() {
        if ok {
            grad[i] = weight * ((l - lse).exp() - if i == action { 1.0 } else { 0.0 });
        }
    }
    (weight * (lse - log_probs[action]), grad)
}

fn policy_gradient(net: &Network, sample: &TrainSample, weight: f64) -> Result<Gradient> {
    let mut g = Gradient::zeros(net.num_params());
    if weight == 0.0 {
        return Ok(g);
    }
    for step in &sample.steps {
        let Some(action) = step.action else { continue };
        let cache = net.forward_cached(&step.features)?;
        let (loss, dlogits) =
            masked_nll_logit_grad(&cache.out.log_probs, &step.legal, action, weight);
        g.loss += loss;
        net.backward(&step.features, &cache, &dlogits, 0.0, &mut g.grad);
    }
    Ok(g)
}

/// Gradient of L·Σ_t −log π(a_t | s_t), where L is the sample's search loss.
pub fn grad_levin_loss(net: &Network, sample: &TrainSample) -> Result<Gradient> {
    policy_gradient(net, sample, sample.search_loss)
}

/// Gradient of Σ_t −log π(a_t | s_t).
pub fn grad_cross_entropy_policy(net: &Network, sample: &TrainSample) -> Result<Gradient> {
    policy_gradient(net, sample, 1.0)
}

/// Gradient of the mean over the trajectory of (h(s_t) − target_t)².
pub fn grad_mse_heuristic(net: &Network, sample: &TrainSample) -> Result<Gradient> {
    let mut g = Gradient::zeros(net.num_params());
    let t = sample.steps.len() as f64;
    for step in &sample.steps {
        let cache = net.forward_cached(&step.features)?;
        let err = cache.out.h - step.target;
        g.loss += err * err / t;
        net.backward(&step.features, &cache, &[], 2.0 * err / t, &mut g.grad);
    }
    Ok(g)
}

/// Mean over samples of the selected policy loss plus, optionally, the
/// heuristic loss.
pub fn batch_gradient(
    net: &Network,
    samples: &[TrainSample],
    policy: PolicyLoss,
    heuristic: bool,
) -> Result<Gradient> {
    let mut total = Gradient::zeros(net.num_params());
    if samples.is_empty() {
        return Ok(total);
    }
    let scale = 1.0 / samples.len() as f64;
    for s in samples {
        if s.steps.is_empty() {
            continue;
        }
        match policy {
            PolicyLoss::Levin => total.add(&grad_levin_loss(net, s)?, scale),
            PolicyLoss::CrossEntropy => total.add(&grad_cross_entropy_policy(net, s)?, scale),
            PolicyLoss::None => {}
        }
        if heuristic {
            total.add(&grad_mse_heuristic(net, s)?, scale);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_two_actions_scaled_by_loss() {
        let lp = vec![0.5f64.ln(); 2];
        let (_, g) = masked_nll_logit_grad(&lp, &[true, true], 0, 10.0);
        assert!((g[0] + 5.0).abs() < 1e-12 && (g[1] - 5.0).abs() < 1e-12);
        let (_, g) = masked_nll_logit_grad(&lp, &[true, true], 0, 1.0);
        assert!((g[0] + 0.5).abs() < 1e-12 && (g[1] - 0.5).abs() < 1e-12);
        let (l, g) = masked_nll_logit_grad(&lp, &[true, true], 0, 0.0);
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn masked_actions_get_no_gradient() {
        let lp = vec![0.25f64.ln(); 4];
        let (loss, g) = masked_nll_logit_grad(&lp, &[true, false, true, false], 2, 1.0);
        assert!((loss - 2f64.ln()).abs() < 1e-12);
        assert_eq!(g[1], 0.0);
        assert_eq!(g[3], 0.0);
        assert!((g[0] - 0.5).abs() < 1e-12 && (g[2] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_policy_has_small_gradient() {
        let lp = super::super::network::log_softmax(&[30.0, 0.0]);
        let (_, g) = masked_nll_logit_grad(&lp, &[true, true], 0, 1.0);
        assert!(g.iter().all(|x| x.abs() < 1e-12));
    }
}
