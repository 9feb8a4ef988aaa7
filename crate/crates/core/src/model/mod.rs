//! Two-headed policy/heuristic network with manual backpropagation, the
//! training losses, Adam, and a binary checkpoint format.

mod adam;
pub mod checkpoint;
mod features;
mod losses;
mod network;

pub use adam::Adam;
pub use features::FeatureTensor;
pub use losses::{
    batch_gradient, grad_cross_entropy_policy, grad_levin_loss, grad_mse_heuristic,
    masked_nll_logit_grad, Gradient, PolicyLoss, TrainSample, TrainStep,
};
pub use network::{log_softmax, Architecture, Network, Output, Trunk};

use crate::domains::Encode;
use crate::search::{replay, Guidance, Guide};
use crate::{Error, Result};

/// Network plus optimizer state, tagged with the domain it was built for.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub domain: String,
    pub net: Network,
    pub adam: Adam,
}

impl Model {
    pub fn new(domain: impl Into<String>, arch: Architecture, seed: u64) -> Result<Model> {
        let net = Network::init(arch, seed)?;
        let adam = Adam::new(net.num_params());
        Ok(Model {
            domain: domain.into(),
            net,
            adam,
        })
    }

    /// Runs `steps` Adam updates on the batch gradient of `samples`.
    pub fn update(
        &mut self,
        samples: &[TrainSample],
        policy: PolicyLoss,
        heuristic: bool,
        steps: usize,
    ) -> Result<()> {
        if samples.iter().all(|s| s.steps.is_empty()) {
            return Ok(());
        }
        for _ in 0..steps {
            let g = batch_gradient(&self.net, samples, policy, heuristic)?;
            self.adam.update(&mut self.net.params, &g.grad)?;
        }
        Ok(())
    }
}

/// Builds a training sample from a solution path of `domain`.
pub fn sample_from_path<D: Encode>(
    domain: &D,
    path: &[usize],
    search_loss: f64,
) -> Result<TrainSample> {
    let states =
        replay(domain, path).ok_or_else(|| Error::config("solution path does not replay"))?;
    let n = domain.num_actions();
    let len = path.len();
    let steps = states
        .iter()
        .enumerate()
        .map(|(t, s)| {
            let mut legal = vec![false; n];
            if t < len {
                for c in domain.expand(s) {
                    legal[c.action] = true;
                }
            }
            TrainStep {
                features: domain.encode(s),
                action: path.get(t).copied(),
                legal,
                target: (len - t) as f64,
            }
        })
        .collect();
    Ok(TrainSample { steps, search_loss })
}

/// Guide backed by a network. The raw heuristic is returned; evaluators clip.
#[derive(Clone, Copy, Debug)]
pub struct ModelGuide<'a> {
    net: &'a Network,
}

impl<'a> ModelGuide<'a> {
    pub fn new<D: Encode>(net: &'a Network, domain: &D) -> Result<Self> {
        let (h, w, c) = domain.feature_shape();
        if net.architecture().input != (h, w, c) {
            let (eh, ew, ec) = net.architecture().input;
            return Err(Error::ShapeMismatch {
                expected: vec![eh, ew, ec],
                actual: vec![h, w, c],
            });
        }
        if net.architecture().actions != domain.num_actions() {
            return Err(Error::ShapeMismatch {
                expected: vec![net.architecture().actions],
                actual: vec![domain.num_actions()],
            });
        }
        Ok(ModelGuide { net })
    }
}

impl<D: Encode> Guide<D> for ModelGuide<'_> {
    fn guide(&self, domain: &D, states: &[&D::State]) -> Vec<Guidance> {
        states
            .iter()
            .map(|s| {
                let out = self
                    .net
                    .forward(&domain.encode(s))
                    .expect("shape checked at construction");
                Guidance {
                    log_probs: Some(out.log_probs),
                    h: out.h,
                    eta: 1.0,
                }
            })
            .collect()
    }
}
