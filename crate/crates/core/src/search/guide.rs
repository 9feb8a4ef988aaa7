use super::Domain;

/// Model outputs for one state.
#[derive(Clone, Debug, PartialEq)]
pub struct Guidance {
    /// Log action probabilities over `0..num_actions` for the state's own
    /// expansion. `None` means uniform over the generated children.
    pub log_probs: Option<Vec<f64>>,
    /// Heuristic estimate of the remaining path loss. Clipped at 0 on use.
    pub h: f64,
    /// Explicit heuristic factor, used by the generic PHS evaluator.
    pub eta: f64,
}

impl Guidance {
    pub fn uninformed() -> Self {
        Guidance {
            log_probs: None,
            h: 0.0,
            eta: 1.0,
        }
    }

    pub fn heuristic(h: f64) -> Self {
        Guidance {
            h,
            ..Self::uninformed()
        }
    }
}

/// Supplies policy and heuristic information for batches of states.
///
/// Implementations must be pure per state: the output for a state may not
/// depend on the other states of the batch.
pub trait Guide<D: Domain + ?Sized> {
    fn guide(&self, domain: &D, states: &[&D::State]) -> Vec<Guidance>;
}

/// Uniform policy, zero heuristic, unit heuristic factor.
#[derive(Clone, Copy, Debug, Default)]
pub struct Uninformed;

impl<D: Domain + ?Sized> Guide<D> for Uninformed {
    fn guide(&self, _domain: &D, states: &[&D::State]) -> Vec<Guidance> {
        vec![Guidance::uninformed(); states.len()]
    }
}

/// Uniform policy with a heuristic given by a closure.
pub struct HeuristicGuide<F>(pub F);

impl<D, F> Guide<D> for HeuristicGuide<F>
where
    D: Domain + ?Sized,
    F: Fn(&D::State) -> f64,
{
    fn guide(&self, _domain: &D, states: &[&D::State]) -> Vec<Guidance> {
        states
            .iter()
            .map(|s| Guidance::heuristic((self.0)(s)))
            .collect()
    }
}

impl<D: Domain + ?Sized, G: Guide<D> + ?Sized> Guide<D> for &G {
    fn guide(&self, domain: &D, states: &[&D::State]) -> Vec<Guidance> {
        (**self).guide(domain, states)
    }
}
