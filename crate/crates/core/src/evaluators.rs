//! Evaluation functions for the best-first algorithms.
//!
//! Policy-guided evaluators are computed and compared in log-space; the
//! `eval_*` wrappers return linear values. The search only needs a
//! consistent order, so [`EvaluatorKind::priority`] returns `log φ` for the
//! policy-guided kinds and the plain value for A*, WA* and GBFS.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Path quantities available when a node is evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalContext {
    /// Path loss, including the node's own loss.
    pub g: f64,
    pub depth: usize,
    /// Log probability of the path under the policy; 0 at the root.
    pub log_pi: f64,
    /// Heuristic value, already clipped at 0.
    pub h: f64,
    /// Explicit heuristic factor for the generic PHS evaluator.
    pub eta: f64,
    /// Running maximum of the evaluator over the parent's path, in the same
    /// space as [`EvaluatorKind::priority`]. `-inf` at the root.
    pub parent_eval_plus: f64,
}

impl EvalContext {
    pub fn new(g: f64, depth: usize, log_pi: f64, h: f64) -> Self {
        EvalContext {
            g,
            depth,
            log_pi,
            h: h.max(0.0),
            eta: 1.0,
            parent_eval_plus: f64::NEG_INFINITY,
        }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_parent_eval_plus(mut self, v: f64) -> Self {
        self.parent_eval_plus = v;
        self
    }

    pub fn pi(&self) -> f64 {
        self.log_pi.exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EvaluatorKind {
    AStar,
    WAStar(f64),
    Gbfs,
    LevinTs,
    /// `η_h = (g + h) / g`.
    PhsH,
    /// Aggressive heuristic factor `(1 + h/g) / π^(h/g)`.
    PhsStar,
    /// Heuristic factor taken verbatim from [`EvalContext::eta`].
    Phs,
}

impl EvaluatorKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EvaluatorKind::WAStar(w) if !(w >= 1.0) => {
                Err(Error::config(format!("weighted A* needs w >= 1, got {w}")))
            }
            _ => Ok(()),
        }
    }

    /// True for the evaluators of the form `η·g/π`, whose priority is `log φ`.
    pub fn is_policy_guided(&self) -> bool {
        matches!(
            self,
            EvaluatorKind::LevinTs
                | EvaluatorKind::PhsH
                | EvaluatorKind::PhsStar
                | EvaluatorKind::Phs
        )
    }

    pub fn uses_policy(&self) -> bool {
        self.is_policy_guided()
    }

    pub fn uses_heuristic(&self) -> bool {
        !matches!(self, EvaluatorKind::LevinTs | EvaluatorKind::Phs)
    }

    /// Value used to order the frontier.
    pub fn priority(&self, ctx: &EvalContext) -> f64 {
        match *self {
            EvaluatorKind::AStar => eval_astar(ctx),
            EvaluatorKind::WAStar(w) => ctx.g + w * ctx.h,
            EvaluatorKind::Gbfs => eval_gbfs(ctx),
            EvaluatorKind::LevinTs => log_levints(ctx),
            EvaluatorKind::PhsH => log_phs_h(ctx),
            EvaluatorKind::PhsStar => log_phs_star(ctx),
            EvaluatorKind::Phs => log_phs(ctx),
        }
    }

    /// Priority together with its running maximum along the path.
    pub fn evaluate(&self, ctx: &EvalContext) -> (f64, f64) {
        let raw = self.priority(ctx);
        (raw, monotone_plus(ctx.parent_eval_plus, raw))
    }
}

impl fmt::Display for EvaluatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvaluatorKind::AStar => write!(f, "astar"),
            EvaluatorKind::WAStar(w) => write!(f, "wastar:{w}"),
            EvaluatorKind::Gbfs => write!(f, "gbfs"),
            EvaluatorKind::LevinTs => write!(f, "levints"),
            EvaluatorKind::PhsH => write!(f, "phs-h"),
            EvaluatorKind::PhsStar => write!(f, "phs-star"),
            EvaluatorKind::Phs => write!(f, "phs"),
        }
    }
}

impl FromStr for EvaluatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kind = match s.trim() {
            "astar" => EvaluatorKind::AStar,
            "gbfs" => EvaluatorKind::Gbfs,
            "levints" => EvaluatorKind::LevinTs,
            "phs-h" => EvaluatorKind::PhsH,
            "phs-star" => EvaluatorKind::PhsStar,
            "phs" => EvaluatorKind::Phs,
            other => match other.strip_prefix("wastar:") {
                Some(w) => EvaluatorKind::WAStar(
                    w.parse()
                        .map_err(|_| Error::config(format!("bad weight in {other:?}")))?,
                ),
                None => return Err(Error::config(format!("unknown evaluator {other:?}"))),
            },
        };
        kind.validate()?;
        Ok(kind)
    }
}

pub fn eval_astar(ctx: &EvalContext) -> f64 {
    ctx.g + ctx.h
}

pub fn eval_wastar(ctx: &EvalContext, w: f64) -> Result<f64> {
    EvaluatorKind::WAStar(w).validate()?;
    Ok(ctx.g + w * ctx.h)
}

pub fn eval_gbfs(ctx: &EvalContext) -> f64 {
    ctx.h
}

/// `log(d0 / π)` with `d0 = depth + 1`.
pub fn log_levints(ctx: &EvalContext) -> f64 {
    if ctx.log_pi == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    ((ctx.depth + 1) as f64).ln() - ctx.log_pi
}

pub fn eval_levints(ctx: &EvalContext) -> f64 {
    log_levints(ctx).exp()
}

/// `log((g + h) / π)`.
pub fn log_phs_h(ctx: &EvalContext) -> f64 {
    if ctx.log_pi == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    (ctx.g + ctx.h).ln() - ctx.log_pi
}

pub fn eval_phs_h(ctx: &EvalContext) -> f64 {
    log_phs_h(ctx).exp()
}

/// `log((g + h) / π^(1 + h/g))`; falls back to `(g + h) / π` at `g = 0`.
pub fn log_phs_star(ctx: &EvalContext) -> f64 {
    if ctx.log_pi == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    let exponent = if ctx.g > 0.0 {
        1.0 + ctx.h / ctx.g
    } else {
        1.0
    };
    (ctx.g + ctx.h).ln() - exponent * ctx.log_pi
}

pub fn eval_phs_star(ctx: &EvalContext) -> f64 {
    log_phs_star(ctx).exp()
}

/// `log(η g / π)` with η read from the context.
pub fn log_phs(ctx: &EvalContext) -> f64 {
    if ctx.log_pi == f64::NEG_INFINITY || ctx.eta == f64::INFINITY {
        return f64::INFINITY;
    }
    ctx.eta.ln() + ctx.g.ln() - ctx.log_pi
}

pub fn eval_phs(ctx: &EvalContext) -> f64 {
    log_phs(ctx).exp()
}

/// Running maximum along a path; monotone non-decreasing by construction.
pub fn monotone_plus(parent_eval_plus: f64, raw: f64) -> f64 {
    parent_eval_plus.max(raw)
}

/// Heuristic factor η implied by `kind`, so that `φ = η g / π`.
///
/// At `g = 0` the heuristic kinds return `1 + h`.
pub fn eta_of(ctx: &EvalContext, kind: EvaluatorKind) -> f64 {
    match kind {
        EvaluatorKind::PhsH => {
            if ctx.g > 0.0 {
                (ctx.g + ctx.h) / ctx.g
            } else {
                1.0 + ctx.h
            }
        }
        EvaluatorKind::PhsStar => {
            if ctx.g > 0.0 {
                let r = ctx.h / ctx.g;
                (1.0 + r) * (-r * ctx.log_pi).exp()
            } else {
                1.0 + ctx.h
            }
        }
        EvaluatorKind::Phs => ctx.eta,
        _ => 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(g: f64, h: f64, pi: f64) -> EvalContext {
        EvalContext::new(g, 0, pi.ln(), h)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn astar_and_wastar() {
        let c = ctx(5.0, 3.0, 1.0);
        assert_eq!(eval_astar(&c), 8.0);
        assert_eq!(eval_astar(&ctx(5.0, 0.0, 1.0)), 5.0);
        assert_eq!(eval_wastar(&c, 1.5).unwrap(), 9.5);
        assert_eq!(eval_wastar(&c, 1.0).unwrap(), eval_astar(&c));
        assert!(matches!(eval_wastar(&c, 0.5), Err(Error::Config(_))));
        assert_eq!(eval_gbfs(&c), 3.0);
    }

    #[test]
    fn levints_values() {
        let root = EvalContext::new(1.0, 0, 0.0, 0.0);
        assert!(close(eval_levints(&root), 1.0));
        let c = EvalContext::new(4.0, 3, (1.0f64 / 8.0).ln(), 0.0);
        assert!(close(eval_levints(&c), 32.0));
        for d in 0..10 {
            let c = EvalContext::new(0.0, d, -(d as f64) * 2f64.ln(), 0.0);
            assert!(close(
                eval_levints(&c),
                (d as f64 + 1.0) * 2f64.powi(d as i32)
            ));
        }
    }

    #[test]
    fn phs_h_values() {
        assert!(close(eval_phs_h(&ctx(2.0, 2.0, 0.25)), 16.0));
        // h = 0 with unit losses reduces to LevinTS.
        let c = EvalContext::new(4.0, 3, (0.125f64).ln(), 0.0);
        assert!(close(eval_phs_h(&c), eval_levints(&c)));
        assert_eq!(
            eval_phs_h(&EvalContext::new(2.0, 1, f64::NEG_INFINITY, 1.0)),
            f64::INFINITY
        );
    }

    #[test]
    fn phs_star_values() {
        assert!(close(eval_phs_star(&ctx(2.0, 2.0, 0.25)), 64.0));
        assert!(close(eval_phs_star(&ctx(1.0, 3.0, 0.5)), 64.0));
        let c = ctx(3.0, 0.0, 0.3);
        assert!(close(eval_phs_star(&c), eval_phs_h(&c)));
        // g = 0 falls back to (g + h) / π.
        assert!(close(eval_phs_star(&ctx(0.0, 2.0, 0.5)), 4.0));
        let dead = EvalContext::new(0.0, 1, f64::NEG_INFINITY, 0.0);
        assert_eq!(eval_phs_star(&dead), f64::INFINITY);
    }

    #[test]
    fn eta_factors() {
        assert!(close(eta_of(&ctx(2.0, 2.0, 1.0), EvaluatorKind::PhsH), 2.0));
        assert!(close(eta_of(&ctx(2.0, 0.0, 0.3), EvaluatorKind::PhsH), 1.0));
        assert!(close(
            eta_of(&ctx(2.0, 2.0, 0.25), EvaluatorKind::PhsStar),
            8.0
        ));
        assert_eq!(eta_of(&ctx(2.0, 2.0, 0.25), EvaluatorKind::LevinTs), 1.0);
        assert!(close(
            eta_of(&ctx(0.0, 2.0, 1.0), EvaluatorKind::PhsStar),
            3.0
        ));
    }

    #[test]
    fn phi_equals_eta_g_over_pi() {
        for &(g, h, pi) in &[
            (2.0, 2.0, 0.25),
            (1.0, 3.0, 0.5),
            (7.5, 0.3, 0.01),
            (3.0, 9.0, 0.9),
        ] {
            let c = ctx(g, h, pi);
            for kind in [EvaluatorKind::PhsH, EvaluatorKind::PhsStar] {
                let phi = kind.priority(&c).exp();
                assert!(close(phi, eta_of(&c, kind) * g / pi), "{kind} {g} {h} {pi}");
            }
        }
    }

    #[test]
    fn monotone_plus_is_max() {
        assert_eq!(monotone_plus(10.0, 7.0), 10.0);
        assert_eq!(monotone_plus(f64::NEG_INFINITY, 1.0), 1.0);
        let mut acc = f64::NEG_INFINITY;
        for v in [3.0, 1.0, 4.0, 1.0, 5.0] {
            let next = monotone_plus(acc, v);
            assert!(next >= acc);
            acc = next;
        }
    }

    #[test]
    fn negative_heuristic_is_clipped() {
        assert_eq!(EvalContext::new(1.0, 0, 0.0, -3.0).h, 0.0);
    }

    #[test]
    fn parse_round_trip() {
        for s in [
            "astar",
            "wastar:1.5",
            "gbfs",
            "levints",
            "phs-h",
            "phs-star",
            "phs",
        ] {
            let k: EvaluatorKind = s.parse().unwrap();
            assert_eq!(k.to_string(), s);
        }
        assert!("wastar:0.5".parse::<EvaluatorKind>().is_err());
        assert!("wastar:x".parse::<EvaluatorKind>().is_err());
        assert!("dijkstra".parse::<EvaluatorKind>().is_err());
    }
}
