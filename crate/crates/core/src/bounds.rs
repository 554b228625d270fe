//! Closed-form constants behind the solver's guarantees: the floor on the
//! radius ratio, the per-success decrease constant, the cap on consecutive
//! rejections, and the resulting iteration-count caps that the verifier
//! compares against observed traces.

use serde::{Deserialize, Serialize};

use crate::solver::SolverConfig;

/// Axis-aligned box; infinite bounds mean the whole space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn whole_space(dim: usize) -> Self {
        Self {
            lo: vec![f64::NEG_INFINITY; dim],
            hi: vec![f64::INFINITY; dim],
        }
    }

    /// The cube |x_i| <= half_width.
    pub fn cube(dim: usize, half_width: f64) -> Self {
        Self {
            lo: vec![-half_width; dim],
            hi: vec![half_width; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&xi, (&lo, &hi))| xi >= lo && xi <= hi)
    }

    /// Conservative: the whole two-norm ball of radius `r` around `x` fits.
    pub fn contains_ball(&self, x: &[f64], r: f64) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&xi, (&lo, &hi))| xi - r >= lo && xi + r <= hi)
    }

    /// The box pulled in by `margin` on every finite side.
    pub fn shrunk(&self, margin: f64) -> BoxRegion {
        BoxRegion {
            lo: self.lo.iter().map(|&v| v + margin).collect(),
            hi: self.hi.iter().map(|&v| v - margin).collect(),
        }
    }
}

/// Certified smoothness constants for one problem, valid on `region`:
/// `l` bounds the Hessian's Lipschitz constant, `kappa` bounds its operator
/// norm, and `f_inf` lower-bounds the objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    pub l: f64,
    pub kappa: f64,
    pub f_inf: f64,
    pub region: BoxRegion,
}

/// Uniform floor on the radius ratio:
/// min{gamma_lo, gamma_c/(1+kappa), gamma_c(1-eta)/(2 kappa), 3 gamma_c(1-eta)/L}.
///
/// Terms with a zero constant in the denominator are dropped (treated as
/// +infinity), so pure quadratics (L = 0) exercise the remaining terms.
pub fn gamma_min(cfg: &SolverConfig, c: &ProblemConstants) -> f64 {
    let mut m = cfg.gamma_lo.min(cfg.gamma_c / (1.0 + c.kappa));
    if c.kappa > 0.0 {
        m = m.min(cfg.gamma_c * (1.0 - cfg.eta) / (2.0 * c.kappa));
    }
    if c.l > 0.0 {
        m = m.min(3.0 * cfg.gamma_c * (1.0 - cfg.eta) / c.l);
    }
    m
}

/// Per-success decrease constant: eta * gamma_min^2 / 2.
pub fn kappa_min(eta: f64, gamma_min: f64) -> f64 {
    0.5 * eta * gamma_min * gamma_min
}

/// Ceiling with a snap to the nearest integer when the value sits within
/// relative 1e-9 of one, so exact ratios like log_0.1(1e-8) = 8 do not round
/// up to 9 through floating-point noise.
fn ceil_snapped(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() <= 1e-9 * v.abs().max(1.0) {
        r
    } else {
        v.ceil()
    }
}

/// Floor with the same near-integer snap, so integer-valued caps like
/// 10/0.00125 * 100 = 800000 do not lose a unit to rounding noise.
fn floor_snapped(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() <= 1e-9 * v.abs().max(1.0) {
        r
    } else {
        v.floor()
    }
}

fn saturate_count(v: f64) -> u64 {
    if !v.is_finite() || v >= u64::MAX as f64 {
        u64::MAX
    } else if v <= 0.0 {
        0
    } else {
        v as u64
    }
}

/// Cap on consecutive unsuccessful iterations:
/// ceil(log_{gamma_c}(gamma_min / gamma_hi)).
///
/// Returns the raw ceiling, which is 0 when gamma_min = gamma_hi; callers
/// that need a strictly positive cap take max(1, .).
pub fn max_consecutive_unsuccessful(gamma_c: f64, gamma_min: f64, gamma_hi: f64) -> u64 {
    saturate_count(ceil_snapped((gamma_min / gamma_hi).ln() / gamma_c.ln()))
}

/// Cap on iterations with ||g|| above eps_g:
/// max(1, streak cap) * floor((f0 - f_inf) / kappa_min * eps_g^{-2}).
pub fn first_order_bound(
    f0: f64,
    c: &ProblemConstants,
    cfg: &SolverConfig,
    eps_g: f64,
) -> u64 {
    let gm = gamma_min(cfg, c);
    let km = kappa_min(cfg.eta, gm);
    let cap = max_consecutive_unsuccessful(cfg.gamma_c, gm, cfg.gamma_hi).max(1);
    let per = floor_snapped((f0 - c.f_inf) / km * eps_g.powi(-2));
    saturate_count(cap as f64 * per)
}

/// Cap on iterations with ||g|| above eps_g or |lambda_-| above eps_h:
/// max(1, streak cap) * floor((f0 - f_inf) / kappa_min * max{eps_g^{-2}, eps_h^{-3}}).
pub fn second_order_bound(
    f0: f64,
    c: &ProblemConstants,
    cfg: &SolverConfig,
    eps_g: f64,
    eps_h: f64,
) -> u64 {
    let gm = gamma_min(cfg, c);
    let km = kappa_min(cfg.eta, gm);
    let cap = max_consecutive_unsuccessful(cfg.gamma_c, gm, cfg.gamma_hi).max(1);
    let per = floor_snapped((f0 - c.f_inf) / km * eps_g.powi(-2).max(eps_h.powi(-3)));
    saturate_count(cap as f64 * per)
}
