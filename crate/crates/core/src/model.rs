//! Quadratic model of the objective at the current iterate and the two
//! Cauchy points: the exact minimizer of the model along the steepest-descent
//! ray and along the leftmost eigenvector, both inside the trust region.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, EigenPair, SymMatrix};

/// Which direction the radius (and the step) is tied to: the gradient norm or
/// the magnitude of the negative leftmost eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    #[serde(rename = "K_g")]
    Gradient,
    #[serde(rename = "K_H")]
    Eigen,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Branch::Gradient => write!(f, "K_g"),
            Branch::Eigen => write!(f, "K_H"),
        }
    }
}

/// Second-order model m(s) = f0 + g^T s + 1/2 s^T H s.
#[derive(Debug, Clone)]
pub struct QuadraticModel {
    pub f0: f64,
    pub grad: Vec<f64>,
    pub hess: SymMatrix,
}

impl QuadraticModel {
    pub fn new(f0: f64, grad: Vec<f64>, hess: SymMatrix) -> Result<Self> {
        if grad.len() != hess.dim() {
            return Err(Error::DimensionMismatch {
                expected: hess.dim(),
                got: grad.len(),
            });
        }
        if !f0.is_finite() || grad.iter().any(|v| !v.is_finite()) || !hess.is_finite() {
            return Err(Error::NonFiniteInput("quadratic model"));
        }
        Ok(Self { f0, grad, hess })
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    /// m(s).
    pub fn evaluate(&self, s: &[f64]) -> Result<f64> {
        if s.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: s.len(),
            });
        }
        Ok(self.f0 + linalg::dot(&self.grad, s) + 0.5 * self.hess.quad_form(s))
    }

    /// m(0) - m(s).
    pub fn decrease(&self, s: &[f64]) -> Result<f64> {
        Ok(self.f0 - self.evaluate(s)?)
    }
}

/// A Cauchy step: the model minimizer along one ray, clipped to the radius.
#[derive(Debug, Clone)]
pub struct CauchyStep {
    pub step: Vec<f64>,
    pub t: f64,
    pub branch: Branch,
    pub model_decrease: f64,
}

/// Minimize the model along -g subject to t ||g|| <= delta.
///
/// t = delta/||g|| when the curvature g^T H g is non-positive, otherwise
/// min{||g||^2 / g^T H g, delta/||g||}. The decrease t||g||^2 - t^2/2 g^T H g
/// is non-negative for that t.
pub fn cauchy_gradient(m: &QuadraticModel, delta: f64) -> Result<CauchyStep> {
    if delta <= 0.0 || !delta.is_finite() {
        return Err(Error::InvalidRadius { delta });
    }
    let gnorm = linalg::norm(&m.grad);
    if gnorm == 0.0 {
        return Err(Error::DegenerateDirection);
    }
    let curvature = m.hess.quad_form(&m.grad); // g^T H g
    let t_edge = delta / gnorm;
    let t = if curvature <= 0.0 {
        t_edge
    } else {
        (gnorm * gnorm / curvature).min(t_edge)
    };
    let step = linalg::scale(&m.grad, -t);
    let model_decrease = t * gnorm * gnorm - 0.5 * t * t * curvature;
    Ok(CauchyStep {
        step,
        t,
        branch: Branch::Gradient,
        model_decrease,
    })
}

/// Step of length delta along the leftmost eigenvector, re-signed so that
/// g^T u <= 0. Requires negative curvature (pair.value < 0); when g^T u = 0
/// the eigensolver's deterministic sign is kept.
pub fn cauchy_eigen(m: &QuadraticModel, delta: f64, pair: &EigenPair) -> Result<CauchyStep> {
    if pair.value >= 0.0 {
        return Err(Error::InvalidBranch { lambda: pair.value });
    }
    if delta < 0.0 || !delta.is_finite() {
        return Err(Error::InvalidRadius { delta });
    }
    let mut u = pair.vector.clone();
    let g_dot_u = linalg::dot(&m.grad, &u);
    if g_dot_u > 0.0 {
        for e in &mut u {
            *e = -*e;
        }
    }
    let g_dot_u = linalg::dot(&m.grad, &u); // <= 0 after re-signing
    let t = delta;
    let step = linalg::scale(&u, t);
    let model_decrease = -t * g_dot_u - 0.5 * t * t * pair.value;
    Ok(CauchyStep {
        step,
        t,
        branch: Branch::Eigen,
        model_decrease,
    })
}
