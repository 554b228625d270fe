//! Fixed-radius method: every iteration solves the subproblem exactly at
//! radius sqrt(eps)/beta and accepts the step unconditionally. Iterations
//! split by the multiplier into case1 (xi <= sqrt(eps)) and case2
//! (xi > sqrt(eps)); each case2 iteration forces an objective drop of at
//! least eps^{3/2} / (6 beta^2), which caps the case2 count.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, leftmost_eigenpair};
use crate::problems::Objective;
use crate::solver::Status;
use crate::trs;

/// Parameters of the fixed-radius solver. `beta` is half the Hessian
/// Lipschitz constant valid on the problem's region and must be supplied;
/// it is not derived from the oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixedConfig {
    pub eps: f64,
    pub beta: f64,
    pub max_iters: usize,
    pub trs_tol: f64,
}

impl Default for FixedConfig {
    fn default() -> Self {
        Self {
            eps: 0.01,
            beta: 1.0,
            max_iters: 1_000_000,
            trs_tol: trs::DEFAULT_TOL,
        }
    }
}

impl FixedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eps <= 0.0 || !self.eps.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        if self.beta <= 0.0 || !self.beta.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if self.trs_tol <= 0.0 || self.trs_tol.is_nan() {
            return Err(Error::InvalidConfig("trs_tol must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be >= 1".into()));
        }
        Ok(())
    }

    /// The constant radius sqrt(eps)/beta.
    pub fn delta(&self) -> f64 {
        self.eps.sqrt() / self.beta
    }
}

/// Multiplier classification per iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepCase {
    Case1,
    Case2,
}

/// One row of a fixed-radius trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedIterationRecord {
    pub k: usize,
    pub f: f64,
    pub grad_norm: f64,
    pub lambda_min: f64,
    pub xi: f64,
    pub case: StepCase,
    pub f_drop: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedCounts {
    pub case1: u64,
    pub case2: u64,
}

impl FixedCounts {
    pub fn from_trace(trace: &[FixedIterationRecord]) -> Self {
        let mut c = FixedCounts { case1: 0, case2: 0 };
        for rec in trace {
            match rec.case {
                StepCase::Case1 => c.case1 += 1,
                StepCase::Case2 => c.case2 += 1,
            }
        }
        c
    }
}

#[derive(Debug, Clone)]
pub struct FixedSolveResult {
    pub x_final: Vec<f64>,
    pub status: Status,
    pub trace: Vec<FixedIterationRecord>,
    pub counts: FixedCounts,
    pub final_f: f64,
    pub final_grad_norm: f64,
    pub final_lambda_min: f64,
}

/// Run the fixed-radius method from `x0`.
///
/// Stops once ||g|| <= 2 eps / beta and lambda_min >= -3 sqrt(eps), the state
/// the case1 analysis delivers; the check runs before any step, so a start
/// already inside that set returns with an empty trace. Errors if an iterate
/// leaves the box on which the problem's constants are certified.
pub fn solve_fixed(
    problem: &dyn Objective,
    x0: &[f64],
    cfg: &FixedConfig,
) -> Result<FixedSolveResult> {
    cfg.validate()?;
    if x0.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            got: x0.len(),
        });
    }
    let region = &problem.constants().region;
    if !region.contains(x0) {
        return Err(Error::RegionExit { x: x0.to_vec() });
    }

    let delta = cfg.delta();
    let sqrt_eps = cfg.eps.sqrt();
    let g_target = 2.0 * cfg.eps / cfg.beta;
    let lambda_target = -3.0 * sqrt_eps;

    let mut x = x0.to_vec();
    let mut f = checked(problem.eval_f(&x), "objective value", 0, &x)?;
    let mut trace = Vec::new();
    let mut status = Status::MaxIters;

    let mut grad = problem.eval_grad(&x);
    let mut hess = problem.eval_hess(&x);
    let mut grad_norm = linalg::norm(&grad);
    let mut lambda_min = leftmost_eigenpair(&hess)?.value;

    for k in 0..cfg.max_iters {
        if grad_norm <= g_target && lambda_min >= lambda_target {
            status = Status::SecondOrderStationary;
            break;
        }

        let sol = trs::solve_exact(&grad, &hess, delta, cfg.trs_tol)?;
        let case = if sol.multiplier <= sqrt_eps {
            StepCase::Case1
        } else {
            StepCase::Case2
        };

        let x_next = linalg::axpy(&x, 1.0, &sol.step);
        if !region.contains(&x_next) {
            return Err(Error::RegionExit { x: x_next });
        }
        let f_next = checked(problem.eval_f(&x_next), "objective value", k, &x_next)?;

        trace.push(FixedIterationRecord {
            k,
            f,
            grad_norm,
            lambda_min,
            xi: sol.multiplier,
            case,
            f_drop: f - f_next,
        });

        x = x_next;
        f = f_next;
        grad = problem.eval_grad(&x);
        hess = problem.eval_hess(&x);
        if grad.iter().any(|v| !v.is_finite()) || !hess.is_finite() {
            return Err(Error::OracleFailure {
                what: "derivatives",
                iteration: k + 1,
                x,
            });
        }
        grad_norm = linalg::norm(&grad);
        lambda_min = leftmost_eigenpair(&hess)?.value;
    }

    let counts = FixedCounts::from_trace(&trace);
    Ok(FixedSolveResult {
        x_final: x,
        status,
        counts,
        final_f: f,
        final_grad_norm: grad_norm,
        final_lambda_min: lambda_min,
        trace,
    })
}

fn checked(v: f64, what: &'static str, iteration: usize, x: &[f64]) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::OracleFailure {
            what,
            iteration,
            x: x.to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::builtin;

    #[test]
    fn quadratic_marches_to_interior() {
        // f = ||x||^2/2 with beta supplied as 1 (the Hessian is constant, so
        // any positive beta is valid): delta = 0.1, boundary steps shrink
        // ||x|| by delta until the interior solve finishes the job.
        let p = builtin("quadratic", 2).unwrap();
        let cfg = FixedConfig {
            eps: 0.01,
            beta: 1.0,
            ..FixedConfig::default()
        };
        let res = solve_fixed(p.as_ref(), &[1.0, 0.0], &cfg).unwrap();
        assert_eq!(res.status, Status::SecondOrderStationary);
        assert!(res.final_grad_norm <= 2.0 * cfg.eps / cfg.beta);
        // about (1 - 0.02)/0.1 boundary steps plus the final interior one
        assert!(
            (8..=12).contains(&res.trace.len()),
            "iterations {}",
            res.trace.len()
        );
    }

    #[test]
    fn immediate_termination_when_already_stationary() {
        let p = builtin("quadratic", 2).unwrap();
        let cfg = FixedConfig {
            eps: 0.01,
            beta: 1.0,
            ..FixedConfig::default()
        };
        // ||g(x0)|| = 0.001 <= 0.02 and lambda = 1 >= -0.3
        let res = solve_fixed(p.as_ref(), &[0.001, 0.0], &cfg).unwrap();
        assert_eq!(res.status, Status::SecondOrderStationary);
        assert!(res.trace.is_empty());
    }

    #[test]
    fn saddle_first_iteration_is_case2_with_guaranteed_drop() {
        let p = builtin("saddle", 2).unwrap();
        let l = p.constants().l;
        let cfg = FixedConfig {
            eps: 0.04,
            beta: 0.5 * l,
            ..FixedConfig::default()
        };
        let res = solve_fixed(p.as_ref(), &[0.0, 0.0], &cfg).unwrap();
        let first = &res.trace[0];
        // lambda = -2 forces xi >= 2 > sqrt(eps) = 0.2
        assert_eq!(first.case, StepCase::Case2);
        assert!(first.xi >= 2.0 - 1e-9);
        let floor = cfg.eps.powf(1.5) / (6.0 * cfg.beta * cfg.beta);
        assert!(
            first.f_drop >= floor - 1e-12,
            "drop {} below floor {floor}",
            first.f_drop
        );
        assert_eq!(res.status, Status::SecondOrderStationary);
        assert!(res.final_grad_norm <= 2.0 * cfg.eps / cfg.beta);
        assert!(res.final_lambda_min >= -3.0 * cfg.eps.sqrt());
    }

    #[test]
    fn rejects_start_outside_region() {
        let p = builtin("saddle", 2).unwrap();
        let cfg = FixedConfig::default();
        assert!(matches!(
            solve_fixed(p.as_ref(), &[3.0, 0.0], &cfg),
            Err(Error::RegionExit { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let mut cfg = FixedConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.eps = 0.0;
        assert!(cfg.validate().is_err());
        cfg = FixedConfig {
            beta: -1.0,
            ..FixedConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
