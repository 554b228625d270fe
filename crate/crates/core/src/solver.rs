//! The adaptive trust-region loop: radius from the configured strategy,
//! Cauchy (or exact) trial step, acceptance ratio test, and the
//! shrink-on-failure / expand-on-success update of the radius ratio gamma.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, leftmost_eigenpair, SymMatrix};
use crate::model::{cauchy_eigen, cauchy_gradient, Branch, CauchyStep, QuadraticModel};
use crate::problems::Objective;
use crate::strategy;
use crate::trs;

/// How the trial step is produced once the radius is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    /// Pure Cauchy point (default): exercises the decrease floors tightly.
    Cauchy,
    /// Exact subproblem solution; never worse than the Cauchy point.
    Exact,
}

/// Why a solve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    FirstOrderStationary,
    SecondOrderStationary,
    MaxIters,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Status::FirstOrderStationary => write!(f, "first_order_stationary"),
            Status::SecondOrderStationary => write!(f, "second_order_stationary"),
            Status::MaxIters => write!(f, "max_iters"),
        }
    }
}

/// Parameters of the adaptive solver. Serialized form uses the same keys,
/// so a JSON config file can override any subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Shrink factor applied to gamma after an unsuccessful iteration.
    pub gamma_c: f64,
    /// Acceptance threshold for the actual-to-predicted ratio.
    pub eta: f64,
    /// Lower clamp for gamma chosen after successful iterations.
    pub gamma_lo: f64,
    /// Upper clamp for gamma.
    pub gamma_hi: f64,
    /// Initial gamma, in [gamma_lo, gamma_hi].
    pub gamma0: f64,
    /// Radius strategy name, resolved through the registry.
    pub strategy: String,
    pub step_kind: StepKind,
    /// First-order tolerance on ||g||.
    pub eps_g: f64,
    /// Second-order tolerance on the leftmost eigenvalue (update2 only).
    pub eps_h: f64,
    pub max_iters: usize,
    /// Expansion factor for gamma after a successful iteration.
    pub gamma_inc: f64,
    /// Tolerance handed to the exact subproblem solver.
    pub trs_tol: f64,
    /// Record the iterate in each trace row.
    pub record_x: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gamma_c: 0.5,
            eta: 0.25,
            gamma_lo: 1e-8,
            gamma_hi: 100.0,
            gamma0: 1.0,
            strategy: strategy::UPDATE1.to_string(),
            step_kind: StepKind::Cauchy,
            eps_g: 1e-6,
            eps_h: 1e-4,
            max_iters: 1_000_000,
            gamma_inc: 2.0,
            trs_tol: trs::DEFAULT_TOL,
            record_x: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidConfig(msg.to_string()))
            }
        };
        check(
            self.gamma_c > 0.0 && self.gamma_c < 1.0,
            "gamma_c must lie in (0, 1)",
        )?;
        check(self.eta > 0.0 && self.eta < 1.0, "eta must lie in (0, 1)")?;
        check(
            self.gamma_lo > 0.0 && self.gamma_lo <= self.gamma_hi,
            "need 0 < gamma_lo <= gamma_hi",
        )?;
        check(self.gamma_hi.is_finite(), "gamma_hi must be finite")?;
        check(
            self.gamma0 >= self.gamma_lo && self.gamma0 <= self.gamma_hi,
            "gamma0 must lie in [gamma_lo, gamma_hi]",
        )?;
        check(self.eps_g > 0.0, "eps_g must be positive")?;
        check(self.eps_h > 0.0, "eps_h must be positive")?;
        check(self.gamma_inc >= 1.0, "gamma_inc must be >= 1")?;
        check(self.trs_tol > 0.0, "trs_tol must be positive")?;
        check(self.max_iters >= 1, "max_iters must be >= 1")?;
        strategy::lookup(&self.strategy)?;
        Ok(())
    }
}

/// One row of the solve trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub f: f64,
    pub grad_norm: f64,
    pub lambda_min: f64,
    pub branch: Branch,
    pub delta: f64,
    pub gamma: f64,
    pub rho: f64,
    pub model_dec: f64,
    pub success: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
}

/// Tallies derived from a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub successful: u64,
    pub unsuccessful: u64,
    pub k_g: u64,
    pub k_h: u64,
    pub longest_unsuccessful_run: u64,
}

impl Counts {
    pub fn from_trace(trace: &[IterationRecord]) -> Self {
        let mut c = Counts {
            successful: 0,
            unsuccessful: 0,
            k_g: 0,
            k_h: 0,
            longest_unsuccessful_run: 0,
        };
        let mut run = 0u64;
        for rec in trace {
            match rec.branch {
                Branch::Gradient => c.k_g += 1,
                Branch::Eigen => c.k_h += 1,
            }
            if rec.success {
                c.successful += 1;
                run = 0;
            } else {
                c.unsuccessful += 1;
                run += 1;
                c.longest_unsuccessful_run = c.longest_unsuccessful_run.max(run);
            }
        }
        c
    }
}

/// Outcome of an adaptive solve.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x_final: Vec<f64>,
    pub status: Status,
    pub trace: Vec<IterationRecord>,
    pub counts: Counts,
    pub final_f: f64,
    pub final_grad_norm: f64,
    pub final_lambda_min: f64,
}

/// Actual-to-predicted reduction ratio.
pub fn rho(f_k: f64, f_trial: f64, model_dec: f64) -> Result<f64> {
    if model_dec <= 0.0 {
        return Err(Error::DegenerateModel { model_dec });
    }
    Ok((f_k - f_trial) / model_dec)
}

/// Acceptance test and next gamma: success (rho >= eta, inclusive) expands
/// gamma by `gamma_inc` clamped to [gamma_lo, gamma_hi]; failure applies
/// gamma_c unconditionally, with no lower clamp.
pub fn accept_and_update_gamma(rho: f64, cfg: &SolverConfig, gamma: f64) -> (bool, f64) {
    if rho >= cfg.eta {
        (
            true,
            (gamma * cfg.gamma_inc).clamp(cfg.gamma_lo, cfg.gamma_hi),
        )
    } else {
        (false, cfg.gamma_c * gamma)
    }
}

fn checked_f(problem: &dyn Objective, x: &[f64], k: usize) -> Result<f64> {
    let f = problem.eval_f(x);
    if f.is_finite() {
        Ok(f)
    } else {
        Err(Error::OracleFailure {
            what: "objective value",
            iteration: k,
            x: x.to_vec(),
        })
    }
}

fn checked_grad(problem: &dyn Objective, x: &[f64], k: usize) -> Result<Vec<f64>> {
    let g = problem.eval_grad(x);
    if g.len() == x.len() && g.iter().all(|v| v.is_finite()) {
        Ok(g)
    } else {
        Err(Error::OracleFailure {
            what: "gradient",
            iteration: k,
            x: x.to_vec(),
        })
    }
}

fn checked_hess(problem: &dyn Objective, x: &[f64], k: usize) -> Result<SymMatrix> {
    let h = problem.eval_hess(x);
    if h.dim() == x.len() && h.is_finite() {
        Ok(h)
    } else {
        Err(Error::OracleFailure {
            what: "Hessian",
            iteration: k,
            x: x.to_vec(),
        })
    }
}

/// Trial step for the chosen branch: the Cauchy point, optionally replaced by
/// the exact subproblem solution when that predicts at least as much decrease.
fn trial_step(
    m: &QuadraticModel,
    delta: f64,
    branch: Branch,
    pair: &crate::linalg::EigenPair,
    cfg: &SolverConfig,
) -> Result<CauchyStep> {
    let cauchy = match branch {
        Branch::Gradient => cauchy_gradient(m, delta)?,
        Branch::Eigen => cauchy_eigen(m, delta, pair)?,
    };
    if cfg.step_kind == StepKind::Cauchy {
        return Ok(cauchy);
    }
    let sol = trs::solve_exact(&m.grad, &m.hess, delta, cfg.trs_tol)?;
    let exact_dec = m.decrease(&sol.step)?;
    if exact_dec >= cauchy.model_decrease {
        Ok(CauchyStep {
            t: linalg::norm(&sol.step),
            step: sol.step,
            branch,
            model_decrease: exact_dec,
        })
    } else {
        Ok(cauchy)
    }
}

/// Run the adaptive trust-region method from `x0`.
///
/// Termination is checked at the top of each iteration, before the radius is
/// formed, so a zero radius is never seen by the step constructors.
pub fn solve(problem: &dyn Objective, x0: &[f64], cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    if x0.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            got: x0.len(),
        });
    }
    let strat = strategy::lookup(&cfg.strategy)?;

    let mut x = x0.to_vec();
    let mut gamma = cfg.gamma0;
    let mut f = checked_f(problem, &x, 0)?;
    let mut grad = checked_grad(problem, &x, 0)?;
    let mut hess = checked_hess(problem, &x, 0)?;
    let mut trace: Vec<IterationRecord> = Vec::new();
    let mut status = Status::MaxIters;

    let mut grad_norm = linalg::norm(&grad);
    let mut pair = leftmost_eigenpair(&hess)?;

    for k in 0..cfg.max_iters {
        if strat.is_stationary(grad_norm, pair.value, cfg.eps_g, cfg.eps_h) {
            status = strat.stationary_status();
            break;
        }

        let (delta, branch) = strat.radius(gamma, grad_norm, pair.value);
        let m = QuadraticModel::new(f, grad.clone(), hess.clone())?;
        let step = trial_step(&m, delta, branch, &pair, cfg)?;

        let x_trial = linalg::axpy(&x, 1.0, &step.step);
        let f_trial = checked_f(problem, &x_trial, k)?;
        let ratio = rho(f, f_trial, step.model_decrease)?;
        let (accepted, gamma_next) = accept_and_update_gamma(ratio, cfg, gamma);

        trace.push(IterationRecord {
            k,
            f,
            grad_norm,
            lambda_min: pair.value,
            branch,
            delta,
            gamma,
            rho: ratio,
            model_dec: step.model_decrease,
            success: accepted,
            x: cfg.record_x.then(|| x.clone()),
        });

        if accepted {
            x = x_trial;
            f = f_trial;
            grad = checked_grad(problem, &x, k + 1)?;
            hess = checked_hess(problem, &x, k + 1)?;
            grad_norm = linalg::norm(&grad);
            pair = leftmost_eigenpair(&hess)?;
        }
        gamma = gamma_next;
    }

    let counts = Counts::from_trace(&trace);
    Ok(SolveResult {
        x_final: x,
        status,
        counts,
        final_f: f,
        final_grad_norm: grad_norm,
        final_lambda_min: pair.value,
        trace,
    })
}
