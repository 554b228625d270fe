//! Post-hoc verification of solve traces: every decrease floor, radius-ratio
//! floor, streak cap, iteration-count cap, and bookkeeping rule is evaluated
//! from recorded quantities, with per-check margins. Checks that need the
//! certified constants are skipped (reported not-applicable) for rows whose
//! iterate or trial ball leaves the certified region.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bounds::{self, BoxRegion, ProblemConstants};
use crate::error::{Error, Result};
use crate::fixed::{FixedConfig, FixedIterationRecord, StepCase};
use crate::linalg;
use crate::model::Branch;
use crate::problems::{sample_in_region, Objective};
use crate::solver::{IterationRecord, SolverConfig};
use crate::trace::{TraceData, TraceSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub outcome: Outcome,
    /// Smallest slack observed for the check's inequalities; negative on
    /// failure, infinite when nothing constrained it.
    pub margin: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.outcome != Outcome::Fail)
    }

    pub fn not_applicable(&self) -> Vec<&CheckResult> {
        self.checks
            .iter()
            .filter(|c| c.outcome == Outcome::NotApplicable)
            .collect()
    }

    pub fn failed(&self) -> Vec<&CheckResult> {
        self.checks
            .iter()
            .filter(|c| c.outcome == Outcome::Fail)
            .collect()
    }

    fn push(&mut self, name: &'static str, outcome: Outcome, margin: f64, detail: String) {
        self.checks.push(CheckResult {
            name,
            outcome,
            margin,
            detail,
        });
    }
}

impl std::fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            let tag = match c.outcome {
                Outcome::Pass => "PASS",
                Outcome::Fail => "FAIL",
                Outcome::NotApplicable => "N/A ",
            };
            writeln!(
                f,
                "{tag} {:<28} margin {:>12.3e}  {}",
                c.name, c.margin, c.detail
            )?;
        }
        Ok(())
    }
}

/// Tracks the worst margin of a row-wise inequality check and how many rows
/// were skipped for lack of certified constants.
struct RowCheck {
    margin: f64,
    violations: usize,
    checked: usize,
    skipped: usize,
    first_violation: Option<String>,
}

impl RowCheck {
    fn new() -> Self {
        Self {
            margin: f64::INFINITY,
            violations: 0,
            checked: 0,
            skipped: 0,
            first_violation: None,
        }
    }

    fn observe(&mut self, slack: f64, what: impl FnOnce() -> String) {
        self.checked += 1;
        self.margin = self.margin.min(slack);
        if slack < 0.0 {
            self.violations += 1;
            if self.first_violation.is_none() {
                self.first_violation = Some(what());
            }
        }
    }

    fn skip(&mut self) {
        self.skipped += 1;
    }

    fn report(self, rep: &mut VerifyReport, name: &'static str) {
        let outcome = if self.violations > 0 {
            Outcome::Fail
        } else if self.skipped > 0 {
            Outcome::NotApplicable
        } else {
            Outcome::Pass
        };
        let detail = if let Some(v) = self.first_violation {
            format!("{} violation(s); first: {v}", self.violations)
        } else if self.skipped > 0 {
            format!(
                "checked {} of {} rows; rest outside the certified region",
                self.checked,
                self.checked + self.skipped
            )
        } else {
            format!("{} rows checked", self.checked)
        };
        rep.push(name, outcome, self.margin, detail);
    }
}

fn is_whole_space(r: &BoxRegion) -> bool {
    r.lo.iter().all(|&v| v == f64::NEG_INFINITY) && r.hi.iter().all(|&v| v == f64::INFINITY)
}

/// Per-row validity of the certified constants.
struct RowScope {
    /// ||H_k|| <= kappa usable: the iterate is inside the region.
    at_iterate: Vec<bool>,
    /// kappa and L usable along the step segment: for accepted steps both
    /// endpoints are inside (the box is convex); for rejected steps the whole
    /// trial ball must fit, since the trial point itself is not recorded.
    on_segment: Vec<bool>,
}

fn row_scope(
    records: &[IterationRecord],
    summary: &TraceSummary,
    region: &BoxRegion,
) -> RowScope {
    let whole = is_whole_space(region);
    let n = records.len();
    let mut at_iterate = vec![false; n];
    let mut on_segment = vec![false; n];
    for (i, rec) in records.iter().enumerate() {
        let here = match &rec.x {
            Some(x) => region.contains(x),
            None => whole,
        };
        at_iterate[i] = here;
        on_segment[i] = if rec.success {
            let next_inside = if i + 1 < n {
                match &records[i + 1].x {
                    Some(x) => region.contains(x),
                    None => whole,
                }
            } else {
                region.contains(&summary.x_final)
            };
            here && next_inside
        } else {
            match &rec.x {
                Some(x) => region.contains_ball(x, rec.delta),
                None => whole,
            }
        };
    }
    RowScope {
        at_iterate,
        on_segment,
    }
}

fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

/// Verify an adaptive trace against its config and problem constants.
pub fn verify_adaptive(
    cfg: &SolverConfig,
    constants: &ProblemConstants,
    records: &[IterationRecord],
    summary: &TraceSummary,
) -> VerifyReport {
    let mut rep = VerifyReport { checks: Vec::new() };
    let scope = row_scope(records, summary, &constants.region);
    let all_segments_ok = scope.on_segment.iter().all(|&b| b);

    // Internal consistency of the rows themselves: radius formula, ratio
    // against the acceptance flag, gamma recurrence, objective chain.
    let mut consistency = RowCheck::new();
    for (i, rec) in records.iter().enumerate() {
        let err = |msg: String| msg;
        consistency.observe(rec.model_dec, || {
            err(format!("row {}: model_dec {} not positive", rec.k, rec.model_dec))
        });
        let neg = linalg::negative_part(rec.lambda_min).abs();
        let expected_delta = match rec.branch {
            Branch::Gradient => rec.gamma * rec.grad_norm,
            Branch::Eigen => rec.gamma * neg,
        };
        consistency.observe(
            1e-12 - (rec.delta - expected_delta).abs() / expected_delta.abs().max(1.0),
            || err(format!("row {}: delta {} != {}", rec.k, rec.delta, expected_delta)),
        );
        let should_accept = rec.rho >= cfg.eta;
        consistency.observe(
            if rec.success == should_accept { 0.0 } else { -1.0 },
            || err(format!("row {}: success flag disagrees with rho vs eta", rec.k)),
        );
        if i + 1 < records.len() {
            let next = &records[i + 1];
            consistency.observe(
                if next.k == rec.k + 1 { 0.0 } else { -1.0 },
                || err(format!("row {}: iteration index jumps to {}", rec.k, next.k)),
            );
            let expected_gamma = if rec.success {
                (rec.gamma * cfg.gamma_inc).clamp(cfg.gamma_lo, cfg.gamma_hi)
            } else {
                cfg.gamma_c * rec.gamma
            };
            consistency.observe(
                if rel_close(next.gamma, expected_gamma, 1e-12) {
                    0.0
                } else {
                    -1.0
                },
                || {
                    err(format!(
                        "row {}: gamma {} does not follow from {} (expected {})",
                        next.k, next.gamma, rec.gamma, expected_gamma
                    ))
                },
            );
        }
        // f at the next state must match the recorded ratio.
        let f_next = if i + 1 < records.len() {
            records[i + 1].f
        } else {
            summary.final_f
        };
        if rec.success {
            let reconstructed = rec.f - rec.rho * rec.model_dec;
            let tol = 1e-9 * (1.0 + rec.f.abs() + (rec.rho * rec.model_dec).abs());
            consistency.observe(tol - (f_next - reconstructed).abs(), || {
                err(format!(
                    "row {}: next f {} inconsistent with rho (expected {})",
                    rec.k, f_next, reconstructed
                ))
            });
        }
    }
    consistency.observe(
        if summary.iterations == records.len() {
            0.0
        } else {
            -1.0
        },
        || "summary iteration count disagrees with the record count".to_string(),
    );
    consistency.report(&mut rep, "record_consistency");

    // Objective bookkeeping: non-increasing over successes, bit-identical f
    // and x across rejections.
    let mut book = RowCheck::new();
    for (i, rec) in records.iter().enumerate() {
        let f_next = if i + 1 < records.len() {
            records[i + 1].f
        } else {
            summary.final_f
        };
        if rec.success {
            book.observe(rec.f - f_next, || {
                format!("row {}: f increased across a success: {} -> {}", rec.k, rec.f, f_next)
            });
        } else {
            book.observe(if f_next == rec.f { 0.0 } else { -1.0 }, || {
                format!("row {}: f changed across a rejection: {} -> {}", rec.k, rec.f, f_next)
            });
            let x_next = if i + 1 < records.len() {
                records[i + 1].x.as_deref()
            } else {
                Some(summary.x_final.as_slice())
            };
            if let (Some(a), Some(b)) = (rec.x.as_deref(), x_next) {
                book.observe(if a == b { 0.0 } else { -1.0 }, || {
                    format!("row {}: x changed across a rejection", rec.k)
                });
            }
        }
    }
    book.report(&mut rep, "objective_bookkeeping");

    // Guaranteed decrease of the trial step (needs kappa at the iterate).
    let mut dec = RowCheck::new();
    for (i, rec) in records.iter().enumerate() {
        if !scope.at_iterate[i] {
            dec.skip();
            continue;
        }
        let floor = match rec.branch {
            Branch::Gradient => {
                0.5 * (1.0 / (1.0 + constants.kappa)).min(rec.gamma)
                    * rec.grad_norm
                    * rec.grad_norm
            }
            Branch::Eigen => {
                let neg = linalg::negative_part(rec.lambda_min).abs();
                0.5 * rec.gamma * rec.gamma * neg.powi(3)
            }
        };
        dec.observe(rec.model_dec - floor + 1e-10, || {
            format!(
                "row {}: model decrease {} below floor {}",
                rec.k, rec.model_dec, floor
            )
        });
    }
    dec.report(&mut rep, "cauchy_decrease_floor");

    let gamma_min = bounds::gamma_min(cfg, constants);
    let kappa_min = bounds::kappa_min(cfg.eta, gamma_min);
    let streak_cap = bounds::max_consecutive_unsuccessful(cfg.gamma_c, gamma_min, cfg.gamma_hi)
        .max(1);

    // Floor on the radius ratio; meaningful only when the constants held
    // along every visited segment.
    if records.is_empty() {
        rep.push(
            "gamma_floor",
            Outcome::Pass,
            f64::INFINITY,
            "no iterations".into(),
        );
    } else if all_segments_ok {
        let observed = records.iter().map(|r| r.gamma).fold(f64::INFINITY, f64::min);
        let slack = observed - gamma_min * (1.0 - 1e-12);
        rep.push(
            "gamma_floor",
            if slack >= 0.0 { Outcome::Pass } else { Outcome::Fail },
            slack,
            format!("min gamma {observed} vs floor {gamma_min}"),
        );
    } else {
        rep.push(
            "gamma_floor",
            Outcome::NotApplicable,
            f64::NAN,
            "a trial left the certified region".into(),
        );
    }

    // Per-success objective decrease at the kappa_min rate.
    let mut sdec = RowCheck::new();
    for (i, rec) in records.iter().enumerate() {
        if !rec.success {
            continue;
        }
        if !all_segments_ok {
            sdec.skip();
            continue;
        }
        let f_next = if i + 1 < records.len() {
            records[i + 1].f
        } else {
            summary.final_f
        };
        let required = match rec.branch {
            Branch::Gradient => kappa_min * rec.grad_norm * rec.grad_norm,
            Branch::Eigen => {
                kappa_min * linalg::negative_part(rec.lambda_min).abs().powi(3)
            }
        };
        let slack = (rec.f - f_next) - required + 1e-10 * (1.0 + rec.f.abs());
        sdec.observe(slack, || {
            format!(
                "row {}: decrease {} below kappa_min rate {}",
                rec.k,
                rec.f - f_next,
                required
            )
        });
    }
    sdec.report(&mut rep, "success_decrease");

    // Cap on consecutive rejections.
    if all_segments_ok {
        let mut run = 0u64;
        let mut longest = 0u64;
        for rec in records {
            if rec.success {
                run = 0;
            } else {
                run += 1;
                longest = longest.max(run);
            }
        }
        let slack = streak_cap as f64 - longest as f64;
        rep.push(
            "unsuccessful_streak_cap",
            if slack >= 0.0 { Outcome::Pass } else { Outcome::Fail },
            slack,
            format!("longest run {longest} vs cap {streak_cap}"),
        );
    } else {
        rep.push(
            "unsuccessful_streak_cap",
            Outcome::NotApplicable,
            f64::NAN,
            "a trial left the certified region".into(),
        );
    }

    // Iteration-count caps for the strategy in use.
    let f0 = records.first().map(|r| r.f).unwrap_or(summary.final_f);
    if cfg.strategy == crate::strategy::UPDATE1 {
        let count = records.iter().filter(|r| r.grad_norm > cfg.eps_g).count() as u64;
        let cap = bounds::first_order_bound(f0, constants, cfg, cfg.eps_g);
        push_count_cap(&mut rep, "first_order_count_cap", all_segments_ok, count, cap);
    } else if cfg.strategy == crate::strategy::UPDATE2 {
        let count = records
            .iter()
            .filter(|r| {
                r.grad_norm > cfg.eps_g
                    || linalg::negative_part(r.lambda_min).abs() > cfg.eps_h
            })
            .count() as u64;
        let cap = bounds::second_order_bound(f0, constants, cfg, cfg.eps_g, cfg.eps_h);
        push_count_cap(&mut rep, "second_order_count_cap", all_segments_ok, count, cap);
    }

    // Model error vs the certified curvature constants, reconstructed from
    // the trace as model_dec * |1 - rho| = |f(x + s) - m(s)|.
    let mut merr = RowCheck::new();
    for (i, rec) in records.iter().enumerate() {
        if !scope.on_segment[i] {
            merr.skip();
            continue;
        }
        let err = rec.model_dec * (1.0 - rec.rho).abs();
        let cap = match rec.branch {
            Branch::Gradient => {
                constants.kappa * rec.gamma * rec.gamma * rec.grad_norm * rec.grad_norm
            }
            Branch::Eigen => {
                let neg = linalg::negative_part(rec.lambda_min).abs();
                constants.l / 6.0 * rec.gamma.powi(3) * neg.powi(3)
            }
        };
        merr.observe(cap - err + 1e-10 * (1.0 + rec.f.abs()), || {
            format!("row {}: model error {} exceeds bound {}", rec.k, err, cap)
        });
    }
    merr.report(&mut rep, "model_error_bound");

    rep
}

fn push_count_cap(
    rep: &mut VerifyReport,
    name: &'static str,
    applicable: bool,
    count: u64,
    cap: u64,
) {
    if !applicable {
        rep.push(
            name,
            Outcome::NotApplicable,
            f64::NAN,
            "a trial left the certified region".into(),
        );
        return;
    }
    let slack = cap as f64 - count as f64;
    rep.push(
        name,
        if count <= cap { Outcome::Pass } else { Outcome::Fail },
        slack,
        format!("observed {count} vs cap {cap}"),
    );
}

/// Verify a fixed-radius trace. The Taylor spot-checks need the oracle; they
/// are reported not-applicable when it is absent.
pub fn verify_fixed(
    cfg: &FixedConfig,
    constants: &ProblemConstants,
    records: &[FixedIterationRecord],
    summary: &TraceSummary,
    oracle: Option<&dyn Objective>,
    seed: u64,
) -> VerifyReport {
    let mut rep = VerifyReport { checks: Vec::new() };
    let sqrt_eps = cfg.eps.sqrt();
    let beta = cfg.beta;
    // The case analysis is valid whenever the run's beta dominates half the
    // certified Lipschitz constant.
    let beta_valid = beta >= 0.5 * constants.l;

    let mut consistency = RowCheck::new();
    for (i, rec) in records.iter().enumerate() {
        consistency.observe(rec.xi, || format!("row {}: negative multiplier", rec.k));
        let expected_case = if rec.xi <= sqrt_eps {
            StepCase::Case1
        } else {
            StepCase::Case2
        };
        consistency.observe(
            if rec.case == expected_case { 0.0 } else { -1.0 },
            || format!("row {}: case tag disagrees with xi vs sqrt(eps)", rec.k),
        );
        let f_next = if i + 1 < records.len() {
            records[i + 1].f
        } else {
            summary.final_f
        };
        let tol = 1e-12 * (1.0 + rec.f.abs());
        consistency.observe(tol - ((rec.f - rec.f_drop) - f_next).abs(), || {
            format!("row {}: f chain broken", rec.k)
        });
        if i + 1 < records.len() {
            consistency.observe(
                if records[i + 1].k == rec.k + 1 { 0.0 } else { -1.0 },
                || format!("row {}: iteration index jump", rec.k),
            );
        }
    }
    consistency.report(&mut rep, "fixed_record_consistency");

    let drop_floor = cfg.eps.powf(1.5) / (6.0 * beta * beta);
    let mut p1 = RowCheck::new();
    for rec in records.iter().filter(|r| r.case == StepCase::Case2) {
        if !beta_valid {
            p1.skip();
            continue;
        }
        let strong = rec.xi * cfg.eps / (2.0 * beta * beta)
            - cfg.eps.powf(1.5) / (3.0 * beta * beta);
        p1.observe(rec.f_drop - strong + 1e-12, || {
            format!("row {}: drop {} below {}", rec.k, rec.f_drop, strong)
        });
        p1.observe(rec.f_drop - drop_floor + 1e-12, || {
            format!("row {}: drop {} below floor {}", rec.k, rec.f_drop, drop_floor)
        });
    }
    p1.report(&mut rep, "case2_drop_floor");

    let g_target = 2.0 * cfg.eps / beta;
    let lambda_target = -3.0 * sqrt_eps;
    let mut p2 = RowCheck::new();
    for (i, rec) in records.iter().enumerate() {
        if rec.case != StepCase::Case1 {
            continue;
        }
        if !beta_valid {
            p2.skip();
            continue;
        }
        let (g_next, l_next) = if i + 1 < records.len() {
            (records[i + 1].grad_norm, records[i + 1].lambda_min)
        } else {
            (summary.final_grad_norm, summary.final_lambda_min)
        };
        p2.observe(g_target - g_next + 1e-8, || {
            format!("row {}: next gradient {} above {}", rec.k, g_next, g_target)
        });
        p2.observe(l_next - lambda_target + 1e-8, || {
            format!("row {}: next lambda {} below {}", rec.k, l_next, lambda_target)
        });
    }
    p2.report(&mut rep, "case1_next_state");

    let f0 = records.first().map(|r| r.f).unwrap_or(summary.final_f);
    if beta_valid {
        let case2 = records.iter().filter(|r| r.case == StepCase::Case2).count() as u64;
        let cap = (f0 - constants.f_inf) * 6.0 * beta * beta / cfg.eps.powf(1.5);
        let slack = cap - case2 as f64;
        rep.push(
            "case2_count_cap",
            if slack >= 0.0 { Outcome::Pass } else { Outcome::Fail },
            slack,
            format!("observed {case2} vs cap {cap:.1}"),
        );
    } else {
        rep.push(
            "case2_count_cap",
            Outcome::NotApplicable,
            f64::NAN,
            format!("beta {beta} below half the certified Lipschitz constant"),
        );
    }

    if summary.status == crate::solver::Status::SecondOrderStationary {
        let sg = g_target - summary.final_grad_norm;
        let sl = summary.final_lambda_min - lambda_target;
        let slack = sg.min(sl);
        rep.push(
            "termination_state",
            if slack >= -1e-12 { Outcome::Pass } else { Outcome::Fail },
            slack,
            format!(
                "final ||g|| {} vs {g_target}, final lambda {} vs {lambda_target}",
                summary.final_grad_norm, summary.final_lambda_min
            ),
        );
    }

    // Taylor spot-checks of the certified constants at random in-region pairs.
    match oracle {
        Some(p) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let half_l = 0.5 * constants.l;
            let mut taylor = RowCheck::new();
            let mut found = 0;
            let mut attempts = 0;
            while found < 100 && attempts < 10_000 {
                attempts += 1;
                let x = sample_in_region(&constants.region, &mut rng, 5.0);
                let s: Vec<f64> = (0..p.dim()).map(|_| rng.gen_range(-0.3..0.3)).collect();
                let xs = linalg::axpy(&x, 1.0, &s);
                if !constants.region.contains(&x) || !constants.region.contains(&xs) {
                    continue;
                }
                found += 1;
                let g = p.eval_grad(&x);
                let h = p.eval_hess(&x);
                let gs = p.eval_grad(&xs);
                let snorm = linalg::norm(&s);
                let lhs =
                    linalg::norm(&linalg::sub(&linalg::sub(&gs, &g), &h.matvec(&s)));
                let cap = half_l * snorm * snorm + 1e-9 * (1.0 + linalg::norm(&g));
                taylor.observe(cap - lhs, || {
                    format!("gradient Taylor bound broken at {x:?}")
                });
                let df = p.eval_f(&xs) - p.eval_f(&x);
                let quad = linalg::dot(&g, &s) + 0.5 * h.quad_form(&s);
                let cap = quad
                    + constants.l / 6.0 * snorm.powi(3)
                    + 1e-9 * (1.0 + p.eval_f(&x).abs());
                taylor.observe(cap - df, || {
                    format!("objective Taylor bound broken at {x:?}")
                });
            }
            taylor.report(&mut rep, "taylor_bounds");
        }
        None => rep.push(
            "taylor_bounds",
            Outcome::NotApplicable,
            f64::NAN,
            "oracle not available".into(),
        ),
    }

    rep
}

/// Verify a parsed trace of either kind.
pub fn verify_trace(
    data: &TraceData,
    oracle: Option<&dyn Objective>,
    seed: u64,
) -> Result<VerifyReport> {
    match data {
        TraceData::Adaptive(t) => {
            let cfg = t.header.config.as_ref().ok_or_else(|| {
                Error::MalformedTrace("adaptive trace header lacks a config".into())
            })?;
            Ok(verify_adaptive(cfg, &t.header.constants, &t.records, &t.summary))
        }
        TraceData::Fixed(t) => {
            let cfg = t.header.fixed_config.as_ref().ok_or_else(|| {
                Error::MalformedTrace("fixed trace header lacks a fixed_config".into())
            })?;
            Ok(verify_fixed(
                cfg,
                &t.header.constants,
                &t.records,
                &t.summary,
                oracle,
                seed,
            ))
        }
    }
}
