//! Tolerance sweeps: one solve per grid point, tabulating observed iteration
//! counts against the theoretical caps and fitting the log-log growth of
//! count versus 1/eps.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{Error, Result};
use crate::fixed::{solve_fixed, FixedConfig};
use crate::problems::Objective;
use crate::solver::{solve, SolverConfig};
use crate::strategy;
use crate::trace::FIXED_METHOD;

/// One sweep: a problem, a method, and a strictly decreasing tolerance grid.
/// For the adaptive strategies the grid drives eps_g; for the fixed method it
/// drives eps. With `eps_h` unset, update2 pairs each eps_g with
/// eps_h = eps_g^(2/3), the scaling at which both caps match.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub problem: String,
    pub dim: usize,
    /// "update1", "update2", or "fixed".
    pub strategy: String,
    pub config: SolverConfig,
    pub fixed: FixedConfig,
    pub eps_grid: Vec<f64>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_h: Option<f64>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.eps_grid.is_empty() {
            return Err(Error::InvalidConfig("eps grid is empty".into()));
        }
        if self.eps_grid.iter().any(|&e| e <= 0.0 || e.is_nan()) {
            return Err(Error::InvalidConfig(
                "eps grid entries must be positive".into(),
            ));
        }
        if self.eps_grid.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidConfig(
                "eps grid must be strictly decreasing".into(),
            ));
        }
        if self.strategy != FIXED_METHOD {
            strategy::lookup(&self.strategy)?;
        }
        Ok(())
    }
}

/// Per-eps tallies. For the fixed method `kg`/`kh` carry the case1/case2
/// counts and `bound` is the case2 cap; for the adaptive strategies they are
/// the branch counts and `bound` the iteration-count cap.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub iters: u64,
    pub successful: u64,
    pub kg: u64,
    pub kh: u64,
    pub bound: f64,
    /// Pairwise log-log slope against the previous grid point.
    pub slope_window: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of ln(count) against ln(1/eps) over rows with a
    /// positive count; None with fewer than two usable points.
    pub slope: Option<f64>,
}

/// Run the sweep, invoking `on_row` after each grid point so callers can
/// stream partial output; a failing run aborts with rows so far delivered.
pub fn run_sweep(
    problem: &dyn Objective,
    spec: &ExperimentSpec,
    mut on_row: impl FnMut(&SweepRow),
) -> Result<SweepSummary> {
    spec.validate()?;
    let x0 = spec
        .x0
        .clone()
        .unwrap_or_else(|| problem.suggested_x0());
    let constants = problem.constants();

    let mut rows: Vec<SweepRow> = Vec::with_capacity(spec.eps_grid.len());
    for &eps in &spec.eps_grid {
        let mut row = if spec.strategy == FIXED_METHOD {
            let cfg = FixedConfig {
                eps,
                ..spec.fixed.clone()
            };
            let res = solve_fixed(problem, &x0, &cfg)?;
            let f0 = res.trace.first().map(|r| r.f).unwrap_or(res.final_f);
            let bound =
                (f0 - constants.f_inf) * 6.0 * cfg.beta * cfg.beta / eps.powf(1.5);
            SweepRow {
                eps,
                iters: res.trace.len() as u64,
                successful: res.trace.len() as u64,
                kg: res.counts.case1,
                kh: res.counts.case2,
                bound,
                slope_window: None,
            }
        } else {
            let mut cfg = spec.config.clone();
            cfg.strategy = spec.strategy.clone();
            cfg.eps_g = eps;
            if spec.strategy == strategy::UPDATE2 {
                cfg.eps_h = spec.eps_h.unwrap_or_else(|| eps.powf(2.0 / 3.0));
            }
            let res = solve(problem, &x0, &cfg)?;
            let f0 = res.trace.first().map(|r| r.f).unwrap_or(res.final_f);
            let bound = if spec.strategy == strategy::UPDATE2 {
                bounds::second_order_bound(f0, constants, &cfg, cfg.eps_g, cfg.eps_h)
            } else {
                bounds::first_order_bound(f0, constants, &cfg, cfg.eps_g)
            };
            SweepRow {
                eps,
                iters: res.trace.len() as u64,
                successful: res.counts.successful,
                kg: res.counts.k_g,
                kh: res.counts.k_h,
                bound: bound as f64,
                slope_window: None,
            }
        };
        if let Some(prev) = rows.last() {
            if prev.iters > 0 && row.iters > 0 {
                let dx = (1.0 / row.eps).ln() - (1.0 / prev.eps).ln();
                let dy = (row.iters as f64).ln() - (prev.iters as f64).ln();
                row.slope_window = Some(dy / dx);
            }
        }
        on_row(&row);
        rows.push(row);
    }

    let slope = fit_slope(&rows);
    Ok(SweepSummary { rows, slope })
}

/// Least-squares slope of ln(count) vs ln(1/eps).
fn fit_slope(rows: &[SweepRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.iters > 0)
        .map(|r| ((1.0 / r.eps).ln(), (r.iters as f64).ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (den > 0.0).then(|| num / den)
}

/// CSV header for sweep output.
pub const CSV_HEADER: &str = "eps,iters,successful,kg,kh,bound,slope_window";

pub fn write_csv_header(w: &mut impl Write) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    Ok(())
}

pub fn write_csv_row(w: &mut impl Write, row: &SweepRow) -> Result<()> {
    let slope = row
        .slope_window
        .map(|s| format!("{s:.6}"))
        .unwrap_or_default();
    writeln!(
        w,
        "{},{},{},{},{},{},{}",
        row.eps, row.iters, row.successful, row.kg, row.kh, row.bound, slope
    )?;
    Ok(())
}
