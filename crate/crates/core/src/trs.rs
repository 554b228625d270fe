//! Exact trust-region subproblem solver.
//!
//! Minimizes g^T s + 1/2 s^T H s over ||s|| <= delta and returns a
//! primal-dual pair (s, xi) satisfying, up to the requested tolerance,
//!
//!   g + (H + xi I) s = 0,      H + xi I  PSD,
//!   xi >= 0,  ||s|| <= delta,  xi (delta - ||s||) = 0.
//!
//! The full spectrum of H is computed once; the multiplier is then a root of
//! the secular equation ||s(xi)|| = delta with s(xi) = -(H + xi I)^{-1} g,
//! found by bisection with Newton polishing. When the gradient has no
//! component in the leftmost eigenspace the secular equation has no root
//! above the pole; the solution then takes xi = -lambda_min plus an explicit
//! leftmost-eigenvector component sized to reach the boundary.

use crate::error::{Error, KktResiduals, Result};
use crate::linalg::{self, eigendecompose, Eigen, SymMatrix};

/// Default relative tolerance for the optimality residuals.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Iteration cap for the secular root finder (bisection + Newton combined).
const ROOT_ITER_CAP: usize = 200;

/// Primal-dual solution of the subproblem.
#[derive(Debug, Clone)]
pub struct TrsSolution {
    pub step: Vec<f64>,
    pub multiplier: f64,
    pub kkt_residuals: KktResiduals,
    /// True when the solution lies on the trust-region boundary.
    pub boundary: bool,
}

/// ||s(xi)||^2 = sum_i w_i^2 / (lambda_i + xi)^2, skipping exactly-zero
/// coefficients so a zero-over-zero never produces NaN.
fn secular_norm_sq(values: &[f64], w: &[f64], xi: f64) -> f64 {
    let mut acc = 0.0;
    for (i, &wi) in w.iter().enumerate() {
        if wi != 0.0 {
            let q = wi / (values[i] + xi);
            acc += q * q;
        }
    }
    acc
}

/// d(||s||^2)/dxi = -2 sum_i w_i^2 / (lambda_i + xi)^3.
fn secular_norm_sq_deriv(values: &[f64], w: &[f64], xi: f64) -> f64 {
    let mut acc = 0.0;
    for (i, &wi) in w.iter().enumerate() {
        if wi != 0.0 {
            let d = values[i] + xi;
            acc += wi * wi / (d * d * d);
        }
    }
    -2.0 * acc
}

/// Reassemble s(xi) in the original basis, zeroing pole coefficients.
fn secular_step(eig: &Eigen, w: &[f64], xi: f64) -> Vec<f64> {
    let coeffs: Vec<f64> = w
        .iter()
        .zip(&eig.values)
        .map(|(&wi, &li)| {
            let d = li + xi;
            if wi == 0.0 || d == 0.0 {
                0.0
            } else {
                -wi / d
            }
        })
        .collect();
    eig.from_eigenbasis(&coeffs)
}

/// Root of ||s(xi)|| = delta on [lo, hi]. Returns the multiplier and whether
/// the boundary target was met; on a pinched bracket (near-hard case) the
/// deficit side is returned so the caller can close the gap with an
/// eigenvector component.
fn solve_secular(
    values: &[f64],
    w: &[f64],
    mut lo: f64,
    mut hi: f64,
    delta: f64,
    tol: f64,
) -> (f64, bool) {
    let norm_at = |xi: f64| secular_norm_sq(values, w, xi).sqrt();
    // Meeting this keeps the complementarity residual xi*(delta - ||s||)
    // within tol even for large multipliers.
    let target_at = |xi: f64| 0.5 * (tol * delta).min(tol / xi.max(1.0));

    let mut iters = 0usize;
    while iters < ROOT_ITER_CAP {
        iters += 1;
        let mid = 0.5 * (lo + hi);
        if norm_at(mid) > delta {
            lo = mid;
        } else {
            hi = mid;
        }
        if (norm_at(hi) - delta).abs() <= target_at(hi) {
            return (hi, true);
        }
        // Newton polish on 1/delta - 1/||s(xi)|| once the bracket is tight.
        if hi - lo <= 1e-2 * (1.0 + hi.abs()) {
            let mut x = hi;
            for _ in 0..30 {
                iters += 1;
                let n = secular_norm_sq(values, w, x).sqrt();
                if (n - delta).abs() <= target_at(x) {
                    return (x, true);
                }
                let dn = secular_norm_sq_deriv(values, w, x) / (2.0 * n);
                let hval = 1.0 / delta - 1.0 / n;
                let hder = dn / (n * n);
                let next = x - hval / hder;
                if !next.is_finite() || next <= lo || next >= hi {
                    break;
                }
                if norm_at(next) > delta {
                    lo = next;
                } else {
                    hi = next;
                }
                x = next;
            }
            if (norm_at(hi) - delta).abs() <= target_at(hi) {
                return (hi, true);
            }
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            return (hi, false);
        }
    }
    (hi, false)
}

pub fn solve_exact(g: &[f64], h: &SymMatrix, delta: f64, tol: f64) -> Result<TrsSolution> {
    if delta <= 0.0 || !delta.is_finite() {
        return Err(Error::InvalidRadius { delta });
    }
    if tol <= 0.0 || tol.is_nan() {
        return Err(Error::InvalidConfig(format!(
            "subproblem tolerance must be positive, got {tol}"
        )));
    }
    if g.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: g.len(),
        });
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput("subproblem gradient"));
    }

    let eig = eigendecompose(h)?;
    let w = eig.to_eigenbasis(g);
    let lambda_min = eig.values[0];
    let scale = eig.values.iter().fold(1.0f64, |a, &v| a.max(v.abs()));
    let gnorm = linalg::norm(g);
    let zero_tol = tol * scale; // eigenvalues below this count as zero

    // Interior candidate: minimal-norm pseudo-solve with xi = 0, valid when
    // H is PSD, g has no component on the (near-)null space, and the solve
    // fits inside the radius.
    if lambda_min >= -zero_tol {
        let mut coeffs = vec![0.0; w.len()];
        let mut null_resid_sq = 0.0;
        for i in 0..w.len() {
            if eig.values[i] > zero_tol {
                coeffs[i] = -w[i] / eig.values[i];
            } else {
                null_resid_sq += w[i] * w[i];
            }
        }
        let snorm = linalg::norm(&coeffs);
        if null_resid_sq.sqrt() <= 0.5 * tol * gnorm.max(1.0) && snorm <= delta {
            let step = eig.from_eigenbasis(&coeffs);
            return finish(g, h, lambda_min, step, 0.0, delta, tol, false);
        }
    }

    // Boundary solution. The multiplier lives in [lo, hi]: at the pole the
    // secular norm is >= delta (else the hard case applies below), while
    // ||s(xi)|| <= ||g|| / (lambda_min + xi) forces the norm under delta at hi.
    let lo = (-lambda_min).max(0.0);
    let hi = lo + gnorm / delta + 1.0;

    if secular_norm_sq(&eig.values, &w, lo).sqrt() <= delta {
        // Hard case: no root above the pole. Take xi at the pole and add a
        // leftmost-eigenvector component to reach the boundary.
        let base = secular_step(&eig, &w, lo);
        let tau = (delta * delta - linalg::dot(&base, &base)).max(0.0).sqrt();
        let step = linalg::axpy(&base, tau, &eig.vectors[0]);
        return finish(g, h, lambda_min, step, lo, delta, tol, true);
    }

    let (xi, converged) = solve_secular(&eig.values, &w, lo, hi, delta, tol);
    let mut step = secular_step(&eig, &w, xi);
    let snorm = linalg::norm(&step);

    let mut resolved = converged;
    if !converged && snorm < delta {
        // Root pinched against the pole (near-hard case): close the gap with
        // a leftmost-eigenvector component, which perturbs stationarity by
        // only tau * (lambda_min + xi). The partial step may already carry a
        // component along that eigenvector, so tau solves
        // ||step + tau u||^2 = delta^2 exactly.
        let u = &eig.vectors[0];
        let a = linalg::dot(&step, u);
        let tau = -a + (a * a + delta * delta - snorm * snorm).max(0.0).sqrt();
        step = linalg::axpy(&step, tau, u);
        resolved = true;
    }

    let sol = finish(g, h, lambda_min, step, xi, delta, tol, true)?;
    if resolved {
        Ok(sol)
    } else {
        Err(Error::TrsNoConvergence {
            iters: ROOT_ITER_CAP,
            best: sol.kkt_residuals,
        })
    }
}

/// Assemble the solution, compute honest residuals against H itself, and
/// enforce the optimality system at the requested tolerance.
#[allow(clippy::too_many_arguments)]
fn finish(
    g: &[f64],
    h: &SymMatrix,
    lambda_min: f64,
    step: Vec<f64>,
    xi: f64,
    delta: f64,
    tol: f64,
    boundary: bool,
) -> Result<TrsSolution> {
    let hs = h.matvec(&step);
    let mut stat_sq = 0.0;
    for i in 0..step.len() {
        let r = g[i] + hs[i] + xi * step[i];
        stat_sq += r * r;
    }
    let snorm = linalg::norm(&step);
    let residuals = KktResiduals {
        stationarity: stat_sq.sqrt(),
        shift_margin: lambda_min + xi,
        complementarity: (xi * (delta - snorm)).abs(),
    };
    let gnorm = linalg::norm(g);
    let ok = residuals.stationarity <= tol * gnorm.max(1.0)
        && residuals.shift_margin >= -tol * lambda_min.abs().max(1.0)
        && xi >= 0.0
        && snorm <= delta * (1.0 + tol)
        && residuals.complementarity <= tol * (xi * delta).max(1.0);
    let sol = TrsSolution {
        step,
        multiplier: xi,
        kkt_residuals: residuals,
        boundary,
    };
    if ok {
        Ok(sol)
    } else {
        Err(Error::TrsNoConvergence {
            iters: ROOT_ITER_CAP,
            best: sol.kkt_residuals,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, norm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model_value(g: &[f64], h: &SymMatrix, s: &[f64]) -> f64 {
        dot(g, s) + 0.5 * h.quad_form(s)
    }

    /// Exhaustive 2-d oracle: best model value over a dense boundary grid and
    /// a dense interior grid.
    fn grid_oracle_min(g: &[f64], h: &SymMatrix, delta: f64) -> f64 {
        let mut best = f64::MAX;
        let n_angle = 100_000;
        for k in 0..n_angle {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n_angle as f64;
            let s = [delta * th.cos(), delta * th.sin()];
            best = best.min(model_value(g, h, &s));
        }
        let n_side = 200;
        for i in 0..=n_side {
            for j in 0..=n_side {
                let x = delta * (2.0 * i as f64 / n_side as f64 - 1.0);
                let y = delta * (2.0 * j as f64 / n_side as f64 - 1.0);
                if x * x + y * y <= delta * delta {
                    best = best.min(model_value(g, h, &[x, y]));
                }
            }
        }
        best
    }

    #[test]
    fn interior_convex() {
        let g = [1.0, 0.0];
        let h = SymMatrix::identity(2);
        let sol = solve_exact(&g, &h, 2.0, DEFAULT_TOL).unwrap();
        assert!((sol.step[0] + 1.0).abs() < 1e-12);
        assert!(sol.step[1].abs() < 1e-12);
        assert_eq!(sol.multiplier, 0.0);
        assert!(!sol.boundary);
    }

    #[test]
    fn zero_gradient_psd() {
        let g = [0.0, 0.0];
        let h = SymMatrix::from_diag(&[1.0, 2.0]);
        let sol = solve_exact(&g, &h, 1.0, DEFAULT_TOL).unwrap();
        assert!(norm(&sol.step) < 1e-14);
        assert_eq!(sol.multiplier, 0.0);
    }

    #[test]
    fn hard_case_indefinite() {
        // g orthogonal to the leftmost eigenvector e2.
        let g = [1.0, 0.0];
        let h = SymMatrix::from_diag(&[1.0, -1.0]);
        let sol = solve_exact(&g, &h, 1.0, DEFAULT_TOL).unwrap();
        assert!((sol.multiplier - 1.0).abs() < 1e-10);
        assert!((sol.step[0] + 0.5).abs() < 1e-10);
        assert!((sol.step[1].abs() - 0.75f64.sqrt()).abs() < 1e-10);
        assert!((norm(&sol.step) - 1.0).abs() < 1e-10);
        let oracle = grid_oracle_min(&g, &h, 1.0);
        assert!(model_value(&g, &h, &sol.step) <= oracle + 1e-6);
    }

    #[test]
    fn pure_negative_curvature_step() {
        let g = [0.0, 0.0];
        let h = SymMatrix::from_diag(&[2.0, -2.0]);
        let sol = solve_exact(&g, &h, 0.5, DEFAULT_TOL).unwrap();
        assert!((sol.multiplier - 2.0).abs() < 1e-10);
        assert!((norm(&sol.step) - 0.5).abs() < 1e-12);
        assert!(sol.step[0].abs() < 1e-12);
    }

    #[test]
    fn psd_singular_pseudo_solve() {
        // Null-space direction unused by g: minimal-norm interior solve.
        let g = [1.0, 0.0];
        let h = SymMatrix::from_diag(&[1.0, 0.0]);
        let sol = solve_exact(&g, &h, 2.0, DEFAULT_TOL).unwrap();
        assert!((sol.step[0] + 1.0).abs() < 1e-10);
        assert!(sol.step[1].abs() < 1e-12);
        assert_eq!(sol.multiplier, 0.0);
    }

    #[test]
    fn psd_singular_gradient_in_null_space() {
        // g points along the null space: boundary solution with xi = 1/delta.
        let g = [0.0, 1.0];
        let h = SymMatrix::from_diag(&[1.0, 0.0]);
        let delta = 0.5;
        let sol = solve_exact(&g, &h, delta, DEFAULT_TOL).unwrap();
        assert!((sol.multiplier - 1.0 / delta).abs() < 1e-8);
        assert!((sol.step[1] + delta).abs() < 1e-8);
    }

    #[test]
    fn invalid_radius_rejected() {
        let g = [1.0];
        let h = SymMatrix::identity(1);
        assert!(matches!(
            solve_exact(&g, &h, 0.0, DEFAULT_TOL),
            Err(Error::InvalidRadius { .. })
        ));
        assert!(matches!(
            solve_exact(&g, &h, -1.0, DEFAULT_TOL),
            Err(Error::InvalidRadius { .. })
        ));
    }

    #[test]
    fn boundary_multiplier_inequality() {
        // g^T s + 1/2 s^T H s <= -1/2 xi delta^2 on boundary solutions.
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..200 {
            let n = rng.gen_range(1..=5);
            let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let h = SymMatrix::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
            let delta = rng.gen_range(0.05..2.0);
            let sol = solve_exact(&g, &h, delta, DEFAULT_TOL).unwrap();
            if sol.boundary {
                let lhs = model_value(&g, &h, &sol.step);
                assert!(
                    lhs <= -0.5 * sol.multiplier * delta * delta + 1e-8,
                    "boundary inequality violated: {lhs} vs {}",
                    -0.5 * sol.multiplier * delta * delta
                );
            }
        }
    }

    #[test]
    fn global_optimality_on_random_2d() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..25 {
            let g: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let h = SymMatrix::from_fn(2, |_, _| rng.gen_range(-2.0..2.0));
            let delta = rng.gen_range(0.1..2.0);
            let sol = solve_exact(&g, &h, delta, DEFAULT_TOL).unwrap();
            let oracle = grid_oracle_min(&g, &h, delta);
            let got = model_value(&g, &h, &sol.step);
            assert!(
                got <= oracle + 1e-6,
                "TRS value {got} worse than grid oracle {oracle}"
            );
        }
    }

    #[test]
    fn scaling_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for _ in 0..50 {
            let n = rng.gen_range(1..=4);
            let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let h = SymMatrix::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
            let delta = rng.gen_range(0.1..1.5);
            let c = rng.gen_range(0.1..10.0);
            let base = solve_exact(&g, &h, delta, DEFAULT_TOL).unwrap();
            let gs: Vec<f64> = g.iter().map(|v| c * v).collect();
            let scaled = solve_exact(&gs, &h.scaled(c), delta, DEFAULT_TOL).unwrap();
            assert!(
                (scaled.multiplier - c * base.multiplier).abs()
                    <= 1e-8 * (1.0 + c * base.multiplier.abs()),
                "multiplier not equivariant"
            );
            for i in 0..n {
                assert!((scaled.step[i] - base.step[i]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn kkt_residuals_within_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..300 {
            let n = rng.gen_range(1..=6);
            let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let h = SymMatrix::from_fn(n, |_, _| rng.gen_range(-3.0..3.0));
            let delta = rng.gen_range(0.01..3.0);
            let sol = solve_exact(&g, &h, delta, DEFAULT_TOL).unwrap();
            let r = sol.kkt_residuals;
            assert!(r.stationarity <= 1e-9 * norm(&g).max(1.0));
            assert!(r.shift_margin >= -1e-9);
            assert!(sol.multiplier >= 0.0);
            assert!(norm(&sol.step) <= delta * (1.0 + 1e-9));
        }
    }
}
