//! Objective library: built-in test problems with analytic gradients and
//! Hessians, certified smoothness constants over a stated box, plus a
//! polynomial problem format loadable from JSON and finite-difference
//! validation of any oracle.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bounds::{BoxRegion, ProblemConstants};
use crate::error::{Error, Result};
use crate::linalg::{self, SymMatrix};

/// Evaluates f, its gradient, and its Hessian at a point, and carries the
/// problem's certified constants and a suggested start.
///
/// Implementations must be pure: repeated evaluation at the same point
/// returns the same values, so oracles are safe to share across solves.
pub trait Objective: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn eval_f(&self, x: &[f64]) -> f64;
    fn eval_grad(&self, x: &[f64]) -> Vec<f64>;
    fn eval_hess(&self, x: &[f64]) -> SymMatrix;
    fn constants(&self) -> &ProblemConstants;
    fn suggested_x0(&self) -> Vec<f64>;
}

/// f(x) = 1/2 x^T A x - b^T x with A symmetric. The Hessian is constant, so
/// the Lipschitz constant is 0 and kappa = ||A||.
pub struct Quadratic {
    name: String,
    a: SymMatrix,
    b: Vec<f64>,
    constants: ProblemConstants,
    x0: Vec<f64>,
}

impl Quadratic {
    /// Fails when the quadratic is unbounded below (A has a negative
    /// eigenvalue, or b has a component on the null space of a PSD A).
    pub fn new(name: &str, a: SymMatrix, b: Vec<f64>) -> Result<Self> {
        let n = a.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        let eig = linalg::eigendecompose(&a)?;
        let kappa = eig.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let zero_tol = 1e-12 * kappa.max(1.0);
        let w = eig.to_eigenbasis(&b);
        let mut f_inf = 0.0;
        for (i, &wi) in w.iter().enumerate() {
            if eig.values[i] > zero_tol {
                f_inf -= 0.5 * wi * wi / eig.values[i];
            } else if eig.values[i] < -zero_tol || wi.abs() > zero_tol {
                return Err(Error::InvalidProblemSpec(format!(
                    "quadratic '{name}' is unbounded below"
                )));
            }
        }
        Ok(Self {
            name: name.to_string(),
            x0: vec![1.0; n],
            constants: ProblemConstants {
                l: 0.0,
                kappa,
                f_inf,
                region: BoxRegion::whole_space(n),
            },
            a,
            b,
        })
    }
}

impl Objective for Quadratic {
    fn name(&self) -> &str {
        &self.name
    }
    fn dim(&self) -> usize {
        self.a.dim()
    }
    fn eval_f(&self, x: &[f64]) -> f64 {
        0.5 * self.a.quad_form(x) - linalg::dot(&self.b, x)
    }
    fn eval_grad(&self, x: &[f64]) -> Vec<f64> {
        linalg::sub(&self.a.matvec(x), &self.b)
    }
    fn eval_hess(&self, _x: &[f64]) -> SymMatrix {
        self.a.clone()
    }
    fn constants(&self) -> &ProblemConstants {
        &self.constants
    }
    fn suggested_x0(&self) -> Vec<f64> {
        self.x0.clone()
    }
}

/// Chained Rosenbrock, n >= 2:
/// f(x) = sum_i 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2, global minimum 0 at
/// the all-ones point.
///
/// Constants are certified on the box |x_i| <= 5 via row-sum and
/// Frobenius bounds: |H_ii| <= 1200*25 + 400*5 + 202 and |H_{i,i+1}| <= 2000
/// give kappa; the entrywise difference bound
/// |dH_ii| <= 12000|d_i| + 400|d_{i+1}|, |dH_{i,i+1}| = 400|d_i| gives L
/// through ||dH||_F (12020 for n = 2, 17000 for chained n > 2).
pub struct Rosenbrock {
    dim: usize,
    constants: ProblemConstants,
}

impl Rosenbrock {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::UnsupportedDim {
                name: "rosenbrock".into(),
                dim,
            });
        }
        let (kappa, l) = if dim == 2 {
            (34_002.0, 12_020.0)
        } else {
            (36_202.0, 17_000.0)
        };
        Ok(Self {
            dim,
            constants: ProblemConstants {
                l,
                kappa,
                f_inf: 0.0,
                region: BoxRegion::cube(dim, 5.0),
            },
        })
    }
}

impl Objective for Rosenbrock {
    fn name(&self) -> &str {
        "rosenbrock"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_f(&self, x: &[f64]) -> f64 {
        let mut f = 0.0;
        for i in 0..self.dim - 1 {
            let a = x[i + 1] - x[i] * x[i];
            let b = 1.0 - x[i];
            f += 100.0 * a * a + b * b;
        }
        f
    }
    fn eval_grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for i in 0..self.dim - 1 {
            let a = x[i + 1] - x[i] * x[i];
            g[i] += -400.0 * x[i] * a - 2.0 * (1.0 - x[i]);
            g[i + 1] += 200.0 * a;
        }
        g
    }
    fn eval_hess(&self, x: &[f64]) -> SymMatrix {
        let mut h = SymMatrix::zeros(self.dim);
        for i in 0..self.dim - 1 {
            let d = h.get(i, i) + 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
            h.set(i, i, d);
            let d1 = h.get(i + 1, i + 1) + 200.0;
            h.set(i + 1, i + 1, d1);
            h.set(i + 1, i, -400.0 * x[i]);
        }
        h
    }
    fn constants(&self) -> &ProblemConstants {
        &self.constants
    }
    fn suggested_x0(&self) -> Vec<f64> {
        let mut x0 = vec![1.0; self.dim];
        x0[0] = -1.2;
        x0
    }
}

/// f(x, y) = x^2 - y^2 + y^4: a strict saddle at the origin (gradient zero,
/// leftmost eigenvalue -2) with two minima at (0, +-1/sqrt(2)), f = -1/4.
///
/// On |x_i| <= 2: |H_22| = |-2 + 12 y^2| <= 46 so kappa = 46, and
/// |H_22(x) - H_22(y)| = 12 |y^2 - y'^2| <= 48 |y - y'| so L = 48.
pub struct Saddle {
    constants: ProblemConstants,
}

impl Saddle {
    pub fn new() -> Self {
        Self {
            constants: ProblemConstants {
                l: 48.0,
                kappa: 46.0,
                f_inf: -0.25,
                region: BoxRegion::cube(2, 2.0),
            },
        }
    }
}

impl Default for Saddle {
    fn default() -> Self {
        Self::new()
    }
}

impl Objective for Saddle {
    fn name(&self) -> &str {
        "saddle"
    }
    fn dim(&self) -> usize {
        2
    }
    fn eval_f(&self, x: &[f64]) -> f64 {
        x[0] * x[0] - x[1] * x[1] + x[1].powi(4)
    }
    fn eval_grad(&self, x: &[f64]) -> Vec<f64> {
        vec![2.0 * x[0], -2.0 * x[1] + 4.0 * x[1].powi(3)]
    }
    fn eval_hess(&self, x: &[f64]) -> SymMatrix {
        SymMatrix::from_diag(&[2.0, -2.0 + 12.0 * x[1] * x[1]])
    }
    fn constants(&self) -> &ProblemConstants {
        &self.constants
    }
    fn suggested_x0(&self) -> Vec<f64> {
        vec![0.8, 0.9]
    }
}

/// Six-hump camel function on [-3, 3] x [-2, 2]:
/// f = 4x^2 - 2.1x^4 + x^6/3 + xy - 4y^2 + 4y^4, two global minima near
/// (+-0.0898, -+0.7126) with value about -1.031628.
///
/// kappa from row sums: max |8 - 25.2 x^2 + 10 x^4| = 591.2 at |x| = 3 plus
/// the unit off-diagonal gives 593. L from max |dH11/dx| = 928.8 at |x| = 3
/// and |dH22/dy| <= 192, rounded to 929. f_inf is rounded below the global
/// minimum for a safe lower bound.
pub struct Camel6 {
    constants: ProblemConstants,
}

impl Camel6 {
    pub fn new() -> Self {
        Self {
            constants: ProblemConstants {
                l: 929.0,
                kappa: 593.0,
                f_inf: -1.0317,
                region: BoxRegion {
                    lo: vec![-3.0, -2.0],
                    hi: vec![3.0, 2.0],
                },
            },
        }
    }
}

impl Default for Camel6 {
    fn default() -> Self {
        Self::new()
    }
}

impl Objective for Camel6 {
    fn name(&self) -> &str {
        "camel6"
    }
    fn dim(&self) -> usize {
        2
    }
    fn eval_f(&self, x: &[f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        4.0 * a * a - 2.1 * a.powi(4) + a.powi(6) / 3.0 + a * b - 4.0 * b * b + 4.0 * b.powi(4)
    }
    fn eval_grad(&self, x: &[f64]) -> Vec<f64> {
        let (a, b) = (x[0], x[1]);
        vec![
            8.0 * a - 8.4 * a.powi(3) + 2.0 * a.powi(5) + b,
            a - 8.0 * b + 16.0 * b.powi(3),
        ]
    }
    fn eval_hess(&self, x: &[f64]) -> SymMatrix {
        let (a, b) = (x[0], x[1]);
        let mut h = SymMatrix::zeros(2);
        h.set(0, 0, 8.0 - 25.2 * a * a + 10.0 * a.powi(4));
        h.set(1, 0, 1.0);
        h.set(1, 1, -8.0 + 48.0 * b * b);
        h
    }
    fn constants(&self) -> &ProblemConstants {
        &self.constants
    }
    fn suggested_x0(&self) -> Vec<f64> {
        vec![-1.5, 1.0]
    }
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 4] = ["quadratic", "rosenbrock", "saddle", "camel6"];

/// Construct a built-in oracle by name.
///
/// `quadratic` is f = ||x||^2 / 2 in any dimension; `rosenbrock` needs
/// dim >= 2; `saddle` and `camel6` are strictly two-dimensional.
pub fn builtin(name: &str, dim: usize) -> Result<Box<dyn Objective>> {
    match name {
        "quadratic" => {
            if dim == 0 {
                return Err(Error::UnsupportedDim {
                    name: name.into(),
                    dim,
                });
            }
            Ok(Box::new(Quadratic::new(
                "quadratic",
                SymMatrix::identity(dim),
                vec![0.0; dim],
            )?))
        }
        "rosenbrock" => Ok(Box::new(Rosenbrock::new(dim)?)),
        "saddle" => {
            if dim != 2 {
                return Err(Error::UnsupportedDim {
                    name: name.into(),
                    dim,
                });
            }
            Ok(Box::new(Saddle::new()))
        }
        "camel6" => {
            if dim != 2 {
                return Err(Error::UnsupportedDim {
                    name: name.into(),
                    dim,
                });
            }
            Ok(Box::new(Camel6::new()))
        }
        other => Err(Error::UnknownProblem(other.to_string())),
    }
}

/// Schema tag expected in problem files.
pub const PROBLEM_SCHEMA: &str = "trlab-problem/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PolyTerm {
    coeff: f64,
    powers: Vec<u32>,
}

/// On-disk form of a custom polynomial problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct PolyProblemFile {
    schema: String,
    name: String,
    dim: usize,
    terms: Vec<PolyTerm>,
    constants: ProblemConstants,
    x0: Vec<f64>,
}

/// Polynomial objective f(x) = sum_m c_m prod_i x_i^{p_mi}, with exact
/// analytic derivatives from the monomial exponents.
pub struct PolyProblem {
    name: String,
    dim: usize,
    terms: Vec<PolyTerm>,
    constants: ProblemConstants,
    x0: Vec<f64>,
}

impl PolyProblem {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: PolyProblemFile = serde_json::from_str(text)?;
        if file.schema != PROBLEM_SCHEMA {
            return Err(Error::InvalidProblemSpec(format!(
                "unsupported schema '{}', expected '{PROBLEM_SCHEMA}'",
                file.schema
            )));
        }
        if file.dim == 0 {
            return Err(Error::InvalidProblemSpec("dim must be >= 1".into()));
        }
        if file.x0.len() != file.dim {
            return Err(Error::InvalidProblemSpec(format!(
                "x0 has {} entries, dim is {}",
                file.x0.len(),
                file.dim
            )));
        }
        if file.constants.region.lo.len() != file.dim
            || file.constants.region.hi.len() != file.dim
        {
            return Err(Error::InvalidProblemSpec(
                "region bounds must match dim".into(),
            ));
        }
        if !(file.constants.l >= 0.0 && file.constants.kappa >= 0.0)
            || !file.constants.f_inf.is_finite()
        {
            return Err(Error::InvalidProblemSpec(
                "constants need l >= 0, kappa >= 0, finite f_inf".into(),
            ));
        }
        for (i, t) in file.terms.iter().enumerate() {
            if t.powers.len() != file.dim {
                return Err(Error::InvalidProblemSpec(format!(
                    "term {i} has {} exponents, dim is {}",
                    t.powers.len(),
                    file.dim
                )));
            }
            if !t.coeff.is_finite() {
                return Err(Error::InvalidProblemSpec(format!(
                    "term {i} has a non-finite coefficient"
                )));
            }
        }
        Ok(Self {
            name: file.name,
            dim: file.dim,
            terms: file.terms,
            constants: file.constants,
            x0: file.x0,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }
}

/// prod_i x_i^{p_i} with the exponent at `j` lowered by `drop_j` (and at `k`
/// by `drop_k`); returns the monomial factor times the falling powers.
fn monomial_partial(x: &[f64], powers: &[u32], drops: &[(usize, u32)]) -> f64 {
    let mut coeff = 1.0;
    let mut val = 1.0;
    'outer: for (i, &p) in powers.iter().enumerate() {
        let mut p_eff = p;
        for &(j, d) in drops {
            if i == j {
                if p < d {
                    return 0.0;
                }
                for step in 0..d {
                    coeff *= (p - step) as f64;
                }
                p_eff = p - d;
                val *= x[i].powi(p_eff as i32);
                continue 'outer;
            }
        }
        val *= x[i].powi(p_eff as i32);
    }
    coeff * val
}

impl Objective for PolyProblem {
    fn name(&self) -> &str {
        &self.name
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_f(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff * monomial_partial(x, &t.powers, &[]))
            .sum()
    }
    fn eval_grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for t in &self.terms {
            for (j, gj) in g.iter_mut().enumerate() {
                if t.powers[j] > 0 {
                    *gj += t.coeff * monomial_partial(x, &t.powers, &[(j, 1)]);
                }
            }
        }
        g
    }
    fn eval_hess(&self, x: &[f64]) -> SymMatrix {
        let mut h = SymMatrix::zeros(self.dim);
        for t in &self.terms {
            for j in 0..self.dim {
                for k in 0..=j {
                    let v = if j == k {
                        if t.powers[j] >= 2 {
                            t.coeff * monomial_partial(x, &t.powers, &[(j, 2)])
                        } else {
                            0.0
                        }
                    } else if t.powers[j] > 0 && t.powers[k] > 0 {
                        t.coeff * monomial_partial(x, &t.powers, &[(j, 1), (k, 1)])
                    } else {
                        0.0
                    };
                    if v != 0.0 {
                        h.set(j, k, h.get(j, k) + v);
                    }
                }
            }
        }
        h
    }
    fn constants(&self) -> &ProblemConstants {
        &self.constants
    }
    fn suggested_x0(&self) -> Vec<f64> {
        self.x0.clone()
    }
}

/// Outcome of a central-difference check of the analytic derivatives.
#[derive(Debug, Clone, Serialize)]
pub struct DerivativeReport {
    pub grad_abs_err: f64,
    pub grad_rel_err: f64,
    pub hess_abs_err: f64,
    pub hess_rel_err: f64,
    /// Acceptance threshold max(10 h^2, 1e-6) on the relative errors.
    pub threshold: f64,
    pub passed: bool,
}

/// Compare the analytic gradient and Hessian against central differences of
/// step `h` at `x`. Relative errors are taken against max(1, scale) with the
/// scale set by the analytic quantity's norm.
pub fn check_derivatives(o: &dyn Objective, x: &[f64], h: f64) -> Result<DerivativeReport> {
    if x.len() != o.dim() {
        return Err(Error::DimensionMismatch {
            expected: o.dim(),
            got: x.len(),
        });
    }
    if h <= 0.0 || h.is_nan() {
        return Err(Error::InvalidConfig(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    if !o.constants().region.contains(x) {
        return Err(Error::RegionExit { x: x.to_vec() });
    }

    let n = o.dim();
    let grad = o.eval_grad(x);
    let hess = o.eval_hess(x);

    let mut grad_abs_err = 0.0f64;
    let mut hess_abs_err = 0.0f64;
    for j in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let fp = o.eval_f(&xp);
        let fm = o.eval_f(&xm);
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::OracleFailure {
                what: "objective value at a finite-difference stencil point",
                iteration: 0,
                x: xp,
            });
        }
        grad_abs_err = grad_abs_err.max(((fp - fm) / (2.0 * h) - grad[j]).abs());

        let gp = o.eval_grad(&xp);
        let gm = o.eval_grad(&xm);
        for i in 0..n {
            if !gp[i].is_finite() || !gm[i].is_finite() {
                return Err(Error::OracleFailure {
                    what: "gradient at a finite-difference stencil point",
                    iteration: 0,
                    x: xp,
                });
            }
            let fd = (gp[i] - gm[i]) / (2.0 * h);
            hess_abs_err = hess_abs_err.max((fd - hess.get(i, j)).abs());
        }
    }

    let grad_scale = linalg::norm(&grad).max(1.0);
    let hess_scale = hess.frobenius_norm().max(1.0);
    let threshold = (10.0 * h * h).max(1e-6);
    let grad_rel_err = grad_abs_err / grad_scale;
    let hess_rel_err = hess_abs_err / hess_scale;
    Ok(DerivativeReport {
        grad_abs_err,
        grad_rel_err,
        hess_abs_err,
        hess_rel_err,
        threshold,
        passed: grad_rel_err <= threshold && hess_rel_err <= threshold,
    })
}

/// Uniform sample inside `region`, with infinite bounds clamped to
/// [-clamp, clamp].
pub fn sample_in_region(
    region: &BoxRegion,
    rng: &mut impl rand::Rng,
    clamp: f64,
) -> Vec<f64> {
    region
        .lo
        .iter()
        .zip(&region.hi)
        .map(|(&lo, &hi)| {
            let a = lo.max(-clamp);
            let b = hi.min(clamp);
            rng.gen_range(a..=b)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{leftmost_eigenpair, norm, spectral_norm, sub};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn saddle_values_at_origin_and_minima() {
        let p = builtin("saddle", 2).unwrap();
        assert_eq!(p.eval_f(&[0.0, 0.0]), 0.0);
        assert_eq!(p.eval_grad(&[0.0, 0.0]), vec![0.0, 0.0]);
        let h = p.eval_hess(&[0.0, 0.0]);
        assert_eq!(h.get(0, 0), 2.0);
        assert_eq!(h.get(1, 1), -2.0);
        let m = 1.0 / 2f64.sqrt();
        assert!((p.eval_f(&[0.0, m]) - (-0.25)).abs() < 1e-15);
        assert!((p.eval_f(&[0.0, -m]) - (-0.25)).abs() < 1e-15);
        assert_eq!(p.constants().f_inf, -0.25);
    }

    #[test]
    fn rosenbrock_minimum() {
        let p = builtin("rosenbrock", 2).unwrap();
        assert_eq!(p.eval_f(&[1.0, 1.0]), 0.0);
        assert!(norm(&p.eval_grad(&[1.0, 1.0])) < 1e-14);
        let pair = leftmost_eigenpair(&p.eval_hess(&[1.0, 1.0])).unwrap();
        assert!(pair.value > 0.0);
        assert!((p.eval_f(&[-1.2, 1.0]) - 24.2).abs() < 1e-12);
    }

    #[test]
    fn quadratic_f_inf_with_linear_term() {
        let a = SymMatrix::from_diag(&[1.0, 4.0]);
        let q = Quadratic::new("q", a, vec![2.0, 4.0]).unwrap();
        // minimizer (2, 1), value -(2 + 2) = -4
        assert!((q.constants().f_inf - (-4.0)).abs() < 1e-12);
        assert!(norm(&q.eval_grad(&[2.0, 1.0])) < 1e-12);
        let indef = SymMatrix::from_diag(&[1.0, -1.0]);
        assert!(Quadratic::new("bad", indef, vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn builtin_validation() {
        assert!(matches!(
            builtin("nope", 2),
            Err(Error::UnknownProblem(_))
        ));
        assert!(matches!(
            builtin("saddle", 3),
            Err(Error::UnsupportedDim { .. })
        ));
        assert!(matches!(
            builtin("rosenbrock", 1),
            Err(Error::UnsupportedDim { .. })
        ));
        for name in BUILTIN_NAMES {
            let dim = 2;
            let p = builtin(name, dim).unwrap();
            assert_eq!(p.dim(), dim);
            assert!(p.constants().region.contains(&p.suggested_x0()));
        }
    }

    #[test]
    fn derivative_check_quadratic_exact() {
        let p = builtin("quadratic", 3).unwrap();
        let rep = check_derivatives(p.as_ref(), &[0.3, -1.2, 2.0], 1e-4).unwrap();
        assert!(rep.grad_abs_err < 1e-10);
        assert!(rep.hess_abs_err < 1e-10);
        assert!(rep.passed);
    }

    #[test]
    fn derivative_check_rosenbrock_and_saddle() {
        let p = builtin("rosenbrock", 2).unwrap();
        let rep = check_derivatives(p.as_ref(), &[-1.2, 1.0], 1e-5).unwrap();
        assert!(rep.grad_rel_err <= 1e-6, "{rep:?}");
        assert!(rep.hess_rel_err <= 1e-6, "{rep:?}");
        let p = builtin("saddle", 2).unwrap();
        let rep = check_derivatives(p.as_ref(), &[0.3, 0.7], 1e-5).unwrap();
        assert!(rep.grad_rel_err <= 1e-6 && rep.hess_rel_err <= 1e-6);
    }

    #[test]
    fn derivative_check_rejects_out_of_region() {
        let p = builtin("saddle", 2).unwrap();
        assert!(matches!(
            check_derivatives(p.as_ref(), &[5.0, 0.0], 1e-5),
            Err(Error::RegionExit { .. })
        ));
    }

    #[test]
    fn constants_certified_on_region() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for (name, dim) in [
            ("quadratic", 3),
            ("rosenbrock", 2),
            ("rosenbrock", 5),
            ("saddle", 2),
            ("camel6", 2),
        ] {
            let p = builtin(name, dim).unwrap();
            let c = p.constants();
            for _ in 0..100 {
                let x = sample_in_region(&c.region, &mut rng, 10.0);
                let y = sample_in_region(&c.region, &mut rng, 10.0);
                assert!(p.eval_f(&x) >= c.f_inf, "{name}: f below f_inf");
                let hx = p.eval_hess(&x);
                assert!(
                    spectral_norm(&hx).unwrap() <= c.kappa * (1.0 + 1e-12),
                    "{name}: kappa violated at {x:?}"
                );
                let hy = p.eval_hess(&y);
                let mut diff = SymMatrix::zeros(dim);
                for i in 0..dim {
                    for j in 0..=i {
                        diff.set(i, j, hx.get(i, j) - hy.get(i, j));
                    }
                }
                let lhs = spectral_norm(&diff).unwrap();
                let rhs = c.l * norm(&sub(&x, &y));
                assert!(
                    lhs <= rhs + 1e-9,
                    "{name}: Lipschitz violated: {lhs} > {rhs}"
                );
            }
        }
    }

    fn saddle_poly_json() -> String {
        format!(
            r#"{{
  "schema": "{PROBLEM_SCHEMA}",
  "name": "poly-saddle",
  "dim": 2,
  "terms": [
    {{"coeff": 1.0, "powers": [2, 0]}},
    {{"coeff": -1.0, "powers": [0, 2]}},
    {{"coeff": 1.0, "powers": [0, 4]}}
  ],
  "constants": {{"l": 48.0, "kappa": 46.0, "f_inf": -0.25,
                 "region": {{"lo": [-2.0, -2.0], "hi": [2.0, 2.0]}}}},
  "x0": [0.0, 0.0]
}}"#
        )
    }

    #[test]
    fn poly_problem_matches_builtin_saddle() {
        let poly = PolyProblem::from_json_str(&saddle_poly_json()).unwrap();
        let saddle = builtin("saddle", 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        for _ in 0..50 {
            let x = sample_in_region(&poly.constants().region, &mut rng, 2.0);
            assert!((poly.eval_f(&x) - saddle.eval_f(&x)).abs() < 1e-12);
            let (pg, sg) = (poly.eval_grad(&x), saddle.eval_grad(&x));
            for i in 0..2 {
                assert!((pg[i] - sg[i]).abs() < 1e-12);
            }
            let (ph, sh) = (poly.eval_hess(&x), saddle.eval_hess(&x));
            for i in 0..2 {
                for j in 0..2 {
                    assert!((ph.get(i, j) - sh.get(i, j)).abs() < 1e-12);
                }
            }
        }
        let rep = check_derivatives(&poly, &[0.4, -0.3], 1e-5).unwrap();
        assert!(rep.passed);
    }

    #[test]
    fn poly_problem_rejects_bad_specs() {
        let bad_schema = saddle_poly_json().replace(PROBLEM_SCHEMA, "nope/9");
        assert!(matches!(
            PolyProblem::from_json_str(&bad_schema),
            Err(Error::InvalidProblemSpec(_))
        ));
        let bad_powers = saddle_poly_json().replace("[2, 0]", "[2, 0, 0]");
        assert!(PolyProblem::from_json_str(&bad_powers).is_err());
        let bad_x0 = saddle_poly_json().replace("\"x0\": [0.0, 0.0]", "\"x0\": [0.0]");
        assert!(PolyProblem::from_json_str(&bad_x0).is_err());
    }

    #[test]
    fn poly_mixed_terms_against_finite_differences() {
        // f = 0.5 x^2 y^3 - 2 x y + 3, exercises mixed partials
        let text = format!(
            r#"{{
  "schema": "{PROBLEM_SCHEMA}",
  "name": "mixed",
  "dim": 2,
  "terms": [
    {{"coeff": 0.5, "powers": [2, 3]}},
    {{"coeff": -2.0, "powers": [1, 1]}},
    {{"coeff": 3.0, "powers": [0, 0]}}
  ],
  "constants": {{"l": 100.0, "kappa": 100.0, "f_inf": -1000.0,
                 "region": {{"lo": [-2.0, -2.0], "hi": [2.0, 2.0]}}}},
  "x0": [1.0, 1.0]
}}"#
        );
        let poly = PolyProblem::from_json_str(&text).unwrap();
        assert!((poly.eval_f(&[1.0, 1.0]) - 1.5).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..20 {
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let rep = check_derivatives(&poly, &x, 1e-5).unwrap();
            assert!(rep.passed, "{rep:?} at {x:?}");
        }
    }
}
