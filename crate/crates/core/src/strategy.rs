//! Radius strategies: interchangeable rules that couple the trust-region
//! radius to the gradient norm and/or the leftmost Hessian eigenvalue, each
//! behind a common trait and registered by name so runs select them from
//! config or the command line.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::negative_part;
use crate::model::Branch;
use crate::solver::Status;

/// Name of the gradient-coupled strategy with the first-order guarantee.
pub const UPDATE1: &str = "update1";
/// Name of the strategy that switches to the curvature scale when negative
/// curvature dominates, carrying the second-order guarantee.
pub const UPDATE2: &str = "update2";

/// delta = gamma * ||g||, used whenever the radius is gradient-coupled.
pub fn radius_update1(gamma: f64, grad_norm: f64) -> f64 {
    gamma * grad_norm
}

/// Case split on ||g||^2 vs |lambda_-|^3: the gradient scale wins ties.
pub fn radius_update2(gamma: f64, grad_norm: f64, lambda_min: f64) -> (f64, Branch) {
    let neg = negative_part(lambda_min).abs();
    if lambda_min >= 0.0 || grad_norm * grad_norm >= neg.powi(3) {
        (gamma * grad_norm, Branch::Gradient)
    } else {
        (gamma * neg, Branch::Eigen)
    }
}

/// A rule for choosing the radius each iteration, plus the matching
/// termination test and terminal status.
pub trait RadiusStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    /// Radius and branch for the current (gamma, ||g||, lambda_min).
    fn radius(&self, gamma: f64, grad_norm: f64, lambda_min: f64) -> (f64, Branch);

    /// Termination test, evaluated before any step is formed.
    fn is_stationary(&self, grad_norm: f64, lambda_min: f64, eps_g: f64, eps_h: f64) -> bool;

    /// Status reported when `is_stationary` fires.
    fn stationary_status(&self) -> Status;
}

/// Gradient-coupled radius on every iteration; stops at ||g|| <= eps_g even
/// if negative curvature remains.
struct GradientRadius;

impl RadiusStrategy for GradientRadius {
    fn name(&self) -> &'static str {
        UPDATE1
    }

    fn radius(&self, gamma: f64, grad_norm: f64, _lambda_min: f64) -> (f64, Branch) {
        (radius_update1(gamma, grad_norm), Branch::Gradient)
    }

    fn is_stationary(&self, grad_norm: f64, _lambda_min: f64, eps_g: f64, _eps_h: f64) -> bool {
        grad_norm <= eps_g
    }

    fn stationary_status(&self) -> Status {
        Status::FirstOrderStationary
    }
}

/// Couples the radius to whichever of ||g|| and |lambda_-| currently drives
/// the guaranteed decrease; stops only at second-order stationarity.
struct CurvatureCoupledRadius;

impl RadiusStrategy for CurvatureCoupledRadius {
    fn name(&self) -> &'static str {
        UPDATE2
    }

    fn radius(&self, gamma: f64, grad_norm: f64, lambda_min: f64) -> (f64, Branch) {
        radius_update2(gamma, grad_norm, lambda_min)
    }

    fn is_stationary(&self, grad_norm: f64, lambda_min: f64, eps_g: f64, eps_h: f64) -> bool {
        grad_norm <= eps_g && lambda_min >= -eps_h
    }

    fn stationary_status(&self) -> Status {
        Status::SecondOrderStationary
    }
}

/// Name-keyed registry of radius strategies.
pub struct Registry {
    entries: Vec<Box<dyn RadiusStrategy>>,
}

impl Registry {
    pub fn empty() -> Self {
        Self {
            entries: Vec::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(GradientRadius));
        r.register(Box::new(CurvatureCoupledRadius));
        r
    }

    /// Later registrations shadow earlier ones with the same name.
    pub fn register(&mut self, strategy: Box<dyn RadiusStrategy>) {
        self.entries.retain(|s| s.name() != strategy.name());
        self.entries.push(strategy);
    }

    pub fn get(&self, name: &str) -> Option<&dyn RadiusStrategy> {
        self.entries
            .iter()
            .find(|s| s.name() == name)
            .map(|s| s.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|s| s.name()).collect()
    }
}

fn global_registry() -> &'static Registry {
    static REGISTRY: OnceLock<Registry> = OnceLock::new();
    REGISTRY.get_or_init(Registry::with_builtins)
}

/// Resolve a strategy by name from the built-in registry.
pub fn lookup(name: &str) -> Result<&'static dyn RadiusStrategy> {
    let reg = global_registry();
    reg.get(name).ok_or_else(|| {
        Error::UnknownStrategy(name.to_string(), reg.names().join(", "))
    })
}

/// Names of the built-in radius strategies.
pub fn builtin_names() -> Vec<&'static str> {
    global_registry().names()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn update1_radius() {
        assert_eq!(radius_update1(0.5, 2.0), 1.0);
        assert_eq!(radius_update1(1.0, 0.0), 0.0);
        assert_eq!(radius_update1(0.25, 8.0), 2.0);
    }

    #[test]
    fn update2_case_split() {
        // ||g||^2 = 4 >= 1 = |lambda_-|^3
        assert_eq!(radius_update2(1.0, 2.0, -1.0), (2.0, Branch::Gradient));
        // 1 < 8
        assert_eq!(radius_update2(1.0, 1.0, -2.0), (2.0, Branch::Eigen));
        // lambda >= 0
        assert_eq!(radius_update2(0.5, 3.0, 0.7), (1.5, Branch::Gradient));
        // exact tie goes to the gradient branch
        assert_eq!(radius_update2(1.0, 1.0, -1.0), (1.0, Branch::Gradient));
    }

    #[test]
    fn registry_lookup_and_unknown() {
        assert_eq!(lookup(UPDATE1).unwrap().name(), UPDATE1);
        assert_eq!(lookup(UPDATE2).unwrap().name(), UPDATE2);
        assert!(matches!(
            lookup("nope"),
            Err(Error::UnknownStrategy(_, _))
        ));
        let names = builtin_names();
        assert!(names.contains(&UPDATE1) && names.contains(&UPDATE2));
    }

    #[test]
    fn termination_tests() {
        let u1 = lookup(UPDATE1).unwrap();
        let u2 = lookup(UPDATE2).unwrap();
        // update1 stops on the gradient alone, even with negative curvature
        assert!(u1.is_stationary(1e-9, -2.0, 1e-6, 1e-3));
        assert!(!u2.is_stationary(1e-9, -2.0, 1e-6, 1e-3));
        assert!(u2.is_stationary(1e-9, -1e-4, 1e-6, 1e-3));
        assert_eq!(u1.stationary_status(), Status::FirstOrderStationary);
        assert_eq!(u2.stationary_status(), Status::SecondOrderStationary);
    }

    #[test]
    fn registry_shadowing() {
        struct Custom;
        impl RadiusStrategy for Custom {
            fn name(&self) -> &'static str {
                UPDATE1
            }
            fn radius(&self, _: f64, _: f64, _: f64) -> (f64, Branch) {
                (42.0, Branch::Gradient)
            }
            fn is_stationary(&self, _: f64, _: f64, _: f64, _: f64) -> bool {
                false
            }
            fn stationary_status(&self) -> Status {
                Status::FirstOrderStationary
            }
        }
        let mut reg = Registry::with_builtins();
        reg.register(Box::new(Custom));
        assert_eq!(reg.get(UPDATE1).unwrap().radius(1.0, 1.0, 0.0).0, 42.0);
        assert_eq!(reg.names().len(), 2);
    }
}
