//! Surface placement: genus-0 initialisation from a mask and
//! intersection-free gradient descent on the placement energy.

mod energy;
mod init;
mod optimize;

pub use energy::{energy_and_gradient, energy_with_frames, gradient_with_frames, mean_abs_sdf};
pub use init::{init_surface, SMOOTHING_ITERATIONS, TOPOLOGY_SIGMAS};
pub use optimize::{fit_pial, fit_surface};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Optimiser hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Weight of the normal spring term.
    pub lambda1: f64,
    /// Weight of the tangential spring term.
    pub lambda2: f64,
    /// Largest per-vertex displacement of a step, in mm.
    pub step_mm: f64,
    pub max_iters: usize,
    pub converge_rel_tol: f64,
    pub max_step_halvings_per_iter: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            lambda1: 0.0006,
            lambda2: 0.0002,
            step_mm: 0.1,
            max_iters: 500,
            converge_rel_tol: 1e-6,
            max_step_halvings_per_iter: 10,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !(ok(self.lambda1) && ok(self.lambda2)) {
            return Err(Error::Config(format!(
                "spring weights must be finite and non-negative (lambda1 {}, lambda2 {})",
                self.lambda1, self.lambda2
            )));
        }
        if !(self.step_mm > 0.0 && self.step_mm.is_finite()) {
            return Err(Error::Config(format!("step_mm {} must be positive", self.step_mm)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        if !(self.converge_rel_tol > 0.0) {
            return Err(Error::Config(format!(
                "converge_rel_tol {} must be positive",
                self.converge_rel_tol
            )));
        }
        Ok(())
    }
}

/// Outcome of one surface fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub iterations_run: usize,
    pub final_energy: f64,
    pub final_mean_abs_sdf_mm: f64,
    /// Proposed steps rejected because they created self-intersections.
    pub self_intersection_events: usize,
    pub converged: bool,
    /// Vertex freezes summed over all iterations.
    pub frozen_vertices: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_validation() {
        let c = FitConfig::default();
        assert_eq!((c.lambda1, c.lambda2), (0.0006, 0.0002));
        assert!(c.validate().is_ok());
        assert!(FitConfig { step_mm: 0.0, ..c }.validate().is_err());
        assert!(FitConfig { lambda1: -1.0, ..c }.validate().is_err());
        assert!(FitConfig { max_iters: 0, ..c }.validate().is_err());
    }

    #[test]
    fn report_json_field_names() {
        let r = FitReport {
            iterations_run: 3,
            final_energy: 1.5,
            final_mean_abs_sdf_mm: 0.05,
            self_intersection_events: 0,
            converged: true,
            frozen_vertices: 0,
        };
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "converged",
                "final_energy",
                "final_mean_abs_sdf_mm",
                "frozen_vertices",
                "iterations_run",
                "self_intersection_events"
            ]
        );
    }
}
