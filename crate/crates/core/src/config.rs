//! Run configuration shared by every subsystem and embedded in reports.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Numerical tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Residual below which a value counts as zero.
    pub zero_tol: f64,
    /// Singular value threshold for rank decisions.
    pub rank_tol: f64,
    /// Relative slack allowed by grid-based sup estimates.
    pub grid_tol: f64,
    /// Truncation bound for dropped peak contributions.
    pub tail_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            zero_tol: 1e-9,
            rank_tol: 1e-8,
            grid_tol: 0.05,
            tail_tol: (-std::f64::consts::FRAC_PI_4 * 64.0).exp(),
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("zero_tol", self.zero_tol),
            ("rank_tol", self.rank_tol),
            ("grid_tol", self.grid_tol),
            ("tail_tol", self.tail_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("{name} must be positive and finite, got {v}"));
            }
        }
        Ok(())
    }
}

/// Sampling and search budgets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budgets {
    /// Multistart count for sphere minimizations.
    pub restarts: usize,
    /// Rejection-sampling budget of local avoidance.
    pub avoid_budget: usize,
    /// Candidate disks per scale in the hyperbolicity experiment.
    pub disk_search: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            restarts: 64,
            avoid_budget: 512,
            disk_search: 24,
        }
    }
}

/// Settings of the peak-section sweep. `n0` is the calibrated exponent of
/// the local avoidance target for the transversality oracle at `eps1`
/// (see `peaks::globalize::calibrate_n0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PeakSettings {
    pub eps1: f64,
    pub n0: f64,
    pub grid_step: f64,
    /// Extra lattice margin around an evaluated box.
    pub pad: f64,
}

impl Default for PeakSettings {
    fn default() -> Self {
        PeakSettings {
            eps1: 0.1,
            n0: 2.0,
            grid_step: 0.25,
            pad: 4.5,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub tolerances: Tolerances,
    pub budgets: Budgets,
    pub peaks: PeakSettings,
    /// Optional output paths (report, CSV).
    pub output: Option<String>,
    pub csv: Option<String>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.tolerances.validate()?;
        if self.budgets.restarts == 0 || self.budgets.avoid_budget == 0 {
            return invalid("budgets must be at least 1");
        }
        let p = &self.peaks;
        if !(p.eps1 > 0.0 && p.eps1 < 0.25) || !(p.n0 > 0.0) || !(p.grid_step > 0.0) || !(p.pad >= 0.0) {
            return invalid("peak settings out of range");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn non_positive_tolerance_rejected() {
        let mut c = RunConfig::default();
        c.tolerances.rank_tol = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"tolerances":{"zero_tol":1e-6}}"#).unwrap();
        assert_eq!(c.tolerances.zero_tol, 1e-6);
        assert_eq!(c.tolerances.rank_tol, 1e-8);
        assert_eq!(c.budgets.restarts, 64);
    }
}
