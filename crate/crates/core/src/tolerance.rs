use serde::{Deserialize, Serialize};

/// Numerical thresholds for structural and physical checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative asymmetry allowed in a covariance matrix.
    pub symmetry: f64,
    /// Allowed undershoot of a symplectic eigenvalue below 1/2.
    pub physical: f64,
    /// Max entry of `S^T J S - J` for a matrix to count as symplectic.
    pub symplectic: f64,
    /// Absolute size of x-p couplings tolerated by block extraction.
    pub block: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            symmetry: 1e-12,
            physical: 1e-9,
            symplectic: 1e-10,
            block: 1e-12,
        }
    }
}

impl Tolerances {
    /// Overrides one named threshold; returns false on an unknown key.
    pub fn set(&mut self, key: &str, value: f64) -> bool {
        match key {
            "symmetry" => self.symmetry = value,
            "physical" => self.physical = value,
            "symplectic" => self.symplectic = value,
            "block" => self.block = value,
            _ => return false,
        }
        true
    }
}
