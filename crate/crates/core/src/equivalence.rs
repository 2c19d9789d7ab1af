use serde::Serialize;

use crate::scalar::Scalar;

/// Agreement between two independently computed iterate sequences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport<S: Scalar> {
    pub iterations_compared: usize,
    /// Largest deviation between the primary sequences.
    pub max_deviation: S,
    /// Largest deviation in the secondary identity (resolvent outputs).
    pub max_secondary_deviation: S,
    pub tolerance: S,
    pub passed: bool,
}

impl<S: Scalar> EquivalenceReport<S> {
    pub(crate) fn new(iterations_compared: usize, max_deviation: S, max_secondary_deviation: S, tolerance: S) -> Self {
        Self {
            iterations_compared,
            max_deviation,
            max_secondary_deviation,
            tolerance,
            passed: iterations_compared > 0
                && max_deviation <= tolerance
                && max_secondary_deviation <= tolerance,
        }
    }
}

/// Deviation tolerance for the dual-path equivalence checks.
pub const EQUIVALENCE_TOL: f64 = 1e-9;
