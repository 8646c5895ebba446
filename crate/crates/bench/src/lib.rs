//! Fixtures shared by the criterion benches.

use rpca_core::{generate, GroundTruth, SynthSpec};

/// Square synthetic instance with rank `ratio * m` and 1% corruption.
pub fn instance(m: usize, rho_r: f64, seed: u64) -> GroundTruth {
    generate(&SynthSpec::square(m, rho_r, 0.01, seed)).expect("valid synthetic spec")
}
