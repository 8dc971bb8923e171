//! Shared fixtures for the benchmark targets.

use dpa_core::pld::{discretize, gaussian_pld};
use dpa_core::DiscretePld;

/// A discretized unit-sensitivity Gaussian loss on the given grid. Built
/// once per benchmark so setup cost stays out of the timed loop.
pub fn gaussian_grid(step: f64) -> DiscretePld {
    let g = gaussian_pld(1.0, 2.0).expect("valid parameters");
    discretize(&g, step, 1e-12).expect("valid grid")
}
