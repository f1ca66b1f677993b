//! Parameter points shared by the benchmarks.

use maser_core::{CavityParams, PhaseTriple};

/// Micromaser point near the second Bell-sum peak for `n` atoms per
/// photon lifetime.
pub fn maser_point(n: f64) -> CavityParams {
    CavityParams::new(n, 1e-7, 0.0, 0.15, 0.0)
        .and_then(|p| p.with_pump_parameter(3.1))
        .expect("valid preset")
}

/// Microlaser point with atomic damping.
pub fn laser_point(kappa: f64) -> CavityParams {
    CavityParams::new(100.0, kappa, 0.1, 0.0, 0.0)
        .and_then(|p| p.with_pump_parameter(3.5))
        .expect("valid preset")
}

pub fn phases() -> PhaseTriple {
    PhaseTriple::default()
}
