//! Steady-state photon statistics of a pumped, dissipative micromaser or
//! microlaser, and the Bell-type correlations of two probe atoms sent
//! through the resulting field.
//!
//! Units: every rate is measured in units of the atom-field coupling `g`
//! and every time in units of `1/g`.

pub mod bell;
pub mod error;
pub mod fock;
pub mod oracle;
pub mod steady_state;
pub mod sweep;

pub use bell::{
    bell_sum, bell_sum_with, correlation, correlation_e, detect_map, joint_probs, BellResult,
    E0Mode, JointProbs, Outcome, PhaseTriple,
};
pub use error::{Error, Result};
pub use fock::{
    diag_to_density, make_measurement_ops, sandwich, DensityMatrix, FockDim, FockOperator,
    MeasurementOps,
};
pub use oracle::{
    compare_with_cf, compare_with_cf_params, pump_to_steady_state, Arrival, OracleReport,
    OracleRun, PumpModel, Tolerances,
};
pub use steady_state::{
    continued_fraction, steady_state_stats, CavityParams, PhotonStatistics, TruncationPolicy,
};
pub use sweep::{
    emit, find_peaks, read_sweep, run_sweep, Axis, Format, Metadata, Mode, Peak, PeakSummary,
    SweepConfig, SweepFile, SweepRow,
};
