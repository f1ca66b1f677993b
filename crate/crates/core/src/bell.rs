//! Two-atom detection chain and the Bell sum.
//!
//! Each probe atom enters the cavity excited, interacts for `theta = g t`,
//! receives a pi/2 pulse of phase `phi` and is detected in `|e>` or `|g>`.
//! The field is updated by the unnormalized map
//!
//! ```text
//! rho -> 1/2 [A rho A^dag + D rho D^dag -/+ (e^{-i phi} A rho D^dag + e^{i phi} D rho A^dag)]
//! ```
//!
//! (minus for `e`). Composing two such maps and tracing gives the joint
//! probability of an ordered pair of clicks.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{sandwich, sandwich_trace, DensityMatrix, MeasurementOps};

/// Detector outcome for one probe atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Excited,
    Ground,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Excited, Outcome::Ground];

    /// Sign in front of the interference term.
    fn cross_sign(self) -> f64 {
        match self {
            Outcome::Excited => -1.0,
            Outcome::Ground => 1.0,
        }
    }

    /// Spin value assigned to the click: `+1` for `e`, `-1` for `g`.
    pub fn value(self) -> f64 {
        match self {
            Outcome::Excited => 1.0,
            Outcome::Ground => -1.0,
        }
    }
}

/// Analyzer phases of the three settings entering the Bell sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseTriple {
    pub phi1: f64,
    pub phi2: f64,
    pub phi3: f64,
}

impl Default for PhaseTriple {
    fn default() -> Self {
        PhaseTriple {
            phi1: 0.0,
            phi2: PI / 3.0,
            phi3: 2.0 * PI / 3.0,
        }
    }
}

impl PhaseTriple {
    pub fn shifted(&self, delta: f64) -> Self {
        PhaseTriple {
            phi1: self.phi1 + delta,
            phi2: self.phi2 + delta,
            phi3: self.phi3 + delta,
        }
    }
}

/// Joint probabilities of the ordered double-click record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointProbs {
    pub p_ee: f64,
    pub p_eg: f64,
    pub p_ge: f64,
    pub p_gg: f64,
}

impl JointProbs {
    pub fn total(&self) -> f64 {
        self.p_ee + self.p_eg + self.p_ge + self.p_gg
    }

    pub fn get(&self, first: Outcome, second: Outcome) -> f64 {
        match (first, second) {
            (Outcome::Excited, Outcome::Excited) => self.p_ee,
            (Outcome::Excited, Outcome::Ground) => self.p_eg,
            (Outcome::Ground, Outcome::Excited) => self.p_ge,
            (Outcome::Ground, Outcome::Ground) => self.p_gg,
        }
    }

    /// Probability that both atoms give the same click.
    pub fn agreement(&self) -> f64 {
        self.p_ee + self.p_gg
    }
}

pub fn correlation_e(jp: &JointProbs) -> f64 {
    jp.p_ee + jp.p_gg - jp.p_eg - jp.p_ge
}

/// Phase at which the equal-setting correlation `E0` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum E0Mode {
    /// `E(phi1, phi1)`.
    #[default]
    FirstPhase,
    /// Mean of `E(phi_i, phi_i)` over the three settings.
    Averaged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellResult {
    pub e12: f64,
    pub e13: f64,
    pub e23: f64,
    pub e0: f64,
    pub m0: f64,
    pub sign_e0: f64,
    pub b: f64,
}

impl BellResult {
    /// Assemble from the four correlations. `sign(0)` is taken as `+1`.
    pub fn from_correlations(e12: f64, e13: f64, e23: f64, e0: f64) -> Self {
        let sign_e0 = if e0 < 0.0 { -1.0 } else { 1.0 };
        BellResult {
            e12,
            e13,
            e23,
            e0,
            m0: (e0 + 1.0) / 2.0,
            sign_e0,
            b: (e12 - e13).abs() + sign_e0 * (e23 - e0),
        }
    }

    /// Local realism requires `B <= 0`.
    pub fn violates_local_realism(&self) -> bool {
        self.b > 0.0
    }
}

const TRACE_SLACK: f64 = 1e-10;

/// Field after one probe atom with the given click, unnormalized; its trace
/// is the probability of that click.
pub fn detect_map(
    rho: &DensityMatrix,
    ops: &MeasurementOps,
    phi: f64,
    outcome: Outcome,
) -> Result<DensityMatrix> {
    let tr = rho.trace();
    if !(tr > 0.0 && tr <= 1.0 + TRACE_SLACK) {
        return Err(Error::Validation(format!(
            "detect_map input trace {tr} outside (0, 1]"
        )));
    }
    let (a, d) = (&ops.op_a, &ops.op_d);
    let kept = sandwich(a, rho, a)?.add(&sandwich(d, rho, d)?)?;
    let cross = sandwich(a, rho, d)?.scale(Complex64::from_polar(1.0, -phi));
    let cross = cross.add(&cross.adjoint())?;
    let signed = cross.scale(Complex64::new(outcome.cross_sign(), 0.0));
    Ok(kept.add(&signed)?.scale(Complex64::new(0.5, 0.0)))
}

/// Trace of [`detect_map`] computed directly, without building the matrix.
pub fn detection_probability(
    rho: &DensityMatrix,
    ops: &MeasurementOps,
    phi: f64,
    outcome: Outcome,
) -> Result<f64> {
    let (a, d) = (&ops.op_a, &ops.op_d);
    let kept = sandwich_trace(a, rho, a)? + sandwich_trace(d, rho, d)?;
    let cross = Complex64::from_polar(1.0, -phi) * sandwich_trace(a, rho, d)?;
    // cross + conj(cross)
    Ok(0.5 * (kept.re + outcome.cross_sign() * 2.0 * cross.re))
}

fn check_normalized(rho: &DensityMatrix) -> Result<()> {
    let tr = rho.trace();
    if (tr - 1.0).abs() > 1e-9 {
        return Err(Error::Validation(format!(
            "steady-state input must have unit trace, got {tr}"
        )));
    }
    Ok(())
}

/// Joint click probabilities for a first atom analyzed at `phi_a` followed by
/// a second atom analyzed at `phi_b`, both interacting with the same `ops`.
pub fn joint_probs(
    rho_ss: &DensityMatrix,
    ops: &MeasurementOps,
    phi_a: f64,
    phi_b: f64,
) -> Result<JointProbs> {
    check_normalized(rho_ss)?;
    let mut p = [[0.0; 2]; 2];
    for (i, first) in Outcome::BOTH.into_iter().enumerate() {
        let after = detect_map(rho_ss, ops, phi_a, first)?;
        for (j, second) in Outcome::BOTH.into_iter().enumerate() {
            p[i][j] = if after.trace() > 0.0 {
                detection_probability(&after, ops, phi_b, second)?
            } else {
                0.0
            };
        }
    }
    Ok(JointProbs {
        p_ee: p[0][0],
        p_eg: p[0][1],
        p_ge: p[1][0],
        p_gg: p[1][1],
    })
}

pub fn correlation(
    rho_ss: &DensityMatrix,
    ops: &MeasurementOps,
    phi_a: f64,
    phi_b: f64,
) -> Result<f64> {
    Ok(correlation_e(&joint_probs(rho_ss, ops, phi_a, phi_b)?))
}

pub fn bell_sum(
    rho_ss: &DensityMatrix,
    ops: &MeasurementOps,
    phases: &PhaseTriple,
) -> Result<BellResult> {
    bell_sum_with(rho_ss, ops, phases, E0Mode::FirstPhase)
}

pub fn bell_sum_with(
    rho_ss: &DensityMatrix,
    ops: &MeasurementOps,
    phases: &PhaseTriple,
    e0_mode: E0Mode,
) -> Result<BellResult> {
    let PhaseTriple { phi1, phi2, phi3 } = *phases;
    let e12 = correlation(rho_ss, ops, phi1, phi2)?;
    let e13 = correlation(rho_ss, ops, phi1, phi3)?;
    let e23 = correlation(rho_ss, ops, phi2, phi3)?;
    let e0 = match e0_mode {
        E0Mode::FirstPhase => correlation(rho_ss, ops, phi1, phi1)?,
        E0Mode::Averaged => {
            (correlation(rho_ss, ops, phi1, phi1)?
                + correlation(rho_ss, ops, phi2, phi2)?
                + correlation(rho_ss, ops, phi3, phi3)?)
                / 3.0
        }
    };
    Ok(BellResult::from_correlations(e12, e13, e23, e0))
}
