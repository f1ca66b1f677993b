//! Steady-state photon statistics of the pumped, dissipative cavity.
//!
//! The photon-number distribution obeys a three-term balance between
//! neighbouring Fock states. Writing `v_n = P_n / P_{n-1}`, it is solved by
//! the backward continued fraction
//!
//! ```text
//! v_n = f3(n) / (f2(n) + f1(n) v_{n+1})
//! f1(n) = (Z_n + C_n) / kappa
//! f2(n) = -2N + (Y_n + B_n) / kappa
//! f3(n) = -(X_n + A_n) / kappa
//! ```
//!
//! where `A, B, C` describe the thermal field reservoir and `X, Y, Z` the
//! gain from pump atoms, including atomic decay and cavity loss during each
//! atom's flight. All rates are in units of the coupling `g` and all times
//! in units of `1/g`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockDim;

/// One physical configuration of pump, cavity and reservoir.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    /// Atoms per photon lifetime, `N = R / 2 kappa`.
    #[serde(rename = "N")]
    pub n_atoms: f64,
    /// Cavity decay `kappa / g`.
    pub kappa: f64,
    /// Atomic decay `gamma / g`.
    pub gamma: f64,
    /// Thermal photon number of the reservoir.
    pub nth: f64,
    /// Atom transit time `g tau`, i.e. the Rabi angle.
    pub tau: f64,
}

impl CavityParams {
    pub fn new(n_atoms: f64, kappa: f64, gamma: f64, nth: f64, tau: f64) -> Result<Self> {
        let p = CavityParams {
            n_atoms,
            kappa,
            gamma,
            nth,
            tau,
        };
        p.validate()?;
        Ok(p)
    }

    /// Same configuration with `tau` chosen so that `tau * sqrt(N) = d`.
    pub fn with_pump_parameter(mut self, d: f64) -> Result<Self> {
        if self.n_atoms <= 0.0 {
            return Err(Error::Config(
                "pump parameter D is undefined for N = 0".into(),
            ));
        }
        self.tau = d / self.n_atoms.sqrt();
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("N", self.n_atoms),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("nth", self.nth),
            ("tau", self.tau),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if self.kappa <= 0.0 {
            return Err(Error::Config(
                "kappa must be > 0 (the pump rate and the recursion are defined through kappa)"
                    .into(),
            ));
        }
        Ok(())
    }

    /// Pump rate `R = 2 kappa N`.
    pub fn pump_rate(&self) -> f64 {
        2.0 * self.kappa * self.n_atoms
    }

    /// Pump parameter `D = g tau sqrt(N)`.
    pub fn pump_parameter(&self) -> f64 {
        self.tau * self.n_atoms.sqrt()
    }
}

/// Field-reservoir coefficients `A_n, B_n, C_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReservoirCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

pub fn reservoir_coeffs(params: &CavityParams, n: usize) -> ReservoirCoeffs {
    let n = n as f64;
    let k = params.kappa;
    let nth = params.nth;
    ReservoirCoeffs {
        a: 2.0 * n * k * nth,
        b: -2.0 * k * (n + nth + 2.0 * n * nth),
        c: 2.0 * (n + 1.0) * (nth + 1.0) * k,
    }
}

/// Gain coefficients `X_n, Y_n, Z_n` contributed by the pump atoms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainCoeffs {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Which of the two in-flight correction functions to evaluate.
///
/// `One` samples the oscillation at `m = n + 2` and takes the upper signs,
/// `Two` samples at `m = n + 1` with the lower signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    One,
    Two,
}

pub fn flight_correction(params: &CavityParams, n: usize, branch: Branch) -> f64 {
    flight_correction_at(params, n as f64, branch)
}

// Defined for real n >= -1; the gain coefficient Y_0 needs n = -1.
fn flight_correction_at(params: &CavityParams, n: f64, branch: Branch) -> f64 {
    let k = params.kappa;
    let gm = params.gamma;
    let tau = params.tau;
    let (m, sign) = match branch {
        Branch::One => (n + 2.0, 1.0),
        Branch::Two => (n + 1.0, -1.0),
    };
    let hi = (n + 2.0).sqrt();
    let lo = (n + 1.0).sqrt();
    let sum = hi + lo;
    // sqrt(n+2) - sqrt(n+1), and its square, without cancellation.
    let diff = 1.0 / sum;
    let diff_sq = diff * diff;
    let sum_sq = sum * sum;

    let phase = 2.0 * m.sqrt() * tau;
    let (s, c) = phase.sin_cos();

    let first = (k / 4.0) / diff_sq
        * ((gm / k) * diff * s - gm * c - sum_sq * diff * s);
    let second = (k / 4.0) / sum_sq
        * (sign * (gm / k) * sum * s - gm * c - sign * diff_sq * sum * s);
    first + second
}

pub fn gain_coeffs(params: &CavityParams, n: usize) -> GainCoeffs {
    let r = params.pump_rate();
    let k = params.kappa;
    let gm = params.gamma;
    let tau = params.tau;
    let nf = n as f64;

    // exp{-[gamma + (2n + j) kappa] tau} for j = -1, 1, 3
    let decay = |j: f64| (-(gm + (2.0 * nf + j) * k) * tau).exp();
    let e_m1 = decay(-1.0);
    let e_p1 = decay(1.0);
    let e_p3 = decay(3.0);

    let x = if n == 0 {
        0.0
    } else {
        r * (nf.sqrt() * tau).sin().powi(2) * e_m1
    };

    let h = 0.5 * (gm / k + 2.0 * nf + 1.0);
    let f1_prev = flight_correction_at(params, nf - 1.0, Branch::One);
    let f2_prev = flight_correction_at(params, nf - 1.0, Branch::Two);
    let cos_sq = ((nf + 1.0).sqrt() * tau).cos().powi(2);
    // h (e_m1 - e_p1) collects the two h-terms; it is small when kappa tau is.
    let y = 0.5
        * r
        * ((2.0 * cos_sq + f1_prev) * e_p1 - f2_prev * e_m1
            + h * e_m1 * -(-2.0 * k * tau).exp_m1());

    let h3 = 0.5 * (gm / k + 2.0 * nf + 3.0);
    let f1 = flight_correction_at(params, nf, Branch::One);
    let f2 = flight_correction_at(params, nf, Branch::Two);
    let z = 0.5
        * r
        * (f2 * e_p1 - f1 * e_p3 + h3 * e_p1 * -(-2.0 * k * tau).exp_m1());

    GainCoeffs { x, y, z }
}

/// The three recursion coefficients at photon number `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecursionCoeffs {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

pub fn recursion_coeffs(params: &CavityParams, n: usize) -> RecursionCoeffs {
    let k = params.kappa;
    let res = reservoir_coeffs(params, n);
    let gain = gain_coeffs(params, n);
    RecursionCoeffs {
        f1: (gain.z + res.c) / k,
        f2: -2.0 * params.n_atoms + (gain.y + res.b) / k,
        f3: -(gain.x + res.a) / k,
    }
}

const DEGENERATE_DENOMINATOR: f64 = 1e-300;
const ROUNDOFF_NEGATIVE: f64 = -1e-9;
const ROUNDOFF_ZERO: f64 = 1e-12;

/// Ratios `v_1 ..= v_{n_max}` by backward recursion seeded with
/// `v_{n_max + 1} = 0`. Element `k` of the result is `v_{k+1}`.
pub fn continued_fraction(params: &CavityParams, dim: FockDim) -> Result<Vec<f64>> {
    params.validate()?;
    let n_max = dim.n_max();
    let mut ratios = vec![0.0; n_max];
    let mut next = 0.0;
    for n in (1..=n_max).rev() {
        let f = recursion_coeffs(params, n);
        let den = f.f2 + f.f1 * next;
        if !den.is_finite() || den.abs() < DEGENERATE_DENOMINATOR {
            return Err(Error::NumericalDegeneracy { n, denominator: den });
        }
        let mut v = f.f3 / den;
        if !v.is_finite() {
            return Err(Error::NumericalDegeneracy { n, denominator: den });
        }
        if v < ROUNDOFF_NEGATIVE {
            return Err(Error::ModelViolation { n, value: v });
        }
        if v < ROUNDOFF_ZERO {
            v = 0.0;
        }
        ratios[n - 1] = v;
        next = v;
    }
    Ok(ratios)
}

/// Truncation control for [`steady_state_stats_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Starting n_max; `None` means `ceil(4 N) + 40`.
    pub initial: Option<usize>,
    /// Largest allowed n_max before giving up.
    pub max_n: usize,
    /// Max absolute change of any P_n when n_max is doubled.
    pub stability_tol: f64,
    /// Upper bound on P_{n_max}.
    pub tail_tol: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            initial: None,
            max_n: 1 << 16,
            stability_tol: 1e-10,
            tail_tol: 1e-10,
        }
    }
}

impl TruncationPolicy {
    pub fn initial_n_max(&self, params: &CavityParams) -> usize {
        self.initial
            .unwrap_or_else(|| (4.0 * params.n_atoms).ceil() as usize + 40)
            .max(1)
    }
}

/// Steady-state photon-number distribution on a truncated Fock basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonStatistics {
    dim: FockDim,
    p: Vec<f64>,
}

impl PhotonStatistics {
    /// Validates normalization (1e-10) and sign (-1e-12); tiny negatives are
    /// clamped and the result renormalized.
    pub fn new(dim: FockDim, p: Vec<f64>) -> Result<Self> {
        if p.len() != dim.size() {
            return Err(Error::Usage(format!(
                "distribution has {} entries, expected {}",
                p.len(),
                dim.size()
            )));
        }
        if let Some((n, &v)) = p.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Validation(format!("P_{n} is not finite ({v})")));
        }
        if let Some((n, &v)) = p.iter().enumerate().find(|(_, &v)| v < -1e-12) {
            return Err(Error::Validation(format!("P_{n} = {v:e} is negative")));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::Validation(format!(
                "distribution sums to {total}, expected 1"
            )));
        }
        Self::from_unnormalized(dim, p)
    }

    /// Clamp negatives to zero and divide by the sum.
    pub fn from_unnormalized(dim: FockDim, mut p: Vec<f64>) -> Result<Self> {
        if p.len() != dim.size() {
            return Err(Error::Usage(format!(
                "distribution has {} entries, expected {}",
                p.len(),
                dim.size()
            )));
        }
        for v in p.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let total: f64 = p.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::Validation(format!(
                "cannot normalize distribution with total {total}"
            )));
        }
        for v in p.iter_mut() {
            *v /= total;
        }
        Ok(PhotonStatistics { dim, p })
    }

    #[cfg(test)]
    pub(crate) fn new_unchecked(dim: FockDim, p: Vec<f64>) -> Self {
        PhotonStatistics { dim, p }
    }

    /// Geometric Bose-Einstein distribution with mean `nth`.
    pub fn thermal(dim: FockDim, nth: f64) -> Result<Self> {
        let q = nth / (1.0 + nth);
        let p = (0..dim.size()).map(|n| q.powi(n as i32)).collect();
        Self::from_unnormalized(dim, p)
    }

    pub fn dim(&self) -> FockDim {
        self.dim
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn get(&self, n: usize) -> f64 {
        self.p.get(n).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.p.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.p
            .iter()
            .enumerate()
            .map(|(n, p)| (n as f64 - mean).powi(2) * p)
            .sum()
    }

    /// `P_{n_max}`.
    pub fn tail_mass(&self) -> f64 {
        *self.p.last().unwrap_or(&0.0)
    }

    /// Mass strictly above photon number `n`.
    pub fn mass_above(&self, n: usize) -> f64 {
        self.p.iter().skip(n + 1).sum()
    }

    /// L1 distance; the shorter distribution is padded with zeros.
    pub fn l1_distance(&self, other: &PhotonStatistics) -> f64 {
        let len = self.p.len().max(other.p.len());
        (0..len).map(|n| (self.get(n) - other.get(n)).abs()).sum()
    }

    pub fn max_abs_deviation(&self, other: &PhotonStatistics) -> f64 {
        let len = self.p.len().max(other.p.len());
        (0..len)
            .map(|n| (self.get(n) - other.get(n)).abs())
            .fold(0.0, f64::max)
    }

    /// Drop photon numbers above the new truncation and renormalize.
    pub fn truncated(&self, dim: FockDim) -> Result<Self> {
        if dim.size() > self.p.len() {
            let mut p = self.p.clone();
            p.resize(dim.size(), 0.0);
            return Ok(PhotonStatistics { dim, p });
        }
        Self::from_unnormalized(dim, self.p[..dim.size()].to_vec())
    }

    /// Smallest truncation whose discarded mass is below `tol`, renormalized.
    pub fn trimmed(&self, tol: f64) -> Result<Self> {
        let mut above = 0.0;
        let mut keep = self.p.len() - 1;
        while keep > 1 && above + self.p[keep] < tol {
            above += self.p[keep];
            keep -= 1;
        }
        self.truncated(FockDim::new(keep)?)
    }
}

/// Normalized `P_n = P_0 prod_{m <= n} v_m` with the product carried as a
/// logarithm and a sign, so that neither underflow nor overflow occurs.
pub fn distribution_from_ratios(dim: FockDim, ratios: &[f64]) -> Result<PhotonStatistics> {
    if ratios.len() != dim.n_max() {
        return Err(Error::Usage(format!(
            "{} ratios supplied for {dim}",
            ratios.len()
        )));
    }
    let mut log_mag = Vec::with_capacity(dim.size());
    let mut signs = Vec::with_capacity(dim.size());
    let mut ln = 0.0f64;
    let mut sign = 1.0f64;
    log_mag.push(ln);
    signs.push(sign);
    for &v in ratios {
        if v == 0.0 {
            ln = f64::NEG_INFINITY;
        } else {
            ln += v.abs().ln();
            sign *= v.signum();
        }
        log_mag.push(ln);
        signs.push(sign);
    }
    let peak = log_mag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let p = log_mag
        .iter()
        .zip(&signs)
        .map(|(l, s)| s * (l - peak).exp())
        .collect();
    PhotonStatistics::from_unnormalized(dim, p)
}

pub fn steady_state_at(params: &CavityParams, dim: FockDim) -> Result<PhotonStatistics> {
    let ratios = continued_fraction(params, dim)?;
    distribution_from_ratios(dim, &ratios)
}

pub fn steady_state_stats(params: &CavityParams) -> Result<PhotonStatistics> {
    steady_state_stats_with(params, &TruncationPolicy::default())
}

/// Grow n_max geometrically until doubling it moves no P_n by more than
/// `stability_tol` and `P_{n_max}` is below `tail_tol`. Returns the smaller
/// of the last two (verified) truncations.
pub fn steady_state_stats_with(
    params: &CavityParams,
    policy: &TruncationPolicy,
) -> Result<PhotonStatistics> {
    params.validate()?;
    let mut n_max = policy.initial_n_max(params);
    if n_max > policy.max_n {
        return Err(Error::Resource(format!(
            "initial truncation {n_max} exceeds the limit {}",
            policy.max_n
        )));
    }
    let mut current = steady_state_at(params, FockDim::new(n_max)?)?;
    loop {
        let doubled = 2 * n_max;
        if doubled > policy.max_n {
            return Err(Error::Resource(format!(
                "truncation did not stabilize below n_max = {} (last change check at {n_max})",
                policy.max_n
            )));
        }
        let next = steady_state_at(params, FockDim::new(doubled)?)?;
        let change = current.max_abs_deviation(&next);
        if change < policy.stability_tol && current.tail_mass() < policy.tail_tol {
            return Ok(current);
        }
        log::debug!("n_max {n_max} -> {doubled}: max change {change:e}");
        current = next;
        n_max = doubled;
    }
}

/// Photon numbers `n <= n_max` at which the pump atoms nearly stop emitting
/// (`|sin(g tau sqrt(n + 1))| < tol`). Such trapped states make the
/// distribution jump under small changes of `tau`.
pub fn trapped_states(params: &CavityParams, dim: FockDim, tol: f64) -> Vec<usize> {
    (0..=dim.n_max())
        .filter(|&n| (params.tau * ((n + 1) as f64).sqrt()).sin().abs() < tol)
        .collect()
}
