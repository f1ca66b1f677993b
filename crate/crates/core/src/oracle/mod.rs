//! Brute-force steady state of a randomly pumped cavity.
//!
//! Each pump atom enters in `|e>`, evolves jointly with the field under the
//! full master equation for the transit time and is traced out. Between
//! atoms only cavity damping acts. The field never acquires coherences
//! between photon numbers (both generators commute with photon-number
//! phase rotations), so a transit is a linear map on populations; it is
//! built once per configuration by integrating from every `|e, n>`.
//!
//! Trajectories start from the stationary state of the rate equation
//! `dP/dt = R (M - 1) P + Q P` built from that map (`Q` is cavity damping),
//! which ignores the one-atom-at-a-time constraint. Starting there rather
//! than in the vacuum removes the slow initial relaxation; the simulated
//! arrival process then corrects the remaining difference.

pub mod field;
pub mod lindblad;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, FockDim};
use crate::steady_state::{steady_state_stats, CavityParams, PhotonStatistics};

pub use field::FieldDecay;
pub use lindblad::{evolve, lindblad_rhs, AtomFieldState, Level, MasterEquation, OracleState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Arrival {
    #[default]
    Poisson,
    Regular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpModel {
    /// Arrival rate `R` in units of `g`.
    pub rate: f64,
    /// Interaction time `tau` in units of `1/g`.
    pub transit: f64,
    pub arrival: Arrival,
}

impl PumpModel {
    /// `R = 2 kappa N`, transit `tau`, Poisson arrivals.
    pub fn from_params(params: &CavityParams) -> Self {
        PumpModel {
            rate: params.pump_rate(),
            transit: params.tau,
            arrival: Arrival::Poisson,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate.is_finite() && self.rate >= 0.0) {
            return Err(Error::Config(format!("pump rate must be >= 0, got {}", self.rate)));
        }
        if !(self.transit.is_finite() && self.transit >= 0.0) {
            return Err(Error::Config(format!(
                "transit time must be >= 0, got {}",
                self.transit
            )));
        }
        if self.overlapping() {
            log::warn!(
                "rate * transit = {} >= 1: atoms will routinely queue at the cavity entrance",
                self.rate * self.transit
            );
        }
        Ok(())
    }

    /// More than one atom expected per transit time.
    pub fn overlapping(&self) -> bool {
        self.rate * self.transit >= 1.0
    }
}

/// Monte-Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleRun {
    pub trajectories: usize,
    /// Simulated time; `None` means [`DEFAULT_LIFETIMES`] photon lifetimes
    /// `1 / (2 kappa)`.
    pub horizon: Option<f64>,
    pub seed: u64,
    /// Fock truncation; `None` means `ceil(2 N) + 10`.
    pub n_max: Option<usize>,
}

impl Default for OracleRun {
    fn default() -> Self {
        OracleRun {
            trajectories: 4000,
            horizon: None,
            seed: 1,
            n_max: None,
        }
    }
}

/// Fraction of the horizon, counted from the end, over which the field is
/// averaged.
pub const AVERAGING_WINDOW: f64 = 0.2;
const MIN_LIFETIMES: f64 = 10.0;
pub const DEFAULT_LIFETIMES: f64 = 20.0;
/// Transit-map entries below this are dropped.
const MAP_CUTOFF: f64 = 1e-18;
const MAX_EVENTS: f64 = 2e8;
const MAX_ORACLE_N: usize = 400;

pub fn photon_lifetime(params: &CavityParams) -> f64 {
    1.0 / (2.0 * params.kappa)
}

impl OracleRun {
    pub fn horizon_for(&self, params: &CavityParams) -> f64 {
        self.horizon
            .unwrap_or_else(|| DEFAULT_LIFETIMES * photon_lifetime(params))
    }

    pub fn n_max_for(&self, params: &CavityParams) -> usize {
        self.n_max
            .unwrap_or_else(|| (2.0 * params.n_atoms).ceil() as usize + 10)
    }
}

/// Populations after one transit, column `n` starting from `|e, n>`.
pub fn transit_map(params: &CavityParams, transit: f64, dim: FockDim) -> Result<DMatrix<f64>> {
    let d = dim.size();
    let cols: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|n| -> Result<Vec<f64>> {
            let field = DensityMatrix::fock_state(dim, n)?;
            let start = OracleState::Joint(AtomFieldState::product(Level::Excited, &field));
            let out = evolve(&start, transit, params)?.field();
            Ok((0..d).map(|m| out.get(m, m).re.max(0.0)).collect())
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(d, d, |i, j| cols[j][i]))
}

/// Column-compressed transit map.
struct SparseMap {
    cols: Vec<(usize, Vec<f64>)>,
}

impl SparseMap {
    fn new(m: &DMatrix<f64>) -> Self {
        let cols = (0..m.ncols())
            .map(|j| {
                let col = m.column(j);
                let lo = col.iter().position(|&x| x > MAP_CUTOFF).unwrap_or(0);
                let hi = col.iter().rposition(|&x| x > MAP_CUTOFF).unwrap_or(0);
                (lo, col.iter().skip(lo).take(hi + 1 - lo).copied().collect())
            })
            .collect();
        SparseMap { cols }
    }

    fn apply(&self, p: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (pj, (lo, col)) in p.iter().zip(&self.cols) {
            if *pj == 0.0 {
                continue;
            }
            for (o, m) in out[*lo..].iter_mut().zip(col) {
                *o += m * pj;
            }
        }
    }
}

/// Null vector of `R (M - 1) + Q`, normalized.
pub fn rate_equation_state(map: &DMatrix<f64>, decay: &FieldDecay, rate: f64) -> Result<Vec<f64>> {
    let d = decay.size();
    let mut gen = DMatrix::<f64>::zeros(d, d);
    let mut unit = vec![0.0; d];
    for j in 0..d {
        unit[j] = 1.0;
        for (i, q) in decay.rhs(&unit).into_iter().enumerate() {
            gen[(i, j)] = q + rate * (map[(i, j)] - if i == j { 1.0 } else { 0.0 });
        }
        unit[j] = 0.0;
    }
    // Replace one balance equation by the normalization.
    for j in 0..d {
        gen[(0, j)] = 1.0;
    }
    let mut rhs = nalgebra::DVector::zeros(d);
    rhs[0] = 1.0;
    let p = gen
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Integration("rate equation is singular".into()))?;
    let p: Vec<f64> = p.iter().map(|x| x.max(0.0)).collect();
    let total: f64 = p.iter().sum();
    Ok(p.into_iter().map(|x| x / total).collect())
}

struct Trajectory<'a> {
    map: &'a SparseMap,
    start: &'a [f64],
    decay: &'a FieldDecay,
    pump: &'a PumpModel,
    horizon: f64,
    window_start: f64,
}

struct Accumulated {
    integral: Vec<f64>,
    empty_time: f64,
    atoms: u64,
}

impl Trajectory<'_> {
    fn free(&self, p: &mut Vec<f64>, t0: f64, t1: f64, acc: &mut Accumulated) -> Result<()> {
        let w = self.window_start;
        if t1 <= w {
            return self.decay.propagate(p, t1 - t0, None);
        }
        let from = if t0 < w {
            self.decay.propagate(p, w - t0, None)?;
            w
        } else {
            t0
        };
        acc.empty_time += t1 - from;
        self.decay.propagate(p, t1 - from, Some(&mut acc.integral))
    }

    fn run(&self, seed: u64, index: u64) -> Result<Accumulated> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let size = self.decay.size();
        let mut p = self.start.to_vec();
        let mut acc = Accumulated {
            integral: vec![0.0; size],
            empty_time: 0.0,
            atoms: 0,
        };
        let rate = self.pump.rate;
        let exp = if rate > 0.0 {
            Some(Exp::new(rate).map_err(|e| Error::Config(e.to_string()))?)
        } else {
            None
        };
        let gap = |rng: &mut ChaCha8Rng| -> f64 {
            match (&exp, self.pump.arrival) {
                (None, _) => f64::INFINITY,
                (Some(e), Arrival::Poisson) => e.sample(rng),
                (Some(_), Arrival::Regular) => 1.0 / rate,
            }
        };
        let mut nominal = match self.pump.arrival {
            Arrival::Regular if rate > 0.0 => rng.random::<f64>() / rate,
            _ => gap(&mut rng),
        };
        let mut t = 0.0;
        let mut next = vec![0.0; size];
        loop {
            let arrival = nominal.max(t);
            if arrival >= self.horizon {
                self.free(&mut p, t, self.horizon, &mut acc)?;
                break;
            }
            self.free(&mut p, t, arrival, &mut acc)?;
            self.map.apply(&p, &mut next);
            std::mem::swap(&mut p, &mut next);
            acc.atoms += 1;
            t = arrival + self.pump.transit;
            if t >= self.horizon {
                break;
            }
            nominal += gap(&mut rng);
        }
        Ok(acc)
    }
}

/// Everything a Monte-Carlo run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    /// Averaged field populations.
    pub stats: PhotonStatistics,
    /// Standard error of each population, from the spread between
    /// trajectories.
    pub std_err: Vec<f64>,
    /// Stationary state of the rate equation built from the same transit
    /// map (the trajectories' starting point).
    pub rate_equation: PhotonStatistics,
    pub atoms: u64,
}

/// Ensemble- and time-averaged field populations over the last
/// [`AVERAGING_WINDOW`] of the horizon, counting only the time the cavity
/// is empty (the field a probe atom would meet).
pub fn pump_to_steady_state(
    params: &CavityParams,
    pump: &PumpModel,
    run: &OracleRun,
) -> Result<PhotonStatistics> {
    Ok(run_oracle(params, pump, run)?.stats)
}

pub fn run_oracle(params: &CavityParams, pump: &PumpModel, run: &OracleRun) -> Result<OracleOutcome> {
    params.validate()?;
    pump.validate()?;
    let horizon = run.horizon_for(params);
    let lifetime = photon_lifetime(params);
    if !(horizon.is_finite() && horizon >= MIN_LIFETIMES * lifetime) {
        return Err(Error::Config(format!(
            "horizon {horizon} is shorter than {MIN_LIFETIMES} photon lifetimes ({})",
            MIN_LIFETIMES * lifetime
        )));
    }
    let min_traj = match pump.arrival {
        Arrival::Poisson => 100,
        Arrival::Regular => 1,
    };
    if run.trajectories < min_traj {
        return Err(Error::Config(format!(
            "{:?} arrivals need at least {min_traj} trajectories, got {}",
            pump.arrival, run.trajectories
        )));
    }
    let n_max = run.n_max_for(params);
    let expected_events = pump.rate * horizon * run.trajectories as f64;
    if expected_events > MAX_EVENTS || n_max > MAX_ORACLE_N {
        return Err(Error::Resource(format!(
            "oracle run too large: about {expected_events:.3e} atom events (limit {MAX_EVENTS:e}), \
             n_max {n_max} (limit {MAX_ORACLE_N})"
        )));
    }
    let dim = FockDim::new(n_max)?;
    let map = transit_map(params, pump.transit, dim)?;
    let decay = FieldDecay::new(params, dim.size());
    let start = rate_equation_state(&map, &decay, pump.rate)?;
    let sparse = SparseMap::new(&map);
    let traj = Trajectory {
        map: &sparse,
        start: &start,
        decay: &decay,
        pump,
        horizon,
        window_start: horizon * (1.0 - AVERAGING_WINDOW),
    };
    let results: Vec<Accumulated> = (0..run.trajectories as u64)
        .into_par_iter()
        .map(|i| traj.run(run.seed, i))
        .collect::<Result<_>>()?;
    let mut total = vec![0.0; dim.size()];
    let mut time = 0.0;
    let mut atoms = 0u64;
    for r in &results {
        for (a, b) in total.iter_mut().zip(&r.integral) {
            *a += b;
        }
        time += r.empty_time;
        atoms += r.atoms;
    }
    if time <= 0.0 {
        return Err(Error::Resource(format!(
            "cavity was never empty inside the averaging window ({atoms} atoms simulated)"
        )));
    }
    let stats = PhotonStatistics::from_unnormalized(dim, total.iter().map(|x| x / time).collect())?;
    // Ratio-estimator variance across trajectories.
    let n_traj = results.len() as f64;
    let mean_time = time / n_traj;
    let std_err = (0..dim.size())
        .map(|n| {
            let p = stats.get(n);
            let ss: f64 = results
                .iter()
                .map(|r| (r.integral[n] - p * r.empty_time).powi(2))
                .sum();
            (ss / (n_traj - 1.0).max(1.0)).sqrt() / (mean_time * n_traj.sqrt())
        })
        .collect();
    if stats.tail_mass() > 1e-6 {
        log::warn!(
            "oracle truncation n_max = {n_max} carries P_n_max = {:e}",
            stats.tail_mass()
        );
    }
    log::debug!("oracle simulated {atoms} atoms over {} trajectories", run.trajectories);
    Ok(OracleOutcome {
        stats,
        std_err,
        rate_equation: PhotonStatistics::from_unnormalized(dim, start)?,
        atoms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub l1: f64,
    /// Optional bound on `max_n |P_cf - P_oracle|`.
    pub max_abs: Option<f64>,
    /// Optional bound on the mean-photon-number difference.
    pub mean: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            l1: 1e-2,
            max_abs: None,
            mean: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub oracle_params: CavityParams,
    pub cf_params: CavityParams,
    pub pump: PumpModel,
    pub trajectories: usize,
    pub horizon: f64,
    pub seed: u64,
    pub n_max: usize,
    pub l1: f64,
    pub max_abs_dev: f64,
    pub mean_photon_oracle: f64,
    pub mean_photon_cf: f64,
    pub delta_mean: f64,
    pub oracle_tail: f64,
    /// Sum over n of the Monte-Carlo standard error of P_n; the L1 distance
    /// cannot be resolved much below this.
    pub l1_noise: f64,
    /// L1 distance between the continued fraction and the rate-equation
    /// state of the oracle's transit map.
    pub l1_cf_rate_equation: f64,
    pub atoms: u64,
    pub tolerances: Tolerances,
    pub pass: bool,
    pub p_oracle: Vec<f64>,
    pub p_cf: Vec<f64>,
}

/// Oracle and continued fraction at the same parameters.
pub fn compare_with_cf(
    params: &CavityParams,
    pump: &PumpModel,
    run: &OracleRun,
    tol: &Tolerances,
) -> Result<OracleReport> {
    compare_with_cf_params(params, params, pump, run, tol)
}

/// Oracle at `oracle_params`, continued fraction at `cf_params`.
pub fn compare_with_cf_params(
    oracle_params: &CavityParams,
    cf_params: &CavityParams,
    pump: &PumpModel,
    run: &OracleRun,
    tol: &Tolerances,
) -> Result<OracleReport> {
    let outcome = run_oracle(oracle_params, pump, run)?;
    let oracle = &outcome.stats;
    let cf = steady_state_stats(cf_params)?;
    let l1 = oracle.l1_distance(&cf);
    let l1_noise = outcome.std_err.iter().sum();
    let max_abs_dev = oracle.max_abs_deviation(&cf);
    let delta_mean = oracle.mean() - cf.mean();
    let pass = l1 < tol.l1
        && tol.max_abs.is_none_or(|m| max_abs_dev < m)
        && tol.mean.is_none_or(|m| delta_mean.abs() < m);
    Ok(OracleReport {
        oracle_params: *oracle_params,
        cf_params: *cf_params,
        pump: *pump,
        trajectories: run.trajectories,
        horizon: run.horizon_for(oracle_params),
        seed: run.seed,
        n_max: oracle.dim().n_max(),
        l1,
        max_abs_dev,
        mean_photon_oracle: oracle.mean(),
        mean_photon_cf: cf.mean(),
        delta_mean,
        oracle_tail: oracle.tail_mass(),
        l1_noise,
        l1_cf_rate_equation: outcome.rate_equation.l1_distance(&cf),
        atoms: outcome.atoms,
        tolerances: *tol,
        pass,
        p_oracle: oracle.probabilities().to_vec(),
        p_cf: cf.probabilities().to_vec(),
    })
}
