//! Direct integration of the atom + field master equation.
//!
//! The joint space is `{e, g} x {|0>, .., |n_max>}` with index
//! `level * (n_max + 1) + n`, `e = 0`, `g = 1`. With the atom present the
//! generator is
//!
//! ```text
//! -i [H, rho]                       H = s+ a + s- a^dag
//! + gamma (1 + nth) L[s-] + gamma nth L[s+]
//! + kappa (1 + nth) L[a]  + kappa nth L[a^dag]
//! L[c] rho = 2 c rho c^dag - c^dag c rho - rho c^dag c
//! ```
//!
//! and with the cavity empty only the two `kappa` terms act on the field.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, FockDim};
use crate::steady_state::CavityParams;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Real sparse operator stored as `(row, col, value)` triplets.
#[derive(Debug, Clone)]
pub(crate) struct SparseOp {
    entries: Vec<(usize, usize, f64)>,
}

impl SparseOp {
    fn new(entries: Vec<(usize, usize, f64)>) -> Self {
        SparseOp { entries }
    }

    /// `c^dag c`, which is diagonal for every operator used here.
    fn number_like(&self, size: usize) -> Vec<f64> {
        let mut d = vec![0.0; size];
        for &(_, j, v) in &self.entries {
            d[j] += v * v;
        }
        d
    }

    /// `out += w * op * m`
    fn left_acc(&self, m: &DMatrix<Complex64>, w: Complex64, out: &mut DMatrix<Complex64>) {
        for c in 0..m.ncols() {
            for &(i, k, v) in &self.entries {
                out[(i, c)] += w * v * m[(k, c)];
            }
        }
    }

    /// `op * m`
    fn left(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::from_element(m.nrows(), m.ncols(), ZERO);
        self.left_acc(m, Complex64::new(1.0, 0.0), &mut out);
        out
    }

    /// `out += w * m * op^dag`
    fn right_adjoint_acc(
        &self,
        m: &DMatrix<Complex64>,
        w: Complex64,
        out: &mut DMatrix<Complex64>,
    ) {
        // (m op^T)[:, i] += v m[:, k] for each (i, k, v)
        for &(i, k, v) in &self.entries {
            let wv = w * v;
            for r in 0..m.nrows() {
                out[(r, i)] += wv * m[(r, k)];
            }
        }
    }
}

/// One dissipative channel `rate * L[c]`.
#[derive(Debug, Clone)]
struct Channel {
    rate: f64,
    op: SparseOp,
    number: Vec<f64>,
}

/// The master-equation generator for a fixed configuration.
#[derive(Debug, Clone)]
pub struct MasterEquation {
    size: usize,
    hamiltonian: Option<SparseOp>,
    channels: Vec<Channel>,
}

fn annihilation(d: usize, levels: usize) -> SparseOp {
    let mut e = Vec::new();
    for lvl in 0..levels {
        for n in 1..d {
            e.push((lvl * d + n - 1, lvl * d + n, (n as f64).sqrt()));
        }
    }
    SparseOp::new(e)
}

fn creation(d: usize, levels: usize) -> SparseOp {
    let mut e = Vec::new();
    for lvl in 0..levels {
        for n in 0..d - 1 {
            e.push((lvl * d + n + 1, lvl * d + n, ((n + 1) as f64).sqrt()));
        }
    }
    SparseOp::new(e)
}

impl MasterEquation {
    /// Generator with the pump atom inside the cavity.
    pub fn with_atom(params: &CavityParams, dim: FockDim) -> Self {
        let d = dim.size();
        let size = 2 * d;
        let mut h = Vec::new();
        for n in 0..d {
            // s+ a : |g, n> -> sqrt(n) |e, n-1>
            if n >= 1 {
                h.push((n - 1, d + n, (n as f64).sqrt()));
            }
            // s- a^dag : |e, n> -> sqrt(n+1) |g, n+1>
            if n + 1 < d {
                h.push((d + n + 1, n, ((n + 1) as f64).sqrt()));
            }
        }
        let lower = SparseOp::new((0..d).map(|n| (d + n, n, 1.0)).collect());
        let raise = SparseOp::new((0..d).map(|n| (n, d + n, 1.0)).collect());
        let mut eq = MasterEquation {
            size,
            hamiltonian: Some(SparseOp::new(h)),
            channels: Vec::new(),
        };
        eq.push_channel(params.gamma * (1.0 + params.nth), lower);
        eq.push_channel(params.gamma * params.nth, raise);
        eq.push_field_channels(params, d, 2);
        eq
    }

    /// Generator for the empty cavity.
    pub fn field_only(params: &CavityParams, dim: FockDim) -> Self {
        let d = dim.size();
        let mut eq = MasterEquation {
            size: d,
            hamiltonian: None,
            channels: Vec::new(),
        };
        eq.push_field_channels(params, d, 1);
        eq
    }

    fn push_field_channels(&mut self, params: &CavityParams, d: usize, levels: usize) {
        self.push_channel(params.kappa * (1.0 + params.nth), annihilation(d, levels));
        self.push_channel(params.kappa * params.nth, creation(d, levels));
    }

    fn push_channel(&mut self, rate: f64, op: SparseOp) {
        if rate > 0.0 {
            let number = op.number_like(self.size);
            self.channels.push(Channel { rate, op, number });
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn rhs(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let n = self.size;
        let mut out = DMatrix::from_element(n, n, ZERO);
        if let Some(h) = &self.hamiltonian {
            // -i (H rho - rho H), H real symmetric
            let m_i = Complex64::new(0.0, -1.0);
            h.left_acc(rho, m_i, &mut out);
            h.right_adjoint_acc(rho, -m_i, &mut out);
        }
        for ch in &self.channels {
            let r = Complex64::new(ch.rate, 0.0);
            let tmp = ch.op.left(rho);
            ch.op.right_adjoint_acc(&tmp, 2.0 * r, &mut out);
            for j in 0..n {
                for i in 0..n {
                    out[(i, j)] -= r * (ch.number[i] + ch.number[j]) * rho[(i, j)];
                }
            }
        }
        out
    }
}

/// Joint atom-field density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomFieldState {
    dim: FockDim,
    rho: DMatrix<Complex64>,
}

/// Atomic level of the pump or probe atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Excited,
    Ground,
}

impl AtomFieldState {
    pub fn from_matrix(dim: FockDim, rho: DMatrix<Complex64>) -> Result<Self> {
        let n = 2 * dim.size();
        if rho.nrows() != n || rho.ncols() != n {
            return Err(Error::Usage(format!(
                "joint state must be {n}x{n}, got {}x{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        Ok(AtomFieldState { dim, rho })
    }

    /// Product state `|level><level| (x) field`.
    pub fn product(level: Level, field: &DensityMatrix) -> Self {
        let dim = field.dim();
        let d = dim.size();
        let off = match level {
            Level::Excited => 0,
            Level::Ground => d,
        };
        let mut rho = DMatrix::from_element(2 * d, 2 * d, ZERO);
        rho.view_mut((off, off), (d, d)).copy_from(field.entries());
        AtomFieldState { dim, rho }
    }

    pub fn dim(&self) -> FockDim {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn index(&self, level: Level, n: usize) -> usize {
        match level {
            Level::Excited => n,
            Level::Ground => self.dim.size() + n,
        }
    }

    pub fn population(&self, level: Level, n: usize) -> f64 {
        let i = self.index(level, n);
        self.rho[(i, i)].re
    }

    pub fn level_population(&self, level: Level) -> f64 {
        (0..self.dim.size()).map(|n| self.population(level, n)).sum()
    }

    /// `<n + s+ s->`
    pub fn excitation_number(&self) -> f64 {
        (0..self.dim.size())
            .map(|n| {
                (n as f64 + 1.0) * self.population(Level::Excited, n)
                    + n as f64 * self.population(Level::Ground, n)
            })
            .sum()
    }

    /// Trace over the atom.
    pub fn field(&self) -> DensityMatrix {
        let d = self.dim.size();
        let m = self.rho.view((0, 0), (d, d)) + self.rho.view((d, d), (d, d));
        DensityMatrix::from_matrix(self.dim, m).expect("block has field dimension")
    }
}

/// State of the oracle: atom and field together while a pump atom is in
/// flight, field alone otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleState {
    Joint(AtomFieldState),
    Field(DensityMatrix),
}

impl OracleState {
    pub fn dim(&self) -> FockDim {
        match self {
            OracleState::Joint(s) => s.dim(),
            OracleState::Field(f) => f.dim(),
        }
    }

    pub fn atom_present(&self) -> bool {
        matches!(self, OracleState::Joint(_))
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        match self {
            OracleState::Joint(s) => &s.rho,
            OracleState::Field(f) => f.entries(),
        }
    }

    fn with_matrix(&self, m: DMatrix<Complex64>) -> Result<Self> {
        Ok(match self {
            OracleState::Joint(s) => OracleState::Joint(AtomFieldState::from_matrix(s.dim, m)?),
            OracleState::Field(f) => OracleState::Field(DensityMatrix::from_matrix(f.dim(), m)?),
        })
    }

    pub fn trace(&self) -> f64 {
        self.matrix().trace().re
    }

    pub fn field(&self) -> DensityMatrix {
        match self {
            OracleState::Joint(s) => s.field(),
            OracleState::Field(f) => f.clone(),
        }
    }

    fn equation(&self, params: &CavityParams) -> MasterEquation {
        if self.atom_present() {
            MasterEquation::with_atom(params, self.dim())
        } else {
            MasterEquation::field_only(params, self.dim())
        }
    }
}

/// Time derivative of the state; which terms act follows from whether an
/// atom is present.
pub fn lindblad_rhs(state: &OracleState, params: &CavityParams) -> DMatrix<Complex64> {
    state.equation(params).rhs(state.matrix())
}

pub const MAX_STEP: f64 = 0.01;
const MIN_STEPS: usize = 100;
const MAX_STEPS: usize = 500_000_000;
const TRACE_DRIFT_PER_UNIT_TIME: f64 = 1e-9;

/// Number of RK4 steps for a duration: the step is at most
/// `min(0.01, duration / 100)`.
pub fn step_count(duration: f64) -> usize {
    ((duration / MAX_STEP).ceil() as usize).max(MIN_STEPS)
}

pub(crate) fn rk4_integrate(
    eq: &MasterEquation,
    rho: &DMatrix<Complex64>,
    duration: f64,
    mut observe: impl FnMut(usize, &DMatrix<Complex64>),
) -> Result<DMatrix<Complex64>> {
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(Error::Integration(format!(
            "duration must be finite and >= 0, got {duration}"
        )));
    }
    if duration == 0.0 {
        return Ok(rho.clone());
    }
    let steps = step_count(duration);
    if steps > MAX_STEPS {
        return Err(Error::Integration(format!(
            "{steps} steps requested for duration {duration}; limit is {MAX_STEPS}"
        )));
    }
    let h = duration / steps as f64;
    if h <= f64::EPSILON * duration {
        return Err(Error::Integration(format!("step size {h:e} underflows")));
    }
    let start_trace = rho.trace().re;
    let mut r = rho.clone();
    for step in 0..steps {
        let k1 = eq.rhs(&r);
        let k2 = eq.rhs(&(&r + &k1 * Complex64::new(h / 2.0, 0.0)));
        let k3 = eq.rhs(&(&r + &k2 * Complex64::new(h / 2.0, 0.0)));
        let k4 = eq.rhs(&(&r + &k3 * Complex64::new(h, 0.0)));
        let incr = (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * Complex64::new(h / 6.0, 0.0);
        r += incr;
        r = (&r + r.adjoint()) * Complex64::new(0.5, 0.0);
        observe(step + 1, &r);
    }
    let drift = (r.trace().re - start_trace).abs();
    if drift > TRACE_DRIFT_PER_UNIT_TIME * duration.max(1.0) {
        return Err(Error::Integration(format!(
            "trace drifted by {drift:e} over duration {duration}"
        )));
    }
    Ok(r)
}

/// Fixed-step fourth-order Runge-Kutta evolution, re-symmetrized after
/// every step.
pub fn evolve(state: &OracleState, duration: f64, params: &CavityParams) -> Result<OracleState> {
    let eq = state.equation(params);
    let out = rk4_integrate(&eq, state.matrix(), duration, |_, _| {})?;
    state.with_matrix(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn params(kappa: f64, gamma: f64, nth: f64) -> CavityParams {
        CavityParams::new(1.0, kappa, gamma, nth, 1.0).unwrap()
    }

    fn excited_vacuum(n_max: usize) -> OracleState {
        let dim = FockDim::new(n_max).unwrap();
        OracleState::Joint(AtomFieldState::product(
            Level::Excited,
            &DensityMatrix::fock_state(dim, 0).unwrap(),
        ))
    }

    fn joint(s: &OracleState) -> &AtomFieldState {
        match s {
            OracleState::Joint(j) => j,
            OracleState::Field(_) => panic!("expected joint state"),
        }
    }

    #[test]
    fn zero_duration_is_identity() {
        let s = excited_vacuum(3);
        let p = params(0.1, 0.1, 0.2);
        assert_eq!(evolve(&s, 0.0, &p).unwrap(), s);
    }

    #[test]
    fn vacuum_rabi_oscillation() {
        // kappa must be positive for CavityParams; it is negligible here.
        let p = params(1e-300, 0.0, 0.0);
        let s = excited_vacuum(4);
        for t in [0.3, 1.0, 2.2] {
            let out = evolve(&s, t, &p).unwrap();
            let pe = joint(&out).level_population(Level::Excited);
            assert!((pe - t.cos().powi(2)).abs() < 1e-8, "t={t} pe={pe}");
        }
    }

    #[test]
    fn half_period_transfers_excitation() {
        let p = params(1e-300, 0.0, 0.0);
        let out = evolve(&excited_vacuum(4), FRAC_PI_2, &p).unwrap();
        let j = joint(&out);
        assert!((j.population(Level::Ground, 1) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn thermal_field_is_stationary() {
        let nth = 0.4;
        let p = params(0.05, 0.0, nth);
        let dim = FockDim::new(12).unwrap();
        let q: f64 = nth / (1.0 + nth);
        let diag: Vec<f64> = (0..13).map(|n| q.powi(n)).collect();
        let s: f64 = diag.iter().sum();
        let diag: Vec<f64> = diag.iter().map(|x| x / s).collect();
        let f = DensityMatrix::from_diagonal(dim, &diag).unwrap();
        let d = lindblad_rhs(&OracleState::Field(f), &p);
        assert!(d.norm() < 1e-15);
    }

    #[test]
    fn field_decay_from_single_photon() {
        let k = 0.1;
        let p = params(k, 0.0, 0.0);
        let dim = FockDim::new(3).unwrap();
        let s = OracleState::Field(DensityMatrix::fock_state(dim, 1).unwrap());
        for t in [0.5, 2.0, 7.0] {
            let out = evolve(&s, t, &p).unwrap();
            let p1 = out.field().get(1, 1).re;
            assert!((p1 - (-2.0 * k * t).exp()).abs() < 1e-6);
        }
    }

    #[test]
    fn atomic_decay_rate() {
        // Exponential decay exp(-2 gamma t) of |e> with the field frozen in vacuum
        // is only exact without coupling; with coupling we fit the early slope.
        let gm = 0.1;
        let p = params(1e-300, gm, 0.0);
        let dim = FockDim::new(3).unwrap();
        let st = OracleState::Joint(AtomFieldState::product(
            Level::Excited,
            &DensityMatrix::fock_state(dim, 0).unwrap(),
        ));
        let eq = MasterEquation::with_atom(&p, dim);
        // Remove the Hamiltonian to isolate the atom-reservoir channel.
        let eq_free = MasterEquation {
            hamiltonian: None,
            ..eq
        };
        let t = 3.0;
        let out = rk4_integrate(&eq_free, st.matrix(), t, |_, _| {}).unwrap();
        let pe = out[(0, 0)].re;
        let fitted = -pe.ln() / t;
        assert!((fitted - 2.0 * gm).abs() < 1e-9);
    }

    #[test]
    fn lossless_dynamics_conserves_excitations() {
        let p = params(1e-300, 0.0, 0.0);
        let dim = FockDim::new(8).unwrap();
        let diag: Vec<f64> = (0..9).map(|n| if n < 6 { 1.0 / 6.0 } else { 0.0 }).collect();
        let field = DensityMatrix::from_diagonal(dim, &diag).unwrap();
        let st = OracleState::Joint(AtomFieldState::product(Level::Excited, &field));
        let before = joint(&st).excitation_number();
        // Ten vacuum Rabi periods.
        let out = evolve(&st, 10.0 * std::f64::consts::PI, &p).unwrap();
        let after = joint(&out).excitation_number();
        assert!((before - after).abs() < 1e-8);
    }

    #[test]
    fn dissipative_evolution_stays_physical() {
        let p = params(0.05, 0.1, 0.3);
        let dim = FockDim::new(6).unwrap();
        let field = DensityMatrix::fock_state(dim, 2).unwrap();
        let st = OracleState::Joint(AtomFieldState::product(Level::Excited, &field));
        let out = evolve(&st, 4.0, &p).unwrap();
        assert!((out.trace() - 1.0).abs() < 1e-10);
        let m = out.matrix();
        assert!((m - m.adjoint()).norm() < 1e-12);
        let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let min = h.symmetric_eigenvalues().min();
        assert!(min > -1e-8);
    }

    #[test]
    fn reduced_field_stays_diagonal() {
        let p = params(0.02, 0.1, 0.15);
        let dim = FockDim::new(6).unwrap();
        let diag = [0.3, 0.25, 0.2, 0.15, 0.1, 0.0, 0.0];
        let field = DensityMatrix::from_diagonal(dim, &diag).unwrap();
        let st = OracleState::Joint(AtomFieldState::product(Level::Excited, &field));
        let out = evolve(&st, 1.7, &p).unwrap();
        assert!(out.field().max_offdiagonal() < 1e-14);
    }

    #[test]
    fn rejects_negative_duration() {
        let p = params(0.1, 0.0, 0.0);
        assert!(matches!(
            evolve(&excited_vacuum(2), -1.0, &p),
            Err(Error::Integration(_))
        ));
    }
}
