//! Photon-number populations of the empty cavity.
//!
//! With no atom inside, the diagonal of the field obeys the birth-death
//! equation
//!
//! ```text
//! dP_n/dt = 2 kappa (1 + nth) [(n+1) P_{n+1} - n P_n]
//!         + 2 kappa nth      [n P_{n-1} - (n+1) P_n]
//! ```
//!
//! truncated so that `|n_max>` has no upward transition. It is propagated
//! by uniformization, which keeps every term non-negative.

use crate::error::{Error, Result};
use crate::steady_state::CavityParams;

/// Largest uniformized rate times time handled in one chunk.
const CHUNK_LAMBDA_T: f64 = 30.0;
/// Poisson weight below which the series is cut, once past its mode.
const SERIES_TOL: f64 = 1e-17;

#[derive(Debug, Clone)]
pub struct FieldDecay {
    up: Vec<f64>,
    down: Vec<f64>,
    lambda: f64,
}

impl FieldDecay {
    pub fn new(params: &CavityParams, size: usize) -> Self {
        let k = 2.0 * params.kappa;
        let down: Vec<f64> = (0..size).map(|n| k * (1.0 + params.nth) * n as f64).collect();
        let up: Vec<f64> = (0..size)
            .map(|n| {
                if n + 1 < size {
                    k * params.nth * (n + 1) as f64
                } else {
                    0.0
                }
            })
            .collect();
        let lambda = up
            .iter()
            .zip(&down)
            .map(|(u, d)| u + d)
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        FieldDecay { up, down, lambda }
    }

    pub fn size(&self) -> usize {
        self.up.len()
    }

    /// `dP/dt`
    pub fn rhs(&self, p: &[f64]) -> Vec<f64> {
        let n = self.size();
        let mut out = vec![0.0; n];
        for i in 0..n {
            out[i] -= (self.up[i] + self.down[i]) * p[i];
            if i + 1 < n {
                out[i] += self.down[i + 1] * p[i + 1];
            }
            if i >= 1 {
                out[i] += self.up[i - 1] * p[i - 1];
            }
        }
        out
    }

    /// `(I + Q / lambda) p`
    fn jump(&self, p: &[f64], out: &mut [f64]) {
        let n = self.size();
        let inv = 1.0 / self.lambda;
        for i in 0..n {
            let mut v = p[i] * (1.0 - (self.up[i] + self.down[i]) * inv);
            if i + 1 < n {
                v += self.down[i + 1] * inv * p[i + 1];
            }
            if i >= 1 {
                v += self.up[i - 1] * inv * p[i - 1];
            }
            out[i] = v;
        }
    }

    fn chunk(&self, p: &mut Vec<f64>, t: f64, mut integ: Option<&mut Vec<f64>>) {
        let lt = self.lambda * t;
        let mut weight = (-lt).exp();
        // Poisson survival Pr[K > k], used for the time integral.
        let mut surv = 1.0 - weight;
        let mut term = p.clone();
        let mut next = vec![0.0; p.len()];
        let mut acc: Vec<f64> = term.iter().map(|x| x * weight).collect();
        if let Some(i) = integ.as_deref_mut() {
            let scale = surv / self.lambda;
            for (a, x) in i.iter_mut().zip(&term) {
                *a += scale * x;
            }
        }
        let mut k = 0usize;
        while weight > SERIES_TOL || (k as f64) < lt {
            k += 1;
            self.jump(&term, &mut next);
            std::mem::swap(&mut term, &mut next);
            weight *= lt / k as f64;
            surv -= weight;
            for (a, x) in acc.iter_mut().zip(&term) {
                *a += weight * x;
            }
            if let Some(i) = integ.as_deref_mut() {
                let scale = surv.max(0.0) / self.lambda;
                for (a, x) in i.iter_mut().zip(&term) {
                    *a += scale * x;
                }
            }
        }
        *p = acc;
    }

    /// Advance `p` by `t`; when `integral` is given, `int_0^t P(s) ds` is
    /// added to it.
    pub fn propagate(&self, p: &mut Vec<f64>, t: f64, mut integral: Option<&mut Vec<f64>>) -> Result<()> {
        if p.len() != self.size() {
            return Err(Error::Usage(format!(
                "population vector has {} entries, expected {}",
                p.len(),
                self.size()
            )));
        }
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::Integration(format!("invalid propagation time {t}")));
        }
        if t == 0.0 {
            return Ok(());
        }
        let chunks = (self.lambda * t / CHUNK_LAMBDA_T).ceil().max(1.0) as usize;
        let dt = t / chunks as f64;
        for _ in 0..chunks {
            self.chunk(p, dt, integral.as_deref_mut());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{DensityMatrix, FockDim};
    use crate::oracle::lindblad::{evolve, OracleState};

    fn params(kappa: f64, nth: f64) -> CavityParams {
        CavityParams::new(1.0, kappa, 0.0, nth, 1.0).unwrap()
    }

    #[test]
    fn matches_master_equation_integration() {
        let p = params(0.07, 0.3);
        let dim = FockDim::new(10).unwrap();
        let diag = [0.0, 0.0, 0.1, 0.2, 0.4, 0.2, 0.1, 0.0, 0.0, 0.0, 0.0];
        let rho = DensityMatrix::from_diagonal(dim, &diag).unwrap();
        let t = 5.0;
        let exact = evolve(&OracleState::Field(rho), t, &p).unwrap().field();
        let fd = FieldDecay::new(&p, dim.size());
        let mut v = diag.to_vec();
        fd.propagate(&mut v, t, None).unwrap();
        for (n, x) in v.iter().enumerate() {
            assert!((x - exact.get(n, n).re).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn integral_matches_quadrature() {
        let p = params(0.2, 0.1);
        let fd = FieldDecay::new(&p, 6);
        let start = vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        let t = 12.0;
        let mut v = start.clone();
        let mut integ = vec![0.0; 6];
        fd.propagate(&mut v, t, Some(&mut integ)).unwrap();
        // Trapezoid quadrature with fine steps.
        let steps = 4000;
        let h = t / steps as f64;
        let mut cur = start;
        let mut quad = [0.0; 6];
        for _ in 0..steps {
            let mut nxt = cur.clone();
            fd.propagate(&mut nxt, h, None).unwrap();
            for i in 0..6 {
                quad[i] += 0.5 * h * (cur[i] + nxt[i]);
            }
            cur = nxt;
        }
        for i in 0..6 {
            assert!((integ[i] - quad[i]).abs() < 1e-5, "i={i}");
        }
        assert!((integ.iter().sum::<f64>() - t).abs() < 1e-9);
    }

    #[test]
    fn long_times_reach_thermal() {
        let nth = 0.15;
        let kappa = 0.01;
        let p = params(kappa, nth);
        let fd = FieldDecay::new(&p, 30);
        let mut v = vec![0.0; 30];
        v[12] = 1.0;
        // 20 photon lifetimes
        fd.propagate(&mut v, 20.0 / (2.0 * kappa), None).unwrap();
        let q: f64 = nth / (1.0 + nth);
        let norm: f64 = (0..30).map(|n| q.powi(n)).sum();
        let l1: f64 = v
            .iter()
            .enumerate()
            .map(|(n, x)| (x - q.powi(n as i32) / norm).abs())
            .sum();
        assert!(l1 < 1e-6, "l1={l1}");
    }

    #[test]
    fn rhs_conserves_probability() {
        let fd = FieldDecay::new(&params(0.3, 0.5), 8);
        let p = [0.1, 0.2, 0.05, 0.15, 0.1, 0.2, 0.1, 0.1];
        assert!(fd.rhs(&p).iter().sum::<f64>().abs() < 1e-15);
    }
}
