//! JSON config files for the subcommands. Keys are the long flag names.

use std::fs;
use std::path::{Path, PathBuf};

use maser_core::oracle::OracleRun;
use maser_core::sweep::{Axis, Format};
use maser_core::{Arrival, CavityParams, E0Mode, Error, Mode, Result, SweepConfig, Tolerances};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::{OracleArgs, SweepArgs};

fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn parse_json_enum<T: DeserializeOwned>(what: &str, s: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| Error::Config(format!("unknown {what} '{s}'")))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFileConfig {
    pub mode: Option<String>,
    #[serde(rename = "N")]
    pub n: Option<f64>,
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    pub nth: Option<f64>,
    pub axis: Option<String>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub steps: Option<usize>,
    pub phi1: Option<f64>,
    pub phi2: Option<f64>,
    pub phi3: Option<f64>,
    pub tau: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    #[serde(alias = "e0-mode")]
    pub e0_mode: Option<String>,
    #[serde(default, alias = "include-min")]
    pub include_min: bool,
    #[serde(default)]
    pub timing: bool,
}

impl SweepFileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        load(path)
    }

    pub fn merge(self, a: SweepArgs) -> Self {
        SweepFileConfig {
            mode: a.mode.or(self.mode),
            n: a.n.or(self.n),
            kappa: a.kappa.or(self.kappa),
            gamma: a.gamma.or(self.gamma),
            nth: a.nth.or(self.nth),
            axis: a.axis.or(self.axis),
            min: a.min.or(self.min),
            max: a.max.or(self.max),
            steps: a.steps.or(self.steps),
            phi1: a.phi1.or(self.phi1),
            phi2: a.phi2.or(self.phi2),
            phi3: a.phi3.or(self.phi3),
            tau: a.tau.or(self.tau),
            out: a.out.or(self.out),
            format: a.format.or(self.format),
            jobs: a.jobs.or(self.jobs),
            seed: a.seed.or(self.seed),
            e0_mode: a.e0_mode.or(self.e0_mode),
            include_min: a.include_min || self.include_min,
            timing: a.timing || self.timing,
        }
    }

    pub fn resolve(self) -> Result<(SweepConfig, Option<PathBuf>, Format)> {
        let mode: Mode = match &self.mode {
            Some(m) => m.parse()?,
            None => Mode::default(),
        };
        let mut c = SweepConfig::preset(mode);
        let b = &mut c.base;
        b.n_atoms = self.n.unwrap_or(b.n_atoms);
        b.kappa = self.kappa.unwrap_or(b.kappa);
        b.gamma = self.gamma.unwrap_or(b.gamma);
        b.nth = self.nth.unwrap_or(b.nth);
        b.tau = self.tau.unwrap_or(b.tau);
        if let Some(a) = &self.axis {
            c.axis = a.parse::<Axis>()?;
        }
        c.axis_min = self.min.unwrap_or(c.axis_min);
        c.axis_max = self.max.unwrap_or(c.axis_max);
        c.steps = self.steps.unwrap_or(c.steps);
        c.phases.phi1 = self.phi1.unwrap_or(c.phases.phi1);
        c.phases.phi2 = self.phi2.unwrap_or(c.phases.phi2);
        c.phases.phi3 = self.phi3.unwrap_or(c.phases.phi3);
        c.jobs = self.jobs.unwrap_or(c.jobs);
        c.seed = self.seed.unwrap_or(c.seed);
        if let Some(m) = &self.e0_mode {
            c.e0_mode = parse_json_enum::<E0Mode>("e0 mode", m)?;
        }
        c.include_min = self.include_min;
        c.timing = self.timing;
        let format = match (&self.format, &self.out) {
            (Some(f), _) => f.parse()?,
            (None, Some(p)) if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) => {
                Format::Json
            }
            _ => Format::Csv,
        };
        c.validate()?;
        Ok((c, self.out, format))
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleFileConfig {
    #[serde(rename = "N")]
    pub n: Option<f64>,
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    pub nth: Option<f64>,
    #[serde(rename = "D")]
    pub d: Option<f64>,
    pub trajectories: Option<usize>,
    pub horizon: Option<f64>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    #[serde(alias = "n-max")]
    pub n_max: Option<usize>,
    pub arrival: Option<String>,
    pub out: Option<PathBuf>,
}

type OracleSetup = (CavityParams, OracleRun, Tolerances, Arrival, Option<PathBuf>);

impl OracleFileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        load(path)
    }

    pub fn merge(self, a: OracleArgs) -> Self {
        OracleFileConfig {
            n: a.n.or(self.n),
            kappa: a.kappa.or(self.kappa),
            gamma: a.gamma.or(self.gamma),
            nth: a.nth.or(self.nth),
            d: a.d.or(self.d),
            trajectories: a.trajectories.or(self.trajectories),
            horizon: a.horizon.or(self.horizon),
            seed: a.seed.or(self.seed),
            tol: a.tol.or(self.tol),
            n_max: a.n_max.or(self.n_max),
            arrival: a.arrival.or(self.arrival),
            out: a.out.or(self.out),
        }
    }

    /// Unset values default to N = 5, kappa = 1e-3, gamma = nth = 0, D = 2.
    pub fn resolve(self) -> Result<OracleSetup> {
        let params = CavityParams::new(
            self.n.unwrap_or(5.0),
            self.kappa.unwrap_or(1e-3),
            self.gamma.unwrap_or(0.0),
            self.nth.unwrap_or(0.0),
            0.0,
        )?
        .with_pump_parameter(self.d.unwrap_or(2.0))?;
        let defaults = OracleRun::default();
        let run = OracleRun {
            trajectories: self.trajectories.unwrap_or(defaults.trajectories),
            horizon: self.horizon,
            seed: self.seed.unwrap_or(defaults.seed),
            n_max: self.n_max,
        };
        let tol = Tolerances {
            l1: self.tol.unwrap_or(Tolerances::default().l1),
            ..Tolerances::default()
        };
        let arrival = match &self.arrival {
            Some(a) => parse_json_enum::<Arrival>("arrival model", a)?,
            None => Arrival::default(),
        };
        Ok((params, run, tol, arrival, self.out))
    }
}
