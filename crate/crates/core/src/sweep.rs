//! Parameter sweeps of the Bell sum, peak finding and CSV/JSON output.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{bell_sum_with, BellResult, E0Mode, PhaseTriple};
use crate::error::{Error, Result};
use crate::fock::{diag_to_density, make_measurement_ops, FockDim};
use crate::steady_state::{steady_state_stats, CavityParams, PhotonStatistics};

/// Mass dropped from the photon-number tail before the Bell evaluation.
const BELL_TRIM: f64 = 1e-15;
/// Extra Fock levels kept for the photons emitted by the two probe atoms.
const PROBE_HEADROOM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Maser,
    Laser,
}

impl Mode {
    /// `(gamma, nth)` of the preset.
    pub fn reservoir(self) -> (f64, f64) {
        match self {
            Mode::Maser => (0.0, 0.15),
            Mode::Laser => (0.1, 0.0),
        }
    }

    /// Preset parameters; `tau` corresponds to `D = 1`.
    pub fn base_params(self) -> CavityParams {
        let (gamma, nth) = self.reservoir();
        let (n, kappa) = match self {
            Mode::Maser => (20.0, 1e-7),
            Mode::Laser => (100.0, 1e-2),
        };
        CavityParams {
            n_atoms: n,
            kappa,
            gamma,
            nth,
            tau: 1.0 / f64::sqrt(n),
        }
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "maser" => Ok(Mode::Maser),
            "laser" => Ok(Mode::Laser),
            other => Err(Error::Config(format!(
                "unknown mode '{other}' (expected maser or laser)"
            ))),
        }
    }
}

/// Parameter varied along a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Axis {
    /// `D = g tau sqrt(N)`; `tau` is derived.
    #[default]
    D,
    #[serde(rename = "tau")]
    Tau,
    N,
    #[serde(rename = "kappa")]
    Kappa,
    #[serde(rename = "gamma")]
    Gamma,
    #[serde(rename = "nth")]
    Nth,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::D => "D",
            Axis::Tau => "tau",
            Axis::N => "N",
            Axis::Kappa => "kappa",
            Axis::Gamma => "gamma",
            Axis::Nth => "nth",
        }
    }

    /// `base` with this axis set to `value`. Along the `N` axis, `D` is
    /// held at the value implied by `base`.
    pub fn apply(self, base: &CavityParams, value: f64) -> Result<CavityParams> {
        let mut p = *base;
        match self {
            Axis::D => return p.with_pump_parameter(value),
            Axis::Tau => p.tau = value,
            Axis::N => {
                let d = base.pump_parameter();
                p.n_atoms = value;
                if value > 0.0 {
                    p.tau = d / value.sqrt();
                }
            }
            Axis::Kappa => p.kappa = value,
            Axis::Gamma => p.gamma = value,
            Axis::Nth => p.nth = value,
        }
        p.validate()?;
        Ok(p)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "D" | "d" => Ok(Axis::D),
            "tau" => Ok(Axis::Tau),
            "N" | "n" => Ok(Axis::N),
            "kappa" => Ok(Axis::Kappa),
            "gamma" => Ok(Axis::Gamma),
            "nth" => Ok(Axis::Nth),
            other => Err(Error::Config(format!("unknown sweep axis '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub mode: Mode,
    pub base: CavityParams,
    pub axis: Axis,
    pub axis_min: f64,
    pub axis_max: f64,
    pub steps: usize,
    pub phases: PhaseTriple,
    pub e0_mode: E0Mode,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    pub seed: u64,
    /// Sample `[min, max]` instead of `(min, max]`.
    pub include_min: bool,
    /// Record per-point wall time; off by default so that output is
    /// reproducible byte for byte.
    pub timing: bool,
}

impl SweepConfig {
    pub fn preset(mode: Mode) -> Self {
        SweepConfig {
            mode,
            base: mode.base_params(),
            axis: Axis::D,
            axis_min: 0.0,
            axis_max: 20.0,
            steps: 1000,
            phases: PhaseTriple::default(),
            e0_mode: E0Mode::FirstPhase,
            jobs: 0,
            seed: 0,
            include_min: false,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.axis_min.is_finite() && self.axis_max.is_finite()) {
            return Err(Error::Config("axis bounds must be finite".into()));
        }
        if self.axis_min >= self.axis_max {
            return Err(Error::Config(format!(
                "axis_min ({}) must be below axis_max ({})",
                self.axis_min, self.axis_max
            )));
        }
        if self.steps < 2 {
            return Err(Error::Config(format!(
                "steps must be >= 2, got {}",
                self.steps
            )));
        }
        let PhaseTriple { phi1, phi2, phi3 } = self.phases;
        if ![phi1, phi2, phi3].iter().all(|p| p.is_finite()) {
            return Err(Error::Config("phases must be finite".into()));
        }
        if self.axis == Axis::D && self.base.n_atoms <= 0.0 {
            return Err(Error::Config("a D sweep needs N > 0".into()));
        }
        Ok(())
    }

    pub fn axis_values(&self) -> Vec<f64> {
        let span = self.axis_max - self.axis_min;
        if self.include_min {
            let h = span / (self.steps - 1) as f64;
            (0..self.steps)
                .map(|i| {
                    if i + 1 == self.steps {
                        self.axis_max
                    } else {
                        self.axis_min + h * i as f64
                    }
                })
                .collect()
        } else {
            let h = span / self.steps as f64;
            (1..=self.steps)
                .map(|i| {
                    if i == self.steps {
                        self.axis_max
                    } else {
                        self.axis_min + h * i as f64
                    }
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(with = "nullable_f64")]
    pub axis_value: f64,
    #[serde(with = "nullable_f64")]
    pub tau: f64,
    #[serde(with = "nullable_f64")]
    pub e12: f64,
    #[serde(with = "nullable_f64")]
    pub e13: f64,
    #[serde(with = "nullable_f64")]
    pub e23: f64,
    #[serde(with = "nullable_f64")]
    pub e0: f64,
    #[serde(with = "nullable_f64")]
    pub b: f64,
    #[serde(with = "nullable_f64")]
    pub mean_photon: f64,
    pub n_max: usize,
    #[serde(with = "nullable_f64")]
    pub wall_time: f64,
    pub status: String,
}

pub const FIELDS: [&str; 11] = [
    "axis_value",
    "tau",
    "e12",
    "e13",
    "e23",
    "e0",
    "b",
    "mean_photon",
    "n_max",
    "wall_time",
    "status",
];

pub const STATUS_OK: &str = "ok";

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK
    }

    fn failed(axis_value: f64, tau: f64, err: &Error) -> Self {
        SweepRow {
            axis_value,
            tau,
            e12: f64::NAN,
            e13: f64::NAN,
            e23: f64::NAN,
            e0: f64::NAN,
            b: f64::NAN,
            mean_photon: f64::NAN,
            n_max: 0,
            wall_time: 0.0,
            status: format!("error {}: {}", err.kind(), err),
        }
    }
}

/// Non-finite floats travel through JSON as `null`.
mod nullable_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// Bell sum for a given steady state, with the probe atoms interacting for
/// the pump transit time.
pub fn bell_for_stats(
    params: &CavityParams,
    stats: &PhotonStatistics,
    phases: &PhaseTriple,
    e0_mode: E0Mode,
) -> Result<BellResult> {
    let trimmed = stats.trimmed(BELL_TRIM)?;
    let dim = FockDim::new(trimmed.dim().n_max() + PROBE_HEADROOM)?;
    let padded = trimmed.truncated(dim)?;
    let rho = diag_to_density(&padded)?;
    let ops = make_measurement_ops(params.tau, dim)?;
    bell_sum_with(&rho, &ops, phases, e0_mode)
}

/// Steady state and Bell sum at one parameter point.
pub fn evaluate_point(
    params: &CavityParams,
    phases: &PhaseTriple,
    e0_mode: E0Mode,
) -> Result<(PhotonStatistics, BellResult)> {
    let stats = steady_state_stats(params)?;
    let bell = bell_for_stats(params, &stats, phases, e0_mode)?;
    Ok((stats, bell))
}

fn sweep_point(config: &SweepConfig, value: f64) -> SweepRow {
    let start = Instant::now();
    let params = match config.axis.apply(&config.base, value) {
        Ok(p) => p,
        Err(e) => return SweepRow::failed(value, f64::NAN, &e),
    };
    match evaluate_point(&params, &config.phases, config.e0_mode) {
        Ok((stats, bell)) => SweepRow {
            axis_value: value,
            tau: params.tau,
            e12: bell.e12,
            e13: bell.e13,
            e23: bell.e23,
            e0: bell.e0,
            b: bell.b,
            mean_photon: stats.mean(),
            n_max: stats.dim().n_max(),
            wall_time: if config.timing {
                start.elapsed().as_secs_f64()
            } else {
                0.0
            },
            status: STATUS_OK.into(),
        },
        Err(e) => {
            log::warn!("{} = {value}: {e}", config.axis);
            SweepRow::failed(value, params.tau, &e)
        }
    }
}

/// One row per axis value, in axis order. Failures at individual points
/// are recorded in the row status.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    config.base.validate()?;
    let values = config.axis_values();
    if config.jobs == 1 {
        return Ok(values.iter().map(|&v| sweep_point(config, v)).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::Resource(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| values.par_iter().map(|&v| sweep_point(config, v)).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub index: usize,
    pub axis_value: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakSummary {
    pub peaks: Vec<Peak>,
    pub global_max: Option<Peak>,
    pub second_peak: Option<Peak>,
}

/// Interior local maxima of `B`. A flat top counts once, at its smallest
/// axis value, when both neighbours of the plateau are strictly lower.
/// Rows whose `B` is not finite are skipped.
pub fn find_peaks(rows: &[SweepRow]) -> Result<PeakSummary> {
    if rows.len() < 3 {
        return Err(Error::Usage(format!(
            "peak finding needs at least 3 rows, got {}",
            rows.len()
        )));
    }
    let pts: Vec<(usize, &SweepRow)> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.b.is_finite())
        .collect();
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < pts.len() {
        let b = pts[i].1.b;
        let mut j = i;
        while j + 1 < pts.len() && pts[j + 1].1.b == b {
            j += 1;
        }
        if j + 1 < pts.len() && pts[i - 1].1.b < b && pts[j + 1].1.b < b {
            peaks.push(Peak {
                index: pts[i].0,
                axis_value: pts[i].1.axis_value,
                b,
            });
        }
        i = j + 1;
    }
    let global_max = pts
        .iter()
        .fold(None::<(usize, &SweepRow)>, |best, &(k, r)| match best {
            Some((_, br)) if br.b >= r.b => best,
            _ => Some((k, r)),
        })
        .map(|(k, r)| Peak {
            index: k,
            axis_value: r.axis_value,
            b: r.b,
        });
    let second_peak = peaks.get(1).copied();
    Ok(PeakSummary {
        peaks,
        global_max,
        second_peak,
    })
}

/// `x` with 12 significant digits, `%g` style.
pub fn format_sig(x: f64) -> String {
    const DIGITS: usize = 12;
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..DIGITS as i32).contains(&exp) {
        let decimals = (DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!(
                "unknown format '{other}' (expected csv or json)"
            ))),
        }
    }
}

/// Header information written ahead of the rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub version: String,
    pub seed: u64,
    pub config: serde_json::Value,
}

impl Metadata {
    pub fn for_config(config: &SweepConfig) -> Self {
        Metadata {
            version: env!("CARGO_PKG_VERSION").into(),
            seed: config.seed,
            config: serde_json::to_value(config).expect("config serializes"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFile {
    pub metadata: Metadata,
    pub rows: Vec<SweepRow>,
}

fn row_record(r: &SweepRow) -> [String; 11] {
    [
        format_sig(r.axis_value),
        format_sig(r.tau),
        format_sig(r.e12),
        format_sig(r.e13),
        format_sig(r.e23),
        format_sig(r.e0),
        format_sig(r.b),
        format_sig(r.mean_photon),
        r.n_max.to_string(),
        format_sig(r.wall_time),
        r.status.clone(),
    ]
}

pub fn to_csv(file: &SweepFile) -> Result<String> {
    let mut out = Vec::new();
    let m = &file.metadata;
    writeln!(out, "# version: {}", m.version).expect("write to memory");
    writeln!(out, "# seed: {}", m.seed).expect("write to memory");
    writeln!(
        out,
        "# config: {}",
        serde_json::to_string(&m.config).map_err(|e| Error::Format(e.to_string()))?
    )
    .expect("write to memory");
    {
        let mut w = csv::WriterBuilder::new().from_writer(&mut out);
        w.write_record(FIELDS)
            .map_err(|e| Error::Format(e.to_string()))?;
        for r in &file.rows {
            w.write_record(row_record(r))
                .map_err(|e| Error::Format(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))?;
    }
    String::from_utf8(out).map_err(|e| Error::Format(e.to_string()))
}

pub fn to_json(file: &SweepFile) -> Result<String> {
    let mut s = serde_json::to_string_pretty(file).map_err(|e| Error::Format(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn parse_csv(text: &str) -> Result<SweepFile> {
    let mut version = String::new();
    let mut seed = 0;
    let mut config = serde_json::Value::Null;
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        let body = line.trim_start_matches('#').trim();
        if let Some((key, value)) = body.split_once(':') {
            let value = value.trim();
            match key.trim() {
                "version" => version = value.to_string(),
                "seed" => {
                    seed = value
                        .parse()
                        .map_err(|_| Error::Format(format!("bad seed '{value}'")))?
                }
                "config" => {
                    config = serde_json::from_str(value)
                        .map_err(|e| Error::Format(format!("bad config line: {e}")))?
                }
                _ => {}
            }
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Format(e.to_string()))?
        .clone();
    if header.iter().ne(FIELDS.iter().copied()) {
        return Err(Error::Format(format!(
            "unexpected CSV header: {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let rows = reader
        .deserialize()
        .collect::<std::result::Result<Vec<SweepRow>, _>>()
        .map_err(|e| Error::Format(e.to_string()))?;
    Ok(SweepFile {
        metadata: Metadata {
            version,
            seed,
            config,
        },
        rows,
    })
}

pub fn parse_json(text: &str) -> Result<SweepFile> {
    serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
}

/// Parse either format, chosen by the first non-blank character.
pub fn parse_sweep(text: &str) -> Result<SweepFile> {
    if text.trim_start().starts_with('{') {
        parse_json(text)
    } else {
        parse_csv(text)
    }
}

pub fn render(file: &SweepFile, format: Format) -> Result<String> {
    match format {
        Format::Csv => to_csv(file),
        Format::Json => to_json(file),
    }
}

pub fn emit(file: &SweepFile, format: Format, path: &Path) -> Result<()> {
    let text = render(file, format)?;
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_sweep(path: &Path) -> Result<SweepFile> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_sweep(&text)
}
