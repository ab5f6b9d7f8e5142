//! Run configuration: defaults, then a `key = value` file, then `--key value`
//! flags.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use chaostrack_core::model::{LatticeParams, ModeState, ModelError, FIG2_PHASES, FIG2_POPULATIONS};
use chaostrack_core::spectral::Window;
use chaostrack_core::wannier::lattice_constants;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, key: String, message: String },
    #[error("invalid `{key}`: {message}")]
    Validation { key: String, message: String },
    #[error("{0}")]
    Flag(String),
}

impl ConfigError {
    fn validation(key: &str, message: impl Into<String>) -> Self {
        Self::Validation {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KrMode {
    Classical,
    Quantum,
}

impl FromStr for KrMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "classical" => Ok(Self::Classical),
            "quantum" => Ok(Self::Quantum),
            _ => Err(format!("expected classical|quantum, got `{s}`")),
        }
    }
}

impl fmt::Display for KrMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Classical => "classical",
            Self::Quantum => "quantum",
        })
    }
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub v0: f64,
    pub omega_b: f64,
    pub g: f64,
    pub chi00: f64,
    /// `None` derives `|chi01|` from the Wannier function at `v0`.
    pub chi01: Option<f64>,
    pub x1: f64,
    pub x2: f64,

    /// Initial populations and phases `(n = -1, 0, 1)`.
    pub populations: [f64; 3],
    pub phases: [f64; 3],

    pub sweep_min: f64,
    pub sweep_max: f64,
    pub sweep_count: usize,

    pub threshold: f64,
    pub window: Window,
    pub samples: usize,
    pub sample_dt: f64,
    pub dense_count: usize,
    pub dense_lo: f64,
    pub dense_hi: f64,

    pub dt: f64,
    /// Lyapunov run lengths in Bloch periods.
    pub mle_total: f64,
    pub mle_transient: f64,
    pub mle_renorm: f64,

    pub kr_mode: KrMode,
    pub kr_x0: f64,
    pub kr_p0: f64,
    pub kr_kbar: f64,
    pub kr_fwhm: f64,
    /// `None` uses `frac(p0 / kbar)`.
    pub kr_beta: Option<f64>,
    pub kr_kicks: usize,
    pub kr_ladder: usize,

    pub sep_phi: f64,
    pub sep_g_min: f64,
    pub sep_g_max: f64,
    pub sep_scan: usize,
    pub sep_chaos_step: f64,
    pub sep_chaos_window: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            v0: 5.0,
            omega_b: 0.25,
            g: 0.2,
            chi00: 2.0,
            chi01: None,
            x1: 0.1,
            x2: 0.01,
            populations: FIG2_POPULATIONS,
            phases: FIG2_PHASES,
            sweep_min: 0.0,
            sweep_max: 0.3,
            sweep_count: 151,
            threshold: 0.01,
            window: Window::Hann,
            samples: 8192,
            sample_dt: 0.4,
            dense_count: 25,
            dense_lo: 0.0,
            dense_hi: 1.0,
            dt: 0.005,
            mle_total: 500.0,
            mle_transient: 50.0,
            mle_renorm: 1.0,
            kr_mode: KrMode::Classical,
            kr_x0: 0.0,
            kr_p0: 0.56,
            kr_kbar: 2.89,
            kr_fwhm: 5.0 * 2.89,
            kr_beta: None,
            kr_kicks: 2000,
            kr_ladder: 1024,
            sep_phi: -PI / 2.0,
            sep_g_min: 0.05,
            sep_g_max: 1.0,
            sep_scan: 200,
            sep_chaos_step: 0.01,
            sep_chaos_window: 0.3,
        }
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    v.parse::<T>().map_err(|e| format!("bad value `{v}` for `{key}`: {e}"))
}

fn auto(key: &str, v: &str) -> Result<Option<f64>, String> {
    if v == "auto" {
        Ok(None)
    } else {
        num(key, v).map(Some)
    }
}

fn show_auto(v: Option<f64>) -> String {
    v.map_or_else(|| "auto".to_string(), |x| x.to_string())
}

impl RunConfig {
    /// Every accepted key, in echo order.
    pub const KEYS: &'static [&'static str] = &[
        "v0",
        "omega_b",
        "g",
        "chi00",
        "chi01",
        "x1",
        "x2",
        "ic.i_m1",
        "ic.i0",
        "ic.i1",
        "ic.theta_m1",
        "ic.theta0",
        "ic.theta1",
        "sweep.min",
        "sweep.max",
        "sweep.count",
        "spectral.threshold",
        "spectral.window",
        "spectral.samples",
        "spectral.sample_dt",
        "dense.count",
        "dense.band_lo",
        "dense.band_hi",
        "integrator.dt",
        "mle.t_total",
        "mle.transient",
        "mle.renorm",
        "kr.mode",
        "kr.x0",
        "kr.p0",
        "kr.kbar",
        "kr.fwhm",
        "kr.beta",
        "kr.kicks",
        "kr.ladder",
        "separatrix.phi",
        "separatrix.g_min",
        "separatrix.g_max",
        "separatrix.n_scan",
        "separatrix.chaos_step",
        "separatrix.chaos_window",
    ];

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "v0" => self.v0 = num(key, v)?,
            "omega_b" => self.omega_b = num(key, v)?,
            "g" => self.g = num(key, v)?,
            "chi00" => self.chi00 = num(key, v)?,
            "chi01" => self.chi01 = auto(key, v)?,
            "x1" => self.x1 = num(key, v)?,
            "x2" => self.x2 = num(key, v)?,
            "ic.i_m1" => self.populations[0] = num(key, v)?,
            "ic.i0" => self.populations[1] = num(key, v)?,
            "ic.i1" => self.populations[2] = num(key, v)?,
            "ic.theta_m1" => self.phases[0] = num(key, v)?,
            "ic.theta0" => self.phases[1] = num(key, v)?,
            "ic.theta1" => self.phases[2] = num(key, v)?,
            "sweep.min" => self.sweep_min = num(key, v)?,
            "sweep.max" => self.sweep_max = num(key, v)?,
            "sweep.count" => self.sweep_count = num(key, v)?,
            "spectral.threshold" => self.threshold = num(key, v)?,
            "spectral.window" => self.window = num(key, v)?,
            "spectral.samples" => self.samples = num(key, v)?,
            "spectral.sample_dt" => self.sample_dt = num(key, v)?,
            "dense.count" => self.dense_count = num(key, v)?,
            "dense.band_lo" => self.dense_lo = num(key, v)?,
            "dense.band_hi" => self.dense_hi = num(key, v)?,
            "integrator.dt" => self.dt = num(key, v)?,
            "mle.t_total" => self.mle_total = num(key, v)?,
            "mle.transient" => self.mle_transient = num(key, v)?,
            "mle.renorm" => self.mle_renorm = num(key, v)?,
            "kr.mode" => self.kr_mode = num(key, v)?,
            "kr.x0" => self.kr_x0 = num(key, v)?,
            "kr.p0" => self.kr_p0 = num(key, v)?,
            "kr.kbar" => self.kr_kbar = num(key, v)?,
            "kr.fwhm" => self.kr_fwhm = num(key, v)?,
            "kr.beta" => self.kr_beta = auto(key, v)?,
            "kr.kicks" => self.kr_kicks = num(key, v)?,
            "kr.ladder" => self.kr_ladder = num(key, v)?,
            "separatrix.phi" => self.sep_phi = num(key, v)?,
            "separatrix.g_min" => self.sep_g_min = num(key, v)?,
            "separatrix.g_max" => self.sep_g_max = num(key, v)?,
            "separatrix.n_scan" => self.sep_scan = num(key, v)?,
            "separatrix.chaos_step" => self.sep_chaos_step = num(key, v)?,
            "separatrix.chaos_window" => self.sep_chaos_window = num(key, v)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "v0" => self.v0.to_string(),
            "omega_b" => self.omega_b.to_string(),
            "g" => self.g.to_string(),
            "chi00" => self.chi00.to_string(),
            "chi01" => show_auto(self.chi01),
            "x1" => self.x1.to_string(),
            "x2" => self.x2.to_string(),
            "ic.i_m1" => self.populations[0].to_string(),
            "ic.i0" => self.populations[1].to_string(),
            "ic.i1" => self.populations[2].to_string(),
            "ic.theta_m1" => self.phases[0].to_string(),
            "ic.theta0" => self.phases[1].to_string(),
            "ic.theta1" => self.phases[2].to_string(),
            "sweep.min" => self.sweep_min.to_string(),
            "sweep.max" => self.sweep_max.to_string(),
            "sweep.count" => self.sweep_count.to_string(),
            "spectral.threshold" => self.threshold.to_string(),
            "spectral.window" => self.window.to_string(),
            "spectral.samples" => self.samples.to_string(),
            "spectral.sample_dt" => self.sample_dt.to_string(),
            "dense.count" => self.dense_count.to_string(),
            "dense.band_lo" => self.dense_lo.to_string(),
            "dense.band_hi" => self.dense_hi.to_string(),
            "integrator.dt" => self.dt.to_string(),
            "mle.t_total" => self.mle_total.to_string(),
            "mle.transient" => self.mle_transient.to_string(),
            "mle.renorm" => self.mle_renorm.to_string(),
            "kr.mode" => self.kr_mode.to_string(),
            "kr.x0" => self.kr_x0.to_string(),
            "kr.p0" => self.kr_p0.to_string(),
            "kr.kbar" => self.kr_kbar.to_string(),
            "kr.fwhm" => self.kr_fwhm.to_string(),
            "kr.beta" => show_auto(self.kr_beta),
            "kr.kicks" => self.kr_kicks.to_string(),
            "kr.ladder" => self.kr_ladder.to_string(),
            "separatrix.phi" => self.sep_phi.to_string(),
            "separatrix.g_min" => self.sep_g_min.to_string(),
            "separatrix.g_max" => self.sep_g_max.to_string(),
            "separatrix.n_scan" => self.sep_scan.to_string(),
            "separatrix.chaos_step" => self.sep_chaos_step.to_string(),
            "separatrix.chaos_window" => self.sep_chaos_window.to_string(),
            _ => return None,
        })
    }

    /// `(key, value)` for every key, with derived values filled in.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        Self::KEYS
            .iter()
            .map(|k| (*k, self.get(k).expect("every listed key is readable")))
            .collect()
    }

    /// Applies a `key = value` document.
    pub fn apply_document(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((k, v)) = content.split_once('=') else {
                return Err(ConfigError::Parse {
                    line,
                    key: content.to_string(),
                    message: format!("expected `key = value`, got `{content}`"),
                });
            };
            let (k, v) = (k.trim(), v.trim());
            self.set(k, v).map_err(|message| ConfigError::Parse {
                line,
                key: k.to_string(),
                message,
            })?;
        }
        Ok(())
    }

    pub fn apply_overrides(&mut self, overrides: &[(String, String)]) -> Result<(), ConfigError> {
        for (k, v) in overrides {
            self.set(k, v)
                .map_err(|message| ConfigError::Flag(format!("--{k}: {message}")))?;
        }
        Ok(())
    }

    /// Replaces `chi01 = auto` by the Wannier value at `v0`.
    pub fn resolve(&mut self) -> Result<(), ConfigError> {
        if self.chi01.is_none() {
            let lc = lattice_constants(self.v0).map_err(|e| ConfigError::validation("chi01", e.to_string()))?;
            self.chi01 = Some(lc.chi01.abs());
        }
        Ok(())
    }

    pub fn lattice(&self) -> LatticeParams {
        LatticeParams {
            v0: self.v0,
            omega_b: self.omega_b,
            g: self.g,
            chi00: self.chi00,
            chi01: self.chi01.unwrap_or(0.0),
            x1: self.x1,
            x2: self.x2,
        }
    }

    pub fn initial_state(&self) -> Result<ModeState, ConfigError> {
        ModeState::from_populations_phases(self.populations, self.phases)
            .map_err(|e| ConfigError::validation("ic", e.to_string()))
    }

    pub fn sweep_values(&self) -> Vec<f64> {
        if self.sweep_count == 1 {
            return vec![self.sweep_min];
        }
        let last = self.sweep_count - 1;
        let step = (self.sweep_max - self.sweep_min) / last as f64;
        (0..self.sweep_count)
            .map(|k| if k == last { self.sweep_max } else { self.sweep_min + step * k as f64 })
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let model_key = |msg: &str| {
            ["omega_b", "chi00", "chi01", "v0", "g"]
                .into_iter()
                .find(|k| msg.starts_with(k))
                .unwrap_or("model")
                .to_string()
        };
        self.lattice().validate().map_err(|e| {
            let key = match &e {
                ModelError::InvalidParams(m) => model_key(m),
                _ => "model".to_string(),
            };
            ConfigError::Validation {
                key,
                message: e.to_string(),
            }
        })?;
        self.initial_state()?;
        let checks: [(bool, &str, &str); 20] = [
            (self.sweep_count >= 1, "sweep.count", "must be >= 1"),
            (self.sweep_min <= self.sweep_max, "sweep.min", "must be <= sweep.max"),
            (self.threshold > 0.0 && self.threshold < 1.0, "spectral.threshold", "must lie in (0, 1)"),
            (self.samples >= 64, "spectral.samples", "must be >= 64"),
            (self.sample_dt > 0.0, "spectral.sample_dt", "must be > 0"),
            (self.dense_count >= 1, "dense.count", "must be >= 1"),
            (self.dense_lo < self.dense_hi, "dense.band_lo", "must be < dense.band_hi"),
            (self.dt > 0.0, "integrator.dt", "must be > 0"),
            (self.mle_renorm > 0.0, "mle.renorm", "must be > 0"),
            (
                self.mle_transient >= 0.0 && self.mle_transient < self.mle_total,
                "mle.transient",
                "must lie in [0, mle.t_total)",
            ),
            (self.kr_kbar > 0.0, "kr.kbar", "must be > 0"),
            (self.kr_fwhm >= 0.0, "kr.fwhm", "must be >= 0"),
            (self.kr_beta.map_or(true, |b| (0.0..1.0).contains(&b)), "kr.beta", "must lie in [0, 1)"),
            (self.kr_kicks >= 64, "kr.kicks", "must be >= 64"),
            (self.kr_ladder >= 2, "kr.ladder", "must be >= 2"),
            (self.sep_g_min > 0.0, "separatrix.g_min", "must be > 0"),
            (self.sep_g_max > self.sep_g_min, "separatrix.g_max", "must be > separatrix.g_min"),
            (self.sep_scan >= 50, "separatrix.n_scan", "must be >= 50"),
            (self.sep_chaos_step > 0.0, "separatrix.chaos_step", "must be > 0"),
            (self.sep_chaos_window >= 0.0, "separatrix.chaos_window", "must be >= 0"),
        ];
        for (ok, key, msg) in checks {
            if !ok {
                return Err(ConfigError::validation(key, msg));
            }
        }
        Ok(())
    }
}

/// Flags shared by every command.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommonFlags {
    pub config: Option<String>,
    pub jobs: Option<usize>,
    pub out: Option<String>,
    pub json: bool,
    pub overrides: Vec<(String, String)>,
}

/// Splits `--key value` / `--key=value` arguments into the common flags and
/// configuration overrides.
pub fn parse_flags(args: &[String]) -> Result<CommonFlags, ConfigError> {
    let mut flags = CommonFlags::default();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(body) = arg.strip_prefix("--") else {
            return Err(ConfigError::Flag(format!("unexpected argument `{arg}`")));
        };
        let (key, value) = match body.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| ConfigError::Flag(format!("--{body} needs a value")))?;
                (body.to_string(), v.clone())
            }
        };
        match key.as_str() {
            "config" => flags.config = Some(value),
            "out" => flags.out = Some(value),
            "jobs" => {
                let n: usize = value
                    .parse()
                    .map_err(|_| ConfigError::Flag(format!("--jobs expects a positive integer, got `{value}`")))?;
                if n == 0 {
                    return Err(ConfigError::Flag("--jobs must be >= 1".into()));
                }
                flags.jobs = Some(n);
            }
            "format" => match value.as_str() {
                "csv" => flags.json = false,
                "json" => flags.json = true,
                _ => return Err(ConfigError::Flag(format!("--format expects csv|json, got `{value}`"))),
            },
            _ => flags.overrides.push((key, value)),
        }
    }
    Ok(flags)
}
