//! Named commands behind a common trait, looked up at runtime.

use std::f64::consts::PI;

use chaostrack_core::kicked_rotor::{classical_p2_series, qkr_p2_series_from, QKRState};
use chaostrack_core::lyapunov::{chaotic_bracket, mle, MleSettings, CHAOS_THRESHOLD};
use chaostrack_core::model::{integrate, LatticeParams, ModeState, FIG2_PHASES, FIG2_POPULATIONS};
use chaostrack_core::separatrix::{critical_g, DimerPoint, SeparatrixError};
use chaostrack_core::spectral::{dense_windows, peaks_of, FrequencyMap, PeakSet, TimeSeries};
use chaostrack_core::wannier::lattice_constants;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, KrMode, RunConfig};
use crate::output::{Cell, Table};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("at {name} = {value}: {message}")]
    Point { name: &'static str, value: f64, message: String },
    #[error("{0}")]
    Failed(String),
}

impl RunError {
    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(ConfigError::Parse { .. }) => "ParseError",
            RunError::Config(ConfigError::Validation { .. }) => "ValidationError",
            RunError::Config(ConfigError::Flag(_)) => "UsageError",
            RunError::Point { .. } => "PointError",
            RunError::Failed(_) => "RunError",
        }
    }

    fn at(name: &'static str, value: f64, e: impl ToString) -> Self {
        RunError::Point {
            name,
            value,
            message: e.to_string(),
        }
    }
}

pub trait Command: Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    /// Adjusts the built-in defaults before the config file and flags apply.
    fn preset(&self, _cfg: &mut RunConfig) {}
    fn run(&self, cfg: &RunConfig) -> Result<Table, RunError>;
}

pub struct Registry {
    commands: Vec<Box<dyn Command>>,
}

impl Registry {
    pub fn new() -> Self {
        Self { commands: Vec::new() }
    }

    pub fn register(&mut self, c: Box<dyn Command>) {
        assert!(self.get(c.name()).is_none(), "duplicate command {}", c.name());
        self.commands.push(c);
    }

    pub fn get(&self, name: &str) -> Option<&dyn Command> {
        self.commands.iter().find(|c| c.name() == name).map(|c| c.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.commands.iter().map(|c| c.name()).collect()
    }

    pub fn help(&self) -> String {
        let mut s = String::from("Commands:\n");
        for c in &self.commands {
            s += &format!("  {:<11} {}\n", c.name(), c.summary());
        }
        s
    }

    pub fn standard() -> Self {
        let mut r = Self::new();
        r.register(Box::new(Preset { name: "fig1a", summary: "classical kicked-rotor frequency map vs K", base: &SweepKr, tweak: fig1a }));
        r.register(Box::new(Preset { name: "fig1b", summary: "quantum kicked-rotor frequency map vs K", base: &SweepKr, tweak: fig1b }));
        r.register(Box::new(Preset { name: "fig2", summary: "frequency map of <x(t)> vs g", base: &SweepBec, tweak: reference_lattice }));
        r.register(Box::new(Preset { name: "fig3", summary: "largest Lyapunov exponent vs g", base: &Mle, tweak: reference_lattice }));
        r.register(Box::new(Preset { name: "fig4", summary: "separatrix estimate vs trimer chaotic region", base: &CriticalG, tweak: fig4 }));
        r.register(Box::new(SweepBec));
        r.register(Box::new(SweepKr));
        r.register(Box::new(Mle));
        r.register(Box::new(CriticalG));
        r.register(Box::new(Wannier));
        r
    }
}

impl Default for Registry {
    fn default() -> Self {
        Self::standard()
    }
}

/// A generic command with figure parameters applied on top of its defaults.
struct Preset {
    name: &'static str,
    summary: &'static str,
    base: &'static (dyn Command + Sync),
    tweak: fn(&mut RunConfig),
}

impl Command for Preset {
    fn name(&self) -> &'static str {
        self.name
    }
    fn summary(&self) -> &'static str {
        self.summary
    }
    fn preset(&self, cfg: &mut RunConfig) {
        self.base.preset(cfg);
        (self.tweak)(cfg);
    }
    fn run(&self, cfg: &RunConfig) -> Result<Table, RunError> {
        self.base.run(cfg)
    }
}

fn reference_lattice(cfg: &mut RunConfig) {
    cfg.omega_b = 0.25;
    cfg.v0 = 5.0;
    cfg.chi00 = 2.0;
    cfg.populations = FIG2_POPULATIONS;
    cfg.phases = FIG2_PHASES;
}

fn fig1a(cfg: &mut RunConfig) {
    cfg.kr_mode = KrMode::Classical;
}

fn fig1b(cfg: &mut RunConfig) {
    cfg.kr_mode = KrMode::Quantum;
    cfg.sweep_min = 0.1;
    cfg.sweep_max = 10.0;
    cfg.sweep_count = 50;
}

fn fig4(cfg: &mut RunConfig) {
    reference_lattice(cfg);
}

fn map_rows(table: &mut Table, points: &[(f64, PeakSet)]) {
    for (x, ps) in points {
        for p in &ps.peaks {
            table.push(vec![(*x).into(), p.omega.into(), p.rel_amplitude.into()]);
        }
    }
}

fn dense_note(table: &mut Table, map: &FrequencyMap, cfg: &RunConfig) {
    let windows = dense_windows(map, cfg.dense_count, (cfg.dense_lo, cfg.dense_hi));
    let list: Vec<String> = windows.iter().map(|(a, b)| format!("[{a}, {b}]")).collect();
    table.note(format!(
        "dense windows (>= {} peaks in ({}, {}]): {}",
        cfg.dense_count,
        cfg.dense_lo,
        cfg.dense_hi,
        if list.is_empty() { "none".to_string() } else { list.join(" ") }
    ));
}

fn bec_series(state: &ModeState, p: &LatticeParams, cfg: &RunConfig) -> Result<TimeSeries, String> {
    let t_end = (cfg.samples - 1) as f64 * cfg.sample_dt;
    let traj = integrate(state, p, t_end, cfg.dt, cfg.sample_dt).map_err(|e| e.to_string())?;
    Ok(traj.mean_position_series(p))
}

pub struct SweepBec;

impl Command for SweepBec {
    fn name(&self) -> &'static str {
        "sweep-bec"
    }
    fn summary(&self) -> &'static str {
        "frequency map of the trimer <x(t)> over a g sweep"
    }
    fn run(&self, cfg: &RunConfig) -> Result<Table, RunError> {
        let state = cfg.initial_state()?;
        let base = cfg.lattice();
        let points = cfg
            .sweep_values()
            .par_iter()
            .map(|&g| {
                let s = bec_series(&state, &base.with_g(g), cfg).map_err(|e| RunError::at("g", g, e))?;
                let ps = peaks_of(&s, cfg.threshold, cfg.window).map_err(|e| RunError::at("g", g, e))?;
                Ok((g, ps))
            })
            .collect::<Result<Vec<_>, RunError>>()?;
        let mut table = Table::new(&["param", "omega", "rel_amplitude"]);
        table.note("param is g; omega is angular frequency");
        let map = FrequencyMap {
            parameter: "g".into(),
            points,
        };
        dense_note(&mut table, &map, cfg);
        map_rows(&mut table, &map.points);
        Ok(table)
    }
}

pub struct SweepKr;

impl SweepKr {
    fn series(k: f64, cfg: &RunConfig) -> Result<TimeSeries, String> {
        match cfg.kr_mode {
            KrMode::Classical => Ok(classical_p2_series(cfg.kr_x0, cfg.kr_p0, k, cfg.kr_kicks)),
            KrMode::Quantum => {
                let state = match cfg.kr_beta {
                    Some(b) => QKRState::gaussian_on_ladder(cfg.kr_kbar, b, cfg.kr_p0, cfg.kr_fwhm, cfg.kr_ladder),
                    None => QKRState::gaussian(cfg.kr_kbar, cfg.kr_p0, cfg.kr_fwhm, cfg.kr_ladder),
                }
                .map_err(|e| e.to_string())?;
                qkr_p2_series_from(state, k, cfg.kr_kicks).map_err(|e| e.to_string())
            }
        }
    }
}

impl Command for SweepKr {
    fn name(&self) -> &'static str {
        "sweep-kr"
    }
    fn summary(&self) -> &'static str {
        "frequency map of kicked-rotor p^2(t) over a K sweep"
    }
    fn preset(&self, cfg: &mut RunConfig) {
        cfg.sweep_min = 0.1;
        cfg.sweep_max = 1.2;
        cfg.sweep_count = 111;
        cfg.threshold = 1.0 / 500.0;
        cfg.dense_count = 40;
        cfg.dense_lo = 0.0;
        cfg.dense_hi = PI;
    }
    fn run(&self, cfg: &RunConfig) -> Result<Table, RunError> {
        let points = cfg
            .sweep_values()
            .par_iter()
            .map(|&k| {
                let s = Self::series(k, cfg).map_err(|e| RunError::at("K", k, e))?;
                let ps = peaks_of(&s, cfg.threshold, cfg.window).map_err(|e| RunError::at("K", k, e))?;
                Ok((k, ps))
            })
            .collect::<Result<Vec<_>, RunError>>()?;
        let mut table = Table::new(&["param", "omega", "rel_amplitude"]);
        table.note(format!("param is K ({} rotor); omega is angular frequency per kick", cfg.kr_mode));
        let map = FrequencyMap {
            parameter: "K".into(),
            points,
        };
        dense_note(&mut table, &map, cfg);
        map_rows(&mut table, &map.points);
        Ok(table)
    }
}

fn mle_settings(cfg: &RunConfig, p: &LatticeParams) -> MleSettings {
    let tb = p.bloch_period();
    MleSettings {
        t_total: cfg.mle_total * tb,
        renorm_interval: cfg.mle_renorm * tb,
        t_transient: cfg.mle_transient * tb,
        dt: cfg.dt,
        ..MleSettings::defaults_for(p)
    }
}

pub struct Mle;

impl Command for Mle {
    fn name(&self) -> &'static str {
        "mle"
    }
    fn summary(&self) -> &'static str {
        "largest Lyapunov exponent of the trimer over a g sweep"
    }
    fn run(&self, cfg: &RunConfig) -> Result<Table, RunError> {
        let state = cfg.initial_state()?;
        let base = cfg.lattice();
        let settings = mle_settings(cfg, &base);
        let results = cfg
            .sweep_values()
            .par_iter()
            .map(|&g| {
                mle(&state, &base.with_g(g), &settings)
                    .map(|r| (g, r))
                    .map_err(|e| RunError::at("g", g, e))
            })
            .collect::<Result<Vec<_>, RunError>>()?;
        let mut table = Table::new(&["g", "lambda_tb", "lambda_raw"]);
        table.note("lambda_tb in units of 1/T_B, lambda_raw in inverse time");
        let bracket = chaotic_bracket(&results, CHAOS_THRESHOLD);
        table.note(format!(
            "chaotic region (lambda_tb > {CHAOS_THRESHOLD}): {}",
            bracket.map_or("none".to_string(), |(a, b)| format!("[{a}, {b}]"))
        ));
        for (g, r) in results {
            table.push(vec![g.into(), r.lambda.into(), r.lambda_raw.into()]);
        }
        Ok(table)
    }
}

pub struct CriticalG;

impl CriticalG {
    fn row(i1: f64, cfg: &RunConfig) -> Result<Vec<Cell>, RunError> {
        let base = cfg.lattice();
        let ic = DimerPoint::new(i1, cfg.sep_phi).map_err(|e| RunError::at("i1", i1, e))?;
        let g_star = match critical_g(&ic, &base, (cfg.sep_g_min, cfg.sep_g_max), cfg.sep_scan) {
            Ok(r) => Some(r.g_star),
            Err(SeparatrixError::NoBracket { .. }) | Err(SeparatrixError::NoSaddle) => None,
            Err(e) => return Err(RunError::at("i1", i1, e)),
        };
        let (lo, hi) = match g_star {
            None => (f64::NAN, f64::NAN),
            Some(gs) => {
                let from = (gs * (1.0 - cfg.sep_chaos_window)).max(cfg.sep_g_min);
                let to = gs * (1.0 + cfg.sep_chaos_window);
                let n = ((to - from) / cfg.sep_chaos_step).ceil() as usize;
                let grid: Vec<f64> = (0..=n).map(|k| from + cfg.sep_chaos_step * k as f64).collect();
                let state = ModeState::from_populations_phases([0.0, 1.0 - i1, i1], [0.0, 0.0, cfg.sep_phi])
                    .map_err(|e| RunError::at("i1", i1, e))?;
                let settings = mle_settings(cfg, &base);
                let sweep = grid
                    .par_iter()
                    .map(|&g| mle(&state, &base.with_g(g), &settings).map(|r| (g, r)))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| RunError::at("i1", i1, e))?;
                chaotic_bracket(&sweep, CHAOS_THRESHOLD).unwrap_or((f64::NAN, f64::NAN))
            }
        };
        Ok(vec![i1.into(), g_star.unwrap_or(f64::NAN).into(), lo.into(), hi.into()])
    }
}

impl Command for CriticalG {
    fn name(&self) -> &'static str {
        "critical-g"
    }
    fn summary(&self) -> &'static str {
        "separatrix-crossing g* and trimer chaotic region over an I1 sweep"
    }
    fn preset(&self, cfg: &mut RunConfig) {
        cfg.sweep_min = 0.05;
        cfg.sweep_max = 0.95;
        cfg.sweep_count = 19;
    }
    fn run(&self, cfg: &RunConfig) -> Result<Table, RunError> {
        if cfg.sweep_min <= 0.0 || cfg.sweep_max >= 1.0 {
            return Err(ConfigError::Validation {
                key: "sweep.min".into(),
                message: "I1 sweep must stay inside (0, 1)".into(),
            }
            .into());
        }
        let rows = cfg
            .sweep_values()
            .par_iter()
            .map(|&i1| Self::row(i1, cfg))
            .collect::<Result<Vec<_>, RunError>>()?;
        let mut table = Table::new(&["i1_initial", "g_star", "g_chaos_lo", "g_chaos_hi"]);
        table.note(format!(
            "initial state I_-1 = 0, I_0 = 1 - I1, theta_1 - theta_0 = {}; the sweep variable I1 is a modelling choice",
            cfg.sep_phi
        ));
        table.note(format!(
            "chaotic region: lambda_tb > {CHAOS_THRESHOLD} on g in [g*(1 - w), g*(1 + w)], w = separatrix.chaos_window; NaN when absent"
        ));
        for r in rows {
            table.push(r);
        }
        Ok(table)
    }
}

pub struct Wannier;

impl Command for Wannier {
    fn name(&self) -> &'static str {
        "wannier"
    }
    fn summary(&self) -> &'static str {
        "overlap integrals and dipole elements of the lowest-band Wannier function at v0"
    }
    fn run(&self, cfg: &RunConfig) -> Result<Table, RunError> {
        let lc = lattice_constants(cfg.v0).map_err(|e| RunError::at("v0", cfg.v0, e))?;
        let mut table = Table::new(&["quantity", "index", "value"]);
        table.note("chi_i = int phi^3(x) phi(x - i); x_i = int phi(x) x phi(x - i)");
        let rows = [
            ("chi", 0.0, lc.chi00),
            ("chi", 1.0, lc.chi01),
            ("chi", 2.0, lc.chi02),
            ("x", 1.0, lc.x1),
            ("x", 2.0, lc.x2),
        ];
        for (q, i, v) in rows {
            table.push(vec![Cell::Text(q.into()), i.into(), v.into()]);
        }
        Ok(table)
    }
}
