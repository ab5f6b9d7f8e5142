//! Three-well reduction of the tilted-lattice Gross-Pitaevskii equation.
//!
//! The condensate wavefunction is expanded on one localized state per well,
//! `psi(x, t) = sum_n c_n(t) phi(x - n)` with `n in {-1, 0, 1}` and
//! `c_n = sqrt(I_n) exp(-i theta_n)`. Keeping the on-site overlap `chi00` and
//! the nearest-neighbour overlap `chi01`, the amplitudes obey
//!
//! ```text
//! i dc_n/dt = n w_B c_n + g chi00 |c_n|^2 c_n
//!           + g chi01 sum_{s=+-1} ( 2|c_n|^2 c_{n+s} + c_n^2 conj(c_{n+s}) + |c_{n+s}|^2 c_{n+s} )
//! ```
//!
//! which is the canonical flow `i dc_n/dt = dH/d conj(c_n)` of [`total_energy`].
//! Amplitudes are stored in Cartesian form; phases are only derived on demand.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::ode::{rk4_step, step_count};
use crate::spectral::TimeSeries;

/// Well indices covered by the truncation, in storage order.
pub const WELLS: [i32; 3] = [-1, 0, 1];

/// Tolerance on `sum |c_n|^2 - 1` accepted by [`ModeState::new`].
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Largest norm drift [`integrate`] tolerates at a sample before failing.
pub const DRIFT_TOLERANCE: f64 = 1e-6;

/// Default integration step.
pub const DEFAULT_DT: f64 = 0.005;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid lattice parameters: {0}")]
    InvalidParams(String),
    #[error("invalid mode state: {0}")]
    InvalidState(String),
    #[error("invalid step: {0}")]
    InvalidStep(String),
    #[error("norm drift {drift:.3e} at t = {t}")]
    NormDrift { t: f64, drift: f64 },
    #[error("non-finite amplitude at t = {t}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResonanceError {
    /// The combination frequency does not depend on `g`.
    #[error("combination frequency is independent of g")]
    DegenerateCombination,
    /// The resonance condition is met only at `g <= 0`.
    #[error("resonance at unphysical g = {g}")]
    NoResonance { g: f64 },
}

/// Physical and model constants.
///
/// Lengths are in lattice steps and energies in recoil units; in these units
/// the particle mass entering the kinetic term `P^2 / 2m` is the fixed value
/// `m = pi^2 / 2`, so it is not a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeParams {
    /// Lattice depth `V0`.
    pub v0: f64,
    /// Bloch frequency `w_B`, equal to the tilt force in these units.
    pub omega_b: f64,
    /// Nonlinearity `g`.
    pub g: f64,
    /// On-site overlap `int phi^4`.
    pub chi00: f64,
    /// Neighbour overlap `int phi^3(x) phi(x - 1)`.
    pub chi01: f64,
    /// Dipole element `int phi(x) x phi(x - 1)`.
    pub x1: f64,
    /// Dipole element `int phi(x) x phi(x - 2)`.
    pub x2: f64,
}

impl LatticeParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let all = [
            self.v0,
            self.omega_b,
            self.g,
            self.chi00,
            self.chi01,
            self.x1,
            self.x2,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidParams("non-finite field".into()));
        }
        let checks = [
            (self.v0 > 0.0, "v0 must be > 0"),
            (self.omega_b > 0.0, "omega_b must be > 0"),
            (self.g >= 0.0, "g must be >= 0"),
            (self.chi00 > 0.0, "chi00 must be > 0"),
            (self.chi01 >= 0.0, "chi01 must be >= 0"),
            (self.chi01 < self.chi00, "chi01 must be < chi00"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(ModelError::InvalidParams(msg.into()));
            }
        }
        Ok(())
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    /// Bloch period `T_B = 2 pi / w_B`.
    pub fn bloch_period(&self) -> f64 {
        2.0 * PI / self.omega_b
    }

    /// Perturbation scale `g chi01`; informational only.
    pub fn epsilon(&self) -> f64 {
        self.g * self.chi01
    }
}

/// Complex amplitudes of the three modes, ordered `n = -1, 0, 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeState {
    pub amps: [Complex64; 3],
}

impl ModeState {
    /// Validating constructor.
    pub fn new(amps: [Complex64; 3]) -> Result<Self, ModelError> {
        let s = Self { amps };
        if !s.is_finite() {
            return Err(ModelError::InvalidState("non-finite amplitude".into()));
        }
        let drift = (s.norm_sqr() - 1.0).abs();
        if drift > NORM_TOLERANCE {
            return Err(ModelError::InvalidState(format!(
                "total population off by {drift:.3e}"
            )));
        }
        Ok(s)
    }

    /// Rescales arbitrary nonzero amplitudes onto the unit sphere.
    pub fn normalized(amps: [Complex64; 3]) -> Result<Self, ModelError> {
        let n: f64 = amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(ModelError::InvalidState("zero or non-finite norm".into()));
        }
        Self::new(amps.map(|c| c / n))
    }

    /// Builds `c_n = sqrt(I_n) exp(-i theta_n)` from populations and phases.
    pub fn from_populations_phases(
        populations: [f64; 3],
        phases: [f64; 3],
    ) -> Result<Self, ModelError> {
        if populations.iter().any(|&p| p < 0.0) {
            return Err(ModelError::InvalidState("negative population".into()));
        }
        let mut amps = [Complex64::new(0.0, 0.0); 3];
        for k in 0..3 {
            amps[k] = Complex64::from_polar(populations[k].sqrt(), -phases[k]);
        }
        Self::new(amps)
    }

    /// Single-well state `c_n = delta_{n, well}`.
    pub fn localized(well: i32) -> Self {
        let mut amps = [Complex64::new(0.0, 0.0); 3];
        amps[(well + 1) as usize] = Complex64::new(1.0, 0.0);
        Self { amps }
    }

    pub fn populations(&self) -> [f64; 3] {
        self.amps.map(|c| c.norm_sqr())
    }

    /// Phases `theta_n = -arg c_n`; undefined (returned as 0) for empty wells.
    pub fn phases(&self) -> [f64; 3] {
        self.amps.map(|c| if c.norm_sqr() > 0.0 { -c.arg() } else { 0.0 })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.amps.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Real phase-space coordinates `(Re c_-1, Im c_-1, Re c_0, Im c_0, Re c_1, Im c_1)`.
    pub fn to_real(&self) -> [f64; 6] {
        let a = &self.amps;
        [a[0].re, a[0].im, a[1].re, a[1].im, a[2].re, a[2].im]
    }

    /// Inverse of [`ModeState::to_real`]; performs no validation.
    pub fn from_real(y: &[f64; 6]) -> Self {
        Self {
            amps: [
                Complex64::new(y[0], y[1]),
                Complex64::new(y[2], y[3]),
                Complex64::new(y[4], y[5]),
            ],
        }
    }

    /// Multiplies every amplitude by `exp(i alpha)`.
    pub fn rotate_global(&self, alpha: f64) -> Self {
        let u = Complex64::from_polar(1.0, alpha);
        Self {
            amps: self.amps.map(|c| c * u),
        }
    }
}

/// Equations of motion on raw amplitudes; no normalization assumed.
pub fn trimer_rhs_amps(c: &[Complex64; 3], params: &LatticeParams) -> [Complex64; 3] {
    let gs = params.g * params.chi00;
    let gn = params.g * params.chi01;
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for k in 0..3 {
        let n = WELLS[k] as f64;
        let ck = c[k];
        let ik = ck.norm_sqr();
        let mut coupling = Complex64::new(0.0, 0.0);
        for nb in [k.wrapping_sub(1), k + 1] {
            if nb < 3 {
                let cn = c[nb];
                coupling += 2.0 * ik * cn + ck * ck * cn.conj() + cn.norm_sqr() * cn;
            }
        }
        let h = (n * params.omega_b + gs * ik) * ck + gn * coupling;
        // -i * h
        out[k] = Complex64::new(h.im, -h.re);
    }
    out
}

/// Time derivative `dc_n/dt` of a mode state.
pub fn trimer_rhs(state: &ModeState, params: &LatticeParams) -> [Complex64; 3] {
    trimer_rhs_amps(&state.amps, params)
}

/// [`trimer_rhs`] in real coordinates.
pub fn trimer_rhs_real(y: &[f64; 6], params: &LatticeParams) -> [f64; 6] {
    let s = ModeState::from_real(y);
    let d = trimer_rhs_amps(&s.amps, params);
    [d[0].re, d[0].im, d[1].re, d[1].im, d[2].re, d[2].im]
}

/// Energy on raw amplitudes; no normalization assumed.
pub fn total_energy_amps(c: &[Complex64; 3], params: &LatticeParams) -> f64 {
    let mut linear = 0.0;
    let mut onsite = 0.0;
    for k in 0..3 {
        let i = c[k].norm_sqr();
        linear += WELLS[k] as f64 * params.omega_b * i;
        onsite += i * i;
    }
    // sum over ordered neighbour pairs of |c_n|^2 * 2 Re(conj(c_n) c_m)
    let mut hop = 0.0;
    for (a, b) in [(0usize, 1usize), (1, 2)] {
        let cross = (c[a].conj() * c[b]).re;
        hop += 2.0 * (c[a].norm_sqr() + c[b].norm_sqr()) * cross;
    }
    linear + 0.5 * params.g * params.chi00 * onsite + params.g * params.chi01 * hop
}

/// Trimer Hamiltonian
/// `H = sum n w_B I_n + (g chi00 / 2) sum I_n^2 + 2 g chi01 sum_n sum_s I_n sqrt(I_n I_{n+s}) cos(theta_n - theta_{n+s})`.
pub fn total_energy(state: &ModeState, params: &LatticeParams) -> f64 {
    total_energy_amps(&state.amps, params)
}

/// Mean position `<x>` in lattice steps, including the nearest and
/// next-nearest dipole cross terms.
pub fn mean_position(state: &ModeState, params: &LatticeParams) -> f64 {
    let c = &state.amps;
    let diag: f64 = (0..3).map(|k| WELLS[k] as f64 * c[k].norm_sqr()).sum();
    // Re(c_n conj(c_{n+1})) = sqrt(I_n I_{n+1}) cos(theta_{n+1} - theta_n)
    let nn = (c[0] * c[1].conj()).re + (c[1] * c[2].conj()).re;
    let nnn = (c[0] * c[2].conj()).re;
    diag + 2.0 * params.x1 * nn + 2.0 * params.x2 * nnn
}

/// First-order Bohr frequencies of the three-well model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BohrFrequencies {
    /// `w_{1,0}`
    pub w10: f64,
    /// `w_{0,-1}`
    pub w0m1: f64,
    /// `w_{1,-1}`
    pub w1m1: f64,
}

impl BohrFrequencies {
    pub fn as_array(&self) -> [f64; 3] {
        [self.w10, self.w0m1, self.w1m1]
    }
}

/// `w_nm = (n - m) w_B + g chi00 (I_n - I_m)` for populations `(I_-1, I_0, I_1)`.
pub fn bohr_frequencies(populations: [f64; 3], params: &LatticeParams) -> BohrFrequencies {
    let [im, i0, i1] = populations;
    let gs = params.g * params.chi00;
    let w = params.omega_b;
    BohrFrequencies {
        w10: w + gs * (i1 - i0),
        w0m1: w + gs * (i0 - im),
        w1m1: 2.0 * w + gs * (i1 - im),
    }
}

/// `Omega_pqr = p w_{0,-1} + q w_{1,0} + r w_{1,-1}`.
pub fn combination_frequency(p: i32, q: i32, r: i32, bohr: &BohrFrequencies) -> f64 {
    p as f64 * bohr.w0m1 + q as f64 * bohr.w10 + r as f64 * bohr.w1m1
}

/// Nonlinearity at which `Omega_pqr` vanishes to first order in `g`.
pub fn first_order_resonance_g(
    p: i32,
    q: i32,
    r: i32,
    populations: [f64; 3],
    params: &LatticeParams,
) -> Result<f64, ResonanceError> {
    let [im, i0, i1] = populations;
    let (p, q, r) = (p as f64, q as f64, r as f64);
    let slope = params.chi00 * (p * (i0 - im) + q * (i1 - i0) + r * (i1 - im));
    if slope == 0.0 {
        return Err(ResonanceError::DegenerateCombination);
    }
    let g = -(p + q + 2.0 * r) * params.omega_b / slope;
    if g > 0.0 {
        Ok(g)
    } else {
        Err(ResonanceError::NoResonance { g })
    }
}

/// Uniformly sampled mode-state history; sample `k` is at `t0 + k dt_sample`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    pub dt_sample: f64,
    pub states: Vec<ModeState>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt_sample
    }

    pub fn observable<F: Fn(&ModeState) -> f64>(&self, f: F) -> TimeSeries {
        TimeSeries {
            dt: self.dt_sample,
            values: self.states.iter().map(f).collect(),
        }
    }

    pub fn mean_position_series(&self, params: &LatticeParams) -> TimeSeries {
        self.observable(|s| mean_position(s, params))
    }
}

fn check_steps(dt: f64, dt_sample: f64) -> Result<usize, ModelError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(ModelError::InvalidStep(format!("dt = {dt}")));
    }
    if dt > dt_sample {
        return Err(ModelError::InvalidStep(format!(
            "dt = {dt} exceeds dt_sample = {dt_sample}"
        )));
    }
    let per = step_count(dt_sample, dt);
    if ((per as f64) * dt - dt_sample).abs() > 1e-9 * dt_sample {
        return Err(ModelError::InvalidStep(format!(
            "dt_sample = {dt_sample} is not a multiple of dt = {dt}"
        )));
    }
    Ok(per)
}

/// Integrates the trimer with fixed-step RK4 and returns samples at
/// `t = k dt_sample` for `k = 0 ..= floor(t_end / dt_sample)`.
///
/// The norm is not re-projected; a drift above [`DRIFT_TOLERANCE`] at any
/// sample aborts with [`ModelError::NormDrift`].
pub fn integrate(
    state0: &ModeState,
    params: &LatticeParams,
    t_end: f64,
    dt: f64,
    dt_sample: f64,
) -> Result<Trajectory, ModelError> {
    params.validate()?;
    let per = check_steps(dt, dt_sample)?;
    let n_samples = (t_end / dt_sample + 1e-9).floor() as usize + 1;
    let mut states = Vec::with_capacity(n_samples);
    states.push(*state0);
    let mut y = state0.to_real();
    let f = |y: &[f64; 6]| trimer_rhs_real(y, params);
    for k in 1..n_samples {
        for _ in 0..per {
            y = rk4_step(&y, dt, f);
        }
        let s = ModeState::from_real(&y);
        let t = k as f64 * dt_sample;
        if !s.is_finite() {
            return Err(ModelError::NonFinite { t });
        }
        let drift = (s.norm_sqr() - 1.0).abs();
        if drift > DRIFT_TOLERANCE {
            return Err(ModelError::NormDrift { t, drift });
        }
        states.push(s);
    }
    Ok(Trajectory {
        t0: 0.0,
        dt_sample,
        states,
    })
}

/// Populations `(I_-1, I_0, I_1)` of the figure-2 initial condition.
pub const FIG2_POPULATIONS: [f64; 3] = [0.10, 0.65, 0.25];

/// Phases `(theta_-1, theta_0, theta_1)` of the figure-2 initial condition.
pub const FIG2_PHASES: [f64; 3] = [0.0, 0.0, PI];

/// The frequency-map initial condition: `I_0 = 0.65`, `I_1 = 0.25`,
/// `theta_-1 = theta_0 = 0`, `theta_1 = pi`.
pub fn fig2_initial_state() -> ModeState {
    ModeState::from_populations_phases(FIG2_POPULATIONS, FIG2_PHASES)
        .expect("figure-2 populations sum to one")
}
