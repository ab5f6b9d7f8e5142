//! Integrable two-well reduction and the separatrix-crossing estimate of the
//! critical nonlinearity.
//!
//! With `I_-1 = 0` and `I_0 + I_1 = 1` the dimer energy on the cylinder
//! `(I_1, phi = theta_1 - theta_0)` is
//!
//! ```text
//! E = w_B I_1 + (g chi00 / 2) ((1 - I_1)^2 + I_1^2) + 2 g chi01 sqrt(I_1 (1 - I_1)) cos(phi)
//! ```
//!
//! Orbits below the saddle energy librate around the centre at `phi = pi`
//! (bound); orbits above it wind in `phi` (passing). A trajectory meets the
//! separatrix at the `g` where its energy equals the saddle energy.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{LatticeParams, ModelError, DEFAULT_DT};
use crate::ode::{rk4_step, step_count};

/// Grid resolution per axis used by [`dimer_fixed_points`].
pub const SCAN_RESOLUTION: usize = 400;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeparatrixError {
    #[error("chi01 = 0: the dimer energy does not depend on the phase")]
    DegeneratePhase,
    #[error("no stationary points found")]
    NoFixedPoints,
    #[error("no saddle point")]
    NoSaddle,
    #[error("E0 - E_s keeps one sign on [{g_min}, {g_max}]")]
    NoBracket { g_min: f64, g_max: f64 },
    #[error("orbit label changes under a 1e-6 perturbation of I_1")]
    SeparatrixAmbiguous,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Point on the dimer cylinder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimerPoint {
    /// Population of well 1, in `(0, 1)`.
    pub i1: f64,
    /// Relative phase `theta_1 - theta_0`, in `(-pi, pi]`.
    pub phi: f64,
}

impl DimerPoint {
    pub fn new(i1: f64, phi: f64) -> Result<Self, SeparatrixError> {
        if !(i1 > 0.0 && i1 < 1.0) || !phi.is_finite() {
            return Err(SeparatrixError::Invalid(format!("I_1 = {i1}, phi = {phi}")));
        }
        Ok(Self { i1, phi: wrap_phase(phi) })
    }

    /// Dimer amplitudes `(c_0, c_1)` with `theta_0 = 0`.
    pub fn amplitudes(&self) -> [Complex64; 2] {
        [
            Complex64::new((1.0 - self.i1).sqrt(), 0.0),
            Complex64::from_polar(self.i1.sqrt(), -self.phi),
        ]
    }
}

/// Maps an angle into `(-pi, pi]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let mut p = phi.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedPointKind {
    Center,
    Saddle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointInfo {
    pub point: DimerPoint,
    pub energy: f64,
    pub kind: FixedPointKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalGResult {
    pub g_star: f64,
    pub e0_at_g_star: f64,
    pub bracket: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitClass {
    Bound,
    Passing,
}

pub fn dimer_energy(point: &DimerPoint, params: &LatticeParams) -> f64 {
    let i = point.i1;
    let s = (i * (1.0 - i)).sqrt();
    params.omega_b * i
        + 0.5 * params.g * params.chi00 * ((1.0 - i).powi(2) + i * i)
        + 2.0 * params.g * params.chi01 * s * point.phi.cos()
}

/// Energy of the trajectory started at `ic`; identical to [`dimer_energy`].
pub fn initial_energy_e0(ic: &DimerPoint, params: &LatticeParams) -> f64 {
    dimer_energy(ic, params)
}

fn gradient(i: f64, phi: f64, p: &LatticeParams) -> [f64; 2] {
    let s = (i * (1.0 - i)).sqrt();
    let ds = (1.0 - 2.0 * i) / (2.0 * s);
    let gn = 2.0 * p.g * p.chi01;
    [
        p.omega_b + p.g * p.chi00 * (2.0 * i - 1.0) + gn * ds * phi.cos(),
        -gn * s * phi.sin(),
    ]
}

fn hessian(i: f64, phi: f64, p: &LatticeParams) -> [[f64; 2]; 2] {
    let s = (i * (1.0 - i)).sqrt();
    let ds = (1.0 - 2.0 * i) / (2.0 * s);
    let dds = (-1.0 - ds * ds) / s;
    let gn = 2.0 * p.g * p.chi01;
    let cross = -gn * ds * phi.sin();
    [
        [2.0 * p.g * p.chi00 + gn * dds * phi.cos(), cross],
        [cross, -gn * s * phi.cos()],
    ]
}

/// Gradient `(dE/dI_1, dE/dphi)` of [`dimer_energy`].
pub fn dimer_gradient(point: &DimerPoint, params: &LatticeParams) -> [f64; 2] {
    gradient(point.i1, point.phi, params)
}

pub fn dimer_hessian(point: &DimerPoint, params: &LatticeParams) -> [[f64; 2]; 2] {
    hessian(point.i1, point.phi, params)
}

fn norm2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Damped Newton iteration on `grad E = 0`.
fn refine(i0: f64, phi0: f64, p: &LatticeParams) -> Option<(f64, f64)> {
    let (mut i, mut phi) = (i0, phi0);
    let mut g = gradient(i, phi, p);
    for _ in 0..100 {
        if norm2(g) < 1e-13 {
            return Some((i, wrap_phase(phi)));
        }
        let h = hessian(i, phi, p);
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let di = -(h[1][1] * g[0] - h[0][1] * g[1]) / det;
        let dphi = -(-h[1][0] * g[0] + h[0][0] * g[1]) / det;
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let ni = i + step * di;
            let np = phi + step * dphi;
            if ni > 0.0 && ni < 1.0 {
                let ng = gradient(ni, np, p);
                if norm2(ng) < norm2(g) {
                    i = ni;
                    phi = np;
                    g = ng;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (norm2(g) < 1e-10).then(|| (i, wrap_phase(phi)))
}

fn classify(i: f64, phi: f64, p: &LatticeParams) -> FixedPointInfo {
    let h = hessian(i, phi, p);
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    let point = DimerPoint { i1: i, phi };
    FixedPointInfo {
        point,
        energy: dimer_energy(&point, p),
        kind: if det < 0.0 {
            FixedPointKind::Saddle
        } else {
            FixedPointKind::Center
        },
    }
}

/// All stationary points of the dimer energy on the open cylinder.
///
/// A 400 x 400 scan marks local minima of `|grad E|`; each is polished by
/// damped Newton iteration, classified by the sign of the Hessian
/// determinant and deduplicated within `1e-6`.
pub fn dimer_fixed_points(params: &LatticeParams) -> Result<Vec<FixedPointInfo>, SeparatrixError> {
    params.validate()?;
    if params.chi01 == 0.0 || params.g == 0.0 {
        return Err(SeparatrixError::DegeneratePhase);
    }
    let n = SCAN_RESOLUTION;
    let ival = |a: usize| (a as f64 + 0.5) / n as f64;
    let pval = |b: usize| -PI + 2.0 * PI * (b as f64 + 1.0) / n as f64;
    let mut grid = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            grid[a * n + b] = norm2(gradient(ival(a), pval(b), params));
        }
    }
    let mut found: Vec<FixedPointInfo> = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let v = grid[a * n + b];
            let mut is_min = true;
            'nb: for da in [-1i64, 0, 1] {
                for db in [-1i64, 0, 1] {
                    if da == 0 && db == 0 {
                        continue;
                    }
                    let aa = a as i64 + da;
                    if aa < 0 || aa >= n as i64 {
                        continue;
                    }
                    let bb = (b as i64 + db).rem_euclid(n as i64) as usize;
                    if grid[aa as usize * n + bb] < v {
                        is_min = false;
                        break 'nb;
                    }
                }
            }
            if !is_min {
                continue;
            }
            if let Some((i, phi)) = refine(ival(a), pval(b), params) {
                let dup = found.iter().any(|f| {
                    (f.point.i1 - i).abs() < 1e-6 && wrap_phase(f.point.phi - phi).abs() < 1e-6
                });
                if !dup {
                    found.push(classify(i, phi, params));
                }
            }
        }
    }
    if found.is_empty() {
        return Err(SeparatrixError::NoFixedPoints);
    }
    found.sort_by(|x, y| {
        x.point
            .i1
            .total_cmp(&y.point.i1)
            .then(x.point.phi.total_cmp(&y.point.phi))
    });
    Ok(found)
}

fn saddles(params: &LatticeParams) -> Result<Vec<FixedPointInfo>, SeparatrixError> {
    let s: Vec<_> = dimer_fixed_points(params)?
        .into_iter()
        .filter(|f| f.kind == FixedPointKind::Saddle)
        .collect();
    if s.is_empty() {
        Err(SeparatrixError::NoSaddle)
    } else {
        Ok(s)
    }
}

/// Energy of the lowest saddle.
pub fn separatrix_energy(params: &LatticeParams) -> Result<f64, SeparatrixError> {
    Ok(saddles(params)?
        .iter()
        .map(|f| f.energy)
        .fold(f64::INFINITY, f64::min))
}

/// The saddle whose energy is closest to `e0`.
pub fn separatrix_point_near(params: &LatticeParams, e0: f64) -> Result<FixedPointInfo, SeparatrixError> {
    saddles(params)?
        .into_iter()
        .min_by(|a, b| (a.energy - e0).abs().total_cmp(&(b.energy - e0).abs()))
        .ok_or(SeparatrixError::NoSaddle)
}

/// Saddle energy minus trajectory energy at one `g`, tracking a previous saddle
/// by Newton continuation before falling back to a full scan.
fn gap_at(
    ic: &DimerPoint,
    params: &LatticeParams,
    guess: Option<DimerPoint>,
) -> Result<(f64, DimerPoint), SeparatrixError> {
    let e0 = dimer_energy(ic, params);
    if let Some(gp) = guess {
        if let Some((i, phi)) = refine(gp.i1, gp.phi, params) {
            let info = classify(i, phi, params);
            if info.kind == FixedPointKind::Saddle {
                return Ok((e0 - info.energy, info.point));
            }
        }
    }
    let sp = separatrix_point_near(params, e0)?;
    Ok((e0 - sp.energy, sp.point))
}

/// Critical nonlinearity where the trajectory energy `E_0(g)` first meets the
/// saddle energy `E_s(g)` as `g` increases across `g_range`.
///
/// `params.g` is ignored. The scan uses `n_scan` equally spaced points; the
/// first sign change of `E_0 - E_s` is bisected below `1e-9` in `g`. Grid
/// points without a saddle are skipped.
pub fn critical_g(
    ic: &DimerPoint,
    params: &LatticeParams,
    g_range: (f64, f64),
    n_scan: usize,
) -> Result<CriticalGResult, SeparatrixError> {
    let (g_min, g_max) = g_range;
    if !(g_min > 0.0 && g_max > g_min) {
        return Err(SeparatrixError::Invalid(format!("g range {g_range:?}")));
    }
    if n_scan < 50 {
        return Err(SeparatrixError::Invalid(format!("n_scan = {n_scan} < 50")));
    }
    if params.chi01 == 0.0 {
        return Err(SeparatrixError::DegeneratePhase);
    }
    let mut prev: Option<(f64, f64, DimerPoint)> = None;
    let mut any_saddle = false;
    for k in 0..n_scan {
        let g = g_min + (g_max - g_min) * k as f64 / (n_scan - 1) as f64;
        let p = params.with_g(g);
        let (f, sp) = match gap_at(ic, &p, prev.map(|x| x.2)) {
            Ok(v) => v,
            Err(SeparatrixError::NoSaddle) | Err(SeparatrixError::NoFixedPoints) => {
                prev = None;
                continue;
            }
            Err(e) => return Err(e),
        };
        any_saddle = true;
        if let Some((g_prev, f_prev, sp_prev)) = prev {
            if f_prev.signum() != f.signum() || f == 0.0 {
                return bisect(ic, params, (g_prev, f_prev, sp_prev), (g, f));
            }
        }
        prev = Some((g, f, sp));
    }
    if any_saddle {
        Err(SeparatrixError::NoBracket { g_min, g_max })
    } else {
        Err(SeparatrixError::NoSaddle)
    }
}

fn bisect(
    ic: &DimerPoint,
    params: &LatticeParams,
    lo: (f64, f64, DimerPoint),
    hi: (f64, f64),
) -> Result<CriticalGResult, SeparatrixError> {
    let (mut g_lo, f_lo, mut sp) = lo;
    let (mut g_hi, _) = hi;
    while g_hi - g_lo > 1e-9 {
        let mid = 0.5 * (g_lo + g_hi);
        let (f, s) = gap_at(ic, &params.with_g(mid), Some(sp))?;
        if f.signum() == f_lo.signum() && f != 0.0 {
            g_lo = mid;
            sp = s;
        } else {
            g_hi = mid;
        }
    }
    let g_star = 0.5 * (g_lo + g_hi);
    Ok(CriticalGResult {
        g_star,
        e0_at_g_star: dimer_energy(ic, &params.with_g(g_star)),
        bracket: (g_lo, g_hi),
    })
}

/// Canonical dimer flow in amplitudes `(c_0, c_1)`, generated by
/// `H = w_B |c_1|^2 + (g chi00 / 2)(|c_0|^4 + |c_1|^4) + g chi01 (|c_0|^2 + |c_1|^2)(conj(c_0) c_1 + c.c.)`.
pub fn dimer_rhs(c: &[Complex64; 2], params: &LatticeParams) -> [Complex64; 2] {
    let gs = params.g * params.chi00;
    let gn = params.g * params.chi01;
    let (c0, c1) = (c[0], c[1]);
    let (i0, i1) = (c0.norm_sqr(), c1.norm_sqr());
    let h0 = gs * i0 * c0 + gn * (2.0 * i0 * c1 + c0 * c0 * c1.conj() + i1 * c1);
    let h1 = params.omega_b * c1 + gs * i1 * c1 + gn * (2.0 * i1 * c0 + c1 * c1 * c0.conj() + i0 * c0);
    let mi = Complex64::new(0.0, -1.0);
    [mi * h0, mi * h1]
}

fn dimer_rhs_real(y: &[f64; 4], params: &LatticeParams) -> [f64; 4] {
    let d = dimer_rhs(&[Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3])], params);
    [d[0].re, d[0].im, d[1].re, d[1].im]
}

/// Integrates the dimer from `ic` and returns `(t, c_0, c_1)` samples.
pub fn dimer_trajectory(
    ic: &DimerPoint,
    params: &LatticeParams,
    t_total: f64,
    dt: f64,
) -> Vec<(f64, [Complex64; 2])> {
    let a = ic.amplitudes();
    let mut y = [a[0].re, a[0].im, a[1].re, a[1].im];
    let n = step_count(t_total, dt);
    let mut out = Vec::with_capacity(n + 1);
    out.push((0.0, a));
    for k in 1..=n {
        y = rk4_step(&y, dt, |y| dimer_rhs_real(y, params));
        out.push((
            k as f64 * dt,
            [Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3])],
        ));
    }
    out
}

/// Bound if the unwrapped relative phase never drifts more than `2 pi` from
/// its start over `t_total`; passing otherwise.
fn classify_orbit(ic: &DimerPoint, params: &LatticeParams, t_total: f64) -> OrbitClass {
    let a = ic.amplitudes();
    let mut y = [a[0].re, a[0].im, a[1].re, a[1].im];
    let n = step_count(t_total, DEFAULT_DT);
    let phase = |y: &[f64; 4]| (Complex64::new(y[0], y[1]) * Complex64::new(y[2], -y[3])).arg();
    let mut last = phase(&y);
    let mut winding = 0.0;
    for _ in 0..n {
        y = rk4_step(&y, DEFAULT_DT, |y| dimer_rhs_real(y, params));
        let now = phase(&y);
        winding += wrap_phase(now - last);
        last = now;
        if winding.abs() > 2.0 * PI {
            return OrbitClass::Passing;
        }
    }
    OrbitClass::Bound
}

/// Classifies the dimer orbit through `ic` by phase winding.
///
/// Fails with [`SeparatrixError::SeparatrixAmbiguous`] when perturbing `I_1`
/// by `+-1e-6` changes the label.
pub fn dimer_orbit_class(
    ic: &DimerPoint,
    params: &LatticeParams,
    t_total: f64,
) -> Result<OrbitClass, SeparatrixError> {
    params.validate()?;
    let label = classify_orbit(ic, params, t_total);
    for d in [-1e-6, 1e-6] {
        let p = DimerPoint { i1: ic.i1 + d, ..*ic };
        if p.i1 > 0.0 && p.i1 < 1.0 && classify_orbit(&p, params, t_total) != label {
            return Err(SeparatrixError::SeparatrixAmbiguous);
        }
    }
    Ok(label)
}
