//! Maximum Lyapunov exponent of the trimer flow by co-integrating a tangent
//! vector with the analytic Jacobian, renormalizing at fixed intervals.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::model::{trimer_rhs_amps, LatticeParams, ModeState, ModelError, DEFAULT_DT, DRIFT_TOLERANCE, WELLS};
use crate::ode::{rk4_step, step_count};

/// Exponent (in `1 / T_B`) above which a run counts as chaotic.
pub const CHAOS_THRESHOLD: f64 = 0.01;

/// Real 6x6 matrix, row-major, coordinates ordered as [`ModeState::to_real`].
pub type Jacobian = [[f64; 6]; 6];

/// Tangent vector riding on a base state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentState {
    pub base: ModeState,
    pub tangent: [f64; 6],
}

/// Result of [`mle`].
#[derive(Debug, Clone, PartialEq)]
pub struct MleResult {
    /// Exponent in units of `1 / T_B`.
    pub lambda: f64,
    /// Exponent in units of inverse time.
    pub lambda_raw: f64,
    /// `(time, running estimate in 1 / T_B)` after each renormalization
    /// past the transient.
    pub record: Vec<(f64, f64)>,
}

/// Integration settings for [`mle`]. Times are absolute, not in Bloch periods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleSettings {
    pub t_total: f64,
    pub renorm_interval: f64,
    pub t_transient: f64,
    pub dt: f64,
    pub initial_tangent: [f64; 6],
}

impl MleSettings {
    /// 500 Bloch periods total, 50 discarded, renormalized every period.
    pub fn defaults_for(params: &LatticeParams) -> Self {
        let tb = params.bloch_period();
        Self {
            t_total: 500.0 * tb,
            renorm_interval: tb,
            t_transient: 50.0 * tb,
            dt: DEFAULT_DT,
            initial_tangent: [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum LyapunovError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid settings: {0}")]
    InvalidSettings(String),
    #[error("at g = {g}: {source}")]
    AtG {
        g: f64,
        #[source]
        source: Box<LyapunovError>,
    },
}

/// Analytic Jacobian of [`crate::model::trimer_rhs`] in real coordinates.
///
/// With `dc_k/dt = F_k(c, conj c)`, `A = dF/dc` and `B = dF/d conj(c)`, a
/// perturbation `dx + i dy` maps to `(A + B) dx + i (A - B) dy`.
pub fn real_jacobian(state: &ModeState, params: &LatticeParams) -> Jacobian {
    let c = &state.amps;
    let gs = params.g * params.chi00;
    let gn = params.g * params.chi01;
    let zero = Complex64::new(0.0, 0.0);
    // dG/dc and dG/dconj(c) where F = -i G
    let mut dg = [[zero; 3]; 3];
    let mut dgc = [[zero; 3]; 3];
    for k in 0..3 {
        let ck = c[k];
        let ik = ck.norm_sqr();
        dg[k][k] = Complex64::new(WELLS[k] as f64 * params.omega_b + 2.0 * gs * ik, 0.0);
        dgc[k][k] = gs * ck * ck;
        for nb in [k.wrapping_sub(1), k + 1] {
            if nb < 3 {
                let cn = c[nb];
                dg[k][k] += gn * 2.0 * (ck.conj() * cn + ck * cn.conj());
                dgc[k][k] += gn * 2.0 * ck * cn;
                dg[k][nb] = Complex64::new(gn * 2.0 * (ik + cn.norm_sqr()), 0.0);
                dgc[k][nb] = gn * (ck * ck + cn * cn);
            }
        }
    }
    let mi = Complex64::new(0.0, -1.0);
    let mut jac = [[0.0; 6]; 6];
    for k in 0..3 {
        for j in 0..3 {
            let a = mi * dg[k][j];
            let b = mi * dgc[k][j];
            let sx = a + b;
            let sy = Complex64::new(0.0, 1.0) * (a - b);
            jac[2 * k][2 * j] = sx.re;
            jac[2 * k][2 * j + 1] = sy.re;
            jac[2 * k + 1][2 * j] = sx.im;
            jac[2 * k + 1][2 * j + 1] = sy.im;
        }
    }
    jac
}

fn mat_vec(m: &Jacobian, v: &[f64]) -> [f64; 6] {
    let mut out = [0.0; 6];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
    out
}

fn extended_rhs(y: &[f64; 12], params: &LatticeParams) -> [f64; 12] {
    let base: [f64; 6] = y[..6].try_into().expect("six base coordinates");
    let s = ModeState::from_real(&base);
    let d = trimer_rhs_amps(&s.amps, params);
    let jw = mat_vec(&real_jacobian(&s, params), &y[6..]);
    let mut out = [0.0; 12];
    for k in 0..3 {
        out[2 * k] = d[k].re;
        out[2 * k + 1] = d[k].im;
    }
    out[6..].copy_from_slice(&jw);
    out
}

fn tangent_norm(y: &[f64; 12]) -> f64 {
    y[6..].iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Advances a [`TangentState`] by `n_steps` RK4 steps of size `dt`.
pub fn propagate(ts: &TangentState, params: &LatticeParams, dt: f64, n_steps: usize) -> TangentState {
    let mut y = [0.0; 12];
    y[..6].copy_from_slice(&ts.base.to_real());
    y[6..].copy_from_slice(&ts.tangent);
    for _ in 0..n_steps {
        y = rk4_step(&y, dt, |y| extended_rhs(y, params));
    }
    TangentState {
        base: ModeState::from_real(&y[..6].try_into().expect("six")),
        tangent: y[6..].try_into().expect("six"),
    }
}

/// Maximum Lyapunov exponent from a single tangent vector.
///
/// Growth accumulated before `t_transient` is discarded; afterwards
/// `ln |w|` is summed at each renormalization and divided by the elapsed
/// time. The result is reported in `1 / T_B` (multiplied by `T_B = 2 pi / w_B`).
pub fn mle(state0: &ModeState, params: &LatticeParams, settings: &MleSettings) -> Result<MleResult, LyapunovError> {
    params.validate()?;
    let MleSettings {
        t_total,
        renorm_interval,
        t_transient,
        dt,
        initial_tangent,
    } = *settings;
    if !(dt > 0.0 && renorm_interval > 0.0 && t_transient >= 0.0 && t_transient < t_total) {
        return Err(LyapunovError::InvalidSettings(format!(
            "need dt > 0, renorm_interval > 0, 0 <= t_transient < t_total; got {settings:?}"
        )));
    }
    let w0 = initial_tangent.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(w0 > 0.0 && w0.is_finite()) {
        return Err(LyapunovError::InvalidSettings("initial tangent must be nonzero".into()));
    }
    let n_total = step_count(t_total, dt);
    let n_transient = step_count(t_transient, dt);
    let n_renorm = step_count(renorm_interval, dt).max(1);
    let tb = params.bloch_period();

    let mut y = [0.0; 12];
    y[..6].copy_from_slice(&state0.to_real());
    for i in 0..6 {
        y[6 + i] = initial_tangent[i] / w0;
    }
    let f = |y: &[f64; 12]| extended_rhs(y, params);
    let check = |y: &[f64; 12], step: usize| -> Result<(), ModelError> {
        let t = step as f64 * dt;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite { t });
        }
        let norm: f64 = y[..6].iter().map(|v| v * v).sum();
        let drift = (norm - 1.0).abs();
        if drift > DRIFT_TOLERANCE {
            return Err(ModelError::NormDrift { t, drift });
        }
        Ok(())
    };
    let renormalize = |y: &mut [f64; 12]| -> f64 {
        let r = tangent_norm(y);
        for v in &mut y[6..] {
            *v /= r;
        }
        r
    };

    for step in 1..=n_transient {
        y = rk4_step(&y, dt, f);
        if step % n_renorm == 0 {
            check(&y, step)?;
            renormalize(&mut y);
        }
    }
    check(&y, n_transient)?;
    renormalize(&mut y);

    let mut sum_log = 0.0;
    let mut record = Vec::new();
    let mut since = 0usize;
    for step in n_transient + 1..=n_total {
        y = rk4_step(&y, dt, f);
        since += 1;
        if since == n_renorm || step == n_total {
            check(&y, step)?;
            sum_log += renormalize(&mut y).ln();
            since = 0;
            let elapsed = (step - n_transient) as f64 * dt;
            record.push((step as f64 * dt, sum_log / elapsed * tb));
        }
    }
    let elapsed = (n_total - n_transient) as f64 * dt;
    let lambda_raw = sum_log / elapsed;
    Ok(MleResult {
        lambda: lambda_raw * tb,
        lambda_raw,
        record,
    })
}

/// [`mle`] over several `g` values, evaluated in parallel and returned in
/// input order. `params.g` is ignored.
pub fn mle_sweep(
    g_values: &[f64],
    state0: &ModeState,
    params: &LatticeParams,
    settings: &MleSettings,
) -> Result<Vec<(f64, MleResult)>, LyapunovError> {
    if g_values.is_empty() {
        return Err(LyapunovError::InvalidSettings("empty g list".into()));
    }
    g_values
        .par_iter()
        .map(|&g| {
            mle(state0, &params.with_g(g), settings)
                .map(|r| (g, r))
                .map_err(|e| LyapunovError::AtG { g, source: Box::new(e) })
        })
        .collect()
}

/// First and last sweep value whose exponent exceeds `threshold`.
pub fn chaotic_bracket(sweep: &[(f64, MleResult)], threshold: f64) -> Option<(f64, f64)> {
    let mut hits = sweep.iter().filter(|(_, r)| r.lambda > threshold).map(|(g, _)| *g);
    let first = hits.next()?;
    Some((first, hits.last().unwrap_or(first)))
}
