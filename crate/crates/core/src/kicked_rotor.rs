//! Classical standard map and quantum kicked rotor.
//!
//! Classical: `p' = p + K sin x`, `x' = x + p'` (kick, then drift).
//! Quantum: one period multiplies by `exp(-i (K / kbar) cos x)` on the angle
//! grid, then by `exp(-i p_m^2 / (2 kbar))` on the ladder `p_m = kbar (m + beta)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::spectral::TimeSeries;

/// Ladder half-width used when none is given.
pub const DEFAULT_LADDER_HALF_WIDTH: usize = 1024;
/// Boundary amplitude allowed relative to the largest amplitude.
pub const BOUNDARY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KickedRotorError {
    #[error("ladder too small: boundary amplitude ratio {ratio:.3e} after kick {kick}")]
    TruncationOverflow { kick: usize, ratio: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalKRState {
    pub x: f64,
    pub p: f64,
}

impl ClassicalKRState {
    pub fn new(x: f64, p: f64) -> Self {
        Self { x, p }
    }

    /// Angle reduced to `[0, 2 pi)`.
    pub fn reduced_x(&self) -> f64 {
        self.x.rem_euclid(2.0 * PI)
    }
}

pub fn standard_map_step(state: ClassicalKRState, k_param: f64) -> ClassicalKRState {
    let p = state.p + k_param * state.x.sin();
    ClassicalKRState { x: state.x + p, p }
}

/// `d(x', p') / d(x, p)` of [`standard_map_step`].
pub fn standard_map_jacobian(state: ClassicalKRState, k_param: f64) -> [[f64; 2]; 2] {
    let kc = k_param * state.x.cos();
    [[1.0 + kc, 1.0], [kc, 1.0]]
}

pub fn standard_map_inverse(state: ClassicalKRState, k_param: f64) -> ClassicalKRState {
    let x = state.x - state.p;
    ClassicalKRState { x, p: state.p - k_param * x.sin() }
}

/// `p^2` after each kick, `t = 0..=n_kicks`, unit sampling interval.
pub fn classical_p2_series(x0: f64, p0: f64, k_param: f64, n_kicks: usize) -> TimeSeries {
    let mut s = ClassicalKRState::new(x0, p0);
    let mut values = Vec::with_capacity(n_kicks + 1);
    values.push(p0 * p0);
    for _ in 0..n_kicks {
        s = standard_map_step(s, k_param);
        values.push(s.p * s.p);
    }
    TimeSeries::new(1.0, values)
}

/// Wavefunction on the momentum ladder `m = -M..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct QKRState {
    pub kbar: f64,
    pub beta: f64,
    /// `amplitudes[i]` belongs to `m = i - M`.
    pub amplitudes: Vec<Complex64>,
}

impl QKRState {
    pub fn new(kbar: f64, beta: f64, amplitudes: Vec<Complex64>) -> Result<Self, KickedRotorError> {
        if !(kbar > 0.0 && kbar.is_finite()) {
            return Err(KickedRotorError::Invalid(format!("kbar = {kbar}")));
        }
        if !(0.0..1.0).contains(&beta) {
            return Err(KickedRotorError::Invalid(format!("beta = {beta} not in [0, 1)")));
        }
        if amplitudes.len() % 2 == 0 || amplitudes.len() < 3 {
            return Err(KickedRotorError::Invalid("ladder length must be odd and >= 3".into()));
        }
        let n: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if (n - 1.0).abs() > 1e-10 {
            return Err(KickedRotorError::Invalid(format!("norm {n}")));
        }
        Ok(Self { kbar, beta, amplitudes })
    }

    /// Single occupied ladder site `m`.
    pub fn ladder_state(kbar: f64, beta: f64, half_width: usize, m: i64) -> Result<Self, KickedRotorError> {
        if m.unsigned_abs() as usize >= half_width {
            return Err(KickedRotorError::Invalid(format!("m = {m} outside ladder")));
        }
        let mut a = vec![Complex64::new(0.0, 0.0); 2 * half_width + 1];
        a[(m + half_width as i64) as usize] = Complex64::new(1.0, 0.0);
        Self::new(kbar, beta, a)
    }

    /// Coherent Gaussian on the ladder through `p_center`, i.e. with
    /// `beta = frac(p_center / kbar)`.
    ///
    /// `fwhm` is the full width at half maximum of `|c(p)|^2`; zero gives the
    /// single site at `p_center`.
    pub fn gaussian(kbar: f64, p_center: f64, fwhm: f64, half_width: usize) -> Result<Self, KickedRotorError> {
        if !(kbar > 0.0) || !p_center.is_finite() {
            return Err(KickedRotorError::Invalid(format!("kbar = {kbar}, p_center = {p_center}")));
        }
        let r = p_center / kbar;
        Self::gaussian_on_ladder(kbar, r - r.floor(), p_center, fwhm, half_width)
    }

    /// Coherent Gaussian centred at `p_center` on the ladder with offset
    /// `beta`. With `fwhm = 0` the site nearest `p_center` is occupied.
    pub fn gaussian_on_ladder(
        kbar: f64,
        beta: f64,
        p_center: f64,
        fwhm: f64,
        half_width: usize,
    ) -> Result<Self, KickedRotorError> {
        if !(fwhm >= 0.0 && fwhm.is_finite()) || !p_center.is_finite() {
            return Err(KickedRotorError::Invalid(format!("fwhm = {fwhm}, p_center = {p_center}")));
        }
        if !(kbar > 0.0) {
            return Err(KickedRotorError::Invalid(format!("kbar = {kbar}")));
        }
        if fwhm == 0.0 {
            let m = (p_center / kbar - beta).round() as i64;
            return Self::ladder_state(kbar, beta, half_width, m);
        }
        let sigma = fwhm / (2.0 * (2.0 * 2f64.ln()).sqrt());
        let m_half = half_width as i64;
        let mut a: Vec<Complex64> = (-m_half..=m_half)
            .map(|m| {
                let dp = kbar * (m as f64 + beta) - p_center;
                Complex64::new((-dp * dp / (4.0 * sigma * sigma)).exp(), 0.0)
            })
            .collect();
        let n = a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        a.iter_mut().for_each(|c| *c /= n);
        Self::new(kbar, beta, a)
    }

    pub fn half_width(&self) -> usize {
        self.amplitudes.len() / 2
    }

    pub fn momentum(&self, i: usize) -> f64 {
        self.kbar * (i as f64 - self.half_width() as f64 + self.beta)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn p2_expectation(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, c)| c.norm_sqr() * self.momentum(i).powi(2))
            .sum()
    }

    /// Largest edge amplitude relative to the largest amplitude.
    pub fn boundary_ratio(&self) -> f64 {
        let max = self.amplitudes.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let edge = self.amplitudes[0].norm().max(self.amplitudes[self.amplitudes.len() - 1].norm());
        if max == 0.0 {
            0.0
        } else {
            edge / max
        }
    }
}

/// Precomputed kick and drift factors for one `(K, kbar, beta, M)`.
pub struct QkrPropagator {
    half_width: usize,
    n_fft: usize,
    kick: Option<Vec<Complex64>>,
    drift: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex64>,
}

impl QkrPropagator {
    pub fn new(k_param: f64, kbar: f64, beta: f64, half_width: usize) -> Self {
        let n_fft = (2 * half_width + 1).next_power_of_two();
        let ratio = k_param / kbar;
        let kick = (k_param != 0.0).then(|| {
            (0..n_fft)
                .map(|j| {
                    let x = 2.0 * PI * j as f64 / n_fft as f64;
                    Complex64::from_polar(1.0, -ratio * x.cos())
                })
                .collect()
        });
        let drift = (0..=2 * half_width)
            .map(|i| {
                let p = kbar * (i as f64 - half_width as f64 + beta);
                Complex64::from_polar(1.0, -p * p / (2.0 * kbar))
            })
            .collect();
        let mut planner = FftPlanner::new();
        Self {
            half_width,
            n_fft,
            kick,
            drift,
            forward: planner.plan_fft_forward(n_fft),
            inverse: planner.plan_fft_inverse(n_fft),
            buffer: vec![Complex64::new(0.0, 0.0); n_fft],
        }
    }

    fn slot(&self, i: usize) -> usize {
        let m = i as i64 - self.half_width as i64;
        m.rem_euclid(self.n_fft as i64) as usize
    }

    /// One kick followed by one free period, in place.
    pub fn step(&mut self, amps: &mut [Complex64]) {
        assert_eq!(amps.len(), 2 * self.half_width + 1);
        if let Some(kick) = &self.kick {
            self.buffer.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
            for (i, c) in amps.iter().enumerate() {
                let s = self.slot(i);
                self.buffer[s] = *c;
            }
            // sum_m c_m e^{i m x_j}
            self.inverse.process(&mut self.buffer);
            for (b, k) in self.buffer.iter_mut().zip(kick) {
                *b *= k;
            }
            self.forward.process(&mut self.buffer);
            let scale = 1.0 / self.n_fft as f64;
            for (i, c) in amps.iter_mut().enumerate() {
                *c = self.buffer[self.slot(i)] * scale;
            }
        }
        for (c, d) in amps.iter_mut().zip(&self.drift) {
            *c *= d;
        }
    }
}

/// Applies one period to `state`.
pub fn qkr_kick_then_free(state: &QKRState, k_param: f64) -> Result<QKRState, KickedRotorError> {
    let mut prop = QkrPropagator::new(k_param, state.kbar, state.beta, state.half_width());
    let mut next = state.clone();
    prop.step(&mut next.amplitudes);
    let ratio = next.boundary_ratio();
    if ratio > BOUNDARY_TOLERANCE {
        return Err(KickedRotorError::TruncationOverflow { kick: 1, ratio });
    }
    Ok(next)
}

/// `<p^2>` after each kick, `t = 0..=n_kicks`, from a coherent Gaussian.
pub fn qkr_p2_series(
    k_param: f64,
    kbar: f64,
    p_center: f64,
    fwhm: f64,
    n_kicks: usize,
    ladder_half_width: usize,
) -> Result<TimeSeries, KickedRotorError> {
    let state = QKRState::gaussian(kbar, p_center, fwhm, ladder_half_width)?;
    qkr_p2_series_from(state, k_param, n_kicks)
}

pub fn qkr_p2_series_from(
    mut state: QKRState,
    k_param: f64,
    n_kicks: usize,
) -> Result<TimeSeries, KickedRotorError> {
    if n_kicks == 0 {
        return Err(KickedRotorError::Invalid("n_kicks must be >= 1".into()));
    }
    let mut prop = QkrPropagator::new(k_param, state.kbar, state.beta, state.half_width());
    let mut values = Vec::with_capacity(n_kicks + 1);
    values.push(state.p2_expectation());
    for kick in 1..=n_kicks {
        prop.step(&mut state.amplitudes);
        let ratio = state.boundary_ratio();
        if ratio > BOUNDARY_TOLERANCE {
            return Err(KickedRotorError::TruncationOverflow { kick, ratio });
        }
        values.push(state.p2_expectation());
    }
    Ok(TimeSeries::new(1.0, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Power series for J_m, adequate for |x| < 5.
    fn bessel_j(m: u32, x: f64) -> f64 {
        let mut term = (x / 2.0).powi(m as i32) / (1..=m).map(f64::from).product::<f64>();
        let mut sum = term;
        for k in 1..60 {
            term *= -(x * x / 4.0) / (k as f64 * (k + m) as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn standard_map_examples() {
        let s = standard_map_step(ClassicalKRState::new(0.0, 0.56), 0.0);
        assert_eq!((s.x, s.p), (0.56, 0.56));
        let s = standard_map_step(ClassicalKRState::new(0.0, -1.3), 3.7);
        assert_eq!(s.p, -1.3);
        let s = standard_map_step(ClassicalKRState::new(PI / 2.0, 0.0), 0.5);
        assert!((s.p - 0.5).abs() < 1e-15);
        assert!((s.x - (PI / 2.0 + 0.5)).abs() < 1e-15);
    }

    #[test]
    fn reversible_over_hundred_kicks() {
        let s0 = ClassicalKRState::new(0.0, 0.56);
        let mut s = s0;
        for _ in 0..100 {
            s = standard_map_step(s, 0.5);
        }
        for _ in 0..100 {
            s = standard_map_inverse(s, 0.5);
        }
        assert!((s.x - s0.x).abs() < 1e-9 && (s.p - s0.p).abs() < 1e-9);
    }

    #[test]
    fn classical_series_shapes() {
        let s = classical_p2_series(0.0, 0.56, 0.0, 100);
        assert_eq!(s.len(), 101);
        assert!(s.values.iter().all(|&v| v == 0.56 * 0.56));
        let chaotic = classical_p2_series(0.0, 0.56, 5.0, 2000);
        assert!(chaotic.values[2000] > 100.0 * 0.56 * 0.56);
    }

    #[test]
    fn regular_orbit_has_few_peaks() {
        let s = classical_p2_series(0.0, 0.56, 0.5, 2000);
        let peaks = crate::spectral::peaks_of(&s, 1.0 / 500.0, crate::spectral::Window::Hann).unwrap();
        assert!(!peaks.peaks.is_empty());
        assert!(peaks.count_in_band(0.0, PI) < 40, "{}", peaks.len());
    }

    proptest! {
        #[test]
        fn area_preserving(x in -10.0..10.0f64, p in -10.0..10.0f64, k in 0.0..8.0f64) {
            let s = ClassicalKRState::new(x, p);
            let j = standard_map_jacobian(s, k);
            prop_assert!((j[0][0] * j[1][1] - j[0][1] * j[1][0] - 1.0).abs() < 1e-12);
            let h = 1e-6;
            let f = |x: f64, p: f64| standard_map_step(ClassicalKRState::new(x, p), k);
            let (a, b) = (f(x + h, p), f(x - h, p));
            let (c, d) = (f(x, p + h), f(x, p - h));
            let fd = [
                [(a.x - b.x) / (2.0 * h), (c.x - d.x) / (2.0 * h)],
                [(a.p - b.p) / (2.0 * h), (c.p - d.p) / (2.0 * h)],
            ];
            for r in 0..2 {
                for q in 0..2 {
                    prop_assert!((fd[r][q] - j[r][q]).abs() < 1e-7);
                }
            }
        }

        #[test]
        fn inverse_undoes_step(x in -10.0..10.0f64, p in -10.0..10.0f64, k in 0.0..8.0f64) {
            let s = standard_map_inverse(standard_map_step(ClassicalKRState::new(x, p), k), k);
            prop_assert!((s.x - x).abs() < 1e-12 && (s.p - p).abs() < 1e-12);
        }
    }

    #[test]
    fn kick_matches_bessel_expansion() {
        let kbar = 1.0;
        for eps in [0.01, 0.1, 0.7] {
            let s = QKRState::ladder_state(kbar, 0.0, 64, 0).unwrap();
            let out = qkr_kick_then_free(&s, eps * kbar).unwrap();
            for m in 0..4u32 {
                let j = bessel_j(m, eps);
                let plus = out.amplitudes[64 + m as usize].norm_sqr();
                let minus = out.amplitudes[64 - m as usize].norm_sqr();
                assert!((plus - j * j).abs() < 1e-14, "m={m} eps={eps}");
                assert!((minus - j * j).abs() < 1e-14);
            }
        }
        let s = QKRState::ladder_state(kbar, 0.0, 64, 0).unwrap();
        let out = qkr_kick_then_free(&s, 0.01).unwrap();
        assert!((out.amplitudes[65].norm_sqr() / 0.005f64.powi(2) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn free_evolution_keeps_moduli() {
        let s = QKRState::gaussian(2.89, 0.56, 5.0 * 2.89, 64).unwrap();
        let out = qkr_kick_then_free(&s, 0.0).unwrap();
        for (a, b) in s.amplitudes.iter().zip(&out.amplitudes) {
            assert!((a.norm() - b.norm()).abs() < 1e-15);
        }
        let series = qkr_p2_series(0.0, 2.89, 0.56, 5.0 * 2.89, 50, 64).unwrap();
        let v0 = series.values[0];
        assert!(series.values.iter().all(|v| ((v - v0) / v0).abs() < 1e-13));
    }

    #[test]
    fn unitary_over_long_runs() {
        let mut s = QKRState::gaussian(2.89, 0.56, 5.0 * 2.89, 256).unwrap();
        let mut prop = QkrPropagator::new(5.0, 2.89, s.beta, 256);
        let mut prev = s.norm_sqr();
        for _ in 0..2000 {
            prop.step(&mut s.amplitudes);
            let n = s.norm_sqr();
            assert!((n - prev).abs() < 1e-10);
            prev = n;
        }
        assert!((s.norm_sqr() - 1.0).abs() < 1e-8);
        assert!(s.boundary_ratio() < BOUNDARY_TOLERANCE);
    }

    #[test]
    fn gaussian_initial_state() {
        let s = QKRState::gaussian(2.89, 0.56, 0.0, 16).unwrap();
        assert!((s.p2_expectation() - 0.56 * 0.56).abs() < 1e-12);
        assert!((s.beta - 0.56 / 2.89).abs() < 1e-15);
        let g = QKRState::gaussian(2.89, 0.56, 5.0 * 2.89, 128).unwrap();
        assert!((g.norm_sqr() - 1.0).abs() < 1e-12);
        let off = QKRState::gaussian_on_ladder(2.89, 0.0, 0.56, 0.0, 16).unwrap();
        assert_eq!(off.p2_expectation(), 0.0);
        let mean: f64 = g.amplitudes.iter().enumerate().map(|(i, c)| c.norm_sqr() * g.momentum(i)).sum();
        assert!((mean - 0.56).abs() < 1e-3);
        // variance of |c|^2 is sigma^2 with fwhm = 2 sqrt(2 ln 2) sigma
        let sigma = 5.0 * 2.89 / (2.0 * (2.0 * 2f64.ln()).sqrt());
        let var = g.p2_expectation() - mean * mean;
        assert!((var / (sigma * sigma) - 1.0).abs() < 1e-2);
    }

    #[test]
    fn truncation_is_reported() {
        let err = qkr_p2_series(30.0, 1.0, 0.0, 1.0, 50, 16).unwrap_err();
        assert!(matches!(err, KickedRotorError::TruncationOverflow { .. }));
        assert!(QKRState::new(1.0, 1.2, vec![Complex64::new(1.0, 0.0); 3]).is_err());
    }

    #[test]
    fn quantum_growth_is_bounded() {
        let s = qkr_p2_series(5.0, 2.89, 0.56, 5.0 * 2.89, 2000, 1024).unwrap();
        let c = classical_p2_series(0.0, 0.56, 5.0, 2000);
        let tail: f64 = s.values[1500..].iter().sum::<f64>() / 501.0;
        let ctail: f64 = c.values[1500..].iter().sum::<f64>() / 501.0;
        assert!(tail < ctail);
    }
}
