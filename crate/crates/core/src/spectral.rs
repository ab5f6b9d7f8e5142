//! Amplitude spectra, relative-threshold peak detection, and frequency maps
//! assembled over parameter sweeps.
//!
//! All frequencies are angular: bin `k` of a transform of length `N` taken at
//! sampling interval `dt` sits at `w_k = 2 pi k / (N dt)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

/// Shortest series accepted by [`amplitude_spectrum`].
pub const MIN_SERIES_LEN: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("series too short: {len} samples (need at least {MIN_SERIES_LEN})")]
    TooShort { len: usize },
    #[error("invalid sampling interval {0}")]
    InvalidSampling(f64),
    #[error("spectrum is identically zero")]
    EmptySpectrum,
    #[error("relative threshold {0} outside (0, 1)")]
    InvalidThreshold(f64),
    #[error("sweep is empty")]
    EmptySweep,
    #[error("sweep parameters must be strictly increasing ({prev} then {next})")]
    NotIncreasing { prev: f64, next: f64 },
    #[error("sweep series must share length and sampling")]
    NonUniformSweep,
    #[error("at parameter {param}: {source}")]
    AtParameter {
        param: f64,
        #[source]
        source: Box<SpectralError>,
    },
}

/// Uniformly sampled scalar observable.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(dt: f64, values: Vec<f64>) -> Self {
        Self { dt, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Taper applied to the mean-subtracted series before transforming.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    None,
    #[default]
    Hann,
}

impl Window {
    /// Weight of sample `j` out of `n`. The Hann taper is the periodic form,
    /// so an on-bin sinusoid leaks into its two adjacent bins only.
    pub fn weight(self, j: usize, n: usize) -> f64 {
        match self {
            Window::None => 1.0,
            Window::Hann => 0.5 * (1.0 - (2.0 * PI * j as f64 / n as f64).cos()),
        }
    }
}

impl FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Window::None),
            "hann" => Ok(Window::Hann),
            other => Err(format!("unknown window '{other}' (expected none|hann)")),
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Window::None => "none",
            Window::Hann => "hann",
        })
    }
}

/// One-sided amplitude spectrum, bins `0 ..= n_fft / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub d_omega: f64,
    pub n_fft: usize,
    pub amplitudes: Vec<f64>,
}

impl Spectrum {
    pub fn omega(&self, k: usize) -> f64 {
        k as f64 * self.d_omega
    }

    pub fn omegas(&self) -> Vec<f64> {
        (0..self.amplitudes.len()).map(|k| self.omega(k)).collect()
    }

    pub fn max_amplitude(&self) -> f64 {
        self.amplitudes.iter().skip(1).cloned().fold(0.0, f64::max)
    }

    /// `(1/N) sum_k |X_k|^2` over the full two-sided transform, rebuilt from
    /// the stored half using the symmetry of a real input.
    pub fn two_sided_power(&self) -> f64 {
        let half = self.n_fft / 2;
        let mut acc = 0.0;
        for (k, a) in self.amplitudes.iter().enumerate() {
            let w = if k == 0 || k == half { 1.0 } else { 2.0 };
            acc += w * a * a;
        }
        acc / self.n_fft as f64
    }
}

/// Magnitude of the discrete Fourier transform of the mean-subtracted,
/// optionally windowed series, zero-padded to the next power of two.
pub fn amplitude_spectrum(series: &TimeSeries, window: Window) -> Result<Spectrum, SpectralError> {
    let n = series.len();
    if n < MIN_SERIES_LEN {
        return Err(SpectralError::TooShort { len: n });
    }
    if !(series.dt > 0.0 && series.dt.is_finite()) {
        return Err(SpectralError::InvalidSampling(series.dt));
    }
    let mean = series.values.iter().sum::<f64>() / n as f64;
    let n_fft = n.next_power_of_two();
    let mut buf: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); n_fft];
    for (j, v) in series.values.iter().enumerate() {
        buf[j] = Complex64::new((v - mean) * window.weight(j, n), 0.0);
    }
    FftPlanner::new().plan_fft_forward(n_fft).process(&mut buf);
    let amplitudes = buf[..=n_fft / 2].iter().map(|z| z.norm()).collect();
    Ok(Spectrum {
        d_omega: 2.0 * PI / (n_fft as f64 * series.dt),
        n_fft,
        amplitudes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    /// Interpolated angular frequency.
    pub omega: f64,
    /// Bin amplitude over the spectrum maximum.
    pub rel_amplitude: f64,
}

/// Detected peaks in increasing frequency, with the threshold used.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakSet {
    pub threshold: f64,
    pub peaks: Vec<Peak>,
}

impl PeakSet {
    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    /// Peaks with `lo < omega <= hi`.
    pub fn count_in_band(&self, lo: f64, hi: f64) -> usize {
        self.peaks
            .iter()
            .filter(|p| p.omega > lo && p.omega <= hi)
            .count()
    }

    /// The `n` strongest peaks, strongest first.
    pub fn strongest(&self, n: usize) -> Vec<Peak> {
        let mut v = self.peaks.clone();
        v.sort_by(|a, b| b.rel_amplitude.total_cmp(&a.rel_amplitude));
        v.truncate(n);
        v
    }
}

/// Local maxima above `rel_threshold * A_max`, positions refined by a
/// parabola through the three bins around each maximum.
///
/// The DC bin and the Nyquist bin are never peaks. A bin must exceed its
/// lower neighbour strictly and be at least its upper neighbour, so a flat
/// top is reported once, at its lowest frequency.
pub fn detect_peaks(spectrum: &Spectrum, rel_threshold: f64) -> Result<PeakSet, SpectralError> {
    if !(rel_threshold > 0.0 && rel_threshold < 1.0) {
        return Err(SpectralError::InvalidThreshold(rel_threshold));
    }
    let a = &spectrum.amplitudes;
    let a_max = spectrum.max_amplitude();
    if a_max <= 0.0 {
        return Err(SpectralError::EmptySpectrum);
    }
    let cut = rel_threshold * a_max;
    let mut peaks = Vec::new();
    for k in 1..a.len().saturating_sub(1) {
        let (l, m, r) = (a[k - 1], a[k], a[k + 1]);
        if m > l && m >= r && m >= cut {
            let denom = l - 2.0 * m + r;
            let delta = if denom != 0.0 { 0.5 * (l - r) / denom } else { 0.0 };
            peaks.push(Peak {
                omega: (k as f64 + delta) * spectrum.d_omega,
                rel_amplitude: m / a_max,
            });
        }
    }
    Ok(PeakSet {
        threshold: rel_threshold,
        peaks,
    })
}

/// Peak sets stacked over a sweep parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyMap {
    pub parameter: String,
    pub points: Vec<(f64, PeakSet)>,
}

impl FrequencyMap {
    /// Flattened `(param, omega, rel_amplitude)` rows in sweep order.
    pub fn rows(&self) -> Vec<(f64, f64, f64)> {
        self.points
            .iter()
            .flat_map(|(x, ps)| ps.peaks.iter().map(move |p| (*x, p.omega, p.rel_amplitude)))
            .collect()
    }
}

fn check_sweep_order<T>(sweep: &[(f64, T)]) -> Result<(), SpectralError> {
    if sweep.is_empty() {
        return Err(SpectralError::EmptySweep);
    }
    for w in sweep.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(SpectralError::NotIncreasing {
                prev: w[0].0,
                next: w[1].0,
            });
        }
    }
    Ok(())
}

/// Spectrum and peaks for one series.
pub fn peaks_of(series: &TimeSeries, rel_threshold: f64, window: Window) -> Result<PeakSet, SpectralError> {
    detect_peaks(&amplitude_spectrum(series, window)?, rel_threshold)
}

/// Builds a frequency map from already computed series.
pub fn frequency_map(
    parameter: &str,
    sweep: &[(f64, TimeSeries)],
    rel_threshold: f64,
    window: Window,
) -> Result<FrequencyMap, SpectralError> {
    check_sweep_order(sweep)?;
    let (len0, dt0) = (sweep[0].1.len(), sweep[0].1.dt);
    if sweep.iter().any(|(_, s)| s.len() != len0 || s.dt != dt0) {
        return Err(SpectralError::NonUniformSweep);
    }
    let points = sweep
        .iter()
        .map(|(x, s)| {
            peaks_of(s, rel_threshold, window)
                .map(|ps| (*x, ps))
                .map_err(|e| SpectralError::AtParameter {
                    param: *x,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FrequencyMap {
        parameter: parameter.to_string(),
        points,
    })
}

/// Maximal runs of consecutive sweep points whose peak count inside
/// `(band.0, band.1]` reaches `count_threshold`, as `(first, last)` parameter
/// values.
pub fn dense_windows(map: &FrequencyMap, count_threshold: usize, band: (f64, f64)) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut open: Option<(f64, f64)> = None;
    for (x, ps) in &map.points {
        if ps.count_in_band(band.0, band.1) >= count_threshold.max(1) {
            open = Some(match open {
                Some((a, _)) => (a, *x),
                None => (*x, *x),
            });
        } else if let Some(w) = open.take() {
            out.push(w);
        }
    }
    out.extend(open);
    out
}

/// Whether each sweep point is dense, in sweep order.
pub fn dense_flags(map: &FrequencyMap, count_threshold: usize, band: (f64, f64)) -> Vec<bool> {
    map.points
        .iter()
        .map(|(_, ps)| ps.count_in_band(band.0, band.1) >= count_threshold.max(1))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tone(n: usize, dt: f64, comps: &[(f64, f64)]) -> TimeSeries {
        TimeSeries::new(
            dt,
            (0..n)
                .map(|j| {
                    let t = j as f64 * dt;
                    comps.iter().map(|(a, w)| a * (w * t).cos()).sum::<f64>()
                })
                .collect(),
        )
    }

    fn on_bin(n: usize, dt: f64, k: usize) -> f64 {
        2.0 * PI * k as f64 / (n as f64 * dt)
    }

    #[test]
    fn on_bin_sinusoid_single_bin() {
        let (n, dt) = (1024, 0.5);
        let w0 = on_bin(n, dt, 37);
        let s = amplitude_spectrum(&tone(n, dt, &[(1.0, w0)]), Window::None).unwrap();
        for (k, a) in s.amplitudes.iter().enumerate() {
            if k == 37 {
                assert!((a - n as f64 / 2.0).abs() < 1e-8);
            } else {
                assert!(*a < 1e-10, "bin {k}: {a}");
            }
        }
        assert!((s.omega(37) - w0).abs() < 1e-12);
    }

    #[test]
    fn constant_series_is_zero() {
        let s = amplitude_spectrum(&TimeSeries::new(1.0, vec![3.5; 128]), Window::Hann).unwrap();
        assert!(s.amplitudes.iter().all(|a| *a < 1e-12));
        assert_eq!(detect_peaks(&s, 0.01), Err(SpectralError::EmptySpectrum));
    }

    #[test]
    fn too_short_and_bad_threshold() {
        assert_eq!(
            amplitude_spectrum(&TimeSeries::new(1.0, vec![0.0; 10]), Window::None),
            Err(SpectralError::TooShort { len: 10 })
        );
        let s = amplitude_spectrum(&tone(128, 1.0, &[(1.0, 0.3)]), Window::None).unwrap();
        assert!(detect_peaks(&s, 0.0).is_err());
        assert!(detect_peaks(&s, 1.0).is_err());
    }

    #[test]
    fn parseval_unpadded_and_padded() {
        for n in [1024usize, 2001] {
            let series = tone(n, 0.7, &[(1.0, 0.31), (0.4, 1.7), (0.05, 2.9)]);
            let mean = series.values.iter().sum::<f64>() / n as f64;
            let e: f64 = series.values.iter().map(|v| (v - mean).powi(2)).sum();
            let s = amplitude_spectrum(&series, Window::None).unwrap();
            assert!(((s.two_sided_power() - e) / e).abs() < 1e-10);
        }
    }

    #[test]
    fn hann_leakage_confined_to_neighbours() {
        let (n, dt) = (2048, 1.0);
        let s = amplitude_spectrum(&tone(n, dt, &[(1.0, on_bin(n, dt, 300))]), Window::Hann).unwrap();
        let peak = s.amplitudes[300];
        for (k, a) in s.amplitudes.iter().enumerate() {
            if !(299..=301).contains(&k) {
                assert!(*a < 1e-6 * peak, "bin {k}");
            }
        }
    }

    #[test]
    fn single_tone_one_peak() {
        let (n, dt) = (4096, 0.4);
        let w0 = 0.8123;
        let s = amplitude_spectrum(&tone(n, dt, &[(1.0, w0)]), Window::Hann).unwrap();
        let ps = detect_peaks(&s, 0.01).unwrap();
        assert_eq!(ps.len(), 1);
        assert!((ps.peaks[0].omega - w0).abs() < s.d_omega);
    }

    #[test]
    fn threshold_semantics() {
        let (n, dt) = (4096, 0.4);
        let series = tone(n, dt, &[(1.0, on_bin(n, dt, 400)), (1e-3, on_bin(n, dt, 900))]);
        let s = amplitude_spectrum(&series, Window::Hann).unwrap();
        assert_eq!(detect_peaks(&s, 0.01).unwrap().len(), 1);
        assert_eq!(detect_peaks(&s, 1e-4).unwrap().len(), 2);
    }

    #[test]
    fn three_tone_recovery() {
        let (n, dt) = (8192, 0.4);
        let ws = [0.21, 0.305, 0.515];
        let series = tone(n, dt, &[(1.0, ws[0]), (0.7, ws[1]), (0.5, ws[2])]);
        let s = amplitude_spectrum(&series, Window::Hann).unwrap();
        let ps = detect_peaks(&s, 0.01).unwrap();
        assert_eq!(ps.len(), 3);
        for (p, w) in ps.peaks.iter().zip(ws) {
            assert!((p.omega - w).abs() < s.d_omega);
        }
    }

    #[test]
    fn flat_top_reported_once() {
        let mut amplitudes = vec![0.0; 10];
        amplitudes[4] = 1.0;
        amplitudes[5] = 1.0;
        let s = Spectrum {
            d_omega: 0.1,
            n_fft: 18,
            amplitudes,
        };
        let ps = detect_peaks(&s, 0.5).unwrap();
        assert_eq!(ps.len(), 1);
        assert!(ps.peaks[0].omega >= 0.4 && ps.peaks[0].omega <= 0.45);
    }

    #[test]
    fn straight_branch_map() {
        let (n, dt) = (2048, 0.5);
        let sweep: Vec<_> = (0..10)
            .map(|i| {
                let x = 0.1 * i as f64;
                (x, tone(n, dt, &[(1.0, 0.5 + 0.3 * x)]))
            })
            .collect();
        let map = frequency_map("a", &sweep, 0.01, Window::Hann).unwrap();
        for (x, ps) in &map.points {
            assert_eq!(ps.len(), 1);
            assert!((ps.peaks[0].omega - (0.5 + 0.3 * x)).abs() < 2.0 * PI / (n as f64 * dt));
        }
        assert!(dense_windows(&map, 5, (0.0, 10.0)).is_empty());
        assert_eq!(map.rows().len(), 10);
    }

    #[test]
    fn map_rejects_unsorted_and_attaches_parameter() {
        let s = tone(128, 1.0, &[(1.0, 0.5)]);
        let sweep = vec![(0.2, s.clone()), (0.1, s.clone())];
        assert!(matches!(
            frequency_map("a", &sweep, 0.01, Window::Hann),
            Err(SpectralError::NotIncreasing { .. })
        ));
        let sweep = vec![(0.1, s.clone()), (0.2, TimeSeries::new(1.0, vec![1.0; 128]))];
        match frequency_map("a", &sweep, 0.01, Window::Hann) {
            Err(SpectralError::AtParameter { param, .. }) => assert_eq!(param, 0.2),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            frequency_map("a", &[], 0.01, Window::Hann),
            Err(SpectralError::EmptySweep)
        );
    }

    // Synthetic map: 30 scattered peaks per point on [a, b], one elsewhere.
    #[test]
    fn dense_window_synthetic_oracle() {
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let params: Vec<f64> = (0..50).map(|i| i as f64 * 0.01).collect();
        let (a, b) = (params[12], params[31]);
        let points = params
            .iter()
            .map(|&x| {
                let count = if x >= a && x <= b { 30 } else { 1 };
                let mut omegas: Vec<f64> = (0..count).map(|_| 0.01 + 0.98 * next()).collect();
                omegas.sort_by(f64::total_cmp);
                let peaks = omegas
                    .into_iter()
                    .map(|omega| Peak { omega, rel_amplitude: 0.5 })
                    .collect();
                (x, PeakSet { threshold: 0.01, peaks })
            })
            .collect();
        let map = FrequencyMap { parameter: "g".into(), points };
        assert_eq!(dense_windows(&map, 25, (0.0, 1.0)), vec![(a, b)]);
    }

    #[test]
    fn window_parsing() {
        assert_eq!("hann".parse::<Window>(), Ok(Window::Hann));
        assert_eq!("None".parse::<Window>(), Ok(Window::None));
        assert!("kaiser".parse::<Window>().is_err());
        assert_eq!(Window::Hann.to_string(), "hann");
    }

    proptest! {
        #[test]
        fn scale_invariance(scale_exp in -20i32..20, w1 in 0.1f64..1.4, w2 in 0.1f64..1.4, a2 in 0.001f64..1.0) {
            let series = tone(1024, 1.0, &[(1.0, w1), (a2, w2)]);
            let base = peaks_of(&series, 0.01, Window::Hann).unwrap();
            let c = 2f64.powi(scale_exp);
            let scaled = TimeSeries::new(1.0, series.values.iter().map(|v| v * c).collect());
            prop_assert_eq!(peaks_of(&scaled, 0.01, Window::Hann).unwrap(), base);
        }

        #[test]
        fn scale_invariance_general(c in 1e-3f64..1e3, w1 in 0.1f64..1.4) {
            let series = tone(1024, 1.0, &[(1.0, w1), (0.3, 2.0)]);
            let base = peaks_of(&series, 0.01, Window::Hann).unwrap();
            let scaled = TimeSeries::new(1.0, series.values.iter().map(|v| v * c).collect());
            let got = peaks_of(&scaled, 0.01, Window::Hann).unwrap();
            prop_assert_eq!(got.len(), base.len());
            for (p, q) in got.peaks.iter().zip(&base.peaks) {
                prop_assert!((p.omega - q.omega).abs() < 1e-9);
            }
        }

        #[test]
        fn circular_shift_keeps_peaks(shift in 0usize..1024, k in 20usize..400) {
            let (n, dt) = (1024usize, 1.0);
            let w0 = on_bin(n, dt, k);
            let series = tone(n, dt, &[(1.0, w0)]);
            let mut v = series.values.clone();
            v.rotate_left(shift);
            let s = amplitude_spectrum(&TimeSeries::new(dt, v), Window::None).unwrap();
            let ps = detect_peaks(&s, 0.01).unwrap();
            prop_assert_eq!(ps.len(), 1);
            prop_assert!((ps.peaks[0].omega - w0).abs() < s.d_omega);
        }
    }
}
