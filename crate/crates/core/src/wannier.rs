//! Lowest Bloch band and Wannier function of the untilted lattice
//! `H = P^2 / 2m - V0 cos(2 pi x)` with `m = pi^2 / 2`, and the overlap and
//! dipole integrals derived from it.
//!
//! The potential is written with its minimum at the origin, so wells sit at
//! the integers. The Wannier function stands in for the Wannier-Stark state of
//! the tilted lattice. Because it is real and even with orthogonal
//! translates, its off-diagonal dipole elements vanish identically; callers
//! that need nonzero cross terms in `<x>` supply them separately.

use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WannierError {
    #[error("plane-wave basis must be odd and >= 11, got {0}")]
    InvalidBasis(usize),
    #[error("quasimomentum grid must have >= 16 points, got {0}")]
    InvalidKGrid(usize),
    #[error("lattice depth {0} outside the supported range")]
    InvalidDepth(f64),
    #[error("band energies moved by {max_delta:.3e} when the basis was doubled")]
    ConvergenceWarning { max_delta: f64 },
    #[error("Wannier function not localized: boundary/peak ratio {ratio:.3e}")]
    LocalizationFailure { ratio: f64 },
}

/// Lowest band on a symmetric midpoint grid of quasimomenta in `(-pi, pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochBand {
    pub v0: f64,
    pub kappas: Vec<f64>,
    pub energies: Vec<f64>,
    /// Unit-norm plane-wave coefficients `c_j`, `j = -J ..= J`, one vector per
    /// quasimomentum, signed so the Bloch function is positive at `x = 0`.
    pub coefficients: Vec<Vec<f64>>,
}

impl BlochBand {
    pub fn n_basis(&self) -> usize {
        self.coefficients.first().map_or(0, Vec::len)
    }
}

fn hamiltonian(v0: f64, n_basis: usize, kappa: f64) -> DMatrix<f64> {
    let half = (n_basis / 2) as i64;
    DMatrix::from_fn(n_basis, n_basis, |r, c| {
        if r == c {
            let q = kappa + 2.0 * PI * (r as i64 - half) as f64;
            q * q / (PI * PI)
        } else if r.abs_diff(c) == 1 {
            -0.5 * v0
        } else {
            0.0
        }
    })
}

/// All band energies at one quasimomentum, ascending.
pub fn band_energies(v0: f64, n_basis: usize, kappa: f64) -> Vec<f64> {
    let mut e: Vec<f64> = hamiltonian(v0, n_basis, kappa)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    e.sort_by(f64::total_cmp);
    e
}

fn lowest_state(v0: f64, n_basis: usize, kappa: f64) -> (f64, Vec<f64>) {
    let eig = SymmetricEigen::new(hamiltonian(v0, n_basis, kappa));
    let (idx, e) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, e)| (i, *e))
        .expect("non-empty basis");
    let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let sign = if v.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    for x in &mut v {
        *x *= sign / norm;
    }
    (e, v)
}

fn kappa_grid(n_k: usize) -> Vec<f64> {
    (0..n_k)
        .map(|k| -PI + 2.0 * PI * (k as f64 + 0.5) / n_k as f64)
        .collect()
}

fn band_unchecked(v0: f64, n_basis: usize, n_k: usize) -> BlochBand {
    let kappas = kappa_grid(n_k);
    let (energies, coefficients) = kappas.iter().map(|&k| lowest_state(v0, n_basis, k)).unzip();
    BlochBand {
        v0,
        kappas,
        energies,
        coefficients,
    }
}

/// Lowest band of the untilted lattice.
///
/// Fails with [`WannierError::ConvergenceWarning`] when doubling the basis
/// moves any band energy by more than `1e-8`.
pub fn bloch_spectrum(v0: f64, n_basis: usize, n_k: usize) -> Result<BlochBand, WannierError> {
    if n_basis < 11 || n_basis % 2 == 0 {
        return Err(WannierError::InvalidBasis(n_basis));
    }
    if n_k < 16 {
        return Err(WannierError::InvalidKGrid(n_k));
    }
    if !(v0 >= 0.0 && v0.is_finite()) {
        return Err(WannierError::InvalidDepth(v0));
    }
    let band = band_unchecked(v0, n_basis, n_k);
    let max_delta = band
        .kappas
        .iter()
        .zip(&band.energies)
        .map(|(&k, &e)| (lowest_state(v0, 2 * n_basis + 1, k).0 - e).abs())
        .fold(0.0, f64::max);
    if max_delta > 1e-8 {
        return Err(WannierError::ConvergenceWarning { max_delta });
    }
    Ok(band)
}

/// Discretisation of [`wannier_ground_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WannierSettings {
    pub n_basis: usize,
    pub n_k: usize,
    pub points_per_step: usize,
    /// Grid covers `[-half_width, half_width]` lattice steps.
    pub half_width: usize,
}

impl Default for WannierSettings {
    fn default() -> Self {
        Self {
            n_basis: 21,
            n_k: 64,
            points_per_step: 64,
            half_width: 16,
        }
    }
}

/// Real samples of the lowest-band Wannier function on a uniform grid
/// symmetric about the well at `x = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct WannierFunction {
    pub h: f64,
    pub points_per_step: usize,
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
}

impl WannierFunction {
    fn center(&self) -> usize {
        self.x.len() / 2
    }

    /// `phi(x_j - shift)` on the grid, zero outside it.
    fn shifted(&self, j: usize, shift: i32) -> f64 {
        let idx = j as i64 - shift as i64 * self.points_per_step as i64;
        if idx < 0 || idx as usize >= self.phi.len() {
            0.0
        } else {
            self.phi[idx as usize]
        }
    }

    fn trapezoid<F: Fn(usize) -> f64>(&self, f: F) -> f64 {
        let n = self.phi.len();
        let inner: f64 = (1..n - 1).map(&f).sum();
        self.h * (inner + 0.5 * (f(0) + f(n - 1)))
    }

    /// `int phi(x) phi(x - n) dx`.
    pub fn translate_overlap(&self, n: i32) -> f64 {
        self.trapezoid(|j| self.phi[j] * self.shifted(j, n))
    }

    /// Largest `|phi(x) - phi(-x)|` over the grid.
    pub fn asymmetry(&self) -> f64 {
        let n = self.phi.len();
        (0..n)
            .map(|j| (self.phi[j] - self.phi[n - 1 - j]).abs())
            .fold(0.0, f64::max)
    }

    pub fn peak(&self) -> f64 {
        self.phi.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }

    /// Full width at half maximum of the density `phi^2`, linearly
    /// interpolated between grid points.
    pub fn density_fwhm(&self) -> f64 {
        let c = self.center();
        let half = 0.5 * self.phi[c] * self.phi[c];
        let mut j = c;
        while j + 1 < self.phi.len() && self.phi[j + 1].powi(2) > half {
            j += 1;
        }
        let (a, b) = (self.phi[j].powi(2), self.phi[j + 1].powi(2));
        let frac = (a - half) / (a - b);
        2.0 * (self.x[j] + frac * self.h)
    }
}

/// Lowest-band Wannier function with default discretisation.
pub fn wannier_ground(v0: f64) -> Result<WannierFunction, WannierError> {
    wannier_ground_with(v0, &WannierSettings::default())
}

/// Lowest-band Wannier function built from Bloch states that are real and
/// positive at the well centre.
///
/// Requires `v0 >= 1`; shallower lattices are rejected as poorly localized.
pub fn wannier_ground_with(v0: f64, settings: &WannierSettings) -> Result<WannierFunction, WannierError> {
    if !(v0 >= 1.0 && v0.is_finite()) {
        return Err(WannierError::InvalidDepth(v0));
    }
    let band = bloch_spectrum(v0, settings.n_basis, settings.n_k)?;
    let half_j = (settings.n_basis / 2) as i64;
    let h = 1.0 / settings.points_per_step as f64;
    let n_pts = 2 * settings.half_width * settings.points_per_step + 1;
    let x: Vec<f64> = (0..n_pts)
        .map(|j| (j as f64 - (n_pts / 2) as f64) * h)
        .collect();
    let scale = 1.0 / settings.n_k as f64;
    let phi: Vec<f64> = x
        .iter()
        .map(|&xv| {
            let mut acc = 0.0;
            for (kappa, coeffs) in band.kappas.iter().zip(&band.coefficients) {
                for (j, c) in coeffs.iter().enumerate() {
                    let q = kappa + 2.0 * PI * (j as i64 - half_j) as f64;
                    acc += c * (q * xv).cos();
                }
            }
            acc * scale
        })
        .collect();
    let wf = WannierFunction {
        h,
        points_per_step: settings.points_per_step,
        x,
        phi,
    };
    let ratio = wf.phi[0].abs().max(wf.phi[n_pts - 1].abs()) / wf.peak();
    if ratio > 1e-6 {
        return Err(WannierError::LocalizationFailure { ratio });
    }
    Ok(wf)
}

/// `chi_{0i} = int phi^3(x) phi(x - i) dx`.
pub fn chi_overlap(phi: &WannierFunction, i: i32) -> f64 {
    phi.trapezoid(|j| phi.phi[j].powi(3) * phi.shifted(j, i))
}

/// `int phi(x) x phi(x - i) dx`.
pub fn dipole_element(phi: &WannierFunction, i: i32) -> f64 {
    phi.trapezoid(|j| phi.phi[j] * phi.x[j] * phi.shifted(j, i))
}

/// Lattice-derived model constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeConstants {
    pub chi00: f64,
    pub chi01: f64,
    pub chi02: f64,
    pub x1: f64,
    pub x2: f64,
}

pub fn lattice_constants(v0: f64) -> Result<LatticeConstants, WannierError> {
    let wf = wannier_ground(v0)?;
    Ok(LatticeConstants {
        chi00: chi_overlap(&wf, 0),
        chi01: chi_overlap(&wf, 1),
        chi02: chi_overlap(&wf, 2),
        x1: dipole_element(&wf, 1),
        x2: dipole_element(&wf, 2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_particle_band() {
        let band = bloch_spectrum(0.0, 11, 32).unwrap();
        for (k, e) in band.kappas.iter().zip(&band.energies) {
            assert!((e - k * k / (PI * PI)).abs() < 1e-12);
        }
        let e0 = band_energies(0.0, 11, 0.0)[0];
        assert!(e0.abs() < 1e-14);
    }

    // Two-level degenerate perturbation theory at the zone edge.
    #[test]
    fn weak_lattice_gap() {
        let e = band_energies(0.1, 21, PI);
        let gap = e[1] - e[0];
        assert!((gap - 0.1).abs() < 0.05 * 0.1, "gap {gap}");
    }

    // Harmonic approximation of a single well: zero-point energy w/2 above
    // the well bottom -V0, with w = sqrt(8 V0).
    #[test]
    fn deep_lattice_ground_energy() {
        let v0 = 5.0;
        let e0 = band_energies(v0, 21, 0.0)[0];
        let zero_point = (8.0 * v0).sqrt() / 2.0;
        assert!((((e0 + v0) - zero_point) / zero_point).abs() < 0.1, "{e0}");
        assert!(e0 < -v0 + zero_point);
    }

    #[test]
    fn band_is_even_and_coefficients_normalized() {
        let band = bloch_spectrum(5.0, 21, 32).unwrap();
        let n = band.energies.len();
        for k in 0..n {
            assert!((band.energies[k] - band.energies[n - 1 - k]).abs() < 1e-12);
            let norm: f64 = band.coefficients[k].iter().map(|c| c * c).sum();
            assert!((norm - 1.0).abs() < 1e-12);
        }
        assert_eq!(band.n_basis(), 21);
    }

    #[test]
    fn spectrum_input_validation() {
        assert_eq!(bloch_spectrum(5.0, 10, 32), Err(WannierError::InvalidBasis(10)));
        assert_eq!(bloch_spectrum(5.0, 9, 32), Err(WannierError::InvalidBasis(9)));
        assert_eq!(bloch_spectrum(5.0, 11, 8), Err(WannierError::InvalidKGrid(8)));
        assert!(matches!(
            bloch_spectrum(400.0, 11, 16),
            Err(WannierError::ConvergenceWarning { .. })
        ));
    }

    #[test]
    fn shallow_lattice_rejected() {
        assert_eq!(wannier_ground(0.5), Err(WannierError::InvalidDepth(0.5)));
        let tight = WannierSettings {
            half_width: 1,
            ..WannierSettings::default()
        };
        assert!(matches!(
            wannier_ground_with(1.0, &tight),
            Err(WannierError::LocalizationFailure { .. })
        ));
    }

    #[test]
    fn invariants_across_depths() {
        for v0 in [1.0, 2.0, 5.0, 10.0, 20.0] {
            let wf = wannier_ground(v0).unwrap();
            assert!((wf.translate_overlap(0) - 1.0).abs() < 1e-6, "v0 {v0}");
            assert!(wf.asymmetry() < 1e-6);
            assert!(wf.translate_overlap(1).abs() < 1e-6);
            assert!(wf.translate_overlap(2).abs() < 1e-6);
            assert!(wf.x[wf.x.len() - 1] >= 5.0);
        }
    }

    #[test]
    fn width_matches_harmonic_estimate() {
        let wf = wannier_ground(5.0).unwrap();
        let sigma = (1.0 / (PI * PI * 40f64.sqrt())).sqrt();
        let estimate = 2.0 * (2.0 * 2f64.ln()).sqrt() * sigma;
        let fwhm = wf.density_fwhm();
        assert!(fwhm < 1.0);
        assert!(((fwhm - estimate) / estimate).abs() < 0.3, "{fwhm} vs {estimate}");
    }

    // Deep lattice: compare with the harmonic-oscillator Gaussian.
    #[test]
    fn deep_lattice_gaussian() {
        let v0 = 20.0;
        let wf = wannier_ground(v0).unwrap();
        let m_omega = PI * PI / 2.0 * (8.0 * v0).sqrt();
        let norm = (m_omega / PI).powf(0.25);
        let diff: f64 = wf
            .x
            .iter()
            .zip(&wf.phi)
            .map(|(x, p)| (p - norm * (-0.5 * m_omega * x * x).exp()).powi(2))
            .sum::<f64>()
            * wf.h;
        assert!(diff.sqrt() < 0.05, "L2 distance {}", diff.sqrt());
    }

    #[test]
    fn overlaps_at_v0_5() {
        let wf = wannier_ground(5.0).unwrap();
        let c0 = chi_overlap(&wf, 0);
        let c1 = chi_overlap(&wf, 1);
        let c2 = chi_overlap(&wf, 2);
        assert!((1.5..=3.0).contains(&c0), "chi00 {c0}");
        assert!((chi_overlap(&wf, -1) - c1).abs() < 1e-12);
        assert!((chi_overlap(&wf, -2) - c2).abs() < 1e-12);
        assert!(c1.abs() < c0 && c2.abs() < c1.abs());
    }

    #[test]
    fn dipole_elements_vanish_by_symmetry() {
        let wf = wannier_ground(5.0).unwrap();
        for i in 0..=2 {
            assert!(dipole_element(&wf, i).abs() < 1e-8, "i = {i}");
        }
    }

    #[test]
    fn chi00_grows_with_depth() {
        let vals: Vec<f64> = [2.0, 5.0, 10.0, 20.0]
            .iter()
            .map(|&v| chi_overlap(&wannier_ground(v).unwrap(), 0))
            .collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]), "{vals:?}");
    }

    #[test]
    fn constants_converged() {
        let base = wannier_ground(5.0).unwrap();
        let fine = wannier_ground_with(
            5.0,
            &WannierSettings {
                n_basis: 41,
                points_per_step: 128,
                ..WannierSettings::default()
            },
        )
        .unwrap();
        for i in 0..=2 {
            assert!((chi_overlap(&base, i) - chi_overlap(&fine, i)).abs() < 1e-6);
            assert!((dipole_element(&base, i) - dipole_element(&fine, i)).abs() < 1e-6);
        }
    }
}
