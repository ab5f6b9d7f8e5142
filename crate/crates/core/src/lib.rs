//! Route-to-chaos toolkit for a Bose-Einstein condensate in a tilted optical
//! lattice, reduced to three Wannier-Stark modes.
//!
//! The crate is organised by subsystem:
//!
//! * [`model`]: the three-well (trimer) mode equations, energy, observables and
//!   first-order frequency predictions.
//! * [`wannier`]: Bloch bands and the lowest-band Wannier function of the
//!   untilted lattice, used to compute overlap and dipole constants.
//! * [`kicked_rotor`]: classical standard map and quantum kicked rotor.
//! * [`spectral`]: amplitude spectra, relative-threshold peak detection and
//!   frequency maps over parameter sweeps.
//! * [`lyapunov`]: maximum Lyapunov exponent by tangent-space propagation.
//! * [`separatrix`]: the integrable two-well reduction and the critical
//!   nonlinearity at which a trajectory meets the separatrix.
//!
//! Units: lengths in lattice steps, energies in recoil energies, time in
//! `hbar / E_R`. Frequencies are angular.

pub mod kicked_rotor;
pub mod lyapunov;
pub mod model;
pub mod ode;
pub mod separatrix;
pub mod spectral;
pub mod wannier;

pub use model::{LatticeParams, ModeState, Trajectory};
pub use spectral::{FrequencyMap, PeakSet, Spectrum, TimeSeries, Window};
