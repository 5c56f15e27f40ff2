//! Simulation and spectral analysis of the β-FPU chain.
//!
//! * [`lattice`]: Hamiltonian, forces, symplectic integration, thermal data.
//! * [`modes`]: unitary Fourier modes, dispersion relations, normal
//!   variables and the mean-field renormalization factor.
//! * [`analysis`]: equilibrium spectra, ω–k spectrograms, measured η,
//!   nonlinearity ratios, four-wave decomposition, slow mode dynamics.
//! * [`breather`]: high-pass filtering and tracking of localized modes.
//! * [`experiment`], [`config`], [`io`], [`verify`]: run drivers,
//!   configuration, record files and the oracle suite.

pub mod analysis;
pub mod breather;
pub mod config;
pub mod error;
pub mod experiment;
pub mod io;
pub mod lattice;
pub mod modes;
pub mod verify;

pub use analysis::{PowerSpectrum, ScalingFit, SpectrogramResult};
pub use breather::{BreatherTrack, FilterSpec, FilteredField};
pub use config::{RunConfig, RunManifest};
pub use error::{Error, Result};
pub use lattice::{ChainParams, ChainState, EnergyBreakdown, Scheme, SiteEnergyField};
pub use modes::{Dispersion, DispersionKind, ModeState, NormalModeVars, RenormReport};
