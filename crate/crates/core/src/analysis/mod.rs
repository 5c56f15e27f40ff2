//! Equilibrium diagnostics of thermalized chains: wave-action spectra,
//! ω–k spectra with ridge and width extraction, measured and mean-field
//! renormalization factors, nonlinearity ratios, four-wave decomposition
//! of the quartic energy and slow mode dynamics.

pub mod eta;
pub mod evolution;
pub mod fit;
pub mod moments;
pub mod quartic;
pub mod ratios;
pub mod resonance;
pub mod spectrogram;
pub mod spectrum;

pub use eta::{eta_beta_scaling, measure_eta, EtaMeasurement, ScalingFit};
pub use evolution::{demodulate, mode_evolution_record, windowed_drift, ModeEvolution, ModeTrace, WindowedDrift};
pub use moments::ModeMoments;
pub use quartic::{quartic_sums, resonant_quartic_fraction, sample_frame_indices, QuarticFraction};
pub use ratios::{nonlinearity_ratios, nonlinearity_ratios_from_parts, NonlinearityRatios};
pub use resonance::near_resonance_count;
pub use spectrogram::{spectrogram, SpectrogramBuilder, SpectrogramResult, WelchConfig, WindowMeta};
pub use spectrum::{average_power_spectrum, PowerSpectrum};
