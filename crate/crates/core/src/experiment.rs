//! End-to-end equilibrium and breather runs that stream every sample into
//! the accumulators instead of storing the record.

use serde::{Deserialize, Serialize};

use crate::analysis::quartic::sample_frame_indices;
use crate::analysis::{
    measure_eta, nonlinearity_ratios_from_parts, resonant_quartic_fraction, EtaMeasurement, ModeMoments, ModeTrace,
    NonlinearityRatios, PowerSpectrum, QuarticFraction, SpectrogramBuilder, SpectrogramResult, WelchConfig,
};
use crate::breather::{BreatherScanner, DetectionThresholds, FilterSpec, ScanConfig, ScanReport};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::lattice::{
    equipartition_indicator, integrate_with, random_initial_state, total_energy, ChainParams, ChainState, EnergyParts,
    FnSink, SampleSink, Scheme,
};
use crate::modes::{eta_analytic, Dispersion, ModeState, ModeTransform};

/// Energy is checked every this many steps during the transient.
const TRANSIENT_CHECK_STRIDE: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSpec {
    pub params: ChainParams,
    pub dt: f64,
    pub scheme: Scheme,
    pub t_transient: f64,
    pub t_record: f64,
    pub sample_stride: usize,
    pub seed: u64,
    pub welch: WelchConfig,
    /// Modes whose full `(Q_k, P_k)` series are kept.
    pub traced_modes: Vec<usize>,
    /// Frames kept for the four-wave decomposition.
    pub quartic_frames: usize,
}

impl EquilibriumSpec {
    pub fn from_config(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        Ok(EquilibriumSpec {
            params: config.params()?,
            dt: config.dt,
            scheme: config.integrator,
            t_transient: config.t_transient,
            t_record: config.t_record,
            sample_stride: config.sample_stride as usize,
            seed: config.seed,
            welch: WelchConfig::default(),
            traced_modes: Vec::new(),
            quartic_frames: 100,
        })
    }

    pub fn dt_sample(&self) -> f64 {
        self.dt * self.sample_stride as f64
    }

    fn record_samples(&self) -> usize {
        ((self.t_record / self.dt).round() as usize) / self.sample_stride
    }
}

/// Accumulated output of one equilibrium run.
#[derive(Debug, Clone)]
pub struct EquilibriumRun {
    pub params: ChainParams,
    pub dt_sample: f64,
    pub samples: usize,
    pub moments: ModeMoments,
    pub spectrogram: SpectrogramResult,
    pub energy: Vec<EnergyParts>,
    pub traces: Vec<ModeTrace>,
    pub quartic_frames: Vec<ModeState>,
    /// Largest `|H(t) − H(0)|/H(0)` seen over transient checks and record.
    pub energy_drift: f64,
    pub final_state: ChainState,
}

/// Collects every per-sample statistic of the recorded window.
struct Accumulator {
    params: ChainParams,
    transform: ModeTransform,
    moments: ModeMoments,
    spectrogram: SpectrogramBuilder,
    energy: Vec<EnergyParts>,
    traces: Vec<ModeTrace>,
    frame_indices: Vec<usize>,
    frames: Vec<ModeState>,
    index: usize,
    h0: f64,
    drift: f64,
}

impl SampleSink for Accumulator {
    fn accept(&mut self, state: &ChainState) -> Result<()> {
        let modes = self.transform.to_modes(state);
        self.moments.push(&modes);
        self.spectrogram.push(&modes);
        let parts = EnergyParts::of(state, &self.params);
        self.drift = self.drift.max(((parts.total() - self.h0) / self.h0).abs());
        self.energy.push(parts);
        for trace in &mut self.traces {
            trace.push(&modes);
        }
        if self.frame_indices.binary_search(&self.index).is_ok() {
            self.frames.push(modes);
        }
        self.index += 1;
        Ok(())
    }
}

/// Thermalizes from seeded random data, then accumulates the record.
/// `extra` receives every recorded sample as well (e.g. file writers).
pub fn run_equilibrium<S: SampleSink>(spec: &EquilibriumSpec, extra: S) -> Result<EquilibriumRun> {
    let params = spec.params;
    let n = params.n;
    for &k in &spec.traced_modes {
        if k == 0 || k >= n {
            return Err(Error::param(format!("traced mode {k} outside 1..{n}")));
        }
    }
    let start = random_initial_state(&params, spec.seed);
    let h0 = total_energy(&start, &params)?.total;
    let mut drift: f64 = 0.0;
    let check = FnSink(|s: &ChainState| {
        let h = total_energy(s, &params)?.total;
        drift = drift.max(((h - h0) / h0).abs());
        Ok(())
    });
    let thermal = integrate_with(start, &params, spec.dt, spec.scheme, spec.t_transient, TRANSIENT_CHECK_STRIDE, check)?;

    let samples = spec.record_samples();
    let mut acc = Accumulator {
        params,
        transform: ModeTransform::new(n),
        moments: ModeMoments::new(n),
        spectrogram: SpectrogramBuilder::new(n, Dispersion::BARE, spec.welch)?,
        energy: Vec::with_capacity(samples),
        traces: spec.traced_modes.iter().map(|&k| ModeTrace::new(k)).collect(),
        frame_indices: sample_frame_indices(samples, spec.quartic_frames, spec.seed ^ 0x9e37_79b9_7f4a_7c15),
        frames: Vec::with_capacity(spec.quartic_frames),
        index: 0,
        h0,
        drift,
    };
    let t_end = thermal.t + spec.t_record;
    let final_state = integrate_with(
        thermal,
        &params,
        spec.dt,
        spec.scheme,
        t_end,
        spec.sample_stride,
        (&mut acc, extra),
    )?;
    let dt_sample = spec.dt_sample();
    Ok(EquilibriumRun {
        params,
        dt_sample,
        samples: acc.index,
        spectrogram: acc.spectrogram.finish(dt_sample)?,
        moments: acc.moments,
        energy: acc.energy,
        traces: acc.traces,
        quartic_frames: acc.frames,
        energy_drift: acc.drift,
        final_state,
    })
}

/// Derived equilibrium diagnostics of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSummary {
    pub beta: f64,
    pub equipartition: f64,
    pub energy_drift: f64,
    pub spectrum_bare: PowerSpectrum,
    /// Spectrum of `ã_k` under the measured `η`.
    pub spectrum_renormalized: PowerSpectrum,
    pub eta_analytic: f64,
    pub eta: EtaMeasurement,
    /// Ratios with `H̃` built from the measured `η`.
    pub ratios: NonlinearityRatios,
    pub quartic: Option<QuarticFraction>,
}

impl EquilibriumSummary {
    pub fn eta_measured(&self) -> f64 {
        self.eta.eta_fit
    }

    /// `⟨|ã_k|²⟩ / ⟨|a_k|²⟩` averaged over the fit range.
    pub fn renormalized_power_ratio(&self) -> f64 {
        let n = self.spectrum_bare.mean_sq_a.len() + 1;
        let ks = crate::analysis::spectrum::fit_modes(n);
        let sum: f64 = ks
            .iter()
            .map(|&k| self.spectrum_renormalized.mean_sq_a[k - 1] / self.spectrum_bare.mean_sq_a[k - 1])
            .sum();
        sum / ks.len() as f64
    }
}

impl EquilibriumRun {
    pub fn summarize(&self) -> Result<EquilibriumSummary> {
        let n = self.params.n;
        let eta = measure_eta(&self.spectrogram, n)?;
        let renorm = Dispersion::renormalized(eta.eta_fit.max(1.0))?;
        let quartic = if self.params.beta > 0.0 && !self.quartic_frames.is_empty() {
            Some(resonant_quartic_fraction(&self.quartic_frames)?)
        } else {
            None
        };
        Ok(EquilibriumSummary {
            beta: self.params.beta,
            equipartition: equipartition_indicator(&self.moments.mode_energies()?)?,
            energy_drift: self.energy_drift,
            spectrum_bare: PowerSpectrum::from_moments(&self.moments, Dispersion::BARE)?,
            spectrum_renormalized: PowerSpectrum::from_moments(&self.moments, renorm)?,
            eta_analytic: eta_analytic(&self.moments.mean_q_sq()?, self.params.beta, n)?.eta_analytic,
            ratios: nonlinearity_ratios_from_parts(&self.energy, eta.eta_fit)?,
            eta,
            quartic,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BreatherSpec {
    pub params: ChainParams,
    pub dt: f64,
    pub scheme: Scheme,
    pub t_transient: f64,
    pub t_record: f64,
    pub sample_stride: usize,
    pub seed: u64,
    pub filter: FilterSpec,
    pub thresholds: DetectionThresholds,
    pub scan: ScanConfig,
}

/// Thermalizes, then scans the record for breathers block by block.
pub fn run_breather_scan(spec: &BreatherSpec) -> Result<ScanReport> {
    let params = spec.params;
    let start = random_initial_state(&params, spec.seed);
    let thermal = integrate_with(start, &params, spec.dt, spec.scheme, spec.t_transient, TRANSIENT_CHECK_STRIDE, crate::lattice::NullSink)?;
    let mut scanner = BreatherScanner::new(params, spec.filter, spec.thresholds, spec.scan)?;
    let t_end = thermal.t + spec.t_record;
    integrate_with(thermal, &params, spec.dt, spec.scheme, t_end, spec.sample_stride, &mut scanner)?;
    scanner.finish_scan()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::NullSink;

    fn small_spec(beta: f64) -> EquilibriumSpec {
        EquilibriumSpec {
            params: ChainParams::new(16, beta, 20.0).unwrap(),
            dt: 0.02,
            scheme: Scheme::Suzuki4,
            t_transient: 200.0,
            t_record: 2000.0,
            sample_stride: 5,
            seed: 9,
            welch: WelchConfig {
                segment_len: 2048,
                overlap: 0.5,
            },
            traced_modes: vec![3],
            quartic_frames: 10,
        }
    }

    #[test]
    fn small_run_accumulates_everything() {
        let run = run_equilibrium(&small_spec(1.0), NullSink).unwrap();
        assert_eq!(run.samples, 20_000);
        assert_eq!(run.energy.len(), 20_000);
        assert_eq!(run.traces[0].len(), 20_000);
        assert_eq!(run.quartic_frames.len(), 10);
        assert!(run.energy_drift < 1e-6, "drift {}", run.energy_drift);
        assert!((run.final_state.t - 2200.0).abs() < 1e-9);
        let summary = run.summarize().unwrap();
        assert!(summary.eta_measured() > 1.0);
        assert!(summary.eta_analytic > 1.0);
        assert!(summary.quartic.unwrap().fraction > 0.0);
    }

    #[test]
    fn runs_are_deterministic() {
        let a = run_equilibrium(&small_spec(2.0), NullSink).unwrap();
        let b = run_equilibrium(&small_spec(2.0), NullSink).unwrap();
        assert_eq!(a.final_state, b.final_state);
        assert_eq!(a.spectrogram.peak_omega, b.spectrogram.peak_omega);
    }

    #[test]
    fn invalid_traced_mode_is_rejected() {
        let mut spec = small_spec(1.0);
        spec.traced_modes = vec![16];
        assert!(run_equilibrium(&spec, NullSink).is_err());
    }
}
