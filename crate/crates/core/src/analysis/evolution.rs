use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::{normal_var, Dispersion, ModeState};

/// Time series of one mode's `(Q_k, P_k)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModeTrace {
    pub k: usize,
    pub t: Vec<f64>,
    pub q: Vec<Complex64>,
    pub p: Vec<Complex64>,
}

impl ModeTrace {
    pub fn new(k: usize) -> Self {
        ModeTrace {
            k,
            ..Default::default()
        }
    }

    pub fn push(&mut self, modes: &ModeState) {
        self.t.push(modes.t);
        self.q.push(modes.q[self.k]);
        self.p.push(modes.p[self.k]);
    }

    pub fn from_records(records: &[ModeState], k: usize) -> Self {
        let mut trace = ModeTrace::new(k);
        records.iter().for_each(|r| trace.push(r));
        trace
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Amplitude and demodulated phase of a normal variable.
///
/// A free wave rotates as `a_k ∝ e^{−iωt}`; `phase` is the unwrapped
/// argument of `a_k(t) e^{iωt}`, i.e. the phase with the linear rotation at
/// the selected frequency removed. Demodulating at `ω′` instead of the true
/// `ω` leaves a ramp of slope `ω′ − ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeEvolution {
    pub k: usize,
    pub omega: f64,
    pub t: Vec<f64>,
    pub amplitude: Vec<f64>,
    pub phase: Vec<f64>,
}

pub fn mode_evolution_record(trace: &ModeTrace, n: usize, dispersion: Dispersion) -> Result<ModeEvolution> {
    if trace.k == 0 || trace.k >= n {
        return Err(Error::param(format!("mode {} outside 1..{n}", trace.k)));
    }
    let omega = dispersion.omega(n, trace.k);
    demodulate(trace, omega)
}

/// As [`mode_evolution_record`] but at an explicit frequency.
pub fn demodulate(trace: &ModeTrace, omega: f64) -> Result<ModeEvolution> {
    if !(omega > 0.0) {
        return Err(Error::param(format!("nonpositive frequency {omega}")));
    }
    let mut amplitude = Vec::with_capacity(trace.len());
    let mut phase = Vec::with_capacity(trace.len());
    let mut prev: Option<f64> = None;
    let t0 = trace.t.first().copied().unwrap_or(0.0);
    for ((t, q), p) in trace.t.iter().zip(&trace.q).zip(&trace.p) {
        let a = normal_var(*q, *p, omega);
        amplitude.push(a.norm());
        let z = a * Complex64::from_polar(1.0, omega * (t - t0));
        let raw = z.arg();
        let unwrapped = match prev {
            None => raw,
            Some(last) => last + wrap(raw - last),
        };
        phase.push(unwrapped);
        prev = Some(unwrapped);
    }
    Ok(ModeEvolution {
        k: trace.k,
        omega,
        t: trace.t.clone(),
        amplitude,
        phase,
    })
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

/// Phase excursion statistics over consecutive windows of fixed duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowedDrift {
    /// Median over windows of the net change `|φ(t_end) − φ(t_start)|`.
    pub median_net_drift: f64,
    /// Median over windows of `max |φ(t) − φ(t_window_start)|`.
    pub median_phase_excursion: f64,
    pub max_phase_excursion: f64,
    /// Median over windows of `(max − min)/mean` of `|a|²`.
    pub median_modulation_depth: f64,
    pub windows: usize,
}

pub fn windowed_drift(evo: &ModeEvolution, window: f64) -> Result<WindowedDrift> {
    if !(window > 0.0) {
        return Err(Error::param("window must be positive"));
    }
    let mut excursions = Vec::new();
    let mut net = Vec::new();
    let mut depths = Vec::new();
    let mut start = 0;
    while start < evo.t.len() {
        let t_start = evo.t[start];
        let end = evo.t[start..]
            .iter()
            .position(|t| *t > t_start + window)
            .map(|i| start + i);
        let Some(end) = end else { break };
        let phi0 = evo.phase[start];
        let exc = evo.phase[start..end]
            .iter()
            .map(|p| (p - phi0).abs())
            .fold(0.0, f64::max);
        excursions.push(exc);
        net.push((evo.phase[end - 1] - phi0).abs());
        let power: Vec<f64> = evo.amplitude[start..end].iter().map(|a| a * a).collect();
        let mean = power.iter().sum::<f64>() / power.len() as f64;
        let (lo, hi) = power
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        depths.push(if mean > 0.0 { (hi - lo) / mean } else { 0.0 });
        start = end;
    }
    if excursions.is_empty() {
        return Err(Error::InsufficientData("record shorter than one window".into()));
    }
    let max = excursions.iter().copied().fold(0.0, f64::max);
    Ok(WindowedDrift {
        median_net_drift: median(&mut net),
        median_phase_excursion: median(&mut excursions),
        max_phase_excursion: max,
        median_modulation_depth: median(&mut depths),
        windows: excursions.len(),
    })
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len();
    if m == 0 {
        return f64::NAN;
    }
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{bare_omega, modes_from_normal_vars};
    use approx::assert_relative_eq;

    fn free_wave_trace(n: usize, k: usize, omega_true: f64, dt: f64, steps: usize) -> ModeTrace {
        let omega = crate::modes::Dispersion::BARE.table(n);
        let mut trace = ModeTrace::new(k);
        for i in 0..steps {
            let t = i as f64 * dt;
            let mut a = vec![Complex64::new(0.0, 0.0); n - 1];
            a[k - 1] = Complex64::from_polar(0.8, 0.3 - omega_true * t);
            // the mode frequency used to build (Q, P) must match the one
            // used to read them back, so store the wave at its true frequency
            let mut table = omega.clone();
            table[k - 1] = omega_true;
            trace.push(&modes_from_normal_vars(&a, &table, (0.0, 0.0), t).unwrap());
        }
        trace
    }

    #[test]
    fn exact_demodulation_gives_constant_phase() {
        let n = 32;
        let w = bare_omega(n, 5);
        let trace = free_wave_trace(n, 5, w, 0.1, 500);
        let evo = mode_evolution_record(&trace, n, Dispersion::BARE).unwrap();
        for (ph, amp) in evo.phase.iter().zip(&evo.amplitude) {
            assert_relative_eq!(*ph, 0.3, epsilon = 1e-12);
            assert_relative_eq!(*amp, 0.8, epsilon = 1e-12);
        }
    }

    #[test]
    fn wrong_frequency_leaves_linear_ramp() {
        let n = 32;
        let w = bare_omega(n, 5);
        let trace = free_wave_trace(n, 5, w, 0.1, 2000);
        let wrong = 1.1 * w;
        let evo = demodulate(&trace, wrong).unwrap();
        for (t, ph) in evo.t.iter().zip(&evo.phase) {
            // amplitude picks up a small counter-rotating part at the wrong ω,
            // but the phase ramp slope is exactly ω′ − ω
            let expected = 0.3 + (wrong - w) * t;
            assert!((ph - expected).abs() < 0.06, "t={t}: {ph} vs {expected}");
        }
        let slope = (evo.phase[1999] - evo.phase[1000]) / (evo.t[1999] - evo.t[1000]);
        assert_relative_eq!(slope, wrong - w, max_relative = 0.05);
    }

    #[test]
    fn windowed_drift_of_constant_phase_is_zero() {
        let n = 16;
        let w = bare_omega(n, 3);
        let evo = mode_evolution_record(&free_wave_trace(n, 3, w, 0.1, 1000), n, Dispersion::BARE).unwrap();
        let drift = windowed_drift(&evo, 10.0).unwrap();
        assert!(drift.max_phase_excursion < 1e-12);
        assert_eq!(drift.windows, 9);
        assert!(windowed_drift(&evo, 1e4).is_err());
    }

    #[test]
    fn mode_index_is_checked() {
        let trace = ModeTrace::new(0);
        assert!(mode_evolution_record(&trace, 8, Dispersion::BARE).is_err());
    }
}
