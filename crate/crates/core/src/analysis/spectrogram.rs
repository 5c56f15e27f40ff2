//! ω–k spectrum of the normal variables by Welch averaging.
//!
//! Each channel `a_k(t)` is cut into Hann-tapered segments with 50 %
//! overlap. A normal variable of frequency `ω` rotates as `e^{−iωt}`, so
//! positive `ω` on the returned axis is the rotation frequency of a
//! forward-propagating wave.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::{normal_var, Dispersion, ModeState};

pub const DEFAULT_SEGMENT_LEN: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchConfig {
    pub segment_len: usize,
    /// Fraction of a segment shared with the next one.
    pub overlap: f64,
}

impl Default for WelchConfig {
    fn default() -> Self {
        WelchConfig {
            segment_len: DEFAULT_SEGMENT_LEN,
            overlap: 0.5,
        }
    }
}

impl WelchConfig {
    fn hop(&self) -> usize {
        ((self.segment_len as f64 * (1.0 - self.overlap)).round() as usize).max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowMeta {
    pub segment_len: usize,
    pub overlap: f64,
    pub taper: String,
    pub segments: usize,
    pub dt_sample: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrogramResult {
    /// `power[k − 1][j]` is the spectral density of `a_k` at `omega_bins[j]`.
    pub power: Vec<Vec<f64>>,
    /// Ascending angular frequencies covering `[−π/Δt, π/Δt)`.
    pub omega_bins: Vec<f64>,
    /// Interpolated peak frequency per mode, searched over `ω > 0`.
    pub peak_omega: Vec<f64>,
    /// `∫ power dω / max power` per mode.
    pub width: Vec<f64>,
    pub window_meta: WindowMeta,
}

impl SpectrogramResult {
    pub fn n(&self) -> usize {
        self.power.len() + 1
    }

    pub fn bin_width(&self) -> f64 {
        self.omega_bins[1] - self.omega_bins[0]
    }

    /// Index of the first bin with `ω ≥ 0`.
    pub fn zero_bin(&self) -> usize {
        self.omega_bins.len() / 2
    }
}

/// Streaming Welch estimator over many complex channels.
pub struct WelchAccumulator {
    config: WelchConfig,
    channels: usize,
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    window_power: f64,
    buffers: Vec<Vec<Complex64>>,
    filled: usize,
    sums: Vec<Vec<f64>>,
    segments: usize,
    work: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl WelchAccumulator {
    pub fn new(channels: usize, config: WelchConfig) -> Result<Self> {
        let len = config.segment_len;
        if len < 4 {
            return Err(Error::param("segment length must be at least 4"));
        }
        if !(0.0..1.0).contains(&config.overlap) {
            return Err(Error::param("overlap must lie in [0, 1)"));
        }
        // inverse direction: e^{−iωt} lands on +ω
        let fft = FftPlanner::new().plan_fft_inverse(len);
        let window: Vec<f64> = (0..len)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / len as f64).cos())
            .collect();
        let window_power = window.iter().map(|w| w * w).sum();
        let scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        Ok(WelchAccumulator {
            config,
            channels,
            fft,
            window,
            window_power,
            buffers: vec![vec![Complex64::new(0.0, 0.0); len]; channels],
            filled: 0,
            sums: vec![vec![0.0; len]; channels],
            segments: 0,
            work: vec![Complex64::new(0.0, 0.0); len],
            scratch,
        })
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    /// Appends one sample per channel.
    pub fn push<I: IntoIterator<Item = Complex64>>(&mut self, samples: I) {
        let mut count = 0;
        for (buf, z) in self.buffers.iter_mut().zip(samples) {
            buf[self.filled] = z;
            count += 1;
        }
        debug_assert_eq!(count, self.channels);
        self.filled += 1;
        if self.filled == self.config.segment_len {
            self.flush_segment();
        }
    }

    fn flush_segment(&mut self) {
        let len = self.config.segment_len;
        for (buf, sum) in self.buffers.iter().zip(self.sums.iter_mut()) {
            for ((w, x), win) in self.work.iter_mut().zip(buf).zip(&self.window) {
                *w = x * win;
            }
            self.fft.process_with_scratch(&mut self.work, &mut self.scratch);
            for (s, w) in sum.iter_mut().zip(&self.work) {
                *s += w.norm_sqr();
            }
        }
        self.segments += 1;
        let hop = self.config.hop().min(len);
        for buf in self.buffers.iter_mut() {
            buf.copy_within(hop.., 0);
        }
        self.filled = len - hop;
    }

    /// Averaged densities per channel on the ascending frequency axis.
    pub fn finish(self, dt_sample: f64) -> Result<(Vec<Vec<f64>>, Vec<f64>, WindowMeta)> {
        if self.segments == 0 {
            return Err(Error::InsufficientData(format!(
                "record shorter than one segment of {} samples",
                self.config.segment_len
            )));
        }
        let len = self.config.segment_len;
        let norm = dt_sample / (self.window_power * self.segments as f64);
        let half = len / 2;
        let d_omega = 2.0 * PI / (len as f64 * dt_sample);
        let omega_bins: Vec<f64> = (0..len).map(|j| (j as f64 - half as f64) * d_omega).collect();
        let power = self
            .sums
            .into_iter()
            .map(|s| {
                // reorder from FFT layout (0, +, −) to ascending ω
                let mut row = Vec::with_capacity(len);
                row.extend(s[len - half..].iter().map(|v| v * norm));
                row.extend(s[..len - half].iter().map(|v| v * norm));
                row
            })
            .collect();
        let meta = WindowMeta {
            segment_len: len,
            overlap: self.config.overlap,
            taper: "hann".into(),
            segments: self.segments,
            dt_sample,
        };
        Ok((power, omega_bins, meta))
    }
}

/// Streaming construction of the ω–k spectrum of `a_k(t)`.
pub struct SpectrogramBuilder {
    n: usize,
    omega: Vec<f64>,
    welch: WelchAccumulator,
}

impl SpectrogramBuilder {
    pub fn new(n: usize, dispersion: Dispersion, config: WelchConfig) -> Result<Self> {
        Ok(SpectrogramBuilder {
            n,
            omega: dispersion.table(n),
            welch: WelchAccumulator::new(n - 1, config)?,
        })
    }

    pub fn push(&mut self, modes: &ModeState) {
        assert_eq!(modes.len(), self.n, "mode record length mismatch");
        let omega = &self.omega;
        self.welch.push(
            omega
                .iter()
                .enumerate()
                .map(|(i, &w)| normal_var(modes.q[i + 1], modes.p[i + 1], w)),
        );
    }

    pub fn finish(self, dt_sample: f64) -> Result<SpectrogramResult> {
        let (power, omega_bins, meta) = self.welch.finish(dt_sample)?;
        Ok(summarize(power, omega_bins, meta))
    }
}

fn summarize(power: Vec<Vec<f64>>, omega_bins: Vec<f64>, window_meta: WindowMeta) -> SpectrogramResult {
    let zero = omega_bins.len() / 2;
    let d_omega = omega_bins[1] - omega_bins[0];
    let mut peak_omega = Vec::with_capacity(power.len());
    let mut width = Vec::with_capacity(power.len());
    for row in &power {
        let (j, max) = row[zero + 1..]
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
        let j = j + zero + 1;
        peak_omega.push(omega_bins[j] + parabolic_offset(row, j) * d_omega);
        let integral: f64 = row.iter().sum::<f64>() * d_omega;
        width.push(if max > 0.0 { integral / max } else { 0.0 });
    }
    SpectrogramResult {
        power,
        omega_bins,
        peak_omega,
        width,
        window_meta,
    }
}

/// Vertex of the parabola through bins `j − 1, j, j + 1`, in bins.
fn parabolic_offset(row: &[f64], j: usize) -> f64 {
    if j == 0 || j + 1 >= row.len() {
        return 0.0;
    }
    let (a, b, c) = (row[j - 1], row[j], row[j + 1]);
    let denom = a - 2.0 * b + c;
    if denom < 0.0 {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    }
}

/// ω–k spectrum of the bare normal variables of `records`, sampled every
/// `dt_sample`.
pub fn spectrogram(records: &[ModeState], dt_sample: f64, config: WelchConfig) -> Result<SpectrogramResult> {
    let first = records
        .first()
        .ok_or_else(|| Error::InsufficientData("empty record set".into()))?;
    let mut builder = SpectrogramBuilder::new(first.len(), Dispersion::BARE, config)?;
    for r in records {
        builder.push(r);
    }
    builder.finish(dt_sample)
}
