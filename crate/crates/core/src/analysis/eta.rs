use serde::{Deserialize, Serialize};

use super::fit::{fit_line, fit_through_origin};
use super::spectrogram::SpectrogramResult;
use crate::error::{Error, Result};
use crate::modes::bare_omega;

/// Renormalization factor read off the spectral ridge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaMeasurement {
    /// Least-squares `c` in `peak_k ≈ c · 2 sin(πk/N)`.
    pub eta_fit: f64,
    /// `peak_{N/2} / 2`.
    pub eta_band_edge: f64,
    /// Root mean square of `(peak_k − fit_k)/fit_k` over all modes.
    pub relative_rms_residual: f64,
}

pub fn measure_eta(spec: &SpectrogramResult, n: usize) -> Result<EtaMeasurement> {
    if spec.peak_omega.len() + 1 != n {
        return Err(Error::param(format!(
            "spectrogram has {} modes, chain has {}",
            spec.peak_omega.len(),
            n - 1
        )));
    }
    if spec.peak_omega.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
        return Err(Error::Undefined("degenerate spectral peaks".into()));
    }
    let bare: Vec<f64> = (1..n).map(|k| bare_omega(n, k)).collect();
    let eta_fit = fit_through_origin(&bare, &spec.peak_omega)?;
    let rms = (bare
        .iter()
        .zip(&spec.peak_omega)
        .map(|(b, p)| {
            let fit = eta_fit * b;
            ((p - fit) / fit).powi(2)
        })
        .sum::<f64>()
        / bare.len() as f64)
        .sqrt();
    Ok(EtaMeasurement {
        eta_fit,
        eta_band_edge: spec.peak_omega[n / 2 - 1] / 2.0,
        relative_rms_residual: rms,
    })
}

/// Power-law fit `η ≈ prefactor · β^exponent` in log–log coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub points: Vec<(f64, f64)>,
}

pub fn eta_beta_scaling(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.iter().any(|(b, e)| !(*b > 0.0) || !(*e > 0.0)) {
        return Err(Error::param("beta and eta must be positive for a log-log fit"));
    }
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), (b, _)| (lo.min(*b), hi.max(*b)));
    if points.len() < 4 || hi < 10.0 * lo {
        return Err(Error::InsufficientData(
            "need at least four beta values spanning a decade".into(),
        ));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let fit = fit_line(&xs, &ys)?;
    Ok(ScalingFit {
        exponent: fit.slope,
        prefactor: fit.intercept.exp(),
        r_squared: fit.r_squared,
        points: points.to_vec(),
    })
}
