use serde::{Deserialize, Serialize};

use super::fit::fit_line;
use super::moments::ModeMoments;
use crate::error::{Error, Result};
use crate::modes::{Dispersion, DispersionKind, ModeState};

/// Number of modes dropped at each end of the band before fitting.
pub const FIT_EDGE_EXCLUSION: usize = 3;

/// Time-averaged wave-action spectrum `⟨|a_k|²⟩` with its Rayleigh–Jeans fit
/// `⟨|a_k|²⟩ ≈ T ω_k^{slope}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSpectrum {
    /// index `k − 1`
    pub mean_sq_a: Vec<f64>,
    pub omega: Vec<f64>,
    pub temperature_fit: f64,
    pub slope_fit: f64,
    pub r_squared: f64,
    pub dispersion_used: DispersionKind,
}

impl PowerSpectrum {
    pub fn from_mean_sq(
        mean_sq_a: Vec<f64>,
        omega: Vec<f64>,
        dispersion_used: DispersionKind,
    ) -> Result<Self> {
        if mean_sq_a.is_empty() || mean_sq_a.len() != omega.len() {
            return Err(Error::InsufficientData("empty or mismatched spectrum".into()));
        }
        let n = mean_sq_a.len() + 1;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for k in fit_modes(n) {
            let a2 = mean_sq_a[k - 1];
            if a2 > 0.0 {
                xs.push(omega[k - 1].ln());
                ys.push(a2.ln());
            }
        }
        let fit = fit_line(&xs, &ys)?;
        Ok(PowerSpectrum {
            mean_sq_a,
            omega,
            temperature_fit: fit.intercept.exp(),
            slope_fit: fit.slope,
            r_squared: fit.r_squared,
            dispersion_used,
        })
    }

    pub fn from_moments(moments: &ModeMoments, dispersion: Dispersion) -> Result<Self> {
        Self::from_mean_sq(
            moments.mean_sq_normal(dispersion)?,
            dispersion.table(moments.n()),
            dispersion.kind(),
        )
    }
}

/// Modes entering the slope fit: the three lowest at both ends of the
/// Brillouin zone and the three around `k = N/2` are excluded. Falls back
/// to every mode when the chain is too short for the exclusion.
pub fn fit_modes(n: usize) -> Vec<usize> {
    let half = n / 2;
    let kept: Vec<usize> = (1..n)
        .filter(|&k| {
            let low = k <= FIT_EDGE_EXCLUSION || k >= n - FIT_EDGE_EXCLUSION;
            let top = k + 1 >= half && k <= half + 1;
            !low && !top
        })
        .collect();
    if kept.len() >= 2 {
        kept
    } else {
        (1..n).collect()
    }
}

/// Time-averaged power spectrum of the normal variables built with
/// `dispersion` over a set of mode records.
pub fn average_power_spectrum(records: &[ModeState], dispersion: Dispersion) -> Result<PowerSpectrum> {
    let first = records
        .first()
        .ok_or_else(|| Error::InsufficientData("empty record set".into()))?;
    let mut moments = ModeMoments::new(first.len());
    for r in records {
        moments.push(r);
    }
    PowerSpectrum::from_moments(&moments, dispersion)
}
