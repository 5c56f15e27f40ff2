//! Decomposition of the quartic energy into four-wave terms.
//!
//! With `R_k = (1 − e^{2πik/N}) Q_k` the Fourier amplitudes of the bond
//! stretches, `Σ_i r_i⁴ = N⁻¹ Σ R_k R_l R_m* R_s*` over all `k + l ≡ m + s
//! (mod N)`. The terms split into three classes:
//!
//! * resonant: `{k, l} = {m, s}`, the only quartets that conserve both
//!   wavenumber and frequency exactly on the lattice. They reduce to
//!   `N⁻¹ (2 (Σ|R_k|²)² − Σ|R_k|⁴)` and carry the mean-field frequency shift.
//! * non-resonant momentum-conserving: `k + l = m + s` as integers, other
//!   pairings.
//! * umklapp: `k + l = m + s ± N`.
//!
//! Grouping by `S = k + l` reduces the momentum-conserving and full sums to
//! `O(N²)`.

use num_complex::Complex64;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::ModeState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticSums {
    /// Terms with `{k, l} = {m, s}`.
    pub resonant: f64,
    /// `N⁻¹ Σ_{k+l=m+s} R_k R_l R_m* R_s*` over integer sums.
    pub momentum_conserving: f64,
    /// `Σ_i r_i⁴` from the full mode sum
    pub total: f64,
}

pub fn bond_amplitudes(modes: &ModeState) -> Vec<Complex64> {
    let n = modes.len();
    modes
        .q
        .iter()
        .enumerate()
        .map(|(k, q)| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, theta)) * q
        })
        .collect()
}

pub fn quartic_sums(modes: &ModeState) -> QuarticSums {
    let n = modes.len();
    let r = bond_amplitudes(modes);
    let mut pair_sums = vec![Complex64::new(0.0, 0.0); 2 * n - 1];
    for (k, rk) in r.iter().enumerate() {
        for (l, rl) in r.iter().enumerate() {
            pair_sums[k + l] += rk * rl;
        }
    }
    let conserving: f64 = pair_sums.iter().map(|c| c.norm_sqr()).sum();
    let (s2, s4) = r.iter().fold((0.0, 0.0), |(a, b), z| {
        let p = z.norm_sqr();
        (a + p, b + p * p)
    });
    let total: f64 = (0..n)
        .map(|s| {
            let wrapped = if s + n < pair_sums.len() {
                pair_sums[s] + pair_sums[s + n]
            } else {
                pair_sums[s]
            };
            wrapped.norm_sqr()
        })
        .sum();
    let inv_n = 1.0 / n as f64;
    QuarticSums {
        resonant: (2.0 * s2 * s2 - s4) * inv_n,
        momentum_conserving: conserving * inv_n,
        total: total * inv_n,
    }
}

/// `H4 = (β/4) Σ_i r_i⁴` evaluated in mode space.
pub fn quartic_energy_from_modes(modes: &ModeState, beta: f64) -> f64 {
    0.25 * beta * quartic_sums(modes).total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticFraction {
    /// `⟨|resonant|⟩ / ⟨|total|⟩`
    pub fraction: f64,
    /// `⟨momentum-conserving⟩ / ⟨total⟩`; exceeds one when the umklapp
    /// terms are net negative.
    pub momentum_conserving_fraction: f64,
    pub umklapp_fraction: f64,
    pub mean_resonant: f64,
    pub mean_total: f64,
    pub frames: usize,
}

pub fn resonant_quartic_fraction(frames: &[ModeState]) -> Result<QuarticFraction> {
    if frames.is_empty() {
        return Err(Error::InsufficientData("no mode frames".into()));
    }
    let (mut res, mut cons, mut tot) = (0.0, 0.0, 0.0);
    for f in frames {
        let s = quartic_sums(f);
        res += s.resonant.abs();
        cons += s.momentum_conserving;
        tot += s.total.abs();
    }
    if !(tot > 0.0) {
        return Err(Error::Undefined("quartic energy vanishes on every frame".into()));
    }
    let m = frames.len() as f64;
    Ok(QuarticFraction {
        fraction: res / tot,
        momentum_conserving_fraction: cons / tot,
        umklapp_fraction: (tot - cons) / tot,
        mean_resonant: res / m,
        mean_total: tot / m,
        frames: frames.len(),
    })
}

/// Sorted, distinct indices of `count` frames drawn uniformly from
/// `0..total`.
pub fn sample_frame_indices(total: usize, count: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, total, count.min(total)).into_vec();
    picked.sort_unstable();
    picked
}
