//! Mode space: unitary Fourier transforms of the chain, bare and
//! renormalized dispersion, complex normal variables and the mean-field
//! renormalization factor η.
//!
//! Per-mode arrays that exclude the zero mode (dispersion tables, normal
//! variables, spectra) have length `N − 1` and store mode `k` at index
//! `k − 1`. Full mode arrays (`ModeState`) have length `N` and are indexed
//! directly by `k`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::ChainState;

/// Fourier amplitudes of displacement and momentum, `k = 0..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeState {
    pub q: Vec<Complex64>,
    pub p: Vec<Complex64>,
    pub t: f64,
}

impl ModeState {
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Largest deviation from `X_{N−k} = X_k*` over both arrays.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.q.len();
        let mut worst: f64 = 0.0;
        for arr in [&self.q, &self.p] {
            for k in 0..n {
                let partner = arr[(n - k) % n].conj();
                worst = worst.max((arr[k] - partner).norm());
            }
        }
        worst
    }

    /// `½|P_0|²`, the kinetic energy of the centre-of-mass motion.
    pub fn zero_mode_kinetic(&self) -> f64 {
        0.5 * self.p[0].norm_sqr()
    }
}

/// Cached forward/inverse FFT plans for one chain length.
#[derive(Clone)]
pub struct ModeTransform {
    n: usize,
    scale: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl fmt::Debug for ModeTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModeTransform").field("n", &self.n).finish()
    }
}

impl ModeTransform {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        ModeTransform {
            n,
            scale: 1.0 / (n as f64).sqrt(),
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `X_k = N^{-1/2} Σ_j x_j e^{−2πijk/N}`.
    pub fn forward_real(&mut self, x: &[f64], out: &mut Vec<Complex64>) {
        assert_eq!(x.len(), self.n, "input length does not match transform");
        out.clear();
        out.extend(x.iter().map(|v| Complex64::new(v * self.scale, 0.0)));
        self.forward.process_with_scratch(out, &mut self.scratch);
    }

    /// `x_j = N^{-1/2} Σ_k X_k e^{2πijk/N}`, in place.
    pub fn inverse_in_place(&mut self, x: &mut [Complex64]) {
        assert_eq!(x.len(), self.n, "input length does not match transform");
        self.inverse.process_with_scratch(x, &mut self.scratch);
        x.iter_mut().for_each(|v| *v *= self.scale);
    }

    pub fn to_modes(&mut self, state: &ChainState) -> ModeState {
        let mut q = Vec::with_capacity(self.n);
        let mut p = Vec::with_capacity(self.n);
        self.forward_real(&state.q, &mut q);
        self.forward_real(&state.p, &mut p);
        ModeState { q, p, t: state.t }
    }

    pub fn from_modes(&mut self, modes: &ModeState) -> Result<ChainState> {
        if modes.q.len() != self.n || modes.p.len() != self.n {
            return Err(Error::InvalidModes(format!(
                "expected {} modes, got {}/{}",
                self.n,
                modes.q.len(),
                modes.p.len()
            )));
        }
        let scale = modes
            .q
            .iter()
            .chain(&modes.p)
            .map(|z| z.norm())
            .fold(1.0, f64::max);
        let defect = modes.hermitian_defect();
        if !(defect <= 1e-9 * scale) {
            return Err(Error::InvalidModes(format!(
                "Hermitian symmetry violated by {defect:e}"
            )));
        }
        let mut q = modes.q.clone();
        let mut p = modes.p.clone();
        self.inverse_in_place(&mut q);
        self.inverse_in_place(&mut p);
        Ok(ChainState {
            q: q.iter().map(|z| z.re).collect(),
            p: p.iter().map(|z| z.re).collect(),
            t: modes.t,
        })
    }
}

pub fn to_modes(state: &ChainState) -> ModeState {
    ModeTransform::new(state.len()).to_modes(state)
}

pub fn from_modes(modes: &ModeState) -> Result<ChainState> {
    ModeTransform::new(modes.len()).from_modes(modes)
}

/// `ω_k = 2 sin(πk/N)` for `1 ≤ k ≤ N − 1`.
pub fn bare_dispersion(n: usize, k: usize) -> Result<f64> {
    if k == 0 || k >= n {
        return Err(Error::param(format!("mode {k} outside 1..{n}")));
    }
    Ok(bare_omega(n, k))
}

#[inline]
pub(crate) fn bare_omega(n: usize, k: usize) -> f64 {
    2.0 * (PI * k as f64 / n as f64).sin()
}

/// Which dispersion relation defines the normal variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DispersionKind {
    Bare,
    Renormalized,
}

impl DispersionKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "bare" => Ok(DispersionKind::Bare),
            "renormalized" | "renorm" => Ok(DispersionKind::Renormalized),
            other => Err(Error::param(format!("unknown dispersion `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DispersionKind::Bare => "bare",
            DispersionKind::Renormalized => "renormalized",
        }
    }
}

/// A dispersion relation `ω̃_k = η ω_k`; `η = 1` is the bare chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dispersion {
    pub eta: f64,
}

impl Dispersion {
    pub const BARE: Dispersion = Dispersion { eta: 1.0 };

    pub fn renormalized(eta: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::param(format!("renormalization factor must be positive, got {eta}")));
        }
        Ok(Dispersion { eta })
    }

    pub fn kind(&self) -> DispersionKind {
        if self.eta == 1.0 {
            DispersionKind::Bare
        } else {
            DispersionKind::Renormalized
        }
    }

    pub fn omega(&self, n: usize, k: usize) -> f64 {
        self.eta * bare_omega(n, k)
    }

    /// Frequencies for `k = 1..N`, stored at index `k − 1`.
    pub fn table(&self, n: usize) -> Vec<f64> {
        (1..n).map(|k| self.omega(n, k)).collect()
    }
}

/// Normal variables `a_k = (P_k − iω_k Q_k)/√(2ω_k)`, `k = 1..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalModeVars {
    pub a: Vec<Complex64>,
    pub dispersion_used: DispersionKind,
    pub eta: f64,
}

impl NormalModeVars {
    pub fn new(modes: &ModeState, dispersion: Dispersion) -> Result<Self> {
        let omega = dispersion.table(modes.len());
        Ok(NormalModeVars {
            a: normal_vars(modes, &omega)?,
            dispersion_used: dispersion.kind(),
            eta: dispersion.eta,
        })
    }

    pub fn get(&self, k: usize) -> Complex64 {
        self.a[k - 1]
    }
}

/// Normal variables for an arbitrary positive frequency table
/// (index `k − 1`).
pub fn normal_vars(modes: &ModeState, omega: &[f64]) -> Result<Vec<Complex64>> {
    let n = modes.len();
    if omega.len() + 1 != n {
        return Err(Error::param(format!(
            "frequency table has {} entries, expected {}",
            omega.len(),
            n - 1
        )));
    }
    if let Some(bad) = omega.iter().find(|w| !(**w > 0.0)) {
        return Err(Error::param(format!("nonpositive frequency {bad}")));
    }
    Ok(omega
        .iter()
        .enumerate()
        .map(|(i, &w)| normal_var(modes.q[i + 1], modes.p[i + 1], w))
        .collect())
}

#[inline]
pub fn normal_var(q: Complex64, p: Complex64, omega: f64) -> Complex64 {
    (p - Complex64::i() * omega * q) / (2.0 * omega).sqrt()
}

/// Inverse of [`normal_vars`]: rebuilds Hermitian mode amplitudes from
/// normal variables (index `k − 1`) and a frequency table, with the zero
/// mode set to `(q0, p0)`.
pub fn modes_from_normal_vars(
    a: &[Complex64],
    omega: &[f64],
    zero_mode: (f64, f64),
    t: f64,
) -> Result<ModeState> {
    if a.len() != omega.len() || a.is_empty() {
        return Err(Error::param("normal variables and frequencies differ in length"));
    }
    if let Some(bad) = omega.iter().find(|w| !(**w > 0.0)) {
        return Err(Error::param(format!("nonpositive frequency {bad}")));
    }
    let n = a.len() + 1;
    let mut q = vec![Complex64::new(zero_mode.0, 0.0); n];
    let mut p = vec![Complex64::new(zero_mode.1, 0.0); n];
    for k in 1..n {
        let w = omega[k - 1];
        let here = a[k - 1];
        let partner = a[n - k - 1].conj();
        let root = (2.0 * w).sqrt();
        p[k] = 0.5 * root * (here + partner);
        q[k] = Complex64::i() * 0.5 * root * (here - partner) / w;
    }
    Ok(ModeState { q, p, t })
}

/// Mean-field renormalization factor and its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenormReport {
    pub eta_analytic: f64,
    pub mean_q_sq: Vec<f64>,
    pub beta: f64,
    pub n: usize,
}

/// `η = sqrt(1 + (3β/2N) Σ_l ⟨|Q_l|²⟩ ω_l²)` with `⟨|Q_l|²⟩` given for
/// `l = 1..N` at index `l − 1`.
pub fn eta_analytic(mean_q_sq: &[f64], beta: f64, n: usize) -> Result<RenormReport> {
    if mean_q_sq.len() + 1 != n {
        return Err(Error::param(format!(
            "expected {} mode averages, got {}",
            n - 1,
            mean_q_sq.len()
        )));
    }
    let weighted: f64 = mean_q_sq
        .iter()
        .enumerate()
        .map(|(i, q2)| q2 * bare_omega(n, i + 1).powi(2))
        .sum();
    Ok(RenormReport {
        eta_analytic: (1.0 + 1.5 * beta / n as f64 * weighted).sqrt(),
        mean_q_sq: mean_q_sq.to_vec(),
        beta,
        n,
    })
}

/// `a_k = [(√η + 1/√η) ã_k + (√η − 1/√η) ã*_{N−k}] / 2`.
pub fn bare_from_renormalized(a_tilde: &[Complex64], eta: f64) -> Vec<Complex64> {
    mix_conjugate_partner(a_tilde, eta)
}

/// Inverse of [`bare_from_renormalized`]; the same map with `η → 1/η`.
pub fn renormalized_from_bare(a: &[Complex64], eta: f64) -> Vec<Complex64> {
    mix_conjugate_partner(a, 1.0 / eta)
}

fn mix_conjugate_partner(x: &[Complex64], eta: f64) -> Vec<Complex64> {
    let s = eta.sqrt();
    let plus = 0.5 * (s + 1.0 / s);
    let minus = 0.5 * (s - 1.0 / s);
    let last = x.len().saturating_sub(1);
    x.iter()
        .enumerate()
        .map(|(i, v)| plus * v + minus * x[last - i].conj())
        .collect()
}

/// `(H̃2, H̃4)` for the split `H = H̃2 + H̃4` with
/// `H̃2 = ½ Σ_{k≥1} (|P_k|² + η²ω_k²|Q_k|²) + ½|P_0|²`.
///
/// `total_energy` is the site-space Hamiltonian; `H̃4` is the residual.
pub fn quadratic_energies(modes: &ModeState, eta: f64, total_energy: f64) -> (f64, f64) {
    let n = modes.len();
    let eta2 = eta * eta;
    let mut h2 = modes.zero_mode_kinetic();
    for k in 1..n {
        let w2 = bare_omega(n, k).powi(2);
        h2 += 0.5 * (modes.p[k].norm_sqr() + eta2 * w2 * modes.q[k].norm_sqr());
    }
    (h2, total_energy - h2)
}
