//! Oracle suite: independent recomputations of every exact identity the
//! library relies on.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::quartic::quartic_energy_from_modes;
use crate::breather::{highpass_filter, FilterSpec, SiteSeries};
use crate::error::Result;
use crate::lattice::{
    forces, integrate_with, random_initial_state, site_energy_density, total_energy, ChainParams, ChainState, FnSink,
    NullSink, Scheme,
};
use crate::modes::{
    bare_from_renormalized, from_modes, normal_vars, quadratic_energies, renormalized_from_bare, to_modes, Dispersion,
};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed error (relative unless noted in `detail`).
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        CheckResult {
            name,
            passed: value.is_finite() && value < tolerance,
            value,
            tolerance,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub params: ChainParams,
    pub dt: f64,
    pub scheme: Scheme,
    pub seed: u64,
    /// Random states per identity check.
    pub states: usize,
    /// Duration of the energy-drift run.
    pub drift_time: f64,
    /// β of the filter and identity checks when `params.beta` is zero.
    pub fallback_beta: f64,
}

impl VerifyConfig {
    pub fn new(params: ChainParams, dt: f64, scheme: Scheme, seed: u64) -> Self {
        VerifyConfig {
            params,
            dt,
            scheme,
            seed,
            states: 100,
            drift_time: 1e5,
            fallback_beta: 1.0,
        }
    }

    fn identity_params(&self) -> ChainParams {
        if self.params.beta > 0.0 {
            self.params
        } else {
            ChainParams {
                beta: self.fallback_beta,
                ..self.params
            }
        }
    }

    fn states(&self, params: &ChainParams) -> impl Iterator<Item = ChainState> + '_ {
        let params = *params;
        (0..self.states as u64).map(move |i| random_initial_state(&params, self.seed.wrapping_add(i)))
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn check_forces(cfg: &VerifyConfig) -> Result<CheckResult> {
    let params = cfg.identity_params();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for state in cfg.states(&params) {
        let f = forces(&state, &params)?;
        let mut fd = vec![0.0; params.n];
        for i in 0..params.n {
            let mut plus = state.clone();
            let mut minus = state.clone();
            plus.q[i] += h;
            minus.q[i] -= h;
            fd[i] = -(total_energy(&plus, &params)?.total - total_energy(&minus, &params)?.total) / (2.0 * h);
        }
        worst = worst.max(max_abs_diff(&f, &fd) / max_abs(&f).max(1.0));
    }
    Ok(CheckResult::new(
        "forces_vs_finite_difference",
        worst,
        1e-6,
        format!("{} states, central difference h = {h:e}", cfg.states),
    ))
}

/// `Σ_j x_j e^{−2πijk/N} / √N` by direct summation.
fn direct_dft(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(j, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / n as f64))
                .sum::<Complex64>()
                * scale
        })
        .collect()
}

fn check_dft(cfg: &VerifyConfig) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for n in [4, 6, 8, 12, 16] {
        let params = ChainParams::new(n, cfg.identity_params().beta, 10.0)?;
        for state in cfg.states(&params).take(20) {
            let modes = to_modes(&state);
            for (fast, slow) in [(&modes.q, direct_dft(&state.q)), (&modes.p, direct_dft(&state.p))] {
                for (a, b) in fast.iter().zip(&slow) {
                    worst = worst.max((a - b).norm());
                }
            }
        }
    }
    Ok(CheckResult::new("fft_vs_direct_dft", worst, 1e-10, "N in {4,6,8,12,16}, absolute"))
}

fn check_round_trip(cfg: &VerifyConfig) -> Result<CheckResult> {
    let params = cfg.identity_params();
    let mut worst: f64 = 0.0;
    for state in cfg.states(&params) {
        let back = from_modes(&to_modes(&state))?;
        let scale = max_abs(&state.q).max(max_abs(&state.p));
        worst = worst.max(max_abs_diff(&back.q, &state.q).max(max_abs_diff(&back.p, &state.p)) / scale);
    }
    Ok(CheckResult::new("mode_round_trip", worst, 1e-12, format!("N = {}", params.n)))
}

fn check_parseval(cfg: &VerifyConfig) -> Result<CheckResult> {
    let params = cfg.identity_params();
    let mut worst: f64 = 0.0;
    for state in cfg.states(&params) {
        let site = total_energy(&state, &params)?.h2;
        let (mode, _) = quadratic_energies(&to_modes(&state), 1.0, 0.0);
        worst = worst.max(((mode - site) / site).abs());
    }
    Ok(CheckResult::new("parseval_h2", worst, 1e-10, "mode-space vs site-space H2"))
}

fn check_site_energy(cfg: &VerifyConfig) -> Result<CheckResult> {
    let params = cfg.identity_params();
    let mut worst: f64 = 0.0;
    for state in cfg.states(&params) {
        let total = total_energy(&state, &params)?.total;
        let sum = site_energy_density(&state, &params)?.total();
        worst = worst.max(((sum - total) / total).abs());
    }
    Ok(CheckResult::new("site_energy_sum", worst, 1e-10, "Σ e_i vs H"))
}

fn check_quartic_identity(cfg: &VerifyConfig) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for n in [8, 16, 32] {
        let params = ChainParams::new(n, cfg.identity_params().beta, 2.0 * n as f64)?;
        for state in cfg.states(&params).take(20) {
            let h4 = total_energy(&state, &params)?.h4;
            let via = quartic_energy_from_modes(&to_modes(&state), params.beta);
            worst = worst.max(((via - h4) / h4).abs());
        }
    }
    Ok(CheckResult::new("quartic_mode_sum", worst, 1e-8, "N in {8,16,32}"))
}

fn check_two_path(cfg: &VerifyConfig) -> Result<CheckResult> {
    let params = cfg.identity_params();
    let mut worst: f64 = 0.0;
    for (i, state) in cfg.states(&params).enumerate() {
        let eta = 1.0 + 0.05 * (i % 60) as f64;
        let modes = to_modes(&state);
        let renorm = Dispersion::renormalized(eta)?;
        let a = normal_vars(&modes, &Dispersion::BARE.table(params.n))?;
        let a_t = normal_vars(&modes, &renorm.table(params.n))?;
        let via = bare_from_renormalized(&a_t, eta);
        let back = renormalized_from_bare(&via, eta);
        let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for k in 0..a.len() {
            worst = worst.max((via[k] - a[k]).norm() / scale);
            worst = worst.max((back[k] - a_t[k]).norm() / scale);
        }
    }
    Ok(CheckResult::new("bare_renormalized_two_path", worst, 1e-10, "η in [1, 4]"))
}

fn check_normal_energy(cfg: &VerifyConfig) -> Result<CheckResult> {
    let params = cfg.identity_params();
    let mut worst: f64 = 0.0;
    for (i, state) in cfg.states(&params).enumerate() {
        let eta = 1.0 + 0.03 * (i % 50) as f64;
        let modes = to_modes(&state);
        let omega = Dispersion::renormalized(eta)?.table(params.n);
        let a = normal_vars(&modes, &omega)?;
        let sum: f64 = a.iter().zip(&omega).map(|(z, w)| w * z.norm_sqr()).sum();
        let (h2t, _) = quadratic_energies(&modes, eta, 0.0);
        let expected = h2t - modes.zero_mode_kinetic();
        worst = worst.max(((sum - expected) / expected).abs());
    }
    Ok(CheckResult::new("normal_variable_energy", worst, 1e-10, "Σ ω̃|ã|² vs H̃2 − ½|P_0|²"))
}

fn random_series(rng: &mut ChaCha8Rng, sites: usize, len: usize, dt: f64) -> SiteSeries {
    SiteSeries {
        values: (0..sites)
            .map(|_| (0..len).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect(),
        t0: 0.0,
        dt_sample: dt,
    }
}

fn check_filter(cfg: &VerifyConfig) -> Result<[CheckResult; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dt = 0.1;
    let spec = FilterSpec::hard(7.0)?;
    let (sites, len) = (4, 2048);
    let g = random_series(&mut rng, sites, len, dt);
    let h = random_series(&mut rng, sites, len, dt);
    let alpha = 2.75;
    let mixed = SiteSeries {
        values: g
            .values
            .iter()
            .zip(&h.values)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| alpha * x + y).collect())
            .collect(),
        ..g.clone()
    };
    let fg = highpass_filter(&g, spec, dt)?;
    let fh = highpass_filter(&h, spec, dt)?;
    let fm = highpass_filter(&mixed, spec, dt)?;
    let scale = fm.rms();
    let mut lin: f64 = 0.0;
    for s in 0..sites {
        for i in 0..len {
            lin = lin.max((fm.qf[s][i] - alpha * fg.qf[s][i] - fh.qf[s][i]).abs() / scale);
        }
    }
    let again = SiteSeries {
        values: fg.qf.clone(),
        ..g
    };
    let ffg = highpass_filter(&again, spec, dt)?;
    let mut idem: f64 = 0.0;
    for s in 0..sites {
        idem = idem.max(max_abs_diff(&ffg.qf[s], &fg.qf[s]) / fg.rms());
    }
    Ok([
        CheckResult::new("filter_linearity", lin, 1e-10, "random inputs, ω_cut = 7"),
        CheckResult::new("filter_idempotence", idem, 1e-10, "random inputs, ω_cut = 7"),
    ])
}

fn check_reversibility(cfg: &VerifyConfig) -> Result<[CheckResult; 2]> {
    let params = cfg.params;
    // round-off is amplified exponentially by the chaotic dynamics, so the
    // horizon stays short enough for the error to remain near ε
    let steps = 1_000u64;
    let start = random_initial_state(&params, cfg.seed);
    let p0 = start.total_momentum();
    let t_end = steps as f64 * cfg.dt;
    let mut there = integrate_with(start.clone(), &params, cfg.dt, cfg.scheme, t_end, steps as usize, NullSink)?;
    let momentum = (there.total_momentum() - p0).abs();
    there.flip_momenta();
    there.t = 0.0;
    let mut back = integrate_with(there, &params, cfg.dt, cfg.scheme, t_end, steps as usize, NullSink)?;
    back.flip_momenta();
    let scale = max_abs(&start.q).max(max_abs(&start.p));
    let err = max_abs_diff(&back.q, &start.q).max(max_abs_diff(&back.p, &start.p)) / scale;
    Ok([
        CheckResult::new("time_reversibility", err, 1e-10, format!("{steps} steps forward and back")),
        CheckResult::new("momentum_conservation", momentum, 1e-10, "|ΔΣp| absolute"),
    ])
}

fn check_drift(cfg: &VerifyConfig) -> Result<CheckResult> {
    let params = cfg.params;
    let start = random_initial_state(&params, cfg.seed);
    let h0 = total_energy(&start, &params)?.total;
    let mut worst: f64 = 0.0;
    let sink = FnSink(|s: &ChainState| {
        worst = worst.max(((total_energy(s, &params)?.total - h0) / h0).abs());
        Ok(())
    });
    integrate_with(start, &params, cfg.dt, cfg.scheme, cfg.drift_time, 100, sink)?;
    Ok(CheckResult::new(
        "energy_drift",
        worst,
        1e-5,
        format!(
            "N = {}, β = {}, dt = {}, {} over {} time units",
            params.n,
            params.beta,
            cfg.dt,
            cfg.scheme.name(),
            cfg.drift_time
        ),
    ))
}

/// Runs every check, in a fixed order.
pub fn run_all(cfg: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let mut out = vec![
        check_forces(cfg)?,
        check_dft(cfg)?,
        check_round_trip(cfg)?,
        check_parseval(cfg)?,
        check_site_energy(cfg)?,
        check_quartic_identity(cfg)?,
        check_two_path(cfg)?,
        check_normal_energy(cfg)?,
    ];
    out.extend(check_filter(cfg)?);
    out.extend(check_reversibility(cfg)?);
    out.push(check_drift(cfg)?);
    Ok(out)
}
