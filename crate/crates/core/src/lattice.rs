//! The periodic β-FPU chain: energies, forces, thermal initial data and
//! symplectic time stepping.
//!
//! Sites carry unit masses coupled to their neighbours through the spring
//! potential `V(r) = r²/2 + β r⁴/4` with `r_i = q_i − q_{i+1}` and
//! `q_{N+1} ≡ q_1`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical parameters of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub n: usize,
    pub beta: f64,
    pub target_energy: f64,
}

impl ChainParams {
    pub fn new(n: usize, beta: f64, target_energy: f64) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::param(format!("N must be even and >= 4, got {n}")));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::param(format!("beta must be finite and >= 0, got {beta}")));
        }
        if !(target_energy > 0.0) || !target_energy.is_finite() {
            return Err(Error::param(format!(
                "target energy must be positive, got {target_energy}"
            )));
        }
        Ok(ChainParams {
            n,
            beta,
            target_energy,
        })
    }

    /// Spring force `V'(r) = r + β r³`.
    #[inline]
    pub fn spring_force(&self, r: f64) -> f64 {
        r + self.beta * r * r * r
    }

    #[inline]
    pub fn spring_energy(&self, r: f64) -> f64 {
        let r2 = r * r;
        0.5 * r2 + 0.25 * self.beta * r2 * r2
    }
}

/// A phase-space point of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub t: f64,
}

impl ChainState {
    pub fn new(q: Vec<f64>, p: Vec<f64>, t: f64) -> Result<Self> {
        let state = ChainState { q, p, t };
        state.check_finite()?;
        if state.q.len() != state.p.len() {
            return Err(Error::InvalidState(format!(
                "q has {} sites but p has {}",
                state.q.len(),
                state.p.len()
            )));
        }
        Ok(state)
    }

    pub fn at_rest(n: usize) -> Self {
        ChainState {
            q: vec![0.0; n],
            p: vec![0.0; n],
            t: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn validate(&self, params: &ChainParams) -> Result<()> {
        if self.q.len() != params.n || self.p.len() != params.n {
            return Err(Error::InvalidState(format!(
                "state has {}/{} entries, chain has N = {}",
                self.q.len(),
                self.p.len(),
                params.n
            )));
        }
        self.check_finite()
    }

    fn check_finite(&self) -> Result<()> {
        if !self.t.is_finite() {
            return Err(Error::InvalidState("time is not finite".into()));
        }
        if let Some(i) = self.q.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidState(format!("q[{i}] is not finite")));
        }
        if let Some(i) = self.p.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidState(format!("p[{i}] is not finite")));
        }
        Ok(())
    }

    pub fn total_momentum(&self) -> f64 {
        self.p.iter().sum()
    }

    /// Reverses the direction of time by negating every momentum.
    pub fn flip_momenta(&mut self) {
        self.p.iter_mut().for_each(|p| *p = -*p);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub h2: f64,
    pub h4: f64,
    pub total: f64,
}

/// Energy of each particle; every spring is shared equally by its two ends.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteEnergyField {
    pub e: Vec<f64>,
    pub t: f64,
}

impl SiteEnergyField {
    pub fn total(&self) -> f64 {
        self.e.iter().sum()
    }
}

/// Kinetic, harmonic-spring and quartic-spring energy.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyParts {
    pub kinetic: f64,
    pub harmonic: f64,
    pub quartic: f64,
}

impl EnergyParts {
    pub fn of(state: &ChainState, params: &ChainParams) -> Self {
        let n = state.q.len();
        let kinetic = 0.5 * state.p.iter().map(|p| p * p).sum::<f64>();
        let mut r2_sum = 0.0;
        let mut r4_sum = 0.0;
        for i in 0..n {
            let r = state.q[i] - state.q[(i + 1) % n];
            let r2 = r * r;
            r2_sum += r2;
            r4_sum += r2 * r2;
        }
        EnergyParts {
            kinetic,
            harmonic: 0.5 * r2_sum,
            quartic: 0.25 * params.beta * r4_sum,
        }
    }

    pub fn h2(&self) -> f64 {
        self.kinetic + self.harmonic
    }

    pub fn total(&self) -> f64 {
        self.kinetic + self.harmonic + self.quartic
    }
}

pub fn total_energy(state: &ChainState, params: &ChainParams) -> Result<EnergyBreakdown> {
    state.validate(params)?;
    let parts = EnergyParts::of(state, params);
    let h2 = parts.h2();
    let h4 = parts.quartic;
    Ok(EnergyBreakdown {
        h2,
        h4,
        total: h2 + h4,
    })
}

/// `−∂H/∂q_i` for every site.
pub fn forces(state: &ChainState, params: &ChainParams) -> Result<Vec<f64>> {
    state.validate(params)?;
    let mut f = vec![0.0; params.n];
    forces_into(&state.q, params, &mut f);
    Ok(f)
}

/// Writes `F_i = V'(r_{i−1}) − V'(r_i)` into `out` without allocating.
#[inline]
pub fn forces_into(q: &[f64], params: &ChainParams, out: &mut [f64]) {
    let n = q.len();
    debug_assert_eq!(out.len(), n);
    // spring between site n-1 and site 0
    let mut left = params.spring_force(q[n - 1] - q[0]);
    for i in 0..n - 1 {
        let right = params.spring_force(q[i] - q[i + 1]);
        out[i] = left - right;
        left = right;
    }
    let right = params.spring_force(q[n - 1] - q[0]);
    out[n - 1] = left - right;
}

pub fn site_energy_density(state: &ChainState, params: &ChainParams) -> Result<SiteEnergyField> {
    state.validate(params)?;
    let n = params.n;
    let mut e: Vec<f64> = state.p.iter().map(|p| 0.5 * p * p).collect();
    for i in 0..n {
        let j = (i + 1) % n;
        let half = 0.5 * params.spring_energy(state.q[i] - state.q[j]);
        e[i] += half;
        e[j] += half;
    }
    Ok(SiteEnergyField { e, t: state.t })
}

/// Symmetric compositions of the velocity-Verlet (kick-drift-kick) map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Plain second-order velocity Verlet.
    Verlet,
    /// Five-stage fourth-order composition with substep weights
    /// `(w, w, 1 − 4w, w, w)`, `w = 1/(4 − 4^{1/3})`.
    #[default]
    Suzuki4,
}

impl Scheme {
    pub fn weights(self) -> &'static [f64] {
        const W: f64 = 0.414_490_771_794_375_7;
        const SUZUKI: [f64; 5] = [W, W, 1.0 - 4.0 * W, W, W];
        match self {
            Scheme::Verlet => &[1.0],
            Scheme::Suzuki4 => &SUZUKI,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Verlet => "verlet",
            Scheme::Suzuki4 => "suzuki4",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "verlet" => Ok(Scheme::Verlet),
            "suzuki4" => Ok(Scheme::Suzuki4),
            other => Err(Error::param(format!("unknown integrator `{other}`"))),
        }
    }
}

/// Symplectic propagator that carries the force of the current
/// configuration between steps.
#[derive(Debug, Clone)]
pub struct Stepper {
    params: ChainParams,
    dt: f64,
    scheme: Scheme,
    force: Vec<f64>,
    primed: bool,
}

impl Stepper {
    pub fn new(params: ChainParams, dt: f64, scheme: Scheme) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::param(format!("time step must be positive, got {dt}")));
        }
        Ok(Stepper {
            params,
            dt,
            scheme,
            force: vec![0.0; params.n],
            primed: false,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Forget the cached force, e.g. after the state was edited externally.
    pub fn reset(&mut self) {
        self.primed = false;
    }

    /// Advances `state` by one step. Returns `false` if the new state is not
    /// finite.
    pub fn advance(&mut self, state: &mut ChainState) -> bool {
        if !self.primed {
            forces_into(&state.q, &self.params, &mut self.force);
            self.primed = true;
        }
        for &w in self.scheme.weights() {
            let h = w * self.dt;
            for (p, f) in state.p.iter_mut().zip(&self.force) {
                *p += 0.5 * h * f;
            }
            for (q, p) in state.q.iter_mut().zip(&state.p) {
                *q += h * p;
            }
            forces_into(&state.q, &self.params, &mut self.force);
            for (p, f) in state.p.iter_mut().zip(&self.force) {
                *p += 0.5 * h * f;
            }
        }
        state.t += self.dt;
        state.p.iter().all(|p| p.is_finite())
    }
}

/// One step of length `dt` with the default scheme.
pub fn step(state: &ChainState, params: &ChainParams, dt: f64) -> Result<ChainState> {
    step_with(state, params, dt, Scheme::default())
}

pub fn step_with(
    state: &ChainState,
    params: &ChainParams,
    dt: f64,
    scheme: Scheme,
) -> Result<ChainState> {
    state.validate(params)?;
    let mut stepper = Stepper::new(*params, dt, scheme)?;
    let mut next = state.clone();
    if !stepper.advance(&mut next) {
        return Err(Error::BlowUp { step: 1, t: next.t });
    }
    Ok(next)
}

/// Receives states sampled during [`integrate`].
pub trait SampleSink {
    fn accept(&mut self, state: &ChainState) -> Result<()>;

    fn finish(&mut self) -> Result<()> {
        Ok(())
    }
}

impl<S: SampleSink + ?Sized> SampleSink for &mut S {
    fn accept(&mut self, state: &ChainState) -> Result<()> {
        (**self).accept(state)
    }

    fn finish(&mut self) -> Result<()> {
        (**self).finish()
    }
}

impl SampleSink for Vec<ChainState> {
    fn accept(&mut self, state: &ChainState) -> Result<()> {
        self.push(state.clone());
        Ok(())
    }
}

impl<A: SampleSink, B: SampleSink> SampleSink for (A, B) {
    fn accept(&mut self, state: &ChainState) -> Result<()> {
        self.0.accept(state)?;
        self.1.accept(state)
    }

    fn finish(&mut self) -> Result<()> {
        self.0.finish()?;
        self.1.finish()
    }
}

impl<S: SampleSink> SampleSink for Vec<S> {
    fn accept(&mut self, state: &ChainState) -> Result<()> {
        self.iter_mut().try_for_each(|s| s.accept(state))
    }

    fn finish(&mut self) -> Result<()> {
        self.iter_mut().try_for_each(|s| s.finish())
    }
}

/// Discards every sample.
pub struct NullSink;

impl SampleSink for NullSink {
    fn accept(&mut self, _state: &ChainState) -> Result<()> {
        Ok(())
    }
}

/// Adapter turning a closure into a sink.
pub struct FnSink<F>(pub F);

impl<F: FnMut(&ChainState) -> Result<()>> SampleSink for FnSink<F> {
    fn accept(&mut self, state: &ChainState) -> Result<()> {
        (self.0)(state)
    }
}

/// Steps from `state.t` to `t_end`, handing every `sample_every`-th state
/// to `sink`. The initial state is not emitted.
pub fn integrate<S: SampleSink>(
    state: ChainState,
    params: &ChainParams,
    dt: f64,
    t_end: f64,
    sample_every: usize,
    sink: S,
) -> Result<ChainState> {
    integrate_with(state, params, dt, Scheme::default(), t_end, sample_every, sink)
}

pub fn integrate_with<S: SampleSink>(
    state: ChainState,
    params: &ChainParams,
    dt: f64,
    scheme: Scheme,
    t_end: f64,
    sample_every: usize,
    mut sink: S,
) -> Result<ChainState> {
    state.validate(params)?;
    if sample_every == 0 {
        return Err(Error::param("sample stride must be positive"));
    }
    let mut stepper = Stepper::new(*params, dt, scheme)?;
    let t0 = state.t;
    let n_steps = ((t_end - t0) / dt).round().max(0.0) as u64;
    let mut state = state;
    for i in 1..=n_steps {
        if !stepper.advance(&mut state) {
            return Err(Error::BlowUp { step: i, t: state.t });
        }
        // pin the clock to the step count so it does not accumulate round-off
        state.t = t0 + i as f64 * dt;
        if i % sample_every as u64 == 0 {
            sink.accept(&state)?;
        }
    }
    sink.finish()?;
    Ok(state)
}

/// Gaussian random data with zero mean displacement and zero total momentum,
/// scaled so that the total energy equals `params.target_energy`.
pub fn random_initial_state(params: &ChainParams, seed: u64) -> ChainState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = params.n;
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let mean = v.iter().sum::<f64>() / n as f64;
        v.iter_mut().for_each(|x| *x -= mean);
        v
    };
    let q = draw(&mut rng);
    let p = draw(&mut rng);
    let unscaled = ChainState { q, p, t: 0.0 };

    // H(s) = s² H2 + s⁴ H4 is monotone in s, so the root in s² is unique.
    let parts = EnergyParts::of(&unscaled, params);
    let b = parts.h2();
    let a = parts.quartic;
    let h = params.target_energy;
    let s2 = 2.0 * h / (b + (b * b + 4.0 * a * h).sqrt());
    let s = s2.sqrt();
    ChainState {
        q: unscaled.q.iter().map(|x| s * x).collect(),
        p: unscaled.p.iter().map(|x| s * x).collect(),
        t: 0.0,
    }
}

/// Normalized spectral entropy `exp(S)/M` of the mode energies, where
/// `S = −Σ w ln w` and `w_k = E_k / ΣE`. Equal to one at equipartition.
pub fn equipartition_indicator(mode_energies: &[f64]) -> Result<f64> {
    if mode_energies.is_empty() {
        return Err(Error::Undefined("no mode energies".into()));
    }
    if mode_energies.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
        return Err(Error::param("mode energies must be finite and nonnegative"));
    }
    let sum: f64 = mode_energies.iter().sum();
    if sum <= 0.0 {
        return Err(Error::Undefined("all mode energies are zero".into()));
    }
    let entropy: f64 = mode_energies
        .iter()
        .filter(|e| **e > 0.0)
        .map(|e| {
            let w = e / sum;
            -w * w.ln()
        })
        .sum();
    Ok(entropy.exp() / mode_energies.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(n: usize, beta: f64) -> ChainParams {
        ChainParams::new(n, beta, 200.0).unwrap()
    }

    #[test]
    fn params_reject_odd_or_small_chains() {
        assert!(ChainParams::new(3, 1.0, 1.0).is_err());
        assert!(ChainParams::new(7, 1.0, 1.0).is_err());
        assert!(ChainParams::new(8, -1.0, 1.0).is_err());
        assert!(ChainParams::new(8, 1.0, 0.0).is_err());
        assert!(ChainParams::new(4, 0.0, 1.0).is_ok());
    }

    #[test]
    fn energy_of_single_momentum() {
        let s = ChainState::new(vec![0.0; 4], vec![1.0, 0.0, 0.0, 0.0], 0.0).unwrap();
        let e = total_energy(&s, &params(4, 1.0)).unwrap();
        assert_eq!((e.h2, e.h4, e.total), (0.5, 0.0, 0.5));
    }

    #[test]
    fn energy_of_single_displacement() {
        let s = ChainState::new(vec![1.0, 0.0, 0.0, 0.0], vec![0.0; 4], 0.0).unwrap();
        let e = total_energy(&s, &params(4, 4.0)).unwrap();
        assert_eq!((e.h2, e.h4, e.total), (1.0, 2.0, 3.0));
    }

    #[test]
    fn non_finite_state_is_rejected() {
        let s = ChainState {
            q: vec![0.0, f64::NAN, 0.0, 0.0],
            p: vec![0.0; 4],
            t: 0.0,
        };
        assert!(matches!(
            total_energy(&s, &params(4, 1.0)),
            Err(Error::InvalidState(_))
        ));
        let short = ChainState::at_rest(6);
        assert!(total_energy(&short, &params(4, 1.0)).is_err());
    }

    #[test]
    fn linear_chain_forces() {
        let s = ChainState::new(vec![1.0, 0.0, 0.0, 0.0], vec![0.0; 4], 0.0).unwrap();
        let f = forces(&s, &params(4, 0.0)).unwrap();
        assert_eq!(f, vec![-2.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn uniform_translation_feels_no_force() {
        let s = ChainState::new(vec![0.7; 8], vec![0.0; 8], 0.0).unwrap();
        let f = forces(&s, &params(8, 3.0)).unwrap();
        assert!(f.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn step_rejects_nonpositive_dt() {
        let s = ChainState::at_rest(4);
        assert!(matches!(step(&s, &params(4, 1.0), 0.0), Err(Error::Parameter(_))));
        assert!(step(&s, &params(4, 1.0), -0.1).is_err());
    }

    #[test]
    fn site_energy_of_single_momentum() {
        let mut p = vec![0.0; 8];
        p[0] = 1.0;
        let s = ChainState::new(vec![0.0; 8], p, 0.0).unwrap();
        let field = site_energy_density(&s, &params(8, 1.0)).unwrap();
        let mut want = vec![0.0; 8];
        want[0] = 0.5;
        assert_eq!(field.e, want);

        let flat = ChainState::new(vec![2.5; 8], vec![0.0; 8], 0.0).unwrap();
        let field = site_energy_density(&flat, &params(8, 1.0)).unwrap();
        assert!(field.e.iter().all(|e| *e == 0.0));
    }

    #[test]
    fn random_state_contract() {
        let prm = params(128, 1.0);
        let a = random_initial_state(&prm, 42);
        let b = random_initial_state(&prm, 42);
        assert_eq!(a, b);
        assert_ne!(a, random_initial_state(&prm, 43));
        for seed in 0..20 {
            let s = random_initial_state(&prm, seed);
            let e = total_energy(&s, &prm).unwrap();
            assert!((e.total - 200.0).abs() <= 2e-10, "seed {seed}: {}", e.total);
            assert!(s.total_momentum().abs() < 1e-12);
            assert!(s.q.iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn integrate_reports_blow_up() {
        let prm = params(8, 1.0);
        let mut s = ChainState::at_rest(8);
        s.q[0] = 1e80;
        let err = integrate(s, &prm, 0.01, 1.0, 1, NullSink).unwrap_err();
        assert!(matches!(err, Error::BlowUp { step: 1, .. }), "{err}");
    }

    #[test]
    fn integrate_emits_samples_at_stride() {
        let prm = params(8, 1.0);
        let s = random_initial_state(&prm, 1);
        let mut samples: Vec<ChainState> = Vec::new();
        let end = integrate(s, &prm, 0.01, 1.0, 10, &mut samples).unwrap();
        assert_eq!(samples.len(), 10);
        assert_relative_eq!(samples[0].t, 0.1, epsilon = 1e-12);
        assert_relative_eq!(end.t, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn equipartition_limits() {
        assert_relative_eq!(equipartition_indicator(&[2.0; 127]).unwrap(), 1.0, epsilon = 1e-12);
        let mut single = vec![0.0; 127];
        single[5] = 3.0;
        assert_relative_eq!(
            equipartition_indicator(&single).unwrap(),
            1.0 / 127.0,
            epsilon = 1e-12
        );
        assert!(matches!(
            equipartition_indicator(&[0.0; 10]),
            Err(Error::Undefined(_))
        ));
    }
}
