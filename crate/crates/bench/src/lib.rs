//! Benchmark fixtures shared by the criterion benches.

use fpu_core::breather::SiteSeries;
use fpu_core::lattice::{integrate_with, random_initial_state, ChainParams, ChainState, Scheme};
use fpu_core::modes::{to_modes, ModeState};

/// A thermalized state of the standard N = 128, E = 200 chain.
pub fn thermal_state(beta: f64) -> (ChainParams, ChainState) {
    let params = ChainParams::new(128, beta, 200.0).expect("valid parameters");
    let start = random_initial_state(&params, 1);
    let state = integrate_with(start, &params, 0.01, Scheme::Suzuki4, 50.0, 1000, fpu_core::lattice::NullSink)
        .expect("stable integration");
    (params, state)
}

/// `len` consecutive mode records sampled every 0.1 time units.
pub fn mode_records(beta: f64, len: usize) -> Vec<ModeState> {
    let (params, state) = thermal_state(beta);
    let mut states = Vec::with_capacity(len);
    let t_end = state.t + len as f64 * 0.1;
    integrate_with(state, &params, 0.01, Scheme::Suzuki4, t_end, 10, &mut states).expect("stable integration");
    states.iter().map(to_modes).collect()
}

/// Displacement series of `len` samples for every site.
pub fn site_series(beta: f64, len: usize) -> SiteSeries {
    let (params, state) = thermal_state(beta);
    let mut states = Vec::with_capacity(len);
    let t0 = state.t;
    integrate_with(state, &params, 0.01, Scheme::Suzuki4, t0 + len as f64 * 0.1, 10, &mut states)
        .expect("stable integration");
    SiteSeries::displacements(&states).expect("uniform samples")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_requested_sizes() {
        assert_eq!(mode_records(1.0, 16).len(), 16);
        let s = site_series(1.0, 32);
        assert_eq!((s.sites(), s.samples()), (128, 32));
    }
}
