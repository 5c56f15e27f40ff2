//! Randomized invariants of the chain, its mode representation and the
//! breather filter.

use fpu_core::analysis::average_power_spectrum;
use fpu_core::breather::{highpass_filter, participation_ratio, FilterSpec, SiteSeries};
use fpu_core::lattice::{forces, site_energy_density, step_with, total_energy, ChainParams, ChainState, Scheme};
use fpu_core::modes::{
    bare_from_renormalized, eta_analytic, from_modes, normal_vars, renormalized_from_bare, to_modes, Dispersion,
    ModeState,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn chain(max_n: usize) -> impl Strategy<Value = (ChainParams, ChainState)> {
    (2usize..=max_n / 2).prop_flat_map(|half| chain_of(2 * half))
}

fn chain_of(n: usize) -> impl Strategy<Value = (ChainParams, ChainState)> {
    (Just(n), 0.0f64..20.0)
        .prop_flat_map(|(n, beta)| {
            (
                Just(n),
                Just(beta),
                prop::collection::vec(-1.0f64..1.0, n),
                prop::collection::vec(-1.0f64..1.0, n),
            )
        })
        .prop_map(|(n, beta, q, p)| {
            let params = ChainParams::new(n, beta, 1.0).unwrap();
            (params, ChainState::new(q, p, 0.0).unwrap())
        })
}

fn scheme() -> impl Strategy<Value = Scheme> {
    prop_oneof![Just(Scheme::Verlet), Just(Scheme::Suzuki4)]
}

fn advance(mut s: ChainState, params: &ChainParams, dt: f64, scheme: Scheme, steps: usize) -> ChainState {
    for _ in 0..steps {
        s = step_with(&s, params, dt, scheme).unwrap();
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forces_are_minus_energy_gradient((params, state) in chain(24)) {
        let f = forces(&state, &params).unwrap();
        let h = 1e-6;
        for i in 0..state.len() {
            let mut plus = state.clone();
            let mut minus = state.clone();
            plus.q[i] += h;
            minus.q[i] -= h;
            let de = total_energy(&plus, &params).unwrap().total - total_energy(&minus, &params).unwrap().total;
            let fd = -de / (2.0 * h);
            prop_assert!((f[i] - fd).abs() <= 1e-6 * (1.0 + f[i].abs()), "site {}: {} vs {}", i, f[i], fd);
        }
    }

    #[test]
    fn parseval_holds_for_displacements_and_momenta((_, state) in chain(64)) {
        let modes = to_modes(&state);
        let site_q: f64 = state.q.iter().map(|x| x * x).sum();
        let site_p: f64 = state.p.iter().map(|x| x * x).sum();
        let mode_q: f64 = modes.q.iter().map(|z| z.norm_sqr()).sum();
        let mode_p: f64 = modes.p.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((site_q - mode_q).abs() <= 1e-12 * site_q.max(1.0));
        prop_assert!((site_p - mode_p).abs() <= 1e-12 * site_p.max(1.0));
        let back = from_modes(&modes).unwrap();
        for (a, b) in back.q.iter().zip(&state.q) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn site_energies_sum_to_hamiltonian((params, state) in chain(48)) {
        let field = site_energy_density(&state, &params).unwrap();
        let h = total_energy(&state, &params).unwrap().total;
        prop_assert!((field.total() - h).abs() <= 1e-10 * h.max(1.0));
    }

    #[test]
    fn integration_is_time_reversible((params, state) in chain(32), scheme in scheme()) {
        let forward = advance(state.clone(), &params, 0.01, scheme, 200);
        let mut back = forward.clone();
        back.flip_momenta();
        let mut back = advance(back, &params, 0.01, scheme, 200);
        back.flip_momenta();
        for (a, b) in back.q.iter().zip(&state.q).chain(back.p.iter().zip(&state.p)) {
            prop_assert!((a - b).abs() < 1e-10, "{} vs {}", a, b);
        }
    }

    #[test]
    fn total_momentum_is_conserved((params, state) in chain(32), scheme in scheme()) {
        let p0 = state.total_momentum();
        let end = advance(state, &params, 0.01, scheme, 300);
        prop_assert!((end.total_momentum() - p0).abs() < 1e-10);
    }

    #[test]
    fn participation_ratio_lies_between_one_and_n((params, state) in chain(64)) {
        let field = site_energy_density(&state, &params).unwrap();
        let pr = participation_ratio(&field).unwrap();
        prop_assert!(pr >= 1.0 - 1e-12 && pr <= params.n as f64 + 1e-9, "{}", pr);
    }

    #[test]
    fn mean_field_eta_grows_with_beta(
        q2 in prop::collection::vec(0.01f64..10.0, 15),
        b1 in 0.0f64..50.0,
        db in 0.01f64..50.0,
    ) {
        let lo = eta_analytic(&q2, b1, 16).unwrap().eta_analytic;
        let hi = eta_analytic(&q2, b1 + db, 16).unwrap().eta_analytic;
        prop_assert!(lo >= 1.0);
        prop_assert!(hi > lo);
    }

    #[test]
    fn renormalized_variables_round_trip((_, state) in chain(40), eta in 1.0f64..6.0) {
        let n = state.len();
        let modes = to_modes(&state);
        let a = normal_vars(&modes, &Dispersion::BARE.table(n)).unwrap();
        let direct = normal_vars(&modes, &Dispersion::renormalized(eta).unwrap().table(n)).unwrap();
        let mixed = renormalized_from_bare(&a, eta);
        let back = bare_from_renormalized(&mixed, eta);
        for k in 0..a.len() {
            prop_assert!((mixed[k] - direct[k]).norm() < 1e-10 * (1.0 + direct[k].norm()));
            prop_assert!((back[k] - a[k]).norm() < 1e-10 * (1.0 + a[k].norm()));
        }
    }

    #[test]
    fn spectrum_ignores_mode_phases(
        states in prop::collection::vec(chain_of(16), 3),
        phases in prop::collection::vec(0.0f64..std::f64::consts::TAU, 16),
    ) {
        let records: Vec<ModeState> = states.iter().map(|(_, s)| to_modes(s)).collect();
        let rotated: Vec<ModeState> = records
            .iter()
            .map(|m| {
                let n = m.len();
                let mut r = m.clone();
                for k in 1..n {
                    // opposite phases on k and N − k keep the data real
                    let theta = if 2 * k < n { phases[k] } else if 2 * k > n { -phases[n - k] } else { 0.0 };
                    let z = Complex64::from_polar(1.0, theta);
                    r.q[k] *= z;
                    r.p[k] *= z;
                }
                r
            })
            .collect();
        let eta = Dispersion::renormalized(1.7).unwrap();
        let a = average_power_spectrum(&records, eta).unwrap();
        let b = average_power_spectrum(&rotated, eta).unwrap();
        for (x, y) in a.mean_sq_a.iter().zip(&b.mean_sq_a) {
            prop_assert!((x - y).abs() <= 1e-10 * x.max(1e-12));
        }
    }
}

fn series(seed: &[f64], sites: usize, len: usize) -> SiteSeries {
    let values = (0..sites)
        .map(|s| {
            (0..len)
                .map(|i| {
                    let t = i as f64 * 0.1;
                    seed.iter()
                        .enumerate()
                        .map(|(j, a)| a * ((j as f64 + 1.0) * 1.3 * t + s as f64).sin())
                        .sum()
                })
                .collect()
        })
        .collect();
    SiteSeries {
        values,
        t0: 0.0,
        dt_sample: 0.1,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn filter_is_linear_and_idempotent(
        a in prop::collection::vec(-1.0f64..1.0, 1..12),
        b in prop::collection::vec(-1.0f64..1.0, 1..12),
        (c1, c2) in (-3.0f64..3.0, -3.0f64..3.0),
        cut in 1.0f64..20.0,
    ) {
        let spec = FilterSpec::hard(cut).unwrap();
        let (x, y) = (series(&a, 3, 1024), series(&b, 3, 1024));
        let mut combo = x.clone();
        for (row, other) in combo.values.iter_mut().zip(&y.values) {
            for (u, v) in row.iter_mut().zip(other) {
                *u = c1 * *u + c2 * v;
            }
        }
        let fx = highpass_filter(&x, spec, 0.1).unwrap();
        let fy = highpass_filter(&y, spec, 0.1).unwrap();
        let fc = highpass_filter(&combo, spec, 0.1).unwrap();
        for s in 0..3 {
            for i in 0..1024 {
                let expect = c1 * fx.qf[s][i] + c2 * fy.qf[s][i];
                prop_assert!((fc.qf[s][i] - expect).abs() < 1e-10);
            }
        }
        let again = highpass_filter(
            &SiteSeries { values: fx.qf.clone(), t0: 0.0, dt_sample: 0.1 },
            spec,
            0.1,
        )
        .unwrap();
        for (r1, r2) in again.qf.iter().zip(&fx.qf) {
            for (u, v) in r1.iter().zip(r2) {
                prop_assert!((u - v).abs() < 1e-10);
            }
        }
    }
}
