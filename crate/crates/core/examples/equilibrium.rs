//! Thermalizes a small chain and prints its spectrum and renormalization.
//!
//! `cargo run --release -p fpu-core --example equilibrium -- [beta]`

use fpu_core::analysis::WelchConfig;
use fpu_core::experiment::{run_equilibrium, EquilibriumSpec};
use fpu_core::lattice::NullSink;
use fpu_core::RunConfig;

fn main() -> fpu_core::Result<()> {
    let beta = std::env::args().nth(1).map_or(Ok(1.0), |s| s.parse()).unwrap_or(1.0);
    let config = RunConfig {
        n: 32,
        beta,
        target_energy: 50.0,
        t_transient: 1e3,
        t_record: 1e4,
        ..RunConfig::default()
    };
    let mut spec = EquilibriumSpec::from_config(&config)?;
    spec.welch = WelchConfig {
        segment_len: 4096,
        overlap: 0.5,
    };
    let summary = run_equilibrium(&spec, NullSink)?.summarize()?;
    println!("beta {beta}: equipartition {:.4}", summary.equipartition);
    println!(
        "spectrum slope {:.3}, temperature {:.3}",
        summary.spectrum_bare.slope_fit, summary.spectrum_bare.temperature_fit
    );
    println!(
        "eta measured {:.4}, mean-field {:.4}",
        summary.eta_measured(),
        summary.eta_analytic
    );
    println!(
        "H4/H2 {:.4} -> {:.4} after renormalization",
        summary.ratios.h4_over_h2, summary.ratios.h4t_over_h2t
    );
    Ok(())
}
