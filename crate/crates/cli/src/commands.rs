use std::fs;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use fpu_core::analysis::{
    eta_beta_scaling, measure_eta, mode_evolution_record, near_resonance_count, nonlinearity_ratios_from_parts,
    ModeMoments, ModeTrace, PowerSpectrum, SpectrogramBuilder, WelchConfig,
};
use fpu_core::breather::{breather_statistics, BreatherScanner, DetectionThresholds, ScanConfig};
use fpu_core::config::{derive_seed, RunManifest};
use fpu_core::experiment::{run_equilibrium, EquilibriumSpec};
use fpu_core::io::{
    read_numeric_csv, write_breathers_csv, write_eta_csv, write_mode_evolution_csv, write_modes_csv,
    write_peaks_csv, write_ratios_csv, write_snapshot_csv, write_spectrogram_csv, write_spectrum_csv, EtaRow,
    RatioRow, RecordHeader, RecordKind, RecordWriter,
};
use fpu_core::lattice::{integrate_with, random_initial_state, total_energy, EnergyParts, FnSink, NullSink};
use fpu_core::modes::{eta_analytic, to_modes};
use fpu_core::verify::{run_all, VerifyConfig};
use fpu_core::{ChainParams, ChainState, Dispersion, DispersionKind, Error, FilterSpec, RunConfig};
use serde::Serialize;

use crate::records;
use crate::{CliError, CliResult};

const TRANSIENT_CHECK_STRIDE: usize = 1000;
const DEFAULT_OMEGA_CUT: f64 = 7.0;

fn now_unix() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Adds `files` to the manifest of `dir`, creating one if absent.
fn update_manifest(config: &RunConfig, dir: &Path, files: &[&str], notes: &[(&str, String)]) -> CliResult<()> {
    let mut manifest = match RunManifest::read(dir) {
        Ok(m) => m,
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::NotFound => RunManifest::new(config, now_unix()),
        Err(e) => return Err(e.into()),
    };
    for f in files {
        manifest.add_file(dir, f)?;
    }
    for (k, v) in notes {
        manifest.notes.insert((*k).to_owned(), v.clone());
    }
    manifest.write(dir)?;
    Ok(())
}

/// The configuration a run directory was produced with, if recorded.
fn run_config(config: &RunConfig, dir: &Path) -> RunConfig {
    RunManifest::read(dir)
        .ok()
        .and_then(|m| m.run_config().ok())
        .unwrap_or_else(|| config.clone())
}

fn params_for(config: &RunConfig, dir: &Path, header: &RecordHeader) -> CliResult<ChainParams> {
    let energy = run_config(config, dir).target_energy;
    Ok(ChainParams::new(header.n, header.beta, energy)?)
}

pub fn simulate(config: &RunConfig) -> CliResult<()> {
    config.validate()?;
    let started = now_unix();
    let clock = Instant::now();
    let dir = config.output_dir.as_path();
    fs::create_dir_all(dir)?;
    let params = config.params()?;

    let start = random_initial_state(&params, config.seed);
    let h0 = total_energy(&start, &params)?.total;
    let mut drift: f64 = 0.0;
    let thermal = integrate_with(
        start,
        &params,
        config.dt,
        config.integrator,
        config.t_transient,
        TRANSIENT_CHECK_STRIDE,
        FnSink(|s: &ChainState| {
            drift = drift.max(((total_energy(s, &params)?.total - h0) / h0).abs());
            Ok(())
        }),
    )?;

    let header = RecordHeader {
        n: params.n,
        beta: params.beta,
        dt: config.dt,
        stride: config.sample_stride,
    };
    let mut kinds = vec![RecordKind::Trajectory];
    if config.write_modes {
        kinds.push(RecordKind::Modes);
    }
    let mut writers = kinds
        .iter()
        .map(|&k| RecordWriter::create(&dir.join(k.file_name()), header, k))
        .collect::<fpu_core::Result<Vec<_>>>()?;
    let mut samples = 0u64;
    let t_end = thermal.t + config.t_record;
    let last = integrate_with(
        thermal,
        &params,
        config.dt,
        config.integrator,
        t_end,
        config.sample_stride as usize,
        (
            &mut writers,
            FnSink(|s: &ChainState| {
                drift = drift.max(((total_energy(s, &params)?.total - h0) / h0).abs());
                samples += 1;
                Ok(())
            }),
        ),
    )?;
    drop(writers);

    fs::write(dir.join("config.txt"), config.to_text())?;
    write_snapshot_csv(&dir.join("snapshot.csv"), &last, &params)?;
    write_modes_csv(&dir.join("modes_snapshot.csv"), &to_modes(&last))?;

    let mut manifest = RunManifest::new(config, started);
    for k in &kinds {
        manifest.add_file(dir, k.file_name())?;
    }
    for f in ["config.txt", "snapshot.csv", "modes_snapshot.csv"] {
        manifest.add_file(dir, f)?;
    }
    manifest.energy_drift = Some(drift);
    manifest.notes.insert("samples".into(), samples.to_string());
    manifest.wall_seconds = clock.elapsed().as_secs_f64();
    manifest.write(dir)?;
    println!(
        "simulated N={} beta={} E={}: {samples} samples, max relative energy drift {drift:.3e}, wrote {}",
        params.n,
        params.beta,
        params.target_energy,
        dir.display()
    );
    Ok(())
}

/// Explicit value, then the measured η of a previous `dispersion` run,
/// then the mean-field estimate from `moments`.
fn resolve_eta(
    dir: &Path,
    explicit: Option<f64>,
    header: &RecordHeader,
    moments: &ModeMoments,
) -> CliResult<(f64, &'static str)> {
    if let Some(eta) = explicit {
        return Ok((eta, "given"));
    }
    let path = dir.join("eta.csv");
    if path.exists() {
        let (cols, rows) = read_numeric_csv(&path)?;
        let col = |name: &str| cols.iter().position(|c| c == name);
        if let (Some(b), Some(m)) = (col("beta"), col("eta_measured")) {
            if let Some(row) = rows.iter().find(|r| r[b] == header.beta) {
                return Ok((row[m], "measured"));
            }
        }
    }
    let report = eta_analytic(&moments.mean_q_sq()?, header.beta, header.n)?;
    Ok((report.eta_analytic, "analytic"))
}

fn dispersion_for(kind: &str, eta: f64) -> CliResult<Dispersion> {
    Ok(match DispersionKind::parse(kind)? {
        DispersionKind::Bare => Dispersion::BARE,
        DispersionKind::Renormalized => Dispersion::renormalized(eta)?,
    })
}

pub fn spectrum(config: &RunConfig, kind: &str, eta: Option<f64>) -> CliResult<()> {
    let dir = config.output_dir.as_path();
    let n = records::header(dir)?.n;
    let mut moments = ModeMoments::new(n);
    let (header, _) = records::for_each(dir, RecordKind::Modes, |_, m| {
        moments.push(m);
        Ok(())
    })?;
    let (eta, source) = match DispersionKind::parse(kind)? {
        DispersionKind::Bare => (1.0, "bare"),
        DispersionKind::Renormalized => resolve_eta(dir, eta, &header, &moments)?,
    };
    let spec = PowerSpectrum::from_moments(&moments, dispersion_for(kind, eta)?)?;
    write_spectrum_csv(&dir.join("spectrum.csv"), &spec)?;
    update_manifest(config, dir, &["spectrum.csv"], &[("spectrum_eta", format!("{eta:?} ({source})"))])?;
    println!(
        "spectrum ({}, eta={eta:.4}): T={:.5} slope={:.4} r2={:.5}",
        spec.dispersion_used.name(),
        spec.temperature_fit,
        spec.slope_fit,
        spec.r_squared
    );
    Ok(())
}

pub fn dispersion(config: &RunConfig, delta: Option<f64>, segment_len: usize) -> CliResult<()> {
    let dir = config.output_dir.as_path();
    let n = records::header(dir)?.n;
    let welch = WelchConfig {
        segment_len,
        ..WelchConfig::default()
    };
    let mut builder = SpectrogramBuilder::new(n, Dispersion::BARE, welch)?;
    let mut moments = ModeMoments::new(n);
    let (header, _) = records::for_each(dir, RecordKind::Modes, |_, m| {
        builder.push(m);
        moments.push(m);
        Ok(())
    })?;
    let spec = builder.finish(header.dt_sample())?;
    let eta = measure_eta(&spec, n)?;
    let analytic = eta_analytic(&moments.mean_q_sq()?, header.beta, n)?.eta_analytic;
    let delta = match delta {
        Some(d) => d,
        None => spec.width[n / 4 - 1],
    };
    let renorm = Dispersion::renormalized(eta.eta_fit)?;
    let resonances = near_resonance_count(n, &renorm.table(n), delta)?;

    write_spectrogram_csv(&dir.join("spectrogram.csv"), &spec)?;
    write_peaks_csv(&dir.join("peaks.csv"), &spec)?;
    write_eta_csv(
        &dir.join("eta.csv"),
        &[EtaRow {
            beta: header.beta,
            eta_measured: eta.eta_fit,
            eta_analytic: analytic,
        }],
    )?;
    update_manifest(
        config,
        dir,
        &["spectrogram.csv", "peaks.csv", "eta.csv"],
        &[
            ("eta_band_edge", format!("{:?}", eta.eta_band_edge)),
            ("eta_relative_rms_residual", format!("{:?}", eta.relative_rms_residual)),
            ("resonance_delta", format!("{delta:?}")),
            ("near_resonant_quartets", resonances.to_string()),
        ],
    )?;
    println!(
        "eta_measured={:.4} (band edge {:.4}, rms residual {:.2e}) eta_analytic={analytic:.4}",
        eta.eta_fit, eta.eta_band_edge, eta.relative_rms_residual
    );
    println!("near-resonant quartets at delta={delta:.4}: {resonances}");
    Ok(())
}

pub fn ratios(config: &RunConfig, eta: Option<f64>) -> CliResult<()> {
    let dir = config.output_dir.as_path();
    let head = records::header(dir)?;
    let params = params_for(config, dir, &head)?;
    let mut moments = ModeMoments::new(head.n);
    let mut parts = Vec::new();
    let (header, _) = records::for_each(dir, RecordKind::Trajectory, |s, m| {
        moments.push(m);
        parts.push(EnergyParts::of(s, &params));
        Ok(())
    })?;
    let (eta, source) = resolve_eta(dir, eta, &header, &moments)?;
    let r = nonlinearity_ratios_from_parts(&parts, eta)?;
    write_ratios_csv(
        &dir.join("ratios.csv"),
        &[RatioRow {
            beta: header.beta,
            h4_h2: r.h4_over_h2,
            h4t_h2t: r.h4t_over_h2t,
        }],
    )?;
    update_manifest(config, dir, &["ratios.csv"], &[("ratios_eta", format!("{eta:?} ({source})"))])?;
    println!(
        "H4/H2={:.4} H~4/H~2={:.4} (eta={eta:.4}, {source})",
        r.h4_over_h2, r.h4t_over_h2t
    );
    Ok(())
}

pub fn modes(config: &RunConfig, ks: &[usize], kind: &str, eta: Option<f64>) -> CliResult<()> {
    let dir = config.output_dir.as_path();
    let n = records::header(dir)?.n;
    if let Some(k) = ks.iter().find(|&&k| k == 0 || k >= n) {
        return Err(Error::Parameter(format!("mode {k} outside 1..{n}")).into());
    }
    let mut traces: Vec<ModeTrace> = ks.iter().map(|&k| ModeTrace::new(k)).collect();
    let mut moments = ModeMoments::new(n);
    let (header, _) = records::for_each(dir, RecordKind::Modes, |_, m| {
        moments.push(m);
        for t in &mut traces {
            t.push(m);
        }
        Ok(())
    })?;
    let (eta, source) = match DispersionKind::parse(kind)? {
        DispersionKind::Bare => (1.0, "bare"),
        DispersionKind::Renormalized => resolve_eta(dir, eta, &header, &moments)?,
    };
    let dispersion = dispersion_for(kind, eta)?;
    let mut names = Vec::new();
    for trace in &traces {
        let evo = mode_evolution_record(trace, n, dispersion)?;
        let name = format!("modes_{}.csv", trace.k);
        write_mode_evolution_csv(&dir.join(&name), &evo)?;
        println!("mode {}: omega={:.5}, {} samples -> {name}", trace.k, evo.omega, evo.t.len());
        names.push(name);
    }
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    update_manifest(config, dir, &refs, &[("modes_eta", format!("{eta:?} ({source})"))])?;
    Ok(())
}

pub struct BreatherOptions {
    pub omega_cut: Option<f64>,
    pub threshold: f64,
    pub floor: f64,
    pub sustain: usize,
    pub block: usize,
    pub overlap: Option<usize>,
    pub write_qf: bool,
}

pub fn breathers(config: &RunConfig, opts: &BreatherOptions) -> CliResult<()> {
    let dir = config.output_dir.as_path();
    let header = records::header(dir)?;
    let params = params_for(config, dir, &header)?;
    let omega_cut = opts
        .omega_cut
        .or(config.omega_cut)
        .or(run_config(config, dir).omega_cut)
        .unwrap_or(DEFAULT_OMEGA_CUT);
    let filter = FilterSpec::hard(omega_cut)?;
    let thresholds = DetectionThresholds {
        median_ratio: opts.threshold,
        min_local_energy: opts.floor,
        sustain_samples: opts.sustain,
        ..DetectionThresholds::default()
    };
    let scan = ScanConfig {
        block_len: opts.block,
        overlap: opts.overlap.unwrap_or((opts.block as f64 * 0.1).round() as usize),
    };
    let qf_name = RecordKind::Filtered.file_name();
    let mut qf = if opts.write_qf {
        Some(RecordWriter::create(&dir.join(qf_name), header, RecordKind::Filtered)?)
    } else {
        None
    };
    let mut scanner = BreatherScanner::new(params, filter, thresholds, scan)?;
    if let Some(w) = qf.as_mut() {
        scanner = scanner.with_export(move |t, v| w.write_filtered(t, v));
    }
    records::for_each(dir, RecordKind::Trajectory, |s, _| {
        use fpu_core::lattice::SampleSink;
        scanner.accept(s)
    })?;
    let report = scanner.finish_scan()?;
    if let Some(w) = qf {
        w.finish()?;
    }
    write_breathers_csv(&dir.join("breathers.csv"), &report.tracks, report.sites)?;
    let stats = breather_statistics(&report.tracks, report.sites, report.searched_duration);
    let mut files = vec!["breathers.csv"];
    if opts.write_qf {
        files.push(qf_name);
    }
    update_manifest(
        config,
        dir,
        &files,
        &[
            ("breather_omega_cut", format!("{omega_cut:?}")),
            ("breather_tracks", report.tracks.len().to_string()),
            ("filtered_rms_ratio", format!("{:?}", report.filtered_rms_ratio)),
        ],
    )?;
    println!(
        "{} tracks over {:.1} time units ({} blocks, omega_cut={omega_cut}), rate {:.3e} per site per time, rms(qf)/rms(q)={:.3e}",
        stats.count,
        report.searched_duration,
        report.blocks,
        stats.count_per_site_time,
        report.filtered_rms_ratio
    );
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct SweepRow {
    beta: f64,
    seed: u64,
    eta_measured: f64,
    eta_band_edge: f64,
    eta_relative_rms_residual: f64,
    eta_analytic: f64,
    h4_h2: f64,
    h4t_h2t: f64,
    equipartition: f64,
    temperature_fit: f64,
    slope_fit: f64,
    resonant_quartic_fraction: Option<f64>,
    energy_drift: f64,
}

fn sweep_one(template: &RunConfig, beta: f64, segment_len: usize) -> fpu_core::Result<SweepRow> {
    let mut config = template.clone();
    config.beta = beta;
    config.seed = derive_seed(template.seed, beta);
    let mut spec = EquilibriumSpec::from_config(&config)?;
    spec.welch.segment_len = segment_len;
    let run = run_equilibrium(&spec, NullSink)?;
    let s = run.summarize()?;
    Ok(SweepRow {
        beta,
        seed: config.seed,
        eta_measured: s.eta_measured(),
        eta_band_edge: s.eta.eta_band_edge,
        eta_relative_rms_residual: s.eta.relative_rms_residual,
        eta_analytic: s.eta_analytic,
        h4_h2: s.ratios.h4_over_h2,
        h4t_h2t: s.ratios.h4t_over_h2t,
        equipartition: s.equipartition,
        temperature_fit: s.spectrum_bare.temperature_fit,
        slope_fit: s.spectrum_bare.slope_fit,
        resonant_quartic_fraction: s.quartic.map(|q| q.fraction),
        energy_drift: s.energy_drift,
    })
}

pub fn sweep(config: &RunConfig, betas: &[f64], segment_len: usize, threads: usize) -> CliResult<()> {
    let started = now_unix();
    let clock = Instant::now();
    let mut betas = betas.to_vec();
    if betas.is_empty() || betas.iter().any(|b| !(*b >= 0.0) || !b.is_finite()) {
        return Err(Error::Config("sweep needs a list of finite, nonnegative β values".into()).into());
    }
    betas.sort_by(f64::total_cmp);
    betas.dedup();
    let dir = config.output_dir.as_path();
    fs::create_dir_all(dir)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<fpu_core::Result<SweepRow>> = pool.install(|| {
        use rayon::prelude::*;
        betas.par_iter().map(|&b| sweep_one(config, b, segment_len)).collect()
    });
    let rows = results.into_iter().collect::<fpu_core::Result<Vec<_>>>()?;

    let eta_rows: Vec<EtaRow> = rows
        .iter()
        .map(|r| EtaRow {
            beta: r.beta,
            eta_measured: r.eta_measured,
            eta_analytic: r.eta_analytic,
        })
        .collect();
    let ratio_rows: Vec<RatioRow> = rows
        .iter()
        .map(|r| RatioRow {
            beta: r.beta,
            h4_h2: r.h4_h2,
            h4t_h2t: r.h4t_h2t,
        })
        .collect();
    write_eta_csv(&dir.join("eta.csv"), &eta_rows)?;
    write_ratios_csv(&dir.join("ratios.csv"), &ratio_rows)?;
    let points: Vec<(f64, f64)> = rows.iter().filter(|r| r.beta > 0.0).map(|r| (r.beta, r.eta_measured)).collect();
    let scaling = eta_beta_scaling(&points).ok();
    let json = serde_json::json!({ "rows": rows, "eta_scaling": scaling });
    fs::write(
        dir.join("sweep.json"),
        serde_json::to_string_pretty(&json).map_err(|e| Error::Format(e.to_string()))? + "\n",
    )?;

    let mut manifest = RunManifest::new(config, started);
    for f in ["eta.csv", "ratios.csv", "sweep.json"] {
        manifest.add_file(dir, f)?;
    }
    manifest.energy_drift = rows.iter().map(|r| r.energy_drift).reduce(f64::max);
    let list: Vec<String> = betas.iter().map(|b| format!("{b:?}")).collect();
    manifest.notes.insert("betas".into(), list.join(","));
    manifest.wall_seconds = clock.elapsed().as_secs_f64();
    manifest.write(dir)?;

    println!("{:>8} {:>10} {:>10} {:>8} {:>9}", "beta", "eta_meas", "eta_mf", "H4/H2", "H~4/H~2");
    for r in &rows {
        println!(
            "{:>8} {:>10.4} {:>10.4} {:>8.4} {:>9.4}",
            r.beta, r.eta_measured, r.eta_analytic, r.h4_h2, r.h4t_h2t
        );
    }
    if let Some(fit) = scaling {
        println!("eta ~ {:.4} beta^{:.4}", fit.prefactor, fit.exponent);
    }
    Ok(())
}

pub fn verify(config: &RunConfig, states: usize, drift_time: f64) -> CliResult<()> {
    let params = config.params()?;
    let mut cfg = VerifyConfig::new(params, config.dt, config.integrator, config.seed);
    cfg.states = states;
    cfg.drift_time = drift_time;
    let checks = run_all(&cfg)?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    for c in &checks {
        println!(
            "{} {:<28} {:.3e} (tol {:.0e}) {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance,
            c.detail
        );
    }
    if failed > 0 {
        return Err(CliError::ChecksFailed(failed, checks.len()));
    }
    println!("all {} checks passed", checks.len());
    Ok(())
}
