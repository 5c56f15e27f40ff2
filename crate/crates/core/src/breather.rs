//! Separation of high-frequency localized excitations from the thermal
//! wave background.
//!
//! The filter is an ideal projection in the frequency domain: every
//! Fourier coefficient of a site's time series with `|ω| < ω_cut` is
//! removed. Localized breathers oscillate above the renormalized phonon
//! band and survive the cut; extended waves do not.
//!
//! Each series is mirrored about its end points before transforming, so the
//! implied periodic signal has no jump at the wrap. A plain periodic
//! transform would smear the jump across all frequencies and leave
//! `1/t`-decaying ringing throughout the record.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{site_energy_density, ChainParams, ChainState, SampleSink, SiteEnergyField};

/// Shortest record the filter accepts.
pub const MIN_FILTER_SAMPLES: usize = 1 << 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transition {
    /// Brick-wall cut in the frequency domain.
    Hard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub omega_cut: f64,
    pub transition: Transition,
}

impl FilterSpec {
    pub fn hard(omega_cut: f64) -> Result<Self> {
        if !(omega_cut > 0.0) || !omega_cut.is_finite() {
            return Err(Error::param(format!("cutoff must be positive, got {omega_cut}")));
        }
        Ok(FilterSpec {
            omega_cut,
            transition: Transition::Hard,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceMeta {
    pub dt_sample: f64,
    pub t0: f64,
    pub sites: usize,
    pub samples: usize,
}

/// Per-site time series sampled on a uniform grid, `values[site][sample]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteSeries {
    pub values: Vec<Vec<f64>>,
    pub t0: f64,
    pub dt_sample: f64,
}

impl SiteSeries {
    pub fn sites(&self) -> usize {
        self.values.len()
    }

    pub fn samples(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// Displacements of a uniformly sampled trajectory.
    pub fn displacements(trajectory: &[ChainState]) -> Result<Self> {
        let mut rec = DisplacementRecorder::default();
        for s in trajectory {
            rec.accept(s)?;
        }
        rec.into_series()
    }

    pub fn time(&self, sample: usize) -> f64 {
        self.t0 + sample as f64 * self.dt_sample
    }
}

/// Sink collecting `q_n(t)` for later filtering.
#[derive(Debug, Default)]
pub struct DisplacementRecorder {
    values: Vec<Vec<f64>>,
    times: Vec<f64>,
}

impl DisplacementRecorder {
    pub fn with_capacity(sites: usize, samples: usize) -> Self {
        DisplacementRecorder {
            values: (0..sites).map(|_| Vec::with_capacity(samples)).collect(),
            times: Vec::with_capacity(samples),
        }
    }

    pub fn into_series(self) -> Result<SiteSeries> {
        if self.times.len() < 2 {
            return Err(Error::InsufficientData("need at least two samples".into()));
        }
        let dt = (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64;
        Ok(SiteSeries {
            values: self.values,
            t0: self.times[0],
            dt_sample: dt,
        })
    }
}

impl SampleSink for DisplacementRecorder {
    fn accept(&mut self, state: &ChainState) -> Result<()> {
        if self.values.is_empty() {
            self.values = vec![Vec::new(); state.q.len()];
        }
        for (series, q) in self.values.iter_mut().zip(&state.q) {
            series.push(*q);
        }
        self.times.push(state.t);
        Ok(())
    }
}

/// High-passed per-site series `q_n^f(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredField {
    /// `qf[site][sample]`
    pub qf: Vec<Vec<f64>>,
    pub spec: FilterSpec,
    pub source_meta: SourceMeta,
}

impl FilteredField {
    pub fn rms(&self) -> f64 {
        rms(self.qf.iter().flatten())
    }
}

pub(crate) fn rms<'a>(values: impl Iterator<Item = &'a f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v * v, c + 1));
    if count == 0 {
        0.0
    } else {
        (sum / count as f64).sqrt()
    }
}

/// Angular frequency of FFT bin `j` for a record of `len` samples.
fn bin_omega(j: usize, len: usize, dt: f64) -> f64 {
    let signed = if j <= len / 2 { j as f64 } else { j as f64 - len as f64 };
    2.0 * PI * signed / (len as f64 * dt)
}

/// `Re F⁻¹[H_ω F(g)]` for every site, with `H_ω` zeroing `|ω| < ω_cut`.
///
/// The transform acts on the even extension `g₀ … g_{L−1} g_{L−1} … g₀`,
/// whose frequency grid is `π m / (L Δt)`. Restricting back to the first
/// `L` samples keeps the map linear and idempotent.
pub fn highpass_filter(signal: &SiteSeries, spec: FilterSpec, dt_sample: f64) -> Result<FilteredField> {
    let nyquist = PI / dt_sample;
    if !(spec.omega_cut < nyquist) {
        return Err(Error::param(format!(
            "cutoff {} is not below the Nyquist frequency {nyquist}",
            spec.omega_cut
        )));
    }
    let len = signal.samples();
    if len < MIN_FILTER_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "filter needs at least {MIN_FILTER_SAMPLES} samples, got {len}"
        )));
    }
    let ext = 2 * len;
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(ext);
    let inverse = planner.plan_fft_inverse(ext);
    let mask: Vec<bool> = (0..ext)
        .map(|j| bin_omega(j, ext, dt_sample).abs() >= spec.omega_cut)
        .collect();
    let mut buf = vec![Complex64::new(0.0, 0.0); ext];
    let inv_len = 1.0 / ext as f64;
    let mut qf = Vec::with_capacity(signal.sites());
    for series in &signal.values {
        if series.len() != len {
            return Err(Error::param("site series differ in length"));
        }
        for (i, x) in series.iter().enumerate() {
            buf[i] = Complex64::new(*x, 0.0);
            buf[ext - 1 - i] = Complex64::new(*x, 0.0);
        }
        forward.process(&mut buf);
        buf.iter_mut().zip(&mask).for_each(|(b, keep)| {
            if !keep {
                *b = Complex64::new(0.0, 0.0);
            }
        });
        inverse.process(&mut buf);
        qf.push(buf[..len].iter().map(|z| z.re * inv_len).collect());
    }
    Ok(FilteredField {
        qf,
        spec,
        source_meta: SourceMeta {
            dt_sample,
            t0: signal.t0,
            sites: signal.sites(),
            samples: len,
        },
    })
}

/// Filters the displacement field of a uniformly sampled record.
pub fn filtered_displacement(record: &SiteSeries, spec: FilterSpec) -> Result<FilteredField> {
    let min_nyquist = 1.5 * spec.omega_cut;
    if PI / record.dt_sample < min_nyquist {
        return Err(Error::param(format!(
            "sampling interval {} cannot resolve 1.5 × the cutoff",
            record.dt_sample
        )));
    }
    highpass_filter(record, spec, record.dt_sample)
}

/// `(Σe)²/Σe²`: the effective number of sites sharing the energy.
pub fn participation_ratio(field: &SiteEnergyField) -> Result<f64> {
    let sum: f64 = field.e.iter().sum();
    let sum_sq: f64 = field.e.iter().map(|e| e * e).sum();
    if !(sum > 0.0) || !(sum_sq > 0.0) {
        return Err(Error::Undefined("participation ratio of an empty field".into()));
    }
    Ok(sum * sum / sum_sq)
}

/// Detector settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionThresholds {
    /// Local filtered energy must exceed this multiple of the spatial median.
    pub median_ratio: f64,
    /// ...and this absolute floor (energy units).
    pub min_local_energy: f64,
    /// Minimum lifetime in samples.
    pub sustain_samples: usize,
    /// Largest centre displacement per sample when linking, in sites.
    pub max_hop: f64,
    /// Missed samples bridged within one track.
    pub max_gap: usize,
    /// Fraction of the record dropped at each end (filter ringing).
    pub edge_fraction: f64,
}

impl Default for DetectionThresholds {
    fn default() -> Self {
        DetectionThresholds {
            median_ratio: 5.0,
            min_local_energy: 0.5,
            sustain_samples: 3,
            max_hop: 2.0,
            max_gap: 2,
            edge_fraction: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreatherTrack {
    pub id: usize,
    pub times: Vec<f64>,
    pub site_center: Vec<f64>,
    pub span_sites: Vec<usize>,
    pub t_start: f64,
    pub t_end: f64,
    pub mean_frequency: f64,
    pub oscillation_count: f64,
    pub peak_energy: f64,
}

impl BreatherTrack {
    pub fn lifetime(&self) -> f64 {
        self.t_end - self.t_start
    }

    pub fn max_span(&self) -> usize {
        self.span_sites.iter().copied().max().unwrap_or(0)
    }

    /// Circular mean of the centre positions on a ring of `n` sites.
    pub fn mean_site(&self, n: usize) -> f64 {
        let (s, c) = self.site_center.iter().fold((0.0, 0.0), |(s, c), x| {
            let a = 2.0 * PI * x / n as f64;
            (s + a.sin(), c + a.cos())
        });
        (s.atan2(c) / (2.0 * PI) * n as f64).rem_euclid(n as f64)
    }
}

/// Analytic signal of each filtered series: positive frequencies doubled,
/// negative removed. `|z|` is the oscillation envelope.
fn analytic_signal(field: &FilteredField) -> Vec<Vec<Complex64>> {
    let len = field.source_meta.samples;
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(len);
    let inverse = planner.plan_fft_inverse(len);
    let inv_len = 1.0 / len as f64;
    field
        .qf
        .iter()
        .map(|series| {
            let mut buf: Vec<Complex64> = series.iter().map(|x| Complex64::new(*x, 0.0)).collect();
            forward.process(&mut buf);
            for (j, b) in buf.iter_mut().enumerate() {
                let factor = if j == 0 || (len % 2 == 0 && j == len / 2) {
                    1.0
                } else if j < len.div_ceil(2) {
                    2.0
                } else {
                    0.0
                };
                *b *= factor * inv_len;
            }
            inverse.process(&mut buf);
            buf
        })
        .collect()
}

struct Blob {
    center: f64,
    span: usize,
    peak_site: usize,
    peak_local: f64,
}

/// Contiguous runs of flagged sites on a ring.
fn find_blobs(flags: &[bool], local: &[f64]) -> Vec<Blob> {
    let n = flags.len();
    if flags.iter().all(|f| *f) {
        return vec![blob_from_run(0, n, local)];
    }
    let Some(start_gap) = flags.iter().position(|f| !*f) else {
        return Vec::new();
    };
    let mut blobs = Vec::new();
    let mut i = 0;
    while i < n {
        let idx = (start_gap + i) % n;
        if flags[idx] {
            let mut len = 0;
            while i + len < n && flags[(start_gap + i + len) % n] {
                len += 1;
            }
            blobs.push(blob_from_run(idx, len, local));
            i += len;
        } else {
            i += 1;
        }
    }
    blobs
}

fn blob_from_run(start: usize, len: usize, local: &[f64]) -> Blob {
    let n = local.len();
    let (mut w_sum, mut moment) = (0.0, 0.0);
    let (mut peak_site, mut peak_local) = (start, f64::NEG_INFINITY);
    for off in 0..len {
        let site = (start + off) % n;
        let w = local[site];
        w_sum += w;
        moment += w * off as f64;
        if w > peak_local {
            peak_local = w;
            peak_site = site;
        }
    }
    Blob {
        center: (start as f64 + moment / w_sum).rem_euclid(n as f64),
        span: len,
        peak_site,
        peak_local,
    }
}

fn ring_distance(a: f64, b: f64, n: usize) -> f64 {
    let d = (a - b).rem_euclid(n as f64);
    d.min(n as f64 - d)
}

struct OpenTrack {
    samples: Vec<usize>,
    centers: Vec<f64>,
    spans: Vec<usize>,
    freq_weighted: f64,
    freq_weight: f64,
    peak_energy: f64,
}

/// Detects localized high-frequency excitations in a filtered field and
/// links them across time into tracks.
///
/// `energy`, when non-empty, must hold one site-energy field per sample of
/// `field`; it supplies each track's peak energy. Otherwise the local
/// filtered energy is reported. The first and last
/// `thresholds.edge_fraction` of the samples are not searched.
pub fn track_breathers(
    field: &FilteredField,
    energy: &[SiteEnergyField],
    thresholds: &DetectionThresholds,
) -> Result<Vec<BreatherTrack>> {
    let samples = field.source_meta.samples;
    let edge = (thresholds.edge_fraction * samples as f64).ceil() as usize;
    track_breathers_in(field, energy, thresholds, edge..samples.saturating_sub(edge))
}

/// As [`track_breathers`], searching only the samples in `range`.
pub fn track_breathers_in(
    field: &FilteredField,
    energy: &[SiteEnergyField],
    thresholds: &DetectionThresholds,
    range: Range<usize>,
) -> Result<Vec<BreatherTrack>> {
    let meta = field.source_meta;
    if !energy.is_empty() && energy.len() != meta.samples {
        return Err(Error::param(format!(
            "{} energy fields for {} filtered samples",
            energy.len(),
            meta.samples
        )));
    }
    if range.end > meta.samples {
        return Err(Error::param("detection range exceeds the record"));
    }
    let n = meta.sites;
    let dt = meta.dt_sample;
    let omega_cut = field.spec.omega_cut;
    let z = analytic_signal(field);

    let mut open: Vec<OpenTrack> = Vec::new();
    let mut done: Vec<OpenTrack> = Vec::new();
    let mut local = vec![0.0; n];
    let mut sorted = vec![0.0; n];
    let mut flags = vec![false; n];

    for s in range {
        for site in 0..n {
            local[site] = omega_cut * omega_cut * z[site][s].norm_sqr();
        }
        sorted.copy_from_slice(&local);
        let median = crate::analysis::evolution::median(&mut sorted);
        let level = (thresholds.median_ratio * median).max(thresholds.min_local_energy);
        for site in 0..n {
            flags[site] = local[site] > level;
        }
        let blobs = find_blobs(&flags, &local);

        // greedy nearest-centre association
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (ti, tr) in open.iter().enumerate() {
            let last_sample = *tr.samples.last().unwrap();
            let elapsed = (s - last_sample) as f64;
            let last_center = *tr.centers.last().unwrap();
            for (bi, b) in blobs.iter().enumerate() {
                let d = ring_distance(b.center, last_center, n);
                if d <= thresholds.max_hop * elapsed {
                    pairs.push((d, ti, bi));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut track_taken = vec![false; open.len()];
        let mut blob_owner: Vec<Option<usize>> = vec![None; blobs.len()];
        for (_, ti, bi) in pairs {
            if !track_taken[ti] && blob_owner[bi].is_none() {
                track_taken[ti] = true;
                blob_owner[bi] = Some(ti);
            }
        }
        for (bi, b) in blobs.iter().enumerate() {
            let freq = if s + 1 < meta.samples {
                let zc = z[b.peak_site][s];
                let zn = z[b.peak_site][s + 1];
                (zn * zc.conj()).arg() / dt
            } else {
                0.0
            };
            let peak_energy = if energy.is_empty() {
                b.peak_local
            } else {
                energy[s].e[b.peak_site]
            };
            let ti = match blob_owner[bi] {
                Some(ti) => ti,
                None => {
                    open.push(OpenTrack {
                        samples: Vec::new(),
                        centers: Vec::new(),
                        spans: Vec::new(),
                        freq_weighted: 0.0,
                        freq_weight: 0.0,
                        peak_energy: f64::NEG_INFINITY,
                    });
                    open.len() - 1
                }
            };
            let tr = &mut open[ti];
            tr.samples.push(s);
            tr.centers.push(b.center);
            tr.spans.push(b.span);
            tr.freq_weighted += b.peak_local * freq;
            tr.freq_weight += b.peak_local;
            tr.peak_energy = tr.peak_energy.max(peak_energy);
        }

        // close tracks that have been missing for longer than the gap
        let mut i = 0;
        while i < open.len() {
            if s - open[i].samples.last().unwrap() > thresholds.max_gap {
                done.push(open.swap_remove(i));
            } else {
                i += 1;
            }
        }
    }
    done.append(&mut open);
    done.sort_by_key(|t| t.samples[0]);

    let mut tracks = Vec::new();
    for tr in done {
        let first = tr.samples[0];
        let last = *tr.samples.last().unwrap();
        if last - first + 1 < thresholds.sustain_samples.max(2) {
            continue;
        }
        let mean_frequency = tr.freq_weighted / tr.freq_weight;
        if !(mean_frequency > omega_cut) {
            continue;
        }
        let t_start = meta.t0 + first as f64 * dt;
        let t_end = meta.t0 + last as f64 * dt;
        tracks.push(BreatherTrack {
            id: tracks.len(),
            times: tr.samples.iter().map(|s| meta.t0 + *s as f64 * dt).collect(),
            site_center: tr.centers,
            span_sites: tr.spans,
            t_start,
            t_end,
            mean_frequency,
            oscillation_count: (t_end - t_start) * mean_frequency / (2.0 * PI),
            peak_energy: tr.peak_energy,
        });
    }
    Ok(tracks)
}

/// Block layout for scanning long records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub block_len: usize,
    /// Samples shared by consecutive blocks; half of it is discarded at
    /// each block edge.
    pub overlap: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            block_len: 1 << 16,
            overlap: 6554,
        }
    }
}

/// Summary of a finished scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub tracks: Vec<BreatherTrack>,
    pub sites: usize,
    /// Time span searched for tracks.
    pub searched_duration: f64,
    /// `rms(q^f) / rms(q)` over the searched samples.
    pub filtered_rms_ratio: f64,
    pub blocks: usize,
}

/// Streaming detector: filters a trajectory in overlapping blocks and
/// tracks breathers in the interior of each block.
///
/// Block interiors tile the record without gaps or overlap, so every
/// sample outside the outermost edges is searched exactly once. A track
/// that straddles a block boundary is reported as two tracks.
pub struct BreatherScanner<'a> {
    params: ChainParams,
    spec: FilterSpec,
    thresholds: DetectionThresholds,
    scan: ScanConfig,
    q: Vec<Vec<f64>>,
    energy: Vec<SiteEnergyField>,
    times: Vec<f64>,
    first_block: bool,
    tracks: Vec<BreatherTrack>,
    searched: f64,
    qf_sq: f64,
    q_sq: f64,
    blocks: usize,
    export: Option<Box<dyn FnMut(f64, &[f64]) -> Result<()> + 'a>>,
}

impl<'a> BreatherScanner<'a> {
    pub fn new(params: ChainParams, spec: FilterSpec, thresholds: DetectionThresholds, scan: ScanConfig) -> Result<Self> {
        if scan.block_len < MIN_FILTER_SAMPLES || 2 * scan.overlap >= scan.block_len {
            return Err(Error::param(format!(
                "block of {} samples with overlap {} is unusable",
                scan.block_len, scan.overlap
            )));
        }
        Ok(BreatherScanner {
            params,
            spec,
            thresholds,
            scan,
            q: vec![Vec::new(); params.n],
            energy: Vec::new(),
            times: Vec::new(),
            first_block: true,
            tracks: Vec::new(),
            searched: 0.0,
            qf_sq: 0.0,
            q_sq: 0.0,
            blocks: 0,
            export: None,
        })
    }

    /// Receives `(t, q^f(t))` for every filtered sample, in time order.
    pub fn with_export(mut self, export: impl FnMut(f64, &[f64]) -> Result<()> + 'a) -> Self {
        self.export = Some(Box::new(export));
        self
    }

    fn process(&mut self, last: bool) -> Result<()> {
        let len = self.times.len();
        // interior edges must be half the overlap for the blocks to tile;
        // the outer ends of the record may shrink for short records
        let half = self.scan.overlap / 2;
        let outer = half.min((0.05 * len as f64).ceil() as usize);
        let lead = if self.first_block { outer } else { half };
        let trail = if last { outer } else { half };
        let dt_sample = (self.times[len - 1] - self.times[0]) / (len - 1) as f64;
        let series = SiteSeries {
            values: std::mem::take(&mut self.q),
            t0: self.times[0],
            dt_sample,
        };
        let field = filtered_displacement(&series, self.spec)?;
        let range = lead..len - trail;
        for mut t in track_breathers_in(&field, &self.energy, &self.thresholds, range.clone())? {
            t.id = self.tracks.len();
            self.tracks.push(t);
        }
        for s in range.clone() {
            for site in 0..self.params.n {
                self.qf_sq += field.qf[site][s].powi(2);
                self.q_sq += series.values[site][s].powi(2);
            }
        }
        self.searched += (range.end - range.start) as f64 * dt_sample;
        if let Some(export) = self.export.as_mut() {
            let from = if self.first_block { 0 } else { lead };
            let to = if last { len } else { len - trail };
            let mut row = vec![0.0; self.params.n];
            for s in from..to {
                for (site, v) in row.iter_mut().enumerate() {
                    *v = field.qf[site][s];
                }
                export(self.times[s], &row)?;
            }
        }
        self.blocks += 1;
        self.first_block = false;
        // keep the overlap as the head of the next block
        let keep_from = len - 2 * half;
        self.q = series.values;
        for site in &mut self.q {
            site.drain(..keep_from);
        }
        self.energy.drain(..keep_from);
        self.times.drain(..keep_from);
        Ok(())
    }

    pub fn finish_scan(mut self) -> Result<ScanReport> {
        if self.times.len() > self.scan.overlap || self.blocks == 0 {
            if self.times.len() < MIN_FILTER_SAMPLES {
                if self.blocks == 0 {
                    return Err(Error::InsufficientData(format!(
                        "record of {} samples is shorter than the filter minimum",
                        self.times.len()
                    )));
                }
            } else {
                self.process(true)?;
            }
        }
        let ratio = if self.q_sq > 0.0 { (self.qf_sq / self.q_sq).sqrt() } else { 0.0 };
        Ok(ScanReport {
            tracks: self.tracks,
            sites: self.params.n,
            searched_duration: self.searched,
            filtered_rms_ratio: ratio,
            blocks: self.blocks,
        })
    }
}

impl SampleSink for BreatherScanner<'_> {
    fn accept(&mut self, state: &ChainState) -> Result<()> {
        if state.len() != self.params.n {
            return Err(Error::param("state length does not match the scanner"));
        }
        for (series, q) in self.q.iter_mut().zip(&state.q) {
            series.push(*q);
        }
        self.energy.push(site_energy_density(state, &self.params)?);
        self.times.push(state.t);
        if self.times.len() == self.scan.block_len {
            self.process(false)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreatherStatistics {
    pub count: usize,
    /// Tracks per site per unit time.
    pub count_per_site_time: f64,
    /// `(lower, upper, count)` over oscillation counts.
    pub lifetime_histogram: Vec<(f64, f64, usize)>,
    /// `span_histogram[s]` counts tracks whose largest span is `s` sites.
    pub span_histogram: Vec<usize>,
    pub mean_oscillation_frequency: f64,
}

const LIFETIME_EDGES: [f64; 7] = [0.0, 1.0, 3.0, 10.0, 30.0, 100.0, f64::INFINITY];

pub fn breather_statistics(tracks: &[BreatherTrack], sites: usize, duration: f64) -> BreatherStatistics {
    let mut lifetime_histogram: Vec<(f64, f64, usize)> =
        LIFETIME_EDGES.windows(2).map(|w| (w[0], w[1], 0)).collect();
    let mut span_histogram = vec![0; sites + 1];
    for t in tracks {
        if let Some(bin) = lifetime_histogram
            .iter_mut()
            .find(|(lo, hi, _)| t.oscillation_count >= *lo && t.oscillation_count < *hi)
        {
            bin.2 += 1;
        }
        span_histogram[t.max_span().min(sites)] += 1;
    }
    let mean_oscillation_frequency = if tracks.is_empty() {
        0.0
    } else {
        tracks.iter().map(|t| t.mean_frequency).sum::<f64>() / tracks.len() as f64
    };
    BreatherStatistics {
        count: tracks.len(),
        count_per_site_time: if duration > 0.0 && sites > 0 {
            tracks.len() as f64 / (sites as f64 * duration)
        } else {
            0.0
        },
        lifetime_histogram,
        span_histogram,
        mean_oscillation_frequency,
    }
}
