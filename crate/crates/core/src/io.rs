//! Binary record streams and CSV exports.
//!
//! A record file is a 36-byte header (`b"FPU1"`, `N: u64`, `β: f64`,
//! `dt: f64`, `stride: u64`) followed by fixed-size samples, all
//! little-endian. The payload of a sample depends on the record kind:
//!
//! * trajectory: `t, q[N], p[N]`
//! * modes: `t`, then `(re, im)` of every `Q_k`, then of every `P_k`
//! * filtered: `t, q^f[N]`
//!
//! The kind is not stored; readers are opened for a specific kind and
//! reject files whose size does not fit it.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::analysis::{ModeEvolution, PowerSpectrum, SpectrogramResult};
use crate::breather::BreatherTrack;
use crate::error::{Error, Result};
use crate::lattice::{site_energy_density, ChainParams, ChainState, SampleSink};
use crate::modes::{ModeState, ModeTransform};

pub const MAGIC: &[u8; 4] = b"FPU1";
pub const HEADER_LEN: usize = 36;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    Trajectory,
    Modes,
    Filtered,
}

impl RecordKind {
    /// Doubles per sample, including the time stamp.
    pub fn sample_doubles(self, n: usize) -> usize {
        match self {
            RecordKind::Trajectory => 1 + 2 * n,
            RecordKind::Modes => 1 + 4 * n,
            RecordKind::Filtered => 1 + n,
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            RecordKind::Trajectory => "trajectory.bin",
            RecordKind::Modes => "modes.bin",
            RecordKind::Filtered => "qf.bin",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordHeader {
    pub n: usize,
    pub beta: f64,
    pub dt: f64,
    pub stride: u64,
}

impl RecordHeader {
    /// Time between consecutive samples.
    pub fn dt_sample(&self) -> f64 {
        self.dt * self.stride as f64
    }

    fn encode(&self) -> [u8; HEADER_LEN] {
        let mut buf = [0u8; HEADER_LEN];
        buf[..4].copy_from_slice(MAGIC);
        buf[4..12].copy_from_slice(&(self.n as u64).to_le_bytes());
        buf[12..20].copy_from_slice(&self.beta.to_le_bytes());
        buf[20..28].copy_from_slice(&self.dt.to_le_bytes());
        buf[28..36].copy_from_slice(&self.stride.to_le_bytes());
        buf
    }

    fn decode(buf: &[u8; HEADER_LEN]) -> Result<Self> {
        if &buf[..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let u = |r: std::ops::Range<usize>| u64::from_le_bytes(buf[r].try_into().unwrap());
        let f = |r: std::ops::Range<usize>| f64::from_le_bytes(buf[r].try_into().unwrap());
        let header = RecordHeader {
            n: u(4..12) as usize,
            beta: f(12..20),
            dt: f(20..28),
            stride: u(28..36),
        };
        if header.n == 0 || header.stride == 0 || !(header.dt > 0.0) || !header.beta.is_finite() {
            return Err(Error::Format(format!("implausible header {header:?}")));
        }
        Ok(header)
    }
}

/// Writes one record kind. As a [`SampleSink`] it accepts chain states and
/// stores them as trajectory or mode samples.
pub struct RecordWriter<W: Write> {
    out: W,
    header: RecordHeader,
    kind: RecordKind,
    transform: Option<ModeTransform>,
    buf: Vec<u8>,
    samples: u64,
}

impl RecordWriter<BufWriter<File>> {
    pub fn create(path: &Path, header: RecordHeader, kind: RecordKind) -> Result<Self> {
        RecordWriter::new(BufWriter::new(File::create(path)?), header, kind)
    }
}

impl<W: Write> RecordWriter<W> {
    pub fn new(mut out: W, header: RecordHeader, kind: RecordKind) -> Result<Self> {
        out.write_all(&header.encode())?;
        Ok(RecordWriter {
            out,
            header,
            kind,
            transform: None,
            buf: Vec::with_capacity(8 * kind.sample_doubles(header.n)),
            samples: 0,
        })
    }

    pub fn header(&self) -> &RecordHeader {
        &self.header
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    fn expect(&self, kind: RecordKind, len: usize) -> Result<()> {
        if self.kind != kind {
            return Err(Error::param(format!("cannot write {kind:?} samples to a {:?} record", self.kind)));
        }
        if len != self.header.n {
            return Err(Error::param(format!("sample has {len} sites, record has {}", self.header.n)));
        }
        Ok(())
    }

    fn flush_sample(&mut self) -> Result<()> {
        self.out.write_all(&self.buf)?;
        self.buf.clear();
        self.samples += 1;
        Ok(())
    }

    fn put(&mut self, x: f64) {
        self.buf.extend_from_slice(&x.to_le_bytes());
    }

    fn put_complex(&mut self, values: &[Complex64]) {
        for z in values {
            self.put(z.re);
            self.put(z.im);
        }
    }

    pub fn write_state(&mut self, state: &ChainState) -> Result<()> {
        self.expect(RecordKind::Trajectory, state.len())?;
        self.put(state.t);
        for &x in state.q.iter().chain(&state.p) {
            self.put(x);
        }
        self.flush_sample()
    }

    pub fn write_modes(&mut self, modes: &ModeState) -> Result<()> {
        self.expect(RecordKind::Modes, modes.len())?;
        self.put(modes.t);
        self.put_complex(&modes.q);
        self.put_complex(&modes.p);
        self.flush_sample()
    }

    pub fn write_filtered(&mut self, t: f64, values: &[f64]) -> Result<()> {
        self.expect(RecordKind::Filtered, values.len())?;
        self.put(t);
        for &x in values {
            self.put(x);
        }
        self.flush_sample()
    }

    /// Flushes and returns the underlying writer.
    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> SampleSink for RecordWriter<W> {
    fn accept(&mut self, state: &ChainState) -> Result<()> {
        match self.kind {
            RecordKind::Trajectory => self.write_state(state),
            RecordKind::Modes => {
                let n = self.header.n;
                let modes = self.transform.get_or_insert_with(|| ModeTransform::new(n)).to_modes(state);
                self.write_modes(&modes)
            }
            RecordKind::Filtered => Err(Error::param("filtered records are not written from chain states")),
        }
    }

    fn finish(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Sequential reader of one record kind.
pub struct RecordReader<R: Read> {
    input: R,
    header: RecordHeader,
    kind: RecordKind,
    buf: Vec<u8>,
    samples: Option<u64>,
}

impl RecordReader<BufReader<File>> {
    /// Opens a file and checks that its size is a whole number of samples.
    pub fn open(path: &Path, kind: RecordKind) -> Result<Self> {
        let file = File::open(path)?;
        let len = file.metadata()?.len();
        let mut reader = RecordReader::new(BufReader::with_capacity(1 << 20, file), kind)?;
        let sample_bytes = reader.buf.len() as u64;
        let payload = len.saturating_sub(HEADER_LEN as u64);
        if len < HEADER_LEN as u64 || payload % sample_bytes != 0 {
            return Err(Error::Format(format!(
                "{}: size {len} is not a header plus whole {kind:?} samples of N = {}",
                path.display(),
                reader.header.n
            )));
        }
        reader.samples = Some(payload / sample_bytes);
        Ok(reader)
    }
}

impl<R: Read> RecordReader<R> {
    pub fn new(mut input: R, kind: RecordKind) -> Result<Self> {
        let mut head = [0u8; HEADER_LEN];
        input.read_exact(&mut head).map_err(|e| match e.kind() {
            ErrorKind::UnexpectedEof => Error::Format("truncated header".into()),
            _ => Error::Io(e),
        })?;
        let header = RecordHeader::decode(&head)?;
        Ok(RecordReader {
            input,
            header,
            kind,
            buf: vec![0u8; 8 * kind.sample_doubles(header.n)],
            samples: None,
        })
    }

    pub fn header(&self) -> &RecordHeader {
        &self.header
    }

    /// Sample count, when known from the file size.
    pub fn samples(&self) -> Option<u64> {
        self.samples
    }

    fn expect(&self, kind: RecordKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::param(format!("reader is open for {:?} samples", self.kind)));
        }
        Ok(())
    }

    /// Reads the next raw sample; `None` at a clean end of stream.
    fn next_raw(&mut self) -> Result<Option<()>> {
        let mut filled = 0;
        while filled < self.buf.len() {
            match self.input.read(&mut self.buf[filled..]) {
                Ok(0) if filled == 0 => return Ok(None),
                Ok(0) => return Err(Error::Format("truncated sample".into())),
                Ok(k) => filled += k,
                Err(e) if e.kind() == ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
        Ok(Some(()))
    }

    fn value(&self, i: usize) -> f64 {
        f64::from_le_bytes(self.buf[8 * i..8 * i + 8].try_into().unwrap())
    }

    fn complex(&self, i: usize) -> Complex64 {
        Complex64::new(self.value(i), self.value(i + 1))
    }

    pub fn next_state(&mut self) -> Result<Option<ChainState>> {
        self.expect(RecordKind::Trajectory)?;
        if self.next_raw()?.is_none() {
            return Ok(None);
        }
        let n = self.header.n;
        let q = (0..n).map(|i| self.value(1 + i)).collect();
        let p = (0..n).map(|i| self.value(1 + n + i)).collect();
        ChainState::new(q, p, self.value(0)).map(Some)
    }

    pub fn next_modes(&mut self) -> Result<Option<ModeState>> {
        self.expect(RecordKind::Modes)?;
        if self.next_raw()?.is_none() {
            return Ok(None);
        }
        let n = self.header.n;
        Ok(Some(ModeState {
            q: (0..n).map(|k| self.complex(1 + 2 * k)).collect(),
            p: (0..n).map(|k| self.complex(1 + 2 * n + 2 * k)).collect(),
            t: self.value(0),
        }))
    }

    pub fn next_filtered(&mut self) -> Result<Option<(f64, Vec<f64>)>> {
        self.expect(RecordKind::Filtered)?;
        if self.next_raw()?.is_none() {
            return Ok(None);
        }
        let n = self.header.n;
        Ok(Some((self.value(0), (0..n).map(|i| self.value(1 + i)).collect())))
    }

    /// Streams every remaining trajectory sample into `sink`.
    pub fn drain_states<S: SampleSink>(&mut self, mut sink: S) -> Result<u64> {
        let mut count = 0;
        while let Some(state) = self.next_state()? {
            sink.accept(&state)?;
            count += 1;
        }
        sink.finish()?;
        Ok(count)
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_error)
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

/// Writes a header row and rows of numbers.
fn write_table<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip decimal representation, independent of locale.
fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_snapshot_csv(path: &Path, state: &ChainState, params: &ChainParams) -> Result<()> {
    let e = site_energy_density(state, params)?;
    write_table(
        path,
        &["site", "q", "p", "e"],
        (0..state.len()).map(|i| vec![i.to_string(), num(state.q[i]), num(state.p[i]), num(e.e[i])]),
    )
}

pub fn write_modes_csv(path: &Path, modes: &ModeState) -> Result<()> {
    let n = modes.len();
    write_table(
        path,
        &["k", "omega_k", "re_Q", "im_Q", "re_P", "im_P"],
        (0..n).map(|k| {
            let w = crate::modes::bare_omega(n, k);
            vec![
                k.to_string(),
                num(w),
                num(modes.q[k].re),
                num(modes.q[k].im),
                num(modes.p[k].re),
                num(modes.p[k].im),
            ]
        }),
    )
}

pub fn write_spectrum_csv(path: &Path, spectrum: &PowerSpectrum) -> Result<()> {
    write_table(
        path,
        &["k", "omega", "mean_sq_a", "T_fit", "slope"],
        spectrum.mean_sq_a.iter().zip(&spectrum.omega).enumerate().map(|(i, (a, w))| {
            vec![
                (i + 1).to_string(),
                num(*w),
                num(*a),
                num(spectrum.temperature_fit),
                num(spectrum.slope_fit),
            ]
        }),
    )
}

/// Nonnegative-frequency half of the spectrogram surface.
pub fn write_spectrogram_csv(path: &Path, spec: &SpectrogramResult) -> Result<()> {
    let zero = spec.zero_bin();
    write_table(
        path,
        &["k", "omega_bin", "power"],
        spec.power.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .skip(zero)
                .map(move |(j, p)| vec![(i + 1).to_string(), num(spec.omega_bins[j]), num(*p)])
        }),
    )
}

/// Per-mode ridge: measured peak frequency and resonance width.
pub fn write_peaks_csv(path: &Path, spec: &SpectrogramResult) -> Result<()> {
    write_table(
        path,
        &["k", "peak_omega", "width"],
        spec.peak_omega
            .iter()
            .zip(&spec.width)
            .enumerate()
            .map(|(i, (w, d))| vec![(i + 1).to_string(), num(*w), num(*d)]),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaRow {
    pub beta: f64,
    pub eta_measured: f64,
    pub eta_analytic: f64,
}

pub fn write_eta_csv(path: &Path, rows: &[EtaRow]) -> Result<()> {
    write_table(
        path,
        &["beta", "eta_measured", "eta_analytic"],
        rows.iter().map(|r| vec![num(r.beta), num(r.eta_measured), num(r.eta_analytic)]),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioRow {
    pub beta: f64,
    pub h4_h2: f64,
    pub h4t_h2t: f64,
}

pub fn write_ratios_csv(path: &Path, rows: &[RatioRow]) -> Result<()> {
    write_table(
        path,
        &["beta", "h4_h2", "h4t_h2t"],
        rows.iter().map(|r| vec![num(r.beta), num(r.h4_h2), num(r.h4t_h2t)]),
    )
}

pub fn write_breathers_csv(path: &Path, tracks: &[BreatherTrack], n: usize) -> Result<()> {
    write_table(
        path,
        &["track_id", "t_start", "t_end", "mean_site", "max_span", "oscillation_count", "peak_energy"],
        tracks.iter().map(|t| {
            vec![
                t.id.to_string(),
                num(t.t_start),
                num(t.t_end),
                num(t.mean_site(n)),
                t.max_span().to_string(),
                num(t.oscillation_count),
                num(t.peak_energy),
            ]
        }),
    )
}

pub fn write_mode_evolution_csv(path: &Path, evo: &ModeEvolution) -> Result<()> {
    write_table(
        path,
        &["t", "amplitude", "phase"],
        evo.t
            .iter()
            .zip(&evo.amplitude)
            .zip(&evo.phase)
            .map(|((t, a), p)| vec![num(*t), num(*a), num(*p)]),
    )
}

/// Reads a CSV written by this module back as a header and numeric rows.
pub fn read_numeric_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    let header = r.headers().map_err(csv_error)?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_error)?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| Error::Format(format!("not a number: `{s}`"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::random_initial_state;
    use crate::modes::to_modes;

    fn header() -> RecordHeader {
        RecordHeader {
            n: 8,
            beta: 1.5,
            dt: 0.01,
            stride: 10,
        }
    }

    #[test]
    fn trajectory_round_trip_is_bit_exact() {
        let params = ChainParams::new(8, 1.5, 10.0).unwrap();
        let states: Vec<ChainState> = (0..5)
            .map(|s| {
                let mut st = random_initial_state(&params, s);
                st.t = s as f64 * 0.1;
                st
            })
            .collect();
        let mut w = RecordWriter::new(Vec::new(), header(), RecordKind::Trajectory).unwrap();
        for s in &states {
            w.accept(s).unwrap();
        }
        let bytes = w.finish().unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 5 * 8 * 17);
        assert_eq!(&bytes[..4], b"FPU1");
        let mut r = RecordReader::new(bytes.as_slice(), RecordKind::Trajectory).unwrap();
        assert_eq!(*r.header(), header());
        let mut back = Vec::new();
        while let Some(s) = r.next_state().unwrap() {
            back.push(s);
        }
        assert_eq!(back, states);
    }

    #[test]
    fn mode_records_store_transformed_states() {
        let params = ChainParams::new(8, 1.5, 10.0).unwrap();
        let state = random_initial_state(&params, 3);
        let mut w = RecordWriter::new(Vec::new(), header(), RecordKind::Modes).unwrap();
        w.accept(&state).unwrap();
        let bytes = w.finish().unwrap();
        let mut r = RecordReader::new(bytes.as_slice(), RecordKind::Modes).unwrap();
        assert_eq!(r.next_modes().unwrap().unwrap(), to_modes(&state));
        assert!(r.next_modes().unwrap().is_none());
    }

    #[test]
    fn corrupt_streams_are_rejected() {
        assert!(matches!(
            RecordReader::new(&b"FPU2"[..], RecordKind::Trajectory),
            Err(Error::Format(_))
        ));
        let mut w = RecordWriter::new(Vec::new(), header(), RecordKind::Filtered).unwrap();
        w.write_filtered(0.0, &[1.0; 8]).unwrap();
        assert!(w.write_filtered(0.0, &[1.0; 7]).is_err());
        let mut bytes = w.finish().unwrap();
        bytes.pop();
        let mut r = RecordReader::new(bytes.as_slice(), RecordKind::Filtered).unwrap();
        assert!(matches!(r.next_filtered(), Err(Error::Format(_))));
        let mut r = RecordReader::new(bytes.as_slice(), RecordKind::Modes).unwrap();
        assert!(r.next_state().is_err());
    }

    #[test]
    fn file_size_must_match_the_kind() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bin");
        let mut w = RecordWriter::create(&path, header(), RecordKind::Filtered).unwrap();
        w.write_filtered(0.0, &[0.5; 8]).unwrap();
        w.finish().unwrap();
        assert_eq!(RecordReader::open(&path, RecordKind::Filtered).unwrap().samples(), Some(1));
        assert!(RecordReader::open(&path, RecordKind::Trajectory).is_err());
    }

    #[test]
    fn snapshot_csv_has_expected_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.csv");
        let params = ChainParams::new(4, 4.0, 1.0).unwrap();
        let state = ChainState::new(vec![1.0, 0.0, 0.0, 0.0], vec![0.0; 4], 0.0).unwrap();
        write_snapshot_csv(&path, &state, &params).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("site,q,p,e\n0,1.0,0.0,"));
        assert!(!text.contains('\r'));
        let (head, rows) = read_numeric_csv(&path).unwrap();
        assert_eq!(head, ["site", "q", "p", "e"]);
        let total: f64 = rows.iter().map(|r| r[3]).sum();
        assert!((total - 3.0).abs() < 1e-12);
    }
}
