//! Run configuration, seed derivation and run manifests.
//!
//! Configuration files are flat `key = value` lines; `#` starts a comment.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::{ChainParams, Scheme};

/// Everything needed to reproduce a simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    pub beta: f64,
    pub target_energy: f64,
    pub dt: f64,
    pub t_transient: f64,
    pub t_record: f64,
    /// Integration steps between stored samples.
    pub sample_stride: u64,
    pub seed: u64,
    pub omega_cut: Option<f64>,
    pub output_dir: PathBuf,
    pub integrator: Scheme,
    /// Also store the mode-space record next to the trajectory.
    pub write_modes: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 128,
            beta: 1.0,
            target_energy: 200.0,
            dt: 0.01,
            t_transient: 1e5,
            t_record: 1e5,
            sample_stride: 10,
            seed: 1,
            omega_cut: None,
            output_dir: PathBuf::from("out"),
            integrator: Scheme::default(),
            write_modes: true,
        }
    }
}

pub const CONFIG_KEYS: [&str; 12] = [
    "N",
    "beta",
    "target_energy",
    "dt",
    "t_transient",
    "t_record",
    "sample_stride",
    "seed",
    "omega_cut",
    "output_dir",
    "integrator",
    "write_modes",
];

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| config_err(format!("`{key}`: cannot parse `{value}`")))
}

impl RunConfig {
    pub fn params(&self) -> Result<ChainParams> {
        ChainParams::new(self.n, self.beta, self.target_energy)
    }

    pub fn dt_sample(&self) -> f64 {
        self.dt * self.sample_stride as f64
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "N" | "n" => self.n = parse_value(key, value)?,
            "beta" => self.beta = parse_value(key, value)?,
            "target_energy" => self.target_energy = parse_value(key, value)?,
            "dt" => self.dt = parse_value(key, value)?,
            "t_transient" => self.t_transient = parse_value(key, value)?,
            "t_record" => self.t_record = parse_value(key, value)?,
            "sample_stride" => self.sample_stride = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "omega_cut" => {
                self.omega_cut = match value {
                    "" | "none" => None,
                    v => Some(parse_value(key, v)?),
                }
            }
            "output_dir" => self.output_dir = PathBuf::from(value),
            "integrator" => self.integrator = Scheme::parse(value).map_err(|e| config_err(e.to_string()))?,
            "write_modes" => self.write_modes = parse_value(key, value)?,
            other => return Err(config_err(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a config text on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            if seen.insert(key.to_owned(), lineno).is_some() {
                return Err(config_err(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        config.apply_text(text)?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Text form that parses back to an identical config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "N = {}", self.n);
        let _ = writeln!(s, "beta = {:?}", self.beta);
        let _ = writeln!(s, "target_energy = {:?}", self.target_energy);
        let _ = writeln!(s, "dt = {:?}", self.dt);
        let _ = writeln!(s, "t_transient = {:?}", self.t_transient);
        let _ = writeln!(s, "t_record = {:?}", self.t_record);
        let _ = writeln!(s, "sample_stride = {}", self.sample_stride);
        let _ = writeln!(s, "seed = {}", self.seed);
        match self.omega_cut {
            Some(w) => writeln!(s, "omega_cut = {w:?}"),
            None => writeln!(s, "omega_cut = none"),
        }
        .ok();
        let _ = writeln!(s, "output_dir = {}", self.output_dir.display());
        let _ = writeln!(s, "integrator = {}", self.integrator.name());
        let _ = writeln!(s, "write_modes = {}", self.write_modes);
        s
    }

    /// Checks ranges and that the record resolves the slowest mode.
    pub fn validate(&self) -> Result<()> {
        self.params().map_err(|e| config_err(e.to_string()))?;
        for (name, v) in [("dt", self.dt), ("t_transient", self.t_transient), ("t_record", self.t_record)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(config_err(format!("`{name}` must be positive, got {v}")));
            }
        }
        if self.sample_stride == 0 {
            return Err(config_err("`sample_stride` must be positive"));
        }
        // ω̃_1 ≥ ω_1 since η ≥ 1, so the bare period is the longest one
        let slowest = 10.0 * 2.0 * PI / (2.0 * (PI / self.n as f64).sin());
        if self.t_record < slowest {
            return Err(config_err(format!(
                "`t_record` = {} is shorter than ten periods of the slowest mode ({slowest:.1})",
                self.t_record
            )));
        }
        if let Some(w) = self.omega_cut {
            if !(w > 0.0) || w >= PI / self.dt_sample() {
                return Err(config_err(format!("`omega_cut` = {w} must lie in (0, π/Δt_sample)")));
            }
        }
        Ok(())
    }
}

/// Seed of the stream for one β: the first output of SplitMix64 started
/// from `master XOR bits(β)`.
pub fn derive_seed(master: u64, beta: f64) -> u64 {
    SplitMix64::seed_from_u64(master ^ beta.to_bits()).next_u64()
}

pub const SEED_RULE: &str = "seed(beta) = first output of SplitMix64 seeded with master ^ f64_bits(beta)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileChecksum {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: BTreeMap<String, String>,
    pub version: String,
    pub seed_rule: String,
    pub started_unix: f64,
    pub wall_seconds: f64,
    pub energy_drift: Option<f64>,
    pub files: Vec<FileChecksum>,
    #[serde(default)]
    pub notes: BTreeMap<String, String>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn sha256_file(path: &Path) -> Result<(u64, String)> {
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let k = file.read(&mut buf)?;
        if k == 0 {
            break;
        }
        hasher.update(&buf[..k]);
        total += k as u64;
    }
    Ok((total, hex::encode(hasher.finalize())))
}

impl RunManifest {
    pub fn new(config: &RunConfig, started_unix: f64) -> Self {
        let config = config
            .to_text()
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim().to_owned(), v.trim().to_owned()))
            .collect();
        RunManifest {
            config,
            version: env!("CARGO_PKG_VERSION").to_owned(),
            seed_rule: SEED_RULE.to_owned(),
            started_unix,
            wall_seconds: 0.0,
            energy_drift: None,
            files: Vec::new(),
            notes: BTreeMap::new(),
        }
    }

    /// Records the checksum of a file in `dir`.
    pub fn add_file(&mut self, dir: &Path, name: &str) -> Result<()> {
        let (bytes, sha256) = sha256_file(&dir.join(name))?;
        self.files.retain(|f| f.name != name);
        self.files.push(FileChecksum {
            name: name.to_owned(),
            bytes,
            sha256,
        });
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(dir.join(MANIFEST_NAME), text + "\n")?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join(MANIFEST_NAME))?;
        serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let mut config = RunConfig::default();
        for (k, v) in &self.config {
            config.set(k, v)?;
        }
        Ok(config)
    }
}

/// Re-reads the manifest in `dir` and recomputes every listed checksum.
pub fn verify_manifest(dir: &Path) -> Result<RunManifest> {
    let manifest = RunManifest::read(dir)?;
    for f in &manifest.files {
        let (bytes, sha) = sha256_file(&dir.join(&f.name))?;
        if bytes != f.bytes || sha != f.sha256 {
            return Err(Error::Format(format!("checksum mismatch for {}", f.name)));
        }
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_is_lossless() {
        let mut c = RunConfig::default();
        c.beta = 0.1 + 0.2;
        c.omega_cut = Some(7.0);
        c.seed = u64::MAX;
        c.integrator = Scheme::Verlet;
        c.output_dir = PathBuf::from("runs/beta 0.3");
        let back = RunConfig::parse(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert_eq!(RunConfig::parse(&RunConfig::default().to_text()).unwrap(), RunConfig::default());
    }

    #[test]
    fn comments_blank_lines_and_errors() {
        let c = RunConfig::parse("# header\n\nbeta = 8 # trailing\nN=64\n").unwrap();
        assert_eq!((c.beta, c.n), (8.0, 64));
        for bad in ["beta 8", "beta = x", "colour = red", "beta = 1\nbeta = 2"] {
            assert!(matches!(RunConfig::parse(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn validation_enforces_ranges() {
        assert!(RunConfig::default().validate().is_ok());
        let short = RunConfig {
            t_record: 100.0,
            ..Default::default()
        };
        assert!(short.validate().is_err());
        let odd = RunConfig { n: 7, ..Default::default() };
        assert!(odd.validate().is_err());
        let cut = RunConfig {
            omega_cut: Some(40.0),
            ..Default::default()
        };
        assert!(cut.validate().is_err());
    }

    #[test]
    fn seeds_differ_per_beta_and_are_stable() {
        let a = derive_seed(42, 1.0);
        assert_eq!(a, derive_seed(42, 1.0));
        assert_ne!(a, derive_seed(42, 2.0));
        assert_ne!(a, derive_seed(43, 1.0));
    }

    #[test]
    fn manifest_detects_tampering() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.csv"), "x\n1\n").unwrap();
        let mut m = RunManifest::new(&RunConfig::default(), 0.0);
        m.add_file(dir.path(), "a.csv").unwrap();
        m.write(dir.path()).unwrap();
        let back = verify_manifest(dir.path()).unwrap();
        assert_eq!(back.run_config().unwrap(), RunConfig::default());
        std::fs::write(dir.path().join("a.csv"), "x\n2\n").unwrap();
        assert!(verify_manifest(dir.path()).is_err());
    }
}
