//! Record files, manifests and configuration through the filesystem.

use fpu_core::analysis::{average_power_spectrum, ModeMoments};
use fpu_core::config::{verify_manifest, RunManifest};
use fpu_core::io::{RecordHeader, RecordKind, RecordReader, RecordWriter};
use fpu_core::lattice::{integrate_with, random_initial_state, ChainParams, ChainState, Scheme};
use fpu_core::modes::to_modes;
use fpu_core::{Dispersion, Error, PowerSpectrum, RunConfig};

fn simulate(params: &ChainParams) -> Vec<ChainState> {
    let mut states = Vec::new();
    let start = random_initial_state(params, 4);
    integrate_with(start, params, 0.02, Scheme::Suzuki4, 20.0, 5, &mut states).unwrap();
    states
}

#[test]
fn trajectory_and_mode_records_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let params = ChainParams::new(12, 3.0, 10.0).unwrap();
    let header = RecordHeader {
        n: 12,
        beta: 3.0,
        dt: 0.02,
        stride: 5,
    };
    let traj_path = dir.path().join(RecordKind::Trajectory.file_name());
    let modes_path = dir.path().join(RecordKind::Modes.file_name());
    let mut traj = RecordWriter::create(&traj_path, header, RecordKind::Trajectory).unwrap();
    let mut modes = RecordWriter::create(&modes_path, header, RecordKind::Modes).unwrap();
    let start = random_initial_state(&params, 4);
    integrate_with(start, &params, 0.02, Scheme::Suzuki4, 20.0, 5, (&mut traj, &mut modes)).unwrap();
    assert_eq!(traj.samples(), 200);
    drop((traj, modes));

    let expected = simulate(&params);
    let mut reader = RecordReader::open(&traj_path, RecordKind::Trajectory).unwrap();
    assert_eq!(*reader.header(), header);
    assert_eq!(reader.samples(), Some(200));
    let mut read = Vec::new();
    while let Some(s) = reader.next_state().unwrap() {
        read.push(s);
    }
    assert_eq!(read, expected);

    let mut reader = RecordReader::open(&modes_path, RecordKind::Modes).unwrap();
    let mut records = Vec::new();
    while let Some(m) = reader.next_modes().unwrap() {
        records.push(m);
    }
    let direct: Vec<_> = expected.iter().map(to_modes).collect();
    assert_eq!(records, direct);

    let from_file = average_power_spectrum(&records, Dispersion::BARE).unwrap();
    let mut moments = ModeMoments::new(12);
    for m in &direct {
        moments.push(m);
    }
    assert_eq!(from_file, PowerSpectrum::from_moments(&moments, Dispersion::BARE).unwrap());
}

#[test]
fn reader_rejects_wrong_kind_and_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.bin");
    let header = RecordHeader {
        n: 4,
        beta: 1.0,
        dt: 0.1,
        stride: 1,
    };
    let mut w = RecordWriter::create(&path, header, RecordKind::Trajectory).unwrap();
    w.write_state(&ChainState::at_rest(4)).unwrap();
    w.finish().unwrap();
    assert!(matches!(
        RecordReader::open(&path, RecordKind::Modes),
        Err(Error::Format(_))
    ));
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
    assert!(matches!(
        RecordReader::open(&path, RecordKind::Trajectory),
        Err(Error::Format(_))
    ));
    std::fs::write(&path, b"NOPE").unwrap();
    assert!(RecordReader::open(&path, RecordKind::Trajectory).is_err());
}

#[test]
fn config_survives_a_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = RunConfig::default();
    c.beta = 1.0 / 3.0;
    c.omega_cut = Some(7.25);
    c.seed = 123_456_789_012;
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, c.to_text()).unwrap();
    assert_eq!(RunConfig::load(&path).unwrap(), c);
}

#[test]
fn manifest_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.csv"), "x\n1\n").unwrap();
    let mut m = RunManifest::new(&RunConfig::default(), 0.0);
    m.add_file(dir.path(), "a.csv").unwrap();
    m.energy_drift = Some(1e-9);
    m.write(dir.path()).unwrap();
    let back = verify_manifest(dir.path()).unwrap();
    assert_eq!(back, m);
    assert_eq!(back.run_config().unwrap(), RunConfig::default());
    std::fs::write(dir.path().join("a.csv"), "x\n2\n").unwrap();
    assert!(verify_manifest(dir.path()).is_err());
}
