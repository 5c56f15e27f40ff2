//! Streaming access to the record files of a run directory.

use std::path::Path;

use fpu_core::io::{RecordHeader, RecordKind, RecordReader};
use fpu_core::lattice::ChainState;
use fpu_core::modes::{ModeState, ModeTransform};
use fpu_core::{Error, Result};

/// Opens `preferred` if present, else the other record kind.
fn open(dir: &Path, preferred: RecordKind) -> Result<(RecordKind, RecordHeader)> {
    let other = match preferred {
        RecordKind::Modes => RecordKind::Trajectory,
        _ => RecordKind::Modes,
    };
    for kind in [preferred, other] {
        let path = dir.join(kind.file_name());
        if path.exists() {
            let reader = RecordReader::open(&path, kind)?;
            return Ok((kind, *reader.header()));
        }
    }
    Err(Error::Io(std::io::Error::new(
        std::io::ErrorKind::NotFound,
        format!("no trajectory.bin or modes.bin in {}", dir.display()),
    )))
}

pub fn header(dir: &Path) -> Result<RecordHeader> {
    open(dir, RecordKind::Modes).map(|(_, h)| h)
}

/// Visits every sample as both a chain state and its modes, converting
/// from whichever record is stored. Returns the header and sample count.
pub fn for_each<F>(dir: &Path, preferred: RecordKind, mut f: F) -> Result<(RecordHeader, u64)>
where
    F: FnMut(&ChainState, &ModeState) -> Result<()>,
{
    let (kind, header) = open(dir, preferred)?;
    let mut reader = RecordReader::open(&dir.join(kind.file_name()), kind)?;
    let mut transform = ModeTransform::new(header.n);
    let mut count = 0u64;
    match kind {
        RecordKind::Modes => {
            while let Some(modes) = reader.next_modes()? {
                let state = transform.from_modes(&modes)?;
                f(&state, &modes)?;
                count += 1;
            }
        }
        _ => {
            while let Some(state) = reader.next_state()? {
                let modes = transform.to_modes(&state);
                f(&state, &modes)?;
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::InsufficientData(format!("{} holds no samples", kind.file_name())));
    }
    Ok((header, count))
}
