use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use evimpact_core::impact::ImuTrace;

use crate::error::{io_err, FormatError, Result};

/// Reads an `ax,ay,az` trace sampled at `rate_hz`.
pub fn read_imu_csv(path: impl AsRef<Path>, rate_hz: f64) -> Result<ImuTrace> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = rdr.headers().map_err(|e| FormatError::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().ne(["ax", "ay", "az"]) {
        return Err(FormatError::Parse {
            line: 1,
            message: "expected header ax,ay,az".into(),
        });
    }
    let mut samples = Vec::new();
    for rec in rdr.deserialize::<[f64; 3]>() {
        let s = rec.map_err(|e| FormatError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        samples.push(s);
    }
    Ok(ImuTrace::new(rate_hz, samples)?)
}

pub fn write_imu_csv(trace: &ImuTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "ax,ay,az")?;
        for [x, y, z] in &trace.samples {
            writeln!(out, "{x},{y},{z}")?;
        }
        out.flush()
    };
    write().map_err(io_err(path))
}
