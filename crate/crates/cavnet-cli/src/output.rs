//! Deterministic CSV output: fixed formatting so identical configurations
//! produce byte-identical files.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::CliError;

/// Header of trajectory CSVs; V columns hold the reduced cavity covariance
/// in row-major order.
pub const TRAJECTORY_HEADER: &str = "t,EN,P,delta_tilde,detV,\
V11,V12,V13,V14,V21,V22,V23,V24,V31,V32,V33,V34,V41,V42,V43,V44";

/// Header of the single-row steady-state CSV.
pub const STEADY_HEADER: &str = "EN,P,delta_tilde,detV,\
V11,V12,V13,V14,V21,V22,V23,V24,V31,V32,V33,V34,V41,V42,V43,V44";

/// Header of sweep CSVs; EN and P are empty for non-stable points.
pub const SWEEP_HEADER: &str = "value,EN,P,status";

/// Formats one value with 12 significant digits in scientific notation.
pub fn fmt(x: f64) -> String {
    format!("{x:.11e}")
}

/// Opens the output sink: the given file, or stdout.
pub fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| {
                CliError::Usage(format!("cannot create {}: {e}", p.display()))
            })?;
            Box::new(BufWriter::new(file))
        }
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

/// Writes one line with a trailing '\n'.
pub fn write_line(w: &mut dyn Write, line: &str) -> Result<(), CliError> {
    w.write_all(line.as_bytes())
        .and_then(|_| w.write_all(b"\n"))
        .map_err(|e| CliError::Numeric(format!("write failed: {e}")))
}
