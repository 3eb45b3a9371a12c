//! Plot-ready CSV tables: RFC 4180, `.` decimals, 17 significant digits.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::Context;
use mfbm::io::fmt_f64;

pub fn num(x: f64) -> String {
    fmt_f64(x)
}

/// Empty cell for quantities that are undefined at a row.
pub fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn write(path: &Path, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}
