//! CSV and `MFBM1` binary containers for sample paths and wavelet fields.
//!
//! Binary layout, all little-endian: the magic `MFBM1`, a kind byte
//! (1 = path, 2 = field), two reserved zero bytes, then
//!
//! * path: `p: u32, n: u64, dt: f64, seed: u64`, then `n` rows of `p` values;
//! * field: `p: u32, n_scales: u32, n_shifts: u64, dt: f64, n: u64, seed: u64`,
//!   the scales, the shifts, then (re, im) pairs in component, scale, shift order.
//!
//! CSV floats use 17 significant digits so values round-trip exactly.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::MfbmParams;
use crate::synth::SamplePath;
use crate::wavelets::WaveletField;

pub const MAGIC: &[u8; 5] = b"MFBM1";
const KIND_PATH: u8 = 1;
const KIND_FIELD: u8 = 2;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Format(format!("not a number: '{s}'")))
}

pub fn write_path_csv<W: Write>(path: &SamplePath, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=path.p()).map(|j| format!("x_{j}")));
    w.write_record(&header)?;
    for i in 0..path.n() {
        let mut row = vec![fmt_f64(path.time(i))];
        row.extend(path.values.iter().map(|c| fmt_f64(c[i])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Times and component columns from a path CSV.
pub fn read_path_csv<R: Read>(input: R) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_reader(input);
    let p = r.headers()?.len().checked_sub(1).filter(|&p| p > 0).ok_or_else(|| Error::Format("path CSV needs t and at least one component".into()))?;
    let mut t = Vec::new();
    let mut values = vec![Vec::new(); p];
    for rec in r.records() {
        let rec = rec?;
        t.push(parse_f64(&rec[0])?);
        for j in 0..p {
            values[j].push(parse_f64(&rec[j + 1])?);
        }
    }
    Ok((t, values))
}

pub fn write_field_csv<W: Write>(field: &WaveletField, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["component", "scale", "shift", "re", "im"])?;
    for (j, comp) in field.coefficients.iter().enumerate() {
        for (s, row) in comp.iter().enumerate() {
            for (b, d) in row.iter().enumerate() {
                w.write_record([(j + 1).to_string(), fmt_f64(field.scales[s]), fmt_f64(field.shifts[b]), fmt_f64(d.re), fmt_f64(d.im)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

struct Cursor<R: Read> {
    inner: R,
}

impl<R: Read> Cursor<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Format("truncated MFBM1 container".into()),
            _ => Error::Io(e),
        })?;
        Ok(buf)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    fn header(&mut self, kind: u8) -> Result<()> {
        let head: [u8; 8] = self.bytes()?;
        if &head[..5] != MAGIC {
            return Err(Error::Format("missing MFBM1 magic".into()));
        }
        if head[5] != kind {
            return Err(Error::Format(format!("container kind {} where {kind} was expected", head[5])));
        }
        Ok(())
    }
}

fn write_header<W: Write>(out: &mut W, kind: u8) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&[kind, 0, 0])?;
    Ok(())
}

pub fn write_path_bin<W: Write>(path: &SamplePath, mut out: W) -> Result<()> {
    write_header(&mut out, KIND_PATH)?;
    out.write_all(&(path.p() as u32).to_le_bytes())?;
    out.write_all(&(path.n() as u64).to_le_bytes())?;
    out.write_all(&path.dt.to_le_bytes())?;
    out.write_all(&path.seed.to_le_bytes())?;
    for i in 0..path.n() {
        for c in &path.values {
            out.write_all(&c[i].to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a path container; the parameters are not stored and must be supplied.
pub fn read_path_bin<R: Read>(input: R, params: &MfbmParams) -> Result<SamplePath> {
    let mut c = Cursor { inner: input };
    c.header(KIND_PATH)?;
    let p = c.u32()? as usize;
    let n = c.u64()? as usize;
    let dt = c.f64()?;
    let seed = c.u64()?;
    if p != params.p() {
        return Err(Error::Format(format!("container has p = {p}, parameters have p = {}", params.p())));
    }
    let mut values = vec![Vec::with_capacity(n); p];
    for _ in 0..n {
        for col in values.iter_mut() {
            col.push(c.f64()?);
        }
    }
    Ok(SamplePath { params: params.clone(), dt, seed, values })
}

pub fn write_field_bin<W: Write>(field: &WaveletField, mut out: W) -> Result<()> {
    write_header(&mut out, KIND_FIELD)?;
    out.write_all(&(field.p() as u32).to_le_bytes())?;
    out.write_all(&(field.scales.len() as u32).to_le_bytes())?;
    out.write_all(&(field.shifts.len() as u64).to_le_bytes())?;
    out.write_all(&field.dt.to_le_bytes())?;
    out.write_all(&(field.n as u64).to_le_bytes())?;
    out.write_all(&field.seed.to_le_bytes())?;
    for x in field.scales.iter().chain(&field.shifts) {
        out.write_all(&x.to_le_bytes())?;
    }
    for d in field.coefficients.iter().flatten().flatten() {
        out.write_all(&d.re.to_le_bytes())?;
        out.write_all(&d.im.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_field_bin<R: Read>(input: R) -> Result<WaveletField> {
    let mut c = Cursor { inner: input };
    c.header(KIND_FIELD)?;
    let p = c.u32()? as usize;
    let ns = c.u32()? as usize;
    let nb = c.u64()? as usize;
    let dt = c.f64()?;
    let n = c.u64()? as usize;
    let seed = c.u64()?;
    let scales = (0..ns).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
    let shifts = (0..nb).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
    let mut coefficients = Vec::with_capacity(p);
    for _ in 0..p {
        let mut comp = Vec::with_capacity(ns);
        for _ in 0..ns {
            comp.push((0..nb).map(|_| Ok(Complex64::new(c.f64()?, c.f64()?))).collect::<Result<Vec<_>>>()?);
        }
        coefficients.push(comp);
    }
    Ok(WaveletField { coefficients, scales, shifts, dt, n, seed })
}
