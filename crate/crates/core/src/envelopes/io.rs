use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex;

use super::envelope::SampledEnvelope;
use crate::error::{Error, Result};
use crate::real::Real;

/// `t,re,im` rows with a header line.
pub fn to_csv_string<T: Real>(env: &SampledEnvelope<T>) -> String {
    let mut out = String::with_capacity(env.len() * 48 + 16);
    out.push_str("t,re,im\n");
    for (i, s) in env.samples().iter().enumerate() {
        out.push_str(&format!("{:.17e},{:.17e},{:.17e}\n", env.time(i).as_f64(), s.re.as_f64(), s.im.as_f64()));
    }
    out
}

pub fn write_csv<T: Real>(env: &SampledEnvelope<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(to_csv_string(env).as_bytes())?;
    Ok(())
}

/// Reads a `t,re,im` CSV; the time column must be uniform.
pub fn read_csv<T: Real>(path: impl AsRef<Path>) -> Result<SampledEnvelope<T>> {
    parse_csv(&fs::read_to_string(path)?)
}

pub fn parse_csv<T: Real>(text: &str) -> Result<SampledEnvelope<T>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty file".into()))?;
    let cols: Vec<String> = header.split(',').map(|c| c.trim().to_ascii_lowercase()).collect();
    if cols != ["t", "re", "im"] {
        return Err(Error::Parse(format!("expected header `t,re,im`, found `{header}`")));
    }
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!("row {}: expected 3 columns", n + 2)));
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|e| Error::Parse(format!("row {}: {e}", n + 2)))
        };
        times.push(parse(fields[0])?);
        samples.push(Complex::new(T::lit(parse(fields[1])?), T::lit(parse(fields[2])?)));
    }
    if times.len() < 2 {
        return Err(Error::Parse("need at least two rows to infer the time step".into()));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt.abs() {
            return Err(Error::Parse("time column is not uniformly spaced".into()));
        }
    }
    SampledEnvelope::new(T::lit(times[0]), T::lit(dt), samples)
}
