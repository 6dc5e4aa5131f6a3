//! Portable coefficient table.
//!
//! ```text
//! # kernel-model v1
//! # dim=2
//! # radius_cap=0.95
//! # moment_tol=1e-12
//! k,log_c,tol
//! 0,0.123,1e-12
//! ```
//!
//! Floats are written in shortest round-trip form, so export followed by
//! import reproduces every coefficient bit for bit.

use std::fmt::Write;

use crate::error::{LabError, Result};
use crate::linalg::MAX_DIM;

use super::KernelModel;

pub const TABLE_MAGIC: &str = "# kernel-model v1";
const COLUMNS: &str = "k,log_c,tol";

pub fn export_table(m: &KernelModel) -> String {
    let mut out = String::new();
    writeln!(out, "{TABLE_MAGIC}").unwrap();
    writeln!(out, "# dim={}", m.dim).unwrap();
    writeln!(out, "# radius_cap={:?}", m.radius_cap).unwrap();
    writeln!(out, "# moment_tol={:?}", m.moment_tol).unwrap();
    writeln!(out, "{COLUMNS}").unwrap();
    for (k, c) in m.log_coeffs.iter().enumerate() {
        writeln!(out, "{k},{c:?},{:?}", m.moment_tol).unwrap();
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> LabError {
    LabError::Parse { line, msg: msg.into() }
}

fn header_value<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<(usize, &'a str)> {
    let (no, line) = lines.next().ok_or_else(|| parse_err(0, format!("missing header `{key}`")))?;
    let prefix = format!("# {key}=");
    line.strip_prefix(prefix.as_str())
        .map(|v| (no, v.trim()))
        .ok_or_else(|| parse_err(no, format!("expected `{prefix}...`")))
}

fn parse_f64(no: usize, field: &str, what: &str) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| parse_err(no, format!("invalid {what} `{field}`")))?;
    if !v.is_finite() {
        return Err(parse_err(no, format!("non-finite {what}")));
    }
    Ok(v)
}

pub fn import_table(text: &str) -> Result<KernelModel> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, l)) if l.trim() == TABLE_MAGIC => {}
        Some((no, _)) => return Err(parse_err(no, format!("expected `{TABLE_MAGIC}`"))),
        None => return Err(parse_err(0, "empty input")),
    }
    let (no, v) = header_value(&mut lines, "dim")?;
    let dim: usize = v.parse().map_err(|_| parse_err(no, format!("invalid dim `{v}`")))?;
    if dim == 0 || dim > MAX_DIM {
        return Err(parse_err(no, format!("dim {dim} outside 1..={MAX_DIM}")));
    }
    let (no, v) = header_value(&mut lines, "radius_cap")?;
    let radius_cap = parse_f64(no, v, "radius_cap")?;
    if !(radius_cap > 0.0 && radius_cap < 1.0) {
        return Err(parse_err(no, "radius_cap must lie in (0, 1)"));
    }
    let (no, v) = header_value(&mut lines, "moment_tol")?;
    let moment_tol = parse_f64(no, v, "moment_tol")?;
    if !(moment_tol > 0.0) {
        return Err(parse_err(no, "moment_tol must be positive"));
    }
    match lines.next() {
        Some((_, l)) if l.trim() == COLUMNS => {}
        Some((no, _)) => return Err(parse_err(no, format!("expected column header `{COLUMNS}`"))),
        None => return Err(parse_err(0, "missing column header")),
    }
    let mut log_coeffs = Vec::new();
    for (no, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(parse_err(no, format!("expected 3 fields, got {}", fields.len())));
        }
        let k: usize = fields[0].trim().parse().map_err(|_| parse_err(no, format!("invalid k `{}`", fields[0])))?;
        if k != log_coeffs.len() {
            return Err(parse_err(no, format!("expected k = {}, got {k}", log_coeffs.len())));
        }
        log_coeffs.push(parse_f64(no, fields[1], "log_c")?);
        let tol = parse_f64(no, fields[2], "tol")?;
        if tol.to_bits() != moment_tol.to_bits() {
            return Err(parse_err(no, "tol differs from header moment_tol"));
        }
    }
    if log_coeffs.len() < 17 {
        return Err(parse_err(0, format!("{} coefficients, need at least 17", log_coeffs.len())));
    }
    Ok(KernelModel { dim, log_coeffs, moment_tol, radius_cap })
}
