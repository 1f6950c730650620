//! Text kernel format:
//!
//! ```text
//! KERN 1
//! H W cy cx
//! <H lines of W floats>
//! ```
//!
//! Filters are stored as a cropped spatial kernel plus a sidecar file
//! `<path>.grid` holding `GRID h w eps`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use super::CorrectionFilter;
use crate::error::{Error, Result};
use crate::spectral::Kernel;

/// Taps per axis kept when a filter is written to disk.
pub const FILTER_TAPS: usize = 65;

fn format_error(path: &Path, reason: impl Into<String>) -> Error {
    Error::KernelFormat {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

pub fn write_kernel(path: impl AsRef<Path>, k: &Kernel) -> Result<()> {
    let path = path.as_ref();
    let (h, w) = k.dim();
    let (cy, cx) = k.center();
    let mut out = format!("KERN 1\n{h} {w} {cy} {cx}\n");
    for row in k.taps().rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_kernel(path: impl AsRef<Path>) -> Result<Kernel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_kernel(&text, path)
}

fn parse_kernel(text: &str, path: &Path) -> Result<Kernel> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some("KERN 1") {
        return Err(format_error(path, "first line must be `KERN 1`"));
    }
    let dims: Vec<usize> = lines
        .next()
        .ok_or_else(|| format_error(path, "missing dimension line"))?
        .split_whitespace()
        .map(|t| t.parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| format_error(path, "dimension line must be `H W cy cx`"))?;
    let [h, w, cy, cx] = dims[..] else {
        return Err(format_error(path, "dimension line must be `H W cy cx`"));
    };
    let mut values = Vec::with_capacity(h * w);
    for r in 0..h {
        let line = lines
            .next()
            .ok_or_else(|| format_error(path, format!("expected {h} rows, found {r}")))?;
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| format_error(path, format!("row {r}: bad number")))?;
        if row.len() != w {
            return Err(format_error(path, format!("row {r}: expected {w} values, found {}", row.len())));
        }
        values.extend(row);
    }
    let taps = Array2::from_shape_vec((h, w), values).map_err(|e| format_error(path, e.to_string()))?;
    Kernel::new(taps, (cy, cx)).map_err(|e| format_error(path, e.to_string()))
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".grid");
    PathBuf::from(s)
}

/// Writes the spatial filter center-cropped to [`FILTER_TAPS`] taps and the
/// grid/epsilon sidecar.
pub fn write_filter(path: impl AsRef<Path>, h: &CorrectionFilter) -> Result<()> {
    let path = path.as_ref();
    let taps = h.spatial()?.crop_centered(FILTER_TAPS);
    write_kernel(path, &taps)?;
    let (gh, gw) = h.grid();
    let side = sidecar(path);
    fs::write(&side, format!("GRID {gh} {gw} {:e}\n", h.epsilon())).map_err(|e| Error::io(&side, e))
}

/// Reads a filter written by [`write_filter`] back onto its LR grid.
pub fn read_filter(path: impl AsRef<Path>) -> Result<CorrectionFilter> {
    let path = path.as_ref();
    let taps = read_kernel(path)?;
    let side = sidecar(path);
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let fields: Vec<&str> = text.split_whitespace().collect();
    let parsed = match fields[..] {
        ["GRID", h, w, eps] => h.parse().ok().zip(w.parse().ok()).zip(eps.parse::<f64>().ok()),
        _ => None,
    };
    let ((gh, gw), eps) = parsed.ok_or_else(|| format_error(&side, "expected `GRID h w eps`"))?;
    CorrectionFilter::from_spatial(&taps, (gh, gw), eps)
}
