//! Plain-text output helpers shared by the library and the CLI.

use std::io::Write;

use crate::error::Result;

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a header row and one row per record, all values at full precision.
pub fn write_csv_rows<W: Write>(mut out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let line: Vec<String> = row.into_iter().map(fmt_f64).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Evenly spaced grid with `points` values from `from` to `to` inclusive.
pub fn linspace(from: f64, to: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![from],
        _ => {
            let step = (to - from) / (points - 1) as f64;
            (0..points)
                .map(|i| if i + 1 == points { to } else { from + step * i as f64 })
                .collect()
        }
    }
}
