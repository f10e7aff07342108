//! CSV output of sweep rows with 12 significant digits.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

use super::sweep::SweepRow;

pub const SWEEP_HEADER: [&str; 10] = [
    "delta",
    "spectral_mc_mean",
    "spectral_mc_std",
    "spectral_theory",
    "gamp_mc_mean",
    "gamp_mc_std",
    "gamp_se",
    "iterations_mean",
    "completed_trials",
    "failed_trials",
];

/// Shortest decimal that equals `v` rounded to 12 significant digits.
/// Non-finite values are written as `nan`, `inf` or `-inf`.
pub fn format_sig(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{v:.11e}").parse().expect("formatted float parses");
    let plain = format!("{rounded}");
    let sci = format!("{rounded:e}");
    if plain.len() <= sci.len() {
        plain
    } else {
        sci
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(format_sig).unwrap_or_default()
}

fn record(row: &SweepRow) -> [String; 10] {
    [
        format_sig(row.delta),
        format_sig(row.spectral_mc_mean),
        format_sig(row.spectral_mc_std),
        format_sig(row.spectral_theory),
        opt(row.gamp_mc_mean),
        opt(row.gamp_mc_std),
        opt(row.gamp_se),
        opt(row.iterations_mean),
        row.completed_trials.to_string(),
        row.failed_trials.to_string(),
    ]
}

/// Writes the header and one record per row.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for row in rows {
        w.write_record(record(row))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the rows to `path`; errors name the path.
pub fn emit_csv(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let with_path = |e: std::io::Error| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())));
    let file = std::fs::File::create(path).map_err(with_path)?;
    let mut buf = std::io::BufWriter::new(file);
    write_csv(rows, &mut buf)?;
    buf.flush().map_err(with_path)?;
    Ok(())
}

/// Parses CSV produced by [`write_csv`].
pub fn read_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != SWEEP_HEADER {
        return Err(Error::Format(format!("unexpected CSV header {header:?}")));
    }
    let num = |s: &str| -> Result<f64> {
        s.parse().map_err(|_| Error::Format(format!("bad number {s:?} in CSV")))
    };
    let opt = |s: &str| -> Result<Option<f64>> { if s.is_empty() { Ok(None) } else { num(s).map(Some) } };
    let count = |s: &str| -> Result<usize> {
        s.parse().map_err(|_| Error::Format(format!("bad count {s:?} in CSV")))
    };
    r.records()
        .map(|rec| {
            let rec = rec?;
            let f = |i: usize| rec.get(i).unwrap_or("");
            Ok(SweepRow {
                delta: num(f(0))?,
                spectral_mc_mean: num(f(1))?,
                spectral_mc_std: num(f(2))?,
                spectral_theory: num(f(3))?,
                gamp_mc_mean: opt(f(4))?,
                gamp_mc_std: opt(f(5))?,
                gamp_se: opt(f(6))?,
                iterations_mean: opt(f(7))?,
                completed_trials: count(f(8))?,
                failed_trials: count(f(9))?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_sig(0.1 + 0.2), "0.3");
        assert_eq!(format_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_sig(2.0), "2");
        assert_eq!(format_sig(123456789.123456789), "123456789.123");
        assert_eq!(format_sig(1.5e-20), "1.5e-20");
        assert_eq!(format_sig(f64::NAN), "nan");
    }

    #[test]
    fn empty_rows_give_header_only() {
        let mut out = Vec::new();
        write_csv(&[], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), format!("{}\r\n", SWEEP_HEADER.join(",")));
    }
}
