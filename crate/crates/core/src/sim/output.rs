//! BER table and spectrogram matrix files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::spectrogram::Spectrogram;
use super::BerPoint;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "jsr_db,ebn0_db,receiver,bits,errors,ber,ci95";

/// `%g`-style formatting with six significant digits.
pub fn fmt_g(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    // rounding may carry into the next decade, so decide from the rounded text
    let sci = format!("{:.5e}", v);
    let (mant, e) = sci.split_once('e').expect("scientific format");
    let e: i32 = e.parse().expect("exponent");
    if !(-4..6).contains(&e) {
        let mant = trim_zeros(mant);
        let sign = if e < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", e.abs())
    } else {
        let decimals = (5 - e).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn ber_csv(points: &[BerPoint]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_g(p.jsr_db),
            fmt_g(p.ebn0_db),
            p.receiver.name(),
            p.bits,
            p.errors,
            fmt_g(p.ber),
            fmt_g(p.ci95)
        );
    }
    out
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_ber_csv(path: &Path, points: &[BerPoint]) -> Result<()> {
    write_file(path, &ber_csv(points))
}

/// First line `rows cols window hop`, then one line of dB values per frame.
pub fn spectrogram_text(spec: &Spectrogram) -> String {
    let mut out = format!("{} {} {} {}\n", spec.rows, spec.cols, spec.window, spec.hop);
    for r in 0..spec.rows {
        let line: Vec<String> = spec.row(r).iter().map(|&v| fmt_g(v)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_spectrogram(path: &Path, spec: &Spectrogram) -> Result<()> {
    write_file(path, &spectrogram_text(spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::receivers::ReceiverKind;

    #[test]
    fn g_format_matches_printf() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (-20.0, "-20"),
            (0.5, "0.5"),
            (1e-5, "1e-05"),
            (0.000123456789, "0.000123457"),
            (123456.7, "123457"),
            (1234567.0, "1.23457e+06"),
            (0.0999999999, "0.1"),
            (999999.5, "1e+06"),
            (f64::INFINITY, "inf"),
            (f64::NEG_INFINITY, "-inf"),
        ];
        for (v, s) in cases {
            assert_eq!(fmt_g(v), s, "{v}");
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        assert_eq!(ber_csv(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn one_row_table() {
        let p = BerPoint::new(-5.0, 15.0, ReceiverKind::VmdIcaWpd, 1000, 3);
        let text = ber_csv(std::slice::from_ref(&p));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        let cells: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(
            &cells[..6],
            &["-5", "15", "vmd-ica-wpd", "1000", "3", "0.003"]
        );
        assert_eq!(
            cells[6].parse::<f64>().unwrap(),
            fmt_g(p.ci95).parse::<f64>().unwrap()
        );
    }

    #[test]
    fn files_are_written_and_errors_carry_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("ber.csv");
        write_ber_csv(&path, &[]).unwrap();
        assert_eq!(
            fs::read_to_string(&path).unwrap(),
            format!("{CSV_HEADER}\n")
        );

        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        match write_ber_csv(&blocker.join("ber.csv"), &[]) {
            Err(Error::Io { path, .. }) => assert!(path.starts_with(&blocker)),
            other => panic!("expected io error, got {other:?}"),
        }
    }

    #[test]
    fn matrix_layout() {
        let spec = super::super::spectrogram::spectrogram(&vec![0.0; 64], 16, 16).unwrap();
        let text = spectrogram_text(&spec);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "4 9 16 16");
        assert_eq!(lines.len(), 5);
        assert!(lines[1..].iter().all(|l| l.split(' ').count() == 9));
    }
}
