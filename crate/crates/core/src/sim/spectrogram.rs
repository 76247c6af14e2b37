//! Short-time power spectra of sample streams.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::channel::SweepJammerParams;
use crate::error::{argument, Result};

/// Floor applied before converting power to dB.
pub const DB_FLOOR: f64 = -120.0;

/// Power spectrogram: `rows` time frames by `cols = window/2 + 1` bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub window: usize,
    pub hop: usize,
    pub rows: usize,
    pub cols: usize,
    /// Row-major power in dB.
    pub db: Vec<f64>,
}

impl Spectrogram {
    pub fn row(&self, r: usize) -> &[f64] {
        &self.db[r * self.cols..(r + 1) * self.cols]
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.db[r * self.cols + c]
    }

    /// Centre sample index of frame `r`.
    pub fn frame_center(&self, r: usize) -> usize {
        r * self.hop + self.window / 2
    }

    /// Frequency of bin `c` in cycles/sample.
    pub fn bin_frequency(&self, c: usize) -> f64 {
        c as f64 / self.window as f64
    }
}

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Hann-windowed STFT; each cell is `10 log10(|X|^2 / sum(w^2))`, floored at -120 dB.
pub fn spectrogram(x: &[f64], window: usize, hop: usize) -> Result<Spectrogram> {
    if window < 2 || hop == 0 {
        return Err(argument("spectrogram needs window >= 2 and hop >= 1"));
    }
    if x.len() < window {
        return Err(argument(format!(
            "signal of {} samples is shorter than the window {window}",
            x.len()
        )));
    }
    let w = hann(window);
    let norm: f64 = w.iter().map(|v| v * v).sum();
    let rows = (x.len() - window) / hop + 1;
    let cols = window / 2 + 1;
    let fft = FftPlanner::new().plan_fft_forward(window);
    let mut buf = vec![Complex::new(0.0, 0.0); window];
    let mut db = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let start = r * hop;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex::new(x[start + i] * w[i], 0.0);
        }
        fft.process(&mut buf);
        for b in &buf[..cols] {
            let p = b.norm_sqr() / norm;
            db.push(if p > 0.0 {
                (10.0 * p.log10()).max(DB_FLOOR)
            } else {
                DB_FLOOR
            });
        }
    }
    Ok(Spectrogram {
        window,
        hop,
        rows,
        cols,
        db,
    })
}

/// Fold a frequency in cycles/sample into `[0, 0.5]`.
pub fn alias(f: f64) -> f64 {
    let f = f.rem_euclid(1.0);
    if f > 0.5 {
        1.0 - f
    } else {
        f
    }
}

/// Mean linear power (in dB) of the bins within `half_width` bins of the
/// jammer's instantaneous frequency at each frame centre.
pub fn ridge_power_db(
    spec: &Spectrogram,
    jammer: &SweepJammerParams,
    beta: usize,
    half_width: usize,
) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for r in 0..spec.rows {
        let f = alias(jammer.instantaneous_frequency(spec.frame_center(r), beta));
        let centre = (f * spec.window as f64).round() as isize;
        for c in centre - half_width as isize..=centre + half_width as isize {
            if c >= 0 && (c as usize) < spec.cols {
                total += 10f64.powf(spec.at(r, c as usize) / 10.0);
                count += 1;
            }
        }
    }
    if count == 0 || total <= 0.0 {
        DB_FLOOR
    } else {
        10.0 * (total / count as f64).log10()
    }
}
