//! Variational mode decomposition.
//!
//! The signal is split into `n_modes` band-limited modes by alternating
//! direction updates in the Fourier domain:
//!
//! * mode: `u_k <- (f - sum_{i != k} u_i + lambda / 2) / (1 + 2 alpha (w - w_k)^2)`
//! * centre frequency: `w_k <- sum w |u_k|^2 / sum |u_k|^2`
//! * dual ascent: `lambda <- lambda + tau (f - sum u_k)`
//!
//! Real signals are processed on the one-sided spectrum (bins `0..=N/2`,
//! frequencies in cycles/sample) and mapped back with Hermitian symmetry.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{argument, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CenterInit {
    /// `w_k = 0.5 k / K`, spread over `[0, 0.5)`.
    #[default]
    Uniform,
    /// All centre frequencies start at DC.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VmdParams {
    pub n_modes: usize,
    /// Bandwidth penalty.
    pub alpha: f64,
    /// Dual ascent step; 0 relaxes the reconstruction constraint.
    pub tau: f64,
    /// Stop when `sum_k |du_k|^2 / sum_k |u_k|^2` falls below this.
    pub tol: f64,
    pub max_iter: usize,
    pub init: CenterInit,
}

impl Default for VmdParams {
    fn default() -> Self {
        Self {
            n_modes: 10,
            alpha: 2000.0,
            tau: 0.0,
            tol: 1e-6,
            max_iter: 500,
            init: CenterInit::Uniform,
        }
    }
}

impl VmdParams {
    pub fn validate(&self, errors: &mut Vec<String>, prefix: &str) {
        if self.n_modes == 0 {
            errors.push(format!("{prefix}.n_modes must be >= 1"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            errors.push(format!("{prefix}.alpha must be finite and > 0"));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            errors.push(format!("{prefix}.tau must be finite and >= 0"));
        }
        if !(self.tol > 0.0) {
            errors.push(format!("{prefix}.tol must be > 0"));
        }
        if self.max_iter == 0 {
            errors.push(format!("{prefix}.max_iter must be >= 1"));
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    /// Time-domain modes, sorted by ascending centre frequency.
    pub modes: Vec<Vec<f64>>,
    /// Centre frequencies in cycles/sample, ascending.
    pub center_freqs: Vec<f64>,
    /// `||r - sum modes|| / ||r||`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `||f - sum u_k||` on the one-sided spectrum after each iteration.
    pub violation: Vec<f64>,
}

impl ModeSet {
    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Index at which [`split_modes`] separates the low and high sets.
    pub fn split_index(&self) -> usize {
        self.modes.len() / 2
    }

    /// Sum of all modes, accumulated as (low set) + (high set).
    pub fn reconstruct(&self) -> Vec<f64> {
        let len = self.modes.first().map_or(0, Vec::len);
        let (low, high) = self.modes.split_at(self.split_index());
        let a = sum_vectors(low, len);
        let b = sum_vectors(high, len);
        a.iter().zip(&b).map(|(x, y)| x + y).collect()
    }
}

fn sum_vectors(vs: &[Vec<f64>], len: usize) -> Vec<f64> {
    let mut acc = vec![0.0; len];
    for v in vs {
        for (a, x) in acc.iter_mut().zip(v) {
            *a += x;
        }
    }
    acc
}

/// Reusable FFT plans for one signal length.
pub struct VmdPlan {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl VmdPlan {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }
}

pub fn vmd_decompose(signal: &[f64], params: &VmdParams) -> Result<ModeSet> {
    let plan = VmdPlan::new(signal.len());
    vmd_decompose_with(signal, params, &plan)
}

pub fn vmd_decompose_with(signal: &[f64], params: &VmdParams, plan: &VmdPlan) -> Result<ModeSet> {
    let mut errors = Vec::new();
    params.validate(&mut errors, "vmd");
    if !errors.is_empty() {
        return Err(argument(errors.join("; ")));
    }
    let n = signal.len();
    let k_modes = params.n_modes;
    if n < 2 * k_modes {
        return Err(argument(format!(
            "signal length {n} too short for {k_modes} modes (need >= {})",
            2 * k_modes
        )));
    }
    if let Some(i) = signal.iter().position(|v| !v.is_finite()) {
        return Err(argument(format!("non-finite sample at index {i}")));
    }
    if plan.len != n {
        return Err(argument(format!(
            "FFT plan for length {} used on length {n}",
            plan.len
        )));
    }

    let mut buf: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    plan.forward.process(&mut buf);
    let bins = n / 2 + 1;
    let f_hat: Vec<Complex64> = buf[..bins].to_vec();
    let freqs: Vec<f64> = (0..bins).map(|j| j as f64 / n as f64).collect();

    let mut omega: Vec<f64> = match params.init {
        CenterInit::Uniform => (0..k_modes)
            .map(|k| 0.5 * k as f64 / k_modes as f64)
            .collect(),
        CenterInit::Zero => vec![0.0; k_modes],
    };
    // split real and imaginary parts so the per-bin loops vectorize
    let (f_re, f_im): (Vec<f64>, Vec<f64>) = f_hat.iter().map(|c| (c.re, c.im)).unzip();
    let mut u_re = vec![vec![0.0; bins]; k_modes];
    let mut u_im = vec![vec![0.0; bins]; k_modes];
    let mut tot_re = vec![0.0; bins];
    let mut tot_im = vec![0.0; bins];
    let mut lam_re = vec![0.0; bins];
    let mut lam_im = vec![0.0; bins];
    let two_alpha = 2.0 * params.alpha;

    let mut violation = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < params.max_iter {
        iterations += 1;
        let (mut change, mut previous) = (0.0, 0.0);
        for k in 0..k_modes {
            let w_k = omega[k];
            let (m_re, m_im) = (&mut u_re[k], &mut u_im[k]);
            let mut acc = [0.0f64; 4];
            for j in 0..bins {
                let (old_re, old_im) = (m_re[j], m_im[j]);
                let others_re = tot_re[j] - old_re;
                let others_im = tot_im[j] - old_im;
                let d = freqs[j] - w_k;
                let gain = 1.0 / (1.0 + two_alpha * d * d);
                let new_re = (f_re[j] - others_re + 0.5 * lam_re[j]) * gain;
                let new_im = (f_im[j] - others_im + 0.5 * lam_im[j]) * gain;
                tot_re[j] = others_re + new_re;
                tot_im[j] = others_im + new_im;
                m_re[j] = new_re;
                m_im[j] = new_im;
                let p = new_re * new_re + new_im * new_im;
                let (dr, di) = (new_re - old_re, new_im - old_im);
                acc[0] += freqs[j] * p;
                acc[1] += p;
                acc[2] += dr * dr + di * di;
                acc[3] += old_re * old_re + old_im * old_im;
            }
            if acc[1] > 0.0 {
                omega[k] = acc[0] / acc[1];
            }
            change += acc[2];
            previous += acc[3];
        }
        let mut viol = 0.0;
        for j in 0..bins {
            let r_re = f_re[j] - tot_re[j];
            let r_im = f_im[j] - tot_im[j];
            viol += r_re * r_re + r_im * r_im;
            if params.tau > 0.0 {
                lam_re[j] += params.tau * r_re;
                lam_im[j] += params.tau * r_im;
            }
        }
        violation.push(viol.sqrt());

        let relative = if previous > 0.0 {
            change / previous
        } else if change > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if relative < params.tol {
            converged = true;
            break;
        }
    }
    let u: Vec<Vec<Complex64>> = u_re
        .iter()
        .zip(&u_im)
        .map(|(re, im)| {
            re.iter()
                .zip(im)
                .map(|(&a, &b)| Complex64::new(a, b))
                .collect()
        })
        .collect();

    let mut order: Vec<usize> = (0..k_modes).collect();
    order.sort_by(|&a, &b| omega[a].total_cmp(&omega[b]));

    let scale = 1.0 / n as f64;
    let mut modes = Vec::with_capacity(k_modes);
    for &k in &order {
        let spec = &u[k];
        buf[0] = Complex64::new(spec[0].re, 0.0);
        buf[1..bins].copy_from_slice(&spec[1..bins]);
        if n.is_multiple_of(2) {
            buf[n / 2] = Complex64::new(spec[n / 2].re, 0.0);
        }
        for j in 1..n.div_ceil(2) {
            buf[n - j] = spec[j].conj();
        }
        plan.inverse.process(&mut buf);
        modes.push(buf.iter().map(|c| c.re * scale).collect::<Vec<f64>>());
    }
    let center_freqs: Vec<f64> = order.iter().map(|&k| omega[k]).collect();

    let mut mode_set = ModeSet {
        modes,
        center_freqs,
        residual: 0.0,
        iterations,
        converged,
        violation,
    };
    let recon = mode_set.reconstruct();
    let (mut err, mut energy) = (0.0, 0.0);
    for (r, x) in recon.iter().zip(signal) {
        err += (x - r) * (x - r);
        energy += x * x;
    }
    mode_set.residual = if energy > 0.0 {
        (err / energy).sqrt()
    } else {
        0.0
    };
    Ok(mode_set)
}

/// Sum the lower-frequency half of the modes into `V1` and the rest into `V2`.
pub fn split_modes(modes: &ModeSet) -> Result<(Vec<f64>, Vec<f64>)> {
    if modes.n_modes() < 2 {
        return Err(argument(format!(
            "need at least two modes to split, found {}",
            modes.n_modes()
        )));
    }
    let len = modes.modes[0].len();
    let (low, high) = modes.modes.split_at(modes.split_index());
    Ok((sum_vectors(low, len), sum_vectors(high, len)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn tone(n: usize, f: f64, amp: f64, phase: f64) -> Vec<f64> {
        (0..n)
            .map(|k| amp * (TAU * f * k as f64 + phase).cos())
            .collect()
    }

    fn norm(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn spectrum_power(x: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new()
            .plan_fft_forward(x.len())
            .process(&mut buf);
        buf[..x.len() / 2 + 1]
            .iter()
            .map(|c| c.norm_sqr())
            .collect()
    }

    #[test]
    fn zero_signal() {
        let params = VmdParams {
            n_modes: 3,
            ..VmdParams::default()
        };
        let m = vmd_decompose(&[0.0; 64], &params).unwrap();
        assert_eq!(m.n_modes(), 3);
        assert!(m.modes.iter().flatten().all(|&v| v == 0.0));
        assert_eq!(m.residual, 0.0);
        assert!(m.converged);
    }

    #[test]
    fn argument_errors() {
        let params = VmdParams::default();
        assert!(vmd_decompose(&[1.0; 19], &params).is_err());
        let mut x = vec![1.0; 64];
        x[3] = f64::NAN;
        assert!(vmd_decompose(&x, &params).is_err());
        let bad = VmdParams {
            alpha: 0.0,
            ..params
        };
        assert!(vmd_decompose(&[1.0; 64], &bad).is_err());
    }

    #[test]
    fn single_tone() {
        // bin-centred tone: the centre of gravity is exactly 0.1
        let n = 1000;
        let x = tone(n, 0.1, 1.0, 0.4);
        let params = VmdParams {
            n_modes: 1,
            ..VmdParams::default()
        };
        let m = vmd_decompose(&x, &params).unwrap();
        let w = m.center_freqs[0];
        assert!((0.098..=0.102).contains(&w), "centre {w}");
        let diff: Vec<f64> = m.modes[0].iter().zip(&x).map(|(a, b)| a - b).collect();
        assert!(norm(&diff) / norm(&x) < 0.05);
    }

    #[test]
    fn two_tones() {
        let n = 2000;
        let a = tone(n, 0.05, 1.0, 0.0);
        let b = tone(n, 0.20, 0.8, 1.0);
        let x: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p + q).collect();
        let params = VmdParams {
            n_modes: 2,
            alpha: 2000.0,
            ..VmdParams::default()
        };
        let m = vmd_decompose(&x, &params).unwrap();
        assert!(m.converged);
        for (w, truth) in m.center_freqs.iter().zip([0.05, 0.20]) {
            assert!((w - truth).abs() <= 0.02 * truth, "centre {w} vs {truth}");
        }
        assert!(m.residual <= 0.05, "residual {}", m.residual);
        // each mode holds >= 90% of its energy within +-0.01 of its tone
        for (mode, truth) in m.modes.iter().zip([0.05, 0.20]) {
            let p = spectrum_power(mode);
            let total: f64 = p.iter().sum();
            let near: f64 = p
                .iter()
                .enumerate()
                .filter(|(j, _)| ((*j as f64 / n as f64) - truth).abs() <= 0.01)
                .map(|(_, v)| v)
                .sum();
            assert!(near / total >= 0.9, "concentration {}", near / total);
        }
    }

    #[test]
    fn modes_are_band_limited_around_centres() {
        let n = 2048;
        let parts = [
            tone(n, 0.03, 1.0, 0.2),
            tone(n, 0.15, 1.0, 0.5),
            tone(n, 0.32, 0.7, 2.0),
        ];
        let x: Vec<f64> = (0..n).map(|k| parts.iter().map(|p| p[k]).sum()).collect();
        let params = VmdParams {
            n_modes: 3,
            ..VmdParams::default()
        };
        let m = vmd_decompose(&x, &params).unwrap();
        // half-power band of the Wiener filter: |w - w_k| <= 1 / sqrt(2 alpha)
        let half_width = 1.0 / (2.0 * params.alpha).sqrt();
        for (mode, w) in m.modes.iter().zip(&m.center_freqs) {
            let p = spectrum_power(mode);
            let total: f64 = p.iter().sum();
            let inside: f64 = p
                .iter()
                .enumerate()
                .filter(|(j, _)| ((*j as f64 / n as f64) - w).abs() <= half_width)
                .map(|(_, v)| v)
                .sum();
            assert!(inside / total >= 0.8, "mode at {w}: {}", inside / total);
        }
    }

    #[test]
    fn dual_ascent_reconstructs_and_violation_settles() {
        let n = 1024;
        let x: Vec<f64> = (0..n)
            .map(|k| {
                let t = k as f64;
                (TAU * 0.04 * t).sin()
                    + 0.5 * (TAU * 0.13 * t + 0.3).sin()
                    + 0.2 * (TAU * 0.37 * t).cos()
            })
            .collect();
        let params = VmdParams {
            n_modes: 4,
            tau: 0.1,
            tol: 1e-9,
            max_iter: 2000,
            ..VmdParams::default()
        };
        let m = vmd_decompose(&x, &params).unwrap();
        assert!(m.converged, "{} iterations", m.iterations);
        assert!(m.residual <= 0.05, "residual {}", m.residual);
        let tail = &m.violation[m.violation.len().saturating_sub(10)..];
        for w in tail.windows(2) {
            assert!(
                w[1] <= w[0] * (1.0 + 1e-9) + 1e-12,
                "violation rose: {tail:?}"
            );
        }
    }

    #[test]
    fn output_is_sorted_and_deterministic() {
        let n = 512;
        let x: Vec<f64> = (0..n)
            .map(|k| ((k * 37 % 101) as f64 / 50.0) - 1.0)
            .collect();
        let params = VmdParams {
            n_modes: 5,
            max_iter: 100,
            ..VmdParams::default()
        };
        let a = vmd_decompose(&x, &params).unwrap();
        let b = vmd_decompose(&x, &params).unwrap();
        assert_eq!(a, b);
        assert!(a.center_freqs.windows(2).all(|w| w[0] <= w[1]));
        assert!(a.center_freqs.iter().all(|w| (0.0..=0.5).contains(w)));
    }

    #[test]
    fn split_examples() {
        let zero = ModeSet {
            modes: vec![vec![0.0; 8]; 10],
            center_freqs: (0..10).map(|k| k as f64 / 20.0).collect(),
            residual: 0.0,
            iterations: 1,
            converged: true,
            violation: vec![],
        };
        let (v1, v2) = split_modes(&zero).unwrap();
        assert!(v1.iter().chain(&v2).all(|&v| v == 0.0));

        let pair = ModeSet {
            modes: vec![vec![1.0, 2.0], vec![3.0, -4.0]],
            center_freqs: vec![0.1, 0.2],
            ..zero.clone()
        };
        let (v1, v2) = split_modes(&pair).unwrap();
        assert_eq!(v1, vec![1.0, 2.0]);
        assert_eq!(v2, vec![3.0, -4.0]);

        let single = ModeSet {
            modes: vec![vec![1.0]],
            center_freqs: vec![0.1],
            ..zero
        };
        assert!(split_modes(&single).is_err());
    }

    #[test]
    fn ten_mode_split_adds_up_exactly() {
        let n = 800;
        let x: Vec<f64> = (0..n)
            .map(|k| ((k as f64) * 0.37).sin() + ((k as f64) * 0.011).cos())
            .collect();
        let params = VmdParams {
            max_iter: 50,
            ..VmdParams::default()
        };
        let m = vmd_decompose(&x, &params).unwrap();
        let (v1, v2) = split_modes(&m).unwrap();
        let sum: Vec<f64> = v1.iter().zip(&v2).map(|(a, b)| a + b).collect();
        assert_eq!(sum, m.reconstruct());
    }
}
