//! Block-fading channel with AWGN and a linear sweep (chirp) jammer.
//!
//! Frequencies of the jammer use the normalized units of the discrete
//! sweep model: `F_start = f_start * T_b` and `dF = df * T_b^2`, with the
//! bit duration `T_b` spanning `2 * beta` samples. The instantaneous
//! frequency in cycles per sample at index `k` is
//! `F_start / (2 beta) + k dF / (4 beta^2)`, see [`SweepJammerParams::linear_sweep`]
//! for the inverse mapping from a band in cycles/sample.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::chaos::ChaoticFrame;
use crate::error::{argument, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepJammerParams {
    /// Jamming power `P_j` (linear).
    pub power: f64,
    /// `F_start`, normalized start frequency.
    pub f_start_norm: f64,
    /// `dF`, normalized sweep rate.
    pub delta_f_norm: f64,
    /// Initial phase in radians.
    pub theta: f64,
    /// Samples per sweep period; the chirp restarts every `sweep_len` samples.
    pub sweep_len: usize,
}

impl SweepJammerParams {
    pub fn new(
        power: f64,
        f_start_norm: f64,
        delta_f_norm: f64,
        theta: f64,
        sweep_len: usize,
    ) -> Result<Self> {
        if !(power >= 0.0) || !power.is_finite() {
            return Err(argument(format!(
                "jamming power {power} must be finite and >= 0"
            )));
        }
        if sweep_len == 0 {
            return Err(argument("sweep length must be positive"));
        }
        Ok(Self {
            power,
            f_start_norm,
            delta_f_norm,
            theta: theta.rem_euclid(TAU),
            sweep_len,
        })
    }

    /// Jammer sweeping linearly from `f_lo` to `f_hi` (cycles/sample) over `sweep_len` samples.
    pub fn linear_sweep(
        power: f64,
        f_lo: f64,
        f_hi: f64,
        sweep_len: usize,
        beta: usize,
        theta: f64,
    ) -> Result<Self> {
        let b = beta as f64;
        let f_start_norm = 2.0 * b * f_lo;
        let delta_f_norm = 4.0 * b * b * (f_hi - f_lo) / sweep_len.max(1) as f64;
        Self::new(power, f_start_norm, delta_f_norm, theta, sweep_len)
    }

    pub fn silent(sweep_len: usize) -> Self {
        Self {
            power: 0.0,
            f_start_norm: 0.0,
            delta_f_norm: 0.0,
            theta: 0.0,
            sweep_len: sweep_len.max(1),
        }
    }

    /// Instantaneous frequency in cycles/sample at stream index `k`.
    pub fn instantaneous_frequency(&self, k: usize, beta: usize) -> f64 {
        let b = beta as f64;
        let k = (k % self.sweep_len) as f64;
        self.f_start_norm / (2.0 * b) + k * self.delta_f_norm / (4.0 * b * b)
    }
}

/// Jammer sample `sqrt(2 P_j) sin(pi k F_start / beta + pi k^2 dF / (4 beta^2) + theta)`.
pub fn sweep_sample(k: usize, params: &SweepJammerParams, beta: usize) -> f64 {
    let b = beta as f64;
    let k = (k % params.sweep_len) as f64;
    let phase = PI * k * params.f_start_norm / b
        + PI * k * k * params.delta_f_norm / (4.0 * b * b)
        + params.theta;
    (2.0 * params.power).sqrt() * phase.sin()
}

pub fn jammer_stream(params: &SweepJammerParams, beta: usize, len: usize) -> Vec<f64> {
    (0..len).map(|k| sweep_sample(k, params, beta)).collect()
}

fn check_nakagami(m: f64, omega: f64) -> Result<()> {
    if !(m >= 0.5) || !m.is_finite() {
        return Err(argument(format!("Nakagami shape m = {m} must be >= 0.5")));
    }
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(argument(format!(
            "Nakagami spread omega = {omega} must be > 0"
        )));
    }
    Ok(())
}

/// Nakagami-m amplitude: `sqrt(G)` with `G ~ Gamma(m, omega / m)`.
pub fn draw_fading<R: Rng + ?Sized>(m: f64, omega: f64, rng: &mut R) -> Result<f64> {
    check_nakagami(m, omega)?;
    let gamma = Gamma::new(m, omega / m).map_err(|e| argument(e.to_string()))?;
    Ok(gamma.sample(rng).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingParams {
    pub m_sd: f64,
    pub m_jd: f64,
    pub omega: f64,
}

impl Default for FadingParams {
    fn default() -> Self {
        Self {
            m_sd: 1.0,
            m_jd: 1.0,
            omega: 1.0,
        }
    }
}

/// Channel state for one fading block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelRealization {
    pub h_sd: f64,
    pub h_jd: f64,
    /// Noise variance per real sample.
    pub n0: f64,
    pub m_sd: f64,
    pub m_jd: f64,
    pub omega: f64,
}

impl ChannelRealization {
    /// Fixed gains, no fading draw.
    pub fn fixed(h_sd: f64, h_jd: f64, n0: f64) -> Self {
        Self {
            h_sd,
            h_jd,
            n0,
            m_sd: 1.0,
            m_jd: 1.0,
            omega: 1.0,
        }
    }

    pub fn draw<R: Rng + ?Sized>(fading: &FadingParams, n0: f64, rng: &mut R) -> Result<Self> {
        if !(n0 >= 0.0) {
            return Err(argument(format!("noise variance {n0} must be >= 0")));
        }
        let h_sd = draw_fading(fading.m_sd, fading.omega, rng)?;
        let h_jd = draw_fading(fading.m_jd, fading.omega, rng)?;
        Ok(Self {
            h_sd,
            h_jd,
            n0,
            m_sd: fading.m_sd,
            m_jd: fading.m_jd,
            omega: fading.omega,
        })
    }
}

/// Received block split into its additive parts.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedBlock {
    pub received: Vec<f64>,
    /// `h_sd * s`
    pub signal: Vec<f64>,
    /// `h_jd * j`
    pub jamming: Vec<f64>,
    pub noise: Vec<f64>,
}

/// `r_k = h_sd s_k + h_jd j_k + n_k` over a whole transmit stream.
pub fn apply_channel_stream<R: Rng + ?Sized>(
    tx: &[f64],
    beta: usize,
    realization: &ChannelRealization,
    jam: &SweepJammerParams,
    rng: &mut R,
) -> Result<ReceivedBlock> {
    if !(realization.n0 >= 0.0) || !realization.n0.is_finite() {
        return Err(argument(format!(
            "noise variance {} must be finite and >= 0",
            realization.n0
        )));
    }
    let normal = Normal::new(0.0, realization.n0.sqrt()).map_err(|e| argument(e.to_string()))?;
    let len = tx.len();
    let signal: Vec<f64> = tx.iter().map(|s| realization.h_sd * s).collect();
    let jamming: Vec<f64> = if jam.power == 0.0 || realization.h_jd == 0.0 {
        vec![0.0; len]
    } else {
        (0..len)
            .map(|k| realization.h_jd * sweep_sample(k, jam, beta))
            .collect()
    };
    let noise: Vec<f64> = if realization.n0 == 0.0 {
        vec![0.0; len]
    } else {
        (0..len).map(|_| normal.sample(rng)).collect()
    };
    let received = signal
        .iter()
        .zip(&jamming)
        .zip(&noise)
        .map(|((s, j), n)| s + j + n)
        .collect();
    Ok(ReceivedBlock {
        received,
        signal,
        jamming,
        noise,
    })
}

pub fn apply_channel<R: Rng + ?Sized>(
    frames: &[ChaoticFrame],
    realization: &ChannelRealization,
    jam: &SweepJammerParams,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let beta = frames.first().map_or(1, |f| f.samples.len() / 2);
    let tx = crate::chaos::stream(frames);
    Ok(apply_channel_stream(&tx, beta, realization, jam, rng)?.received)
}

/// Mean-square value of a sample stream.
pub fn mean_power(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// Per-sample noise variance for a target Eb/N0 with `Eb = 2 beta P_s`
/// and real baseband (`n0 = Eb / (2 * 10^(EbN0/10))`).
pub fn noise_variance(ebn0_db: f64, beta: usize, signal_power: f64) -> f64 {
    let eb = 2.0 * beta as f64 * signal_power;
    eb / (2.0 * 10f64.powf(ebn0_db / 10.0))
}

/// `P_j = P_s * 10^(JSR/10)`.
pub fn jammer_power(jsr_db: f64, signal_power: f64) -> f64 {
    signal_power * 10f64.powf(jsr_db / 10.0)
}
