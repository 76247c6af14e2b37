//! Correlation receivers for NR-DCSK.
//!
//! All three chains end in the same detector: a moving-average filter over
//! each `p`-sample block, then the sum over the `beta / p` block means of
//! (reference mean) x (IB mean). The decision is the sign of that sum.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};
use crate::ica::{fit_ica, IcaModel, IcaSettings};
use crate::vmd::{split_modes, vmd_decompose_with, VmdParams, VmdPlan};
use crate::wpd::{dejam, WpdConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReceiverKind {
    Plain,
    Wpd,
    VmdIcaWpd,
}

impl ReceiverKind {
    pub const ALL: [ReceiverKind; 3] = [
        ReceiverKind::Plain,
        ReceiverKind::Wpd,
        ReceiverKind::VmdIcaWpd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReceiverKind::Plain => "plain",
            ReceiverKind::Wpd => "wpd",
            ReceiverKind::VmdIcaWpd => "vmd-ica-wpd",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| {
                argument(format!(
                    "unknown receiver '{name}' (plain, wpd, vmd-ica-wpd)"
                ))
            })
    }
}

impl std::fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Frame geometry shared by transmitter and receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLayout {
    pub beta: usize,
    pub p: usize,
}

impl FrameLayout {
    pub fn new(beta: usize, p: usize) -> Result<Self> {
        if beta == 0 || p == 0 || !beta.is_multiple_of(p) {
            return Err(argument(format!("invalid layout: beta {beta}, p {p}")));
        }
        Ok(Self { beta, p })
    }

    pub fn frame_len(&self) -> usize {
        2 * self.beta
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionRecord {
    pub bit_index: usize,
    /// Correlator output `B_l`.
    pub statistic: f64,
    pub decision: i8,
}

/// Replace every `p`-sample block by its mean.
pub fn maf(signal: &[f64], p: usize) -> Result<Vec<f64>> {
    if p == 0 || !signal.len().is_multiple_of(p) {
        return Err(argument(format!(
            "signal length {} is not a multiple of the block size {p}",
            signal.len()
        )));
    }
    let mut out = Vec::with_capacity(signal.len());
    for block in signal.chunks_exact(p) {
        let mean = block.iter().sum::<f64>() / p as f64;
        out.extend(std::iter::repeat_n(mean, p));
    }
    Ok(out)
}

fn block_means(x: &[f64], p: usize) -> impl Iterator<Item = f64> + '_ {
    x.chunks_exact(p)
        .map(move |b| b.iter().sum::<f64>() / p as f64)
}

/// Correlate the averaged reference half with the averaged IB half of one frame.
pub fn correlate_decide(
    frame: &[f64],
    layout: &FrameLayout,
    bit_index: usize,
) -> Result<DecisionRecord> {
    if frame.len() != layout.frame_len() {
        return Err(argument(format!(
            "frame has {} samples, expected {}",
            frame.len(),
            layout.frame_len()
        )));
    }
    let (reference, info) = frame.split_at(layout.beta);
    let statistic: f64 = block_means(reference, layout.p)
        .zip(block_means(info, layout.p))
        .map(|(r, i)| r * i)
        .sum();
    Ok(DecisionRecord {
        bit_index,
        statistic,
        decision: if statistic >= 0.0 { 1 } else { -1 },
    })
}

pub fn rx_plain(received: &[f64], layout: &FrameLayout) -> Result<Vec<DecisionRecord>> {
    let frame_len = layout.frame_len();
    if !received.len().is_multiple_of(frame_len) {
        return Err(argument(format!(
            "stream length {} is not a multiple of the frame length {frame_len}",
            received.len()
        )));
    }
    received
        .chunks_exact(frame_len)
        .enumerate()
        .map(|(l, frame)| correlate_decide(frame, layout, l))
        .collect()
}

/// Subtract the wavelet-packet jamming estimate, then correlate.
pub fn rx_wpd(
    received: &[f64],
    layout: &FrameLayout,
    wpd: &WpdConfig,
) -> Result<Vec<DecisionRecord>> {
    rx_plain(&dejam(received, wpd)?, layout)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PipelineConfig {
    pub vmd: VmdParams,
    pub ica: IcaSettings,
    pub wpd: WpdConfig,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PipelineDiagnostics {
    pub vmd_converged: bool,
    pub vmd_iterations: usize,
    pub vmd_residual: f64,
    pub center_freqs: Vec<f64>,
    pub ica_converged: bool,
    /// Set when `V1`/`V2` were too collinear to whiten; the block was then
    /// de-jammed as the single signal `V1 + V2`.
    pub ica_fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    /// `II`: de-jammed, back-projected and summed signal fed to the correlator.
    pub cleaned: Vec<f64>,
    pub diagnostics: PipelineDiagnostics,
}

/// VMD -> split -> FastICA -> WPD jamming removal per channel -> inverse ICA -> sum.
pub fn clean_vmd_ica_wpd<R: Rng + ?Sized>(
    received: &[f64],
    config: &PipelineConfig,
    plan: Option<&VmdPlan>,
    rng: &mut R,
) -> Result<PipelineOutput> {
    let owned;
    let plan = match plan {
        Some(p) => p,
        None => {
            owned = VmdPlan::new(received.len());
            &owned
        }
    };
    let modes = vmd_decompose_with(received, &config.vmd, plan)?;
    let (v1, v2) = split_modes(&modes)?;
    let mut diagnostics = PipelineDiagnostics {
        vmd_converged: modes.converged,
        vmd_iterations: modes.iterations,
        vmd_residual: modes.residual,
        center_freqs: modes.center_freqs.clone(),
        ..PipelineDiagnostics::default()
    };
    let cleaned = match fit_ica(&v1, &v2, &config.ica, rng) {
        Ok(model) => {
            diagnostics.ica_converged = model.unmixing.converged();
            dejam_separated(&model, &v1, &v2, &config.wpd)?
        }
        Err(Error::DegenerateCovariance { .. }) => {
            diagnostics.ica_fallback = true;
            let sum: Vec<f64> = v1.iter().zip(&v2).map(|(a, b)| a + b).collect();
            dejam(&sum, &config.wpd)?
        }
        Err(e) => return Err(e),
    };
    Ok(PipelineOutput {
        cleaned,
        diagnostics,
    })
}

/// Remove jamming from both ICA outputs and map back to the signal domain.
pub fn dejam_separated(
    model: &IcaModel,
    v1: &[f64],
    v2: &[f64],
    wpd: &WpdConfig,
) -> Result<Vec<f64>> {
    let (i1, i2) = model.separate(v1, v2)?;
    let w1 = dejam(&i1, wpd)?;
    let w2 = dejam(&i2, wpd)?;
    model.inverse_ica(&w1, &w2)
}

pub fn rx_vmd_ica_wpd<R: Rng + ?Sized>(
    received: &[f64],
    layout: &FrameLayout,
    config: &PipelineConfig,
    rng: &mut R,
) -> Result<(Vec<DecisionRecord>, PipelineDiagnostics)> {
    let out = clean_vmd_ica_wpd(received, config, None, rng)?;
    Ok((rx_plain(&out.cleaned, layout)?, out.diagnostics))
}

/// Hard decisions only.
pub fn decisions(records: &[DecisionRecord]) -> Vec<i8> {
    records.iter().map(|r| r.decision).collect()
}

pub fn count_errors(bits: &[i8], records: &[DecisionRecord]) -> usize {
    bits.iter()
        .zip(records)
        .filter(|(b, r)| **b != r.decision)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::{modulate, stream, ChaosParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn layout() -> FrameLayout {
        FrameLayout::new(200, 20).unwrap()
    }

    fn random_bits(n: usize, rng: &mut ChaCha8Rng) -> Vec<i8> {
        (0..n)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect()
    }

    #[test]
    fn maf_examples() {
        assert_eq!(
            maf(&[1.0, 3.0, 5.0, 7.0], 2).unwrap(),
            vec![2.0, 2.0, 6.0, 6.0]
        );
        let x = [0.3, -1.0, 2.5];
        assert_eq!(maf(&x, 1).unwrap(), x.to_vec());
        assert!(maf(&[1.0, 2.0, 3.0], 2).is_err());
    }

    #[test]
    fn maf_divides_noise_variance_by_block_size() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let normal = Normal::new(0.0, 1.5).unwrap();
        let x: Vec<f64> = (0..100_000).map(|_| normal.sample(&mut rng)).collect();
        let y = maf(&x, 20).unwrap();
        let means: Vec<f64> = y.iter().step_by(20).copied().collect();
        let n = means.len() as f64;
        let var = means.iter().map(|v| v * v).sum::<f64>() / n;
        let expected = 1.5 * 1.5 / 20.0;
        // sample variance of n Gaussian values has std expected * sqrt(2 / n)
        let band = 3.0 * expected * (2.0 / n).sqrt();
        assert!(
            (var - expected).abs() <= band,
            "{var} vs {expected} +- {band}"
        );
    }

    #[test]
    fn noiseless_frames_decide_correctly() {
        let params = ChaosParams::new(200, 20, 0.21).unwrap();
        let frames = modulate(&[1, -1], &params).unwrap();
        let energy: f64 = frames[0].raw_chaos.iter().map(|x| x * x).sum();
        let plus = correlate_decide(&frames[0].samples, &layout(), 0).unwrap();
        assert!((plus.statistic - energy).abs() < 1e-12);
        assert_eq!(plus.decision, 1);

        let energy: f64 = frames[1].raw_chaos.iter().map(|x| x * x).sum();
        let minus = correlate_decide(&frames[1].samples, &layout(), 1).unwrap();
        assert!((minus.statistic + energy).abs() < 1e-12);
        assert_eq!(minus.decision, -1);
        assert_eq!(minus.bit_index, 1);

        assert!(correlate_decide(&frames[1].samples[..399], &layout(), 0).is_err());
    }

    #[test]
    fn noise_only_frames_are_coin_flips() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let n_frames = 10_000;
        let bits = random_bits(n_frames, &mut rng);
        let rx: Vec<f64> = (0..n_frames * 400)
            .map(|_| normal.sample(&mut rng))
            .collect();
        let records = rx_plain(&rx, &layout()).unwrap();
        let rate = count_errors(&bits, &records) as f64 / n_frames as f64;
        // 3 sigma of a fair coin over 10^4 trials is 0.015
        assert!((rate - 0.5).abs() < 0.015, "error rate {rate}");
    }

    #[test]
    fn stream_length_must_be_whole_frames() {
        assert!(rx_plain(&[0.0; 401], &layout()).is_err());
        assert!(rx_plain(&[], &layout()).unwrap().is_empty());
    }

    #[test]
    fn zero_stream_ties_to_plus_one() {
        let rx = vec![0.0; 4000];
        let records = rx_wpd(&rx, &layout(), &WpdConfig::default()).unwrap();
        assert_eq!(records.len(), 10);
        assert!(records.iter().all(|r| r.decision == 1));
    }

    proptest::proptest! {
        #[test]
        fn antipodal_and_scaling_symmetry(x0 in -0.9f64..0.9, seed in 0u64..1000, c in 0.05f64..20.0) {
            proptest::prop_assume!(x0.abs() > 1e-3 && (x0 - 0.5).abs() > 1e-3);
            let params = ChaosParams::new(200, 20, x0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let bits = random_bits(8, &mut rng);
            let neg: Vec<i8> = bits.iter().map(|b| -b).collect();
            let a = rx_plain(&stream(&modulate(&bits, &params).unwrap()), &layout()).unwrap();
            let b = rx_plain(&stream(&modulate(&neg, &params).unwrap()), &layout()).unwrap();
            for (x, y) in a.iter().zip(&b) {
                proptest::prop_assert_eq!(x.statistic, -y.statistic);
            }

            let noisy: Vec<f64> = stream(&modulate(&bits, &params).unwrap())
                .iter()
                .map(|v| v + 0.3 * rng.random_range(-1.0..1.0))
                .collect();
            let base = rx_plain(&noisy, &layout()).unwrap();
            let scaled: Vec<f64> = noisy.iter().map(|v| c * v).collect();
            let sc = rx_plain(&scaled, &layout()).unwrap();
            for (x, y) in base.iter().zip(&sc) {
                proptest::prop_assert!((y.statistic - c * c * x.statistic).abs() <= 1e-9 * (1.0 + y.statistic.abs()));
                if x.statistic != 0.0 {
                    proptest::prop_assert_eq!(x.decision, y.decision);
                }
            }
        }
    }

    #[test]
    fn pipeline_without_thresholding_returns_the_mode_sum() {
        let params = ChaosParams::new(200, 20, 0.13).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let bits = random_bits(20, &mut rng);
        let normal = Normal::new(0.0, 0.5).unwrap();
        let rx: Vec<f64> = stream(&modulate(&bits, &params).unwrap())
            .iter()
            .map(|v| v + normal.sample(&mut rng))
            .collect();
        let mut config = PipelineConfig::default();
        config.wpd.enabled = false;
        let out = clean_vmd_ica_wpd(&rx, &config, None, &mut rng).unwrap();
        assert!(!out.diagnostics.ica_fallback);

        let modes = crate::vmd::vmd_decompose(&rx, &config.vmd).unwrap();
        let (v1, v2) = split_modes(&modes).unwrap();
        let (mut err, mut norm, mut to_input, mut input) = (0.0, 0.0, 0.0, 0.0);
        for k in 0..rx.len() {
            let sum = v1[k] + v2[k];
            err += (out.cleaned[k] - sum).powi(2);
            norm += sum * sum;
            to_input += (out.cleaned[k] - rx[k]).powi(2);
            input += rx[k] * rx[k];
        }
        assert!((err / norm).sqrt() <= 1e-9);
        assert!(((to_input / input).sqrt() - modes.residual).abs() <= 1e-9);
    }

    #[test]
    fn receiver_names_round_trip() {
        for k in ReceiverKind::ALL {
            assert_eq!(ReceiverKind::from_name(k.name()).unwrap(), k);
        }
        assert!(ReceiverKind::from_name("ica").is_err());
    }
}
