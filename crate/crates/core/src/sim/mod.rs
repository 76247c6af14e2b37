//! Seeded Monte-Carlo BER sweeps.
//!
//! Every trial simulates one fading block. Its random streams are ChaCha8
//! substreams keyed by `(seed, trial, purpose)`, so results do not depend on
//! scheduling, and the same trial index draws the same bits, chaos, fading,
//! phase and unit-variance noise in every (JSR, Eb/N0) cell. Within a cell
//! every receiver decodes the identical received block.

pub mod config;
pub mod output;
pub mod spectrogram;

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::hash::{Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{
    apply_channel_stream, jammer_power, mean_power, noise_variance, ChannelRealization,
    ReceivedBlock, SweepJammerParams,
};
use crate::chaos::{modulate_with, stream, ChaosParams};
use crate::error::Result;
use crate::receivers::{
    clean_vmd_ica_wpd, count_errors, rx_plain, rx_wpd, FrameLayout, PipelineDiagnostics,
    ReceiverKind,
};
use crate::vmd::VmdPlan;

pub use config::SimConfig;

/// Purpose tags for per-trial substreams.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
enum Stream {
    Source = 0,
    Channel = 1,
    Noise = 2,
    Receiver = 3,
}

/// Independent generator for one (trial, purpose) pair.
fn substream(seed: u64, trial: u64, purpose: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial.wrapping_mul(4).wrapping_add(purpose as u64));
    rng
}

/// Everything the channel produced for one block, kept for inspection.
#[derive(Debug, Clone)]
pub struct SimulatedBlock {
    pub bits: Vec<i8>,
    pub tx: Vec<f64>,
    pub signal_power: f64,
    pub realization: ChannelRealization,
    pub jammer: SweepJammerParams,
    pub rx: ReceivedBlock,
}

fn draw_x0<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let x: f64 = rng.random_range(-0.95..0.95);
        // stay clear of 0 (lands on the fixed point -1 in two steps) and of 0.5
        if x.abs() > 1e-3 && (x - 0.5).abs() > 1e-3 {
            return x;
        }
    }
}

/// Transmit and propagate one block for `trial` at the given operating point.
pub fn simulate_block(
    config: &SimConfig,
    trial: u64,
    ebn0_db: f64,
    jsr_db: f64,
) -> Result<SimulatedBlock> {
    let sys = &config.system;
    let mut source = substream(sys.seed, trial, Stream::Source);
    let bits: Vec<i8> = (0..sys.bits_per_block)
        .map(|_| if source.random::<bool>() { 1 } else { -1 })
        .collect();
    let params = ChaosParams::new(sys.beta, sys.p, draw_x0(&mut source))?;
    let tx = stream(&modulate_with(&bits, &params, sys.chaining)?);
    let signal_power = mean_power(&tx);

    let mut channel = substream(sys.seed, trial, Stream::Channel);
    let n0 = noise_variance(ebn0_db, sys.beta, signal_power);
    let realization = if config.fading.enabled {
        ChannelRealization::draw(&config.fading_params(), n0, &mut channel)?
    } else {
        ChannelRealization::fixed(1.0, 1.0, n0)
    };
    let theta = if config.jammer.random_phase {
        channel.random_range(0.0..TAU)
    } else {
        config.jammer.theta_sw
    };
    let power = if config.jammer.enabled {
        jammer_power(jsr_db, signal_power)
    } else {
        0.0
    };
    let jammer = SweepJammerParams::new(
        power,
        config.jammer.f_start_norm,
        config.jammer.delta_f_norm,
        theta,
        config.sweep_len(),
    )?;

    let mut noise = substream(sys.seed, trial, Stream::Noise);
    let rx = apply_channel_stream(&tx, sys.beta, &realization, &jammer, &mut noise)?;
    Ok(SimulatedBlock {
        bits,
        tx,
        signal_power,
        realization,
        jammer,
        rx,
    })
}

/// Signal tapped for spectrogram rendering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Tx,
    Rx,
    Cleaned,
}

impl Stage {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "tx" => Ok(Self::Tx),
            "rx" => Ok(Self::Rx),
            "cleaned" => Ok(Self::Cleaned),
            other => Err(crate::error::argument(format!(
                "unknown stage '{other}' (expected tx, rx or cleaned)"
            ))),
        }
    }
}

/// The block at the configured spectrogram operating point, at one stage.
pub fn stage_signal(config: &SimConfig, stage: Stage) -> Result<(SimulatedBlock, Vec<f64>)> {
    let sp = &config.spectrogram;
    let block = simulate_block(config, sp.trial, sp.ebn0_db, sp.jsr_db)?;
    let signal = match stage {
        Stage::Tx => block.tx.clone(),
        Stage::Rx => block.rx.received.clone(),
        Stage::Cleaned => {
            let mut rng = substream(config.system.seed, sp.trial, Stream::Receiver);
            clean_vmd_ica_wpd(&block.rx.received, &config.pipeline(), None, &mut rng)?.cleaned
        }
    };
    Ok((block, signal))
}

/// Spectrogram of one stage using the configured window and hop.
pub fn stage_spectrogram(
    config: &SimConfig,
    stage: Stage,
) -> Result<(SimulatedBlock, spectrogram::Spectrogram)> {
    let (block, signal) = stage_signal(config, stage)?;
    let spec =
        spectrogram::spectrogram(&signal, config.spectrogram.window, config.spectrogram.hop)?;
    Ok((block, spec))
}

/// Hash of the exact received samples; equal hashes mark paired decoding.
pub fn stream_hash(x: &[f64]) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    for v in x {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: u64,
    pub stream_hash: u64,
    pub h_sd: f64,
    pub h_jd: f64,
    /// Bit errors per receiver, in the order of `sweep.receivers`.
    pub errors: Vec<usize>,
    pub pipeline: Option<PipelineDiagnostics>,
}

/// Run every configured receiver on one trial's block.
pub fn run_trial(
    config: &SimConfig,
    layout: &FrameLayout,
    plan: Option<&VmdPlan>,
    trial: u64,
    ebn0_db: f64,
    jsr_db: f64,
) -> Result<TrialRecord> {
    let block = simulate_block(config, trial, ebn0_db, jsr_db)?;
    let received = &block.rx.received;
    let mut errors = Vec::with_capacity(config.sweep.receivers.len());
    let mut pipeline = None;
    for receiver in &config.sweep.receivers {
        let records = match receiver {
            ReceiverKind::Plain => rx_plain(received, layout)?,
            ReceiverKind::Wpd => rx_wpd(received, layout, &config.wpd)?,
            ReceiverKind::VmdIcaWpd => {
                let mut rng = substream(config.system.seed, trial, Stream::Receiver);
                let out = clean_vmd_ica_wpd(received, &config.pipeline(), plan, &mut rng)?;
                pipeline = Some(out.diagnostics);
                rx_plain(&out.cleaned, layout)?
            }
        };
        errors.push(count_errors(&block.bits, &records));
    }
    Ok(TrialRecord {
        trial,
        stream_hash: stream_hash(received),
        h_sd: block.realization.h_sd,
        h_jd: block.realization.h_jd,
        errors,
        pipeline,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub jsr_db: f64,
    pub ebn0_db: f64,
    pub receiver: ReceiverKind,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    /// Half-width of the 95% Wilson score interval.
    pub ci95: f64,
}

impl BerPoint {
    pub fn new(jsr_db: f64, ebn0_db: f64, receiver: ReceiverKind, bits: u64, errors: u64) -> Self {
        let ber = if bits == 0 {
            0.0
        } else {
            errors as f64 / bits as f64
        };
        Self {
            jsr_db,
            ebn0_db,
            receiver,
            bits,
            errors,
            ber,
            ci95: wilson_half_width(errors, bits),
        }
    }
}

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Half-width of the Wilson score interval for `errors / bits` at 95%.
pub fn wilson_half_width(errors: u64, bits: u64) -> f64 {
    if bits == 0 {
        return 0.0;
    }
    let n = bits as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    Z95 / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

/// All trials of one (JSR, Eb/N0) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub jsr_db: f64,
    pub ebn0_db: f64,
    pub receivers: Vec<ReceiverKind>,
    pub trials: Vec<TrialRecord>,
}

impl CellResult {
    pub fn bits(&self, bits_per_block: usize) -> u64 {
        (self.trials.len() * bits_per_block) as u64
    }

    pub fn errors(&self, receiver: ReceiverKind) -> Option<u64> {
        let idx = self.receivers.iter().position(|r| *r == receiver)?;
        Some(self.trials.iter().map(|t| t.errors[idx] as u64).sum())
    }

    /// Mean and 95% half-width of the per-block error difference `a - b`
    /// (in BER units), computed on the paired trials.
    pub fn paired_difference(
        &self,
        a: ReceiverKind,
        b: ReceiverKind,
        bits_per_block: usize,
    ) -> Option<(f64, f64)> {
        let ia = self.receivers.iter().position(|r| *r == a)?;
        let ib = self.receivers.iter().position(|r| *r == b)?;
        let n = self.trials.len();
        if n == 0 {
            return None;
        }
        let diffs: Vec<f64> = self
            .trials
            .iter()
            .map(|t| (t.errors[ia] as f64 - t.errors[ib] as f64) / bits_per_block as f64)
            .collect();
        let mean = diffs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Some((mean, Z95 * (var / n as f64).sqrt()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<BerPoint>,
    pub cells: Vec<CellResult>,
}

impl SweepResult {
    pub fn point(&self, receiver: ReceiverKind, ebn0_db: f64, jsr_db: f64) -> Option<&BerPoint> {
        self.points
            .iter()
            .find(|p| p.receiver == receiver && p.ebn0_db == ebn0_db && p.jsr_db == jsr_db)
    }

    pub fn cell(&self, ebn0_db: f64, jsr_db: f64) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.ebn0_db == ebn0_db && c.jsr_db == jsr_db)
    }

    /// BER against JSR for one receiver and Eb/N0, ordered by JSR.
    pub fn curve(&self, receiver: ReceiverKind, ebn0_db: f64) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter(|p| p.receiver == receiver && p.ebn0_db == ebn0_db)
            .map(|p| (p.jsr_db, p.ber))
            .collect()
    }
}

/// Rows ordered by (receiver, Eb/N0, JSR).
pub fn sort_points(points: &mut [BerPoint]) {
    points.sort_by(|a, b| {
        a.receiver
            .cmp(&b.receiver)
            .then(a.ebn0_db.total_cmp(&b.ebn0_db))
            .then(a.jsr_db.total_cmp(&b.jsr_db))
    });
}

pub fn run_sweep(config: &SimConfig) -> Result<Vec<BerPoint>> {
    Ok(run_sweep_detailed(config)?.points)
}

pub fn run_sweep_detailed(config: &SimConfig) -> Result<SweepResult> {
    config.validate()?;
    let layout = config.layout()?;
    let cells_spec: Vec<(f64, f64)> = config
        .sweep
        .ebn0_db
        .iter()
        .flat_map(|&e| config.sweep.jsr_db.iter().map(move |&j| (e, j)))
        .collect();
    let needs_plan = config.sweep.receivers.contains(&ReceiverKind::VmdIcaWpd);
    let plan = needs_plan.then(|| VmdPlan::new(config.block_samples()));

    let jobs: Vec<(usize, u64)> = (0..cells_spec.len())
        .flat_map(|c| (0..config.system.n_trials as u64).map(move |t| (c, t)))
        .collect();
    let records: Vec<(usize, TrialRecord)> = jobs
        .into_par_iter()
        .map(|(c, t)| {
            let (ebn0, jsr) = cells_spec[c];
            run_trial(config, &layout, plan.as_ref(), t, ebn0, jsr).map(|r| (c, r))
        })
        .collect::<Result<_>>()?;

    let mut grouped: BTreeMap<usize, Vec<TrialRecord>> = BTreeMap::new();
    for (c, r) in records {
        grouped.entry(c).or_default().push(r);
    }
    let bpb = config.system.bits_per_block;
    let mut cells = Vec::with_capacity(cells_spec.len());
    let mut points = Vec::new();
    for (c, mut trials) in grouped {
        trials.sort_by_key(|t| t.trial);
        let (ebn0_db, jsr_db) = cells_spec[c];
        let cell = CellResult {
            jsr_db,
            ebn0_db,
            receivers: config.sweep.receivers.clone(),
            trials,
        };
        for &receiver in &config.sweep.receivers {
            let errors = cell.errors(receiver).unwrap_or(0);
            points.push(BerPoint::new(
                jsr_db,
                ebn0_db,
                receiver,
                cell.bits(bpb),
                errors,
            ));
        }
        cells.push(cell);
    }
    sort_points(&mut points);
    Ok(SweepResult { points, cells })
}

/// JSR at which a BER curve first rises through `target`, by linear
/// interpolation of `log10(BER)` between grid points.
pub fn crossing_jsr(curve: &[(f64, f64)], target: f64) -> Option<f64> {
    let lt = target.log10();
    for w in curve.windows(2) {
        let ((j0, b0), (j1, b1)) = (w[0], w[1]);
        if b0 <= target && b1 >= target && b1 > b0 {
            if b0 <= 0.0 {
                return Some(j1);
            }
            let (l0, l1) = (b0.log10(), b1.log10());
            return Some(j0 + (lt - l0) / (l1 - l0) * (j1 - j0));
        }
    }
    None
}
