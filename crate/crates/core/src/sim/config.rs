//! Simulation configuration, read from a sectioned `key = value` file (TOML).
//! Unknown keys are rejected; omitted keys take the defaults below.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::FadingParams;
use crate::chaos::Chaining;
use crate::error::{Error, Result};
use crate::ica::IcaSettings;
use crate::receivers::{FrameLayout, PipelineConfig, ReceiverKind};
use crate::vmd::VmdParams;
use crate::wpd::WpdConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    pub beta: usize,
    pub p: usize,
    pub bits_per_block: usize,
    pub n_trials: usize,
    pub seed: u64,
    pub chaining: Chaining,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            beta: 200,
            p: 20,
            bits_per_block: 100,
            n_trials: 1000,
            seed: 1,
            chaining: Chaining::Continuous,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub ebn0_db: Vec<f64>,
    pub jsr_db: Vec<f64>,
    pub receivers: Vec<ReceiverKind>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            ebn0_db: vec![15.0, 20.0],
            jsr_db: vec![-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0],
            receivers: ReceiverKind::ALL.to_vec(),
        }
    }
}

/// Sweep jammer in the normalized units of the discrete chirp model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JammerSection {
    pub enabled: bool,
    /// `F_start = f_start * T_b`.
    pub f_start_norm: f64,
    /// `dF = df * T_b^2`.
    pub delta_f_norm: f64,
    /// Sweeps per fading block: `sweep_len = 2 * beta * bits_per_block / sweeps_per_block`.
    pub sweeps_per_block: usize,
    /// Draw the initial phase uniformly on `[0, 2 pi)` per trial.
    pub random_phase: bool,
    /// Initial phase used when `random_phase` is false.
    pub theta_sw: f64,
}

impl Default for JammerSection {
    fn default() -> Self {
        // 0 -> 0.5 cycles/sample over one sweep of 8000 samples at beta = 200
        Self {
            enabled: true,
            f_start_norm: 0.0,
            delta_f_norm: 10.0,
            sweeps_per_block: 5,
            random_phase: true,
            theta_sw: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FadingSection {
    /// When false both gains are fixed at 1.
    pub enabled: bool,
    pub m_sd: f64,
    pub m_jd: f64,
    pub omega: f64,
}

impl Default for FadingSection {
    fn default() -> Self {
        Self {
            enabled: true,
            m_sd: 1.0,
            m_jd: 1.0,
            omega: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IcaSection {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IcaSection {
    fn default() -> Self {
        let s = IcaSettings::default();
        Self {
            tol: s.tol,
            max_iter: s.max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrogramSection {
    pub window: usize,
    pub hop: usize,
    /// Operating point of the block rendered by `sim spectrogram`.
    pub ebn0_db: f64,
    pub jsr_db: f64,
    /// Trial index whose random streams generate the block.
    pub trial: u64,
}

impl Default for SpectrogramSection {
    fn default() -> Self {
        Self {
            window: 256,
            hop: 64,
            ebn0_db: 15.0,
            jsr_db: 5.0,
            trial: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub system: SystemSection,
    pub sweep: SweepSection,
    pub jammer: JammerSection,
    pub fading: FadingSection,
    pub vmd: VmdParams,
    pub ica: IcaSection,
    pub wpd: WpdConfig,
    pub spectrogram: SpectrogramSection,
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Read and validate a configuration file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config = Self::from_toml_str(&text).map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            message,
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn block_samples(&self) -> usize {
        2 * self.system.beta * self.system.bits_per_block
    }

    pub fn sweep_len(&self) -> usize {
        (self.block_samples() / self.jammer.sweeps_per_block.max(1)).max(1)
    }

    pub fn layout(&self) -> Result<FrameLayout> {
        FrameLayout::new(self.system.beta, self.system.p)
    }

    pub fn fading_params(&self) -> FadingParams {
        FadingParams {
            m_sd: self.fading.m_sd,
            m_jd: self.fading.m_jd,
            omega: self.fading.omega,
        }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            vmd: self.vmd,
            ica: IcaSettings {
                tol: self.ica.tol,
                max_iter: self.ica.max_iter,
            },
            wpd: self.wpd,
        }
    }

    /// Check every field; the error lists all offending fields at once.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        let s = &self.system;
        if s.beta == 0 {
            errors.push("system.beta must be >= 1".to_string());
        }
        if s.p == 0 {
            errors.push("system.p must be >= 1".to_string());
        }
        if s.beta > 0 && s.p > 0 && !s.beta.is_multiple_of(s.p) {
            errors.push(format!(
                "system.beta ({}) must be a multiple of system.p ({})",
                s.beta, s.p
            ));
        }
        if s.bits_per_block == 0 {
            errors.push("system.bits_per_block must be >= 1".to_string());
        }
        if s.n_trials == 0 {
            errors.push("system.n_trials must be >= 1".to_string());
        }

        let sw = &self.sweep;
        if sw.ebn0_db.is_empty() {
            errors.push("sweep.ebn0_db must not be empty".to_string());
        }
        if sw.jsr_db.is_empty() {
            errors.push("sweep.jsr_db must not be empty".to_string());
        }
        if sw.receivers.is_empty() {
            errors.push("sweep.receivers must not be empty".to_string());
        }
        if sw
            .ebn0_db
            .iter()
            .any(|v| v.is_nan() || *v == f64::NEG_INFINITY)
        {
            errors.push(
                "sweep.ebn0_db entries must be numbers (inf allowed for noiseless)".to_string(),
            );
        }
        if sw.jsr_db.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            errors.push(
                "sweep.jsr_db entries must be numbers (-inf allowed for no jamming)".to_string(),
            );
        }
        let mut seen = sw.receivers.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != sw.receivers.len() {
            errors.push("sweep.receivers contains duplicates".to_string());
        }

        let j = &self.jammer;
        if !j.f_start_norm.is_finite() || !j.delta_f_norm.is_finite() || !j.theta_sw.is_finite() {
            errors.push("jammer frequencies and phase must be finite".to_string());
        }
        if j.sweeps_per_block == 0 {
            errors.push("jammer.sweeps_per_block must be >= 1".to_string());
        }

        let f = &self.fading;
        for (name, m) in [("m_sd", f.m_sd), ("m_jd", f.m_jd)] {
            if !(m >= 0.5) || !m.is_finite() {
                errors.push(format!("fading.{name} must be >= 0.5"));
            }
        }
        if !(f.omega > 0.0) || !f.omega.is_finite() {
            errors.push("fading.omega must be > 0".to_string());
        }

        self.vmd.validate(&mut errors, "vmd");
        if !(self.ica.tol > 0.0) {
            errors.push("ica.tol must be > 0".to_string());
        }
        if self.ica.max_iter == 0 {
            errors.push("ica.max_iter must be >= 1".to_string());
        }
        self.wpd.validate(&mut errors, "wpd");

        let block = self.block_samples();
        if block > 0 && self.wpd.level <= 16 && !block.is_multiple_of(1usize << self.wpd.level) {
            errors.push(format!(
                "block of {block} samples is not divisible by 2^wpd.level = {}",
                1usize << self.wpd.level
            ));
        }
        if self.vmd.n_modes > 0 && block < 2 * self.vmd.n_modes {
            errors.push("block too short for vmd.n_modes".to_string());
        }
        if self.vmd.n_modes < 2 && sw.receivers.contains(&ReceiverKind::VmdIcaWpd) {
            errors.push("vmd.n_modes must be >= 2 for the vmd-ica-wpd receiver".to_string());
        }
        if block > 0 && block < 100 && sw.receivers.contains(&ReceiverKind::VmdIcaWpd) {
            errors.push("ICA needs blocks of at least 100 samples".to_string());
        }

        let sp = &self.spectrogram;
        if sp.hop == 0 {
            errors.push("spectrogram.hop must be >= 1".to_string());
        }
        if sp.window < 2 || sp.window > block {
            errors.push(format!("spectrogram.window must be in [2, {block}]"));
        }

        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }
}
