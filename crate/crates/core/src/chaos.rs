//! Logistic-map chaos generation and NR-DCSK framing.
//!
//! Each bit occupies `2 * beta` samples. The first half (reference) carries
//! `beta / p` chaotic values, each held for `p` samples; the second half
//! (information-bearing, IB) is the reference multiplied by the bit.

use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};

/// One step of the logistic map `x -> 1 - 2x^2` on `[-1, 1]`.
pub fn logistic_next(x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!(
            "logistic map state {x} outside [-1, 1]"
        )));
    }
    Ok(1.0 - 2.0 * x * x)
}

/// How the chaotic state evolves from one bit to the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Chaining {
    /// The map keeps iterating across bits: bit `l+1` continues where bit `l` stopped.
    #[default]
    Continuous,
    /// Every bit restarts the map from `x0`, so all bits share one reference.
    Restart,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChaosParams {
    beta: usize,
    p: usize,
    x0: f64,
}

impl ChaosParams {
    pub fn new(beta: usize, p: usize, x0: f64) -> Result<Self> {
        if beta == 0 || p == 0 {
            return Err(argument(format!(
                "beta ({beta}) and p ({p}) must be positive"
            )));
        }
        if !beta.is_multiple_of(p) {
            return Err(argument(format!(
                "beta ({beta}) must be a multiple of p ({p})"
            )));
        }
        if !(x0.abs() < 1.0) || x0 == 0.5 {
            return Err(argument(format!(
                "initial state {x0} must lie in (-1, 1) and avoid the fixed point 0.5"
            )));
        }
        Ok(Self { beta, p, x0 })
    }

    pub fn beta(&self) -> usize {
        self.beta
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    /// Number of distinct chaotic values per bit.
    pub fn chips_per_bit(&self) -> usize {
        self.beta / self.p
    }

    /// Samples per bit (`2 * beta`).
    pub fn frame_len(&self) -> usize {
        2 * self.beta
    }

    pub fn with_x0(self, x0: f64) -> Result<Self> {
        Self::new(self.beta, self.p, x0)
    }
}

/// `n` successive map iterates starting after `x0` (the seed itself is not emitted).
pub fn generate_chaos(x0: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(argument("chaos length must be at least 1"));
    }
    let mut out = Vec::with_capacity(n);
    let mut x = x0;
    for _ in 0..n {
        x = logistic_next(x)?;
        out.push(x);
    }
    Ok(out)
}

/// One transmitted bit.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaoticFrame {
    pub bit: i8,
    /// Reference half followed by the IB half, `2 * beta` samples.
    pub samples: Vec<f64>,
    /// The `beta / p` chaotic values before replication.
    pub raw_chaos: Vec<f64>,
}

impl ChaoticFrame {
    fn build(bit: i8, raw_chaos: Vec<f64>, p: usize) -> Self {
        let beta = raw_chaos.len() * p;
        let mut samples = Vec::with_capacity(2 * beta);
        for &x in &raw_chaos {
            samples.extend(std::iter::repeat_n(x, p));
        }
        let sign = f64::from(bit);
        samples.extend_from_within(..beta);
        for s in &mut samples[beta..] {
            *s *= sign;
        }
        Self {
            bit,
            samples,
            raw_chaos,
        }
    }

    pub fn reference(&self) -> &[f64] {
        &self.samples[..self.samples.len() / 2]
    }

    pub fn information(&self) -> &[f64] {
        &self.samples[self.samples.len() / 2..]
    }
}

fn check_bits(bits: &[i8]) -> Result<()> {
    match bits.iter().position(|&b| b != 1 && b != -1) {
        Some(i) => Err(argument(format!(
            "bit {i} has value {}; expected -1 or +1",
            bits[i]
        ))),
        None => Ok(()),
    }
}

/// Build one frame per bit with the map state chained across bits.
pub fn modulate(bits: &[i8], params: &ChaosParams) -> Result<Vec<ChaoticFrame>> {
    modulate_with(bits, params, Chaining::Continuous)
}

pub fn modulate_with(
    bits: &[i8],
    params: &ChaosParams,
    chaining: Chaining,
) -> Result<Vec<ChaoticFrame>> {
    check_bits(bits)?;
    let chips = params.chips_per_bit();
    let mut state = params.x0;
    let mut frames = Vec::with_capacity(bits.len());
    for &bit in bits {
        if chaining == Chaining::Restart {
            state = params.x0;
        }
        let raw = generate_chaos(state, chips)?;
        state = *raw.last().expect("chips_per_bit >= 1");
        frames.push(ChaoticFrame::build(bit, raw, params.p));
    }
    Ok(frames)
}

/// Concatenate frames into one transmit stream.
pub fn stream(frames: &[ChaoticFrame]) -> Vec<f64> {
    frames
        .iter()
        .flat_map(|f| f.samples.iter().copied())
        .collect()
}
