//! Wavelet packet decomposition with periodic extension, the MAD-based
//! universal threshold, and narrowband jamming estimation.
//!
//! With orthonormal conjugate-quadrature filters and periodic boundaries
//! every split is an orthogonal transform, so reconstruction is exact and
//! coefficient energy equals signal energy.

use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};

const DB4: [f64; 8] = [
    0.2303778133088965,
    0.7148465705529157,
    0.6308807679298589,
    -0.027983769416859854,
    -0.18703481171909309,
    0.030841381835560764,
    0.0328830116668852,
    -0.010597401785069032,
];

const DB8: [f64; 16] = [
    0.05441584224310401,
    0.31287159091429995,
    0.6756307362972898,
    0.5853546836542067,
    -0.015829105256349306,
    -0.2840155429615469,
    0.0004724845739132828,
    0.12874742662047847,
    -0.017369301001807547,
    -0.044088253930794755,
    0.013981027917398282,
    0.008746094047405777,
    -0.004870352993451574,
    -0.00039174037337694705,
    0.0006754494064505693,
    -0.00011747678412476953,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveletKind {
    Haar,
    #[default]
    Db4,
    Db8,
}

impl WaveletKind {
    pub fn name(self) -> &'static str {
        match self {
            WaveletKind::Haar => "haar",
            WaveletKind::Db4 => "db4",
            WaveletKind::Db8 => "db8",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "haar" => Ok(Self::Haar),
            "db4" => Ok(Self::Db4),
            "db8" => Ok(Self::Db8),
            other => Err(argument(format!(
                "unknown wavelet basis '{other}' (haar, db4, db8)"
            ))),
        }
    }

    pub const ALL: [WaveletKind; 3] = [WaveletKind::Haar, WaveletKind::Db4, WaveletKind::Db8];
}

/// Orthonormal two-channel filter pair.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletBasis {
    pub name: &'static str,
    /// Scaling (low-pass) taps.
    pub lowpass: Vec<f64>,
    /// Wavelet (high-pass) taps, `g[k] = (-1)^k h[L-1-k]`.
    pub highpass: Vec<f64>,
}

impl WaveletBasis {
    pub fn from_lowpass(name: &'static str, lowpass: Vec<f64>) -> Self {
        let n = lowpass.len();
        let highpass = (0..n)
            .map(|k| {
                let h = lowpass[n - 1 - k];
                if k % 2 == 0 {
                    h
                } else {
                    -h
                }
            })
            .collect();
        Self {
            name,
            lowpass,
            highpass,
        }
    }

    pub fn new(kind: WaveletKind) -> Self {
        match kind {
            WaveletKind::Haar => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                Self::from_lowpass("haar", vec![h, h])
            }
            WaveletKind::Db4 => Self::from_lowpass("db4", DB4.to_vec()),
            WaveletKind::Db8 => Self::from_lowpass("db8", DB8.to_vec()),
        }
    }

    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowpass.is_empty()
    }
}

/// Periodized analysis step: returns (approximation, detail), each half length.
fn split(x: &[f64], basis: &WaveletBasis) -> (Vec<f64>, Vec<f64>) {
    let m = x.len();
    let half = m / 2;
    let mut lo = vec![0.0; half];
    let mut hi = vec![0.0; half];
    for n in 0..half {
        let (mut a, mut d) = (0.0, 0.0);
        for (k, (h, g)) in basis.lowpass.iter().zip(&basis.highpass).enumerate() {
            let v = x[(2 * n + k) % m];
            a += h * v;
            d += g * v;
        }
        lo[n] = a;
        hi[n] = d;
    }
    (lo, hi)
}

/// Adjoint of [`split`].
fn merge(lo: &[f64], hi: &[f64], basis: &WaveletBasis) -> Vec<f64> {
    let m = 2 * lo.len();
    let mut x = vec![0.0; m];
    for n in 0..lo.len() {
        let (a, d) = (lo[n], hi[n]);
        for (k, (h, g)) in basis.lowpass.iter().zip(&basis.highpass).enumerate() {
            x[(2 * n + k) % m] += h * a + g * d;
        }
    }
    x
}

fn gray_encode(i: usize) -> usize {
    i ^ (i >> 1)
}

/// Leaves of a depth-`level` packet tree.
#[derive(Debug, Clone, PartialEq)]
pub struct WpdCoefficients {
    pub level: usize,
    /// `2^level` leaves ordered by ascending frequency band.
    pub nodes: Vec<Vec<f64>>,
    pub original_len: usize,
}

impl WpdCoefficients {
    pub fn coefficient_count(&self) -> usize {
        self.nodes.iter().map(Vec::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.nodes.iter().flatten()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.nodes.iter_mut().flatten()
    }

    pub fn energy(&self) -> f64 {
        self.iter().map(|c| c * c).sum()
    }
}

pub fn wpd_decompose(
    signal: &[f64],
    basis: &WaveletBasis,
    level: usize,
) -> Result<WpdCoefficients> {
    if level == 0 {
        return Err(argument("decomposition level must be at least 1"));
    }
    if signal.len() < basis.len() {
        return Err(argument(format!(
            "signal length {} is shorter than the {}-tap filter",
            signal.len(),
            basis.len()
        )));
    }
    let block = 1usize << level;
    if !signal.len().is_multiple_of(block) {
        return Err(argument(format!(
            "signal length {} must be divisible by 2^{level} = {block}",
            signal.len()
        )));
    }
    // natural (Paley) order: children of node i are 2i (low) and 2i+1 (high)
    let mut nodes = vec![signal.to_vec()];
    for _ in 0..level {
        let mut next = Vec::with_capacity(nodes.len() * 2);
        for node in &nodes {
            let (lo, hi) = split(node, basis);
            next.push(lo);
            next.push(hi);
        }
        nodes = next;
    }
    let mut natural: Vec<Option<Vec<f64>>> = nodes.into_iter().map(Some).collect();
    let ordered = (0..natural.len())
        .map(|f| {
            natural[gray_encode(f)]
                .take()
                .expect("gray code is a permutation")
        })
        .collect();
    Ok(WpdCoefficients {
        level,
        nodes: ordered,
        original_len: signal.len(),
    })
}

pub fn wpd_reconstruct(coeffs: &WpdCoefficients, basis: &WaveletBasis) -> Result<Vec<f64>> {
    let leaves = 1usize << coeffs.level;
    if coeffs.nodes.len() != leaves {
        return Err(argument(format!(
            "expected {leaves} leaves at level {}, found {}",
            coeffs.level,
            coeffs.nodes.len()
        )));
    }
    let leaf_len = coeffs.original_len >> coeffs.level;
    if coeffs.nodes.iter().any(|n| n.len() != leaf_len) {
        return Err(argument(
            "leaf lengths do not match the original signal length",
        ));
    }
    let mut natural = vec![Vec::new(); leaves];
    for (f, node) in coeffs.nodes.iter().enumerate() {
        natural[gray_encode(f)] = node.clone();
    }
    let mut nodes = natural;
    while nodes.len() > 1 {
        nodes = nodes
            .chunks(2)
            .map(|pair| merge(&pair[0], &pair[1], basis))
            .collect();
    }
    Ok(nodes.pop().expect("root node"))
}

fn median_in_place(v: &mut [f64]) -> f64 {
    let n = v.len();
    let mid = n / 2;
    let (_, upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Median absolute deviation about the median.
pub fn median_absolute_deviation(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(argument("MAD of an empty set"));
    }
    let mut work = values.to_vec();
    let med = median_in_place(&mut work);
    for (w, v) in work.iter_mut().zip(values) {
        *w = (v - med).abs();
    }
    Ok(median_in_place(&mut work))
}

/// `gamma = (MAD / 0.675) * sqrt(2 ln(N ln N) / ln 2)` for pooled coefficients
/// of a length-`n` signal.
pub fn universal_threshold_values(coeffs: &[f64], n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::Domain(format!(
            "signal length {n} < 3 leaves ln(N ln N) non-positive"
        )));
    }
    if coeffs.len() < 2 {
        return Err(argument(
            "universal threshold needs at least two coefficients",
        ));
    }
    let sigma = median_absolute_deviation(coeffs)? / 0.675;
    let nf = n as f64;
    Ok(sigma * (2.0 * (nf * nf.ln()).ln() / std::f64::consts::LN_2).sqrt())
}

pub fn universal_threshold(coeffs: &WpdCoefficients) -> Result<f64> {
    let pooled: Vec<f64> = coeffs.iter().copied().collect();
    universal_threshold_values(&pooled, coeffs.original_len)
}

/// Which side of the threshold is taken as the jamming estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdPolarity {
    /// Zero `|c| <= gamma`; the surviving large coefficients form the estimate.
    #[default]
    KeepLarge,
    /// Zero `|c| > gamma`; the small coefficients form the estimate.
    ZeroLarge,
}

/// Hard thresholding. Idempotent for a fixed `gamma`.
pub fn apply_threshold(coeffs: &mut WpdCoefficients, gamma: f64, polarity: ThresholdPolarity) {
    for c in coeffs.iter_mut() {
        let large = c.abs() > gamma;
        let zero = match polarity {
            ThresholdPolarity::KeepLarge => !large,
            ThresholdPolarity::ZeroLarge => large,
        };
        if zero {
            *c = 0.0;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WpdConfig {
    pub basis: WaveletKind,
    pub level: usize,
    pub polarity: ThresholdPolarity,
    /// When false the jamming estimate is identically zero.
    pub enabled: bool,
}

impl Default for WpdConfig {
    fn default() -> Self {
        Self {
            basis: WaveletKind::Db4,
            level: 4,
            polarity: ThresholdPolarity::KeepLarge,
            enabled: true,
        }
    }
}

impl WpdConfig {
    pub fn validate(&self, errors: &mut Vec<String>, prefix: &str) {
        if self.level == 0 {
            errors.push(format!("{prefix}.level must be >= 1"));
        }
        if self.level > 16 {
            errors.push(format!(
                "{prefix}.level {} is unreasonably deep",
                self.level
            ));
        }
    }
}

/// Jamming estimate: threshold the packet coefficients and invert.
pub fn estimate_jamming(signal: &[f64], config: &WpdConfig) -> Result<Vec<f64>> {
    if !config.enabled {
        return Ok(vec![0.0; signal.len()]);
    }
    let basis = WaveletBasis::new(config.basis);
    let mut coeffs = wpd_decompose(signal, &basis, config.level)?;
    let gamma = universal_threshold(&coeffs)?;
    apply_threshold(&mut coeffs, gamma, config.polarity);
    wpd_reconstruct(&coeffs, &basis)
}

/// `signal - estimate_jamming(signal)`.
pub fn dejam(signal: &[f64], config: &WpdConfig) -> Result<Vec<f64>> {
    let estimate = estimate_jamming(signal, config)?;
    Ok(signal.iter().zip(&estimate).map(|(x, j)| x - j).collect())
}
