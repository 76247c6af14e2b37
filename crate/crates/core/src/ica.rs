//! Two-channel FastICA (deflation, `g(x) = x^3`) and its inverse.
//!
//! Signals are real, so `W^H = W^T`. Expectations are sample means over the
//! block.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{argument, Error, Result};

/// Largest covariance condition number accepted before whitening.
pub const MAX_CONDITION: f64 = 1e12;

pub type Mat2 = [[f64; 2]; 2];

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

pub fn inverse(a: &Mat2) -> Option<Mat2> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some([
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ])
}

/// Largest absolute entry of `a - I`.
pub fn max_abs_from_identity(a: &Mat2) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - target).abs());
        }
    }
    worst
}

/// Symmetric eigen-decomposition: (eigenvalues, eigenvectors as columns).
fn sym_eigen(c: &Mat2) -> ([f64; 2], Mat2) {
    let (a, b, d) = (c[0][0], c[0][1], c[1][1]);
    let theta = 0.5 * (2.0 * b).atan2(a - d);
    let (s, co) = theta.sin_cos();
    let l1 = a * co * co + 2.0 * b * s * co + d * s * s;
    let l2 = a * s * s - 2.0 * b * s * co + d * co * co;
    ([l1, l2], [[co, -s], [s, co]])
}

fn apply(m: &Mat2, x: f64, y: f64) -> (f64, f64) {
    (m[0][0] * x + m[0][1] * y, m[1][0] * x + m[1][1] * y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhiteningModel {
    pub mean: [f64; 2],
    /// `C^{-1/2}`
    pub whitener: Mat2,
    /// `C^{1/2}`
    pub dewhitener: Mat2,
    pub covariance: Mat2,
}

impl WhiteningModel {
    pub fn fit(v1: &[f64], v2: &[f64]) -> Result<Self> {
        let n = v1.len() as f64;
        let mean = [v1.iter().sum::<f64>() / n, v2.iter().sum::<f64>() / n];
        let (mut c00, mut c01, mut c11) = (0.0, 0.0, 0.0);
        for (a, b) in v1.iter().zip(v2) {
            let (x, y) = (a - mean[0], b - mean[1]);
            c00 += x * x;
            c01 += x * y;
            c11 += y * y;
        }
        let covariance = [[c00 / n, c01 / n], [c01 / n, c11 / n]];
        let (vals, vecs) = sym_eigen(&covariance);
        let (hi, lo) = (vals[0].max(vals[1]), vals[0].min(vals[1]));
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !(condition <= MAX_CONDITION) {
            return Err(Error::DegenerateCovariance {
                condition,
                limit: MAX_CONDITION,
            });
        }
        let scaled = |f: &dyn Fn(f64) -> f64| -> Mat2 {
            let d = [[f(vals[0]), 0.0], [0.0, f(vals[1])]];
            mat_mul(&mat_mul(&vecs, &d), &transpose(&vecs))
        };
        Ok(Self {
            mean,
            whitener: scaled(&|l| 1.0 / l.sqrt()),
            dewhitener: scaled(&|l| l.sqrt()),
            covariance,
        })
    }

    pub fn whiten(&self, v1: &[f64], v2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        v1.iter()
            .zip(v2)
            .map(|(a, b)| apply(&self.whitener, a - self.mean[0], b - self.mean[1]))
            .unzip()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnmixingModel {
    /// Rows are the unit-norm separating vectors `w_1`, `w_2`.
    pub w: Mat2,
    pub w_inv: Mat2,
    pub iterations: [usize; 2],
    pub converged: [bool; 2],
}

impl UnmixingModel {
    pub fn from_rows(w: Mat2) -> Result<Self> {
        let w_inv = inverse(&w).ok_or_else(|| argument("singular unmixing matrix"))?;
        Ok(Self {
            w,
            w_inv,
            iterations: [0, 0],
            converged: [true, true],
        })
    }

    /// Negate row `p` of `W` together with column `p` of `W^{-1}`.
    pub fn flip_row(&mut self, p: usize) {
        self.w[p][0] = -self.w[p][0];
        self.w[p][1] = -self.w[p][1];
        self.w_inv[0][p] = -self.w_inv[0][p];
        self.w_inv[1][p] = -self.w_inv[1][p];
    }

    pub fn converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcaModel {
    pub whitening: WhiteningModel,
    pub unmixing: UnmixingModel,
    /// Block length the model was fitted on.
    pub len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcaSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IcaSettings {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 200,
        }
    }
}

fn check_pair(v1: &[f64], v2: &[f64]) -> Result<()> {
    if v1.len() != v2.len() {
        return Err(argument(format!(
            "channel lengths differ: {} vs {}",
            v1.len(),
            v2.len()
        )));
    }
    Ok(())
}

/// Fit whitening and a deflationary FastICA unmixing matrix.
pub fn fit_ica<R: Rng + ?Sized>(
    v1: &[f64],
    v2: &[f64],
    settings: &IcaSettings,
    rng: &mut R,
) -> Result<IcaModel> {
    check_pair(v1, v2)?;
    if v1.len() < 100 {
        return Err(argument(format!(
            "ICA needs at least 100 samples, got {}",
            v1.len()
        )));
    }
    if !(settings.tol > 0.0) || settings.max_iter == 0 {
        return Err(argument("ICA tolerance must be > 0 and max_iter >= 1"));
    }
    let whitening = WhiteningModel::fit(v1, v2)?;
    let (z1, z2) = whitening.whiten(v1, v2);
    let n = z1.len() as f64;

    let mut rows: Vec<[f64; 2]> = Vec::with_capacity(2);
    let mut iterations = [0; 2];
    let mut converged = [false; 2];
    for p in 0..2 {
        let mut w = random_unit(rng);
        w = decorrelate(w, &rows).unwrap_or_else(|| orthogonal_complement(&rows));
        for it in 1..=settings.max_iter {
            iterations[p] = it;
            let (mut e1, mut e2, mut ey2) = (0.0, 0.0, 0.0);
            for (a, b) in z1.iter().zip(&z2) {
                let y = w[0] * a + w[1] * b;
                let y2 = y * y;
                let y3 = y2 * y;
                e1 += a * y3;
                e2 += b * y3;
                ey2 += y2;
            }
            let g_prime = 3.0 * ey2 / n;
            let candidate = [e1 / n - g_prime * w[0], e2 / n - g_prime * w[1]];
            let next =
                decorrelate(candidate, &rows).unwrap_or_else(|| orthogonal_complement(&rows));
            let alignment = (next[0] * w[0] + next[1] * w[1]).abs();
            w = next;
            if alignment > 1.0 - settings.tol {
                converged[p] = true;
                break;
            }
        }
        rows.push(w);
    }
    let w = [rows[0], rows[1]];
    let w_inv =
        inverse(&w).ok_or_else(|| argument("FastICA produced a singular unmixing matrix"))?;
    Ok(IcaModel {
        whitening,
        unmixing: UnmixingModel {
            w,
            w_inv,
            iterations,
            converged,
        },
        len: v1.len(),
    })
}

fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> [f64; 2] {
    loop {
        let v = [
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        ];
        let norm = v[0].hypot(v[1]);
        if norm > 1e-12 {
            return [v[0] / norm, v[1] / norm];
        }
    }
}

/// Gram-Schmidt against earlier rows, then normalize. `None` if nothing is left.
fn decorrelate(mut w: [f64; 2], rows: &[[f64; 2]]) -> Option<[f64; 2]> {
    for r in rows {
        let dot = r[0] * w[0] + r[1] * w[1];
        w[0] -= dot * r[0];
        w[1] -= dot * r[1];
    }
    let norm = w[0].hypot(w[1]);
    (norm > 1e-300 && norm.is_finite()).then(|| [w[0] / norm, w[1] / norm])
}

fn orthogonal_complement(rows: &[[f64; 2]]) -> [f64; 2] {
    match rows.first() {
        Some(r) => [-r[1], r[0]],
        None => [1.0, 0.0],
    }
}

impl IcaModel {
    fn check_len(&self, a: &[f64], b: &[f64]) -> Result<()> {
        check_pair(a, b)?;
        if a.len() != self.len {
            return Err(argument(format!(
                "model fitted on {} samples, got {}",
                self.len,
                a.len()
            )));
        }
        Ok(())
    }

    /// `[I_1; I_2] = W C^{-1/2} (R - mean)`
    pub fn separate(&self, v1: &[f64], v2: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_len(v1, v2)?;
        let m = mat_mul(&self.unmixing.w, &self.whitening.whitener);
        let mean = self.whitening.mean;
        Ok(v1
            .iter()
            .zip(v2)
            .map(|(a, b)| apply(&m, a - mean[0], b - mean[1]))
            .unzip())
    }

    /// `II = sum over channels of (C^{1/2} W^{-1} [W_1; W_2] + mean)`
    pub fn inverse_ica(&self, w1: &[f64], w2: &[f64]) -> Result<Vec<f64>> {
        self.check_len(w1, w2)?;
        let m = mat_mul(&self.whitening.dewhitener, &self.unmixing.w_inv);
        let offset = self.whitening.mean[0] + self.whitening.mean[1];
        Ok(w1
            .iter()
            .zip(w2)
            .map(|(a, b)| {
                let (x, y) = apply(&m, *a, *b);
                x + y + offset
            })
            .collect())
    }
}
