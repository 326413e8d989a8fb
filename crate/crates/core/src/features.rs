//! Low-mode Fourier representation of sensor readings, orientation- and
//! scale-free relative magnitudes, and their principal components.

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::solver::StressReading;

pub type C64 = Complex<f64>;

/// Which traction channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    Normal,
    Tangential,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FourierFeatures {
    pub n: usize,
    pub m: usize,
    /// Coefficients `c_0..=c_M` of the normal channel.
    pub normal: Vec<C64>,
    /// Coefficients `c_0..=c_M` of the tangential channel.
    pub tangential: Vec<C64>,
    /// Root-sum-square of `|c_k|` over `k = 1..=M` and both channels, Pa.
    /// Set to zero when it is at rounding level relative to the reading.
    pub scale: f64,
    /// Relative magnitudes: normal `k = 1..=M`, then tangential `k = 1..=M`.
    /// Empty when `scale` is zero.
    pub relative: Vec<f64>,
}

/// `c_k = (1/n) Σ_j f_j exp(2πi jk/n)` for `k = 0..=m`.
pub fn coefficients(values: &[f64], m: usize) -> Vec<C64> {
    let n = values.len();
    (0..=m)
        .map(|k| {
            let mut acc = C64::new(0.0, 0.0);
            for (j, f) in values.iter().enumerate() {
                // reduce jk mod n first so large indices keep full precision
                let phase = TAU * ((j * k) % n) as f64 / n as f64;
                acc += C64::from_polar(*f, phase);
            }
            acc / n as f64
        })
        .collect()
}

pub fn fourier_coefficients(reading: &StressReading, m: usize) -> Result<FourierFeatures> {
    let n = reading.len();
    if n < 2 || reading.tangential.len() != n {
        return Err(Error::DegenerateInput(format!("reading has {n} sensors")));
    }
    if m == 0 || 2 * m >= n {
        return Err(Error::Config(format!("mode cutoff {m} must satisfy 0 < M < n/2 = {}", n as f64 / 2.0)));
    }
    let normal = coefficients(&reading.normal, m);
    let tangential = coefficients(&reading.tangential, m);
    let mut scale = normal[1..].iter().chain(&tangential[1..]).map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let peak = reading.normal.iter().chain(&reading.tangential).fold(0.0f64, |a, v| a.max(v.abs()));
    if !(scale > 1e-12 * peak) {
        scale = 0.0;
    }
    let relative = if scale > 0.0 {
        normal[1..].iter().chain(&tangential[1..]).map(|c| c.norm() / scale).collect()
    } else {
        Vec::new()
    };
    Ok(FourierFeatures { n, m, normal, tangential, scale, relative })
}

fn evaluate(c: &[C64], theta: f64) -> f64 {
    c[0].re + 2.0 * c[1..].iter().enumerate().map(|(i, ck)| (ck * C64::from_polar(1.0, -theta * (i + 1) as f64)).re).sum::<f64>()
}

fn derivative(c: &[C64], theta: f64) -> f64 {
    2.0 * c[1..]
        .iter()
        .enumerate()
        .map(|(i, ck)| {
            let k = (i + 1) as f64;
            (ck * C64::new(0.0, -k) * C64::from_polar(1.0, -theta * k)).re
        })
        .sum::<f64>()
}

impl FourierFeatures {
    /// Rejects features of a reading with no variation.
    pub fn require_signal(&self) -> Result<()> {
        if self.scale > 0.0 && self.scale.is_finite() {
            Ok(())
        } else {
            Err(Error::DegenerateInput("reading has no non-constant Fourier content".into()))
        }
    }

    pub fn coefficients(&self, channel: Channel) -> &[C64] {
        match channel {
            Channel::Normal => &self.normal,
            Channel::Tangential => &self.tangential,
        }
    }

    /// Band-limited value of one channel at body angle `theta`.
    pub fn value(&self, channel: Channel, theta: f64) -> f64 {
        evaluate(self.coefficients(channel), theta)
    }

    /// Angular derivative of the interpolant, Pa/rad.
    pub fn derivative(&self, channel: Channel, theta: f64) -> f64 {
        derivative(self.coefficients(channel), theta)
    }

    /// Relative magnitudes as a checked slice.
    pub fn relative(&self) -> Result<&[f64]> {
        self.require_signal()?;
        Ok(&self.relative)
    }
}

/// `Re(c_0 + 2 Σ_{k=1..M} c_k e^{-iθk})` for both channels.
pub fn interpolate_stress(features: &FourierFeatures, theta: f64) -> (f64, f64) {
    (features.value(Channel::Normal, theta), features.value(Channel::Tangential, theta))
}

/// Principal-component model over relative-magnitude vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub modes: usize,
    /// Training means, ordered like [`FourierFeatures::relative`].
    pub means: Vec<f64>,
    /// One weight vector per component.
    pub weights: Vec<Vec<f64>>,
    /// Variance along each kept component.
    pub variances: Vec<f64>,
    /// Fraction of total variance along each kept component.
    pub explained: Vec<f64>,
    pub samples: usize,
}

impl PcaModel {
    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        let dim = 2 * self.modes;
        if self.means.len() != dim || self.weights.iter().any(|w| w.len() != dim) || self.weights.is_empty() {
            return Err(Error::ModelIncompatible(format!("PCA model shapes do not match M = {}", self.modes)));
        }
        Ok(())
    }

    pub fn project(&self, relative: &[f64]) -> Result<Vec<f64>> {
        if relative.len() != self.means.len() {
            return Err(Error::ModelIncompatible(format!(
                "feature length {} but model expects {}",
                relative.len(),
                self.means.len()
            )));
        }
        Ok(self
            .weights
            .iter()
            .map(|w| w.iter().zip(relative).zip(&self.means).map(|((a, m), mh)| a * (m - mh)).sum())
            .collect())
    }

    /// Weights of the first two components of the reference models. They
    /// come without training means; the bundled reference model set
    /// supplies its own.
    pub fn reference_weights() -> Vec<Vec<f64>> {
        vec![
            vec![-0.419, 0.508, -0.268, 0.060, 0.027, 0.010, -0.419, 0.473, -0.298, 0.047, 0.018, 0.006],
            vec![0.451, 0.184, -0.266, -0.352, -0.181, -0.080, 0.451, 0.479, -0.097, -0.258, -0.132, -0.052],
        ]
    }
}

/// First two principal components `(p_1, p_2)`.
pub fn principal_components(features: &FourierFeatures, model: &PcaModel) -> Result<(f64, f64)> {
    if features.m != model.modes {
        return Err(Error::ModelIncompatible(format!("features have M = {}, model {}", features.m, model.modes)));
    }
    if model.components() < 2 {
        return Err(Error::ModelIncompatible("model has fewer than two components".into()));
    }
    let p = model.project(features.relative()?)?;
    Ok((p[0], p[1]))
}

/// Covariance eigen-decomposition keeping `h` components, ordered by
/// decreasing variance, each signed so its largest-magnitude weight is
/// positive.
pub fn fit_pca(samples: &[Vec<f64>], h: usize) -> Result<PcaModel> {
    let rows = samples.len();
    let dim = samples.first().map_or(0, |s| s.len());
    if h == 0 || dim < h || !dim.is_multiple_of(2) {
        return Err(Error::Config(format!("cannot keep {h} components of {dim}-dimensional features")));
    }
    if rows < h + 1 {
        return Err(Error::DegenerateDataset(format!("{rows} samples for {h} components")));
    }
    if samples.iter().any(|s| s.len() != dim || s.iter().any(|v| !v.is_finite())) {
        return Err(Error::DegenerateDataset("feature vectors differ in length or are not finite".into()));
    }
    let mut means = vec![0.0; dim];
    for s in samples {
        for (m, v) in means.iter_mut().zip(s) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= rows as f64);
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for s in samples {
        for i in 0..dim {
            let di = s[i] - means[i];
            for j in 0..=i {
                cov[(i, j)] += di * (s[j] - means[j]);
            }
        }
    }
    for i in 0..dim {
        for j in 0..=i {
            let v = cov[(i, j)] / (rows - 1) as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(cov);
    let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let floor = 1e-12 * total.max(f64::MIN_POSITIVE);
    let mut weights = Vec::with_capacity(h);
    let mut variances = Vec::with_capacity(h);
    for &idx in order.iter().take(h) {
        let var = eig.eigenvalues[idx];
        if !(total > 0.0) || var <= floor {
            return Err(Error::DegenerateDataset(format!("covariance has rank below {h}")));
        }
        let mut w: Vec<f64> = eig.eigenvectors.column(idx).iter().cloned().collect();
        let lead = w.iter().cloned().fold(0.0, |acc: f64, v| if v.abs() > acc.abs() { v } else { acc });
        if lead < 0.0 {
            w.iter_mut().for_each(|v| *v = -*v);
        }
        weights.push(w);
        variances.push(var);
    }
    let explained = variances.iter().map(|v| v / total).collect();
    Ok(PcaModel { modes: dim / 2, means, weights, variances, explained, samples: rows })
}
