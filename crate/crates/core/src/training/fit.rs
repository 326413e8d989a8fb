//! Regression fits: logistic quasi-likelihood, gamma GLM with log link,
//! ordinary least squares, and the full model set.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{Dataset, SamplerConfig, Split};
use crate::error::{Error, Result};
use crate::estimators::{convex_hull, DiameterRegression, ModelMeta, ModelSet, PositionRegression, SpeedRatioFit};
use crate::features::{fit_pca, fourier_coefficients, principal_components};
use crate::solver::Discretization;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    pub modes: usize,
    pub components: usize,
    pub max_iter: usize,
    /// IRLS stops when no coefficient moves by more than this (relative).
    pub tolerance: f64,
    pub speed_floor: f64,
    /// Weight speed-ratio residuals by `1/R²`, fitting relative rather than
    /// absolute errors.
    pub relative_speed_fit: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { modes: 6, components: 2, max_iter: 100, tolerance: 1e-12, speed_floor: 0.01, relative_speed_fit: false }
    }
}

/// Solves `(XᵀWX) β = XᵀWz`, returning `β` and `(XᵀWX)⁻¹`.
fn weighted_normal(x: &DMatrix<f64>, w: &DVector<f64>, z: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let xtw = DMatrix::from_fn(x.ncols(), x.nrows(), |i, j| x[(j, i)] * w[j]);
    let a = &xtw * x;
    let eig = SymmetricEigen::new(a.clone());
    let hi = eig.eigenvalues.amax();
    let lo = eig.eigenvalues.min();
    if !(hi > 0.0) || !(lo > 1e-12 * hi) {
        return Err(Error::FitFailure("design matrix is rank deficient".into()));
    }
    let chol = a.cholesky().ok_or_else(|| Error::FitFailure("normal equations not positive definite".into()))?;
    let beta = chol.solve(&(&xtw * z));
    Ok((beta, chol.inverse()))
}

fn converged(old: &DVector<f64>, new: &DVector<f64>, tol: f64) -> bool {
    old.iter().zip(new.iter()).all(|(a, b)| (a - b).abs() <= tol * (1.0 + b.abs()))
}

fn check_rows<const N: usize>(rows: &[[f64; N]], min: usize, what: &str) -> Result<()> {
    if rows.len() < min {
        return Err(Error::FitFailure(format!("{what} needs at least {min} rows, got {}", rows.len())));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::FitFailure(format!("{what} rows contain non-finite values")));
    }
    Ok(())
}

/// Logistic regression of a fractional response on `(p_1, p_2)` by IRLS on
/// the Bernoulli quasi-likelihood. Rows are `(p_1, p_2, ρ)`. Standard errors
/// come from the inverse information matrix with unit dispersion.
pub fn fit_logistic(rows: &[[f64; 3]], opts: &FitOptions) -> Result<PositionRegression> {
    check_rows(rows, 10, "logistic fit")?;
    if rows.iter().any(|r| !(0.0..=1.0).contains(&r[2])) {
        return Err(Error::FitFailure("logistic response outside [0, 1]".into()));
    }
    let n = rows.len();
    let x = DMatrix::from_fn(n, 3, |i, j| if j == 0 { 1.0 } else { rows[i][j - 1] });
    let y = DVector::from_fn(n, |i, _| rows[i][2]);
    let mut beta = DVector::zeros(3);
    for _ in 0..opts.max_iter {
        let eta = &x * &beta;
        let mu = eta.map(|e| 1.0 / (1.0 + (-e).exp()));
        let w = mu.map(|m| (m * (1.0 - m)).max(1e-300));
        let z = DVector::from_fn(n, |i, _| eta[i] + (y[i] - mu[i]) / w[i]);
        let (next, cov) = weighted_normal(&x, &w, &z)?;
        if converged(&beta, &next, opts.tolerance) {
            return Ok(PositionRegression {
                beta: [next[0], next[1], next[2]],
                std_err: [cov[(0, 0)].sqrt(), cov[(1, 1)].sqrt(), cov[(2, 2)].sqrt()],
            });
        }
        beta = next;
    }
    Err(Error::FitFailure(format!("logistic IRLS did not converge in {} iterations", opts.max_iter)))
}

/// Gamma GLM with log link on `(1, p_1, p_2, p_1², p_2², p_1 p_2)`. Rows are
/// `(p_1, p_2, d)`. Standard errors use the Pearson dispersion estimate.
pub fn fit_diameter_glm(rows: &[[f64; 3]], opts: &FitOptions) -> Result<DiameterRegression> {
    check_rows(rows, 12, "diameter fit")?;
    if rows.iter().any(|r| r[2] <= 0.0) {
        return Err(Error::FitFailure("diameters must be positive".into()));
    }
    let n = rows.len();
    let x = DMatrix::from_fn(n, 6, |i, j| DiameterRegression::design(rows[i][0], rows[i][1])[j]);
    let y = DVector::from_fn(n, |i, _| rows[i][2]);
    let ones = DVector::from_element(n, 1.0);
    // log-linear least squares start
    let (mut beta, _) = weighted_normal(&x, &ones, &y.map(f64::ln))?;
    for _ in 0..opts.max_iter {
        let eta = &x * &beta;
        let mu = eta.map(f64::exp);
        // for the log link the gamma working weights are all one
        let z = DVector::from_fn(n, |i, _| eta[i] + (y[i] - mu[i]) / mu[i]);
        let (next, cov) = weighted_normal(&x, &ones, &z)?;
        if converged(&beta, &next, opts.tolerance) {
            let mu = (&x * &next).map(f64::exp);
            let phi = (0..n).map(|i| ((y[i] - mu[i]) / mu[i]).powi(2)).sum::<f64>() / (n - 6) as f64;
            let se: Vec<f64> = (0..6).map(|j| (phi * cov[(j, j)]).sqrt()).collect();
            return Ok(DiameterRegression {
                beta: [next[0], next[1], next[2], next[3], next[4], next[5]],
                std_err: [se[0], se[1], se[2], se[3], se[4], se[5]],
            });
        }
        beta = next;
    }
    Err(Error::FitFailure(format!("gamma IRLS did not converge in {} iterations", opts.max_iter)))
}

/// Least squares of the speed ratio on the odds `(1 − ρ)/ρ`. Rows are
/// `(ρ, R)`. Rows with `ρ` below `floor` are left out: estimation clamps
/// such positions to the floor, where the odds no longer track the ratio.
/// With `relative` set, residuals are weighted by `1/R²`.
pub fn fit_speed_ratio(rows: &[[f64; 2]], floor: f64, relative: bool) -> Result<SpeedRatioFit> {
    check_rows(rows, 3, "speed-ratio fit")?;
    let kept: Vec<[f64; 2]> = rows.iter().filter(|r| r[0] >= floor).cloned().collect();
    check_rows(&kept, 3, "speed-ratio fit above the relative-position floor")?;
    let n = kept.len();
    let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { (1.0 - kept[i][0]) / kept[i][0] });
    let y = DVector::from_fn(n, |i, _| kept[i][1]);
    let w = DVector::from_fn(n, |i, _| if relative { kept[i][1].powi(-2) } else { 1.0 });
    let (beta, cov) = weighted_normal(&x, &w, &y)?;
    let resid = &y - &x * &beta;
    let s2 = resid.iter().zip(w.iter()).map(|(r, w)| w * r * r).sum::<f64>() / (n - 2).max(1) as f64;
    if !(beta[1] > 0.0) {
        return Err(Error::FitFailure(format!("speed-ratio slope {} is not positive", beta[1])));
    }
    Ok(SpeedRatioFit {
        a: beta[0],
        b: beta[1],
        a_err: (s2 * cov[(0, 0)]).sqrt(),
        b_err: (s2 * cov[(1, 1)]).sqrt(),
        floor,
    })
}

/// Fits every model on the training split.
pub fn train(data: &Dataset, cfg: &SamplerConfig, disc: &Discretization, opts: &FitOptions) -> Result<ModelSet> {
    let train: Vec<_> = data.split(Split::Train).collect();
    if train.is_empty() {
        return Err(Error::DegenerateDataset("no training samples".into()));
    }
    let features = train
        .iter()
        .map(|s| {
            let f = fourier_coefficients(&s.reading, opts.modes)?;
            f.require_signal()?;
            Ok(f)
        })
        .collect::<Result<Vec<_>>>()?;
    let relative: Vec<Vec<f64>> = features.iter().map(|f| f.relative.clone()).collect();
    let pca = fit_pca(&relative, opts.components)?;
    let pcs = features.iter().map(|f| principal_components(f, &pca)).collect::<Result<Vec<_>>>()?;
    let logistic_rows: Vec<[f64; 3]> = pcs.iter().zip(&train).map(|(p, s)| [p.0, p.1, s.labels.relpos]).collect();
    let glm_rows: Vec<[f64; 3]> = pcs.iter().zip(&train).map(|(p, s)| [p.0, p.1, s.labels.diameter]).collect();
    let ratio_rows: Vec<[f64; 2]> = train.iter().map(|s| [s.labels.relpos, s.labels.speed_ratio]).collect();
    let position = fit_logistic(&logistic_rows, opts)?;
    let diameter = fit_diameter_glm(&glm_rows, opts)?;
    let speed_ratio = fit_speed_ratio(&ratio_rows, opts.speed_floor, opts.relative_speed_fit)?;
    let hull = convex_hull(&pcs.iter().map(|p| [p.0, p.1]).collect::<Vec<_>>());
    let mut meta = ModelMeta {
        source: "trained".into(),
        seed: Some(cfg.seed),
        train_samples: train.len(),
        sensors: cfg.sensors,
        discretization: Some(disc.clone()),
        ..Default::default()
    };
    meta.training_metrics.insert("pca_explained_2".into(), pca.explained.iter().take(2).sum());
    Ok(ModelSet { version: ModelSet::VERSION, pca, position, diameter, speed_ratio, hull, meta })
}
