//! Fixed-basis least-squares fits.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::{AmplitudeSeries, LinePoint};
use crate::error::{domain, Error, Result};
use crate::model::SpectralData;
use crate::special::scaled_ei;

const MAX_CONDITION: f64 = 1e12;

/// Coefficients of c₁e^{−λt} + c₂e^{−γt}e^{−iωt} + c₃e^{−λt}Ei(λt).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormFit {
    pub c1: Complex64,
    pub c2: Complex64,
    pub c3: Complex64,
    /// ‖y − Xc‖/‖y‖.
    pub residual: f64,
    /// Condition number of the column-normalized design matrix.
    pub condition: f64,
}

fn solve(columns: &[Vec<Complex64>], y: &[Complex64]) -> Result<(Vec<Complex64>, f64, f64)> {
    let n = y.len();
    let k = columns.len();
    if n < k {
        return Err(domain(format!("{n} samples cannot determine {k} coefficients")));
    }
    let norms: Vec<f64> = columns.iter().map(|c| c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()).collect();
    if norms.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Conditioning(f64::INFINITY));
    }
    let a = DMatrix::from_fn(n, k, |i, j| columns[j][i] / norms[j]);
    let b = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let condition = sv.max() / sv.min();
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Conditioning(condition));
    }
    let coef = svd.solve(&b, 0.0).map_err(|e| Error::Singular(e.to_string()))?;
    let residual = (&a * &coef - &b).norm() / b.norm();
    let scaled: Vec<Complex64> = coef.iter().zip(&norms).map(|(c, n)| c / n).collect();
    Ok((scaled, residual, condition))
}

fn positive_samples(series: &AmplitudeSeries) -> Result<(&[f64], &[Complex64])> {
    if series.times.iter().any(|&t| t <= 0.0) {
        return Err(domain("closed-form fit uses positive times only"));
    }
    Ok((&series.times, &series.values))
}

fn resonance_column(times: &[f64], s: &SpectralData) -> Vec<Complex64> {
    times.iter().map(|&t| Complex64::from_polar((-s.gamma_e * t).exp(), -s.omega_e * t)).collect()
}

fn ei_column(times: &[f64], s: &SpectralData) -> Result<Vec<Complex64>> {
    times.iter().map(|&t| scaled_ei(s.lambda_e * t).map(|v| Complex64::new(v, 0.0))).collect()
}

/// Three-term fit with exponents taken from the spectral data.
pub fn fit_closed_form(series: &AmplitudeSeries, spectral: &SpectralData) -> Result<ClosedFormFit> {
    let (times, y) = positive_samples(series)?;
    let span = times.iter().cloned().fold(0.0, f64::max) / times.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(span >= 100.0) {
        return Err(domain(format!("fit grid spans a factor {span:.1}, needs two decades")));
    }
    let runaway: Vec<Complex64> = times.iter().map(|&t| Complex64::new((-spectral.lambda_e * t).exp(), 0.0)).collect();
    let cols = [runaway, resonance_column(times, spectral), ei_column(times, spectral)?];
    let (c, residual, condition) = solve(&cols, y)?;
    Ok(ClosedFormFit { c1: c[0], c2: c[1], c3: c[2], residual, condition })
}

/// Two-term fit (resonance and Ei) for late windows where the runaway term is gone.
pub fn fit_late(series: &AmplitudeSeries, spectral: &SpectralData) -> Result<ClosedFormFit> {
    let (times, y) = positive_samples(series)?;
    let cols = [resonance_column(times, spectral), ei_column(times, spectral)?];
    let (c, residual, condition) = solve(&cols, y)?;
    Ok(ClosedFormFit { c1: Complex64::new(0.0, 0.0), c2: c[0], c3: c[1], residual, condition })
}

/// Lorentzian |C|² = h/(1 + ((ν − ν₀)/Γ)²) fitted through 1/|C|² being quadratic in ν.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BreitWignerFit {
    pub center: f64,
    pub half_width: f64,
    pub peak: f64,
    /// ‖|C|² − model‖/‖|C|²‖ over the fitted points.
    pub residual: f64,
}

pub fn fit_breit_wigner(points: &[LinePoint]) -> Result<BreitWignerFit> {
    if points.len() < 3 {
        return Err(domain("Breit-Wigner fit needs at least three points"));
    }
    let nus: Vec<f64> = points.iter().map(|p| p.nu).collect();
    let y: Vec<Complex64> = points.iter().map(|p| Complex64::new(1.0 / p.c3.norm_sqr(), 0.0)).collect();
    let cols: Vec<Vec<Complex64>> =
        (0..3).map(|k| nus.iter().map(|&v| Complex64::new(v.powi(k), 0.0)).collect()).collect();
    let (c, _, _) = solve(&cols, &y)?;
    let (d, b, a) = (c[0].re, c[1].re, c[2].re);
    if !(a > 0.0) {
        return Err(Error::Singular("line shape has no interior maximum".into()));
    }
    let center = -b / (2.0 * a);
    let floor = d - b * b / (4.0 * a);
    if !(floor > 0.0) {
        return Err(Error::Singular("fitted line shape has no positive floor".into()));
    }
    let half_width = (floor / a).sqrt();
    let model = |v: f64| 1.0 / (a * (v - center).powi(2) + floor);
    let num: f64 = points.iter().map(|p| (p.c3.norm_sqr() - model(p.nu)).powi(2)).sum();
    let den: f64 = points.iter().map(|p| p.c3.norm_sqr().powi(2)).sum();
    Ok(BreitWignerFit { center, half_width, peak: 1.0 / floor, residual: (num / den).sqrt() })
}
