//! Survival and emission amplitudes, the closed-form fit and multi-particle
//! amplitudes through permanents.

mod fit;
mod fock;
mod survival;
mod transition;

use num_complex::Complex64;
use serde::Serialize;

use crate::model::Setup;

pub use fit::{fit_breit_wigner, fit_closed_form, fit_late, BreitWignerFit, ClosedFormFit};
pub use fock::{fock_amplitude, permanent, permanent_brute_force, FockAmplitude, FockMode, MAX_PERMANENT};
pub use survival::{survival, survival_at_zero, survival_terms, tail_limit, SurvivalBreakdown, J2_AGREEMENT};
pub use transition::{
    line_shape, transition_constants, transition_cut, transition_eps, transition_limit, transition_limit_point,
    transition_richardson, LinePoint, TransitionBreakdown, TransitionConstants,
};

/// Per-point term breakdowns of a series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SeriesTerms {
    Survival(Vec<SurvivalBreakdown>),
    Transition(Vec<TransitionBreakdown>),
}

/// Complex amplitude samples over a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplitudeSeries {
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
    pub normalized: Vec<Complex64>,
    pub terms: SeriesTerms,
    pub diagnostics: SeriesDiagnostics,
}

/// Envelope and tail summaries of a series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesDiagnostics {
    /// Decay rate from a log-linear fit of |A| over the resonance window
    /// λ_e t ≥ 20, t ≤ 10/γ_e.
    pub envelope_rate: Option<f64>,
    /// Log-log slope of |A| over the last decade of the grid.
    pub tail_exponent: Option<f64>,
    /// Sign of the discrete second derivative of log|A| in t over the last three points.
    pub tail_convex: Option<bool>,
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

impl SeriesDiagnostics {
    pub fn compute(times: &[f64], values: &[Complex64], setup: &Setup) -> Self {
        let s = &setup.spectral;
        let pts: Vec<(f64, f64)> = times
            .iter()
            .zip(values)
            .filter(|(t, v)| **t > 0.0 && v.norm() > 0.0)
            .map(|(t, v)| (*t, v.norm()))
            .collect();

        let window: Vec<&(f64, f64)> = pts
            .iter()
            .filter(|(t, _)| s.lambda_e * t >= 20.0 && (s.gamma_e <= 0.0 || *t <= 10.0 / s.gamma_e))
            .collect();
        let envelope_rate = (window.len() >= 3).then(|| {
            let xs: Vec<f64> = window.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = window.iter().map(|p| p.1.ln()).collect();
            -slope(&xs, &ys)
        });

        let tail_exponent = pts.last().and_then(|&(tmax, _)| {
            let tail: Vec<&(f64, f64)> = pts.iter().filter(|(t, _)| *t >= 0.1 * tmax).collect();
            (tail.len() >= 3).then(|| {
                let xs: Vec<f64> = tail.iter().map(|p| p.0.ln()).collect();
                let ys: Vec<f64> = tail.iter().map(|p| p.1.ln()).collect();
                slope(&xs, &ys)
            })
        });

        let tail_convex = (pts.len() >= 3).then(|| {
            let n = pts.len();
            let (a, b, c) = (pts[n - 3], pts[n - 2], pts[n - 1]);
            let d1 = (b.1.ln() - a.1.ln()) / (b.0 - a.0);
            let d2 = (c.1.ln() - b.1.ln()) / (c.0 - b.0);
            d2 > d1
        });

        Self { envelope_rate, tail_exponent, tail_convex }
    }
}
