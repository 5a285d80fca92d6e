//! Survival amplitude of the oscillator bound state (0, ζ).

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{AmplitudeSeries, SeriesDiagnostics, SeriesTerms};
use crate::error::{domain, Error, Result};
use crate::model::{Fault, Setup};
use crate::quad::{integrate_to_infinity, laplace_breakpoints, Estimate, Tolerance};
use crate::resolvent::{bound_prefactor, polys};
use crate::special::pv_laplace_pole;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Relative agreement demanded between the two J₂ evaluations.
pub const J2_AGREEMENT: f64 = 1e-7;

/// Term-by-term survival amplitude at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurvivalBreakdown {
    pub t: f64,
    /// Contribution of the pole at −iλ_e.
    pub resonance_runaway: Complex64,
    /// Contribution of the resonance z₊ (t > 0) or z₋ (t < 0).
    pub resonance_oscillatory: Complex64,
    pub j1: Complex64,
    /// J₂ through the subtracted principal-value integrand.
    pub j2: Complex64,
    /// J₂ through the Ei decomposition.
    pub j2_decomposed: Complex64,
    /// I(t), the sum of the four terms.
    pub total: Complex64,
    /// S(t) = (2κ₀κ₂/(3κ²))·I(t).
    pub s: Complex64,
    /// Ŝ(t) = S(t)/κ₀.
    pub s_hat: Complex64,
    /// Quadrature error bound on I(t).
    pub error: f64,
}

fn tolerance() -> Tolerance {
    Tolerance::new(1e-16, 1e-13)
}

fn breakpoints(tau: f64, lambda: f64) -> Vec<f64> {
    laplace_breakpoints(tau, &[lambda, 2.0 * lambda])
}

fn checked(e: Estimate) -> Result<Estimate> {
    let target = tolerance().rel * e.value.norm();
    if e.converged {
        Ok(e)
    } else {
        Err(Error::Accuracy { estimate: e.error, target })
    }
}

/// J₁(τ) = (1/π)∫₀^∞ e^{−sτ} s p(is)/((s+λ)q(is)) ds.
fn j1(setup: &Setup, tau: f64) -> Estimate {
    let l = setup.spectral.lambda_e;
    let f = |s: f64| {
        let z = I * s;
        let (p, q, _) = polys(setup, z);
        (-s * tau).exp() * s * p / ((s + l) * q)
    };
    integrate_to_infinity(f, &breakpoints(tau, l), 1.0 / tau, tolerance()).scale(Complex64::new(1.0 / PI, 0.0))
}

/// R(s) = s p(−is)/((s−λ)q(−is)) and its residue c = λp(−iλ)/q(−iλ) at s = λ.
fn j2_parts(setup: &Setup) -> (impl Fn(f64) -> Complex64 + '_, Complex64) {
    let l = setup.spectral.lambda_e;
    let (pl, ql, _) = polys(setup, -I * l);
    let residue = l * pl / ql;
    let r = move |s: f64| {
        let (p, q, _) = polys(setup, -I * s);
        s * p / ((s - l) * q)
    };
    (r, residue)
}

/// Path (a): (2/π)∫₀^∞[e^{−sτ}R(s)/2 − e^{−λτ}λ c'/(s² − λ²)] ds with c' = p(−iλ)/q(−iλ).
fn j2_subtracted(setup: &Setup, tau: f64) -> Estimate {
    let l = setup.spectral.lambda_e;
    let (r, residue) = j2_parts(setup);
    let drop = setup.fault() == Some(Fault::DropJ2Subtraction);
    let weight = (-l * tau).exp();
    let f = |s: f64| {
        let main = 0.5 * (-s * tau).exp() * r(s);
        if drop {
            main
        } else {
            main - weight * l * residue / (s * s - l * l)
        }
    };
    integrate_to_infinity(f, &breakpoints(tau, l), 1.0 / tau, tolerance()).scale(Complex64::new(2.0 / PI, 0.0))
}

/// Path (b): (1/π)[c·P.V.∫e^{−sτ}/(s−λ) + ∫e^{−sτ}(R(s) − c/(s−λ))].
fn j2_decomposed(setup: &Setup, tau: f64) -> Result<Estimate> {
    let l = setup.spectral.lambda_e;
    let (r, residue) = j2_parts(setup);
    let pv = pv_laplace_pole(tau, l)?;
    let f = |s: f64| (-s * tau).exp() * (r(s) - residue / (s - l));
    let regular = integrate_to_infinity(f, &breakpoints(tau, l), 1.0 / tau, tolerance());
    let value = (residue * pv + regular.value) / PI;
    Ok(Estimate { value, error: regular.error / PI + 1e-15 * value.norm(), ..regular })
}

/// Closed-form pole contributions (runaway, resonance) at signed time t.
fn pole_terms(setup: &Setup, t: f64) -> (Complex64, Complex64) {
    let l = setup.spectral.lambda_e;
    let tau = t.abs();
    let (pl, ql, _) = polys(setup, -I * l);
    let runaway = -(-l * tau).exp() * I * l * pl / ql;
    let (z, phase) = if t > 0.0 {
        let z = setup.spectral.z_plus;
        (z, (-I * t * z).exp())
    } else {
        let z = setup.spectral.z_minus;
        (z, (I * t * z).exp())
    };
    let (p, _, dq) = polys(setup, z);
    let osc = 2.0 * phase * z * p / ((z + I * l) * dq);
    (runaway, osc)
}

/// Survival amplitude and its terms at a single nonzero time.
pub fn survival_terms(t: f64, setup: &Setup) -> Result<SurvivalBreakdown> {
    if t == 0.0 || !t.is_finite() {
        return Err(domain(format!("survival_terms needs a finite nonzero time, got {t}")));
    }
    let tau = t.abs();
    let (runaway, osc) = pole_terms(setup, t);
    let j1 = checked(j1(setup, tau))?;
    let a = j2_subtracted(setup, tau);
    let b = j2_decomposed(setup, tau)?;
    let gap = (a.value - b.value).norm();
    let scale = a.value.norm().max(b.value.norm()).max(1e-300);
    if !a.converged || gap > J2_AGREEMENT * scale {
        return Err(Error::Accuracy { estimate: gap / scale, target: J2_AGREEMENT });
    }
    // For t < 0 the integral terms enter with the opposite sign.
    let sign = t.signum();
    let (j1v, j2v, j2b) = (sign * j1.value, sign * a.value, sign * b.value);
    let total = runaway + osc + j1v + j2v;
    let s = -bound_prefactor(setup) * total;
    Ok(SurvivalBreakdown {
        t,
        resonance_runaway: runaway,
        resonance_oscillatory: osc,
        j1: j1v,
        j2: j2v,
        j2_decomposed: j2b,
        total,
        s,
        s_hat: s / setup.spectral.kappa0,
        error: j1.error + a.error,
    })
}

/// Survival amplitude over a grid, evaluated in parallel and gathered in grid order.
pub fn survival(t_grid: &[f64], setup: &Setup) -> Result<AmplitudeSeries> {
    validate_grid(t_grid)?;
    let terms: Vec<SurvivalBreakdown> = t_grid.par_iter().map(|&t| survival_terms(t, setup)).collect::<Result<_>>()?;
    let values: Vec<Complex64> = terms.iter().map(|b| b.s).collect();
    let normalized: Vec<Complex64> = terms.iter().map(|b| b.s_hat).collect();
    let diagnostics = SeriesDiagnostics::compute(t_grid, &values, setup);
    Ok(AmplitudeSeries { times: t_grid.to_vec(), values, normalized, terms: SeriesTerms::Survival(terms), diagnostics })
}

pub(crate) fn validate_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(domain("time grid is empty"));
    }
    if t_grid.iter().any(|&t| t == 0.0 || !t.is_finite()) {
        return Err(domain("time grid must exclude t = 0 and contain finite values"));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain("time grid must be strictly increasing"));
    }
    Ok(())
}

/// Ŝ(0⁺) by quadratic extrapolation through λt ∈ {1e−2, 1e−3, 1e−4}.
pub fn survival_at_zero(setup: &Setup) -> Result<Complex64> {
    let l = setup.spectral.lambda_e;
    let ts = [1e-2 / l, 1e-3 / l, 1e-4 / l];
    let vals: Vec<Complex64> = ts.iter().map(|&t| survival_terms(t, setup).map(|b| b.s_hat)).collect::<Result<_>>()?;
    Ok(lagrange_at_zero(&ts, &vals))
}

pub(crate) fn lagrange_at_zero(xs: &[f64], ys: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, (&xi, &yi)) in xs.iter().zip(ys).enumerate() {
        let mut w = 1.0;
        for (j, &xj) in xs.iter().enumerate() {
            if i != j {
                w *= xj / (xj - xi);
            }
        }
        acc += yi * w;
    }
    acc
}

/// Large-time limit of t·S(t) by extrapolation in 1/t from t = {40, 80, 160}/γ_e,
/// where the resonance term has died out.
pub fn tail_limit(setup: &Setup) -> Result<(Complex64, Vec<(f64, Complex64)>)> {
    let g = setup.spectral.gamma_e;
    if !(g > 0.0) {
        return Err(domain("tail extrapolation needs a decaying resonance"));
    }
    let ts = [40.0 / g, 80.0 / g, 160.0 / g];
    let samples: Vec<(f64, Complex64)> =
        ts.iter().map(|&t| survival_terms(t, setup).map(|b| (t, t * b.s))).collect::<Result<_>>()?;
    let inv: Vec<f64> = ts.iter().map(|t| 1.0 / t).collect();
    let ys: Vec<Complex64> = samples.iter().map(|s| s.1).collect();
    Ok((lagrange_at_zero(&inv, &ys), samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_time() {
        let s = Setup::natural(0.3).unwrap();
        assert!(matches!(survival_terms(0.0, &s), Err(Error::Domain(_))));
    }

    #[test]
    fn time_reversal() {
        let s = Setup::natural(0.3).unwrap();
        for &t in &[0.01, 0.3, 1.0, 5.0, 40.0] {
            let a = survival_terms(t, &s).unwrap().s;
            let b = survival_terms(-t, &s).unwrap().s;
            assert!((b - a.conj()).norm() < 1e-12 * a.norm(), "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn late_time_integrals() {
        // high-precision quadrature at τ = 1342 and 2685
        let s = Setup::natural(0.3).unwrap();
        for (tau, j1v, j2v) in
            [(1342.0, -1.48856150770317e-6, 1.48882773281906e-6), (2685.0, -3.71880791155056e-7, 3.71914032458417e-7)]
        {
            assert!((j1(&s, tau).value.im - j1v).abs() < 1e-9 * j1v.abs(), "tau={tau}");
            assert!((j2_subtracted(&s, tau).value.im - j2v).abs() < 1e-9 * j2v.abs(), "tau={tau}");
            assert!((j2_decomposed(&s, tau).unwrap().value.im - j2v).abs() < 1e-9 * j2v.abs(), "tau={tau}");
        }
    }

    #[test]
    fn ladder_point_near_runaway_pole() {
        let s = Setup::natural(0.3).unwrap();
        let l = s.spectral.lambda_e;
        for k in [1.0, 10.0] {
            for t in [k / l, k / l * (1.0 + 4e-16), k / l * (1.0 - 4e-16)] {
                assert!(survival_terms(t, &s).is_ok(), "t={t:e}");
            }
        }
    }

    #[test]
    fn dual_path_j2() {
        let s = Setup::natural(0.3).unwrap();
        for &t in &[0.01, 0.1, 1.0, 10.0] {
            let b = survival_terms(t, &s).unwrap();
            assert!((b.j2 - b.j2_decomposed).norm() < 1e-9 * b.j2.norm());
        }
    }

    #[test]
    fn drop_subtraction_is_detected() {
        let s = Setup::natural(0.3).unwrap().with_fault(Some(Fault::DropJ2Subtraction));
        assert!(matches!(survival_terms(1.0, &s), Err(Error::Accuracy { .. })));
    }

    #[test]
    fn lagrange_extrapolation_is_exact_for_quadratics() {
        let xs = [1.0, 0.5, 0.25];
        let ys: Vec<Complex64> = xs.iter().map(|x| Complex64::new(3.0 - x + 2.0 * x * x, x * x)).collect();
        assert!((lagrange_at_zero(&xs, &ys) - Complex64::new(3.0, 0.0)).norm() < 1e-14);
    }
}
