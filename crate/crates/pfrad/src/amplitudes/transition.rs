//! Photon emission amplitude ⟨(φ^ε, 0), e^{−itL^{1/2}}(0, ζ)⟩ and its ε ↓ 0 limit.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::survival::{lagrange_at_zero, validate_grid};
use super::{AmplitudeSeries, SeriesDiagnostics, SeriesTerms};
use crate::error::{domain, Error, Result};
use crate::model::Setup;
use crate::quad::{fourier_half_line, integrate_to_infinity, laplace_breakpoints, HalfLine, Tolerance};
use crate::resolvent::{
    chi_upper, photon_bound_element, photon_coupling, photon_projection_weight, polys, Branch, BranchedPoint,
    PhotonSpec,
};
use crate::special::pv_laplace_pole;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const S_AGREEMENT: f64 = 1e-7;

/// Term-by-term emission amplitude at one time. All terms are scalar factors;
/// `amplitude` applies the geometric factor k·(ζ₁* ∧ ζ₂).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitionBreakdown {
    pub t: f64,
    pub eps: f64,
    pub runaway: Complex64,
    pub resonance: Complex64,
    pub photon_pole: Complex64,
    /// s-integral through the subtracted principal-value integrand.
    pub s_integral: Complex64,
    /// s-integral through the Ei decomposition.
    pub s_integral_decomposed: Complex64,
    /// Integral along 𝒞⁺ (t > 0) or 𝒞⁻ (t < 0); zero at ε = 0.
    pub cut: Complex64,
    pub total: Complex64,
    pub geometric: Complex64,
    pub amplitude: Complex64,
    /// amplitude/(‖φ^ε‖·‖(0,ζ)‖); absent at ε = 0 where φ is not normalizable.
    pub normalized: Option<Complex64>,
    pub error: f64,
    /// Tail error of the cut integral relative to its partial sum.
    pub cut_tail_ratio: f64,
    /// ν within 1e−6 of ω_e.
    pub near_resonant: bool,
}

fn tolerance() -> Tolerance {
    Tolerance::new(1e-16, 1e-13)
}

fn element(setup: &Setup, photon: &PhotonSpec, w: Complex64) -> Complex64 {
    photon_bound_element(&BranchedPoint::continued(w, Branch::Upper), setup, photon)
        .map(|p| p.total)
        .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
}

/// Contribution of the runaway eigenprojection pole, C·χ(iλ)/2·e^{−λ|t|}.
fn runaway_residue(setup: &Setup, photon: &PhotonSpec) -> Result<Complex64> {
    let l = setup.spectral.lambda_e;
    let chi = chi_upper(Complex64::new(0.0, l), photon)?.total;
    Ok(0.5 * photon_projection_weight(setup) * chi)
}

fn resonance_term(setup: &Setup, photon: &PhotonSpec, t: f64) -> Result<Complex64> {
    let l = setup.spectral.lambda_e;
    let (z, phase) = if t > 0.0 {
        let z = setup.spectral.z_plus;
        (z, (-I * t * z).exp())
    } else {
        let z = setup.spectral.z_minus;
        (z, (I * t * z).exp())
    };
    let (_, _, dq) = polys(setup, z);
    let chi = chi_upper(z, photon)?.total;
    let coupling = 4.0 * PI * setup.params.e * setup.params.c * I / ((z - I * l) * dq);
    Ok(-2.0 * phase * z * chi * coupling)
}

fn photon_pole_term(setup: &Setup, photon: &PhotonSpec, t: f64) -> Complex64 {
    let [w1, w2] = photon.poles();
    let [r1, r2] = photon.residues();
    if t > 0.0 {
        -2.0 * (-I * t * w2).exp() * w2 * photon_coupling(setup, w2) * r2
    } else {
        -2.0 * (I * t * w1).exp() * w1 * photon_coupling(setup, w1) * r1
    }
}

fn s_breakpoints(tau: f64, lambda: f64) -> Vec<f64> {
    laplace_breakpoints(tau, &[1.0, lambda, 2.0 * lambda])
}

/// (i/π)·P.V.∫₀^∞ e^{−τs} s[G(−is) − G(is)] ds by both evaluation paths.
fn s_integrals(setup: &Setup, photon: &PhotonSpec, tau: f64) -> Result<(Complex64, Complex64, f64)> {
    let l = setup.spectral.lambda_e;
    let rho = runaway_residue(setup, photon)?;
    let h = |s: f64| s * (element(setup, photon, -I * s) - element(setup, photon, I * s));
    let weight = (-l * tau).exp();
    let a = integrate_to_infinity(
        |s: f64| (-tau * s).exp() * h(s) - weight * 2.0 * rho * l / (s * s - l * l),
        &s_breakpoints(tau, l),
        1.0 / tau,
        tolerance(),
    );
    let b = integrate_to_infinity(
        |s: f64| (-tau * s).exp() * (h(s) - rho / (s - l)),
        &s_breakpoints(tau, l),
        1.0 / tau,
        tolerance(),
    );
    let va = I / PI * a.value;
    let vb = I / PI * (rho * pv_laplace_pole(tau, l)? + b.value);
    let gap = (va - vb).norm();
    let scale = va.norm().max(vb.norm()).max(1e-300);
    if !a.converged || !b.converged || !va.is_finite() || gap > S_AGREEMENT * scale {
        return Err(Error::Accuracy { estimate: gap / scale, target: S_AGREEMENT });
    }
    Ok((va, vb, (a.error + b.error) / PI))
}

/// Oscillatory cut integral along 𝒞⁺ (t > 0) or 𝒞⁻ (t < 0).
pub(crate) fn cut_integral(setup: &Setup, photon: &PhotonSpec, t: f64, refine: bool) -> Result<(Complex64, HalfLine)> {
    let (nu, eps) = (photon.nu, photon.eps);
    let s = &setup.spectral;
    let prefactor = eps / (I * nu.powi(3));
    // The resonance pole of U sits at u = ω_e − ν + i(±(ε − γ_e)) relative to the cut origin.
    let centre = s.omega_e - nu;
    let d = (eps - s.gamma_e).abs().max(1e-3);
    let mut points = vec![0.0, 1.0, 2.0, s.lambda_e, 2.0 * s.lambda_e];
    for k in [-5.0, -1.0, 0.0, 1.0, 5.0] {
        let p = centre + k * d;
        if p > 0.0 {
            points.push(p);
        }
    }
    points.sort_by(f64::total_cmp);
    let scale = if refine { 2.0 } else { 1.0 };
    let cutoff = scale * 50.0 * s.lambda_e.max(nu).max(s.omega_e);
    let tol = if refine { Tolerance::new(1e-17, 1e-13) } else { tolerance() };
    if t > 0.0 {
        let w2 = Complex64::new(nu, -eps);
        let h = |u: f64| {
            let z = w2 + u;
            z * photon_coupling(setup, z)
        };
        let r = fourier_half_line(h, t, &points, cutoff, tol);
        Ok((prefactor * (-I * t * w2).exp() * r.value(), r))
    } else {
        let base = Complex64::new(nu, eps);
        let h = |u: f64| {
            let mu = base + u;
            mu * photon_coupling(setup, -mu)
        };
        let r = fourier_half_line(h, t, &points, cutoff, tol);
        Ok((-prefactor * (-I * t * base).exp() * r.value(), r))
    }
}

/// The cut term alone, as entered in the breakdown.
pub fn transition_cut(t: f64, photon: &PhotonSpec, setup: &Setup) -> Result<Complex64> {
    if !(photon.eps > 0.0) {
        return Err(domain("cut integrals need eps > 0"));
    }
    if t == 0.0 || !t.is_finite() {
        return Err(domain("cut integrals need a finite nonzero time"));
    }
    Ok(cut_integral(setup, photon, t, false)?.0)
}

fn breakdown(t: f64, photon: &PhotonSpec, level: &[Complex64; 3], setup: &Setup) -> Result<TransitionBreakdown> {
    if t == 0.0 || !t.is_finite() {
        return Err(domain(format!("transition amplitude needs a finite nonzero time, got {t}")));
    }
    let tau = t.abs();
    let l = setup.spectral.lambda_e;
    let runaway = runaway_residue(setup, photon)? * (-l * tau).exp();
    let resonance = resonance_term(setup, photon, t)?;
    let photon_pole = photon_pole_term(setup, photon, t);
    let (sa, sb, s_err) = s_integrals(setup, photon, tau)?;
    let sign = t.signum();
    let (cut, cut_err, cut_tail_ratio) = if photon.eps > 0.0 {
        let (v, r) = cut_integral(setup, photon, t, false)?;
        let ratio = r.tail_error / r.body.value.norm().max(1e-300);
        (v, r.error() * photon.eps / photon.nu.powi(3), ratio)
    } else {
        (Complex64::new(0.0, 0.0), 0.0, 0.0)
    };
    let total = runaway + resonance + photon_pole + sign * sa + cut;
    let geometric = photon.geometric_factor(level);
    let amplitude = geometric * total;
    let normalized = (photon.eps > 0.0).then(|| {
        let level_norm = level.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt() * setup.spectral.kappa0.sqrt();
        amplitude / (photon.norm_sq(setup.params.c).sqrt() * level_norm)
    });
    Ok(TransitionBreakdown {
        t,
        eps: photon.eps,
        runaway,
        resonance,
        photon_pole,
        s_integral: sign * sa,
        s_integral_decomposed: sign * sb,
        cut,
        total,
        geometric,
        amplitude,
        normalized,
        error: s_err + cut_err,
        cut_tail_ratio,
        near_resonant: (photon.nu - setup.spectral.omega_e).abs() < 1e-6,
    })
}

/// Regularized emission amplitude A^ε(t) for ε > 0.
pub fn transition_eps(
    t: f64,
    photon: &PhotonSpec,
    level: &[Complex64; 3],
    setup: &Setup,
) -> Result<TransitionBreakdown> {
    if !(photon.eps > 0.0) {
        return Err(domain("transition_eps needs eps > 0; use transition_limit for eps = 0"));
    }
    breakdown(t, photon, level, setup)
}

/// The ε = 0 amplitude at one time: no cut, photon term e^{−iνt}U(±ν).
pub fn transition_limit_point(
    t: f64,
    photon: &PhotonSpec,
    level: &[Complex64; 3],
    setup: &Setup,
) -> Result<TransitionBreakdown> {
    breakdown(t, &photon.with_eps(0.0), level, setup)
}

/// ε = 0 amplitude over a grid.
pub fn transition_limit(
    t_grid: &[f64],
    photon: &PhotonSpec,
    level: &[Complex64; 3],
    setup: &Setup,
) -> Result<AmplitudeSeries> {
    if photon.eps != 0.0 {
        return Err(domain("transition_limit needs a photon with eps = 0"));
    }
    validate_grid(t_grid)?;
    let terms: Vec<TransitionBreakdown> =
        t_grid.par_iter().map(|&t| transition_limit_point(t, photon, level, setup)).collect::<Result<_>>()?;
    let values: Vec<Complex64> = terms.iter().map(|b| b.amplitude).collect();
    let normalized = values.clone();
    let diagnostics = SeriesDiagnostics::compute(t_grid, &values, setup);
    Ok(AmplitudeSeries {
        times: t_grid.to_vec(),
        values,
        normalized,
        terms: SeriesTerms::Transition(terms),
        diagnostics,
    })
}

/// ε → 0 extrapolation of the scalar amplitude from ε_k = eps0·ratio^k, k < levels.
pub fn transition_richardson(
    t: f64,
    photon: &PhotonSpec,
    setup: &Setup,
    eps0: f64,
    ratio: f64,
    levels: usize,
) -> Result<Complex64> {
    if !(eps0 > 0.0 && ratio > 0.0 && ratio < 1.0 && levels >= 2) {
        return Err(domain("ladder needs eps0 > 0, 0 < ratio < 1 and at least two levels"));
    }
    let level = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let eps: Vec<f64> = (0..levels).map(|k| eps0 * ratio.powi(k as i32)).collect();
    let vals: Vec<Complex64> = eps
        .par_iter()
        .map(|&e| breakdown(t, &photon.with_eps(e), &level, setup).map(|b| b.total))
        .collect::<Result<_>>()?;
    Ok(lagrange_at_zero(&eps, &vals))
}

/// Coefficients of A(t) ≈ C₁e^{−λt} + C₂e^{−γt}e^{−iωt} + C₃e^{−iνt} for t > 0 at ε = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitionConstants {
    pub c1: Complex64,
    pub c2: Complex64,
    pub c3: Complex64,
}

pub fn transition_constants(nu: f64, setup: &Setup) -> Result<TransitionConstants> {
    let photon = PhotonSpec::simple(nu, 0.0)?;
    let c1 = runaway_residue(setup, &photon)?;
    let z = setup.spectral.z_plus;
    // resonance_term at t carries e^{−itz₊}; strip it at t = 0⁺ by dividing it back out.
    let c2 = resonance_term(setup, &photon, 1.0)? * (I * z).exp();
    let c3 = photon_coupling(setup, Complex64::new(nu, 0.0));
    Ok(TransitionConstants { c1, c2, c3 })
}

/// One point of the emission line shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinePoint {
    pub nu: f64,
    pub c3: Complex64,
}

/// |C₃|(ν) over a frequency grid.
pub fn line_shape(nus: &[f64], setup: &Setup) -> Result<Vec<LinePoint>> {
    nus.par_iter().map(|&nu| transition_constants(nu, setup).map(|c| LinePoint { nu, c3: c.c3 })).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x_level() -> [Complex64; 3] {
        [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
    }

    #[test]
    fn geometry_zero_case() {
        let s = Setup::natural(0.3).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let ph = PhotonSpec::new(1.0, 0.05, [1.0, 0.0, 0.0], [one, zero, zero]).unwrap();
        let b = transition_eps(1.0, &ph, &[one, zero, zero], &s).unwrap();
        assert_eq!(b.amplitude, Complex64::new(0.0, 0.0));
        assert!(b.total.norm() > 0.0);
    }

    #[test]
    fn photon_pole_envelope() {
        let s = Setup::natural(0.3).unwrap();
        let ph = PhotonSpec::simple(1.2, 0.05).unwrap();
        let a = transition_eps(2.0, &ph, &x_level(), &s).unwrap().photon_pole;
        let b = transition_eps(3.0, &ph, &x_level(), &s).unwrap().photon_pole;
        let ratio = b / a;
        let expect = Complex64::from_polar((-0.05f64).exp(), -1.2);
        assert!((ratio - expect).norm() < 1e-12);
    }

    #[test]
    fn limit_photon_term_is_pure_oscillation() {
        let s = Setup::natural(0.3).unwrap();
        let ph = PhotonSpec::simple(0.8, 0.0).unwrap();
        let c = transition_constants(0.8, &s).unwrap();
        for &t in &[0.5, 7.0] {
            let b = transition_limit_point(t, &ph, &x_level(), &s).unwrap();
            assert!((b.photon_pole - c.c3 * Complex64::from_polar(1.0, -0.8 * t)).norm() < 1e-12 * c.c3.norm());
            assert_eq!(b.cut, Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn rejects_zero_eps_in_regularized_call() {
        let s = Setup::natural(0.3).unwrap();
        let ph = PhotonSpec::simple(1.0, 0.0).unwrap();
        assert!(transition_eps(1.0, &ph, &x_level(), &s).is_err());
    }
}
