//! Formula-blind verifiers: Stone-formula quadrature of the spectral
//! representation, radial reductions of the defining overlaps, and an
//! independent parametrization of the logarithmic cut integrals.
//!
//! Matrix elements used here are assembled from Λ₊ and the runaway
//! projection directly, never from the factorized polynomials p and q.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::model::{PhysicalParams, Setup};
use crate::quad::{fourier_half_line, integrate, integrate_to_infinity, Estimate, HalfLine, Tolerance};
use crate::resolvent::{
    bound_bound_element_assembled, lambda_pm, photon_bound_element_assembled, photon_coupling, regularized_coeffs,
    Branch, BranchedPoint, PhotonSpec,
};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Value of an oracle evaluation with its bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureReport {
    pub value: Complex64,
    pub error: f64,
    pub subdivisions: usize,
    /// Upper end of the explicitly integrated range; infinite when the whole
    /// range was mapped.
    pub truncation_point: f64,
    /// False marks the value as unreliable.
    pub converged: bool,
}

impl QuadratureReport {
    fn from_estimate(e: Estimate, truncation_point: f64) -> Self {
        Self { value: e.value, error: e.error, subdivisions: e.intervals, truncation_point, converged: e.converged }
    }

    /// Converged when the panels met their tolerance and the total error
    /// stays below `rel`·|value|.
    fn from_half_line(r: HalfLine, scale: Complex64, rel: f64) -> Self {
        let value = scale * r.value();
        let error = r.error() * scale.norm();
        Self {
            value,
            error,
            subdivisions: r.body.intervals,
            truncation_point: r.cutoff,
            converged: r.body.converged && error <= rel * value.norm(),
        }
    }
}

fn stone_tolerance() -> Tolerance {
    Tolerance::new(1e-14, 1e-10).with_max_intervals(400_000)
}

/// Default spectral cutoff 200·max(λ_e, ω_e, extra).
pub fn default_cutoff(setup: &Setup, extra: f64) -> f64 {
    200.0 * setup.spectral.lambda_e.max(setup.spectral.omega_e).max(extra)
}

fn survival_jump(setup: &Setup, mu: f64) -> Complex64 {
    let up = BranchedPoint::above(mu);
    let down = BranchedPoint::below(mu);
    match (bound_bound_element_assembled(&up, setup), bound_bound_element_assembled(&down, setup)) {
        (Ok(a), Ok(b)) => a - b,
        _ => Complex64::new(f64::NAN, f64::NAN),
    }
}

fn resonance_points(setup: &Setup, extra: &[f64]) -> Vec<f64> {
    let s = &setup.spectral;
    let w = s.gamma_e.max(1e-6);
    let mut p = vec![0.0, 0.5 * s.omega_e, 2.0 * s.omega_e, s.lambda_e, 4.0 * s.lambda_e];
    for k in [-10.0, -3.0, -1.0, 0.0, 1.0, 3.0, 10.0] {
        let v = s.omega_e + k * w;
        if v > 0.0 {
            p.push(v);
        }
    }
    p.extend(extra.iter().copied().filter(|v| *v > 0.0));
    p.sort_by(f64::total_cmp);
    p
}

/// Survival amplitude from (1/πi)∫₀^∞ e^{−itμ} μ[F(μ₊) − F(μ₋)] dμ.
pub fn stone_survival(t: f64, setup: &Setup) -> Result<QuadratureReport> {
    stone_survival_with_cutoff(t, setup, default_cutoff(setup, 0.0))
}

pub fn stone_survival_with_cutoff(t: f64, setup: &Setup, cutoff: f64) -> Result<QuadratureReport> {
    if t == 0.0 || !t.is_finite() {
        return Err(domain(format!("Stone oracle needs a finite nonzero time, got {t}")));
    }
    let h = |mu: f64| mu * survival_jump(setup, mu);
    let r = fourier_half_line(h, t, &resonance_points(setup, &[]), cutoff, stone_tolerance());
    Ok(QuadratureReport::from_half_line(r, 1.0 / (PI * I), 1e-6))
}

/// (1/π)∫_R z/(s² + z²) ds over the even half-line, doubled.
pub fn s_kernel_identity(z: Complex64) -> QuadratureReport {
    let f = |s: f64| z / (s * s + z * z);
    let e = integrate_to_infinity(f, &[0.0, z.norm()], z.norm(), Tolerance::new(1e-15, 1e-13));
    QuadratureReport::from_estimate(e.scale(Complex64::new(2.0 / PI, 0.0)), f64::INFINITY)
}

/// The two-term representation: (1/2πi)∫_R e^{−itλ}λJ(λ)dλ plus
/// (1/π)∫_R ds (1/2πi)∫_R e^{−itλ}λ²J(λ)/(s² + λ²)dλ, with J(λ) = F(λ₊) − F(λ₋)
/// on λ > 0 and J(−λ) = −J(λ). The s-integral is evaluated numerically at every
/// λ node.
pub fn stone_survival_double(t: f64, setup: &Setup) -> Result<QuadratureReport> {
    if t == 0.0 || !t.is_finite() {
        return Err(domain(format!("Stone oracle needs a finite nonzero time, got {t}")));
    }
    let kernel = |lam: f64| {
        let a = lam.abs();
        let f = |s: f64| Complex64::new(lam * lam / (s * s + lam * lam), 0.0);
        // even in s: half line, doubled
        2.0 / PI * integrate_to_infinity(f, &[0.0, a], a, Tolerance::new(1e-15, 1e-12)).value.re
    };
    let cutoff = default_cutoff(setup, 0.0);
    let pts = resonance_points(setup, &[]);
    // λ > 0: (λ + k(λ))J(λ); λ < 0 mapped to λ → −λ with J odd: (λ − k(λ))(−J(λ))·e^{+itλ}
    let pos = fourier_half_line(
        |lam: f64| (lam + kernel(lam)) * survival_jump(setup, lam),
        t,
        &pts,
        cutoff,
        stone_tolerance(),
    );
    let neg = fourier_half_line(
        |lam: f64| (-lam + kernel(lam)) * -survival_jump(setup, lam),
        -t,
        &pts,
        cutoff,
        stone_tolerance(),
    );
    let scale = 1.0 / (2.0 * PI * I);
    let value = scale * (pos.value() + neg.value());
    let error = (pos.error() + neg.error()) / (2.0 * PI);
    Ok(QuadratureReport {
        value,
        error,
        subdivisions: pos.body.intervals + neg.body.intervals,
        truncation_point: cutoff,
        converged: pos.body.converged && neg.body.converged,
    })
}

fn photon_jump_direct(setup: &Setup, photon: &PhotonSpec, mu: f64) -> Complex64 {
    let up = photon_bound_element_assembled(&BranchedPoint::above(mu), setup, photon);
    let down = photon_bound_element_assembled(&BranchedPoint::below(mu), setup, photon);
    match (up, down) {
        (Ok(a), Ok(b)) => a - b,
        _ => Complex64::new(f64::NAN, f64::NAN),
    }
}

/// Scalar emission amplitude from the Stone representation of the photon element.
pub fn stone_transition(t: f64, photon: &PhotonSpec, setup: &Setup) -> Result<QuadratureReport> {
    if t == 0.0 || !t.is_finite() {
        return Err(domain(format!("Stone oracle needs a finite nonzero time, got {t}")));
    }
    if !(photon.eps > 0.0) {
        return Err(domain("Stone transition oracle needs eps > 0"));
    }
    let (nu, eps) = (photon.nu, photon.eps);
    let extra: Vec<f64> = [-10.0, -3.0, -1.0, 0.0, 1.0, 3.0, 10.0].iter().map(|k| nu + k * eps).collect();
    let h = |mu: f64| mu * photon_jump_direct(setup, photon, mu);
    let r = fourier_half_line(h, t, &resonance_points(setup, &extra), default_cutoff(setup, nu), stone_tolerance());
    Ok(QuadratureReport::from_half_line(r, 1.0 / (PI * I), 1e-6))
}

/// Overlaps reduced to one radial variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OverlapKind {
    /// ∫ 𝒢_z(x)𝒢_λ(x) d³x with 𝒢_z = e^{izr/c}/(4πc²r) on the branch of z.
    GreenGreen { point: BranchedPoint, lambda: f64 },
    /// χ^ε(z) from the plane-wave form factor: (1/c²)∫ r e^{−(ε−iz)r/c}[j₀ − (ε/ν)j₁](νr/c) dr.
    PhotonGreen { point: BranchedPoint, photon: PhotonSpec },
    /// ⟨(−c²Δ − z²)⁻¹ρ_r, ρ_r⟩ for the unit shell of radius r.
    Bracket { point: BranchedPoint, r: f64 },
}

fn j0(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        1.0 - x * x / 6.0 + x.powi(4) / 120.0
    } else {
        x.sin() / x
    }
}

fn j1(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        x / 3.0 - x.powi(3) / 30.0 + x.powi(5) / 840.0
    } else {
        x.sin() / (x * x) - x.cos() / x
    }
}

pub fn radial_overlap_oracle(kind: OverlapKind, params: &PhysicalParams) -> Result<QuadratureReport> {
    let c = params.c;
    let tol = Tolerance::new(1e-16, 1e-12).with_max_intervals(100_000);
    match kind {
        OverlapKind::GreenGreen { point, lambda } => {
            let w = point.upper_argument();
            let decay = lambda - (I * w).re;
            if !(decay > 0.0) {
                return Err(domain("radial Green overlap diverges for this argument"));
            }
            // 4πr² · 𝒢_w(r) · 𝒢_λ(r)
            let f = |r: f64| (I * w * r / c - lambda * r / c).exp() / (4.0 * PI * c.powi(4));
            let scale = c / decay;
            let e = integrate_to_infinity(f, &[0.0, scale], scale, tol);
            Ok(QuadratureReport::from_estimate(e, f64::INFINITY))
        }
        OverlapKind::PhotonGreen { point, photon } => {
            let w = point.upper_argument();
            let (nu, eps) = (photon.nu, photon.eps);
            let decay = eps + w.im;
            if !(decay > 0.0) {
                return Err(domain("radial photon overlap needs eps + Im z > 0"));
            }
            let f = |r: f64| {
                let x = nu * r / c;
                r * ((I * w - eps) * r / c).exp() * (j0(x) - eps / nu * j1(x)) / (c * c)
            };
            let scale = c / decay;
            // breakpoints every quarter period of the slowest oscillation up to 60 decay lengths
            let step = PI * c / (2.0 * (nu + w.re.abs()).max(1e-3));
            let n = ((60.0 * scale / step).ceil() as usize).min(20_000);
            let pts: Vec<f64> = (0..=n).map(|k| k as f64 * step).collect();
            let e = integrate_to_infinity(f, &pts, scale, tol);
            Ok(QuadratureReport::from_estimate(e, f64::INFINITY))
        }
        OverlapKind::Bracket { point, r } => {
            if !(r > 0.0) {
                return Err(domain("shell radius must be positive"));
            }
            let w = point.upper_argument();
            // the distance between two uniform points on the sphere has density d/(2r²) on [0, 2r]
            let f = |d: f64| (I * w * d / c).exp() / (8.0 * PI * c * c * r * r);
            let e = integrate(f, &[0.0, r, 2.0 * r], tol);
            Ok(QuadratureReport::from_estimate(e, 2.0 * r))
        }
    }
}

/// The cut integral along 𝒞^± through u = s², adaptive Kronrod on twice the
/// cutoff of the production path, and an integration-by-parts tail.
pub fn cut_integral_check(t: f64, photon: &PhotonSpec, setup: &Setup) -> Result<QuadratureReport> {
    if !(photon.eps > 0.0) {
        return Err(domain("cut integrals need eps > 0"));
    }
    if t == 0.0 || !t.is_finite() {
        return Err(domain("cut integrals need a finite nonzero time"));
    }
    let (nu, eps) = (photon.nu, photon.eps);
    let s = &setup.spectral;
    let x_max = 2.0 * 50.0 * s.lambda_e.max(nu).max(s.omega_e);
    let (start, sign, pre_sign) =
        if t > 0.0 { (Complex64::new(nu, -eps), 1.0, 1.0) } else { (Complex64::new(nu, eps), -1.0, -1.0) };
    // h(u) on 𝒞⁺ is zU(z), z = ν − iε + u; on 𝒞⁻ it is μU(−μ), μ = ν + iε + u.
    let h = |u: f64| {
        let z = start + u;
        z * photon_coupling(setup, sign * z)
    };
    let g = |v: f64| {
        let u = v * v;
        (-I * t * u).exp() * h(u) * (2.0 * v)
    };
    let v_max = x_max.sqrt();
    let period = (2.0 * PI / t.abs()).sqrt();
    let mut pts: Vec<f64> = vec![0.0];
    let mut v = period.min(1.0);
    while v < v_max {
        pts.push(v);
        v += (PI / (t.abs() * v)).min(1.0);
    }
    pts.push(v_max);
    let body = integrate(g, &pts, Tolerance::new(1e-17, 1e-13).with_max_intervals(2_000_000));
    // ∫_X^∞ e^{−itu}h(u)du = e^{−itX} Σ_k h^{(k)}(X)/(it)^{k+1}
    let dx = 1e-2 * x_max;
    let d0 = h(x_max);
    let d1 = (h(x_max + dx) - h(x_max - dx)) / (2.0 * dx);
    let d2 = (h(x_max + dx) - 2.0 * d0 + h(x_max - dx)) / (dx * dx);
    let it = I * t;
    let tail = (-it * x_max).exp() * (d0 / it + d1 / (it * it) + d2 / (it * it * it));
    let prefactor = pre_sign * eps / (I * nu.powi(3)) * (-I * t * start).exp();
    let value = prefactor * (body.value + tail);
    Ok(QuadratureReport {
        value,
        error: prefactor.norm() * (body.error + (d2 / (it * it * it)).norm()),
        subdivisions: body.intervals,
        truncation_point: x_max,
        converged: body.converged,
    })
}

/// Production cut term, for comparison with [`cut_integral_check`].
pub fn cut_integral_production(t: f64, photon: &PhotonSpec, setup: &Setup) -> Result<Complex64> {
    crate::amplitudes::transition_cut(t, photon, setup)
}

/// Distances of the finite-radius coefficients from their point limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitGap {
    pub r: f64,
    pub k1_mass: f64,
    pub lambda_r: f64,
    pub k2: f64,
}

/// |m_r k₁^r − (m + iaz)|, |Λ^r − Λ₊| and |k₂^r − k₂⁰| at each radius, with
/// k₂⁰ = mω₀²/(m + iaz) − z² the limit of k₂^r.
pub fn regularized_limit_gaps(
    point: &BranchedPoint,
    radii: &[f64],
    params: &PhysicalParams,
    lambda_e: f64,
) -> Result<Vec<LimitGap>> {
    let w = point.upper_argument();
    let lim_k1m = params.m + I * params.a() * w;
    let lim_k2 = params.alpha() / lim_k1m - w * w;
    let lim_lambda = lambda_pm(point, params, lambda_e)?.value;
    radii
        .iter()
        .map(|&r| {
            let c = regularized_coeffs(point, r, params)?;
            Ok(LimitGap {
                r,
                k1_mass: (c.k1 * c.bare_mass - lim_k1m).norm(),
                lambda_r: (c.lambda_r - lim_lambda).norm(),
                k2: (c.k2 - lim_k2).norm(),
            })
        })
        .collect()
}

/// Least-squares slope of log(gap) against log(r).
pub fn convergence_order(gaps: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = gaps.iter().map(|g| g.0.ln()).collect();
    let ys: Vec<f64> = gaps.iter().map(|g| g.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Residue of the projected bound element at z₊ by a small circle in the
/// continued upper-branch variable.
pub fn residue_at_resonance(setup: &Setup, radius: f64) -> Complex64 {
    let z0 = setup.spectral.z_plus;
    let n = 64;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let th = 2.0 * PI * (k as f64 + 0.5) / n as f64;
        let dz = Complex64::from_polar(radius, th);
        let p = BranchedPoint::continued(z0 + dz, Branch::Upper);
        let v = bound_bound_element_assembled(&p, setup).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
        acc += v * dz;
    }
    acc / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_identity_signs() {
        let s = Setup::natural(0.3).unwrap();
        let a = s_kernel_identity(s.spectral.z_plus);
        let b = s_kernel_identity(s.spectral.z_minus);
        assert!((a.value - 1.0).norm() < 1e-9);
        assert!((b.value + 1.0).norm() < 1e-9);
    }

    #[test]
    fn static_overlaps() {
        let p = PhysicalParams::natural(0.3).unwrap();
        let origin = BranchedPoint::continued(Complex64::new(0.0, 0.0), Branch::Upper);
        let g = radial_overlap_oracle(OverlapKind::GreenGreen { point: origin, lambda: 16.7 }, &p).unwrap();
        assert!((g.value.re - 1.0 / (4.0 * PI * 16.7)).abs() < 1e-14);
        let b = radial_overlap_oracle(OverlapKind::Bracket { point: origin, r: 1.0 }, &p).unwrap();
        assert!((b.value.re - 1.0 / (4.0 * PI)).abs() < 1e-14);
    }

    #[test]
    fn kernel_quadrature_is_absolute_value() {
        let f = |s: f64| Complex64::new(4.0 / (s * s + 4.0), 0.0);
        let v = 2.0 / PI * integrate_to_infinity(f, &[0.0, 2.0], 2.0, Tolerance::new(1e-15, 1e-12)).value.re;
        assert!((v - 2.0).abs() < 1e-11);
    }
}
