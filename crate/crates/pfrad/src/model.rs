//! Physical parameters, mass renormalization and the spectral data of the
//! point-limit oscillator.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Charge, mass, light speed, oscillator frequency and Planck constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub e: f64,
    pub m: f64,
    pub c: f64,
    pub omega0: f64,
    pub hbar: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self { e: 0.3, m: 1.0, c: 1.0, omega0: 1.0, hbar: 1.0 }
    }
}

impl PhysicalParams {
    /// Validated constructor. `e = 0` is accepted as the uncoupled limit;
    /// everything else must be strictly positive.
    pub fn new(e: f64, m: f64, c: f64, omega0: f64, hbar: f64) -> Result<Self> {
        let p = Self { e, m, c, omega0, hbar };
        p.validate()?;
        Ok(p)
    }

    pub fn natural(e: f64) -> Result<Self> {
        Self::new(e, 1.0, 1.0, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let named = [("m", self.m), ("c", self.c), ("omega0", self.omega0), ("hbar", self.hbar)];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain(format!("{name} must be finite and positive, got {v}")));
            }
        }
        if !(self.e.is_finite() && self.e >= 0.0) {
            return Err(domain(format!("charge must be finite and nonnegative, got {}", self.e)));
        }
        Ok(())
    }

    fn require_coupled(&self) -> Result<()> {
        self.validate()?;
        if self.e <= 0.0 {
            return Err(domain("operation needs a nonzero charge"));
        }
        Ok(())
    }

    /// a = 2e²/(3c³), the radiation-reaction coefficient of the cubic.
    pub fn a(&self) -> f64 {
        2.0 * self.e * self.e / (3.0 * self.c.powi(3))
    }

    /// τ₀ = 2e²/(3mc³).
    pub fn tau0(&self) -> f64 {
        self.a() / self.m
    }

    /// α = mω₀².
    pub fn alpha(&self) -> f64 {
        self.m * self.omega0 * self.omega0
    }
}

/// Bare and electromagnetic mass for the spherical-shell form factor of radius `r`.
pub fn renormalized_mass_split(params: &PhysicalParams, r: f64) -> Result<(f64, f64)> {
    params.validate()?;
    if !(r.is_finite() && r > 0.0) {
        return Err(domain(format!("radius must be positive, got {r}")));
    }
    // ⟨(−Δ)⁻¹ρ_r, ρ_r⟩ = 1/(4πr) for the shell.
    let bracket = 1.0 / (4.0 * PI * r);
    let em = 8.0 * PI / 3.0 * params.e * params.e / (params.c * params.c) * bracket;
    Ok((params.m - em, em))
}

/// Unique positive root of (2e²/3c³)λ³ − m(ω₀² + λ²) = 0.
pub fn solve_lambda_e(params: &PhysicalParams) -> Result<f64> {
    params.require_coupled()?;
    let a = params.a();
    let m = params.m;
    let w2 = params.omega0 * params.omega0;
    let f = |x: f64| a * x * x * x - m * (w2 + x * x);
    let df = |x: f64| 3.0 * a * x * x - 2.0 * m * x;

    let tau = params.tau0();
    let mut lo = 1.0 / tau;
    let mut hi = 2.0 / tau + w2 * tau;
    assert!(f(lo) <= 0.0 && f(hi) > 0.0, "root bracket lost its sign change");
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-6 * hi {
            break;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..50 {
        let step = f(x) / df(x);
        x -= step;
        if step.abs() <= 1e-16 * x {
            break;
        }
    }
    let scale = a * x.powi(3) + m * (w2 + x * x);
    let residual = f(x).abs() / scale;
    assert!(x > 0.0, "runaway root must be positive");
    if residual > 1e-12 {
        return Err(Error::Accuracy { estimate: residual, target: 1e-12 });
    }
    Ok(x)
}

/// Relative residual of the λ cubic at `lambda`.
pub fn lambda_cubic_residual(params: &PhysicalParams, lambda: f64) -> f64 {
    let a = params.a();
    let w2 = params.omega0 * params.omega0;
    let f = a * lambda.powi(3) - params.m * (w2 + lambda * lambda);
    f.abs() / (a * lambda.powi(3) + params.m * (w2 + lambda * lambda))
}

/// The two roots of q, ordered by the sign of their real part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resonances {
    pub z_plus: Complex64,
    pub z_minus: Complex64,
    /// Discriminant vanished to 1e−14: a double root.
    pub degenerate: bool,
}

/// Roots of q(z) = (2e²/3c³)z² + i(mω₀²/λ²)(z + iλ) by the quadratic formula.
pub fn solve_resonances(params: &PhysicalParams, lambda_e: f64) -> Result<Resonances> {
    params.require_coupled()?;
    if !(lambda_e > 0.0) {
        return Err(domain("lambda_e must be positive"));
    }
    let a = params.a();
    let b = params.alpha() / (lambda_e * lambda_e);
    let c0 = params.alpha() / lambda_e;
    // a z² + i b z − b λ = 0, discriminant −b² + 4 a b λ.
    let disc = 4.0 * a * c0 - b * b;
    let degenerate = disc.abs() <= 1e-14 * (4.0 * a * c0 + b * b);
    let root = Complex64::new(disc, 0.0).sqrt();
    let ib = Complex64::new(0.0, b);
    let r1 = (root - ib) / (2.0 * a);
    let r2 = (-root - ib) / (2.0 * a);
    let (z_plus, z_minus) = if r1.re >= r2.re { (r1, r2) } else { (r2, r1) };
    Ok(Resonances { z_plus, z_minus, degenerate })
}

/// Truncated small-charge expansions for ω_e and γ_e, as printed in the literature.
pub fn perturbative_resonances(params: &PhysicalParams) -> (f64, f64) {
    let PhysicalParams { e, m, c, omega0: w, .. } = *params;
    let omega = w + 28.0 * w.powi(3) / (3.0 * m * m * c.powi(6)) * e.powi(4);
    let gamma = 2.0 * w * w / (3.0 * m * c.powi(3)) * e * e;
    (omega, gamma)
}

/// Runaway eigenvalue, resonance poles and normalization constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralData {
    pub lambda_e: f64,
    pub z_plus: Complex64,
    pub z_minus: Complex64,
    pub omega_e: f64,
    pub gamma_e: f64,
    pub kappa0: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    /// First-principles κ from ‖ψ⁰‖ = 1.
    pub kappa: f64,
    /// κ as printed in the literature, (2πe²λ³/(m²ω₀⁴c) + κ₀)^{1/2}, for comparison only.
    pub kappa_literature: f64,
}

impl SpectralData {
    /// Weight 1 − κ₀/κ² of a bound state on the absolutely continuous subspace.
    pub fn projection_weight(&self) -> f64 {
        1.0 - self.kappa0 / (self.kappa * self.kappa)
    }
}

pub fn derived_constants(params: &PhysicalParams, lambda_e: f64) -> Result<SpectralData> {
    let res = solve_resonances(params, lambda_e)?;
    let PhysicalParams { e, m, c, omega0, .. } = *params;
    let w4 = omega0.powi(4);
    let kappa0 = 4.0 * PI * c * c / (m * omega0 * omega0);
    let kappa1 = e / c * lambda_e * lambda_e * kappa0;
    let kappa2 = 4.0 * PI * e * e * lambda_e * lambda_e / (m * m * w4 * c);
    // ‖M ζ 𝒢_λ‖² = (2/3)‖𝒢_λ‖²|ζ|² with ‖𝒢_λ‖² = 1/(8πc³λ) for 𝒢_λ = e^{−λr/c}/(4πc²r).
    let green_norm2 = 1.0 / (8.0 * PI * c.powi(3) * lambda_e);
    let kappa_sq = kappa1 * kappa1 * (2.0 / 3.0) * green_norm2 + kappa0;
    let kappa_literature = (2.0 * PI * e * e * lambda_e.powi(3) / (m * m * w4 * c) + kappa0).sqrt();
    Ok(SpectralData {
        lambda_e,
        z_plus: res.z_plus,
        z_minus: res.z_minus,
        omega_e: res.z_plus.re,
        gamma_e: -res.z_plus.im,
        kappa0,
        kappa1,
        kappa2,
        kappa: kappa_sq.sqrt(),
        kappa_literature,
    })
}

/// Deliberate defects used to check that verification detects them.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fault {
    /// Flip the sign of the damping term i(mω₀²/λ²)(z + iλ) inside q.
    FlipQDamping,
    /// Evaluate the J₂ principal value without its pole subtraction.
    DropJ2Subtraction,
}

/// Parameters together with their solved spectral data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setup {
    pub params: PhysicalParams,
    pub spectral: SpectralData,
    fault: Option<Fault>,
}

impl Setup {
    pub fn new(params: PhysicalParams) -> Result<Self> {
        let lambda = solve_lambda_e(&params)?;
        let spectral = derived_constants(&params, lambda)?;
        Ok(Self { params, spectral, fault: None })
    }

    pub fn natural(e: f64) -> Result<Self> {
        Self::new(PhysicalParams::natural(e)?)
    }

    #[doc(hidden)]
    pub fn with_fault(mut self, fault: Option<Fault>) -> Self {
        self.fault = fault;
        self
    }

    #[doc(hidden)]
    pub fn fault(&self) -> Option<Fault> {
        self.fault
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_at_standard_coupling() {
        let p = PhysicalParams::natural(0.3).unwrap();
        let l = solve_lambda_e(&p).unwrap();
        assert!((l - 16.72624002730106).abs() < 1e-10);
        assert!(lambda_cubic_residual(&p, l) < 1e-14);
    }

    #[test]
    fn lambda_vanishing_frequency() {
        let p = PhysicalParams::new(0.3, 1.0, 1.0, 1e-9, 1.0).unwrap();
        let l = solve_lambda_e(&p).unwrap();
        assert!((l * p.tau0() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn resonances_standard() {
        let p = PhysicalParams::natural(0.3).unwrap();
        let l = solve_lambda_e(&p).unwrap();
        let r = solve_resonances(&p, l).unwrap();
        assert!((r.z_plus - Complex64::new(0.997773061812928, -0.029786680317198)).norm() < 1e-11);
        assert!((r.z_minus + r.z_plus.conj()).norm() < 1e-14);
        assert!(!r.degenerate);
    }

    #[test]
    fn mass_split_shell() {
        let p = PhysicalParams::natural(0.3).unwrap();
        let (bare, em) = renormalized_mass_split(&p, 1.0).unwrap();
        assert!((em - 0.06).abs() < 1e-15);
        assert!((bare - 0.94).abs() < 1e-15);
        let (_, em2) = renormalized_mass_split(&p, 0.5).unwrap();
        assert!((em2 - 0.12).abs() < 1e-15);
        assert!(renormalized_mass_split(&p, 0.0).is_err());
        let free = PhysicalParams::natural(0.0).unwrap();
        assert_eq!(renormalized_mass_split(&free, 1.0).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn perturbative_values() {
        let p = PhysicalParams::natural(0.3).unwrap();
        let (w, g) = perturbative_resonances(&p);
        assert!((g - 0.06).abs() < 1e-15);
        assert!((w - (1.0 + 28.0 / 3.0 * 0.3f64.powi(4))).abs() < 1e-15);
        let free = PhysicalParams::natural(0.0).unwrap();
        assert_eq!(perturbative_resonances(&free), (1.0, 0.0));
    }

    #[test]
    fn constants_standard() {
        let s = Setup::natural(0.3).unwrap().spectral;
        assert!((s.kappa0 - 4.0 * PI).abs() < 1e-14);
        assert!((s.kappa2 - 4.0 * PI * 0.09 * s.lambda_e * s.lambda_e).abs() < 1e-10);
        assert!((s.kappa * s.kappa - 1776.678122322722).abs() < 1e-8);
        let w = s.projection_weight();
        assert!(w > 0.0 && w <= 1.0);
        assert!((w - s.kappa2 * s.lambda_e / (3.0 * s.kappa * s.kappa)).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(PhysicalParams::new(0.3, -1.0, 1.0, 1.0, 1.0).is_err());
        assert!(PhysicalParams::new(f64::NAN, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(solve_lambda_e(&PhysicalParams::natural(0.0).unwrap()).is_err());
    }
}
