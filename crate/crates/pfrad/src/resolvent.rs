//! Complex-analytic ingredients: Λ±, the polynomials p and q, Green-function
//! overlaps, projected resolvent elements, the photon profile χ^ε and the
//! finite-radius coefficient family.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::model::{renormalized_mass_split, Fault, PhysicalParams, Setup};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const POLE_GUARD: f64 = 1e-13;
const WARN_GUARD: f64 = 1e-8;
const CUT_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
enum Kind {
    Interior,
    Continued,
    Above,
    Below,
}

/// A complex frequency together with the half-plane branch of 𝒢^± and Λ±.
///
/// Every lower-branch quantity equals the upper-branch formula at −z, so all
/// evaluations go through [`BranchedPoint::upper_argument`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchedPoint {
    z: Complex64,
    branch: Branch,
    kind: Kind,
}

impl BranchedPoint {
    pub fn new(z: Complex64, branch: Branch) -> Result<Self> {
        match branch {
            Branch::Upper if z.im > 0.0 => Ok(Self { z, branch, kind: Kind::Interior }),
            Branch::Lower if z.im < 0.0 => Ok(Self { z, branch, kind: Kind::Interior }),
            _ => Err(Error::Branch(format!("Im z = {} does not match the {branch:?} branch", z.im))),
        }
    }

    pub fn upper(z: Complex64) -> Result<Self> {
        Self::new(z, Branch::Upper)
    }

    pub fn lower(z: Complex64) -> Result<Self> {
        Self::new(z, Branch::Lower)
    }

    /// λ₊ = λ + i0.
    pub fn above(lambda: f64) -> Self {
        Self { z: Complex64::new(lambda, 0.0), branch: Branch::Upper, kind: Kind::Above }
    }

    /// λ₋ = λ − i0.
    pub fn below(lambda: f64) -> Self {
        Self { z: Complex64::new(lambda, 0.0), branch: Branch::Lower, kind: Kind::Below }
    }

    /// Analytic continuation of the given branch to any z.
    pub fn continued(z: Complex64, branch: Branch) -> Self {
        Self { z, branch, kind: Kind::Continued }
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn is_boundary(&self) -> bool {
        matches!(self.kind, Kind::Above | Kind::Below)
    }

    /// Argument at which the upper-branch formula reproduces this point.
    pub fn upper_argument(&self) -> Complex64 {
        match self.branch {
            Branch::Upper => self.z,
            Branch::Lower => -self.z,
        }
    }

    fn to_branch(self, w: Complex64) -> Complex64 {
        match self.branch {
            Branch::Upper => w,
            Branch::Lower => -w,
        }
    }
}

/// A value with a pole-proximity warning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Guarded {
    pub value: Complex64,
    pub near_pole: bool,
}

/// Λ₊(w)⁻¹ = i a w³ − m(ω₀² − w²) on the upper-branch argument.
pub fn cubic(w: Complex64, params: &PhysicalParams) -> Complex64 {
    I * params.a() * w * w * w - params.m * (params.omega0 * params.omega0 - w * w)
}

fn cubic_roots(params: &PhysicalParams, lambda_e: f64) -> Result<[Complex64; 3]> {
    let r = crate::model::solve_resonances(params, lambda_e)?;
    Ok([Complex64::new(0.0, lambda_e), r.z_plus, r.z_minus])
}

fn nearest(roots: &[Complex64], w: Complex64) -> Complex64 {
    *roots.iter().min_by(|a, b| (**a - w).norm().total_cmp(&(**b - w).norm())).expect("nonempty root list")
}

/// Λ±(z) = 1/(±i(2e²/3c³)z³ − m(ω₀² − z²)).
pub fn lambda_pm(point: &BranchedPoint, params: &PhysicalParams, lambda_e: f64) -> Result<Guarded> {
    let w = point.upper_argument();
    let d = cubic(w, params);
    let scale = params.a() * w.norm().powi(3) + params.m * (params.omega0.powi(2) + w.norm_sqr());
    let rel = d.norm() / scale;
    if rel < POLE_GUARD {
        let root = nearest(&cubic_roots(params, lambda_e)?, w);
        return Err(Error::Pole { at: point.z, nearest: point.to_branch(root) });
    }
    Ok(Guarded { value: 1.0 / d, near_pole: rel < WARN_GUARD })
}

/// p(z) = (e²λ/3c³)z + i(m/λ)(ω₀² + λ²/2) and q(z) = (2e²/3c³)z² + i(mω₀²/λ²)(z + iλ).
pub fn char_polys(z: Complex64, params: &PhysicalParams, lambda_e: f64) -> (Complex64, Complex64) {
    let c3 = params.c.powi(3);
    let e2 = params.e * params.e;
    let l = lambda_e;
    let p = e2 * l / (3.0 * c3) * z + I * (params.m / l) * (params.omega0.powi(2) + 0.5 * l * l);
    let b = params.alpha() / (l * l);
    let q = params.a() * z * z + I * b * (z + I * l);
    (p, q)
}

/// p, q and q′ as used by the closed forms, honouring any injected fault.
pub(crate) fn polys(setup: &Setup, z: Complex64) -> (Complex64, Complex64, Complex64) {
    let params = &setup.params;
    let l = setup.spectral.lambda_e;
    let (p, q) = char_polys(z, params, l);
    let b = params.alpha() / (l * l);
    let mut dq = 2.0 * params.a() * z + I * b;
    let mut q = q;
    if setup.fault() == Some(Fault::FlipQDamping) {
        q -= 2.0 * I * b * (z + I * l);
        dq -= 2.0 * I * b;
    }
    (p, q, dq)
}

/// ⟨𝒢^∓_{z*}, 𝒢_λ⟩ = 1/(4πc³(λ ∓ iz)).
pub fn green_overlap(point: &BranchedPoint, lambda_e: f64, params: &PhysicalParams) -> Result<Complex64> {
    let w = point.upper_argument();
    let den = lambda_e - I * w;
    if den.norm() < POLE_GUARD * (lambda_e + w.norm()) {
        return Err(Error::Pole { at: point.z, nearest: point.to_branch(Complex64::new(0.0, -lambda_e)) });
    }
    Ok(1.0 / (4.0 * PI * params.c.powi(3) * den))
}

/// Prefactor K of the projected bound-bound element K·p(z)/((z+iλ)q(z)).
pub fn bound_prefactor(setup: &Setup) -> f64 {
    let s = &setup.spectral;
    -2.0 * s.kappa0 * s.kappa2 / (3.0 * s.kappa * s.kappa)
}

/// f(z) = p(z)/((z + iλ)q(z)) on the upper-branch argument.
pub(crate) fn f_rational(setup: &Setup, w: Complex64) -> Result<Complex64> {
    let l = setup.spectral.lambda_e;
    let (p, q, _) = polys(setup, w);
    let den = (w + I * l) * q;
    let scale = (w.norm() + l) * (setup.params.a() * w.norm_sqr() + setup.params.alpha() / l);
    if den.norm() < POLE_GUARD * scale {
        let s = &setup.spectral;
        let root = nearest(&[Complex64::new(0.0, -l), s.z_plus, s.z_minus], w);
        return Err(Error::Pole { at: w, nearest: root });
    }
    Ok(p / den)
}

/// Scalar factor of ⟨(0,ζ₁), (L_e − z²)⁻¹(0,ζ₂)⁺⟩ by the p/q closed form.
pub fn bound_bound_element(point: &BranchedPoint, setup: &Setup) -> Result<Complex64> {
    let w = point.upper_argument();
    let f = f_rational(setup, w).map_err(|e| match e {
        Error::Pole { nearest, .. } => Error::Pole { at: point.z, nearest: point.to_branch(nearest) },
        other => other,
    })?;
    Ok(bound_prefactor(setup) * f)
}

/// The same element assembled from Λ₊ and the runaway eigenprojection,
/// −κ₀Λ₊(z)(m + iaz) + (κ₀²/κ²)/(z² + λ²), without using q.
pub fn bound_bound_element_assembled(point: &BranchedPoint, setup: &Setup) -> Result<Complex64> {
    let w = point.upper_argument();
    let s = &setup.spectral;
    let params = &setup.params;
    let lam = lambda_pm(point, params, s.lambda_e)?.value;
    let den = w * w + s.lambda_e * s.lambda_e;
    if den.norm() < POLE_GUARD * s.lambda_e * s.lambda_e {
        return Err(Error::Pole { at: point.z, nearest: point.to_branch(Complex64::new(0.0, s.lambda_e)) });
    }
    let k2 = s.kappa * s.kappa;
    Ok(-s.kappa0 * lam * (params.m + I * params.a() * w) + s.kappa0 * s.kappa0 / k2 / den)
}

/// Photon frequency, regularization, propagation direction and polarization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhotonSpec {
    pub nu: f64,
    pub eps: f64,
    pub k: [f64; 3],
    pub zeta: [Complex64; 3],
}

impl PhotonSpec {
    pub fn new(nu: f64, eps: f64, k: [f64; 3], zeta: [Complex64; 3]) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(domain(format!("photon frequency must be positive, got {nu}")));
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(domain(format!("regularization must be nonnegative, got {eps}")));
        }
        let norm = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(domain(format!("propagation direction must be a unit vector, |k| = {norm}")));
        }
        Ok(Self { nu, eps, k, zeta })
    }

    /// Photon along z with x polarization.
    pub fn simple(nu: f64, eps: f64) -> Result<Self> {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self::new(nu, eps, [0.0, 0.0, 1.0], [one, zero, zero])
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        Self { eps, ..*self }
    }

    /// k·(ζ₁* ∧ ζ₂), with ζ₁ this photon's polarization.
    pub fn geometric_factor(&self, level: &[Complex64; 3]) -> Complex64 {
        let a = [self.zeta[0].conj(), self.zeta[1].conj(), self.zeta[2].conj()];
        let b = level;
        let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
        cross[0] * self.k[0] + cross[1] * self.k[1] + cross[2] * self.k[2]
    }

    /// ‖φ^ε‖² = (πc³/ε³)(|k ∧ ζ|² + (2ε²/(3ν²))|ζ|²); infinite at ε = 0.
    pub fn norm_sq(&self, c: f64) -> f64 {
        let z = &self.zeta;
        let k = &self.k;
        let cross = [z[1] * k[2] - z[2] * k[1], z[2] * k[0] - z[0] * k[2], z[0] * k[1] - z[1] * k[0]];
        let kz2: f64 = cross.iter().map(|v| v.norm_sqr()).sum();
        let z2: f64 = z.iter().map(|v| v.norm_sqr()).sum();
        PI * c.powi(3) / self.eps.powi(3) * (kz2 + 2.0 * self.eps * self.eps / (3.0 * self.nu * self.nu) * z2)
    }

    /// The two poles w_k = (−1)^k ν − iε, k = 1, 2.
    pub fn poles(&self) -> [Complex64; 2] {
        [Complex64::new(-self.nu, -self.eps), Complex64::new(self.nu, -self.eps)]
    }

    /// Residues r_k of χ_r at w_k.
    pub fn residues(&self) -> [Complex64; 2] {
        let nu2 = self.nu * self.nu;
        let w = self.poles();
        [-w[0] / (2.0 * nu2), -w[1] / (2.0 * nu2)]
    }
}

/// χ^ε split into its rational and logarithmic parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiValue {
    pub rational: Complex64,
    pub logarithmic: Complex64,
    pub total: Complex64,
}

/// Distance from w to the cut components 𝒞^± = {±(ν + u) − iε : u > 0}.
pub fn cut_distance(w: Complex64, photon: &PhotonSpec) -> f64 {
    let (nu, eps) = (photon.nu, photon.eps);
    let along = w.re.abs();
    let dy = (w.im + eps).abs();
    if along >= nu {
        dy
    } else {
        ((nu - along).powi(2) + dy * dy).sqrt()
    }
}

pub(crate) fn chi_upper(w: Complex64, photon: &PhotonSpec) -> Result<ChiValue> {
    let (nu, eps) = (photon.nu, photon.eps);
    let nu2 = nu * nu;
    for (k, pole) in photon.poles().iter().enumerate() {
        if (w - pole).norm() < POLE_GUARD * nu {
            return Err(Error::Pole { at: w, nearest: photon.poles()[k] });
        }
    }
    if eps > 0.0 {
        let d = cut_distance(w, photon);
        if d < CUT_GUARD * nu {
            return Err(Error::Cut { distance: d });
        }
    }
    let s = eps - I * w;
    let rational = (nu2 + eps * s) / (nu2 * (nu2 + s * s));
    let logarithmic =
        if eps > 0.0 { -(eps / (nu2 * nu)) * (PI / 2.0 - (s / nu).atan()) } else { Complex64::new(0.0, 0.0) };
    Ok(ChiValue { rational, logarithmic, total: rational + logarithmic })
}

/// Photon profile χ^ε on the branch of `point`, cut along 𝒞^±.
pub fn chi_eps(point: &BranchedPoint, photon: &PhotonSpec) -> Result<ChiValue> {
    chi_upper(point.upper_argument(), photon)
}

/// 4πec·i/((z − iλ)q(z)) = −4πec·Λ₊(z), written through q.
pub(crate) fn photon_coupling(setup: &Setup, w: Complex64) -> Complex64 {
    let l = setup.spectral.lambda_e;
    let (_, q, _) = polys(setup, w);
    4.0 * PI * setup.params.e * setup.params.c * I / ((w - I * l) * q)
}

/// κ₀κ₁/κ², the weight of the eigenprojection in the photon element.
pub fn photon_projection_weight(setup: &Setup) -> f64 {
    let s = &setup.spectral;
    s.kappa0 * s.kappa1 / (s.kappa * s.kappa)
}

/// Closed-form pieces of the photon-bound element G(z) = U(z)χ(z) − Cχ(iλ)/(z² + λ²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhotonElementParts {
    pub coupling: Complex64,
    pub chi: ChiValue,
    pub chi_runaway: Complex64,
    pub projection: Complex64,
    pub total: Complex64,
}

/// Scalar factor of ⟨(φ^ε,0), (L_e − z²)⁻¹(0,ζ₂)⁺⟩ through q.
pub fn photon_bound_element(point: &BranchedPoint, setup: &Setup, photon: &PhotonSpec) -> Result<PhotonElementParts> {
    let w = point.upper_argument();
    let l = setup.spectral.lambda_e;
    let chi = chi_upper(w, photon)?;
    let chi_runaway = chi_upper(Complex64::new(0.0, l), photon)?.total;
    let den = w * w + l * l;
    if den.norm() < POLE_GUARD * l * l {
        return Err(Error::Pole { at: point.z, nearest: point.to_branch(Complex64::new(0.0, l)) });
    }
    let (_, q, _) = polys(setup, w);
    if q.norm() < POLE_GUARD * (setup.params.a() * w.norm_sqr() + setup.params.alpha() / l) {
        let s = &setup.spectral;
        return Err(Error::Pole { at: point.z, nearest: point.to_branch(nearest(&[s.z_plus, s.z_minus], w)) });
    }
    let coupling = photon_coupling(setup, w);
    let projection = -photon_projection_weight(setup) * chi_runaway / den;
    Ok(PhotonElementParts { coupling, chi, chi_runaway, projection, total: coupling * chi.total + projection })
}

/// Same element assembled from Λ₊ directly: −4πec·Λ₊(z)χ(z) − Cχ(iλ)/(z² + λ²).
pub fn photon_bound_element_assembled(point: &BranchedPoint, setup: &Setup, photon: &PhotonSpec) -> Result<Complex64> {
    let w = point.upper_argument();
    let s = &setup.spectral;
    let params = &setup.params;
    let lam = lambda_pm(point, params, s.lambda_e)?.value;
    let chi = chi_upper(w, photon)?.total;
    let chi_runaway = chi_upper(Complex64::new(0.0, s.lambda_e), photon)?.total;
    let den = w * w + s.lambda_e * s.lambda_e;
    Ok(-4.0 * PI * params.e * params.c * lam * chi - photon_projection_weight(setup) * chi_runaway / den)
}

/// g(λ) = −4πec·Λ₊(λ)χ(λ) at real λ: the part of the photon element that
/// jumps, since G(λ₊) − G(λ₋) = g(λ) − g(−λ).
pub fn photon_jump_density(lambda: f64, setup: &Setup, photon: &PhotonSpec) -> Result<Complex64> {
    let w = Complex64::new(lambda, 0.0);
    let chi = chi_upper(w, photon)?.total;
    Ok(photon_coupling(setup, w) * chi)
}

/// Jump G(λ₊) − G(λ₋) of the photon element across the positive axis.
pub fn photon_jump(lambda: f64, setup: &Setup, photon: &PhotonSpec) -> Result<Complex64> {
    let a = photon_bound_element(&BranchedPoint::above(lambda), setup, photon)?.total;
    let b = photon_bound_element(&BranchedPoint::below(lambda), setup, photon)?.total;
    Ok(a - b)
}

/// Finite-radius coefficients of the shell-regularized resolvent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularizedCoeffs {
    pub k1: Complex64,
    pub k2: Complex64,
    pub lambda_r: Complex64,
    pub green_bracket: Complex64,
    pub bare_mass: f64,
}

impl RegularizedCoeffs {
    /// Unprojected bound-bound element −κ₀Λ^r m_r k₁^r.
    pub fn bound_element(&self, kappa0: f64) -> Complex64 {
        -kappa0 * self.lambda_r * self.bare_mass * self.k1
    }
}

/// Bound-bound element of the finite-radius theory carried through the same
/// runaway projection: −κ₀Λ^r m_r k₁^r + (κ₀²/κ²)/(z² + λ²).
pub fn regularized_bound_element(point: &BranchedPoint, r: f64, setup: &Setup) -> Result<Complex64> {
    let coeffs = regularized_coeffs(point, r, &setup.params)?;
    let s = &setup.spectral;
    let w = point.upper_argument();
    let den = w * w + s.lambda_e * s.lambda_e;
    Ok(coeffs.bound_element(s.kappa0) + s.kappa0 * s.kappa0 / (s.kappa * s.kappa) / den)
}

/// (e^x − 1)/x for complex x, accurate near 0.
fn expm1_ratio(x: Complex64) -> Complex64 {
    if x.norm() > 1e-3 {
        return (x.exp() - 1.0) / x;
    }
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 2..20 {
        term *= x / k as f64;
        sum += term;
    }
    sum
}

/// ⟨(−c²Δ − z²)⁻¹ρ_r, ρ_r⟩ for the unit shell at radius r, upper-branch argument w.
pub fn shell_bracket(w: Complex64, r: f64, c: f64) -> Complex64 {
    let x = 2.0 * I * (w / c) * r;
    // (e^{2iκr} − 1)/(8πiκr²c²) = 2r·(e^x − 1)/x / (8πr²c²)
    expm1_ratio(x) / (4.0 * PI * r * c * c)
}

/// k₁^r, k₂^r, Λ^r and the Green bracket for the shell form factor.
pub fn regularized_coeffs(point: &BranchedPoint, r: f64, params: &PhysicalParams) -> Result<RegularizedCoeffs> {
    let (bare, _) = renormalized_mass_split(params, r)?;
    if bare.abs() < 1e-14 * params.m {
        return Err(Error::Singular(format!("bare mass vanishes at r = {r}")));
    }
    let w = point.upper_argument();
    let e2 = params.e * params.e;
    let alpha = params.alpha();
    let bracket = shell_bracket(w, r, params.c);
    let k1 = 1.0 + 8.0 * PI / 3.0 * e2 / bare * bracket;
    let k2 = alpha / bare - w * w - 8.0 * PI / 3.0 * alpha * e2 / (bare * bare * k1) * bracket;
    let lambda_r = -1.0 / (bare * k1 * k2);
    Ok(RegularizedCoeffs { k1, k2, lambda_r, green_bracket: bracket, bare_mass: bare })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> Setup {
        Setup::natural(0.3).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn branch_validation() {
        assert!(BranchedPoint::upper(c(1.0, -0.1)).is_err());
        assert!(BranchedPoint::lower(c(1.0, 0.1)).is_err());
        assert!(BranchedPoint::upper(c(1.0, 0.0)).is_err());
        assert_eq!(BranchedPoint::lower(c(1.0, -0.5)).unwrap().upper_argument(), c(-1.0, 0.5));
    }

    #[test]
    fn lambda_pm_poles_and_origin() {
        let s = setup();
        let l = s.spectral.lambda_e;
        let at_runaway = BranchedPoint::upper(c(0.0, l)).unwrap();
        match lambda_pm(&at_runaway, &s.params, l) {
            Err(Error::Pole { nearest, .. }) => assert!((nearest - c(0.0, l)).norm() < 1e-9),
            other => panic!("expected pole, got {other:?}"),
        }
        let res = BranchedPoint::continued(s.spectral.z_plus, Branch::Upper);
        assert!(matches!(lambda_pm(&res, &s.params, l), Err(Error::Pole { .. })));
        let origin = BranchedPoint::continued(c(0.0, 0.0), Branch::Upper);
        let v = lambda_pm(&origin, &s.params, l).unwrap().value;
        assert!((v + 1.0).norm() < 1e-15);
    }

    #[test]
    fn q_vanishes_at_resonance() {
        let s = setup();
        let (_, q) = char_polys(s.spectral.z_plus, &s.params, s.spectral.lambda_e);
        assert!(q.norm() < 1e-13);
        let (_, q) = char_polys(c(0.0, -s.spectral.lambda_e), &s.params, s.spectral.lambda_e);
        assert!(q.norm() > 1e-8);
    }

    #[test]
    fn green_overlap_static() {
        let s = setup();
        let l = s.spectral.lambda_e;
        let v = green_overlap(&BranchedPoint::continued(c(0.0, 0.0), Branch::Upper), l, &s.params).unwrap();
        assert!((v.re - 1.0 / (4.0 * PI * l)).abs() < 1e-16);
        assert!(green_overlap(&BranchedPoint::continued(c(0.0, -l), Branch::Upper), l, &s.params).is_err());
    }

    #[test]
    fn closed_and_assembled_elements_agree() {
        let s = setup();
        for &(x, y) in &[(0.3, 0.7), (-1.2, 0.4), (2.0, 5.0), (0.0, 1.0), (20.0, 0.01)] {
            let p = BranchedPoint::upper(c(x, y)).unwrap();
            let a = bound_bound_element(&p, &s).unwrap();
            let b = bound_bound_element_assembled(&p, &s).unwrap();
            assert!((a - b).norm() < 1e-12 * a.norm(), "{a} vs {b}");
        }
    }

    #[test]
    fn photon_element_routes_agree_and_runaway_pole_cancels() {
        let s = setup();
        let ph = PhotonSpec::simple(1.1, 0.05).unwrap();
        for &(x, y) in &[(0.3, 0.7), (-1.2, 0.4), (2.0, 5.0)] {
            let p = BranchedPoint::upper(c(x, y)).unwrap();
            let a = photon_bound_element(&p, &s, &ph).unwrap().total;
            let b = photon_bound_element_assembled(&p, &s, &ph).unwrap();
            assert!((a - b).norm() < 1e-12 * a.norm());
        }
        let l = s.spectral.lambda_e;
        let h = 1e-5;
        let near = |d: f64| photon_bound_element(&BranchedPoint::upper(c(0.0, l + d)).unwrap(), &s, &ph).unwrap().total;
        let (a, b) = (near(h), near(-h));
        let uncancelled = (photon_projection_weight(&s) * ph_chi_runaway(&s, &ph) / (2.0 * l * h)).norm();
        assert!((a - b).norm() < 1e-8 * uncancelled, "pole at iλ did not cancel: {a} vs {b}");
    }

    fn ph_chi_runaway(s: &Setup, ph: &PhotonSpec) -> Complex64 {
        chi_eps(&BranchedPoint::upper(c(0.0, s.spectral.lambda_e)).unwrap(), ph).unwrap().total
    }

    #[test]
    fn chi_cut_and_branch_symmetry() {
        let ph = PhotonSpec::simple(1.0, 0.01).unwrap();
        let on_cut = BranchedPoint::continued(c(1.5, -0.01), Branch::Upper);
        assert!(matches!(chi_eps(&on_cut, &ph), Err(Error::Cut { .. })));
        let o = BranchedPoint::continued(c(0.0, 0.0), Branch::Upper);
        let u = chi_eps(&o, &ph).unwrap().total;
        let l = chi_eps(&BranchedPoint::continued(c(0.0, 0.0), Branch::Lower), &ph).unwrap().total;
        assert_eq!(u, l);
    }

    #[test]
    fn shell_bracket_static_limit() {
        let b = shell_bracket(c(0.0, 0.0), 1.0, 1.0);
        assert!((b.re - 1.0 / (4.0 * PI)).abs() < 1e-16 && b.im.abs() < 1e-16);
    }

    #[test]
    fn photon_jump_matches_density() {
        let s = setup();
        let ph = PhotonSpec::simple(1.1, 0.05).unwrap();
        for &l in &[0.1, 0.9, 2.5, 5.0] {
            let j = photon_jump(l, &s, &ph).unwrap();
            let g = photon_jump_density(l, &s, &ph).unwrap() - photon_jump_density(-l, &s, &ph).unwrap();
            assert!((j - g).norm() < 1e-13 * j.norm());
        }
    }

    #[test]
    fn regularized_element_at_i() {
        let s = setup();
        let p = BranchedPoint::upper(c(0.0, 1.0)).unwrap();
        let exact = bound_bound_element(&p, &s).unwrap();
        let gaps: Vec<f64> =
            [1e-3, 1e-4].iter().map(|&r| (regularized_bound_element(&p, r, &s).unwrap() - exact).norm()).collect();
        assert!(gaps[0] < 1e-2 * exact.norm());
        assert!((gaps[0] / gaps[1]).log10() > 0.85);
    }

    #[test]
    fn critical_radius_is_singular() {
        let p = PhysicalParams::natural(0.3).unwrap();
        let rc = 2.0 * 0.09 / 3.0;
        let pt = BranchedPoint::upper(c(1.0, 1.0)).unwrap();
        assert!(matches!(regularized_coeffs(&pt, rc, &p), Err(Error::Singular(_))));
    }
}
