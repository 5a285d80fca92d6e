//! Exponential integrals and the principal-value Laplace kernel.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::quad::{integrate, integrate_to_infinity, Tolerance};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082_402_43;

/// Positive zero of Ei.
const EI_ROOT: f64 = 0.372_507_410_781_366_634_461_991_866_580;

const SERIES_LIMIT: f64 = 40.0;

/// Principal-value domain descriptor P.V.∫₀^∞ e^{−st}/(s−λ) ds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PvKernelSpec {
    pub lambda: f64,
    pub t: f64,
}

impl PvKernelSpec {
    pub fn new(lambda: f64, t: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(domain(format!("pole location must be positive, got {lambda}")));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(domain(format!("time must be positive, got {t}")));
        }
        Ok(Self { lambda, t })
    }
}

fn ei_series(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..500 {
        term *= x / k as f64;
        let add = term / k as f64;
        sum += add;
        if add < 1e-17 * sum {
            break;
        }
    }
    EULER_GAMMA + x.ln() + sum
}

/// Taylor expansion of Ei about its positive zero; avoids cancellation
/// in γ + ln x + Σ near the root.
fn ei_near_root(x: f64) -> f64 {
    let x0 = EI_ROOT;
    let ex0 = x0.exp();
    let d = x - x0;
    // h_n = g⁽ⁿ⁾(x₀)/n! for g = eˣ/x, from x·g⁽ⁿ⁾ + n·g⁽ⁿ⁻¹⁾ = eˣ.
    let mut h = ex0 / x0;
    let mut inv_fact = 1.0;
    let mut pow = d;
    let mut sum = h * pow;
    for n in 1..200 {
        inv_fact /= n as f64;
        h = (ex0 * inv_fact - h) / x0;
        pow *= d;
        let add = h * pow / (n + 1) as f64;
        sum += add;
        if add.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// Σ_k k!/x^k, truncated at its smallest term.
fn asymptotic_sum(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let next = term * k as f64 / x;
        if next >= term || next < 1e-18 * sum {
            break;
        }
        term = next;
        sum += term;
    }
    sum
}

/// Ei(x) = −P.V.∫_{−x}^∞ e^{−u}/u du for x > 0.
pub fn exp_integral_ei(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain(format!("Ei needs a positive argument, got {x}")));
    }
    Ok(ei_unchecked(x))
}

fn ei_unchecked(x: f64) -> f64 {
    if (0.25..=0.5).contains(&x) {
        ei_near_root(x)
    } else if x <= SERIES_LIMIT {
        ei_series(x)
    } else {
        x.exp() / x * asymptotic_sum(x)
    }
}

/// Asymptotic branch of Ei, exposed for the overlap-band check.
pub fn ei_asymptotic(x: f64) -> f64 {
    x.exp() / x * asymptotic_sum(x)
}

/// Power-series branch of Ei, exposed for the overlap-band check.
pub fn ei_power_series(x: f64) -> f64 {
    ei_series(x)
}

/// e^{−x}Ei(x), finite for all x > 0.
pub fn scaled_ei(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain(format!("Ei needs a positive argument, got {x}")));
    }
    Ok(if x <= SERIES_LIMIT { (-x).exp() * ei_unchecked(x) } else { asymptotic_sum(x) / x })
}

/// P.V.∫₀^∞ e^{−st}/(s−λ) ds = −e^{−λt}Ei(λt).
pub fn pv_laplace_pole(t: f64, lambda: f64) -> Result<f64> {
    let spec = PvKernelSpec::new(lambda, t)?;
    Ok(-scaled_ei(spec.lambda * spec.t)?)
}

/// Same principal value by quadrature: excluded window [λ−δ, λ+δ] with its
/// contribution summed analytically, symmetric pairing on [λ−λ, λ+λ] outside
/// the window, and a mapped half-line beyond 2λ.
pub fn pv_laplace_pole_quadrature(t: f64, lambda: f64) -> Result<f64> {
    let spec = PvKernelSpec::new(lambda, t)?;
    let (l, t) = (spec.lambda, spec.t);
    let delta = 1e-4 * l;
    let base = (-l * t).exp();
    // P.V.∫_{−δ}^{δ} e^{−ut}/u du = −2 Σ_{k odd} (tδ)^k/(k·k!)
    let y = t * delta;
    let mut window = 0.0;
    let mut term = 1.0;
    for k in 1..60 {
        term *= y / k as f64;
        if k % 2 == 1 {
            window -= 2.0 * term / k as f64;
        }
        if term < 1e-20 {
            break;
        }
    }
    let tol = Tolerance::new(1e-15, 1e-13);
    let paired = integrate(
        |u: f64| {
            let v = ((-(l + u) * t).exp() - (-(l - u) * t).exp()) / u;
            Complex64::new(v, 0.0)
        },
        &[delta, l],
        tol,
    );
    let paired = paired.value.re;
    let tail = integrate_to_infinity(|s: f64| Complex64::new((-s * t).exp() / (s - l), 0.0), &[2.0 * l], 1.0 / t, tol);
    Ok(base * window + paired + tail.value.re)
}

/// E₁(ix) = ∫_x^∞ e^{−iu}/u du for real x ≠ 0.
pub fn e1_imaginary(x: f64) -> Complex64 {
    assert!(x != 0.0 && x.is_finite(), "E1(ix) needs a finite nonzero x");
    if x < 0.0 {
        return e1_imaginary(-x).conj();
    }
    let z = Complex64::new(0.0, x);
    if x <= 2.0 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 1..100 {
            term *= -z / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.norm() < 1e-18 {
                break;
            }
        }
        -EULER_GAMMA - Complex64::new(x.ln(), PI / 2.0) - sum
    } else {
        // Modified Lentz evaluation of the continued fraction.
        let tiny = 1e-300;
        let mut b = z + 1.0;
        let mut c = Complex64::new(1.0 / tiny, 0.0);
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (d * a + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).norm() < 1e-16 {
                break;
            }
        }
        h * Complex64::from_polar(1.0, -x)
    }
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    #[test]
    fn ei_reference_values() {
        assert!((exp_integral_ei(1.0).unwrap() - 1.895_117_816_355_936_8).abs() < 2e-15);
        assert!(exp_integral_ei(0.0).is_err());
        assert!(exp_integral_ei(-1.0).is_err());
    }

    #[test]
    fn ei_root_region_continuous() {
        for &x in &[0.25, 0.5] {
            let a = ei_near_root(x);
            let b = ei_series(x);
            assert!((a - b).abs() < 1e-15, "x={x}: {a} vs {b}");
        }
        assert!(ei_near_root(EI_ROOT).abs() < 1e-17);
    }

    #[test]
    fn small_argument_limit() {
        let x = 1e-8;
        assert!((exp_integral_ei(x).unwrap() - x.ln() - EULER_GAMMA).abs() < 1e-7);
    }

    #[test]
    fn scaled_values() {
        assert!((scaled_ei(1.0).unwrap() - 0.697_174_883_235_066_2).abs() < 1e-12);
        let s = scaled_ei(100.0).unwrap();
        assert!((s * 100.0 - 1.0).abs() < 0.02);
        assert!(scaled_ei(1e6).unwrap().is_finite());
    }

    #[test]
    fn pv_reference() {
        let v = pv_laplace_pole(1.0, 1.0).unwrap();
        assert!((v + 0.697_174_883_235_066_2).abs() < 1e-12);
        assert!(pv_laplace_pole(0.0, 1.0).is_err());
        let q = pv_laplace_pole_quadrature(0.1, 16.726).unwrap();
        let c = pv_laplace_pole(0.1, 16.726).unwrap();
        assert!((q - c).abs() < 1e-8 * (1.0 + c.abs()));
    }

    #[test]
    fn e1_imaginary_reference() {
        // −Ci(1) + i(Si(1) − π/2)
        let v = e1_imaginary(1.0);
        assert!((v.re + 0.337_403_922_900_968_1).abs() < 1e-14);
        assert!((v.im - (0.946_083_070_367_183_0 - PI / 2.0)).abs() < 1e-14);
        let v = e1_imaginary(5.0);
        assert!((v.re - 0.190_029_749_656_643_9).abs() < 1e-14);
        assert!((v.im - (1.549_931_244_944_674 - PI / 2.0)).abs() < 1e-14);
        let a = e1_imaginary(2.0 - 1e-12);
        let b = e1_imaginary(2.0 + 1e-12);
        assert!((a - b).norm() < 1e-11);
        assert_eq!(e1_imaginary(-3.0), e1_imaginary(3.0).conj());
    }
}
