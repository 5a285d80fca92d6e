//! The abstract wave equation φ̈ = −B²φ at finite dimension: skew-adjoint
//! generator, complexification, Stone formula and a truncated Fock layer.
//!
//! In finite dimension the domains H¹, H̄¹, H² all coincide with ℝⁿ, so only
//! the algebraic identities are checked.

mod fock;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::quad::{integrate, Tolerance};

pub use fock::{
    fock_functoriality_check, gamma_generator_check, weyl_check, FunctorialityReport, GeneratorReport, TruncatedFock,
    WeylReport, DEFAULT_TRUNCATION,
};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Largest accepted G-skewness residual and |J² + 1|.
pub const STRUCTURE_TOLERANCE: f64 = 1e-12;

/// Phase space ℝⁿ ⊕ ℝⁿ of (φ, φ̇) with its generator and complex structure.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveToySystem {
    pub n: usize,
    pub b: DMatrix<f64>,
    /// diag(B², I), the matrix of ⟨⟨·,·⟩⟩.
    pub metric: DMatrix<f64>,
    /// W_B(φ, φ̇) = (φ̇, −B²φ).
    pub generator: DMatrix<f64>,
    /// J_B(φ, φ̇) = (−B⁻¹φ̇, Bφ).
    pub complex_structure: DMatrix<f64>,
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
    /// max|GW + WᵀG| / max(1, max|G|).
    pub skewness: f64,
    /// max|J² + 1|.
    pub structure_residual: f64,
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

fn blocks(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    m.view_mut((0, n), (n, n)).copy_from(b);
    m.view_mut((n, 0), (n, n)).copy_from(c);
    m.view_mut((n, n), (n, n)).copy_from(d);
    m
}

pub fn build_system(b: &DMatrix<f64>) -> Result<WaveToySystem> {
    let n = b.nrows();
    if n == 0 || b.ncols() != n {
        return Err(Error::Construction(format!("B must be square and nonempty, got {}x{}", n, b.ncols())));
    }
    let scale = max_abs(b);
    if max_abs(&(b - b.transpose())) > 1e-14 * scale {
        return Err(Error::Construction("B is not symmetric".into()));
    }
    let eig = b.clone().symmetric_eigen();
    let norm = eig.eigenvalues.amax();
    let floor = eig.eigenvalues.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if !(floor > 1e-10 * norm) {
        return Err(Error::Construction(format!("B is near-singular: min |eigenvalue| = {floor:e}")));
    }
    let v = &eig.eigenvectors;
    let binv = v * DMatrix::from_diagonal(&eig.eigenvalues.map(|x| 1.0 / x)) * v.transpose();
    let b2 = b * b;
    let id = DMatrix::identity(n, n);
    let zero = DMatrix::zeros(n, n);
    let metric = blocks(&b2, &zero, &zero, &id);
    let generator = blocks(&zero, &id, &(-&b2), &zero);
    let complex_structure = blocks(&zero, &(-&binv), b, &zero);
    let skewness = max_abs(&(&metric * &generator + generator.transpose() * &metric)) / max_abs(&metric).max(1.0);
    let structure_residual = max_abs(&(&complex_structure * &complex_structure + DMatrix::identity(2 * n, 2 * n)));
    if !(skewness <= STRUCTURE_TOLERANCE && structure_residual <= STRUCTURE_TOLERANCE * (1.0 + norm / floor)) {
        return Err(Error::Construction(format!(
            "structure check failed: skewness {skewness:e}, |J^2+1| {structure_residual:e}"
        )));
    }
    Ok(WaveToySystem {
        n,
        b: b.clone(),
        metric,
        generator,
        complex_structure,
        eigenvalues: eig.eigenvalues,
        eigenvectors: eig.eigenvectors,
        skewness,
        structure_residual,
    })
}

impl WaveToySystem {
    /// Spectral norm of B.
    pub fn norm(&self) -> f64 {
        self.eigenvalues.amax()
    }

    fn check_state(&self, x: &DVector<f64>) {
        assert_eq!(x.len(), 2 * self.n, "phase-space state must have length 2n");
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.dot(&(&self.metric * y))
    }

    pub fn g_norm(&self, x: &DVector<f64>) -> f64 {
        self.inner(x, x).sqrt()
    }

    /// C_B(φ, φ̇) = Bφ + iφ̇.
    pub fn complexify(&self, x: &DVector<f64>) -> DVector<Complex64> {
        self.check_state(x);
        let n = self.n;
        let bphi = &self.b * x.rows(0, n);
        DVector::from_fn(n, |i, _| Complex64::new(bphi[i], x[n + i]))
    }

    /// C_B⁻¹ = C_B*.
    pub fn decomplexify(&self, psi: &DVector<Complex64>) -> DVector<f64> {
        let n = self.n;
        let re = DVector::from_fn(n, |i, _| psi[i].re);
        let v = &self.eigenvectors;
        let phi = v * (v.transpose() * re).component_div(&self.eigenvalues);
        DVector::from_fn(2 * n, |i, _| if i < n { phi[i] } else { psi[i - n].im })
    }
}

/// e^{tW_B}x through cos(tB) and B⁻¹sin(tB) in the eigenbasis of B.
pub fn propagate(sys: &WaveToySystem, t: f64, x: &DVector<f64>) -> DVector<f64> {
    sys.check_state(x);
    let n = sys.n;
    let v = &sys.eigenvectors;
    let p = v.transpose() * x.rows(0, n);
    let q = v.transpose() * x.rows(n, n);
    let mut pt = DVector::zeros(n);
    let mut qt = DVector::zeros(n);
    for k in 0..n {
        let w = sys.eigenvalues[k];
        let (s, c) = (w * t).sin_cos();
        pt[k] = c * p[k] + s / w * q[k];
        qt[k] = -w * s * p[k] + c * q[k];
    }
    let phi = v * pt;
    let dphi = v * qt;
    DVector::from_fn(2 * n, |i, _| if i < n { phi[i] } else { dphi[i - n] })
}

/// |‖e^{tW}x‖_G − ‖x‖_G|.
pub fn isometry_defect(sys: &WaveToySystem, t: f64, x: &DVector<f64>) -> f64 {
    (sys.g_norm(&propagate(sys, t, x)) - sys.g_norm(x)).abs()
}

/// Errors of the central difference (φ(t+h) − 2φ(t) + φ(t−h))/h² against −B²φ(t).
pub fn second_derivative_errors(sys: &WaveToySystem, t: f64, x: &DVector<f64>, steps: &[f64]) -> Vec<(f64, f64)> {
    let n = sys.n;
    let phi = |s: f64| propagate(sys, s, x).rows(0, n).into_owned();
    let exact = -(&sys.b * &sys.b) * phi(t);
    steps
        .iter()
        .map(|&h| {
            let fd = (phi(t + h) - 2.0 * phi(t) + phi(t - h)) / (h * h);
            (h, (fd - &exact).norm())
        })
        .collect()
}

/// ‖e^{tW_B}x − C_B⁻¹e^{−itB}C_B x‖_G with e^{−itB} from the matrix exponential.
pub fn conjugation_check(sys: &WaveToySystem, t: f64, x: &DVector<f64>) -> f64 {
    let u = sys.b.map(|v| Complex64::new(0.0, -t * v)).exp();
    let y = sys.decomplexify(&(u * sys.complexify(x)));
    sys.g_norm(&(propagate(sys, t, x) - y))
}

/// ‖e^{(t+s)W}x − e^{tW}e^{sW}x‖_G.
pub fn group_law_defect(sys: &WaveToySystem, t: f64, s: f64, x: &DVector<f64>) -> f64 {
    sys.g_norm(&(propagate(sys, t + s, x) - propagate(sys, t, &propagate(sys, s, x))))
}

/// Mollified, truncated Stone integral against the exact matrix element ⟨⟨y, e^{tW}x⟩⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StoneCheck {
    pub approx: f64,
    pub exact: f64,
    pub gap: f64,
    /// Quadrature error estimate of the approximation.
    pub error: f64,
    pub converged: bool,
}

/// e^{−itλ}/(2πi)·⟨⟨y, [(iW − λ − iε)⁻¹ − (iW − λ + iε)⁻¹]x⟩⟩.
pub fn stone_integrand(
    sys: &WaveToySystem,
    t: f64,
    eps: f64,
    lambda: f64,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<Complex64> {
    let m = 2 * sys.n;
    let h = sys.generator.map(|v| Complex64::new(0.0, v));
    let xc = x.map(|v| Complex64::new(v, 0.0));
    let gy = (&sys.metric * y).map(|v| Complex64::new(v, 0.0));
    let solve = |z: Complex64| {
        let a = &h - DMatrix::from_diagonal_element(m, m, z);
        a.lu().solve(&xc).ok_or_else(|| Error::Singular(format!("iW - z singular at z = {z}")))
    };
    let d = solve(Complex64::new(lambda, eps))? - solve(Complex64::new(lambda, -eps))?;
    Ok((-I * t * lambda).exp() / (2.0 * PI * I) * gy.dot(&d))
}

/// Real part of (1/2πi)∫_{−a}^{a} e^{−itλ}⟨⟨y, [R(λ+iε) − R(λ−iε)]x⟩⟩ dλ against ⟨⟨y, e^{tW}x⟩⟩.
pub fn stone_formula_check(
    sys: &WaveToySystem,
    t: f64,
    a: f64,
    eps: f64,
    pair: (&DVector<f64>, &DVector<f64>),
) -> Result<StoneCheck> {
    let (x, y) = pair;
    sys.check_state(x);
    sys.check_state(y);
    if !(a > sys.norm()) || !(eps > 0.0) {
        return Err(domain(format!("Stone check needs a > |B| and eps > 0, got a = {a}, eps = {eps}")));
    }
    let mut points = vec![-a, a];
    for &w in sys.eigenvalues.iter() {
        for centre in [w, -w] {
            points.push(centre);
            for k in [1.0, 10.0, 100.0] {
                points.push(centre - k * eps);
                points.push(centre + k * eps);
            }
        }
    }
    points.retain(|p| p.abs() <= a);
    let failure = std::sync::Mutex::new(None);
    let est = integrate(
        |l| {
            stone_integrand(sys, t, eps, l, x, y).unwrap_or_else(|e| {
                *failure.lock().unwrap() = Some(e);
                Complex64::new(0.0, 0.0)
            })
        },
        &points,
        Tolerance::new(1e-11, 1e-10).with_max_intervals(20_000),
    );
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let exact = sys.inner(y, &propagate(sys, t, x));
    let approx = est.value.re;
    Ok(StoneCheck { approx, exact, gap: (approx - exact).abs(), error: est.error, converged: est.converged })
}

/// Random symmetric n×n matrix with eigenvalue magnitudes in [floor, floor + 2] and random signs.
pub fn random_symmetric(seed: u64, n: usize, floor: f64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let q = m.qr().q();
    let d = DVector::from_fn(n, |_, _| {
        let mag = floor + 2.0 * rng.gen::<f64>();
        if rng.gen::<bool>() {
            mag
        } else {
            -mag
        }
    });
    let b = &q * DMatrix::from_diagonal(&d) * q.transpose();
    (&b + b.transpose()) * 0.5
}

/// Random phase-space state with entries in [−1, 1].
pub fn random_state(seed: u64, n: usize) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed);
    DVector::from_fn(2 * n, |_, _| rng.gen_range(-1.0..1.0))
}

/// Worst-case residuals over a batch of randomized systems.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchReport {
    pub systems: usize,
    pub max_skewness: f64,
    pub max_structure: f64,
    pub max_isometry: f64,
    pub max_conjugation: f64,
    pub max_group_law: f64,
    /// Largest Stone gap relative to ‖x‖_G‖y‖_G at (a = 50‖B‖, ε = 1e−3), if run.
    pub max_stone_gap: Option<f64>,
    /// Every Stone gap shrank when ε was halved.
    pub stone_shrinks: Option<bool>,
    /// Seeds whose system failed to build.
    pub construction_failures: Vec<u64>,
}

struct SeedResult {
    skew: f64,
    structure: f64,
    iso: f64,
    conj: f64,
    group: f64,
    stone: Option<(f64, bool)>,
}

fn run_seed(seed: u64, n: usize, stone: bool) -> Result<SeedResult> {
    let sys = build_system(&random_symmetric(seed, n, 0.5))?;
    let x = random_state(seed, n);
    let y = random_state(seed.wrapping_add(1 << 32), n);
    let iso = [0.1, 1.0, 10.0].iter().map(|&t| isometry_defect(&sys, t, &x)).fold(0.0, f64::max);
    let conj = conjugation_check(&sys, 2.7, &x) / sys.g_norm(&x);
    let group = group_law_defect(&sys, 1.3, 0.4, &x) / sys.g_norm(&x);
    let stone = if stone {
        let scale = sys.g_norm(&x) * sys.g_norm(&y);
        let a = 50.0 * sys.norm();
        let coarse = stone_formula_check(&sys, 1.0, a, 1e-3, (&x, &y))?;
        let fine = stone_formula_check(&sys, 1.0, a, 5e-4, (&x, &y))?;
        Some((coarse.gap / scale, fine.gap < coarse.gap))
    } else {
        None
    };
    Ok(SeedResult { skew: sys.skewness, structure: sys.structure_residual, iso, conj, group, stone })
}

/// Checks the wave-equation identities on `seeds.len()` random n×n systems in parallel.
pub fn property_batch(seeds: &[u64], n: usize, stone: bool) -> BatchReport {
    let results: Vec<(u64, Result<SeedResult>)> = seeds.par_iter().map(|&s| (s, run_seed(s, n, stone))).collect();
    let mut report = BatchReport {
        systems: seeds.len(),
        max_skewness: 0.0,
        max_structure: 0.0,
        max_isometry: 0.0,
        max_conjugation: 0.0,
        max_group_law: 0.0,
        max_stone_gap: stone.then_some(0.0),
        stone_shrinks: stone.then_some(true),
        construction_failures: vec![],
    };
    for (seed, r) in results {
        match r {
            Ok(r) => {
                report.max_skewness = report.max_skewness.max(r.skew);
                report.max_structure = report.max_structure.max(r.structure);
                report.max_isometry = report.max_isometry.max(r.iso);
                report.max_conjugation = report.max_conjugation.max(r.conj);
                report.max_group_law = report.max_group_law.max(r.group);
                if let Some((gap, shrinks)) = r.stone {
                    report.max_stone_gap = report.max_stone_gap.map(|g| g.max(gap));
                    report.stone_shrinks = report.stone_shrinks.map(|s| s && shrinks);
                }
            }
            Err(_) => report.construction_failures.push(seed),
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_system() {
        let sys = build_system(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(sys.metric, DMatrix::identity(4, 4));
        let mut w = DMatrix::zeros(4, 4);
        w[(0, 2)] = 1.0;
        w[(1, 3)] = 1.0;
        w[(2, 0)] = -1.0;
        w[(3, 1)] = -1.0;
        assert_eq!(sys.generator, w);
    }

    #[test]
    fn diagonal_skewness() {
        let sys = build_system(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]))).unwrap();
        assert!(sys.skewness < 1e-14);
    }

    #[test]
    fn rejects_bad_b() {
        let mut b = DMatrix::identity(3, 3);
        b[(0, 1)] = 0.5;
        assert!(matches!(build_system(&b), Err(Error::Construction(_))));
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-12]));
        assert!(matches!(build_system(&s), Err(Error::Construction(_))));
    }

    #[test]
    fn propagation_basics() {
        let sys = build_system(&random_symmetric(3, 4, 0.5)).unwrap();
        let x = random_state(3, 4);
        assert!((propagate(&sys, 0.0, &x) - &x).norm() < 1e-15);
        for t in [0.1, 1.0, 10.0] {
            assert!(isometry_defect(&sys, t, &x) < 1e-12);
        }
        assert!(group_law_defect(&sys, 0.7, 2.1, &x) < 1e-12);
    }

    #[test]
    fn harmonic_rotation() {
        let w0 = 1.7;
        let sys = build_system(&(DMatrix::identity(2, 2) * w0)).unwrap();
        let x = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let t = 0.9;
        let y = propagate(&sys, t, &x);
        assert!((y[0] - (w0 * t).cos()).abs() < 1e-15);
        assert!((y[2] + w0 * (w0 * t).sin()).abs() < 1e-15);
        assert!(conjugation_check(&sys, t, &x) < 1e-14);
    }

    #[test]
    fn complex_structure_is_multiplication_by_i() {
        let sys = build_system(&random_symmetric(11, 3, 0.5)).unwrap();
        let x = random_state(11, 3);
        let lhs = sys.complexify(&(&sys.complex_structure * &x));
        let rhs = sys.complexify(&x) * I;
        assert!((lhs - rhs).norm() < 1e-12);
        assert!((sys.decomplexify(&sys.complexify(&x)) - &x).norm() < 1e-12);
    }

    #[test]
    fn finite_difference_order() {
        let sys = build_system(&random_symmetric(5, 3, 0.5)).unwrap();
        let errs = second_derivative_errors(&sys, 0.8, &random_state(5, 3), &[0.08, 0.04, 0.02]);
        let slope = (errs[0].1 / errs[2].1).ln() / (errs[0].0 / errs[2].0).ln();
        assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn stone_localizes_on_eigenvector() {
        let sys = build_system(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.5]))).unwrap();
        let x = DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]);
        let eps = 1e-3;
        let (best, _) = (0..=2000)
            .map(|k| 2.0 + 1e-3 * k as f64 / 2.0)
            .map(|l| (l, stone_integrand(&sys, 0.0, eps, l, &x, &x).unwrap().norm()))
            .fold((0.0, 0.0), |acc, p| if p.1 > acc.1 { p } else { acc });
        assert!((best - 2.5).abs() <= eps, "peak at {best}");
    }

    #[test]
    fn stone_gap_shrinks() {
        let sys = build_system(&random_symmetric(21, 3, 0.5)).unwrap();
        let x = random_state(21, 3);
        let y = random_state(22, 3);
        let a = 50.0 * sys.norm();
        let g1 = stone_formula_check(&sys, 1.0, a, 1e-3, (&x, &y)).unwrap();
        let g2 = stone_formula_check(&sys, 1.0, a, 5e-4, (&x, &y)).unwrap();
        assert!(g1.converged && g2.converged);
        assert!(g1.gap < 1e-2 * sys.g_norm(&x) * sys.g_norm(&y));
        let ratio = g1.gap / g2.gap;
        assert!(ratio > 1.6 && ratio < 2.4, "ratio {ratio}");
    }
}
