//! The oracle suite behind `pfrad verify`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::RunConfig;
use crate::amplitudes::survival_terms;
use crate::amplitudes::transition_cut;
use crate::amplitudes::transition_eps;
use crate::error::Result;
use crate::model::{Fault, Setup};
use crate::oracle::{
    convergence_order, cut_integral_check, radial_overlap_oracle, regularized_limit_gaps, residue_at_resonance,
    stone_survival, stone_survival_double, stone_transition, OverlapKind,
};
use crate::resolvent::{
    bound_bound_element, bound_bound_element_assembled, bound_prefactor, chi_eps, photon_bound_element,
    photon_bound_element_assembled, Branch, BranchedPoint, PhotonSpec,
};
use crate::special::{pv_laplace_pole, pv_laplace_pole_quadrature};
use crate::wavetoy::{
    build_system, fock_functoriality_check, property_batch, random_state, random_symmetric, stone_formula_check,
    TruncatedFock,
};

/// Outcome of one registered check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst measured gap; NaN when the check could not be evaluated.
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub config: RunConfig,
    pub fault: Option<Fault>,
    pub passed: bool,
    pub checks: Vec<Check>,
}

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

fn gap_check(name: &str, threshold: f64, detail: &str, gaps: Result<Vec<f64>>) -> Check {
    match gaps {
        Ok(g) => {
            let measured = g.iter().cloned().fold(0.0, f64::max);
            let finite = g.iter().all(|v| v.is_finite());
            Check {
                name: name.into(),
                passed: finite && measured < threshold,
                measured: if finite { measured } else { f64::NAN },
                threshold,
                detail: detail.into(),
            }
        }
        Err(e) => Check {
            name: name.into(),
            passed: false,
            measured: f64::NAN,
            threshold,
            detail: format!("{detail}; evaluation failed: {e}"),
        },
    }
}

fn log_times(setup: &Setup, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let l = setup.spectral.lambda_e;
    (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64) / l).collect()
}

fn overlap_points(setup: &Setup) -> Vec<BranchedPoint> {
    let w = setup.params.omega0;
    [
        Complex64::new(0.3 * w, 0.7 * w),
        Complex64::new(-1.2 * w, 0.4 * w),
        Complex64::new(2.0 * w, 0.1 * w),
        Complex64::new(0.5 * w, 2.0 * w),
        Complex64::new(-0.2 * w, 0.05 * w),
    ]
    .iter()
    .map(|&z| BranchedPoint::upper(z).expect("upper half-plane point"))
    .collect()
}

fn check_overlaps(setup: &Setup, tol: f64) -> Check {
    let nu = 1.1 * setup.params.omega0;
    let gaps = PhotonSpec::simple(nu, 0.05 * nu).and_then(|photon| {
        overlap_points(setup)
            .iter()
            .map(|p| {
                let a = chi_eps(p, &photon)?.total;
                let b = radial_overlap_oracle(OverlapKind::PhotonGreen { point: *p, photon }, &setup.params)?;
                Ok(rel(b.value, a))
            })
            .collect()
    });
    gap_check("resolvent.chi_eps_vs_radial", tol, "chi^eps against its radial integral at 5 points", gaps)
}

fn check_elements(setup: &Setup) -> Check {
    let nu = 1.1 * setup.params.omega0;
    let gaps = PhotonSpec::simple(nu, 0.05 * nu).and_then(|photon| {
        let mut out = vec![];
        for p in overlap_points(setup) {
            out.push(rel(bound_bound_element_assembled(&p, setup)?, bound_bound_element(&p, setup)?));
            out.push(rel(
                photon_bound_element_assembled(&p, setup, &photon)?,
                photon_bound_element(&p, setup, &photon)?.total,
            ));
        }
        Ok(out)
    });
    gap_check(
        "resolvent.elements_vs_assembled",
        1e-10,
        "factorized matrix elements against their assembly from the resolvent pieces",
        gaps,
    )
}

fn check_static_overlaps(setup: &Setup) -> Check {
    let p = &setup.params;
    let o = BranchedPoint::continued(Complex64::new(0.0, 0.0), Branch::Upper);
    let gaps = (|| -> Result<Vec<f64>> {
        let l = setup.spectral.lambda_e;
        let gg = radial_overlap_oracle(OverlapKind::GreenGreen { point: o, lambda: l }, p)?;
        let want_gg = 1.0 / (4.0 * std::f64::consts::PI * p.c.powi(3) * l);
        let br = radial_overlap_oracle(OverlapKind::Bracket { point: o, r: 1.0 }, p)?;
        let want_br = 1.0 / (4.0 * std::f64::consts::PI * p.c * p.c);
        Ok(vec![rel(gg.value, Complex64::new(want_gg, 0.0)), rel(br.value, Complex64::new(want_br, 0.0))])
    })();
    gap_check("oracle.static_overlaps", 1e-10, "green-green and shell bracket at z = 0", gaps)
}

fn check_j2(setup: &Setup) -> Check {
    let gaps = log_times(setup, 0.01 * setup.spectral.lambda_e, 10.0 * setup.spectral.lambda_e, 12)
        .par_iter()
        .map(|&t| survival_terms(t, setup).map(|b| rel(b.j2_decomposed, b.j2)))
        .collect();
    gap_check("amplitudes.j2_dual_path", 1e-7, "subtracted and Ei-decomposed J2 on t in [0.01, 10]", gaps)
}

fn check_pv(setup: &Setup) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let l = setup.spectral.lambda_e;
    let pts: Vec<(f64, f64)> =
        (0..10).map(|_| (10f64.powf(rng.gen_range(-2.0..1.0)), l * rng.gen_range(0.2..2.0))).collect();
    let gaps = pts
        .iter()
        .map(|&(t, lam)| Ok((pv_laplace_pole(t, lam)? - pv_laplace_pole_quadrature(t, lam)?).abs()))
        .collect();
    gap_check("special.pv_laplace_pole", 1e-8, "closed form against windowed quadrature at 10 random points", gaps)
}

fn check_stone(setup: &Setup, tol: f64) -> Check {
    let gaps = log_times(setup, 0.1, 100.0, 8)
        .par_iter()
        .map(|&t| {
            let closed = survival_terms(t, setup)?.s;
            let oracle = stone_survival(t, setup)?;
            Ok(if oracle.converged { rel(oracle.value, closed) } else { f64::INFINITY })
        })
        .collect();
    gap_check(
        "oracle.stone_survival",
        tol,
        "closed-form survival against the Stone integral, lambda t in [0.1, 100]",
        gaps,
    )
}

fn check_double(setup: &Setup, tol: f64) -> Check {
    let w = setup.params.omega0;
    let gaps = [0.5 / w, 1.0 / w, 5.0 / w]
        .par_iter()
        .map(|&t| Ok(rel(stone_survival_double(t, setup)?.value, stone_survival(t, setup)?.value)))
        .collect();
    gap_check("oracle.stone_double_form", tol, "the two spectral representations at t in {0.5, 1, 5}", gaps)
}

fn check_time_reversal(setup: &Setup) -> Check {
    let gaps = log_times(setup, 0.1, 100.0, 5)
        .iter()
        .map(|&t| Ok(rel(survival_terms(-t, setup)?.s, survival_terms(t, setup)?.s.conj())))
        .collect();
    gap_check("amplitudes.time_reversal", 1e-12, "S(-t) against conj S(t)", gaps)
}

fn check_residue(setup: &Setup) -> Check {
    let gaps = survival_terms(1.0, setup).map(|b| {
        let z = setup.spectral.z_plus;
        let res = residue_at_resonance(setup, 1e-3 * setup.spectral.gamma_e.max(1e-6));
        let from_contour = -2.0 * (-I * z).exp() * z * res;
        vec![rel(from_contour, -bound_prefactor(setup) * b.resonance_oscillatory)]
    });
    gap_check("oracle.resonance_residue", 1e-8, "contour residue at z+ against the resonance term at t = 1", gaps)
}

fn check_cut(setup: &Setup, tol: f64) -> Check {
    let w = setup.params.omega0;
    let gaps = PhotonSpec::simple(w, 0.01 * w).and_then(|photon| {
        [1.0 / w, -1.0 / w]
            .iter()
            .map(|&t| Ok(rel(cut_integral_check(t, &photon, setup)?.value, transition_cut(t, &photon, setup)?)))
            .collect()
    });
    gap_check(
        "oracle.cut_integral",
        tol,
        "cut integral by an independent parametrization at (t, nu, eps) = (+-1, 1, 0.01)",
        gaps,
    )
}

fn check_transition(setup: &Setup, tol: f64) -> Check {
    let w = setup.params.omega0;
    let level = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let gaps = PhotonSpec::simple(1.1 * w, 0.05 * w).and_then(|photon| {
        [1.0 / w, 3.0 / w]
            .par_iter()
            .map(|&t| {
                Ok(rel(stone_transition(t, &photon, setup)?.value, transition_eps(t, &photon, &level, setup)?.total))
            })
            .collect()
    });
    gap_check("oracle.stone_transition", tol, "closed-form emission amplitude against its Stone integral", gaps)
}

fn check_regularized(setup: &Setup) -> Check {
    let point = BranchedPoint::upper(Complex64::new(0.0, setup.params.omega0)).expect("upper half-plane point");
    let radii = [1e-2, 1e-3, 1e-4];
    let gaps = regularized_limit_gaps(&point, &radii, &setup.params, setup.spectral.lambda_e).map(|g| {
        let orders = [
            convergence_order(&g.iter().map(|x| (x.r, x.k1_mass)).collect::<Vec<_>>()),
            convergence_order(&g.iter().map(|x| (x.r, x.k2)).collect::<Vec<_>>()),
            convergence_order(&g.iter().map(|x| (x.r, x.lambda_r)).collect::<Vec<_>>()),
        ];
        orders.iter().map(|o| (o - 1.0).abs()).collect()
    });
    gap_check(
        "resolvent.regularized_limit_order",
        0.15,
        "|order - 1| of the r -> 0 limits over r in {1e-2, 1e-3, 1e-4}",
        gaps,
    )
}

fn check_wavetoy() -> Vec<Check> {
    let seeds: Vec<u64> = (0..20).collect();
    let b = property_batch(&seeds, 6, false);
    let worst = [b.max_skewness, b.max_structure, b.max_isometry, b.max_conjugation, b.max_group_law]
        .iter()
        .cloned()
        .fold(0.0, f64::max);
    let batch = Check {
        name: "wavetoy.property_batch".into(),
        passed: b.construction_failures.is_empty() && worst < 1e-12,
        measured: worst,
        threshold: 1e-12,
        detail: format!("skewness, isometry, conjugation and group law on {} random 6x6 systems", b.systems),
    };
    let stone = build_system(&random_symmetric(0, 4, 0.5)).and_then(|sys| {
        let (x, y) = (random_state(0, 4), random_state(1, 4));
        let a = 50.0 * sys.norm();
        let coarse = stone_formula_check(&sys, 1.0, a, 1e-3, (&x, &y))?;
        let fine = stone_formula_check(&sys, 1.0, a, 5e-4, (&x, &y))?;
        let scale = sys.g_norm(&x) * sys.g_norm(&y);
        Ok(vec![coarse.gap / scale, if fine.gap < coarse.gap { 0.0 } else { f64::INFINITY }])
    });
    let fock = TruncatedFock::new(3, 4).and_then(|f| {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut cv =
            || (0..3).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect::<Vec<_>>();
        let a = DMatrix::from_row_iterator(3, 3, (0..3).flat_map(|_| cv()));
        let u = ((&a + a.adjoint()) * I).exp();
        let psis: Vec<_> = (0..3).map(|_| cv()).collect();
        let phis: Vec<_> = (0..3).map(|_| cv()).collect();
        let r = fock_functoriality_check(&f, &u, &psis, &phis)?;
        Ok(vec![r.residual, r.unitarity_defect])
    });
    vec![
        batch,
        gap_check(
            "wavetoy.stone_formula",
            1e-2,
            "mollified Stone integral at (a, eps) = (50|B|, 1e-3), shrinking with eps",
            stone,
        ),
        gap_check(
            "wavetoy.fock_functoriality",
            1e-12,
            "Gamma(U) matrix element against the permanent for three particles",
            fock,
        ),
    ]
}

/// Runs every registered check; `passed` is true iff all pass.
pub fn cmd_verify(cfg: &RunConfig, fault: Option<Fault>) -> Result<VerifyReport> {
    let setup = Setup::new(cfg.physical)?.with_fault(fault);
    let t = &cfg.tolerances;
    let mut checks = vec![
        check_overlaps(&setup, t.overlap),
        check_elements(&setup),
        check_static_overlaps(&setup),
        check_j2(&setup),
        check_pv(&setup),
        check_stone(&setup, t.oracle),
        check_double(&setup, t.double_form),
        check_time_reversal(&setup),
        check_residue(&setup),
        check_cut(&setup, t.cut),
        check_transition(&setup, t.cut),
        check_regularized(&setup),
    ];
    checks.extend(check_wavetoy());
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport { config: cfg.clone(), fault, passed, checks })
}
