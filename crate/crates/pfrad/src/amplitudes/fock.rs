//! Multi-particle amplitudes between symmetrized product states.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::{survival_terms, transition_eps, transition_limit_point};
use crate::error::{Error, Result};
use crate::model::Setup;
use crate::resolvent::PhotonSpec;

/// Largest matrix accepted by [`permanent`].
pub const MAX_PERMANENT: usize = 12;

/// Permanent by Ryser's formula with Gray-code row sums.
pub fn permanent(m: &DMatrix<Complex64>) -> Result<Complex64> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Size(format!("permanent needs a square matrix, got {}x{}", n, m.ncols())));
    }
    if n > MAX_PERMANENT {
        return Err(Error::Size(format!("permanent limited to n <= {MAX_PERMANENT}, got {n}")));
    }
    if n == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let mut sums = vec![Complex64::new(0.0, 0.0); n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut gray = 0usize;
    for k in 1..(1usize << n) {
        let next = k ^ (k >> 1);
        let col = (gray ^ next).trailing_zeros() as usize;
        let add = next & (1 << col) != 0;
        for (i, s) in sums.iter_mut().enumerate() {
            if add {
                *s += m[(i, col)];
            } else {
                *s -= m[(i, col)];
            }
        }
        gray = next;
        let prod: Complex64 = sums.iter().product();
        if (n - next.count_ones() as usize).is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    Ok(total)
}

/// Σ_σ Π_i m[i, σ(i)] by enumerating all permutations (n ≤ 9).
pub fn permanent_brute_force(m: &DMatrix<Complex64>) -> Result<Complex64> {
    let n = m.nrows();
    if m.ncols() != n || n > 9 {
        return Err(Error::Size(format!("brute-force permanent needs a square matrix with n <= 9, got {n}")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = Complex64::new(0.0, 0.0);
    heap_permute(n, &mut perm, &mut |p| {
        total += p.iter().enumerate().map(|(i, &j)| m[(i, j)]).product::<Complex64>();
    });
    Ok(total)
}

fn heap_permute(k: usize, a: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
    if k <= 1 {
        visit(a);
        return;
    }
    for i in 0..k - 1 {
        heap_permute(k - 1, a, visit);
        if k.is_multiple_of(2) {
            a.swap(i, k - 1);
        } else {
            a.swap(0, k - 1);
        }
    }
    heap_permute(k - 1, a, visit);
}

/// A one-particle mode of the final state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FockMode {
    /// Oscillator level (0, ζ).
    Level([Complex64; 3]),
    /// Photon φ^ε with the polarization carried by the spec.
    Photon(PhotonSpec),
}

/// ⟨S_n(⊗ψ_i), Γ(e^{−itL^{1/2}}) S_n(⊗φ_j)⟩ in two normalizations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FockAmplitude {
    /// perm(M)/n! for unnormalized symmetrized products.
    pub raw: Complex64,
    /// perm(M)/√(perm(G_final)·perm(G_initial)); absent when two or more
    /// regularized photons would need their mutual overlaps.
    pub normalized: Option<Complex64>,
    /// Particle numbers differ, so the amplitude vanishes identically.
    pub sector_mismatch: bool,
    /// One-particle amplitude matrix M_ij = ⟨ψ_i, U(t)φ_j⟩.
    pub matrix: Vec<Vec<Complex64>>,
}

fn dot(a: &[Complex64; 3], b: &[Complex64; 3]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Amplitude from n excited levels to a final list of levels and photons.
pub fn fock_amplitude(
    initial: &[[Complex64; 3]],
    final_modes: &[FockMode],
    t: f64,
    setup: &Setup,
) -> Result<FockAmplitude> {
    let n = initial.len();
    if final_modes.len() != n {
        return Ok(FockAmplitude {
            raw: Complex64::new(0.0, 0.0),
            normalized: Some(Complex64::new(0.0, 0.0)),
            sector_mismatch: true,
            matrix: vec![],
        });
    }
    if n > MAX_PERMANENT {
        return Err(Error::Size(format!("at most {MAX_PERMANENT} particles, got {n}")));
    }
    let needs_survival = final_modes.iter().any(|m| matches!(m, FockMode::Level(_)));
    let s = if needs_survival { Some(survival_terms(t, setup)?.s) } else { None };
    let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for (i, mode) in final_modes.iter().enumerate() {
        for (j, zeta) in initial.iter().enumerate() {
            m[(i, j)] = match mode {
                FockMode::Level(psi) => s.expect("survival computed for level rows") * dot(psi, zeta),
                FockMode::Photon(ph) if ph.eps > 0.0 => transition_eps(t, ph, zeta, setup)?.amplitude,
                FockMode::Photon(ph) => transition_limit_point(t, ph, zeta, setup)?.amplitude,
            };
        }
    }
    let perm = permanent(&m)?;
    let raw = perm / factorial(n);

    let kappa0 = setup.spectral.kappa0;
    let g_init = DMatrix::from_fn(n, n, |i, j| kappa0 * dot(&initial[i], &initial[j]));
    let photons: Vec<&PhotonSpec> =
        final_modes.iter().filter_map(|m| if let FockMode::Photon(p) = m { Some(p) } else { None }).collect();
    let normalized = if photons.len() >= 2 || photons.iter().any(|p| p.eps == 0.0) {
        None
    } else {
        let g_final = DMatrix::from_fn(n, n, |i, j| match (&final_modes[i], &final_modes[j]) {
            (FockMode::Level(a), FockMode::Level(b)) => kappa0 * dot(a, b),
            (FockMode::Photon(p), FockMode::Photon(_)) => Complex64::new(p.norm_sq(setup.params.c), 0.0),
            _ => Complex64::new(0.0, 0.0),
        });
        let norm = (permanent(&g_init)?.re * permanent(&g_final)?.re).sqrt();
        Some(perm / norm)
    };
    let matrix = (0..n).map(|i| (0..n).map(|j| m[(i, j)]).collect()).collect();
    Ok(FockAmplitude { raw, normalized, sector_mismatch: false, matrix })
}
