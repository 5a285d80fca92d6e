//! Bosonic Fock space over ℂⁿ truncated at N particles, in the occupation basis.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::amplitudes::{permanent, permanent_brute_force};
use crate::error::{Error, Result};

/// Default truncation level N.
pub const DEFAULT_TRUNCATION: usize = 4;

const MAX_DIMENSION: usize = 5000;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Occupation basis of ⊕_{k ≤ N} S_k(ℂⁿ) with the creation tables a*_j.
#[derive(Debug, Clone)]
pub struct TruncatedFock {
    pub n: usize,
    pub max_level: usize,
    /// Occupation vectors, ordered by sector.
    pub basis: Vec<Vec<usize>>,
    /// Start of each sector k in `basis`, plus the total dimension at the end.
    pub offsets: Vec<usize>,
    index: HashMap<Vec<usize>, usize>,
    /// a*_j = a*(e_j).
    raising: Vec<DMatrix<Complex64>>,
}

fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        return vec![vec![k]];
    }
    let mut out = vec![];
    for first in (0..=k).rev() {
        for mut rest in compositions(n - 1, k - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

impl TruncatedFock {
    pub fn new(n: usize, max_level: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Size("one-particle dimension must be positive".into()));
        }
        let mut basis = vec![];
        let mut offsets = vec![];
        for k in 0..=max_level {
            offsets.push(basis.len());
            basis.extend(compositions(n, k));
            if basis.len() > MAX_DIMENSION {
                return Err(Error::Size(format!("Fock truncation exceeds {MAX_DIMENSION} states")));
            }
        }
        offsets.push(basis.len());
        let index: HashMap<Vec<usize>, usize> = basis.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        let dim = basis.len();
        let raising = (0..n)
            .map(|j| {
                let mut a = DMatrix::from_element(dim, dim, zero());
                for (col, m) in basis.iter().enumerate() {
                    if m.iter().sum::<usize>() == max_level {
                        continue;
                    }
                    let mut up = m.clone();
                    up[j] += 1;
                    a[(index[&up], col)] = Complex64::new(((m[j] + 1) as f64).sqrt(), 0.0);
                }
                a
            })
            .collect();
        Ok(Self { n, max_level, basis, offsets, index, raising })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn sector(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k + 1]
    }

    pub fn index_of(&self, occupation: &[usize]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    pub fn vacuum(&self) -> DVector<Complex64> {
        let mut v = DVector::from_element(self.dim(), zero());
        v[0] = Complex64::new(1.0, 0.0);
        v
    }

    fn check_vector(&self, f: &[Complex64]) {
        assert_eq!(f.len(), self.n, "one-particle vector must have length n");
    }

    /// a*(f) = Σ_j f_j a*_j.
    pub fn creation(&self, f: &[Complex64]) -> DMatrix<Complex64> {
        self.check_vector(f);
        self.raising
            .iter()
            .zip(f)
            .fold(DMatrix::from_element(self.dim(), self.dim(), zero()), |acc, (a, c)| acc + a * *c)
    }

    /// a(f) = a*(f)†, antilinear in f.
    pub fn annihilation(&self, f: &[Complex64]) -> DMatrix<Complex64> {
        self.creation(f).adjoint()
    }

    /// a*(φ₁)⋯a*(φ_k)Ω = √(k!)·S_k(φ₁⊗⋯⊗φ_k).
    pub fn product_state(&self, vectors: &[Vec<Complex64>]) -> Result<DVector<Complex64>> {
        if vectors.len() > self.max_level {
            return Err(Error::Size(format!(
                "{} particles exceed the truncation level {}",
                vectors.len(),
                self.max_level
            )));
        }
        Ok(vectors.iter().rev().fold(self.vacuum(), |v, f| self.creation(f) * v))
    }

    /// Γ(U) from Γ(U)Π_j a*(e_j)^{m_j}Ω = Π_j a*(Ue_j)^{m_j}Ω.
    pub fn second_quantize(&self, u: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        assert!(u.nrows() == self.n && u.ncols() == self.n);
        let lifted: Vec<DMatrix<Complex64>> = (0..self.n).map(|j| self.creation(u.column(j).as_slice())).collect();
        let mut g = DMatrix::from_element(self.dim(), self.dim(), zero());
        for (col, m) in self.basis.iter().enumerate() {
            let mut v = self.vacuum();
            for (j, &mj) in m.iter().enumerate() {
                for _ in 0..mj {
                    v = &lifted[j] * v;
                }
            }
            let norm = m.iter().map(|&k| factorial(k)).product::<f64>().sqrt();
            g.set_column(col, &(v / Complex64::new(norm, 0.0)));
        }
        g
    }

    /// dΓ(H) = Σ_ij H_ij a*_i a_j.
    pub fn d_gamma(&self, h: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        assert!(h.nrows() == self.n && h.ncols() == self.n);
        let mut out = DMatrix::from_element(self.dim(), self.dim(), zero());
        for i in 0..self.n {
            for j in 0..self.n {
                if h[(i, j)] != zero() {
                    out += &self.raising[i] * self.raising[j].adjoint() * h[(i, j)];
                }
            }
        }
        out
    }

    /// S(ψ) = (a(ψ) + a*(ψ))/√2.
    pub fn segal_field(&self, psi: &[Complex64]) -> DMatrix<Complex64> {
        (self.creation(psi) + self.annihilation(psi)) / Complex64::new(2f64.sqrt(), 0.0)
    }

    /// W(ψ) = e^{iS(ψ)} on the truncated space.
    pub fn weyl(&self, psi: &[Complex64]) -> DMatrix<Complex64> {
        (self.segal_field(psi) * Complex64::new(0.0, 1.0)).exp()
    }

    /// max |([a(f), a*(g)] − ⟨f, g⟩)v| over basis vectors v in sectors below N.
    pub fn commutator_defect(&self, f: &[Complex64], g: &[Complex64]) -> f64 {
        let a = self.annihilation(f);
        let c = self.creation(g);
        let comm = &a * &c - &c * &a;
        let fg: Complex64 = f.iter().zip(g).map(|(x, y)| x.conj() * y).sum();
        let mut worst: f64 = 0.0;
        for col in 0..self.offsets[self.max_level] {
            for row in 0..self.dim() {
                let expected = if row == col { fg } else { zero() };
                worst = worst.max((comm[(row, col)] - expected).norm());
            }
        }
        worst
    }

    /// Sector k of the particle number of each basis state.
    fn level(&self, i: usize) -> usize {
        self.offsets.partition_point(|&o| o <= i) - 1
    }

    /// Largest matrix element connecting different particle numbers.
    pub fn sector_leakage(&self, m: &DMatrix<Complex64>) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                if self.level(i) != self.level(j) {
                    worst = worst.max(m[(i, j)].norm());
                }
            }
        }
        worst
    }

    /// Restriction of an operator to sector k.
    pub fn sector_block(&self, m: &DMatrix<Complex64>, k: usize) -> DMatrix<Complex64> {
        let r = self.sector(k);
        m.view((r.start, r.start), (r.len(), r.len())).into_owned()
    }
}

/// ⟨S_n(⊗ψ_i), Γ(U)S_n(⊗φ_j)⟩ by three routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctorialityReport {
    /// Matrix element of Γ(U) between product states, divided by n!.
    pub fock_value: Complex64,
    /// perm[⟨ψ_i, Uφ_j⟩]/n! by Ryser's formula.
    pub permanent_value: Complex64,
    /// The same permanent by enumerating permutations.
    pub brute_force_value: Complex64,
    pub residual: f64,
    /// max|Γ(U)†Γ(U) − 1| on the sector.
    pub unitarity_defect: f64,
}

pub fn fock_functoriality_check(
    fock: &TruncatedFock,
    u: &DMatrix<Complex64>,
    psis: &[Vec<Complex64>],
    phis: &[Vec<Complex64>],
) -> Result<FunctorialityReport> {
    let n = psis.len();
    if phis.len() != n {
        return Err(Error::Size(format!("{} bra vectors against {} ket vectors", n, phis.len())));
    }
    if n > fock.max_level {
        return Err(Error::Size(format!("{n} particles exceed the truncation level {}", fock.max_level)));
    }
    let gamma = fock.second_quantize(u);
    let bra = fock.product_state(psis)?;
    let ket = fock.product_state(phis)?;
    let fock_value = bra.dotc(&(&gamma * ket)) / factorial(n);
    let m = DMatrix::from_fn(n, n, |i, j| {
        let uphi = u * DVector::from_column_slice(&phis[j]);
        DVector::from_column_slice(&psis[i]).dotc(&uphi)
    });
    let permanent_value = permanent(&m)? / factorial(n);
    let brute_force_value = permanent_brute_force(&m)? / factorial(n);
    let residual = (fock_value - permanent_value).norm().max((permanent_value - brute_force_value).norm());
    let block = fock.sector_block(&gamma, n);
    let unitarity_defect = (block.adjoint() * &block - DMatrix::identity(block.nrows(), block.ncols()))
        .iter()
        .fold(0.0, |a: f64, v| a.max(v.norm()));
    Ok(FunctorialityReport { fock_value, permanent_value, brute_force_value, residual, unitarity_defect })
}

/// Γ(e^{−itH}) against e^{−it dΓ(H)}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneratorReport {
    /// Off-sector elements of e^{−it dΓ(H)}.
    pub leakage: f64,
    /// max|Γ(e^{−itH}) − e^{−it dΓ(H)}|.
    pub gap: f64,
}

pub fn gamma_generator_check(fock: &TruncatedFock, h: &DMatrix<Complex64>, t: f64) -> GeneratorReport {
    let minus_it = Complex64::new(0.0, -t);
    let u = (h * minus_it).exp();
    let direct = fock.second_quantize(&u);
    let generated = (fock.d_gamma(h) * minus_it).exp();
    let gap = (&direct - &generated).iter().fold(0.0, |a: f64, v| a.max(v.norm()));
    GeneratorReport { leakage: fock.sector_leakage(&generated), gap }
}

/// W(ψ₁ + ψ₂)Ω against e^{(i/2)Im⟨ψ₁,ψ₂⟩}W(ψ₁)W(ψ₂)Ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeylReport {
    pub residual: f64,
    /// √P(K > N) for the Poisson particle-number law of the largest coherent state,
    /// bounding the norm lost to truncation.
    pub truncation_tail: f64,
    /// Residual with the phase e^{(i/2)⟨ψ₁,ψ₂⟩} taken literally.
    pub literal_phase_residual: f64,
    /// Truncation tail above 1e−8.
    pub flagged: bool,
}

fn poisson_tail(mean: f64, n: usize) -> f64 {
    let mut term = (-mean).exp();
    let mut head = term;
    for k in 1..=n {
        term *= mean / k as f64;
        head += term;
    }
    (1.0 - head).max(0.0)
}

pub fn weyl_check(fock: &TruncatedFock, psi1: &[Complex64], psi2: &[Complex64]) -> WeylReport {
    let sum: Vec<Complex64> = psi1.iter().zip(psi2).map(|(a, b)| a + b).collect();
    let omega = fock.vacuum();
    let lhs = fock.weyl(&sum) * &omega;
    let product = fock.weyl(psi1) * (fock.weyl(psi2) * &omega);
    let inner: Complex64 = psi1.iter().zip(psi2).map(|(a, b)| a.conj() * b).sum();
    let phase = Complex64::new(0.0, 0.5 * inner.im).exp();
    let literal = (Complex64::new(0.0, 0.5) * inner).exp();
    let norm_sq = |v: &[Complex64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>();
    let tail = [norm_sq(psi1), norm_sq(psi2), norm_sq(&sum)]
        .iter()
        .map(|&n2| poisson_tail(n2 / 2.0, fock.max_level).sqrt())
        .fold(0.0, f64::max);
    WeylReport {
        residual: (&lhs - &product * phase).norm(),
        truncation_tail: tail,
        literal_phase_residual: (&lhs - &product * literal).norm(),
        flagged: tail > 1e-8,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
        (0..n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<Complex64> {
        let a = DMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        (&a + a.adjoint()) * c(0.5, 0.0)
    }

    fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<Complex64> {
        (random_hermitian(rng, n) * c(0.0, 1.0)).exp()
    }

    #[test]
    fn sector_sizes() {
        let f = TruncatedFock::new(3, 4).unwrap();
        let sizes: Vec<usize> = (0..=4).map(|k| f.sector(k).len()).collect();
        assert_eq!(sizes, vec![1, 3, 6, 10, 15]);
        assert_eq!(f.index_of(&[0, 2, 1]).map(|i| f.level(i)), Some(3));
    }

    #[test]
    fn canonical_commutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = TruncatedFock::new(3, 4).unwrap();
        let (a, b) = (random_vec(&mut rng, 3), random_vec(&mut rng, 3));
        assert!(f.commutator_defect(&a, &b) < 1e-13);
        let raise = f.creation(&a);
        assert!(f.sector_leakage(&(&raise * &raise)) > 0.0);
    }

    #[test]
    fn single_particle_reduces_to_inner_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = TruncatedFock::new(3, DEFAULT_TRUNCATION).unwrap();
        let u = random_unitary(&mut rng, 3);
        let (psi, phi) = (random_vec(&mut rng, 3), random_vec(&mut rng, 3));
        let r = fock_functoriality_check(&f, &u, std::slice::from_ref(&psi), std::slice::from_ref(&phi)).unwrap();
        let direct = DVector::from_vec(psi).dotc(&(&u * DVector::from_vec(phi)));
        assert!((r.fock_value - direct).norm() < 1e-13);
    }

    #[test]
    fn two_orthonormal_identity() {
        let f = TruncatedFock::new(2, DEFAULT_TRUNCATION).unwrap();
        let e = vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]];
        let r = fock_functoriality_check(&f, &DMatrix::identity(2, 2), &e, &e).unwrap();
        assert!((r.fock_value - c(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn three_particles_random_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = TruncatedFock::new(3, DEFAULT_TRUNCATION).unwrap();
        let u = random_unitary(&mut rng, 3);
        let psis: Vec<_> = (0..3).map(|_| random_vec(&mut rng, 3)).collect();
        let phis: Vec<_> = (0..3).map(|_| random_vec(&mut rng, 3)).collect();
        let r = fock_functoriality_check(&f, &u, &psis, &phis).unwrap();
        assert!(r.residual < 1e-12, "{r:?}");
        assert!(r.unitarity_defect < 1e-12);
    }

    #[test]
    fn truncation_too_small() {
        let f = TruncatedFock::new(2, 2).unwrap();
        let v = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let r = fock_functoriality_check(&f, &DMatrix::identity(2, 2), &vec![v.clone(); 3], &vec![v; 3]);
        assert!(matches!(r, Err(Error::Size(_))));
    }

    #[test]
    fn d_gamma_spectrum_is_additive() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 1..=3 {
            let f = TruncatedFock::new(n, 3).unwrap();
            let h = random_hermitian(&mut rng, n);
            let one: Vec<f64> = h.clone().symmetric_eigen().eigenvalues.iter().cloned().collect();
            let dg = f.d_gamma(&h);
            assert!(f.sector_leakage(&dg) == 0.0);
            for k in 0..=3 {
                let mut got: Vec<f64> = f.sector_block(&dg, k).symmetric_eigen().eigenvalues.iter().cloned().collect();
                let mut want: Vec<f64> =
                    compositions(n, k).iter().map(|m| m.iter().zip(&one).map(|(&c, e)| c as f64 * e).sum()).collect();
                got.sort_by(f64::total_cmp);
                want.sort_by(f64::total_cmp);
                for (g, w) in got.iter().zip(&want) {
                    assert!((g - w).abs() < 1e-12, "n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn second_quantization_is_generated_by_d_gamma() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = TruncatedFock::new(3, DEFAULT_TRUNCATION).unwrap();
        let h = random_hermitian(&mut rng, 3);
        let r = gamma_generator_check(&f, &h, 0.8);
        assert!(r.leakage < 1e-14, "{r:?}");
        assert!(r.gap < 1e-12, "{r:?}");
    }

    #[test]
    fn weyl_relation_uses_imaginary_part() {
        let f = TruncatedFock::new(2, 24).unwrap();
        let psi1 = vec![c(0.3, 0.1), c(-0.2, 0.25)];
        let psi2 = vec![c(0.1, -0.3), c(0.2, 0.15)];
        let r = weyl_check(&f, &psi1, &psi2);
        assert!(!r.flagged);
        assert!(r.residual < 1e-12, "{r:?}");
        assert!(r.literal_phase_residual > 1e-3);
    }
}
