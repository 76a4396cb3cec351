//! Seeded generators for states, Hamiltonians, decompositions and whole
//! families. Everything is driven by a caller-supplied RNG so ensembles
//! can split streams and any instance can be replayed from its seed.

use crate::error::{Error, Result};
use crate::histories::{EventSlot, HistoryFamily};
use crate::matrix::{C64, ComplexMatrix};
use crate::projector::ProjectorDecomposition;
use crate::state::{DensityMatrix, Hamiltonian};
use alloc::vec::Vec;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg_attr(feature = "std", allow(unused_imports))]
use num_traits::Float;

/// The crate's deterministic RNG: fixed algorithm, fixed streams, so one
/// seed reproduces one run on any platform.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal deviate via the polar-free Box-Muller form.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // gen() is in [0, 1); flip so the logarithm argument is in (0, 1].
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * core::f64::consts::PI * u2).cos()
}

fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Vec<C64> {
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        data.push(C64::new(standard_normal(rng), standard_normal(rng)));
    }
    data
}

/// Random Hermitian generator: `scale * (A + A†) / 2` with independent
/// standard complex Gaussian entries in `A`.
pub fn random_hamiltonian<R: Rng + ?Sized>(dim: usize, scale: f64, rng: &mut R) -> Hamiltonian {
    let a = ComplexMatrix::from_row_major(dim, ginibre(dim, dim, rng));
    let h = a.symmetrized().scale_re(scale);
    Hamiltonian::new(h).expect("symmetrized matrix is hermitian")
}

/// Haar-random unitary: QR of a complex Gaussian matrix, with the
/// triangular factor's diagonal kept real-positive (modified Gram-Schmidt
/// builds it that way, which is exactly the phase fixing the Haar measure
/// needs).
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let a = ComplexMatrix::from_row_major(dim, ginibre(dim, dim, rng));
    let mut cols: Vec<Vec<C64>> = (0..dim).map(|j| a.col(j)).collect();
    for j in 0..dim {
        // Two orthogonalization passes keep loss of orthogonality at the
        // roundoff level even for unlucky draws.
        for _ in 0..2 {
            for i in 0..j {
                let proj: C64 = cols[i]
                    .iter()
                    .zip(&cols[j])
                    .map(|(q, v)| q.conj() * v)
                    .sum();
                for k in 0..dim {
                    let qk = cols[i][k];
                    cols[j][k] -= qk * proj;
                }
            }
        }
        let norm: f64 = cols[j].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for x in cols[j].iter_mut() {
            *x /= norm;
        }
    }
    ComplexMatrix::from_fn(dim, |i, j| cols[j][i])
}

/// Random rank-`rank` density matrix `G G† / Tr(G G†)` with Gaussian `G`.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Result<DensityMatrix> {
    if rank == 0 || rank > dim {
        return Err(Error::BadConfig {
            field: "rank",
            reason: "must be between 1 and the dimension",
        });
    }
    let g = ginibre(dim, rank, rng);
    let mut m = ComplexMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..rank {
                acc += g[i * rank + k] * g[j * rank + k].conj();
            }
            m.set(i, j, acc);
        }
    }
    let tr = m.trace().re;
    DensityMatrix::new(m.scale_re(1.0 / tr))
}

/// Random orthogonal decomposition with the given ranks: conjugate the
/// diagonal block decomposition by a Haar unitary.
pub fn random_projector_decomposition<R: Rng + ?Sized>(
    dim: usize,
    ranks: &[usize],
    rng: &mut R,
) -> Result<ProjectorDecomposition> {
    let sum: usize = ranks.iter().sum();
    if sum != dim || ranks.iter().any(|&r| r == 0) {
        return Err(Error::BadRanks { sum, dim });
    }
    let u = random_unitary(dim, rng);
    let mut projectors = Vec::with_capacity(ranks.len());
    let mut offset = 0;
    for &r in ranks {
        let block = offset..offset + r;
        let e = ComplexMatrix::from_fn(dim, |i, j| {
            let mut acc = C64::new(0.0, 0.0);
            for c in block.clone() {
                acc += u.at(i, c) * u.at(j, c).conj();
            }
            acc
        });
        projectors.push(e);
        offset += r;
    }
    ProjectorDecomposition::new(projectors, "random")
}

/// Random composition of `dim` into `parts` positive ranks.
pub fn random_ranks<R: Rng + ?Sized>(dim: usize, parts: usize, rng: &mut R) -> Vec<usize> {
    assert!(parts >= 1 && parts <= dim, "parts must be in 1..=dim");
    let mut ranks = alloc::vec![1usize; parts];
    for _ in 0..dim - parts {
        let k = rng.gen_range(0..parts);
        ranks[k] += 1;
    }
    ranks
}

/// Random history family: random mixed state, unit-scale Hamiltonian, and
/// 1 to `max_slots` events with random decompositions at increasing times.
pub fn random_family<R: Rng + ?Sized>(dim: usize, max_slots: usize, rng: &mut R) -> HistoryFamily {
    assert!(dim >= 2, "family dimension must be at least 2");
    let rank = rng.gen_range(1..=dim);
    let rho0 = random_density(dim, rank, rng).expect("rank is in range");
    let h = random_hamiltonian(dim, 1.0, rng);
    let slot_count = rng.gen_range(1..=max_slots.max(1));
    let mut slots = Vec::with_capacity(slot_count);
    let mut t = 0.0;
    for _ in 0..slot_count {
        t += rng.gen_range(0.2..1.0);
        let parts = rng.gen_range(2..=dim.min(4));
        let ranks = random_ranks(dim, parts, rng);
        let dec = random_projector_decomposition(dim, &ranks, rng).expect("ranks partition dim");
        slots.push(EventSlot::new(t, dec));
    }
    HistoryFamily::new(rho0, h, slots).expect("generated parts are valid")
}

/// Derive an independent child seed from a master RNG.
pub fn child_seed<R: RngCore + ?Sized>(master: &mut R) -> u64 {
    master.next_u64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate::Validate;

    #[test]
    fn same_seed_same_hamiltonian() {
        let a = random_hamiltonian(6, 0.7, &mut seeded_rng(42));
        let b = random_hamiltonian(6, 0.7, &mut seeded_rng(42));
        assert_eq!(a.matrix().max_abs_diff(b.matrix()), 0.0);
        let c = random_hamiltonian(6, 0.7, &mut seeded_rng(43));
        assert!(a.matrix().max_abs_diff(c.matrix()) > 1e-3);
    }

    #[test]
    fn zero_scale_gives_the_zero_hamiltonian() {
        let h = random_hamiltonian(4, 0.0, &mut seeded_rng(9));
        assert_eq!(h.matrix().max_abs(), 0.0);
    }

    #[test]
    fn unitaries_are_unitary() {
        let mut rng = seeded_rng(7);
        for dim in 1..=16 {
            let u = random_unitary(dim, &mut rng);
            assert!(u.unitarity_residual() < 1e-13, "dim {dim}");
        }
    }

    #[test]
    fn density_rank_shows_in_the_spectrum() {
        let rho = random_density(6, 3, &mut seeded_rng(5)).unwrap();
        assert!(rho.validate().is_valid());
        let spectrum = rho.spectrum();
        assert!(spectrum[2] > 1e-6);
        assert!(spectrum[3].abs() < 1e-12);
        assert!(random_density(4, 0, &mut seeded_rng(1)).is_err());
        assert!(random_density(4, 5, &mut seeded_rng(1)).is_err());
    }

    #[test]
    fn decomposition_ranks_are_respected() {
        let d = random_projector_decomposition(5, &[2, 2, 1], &mut seeded_rng(9)).unwrap();
        assert!(d.validate().is_valid());
        assert_eq!(d.outcomes(), 3);
        assert_eq!(d.rank(0), 2);
        assert_eq!(d.rank(2), 1);
        assert!(matches!(
            random_projector_decomposition(5, &[2, 2, 2], &mut seeded_rng(9)),
            Err(Error::BadRanks { sum: 6, dim: 5 })
        ));
    }

    #[test]
    fn random_compositions_partition_the_dimension() {
        let mut rng = seeded_rng(3);
        for _ in 0..50 {
            let ranks = random_ranks(8, 3, &mut rng);
            assert_eq!(ranks.iter().sum::<usize>(), 8);
            assert!(ranks.iter().all(|&r| r >= 1));
        }
    }

    #[test]
    fn random_families_validate() {
        let mut rng = seeded_rng(11);
        for _ in 0..20 {
            let dim = rng.gen_range(2..=8);
            let family = random_family(dim, 4, &mut rng);
            assert!(family.validate().is_valid());
            assert!(family.len() >= 1 && family.len() <= 4);
        }
    }

    #[test]
    fn normal_deviates_have_sane_moments() {
        let mut rng = seeded_rng(17);
        let n = 20_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let x = standard_normal(&mut rng);
            sum += x;
            sumsq += x * x;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((var - 1.0).abs() < 0.1, "var {var}");
    }
}
