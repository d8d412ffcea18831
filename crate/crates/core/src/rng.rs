//! Seeded sampling streams and random matrix ensembles.
//!
//! Every randomized probe derives one independent stream per trial from
//! (master seed, trial index), so parallel and serial schedules agree
//! exactly and reruns are bit-for-bit reproducible.

use crate::fock::{DenseOperator, ModeSystem, QuantumState};
use crate::linalg::{self, c, CMat};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Independent stream for (master seed, index): SplitMix64 finalizer over
/// the pair, feeding a ChaCha8 generator.
pub fn stream(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut z = master_seed
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(index)
        .wrapping_add(0x243f_6a88_85a3_08d3);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    ChaCha8Rng::seed_from_u64(z)
}

fn std_normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// GUE-distributed Hermitian matrix: complex Gaussian entries, symmetrized.
pub fn gue(rng: &mut impl Rng, dim: usize) -> CMat {
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(std_normal(rng), std_normal(rng))
    });
    linalg::hermitize(&g)
}

/// GUE observable compressed by the interior projector and normalized to
/// unit operator norm.
pub fn random_interior_observable(system: ModeSystem, rng: &mut impl Rng) -> DenseOperator {
    let h = system.compress_interior(&gue(rng, system.dim()));
    let norm = linalg::operator_norm(&h).max(1e-300);
    DenseOperator::hermitian(system, h.scale(1.0 / norm))
}

/// Random density operator from the Ginibre ensemble (G G†, normalized),
/// optionally compressed to the interior before normalization.
pub fn random_state(system: ModeSystem, rng: &mut impl Rng, interior: bool) -> QuantumState {
    let dim = system.dim();
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(std_normal(rng), std_normal(rng))
    });
    let mut rho = &g * g.adjoint();
    if interior {
        rho = system.compress_interior(&rho);
    }
    let tr = linalg::trace(&rho).re;
    QuantumState::new(DenseOperator::hermitian(system, rho.scale(1.0 / tr)))
        .expect("Ginibre construction yields a valid state")
}

/// Random pure state, optionally supported on the interior.
pub fn random_pure_state(system: ModeSystem, rng: &mut impl Rng, interior: bool) -> QuantumState {
    let dim = system.dim();
    let mut v = nalgebra::DVector::from_fn(dim, |_, _| {
        Complex64::new(std_normal(rng), std_normal(rng))
    });
    if interior {
        let keep = system.interior_levels();
        for i in 0..dim {
            if system.digits(i).iter().any(|&k| k >= keep) {
                v[i] = c(0.0, 0.0);
            }
        }
    }
    QuantumState::from_vector(system, &v).expect("random vector is nonzero")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_deterministic_and_independent() {
        let mut a1 = stream(42, 7);
        let mut a2 = stream(42, 7);
        let mut b = stream(42, 8);
        let x1: u64 = a1.random();
        let x2: u64 = a2.random();
        let y: u64 = b.random();
        assert_eq!(x1, x2);
        assert_ne!(x1, y);
    }

    #[test]
    fn gue_is_hermitian() {
        let mut rng = stream(1, 0);
        let h = gue(&mut rng, 8);
        assert!(linalg::is_hermitian(&h, 1e-12));
    }

    #[test]
    fn interior_observable_properties() {
        let sys = ModeSystem::with_guard_band(1, 10, 3).unwrap();
        let mut rng = stream(2, 0);
        let x = random_interior_observable(sys, &mut rng);
        assert!((linalg::operator_norm(x.matrix()) - 1.0).abs() < 1e-10);
        // Supported on the interior.
        let pi = sys.interior_projector();
        let compressed = &pi * x.matrix() * &pi;
        assert!((x.matrix() - compressed).norm() < 1e-12);
    }

    #[test]
    fn random_states_are_valid() {
        let sys = ModeSystem::with_guard_band(1, 8, 2).unwrap();
        let mut rng = stream(3, 1);
        let rho = random_state(sys, &mut rng, true);
        assert!(rho.energy() >= 0.0);
        let psi = random_pure_state(sys, &mut rng, true);
        assert!(psi.energy() >= 0.0);
    }
}
