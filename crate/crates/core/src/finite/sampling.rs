//! Seeded random states.
//!
//! Each trial draws from its own generator seeded by `(seed, index)`, so results
//! do not depend on how trials are spread over threads.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::linalg::{cplx, CMatrix};
use crate::operators::DensityState;
use crate::scalar::Real;
use nalgebra::Complex;

/// SplitMix64 finalizer applied to `seed + index`.
pub fn trial_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(seed, index))
}

/// Hilbert-Schmidt random state `G G^dagger / Tr(G G^dagger)` with Gaussian `G`.
pub fn hilbert_schmidt<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> DensityState<T> {
    let g = CMatrix::<T>::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(T::lit(re), T::lit(im))
    });
    DensityState::from_positive(&g * g.adjoint()).expect("Gaussian matrix has positive trace")
}

/// Diagonal state with a uniformly distributed probability vector.
pub fn diagonal<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> DensityState<T> {
    let e: Vec<f64> = (0..d).map(|_| rng.sample(Exp1)).collect();
    let total: f64 = e.iter().sum();
    let m = CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            cplx(T::lit(e[i] / total))
        } else {
            cplx(T::zero())
        }
    });
    DensityState::from_positive(m).expect("positive weights")
}

/// Hilbert-Schmidt state supported on the span of the orthonormal columns of `q`.
pub fn supported_on<T: Real>(q: &CMatrix<T>, rng: &mut ChaCha8Rng) -> DensityState<T> {
    let small = hilbert_schmidt::<T>(q.ncols(), rng);
    DensityState::from_positive(q * small.matrix() * q.adjoint()).expect("embedded state")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    #[test]
    fn seeds_are_stable_and_distinct() {
        assert_eq!(trial_seed(7, 3), trial_seed(7, 3));
        assert_ne!(trial_seed(7, 3), trial_seed(7, 4));
        assert_ne!(trial_seed(7, 3), trial_seed(8, 3));
    }

    #[test]
    fn samples_are_states() {
        let mut rng = trial_rng(1, 0);
        for d in [1, 2, 5] {
            let r = hilbert_schmidt::<f64>(d, &mut rng);
            assert!(DensityState::new(r.matrix().clone()).is_ok());
            let s = diagonal::<f64>(d, &mut rng);
            assert!(DensityState::new(s.matrix().clone()).is_ok());
        }
        let q = CMatrix::<f64>::identity(4, 2);
        let e = supported_on(&q, &mut rng);
        assert!(linalg::cabs(e.matrix()[(3, 3)]) < 1e-15);
    }
}
