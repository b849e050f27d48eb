//! Entropy-typical projectors of product states, by exhaustive enumeration of
//! eigenvector sequences.

use serde::{Deserialize, Serialize};

use super::{exp2, log2, product_dim};
use crate::error::{Error, Result};
use crate::linalg::{eigh, CMatrix, CVector, Eigh};
use crate::operators::{self, DensityState, Projector, DEFAULT_DIM_CAP, WINDOW_SLACK};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct TypicalityParams<T: Real> {
    /// Width constant of the `alpha sqrt(n)` window (in bits).
    pub alpha: T,
    pub n: usize,
    pub dim_cap: usize,
}

impl<T: Real> TypicalityParams<T> {
    pub fn new(alpha: T, n: usize) -> Self {
        Self {
            alpha,
            n,
            dim_cap: DEFAULT_DIM_CAP,
        }
    }

    /// `alpha sqrt(n)`.
    pub fn window(&self) -> T {
        self.alpha * T::count(self.n).sqrt()
    }

    pub(crate) fn check(&self, n_factors: usize) -> Result<()> {
        if !(self.alpha > T::zero()) {
            return Err(Error::arg("alpha must be positive"));
        }
        if self.n != n_factors {
            return Err(Error::shape(format!(
                "params say n = {} but {n_factors} factors were given",
                self.n
            )));
        }
        Ok(())
    }
}

/// The constant of the typicality bounds, `max{(log2 3)^2, (log2 d)^2}`.
pub fn beta_l<T: Real>(d: usize) -> T {
    let l3 = T::lit(3f64.log2());
    let ld = log2(T::count(d.max(1)));
    (l3 * l3).max(ld * ld)
}

/// Diagnostics of a typical projector together with the three bounds it must obey.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TypicalStats<T> {
    pub trace_weight: T,
    pub rank: usize,
    /// Extreme eigenvalues of `rho^n` inside the projector; NaN when it is empty.
    pub min_kept: T,
    pub max_kept: T,
    /// `sum_i S(rho_i)` in bits.
    pub entropy_bits: T,
    pub beta_l: T,
    pub weight_bound: T,
    pub eig_lower: T,
    pub eig_upper: T,
    pub rank_lower: T,
    pub rank_upper: T,
    pub weight_ok: bool,
    pub eig_ok: bool,
    pub rank_ok: bool,
}

impl<T: Real> TypicalStats<T> {
    pub fn all_ok(&self) -> bool {
        self.weight_ok && self.eig_ok && self.rank_ok
    }
}

/// The typical eigenvector sequences of `rho_1 (x) ... (x) rho_n`.
#[derive(Clone, Debug)]
pub struct TypicalSet<T: Real> {
    factors: Vec<Eigh<T>>,
    d: usize,
    /// Flat indices (first factor most significant) of typical sequences.
    pub sequences: Vec<usize>,
    /// Eigenvalue of `rho^n` for each typical sequence.
    pub probs: Vec<T>,
    pub entropy_bits: T,
    pub window: T,
}

impl<T: Real> TypicalSet<T> {
    pub fn new(factors: &[DensityState<T>], params: &TypicalityParams<T>) -> Result<Self> {
        params.check(factors.len())?;
        let total = product_dim(factors, params.dim_cap)?;
        let d = factors[0].dim();
        let n = factors.len();
        let eigs: Vec<Eigh<T>> = factors
            .iter()
            .map(|f| {
                let mut e = eigh(f.matrix());
                e.values.iter_mut().for_each(|p| *p = p.max(T::zero()));
                e
            })
            .collect();
        let entropy_bits = factors
            .iter()
            .fold(T::zero(), |acc, f| acc + log2(T::lit(std::f64::consts::E)) * operators::entropy(f));
        let window = params.window();
        let slack = T::lit(WINDOW_SLACK) * (T::one() + entropy_bits.abs());
        // surprisal of each level, infinite for empty levels
        let surprisal: Vec<Vec<Option<T>>> = eigs
            .iter()
            .map(|e| {
                e.values
                    .iter()
                    .map(|&p| if p > T::zero() { Some(-log2(p)) } else { None })
                    .collect()
            })
            .collect();

        let mut sequences = Vec::new();
        let mut probs = Vec::new();
        let mut digits = vec![0usize; n];
        for idx in 0..total {
            let mut rem = idx;
            for i in (0..n).rev() {
                digits[i] = rem % d;
                rem /= d;
            }
            let mut s = T::zero();
            let mut p = T::one();
            let mut empty = false;
            for i in 0..n {
                match surprisal[i][digits[i]] {
                    Some(x) => {
                        s += x;
                        p *= eigs[i].values[digits[i]];
                    }
                    None => {
                        empty = true;
                        break;
                    }
                }
            }
            if !empty && (s - entropy_bits).abs() <= window + slack {
                sequences.push(idx);
                probs.push(p);
            }
        }
        Ok(Self {
            factors: eigs,
            d,
            sequences,
            probs,
            entropy_bits,
            window,
        })
    }

    pub fn n(&self) -> usize {
        self.factors.len()
    }

    pub fn total_dim(&self) -> usize {
        self.d.pow(self.n() as u32)
    }

    pub fn rank(&self) -> usize {
        self.sequences.len()
    }

    /// `Tr(rho^n Pi)`.
    pub fn weight(&self) -> T {
        self.probs.iter().fold(T::zero(), |a, &p| a + p)
    }

    /// Product eigenvector for a flat sequence index.
    pub fn product_vector(&self, idx: usize) -> CVector<T> {
        let n = self.n();
        let mut rem = idx;
        let mut digits = vec![0usize; n];
        for i in (0..n).rev() {
            digits[i] = rem % self.d;
            rem /= self.d;
        }
        let mut v = self.factors[0].vectors.column(digits[0]).clone_owned();
        for (f, &k) in self.factors.iter().zip(&digits).skip(1) {
            v = v.kronecker(&f.vectors.column(k));
        }
        v
    }

    /// Orthonormal columns spanning the typical subspace.
    pub fn basis(&self) -> CMatrix<T> {
        let dim = self.total_dim();
        let mut q = CMatrix::zeros(dim, self.rank());
        for (c, &idx) in self.sequences.iter().enumerate() {
            q.set_column(c, &self.product_vector(idx));
        }
        q
    }

    pub fn projector(&self) -> Projector<T> {
        Projector::from_orthonormal_columns(&self.basis())
    }

    pub fn stats(&self, alpha: T) -> TypicalStats<T> {
        let bl = beta_l::<T>(self.d);
        let weight = self.weight();
        let weight_bound = T::one() - bl / (alpha * alpha);
        let eig_lower = exp2(-self.entropy_bits - self.window);
        let eig_upper = exp2(-self.entropy_bits + self.window);
        let rank_lower = weight_bound * exp2(self.entropy_bits - self.window);
        let rank_upper = exp2(self.entropy_bits + self.window);
        let nan = T::lit(f64::NAN);
        let (min_kept, max_kept) = if self.probs.is_empty() {
            (nan, nan)
        } else {
            self.probs.iter().fold((T::max_value().unwrap(), T::zero()), |(lo, hi), &p| {
                (lo.min(p), hi.max(p))
            })
        };
        // sequences within the window slack may sit a hair outside the eigenvalue bounds
        let rel = T::lit(1e-9);
        let rank = T::count(self.rank());
        TypicalStats {
            trace_weight: weight,
            rank: self.rank(),
            min_kept,
            max_kept,
            entropy_bits: self.entropy_bits,
            beta_l: bl,
            weight_bound,
            eig_lower,
            eig_upper,
            rank_lower,
            rank_upper,
            weight_ok: weight >= weight_bound - rel,
            eig_ok: self.probs.is_empty()
                || (min_kept >= eig_lower * (T::one() - rel) && max_kept <= eig_upper * (T::one() + rel)),
            rank_ok: rank >= rank_lower * (T::one() - rel) && rank <= rank_upper * (T::one() + rel),
        }
    }
}

/// Typical projector of `factors[0] (x) ... (x) factors[n-1]` and its diagnostics.
pub fn typical_projector<T: Real>(
    factors: &[DensityState<T>],
    params: &TypicalityParams<T>,
) -> Result<(Projector<T>, TypicalStats<T>)> {
    let set = TypicalSet::new(factors, params)?;
    Ok((set.projector(), set.stats(params.alpha)))
}
