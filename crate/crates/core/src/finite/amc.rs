//! Approximate microcanonical subspaces at small `n`.
//!
//! The construction averages `omega^(x)n` over seeded random states whose charge
//! values are close to `v` (`Gamma`) and over states that are far from `v`
//! (`Phi`), and keeps the nonnegative eigenspace of `Gamma - Phi`. Validation is
//! empirical: random states inside the subspace probe how sharp the charges
//! are, and random product states with the right charges probe how much of
//! them the subspace captures.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::{self, trial_rng, trial_seed};
use crate::error::{Error, Result};
use crate::linalg::{self, checked_power, CMatrix};
use crate::operators::{self, ChargeSet, DensityState, Projector, DEFAULT_DIM_CAP};
use crate::scalar::Real;

/// Distribution the random single-copy states are drawn from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ensemble {
    #[default]
    HilbertSchmidt,
    /// Random diagonal states; with diagonal charges this keeps everything commuting.
    Diagonal,
}

impl Ensemble {
    fn draw<T: Real>(self, d: usize, rng: &mut ChaCha8Rng) -> DensityState<T> {
        match self {
            Ensemble::HilbertSchmidt => sampling::hilbert_schmidt(d, rng),
            Ensemble::Diagonal => sampling::diagonal(d, rng),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AmcParams<T: Real> {
    /// Target per-copy charge values `v_j`.
    pub values: Vec<T>,
    /// Window half-width of condition 1, in units of each charge's spectral diameter.
    pub eta: T,
    /// Window half-width of condition 2.
    pub eta_prime: T,
    /// Near class: every charge within `s` diameters of `v`.
    pub s: T,
    /// Far class: some charge more than `t` diameters from `v`.
    pub t: T,
    pub n: usize,
    /// Accepted states per class.
    pub samples: usize,
    pub seed: u64,
    pub ensemble: Ensemble,
    /// Rejection-sampling budget per class, in draws.
    pub max_attempts: usize,
    pub dim_cap: usize,
}

impl<T: Real> AmcParams<T> {
    pub fn new(values: Vec<T>, eta: T, eta_prime: T, s: T, t: T, n: usize) -> Self {
        Self {
            values,
            eta,
            eta_prime,
            s,
            t,
            n,
            samples: 200,
            seed: 0,
            ensemble: Ensemble::default(),
            max_attempts: 200_000,
            dim_cap: DEFAULT_DIM_CAP,
        }
    }

    fn check(&self, charges: &ChargeSet<T>) -> Result<usize> {
        charges.check_len(self.values.len(), "values")?;
        if !(T::zero() < self.eta_prime && self.eta_prime < self.eta) {
            return Err(Error::arg("need 0 < eta' < eta"));
        }
        if !(T::zero() < self.s && self.s < self.t) {
            return Err(Error::arg("need 0 < s < t"));
        }
        if self.n == 0 {
            return Err(Error::arg("n must be at least 1"));
        }
        let dim = checked_power(charges.dim(), self.n);
        if dim > self.dim_cap as u128 {
            return Err(Error::Capacity { dim, cap: self.dim_cap });
        }
        Ok(dim as usize)
    }

    /// Largest charge deviation `|Tr(omega A_j) - v_j| / Sigma(A_j)` of a single-copy state.
    fn deviation(&self, charges: &ChargeSet<T>, diam: &[T], omega: &DensityState<T>) -> T {
        charges
            .values(omega)
            .iter()
            .zip(&self.values)
            .zip(diam)
            .fold(T::zero(), |acc, ((&x, &v), &s)| acc.max((x - v).abs() / s))
    }
}

/// The displayed parameter formulas, which may exceed 1 (vacuous) at moderate `n`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AmcTheory<T> {
    pub eta: T,
    pub delta: T,
    pub delta_prime: T,
    pub epsilon: T,
    pub ln_delta: T,
    pub ln_delta_prime: T,
    pub ln_epsilon: T,
}

impl<T: Real> AmcTheory<T> {
    pub fn is_vacuous(&self) -> bool {
        !(self.delta < T::one() && self.delta_prime < T::one() && self.epsilon < T::one())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AmcReport<T> {
    pub projector_rank: usize,
    pub empirical_delta: T,
    /// Largest `1 - Tr(omega^(x)n Pi_j^eta')` among the product witnesses.
    pub empirical_delta_prime_threshold: T,
    pub empirical_epsilon: T,
    /// Exact maximum of `1 - Tr(omega Pi_j^eta)` over all states in the subspace.
    pub certified_delta: T,
    pub trials: usize,
    pub witnesses: usize,
    pub theoretical: Option<AmcTheory<T>>,
}

/// Sample statistics of the construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AmcSampling {
    pub near: usize,
    pub far: usize,
    pub attempts: usize,
}

/// `eta = 2 eta'` and the three probability parameters for `n` copies of a
/// `d`-level system with `c` charges, evaluated in log space.
pub fn amc_theoretical_params<T: Real>(n: usize, d: usize, c: usize, eta_prime: T) -> AmcTheory<T> {
    let (nf, df, cf) = (T::count(n), T::count(d), T::count(c));
    let two = T::lit(2.0);
    let five_n = T::lit(5.0) * nf;
    let expo = -nf * eta_prime * eta_prime / (T::lit(8.0) * cf * cf * (df + T::one()) * (df + T::one()));
    let net = two * df * df * five_n.ln();
    let ln_delta_prime = ((cf + T::lit(3.0)) / two).ln() + net + expo;
    let ln_delta = (cf + T::lit(3.0)).ln() + net + expo;
    let ln_epsilon = (two * (cf + T::lit(3.0))).ln() + T::lit(3.0) * df * df * (nf + T::one()).ln() + net + expo;
    AmcTheory {
        eta: two * eta_prime,
        delta: ln_delta.exp(),
        delta_prime: ln_delta_prime.exp(),
        epsilon: ln_epsilon.exp(),
        ln_delta,
        ln_delta_prime,
        ln_epsilon,
    }
}

fn ln_epsilon(n: usize, d: usize, c: usize, eta_prime: f64) -> f64 {
    amc_theoretical_params::<f64>(n, d, c, eta_prime).ln_epsilon
}

/// The `n >= 1` at which the theoretical `epsilon` peaks. `ln epsilon` is concave
/// in `n`, so `epsilon` decreases strictly from there on.
pub fn amc_epsilon_peak(d: usize, c: usize, eta_prime: f64) -> usize {
    let rising = |n: usize| ln_epsilon(n + 1, d, c, eta_prime) > ln_epsilon(n, d, c, eta_prime);
    let (mut lo, mut hi) = (1usize, 2usize);
    if !rising(lo) {
        return 1;
    }
    while rising(hi) {
        lo = hi;
        hi = hi.checked_mul(2).expect("epsilon peak beyond usize");
    }
    // rising(lo) and not rising(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if rising(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Smallest `n` at which the theoretical `epsilon` drops below 1, or `None` when
/// that happens only beyond `n_max`.
pub fn amc_first_nonvacuous_n(d: usize, c: usize, eta_prime: f64, n_max: usize) -> Option<usize> {
    let below = |n: usize| ln_epsilon(n, d, c, eta_prime) < 0.0;
    let peak = amc_epsilon_peak(d, c, eta_prime);
    // epsilon(1) > 1 for every d, c, so the first crossing lies past the peak
    if below(1) {
        return Some(1);
    }
    let (mut lo, mut hi) = (peak, peak.max(1));
    while !below(hi) {
        if hi >= n_max {
            return None;
        }
        lo = hi;
        hi = hi.saturating_mul(2).min(n_max);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if below(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

fn tensor_power<T: Real>(omega: &DensityState<T>, n: usize) -> CMatrix<T> {
    let m = omega.matrix();
    (1..n).fold(m.clone(), |acc, _| acc.kronecker(m))
}

fn diameters<T: Real>(charges: &ChargeSet<T>) -> Result<Vec<T>> {
    charges
        .charges()
        .iter()
        .enumerate()
        .map(|(j, a)| {
            let s = operators::spectral_diameter(a);
            if s > T::zero() {
                Ok(s)
            } else {
                Err(Error::arg(format!("charge {j} is a multiple of the identity")))
            }
        })
        .collect()
}

/// Draws states in parallel batches until `want` of them satisfy `accept`, using
/// one generator per draw so the result is independent of scheduling.
fn rejection_sample<T: Real>(
    d: usize,
    ensemble: Ensemble,
    stream: u64,
    want: usize,
    budget: usize,
    accept: impl Fn(&DensityState<T>) -> bool + Sync,
) -> (Vec<DensityState<T>>, usize) {
    const BATCH: usize = 512;
    let mut got = Vec::with_capacity(want);
    let mut attempts = 0;
    while got.len() < want && attempts < budget {
        let end = (attempts + BATCH).min(budget);
        let batch: Vec<Option<DensityState<T>>> = (attempts..end)
            .into_par_iter()
            .map(|i| {
                let omega = ensemble.draw::<T>(d, &mut trial_rng(stream, i as u64));
                accept(&omega).then_some(omega)
            })
            .collect();
        let start = attempts;
        attempts = end;
        for (i, w) in batch.into_iter().enumerate() {
            if let Some(w) = w {
                got.push(w);
                if got.len() == want {
                    attempts = start + i + 1;
                    break;
                }
            }
        }
    }
    (got, attempts)
}

/// `Gamma - Phi` and the sample counts behind it.
pub fn amc_operator<T: Real>(charges: &ChargeSet<T>, params: &AmcParams<T>) -> Result<(CMatrix<T>, AmcSampling)> {
    let dim = params.check(charges)?;
    if params.samples == 0 {
        return Err(Error::arg("samples must be at least 1"));
    }
    let diam = diameters(charges)?;
    let d = charges.dim();
    let near_stream = trial_seed(params.seed, 0);
    let far_stream = trial_seed(params.seed, 1);
    let (near, near_attempts) = rejection_sample(d, params.ensemble, near_stream, params.samples, params.max_attempts, |w| {
        params.deviation(charges, &diam, w) <= params.s
    });
    let (far, far_attempts) = rejection_sample(d, params.ensemble, far_stream, params.samples, params.max_attempts, |w| {
        params.deviation(charges, &diam, w) > params.t
    });
    let stats = AmcSampling {
        near: near.len(),
        far: far.len(),
        attempts: near_attempts + far_attempts,
    };
    if near.is_empty() || far.is_empty() {
        return Err(Error::Sampling(format!(
            "{} near and {} far states in {} draws; move v away from the boundary or adjust s and t",
            stats.near, stats.far, stats.attempts
        )));
    }
    let average = |states: &[DensityState<T>]| -> CMatrix<T> {
        // fixed chunks summed in order keep the result independent of the thread count
        let partial: Vec<CMatrix<T>> = states
            .par_chunks(16)
            .map(|chunk| {
                chunk
                    .iter()
                    .fold(CMatrix::zeros(dim, dim), |acc, w| acc + tensor_power(w, params.n))
            })
            .collect();
        let sum = partial.into_iter().fold(CMatrix::zeros(dim, dim), |a, b| a + b);
        sum * linalg::cplx(T::one() / T::count(states.len()))
    };
    Ok((average(&near) - average(&far), stats))
}

/// Projector onto the nonnegative eigenspace of `Gamma - Phi`.
pub fn amc_construct<T: Real>(charges: &ChargeSet<T>, params: &AmcParams<T>) -> Result<Projector<T>> {
    let (op, _) = amc_operator(charges, params)?;
    Ok(nonnegative_part(&op))
}

fn nonnegative_part<T: Real>(op: &CMatrix<T>) -> Projector<T> {
    let scale = linalg::max_abs(op);
    let q = linalg::range_basis(op, -T::lit(1e-12) * scale);
    Projector::from_orthonormal_columns(&q)
}

/// Window projectors `[n v_j - n eta Sigma_j, n v_j + n eta Sigma_j]` of the total charges.
pub fn amc_windows<T: Real>(charges: &ChargeSet<T>, values: &[T], eta: T, n: usize, cap: usize) -> Result<Vec<Projector<T>>> {
    charges.check_len(values.len(), "values")?;
    let diam = diameters(charges)?;
    let nt = T::count(n);
    charges
        .total(n, cap)?
        .charges()
        .iter()
        .zip(values)
        .zip(&diam)
        .map(|((a, &v), &s)| operators::window_projector(a, nt * (v - eta * s), nt * (v + eta * s)))
        .collect()
}

/// `1 - Tr(omega P)`, clamped to `[0, 1]` with rounding-level values flushed to 0.
fn deficit<T: Real>(omega: &CMatrix<T>, p: &CMatrix<T>) -> T {
    let x = T::one() - linalg::expectation(omega, p);
    let floor = T::default_epsilon() * T::count(omega.nrows()) * T::lit(16.0);
    if x <= floor {
        T::zero()
    } else {
        x.min(T::one())
    }
}

/// Empirical a.m.c. parameters of `p` from `trials` random states.
pub fn amc_validate<T: Real>(p: &Projector<T>, charges: &ChargeSet<T>, params: &AmcParams<T>, trials: usize) -> Result<AmcReport<T>> {
    let dim = params.check(charges)?;
    if trials == 0 {
        return Err(Error::arg("trials must be at least 1"));
    }
    if p.dim() != dim {
        return Err(Error::shape(format!("projector acts on {} but d^n = {dim}", p.dim())));
    }
    let diam = diameters(charges)?;
    let d = charges.dim();
    let win = amc_windows(charges, &params.values, params.eta, params.n, params.dim_cap)?;
    let win_prime = amc_windows(charges, &params.values, params.eta_prime, params.n, params.dim_cap)?;
    let q = p.range_basis();

    // condition 1: states supported in the subspace have sharp charges; a state
    // Q rho Q^dagger only sees the compressed windows Q^dagger W Q
    let (empirical_delta, certified_delta) = if q.ncols() == 0 {
        (T::zero(), T::zero())
    } else {
        let r = q.ncols();
        let compressed: Vec<CMatrix<T>> = win
            .iter()
            .map(|w| {
                let qw = q.adjoint() * w.matrix();
                qw * &q
            })
            .collect();
        let stream = trial_seed(params.seed, 2);
        let sampled = (0..trials)
            .into_par_iter()
            .map(|i| {
                let omega = sampling::hilbert_schmidt::<T>(r, &mut trial_rng(stream, i as u64));
                compressed.iter().fold(T::zero(), |acc, w| acc.max(deficit(omega.matrix(), w)))
            })
            .reduce(T::zero, |a, b| a.max(b));
        let exact = compressed.iter().fold(T::zero(), |acc, w| {
            let worst = linalg::eigenvalues_hermitian(w)
                .into_iter()
                .fold(T::one(), |a, b| a.min(b));
            acc.max((T::one() - worst).clamp(T::zero(), T::one()))
        });
        (sampled, exact)
    };

    // condition 2: product states with per-copy charges inside half the eta' window
    let half = params.eta_prime / T::lit(2.0);
    let (witnesses, _) = rejection_sample(d, params.ensemble, trial_seed(params.seed, 3), trials, params.max_attempts, |w| {
        params.deviation(charges, &diam, w) <= half
    });
    if witnesses.is_empty() {
        return Err(Error::Sampling(format!(
            "no product witness within eta'/2 of v in {} draws",
            params.max_attempts
        )));
    }
    let (empirical_epsilon, empirical_delta_prime_threshold) = witnesses
        .par_iter()
        .map(|w| {
            let big = tensor_power(w, params.n);
            let eps = deficit(&big, p.matrix());
            let dp = win_prime.iter().fold(T::zero(), |acc, pw| acc.max(deficit(&big, pw.matrix())));
            (eps, dp)
        })
        .reduce(|| (T::zero(), T::zero()), |a, b| (a.0.max(b.0), a.1.max(b.1)));

    Ok(AmcReport {
        projector_rank: q.ncols(),
        empirical_delta,
        empirical_delta_prime_threshold,
        empirical_epsilon,
        certified_delta,
        trials,
        witnesses: witnesses.len(),
        theoretical: Some(amc_theoretical_params(params.n, d, charges.len(), params.eta_prime)),
    })
}
