//! Explicit almost-commuting unitaries between product states with (nearly) equal
//! entropy and charge values.
//!
//! Both states are trimmed inside a common charge window to flat spectra
//! `tau (x) omega_rho` and `tau (x) omega_sigma` with the same `tau`. Appending
//! the other side's ancilla makes the two spectra identical, and the unitary is
//! the resulting basis change. Identical or slot-permuted inputs are handled by
//! the tensor-slot permutation instead, without an ancilla.

use nalgebra::Complex;
use rand::RngExt;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::trial_rng;
use super::trim::{discard_bound, gcd, trim_core, TrimOptions};
use super::typical::TypicalityParams;
use super::product_dim;
use crate::error::{Error, Result};
use crate::linalg::{self, cplx, CMatrix};
use crate::operators::{self, ChargeSet, DensityState, Projector};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct AetOptions<T: Real> {
    /// Allowed per-copy entropy difference (nats).
    pub gamma: T,
    /// Allowed per-copy difference of each charge value.
    pub gamma_charge: T,
    /// Half-width of the charge window, in units of each charge's spectral diameter.
    pub eta: T,
    pub bins: Option<u64>,
    pub power_iterations: usize,
    pub power_tol: T,
    pub seed: u64,
}

impl<T: Real> Default for AetOptions<T> {
    fn default() -> Self {
        Self {
            gamma: T::lit(1e-9),
            gamma_charge: T::lit(1e-9),
            eta: T::lit(0.3),
            bins: None,
            power_iterations: 2000,
            power_tol: T::lit(1e-10),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AetReport<T> {
    pub n: usize,
    /// `|U (rho^n (x) omega') U^dagger - sigma^n (x) omega|_1`.
    pub trace_distance: T,
    /// `(1/n) |[U, A_j^(n) (x) 1]|` per charge.
    pub commutator_norms: Vec<T>,
    pub ancilla_dim: usize,
    /// Ancilla spectrum appended to `rho^n` (`omega'`), padded to `ancilla_dim`.
    pub omega_prime: Vec<T>,
    /// Ancilla spectrum appended to `sigma^n` (`omega`), padded to `ancilla_dim`.
    pub omega: Vec<T>,
    /// True when the unitary is a permutation of tensor slots.
    pub permutation: bool,
    pub tau_rank: usize,
    pub rho_ancilla_rank: usize,
    pub sigma_ancilla_rank: usize,
    /// Rounding exponent `max(alpha sqrt n, n gamma)` in bits.
    pub z: T,
    pub entropy_gap: T,
    pub charge_gaps: Vec<T>,
    pub rho_kept_weight: T,
    pub sigma_kept_weight: T,
    pub discarded_bound: T,
    pub window_weight_rho: T,
    pub window_weight_sigma: T,
}

/// The unitary on `C^(d^n) (x) C^K` built by [`aet_transform`].
#[derive(Clone, Debug)]
pub enum AetUnitary<T: Real> {
    /// `|x_1 .. x_n> -> |x_slots[0] .. x_slots[n-1]>`.
    SlotPermutation { d: usize, slots: Vec<usize> },
    /// `(B (x) 1) Pi (A^dagger (x) 1)` with `Pi` given as a map of flat indices
    /// `i * K + k`.
    Structured {
        a: CMatrix<T>,
        b: CMatrix<T>,
        ancilla_dim: usize,
        perm: Vec<usize>,
    },
}

impl<T: Real> AetUnitary<T> {
    pub fn ancilla_dim(&self) -> usize {
        match self {
            AetUnitary::SlotPermutation { .. } => 1,
            AetUnitary::Structured { ancilla_dim, .. } => *ancilla_dim,
        }
    }

    /// Total dimension the unitary acts on.
    pub fn dim(&self) -> usize {
        match self {
            AetUnitary::SlotPermutation { d, slots } => d.pow(slots.len() as u32),
            AetUnitary::Structured { a, ancilla_dim, .. } => a.nrows() * ancilla_dim,
        }
    }

    /// Dense matrix, subject to `cap`.
    pub fn to_dense(&self, cap: usize) -> Result<CMatrix<T>> {
        let dim = self.dim();
        if dim > cap {
            return Err(Error::Capacity { dim: dim as u128, cap });
        }
        Ok(match self {
            AetUnitary::SlotPermutation { d, slots } => slot_permutation(*d, slots),
            AetUnitary::Structured { a, b, ancilla_dim, perm } => {
                let id = CMatrix::identity(*ancilla_dim, *ancilla_dim);
                b.kronecker(&id) * permutation_matrix(perm) * a.adjoint().kronecker(&id)
            }
        })
    }
}

fn permutation_matrix<T: Real>(perm: &[usize]) -> CMatrix<T> {
    let m = perm.len();
    let mut p = CMatrix::zeros(m, m);
    for (src, &dst) in perm.iter().enumerate() {
        p[(dst, src)] = cplx(T::one());
    }
    p
}

fn slot_permutation<T: Real>(d: usize, slots: &[usize]) -> CMatrix<T> {
    let n = slots.len();
    let dim = d.pow(n as u32);
    let mut digits = vec![0usize; n];
    let perm: Vec<usize> = (0..dim)
        .map(|x| {
            let mut rem = x;
            for i in (0..n).rev() {
                digits[i] = rem % d;
                rem /= d;
            }
            slots.iter().fold(0, |acc, &s| acc * d + digits[s])
        })
        .collect();
    permutation_matrix(&perm)
}

/// Finds `slots` with `sigma_i = rho_slots[i]` when the factor lists are equal
/// as multisets.
fn matching_slots<T: Real>(rho: &[DensityState<T>], sigma: &[DensityState<T>]) -> Option<Vec<usize>> {
    let tol = T::lit(1e-12);
    let mut used = vec![false; rho.len()];
    sigma
        .iter()
        .map(|s| {
            let j = (0..rho.len()).find(|&j| !used[j] && linalg::max_abs(&(rho[j].matrix() - s.matrix())) <= tol)?;
            used[j] = true;
            Some(j)
        })
        .collect()
}

/// Projector onto the intersection of the ranges of commuting or non-commuting projectors.
fn intersection<T: Real>(ps: &[Projector<T>]) -> Projector<T> {
    let c = T::count(ps.len());
    let d = ps[0].dim();
    let avg = ps.iter().fold(CMatrix::zeros(d, d), |acc, p| acc + p.matrix()) * cplx(T::one() / c);
    Projector::from_orthonormal_columns(&linalg::range_basis(&avg, T::one() - T::lit(1e-9)))
}

/// Applies `Pi` (or its inverse) to a vector stored as a `D x K` matrix.
fn permute<T: Real>(v: &CMatrix<T>, perm: &[usize], inverse: bool) -> CMatrix<T> {
    let k = v.ncols();
    let mut out = CMatrix::zeros(v.nrows(), k);
    for (src, &dst) in perm.iter().enumerate() {
        let (from, to) = if inverse { (dst, src) } else { (src, dst) };
        out[(to / k, to % k)] = v[(from / k, from % k)];
    }
    out
}

/// Largest singular value of `Pi (G (x) 1) - (H (x) 1) Pi` by power iteration on its Gram operator.
fn commutator_norm<T: Real>(
    g: &CMatrix<T>,
    h: &CMatrix<T>,
    perm: &[usize],
    k: usize,
    opts: &AetOptions<T>,
    stream: u64,
) -> T {
    let d = g.nrows();
    let mut rng = trial_rng(opts.seed, stream);
    let mut v = CMatrix::<T>::from_fn(d, k, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(T::lit(re), T::lit(im))
    });
    let apply = |v: &CMatrix<T>| -> CMatrix<T> { permute(&(g * v), perm, false) - h * permute(v, perm, false) };
    let apply_adj = |w: &CMatrix<T>| -> CMatrix<T> { g * permute(w, perm, true) - permute(&(h * w), perm, true) };
    let mut est = T::zero();
    for _ in 0..opts.power_iterations.max(1) {
        let norm = v.norm();
        if !(norm > T::zero()) {
            return T::zero();
        }
        v /= cplx(norm);
        let cv = apply(&v);
        let next = cv.norm();
        v = apply_adj(&cv);
        let done = (next - est).abs() <= opts.power_tol * next;
        est = next;
        if done {
            break;
        }
    }
    est
}

/// Trace norm of `Pi (diag(r) (x) diag(w_in)) Pi^dagger - S (x) diag(w_out)`, using the
/// block structure over the ancilla index of the second term.
fn block_distance<T: Real>(r: &[T], w_in: &[T], s: &CMatrix<T>, w_out: &[T], perm: &[usize], inverse: bool) -> T {
    let d = r.len();
    let k = w_in.len();
    let mut placed = vec![T::zero(); d * k];
    for (src, &dst) in perm.iter().enumerate() {
        let (from, to) = if inverse { (dst, src) } else { (src, dst) };
        placed[to] = r[from / k] * w_in[from % k];
    }
    let blocks: Vec<T> = (0..k)
        .into_par_iter()
        .map(|w| {
            let mut m = s * cplx(-w_out[w]);
            for i in 0..d {
                m[(i, i)] += cplx(placed[i * k + w]);
            }
            if w_out[w] == T::zero() {
                (0..d).fold(T::zero(), |a, i| a + placed[i * k + w].abs())
            } else {
                linalg::trace_norm_hermitian(&m)
            }
        })
        .collect();
    blocks.into_iter().fold(T::zero(), |a, b| a + b)
}

fn diagonal_of<T: Real>(m: &CMatrix<T>) -> Option<Vec<T>> {
    let tol = T::lit(1e-12);
    let d = m.nrows();
    for i in 0..d {
        for j in 0..d {
            if i != j && linalg::cabs(m[(i, j)]) > tol {
                return None;
            }
        }
    }
    Some((0..d).map(|i| m[(i, i)].re).collect())
}

fn pad<T: Real>(mut w: Vec<T>, k: usize) -> Vec<T> {
    w.resize(k, T::zero());
    w
}

/// Builds a unitary taking `rho^n (x) omega'` close to `sigma^n (x) omega` that
/// nearly commutes with every total charge, and reports how close and how nearly.
pub fn aet_transform<T: Real>(
    rho_factors: &[DensityState<T>],
    sigma_factors: &[DensityState<T>],
    charges: &ChargeSet<T>,
    params: &TypicalityParams<T>,
    opts: &AetOptions<T>,
) -> Result<(AetUnitary<T>, AetReport<T>)> {
    if rho_factors.len() != sigma_factors.len() {
        return Err(Error::shape(format!(
            "{} rho factors but {} sigma factors",
            rho_factors.len(),
            sigma_factors.len()
        )));
    }
    let dim = product_dim(rho_factors, params.dim_cap)?;
    product_dim(sigma_factors, params.dim_cap)?;
    params.check(rho_factors.len())?;
    let d = rho_factors[0].dim();
    if sigma_factors[0].dim() != d || charges.dim() != d {
        return Err(Error::shape("rho, sigma and the charges must share one local dimension"));
    }
    let n = rho_factors.len();
    let nt = T::count(n);

    let sum_entropy = |fs: &[DensityState<T>]| fs.iter().fold(T::zero(), |a, f| a + operators::entropy(f));
    let s_rho = sum_entropy(rho_factors);
    let s_sigma = sum_entropy(sigma_factors);
    let entropy_gap = (s_rho - s_sigma).abs();
    let slack = T::lit(1e-9);
    if entropy_gap > nt * opts.gamma + slack * (T::one() + s_rho.abs()) {
        return Err(Error::NotEquivalent(format!(
            "entropies differ by {:e} nats, more than n gamma = {:e}",
            entropy_gap.as_f64(),
            (nt * opts.gamma).as_f64()
        )));
    }
    let total_values = |fs: &[DensityState<T>]| -> Vec<T> {
        fs.iter().fold(vec![T::zero(); charges.len()], |acc, f| {
            acc.iter().zip(charges.values(f)).map(|(&a, b)| a + b).collect()
        })
    };
    let v_rho = total_values(rho_factors);
    let v_sigma = total_values(sigma_factors);
    let charge_gaps: Vec<T> = v_rho.iter().zip(&v_sigma).map(|(&a, &b)| (a - b).abs()).collect();
    if let Some((j, g)) = charge_gaps
        .iter()
        .enumerate()
        .find(|(j, &g)| g > nt * opts.gamma_charge + slack * (T::one() + v_rho[*j].abs()))
    {
        return Err(Error::NotEquivalent(format!(
            "charge {j} totals differ by {:e}, more than n gamma' = {:e}",
            g.as_f64(),
            (nt * opts.gamma_charge).as_f64()
        )));
    }

    let totals = charges.total(n, params.dim_cap)?;
    let x: Vec<&CMatrix<T>> = totals.charges().iter().map(|a| a.matrix()).collect();

    if let Some(slots) = matching_slots(rho_factors, sigma_factors) {
        let u = slot_permutation::<T>(d, &slots);
        let rho = DensityState::product(&rho_factors.iter().collect::<Vec<_>>());
        let sigma = DensityState::product(&sigma_factors.iter().collect::<Vec<_>>());
        let trace_distance = linalg::trace_norm_hermitian(&(rho.conjugate(&u).matrix() - sigma.matrix()));
        let commutator_norms = x.iter().map(|xj| linalg::op_norm(&(&u * *xj - *xj * &u)) / nt).collect();
        let report = AetReport {
            n,
            trace_distance,
            commutator_norms,
            ancilla_dim: 1,
            omega_prime: vec![T::one()],
            omega: vec![T::one()],
            permutation: true,
            tau_rank: 1,
            rho_ancilla_rank: 1,
            sigma_ancilla_rank: 1,
            z: params.window(),
            entropy_gap,
            charge_gaps,
            rho_kept_weight: T::one(),
            sigma_kept_weight: T::one(),
            discarded_bound: T::zero(),
            window_weight_rho: T::one(),
            window_weight_sigma: T::one(),
        };
        return Ok((AetUnitary::SlotPermutation { d, slots }, report));
    }

    // common charge window around the rho values
    let windows = totals
        .charges()
        .iter()
        .zip(&v_rho)
        .enumerate()
        .map(|(j, (a, &v))| {
            let half = nt * opts.eta * operators::spectral_diameter(charges.get(j));
            operators::window_projector(a, v - half, v + half)
        })
        .collect::<Result<Vec<_>>>()?;
    let support = if windows.len() == 1 { windows[0].clone() } else { intersection(&windows) };
    let tail = linalg::range_basis(&(CMatrix::identity(dim, dim) - support.matrix()), T::lit(0.5));

    let z = params.window().max(nt * opts.gamma / T::lit(std::f64::consts::LN_2));
    let trim_opts = TrimOptions { bins: opts.bins };
    let t_rho = trim_core(rho_factors, params, &support, z, &trim_opts)?;
    let t_sigma = trim_core(sigma_factors, params, &support, z, &trim_opts)?;
    let l_exp = (t_rho.entropy_bits.min(t_sigma.entropy_bits) - T::lit(10.0) * z).floor().as_f64();
    let unit = if l_exp >= 1.0 { 1usize << (l_exp.min(40.0) as u32) } else { 1 };
    let r_rho = t_rho.round(unit)?;
    let r_sigma = t_sigma.round(unit)?;
    let l = unit * gcd(r_rho.multiplicity_gcd(unit), r_sigma.multiplicity_gcd(unit));
    let w_rho = r_rho.omega_dim(l);
    let w_sigma = r_sigma.omega_dim(l);
    let k = w_rho.max(w_sigma);

    let key = x[0];
    let a = r_rho.basis(&t_rho, l, Some(&tail), Some(key));
    let b = r_sigma.basis(&t_sigma, l, Some(&tail), Some(key));
    let g: Vec<CMatrix<T>> = x.iter().map(|xj| a.adjoint() * *xj * &a).collect();
    let h: Vec<CMatrix<T>> = x.iter().map(|xj| b.adjoint() * *xj * &b).collect();

    // Pi: kept block (l W_rho + w, k) -> (l W_sigma + k, w), identity on the tail,
    // the rest matched in order of the first charge
    let total = dim * k;
    let mut perm = vec![usize::MAX; total];
    let mut dst_used = vec![false; total];
    for li in 0..l {
        for w in 0..w_rho {
            for kk in 0..w_sigma {
                let src = (li * w_rho + w) * k + kk;
                let dst = (li * w_sigma + kk) * k + w;
                perm[src] = dst;
                dst_used[dst] = true;
            }
        }
    }
    let tail_start = dim - tail.ncols();
    for i in tail_start..dim {
        for kk in 0..k {
            perm[i * k + kk] = i * k + kk;
            dst_used[i * k + kk] = true;
        }
    }
    let by_charge = |m: &CMatrix<T>, idx: &mut Vec<usize>| {
        idx.sort_by(|&p, &q| {
            m[(p / k, p / k)]
                .re
                .partial_cmp(&m[(q / k, q / k)].re)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(p.cmp(&q))
        })
    };
    let mut free_src: Vec<usize> = (0..total).filter(|&s| perm[s] == usize::MAX).collect();
    let mut free_dst: Vec<usize> = (0..total).filter(|&s| !dst_used[s]).collect();
    by_charge(&g[0], &mut free_src);
    by_charge(&h[0], &mut free_dst);
    for (&s, &t) in free_src.iter().zip(&free_dst) {
        perm[s] = t;
    }

    let omega_prime = pad(r_sigma.omega_spectrum(l), k);
    let omega = pad(r_rho.omega_spectrum(l), k);
    let rho_full = &t_rho.rho_n;
    let sigma_full = &t_sigma.rho_n;
    let rr = a.adjoint() * rho_full * &a;
    let ss = b.adjoint() * sigma_full * &b;
    let trace_distance = if let Some(rd) = diagonal_of(&rr) {
        block_distance(&rd, &omega_prime, &ss, &omega, &perm, false)
    } else if let Some(sd) = diagonal_of(&ss) {
        block_distance(&sd, &omega, &rr, &omega_prime, &perm, true)
    } else {
        if total > params.dim_cap {
            return Err(Error::Capacity { dim: total as u128, cap: params.dim_cap });
        }
        let p = permutation_matrix::<T>(&perm);
        let op = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(k, omega_prime.iter().map(|&w| cplx(w))));
        let om = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(k, omega.iter().map(|&w| cplx(w))));
        let lhs = &p * rr.kronecker(&op) * p.adjoint();
        linalg::trace_norm_hermitian(&(lhs - ss.kronecker(&om)))
    };

    let commutator_norms: Vec<T> = (0..x.len())
        .into_par_iter()
        .map(|j| commutator_norm(&g[j], &h[j], &perm, k, opts, j as u64) / nt)
        .collect();

    let report = AetReport {
        n,
        trace_distance,
        commutator_norms,
        ancilla_dim: k,
        omega_prime,
        omega,
        permutation: false,
        tau_rank: l,
        rho_ancilla_rank: w_rho,
        sigma_ancilla_rank: w_sigma,
        z,
        entropy_gap,
        charge_gaps,
        rho_kept_weight: r_rho.kept_weight,
        sigma_kept_weight: r_sigma.kept_weight,
        discarded_bound: discard_bound(t_rho.window),
        window_weight_rho: T::one() - t_rho.epsilon,
        window_weight_sigma: T::one() - t_sigma.epsilon,
    };
    Ok((AetUnitary::Structured { a, b, ancilla_dim: k, perm }, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::Observable;

    fn sz() -> ChargeSet<f64> {
        ChargeSet::single(Observable::pauli_z())
    }

    #[test]
    fn identical_and_swapped_inputs() {
        let a = DensityState::<f64>::bloch([0.3, 0.1, 0.4]).unwrap();
        let b = DensityState::<f64>::diagonal(&[0.9, 0.1]).unwrap();
        let params = TypicalityParams::new(1.0, 2);
        let opts = AetOptions { gamma: 1.0, gamma_charge: 1.0, ..Default::default() };
        for sigma in [vec![a.clone(), b.clone()], vec![b.clone(), a.clone()]] {
            let (u, r) = aet_transform(&[a.clone(), b.clone()], &sigma, &ChargeSet::pauli_triple(), &params, &opts).unwrap();
            assert!(r.permutation);
            assert_eq!(u.ancilla_dim(), 1);
            assert!(r.trace_distance <= 1e-9);
            assert!(r.commutator_norms.iter().all(|&c| c <= 1e-9));
        }
    }

    #[test]
    fn mismatch_is_rejected() {
        let rho = DensityState::<f64>::diagonal(&[0.7, 0.3]).unwrap();
        let sigma = DensityState::<f64>::diagonal(&[0.6, 0.4]).unwrap();
        let params = TypicalityParams::new(1.0, 3);
        let res = aet_transform(&vec![rho; 3], &vec![sigma; 3], &sz(), &params, &AetOptions::default());
        assert!(matches!(res, Err(Error::NotEquivalent(_))));
    }

    #[test]
    fn structured_diagnostics_match_dense() {
        let diag = DensityState::<f64>::diagonal(&[0.7, 0.3]).unwrap();
        let tilted = DensityState::<f64>::bloch([0.1, 0.0, 0.4]).unwrap();
        // diagonal on either side exercises both block layouts
        check_against_dense(&diag, &tilted);
        check_against_dense(&tilted, &diag);
    }

    fn check_against_dense(rho: &DensityState<f64>, sigma: &DensityState<f64>) {
        let n = 3;
        let gamma = (operators::entropy(rho) - operators::entropy(sigma)).abs() * 1.001;
        let opts = AetOptions { gamma, eta: 0.5, ..Default::default() };
        let rf = vec![rho.clone(); n];
        let sf = vec![sigma.clone(); n];
        let params = TypicalityParams::new(1.0, n);
        let (u, r) = aet_transform(&rf, &sf, &sz(), &params, &opts).unwrap();
        assert!(!r.permutation);
        let k = r.ancilla_dim;
        let dense = u.to_dense(4096).unwrap();
        let m = dense.nrows();
        assert!(linalg::max_abs(&(dense.adjoint() * &dense - CMatrix::identity(m, m))) < 1e-10);

        let rho_n = DensityState::product(&rf.iter().collect::<Vec<_>>()).into_matrix();
        let sigma_n = DensityState::product(&sf.iter().collect::<Vec<_>>()).into_matrix();
        let diag = |w: &[f64]| CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(k, w.iter().map(|&x| cplx(x))));
        let lhs = &dense * rho_n.kronecker(&diag(&r.omega_prime)) * dense.adjoint();
        let td = linalg::trace_norm_hermitian(&(lhs - sigma_n.kronecker(&diag(&r.omega))));
        assert!((td - r.trace_distance).abs() < 1e-10, "{td} vs {}", r.trace_distance);
        let x = operators::total_charge(&Observable::<f64>::pauli_z(), n).unwrap().into_matrix();
        let xk = x.kronecker(&CMatrix::identity(k, k));
        let comm = linalg::op_norm(&(&dense * &xk - &xk * &dense)) / n as f64;
        assert!((comm - r.commutator_norms[0]).abs() < 1e-6, "{comm} vs {}", r.commutator_norms[0]);
        assert!(r.trace_distance > 0.0 && r.trace_distance < 0.5);
    }
}
