//! Trimming a product state to a flat spectrum: restrict to a high-probability
//! subspace, floor eigenvalues onto a grid of bins, drop sparse bins, and round
//! bin populations down to a common multiple so that the result factorizes as a
//! maximally mixed state times a small ancilla state.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::typical::{beta_l, TypicalSet, TypicalityParams};
use super::{exp2, product_dim};
use crate::error::{Error, Result};
use crate::linalg::{self, cplx, eigh, CMatrix, CVector};
use crate::operators::{DensityState, Projector};
use crate::scalar::Real;

#[derive(Clone, Debug, Default)]
pub struct TrimOptions {
    /// Replaces the default bin count `2^floor(5 alpha sqrt(n))`.
    pub bins: Option<u64>,
}

/// One populated bin after trimming.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BinInfo<T> {
    pub index: u64,
    /// Floor value `p_k` every kept eigenvalue of the bin is set to.
    pub value: T,
    /// Number of eigenvalues that fell into the bin.
    pub population: usize,
    pub kept: usize,
}

#[derive(Clone, Debug)]
pub struct TrimResult<T: Real> {
    /// Projector onto the trimmed subspace `P~`.
    pub projector: Projector<T>,
    /// `U` with `U rho~ U^dagger = (tau (x) omega) (+) 0`, the product occupying the
    /// first `tau_rank * omega.dim()` basis vectors (tau index slowest).
    pub flatten_unitary: CMatrix<T>,
    pub tau_rank: usize,
    /// `2^floor(sum S - 10 z)` clamped to at least 1, before the common factor of
    /// the bin multiplicities is absorbed into `tau_rank`.
    pub l_nominal: usize,
    pub omega: DensityState<T>,
    pub trimmed: DensityState<T>,
    /// Trace of the trimmed unnormalized state.
    pub kept_weight: T,
    /// Weight removed by the flooring, sparse-bin and rounding steps.
    pub discarded: [T; 3],
    pub discarded_bound: T,
    /// `1 - Tr(rho^n P)` for the supplied support projector.
    pub epsilon: T,
    pub trace_distance_to_input: T,
    pub distance_bound: T,
    pub bins: u64,
    pub bins_overridden: bool,
    pub bin_table: Vec<BinInfo<T>>,
    /// `|U^dagger (tau (x) omega) U - rho~|` entrywise maximum.
    pub reconstruction_error: T,
    pub unitarity_error: T,
}

impl<T: Real> TrimResult<T> {
    pub fn discarded_weight(&self) -> T {
        self.discarded.iter().fold(T::zero(), |a, &b| a + b)
    }

    /// Every kept bin holds a multiple of `tau_rank` eigenvalues.
    pub fn is_flat(&self) -> bool {
        self.bin_table.iter().all(|b| b.kept % self.tau_rank == 0)
    }
}

/// Eigenvectors of one dense bin, largest eigenvalue first.
#[derive(Clone, Debug)]
pub(crate) struct DenseBin<T: Real> {
    pub index: u64,
    pub value: T,
    pub vectors: Vec<CVector<T>>,
}

/// Output of the flooring and sparse-bin steps; rounding is applied by
/// [`Trimmed::round`] so that two states can share one rounding unit.
#[derive(Clone, Debug)]
pub(crate) struct Trimmed<T: Real> {
    pub dim: usize,
    pub rho_n: CMatrix<T>,
    pub dense: Vec<DenseBin<T>>,
    pub l_nominal: usize,
    pub discarded_ab: [T; 2],
    pub sparse_table: Vec<BinInfo<T>>,
    pub epsilon: T,
    pub window: T,
    pub entropy_bits: T,
    pub beta_l: T,
    pub bins: u64,
}

/// Bins after rounding their populations down to multiples of `unit`.
#[derive(Clone, Debug)]
pub(crate) struct Rounded<T: Real> {
    /// `(floor value, kept vectors)` per bin with something left.
    pub kept: Vec<(T, Vec<CVector<T>>)>,
    pub kept_weight: T,
    pub discarded: [T; 3],
    pub bin_table: Vec<BinInfo<T>>,
}

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl<T: Real> Trimmed<T> {
    pub fn round(&self, unit: usize) -> Result<Rounded<T>> {
        let mut kept = Vec::new();
        let mut kept_weight = T::zero();
        let mut lost = T::zero();
        let mut bin_table = self.sparse_table.clone();
        for b in &self.dense {
            let pop = b.vectors.len();
            let keep = (pop / unit) * unit;
            kept_weight += b.value * T::count(keep);
            lost += b.value * T::count(pop - keep);
            bin_table.push(BinInfo {
                index: b.index,
                value: b.value,
                population: pop,
                kept: keep,
            });
            if keep > 0 {
                kept.push((b.value, b.vectors[..keep].to_vec()));
            }
        }
        if kept.is_empty() {
            return Err(Error::DegenerateTrim);
        }
        bin_table.sort_by_key(|b| b.index);
        Ok(Rounded {
            kept,
            kept_weight,
            discarded: [self.discarded_ab[0], self.discarded_ab[1], lost],
            bin_table,
        })
    }

    /// Basis of the non-kept part of the space: `tail` last, the rest ordered by
    /// `key` (or by `rho^n` when no key is given).
    fn complete(&self, a: &mut CMatrix<T>, used: usize, tail: Option<&CMatrix<T>>, key: Option<&CMatrix<T>>) {
        let d = self.dim;
        let mut occupied = CMatrix::<T>::zeros(d, d);
        for c in 0..used {
            let col = a.column(c);
            occupied += col * col.adjoint();
        }
        let tail_cols = tail.map_or(0, |t| t.ncols());
        if let Some(t) = tail {
            occupied += t * t.adjoint();
            for c in 0..tail_cols {
                a.set_column(d - tail_cols + c, &t.column(c));
            }
        }
        let rest = CMatrix::identity(d, d) - occupied;
        // shifted so that the whole range of `rest` sits above 1/2
        let shifted = match key {
            Some(k) => k + CMatrix::identity(d, d) * cplx(linalg::op_norm(k) + T::one()),
            None => &self.rho_n + CMatrix::identity(d, d),
        };
        let middle = linalg::range_basis(&(&rest * shifted * &rest), T::lit(0.5));
        let want = d - used - tail_cols;
        debug_assert_eq!(middle.ncols(), want);
        for c in 0..want.min(middle.ncols()) {
            a.set_column(used + c, &middle.column(c));
        }
    }
}

impl<T: Real> Rounded<T> {
    /// Largest rank of `tau` compatible with every kept bin, given the unit used
    /// for rounding.
    pub fn multiplicity_gcd(&self, unit: usize) -> usize {
        self.kept.iter().fold(0, |g, (_, v)| gcd(g, v.len() / unit))
    }

    /// Ancilla dimension when `tau` has rank `l`.
    pub fn omega_dim(&self, l: usize) -> usize {
        self.kept.iter().map(|(_, v)| v.len() / l).sum()
    }

    /// Normalized ancilla spectrum for `tau` of rank `l`.
    pub fn omega_spectrum(&self, l: usize) -> Vec<T> {
        let lt = T::count(l);
        self.kept
            .iter()
            .flat_map(|(p, v)| std::iter::repeat_n(*p * lt / self.kept_weight, v.len() / l))
            .collect()
    }

    /// Flattening basis as columns. A bin with `m` groups puts its `j`-th vector
    /// (ordered by `key` when given) at copy `j / m` of group `j % m`, and copy
    /// `l` of ancilla level `w` sits at column `l * W + w`. The remaining columns
    /// span the complement, with `tail` occupying the last positions.
    pub fn basis(&self, t: &Trimmed<T>, l: usize, tail: Option<&CMatrix<T>>, key: Option<&CMatrix<T>>) -> CMatrix<T> {
        let d = t.dim;
        let w_dim = self.omega_dim(l);
        let mut a = CMatrix::zeros(d, d);
        let mut w0 = 0;
        for (_, vs) in &self.kept {
            let m = vs.len() / l;
            let mut order: Vec<usize> = (0..vs.len()).collect();
            if let Some(k) = key {
                let q: Vec<T> = vs.iter().map(|v| (v.adjoint() * k * v)[(0, 0)].re).collect();
                order.sort_by(|&x, &y| q[x].partial_cmp(&q[y]).unwrap_or(std::cmp::Ordering::Equal));
            }
            for (j, &i) in order.iter().enumerate() {
                a.set_column((j / m) * w_dim + w0 + j % m, &vs[i]);
            }
            w0 += m;
        }
        t.complete(&mut a, l * w_dim, tail, key);
        a
    }

    /// `(tau (x) omega) (+) 0` on the full space.
    pub fn flat_state(&self, dim: usize, l: usize) -> CMatrix<T> {
        let omega = self.omega_spectrum(l);
        let w_dim = omega.len();
        let lt = T::one() / T::count(l);
        let mut m = CMatrix::zeros(dim, dim);
        for li in 0..l {
            for (w, &o) in omega.iter().enumerate() {
                let i = li * w_dim + w;
                m[(i, i)] = cplx(o * lt);
            }
        }
        m
    }
}

/// Runs the flooring and sparse-bin steps with rounding exponent `z` (bits).
pub(crate) fn trim_core<T: Real>(
    factors: &[DensityState<T>],
    params: &TypicalityParams<T>,
    support: &Projector<T>,
    z: T,
    opts: &TrimOptions,
) -> Result<Trimmed<T>> {
    let dim = product_dim(factors, params.dim_cap)?;
    if support.dim() != dim {
        return Err(Error::shape(format!(
            "support acts on {} but the product space has dimension {dim}",
            support.dim()
        )));
    }
    let typ = TypicalSet::new(factors, params)?;
    let window = typ.window;
    let s_bits = typ.entropy_bits;
    let refs: Vec<&DensityState<T>> = factors.iter().collect();
    let rho_n = DensityState::product(&refs).into_matrix();
    let pi = typ.projector();
    let p = support.matrix();
    let epsilon = T::one() - linalg::expectation(&rho_n, p);

    // P~: eigenvectors of P Pi P above 2^(-alpha sqrt n)
    let ppp = p * pi.matrix() * p;
    let p_tilde = linalg::range_basis(&ppp, exp2(-window));
    let pirp = pi.matrix() * &rho_n * pi.matrix();
    let ey = eigh(&(p_tilde.adjoint() * &pirp * &p_tilde));
    let vectors = &p_tilde * &ey.vectors;

    let p_min = exp2(-s_bits - window - window);
    let p_max = exp2(-s_bits + window);
    let bins = match opts.bins {
        Some(b) => b.max(1),
        // capped so every bin index stays exact in f64
        None => 1u64 << ((T::lit(5.0) * window).floor().as_f64().clamp(0.0, 52.0) as u32),
    };
    let dp = (p_max - p_min) / T::lit(bins as f64);

    // (a) floor onto the bin grid; eigenvalues below the grid are dropped
    let mut by_bin: BTreeMap<u64, Vec<(T, usize)>> = BTreeMap::new();
    let mut lost_a = T::zero();
    for (i, &lam) in ey.values.iter().enumerate() {
        let lam = lam.max(T::zero());
        if lam < p_min {
            lost_a += lam;
            continue;
        }
        let k = ((lam - p_min) / dp).floor().as_f64().min((bins - 1) as f64) as u64;
        lost_a += lam - (p_min + dp * T::lit(k as f64));
        by_bin.entry(k).or_default().push((lam, i));
    }

    // (b) drop sparse bins
    let sparse = exp2(s_bits - T::lit(10.0) * window);
    let mut lost_b = T::zero();
    let mut dense = Vec::new();
    let mut sparse_table = Vec::new();
    for (k, mut members) in by_bin.into_iter().rev() {
        let value = p_min + dp * T::lit(k as f64);
        let pop = members.len();
        if T::count(pop) < sparse {
            lost_b += value * T::count(pop);
            sparse_table.push(BinInfo { index: k, value, population: pop, kept: 0 });
            continue;
        }
        members.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
        let vectors = members.iter().map(|&(_, i)| vectors.column(i).clone_owned()).collect();
        dense.push(DenseBin { index: k, value, vectors });
    }

    let l_exp = (s_bits - T::lit(10.0) * z).floor().as_f64();
    let l_nominal = if l_exp >= 1.0 { 1usize << (l_exp.min(40.0) as u32) } else { 1 };
    Ok(Trimmed {
        dim,
        rho_n,
        dense,
        l_nominal,
        discarded_ab: [lost_a, lost_b],
        sparse_table,
        epsilon,
        window,
        entropy_bits: s_bits,
        beta_l: beta_l::<T>(factors[0].dim()),
        bins,
    })
}

/// Bound on `|rho~ - rho^n|_1` in terms of the support's failure probability.
pub(crate) fn distance_bound<T: Real>(epsilon: T, beta: T, alpha: T, window: T) -> T {
    let two = T::lit(2.0);
    let e = epsilon.max(T::zero());
    let inner = two * e.sqrt() + two * beta.sqrt() / alpha + beta / (alpha * alpha);
    inner + exp2(-window + T::one()) + two * (inner + exp2(-window)).sqrt()
}

/// Bound on the total weight removed by the three trimming steps.
pub(crate) fn discard_bound<T: Real>(window: T) -> T {
    let two = T::lit(2.0);
    exp2(-two * window + T::one()) + two * exp2(-T::lit(4.0) * window)
}

/// Trims `rho^n` inside `support` and returns the flattening unitary with diagnostics.
pub fn trim_state<T: Real>(
    factors: &[DensityState<T>],
    params: &TypicalityParams<T>,
    support: &Projector<T>,
    opts: &TrimOptions,
) -> Result<TrimResult<T>> {
    let t = trim_core(factors, params, support, params.window(), opts)?;
    let r = t.round(t.l_nominal)?;
    let l = t.l_nominal * r.multiplicity_gcd(t.l_nominal);
    let a = r.basis(&t, l, None, None);
    let u = a.adjoint();
    let d = t.dim;
    let flat = r.flat_state(d, l);
    let trimmed = DensityState::from_matrix_unchecked(&a * &flat * &u);
    let unitarity_error = linalg::max_abs(&(&u * &a - CMatrix::identity(d, d)));
    let reconstruction_error = linalg::max_abs(&(&u * trimmed.matrix() * &a - &flat));
    let trace_distance_to_input = linalg::trace_norm_hermitian(&(trimmed.matrix() - &t.rho_n));
    let omega_diag = CVector::from_iterator(r.omega_dim(l), r.omega_spectrum(l).into_iter().map(cplx));
    let kept_vectors: Vec<CVector<T>> = r.kept.iter().flat_map(|(_, v)| v.iter().cloned()).collect();
    Ok(TrimResult {
        projector: Projector::from_orthonormal_columns(&CMatrix::from_columns(&kept_vectors)),
        flatten_unitary: u,
        tau_rank: l,
        l_nominal: t.l_nominal,
        omega: DensityState::from_matrix_unchecked(CMatrix::from_diagonal(&omega_diag)),
        trimmed,
        kept_weight: r.kept_weight,
        discarded: r.discarded,
        discarded_bound: discard_bound(t.window),
        epsilon: t.epsilon,
        trace_distance_to_input,
        distance_bound: distance_bound(t.epsilon, t.beta_l, params.alpha, t.window),
        bins: t.bins,
        bins_overridden: opts.bins.is_some(),
        bin_table: r.bin_table,
        reconstruction_error,
        unitarity_error,
    })
}
