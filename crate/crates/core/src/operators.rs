//! Observables, density states, charge sets and projectors, plus the basic
//! operations on them: entropies, n-copy total charges, partial traces and
//! spectral windows.

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::linalg::{self, checked_power, cplx, eigh, CMatrix, CVector};
use crate::scalar::Real;

/// Default cap on `d^n` for n-copy constructions.
pub const DEFAULT_DIM_CAP: usize = 4096;

/// Eigenvalues below this threshold contribute nothing to `-lambda ln lambda`.
pub const ENTROPY_CLIP: f64 = 1e-14;

/// Relative slack used to close spectral windows against round-off.
pub const WINDOW_SLACK: f64 = 1e-10;

fn check_square<T: Real>(m: &CMatrix<T>) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

fn check_hermitian<T: Real>(m: &CMatrix<T>, tol: f64) -> Result<()> {
    let dev = linalg::hermitian_deviation(m).as_f64();
    let scale = 1.0f64.max(linalg::max_abs(m).as_f64());
    if !(dev <= tol * scale) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(())
}

/// A Hermitian observable (one conserved charge).
#[derive(Clone, Debug, PartialEq)]
pub struct Observable<T: Real> {
    m: CMatrix<T>,
}

impl<T: Real> Observable<T> {
    pub fn new(m: CMatrix<T>) -> Result<Self> {
        Self::with_tolerance(m, T::VALIDATION_TOL)
    }

    /// Accepts a matrix that is Hermitian up to `tol` (relative to its largest entry)
    /// and symmetrizes it.
    pub fn with_tolerance(m: CMatrix<T>, tol: f64) -> Result<Self> {
        check_square(&m)?;
        check_hermitian(&m, tol)?;
        Ok(Self {
            m: linalg::hermitize(&m),
        })
    }

    /// Wraps a matrix that is Hermitian by construction.
    pub(crate) fn from_hermitian_unchecked(m: CMatrix<T>) -> Self {
        Self {
            m: linalg::hermitize(&m),
        }
    }

    pub fn diagonal(values: &[T]) -> Self {
        let n = values.len();
        Self {
            m: CMatrix::from_fn(n, n, |i, j| if i == j { cplx(values[i]) } else { cplx(T::zero()) }),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: CMatrix::identity(dim, dim),
        }
    }

    pub fn pauli_x() -> Self {
        let (o, l) = (cplx(T::zero()), cplx(T::one()));
        Self {
            m: CMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        }
    }

    pub fn pauli_y() -> Self {
        let o = cplx(T::zero());
        let i = Complex::new(T::zero(), T::one());
        Self {
            m: CMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        }
    }

    pub fn pauli_z() -> Self {
        Self::diagonal(&[T::one(), -T::one()])
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.m
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<T> {
        eigh(&self.m).values
    }

    pub fn scaled(&self, c: T) -> Self {
        Self { m: &self.m * cplx(c) }
    }
}

/// A density matrix: Hermitian, positive semidefinite, unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityState<T: Real> {
    m: CMatrix<T>,
}

impl<T: Real> DensityState<T> {
    pub fn new(m: CMatrix<T>) -> Result<Self> {
        Self::with_tolerance(m, T::VALIDATION_TOL)
    }

    pub fn with_tolerance(m: CMatrix<T>, tol: f64) -> Result<Self> {
        check_square(&m)?;
        check_hermitian(&m, tol)?;
        let m = linalg::hermitize(&m);
        let tr = linalg::trace_re(&m).as_f64();
        if !((tr - 1.0).abs() <= tol.max(1e-300) * (m.nrows() as f64).max(1.0)) {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let lo = eigh(&m).min().as_f64();
        if lo < -tol * (m.nrows() as f64).max(1.0) {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {lo:e}"
            )));
        }
        Ok(Self { m })
    }

    /// Wraps a matrix that is a density matrix by construction.
    pub(crate) fn from_matrix_unchecked(m: CMatrix<T>) -> Self {
        Self {
            m: linalg::hermitize(&m),
        }
    }

    /// Normalizes a positive semidefinite matrix by its trace.
    pub fn from_positive(m: CMatrix<T>) -> Result<Self> {
        check_square(&m)?;
        let tr = linalg::trace_re(&m);
        if !(tr > T::zero()) {
            return Err(Error::InvalidState("zero trace".into()));
        }
        Ok(Self::from_matrix_unchecked(m * cplx(T::one() / tr)))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let w = T::one() / T::count(dim);
        Self {
            m: CMatrix::identity(dim, dim) * cplx(w),
        }
    }

    /// Diagonal state from a probability vector.
    pub fn diagonal(probs: &[T]) -> Result<Self> {
        let n = probs.len();
        Self::new(CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                cplx(probs[i])
            } else {
                cplx(T::zero())
            }
        }))
    }

    /// `|psi><psi|` after normalizing `psi`.
    pub fn pure(psi: &CVector<T>) -> Result<Self> {
        let norm = psi.norm();
        if !(norm > T::zero()) {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let v = psi / cplx(norm);
        Ok(Self {
            m: &v * v.adjoint(),
        })
    }

    /// Qubit state with the given Bloch vector.
    pub fn bloch(r: [T; 3]) -> Result<Self> {
        let half = T::lit(0.5);
        let id = CMatrix::<T>::identity(2, 2);
        let m = (id
            + Observable::<T>::pauli_x().m * cplx(r[0])
            + Observable::<T>::pauli_y().m * cplx(r[1])
            + Observable::<T>::pauli_z().m * cplx(r[2]))
            * cplx(half);
        Self::new(m)
    }

    /// Tensor product of the given states, in order.
    pub fn product(factors: &[&DensityState<T>]) -> Self {
        let mats: Vec<&CMatrix<T>> = factors.iter().map(|f| &f.m).collect();
        Self {
            m: linalg::kron_all(&mats),
        }
    }

    pub fn tensor(&self, other: &DensityState<T>) -> Self {
        Self {
            m: self.m.kronecker(&other.m),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.m
    }

    /// `Tr(rho A)`.
    pub fn expectation(&self, a: &Observable<T>) -> T {
        linalg::expectation(&self.m, &a.m)
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        eigh(&self.m).values
    }

    /// `U rho U^dagger`.
    pub fn conjugate(&self, u: &CMatrix<T>) -> Self {
        Self::from_matrix_unchecked(u * &self.m * u.adjoint())
    }
}

/// Ordered family of charges acting on a common space.
#[derive(Clone, Debug, PartialEq)]
pub struct ChargeSet<T: Real> {
    charges: Vec<Observable<T>>,
}

impl<T: Real> ChargeSet<T> {
    pub fn new(charges: Vec<Observable<T>>) -> Result<Self> {
        let first = charges
            .first()
            .ok_or_else(|| Error::arg("a charge set needs at least one charge"))?;
        let d = first.dim();
        if let Some((j, a)) = charges.iter().enumerate().find(|(_, a)| a.dim() != d) {
            return Err(Error::shape(format!(
                "charge {j} has dimension {} but charge 0 has {d}",
                a.dim()
            )));
        }
        Ok(Self { charges })
    }

    /// The qubit triple `(sigma_x, sigma_y, sigma_z)`.
    pub fn pauli_triple() -> Self {
        Self {
            charges: vec![
                Observable::pauli_x(),
                Observable::pauli_y(),
                Observable::pauli_z(),
            ],
        }
    }

    pub fn single(a: Observable<T>) -> Self {
        Self { charges: vec![a] }
    }

    pub fn len(&self) -> usize {
        self.charges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.charges.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.charges[0].dim()
    }

    pub fn charges(&self) -> &[Observable<T>] {
        &self.charges
    }

    pub fn get(&self, j: usize) -> &Observable<T> {
        &self.charges[j]
    }

    /// Charge values `Tr(rho A_j)`.
    pub fn values(&self, rho: &DensityState<T>) -> Vec<T> {
        self.charges.iter().map(|a| rho.expectation(a)).collect()
    }

    /// `sum_j w_j A_j`.
    pub fn weighted_sum(&self, w: &[T]) -> CMatrix<T> {
        let d = self.dim();
        let mut acc = CMatrix::zeros(d, d);
        for (a, &wj) in self.charges.iter().zip(w) {
            acc += &a.m * cplx(wj);
        }
        acc
    }

    /// Total charges on `n` copies.
    pub fn total(&self, n: usize, cap: usize) -> Result<Self> {
        let charges = self
            .charges
            .iter()
            .map(|a| total_charge_capped(a, n, cap))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { charges })
    }

    /// Restriction `Q^dagger A_j Q` to the span of the orthonormal columns of `q`.
    pub fn compress(&self, q: &CMatrix<T>) -> Self {
        let charges = self
            .charges
            .iter()
            .map(|a| Observable::from_hermitian_unchecked(q.adjoint() * &a.m * q))
            .collect();
        Self { charges }
    }

    pub(crate) fn check_len(&self, len: usize, what: &str) -> Result<()> {
        if len != self.len() {
            return Err(Error::shape(format!(
                "{what} has length {len} but there are {} charges",
                self.len()
            )));
        }
        Ok(())
    }
}

/// Orthogonal projector.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector<T: Real> {
    m: CMatrix<T>,
    rank: usize,
}

impl<T: Real> Projector<T> {
    /// Validates `P^2 = P = P^dagger` within `1e-10` (scaled for `f32`).
    pub fn new(m: CMatrix<T>) -> Result<Self> {
        check_square(&m)?;
        let tol = 1e-10f64.max(T::VALIDATION_TOL * 100.0);
        check_hermitian(&m, tol)?;
        let idem = linalg::max_abs(&(&m * &m - &m)).as_f64();
        if idem > tol {
            return Err(Error::arg(format!("matrix is not idempotent (deviation {idem:e})")));
        }
        let tr = linalg::trace_re(&m).as_f64();
        Ok(Self {
            m: linalg::hermitize(&m),
            rank: tr.round().max(0.0) as usize,
        })
    }

    /// Projector onto the span of orthonormal columns.
    pub fn from_orthonormal_columns(q: &CMatrix<T>) -> Self {
        Self {
            m: q * q.adjoint(),
            rank: q.ncols(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: CMatrix::identity(dim, dim),
            rank: dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.m
    }

    /// Orthonormal basis of the range, as columns.
    pub fn range_basis(&self) -> CMatrix<T> {
        linalg::range_basis(&self.m, T::lit(0.5))
    }

    /// `Tr(rho P)`.
    pub fn weight(&self, rho: &DensityState<T>) -> T {
        linalg::expectation(rho.matrix(), &self.m)
    }
}

/// Von Neumann entropy in nats.
pub fn entropy<T: Real>(rho: &DensityState<T>) -> T {
    spectrum_entropy(&rho.eigenvalues())
}

/// `-sum p ln p` over a spectrum, ignoring entries below the clipping threshold.
pub fn spectrum_entropy<T: Real>(spectrum: &[T]) -> T {
    let clip = T::lit(ENTROPY_CLIP);
    spectrum
        .iter()
        .filter(|&&p| p > clip)
        .fold(T::zero(), |acc, &p| acc - p * p.ln())
}

/// `A^(n) = sum_i 1 x .. x A x .. x 1` with the default dimension cap.
pub fn total_charge<T: Real>(a: &Observable<T>, n: usize) -> Result<Observable<T>> {
    total_charge_capped(a, n, DEFAULT_DIM_CAP)
}

pub fn total_charge_capped<T: Real>(a: &Observable<T>, n: usize, cap: usize) -> Result<Observable<T>> {
    if n == 0 {
        return Err(Error::arg("number of copies must be at least 1"));
    }
    let d = a.dim();
    let big = checked_power(d, n);
    if big > cap as u128 {
        return Err(Error::Capacity { dim: big, cap });
    }
    let dim = big as usize;
    let mut out = CMatrix::zeros(dim, dim);
    // Only entries whose row and column digits differ in at most one slot are nonzero.
    let mut stride = 1usize;
    for _slot in 0..n {
        for x in 0..dim {
            let digit = (x / stride) % d;
            let base = x - digit * stride;
            for v in 0..d {
                let y = base + v * stride;
                out[(x, y)] += a.m[(digit, v)];
            }
        }
        stride *= d;
    }
    Ok(Observable { m: out })
}

/// Partial trace keeping the listed factors (in ascending order).
pub fn reduce_state<T: Real>(
    rho: &DensityState<T>,
    factor_dims: &[usize],
    keep: &[usize],
) -> Result<DensityState<T>> {
    let total: usize = factor_dims.iter().product();
    if total != rho.dim() || factor_dims.is_empty() {
        return Err(Error::shape(format!(
            "factor dimensions {factor_dims:?} do not multiply to {}",
            rho.dim()
        )));
    }
    let mut keep_sorted: Vec<usize> = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.is_empty() || *keep_sorted.last().unwrap() >= factor_dims.len() {
        return Err(Error::shape(format!(
            "keep set {keep:?} is not a nonempty subset of 0..{}",
            factor_dims.len()
        )));
    }
    let traced: Vec<usize> = (0..factor_dims.len())
        .filter(|i| !keep_sorted.contains(i))
        .collect();
    // Row-major strides: the last factor varies fastest.
    let mut strides = vec![1usize; factor_dims.len()];
    for i in (0..factor_dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * factor_dims[i + 1];
    }
    let offsets = |slots: &[usize]| -> Vec<usize> {
        let count: usize = slots.iter().map(|&s| factor_dims[s]).product();
        (0..count)
            .map(|mut idx| {
                let mut off = 0;
                for &s in slots.iter().rev() {
                    off += (idx % factor_dims[s]) * strides[s];
                    idx /= factor_dims[s];
                }
                off
            })
            .collect()
    };
    let kept = offsets(&keep_sorted);
    let tr = offsets(&traced);
    let dk = kept.len();
    let m = rho.matrix();
    let out = CMatrix::from_fn(dk, dk, |i, j| {
        tr.iter()
            .fold(Complex::new(T::zero(), T::zero()), |acc, &t| {
                acc + m[(kept[i] + t, kept[j] + t)]
            })
    });
    Ok(DensityState::from_matrix_unchecked(out))
}

/// `lambda_max(A) - lambda_min(A)`.
pub fn spectral_diameter<T: Real>(a: &Observable<T>) -> T {
    let ev = a.eigenvalues();
    (ev[ev.len() - 1] - ev[0]).max(T::zero())
}

/// Projector onto eigenvectors of `a` with eigenvalue in the closed window `[lo, hi]`.
pub fn window_projector<T: Real>(a: &Observable<T>, lo: T, hi: T) -> Result<Projector<T>> {
    if !(lo <= hi) {
        return Err(Error::arg("window requires lo <= hi"));
    }
    let e = eigh(&a.m);
    let slack = T::lit(WINDOW_SLACK) * T::one().max(e.max().abs()).max(e.min().abs());
    let keep: Vec<usize> = (0..e.values.len())
        .filter(|&i| e.values[i] >= lo - slack && e.values[i] <= hi + slack)
        .collect();
    if linalg::is_diagonal(&a.m) {
        // eigenvectors of a diagonal matrix are permuted basis vectors
        let mut m = CMatrix::zeros(a.dim(), a.dim());
        for &c in &keep {
            let i = e.vectors.column(c).iter().position(|z| z.re == T::one()).unwrap_or(c);
            m[(i, i)] = cplx(T::one());
        }
        return Ok(Projector { m, rank: keep.len() });
    }
    let q = CMatrix::from_fn(a.dim(), keep.len(), |r, c| e.vectors[(r, keep[c])]);
    Ok(Projector::from_orthonormal_columns(&q))
}
