//! Dense complex linear algebra helpers built on nalgebra.

use nalgebra::{Complex, DMatrix, DVector};

use crate::scalar::Real;

pub type CMatrix<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

/// Modulus of a complex number.
#[inline]
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    (z.re * z.re + z.im * z.im).sqrt()
}

#[inline]
pub(crate) fn cplx<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues in ascending order.
#[derive(Clone, Debug)]
pub struct Eigh<T: Real> {
    pub values: Vec<T>,
    pub vectors: CMatrix<T>,
}

impl<T: Real> Eigh<T> {
    pub fn max(&self) -> T {
        *self.values.last().expect("non-empty spectrum")
    }

    pub fn min(&self) -> T {
        self.values[0]
    }

    /// Rebuilds `sum_k f(lambda_k) |v_k><v_k|`.
    pub fn map(&self, f: impl Fn(T) -> T) -> CMatrix<T> {
        let w: Vec<T> = self.values.iter().map(|&x| f(x)).collect();
        from_spectrum(&w, &self.vectors)
    }
}

pub fn eigh<T: Real>(m: &CMatrix<T>) -> Eigh<T> {
    let n = m.nrows();
    if is_diagonal(m) {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| m[(a, a)].re.partial_cmp(&m[(b, b)].re).unwrap_or(std::cmp::Ordering::Equal));
        let values = order.iter().map(|&i| m[(i, i)].re).collect();
        let vectors = CMatrix::from_fn(n, n, |r, c| cplx(if r == order[c] { T::one() } else { T::zero() }));
        return Eigh { values, vectors };
    }
    let eig = hermitize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Eigh { values, vectors }
}

pub(crate) fn is_diagonal<T: Real>(m: &CMatrix<T>) -> bool {
    let zero = Complex::new(T::zero(), T::zero());
    m.column_iter()
        .enumerate()
        .all(|(c, col)| col.iter().enumerate().all(|(r, &z)| r == c || z == zero))
}

/// `V diag(w) V^dagger` for the leading `w.len()` columns of `v`.
pub fn from_spectrum<T: Real>(w: &[T], v: &CMatrix<T>) -> CMatrix<T> {
    let k = w.len();
    let cols = v.columns(0, k);
    let mut scaled = cols.clone_owned();
    for (j, &wj) in w.iter().enumerate() {
        scaled.column_mut(j).scale_mut(wj);
    }
    scaled * cols.adjoint()
}

pub fn hermitize<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    (m + m.adjoint()) * cplx(T::lit(0.5))
}

/// Largest entrywise deviation `|M_ij - conj(M_ji)|`.
pub fn hermitian_deviation<T: Real>(m: &CMatrix<T>) -> T {
    let n = m.nrows();
    let mut worst = T::zero();
    for i in 0..n {
        for j in i..n {
            let d = cabs(m[(i, j)] - m[(j, i)].conj());
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// `Re Tr(rho a)` without forming the product.
pub fn expectation<T: Real>(rho: &CMatrix<T>, a: &CMatrix<T>) -> T {
    let n = rho.nrows();
    let mut acc = T::zero();
    for i in 0..n {
        for j in 0..n {
            acc += (rho[(i, j)] * a[(j, i)]).re;
        }
    }
    acc
}

pub fn trace_re<T: Real>(m: &CMatrix<T>) -> T {
    (0..m.nrows()).fold(T::zero(), |acc, i| acc + m[(i, i)].re)
}

/// Unordered eigenvalues of a Hermitian matrix, in real arithmetic when the
/// imaginary part vanishes.
pub fn eigenvalues_hermitian<T: Real>(m: &CMatrix<T>) -> Vec<T> {
    if is_diagonal(m) {
        return (0..m.nrows()).map(|i| m[(i, i)].re).collect();
    }
    let h = hermitize(m);
    if h.iter().all(|z| z.im == T::zero()) {
        h.map(|z| z.re).symmetric_eigenvalues().iter().copied().collect()
    } else {
        h.symmetric_eigenvalues().iter().copied().collect()
    }
}

/// Trace norm of a Hermitian matrix.
pub fn trace_norm_hermitian<T: Real>(m: &CMatrix<T>) -> T {
    eigenvalues_hermitian(m).iter().fold(T::zero(), |acc, x| acc + x.abs())
}

/// Largest singular value.
pub fn op_norm<T: Real>(m: &CMatrix<T>) -> T {
    let gram = m.adjoint() * m;
    eigenvalues_hermitian(&gram)
        .iter()
        .fold(T::zero(), |acc, &x| acc.max(x))
        .sqrt()
}

pub fn kron<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a.kronecker(b)
}

pub fn kron_all<T: Real>(factors: &[&CMatrix<T>]) -> CMatrix<T> {
    let mut it = factors.iter();
    let first = (*it.next().expect("at least one factor")).clone();
    it.fold(first, |acc, f| acc.kronecker(*f))
}

/// Largest entry modulus.
pub fn max_abs<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(cabs(*z)))
}

/// Numerically stable `ln sum exp(x_i)`.
pub fn logsumexp<T: Real>(xs: &[T]) -> T {
    let m = xs.iter().copied().fold(xs[0], |a, b| a.max(b));
    let s = xs.iter().fold(T::zero(), |acc, &x| acc + (x - m).exp());
    m + s.ln()
}

/// Checked `d^n`, saturating to `u128::MAX`.
pub(crate) fn checked_power(d: usize, n: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..n {
        acc = acc.saturating_mul(d as u128);
    }
    acc
}

/// Orthonormal basis (as columns) of the range of a Hermitian projector-like matrix,
/// keeping eigenvectors with eigenvalue above `threshold`.
pub(crate) fn range_basis<T: Real>(m: &CMatrix<T>, threshold: T) -> CMatrix<T> {
    let e = eigh(m);
    let keep: Vec<usize> = (0..e.values.len())
        .rev()
        .filter(|&i| e.values[i] > threshold)
        .collect();
    CMatrix::from_fn(m.nrows(), keep.len(), |r, c| e.vectors[(r, keep[c])])
}
