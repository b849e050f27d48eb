//! Geometry of the phase diagram: which charge vectors are achievable, the
//! maximum-entropy surface above them, and the conditional-entropy extension.

use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{self, GgsSolution, SolverOptions};
use crate::linalg::{self, cplx, eigh, CMatrix};
use crate::operators::{self, ChargeSet, DensityState, Observable};
use crate::scalar::Real;

/// A point `(a_1, ..., a_c, s)` of the phase diagram (or of its per-copy rate version).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint<T> {
    pub a: Vec<T>,
    pub s: T,
}

impl<T: Real> PhasePoint<T> {
    pub fn new(a: Vec<T>, s: T) -> Self {
        Self { a, s }
    }

    pub fn is_finite(&self) -> bool {
        self.s.is_finite() && self.a.iter().all(|x| x.is_finite())
    }
}

#[derive(Clone, Debug)]
pub struct MembershipReport<T: Real> {
    pub inside: bool,
    /// Set when `|margin|` is within tolerance: the point lies on the boundary
    /// and is counted as inside.
    pub on_boundary: bool,
    /// Signed slack; negative means outside.
    pub margin: T,
    /// Gibbs state at the charge values, when they are strictly interior.
    pub witness: Option<GgsSolution<T>>,
}

#[derive(Clone, Debug)]
pub struct DiagramOptions<T: Real> {
    /// Number of sampled support directions when there are three or more charges.
    pub n_dirs: usize,
    pub seed: u64,
    /// Absolute tolerance on membership margins.
    pub tol: T,
    /// How many of the best sampled directions are refined by local descent.
    pub refine_starts: usize,
    pub solver: SolverOptions<T>,
}

impl<T: Real> Default for DiagramOptions<T> {
    fn default() -> Self {
        Self {
            n_dirs: 2048,
            seed: 0,
            tol: T::lit(1e-8),
            refine_starts: 4,
            solver: SolverOptions::default(),
        }
    }
}

/// Support function `h(u) = lambda_max(sum_j u_j A_j)` of the zero-entropy charge
/// set, tabulated on a fixed set of unit directions.
///
/// The achievable set is convex and compact, so `a` is achievable iff
/// `<u, a> <= h(u)` for every unit `u`. Building the table once lets repeated
/// membership queries (bisection along a ray, grid sweeps) share the eigenvalue work.
#[derive(Clone, Debug)]
pub struct SupportOracle<T: Real> {
    charges: ChargeSet<T>,
    dirs: Vec<Vec<T>>,
    support: Vec<T>,
    refine_starts: usize,
}

impl<T: Real> SupportOracle<T> {
    pub fn new(charges: &ChargeSet<T>, opts: &DiagramOptions<T>) -> Self {
        let dirs = directions::<T>(charges.len(), opts.n_dirs.max(8), opts.seed);
        let support = dirs
            .par_iter()
            .map(|u| eigh(&charges.weighted_sum(u)).max())
            .collect();
        Self {
            charges: charges.clone(),
            dirs,
            support,
            refine_starts: opts.refine_starts,
        }
    }

    pub fn charges(&self) -> &ChargeSet<T> {
        &self.charges
    }

    /// `h(u)` for an arbitrary direction.
    pub fn support(&self, u: &[T]) -> T {
        eigh(&self.charges.weighted_sum(u)).max()
    }

    /// Minimum over unit directions of `h(u) - <u, a>`, with the minimizing direction.
    pub fn margin(&self, a: &[T]) -> (T, Vec<T>) {
        let mut slack: Vec<(T, usize)> = self
            .dirs
            .iter()
            .zip(&self.support)
            .enumerate()
            .map(|(k, (u, &h))| (h - dot(u, a), k))
            .collect();
        slack.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
        // A single charge has only the two directions, both exact.
        if self.charges.len() == 1 {
            return (slack[0].0, self.dirs[slack[0].1].clone());
        }
        slack
            .iter()
            .take(self.refine_starts.max(1))
            .map(|&(m, k)| self.refine(a, self.dirs[k].clone(), m))
            .fold(None, |best: Option<(T, Vec<T>)>, cand| match best {
                Some(b) if b.0 <= cand.0 => Some(b),
                _ => Some(cand),
            })
            .expect("at least one start")
    }

    /// Value and Euclidean gradient of `phi(u) = h(u) - <u, a>`.
    fn eval(&self, a: &[T], u: &[T]) -> (T, Vec<T>) {
        let e = eigh(&self.charges.weighted_sum(u));
        let n = e.values.len();
        let v = e.vectors.column(n - 1);
        let grad = self
            .charges
            .charges()
            .iter()
            .zip(a)
            .map(|(op, &aj)| v.dotc(&(op.matrix() * v)).re - aj)
            .collect();
        (e.max() - dot(u, a), grad)
    }

    /// Normalized projected descent on the unit sphere with step backtracking.
    fn refine(&self, a: &[T], mut u: Vec<T>, start: T) -> (T, Vec<T>) {
        let (mut phi, mut g) = self.eval(a, &u);
        if phi > start {
            phi = start;
        }
        let mut theta = T::lit(0.25);
        let floor = T::lit(1e-13);
        for _ in 0..400 {
            let gu = dot(&g, &u);
            let gt: Vec<T> = g.iter().zip(&u).map(|(&gi, &ui)| gi - gu * ui).collect();
            let gn = norm(&gt);
            if gn <= T::lit(1e-15) {
                break;
            }
            let mut moved = false;
            while theta > floor {
                let mut trial: Vec<T> = u
                    .iter()
                    .zip(&gt)
                    .map(|(&ui, &gi)| ui - theta * gi / gn)
                    .collect();
                let tn = norm(&trial);
                trial.iter_mut().for_each(|x| *x /= tn);
                let (tp, tg) = self.eval(a, &trial);
                if tp < phi {
                    u = trial;
                    phi = tp;
                    g = tg;
                    theta = (theta * T::lit(1.5)).min(T::one());
                    moved = true;
                    break;
                }
                theta *= T::lit(0.5);
            }
            if !moved {
                break;
            }
        }
        (phi, u)
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

fn directions<T: Real>(c: usize, n_dirs: usize, seed: u64) -> Vec<Vec<T>> {
    match c {
        1 => vec![vec![T::one()], vec![-T::one()]],
        2 => (0..n_dirs)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / n_dirs as f64;
                vec![T::lit(t.cos()), T::lit(t.sin())]
            })
            .collect(),
        _ => {
            let mut out = Vec::with_capacity(n_dirs + 2 * c);
            for j in 0..c {
                for sign in [1.0, -1.0] {
                    let mut e = vec![T::zero(); c];
                    e[j] = T::lit(sign);
                    out.push(e);
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            while out.len() < n_dirs + 2 * c {
                let g: Vec<f64> = (0..c).map(|_| rng.sample(StandardNormal)).collect();
                let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n > 1e-12 {
                    out.push(g.iter().map(|x| T::lit(x / n)).collect());
                }
            }
            out
        }
    }
}

fn check_point<T: Real>(charges: &ChargeSet<T>, a: &[T]) -> Result<()> {
    charges.check_len(a.len(), "charge vector")?;
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::arg("charge values must be finite"));
    }
    Ok(())
}

fn report_from_margin<T: Real>(margin: T, tol: T, witness: Option<GgsSolution<T>>) -> MembershipReport<T> {
    MembershipReport {
        inside: margin >= -tol,
        on_boundary: margin.abs() <= tol,
        margin,
        witness,
    }
}

/// Tests whether `a` is a vector of charge values of some state.
pub fn achievable<T: Real>(charges: &ChargeSet<T>, a: &[T], opts: &DiagramOptions<T>) -> Result<MembershipReport<T>> {
    check_point(charges, a)?;
    let oracle = SupportOracle::new(charges, opts);
    achievable_with(&oracle, a, opts)
}

/// [`achievable`] against a prebuilt oracle.
pub fn achievable_with<T: Real>(
    oracle: &SupportOracle<T>,
    a: &[T],
    opts: &DiagramOptions<T>,
) -> Result<MembershipReport<T>> {
    check_point(oracle.charges(), a)?;
    let (margin, _) = oracle.margin(a);
    let witness = if margin > opts.tol {
        gibbs::solve_beta(oracle.charges(), a, &opts.solver).ok()
    } else {
        None
    };
    Ok(report_from_margin(margin, opts.tol, witness))
}

/// `S(tau(a))` for a strictly interior charge vector.
pub fn max_entropy_at<T: Real>(charges: &ChargeSet<T>, a: &[T], opts: &SolverOptions<T>) -> Result<T> {
    Ok(gibbs::solve_beta(charges, a, opts)?.entropy)
}

/// Largest entropy of any state with charge values `a`, defined on the closed
/// achievable set.
///
/// Interior points go through the Gibbs solver. On the boundary the supporting
/// direction singles out a face: every state with these charge values lives in
/// the top eigenspace of `sum_j u_j A_j`, so the charges are compressed to that
/// eigenspace and the problem is solved there.
pub fn entropy_ceiling<T: Real>(charges: &ChargeSet<T>, a: &[T], opts: &DiagramOptions<T>) -> Result<T> {
    check_point(charges, a)?;
    face_entropy(charges, a, opts, 0)
}

fn face_entropy<T: Real>(charges: &ChargeSet<T>, a: &[T], opts: &DiagramOptions<T>, depth: usize) -> Result<T> {
    let k = charges.dim();
    if k == 1 {
        return Ok(T::zero());
    }
    if depth > 64 {
        return Err(Error::NotConverged {
            iterations: depth,
            residual: f64::NAN,
        });
    }
    let Some((reduced, b)) = reduce_flat(charges, a, opts.tol)? else {
        // Charges are multiples of the identity here: every state qualifies.
        return Ok(T::count(k).ln());
    };
    let oracle = SupportOracle::new(&reduced, opts);
    let (margin, u) = oracle.margin(&b);
    if margin < -opts.tol {
        return Err(Error::Infeasible {
            reason: "charge vector lies outside the achievable set".into(),
            residual: (-margin).as_f64(),
        });
    }
    if margin > opts.tol {
        return Ok(gibbs::solve_beta(&reduced, &b, &opts.solver)?.entropy);
    }
    let e = eigh(&reduced.weighted_sum(&u));
    let spread = (e.max() - e.min()).max(T::one());
    let cut = e.max() - T::lit(1e-8) * spread;
    let top: Vec<usize> = (0..k).filter(|&i| e.values[i] >= cut).collect();
    if top.len() == 1 {
        return Ok(T::zero());
    }
    if top.len() == k {
        return Ok(gibbs::solve_beta(&reduced, &b, &opts.solver)?.entropy);
    }
    let q = CMatrix::from_fn(k, top.len(), |r, c| e.vectors[(r, top[c])]);
    face_entropy(&reduced.compress(&q), &b, opts, depth + 1)
}

/// Removes charge combinations that are multiples of the identity.
///
/// Returns the traceless charges restricted to directions where they are
/// independent, with the matching targets, or `None` when nothing is left.
fn reduce_flat<T: Real>(charges: &ChargeSet<T>, a: &[T], tol: T) -> Result<Option<(ChargeSet<T>, Vec<T>)>> {
    let k = charges.dim();
    let c = charges.len();
    let kt = T::count(k);
    let mut shifted = Vec::with_capacity(c);
    let mut targets = Vec::with_capacity(c);
    for (op, &aj) in charges.charges().iter().zip(a) {
        let mean = linalg::trace_re(op.matrix()) / kt;
        let m = op.matrix() - CMatrix::identity(k, k) * cplx(mean);
        shifted.push(m);
        targets.push(aj - mean);
    }
    let gram = DMatrix::from_fn(c, c, |i, j| {
        shifted[i]
            .iter()
            .zip(shifted[j].iter())
            .fold(T::zero(), |acc, (x, y)| acc + (x.conj() * y).re)
    });
    let eig = gram.symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let cut = T::lit(1e-12) * top.max(T::lit(1e-300));
    let mut kept = Vec::new();
    for r in 0..c {
        let w = eig.eigenvectors.column(r);
        let proj = (0..c).fold(T::zero(), |acc, j| acc + w[j] * targets[j]);
        if eig.eigenvalues[r] > cut {
            kept.push((r, proj));
        } else if proj.abs() > tol {
            return Err(Error::Infeasible {
                reason: "charge values contradict a linear relation among the charges".into(),
                residual: proj.abs().as_f64(),
            });
        }
    }
    if kept.is_empty() {
        return Ok(None);
    }
    let ops = kept
        .iter()
        .map(|&(r, _)| {
            let w = eig.eigenvectors.column(r);
            let m = (0..c).fold(CMatrix::zeros(k, k), |acc, j| acc + &shifted[j] * cplx(w[j]));
            Observable::from_hermitian_unchecked(m)
        })
        .collect();
    let b = kept.iter().map(|&(_, p)| p).collect();
    Ok(Some((ChargeSet::new(ops)?, b)))
}

/// Membership of `(a, s)` in the closed phase diagram.
pub fn phase_member<T: Real>(charges: &ChargeSet<T>, p: &PhasePoint<T>, opts: &DiagramOptions<T>) -> Result<MembershipReport<T>> {
    let oracle = SupportOracle::new(charges, opts);
    phase_member_with(&oracle, p, opts)
}

/// [`phase_member`] against a prebuilt oracle.
pub fn phase_member_with<T: Real>(
    oracle: &SupportOracle<T>,
    p: &PhasePoint<T>,
    opts: &DiagramOptions<T>,
) -> Result<MembershipReport<T>> {
    entropy_window(oracle, p, opts, |_| T::zero())
}

/// Membership in the conditional-entropy diagram of a bath whose partner system
/// has entropy `s0`: the entropy coordinate may go down to `-min(s0, S(tau(a)))`.
pub fn extended_member<T: Real>(
    bath_charges: &ChargeSet<T>,
    s0: T,
    p: &PhasePoint<T>,
    opts: &DiagramOptions<T>,
) -> Result<MembershipReport<T>> {
    if s0 < T::zero() {
        return Err(Error::arg("s0 must be non-negative"));
    }
    let oracle = SupportOracle::new(bath_charges, opts);
    extended_member_with(&oracle, s0, p, opts)
}

pub fn extended_member_with<T: Real>(
    oracle: &SupportOracle<T>,
    s0: T,
    p: &PhasePoint<T>,
    opts: &DiagramOptions<T>,
) -> Result<MembershipReport<T>> {
    entropy_window(oracle, p, opts, |smax| s0.min(smax))
}

/// Shared body of the two membership tests; `depth(smax)` is how far below zero
/// the entropy coordinate may go.
fn entropy_window<T: Real>(
    oracle: &SupportOracle<T>,
    p: &PhasePoint<T>,
    opts: &DiagramOptions<T>,
    depth: impl Fn(T) -> T,
) -> Result<MembershipReport<T>> {
    check_point(oracle.charges(), &p.a)?;
    if !p.s.is_finite() {
        return Err(Error::arg("entropy coordinate must be finite"));
    }
    let (charge_margin, _) = oracle.margin(&p.a);
    if charge_margin < -opts.tol {
        let margin = charge_margin.min(p.s + depth(T::zero()).max(T::zero()));
        return Ok(report_from_margin(margin, opts.tol, None));
    }
    let mut witness = None;
    let smax = if charge_margin > opts.tol {
        match gibbs::solve_beta(oracle.charges(), &p.a, &opts.solver) {
            Ok(sol) => {
                let s = sol.entropy;
                witness = Some(sol);
                s
            }
            Err(Error::Infeasible { .. }) => entropy_ceiling(oracle.charges(), &p.a, opts)?,
            Err(e) => return Err(e),
        }
    } else {
        entropy_ceiling(oracle.charges(), &p.a, opts)?
    };
    let lower = -depth(smax);
    let margin = charge_margin.min(p.s - lower).min(smax - p.s);
    Ok(report_from_margin(margin, opts.tol, witness))
}

/// `S(B|S) = S(SB) - S(S)` for a state on `dims[0] * dims[1]`.
pub fn conditional_entropy<T: Real>(xi: &DensityState<T>, dims: [usize; 2]) -> Result<T> {
    if dims[0] * dims[1] != xi.dim() {
        return Err(Error::shape(format!(
            "state has dimension {} but dims multiply to {}",
            xi.dim(),
            dims[0] * dims[1]
        )));
    }
    let marginal = operators::reduce_state(xi, &dims, &[0])?;
    Ok(operators::entropy(xi) - operators::entropy(&marginal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn opts() -> DiagramOptions<f64> {
        DiagramOptions::default()
    }

    #[test]
    fn bloch_ball_membership() {
        let p = ChargeSet::<f64>::pauli_triple();
        let r = achievable(&p, &[0.0, 0.0, 0.0], &opts()).unwrap();
        assert!(r.inside && !r.on_boundary);
        assert_abs_diff_eq!(r.margin, 1.0, epsilon = 1e-9);
        let r = achievable(&p, &[0.6, 0.0, 0.8], &opts()).unwrap();
        assert!(r.inside && r.on_boundary, "{}", r.margin);
        let r = achievable(&p, &[0.8, 0.8, 0.0], &opts()).unwrap();
        assert!(!r.inside);
        assert_abs_diff_eq!(r.margin, 1.0 - 0.8f64.hypot(0.8), epsilon = 1e-9);
    }

    #[test]
    fn max_entropy_examples() {
        let p = ChargeSet::<f64>::pauli_triple();
        let so = SolverOptions::default();
        assert_abs_diff_eq!(max_entropy_at(&p, &[0.0; 3], &so).unwrap(), 2f64.ln(), epsilon = 1e-10);
        assert_abs_diff_eq!(max_entropy_at(&p, &[0.0, 0.0, 0.6], &so).unwrap(), 0.5004, epsilon = 1e-4);
        let q = ChargeSet::single(Observable::<f64>::diagonal(&[0.0, 1.0, 2.0]));
        assert_abs_diff_eq!(max_entropy_at(&q, &[1.0], &so).unwrap(), 3f64.ln(), epsilon = 1e-10);
    }

    #[test]
    fn ceiling_on_faces() {
        let p = ChargeSet::<f64>::pauli_triple();
        assert_abs_diff_eq!(entropy_ceiling(&p, &[0.6, 0.0, 0.8], &opts()).unwrap(), 0.0, epsilon = 1e-12);
        // diag(0,1,1): at a=1 the face is a qubit with no remaining constraint
        let q = ChargeSet::single(Observable::<f64>::diagonal(&[0.0, 1.0, 1.0]));
        assert_abs_diff_eq!(entropy_ceiling(&q, &[1.0], &opts()).unwrap(), 2f64.ln(), epsilon = 1e-10);
        // commuting pair on a qutrit: a = (1, 0) pins the middle level
        let two = ChargeSet::new(vec![
            Observable::<f64>::diagonal(&[0.0, 1.0, 0.0]),
            Observable::diagonal(&[0.0, 0.0, 1.0]),
        ])
        .unwrap();
        assert_abs_diff_eq!(entropy_ceiling(&two, &[0.5, 0.5], &opts()).unwrap(), 2f64.ln(), epsilon = 1e-10);
        assert!(entropy_ceiling(&two, &[0.8, 0.8], &opts()).is_err());
    }

    #[test]
    fn phase_member_examples() {
        let p = ChargeSet::<f64>::pauli_triple();
        let r = phase_member(&p, &PhasePoint::new(vec![0.0; 3], 2f64.ln()), &opts()).unwrap();
        assert!(r.inside);
        let r = phase_member(&p, &PhasePoint::new(vec![0.0, 0.0, 0.6], 0.6), &opts()).unwrap();
        assert!(!r.inside);
        assert_abs_diff_eq!(r.margin, 0.5004 - 0.6, epsilon = 1e-4);
        let r = phase_member(&p, &PhasePoint::new(vec![0.1, 0.0, 0.0], -0.1), &opts()).unwrap();
        assert!(!r.inside);
        let r = phase_member(&p, &PhasePoint::new(vec![0.6, 0.0, 0.8], 0.0), &opts()).unwrap();
        assert!(r.inside && r.on_boundary);
    }

    #[test]
    fn conditional_entropy_examples() {
        let mut bell = linalg::CVector::<f64>::zeros(4);
        bell[0] = cplx(1.0);
        bell[3] = cplx(1.0);
        let bell = DensityState::pure(&bell).unwrap();
        assert_abs_diff_eq!(conditional_entropy(&bell, [2, 2]).unwrap(), -(2f64.ln()), epsilon = 1e-12);
        let rho = DensityState::<f64>::bloch([0.3, 0.1, 0.2]).unwrap();
        let tau = gibbs::ggs_from_beta(&ChargeSet::single(Observable::pauli_z()), &[1.0]).unwrap();
        let prod = rho.tensor(&tau.tau);
        assert_abs_diff_eq!(conditional_entropy(&prod, [2, 2]).unwrap(), tau.entropy, epsilon = 1e-12);
        let pure = DensityState::<f64>::bloch([0.0, 0.0, 1.0]).unwrap();
        let pp = pure.tensor(&pure);
        assert_abs_diff_eq!(conditional_entropy(&pp, [2, 2]).unwrap(), 0.0, epsilon = 1e-12);
        assert!(conditional_entropy(&pp, [2, 3]).is_err());
    }

    #[test]
    fn extended_member_examples() {
        let z = ChargeSet::single(Observable::<f64>::pauli_z());
        let ln2 = 2f64.ln();
        let inside = extended_member(&z, ln2, &PhasePoint::new(vec![0.0], -0.5), &opts()).unwrap();
        assert!(inside.inside);
        let out = extended_member(&z, ln2, &PhasePoint::new(vec![0.0], -0.8), &opts()).unwrap();
        assert!(!out.inside);
        assert_abs_diff_eq!(out.margin, -0.8 + ln2, epsilon = 1e-10);
        let zero = extended_member(&z, 0.0, &PhasePoint::new(vec![0.0], -0.01), &opts()).unwrap();
        assert!(!zero.inside);
        let top = extended_member(&z, 0.0, &PhasePoint::new(vec![0.0], ln2), &opts()).unwrap();
        assert!(top.inside && top.on_boundary);
    }
}
