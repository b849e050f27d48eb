//! Generalized Gibbs states `tau(beta) = exp(-sum_j beta_j A_j) / Z`, the inverse
//! maximum-entropy problem `a -> beta`, free entropy and entropy curvature.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, eigh, CMatrix, Eigh};
use crate::operators::{self, ChargeSet, DensityState};
use crate::scalar::Real;

/// Options for [`solve_beta`] and the finite-difference routines built on it.
#[derive(Clone, Debug)]
pub struct SolverOptions<T: Real> {
    /// Bound on `max_j |Tr(tau A_j) - a_j|` at convergence.
    pub tol: T,
    pub max_iter: usize,
    /// Multipliers beyond this magnitude mean the target is not interior.
    pub beta_max: T,
    /// Relative finite-difference step (scaled by each charge's spectral diameter).
    pub fd_step: T,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(T::SOLVER_TOL),
            max_iter: 500,
            beta_max: T::lit(1e4),
            fd_step: T::lit(1e-5),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GgsSolution<T: Real> {
    pub beta: Vec<T>,
    pub tau: DensityState<T>,
    pub charge_values: Vec<T>,
    /// `S(tau)` in nats.
    pub entropy: T,
    /// `ln Z`.
    pub log_partition: T,
    pub converged: bool,
    pub residual: T,
    pub iterations: usize,
}

/// Spectral data of `H = sum_j beta_j A_j` and the Gibbs weights it induces.
struct Forward<T: Real> {
    eig: Eigh<T>,
    probs: Vec<T>,
    log_z: T,
    values: Vec<T>,
}

impl<T: Real> Forward<T> {
    fn new(charges: &ChargeSet<T>, beta: &[T]) -> Self {
        let h = charges.weighted_sum(beta);
        let eig = eigh(&h);
        let neg: Vec<T> = eig.values.iter().map(|&x| -x).collect();
        let log_z = linalg::logsumexp(&neg);
        let probs: Vec<T> = neg.iter().map(|&x| (x - log_z).exp()).collect();
        let values = charges
            .charges()
            .iter()
            .map(|a| {
                let av = a.matrix() * &eig.vectors;
                (0..probs.len()).fold(T::zero(), |acc, k| {
                    acc + probs[k] * eig.vectors.column(k).dotc(&av.column(k)).re
                })
            })
            .collect();
        Self {
            eig,
            probs,
            log_z,
            values,
        }
    }

    /// Dual objective `ln Z + beta . target`.
    fn dual(&self, beta: &[T], target: &[T]) -> T {
        self.log_z + dot(beta, target)
    }

    /// Width of the exponent spread of `beta . A`.
    fn spread(&self) -> T {
        self.eig.max() - self.eig.min()
    }

    fn state(&self) -> CMatrix<T> {
        linalg::from_spectrum(&self.probs, &self.eig.vectors)
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn inf_norm<T: Real>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}

fn residuals<T: Real>(target: &[T], values: &[T]) -> Vec<T> {
    target.iter().zip(values).map(|(&t, &v)| t - v).collect()
}

/// Exponent spread treated as a boundary signal. Interior targets of many-copy
/// charges legitimately need spreads well beyond `-ln(eps)`, so the limit sits an
/// order of magnitude above it.
fn boundary_spread<T: Real>() -> T {
    -T::default_epsilon().ln() * T::lit(10.0)
}

fn solution<T: Real>(fw: Forward<T>, beta: Vec<T>, residual: T, iterations: usize) -> GgsSolution<T> {
    let entropy = fw.log_z + dot(&beta, &fw.values);
    GgsSolution {
        tau: DensityState::from_matrix_unchecked(fw.state()),
        charge_values: fw.values,
        entropy,
        log_partition: fw.log_z,
        converged: true,
        residual,
        iterations,
        beta,
    }
}

/// Gibbs state for given inverse temperatures.
pub fn ggs_from_beta<T: Real>(charges: &ChargeSet<T>, beta: &[T]) -> Result<GgsSolution<T>> {
    charges.check_len(beta.len(), "beta")?;
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::arg("beta must be finite"));
    }
    let fw = Forward::new(charges, beta);
    Ok(solution(fw, beta.to_vec(), T::zero(), 0))
}

/// `ln Z(beta)`.
pub fn log_partition<T: Real>(charges: &ChargeSet<T>, beta: &[T]) -> Result<T> {
    charges.check_len(beta.len(), "beta")?;
    Ok(Forward::new(charges, beta).log_z)
}

/// Moore-Penrose pseudo-inverse applied to `g` for a symmetric matrix.
fn pinv_apply<T: Real>(m: &DMatrix<T>, g: &[T]) -> Vec<T> {
    let eig = m.clone().symmetric_eigen();
    let top = eig
        .eigenvalues
        .iter()
        .fold(T::zero(), |acc, x| acc.max(x.abs()));
    let cut = top * T::lit(1e-9);
    let gv = DVector::from_column_slice(g);
    let mut out = DVector::zeros(g.len());
    for k in 0..g.len() {
        let lam = eig.eigenvalues[k];
        if lam.abs() > cut && lam.abs() > T::zero() {
            let v = eig.eigenvectors.column(k);
            out += v * (v.dot(&gv) / lam);
        }
    }
    out.iter().copied().collect()
}

/// Central finite-difference Hessian of the dual, i.e. of `ln Z`, symmetrized.
fn dual_hessian<T: Real>(charges: &ChargeSet<T>, beta: &[T], fd_step: T) -> DMatrix<T> {
    let c = beta.len();
    let mut hess = DMatrix::zeros(c, c);
    for j in 0..c {
        let h = fd_step * T::one().max(beta[j].abs());
        let mut bp = beta.to_vec();
        let mut bm = beta.to_vec();
        bp[j] += h;
        bm[j] -= h;
        let vp = Forward::new(charges, &bp).values;
        let vm = Forward::new(charges, &bm).values;
        for i in 0..c {
            hess[(i, j)] = -(vp[i] - vm[i]) / (h + h);
        }
    }
    (&hess + hess.transpose()) * T::lit(0.5)
}

/// Solves `Tr(tau(beta) A_j) = target_j` by damped Newton on the convex dual
/// `f(beta) = ln Z(beta) + beta . target`, starting from `beta = 0`.
pub fn solve_beta<T: Real>(
    charges: &ChargeSet<T>,
    target: &[T],
    opts: &SolverOptions<T>,
) -> Result<GgsSolution<T>> {
    charges.check_len(target.len(), "target")?;
    if target.iter().any(|t| !t.is_finite()) {
        return Err(Error::arg("target must be finite"));
    }
    let c = target.len();
    let max_spread = boundary_spread::<T>();
    let fd_step = opts.fd_step.max(T::lit(1e-7));
    let mut beta = vec![T::zero(); c];
    let mut fw = Forward::new(charges, &beta);
    let mut f = fw.dual(&beta, target);
    let mut polishing = 0usize;

    for iter in 0..opts.max_iter {
        let g: Vec<T> = target.iter().zip(&fw.values).map(|(&t, &v)| t - v).collect();
        let residual = inf_norm(&g);
        if fw.spread() > max_spread {
            return Err(Error::Infeasible {
                reason: "target is on or beyond the boundary of the charge-value set".into(),
                residual: residual.as_f64(),
            });
        }
        let hess = dual_hessian(charges, &beta, fd_step);
        let mut step: Vec<T> = pinv_apply(&hess, &g).iter().map(|&x| -x).collect();
        let step_norm = inf_norm(&step);

        if residual <= opts.tol {
            // Converged on the residual; a few full Newton steps sharpen beta itself.
            let tiny = T::lit(1e-13) * (T::one() + inf_norm(&beta));
            if polishing >= 3 || step_norm <= tiny {
                return Ok(solution(fw, beta, residual, iter));
            }
            polishing += 1;
            let trial: Vec<T> = beta.iter().zip(&step).map(|(&b, &s)| b + s).collect();
            let tfw = Forward::new(charges, &trial);
            let tres = target
                .iter()
                .zip(&tfw.values)
                .fold(T::zero(), |acc, (&t, &v)| acc.max((t - v).abs()));
            if tres > residual {
                return Ok(solution(fw, beta, residual, iter));
            }
            f = tfw.dual(&trial, target);
            beta = trial;
            fw = tfw;
            continue;
        }

        if step_norm <= T::lit(1e-14) * (T::one() + inf_norm(&beta)) {
            return Err(Error::Infeasible {
                reason: "charge constraints are inconsistent (dual unbounded along a degenerate direction)".into(),
                residual: residual.as_f64(),
            });
        }
        let mut slope = dot(&g, &step);
        if !(slope < T::zero()) {
            step = g.iter().map(|&x| -x).collect();
            slope = -dot(&g, &g);
        }
        let mut t = T::one();
        let mut accepted = None;
        while t > T::lit(1e-12) {
            let trial: Vec<T> = beta.iter().zip(&step).map(|(&b, &s)| b + t * s).collect();
            let tfw = Forward::new(charges, &trial);
            let tf = tfw.dual(&trial, target);
            // Close to the optimum the dual decrease drops below rounding of f;
            // there the residual itself decides.
            let flat = (tf - f).abs() <= T::lit(64.0) * T::default_epsilon() * (T::one() + f.abs());
            let better = if flat {
                inf_norm(&residuals(target, &tfw.values)) < residual
            } else {
                tf <= f + T::lit(1e-4) * t * slope
            };
            if better {
                accepted = Some((trial, tfw, tf));
                break;
            }
            t *= T::lit(0.5);
        }
        let Some((nb, nfw, nf)) = accepted else {
            return Err(Error::Infeasible {
                reason: "line search stalled; the dual does not decrease".into(),
                residual: residual.as_f64(),
            });
        };
        beta = nb;
        fw = nfw;
        f = nf;
        if inf_norm(&beta) > opts.beta_max {
            return Err(Error::Infeasible {
                reason: format!("|beta| exceeded {}", opts.beta_max.as_f64()),
                residual: residual.as_f64(),
            });
        }
    }
    let residual = target
        .iter()
        .zip(&fw.values)
        .fold(T::zero(), |acc, (&t, &v)| acc.max((t - v).abs()));
    Err(Error::NotConverged {
        iterations: opts.max_iter,
        residual: residual.as_f64(),
    })
}

/// Free entropy `sum_j beta_j Tr(rho A_j) - S(rho)`.
pub fn free_entropy<T: Real>(rho: &DensityState<T>, charges: &ChargeSet<T>, beta: &[T]) -> Result<T> {
    charges.check_len(beta.len(), "beta")?;
    if rho.dim() != charges.dim() {
        return Err(Error::shape(format!(
            "state has dimension {} but charges act on {}",
            rho.dim(),
            charges.dim()
        )));
    }
    Ok(dot(beta, &charges.values(rho)) - operators::entropy(rho))
}

/// Entropy Hessian `d beta_j / d a_i` at the charge point `a`, by central differences
/// of the inverse map, symmetrized.
pub fn entropy_hessian<T: Real>(
    charges: &ChargeSet<T>,
    a: &[T],
    opts: &SolverOptions<T>,
) -> Result<DMatrix<T>> {
    let h = entropy_jacobian(charges, a, opts)?;
    Ok((&h + h.transpose()) * T::lit(0.5))
}

/// The raw central-difference Jacobian of `a -> beta(a)`; column `j` differentiates
/// along `a_j`. Symmetric up to discretization error.
pub fn entropy_jacobian<T: Real>(
    charges: &ChargeSet<T>,
    a: &[T],
    opts: &SolverOptions<T>,
) -> Result<DMatrix<T>> {
    solve_beta(charges, a, opts)?;
    let c = a.len();
    let mut h = DMatrix::zeros(c, c);
    for j in 0..c {
        let scale = operators::spectral_diameter(charges.get(j)).max(T::lit(1e-12));
        let step = opts.fd_step * scale;
        let mut ap = a.to_vec();
        let mut am = a.to_vec();
        ap[j] += step;
        am[j] -= step;
        let near = |e: Error| Error::BoundaryProximity(format!("charge {j} stencil: {e}"));
        let bp = solve_beta(charges, &ap, opts).map_err(near)?.beta;
        let bm = solve_beta(charges, &am, opts).map_err(near)?.beta;
        for i in 0..c {
            h[(i, j)] = (bp[i] - bm[i]) / (step + step);
        }
    }
    Ok(h)
}

/// Heat capacity `C = -beta^2 / (d beta / dE)` for a single charge at value `a`.
pub fn heat_capacity<T: Real>(charges: &ChargeSet<T>, a: T, opts: &SolverOptions<T>) -> Result<T> {
    if charges.len() != 1 {
        return Err(Error::arg(format!(
            "heat capacity needs exactly one charge, got {}",
            charges.len()
        )));
    }
    let beta = solve_beta(charges, &[a], opts)?.beta[0];
    if beta.abs() <= T::lit(1e-12) {
        // beta^2 Var(A) vanishes at infinite temperature.
        return Ok(T::zero());
    }
    let h = entropy_hessian(charges, &[a], opts)?;
    Ok(-beta * beta / h[(0, 0)])
}

/// `Tr(rho A^2) - Tr(rho A)^2`.
pub fn charge_variance<T: Real>(rho: &DensityState<T>, a: &crate::operators::Observable<T>) -> T {
    let mean = rho.expectation(a);
    let sq = a.matrix() * a.matrix();
    linalg::expectation(rho.matrix(), &sq) - mean * mean
}
