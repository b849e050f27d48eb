//! Smallest bath rate `R*` (elementary baths per system copy) that makes a work
//! transformation feasible with an uncorrelated final bath, and its second-order
//! approximation for small second-law gaps.

use crate::diagram::{self, DiagramOptions, PhasePoint, SupportOracle};
use crate::error::{Error, Result};
use crate::gibbs;
use crate::operators::ChargeSet;
use crate::scalar::Real;
use crate::thermo::{BathRay, Scenario};

#[derive(Clone, Debug)]
pub struct RateOptions<T: Real> {
    /// Relative width of the final bisection bracket.
    pub rtol: T,
    pub r_max: T,
    pub diagram: DiagramOptions<T>,
}

impl<T: Real> Default for RateOptions<T> {
    fn default() -> Self {
        Self {
            rtol: T::lit(1e-8),
            r_max: T::lit(1e12),
            diagram: DiagramOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RateReport<T: Real> {
    pub r_star: T,
    pub boundary_point: PhasePoint<T>,
    /// Membership margin of `boundary_point`.
    pub boundary_margin: T,
    pub delta: T,
    /// NaN when the quadratic form is unavailable (thermal point on the boundary).
    pub quadratic_estimate: T,
    pub relative_gap: T,
}

/// Exact `R*` for a scenario whose bath is made of copies of `elem_bath`.
pub fn optimal_rate_exact<T: Real>(sc: &Scenario<T>, elem_bath: &ChargeSet<T>, opts: &RateOptions<T>) -> Result<RateReport<T>> {
    let ray = BathRay::new(elem_bath, &sc.beta, sc.delta_s(), sc.displacement())?;
    let oracle = SupportOracle::new(elem_bath, &opts.diagram);
    optimal_rate_on_ray(&ray, &oracle, opts)
}

/// Exact `R*` along a prepared ray.
///
/// Doubles (or halves) the rate from 1 to bracket the first feasible rate, then
/// bisects on membership; a point exactly on the boundary counts as feasible.
pub fn optimal_rate_on_ray<T: Real>(ray: &BathRay<T>, oracle: &SupportOracle<T>, opts: &RateOptions<T>) -> Result<RateReport<T>> {
    let delta = ray.gap();
    let quadratic_estimate = quadratic_on_ray(ray, oracle.charges(), opts).unwrap_or(T::lit(f64::NAN));
    if ray.is_degenerate() {
        return Ok(RateReport {
            r_star: T::zero(),
            boundary_point: ray.thermal.clone(),
            boundary_margin: T::zero(),
            delta,
            quadratic_estimate,
            relative_gap: T::lit(f64::NAN),
        });
    }
    if !(delta > T::zero()) {
        return Err(Error::NegativeGap { delta: delta.as_f64() });
    }
    let margin_at = |r: T| -> Result<T> {
        let p = ray.point(r)?;
        Ok(diagram::phase_member_with(oracle, &p, &opts.diagram)?.margin)
    };
    let feasible = |r: T| -> Result<bool> { Ok(margin_at(r)? >= T::zero()) };

    let two = T::lit(2.0);
    let (mut lo, mut hi);
    if feasible(T::one())? {
        hi = T::one();
        lo = hi / two;
        let r_min = T::lit(1e-12);
        while feasible(lo)? {
            hi = lo;
            lo /= two;
            if lo < r_min {
                break;
            }
        }
    } else {
        lo = T::one();
        hi = two;
        while !feasible(hi)? {
            lo = hi;
            hi *= two;
            if hi > opts.r_max {
                return Err(Error::UnboundedRate {
                    r_max: opts.r_max.as_f64(),
                });
            }
        }
    }
    while hi - lo > opts.rtol * hi {
        let mid = (lo + hi) / two;
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let boundary_point = ray.point(hi)?;
    let boundary_margin = margin_at(hi)?;
    Ok(RateReport {
        r_star: hi,
        boundary_point,
        boundary_margin,
        delta,
        quadratic_estimate,
        relative_gap: ((hi - quadratic_estimate) / hi).abs(),
    })
}

/// Second-order estimate `R = -(1 / 2 delta) x^T H x`, with `H` the entropy Hessian
/// at the bath's thermal charge values.
pub fn optimal_rate_quadratic<T: Real>(sc: &Scenario<T>, elem_bath: &ChargeSet<T>, opts: &RateOptions<T>) -> Result<T> {
    let ray = BathRay::new(elem_bath, &sc.beta, sc.delta_s(), sc.displacement())?;
    quadratic_on_ray(&ray, elem_bath, opts)
}

pub fn quadratic_on_ray<T: Real>(ray: &BathRay<T>, elem_bath: &ChargeSet<T>, opts: &RateOptions<T>) -> Result<T> {
    let delta = ray.gap();
    if !(delta > T::zero()) {
        return Err(Error::NegativeGap { delta: delta.as_f64() });
    }
    if ray.x.iter().all(|&v| v == T::zero()) {
        return Ok(T::zero());
    }
    let h = gibbs::entropy_hessian(elem_bath, &ray.thermal.a, &opts.diagram.solver)?;
    let c = ray.x.len();
    let mut form = T::zero();
    for i in 0..c {
        for j in 0..c {
            form += ray.x[i] * h[(i, j)] * ray.x[j];
        }
    }
    Ok(-form / (delta + delta))
}

/// One row of a gap sweep.
#[derive(Clone, Debug)]
pub struct SweepRow<T: Real> {
    pub delta: T,
    pub exact: T,
    pub quadratic: T,
}

/// Evaluates both rates with the gap overridden to `10^-k` for each `k` in `ks`,
/// keeping the charge displacement fixed.
pub fn delta_sweep<T: Real>(
    ray: &BathRay<T>,
    oracle: &SupportOracle<T>,
    ks: impl IntoIterator<Item = i32>,
    opts: &RateOptions<T>,
) -> Result<Vec<SweepRow<T>>> {
    ks.into_iter()
        .map(|k| {
            let delta = T::lit(10f64.powi(-k));
            let r = ray.with_gap(delta);
            let rep = optimal_rate_on_ray(&r, oracle, opts)?;
            Ok(SweepRow {
                delta,
                exact: rep.r_star,
                quadratic: rep.quadratic_estimate,
            })
        })
        .collect()
}
