//! Small-`n` versions of the asymptotic constructions: entropy-typical projectors,
//! the trimming and flattening of a state's spectrum, explicit almost-commuting
//! unitaries between equivalent product states, and approximate microcanonical
//! subspaces.
//!
//! Typicality arithmetic is done in bits; everything else in the crate uses nats.

pub mod aet;
pub mod amc;
pub mod sampling;
pub mod trim;
pub mod typical;

pub use aet::{aet_transform, AetOptions, AetReport, AetUnitary};
pub use amc::{
    amc_construct, amc_epsilon_peak, amc_first_nonvacuous_n, amc_operator, amc_theoretical_params, amc_validate, amc_windows,
    AmcParams, AmcReport, AmcSampling, AmcTheory, Ensemble,
};
pub use trim::{trim_state, TrimOptions, TrimResult};
pub use typical::{typical_projector, TypicalSet, TypicalStats, TypicalityParams};

use crate::error::{Error, Result};
use crate::linalg::checked_power;
use crate::operators::DensityState;
use crate::scalar::Real;

/// Checks that the factors share one dimension and that `d^n` fits under `cap`.
pub(crate) fn product_dim<T: Real>(factors: &[DensityState<T>], cap: usize) -> Result<usize> {
    let first = factors
        .first()
        .ok_or_else(|| Error::arg("need at least one factor"))?;
    let d = first.dim();
    if let Some((i, f)) = factors.iter().enumerate().find(|(_, f)| f.dim() != d) {
        return Err(Error::shape(format!(
            "factor {i} has dimension {} but factor 0 has {d}",
            f.dim()
        )));
    }
    let total = checked_power(d, factors.len());
    if total > cap as u128 {
        return Err(Error::Capacity { dim: total, cap });
    }
    Ok(total as usize)
}

pub(crate) fn log2<T: Real>(x: T) -> T {
    x.ln() / T::lit(std::f64::consts::LN_2)
}

pub(crate) fn exp2<T: Real>(x: T) -> T {
    (x * T::lit(std::f64::consts::LN_2)).exp()
}
