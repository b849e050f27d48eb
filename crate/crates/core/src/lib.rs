//! Thermodynamics of quantum systems with several, possibly non-commuting,
//! conserved charges.
//!
//! The numerical core is generic over the real scalar ([`scalar::Real`], `f32`
//! or `f64`); the aliases below fix it to `f64`, which is what most callers want.

// `!(a <= b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bathrate;
pub mod cli;
pub mod diagram;
pub mod error;
pub mod finite;
pub mod gibbs;
pub mod linalg;
pub mod operators;
pub mod scalar;
pub mod thermo;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Observable = operators::Observable<f64>;
pub type DensityState = operators::DensityState<f64>;
pub type ChargeSet = operators::ChargeSet<f64>;
pub type Projector = operators::Projector<f64>;
pub type GgsSolution = gibbs::GgsSolution<f64>;
pub type SolverOptions = gibbs::SolverOptions<f64>;
pub type PhasePoint = diagram::PhasePoint<f64>;
pub type MembershipReport = diagram::MembershipReport<f64>;
pub type DiagramOptions = diagram::DiagramOptions<f64>;
pub type SupportOracle = diagram::SupportOracle<f64>;
pub type Scenario = thermo::Scenario<f64>;
pub type Ledger = thermo::Ledger<f64>;
pub type BathRay = thermo::BathRay<f64>;
pub type RateOptions = bathrate::RateOptions<f64>;
pub type RateReport = bathrate::RateReport<f64>;
pub type TypicalityParams = finite::TypicalityParams<f64>;
pub type TrimResult = finite::TrimResult<f64>;
pub type AetOptions = finite::AetOptions<f64>;
pub type AetReport = finite::AetReport<f64>;
pub type AmcParams = finite::AmcParams<f64>;
pub type AmcReport = finite::AmcReport<f64>;
