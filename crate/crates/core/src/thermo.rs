//! First- and second-law bookkeeping for work transformations
//! `rho_S (x) tau(beta)_B -> sigma_SB`, with batteries kept as scalar ledgers.
//!
//! All quantities are per copy of the system.

use crate::diagram::{self, DiagramOptions, MembershipReport, PhasePoint, SupportOracle};
use crate::error::{Error, Result};
use crate::gibbs::{self, GgsSolution};
use crate::operators::{self, ChargeSet, DensityState};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct Scenario<T: Real> {
    pub system_charges: ChargeSet<T>,
    pub bath_charges: ChargeSet<T>,
    pub beta: Vec<T>,
    pub rho_s: DensityState<T>,
    pub sigma_s: DensityState<T>,
    /// Work rates `W_j` deposited in the batteries.
    pub work: Vec<T>,
    /// The batteries are assumed to have enough spectral room to absorb the work;
    /// this is recorded, not checked.
    pub battery_assumption: bool,
}

impl<T: Real> Scenario<T> {
    pub fn new(
        system_charges: ChargeSet<T>,
        bath_charges: ChargeSet<T>,
        beta: Vec<T>,
        rho_s: DensityState<T>,
        sigma_s: DensityState<T>,
        work: Vec<T>,
    ) -> Result<Self> {
        let c = system_charges.len();
        if bath_charges.len() != c {
            return Err(Error::shape(format!(
                "system has {c} charges but bath has {}",
                bath_charges.len()
            )));
        }
        system_charges.check_len(beta.len(), "beta")?;
        system_charges.check_len(work.len(), "work")?;
        for (name, st) in [("rho_S", &rho_s), ("sigma_S", &sigma_s)] {
            if st.dim() != system_charges.dim() {
                return Err(Error::shape(format!(
                    "{name} has dimension {} but system charges act on {}",
                    st.dim(),
                    system_charges.dim()
                )));
            }
        }
        if beta.iter().chain(&work).any(|x| !x.is_finite()) {
            return Err(Error::arg("beta and work must be finite"));
        }
        Ok(Self {
            system_charges,
            bath_charges,
            beta,
            rho_s,
            sigma_s,
            work,
            battery_assumption: true,
        })
    }

    /// `S(sigma_S) - S(rho_S)`.
    pub fn delta_s(&self) -> T {
        operators::entropy(&self.sigma_s) - operators::entropy(&self.rho_s)
    }

    /// `Tr((sigma_S - rho_S) A_{S_j})`.
    pub fn delta_a(&self) -> Vec<T> {
        let after = self.system_charges.values(&self.sigma_s);
        let before = self.system_charges.values(&self.rho_s);
        after.iter().zip(&before).map(|(&x, &y)| x - y).collect()
    }

    /// Charge the bath has to supply per copy of the system: `Delta A_S + W`.
    pub fn displacement(&self) -> Vec<T> {
        self.delta_a().iter().zip(&self.work).map(|(&d, &w)| d + w).collect()
    }

    /// Gibbs state of the bath at the scenario's inverse temperatures.
    pub fn bath_thermal(&self) -> Result<GgsSolution<T>> {
        gibbs::ggs_from_beta(&self.bath_charges, &self.beta)
    }

    /// Line of bath points traced out as the bath rate varies.
    pub fn ray(&self) -> Result<BathRay<T>> {
        BathRay::new(&self.bath_charges, &self.beta, self.delta_s(), self.displacement())
    }
}

/// The bath's target point `thermal - (x, delta_s) / R` as a function of the rate `R`.
#[derive(Clone, Debug)]
pub struct BathRay<T: Real> {
    pub thermal: PhasePoint<T>,
    pub beta: Vec<T>,
    pub delta_s: T,
    pub x: Vec<T>,
}

impl<T: Real> BathRay<T> {
    pub fn new(bath: &ChargeSet<T>, beta: &[T], delta_s: T, x: Vec<T>) -> Result<Self> {
        bath.check_len(x.len(), "displacement")?;
        let tau = gibbs::ggs_from_beta(bath, beta)?;
        Ok(Self {
            thermal: PhasePoint::new(tau.charge_values, tau.entropy),
            beta: beta.to_vec(),
            delta_s,
            x,
        })
    }

    /// `Delta s_S - beta . x`.
    pub fn gap(&self) -> T {
        self.delta_s - dot(&self.beta, &self.x)
    }

    /// Same displacement, with `delta_s` chosen so that the gap equals `delta`.
    pub fn with_gap(&self, delta: T) -> Self {
        Self {
            delta_s: delta + dot(&self.beta, &self.x),
            ..self.clone()
        }
    }

    /// No entropy or charge is asked of the bath.
    pub fn is_degenerate(&self) -> bool {
        self.delta_s == T::zero() && self.x.iter().all(|&v| v == T::zero())
    }

    pub fn point(&self, rate: T) -> Result<PhasePoint<T>> {
        if !(rate > T::zero()) {
            return Err(Error::arg("bath rate must be positive"));
        }
        let a = self
            .thermal
            .a
            .iter()
            .zip(&self.x)
            .map(|(&t, &x)| t - x / rate)
            .collect();
        Ok(PhasePoint::new(a, self.thermal.s - self.delta_s / rate))
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Final state of the bath, either explicit or as a phase-diagram point.
#[derive(Clone, Debug)]
pub enum BathFinal<T: Real> {
    State(DensityState<T>),
    Point(PhasePoint<T>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ledger<T: Real> {
    pub delta_s_s: T,
    pub delta_a_s: Vec<T>,
    pub delta_a_b: Vec<T>,
    pub work: Vec<T>,
    pub entropy_balance_residual: T,
}

impl<T: Real> Ledger<T> {
    /// Whether the final entropy matches `S(rho_S) + S(tau_B)` within `tol`.
    pub fn first_law_consistent(&self, tol: T) -> bool {
        self.entropy_balance_residual.abs() <= tol
    }
}

/// Charge bookkeeping for a transformation; the work is whatever balances the charges.
pub fn first_law_ledger<T: Real>(sc: &Scenario<T>, bath_final: &BathFinal<T>, s_final_sb: T) -> Result<Ledger<T>> {
    let tau = sc.bath_thermal()?;
    let final_b = match bath_final {
        BathFinal::State(st) => {
            if st.dim() != sc.bath_charges.dim() {
                return Err(Error::shape(format!(
                    "bath state has dimension {} but bath charges act on {}",
                    st.dim(),
                    sc.bath_charges.dim()
                )));
            }
            sc.bath_charges.values(st)
        }
        BathFinal::Point(p) => {
            sc.bath_charges.check_len(p.a.len(), "bath point")?;
            p.a.clone()
        }
    };
    let delta_a_s = sc.delta_a();
    let delta_a_b: Vec<T> = final_b
        .iter()
        .zip(&tau.charge_values)
        .map(|(&f, &t)| f - t)
        .collect();
    let work = delta_a_s.iter().zip(&delta_a_b).map(|(&s, &b)| -s - b).collect();
    Ok(Ledger {
        delta_s_s: sc.delta_s(),
        delta_a_s,
        delta_a_b,
        work,
        entropy_balance_residual: s_final_sb - (operators::entropy(&sc.rho_s) + tau.entropy),
    })
}

/// `delta = -Delta F_S - beta . W`; the transformation needs `delta >= 0`.
pub fn second_law_gap<T: Real>(sc: &Scenario<T>) -> Result<T> {
    let before = gibbs::free_entropy(&sc.rho_s, &sc.system_charges, &sc.beta)?;
    let after = gibbs::free_entropy(&sc.sigma_s, &sc.system_charges, &sc.beta)?;
    Ok(-(after - before) - dot(&sc.beta, &sc.work))
}

/// Target point for each elementary bath when `R` of them are used per system copy.
pub fn bath_point_at_rate<T: Real>(sc: &Scenario<T>, rate: T) -> Result<PhasePoint<T>> {
    sc.ray()?.point(rate)
}

/// Free-entropy change of the bath when it ends at `p`: `beta . Delta a_B - Delta s_B`.
pub fn bath_free_entropy_change<T: Real>(sc: &Scenario<T>, p: &PhasePoint<T>) -> Result<T> {
    sc.bath_charges.check_len(p.a.len(), "bath point")?;
    let tau = sc.bath_thermal()?;
    let da: Vec<T> = p.a.iter().zip(&tau.charge_values).map(|(&x, &t)| x - t).collect();
    Ok(dot(&sc.beta, &da) - (p.s - tau.entropy))
}

/// Feasibility with a fixed bath that may end up correlated with the system:
/// the bath point `(a_B - Delta A_S - W, S(tau_B) - Delta s_S)` must lie in the
/// conditional-entropy diagram with `s0 = s_sigma_s`.
pub fn fixed_bath_feasible<T: Real>(
    sc: &Scenario<T>,
    bath: &ChargeSet<T>,
    s_sigma_s: T,
    opts: &DiagramOptions<T>,
) -> Result<MembershipReport<T>> {
    let p = fixed_bath_point(sc, bath)?;
    let oracle = SupportOracle::new(bath, opts);
    diagram::extended_member_with(&oracle, s_sigma_s.max(T::zero()), &p, opts)
}

/// The point tested by [`fixed_bath_feasible`].
pub fn fixed_bath_point<T: Real>(sc: &Scenario<T>, bath: &ChargeSet<T>) -> Result<PhasePoint<T>> {
    let tau = gibbs::ggs_from_beta(bath, &sc.beta)?;
    let a = tau
        .charge_values
        .iter()
        .zip(sc.displacement())
        .map(|(&t, x)| t - x)
        .collect();
    Ok(PhasePoint::new(a, tau.entropy - sc.delta_s()))
}
