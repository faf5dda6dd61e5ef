//! Time evolution of the interface.
//!
//! The equation is written as `∂_t η = -L(D)η + N(η)` with the flat-interface
//! symbol `L(k) = ν₁|k|⁵ + ν₂|k|`. The steppers propagate `L` exactly and
//! integrate `N` with exponential time differencing.

mod experiments;
mod picard;
mod trajectory;

pub use experiments::{
    scaling_experiment, stability_experiment, z_distance, ScalingReport, StabilityReport, StabilityRow,
};
pub use picard::{picard_solve, PicardConfig, PicardOutcome};
pub use trajectory::{
    boundary_distance, default_dt, solve, AbortReason, Monitor, SolveConfig, Trajectory,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dn::{dn_fixed_point, DnConfig, DnError};
use crate::elastic::{elastic_e, ElasticForm};
use crate::params::{LinearSymbol, ParamsError, PhaseMode, PhysicalParams};
use crate::registry::{Registry, UnknownVariant};
use crate::spectral::{fractional_multiplier, phi1, phi2, semigroup_apply, Field, Multiplier};
use crate::two_phase::{gated_pressure, PressureConfig, PressureError, PressureMethod};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolutionError {
    #[error("Dirichlet-Neumann solve failed: {0}")]
    Dn(#[from] DnError),
    #[error("pressure solve failed: {0}")]
    Pressure(#[from] PressureError),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("final time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("initial boundary distance {distance} does not exceed 2h = {}", 2.0 * .h)]
    SeparationPrecondition { distance: f64, h: f64 },
    #[error("incompatible setup: {0}")]
    Incompatible(String),
    #[error("Picard iteration is not contracting after {iterations} iterations (last distance {last:e}){}", .cause.as_ref().map(|c| format!(": {c}")).unwrap_or_default())]
    NotContracting {
        iterations: usize,
        last: f64,
        distances: Vec<f64>,
        /// Subsystem failure that ended the iteration, if any.
        cause: Option<String>,
    },
    #[error(transparent)]
    UnknownScheme(#[from] UnknownVariant),
}

/// Work counters, reported in trajectory manifests.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub rhs_evals: usize,
    pub dn_solves: usize,
    pub dn_iterations: usize,
    pub pressure_solves: usize,
    pub pressure_iterations: usize,
    pub dense_pressure_solves: usize,
    pub rejected_steps: usize,
}

impl SolverStats {
    pub fn merge(&mut self, other: &SolverStats) {
        self.rhs_evals += other.rhs_evals;
        self.dn_solves += other.dn_solves;
        self.dn_iterations += other.dn_iterations;
        self.pressure_solves += other.pressure_solves;
        self.pressure_iterations += other.pressure_iterations;
        self.dense_pressure_solves += other.dense_pressure_solves;
        self.rejected_steps += other.rejected_steps;
    }
}

/// Physical parameters together with the solver settings of the subsystems.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub params: PhysicalParams,
    pub dn: DnConfig,
    pub pressure: PressureConfig,
    /// Drop `N` entirely, leaving the exact linear flow.
    pub linear_only: bool,
}

impl Model {
    pub fn new(params: PhysicalParams) -> Self {
        Self {
            params,
            dn: DnConfig::default(),
            pressure: PressureConfig::default(),
            linear_only: false,
        }
    }

    pub fn symbol(&self) -> LinearSymbol {
        self.params.linear_symbol()
    }

    /// `∂_t η`
    pub fn rhs(&self, eta: &Field, stats: &mut SolverStats) -> Result<Field, EvolutionError> {
        let n = self.nonlinear_remainder(eta, stats)?;
        Ok(&n - &self.linear_part(eta))
    }

    /// `L(D)η`
    pub fn linear_part(&self, eta: &Field) -> Field {
        let s = self.symbol();
        eta.to_spectrum().apply_real_symbol(|k| s.at(k)).to_field()
    }

    /// `N(η) = ∂_t η + L(D)η`
    pub fn nonlinear_remainder(&self, eta: &Field, stats: &mut SolverStats) -> Result<Field, EvolutionError> {
        stats.rhs_evals += 1;
        if self.linear_only {
            return Ok(eta.grid().zeros());
        }
        let p = &self.params;
        match p.phase {
            PhaseMode::One => {
                // -(1/μ)[R⁻(η)f + σ|D|(E(η) - ∂⁴η)] with f = σE(η) + ρgη
                let e = elastic_e(eta, ElasticForm::A);
                let f = e.scaled(p.sigma).axpy(p.rho_minus * p.g, eta);
                let dn = dn_fixed_point(eta, &f, p.lower, &self.dn)?;
                stats.dn_solves += 1;
                stats.dn_iterations += dn.iterations;
                let bend = fractional_multiplier(&(&e - &eta.derivative(4)), Multiplier::AbsPow(1.0));
                Ok(dn.remainder.axpy(p.sigma, &bend).scaled(-1.0 / p.mu_minus))
            }
            PhaseMode::Two => {
                let pair = gated_pressure(eta, p, &self.pressure)?;
                stats.pressure_solves += 1;
                stats.pressure_iterations += pair.iterations;
                if pair.method == PressureMethod::Dense {
                    stats.dense_pressure_solves += 1;
                }
                let drive = pair.g_minus_f.scaled(-1.0 / p.mu_minus);
                Ok(&drive + &self.linear_part(eta))
            }
        }
    }

    /// `e^{-tL}η`
    pub fn propagate(&self, eta: &Field, t: f64) -> Field {
        let s = self.symbol();
        semigroup_apply(eta, t, s.nu1, 5.0, s.nu2, 1.0).expect("non-negative time")
    }

    /// `t·φ(tL) N` in spectral space.
    fn phi_apply(&self, n: &Field, t: f64, phi: fn(f64) -> f64) -> Field {
        let s = self.symbol();
        n.to_spectrum().apply_real_symbol(|k| t * phi(t * s.at(k))).to_field()
    }
}

/// `∂_t η` with default subsystem settings.
pub fn rhs(eta: &Field, params: &PhysicalParams) -> Result<Field, EvolutionError> {
    Model::new(params.clone()).rhs(eta, &mut SolverStats::default())
}

/// `∂_t η + ν₁|D|⁵η + ν₂|D|η` with default subsystem settings.
pub fn nonlinear_remainder(eta: &Field, params: &PhysicalParams) -> Result<Field, EvolutionError> {
    Model::new(params.clone()).nonlinear_remainder(eta, &mut SolverStats::default())
}

/// One-step time integrator.
pub trait Stepper: Send + Sync {
    fn describe(&self) -> &'static str;
    fn order(&self) -> u32;
    fn step(&self, model: &Model, eta: &Field, dt: f64, stats: &mut SolverStats) -> Result<Field, EvolutionError>;
}

fn check_dt(dt: f64) -> Result<(), EvolutionError> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(EvolutionError::NonPositiveStep(dt))
    }
}

/// `η₊ = e^{-hL}η + hφ₁(hL)N(η)`
pub struct Etd1;

impl Stepper for Etd1 {
    fn describe(&self) -> &'static str {
        "first-order exponential Euler"
    }

    fn order(&self) -> u32 {
        1
    }

    fn step(&self, model: &Model, eta: &Field, dt: f64, stats: &mut SolverStats) -> Result<Field, EvolutionError> {
        check_dt(dt)?;
        let n = model.nonlinear_remainder(eta, stats)?;
        Ok(&model.propagate(eta, dt) + &model.phi_apply(&n, dt, phi1))
    }
}

/// Cox–Matthews ETDRK2: the exponential Euler predictor `a` corrected by
/// `hφ₂(hL)(N(a) - N(η))`.
pub struct Etdrk2;

impl Stepper for Etdrk2 {
    fn describe(&self) -> &'static str {
        "second-order exponential Runge-Kutta"
    }

    fn order(&self) -> u32 {
        2
    }

    fn step(&self, model: &Model, eta: &Field, dt: f64, stats: &mut SolverStats) -> Result<Field, EvolutionError> {
        check_dt(dt)?;
        let n0 = model.nonlinear_remainder(eta, stats)?;
        let a = &model.propagate(eta, dt) + &model.phi_apply(&n0, dt, phi1);
        let na = model.nonlinear_remainder(&a, stats)?;
        Ok(&a + &model.phi_apply(&(&na - &n0), dt, phi2))
    }
}

pub fn steppers() -> Registry<dyn Stepper> {
    let mut r: Registry<dyn Stepper> = Registry::new("time stepper");
    r.register("etd1", Box::new(Etd1));
    r.register("etdrk2", Box::new(Etdrk2));
    r
}

/// Advance `steps` steps of size `dt` with the named scheme.
pub fn integrate(
    model: &Model,
    scheme: &str,
    eta0: &Field,
    dt: f64,
    steps: usize,
    stats: &mut SolverStats,
) -> Result<Field, EvolutionError> {
    let reg = steppers();
    let stepper = reg.get(scheme)?;
    let mut eta = eta0.clone();
    for _ in 0..steps {
        eta = stepper.step(model, &eta, dt, stats)?;
    }
    Ok(eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{sobolev_norm, PeriodicGrid};

    #[test]
    fn constants_are_steady() {
        let g = PeriodicGrid::standard(32).unwrap();
        let p = PhysicalParams::one_phase(1.0, 1.0, 1.0, 1.0);
        let r = rhs(&g.constant(0.3), &p).unwrap();
        assert!(r.max_abs() < 1e-14);
    }

    #[test]
    fn small_mode_linear_rate() {
        let g = PeriodicGrid::standard(32).unwrap();
        let p = PhysicalParams::one_phase(1.0, 1.0, 1.0, 1.0);
        let eta = g.sample(|x| 1e-6 * x.cos());
        let r = rhs(&eta, &p).unwrap();
        let expected = eta.scaled(-2.0);
        assert!(sobolev_norm(&(&r - &expected), 0.0) < 1e-4 * sobolev_norm(&expected, 0.0));
    }

    #[test]
    fn two_phase_flat_multiplier() {
        let g = PeriodicGrid::standard(32).unwrap();
        let p = PhysicalParams::two_phase(1.0, 1.0, 3.0, 2.0, 1.0, 0.5);
        let eta = g.sample(|x| 1e-6 * (2.0 * x).cos());
        let r = rhs(&eta, &p).unwrap();
        let expected = eta.scaled(-2.0 * (16.0 + 0.5) / 5.0);
        assert!(sobolev_norm(&(&r - &expected), 0.0) < 1e-4 * sobolev_norm(&expected, 0.0));
    }

    #[test]
    fn linear_only_step_is_the_semigroup() {
        let g = PeriodicGrid::standard(32).unwrap();
        let mut model = Model::new(PhysicalParams::one_phase(1.0, 1.0, 1.0, 1.0));
        model.linear_only = true;
        let eta = g.sample(|x| 0.1 * x.sin() + 0.05 * (3.0 * x).cos());
        let mut stats = SolverStats::default();
        for s in [&Etd1 as &dyn Stepper, &Etdrk2] {
            let out = s.step(&model, &eta, 0.01, &mut stats).unwrap();
            let exact = semigroup_apply(&eta, 0.01, 1.0, 5.0, 1.0, 1.0).unwrap();
            assert_eq!(out, exact);
        }
    }

    #[test]
    fn bad_step_and_scheme() {
        let g = PeriodicGrid::standard(16).unwrap();
        let model = Model::new(PhysicalParams::default());
        let mut stats = SolverStats::default();
        assert_eq!(
            Etd1.step(&model, &g.zeros(), 0.0, &mut stats).unwrap_err(),
            EvolutionError::NonPositiveStep(0.0)
        );
        assert!(matches!(
            integrate(&model, "rk4", &g.zeros(), 0.1, 1, &mut stats),
            Err(EvolutionError::UnknownScheme(_))
        ));
    }
}
