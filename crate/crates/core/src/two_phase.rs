//! Interface pressures of the two-phase problem.
//!
//! The traces `f^±` of the reduced pressures satisfy the jump condition
//! `f⁻ - f⁺ = σE(η) + gΔρ η` and continuity of the normal velocity
//! `(1/μ⁺)G⁺(η)f⁺ = (1/μ⁻)G⁻(η)f⁻`. Splitting `G⁻ = |D| + R⁻` and
//! `G⁺ = -|D| + R⁺` turns this into a fixed point for `f⁻`:
//!
//! ```text
//! f⁻ = u₀ + (μ⁻|D|⁻¹R⁺ f⁻ - μ⁺|D|⁻¹R⁻ f⁻) / (μ⁺ + μ⁻)
//! u₀ = -(μ⁻/(μ⁺+μ⁻)) |D|⁻¹ G⁺(η)(σE(η) + gΔρ η)
//! ```
//!
//! Pressures are defined up to a common constant; `f⁻` is kept mean-free.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dn::{dn_fixed_point, dn_upper, DnConfig, DnError, Phase};
use crate::elastic::{elastic_e, ElasticForm};
use crate::params::{PhaseMode, PhysicalParams};
use crate::registry::Registry;
use crate::spectral::{fractional_multiplier, sobolev_norm, Field, Multiplier, Spectrum};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PressureError {
    #[error("pressure solve needs two-phase parameters")]
    NotTwoPhase,
    #[error("{phase:?} Dirichlet-Neumann solve failed: {source}")]
    Dn {
        phase: Phase,
        #[source]
        source: DnError,
    },
    #[error("pressure fixed point is not contracting after {} iterations", .partial.iterations)]
    NotContracting { partial: Box<PressurePair> },
    #[error("dense pressure system is singular (condition {condition:e})")]
    Singular { condition: f64 },
    #[error("n_modes = {n_modes} exceeds n/2 = {half}")]
    TooManyModes { n_modes: usize, half: usize },
}

fn lower_err(source: DnError) -> PressureError {
    PressureError::Dn {
        phase: Phase::Lower,
        source,
    }
}

fn upper_err(source: DnError) -> PressureError {
    PressureError::Dn {
        phase: Phase::Upper,
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PressureConfig {
    /// Relative H⁰ change of `f⁻` that ends the iteration.
    pub tol: f64,
    pub max_iter: usize,
    pub stall_window: usize,
    /// Bound on `‖η‖_{H²}` below which the fixed point is trusted.
    pub gate: f64,
    pub dn: DnConfig,
}

impl Default for PressureConfig {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_iter: 50,
            stall_window: 5,
            gate: 0.1,
            dn: DnConfig {
                tol: 1e-12,
                ..DnConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PressureMethod {
    FixedPoint,
    Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressurePair {
    pub f_minus: Field,
    pub f_plus: Field,
    /// `G⁻(η)f⁻`, which drives the interface.
    pub g_minus_f: Field,
    /// `‖f⁻ - f⁺ - J‖ / ‖J‖` with `J = σE(η) + gΔρη`
    pub jump_residual: f64,
    /// `‖(1/μ⁺)G⁺f⁺ - (1/μ⁻)G⁻f⁻‖ / ‖(1/μ⁻)G⁻f⁻‖`
    pub flux_residual: f64,
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub method: PressureMethod,
    /// Condition number of the dense system.
    pub condition: Option<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureReport {
    pub method: PressureMethod,
    pub iterations: usize,
    pub converged: bool,
    pub residuals: Vec<f64>,
    pub jump_residual: f64,
    pub flux_residual: f64,
    pub condition: Option<f64>,
    pub mean_f_minus: f64,
}

impl PressurePair {
    pub fn report(&self) -> PressureReport {
        PressureReport {
            method: self.method,
            iterations: self.iterations,
            converged: self.converged,
            residuals: self.residuals.clone(),
            jump_residual: self.jump_residual,
            flux_residual: self.flux_residual,
            condition: self.condition,
            mean_f_minus: self.f_minus.mean(),
        }
    }
}

fn relative(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn h0(f: &Field) -> f64 {
    sobolev_norm(f, 0.0)
}

fn check_two_phase(params: &PhysicalParams) -> Result<(), PressureError> {
    if params.phase != PhaseMode::Two || params.mu_plus <= 0.0 {
        return Err(PressureError::NotTwoPhase);
    }
    Ok(())
}

/// `J = σE(η) + gΔρη`
pub fn pressure_jump(eta: &Field, params: &PhysicalParams) -> Field {
    elastic_e(eta, ElasticForm::A)
        .scaled(params.sigma)
        .axpy(params.g * params.delta_rho(), eta)
}

fn inverse_abs(f: &Field) -> Field {
    fractional_multiplier(f, Multiplier::InverseAbs)
}

fn forcing_from_jump(eta: &Field, jump: &Field, params: &PhysicalParams, dn: &DnConfig) -> Result<Field, PressureError> {
    let gp = dn_upper(eta, jump, params.upper, dn).map_err(upper_err)?;
    let w = params.mu_minus / (params.mu_plus + params.mu_minus);
    Ok(inverse_abs(&gp.gf).scaled(-w))
}

/// The forcing `u₀` of the fixed point, mean-free.
pub fn pressure_forcing(eta: &Field, params: &PhysicalParams, cfg: &PressureConfig) -> Result<Field, PressureError> {
    check_two_phase(params)?;
    forcing_from_jump(eta, &pressure_jump(eta, params), params, &cfg.dn)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressureResiduals {
    pub jump: f64,
    pub flux: f64,
    /// `G⁻(η)f⁻`
    pub g_minus_f: Field,
}

/// Relative jump and flux residuals of a candidate pair.
pub fn pressure_residuals(
    eta: &Field,
    f_minus: &Field,
    f_plus: &Field,
    params: &PhysicalParams,
    dn: &DnConfig,
) -> Result<PressureResiduals, PressureError> {
    check_two_phase(params)?;
    let jump = pressure_jump(eta, params);
    let jump_res = relative(h0(&(&(f_minus - f_plus) - &jump)), h0(&jump));
    let (gm, gp) = rayon::join(
        || dn_fixed_point(eta, f_minus, params.lower, dn),
        || dn_upper(eta, f_plus, params.upper, dn),
    );
    let gm = gm.map_err(lower_err)?.gf;
    let gp = gp.map_err(upper_err)?.gf;
    let lower_flux = gm.scaled(1.0 / params.mu_minus);
    let upper_flux = gp.scaled(1.0 / params.mu_plus);
    Ok(PressureResiduals {
        jump: jump_res,
        flux: relative(h0(&(&upper_flux - &lower_flux)), h0(&lower_flux)),
        g_minus_f: gm,
    })
}

/// Reconstructs `f⁺` and both residuals from a candidate `f⁻`.
fn finish(
    eta: &Field,
    f_minus: Field,
    jump: &Field,
    params: &PhysicalParams,
    dn: &DnConfig,
) -> Result<(Field, Field, f64, f64), PressureError> {
    let f_plus = &f_minus - jump;
    let r = pressure_residuals(eta, &f_minus, &f_plus, params, dn)?;
    Ok((f_plus, r.g_minus_f, r.jump, r.flux))
}

fn remove_mean(f: &Field) -> Field {
    let m = f.mean();
    f.map(|v| v - m)
}

/// Picard iteration for `f⁻`.
pub fn pressure_fixed_point(eta: &Field, params: &PhysicalParams, cfg: &PressureConfig) -> Result<PressurePair, PressureError> {
    check_two_phase(params)?;
    let jump = pressure_jump(eta, params);
    let u0 = forcing_from_jump(eta, &jump, params, &cfg.dn)?;
    let total = params.mu_plus + params.mu_minus;
    let (wp, wm) = (params.mu_minus / total, params.mu_plus / total);

    let mut phi = u0.clone();
    let mut residuals = Vec::new();
    let mut converged = false;
    let mut stalled = 0;
    while residuals.len() < cfg.max_iter {
        let (rm, rp) = rayon::join(
            || dn_fixed_point(eta, &phi, params.lower, &cfg.dn),
            || dn_upper(eta, &phi, params.upper, &cfg.dn),
        );
        let rm = rm.map_err(lower_err)?.remainder;
        let rp = rp.map_err(upper_err)?.remainder;
        let correction = inverse_abs(&rp.scaled(wp).axpy(-wm, &rm));
        let next = &u0 + &correction;
        let res = relative(h0(&(&next - &phi)), h0(&next));
        phi = next;
        if let Some(&last) = residuals.last() {
            stalled = if res >= last { stalled + 1 } else { 0 };
        }
        residuals.push(res);
        if res <= cfg.tol {
            converged = true;
            break;
        }
        if !res.is_finite() || stalled >= cfg.stall_window {
            break;
        }
    }
    let f_minus = remove_mean(&phi);
    let (f_plus, g_minus_f, jump_residual, flux_residual) = finish(eta, f_minus.clone(), &jump, params, &cfg.dn)?;
    let pair = PressurePair {
        f_minus,
        f_plus,
        g_minus_f,
        jump_residual,
        flux_residual,
        iterations: residuals.len(),
        residuals,
        method: PressureMethod::FixedPoint,
        condition: None,
        converged,
    };
    if converged {
        Ok(pair)
    } else {
        Err(PressureError::NotContracting { partial: Box::new(pair) })
    }
}

/// Real mean-free Fourier basis `cos kx, sin kx` for `1 <= k <= m`, plus
/// `cos(n x/2)` when `m = n/2`.
struct RealBasis {
    grid: crate::spectral::PeriodicGrid,
    modes: usize,
}

impl RealBasis {
    fn len(&self) -> usize {
        let half = self.grid.n() / 2;
        2 * self.modes - usize::from(self.modes == half)
    }

    /// Mode index and whether the entry is the sine part.
    fn entry(&self, j: usize) -> (usize, bool) {
        (j / 2 + 1, j % 2 == 1)
    }

    fn field(&self, j: usize) -> Field {
        let (k, sine) = self.entry(j);
        let kk = k as f64 * self.grid.k_min();
        if sine {
            self.grid.sample(|x| (kk * x).sin())
        } else {
            self.grid.sample(|x| (kk * x).cos())
        }
    }

    fn coefficients(&self, f: &Field) -> DVector<f64> {
        let s = f.to_spectrum();
        let half = self.grid.n() / 2;
        DVector::from_fn(self.len(), |j, _| {
            let (k, sine) = self.entry(j);
            let c = s.coeffs()[k];
            match (sine, k == half) {
                (false, true) => c.re,
                (false, false) => 2.0 * c.re,
                (true, _) => -2.0 * c.im,
            }
        })
    }

    fn synthesize(&self, c: &DVector<f64>) -> Field {
        let mut s = Spectrum::zeros(self.grid);
        let n = self.grid.n();
        let half = n / 2;
        for j in 0..self.len() {
            let (k, sine) = self.entry(j);
            let coeffs = s.coeffs_mut();
            if k == half {
                coeffs[k].re += c[j];
            } else if sine {
                coeffs[k].im -= 0.5 * c[j];
                coeffs[n - k].im += 0.5 * c[j];
            } else {
                coeffs[k].re += 0.5 * c[j];
                coeffs[n - k].re += 0.5 * c[j];
            }
        }
        s.to_field()
    }
}

/// Dense Galerkin solve on the first `n_modes` Fourier modes; `None` uses all.
pub fn pressure_oracle(
    eta: &Field,
    params: &PhysicalParams,
    n_modes: Option<usize>,
    cfg: &PressureConfig,
) -> Result<PressurePair, PressureError> {
    check_two_phase(params)?;
    let grid = *eta.grid();
    let half = grid.n() / 2;
    let modes = n_modes.unwrap_or(half);
    if modes > half {
        return Err(PressureError::TooManyModes { n_modes: modes, half });
    }
    let basis = RealBasis { grid, modes };
    let m = basis.len();
    let columns: Vec<(DVector<f64>, DVector<f64>)> = (0..m)
        .into_par_iter()
        .map(|j| {
            let b = basis.field(j);
            let gm = dn_fixed_point(eta, &b, params.lower, &cfg.dn).map_err(lower_err)?;
            let gp = dn_upper(eta, &b, params.upper, &cfg.dn).map_err(upper_err)?;
            Ok((basis.coefficients(&gm.gf), basis.coefficients(&gp.gf)))
        })
        .collect::<Result<_, PressureError>>()?;
    let mut gm = DMatrix::zeros(m, m);
    let mut gp = DMatrix::zeros(m, m);
    for (j, (cm, cp)) in columns.iter().enumerate() {
        gm.set_column(j, cm);
        gp.set_column(j, cp);
    }

    // (1/μ⁻)G⁻ f⁻ = (1/μ⁺)G⁺ (f⁻ - J)
    let jump = pressure_jump(eta, params);
    let system = gm / params.mu_minus - &gp / params.mu_plus;
    let rhs = -(&gp * basis.coefficients(&jump)) / params.mu_plus;
    let sv = system.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if m > 0 && !(condition < 1e14) {
        return Err(PressureError::Singular { condition });
    }
    let coeffs = if m == 0 {
        DVector::zeros(0)
    } else {
        system.lu().solve(&rhs).ok_or(PressureError::Singular { condition })?
    };
    let f_minus = remove_mean(&basis.synthesize(&coeffs));
    let (f_plus, g_minus_f, jump_residual, flux_residual) = finish(eta, f_minus.clone(), &jump, params, &cfg.dn)?;
    Ok(PressurePair {
        f_minus,
        f_plus,
        g_minus_f,
        jump_residual,
        flux_residual,
        iterations: 1,
        residuals: Vec::new(),
        method: PressureMethod::Dense,
        condition: Some(condition),
        converged: true,
    })
}

/// A way of solving for the interface pressures.
pub trait PressureSolver: Send + Sync {
    fn describe(&self) -> &'static str;
    fn solve(&self, eta: &Field, params: &PhysicalParams) -> Result<PressurePair, PressureError>;
}

pub struct FixedPointPressure(pub PressureConfig);

impl PressureSolver for FixedPointPressure {
    fn describe(&self) -> &'static str {
        "Picard iteration on the lower pressure"
    }

    fn solve(&self, eta: &Field, params: &PhysicalParams) -> Result<PressurePair, PressureError> {
        pressure_fixed_point(eta, params, &self.0)
    }
}

pub struct DensePressure {
    pub cfg: PressureConfig,
    pub n_modes: Option<usize>,
}

impl PressureSolver for DensePressure {
    fn describe(&self) -> &'static str {
        "dense Galerkin solve on a Fourier basis"
    }

    fn solve(&self, eta: &Field, params: &PhysicalParams) -> Result<PressurePair, PressureError> {
        pressure_oracle(eta, params, self.n_modes, &self.cfg)
    }
}

pub fn pressure_solvers(cfg: &PressureConfig) -> Registry<dyn PressureSolver> {
    let mut r: Registry<dyn PressureSolver> = Registry::new("pressure solver");
    r.register("fixed_point", Box::new(FixedPointPressure(cfg.clone())));
    r.register(
        "dense",
        Box::new(DensePressure {
            cfg: cfg.clone(),
            n_modes: None,
        }),
    );
    r
}

/// Pressures for the evolution: the fixed point inside the smallness gate,
/// the dense solve outside it.
pub fn gated_pressure(eta: &Field, params: &PhysicalParams, cfg: &PressureConfig) -> Result<PressurePair, PressureError> {
    if sobolev_norm(eta, 2.0) < cfg.gate {
        pressure_fixed_point(eta, params, cfg)
    } else {
        pressure_oracle(eta, params, None, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::PeriodicGrid;

    fn params() -> PhysicalParams {
        PhysicalParams::two_phase(1.0, 1.0, 1.0, 1.0, 1.0, 0.0)
    }

    fn cfg() -> PressureConfig {
        PressureConfig {
            dn: DnConfig {
                levels: Some(32),
                ..PressureConfig::default().dn
            },
            ..PressureConfig::default()
        }
    }

    #[test]
    fn flat_interface_gives_zero() {
        let g = PeriodicGrid::standard(32).unwrap();
        let p = pressure_fixed_point(&g.zeros(), &params(), &cfg()).unwrap();
        assert_eq!(p.iterations, 1);
        assert_eq!(p.f_minus.max_abs(), 0.0);
        assert_eq!(p.f_plus.max_abs(), 0.0);
    }

    #[test]
    fn small_mode_first_order() {
        let g = PeriodicGrid::standard(32).unwrap();
        let eta = g.sample(|x| 1e-4 * x.cos());
        let p = pressure_fixed_point(&eta, &params(), &cfg()).unwrap();
        let expected = g.sample(|x| 1e-4 * x.cos());
        assert!((&p.f_minus - &expected).max_abs() < 1e-4 * 1e-3);
        assert!(p.jump_residual < 1e-9);
        assert!(p.flux_residual < 1e-6, "{}", p.flux_residual);
    }

    #[test]
    fn basis_round_trip() {
        let g = PeriodicGrid::standard(16).unwrap();
        let f = g.sample(|x| x.sin() + 0.3 * (3.0 * x).cos() + 0.1 * (8.0 * x).cos());
        let b = RealBasis { grid: g, modes: 8 };
        assert_eq!(b.len(), 15);
        let back = b.synthesize(&b.coefficients(&f));
        assert!((&back - &f).max_abs() < 1e-14);
    }

    #[test]
    fn dense_matches_fixed_point() {
        let g = PeriodicGrid::standard(32).unwrap();
        let eta = g.sample(|x| 1e-3 * (2.0 * x).sin());
        let fp = pressure_fixed_point(&eta, &params(), &cfg()).unwrap();
        let dense = pressure_oracle(&eta, &params(), None, &cfg()).unwrap();
        let rel = h0(&(&fp.f_minus - &dense.f_minus)) / h0(&dense.f_minus);
        assert!(rel < 1e-8, "{rel}");
        assert!(dense.condition.unwrap() > 1.0);
    }

    #[test]
    fn one_phase_is_rejected() {
        let g = PeriodicGrid::standard(16).unwrap();
        let p = PhysicalParams::one_phase(1.0, 0.0, 1.0, 1.0);
        assert_eq!(
            pressure_fixed_point(&g.zeros(), &p, &cfg()).unwrap_err(),
            PressureError::NotTwoPhase
        );
    }
}
