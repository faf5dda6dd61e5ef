use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EvolutionError, Model, SolverStats, Trajectory};
use crate::spectral::{phi1, phi2, sobolev_norm, Field};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardConfig {
    /// Time-grid spacing; defaults to the evolution default step.
    pub dt: Option<f64>,
    /// Relative `X^s` distance between iterates that ends the iteration.
    pub tol: f64,
    pub max_iter: usize,
    /// Consecutive growing distances that count as divergence.
    pub stall_window: usize,
    /// Sobolev index of the `X^s` proxy.
    pub s: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            dt: None,
            tol: 1e-9,
            max_iter: 40,
            stall_window: 3,
            s: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardOutcome {
    pub trajectory: Trajectory,
    pub iterations: usize,
    pub distances: Vec<f64>,
}

/// `sup_m ‖δ_m‖_{H^s} + (Σ_m dt ‖δ_m‖²_{H^{s+5/2}})^{1/2}` on a uniform grid.
fn x_norm(states: &[Field], dt: f64, s: f64) -> f64 {
    let sup = states.iter().map(|f| sobolev_norm(f, s)).fold(0.0, f64::max);
    let diss: f64 = states[..states.len() - 1]
        .iter()
        .map(|f| dt * sobolev_norm(f, s + 2.5).powi(2))
        .sum();
    sup + diss.sqrt()
}

/// Fixed-point iteration on the Duhamel formula
/// `η(t) = e^{-tL}η₀ + ∫₀ᵗ e^{-(t-τ)L} N(η(τ)) dτ`
/// over a uniform time grid. On each panel `N` is interpolated linearly and
/// the exponential is integrated exactly.
pub fn picard_solve(model: &Model, eta0: &Field, t_final: f64, cfg: &PicardConfig) -> Result<PicardOutcome, EvolutionError> {
    model.params.validate()?;
    if !(t_final > 0.0) {
        return Err(EvolutionError::NegativeTime(t_final));
    }
    let dt_max = cfg
        .dt
        .unwrap_or_else(|| super::default_dt(&model.params, eta0.grid().k_min()));
    let steps = (t_final / dt_max).ceil().max(1.0) as usize;
    let dt = t_final / steps as f64;
    let times: Vec<f64> = (0..=steps).map(|m| m as f64 * dt).collect();
    let free: Vec<Field> = times.iter().map(|&t| model.propagate(eta0, t)).collect();
    let sym = model.symbol();

    let mut stats = SolverStats::default();
    let mut current = free.clone();
    let mut distances: Vec<f64> = Vec::new();
    let mut growing = 0;
    loop {
        let evals: Vec<(Field, SolverStats)> = current
            .par_iter()
            .map(|eta| {
                let mut st = SolverStats::default();
                model.nonlinear_remainder(eta, &mut st).map(|n| (n, st))
            })
            .collect::<Result<_, EvolutionError>>()
            .map_err(|e| match e {
                // an iterate that leaves the subsystems' contraction regime
                EvolutionError::Dn(_) | EvolutionError::Pressure(_) => EvolutionError::NotContracting {
                    iterations: distances.len(),
                    last: distances.last().copied().unwrap_or(f64::NAN),
                    distances: distances.clone(),
                    cause: Some(e.to_string()),
                },
                other => other,
            })?;
        let mut nonlin = Vec::with_capacity(evals.len());
        for (n, st) in evals {
            stats.merge(&st);
            nonlin.push(n.to_spectrum());
        }

        let mut integral = eta0.to_spectrum().scaled(0.0);
        let mut next = vec![free[0].clone()];
        for m in 0..steps {
            let (a, b) = (&nonlin[m], &nonlin[m + 1]);
            let mut out = integral.clone();
            for (slot, c) in out.coeffs_mut().iter_mut().enumerate() {
                let z = dt * sym.at(a.grid().wavenumber(slot));
                let (p1, p2) = (phi1(z), phi2(z));
                *c = *c * (-z).exp() + (b.coeffs()[slot] * p2 + a.coeffs()[slot] * (p1 - p2)) * dt;
            }
            integral = out;
            next.push(&free[m + 1] + &integral.to_field());
        }

        let diff: Vec<Field> = next.iter().zip(&current).map(|(a, b)| a - b).collect();
        let num = x_norm(&diff, dt, cfg.s);
        let den = x_norm(&next, dt, cfg.s);
        let dist = if num == 0.0 { 0.0 } else { num / den };
        if let Some(&last) = distances.last() {
            growing = if dist >= last { growing + 1 } else { 0 };
        }
        distances.push(dist);
        current = next;
        if dist <= cfg.tol {
            break;
        }
        if !dist.is_finite() || growing >= cfg.stall_window || distances.len() >= cfg.max_iter {
            return Err(EvolutionError::NotContracting {
                iterations: distances.len(),
                last: dist,
                distances,
                cause: None,
            });
        }
    }

    let mut trajectory = Trajectory::new(vec![cfg.s]);
    for (t, eta) in times.into_iter().zip(current) {
        trajectory.push(t, eta, &model.params);
    }
    trajectory.stats = stats;
    Ok(PicardOutcome {
        trajectory,
        iterations: distances.len(),
        distances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::PhysicalParams;
    use crate::spectral::PeriodicGrid;

    #[test]
    fn zero_data_one_iteration() {
        let g = PeriodicGrid::standard(32).unwrap();
        let model = Model::new(PhysicalParams::one_phase(1.0, 1.0, 1.0, 1.0));
        let out = picard_solve(&model, &g.zeros(), 0.1, &PicardConfig::default()).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.trajectory.states.iter().all(|s| s.max_abs() == 0.0));
    }

    #[test]
    fn linear_flow_is_exact() {
        let g = PeriodicGrid::standard(32).unwrap();
        let mut model = Model::new(PhysicalParams::one_phase(1.0, 1.0, 1.0, 1.0));
        model.linear_only = true;
        let eta = g.sample(|x| x.sin());
        let out = picard_solve(&model, &eta, 0.2, &PicardConfig::default()).unwrap();
        let exact = model.propagate(&eta, 0.2);
        assert!((out.trajectory.last() - &exact).max_abs() < 1e-15);
    }
}
