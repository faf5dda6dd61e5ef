use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{solve, EvolutionError, Model, SolveConfig, Trajectory};
use crate::dn::Geometry;
use crate::params::PhaseMode;
use crate::spectral::{sobolev_norm, Field};

/// Discrete `Z^s` distance between two trajectories on the same time grid.
pub fn z_distance(a: &Trajectory, b: &Trajectory, s: f64) -> Result<f64, EvolutionError> {
    if a.times != b.times {
        return Err(EvolutionError::Incompatible("trajectories use different time grids".into()));
    }
    let diff: Vec<Field> = a.states.iter().zip(&b.states).map(|(x, y)| x - y).collect();
    let sup = diff.iter().map(|d| sobolev_norm(d, s)).fold(0.0, f64::max);
    let diss: f64 = a
        .times
        .windows(2)
        .zip(&diff)
        .map(|(w, d)| (w[1] - w[0]) * sobolev_norm(d, s + 2.5).powi(2))
        .sum();
    Ok(sup + diss.sqrt())
}

fn require_complete(t: &Trajectory) -> Result<(), EvolutionError> {
    match &t.abort {
        None => Ok(()),
        Some(reason) => Err(EvolutionError::Incompatible(format!("run aborted: {reason:?}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub magnitude: f64,
    /// `‖η₁ - η₂‖_{Z^s} / ‖δη₀‖_{H^s}`; `None` marks an exact match with a zero perturbation.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub s: f64,
    pub rows: Vec<StabilityRow>,
    /// Largest over smallest finite ratio.
    pub variation: Option<f64>,
}

/// Runs `η₀` and `η₀ + m·d/‖d‖_{H^s}` for each magnitude `m`.
pub fn stability_experiment(
    model: &Model,
    eta0: &Field,
    direction: &Field,
    magnitudes: &[f64],
    t_final: f64,
    s: f64,
    cfg: &SolveConfig,
) -> Result<StabilityReport, EvolutionError> {
    let dnorm = sobolev_norm(direction, s);
    let runs: Vec<Trajectory> = std::iter::once(0.0)
        .chain(magnitudes.iter().copied())
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&m| {
            let start = if m == 0.0 || dnorm == 0.0 {
                eta0.clone()
            } else {
                eta0.axpy(m / dnorm, direction)
            };
            solve(model, &start, t_final, cfg)
        })
        .collect::<Result<_, _>>()?;
    for r in &runs {
        require_complete(r)?;
    }
    let base = &runs[0];
    let mut rows = Vec::new();
    for (&m, run) in magnitudes.iter().zip(&runs[1..]) {
        let dist = z_distance(base, run, s)?;
        let ratio = if dnorm == 0.0 || m == 0.0 {
            if dist == 0.0 {
                None
            } else {
                Some(f64::INFINITY)
            }
        } else {
            Some(dist / m)
        };
        rows.push(StabilityRow { magnitude: m, ratio });
    }
    let finite: Vec<f64> = rows.iter().filter_map(|r| r.ratio).filter(|r| r.is_finite()).collect();
    let variation = (!finite.is_empty()).then(|| {
        let hi = finite.iter().copied().fold(f64::MIN, f64::max);
        let lo = finite.iter().copied().fold(f64::MAX, f64::min);
        hi / lo
    });
    Ok(StabilityReport { s, rows, variation })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub lambda: usize,
    /// `λ⁵T`
    pub reference_time: f64,
    /// Relative H⁰ distance between `λ⁻¹η(λ⁵T, λx)` and the run from `λ⁻¹η₀(λx)`.
    pub defect: f64,
}

/// Compares a run with its image under `η ↦ λ⁻¹η(λ⁵t, λx)`. The reference
/// run uses the step `λ⁵dt` so both runs take the same number of steps.
pub fn scaling_experiment(
    model: &Model,
    eta0: &Field,
    lambda: usize,
    t_final: f64,
    cfg: &SolveConfig,
) -> Result<ScalingReport, EvolutionError> {
    let p = &model.params;
    if p.phase != PhaseMode::One || p.g != 0.0 || p.lower != Geometry::Bottomless {
        return Err(EvolutionError::Incompatible(
            "scaling needs a one-phase bottomless run without gravity".into(),
        ));
    }
    if lambda == 0 {
        return Err(EvolutionError::Incompatible("scale factor must be positive".into()));
    }
    let n = eta0.grid().n();
    let lam = lambda as f64;
    let squeeze = |f: &Field| {
        let v = (0..n).map(|j| f.values()[(lambda * j) % n] / lam).collect();
        Field::new(*f.grid(), v).expect("same grid")
    };
    let dt = cfg.dt.unwrap_or_else(|| super::default_dt(p, eta0.grid().k_min()));
    let scaled_cfg = SolveConfig {
        dt: Some(dt),
        ..cfg.clone()
    };
    let reference_cfg = SolveConfig {
        dt: Some(dt * lam.powi(5)),
        ..cfg.clone()
    };
    let reference_time = t_final * lam.powi(5);
    let scaled0 = squeeze(eta0);
    let (reference, scaled) = rayon::join(
        || solve(model, eta0, reference_time, &reference_cfg),
        || solve(model, &scaled0, t_final, &scaled_cfg),
    );
    let (reference, scaled) = (reference?, scaled?);
    require_complete(&reference)?;
    require_complete(&scaled)?;
    let image = squeeze(reference.last());
    let d = sobolev_norm(&(&image - scaled.last()), 0.0);
    let defect = if d == 0.0 { 0.0 } else { d / sobolev_norm(scaled.last(), 0.0) };
    Ok(ScalingReport {
        lambda,
        reference_time,
        defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::PhysicalParams;
    use crate::spectral::PeriodicGrid;

    #[test]
    fn unit_scale_has_no_defect() {
        let g = PeriodicGrid::standard(32).unwrap();
        let model = Model::new(PhysicalParams::one_phase(1.0, 0.0, 1.0, 1.0));
        let eta = g.sample(|x| 0.02 * x.sin());
        let r = scaling_experiment(&model, &eta, 1, 1e-3, &SolveConfig::default()).unwrap();
        assert_eq!(r.defect, 0.0);
    }

    #[test]
    fn zero_perturbation_is_an_exact_match() {
        let g = PeriodicGrid::standard(32).unwrap();
        let model = Model::new(PhysicalParams::one_phase(1.0, 0.0, 1.0, 1.0));
        let eta = g.sample(|x| 0.05 * x.sin());
        let r = stability_experiment(&model, &eta, &g.zeros(), &[1e-6], 0.05, 2.0, &SolveConfig::default()).unwrap();
        assert_eq!(r.rows[0].ratio, None);
        assert_eq!(r.variation, None);
    }

    #[test]
    fn gravity_breaks_scaling() {
        let g = PeriodicGrid::standard(32).unwrap();
        let model = Model::new(PhysicalParams::one_phase(1.0, 1.0, 1.0, 1.0));
        assert!(scaling_experiment(&model, &g.zeros(), 2, 1e-3, &SolveConfig::default()).is_err());
    }
}
