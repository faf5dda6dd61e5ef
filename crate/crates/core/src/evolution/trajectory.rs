use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_dt, steppers, EvolutionError, Model, SolverStats, Stepper};
use crate::dn::Geometry;
use crate::params::{PhaseMode, PhysicalParams};
use crate::spectral::io::fmt17;
use crate::spectral::{lipschitz_norms, sobolev_norm, write_field_csv, Field};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub scheme: String,
    /// Defaults to [`default_dt`].
    pub dt: Option<f64>,
    /// Relative step-doubling error above which the step is halved.
    pub step_tol: Option<f64>,
    pub min_dt: f64,
    /// Sobolev indices `s` of the monitored norms.
    pub sobolev: Vec<f64>,
    /// Separation `h`: the run needs `dist(η₀, Γ) > 2h` and aborts at `dist <= h`.
    /// Defaults to half the initial distance.
    pub separation: Option<f64>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            scheme: "etdrk2".into(),
            dt: None,
            step_tol: None,
            min_dt: 1e-12,
            sobolev: vec![0.0, 2.0],
            separation: None,
        }
    }
}

/// `0.05 / (ν₁k₁⁵ + |ν₂|k₁ + 1)` at the lowest nonzero wavenumber.
pub fn default_dt(params: &PhysicalParams, k_min: f64) -> f64 {
    let s = params.linear_symbol();
    0.05 / (s.nu1 * k_min.powi(5) + s.nu2.abs() * k_min + 1.0)
}

/// Smallest distance from the interface to a rigid wall; infinite when
/// there is none.
pub fn boundary_distance(eta: &Field, params: &PhysicalParams) -> f64 {
    let mut d = f64::INFINITY;
    if let Geometry::Flat { depth } = params.lower {
        d = d.min(depth + eta.min());
    }
    if params.phase == PhaseMode::Two {
        if let Geometry::Flat { depth } = params.upper {
            d = d.min(depth - eta.max());
        }
    }
    d
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monitor {
    pub t: f64,
    pub mean: f64,
    /// `‖η‖_{H^s}` for each configured `s`
    pub norms: Vec<f64>,
    pub boundary_distance: f64,
    /// `W^{3/2,∞}` proxy
    pub lipschitz: f64,
    /// `Σ dt ‖η‖²_{H^{s+5/2}}` up to `t`, left-endpoint rule
    pub dissipation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AbortReason {
    SeparationLost { t: f64, distance: f64, h: f64 },
    Subsystem { t: f64, message: String },
    StepUnderflow { t: f64, dt: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Field>,
    pub monitors: Vec<Monitor>,
    pub sobolev: Vec<f64>,
    pub abort: Option<AbortReason>,
    pub stats: SolverStats,
}

impl Trajectory {
    pub(super) fn new(sobolev: Vec<f64>) -> Self {
        Self {
            times: Vec::new(),
            states: Vec::new(),
            monitors: Vec::new(),
            sobolev,
            abort: None,
            stats: SolverStats::default(),
        }
    }

    /// Appends a state and its monitors.
    pub(super) fn push(&mut self, t: f64, eta: Field, params: &PhysicalParams) {
        let dissipation = match (self.monitors.last(), self.states.last()) {
            (Some(m), Some(prev)) => {
                let dt = t - m.t;
                self.sobolev
                    .iter()
                    .zip(&m.dissipation)
                    .map(|(&s, &acc)| acc + dt * sobolev_norm(prev, s + 2.5).powi(2))
                    .collect()
            }
            _ => vec![0.0; self.sobolev.len()],
        };
        self.monitors.push(Monitor {
            t,
            mean: eta.mean(),
            norms: self.sobolev.iter().map(|&s| sobolev_norm(&eta, s)).collect(),
            boundary_distance: boundary_distance(&eta, params),
            lipschitz: lipschitz_norms(&eta).weighted,
            dissipation,
        });
        self.times.push(t);
        self.states.push(eta);
    }

    pub fn last(&self) -> &Field {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn completed(&self) -> bool {
        self.abort.is_none()
    }

    /// Discrete `Z^s` functional `sup_t ‖η‖_{H^s} + (Σ dt ‖η‖²_{H^{s+5/2}})^{1/2}`
    /// for each monitored `s`.
    pub fn z_norms(&self) -> Vec<f64> {
        let last = self.monitors.last().expect("non-empty trajectory");
        (0..self.sobolev.len())
            .map(|i| {
                let sup = self.monitors.iter().map(|m| m.norms[i]).fold(0.0, f64::max);
                sup + last.dissipation[i].sqrt()
            })
            .collect()
    }

    pub fn max_mean_drift(&self) -> f64 {
        let m0 = self.monitors[0].mean;
        self.monitors.iter().map(|m| (m.mean - m0).abs()).fold(0.0, f64::max)
    }

    pub fn write_monitors_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut header = vec!["t".to_string(), "mean".into()];
        for s in &self.sobolev {
            header.push(format!("h{s}"));
        }
        header.push("boundary_distance".into());
        header.push("lipschitz".into());
        for s in &self.sobolev {
            header.push(format!("dissipation{s}"));
        }
        writeln!(w, "{}", header.join(","))?;
        for m in &self.monitors {
            let mut row = vec![fmt17(m.t), fmt17(m.mean)];
            row.extend(m.norms.iter().map(|&v| fmt17(v)));
            row.push(fmt17(m.boundary_distance));
            row.push(fmt17(m.lipschitz));
            row.extend(m.dissipation.iter().map(|&v| fmt17(v)));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Writes `manifest.json`, `monitors.csv` and every `stride`-th state
    /// (plus the last) as `state_%06d.csv`.
    pub fn write_dir(&self, dir: &Path, manifest: &serde_json::Value, stride: usize) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        let mut m = BufWriter::new(File::create(dir.join("manifest.json"))?);
        serde_json::to_writer_pretty(&mut m, manifest)?;
        writeln!(m)?;
        m.flush()?;
        let mut w = BufWriter::new(File::create(dir.join("monitors.csv"))?);
        self.write_monitors_csv(&mut w)?;
        w.flush()?;
        let stride = stride.max(1);
        let last = self.states.len() - 1;
        for (i, s) in self.states.iter().enumerate() {
            if i % stride == 0 || i == last {
                let mut w = BufWriter::new(File::create(dir.join(format!("state_{i:06}.csv")))?);
                write_field_csv(&mut w, s)?;
                w.flush()?;
            }
        }
        Ok(())
    }
}

fn relative_h0(a: &Field, b: &Field) -> f64 {
    let d = sobolev_norm(&(a - b), 0.0);
    if d == 0.0 {
        0.0
    } else {
        d / sobolev_norm(b, 0.0).max(f64::MIN_POSITIVE)
    }
}

/// Integrates from `eta0` to time `t_final`.
///
/// Precondition failures are errors. Separation loss and subsystem failures
/// during the run stop the loop and return the partial trajectory with
/// [`Trajectory::abort`] set.
pub fn solve(model: &Model, eta0: &Field, t_final: f64, cfg: &SolveConfig) -> Result<Trajectory, EvolutionError> {
    model.params.validate()?;
    if !(t_final >= 0.0) {
        return Err(EvolutionError::NegativeTime(t_final));
    }
    let reg = steppers();
    let stepper = reg.get(&cfg.scheme)?;
    let mut dt = cfg.dt.unwrap_or_else(|| default_dt(&model.params, eta0.grid().k_min()));
    check_dt(dt)?;
    let d0 = boundary_distance(eta0, &model.params);
    let h = cfg.separation.unwrap_or(d0 / 2.0);
    if d0.is_finite() && !(d0 > 2.0 * h && h >= 0.0) {
        return Err(EvolutionError::SeparationPrecondition { distance: d0, h });
    }

    let mut traj = Trajectory::new(cfg.sobolev.clone());
    traj.push(0.0, eta0.clone(), &model.params);
    let mut t = 0.0;
    let mut eta = eta0.clone();
    while t < t_final {
        let remaining = t_final - t;
        let h_step = if remaining <= dt * (1.0 + 1e-12) { remaining } else { dt };
        match take_step(stepper, model, &eta, h_step, cfg, &mut traj.stats, t) {
            Ok((hs, next)) => {
                if hs < h_step {
                    dt = hs;
                }
                t = if hs == remaining { t_final } else { t + hs };
                eta = next;
                traj.push(t, eta.clone(), &model.params);
                if let Some(reason) = separation_check(&eta, &model.params, t, h) {
                    traj.abort = Some(reason);
                    break;
                }
            }
            Err(reason) => {
                traj.abort = Some(reason);
                break;
            }
        }
    }
    Ok(traj)
}

/// One accepted step and its size, halving under step doubling when configured.
fn take_step(
    stepper: &dyn Stepper,
    model: &Model,
    eta: &Field,
    h: f64,
    cfg: &SolveConfig,
    stats: &mut SolverStats,
    t: f64,
) -> Result<(f64, Field), AbortReason> {
    let fail = |message: String| AbortReason::Subsystem { t, message };
    let finite = |f: Field| {
        if f.is_finite() {
            Ok(f)
        } else {
            Err("non-finite state".to_string())
        }
    };
    let Some(tol) = cfg.step_tol else {
        let next = stepper.step(model, eta, h, stats).map_err(|e| e.to_string());
        return next.and_then(finite).map(|n| (h, n)).map_err(fail);
    };
    let mut hs = h;
    loop {
        let full = stepper.step(model, eta, hs, stats).map_err(|e| e.to_string());
        let half = stepper
            .step(model, eta, hs / 2.0, stats)
            .and_then(|m| stepper.step(model, &m, hs / 2.0, stats))
            .map_err(|e| e.to_string())
            .and_then(finite);
        match (full, half) {
            (Ok(f), Ok(hf)) if relative_h0(&f, &hf) <= tol => return Ok((hs, hf)),
            (Err(e), _) | (_, Err(e)) if hs / 2.0 < cfg.min_dt => return Err(fail(e)),
            _ if hs / 2.0 < cfg.min_dt => return Err(AbortReason::StepUnderflow { t, dt: hs }),
            _ => {
                stats.rejected_steps += 1;
                hs /= 2.0;
            }
        }
    }
}

fn separation_check(eta: &Field, params: &PhysicalParams, t: f64, h: f64) -> Option<AbortReason> {
    let distance = boundary_distance(eta, params);
    (distance.is_finite() && distance <= h).then_some(AbortReason::SeparationLost { t, distance, h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::PeriodicGrid;

    #[test]
    fn zero_data_stays_zero() {
        let g = PeriodicGrid::standard(32).unwrap();
        let model = Model::new(PhysicalParams::one_phase(1.0, 1.0, 1.0, 1.0));
        let traj = solve(&model, &g.zeros(), 0.1, &SolveConfig::default()).unwrap();
        assert!(traj.completed());
        assert!(traj.states.iter().all(|s| s.max_abs() == 0.0));
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*traj.times.last().unwrap(), 0.1);
    }

    #[test]
    fn separation_precondition() {
        let g = PeriodicGrid::standard(32).unwrap();
        let mut p = PhysicalParams::one_phase(1.0, 0.0, 1.0, 1.0);
        p.lower = Geometry::Flat { depth: 1.0 };
        let model = Model::new(p);
        let eta = g.sample(|x| 0.2 * x.sin());
        let cfg = SolveConfig {
            separation: Some(0.5),
            ..SolveConfig::default()
        };
        assert!(matches!(
            solve(&model, &eta, 0.1, &cfg),
            Err(EvolutionError::SeparationPrecondition { .. })
        ));
    }

    #[test]
    fn step_doubling_halves() {
        let g = PeriodicGrid::standard(32).unwrap();
        let model = Model::new(PhysicalParams::one_phase(1.0, 0.0, 1.0, 1.0));
        let eta = g.sample(|x| 0.05 * x.sin());
        let cfg = SolveConfig {
            dt: Some(0.05),
            step_tol: Some(1e-12),
            ..SolveConfig::default()
        };
        let traj = solve(&model, &eta, 0.05, &cfg).unwrap();
        assert!(traj.completed());
        assert!(traj.stats.rejected_steps > 0);
    }
}
