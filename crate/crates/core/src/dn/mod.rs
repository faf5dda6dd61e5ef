//! Dirichlet–Neumann operators of the fluid domains below and above the
//! interface.
//!
//! The lower domain is flattened by `y = ϱ(x,z) = z + H(x,z)`, where `H` is
//! the harmonic lift of η (`e^{z|D|}η` for infinite depth). The flattened
//! potential `v` satisfies
//!
//! ```text
//! (∂_z + |D|)(∂_z - |D|) v = ∂_z Q_a[v] + |D| Q_b[v]
//! Q_a = H_x v_x - ((H_x² - a)/(1 + a)) v_z
//! Q_b = |D|^{-1}∂_x (H_x v_z - a v_x),          a = ∂_z H
//! ```
//!
//! Writing `w = P - |D|v`, with `P = v_z - Q_a` the conormal flux, gives two
//! first-order sweeps per Fourier mode κ:
//!
//! ```text
//! w' = -κ w + κ (Q_b - Q_a)     upward from the bottom
//! v' =  κ v + w + Q_a           downward from v(0) = f
//! ```
//!
//! and `G⁻(η)f = P(0) = |D|f + w(0)`. Both sweeps are exponential integrators
//! with sources interpolated linearly between levels, and the sources are
//! iterated to a fixed point.

mod oracle;

pub use oracle::{oracle_dn, oracle_dn_richardson, OracleError, OracleResolution};

use std::io::{self, Write};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::registry::Registry;
use crate::spectral::io::fmt17;
use crate::spectral::{lipschitz_norms, phi1, phi2, sobolev_norm, Field, PeriodicGrid, Spectrum};

/// Shape of the fluid region on one side of the interface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Geometry {
    /// Unbounded fluid.
    Bottomless,
    /// Rigid flat wall at distance `depth` from the mean interface level.
    Flat { depth: f64 },
}

impl Geometry {
    pub fn depth(&self) -> Option<f64> {
        match self {
            Geometry::Bottomless => None,
            Geometry::Flat { depth } => Some(*depth),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DnConfig {
    /// Relative change of the extension between sweeps that ends the iteration.
    pub tol: f64,
    pub max_iter: usize,
    /// Vertical nodes including `z = 0`; defaults to `max(64, n/2)`.
    pub levels: Option<usize>,
    /// Truncation depth for bottomless domains; defaults to `3 ln(10⁶)/k_min`.
    pub depth: Option<f64>,
    /// Smallness threshold for the `W^{3/2,∞}` proxy of η (advisory).
    pub gate: f64,
    /// Largest acceptable truncation tail `e^{-Z k_min}`.
    pub tail_tol: f64,
    /// Consecutive non-decreasing residuals that count as divergence.
    pub stall_window: usize,
}

impl Default for DnConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 60,
            levels: None,
            depth: None,
            gate: 0.3,
            tail_tol: 1e-6,
            stall_window: 5,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DnError {
    #[error("flattening is near-singular: min(1 + ∂_z H) = {min} < 0.1")]
    DegenerateJacobian { min: f64 },
    #[error("fixed point is not contracting after {iterations} iterations (last residual {last})")]
    NotContracting { iterations: usize, last: f64, residuals: Vec<f64> },
    #[error("depth truncation tail {tail} exceeds {tol}")]
    DepthTruncationInsufficient { tail: f64, tol: f64 },
    #[error("invalid geometry: {0}")]
    BadGeometry(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Vertical nodes `0 = z_0 > z_1 > … > z_M = -Z`, clustered toward the
/// interface, with trapezoid weights.
#[derive(Debug, Clone, PartialEq)]
pub struct VerticalGrid {
    z: Vec<f64>,
    weights: Vec<f64>,
}

impl VerticalGrid {
    /// `levels` nodes whose spacing starts at `first` and grows geometrically
    /// to reach `depth`; uniform when `first` is already too coarse.
    pub fn geometric(first: f64, depth: f64, levels: usize) -> Self {
        assert!(levels >= 2 && depth > 0.0 && first > 0.0);
        let m = levels - 1;
        let steps: Vec<f64> = if first * m as f64 >= depth {
            vec![depth / m as f64; m]
        } else {
            let total = |r: f64| first * (r.powi(m as i32) - 1.0) / (r - 1.0);
            let (mut lo, mut hi) = (1.0 + 1e-12, 2.0);
            while total(hi) < depth {
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if total(mid) < depth {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let r = 0.5 * (lo + hi);
            (0..m).map(|i| first * r.powi(i as i32)).collect()
        };
        let mut z = Vec::with_capacity(levels);
        z.push(0.0);
        let mut acc = 0.0;
        for s in &steps {
            acc += s;
            z.push(-acc);
        }
        z[m] = -depth;
        let mut weights = vec![0.0; levels];
        for i in 0..m {
            let d = z[i] - z[i + 1];
            weights[i] += 0.5 * d;
            weights[i + 1] += 0.5 * d;
        }
        Self { z, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.z
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn levels(&self) -> usize {
        self.z.len()
    }

    pub fn depth(&self) -> f64 {
        -self.z[self.z.len() - 1]
    }

    fn step(&self, i: usize) -> f64 {
        self.z[i] - self.z[i + 1]
    }
}

fn default_depth(grid: &PeriodicGrid) -> f64 {
    3.0 * 1e6f64.ln() / grid.k_min()
}

fn vertical_grid(grid: &PeriodicGrid, geometry: Geometry, cfg: &DnConfig) -> Result<VerticalGrid, DnError> {
    let depth = match geometry {
        Geometry::Bottomless => cfg.depth.unwrap_or_else(|| default_depth(grid)),
        Geometry::Flat { depth } => depth,
    };
    if !(depth.is_finite() && depth > 0.0) {
        return Err(DnError::BadGeometry(format!("depth must be positive, got {depth}")));
    }
    let levels = cfg.levels.unwrap_or_else(|| (grid.n() / 2).max(64)).max(2);
    // first step L/(2n) at 64 levels, refined in proportion to the level count
    let first = grid.length() / (2.0 * grid.n() as f64) * 64.0 / levels as f64;
    Ok(VerticalGrid::geometric(first, depth, levels))
}

/// `e^{zκ}` (infinite depth) or `cosh((z+h)κ)/cosh(hκ)` (flat bottom at `-h`).
fn lift_factor(geometry: Geometry, z: f64, kappa: f64) -> f64 {
    match geometry {
        Geometry::Bottomless => (z * kappa).exp(),
        Geometry::Flat { depth: h } => {
            (z * kappa).exp() * (1.0 + (-2.0 * kappa * (z + h)).exp()) / (1.0 + (-2.0 * kappa * h).exp())
        }
    }
}

/// Harmonic extension of `f` at every node of `zgrid`: Dirichlet data on top,
/// decay (infinite depth) or zero normal derivative (flat bottom) below.
pub fn harmonic_lift(f: &Field, zgrid: &VerticalGrid, geometry: Geometry) -> Vec<Field> {
    let s = f.to_spectrum();
    zgrid
        .nodes()
        .iter()
        .map(|&z| s.apply_real_symbol(|k| lift_factor(geometry, z, k.abs())).to_field())
        .collect()
}

/// Lift of η used to flatten the domain, `H(·,0) = η` and `H(·,-h) = 0` for a
/// flat bottom. Returns `(H, ∂_z H)` spectra at depth `z`.
fn geometry_lift(eta: &Spectrum, geometry: Geometry, z: f64) -> (Spectrum, Spectrum) {
    match geometry {
        Geometry::Bottomless => (
            eta.apply_real_symbol(|k| (z * k.abs()).exp()),
            eta.apply_real_symbol(|k| k.abs() * (z * k.abs()).exp()),
        ),
        Geometry::Flat { depth: h } => {
            let value = |k: f64| {
                let k = k.abs();
                if k == 0.0 {
                    1.0 + z / h
                } else {
                    (z * k).exp() * -(-2.0 * k * (z + h)).exp_m1() / -(-2.0 * k * h).exp_m1()
                }
            };
            let slope = |k: f64| {
                let k = k.abs();
                if k == 0.0 {
                    1.0 / h
                } else {
                    k * (z * k).exp() * (1.0 + (-2.0 * k * (z + h)).exp()) / -(-2.0 * k * h).exp_m1()
                }
            };
            (eta.apply_real_symbol(value), eta.apply_real_symbol(slope))
        }
    }
}

/// Flattened harmonic extension on the `(x, z)` product grid.
#[derive(Debug, Clone)]
pub struct ExtensionState {
    pub zgrid: VerticalGrid,
    /// `v(·, z_i)` for every level
    pub v: Vec<Field>,
    /// `H(·, z_i)` for every level
    pub lift: Vec<Field>,
    pub residuals: Vec<f64>,
}

impl ExtensionState {
    /// CSV `x,z,v`, one row per grid point.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,z,v")?;
        for (z, v) in self.zgrid.nodes().iter().zip(&self.v) {
            for (j, val) in v.values().iter().enumerate() {
                writeln!(w, "{},{},{}", fmt17(v.grid().node(j)), fmt17(*z), fmt17(*val))?;
            }
        }
        Ok(())
    }
}

/// Which side of the interface a result belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DnResult {
    pub phase: Phase,
    /// `G^±(η)f`
    pub gf: Field,
    /// `R^±(η)f = G^±(η)f ± |D|f`
    pub remainder: Field,
    pub iterations: usize,
    pub converged: bool,
    pub residuals: Vec<f64>,
    pub tail_bound: f64,
    /// `W^{3/2,∞}` proxy of the η that was actually flattened
    pub gate_proxy: f64,
    pub gate_exceeded: bool,
}

/// JSON summary of a solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DnReport {
    pub phase: Phase,
    pub iterations: usize,
    pub converged: bool,
    pub residuals: Vec<f64>,
    pub tail_bound: f64,
    pub gate_proxy: f64,
    pub gate_exceeded: bool,
    pub mean_gf: f64,
}

impl DnResult {
    pub fn report(&self) -> DnReport {
        DnReport {
            phase: self.phase,
            iterations: self.iterations,
            converged: self.converged,
            residuals: self.residuals.clone(),
            tail_bound: self.tail_bound,
            gate_proxy: self.gate_proxy,
            gate_exceeded: self.gate_exceeded,
            mean_gf: self.gf.mean(),
        }
    }
}

/// Per-interval exponential-integrator weights for every mode.
struct Panel {
    decay: Vec<f64>,
    p1: Vec<f64>,
    p2: Vec<f64>,
}

struct Workspace<'a> {
    grid: PeriodicGrid,
    geometry: Geometry,
    zgrid: &'a VerticalGrid,
    kappa: Vec<f64>,
    wavenumber: Vec<f64>,
    panels: Vec<Panel>,
    hx: Vec<Field>,
    a: Vec<Field>,
}

impl Workspace<'_> {
    /// Both sweeps for fixed sources. Returns `(v̂, ŵ)` per level.
    fn sweep(&self, f: &Spectrum, qa: &[Vec<Complex64>], qb: &[Vec<Complex64>]) -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
        let n = self.grid.n();
        let levels = self.zgrid.levels();
        let m = levels - 1;
        let zero = Complex64::new(0.0, 0.0);
        let mut w = vec![vec![zero; n]; levels];
        for i in (0..m).rev() {
            let p = &self.panels[i];
            for s in 0..n {
                let x = self.kappa[s] * self.zgrid.step(i);
                let lo = qb[i + 1][s] - qa[i + 1][s];
                let hi = qb[i][s] - qa[i][s];
                w[i][s] = w[i + 1][s] * p.decay[s] + (lo * p.p1[s] + (hi - lo) * p.p2[s]) * x;
            }
        }
        let mut v = vec![vec![zero; n]; levels];
        v[0].copy_from_slice(f.coeffs());
        for i in 0..m {
            let p = &self.panels[i];
            let d = self.zgrid.step(i);
            for s in 0..n {
                let g0 = w[i][s] + qa[i][s];
                let g1 = w[i + 1][s] + qa[i + 1][s];
                v[i + 1][s] = v[i][s] * p.decay[s] - (g0 * (p.p1[s] - p.p2[s]) + g1 * p.p2[s]) * d;
            }
        }
        if let Geometry::Flat { depth: h } = self.geometry {
            // enforce P(-h) = w + κv = 0 with the exact homogeneous solution
            // w = c e^{-κ(z+h)}, v = -(e^{-κ(z+h)} - e^{κ(z-h)})/(2κ)
            for s in 0..n {
                let k = self.kappa[s];
                if k == 0.0 {
                    continue;
                }
                let c = -2.0 * k * v[m][s] / (1.0 + (-2.0 * k * h).exp());
                for (i, &z) in self.zgrid.nodes().iter().enumerate() {
                    let up = (-k * (z + h)).exp();
                    w[i][s] += c * up;
                    v[i][s] += c * (-(up - (k * (z - h)).exp()) / (2.0 * k));
                }
                v[0][s] = f.coeffs()[s];
            }
        }
        (v, w)
    }

    /// Source terms from the current extension. `v_z` is recovered pointwise
    /// from the flux `P = κv + w`.
    fn sources(&self, v: &[Vec<Complex64>], w: &[Vec<Complex64>]) -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
        let grid = self.grid;
        let nyq = grid.n() / 2;
        (0..self.zgrid.levels())
            .into_par_iter()
            .map(|i| {
                let vs = Spectrum::new(grid, v[i].clone()).expect("level length");
                let vx = vs
                    .apply_symbol(true, |k| Complex64::new(0.0, k))
                    .to_field();
                let flux: Vec<Complex64> = v[i]
                    .iter()
                    .zip(&w[i])
                    .zip(&self.kappa)
                    .map(|((vv, ww), k)| vv * k + ww)
                    .collect();
                let flux = Spectrum::new(grid, flux).expect("level length").to_field();
                let (hx, a) = (self.hx[i].values(), self.a[i].values());
                let mut qa = Vec::with_capacity(grid.n());
                let mut inner = Vec::with_capacity(grid.n());
                for j in 0..grid.n() {
                    let (h, aj, vxj) = (hx[j], a[j], vx.values()[j]);
                    let vz = (1.0 + aj) * (flux.values()[j] + h * vxj) / (1.0 + h * h);
                    qa.push(h * vxj - (h * h - aj) / (1.0 + aj) * vz);
                    inner.push(h * vz - aj * vxj);
                }
                let qa = Field::new(grid, qa).expect("level length").to_spectrum();
                let mut qb = Field::new(grid, inner).expect("level length").to_spectrum();
                for (s, c) in qb.coeffs_mut().iter_mut().enumerate() {
                    let k = self.wavenumber[s];
                    *c = if s == nyq || k == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        *c * Complex64::new(0.0, k.signum())
                    };
                }
                (qa.coeffs().to_vec(), qb.coeffs().to_vec())
            })
            .unzip()
    }
}

fn h1_distance(a: &[Vec<Complex64>], b: &[Vec<Complex64>], k: &[f64]) -> (f64, f64) {
    let mut diff = 0.0;
    let mut size = 0.0;
    for (la, lb) in a.iter().zip(b) {
        for ((ca, cb), kk) in la.iter().zip(lb).zip(k) {
            let wgt = 1.0 + kk * kk;
            diff += wgt * (ca - cb).norm_sqr();
            size += wgt * ca.norm_sqr();
        }
    }
    (diff.sqrt(), size.sqrt())
}

/// Solve for the lower-phase extension and `G⁻(η)f`.
pub fn dn_extension(eta: &Field, f: &Field, geometry: Geometry, cfg: &DnConfig) -> Result<(DnResult, ExtensionState), DnError> {
    if eta.grid() != f.grid() {
        return Err(DnError::GridMismatch);
    }
    let grid = *eta.grid();
    let zgrid = vertical_grid(&grid, geometry, cfg)?;
    let tail_bound = match geometry {
        Geometry::Bottomless => (-zgrid.depth() * grid.k_min()).exp(),
        Geometry::Flat { .. } => 0.0,
    };
    if tail_bound > cfg.tail_tol {
        return Err(DnError::DepthTruncationInsufficient {
            tail: tail_bound,
            tol: cfg.tail_tol,
        });
    }
    if let Geometry::Flat { depth } = geometry {
        if eta.min() <= -depth {
            return Err(DnError::BadGeometry(format!(
                "interface reaches the bottom (min η = {}, depth {depth})",
                eta.min()
            )));
        }
    }
    let gate_proxy = lipschitz_norms(eta).weighted;
    let eta_s = eta.to_spectrum();
    let mut lift = Vec::with_capacity(zgrid.levels());
    let mut hx = Vec::with_capacity(zgrid.levels());
    let mut a = Vec::with_capacity(zgrid.levels());
    for &z in zgrid.nodes() {
        let (h, hz) = geometry_lift(&eta_s, geometry, z);
        hx.push(h.apply_symbol(true, |k| Complex64::new(0.0, k)).to_field());
        lift.push(h.to_field());
        a.push(hz.to_field());
    }
    let min_jac = a.iter().map(|f| 1.0 + f.min()).fold(f64::INFINITY, f64::min);
    if min_jac < 0.1 {
        return Err(DnError::DegenerateJacobian { min: min_jac });
    }
    let kappa: Vec<f64> = grid.wavenumbers().iter().map(|k| k.abs()).collect();
    let panels = (0..zgrid.levels() - 1)
        .map(|i| {
            let d = zgrid.step(i);
            Panel {
                decay: kappa.iter().map(|k| (-k * d).exp()).collect(),
                p1: kappa.iter().map(|k| phi1(k * d)).collect(),
                p2: kappa.iter().map(|k| phi2(k * d)).collect(),
            }
        })
        .collect();
    let ws = Workspace {
        grid,
        geometry,
        zgrid: &zgrid,
        kappa: kappa.clone(),
        wavenumber: grid.wavenumbers(),
        panels,
        hx,
        a,
    };
    let fs = f.to_spectrum();
    let zero = vec![vec![Complex64::new(0.0, 0.0); grid.n()]; zgrid.levels()];
    let (mut v, mut w) = ws.sweep(&fs, &zero, &zero);
    let mut residuals = Vec::new();
    let mut converged = false;
    let mut stalled = 0;
    for _ in 0..cfg.max_iter {
        let (qa, qb) = ws.sources(&v, &w);
        let (v_new, w_new) = ws.sweep(&fs, &qa, &qb);
        let (diff, size) = h1_distance(&v_new, &v, &kappa);
        let res = if size > 0.0 { diff / size } else { diff };
        v = v_new;
        w = w_new;
        if !res.is_finite() {
            residuals.push(res);
            return Err(DnError::NotContracting {
                iterations: residuals.len(),
                last: res,
                residuals,
            });
        }
        if let Some(&prev) = residuals.last() {
            if res >= prev {
                stalled += 1;
            } else {
                stalled = 0;
            }
        }
        residuals.push(res);
        if res < cfg.tol {
            converged = true;
            break;
        }
        if stalled >= cfg.stall_window {
            return Err(DnError::NotContracting {
                iterations: residuals.len(),
                last: res,
                residuals,
            });
        }
    }
    let mut gf = Spectrum::zeros(grid);
    for (s, c) in gf.coeffs_mut().iter_mut().enumerate() {
        *c = if kappa[s] == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            fs.coeffs()[s] * kappa[s] + w[0][s]
        };
    }
    let gf = gf.to_field();
    let remainder = &gf - &f.abs_d();
    let v_fields = v
        .into_iter()
        .map(|c| Spectrum::new(grid, c).expect("level length").to_field())
        .collect();
    let result = DnResult {
        phase: Phase::Lower,
        gf,
        remainder,
        iterations: residuals.len(),
        converged,
        residuals: residuals.clone(),
        tail_bound,
        gate_proxy,
        gate_exceeded: gate_proxy >= cfg.gate,
    };
    Ok((
        result,
        ExtensionState {
            zgrid,
            v: v_fields,
            lift,
            residuals,
        },
    ))
}

/// `G⁻(η)f` and `R⁻(η)f = G⁻(η)f - |D|f`.
pub fn dn_fixed_point(eta: &Field, f: &Field, geometry: Geometry, cfg: &DnConfig) -> Result<DnResult, DnError> {
    dn_extension(eta, f, geometry, cfg).map(|(r, _)| r)
}

/// `G⁺(η)f = -G⁻(-η)f`: reflecting `y ↦ -y` maps the upper fluid onto a lower
/// one while the shared upward normal flips sign. `geometry` describes the
/// upper fluid (a flat wall at height `depth`).
pub fn dn_upper(eta: &Field, f: &Field, geometry: Geometry, cfg: &DnConfig) -> Result<DnResult, DnError> {
    let lower = dn_fixed_point(&eta.scaled(-1.0), f, geometry, cfg)?;
    let gf = lower.gf.scaled(-1.0);
    let remainder = &gf + &f.abs_d();
    Ok(DnResult {
        phase: Phase::Upper,
        gf,
        remainder,
        ..lower
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeDifference {
    /// `G⁻(η₁)f - G⁻(η₂)f`
    pub difference: Field,
    /// `‖difference‖_{H⁰} / ‖η₁ - η₂‖_{H²}`, zero when the shapes coincide
    pub ratio: f64,
}

pub fn dn_shape_difference(
    eta1: &Field,
    eta2: &Field,
    f: &Field,
    geometry: Geometry,
    cfg: &DnConfig,
) -> Result<ShapeDifference, DnError> {
    let g1 = dn_fixed_point(eta1, f, geometry, cfg)?;
    let g2 = dn_fixed_point(eta2, f, geometry, cfg)?;
    let difference = &g1.gf - &g2.gf;
    let shape = sobolev_norm(&(eta1 - eta2), 2.0);
    let ratio = if shape == 0.0 {
        0.0
    } else {
        sobolev_norm(&difference, 0.0) / shape
    };
    Ok(ShapeDifference { difference, ratio })
}

/// A way of evaluating `G⁻(η)f`.
pub trait DnSolver: Send + Sync {
    fn describe(&self) -> &'static str;
    fn solve(&self, eta: &Field, f: &Field, geometry: Geometry) -> Result<Field, DnError>;
}

/// The flattening fixed point.
pub struct FixedPointSolver(pub DnConfig);

impl DnSolver for FixedPointSolver {
    fn describe(&self) -> &'static str {
        "spectral boundary-flattening fixed point"
    }

    fn solve(&self, eta: &Field, f: &Field, geometry: Geometry) -> Result<Field, DnError> {
        dn_fixed_point(eta, f, geometry, &self.0).map(|r| r.gf)
    }
}

/// Second-order finite differences at two resolutions with Richardson
/// extrapolation, interpolated back to the input grid.
pub struct FiniteDifferenceSolver(pub OracleResolution);

impl DnSolver for FiniteDifferenceSolver {
    fn describe(&self) -> &'static str {
        "finite-difference elliptic solve with Richardson extrapolation"
    }

    fn solve(&self, eta: &Field, f: &Field, geometry: Geometry) -> Result<Field, DnError> {
        let coarse = oracle_dn_richardson(eta, f, geometry, self.0)?;
        Ok(coarse.resampled(eta.grid().n()).expect("valid size"))
    }
}

pub fn dn_solvers(cfg: &DnConfig) -> Registry<dyn DnSolver> {
    let mut r: Registry<dyn DnSolver> = Registry::new("DN solver");
    r.register("fixed_point", Box::new(FixedPointSolver(cfg.clone())));
    r.register(
        "fd_oracle",
        Box::new(FiniteDifferenceSolver(OracleResolution { nx: 64, nz: 32 })),
    );
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> PeriodicGrid {
        PeriodicGrid::standard(64).unwrap()
    }

    #[test]
    fn vertical_grid_shape() {
        let g = VerticalGrid::geometric(0.01, 40.0, 64);
        assert_eq!(g.levels(), 64);
        assert_eq!(g.nodes()[0], 0.0);
        assert!((g.depth() - 40.0).abs() < 1e-9);
        assert!(g.nodes().windows(2).all(|p| p[1] < p[0]));
        assert!((g.step(0) - 0.01).abs() < 1e-9);
        assert!((g.weights().iter().sum::<f64>() - 40.0).abs() < 1e-9);
        let u = VerticalGrid::geometric(0.5, 1.0, 11);
        assert!((u.step(3) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn lift_examples() {
        let g = grid();
        let zg = VerticalGrid::geometric(0.1, 1.0, 11);
        let one = harmonic_lift(&g.constant(1.0), &zg, Geometry::Bottomless);
        assert!(one.iter().all(|l| (l - &g.constant(1.0)).max_abs() < 1e-14));
        let c = g.sample(f64::cos);
        let bottom = zg.levels() - 1;
        let inf = harmonic_lift(&c, &zg, Geometry::Bottomless);
        assert!((&inf[bottom] - &c.scaled((-1.0f64).exp())).max_abs() < 1e-14);
        let strip = harmonic_lift(&c, &zg, Geometry::Flat { depth: 1.0 });
        assert!((&strip[bottom] - &c.scaled(1.0 / 1.0f64.cosh())).max_abs() < 1e-14);
    }

    #[test]
    fn flat_interface() {
        let g = grid();
        let f = g.sample(|x| x.cos() + 0.3 * (3.0 * x).sin());
        let cfg = DnConfig::default();
        let r = dn_fixed_point(&g.zeros(), &f, Geometry::Bottomless, &cfg).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.converged);
        assert!((&r.gf - &f.abs_d()).max_abs() < 1e-13);
        assert!(r.remainder.max_abs() < 1e-13);
        let up = dn_upper(&g.zeros(), &f, Geometry::Bottomless, &cfg).unwrap();
        assert!((&up.gf + &f.abs_d()).max_abs() < 1e-13);
    }

    #[test]
    fn flat_strip_is_tanh() {
        let g = grid();
        let cfg = DnConfig::default();
        for (k, h) in [(1.0, 1.0), (2.0, 0.5), (5.0, 1.0)] {
            let f = g.sample(|x| (k * x).cos());
            let r = dn_fixed_point(&g.zeros(), &f, Geometry::Flat { depth: h }, &cfg).unwrap();
            let exact = f.scaled(k * (k * h).tanh());
            assert!((&r.gf - &exact).max_abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn constants_have_no_flux() {
        let g = grid();
        let eta = g.sample(|x| 0.1 * x.sin());
        let cfg = DnConfig::default();
        for geom in [Geometry::Bottomless, Geometry::Flat { depth: 1.5 }] {
            let r = dn_fixed_point(&eta, &g.constant(2.0), geom, &cfg).unwrap();
            assert!(r.gf.max_abs() < 1e-10);
            let r = dn_upper(&eta, &g.constant(2.0), geom, &cfg).unwrap();
            assert!(r.gf.max_abs() < 1e-10);
        }
    }

    #[test]
    fn curved_interface_converges_with_zero_mean() {
        let g = grid();
        let eta = g.sample(|x| 0.1 * x.sin());
        let f = g.sample(|x| (2.0 * x).cos());
        let r = dn_fixed_point(&eta, &f, Geometry::Bottomless, &DnConfig::default()).unwrap();
        assert!(r.converged);
        assert!(r.gf.mean().abs() < 1e-10);
        assert!(r.residuals.windows(2).all(|p| p[1] < p[0]));
    }

    #[test]
    fn degenerate_flattening_is_reported() {
        let g = grid();
        let eta = g.sample(|x| -1.5 * (4.0 * x).cos());
        let err = dn_fixed_point(&eta, &g.sample(f64::cos), Geometry::Bottomless, &DnConfig::default());
        assert!(matches!(err, Err(DnError::DegenerateJacobian { .. })));
    }

    #[test]
    fn shallow_truncation_is_reported() {
        let g = grid();
        let cfg = DnConfig {
            depth: Some(2.0),
            ..DnConfig::default()
        };
        let err = dn_fixed_point(&g.zeros(), &g.sample(f64::cos), Geometry::Bottomless, &cfg);
        assert!(matches!(err, Err(DnError::DepthTruncationInsufficient { .. })));
    }

    #[test]
    fn extension_dump() {
        let g = PeriodicGrid::standard(8).unwrap();
        let cfg = DnConfig {
            levels: Some(3),
            depth: Some(20.0),
            ..DnConfig::default()
        };
        let (_, state) = dn_extension(&g.zeros(), &g.sample(f64::cos), Geometry::Bottomless, &cfg).unwrap();
        let mut buf = Vec::new();
        state.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 3 * 8);
        assert!(text.starts_with("x,z,v\n"));
    }
}
