//! Dyadic Littlewood–Paley partition on a periodic grid.
//!
//! The cutoff χ equals 1 on `|ξ| ≤ 1`, vanishes on `|ξ| ≥ 2` and uses the
//! C^∞ transition `s(u) = e^{-1/u} / (e^{-1/u} + e^{-1/(1-u)})` in between.
//! Blocks are `P_0 = χ(D)` and `P_j = χ(D/2^j) - χ(D/2^{j-1})`; the last block
//! `J` is the first one whose outer cutoff covers every grid wavenumber, so
//! the blocks sum to the identity exactly.

use super::{Field, PeriodicGrid, Spectrum};

/// Order of the Zygmund seminorm in the `W^{1+ε,∞}` proxy.
pub const WEIGHTED_EPSILON: f64 = 0.5;

fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / u).exp();
    let b = (-1.0 / (1.0 - u)).exp();
    a / (a + b)
}

/// χ(t) for `t ≥ 0`.
pub fn cutoff(t: f64) -> f64 {
    let t = t.abs();
    if t <= 1.0 {
        1.0
    } else if t >= 2.0 {
        0.0
    } else {
        smooth_step(2.0 - t)
    }
}

#[derive(Debug, Clone)]
pub struct LittlewoodPaley {
    grid: PeriodicGrid,
    /// `weights[j][slot]`
    weights: Vec<Vec<f64>>,
}

impl LittlewoodPaley {
    pub fn new(grid: &PeriodicGrid) -> Self {
        let k_max = grid.k_max();
        let mut last = 1usize;
        while 2f64.powi(last as i32) < k_max {
            last += 1;
        }
        let n = grid.n();
        let mut weights = Vec::with_capacity(last + 1);
        weights.push((0..n).map(|s| cutoff(grid.wavenumber(s))).collect::<Vec<_>>());
        for j in 1..=last {
            let hi = 2f64.powi(j as i32);
            let lo = 2f64.powi(j as i32 - 1);
            let w = (0..n)
                .map(|s| {
                    let k = grid.wavenumber(s);
                    let outer = if j == last { 1.0 } else { cutoff(k / hi) };
                    outer - cutoff(k / lo)
                })
                .collect();
            weights.push(w);
        }
        Self {
            grid: *grid,
            weights,
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    /// Number of blocks `J + 1`.
    pub fn num_blocks(&self) -> usize {
        self.weights.len()
    }

    /// Multiplier weights of block `j` in slot order.
    pub fn weights(&self, j: usize) -> &[f64] {
        &self.weights[j]
    }

    /// Index of the block holding most of wavenumber `k`.
    pub fn dominant_block(&self, slot: usize) -> usize {
        (0..self.num_blocks())
            .max_by(|&a, &b| self.weights[a][slot].total_cmp(&self.weights[b][slot]))
            .unwrap_or(0)
    }

    pub fn project_spectrum(&self, s: &Spectrum, j: usize) -> Spectrum {
        let mut out = s.clone();
        if j >= self.num_blocks() {
            out.coeffs_mut().iter_mut().for_each(|c| *c *= 0.0);
            return out;
        }
        for (c, w) in out.coeffs_mut().iter_mut().zip(&self.weights[j]) {
            *c *= *w;
        }
        out
    }

    /// `S_m = Σ_{i ≤ m} P_i`; empty for negative `m`.
    pub fn low_pass_spectrum(&self, s: &Spectrum, m: isize) -> Spectrum {
        let mut out = s.clone();
        let coeffs = out.coeffs_mut();
        for (slot, c) in coeffs.iter_mut().enumerate() {
            let w: f64 = (0..self.num_blocks())
                .filter(|&i| (i as isize) <= m)
                .map(|i| self.weights[i][slot])
                .sum();
            *c *= w;
        }
        out
    }

    pub fn project(&self, f: &Field, j: usize) -> Field {
        self.project_spectrum(&f.to_spectrum(), j).to_field()
    }

    /// All blocks of `f` at once.
    pub fn blocks(&self, f: &Field) -> Vec<Field> {
        let s = f.to_spectrum();
        (0..self.num_blocks())
            .map(|j| self.project_spectrum(&s, j).to_field())
            .collect()
    }

    /// `sup_j 2^{js} ‖P_j f‖_∞`
    pub fn zygmund_norm(&self, f: &Field, s: f64) -> f64 {
        self.blocks(f)
            .iter()
            .enumerate()
            .map(|(j, b)| 2f64.powf(j as f64 * s) * b.max_abs())
            .fold(0.0, f64::max)
    }

    /// `sup_{j ≥ 1} 2^{js} ‖P_j f‖_∞`, blind to the lowest block.
    pub fn zygmund_seminorm(&self, f: &Field, s: f64) -> f64 {
        self.blocks(f)
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, b)| 2f64.powf(j as f64 * s) * b.max_abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzNorms {
    /// `‖f_x‖_∞`
    pub slope: f64,
    /// `‖f_x‖_∞ + sup_{j≥1} 2^{jε}‖P_j f_x‖_∞` with `ε = 1/2`
    pub weighted: f64,
}

pub fn lipschitz_norms(f: &Field) -> LipschitzNorms {
    let fx = f.derivative(1);
    let slope = fx.max_abs();
    let lp = LittlewoodPaley::new(f.grid());
    LipschitzNorms {
        slope,
        weighted: slope + lp.zygmund_seminorm(&fx, WEIGHTED_EPSILON),
    }
}
