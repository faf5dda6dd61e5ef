//! Periodic grids, Fourier transforms, Fourier multipliers and Sobolev norms.
//!
//! Coefficient convention used throughout the crate:
//!
//! ```text
//! f(x) = Σ_k f̂_k e^{ikx},     f̂_k = (1/L) ∫₀ᴸ f(x) e^{-ikx} dx
//! ```
//!
//! so a single mode `cos(kx)` has coefficients `1/2` at `±k`. Spectra are
//! stored in FFT order: slot `m` holds mode index `m` for `m < n/2` and
//! `m - n` otherwise. The Nyquist slot `n/2` carries mode index `-n/2`.

pub mod io;
mod lp;

pub use io::{read_field_csv, write_field_csv, write_spectrum_csv};
pub use lp::{lipschitz_norms, LittlewoodPaley, LipschitzNorms, WEIGHTED_EPSILON};

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

pub use rustfft::num_complex::Complex64 as Complex;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("grid size must be an even number >= 8, got {0}")]
    BadSize(usize),
    #[error("grid period must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("fields live on different grids ({0} vs {1})")]
    GridMismatch(PeriodicGrid, PeriodicGrid),
    #[error("semigroup time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Uniform grid on the torus `[0, L)` with nodes `x_j = jL/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid {
    n: usize,
    length: f64,
}

impl fmt::Display for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={}, L={}", self.n, self.length)
    }
}

impl PeriodicGrid {
    pub fn new(n: usize, length: f64) -> Result<Self, SpectralError> {
        if n < 8 || n % 2 != 0 {
            return Err(SpectralError::BadSize(n));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(SpectralError::BadLength(length));
        }
        Ok(Self { n, length })
    }

    /// `n` points on `[0, 2π)`.
    pub fn standard(n: usize) -> Result<Self, SpectralError> {
        Self::new(n, 2.0 * PI)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Smallest nonzero wavenumber `2π/L`.
    pub fn k_min(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn k_max(&self) -> f64 {
        self.k_min() * (self.n / 2) as f64
    }

    /// Signed mode index stored in FFT slot `slot`, in `-n/2..n/2`.
    pub fn mode_index(&self, slot: usize) -> i64 {
        if slot < self.n / 2 {
            slot as i64
        } else {
            slot as i64 - self.n as i64
        }
    }

    pub fn slot_of(&self, mode: i64) -> usize {
        mode.rem_euclid(self.n as i64) as usize
    }

    pub fn is_nyquist(&self, slot: usize) -> bool {
        slot == self.n / 2
    }

    pub fn wavenumber(&self, slot: usize) -> f64 {
        self.mode_index(slot) as f64 * self.k_min()
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|s| self.wavenumber(s)).collect()
    }

    /// Same period, `factor` times as many points.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            n: self.n * factor,
            length: self.length,
        }
    }

    pub fn with_n(&self, n: usize) -> Result<Self, SpectralError> {
        Self::new(n, self.length)
    }

    pub fn sample(&self, f: impl FnMut(f64) -> f64) -> Field {
        Field {
            grid: *self,
            values: self.nodes().into_iter().map(f).collect(),
        }
    }

    pub fn zeros(&self) -> Field {
        Field {
            grid: *self,
            values: vec![0.0; self.n],
        }
    }

    pub fn constant(&self, c: f64) -> Field {
        Field {
            grid: *self,
            values: vec![c; self.n],
        }
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

fn inverse_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Real samples on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self, SpectralError> {
        if values.len() != grid.n() {
            return Err(SpectralError::LengthMismatch {
                expected: grid.n(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn to_spectrum(&self) -> Spectrum {
        let n = self.grid.n();
        let mut buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        forward_plan(n).process(&mut buf);
        let scale = 1.0 / n as f64;
        for c in &mut buf {
            *c *= scale;
        }
        Spectrum {
            grid: self.grid,
            coeffs: buf,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, a: f64) -> Field {
        self.map(|v| a * v)
    }

    /// `self + a * other`
    pub fn axpy(&self, a: f64, other: &Field) -> Field {
        self.zip_map(other, |x, y| x + a * y)
    }

    /// Pointwise product on this grid (no dealiasing).
    pub fn pointwise_mul(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a * b)
    }

    /// Circular shift by `shift` nodes: `out[j] = self[j - shift]`.
    pub fn shifted(&self, shift: usize) -> Field {
        let n = self.grid.n();
        let values = (0..n).map(|j| self.values[(j + n - shift % n) % n]).collect();
        Field {
            grid: self.grid,
            values,
        }
    }

    /// Spectral interpolation onto a grid with the same period and `n` points.
    pub fn resampled(&self, n: usize) -> Result<Field, SpectralError> {
        let grid = self.grid.with_n(n)?;
        Ok(self.to_spectrum().resized(grid).to_field())
    }

    pub fn derivative(&self, order: u32) -> Field {
        fractional_multiplier(self, Multiplier::Derivative(order))
    }

    pub fn abs_d(&self) -> Field {
        fractional_multiplier(self, Multiplier::AbsPow(1.0))
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.map(|v| -v)
    }
}

impl Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, rhs: f64) -> Field {
        self.scaled(rhs)
    }
}

/// Fourier coefficients of a real field, in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: PeriodicGrid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: PeriodicGrid, coeffs: Vec<Complex64>) -> Result<Self, SpectralError> {
        if coeffs.len() != grid.n() {
            return Err(SpectralError::LengthMismatch {
                expected: grid.n(),
                got: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.n()],
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of mode index `m`.
    pub fn coeff(&self, mode: i64) -> Complex64 {
        self.coeffs[self.grid.slot_of(mode)]
    }

    pub fn to_field(&self) -> Field {
        let n = self.grid.n();
        let mut buf = self.coeffs.clone();
        inverse_plan(n).process(&mut buf);
        Field {
            grid: self.grid,
            values: buf.into_iter().map(|c| c.re).collect(),
        }
    }

    /// Multiply each coefficient by `symbol(k)`, `k` the physical wavenumber.
    /// The Nyquist slot is zeroed when `odd` is set.
    pub fn apply_symbol(&self, odd: bool, symbol: impl Fn(f64) -> Complex64) -> Spectrum {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(slot, &c)| {
                if odd && self.grid.is_nyquist(slot) {
                    Complex64::new(0.0, 0.0)
                } else {
                    c * symbol(self.grid.wavenumber(slot))
                }
            })
            .collect();
        Spectrum {
            grid: self.grid,
            coeffs,
        }
    }

    pub fn apply_real_symbol(&self, symbol: impl Fn(f64) -> f64) -> Spectrum {
        self.apply_symbol(false, |k| Complex64::new(symbol(k), 0.0))
    }

    pub fn add(&self, other: &Spectrum) -> Spectrum {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Spectrum {
            grid: self.grid,
            coeffs,
        }
    }

    pub fn scaled(&self, a: f64) -> Spectrum {
        Spectrum {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    /// Zero-pad or truncate to another grid with the same period. Padding
    /// splits the Nyquist coefficient evenly between `±n/2`; truncation folds
    /// `±m/2` into the Nyquist slot, so padding then truncating is the identity.
    pub fn resized(&self, target: PeriodicGrid) -> Spectrum {
        let (n, m) = (self.grid.n(), target.n());
        if n == m {
            return Spectrum {
                grid: target,
                coeffs: self.coeffs.clone(),
            };
        }
        let mut out = Spectrum::zeros(target);
        let half = n.min(m) as i64 / 2;
        for k in -(half - 1)..half {
            out.coeffs[target.slot_of(k)] = self.coeffs[self.grid.slot_of(k)];
        }
        if m > n {
            let c = self.coeffs[n / 2] * 0.5;
            out.coeffs[target.slot_of(half)] = c;
            out.coeffs[target.slot_of(-half)] = c;
        } else {
            out.coeffs[m / 2] = self.coeffs[self.grid.slot_of(half)] + self.coeffs[self.grid.slot_of(-half)];
        }
        out
    }

    pub fn sum_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Fourier multipliers acting on periodic fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Multiplier {
    /// `|D|^α`; the zero mode maps to zero when `α <= 0`.
    AbsPow(f64),
    /// `∂_x^m`
    Derivative(u32),
    /// `|D|^{-1}` with the zero mode mapped to zero.
    InverseAbs,
    /// `|D|^{-1} ∂_x`, the symbol `i·sign(k)`.
    SignI,
}

impl Multiplier {
    pub fn symbol(&self, k: f64) -> Complex64 {
        let zero = Complex64::new(0.0, 0.0);
        match *self {
            Multiplier::AbsPow(alpha) => {
                if k == 0.0 {
                    if alpha > 0.0 {
                        zero
                    } else if alpha == 0.0 {
                        Complex64::new(1.0, 0.0)
                    } else {
                        zero
                    }
                } else {
                    Complex64::new(k.abs().powf(alpha), 0.0)
                }
            }
            Multiplier::Derivative(m) => Complex64::new(0.0, k).powu(m),
            Multiplier::InverseAbs => {
                if k == 0.0 {
                    zero
                } else {
                    Complex64::new(1.0 / k.abs(), 0.0)
                }
            }
            Multiplier::SignI => Complex64::new(0.0, k.signum() * (k != 0.0) as i32 as f64),
        }
    }

    pub fn is_odd(&self) -> bool {
        match *self {
            Multiplier::Derivative(m) => m % 2 == 1,
            Multiplier::SignI => true,
            _ => false,
        }
    }
}

pub fn apply_multiplier(s: &Spectrum, m: Multiplier) -> Spectrum {
    s.apply_symbol(m.is_odd(), |k| m.symbol(k))
}

pub fn fractional_multiplier(f: &Field, m: Multiplier) -> Field {
    apply_multiplier(&f.to_spectrum(), m).to_field()
}

/// `e^{-t(ν₁|D|^{α₁} + ν₂|D|^{α₂})} f`
pub fn semigroup_apply(
    f: &Field,
    t: f64,
    nu1: f64,
    alpha1: f64,
    nu2: f64,
    alpha2: f64,
) -> Result<Field, SpectralError> {
    if t < 0.0 || t.is_nan() {
        return Err(SpectralError::NegativeTime(t));
    }
    let s = f.to_spectrum().apply_real_symbol(|k| {
        let k = k.abs();
        (-t * (nu1 * k.powf(alpha1) + nu2 * k.powf(alpha2))).exp()
    });
    Ok(s.to_field())
}

/// `(Σ_k (1+k²)^s |f̂_k|²)^{1/2}`, summed in slot order.
pub fn sobolev_norm(f: &Field, s: f64) -> f64 {
    sobolev_norm_spectrum(&f.to_spectrum(), s)
}

pub fn sobolev_norm_spectrum(spec: &Spectrum, s: f64) -> f64 {
    spec.coeffs
        .iter()
        .enumerate()
        .map(|(slot, c)| {
            let k = spec.grid.wavenumber(slot);
            (1.0 + k * k).powf(s) * c.norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

/// `L²` inner product `∫ f g dx` approximated by the rectangle rule.
pub fn l2_inner(f: &Field, g: &Field) -> f64 {
    f.values().iter().zip(g.values()).map(|(a, b)| a * b).sum::<f64>() * f.grid().dx()
}

/// `φ₁(z) = (1 - e^{-z}) / z`
pub fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-3 {
        1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0
    } else {
        -(-z).exp_m1() / z
    }
}

/// `φ₂(z) = (z - 1 + e^{-z}) / z²`
pub fn phi2(z: f64) -> f64 {
    if z.abs() < 1e-2 {
        let z2 = z * z;
        0.5 - z / 6.0 + z2 / 24.0 - z2 * z / 120.0 + z2 * z2 / 720.0
    } else {
        (z + (-z).exp_m1()) / (z * z)
    }
}

/// Evaluate a pointwise nonlinearity of several fields on the 2x zero-padded
/// grid and truncate the result back to the input grid.
pub fn dealiased_map(inputs: &[&Spectrum], f: impl Fn(&[f64]) -> f64) -> Spectrum {
    let grid = *inputs[0].grid();
    let fine = grid.refined(2);
    let fine_fields: Vec<Field> = inputs.iter().map(|s| s.resized(fine).to_field()).collect();
    let mut args = vec![0.0; inputs.len()];
    let values = (0..fine.n())
        .map(|j| {
            for (a, fld) in args.iter_mut().zip(&fine_fields) {
                *a = fld.values[j];
            }
            f(&args)
        })
        .collect();
    Field { grid: fine, values }.to_spectrum().resized(grid)
}

/// Dealiased product of two fields.
pub fn dealiased_product(a: &Field, b: &Field) -> Field {
    dealiased_map(&[&a.to_spectrum(), &b.to_spectrum()], |v| v[0] * v[1]).to_field()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: PeriodicGrid, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Field::new(grid, (0..grid.n()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(PeriodicGrid::new(6, 1.0).is_err());
        assert!(PeriodicGrid::new(9, 1.0).is_err());
        assert!(PeriodicGrid::new(8, 0.0).is_err());
        let g = PeriodicGrid::new(8, 2.0 * PI).unwrap();
        let modes: Vec<i64> = (0..8).map(|s| g.mode_index(s)).collect();
        assert_eq!(modes, vec![0, 1, 2, 3, -4, -3, -2, -1]);
    }

    #[test]
    fn constant_and_single_mode() {
        let g = PeriodicGrid::standard(16).unwrap();
        let s = g.constant(1.0).to_spectrum();
        assert_relative_eq!(s.coeff(0).re, 1.0, epsilon = 1e-15);
        assert!(s.coeffs().iter().skip(1).all(|c| c.norm() < 1e-15));

        let s = g.sample(f64::cos).to_spectrum();
        assert_relative_eq!(s.coeff(1).re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(s.coeff(-1).re, 0.5, epsilon = 1e-15);
        assert!(s.coeff(2).norm() < 1e-15);
    }

    #[test]
    fn round_trip() {
        let g = PeriodicGrid::new(64, 3.0).unwrap();
        let f = random_field(g, 1);
        let back = f.to_spectrum().to_field();
        assert!((&back - &f).max_abs() < 1e-12 * f.max_abs());
    }

    #[test]
    fn multiplier_examples() {
        let g = PeriodicGrid::standard(32).unwrap();
        let c1 = g.sample(f64::cos);
        let d = fractional_multiplier(&c1, Multiplier::AbsPow(1.0));
        assert!((&d - &c1).max_abs() < 1e-13);
        let d4 = fractional_multiplier(&c1, Multiplier::Derivative(4));
        // roundoff in the high modes is amplified by k⁴
        assert!((&d4 - &c1).max_abs() < 1e-10);
        let c2 = g.sample(|x| (2.0 * x).cos());
        let inv = fractional_multiplier(&c2, Multiplier::InverseAbs);
        assert!((&inv - &c2.scaled(0.5)).max_abs() < 1e-14);
        // zero mode of |D|^{-1} goes to zero, never a fault
        let inv = fractional_multiplier(&g.constant(3.0), Multiplier::AbsPow(-1.0));
        assert!(inv.max_abs() < 1e-15);
    }

    #[test]
    fn odd_multipliers_zero_nyquist() {
        let g = PeriodicGrid::standard(8).unwrap();
        let nyq = g.sample(|x| (4.0 * x).cos());
        assert!(nyq.derivative(1).max_abs() < 1e-14);
        assert!(fractional_multiplier(&nyq, Multiplier::SignI).max_abs() < 1e-14);
        // even orders keep it
        assert!((nyq.derivative(2).max_abs() - 16.0).abs() < 1e-12);
    }

    #[test]
    fn semigroup_examples() {
        let g = PeriodicGrid::standard(32).unwrap();
        let c1 = g.sample(f64::cos);
        let same = semigroup_apply(&c1, 0.0, 1.0, 5.0, 0.0, 1.0).unwrap();
        assert!((&same - &c1).max_abs() < 1e-15);
        let out = semigroup_apply(&c1, 1.0, 1.0, 5.0, 0.0, 1.0).unwrap();
        assert!((&out - &c1.scaled((-1.0f64).exp())).max_abs() < 1e-15);
        let c2 = g.sample(|x| (2.0 * x).cos());
        let out = semigroup_apply(&c2, 0.01, 1.0, 5.0, 1.0, 1.0).unwrap();
        assert!((&out - &c2.scaled((-0.34f64).exp())).max_abs() < 1e-14);
        assert_eq!(
            semigroup_apply(&c1, -1.0, 1.0, 5.0, 0.0, 1.0),
            Err(SpectralError::NegativeTime(-1.0))
        );
    }

    #[test]
    fn sobolev_examples() {
        let g = PeriodicGrid::standard(32).unwrap();
        assert_eq!(sobolev_norm(&g.zeros(), 2.0), 0.0);
        let c1 = g.sample(f64::cos);
        for s in [-1.0, 0.0, 0.5, 2.0, 4.5] {
            assert_relative_eq!(sobolev_norm(&c1, s), 2f64.powf((s - 1.0) / 2.0), max_relative = 1e-13);
        }
        let gl = PeriodicGrid::new(64, 5.0).unwrap();
        let f = random_field(gl, 7);
        let l2 = (l2_inner(&f, &f)).sqrt();
        assert_relative_eq!(sobolev_norm(&f, 0.0), l2 / 5.0f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn phi_functions_match_direct_formulas() {
        for z in [-0.5, -1e-4, 1e-5, 2e-3, 0.3, 5.0, 40.0] {
            let direct1 = (1.0 - (-z as f64).exp()) / z;
            assert_relative_eq!(phi1(z), direct1, max_relative = 1e-10);
        }
        assert_relative_eq!(phi2(1e-8), 0.5, max_relative = 1e-7);
        for z in [0.02, 0.5, 3.0, 50.0] {
            let direct2 = (z - 1.0 + (-z as f64).exp()) / (z * z);
            assert_relative_eq!(phi2(z), direct2, max_relative = 1e-12);
        }
        // the series branch agrees with the direct formula at the switch
        let z = 0.00999999f64;
        assert_relative_eq!(phi2(z), (z + (-z).exp_m1()) / (z * z), max_relative = 1e-11);
    }

    #[test]
    fn dealiased_product_of_modes() {
        let g = PeriodicGrid::standard(16).unwrap();
        let a = g.sample(|x| (5.0 * x).cos());
        let b = g.sample(|x| (6.0 * x).cos());
        // cos5x cos6x = (cos x + cos 11x)/2; mode 11 is unresolved and dropped
        let p = dealiased_product(&a, &b);
        let expected = g.sample(|x| 0.5 * x.cos());
        assert!((&p - &expected).max_abs() < 1e-14);
    }
}
