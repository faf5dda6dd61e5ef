//! Bony paraproducts and polynomial-in-ξ paradifferential operators.
//!
//! The paraproduct is the dyadic low-high sum
//!
//! ```text
//! T_a u = Σ_{j≥2} S_{j-2}(a) Δ_j u  +  â_0 ((P_0 + P_1) u - û_0)
//! ```
//!
//! The second term lets the mean of the symbol act on the low nonzero modes,
//! so `T_1 u = u - û_0` and only the zero mode of `u` is cut off. Products are
//! formed on a 2x padded grid and truncated.

use rustfft::num_complex::Complex64;
use thiserror::Error;

use crate::spectral::{Field, LittlewoodPaley, PeriodicGrid, Spectrum};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymbolError {
    #[error("symbol has no terms")]
    Empty,
    #[error("coefficient fields live on different grids")]
    GridMismatch,
    #[error("power {power} appears twice for unit {unit:?}")]
    DuplicatePower { power: u32, unit: SymbolUnit },
    #[error("power {0} exceeds 5")]
    PowerTooLarge(u32),
}

/// Sum of the pairwise products of two families of padded fields.
fn padded_sum(grid: PeriodicGrid, pairs: impl Iterator<Item = (Spectrum, Spectrum)>) -> Spectrum {
    let fine = grid.refined(2);
    let mut acc = vec![0.0; fine.n()];
    for (a, b) in pairs {
        let a = a.resized(fine).to_field();
        let b = b.resized(fine).to_field();
        for ((s, x), y) in acc.iter_mut().zip(a.values()).zip(b.values()) {
            *s += x * y;
        }
    }
    Field::new(fine, acc)
        .expect("padded grid length")
        .to_spectrum()
        .resized(grid)
}

/// `â_0 ((P_0 + P_1) u - û_0)` added to `out`.
fn add_low_correction(lp: &LittlewoodPaley, a0: f64, su: &Spectrum, out: &mut Spectrum) {
    let (w0, w1) = (lp.weights(0), lp.weights(1));
    for (slot, c) in out.coeffs_mut().iter_mut().enumerate().skip(1) {
        *c += su.coeffs()[slot] * (a0 * (w0[slot] + w1[slot]));
    }
}

fn paraproduct_spectra(lp: &LittlewoodPaley, sa: &Spectrum, su: &Spectrum) -> Spectrum {
    let grid = *sa.grid();
    let pairs = (2..lp.num_blocks()).map(|j| {
        (
            lp.low_pass_spectrum(sa, j as isize - 2),
            lp.project_spectrum(su, j),
        )
    });
    let mut out = padded_sum(grid, pairs);
    add_low_correction(lp, sa.coeffs()[0].re, su, &mut out);
    out
}

/// `T_a u`
pub fn paraproduct(a: &Field, u: &Field) -> Field {
    assert_eq!(a.grid(), u.grid(), "grid mismatch");
    let lp = LittlewoodPaley::new(a.grid());
    paraproduct_spectra(&lp, &a.to_spectrum(), &u.to_spectrum()).to_field()
}

/// The diagonal remainder, defined so that `T_a u + T_u a + R(a,u) = a u`:
/// `Σ_{|j-j'|≤1} Δ_j a Δ_{j'} u` minus the two low-mode corrections.
pub fn bony_remainder(a: &Field, u: &Field) -> Field {
    assert_eq!(a.grid(), u.grid(), "grid mismatch");
    let grid = *a.grid();
    let lp = LittlewoodPaley::new(&grid);
    let (sa, su) = (a.to_spectrum(), u.to_spectrum());
    let nb = lp.num_blocks();
    let mut pairs = Vec::new();
    for j in 0..nb {
        for jp in j.saturating_sub(1)..(j + 2).min(nb) {
            pairs.push((lp.project_spectrum(&sa, j), lp.project_spectrum(&su, jp)));
        }
    }
    let mut out = padded_sum(grid, pairs.into_iter());
    let mut corr = Spectrum::zeros(grid);
    add_low_correction(&lp, sa.coeffs()[0].re, &su, &mut corr);
    add_low_correction(&lp, su.coeffs()[0].re, &sa, &mut corr);
    for (o, c) in out.coeffs_mut().iter_mut().zip(corr.coeffs()) {
        *o -= c;
    }
    out.to_field()
}

/// How `ξ^p` enters a symbol term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolUnit {
    /// `ξ^p`, quantized as the multiplier `k^p`
    Real,
    /// `i ξ^p`, quantized as `i k^p`
    Imag,
    /// `|ξ|^p`
    Abs,
}

impl SymbolUnit {
    fn multiplier(self, power: u32, k: f64) -> Complex64 {
        match self {
            SymbolUnit::Real => Complex64::new(k.powi(power as i32), 0.0),
            SymbolUnit::Imag => Complex64::new(0.0, k.powi(power as i32)),
            SymbolUnit::Abs => Complex64::new(k.abs().powi(power as i32), 0.0),
        }
    }

    /// Odd symbols have no consistent value at the Nyquist mode.
    fn is_odd(self, power: u32) -> bool {
        match self {
            SymbolUnit::Abs => false,
            _ => power % 2 == 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTerm {
    pub power: u32,
    pub coeff: Field,
    pub unit: SymbolUnit,
}

/// `a(x,ξ) = Σ c_p(x) · unit(ξ^p)`
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedSymbol {
    terms: Vec<SymbolTerm>,
}

impl OrderedSymbol {
    pub fn new(terms: Vec<SymbolTerm>) -> Result<Self, SymbolError> {
        let first = terms.first().ok_or(SymbolError::Empty)?;
        let grid = *first.coeff.grid();
        for (i, t) in terms.iter().enumerate() {
            if *t.coeff.grid() != grid {
                return Err(SymbolError::GridMismatch);
            }
            if t.power > 5 {
                return Err(SymbolError::PowerTooLarge(t.power));
            }
            if terms[..i].iter().any(|o| o.power == t.power && o.unit == t.unit) {
                return Err(SymbolError::DuplicatePower {
                    power: t.power,
                    unit: t.unit,
                });
            }
        }
        Ok(Self { terms })
    }

    /// A single constant-coefficient term.
    pub fn monomial(grid: &PeriodicGrid, power: u32, value: f64, unit: SymbolUnit) -> Self {
        Self {
            terms: vec![SymbolTerm {
                power,
                coeff: grid.constant(value),
                unit,
            }],
        }
    }

    pub fn terms(&self) -> &[SymbolTerm] {
        &self.terms
    }

    pub fn grid(&self) -> &PeriodicGrid {
        self.terms[0].coeff.grid()
    }

    pub fn coefficient(&self, power: u32, unit: SymbolUnit) -> Option<&Field> {
        self.terms
            .iter()
            .find(|t| t.power == power && t.unit == unit)
            .map(|t| &t.coeff)
    }

    /// Pointwise value of the symbol at `(x_j, ξ)`.
    pub fn eval(&self, j: usize, xi: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.unit.multiplier(t.power, xi) * t.coeff.values()[j])
            .sum()
    }
}

/// `T_a u = Σ_terms T_{c_p}(unit(D)^p u)`
pub fn para_apply(sym: &OrderedSymbol, u: &Field) -> Field {
    assert_eq!(sym.grid(), u.grid(), "grid mismatch");
    let lp = LittlewoodPaley::new(u.grid());
    let su = u.to_spectrum();
    let mut total = Spectrum::zeros(*u.grid());
    for t in sym.terms() {
        let mu = su.apply_symbol(t.unit.is_odd(t.power), |k| t.unit.multiplier(t.power, k));
        total = total.add(&paraproduct_spectra(&lp, &t.coeff.to_spectrum(), &mu));
    }
    total.to_field()
}

/// `F(u) - F(0) - T_{F'(u)} u`, with `F` and `F'` evaluated on the padded grid.
pub fn paralin_remainder(f: impl Fn(f64) -> f64, fprime: impl Fn(f64) -> f64, u: &Field) -> Field {
    let su = u.to_spectrum();
    let fu = crate::spectral::dealiased_map(&[&su], |v| f(v[0])).to_field();
    let dfu = crate::spectral::dealiased_map(&[&su], |v| fprime(v[0])).to_field();
    let f0 = f(0.0);
    let t = paraproduct(&dfu, u);
    fu.zip_map(&t, |a, b| a - f0 - b)
}
