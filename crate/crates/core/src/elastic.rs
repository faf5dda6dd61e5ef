//! The elastic (bending) operator `E(η)`, its paradifferential symbol ℓ and
//! its Gâteaux derivative.
//!
//! Nonlinear pointwise expressions are evaluated on the 2x padded grid and
//! truncated; derivatives are spectral.

use crate::paracalc::{para_apply, OrderedSymbol, SymbolTerm, SymbolUnit};
use crate::spectral::{dealiased_map, sobolev_norm, Field, LittlewoodPaley, Spectrum};

/// Algebraic form used to evaluate `E(η)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElasticForm {
    /// `(1+η_x²)^{-1/2} [ (1+η_x²)^{-1/2} κ_x ]_x + κ³/2`
    A,
    /// `( (1+η_x²)^{-1} (η_x (1+η_x²)^{-1/2})_x )_xx + (5/2)(η_x η_xx² (1+η_x²)^{-7/2})_x`
    B,
}

fn d(s: &Spectrum, m: u32) -> Spectrum {
    crate::spectral::apply_multiplier(s, crate::spectral::Multiplier::Derivative(m))
}

pub fn curvature(eta: &Field) -> Field {
    let s = eta.to_spectrum();
    curvature_spectrum(&s).to_field()
}

fn curvature_spectrum(s: &Spectrum) -> Spectrum {
    dealiased_map(&[&d(s, 1), &d(s, 2)], |v| v[1] * (1.0 + v[0] * v[0]).powf(-1.5))
}

pub fn elastic_e(eta: &Field, form: ElasticForm) -> Field {
    let s = eta.to_spectrum();
    let sx = d(&s, 1);
    match form {
        ElasticForm::A => {
            let kappa = curvature_spectrum(&s);
            let inner = dealiased_map(&[&sx, &d(&kappa, 1)], |v| v[1] / (1.0 + v[0] * v[0]).sqrt());
            dealiased_map(&[&sx, &d(&inner, 1), &kappa], |v| {
                v[1] / (1.0 + v[0] * v[0]).sqrt() + 0.5 * v[2] * v[2] * v[2]
            })
            .to_field()
        }
        ElasticForm::B => {
            let tangent = dealiased_map(&[&sx], |v| v[0] / (1.0 + v[0] * v[0]).sqrt());
            let bend = dealiased_map(&[&sx, &d(&tangent, 1)], |v| v[1] / (1.0 + v[0] * v[0]));
            let sxx = d(&s, 2);
            let extra = dealiased_map(&[&sx, &sxx], |v| {
                v[0] * v[1] * v[1] * (1.0 + v[0] * v[0]).powf(-3.5)
            });
            d(&bend, 2).add(&d(&extra, 1).scaled(2.5)).to_field()
        }
    }
}

/// Coefficient fields `c4 = (1+η_x²)^{-5/2}`, `α = η_x η_xx (1+η_x²)^{-7/2}`,
/// `β = η_xx² (1-6η_x²)(1+η_x²)^{-9/2}` as spectra.
struct Coefficients {
    c4: Spectrum,
    alpha: Spectrum,
    beta: Spectrum,
}

impl Coefficients {
    fn new(eta: &Field) -> Self {
        let s = eta.to_spectrum();
        let (sx, sxx) = (d(&s, 1), d(&s, 2));
        let c4 = dealiased_map(&[&sx], |v| (1.0 + v[0] * v[0]).powf(-2.5));
        let alpha = dealiased_map(&[&sx, &sxx], |v| v[0] * v[1] * (1.0 + v[0] * v[0]).powf(-3.5));
        let beta = dealiased_map(&[&sx, &sxx], |v| {
            let q = v[0] * v[0];
            v[1] * v[1] * (1.0 - 6.0 * q) * (1.0 + q).powf(-4.5)
        });
        Self { c4, alpha, beta }
    }

    /// Coefficients of `∂⁴, ∂³, ∂², ∂` in the linearization.
    fn derivative_weights(&self) -> [Field; 4] {
        let c3 = d(&self.c4, 1).scaled(2.0);
        let c2 = d(&self.c4, 2)
            .add(&d(&self.alpha, 1).scaled(-5.0))
            .add(&self.beta.scaled(2.5));
        let c1 = d(&self.beta, 1).scaled(2.5).add(&d(&self.alpha, 2).scaled(-5.0));
        [self.c4.to_field(), c3.to_field(), c2.to_field(), c1.to_field()]
    }
}

/// ℓ(x,ξ) with terms `ξ⁴` (real), `ξ³` (imaginary), `ξ²` (real) and `ξ`
/// (imaginary). Terms whose coefficient is identically zero are omitted.
pub fn symbol_ell(eta: &Field) -> OrderedSymbol {
    let [c4, c3, c2, c1] = Coefficients::new(eta).derivative_weights();
    // ∂³ = -i ξ³, ∂² = -ξ², ∂ = i ξ
    let terms = vec![
        SymbolTerm {
            power: 4,
            coeff: c4,
            unit: SymbolUnit::Real,
        },
        SymbolTerm {
            power: 3,
            coeff: c3.scaled(-1.0),
            unit: SymbolUnit::Imag,
        },
        SymbolTerm {
            power: 2,
            coeff: c2.scaled(-1.0),
            unit: SymbolUnit::Real,
        },
        SymbolTerm {
            power: 1,
            coeff: c1,
            unit: SymbolUnit::Imag,
        },
    ];
    let terms = terms
        .into_iter()
        .enumerate()
        .filter(|(i, t)| *i == 0 || t.coeff.values().iter().any(|&v| v != 0.0))
        .map(|(_, t)| t)
        .collect();
    OrderedSymbol::new(terms).expect("distinct powers on one grid")
}

/// `E(η) = T_ℓ η + R_E(η)`
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticSplit {
    pub principal: Field,
    pub remainder: Field,
    pub total: Field,
}

pub fn elastic_split(eta: &Field) -> ElasticSplit {
    let total = elastic_e(eta, ElasticForm::A);
    let principal = para_apply(&symbol_ell(eta), eta);
    let remainder = &total - &principal;
    ElasticSplit {
        principal,
        remainder,
        total,
    }
}

/// `d_η E(η) η̇`
pub fn gateaux_de(eta: &Field, eta_dot: &Field) -> Field {
    assert_eq!(eta.grid(), eta_dot.grid(), "grid mismatch");
    let weights = Coefficients::new(eta).derivative_weights();
    let sd = eta_dot.to_spectrum();
    let parts: Vec<Spectrum> = weights.iter().map(Field::to_spectrum).collect();
    let derivs: Vec<Spectrum> = [4, 3, 2, 1].iter().map(|&m| d(&sd, m)).collect();
    dealiased_map(
        &[&parts[0], &parts[1], &parts[2], &parts[3], &derivs[0], &derivs[1], &derivs[2], &derivs[3]],
        |v| v[0] * v[4] + v[1] * v[5] + v[2] * v[6] + v[3] * v[7],
    )
    .to_field()
}

/// `‖T_ℓ u − ∂⁴u‖_{H⁰} / (‖η_x‖_{C^{1/2}_*} ‖u‖_{H⁴})`, the constant in the
/// ellipticity bound.
pub fn ellipticity_constant(eta: &Field, u: &Field) -> f64 {
    let diff = &para_apply(&symbol_ell(eta), u) - &u.derivative(4);
    let lp = LittlewoodPaley::new(eta.grid());
    let eta_x = lp.zygmund_norm(&eta.derivative(1), 0.5);
    sobolev_norm(&diff, 0.0) / (eta_x * sobolev_norm(u, 4.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::PeriodicGrid;

    #[test]
    fn flat_interface_is_inert() {
        let g = PeriodicGrid::standard(32).unwrap();
        for eta in [g.zeros(), g.constant(0.7)] {
            assert!(curvature(&eta).max_abs() < 1e-15);
            assert!(elastic_e(&eta, ElasticForm::A).max_abs() < 1e-15);
            assert!(elastic_e(&eta, ElasticForm::B).max_abs() < 1e-15);
        }
        let sym = symbol_ell(&g.zeros());
        assert_eq!(sym.terms().len(), 1);
        assert_eq!(sym.terms()[0].power, 4);
        assert!(sym.terms()[0].coeff.values().iter().all(|&v| v == 1.0));
        let split = elastic_split(&g.zeros());
        assert_eq!(split.total.max_abs(), 0.0);
        assert_eq!(split.principal.max_abs(), 0.0);
    }

    #[test]
    fn small_amplitude_limits() {
        let g = PeriodicGrid::standard(128).unwrap();
        let eps = 1e-4;
        let eta = g.sample(|x| eps * x.cos());
        let k = curvature(&eta);
        assert!((&k + &eta).max_abs() < 1e-11);
        let e = elastic_e(&eta, ElasticForm::A);
        assert!((&e - &eta).max_abs() < 1e-7 * eps);
    }

    #[test]
    fn cubed_slope_term_structure() {
        let g = PeriodicGrid::standard(64).unwrap();
        let eta = g.sample(|x| 0.2 * x.sin() + 0.05 * (3.0 * x).cos());
        let sym = symbol_ell(&eta);
        let c4 = sym.coefficient(4, SymbolUnit::Real).unwrap();
        let c3 = sym.coefficient(3, SymbolUnit::Imag).unwrap();
        assert!((c3 - &c4.derivative(1).scaled(-2.0)).max_abs() < 1e-13);
    }

    #[test]
    fn gateaux_at_flat_interface() {
        let g = PeriodicGrid::standard(32).unwrap();
        let dot = g.sample(|x| (3.0 * x).cos() + 0.5 * x.sin());
        let out = gateaux_de(&g.zeros(), &dot);
        assert!((&out - &dot.derivative(4)).max_abs() < 1e-12);
    }

    #[test]
    fn split_reconstructs_total() {
        let g = PeriodicGrid::standard(64).unwrap();
        let eta = g.sample(|x| 0.1 * (2.0 * x).sin());
        let s = elastic_split(&eta);
        let back = &s.principal + &s.remainder;
        assert!((&back - &s.total).max_abs() <= 1e-15 * s.total.max_abs());
    }
}
