//! Physical parameters and the flat-interface linear symbol.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dn::Geometry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMode {
    One,
    Two,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamsError {
    #[error("{name} must be {rule}, got {value}")]
    OutOfRange { name: &'static str, rule: &'static str, value: f64 },
    #[error("one-phase runs need mu_plus = rho_plus = 0")]
    OnePhaseUpperFluid,
    #[error("one-phase runs have no upper boundary")]
    OnePhaseUpperGeometry,
    #[error("rho_plus > rho_minus is the unstable regime; set allow_unstable to run it")]
    UnstableNotAllowed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalParams {
    /// Flexural rigidity σ.
    pub sigma: f64,
    pub g: f64,
    pub mu_minus: f64,
    pub mu_plus: f64,
    pub rho_minus: f64,
    pub rho_plus: f64,
    pub phase: PhaseMode,
    /// Region below the interface.
    pub lower: Geometry,
    /// Region above the interface (two-phase only).
    pub upper: Geometry,
    /// Acknowledge that a heavier upper fluid has no global theory.
    pub allow_unstable: bool,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            g: 0.0,
            mu_minus: 1.0,
            mu_plus: 0.0,
            rho_minus: 1.0,
            rho_plus: 0.0,
            phase: PhaseMode::One,
            lower: Geometry::Bottomless,
            upper: Geometry::Bottomless,
            allow_unstable: false,
        }
    }
}

/// `∂_t η̂_k = -(ν₁|k|⁵ + ν₂|k|) η̂_k` for a flat interface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSymbol {
    pub nu1: f64,
    pub nu2: f64,
}

impl LinearSymbol {
    pub fn at(&self, k: f64) -> f64 {
        let k = k.abs();
        self.nu1 * k.powi(5) + self.nu2 * k
    }
}

fn check(name: &'static str, value: f64, rule: &'static str, ok: bool) -> Result<(), ParamsError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(ParamsError::OutOfRange { name, rule, value })
    }
}

impl PhysicalParams {
    pub fn one_phase(sigma: f64, g: f64, mu: f64, rho: f64) -> Self {
        Self {
            sigma,
            g,
            mu_minus: mu,
            rho_minus: rho,
            ..Self::default()
        }
    }

    pub fn two_phase(sigma: f64, g: f64, mu_minus: f64, mu_plus: f64, rho_minus: f64, rho_plus: f64) -> Self {
        Self {
            sigma,
            g,
            mu_minus,
            mu_plus,
            rho_minus,
            rho_plus,
            phase: PhaseMode::Two,
            allow_unstable: rho_plus > rho_minus,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        check("sigma", self.sigma, "> 0", self.sigma > 0.0)?;
        check("g", self.g, ">= 0", self.g >= 0.0)?;
        check("mu_minus", self.mu_minus, "> 0", self.mu_minus > 0.0)?;
        check("rho_minus", self.rho_minus, ">= 0", self.rho_minus >= 0.0)?;
        for (name, geom) in [("lower depth", self.lower), ("upper depth", self.upper)] {
            if let Some(d) = geom.depth() {
                check(name, d, "> 0", d > 0.0)?;
            }
        }
        match self.phase {
            PhaseMode::One => {
                if self.mu_plus != 0.0 || self.rho_plus != 0.0 {
                    return Err(ParamsError::OnePhaseUpperFluid);
                }
                if self.upper != Geometry::Bottomless {
                    return Err(ParamsError::OnePhaseUpperGeometry);
                }
            }
            PhaseMode::Two => {
                check("mu_plus", self.mu_plus, "> 0 for two-phase runs", self.mu_plus > 0.0)?;
                check("rho_plus", self.rho_plus, ">= 0", self.rho_plus >= 0.0)?;
                if !self.is_stable() && !self.allow_unstable {
                    return Err(ParamsError::UnstableNotAllowed);
                }
            }
        }
        Ok(())
    }

    /// Denser fluid below.
    pub fn is_stable(&self) -> bool {
        self.rho_plus <= self.rho_minus
    }

    pub fn delta_rho(&self) -> f64 {
        self.rho_minus - self.rho_plus
    }

    /// `μ⁻` (one-phase) or `μ⁺ + μ⁻` (two-phase).
    pub fn mu_eff(&self) -> f64 {
        match self.phase {
            PhaseMode::One => self.mu_minus,
            PhaseMode::Two => self.mu_plus + self.mu_minus,
        }
    }

    /// Gravity coefficient of the linearization: `ρ⁻g` or `g(ρ⁻ - ρ⁺)`.
    pub fn gravity_eff(&self) -> f64 {
        match self.phase {
            PhaseMode::One => self.rho_minus * self.g,
            PhaseMode::Two => self.g * self.delta_rho(),
        }
    }

    /// Symbol of the linearization about the flat bottomless state.
    pub fn linear_symbol(&self) -> LinearSymbol {
        LinearSymbol {
            nu1: self.sigma / self.mu_eff(),
            nu2: self.gravity_eff() / self.mu_eff(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbols() {
        let p = PhysicalParams::one_phase(2.0, 1.0, 4.0, 3.0);
        p.validate().unwrap();
        assert_eq!(p.linear_symbol(), LinearSymbol { nu1: 0.5, nu2: 0.75 });
        let p = PhysicalParams::two_phase(1.0, 1.0, 3.0, 2.0, 2.0, 1.0);
        p.validate().unwrap();
        let s = p.linear_symbol();
        assert!((s.at(2.0) - 2.0 * (16.0 + 1.0) / 5.0).abs() < 1e-14);
    }

    #[test]
    fn validation() {
        let mut p = PhysicalParams::one_phase(1.0, 1.0, 1.0, 1.0);
        p.mu_plus = 1.0;
        assert_eq!(p.validate(), Err(ParamsError::OnePhaseUpperFluid));
        let mut p = PhysicalParams::two_phase(1.0, 1.0, 1.0, 1.0, 1.0, 2.0);
        p.validate().unwrap();
        p.allow_unstable = false;
        assert_eq!(p.validate(), Err(ParamsError::UnstableNotAllowed));
        let p = PhysicalParams {
            sigma: 0.0,
            ..PhysicalParams::default()
        };
        assert!(p.validate().is_err());
    }
}
