//! Model parameters, normalization constants and validation shared by the
//! rest of the crate.
//!
//! All Gamma-function evaluations go through [`ln_gamma`] so that constants
//! stay finite for ambient dimensions far beyond the range of a direct
//! `Γ(x)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Natural logarithm of the Gamma function for `x > 0`.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_gamma argument must be positive, got {x}");
    statrs::function::gamma::ln_gamma(x)
}

/// `Γ(x)` for `x > 0`, via [`ln_gamma`].
#[inline]
pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

/// Log of the volume of the unit ball in `ℝ^dim` (`dim` may be real).
pub fn ln_unit_ball_volume(dim: f64) -> f64 {
    0.5 * dim * PI.ln() - ln_gamma(0.5 * dim + 1.0)
}

/// Volume of the unit ball in `ℝ^dim`.
pub fn unit_ball_volume(dim: f64) -> f64 {
    ln_unit_ball_volume(dim).exp()
}

/// The four tessellation models.
///
/// Serialized with a `"model"` discriminator; see `docs/schema.md`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    /// Marked process with height density `γ c_{d+1,β} h^β` on `[0, ∞)`.
    /// `beta = -1` denotes the Poisson-Voronoi tessellation of intensity `r(d) γ`.
    Beta { d: usize, beta: f64, gamma: f64 },
    /// Marked process with height density `γ c'_{d+1,β} (-h)^{-β}` on `(-∞, 0)`.
    BetaPrime { d: usize, beta: f64, gamma: f64 },
    /// Marked process with height density `γ e^{λh}`; the law of the
    /// tessellation does not depend on `γ`, so it is not a parameter.
    Gaussian { d: usize, lambda: f64 },
    /// Homogeneous Poisson process of intensity `rho` (all heights zero).
    PoissonVoronoi { d: usize, rho: f64 },
}

impl ModelSpec {
    pub fn beta(d: usize, beta: f64, gamma: f64) -> Result<Self> {
        let m = ModelSpec::Beta { d, beta, gamma };
        m.validate()?;
        Ok(m)
    }

    pub fn beta_prime(d: usize, beta: f64, gamma: f64) -> Result<Self> {
        let m = ModelSpec::BetaPrime { d, beta, gamma };
        m.validate()?;
        Ok(m)
    }

    pub fn gaussian(d: usize, lambda: f64) -> Result<Self> {
        let m = ModelSpec::Gaussian { d, lambda };
        m.validate()?;
        Ok(m)
    }

    pub fn poisson_voronoi(d: usize, rho: f64) -> Result<Self> {
        let m = ModelSpec::PoissonVoronoi { d, rho };
        m.validate()?;
        Ok(m)
    }

    /// Dimension of the space the tessellation lives in.
    pub fn dim(&self) -> usize {
        match *self {
            ModelSpec::Beta { d, .. }
            | ModelSpec::BetaPrime { d, .. }
            | ModelSpec::Gaussian { d, .. }
            | ModelSpec::PoissonVoronoi { d, .. } => d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, x: f64) -> Result<()> {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                domain(format!("{name} must be finite and > 0, got {x}"))
            }
        }
        match *self {
            ModelSpec::Beta { d, beta, gamma } => {
                if d < 1 {
                    return domain("beta model needs d >= 1");
                }
                if !(beta.is_finite() && beta >= -1.0) {
                    return domain(format!("beta model needs beta >= -1, got {beta}"));
                }
                positive("gamma", gamma)
            }
            ModelSpec::BetaPrime { d, beta, gamma } => {
                if d < 1 {
                    return domain("beta-prime model needs d >= 1");
                }
                let lower = d as f64 / 2.0 + 1.0;
                if !(beta.is_finite() && beta > lower) {
                    return domain(format!(
                        "beta-prime tessellation needs beta > d/2 + 1 = {lower}, got {beta}"
                    ));
                }
                positive("gamma", gamma)
            }
            ModelSpec::Gaussian { d, lambda } => {
                if d < 1 {
                    return domain("gaussian model needs d >= 1");
                }
                positive("lambda", lambda)
            }
            ModelSpec::PoissonVoronoi { d, rho } => {
                if d < 2 {
                    return domain("poisson-voronoi model needs d >= 2");
                }
                positive("rho", rho)
            }
        }
    }

    /// Parse and validate a JSON document.
    pub fn from_json(s: &str) -> Result<Self> {
        let m: ModelSpec = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }
}

/// Section of the `ambient_d`-dimensional Poisson-Voronoi tessellation of
/// intensity `rho` with an `section_l`-dimensional linear subspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionSpec {
    pub ambient_d: usize,
    pub section_l: usize,
    pub rho: f64,
}

impl SectionSpec {
    pub fn new(ambient_d: usize, section_l: usize, rho: f64) -> Result<Self> {
        let s = SectionSpec { ambient_d, section_l, rho };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ambient_d < 2 {
            return domain("section needs ambient_d >= 2");
        }
        if self.section_l < 1 || self.section_l >= self.ambient_d {
            return domain(format!(
                "section needs 1 <= l <= d - 1, got l = {} and d = {}",
                self.section_l, self.ambient_d
            ));
        }
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return domain(format!("rho must be > 0, got {}", self.rho));
        }
        Ok(())
    }

    /// Codimension `d - l`.
    pub fn codim(&self) -> usize {
        self.ambient_d - self.section_l
    }
}

/// `c_{d+1,β} = Γ((d+1)/2 + β + 1) / (π^{(d+1)/2} Γ(β+1))`, for `β > -1`.
pub fn norm_constant_beta(d: usize, beta: f64) -> Result<f64> {
    if !(beta.is_finite() && beta > -1.0) {
        return domain(format!("c_(d+1,beta) needs beta > -1, got {beta}"));
    }
    let a = (d as f64 + 1.0) / 2.0;
    Ok((ln_gamma(a + beta + 1.0) - a * PI.ln() - ln_gamma(beta + 1.0)).exp())
}

/// `c'_{d+1,β} = Γ(β) / (π^{(d+1)/2} Γ(β - (d+1)/2))`, for `β > (d+1)/2`.
pub fn norm_constant_beta_prime(d: usize, beta: f64) -> Result<f64> {
    let a = (d as f64 + 1.0) / 2.0;
    if !(beta.is_finite() && beta > a) {
        return domain(format!("c'_(d+1,beta) needs beta > (d+1)/2 = {a}, got {beta}"));
    }
    Ok((ln_gamma(beta) - a * PI.ln() - ln_gamma(beta - a)).exp())
}

/// `r(d) = Γ((d+1)/2) π^{-(d+1)/2}`: a β-Voronoi model with `β = -1` and
/// parameter `γ` is the Poisson-Voronoi tessellation of intensity `r(d) γ`.
pub fn r_of_d(d: usize) -> f64 {
    let a = (d as f64 + 1.0) / 2.0;
    (ln_gamma(a) - a * PI.ln()).exp()
}

/// The β-Voronoi model whose law equals that of the section described by `spec`:
/// `β = (d - l)/2 - 1`, `γ = π^{(d+1)/2} ρ / Γ((d+1)/2)`.
pub fn sectional_model(spec: &SectionSpec) -> Result<ModelSpec> {
    spec.validate()?;
    let beta = spec.codim() as f64 / 2.0 - 1.0;
    let gamma = spec.rho / r_of_d(spec.ambient_d);
    ModelSpec::beta(spec.section_l, beta, gamma)
}

/// Section of an arbitrary β-Voronoi model of dimension `d` with an
/// `l`-dimensional subspace: the parameter `β` grows by `(d - l)/2`, `γ` is kept.
pub fn section_of_beta(model: &ModelSpec, l: usize) -> Result<ModelSpec> {
    match *model {
        ModelSpec::Beta { d, beta, gamma } => {
            if l < 1 || l >= d {
                return domain(format!("section dimension {l} must lie in [1, {d})"));
            }
            ModelSpec::beta(l, beta + (d - l) as f64 / 2.0, gamma)
        }
        ModelSpec::BetaPrime { d, beta, gamma } => {
            if l < 1 || l >= d {
                return domain(format!("section dimension {l} must lie in [1, {d})"));
            }
            ModelSpec::beta_prime(l, beta - (d - l) as f64 / 2.0, gamma)
        }
        ModelSpec::Gaussian { d, lambda } => {
            if l < 1 || l >= d {
                return domain(format!("section dimension {l} must lie in [1, {d})"));
            }
            ModelSpec::gaussian(l, lambda)
        }
        ModelSpec::PoissonVoronoi { d, rho } => {
            sectional_model(&SectionSpec::new(d, l, rho)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn beta_constants() {
        assert!(rel(norm_constant_beta(1, 0.0).unwrap(), 1.0 / PI) < 1e-14);
        assert!(rel(norm_constant_beta(2, 0.0).unwrap(), 3.0 / (4.0 * PI)) < 1e-14);
        assert!(rel(norm_constant_beta(3, 1.0).unwrap(), 6.0 / (PI * PI)) < 1e-14);
        assert!(norm_constant_beta(2, -1.0).is_err());
        assert!(norm_constant_beta(2, -1.5).is_err());
    }

    #[test]
    fn beta_prime_constants() {
        assert!(rel(norm_constant_beta_prime(1, 2.0).unwrap(), 1.0 / PI) < 1e-14);
        assert!(rel(norm_constant_beta_prime(1, 3.0).unwrap(), 2.0 / PI) < 1e-14);
        assert!(rel(norm_constant_beta_prime(3, 4.0).unwrap(), 6.0 / (PI * PI)) < 1e-14);
        assert!(norm_constant_beta_prime(3, 2.0).is_err());
    }

    #[test]
    fn r_values() {
        assert!(rel(r_of_d(1), 1.0 / PI) < 1e-14);
        assert!(rel(r_of_d(2), 1.0 / (2.0 * PI)) < 1e-14);
        assert!(rel(r_of_d(3), 1.0 / (PI * PI)) < 1e-14);
    }

    #[test]
    fn beta_constant_approaches_r_of_d() {
        for d in 1..8 {
            let eps = 1e-7;
            let c = norm_constant_beta(d, -1.0 + eps).unwrap() / eps;
            assert!(rel(c, r_of_d(d)) < 1e-5, "d = {d}");
        }
    }

    #[test]
    fn sectional_examples() {
        let m = sectional_model(&SectionSpec::new(3, 2, 1.0).unwrap()).unwrap();
        match m {
            ModelSpec::Beta { d, beta, gamma } => {
                assert_eq!(d, 2);
                assert_eq!(beta, -0.5);
                assert!(rel(gamma, PI * PI) < 1e-14);
            }
            _ => panic!("wrong variant"),
        }
        let m = sectional_model(&SectionSpec::new(2, 1, 1.0).unwrap()).unwrap();
        match m {
            ModelSpec::Beta { d, beta, gamma } => {
                assert_eq!(d, 1);
                assert_eq!(beta, -0.5);
                assert!(rel(gamma, 2.0 * PI) < 1e-14);
            }
            _ => panic!("wrong variant"),
        }
        for l in 1..6 {
            let rho = 0.7;
            let m = sectional_model(&SectionSpec::new(l + 2, l, rho).unwrap()).unwrap();
            let a = (l as f64 + 3.0) / 2.0;
            let expect = PI.powf(a) * rho / gamma(a);
            match m {
                ModelSpec::Beta { beta, gamma, .. } => {
                    assert_eq!(beta, 0.0);
                    assert!(rel(gamma, expect) < 1e-13);
                }
                _ => panic!("wrong variant"),
            }
        }
    }

    #[test]
    fn sections_compose() {
        for d in 3..9 {
            for m in 2..d {
                for l in 1..m {
                    let pv = ModelSpec::poisson_voronoi(d, 1.3).unwrap();
                    let direct = section_of_beta(&pv, l).unwrap();
                    let two = section_of_beta(&section_of_beta(&pv, m).unwrap(), l).unwrap();
                    assert_eq!(direct, two, "d={d} m={m} l={l}");
                }
            }
        }
    }

    #[test]
    fn validation() {
        assert!(ModelSpec::beta(2, -1.0, 1.0).is_ok());
        assert!(ModelSpec::beta(2, -1.01, 1.0).is_err());
        assert!(ModelSpec::beta(2, 0.0, 0.0).is_err());
        assert!(ModelSpec::beta_prime(2, 2.0, 1.0).is_err());
        assert!(ModelSpec::beta_prime(2, 2.5, 1.0).is_ok());
        assert!(ModelSpec::gaussian(2, -1.0).is_err());
        assert!(ModelSpec::poisson_voronoi(1, 1.0).is_err());
        assert!(SectionSpec::new(3, 3, 1.0).is_err());
        assert!(SectionSpec::new(3, 0, 1.0).is_err());
    }

    #[test]
    fn json_discriminator() {
        let m = ModelSpec::beta(2, 5.0, 1.5).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"model":"beta","d":2,"beta":5.0,"gamma":1.5}"#);
        assert_eq!(ModelSpec::from_json(&s).unwrap(), m);
        let g = ModelSpec::from_json(r#"{"model":"gaussian","d":2,"lambda":8.5}"#).unwrap();
        assert_eq!(g, ModelSpec::Gaussian { d: 2, lambda: 8.5 });
        assert!(ModelSpec::from_json(r#"{"model":"beta_prime","d":2,"beta":1.0,"gamma":1}"#).is_err());
    }
}
