//! Closed-form mean values of sectional Poisson-Voronoi tessellations and
//! their limits as the ambient dimension grows.
//!
//! Every quantity is a product of J values and Gamma ratios; the Gamma part
//! is always assembled as a sum of log-Gammas so that `d` in the thousands
//! stays finite.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::jfunc::{j_value, j_value_infinity, JBeta, JQuery, JValue, QuadratureConfig};
use crate::model::ln_gamma;

/// Intensity of `j`-faces of the section of the `d`-dimensional
/// Poisson-Voronoi tessellation of intensity `rho` with `ℝ^l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceIntensityQuery {
    pub d: usize,
    pub l: usize,
    pub j: usize,
    pub rho: f64,
}

/// `j`-th mean functional of the typical `k`-face of the same section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypicalFaceQuery {
    pub d: usize,
    pub l: usize,
    pub k: usize,
    pub j: usize,
    pub rho: f64,
}

/// A formula value with the J values it consumed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluated {
    pub value: f64,
    pub j_values_used: Vec<JValue>,
    /// Absolute error bound propagated from the J values.
    pub error_estimate: f64,
}

impl Evaluated {
    fn exact(value: f64) -> Self {
        Evaluated { value, j_values_used: Vec::new(), error_estimate: 0.0 }
    }

    /// `value = factor · Π J^{±1}`; relative errors add.
    fn from_js(factor: f64, num: &[JValue], den: &[JValue]) -> Self {
        let mut value = factor;
        let mut rel = 0.0;
        for j in num {
            value *= j.value;
            rel += (j.error_estimate / j.value).abs();
        }
        for j in den {
            value /= j.value;
            rel += (j.error_estimate / j.value).abs();
        }
        let mut used = num.to_vec();
        used.extend_from_slice(den);
        Evaluated { value, j_values_used: used, error_estimate: rel * value.abs() }
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho.is_finite() && rho > 0.0 {
        Ok(())
    } else {
        domain(format!("rho must be > 0, got {rho}"))
    }
}

/// `J_{l+1, l-j+1}((d-l-1)/2)`.
fn j_sec(d: usize, l: usize, i: usize, cfg: &QuadratureConfig) -> Result<JValue> {
    let beta = (d as f64 - l as f64 - 1.0) / 2.0;
    j_value(JQuery::new(l + 1, i, JBeta::Finite(beta))?, cfg)
}

/// Log of the Gamma factor of the face intensity, without `ρ` and `J`:
/// `ln[ 2 π^{l/2}/(d(l+1)) Γ((l+1)(d-1)/2+1) Γ(l+1-l/d) Γ(d/2+1)^{l+1-l/d}
///      / (Γ(((l+1)(d-1)+1)/2) Γ((l+2)/2) Γ((d+1)/2)^{l+1}) ]`.
fn ln_face_factor(d: usize, l: usize) -> f64 {
    let df = d as f64;
    let lf = l as f64;
    let a = (lf + 1.0) * (df - 1.0);
    2f64.ln() + 0.5 * lf * PI.ln() - df.ln() - (lf + 1.0).ln() + ln_gamma(a / 2.0 + 1.0)
        + ln_gamma(lf + 1.0 - lf / df)
        + (lf + 1.0 - lf / df) * ln_gamma(df / 2.0 + 1.0)
        - ln_gamma((a + 1.0) / 2.0)
        - ln_gamma((lf + 2.0) / 2.0)
        - (lf + 1.0) * ln_gamma((df + 1.0) / 2.0)
}

/// `γ_j` of the `l`-dimensional section. `l = d` gives the face intensities
/// of the Poisson-Voronoi tessellation itself.
pub fn face_intensity(q: FaceIntensityQuery, cfg: &QuadratureConfig) -> Result<Evaluated> {
    let FaceIntensityQuery { d, l, j, rho } = q;
    if d < 2 || l < 1 || l > d || j > l {
        return domain(format!("face intensity needs d >= 2, 1 <= l <= d, j <= l; got d={d}, l={l}, j={j}"));
    }
    check_rho(rho)?;
    let jv = j_sec(d, l, l - j + 1, cfg)?;
    let ln = (l as f64 / d as f64) * rho.ln() + ln_face_factor(d, l);
    Ok(Evaluated::from_js(ln.exp(), &[jv], &[]))
}

/// Mean volume of the typical cell; the reciprocal of `γ_l`.
pub fn expected_cell_volume(d: usize, l: usize, rho: f64, cfg: &QuadratureConfig) -> Result<Evaluated> {
    if d < 2 || l < 1 || l > d {
        return domain(format!("cell volume needs d >= 2 and 1 <= l <= d; got d={d}, l={l}"));
    }
    check_rho(rho)?;
    let jv = j_sec(d, l, 1, cfg)?;
    let ln = -(l as f64 / d as f64) * rho.ln() - ln_face_factor(d, l);
    Ok(Evaluated::from_js(ln.exp(), &[], &[jv]))
}

/// The classical mean-length and mean-area formulas for one- and
/// two-dimensional sections, free of J values.
pub fn miles_cell_volume(d: usize, l: usize, rho: f64) -> Result<f64> {
    if d < 2 {
        return domain("Miles formulas need d >= 2");
    }
    check_rho(rho)?;
    let df = d as f64;
    let ln = match l {
        1 => {
            -rho.ln() / df + ln_gamma(df - 0.5) + 2.0 * ln_gamma((df + 1.0) / 2.0)
                - ln_gamma(df)
                - ln_gamma(2.0 - 1.0 / df)
                - ln_gamma(df / 2.0)
                - (1.0 - 1.0 / df) * ln_gamma(df / 2.0 + 1.0)
        }
        2 => {
            if d < 3 {
                return domain("a two-dimensional section needs d >= 3");
            }
            -2.0 * rho.ln() / df + (3.0 * df).ln() + ln_gamma(1.5 * df - 1.0)
                + 3.0 * ln_gamma((df + 1.0) / 2.0)
                - PI.ln()
                - ln_gamma((3.0 * df - 1.0) / 2.0)
                - ln_gamma(3.0 - 2.0 / df)
                - (3.0 - 2.0 / df) * ln_gamma(df / 2.0 + 1.0)
        }
        _ => return domain(format!("Miles formulas exist for l in {{1, 2}}, got {l}")),
    };
    Ok(ln.exp())
}

fn check_face_query(q: &TypicalFaceQuery) -> Result<()> {
    let TypicalFaceQuery { d, l, k, j, rho } = *q;
    if d < 2 || l < 1 || l > d || k > l || j > k {
        return domain(format!(
            "typical face query needs d >= 2, 1 <= l <= d, j <= k <= l; got d={d}, l={l}, k={k}, j={j}"
        ));
    }
    check_rho(rho)
}

/// `ln( n! / (m! (n-m)!) · Γ(m/2+1) Γ((n-m)/2+1) / Γ(n/2+1) )`.
fn ln_flag_coefficient(n: usize, m: usize) -> f64 {
    let (nf, mf) = (n as f64, m as f64);
    ln_gamma(nf + 1.0) - ln_gamma(mf + 1.0) - ln_gamma(nf - mf + 1.0) + ln_gamma(mf / 2.0 + 1.0)
        + ln_gamma((nf - mf) / 2.0 + 1.0)
        - ln_gamma(nf / 2.0 + 1.0)
}

/// `E V_j` of the typical `k`-face, as the ratio
/// `C · γ_{k-j}(section of dimension l-j) / γ_k(section of dimension l)`.
///
/// An `(l-j)`-dimensional section with `l = j` is a point process of cells
/// that are points; its 0-face intensity cancels and is taken as 1.
pub fn expected_intrinsic_volume(q: TypicalFaceQuery, cfg: &QuadratureConfig) -> Result<Evaluated> {
    check_face_query(&q)?;
    let TypicalFaceQuery { d, l, k, j, rho } = q;
    if j == 0 {
        return Ok(Evaluated::exact(1.0));
    }
    let c = ln_flag_coefficient(l, j).exp();
    let den = face_intensity(FaceIntensityQuery { d, l, j: k, rho }, cfg)?;
    let num = if l == j {
        Evaluated::exact(1.0)
    } else {
        face_intensity(FaceIntensityQuery { d, l: l - j, j: k - j, rho }, cfg)?
    };
    let value = c * num.value / den.value;
    let rel = num.error_estimate / num.value + den.error_estimate / den.value;
    let mut used = num.j_values_used;
    used.extend(den.j_values_used);
    Ok(Evaluated { value, j_values_used: used, error_estimate: rel * value.abs() })
}

/// The fully expanded form of [`expected_intrinsic_volume`], written out
/// term by term; kept as an independent route to the same number.
pub fn expected_intrinsic_volume_explicit(q: TypicalFaceQuery, cfg: &QuadratureConfig) -> Result<Evaluated> {
    check_face_query(&q)?;
    let TypicalFaceQuery { d, l, k, j, rho } = q;
    let (df, lf, jf) = (d as f64, l as f64, j as f64);
    let a = (lf + 1.0) * (df - 1.0);
    let b = (lf - jf + 1.0) * (df - 1.0);
    let ln = -(jf / df) * (rho.ln() - ln_gamma(df / 2.0 + 1.0)) + ln_gamma(lf + 2.0)
        - ln_gamma(jf + 1.0)
        - ln_gamma(lf - jf + 2.0)
        + ln_gamma(jf / 2.0 + 1.0)
        - 0.5 * jf * PI.ln()
        + ln_gamma(b / 2.0 + 1.0)
        + ln_gamma(lf - jf + 1.0 - (lf - jf) / df)
        - ln_gamma(a / 2.0 + 1.0)
        - ln_gamma(lf + 1.0 - lf / df)
        + ln_gamma((a + 1.0) / 2.0)
        + jf * ln_gamma((df + 1.0) / 2.0)
        - ln_gamma((b + 1.0) / 2.0)
        - jf * ln_gamma(df / 2.0 + 1.0);
    let beta_num = (df - lf + jf - 1.0) / 2.0;
    let beta_den = (df - lf - 1.0) / 2.0;
    let num = j_value(JQuery::new(l - j + 1, l - k + 1, JBeta::Finite(beta_num))?, cfg)?;
    let den = j_value(JQuery::new(l + 1, l - k + 1, JBeta::Finite(beta_den))?, cfg)?;
    Ok(Evaluated::from_js(ln.exp(), &[num], &[den]))
}

/// `E f_j` of the typical `k`-face; independent of `ρ`.
pub fn expected_f_vector(d: usize, l: usize, k: usize, j: usize, cfg: &QuadratureConfig) -> Result<Evaluated> {
    check_face_query(&TypicalFaceQuery { d, l, k, j, rho: 1.0 })?;
    if j == k {
        return Ok(Evaluated::exact(1.0));
    }
    let num = j_sec(d, l, l - j + 1, cfg)?;
    let den = j_sec(d, l, l - k + 1, cfg)?;
    Ok(Evaluated::from_js((k - j + 1) as f64, &[num], &[den]))
}

fn check_limit(l: usize, kappa: f64) -> Result<()> {
    if l < 1 {
        return domain("limits need l >= 1");
    }
    if !(kappa.is_finite() && kappa > 0.0) {
        return domain(format!("kappa must be > 0, got {kappa}"));
    }
    Ok(())
}

/// `ln( (l+1)^{-1/2} · 2 (l-1)! / Γ(l/2) )`.
fn ln_limit_factor(l: usize) -> f64 {
    let lf = l as f64;
    -0.5 * (lf + 1.0).ln() + 2f64.ln() + ln_gamma(lf) - ln_gamma(lf / 2.0)
}

/// Limit of `γ_j` as `d → ∞` with `ρ_d^{1/d} → κ`.
pub fn limit_face_intensity(l: usize, j: usize, kappa: f64, cfg: &QuadratureConfig) -> Result<Evaluated> {
    check_limit(l, kappa)?;
    if j > l {
        return domain(format!("j = {j} exceeds l = {l}"));
    }
    let jv = j_value_infinity(l + 1, l - j + 1, cfg)?;
    let lam = kappa * kappa * PI * E;
    let ln = 0.5 * l as f64 * lam.ln() + ln_limit_factor(l);
    Ok(Evaluated::from_js(ln.exp(), &[jv], &[]))
}

/// Limit of the mean typical-cell volume as `d → ∞` with `ρ_d^{1/d} → κ`.
pub fn limit_cell_volume(l: usize, kappa: f64, cfg: &QuadratureConfig) -> Result<Evaluated> {
    check_limit(l, kappa)?;
    gaussian_cell_volume(l, kappa * kappa * PI * E, cfg)
}

/// Mean typical-cell volume of the Gaussian-Voronoi tessellation with parameter `λ`.
pub fn gaussian_cell_volume(l: usize, lambda: f64, cfg: &QuadratureConfig) -> Result<Evaluated> {
    if l < 1 {
        return domain("gaussian cell volume needs l >= 1");
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return domain(format!("lambda must be > 0, got {lambda}"));
    }
    let jv = j_value_infinity(l + 1, 1, cfg)?;
    let ln = -0.5 * l as f64 * lambda.ln() - ln_limit_factor(l);
    Ok(Evaluated::from_js(ln.exp(), &[], &[jv]))
}

/// Limit of `E V_j` of the typical `k`-face.
pub fn limit_intrinsic_volume(l: usize, k: usize, j: usize, kappa: f64, cfg: &QuadratureConfig) -> Result<Evaluated> {
    check_limit(l, kappa)?;
    if k > l || j > k {
        return domain(format!("need j <= k <= l, got l={l}, k={k}, j={j}"));
    }
    let (lf, jf) = (l as f64, j as f64);
    let lam = kappa * kappa * PI * E;
    let ln = 0.5 * (lf + 1.0).ln() - 0.5 * (lf - jf + 1.0).ln() + ln_gamma(jf / 2.0 + 1.0)
        - ln_gamma(jf + 1.0)
        - 0.5 * jf * lam.ln();
    let num = j_value_infinity(l - j + 1, l - k + 1, cfg)?;
    let den = j_value_infinity(l + 1, l - k + 1, cfg)?;
    Ok(Evaluated::from_js(ln.exp(), &[num], &[den]))
}

/// Limit of `E f_j` of the typical `k`-face.
pub fn limit_f_vector(l: usize, k: usize, j: usize, cfg: &QuadratureConfig) -> Result<Evaluated> {
    check_limit(l, 1.0)?;
    if k > l || j > k {
        return domain(format!("need j <= k <= l, got l={l}, k={k}, j={j}"));
    }
    if j == k {
        return Ok(Evaluated::exact(1.0));
    }
    let num = j_value_infinity(l + 1, l - j + 1, cfg)?;
    let den = j_value_infinity(l + 1, l - k + 1, cfg)?;
    Ok(Evaluated::from_js((k - j + 1) as f64, &[num], &[den]))
}
