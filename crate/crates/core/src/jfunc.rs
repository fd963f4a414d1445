//! The angle sums `J_{n,k}(β)`: expected internal-angle sums of beta simplices
//! at their `k`-vertex faces.
//!
//! For `n >= 3`, with `j = n - k`, `d = 2β + n` and `M = (d-1)n + 2`,
//!
//! ```text
//! J = C(n, j) Γ((M+1)/2) / (√π Γ(M/2)) ∫_ℝ cosh(u)^{-M} (1/2 + i c_d g(u))^j du,
//! g(u) = ∫_0^u cosh(v)^{d-1} dv,   c_d = Γ((d+1)/2) / (√π Γ(d/2)).
//! ```
//!
//! `d` is treated as a real parameter. For `n <= 2` every value is exactly 1.
//! The `β → ∞` limit (angle sums of the regular simplex) is obtained by
//! Richardson extrapolation in `1/β`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::ln_gamma;
use crate::quad::GaussLegendre;

/// Parameter `β` of a J query: a real `β >= -1`, or `∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JBeta {
    Finite(f64),
    Infinity,
}

impl fmt::Display for JBeta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JBeta::Finite(b) => write!(f, "{b}"),
            JBeta::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for JBeta {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if matches!(t.to_ascii_lowercase().as_str(), "inf" | "infinity" | "+inf") {
            return Ok(JBeta::Infinity);
        }
        t.parse::<f64>()
            .map_err(|_| Error::Domain(format!("cannot parse beta from {s:?}")))
            .and_then(|b| {
                if b.is_infinite() && b > 0.0 {
                    Ok(JBeta::Infinity)
                } else {
                    Ok(JBeta::Finite(b))
                }
            })
    }
}

impl Serialize for JBeta {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            JBeta::Finite(b) => s.serialize_f64(*b),
            JBeta::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for JBeta {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(b) => Ok(JBeta::Finite(b)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// The triple `(n, k, β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JQuery {
    pub n: usize,
    pub k: usize,
    pub beta: JBeta,
}

impl JQuery {
    pub fn new(n: usize, k: usize, beta: JBeta) -> Result<Self> {
        let q = JQuery { n, k, beta };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 || self.k < 1 || self.k > self.n {
            return domain(format!("J needs 1 <= k <= n, got n = {} and k = {}", self.n, self.k));
        }
        if let JBeta::Finite(b) = self.beta {
            if !(b.is_finite() && b >= -1.0) {
                return domain(format!("J needs beta >= -1, got {b}"));
            }
        }
        Ok(())
    }
}

/// Tolerances and discretization for the J quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    /// Relative tolerance for panel refinement. For [`j_value_infinity`] it is
    /// also the tolerance on the disagreement of the extrapolants.
    pub rel_tol: f64,
    /// Outer truncation. `None` picks it from the decay of the integrand.
    pub u_max: Option<f64>,
    pub panel_order: usize,
    pub inner_grid: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-14,
            rel_tol: 1e-10,
            u_max: None,
            panel_order: 20,
            inner_grid: 16,
        }
    }
}

impl QuadratureConfig {
    /// Configuration used for `β = ∞` values: the extrapolation is accurate
    /// to roughly `1e-8`, so the acceptance threshold is `1e-6`.
    pub fn for_limits() -> Self {
        QuadratureConfig { rel_tol: 1e-6, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return domain("quadrature tolerances must be > 0");
        }
        if let Some(u) = self.u_max {
            if !(u.is_finite() && u > 0.0) {
                return domain(format!("u_max must be > 0, got {u}"));
            }
        }
        if self.panel_order < 2 || self.inner_grid < 2 {
            return domain("panel_order and inner_grid must be >= 2");
        }
        Ok(())
    }

    fn key(&self) -> [u64; 5] {
        [
            self.abs_tol.to_bits(),
            self.rel_tol.to_bits(),
            self.u_max.map_or(u64::MAX, f64::to_bits),
            self.panel_order as u64,
            self.inner_grid as u64,
        ]
    }
}

/// A computed J value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JValue {
    pub query: JQuery,
    pub value: f64,
    /// Change between the last two refinements (or between extrapolants).
    pub error_estimate: f64,
    /// `|Im|` of the normalized integral over the whole line.
    pub imag_residual: f64,
}

/// `J_{n,k}(β)` for finite `β`.
pub fn j_value(q: JQuery, cfg: &QuadratureConfig) -> Result<JValue> {
    q.validate()?;
    let beta = match q.beta {
        JBeta::Finite(b) => b,
        JBeta::Infinity => return j_value_infinity(q.n, q.k, cfg),
    };
    let all = j_values_all(q.n, beta, cfg)?;
    Ok(all[q.k - 1])
}

/// `J_{n,k}(β)` for all `k = 1..=n` at once; index `k - 1`.
pub fn j_values_all(n: usize, beta: f64, cfg: &QuadratureConfig) -> Result<Arc<Vec<JValue>>> {
    JQuery::new(n, 1, JBeta::Finite(beta))?;
    cfg.validate()?;
    type Memo = Mutex<HashMap<(usize, u64, [u64; 5]), Arc<Vec<JValue>>>>;
    static MEMO: OnceLock<Memo> = OnceLock::new();
    let memo = MEMO.get_or_init(Default::default);
    let key = (n, beta.to_bits(), cfg.key());
    if let Some(v) = memo.lock().unwrap().get(&key) {
        return Ok(v.clone());
    }
    let v = Arc::new(compute_all(n, beta, cfg)?);
    memo.lock().unwrap().insert(key, v.clone());
    Ok(v)
}

/// `ln cosh u`, stable for large `|u|`.
fn ln_cosh(u: f64) -> f64 {
    let a = u.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

fn ln_binomial(n: usize, j: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(j as f64 + 1.0) - ln_gamma((n - j) as f64 + 1.0)
}

struct Integrand {
    n: usize,
    d: f64,
    m: f64,
    c_d: f64,
    /// `ln(C(n,j) Γ((M+1)/2) / (√π Γ(M/2)))` per `j`.
    ln_pref: Vec<f64>,
}

impl Integrand {
    fn new(n: usize, beta: f64) -> Self {
        let d = 2.0 * beta + n as f64;
        let m = (d - 1.0) * n as f64 + 2.0;
        let c_d = (ln_gamma((d + 1.0) / 2.0) - 0.5 * PI.ln() - ln_gamma(d / 2.0)).exp();
        let c0 = ln_gamma((m + 1.0) / 2.0) - 0.5 * PI.ln() - ln_gamma(m / 2.0);
        let ln_pref = (0..n).map(|j| c0 + ln_binomial(n, j)).collect();
        Integrand { n, d, m, c_d, ln_pref }
    }

    fn inner(&self, v: f64) -> f64 {
        ((self.d - 1.0) * ln_cosh(v)).exp()
    }

    /// Largest normalized `|integrand|` over `j` at `u`, given `g(u)`.
    fn max_abs(&self, u: f64, g: f64) -> f64 {
        let lc = ln_cosh(u);
        let lr = 0.5 * (0.25 + (self.c_d * g).powi(2)).ln();
        (0..self.n)
            .map(|j| (self.ln_pref[j] - self.m * lc + j as f64 * lr).exp())
            .fold(0.0, f64::max)
    }

    /// `g(u)` by composite Gauss-Legendre with panels of width about `h`.
    fn g_at(&self, u: f64, h: f64, rule: &GaussLegendre) -> f64 {
        let np = ((u.abs() / h).ceil() as usize).max(1);
        let step = u / np as f64;
        (0..np)
            .map(|i| rule.integrate(i as f64 * step, (i + 1) as f64 * step, |v| self.inner(v)))
            .sum()
    }

    /// Per-`j` integral over `[0, s·u_max]` with `np` panels, `s = ±1`.
    /// Returns `(re, im)` pairs of the normalized integrals.
    fn half_line(
        &self,
        sign: f64,
        u_max: f64,
        np: usize,
        outer: &GaussLegendre,
        inner: &GaussLegendre,
    ) -> Vec<(f64, f64)> {
        let mut acc = vec![(0.0, 0.0); self.n];
        let h = u_max / np as f64;
        let mut g0 = 0.0;
        for p in 0..np {
            let a = sign * p as f64 * h;
            let b = sign * (p + 1) as f64 * h;
            for (x, w) in outer.mapped(a, b) {
                let g = g0 + inner.integrate(a, x, |v| self.inner(v));
                let w = w.abs();
                let lc = ln_cosh(x);
                let cg = self.c_d * g;
                let lr = 0.5 * (0.25 + cg * cg).ln();
                let theta = cg.atan2(0.5);
                for (j, slot) in acc.iter_mut().enumerate() {
                    let jf = j as f64;
                    let mag = (self.ln_pref[j] - self.m * lc + jf * lr).exp();
                    let (s, c) = (jf * theta).sin_cos();
                    slot.0 += w * mag * c;
                    slot.1 += w * mag * s;
                }
            }
            g0 += outer.integrate(a, b, |v| self.inner(v));
        }
        acc
    }
}

fn compute_all(n: usize, beta: f64, cfg: &QuadratureConfig) -> Result<Vec<JValue>> {
    let mk = |k: usize, value: f64, err: f64, im: f64| JValue {
        query: JQuery { n, k, beta: JBeta::Finite(beta) },
        value,
        error_estimate: err,
        imag_residual: im,
    };
    if n <= 2 {
        return Ok((1..=n).map(|k| mk(k, 1.0, 0.0, 0.0)).collect());
    }
    let f = Integrand::new(n, beta);
    let outer = GaussLegendre::new(cfg.panel_order);
    let inner = GaussLegendre::new(cfg.inner_grid);
    let h_target = (1.0 / f.m.sqrt()).min(4.0 / (f.d - 1.0).max(1.0));

    // Truncation: weight cosh^{-M} below 1e-18, then widen until the whole
    // integrand (including the growth of |1/2 + i c g|^j) is that small.
    let tail: f64 = 1e-18;
    let u_max = match cfg.u_max {
        Some(u) => {
            let t = f.max_abs(u, f.g_at(u, h_target, &outer));
            if t > 1e-12 {
                return Err(Error::NonConvergence(format!(
                    "integrand is {t:e} at the requested u_max = {u}"
                )));
            }
            u
        }
        None => {
            let target = -tail.ln() / f.m;
            let (mut lo, mut hi) = (0.0, 1.0);
            while ln_cosh(hi) < target {
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if ln_cosh(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let mut u = hi;
            let mut tries = 0;
            while f.max_abs(u, f.g_at(u, h_target, &outer)) > tail {
                u *= 1.25;
                tries += 1;
                if tries > 400 {
                    return Err(Error::NonConvergence(format!(
                        "J integrand for n = {n}, beta = {beta} does not decay"
                    )));
                }
            }
            u
        }
    };

    let eval = |np: usize| -> Vec<(f64, f64)> {
        let pos = f.half_line(1.0, u_max, np, &outer, &inner);
        let neg = f.half_line(-1.0, u_max, np, &outer, &inner);
        pos.iter().zip(&neg).map(|(p, q)| (p.0 + q.0, p.1 + q.1)).collect()
    };

    let mut np = ((u_max / h_target).ceil() as usize).max(1);
    let mut prev = eval(np);
    let max_refine = 10;
    for _ in 0..max_refine {
        np *= 2;
        let cur = eval(np);
        let converged = cur
            .iter()
            .zip(&prev)
            .all(|(c, p)| (c.0 - p.0).abs() <= cfg.rel_tol * c.0.abs() + cfg.abs_tol);
        if converged {
            let mut out = Vec::with_capacity(n);
            for k in 1..=n {
                let j = n - k;
                let (re, im) = cur[j];
                let err = (re - prev[j].0).abs();
                if im.abs() > cfg.abs_tol.max(1e-12 * re.abs()) {
                    return Err(Error::NonConvergence(format!(
                        "imaginary residual {im:e} for n = {n}, k = {k}, beta = {beta}"
                    )));
                }
                out.push(mk(k, re, err, im.abs()));
            }
            return Ok(out);
        }
        prev = cur;
    }
    Err(Error::NonConvergence(format!(
        "panel refinement for n = {n}, beta = {beta} did not reach rel_tol = {}",
        cfg.rel_tol
    )))
}

/// Extrapolation nodes in `β`.
pub const EXTRAPOLATION_BETAS: [f64; 3] = [1e2, 1e3, 1e4];

/// `J_{n,k}(∞)`, the internal-angle sum of the regular `(n-1)`-simplex at
/// its `k`-vertex faces.
///
/// Quadratic extrapolation in `x = 1/β` through `β ∈ {1e2, 1e3, 1e4}`; the
/// error estimate is the distance to the linear extrapolant through the two
/// largest `β`, and must stay below `cfg.rel_tol` (relative).
pub fn j_value_infinity(n: usize, k: usize, cfg: &QuadratureConfig) -> Result<JValue> {
    JQuery::new(n, k, JBeta::Infinity)?;
    cfg.validate()?;
    let query = JQuery { n, k, beta: JBeta::Infinity };
    if n <= 2 {
        return Ok(JValue { query, value: 1.0, error_estimate: 0.0, imag_residual: 0.0 });
    }
    let inner_cfg = QuadratureConfig { rel_tol: cfg.rel_tol.min(1e-11), ..*cfg };
    let mut ys = [0.0; 3];
    let mut im: f64 = 0.0;
    for (y, b) in ys.iter_mut().zip(EXTRAPOLATION_BETAS) {
        let v = j_values_all(n, b, &inner_cfg)?[k - 1];
        *y = v.value;
        im = im.max(v.imag_residual);
    }
    let xs = EXTRAPOLATION_BETAS.map(|b| 1.0 / b);
    let quad = lagrange_at_zero(&xs, &ys);
    let lin = lagrange_at_zero(&xs[1..], &ys[1..]);
    let err = (quad - lin).abs();
    if err > cfg.rel_tol * quad.abs() + cfg.abs_tol {
        return Err(Error::ExtrapolationUnstable(format!(
            "J_({n},{k})(inf): extrapolants {quad} and {lin} differ by {err:e}"
        )));
    }
    Ok(JValue { query, value: quad, error_estimate: err, imag_residual: im })
}

/// Value at 0 of the interpolating polynomial through `(xs[i], ys[i])`.
fn lagrange_at_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..xs.len() {
        let mut l = 1.0;
        for j in 0..xs.len() {
            if i != j {
                l *= xs[j] / (xs[j] - xs[i]);
            }
        }
        s += l * ys[i];
    }
    s
}

/// Closed forms of `J_{n,k}(∞)` for `n <= 4`, independent of the quadrature.
pub fn j_infinity_closed_form(n: usize, k: usize) -> Option<f64> {
    let t = (1.0f64 / 3.0).acos();
    match (n, k) {
        (1, 1) | (2, _) => Some(1.0),
        (3, 1) => Some(0.5),
        (3, 2) => Some(1.5),
        (3, 3) => Some(1.0),
        (4, 1) => Some(3.0 * t / PI - 1.0),
        (4, 2) => Some(3.0 * t / PI),
        (4, 3) => Some(2.0),
        (4, 4) => Some(1.0),
        _ => None,
    }
}
