//! Marked Poisson processes restricted to truncated sampling regions.
//!
//! A marked point `(v, h)` has spatial part `v ∈ ℝ^ℓ` and height `h`. Only
//! points inside the region
//!
//! ```text
//! K = { (v, h) : floor <= h <= cap, |v| <= reach + sqrt(cap - h) }
//! ```
//!
//! can influence the diagram on `|w| < reach` below power `cap`, so samplers
//! draw exactly the points of `K`. Heights are drawn band by band (bands are
//! narrow in `sqrt(cap - h)`), each band by inverse CDF, and spatial
//! positions by thinning a uniform draw in the band's widest ball.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::{
    gamma, ln_gamma, ln_unit_ball_volume, norm_constant_beta, norm_constant_beta_prime, r_of_d,
    sectional_model, unit_ball_volume, ModelSpec, SectionSpec,
};
use crate::quad::GaussLegendre;
use crate::rng::{in_ball, poisson, substream, unit_vector};

/// A point `(v, h)` of a marked process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkedPoint {
    pub v: Vec<f64>,
    pub h: f64,
}

impl MarkedPoint {
    pub fn new(v: Vec<f64>, h: f64) -> Self {
        MarkedPoint { v, h }
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    /// `pow(w, (v, h)) = |w - v|² + h`.
    pub fn power(&self, w: &[f64]) -> f64 {
        self.v.iter().zip(w).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() + self.h
    }
}

/// Observation ball radius, margin, height cap and seed of a simulation.
///
/// For β′ models `t_cap` is the depth cap (heights `>= -t_cap`) and
/// `delta_floor` the first shell bound (heights `<= -delta_floor`); for all
/// other models `t_cap` is the height cap and `delta_floor` is unused.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationWindow {
    pub r_obs: f64,
    pub r_margin: f64,
    pub t_cap: f64,
    pub delta_floor: f64,
    pub seed: u64,
}

impl SimulationWindow {
    pub fn new(r_obs: f64, r_margin: f64, t_cap: f64, seed: u64) -> Result<Self> {
        let w = SimulationWindow { r_obs, r_margin, t_cap, delta_floor: 1.0, seed };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(self.r_obs) || !ok(self.r_margin) || !ok(self.delta_floor) || !self.t_cap.is_finite() {
            return domain(format!("invalid simulation window {self:?}"));
        }
        Ok(())
    }

    /// `r_obs + r_margin`: half-width of the clipping box.
    pub fn reach(&self) -> f64 {
        self.r_obs + self.r_margin
    }
}

/// The sampling region `K`, in the heights the sampler draws natively.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub dim: usize,
    pub reach: f64,
    pub cap: f64,
    pub floor: f64,
}

impl Region {
    /// Largest admissible `|v|` at height `h`.
    pub fn lateral(&self, h: f64) -> f64 {
        self.reach + (self.cap - h).max(0.0).sqrt()
    }

    /// Membership of a drawn point; `h_native` is the height before any
    /// section map, `h` the height after it.
    pub fn contains(&self, v: &[f64], h: f64, h_native: f64) -> bool {
        h_native >= self.floor && h <= self.cap && norm(v) <= self.lateral(h)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `f` iterated: `x ∈ ℝ^d` to `((x_1..x_l), x_{l+1}² + ... + x_d²)`.
pub fn section_map(x: &[f64], l: usize) -> MarkedPoint {
    MarkedPoint { v: x[..l].to_vec(), h: x[l..].iter().map(|t| t * t).sum() }
}

/// Height law of a driving process.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Law {
    /// All heights zero, spatial intensity `rho`.
    Atom { rho: f64 },
    /// `coef · h^beta` on `[0, ∞)`.
    Power { coef: f64, beta: f64 },
    /// `coef · (-h)^{-beta}` on `(-∞, 0)`.
    NegPower { coef: f64, beta: f64 },
    /// `coef · e^{lambda h}` on `ℝ`.
    Exponential { coef: f64, lambda: f64 },
    /// Homogeneous process of intensity `rho` in `ℝ^{ℓ+codim}`, mapped by `f`.
    Slab { rho: f64, codim: usize },
    /// Exponential law in `ℝ^{ℓ+codim}` (spatial part), mapped by `f`.
    LiftedExponential { coef: f64, lambda: f64, codim: usize },
}

impl Law {
    /// The law of mapped heights.
    fn mapped(self) -> Law {
        match self {
            Law::Slab { rho, codim } => {
                let m = codim as f64;
                Law::Power { coef: rho * unit_ball_volume(m) * m / 2.0, beta: m / 2.0 - 1.0 }
            }
            Law::LiftedExponential { coef, lambda, codim } => {
                Law::Exponential { coef: coef * (PI / lambda).powf(codim as f64 / 2.0), lambda }
            }
            l => l,
        }
    }

    /// Height `t` at which the expected number of points with
    /// `pow(w, ·) <= t` at a fixed `w` equals `n`.
    fn level(self, dim: usize, n: f64) -> f64 {
        let l = dim as f64;
        let kappa = unit_ball_volume(l);
        match self.mapped() {
            Law::Atom { rho } => (n / (rho * kappa)).powf(2.0 / l),
            Law::Power { coef, beta } => {
                let lnb = ln_gamma(beta + 1.0) + ln_gamma(l / 2.0 + 1.0) - ln_gamma(beta + 2.0 + l / 2.0);
                ((n.ln() - coef.ln() - kappa.ln() - lnb) / (beta + 1.0 + l / 2.0)).exp()
            }
            Law::Exponential { coef, lambda } => {
                ((n * lambda.powf(l / 2.0 + 1.0)).ln() - (coef * kappa * gamma(l / 2.0 + 1.0)).ln()) / lambda
            }
            Law::NegPower { coef, beta } => {
                let lnb = ln_gamma(l / 2.0 + 1.0) + ln_gamma(beta - l / 2.0 - 1.0) - ln_gamma(beta);
                -((n.ln() - coef.ln() - kappa.ln() - lnb) / (1.0 - beta + l / 2.0)).exp()
            }
            _ => unreachable!("mapped laws are atomic, power or exponential"),
        }
    }

    /// Expected number of native points with height in `[lo, hi]`, per unit
    /// spatial volume; `cap` bounds the lifted perpendicular ball.
    fn band_mass(self, lo: f64, hi: f64, cap: f64) -> f64 {
        match self {
            Law::Atom { .. } => unreachable!(),
            Law::Power { coef, beta } => coef * (hi.powf(beta + 1.0) - lo.powf(beta + 1.0)) / (beta + 1.0),
            Law::NegPower { coef, beta } => {
                let (g_lo, g_hi) = (-hi, -lo);
                coef * (g_lo.powf(1.0 - beta) - g_hi.powf(1.0 - beta)) / (beta - 1.0)
            }
            Law::Exponential { coef, lambda } => coef * (lambda * hi).exp() * -(-lambda * (hi - lo)).exp_m1() / lambda,
            Law::Slab { rho, codim } => {
                let m = codim as f64;
                rho * unit_ball_volume(m) * (hi.powf(m / 2.0) - lo.powf(m / 2.0))
            }
            Law::LiftedExponential { coef, lambda, codim } => {
                let m = codim as f64;
                Law::Exponential { coef, lambda }.band_mass(lo, hi, cap)
                    * unit_ball_volume(m)
                    * (cap - lo).max(0.0).powf(m / 2.0)
            }
        }
    }

    /// Draws `(h_mapped, h_native)` from the band `[lo, hi]`; `None` when the
    /// lifted perpendicular part overshoots `cap`.
    fn draw<R: Rng + ?Sized>(self, lo: f64, hi: f64, cap: f64, rng: &mut R) -> Option<(f64, f64)> {
        let u: f64 = rng.random();
        match self {
            Law::Atom { .. } => unreachable!(),
            Law::Power { beta, .. } => {
                let (a, b) = (lo.powf(beta + 1.0), hi.powf(beta + 1.0));
                let h = (a + u * (b - a)).powf(1.0 / (beta + 1.0)).clamp(lo, hi);
                Some((h, h))
            }
            Law::NegPower { beta, .. } => {
                let (a, b) = ((-lo).powf(1.0 - beta), (-hi).powf(1.0 - beta));
                let h = -(a + u * (b - a)).powf(1.0 / (1.0 - beta));
                let h = h.clamp(lo, hi);
                Some((h, h))
            }
            Law::Exponential { lambda, .. } => {
                let t = -(-u * -(-lambda * (hi - lo)).exp_m1()).ln_1p() / lambda;
                let h = (hi - t).clamp(lo, hi);
                Some((h, h))
            }
            Law::Slab { codim, .. } => {
                let m = codim as f64;
                let (a, b) = (lo.powf(m / 2.0), hi.powf(m / 2.0));
                let radius = (a + u * (b - a)).powf(1.0 / m);
                let mut x = vec![0.0; codim];
                unit_vector(rng, &mut x);
                x.iter_mut().for_each(|t| *t *= radius);
                let h = section_map(&x, 0).h;
                Some((h, h))
            }
            Law::LiftedExponential { coef, lambda, codim } => {
                let (h, _) = Law::Exponential { coef, lambda }.draw(lo, hi, cap, rng)?;
                let perp = in_ball(rng, codim, (cap - lo).max(0.0).sqrt());
                let mut x = vec![0.0];
                x.extend(perp);
                let mapped = h + section_map(&x, 1).h;
                (mapped <= cap).then_some((mapped, h))
            }
        }
    }
}

/// Expected count of native points of `law` below `floor` in the region
/// above it, by quadrature over `[floor - 60/λ, floor]`.
fn exponential_tail(coef: f64, lambda: f64, dim: usize, codim: usize, reach: f64, cap: f64, floor: f64) -> f64 {
    let gl = GaussLegendre::new(30);
    let (l, m) = (dim as f64, codim as f64);
    let width = 60.0 / lambda;
    let panels = 12;
    let mut s = 0.0;
    for p in 0..panels {
        let a = floor - width * (p + 1) as f64 / panels as f64;
        let b = floor - width * p as f64 / panels as f64;
        s += gl.integrate(a, b, |h| {
            let lat = unit_ball_volume(l) * (reach + (cap - h).sqrt()).powf(l);
            let perp = unit_ball_volume(m) * (cap - h).powf(m / 2.0);
            (lambda * h).exp() * lat * perp
        });
    }
    coef * s
}

/// Floor below which the expected number of dropped points is `<= 1e-12`.
fn exponential_floor(coef: f64, lambda: f64, dim: usize, codim: usize, reach: f64, cap: f64) -> f64 {
    let mut floor = cap - 1.0 / lambda;
    loop {
        let tail = exponential_tail(coef, lambda, dim, codim, reach, cap, floor);
        if tail <= 1e-12 {
            return floor;
        }
        // The tail decays like e^{λ floor}; jump most of the way at once.
        floor -= (tail / 1e-12).ln().max(1.0) / lambda;
    }
}

/// Depth beyond which the expected number of β′ points in the region is
/// `<= 1e-6`.
fn neg_power_depth(coef: f64, beta: f64, dim: usize, reach: f64) -> f64 {
    let l = dim as f64;
    let kappa = unit_ball_volume(l);
    let tail = |g: f64| {
        coef * kappa * 2f64.powf(l - 1.0)
            * (reach.powf(l) * g.powf(1.0 - beta) / (beta - 1.0) + g.powf(1.0 - beta + l / 2.0) / (beta - 1.0 - l / 2.0))
    };
    let mut g = 1.0;
    while tail(g) > 1e-6 {
        g *= 2.0;
    }
    g
}

/// What drives a simulated diagram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Source {
    /// One of the tessellation models (Gaussian with `γ = 1`).
    Model { model: ModelSpec },
    /// Gaussian model with an explicit `γ`.
    GaussianWithGamma { d: usize, lambda: f64, gamma: f64 },
    /// Homogeneous Poisson process in `ℝ^d` mapped onto the section.
    SectionGroundTruth { spec: SectionSpec },
    /// Gaussian model in `ℝ^{l_ambient}` mapped onto `ℝ^l`.
    GaussianSection { l: usize, l_ambient: usize, lambda: f64, gamma: f64 },
}

impl Source {
    pub fn model(model: ModelSpec) -> Source {
        Source::Model { model }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Source::Model { model } => model.validate(),
            Source::GaussianWithGamma { d, lambda, gamma } => {
                ModelSpec::gaussian(d, lambda)?;
                if !(gamma.is_finite() && gamma > 0.0) {
                    return domain(format!("gamma must be > 0, got {gamma}"));
                }
                Ok(())
            }
            Source::SectionGroundTruth { spec } => spec.validate(),
            Source::GaussianSection { l, l_ambient, lambda, gamma } => {
                if l < 1 || l >= l_ambient {
                    return domain(format!("section needs 1 <= l < l_ambient, got l = {l}, l_ambient = {l_ambient}"));
                }
                Source::GaussianWithGamma { d: l, lambda, gamma }.validate()
            }
        }
    }

    /// Dimension of the diagram.
    pub fn dim(&self) -> usize {
        match *self {
            Source::Model { model } => model.dim(),
            Source::GaussianWithGamma { d, .. } => d,
            Source::SectionGroundTruth { spec } => spec.section_l,
            Source::GaussianSection { l, .. } => l,
        }
    }

    fn law(&self) -> Result<Law> {
        Ok(match *self {
            Source::Model { model } => match model {
                ModelSpec::Beta { d, beta, gamma } if beta == -1.0 => Law::Atom { rho: r_of_d(d) * gamma },
                ModelSpec::Beta { d, beta, gamma } => Law::Power { coef: gamma * norm_constant_beta(d, beta)?, beta },
                ModelSpec::BetaPrime { d, beta, gamma } => {
                    Law::NegPower { coef: gamma * norm_constant_beta_prime(d, beta)?, beta }
                }
                ModelSpec::Gaussian { lambda, .. } => Law::Exponential { coef: 1.0, lambda },
                ModelSpec::PoissonVoronoi { rho, .. } => Law::Atom { rho },
            },
            Source::GaussianWithGamma { lambda, gamma, .. } => Law::Exponential { coef: gamma, lambda },
            Source::SectionGroundTruth { spec } => Law::Slab { rho: spec.rho, codim: spec.codim() },
            Source::GaussianSection { l, l_ambient, lambda, gamma } => {
                Law::LiftedExponential { coef: gamma, lambda, codim: l_ambient - l }
            }
        })
    }

    /// Whether heights are negative and approached through shells.
    pub fn is_shelled(&self) -> bool {
        matches!(self, Source::Model { model: ModelSpec::BetaPrime { .. } })
    }

    /// Height `t` with one expected point whose paraboloid lies below `t`
    /// at a fixed location: the natural height scale of the envelope.
    pub fn anchor(&self) -> Result<f64> {
        Ok(self.law()?.level(self.dim(), 1.0))
    }

    /// Envelope quantile: height with `n` expected points below it.
    pub fn envelope_level(&self, n: f64) -> Result<f64> {
        Ok(self.law()?.level(self.dim(), n))
    }

    /// Height the cap is doubled relative to.
    fn reference_height(&self) -> Result<f64> {
        Ok(match self.law()?.mapped() {
            Law::Exponential { .. } => self.anchor()?,
            _ => 0.0,
        })
    }

    /// Default window: the cap sits where 25 points are expected below it
    /// (so a vertex above the cap has probability `e^{-25}`) and the margin is
    /// twice the square root of the cap's distance from the reference height.
    pub fn default_window(&self, r_obs: f64, seed: u64) -> Result<SimulationWindow> {
        self.validate()?;
        let cap = self.envelope_level(25.0)?;
        let mut w = SimulationWindow { r_obs, r_margin: 1.0, t_cap: cap, delta_floor: 1.0, seed };
        if let Law::NegPower { coef, beta } = self.law()? {
            let sigma = -self.anchor()?;
            w.r_margin = 4.0 * sigma.sqrt();
            w.delta_floor = -cap;
            w.t_cap = neg_power_depth(coef, beta, self.dim(), w.reach()).max(64.0 * sigma);
        } else {
            w.r_margin = 2.0 * (cap - self.reference_height()?).sqrt();
        }
        w.validate()?;
        Ok(w)
    }

    /// The sampling region of `win`.
    pub fn region(&self, win: &SimulationWindow) -> Result<Region> {
        win.validate()?;
        let dim = self.dim();
        let reach = win.reach();
        Ok(match self.law()? {
            Law::Atom { .. } | Law::Power { .. } | Law::Slab { .. } => {
                if win.t_cap <= 0.0 {
                    return domain(format!("height cap must be > 0 for this model, got {}", win.t_cap));
                }
                Region { dim, reach, cap: win.t_cap, floor: 0.0 }
            }
            Law::NegPower { .. } => {
                if win.t_cap <= win.delta_floor {
                    return domain("beta-prime depth cap must exceed delta_floor");
                }
                Region { dim, reach, cap: -win.delta_floor, floor: -win.t_cap }
            }
            Law::Exponential { coef, lambda } => {
                Region { dim, reach, cap: win.t_cap, floor: exponential_floor(coef, lambda, dim, 0, reach, win.t_cap) }
            }
            Law::LiftedExponential { coef, lambda, codim } => Region {
                dim,
                reach,
                cap: win.t_cap,
                floor: exponential_floor(coef, lambda, dim, codim, reach, win.t_cap),
            },
        })
    }

    /// Power below which the diagram of a sample of `win` is exact.
    pub fn certified_cap(&self, win: &SimulationWindow) -> f64 {
        if self.is_shelled() {
            -win.delta_floor
        } else {
            win.t_cap
        }
    }

    /// Enlarged window: the cap moves twice as far from the reference height
    /// (β′: the shell bound halves and the depth doubles) and the margin
    /// doubles.
    pub fn doubled(&self, win: &SimulationWindow) -> Result<SimulationWindow> {
        let mut w = *win;
        w.r_margin *= 2.0;
        if self.is_shelled() {
            w.delta_floor /= 2.0;
            w.t_cap *= 2.0;
        } else {
            let h0 = self.reference_height()?;
            w.t_cap = h0 + 2.0 * (win.t_cap - h0);
        }
        Ok(w)
    }

    /// One β′ peeling step: next dyadic shell, and a doubled margin when
    /// `widen` is set.
    pub fn next_shell(&self, win: &SimulationWindow, widen: bool) -> SimulationWindow {
        let mut w = *win;
        w.delta_floor /= 2.0;
        if widen {
            w.r_margin *= 2.0;
        }
        w
    }

    /// Points of the region of `win`, minus those inside `exclude` (which must
    /// be contained in it).
    pub fn sample_excluding<R: Rng + ?Sized>(
        &self,
        win: &SimulationWindow,
        exclude: Option<&Region>,
        rng: &mut R,
    ) -> Result<Vec<MarkedPoint>> {
        self.validate()?;
        let mut region = self.region(win)?;
        if let Some(old) = exclude {
            region.floor = region.floor.min(old.floor);
        }
        self.sample_in(&region, exclude, rng)
    }

    /// Points of a precomputed region (see [`Source::region`]).
    pub fn sample_in<R: Rng + ?Sized>(&self, region: &Region, exclude: Option<&Region>, rng: &mut R) -> Result<Vec<MarkedPoint>> {
        Ok(sample_region(self.law()?, region, exclude, rng))
    }

    /// Points of the region of `win`.
    pub fn sample<R: Rng + ?Sized>(&self, win: &SimulationWindow, rng: &mut R) -> Result<Vec<MarkedPoint>> {
        self.sample_excluding(win, None, rng)
    }

    /// Expected number of points in the region of `win`, expanding
    /// `(reach + sqrt(cap - h))^ℓ` binomially so every term is a Beta or
    /// Gamma integral. Truncation at the floor (Gaussian, `<= 1e-12`) and at
    /// the depth cap (β′, `<= 1e-6`) is ignored.
    pub fn expected_count(&self, win: &SimulationWindow) -> Result<f64> {
        let region = self.region(win)?;
        let l = region.dim;
        let kappa = unit_ball_volume(l as f64);
        let law = self.law()?.mapped();
        if let Law::Atom { rho } = law {
            return Ok(rho * kappa * region.lateral(0.0).powf(l as f64));
        }
        let mut total = 0.0;
        for k in 0..=l {
            let binom = (1..=k).fold(1.0, |acc, i| acc * (l + 1 - i) as f64 / i as f64);
            let e = k as f64 / 2.0;
            // ∫ density(h) (cap - h)^{k/2} dh over the region's heights.
            let moment = match law {
                Law::Power { coef, beta } => {
                    let lnb = ln_gamma(beta + 1.0) + ln_gamma(e + 1.0) - ln_gamma(beta + e + 2.0);
                    coef * (lnb + (beta + 1.0 + e) * region.cap.ln()).exp()
                }
                Law::Exponential { coef, lambda } => {
                    coef * (lambda * region.cap + ln_gamma(e + 1.0) - (e + 1.0) * lambda.ln()).exp()
                }
                Law::NegPower { coef, beta } => {
                    let delta = -region.cap;
                    let lnb = ln_gamma(e + 1.0) + ln_gamma(beta - 1.0 - e) - ln_gamma(beta);
                    coef * (lnb + (1.0 - beta + e) * delta.ln()).exp()
                }
                _ => unreachable!("mapped laws are atomic, power or exponential"),
            };
            total += binom * region.reach.powi((l - k) as i32) * moment;
        }
        Ok(kappa * total)
    }
}

/// Band edges in `s = sqrt(cap - h)`, each band at most 10% of the lateral
/// radius wide so thinning keeps most draws.
fn bands(region: &Region) -> Vec<f64> {
    let s_max = (region.cap - region.floor).max(0.0).sqrt();
    let mut edges = vec![0.0];
    let mut s = 0.0;
    while s < s_max {
        s = (s + 0.1 * (region.reach + s)).min(s_max);
        edges.push(s);
    }
    edges
}

fn sample_region<R: Rng + ?Sized>(law: Law, region: &Region, exclude: Option<&Region>, rng: &mut R) -> Vec<MarkedPoint> {
    let dim = region.dim;
    let l = dim as f64;
    let mut out = Vec::new();
    let keep = |v: &[f64], h: f64, hn: f64| exclude.is_none_or(|old| !old.contains(v, h, hn));
    if let Law::Atom { rho } = law {
        let radius = region.lateral(0.0);
        let n = poisson(rng, rho * unit_ball_volume(l) * radius.powf(l));
        for _ in 0..n {
            let v = in_ball(rng, dim, radius);
            if keep(&v, 0.0, 0.0) {
                out.push(MarkedPoint { v, h: 0.0 });
            }
        }
        return out;
    }
    let edges = bands(region);
    let ln_kappa = ln_unit_ball_volume(l);
    for w in edges.windows(2) {
        let (s_a, s_b) = (w[0], w[1]);
        let (lo, hi) = (region.cap - s_b * s_b, region.cap - s_a * s_a);
        let radius = region.reach + s_b;
        let mean = law.band_mass(lo.max(region.floor), hi, region.cap) * (ln_kappa + l * radius.ln()).exp();
        let n = poisson(rng, mean);
        for _ in 0..n {
            let drawn = law.draw(lo.max(region.floor), hi, region.cap, rng);
            let v = in_ball(rng, dim, radius);
            let Some((h, hn)) = drawn else { continue };
            if norm(&v) <= region.lateral(h) && keep(&v, h, hn) {
                out.push(MarkedPoint { v, h });
            }
        }
    }
    out
}

fn check_model(model: &ModelSpec, want: &str, ok: bool) -> Result<()> {
    model.validate()?;
    if !ok {
        return domain(format!("expected a {want} model, got {model:?}"));
    }
    Ok(())
}

/// β-model points in the region of `win` (β = −1 is the homogeneous case).
pub fn sample_beta(model: &ModelSpec, win: &SimulationWindow) -> Result<Vec<MarkedPoint>> {
    check_model(model, "beta", matches!(model, ModelSpec::Beta { .. }))?;
    Source::model(*model).sample(win, &mut substream(win.seed, 0, 0))
}

/// β′-model points with heights in `[-t_cap, -delta_floor]`.
pub fn sample_beta_prime(model: &ModelSpec, win: &SimulationWindow) -> Result<Vec<MarkedPoint>> {
    sample_beta_prime_shell(model, win, 0)
}

/// Points added by peeling shell `k`: the region for the bound
/// `delta_floor · 2^{-k}` minus the region for shell `k - 1`.
pub fn sample_beta_prime_shell(model: &ModelSpec, win: &SimulationWindow, k: u32) -> Result<Vec<MarkedPoint>> {
    check_model(model, "beta-prime", matches!(model, ModelSpec::BetaPrime { .. }))?;
    let src = Source::model(*model);
    let mut rng = substream(win.seed, 0, k as u64);
    let mut w = *win;
    w.delta_floor = win.delta_floor / 2f64.powi(k as i32);
    if k == 0 {
        return src.sample(&w, &mut rng);
    }
    let mut prev = w;
    prev.delta_floor *= 2.0;
    let old = src.region(&prev)?;
    src.sample_excluding(&w, Some(&old), &mut rng)
}

/// Gaussian-model points (`γ = 1`) with heights in `[floor, t_cap]`.
pub fn sample_gaussian(model: &ModelSpec, win: &SimulationWindow) -> Result<Vec<MarkedPoint>> {
    check_model(model, "gaussian", matches!(model, ModelSpec::Gaussian { .. }))?;
    Source::model(*model).sample(win, &mut substream(win.seed, 0, 0))
}

/// Homogeneous Poisson points (all heights zero) in the ball of radius
/// `reach + sqrt(t_cap)`.
pub fn sample_homogeneous(model: &ModelSpec, win: &SimulationWindow) -> Result<Vec<MarkedPoint>> {
    let ok = matches!(model, ModelSpec::PoissonVoronoi { .. })
        || matches!(model, ModelSpec::Beta { beta, .. } if *beta == -1.0);
    check_model(model, "homogeneous", ok)?;
    Source::model(*model).sample(win, &mut substream(win.seed, 0, 0))
}

/// Homogeneous Poisson points of `ℝ^d` mapped onto the section by `f`.
pub fn sample_sectional_ground_truth(spec: &SectionSpec, win: &SimulationWindow) -> Result<Vec<MarkedPoint>> {
    spec.validate()?;
    sectional_model(spec)?;
    Source::SectionGroundTruth { spec: *spec }.sample(win, &mut substream(win.seed, 0, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ks_one_sample;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
    }

    /// Runs `reps` replicates and returns counts of points in `sel` plus the
    /// selected heights.
    fn collect<F: Fn(&MarkedPoint) -> bool>(src: Source, win: SimulationWindow, reps: u64, sel: F) -> (Vec<f64>, Vec<f64>) {
        let mut counts = Vec::new();
        let mut hs = Vec::new();
        let region = src.region(&win).unwrap();
        for r in 0..reps {
            let pts = src.sample_in(&region, None, &mut substream(win.seed, r, 0)).unwrap();
            let chosen: Vec<&MarkedPoint> = pts.iter().filter(|p| sel(p)).collect();
            counts.push(chosen.len() as f64);
            hs.extend(chosen.iter().map(|p| p.h));
        }
        (counts, hs)
    }

    #[test]
    fn beta_counts_and_heights() {
        // γ c_{2,0} = 1 on [-1, 1] × [0, 1]: two points expected.
        let src = Source::model(ModelSpec::beta(1, 0.0, PI).unwrap());
        let win = SimulationWindow::new(1.0, 0.5, 1.5, 11).unwrap();
        let (counts, hs) = collect(src, win, 10_000, |p| p.v[0].abs() <= 1.0 && p.h <= 1.0);
        let (m, v) = mean_var(&counts);
        assert!((m / 2.0 - 1.0).abs() < 0.05, "mean {m}");
        assert!((v / m - 1.0).abs() < 0.05, "dispersion {}", v / m);
        let (d, _) = ks_one_sample(&hs[..10_000], |h| h);
        assert!(d < 0.02, "KS {d}");
    }

    #[test]
    fn beta_height_profile() {
        // ℓ = 2, β = 1: count γ c_{3,1} A T²/2 and CDF (h/T)².
        let gamma = 2.0;
        let c = norm_constant_beta(2, 1.0).unwrap();
        let src = Source::model(ModelSpec::beta(2, 1.0, gamma).unwrap());
        let win = SimulationWindow::new(1.0, 0.5, 1.0, 3).unwrap();
        let t = 0.8;
        let (counts, hs) = collect(src, win, 4000, |p| p.v[0].abs() <= 0.5 && p.v[1].abs() <= 0.5 && p.h <= t);
        let (m, _) = mean_var(&counts);
        let want = gamma * c * t * t / 2.0;
        assert!((m / want - 1.0).abs() < 0.05, "{m} vs {want}");
        let (d, _) = ks_one_sample(&hs, |h| (h / t).powi(2));
        assert!(d < 0.02 * (10_000.0 / hs.len() as f64).sqrt().max(1.0), "KS {d}");
    }

    #[test]
    fn gaussian_counts_and_heights() {
        let src = Source::model(ModelSpec::gaussian(1, 1.0).unwrap());
        let win = SimulationWindow::new(1.0, 0.5, 0.5, 5).unwrap();
        let (counts, hs) = collect(src, win, 10_000, |p| p.v[0].abs() <= 0.5 && p.h <= 0.0);
        let (m, v) = mean_var(&counts);
        assert!((m - 1.0).abs() < 0.05, "mean {m}");
        assert!((v / m - 1.0).abs() < 0.05);
        let (d, _) = ks_one_sample(&hs, |h| h.exp());
        assert!(d < 0.02, "KS {d}");
    }

    #[test]
    fn gaussian_floor_keeps_tail_small() {
        let src = Source::model(ModelSpec::gaussian(2, 1.0).unwrap());
        let win = SimulationWindow::new(5.0, 2.0, 1.0, 0).unwrap();
        let r = src.region(&win).unwrap();
        let tail = exponential_tail(1.0, 1.0, 2, 0, r.reach, r.cap, r.floor);
        assert!(tail <= 1e-12 && tail > 0.0);
        assert!(r.floor < 0.0);
    }

    #[test]
    fn beta_prime_shell_count() {
        // ℓ = 1, β = 3, γ = π, |v| <= 1/2, h ∈ [-2, -1]: 3/4 expected.
        let model = ModelSpec::beta_prime(1, 3.0, PI).unwrap();
        let src = Source::model(model);
        let mut win = SimulationWindow::new(1.0, 0.5, 4.0, 2).unwrap();
        win.delta_floor = 0.5;
        let (counts, _) = collect(src, win, 10_000, |p| p.v[0].abs() <= 0.5 && (-2.0..=-1.0).contains(&p.h));
        let (m, v) = mean_var(&counts);
        assert!((m / 0.75 - 1.0).abs() < 0.05, "{m}");
        assert!((v / m - 1.0).abs() < 0.05);
    }

    #[test]
    fn beta_prime_shells_approach_zero() {
        let model = ModelSpec::beta_prime(1, 3.0, PI).unwrap();
        let mut win = SimulationWindow::new(2.0, 1.0, 8.0, 9).unwrap();
        win.delta_floor = 0.25;
        let mut last = f64::INFINITY;
        for k in 1..8 {
            let pts = sample_beta_prime_shell(&model, &win, k).unwrap();
            let bound = win.delta_floor / 2f64.powi(k as i32 - 1);
            for p in &pts {
                assert!(p.h < 0.0);
                // New points are above the previous shell bound or outside the
                // previous lateral range.
                assert!(p.h >= -win.t_cap);
            }
            let deepest_new = pts.iter().filter(|p| p.h > -bound).map(|p| -p.h).fold(0.0, f64::max);
            assert!(deepest_new <= bound && deepest_new <= last);
            last = bound;
        }
    }

    #[test]
    fn homogeneous_counts() {
        let model = ModelSpec::poisson_voronoi(2, 10.0).unwrap();
        let win = SimulationWindow::new(0.8, 0.1, 0.04, 4).unwrap();
        let src = Source::model(model);
        let (counts, hs) = collect(src, win, 10_000, |p| p.v[0].abs() <= 0.5 && p.v[1].abs() <= 0.5);
        let (m, v) = mean_var(&counts);
        assert!((m / 10.0 - 1.0).abs() < 0.05, "{m}");
        assert!((v / m - 1.0).abs() < 0.05, "{}", v / m);
        assert!(hs.iter().all(|h| *h == 0.0));
        assert!(sample_homogeneous(&model, &win).unwrap().iter().all(|p| p.h == 0.0));
    }

    #[test]
    fn section_map_example() {
        assert_eq!(section_map(&[1.0, 2.0, 3.0], 2), MarkedPoint::new(vec![1.0, 2.0], 9.0));
    }

    #[test]
    fn ground_truth_counts_and_heights() {
        for (d, l, cdf) in [(4usize, 2usize, 1.0f64), (3, 2, 0.5)] {
            let spec = SectionSpec::new(d, l, 1.0).unwrap();
            let src = Source::SectionGroundTruth { spec };
            let win = SimulationWindow::new(1.0, 0.5, 2.5, 6).unwrap();
            let t = 2.0;
            let (counts, hs) = collect(src, win, 4000, |p| p.v[0].abs() <= 0.5 && p.v[1].abs() <= 0.5 && p.h <= t);
            let (m, _) = mean_var(&counts);
            let m_codim = (d - l) as f64;
            let want = unit_ball_volume(m_codim) * t.powf(m_codim / 2.0);
            assert!((m / want - 1.0).abs() < 0.05, "d = {d}: {m} vs {want}");
            let (dist, _) = ks_one_sample(&hs, |h| (h / t).powf(cdf));
            assert!(dist < 0.02, "d = {d}: KS {dist}");
        }
    }

    #[test]
    fn gaussian_section_intensity() {
        // Mapped intensity γ (π/λ)^{m/2} e^{λh}: with λ = π, m = 1, the mapped
        // process has density e^{πh}; count in [-1/2, 1/2] × (-∞, 0] is 1/π.
        let src = Source::GaussianSection { l: 1, l_ambient: 2, lambda: PI, gamma: 1.0 };
        let win = SimulationWindow::new(1.0, 0.5, 0.3, 8).unwrap();
        let (counts, hs) = collect(src, win, 20_000, |p| p.v[0].abs() <= 0.5 && p.h <= 0.0);
        let (m, _) = mean_var(&counts);
        assert!((m * PI - 1.0).abs() < 0.05, "{m}");
        let (d, _) = ks_one_sample(&hs, |h| (PI * h).exp());
        assert!(d < 0.03, "KS {d}");
    }

    #[test]
    fn expected_count_matches_sampling() {
        for src in [
            Source::model(ModelSpec::beta(2, 0.5, 1.0).unwrap()),
            Source::model(ModelSpec::gaussian(2, 2.0).unwrap()),
            Source::model(ModelSpec::poisson_voronoi(2, 1.0).unwrap()),
        ] {
            let win = src.default_window(2.0, 1).unwrap();
            let want = src.expected_count(&win).unwrap();
            let (counts, _) = collect(src, win, 400, |_| true);
            let (m, _) = mean_var(&counts);
            let se = (want / 400.0).sqrt();
            assert!((m - want).abs() < 4.0 * se, "{src:?}: {m} vs {want}");
        }
    }

    #[test]
    fn extension_completes_the_larger_region() {
        let src = Source::model(ModelSpec::beta(2, 1.0, 1.0).unwrap());
        let small = src.default_window(2.0, 1).unwrap();
        let big = src.doubled(&small).unwrap();
        let old = src.region(&small).unwrap();
        let reps = 400;
        let mut union = Vec::new();
        for r in 0..reps {
            let a = src.sample(&small, &mut substream(1, r, 0)).unwrap();
            let b = src.sample_excluding(&big, Some(&old), &mut substream(1, r, 1)).unwrap();
            assert!(b.iter().all(|p| !old.contains(&p.v, p.h, p.h)));
            union.push((a.len() + b.len()) as f64);
        }
        let want = src.expected_count(&big).unwrap();
        let (m, _) = mean_var(&union);
        assert!((m - want).abs() < 4.0 * (want / reps as f64).sqrt(), "{m} vs {want}");
    }

    #[test]
    fn anchors_solve_unit_count() {
        // Beta: N(s) = γ c κ s^{β+1+ℓ/2} B(β+1, ℓ/2+1); for the d = 3, ℓ = 2
        // section (β = -1/2, γ = π²) this is (3/(4π))^{2/3}.
        let src = Source::model(sectional_model(&SectionSpec::new(3, 2, 1.0).unwrap()).unwrap());
        assert!((src.anchor().unwrap() - (3.0 / (4.0 * PI)).powf(2.0 / 3.0)).abs() < 1e-12);
        // Homogeneous: ρ π s = 1.
        let src = Source::model(ModelSpec::poisson_voronoi(2, 2.0).unwrap());
        assert!((src.anchor().unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-14);
        // Gaussian ℓ = 1, λ = 1: 2 e^s Γ(3/2) = 1.
        let src = Source::model(ModelSpec::gaussian(1, 1.0).unwrap());
        let s = src.anchor().unwrap();
        assert!((2.0 * s.exp() * gamma(1.5) - 1.0).abs() < 1e-12);
        // Ground truth and its Beta equivalent agree.
        let spec = SectionSpec::new(5, 2, 1.3).unwrap();
        let a = Source::SectionGroundTruth { spec }.anchor().unwrap();
        let b = Source::model(sectional_model(&spec).unwrap()).anchor().unwrap();
        assert!((a / b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_given_seed() {
        let model = ModelSpec::beta(2, 2.0, 1.0).unwrap();
        let win = Source::model(model).default_window(3.0, 77).unwrap();
        assert_eq!(sample_beta(&model, &win).unwrap(), sample_beta(&model, &win).unwrap());
        let other = SimulationWindow { seed: 78, ..win };
        assert_ne!(sample_beta(&model, &win).unwrap(), sample_beta(&model, &other).unwrap());
    }

    #[test]
    fn wrong_model_kind_rejected() {
        let win = SimulationWindow::new(1.0, 1.0, 1.0, 0).unwrap();
        assert!(sample_beta(&ModelSpec::gaussian(2, 1.0).unwrap(), &win).is_err());
        assert!(sample_gaussian(&ModelSpec::beta(2, 1.0, 1.0).unwrap(), &win).is_err());
        assert!(SimulationWindow::new(-1.0, 1.0, 1.0, 0).is_err());
    }
}
