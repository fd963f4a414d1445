//! Monte-Carlo estimation of typical-cell and face statistics, the
//! distributional checks of the sectional and Gaussian identities, and the
//! high-dimensional convergence diagnostics.
//!
//! Replicates use disjoint RNG substreams and are aggregated in index order,
//! so results depend only on the seed, never on the thread count.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{E, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed_forms::{
    expected_cell_volume, expected_f_vector, expected_intrinsic_volume, face_intensity, gaussian_cell_volume,
    limit_f_vector, limit_face_intensity, limit_intrinsic_volume, FaceIntensityQuery, TypicalFaceQuery,
};
use crate::error::{domain, Error, Result};
use crate::jfunc::QuadratureConfig;
use crate::laguerre::{build_diagram, hausdorff, restrict_interior_cells, LaguerreDiagram};
use crate::model::{ln_gamma, r_of_d, sectional_model, unit_ball_volume, ModelSpec, SectionSpec};
use crate::process::{MarkedPoint, SimulationWindow, Source};
use crate::rng::substream;
use crate::stats::{chi_square_two_sample, ks_two_sample, mean_se, ratio_estimate, TestReport, Thresholds};

/// Replicates are collected in batches of this size when sampling up to a
/// cell count; fixed so the stopping point does not depend on threads.
const BATCH: usize = 8;

/// Settings shared by all Monte-Carlo runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McConfig {
    pub r_obs: f64,
    pub seed: u64,
    /// Replicates for fixed-size runs.
    pub replicates: usize,
    /// Fewer interior cells than this is an error.
    pub min_cells: usize,
    pub threads: usize,
    pub thresholds: Thresholds,
    /// Window doublings allowed before giving up.
    pub max_escalations: usize,
    /// β′ shells allowed before giving up.
    pub shell_budget: usize,
    /// Overrides the source's default window (the seed is taken from here).
    pub window: Option<SimulationWindow>,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            r_obs: 10.0,
            seed: 1,
            replicates: 20,
            min_cells: 100,
            threads: 1,
            thresholds: Thresholds::default(),
            max_escalations: 3,
            shell_budget: 24,
            window: None,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_obs.is_finite() && self.r_obs > 0.0) {
            return domain(format!("r_obs must be > 0, got {}", self.r_obs));
        }
        if self.threads == 0 {
            return domain("threads must be >= 1");
        }
        if let Some(w) = &self.window {
            w.validate()?;
        }
        Ok(())
    }

    pub fn window_for(&self, source: &Source) -> Result<SimulationWindow> {
        match self.window {
            Some(w) => Ok(SimulationWindow { seed: self.seed, ..w }),
            None => source.default_window(self.r_obs, self.seed),
        }
    }

    /// Runs `f` on a pool of `threads` workers (nested parallel work included).
    pub fn install<T: Send, F: FnOnce() -> T + Send>(&self, f: F) -> Result<T> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
        Ok(pool.install(f))
    }
}

/// A diagram whose cells meeting the observation ball are exact.
#[derive(Debug, Clone)]
pub struct CertifiedDiagram {
    pub diagram: LaguerreDiagram,
    pub window: SimulationWindow,
    pub escalations: usize,
    /// β′ only: peeling stopped because two successive shells added no
    /// point with a cell meeting the observation ball.
    pub heuristic_stop: bool,
}

fn build_certified(source: &Source, points: &[MarkedPoint], win: &SimulationWindow) -> Result<Option<LaguerreDiagram>> {
    if points.is_empty() {
        return Ok(None);
    }
    let mut diag = build_diagram(points, win)?;
    diag.certified_cap = source.certified_cap(win);
    Ok(Some(diag))
}

/// Simulates replicate `replicate` and enlarges the window until every cell
/// meeting `B_{r_obs}` is certified exact. New points come from fresh
/// substreams and only fill the difference of the sampling regions, so the
/// result is a sample of the final window.
pub fn simulate_certified(source: &Source, win: &SimulationWindow, replicate: u64, cfg: &McConfig) -> Result<CertifiedDiagram> {
    source.validate()?;
    let mut w = *win;
    let mut region = source.region(&w)?;
    let mut points = source.sample_in(&region, None, &mut substream(win.seed, replicate, 0))?;
    let mut diag = build_certified(source, &points, &w)?;
    if source.is_shelled() {
        return peel(source, w, region, points, diag, replicate, cfg);
    }
    for attempt in 0..=cfg.max_escalations {
        let cert = diag.as_ref().map(|d| d.certificate());
        if let (Some(d), Some(c)) = (&diag, cert) {
            if c.ok() {
                return Ok(CertifiedDiagram { diagram: d.clone(), window: w, escalations: attempt, heuristic_stop: false });
            }
        }
        if attempt == cfg.max_escalations {
            break;
        }
        let next = source.doubled(&w)?;
        let mut rng = substream(win.seed, replicate, attempt as u64 + 1);
        points.extend(source.sample_excluding(&next, Some(&region), &mut rng)?);
        let mut r = source.region(&next)?;
        r.floor = r.floor.min(region.floor);
        region = r;
        w = next;
        diag = build_certified(source, &points, &w)?;
    }
    Err(Error::BoundaryContamination(format!(
        "replicate {replicate}: window not certified after {} doublings",
        cfg.max_escalations
    )))
}

fn peel(
    source: &Source,
    mut w: SimulationWindow,
    mut region: crate::process::Region,
    mut points: Vec<MarkedPoint>,
    mut diag: Option<LaguerreDiagram>,
    replicate: u64,
    cfg: &McConfig,
) -> Result<CertifiedDiagram> {
    let seed = w.seed;
    let mut quiet = 0;
    for shell in 0..=cfg.shell_budget {
        let cert = diag.as_ref().map(|d| d.certificate());
        if let (Some(d), Some(c)) = (&diag, cert) {
            if c.ok() {
                return Ok(CertifiedDiagram { diagram: d.clone(), window: w, escalations: shell, heuristic_stop: false });
            }
            if quiet >= 2 && c.reach_violations == 0 {
                let mut d = d.clone();
                d.certified_cap = 0.0;
                return Ok(CertifiedDiagram { diagram: d, window: w, escalations: shell, heuristic_stop: true });
            }
        }
        if shell == cfg.shell_budget {
            break;
        }
        let widen = cert.is_none_or(|c| c.reach_violations > 0);
        let next = if cert.is_some_and(|c| c.cap_violations == 0) {
            SimulationWindow { r_margin: 2.0 * w.r_margin, ..w }
        } else {
            source.next_shell(&w, widen)
        };
        let old_len = points.len();
        let mut rng = substream(seed, replicate, shell as u64 + 1);
        points.extend(source.sample_excluding(&next, Some(&region), &mut rng)?);
        let mut r = source.region(&next)?;
        r.floor = r.floor.min(region.floor);
        region = r;
        w = next;
        diag = build_certified(source, &points, &w)?;
        let r_obs = w.r_obs;
        let new_extreme = diag.as_ref().is_some_and(|d| {
            d.cells[old_len..].iter().any(|c| {
                if c.is_empty() {
                    return false;
                }
                let (ctr, rad) = c.bounding_ball();
                ctr.iter().map(|x| x * x).sum::<f64>().sqrt() - rad <= r_obs
            })
        });
        quiet = if new_extreme || widen { 0 } else { quiet + 1 };
    }
    Err(Error::PeelingNonTermination { shells: cfg.shell_budget })
}

/// One interior cell of a replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub replicate: u64,
    pub volume: f64,
    /// Perimeter in the plane, surface area in space, 2 on the line.
    pub boundary: f64,
    pub f_vector: Vec<usize>,
    pub centre: Vec<f64>,
}

/// Per-replicate summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSummary {
    pub replicate: u64,
    pub cells: Vec<CellRecord>,
    /// Number of k-faces with centre in the observation ball, k = 0..=ℓ.
    pub face_counts: Vec<usize>,
    pub escalations: usize,
    pub heuristic_stop: bool,
    pub points: usize,
}

fn summarize(source: &Source, win: &SimulationWindow, replicate: u64, cfg: &McConfig) -> Result<ReplicateSummary> {
    let cd = simulate_certified(source, win, replicate, cfg)?;
    let d = &cd.diagram;
    let cells = restrict_interior_cells(d, win.r_obs)?
        .into_iter()
        .map(|c| CellRecord {
            replicate,
            volume: c.measures.volume,
            boundary: c.measures.surface,
            centre: c.centre().unwrap(),
            f_vector: c.measures.f_vector,
        })
        .collect();
    let face_counts = (0..=d.dim).map(|k| d.interior_faces(k, win.r_obs).count()).collect();
    Ok(ReplicateSummary {
        replicate,
        cells,
        face_counts,
        escalations: cd.escalations,
        heuristic_stop: cd.heuristic_stop,
        points: d.nuclei.len(),
    })
}

/// Interior cells of several replicates with the run's metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypicalCellSample {
    pub source: Source,
    pub window: SimulationWindow,
    pub seed: u64,
    pub replicates: Vec<ReplicateSummary>,
}

impl TypicalCellSample {
    pub fn cells(&self) -> impl Iterator<Item = &CellRecord> {
        self.replicates.iter().flat_map(|r| r.cells.iter())
    }

    pub fn cell_count(&self) -> usize {
        self.replicates.iter().map(|r| r.cells.len()).sum()
    }

    pub fn volumes(&self) -> Vec<f64> {
        self.cells().map(|c| c.volume).collect()
    }

    pub fn f0_counts(&self) -> BTreeMap<u64, u64> {
        let mut m = BTreeMap::new();
        for c in self.cells() {
            *m.entry(c.f_vector[0] as u64).or_insert(0) += 1;
        }
        m
    }

    pub fn escalations(&self) -> usize {
        self.replicates.iter().map(|r| r.escalations).sum()
    }

    /// Ratio estimate (with delta-method SE) of the mean of `f` over cells,
    /// treating replicates as the independent units.
    pub fn cell_mean<F: Fn(&CellRecord) -> f64>(&self, f: F) -> (f64, f64) {
        let num: Vec<f64> = self.replicates.iter().map(|r| r.cells.iter().map(&f).sum()).collect();
        let den: Vec<f64> = self.replicates.iter().map(|r| r.cells.len() as f64).collect();
        ratio_estimate(&num, &den)
    }
}

fn arm_replicate(arm: u64, i: u64) -> u64 {
    (arm << 32) | i
}

fn run_batch(source: &Source, win: &SimulationWindow, arm: u64, range: std::ops::Range<u64>, cfg: &McConfig) -> Result<Vec<ReplicateSummary>> {
    let out: Vec<Result<ReplicateSummary>> =
        cfg.install(|| range.into_par_iter().map(|i| summarize(source, win, arm_replicate(arm, i), cfg)).collect())?;
    out.into_iter().collect()
}

/// Runs `cfg.replicates` replicates.
pub fn sample_typical_cells(source: &Source, cfg: &McConfig) -> Result<TypicalCellSample> {
    sample_arm(source, cfg, 0, Some(cfg.replicates), None)
}

/// Runs replicates in batches until at least `n_cells` interior cells are
/// collected.
pub fn sample_cells_until(source: &Source, cfg: &McConfig, arm: u64, n_cells: usize) -> Result<TypicalCellSample> {
    sample_arm(source, cfg, arm, None, Some(n_cells))
}

fn sample_arm(source: &Source, cfg: &McConfig, arm: u64, reps: Option<usize>, n_cells: Option<usize>) -> Result<TypicalCellSample> {
    cfg.validate()?;
    source.validate()?;
    if source.dim() > 3 {
        return Err(Error::Dimension(source.dim()));
    }
    let win = cfg.window_for(source)?;
    let mut sample = TypicalCellSample { source: *source, window: win, seed: cfg.seed, replicates: Vec::new() };
    match (reps, n_cells) {
        (Some(n), _) => sample.replicates = run_batch(source, &win, arm, 0..n as u64, cfg)?,
        (None, Some(target)) => {
            let mut next = 0u64;
            while sample.cell_count() < target {
                let batch = run_batch(source, &win, arm, next..next + BATCH as u64, cfg)?;
                if next > 0 && batch.iter().all(|r| r.cells.is_empty()) {
                    return Err(Error::InsufficientSample { got: sample.cell_count(), need: target });
                }
                sample.replicates.extend(batch);
                next += BATCH as u64;
            }
        }
        _ => unreachable!(),
    }
    Ok(sample)
}

/// Closed-form description of a source, when one exists.
#[derive(Debug, Clone, Copy, PartialEq)]
enum ClosedForm {
    /// Section of the `d`-dimensional Poisson-Voronoi tessellation with
    /// intensity `rho`; `d = l` is the tessellation itself.
    Section { d: usize, l: usize, rho: f64 },
    Gaussian { l: usize, lambda: f64 },
}

fn closed_form_of(source: &Source) -> Option<ClosedForm> {
    match *source {
        Source::Model { model } => match model {
            ModelSpec::Beta { d: l, beta, gamma } => {
                let dd = 2.0 * (beta + 1.0) + l as f64;
                if (dd - dd.round()).abs() > 1e-9 || dd.round() < l as f64 {
                    return None;
                }
                let d = dd.round() as usize;
                Some(ClosedForm::Section { d, l, rho: gamma * r_of_d(d) })
            }
            ModelSpec::PoissonVoronoi { d, rho } => Some(ClosedForm::Section { d, l: d, rho }),
            ModelSpec::Gaussian { d, lambda } => Some(ClosedForm::Gaussian { l: d, lambda }),
            ModelSpec::BetaPrime { .. } => None,
        },
        Source::GaussianWithGamma { d, lambda, .. } => Some(ClosedForm::Gaussian { l: d, lambda }),
        Source::GaussianSection { l, lambda, .. } => Some(ClosedForm::Gaussian { l, lambda }),
        Source::SectionGroundTruth { spec } => {
            Some(ClosedForm::Section { d: spec.ambient_d, l: spec.section_l, rho: spec.rho })
        }
    }
}

/// Closed-form targets of the typical cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Targets {
    pub volume: f64,
    pub f0: f64,
    pub boundary: f64,
    /// `γ_0, ..., γ_ℓ`.
    pub face_intensity: Vec<f64>,
}

/// Targets for `source`, or `None` for models without closed forms (β′ and
/// β-models whose parameter is not that of a section).
pub fn closed_form_targets(source: &Source, qcfg: &QuadratureConfig) -> Result<Option<Targets>> {
    let Some(cf) = closed_form_of(source) else {
        return Ok(None);
    };
    Ok(Some(match cf {
        ClosedForm::Section { d: 1, l: 1, rho } => {
            Targets { volume: 1.0 / rho, f0: 2.0, boundary: 2.0, face_intensity: vec![rho, rho] }
        }
        ClosedForm::Section { d, l, rho } => {
            let gamma: Result<Vec<f64>> = (0..=l)
                .map(|j| face_intensity(FaceIntensityQuery { d, l, j, rho }, qcfg).map(|e| e.value))
                .collect();
            let boundary = if l == 1 {
                2.0
            } else {
                2.0 * expected_intrinsic_volume(TypicalFaceQuery { d, l, k: l, j: l - 1, rho }, qcfg)?.value
            };
            Targets {
                volume: expected_cell_volume(d, l, rho, qcfg)?.value,
                f0: expected_f_vector(d, l, l, 0, qcfg)?.value,
                boundary,
                face_intensity: gamma?,
            }
        }
        ClosedForm::Gaussian { l, lambda } => {
            let lcfg = QuadratureConfig::for_limits();
            let kappa = (lambda / (PI * E)).sqrt();
            let gamma: Result<Vec<f64>> = (0..=l).map(|j| limit_face_intensity(l, j, kappa, &lcfg).map(|e| e.value)).collect();
            let boundary = if l == 1 { 2.0 } else { 2.0 * limit_intrinsic_volume(l, l, l - 1, kappa, &lcfg)?.value };
            Targets {
                volume: gaussian_cell_volume(l, lambda, &lcfg)?.value,
                f0: limit_f_vector(l, l, 0, &lcfg)?.value,
                boundary,
                face_intensity: gamma?,
            }
        }
    }))
}

fn require_cells(sample: &TypicalCellSample, need: usize) -> Result<()> {
    let got = sample.cell_count();
    if got < need {
        return Err(Error::InsufficientSample { got, need });
    }
    Ok(())
}

/// Typical-cell run with mean tests of volume, `f_0` and boundary measure
/// against the closed forms (when the source has them).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypicalCellEstimate {
    pub sample: TypicalCellSample,
    pub targets: Option<Targets>,
    pub reports: Vec<TestReport>,
}

pub fn estimate_typical_cell(source: &Source, cfg: &McConfig, qcfg: &QuadratureConfig) -> Result<TypicalCellEstimate> {
    let sample = sample_typical_cells(source, cfg)?;
    typical_cell_reports(sample, cfg, qcfg)
}

/// Same as [`estimate_typical_cell`] but sampling until `n_cells` cells.
pub fn estimate_typical_cell_until(source: &Source, cfg: &McConfig, qcfg: &QuadratureConfig, n_cells: usize) -> Result<TypicalCellEstimate> {
    let sample = sample_cells_until(source, cfg, 0, n_cells)?;
    typical_cell_reports(sample, cfg, qcfg)
}

fn typical_cell_reports(sample: TypicalCellSample, cfg: &McConfig, qcfg: &QuadratureConfig) -> Result<TypicalCellEstimate> {
    require_cells(&sample, cfg.min_cells)?;
    let targets = closed_form_targets(&sample.source, qcfg)?;
    let (n, reps) = (sample.cell_count(), sample.replicates.len());
    let th = cfg.thresholds;
    let mut reports = Vec::new();
    let stats: [(&str, Box<dyn Fn(&CellRecord) -> f64>, Option<f64>); 3] = [
        ("mean cell volume", Box::new(|c| c.volume), targets.as_ref().map(|t| t.volume)),
        ("mean f0", Box::new(|c| c.f_vector[0] as f64), targets.as_ref().map(|t| t.f0)),
        ("mean boundary measure", Box::new(|c| c.boundary), targets.as_ref().map(|t| t.boundary)),
    ];
    for (name, f, target) in stats {
        let (m, se) = sample.cell_mean(f);
        reports.push(match target {
            Some(t) => TestReport::mean(name, m, se, t, reps, n, th),
            None => TestReport {
                statistic: name.into(),
                estimate: m,
                standard_error: Some(se),
                target: None,
                z_score: None,
                p_value: None,
                pass: true,
                replicates: reps,
                sample_size: n,
                thresholds: th,
            },
        });
    }
    Ok(TypicalCellEstimate { sample, targets, reports })
}

/// Intensity of `j`-faces: face centres in `B_{r_obs}` per unit volume,
/// averaged over replicates, against the closed form.
pub fn estimate_face_intensity(source: &Source, j: usize, cfg: &McConfig, qcfg: &QuadratureConfig) -> Result<TestReport> {
    let l = source.dim();
    if j > l {
        return domain(format!("face dimension {j} exceeds {l}"));
    }
    let sample = sample_typical_cells(source, cfg)?;
    face_intensity_report(&sample, j, cfg, qcfg)
}

pub fn face_intensity_report(sample: &TypicalCellSample, j: usize, cfg: &McConfig, qcfg: &QuadratureConfig) -> Result<TestReport> {
    let l = sample.source.dim();
    let vol = unit_ball_volume(l as f64) * sample.window.r_obs.powi(l as i32);
    let per: Vec<f64> = sample.replicates.iter().map(|r| r.face_counts[j] as f64 / vol).collect();
    let (m, se) = mean_se(&per);
    let total: usize = sample.replicates.iter().map(|r| r.face_counts[j]).sum();
    let target = closed_form_targets(&sample.source, qcfg)?
        .map(|t| t.face_intensity[j])
        .ok_or_else(|| Error::Domain("no closed-form face intensity for this source".into()))?;
    Ok(TestReport::mean(format!("gamma_{j}"), m, se, target, per.len(), total, cfg.thresholds))
}

/// Outcome of a two-arm comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoArmReport {
    /// Two-sample KS on typical-cell volume.
    pub volume_ks: TestReport,
    /// Two-sample chi-square on `f_0` (absent on the line, where `f_0 = 2`).
    pub f0_chi_square: Option<TestReport>,
    /// Mean-volume tests of each arm against the closed form.
    pub mean_a: TestReport,
    pub mean_b: TestReport,
    /// A check that should reject (negative control) or pass (scaling).
    pub extra: Option<TestReport>,
    pub pass: bool,
}

fn ks_report(name: &str, a: &TypicalCellSample, b: &TypicalCellSample, cfg: &McConfig) -> TestReport {
    ks_report_scaled(name, a, b, 1.0, cfg)
}

fn ks_report_scaled(name: &str, a: &TypicalCellSample, b: &TypicalCellSample, scale_b: f64, cfg: &McConfig) -> TestReport {
    let va = a.volumes();
    let vb: Vec<f64> = b.volumes().iter().map(|v| v * scale_b).collect();
    let (d, p) = ks_two_sample(&va, &vb);
    TestReport::distribution(name, d, p, a.replicates.len() + b.replicates.len(), va.len().min(vb.len()), cfg.thresholds)
}

fn chi_report(a: &TypicalCellSample, b: &TypicalCellSample, cfg: &McConfig) -> Option<TestReport> {
    let (ca, cb) = (a.f0_counts(), b.f0_counts());
    let keys: BTreeSet<u64> = ca.keys().chain(cb.keys()).copied().collect();
    if keys.len() < 2 {
        return None;
    }
    let c = chi_square_two_sample(&ca, &cb);
    Some(TestReport::distribution(
        format!("f0 chi-square (dof {})", c.dof),
        c.statistic,
        c.p_value,
        a.replicates.len() + b.replicates.len(),
        a.cell_count().min(b.cell_count()),
        cfg.thresholds,
    ))
}

fn mean_volume_report(name: &str, s: &TypicalCellSample, target: f64, cfg: &McConfig) -> TestReport {
    let (m, se) = s.cell_mean(|c| c.volume);
    TestReport::mean(name, m, se, target, s.replicates.len(), s.cell_count(), cfg.thresholds)
}

/// Compares sections of a simulated Poisson-Voronoi tessellation (arm A)
/// with the β-Voronoi model of the same law (arm B), and checks that a
/// model with `β` off by `1/2` is rejected.
pub fn verify_sectional_law(spec: &SectionSpec, n_cells: usize, cfg: &McConfig, qcfg: &QuadratureConfig) -> Result<TwoArmReport> {
    spec.validate()?;
    if spec.section_l > 3 {
        return Err(Error::Dimension(spec.section_l));
    }
    let model = sectional_model(spec)?;
    let ModelSpec::Beta { d: l, beta, gamma } = model else { unreachable!() };
    let wrong = ModelSpec::beta(l, beta + 0.5, gamma)?;
    let a = sample_cells_until(&Source::SectionGroundTruth { spec: *spec }, cfg, 0, n_cells)?;
    let b = sample_cells_until(&Source::model(model), cfg, 1, n_cells)?;
    let c = sample_cells_until(&Source::model(wrong), cfg, 2, n_cells)?;
    let target = expected_cell_volume(spec.ambient_d, spec.section_l, spec.rho, qcfg)?.value;
    let volume_ks = ks_report("volume KS, section vs beta model", &a, &b, cfg);
    let f0_chi_square = chi_report(&a, &b, cfg);
    let control = ks_report("volume KS, section vs perturbed beta (must reject)", &a, &c, cfg);
    let rejected = !control.pass;
    let pass = volume_ks.pass && f0_chi_square.as_ref().is_none_or(|r| r.pass) && rejected;
    Ok(TwoArmReport {
        volume_ks,
        f0_chi_square,
        mean_a: mean_volume_report("mean volume, section", &a, target, cfg),
        mean_b: mean_volume_report("mean volume, beta model", &b, target, cfg),
        extra: Some(control),
        pass,
    })
}

/// Compares the `l`-dimensional section of the `l_ambient`-dimensional
/// Gaussian model (arm A) with the direct `l`-dimensional model (arm B),
/// and checks the scaling law: cells at `4λ`, scaled by `2` in space, have
/// the law of cells at `λ`.
pub fn verify_gaussian_section(
    lambda: f64,
    l: usize,
    l_ambient: usize,
    n_cells: usize,
    cfg: &McConfig,
) -> Result<TwoArmReport> {
    if l_ambient > 3 {
        return Err(Error::Dimension(l_ambient));
    }
    let a_src = Source::GaussianSection { l, l_ambient, lambda, gamma: 1.0 };
    a_src.validate()?;
    let b_src = Source::GaussianWithGamma { d: l, lambda, gamma: 1.0 };
    let c_src = Source::GaussianWithGamma { d: l, lambda: 4.0 * lambda, gamma: 1.0 };
    let a = sample_cells_until(&a_src, cfg, 0, n_cells)?;
    let b = sample_cells_until(&b_src, cfg, 1, n_cells)?;
    let c = sample_cells_until(&c_src, cfg, 2, n_cells)?;
    let target = gaussian_cell_volume(l, lambda, &QuadratureConfig::for_limits())?.value;
    let volume_ks = ks_report("volume KS, section vs direct", &a, &b, cfg);
    let f0_chi_square = chi_report(&a, &b, cfg);
    let scaling = ks_report_scaled("volume KS, lambda vs 4 lambda rescaled", &b, &c, 2f64.powi(l as i32), cfg);
    let pass = volume_ks.pass && f0_chi_square.as_ref().is_none_or(|r| r.pass) && scaling.pass;
    Ok(TwoArmReport {
        volume_ks,
        f0_chi_square,
        mean_a: mean_volume_report("mean volume, section", &a, target, cfg),
        mean_b: mean_volume_report("mean volume, direct", &b, target, cfg),
        extra: Some(scaling),
        pass,
    })
}

/// The vertical shift `a_d` for intensity `ρ_d = κ^d`, as printed:
/// `(1/π) (π Γ((d-ℓ)/2) / ρ_d)^{2/(d-ℓ-2)}`.
pub fn shift_a_d(d: usize, l: usize, kappa: f64) -> f64 {
    let m = d as f64 - l as f64;
    (-PI.ln() + 2.0 / (m - 2.0) * (PI.ln() + ln_gamma(m / 2.0) - d as f64 * kappa.ln())).exp()
}

/// The shift that makes the shifted intensity exactly
/// `(1 + h/a_d)^{(d-ℓ-2)/2}`: `(1/π) (Γ((d-ℓ)/2) / (π ρ_d))^{2/(d-ℓ-2)}`.
/// The printed shift leaves a constant factor `π²` in front.
pub fn shift_a_d_normalized(d: usize, l: usize, kappa: f64) -> f64 {
    let m = d as f64 - l as f64;
    (-PI.ln() + 2.0 / (m - 2.0) * (ln_gamma(m / 2.0) - PI.ln() - d as f64 * kappa.ln())).exp()
}

/// `f_d(h) = (1 + h/a)^{(d-ℓ-2)/2}` on `h > -a`, zero below.
pub fn shifted_density(d: usize, l: usize, a: f64, h: f64) -> f64 {
    if h + a <= 0.0 {
        return 0.0;
    }
    let e = (d as f64 - l as f64 - 2.0) / 2.0;
    (e * (h / a).ln_1p()).exp()
}

/// `sup_{|h| <= H} |f_d(h) - e^{λh}|` on a fine grid, `λ = κ²πe`, `H = 3/λ`.
pub fn sup_difference(d: usize, l: usize, a: f64, kappa: f64) -> f64 {
    let lam = kappa * kappa * PI * E;
    let hmax = 3.0 / lam;
    let n = 60_000;
    (0..=n)
        .map(|i| {
            let h = -hmax + 2.0 * hmax * i as f64 / n as f64;
            (shifted_density(d, l, a, h) - (lam * h).exp()).abs()
        })
        .fold(0.0, f64::max)
}

/// One row of the convergence diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub d: usize,
    pub a_d: f64,
    /// `(d-ℓ-2) / (2 a_d)`.
    pub rate: f64,
    /// `κ²πe`.
    pub rate_limit: f64,
    pub rate_rel_error: f64,
    pub sup_difference: f64,
    /// The same three with the normalized shift, for information.
    pub a_d_normalized: f64,
    pub rate_normalized: f64,
    pub sup_difference_normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub l: usize,
    pub kappa: f64,
    pub h_max: f64,
    pub rows: Vec<ConvergenceRow>,
}

/// Analytic convergence of the shifted sectional intensity to the Gaussian
/// one, for `ρ_d = κ^d`.
pub fn convergence_diagnostics(l: usize, kappa: f64, d_list: &[usize]) -> Result<ConvergenceReport> {
    if l < 1 || !(kappa.is_finite() && kappa > 0.0) {
        return domain(format!("need l >= 1 and kappa > 0, got l = {l}, kappa = {kappa}"));
    }
    if d_list.windows(2).any(|w| w[0] >= w[1]) {
        return domain("d_list must be increasing");
    }
    if let Some(&d) = d_list.iter().find(|&&d| d <= l + 2) {
        return domain(format!("d = {d} must exceed l + 2 = {}", l + 2));
    }
    let lam = kappa * kappa * PI * E;
    let rows = d_list
        .iter()
        .map(|&d| {
            let m2 = (d - l - 2) as f64;
            let a = shift_a_d(d, l, kappa);
            let an = shift_a_d_normalized(d, l, kappa);
            let rate = m2 / (2.0 * a);
            ConvergenceRow {
                d,
                a_d: a,
                rate,
                rate_limit: lam,
                rate_rel_error: rate / lam - 1.0,
                sup_difference: sup_difference(d, l, a, kappa),
                a_d_normalized: an,
                rate_normalized: m2 / (2.0 * an),
                sup_difference_normalized: sup_difference(d, l, an, kappa),
            }
        })
        .collect();
    Ok(ConvergenceReport { l, kappa, h_max: 3.0 / lam, rows })
}

/// Typical cells of the section at dimension `d` (intensity `κ^d`) against
/// the limiting Gaussian model with `λ = κ²πe`.
pub fn limit_law_check(l: usize, d: usize, kappa: f64, n_cells: usize, cfg: &McConfig, qcfg: &QuadratureConfig) -> Result<TwoArmReport> {
    let spec = SectionSpec::new(d, l, kappa.powi(d as i32))?;
    let lam = kappa * kappa * PI * E;
    let a = sample_cells_until(&Source::SectionGroundTruth { spec }, cfg, 0, n_cells)?;
    let b = sample_cells_until(&Source::GaussianWithGamma { d: l, lambda: lam, gamma: 1.0 }, cfg, 1, n_cells)?;
    let volume_ks = ks_report("volume KS, section vs Gaussian limit", &a, &b, cfg);
    let f0_chi_square = chi_report(&a, &b, cfg);
    let limit = gaussian_cell_volume(l, lam, &QuadratureConfig::for_limits())?.value;
    let finite = expected_cell_volume(d, l, spec.rho, qcfg)?.value;
    let pass = volume_ks.pass;
    Ok(TwoArmReport {
        volume_ks,
        f0_chi_square,
        mean_a: mean_volume_report(&format!("mean volume, section d = {d}"), &a, finite, cfg),
        mean_b: mean_volume_report("mean volume, Gaussian limit", &b, limit, cfg),
        extra: None,
        pass,
    })
}

/// Outcome of [`doubling_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    pub runs: usize,
    pub unchanged: usize,
    pub fraction_unchanged: f64,
    pub pass: bool,
}

/// Simulates each run at the window and again after extending the sample to
/// the doubled window, and counts runs in which no cell with centre in the
/// observation ball changed (same nuclei, vertices within `1e-9`). Passes
/// at 99%.
pub fn doubling_check(source: &Source, runs: usize, cfg: &McConfig) -> Result<DoublingReport> {
    cfg.validate()?;
    let win = cfg.window_for(source)?;
    let one = |i: u64| -> Result<bool> {
        let region = source.region(&win)?;
        let mut pts = source.sample_in(&region, None, &mut substream(win.seed, i, 0))?;
        if pts.is_empty() {
            return Ok(false);
        }
        let d1 = build_diagram(&pts, &win)?;
        let big = source.doubled(&win)?;
        pts.extend(source.sample_excluding(&big, Some(&region), &mut substream(win.seed, i, 1))?);
        let d2 = build_diagram(&pts, &big)?;
        let cells = |d: &LaguerreDiagram| -> BTreeMap<usize, Vec<Vec<f64>>> {
            d.interior_cells(win.r_obs).map(|c| (c.nucleus_index, c.vertices.clone())).collect()
        };
        let (c1, c2) = (cells(&d1), cells(&d2));
        Ok(c1.len() == c2.len()
            && c1.iter().all(|(k, v)| c2.get(k).is_some_and(|w| hausdorff(v, w) <= 1e-9)))
    };
    let results: Vec<Result<bool>> = cfg.install(|| (0..runs as u64).into_par_iter().map(one).collect())?;
    let unchanged = results.into_iter().collect::<Result<Vec<bool>>>()?.into_iter().filter(|b| *b).count();
    let frac = unchanged as f64 / runs.max(1) as f64;
    Ok(DoublingReport { runs, unchanged, fraction_unchanged: frac, pass: frac >= 0.99 })
}
