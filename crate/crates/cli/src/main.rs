use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use sectess::closed_forms::{
    expected_cell_volume, expected_f_vector, expected_intrinsic_volume, face_intensity, gaussian_cell_volume,
    limit_cell_volume, limit_f_vector, limit_face_intensity, Evaluated, FaceIntensityQuery, TypicalFaceQuery,
};
use sectess::io::{kind, read_json, reports_csv, to_json, write_json};
use sectess::jfunc::{j_value, JBeta, JQuery, QuadratureConfig};
use sectess::laguerre::{build_diagram, LaguerreDiagram};
use sectess::model::{ModelSpec, SectionSpec};
use sectess::montecarlo::{
    convergence_diagnostics, estimate_typical_cell, estimate_typical_cell_until, limit_law_check, simulate_certified,
    verify_gaussian_section, verify_sectional_law, McConfig,
};
use sectess::process::{MarkedPoint, SimulationWindow, Source};
use sectess::render::{render_svg, ColorMode, RenderStyle};
use sectess::rng::substream;
use sectess::stats::TestReport;
use sectess::Error;

const THREADS_ENV: &str = "SECTESS_THREADS";

#[derive(Parser)]
#[command(name = "sectess", version, about = "Sectional Voronoi tessellations: formulas, simulation and Monte-Carlo checks")]
struct Cli {
    /// Worker threads for Monte-Carlo runs.
    #[arg(long, global = true, env = THREADS_ENV, default_value_t = 1)]
    threads: usize,
    /// Seed for stochastic subcommands (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One value of the angle-sum integral J_{n,k}(β).
    Jfunc(JfuncArgs),
    /// Closed-form characteristics.
    Formulas(FormulaArgs),
    /// Sample a marked point process in a window.
    Simulate(SimulateArgs),
    /// Sample the section of a Poisson-Voronoi tessellation.
    Section(SectionArgs),
    /// Draw a planar diagram as SVG.
    Render(RenderArgs),
    /// Monte-Carlo verification runs.
    Mc(McArgs),
    /// High-dimensional limits and convergence diagnostics.
    Limits(LimitsArgs),
    /// Mean cell volume (1) or f-vector (2) tables as CSV.
    Tables(TablesArgs),
}

#[derive(Args)]
struct JfuncArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// A real β >= -1, or `inf`.
    #[arg(long)]
    beta: String,
    #[arg(long)]
    rel_tol: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Formula {
    FaceIntensity,
    Volume,
    Intrinsic,
    FVector,
    Limits,
}

#[derive(Args)]
struct FormulaArgs {
    #[arg(value_enum)]
    what: Formula,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    j: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    /// With `limits`: mean cell volume of the Gaussian model at this λ.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    Beta,
    BetaPrime,
    Gaussian,
    PoissonVoronoi,
}

#[derive(Args)]
struct WindowArgs {
    /// Observation radius.
    #[arg(long, default_value_t = 5.0)]
    radius: f64,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    height_cap: Option<f64>,
    /// Enlarge the window until every cell meeting the observation ball is exact.
    #[arg(long)]
    certify: bool,
    /// Points document.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the diagram document here.
    #[arg(long)]
    diagram: Option<PathBuf>,
    /// JSON file with the parameters (flags are then ignored).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[command(flatten)]
    window: WindowArgs,
}

#[derive(Args)]
struct SectionArgs {
    /// Ambient dimension.
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long, default_value_t = 2)]
    l: usize,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[command(flatten)]
    window: WindowArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ColorArg {
    Uniform,
    ByHeight,
}

#[derive(Args)]
struct RenderArgs {
    /// Diagram document.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    stroke_width: Option<f64>,
    /// `x_min,y_min,x_max,y_max`.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    viewport: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    color_mode: Option<ColorArg>,
    #[arg(long)]
    clip_radius: Option<f64>,
    #[arg(long)]
    width_px: Option<u32>,
    #[arg(long)]
    nuclei: bool,
    /// JSON style file (flags given on top override it).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum McCheck {
    VerifyVolume,
    VerifySection,
    VerifyGaussian,
    Limits,
}

impl McCheck {
    fn name(self) -> &'static str {
        match self {
            McCheck::VerifyVolume => "mc verify-volume",
            McCheck::VerifySection => "mc verify-section",
            McCheck::VerifyGaussian => "mc verify-gaussian",
            McCheck::Limits => "mc limits",
        }
    }
}

#[derive(Args)]
struct McArgs {
    #[arg(value_enum)]
    check: McCheck,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LimitsArgs {
    #[arg(long)]
    l: usize,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    /// Dimensions for the convergence table.
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000,10000")]
    d_list: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TablesArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    which: u8,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parameters of `simulate` and `section`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SimulateParams {
    source: Source,
    window: SimulationWindow,
    certify: bool,
}

/// Parameters of the `mc` checks; fields a check does not use are ignored.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct McParams {
    #[serde(default)]
    mc: McConfig,
    /// `verify-volume`: the source whose typical cell is estimated.
    #[serde(default)]
    source: Option<Source>,
    /// Sample until this many cells; otherwise `mc.replicates` replicates.
    #[serde(default)]
    n_cells: Option<usize>,
    /// `verify-section`.
    #[serde(default)]
    spec: Option<SectionSpec>,
    /// `verify-gaussian` and `limits`.
    #[serde(default)]
    lambda: Option<f64>,
    #[serde(default)]
    l: Option<usize>,
    #[serde(default)]
    l_ambient: Option<usize>,
    #[serde(default)]
    d: Option<usize>,
    #[serde(default)]
    kappa: Option<f64>,
    #[serde(default)]
    quadrature: Option<QuadratureConfig>,
}

/// The document written next to every output.
#[derive(Serialize, Deserialize)]
struct Resolved<T> {
    command: String,
    params: T,
}

type CliResult<T> = std::result::Result<T, Error>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Error::Domain(msg.into()))
}

fn need<T>(x: Option<T>, flag: &str) -> CliResult<T> {
    x.ok_or_else(|| Error::Domain(format!("missing --{flag}")))
}

/// `out.json` to `out.config.json`.
fn config_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    out.with_file_name(format!("{stem}.config.json"))
}

fn write_resolved<T: Serialize>(out: &Path, command: &str, params: &T) -> CliResult<()> {
    write_json(&config_path(out), kind::CONFIG, &Resolved { command: command.into(), params })
}

/// Reads either bare parameters or a resolved config written by an earlier run.
fn load_params<T: DeserializeOwned>(path: &Path, command: &str) -> CliResult<T> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if value.get("schema_version").is_some() {
        let r: Resolved<T> = sectess::io::from_json(kind::CONFIG, &text)?;
        if r.command != command {
            return usage(format!("config was written by '{}', not '{command}'", r.command));
        }
        return Ok(r.params);
    }
    Ok(serde_json::from_value(value)?)
}

fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run_jfunc(a: &JfuncArgs) -> CliResult<()> {
    let beta: JBeta = a.beta.parse()?;
    let mut cfg = QuadratureConfig::default();
    if let Some(t) = a.rel_tol {
        cfg.rel_tol = t;
    }
    let v = j_value(JQuery::new(a.n, a.k, beta)?, &cfg)?;
    let doc = json!({
        "n": a.n,
        "k": a.k,
        "beta": beta.to_string(),
        "value": v.value,
        "error_estimate": v.error_estimate,
        "imag_residual": v.imag_residual,
    });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(())
}

fn evaluated_json(e: &Evaluated) -> serde_json::Value {
    json!({
        "value": e.value,
        "components": { "j_values_used": e.j_values_used },
        "error_estimate": e.error_estimate,
    })
}

fn run_formulas(a: &FormulaArgs) -> CliResult<()> {
    let cfg = QuadratureConfig::default();
    let e = match a.what {
        Formula::FaceIntensity => face_intensity(
            FaceIntensityQuery { d: need(a.d, "d")?, l: need(a.l, "l")?, j: need(a.j, "j")?, rho: a.rho },
            &cfg,
        )?,
        Formula::Volume => expected_cell_volume(need(a.d, "d")?, need(a.l, "l")?, a.rho, &cfg)?,
        Formula::Intrinsic => {
            let l = need(a.l, "l")?;
            let q = TypicalFaceQuery { d: need(a.d, "d")?, l, k: a.k.unwrap_or(l), j: need(a.j, "j")?, rho: a.rho };
            expected_intrinsic_volume(q, &cfg)?
        }
        Formula::FVector => {
            let l = need(a.l, "l")?;
            expected_f_vector(need(a.d, "d")?, l, a.k.unwrap_or(l), need(a.j, "j")?, &cfg)?
        }
        Formula::Limits => {
            let lim = QuadratureConfig::for_limits();
            let l = need(a.l, "l")?;
            match (a.lambda, a.j, a.k) {
                (Some(lambda), _, _) => gaussian_cell_volume(l, lambda, &lim)?,
                (None, Some(j), Some(k)) => limit_f_vector(l, k, j, &lim)?,
                (None, Some(j), None) => limit_face_intensity(l, j, a.kappa, &lim)?,
                (None, None, _) => limit_cell_volume(l, a.kappa, &lim)?,
            }
        }
    };
    let text = serde_json::to_string_pretty(&evaluated_json(&e))? + "\n";
    emit(&text, a.out.as_deref())
}

fn model_from_flags(a: &SimulateArgs) -> CliResult<ModelSpec> {
    let kind = need(a.model, "model")?;
    match kind {
        ModelKind::Beta => ModelSpec::beta(a.dim, need(a.beta, "beta")?, a.gamma),
        ModelKind::BetaPrime => ModelSpec::beta_prime(a.dim, need(a.beta, "beta")?, a.gamma),
        ModelKind::Gaussian => ModelSpec::gaussian(a.dim, need(a.lambda, "lambda")?),
        ModelKind::PoissonVoronoi => ModelSpec::poisson_voronoi(a.dim, a.rho),
    }
}

fn window_from_flags(source: &Source, w: &WindowArgs, seed: u64) -> CliResult<SimulationWindow> {
    let mut win = source.default_window(w.radius, seed)?;
    if let Some(m) = w.margin {
        win.r_margin = m;
    }
    if let Some(t) = w.height_cap {
        win.t_cap = t;
    }
    win.validate()?;
    Ok(win)
}

#[derive(Serialize)]
struct PointsDoc<'a> {
    source: &'a Source,
    window: &'a SimulationWindow,
    dim: usize,
    escalations: usize,
    heuristic_stop: bool,
    points: &'a [MarkedPoint],
}

fn run_sampling(command: &str, params: SimulateParams, w: &WindowArgs, threads: usize) -> CliResult<()> {
    params.source.validate()?;
    let (diagram, window, escalations, heuristic_stop): (Option<LaguerreDiagram>, SimulationWindow, usize, bool) =
        if params.certify {
            let cfg = McConfig { threads, r_obs: params.window.r_obs, seed: params.window.seed, ..Default::default() };
            let c = simulate_certified(&params.source, &params.window, 0, &cfg)?;
            (Some(c.diagram), c.window, c.escalations, c.heuristic_stop)
        } else {
            (None, params.window, 0, false)
        };
    let points = match &diagram {
        Some(d) => d.nuclei.clone(),
        None => params.source.sample(&params.window, &mut substream(params.window.seed, 0, 0))?,
    };
    let doc = PointsDoc { source: &params.source, window: &window, dim: params.source.dim(), escalations, heuristic_stop, points: &points };
    match &w.out {
        Some(p) => {
            write_json(p, kind::POINTS, &doc)?;
            write_resolved(p, command, &params)?;
        }
        None => println!("{}", to_json(kind::POINTS, &doc)?),
    }
    if let Some(p) = &w.diagram {
        let d = match diagram {
            Some(d) => d,
            None => build_diagram(&points, &window)?,
        };
        write_json(p, kind::DIAGRAM, &d)?;
        if w.out.is_none() {
            write_resolved(p, command, &params)?;
        }
    }
    Ok(())
}

fn run_simulate(a: &SimulateArgs, seed: Option<u64>, threads: usize) -> CliResult<()> {
    let mut params = match &a.window.config {
        Some(path) => load_params::<SimulateParams>(path, "simulate")?,
        None => {
            let source = Source::model(model_from_flags(a)?);
            let window = window_from_flags(&source, &a.window, seed.unwrap_or(1))?;
            SimulateParams { source, window, certify: a.window.certify }
        }
    };
    if let Some(s) = seed {
        params.window.seed = s;
    }
    run_sampling("simulate", params, &a.window, threads)
}

fn run_section(a: &SectionArgs, seed: Option<u64>, threads: usize) -> CliResult<()> {
    let mut params = match &a.window.config {
        Some(path) => load_params::<SimulateParams>(path, "section")?,
        None => {
            let source = Source::SectionGroundTruth { spec: SectionSpec::new(a.d, a.l, a.rho)? };
            let window = window_from_flags(&source, &a.window, seed.unwrap_or(1))?;
            SimulateParams { source, window, certify: a.window.certify }
        }
    };
    if !matches!(params.source, Source::SectionGroundTruth { .. }) {
        return usage("section expects a section_ground_truth source");
    }
    if let Some(s) = seed {
        params.window.seed = s;
    }
    run_sampling("section", params, &a.window, threads)
}

fn run_render(a: &RenderArgs) -> CliResult<()> {
    let mut style: RenderStyle = match &a.config {
        Some(p) => load_params(p, "render")?,
        None => RenderStyle::default(),
    };
    if let Some(s) = a.stroke_width {
        style.stroke_width = s;
    }
    if let Some(v) = &a.viewport {
        style.viewport = Some([v[0], v[1], v[2], v[3]]);
    }
    if let Some(c) = a.color_mode {
        style.color_mode = match c {
            ColorArg::Uniform => ColorMode::Uniform,
            ColorArg::ByHeight => ColorMode::ByHeight,
        };
    }
    if a.clip_radius.is_some() {
        style.clip_radius = a.clip_radius;
    }
    if let Some(w) = a.width_px {
        style.width_px = w;
    }
    style.draw_nuclei |= a.nuclei;
    let diag: LaguerreDiagram = read_json(&a.input, kind::DIAGRAM)?;
    let svg = render_svg(&diag, &style)?;
    emit(&svg, a.out.as_deref())?;
    if let Some(p) = &a.out {
        write_resolved(p, "render", &json!({ "input": a.input, "style": style }))?;
    }
    Ok(())
}

fn run_mc(a: &McArgs, seed: Option<u64>, threads: usize) -> CliResult<()> {
    let command = a.check.name();
    let mut p: McParams = load_params(&a.config, command)?;
    if let Some(s) = seed {
        p.mc.seed = s;
    }
    p.mc.threads = threads;
    p.mc.validate()?;
    let q = p.quadrature.unwrap_or_default();
    let (doc, reports): (serde_json::Value, Vec<TestReport>) = match a.check {
        McCheck::VerifyVolume => {
            let source = need(p.source, "source (in config)")?;
            let est = match p.n_cells {
                Some(n) => estimate_typical_cell_until(&source, &p.mc, &q, n)?,
                None => estimate_typical_cell(&source, &p.mc, &q)?,
            };
            let doc = json!({
                "source": source,
                "cells": est.sample.cell_count(),
                "replicates": est.sample.replicates,
                "targets": est.targets,
                "reports": est.reports,
            });
            (doc, est.reports)
        }
        McCheck::VerifySection => {
            let spec = need(p.spec, "spec (in config)")?;
            let r = verify_sectional_law(&spec, p.n_cells.unwrap_or(5000), &p.mc, &q)?;
            let reports = two_arm_reports(&r);
            (serde_json::to_value(&r)?, reports)
        }
        McCheck::VerifyGaussian => {
            let (lambda, l) = (need(p.lambda, "lambda (in config)")?, need(p.l, "l (in config)")?);
            let r = verify_gaussian_section(lambda, l, need(p.l_ambient, "l_ambient (in config)")?, p.n_cells.unwrap_or(5000), &p.mc)?;
            let reports = two_arm_reports(&r);
            (serde_json::to_value(&r)?, reports)
        }
        McCheck::Limits => {
            let (l, d) = (need(p.l, "l (in config)")?, need(p.d, "d (in config)")?);
            let kappa = p.kappa.unwrap_or(1.0);
            let r = limit_law_check(l, d, kappa, p.n_cells.unwrap_or(5000), &p.mc, &q)?;
            let diag = convergence_diagnostics(l, kappa, &[10, 100, 1000, 10_000])?;
            let reports = two_arm_reports(&r);
            (json!({ "law": r, "convergence": diag }), reports)
        }
    };
    write_json(&a.out, kind::REPORTS, &doc)?;
    emit(&reports_csv(&reports), Some(&a.out.with_extension("csv")))?;
    write_resolved(&a.out, command, &p)?;
    for r in &reports {
        eprintln!("{}", r.line());
    }
    Ok(())
}

fn two_arm_reports(r: &sectess::montecarlo::TwoArmReport) -> Vec<TestReport> {
    let mut v = vec![r.volume_ks.clone()];
    v.extend(r.f0_chi_square.clone());
    v.push(r.mean_a.clone());
    v.push(r.mean_b.clone());
    v.extend(r.extra.clone());
    v
}

fn run_limits(a: &LimitsArgs) -> CliResult<()> {
    let lim = QuadratureConfig::for_limits();
    let volume = limit_cell_volume(a.l, a.kappa, &lim)?;
    let intensities = (0..=a.l)
        .map(|j| limit_face_intensity(a.l, j, a.kappa, &lim).map(|e| e.value))
        .collect::<CliResult<Vec<f64>>>()?;
    let diag = convergence_diagnostics(a.l, a.kappa, &a.d_list)?;
    let doc = json!({
        "l": a.l,
        "kappa": a.kappa,
        "cell_volume": evaluated_json(&volume),
        "face_intensity": intensities,
        "convergence": diag,
    });
    emit(&(serde_json::to_string_pretty(&doc)? + "\n"), a.out.as_deref())
}

/// Column pairs `(d, ℓ)` of the f-vector table.
const F_VECTOR_COLUMNS: [(usize, usize); 6] = [(4, 3), (5, 3), (5, 4), (6, 3), (6, 4), (6, 5)];

fn run_tables(a: &TablesArgs) -> CliResult<()> {
    let cfg = QuadratureConfig::default();
    let mut csv = String::new();
    if a.which == 1 {
        csv.push_str("d,l,mean_volume\n");
        for l in 1..=5 {
            for d in (l + 1)..=6 {
                csv += &format!("{d},{l},{:?}\n", expected_cell_volume(d, l, 1.0, &cfg)?.value);
            }
        }
    } else {
        csv.push_str("d,l,j,mean_f_j\n");
        for (d, l) in F_VECTOR_COLUMNS {
            for j in 0..l {
                csv += &format!("{d},{l},{j},{:?}\n", expected_f_vector(d, l, l, j, &cfg)?.value);
            }
        }
    }
    emit(&csv, a.out.as_deref())
}

fn run(cli: Cli) -> CliResult<()> {
    if cli.threads == 0 {
        return usage("--threads must be at least 1");
    }
    match &cli.command {
        Command::Jfunc(a) => run_jfunc(a),
        Command::Formulas(a) => run_formulas(a),
        Command::Simulate(a) => run_simulate(a, cli.seed, cli.threads),
        Command::Section(a) => run_section(a, cli.seed, cli.threads),
        Command::Render(a) => run_render(a),
        Command::Mc(a) => run_mc(a, cli.seed, cli.threads),
        Command::Limits(a) => run_limits(a),
        Command::Tables(a) => run_tables(a),
    }
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "kind": kind, "message": message }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim_end(), 2),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string(), 1),
    }
}
