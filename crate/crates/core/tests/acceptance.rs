//! Acceptance checks. Each test writes one `PASS`/`FAIL` line to stderr
//! (uncaptured) and then asserts it.

use std::f64::consts::{E, PI};
use std::io::Write;
use std::time::Instant;

use sectess::closed_forms::{expected_cell_volume, expected_f_vector, limit_cell_volume, miles_cell_volume};
use sectess::io::{kind, to_json};
use sectess::jfunc::{j_value, JBeta, JQuery, QuadratureConfig};
use sectess::laguerre::{brute_force_cell, build_diagram, hausdorff};
use sectess::model::{gamma, sectional_model, unit_ball_volume, SectionSpec};
use sectess::montecarlo::{
    convergence_diagnostics, estimate_typical_cell_until, limit_law_check, verify_sectional_law, McConfig,
};
use sectess::process::{MarkedPoint, SimulationWindow, Source};
use sectess::rng::substream;

use rand::Rng;

fn report(id: &str, pass: bool, detail: &str) {
    let line = format!("criterion {id}: {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    std::io::stderr().write_all(line.as_bytes()).unwrap();
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn criterion_01_j_quadrature_pinned_values() {
    let start = Instant::now();
    let cfg = QuadratureConfig::default();
    let betas = [-1.0, -0.5, 0.0, 0.5, 1.0, 5.0, 50.0];
    let mut pinned: Vec<(usize, usize, f64)> = vec![(1, 1, 1.0), (2, 1, 1.0), (3, 1, 0.5), (3, 2, 1.5)];
    for n in 2..=7 {
        pinned.push((n, n, 1.0));
        pinned.push((n, n - 1, n as f64 / 2.0));
    }
    let mut worst: f64 = 0.0;
    for &b in &betas {
        for &(n, k, want) in &pinned {
            let v = j_value(JQuery::new(n, k, JBeta::Finite(b)).unwrap(), &cfg).unwrap().value;
            worst = worst.max(rel(v, want));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-8 && secs <= 60.0;
    report("1", pass, &format!("(J pinned values: max rel err {worst:.2e}, {:.1} s)", secs));
    assert!(pass);
}

#[test]
fn criterion_02_f_vector_table() {
    let cfg = QuadratureConfig::default();
    let pi2 = PI * PI;
    let den54 = 1692197.0 - 141120.0 * pi2;
    let q = 37477698299.0;
    let table: [(usize, usize, usize, f64); 22] = [
        (4, 3, 0, 10240.0 / 401.0),
        (4, 3, 1, 15360.0 / 401.0),
        (4, 3, 2, 5922.0 / 401.0),
        (5, 3, 0, 67200.0 * pi2 / 26741.0),
        (5, 3, 1, 100800.0 * pi2 / 26741.0),
        (5, 3, 2, 2.0 + 33600.0 * pi2 / 26741.0),
        (5, 4, 0, 4233600.0 * pi2 / den54),
        (5, 4, 1, 8467200.0 * pi2 / den54),
        (5, 4, 2, (10153182.0 + 4233600.0 * pi2) / den54),
        (5, 4, 3, 10153182.0 / den54),
        (6, 3, 0, 524288.0 / 21509.0),
        (6, 3, 1, 786432.0 / 21509.0),
        (6, 3, 2, 305162.0 / 21509.0),
        (6, 4, 0, 52003.0 / 400.0),
        (6, 4, 1, 52003.0 / 200.0),
        (6, 4, 2, 162009.0 / 1000.0),
        (6, 4, 3, 64003.0 / 2000.0),
        (6, 5, 0, 34394098106368.0 / q),
        (6, 5, 1, 85985245265920.0 / q),
        (6, 5, 2, 74276903321600.0 / q),
        (6, 5, 3, 25430109716480.0 / q),
        (6, 5, 4, 53194508510.0 / 707126383.0),
    ];
    let f = |d, l, j| expected_f_vector(d, l, l, j, &cfg).unwrap().value;
    let worst = table.iter().map(|&(d, l, j, want)| rel(f(d, l, j), want)).fold(0.0, f64::max);
    let euler = f(4, 3, 0) - f(4, 3, 1) + f(4, 3, 2);
    let pass = worst <= 1e-6 && (euler - 2.0).abs() <= 1e-9;
    report("2", pass, &format!("(22 f-vector entries: max rel err {worst:.2e}; Euler d=4 l=3: {euler:.12})"));
    assert!(pass);
}

#[test]
fn criterion_03_cell_volume_table() {
    let cfg = QuadratureConfig::default();
    let (sq, cb, rt) = (f64::sqrt, f64::cbrt, |x: f64, n: f64| x.powf(1.0 / n));
    let table: [(usize, usize, f64); 15] = [
        (2, 1, PI / 4.0),
        (3, 1, cb(3.0) / (cb(4.0 * PI) * gamma(5.0 / 3.0))),
        (4, 1, 15.0 * PI.powf(1.5) / (64.0 * rt(8.0, 4.0) * gamma(0.75))),
        (5, 1, 7.0 * rt(5.0, 5.0) / (3.0 * rt(648.0 * PI * PI, 5.0) * gamma(9.0 / 5.0))),
        (6, 1, 2835.0 * rt(3.0, 6.0) * PI.powf(1.5) / (16384.0 * rt(32.0, 6.0) * gamma(5.0 / 6.0))),
        (3, 2, 5.0 * cb(4.0) / (cb(3.0 * PI.powi(5)) * gamma(7.0 / 3.0))),
        (4, 2, 24.0 * sq(2.0) / (35.0 * sq(PI))),
        (5, 2, 77.0 * 2f64.powf(0.8) / (5.0 * 15f64.powf(0.6) * PI.powf(1.8) * gamma(13.0 / 5.0))),
        (6, 2, 50.0 * cb(6.0) / (143.0 * gamma(8.0 / 3.0))),
        (4, 3, 280665.0 * PI.powf(1.5) / (821248.0 * rt(2.0, 4.0) * gamma(13.0 / 4.0))),
        (5, 3, 56.0 * 15f64.powf(0.6) * rt(2.0 / PI, 5.0) / (187.0 * gamma(17.0 / 5.0))),
        (6, 3, 17320875.0 * sq(1.5) * PI / 176201728.0),
        (
            5,
            4,
            144848704.0 * 2f64.powf(0.6)
                / (15f64.powf(1.2) * PI.powf(1.6) * (1692197.0 - 141120.0 * PI * PI) * gamma(4.2)),
        ),
        (6, 4, 15.0 * 6f64.powf(2.0 / 3.0) / (13.0 * gamma(13.0 / 3.0))),
        (
            6,
            5,
            6823504578515625.0 * 3f64.powf(5.0 / 6.0) * PI.powf(1.5)
                / (4912276871446528.0 * rt(2.0, 6.0) * gamma(31.0 / 6.0)),
        ),
    ];
    let worst = table
        .iter()
        .map(|&(d, l, want)| rel(expected_cell_volume(d, l, 1.0, &cfg).unwrap().value, want))
        .fold(0.0, f64::max);
    let pass = worst <= 1e-8;
    report("3", pass, &format!("(15 mean cell volumes: max rel err {worst:.2e})"));
    assert!(pass);
}

#[test]
fn criterion_04_miles_cross_check() {
    let cfg = QuadratureConfig::default();
    let mut worst: f64 = 0.0;
    for l in 1..=2usize {
        for d in (l + 1).max(2)..=50 {
            let a = expected_cell_volume(d, l, 1.0, &cfg).unwrap().value;
            worst = worst.max(rel(a, miles_cell_volume(d, l, 1.0).unwrap()));
        }
    }
    let pass = worst <= 1e-10;
    report("4", pass, &format!("(mean volume vs classical formulas, l = 1, 2, d <= 50: max rel err {worst:.2e})"));
    assert!(pass);
}

#[test]
fn criterion_05_limits() {
    let c = QuadratureConfig::for_limits();
    let cfg = QuadratureConfig::default();
    let lim: Vec<f64> = (1..=3).map(|l| limit_cell_volume(l, 1.0, &c).unwrap().value).collect();
    let want = [
        1.0 / (2.0 * E).sqrt(),
        3f64.sqrt() / (E * PI),
        1.0 / (4.0 * E.powf(1.5) * (3.0 * (1.0f64 / 3.0).acos() - PI)),
    ];
    let errs: Vec<f64> = lim.iter().zip(&want).map(|(a, b)| rel(*a, *b)).collect();
    let closed_ok = errs[0] <= 1e-6 && errs[1] <= 1e-6 && errs[2] <= 1e-5;
    let finite: Vec<f64> = (1..=3).map(|l| expected_cell_volume(200, l, 1.0, &cfg).unwrap().value).collect();
    let gaps: Vec<f64> = finite.iter().zip(&lim).map(|(a, b)| rel(*a, *b)).collect();
    let finite_ok = gaps.iter().all(|g| *g <= 0.02);
    let pass = closed_ok && finite_ok;
    report(
        "5",
        pass,
        &format!(
            "(limits rel err {:.1e}, {:.1e}, {:.1e}; d = 200 gaps to limit {:.2}%, {:.2}%, {:.2}% for l = 1, 2, 3, bound 2%)",
            errs[0],
            errs[1],
            errs[2],
            100.0 * gaps[0],
            100.0 * gaps[1],
            100.0 * gaps[2]
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_06_geometry_oracle() {
    let start = Instant::now();
    let win = SimulationWindow::new(1.5, 0.5, 1.0, 0).unwrap();
    let mut worst_h: f64 = 0.0;
    let mut worst_tiling: f64 = 0.0;
    let mut mismatched = 0;
    for inst in 0..200u64 {
        let dim = 1 + (inst % 3) as usize;
        let mut rng = substream(2024, inst, 0);
        let n = rng.random_range(5..=100);
        let pts: Vec<MarkedPoint> = (0..n)
            .map(|_| {
                let v = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
                MarkedPoint::new(v, rng.random_range(0.0..0.5))
            })
            .collect();
        let d = build_diagram(&pts, &win).unwrap();
        for c in &d.cells {
            let b = brute_force_cell(c.nucleus_index, &pts, &win, None).unwrap();
            if b.is_empty() != c.is_empty() {
                mismatched += 1;
            }
            worst_h = worst_h.max(hausdorff(&c.vertices, &b.vertices));
        }
        let t = if dim <= 2 {
            let want = unit_ball_volume(dim as f64) * win.r_obs.powi(dim as i32);
            rel(d.volume_in_ball(win.r_obs).unwrap(), want)
        } else {
            let total: f64 = d.nonempty_cells().map(|c| c.measures.volume).sum();
            rel(total, d.clip_box.volume())
        };
        worst_tiling = worst_tiling.max(t);
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = mismatched == 0 && worst_h <= 1e-9 && worst_tiling <= 1e-6 && secs <= 300.0;
    report(
        "6",
        pass,
        &format!(
            "(200 instances: Hausdorff max {worst_h:.1e}, emptiness mismatches {mismatched}, tiling max rel err {worst_tiling:.1e}, {secs:.1} s)"
        ),
    );
    assert!(pass);
}

fn mc(r_obs: f64, seed: u64, threads: usize) -> McConfig {
    McConfig { r_obs, seed, min_cells: 5000, threads, ..Default::default() }
}

fn criterion_7_runs(threads: usize) -> Vec<sectess::montecarlo::TypicalCellEstimate> {
    let cfg = QuadratureConfig::default();
    let plane = Source::model(sectional_model(&SectionSpec::new(3, 2, 1.0).unwrap()).unwrap());
    let line = Source::model(sectional_model(&SectionSpec::new(2, 1, 1.0).unwrap()).unwrap());
    vec![
        estimate_typical_cell_until(&plane, &mc(10.0, 7, threads), &cfg, 5000).unwrap(),
        estimate_typical_cell_until(&line, &mc(100.0, 7, threads), &cfg, 5000).unwrap(),
    ]
}

#[test]
fn criterion_07_monte_carlo_vs_closed_forms() {
    let runs = criterion_7_runs(1);
    let plane = &runs[0];
    let line = &runs[1];
    let (area, f0) = (&plane.reports[0], &plane.reports[1]);
    let length = &line.reports[0];
    let enough = plane.sample.cell_count() >= 5000 && line.sample.cell_count() >= 5000;
    let pass = enough && area.pass && f0.pass && length.pass;
    report("7", pass, &format!("(d=3 l=2: {}; {}. d=2 l=1: {})", area.line(), f0.line(), length.line()));
    assert!(pass);
}

#[test]
fn criterion_08_sectional_law() {
    let start = Instant::now();
    let cfg = QuadratureConfig::default();
    let a = verify_sectional_law(&SectionSpec::new(3, 2, 1.0).unwrap(), 5000, &mc(10.0, 8, 1), &cfg).unwrap();
    let b = verify_sectional_law(&SectionSpec::new(2, 1, 1.0).unwrap(), 5000, &mc(100.0, 8, 1), &cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = a.pass && b.pass && secs <= 900.0;
    let chi = a.f0_chi_square.as_ref().map(|r| r.line()).unwrap_or_default();
    let control = |r: &sectess::montecarlo::TwoArmReport| {
        let c = r.extra.as_ref().unwrap();
        format!("control p = {:.4} ({})", c.p_value.unwrap(), if c.pass { "not rejected" } else { "rejected" })
    };
    report(
        "8",
        pass,
        &format!(
            "(d=3 l=2: {}; {}; {}. d=2 l=1: {}; {}. {secs:.0} s)",
            a.volume_ks.line(),
            chi,
            control(&a),
            b.volume_ks.line(),
            control(&b)
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_09_high_dimensional_convergence() {
    let cfg = QuadratureConfig::default();
    let diag = convergence_diagnostics(2, 1.0, &[10, 100, 1000, 10_000]).unwrap();
    let last = diag.rows.last().unwrap();
    let rate_ok = last.rate_rel_error.abs() <= 0.01;
    let sup_ok = last.sup_difference < 0.01;
    let law = limit_law_check(2, 50, 1.0, 5000, &mc(5.0, 9, 1), &cfg).unwrap();
    let pass = rate_ok && sup_ok && law.pass;
    report(
        "9",
        pass,
        &format!(
            "((i) rate at d=1e4 rel err {:.2e} [{}]; (ii) sup |f_d - e^(pi e h)| = {:.4} [{}] (normalized shift: {:.4}); (iii) d=50 {} [{}], mean section {:.4} vs limit {:.4})",
            last.rate_rel_error,
            if rate_ok { "pass" } else { "fail" },
            last.sup_difference,
            if sup_ok { "pass" } else { "fail" },
            last.sup_difference_normalized,
            law.volume_ks.line(),
            if law.pass { "pass" } else { "fail" },
            law.mean_a.estimate,
            law.mean_b.estimate,
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_determinism() {
    let json = |runs: &[sectess::montecarlo::TypicalCellEstimate]| -> Vec<String> {
        runs.iter().map(|r| to_json(kind::REPORTS, r).unwrap()).collect()
    };
    let a = json(&criterion_7_runs(1));
    let b = json(&criterion_7_runs(1));
    let c = json(&criterion_7_runs(8));
    let bitwise = a == b;
    let threads = a == c;
    let pass = bitwise && threads;
    report("10", pass, &format!("(repeat at 1 thread identical: {bitwise}; 8 threads identical: {threads})"));
    assert!(pass);
}
