use proptest::prelude::*;
use rand::Rng;

use sectess::laguerre::{brute_force_cell_in_box, build_diagram, build_diagram_in_box, hausdorff, ClipBox, DEFAULT_TOLERANCE};
use sectess::model::unit_ball_volume;
use sectess::process::{MarkedPoint, SimulationWindow};
use sectess::rng::substream;

fn window() -> SimulationWindow {
    SimulationWindow::new(1.5, 0.5, 1.0, 0).unwrap()
}

fn random_points(seed: u64, dim: usize, n: usize) -> Vec<MarkedPoint> {
    let mut rng = substream(seed, dim as u64, n as u64);
    (0..n)
        .map(|_| {
            let v = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
            MarkedPoint::new(v, rng.random_range(0.0..0.5))
        })
        .collect()
}

#[test]
fn matches_brute_force_and_tiles() {
    let win = window();
    let clip = ClipBox::around(&win, 1);
    for seed in 0..60u64 {
        let dim = 1 + (seed % 3) as usize;
        let clip = if dim == 1 { clip.clone() } else { ClipBox::around(&win, dim) };
        let pts = random_points(seed, dim, 5 + (seed as usize * 7) % 96);
        let d = build_diagram(&pts, &win).unwrap();
        for c in &d.cells {
            let b = brute_force_cell_in_box(c.nucleus_index, &pts, &clip, DEFAULT_TOLERANCE, None).unwrap();
            assert_eq!(b.is_empty(), c.is_empty());
            assert!(hausdorff(&b.vertices, &c.vertices) <= 1e-9);
        }
        let total: f64 = d.nonempty_cells().map(|c| c.measures.volume).sum();
        assert!((total / clip.volume() - 1.0).abs() <= 1e-6);
        if dim <= 2 {
            let ball = unit_ball_volume(dim as f64) * win.r_obs.powi(dim as i32);
            assert!((d.volume_in_ball(win.r_obs).unwrap() / ball - 1.0).abs() <= 1e-6);
        }
    }
}

#[test]
fn translation_equivariance() {
    let win = window();
    for dim in 1..=3usize {
        let pts = random_points(11, dim, 40);
        let t: Vec<f64> = [0.375, -1.25, 2.5][..dim].to_vec();
        let shifted: Vec<MarkedPoint> =
            pts.iter().map(|p| MarkedPoint::new(p.v.iter().zip(&t).map(|(a, b)| a + b).collect(), p.h)).collect();
        let clip = ClipBox::around(&win, dim);
        let moved = ClipBox {
            lo: clip.lo.iter().zip(&t).map(|(a, b)| a + b).collect(),
            hi: clip.hi.iter().zip(&t).map(|(a, b)| a + b).collect(),
        };
        let a = build_diagram_in_box(&pts, &win, &clip, DEFAULT_TOLERANCE).unwrap();
        let b = build_diagram_in_box(&shifted, &win, &moved, DEFAULT_TOLERANCE).unwrap();
        for (ca, cb) in a.cells.iter().zip(&b.cells) {
            let back: Vec<Vec<f64>> = cb.vertices.iter().map(|v| v.iter().zip(&t).map(|(x, s)| x - s).collect()).collect();
            assert!(hausdorff(&ca.vertices, &back) <= 1e-9);
        }
    }
}

#[test]
fn common_height_shift_changes_nothing() {
    let win = window();
    for dim in 1..=3usize {
        let pts = random_points(5, dim, 50);
        let up: Vec<MarkedPoint> = pts.iter().map(|p| MarkedPoint::new(p.v.clone(), p.h + 0.25)).collect();
        let a = build_diagram(&pts, &win).unwrap();
        let b = build_diagram(&up, &win).unwrap();
        assert_eq!(a.cells.len(), b.cells.len());
        for (ca, cb) in a.cells.iter().zip(&b.cells) {
            assert_eq!(ca.is_empty(), cb.is_empty());
            assert!(hausdorff(&ca.vertices, &cb.vertices) <= 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn normal_and_euler(seed in 0u64..1_000_000, dim in 2usize..=3, n in 5usize..60) {
        let pts = random_points(seed, dim, n);
        let d = build_diagram(&pts, &window()).unwrap();
        prop_assert_eq!(d.normality_violations(), 0);
        for c in d.nonempty_cells() {
            let f = &c.measures.f_vector;
            let chi: i64 = f.iter().enumerate().map(|(k, &x)| if k % 2 == 0 { x as i64 } else { -(x as i64) }).sum();
            // Alternating sum over all faces including the cell itself.
            prop_assert_eq!(chi, 1);
        }
    }

    #[test]
    fn lowest_power_cell_contains_point(seed in 0u64..1_000_000, dim in 1usize..=3, x in prop::array::uniform3(-1.9f64..1.9)) {
        let pts = random_points(seed, dim, 30);
        let d = build_diagram(&pts, &window()).unwrap();
        let w = &x[..dim];
        let best = (0..pts.len()).min_by(|&i, &j| pts[i].power(w).total_cmp(&pts[j].power(w))).unwrap();
        prop_assert!(d.cells[best].contains(w, 1e-9));
    }
}
