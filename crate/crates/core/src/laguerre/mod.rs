//! Laguerre (power) diagrams of marked points in one to three dimensions.
//!
//! The cell of `x = (v_x, h_x)` is the set of `w` with
//! `pow(w, x) <= pow(w, y)` for every other `y`, i.e. in coordinates
//! `u = w - v_x` relative to the nucleus
//!
//! ```text
//! 2 (v_y - v_x)·u <= |v_y - v_x|² + h_y - h_x
//! ```
//!
//! Each cell is the clipping box cut down by these half-spaces, nearest
//! nuclei first, stopping once no further nucleus can reach the cell.

pub mod grid;
pub mod polytope;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::{MarkedPoint, SimulationWindow};
use grid::Grid;
use polytope::{wall_site, Cut, Polytope, Site};

/// Relative predicate tolerance; scaled by `max(1, box half-width)`.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// A facet with its supporting half-space `normal·w <= offset` (unit normal,
/// absolute coordinates). `vertices` index into the cell's vertex list; in
/// three dimensions they form a loop, counter-clockwise seen from outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Facet {
    pub site: Site,
    pub normal: Vec<f64>,
    pub offset: f64,
    pub vertices: Vec<usize>,
}

/// Volume, boundary measure, intrinsic volumes `V_0..V_ℓ` and f-vector
/// `(f_0, ..., f_ℓ)` of a cell. The boundary measure is the perimeter in
/// the plane, the surface area in space, and the endpoint count on a line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CellMeasures {
    pub volume: f64,
    pub surface: f64,
    pub intrinsic: Vec<f64>,
    pub f_vector: Vec<usize>,
}

/// One Laguerre cell clipped to the window box. Empty cells have no
/// vertices. In the plane the vertices run counter-clockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexCell {
    pub nucleus_index: usize,
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
    /// Labels of the hyperplanes through each vertex (other nuclei, or
    /// walls as negative labels), sorted.
    pub vertex_sites: Vec<Vec<Site>>,
    pub facets: Vec<Facet>,
    pub measures: CellMeasures,
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

fn lex_min<'a, I: Iterator<Item = &'a Vec<f64>>>(it: I) -> Option<Vec<f64>> {
    it.min_by(|a, b| lex_cmp(a, b)).cloned()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl ConvexCell {
    fn empty(nucleus_index: usize, dim: usize) -> Self {
        ConvexCell {
            nucleus_index,
            dim,
            vertices: Vec::new(),
            vertex_sites: Vec::new(),
            facets: Vec::new(),
            measures: CellMeasures { intrinsic: vec![0.0; dim + 1], f_vector: vec![0; dim + 1], ..Default::default() },
        }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Centre function: the lexicographically smallest vertex.
    pub fn centre(&self) -> Option<Vec<f64>> {
        lex_min(self.vertices.iter())
    }

    /// Whether any vertex lies on a window wall.
    pub fn touches_wall(&self) -> bool {
        self.vertex_sites.iter().flatten().any(|s| *s < 0)
    }

    /// Membership with slack `tol` on every facet inequality.
    pub fn contains(&self, w: &[f64], tol: f64) -> bool {
        !self.is_empty()
            && self
                .facets
                .iter()
                .all(|f| f.normal.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() <= f.offset + tol)
    }

    /// Vertex centroid and the largest vertex distance from it.
    pub fn bounding_ball(&self) -> (Vec<f64>, f64) {
        let n = self.vertices.len().max(1) as f64;
        let mut c = vec![0.0; self.dim];
        for v in &self.vertices {
            for (ci, vi) in c.iter_mut().zip(v) {
                *ci += vi / n;
            }
        }
        let r = self
            .vertices
            .iter()
            .map(|v| norm(&v.iter().zip(&c).map(|(a, b)| a - b).collect::<Vec<_>>()))
            .fold(0.0, f64::max);
        (c, r)
    }

    /// Unordered edges of a three-dimensional cell with their two facets.
    pub fn edges_3d(&self) -> Vec<((usize, usize), [usize; 2])> {
        let mut map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (fi, f) in self.facets.iter().enumerate() {
            let m = f.vertices.len();
            for t in 0..m {
                let (a, b) = (f.vertices[t], f.vertices[(t + 1) % m]);
                map.entry((a.min(b), a.max(b))).or_default().push(fi);
            }
        }
        map.into_iter().map(|(k, fs)| (k, [fs[0], *fs.get(1).unwrap_or(&fs[0])])).collect()
    }

    /// Faces of the cell as `(dimension, key, centre)`. The key is the
    /// sorted set of sites whose cells contain the face, so the same face
    /// seen from different cells has the same key.
    pub fn faces(&self) -> Vec<(usize, Vec<Site>, Vec<f64>)> {
        if self.is_empty() {
            return Vec::new();
        }
        let x = self.nucleus_index as Site;
        let key = |extra: &[Site]| {
            let mut k: Vec<Site> = extra.to_vec();
            k.push(x);
            k.sort_unstable();
            k.dedup();
            k
        };
        let mut out = Vec::new();
        for (v, s) in self.vertices.iter().zip(&self.vertex_sites) {
            out.push((0, key(s), v.clone()));
        }
        let l = self.dim;
        if l == 3 {
            for ((a, b), [f, g]) in self.edges_3d() {
                let c = lex_min([&self.vertices[a], &self.vertices[b]].into_iter()).unwrap();
                out.push((1, key(&[self.facets[f].site, self.facets[g].site]), c));
            }
        }
        if l >= 2 {
            for f in &self.facets {
                let c = lex_min(f.vertices.iter().map(|&i| &self.vertices[i])).unwrap();
                out.push((l - 1, key(&[f.site]), c));
            }
        }
        out.push((l, vec![x], self.centre().unwrap()));
        out
    }
}

/// A face of the diagram and the cells containing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Face {
    pub dim: usize,
    pub key: Vec<Site>,
    pub cells: Vec<usize>,
    pub centre: Vec<f64>,
}

impl Face {
    /// Whether the face lies on the window boundary.
    pub fn on_wall(&self) -> bool {
        self.key.iter().any(|s| *s < 0)
    }
}

/// Axis-parallel clipping box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ClipBox {
    /// `[-reach, reach]^dim` for the window.
    pub fn around(win: &SimulationWindow, dim: usize) -> ClipBox {
        let r = win.reach();
        ClipBox { lo: vec![-r; dim], hi: vec![r; dim] }
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    fn scale(&self) -> f64 {
        self.lo.iter().chain(&self.hi).fold(1.0f64, |m, x| m.max(x.abs()))
    }
}

/// The diagram of a finite point set inside a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaguerreDiagram {
    pub dim: usize,
    pub nuclei: Vec<MarkedPoint>,
    pub cells: Vec<ConvexCell>,
    /// `faces[k]`: the k-faces, sorted by key.
    pub faces: Vec<Vec<Face>>,
    pub window: SimulationWindow,
    pub clip_box: ClipBox,
    /// Power below which the point set is known to be complete; a cell with
    /// every vertex below it (and inside the reach) is exact.
    pub certified_cap: f64,
    pub tolerance: f64,
}

fn check_points(points: &[MarkedPoint]) -> Result<usize> {
    let Some(first) = points.first() else {
        return Err(Error::Domain("diagram needs at least one point".into()));
    };
    let dim = first.dim();
    if !(1..=3).contains(&dim) {
        return Err(Error::Dimension(dim));
    }
    for p in points {
        if p.dim() != dim {
            return Err(Error::Domain(format!("mixed point dimensions {} and {dim}", p.dim())));
        }
        if !p.h.is_finite() || p.v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("non-finite point {p:?}")));
        }
    }
    Ok(dim)
}

/// The half-space of `x`'s cell against `y`, in coordinates relative to
/// `v_x`. `None` means `y` does not constrain `x`; an empty result is
/// signalled by a zero normal with negative offset.
fn bisector(i: usize, x: &MarkedPoint, j: usize, y: &MarkedPoint) -> Option<(Vec<f64>, f64)> {
    let delta: Vec<f64> = y.v.iter().zip(&x.v).map(|(a, b)| a - b).collect();
    let d2: f64 = delta.iter().map(|t| t * t).sum();
    let b = d2 + y.h - x.h;
    if d2 == 0.0 {
        // Coincident positions: the lower height wins, ties go to the lower index.
        let loses = y.h < x.h || (y.h == x.h && j < i);
        return loses.then(|| (delta, -1.0));
    }
    Some((delta.iter().map(|t| 2.0 * t).collect(), b))
}

struct Builder<'a> {
    points: &'a [MarkedPoint],
    clip: &'a ClipBox,
    tol: f64,
}

impl Builder<'_> {
    fn start(&self, i: usize) -> (Polytope, Vec<(Site, Vec<f64>, f64)>) {
        let v = &self.points[i].v;
        let lo: Vec<f64> = self.clip.lo.iter().zip(v).map(|(a, b)| a - b).collect();
        let hi: Vec<f64> = self.clip.hi.iter().zip(v).map(|(a, b)| a - b).collect();
        let mut planes = Vec::new();
        for a in 0..v.len() {
            let mut n = vec![0.0; v.len()];
            n[a] = -1.0;
            planes.push((wall_site(a, false), n.clone(), -lo[a]));
            n[a] = 1.0;
            planes.push((wall_site(a, true), n, hi[a]));
        }
        (Polytope::cuboid(&lo, &hi), planes)
    }

    /// Applies nucleus `j` to cell `i`; returns false once the cell is empty.
    fn apply(&self, i: usize, j: usize, poly: &mut Polytope, planes: &mut Vec<(Site, Vec<f64>, f64)>) -> bool {
        if i == j {
            return true;
        }
        let Some((n, b)) = bisector(i, &self.points[i], j, &self.points[j]) else {
            return true;
        };
        match poly.clip(&n, b, j as Site, self.tol) {
            Cut::Emptied => false,
            _ => {
                planes.push((j as Site, n, b));
                true
            }
        }
    }

    fn finish(&self, i: usize, poly: Option<Polytope>, planes: &[(Site, Vec<f64>, f64)]) -> ConvexCell {
        let dim = self.points[i].dim();
        let Some(poly) = poly else {
            return ConvexCell::empty(i, dim);
        };
        let v = &self.points[i].v;
        let abs = |p: &[f64]| -> Vec<f64> { p.iter().zip(v).map(|(a, b)| a + b).collect() };
        let plane = |site: Site| {
            let (_, n, b) = planes.iter().rev().find(|(s, _, _)| *s == site).expect("facet plane recorded");
            let len = norm(n);
            let offset = (b + n.iter().zip(v).map(|(a, c)| a * c).sum::<f64>()) / len;
            (n.iter().map(|t| t / len).collect::<Vec<f64>>(), offset)
        };
        let vertices: Vec<Vec<f64>> = poly.vertices().iter().map(|p| abs(p)).collect();
        let vertex_sites = poly.vertex_sites();
        let facets: Vec<Facet> = match &poly {
            Polytope::Interval(p) => [(p.lo_facet, 0usize), (p.hi_facet, 1)]
                .into_iter()
                .map(|(site, k)| {
                    let (normal, offset) = plane(site);
                    Facet { site, normal, offset, vertices: vec![k] }
                })
                .collect(),
            Polytope::Polygon(p) => {
                let m = p.verts.len();
                (0..m)
                    .map(|k| {
                        let (normal, offset) = plane(p.edges[k]);
                        Facet { site: p.edges[k], normal, offset, vertices: vec![k, (k + 1) % m] }
                    })
                    .collect()
            }
            Polytope::Polyhedron(p) => p
                .faces
                .iter()
                .map(|f| {
                    let (normal, offset) = plane(f.site);
                    Facet { site: f.site, normal, offset, vertices: f.loop_.clone() }
                })
                .collect(),
        };
        let mut cell = ConvexCell { nucleus_index: i, dim, vertices, vertex_sites, facets, measures: CellMeasures::default() };
        cell.measures = cell_measures(&cell);
        cell
    }

    /// Grid-pruned construction.
    fn cell(&self, i: usize, grid: &Grid, h_min: f64) -> ConvexCell {
        let (mut poly, mut planes) = self.start(i);
        let x = &self.points[i];
        for &j in grid.far() {
            if !self.apply(i, j, &mut poly, &mut planes) {
                return self.finish(i, None, &planes);
            }
        }
        let centre = grid.clamped_bucket(&x.v);
        let s = grid.cell_size();
        let mut k = 0i64;
        while grid.ring_in_range(centre, k) {
            if k >= 1 {
                let rho = poly.radius();
                let reach = rho + (rho * rho + x.h - h_min).max(0.0).sqrt();
                if (k - 1) as f64 * s > reach + self.tol {
                    break;
                }
            }
            let mut alive = true;
            grid.for_ring(centre, k, |j| {
                if alive {
                    alive = self.apply(i, j, &mut poly, &mut planes);
                }
            });
            if !alive {
                return self.finish(i, None, &planes);
            }
            k += 1;
        }
        self.finish(i, Some(poly), &planes)
    }
}

fn assemble_faces(dim: usize, cells: &[ConvexCell]) -> Vec<Vec<Face>> {
    let mut map: BTreeMap<(usize, Vec<Site>), Face> = BTreeMap::new();
    for cell in cells {
        for (k, key, centre) in cell.faces() {
            map.entry((k, key.clone()))
                .or_insert_with(|| Face { dim: k, key, cells: Vec::new(), centre })
                .cells
                .push(cell.nucleus_index);
        }
    }
    let mut faces = vec![Vec::new(); dim + 1];
    for ((k, _), f) in map {
        faces[k].push(f);
    }
    faces
}

/// Diagram of `points` clipped to `[-(r_obs + r_margin), r_obs + r_margin]^ℓ`.
pub fn build_diagram(points: &[MarkedPoint], win: &SimulationWindow) -> Result<LaguerreDiagram> {
    let dim = check_points(points)?;
    build_diagram_in_box(points, win, &ClipBox::around(win, dim), DEFAULT_TOLERANCE)
}

/// Diagram of `points` clipped to an arbitrary box, with relative tolerance
/// `tol`.
pub fn build_diagram_in_box(points: &[MarkedPoint], win: &SimulationWindow, clip: &ClipBox, tol: f64) -> Result<LaguerreDiagram> {
    let dim = check_points(points)?;
    if clip.lo.len() != dim || clip.hi.len() != dim || clip.lo.iter().zip(&clip.hi).any(|(a, b)| !(a < b)) {
        return Err(Error::Domain(format!("clipping box {clip:?} does not fit dimension {dim}")));
    }
    let b = Builder { points, clip, tol: tol * clip.scale() };
    let positions: Vec<&[f64]> = points.iter().map(|p| &p.v[..]).collect();
    let grid = Grid::new(&positions, &clip.lo, &clip.hi);
    let h_min = points.iter().map(|p| p.h).fold(f64::INFINITY, f64::min);
    let cells: Vec<ConvexCell> = (0..points.len()).into_par_iter().map(|i| b.cell(i, &grid, h_min)).collect();
    for c in &cells {
        if !(c.measures.volume >= 0.0) || !c.measures.volume.is_finite() {
            return Err(Error::Degenerate(format!("cell {} has volume {}", c.nucleus_index, c.measures.volume)));
        }
    }
    let faces = assemble_faces(dim, &cells);
    Ok(LaguerreDiagram {
        dim,
        nuclei: points.to_vec(),
        cells,
        faces,
        window: *win,
        clip_box: clip.clone(),
        certified_cap: win.t_cap,
        tolerance: b.tol,
    })
}

/// Independent construction of one cell: the box is cut by every other
/// nucleus in reverse index order, without pruning. With `grid_n`, the
/// result is also audited against direct power comparisons on a
/// `grid_n^ℓ` lattice of the box.
pub fn brute_force_cell(index: usize, points: &[MarkedPoint], win: &SimulationWindow, grid_n: Option<usize>) -> Result<ConvexCell> {
    let dim = check_points(points)?;
    let clip = ClipBox::around(win, dim);
    brute_force_cell_in_box(index, points, &clip, DEFAULT_TOLERANCE, grid_n)
}

pub fn brute_force_cell_in_box(
    index: usize,
    points: &[MarkedPoint],
    clip: &ClipBox,
    tol: f64,
    grid_n: Option<usize>,
) -> Result<ConvexCell> {
    check_points(points)?;
    if index >= points.len() {
        return Err(Error::Domain(format!("index {index} out of range")));
    }
    let b = Builder { points, clip, tol: tol * clip.scale() };
    let (mut poly, mut planes) = b.start(index);
    let mut alive = true;
    for j in (0..points.len()).rev() {
        if !b.apply(index, j, &mut poly, &mut planes) {
            alive = false;
            break;
        }
    }
    let cell = b.finish(index, alive.then_some(poly), &planes);
    if let Some(n) = grid_n {
        audit(&cell, points, clip, n, b.tol)?;
    }
    Ok(cell)
}

fn audit(cell: &ConvexCell, points: &[MarkedPoint], clip: &ClipBox, n: usize, tol: f64) -> Result<()> {
    let dim = clip.lo.len();
    let total = n.pow(dim as u32);
    let margin = 1e3 * tol * clip.scale();
    for idx in 0..total {
        let mut w = vec![0.0; dim];
        let mut r = idx;
        for a in 0..dim {
            let t = (r % n) as f64 + 0.5;
            r /= n;
            w[a] = clip.lo[a] + (clip.hi[a] - clip.lo[a]) * t / n as f64;
        }
        let own = points[cell.nucleus_index].power(&w);
        let best_other = points
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != cell.nucleus_index)
            .map(|(_, p)| p.power(&w))
            .fold(f64::INFINITY, f64::min);
        let inside = cell.contains(&w, tol);
        if own < best_other - margin && !inside {
            return Err(Error::Degenerate(format!("audit: {w:?} belongs to cell {} but is outside", cell.nucleus_index)));
        }
        if own > best_other + margin && cell.contains(&w, -tol) {
            return Err(Error::Degenerate(format!("audit: {w:?} is inside cell {} but belongs elsewhere", cell.nucleus_index)));
        }
    }
    Ok(())
}

fn polygon_area(vs: &[Vec<f64>]) -> f64 {
    let m = vs.len();
    (0..m).map(|i| vs[i][0] * vs[(i + 1) % m][1] - vs[i][1] * vs[(i + 1) % m][0]).sum::<f64>() / 2.0
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Measures of a cell from its vertices and facets alone.
pub fn cell_measures(cell: &ConvexCell) -> CellMeasures {
    let l = cell.dim;
    if cell.is_empty() {
        return ConvexCell::empty(cell.nucleus_index, l).measures;
    }
    match l {
        1 => {
            let len = (cell.vertices[1][0] - cell.vertices[0][0]).abs();
            CellMeasures { volume: len, surface: 2.0, intrinsic: vec![1.0, len], f_vector: vec![2, 1] }
        }
        2 => {
            let vs = &cell.vertices;
            let m = vs.len();
            let area = polygon_area(vs);
            let per: f64 = (0..m).map(|i| norm(&sub(&vs[(i + 1) % m], &vs[i]))).sum();
            CellMeasures { volume: area, surface: per, intrinsic: vec![1.0, per / 2.0, area], f_vector: vec![m, m, 1] }
        }
        3 => {
            let (c, _) = cell.bounding_ball();
            let mut vol = 0.0;
            let mut surf = 0.0;
            for f in &cell.facets {
                let p0 = sub(&cell.vertices[f.vertices[0]], &c);
                let mut area = [0.0; 3];
                for t in 1..f.vertices.len() - 1 {
                    let p1 = sub(&cell.vertices[f.vertices[t]], &c);
                    let p2 = sub(&cell.vertices[f.vertices[t + 1]], &c);
                    vol += dot(&p0, &cross(&p1, &p2)).abs() / 6.0;
                    let a = cross(&sub(&p1, &p0), &sub(&p2, &p0));
                    for k in 0..3 {
                        area[k] += a[k] / 2.0;
                    }
                }
                surf += norm(&area);
            }
            let edges = cell.edges_3d();
            let v1 = edges
                .iter()
                .map(|((a, b), [f, g])| {
                    let len = norm(&sub(&cell.vertices[*a], &cell.vertices[*b]));
                    let cosang = dot(&cell.facets[*f].normal, &cell.facets[*g].normal).clamp(-1.0, 1.0);
                    len * cosang.acos()
                })
                .sum::<f64>()
                / (2.0 * PI);
            CellMeasures {
                volume: vol,
                surface: surf,
                intrinsic: vec![1.0, v1, surf / 2.0, vol],
                f_vector: vec![cell.vertices.len(), edges.len(), cell.facets.len(), 1],
            }
        }
        _ => unreachable!("cells have dimension 1 to 3"),
    }
}

/// Signed area of the triangle `(0, p, q)` intersected with the disk of
/// radius `r` about the origin.
fn triangle_disk_area(p: [f64; 2], q: [f64; 2], r: f64) -> f64 {
    let d = [q[0] - p[0], q[1] - p[1]];
    let a = d[0] * d[0] + d[1] * d[1];
    let b = 2.0 * (p[0] * d[0] + p[1] * d[1]);
    let c = p[0] * p[0] + p[1] * p[1] - r * r;
    let mut ts = vec![0.0];
    let disc = b * b - 4.0 * a * c;
    if a > 0.0 && disc > 0.0 {
        let sq = disc.sqrt();
        for t in [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)] {
            if t > 0.0 && t < 1.0 {
                ts.push(t);
            }
        }
    }
    ts.push(1.0);
    let at = |t: f64| [p[0] + t * d[0], p[1] + t * d[1]];
    let mut s = 0.0;
    for w in ts.windows(2) {
        let (u, v) = (at(w[0]), at(w[1]));
        let m = at(0.5 * (w[0] + w[1]));
        let cr = u[0] * v[1] - u[1] * v[0];
        if m[0] * m[0] + m[1] * m[1] <= r * r {
            s += cr / 2.0;
        } else {
            s += r * r * cr.atan2(u[0] * v[0] + u[1] * v[1]) / 2.0;
        }
    }
    s
}

/// Volume of `cell ∩ B_r` (origin-centred ball), for one- and
/// two-dimensional cells.
pub fn volume_in_ball(cell: &ConvexCell, r: f64) -> Result<f64> {
    if cell.is_empty() {
        return Ok(0.0);
    }
    match cell.dim {
        1 => {
            let (a, b) = (cell.vertices[0][0], cell.vertices[1][0]);
            Ok((b.min(r) - a.max(-r)).max(0.0))
        }
        2 => {
            let vs = &cell.vertices;
            let m = vs.len();
            Ok((0..m)
                .map(|i| triangle_disk_area([vs[i][0], vs[i][1]], [vs[(i + 1) % m][0], vs[(i + 1) % m][1]], r))
                .sum())
        }
        d => Err(Error::Dimension(d)),
    }
}

impl LaguerreDiagram {
    pub fn nonempty_cells(&self) -> impl Iterator<Item = &ConvexCell> {
        self.cells.iter().filter(|c| !c.is_empty())
    }

    /// Whether the cell is exact: no wall contact, every vertex strictly
    /// inside the reach and with power at most the certified cap.
    pub fn is_certified(&self, cell: &ConvexCell) -> bool {
        let reach = self.window.reach();
        let x = &self.nuclei[cell.nucleus_index];
        !cell.touches_wall()
            && cell.vertices.iter().all(|w| norm(w) < reach && x.power(w) <= self.certified_cap)
    }

    /// Checks every nonempty cell that may meet the observation ball.
    pub fn certificate(&self) -> Certificate {
        let reach = self.window.reach();
        let mut cert = Certificate::default();
        for cell in self.nonempty_cells() {
            let (c, rad) = cell.bounding_ball();
            if norm(&c) - rad > self.window.r_obs {
                continue;
            }
            cert.checked += 1;
            let x = &self.nuclei[cell.nucleus_index];
            if cell.touches_wall() || cell.vertices.iter().any(|w| norm(w) >= reach) {
                cert.reach_violations += 1;
            } else if cell.vertices.iter().any(|w| x.power(w) > self.certified_cap) {
                cert.cap_violations += 1;
            }
        }
        cert
    }

    /// Cells with centre in `B_{r_obs}` (minus-sampling).
    pub fn interior_cells(&self, r_obs: f64) -> impl Iterator<Item = &ConvexCell> {
        self.nonempty_cells().filter(move |c| norm(&c.centre().unwrap()) < r_obs)
    }

    /// Faces of dimension `k` with centre in `B_{r_obs}`.
    pub fn interior_faces(&self, k: usize, r_obs: f64) -> impl Iterator<Item = &Face> {
        self.faces[k].iter().filter(move |f| norm(&f.centre) < r_obs)
    }

    /// `Σ vol(cell ∩ B_r)` over nonempty cells (ℓ ≤ 2).
    pub fn volume_in_ball(&self, r: f64) -> Result<f64> {
        self.nonempty_cells().map(|c| volume_in_ball(c, r)).sum()
    }

    /// Number of interior k-faces (not on a wall) whose number of incident
    /// cells differs from `ℓ + 1 - k`.
    pub fn normality_violations(&self) -> usize {
        let l = self.dim;
        (0..l)
            .flat_map(|k| self.faces[k].iter().map(move |f| (k, f)))
            .filter(|(k, f)| !f.on_wall() && f.cells.len() != l + 1 - k)
            .count()
    }
}

/// Summary of the exactness check over the observation ball.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub checked: usize,
    /// Cells reaching the wall or the edge of the margin.
    pub reach_violations: usize,
    /// Cells inside the reach with a vertex above the certified cap.
    pub cap_violations: usize,
}

impl Certificate {
    pub fn ok(&self) -> bool {
        self.reach_violations == 0 && self.cap_violations == 0
    }
}

/// Cells whose centre lies in `B_{r_obs}`; errors if any of them is not
/// certified exact.
pub fn restrict_interior_cells(diag: &LaguerreDiagram, r_obs: f64) -> Result<Vec<ConvexCell>> {
    let mut out = Vec::new();
    for c in diag.interior_cells(r_obs) {
        if !diag.is_certified(c) {
            return Err(Error::BoundaryContamination(format!(
                "cell {} with centre {:?} is not determined by the sample",
                c.nucleus_index,
                c.centre().unwrap()
            )));
        }
        out.push(c.clone());
    }
    Ok(out)
}

/// Hausdorff distance between two vertex sets.
pub fn hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.is_empty() && b.is_empty() { 0.0 } else { f64::INFINITY };
    }
    let one = |x: &[Vec<f64>], y: &[Vec<f64>]| {
        x.iter().map(|p| y.iter().map(|q| norm(&sub(p, q))).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}
