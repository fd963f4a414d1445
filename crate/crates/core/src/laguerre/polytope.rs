//! Convex polytopes in one, two and three dimensions, cut down by half-spaces
//! `n·u <= b`. Every vertex remembers the labels of the hyperplanes through
//! it, which is how faces are matched between neighbouring cells.
//!
//! Classification of a vertex against a hyperplane uses the signed distance
//! `(n·u - b)/|n|` and a tolerance: `< -tol` inside, `> tol` outside,
//! otherwise on the hyperplane. A vertex on the hyperplane gains its label.

use std::collections::HashMap;
use std::f64::consts::PI;

/// Site label: `>= 0` nucleus index, `< 0` window wall (`-(wall + 1)`).
pub type Site = i64;

/// Label of wall `2·axis` (lower side) or `2·axis + 1` (upper side).
pub fn wall_site(axis: usize, upper: bool) -> Site {
    -((2 * axis + upper as usize) as i64) - 1
}

fn insert_site(sites: &mut Vec<Site>, s: Site) {
    if let Err(pos) = sites.binary_search(&s) {
        sites.insert(pos, s);
    }
}

fn intersect_sites(a: &[Site], b: &[Site]) -> Vec<Site> {
    a.iter().filter(|s| b.binary_search(s).is_ok()).copied().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    In,
    On,
    Out,
}

fn classify(s: f64, tol: f64) -> Side {
    if s < -tol {
        Side::In
    } else if s > tol {
        Side::Out
    } else {
        Side::On
    }
}

/// Outcome of a cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cut {
    /// Nothing removed (vertices on the hyperplane may have gained the label).
    Untouched,
    Reduced,
    Emptied,
}

/// A cell: a polytope in relative coordinates plus the dimension tag.
#[derive(Debug, Clone)]
pub enum Polytope {
    Interval(Interval),
    Polygon(Polygon),
    Polyhedron(Polyhedron),
}

impl Polytope {
    /// The box `[lo, hi]` with wall labels.
    pub fn cuboid(lo: &[f64], hi: &[f64]) -> Polytope {
        match lo.len() {
            1 => Polytope::Interval(Interval {
                lo: lo[0],
                hi: hi[0],
                lo_sites: vec![wall_site(0, false)],
                hi_sites: vec![wall_site(0, true)],
                lo_facet: wall_site(0, false),
                hi_facet: wall_site(0, true),
            }),
            2 => Polytope::Polygon(Polygon::rectangle(lo, hi)),
            3 => Polytope::Polyhedron(Polyhedron::cuboid(lo, hi)),
            d => panic!("unsupported dimension {d}"),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Polytope::Interval(_) => 1,
            Polytope::Polygon(_) => 2,
            Polytope::Polyhedron(_) => 3,
        }
    }

    /// Keep `n·u <= b`. A zero normal keeps everything when `b >= 0`.
    pub fn clip(&mut self, n: &[f64], b: f64, site: Site, tol: f64) -> Cut {
        let norm = n.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return if b >= 0.0 { Cut::Untouched } else { Cut::Emptied };
        }
        match self {
            Polytope::Interval(p) => p.clip(n[0], b, norm, site, tol),
            Polytope::Polygon(p) => p.clip([n[0], n[1]], b, norm, site, tol),
            Polytope::Polyhedron(p) => p.clip([n[0], n[1], n[2]], b, norm, site, tol),
        }
    }

    /// Largest distance of a vertex from the origin of the relative frame.
    pub fn radius(&self) -> f64 {
        self.vertices().iter().map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max)
    }

    pub fn vertices(&self) -> Vec<Vec<f64>> {
        match self {
            Polytope::Interval(p) => vec![vec![p.lo], vec![p.hi]],
            Polytope::Polygon(p) => p.verts.iter().map(|v| v.p.to_vec()).collect(),
            Polytope::Polyhedron(p) => p.verts.iter().map(|v| v.p.to_vec()).collect(),
        }
    }

    pub fn vertex_sites(&self) -> Vec<Vec<Site>> {
        match self {
            Polytope::Interval(p) => vec![p.lo_sites.clone(), p.hi_sites.clone()],
            Polytope::Polygon(p) => p.verts.iter().map(|v| v.sites.clone()).collect(),
            Polytope::Polyhedron(p) => p.verts.iter().map(|v| v.sites.clone()).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_sites: Vec<Site>,
    pub hi_sites: Vec<Site>,
    pub lo_facet: Site,
    pub hi_facet: Site,
}

impl Interval {
    fn clip(&mut self, n: f64, b: f64, norm: f64, site: Site, tol: f64) -> Cut {
        let s_lo = classify((n * self.lo - b) / norm, tol);
        let s_hi = classify((n * self.hi - b) / norm, tol);
        let cut = b / n;
        match (s_lo, s_hi) {
            (Side::Out, Side::Out) | (Side::Out, Side::On) | (Side::On, Side::Out) => Cut::Emptied,
            (Side::In, Side::Out) => {
                self.hi = cut;
                self.hi_sites = vec![site];
                self.hi_facet = site;
                Cut::Reduced
            }
            (Side::Out, Side::In) => {
                self.lo = cut;
                self.lo_sites = vec![site];
                self.lo_facet = site;
                Cut::Reduced
            }
            (a, c) => {
                if a == Side::On {
                    insert_site(&mut self.lo_sites, site);
                }
                if c == Side::On {
                    insert_site(&mut self.hi_sites, site);
                }
                Cut::Untouched
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct V2 {
    pub p: [f64; 2],
    pub sites: Vec<Site>,
}

/// Counter-clockwise polygon; edge `i` runs from vertex `i` to `i + 1`.
#[derive(Debug, Clone)]
pub struct Polygon {
    pub verts: Vec<V2>,
    pub edges: Vec<Site>,
}

impl Polygon {
    fn rectangle(lo: &[f64], hi: &[f64]) -> Polygon {
        let (x0, y0, x1, y1) = (lo[0], lo[1], hi[0], hi[1]);
        let (l, r, b, t) = (wall_site(0, false), wall_site(0, true), wall_site(1, false), wall_site(1, true));
        let mk = |p: [f64; 2], mut s: Vec<Site>| {
            s.sort_unstable();
            V2 { p, sites: s }
        };
        Polygon {
            verts: vec![
                mk([x0, y0], vec![l, b]),
                mk([x1, y0], vec![b, r]),
                mk([x1, y1], vec![r, t]),
                mk([x0, y1], vec![t, l]),
            ],
            edges: vec![b, r, t, l],
        }
    }

    fn clip(&mut self, n: [f64; 2], b: f64, norm: f64, site: Site, tol: f64) -> Cut {
        let m = self.verts.len();
        let s: Vec<f64> = self.verts.iter().map(|v| (n[0] * v.p[0] + n[1] * v.p[1] - b) / norm).collect();
        let side: Vec<Side> = s.iter().map(|&x| classify(x, tol)).collect();
        if !side.contains(&Side::Out) {
            for (v, sd) in self.verts.iter_mut().zip(&side) {
                if *sd == Side::On {
                    insert_site(&mut v.sites, site);
                }
            }
            return Cut::Untouched;
        }
        if !side.contains(&Side::In) {
            return Cut::Emptied;
        }
        let mut verts = Vec::with_capacity(m + 1);
        let mut edges = Vec::with_capacity(m + 1);
        for i in 0..m {
            let j = (i + 1) % m;
            let e = self.edges[i];
            let cross = |verts: &mut Vec<V2>| {
                let t = s[i] / (s[i] - s[j]);
                let (a, c) = (self.verts[i].p, self.verts[j].p);
                let p = [a[0] + t * (c[0] - a[0]), a[1] + t * (c[1] - a[1])];
                let mut sites = vec![e, site];
                sites.sort_unstable();
                verts.push(V2 { p, sites });
            };
            match (side[i], side[j]) {
                (Side::In, Side::Out) => {
                    verts.push(self.verts[i].clone());
                    edges.push(e);
                    cross(&mut verts);
                    edges.push(site);
                }
                (Side::On, Side::Out) => {
                    let mut v = self.verts[i].clone();
                    insert_site(&mut v.sites, site);
                    verts.push(v);
                    edges.push(site);
                }
                (Side::Out, Side::In) => {
                    cross(&mut verts);
                    edges.push(e);
                }
                (Side::Out, _) => {}
                (sd, _) => {
                    let mut v = self.verts[i].clone();
                    if sd == Side::On {
                        insert_site(&mut v.sites, site);
                    }
                    verts.push(v);
                    edges.push(e);
                }
            }
        }
        if verts.len() < 3 {
            return Cut::Emptied;
        }
        self.verts = verts;
        self.edges = edges;
        Cut::Reduced
    }

    pub fn area(&self) -> f64 {
        let m = self.verts.len();
        let mut a = 0.0;
        for i in 0..m {
            let p = self.verts[i].p;
            let q = self.verts[(i + 1) % m].p;
            a += p[0] * q[1] - p[1] * q[0];
        }
        0.5 * a
    }

    pub fn perimeter(&self) -> f64 {
        let m = self.verts.len();
        (0..m)
            .map(|i| {
                let p = self.verts[i].p;
                let q = self.verts[(i + 1) % m].p;
                (p[0] - q[0]).hypot(p[1] - q[1])
            })
            .sum()
    }
}

#[derive(Debug, Clone)]
pub struct V3 {
    pub p: [f64; 3],
    pub sites: Vec<Site>,
}

/// A facet: a vertex loop (counter-clockwise seen from outside) with its
/// label and unit outward normal.
#[derive(Debug, Clone)]
pub struct Face3 {
    pub site: Site,
    pub normal: [f64; 3],
    pub loop_: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Polyhedron {
    pub verts: Vec<V3>,
    pub faces: Vec<Face3>,
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

impl Polyhedron {
    fn cuboid(lo: &[f64], hi: &[f64]) -> Polyhedron {
        let mut verts = Vec::with_capacity(8);
        for i in 0..8usize {
            let bit = |a: usize| (i >> a) & 1 == 1;
            let p = [0, 1, 2].map(|a| if bit(a) { hi[a] } else { lo[a] });
            let mut sites: Vec<Site> = (0..3).map(|a| wall_site(a, bit(a))).collect();
            sites.sort_unstable();
            verts.push(V3 { p, sites });
        }
        let idx = |x: usize, y: usize, z: usize| x | (y << 1) | (z << 2);
        let mut faces = Vec::with_capacity(6);
        for axis in 0..3 {
            let (u, w) = ((axis + 1) % 3, (axis + 2) % 3);
            for upper in [false, true] {
                let c = upper as usize;
                let at = |a: usize, b: usize| {
                    let mut t = [0usize; 3];
                    t[axis] = c;
                    t[u] = a;
                    t[w] = b;
                    idx(t[0], t[1], t[2])
                };
                // (u, w, axis) is a right-handed frame, so this loop is
                // counter-clockwise seen from +axis.
                let mut loop_ = vec![at(0, 0), at(1, 0), at(1, 1), at(0, 1)];
                if !upper {
                    loop_.reverse();
                }
                let mut normal = [0.0; 3];
                normal[axis] = if upper { 1.0 } else { -1.0 };
                faces.push(Face3 { site: wall_site(axis, upper), normal, loop_ });
            }
        }
        Polyhedron { verts, faces }
    }

    fn clip(&mut self, n: [f64; 3], b: f64, norm: f64, site: Site, tol: f64) -> Cut {
        let s: Vec<f64> = self.verts.iter().map(|v| (dot3(n, v.p) - b) / norm).collect();
        let side: Vec<Side> = s.iter().map(|&x| classify(x, tol)).collect();
        if !side.contains(&Side::Out) {
            for (v, sd) in self.verts.iter_mut().zip(&side) {
                if *sd == Side::On {
                    insert_site(&mut v.sites, site);
                }
            }
            return Cut::Untouched;
        }
        if !side.contains(&Side::In) {
            return Cut::Emptied;
        }
        let mut verts = self.verts.clone();
        let mut on_cap = vec![false; verts.len()];
        let mut crossing: HashMap<(usize, usize), usize> = HashMap::new();
        let mut faces = Vec::with_capacity(self.faces.len() + 1);
        for f in &self.faces {
            let m = f.loop_.len();
            let mut lp = Vec::with_capacity(m + 1);
            for t in 0..m {
                let (i, j) = (f.loop_[t], f.loop_[(t + 1) % m]);
                if side[i] != Side::Out {
                    lp.push(i);
                    if side[i] == Side::On {
                        on_cap[i] = true;
                    }
                }
                let crosses = matches!((side[i], side[j]), (Side::In, Side::Out) | (Side::Out, Side::In));
                if crosses {
                    let key = (i.min(j), i.max(j));
                    let x = *crossing.entry(key).or_insert_with(|| {
                        let tt = s[i] / (s[i] - s[j]);
                        let (a, c) = (self.verts[i].p, self.verts[j].p);
                        let p = [0, 1, 2].map(|k| a[k] + tt * (c[k] - a[k]));
                        let mut sites = intersect_sites(&self.verts[i].sites, &self.verts[j].sites);
                        insert_site(&mut sites, site);
                        verts.push(V3 { p, sites });
                        on_cap.push(true);
                        verts.len() - 1
                    });
                    lp.push(x);
                }
            }
            if lp.len() >= 3 {
                faces.push(Face3 { site: f.site, normal: f.normal, loop_: lp });
            }
        }
        let unit = [n[0] / norm, n[1] / norm, n[2] / norm];
        let cap: Vec<usize> = (0..verts.len()).filter(|&i| on_cap[i]).collect();
        for &i in &cap {
            insert_site(&mut verts[i].sites, site);
        }
        if cap.len() >= 3 {
            let mut c = [0.0; 3];
            for &i in &cap {
                for k in 0..3 {
                    c[k] += verts[i].p[k] / cap.len() as f64;
                }
            }
            let seed = if unit[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            let e1 = {
                let t = cross3(unit, seed);
                let l = norm3(t);
                [t[0] / l, t[1] / l, t[2] / l]
            };
            let e2 = cross3(unit, e1);
            let mut keyed: Vec<(f64, usize)> = cap
                .iter()
                .map(|&i| {
                    let d = sub3(verts[i].p, c);
                    (dot3(d, e2).atan2(dot3(d, e1)), i)
                })
                .collect();
            keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            // e1 × e2 = unit, so increasing angle is counter-clockwise from outside.
            let loop_: Vec<usize> = keyed.into_iter().map(|(_, i)| i).collect();
            faces.push(Face3 { site, normal: unit, loop_ });
        }
        if faces.len() < 4 {
            return Cut::Emptied;
        }
        // Drop vertices that no face references.
        let mut remap = vec![usize::MAX; verts.len()];
        let mut kept = Vec::new();
        for f in &mut faces {
            for i in f.loop_.iter_mut() {
                if remap[*i] == usize::MAX {
                    remap[*i] = kept.len();
                    kept.push(verts[*i].clone());
                }
                *i = remap[*i];
            }
        }
        self.verts = kept;
        self.faces = faces;
        Cut::Reduced
    }

    /// Unordered edges `(a, b)` with `a < b`, and the two faces meeting there.
    pub fn edges(&self) -> Vec<((usize, usize), [usize; 2])> {
        let mut map: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (fi, f) in self.faces.iter().enumerate() {
            let m = f.loop_.len();
            for t in 0..m {
                let (i, j) = (f.loop_[t], f.loop_[(t + 1) % m]);
                map.entry((i.min(j), i.max(j))).or_default().push(fi);
            }
        }
        let mut out: Vec<_> = map
            .into_iter()
            .map(|(k, fs)| (k, [fs[0], *fs.get(1).unwrap_or(&fs[0])]))
            .collect();
        out.sort_unstable_by_key(|e| e.0);
        out
    }

    fn face_area_vec(&self, f: &Face3) -> [f64; 3] {
        let p0 = self.verts[f.loop_[0]].p;
        let mut a = [0.0; 3];
        for t in 1..f.loop_.len() - 1 {
            let c = cross3(sub3(self.verts[f.loop_[t]].p, p0), sub3(self.verts[f.loop_[t + 1]].p, p0));
            for k in 0..3 {
                a[k] += 0.5 * c[k];
            }
        }
        a
    }

    pub fn surface(&self) -> f64 {
        self.faces.iter().map(|f| norm3(self.face_area_vec(f))).sum()
    }

    pub fn volume(&self) -> f64 {
        let mut c = [0.0; 3];
        for v in &self.verts {
            for k in 0..3 {
                c[k] += v.p[k] / self.verts.len() as f64;
            }
        }
        let mut vol = 0.0;
        for f in &self.faces {
            let p0 = sub3(self.verts[f.loop_[0]].p, c);
            for t in 1..f.loop_.len() - 1 {
                let p1 = sub3(self.verts[f.loop_[t]].p, c);
                let p2 = sub3(self.verts[f.loop_[t + 1]].p, c);
                vol += dot3(p0, cross3(p1, p2)).abs() / 6.0;
            }
        }
        vol
    }

    /// First intrinsic volume: `(1/2π) Σ_edges length · (π - interior dihedral angle)`.
    pub fn mean_width_term(&self) -> f64 {
        self.edges()
            .iter()
            .map(|((a, b), [f, g])| {
                let len = norm3(sub3(self.verts[*a].p, self.verts[*b].p));
                let c = dot3(self.faces[*f].normal, self.faces[*g].normal).clamp(-1.0, 1.0);
                len * c.acos()
            })
            .sum::<f64>()
            / (2.0 * PI)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-9;

    #[test]
    fn interval_cut() {
        let mut p = Polytope::cuboid(&[-5.0], &[5.0]);
        // Keep u <= 1.
        assert_eq!(p.clip(&[2.0], 2.0, 7, TOL), Cut::Reduced);
        assert_eq!(p.vertices(), vec![vec![-5.0], vec![1.0]]);
        assert_eq!(p.vertex_sites()[1], vec![7]);
        assert_eq!(p.clip(&[1.0], -6.0, 8, TOL), Cut::Emptied);
    }

    #[test]
    fn square_cut_and_measures() {
        let mut p = Polytope::cuboid(&[0.0, 0.0], &[2.0, 2.0]);
        assert_eq!(p.clip(&[1.0, 0.0], 1.0, 3, TOL), Cut::Reduced);
        let Polytope::Polygon(g) = &p else { panic!() };
        assert!((g.area() - 2.0).abs() < 1e-14);
        assert!((g.perimeter() - 6.0).abs() < 1e-14);
        assert_eq!(g.verts.len(), 4);
        assert!(g.edges.contains(&3));
    }

    #[test]
    fn touching_line_labels_vertex() {
        let mut p = Polytope::cuboid(&[0.0, 0.0], &[1.0, 1.0]);
        // x + y <= 2 touches the corner (1, 1).
        assert_eq!(p.clip(&[1.0, 1.0], 2.0, 9, TOL), Cut::Untouched);
        let sites = p.vertex_sites();
        assert_eq!(sites.iter().filter(|s| s.contains(&9)).count(), 1);
    }

    #[test]
    fn cube_measures() {
        let p = Polytope::cuboid(&[0.0; 3], &[1.0; 3]);
        let Polytope::Polyhedron(h) = &p else { panic!() };
        assert!((h.volume() - 1.0).abs() < 1e-14);
        assert!((h.surface() - 6.0).abs() < 1e-14);
        assert!((h.mean_width_term() - 3.0).abs() < 1e-14);
        assert_eq!(h.edges().len(), 12);
        assert_eq!(h.verts.len(), 8);
        // Outward normals agree with loop orientation.
        for f in &h.faces {
            let a = h.face_area_vec(f);
            assert!(dot3(a, f.normal) > 0.0);
        }
    }

    #[test]
    fn cube_corner_cut() {
        let mut p = Polytope::cuboid(&[0.0; 3], &[1.0; 3]);
        // Remove the corner x + y + z > 2.5.
        assert_eq!(p.clip(&[1.0, 1.0, 1.0], 2.5, 4, TOL), Cut::Reduced);
        let Polytope::Polyhedron(h) = &p else { panic!() };
        let cut = 0.5f64.powi(3) / 6.0;
        assert!((h.volume() - (1.0 - cut)).abs() < 1e-13);
        assert_eq!(h.verts.len(), 10);
        assert_eq!(h.faces.len(), 7);
        assert_eq!(h.edges().len(), 15);
        for f in &h.faces {
            let a = h.face_area_vec(f);
            assert!(dot3(a, f.normal) > 0.0, "face {} misoriented", f.site);
        }
        let tri = h.faces.iter().find(|f| f.site == 4).unwrap();
        assert_eq!(tri.loop_.len(), 3);
    }

    #[test]
    fn cube_halved_through_vertices() {
        let mut p = Polytope::cuboid(&[0.0; 3], &[1.0; 3]);
        // x <= y passes through four cube vertices.
        assert_eq!(p.clip(&[1.0, -1.0, 0.0], 0.0, 5, TOL), Cut::Reduced);
        let Polytope::Polyhedron(h) = &p else { panic!() };
        assert!((h.volume() - 0.5).abs() < 1e-14);
        assert_eq!(h.verts.len(), 6);
        assert_eq!(h.faces.len(), 5);
        assert_eq!(h.edges().len(), 9);
    }

    #[test]
    fn zero_normal() {
        let mut p = Polytope::cuboid(&[0.0; 2], &[1.0; 2]);
        assert_eq!(p.clip(&[0.0, 0.0], 1.0, 1, TOL), Cut::Untouched);
        assert_eq!(p.clip(&[0.0, 0.0], -1.0, 1, TOL), Cut::Emptied);
    }
}
