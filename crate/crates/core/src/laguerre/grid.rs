//! Uniform bucket grid over nucleus positions, walked in Chebyshev rings.

/// Bucket grid in up to three dimensions. Points beyond the grid extent
/// (far outliers of the sampling region) are kept in a separate list.
#[derive(Debug, Clone)]
pub struct Grid {
    dim: usize,
    origin: [f64; 3],
    cell: f64,
    dims: [usize; 3],
    buckets: Vec<Vec<usize>>,
    far: Vec<usize>,
}

impl Grid {
    /// `focus_lo..focus_hi` is the region where the density of points sets the
    /// bucket size; points more than one focus-width outside it go to `far`.
    pub fn new(positions: &[&[f64]], focus_lo: &[f64], focus_hi: &[f64]) -> Grid {
        let dim = focus_lo.len();
        let n_focus = positions
            .iter()
            .filter(|p| (0..dim).all(|a| p[a] >= focus_lo[a] && p[a] <= focus_hi[a]))
            .count()
            .max(1);
        let vol: f64 = (0..dim).map(|a| focus_hi[a] - focus_lo[a]).product();
        let mut cell = (2.0 * vol / n_focus as f64).powf(1.0 / dim as f64);
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for a in 0..dim {
            let w = focus_hi[a] - focus_lo[a];
            lo[a] = focus_lo[a] - w;
            hi[a] = focus_hi[a] + w;
        }
        // Keep the bucket count comparable to the point count.
        let cap = 4 * positions.len() + 64;
        loop {
            let total: f64 = (0..dim).map(|a| ((hi[a] - lo[a]) / cell).ceil().max(1.0)).product();
            if total <= cap as f64 {
                break;
            }
            cell *= 1.5;
        }
        let mut dims = [1usize; 3];
        for a in 0..dim {
            dims[a] = ((hi[a] - lo[a]) / cell).ceil().max(1.0) as usize;
        }
        let mut g = Grid {
            dim,
            origin: lo,
            cell,
            dims,
            buckets: vec![Vec::new(); dims.iter().product()],
            far: Vec::new(),
        };
        for (i, p) in positions.iter().enumerate() {
            match g.bucket_of(p) {
                Some(c) => {
                    let k = g.flat(c);
                    g.buckets[k].push(i);
                }
                None => g.far.push(i),
            }
        }
        g
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn far(&self) -> &[usize] {
        &self.far
    }

    fn bucket_of(&self, p: &[f64]) -> Option<[usize; 3]> {
        let mut c = [0usize; 3];
        for a in 0..self.dim {
            let t = ((p[a] - self.origin[a]) / self.cell).floor();
            if !(t >= 0.0 && t < self.dims[a] as f64) {
                return None;
            }
            c[a] = t as usize;
        }
        Some(c)
    }

    /// Bucket coordinates of `p`, clamped into the grid.
    pub fn clamped_bucket(&self, p: &[f64]) -> [i64; 3] {
        let mut c = [0i64; 3];
        for a in 0..self.dim {
            let t = ((p[a] - self.origin[a]) / self.cell).floor();
            c[a] = t.clamp(0.0, (self.dims[a] - 1) as f64) as i64;
        }
        c
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }

    /// Whether Chebyshev ring `k` around `centre` still overlaps the grid.
    pub fn ring_in_range(&self, centre: [i64; 3], k: i64) -> bool {
        (0..self.dim).any(|a| centre[a] - k >= 0 || centre[a] + k < self.dims[a] as i64)
    }

    /// Calls `f` for every point in Chebyshev ring `k` around `centre`.
    pub fn for_ring<F: FnMut(usize)>(&self, centre: [i64; 3], k: i64, mut f: F) {
        let span = |a: usize| -> (i64, i64) {
            if a < self.dim {
                ((centre[a] - k).max(0), (centre[a] + k).min(self.dims[a] as i64 - 1))
            } else {
                (0, 0)
            }
        };
        let (x0, x1) = span(0);
        let (y0, y1) = span(1);
        let (z0, z1) = span(2);
        for z in z0..=z1 {
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let c = [x, y, z];
                    let on_ring = (0..self.dim).any(|a| (c[a] - centre[a]).abs() == k);
                    if !on_ring {
                        continue;
                    }
                    for &i in &self.buckets[self.flat([x as usize, y as usize, z as usize])] {
                        f(i);
                    }
                }
            }
        }
    }
}
