//! Marching squares over a rectangular grid, with bisection on
//! sign-changing edges and the center-value rule for saddle cells.

use rayon::prelude::*;

use crate::field::Field;

/// Irrational fraction of a cell by which grids are shifted, so that
/// rational nodal lines never run through grid vertices.
pub const GRID_OFFSET: f64 = 0.318_309_886_183_790_7;

/// A sampled grid: `nx × ny` cells starting at `origin` with spacing `h`.
/// Periodic grids reuse vertex `0` in place of vertex `n`.
#[derive(Debug, Clone, Copy)]
pub struct Grid2 {
    pub origin: [f64; 2],
    pub h: [f64; 2],
    pub cells: [usize; 2],
    pub periodic: bool,
}

impl Grid2 {
    fn vertices(&self, a: usize) -> usize {
        if self.periodic {
            self.cells[a]
        } else {
            self.cells[a] + 1
        }
    }

    fn coord(&self, a: usize, i: usize) -> f64 {
        self.origin[a] + i as f64 * self.h[a]
    }
}

/// Zero of `f` on the segment `pa → pb`, given values of opposite sign.
pub fn edge_zero(f: &dyn Field, pa: [f64; 2], va: f64, pb: [f64; 2], vb: f64, iters: u32) -> [f64; 2] {
    let (mut a, mut b) = (pa, pb);
    let (mut fa, mut fb) = (va, vb);
    let sa = fa > 0.0;
    for _ in 0..iters {
        let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        let fm = f.value(&m);
        if (fm > 0.0) == sa {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }
    let t = if fa == fb { 0.5 } else { fa / (fa - fb) };
    let t = t.clamp(0.0, 1.0);
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Segments of `{f = 0}` in grid row `j`, in cell order.
fn march_row(f: &dyn Field, g: &Grid2, vals: &[f64], j: usize, iters: u32) -> Vec<[[f64; 2]; 2]> {
    let ny = g.vertices(1);
    let nxv = g.vertices(0);
    let at = |i: usize, jj: usize| vals[(i % nxv) * ny + (jj % ny)];
    let mut out = Vec::new();
    for i in 0..g.cells[0] {
        let v = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
        let s = v.map(|x| x > 0.0);
        if s.iter().all(|&b| b == s[0]) {
            continue;
        }
        let p = [
            [g.coord(0, i), g.coord(1, j)],
            [g.coord(0, i + 1), g.coord(1, j)],
            [g.coord(0, i + 1), g.coord(1, j + 1)],
            [g.coord(0, i), g.coord(1, j + 1)],
        ];
        // edges: bottom 0-1, right 1-2, top 3-2, left 0-3 (lower vertex first)
        const EDGES: [(usize, usize); 4] = [(0, 1), (1, 2), (3, 2), (0, 3)];
        let mut z: [Option<[f64; 2]>; 4] = [None; 4];
        for (e, &(a, b)) in EDGES.iter().enumerate() {
            if s[a] != s[b] {
                z[e] = Some(edge_zero(f, p[a], v[a], p[b], v[b], iters));
            }
        }
        let crossings = z.iter().filter(|x| x.is_some()).count();
        if crossings == 2 {
            let mut it = z.iter().flatten();
            out.push([*it.next().unwrap(), *it.next().unwrap()]);
        } else if crossings == 4 {
            let c = [0.5 * (p[0][0] + p[2][0]), 0.5 * (p[0][1] + p[2][1])];
            let joined = (f.value(&c) > 0.0) == s[0];
            let [e0, e1, e2, e3] = z.map(|x| x.unwrap());
            if joined {
                // corners 0 and 2 connect through the center: cut off 1 and 3
                out.push([e0, e1]);
                out.push([e2, e3]);
            } else {
                out.push([e0, e3]);
                out.push([e1, e2]);
            }
        }
    }
    out
}

/// All segments of `{f = 0}` on the grid, row by row.
pub fn march(f: &dyn Field, g: &Grid2, iters: u32) -> Vec<[[f64; 2]; 2]> {
    let xs: Vec<f64> = (0..g.vertices(0)).map(|i| g.coord(0, i)).collect();
    let ys: Vec<f64> = (0..g.vertices(1)).map(|j| g.coord(1, j)).collect();
    let mut vals = Vec::new();
    f.grid_values(&[&xs, &ys], &mut vals);
    let rows: Vec<Vec<[[f64; 2]; 2]>> =
        (0..g.cells[1]).into_par_iter().map(|j| march_row(f, g, &vals, j, iters)).collect();
    rows.into_iter().flatten().collect()
}

/// The part of `a → b` inside the closed disk, if any.
pub fn clip_to_disk(a: [f64; 2], b: [f64; 2], center: [f64; 2], radius: f64) -> Option<[[f64; 2]; 2]> {
    let d = [b[0] - a[0], b[1] - a[1]];
    let m = [a[0] - center[0], a[1] - center[1]];
    let qa = d[0] * d[0] + d[1] * d[1];
    let qb = 2.0 * (m[0] * d[0] + m[1] * d[1]);
    let qc = m[0] * m[0] + m[1] * m[1] - radius * radius;
    if qa == 0.0 {
        return (qc <= 0.0).then_some([a, b]);
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t0 = ((-qb - sq) / (2.0 * qa)).max(0.0);
    let t1 = ((-qb + sq) / (2.0 * qa)).min(1.0);
    if t0 >= t1 {
        return None;
    }
    let at = |t: f64| [a[0] + t * d[0], a[1] + t * d[1]];
    Some([at(t0), at(t1)])
}

/// The part of `a → b` inside the axis-aligned box.
pub fn clip_to_box(a: [f64; 2], b: [f64; 2], lo: [f64; 2], hi: [f64; 2]) -> Option<[[f64; 2]; 2]> {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for k in 0..2 {
        let d = b[k] - a[k];
        if d == 0.0 {
            if a[k] < lo[k] || a[k] > hi[k] {
                return None;
            }
            continue;
        }
        let (mut s0, mut s1) = ((lo[k] - a[k]) / d, (hi[k] - a[k]) / d);
        if s0 > s1 {
            std::mem::swap(&mut s0, &mut s1);
        }
        t0 = t0.max(s0);
        t1 = t1.min(s1);
    }
    if t0 >= t1 {
        return None;
    }
    let at = |t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    Some([at(t0), at(t1)])
}

pub fn seg_len(s: &[[f64; 2]; 2]) -> f64 {
    (s[1][0] - s[0][0]).hypot(s[1][1] - s[0][1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipping() {
        let s = clip_to_disk([-2.0, 0.0], [2.0, 0.0], [0.0, 0.0], 1.0).unwrap();
        assert!((seg_len(&s) - 2.0).abs() < 1e-15);
        assert!(clip_to_disk([-2.0, 2.0], [2.0, 2.0], [0.0, 0.0], 1.0).is_none());
        let s = clip_to_box([0.5, 0.5], [3.0, 0.5], [0.0, 0.0], [1.0, 1.0]).unwrap();
        assert!((seg_len(&s) - 0.5).abs() < 1e-15);
        assert!(clip_to_box([2.0, 0.5], [3.0, 0.5], [0.0, 0.0], [1.0, 1.0]).is_none());
    }
}
