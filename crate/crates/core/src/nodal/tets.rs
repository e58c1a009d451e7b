//! Marching tetrahedra over a streamed 3D grid. Each cell is split into the
//! six Kuhn tetrahedra along its main diagonal, which gives a conforming
//! triangulation without ambiguous cases.

use rayon::prelude::*;

use crate::field::Field;

#[derive(Debug, Clone, Copy)]
pub struct Grid3 {
    pub origin: [f64; 3],
    pub h: [f64; 3],
    pub cells: [usize; 3],
    pub periodic: bool,
}

impl Grid3 {
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

/// Corner paths `0 → e_a → e_a + e_b → 7` for the six axis orders.
const KUHN: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

type Tri = [[f64; 3]; 3];

fn lerp(p: &[f64; 3], vp: f64, q: &[f64; 3], vq: f64) -> [f64; 3] {
    let t = vp / (vp - vq);
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]), p[2] + t * (q[2] - p[2])]
}

pub fn tri_area(t: &Tri) -> f64 {
    let u = [t[1][0] - t[0][0], t[1][1] - t[0][1], t[1][2] - t[0][2]];
    let v = [t[2][0] - t[0][0], t[2][1] - t[0][1], t[2][2] - t[0][2]];
    let c = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
    0.5 * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
}

/// Triangles of `{f = 0}` inside one tetrahedron, appended to `out`.
fn tet_triangles(p: [&[f64; 3]; 4], v: [f64; 4], out: &mut Vec<Tri>) {
    let pos: Vec<usize> = (0..4).filter(|&i| v[i] > 0.0).collect();
    let neg: Vec<usize> = (0..4).filter(|&i| v[i] <= 0.0).collect();
    let e = |a: usize, b: usize| lerp(p[a], v[a], p[b], v[b]);
    match (pos.len(), neg.len()) {
        (1, 3) | (3, 1) => {
            let (lone, rest) = if pos.len() == 1 { (pos[0], &neg) } else { (neg[0], &pos) };
            out.push([e(lone, rest[0]), e(lone, rest[1]), e(lone, rest[2])]);
        }
        (2, 2) => {
            let (a, b, c, d) = (pos[0], pos[1], neg[0], neg[1]);
            let (ac, ad, bd, bc) = (e(a, c), e(a, d), e(b, d), e(b, c));
            out.push([ac, ad, bd]);
            out.push([ac, bd, bc]);
        }
        _ => {}
    }
}

#[derive(Debug, Clone, Default)]
pub struct TetResult {
    pub area: f64,
    pub triangles: Vec<Tri>,
    pub triangle_count: usize,
}

fn plane(f: &dyn Field, g: &Grid3, ys: &[f64], zs: &[f64], a: usize, buf: &mut Vec<f64>) {
    let x = [g.coord(0, a)];
    f.grid_values(&[&x, ys, zs], buf);
}

/// Streams the grid one slab at a time, so memory stays `O(ny·nz)`.
pub fn march(f: &dyn Field, g: &Grid3, keep: bool) -> TetResult {
    let ys: Vec<f64> = (0..g.vertices(1)).map(|j| g.coord(1, j)).collect();
    let zs: Vec<f64> = (0..g.vertices(2)).map(|k| g.coord(2, k)).collect();
    let (nyv, nzv) = (ys.len(), zs.len());
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut first = Vec::new();
    plane(f, g, &ys, &zs, 0, &mut lower);
    if g.periodic {
        first = lower.clone();
    }
    let mut result = TetResult::default();
    for a in 0..g.cells[0] {
        if g.periodic && a + 1 == g.cells[0] {
            upper.clone_from(&first);
        } else {
            plane(f, g, &ys, &zs, a + 1, &mut upper);
        }
        let x0 = g.coord(0, a);
        let x1 = g.coord(0, a + 1);
        let rows: Vec<(f64, usize, Vec<Tri>)> = (0..g.cells[1])
            .into_par_iter()
            .map(|b| {
                let mut tris = Vec::new();
                let mut area = 0.0;
                let mut count = 0;
                let (b0, b1) = (b % nyv, (b + 1) % nyv);
                let (y0, y1) = (g.coord(1, b), g.coord(1, b + 1));
                for c in 0..g.cells[2] {
                    let (c0, c1) = (c % nzv, (c + 1) % nzv);
                    // corner index = dx + 2·dy + 4·dz
                    let v = [
                        lower[b0 * nzv + c0],
                        upper[b0 * nzv + c0],
                        lower[b1 * nzv + c0],
                        upper[b1 * nzv + c0],
                        lower[b0 * nzv + c1],
                        upper[b0 * nzv + c1],
                        lower[b1 * nzv + c1],
                        upper[b1 * nzv + c1],
                    ];
                    let s0 = v[0] > 0.0;
                    if v.iter().all(|&x| (x > 0.0) == s0) {
                        continue;
                    }
                    let (z0, z1) = (g.coord(2, c), g.coord(2, c + 1));
                    let p: [[f64; 3]; 8] = std::array::from_fn(|i| {
                        [
                            if i & 1 == 0 { x0 } else { x1 },
                            if i & 2 == 0 { y0 } else { y1 },
                            if i & 4 == 0 { z0 } else { z1 },
                        ]
                    });
                    let start = tris.len();
                    for t in &KUHN {
                        tet_triangles(
                            [&p[t[0]], &p[t[1]], &p[t[2]], &p[t[3]]],
                            [v[t[0]], v[t[1]], v[t[2]], v[t[3]]],
                            &mut tris,
                        );
                    }
                    for tri in &tris[start..] {
                        area += tri_area(tri);
                    }
                    count += tris.len() - start;
                    if !keep {
                        tris.clear();
                    }
                }
                (area, count, tris)
            })
            .collect();
        for (area, count, tris) in rows {
            result.area += area;
            result.triangle_count += count;
            if keep {
                result.triangles.extend(tris);
            }
        }
        std::mem::swap(&mut lower, &mut upper);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::LinearField;

    #[test]
    fn plane_area_is_exact() {
        struct Shift;
        impl Field for Shift {
            fn dim(&self) -> usize {
                3
            }
            fn chart(&self) -> crate::geometry::ChartId {
                crate::geometry::ChartId::Euclidean(3)
            }
            fn value(&self, p: &[f64]) -> f64 {
                p[0] + 0.5 * p[1] - 0.6
            }
        }
        let g = Grid3 { origin: [0.0; 3], h: [0.1; 3], cells: [10; 3], periodic: false };
        let r = march(&Shift, &g, true);
        // tilted plane x = 0.6 − y/2 over y, z ∈ [0, 1]: area √(1.25)
        assert!((r.area - 1.25f64.sqrt()).abs() < 1e-12, "{}", r.area);
        assert_eq!(r.triangles.len(), r.triangle_count);
        let r = march(&LinearField { axis: 0, dim: 3 }, &Grid3 { origin: [-0.55, 0.0, 0.0], ..g }, false);
        assert!((r.area - 1.0).abs() < 1e-12);
    }
}
