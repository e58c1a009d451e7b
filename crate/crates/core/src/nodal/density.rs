//! Distance to the nodal set on the flat torus `T²`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::eigen::Eigenfunction;
use crate::error::{Error, Result};
use crate::geometry::{ManifoldId, QuasiSequence};

use super::{extract_nodal_2d, min_resolution_2d, NodalOptions, Region2};

/// Bucketed segments on the periodic square `[0, 2π)²`.
pub struct SegmentIndex {
    cell: f64,
    n: usize,
    buckets: Vec<Vec<u32>>,
    segments: Vec<[[f64; 2]; 2]>,
}

fn wrap(x: f64) -> f64 {
    x.rem_euclid(TAU)
}

fn wrap_delta(d: f64) -> f64 {
    d - TAU * (d / TAU).round()
}

fn point_segment(p: [f64; 2], s: &[[f64; 2]; 2]) -> f64 {
    // move the segment to the periodic image nearest to p
    let a = [p[0] + wrap_delta(s[0][0] - p[0]), p[1] + wrap_delta(s[0][1] - p[1])];
    let d = [s[1][0] - s[0][0], s[1][1] - s[0][1]];
    let m = [p[0] - a[0], p[1] - a[1]];
    let dd = d[0] * d[0] + d[1] * d[1];
    let t = if dd == 0.0 { 0.0 } else { ((m[0] * d[0] + m[1] * d[1]) / dd).clamp(0.0, 1.0) };
    (m[0] - t * d[0]).hypot(m[1] - t * d[1])
}

impl SegmentIndex {
    pub fn new(segments: Vec<[[f64; 2]; 2]>, buckets_per_axis: usize) -> Self {
        let n = buckets_per_axis.max(1);
        let cell = TAU / n as f64;
        let mut buckets = vec![Vec::new(); n * n];
        for (i, s) in segments.iter().enumerate() {
            let lo = [s[0][0].min(s[1][0]), s[0][1].min(s[1][1])];
            let hi = [s[0][0].max(s[1][0]), s[0][1].max(s[1][1])];
            let i0 = (lo[0] / cell).floor() as i64;
            let i1 = (hi[0] / cell).floor() as i64;
            let j0 = (lo[1] / cell).floor() as i64;
            let j1 = (hi[1] / cell).floor() as i64;
            for bi in i0..=i1 {
                for bj in j0..=j1 {
                    let (x, y) = (bi.rem_euclid(n as i64) as usize, bj.rem_euclid(n as i64) as usize);
                    buckets[x * n + y].push(i as u32);
                }
            }
        }
        SegmentIndex { cell, n, buckets, segments }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Periodic distance from `p` to the nearest segment.
    pub fn distance(&self, p: [f64; 2]) -> f64 {
        let p = [wrap(p[0]), wrap(p[1])];
        let ci = ((p[0] / self.cell).floor() as i64).min(self.n as i64 - 1);
        let cj = ((p[1] / self.cell).floor() as i64).min(self.n as i64 - 1);
        let mut best = f64::INFINITY;
        let n = self.n as i64;
        for ring in 0..=(n / 2 + 1) {
            for di in -ring..=ring {
                for dj in -ring..=ring {
                    if di.abs() != ring && dj.abs() != ring {
                        continue;
                    }
                    let b = ((ci + di).rem_euclid(n) * n + (cj + dj).rem_euclid(n)) as usize;
                    for &s in &self.buckets[b] {
                        best = best.min(point_segment(p, &self.segments[s as usize]));
                    }
                }
            }
            // every bucket outside the ring is at least `ring` cells away
            if best <= ring as f64 * self.cell {
                break;
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    /// Largest distance from a sampled point to the nodal set.
    pub radius: f64,
    /// `radius · √λ`.
    pub scaled: f64,
    pub farthest: [f64; 2],
    pub resolution: usize,
}

/// Largest distance from a point of `T²` to `{u = 0}`, estimated from
/// `samples` quasi-uniform points plus a local refinement of the best ones.
pub fn density_radius(u: &Eigenfunction, samples: usize, seed: u64) -> Result<f64> {
    density_radius_with(u, samples, seed, min_resolution_2d(u).max(256)).map(|r| r.radius)
}

pub fn density_radius_with(u: &Eigenfunction, samples: usize, seed: u64, resolution: usize) -> Result<DensityReport> {
    if u.manifold() != ManifoldId::Torus2 {
        return Err(Error::Unsupported("nodal density is implemented on Torus2".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let opts = NodalOptions { keep_elements: true, ..Default::default() };
    let m = extract_nodal_2d(u, &Region2::Torus, resolution, &opts)?;
    if m.segments.is_empty() {
        return Err(Error::EmptyNodalSet);
    }
    let segs: Vec<[[f64; 2]; 2]> = m.segments.iter().map(|s| [s.a, s.b]).collect();
    let per_axis = ((segs.len() as f64).sqrt().ceil() as usize).clamp(1, 1024);
    let index = SegmentIndex::new(segs, per_axis);
    let mut seq = QuasiSequence::new(2, seed);
    let mut scored: Vec<(f64, [f64; 2])> = (0..samples)
        .map(|_| {
            let s = seq.next_point();
            let p = [TAU * s[0], TAU * s[1]];
            (index.distance(p), p)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let step0 = TAU / (samples as f64).sqrt();
    let mut best = scored[0];
    for &(d0, p0) in scored.iter().take(8) {
        let (mut d, mut p) = (d0, p0);
        let mut step = step0;
        while step > 1e-10 {
            let mut improved = false;
            for dir in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
                let q = [p[0] + step * dir[0], p[1] + step * dir[1]];
                let dq = index.distance(q);
                if dq > d {
                    d = dq;
                    p = q;
                    improved = true;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if d > best.0 {
            best = (d, p);
        }
    }
    let radius = best.0;
    Ok(DensityReport {
        radius,
        scaled: radius * u.frequency(),
        farthest: [wrap(best.1[0]), wrap(best.1[1])],
        resolution,
    })
}
