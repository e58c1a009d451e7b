//! Nodal-set extraction and measurement, nodal density, and the local
//! inscribed-ball lower bound with its sign-ball construction.

pub mod density;
pub mod local;
pub mod squares;
pub mod tets;

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::eigen::{sphere, Eigenfunction};
use crate::error::{Error, Result};
use crate::geometry::{ChartId, ManifoldId};

pub use density::{density_radius, density_radius_with, DensityReport, SegmentIndex};
pub use local::{local_lower_bound_check, sign_ball_search, LocalParams, LowerBoundReport, SignBallReport};
use squares::{clip_to_box, clip_to_disk, seg_len, Grid2, GRID_OFFSET};
use tets::Grid3;

/// Second grid offset, independent of [`GRID_OFFSET`] over the rationals.
pub const GRID_OFFSET_2: f64 = 0.414_213_562_373_095_1;

/// Largest 3D grid per axis.
pub const MAX_RESOLUTION_3D: usize = 512;

/// Nominal half width of the chart box sampled on each sphere cap.
pub const CAP_GRID_HALF_WIDTH: f64 = 1.05;

/// The northern cap owns `|w| ≤ CAP_SPLIT_RADIUS`, the southern cap the
/// rest. The split circle sits just south of the equator so that no
/// latitude zero line of a low-degree harmonic lies on it.
pub const CAP_SPLIT_RADIUS: f64 = 1.0 + 0.1 * GRID_OFFSET;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NodalOptions {
    pub keep_elements: bool,
    pub bisection_iters: u32,
    pub enforce_resolution: bool,
}

impl Default for NodalOptions {
    fn default() -> Self {
        NodalOptions { keep_elements: false, bisection_iters: 15, enforce_resolution: true }
    }
}

/// Region of a 2D extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Region2 {
    /// The whole flat torus `[0, 2π)²`.
    Torus,
    /// The whole sphere, through both caps.
    Sphere,
    /// A box in one chart of the manifold.
    Box { lo: [f64; 2], hi: [f64; 2], chart: ChartId },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub chart: ChartId,
    /// Length in the manifold metric.
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalMeasure {
    pub dim: usize,
    /// Total length (2D) or area (3D) in the manifold metric.
    pub total_measure: f64,
    pub element_count: usize,
    pub resolution: usize,
    /// Present when elements were requested.
    pub segments: Vec<Segment>,
    pub triangles: Vec<[[f64; 3]; 3]>,
}

/// Metric length of a chart segment; Simpson's rule on the conformal factor.
pub(crate) fn metric_length(chart: ChartId, s: &[[f64; 2]; 2]) -> f64 {
    let len = seg_len(s);
    match chart {
        ChartId::NorthCap | ChartId::SouthCap => {
            let m = [0.5 * (s[0][0] + s[1][0]), 0.5 * (s[0][1] + s[1][1])];
            let f = (sphere::conformal_factor(&s[0])
                + 4.0 * sphere::conformal_factor(&m)
                + sphere::conformal_factor(&s[1]))
                / 6.0;
            f * len
        }
        _ => len,
    }
}

/// Cells per axis needed on a box of chart side `side` so that every cell
/// is at most `2π/(cells_per_2pi·√λ)` long in the manifold metric.
fn required_cells(lambda: u64, side: f64, max_scale: f64, cells_per_2pi: f64) -> usize {
    (cells_per_2pi * (lambda as f64).sqrt() * side * max_scale / (2.0 * PI)).ceil() as usize
}

fn chart_scale(chart: ChartId) -> f64 {
    match chart {
        ChartId::NorthCap | ChartId::SouthCap => 2.0,
        _ => 1.0,
    }
}

enum Clip {
    None,
    Disk(f64),
    Box([f64; 2], [f64; 2]),
}

struct Collector {
    keep: bool,
    total: f64,
    count: usize,
    segments: Vec<Segment>,
}

impl Collector {
    fn push(&mut self, chart: ChartId, s: [[f64; 2]; 2]) {
        let length = metric_length(chart, &s);
        self.total += length;
        self.count += 1;
        if self.keep {
            self.segments.push(Segment { a: s[0], b: s[1], chart, length });
        }
    }
}

/// Marching-squares extraction of `{u = 0}`; `resolution` is the number
/// of cells per axis of the sampling grid (per cap on the sphere).
pub fn extract_nodal_2d(
    u: &Eigenfunction,
    region: &Region2,
    resolution: usize,
    opts: &NodalOptions,
) -> Result<NodalMeasure> {
    if u.dim() != 2 {
        return Err(Error::InvalidArgument(format!("{} is not a surface", u.manifold())));
    }
    if resolution < 2 {
        return Err(Error::ResolutionTooLow { given: resolution, required: 2 });
    }
    let (required, grids): (usize, Vec<(ChartId, Grid2, Clip)>) = match region {
        Region2::Torus => {
            if u.manifold() != ManifoldId::Torus2 {
                return Err(Error::InvalidArgument("Region2::Torus needs a torus eigenfunction".into()));
            }
            let h = 2.0 * PI / resolution as f64;
            let g = Grid2 {
                origin: [GRID_OFFSET * h, GRID_OFFSET_2 * h],
                h: [h, h],
                cells: [resolution; 2],
                periodic: true,
            };
            (required_cells(u.lambda(), 2.0 * PI, 1.0, 16.0), vec![(ChartId::Torus(2), g, Clip::None)])
        }
        Region2::Sphere => {
            if u.manifold() != ManifoldId::Sphere2 {
                return Err(Error::InvalidArgument("Region2::Sphere needs a sphere eigenfunction".into()));
            }
            // two spare cells beyond the split circle on every side
            let w = CAP_SPLIT_RADIUS * resolution as f64 / (resolution as f64 - 4.0).max(1.0);
            let h = 2.0 * w / resolution as f64;
            let grid = |off: [f64; 2]| Grid2 {
                origin: [-w + off[0] * h, -w + off[1] * h],
                h: [h, h],
                cells: [resolution; 2],
                periodic: false,
            };
            (
                required_cells(u.lambda(), 2.0 * w, 2.0, 16.0),
                vec![
                    (ChartId::NorthCap, grid([GRID_OFFSET, GRID_OFFSET_2]), Clip::Disk(CAP_SPLIT_RADIUS)),
                    (ChartId::SouthCap, grid([GRID_OFFSET_2, GRID_OFFSET]), Clip::Disk(1.0 / CAP_SPLIT_RADIUS)),
                ],
            )
        }
        Region2::Box { lo, hi, chart } => {
            if !u.chart_supported(*chart) {
                return Err(Error::InvalidArgument(format!("{chart:?} is not a chart of {}", u.manifold())));
            }
            if !chart.contains_box(lo, hi) || hi[0] <= lo[0] || hi[1] <= lo[1] {
                return Err(Error::ChartEscape(format!("box {lo:?}..{hi:?} in {chart:?}")));
            }
            let side = (hi[0] - lo[0]).max(hi[1] - lo[1]);
            let h = side / resolution as f64;
            let off = [GRID_OFFSET * h, GRID_OFFSET_2 * h];
            // one extra cell, shifted by the offsets, then clipped back to the box
            let cells: [usize; 2] = std::array::from_fn(|a| ((hi[a] - lo[a]) / h).ceil().max(1.0) as usize + 1);
            let g = Grid2 { origin: [lo[0] - off[0], lo[1] - off[1]], h: [h, h], cells, periodic: false };
            let clip = Clip::Box(*lo, *hi);
            (required_cells(u.lambda(), side, chart_scale(*chart), 16.0), vec![(*chart, g, clip)])
        }
    };
    if opts.enforce_resolution && resolution < required {
        return Err(Error::ResolutionTooLow { given: resolution, required });
    }
    let mut col = Collector { keep: opts.keep_elements, total: 0.0, count: 0, segments: Vec::new() };
    for (chart, grid, clip) in grids {
        let view = u.in_chart(chart)?;
        for s in squares::march(&view, &grid, opts.bisection_iters) {
            let c = match clip {
                Clip::Disk(radius) => clip_to_disk(s[0], s[1], [0.0, 0.0], radius),
                Clip::Box(lo, hi) => clip_to_box(s[0], s[1], lo, hi),
                Clip::None => Some(s),
            };
            if let Some(c) = c {
                col.push(chart, c);
            }
        }
    }
    Ok(NodalMeasure {
        dim: 2,
        total_measure: col.total,
        element_count: col.count,
        resolution,
        segments: col.segments,
        triangles: Vec::new(),
    })
}

fn check_3d(u: &Eigenfunction, resolution: usize, required: usize, opts: &NodalOptions) -> Result<()> {
    if u.manifold() != ManifoldId::Torus3 {
        return Err(Error::InvalidArgument("3D extraction needs a Torus3 eigenfunction".into()));
    }
    if resolution > MAX_RESOLUTION_3D {
        return Err(Error::ResolutionTooHigh { given: resolution, limit: MAX_RESOLUTION_3D });
    }
    if resolution < 2 || (opts.enforce_resolution && resolution < required) {
        return Err(Error::ResolutionTooLow { given: resolution, required: required.max(2) });
    }
    Ok(())
}

/// Marching-tetrahedra extraction of `{u = 0}` on the whole of `T³`.
pub fn extract_nodal_3d(u: &Eigenfunction, resolution: usize, opts: &NodalOptions) -> Result<NodalMeasure> {
    check_3d(u, resolution, required_cells(u.lambda(), 2.0 * PI, 1.0, 8.0), opts)?;
    let h = 2.0 * PI / resolution as f64;
    let g = Grid3 {
        origin: [GRID_OFFSET * h, GRID_OFFSET_2 * h, 0.5 * GRID_OFFSET * h],
        h: [h; 3],
        cells: [resolution; 3],
        periodic: true,
    };
    Ok(from_tets(tets::march(u, &g, opts.keep_elements), resolution))
}

/// Extraction on an axis-aligned box of the torus chart.
pub fn extract_nodal_3d_box(
    u: &Eigenfunction,
    lo: [f64; 3],
    hi: [f64; 3],
    resolution: usize,
    opts: &NodalOptions,
) -> Result<NodalMeasure> {
    let side = (0..3).map(|a| hi[a] - lo[a]).fold(0.0, f64::max);
    if !(side > 0.0) || (0..3).any(|a| hi[a] <= lo[a]) {
        return Err(Error::InvalidArgument("empty box".into()));
    }
    check_3d(u, resolution, required_cells(u.lambda(), side, 1.0, 8.0), opts)?;
    let h = side / resolution as f64;
    let cells: [usize; 3] = std::array::from_fn(|a| ((hi[a] - lo[a]) / h).round().max(1.0) as usize);
    let g = Grid3 {
        origin: lo,
        h: std::array::from_fn(|a| (hi[a] - lo[a]) / cells[a] as f64),
        cells,
        periodic: false,
    };
    Ok(from_tets(tets::march(u, &g, opts.keep_elements), resolution))
}

fn from_tets(r: tets::TetResult, resolution: usize) -> NodalMeasure {
    NodalMeasure {
        dim: 3,
        total_measure: r.area,
        element_count: r.triangle_count,
        resolution,
        segments: Vec::new(),
        triangles: r.triangles,
    }
}

/// Smallest admissible 2D resolution on the whole torus or sphere.
pub fn min_resolution_2d(u: &Eigenfunction) -> usize {
    match u.manifold() {
        ManifoldId::Sphere2 => required_cells(u.lambda(), 2.0 * CAP_GRID_HALF_WIDTH, 2.0, 16.0),
        _ => required_cells(u.lambda(), 2.0 * PI, 1.0, 16.0),
    }
}

pub fn min_resolution_3d(u: &Eigenfunction) -> usize {
    required_cells(u.lambda(), 2.0 * PI, 1.0, 8.0)
}

impl NodalMeasure {
    /// One element per line: `x1 y1 x2 y2` for segments, nine coordinates
    /// for triangles, each right-aligned in 18 columns.
    pub fn write_text(&self, mut w: impl Write) -> Result<()> {
        for s in &self.segments {
            writeln!(w, "{:>18.12} {:>18.12} {:>18.12} {:>18.12}", s.a[0], s.a[1], s.b[0], s.b[1])?;
        }
        for t in &self.triangles {
            let v: Vec<String> = t.iter().flatten().map(|x| format!("{x:>18.12}")).collect();
            writeln!(w, "{}", v.join(" "))?;
        }
        Ok(())
    }

    /// Largest `|u|` at an element vertex, relative to `sup_bound`.
    pub fn max_vertex_residual(&self, u: &Eigenfunction) -> f64 {
        let s = u.sup_bound();
        let seg = self
            .segments
            .iter()
            .flat_map(|g| [u.evaluate_in(g.chart, &g.a), u.evaluate_in(g.chart, &g.b)])
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let tri = self
            .triangles
            .iter()
            .flatten()
            .fold(0.0f64, |m, p| m.max(u.evaluate(p).abs()));
        seg.max(tri) / s
    }
}
