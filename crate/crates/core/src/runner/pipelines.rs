//! The 2D upper-bound pipeline (lengths against `Ñ^{1/2}` on small squares)
//! and the 3D lower-bound pipeline (areas on wavelength cubes).

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::binomial_group_sizes;
use crate::doubling::{doubling_index, tilde_index};
use crate::eigen::Eigenfunction;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::{ChartId, CubeSpec, ManifoldId};
use crate::nodal::squares::{clip_to_box, seg_len};
use crate::nodal::{extract_nodal_2d, extract_nodal_3d, extract_nodal_3d_box, NodalOptions, Region2};

use super::config::ExperimentConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareRecord {
    pub cube: CubeSpec,
    pub length: f64,
    /// `Ñ(u, dilation·q)`.
    pub tilde: f64,
    /// `length / Ñ^{1/2}`, absent when the square has no zeros.
    pub constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pipeline2dReport {
    pub lambda: u64,
    /// Squares per axis, a power of `square_split`.
    pub per_axis: usize,
    /// Subdivision levels `j` with `Y = square_split²`.
    pub levels: u32,
    pub side: f64,
    pub squares: Vec<SquareRecord>,
    pub total_length: f64,
    /// Length of the whole square measured in one extraction.
    pub direct_length: f64,
    pub max_constant: f64,
    pub sum_sqrt_tilde: f64,
    /// `Ñ` of the dilated parent square.
    pub n0: f64,
    /// `N₀^{1/2}·(Y − 1 + 2^{−1/2})^j`.
    pub group_bound: f64,
    /// Squares per budget group `N₀/2^k`, `k = 0..=j`; squares over budget
    /// are not counted.
    pub groups: Vec<u64>,
    pub over_budget: u64,
    pub theoretical_groups: Vec<u64>,
}

/// Center of the square partitioned by the 2D pipeline and corner of the
/// 3D tiling; both avoid the rational multiples of `π` where product
/// eigenfunctions vanish.
pub const PIPELINE_ORIGIN: f64 = 3.0;

/// Partitions the square of half side `square_half_side` centered at
/// `(PIPELINE_ORIGIN, PIPELINE_ORIGIN)` into squares of side about `λ^{-1/4}` and compares the nodal
/// length on each with `Ñ(u, dilation·q)^{1/2}`.
pub fn pipeline_2d_upper(u: &Eigenfunction, cfg: &ExperimentConfig) -> Result<Pipeline2dReport> {
    if u.manifold() != ManifoldId::Torus2 {
        return Err(Error::Unsupported("the 2D pipeline runs on Torus2".into()));
    }
    let p = &cfg.pipeline;
    let split = p.square_split.max(2);
    let half = p.square_half_side;
    let lam = u.lambda() as f64;
    let target = (2.0 * half * lam.powf(0.25)).max(1.0);
    let levels = ((target.ln() / (split as f64).ln()).round() as u32).max(2);
    let per_axis = split.pow(levels);
    let side = 2.0 * half / per_axis as f64;
    let o = PIPELINE_ORIGIN;
    let lo = [o - half, o - half];
    let hi = [o + half, o + half];
    let min_res = (16.0 * lam.sqrt() * 2.0 * half / TAU).ceil() as usize;
    let res = cfg.resolution.resolve(min_res).max(4 * per_axis);
    let opts = NodalOptions { keep_elements: true, ..cfg.nodal };
    let m = extract_nodal_2d(u, &Region2::Box { lo, hi, chart: ChartId::Torus(2) }, res, &opts)?;
    let mut lengths = vec![0.0; per_axis * per_axis];
    let cell = |x: f64, a: usize| (((x - lo[a]) / side).floor() as i64).clamp(0, per_axis as i64 - 1) as usize;
    for s in &m.segments {
        let (i0, i1) = (cell(s.a[0].min(s.b[0]), 0), cell(s.a[0].max(s.b[0]), 0));
        let (j0, j1) = (cell(s.a[1].min(s.b[1]), 1), cell(s.a[1].max(s.b[1]), 1));
        for i in i0..=i1 {
            for j in j0..=j1 {
                let blo = [lo[0] + i as f64 * side, lo[1] + j as f64 * side];
                let bhi = [blo[0] + side, blo[1] + side];
                if let Some(c) = clip_to_box(s.a, s.b, blo, bhi) {
                    lengths[i * per_axis + j] += seg_len(&c);
                }
            }
        }
    }
    let parent = CubeSpec { center: vec![o, o], half_side: half };
    let squares = parent.subdivide(per_axis);
    let tildes: Vec<Result<f64>> = squares
        .par_iter()
        .map(|q| tilde_index(u, &q.dilate(p.square_dilation), &cfg.doubling).map(|t| t.value))
        .collect();
    let n0 = tilde_index(u, &parent.dilate(p.square_dilation), &cfg.doubling)?.value;
    let mut records = Vec::with_capacity(squares.len());
    for ((q, t), len) in squares.into_iter().zip(tildes).zip(lengths) {
        let tilde = t?;
        let constant = (len > 0.0).then(|| len / tilde.max(0.0).sqrt());
        records.push(SquareRecord { cube: q, length: len, tilde, constant });
    }
    let y = (split * split) as u64;
    let mut groups = vec![0u64; levels as usize + 1];
    let mut over = 0;
    for r in &records {
        let slack = cfg.doubling.tau * n0.abs().max(1.0);
        match (0..=levels).rev().find(|&k| r.tilde <= n0 / f64::powi(2.0, k as i32) + slack) {
            Some(k) => groups[k as usize] += 1,
            None => over += 1,
        }
    }
    let theoretical_groups = binomial_group_sizes(levels, y)
        .iter()
        .map(|b| u64::try_from(b).unwrap_or(u64::MAX))
        .collect();
    Ok(Pipeline2dReport {
        lambda: u.lambda(),
        per_axis,
        levels,
        side,
        total_length: records.iter().map(|r| r.length).sum(),
        direct_length: m.total_measure,
        max_constant: records.iter().filter_map(|r| r.constant).fold(0.0, f64::max),
        sum_sqrt_tilde: records.iter().map(|r| r.tilde.max(0.0).sqrt()).sum(),
        group_bound: n0.max(0.0).sqrt() * (y as f64 - 1.0 + 0.5f64.sqrt()).powi(levels as i32),
        n0,
        squares: records,
        groups,
        over_budget: over,
        theoretical_groups,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeRecord {
    pub cube: CubeSpec,
    pub index: Option<f64>,
    pub area: f64,
    /// A sign change was found in the concentric cube of one tenth the side.
    pub zero_inside: bool,
    pub good: bool,
    /// `area·λ·N`, the constant of `ℋ²({u=0} ∩ q) ≥ c/(λN)`.
    pub constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pipeline3dReport {
    pub lambda: u64,
    pub per_axis: usize,
    pub cells_per_cube: usize,
    pub threshold: f64,
    pub cubes: Vec<CubeRecord>,
    pub no_zero: usize,
    pub good: usize,
    /// Sum of areas over good cubes.
    pub good_area: f64,
    /// Sum of areas over all cubes.
    pub partition_area: f64,
    /// Area of one extraction over the whole torus at the same resolution.
    pub global_area: f64,
    /// `|partition − global| / global`.
    pub partition_mismatch: f64,
    pub min_constant: Option<f64>,
}

fn has_zero_inside(u: &Eigenfunction, q: &CubeSpec) -> bool {
    let a = q.half_side / 10.0;
    let axes: Vec<Vec<f64>> = q.center.iter().map(|&c| (0..5).map(|i| c - a + 0.5 * a * i as f64).collect()).collect();
    let refs: Vec<&[f64]> = axes.iter().map(|v| v.as_slice()).collect();
    let mut vals = Vec::new();
    u.grid_values(&refs, &mut vals);
    vals.iter().any(|&v| v > 0.0) && vals.iter().any(|&v| v <= 0.0)
}

/// Tiles `T³` by cubes of side about `cube_wavelengths·2π/√λ` and measures
/// the nodal area on each, keeping cubes whose doubling index is at most
/// `threshold`; `f64::INFINITY` keeps them all.
pub fn pipeline_3d_lower(u: &Eigenfunction, cfg: &ExperimentConfig, threshold: f64) -> Result<Pipeline3dReport> {
    if u.manifold() != ManifoldId::Torus3 {
        return Err(Error::Unsupported("the 3D pipeline runs on Torus3".into()));
    }
    let p = &cfg.pipeline;
    let lam = u.lambda() as f64;
    let per_axis = ((lam.sqrt() / p.cube_wavelengths).round() as usize).max(1);
    let side = TAU / per_axis as f64;
    let required = (8.0 * lam.sqrt() * side / TAU).ceil() as usize;
    let cells = p.cube_cells.max(required).max(2);
    let opts = NodalOptions { keep_elements: false, ..cfg.nodal };
    let torus = CubeSpec { center: vec![PIPELINE_ORIGIN + PI; 3], half_side: PI };
    let cubes = torus.subdivide(per_axis);
    let records: Vec<CubeRecord> = cubes
        .into_par_iter()
        .map(|q| {
            let lo = q.lo();
            let hi = q.hi();
            let area = extract_nodal_3d_box(u, [lo[0], lo[1], lo[2]], [hi[0], hi[1], hi[2]], cells, &opts)?.total_measure;
            let index = doubling_index(u, &q, &cfg.doubling).map(|r| r.index).ok();
            let zero_inside = has_zero_inside(u, &q);
            let good = threshold == f64::INFINITY || index.is_some_and(|n| n <= threshold);
            let constant = (good && zero_inside).then(|| area * lam * index.unwrap_or(f64::NAN).max(f64::MIN_POSITIVE));
            Ok(CubeRecord { cube: q, index, area, zero_inside, good, constant })
        })
        .collect::<Result<_>>()?;
    let res = per_axis * cells;
    let global_area = extract_nodal_3d(u, res, &NodalOptions { enforce_resolution: false, ..opts })?.total_measure;
    let partition_area: f64 = records.iter().map(|r| r.area).sum();
    let good_area = records.iter().filter(|r| r.good).map(|r| r.area).sum();
    let min_constant = records.iter().filter_map(|r| r.constant).filter(|c| c.is_finite()).reduce(f64::min);
    Ok(Pipeline3dReport {
        lambda: u.lambda(),
        per_axis,
        cells_per_cube: cells,
        threshold,
        no_zero: records.iter().filter(|r| !r.zero_inside).count(),
        good: records.iter().filter(|r| r.good).count(),
        good_area,
        partition_area,
        partition_mismatch: if global_area > 0.0 { (partition_area - global_area).abs() / global_area } else { 0.0 },
        global_area,
        min_constant,
        cubes: records,
    })
}

/// `threshold_scale·λ^{1/2−2δ}` with the cascade's `δ`.
pub fn good_threshold(cfg: &ExperimentConfig, lambda: u64) -> f64 {
    let s = cfg.pipeline.threshold_scale;
    if s.is_infinite() {
        return f64::INFINITY;
    }
    s * (lambda as f64).powf(0.5 - 2.0 * cfg.cascade.delta())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::Trig;

    #[test]
    fn product_squares_count_lines() {
        let u = Eigenfunction::torus_product(&[Trig::Sin(3), Trig::Sin(4)]).unwrap();
        let mut cfg = ExperimentConfig::default();
        cfg.resolution.fixed = 1024;
        let r = pipeline_2d_upper(&u, &cfg).unwrap();
        assert_eq!(r.squares.len(), r.per_axis * r.per_axis);
        assert!(r.per_axis >= 4);
        assert!((r.total_length - r.direct_length).abs() < 1e-9 * r.direct_length);
        for s in &r.squares {
            let lo = s.cube.lo();
            let hi = s.cube.hi();
            let lines = |k: f64, a: usize| {
                let step = PI / k;
                ((hi[a] / step).floor() - (lo[a] / step).ceil() + 1.0).max(0.0)
            };
            let exact = (lines(3.0, 0) + lines(4.0, 1)) * r.side;
            // saddle cells at line crossings cut a corner of a few cells
            assert!((s.length - exact).abs() < 0.01 * exact + 1e-12, "{} vs {exact}", s.length);
        }
        assert_eq!(r.theoretical_groups.iter().sum::<u64>(), (r.per_axis * r.per_axis) as u64);
    }

    #[test]
    fn constant_squares_are_empty() {
        let u = Eigenfunction::constant(ManifoldId::Torus2, 1.0).unwrap();
        let r = pipeline_2d_upper(&u, &ExperimentConfig::default()).unwrap();
        assert_eq!(r.total_length, 0.0);
        assert!(r.squares.iter().all(|s| s.constant.is_none()));
    }

    #[test]
    fn sheets_and_partition() {
        let u = Eigenfunction::torus_product(&[Trig::Sin(2), Trig::Cos(0), Trig::Cos(0)]).unwrap();
        let r = pipeline_3d_lower(&u, &ExperimentConfig::default(), f64::INFINITY).unwrap();
        let exact = 16.0 * PI * PI;
        assert!((r.partition_area - exact).abs() < 1e-6 * exact, "{}", r.partition_area);
        assert!(r.partition_mismatch < 0.03);
        // every cube holds a whole number of flat sheets
        for c in &r.cubes {
            let k = (c.area / c.cube.side().powi(2)).round();
            assert!((c.area - k * c.cube.side().powi(2)).abs() < 1e-9);
        }
    }
}
