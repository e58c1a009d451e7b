//! Eigenvalue sweeps, exponent fits and the doubling-index sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::{run_cascade, CascadeReport};
use crate::doubling::tilde_index;
use crate::eigen::{lift, Eigenfunction, Trig};
use crate::error::{Error, Result};
use crate::geometry::{CubeSpec, ManifoldId};
use crate::nodal::{extract_nodal_2d, extract_nodal_3d, min_resolution_2d, min_resolution_3d, Region2};

use super::config::{Ensemble, ExperimentConfig};
use super::records::{Record, RecordStore};

pub const NODAL_MEASURE: &str = "nodal_measure";
pub const DF_TILDE_LIFT: &str = "df_tilde_lift";
pub const DF_TILDE_BASE: &str = "df_tilde_base";

/// Runs `f` on a pool of `jobs` threads (`0`: all cores).
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok(pool.install(f))
}

/// One sweep item: an eigenfunction labelled by `(λ, seed)`.
#[derive(Debug, Clone)]
pub struct Member {
    pub lambda: u64,
    pub seed: u64,
    pub label: String,
    pub u: Result<Eigenfunction>,
}

/// The ensemble of `cfg` at eigenvalue `lambda`.
pub fn ensemble(cfg: &ExperimentConfig, lambda: u64) -> Vec<Member> {
    match cfg.ensemble {
        Ensemble::Random => (0..cfg.ensemble_size as u64)
            .map(|i| {
                let seed = cfg.seed.wrapping_add(i);
                Member {
                    lambda,
                    seed,
                    label: "random".into(),
                    u: Eigenfunction::synth_random(cfg.manifold, lambda, seed),
                }
            })
            .collect(),
        Ensemble::Product => (1..)
            .take_while(|n| n * n < lambda as i64)
            .filter_map(|n| {
                let m2 = lambda as i64 - n * n;
                let m = (m2 as f64).sqrt().round() as i64;
                (m >= 1 && m * m == m2).then(|| Member {
                    lambda,
                    seed: n as u64,
                    label: format!("sin({n}x)sin({m}y)"),
                    u: Eigenfunction::torus_product(&[Trig::Sin(n), Trig::Sin(m)]),
                })
            })
            .collect(),
    }
}

/// Nodal length (2D) or area (3D) of `u` on the whole manifold.
pub fn measure_whole(u: &Eigenfunction, cfg: &ExperimentConfig) -> Result<(f64, usize, usize)> {
    let m = match u.manifold() {
        ManifoldId::Torus3 => {
            let res = cfg.resolution.resolve(min_resolution_3d(u));
            extract_nodal_3d(u, res, &cfg.nodal)?
        }
        ManifoldId::Torus2 => extract_nodal_2d(u, &Region2::Torus, cfg.resolution.resolve(min_resolution_2d(u)), &cfg.nodal)?,
        ManifoldId::Sphere2 => extract_nodal_2d(u, &Region2::Sphere, cfg.resolution.resolve(min_resolution_2d(u)), &cfg.nodal)?,
    };
    Ok((m.total_measure, m.element_count, m.resolution))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureRow {
    pub lambda: u64,
    pub seed: u64,
    pub measure: f64,
}

fn pending(store: &RecordStore, cfg: &ExperimentConfig, quantity: &str) -> Vec<Member> {
    cfg.eigenvalues()
        .into_iter()
        .flat_map(|l| ensemble(cfg, l))
        .filter(|m| !store.contains(&(cfg.manifold, m.lambda, m.seed, quantity.to_string())))
        .collect()
}

fn rows(store: &RecordStore, cfg: &ExperimentConfig, quantity: &str) -> Vec<MeasureRow> {
    let lambdas = cfg.eigenvalues();
    store
        .records()
        .filter(|r| r.manifold == cfg.manifold && r.quantity == quantity && lambdas.contains(&r.lambda))
        .filter_map(|r| r.value.map(|v| MeasureRow { lambda: r.lambda, seed: r.seed, measure: v }))
        .collect()
}

/// Measures every ensemble member of every eigenvalue of `cfg`, skipping
/// those already in `store`, then saves the store.
pub fn sweep_nodal_measure(cfg: &ExperimentConfig, store: &mut RecordStore) -> Result<Vec<MeasureRow>> {
    cfg.validate()?;
    let todo = pending(store, cfg, NODAL_MEASURE);
    let done: Vec<Record> = with_jobs(cfg.jobs, || {
        todo.into_par_iter()
            .map(|m| {
                let r = m.u.and_then(|u| measure_whole(&u, cfg));
                match r {
                    Ok((v, count, res)) => Record::new(cfg.manifold, m.lambda, m.seed, NODAL_MEASURE, v)
                        .with("elements", count)
                        .with("resolution", res)
                        .with("function", m.label),
                    Err(e) => Record::failed(cfg.manifold, m.lambda, m.seed, NODAL_MEASURE, &e),
                }
            })
            .collect()
    })?;
    for r in done {
        store.insert(r);
    }
    store.save()?;
    Ok(rows(store, cfg, NODAL_MEASURE))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Distinct eigenvalues fitted.
    pub point_count: usize,
    pub lambdas: Vec<f64>,
    pub medians: Vec<f64>,
    pub means: Vec<f64>,
}

/// Least squares of `ln(median measure)` against `ln λ`, one point per
/// distinct `λ`.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<ExponentFit> {
    let mut pts: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.0 > 0.0 && p.1 > 0.0).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut lambdas = Vec::new();
    let mut medians = Vec::new();
    let mut means = Vec::new();
    let mut i = 0;
    while i < pts.len() {
        let j = pts[i..].iter().position(|p| p.0 != pts[i].0).map_or(pts.len(), |k| i + k);
        let ys: Vec<f64> = pts[i..j].iter().map(|p| p.1).collect();
        lambdas.push(pts[i].0);
        medians.push(super::records::quantile(&ys, 0.5));
        means.push(ys.iter().sum::<f64>() / ys.len() as f64);
        i = j;
    }
    if lambdas.len() < 3 {
        return Err(Error::DegenerateFit(format!("{} distinct eigenvalues, need 3", lambdas.len())));
    }
    let x: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let y: Vec<f64> = medians.iter().map(|m| m.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
    Ok(ExponentFit { slope, intercept, r_squared, point_count: lambdas.len(), lambdas, medians, means })
}

/// Smallest `C` with `measure ≤ C·λ^exponent` on every point.
pub fn power_law_constant(points: &[(f64, f64)], exponent: f64) -> f64 {
    points.iter().map(|&(l, m)| m / l.powf(exponent)).fold(0.0, f64::max)
}

pub fn rows_to_points(rows: &[MeasureRow]) -> Vec<(f64, f64)> {
    rows.iter().map(|r| (r.lambda as f64, r.measure)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DfPoint {
    pub lambda: u64,
    pub seed: u64,
    /// Max `Ñ` of the lift over the partition of `Q̃`.
    pub tilde_lift: f64,
    /// Max `Ñ` of `u` over the spatial projections.
    pub tilde_base: f64,
}

/// The fixed product cube `Q̃ = q × [−a, a]` of the doubling sweep.
pub fn df_cube(cfg: &ExperimentConfig) -> CubeSpec {
    let d = cfg.manifold.dim();
    let mut center: Vec<f64> = (0..d).map(|a| 1.0 + 0.5 * a as f64).collect();
    center.push(0.0);
    CubeSpec { center, half_side: cfg.df.half_side }
}

/// The product cube the cascade starts from, centered like [`df_cube`].
pub fn cascade_cube(cfg: &ExperimentConfig) -> CubeSpec {
    CubeSpec { half_side: cfg.cascade_half_side, ..df_cube(cfg) }
}

/// Cascade of the lifted random eigenfunction `(λ, seed)` from [`cascade_cube`].
pub fn run_lifted_cascade(cfg: &ExperimentConfig, lambda: u64, seed: u64) -> Result<CascadeReport> {
    let u = Eigenfunction::synth_random(cfg.manifold, lambda, seed)?;
    let h = lift(&u)?;
    run_cascade(&h, &cascade_cube(cfg), &cfg.cascade)
}

fn df_point(u: &Eigenfunction, cfg: &ExperimentConfig) -> Result<(f64, f64)> {
    let h = lift(u)?;
    let q = df_cube(cfg);
    let mut lifted = f64::NEG_INFINITY;
    let mut base = f64::NEG_INFINITY;
    for c in q.subdivide(cfg.df.partition.max(1)) {
        lifted = lifted.max(tilde_index(&h, &c, &cfg.doubling)?.value);
        let s = crate::eigen::LiftedFunction::spatial_cube(&c);
        base = base.max(tilde_index(u, &s, &cfg.doubling)?.value);
    }
    Ok((lifted, base))
}

/// Max `Ñ` over a fixed partition of `Q̃ ⊂ M × ℝ`, for the lift and for `u`
/// alone, per ensemble member.
pub fn df_doubling_sweep(cfg: &ExperimentConfig, store: &mut RecordStore) -> Result<Vec<DfPoint>> {
    cfg.validate()?;
    if cfg.manifold == ManifoldId::Sphere2 {
        return Err(Error::Unsupported("the doubling sweep runs on tori".into()));
    }
    let todo = pending(store, cfg, DF_TILDE_LIFT);
    let done: Vec<Vec<Record>> = with_jobs(cfg.jobs, || {
        todo.into_par_iter()
            .map(|m| {
                let (l, s) = (m.lambda, m.seed);
                match m.u.and_then(|u| df_point(&u, cfg)) {
                    Ok((a, b)) => vec![
                        Record::new(cfg.manifold, l, s, DF_TILDE_LIFT, a)
                            .with("ratio", a / (l as f64).sqrt())
                            .with("half_side", cfg.df.half_side),
                        Record::new(cfg.manifold, l, s, DF_TILDE_BASE, b).with("ratio", b / (l as f64).sqrt()),
                    ],
                    Err(e) => vec![
                        Record::failed(cfg.manifold, l, s, DF_TILDE_LIFT, &e),
                        Record::failed(cfg.manifold, l, s, DF_TILDE_BASE, &e),
                    ],
                }
            })
            .collect()
    })?;
    for r in done.into_iter().flatten() {
        store.insert(r);
    }
    store.save()?;
    let lifts = rows(store, cfg, DF_TILDE_LIFT);
    let bases = rows(store, cfg, DF_TILDE_BASE);
    Ok(lifts
        .iter()
        .map(|a| DfPoint {
            lambda: a.lambda,
            seed: a.seed,
            tilde_lift: a.measure,
            tilde_base: bases
                .iter()
                .find(|b| b.lambda == a.lambda && b.seed == a.seed)
                .map_or(f64::NAN, |b| b.measure),
        })
        .collect())
}

/// `max/min` over eigenvalues of `max_seeds Ñ / √λ`.
pub fn df_ratio_spread(points: &[DfPoint], base: bool) -> (Vec<(u64, f64)>, f64) {
    let mut per: Vec<(u64, f64)> = Vec::new();
    for p in points {
        let v = if base { p.tilde_base } else { p.tilde_lift } / (p.lambda as f64).sqrt();
        match per.iter_mut().find(|e| e.0 == p.lambda) {
            Some(e) => e.1 = e.1.max(v),
            None => per.push((p.lambda, v)),
        }
    }
    per.sort_by_key(|e| e.0);
    let max = per.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
    let min = per.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
    (per, max / min)
}
