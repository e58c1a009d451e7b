//! Integration of `|f|²` over cubes and sup-norm estimation over cubes,
//! balls and spheres.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::{dist, sphere_sample, BallSpec, CubeSpec, QuasiSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadKind {
    TensorGauss,
    MidpointComposite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    /// Minimum points per axis.
    pub order: usize,
    pub kind: QuadKind,
    /// Points per oscillation of `|f|²` demanded by the resolution rule.
    pub points_per_oscillation: f64,
    /// Allow exact or factorized masses (`Field::closed_form_mass`) in
    /// [`cube_mass`]. Plain [`integrate_sq`] never uses them.
    pub closed_form: bool,
    /// Guard on the total number of quadrature nodes per integral.
    pub max_points: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            order: 16,
            kind: QuadKind::TensorGauss,
            points_per_oscillation: 8.0,
            closed_form: true,
            max_points: 50_000_000,
        }
    }
}

impl QuadratureSpec {
    pub fn gauss(order: usize) -> Self {
        QuadratureSpec { order, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let min = match self.kind {
            QuadKind::TensorGauss => 2,
            QuadKind::MidpointComposite => 1,
        };
        if self.order < min {
            return Err(Error::InvalidArgument(format!(
                "quadrature order {} below minimum {min} for {:?}",
                self.order, self.kind
            )));
        }
        Ok(())
    }

    /// Points per axis for `f` on `q`: the configured order, raised so that
    /// every oscillation of `|f|²` gets `points_per_oscillation` nodes.
    pub fn points_for(&self, f: &dyn Field, q: &CubeSpec) -> usize {
        let periods = f.square_frequency() * q.side() / (2.0 * PI);
        self.order.max((self.points_per_oscillation * periods).ceil() as usize)
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

pub fn gauss_legendre(n: usize) -> Arc<GaussRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&n) {
        return r.clone();
    }
    let rule = Arc::new(compute_gauss_rule(n));
    cache.lock().unwrap().insert(n, rule.clone());
    rule
}

fn compute_gauss_rule(n: usize) -> GaussRule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    GaussRule { nodes, weights }
}

fn axis_rule(kind: QuadKind, n: usize, c: f64, a: f64) -> (Vec<f64>, Vec<f64>) {
    match kind {
        QuadKind::TensorGauss => {
            let r = gauss_legendre(n);
            (
                r.nodes.iter().map(|x| c + a * x).collect(),
                r.weights.iter().map(|w| a * w).collect(),
            )
        }
        QuadKind::MidpointComposite => {
            let h = 2.0 * a / n as f64;
            ((0..n).map(|i| c - a + (i as f64 + 0.5) * h).collect(), vec![h; n])
        }
    }
}

/// Tensor-product approximation of `∫_q |f|²` with `n` points per axis.
pub fn integrate_sq_with(f: &dyn Field, q: &CubeSpec, kind: QuadKind, n: usize) -> Result<f64> {
    let d = q.dim();
    let rules: Vec<(Vec<f64>, Vec<f64>)> =
        (0..d).map(|a| axis_rule(kind, n, q.center[a], q.half_side)).collect();
    let axes: Vec<&[f64]> = rules.iter().map(|r| r.0.as_slice()).collect();
    let mut vals = Vec::new();
    f.grid_values(&axes, &mut vals);
    let last = d - 1;
    let mut idx = vec![0usize; last];
    let mut total = 0.0;
    for (block, row) in vals.chunks(n).enumerate() {
        let mut row_sum = 0.0;
        for (i, v) in row.iter().enumerate() {
            if !v.is_finite() {
                let mut point: Vec<f64> = (0..last).map(|a| rules[a].0[idx[a]]).collect();
                point.push(rules[last].0[i]);
                return Err(Error::NonFinite { point, value: *v });
            }
            row_sum += rules[last].1[i] * v * v;
        }
        let w: f64 = (0..last).map(|a| rules[a].1[idx[a]]).product();
        total += w * row_sum;
        let _ = block;
        for a in (0..last).rev() {
            idx[a] += 1;
            if idx[a] < n {
                break;
            }
            idx[a] = 0;
        }
    }
    Ok(total)
}

fn check_domain(f: &dyn Field, q: &CubeSpec) -> Result<()> {
    if q.dim() != f.dim() {
        return Err(Error::InvalidArgument(format!(
            "cube dimension {} does not match field dimension {}",
            q.dim(),
            f.dim()
        )));
    }
    if !f.chart().contains_box(&q.lo(), &q.hi()) {
        return Err(Error::ChartEscape(format!(
            "cube at {:?} with half side {} leaves chart {:?}",
            q.center,
            q.half_side,
            f.chart()
        )));
    }
    Ok(())
}

fn points_checked(f: &dyn Field, q: &CubeSpec, spec: &QuadratureSpec) -> Result<usize> {
    spec.validate()?;
    let n = spec.points_for(f, q);
    let total = (n as f64).powi(q.dim() as i32);
    if total > spec.max_points as f64 {
        return Err(Error::Precondition(format!(
            "quadrature needs {n} points per axis in dimension {}, over the guard of {}",
            q.dim(),
            spec.max_points
        )));
    }
    Ok(n)
}

/// Quadrature approximation of `∫_q |f|²` at the resolution the spec demands.
pub fn integrate_sq(f: &dyn Field, q: &CubeSpec, spec: &QuadratureSpec) -> Result<f64> {
    check_domain(f, q)?;
    let n = points_checked(f, q, spec)?;
    integrate_sq_with(f, q, spec.kind, n)
}

/// Relative difference between the integral at the spec resolution and at
/// twice that resolution.
pub fn convergence_estimate(f: &dyn Field, q: &CubeSpec, spec: &QuadratureSpec) -> Result<f64> {
    check_domain(f, q)?;
    let n = points_checked(f, q, spec)?;
    let coarse = integrate_sq_with(f, q, spec.kind, n)?;
    let fine = integrate_sq_with(f, q, spec.kind, 2 * n)?;
    Ok(if fine == 0.0 { (coarse - fine).abs() } else { ((coarse - fine) / fine).abs() })
}

/// `∫_q |f|²` by the field's exact route when allowed and available,
/// otherwise by quadrature.
pub fn cube_mass(f: &dyn Field, q: &CubeSpec, spec: &QuadratureSpec) -> Result<f64> {
    check_domain(f, q)?;
    if spec.closed_form {
        if let Some(m) = f.closed_form_mass(q, spec) {
            return m;
        }
    }
    let n = points_checked(f, q, spec)?;
    integrate_sq_with(f, q, spec.kind, n)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Cube(CubeSpec),
    Ball(BallSpec),
}

impl Region {
    fn dim(&self) -> usize {
        match self {
            Region::Cube(c) => c.dim(),
            Region::Ball(b) => b.dim(),
        }
    }

    fn scale(&self) -> f64 {
        match self {
            Region::Cube(c) => c.half_side,
            Region::Ball(b) => b.radius,
        }
    }

    fn project(&self, p: &mut [f64]) {
        match self {
            Region::Cube(c) => {
                for (x, m) in p.iter_mut().zip(&c.center) {
                    *x = x.clamp(m - c.half_side, m + c.half_side);
                }
            }
            Region::Ball(b) => {
                let r = dist(p, &b.center);
                if r > b.radius {
                    let s = b.radius / r;
                    for (x, m) in p.iter_mut().zip(&b.center) {
                        *x = m + (*x - m) * s;
                    }
                }
            }
        }
    }
}

/// Which extreme to look for. `Max`/`Min` are the one-sided versions used
/// where only the sign-filtered maximum matters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    AbsMax,
    Max,
    Min,
}

impl Extremum {
    fn score(self, v: f64) -> f64 {
        match self {
            Extremum::AbsMax => v.abs(),
            Extremum::Max => v,
            Extremum::Min => -v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extremal {
    /// `sup |f|`, `sup f` or `inf f` depending on the [`Extremum`].
    pub value: f64,
    pub point: Vec<f64>,
}

fn eval_checked(f: &dyn Field, p: &[f64]) -> Result<f64> {
    let v = f.value(p);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { point: p.to_vec(), value: v })
    }
}

/// Compass search for a local maximum of `score(f)` from `start`, keeping
/// iterates feasible with `project`.
fn refine(
    f: &dyn Field,
    kind: Extremum,
    start: &[f64],
    start_score: f64,
    step0: f64,
    tol: f64,
    project: &dyn Fn(&mut [f64]),
) -> Result<(f64, Vec<f64>)> {
    let d = start.len();
    let mut best = start.to_vec();
    let mut best_score = start_score;
    let mut step = step0;
    let mut trial = vec![0.0; d];
    let mut iters = 0;
    while step > tol && iters < 400 {
        iters += 1;
        let mut improved = false;
        for a in 0..d {
            for sgn in [1.0, -1.0] {
                trial.copy_from_slice(&best);
                trial[a] += sgn * step;
                project(&mut trial);
                let s = kind.score(eval_checked(f, &trial)?);
                if s > best_score {
                    best_score = s;
                    best.copy_from_slice(&trial);
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((best_score, best))
}

fn pick_top(scored: &[(f64, Vec<f64>)], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[b].0.total_cmp(&scored[a].0).then(a.cmp(&b)));
    order.truncate(k);
    order
}

fn finish(kind: Extremum, score: f64, point: Vec<f64>) -> Extremal {
    let value = match kind {
        Extremum::Min => -score,
        _ => score,
    };
    Extremal { value, point }
}

/// Extremum of `f` over a closed cube or ball: a deterministic quasi-uniform
/// sample (plus boundary points for balls) followed by one local refinement
/// pass around the best candidates.
pub fn region_extremum(
    f: &dyn Field,
    region: &Region,
    kind: Extremum,
    samples: usize,
    seed: u64,
) -> Result<Extremal> {
    if samples < 8 {
        return Err(Error::InvalidArgument(format!("need at least 8 samples, got {samples}")));
    }
    let d = region.dim();
    if d != f.dim() {
        return Err(Error::InvalidArgument("region and field dimensions differ".into()));
    }
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(samples + samples / 4 + 1);
    match region {
        Region::Cube(c) => {
            if !f.chart().contains_box(&c.lo(), &c.hi()) {
                return Err(Error::ChartEscape(format!("cube at {:?} leaves chart", c.center)));
            }
            points.push(c.center.clone());
            let mut seq = QuasiSequence::new(d, seed);
            for _ in 0..samples {
                let u = seq.next_point();
                points.push(u.iter().zip(&c.center).map(|(s, m)| m + c.half_side * (2.0 * s - 1.0)).collect());
            }
        }
        Region::Ball(b) => {
            if !b.fits_chart() {
                return Err(Error::ChartEscape(format!("ball at {:?} leaves chart", b.center)));
            }
            points.push(b.center.clone());
            let mut seq = QuasiSequence::new(d, seed);
            let mut accepted = 0;
            while accepted < samples {
                let u = seq.next_point();
                let p: Vec<f64> = u.iter().zip(&b.center).map(|(s, m)| m + b.radius * (2.0 * s - 1.0)).collect();
                if dist(&p, &b.center) <= b.radius {
                    points.push(p);
                    accepted += 1;
                }
            }
            points.extend(sphere_sample(b, (samples / 4).max(8), seed)?);
        }
    }
    let mut scored = Vec::with_capacity(points.len());
    for p in points {
        let s = kind.score(eval_checked(f, &p)?);
        scored.push((s, p));
    }
    let spacing = region.scale() * 2.0 / (samples as f64).powf(1.0 / d as f64);
    let tol = region.scale() * 1e-10;
    let project = |p: &mut [f64]| region.project(p);
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for i in pick_top(&scored, 3) {
        let (s, p) = refine(f, kind, &scored[i].1, scored[i].0, spacing, tol, &project)?;
        if s > best.0 {
            best = (s, p);
        }
    }
    Ok(finish(kind, best.0, best.1))
}

/// `sup |f|` over a cube or ball.
pub fn sup_abs(f: &dyn Field, region: &Region, samples: usize, seed: u64) -> Result<f64> {
    region_extremum(f, region, Extremum::AbsMax, samples, seed).map(|e| e.value)
}

/// Extremum of `f` over the boundary sphere of `b`.
pub fn boundary_extremum(
    f: &dyn Field,
    b: &BallSpec,
    kind: Extremum,
    samples: usize,
    seed: u64,
) -> Result<Extremal> {
    if samples < 8 {
        return Err(Error::InvalidArgument(format!("need at least 8 samples, got {samples}")));
    }
    let pts = sphere_sample(b, samples, seed)?;
    let mut scored = Vec::with_capacity(pts.len());
    for p in pts {
        let s = kind.score(eval_checked(f, &p)?);
        scored.push((s, p));
    }
    let d = b.dim() as f64;
    let spacing = b.radius * 2.0 * PI / (samples as f64).powf(1.0 / (d - 1.0).max(1.0));
    let project = |p: &mut [f64]| {
        let r = dist(p, &b.center);
        if r > 0.0 {
            let s = b.radius / r;
            for (x, m) in p.iter_mut().zip(&b.center) {
                *x = m + (*x - m) * s;
            }
        }
    };
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for i in pick_top(&scored, 3) {
        let (s, p) = refine(f, kind, &scored[i].1, scored[i].0, spacing, b.radius * 1e-10, &project)?;
        if s > best.0 {
            best = (s, p);
        }
    }
    Ok(finish(kind, best.0, best.1))
}
