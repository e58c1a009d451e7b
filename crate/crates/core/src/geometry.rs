//! Charts, cubes, balls and subdivision combinatorics on the model manifolds.
//!
//! Tori use their global periodic chart, so every cube or ball "fits". The
//! round sphere is covered by two stereographic caps: the north cap projects
//! from the south pole (`w = tan(θ/2)·(cos φ, sin φ)`), the south cap from the
//! north pole. Each cap keeps `θ ≤ 2π/3` from its own pole, so the caps
//! overlap in a band around the equator. Products `M × ℝ` carry the extra
//! coordinate `t ∈ [-PRODUCT_HALF_HEIGHT, PRODUCT_HALF_HEIGHT]`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Chart radius of a stereographic cap, `tan(π/3)`.
pub const CAP_RADIUS: f64 = 1.732_050_807_568_877_2;

/// Half height of the compact product slab `M × [-1, 1]`.
pub const PRODUCT_HALF_HEIGHT: f64 = 1.0;

const CONTAINMENT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifoldId {
    Torus2,
    Sphere2,
    Torus3,
}

impl ManifoldId {
    pub fn dim(self) -> usize {
        match self {
            ManifoldId::Torus2 | ManifoldId::Sphere2 => 2,
            ManifoldId::Torus3 => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ManifoldId::Torus2 => "torus2",
            ManifoldId::Sphere2 => "sphere2",
            ManifoldId::Torus3 => "torus3",
        }
    }

    pub fn default_chart(self) -> ChartId {
        match self {
            ManifoldId::Torus2 => ChartId::Torus(2),
            ManifoldId::Torus3 => ChartId::Torus(3),
            ManifoldId::Sphere2 => ChartId::NorthCap,
        }
    }

    pub fn is_torus(self) -> bool {
        !matches!(self, ManifoldId::Sphere2)
    }
}

impl fmt::Display for ManifoldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ManifoldId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "torus2" | "t2" => Ok(ManifoldId::Torus2),
            "sphere2" | "s2" => Ok(ManifoldId::Sphere2),
            "torus3" | "t3" => Ok(ManifoldId::Torus3),
            other => Err(Error::InvalidArgument(format!("unknown manifold {other:?}"))),
        }
    }
}

/// Identifies the coordinate chart a point, cube or ball lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChartId {
    /// All of `ℝ^d`; used by closed-form test fields.
    Euclidean(u8),
    /// Periodic chart of the flat torus `[0, 2π)^d`, unbounded.
    Torus(u8),
    NorthCap,
    SouthCap,
    /// Torus chart times the product coordinate `t`.
    LiftedTorus(u8),
    LiftedNorthCap,
    LiftedSouthCap,
}

impl ChartId {
    pub fn dim(self) -> usize {
        match self {
            ChartId::Euclidean(d) | ChartId::Torus(d) => d as usize,
            ChartId::NorthCap | ChartId::SouthCap => 2,
            ChartId::LiftedTorus(d) => d as usize + 1,
            ChartId::LiftedNorthCap | ChartId::LiftedSouthCap => 3,
        }
    }

    /// The chart of `M × ℝ` over this chart of `M`.
    pub fn lifted(self) -> Option<ChartId> {
        match self {
            ChartId::Torus(d) => Some(ChartId::LiftedTorus(d)),
            ChartId::NorthCap => Some(ChartId::LiftedNorthCap),
            ChartId::SouthCap => Some(ChartId::LiftedSouthCap),
            _ => None,
        }
    }

    pub fn is_lifted(self) -> bool {
        matches!(
            self,
            ChartId::LiftedTorus(_) | ChartId::LiftedNorthCap | ChartId::LiftedSouthCap
        )
    }

    fn cap_part(self) -> bool {
        matches!(
            self,
            ChartId::NorthCap | ChartId::SouthCap | ChartId::LiftedNorthCap | ChartId::LiftedSouthCap
        )
    }

    /// Whether the axis-aligned box `[lo, hi]` lies inside the chart domain.
    pub fn contains_box(self, lo: &[f64], hi: &[f64]) -> bool {
        if lo.len() != self.dim() || hi.len() != self.dim() {
            return false;
        }
        if self.is_lifted() {
            let t = self.dim() - 1;
            let slack = CONTAINMENT_SLACK * PRODUCT_HALF_HEIGHT.max(1.0);
            if lo[t] < -PRODUCT_HALF_HEIGHT - slack || hi[t] > PRODUCT_HALF_HEIGHT + slack {
                return false;
            }
        }
        if self.cap_part() {
            // farthest corner of the planar part
            let fx = lo[0].abs().max(hi[0].abs());
            let fy = lo[1].abs().max(hi[1].abs());
            return (fx * fx + fy * fy).sqrt() <= CAP_RADIUS * (1.0 + CONTAINMENT_SLACK);
        }
        true
    }

    pub fn contains_point(self, p: &[f64]) -> bool {
        self.contains_box(p, p)
    }

    /// Ratio between the largest and smallest length scale factor of the
    /// chart metric over the chart domain. Flat charts are isometric.
    pub fn distortion_bound(self) -> f64 {
        if self.cap_part() {
            // conformal factor 2/(1+|w|²) ranges over [2/(1+R²), 2]
            1.0 + CAP_RADIUS * CAP_RADIUS
        } else {
            1.0
        }
    }
}

/// Axis-aligned cube in a chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeSpec {
    pub center: Vec<f64>,
    pub half_side: f64,
}

impl CubeSpec {
    pub fn new(center: Vec<f64>, half_side: f64) -> Result<Self> {
        if center.is_empty() || center.len() > 4 {
            return Err(Error::InvalidArgument(format!(
                "cube dimension {} not in 1..=4",
                center.len()
            )));
        }
        if !(half_side > 0.0) || !half_side.is_finite() {
            return Err(Error::InvalidArgument(format!("cube half side {half_side} must be positive")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("cube center must be finite".into()));
        }
        Ok(CubeSpec { center, half_side })
    }

    pub fn unit(dim: usize) -> Self {
        CubeSpec { center: vec![0.0; dim], half_side: 1.0 }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn side(&self) -> f64 {
        2.0 * self.half_side
    }

    pub fn volume(&self) -> f64 {
        self.side().powi(self.dim() as i32)
    }

    pub fn lo(&self) -> Vec<f64> {
        self.center.iter().map(|c| c - self.half_side).collect()
    }

    pub fn hi(&self) -> Vec<f64> {
        self.center.iter().map(|c| c + self.half_side).collect()
    }

    /// Homothety about the center with coefficient `s`.
    pub fn dilate(&self, s: f64) -> CubeSpec {
        assert!(s > 0.0, "dilation factor must be positive");
        CubeSpec { center: self.center.clone(), half_side: self.half_side * s }
    }

    /// Splits the cube into `m^dim` congruent subcubes, ordered
    /// lexicographically by grid index with the first axis slowest.
    pub fn subdivide(&self, m: usize) -> Vec<CubeSpec> {
        assert!(m >= 1, "subdivision count must be at least 1");
        let d = self.dim();
        let h = self.half_side / m as f64;
        let total = m.pow(d as u32);
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            let center = (0..d)
                .map(|a| self.center[a] - self.half_side + (2 * idx[a] + 1) as f64 * h)
                .collect();
            out.push(CubeSpec { center, half_side: h });
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < m {
                    break;
                }
                idx[a] = 0;
            }
        }
        out
    }

    pub fn contains_point(&self, p: &[f64]) -> bool {
        let slack = CONTAINMENT_SLACK * self.half_side.max(1.0);
        p.len() == self.dim()
            && p.iter()
                .zip(&self.center)
                .all(|(x, c)| (x - c).abs() <= self.half_side + slack)
    }

    pub fn contains_cube(&self, other: &CubeSpec) -> bool {
        let slack = CONTAINMENT_SLACK * self.half_side.max(1.0);
        other.dim() == self.dim()
            && other
                .center
                .iter()
                .zip(&self.center)
                .all(|(x, c)| (x - c).abs() + other.half_side <= self.half_side + slack)
    }

    /// The largest ball centered at the cube center that fits inside it.
    pub fn inscribed_ball(&self, chart: ChartId) -> BallSpec {
        BallSpec { center: self.center.clone(), radius: self.half_side, chart }
    }
}

/// A ball in a chart, with the Euclidean chart metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub center: Vec<f64>,
    pub radius: f64,
    pub chart: ChartId,
}

impl BallSpec {
    pub fn new(center: Vec<f64>, radius: f64, chart: ChartId) -> Result<Self> {
        if center.len() != chart.dim() {
            return Err(Error::InvalidArgument(format!(
                "ball center has {} coordinates, chart {:?} has dimension {}",
                center.len(),
                chart,
                chart.dim()
            )));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!("ball radius {radius} must be positive")));
        }
        Ok(BallSpec { center, radius, chart })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn scaled(&self, s: f64) -> BallSpec {
        BallSpec { center: self.center.clone(), radius: self.radius * s, chart: self.chart }
    }

    pub fn bounding_cube(&self) -> CubeSpec {
        CubeSpec { center: self.center.clone(), half_side: self.radius }
    }

    /// The cube inscribed in the ball (its corners lie on the sphere).
    pub fn inscribed_cube(&self) -> CubeSpec {
        CubeSpec {
            center: self.center.clone(),
            half_side: self.radius / (self.dim() as f64).sqrt(),
        }
    }

    pub fn fits_chart(&self) -> bool {
        let c = self.bounding_cube();
        if !self.chart.contains_box(&c.lo(), &c.hi()) {
            // the bounding box test is exact except on caps, where the disc
            // may fit even though its box does not
            if !matches!(
                self.chart,
                ChartId::NorthCap | ChartId::SouthCap | ChartId::LiftedNorthCap | ChartId::LiftedSouthCap
            ) {
                return false;
            }
            let planar = (self.center[0].powi(2) + self.center[1].powi(2)).sqrt() + self.radius;
            if planar > CAP_RADIUS {
                return false;
            }
            if self.chart.is_lifted() {
                let t = self.center[2].abs() + self.radius;
                return t <= PRODUCT_HALF_HEIGHT * (1.0 + CONTAINMENT_SLACK);
            }
        }
        true
    }

    pub fn contains_point(&self, p: &[f64]) -> bool {
        dist(p, &self.center) <= self.radius * (1.0 + CONTAINMENT_SLACK)
    }
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Seeded additive-recurrence (Kronecker) sequence in `[0,1)^d`.
///
/// Prefixes are nested: the first `n` points of a longer run are exactly the
/// points of a run of length `n` with the same seed.
#[derive(Debug, Clone)]
pub struct QuasiSequence {
    alpha: Vec<f64>,
    state: Vec<f64>,
}

impl QuasiSequence {
    pub fn new(dim: usize, seed: u64) -> Self {
        // generalized golden ratio: the positive root of x^(d+1) = x + 1
        let mut phi = 2.0f64;
        for _ in 0..64 {
            phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
        }
        let alpha = (1..=dim).map(|i| phi.powi(-(i as i32)).fract()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = (0..dim).map(|_| rng.random::<f64>()).collect();
        QuasiSequence { alpha, state }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        let out = self.state.clone();
        for (s, a) in self.state.iter_mut().zip(&self.alpha) {
            *s = (*s + a).fract();
        }
        out
    }
}

/// Deterministic quasi-uniform points on the boundary sphere of `b`.
pub fn sphere_sample(b: &BallSpec, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(Error::InvalidArgument("sphere_sample needs count >= 1".into()));
    }
    if !b.fits_chart() {
        return Err(Error::ChartEscape(format!(
            "ball of radius {} at {:?} leaves chart {:?}",
            b.radius, b.center, b.chart
        )));
    }
    let dirs = unit_sphere_points(b.dim(), count, seed);
    Ok(dirs
        .into_iter()
        .map(|u| u.iter().zip(&b.center).map(|(x, c)| c + b.radius * x).collect())
        .collect())
}

/// Quasi-uniform unit vectors in `ℝ^dim`.
pub fn unit_sphere_points(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5a3b_1e5a_u64);
    match dim {
        1 => (0..count).map(|k| vec![if k % 2 == 0 { 1.0 } else { -1.0 }]).collect(),
        2 => {
            let phase = rng.random::<f64>() * 2.0 * PI;
            (0..count)
                .map(|k| {
                    let a = phase + 2.0 * PI * k as f64 / count as f64;
                    vec![a.cos(), a.sin()]
                })
                .collect()
        }
        3 => {
            // Fibonacci lattice with a random azimuthal phase
            let golden = PI * (3.0 - 5f64.sqrt());
            let phase = rng.random::<f64>() * 2.0 * PI;
            (0..count)
                .map(|k| {
                    let z = 1.0 - (2 * k + 1) as f64 / count as f64;
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    let a = phase + golden * k as f64;
                    vec![rho * a.cos(), rho * a.sin(), z]
                })
                .collect()
        }
        _ => {
            // Hopf coordinates: sin²η uniform gives the uniform measure on S³
            let mut seq = QuasiSequence::new(3, rng.random());
            (0..count)
                .map(|_| {
                    let s = seq.next_point();
                    let eta = s[0].sqrt().asin();
                    let (a, b) = (2.0 * PI * s[1], 2.0 * PI * s[2]);
                    let mut v = vec![
                        eta.sin() * a.cos(),
                        eta.sin() * a.sin(),
                        eta.cos() * b.cos(),
                        eta.cos() * b.sin(),
                    ];
                    v.resize(dim, 0.0);
                    v
                })
                .collect()
        }
    }
}
