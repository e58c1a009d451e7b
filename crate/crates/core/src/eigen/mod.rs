//! Exact eigenfunctions of the model manifolds and the harmonic lift to
//! `M × ℝ`.

pub mod lift;
pub mod sphere;
pub mod torus;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{separable_grid, Field, SeparableTerm};
use crate::geometry::{ChartId, CubeSpec, ManifoldId};
use crate::quad::QuadratureSpec;

pub use lift::{lift, lift_in, LiftedFunction};
pub use sphere::SphereMode;
pub use torus::TorusMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modes {
    Torus(Vec<TorusMode>),
    Sphere(Vec<SphereMode>),
}

/// `sin(k·x_a)` or `cos(k·x_a)` factor of a product eigenfunction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trig {
    Sin(i64),
    Cos(i64),
}

/// A Laplace eigenfunction with `Δu = −λu`, stored as a finite mode sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenfunction {
    manifold: ManifoldId,
    lambda: u64,
    modes: Modes,
}

pub fn is_eigenvalue(manifold: ManifoldId, lambda: u64) -> bool {
    match manifold {
        ManifoldId::Sphere2 => {
            let l = ((4.0 * lambda as f64 + 1.0).sqrt() - 1.0) / 2.0;
            let l = l.round() as u64;
            l * (l + 1) == lambda
        }
        m => !torus::lattice_points(m.dim(), lambda).is_empty(),
    }
}

/// All eigenvalues `≤ lambda_max` with the dimension of their real
/// eigenspace, ascending.
pub fn eigenvalue_list(manifold: ManifoldId, lambda_max: f64) -> Vec<(u64, usize)> {
    if lambda_max < 0.0 {
        return Vec::new();
    }
    let max = lambda_max.floor() as u64;
    match manifold {
        ManifoldId::Sphere2 => (0u64..)
            .map(|l| (l * (l + 1), 2 * l as usize + 1))
            .take_while(|(lam, _)| *lam <= max)
            .collect(),
        m => torus::lattice_counts(m.dim(), max)
            .into_iter()
            .enumerate()
            .filter(|(_, c)| *c > 0)
            .map(|(n, c)| (n as u64, c))
            .collect(),
    }
}

/// The eigenvalue closest to `target` (ties go to the smaller one).
pub fn nearest_eigenvalue(manifold: ManifoldId, target: f64) -> u64 {
    let t = target.max(0.0);
    let list = eigenvalue_list(manifold, 2.0 * t + 10.0);
    list.iter()
        .map(|&(l, _)| l)
        .min_by(|a, b| (*a as f64 - t).abs().total_cmp(&(*b as f64 - t).abs()).then(a.cmp(b)))
        .unwrap_or(0)
}

impl Eigenfunction {
    pub fn from_torus_modes(manifold: ManifoldId, modes: Vec<TorusMode>) -> Result<Self> {
        if !manifold.is_torus() {
            return Err(Error::InvalidArgument("torus modes on a sphere".into()));
        }
        let d = manifold.dim();
        let mut lambda = None;
        let mut merged: BTreeMap<Vec<i64>, (f64, f64)> = BTreeMap::new();
        for m in modes {
            if m.k.len() != d {
                return Err(Error::InvalidArgument(format!("mode {:?} has wrong dimension", m.k)));
            }
            let n = m.norm_sq() as u64;
            if *lambda.get_or_insert(n) != n {
                return Err(Error::InvalidArgument(format!(
                    "modes mix eigenvalues {} and {n}",
                    lambda.unwrap()
                )));
            }
            let (k, c, s) = if torus::is_representative(&m.k) {
                (m.k, m.cos_coef, m.sin_coef)
            } else {
                (m.k.iter().map(|x| -x).collect(), m.cos_coef, -m.sin_coef)
            };
            let e = merged.entry(k).or_insert((0.0, 0.0));
            e.0 += c;
            e.1 += s;
        }
        let modes: Vec<TorusMode> = merged
            .into_iter()
            .map(|(k, (c, s))| TorusMode { k, cos_coef: c, sin_coef: s })
            .filter(|m| m.cos_coef != 0.0 || m.sin_coef != 0.0)
            .collect();
        if modes.is_empty() {
            return Err(Error::InvalidArgument("eigenfunction has no nonzero coefficient".into()));
        }
        let lambda = lambda.unwrap();
        Ok(Eigenfunction { manifold, lambda, modes: Modes::Torus(modes) })
    }

    pub fn from_sphere_modes(modes: Vec<SphereMode>) -> Result<Self> {
        let mut l0 = None;
        for m in &modes {
            if m.m.unsigned_abs() > m.l {
                return Err(Error::InvalidArgument(format!("|m| > l in ({}, {})", m.l, m.m)));
            }
            if *l0.get_or_insert(m.l) != m.l {
                return Err(Error::InvalidArgument("modes mix spherical degrees".into()));
            }
        }
        let modes: Vec<SphereMode> = modes.into_iter().filter(|m| m.coef != 0.0).collect();
        if modes.is_empty() {
            return Err(Error::InvalidArgument("eigenfunction has no nonzero coefficient".into()));
        }
        let l = modes[0].l as u64;
        Ok(Eigenfunction { manifold: ManifoldId::Sphere2, lambda: l * (l + 1), modes: Modes::Sphere(modes) })
    }

    /// `Π_a trig_a(k_a x_a)` on the torus of dimension `factors.len()`.
    pub fn torus_product(factors: &[Trig]) -> Result<Self> {
        let manifold = match factors.len() {
            2 => ManifoldId::Torus2,
            3 => ManifoldId::Torus3,
            n => return Err(Error::InvalidArgument(format!("no torus of dimension {n}"))),
        };
        // expand into complex exponentials
        let mut terms: Vec<(Vec<i64>, Complex64)> = vec![(Vec::new(), Complex64::new(1.0, 0.0))];
        for f in factors {
            let parts: Vec<(i64, Complex64)> = match *f {
                Trig::Cos(0) => vec![(0, Complex64::new(1.0, 0.0))],
                Trig::Sin(0) => vec![],
                Trig::Cos(k) => vec![(k, Complex64::new(0.5, 0.0)), (-k, Complex64::new(0.5, 0.0))],
                Trig::Sin(k) => vec![(k, Complex64::new(0.0, -0.5)), (-k, Complex64::new(0.0, 0.5))],
            };
            terms = terms
                .iter()
                .flat_map(|(v, c)| {
                    parts.iter().map(move |(k, p)| {
                        let mut v = v.clone();
                        v.push(*k);
                        (v, c * p)
                    })
                })
                .collect();
        }
        let mut modes = Vec::new();
        for (k, alpha) in terms {
            if k.iter().all(|&x| x == 0) {
                modes.push(TorusMode { k, cos_coef: alpha.re, sin_coef: 0.0 });
            } else if torus::is_representative(&k) {
                modes.push(TorusMode { k, cos_coef: 2.0 * alpha.re, sin_coef: -2.0 * alpha.im });
            }
        }
        Self::from_torus_modes(manifold, modes)
    }

    pub fn spherical_harmonic(l: u32, m: i32) -> Result<Self> {
        Self::from_sphere_modes(vec![SphereMode { l, m, coef: 1.0 }])
    }

    /// `Y_{l,l}`, which vanishes to order `l` at both poles.
    pub fn sectoral(l: u32) -> Self {
        Self::spherical_harmonic(l, l as i32).expect("valid sectoral harmonic")
    }

    pub fn constant(manifold: ManifoldId, value: f64) -> Result<Self> {
        match manifold {
            ManifoldId::Sphere2 => {
                Self::from_sphere_modes(vec![SphereMode { l: 0, m: 0, coef: value * (4.0 * PI).sqrt() }])
            }
            m => Self::from_torus_modes(
                m,
                vec![TorusMode { k: vec![0; m.dim()], cos_coef: value, sin_coef: 0.0 }],
            ),
        }
    }

    /// Gaussian random element of the `λ`-eigenspace with unit `L²` norm.
    pub fn synth_random(manifold: ManifoldId, lambda: u64, seed: u64) -> Result<Self> {
        if !is_eigenvalue(manifold, lambda) {
            return Err(Error::NotAnEigenvalue { manifold, lambda });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
        let u = match manifold {
            ManifoldId::Sphere2 => {
                let l = ((4.0 * lambda as f64 + 1.0).sqrt() - 1.0).round() as u32 / 2;
                let modes = (-(l as i32)..=l as i32).map(|m| SphereMode { l, m, coef: normal() }).collect();
                Self::from_sphere_modes(modes)?
            }
            m => {
                let modes = torus::lattice_representatives(m.dim(), lambda)
                    .into_iter()
                    .map(|k| {
                        let zero = k.iter().all(|&x| x == 0);
                        let c = normal();
                        let s = if zero { 0.0 } else { normal() };
                        TorusMode { k, cos_coef: c, sin_coef: s }
                    })
                    .collect();
                Self::from_torus_modes(m, modes)?
            }
        };
        let n = u.l2_norm();
        Ok(u.scaled(1.0 / n))
    }

    pub fn manifold(&self) -> ManifoldId {
        self.manifold
    }

    pub fn lambda(&self) -> u64 {
        self.lambda
    }

    pub fn frequency(&self) -> f64 {
        (self.lambda as f64).sqrt()
    }

    pub fn modes(&self) -> &Modes {
        &self.modes
    }

    pub fn dim(&self) -> usize {
        self.manifold.dim()
    }

    pub fn scaled(&self, c: f64) -> Eigenfunction {
        let modes = match &self.modes {
            Modes::Torus(ms) => Modes::Torus(
                ms.iter()
                    .map(|m| TorusMode { k: m.k.clone(), cos_coef: c * m.cos_coef, sin_coef: c * m.sin_coef })
                    .collect(),
            ),
            Modes::Sphere(ms) => {
                Modes::Sphere(ms.iter().map(|m| SphereMode { coef: c * m.coef, ..m.clone() }).collect())
            }
        };
        Eigenfunction { modes, ..self.clone() }
    }

    /// `x ↦ u(x − shift)` on a torus.
    pub fn translated(&self, shift: &[f64]) -> Result<Eigenfunction> {
        let Modes::Torus(ms) = &self.modes else {
            return Err(Error::Unsupported("translations are defined on tori only".into()));
        };
        if shift.len() != self.dim() {
            return Err(Error::InvalidArgument("shift has wrong dimension".into()));
        }
        let modes = ms
            .iter()
            .map(|m| {
                let ph: f64 = m.k.iter().zip(shift).map(|(&k, s)| k as f64 * s).sum();
                let c = m.complex() * Complex64::from_polar(1.0, -ph);
                TorusMode { k: m.k.clone(), cos_coef: c.re, sin_coef: -c.im }
            })
            .collect();
        Ok(Eigenfunction { modes: Modes::Torus(modes), ..self.clone() })
    }

    pub fn l2_norm(&self) -> f64 {
        match &self.modes {
            Modes::Torus(ms) => {
                let vol = (2.0 * PI).powi(self.dim() as i32);
                ms.iter()
                    .map(|m| {
                        if m.k.iter().all(|&x| x == 0) {
                            vol * m.cos_coef * m.cos_coef
                        } else {
                            0.5 * vol * (m.cos_coef.powi(2) + m.sin_coef.powi(2))
                        }
                    })
                    .sum::<f64>()
                    .sqrt()
            }
            Modes::Sphere(ms) => ms.iter().map(|m| m.coef * m.coef).sum::<f64>().sqrt(),
        }
    }

    /// An upper bound for `‖u‖_∞` from the triangle inequality.
    pub fn sup_bound(&self) -> f64 {
        match &self.modes {
            Modes::Torus(ms) => ms.iter().map(|m| m.cos_coef.hypot(m.sin_coef)).sum(),
            Modes::Sphere(ms) => ms
                .iter()
                .map(|m| {
                    let az = if m.m == 0 { 1.0 } else { std::f64::consts::SQRT_2 };
                    m.coef.abs() * az * ((2 * m.l + 1) as f64 / (4.0 * PI)).sqrt()
                })
                .sum(),
        }
    }

    pub fn chart_supported(&self, chart: ChartId) -> bool {
        match self.manifold {
            ManifoldId::Sphere2 => matches!(chart, ChartId::NorthCap | ChartId::SouthCap),
            m => chart == ChartId::Torus(m.dim() as u8),
        }
    }

    /// Value at a point of the manifold's default chart (angles on tori,
    /// the north cap on the sphere).
    pub fn evaluate(&self, p: &[f64]) -> f64 {
        self.evaluate_in(self.manifold.default_chart(), p)
    }

    pub fn evaluate_in(&self, chart: ChartId, p: &[f64]) -> f64 {
        match &self.modes {
            Modes::Torus(ms) => ms
                .iter()
                .map(|m| {
                    let ph: f64 = m.k.iter().zip(p).map(|(&k, x)| k as f64 * x).sum();
                    let (s, c) = ph.sin_cos();
                    m.cos_coef * c + m.sin_coef * s
                })
                .sum(),
            Modes::Sphere(ms) => {
                let (t, ph) = sphere::chart_to_angles(chart, p);
                sphere::eval_modes(ms, t, ph, false).0
            }
        }
    }

    /// Value at spherical angles `(θ, φ)`.
    pub fn evaluate_angles(&self, theta: f64, phi: f64) -> Result<f64> {
        match &self.modes {
            Modes::Sphere(ms) => Ok(sphere::eval_modes(ms, theta, phi, false).0),
            Modes::Torus(_) => Err(Error::Unsupported("angles are for the sphere".into())),
        }
    }

    pub fn gradient(&self, p: &[f64]) -> Vec<f64> {
        self.gradient_in(self.manifold.default_chart(), p)
    }

    /// Gradient with respect to the chart coordinates.
    pub fn gradient_in(&self, chart: ChartId, p: &[f64]) -> Vec<f64> {
        match &self.modes {
            Modes::Torus(ms) => {
                let mut g = vec![0.0; p.len()];
                for m in ms {
                    let ph: f64 = m.k.iter().zip(p).map(|(&k, x)| k as f64 * x).sum();
                    let (s, c) = ph.sin_cos();
                    let w = -m.cos_coef * s + m.sin_coef * c;
                    for (gi, &k) in g.iter_mut().zip(&m.k) {
                        *gi += k as f64 * w;
                    }
                }
                g
            }
            Modes::Sphere(ms) => {
                let r = p[0].hypot(p[1]);
                if r < 1e-6 {
                    let h = 1e-6;
                    return (0..2)
                        .map(|a| {
                            let mut pp = [p[0], p[1]];
                            let mut pm = pp;
                            pp[a] += h;
                            pm[a] -= h;
                            (self.evaluate_in(chart, &pp) - self.evaluate_in(chart, &pm)) / (2.0 * h)
                        })
                        .collect();
                }
                let (t, ph) = sphere::chart_to_angles(chart, p);
                let (_, dt, dp) = sphere::eval_modes(ms, t, ph, true);
                let sign = if sphere::is_north(chart) { 1.0 } else { -1.0 };
                let dtdr = sign * 2.0 / (1.0 + r * r);
                let r2 = r * r;
                vec![
                    dt * dtdr * p[0] / r - dp * p[1] / r2,
                    dt * dtdr * p[1] / r + dp * p[0] / r2,
                ]
            }
        }
    }

    /// A view of `u` in another chart of the same manifold.
    pub fn in_chart(&self, chart: ChartId) -> Result<ChartView<'_>> {
        if !self.chart_supported(chart) {
            return Err(Error::InvalidArgument(format!("{chart:?} is not a chart of {}", self.manifold)));
        }
        Ok(ChartView { u: self, chart })
    }

    fn separable_terms(&self) -> Option<Vec<SeparableTerm>> {
        let Modes::Torus(ms) = &self.modes else { return None };
        Some(
            ms.iter()
                .map(|m| SeparableTerm {
                    coef: m.complex(),
                    freq: m.k.iter().map(|&k| k as f64).collect(),
                    rate: vec![0.0; m.k.len()],
                })
                .collect(),
        )
    }

    fn square_frequency_in(&self, chart: ChartId) -> f64 {
        let base = 2.0 * self.frequency();
        match chart {
            // the cap metric stretches chart lengths by at most 2
            ChartId::NorthCap | ChartId::SouthCap => 2.0 * base,
            _ => base,
        }
    }

    fn grid_values_in(&self, chart: ChartId, axes: &[&[f64]], out: &mut Vec<f64>) {
        if let Some(terms) = self.separable_terms() {
            separable_grid(&terms, axes, out);
            return;
        }
        out.clear();
        out.reserve(axes[0].len() * axes[1].len());
        for &x in axes[0] {
            for &y in axes[1] {
                out.push(self.evaluate_in(chart, &[x, y]));
            }
        }
    }

    fn closed_form_mass_in(&self, q: &CubeSpec) -> Option<Result<f64>> {
        let Modes::Torus(ms) = &self.modes else { return None };
        let (mass, scale) = torus::box_mass(ms, &q.lo(), &q.hi());
        // cancellation leaves ~1e-16·scale of noise; hand small masses to
        // quadrature instead
        (mass > 1e-6 * scale).then_some(Ok(mass))
    }
}

impl Field for Eigenfunction {
    fn dim(&self) -> usize {
        self.manifold.dim()
    }
    fn chart(&self) -> ChartId {
        self.manifold.default_chart()
    }
    fn value(&self, p: &[f64]) -> f64 {
        self.evaluate(p)
    }
    fn square_frequency(&self) -> f64 {
        self.square_frequency_in(self.chart())
    }
    fn grid_values(&self, axes: &[&[f64]], out: &mut Vec<f64>) {
        self.grid_values_in(self.chart(), axes, out)
    }
    fn closed_form_mass(&self, q: &CubeSpec, _spec: &QuadratureSpec) -> Option<Result<f64>> {
        self.closed_form_mass_in(q)
    }
}

/// An eigenfunction read through a particular chart.
#[derive(Debug, Clone, Copy)]
pub struct ChartView<'a> {
    pub u: &'a Eigenfunction,
    pub chart: ChartId,
}

impl Field for ChartView<'_> {
    fn dim(&self) -> usize {
        self.u.dim()
    }
    fn chart(&self) -> ChartId {
        self.chart
    }
    fn value(&self, p: &[f64]) -> f64 {
        self.u.evaluate_in(self.chart, p)
    }
    fn square_frequency(&self) -> f64 {
        self.u.square_frequency_in(self.chart)
    }
    fn grid_values(&self, axes: &[&[f64]], out: &mut Vec<f64>) {
        self.u.grid_values_in(self.chart, axes, out)
    }
    fn closed_form_mass(&self, q: &CubeSpec, _spec: &QuadratureSpec) -> Option<Result<f64>> {
        self.u.closed_form_mass_in(q)
    }
}
