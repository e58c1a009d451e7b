//! `h(ξ, t) = u(ξ)·e^{√λ t}`, harmonic on `M × ℝ`.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::{ChartId, CubeSpec};
use crate::quad::{cube_mass, QuadratureSpec};

use super::Eigenfunction;

#[derive(Debug, Clone, PartialEq)]
pub struct LiftedFunction {
    base: Eigenfunction,
    base_chart: ChartId,
    rate: f64,
}

pub fn lift(u: &Eigenfunction) -> Result<LiftedFunction> {
    lift_in(u, u.manifold().default_chart())
}

/// Lift over a specific chart of the base manifold.
pub fn lift_in(u: &Eigenfunction, chart: ChartId) -> Result<LiftedFunction> {
    if u.lambda() == 0 {
        return Err(Error::InvalidArgument("cannot lift an eigenfunction with λ = 0".into()));
    }
    if !u.chart_supported(chart) {
        return Err(Error::InvalidArgument(format!("{chart:?} is not a chart of {}", u.manifold())));
    }
    Ok(LiftedFunction { base: u.clone(), base_chart: chart, rate: u.frequency() })
}

impl LiftedFunction {
    pub fn base(&self) -> &Eigenfunction {
        &self.base
    }

    pub fn base_chart(&self) -> ChartId {
        self.base_chart
    }

    /// `√λ`.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// `∫_{c−a}^{c+a} e^{2√λ t} dt`.
    pub fn t_mass(&self, center: f64, half: f64) -> f64 {
        let s = self.rate;
        (2.0 * s * center).exp() * (2.0 * s * half).sinh() / s
    }

    /// The spatial factor `q` of a product cube `q × I`.
    pub fn spatial_cube(q: &CubeSpec) -> CubeSpec {
        let d = q.dim() - 1;
        CubeSpec { center: q.center[..d].to_vec(), half_side: q.half_side }
    }
}

impl Field for LiftedFunction {
    fn dim(&self) -> usize {
        self.base.dim() + 1
    }

    fn chart(&self) -> ChartId {
        self.base_chart.lifted().expect("base charts always lift")
    }

    fn value(&self, p: &[f64]) -> f64 {
        let d = self.base.dim();
        self.base.evaluate_in(self.base_chart, &p[..d]) * (self.rate * p[d]).exp()
    }

    fn square_frequency(&self) -> f64 {
        self.base.square_frequency_in(self.base_chart)
    }

    fn grid_values(&self, axes: &[&[f64]], out: &mut Vec<f64>) {
        let d = self.base.dim();
        let mut spatial = Vec::new();
        self.base.grid_values_in(self.base_chart, &axes[..d], &mut spatial);
        let ts: Vec<f64> = axes[d].iter().map(|t| (self.rate * t).exp()).collect();
        out.clear();
        out.reserve(spatial.len() * ts.len());
        for v in spatial {
            out.extend(ts.iter().map(|e| v * e));
        }
    }

    /// The mass over `q × I` factorizes into the spatial mass of `u` and an
    /// exact integral in `t`.
    fn closed_form_mass(&self, q: &CubeSpec, spec: &QuadratureSpec) -> Option<Result<f64>> {
        let d = self.base.dim();
        let view = self.base.in_chart(self.base_chart).ok()?;
        let spatial = Self::spatial_cube(q);
        Some(cube_mass(&view, &spatial, spec).map(|m| m * self.t_mass(q.center[d], q.half_side)))
    }
}
