//! Doubling indices `N(h, q)` and `Ñ(h, q)`, the subdivision lemma and the
//! two cube properties of solutions (L∞ estimate, monotonicity).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::{BallSpec, CubeSpec};
use crate::quad::{convergence_estimate, cube_mass, sup_abs, QuadratureSpec, Region};

/// Masses below this are treated as a numerical failure.
pub const MASS_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DoublingParams {
    /// Odd dilation factor with `l > 2√d`.
    pub l: u32,
    pub quadrature: QuadratureSpec,
    /// Dyadic depth probed by [`tilde_index`].
    pub tilde_depth: u32,
    /// Dilation `A` of the monotonicity property.
    pub a_dilation: u32,
    pub c0: f64,
    pub c7: f64,
    /// Tolerance on lemma assertions, relative to the index scale.
    pub tau: f64,
    /// Also integrate at twice the resolution and report the relative change.
    pub check_convergence: bool,
}

impl Default for DoublingParams {
    fn default() -> Self {
        DoublingParams {
            l: 5,
            quadrature: QuadratureSpec::default(),
            tilde_depth: 3,
            a_dilation: 16,
            c0: calibration::C0,
            c7: calibration::C7,
            tau: 1e-3,
            check_convergence: false,
        }
    }
}

impl DoublingParams {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.l % 2 == 0 {
            return Err(Error::InvalidArgument(format!("l = {} must be odd", self.l)));
        }
        if (self.l as f64) <= 2.0 * (dim as f64).sqrt() {
            return Err(Error::InvalidArgument(format!(
                "l = {} must exceed 2√{dim} = {:.4}",
                self.l,
                2.0 * (dim as f64).sqrt()
            )));
        }
        if self.tilde_depth < 1 {
            return Err(Error::InvalidArgument("tilde depth must be at least 1".into()));
        }
        if self.a_dilation < 1 {
            return Err(Error::InvalidArgument("A must be at least 1".into()));
        }
        self.quadrature.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingRecord {
    pub cube: CubeSpec,
    pub index: f64,
    pub mass_inner: f64,
    pub mass_outer: f64,
    /// Relative change of both masses under resolution doubling, if checked.
    pub convergence: Option<f64>,
    pub converged: bool,
}

fn checked_mass(f: &dyn Field, q: &CubeSpec, spec: &QuadratureSpec) -> Result<f64> {
    let m = cube_mass(f, q, spec)?;
    if m < MASS_FLOOR {
        return Err(Error::MassUnderflow { center: q.center.clone(), mass: m });
    }
    Ok(m)
}

/// `N(f, q) = ½ log₂(∫_{lq}|f|² / ∫_q|f|²)`.
pub fn doubling_index(f: &dyn Field, q: &CubeSpec, params: &DoublingParams) -> Result<DoublingRecord> {
    params.validate(q.dim())?;
    let outer = q.dilate(params.l as f64);
    if !f.chart().contains_box(&outer.lo(), &outer.hi()) {
        return Err(Error::ChartEscape(format!(
            "{}-dilate of cube at {:?} (half side {}) leaves chart {:?}",
            params.l,
            q.center,
            q.half_side,
            f.chart()
        )));
    }
    let mass_inner = checked_mass(f, q, &params.quadrature)?;
    let mass_outer = checked_mass(f, &outer, &params.quadrature)?;
    let index = 0.5 * (mass_outer / mass_inner).log2();
    let convergence = if params.check_convergence {
        let spec = QuadratureSpec { closed_form: false, ..params.quadrature };
        Some(convergence_estimate(f, q, &spec)?.max(convergence_estimate(f, &outer, &spec)?))
    } else {
        None
    };
    let converged = convergence.is_none_or(|c| c < params.tau);
    Ok(DoublingRecord { cube: q.clone(), index, mass_inner, mass_outer, convergence, converged })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TildeIndex {
    pub value: f64,
    pub argmax: CubeSpec,
    pub probed: usize,
}

/// All dyadic subcubes of `q` down to `depth`, coarsest first.
pub fn dyadic_family(q: &CubeSpec, depth: u32) -> Vec<CubeSpec> {
    (0..=depth).flat_map(|k| q.subdivide(1 << k)).collect()
}

/// Max of `N` over `q` and its dyadic subcubes to `params.tilde_depth`.
pub fn tilde_index(f: &dyn Field, q: &CubeSpec, params: &DoublingParams) -> Result<TildeIndex> {
    params.validate(q.dim())?;
    let cubes = dyadic_family(q, params.tilde_depth);
    let values: Vec<Result<f64>> =
        cubes.par_iter().map(|c| doubling_index(f, c, params).map(|r| r.index)).collect();
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (i, v) in values.into_iter().enumerate() {
        let v = v?;
        if v > best.0 {
            best = (v, i);
        }
    }
    Ok(TildeIndex { value: best.0, argmax: cubes[best.1].clone(), probed: cubes.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubdivisionReport {
    pub k: u32,
    /// Minimum index over the subcubes `q_i` with `l·q_i ⊂ Q`.
    pub n0: f64,
    /// `2d·log₂ l`; below it the lemma claims nothing.
    pub threshold: f64,
    /// `N(f, Q/l)`.
    pub lhs: f64,
    /// `K·N₀`.
    pub literal_bound: f64,
    /// `K·(N₀ − (d/2)·log₂ l)`, the bound that follows from chaining every
    /// other subcube along a diagonal.
    pub provable_bound: f64,
    pub vacuous: bool,
    pub holds_literal: bool,
    pub holds_provable: bool,
    pub subcubes_used: usize,
}

/// Checks `N(f, Q/l) ≥ K·N₀` on the `(Kl)^d` partition of `Q`.
pub fn verify_subdivision_lemma(
    f: &dyn Field,
    big: &CubeSpec,
    k: u32,
    params: &DoublingParams,
) -> Result<SubdivisionReport> {
    if k < 1 {
        return Err(Error::InvalidArgument("K must be a positive integer".into()));
    }
    let d = big.dim();
    params.validate(d)?;
    let l = params.l as f64;
    let parts = big.subdivide((k * params.l) as usize);
    let inside: Vec<&CubeSpec> =
        parts.iter().filter(|q| big.contains_cube(&q.dilate(l))).collect();
    let indices: Vec<Result<f64>> =
        inside.par_iter().map(|q| doubling_index(f, q, params).map(|r| r.index)).collect();
    let mut n0 = f64::INFINITY;
    for v in indices {
        n0 = n0.min(v?);
    }
    let lhs = doubling_index(f, &big.dilate(1.0 / l), params)?.index;
    let threshold = 2.0 * d as f64 * l.log2();
    let kf = k as f64;
    let literal_bound = kf * n0;
    let provable_bound = kf * (n0 - 0.5 * d as f64 * l.log2());
    let slack = params.tau * literal_bound.abs().max(1.0);
    Ok(SubdivisionReport {
        k,
        n0,
        threshold,
        lhs,
        literal_bound,
        provable_bound,
        vacuous: n0 < threshold,
        holds_literal: lhs + slack >= literal_bound,
        holds_provable: lhs + slack >= provable_bound,
        subcubes_used: inside.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub n_small: f64,
    pub n_large: f64,
    /// `N(f,q₁) / max(N(f,q), 0.1)`.
    pub ratio: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `N(f, q₁) ≤ C₀·N(f, q)` whenever `A·q₁ ⊂ q`.
pub fn check_monotonicity(
    f: &dyn Field,
    q1: &CubeSpec,
    q: &CubeSpec,
    params: &DoublingParams,
) -> Result<MonotonicityReport> {
    if !q.contains_cube(&q1.dilate(params.a_dilation as f64)) {
        return Err(Error::Precondition(format!(
            "{}-dilate of the small cube is not contained in the large cube",
            params.a_dilation
        )));
    }
    let n_small = doubling_index(f, q1, params)?.index;
    let n_large = doubling_index(f, q, params)?.index;
    let ratio = n_small / n_large.max(0.1);
    Ok(MonotonicityReport { n_small, n_large, ratio, bound: params.c0, holds: ratio <= params.c0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinftyReport {
    /// `N(h, q)` for the cube inscribed in `B`.
    pub index: f64,
    pub sup_outer: f64,
    pub sup_inner: f64,
    /// `sup_{(4/3)B}|h| / (2^N · sup_B|h|)`.
    pub implied: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `sup_{(4/3)B}|h| ≤ C₇ 2^{N(h,q)} sup_B|h|` with `q` inscribed in `B`.
pub fn check_linfty_estimate(
    h: &dyn Field,
    b: &BallSpec,
    params: &DoublingParams,
    samples: usize,
    seed: u64,
) -> Result<LinftyReport> {
    if !b.scaled(2.0).fits_chart() {
        return Err(Error::ChartEscape(format!("2B at {:?} leaves the chart", b.center)));
    }
    let index = doubling_index(h, &b.inscribed_cube(), params)?.index;
    let sup_outer = sup_abs(h, &Region::Ball(b.scaled(4.0 / 3.0)), samples, seed)?;
    let sup_inner = sup_abs(h, &Region::Ball(b.clone()), samples, seed)?;
    if sup_inner == 0.0 {
        return Err(Error::Precondition("h vanishes on B".into()));
    }
    let implied = sup_outer / (index.exp2() * sup_inner);
    Ok(LinftyReport { index, sup_outer, sup_inner, implied, bound: params.c7, holds: implied <= params.c7 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ConstantField, ExpField, LinearField, ScaledField};

    fn params32() -> DoublingParams {
        DoublingParams { quadrature: QuadratureSpec::gauss(32), ..Default::default() }
    }

    #[test]
    fn constant_linear_exponential() {
        let p = params32();
        let q = CubeSpec::new(vec![0.0; 3], 0.2).unwrap();
        let n = doubling_index(&ConstantField { value: 2.0, dim: 3 }, &q, &p).unwrap().index;
        assert!((n - 1.5 * 5f64.log2()).abs() < 1e-12);
        let n = doubling_index(&LinearField { axis: 0, dim: 3 }, &q, &p).unwrap().index;
        assert!((n - 2.5 * 5f64.log2()).abs() < 1e-12);
        let exact = 0.5 * (25.0 * 5f64.sinh() / 1f64.sinh()).log2();
        for c in [[0.0, 0.0, 0.0], [1.3, -0.4, 2.0]] {
            let q = CubeSpec::new(c.to_vec(), 0.5).unwrap();
            let n = doubling_index(&ExpField { rate: 1.0, axis: 0, dim: 3 }, &q, &p).unwrap().index;
            assert!(((n - exact) / exact).abs() < 1e-10, "{n} {exact}");
        }
    }

    #[test]
    fn invalid_params() {
        let q = CubeSpec::unit(3);
        let f = ConstantField { value: 1.0, dim: 3 };
        let even = DoublingParams { l: 4, ..Default::default() };
        assert!(doubling_index(&f, &q, &even).is_err());
        let small = DoublingParams { l: 3, ..Default::default() };
        assert!(doubling_index(&f, &q, &small).is_err());
    }

    #[test]
    fn scalar_invariance() {
        let f = ExpField { rate: 2.0, axis: 1, dim: 2 };
        let g = ScaledField { factor: -7.5, inner: &f };
        let q = CubeSpec::new(vec![0.1, 0.2], 0.3).unwrap();
        let a = doubling_index(&f, &q, &params32()).unwrap().index;
        let b = doubling_index(&g, &q, &params32()).unwrap().index;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn tilde_of_constant_and_exponential() {
        let p = params32();
        let q = CubeSpec::new(vec![0.0; 2], 0.5).unwrap();
        let t = tilde_index(&ConstantField { value: 1.0, dim: 2 }, &q, &p).unwrap();
        assert!((t.value - 5f64.log2()).abs() < 1e-12);
        assert_eq!(t.probed, 1 + 4 + 16 + 64);
        // the exponential index grows with the cube, so the max is at depth 0
        let f = ExpField { rate: 3.0, axis: 0, dim: 2 };
        let t = tilde_index(&f, &q, &p).unwrap();
        let n = doubling_index(&f, &q, &p).unwrap().index;
        assert!((t.value - n).abs() < 1e-12);
    }

    #[test]
    fn subdivision_vacuous_for_constant() {
        let f = ConstantField { value: 1.0, dim: 3 };
        let r = verify_subdivision_lemma(&f, &CubeSpec::unit(3), 1, &params32()).unwrap();
        assert!(r.vacuous);
        assert!((r.threshold - 6.0 * 5f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn monotonicity_precondition() {
        let f = ConstantField { value: 1.0, dim: 2 };
        let q = CubeSpec::unit(2);
        let q1 = CubeSpec::new(vec![0.0, 0.0], 1.0 / 16.0).unwrap();
        let r = check_monotonicity(&f, &q1, &q, &params32()).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-12 && r.holds);
        let off = CubeSpec::new(vec![0.9, 0.0], 1.0 / 16.0).unwrap();
        assert!(matches!(check_monotonicity(&f, &off, &q, &params32()), Err(Error::Precondition(_))));
    }
}
