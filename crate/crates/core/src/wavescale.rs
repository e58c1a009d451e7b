//! Wavelength-scale estimates: the weak maximum principle, the gradient
//! bound, the one-sided sup bound and the Harnack corollary for the lift.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration;
use crate::eigen::{nearest_eigenvalue, Eigenfunction, LiftedFunction};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::{BallSpec, ChartId, ManifoldId};
use crate::quad::{boundary_extremum, region_extremum, Extremum, Region};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WavescaleParams {
    /// Balls must have radius at most `epsilon·λ^{-1/2}`.
    pub epsilon: f64,
    pub c1: f64,
    pub c2: f64,
    pub harnack_floor: f64,
    pub boundary_samples: usize,
    /// Interior samples for suprema over balls.
    pub samples: usize,
    /// Relative slack on every comparison.
    pub tau: f64,
    pub seed: u64,
}

impl Default for WavescaleParams {
    fn default() -> Self {
        WavescaleParams {
            epsilon: calibration::EPSILON_DEFAULT,
            c1: calibration::C1,
            c2: calibration::C2,
            harnack_floor: calibration::HARNACK_FLOOR,
            boundary_samples: 512,
            samples: 2048,
            tau: 1e-3,
            seed: 0,
        }
    }
}

impl WavescaleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= calibration::EPSILON_MAX) {
            return Err(Error::InvalidArgument(format!(
                "epsilon {} must lie in (0, {}]",
                self.epsilon,
                calibration::EPSILON_MAX
            )));
        }
        if self.boundary_samples < 8 || self.samples < 8 {
            return Err(Error::InvalidArgument("need at least 8 samples".into()));
        }
        Ok(())
    }
}

/// Both sides of an estimate and the constant it implies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub lhs: f64,
    pub rhs: f64,
    /// The smallest constant for which the estimate holds on this ball.
    pub constant: f64,
    pub holds: bool,
}

fn check_ball(u: &Eigenfunction, b: &BallSpec, p: &WavescaleParams) -> Result<()> {
    p.validate()?;
    if b.dim() != u.dim() || !u.chart_supported(b.chart) {
        return Err(Error::InvalidArgument(format!("ball in {:?} does not fit {}", b.chart, u.manifold())));
    }
    if u.lambda() > 0 {
        let limit = p.epsilon / u.frequency();
        if b.radius > limit * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!("radius {} exceeds ε/√λ = {limit}", b.radius)));
        }
    }
    if !b.fits_chart() {
        return Err(Error::ChartEscape(format!("ball at {:?}", b.center)));
    }
    Ok(())
}

/// `sup_B|u| ≤ 2·max_{∂B}|u|`; the constant is `sup_B|u| / max_{∂B}|u|`.
pub fn check_weak_max(u: &Eigenfunction, b: &BallSpec, p: &WavescaleParams) -> Result<EstimateReport> {
    check_ball(u, b, p)?;
    let view = u.in_chart(b.chart)?;
    let lhs = region_extremum(&view, &Region::Ball(b.clone()), Extremum::AbsMax, p.samples, p.seed)?.value;
    let edge = boundary_extremum(&view, b, Extremum::AbsMax, p.boundary_samples, p.seed)?.value;
    let rhs = 2.0 * edge;
    Ok(EstimateReport { lhs, rhs, constant: lhs / edge, holds: lhs <= rhs * (1.0 + p.tau) })
}

struct GradNorm<'a> {
    u: &'a Eigenfunction,
    chart: ChartId,
}

impl Field for GradNorm<'_> {
    fn dim(&self) -> usize {
        self.u.dim()
    }
    fn chart(&self) -> ChartId {
        self.chart
    }
    fn value(&self, p: &[f64]) -> f64 {
        self.u.gradient_in(self.chart, p).iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// `sup_{B_{r/2}}|∇u| ≤ C₁·max_{∂B_r}|u| / r`, with the chart gradient.
pub fn check_gradient_bound(u: &Eigenfunction, b: &BallSpec, p: &WavescaleParams) -> Result<EstimateReport> {
    check_ball(u, b, p)?;
    let view = u.in_chart(b.chart)?;
    let g = GradNorm { u, chart: b.chart };
    let lhs = region_extremum(&g, &Region::Ball(b.scaled(0.5)), Extremum::Max, p.samples, p.seed)?.value;
    let edge = boundary_extremum(&view, b, Extremum::AbsMax, p.boundary_samples, p.seed)?.value;
    let base = edge / b.radius;
    let constant = if lhs == 0.0 { 0.0 } else { lhs / base };
    Ok(EstimateReport { lhs, rhs: p.c1 * base, constant, holds: constant <= p.c1 * (1.0 + p.tau) })
}

/// `sup_{B_{2r/3}}|u| ≤ C₂·A` with `A = max_{∂B_r} u`, for `u(center) ≥ 0`.
pub fn check_sided_sup(u: &Eigenfunction, b: &BallSpec, p: &WavescaleParams) -> Result<EstimateReport> {
    check_ball(u, b, p)?;
    let c = u.evaluate_in(b.chart, &b.center);
    if c < 0.0 {
        return Err(Error::Precondition(format!("u(center) = {c:e} < 0")));
    }
    let view = u.in_chart(b.chart)?;
    let a = boundary_extremum(&view, b, Extremum::Max, p.boundary_samples, p.seed)?.value;
    if !(a > 0.0) {
        return Err(Error::Precondition(format!("max of u on the sphere is {a:e}")));
    }
    let lhs = region_extremum(&view, &Region::Ball(b.scaled(2.0 / 3.0)), Extremum::AbsMax, p.samples, p.seed)?.value;
    let constant = lhs / a;
    Ok(EstimateReport { lhs, rhs: p.c2 * a, constant, holds: constant <= p.c2 * (1.0 + p.tau) })
}

/// `sup_B h ≥ c·sup_{(2/3)B}|h|` for `h(center) ≥ 0`; the constant is
/// `sup_B h / sup_{(2/3)B}|h|`.
pub fn check_harnack_corollary(h: &LiftedFunction, b: &BallSpec, p: &WavescaleParams) -> Result<EstimateReport> {
    p.validate()?;
    if b.chart != h.chart() {
        return Err(Error::InvalidArgument(format!("ball in {:?}, lift lives in {:?}", b.chart, h.chart())));
    }
    if !b.fits_chart() {
        return Err(Error::ChartEscape(format!("ball at {:?}", b.center)));
    }
    let c = h.value(&b.center);
    if c < 0.0 {
        return Err(Error::Precondition(format!("h(center) = {c:e} < 0")));
    }
    let lhs = region_extremum(h, &Region::Ball(b.clone()), Extremum::Max, p.samples, p.seed)?.value;
    let inner = region_extremum(h, &Region::Ball(b.scaled(2.0 / 3.0)), Extremum::AbsMax, p.samples, p.seed)?.value;
    let constant = if inner == 0.0 { 1.0 } else { lhs / inner };
    Ok(EstimateReport {
        lhs,
        rhs: p.harnack_floor * inner,
        constant,
        holds: constant >= p.harnack_floor * (1.0 - p.tau),
    })
}

/// A ball with a uniform center and radius `s·ε/√λ`, `s ∈ [0.05, 1]`.
pub fn random_ball(u: &Eigenfunction, epsilon: f64, rng: &mut impl Rng) -> BallSpec {
    let r = rng.random_range(0.05..=1.0) * epsilon / u.frequency().max(1.0);
    let (center, chart) = match u.manifold() {
        ManifoldId::Sphere2 => {
            // uniform on the northern hemisphere of the cap chart
            let (a, rho) = (rng.random_range(0.0..std::f64::consts::TAU), rng.random::<f64>().sqrt());
            (vec![rho * a.cos(), rho * a.sin()], ChartId::NorthCap)
        }
        m => ((0..m.dim()).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect(), m.default_chart()),
    };
    BallSpec { center, radius: r, chart }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakMaxSweep {
    pub epsilon: f64,
    pub balls: usize,
    pub violations: usize,
    /// Largest `sup_B|u| / max_{∂B}|u|` seen.
    pub max_constant: f64,
}

/// Eigenvalues nearest to `count` geometrically spaced targets in `[lo, hi]`.
pub fn geometric_eigenvalues(manifold: ManifoldId, lo: f64, hi: f64, count: usize) -> Vec<u64> {
    let mut out: Vec<u64> = (0..count)
        .map(|i| {
            let t = if count == 1 { 0.0 } else { i as f64 / (count - 1) as f64 };
            nearest_eigenvalue(manifold, lo * (hi / lo).powf(t))
        })
        .collect();
    out.dedup();
    out
}

/// Weak maximum principle on `balls` random balls spread evenly over the
/// eigenvalues, one random eigenfunction per eigenvalue.
pub fn weak_max_sweep(
    manifold: ManifoldId,
    lambdas: &[u64],
    balls: usize,
    p: &WavescaleParams,
) -> Result<WeakMaxSweep> {
    if lambdas.is_empty() {
        return Err(Error::InvalidArgument("no eigenvalues".into()));
    }
    let fns: Vec<Eigenfunction> = lambdas
        .iter()
        .enumerate()
        .map(|(i, &l)| Eigenfunction::synth_random(manifold, l, p.seed.wrapping_add(i as u64)))
        .collect::<Result<_>>()?;
    let reports: Vec<EstimateReport> = (0..balls)
        .into_par_iter()
        .map(|i| {
            let u = &fns[i % fns.len()];
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let b = random_ball(u, p.epsilon, &mut rng);
            check_weak_max(u, &b, &WavescaleParams { seed: p.seed.wrapping_add(i as u64), ..*p })
        })
        .collect::<Result<_>>()?;
    Ok(WeakMaxSweep {
        epsilon: p.epsilon,
        balls,
        violations: reports.iter().filter(|r| !r.holds).count(),
        max_constant: reports.iter().map(|r| r.constant).fold(0.0, f64::max),
    })
}

/// Largest `ε ≤ hi` (to `iters` bisection steps) for which the sweep has no
/// violations. Returns `0` if even the smallest tested `ε` fails.
pub fn calibrate_epsilon(
    manifold: ManifoldId,
    lambdas: &[u64],
    balls: usize,
    hi: f64,
    iters: u32,
    p: &WavescaleParams,
) -> Result<f64> {
    let clean = |eps: f64| -> Result<bool> {
        Ok(weak_max_sweep(manifold, lambdas, balls, &WavescaleParams { epsilon: eps, ..*p })?.violations == 0)
    };
    if clean(hi)? {
        return Ok(hi);
    }
    let (mut lo, mut up) = (0.0, hi);
    for _ in 0..iters {
        let mid = 0.5 * (lo + up);
        if clean(mid)? {
            lo = mid;
        } else {
            up = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{lift, Trig};

    fn ball(c: &[f64], r: f64) -> BallSpec {
        BallSpec::new(c.to_vec(), r, ChartId::Torus(2)).unwrap()
    }

    #[test]
    fn weak_max_examples() {
        let p = WavescaleParams::default();
        let u = Eigenfunction::torus_product(&[Trig::Sin(1), Trig::Cos(0)]).unwrap();
        let r = check_weak_max(&u, &ball(&[0.0, 0.0], 0.05), &p).unwrap();
        assert!((r.constant - 1.0).abs() < 1e-9 && r.holds);
        assert!((r.lhs / r.rhs - 0.5).abs() < 1e-9);
        let n = 7;
        let u = Eigenfunction::torus_product(&[Trig::Sin(n), Trig::Cos(0)]).unwrap();
        let peak = std::f64::consts::FRAC_PI_2 / n as f64;
        let r = check_weak_max(&u, &ball(&[peak, 1.0], 0.1 / n as f64), &p).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-9);
        assert!(r.rhs / 2.0 >= 0.1f64.cos() - 1e-9 && r.holds);
        let c = Eigenfunction::constant(ManifoldId::Torus2, -3.0).unwrap();
        let r = check_weak_max(&c, &ball(&[1.0, 1.0], 0.3), &p).unwrap();
        assert_eq!(r.lhs, r.rhs / 2.0);
    }

    #[test]
    fn radius_precondition() {
        let u = Eigenfunction::torus_product(&[Trig::Sin(10), Trig::Cos(0)]).unwrap();
        assert!(matches!(
            check_weak_max(&u, &ball(&[0.0, 0.0], 0.05), &WavescaleParams::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn gradient_and_sided() {
        let p = WavescaleParams::default();
        let u = Eigenfunction::torus_product(&[Trig::Sin(1), Trig::Cos(0)]).unwrap();
        let g = check_gradient_bound(&u, &ball(&[0.0, 0.0], 0.01), &p).unwrap();
        assert!((g.constant - 1.0).abs() < 1e-3, "{}", g.constant);
        let c = Eigenfunction::constant(ManifoldId::Torus2, 2.0).unwrap();
        assert_eq!(check_gradient_bound(&c, &ball(&[0.0, 0.0], 0.01), &p).unwrap().constant, 0.0);
        let s = check_sided_sup(&c, &ball(&[0.0, 0.0], 0.01), &p).unwrap();
        assert!((s.constant - 1.0).abs() < 1e-12);
        let v = Eigenfunction::torus_product(&[Trig::Sin(1), Trig::Sin(1)]).unwrap();
        let s = check_sided_sup(&v, &ball(&[1.5, 1.5], 0.05), &p).unwrap();
        assert!(s.constant <= 2.0 && s.holds);
        assert!(matches!(
            check_sided_sup(&v, &ball(&[-1.0, 1.0], 0.05), &p),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn harnack_positive_and_constant() {
        let p = WavescaleParams::default();
        let u = Eigenfunction::torus_product(&[Trig::Sin(1), Trig::Sin(1)]).unwrap();
        let h = lift(&u).unwrap();
        let b = BallSpec::new(vec![1.5, 1.5, 0.0], 0.05, ChartId::LiftedTorus(2)).unwrap();
        let r = check_harnack_corollary(&h, &b, &p).unwrap();
        assert!(r.constant >= 1.0 && r.holds);
    }

    #[test]
    fn scale_invariance() {
        let p = WavescaleParams::default();
        let u = Eigenfunction::synth_random(ManifoldId::Torus2, 25, 1).unwrap();
        let b = ball(&[0.4, 2.0], 0.015);
        let a = check_weak_max(&u, &b, &p).unwrap();
        let c = check_weak_max(&u.scaled(-7.5), &b, &p).unwrap();
        assert!((a.constant - c.constant).abs() < 1e-9 * a.constant);
    }
}
