//! The inscribed-ball lower bound at a zero `O`, and the sign balls on the
//! spheres `S_j` that drive it.

use serde::{Deserialize, Serialize};

use crate::calibration;
use crate::eigen::Eigenfunction;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::{BallSpec, ChartId, QuasiSequence};
use crate::quad::{boundary_extremum, region_extremum, Extremum, Region};

use super::squares::clip_to_disk;
use super::{extract_nodal_2d, extract_nodal_3d_box, metric_length, tets, NodalOptions, Region2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalParams {
    /// Largest admissible `r·√λ`.
    pub epsilon: f64,
    /// `|u(O)| < zero_tol·sup_bound(u)` counts as a zero.
    pub zero_tol: f64,
    /// Cells per axis of the local extraction box (2D; 3D is capped at 128).
    pub local_resolution: usize,
    pub sup_samples: usize,
    pub boundary_samples: usize,
    pub c2: f64,
    /// Sign balls have radius `sign_ball_c·r/N`.
    pub sign_ball_c: f64,
    pub sign_check_samples: usize,
    pub seed: u64,
}

impl Default for LocalParams {
    fn default() -> Self {
        LocalParams {
            epsilon: calibration::EPSILON_DEFAULT,
            zero_tol: 1e-8,
            local_resolution: 512,
            sup_samples: 4096,
            boundary_samples: 512,
            c2: calibration::C2,
            sign_ball_c: 0.25,
            sign_check_samples: 256,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub n: u32,
    pub sup_half: f64,
    pub sup_quarter: f64,
    /// Nodal measure inside `B_{r/2}` in the manifold metric.
    pub measured: f64,
    /// `r^{n−1}·N^{2−n}`.
    pub bound: f64,
    /// `measured / bound`.
    pub constant: f64,
    /// `N < 4`: the estimate says nothing.
    pub vacuous: bool,
    /// `N ≥ 4` and no zeros were found in `B_{r/2}`.
    pub finding: bool,
    pub holds: bool,
}

fn check_zero(u: &Eigenfunction, chart: ChartId, o: &[f64], r: f64, p: &LocalParams) -> Result<BallSpec> {
    if !u.chart_supported(chart) {
        return Err(Error::InvalidArgument(format!("{chart:?} is not a chart of {}", u.manifold())));
    }
    let limit = p.epsilon / u.frequency();
    if !(r > 0.0) || r > limit * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!("radius {r} outside (0, ε/√λ = {limit}]")));
    }
    let v = u.evaluate_in(chart, o);
    if v.abs() >= p.zero_tol * u.sup_bound() {
        return Err(Error::Precondition(format!("u(O) = {v:e} is not a zero")));
    }
    let b = BallSpec::new(o.to_vec(), r, chart)?;
    if !b.fits_chart() {
        return Err(Error::ChartEscape(format!("ball of radius {r} at {o:?}")));
    }
    Ok(b)
}

/// Metric measure of `{u = 0}` inside the chart ball `b`.
fn measure_in_ball(u: &Eigenfunction, b: &BallSpec, p: &LocalParams) -> Result<f64> {
    let lo: Vec<f64> = b.center.iter().map(|c| c - b.radius).collect();
    let hi: Vec<f64> = b.center.iter().map(|c| c + b.radius).collect();
    let opts = NodalOptions { keep_elements: true, enforce_resolution: false, ..Default::default() };
    match u.dim() {
        2 => {
            let region = Region2::Box { lo: [lo[0], lo[1]], hi: [hi[0], hi[1]], chart: b.chart };
            let m = extract_nodal_2d(u, &region, p.local_resolution, &opts)?;
            let c = [b.center[0], b.center[1]];
            Ok(m.segments
                .iter()
                .filter_map(|s| clip_to_disk(s.a, s.b, c, b.radius))
                .map(|s| metric_length(b.chart, &s))
                .sum())
        }
        _ => {
            let res = p.local_resolution.min(128);
            let m = extract_nodal_3d_box(u, [lo[0], lo[1], lo[2]], [hi[0], hi[1], hi[2]], res, &opts)?;
            // triangles are a few cells wide; assign each by its centroid
            Ok(m.triangles
                .iter()
                .filter(|t| {
                    let g: Vec<f64> = (0..3).map(|a| (t[0][a] + t[1][a] + t[2][a]) / 3.0).collect();
                    b.contains_point(&g)
                })
                .map(tets::tri_area)
                .sum())
        }
    }
}

/// Checks `ℋ^{n−1}({u = 0} ∩ B_{r/2}) ≥ c·r^{n−1}·N^{2−n}` at a zero `o`,
/// with `N = ⌈log₂(sup_{B_{r/2}}|u| / sup_{B_{r/4}}|u|)⌉`.
pub fn local_lower_bound_check(
    u: &Eigenfunction,
    chart: ChartId,
    o: &[f64],
    r: f64,
    p: &LocalParams,
) -> Result<LowerBoundReport> {
    let b = check_zero(u, chart, o, r, p)?;
    let view = u.in_chart(chart)?;
    let half = b.scaled(0.5);
    let sup_half = region_extremum(&view, &Region::Ball(half.clone()), Extremum::AbsMax, p.sup_samples, p.seed)?.value;
    let sup_quarter =
        region_extremum(&view, &Region::Ball(b.scaled(0.25)), Extremum::AbsMax, p.sup_samples, p.seed)?.value;
    if !(sup_quarter > 0.0) {
        return Err(Error::Precondition("u vanishes on B_{r/4}".into()));
    }
    // the slack absorbs the sampling error of an exact power of two
    let n = ((sup_half / sup_quarter).log2() - 1e-9).ceil().max(0.0) as u32;
    let measured = measure_in_ball(u, &half, p)?;
    let d = u.dim() as i32;
    let bound = r.powi(d - 1) * (n.max(1) as f64).powi(2 - d);
    let vacuous = n < 4;
    let finding = !vacuous && measured == 0.0;
    Ok(LowerBoundReport {
        n,
        sup_half,
        sup_quarter,
        measured,
        bound,
        constant: measured / bound,
        vacuous,
        finding,
        holds: vacuous || measured > 0.0,
    })
}

/// A ball on which `u` keeps one sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignBall {
    pub center: Vec<f64>,
    pub radius: f64,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignLayer {
    pub k: u32,
    pub positive: SignBall,
    pub negative: SignBall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignBallReport {
    pub n: u32,
    pub radii: Vec<f64>,
    /// `max_{S_j} u`.
    pub m_plus: Vec<f64>,
    /// `min_{S_j} u`.
    pub m_minus: Vec<f64>,
    /// Layers whose ratios are at most `128·C₂`.
    pub qualifying: Vec<u32>,
    pub layers: Vec<SignLayer>,
    /// Qualifying layers with both sign balls verified.
    pub successes: usize,
    /// `2·successes ≥ N`.
    pub enough: bool,
    /// Indices `j` with `m⁺_j > 2·m⁺_{j+1}`.
    pub weak_max_violations: Vec<u32>,
}

fn verify_sign(f: &dyn Field, center: &[f64], radius: f64, positive: bool, samples: usize, seed: u64) -> bool {
    let d = center.len();
    let mut seq = QuasiSequence::new(d, seed);
    let mut checked = 0;
    let ok = |p: &[f64]| {
        let v = f.value(p);
        if positive {
            v > 0.0
        } else {
            v < 0.0
        }
    };
    if !ok(center) {
        return false;
    }
    while checked < samples {
        let s = seq.next_point();
        let p: Vec<f64> = s.iter().zip(center).map(|(x, c)| c + radius * (2.0 * x - 1.0)).collect();
        if crate::geometry::dist(&p, center) > radius {
            continue;
        }
        if !ok(&p) {
            return false;
        }
        checked += 1;
    }
    BallSpec::new(center.to_vec(), radius, f.chart())
        .and_then(|b| crate::geometry::sphere_sample(&b, samples.max(8), seed))
        .map(|pts| pts.iter().all(|q| ok(q)))
        .unwrap_or(false)
}

/// Spheres `S_j` of radius `r(3/8 + j/(8N))`, `j = 0..=N`, the sequences
/// `m^±_j`, and sign balls of radius `c·r/N` at the extremal points of
/// every layer `k` with `m⁺_{k+1} ≤ 128C₂·m⁺_k` and `|m⁻_{k+1}| ≤ 128C₂·|m⁻_k|`.
pub fn sign_ball_search(
    u: &Eigenfunction,
    chart: ChartId,
    o: &[f64],
    r: f64,
    n: u32,
    p: &LocalParams,
) -> Result<SignBallReport> {
    if n < 4 {
        return Err(Error::Precondition(format!("N = {n} < 4")));
    }
    let b = check_zero(u, chart, o, r, p)?;
    let view = u.in_chart(chart)?;
    let nf = n as f64;
    let radii: Vec<f64> = (0..=n).map(|j| r * (3.0 / 8.0 + j as f64 / (8.0 * nf))).collect();
    let mut maxima = Vec::with_capacity(radii.len());
    let mut minima = Vec::with_capacity(radii.len());
    for &rj in &radii {
        let s = BallSpec { radius: rj, ..b.clone() };
        maxima.push(boundary_extremum(&view, &s, Extremum::Max, p.boundary_samples, p.seed)?);
        minima.push(boundary_extremum(&view, &s, Extremum::Min, p.boundary_samples, p.seed)?);
    }
    let m_plus: Vec<f64> = maxima.iter().map(|e| e.value).collect();
    let m_minus: Vec<f64> = minima.iter().map(|e| e.value).collect();
    let cap = 128.0 * p.c2;
    let ball_r = p.sign_ball_c * r / nf;
    let mut qualifying = Vec::new();
    let mut layers = Vec::new();
    for k in 0..n as usize {
        let up = m_plus[k + 1] <= cap * m_plus[k];
        let down = m_minus[k + 1].abs() <= cap * m_minus[k].abs();
        if !(up && down && m_plus[k] > 0.0 && m_minus[k] < 0.0) {
            continue;
        }
        qualifying.push(k as u32);
        let seed = p.seed.wrapping_add(k as u64);
        let pos = &maxima[k].point;
        let neg = &minima[k].point;
        layers.push(SignLayer {
            k: k as u32,
            positive: SignBall {
                center: pos.clone(),
                radius: ball_r,
                verified: verify_sign(&view, pos, ball_r, true, p.sign_check_samples, seed),
            },
            negative: SignBall {
                center: neg.clone(),
                radius: ball_r,
                verified: verify_sign(&view, neg, ball_r, false, p.sign_check_samples, seed),
            },
        });
    }
    let successes = layers.iter().filter(|l| l.positive.verified && l.negative.verified).count();
    let weak_max_violations = (0..n as usize)
        .filter(|&j| m_plus[j] > 2.0 * m_plus[j + 1])
        .map(|j| j as u32)
        .collect();
    Ok(SignBallReport {
        n,
        radii,
        m_plus,
        m_minus,
        qualifying,
        layers,
        successes,
        enough: 2 * successes >= n as usize,
        weak_max_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::Trig;

    #[test]
    fn quadratic_zero_is_vacuous() {
        let u = Eigenfunction::torus_product(&[Trig::Sin(2), Trig::Sin(2)]).unwrap();
        let r = 0.1 / u.frequency();
        let rep = local_lower_bound_check(&u, ChartId::Torus(2), &[0.0, 0.0], r, &LocalParams::default()).unwrap();
        assert_eq!(rep.n, 2);
        assert!(rep.vacuous && rep.holds && !rep.finding);
        // two crossing diameters of B_{r/2}; the saddle cell cuts a corner
        assert!((rep.measured - 2.0 * r).abs() < 2e-3 * r, "{}", rep.measured);
    }

    #[test]
    fn sectoral_pole() {
        let u = Eigenfunction::sectoral(8);
        let r = 0.1 / u.frequency();
        let p = LocalParams::default();
        let rep = local_lower_bound_check(&u, ChartId::NorthCap, &[0.0, 0.0], r, &p).unwrap();
        assert_eq!(rep.n, 8);
        assert!(!rep.vacuous && rep.holds);
        let s = sign_ball_search(&u, ChartId::NorthCap, &[0.0, 0.0], r, rep.n, &p).unwrap();
        assert_eq!(s.qualifying.len(), 8);
        assert!(s.enough && s.successes == 8);
        assert!(s.weak_max_violations.is_empty());
    }

    #[test]
    fn rejects_non_zero_and_large_radius() {
        let u = Eigenfunction::torus_product(&[Trig::Cos(1), Trig::Cos(0)]).unwrap();
        let p = LocalParams::default();
        assert!(matches!(
            local_lower_bound_check(&u, ChartId::Torus(2), &[0.0, 0.0], 0.01, &p),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            local_lower_bound_check(&u, ChartId::Torus(2), &[std::f64::consts::FRAC_PI_2, 0.0], 1.0, &p),
            Err(Error::Precondition(_))
        ));
    }
}
