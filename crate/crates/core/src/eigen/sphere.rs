//! Real spherical harmonics from fully normalized associated Legendre
//! recurrences, and the stereographic cap charts.

use std::f64::consts::{PI, SQRT_2};

use crate::geometry::ChartId;

/// `Y_lm` with `m > 0` ↦ `√2 p̄_l^m cos(mφ)`, `m < 0` ↦ `√2 p̄_l^{|m|} sin(|m|φ)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SphereMode {
    pub l: u32,
    pub m: i32,
    pub coef: f64,
}

/// `p̄_l^m(cos θ)` for `l = m..=lmax`, normalized so that
/// `∫_0^π (p̄_l^m)² sin θ dθ = 1/(2π)`.
pub fn legendre_column(m: u32, lmax: u32, theta: f64) -> Vec<f64> {
    let (s, c) = theta.sin_cos();
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for k in 1..=m {
        let k = k as f64;
        pmm *= ((2.0 * k + 1.0) / (2.0 * k)).sqrt() * s;
    }
    if lmax < m {
        return Vec::new();
    }
    let mut out = Vec::with_capacity((lmax - m + 1) as usize);
    out.push(pmm);
    if lmax == m {
        return out;
    }
    let mf = m as f64;
    out.push((2.0 * mf + 3.0).sqrt() * c * pmm);
    for l in (m + 2)..=lmax {
        let lf = l as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
        let n = out.len();
        out.push(a * (c * out[n - 1] - b * out[n - 2]));
    }
    out
}

/// `d p̄_l^m / dθ` from the column returned by [`legendre_column`].
/// Not defined at the poles.
pub fn legendre_dtheta(m: u32, l: u32, theta: f64, column: &[f64]) -> f64 {
    let (s, c) = theta.sin_cos();
    let i = (l - m) as usize;
    let lf = l as f64;
    let mf = m as f64;
    let prev = if l > m {
        ((2.0 * lf + 1.0) / (2.0 * lf - 1.0) * (lf * lf - mf * mf)).sqrt() * column[i - 1]
    } else {
        0.0
    };
    (lf * c * column[i] - prev) / s
}

fn azimuthal(m: i32, phi: f64) -> f64 {
    match m.cmp(&0) {
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Greater => SQRT_2 * (m as f64 * phi).cos(),
        std::cmp::Ordering::Less => SQRT_2 * ((-m) as f64 * phi).sin(),
    }
}

fn azimuthal_dphi(m: i32, phi: f64) -> f64 {
    match m.cmp(&0) {
        std::cmp::Ordering::Equal => 0.0,
        std::cmp::Ordering::Greater => -SQRT_2 * m as f64 * (m as f64 * phi).sin(),
        std::cmp::Ordering::Less => SQRT_2 * (-m) as f64 * ((-m) as f64 * phi).cos(),
    }
}

pub fn real_sph_harm(l: u32, m: i32, theta: f64, phi: f64) -> f64 {
    let am = m.unsigned_abs();
    let col = legendre_column(am, l, theta);
    col[(l - am) as usize] * azimuthal(m, phi)
}

/// Sum of modes and its `(∂θ, ∂φ)` derivatives, sharing one Legendre
/// column per distinct `|m|`.
pub fn eval_modes(modes: &[SphereMode], theta: f64, phi: f64, with_grad: bool) -> (f64, f64, f64) {
    let mut v = 0.0;
    let mut dth = 0.0;
    let mut dph = 0.0;
    let mut cache: Vec<(u32, Vec<f64>)> = Vec::new();
    for md in modes {
        let am = md.m.unsigned_abs();
        let lmax = modes.iter().filter(|x| x.m.unsigned_abs() == am).map(|x| x.l).max().unwrap_or(md.l);
        let pos = match cache.iter().position(|(m, _)| *m == am) {
            Some(p) => p,
            None => {
                cache.push((am, legendre_column(am, lmax, theta)));
                cache.len() - 1
            }
        };
        let col = &cache[pos].1;
        let p = col[(md.l - am) as usize];
        let az = azimuthal(md.m, phi);
        v += md.coef * p * az;
        if with_grad {
            dth += md.coef * legendre_dtheta(am, md.l, theta, col) * az;
            dph += md.coef * p * azimuthal_dphi(md.m, phi);
        }
    }
    (v, dth, dph)
}

pub fn is_north(chart: ChartId) -> bool {
    matches!(chart, ChartId::NorthCap | ChartId::LiftedNorthCap)
}

/// Stereographic chart point to `(θ, φ)`.
pub fn chart_to_angles(chart: ChartId, w: &[f64]) -> (f64, f64) {
    let r = w[0].hypot(w[1]);
    let phi = w[1].atan2(w[0]);
    let t = 2.0 * r.atan();
    if is_north(chart) {
        (t, phi)
    } else {
        (PI - t, phi)
    }
}

pub fn angles_to_chart(chart: ChartId, theta: f64, phi: f64) -> [f64; 2] {
    let t = if is_north(chart) { theta } else { PI - theta };
    let r = (0.5 * t).tan();
    [r * phi.cos(), r * phi.sin()]
}

/// Length scale factor of the round metric in a cap chart.
pub fn conformal_factor(w: &[f64]) -> f64 {
    2.0 / (1.0 + w[0] * w[0] + w[1] * w[1])
}
