//! Evaluatable functions on a chart, and the closed-form families used as
//! oracles by the doubling and quadrature suites.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::geometry::{ChartId, CubeSpec};
use crate::quad::QuadratureSpec;

/// A real function defined on (a region of) one chart.
pub trait Field: Sync {
    fn dim(&self) -> usize;

    fn chart(&self) -> ChartId;

    fn value(&self, p: &[f64]) -> f64;

    /// Bound on the angular frequency of `|f|²`; drives the quadrature
    /// resolution rule. Zero for non-oscillating fields.
    fn square_frequency(&self) -> f64 {
        0.0
    }

    /// Values on the tensor grid `axes[0] × … × axes[d-1]`, last axis
    /// fastest. Implementations with separable structure override this.
    fn grid_values(&self, axes: &[&[f64]], out: &mut Vec<f64>) {
        out.clear();
        let d = axes.len();
        let total: usize = axes.iter().map(|a| a.len()).product();
        out.reserve(total);
        let mut idx = vec![0usize; d];
        let mut p = vec![0.0; d];
        for _ in 0..total {
            for a in 0..d {
                p[a] = axes[a][idx[a]];
            }
            out.push(self.value(&p));
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < axes[a].len() {
                    break;
                }
                idx[a] = 0;
            }
        }
    }

    /// `∫_q |f|²` by an exact or factorized route, when the field has one.
    fn closed_form_mass(&self, _q: &CubeSpec, _spec: &QuadratureSpec) -> Option<Result<f64>> {
        None
    }
}

/// One term `Re(coef · Π_a exp((rate_a + i·freq_a)·x_a))` of a separable sum.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableTerm {
    pub coef: Complex64,
    pub freq: Vec<f64>,
    pub rate: Vec<f64>,
}

/// Evaluates `Σ_t Re(coef_t Π_a g_{t,a}(x_a))` on a tensor grid in
/// `O(T·n^d)` multiplications instead of `O(T·n^d)` transcendental calls.
pub fn separable_grid(terms: &[SeparableTerm], axes: &[&[f64]], out: &mut Vec<f64>) {
    let d = axes.len();
    let total: usize = axes.iter().map(|a| a.len()).product();
    out.clear();
    out.resize(total, 0.0);
    if total == 0 {
        return;
    }
    // per term, per axis factor tables
    let tables: Vec<Vec<Vec<Complex64>>> = terms
        .iter()
        .map(|t| {
            (0..d)
                .map(|a| {
                    axes[a]
                        .iter()
                        .map(|&x| {
                            let m = (t.rate[a] * x).exp();
                            Complex64::from_polar(m, t.freq[a] * x)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let last = d - 1;
    let n_last = axes[last].len();
    let outer: usize = total / n_last;
    let mut idx = vec![0usize; last];
    let mut re = vec![0.0; n_last];
    let mut im = vec![0.0; n_last];
    for block in 0..outer {
        let row = &mut out[block * n_last..(block + 1) * n_last];
        for (t, term) in terms.iter().enumerate() {
            let mut w = term.coef;
            for a in 0..last {
                w *= tables[t][a][idx[a]];
            }
            if w.re == 0.0 && w.im == 0.0 {
                continue;
            }
            let lt = &tables[t][last];
            for (i, z) in lt.iter().enumerate() {
                re[i] = z.re;
                im[i] = z.im;
            }
            for i in 0..n_last {
                row[i] += w.re * re[i] - w.im * im[i];
            }
        }
        for a in (0..last).rev() {
            idx[a] += 1;
            if idx[a] < axes[a].len() {
                break;
            }
            idx[a] = 0;
        }
    }
}

/// `f ≡ c` on `ℝ^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantField {
    pub value: f64,
    pub dim: usize,
}

impl Field for ConstantField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn chart(&self) -> ChartId {
        ChartId::Euclidean(self.dim as u8)
    }
    fn value(&self, _p: &[f64]) -> f64 {
        self.value
    }
    fn grid_values(&self, axes: &[&[f64]], out: &mut Vec<f64>) {
        let total = axes.iter().map(|a| a.len()).product();
        out.clear();
        out.resize(total, self.value);
    }
}

/// `f(x) = x_axis` on `ℝ^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearField {
    pub axis: usize,
    pub dim: usize,
}

impl Field for LinearField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn chart(&self) -> ChartId {
        ChartId::Euclidean(self.dim as u8)
    }
    fn value(&self, p: &[f64]) -> f64 {
        p[self.axis]
    }
}

/// `f(x) = exp(rate · x_axis)` on `ℝ^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpField {
    pub rate: f64,
    pub axis: usize,
    pub dim: usize,
}

impl ExpField {
    fn term(&self) -> SeparableTerm {
        let mut rate = vec![0.0; self.dim];
        rate[self.axis] = self.rate;
        SeparableTerm { coef: Complex64::new(1.0, 0.0), freq: vec![0.0; self.dim], rate }
    }
}

impl Field for ExpField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn chart(&self) -> ChartId {
        ChartId::Euclidean(self.dim as u8)
    }
    fn value(&self, p: &[f64]) -> f64 {
        (self.rate * p[self.axis]).exp()
    }
    fn grid_values(&self, axes: &[&[f64]], out: &mut Vec<f64>) {
        separable_grid(&[self.term()], axes, out);
    }
}

/// `Re (x₁ + i x₂)^k`, harmonic in every dimension `d ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicPolyField {
    pub degree: u32,
    pub dim: usize,
}

impl Field for HarmonicPolyField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn chart(&self) -> ChartId {
        ChartId::Euclidean(self.dim as u8)
    }
    fn value(&self, p: &[f64]) -> f64 {
        Complex64::new(p[0], p[1]).powu(self.degree).re
    }
}

/// Random trigonometric polynomial `Σ a_k cos(⟨ω_k, x⟩ + φ_k)`, optionally
/// multiplied by an exponential envelope `exp(⟨v, x⟩)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolyField {
    pub dim: usize,
    pub terms: Vec<SeparableTerm>,
    pub max_freq: f64,
}

impl TrigPolyField {
    /// Draws `count` terms with integer frequencies in `[-max_freq, max_freq]`
    /// and an envelope whose rate vector has norm uniform in
    /// `[0, max_envelope]`.
    pub fn random(dim: usize, max_freq: i32, count: usize, max_envelope: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let env_norm = rng.random::<f64>() * max_envelope;
        let mut dir: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
        let n = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        dir.iter_mut().for_each(|x| *x *= env_norm / n);
        let terms = (0..count)
            .map(|_| {
                let freq: Vec<f64> =
                    (0..dim).map(|_| rng.random_range(-max_freq..=max_freq) as f64).collect();
                let amp = rng.random::<f64>() * 2.0 - 1.0;
                let phase = rng.random::<f64>() * std::f64::consts::TAU;
                SeparableTerm { coef: Complex64::from_polar(amp, phase), freq, rate: dir.clone() }
            })
            .collect();
        TrigPolyField { dim, terms, max_freq: max_freq as f64 * (dim as f64).sqrt() }
    }
}

impl Field for TrigPolyField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn chart(&self) -> ChartId {
        ChartId::Euclidean(self.dim as u8)
    }
    fn value(&self, p: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let mut z = t.coef;
                for a in 0..self.dim {
                    z *= Complex64::from_polar((t.rate[a] * p[a]).exp(), t.freq[a] * p[a]);
                }
                z.re
            })
            .sum()
    }
    fn square_frequency(&self) -> f64 {
        2.0 * self.max_freq
    }
    fn grid_values(&self, axes: &[&[f64]], out: &mut Vec<f64>) {
        separable_grid(&self.terms, axes, out);
    }
}

/// `c · f` for any field `f`.
pub struct ScaledField<'a> {
    pub factor: f64,
    pub inner: &'a dyn Field,
}

impl Field for ScaledField<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn chart(&self) -> ChartId {
        self.inner.chart()
    }
    fn value(&self, p: &[f64]) -> f64 {
        self.factor * self.inner.value(p)
    }
    fn square_frequency(&self) -> f64 {
        self.inner.square_frequency()
    }
    fn grid_values(&self, axes: &[&[f64]], out: &mut Vec<f64>) {
        self.inner.grid_values(axes, out);
        out.iter_mut().for_each(|v| *v *= self.factor);
    }
    fn closed_form_mass(&self, q: &CubeSpec, spec: &QuadratureSpec) -> Option<Result<f64>> {
        self.inner
            .closed_form_mass(q, spec)
            .map(|m| m.map(|m| m * self.factor * self.factor))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Pointwise<'a>(&'a dyn Field);
    impl Field for Pointwise<'_> {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn chart(&self) -> ChartId {
            self.0.chart()
        }
        fn value(&self, p: &[f64]) -> f64 {
            self.0.value(p)
        }
    }

    #[test]
    fn separable_grid_matches_pointwise() {
        let f = TrigPolyField::random(3, 3, 6, 2.0, 7);
        let ax: Vec<Vec<f64>> = vec![vec![0.1, 0.4, -0.2], vec![0.0, 0.5], vec![1.0, -1.0, 0.3, 0.2]];
        let axes: Vec<&[f64]> = ax.iter().map(|a| a.as_slice()).collect();
        let (mut fast, mut slow) = (Vec::new(), Vec::new());
        f.grid_values(&axes, &mut fast);
        Pointwise(&f).grid_values(&axes, &mut slow);
        assert_eq!(fast.len(), 24);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()), "{a} {b}");
        }
    }

    #[test]
    fn exp_grid_matches_pointwise() {
        let f = ExpField { rate: 3.0, axis: 1, dim: 2 };
        let ax = [vec![0.0, 1.0], vec![-0.5, 0.25, 0.75]];
        let axes: Vec<&[f64]> = ax.iter().map(|a| a.as_slice()).collect();
        let mut v = Vec::new();
        f.grid_values(&axes, &mut v);
        assert!((v[5] - (0.75f64 * 3.0).exp()).abs() < 1e-12);
        assert!((v[0] - (-1.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn harmonic_poly_is_harmonic() {
        let f = HarmonicPolyField { degree: 5, dim: 3 };
        let h = 1e-3;
        for p in [[0.3, -0.2, 0.1], [0.9, 0.4, -0.7]] {
            let mut lap = 0.0;
            for a in 0..3 {
                let mut pp = p;
                let mut pm = p;
                pp[a] += h;
                pm[a] -= h;
                lap += (f.value(&pp) - 2.0 * f.value(&p) + f.value(&pm)) / (h * h);
            }
            // the stencil error is h²/12 · Σ∂⁴f, not zero for degree 5
            assert!(lap.abs() < 1e-3, "{lap}");
        }
    }
}
