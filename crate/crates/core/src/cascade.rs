//! The subdivision cascade: iterated partitions with doubling-index budgets
//! `N₀/2^k`, exact binomial bookkeeping and the law-of-large-numbers tail.

use std::io::Write;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::doubling::{doubling_index, tilde_index, DoublingParams};
use crate::eigen::{Eigenfunction, LiftedFunction};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::CubeSpec;

/// `C(j, k)` for `k = 0..=j`.
fn binomial_row(j: u32) -> Vec<BigUint> {
    let mut row = vec![BigUint::one()];
    for k in 1..=j as u64 {
        let prev = row.last().unwrap().clone();
        row.push(prev * BigUint::from(j as u64 + 1 - k) / BigUint::from(k));
    }
    row
}

/// `[C(j,k)·(Y−1)^{j−k}]_{k=0..=j}`; the entries sum to `Y^j`.
pub fn binomial_group_sizes(j: u32, y: u64) -> Vec<BigUint> {
    assert!(y >= 2, "Y must be at least 2");
    let base = BigUint::from(y - 1);
    binomial_row(j)
        .into_iter()
        .enumerate()
        .map(|(k, c)| c * base.pow(j - k as u32))
        .collect()
}

/// Smallest `k` with `k ≥ j/(2Y)`.
fn tail_start(j: u32, y: u64) -> u64 {
    (j as u64).div_ceil(2 * y)
}

/// `(numerator, Y^j)` of `P(Bin(j, 1/Y) ≥ j/(2Y))`.
pub fn lln_tail_exact(j: u32, y: u64) -> (BigUint, BigUint) {
    let sizes = binomial_group_sizes(j, y);
    let k0 = tail_start(j, y) as usize;
    let num = sizes.iter().skip(k0).fold(BigUint::zero(), |a, b| a + b);
    (num, BigUint::from(y).pow(j))
}

/// `P(Bin(j, 1/Y) ≥ j/(2Y))`.
pub fn lln_tail(j: u32, y: u64) -> f64 {
    assert!(j >= 1 && y >= 2, "need j ≥ 1 and Y ≥ 2");
    let k0 = tail_start(j, y);
    // the complement has at most k0 terms; summing it keeps precision near 1
    let p = 1.0 / y as f64;
    let q = 1.0 - p;
    let mut term = q.powi(j as i32);
    let mut comp = 0.0;
    for k in 0..k0 {
        comp += term;
        term *= (j as u64 - k) as f64 / (k + 1) as f64 * p / q;
    }
    if comp.is_finite() && term.is_finite() && q.powi(j as i32) > 0.0 {
        return (1.0 - comp).clamp(0.0, 1.0);
    }
    let (n, d) = lln_tail_exact(j, y);
    ratio_to_f64(&n, &d)
}

fn ratio_to_f64(n: &BigUint, d: &BigUint) -> f64 {
    let shift = d.bits().saturating_sub(60);
    let n = (n >> shift).to_f64().unwrap_or(f64::INFINITY);
    let d = (d >> shift).to_f64().unwrap_or(f64::INFINITY);
    n / d
}

/// Whether the tail is at least one half, decided exactly.
pub fn lln_tail_at_least_half(j: u32, y: u64) -> bool {
    let k0 = tail_start(j, y) as u32;
    let base = BigUint::from(y - 1);
    let row = binomial_row(j);
    let comp = (0..k0.min(j + 1)).fold(BigUint::zero(), |a, k| a + &row[k as usize] * base.pow(j - k));
    comp * 2u32 <= BigUint::from(y).pow(j)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TailThreshold {
    /// `tail(j) ≥ 1/2` for every `j ≥ j0`.
    pub j0: u32,
    /// Last `j` checked exactly; beyond it a Chernoff bound applies.
    pub exact_until: u32,
}

/// `j₀(Y)`: exact checks for `j ≤ ⌈8Y ln 2⌉`, where the Chernoff bound
/// `P(Bin < μ/2) ≤ e^{−μ/8}` takes over.
pub fn lln_j0(y: u64) -> TailThreshold {
    let exact_until = (8.0 * y as f64 * std::f64::consts::LN_2).ceil() as u32;
    let mut j0 = 1;
    for j in 1..=exact_until {
        if !lln_tail_at_least_half(j, y) {
            j0 = j + 1;
        }
    }
    TailThreshold { j0, exact_until }
}

/// Largest double `δ` with `Y^δ < 2^{1/(4Y)}`.
pub fn default_delta(y: u64) -> f64 {
    let yf = y as f64;
    let target = std::f64::consts::LN_2 / (4.0 * yf);
    let mut d = target / yf.ln();
    while d * yf.ln() >= target {
        d = d.next_down();
    }
    // step back up while the strict inequality still holds
    while d.next_up() * yf.ln() < target {
        d = d.next_up();
    }
    d
}

/// How a cascade cube is split into `Y` children.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitRule {
    /// `m` per axis, `Y = m^dim`.
    Full { m: u32 },
    /// `m` per base axis with one `t`-centered layer, `Y = m^{dim−1}`.
    SpatialLayer { m: u32 },
}

impl SplitRule {
    pub fn for_count(y: u64, dim: usize, lifted: bool) -> Result<Self> {
        let root = |p: u32| -> Option<u32> {
            let r = (y as f64).powf(1.0 / p as f64).round() as u64;
            (r >= 2 && r.pow(p) == y).then_some(r as u32)
        };
        if let Some(m) = root(dim as u32) {
            return Ok(SplitRule::Full { m });
        }
        if lifted && dim >= 2 {
            if let Some(m) = root(dim as u32 - 1) {
                return Ok(SplitRule::SpatialLayer { m });
            }
        }
        Err(Error::InvalidArgument(format!("Y = {y} is not a subdivision count in dimension {dim}")))
    }

    pub fn split(self, q: &CubeSpec) -> Vec<CubeSpec> {
        match self {
            SplitRule::Full { m } => q.subdivide(m as usize),
            SplitRule::SpatialLayer { m } => {
                let d = q.dim() - 1;
                let base = CubeSpec { center: q.center[..d].to_vec(), half_side: q.half_side };
                base.subdivide(m as usize)
                    .into_iter()
                    .map(|c| {
                        let mut center = c.center;
                        center.push(q.center[d]);
                        CubeSpec { center, half_side: c.half_side }
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CascadeParams {
    /// Children per cube and step.
    pub y: u64,
    pub j: u32,
    /// Subdivision factor of the induction, `K > 2·C0`.
    pub k: u32,
    /// Defaults to [`default_delta`].
    pub delta: Option<f64>,
    /// Dyadic depth for `Ñ` of cascade cubes.
    pub cube_tilde_depth: u32,
    pub doubling: DoublingParams,
}

impl Default for CascadeParams {
    fn default() -> Self {
        let doubling = DoublingParams::default();
        CascadeParams {
            y: 16,
            j: 3,
            k: (2.0 * doubling.c0).floor() as u32 + 1,
            delta: None,
            cube_tilde_depth: 2,
            doubling,
        }
    }
}

impl CascadeParams {
    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or_else(|| default_delta(self.y))
    }

    pub fn validate(&self) -> Result<()> {
        if self.y < 2 || self.j < 1 {
            return Err(Error::InvalidArgument("cascade needs Y ≥ 2 and j ≥ 1".into()));
        }
        if (self.k as f64) <= 2.0 * self.doubling.c0 {
            return Err(Error::InvalidArgument(format!(
                "K = {} must exceed 2·C0 = {}",
                self.k,
                2.0 * self.doubling.c0
            )));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0) {
                return Err(Error::InvalidArgument("δ must be positive".into()));
            }
        }
        Ok(())
    }

    fn cube_params(&self) -> DoublingParams {
        DoublingParams { tilde_depth: self.cube_tilde_depth.max(1), ..self.doubling.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepHistogram {
    pub step: u32,
    /// `groups[k]`: cubes whose smallest satisfied budget is `N₀/2^k`.
    pub groups: Vec<u64>,
    /// Cubes with `Ñ > N₀`.
    pub over_budget: u64,
    pub unresolved: u64,
    /// Cubes with `Ñ ≤ N₀/2^k`.
    pub empirical_cumulative: Vec<u64>,
    /// `Σ_{k' ≥ k} C(s,k')(Y−1)^{s−k'}`.
    pub theoretical_cumulative: Vec<u64>,
    /// `empirical_cumulative[k] ≥ theoretical_cumulative[k]`.
    pub dominated: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalCube {
    pub order: usize,
    pub cube: CubeSpec,
    pub index: Option<f64>,
    pub tilde: Option<f64>,
    pub group: Option<u32>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeReport {
    pub n0: f64,
    pub y: u64,
    pub j: u32,
    pub delta: f64,
    pub split: SplitRule,
    /// `B = Y^j`.
    pub total: u64,
    /// `max{N₀/B^δ, 10·dim}`.
    pub threshold: f64,
    /// `N₀/B^δ < 2·dim`: the induction cannot apply the subdivision lemma.
    pub vacuous: bool,
    pub steps: Vec<StepHistogram>,
    pub theoretical_counts: Vec<u64>,
    pub final_cubes: Vec<FinalCube>,
    pub good_fraction: f64,
    pub resolved: usize,
    pub findings: Vec<String>,
}

fn group_of(tilde: f64, n0: f64, step: u32, tau: f64) -> Option<u32> {
    let slack = tau * n0.abs().max(1.0);
    (0..=step).rev().find(|&k| tilde <= n0 / f64::powi(2.0, k as i32) + slack)
}

fn to_u64(b: &BigUint) -> u64 {
    b.to_u64().unwrap_or(u64::MAX)
}

/// Runs `j` subdivision steps from `q`, measuring `Ñ` of every cube.
pub fn run_cascade(h: &dyn Field, q: &CubeSpec, cp: &CascadeParams) -> Result<CascadeReport> {
    cp.validate()?;
    let dim = q.dim();
    let split = SplitRule::for_count(cp.y, dim, h.chart().is_lifted())?;
    let n0 = tilde_index(h, q, &cp.doubling)?.value;
    let cube_params = cp.cube_params();
    let delta = cp.delta();
    let total = cp.y.checked_pow(cp.j).ok_or_else(|| Error::InvalidArgument("Y^j overflows".into()))?;
    let b_delta = (total as f64).powf(delta);
    let threshold = (n0 / b_delta).max(10.0 * dim as f64);
    let tau = cp.doubling.tau;

    let mut level = vec![q.clone()];
    let mut steps = Vec::new();
    let mut findings = Vec::new();
    let mut final_cubes = Vec::new();
    for s in 1..=cp.j {
        level = level.iter().flat_map(|c| split.split(c)).collect();
        let last = s == cp.j;
        let measured: Vec<(Result<f64>, Option<Result<f64>>)> = level
            .par_iter()
            .map(|c| {
                let t = tilde_index(h, c, &cube_params).map(|t| t.value);
                let n = last.then(|| doubling_index(h, c, &cube_params).map(|r| r.index));
                (t, n)
            })
            .collect();
        let mut groups = vec![0u64; s as usize + 1];
        let (mut over, mut unresolved) = (0u64, 0u64);
        for (i, (t, n)) in measured.into_iter().enumerate() {
            let mut err = None;
            let tilde = match t {
                Ok(v) => Some(v),
                Err(e) => {
                    err = Some(e.to_string());
                    None
                }
            };
            let group = tilde.and_then(|v| group_of(v, n0, s, tau));
            match (tilde, group) {
                (None, _) => unresolved += 1,
                (Some(_), None) => over += 1,
                (Some(_), Some(k)) => groups[k as usize] += 1,
            }
            if last {
                let index = match n {
                    Some(Ok(v)) => Some(v),
                    Some(Err(e)) => {
                        err.get_or_insert(e.to_string());
                        None
                    }
                    None => None,
                };
                final_cubes.push(FinalCube { order: i, cube: level[i].clone(), index, tilde, group, error: err });
            }
        }
        let theory = binomial_group_sizes(s, cp.y);
        let mut empirical_cumulative = vec![0u64; s as usize + 1];
        let mut theoretical_cumulative = vec![0u64; s as usize + 1];
        let (mut acc_e, mut acc_t) = (0u64, BigUint::zero());
        for k in (0..=s as usize).rev() {
            acc_e += groups[k];
            acc_t += &theory[k];
            empirical_cumulative[k] = acc_e;
            theoretical_cumulative[k] = to_u64(&acc_t);
        }
        let dominated: Vec<bool> =
            empirical_cumulative.iter().zip(&theoretical_cumulative).map(|(e, t)| e >= t).collect();
        if over > 0 {
            findings.push(format!("step {s}: {over} cubes exceed the full budget N0 = {n0:.4}"));
        }
        for (k, ok) in dominated.iter().enumerate() {
            if !ok {
                findings.push(format!(
                    "step {s}: {} cubes within budget N0/2^{k}, binomial count {}",
                    empirical_cumulative[k], theoretical_cumulative[k]
                ));
            }
        }
        steps.push(StepHistogram {
            step: s,
            groups,
            over_budget: over,
            unresolved,
            empirical_cumulative,
            theoretical_cumulative,
            dominated,
        });
    }
    let resolved = final_cubes.iter().filter(|c| c.tilde.is_some()).count();
    let good = final_cubes.iter().filter(|c| c.tilde.is_some_and(|t| t <= threshold)).count();
    let good_fraction = if resolved == 0 { 0.0 } else { good as f64 / resolved as f64 };
    Ok(CascadeReport {
        n0,
        y: cp.y,
        j: cp.j,
        delta,
        split,
        total,
        threshold,
        vacuous: n0 / b_delta < 2.0 * dim as f64,
        steps,
        theoretical_counts: binomial_group_sizes(cp.j, cp.y).iter().map(to_u64).collect(),
        final_cubes,
        good_fraction,
        resolved,
        findings,
    })
}

impl CascadeReport {
    /// One JSON object per final cube, then a summary object.
    pub fn write_jsonl(&self, mut w: impl Write) -> Result<()> {
        let io = |e: serde_json::Error| Error::Io(e.to_string());
        for c in &self.final_cubes {
            let rec = serde_json::json!({ "record": "final_cube", "cube": c });
            writeln!(w, "{}", serde_json::to_string(&rec).map_err(io)?)?;
        }
        let summary = serde_json::json!({
            "record": "summary",
            "n0": self.n0,
            "y": self.y,
            "j": self.j,
            "delta": self.delta,
            "split": self.split,
            "total": self.total,
            "threshold": self.threshold,
            "vacuous": self.vacuous,
            "steps": self.steps,
            "theoretical_counts": self.theoretical_counts,
            "good_fraction": self.good_fraction,
            "resolved": self.resolved,
            "findings": self.findings,
        });
        writeln!(w, "{}", serde_json::to_string(&summary).map_err(io)?)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodFraction {
    pub fraction: f64,
    pub good: usize,
    pub resolved: usize,
    pub unresolved: usize,
}

/// Fraction of the `B = Y^j` final cubes of `q ⊂ M × ℝ` on which the
/// doubling index of `u` over the projected cube is at most `threshold`.
///
/// The index of `u` is read off the lift: the mass of `h` over `c × I`
/// factorizes, so `N(u, c) = N(h, c × I) − ½log₂(∫_{lI}e^{2√λt}/∫_I e^{2√λt})`.
pub fn good_cube_fraction(
    h: &LiftedFunction,
    q: &CubeSpec,
    b: u64,
    threshold: f64,
    cp: &CascadeParams,
) -> Result<GoodFraction> {
    let mut j = 0;
    let mut count = 1u64;
    while count < b {
        count = count.saturating_mul(cp.y);
        j += 1;
    }
    if count != b {
        return Err(Error::InvalidArgument(format!("B = {b} is not a power of Y = {}", cp.y)));
    }
    let split = SplitRule::for_count(cp.y, q.dim(), true)?;
    let mut level = vec![q.clone()];
    for _ in 0..j {
        level = level.iter().flat_map(|c| split.split(c)).collect();
    }
    let d = q.dim() - 1;
    let l = cp.doubling.l as f64;
    let indices: Vec<Result<f64>> = level
        .par_iter()
        .map(|c| {
            let n_h = doubling_index(h, c, &cp.doubling)?.index;
            let t_outer = h.t_mass(c.center[d], l * c.half_side);
            let t_inner = h.t_mass(c.center[d], c.half_side);
            Ok(n_h - 0.5 * (t_outer / t_inner).log2())
        })
        .collect();
    let mut good = 0;
    let mut resolved = 0;
    for v in indices.iter().flatten() {
        resolved += 1;
        if *v <= threshold {
            good += 1;
        }
    }
    let fraction = if resolved == 0 { 0.0 } else { good as f64 / resolved as f64 };
    Ok(GoodFraction { fraction, good, resolved, unresolved: level.len() - resolved })
}

/// Doubling index of `u` itself over the projection of a product cube.
pub fn projected_index(u: &Eigenfunction, c: &CubeSpec, params: &DoublingParams) -> Result<f64> {
    doubling_index(u, &LiftedFunction::spatial_cube(c), params).map(|r| r.index)
}
