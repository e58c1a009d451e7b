//! Constants that the estimates only assert to exist, frozen from one-off
//! sweeps. `tests/calibration.rs` re-runs reduced sweeps and checks that
//! every observed value stays inside its frozen bound; with
//! `NODAL_LAB_CALIBRATE=1` it runs the full sweeps quoted below.

/// Monotonicity constant: `N(h, q₁) ≤ C0·N(h, q)` when `A·q₁ ⊂ q`.
/// Observed max 1.000 (harmonic polynomials up to degree 20, lifts with λ ≤ 100).
pub const C0: f64 = 1.5;

/// L∞ estimate: `sup_{(4/3)B}|h| ≤ C7·2^{N(h,q)}·sup_B|h|`.
/// Observed max 0.0912 over 50 balls, λ ≤ 100.
pub const C7: f64 = 0.15;

/// Gradient bound: `sup_{B_{r/2}}|∇u| ≤ C1·max_{∂B_r}|u| / r`.
/// Observed max 0.600 over 100 balls, λ ≤ 10⁴.
pub const C1: f64 = 1.0;

/// One-sided bound: `sup_{B_{2r/3}}|u| ≤ C2·max_{∂B_r} u`.
/// Observed max 1.000 over the same balls.
pub const C2: f64 = 1.5;

/// Floor for `sup_B h / sup_{(2/3)B}|h|` when `h(center) ≥ 0`.
/// Observed min 1.003 over the same balls, lifted.
pub const HARNACK_FLOOR: f64 = 0.5;

/// Nodal density: every point lies within `C_DENS·λ^{-1/2}` of a zero.
/// Observed max 2.278 on Torus2, λ ≤ 10⁴, 5 seeds.
pub const C_DENS: f64 = 3.5;

/// Upper bound on `max Ñ / √λ` in the doubling sweep.
/// Observed max 0.988 on Torus2, λ ∈ [10², 10⁴], 5 seeds.
pub const DF_C: f64 = 1.5;

/// Good-cube threshold `C_GOOD·λ^{1/2−2δ}`: at least half of the wavelength
/// cubes of Torus3 have a smaller index. Observed median max 1.129, λ ≤ 10³.
pub const C_GOOD: f64 = 1.7;

/// Largest `ε` for which the weak maximum principle held on the sweep
/// (500 balls, bisection on `[0, 1]`; the whole interval was clean).
pub const EPSILON_MAX: f64 = 1.0;

/// Default `ε`: balls have radius at most `ε·λ^{-1/2}`.
pub const EPSILON_DEFAULT: f64 = 0.1;
