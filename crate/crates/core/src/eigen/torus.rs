//! Lattice enumeration and the exact box mass for flat-torus eigenfunctions.

use num_complex::Complex64;

/// `cos_coef · cos⟨k,x⟩ + sin_coef · sin⟨k,x⟩`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TorusMode {
    pub k: Vec<i64>,
    pub cos_coef: f64,
    pub sin_coef: f64,
}

impl TorusMode {
    /// The complex coefficient `c` with `mode = Re(c·e^{i⟨k,x⟩})`.
    pub fn complex(&self) -> Complex64 {
        Complex64::new(self.cos_coef, -self.sin_coef)
    }

    pub fn norm_sq(&self) -> i64 {
        self.k.iter().map(|x| x * x).sum()
    }
}

/// First nonzero component positive; the zero vector counts as a
/// representative.
pub fn is_representative(k: &[i64]) -> bool {
    k.iter().find(|&&x| x != 0).is_none_or(|&x| x > 0)
}

/// All `k ∈ ℤ^dim` with `|k|² = n`, lexicographically ascending.
pub fn lattice_points(dim: usize, n: u64) -> Vec<Vec<i64>> {
    let r = (n as f64).sqrt().floor() as i64 + 1;
    let mut out = Vec::new();
    let mut k = vec![0i64; dim];
    fn rec(a: usize, rem: i64, r: i64, k: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if a == k.len() {
            if rem == 0 {
                out.push(k.clone());
            }
            return;
        }
        for x in -r..=r {
            if x * x > rem {
                continue;
            }
            k[a] = x;
            rec(a + 1, rem - x * x, r, k, out);
        }
        k[a] = 0;
    }
    rec(0, n as i64, r, &mut k, &mut out);
    out
}

/// Representatives of `{k : |k|² = n}` up to sign.
pub fn lattice_representatives(dim: usize, n: u64) -> Vec<Vec<i64>> {
    lattice_points(dim, n).into_iter().filter(|k| is_representative(k)).collect()
}

/// Counts of lattice points `r_d(n)` for all `n ≤ max`.
pub fn lattice_counts(dim: usize, max: u64) -> Vec<usize> {
    let mut counts = vec![0usize; max as usize + 1];
    let r = (max as f64).sqrt().floor() as i64;
    fn rec(a: usize, dim: usize, acc: u64, r: i64, max: u64, counts: &mut [usize]) {
        if a == dim {
            counts[acc as usize] += 1;
            return;
        }
        for x in -r..=r {
            let s = acc + (x * x) as u64;
            if s <= max {
                rec(a + 1, dim, s, r, max, counts);
            }
        }
    }
    rec(0, dim, 0, r, max, &mut counts);
    counts
}

/// `∫_a^b e^{iωx} dx`.
fn interval_exp(omega: f64, a: f64, b: f64) -> Complex64 {
    let len = b - a;
    let z = 0.5 * omega * len;
    let sinc = if z.abs() < 1e-8 { 1.0 - z * z / 6.0 } else { z.sin() / z };
    Complex64::from_polar(len * sinc, 0.5 * omega * (a + b))
}

/// `∫_box e^{i⟨ω,x⟩} dx` over `[lo, hi]`.
fn box_exp(omega: &[f64], lo: &[f64], hi: &[f64]) -> Complex64 {
    omega
        .iter()
        .zip(lo.iter().zip(hi))
        .map(|(&w, (&a, &b))| interval_exp(w, a, b))
        .product()
}

/// Exact `∫_box u²` for `u = Σ Re(c_m e^{i⟨k_m,x⟩})`, together with the
/// scale `Σ|c_m|² · vol` against which its cancellation error is measured.
pub fn box_mass(modes: &[TorusMode], lo: &[f64], hi: &[f64]) -> (f64, f64) {
    let d = lo.len();
    let cs: Vec<Complex64> = modes.iter().map(|m| m.complex()).collect();
    let ks: Vec<Vec<f64>> = modes.iter().map(|m| m.k.iter().map(|&x| x as f64).collect()).collect();
    let mut total = 0.0;
    let mut w = vec![0.0; d];
    for (m, (cm, km)) in cs.iter().zip(&ks).enumerate() {
        for (n, (cn, kn)) in cs.iter().zip(&ks).enumerate().skip(m) {
            let mult = if m == n { 1.0 } else { 2.0 };
            for a in 0..d {
                w[a] = km[a] + kn[a];
            }
            let plus = cm * cn * box_exp(&w, lo, hi);
            for a in 0..d {
                w[a] = km[a] - kn[a];
            }
            let minus = cm * cn.conj() * box_exp(&w, lo, hi);
            // the (m,n) and (n,m) terms have equal real parts
            total += mult * 0.5 * (plus.re + minus.re);
        }
    }
    let vol: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
    let scale = cs.iter().map(|c| c.norm_sqr()).sum::<f64>() * vol;
    (total, scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_counts_match_enumeration() {
        let c = lattice_counts(2, 30);
        for n in 0..=30u64 {
            assert_eq!(c[n as usize], lattice_points(2, n).len(), "n={n}");
        }
        assert_eq!(lattice_points(2, 25).len(), 12);
        assert_eq!(lattice_points(3, 1).len(), 6);
        assert_eq!(lattice_representatives(2, 25).len(), 6);
    }

    #[test]
    fn representatives() {
        assert!(is_representative(&[0, 3]));
        assert!(!is_representative(&[0, -3]));
        assert!(is_representative(&[1, -3]));
        assert!(is_representative(&[0, 0]));
    }

    #[test]
    fn box_mass_of_cosine() {
        // ∫_0^a cos²x dx over [0,a]×[0,b]
        let m = TorusMode { k: vec![1, 0], cos_coef: 1.0, sin_coef: 0.0 };
        let (a, b) = (0.7, 0.4);
        let (v, _) = box_mass(&[m], &[0.0, 0.0], &[a, b]);
        let exact = b * (a / 2.0 + (2.0 * a).sin() / 4.0);
        assert!((v - exact).abs() < 1e-14);
    }
}
