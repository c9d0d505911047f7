//! Reference values for Fourier transforms of simple measures, computed with
//! closed forms, adaptive quadrature or brute-force lattice enumeration.
//!
//! Nothing here depends on the `fourier-ratio` pipelines: the point is to
//! check them with algorithms they do not share. Every value carries an
//! absolute error bound.

use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

/// Reference value with its absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult<T> {
    pub value: T,
    pub error_bound: f64,
    pub method: &'static str,
}

/// e^{-2πi t} with the argument reduced mod 1 first.
fn cis_neg(t: f64) -> Complex64 {
    let r = t - t.round();
    let (s, c) = (TAU * r).sin_cos();
    Complex64::new(c, -s)
}

/// ∫_0^L e^{-2πi ξ t} dt = e^{-πiξL} sin(πξL)/(πξ).
pub fn segment_transform(length: f64, xi: f64) -> OracleResult<Complex64> {
    let value = if xi == 0.0 {
        Complex64::new(length, 0.0)
    } else {
        // sin(πξL) via the reduced argument so that ξL ∈ ℤ gives exact zeros
        let u = xi * length;
        let n = u.round();
        let sign = if n.rem_euclid(2.0) == 0.0 { 1.0 } else { -1.0 };
        let s = sign * (PI * (u - n)).sin();
        cis_neg(0.5 * u) * (s / (PI * xi))
    };
    OracleResult { value, error_bound: 4.0 * f64::EPSILON * length, method: "closed form" }
}

/// Transform of Lebesgue measure on [0, L]^k × {0}^{d-k} at ξ.
pub fn plane_piece_transform(length: f64, k: usize, xi: &[f64]) -> OracleResult<Complex64> {
    let mut value = Complex64::new(1.0, 0.0);
    for &x in xi.iter().take(k) {
        value *= segment_transform(length, x).value;
    }
    OracleResult { value, error_bound: 4.0 * k as f64 * f64::EPSILON * length.powi(k as i32), method: "closed form" }
}

// Gauss–Kronrod 21/10 nodes and weights on [-1, 1].
const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_352,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_36,
    0.295_524_224_714_752_87,
];

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[10] * fc;
    let mut g = 0.0;
    for j in 0..10 {
        let s = f(c - h * XGK[j]) + f(c + h * XGK[j]);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, (k - g).abs() * h)
}

/// Adaptive bisection until every piece's Kronrod-Gauss gap is below its
/// share of `tol`; returns (value, summed gap). The gap bounds the error of
/// the 21-point rule by a wide margin once pieces are resolved.
pub fn adaptive_gk21<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, pieces: usize, tol: f64) -> (f64, f64) {
    let mut stack: Vec<(f64, f64, u32)> = Vec::new();
    let w = (b - a) / pieces.max(1) as f64;
    for i in (0..pieces.max(1)).rev() {
        stack.push((a + i as f64 * w, a + (i + 1) as f64 * w, 0));
    }
    let mut value = 0.0;
    let mut err = 0.0;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, e) = gk21(&f, lo, hi);
        if e <= tol * (hi - lo) / (b - a) || depth >= 40 {
            value += v;
            err += e;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    (value, err)
}

/// ∮ e^{-2πi ρ r cos θ} r dθ for the circle of radius r: arc length measure,
/// radial frequency ρ. Real by symmetry; computed as 2r∫_0^π cos(2πρr cos θ) dθ.
pub fn circle_transform(radius: f64, rho: f64) -> OracleResult<f64> {
    let z = TAU * rho * radius;
    let pieces = (z.abs() / 2.0).ceil() as usize + 8;
    let (v, e) = adaptive_gk21(|t| (z * t.cos()).cos(), 0.0, PI, pieces, 1e-10);
    OracleResult { value: 2.0 * radius * v, error_bound: 2.0 * radius * e + 64.0 * f64::EPSILON * radius * (1.0 + z.abs()), method: "adaptive Gauss-Kronrod 21" }
}

/// Surface measure of the sphere of radius r in ℝ³: 4πr² sin(2πρr)/(2πρr).
pub fn sphere_transform(radius: f64, rho: f64) -> OracleResult<f64> {
    let z = TAU * rho * radius;
    let area = 4.0 * PI * radius * radius;
    let value = if z == 0.0 { area } else { area * z.sin() / z };
    OracleResult { value, error_bound: 8.0 * f64::EPSILON * area * (1.0 + z.abs()), method: "closed form" }
}

/// Depth-J Cantor measure with ratio r (uniform mass on the centers of the
/// 2^J level-J intervals of [0, 1]) through the self-similar product
/// e^{-πiξr^J} Π_{i<J} (1 + e^{-2πiξ(1-r)r^i})/2.
pub fn cantor_transform(ratio: f64, depth: u32, xi: f64) -> OracleResult<Complex64> {
    assert!(ratio > 0.0 && ratio <= 0.5, "ratio must be in (0, 1/2]");
    assert!(depth <= 40, "depth at most 40");
    let mut value = cis_neg(0.5 * xi * ratio.powi(depth as i32));
    let mut scale = 1.0 - ratio;
    for _ in 0..depth {
        value *= (Complex64::new(1.0, 0.0) + cis_neg(xi * scale)) * 0.5;
        scale *= ratio;
    }
    let rounding = (depth as f64 + 2.0) * 8.0 * f64::EPSILON * (1.0 + (xi * (1.0 - ratio)).abs() * f64::EPSILON);
    OracleResult { value, error_bound: rounding, method: "self-similar product" }
}

/// |μ̂_J(ξ) − μ̂_∞(ξ)| ≤ π|ξ| r^J: each atom stands for an interval of
/// length r^J, and e^{-2πiξx} is 2π|ξ|-Lipschitz.
pub fn cantor_depth_tail_bound(ratio: f64, depth: u32, xi: f64) -> f64 {
    PI * xi.abs() * ratio.powi(depth as i32)
}

fn isqrt(m: u64) -> u64 {
    let mut r = (m as f64).sqrt() as u64;
    while r * r > m {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= m {
        r += 1;
    }
    r
}

/// All n ∈ ℤ^d with |n|² = m, in lexicographic order.
pub fn lattice_sphere_points(d: usize, m: u64) -> Vec<Vec<i64>> {
    fn rec(d: usize, m: u64, prefix: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if d == 1 {
            let r = isqrt(m);
            if r * r == m {
                let mut vals = vec![-(r as i64), r as i64];
                vals.dedup();
                for v in vals {
                    let mut p = prefix.clone();
                    p.push(v);
                    out.push(p);
                }
            }
            return;
        }
        let r = isqrt(m) as i64;
        for v in -r..=r {
            prefix.push(v);
            rec(d - 1, m - (v * v) as u64, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if d > 0 {
        rec(d, m, &mut Vec::new(), &mut out);
    }
    out
}

/// #{n ∈ ℤ^d : |n|² = m}.
pub fn lattice_band_count(d: usize, m: u64) -> u64 {
    lattice_sphere_points(d, m).len() as u64
}

/// Band energies (Σ_{|n|²=m} |û(n)|²)^{1/2} for m = 0..=m_max, enumerating
/// each lattice sphere separately.
pub fn torus_band_energies<F: Fn(&[i64]) -> Complex64>(d: usize, m_max: u64, coeff: F) -> Vec<OracleResult<f64>> {
    (0..=m_max)
        .map(|m| {
            let pts = lattice_sphere_points(d, m);
            let mut s = 0.0;
            let mut c = 0.0;
            for n in &pts {
                let a = coeff(n).norm_sqr();
                // Kahan
                let y = a - c;
                let t = s + y;
                c = (t - s) - y;
                s = t;
            }
            let e = s.sqrt();
            OracleResult { value: e, error_bound: 4.0 * (pts.len() as f64 + 1.0) * f64::EPSILON * e, method: "lattice enumeration" }
        })
        .collect()
}

/// Coefficients of the point mass at x0 on T^d: e^{-2πi n·x0}.
pub fn torus_dirac_coefficient(x0: &[f64], n: &[i64]) -> Complex64 {
    let t: f64 = x0.iter().zip(n).map(|(x, k)| x * *k as f64).sum();
    cis_neg(t)
}

/// Coefficients of the normalized coordinate sub-torus {x_j = 0 for j not
/// in `along`}: 1 if n vanishes on the `along` axes, else 0.
pub fn torus_subtorus_coefficient(along: &[usize], n: &[i64]) -> Complex64 {
    if along.iter().all(|&a| n[a] == 0) {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::new(0.0, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j0_series(x: f64) -> f64 {
        // Σ (-1)^k (x/2)^{2k} / (k!)²
        let q = -(x * x) / 4.0;
        let mut term = 1.0;
        let mut s = 1.0;
        for k in 1..80 {
            term *= q / (k as f64 * k as f64);
            s += term;
        }
        s
    }

    #[test]
    fn segment_trivial_values() {
        assert_eq!(segment_transform(2.0, 0.0).value, Complex64::new(2.0, 0.0));
        assert!(segment_transform(2.0, 0.5).value.norm() < 1e-15);
        let l = 3.0;
        assert!((segment_transform(l, 1.0 / (2.0 * l)).value.norm() - 2.0 * l / PI).abs() < 1e-12);
    }

    #[test]
    fn circle_matches_bessel_series() {
        assert!((circle_transform(1.0, 0.0).value - TAU).abs() < 1e-13);
        for rho in [0.1, 0.7, 1.1, 1.3] {
            let o = circle_transform(1.0, rho);
            let want = TAU * j0_series(TAU * rho);
            assert!((o.value - want).abs() < 1e-11, "{rho}: {} vs {want}", o.value);
            assert!(o.error_bound <= 1e-9);
        }
    }

    #[test]
    fn circle_decays_like_rho_to_minus_half() {
        let mut worst: f64 = 0.0;
        for i in 0..200 {
            let rho = 10.0 * 100f64.powf(i as f64 / 199.0);
            let o = circle_transform(1.0, rho);
            assert!(o.error_bound <= 1e-9, "{rho} {}", o.error_bound);
            worst = worst.max(o.value.abs() * rho.sqrt());
        }
        // stationary phase: |2πJ0(2πρ)| √ρ → 2 |cos(·)|
        assert!(worst < 2.1, "{worst}");
    }

    #[test]
    fn sphere_at_zero_is_area() {
        assert_eq!(sphere_transform(2.0, 0.0).value, 16.0 * PI);
        assert!(sphere_transform(1.0, 0.5).value.abs() < 1e-14);
    }

    #[test]
    fn cantor_matches_atom_sum() {
        let (r, j) = (1.0f64 / 3.0, 8u32);
        // atoms by explicit binary expansion
        let len = r.powi(j as i32);
        let atoms: Vec<f64> = (0..1u32 << j)
            .map(|bits| (0..j).map(|i| if bits >> i & 1 == 1 { (1.0 - r) * r.powi(i as i32) } else { 0.0 }).sum::<f64>() + len / 2.0)
            .collect();
        for k in 0..100 {
            let xi = -37.3 + 0.917 * k as f64;
            let direct: Complex64 = atoms.iter().map(|a| cis_neg(xi * a)).sum::<Complex64>() / atoms.len() as f64;
            let o = cantor_transform(r, j, xi);
            assert!((o.value - direct).norm() < 1e-10);
        }
        assert_eq!(cantor_transform(r, j, 0.0).value, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn half_ratio_cantor_is_the_segment() {
        for xi in [0.3, 1.7, 5.0, 12.25] {
            let c = cantor_transform(0.5, 20, xi);
            let s = segment_transform(1.0, xi);
            assert!((c.value - s.value).norm() <= cantor_depth_tail_bound(0.5, 20, xi) + 1e-14);
        }
    }

    #[test]
    fn lattice_counts() {
        assert_eq!(lattice_band_count(2, 1), 4);
        assert_eq!(lattice_band_count(2, 3), 0);
        assert_eq!(lattice_band_count(2, 25), 12);
        assert_eq!(lattice_band_count(1, 49), 2);
        assert_eq!(lattice_band_count(1, 0), 1);
        assert_eq!(lattice_band_count(3, 3), 8);
        // Σ_{m ≤ M} r_2(m) = #{|n|² ≤ M}
        let total: u64 = (0..=100).map(|m| lattice_band_count(2, m)).sum();
        let mut direct = 0;
        for a in -10i64..=10 {
            for b in -10i64..=10 {
                if a * a + b * b <= 100 {
                    direct += 1;
                }
            }
        }
        assert_eq!(total, direct);
    }

    #[test]
    fn dirac_band_energies() {
        let e = torus_band_energies(1, 16 * 16, |n| torus_dirac_coefficient(&[0.0], n));
        assert!((e[0].value - 1.0).abs() < 1e-15);
        for k in 1..=16u64 {
            assert!((e[(k * k) as usize].value - 2f64.sqrt()).abs() < 1e-15);
        }
        assert_eq!(e[2].value, 0.0);
    }
}
