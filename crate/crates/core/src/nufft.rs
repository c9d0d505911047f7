//! One-dimensional type-1 nonuniform FFT with an exponential-of-semicircle
//! spreading kernel.
//!
//! Computes F_k = Σ_j c_j e^{-2πi k s t_j} for consecutive integers
//! k = k_start .. k_start + count.

use crate::numeric::gauss_legendre;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::TAU;

/// Kernel width in fine-grid cells.
const WIDTH: usize = 16;
/// Oversampling factor of the fine grid.
const SIGMA: usize = 2;
const BETA: f64 = 2.30 * WIDTH as f64;

#[inline]
fn kernel(z: f64) -> f64 {
    let u = 2.0 * z / WIDTH as f64;
    let u2 = u * u;
    if u2 >= 1.0 {
        0.0
    } else {
        (BETA * ((1.0 - u2).sqrt() - 1.0)).exp()
    }
}

/// ∫ kernel(z) e^{-2πiνz} dz, by Gauss–Legendre on the support.
fn kernel_hat(nus: &[f64]) -> Vec<f64> {
    let (x, w) = gauss_legendre(256);
    let half = WIDTH as f64 / 2.0;
    // even kernel: 2∫_0^{w/2} φ(z) cos(2πνz) dz
    let nodes: Vec<(f64, f64)> = x.iter().zip(&w).map(|(x, w)| (half * 0.5 * (x + 1.0), half * 0.5 * w)).collect();
    let vals: Vec<f64> = nodes.iter().map(|(z, _)| kernel(*z)).collect();
    nus.iter()
        .map(|nu| 2.0 * nodes.iter().zip(&vals).map(|((z, wz), v)| wz * v * (TAU * nu * z).cos()).sum::<f64>())
        .collect()
}

/// Type-1 transform. Relative accuracy ~1e-13 of Σ|c_j|.
pub fn nufft_type1(t: &[f64], c: &[Complex64], s: f64, k_start: i64, count: usize) -> Vec<Complex64> {
    assert_eq!(t.len(), c.len());
    if count == 0 {
        return Vec::new();
    }
    // shift to centered modes k' = k - k0 in [-m/2, m/2)
    let m = count.max(2).next_multiple_of(2);
    let k0 = k_start + (m / 2) as i64;
    let nf = (SIGMA * m).max(2 * WIDTH).next_power_of_two();
    let mut fine = vec![Complex64::new(0.0, 0.0); nf];
    let half = WIDTH as f64 / 2.0;
    for (tj, cj) in t.iter().zip(c) {
        let x = s * tj;
        let xf = x - x.floor();
        // pre-rotate by the k0 shift; integer k makes x periodic with period 1
        let ph = (k0 as f64 * x) - (k0 as f64 * x).round();
        let (sn, cs) = (TAU * ph).sin_cos();
        let cj = cj * Complex64::new(cs, -sn);
        let pos = nf as f64 * xf;
        let l0 = (pos - half).ceil() as i64;
        for l in l0..l0 + WIDTH as i64 + 1 {
            let kv = kernel(l as f64 - pos);
            if kv != 0.0 {
                let idx = l.rem_euclid(nf as i64) as usize;
                fine[idx] += cj * kv;
            }
        }
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(nf).process(&mut fine);
    let nus: Vec<f64> = (0..count).map(|i| (i as i64 + k_start - k0) as f64 / nf as f64).collect();
    let hat = kernel_hat(&nus);
    (0..count)
        .map(|i| {
            let kp = i as i64 + k_start - k0;
            fine[kp.rem_euclid(nf as i64) as usize] / hat[i]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::expi_neg;
    use rand::{Rng, SeedableRng};

    #[test]
    fn matches_direct_sums() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 300;
        let t: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.3..2.1)).collect();
        let c: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let l1: f64 = c.iter().map(|z| z.norm()).sum();
        for (s, k_start, count) in [(0.37, -40i64, 81usize), (1.0 / 12.0, 0, 1000), (0.01, -517, 1034)] {
            let f = nufft_type1(&t, &c, s, k_start, count);
            for (i, fi) in f.iter().enumerate() {
                let k = (k_start + i as i64) as f64;
                let d: Complex64 = t.iter().zip(&c).map(|(tj, cj)| cj * expi_neg(k * s * tj)).sum();
                assert!((fi - d).norm() <= 1e-12 * l1, "s={s} k={k} err={}", (fi - d).norm() / l1);
            }
        }
    }
}
