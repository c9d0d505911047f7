//! Small numerical kernels shared by the pipelines: compensated sums,
//! certified table interpolation, least squares and quadrature.

use num_complex::Complex64;
use std::ops::{Add, Mul};

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Compensated sum of a slice.
pub fn neumaier_sum(xs: &[f64]) -> f64 {
    xs.iter().copied().collect::<NeumaierSum>().value()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexNeumaier {
    pub re: NeumaierSum,
    pub im: NeumaierSum,
}

impl ComplexNeumaier {
    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// `e^{-2πi t}` with the argument reduced mod 1 before scaling, which keeps
/// full relative accuracy for large `t`.
#[inline]
pub fn expi_neg(t: f64) -> Complex64 {
    let r = t - t.round();
    let (s, c) = (std::f64::consts::TAU * r).sin_cos();
    Complex64::new(c, -s)
}

/// Value types a [`UniformTable`] can hold. `mirror` gives the value at `-x`
/// for tables of functions with `g(-x) = mirror(g(x))`.
pub trait TableValue: Copy + Default + Add<Output = Self> + Mul<f64, Output = Self> + Send + Sync {
    fn mirror(self) -> Self;
}

impl TableValue for f64 {
    #[inline]
    fn mirror(self) -> Self {
        self
    }
}

impl TableValue for Complex64 {
    #[inline]
    fn mirror(self) -> Self {
        self.conj()
    }
}

/// Samples of a function on `x0 + i·step`, interpolated with a centered
/// Lagrange stencil of even order `q`.
///
/// If `symmetric` is set the table starts at `x0 = 0` and values at negative
/// indices are taken from `mirror` of the positive ones.
#[derive(Debug, Clone)]
pub struct UniformTable<T> {
    pub x0: f64,
    pub step: f64,
    pub values: Vec<T>,
    pub order: usize,
    pub symmetric: bool,
    denoms: [f64; 16],
}

impl<T: TableValue> UniformTable<T> {
    pub fn new(x0: f64, step: f64, values: Vec<T>, order: usize, symmetric: bool) -> Self {
        assert!(order >= 2 && order.is_multiple_of(2) && order <= 16, "stencil order must be even and at most 16");
        assert!(values.len() >= order, "table shorter than its stencil");
        assert!(!symmetric || x0 == 0.0);
        Self { x0, step, values, order, symmetric, denoms: lagrange_denominators(order) }
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + self.step * (self.values.len() - 1) as f64
    }

    /// Interpolated value, or `None` outside the tabulated range.
    #[inline]
    pub fn eval(&self, x: f64) -> Option<T> {
        let n = self.values.len() as isize;
        let u = (x - self.x0) / self.step;
        if !(u >= if self.symmetric { -(n as f64 - 1.0) } else { 0.0 }) || u > (n - 1) as f64 {
            return None;
        }
        let q = self.order as isize;
        let half = q / 2;
        let mut i0 = u.floor() as isize - (half - 1);
        if !self.symmetric {
            i0 = i0.clamp(0, n - q);
        } else {
            i0 = i0.min(n - q);
            if i0 < -(n - 1) {
                i0 = -(n - 1);
            }
        }
        let t = u - i0 as f64;
        // barycentric-free direct Lagrange with prefix/suffix products
        let mut pre = [1.0f64; 17];
        let mut suf = [1.0f64; 17];
        let qn = q as usize;
        debug_assert!(qn <= 16);
        for j in 0..qn {
            pre[j + 1] = pre[j] * (t - j as f64);
        }
        for j in (0..qn).rev() {
            suf[j] = suf[j + 1] * (t - j as f64);
        }
        let denoms = &self.denoms;
        let mut acc = T::default();
        for j in 0..qn {
            let w = pre[j] * suf[j + 1] * denoms[j];
            let idx = i0 + j as isize;
            let v = if idx >= 0 {
                self.values[idx as usize]
            } else {
                self.values[(-idx) as usize].mirror()
            };
            acc = acc + v * w;
        }
        Some(acc)
    }

    /// Certified interpolation error given a bound `m_q` on the `q`-th
    /// derivative of the tabulated function.
    pub fn error_bound(&self, m_q: f64) -> f64 {
        lagrange_error_bound(self.order, self.step, m_q)
    }
}

/// `1/∏_{k≠j}(j-k)` for nodes `0..q`.
fn lagrange_denominators(q: usize) -> [f64; 16] {
    let mut out = [0.0; 16];
    for (j, o) in out.iter_mut().enumerate().take(q) {
        let mut p = 1.0;
        for k in 0..q {
            if k != j {
                p *= j as f64 - k as f64;
            }
        }
        *o = 1.0 / p;
    }
    out
}

/// `m_q · ω_q / q! · step^q`. Edge cells use a shifted stencil whose node
/// polynomial is larger; the bound below covers that with the worst cell.
pub fn lagrange_error_bound(q: usize, step: f64, m_q: f64) -> f64 {
    let worst = (0..=2000)
        .map(|i| {
            let t = i as f64 / 2000.0;
            (0..q).map(|j| (t - j as f64).abs()).product::<f64>()
        })
        .fold(0.0, f64::max);
    let fact: f64 = (1..=q).map(|k| k as f64).product();
    m_q * worst / fact * step.powi(q as i32)
}

/// Ordinary least squares line `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square of the residuals.
    pub rms_residual: f64,
    pub residual_sum_sq: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = neumaier_sum(xs) / n as f64;
    let my = neumaier_sum(ys) / n as f64;
    let sxx: NeumaierSum = xs.iter().map(|x| (x - mx) * (x - mx)).collect();
    let sxy: NeumaierSum = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    if sxx.value() <= 0.0 {
        return None;
    }
    let slope = sxy.value() / sxx.value();
    let intercept = my - slope * mx;
    let rss: NeumaierSum = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .collect();
    Some(LineFit {
        slope,
        intercept,
        rms_residual: (rss.value() / n as f64).sqrt(),
        residual_sum_sq: rss.value(),
    })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

const GK15_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const GK15_WK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const GK15_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * GK15_WK[7];
    let mut g = fc * GK15_WG[3];
    for j in 0..7 {
        let dx = h * GK15_X[j];
        let s = f(c - dx) + f(c + dx);
        k += GK15_WK[j] * s;
        if j % 2 == 1 {
            g += GK15_WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature. Returns value and error estimate.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> (f64, f64) {
    let mut parts = vec![(a, b, gk15(&f, a, b))];
    for _ in 0..20_000 {
        let total: f64 = parts.iter().map(|p| p.2 .0).sum();
        let err: f64 = parts.iter().map(|p| p.2 .1).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let (i, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .expect("nonempty");
        let (lo, hi, _) = parts.swap_remove(i);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        parts.push((lo, mid, gk15(&f, lo, mid)));
        parts.push((mid, hi, gk15(&f, mid, hi)));
    }
    parts.sort_by(|x, y| x.0.total_cmp(&y.0));
    let v: NeumaierSum = parts.iter().map(|p| p.2 .0).collect();
    (v.value(), parts.iter().map(|p| p.2 .1).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(neumaier_sum(&xs), 2.0);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(12);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(22)).sum();
        assert!((s - 2.0 / 23.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_quadrature_on_smooth_and_peaked() {
        let (v, e) = integrate(|x: f64| x.exp(), 0.0, 1.0, 1e-14, 1e-14);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-13, "{v} {e}");
        let (v, _) = integrate(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-12, 1e-13);
        let exact = 2.0 * (1.0 / 1e-2) * (1.0f64 / 1e-2).atan();
        assert!((v - exact).abs() / exact < 1e-11);
    }

    #[test]
    fn table_interpolation_meets_its_bound() {
        let step = 0.05;
        let vals: Vec<f64> = (0..200).map(|i| (i as f64 * step).cos()).collect();
        let t = UniformTable::new(0.0, step, vals, 8, true);
        let bound = t.error_bound(1.0);
        for i in 0..1000 {
            let x = -9.9 + i as f64 * 0.0197;
            let e = (t.eval(x).unwrap() - x.cos()).abs();
            assert!(e <= bound + 1e-15, "x={x} e={e} bound={bound}");
        }
        assert!(t.eval(10.0).is_none());
    }

    #[test]
    fn complex_table_mirrors_with_conjugate() {
        let step = 0.01;
        let vals: Vec<Complex64> = (0..100).map(|i| expi_neg(0.3 * i as f64 * step)).collect();
        let t = UniformTable::new(0.0, step, vals, 6, true);
        let z = t.eval(-0.5).unwrap();
        assert!((z - expi_neg(-0.15)).norm() < 1e-12);
    }

    #[test]
    fn line_fit_exact() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-15 && f.rms_residual < 1e-15);
    }
}
