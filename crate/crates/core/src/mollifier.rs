//! Approximate identities ψ in two families.
//!
//! * [`Family::SpaceCompactBump`]: ψ(x) = exp(-1/(1-|x|²))/Z_d on the unit
//!   ball. ψ̂ has no closed form, so it is tabulated once per dimension from
//!   the Abel projection of the bump and a trapezoid cosine transform.
//! * [`Family::BandLimited`]: ψ̂(τ) = P(|τ|/A) with P a smooth bump on
//!   [-1, 1] and P(0) = 1. Its spectral weight ψ(s) = ∫ψ̂(t)cos(st)dt / ∫ψ̂
//!   is what the torus multiplier uses.

use crate::error::{invalid, Error, Result};
use crate::numeric::{integrate, lagrange_error_bound, UniformTable};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

/// Shape parameter of the band-limited profile
/// P(t) = exp(β(√(1-t²) - 1) + 1 - 1/(1-t²)).
pub const BAND_PROFILE_BETA: f64 = 24.0;

/// Largest window multiple T/R the bump tail certificate will hand out.
pub const K_TAIL: f64 = 256.0;

const BUMP_TABLE_STEP: f64 = 1.0 / 256.0;
const BUMP_TABLE_MAX: f64 = 64.0;
const BUMP_TABLE_ORDER: usize = 6;
const BUMP_X_STEPS: usize = 512;

const WEIGHT_TABLE_STEP: f64 = 1.0 / 16.0;
const WEIGHT_TABLE_MAX: f64 = 256.0;
const WEIGHT_TABLE_ORDER: usize = 10;
const WEIGHT_T_STEPS: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    SpaceCompactBump,
    BandLimited,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::SpaceCompactBump => "space-compact-bump",
            Family::BandLimited => "band-limited",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "space-compact-bump" | "bump" => Ok(Family::SpaceCompactBump),
            "band-limited" | "band" => Ok(Family::BandLimited),
            _ => Err(invalid("mollifier.family", format!("unknown family `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    UnitIntegral,
    UnitValue,
}

/// Radial tables for the bump in one dimension.
#[derive(Debug)]
struct BumpTables {
    /// ψ̂_d(ρ), ρ = |τ|
    freq: UniformTable<f64>,
    /// 2 × running maximum of |ψ̂_d| from the right, on the table nodes
    envelope: Vec<f64>,
    /// ∫_{|τ| ≤ ρ} |ψ̂_d| by the trapezoid rule on the table nodes
    inner_mass: Vec<f64>,
    /// S_{d-1} ∫_ρ^∞ envelope(r) r^{d-1} dr, upper Riemann sums
    outer_mass: Vec<f64>,
    /// constant a in the envelope B·exp(-a(√ρ - √ρ_max)) past the table
    decay: f64,
    tail_amp: f64,
    z: f64,
    interp_error: f64,
}

fn bump_profile(r2: f64) -> f64 {
    if r2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r2)).exp()
    }
}

/// ∫ over the (d-1)-dimensional slice of the unnormalized bump at height x.
fn bump_projection(d: usize, x: f64) -> f64 {
    let x2 = x * x;
    if x2 >= 1.0 {
        return 0.0;
    }
    match d {
        1 => bump_profile(x2),
        2 => {
            let s_max = (1.0 - x2).sqrt();
            2.0 * integrate(|s| bump_profile(x2 + s * s), 0.0, s_max, 1e-300, 1e-14).0
        }
        3 => PI * integrate(bump_profile, x2, 1.0, 1e-300, 1e-14).0,
        _ => unreachable!("dimension checked by caller"),
    }
}

fn sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => TAU,
        3 => 4.0 * PI,
        _ => unreachable!(),
    }
}

fn build_bump_tables(d: usize) -> BumpTables {
    let dx = 1.0 / BUMP_X_STEPS as f64;
    let proj: Vec<f64> = (0..=BUMP_X_STEPS).map(|j| bump_projection(d, j as f64 * dx)).collect();
    // trapezoid over [-1, 1] of an even function vanishing to all orders at ±1
    let cos_sum = |rho: f64| -> f64 {
        let mut s = proj[0];
        for (j, p) in proj.iter().enumerate().skip(1) {
            s += 2.0 * p * (TAU * rho * j as f64 * dx).cos();
        }
        s * dx
    };
    let z_proj = cos_sum(0.0);
    let n = (BUMP_TABLE_MAX / BUMP_TABLE_STEP).round() as usize + 1;
    let vals: Vec<f64> = (0..n).map(|i| cos_sum(i as f64 * BUMP_TABLE_STEP) / z_proj).collect();

    let mut envelope = vec![0.0; n];
    let mut run: f64 = 0.0;
    for i in (0..n).rev() {
        run = run.max(vals[i].abs());
        envelope[i] = 2.0 * run;
    }
    // past the table: sqrt-exponential envelope starting from twice the
    // largest value over the last quarter of the table. Flooring the table
    // envelope at that amplitude keeps the whole bound monotone.
    let decay = 0.9 * (4.0 * PI).sqrt();
    let tail_amp = envelope[3 * n / 4];
    let rho_max = BUMP_TABLE_MAX;
    for e in envelope.iter_mut() {
        *e = e.max(tail_amp);
    }
    let area = sphere_area(d);
    let mut inner_mass = vec![0.0; n];
    for i in 1..n {
        let (r0, r1) = ((i - 1) as f64 * BUMP_TABLE_STEP, i as f64 * BUMP_TABLE_STEP);
        let f0 = vals[i - 1].abs() * r0.powi(d as i32 - 1);
        let f1 = vals[i].abs() * r1.powi(d as i32 - 1);
        inner_mass[i] = inner_mass[i - 1] + area * 0.5 * (f0 + f1) * BUMP_TABLE_STEP;
    }
    let far = {
        let f = |r: f64| tail_amp * (-decay * (r.sqrt() - rho_max.sqrt())).exp() * r.powi(d as i32 - 1);
        area * integrate(f, rho_max, rho_max + 4000.0, 1e-300, 1e-12).0
    };
    let mut outer_mass = vec![0.0; n];
    outer_mass[n - 1] = far;
    for i in (0..n - 1).rev() {
        let r1 = (i + 1) as f64 * BUMP_TABLE_STEP;
        outer_mass[i] = outer_mass[i + 1] + area * envelope[i] * r1.powi(d as i32 - 1) * BUMP_TABLE_STEP;
    }
    let z = {
        let radial = integrate(|r| bump_profile(r * r) * r.powi(d as i32 - 1), 0.0, 1.0, 1e-300, 1e-15).0;
        radial * area
    };
    let freq = UniformTable::new(0.0, BUMP_TABLE_STEP, vals, BUMP_TABLE_ORDER, true);
    // |d^q/dρ^q ψ̂| ≤ (2π)^q ∫|x₁|^q ψ ≤ (2π)^q since ψ lives in the unit ball
    let interp_error = lagrange_error_bound(BUMP_TABLE_ORDER, BUMP_TABLE_STEP, TAU.powi(BUMP_TABLE_ORDER as i32));
    BumpTables { freq, envelope, inner_mass, outer_mass, decay, tail_amp, z, interp_error }
}

fn bump_tables(d: usize) -> &'static BumpTables {
    static TABLES: [OnceLock<BumpTables>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    TABLES[d - 1].get_or_init(|| build_bump_tables(d))
}

/// The band-limited profile P on [-1, 1], P(0) = 1.
pub fn band_profile(t: f64) -> f64 {
    let t2 = t * t;
    if t2 >= 1.0 {
        return 0.0;
    }
    (BAND_PROFILE_BETA * ((1.0 - t2).sqrt() - 1.0) + 1.0 - 1.0 / (1.0 - t2)).exp()
}

#[derive(Debug)]
struct WeightTables {
    /// Ψ(s) = ∫P(t)cos(st)dt / ∫P
    weight: UniformTable<f64>,
    /// 2 × running max of |Ψ| from the right
    envelope: Vec<f64>,
    /// ∫_{-1}^{1} P
    mass: f64,
    interp_error: f64,
}

fn build_weight_tables() -> WeightTables {
    let dt = 1.0 / WEIGHT_T_STEPS as f64;
    let prof: Vec<f64> = (0..=WEIGHT_T_STEPS).map(|j| band_profile(j as f64 * dt)).collect();
    let cos_sum = |s: f64| -> f64 {
        let mut acc = prof[0];
        for (j, p) in prof.iter().enumerate().skip(1) {
            acc += 2.0 * p * (s * j as f64 * dt).cos();
        }
        acc * dt
    };
    let mass = cos_sum(0.0);
    let n = (WEIGHT_TABLE_MAX / WEIGHT_TABLE_STEP).round() as usize + 1;
    let vals: Vec<f64> = (0..n).map(|i| cos_sum(i as f64 * WEIGHT_TABLE_STEP) / mass).collect();
    let mut envelope = vec![0.0; n];
    let mut run: f64 = 0.0;
    for i in (0..n).rev() {
        run = run.max(vals[i].abs());
        envelope[i] = 2.0 * run;
    }
    // |Ψ^{(q)}| ≤ ∫|t|^q P / ∫P ≤ 1
    let interp_error = lagrange_error_bound(WEIGHT_TABLE_ORDER, WEIGHT_TABLE_STEP, 1.0);
    WeightTables {
        weight: UniformTable::new(0.0, WEIGHT_TABLE_STEP, vals, WEIGHT_TABLE_ORDER, true),
        envelope,
        mass,
        interp_error,
    }
}

fn weight_tables() -> &'static WeightTables {
    static T: OnceLock<WeightTables> = OnceLock::new();
    T.get_or_init(build_weight_tables)
}

/// An approximate identity in dimension `dim`.
#[derive(Debug, Clone)]
pub struct Mollifier {
    family: Family,
    dim: usize,
    band_radius: f64,
}

impl Mollifier {
    pub fn new(family: Family, dim: usize, band_radius: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(invalid("dimension", format!("{dim} is not in 1..=3")));
        }
        if !(band_radius.is_finite() && band_radius > 0.0) {
            return Err(invalid("mollifier.band_radius", "must be positive and finite"));
        }
        if family == Family::SpaceCompactBump && band_radius != 1.0 {
            return Err(invalid("mollifier.band_radius", "the bump has space radius 1 and no band"));
        }
        Ok(Self { family, dim, band_radius })
    }

    /// Default bump in dimension `dim`.
    pub fn bump(dim: usize) -> Result<Self> {
        Self::new(Family::SpaceCompactBump, dim, 1.0)
    }

    /// Default band-limited profile with A = 1.
    pub fn band_limited(dim: usize) -> Result<Self> {
        Self::new(Family::BandLimited, dim, 1.0)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Support radius of ψ in space, `None` when unbounded.
    pub fn space_radius(&self) -> Option<f64> {
        match self.family {
            Family::SpaceCompactBump => Some(1.0),
            Family::BandLimited => None,
        }
    }

    /// Support radius A of ψ̂, `None` when unbounded.
    pub fn band_radius(&self) -> Option<f64> {
        match self.family {
            Family::SpaceCompactBump => None,
            Family::BandLimited => Some(self.band_radius),
        }
    }

    pub fn normalization(&self) -> Normalization {
        match self.family {
            Family::SpaceCompactBump => Normalization::UnitIntegral,
            Family::BandLimited => Normalization::UnitValue,
        }
    }

    /// ψ̂ at radial frequency ρ = |τ|.
    #[inline]
    pub fn freq_radial(&self, rho: f64) -> f64 {
        let rho = rho.abs();
        match self.family {
            Family::SpaceCompactBump => {
                let t = bump_tables(self.dim);
                t.freq.eval(rho).unwrap_or(0.0)
            }
            Family::BandLimited => band_profile(rho / self.band_radius),
        }
    }

    /// ψ̂(τ) for a frequency vector.
    pub fn eval_frequency(&self, tau: &[f64]) -> f64 {
        debug_assert_eq!(tau.len(), self.dim);
        self.freq_radial(tau.iter().map(|t| t * t).sum::<f64>().sqrt())
    }

    /// Space-side ψ(x). Only available in closed form for the bump.
    pub fn eval_space(&self, x: &[f64]) -> Option<f64> {
        match self.family {
            Family::SpaceCompactBump => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                Some(bump_profile(r2) / bump_tables(self.dim).z)
            }
            Family::BandLimited => None,
        }
    }

    /// Spectral weight ψ(s) used by the torus multiplier: the even function
    /// whose Fourier transform is supported in [-A, A], with ψ(0) = 1.
    pub fn spectral_weight(&self, s: f64) -> Result<f64> {
        match self.family {
            Family::BandLimited => {
                let u = (s * self.band_radius).abs();
                let t = weight_tables();
                Ok(t.weight.eval(u).unwrap_or(0.0))
            }
            Family::SpaceCompactBump => {
                Err(Error::Unsupported("the spectral multiplier needs a band-limited mollifier".into()))
            }
        }
    }

    /// Certified bound on sup_{|s'| ≥ s} |ψ(s')| for the spectral weight.
    pub fn spectral_tail_bound(&self, s: f64) -> Result<f64> {
        if self.family != Family::BandLimited {
            return Err(Error::Unsupported("spectral weight needs a band-limited mollifier".into()));
        }
        let t = weight_tables();
        let u = (s * self.band_radius).abs();
        let i = (u / WEIGHT_TABLE_STEP).floor() as usize;
        let last = t.envelope.len() - 1;
        Ok(t.envelope[i.min(last)] + t.interp_error)
    }

    /// Smallest s with `spectral_tail_bound(s) ≤ tol`, or `None` if the table
    /// does not reach that far.
    pub fn spectral_cutoff(&self, tol: f64) -> Result<Option<f64>> {
        self.spectral_tail_bound(0.0)?;
        let t = weight_tables();
        if tol <= t.interp_error {
            return Ok(None);
        }
        let i = t.envelope.iter().position(|e| e + t.interp_error <= tol);
        Ok(i.map(|i| i as f64 * WEIGHT_TABLE_STEP / self.band_radius))
    }

    /// ∫ψ̂ over ℝ for the band-limited family (A·∫P), the normalizer of ψ(s).
    pub fn band_profile_mass(&self) -> f64 {
        weight_tables().mass * self.band_radius
    }

    /// Certified bound on sup_{|τ| ≥ ρ} |ψ̂(τ)|. Monotone nonincreasing.
    pub fn tail_bound(&self, rho: f64) -> f64 {
        let rho = rho.abs();
        match self.family {
            Family::BandLimited => {
                if rho >= self.band_radius {
                    0.0
                } else {
                    band_profile(rho / self.band_radius)
                }
            }
            Family::SpaceCompactBump => {
                let t = bump_tables(self.dim);
                let i = (rho / BUMP_TABLE_STEP).floor() as usize;
                if i < t.envelope.len() {
                    t.envelope[i] + t.interp_error
                } else {
                    t.tail_amp * (-t.decay * (rho.sqrt() - BUMP_TABLE_MAX.sqrt())).exp() + t.interp_error
                }
            }
        }
    }

    /// Error bound of the tabulated ψ̂ (zero for closed forms).
    pub fn freq_error(&self) -> f64 {
        match self.family {
            Family::SpaceCompactBump => bump_tables(self.dim).interp_error,
            Family::BandLimited => 0.0,
        }
    }

    /// Window multiple c = T/R such that the |ψ̂(·/R)|-mass outside the ball
    /// of radius T is at most `eps_tail` times the mass inside. Scale free.
    pub fn window_multiple(&self, eps_tail: f64) -> Result<f64> {
        if !(eps_tail > 0.0 && eps_tail < 1.0) {
            return Err(invalid("eps_tail", format!("{eps_tail} is not in (0, 1)")));
        }
        match self.family {
            Family::BandLimited => Ok(self.band_radius),
            Family::SpaceCompactBump => {
                let t = bump_tables(self.dim);
                let n = t.inner_mass.len();
                // both masses are monotone in the index; first index that works
                let ok = |i: usize| t.outer_mass[i] <= eps_tail * t.inner_mass[i];
                if !ok(n - 1) {
                    // past the table only the analytic envelope remains
                    let area = sphere_area(self.dim);
                    let inner = t.inner_mass[n - 1];
                    let mut c = BUMP_TABLE_MAX;
                    while c <= K_TAIL {
                        let f = |r: f64| {
                            t.tail_amp * (-t.decay * (r.sqrt() - BUMP_TABLE_MAX.sqrt())).exp() * r.powi(self.dim as i32 - 1)
                        };
                        let outer = area * integrate(f, c, c + 4000.0, 1e-300, 1e-10).0;
                        if outer <= eps_tail * inner {
                            return Ok(c);
                        }
                        c *= 1.25;
                    }
                    return Err(Error::TailUnreachable { eps_tail, required: c });
                }
                let (mut lo, mut hi) = (0usize, n - 1);
                while lo < hi {
                    let mid = (lo + hi) / 2;
                    if ok(mid) {
                        hi = mid;
                    } else {
                        lo = mid + 1;
                    }
                }
                Ok(lo as f64 * BUMP_TABLE_STEP)
            }
        }
    }

    /// Frequency half width T for scale R. For the band-limited family this is
    /// exactly A·R.
    pub fn effective_truncation(&self, r: f64, eps_tail: f64) -> Result<f64> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(invalid("R", "must be positive and finite"));
        }
        Ok(self.window_multiple(eps_tail)? * r)
    }

    /// Upper bound on the relative mass of |ψ̂(·/R)| outside the window
    /// actually used, i.e. the epsTail certificate for multiple `c`.
    pub fn tail_fraction(&self, c: f64) -> f64 {
        match self.family {
            Family::BandLimited => {
                if c >= self.band_radius {
                    0.0
                } else {
                    1.0
                }
            }
            Family::SpaceCompactBump => {
                let t = bump_tables(self.dim);
                let i = ((c / BUMP_TABLE_STEP).floor() as usize).min(t.inner_mass.len() - 1);
                if t.inner_mass[i] <= 0.0 {
                    return f64::INFINITY;
                }
                t.outer_mass[i] / t.inner_mass[i]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::gauss_legendre;

    /// ψ̂ of the bump by direct radial quadrature in space, independent of
    /// the projection/trapezoid route used for the table.
    fn bump_hat_reference(d: usize, rho: f64) -> f64 {
        let z = bump_tables(d).z;
        let (x, w) = gauss_legendre(200);
        let radial = |r: f64| -> f64 {
            // angular average of e^{-2πi ρ r cosθ}
            let k = TAU * rho * r;
            match d {
                1 => 2.0 * k.cos(),
                2 => {
                    // 2π J0(k) by Gauss–Legendre on [0, π]
                    let s: f64 = x.iter().zip(&w).map(|(u, wi)| wi * (k * (PI * 0.5 * (u + 1.0)).cos()).cos()).sum();
                    s * PI * 0.5 * 2.0
                }
                3 => {
                    if k == 0.0 {
                        4.0 * PI
                    } else {
                        4.0 * PI * k.sin() / k
                    }
                }
                _ => unreachable!(),
            }
        };
        let v = integrate(|r| bump_profile(r * r) * r.powi(d as i32 - 1) * radial(r), 0.0, 1.0, 1e-300, 1e-13).0;
        v / z
    }

    #[test]
    fn bump_table_matches_independent_quadrature() {
        for d in 1..=3 {
            let m = Mollifier::bump(d).unwrap();
            for &rho in &[0.0, 0.1, 0.73, 1.5, 3.3, 7.9, 15.2] {
                let a = m.freq_radial(rho);
                let b = bump_hat_reference(d, rho);
                assert!((a - b).abs() < 1e-9, "d={d} rho={rho} table={a} ref={b}");
            }
        }
    }

    #[test]
    fn normalizations() {
        for d in 1..=3 {
            assert!((Mollifier::bump(d).unwrap().freq_radial(0.0) - 1.0).abs() < 1e-10);
            assert_eq!(Mollifier::band_limited(d).unwrap().freq_radial(0.0), 1.0);
        }
        let m = Mollifier::band_limited(1).unwrap();
        assert!((m.spectral_weight(0.0).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bump_integrates_to_one_in_space() {
        for d in 1..=3usize {
            let m = Mollifier::bump(d).unwrap();
            let v = integrate(
                |r| m.eval_space(&[r]).unwrap() * r.powi(d as i32 - 1) * sphere_area(d),
                0.0,
                1.0,
                1e-300,
                1e-14,
            )
            .0;
            assert!((v - 1.0).abs() < 1e-10, "d={d} v={v}");
        }
    }

    #[test]
    fn band_limited_is_exactly_zero_outside_band() {
        let m = Mollifier::new(Family::BandLimited, 2, 1.5).unwrap();
        assert_eq!(m.eval_frequency(&[1.5, 0.0]), 0.0);
        assert_eq!(m.eval_frequency(&[1.2, 0.9]), 0.0);
        assert!(m.eval_frequency(&[1.0, 0.0]) > 0.0);
    }

    #[test]
    fn truncation_examples() {
        let m = Mollifier::band_limited(2).unwrap();
        assert_eq!(m.effective_truncation(64.0, 0.3).unwrap(), 64.0);
        assert_eq!(m.effective_truncation(128.0, 1e-6).unwrap(), 128.0);
        let b = Mollifier::bump(2).unwrap();
        let t = b.effective_truncation(64.0, 1e-6).unwrap();
        assert!(t > 0.0 && t <= 64.0 * K_TAIL, "{t}");
        assert!(b.tail_fraction(t / 64.0) <= 1e-6);
    }

    #[test]
    fn spectral_weight_matches_direct_cosine_quadrature() {
        let m = Mollifier::band_limited(1).unwrap();
        let mass = integrate(band_profile, -1.0, 1.0, 1e-300, 1e-15).0;
        for &s in &[0.3, 2.0, 5.5, 11.0, 27.0] {
            let v = integrate(|t| band_profile(t) * (s * t).cos(), -1.0, 1.0, 1e-300, 1e-15).0 / mass;
            assert!((m.spectral_weight(s).unwrap() - v).abs() < 1e-11, "s={s}");
        }
    }

    #[test]
    fn tail_bounds_dominate_samples() {
        for d in 1..=3 {
            let m = Mollifier::bump(d).unwrap();
            for i in 0..1000 {
                let rho = i as f64 * 0.0791;
                assert!(m.freq_radial(rho).abs() <= m.tail_bound(rho));
                assert!(m.tail_bound(rho) >= m.tail_bound(rho + 0.05));
            }
        }
        let m = Mollifier::band_limited(1).unwrap();
        for i in 0..1000 {
            let s = i as f64 * 0.21;
            assert!(m.spectral_weight(s).unwrap().abs() <= m.spectral_tail_bound(s).unwrap());
        }
    }
}
