//! Synthesis thresholds p* = 2(d-2κ)/(α-2κ) in exact rational arithmetic,
//! the interpolation exponent θ, and a checker that evaluates each
//! inequality of the vanishing argument on computed data.

use crate::error::{invalid, Error, Result};
use crate::geometry::GeometryReport;
use crate::measure::DiscreteMeasure;
use crate::mollifier::Mollifier;
use crate::ratio::{holder_check, ExponentEstimate, HolderRow, RatioSeries};
use crate::spectrum::SpectrumSample;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

pub type Q = BigRational;

fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parse "3", "-2/7", "0.125" or "1e-3" into an exact rational.
pub fn parse_rational(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || invalid("number", format!("cannot read {s:?} as a rational"));
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().map_err(|_| bad())?;
        let b: BigInt = b.trim().parse().map_err(|_| bad())?;
        if b.is_zero() {
            return Err(bad());
        }
        return Ok(Q::new(a, b));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut v = if scale >= 0 { Q::from_integer(digits * num_traits::pow(ten, scale as usize)) } else { Q::new(digits, num_traits::pow(ten, (-scale) as usize)) };
    if neg {
        v = -v;
    }
    Ok(v)
}

/// The decimal a float prints as, read exactly (0.1 becomes 1/10).
pub fn rational_from_f64(x: f64) -> Result<Q> {
    if !x.is_finite() {
        return Err(invalid("number", "not finite"));
    }
    parse_rational(&format!("{x:e}"))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// A rational or +∞.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Extended {
    Finite(Q),
    Infinite,
}

impl Extended {
    pub fn to_f64(&self) -> f64 {
        match self {
            Extended::Finite(v) => to_f64(v),
            Extended::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(v) => write!(f, "{v}"),
            Extended::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// κ = 0
    Classical,
    Intermediate,
    /// κ = α/2
    Rigid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdResult {
    pub d: u32,
    pub alpha: Q,
    pub kappa: Q,
    pub p_star: Extended,
    pub regime: Regime,
}

impl ThresholdResult {
    /// {d, alpha, kappa, p_star, regime}; p_star is the string "inf" when
    /// infinite. Exact values ride along as strings.
    pub fn to_json(&self) -> serde_json::Value {
        let p = match &self.p_star {
            Extended::Finite(v) => serde_json::json!(to_f64(v)),
            Extended::Infinite => serde_json::json!("inf"),
        };
        serde_json::json!({
            "d": self.d,
            "alpha": to_f64(&self.alpha),
            "kappa": to_f64(&self.kappa),
            "p_star": p,
            "regime": self.regime,
            "exact": {
                "alpha": self.alpha.to_string(),
                "kappa": self.kappa.to_string(),
                "p_star": self.p_star.to_string(),
            }
        })
    }
}

fn check_alpha(d: u32, alpha: &Q) -> Result<()> {
    if d == 0 {
        return Err(invalid("d", "must be at least 1"));
    }
    if !(alpha.is_positive() && *alpha < q(d as i64)) {
        return Err(invalid("alpha", format!("{alpha} is not in (0, {d})")));
    }
    Ok(())
}

/// p* = 2(d-2κ)/(α-2κ), +∞ at κ = α/2.
pub fn threshold(d: u32, alpha: &Q, kappa: &Q) -> Result<ThresholdResult> {
    check_alpha(d, alpha)?;
    let half = alpha / q(2);
    if kappa.is_negative() || *kappa > half {
        return Err(invalid("kappa", format!("{kappa} is not in [0, {half}]")));
    }
    let two = q(2);
    let (p_star, regime) = if *kappa == half {
        (Extended::Infinite, Regime::Rigid)
    } else {
        let p = &two * (q(d as i64) - &two * kappa) / (alpha - &two * kappa);
        (Extended::Finite(p), if kappa.is_zero() { Regime::Classical } else { Regime::Intermediate })
    };
    Ok(ThresholdResult { d, alpha: alpha.clone(), kappa: kappa.clone(), p_star, regime })
}

/// The κ with threshold(d, α, κ) = p: κ = (pα - 2d)/(2p - 4).
pub fn threshold_inverse(d: u32, alpha: &Q, p: &Q) -> Result<Q> {
    check_alpha(d, alpha)?;
    let classical = q(2 * d as i64) / alpha;
    if *p < classical {
        return Err(invalid("p", format!("{p} is below the classical exponent 2d/α = {classical}")));
    }
    Ok((p * alpha - q(2 * d as i64)) / (q(2) * p - q(4)))
}

/// θ = (p-2)/(2(p-1)) and θ/(1-θ) = (p-2)/p.
pub fn interpolation_theta(p: &Q) -> Result<(Q, Q)> {
    if *p < q(2) {
        return Err(invalid("p", format!("{p} < 2")));
    }
    let theta = (p - q(2)) / (q(2) * (p - q(1)));
    let ratio = &theta / (Q::one() - &theta);
    Ok((theta, ratio))
}

/// Both sides of 2p[(d/2-κ)(p-2)/p + (α-d)/2] = p(α-2κ) - 2(d-2κ).
pub fn exponent_identity(d: u32, alpha: &Q, kappa: &Q, p: &Q) -> (Q, Q) {
    let two = q(2);
    let dq = q(d as i64);
    let lhs = &two * p * ((&dq / &two - kappa) * (p - &two) / p + (alpha - &dq) / &two);
    let rhs = p * (alpha - &two * kappa) - &two * (dq - &two * kappa);
    (lhs, rhs)
}

/// p(α-2κ) - 2(d-2κ) in floating point.
pub fn exponent_value(d: f64, alpha: f64, kappa: f64, p: f64) -> f64 {
    p * (alpha - 2.0 * kappa) - 2.0 * (d - 2.0 * kappa)
}

/// Samples (κ, p*) of the threshold curve on [0, α/2), n points.
pub fn sweep_curve(d: u32, alpha: &Q, n: usize) -> Result<Vec<(Q, Extended)>> {
    check_alpha(d, alpha)?;
    if n < 2 {
        return Err(invalid("n", "need at least 2 points"));
    }
    let half = alpha / q(2);
    (0..n)
        .map(|i| {
            // κ_i = (α/2)·i/n stays below α/2
            let k = &half * Q::new(BigInt::from(i), BigInt::from(n));
            Ok((k.clone(), threshold(d, alpha, &k)?.p_star))
        })
        .collect()
}

/// Verdict label of a chain whose unconditional rows all hold. The chain
/// cannot reach its contradiction on nonzero data, so no stronger label
/// exists.
pub const CHAIN_CONSISTENT: &str = "chain consistent";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingRow {
    /// |⟨g, φ⟩|
    pub lhs: f64,
    /// ‖g‖_{L²(Ω_R)} ‖φ‖_{L²(Ω_R)}
    pub rhs: f64,
    pub cells: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofChainRow {
    pub r: f64,
    /// ‖ĝ‖₁ and R^{d/2-(κ'-ε)}‖ĝ‖₂
    pub l1: f64,
    pub l1_bound: f64,
    /// holds on tail scales only if the fitted slope is tight; reported
    pub l1_holds: bool,
    pub holder: HolderRow,
    /// `None` for mollifiers without a closed-form space profile
    pub pairing: Option<PairingRow>,
    /// |Ω_R| and C·R^{α-d}
    pub omega_volume: f64,
    pub volume_bound: f64,
    pub volume_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofChainReport {
    pub label: String,
    pub p: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub dim: usize,
    /// κ' = kappa_min
    pub kappa_prime: f64,
    pub theta: f64,
    /// C = max_R |Ω_R| R^{d-α}
    pub volume_constant: f64,
    /// min over max of |Ω_R| R^{d-α}; near 1 when the power law is tight
    pub volume_constant_spread: f64,
    pub rows: Vec<ProofChainRow>,
    /// p(α-2(κ'-ε)) - 2(d-2(κ'-ε))
    pub exponent: f64,
    pub exponent_sign: i8,
    /// "pairing bound decays" or "pairing bound does not decay"
    pub implication: String,
    pub verdict: String,
    /// every unconditional row holds
    pub passed: bool,
}

/// Smooth test function (1 - |x-c|²/ρ²)² on the ball B(c, ρ).
fn test_bump(x: &[f64], c: &[f64], rho: f64) -> f64 {
    let r2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (rho * rho);
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - r2) * (1.0 - r2)
    }
}

/// g = fμ * ψ_{1/R} on cells of side 1/(4R) covering Ω_R = E^{1/R}, then
/// the Cauchy–Schwarz pairing against the test bump.
pub fn pairing_row(m: &DiscreteMeasure, psi: &Mollifier, r: f64) -> Result<Option<PairingRow>> {
    if psi.eval_space(&vec![0.0; m.dim()]).is_none() {
        return Ok(None);
    }
    let d = m.dim();
    let radius = psi.space_radius().unwrap_or(1.0) / r;
    let s = 1.0 / (4.0 * r);
    let (lo, hi) = m.bounding_box();
    let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let rho = (0.6 * m.diameter()).max(0.5);
    // spatial hash of the points on cells of side `radius`
    let key = |x: &[f64]| -> [i64; 3] {
        let mut k = [0i64; 3];
        for a in 0..d {
            k[a] = (x[a] / radius).floor() as i64;
        }
        k
    };
    let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    let coeffs = m.coefficients();
    for j in 0..m.len() {
        if coeffs[j].norm() > 0.0 {
            buckets.entry(key(m.point(j))).or_default().push(j);
        }
    }
    let cells_per_axis: Vec<i64> = (0..d).map(|a| ((hi[a] - lo[a] + 2.0 * radius) / s).ceil() as i64 + 1).collect();
    let total: f64 = cells_per_axis.iter().map(|c| *c as f64).product();
    if total > 5.0e7 {
        return Err(Error::BudgetExceeded {
            what: "pairing grid cells",
            needed: total,
            budget: 5.0e7,
            suggestion: "check the pairing at smaller R".into(),
        });
    }
    let psi_scale = r.powi(d as i32);
    let mut gg = 0.0;
    let mut pp = 0.0;
    let mut gp = num_complex::Complex64::new(0.0, 0.0);
    let mut cells = 0usize;
    let mut idx = vec![0i64; d];
    let mut x = vec![0.0; d];
    loop {
        for a in 0..d {
            x[a] = lo[a] - radius + (idx[a] as f64 + 0.5) * s;
        }
        let k = key(&x);
        let mut g = num_complex::Complex64::new(0.0, 0.0);
        let mut near = false;
        let mut off = [0i64; 3];
        let span = if d >= 2 { 3 } else { 1 };
        let span3 = if d == 3 { 3 } else { 1 };
        for o0 in 0..3 {
            for o1 in 0..span {
                for o2 in 0..span3 {
                    off[0] = k[0] + o0 - 1;
                    off[1] = if d >= 2 { k[1] + o1 - 1 } else { 0 };
                    off[2] = if d == 3 { k[2] + o2 - 1 } else { 0 };
                    if let Some(list) = buckets.get(&off) {
                        for &j in list {
                            let y = m.point(j);
                            let diff: Vec<f64> = (0..d).map(|a| (x[a] - y[a]) * r).collect();
                            // |x - y| ≤ space radius / R
                            if diff.iter().map(|v| v * v).sum::<f64>() <= (radius * r).powi(2) {
                                near = true;
                            }
                            let v = psi.eval_space(&diff).unwrap_or(0.0) * psi_scale;
                            g += coeffs[j] * v;
                        }
                    }
                }
            }
        }
        if near {
            let phi = test_bump(&x, &center, rho);
            gg += g.norm_sqr();
            pp += phi * phi;
            gp += g * phi;
            cells += 1;
        }
        let mut a = 0;
        loop {
            if a == d {
                let vol = s.powi(d as i32);
                let lhs = gp.norm() * vol;
                let rhs = (gg * vol).sqrt() * (pp * vol).sqrt();
                return Ok(Some(PairingRow { lhs, rhs, cells, passed: lhs <= rhs * (1.0 + 1e-9) }));
            }
            idx[a] += 1;
            if idx[a] < cells_per_axis[a] {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}

/// Evaluate the chain at every ladder scale. `geometry` needs a report at
/// δ = 1/R per scale; α is the support dimension used in the volume bound
/// and the exponent.
#[allow(clippy::too_many_arguments)]
pub fn proof_chain_check(
    m: &DiscreteMeasure,
    psi: &Mollifier,
    series: &RatioSeries,
    samples: &[SpectrumSample],
    geometry: &[GeometryReport],
    estimate: &ExponentEstimate,
    alpha: f64,
    p: f64,
    epsilon: f64,
) -> Result<ProofChainReport> {
    if !(epsilon > 0.0) {
        return Err(invalid("epsilon", "must be positive"));
    }
    if !(p >= 2.0 && p.is_finite()) {
        return Err(invalid("p", "must be finite and at least 2"));
    }
    if samples.len() != series.ladder.len() {
        return Err(invalid("samples", "one spectrum sample per ladder scale is required"));
    }
    let d = m.dim() as f64;
    let kp = estimate.kappa_min;
    let k_eff = kp - epsilon;
    let mut omegas = Vec::new();
    for &r in &series.ladder {
        let g = geometry.iter().find(|g| (g.delta * r - 1.0).abs() < 1e-9).ok_or(Error::MissingGeometry(1.0 / r))?;
        omegas.push(g.volume);
    }
    let scaled: Vec<f64> = series.ladder.iter().zip(&omegas).map(|(r, o)| o * r.powf(d - alpha)).collect();
    let c = scaled.iter().cloned().fold(0.0, f64::max);
    let spread = scaled.iter().cloned().fold(f64::INFINITY, f64::min) / c;
    let mut rows = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        let r = series.ladder[i];
        let l1 = s.lebesgue_norm(1.0)?;
        let l2 = s.lebesgue_norm(2.0)?;
        let l1_bound = r.powf(d / 2.0 - k_eff) * l2;
        let holder = holder_check(s, p)?;
        let pairing = pairing_row(m, psi, r)?;
        let volume_bound = c * r.powf(alpha - d);
        rows.push(ProofChainRow {
            r,
            l1,
            l1_bound,
            l1_holds: l1 <= l1_bound,
            holder,
            pairing,
            omega_volume: omegas[i],
            volume_bound,
            volume_holds: omegas[i] <= volume_bound * (1.0 + 1e-12),
        });
    }
    let exponent = exponent_value(d, alpha, k_eff, p);
    let sign = if exponent < 0.0 {
        -1
    } else if exponent > 0.0 {
        1
    } else {
        0
    };
    let passed = rows.iter().all(|r| r.holder.passed && r.pairing.as_ref().is_none_or(|p| p.passed) && r.volume_holds);
    Ok(ProofChainReport {
        label: series.label.clone(),
        p,
        epsilon,
        alpha,
        dim: m.dim(),
        kappa_prime: kp,
        theta: (p - 2.0) / (2.0 * (p - 1.0)),
        volume_constant: c,
        volume_constant_spread: spread,
        rows,
        exponent,
        exponent_sign: sign,
        implication: if sign < 0 { "pairing bound decays".into() } else { "pairing bound does not decay".into() },
        verdict: if passed { CHAIN_CONSISTENT.into() } else { "chain broken".into() },
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(s: &str) -> Q {
        parse_rational(s).unwrap()
    }

    #[test]
    fn parsing() {
        assert_eq!(r("0.1"), Q::new(1.into(), 10.into()));
        assert_eq!(r("-2/6"), Q::new((-1).into(), 3.into()));
        assert_eq!(r("1e-3"), Q::new(1.into(), 1000.into()));
        assert_eq!(r("2.5E2"), q(250));
        assert_eq!(rational_from_f64(0.1).unwrap(), r("1/10"));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn classical_values() {
        assert_eq!(threshold(2, &q(1), &q(0)).unwrap().p_star, Extended::Finite(q(4)));
        assert_eq!(threshold(2, &q(1), &r("1/2")).unwrap().p_star, Extended::Infinite);
        assert_eq!(threshold(2, &q(1), &r("1/2")).unwrap().regime, Regime::Rigid);
        for d in 2..=6u32 {
            for k in 1..d as i64 {
                let kappa = Q::new((d as i64 - 1 - k).into(), 2.into());
                let t = threshold(d, &q(d as i64 - 1), &kappa).unwrap();
                assert_eq!(t.p_star, Extended::Finite(Q::new((2 * (k + 1)).into(), k.into())));
            }
        }
    }

    #[test]
    fn preconditions() {
        assert!(threshold(2, &q(2), &q(0)).is_err());
        assert!(threshold(2, &q(0), &q(0)).is_err());
        assert!(threshold(2, &q(1), &r("0.6")).is_err());
        assert!(threshold(2, &q(1), &r("-0.1")).is_err());
        assert!(threshold_inverse(2, &q(1), &q(3)).is_err());
        assert!(interpolation_theta(&r("1.5")).is_err());
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(threshold_inverse(3, &q(1), &q(7)).unwrap(), r("1/10"));
        assert_eq!(threshold_inverse(2, &q(1), &q(4)).unwrap(), q(0));
    }

    #[test]
    fn theta_examples() {
        assert_eq!(interpolation_theta(&q(2)).unwrap().0, q(0));
        let (t, ratio) = interpolation_theta(&q(4)).unwrap();
        assert_eq!(t, r("1/3"));
        assert_eq!(ratio, r("1/2"));
    }

    #[test]
    fn divergence_near_rigid_end() {
        for n in 3..=9u32 {
            let eps = Q::new(1.into(), num_traits::pow(BigInt::from(10), n as usize));
            let k = r("1/2") - &eps;
            let p = threshold(2, &q(1), &k).unwrap().p_star;
            let big = Q::new(num_traits::pow(BigInt::from(10), n as usize), 2.into());
            match p {
                Extended::Finite(v) => assert!(v > big),
                Extended::Infinite => panic!(),
            }
        }
    }

    #[test]
    fn json_shape() {
        let j = threshold(2, &q(1), &q(0)).unwrap().to_json();
        assert_eq!(j["p_star"], 4.0);
        assert_eq!(j["regime"], "classical");
        let j = threshold(2, &q(1), &r("1/2")).unwrap().to_json();
        assert_eq!(j["p_star"], "inf");
    }

    #[test]
    fn signs_of_the_exponent() {
        // segment: p = 3, κ' = 1/2 - ε
        assert!(exponent_value(2.0, 1.0, 0.45, 3.0) < 0.0);
        // circle: p = 5 above the classical threshold 4
        assert!(exponent_value(2.0, 1.0, -0.05, 5.0) > 0.0);
        let (l, rr) = exponent_identity(2, &q(1), &r("9/20"), &q(3));
        assert_eq!(l, rr);
        assert!(l.is_negative());
    }

    fn rational() -> impl Strategy<Value = (i64, i64)> {
        (1i64..200, 1i64..200)
    }

    proptest! {
        #[test]
        fn reduces_to_classical((a, b) in rational(), d in 1u32..8) {
            let alpha = Q::new(a.into(), b.into()) ;
            prop_assume!(alpha < q(d as i64));
            let t = threshold(d, &alpha, &q(0)).unwrap();
            prop_assert_eq!(t.p_star, Extended::Finite(q(2 * d as i64) / &alpha));
        }

        #[test]
        fn inverse_roundtrip((a, b) in rational(), (c, e) in rational(), d in 1u32..8) {
            let alpha = Q::new(a.into(), b.into());
            prop_assume!(alpha < q(d as i64));
            let p = q(2 * d as i64) / &alpha + Q::new(c.into(), e.into());
            let k = threshold_inverse(d, &alpha, &p).unwrap();
            prop_assert_eq!(threshold(d, &alpha, &k).unwrap().p_star, Extended::Finite(p));
        }

        #[test]
        fn theta_identity((a, b) in rational()) {
            let p = q(2) + Q::new(a.into(), b.into());
            let (t, ratio) = interpolation_theta(&p).unwrap();
            prop_assert_eq!(Q::new(1.into(), 2.into()), &t + (Q::one() - &t) / &p);
            prop_assert_eq!(ratio, (&p - q(2)) / &p);
        }

        #[test]
        fn strictly_increasing_and_above_classical((a, b) in rational(), i in 0i64..99, d in 1u32..8) {
            let alpha = Q::new(a.into(), b.into());
            prop_assume!(alpha < q(d as i64));
            let half = &alpha / q(2);
            let k1 = &half * Q::new(i.into(), 100.into());
            let k2 = &half * Q::new((i + 1).into(), 100.into());
            let p1 = threshold(d, &alpha, &k1).unwrap().p_star;
            let p2 = threshold(d, &alpha, &k2).unwrap().p_star;
            let classical = q(2 * d as i64) / &alpha;
            match (p1, p2) {
                (Extended::Finite(x), Extended::Finite(y)) => { prop_assert!(x < y); prop_assert!(x >= classical); }
                (Extended::Finite(x), Extended::Infinite) => prop_assert!(x >= classical),
                _ => prop_assert!(false),
            }
        }

        #[test]
        fn exponent_algebra((a, b) in rational(), (c, e) in rational(), (f, g) in rational(), d in 1u32..8) {
            let alpha = Q::new(a.into(), b.into());
            let k = Q::new(c.into(), e.into()) - q(1);
            let p = Q::new(f.into(), g.into()) + q(2);
            let (l, r) = exponent_identity(d, &alpha, &k, &p);
            prop_assert_eq!(l, r);
        }
    }
}
