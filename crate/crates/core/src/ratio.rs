//! Fourier ratios FR_R = X₁/X₂ over scale ladders, the decay exponent κ,
//! and the sandwich, uncertainty and covering checks that tie FR to the
//! geometry of the support.

use crate::error::{invalid, Error, Result};
use crate::geometry::{neighborhood_volume, GeometryReport};
use crate::measure::{make_canonical_measure, suggested_samples, DiscreteMeasure, MeasureKind, MeasureParams};
use crate::mollifier::{Family, Mollifier};
use crate::numeric::fit_line;
use crate::spectrum::{region_ball_radius, regularized_norm, sample_spectrum, SpectrumOptions, SpectrumSample};
pub use crate::spectrum::{AxisBox, ConcentrationRegion};
use serde::{Deserialize, Serialize};

/// Multiplicative slack on upper bounds.
pub const DEFAULT_UPPER_SLACK: f64 = 1.1;
/// Multiplicative slack on lower bounds.
pub const DEFAULT_LOWER_SLACK: f64 = 0.9;
/// Multiplicative slacks applied to lower and upper bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub lower: f64,
    pub upper: f64,
}

impl Default for Slack {
    fn default() -> Self {
        Self { lower: DEFAULT_LOWER_SLACK, upper: DEFAULT_UPPER_SLACK }
    }
}

/// Relative tolerance of the Hölder and Cauchy–Schwarz checks, which hold
/// exactly for the computed sums.
pub const INEQUALITY_TOLERANCE: f64 = 1e-9;

/// Share of the ladder used by the κ fit (never fewer than 4 scales).
pub const DEFAULT_TAIL_FRACTION: f64 = 0.5;

/// Geometric ladder 2^lo .. 2^hi.
pub fn scale_ladder(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|j| 2f64.powi(j)).collect()
}

/// 2⁴..2¹² on the line, 2⁴..2⁹ otherwise.
pub fn default_ladder(dim: usize) -> Vec<f64> {
    if dim == 1 {
        scale_ladder(4, 12)
    } else {
        scale_ladder(4, 9)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSeries {
    pub label: String,
    pub psi_family: Family,
    pub dim: usize,
    pub p: f64,
    /// requested tail tolerance
    pub eps_tail: f64,
    pub ladder: Vec<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub xp: Vec<f64>,
    pub fr: Vec<f64>,
    /// certified tail fraction per scale
    pub eps_tail_certified: Vec<f64>,
    pub window_capped: Vec<bool>,
}

impl RatioSeries {
    pub const CSV_HEADER: &'static str = "label,R,X1,X2,Xp,FR,eps_tail";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for i in 0..self.ladder.len() {
            out.push_str(&format!(
                "{},{},{:e},{:e},{:e},{:e},{:e}\n",
                self.label, self.ladder[i], self.x1[i], self.x2[i], self.xp[i], self.fr[i], self.eps_tail_certified[i]
            ));
        }
        out
    }
}

fn check_ladder(ladder: &[f64]) -> Result<()> {
    if ladder.is_empty() {
        return Err(invalid("ladder", "empty"));
    }
    if ladder.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(invalid("ladder", "scales must be positive and finite"));
    }
    for w in ladder.windows(2) {
        if w[1] / w[0] < 2.0 * (1.0 - 1e-12) {
            return Err(invalid("ladder", "scales must increase by a factor ≥ 2"));
        }
    }
    Ok(())
}

/// FR over the ladder, keeping the per-scale samples (norm sums only).
pub fn ratio_ladder_samples(
    m: &DiscreteMeasure,
    psi: &Mollifier,
    ladder: &[f64],
    p: f64,
    opts: &SpectrumOptions,
) -> Result<(RatioSeries, Vec<SpectrumSample>)> {
    check_ladder(ladder)?;
    if !(p >= 2.0) {
        return Err(invalid("p", format!("{p} < 2")));
    }
    let floor = m.resolution_floor();
    for &r in ladder {
        if 1.0 / r < floor {
            return Err(Error::BelowResolution { requested: 1.0 / r, floor });
        }
    }
    let mut opts = opts.clone();
    if p.is_finite() && p != 1.0 && p != 2.0 && !opts.extra_p.contains(&p) {
        opts.extra_p.push(p);
    }
    let mut series = RatioSeries {
        label: m.label().to_string(),
        psi_family: psi.family(),
        dim: m.dim(),
        p,
        eps_tail: opts.eps_tail,
        ladder: ladder.to_vec(),
        x1: vec![],
        x2: vec![],
        xp: vec![],
        fr: vec![],
        eps_tail_certified: vec![],
        window_capped: vec![],
    };
    let mut samples = Vec::with_capacity(ladder.len());
    for &r in ladder {
        let s = sample_spectrum(m, psi, r, &opts)?;
        let x1 = regularized_norm(&s, 1.0)?;
        let x2 = regularized_norm(&s, 2.0)?;
        series.x1.push(x1);
        series.x2.push(x2);
        series.xp.push(regularized_norm(&s, p)?);
        series.fr.push(if x2 > 0.0 { x1 / x2 } else { f64::NAN });
        series.eps_tail_certified.push(s.eps_tail);
        series.window_capped.push(s.window_capped);
        samples.push(s);
    }
    Ok((series, samples))
}

/// Canonical measure sampled finely enough for every scale of the ladder:
/// faithful out to the window corner c·R_max·√d and resolving 1/R_max.
pub fn ladder_measure(kind: MeasureKind, params: &MeasureParams, psi: &Mollifier, ladder: &[f64], eps_tail: f64) -> Result<DiscreteMeasure> {
    check_ladder(ladder)?;
    let r_max = ladder.iter().cloned().fold(0.0, f64::max);
    let c = psi.window_multiple(eps_tail)?;
    let n = suggested_samples(kind, params, c * r_max * (params.dim as f64).sqrt(), 1.0 / r_max);
    make_canonical_measure(kind, params, n)
}

/// FR_{μ,R}(f) = X₁/X₂ across the ladder.
pub fn ratio_ladder(m: &DiscreteMeasure, psi: &Mollifier, ladder: &[f64], p: f64, opts: &SpectrumOptions) -> Result<RatioSeries> {
    Ok(ratio_ladder_samples(m, psi, ladder, p, opts)?.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    /// least squares slope of -log FR against log R on the window
    pub kappa: f64,
    /// smallest two-point slope on the window
    pub kappa_min: f64,
    /// index range [start, end) of the scales used
    pub window: [usize; 2],
    /// rms residual of the fit in log FR
    pub residual: f64,
    pub ladder_size: usize,
}

/// Fit κ on the last `tail_fraction` of the ladder (at least 4 scales).
pub fn estimate_kappa(series: &RatioSeries, tail_fraction: f64) -> Result<ExponentEstimate> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(invalid("tail_fraction", "must lie in (0, 1]"));
    }
    let n = series.fr.len();
    if series.fr.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
        return Err(Error::UndefinedRatio(format!("{}: FR vanishes or is undefined at some scale", series.label)));
    }
    let w = ((tail_fraction * n as f64).ceil() as usize).max(4);
    if n < 4 || w > n {
        return Err(Error::InsufficientData(format!("{n} scales, at least 4 tail scales needed")));
    }
    let start = n - w;
    let xs: Vec<f64> = series.ladder[start..].iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = series.fr[start..].iter().map(|f| -f.ln()).collect();
    let fit = fit_line(&xs, &ys).ok_or_else(|| Error::InsufficientData("degenerate ladder".into()))?;
    let kappa_min = xs
        .windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
        .fold(f64::INFINITY, f64::min);
    Ok(ExponentEstimate { kappa: fit.slope, kappa_min, window: [start, n], residual: fit.rms_residual, ladder_size: n })
}

/// ‖·‖₂ ≤ ‖·‖₁^θ ‖·‖_p^{1-θ} with θ = (p-2)/(2(p-1)), evaluated on
/// computed norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderRow {
    pub p: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

pub fn holder_row(l1: f64, l2: f64, lp: f64, p: f64) -> HolderRow {
    let theta = (p - 2.0) / (2.0 * (p - 1.0));
    let rhs = if p.is_infinite() { l1.sqrt() * lp.sqrt() } else { l1.powf(theta) * lp.powf(1.0 - theta) };
    HolderRow { p, lhs: l2, rhs, passed: l2 <= rhs * (1.0 + INEQUALITY_TOLERANCE) }
}

/// Hölder interpolation on a spectrum sample's Lebesgue norms.
pub fn holder_check(s: &SpectrumSample, p: f64) -> Result<HolderRow> {
    Ok(holder_row(s.lebesgue_norm(1.0)?, s.lebesgue_norm(2.0)?, s.lebesgue_norm(p)?, p))
}

/// Discrete Cauchy–Schwarz on the window: Σ|v| ≤ (#nodes · Σ|v|²)^{1/2},
/// i.e. FR ≤ ((2K+1)^d h^d / R^d)^{1/2}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchySchwarzRow {
    pub r: f64,
    pub fr: f64,
    pub bound: f64,
    pub passed: bool,
}

pub fn cauchy_schwarz_check(s: &SpectrumSample) -> Result<CauchySchwarzRow> {
    let fr = regularized_norm(s, 1.0)? / regularized_norm(s, 2.0)?;
    let d = s.grid.dim as i32;
    let bound = (s.sums.nodes * s.grid.spacing.powi(d) / s.r.powi(d)).sqrt();
    Ok(CauchySchwarzRow { r: s.r, fr, bound, passed: fr <= bound * (1.0 + INEQUALITY_TOLERANCE) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationCheck {
    pub r: f64,
    pub region: ConcentrationRegion,
    pub fr: f64,
    /// fraction of Σ|v| outside X_R
    pub eta: f64,
    /// |X ∩ B_{100R}|
    pub xr_volume: f64,
    /// |E^{1/R}|
    pub e_volume: f64,
    pub lower: f64,
    /// `None` when η = 1
    pub upper: Option<f64>,
    pub uncertainty_lhs: f64,
    pub uncertainty_rhs: f64,
    pub lower_slack: f64,
    pub upper_slack: f64,
    pub lower_ok: bool,
    pub upper_ok: Option<bool>,
    pub uncertainty_ok: bool,
}

impl ConcentrationCheck {
    pub fn passed(&self) -> bool {
        self.lower_ok && self.upper_ok.unwrap_or(false) && self.uncertainty_ok
    }
}

/// Sandwich (R^d|E^{1/R}|)^{-1/2} ≤ FR ≤ (|X_R|/(R^d(1-η)²))^{1/2} and
/// (1-η)² ≤ |E^{1/R}|·|X_R| at one ladder scale. The spectrum is resampled
/// at R with the region attached so that η is measured on the same grid.
pub fn sandwich_check(
    m: &DiscreteMeasure,
    psi: &Mollifier,
    series: &RatioSeries,
    region: &ConcentrationRegion,
    r: f64,
    opts: &SpectrumOptions,
    slack: Slack,
) -> Result<ConcentrationCheck> {
    let i = series
        .ladder
        .iter()
        .position(|x| (x / r - 1.0).abs() < 1e-12)
        .ok_or_else(|| invalid("R", format!("{r} is not a ladder scale")))?;
    let mut o = opts.clone();
    o.region = Some(region.clone());
    o.audit = false;
    let s = sample_spectrum(m, psi, r, &o)?;
    concentration_check(m, &s, series.fr[i], region, slack)
}

/// The sandwich on an existing sample; `fr` is the ratio at the same R. η
/// comes from the sample when it was taken with `region` attached, and is
/// exactly 0 when X_R contains the whole window.
pub fn concentration_check(
    m: &DiscreteMeasure,
    s: &SpectrumSample,
    fr: f64,
    region: &ConcentrationRegion,
    slack: Slack,
) -> Result<ConcentrationCheck> {
    let r = s.r;
    let d = m.dim() as i32;
    let corner = s.grid.half_width * (s.grid.dim as f64).sqrt();
    let covers_window = corner <= region_ball_radius(r)
        && match region {
            ConcentrationRegion::Everything => true,
            ConcentrationRegion::Ball { radius } => corner <= *radius,
            ConcentrationRegion::Boxes(_) => false,
        };
    let eta = match (&s.region, s.sums.l1_outside) {
        _ if !(s.sums.l1 > 0.0) => 1.0,
        (Some(g), Some(out)) if g == region => out / s.sums.l1,
        _ if covers_window => 0.0,
        _ => return Err(invalid("sample", "taken without this concentration region")),
    };
    let region = region.clone();
    let xr_volume = region.volume(m.dim(), r);
    let e_volume = neighborhood_volume(&m.density_support(), 1.0 / r)?.volume;
    let lower = (r.powi(d) * e_volume).powf(-0.5);
    let upper = (eta < 1.0).then(|| (xr_volume / (r.powi(d) * (1.0 - eta).powi(2))).sqrt());
    let unc_lhs = (1.0 - eta).powi(2);
    let unc_rhs = e_volume * xr_volume;
    Ok(ConcentrationCheck {
        r,
        region,
        fr,
        eta,
        xr_volume,
        e_volume,
        lower,
        upper,
        uncertainty_lhs: unc_lhs,
        uncertainty_rhs: unc_rhs,
        lower_slack: slack.lower,
        upper_slack: slack.upper,
        lower_ok: fr >= slack.lower * lower,
        upper_ok: upper.map(|u| fr <= slack.upper * u),
        uncertainty_ok: unc_lhs <= slack.upper * unc_rhs,
    })
}

/// Lower bound of the sandwich alone, at every ladder scale.
pub fn sandwich_lower_rows(m: &DiscreteMeasure, series: &RatioSeries, slack: f64) -> Result<Vec<(f64, f64, f64, bool)>> {
    let support = m.density_support();
    let d = m.dim() as i32;
    series
        .ladder
        .iter()
        .zip(&series.fr)
        .map(|(&r, &fr)| {
            let e = neighborhood_volume(&support, 1.0 / r)?.volume;
            let lower = (r.powi(d) * e).powf(-0.5);
            Ok((r, fr, lower, fr >= slack * lower))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiRow {
    pub r: f64,
    pub fr: f64,
    pub covering_count: u64,
    /// N(1/R)^{-1/2}
    pub covering_bound: f64,
    /// R^{-α/2 - 0.1}, checked on tail scales only
    pub power_bound: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiReport {
    pub rows: Vec<MinkowskiRow>,
    pub fitted_alpha: f64,
    pub slack: f64,
    pub passed: bool,
}

/// FR(R) ≥ N(1/R)^{-1/2}·slack at every scale and FR(R) ≥ R^{-α/2-0.1} on
/// the tail window. `geometry` must hold a report at δ = 1/R for each scale.
pub fn minkowski_lower_bound(
    series: &RatioSeries,
    geometry: &[GeometryReport],
    fitted_alpha: f64,
    tail_start: usize,
    slack: f64,
) -> Result<MinkowskiReport> {
    let mut rows = Vec::new();
    for (i, (&r, &fr)) in series.ladder.iter().zip(&series.fr).enumerate() {
        let g = geometry
            .iter()
            .find(|g| (g.delta * r - 1.0).abs() < 1e-9)
            .ok_or(Error::MissingGeometry(1.0 / r))?;
        let covering_bound = (g.covering_count as f64).powf(-0.5);
        let power_bound = (i >= tail_start).then(|| r.powf(-fitted_alpha / 2.0 - 0.1));
        let passed = fr >= slack * covering_bound && power_bound.is_none_or(|b| fr >= b);
        rows.push(MinkowskiRow { r, fr, covering_count: g.covering_count, covering_bound, power_bound, passed });
    }
    let passed = rows.iter().all(|r| r.passed);
    Ok(MinkowskiReport { rows, fitted_alpha, slack, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{make_canonical_measure, MeasureKind, MeasureParams};
    use proptest::prelude::*;

    fn synthetic(fr: Vec<f64>) -> RatioSeries {
        let n = fr.len();
        RatioSeries {
            label: "synthetic".into(),
            psi_family: Family::SpaceCompactBump,
            dim: 2,
            p: 3.0,
            eps_tail: 0.05,
            ladder: scale_ladder(4, 3 + n as i32),
            x1: fr.clone(),
            x2: vec![1.0; n],
            xp: vec![1.0; n],
            fr,
            eps_tail_certified: vec![0.05; n],
            window_capped: vec![false; n],
        }
    }

    #[test]
    fn constant_series_gives_zero_kappa() {
        let e = estimate_kappa(&synthetic(vec![0.7; 6]), 1.0).unwrap();
        assert_eq!(e.kappa, 0.0);
        assert_eq!(e.kappa_min, 0.0);
        assert_eq!(e.residual, 0.0);
        assert_eq!(e.window, [0, 6]);
    }

    #[test]
    fn power_law_is_recovered() {
        let fr: Vec<f64> = scale_ladder(4, 9).iter().map(|r| 3.0 * r.powf(-0.37)).collect();
        let e = estimate_kappa(&synthetic(fr), 0.5).unwrap();
        assert!((e.kappa - 0.37).abs() < 1e-12);
        assert!((e.kappa_min - 0.37).abs() < 1e-12);
        assert_eq!(e.window, [2, 6]);
    }

    #[test]
    fn too_few_scales() {
        assert!(matches!(estimate_kappa(&synthetic(vec![1.0; 3]), 1.0), Err(Error::InsufficientData(_))));
        assert!(matches!(estimate_kappa(&synthetic(vec![1.0, 0.0, 1.0, 1.0]), 1.0), Err(Error::UndefinedRatio(_))));
    }

    #[test]
    fn ladder_preconditions() {
        let m = make_canonical_measure(MeasureKind::Segment, &MeasureParams::default(), 64).unwrap();
        let psi = Mollifier::bump(2).unwrap();
        let o = SpectrumOptions::default();
        assert!(ratio_ladder(&m, &psi, &[4.0, 6.0], 3.0, &o).is_err());
        assert!(ratio_ladder(&m, &psi, &[4.0, 8.0], 1.5, &o).is_err());
        // 64 points resolve the segment to 1/128: R = 256 is below the floor
        assert!(matches!(ratio_ladder(&m, &psi, &[16.0, 256.0], 3.0, &o), Err(Error::BelowResolution { .. })));
    }

    #[test]
    fn dirac_ladder_is_flat_and_sandwiched() {
        let m = make_canonical_measure(MeasureKind::Dirac, &MeasureParams::default(), 1).unwrap();
        let psi = Mollifier::bump(2).unwrap();
        let o = SpectrumOptions::default();
        let (s, samples) = ratio_ladder_samples(&m, &psi, &scale_ladder(4, 7), 3.0, &o).unwrap();
        for f in &s.fr {
            assert!((f / s.fr[0] - 1.0).abs() < 0.02);
        }
        for smp in &samples {
            assert!(holder_check(smp, 3.0).unwrap().passed);
            assert!(cauchy_schwarz_check(smp).unwrap().passed);
        }
        let c = sandwich_check(&m, &psi, &s, &ConcentrationRegion::Everything, 32.0, &o, Slack::default()).unwrap();
        assert!(c.passed(), "{c:?}");
        assert!(c.eta < 1e-12);
    }

    #[test]
    fn csv_layout() {
        let s = synthetic(vec![0.5, 0.25, 0.125, 0.0625]);
        let csv = s.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "label,R,X1,X2,Xp,FR,eps_tail");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("synthetic,16,"));
    }

    proptest! {
        #[test]
        fn kappa_min_never_exceeds_kappa(noise in proptest::collection::vec(-0.3f64..0.3, 6), k in -0.5f64..1.0) {
            let fr: Vec<f64> = scale_ladder(4, 9).iter().zip(&noise).map(|(r, e)| r.powf(-k) * e.exp()).collect();
            let e = estimate_kappa(&synthetic(fr), 1.0).unwrap();
            prop_assert!(e.kappa_min <= e.kappa + 1e-12);
        }

        #[test]
        fn holder_holds_on_random_sequences(v in proptest::collection::vec(0.0f64..10.0, 1..64), p in 2.0f64..12.0) {
            let l1: f64 = v.iter().sum();
            let l2 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let lp = v.iter().map(|x| x.powf(p)).sum::<f64>().powf(1.0 / p);
            prop_assert!(holder_row(l1, l2, lp, p).passed);
        }
    }
}
