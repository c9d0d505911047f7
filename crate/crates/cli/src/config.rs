//! RunConfig: TOML with one section per concern. Every output directory
//! gets a verbatim copy, so a run can be repeated from it alone.

use anyhow::{bail, Context, Result};
use fourier_ratio::measure::{MeasureKind, MeasureParams};
use fourier_ratio::mollifier::{Family, Mollifier};
use fourier_ratio::ratio::{default_ladder, scale_ladder, Slack, DEFAULT_TAIL_FRACTION};
use fourier_ratio::spectrum::{ConcentrationRegion, SpectrumOptions, DEFAULT_EPS_TAIL};
use fourier_ratio::torus::{TorusKind, TorusParams, LEAK_TOLERANCE};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureSection {
    pub kind: String,
    pub dim: usize,
    pub length: f64,
    pub radius: f64,
    pub ratio: f64,
    pub depth: u32,
    pub k: usize,
    /// sample count; sized from the ladder when absent
    pub n: Option<usize>,
}

impl Default for MeasureSection {
    fn default() -> Self {
        let p = MeasureParams::default();
        MeasureSection { kind: "segment".into(), dim: p.dim, length: p.length, radius: p.radius, ratio: p.ratio, depth: p.depth, k: p.k, n: None }
    }
}

impl MeasureSection {
    pub fn kind(&self) -> Result<MeasureKind> {
        self.kind.parse().with_context(|| "measure.kind")
    }

    pub fn params(&self) -> MeasureParams {
        MeasureParams { dim: self.dim, length: self.length, radius: self.radius, ratio: self.ratio, depth: self.depth, k: self.k }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TorusSection {
    pub kind: String,
    pub dim: usize,
    pub along: usize,
    pub radius: f64,
    pub ratio: f64,
    pub amplitude: f64,
    /// block radius; sized from the largest scale when absent
    pub n: Option<usize>,
    pub leak_tolerance: f64,
}

impl Default for TorusSection {
    fn default() -> Self {
        let p = TorusParams::default();
        TorusSection {
            kind: "sub-torus".into(),
            dim: p.dim,
            along: p.along,
            radius: p.radius,
            ratio: p.ratio,
            amplitude: p.amplitude,
            n: None,
            leak_tolerance: LEAK_TOLERANCE,
        }
    }
}

impl TorusSection {
    pub fn kind(&self) -> Result<TorusKind> {
        self.kind.parse().with_context(|| "torus.kind")
    }

    pub fn params(&self) -> TorusParams {
        TorusParams {
            dim: self.dim,
            along: self.along,
            radius: self.radius,
            ratio: self.ratio,
            amplitude: self.amplitude,
            ..TorusParams::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MollifierSection {
    pub family: Family,
    pub band_radius: f64,
}

impl Default for MollifierSection {
    fn default() -> Self {
        MollifierSection { family: Family::SpaceCompactBump, band_radius: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LadderSection {
    /// R = 2^lo..2^hi; per-dimension defaults when absent
    pub lo: Option<i32>,
    pub hi: Option<i32>,
    /// explicit scales, overriding lo/hi
    pub scales: Option<Vec<f64>>,
    pub tail_fraction: f64,
}

impl Default for LadderSection {
    fn default() -> Self {
        LadderSection { lo: None, hi: None, scales: None, tail_fraction: DEFAULT_TAIL_FRACTION }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub p: f64,
    pub epsilon: f64,
    pub eps_tail: f64,
    pub refine: u32,
    /// "everything", "ball:<radius>" or "strip:<axis>:<half width>"
    pub region: String,
    /// support dimension for the proof chain; known or fitted when absent
    pub alpha: Option<f64>,
    /// geometry ladder δ = 2^-lo..2^-hi for fitting α
    pub geometry_lo: i32,
    pub geometry_hi: i32,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            p: 4.0,
            epsilon: 0.05,
            eps_tail: DEFAULT_EPS_TAIL,
            refine: 1,
            region: "everything".into(),
            alpha: None,
            geometry_lo: 5,
            geometry_hi: 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdSection {
    pub d: u32,
    /// exact rationals as text: "1", "3/2", "0.25"
    pub alpha: String,
    pub kappa: String,
    pub p: String,
    pub points: usize,
}

impl Default for ThresholdSection {
    fn default() -> Self {
        ThresholdSection { d: 2, alpha: "1".into(), kappa: "0".into(), p: "4".into(), points: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlackSection {
    pub lower: f64,
    pub upper: f64,
}

impl Default for SlackSection {
    fn default() -> Self {
        let s = Slack::default();
        SlackSection { lower: s.lower, upper: s.upper }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// any of "segment", "circle", "cantor", "torus"
    pub corpus: Vec<String>,
    pub frequencies: usize,
    pub tolerance: f64,
    pub torus_tolerance: f64,
}

pub const VERIFY_CORPUS: [&str; 4] = ["segment", "circle", "cantor", "torus"];

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection { corpus: VERIFY_CORPUS.iter().map(|s| s.to_string()).collect(), frequencies: 100, tolerance: 1e-6, torus_tolerance: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("frkit-out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedSection {
    pub seed: u64,
}

impl Default for SeedSection {
    fn default() -> Self {
        SeedSection { seed: 20 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub measure: MeasureSection,
    pub torus: TorusSection,
    pub mollifier: MollifierSection,
    pub ladder: LadderSection,
    pub analysis: AnalysisSection,
    pub threshold: ThresholdSection,
    pub slack: SlackSection,
    pub verify: VerifySection,
    pub output: OutputSection,
    pub seeds: SeedSection,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).context("config")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("RunConfig serializes")
    }

    /// Field-level checks that do not need a measure.
    pub fn validate(&self) -> Result<()> {
        let a = &self.analysis;
        if !(a.p >= 2.0) {
            bail!("analysis.p: {} must be at least 2", a.p);
        }
        if !(a.epsilon > 0.0) {
            bail!("analysis.epsilon: must be positive");
        }
        if !(a.eps_tail > 0.0 && a.eps_tail < 1.0) {
            bail!("analysis.eps_tail: {} is not in (0, 1)", a.eps_tail);
        }
        if a.refine == 0 {
            bail!("analysis.refine: must be at least 1");
        }
        if !(self.slack.lower > 0.0 && self.slack.lower <= 1.0) {
            bail!("slack.lower: must lie in (0, 1]");
        }
        if !(self.slack.upper >= 1.0) {
            bail!("slack.upper: must be at least 1");
        }
        if !(self.ladder.tail_fraction > 0.0 && self.ladder.tail_fraction <= 1.0) {
            bail!("ladder.tail_fraction: must lie in (0, 1]");
        }
        if let (Some(lo), Some(hi)) = (self.ladder.lo, self.ladder.hi) {
            if lo > hi {
                bail!("ladder: lo = {lo} exceeds hi = {hi}");
            }
        }
        if self.mollifier.band_radius <= 0.0 {
            bail!("mollifier.band_radius: must be positive");
        }
        self.region().context("analysis.region")?;
        Ok(())
    }

    pub fn mollifier(&self, dim: usize) -> Result<Mollifier> {
        Ok(Mollifier::new(self.mollifier.family, dim, self.mollifier.band_radius)?)
    }

    /// The torus multiplier always uses the band-limited family.
    pub fn torus_mollifier(&self, dim: usize) -> Result<Mollifier> {
        Ok(Mollifier::new(Family::BandLimited, dim, self.mollifier.band_radius)?)
    }

    pub fn euclidean_ladder(&self) -> Vec<f64> {
        self.ladder_or(default_ladder(self.measure.dim))
    }

    pub fn torus_ladder(&self) -> Vec<f64> {
        self.ladder_or(scale_ladder(4, 7))
    }

    fn ladder_or(&self, default: Vec<f64>) -> Vec<f64> {
        if let Some(s) = &self.ladder.scales {
            return s.clone();
        }
        match (self.ladder.lo, self.ladder.hi) {
            (None, None) => default,
            (lo, hi) => {
                let lo = lo.unwrap_or_else(|| default[0].log2().round() as i32);
                let hi = hi.unwrap_or_else(|| default[default.len() - 1].log2().round() as i32);
                scale_ladder(lo, hi)
            }
        }
    }

    pub fn spectrum_options(&self) -> SpectrumOptions {
        SpectrumOptions { eps_tail: self.analysis.eps_tail, refine: self.analysis.refine, ..SpectrumOptions::default() }
    }

    pub fn slack(&self) -> Slack {
        Slack { lower: self.slack.lower, upper: self.slack.upper }
    }

    pub fn region(&self) -> Result<ConcentrationRegion> {
        let r = self.analysis.region.trim();
        let parts: Vec<&str> = r.split(':').collect();
        Ok(match parts.as_slice() {
            ["everything"] => ConcentrationRegion::Everything,
            ["ball", radius] => ConcentrationRegion::Ball { radius: radius.parse().context("ball radius")? },
            ["strip", axis, hw] => {
                let axis: usize = axis.parse().context("strip axis")?;
                if axis >= self.measure.dim {
                    bail!("strip axis {axis} is not below the dimension {}", self.measure.dim);
                }
                let hw: f64 = hw.parse().context("strip half width")?;
                ConcentrationRegion::strip(self.measure.dim, axis, hw)
            }
            _ => bail!("unrecognized region `{r}`"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip() {
        let c = RunConfig::default();
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(c, back);
        c.validate().unwrap();
    }

    #[test]
    fn sections_and_unknown_keys() {
        let c = RunConfig::from_toml("[measure]\nkind = \"circle\"\n[ladder]\nlo = 3\nhi = 5\n").unwrap();
        assert_eq!(c.measure.kind, "circle");
        assert_eq!(c.euclidean_ladder(), vec![8.0, 16.0, 32.0]);
        assert!(RunConfig::from_toml("[measure]\ncolour = 1\n").is_err());
    }

    #[test]
    fn field_level_validation() {
        let mut c = RunConfig::default();
        c.analysis.p = 1.0;
        assert!(c.validate().unwrap_err().to_string().contains("analysis.p"));
        let mut c = RunConfig::default();
        c.analysis.region = "strip:0:4".into();
        assert!(matches!(c.region().unwrap(), ConcentrationRegion::Boxes(_)));
        c.analysis.region = "blob".into();
        assert!(c.validate().is_err());
    }
}
