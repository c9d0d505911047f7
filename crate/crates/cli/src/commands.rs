//! Subcommands. Each returns an [`Outcome`]: the files to write, a summary
//! for stdout and the list of failed checks.

use crate::config::RunConfig;
use anyhow::{bail, Context, Result};
use fourier_ratio::geometry::{dyadic_ladder, estimate_alpha, neighborhood_volume, GeometryReport};
use fourier_ratio::measure::{make_canonical_measure, DiscreteMeasure};
use fourier_ratio::mollifier::Mollifier;
use fourier_ratio::ratio::{
    cauchy_schwarz_check, estimate_kappa, holder_check, ladder_measure, ratio_ladder_samples, sandwich_check, RatioSeries,
    INEQUALITY_TOLERANCE,
};
use fourier_ratio::report::{exponent_json, geometry_csv, loglog_svg, Curve};
use fourier_ratio::spectrum::{SpectrumSample, AUDIT_TOLERANCE};
use fourier_ratio::threshold::{parse_rational, proof_chain_check, sweep_curve, threshold, threshold_inverse, to_f64, Extended};
use fourier_ratio::torus::{
    apply_multiplier, block_radius_for, make_torus_measure, manifold_proof_chain_check, manifold_ratio_series,
    support_propagation_check, TorusMeasure, SATURATION_TOLERANCE, WEIGHT_TAIL_TOLERANCE,
};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub check: String,
    pub r: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub command: String,
    pub summary: Value,
    pub failures: Vec<Failure>,
    /// (file name, contents)
    pub files: Vec<(String, String)>,
    pub checks: usize,
}

impl Outcome {
    fn new(command: &str) -> Self {
        Outcome { command: command.into(), ..Default::default() }
    }

    fn check(&mut self, ok: bool, check: &str, r: Option<f64>, detail: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(Failure { check: check.into(), r, detail: detail() });
        }
    }

    fn file(&mut self, name: &str, contents: String) {
        self.files.push((name.into(), contents));
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn report(&self) -> Value {
        json!({
            "command": self.command,
            "passed": self.passed(),
            "checks": self.checks,
            "failures": self.failures,
            "summary": self.summary,
        })
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    s
}

/// Provenance written next to every result: version and every tolerance
/// and slack in force.
pub fn provenance(cfg: &RunConfig, command: &str) -> Value {
    json!({
        "tool": "frkit",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "tolerances": {
            "eps_tail": cfg.analysis.eps_tail,
            "inequality_relative": INEQUALITY_TOLERANCE,
            "audit_relative": AUDIT_TOLERANCE,
            "torus_weight_tail": WEIGHT_TAIL_TOLERANCE,
            "torus_leak": cfg.torus.leak_tolerance,
            "saturation": SATURATION_TOLERANCE,
            "oracle_absolute": cfg.verify.tolerance,
            "torus_oracle_absolute": cfg.verify.torus_tolerance,
        },
        "slack": { "lower": cfg.slack.lower, "upper": cfg.slack.upper },
        "seed": cfg.seeds.seed,
    })
}

/// Write the outcome with config, provenance and the report.
pub fn write_outputs(dir: &Path, cfg: &RunConfig, out: &Outcome) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = vec![
        ("run_config.toml".to_string(), cfg.to_toml()),
        ("provenance.json".to_string(), pretty(&provenance(cfg, &out.command))),
        ("report.json".to_string(), pretty(&out.report())),
    ];
    files.extend(out.files.iter().cloned());
    for (name, body) in files {
        std::fs::write(dir.join(&name), body).with_context(|| format!("writing {name}"))?;
    }
    Ok(())
}

fn measure(cfg: &RunConfig, psi: &Mollifier, ladder: &[f64]) -> Result<DiscreteMeasure> {
    let kind = cfg.measure.kind()?;
    let params = cfg.measure.params();
    Ok(match cfg.measure.n {
        Some(n) => make_canonical_measure(kind, &params, n)?,
        None => ladder_measure(kind, &params, psi, ladder, cfg.analysis.eps_tail)?,
    })
}

fn fr_svg(title: &str, series: &RatioSeries, extra: Vec<Curve>) -> String {
    let mut curves = vec![Curve {
        label: format!("FR {}", series.label),
        points: series.ladder.iter().cloned().zip(series.fr.iter().cloned()).collect(),
        dashed: false,
    }];
    curves.extend(extra);
    loglog_svg(title, "R", "FR", &curves)
}

struct Ladder {
    m: DiscreteMeasure,
    series: RatioSeries,
    samples: Vec<SpectrumSample>,
}

fn run_ladder(cfg: &RunConfig) -> Result<Ladder> {
    let psi = cfg.mollifier(cfg.measure.dim)?;
    let ladder = cfg.euclidean_ladder();
    let m = measure(cfg, &psi, &ladder)?;
    let (series, samples) = ratio_ladder_samples(&m, &psi, &ladder, cfg.analysis.p, &cfg.spectrum_options())?;
    Ok(Ladder { m, series, samples })
}

fn inequality_checks(out: &mut Outcome, samples: &[SpectrumSample], p: f64) -> Result<()> {
    for s in samples {
        let h = holder_check(s, p)?;
        out.check(h.passed, "holder", Some(s.r), || format!("{} > {}", h.lhs, h.rhs));
        let c = cauchy_schwarz_check(s)?;
        out.check(c.passed, "cauchy-schwarz", Some(s.r), || format!("FR {} > {}", c.fr, c.bound));
    }
    Ok(())
}

pub fn fr_ladder(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::new("fr-ladder");
    let l = run_ladder(cfg)?;
    inequality_checks(&mut out, &l.samples, cfg.analysis.p)?;
    out.summary = json!({ "label": l.series.label, "R": l.series.ladder, "FR": l.series.fr });
    out.file("ratio_series.csv", l.series.to_csv());
    out.file("fr.svg", fr_svg("Fourier ratio", &l.series, vec![]));
    Ok(out)
}

pub fn kappa(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::new("kappa");
    let l = run_ladder(cfg)?;
    inequality_checks(&mut out, &l.samples, cfg.analysis.p)?;
    let e = estimate_kappa(&l.series, cfg.ladder.tail_fraction)?;
    let ej = exponent_json(&e, &l.series.ladder);
    out.summary = ej.clone();
    out.file("exponent.json", pretty(&ej));
    out.file("ratio_series.csv", l.series.to_csv());
    let c = l.series.fr[e.window[0]] * l.series.ladder[e.window[0]].powf(e.kappa);
    let fit = Curve {
        label: format!("fit R^-{:.3}", e.kappa),
        points: l.series.ladder.iter().map(|r| (*r, c * r.powf(-e.kappa))).collect(),
        dashed: true,
    };
    out.file("fr.svg", fr_svg("Fourier ratio and fitted decay", &l.series, vec![fit]));
    Ok(out)
}

pub fn threshold_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::new("threshold");
    let t = &cfg.threshold;
    let res = threshold(t.d, &parse_rational(&t.alpha)?, &parse_rational(&t.kappa)?)?;
    out.summary = res.to_json();
    out.file("threshold.json", pretty(&out.summary));
    Ok(out)
}

pub fn threshold_inverse_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::new("threshold-inverse");
    let t = &cfg.threshold;
    let k = threshold_inverse(t.d, &parse_rational(&t.alpha)?, &parse_rational(&t.p)?)?;
    out.summary = json!({
        "d": t.d,
        "alpha": to_f64(&parse_rational(&t.alpha)?),
        "p": to_f64(&parse_rational(&t.p)?),
        "kappa": to_f64(&k),
        "exact": { "kappa": k.to_string() },
    });
    out.file("threshold_inverse.json", pretty(&out.summary));
    Ok(out)
}

pub fn sweep_curve_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::new("sweep-curve");
    let t = &cfg.threshold;
    let alpha = parse_rational(&t.alpha)?;
    let pts = sweep_curve(t.d, &alpha, t.points)?;
    let mut csv = String::from("kappa,p_star\n");
    let mut curve = Vec::new();
    let half = to_f64(&alpha) / 2.0;
    for (k, p) in &pts {
        csv.push_str(&format!("{:e},{}\n", to_f64(k), match p {
            Extended::Finite(q) => format!("{:e}", to_f64(q)),
            Extended::Infinite => "inf".into(),
        }));
        if let Extended::Finite(q) = p {
            curve.push((half - to_f64(k), to_f64(q)));
        }
    }
    out.summary = json!({ "d": t.d, "alpha": to_f64(&alpha), "points": pts.len() });
    out.file("sweep.csv", csv);
    let c = Curve { label: format!("p* (d={}, α={})", t.d, t.alpha), points: curve, dashed: false };
    out.file("sweep.svg", loglog_svg("synthesis threshold against α/2 - κ", "α/2 - κ", "p*", &[c]));
    Ok(out)
}

/// Geometry reports at δ = 1/R for every ladder scale.
fn ladder_geometry(m: &DiscreteMeasure, ladder: &[f64]) -> Result<Vec<GeometryReport>> {
    let support = m.density_support();
    ladder.iter().map(|r| Ok(neighborhood_volume(&support, 1.0 / r)?)).collect()
}

pub fn sandwich(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::new("sandwich");
    let l = run_ladder(cfg)?;
    let psi = cfg.mollifier(cfg.measure.dim)?;
    let geometry = ladder_geometry(&l.m, &l.series.ladder)?;
    let region = cfg.region()?;
    let slack = cfg.slack();
    let d = l.m.dim() as i32;
    let mut rows = Vec::new();
    let (mut lower_curve, mut cover_curve) = (Vec::new(), Vec::new());
    for (i, &r) in l.series.ladder.iter().enumerate() {
        let fr = l.series.fr[i];
        let g = &geometry[i];
        let vol_bound = (r.powi(d) * g.volume).powf(-0.5);
        let cover_bound = (g.covering_count as f64).powf(-0.5);
        out.check(fr >= slack.lower * vol_bound, "sandwich-lower", Some(r), || format!("FR {fr} < {} x {vol_bound}", slack.lower));
        out.check(fr >= slack.lower * cover_bound, "covering-lower", Some(r), || format!("FR {fr} < {} x {cover_bound}", slack.lower));
        let c = sandwich_check(&l.m, &psi, &l.series, &region, r, &cfg.spectrum_options(), slack)?;
        out.check(c.upper_ok == Some(true), "sandwich-upper", Some(r), || format!("FR {fr}, bound {:?}, eta {}", c.upper, c.eta));
        out.check(c.uncertainty_ok, "uncertainty", Some(r), || format!("{} > {} x {}", c.uncertainty_lhs, slack.upper, c.uncertainty_rhs));
        lower_curve.push((r, vol_bound));
        cover_curve.push((r, cover_bound));
        rows.push(json!({ "R": r, "fr": fr, "volume_bound": vol_bound, "covering_bound": cover_bound, "concentration": c }));
    }
    out.summary = json!({ "label": l.series.label, "checks": out.checks, "failed": out.failures.len() });
    out.file("sandwich.json", pretty(&json!({ "label": l.series.label, "rows": rows })));
    out.file("geometry.csv", geometry_csv(&geometry));
    out.file("ratio_series.csv", l.series.to_csv());
    let extra = vec![
        Curve { label: "(R^d|E|)^-1/2".into(), points: lower_curve, dashed: true },
        Curve { label: "N(1/R)^-1/2".into(), points: cover_curve, dashed: true },
    ];
    out.file("fr.svg", fr_svg("Fourier ratio and its geometric lower bounds", &l.series, extra));
    Ok(out)
}

pub fn proof_chain(cfg: &RunConfig, torus: bool) -> Result<Outcome> {
    if torus {
        return torus_proof_chain(cfg);
    }
    let mut out = Outcome::new("proof-chain");
    let l = run_ladder(cfg)?;
    let psi = cfg.mollifier(cfg.measure.dim)?;
    let geometry = ladder_geometry(&l.m, &l.series.ladder)?;
    let est = estimate_kappa(&l.series, cfg.ladder.tail_fraction)?;
    let alpha = match (cfg.analysis.alpha, l.m.known_dimension()) {
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => {
            let lad = dyadic_ladder(cfg.analysis.geometry_lo, cfg.analysis.geometry_hi);
            estimate_alpha(&l.m.density_support(), &lad)?.fitted_alpha
        }
    };
    let rep = proof_chain_check(&l.m, &psi, &l.series, &l.samples, &geometry, &est, alpha, cfg.analysis.p, cfg.analysis.epsilon)?;
    for row in &rep.rows {
        out.check(row.holder.passed, "holder", Some(row.r), || format!("{} > {}", row.holder.lhs, row.holder.rhs));
        if let Some(pr) = &row.pairing {
            out.check(pr.passed, "pairing", Some(row.r), || format!("{} > {}", pr.lhs, pr.rhs));
        }
        out.check(row.volume_holds, "volume", Some(row.r), || format!("{} > {}", row.omega_volume, row.volume_bound));
    }
    out.summary = json!({ "label": rep.label, "verdict": rep.verdict, "exponent": rep.exponent, "implication": rep.implication });
    out.file("proof_chain.json", pretty(&serde_json::to_value(&rep)?));
    out.file("ratio_series.csv", l.series.to_csv());
    Ok(out)
}

fn torus_measure(cfg: &RunConfig, psi: &Mollifier, ladder: &[f64]) -> Result<TorusMeasure> {
    let kind = cfg.torus.kind()?;
    let params = cfg.torus.params();
    let r_max = ladder.iter().cloned().fold(0.0, f64::max);
    let dim = torus_dim(cfg)?;
    let n = match cfg.torus.n {
        Some(n) => n,
        None => block_radius_for(psi, dim, r_max)?,
    };
    Ok(make_torus_measure(kind, &params, n)?)
}

fn torus_dim(cfg: &RunConfig) -> Result<usize> {
    use fourier_ratio::torus::TorusKind::*;
    Ok(match cfg.torus.kind()? {
        CantorOnT1 => 1,
        EmbeddedCircle | CurveGraph => 2,
        _ => cfg.torus.dim,
    })
}

pub fn torus_ladder(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::new("torus-ladder");
    let psi = cfg.torus_mollifier(torus_dim(cfg)?)?;
    let ladder = cfg.torus_ladder();
    let u = torus_measure(cfg, &psi, &ladder)?;
    let bands = u.bands();
    let band_energy: f64 = bands.iter().map(|b| b.energy * b.energy).sum();
    let coeff_energy = u.coefficient_energy();
    out.check((band_energy - coeff_energy).abs() <= 1e-12 * coeff_energy.max(1e-300), "parseval", None, || {
        format!("{band_energy} vs {coeff_energy}")
    });
    let (ts, norms) = manifold_ratio_series(&u, &psi, &ladder, cfg.analysis.p)?;
    for nm in &norms {
        let (l1, l2) = (nm.seq_norm(1.0), nm.seq_norm(2.0));
        let ok = l1 <= (nm.bands_used as f64).sqrt() * l2 * (1.0 + INEQUALITY_TOLERANCE);
        out.check(ok, "cauchy-schwarz", Some(nm.r), || format!("{l1} > sqrt({}) x {l2}", nm.bands_used));
    }
    let e = estimate_kappa(&ts.series, cfg.ladder.tail_fraction)?;
    let ej = exponent_json(&e, &ladder);
    out.summary = json!({ "label": u.label, "N": u.block_radius(), "exponent": ej });
    out.file("exponent.json", pretty(&ej));
    out.file("torus_series.csv", ts.to_csv());
    out.file("fr.svg", fr_svg("localized spectral Fourier ratio", &ts.series, vec![]));
    Ok(out)
}

pub fn torus_propagation(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::new("torus-propagation");
    let dim = torus_dim(cfg)?;
    let psi = cfg.torus_mollifier(dim)?;
    let ladder = cfg.torus_ladder();
    let u = torus_measure(cfg, &psi, &ladder)?;
    let mut rows = Vec::new();
    let mut csv = String::from("label,R,radius,grid,leak_fraction,A2,A2_field\n");
    for &r in &ladder {
        let rep = support_propagation_check(&u, &psi, r, cfg.torus.leak_tolerance)?;
        out.check(rep.passed, "leak", Some(r), || format!("leak {} > {}", rep.leak_fraction, rep.tol));
        let a2 = fourier_ratio::torus::spectral_norms(&u, &psi, r, 2.0)?.a2;
        let field = apply_multiplier(&u, &psi, r, Some(rep.grid))?;
        let a2_field = r.powf(-(dim as f64) / 2.0) * field.l2_norm();
        out.check((a2 - a2_field).abs() <= 1e-10 * a2.max(1e-300), "orthogonality", Some(r), || format!("A2 {a2} vs {a2_field}"));
        csv.push_str(&format!("{},{},{:e},{},{:e},{:e},{:e}\n", u.label, r, rep.radius, rep.grid, rep.leak_fraction, a2, a2_field));
        rows.push(rep);
    }
    out.summary = json!({ "label": u.label, "N": u.block_radius(), "max_leak": rows.iter().map(|r| r.leak_fraction).fold(0.0, f64::max) });
    out.file("propagation.json", pretty(&serde_json::to_value(&rows)?));
    out.file("propagation.csv", csv);
    Ok(out)
}

fn torus_proof_chain(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::new("proof-chain");
    let psi = cfg.torus_mollifier(torus_dim(cfg)?)?;
    let ladder = cfg.torus_ladder();
    let u = torus_measure(cfg, &psi, &ladder)?;
    let deltas = dyadic_ladder(cfg.analysis.geometry_lo, cfg.analysis.geometry_hi);
    if deltas.len() < 2 {
        bail!("analysis.geometry_lo/hi: need at least two neighborhood scales");
    }
    let rep = manifold_proof_chain_check(&u, &psi, &ladder, cfg.analysis.p, cfg.analysis.epsilon, &deltas)?;
    for row in &rep.rows {
        out.check(row.holder.passed, "holder", Some(row.r), || format!("{} > {}", row.holder.lhs, row.holder.rhs));
        out.check(row.cauchy_schwarz, "cauchy-schwarz", Some(row.r), String::new);
        if let Some(pr) = &row.pairing {
            out.check(pr.passed, "pairing", Some(row.r), || format!("{} > {}", pr.lhs, pr.rhs));
        }
    }
    out.summary = json!({
        "label": rep.label,
        "verdict": rep.verdict,
        "k": rep.k,
        "kappa_m": rep.kappa_m,
        "exponent": rep.exponent,
        "block_partial": rep.block_partial,
    });
    out.file("proof_chain.json", pretty(&serde_json::to_value(&rep)?));
    Ok(out)
}
