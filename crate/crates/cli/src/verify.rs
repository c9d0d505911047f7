//! `verify`: pipeline transforms and torus bands against the independent
//! oracles. An empty corpus is a vacuous pass.

use crate::commands::Outcome;
use crate::config::{RunConfig, VERIFY_CORPUS};
use anyhow::{bail, Result};
use fourier_ratio::measure::{make_canonical_measure, suggested_samples, MeasureKind, MeasureParams};
use fourier_ratio::mollifier::Mollifier;
use fourier_ratio::spectrum::transform_at;
use fourier_ratio::torus::{make_torus_measure, TorusKind, TorusMeasure, TorusParams};
use fr_oracles::{
    cantor_transform, circle_transform, lattice_band_count, segment_transform, torus_band_energies, torus_dirac_coefficient,
    torus_subtorus_coefficient,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

/// Frequencies stay below this radius; at R = [`VERIFY_SCALE`] the mollifier
/// factor is then bounded away from zero.
const XI_MAX: f64 = 50.0;
const VERIFY_SCALE: f64 = 256.0;
/// Samples of the segment: midpoint error (2πξh)²/24 ≤ 10⁻⁸ at |ξ| ≤ 50√2.
const SEGMENT_SAMPLES: usize = 1 << 20;

#[derive(Debug, Clone, Serialize)]
pub struct CorpusResult {
    pub name: String,
    pub comparisons: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Pipeline transform divided by the mollifier factor ψ̂(ξ/R).
fn unmollified(m: &fourier_ratio::measure::DiscreteMeasure, psi: &Mollifier, xi: &[f64]) -> Complex64 {
    let rho = xi.iter().map(|x| x * x).sum::<f64>().sqrt() / VERIFY_SCALE;
    transform_at(m, psi, VERIFY_SCALE, xi) / psi.freq_radial(rho)
}

fn euclidean(name: &str, cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<CorpusResult> {
    let k = cfg.verify.frequencies;
    let tol = cfg.verify.tolerance;
    let mut max_dev: f64 = 0.0;
    let mut ok = true;
    let mut record = |dev: f64, bound: f64| {
        max_dev = max_dev.max(dev);
        ok &= dev <= tol + bound;
    };
    match name {
        "segment" => {
            let params = MeasureParams { dim: 2, length: 1.0, ..Default::default() };
            let m = make_canonical_measure(MeasureKind::Segment, &params, SEGMENT_SAMPLES)?;
            let psi = Mollifier::bump(2)?;
            for _ in 0..k {
                let xi = [rng.gen_range(-XI_MAX..XI_MAX), rng.gen_range(-XI_MAX..XI_MAX)];
                let o = segment_transform(1.0, xi[0]);
                record((unmollified(&m, &psi, &xi) - o.value).norm(), o.error_bound);
            }
        }
        "circle" => {
            let params = MeasureParams { dim: 2, radius: 1.0, ..Default::default() };
            let n = suggested_samples(MeasureKind::Circle, &params, XI_MAX, 1e-3);
            let m = make_canonical_measure(MeasureKind::Circle, &params, n)?;
            let psi = Mollifier::bump(2)?;
            for _ in 0..k {
                let rho = rng.gen_range(0.0..XI_MAX);
                let th = rng.gen_range(0.0..std::f64::consts::TAU);
                let xi = [rho * th.cos(), rho * th.sin()];
                let o = circle_transform(1.0, rho);
                record((unmollified(&m, &psi, &xi) - o.value).norm(), o.error_bound);
            }
        }
        "cantor" => {
            let params = MeasureParams { dim: 1, ratio: 1.0 / 3.0, depth: 10, ..Default::default() };
            let m = make_canonical_measure(MeasureKind::Cantor, &params, 1)?;
            let psi = Mollifier::bump(1)?;
            for _ in 0..k {
                let xi = rng.gen_range(-4.0 * XI_MAX..4.0 * XI_MAX);
                let o = cantor_transform(params.ratio, params.depth, xi);
                let pipe = transform_at(&m, &psi, 4.0 * VERIFY_SCALE, &[xi]) / psi.freq_radial(xi.abs() / (4.0 * VERIFY_SCALE));
                record((pipe - o.value).norm(), o.error_bound);
            }
        }
        _ => unreachable!(),
    }
    Ok(CorpusResult { name: name.into(), comparisons: k, max_deviation: max_dev, tolerance: tol, passed: ok })
}

fn torus_bands(u: &TorusMeasure, oracle: impl Fn(&[i64]) -> Complex64) -> (usize, f64, bool) {
    let n2 = (u.block_radius() * u.block_radius()) as u64;
    let want = torus_band_energies(u.dim(), n2, oracle);
    let mut max_dev: f64 = 0.0;
    let mut mult_ok = true;
    let mut count = 0;
    let bands = u.bands();
    for m in 0..=n2 {
        let b = bands.iter().find(|b| b.m == m);
        let (e, mult) = b.map_or((0.0, 0), |b| (b.energy, b.multiplicity));
        max_dev = max_dev.max((e - want[m as usize].value).abs() - want[m as usize].error_bound);
        mult_ok &= mult == lattice_band_count(u.dim(), m);
        count += 1;
    }
    (count, max_dev.max(0.0), mult_ok)
}

fn torus(cfg: &RunConfig) -> Result<CorpusResult> {
    let tol = cfg.verify.torus_tolerance;
    let mut comparisons = 0;
    let mut max_dev: f64 = 0.0;
    let mut ok = true;
    let cases = [(TorusKind::Dirac, 1usize, 64usize), (TorusKind::Dirac, 2, 24), (TorusKind::SubTorus, 2, 32), (TorusKind::SubTorus, 3, 8)];
    for (kind, d, n) in cases {
        let p = TorusParams { dim: d, along: 1, ..Default::default() };
        let u = make_torus_measure(kind, &p, n)?;
        let zero = vec![0.0; d];
        let (c, dev, mult) = match kind {
            TorusKind::Dirac => torus_bands(&u, |k| torus_dirac_coefficient(&zero, k)),
            _ => torus_bands(&u, |k| torus_subtorus_coefficient(&[0], k)),
        };
        comparisons += c;
        max_dev = max_dev.max(dev);
        ok &= mult && dev <= tol;
    }
    Ok(CorpusResult { name: "torus".into(), comparisons, max_deviation: max_dev, tolerance: tol, passed: ok })
}

pub fn verify(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome { command: "verify".into(), ..Default::default() };
    for name in &cfg.verify.corpus {
        if !VERIFY_CORPUS.contains(&name.as_str()) {
            bail!("verify.corpus: unknown entry `{name}` (expected one of {})", VERIFY_CORPUS.join(", "));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seeds.seed);
    let mut results = Vec::new();
    for name in &cfg.verify.corpus {
        let r = if name == "torus" { torus(cfg)? } else { euclidean(name, cfg, &mut rng)? };
        out.checks += 1;
        if !r.passed {
            out.failures.push(crate::commands::Failure {
                check: format!("oracle-{}", r.name),
                r: None,
                detail: format!("max deviation {:e} exceeds {:e}", r.max_deviation, r.tolerance),
            });
        }
        results.push(r);
    }
    out.summary = json!({ "results": results });
    out.files.push(("verify.json".into(), format!("{}\n", serde_json::to_string_pretty(&out.summary)?)));
    Ok(out)
}
