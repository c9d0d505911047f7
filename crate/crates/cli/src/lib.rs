//! Batch front end: parse flags over a TOML RunConfig, run one subcommand,
//! write CSV/JSON/SVG plus the config and provenance into the output
//! directory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod verify;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use commands::Outcome;
use config::RunConfig;
use fourier_ratio::threshold::{parse_rational, to_f64};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "frkit", version, about = "Fourier ratio ladders, decay exponents and synthesis thresholds")]
pub struct Cli {
    /// TOML run configuration; flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// output directory (overrides output.dir)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// FR = X1/X2 across the scale ladder
    FrLadder(Overrides),
    /// decay exponent κ of FR
    Kappa(Overrides),
    /// p* = 2(d-2κ)/(α-2κ) in exact arithmetic
    Threshold(Overrides),
    /// κ for which p* equals the given p
    ThresholdInverse(Overrides),
    /// the κ ↦ p* curve
    SweepCurve(Overrides),
    /// geometric lower bounds, concentration upper bound and uncertainty
    Sandwich(Overrides),
    /// each inequality of the vanishing argument on computed data
    ProofChain {
        #[command(flatten)]
        o: Overrides,
        /// run the manifold version on the torus measure
        #[arg(long)]
        torus: bool,
    },
    /// localized spectral FR and κ_M on the torus
    TorusLadder(Overrides),
    /// support containment of P_R u and the orthogonality identity
    TorusPropagation(Overrides),
    /// oracle suite
    Verify(Overrides),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// measure kind (torus kind for torus subcommands)
    #[arg(long)]
    pub measure: Option<String>,
    /// ambient dimension (also the d of threshold subcommands)
    #[arg(long)]
    pub d: Option<usize>,
    /// sample count of the measure
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub length: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long)]
    pub k: Option<usize>,
    /// bump or band-limited
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub band_radius: Option<f64>,
    /// ladder R = 2^lo..2^hi
    #[arg(long, allow_hyphen_values = true)]
    pub lo: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    pub hi: Option<i32>,
    #[arg(long)]
    pub tail_fraction: Option<f64>,
    /// Lebesgue exponent (exact rational for threshold-inverse)
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub eps_tail: Option<f64>,
    /// grid refinement factor (h → h/refine)
    #[arg(long)]
    pub refine: Option<u32>,
    /// everything, ball:<radius> or strip:<axis>:<half width>
    #[arg(long)]
    pub region: Option<String>,
    /// support dimension (exact rational for threshold subcommands)
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<String>,
    /// points of the sweep curve
    #[arg(long)]
    pub points: Option<usize>,
    /// torus block radius N
    #[arg(long)]
    pub block: Option<usize>,
    /// dimension of the coordinate sub-torus
    #[arg(long)]
    pub along: Option<usize>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// leak tolerance
    #[arg(long)]
    pub tol: Option<f64>,
    /// comma separated verify corpus; empty for none
    #[arg(long)]
    pub corpus: Option<String>,
    #[arg(long)]
    pub frequencies: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn number(s: &str, field: &str) -> Result<f64> {
    Ok(to_f64(&parse_rational(s).with_context(|| field.to_string())?))
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig, torus: bool) -> Result<()> {
        if let Some(m) = &self.measure {
            if torus {
                cfg.torus.kind = m.clone();
            } else {
                cfg.measure.kind = m.clone();
            }
        }
        if let Some(d) = self.d {
            cfg.measure.dim = d;
            cfg.torus.dim = d;
            cfg.threshold.d = d as u32;
        }
        macro_rules! set {
            ($($field:ident => $($target:ident).+),* $(,)?) => {
                $(if let Some(v) = &self.$field { cfg.$($target).+ = v.clone().into(); })*
            };
        }
        set!(
            length => measure.length,
            ratio => measure.ratio,
            depth => measure.depth,
            k => measure.k,
            band_radius => mollifier.band_radius,
            tail_fraction => ladder.tail_fraction,
            epsilon => analysis.epsilon,
            eps_tail => analysis.eps_tail,
            refine => analysis.refine,
            region => analysis.region,
            points => threshold.points,
            along => torus.along,
            amplitude => torus.amplitude,
            tol => torus.leak_tolerance,
            frequencies => verify.frequencies,
            seed => seeds.seed,
        );
        if let Some(r) = self.radius {
            cfg.measure.radius = r;
            cfg.torus.radius = r;
        }
        if let Some(r) = self.ratio {
            cfg.torus.ratio = r;
        }
        if let Some(n) = self.n {
            cfg.measure.n = Some(n);
        }
        if let Some(n) = self.block {
            cfg.torus.n = Some(n);
        }
        if let Some(lo) = self.lo {
            cfg.ladder.lo = Some(lo);
            cfg.ladder.scales = None;
        }
        if let Some(hi) = self.hi {
            cfg.ladder.hi = Some(hi);
            cfg.ladder.scales = None;
        }
        if let Some(f) = &self.family {
            cfg.mollifier.family = serde_json::from_value(serde_json::Value::String(f.clone()))
                .with_context(|| format!("--family: `{f}` is not bump or band-limited"))?;
        }
        if let Some(p) = &self.p {
            cfg.threshold.p = p.clone();
            cfg.analysis.p = number(p, "--p")?;
        }
        if let Some(a) = &self.alpha {
            cfg.threshold.alpha = a.clone();
            cfg.analysis.alpha = Some(number(a, "--alpha")?);
        }
        if let Some(k) = &self.kappa {
            cfg.threshold.kappa = k.clone();
        }
        if let Some(c) = &self.corpus {
            cfg.verify.corpus = c.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
        }
        Ok(())
    }
}

/// Resolve the effective config for a parsed command line.
pub fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let (o, torus) = match &cli.command {
        Command::ProofChain { o, torus } => (o, *torus),
        Command::TorusLadder(o) | Command::TorusPropagation(o) => (o, true),
        Command::FrLadder(o)
        | Command::Kappa(o)
        | Command::Threshold(o)
        | Command::ThresholdInverse(o)
        | Command::SweepCurve(o)
        | Command::Sandwich(o)
        | Command::Verify(o) => (o, false),
    };
    o.apply(&mut cfg, torus)?;
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Run the command and write its outputs.
pub fn run(cli: &Cli) -> Result<(RunConfig, Outcome)> {
    let cfg = resolve(cli)?;
    let out = match &cli.command {
        Command::FrLadder(_) => commands::fr_ladder(&cfg)?,
        Command::Kappa(_) => commands::kappa(&cfg)?,
        Command::Threshold(_) => commands::threshold_cmd(&cfg)?,
        Command::ThresholdInverse(_) => commands::threshold_inverse_cmd(&cfg)?,
        Command::SweepCurve(_) => commands::sweep_curve_cmd(&cfg)?,
        Command::Sandwich(_) => commands::sandwich(&cfg)?,
        Command::ProofChain { torus, .. } => commands::proof_chain(&cfg, *torus)?,
        Command::TorusLadder(_) => commands::torus_ladder(&cfg)?,
        Command::TorusPropagation(_) => commands::torus_propagation(&cfg)?,
        Command::Verify(_) => verify::verify(&cfg)?,
    };
    commands::write_outputs(&cfg.output.dir, &cfg, &out)?;
    Ok((cfg, out))
}
