//! The mollified transform (fμ * ψ_{1/R})^(ξ) = ψ̂(ξ/R) Σ_j w_j f(x_j) e^{-2πi x_j·ξ}
//! on uniform frequency grids, and the regularized norms
//! X_{p,μ,R} = (R^{-d} ∫ |·|^p dξ)^{1/p} as Riemann sums over the window.
//!
//! Grids for the default ladders hold up to ~10^10 nodes, so norms are
//! accumulated while streaming over rows; node values are materialized only
//! on request. Layout-aware fast paths (per-axis tables for product
//! measures, a radial table for rotation invariant ones, both filled by a
//! type-1 NUFFT) are audited against direct sums on a sample of nodes.

use crate::error::{invalid, Error, Result};
use crate::measure::{DiscreteMeasure, Structure};
use crate::mollifier::Mollifier;
use crate::numeric::{expi_neg, lagrange_error_bound, ComplexNeumaier, NeumaierSum, UniformTable};
use crate::nufft::nufft_type1;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Default relative tail mass of |ψ̂(·/R)| left outside the window.
pub const DEFAULT_EPS_TAIL: f64 = 0.05;
/// Budget for materialized node values.
pub const DEFAULT_MEMORY_BUDGET_BYTES: f64 = 2.0 * 1024.0 * 1024.0 * 1024.0;
/// Budget for streamed node evaluations (after symmetry folding).
pub const DEFAULT_WORK_BUDGET_NODES: f64 = 4.0e9;
/// Fast paths must match direct sums to this fraction of Σ|w_j f(x_j)|.
pub const AUDIT_TOLERANCE: f64 = 1e-10;
/// Upper limit on audited nodes per sample.
pub const AUDIT_MAX_NODES: usize = 512;
/// Upper limit on point-node products spent in the audit.
const AUDIT_MAX_WORK: f64 = 2.0e8;
const RADIAL_TABLE_ORDER: usize = 8;
const RADIAL_STEPS_PER_CYCLE: f64 = 128.0;
const ROW_CHUNK: i64 = 8192;

/// Uniform lattice h·ℤ^d ∩ [-T, T]^d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub dim: usize,
    pub half_width: f64,
    pub spacing: f64,
    /// nodes are h·k with k ∈ [-k_max, k_max]^d
    pub k_max: i64,
}

impl FrequencyGrid {
    /// Largest spacing allowed for a support of diameter `diam`.
    pub fn max_spacing(diam: f64) -> f64 {
        1.0 / (4.0 * (diam + 1.0))
    }

    /// Grid of half width `t` at the maximal spacing divided by `refine`.
    pub fn new(dim: usize, diam: f64, t: f64, refine: u32) -> Self {
        let h = Self::max_spacing(diam) / refine.max(1) as f64;
        let k_max = (t / h).ceil() as i64;
        Self { dim, half_width: k_max as f64 * h, spacing: h, k_max }
    }

    pub fn node_count(&self) -> f64 {
        ((2 * self.k_max + 1) as f64).powi(self.dim as i32)
    }
}

/// Symmetry of |F| used to fold the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Symmetry {
    None,
    /// |F(-ξ)| = |F(ξ)| (real density)
    Central,
    /// |F| even in every coordinate separately
    Signs,
    /// |F| invariant under coordinate sign changes and permutations
    Full,
}

/// An axis-aligned box; infinite bounds are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    fn contains(&self, xi: &[f64]) -> bool {
        xi.iter().zip(&self.lo).zip(&self.hi).all(|((x, l), h)| *x >= *l && *x <= *h)
    }
}

/// Frequency region X where the transform is L¹-concentrated. It is always
/// intersected with the ball B_{100R}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConcentrationRegion {
    /// all of ℝ^d
    Everything,
    Ball { radius: f64 },
    Boxes(Vec<AxisBox>),
}

/// Radius of the ball that every concentration region is cut down to.
pub fn region_ball_radius(r: f64) -> f64 {
    100.0 * r
}

impl ConcentrationRegion {
    /// Strip |ξ_axis| ≤ half_width.
    pub fn strip(dim: usize, axis: usize, half_width: f64) -> Self {
        let mut lo = vec![f64::NEG_INFINITY; dim];
        let mut hi = vec![f64::INFINITY; dim];
        lo[axis] = -half_width;
        hi[axis] = half_width;
        ConcentrationRegion::Boxes(vec![AxisBox { lo, hi }])
    }

    /// Membership of ξ in X_R = X ∩ B_{100R}.
    pub fn contains(&self, xi: &[f64], r: f64) -> bool {
        let n2: f64 = xi.iter().map(|x| x * x).sum();
        let big = region_ball_radius(r);
        if n2 > big * big {
            return false;
        }
        match self {
            ConcentrationRegion::Everything => true,
            ConcentrationRegion::Ball { radius } => n2 <= radius * radius,
            ConcentrationRegion::Boxes(bs) => bs.iter().any(|b| b.contains(xi)),
        }
    }

    fn is_radial(&self) -> bool {
        !matches!(self, ConcentrationRegion::Boxes(_))
    }

    /// |X_R| = |X ∩ B_{100R}|. Exact for balls; for boxes the ball is cut
    /// into a midpoint grid of chords and each chord meets the boxes in an
    /// exactly measured union of intervals.
    pub fn volume(&self, dim: usize, r: f64) -> f64 {
        let big = region_ball_radius(r);
        let ball = |rad: f64| crate::geometry::unit_ball_volume(dim) * rad.powi(dim as i32);
        match self {
            ConcentrationRegion::Everything => ball(big),
            ConcentrationRegion::Ball { radius } => ball(radius.min(big)),
            ConcentrationRegion::Boxes(bs) => {
                let chord = |prefix: &[f64]| -> f64 {
                    let p2: f64 = prefix.iter().map(|x| x * x).sum();
                    if p2 >= big * big {
                        return 0.0;
                    }
                    let c = (big * big - p2).sqrt();
                    let last = dim - 1;
                    let mut iv: Vec<(f64, f64)> = bs
                        .iter()
                        .filter(|b| prefix.iter().enumerate().all(|(a, x)| *x >= b.lo[a] && *x <= b.hi[a]))
                        .map(|b| (b.lo[last].max(-c), b.hi[last].min(c)))
                        .filter(|(a, b)| b > a)
                        .collect();
                    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
                    let mut len = 0.0;
                    let mut cur: Option<(f64, f64)> = None;
                    for (a, b) in iv {
                        cur = match cur {
                            Some((ca, cb)) if a <= cb => Some((ca, cb.max(b))),
                            Some((ca, cb)) => {
                                len += cb - ca;
                                Some((a, b))
                            }
                            None => Some((a, b)),
                        };
                    }
                    if let Some((ca, cb)) = cur {
                        len += cb - ca;
                    }
                    len
                };
                match dim {
                    1 => chord(&[]),
                    _ => {
                        // piecewise Gauss–Legendre between box faces in each prefix axis
                        let pieces = |a: usize| -> Vec<(f64, f64)> {
                            let mut br = vec![-big, big];
                            for b in bs {
                                for v in [b.lo[a], b.hi[a]] {
                                    if v.is_finite() && v.abs() < big {
                                        br.push(v);
                                    }
                                }
                            }
                            br.sort_by(f64::total_cmp);
                            br.dedup();
                            br.windows(2).map(|w| (w[0], w[1])).collect()
                        };
                        let (gx, gw) = crate::numeric::gauss_legendre(if dim == 2 { 96 } else { 32 });
                        let nodes = |(a, b): (f64, f64)| -> Vec<(f64, f64)> {
                            gx.iter().zip(&gw).map(|(x, w)| (0.5 * (a + b) + 0.5 * (b - a) * x, 0.5 * (b - a) * w)).collect()
                        };
                        let mut s = 0.0;
                        if dim == 2 {
                            for pc in pieces(0) {
                                for (x, w) in nodes(pc) {
                                    s += w * chord(&[x]);
                                }
                            }
                        } else {
                            for pa in pieces(0) {
                                for pb in pieces(1) {
                                    for (x, wx) in nodes(pa) {
                                        for (y, wy) in nodes(pb) {
                                            s += wx * wy * chord(&[x, y]);
                                        }
                                    }
                                }
                            }
                        }
                        s
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumOptions {
    pub eps_tail: f64,
    /// exponents p (besides 1, 2, ∞) whose sums Σ|v|^p are accumulated
    pub extra_p: Vec<f64>,
    /// divide the maximal grid spacing by this factor
    pub refine: u32,
    /// override the window multiple T/R chosen from `eps_tail`
    pub window_multiple: Option<f64>,
    /// keep every node value (only for grids within the memory budget)
    pub materialize: bool,
    pub audit: bool,
    pub memory_budget_bytes: f64,
    pub work_budget_nodes: f64,
    /// shrink T to fit the work budget instead of failing (used in d = 3)
    pub cap_window: Option<bool>,
    pub region: Option<ConcentrationRegion>,
    /// skip the fast paths
    pub force_direct: bool,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            eps_tail: DEFAULT_EPS_TAIL,
            extra_p: Vec::new(),
            refine: 1,
            window_multiple: None,
            materialize: false,
            audit: true,
            memory_budget_bytes: DEFAULT_MEMORY_BUDGET_BYTES,
            work_budget_nodes: DEFAULT_WORK_BUDGET_NODES,
            cap_window: None,
            region: None,
            force_direct: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub nodes: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    /// certified interpolation error of the fast path, absolute
    pub interpolation_bound: f64,
    pub passed: bool,
}

/// Streamed sums over all grid nodes (weights from folding included).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSums {
    /// Σ|v|
    pub l1: f64,
    /// Σ|v|²
    pub l2sq: f64,
    pub linf: f64,
    /// (p, Σ|v|^p)
    pub powers: Vec<(f64, f64)>,
    /// number of nodes, (2K+1)^d
    pub nodes: f64,
    /// Σ|v| over nodes outside X_R, if a region was given
    pub l1_outside: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SpectrumSample {
    pub grid: FrequencyGrid,
    pub r: f64,
    /// requested tail tolerance
    pub eps_tail_requested: f64,
    /// certified tail fraction of the window actually used
    pub eps_tail: f64,
    pub window_multiple: f64,
    pub window_capped: bool,
    pub sums: NormSums,
    /// node values in lexicographic order of k, when materialized
    pub values: Option<Vec<Complex64>>,
    pub audit: Option<AuditReport>,
    pub path: &'static str,
    pub symmetry: Symmetry,
    /// Σ|w_j f(x_j)|
    pub l1_mass: f64,
    /// region whose outside mass is in `sums.l1_outside`
    pub region: Option<ConcentrationRegion>,
}

impl SpectrumSample {
    /// ‖ĝ‖_q over the window (Riemann sum, no R normalization).
    pub fn lebesgue_norm(&self, q: f64) -> Result<f64> {
        let hd = self.grid.spacing.powi(self.grid.dim as i32);
        if q.is_infinite() {
            return Ok(self.sums.linf);
        }
        let s = power_sum(&self.sums, q).ok_or_else(|| invalid("p", format!("Σ|v|^{q} was not accumulated")))?;
        Ok((hd * s).powf(1.0 / q))
    }
}

fn power_sum(s: &NormSums, q: f64) -> Option<f64> {
    if q == 1.0 {
        Some(s.l1)
    } else if q == 2.0 {
        Some(s.l2sq)
    } else {
        s.powers.iter().find(|(p, _)| *p == q).map(|(_, v)| *v)
    }
}

/// X_{p,μ,R} = (R^{-d} h^d Σ|v|^p)^{1/p}; max |v| for p = ∞.
pub fn regularized_norm(s: &SpectrumSample, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(invalid("p", format!("{p} < 1")));
    }
    if p.is_infinite() {
        return Ok(s.sums.linf);
    }
    let d = s.grid.dim as i32;
    let sum = power_sum(&s.sums, p).ok_or_else(|| invalid("p", format!("Σ|v|^{p} was not accumulated")))?;
    Ok((s.r.powi(-d) * s.grid.spacing.powi(d) * sum).powf(1.0 / p))
}

/// ψ̂(ξ/R) Σ_j w_j f(x_j) e^{-2πi⟨x_j, ξ⟩}, summed in index order with
/// compensation.
pub fn transform_at(m: &DiscreteMeasure, psi: &Mollifier, r: f64, xi: &[f64]) -> Complex64 {
    let rho = xi.iter().map(|x| x * x).sum::<f64>().sqrt() / r;
    measure_transform(m, xi) * psi.freq_radial(rho)
}

/// Σ_j w_j f(x_j) e^{-2πi⟨x_j, ξ⟩} without the mollifier.
pub fn measure_transform(m: &DiscreteMeasure, xi: &[f64]) -> Complex64 {
    let d = m.dim();
    let mut acc = ComplexNeumaier::default();
    for j in 0..m.len() {
        let x = m.point(j);
        let mut dot = NeumaierSum::new();
        for a in 0..d {
            dot.add(x[a] * xi[a]);
        }
        let c = m.density()[j] * m.weights()[j];
        acc.add(c * expi_neg(dot.value()));
    }
    acc.value()
}

enum Block {
    Axis { axis: usize, table: Vec<Complex64>, k_max: i64 },
    Radial { axes: Vec<usize>, table: UniformTable<Complex64> },
}

enum Evaluator {
    Blocks { blocks: Vec<Block>, constant: Complex64, interp: f64, name: &'static str },
    Direct { points: Vec<f64>, coeffs: Vec<Complex64> },
}

fn axis_table(xs: &[f64], coeffs: &[Complex64], h: f64, k_max: i64) -> Vec<Complex64> {
    nufft_type1(xs, coeffs, h, -k_max, (2 * k_max + 1) as usize)
}

/// Table of G(r) = Σ_j c_j e^{-2πi r ⟨x_j, e_0⟩} for a rotation invariant
/// cloud; returns the table and its certified interpolation error.
fn radial_table(m: &DiscreteMeasure, r_max: f64) -> (UniformTable<Complex64>, f64) {
    let d = m.dim();
    let extent = (0..m.len())
        .map(|j| m.point(j).iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let step = 1.0 / (RADIAL_STEPS_PER_CYCLE * extent);
    let count = (r_max / step).ceil() as usize + RADIAL_TABLE_ORDER + 2;
    let t: Vec<f64> = (0..m.len()).map(|j| m.points()[j * d]).collect();
    let vals = nufft_type1(&t, &m.coefficients(), step, 0, count);
    let bound = lagrange_error_bound(RADIAL_TABLE_ORDER, step, (TAU * extent).powi(RADIAL_TABLE_ORDER as i32) * m.l1_mass());
    (UniformTable::new(0.0, step, vals, RADIAL_TABLE_ORDER, true), bound)
}

/// Equiangular samples of a circle (or sphere) see rotation invariance only
/// below the aliasing frequency; the radial table is used when the azimuthal
/// count clears 2π·extent·r_max with a margin for the Bessel tail.
fn radial_resolved(m: &DiscreteMeasure, r_max: f64) -> bool {
    let extent = (0..m.len())
        .map(|j| m.point(j).iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0f64, f64::max);
    let azimuthal = match m.dim() {
        2 => m.len() as f64,
        _ => (2.0 * m.len() as f64).sqrt(),
    };
    let z = TAU * extent * r_max;
    azimuthal >= z + 10.0 * z.cbrt() + 16.0
}

fn all_at_origin(m: &DiscreteMeasure) -> bool {
    m.points().iter().all(|x| *x == 0.0)
}

fn build_evaluator(m: &DiscreteMeasure, grid: &FrequencyGrid, force_direct: bool) -> Evaluator {
    let direct = || Evaluator::Direct { points: m.points().to_vec(), coeffs: m.coefficients() };
    if force_direct {
        return direct();
    }
    let d = m.dim();
    let h = grid.spacing;
    let k = grid.k_max;
    let one = Complex64::new(1.0, 0.0);
    if d == 1 {
        let table = axis_table(m.points(), &m.coefficients(), h, k);
        return Evaluator::Blocks { blocks: vec![Block::Axis { axis: 0, table, k_max: k }], constant: one, interp: 0.0, name: "axis-table" };
    }
    match m.structure() {
        Structure::Radial => {
            if all_at_origin(m) {
                let c: Complex64 = m.coefficients().iter().sum();
                return Evaluator::Blocks { blocks: vec![], constant: c, interp: 0.0, name: "constant" };
            }
            let r_max = h * k as f64 * (d as f64).sqrt();
            if !radial_resolved(m, r_max) {
                return direct();
            }
            let (table, interp) = radial_table(m, r_max);
            Evaluator::Blocks { blocks: vec![Block::Radial { axes: (0..d).collect(), table }], constant: one, interp, name: "radial-table" }
        }
        Structure::Product(factors) => {
            let mut blocks = Vec::new();
            let mut constant = one;
            let mut interp = 0.0;
            for f in factors {
                let fm = &f.measure;
                if f.axes.len() == 1 {
                    let table = axis_table(fm.points(), &fm.coefficients(), h, k);
                    blocks.push(Block::Axis { axis: f.axes[0], table, k_max: k });
                } else if matches!(fm.structure(), Structure::Radial) {
                    if all_at_origin(fm) {
                        constant *= fm.coefficients().iter().sum::<Complex64>();
                    } else {
                        let r_max = h * k as f64 * (f.axes.len() as f64).sqrt();
                        if !radial_resolved(fm, r_max) {
                            return direct();
                        }
                        let (table, e) = radial_table(fm, r_max);
                        interp += e;
                        blocks.push(Block::Radial { axes: f.axes.clone(), table });
                    }
                } else {
                    return direct();
                }
            }
            Evaluator::Blocks { blocks, constant, interp, name: "product-tables" }
        }
        Structure::Scattered => direct(),
    }
}

impl Evaluator {
    fn name(&self) -> &'static str {
        match self {
            Evaluator::Blocks { name, .. } => name,
            Evaluator::Direct { .. } => "direct",
        }
    }

    #[inline]
    fn node(&self, k: &[i64], h: f64) -> Complex64 {
        match self {
            Evaluator::Blocks { blocks, constant, .. } => {
                let mut v = *constant;
                for b in blocks {
                    match b {
                        Block::Axis { axis, table, k_max } => v *= table[(k[*axis] + k_max) as usize],
                        Block::Radial { axes, table } => {
                            let q: f64 = axes.iter().map(|&a| (k[a] * k[a]) as f64).sum();
                            v *= table.eval(h * q.sqrt()).unwrap_or_default();
                        }
                    }
                }
                v
            }
            Evaluator::Direct { points, coeffs } => {
                let d = k.len();
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, c) in coeffs.iter().enumerate() {
                    let dot: f64 = (0..d).map(|a| points[j * d + a] * h * k[a] as f64).sum();
                    acc += c * expi_neg(dot);
                }
                acc
            }
        }
    }

    /// F on the row (prefix, lo..=hi) of the last axis.
    fn fill_row(&self, prefix: &[i64], lo: i64, hi: i64, h: f64, out: &mut Vec<Complex64>) {
        out.clear();
        let d = prefix.len() + 1;
        match self {
            Evaluator::Blocks { .. } => {
                let mut k = [0i64; 3];
                k[..d - 1].copy_from_slice(prefix);
                for kl in lo..=hi {
                    k[d - 1] = kl;
                    out.push(self.node(&k[..d], h));
                }
            }
            Evaluator::Direct { points, coeffs } => {
                let len = (hi - lo + 1) as usize;
                out.resize(len, Complex64::new(0.0, 0.0));
                const ANCHOR: usize = 256;
                for (j, c) in coeffs.iter().enumerate() {
                    let x = &points[j * d..(j + 1) * d];
                    let base: f64 = (0..d - 1).map(|a| x[a] * h * prefix[a] as f64).sum();
                    let stepv = expi_neg(x[d - 1] * h);
                    let mut i = 0usize;
                    while i < len {
                        let mut z = c * expi_neg(base + x[d - 1] * h * (lo + i as i64) as f64);
                        let end = (i + ANCHOR).min(len);
                        for o in &mut out[i..end] {
                            *o += z;
                            z *= stepv;
                        }
                        i = end;
                    }
                }
            }
        }
    }
}

fn choose_symmetry(m: &DiscreteMeasure, ev: &Evaluator) -> Symmetry {
    let real = m.is_real();
    match ev {
        Evaluator::Blocks { blocks, .. } => {
            let radial_all = blocks.len() == 1 && matches!(&blocks[0], Block::Radial { axes, .. } if axes.len() == m.dim());
            if blocks.is_empty() || radial_all {
                Symmetry::Full
            } else if real {
                Symmetry::Signs
            } else {
                Symmetry::None
            }
        }
        Evaluator::Direct { .. } => {
            if real {
                Symmetry::Central
            } else {
                Symmetry::None
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Row {
    prefix: [i64; 2],
    lo: i64,
    hi: i64,
}

fn rows(d: usize, k: i64, sym: Symmetry) -> Vec<Row> {
    let mut out = Vec::new();
    let mut push = |prefix: [i64; 2], lo: i64, hi: i64| {
        let mut a = lo;
        while a <= hi {
            let b = (a + ROW_CHUNK - 1).min(hi);
            out.push(Row { prefix, lo: a, hi: b });
            a = b + 1;
        }
    };
    match (d, sym) {
        (1, Symmetry::None) => push([0, 0], -k, k),
        (1, _) => push([0, 0], 0, k),
        (2, Symmetry::None) => (-k..=k).for_each(|a| push([a, 0], -k, k)),
        (2, Symmetry::Central) => {
            push([0, 0], 0, k);
            (1..=k).for_each(|a| push([a, 0], -k, k));
        }
        (2, Symmetry::Signs) => (0..=k).for_each(|a| push([a, 0], 0, k)),
        (2, Symmetry::Full) => (0..=k).for_each(|a| push([a, 0], 0, a)),
        (_, Symmetry::None) => {
            for a in -k..=k {
                for b in -k..=k {
                    push([a, b], -k, k);
                }
            }
        }
        (_, Symmetry::Central) => {
            push([0, 0], 0, k);
            (1..=k).for_each(|b| push([0, b], -k, k));
            for a in 1..=k {
                for b in -k..=k {
                    push([a, b], -k, k);
                }
            }
        }
        (_, Symmetry::Signs) => {
            for a in 0..=k {
                for b in 0..=k {
                    push([a, b], 0, k);
                }
            }
        }
        (_, Symmetry::Full) => {
            for a in 0..=k {
                for b in 0..=a {
                    push([a, b], 0, b);
                }
            }
        }
    }
    out
}

/// Number of grid nodes represented by the folded node k.
#[inline]
fn multiplicity(k: &[i64], sym: Symmetry) -> f64 {
    match sym {
        Symmetry::None => 1.0,
        Symmetry::Central => {
            if k.iter().all(|v| *v == 0) {
                1.0
            } else {
                2.0
            }
        }
        Symmetry::Signs => (1u32 << k.iter().filter(|v| **v != 0).count()) as f64,
        Symmetry::Full => {
            let signs = (1u32 << k.iter().filter(|v| **v != 0).count()) as f64;
            let perms = match k.len() {
                1 => 1.0,
                2 => {
                    if k[0] == k[1] {
                        1.0
                    } else {
                        2.0
                    }
                }
                _ => {
                    let (a, b, c) = (k[0], k[1], k[2]);
                    if a == b && b == c {
                        1.0
                    } else if a == b || b == c || a == c {
                        3.0
                    } else {
                        6.0
                    }
                }
            };
            signs * perms
        }
    }
}

/// Distinct images of k under the folding group.
fn images(k: &[i64], sym: Symmetry) -> Vec<[i64; 3]> {
    let d = k.len();
    let mut base = [0i64; 3];
    base[..d].copy_from_slice(k);
    let mut out: Vec<[i64; 3]> = Vec::new();
    let perms: Vec<[usize; 3]> = if sym == Symmetry::Full {
        match d {
            1 => vec![[0, 1, 2]],
            2 => vec![[0, 1, 2], [1, 0, 2]],
            _ => vec![[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]],
        }
    } else {
        vec![[0, 1, 2]]
    };
    for p in &perms {
        let mut q = [0i64; 3];
        for a in 0..d {
            q[a] = base[p[a]];
        }
        match sym {
            Symmetry::None => out.push(q),
            Symmetry::Central => {
                out.push(q);
                out.push([-q[0], -q[1], -q[2]]);
            }
            Symmetry::Signs | Symmetry::Full => {
                for mask in 0..(1 << d) {
                    let mut s = q;
                    for a in 0..d {
                        if mask & (1 << a) != 0 {
                            s[a] = -s[a];
                        }
                    }
                    out.push(s);
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

#[derive(Default, Clone)]
struct Partial {
    l1: NeumaierSum,
    l2: NeumaierSum,
    linf: f64,
    pw: Vec<NeumaierSum>,
    out: NeumaierSum,
}

impl Partial {
    fn merge(&mut self, o: &Partial) {
        self.l1.merge(&o.l1);
        self.l2.merge(&o.l2);
        self.linf = self.linf.max(o.linf);
        for (a, b) in self.pw.iter_mut().zip(&o.pw) {
            a.merge(b);
        }
        self.out.merge(&o.out);
    }
}

#[inline]
fn pow_abs(a: f64, p: f64) -> f64 {
    if p.fract() == 0.0 && p.abs() < 64.0 {
        a.powi(p as i32)
    } else {
        a.powf(p)
    }
}

/// Evaluate the mollified transform of `m` at scale `r` on the grid chosen
/// by the tail tolerance, accumulating the norm sums.
pub fn sample_spectrum(m: &DiscreteMeasure, psi: &Mollifier, r: f64, opts: &SpectrumOptions) -> Result<SpectrumSample> {
    if m.is_empty() {
        return Err(invalid("measure", "empty point cloud"));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid("R", "must be positive and finite"));
    }
    if psi.dim() != m.dim() {
        return Err(invalid("mollifier", "dimension differs from the measure"));
    }
    let d = m.dim();
    let diam = m.diameter();
    let mut c = match opts.window_multiple {
        Some(c) if c > 0.0 => c,
        Some(_) => return Err(invalid("window_multiple", "must be positive")),
        None => psi.window_multiple(opts.eps_tail)?,
    };
    let mut grid = FrequencyGrid::new(d, diam, c * r, opts.refine);
    let fold_factor = match d {
        1 => 2.0,
        2 => 8.0,
        _ => 48.0,
    };
    let mut capped = false;
    let work = grid.node_count() / fold_factor;
    if work > opts.work_budget_nodes {
        let cap = opts.cap_window.unwrap_or(d == 3);
        if !cap {
            let h = grid.spacing;
            let k_fit = ((opts.work_budget_nodes * fold_factor).powf(1.0 / d as f64) - 1.0) / 2.0;
            let c_fit = k_fit * h / r;
            return Err(Error::BudgetExceeded {
                what: "frequency grid (nodes after folding)",
                needed: work,
                budget: opts.work_budget_nodes,
                suggestion: format!(
                    "cap the window at T = {:.4}·R (implied eps_tail {:.3e}) or coarsen the grid",
                    c_fit,
                    psi.tail_fraction(c_fit)
                ),
            });
        }
        let k_fit = (((opts.work_budget_nodes * fold_factor).powf(1.0 / d as f64) - 1.0) / 2.0).floor() as i64;
        c = k_fit as f64 * grid.spacing / r;
        grid = FrequencyGrid::new(d, diam, c * r, opts.refine);
        capped = true;
    }
    if opts.materialize && grid.node_count() * 16.0 > opts.memory_budget_bytes {
        return Err(Error::BudgetExceeded {
            what: "materialized spectrum (bytes)",
            needed: grid.node_count() * 16.0,
            budget: opts.memory_budget_bytes,
            suggestion: "stream the norms instead of materializing, or lower eps_tail precision".into(),
        });
    }
    let eps_certified = psi.tail_fraction(grid.half_width / r);
    let l1_mass = m.l1_mass();
    let h = grid.spacing;
    let k = grid.k_max;

    if l1_mass == 0.0 {
        let nodes = grid.node_count();
        return Ok(SpectrumSample {
            grid,
            r,
            eps_tail_requested: opts.eps_tail,
            eps_tail: eps_certified,
            window_multiple: c,
            window_capped: capped,
            sums: NormSums {
                l1: 0.0,
                l2sq: 0.0,
                linf: 0.0,
                powers: opts.extra_p.iter().map(|p| (*p, 0.0)).collect(),
                nodes,
                l1_outside: opts.region.as_ref().map(|_| 0.0),
            },
            values: opts.materialize.then(|| vec![Complex64::new(0.0, 0.0); nodes as usize]),
            audit: None,
            path: "zero",
            symmetry: Symmetry::Full,
            l1_mass,
            region: opts.region.clone(),
        });
    }

    let ev = build_evaluator(m, &grid, opts.force_direct);
    let sym = if opts.materialize { Symmetry::None } else { choose_symmetry(m, &ev) };

    let audit = if opts.audit { Some(run_audit(m, &ev, &grid)?) } else { None };

    let row_list = rows(d, k, sym);
    let region = opts.region.as_ref();
    let region_radial = region.map(|g| g.is_radial()).unwrap_or(true);
    let ps = &opts.extra_p;
    let partials: Vec<(Partial, Option<Vec<Complex64>>)> = row_list
        .par_iter()
        .map_init(Vec::new, |buf, row| {
            let prefix = &row.prefix[..d - 1];
            ev.fill_row(prefix, row.lo, row.hi, h, buf);
            let mut part = Partial { pw: vec![NeumaierSum::new(); ps.len()], ..Default::default() };
            let mut kk = [0i64; 3];
            kk[..d - 1].copy_from_slice(prefix);
            let pre2: f64 = prefix.iter().map(|v| (v * v) as f64).sum();
            let mut kept = opts.materialize.then(|| Vec::with_capacity(buf.len()));
            for (i, f) in buf.iter().enumerate() {
                let kl = row.lo + i as i64;
                kk[d - 1] = kl;
                let rho = h * (pre2 + (kl * kl) as f64).sqrt() / r;
                let psi_v = psi.freq_radial(rho);
                let a = f.norm() * psi_v.abs();
                let w = multiplicity(&kk[..d], sym);
                part.l1.add(w * a);
                part.l2.add(w * a * a);
                if a > part.linf {
                    part.linf = a;
                }
                for (j, p) in ps.iter().enumerate() {
                    part.pw[j].add(w * pow_abs(a, *p));
                }
                if let Some(g) = region {
                    if region_radial {
                        let xi: Vec<f64> = kk[..d].iter().map(|v| *v as f64 * h).collect();
                        if !g.contains(&xi, r) {
                            part.out.add(w * a);
                        }
                    } else {
                        for img in images(&kk[..d], sym) {
                            let xi: Vec<f64> = img[..d].iter().map(|v| *v as f64 * h).collect();
                            if !g.contains(&xi, r) {
                                part.out.add(a);
                            }
                        }
                    }
                }
                if let Some(kv) = kept.as_mut() {
                    kv.push(f * psi_v);
                }
            }
            (part, kept)
        })
        .collect();

    let mut total = Partial { pw: vec![NeumaierSum::new(); ps.len()], ..Default::default() };
    let mut values = opts.materialize.then(|| Vec::with_capacity(grid.node_count() as usize));
    for (p, kept) in &partials {
        total.merge(p);
        if let (Some(v), Some(k)) = (values.as_mut(), kept) {
            v.extend_from_slice(k);
        }
    }
    let sums = NormSums {
        l1: total.l1.value(),
        l2sq: total.l2.value(),
        linf: total.linf,
        powers: ps.iter().zip(&total.pw).map(|(p, s)| (*p, s.value())).collect(),
        nodes: grid.node_count(),
        l1_outside: region.map(|_| total.out.value()),
    };
    Ok(SpectrumSample {
        grid,
        r,
        eps_tail_requested: opts.eps_tail,
        eps_tail: eps_certified,
        window_multiple: c,
        window_capped: capped,
        sums,
        values,
        audit,
        path: ev.name(),
        symmetry: sym,
        l1_mass,
        region: opts.region.clone(),
    })
}

fn run_audit(m: &DiscreteMeasure, ev: &Evaluator, grid: &FrequencyGrid) -> Result<AuditReport> {
    let d = grid.dim;
    let k = grid.k_max;
    let nodes = grid.node_count();
    let by_share = ((nodes / 100.0).ceil() as usize).clamp(16, AUDIT_MAX_NODES);
    let by_work = ((AUDIT_MAX_WORK / m.len() as f64) as usize).max(8);
    let count = by_share.min(by_work).min(nodes as usize);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed_0000 ^ (k as u64) ^ ((d as u64) << 40));
    let scale = m.l1_mass();
    let tol = AUDIT_TOLERANCE * scale;
    let mut worst: f64 = 0.0;
    for i in 0..count {
        let mut kk = [0i64; 3];
        for v in kk.iter_mut().take(d) {
            *v = rng.gen_range(-k..=k);
        }
        // always include the far corner, where interpolation is stretched most
        if i == 0 {
            kk[..d].fill(k);
        }
        let xi: Vec<f64> = kk[..d].iter().map(|v| *v as f64 * grid.spacing).collect();
        let fast = ev.node(&kk[..d], grid.spacing);
        let slow = measure_transform(m, &xi);
        worst = worst.max((fast - slow).norm());
    }
    let interp = match ev {
        Evaluator::Blocks { interp, .. } => *interp,
        Evaluator::Direct { .. } => 0.0,
    };
    let report = AuditReport { nodes: count, max_deviation: worst, tolerance: tol, interpolation_bound: interp, passed: worst <= tol };
    if !report.passed {
        return Err(Error::AuditFailed { deviation: worst / scale, tolerance: AUDIT_TOLERANCE });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{make_canonical_measure, MeasureKind, MeasureParams};
    use crate::mollifier::Family;

    fn params(dim: usize) -> MeasureParams {
        MeasureParams { dim, ..Default::default() }
    }

    #[test]
    fn dirac_values_are_the_mollifier() {
        let m = make_canonical_measure(MeasureKind::Dirac, &params(2), 1).unwrap();
        let psi = Mollifier::bump(2).unwrap();
        let opts = SpectrumOptions { materialize: true, eps_tail: 0.2, ..Default::default() };
        let s = sample_spectrum(&m, &psi, 4.0, &opts).unwrap();
        let v = s.values.as_ref().unwrap();
        let k = s.grid.k_max;
        let mut idx = 0;
        for a in -k..=k {
            for b in -k..=k {
                let xi = [a as f64 * s.grid.spacing, b as f64 * s.grid.spacing];
                assert_eq!(v[idx], Complex64::new(psi.eval_frequency(&[xi[0] / 4.0, xi[1] / 4.0]), 0.0));
                idx += 1;
            }
        }
    }

    #[test]
    fn dirac_norms_are_scale_invariant() {
        let m = make_canonical_measure(MeasureKind::Dirac, &params(2), 1).unwrap();
        for fam in [Family::SpaceCompactBump, Family::BandLimited] {
            let psi = Mollifier::new(fam, 2, 1.0).unwrap();
            let opts = SpectrumOptions::default();
            let base = sample_spectrum(&m, &psi, 16.0, &opts).unwrap();
            let (x1, x2) = (regularized_norm(&base, 1.0).unwrap(), regularized_norm(&base, 2.0).unwrap());
            for r in [32.0, 64.0, 128.0] {
                let s = sample_spectrum(&m, &psi, r, &opts).unwrap();
                assert!((regularized_norm(&s, 1.0).unwrap() / x1 - 1.0).abs() < 0.01);
                assert!((regularized_norm(&s, 2.0).unwrap() / x2 - 1.0).abs() < 0.01);
            }
        }
    }

    #[test]
    fn folded_sums_match_unfolded() {
        let cases = [
            (MeasureKind::Circle, params(2), 256),
            (MeasureKind::Segment, params(2), 512),
            (MeasureKind::MomentCurve, params(2), 64),
            (MeasureKind::Cantor, MeasureParams { dim: 1, depth: 5, ..Default::default() }, 1),
            (MeasureKind::Cylinder, params(3), 600),
        ];
        for (kind, p, n) in cases {
            let m = make_canonical_measure(kind, &p, n).unwrap();
            let psi = Mollifier::bump(p.dim).unwrap();
            let r = if p.dim == 3 { 0.5 } else { 2.0 };
            let opts = SpectrumOptions { eps_tail: 0.2, extra_p: vec![3.0], ..Default::default() };
            let folded = sample_spectrum(&m, &psi, r, &opts).unwrap_or_else(|e| panic!("{kind:?} {e:?}"));
            let full = sample_spectrum(&m, &psi, r, &SpectrumOptions { materialize: true, ..opts.clone() }).unwrap();
            assert_eq!(full.symmetry, Symmetry::None);
            for q in [1.0, 2.0, 3.0] {
                let a = regularized_norm(&folded, q).unwrap();
                let b = regularized_norm(&full, q).unwrap();
                assert!((a / b - 1.0).abs() < 1e-11, "{kind:?} q={q}: {a} vs {b} ({})", folded.path);
            }
            assert_eq!(folded.sums.nodes, full.sums.nodes);
        }
    }

    #[test]
    fn fast_paths_agree_with_direct_path() {
        let cases = [
            (MeasureKind::Circle, params(2), 1024),
            (MeasureKind::Segment, params(2), 2048),
            (MeasureKind::CantorProduct, MeasureParams { dim: 2, depth: 4, ..Default::default() }, 1),
        ];
        for (kind, p, n) in cases {
            let m = make_canonical_measure(kind, &p, n).unwrap();
            let psi = Mollifier::bump(2).unwrap();
            let opts = SpectrumOptions { eps_tail: 0.1, ..Default::default() };
            let fast = sample_spectrum(&m, &psi, 8.0, &opts).unwrap();
            let slow = sample_spectrum(&m, &psi, 8.0, &SpectrumOptions { force_direct: true, ..opts }).unwrap();
            assert_ne!(fast.path, "direct");
            assert!(fast.audit.as_ref().unwrap().passed);
            for q in [1.0, 2.0] {
                let a = regularized_norm(&fast, q).unwrap();
                let b = regularized_norm(&slow, q).unwrap();
                assert!((a / b - 1.0).abs() < 1e-9, "{kind:?} q={q}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_density_gives_zero_sample() {
        let m = make_canonical_measure(MeasureKind::Segment, &params(2), 100).unwrap().with_density(|_| Complex64::new(0.0, 0.0));
        let psi = Mollifier::bump(2).unwrap();
        let s = sample_spectrum(&m, &psi, 2.0, &SpectrumOptions { materialize: true, ..Default::default() }).unwrap();
        assert!(s.values.as_ref().unwrap().iter().all(|v| v.norm() == 0.0));
        assert_eq!(regularized_norm(&s, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn real_density_gives_conjugate_symmetric_values() {
        let m = make_canonical_measure(MeasureKind::MomentCurve, &params(2), 50)
            .unwrap()
            .with_density(|x| Complex64::new(1.0 + x[0], 0.0));
        let psi = Mollifier::bump(2).unwrap();
        let s = sample_spectrum(&m, &psi, 2.0, &SpectrumOptions { materialize: true, eps_tail: 0.2, ..Default::default() }).unwrap();
        let v = s.values.unwrap();
        let n = v.len();
        for i in 0..n {
            assert!((v[i] - v[n - 1 - i].conj()).norm() < 1e-13);
        }
    }

    #[test]
    fn band_limited_window_is_exact() {
        let m = make_canonical_measure(MeasureKind::Dirac, &params(2), 1).unwrap();
        let psi = Mollifier::band_limited(2).unwrap();
        let s = sample_spectrum(&m, &psi, 64.0, &SpectrumOptions::default()).unwrap();
        assert_eq!(s.eps_tail, 0.0);
        assert!(s.grid.half_width >= 64.0);
    }

    #[test]
    fn budget_errors_suggest_a_cap() {
        let m = make_canonical_measure(MeasureKind::Dirac, &params(2), 1).unwrap();
        let psi = Mollifier::bump(2).unwrap();
        let opts = SpectrumOptions { work_budget_nodes: 1e3, ..Default::default() };
        match sample_spectrum(&m, &psi, 64.0, &opts) {
            Err(Error::BudgetExceeded { suggestion, .. }) => assert!(suggestion.contains("eps_tail")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn region_volumes() {
        let r = 2.0;
        let ball = ConcentrationRegion::Everything.volume(2, r);
        assert!((ball - std::f64::consts::PI * 200.0 * 200.0).abs() < 1e-6);
        let strip = ConcentrationRegion::strip(2, 0, 3.0).volume(2, r);
        // area of {|x| ≤ 3} inside the disk of radius 200
        let exact = 4.0 * (3.0 * (200.0f64 * 200.0 - 9.0).sqrt() / 2.0 + 200.0 * 200.0 / 2.0 * (3.0f64 / 200.0).asin());
        assert!((strip / exact - 1.0).abs() < 1e-4, "{strip} {exact}");
    }

    #[test]
    fn region_outside_mass_respects_folding() {
        let m = make_canonical_measure(MeasureKind::Segment, &params(2), 512).unwrap();
        let psi = Mollifier::bump(2).unwrap();
        let region = ConcentrationRegion::Boxes(vec![AxisBox { lo: vec![-1.0, 0.0], hi: vec![5.0, 40.0] }]);
        let opts = SpectrumOptions { eps_tail: 0.2, region: Some(region), ..Default::default() };
        let a = sample_spectrum(&m, &psi, 4.0, &opts).unwrap();
        let b = sample_spectrum(&m, &psi, 4.0, &SpectrumOptions { materialize: true, ..opts }).unwrap();
        let (x, y) = (a.sums.l1_outside.unwrap(), b.sums.l1_outside.unwrap());
        assert!((x / y - 1.0).abs() < 1e-11, "{x} {y}");
    }
}
