//! Flat torus T^d = (ℝ/ℤ)^d: eigenspace energies from Fourier coefficients,
//! the localized spectral ratio, the multiplier P_R and its finite
//! propagation, and the manifold version of the proof chain.
//!
//! Eigenvalues of -Δ are 4π²m with m = |n|², so bands are indexed by the
//! integer m and λ = 2π√m.

use crate::error::{invalid, Error, Result};
use crate::geometry::unit_ball_volume;
use crate::mollifier::{Family, Mollifier};
use crate::numeric::{fit_line, NeumaierSum};
use crate::ratio::{estimate_kappa, holder_row, ExponentEstimate, HolderRow, RatioSeries, INEQUALITY_TOLERANCE};
use crate::threshold::{exponent_value, PairingRow, CHAIN_CONSISTENT};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// Bound on |ψ(λ/R)| past the block edge. Below it the multiplier is treated
/// as exactly zero; the actual bound is reported.
pub const WEIGHT_TAIL_TOLERANCE: f64 = 1e-8;
/// Synthesis has ≥ 99.9% of its L² mass within this many multiples of d/N
/// of the support (Dirichlet kernel tails decay like 1/(Nδ)).
pub const RESOLUTION_CONSTANT: f64 = 200.0;
/// Relative increment of the block-partial sum over the last dyadic band
/// range below which it is flagged as saturated.
pub const SATURATION_TOLERANCE: f64 = 1e-4;
/// Largest spatial grid (points) synthesized for the pairing row.
pub const SYNTHESIS_MAX_POINTS: usize = 1 << 24;
pub const LEAK_TOLERANCE: f64 = 1e-6;
const MAX_BLOCK_COEFFS: usize = 1 << 26;

/// Block radius used when nothing forces a larger one.
pub fn default_block_radius(dim: usize) -> usize {
    if dim >= 3 {
        64
    } else {
        256
    }
}

/// Smallest block that holds the multiplier at scale `r_max` (the weight
/// beyond 2πN/R is below [`WEIGHT_TAIL_TOLERANCE`]), never below the default.
pub fn block_radius_for(psi: &Mollifier, dim: usize, r_max: f64) -> Result<usize> {
    let s = weight_cutoff(psi)?;
    let need = (s * r_max / (2.0 * PI)).ceil() as usize + 1;
    Ok(need.max(default_block_radius(dim)))
}

fn weight_cutoff(psi: &Mollifier) -> Result<f64> {
    psi.spectral_cutoff(WEIGHT_TAIL_TOLERANCE)?
        .ok_or_else(|| Error::Unsupported("spectral weight table does not reach the tail tolerance".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TorusKind {
    Dirac,
    SubTorus,
    EmbeddedCircle,
    CantorOnT1,
    CurveGraph,
}

impl TorusKind {
    pub const ALL: [TorusKind; 5] =
        [TorusKind::Dirac, TorusKind::SubTorus, TorusKind::EmbeddedCircle, TorusKind::CantorOnT1, TorusKind::CurveGraph];

    pub fn name(self) -> &'static str {
        match self {
            TorusKind::Dirac => "dirac",
            TorusKind::SubTorus => "sub-torus",
            TorusKind::EmbeddedCircle => "embedded-circle",
            TorusKind::CantorOnT1 => "cantor-on-t1",
            TorusKind::CurveGraph => "curve-graph",
        }
    }
}

impl fmt::Display for TorusKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TorusKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dirac" | "point" => Ok(TorusKind::Dirac),
            "sub-torus" | "subtorus" => Ok(TorusKind::SubTorus),
            "embedded-circle" | "circle" => Ok(TorusKind::EmbeddedCircle),
            "cantor-on-t1" | "cantor" => Ok(TorusKind::CantorOnT1),
            "curve-graph" | "graph" => Ok(TorusKind::CurveGraph),
            _ => Err(Error::UnknownKind(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TorusParams {
    pub dim: usize,
    /// dimension s of the coordinate sub-torus (its first s axes are free)
    pub along: usize,
    /// dirac location; origin when absent
    pub point: Option<Vec<f64>>,
    /// embedded circle radius, centered at (1/2, 1/2)
    pub radius: f64,
    /// Cantor contraction ratio
    pub ratio: f64,
    /// graph y = a sin(2πx)
    pub amplitude: f64,
    /// requested support resolution; [`RESOLUTION_CONSTANT`]·d/N when absent
    pub resolution: Option<f64>,
}

impl Default for TorusParams {
    fn default() -> Self {
        TorusParams { dim: 2, along: 1, point: None, radius: 0.25, ratio: 1.0 / 3.0, amplitude: 0.1, resolution: None }
    }
}

/// Periodic distance on ℝ/ℤ.
fn wrap_dist(x: f64) -> f64 {
    let t = x - x.floor();
    t.min(1.0 - t)
}

/// Compact set E ⊂ T^d with a torus-metric distance and |E^δ|.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "set", rename_all = "kebab-case")]
pub enum SupportSet {
    Point { x: Vec<f64> },
    /// {x : x_j = 0 for j ≥ along}
    SubTorus { dim: usize, along: usize },
    Circle { center: [f64; 2], radius: f64 },
    /// level-`depth` intervals of the Cantor construction on [0, 1]
    Cantor { ratio: f64, depth: u32 },
    Graph { amplitude: f64 },
    /// union of axis boxes [lo, hi] taken mod 1
    Boxes { dim: usize, boxes: Vec<(Vec<f64>, Vec<f64>)> },
}

impl SupportSet {
    pub fn dim(&self) -> usize {
        match self {
            SupportSet::Point { x } => x.len(),
            SupportSet::SubTorus { dim, .. } | SupportSet::Boxes { dim, .. } => *dim,
            SupportSet::Circle { .. } | SupportSet::Graph { .. } => 2,
            SupportSet::Cantor { .. } => 1,
        }
    }

    /// Torus distance from x to E.
    pub fn distance(&self, x: &[f64]) -> f64 {
        match self {
            SupportSet::Point { x: p } => x.iter().zip(p).map(|(a, b)| wrap_dist(a - b).powi(2)).sum::<f64>().sqrt(),
            SupportSet::SubTorus { along, .. } => x[*along..].iter().map(|a| wrap_dist(*a).powi(2)).sum::<f64>().sqrt(),
            SupportSet::Circle { center, radius } => {
                let mut best = f64::INFINITY;
                for i in -1..=1 {
                    for j in -1..=1 {
                        let dx = x[0] - center[0] - i as f64;
                        let dy = x[1] - center[1] - j as f64;
                        best = best.min(((dx * dx + dy * dy).sqrt() - radius).abs());
                    }
                }
                best
            }
            SupportSet::Cantor { ratio, depth } => {
                let t = x[0] - x[0].floor();
                [t - 1.0, t, t + 1.0].iter().map(|&y| cantor_distance(y, 0.0, 1.0, *ratio, *depth, f64::INFINITY)).fold(f64::INFINITY, f64::min)
            }
            SupportSet::Graph { amplitude } => graph_distance(x[0], x[1], *amplitude),
            SupportSet::Boxes { boxes, .. } => boxes
                .iter()
                .map(|(lo, hi)| {
                    x.iter()
                        .zip(lo.iter().zip(hi))
                        .map(|(&a, (&l, &h))| {
                            let c = 0.5 * (l + h);
                            (wrap_dist(a - c) - 0.5 * (h - l)).max(0.0).powi(2)
                        })
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// |E^δ| on the torus. Closed form where the neighborhood does not wrap
    /// onto itself, grid count for the graph.
    pub fn neighborhood_volume(&self, delta: f64) -> Result<f64> {
        if !(delta > 0.0 && delta < 0.5) {
            return Err(invalid("delta", "must lie in (0, 1/2)"));
        }
        Ok(match self {
            SupportSet::Point { x } => unit_ball_volume(x.len()) * delta.powi(x.len() as i32),
            SupportSet::SubTorus { dim, along } => {
                let c = dim - along;
                unit_ball_volume(c) * delta.powi(c as i32)
            }
            SupportSet::Circle { radius, .. } => {
                let inner = (radius - delta).max(0.0);
                PI * ((radius + delta).powi(2) - inner * inner)
            }
            SupportSet::Cantor { ratio, depth } => {
                let mut iv = Vec::new();
                cantor_intervals(0.0, 1.0, *ratio, *depth, &mut iv);
                // merge the δ-expanded intervals on the circle
                let mut total = 0.0;
                let (mut a, mut b) = (iv[0].0 - delta, iv[0].1 + delta);
                for &(l, h) in &iv[1..] {
                    if l - delta <= b {
                        b = b.max(h + delta);
                    } else {
                        total += b - a;
                        a = l - delta;
                        b = h + delta;
                    }
                }
                total += b - a;
                // the first and last pieces may overlap across 0 ≡ 1
                let overlap = (iv[iv.len() - 1].1 + delta - 1.0 - (iv[0].0 - delta)).max(0.0);
                (total - overlap).min(1.0)
            }
            SupportSet::Graph { .. } | SupportSet::Boxes { .. } => {
                let d = self.dim();
                let g = ((16.0 / delta).ceil() as usize).clamp(256, if d == 1 { 1 << 20 } else { 2048 });
                let total = g.pow(d as u32);
                let mut inside = 0usize;
                let mut x = vec![0.0; d];
                for i in 0..total {
                    let mut k = i;
                    for a in (0..d).rev() {
                        x[a] = ((k % g) as f64 + 0.5) / g as f64;
                        k /= g;
                    }
                    if self.distance(&x) <= delta {
                        inside += 1;
                    }
                }
                inside as f64 / total as f64
            }
        })
    }
}

fn cantor_intervals(a: f64, len: f64, r: f64, depth: u32, out: &mut Vec<(f64, f64)>) {
    if depth == 0 {
        out.push((a, a + len));
    } else {
        cantor_intervals(a, r * len, r, depth - 1, out);
        cantor_intervals(a + (1.0 - r) * len, r * len, r, depth - 1, out);
    }
}

fn cantor_distance(x: f64, a: f64, len: f64, r: f64, depth: u32, best: f64) -> f64 {
    let d0 = (a - x).max(x - a - len).max(0.0);
    if d0 >= best || depth == 0 {
        return d0.min(best);
    }
    let left = cantor_distance(x, a, r * len, r, depth - 1, best);
    cantor_distance(x, a + (1.0 - r) * len, r * len, r, depth - 1, left)
}

/// Distance from (x, y) to {(t, a sin 2πt)} on T²: vertical distance first,
/// then a sampled minimization over the window it allows.
fn graph_distance(x: f64, y: f64, a: f64) -> f64 {
    let f = |t: f64| a * (2.0 * PI * t).sin();
    let point = |t: f64| (wrap_dist(x - t).powi(2) + wrap_dist(y - f(t)).powi(2)).sqrt();
    let vertical = wrap_dist(y - f(x));
    let w = vertical.min(0.5);
    let n = 64;
    let mut best = vertical;
    let mut tb = x;
    for i in 0..=n {
        let t = x - w + 2.0 * w * i as f64 / n as f64;
        let v = point(t);
        if v < best {
            best = v;
            tb = t;
        }
    }
    // golden refinement around the best sample
    let (mut lo, mut hi) = (tb - 2.0 * w / n as f64, tb + 2.0 * w / n as f64);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..40 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if point(m1) < point(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    best.min(point(0.5 * (lo + hi)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportDescriptor {
    pub set: SupportSet,
    pub resolution: f64,
}

/// Lattice block |n|_∞ ≤ N in lexicographic order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub dim: usize,
    pub n: usize,
}

impl Block {
    pub fn side(&self) -> usize {
        2 * self.n + 1
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lattice_point(&self, mut idx: usize, out: &mut [i64]) {
        let s = self.side();
        for a in (0..self.dim).rev() {
            out[a] = (idx % s) as i64 - self.n as i64;
            idx /= s;
        }
    }

    pub fn index(&self, n: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for &k in n {
            if k.unsigned_abs() as usize > self.n {
                return None;
            }
            idx = idx * self.side() + (k + self.n as i64) as usize;
        }
        Some(idx)
    }

    pub fn norm_sq(&self, idx: usize) -> u64 {
        let s = self.side();
        let mut i = idx;
        let mut m = 0u64;
        for _ in 0..self.dim {
            let k = (i % s) as i64 - self.n as i64;
            m += (k * k) as u64;
            i /= s;
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorusMeasure {
    pub label: String,
    pub kind: Option<TorusKind>,
    pub block: Block,
    /// û(n) on the block, lexicographic
    pub coeffs: Vec<Complex64>,
    pub support: Option<SupportDescriptor>,
    pub real: bool,
    pub total_variation: f64,
}

impl TorusMeasure {
    pub fn dim(&self) -> usize {
        self.block.dim
    }

    pub fn block_radius(&self) -> usize {
        self.block.n
    }

    pub fn coefficient(&self, n: &[i64]) -> Option<Complex64> {
        self.block.index(n).map(|i| self.coeffs[i])
    }

    /// Measure from explicit coefficients (no support descriptor).
    pub fn from_coefficients(label: &str, dim: usize, n: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        let block = Block { dim, n };
        if coeffs.len() != block.len() {
            return Err(invalid("coeffs", format!("expected {} coefficients, got {}", block.len(), coeffs.len())));
        }
        let tv = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let real = (0..coeffs.len()).all(|i| (coeffs[i] - coeffs[coeffs.len() - 1 - i].conj()).norm() <= 1e-14 * tv.max(1.0));
        Ok(TorusMeasure { label: label.into(), kind: None, block, coeffs, support: None, real, total_variation: tv })
    }

    /// e^{2πi n₀·x} restricted to the block.
    pub fn single_mode(dim: usize, n: usize, mode: &[i64]) -> Result<Self> {
        let block = Block { dim, n };
        let i = block.index(mode).ok_or_else(|| invalid("mode", "outside the block"))?;
        let mut c = vec![Complex64::new(0.0, 0.0); block.len()];
        c[i] = Complex64::new(1.0, 0.0);
        Self::from_coefficients("mode", dim, n, c)
    }

    pub fn zero(dim: usize, n: usize) -> Self {
        let block = Block { dim, n };
        TorusMeasure {
            label: "zero".into(),
            kind: None,
            block,
            coeffs: vec![Complex64::new(0.0, 0.0); block.len()],
            support: None,
            real: true,
            total_variation: 0.0,
        }
    }

    /// Band data for every m present in the block. Bands with m ≤ N² are
    /// complete (the whole lattice sphere lies in the block).
    pub fn bands(&self) -> Vec<SpectralBand> {
        let n2 = (self.block.n * self.block.n) as u64;
        let top = self.block.dim as u64 * n2;
        let mut energy = vec![NeumaierSum::new(); top as usize + 1];
        let mut mult = vec![0u64; top as usize + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            let m = self.block.norm_sq(i) as usize;
            energy[m].add(c.norm_sqr());
            mult[m] += 1;
        }
        (0..=top)
            .filter(|&m| mult[m as usize] > 0)
            .map(|m| SpectralBand {
                m,
                lambda: 2.0 * PI * (m as f64).sqrt(),
                multiplicity: mult[m as usize],
                energy: energy[m as usize].value().sqrt(),
                complete: m <= n2,
            })
            .collect()
    }

    /// Σ_n |û(n)|² over the block.
    pub fn coefficient_energy(&self) -> f64 {
        let mut s = NeumaierSum::new();
        for c in &self.coeffs {
            s.add(c.norm_sqr());
        }
        s.value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralBand {
    pub m: u64,
    pub lambda: f64,
    pub multiplicity: u64,
    /// ‖E_λ u‖_{L²}
    pub energy: f64,
    pub complete: bool,
}

/// Generator for the torus corpus.
pub fn make_torus_measure(kind: TorusKind, params: &TorusParams, n: usize) -> Result<TorusMeasure> {
    if n < 8 {
        return Err(invalid("N", "block radius must be at least 8"));
    }
    let d = match kind {
        TorusKind::CantorOnT1 => 1,
        TorusKind::EmbeddedCircle | TorusKind::CurveGraph => 2,
        _ => params.dim,
    };
    if !(1..=3).contains(&d) {
        return Err(invalid("dim", "torus dimension must be 1, 2 or 3"));
    }
    let block = Block { dim: d, n };
    if block.len() > MAX_BLOCK_COEFFS {
        return Err(Error::BudgetExceeded {
            what: "torus block",
            needed: block.len() as f64,
            budget: MAX_BLOCK_COEFFS as f64,
            suggestion: "lower N or the largest scale".into(),
        });
    }
    let floor = RESOLUTION_CONSTANT * d as f64 / n as f64;
    let resolution = match params.resolution {
        Some(r) if r < floor => {
            return Err(invalid(
                "N",
                format!("too small for support resolution {r}; it needs N ≥ {}", (RESOLUTION_CONSTANT * d as f64 / r).ceil()),
            ))
        }
        Some(r) => r,
        None => floor,
    };
    let zero = Complex64::new(0.0, 0.0);
    let mut coeffs = vec![zero; block.len()];
    let mut nv = vec![0i64; d];
    let (set, label) = match kind {
        TorusKind::Dirac => {
            let x0 = params.point.clone().unwrap_or_else(|| vec![0.0; d]);
            if x0.len() != d {
                return Err(invalid("point", "length must equal the dimension"));
            }
            for (i, c) in coeffs.iter_mut().enumerate() {
                block.lattice_point(i, &mut nv);
                let ph: f64 = nv.iter().zip(&x0).map(|(k, x)| *k as f64 * x).sum();
                *c = cis_neg(ph);
            }
            (SupportSet::Point { x: x0 }, format!("dirac-t{d}"))
        }
        TorusKind::SubTorus => {
            let s = params.along;
            if s == 0 || s >= d {
                return Err(invalid("along", "sub-torus dimension must lie in 1..d"));
            }
            for (i, c) in coeffs.iter_mut().enumerate() {
                block.lattice_point(i, &mut nv);
                if nv[..s].iter().all(|&k| k == 0) {
                    *c = Complex64::new(1.0, 0.0);
                }
            }
            (SupportSet::SubTorus { dim: d, along: s }, format!("sub-torus-{s}-t{d}"))
        }
        TorusKind::EmbeddedCircle => {
            let r = params.radius;
            if !(r > 0.0 && r <= 0.3) {
                return Err(invalid("radius", "must lie in (0, 0.3]"));
            }
            let center = [0.5, 0.5];
            // û(n) = e^{-2πi n·c} ∫ e^{-2πi r|n| cos θ} dθ/2π; the radial factor
            // by the trapezoid rule in θ, once per distinct |n|²
            let top = 2 * n * n;
            let mut radial = vec![f64::NAN; top + 1];
            for (i, c) in coeffs.iter_mut().enumerate() {
                let m = block.norm_sq(i) as usize;
                if radial[m].is_nan() {
                    radial[m] = circle_radial(2.0 * PI * r * (m as f64).sqrt());
                }
                block.lattice_point(i, &mut nv);
                let ph = nv[0] as f64 * center[0] + nv[1] as f64 * center[1];
                *c = cis_neg(ph) * radial[m];
            }
            (SupportSet::Circle { center, radius: r }, "embedded-circle".to_string())
        }
        TorusKind::CantorOnT1 => {
            let r = params.ratio;
            if !(r > 0.0 && r < 0.5) {
                return Err(invalid("ratio", "must lie in (0, 1/2)"));
            }
            for (i, c) in coeffs.iter_mut().enumerate() {
                let k = i as f64 - n as f64;
                let mut prod = Complex64::new(1.0, 0.0);
                let mut scale = 1.0;
                // factors differ from 1 by at most π|k|(1-r)r^i
                while PI * k.abs() * scale > 1e-17 {
                    prod *= (Complex64::new(1.0, 0.0) + cis_neg(k * (1.0 - r) * scale)) * 0.5;
                    scale *= r;
                }
                *c = prod;
            }
            let depth = ((resolution.ln() / r.ln()).ceil().max(1.0) as u32).min(20);
            (SupportSet::Cantor { ratio: r, depth }, "cantor-on-t1".to_string())
        }
        TorusKind::CurveGraph => {
            let a = params.amplitude;
            if !(0.0..=0.25).contains(&a) {
                return Err(invalid("amplitude", "must lie in [0, 1/4]"));
            }
            // û(n₁, n₂) = ∫₀¹ e^{-2πi(n₁t + n₂ a sin 2πt)} dt: one FFT in t per n₂
            let nf = n as f64;
            let m = ((2.0 * (nf + 2.0 * PI * a * nf + 64.0)) as usize).next_power_of_two();
            let fft = FftPlanner::new().plan_fft_forward(m);
            let side = block.side();
            let mut buf = vec![zero; m];
            for k2 in -(n as i64)..=(n as i64) {
                for (j, b) in buf.iter_mut().enumerate() {
                    let t = j as f64 / m as f64;
                    *b = cis_neg(k2 as f64 * a * (2.0 * PI * t).sin());
                }
                fft.process(&mut buf);
                for k1 in -(n as i64)..=(n as i64) {
                    let j = k1.rem_euclid(m as i64) as usize;
                    let idx = (k1 + n as i64) as usize * side + (k2 + n as i64) as usize;
                    coeffs[idx] = buf[j] / m as f64;
                }
            }
            (SupportSet::Graph { amplitude: a }, "curve-graph".to_string())
        }
    };
    Ok(TorusMeasure {
        label,
        kind: Some(kind),
        block,
        coeffs,
        support: Some(SupportDescriptor { set, resolution }),
        real: matches!(kind, TorusKind::SubTorus | TorusKind::CantorOnT1 | TorusKind::CurveGraph)
            || (kind == TorusKind::Dirac && params.point.as_ref().is_none_or(|p| p.iter().all(|x| *x == 0.0))),
        total_variation: 1.0,
    })
}

fn cis_neg(t: f64) -> Complex64 {
    // e^{-2πi t} with the argument reduced mod 1
    let f = t - t.round();
    let (s, c) = (2.0 * PI * f).sin_cos();
    Complex64::new(c, -s)
}

/// J₀(z) = (1/M) Σ_j cos(z cos(2πj/M)), exact up to ~J_M(z).
fn circle_radial(z: f64) -> f64 {
    let m = (z + 10.0 * z.cbrt() + 40.0).ceil() as usize;
    let mut s = NeumaierSum::new();
    for j in 0..m {
        s.add((z * (2.0 * PI * j as f64 / m as f64).cos()).cos());
    }
    s.value() / m as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusNorms {
    pub r: f64,
    pub a1: f64,
    pub a2: f64,
    /// (R^{-d} Σ c^p)^{1/p} for the requested p
    pub ap: f64,
    pub p: f64,
    /// A1/A2 = R^{-d/2} ‖c‖₁/‖c‖₂; NaN when A2 = 0
    pub fr: f64,
    /// λ of the outermost complete band
    pub lambda_max: f64,
    pub bands_used: usize,
    /// bound on |ψ(λ/R)| for λ beyond the block
    pub weight_tail: f64,
    /// c_λ = |ψ(λ/R)| ‖E_λ u‖ over complete bands, increasing λ
    pub c: Vec<f64>,
    pub lambdas: Vec<f64>,
}

impl TorusNorms {
    pub fn seq_norm(&self, q: f64) -> f64 {
        seq_norm(&self.c, q)
    }
}

fn seq_norm(c: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return c.iter().cloned().fold(0.0, f64::max);
    }
    let mut s = NeumaierSum::new();
    for v in c {
        s.add(v.powf(q));
    }
    s.value().powf(1.0 / q)
}

fn check_block(u: &TorusMeasure, psi: &Mollifier, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid("R", "must be positive and finite"));
    }
    if psi.family() != Family::BandLimited {
        return Err(Error::Unsupported("the spectral multiplier needs a band-limited mollifier".into()));
    }
    let s = weight_cutoff(psi)?;
    let available = 2.0 * PI * u.block.n as f64;
    if s * r > available {
        return Err(Error::BandExceedsBlock { band: s, needed: s * r, available });
    }
    psi.spectral_tail_bound(available / r)
}

/// A1 = R^{-d} Σ c_λ and A2 = R^{-d/2} (Σ c_λ²)^{1/2} over complete bands.
pub fn spectral_norms(u: &TorusMeasure, psi: &Mollifier, r: f64, p: f64) -> Result<TorusNorms> {
    let tail = check_block(u, psi, r)?;
    if !(p >= 1.0) {
        return Err(invalid("p", "must be at least 1"));
    }
    let bands: Vec<SpectralBand> = u.bands().into_iter().filter(|b| b.complete).collect();
    let mut c = Vec::with_capacity(bands.len());
    for b in &bands {
        c.push(psi.spectral_weight(b.lambda / r)?.abs() * b.energy);
    }
    let d = u.dim() as f64;
    let l1 = seq_norm(&c, 1.0);
    let l2 = seq_norm(&c, 2.0);
    let a1 = r.powf(-d) * l1;
    let a2 = r.powf(-d / 2.0) * l2;
    let ap = if p.is_infinite() { seq_norm(&c, p) } else { r.powf(-d / p) * seq_norm(&c, p) };
    Ok(TorusNorms {
        r,
        a1,
        a2,
        ap,
        p,
        fr: if a2 > 0.0 { a1 / a2 } else { f64::NAN },
        lambda_max: bands.last().map_or(0.0, |b| b.lambda),
        bands_used: bands.len(),
        weight_tail: tail,
        c,
        lambdas: bands.iter().map(|b| b.lambda).collect(),
    })
}

/// Ladder of torus ratios with an extra `lambda_max` column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusSeries {
    pub series: RatioSeries,
    pub lambda_max: Vec<f64>,
    pub bands_used: Vec<usize>,
}

impl TorusSeries {
    pub const CSV_HEADER: &'static str = "label,R,X1,X2,Xp,FR,eps_tail,lambda_max";

    pub fn to_csv(&self) -> String {
        let s = &self.series;
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for i in 0..s.ladder.len() {
            out.push_str(&format!(
                "{},{},{:e},{:e},{:e},{:e},{:e},{:e}\n",
                s.label, s.ladder[i], s.x1[i], s.x2[i], s.xp[i], s.fr[i], s.eps_tail_certified[i], self.lambda_max[i]
            ));
        }
        out
    }
}

pub fn manifold_ratio_series(u: &TorusMeasure, psi: &Mollifier, ladder: &[f64], p: f64) -> Result<(TorusSeries, Vec<TorusNorms>)> {
    if ladder.is_empty() {
        return Err(invalid("ladder", "empty"));
    }
    let mut norms = Vec::new();
    for &r in ladder {
        norms.push(spectral_norms(u, psi, r, p)?);
    }
    let series = RatioSeries {
        label: u.label.clone(),
        psi_family: psi.family(),
        dim: u.dim(),
        p,
        eps_tail: WEIGHT_TAIL_TOLERANCE,
        ladder: ladder.to_vec(),
        x1: norms.iter().map(|n| n.a1).collect(),
        x2: norms.iter().map(|n| n.a2).collect(),
        xp: norms.iter().map(|n| n.ap).collect(),
        fr: norms.iter().map(|n| n.fr).collect(),
        eps_tail_certified: norms.iter().map(|n| n.weight_tail).collect(),
        window_capped: vec![false; ladder.len()],
    };
    let ts = TorusSeries {
        lambda_max: norms.iter().map(|n| n.lambda_max).collect(),
        bands_used: norms.iter().map(|n| n.bands_used).collect(),
        series,
    };
    Ok((ts, norms))
}

/// FR_{M,R} across the ladder and the fitted κ_M.
pub fn manifold_ratio_ladder(
    u: &TorusMeasure,
    psi: &Mollifier,
    ladder: &[f64],
    p: f64,
    tail_fraction: f64,
) -> Result<(TorusSeries, ExponentEstimate)> {
    let (ts, _) = manifold_ratio_series(u, psi, ladder, p)?;
    let e = estimate_kappa(&ts.series, tail_fraction)?;
    Ok((ts, e))
}

/// Samples of a field on the uniform grid of G^d points x = j/G.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialField {
    pub dim: usize,
    pub grid: usize,
    pub values: Vec<Complex64>,
}

impl SpatialField {
    pub fn spacing(&self) -> f64 {
        1.0 / self.grid as f64
    }

    pub fn point(&self, mut idx: usize, out: &mut [f64]) {
        for a in (0..self.dim).rev() {
            out[a] = (idx % self.grid) as f64 / self.grid as f64;
            idx /= self.grid;
        }
    }

    /// L² norm on T^d; exact for trigonometric polynomials the grid resolves.
    pub fn l2_norm(&self) -> f64 {
        let mut s = NeumaierSum::new();
        for v in &self.values {
            s.add(v.norm_sqr());
        }
        (s.value() / self.values.len() as f64).sqrt()
    }

    /// CSV grid: coordinates then real and imaginary parts.
    pub fn to_csv(&self) -> String {
        let axes = ["x", "y", "z"];
        let mut out = axes[..self.dim].join(",");
        out.push_str(",re,im\n");
        let mut x = vec![0.0; self.dim];
        for (i, v) in self.values.iter().enumerate() {
            self.point(i, &mut x);
            for xi in &x {
                out.push_str(&format!("{xi},"));
            }
            out.push_str(&format!("{:e},{:e}\n", v.re, v.im));
        }
        out
    }
}

/// Σ_n w(|n|²) û(n) e^{2πi n·x} on a G^d grid.
pub fn synthesize(u: &TorusMeasure, grid: usize, weight: impl Fn(u64) -> f64) -> Result<SpatialField> {
    let need = 4 * u.block.n;
    if grid < need {
        return Err(Error::GridTooCoarse { spacing: 1.0 / grid as f64, required: 1.0 / need as f64 });
    }
    let d = u.dim();
    let total = grid
        .checked_pow(d as u32)
        .filter(|t| *t <= 1 << 28)
        .ok_or_else(|| Error::BudgetExceeded { what: "spatial grid", needed: (grid as f64).powi(d as i32), budget: (1u64 << 28) as f64, suggestion: "use a coarser grid".into() })?;
    let mut data = vec![Complex64::new(0.0, 0.0); total];
    let mut nv = vec![0i64; d];
    for (i, c) in u.coeffs.iter().enumerate() {
        if *c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let w = weight(u.block.norm_sq(i));
        if w == 0.0 {
            continue;
        }
        u.block.lattice_point(i, &mut nv);
        let mut idx = 0usize;
        for k in &nv {
            idx = idx * grid + k.rem_euclid(grid as i64) as usize;
        }
        data[idx] = c * w;
    }
    let fft = FftPlanner::new().plan_fft_inverse(grid);
    let mut line = vec![Complex64::new(0.0, 0.0); grid];
    for a in 0..d {
        let stride = grid.pow((d - 1 - a) as u32);
        if stride == 1 {
            fft.process(&mut data);
            continue;
        }
        let outer = total / (grid * stride);
        for o in 0..outer {
            for inner in 0..stride {
                let base = o * grid * stride + inner;
                for (j, l) in line.iter_mut().enumerate() {
                    *l = data[base + j * stride];
                }
                fft.process(&mut line);
                for (j, l) in line.iter().enumerate() {
                    data[base + j * stride] = *l;
                }
            }
        }
    }
    Ok(SpatialField { dim: d, grid, values: data })
}

/// Default grid for the multiplier: 4N points per axis.
pub fn default_grid(u: &TorusMeasure) -> usize {
    4 * u.block.n
}

/// P_R u(x) = Σ_n ψ(2π|n|/R) û(n) e^{2πi n·x} on a grid of `grid` points
/// per axis (spacing at most 1/(4N)).
pub fn apply_multiplier(u: &TorusMeasure, psi: &Mollifier, r: f64, grid: Option<usize>) -> Result<SpatialField> {
    check_block(u, psi, r)?;
    let top = u.dim() * u.block.n * u.block.n;
    let mut w = vec![0.0; top + 1];
    for (m, wm) in w.iter_mut().enumerate() {
        *wm = psi.spectral_weight(2.0 * PI * (m as f64).sqrt() / r)?;
    }
    synthesize(u, grid.unwrap_or_else(|| default_grid(u)), |m| w[m as usize])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakReport {
    pub r: f64,
    /// propagation radius A/R
    pub radius: f64,
    pub grid: usize,
    pub total_mass: f64,
    pub outside_mass: f64,
    pub leak_fraction: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Fraction of ‖P_R u‖² outside E^{A/R} for the attached support.
pub fn support_propagation_check(u: &TorusMeasure, psi: &Mollifier, r: f64, tol: f64) -> Result<LeakReport> {
    let set = u.support.as_ref().map(|s| s.set.clone()).ok_or_else(|| invalid("support", "the measure has no support descriptor"))?;
    support_propagation_check_with(u, &set, psi, r, tol)
}

/// As [`support_propagation_check`] against an arbitrary set E.
pub fn support_propagation_check_with(u: &TorusMeasure, set: &SupportSet, psi: &Mollifier, r: f64, tol: f64) -> Result<LeakReport> {
    if set.dim() != u.dim() {
        return Err(invalid("support", "dimension differs from the measure"));
    }
    let a = psi.band_radius().ok_or_else(|| Error::Unsupported("propagation radius needs a band-limited mollifier".into()))?;
    let radius = a / r;
    let mut grid = default_grid(u);
    let required = radius / 4.0;
    if 1.0 / (grid as f64) > required {
        grid = (4.0 / radius).ceil() as usize;
    }
    if 1.0 / (grid as f64) > required {
        return Err(Error::GridTooCoarse { spacing: 1.0 / grid as f64, required });
    }
    let f = apply_multiplier(u, psi, r, Some(grid))?;
    let mut total = NeumaierSum::new();
    let mut out = NeumaierSum::new();
    let mut x = vec![0.0; u.dim()];
    for (i, v) in f.values.iter().enumerate() {
        let e = v.norm_sqr();
        total.add(e);
        f.point(i, &mut x);
        if set.distance(&x) > radius {
            out.add(e);
        }
    }
    let (t, o) = (total.value(), out.value());
    let leak = if t > 0.0 { o / t } else { 0.0 };
    Ok(LeakReport { r, radius, grid, total_mass: t, outside_mass: o, leak_fraction: leak, tol, passed: leak <= tol })
}

/// Neighborhood growth |E^δ| ≈ C_E δ^{d-k}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub deltas: Vec<f64>,
    pub volumes: Vec<f64>,
    pub k: f64,
    pub constant: f64,
    pub residual: f64,
}

pub fn neighborhood_growth(set: &SupportSet, deltas: &[f64]) -> Result<GrowthFit> {
    let d = set.dim() as f64;
    let volumes = deltas.iter().map(|&dl| set.neighborhood_volume(dl)).collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = deltas.iter().map(|x| x.ln()).collect();
    let ys: Vec<f64> = volumes.iter().map(|x| x.ln()).collect();
    let fit = fit_line(&xs, &ys).ok_or_else(|| Error::InsufficientData("at least two neighborhood scales".into()))?;
    let k = d - fit.slope;
    let constant = deltas.iter().zip(&volumes).map(|(dl, v)| v * dl.powf(k - d)).fold(0.0, f64::max);
    Ok(GrowthFit { deltas: deltas.to_vec(), volumes, k, constant, residual: fit.rms_residual })
}

/// Σ_{λ ≤ λ_max} ‖E_λ u‖^p over complete bands. Always a block-partial
/// quantity; `saturated` only says the last dyadic range added little.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPartialSum {
    pub label: String,
    pub p: f64,
    pub lambda_max: f64,
    pub sum: f64,
    /// increment over λ ∈ (λ_max/2, λ_max] relative to the sum
    pub last_increment: f64,
    pub saturated: bool,
}

pub fn block_partial_sum(u: &TorusMeasure, p: f64) -> BlockPartialSum {
    let bands: Vec<SpectralBand> = u.bands().into_iter().filter(|b| b.complete).collect();
    let lmax = bands.last().map_or(0.0, |b| b.lambda);
    let mut all = NeumaierSum::new();
    let mut last = NeumaierSum::new();
    for b in &bands {
        let e = b.energy.powf(p);
        all.add(e);
        if b.lambda > 0.5 * lmax {
            last.add(e);
        }
    }
    let sum = all.value();
    let inc = if sum > 0.0 { last.value() / sum } else { 0.0 };
    BlockPartialSum { label: "block-partial".into(), p, lambda_max: lmax, sum, last_increment: inc, saturated: inc < SATURATION_TOLERANCE }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldChainRow {
    pub r: f64,
    /// ‖c‖₁ and R^{d/2-(κ'-ε)}‖c‖₂
    pub l1: f64,
    pub l1_bound: f64,
    pub l1_holds: bool,
    pub holder: HolderRow,
    /// ‖c‖₁ ≤ √(#bands) ‖c‖₂
    pub cauchy_schwarz: bool,
    pub pairing: Option<PairingRow>,
    /// |E^{A/R}| and C_E (A/R)^{d-k}
    pub neighborhood_volume: f64,
    pub volume_bound: f64,
    pub volume_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldProofChainReport {
    pub label: String,
    pub p: f64,
    pub epsilon: f64,
    pub dim: usize,
    pub k: f64,
    pub growth: GrowthFit,
    pub kappa_m: f64,
    pub kappa_prime: f64,
    pub theta: f64,
    pub rows: Vec<ManifoldChainRow>,
    pub block_partial: BlockPartialSum,
    /// p(k-2(κ'-ε)) - 2(d-2(κ'-ε))
    pub exponent: f64,
    pub exponent_sign: i8,
    pub implication: String,
    pub verdict: String,
    pub passed: bool,
}

/// Smooth periodic test function Π (1 + cos 2π(x_j - 0.1))/2.
fn torus_test_function(x: &[f64]) -> f64 {
    x.iter().map(|t| 0.5 * (1.0 + (2.0 * PI * (t - 0.1)).cos())).product()
}

fn pairing_on_torus(u: &TorusMeasure, set: &SupportSet, psi: &Mollifier, r: f64, radius: f64) -> Result<Option<PairingRow>> {
    let grid = default_grid(u).max((4.0 / radius).ceil() as usize);
    if grid.checked_pow(u.dim() as u32).is_none_or(|t| t > SYNTHESIS_MAX_POINTS) {
        return Ok(None);
    }
    let f = apply_multiplier(u, psi, r, Some(grid))?;
    let mut x = vec![0.0; u.dim()];
    let mut pair = num_complex_sum();
    let (mut gi, mut ci) = (NeumaierSum::new(), NeumaierSum::new());
    let mut cells = 0;
    for (i, v) in f.values.iter().enumerate() {
        f.point(i, &mut x);
        let chi = torus_test_function(&x);
        pair.0.add(v.re * chi);
        pair.1.add(v.im * chi);
        if set.distance(&x) <= radius {
            cells += 1;
            gi.add(v.norm_sqr());
            ci.add(chi * chi);
        }
    }
    let vol = (f.values.len() as f64).recip();
    let lhs = Complex64::new(pair.0.value(), pair.1.value()).norm() * vol;
    let rhs = (gi.value() * vol).sqrt() * (ci.value() * vol).sqrt();
    Ok(Some(PairingRow { lhs, rhs, cells, passed: lhs <= rhs * (1.0 + 1e-6) + 1e-12 }))
}

fn num_complex_sum() -> (NeumaierSum, NeumaierSum) {
    (NeumaierSum::new(), NeumaierSum::new())
}

/// Evaluate the manifold chain on every ladder scale. k and C_E come from
/// the neighborhood-growth fit on the support descriptor over `deltas`.
pub fn manifold_proof_chain_check(
    u: &TorusMeasure,
    psi: &Mollifier,
    ladder: &[f64],
    p: f64,
    epsilon: f64,
    deltas: &[f64],
) -> Result<ManifoldProofChainReport> {
    if !(epsilon > 0.0) {
        return Err(invalid("epsilon", "must be positive"));
    }
    if !(p >= 2.0 && p.is_finite()) {
        return Err(invalid("p", "must be finite and at least 2"));
    }
    let set = u.support.as_ref().map(|s| s.set.clone()).ok_or_else(|| invalid("support", "the measure has no support descriptor"))?;
    let a = psi.band_radius().ok_or_else(|| Error::Unsupported("the manifold chain needs a band-limited mollifier".into()))?;
    let growth = neighborhood_growth(&set, deltas)?;
    let (ts, norms) = manifold_ratio_series(u, psi, ladder, p)?;
    let est = estimate_kappa(&ts.series, crate::ratio::DEFAULT_TAIL_FRACTION)?;
    let d = u.dim() as f64;
    let k_eff = est.kappa_min - epsilon;
    let mut rows = Vec::new();
    for nm in &norms {
        let r = nm.r;
        let (l1, l2, lp) = (nm.seq_norm(1.0), nm.seq_norm(2.0), nm.seq_norm(p));
        let l1_bound = r.powf(d / 2.0 - k_eff) * l2;
        let radius = a / r;
        let vol = set.neighborhood_volume(radius.min(0.499))?;
        let volume_bound = growth.constant * radius.powf(d - growth.k);
        rows.push(ManifoldChainRow {
            r,
            l1,
            l1_bound,
            l1_holds: l1 <= l1_bound,
            holder: holder_row(l1, l2, lp, p),
            cauchy_schwarz: l1 <= (nm.bands_used as f64).sqrt() * l2 * (1.0 + INEQUALITY_TOLERANCE),
            pairing: pairing_on_torus(u, &set, psi, r, radius)?,
            neighborhood_volume: vol,
            volume_bound,
            volume_holds: vol <= volume_bound * (1.0 + 1e-9),
        });
    }
    let exponent = exponent_value(d, growth.k, k_eff, p);
    let sign = if exponent < 0.0 {
        -1
    } else if exponent > 0.0 {
        1
    } else {
        0
    };
    let passed = rows.iter().all(|r| r.holder.passed && r.cauchy_schwarz && r.pairing.as_ref().is_none_or(|p| p.passed));
    Ok(ManifoldProofChainReport {
        label: u.label.clone(),
        p,
        epsilon,
        dim: u.dim(),
        k: growth.k,
        growth,
        kappa_m: est.kappa,
        kappa_prime: est.kappa_min,
        theta: (p - 2.0) / (2.0 * (p - 1.0)),
        rows,
        block_partial: block_partial_sum(u, p),
        exponent,
        exponent_sign: sign,
        implication: if sign < 0 { "pairing bound decays".into() } else { "pairing bound does not decay".into() },
        verdict: if passed { CHAIN_CONSISTENT.into() } else { "chain broken".into() },
        passed,
    })
}
