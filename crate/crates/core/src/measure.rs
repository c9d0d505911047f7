//! Discrete measures: weighted point clouds approximating fμ in ℝ^d, and
//! the canonical generators.

use crate::error::{invalid, Error, Result};
use crate::numeric::{gauss_legendre, NeumaierSum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// How the point cloud is laid out. The fast spectrum paths key off this.
#[derive(Debug, Clone)]
pub enum Structure {
    /// No exploitable structure; transforms are direct sums.
    Scattered,
    /// Tensor product of lower dimensional factors on disjoint axes. The
    /// point list enumerates the product with the last factor fastest.
    Product(Vec<Factor>),
    /// Rotation invariant about the origin, up to sampling.
    Radial,
}

#[derive(Debug, Clone)]
pub struct Factor {
    pub axes: Vec<usize>,
    pub measure: DiscreteMeasure,
}

#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    density: Vec<Complex64>,
    label: String,
    resolution: f64,
    structure: Structure,
    analytic_mass: Option<f64>,
    known_dimension: Option<f64>,
}

impl DiscreteMeasure {
    /// Build from raw parts. `resolution` is the Hausdorff distance between
    /// the samples and the set they stand for.
    pub fn from_parts(
        dim: usize,
        points: Vec<f64>,
        weights: Vec<f64>,
        density: Vec<Complex64>,
        label: impl Into<String>,
        resolution: f64,
    ) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(invalid("dimension", format!("{dim} is not in 1..=3")));
        }
        let n = weights.len();
        if points.len() != n * dim || density.len() != n {
            return Err(invalid("points", "points, weights and density must have equal length"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("weights", "weights must be finite and nonnegative"));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(invalid("points", "coordinates must be finite"));
        }
        if !(resolution.is_finite() && resolution >= 0.0) {
            return Err(invalid("resolution", "must be finite and nonnegative"));
        }
        Ok(Self {
            dim,
            points,
            weights,
            density,
            label: label.into(),
            resolution,
            structure: Structure::Scattered,
            analytic_mass: None,
            known_dimension: None,
        })
    }

    fn with_structure(mut self, s: Structure) -> Self {
        self.structure = s;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn len(&self) -> usize {
        self.weights.len()
    }
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j * self.dim..(j + 1) * self.dim]
    }
    pub fn points(&self) -> &[f64] {
        &self.points
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn density(&self) -> &[Complex64] {
        &self.density
    }
    pub fn label(&self) -> &str {
        &self.label
    }
    pub fn resolution(&self) -> f64 {
        self.resolution
    }
    /// Smallest admissible δ or 1/R.
    pub fn resolution_floor(&self) -> f64 {
        2.0 * self.resolution
    }
    pub fn structure(&self) -> &Structure {
        &self.structure
    }
    pub fn analytic_mass(&self) -> Option<f64> {
        self.analytic_mass
    }
    /// Dimension of the underlying set when the generator knows it.
    pub fn known_dimension(&self) -> Option<f64> {
        self.known_dimension
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().copied().collect::<NeumaierSum>().value()
    }

    /// Σ w_j |f(x_j)|, the trivial bound on the transform.
    pub fn l1_mass(&self) -> f64 {
        self.weights.iter().zip(&self.density).map(|(w, f)| w * f.norm()).collect::<NeumaierSum>().value()
    }

    /// Coefficients c_j = w_j f(x_j) of the transform sum.
    pub fn coefficients(&self) -> Vec<Complex64> {
        self.weights.iter().zip(&self.density).map(|(w, f)| f * *w).collect()
    }

    pub fn is_real(&self) -> bool {
        self.density.iter().all(|f| f.im == 0.0)
    }

    /// Points where f ≠ 0, as a measure of its own (support of fμ).
    pub fn density_support(&self) -> DiscreteMeasure {
        if self.density.iter().all(|f| *f != Complex64::new(0.0, 0.0)) {
            return self.clone();
        }
        let keep: Vec<usize> = (0..self.len()).filter(|&j| self.density[j] != Complex64::new(0.0, 0.0)).collect();
        let mut pts = Vec::with_capacity(keep.len() * self.dim);
        for &j in &keep {
            pts.extend_from_slice(self.point(j));
        }
        DiscreteMeasure {
            dim: self.dim,
            points: pts,
            weights: keep.iter().map(|&j| self.weights[j]).collect(),
            density: keep.iter().map(|&j| self.density[j]).collect(),
            label: self.label.clone(),
            resolution: self.resolution,
            structure: Structure::Scattered,
            analytic_mass: None,
            known_dimension: self.known_dimension,
        }
    }

    /// Replace f. A constant density keeps the layout; anything else makes
    /// the measure scattered.
    pub fn with_density<F: Fn(&[f64]) -> Complex64>(&self, f: F) -> DiscreteMeasure {
        let density: Vec<Complex64> = (0..self.len()).map(|j| f(self.point(j))).collect();
        let constant = density.windows(2).all(|w| w[0] == w[1]);
        let mut out = self.clone();
        out.density = density;
        if !constant {
            out.structure = Structure::Scattered;
        } else if let Some(c) = out.density.first().copied() {
            scale_factor_density(&mut out.structure, c);
        }
        out
    }

    /// Dilate all points by `t > 0` (weights are unchanged).
    pub fn dilate(&self, t: f64) -> DiscreteMeasure {
        let mut out = self.clone();
        out.points.iter_mut().for_each(|x| *x *= t);
        out.resolution *= t;
        if let Structure::Product(fs) = &mut out.structure {
            for f in fs {
                f.measure = f.measure.dilate(t);
            }
        }
        out.analytic_mass = None;
        out
    }

    /// Axis-aligned bounding box as (lower, upper) corners.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for j in 0..self.len() {
            for (a, x) in self.point(j).iter().enumerate() {
                lo[a] = lo[a].min(*x);
                hi[a] = hi[a].max(*x);
            }
        }
        if self.is_empty() {
            lo.fill(0.0);
            hi.fill(0.0);
        }
        (lo, hi)
    }

    /// Diameter of the bounding box (an upper bound on diam spt μ).
    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        lo.iter().zip(&hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }
}

/// Put the constant `c` into the first factor of a product layout so that
/// the product of factor coefficients matches the full coefficients.
fn scale_factor_density(s: &mut Structure, c: Complex64) {
    if let Structure::Product(fs) = s {
        for (i, f) in fs.iter_mut().enumerate() {
            let v = if i == 0 { c } else { Complex64::new(1.0, 0.0) };
            f.measure.density.iter_mut().for_each(|d| *d = v);
            scale_factor_density(&mut f.measure.structure, v);
        }
    }
}

/// Generator kinds accepted by [`make_canonical_measure`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureKind {
    Dirac,
    Segment,
    KPlanePiece,
    Circle,
    Sphere,
    MomentCurve,
    Cantor,
    CantorProduct,
    Cylinder,
}

impl MeasureKind {
    pub fn name(self) -> &'static str {
        match self {
            MeasureKind::Dirac => "dirac",
            MeasureKind::Segment => "segment",
            MeasureKind::KPlanePiece => "k-plane-piece",
            MeasureKind::Circle => "circle",
            MeasureKind::Sphere => "sphere",
            MeasureKind::MomentCurve => "moment-curve",
            MeasureKind::Cantor => "cantor",
            MeasureKind::CantorProduct => "cantor-product",
            MeasureKind::Cylinder => "cylinder",
        }
    }
}

impl std::str::FromStr for MeasureKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "dirac" => MeasureKind::Dirac,
            "segment" => MeasureKind::Segment,
            "k-plane-piece" | "k-plane" => MeasureKind::KPlanePiece,
            "circle" => MeasureKind::Circle,
            "sphere" => MeasureKind::Sphere,
            "moment-curve" => MeasureKind::MomentCurve,
            "cantor" => MeasureKind::Cantor,
            "cantor-product" => MeasureKind::CantorProduct,
            "cylinder" => MeasureKind::Cylinder,
            other => return Err(Error::UnknownKind(other.to_string())),
        })
    }
}

/// Generator parameters. Unused fields are ignored by kinds that do not
/// need them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureParams {
    pub dim: usize,
    /// segment length, side of the k-plane piece, height of the cylinder
    pub length: f64,
    /// circle / sphere / cylinder radius
    pub radius: f64,
    /// contraction ratio of the Cantor construction
    pub ratio: f64,
    /// depth of the Cantor construction
    pub depth: u32,
    /// dimension of the plane piece
    pub k: usize,
}

impl Default for MeasureParams {
    fn default() -> Self {
        Self { dim: 2, length: 1.0, radius: 1.0, ratio: 1.0 / 3.0, depth: 10, k: 1 }
    }
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// Midpoint rule on [0, L]: n points, weight L/n each.
fn interval(length: f64, n: usize, label: &str) -> Result<DiscreteMeasure> {
    let h = length / n as f64;
    let pts: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) * h).collect();
    let mut m = DiscreteMeasure::from_parts(1, pts, vec![h; n], vec![one(); n], label, 0.5 * h)?;
    m.analytic_mass = Some(length);
    m.known_dimension = Some(1.0);
    Ok(m)
}

fn point_factor() -> DiscreteMeasure {
    let mut m = DiscreteMeasure::from_parts(1, vec![0.0], vec![1.0], vec![one()], "point", 0.0).expect("valid");
    m.analytic_mass = Some(1.0);
    m.known_dimension = Some(0.0);
    m
}

/// Regular n-gon quadrature of arc length on the circle of radius r.
fn circle_factor(radius: f64, n: usize) -> Result<DiscreteMeasure> {
    if n < 8 || !n.is_multiple_of(4) {
        return Err(invalid("n", format!("circle needs n ≥ 8 divisible by 4, got {n}")));
    }
    let mut pts = Vec::with_capacity(2 * n);
    for j in 0..n {
        let th = TAU * j as f64 / n as f64;
        pts.push(radius * th.cos());
        pts.push(radius * th.sin());
    }
    let w = TAU * radius / n as f64;
    let res = radius * (PI / n as f64);
    let mut m = DiscreteMeasure::from_parts(2, pts, vec![w; n], vec![one(); n], "circle", res)?
        .with_structure(Structure::Radial);
    m.analytic_mass = Some(TAU * radius);
    m.known_dimension = Some(1.0);
    Ok(m)
}

/// Level-`depth` atoms of the symmetric Cantor construction with ratio r:
/// centers of the 2^depth intervals, weight 2^-depth each.
fn cantor_factor(ratio: f64, depth: u32) -> Result<DiscreteMeasure> {
    if !(ratio > 0.0 && ratio <= 0.5) {
        return Err(invalid("ratio", format!("{ratio} is not in (0, 1/2]")));
    }
    if depth > 24 {
        return Err(invalid("depth", "at most 24 levels are materialized"));
    }
    let mut left = vec![0.0f64];
    let mut len = 1.0f64;
    for _ in 0..depth {
        let shift = len * (1.0 - ratio);
        let mut next = Vec::with_capacity(left.len() * 2);
        for &a in &left {
            next.push(a);
        }
        for &a in &left {
            next.push(a + shift);
        }
        left = next;
        len *= ratio;
    }
    left.sort_by(f64::total_cmp);
    let n = left.len();
    let pts: Vec<f64> = left.iter().map(|a| a + 0.5 * len).collect();
    let w = 0.5f64.powi(depth as i32);
    let mut m = DiscreteMeasure::from_parts(1, pts, vec![w; n], vec![one(); n], "cantor", 0.5 * len)?;
    m.analytic_mass = Some(1.0);
    m.known_dimension = Some(if ratio == 0.5 { 1.0 } else { 2f64.ln() / (1.0 / ratio).ln() });
    Ok(m)
}

/// Tensor product of factors on the given axes; `dim` is the ambient
/// dimension. The last factor varies fastest.
fn product(dim: usize, factors: Vec<Factor>, label: &str) -> Result<DiscreteMeasure> {
    let total: usize = factors.iter().map(|f| f.measure.len()).product();
    let mut points = vec![0.0; total * dim];
    let mut weights = vec![1.0; total];
    let mut density = vec![one(); total];
    let mut stride = total;
    for f in &factors {
        let nf = f.measure.len();
        stride /= nf;
        for idx in 0..total {
            let j = (idx / stride) % nf;
            for (k, &ax) in f.axes.iter().enumerate() {
                points[idx * dim + ax] = f.measure.point(j)[k];
            }
            weights[idx] *= f.measure.weights[j];
            density[idx] *= f.measure.density[j];
        }
    }
    let resolution = factors.iter().map(|f| f.measure.resolution.powi(2)).sum::<f64>().sqrt();
    let mut m = DiscreteMeasure::from_parts(dim, points, weights, density, label, resolution)?;
    m.analytic_mass = factors.iter().map(|f| f.measure.analytic_mass).product();
    m.known_dimension = factors.iter().map(|f| f.measure.known_dimension).sum();
    Ok(m.with_structure(Structure::Product(factors)))
}

/// Embed a lower dimensional measure living on the first axes into ℝ^dim by
/// adding point factors on the remaining axes.
fn embed(dim: usize, m: DiscreteMeasure, label: &str) -> Result<DiscreteMeasure> {
    let k = m.dim;
    if k == dim {
        let mut m = m;
        m.label = label.to_string();
        return Ok(m);
    }
    let mut factors = vec![Factor { axes: (0..k).collect(), measure: m }];
    for ax in k..dim {
        factors.push(Factor { axes: vec![ax], measure: point_factor() });
    }
    product(dim, factors, label)
}

/// Construct a canonical measure with f ≡ 1.
///
/// Quadratures: midpoint rule for segments and plane pieces, regular n-gons
/// for circles (exact for trigonometric polynomials of degree < n),
/// Gauss–Legendre × uniform for spheres, the parameter measure dt pushed
/// forward for the moment curve, and exact level-J atoms for Cantor sets.
/// `n` is the total sample count where it applies.
pub fn make_canonical_measure(kind: MeasureKind, params: &MeasureParams, n: usize) -> Result<DiscreteMeasure> {
    let d = params.dim;
    if !(1..=3).contains(&d) {
        return Err(invalid("dim", format!("{d} is not in 1..=3")));
    }
    if n == 0 {
        return Err(invalid("n", "need at least one sample"));
    }
    let pos = |name: &'static str, v: f64| -> Result<f64> {
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(invalid(name, format!("{v} must be positive")))
        }
    };
    match kind {
        MeasureKind::Dirac => {
            let mut m = DiscreteMeasure::from_parts(d, vec![0.0; d], vec![1.0], vec![one()], "dirac", 0.0)?
                .with_structure(Structure::Radial);
            m.analytic_mass = Some(1.0);
            m.known_dimension = Some(0.0);
            Ok(m)
        }
        MeasureKind::Segment => {
            let l = pos("length", params.length)?;
            embed(d, interval(l, n, "segment")?, "segment")
        }
        MeasureKind::KPlanePiece => {
            let k = params.k;
            if k == 0 || k > d {
                return Err(invalid("k", format!("plane dimension {k} must be in 1..={d}")));
            }
            let l = pos("length", params.length)?;
            let per_axis = (n as f64).powf(1.0 / k as f64).round().max(1.0) as usize;
            let mut factors = Vec::new();
            for ax in 0..k {
                factors.push(Factor { axes: vec![ax], measure: interval(l, per_axis, "side")? });
            }
            for ax in k..d {
                factors.push(Factor { axes: vec![ax], measure: point_factor() });
            }
            product(d, factors, "k-plane-piece")
        }
        MeasureKind::Circle => {
            if d < 2 {
                return Err(invalid("dim", "a circle needs d ≥ 2"));
            }
            let c = circle_factor(pos("radius", params.radius)?, n)?;
            if d == 2 {
                Ok(c)
            } else {
                embed(d, c, "circle")
            }
        }
        MeasureKind::Sphere => {
            if d != 3 {
                return Err(invalid("dim", "the sphere generator is the unit 2-sphere in ℝ³"));
            }
            let r = pos("radius", params.radius)?;
            let nt = ((n as f64 / 2.0).sqrt().ceil() as usize).max(4);
            let np = 2 * nt;
            let (z, wz) = gauss_legendre(nt);
            let mut pts = Vec::with_capacity(3 * nt * np);
            let mut w = Vec::with_capacity(nt * np);
            for (zi, wi) in z.iter().zip(&wz) {
                let s = (1.0 - zi * zi).sqrt();
                for k in 0..np {
                    let ph = TAU * k as f64 / np as f64;
                    pts.extend_from_slice(&[r * s * ph.cos(), r * s * ph.sin(), r * zi]);
                    w.push(r * r * wi * TAU / np as f64);
                }
            }
            let cnt = w.len();
            let res = r * PI / nt as f64;
            let mut m = DiscreteMeasure::from_parts(3, pts, w, vec![one(); cnt], "sphere", res)?
                .with_structure(Structure::Radial);
            m.analytic_mass = Some(4.0 * PI * r * r);
            m.known_dimension = Some(2.0);
            Ok(m)
        }
        MeasureKind::MomentCurve => {
            if d < 2 {
                return Err(invalid("dim", "the moment curve needs d ≥ 2"));
            }
            let h = 1.0 / n as f64;
            let mut pts = Vec::with_capacity(d * n);
            let mut max_step: f64 = 0.0;
            for j in 0..n {
                let t = (j as f64 + 0.5) * h;
                for a in 0..d {
                    pts.push(t.powi(a as i32 + 1));
                }
                // |γ'(t)| ≤ |γ'(1)|
                max_step = max_step.max((1..=d).map(|a| (a as f64 * t.powi(a as i32 - 1)).powi(2)).sum::<f64>().sqrt());
            }
            let mut m = DiscreteMeasure::from_parts(d, pts, vec![h; n], vec![one(); n], "moment-curve", 0.5 * h * max_step)?;
            m.analytic_mass = Some(1.0);
            m.known_dimension = Some(1.0);
            Ok(m)
        }
        MeasureKind::Cantor => embed(d, cantor_factor(params.ratio, params.depth)?, "cantor"),
        MeasureKind::CantorProduct => {
            if d != 2 {
                return Err(invalid("dim", "the Cantor product lives in ℝ²"));
            }
            let c = cantor_factor(params.ratio, params.depth)?;
            product(
                2,
                vec![Factor { axes: vec![0], measure: c.clone() }, Factor { axes: vec![1], measure: c }],
                "cantor-product",
            )
        }
        MeasureKind::Cylinder => {
            if d != 3 {
                return Err(invalid("dim", "the cylinder S¹ × [0, L] lives in ℝ³"));
            }
            let r = pos("radius", params.radius)?;
            let l = pos("length", params.length)?;
            // split n between the circle and the height so spacings match
            let ratio = TAU * r / l;
            let mut nc = (((n as f64) * ratio).sqrt() / 4.0).round() as usize * 4;
            nc = nc.max(8);
            let nz = (n / nc).max(1);
            product(
                3,
                vec![
                    Factor { axes: vec![0, 1], measure: circle_factor(r, nc)? },
                    Factor { axes: vec![2], measure: interval(l, nz, "height")? },
                ],
                "cylinder",
            )
        }
    }
}

/// Sample count that keeps a generator's transform faithful up to
/// frequency radius `rho_max` and its resolution below `floor / 2`.
pub fn suggested_samples(kind: MeasureKind, params: &MeasureParams, rho_max: f64, floor: f64) -> usize {
    let by_floor = |len: f64| (len / floor).ceil() as usize + 1;
    match kind {
        MeasureKind::Dirac | MeasureKind::Cantor | MeasureKind::CantorProduct => 1,
        MeasureKind::Segment => {
            // keep the first alias of the midpoint rule (at ξ = n/L) far out
            let n = (8.0 * rho_max * params.length).ceil() as usize;
            n.max(by_floor(params.length)).max(1024).next_power_of_two()
        }
        MeasureKind::KPlanePiece => {
            let per = ((8.0 * rho_max * params.length).ceil() as usize).max(by_floor(params.length)).max(64);
            per.pow(params.k as u32)
        }
        MeasureKind::Circle => {
            let z = TAU * params.radius * rho_max;
            let n = (z + 10.0 * z.cbrt() + 64.0).ceil() as usize;
            let n = n.max(by_floor(PI * params.radius));
            n.div_ceil(8) * 8
        }
        MeasureKind::Sphere => {
            let z = PI * params.radius * rho_max;
            let nt = (z + 10.0 * z.cbrt() + 32.0).ceil() as usize;
            2 * nt * nt
        }
        MeasureKind::MomentCurve => ((8.0 * rho_max).ceil() as usize).max(by_floor(3.0)).max(256),
        MeasureKind::Cylinder => {
            let z = TAU * params.radius * rho_max;
            let nc = ((z + 10.0 * z.cbrt() + 64.0).ceil() as usize).div_ceil(8) * 8;
            let nz = ((8.0 * rho_max * params.length).ceil() as usize).max(64);
            nc * nz
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(dim: usize) -> MeasureParams {
        MeasureParams { dim, ..Default::default() }
    }

    #[test]
    fn dirac_is_one_point() {
        let m = make_canonical_measure(MeasureKind::Dirac, &params(2), 1).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.point(0), &[0.0, 0.0]);
        assert_eq!(m.total_mass(), 1.0);
    }

    #[test]
    fn segment_example() {
        let m = make_canonical_measure(MeasureKind::Segment, &params(2), 10_000).unwrap();
        assert_eq!(m.len(), 10_000);
        assert!(m.weights().iter().all(|w| (*w - 1e-4).abs() < 1e-18));
        assert!((m.total_mass() - 1.0).abs() < 1e-12);
        let (lo, hi) = m.bounding_box();
        assert!(lo[0] > 0.0 && hi[0] < 1.0 && lo[1] == 0.0 && hi[1] == 0.0);
    }

    #[test]
    fn cantor_atoms_match_ifs_iteration() {
        let p = MeasureParams { dim: 1, ratio: 1.0 / 3.0, depth: 10, ..Default::default() };
        let m = make_canonical_measure(MeasureKind::Cantor, &p, 1).unwrap();
        assert_eq!(m.len(), 1024);
        assert!((m.total_mass() - 1.0).abs() < 1e-12);
        // every atom sits in the middle of a level-10 interval with ternary
        // digits in {0, 2}
        let len = 3f64.powi(-10);
        for j in 0..m.len() {
            let a = (m.point(j)[0] - 0.5 * len) / len;
            let mut k = a.round() as u64;
            assert!((a - k as f64).abs() < 1e-6);
            for _ in 0..10 {
                assert_ne!(k % 3, 1);
                k /= 3;
            }
        }
    }

    #[test]
    fn masses_match_analytic_values() {
        let cases = [
            (MeasureKind::Circle, params(2), 4096),
            (MeasureKind::Sphere, params(3), 20_000),
            (MeasureKind::KPlanePiece, MeasureParams { dim: 3, k: 2, ..Default::default() }, 10_000),
            (MeasureKind::Cylinder, params(3), 20_000),
            (MeasureKind::MomentCurve, params(3), 1000),
            (MeasureKind::CantorProduct, MeasureParams { dim: 2, depth: 6, ..Default::default() }, 1),
        ];
        for (k, p, n) in cases {
            let m = make_canonical_measure(k, &p, n).unwrap();
            let a = m.analytic_mass().unwrap();
            assert!((m.total_mass() - a).abs() <= 1e-12 * a, "{k:?} {} vs {a}", m.total_mass());
        }
    }

    #[test]
    fn product_layout_is_consistent() {
        let m = make_canonical_measure(MeasureKind::Cylinder, &params(3), 2000).unwrap();
        let Structure::Product(fs) = m.structure() else { panic!() };
        let n1 = fs[1].measure.len();
        let j = 7 * n1 + 3;
        let p = m.point(j);
        assert_eq!(&p[0..2], fs[0].measure.point(7));
        assert_eq!(p[2], fs[1].measure.point(3)[0]);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_canonical_measure(MeasureKind::Circle, &params(2), 10).is_err());
        let p = MeasureParams { ratio: 0.7, dim: 1, ..Default::default() };
        assert!(make_canonical_measure(MeasureKind::Cantor, &p, 1).is_err());
        assert!(make_canonical_measure(MeasureKind::Sphere, &params(2), 100).is_err());
        assert!(matches!("torus".parse::<MeasureKind>(), Err(Error::UnknownKind(_))));
    }
}
