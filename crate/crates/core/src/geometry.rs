//! Geometric statistics of a support: δ-neighborhood volume, covering
//! numbers and the fitted dimension α.

use crate::error::{invalid, Error, Result};
use crate::measure::DiscreteMeasure;
use crate::numeric::fit_line;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

/// Cells per δ in the volume grid.
pub const CELLS_PER_DELTA: f64 = 8.0;
/// Largest bitset the volume count will allocate.
const MAX_GRID_CELLS: f64 = 4.0e9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub label: String,
    pub delta: f64,
    /// |E^δ| by grid cell counting
    pub volume: f64,
    /// greedy covering by δ-balls
    pub covering_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub reports: Vec<GeometryReport>,
    /// d minus the slope of log |E^δ| against log δ
    pub fitted_alpha: f64,
    /// slope of log N(δ) against log(1/δ), clamped to [0, d]
    pub box_dim_estimate: f64,
    pub volume_residual: f64,
    pub covering_residual: f64,
}

/// Volume of the unit ball in ℝ^d.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => PI.powf(d as f64 / 2.0) / gamma_half_int(d + 2),
    }
}

/// Γ(k/2) for integer k ≥ 1.
fn gamma_half_int(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        (1..k / 2).map(|i| i as f64).product()
    } else {
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x < k as f64 / 2.0 - 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

fn check_delta(m: &DiscreteMeasure, delta: f64) -> Result<()> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(invalid("delta", "must be positive and finite"));
    }
    if delta < m.resolution_floor() {
        return Err(Error::BelowResolution { requested: delta, floor: m.resolution_floor() });
    }
    if m.is_empty() {
        return Err(invalid("measure", "empty point cloud"));
    }
    Ok(())
}

/// |E^δ| and a greedy δ-covering count of the point cloud.
///
/// The volume counts cells of a grid of spacing δ/8 whose centers lie within
/// δ of some point. The covering count uses balls centered at points of the
/// cloud, chosen greedily in index order (a left-to-right sweep in 1-d,
/// which is optimal there); balls are open, shrunk by a relative 1e-9 so that
/// points exactly 2δ apart are not merged by rounding.
pub fn neighborhood_volume(m: &DiscreteMeasure, delta: f64) -> Result<GeometryReport> {
    check_delta(m, delta)?;
    Ok(GeometryReport {
        label: m.label().to_string(),
        delta,
        volume: grid_volume(m.dim(), m.points(), delta)?,
        covering_count: covering_count(m.dim(), m.points(), delta),
    })
}

/// Volume of the union of δ-balls around `points` (flat, `dim` per point).
pub fn grid_volume(dim: usize, points: &[f64], delta: f64) -> Result<f64> {
    let n = points.len() / dim;
    let s = grid_spacing(delta);
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for j in 0..n {
        for a in 0..dim {
            lo[a] = lo[a].min(points[j * dim + a]);
            hi[a] = hi[a].max(points[j * dim + a]);
        }
    }
    // cells are anchored at integer multiples of s, so two calls with the
    // same spacing share one grid
    let origin: Vec<f64> = lo.iter().map(|x| ((x - delta) / s).floor() * s - s).collect();
    let dims: Vec<usize> = (0..dim).map(|a| ((hi[a] + delta - origin[a]) / s).ceil() as usize + 2).collect();
    let cells: f64 = dims.iter().map(|&k| k as f64).product();
    if cells > MAX_GRID_CELLS {
        return Err(Error::BudgetExceeded {
            what: "neighborhood volume grid",
            needed: cells,
            budget: MAX_GRID_CELLS,
            suggestion: "use a larger delta".into(),
        });
    }
    let total = cells as usize;
    let bits: Vec<AtomicU64> = (0..total.div_ceil(64)).map(|_| AtomicU64::new(0)).collect();
    let strides: Vec<usize> = {
        let mut st = vec![1usize; dim];
        for a in (0..dim.saturating_sub(1)).rev() {
            st[a] = st[a + 1] * dims[a + 1];
        }
        st
    };
    let d2 = delta * delta;
    let set_range = |base: usize, from: usize, to: usize| {
        // set bits base+from ..= base+to
        let (mut i, end) = (base + from, base + to + 1);
        while i < end {
            let word = i / 64;
            let off = i % 64;
            let span = (64 - off).min(end - i);
            let mask = if span == 64 { u64::MAX } else { ((1u64 << span) - 1) << off };
            bits[word].fetch_or(mask, Ordering::Relaxed);
            i += span;
        }
    };
    let center = |a: usize, i: usize| origin[a] + (i as f64 + 0.5) * s;
    // cells in the last axis whose centers satisfy (c - x)² ≤ r2
    let span = |a: usize, x: f64, r2: f64| -> Option<(usize, usize)> {
        if r2 < 0.0 {
            return None;
        }
        let r = r2.sqrt();
        let i0 = (((x - r - origin[a]) / s) - 0.5).ceil().max(0.0) as usize;
        let i1 = (((x + r - origin[a]) / s) - 0.5).floor() as isize;
        if i1 < i0 as isize {
            return None;
        }
        let mut i1 = i1 as usize;
        i1 = i1.min(dims[a] - 1);
        let mut i0 = i0;
        while i0 <= i1 && (center(a, i0) - x).powi(2) > r2 {
            i0 += 1;
        }
        while i1 >= i0 && (center(a, i1) - x).powi(2) > r2 {
            if i1 == 0 {
                return None;
            }
            i1 -= 1;
        }
        (i0 <= i1).then_some((i0, i1))
    };
    (0..n).into_par_iter().for_each(|j| {
        let p = &points[j * dim..(j + 1) * dim];
        match dim {
            1 => {
                if let Some((a, b)) = span(0, p[0], d2) {
                    set_range(0, a, b);
                }
            }
            2 => {
                if let Some((a0, a1)) = span(0, p[0], d2) {
                    for i in a0..=a1 {
                        let r2 = d2 - (center(0, i) - p[0]).powi(2);
                        if let Some((b0, b1)) = span(1, p[1], r2) {
                            set_range(i * strides[0], b0, b1);
                        }
                    }
                }
            }
            _ => {
                if let Some((a0, a1)) = span(0, p[0], d2) {
                    for i in a0..=a1 {
                        let r2 = d2 - (center(0, i) - p[0]).powi(2);
                        if let Some((b0, b1)) = span(1, p[1], r2) {
                            for k in b0..=b1 {
                                let r3 = r2 - (center(1, k) - p[1]).powi(2);
                                if let Some((c0, c1)) = span(2, p[2], r3) {
                                    set_range(i * strides[0] + k * strides[1], c0, c1);
                                }
                            }
                        }
                    }
                }
            }
        }
    });
    let count: u64 = bits.iter().map(|b| b.load(Ordering::Relaxed).count_ones() as u64).sum();
    Ok(count as f64 * s.powi(dim as i32))
}

/// Grid spacing for radius δ. Exactly δ/8 puts a flat tube boundary on a
/// cell boundary when the core of the tube is grid aligned.
pub fn grid_spacing(delta: f64) -> f64 {
    delta / CELLS_PER_DELTA
}

/// Greedy covering count, see [`neighborhood_volume`].
pub fn covering_count(dim: usize, points: &[f64], delta: f64) -> u64 {
    let n = points.len() / dim;
    if n == 0 {
        return 0;
    }
    let reach = 2.0 * delta * (1.0 - 1e-9);
    if dim == 1 {
        let mut xs: Vec<f64> = points.to_vec();
        xs.sort_by(f64::total_cmp);
        let mut count = 1u64;
        let mut start = xs[0];
        for &x in &xs[1..] {
            if x - start >= reach {
                count += 1;
                start = x;
            }
        }
        return count;
    }
    // δ-net: a point becomes a center unless some center is closer than δ
    let r = delta * (1.0 - 1e-9);
    let key = |p: &[f64]| -> [i64; 3] {
        let mut k = [0i64; 3];
        for a in 0..dim {
            k[a] = (p[a] / delta).floor() as i64;
        }
        k
    };
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    let mut count = 0u64;
    for j in 0..n {
        let p = &points[j * dim..(j + 1) * dim];
        let k = key(p);
        let mut covered = false;
        'search: for dx in -1..=1i64 {
            for dy in -1..=1i64 {
                for dz in if dim == 3 { -1..=1i64 } else { 0..=0 } {
                    let kk = [k[0] + dx, k[1] + dy, k[2] + dz];
                    if let Some(cs) = grid.get(&kk) {
                        for &c in cs {
                            let q = &points[c * dim..(c + 1) * dim];
                            let dist2: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                            if dist2 < r * r {
                                covered = true;
                                break 'search;
                            }
                        }
                    }
                }
            }
        }
        if !covered {
            grid.entry(k).or_default().push(j);
            count += 1;
        }
    }
    count
}

/// Fit α and the box dimension over a geometric ladder of δ.
pub fn estimate_alpha(m: &DiscreteMeasure, ladder: &[f64]) -> Result<DimensionEstimate> {
    if ladder.len() < 4 {
        return Err(Error::InsufficientData(format!("{} scales given, at least 4 needed", ladder.len())));
    }
    let mut sorted = ladder.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    for w in sorted.windows(2) {
        if w[0] / w[1] < 2.0 * (1.0 - 1e-12) {
            return Err(invalid("ladder", "consecutive scales must differ by a factor ≥ 2"));
        }
    }
    let reports: Vec<GeometryReport> =
        sorted.par_iter().map(|&d| neighborhood_volume(m, d)).collect::<Result<Vec<_>>>()?;
    let ld: Vec<f64> = reports.iter().map(|r| r.delta.ln()).collect();
    let lv: Vec<f64> = reports.iter().map(|r| r.volume.ln()).collect();
    let li: Vec<f64> = reports.iter().map(|r| (1.0 / r.delta).ln()).collect();
    let ln: Vec<f64> = reports.iter().map(|r| (r.covering_count as f64).ln()).collect();
    let fv = fit_line(&ld, &lv).ok_or_else(|| Error::InsufficientData("degenerate volume fit".into()))?;
    let fc = fit_line(&li, &ln).ok_or_else(|| Error::InsufficientData("degenerate covering fit".into()))?;
    let d = m.dim() as f64;
    Ok(DimensionEstimate {
        fitted_alpha: d - fv.slope,
        box_dim_estimate: fc.slope.clamp(0.0, d),
        volume_residual: fv.residual_sum_sq,
        covering_residual: fc.residual_sum_sq,
        reports,
    })
}

/// Default geometric δ ladder 2^-lo .. 2^-hi.
pub fn dyadic_ladder(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|j| 2f64.powi(-j)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{make_canonical_measure, MeasureKind, MeasureParams};
    use proptest::prelude::*;

    fn p(dim: usize) -> MeasureParams {
        MeasureParams { dim, ..Default::default() }
    }

    #[test]
    fn segment_tube_volume() {
        let m = make_canonical_measure(MeasureKind::Segment, &p(2), 10_000).unwrap();
        let r = neighborhood_volume(&m, 0.01).unwrap();
        assert!(r.volume >= 0.0200 && r.volume <= 0.0208, "{}", r.volume);
    }

    #[test]
    fn dirac_ball_volume() {
        let m = make_canonical_measure(MeasureKind::Dirac, &p(2), 1).unwrap();
        let r = neighborhood_volume(&m, 0.1).unwrap();
        assert!((r.volume / (PI * 0.01) - 1.0).abs() < 0.05);
        assert_eq!(r.covering_count, 1);
        let m3 = make_canonical_measure(MeasureKind::Dirac, &p(3), 1).unwrap();
        let v = neighborhood_volume(&m3, 0.1).unwrap().volume;
        assert!((v / (4.0 / 3.0 * PI * 1e-3) - 1.0).abs() < 0.05);
    }

    #[test]
    fn cantor_covering_counts_are_exact() {
        let m = make_canonical_measure(
            MeasureKind::Cantor,
            &MeasureParams { dim: 1, depth: 10, ..Default::default() },
            1,
        )
        .unwrap();
        for j in 0..=10 {
            let r = neighborhood_volume(&m, 3f64.powi(-j)).unwrap();
            assert_eq!(r.covering_count, 1 << j, "j={j}");
        }
    }

    #[test]
    fn rejects_scales_below_resolution() {
        let m = make_canonical_measure(MeasureKind::Segment, &p(2), 100).unwrap();
        assert!(matches!(neighborhood_volume(&m, 0.001), Err(Error::BelowResolution { .. })));
    }

    #[test]
    fn fitted_dimensions() {
        let seg = make_canonical_measure(MeasureKind::Segment, &p(2), 1 << 14).unwrap();
        let e = estimate_alpha(&seg, &dyadic_ladder(5, 9)).unwrap();
        assert!((e.fitted_alpha - 1.0).abs() < 0.05, "{}", e.fitted_alpha);
        assert!((e.box_dim_estimate - 1.0).abs() < 0.05, "{}", e.box_dim_estimate);
        let cantor = make_canonical_measure(
            MeasureKind::Cantor,
            &MeasureParams { dim: 1, depth: 10, ..Default::default() },
            1,
        )
        .unwrap();
        let ladder: Vec<f64> = (2..=8).map(|j| 3f64.powi(-j)).collect();
        let e = estimate_alpha(&cantor, &ladder).unwrap();
        assert!((e.box_dim_estimate - 2f64.ln() / 3f64.ln()).abs() < 0.02);
    }

    #[test]
    fn segment_fit_tracks_exact_tube_formula() {
        // the fitted value on a ladder equals the LSQ fit of the exact tube
        // area 2δ + πδ² on the same ladder, whatever the ladder
        for (lo, hi) in [(3, 7), (5, 9)] {
            let ladder = dyadic_ladder(lo, hi);
            let seg = make_canonical_measure(MeasureKind::Segment, &p(2), 1 << 14).unwrap();
            let e = estimate_alpha(&seg, &ladder).unwrap();
            let xs: Vec<f64> = ladder.iter().map(|d| d.ln()).collect();
            let ys: Vec<f64> = ladder.iter().map(|d| (2.0 * d + PI * d * d).ln()).collect();
            let exact = 2.0 - fit_line(&xs, &ys).unwrap().slope;
            assert!((e.fitted_alpha - exact).abs() < 0.01, "{lo}..{hi}: {} vs {exact}", e.fitted_alpha);
        }
    }

    #[test]
    fn circle_annulus_volume() {
        let m = make_canonical_measure(MeasureKind::Circle, &p(2), 4096).unwrap();
        for j in 3..=7 {
            let d = 2f64.powi(-j);
            let v = neighborhood_volume(&m, d).unwrap().volume;
            let exact = PI * ((1.0 + d).powi(2) - (1.0 - d).powi(2));
            assert!((v / exact - 1.0).abs() < 0.01, "δ={d}: {v} vs {exact}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn volume_is_monotone_and_covers_fill_it(
            seed in 0u64..1000, n in 1usize..60, d1 in 0.02f64..0.2, factor in 1.0f64..3.0, dim in 1usize..=3
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<f64> = (0..n * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v1 = grid_volume(dim, &pts, d1).unwrap();
            let v2 = grid_volume(dim, &pts, d1 * factor).unwrap();
            // different radii use different grids, so monotone up to the
            // cell-counting error
            prop_assert!(v2 >= v1 * 0.97);
            let c = covering_count(dim, &pts, d1) as f64;
            let ball2 = unit_ball_volume(dim) * (2.0 * d1).powi(dim as i32);
            // grid counting can exceed the true volume by a thin shell
            prop_assert!(c * ball2 * 1.05 >= v1);
        }

        #[test]
        fn dilation_scales_volume(seed in 0u64..1000, n in 1usize..30, t in 0.5f64..3.0, dim in 1usize..=3) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<f64> = (0..n * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let scaled: Vec<f64> = pts.iter().map(|x| x * t).collect();
            let delta = 0.1;
            let v = grid_volume(dim, &pts, delta).unwrap();
            let vt = grid_volume(dim, &scaled, delta * t).unwrap();
            prop_assert!((vt / (v * t.powi(dim as i32)) - 1.0).abs() < 0.03);
        }
    }
}
