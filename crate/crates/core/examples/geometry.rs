//! Neighborhood volumes, covering numbers and the dimension they imply.

use fourier_ratio::geometry::{dyadic_ladder, estimate_alpha};
use fourier_ratio::measure::{make_canonical_measure, MeasureKind, MeasureParams};

fn main() -> fourier_ratio::Result<()> {
    let plane = MeasureParams { dim: 2, ..Default::default() };
    let cases = [
        (make_canonical_measure(MeasureKind::Segment, &plane, 1 << 14)?, dyadic_ladder(5, 9)),
        (make_canonical_measure(MeasureKind::Circle, &plane, 1 << 16)?, dyadic_ladder(5, 9)),
        // exact scales of the construction
        (
            make_canonical_measure(MeasureKind::Cantor, &MeasureParams { dim: 1, depth: 12, ..Default::default() }, 1)?,
            (2..=8).map(|j| 3f64.powi(-j)).collect(),
        ),
    ];
    for (m, ladder) in cases {
        let est = estimate_alpha(&m, &ladder)?;
        println!("{}: alpha {:.4}, box dimension {:.4}", m.label(), est.fitted_alpha, est.box_dim_estimate);
        for g in &est.reports {
            println!("  delta {:>10.3e}  |E_delta| {:>10.4e}  N {:>7}", g.delta, g.volume, g.covering_count);
        }
    }
    Ok(())
}
