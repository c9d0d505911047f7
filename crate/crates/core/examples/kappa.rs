//! Decay exponent of FR for a point mass, a segment and the Cantor set,
//! under both mollifier families.

use fourier_ratio::measure::{MeasureKind, MeasureParams};
use fourier_ratio::mollifier::{Family, Mollifier};
use fourier_ratio::ratio::{estimate_kappa, ladder_measure, ratio_ladder, scale_ladder};
use fourier_ratio::spectrum::SpectrumOptions;

fn main() -> fourier_ratio::Result<()> {
    let opts = SpectrumOptions::default();
    let cases = [
        (MeasureKind::Dirac, MeasureParams { dim: 2, ..Default::default() }),
        (MeasureKind::Segment, MeasureParams { dim: 2, ..Default::default() }),
        (MeasureKind::Cantor, MeasureParams { dim: 1, depth: 12, ..Default::default() }),
    ];
    for (kind, params) in cases {
        for family in [Family::SpaceCompactBump, Family::BandLimited] {
            let psi = Mollifier::new(family, params.dim, 1.0)?;
            let ladder = scale_ladder(4, 8);
            let m = ladder_measure(kind, &params, &psi, &ladder, opts.eps_tail)?;
            let s = ratio_ladder(&m, &psi, &ladder, 4.0, &opts)?;
            let e = estimate_kappa(&s, 0.5)?;
            println!("{:<10} {:<12?} kappa {:.4} (min {:.4}, residual {:.2e})", m.label(), family, e.kappa, e.kappa_min, e.residual);
        }
    }
    Ok(())
}
