//! FR between its geometric lower bounds and the concentration upper bound
//! for a segment, with the spectrum concentrated in a strip.

use fourier_ratio::geometry::neighborhood_volume;
use fourier_ratio::measure::{MeasureKind, MeasureParams};
use fourier_ratio::mollifier::Mollifier;
use fourier_ratio::ratio::{ladder_measure, ratio_ladder, sandwich_check, scale_ladder, ConcentrationRegion, Slack};
use fourier_ratio::spectrum::SpectrumOptions;

fn main() -> fourier_ratio::Result<()> {
    let psi = Mollifier::bump(2)?;
    let ladder = scale_ladder(4, 7);
    let opts = SpectrumOptions::default();
    let m = ladder_measure(MeasureKind::Segment, &MeasureParams { dim: 2, ..Default::default() }, &psi, &ladder, opts.eps_tail)?;
    let series = ratio_ladder(&m, &psi, &ladder, 4.0, &opts)?;
    let support = m.density_support();
    for region in [ConcentrationRegion::strip(2, 0, 4.0), ConcentrationRegion::Everything] {
        println!("region {region:?}");
        for (i, &r) in ladder.iter().enumerate() {
            let g = neighborhood_volume(&support, 1.0 / r)?;
            let lower = (r * r * g.volume).powf(-0.5);
            let c = sandwich_check(&m, &psi, &series, &region, r, &opts, Slack::default())?;
            println!("  R {r:>4}: {lower:.4} <= FR {:.4} <= {:.4} (eta {:.3e})", series.fr[i], c.upper.unwrap_or(f64::NAN), c.eta);
        }
    }
    Ok(())
}
