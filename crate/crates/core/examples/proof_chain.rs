//! Every inequality of the vanishing argument evaluated on a circle ladder.

use fourier_ratio::geometry::neighborhood_volume;
use fourier_ratio::measure::{MeasureKind, MeasureParams};
use fourier_ratio::mollifier::Mollifier;
use fourier_ratio::ratio::{estimate_kappa, ladder_measure, ratio_ladder_samples, scale_ladder};
use fourier_ratio::spectrum::SpectrumOptions;
use fourier_ratio::threshold::proof_chain_check;

fn main() -> fourier_ratio::Result<()> {
    let psi = Mollifier::bump(2)?;
    let ladder = scale_ladder(4, 7);
    let opts = SpectrumOptions::default();
    let m = ladder_measure(MeasureKind::Circle, &MeasureParams { dim: 2, ..Default::default() }, &psi, &ladder, opts.eps_tail)?;
    let (series, samples) = ratio_ladder_samples(&m, &psi, &ladder, 6.0, &opts)?;
    let support = m.density_support();
    let geometry = ladder.iter().map(|r| neighborhood_volume(&support, 1.0 / r)).collect::<fourier_ratio::Result<Vec<_>>>()?;
    let est = estimate_kappa(&series, 0.5)?;
    let rep = proof_chain_check(&m, &psi, &series, &samples, &geometry, &est, 1.0, 6.0, 0.05)?;
    println!("{}: kappa' {:.4}, theta {:.4}, exponent {:.4}", rep.label, rep.kappa_prime, rep.theta, rep.exponent);
    for row in &rep.rows {
        println!("  R {:>4}: holder {} pairing {:?}", row.r, row.holder.passed, row.pairing.as_ref().map(|p| p.passed));
    }
    println!("{}; {}", rep.implication, rep.verdict);
    Ok(())
}
