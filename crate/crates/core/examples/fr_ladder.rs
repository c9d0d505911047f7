//! Fourier ratio of arc length on the unit circle across R = 2^3..2^7.

use fourier_ratio::measure::{MeasureKind, MeasureParams};
use fourier_ratio::mollifier::Mollifier;
use fourier_ratio::ratio::{ladder_measure, ratio_ladder, scale_ladder};
use fourier_ratio::spectrum::SpectrumOptions;

fn main() -> fourier_ratio::Result<()> {
    let psi = Mollifier::bump(2)?;
    let ladder = scale_ladder(3, 7);
    let opts = SpectrumOptions::default();
    let m = ladder_measure(MeasureKind::Circle, &MeasureParams { dim: 2, ..Default::default() }, &psi, &ladder, opts.eps_tail)?;
    let s = ratio_ladder(&m, &psi, &ladder, 4.0, &opts)?;
    println!("{:>6} {:>12} {:>12} {:>12}", "R", "X1", "X2", "FR");
    for i in 0..s.ladder.len() {
        println!("{:>6} {:>12.5e} {:>12.5e} {:>12.5e}", s.ladder[i], s.x1[i], s.x2[i], s.fr[i]);
    }
    print!("{}", s.to_csv());
    Ok(())
}
