//! Exact synthesis thresholds: a few named cases, the inverse map and the
//! p* curve for a curve in the plane.

use fourier_ratio::threshold::{parse_rational, sweep_curve, threshold, threshold_inverse, Extended};

fn main() -> fourier_ratio::Result<()> {
    for (d, alpha, kappa) in [(2, "1", "0"), (2, "1", "1/4"), (2, "1", "1/2"), (3, "2", "1/2"), (3, "1", "0")] {
        let r = threshold(d, &parse_rational(alpha)?, &parse_rational(kappa)?)?;
        println!("d={d} alpha={alpha} kappa={kappa}: p* = {} ({:?})", r.p_star, r.regime);
    }
    let k = threshold_inverse(2, &parse_rational("1")?, &parse_rational("6")?)?;
    println!("p* = 6 for a curve in the plane needs kappa = {k}");
    for (k, p) in sweep_curve(2, &parse_rational("1")?, 9)? {
        match p {
            Extended::Finite(q) => println!("  kappa {k:>6}  p* {q}"),
            Extended::Infinite => println!("  kappa {k:>6}  p* inf"),
        }
    }
    Ok(())
}
