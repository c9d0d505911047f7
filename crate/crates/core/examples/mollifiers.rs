//! Compare the two mollifier families: frequency profiles, tails and the
//! window multiple T/R needed for a few tail tolerances.

use fourier_ratio::mollifier::{Family, Mollifier};

fn main() -> fourier_ratio::Result<()> {
    for d in 1..=3 {
        let bump = Mollifier::bump(d)?;
        let band = Mollifier::band_limited(d)?;
        println!("d = {d}");
        println!("  {:>6} {:>14} {:>14} {:>14}", "rho", "bump", "bump tail", "band-limited");
        for rho in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
            println!(
                "  {rho:>6.1} {:>14.6e} {:>14.6e} {:>14.6e}",
                bump.freq_radial(rho),
                bump.tail_bound(rho),
                band.freq_radial(rho)
            );
        }
        for eps in [0.2, 0.1, 0.05, 0.01, 1e-3, 1e-6] {
            println!(
                "  eps_tail {eps:>8.0e}: T/R = {:>8.4} (bump), {:>4} (band-limited)",
                bump.window_multiple(eps)?,
                band.window_multiple(eps)?
            );
        }
    }
    let band = Mollifier::new(Family::BandLimited, 1, 1.0)?;
    println!("spectral weight psi(s) of the band-limited profile");
    for s in [0.0, 2.0, 4.0, 8.0, 16.0, 24.0, 32.0] {
        println!("  {s:>5.1} {:>14.6e} tail {:>10.3e}", band.spectral_weight(s)?, band.spectral_tail_bound(s)?);
    }
    for tol in [1e-6, 1e-8, 1e-10] {
        println!("  |psi| <= {tol:e} beyond s = {:?}", band.spectral_cutoff(tol)?);
    }
    Ok(())
}
