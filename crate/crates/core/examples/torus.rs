//! Localized spectral FR on the 2-torus: a point mass, a coordinate circle
//! and a tilted closed curve, with κ_M fitted on R = 2^4..2^7.

use fourier_ratio::mollifier::Mollifier;
use fourier_ratio::ratio::scale_ladder;
use fourier_ratio::torus::{block_radius_for, make_torus_measure, manifold_ratio_ladder, support_propagation_check, TorusKind, TorusParams};

fn main() -> fourier_ratio::Result<()> {
    let psi = Mollifier::band_limited(2)?;
    let ladder = scale_ladder(4, 7);
    let n = block_radius_for(&psi, 2, 128.0)?;
    for kind in [TorusKind::Dirac, TorusKind::SubTorus, TorusKind::EmbeddedCircle] {
        let u = make_torus_measure(kind, &TorusParams { dim: 2, ..Default::default() }, n)?;
        let (ts, e) = manifold_ratio_ladder(&u, &psi, &ladder, 4.0, 0.5)?;
        println!("{} (N = {}): kappa_M {:.4}", u.label, u.block_radius(), e.kappa);
        for (r, fr) in ts.series.ladder.iter().zip(&ts.series.fr) {
            println!("  R {r:>4}  FR {fr:.5e}");
        }
        let leak = support_propagation_check(&u, &psi, 16.0, 1e-6)?;
        println!("  mass outside the 1/R-neighborhood at R = 16: {:.3e}", leak.leak_fraction);
    }
    Ok(())
}
