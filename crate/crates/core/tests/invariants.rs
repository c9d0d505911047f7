//! Property tests of the structural invariants: mollifier symmetry, window
//! monotonicity, geometric scaling and the torus identities.

use fourier_ratio::geometry::neighborhood_volume;
use fourier_ratio::measure::DiscreteMeasure;
use fourier_ratio::mollifier::{Family, Mollifier};
use fourier_ratio::spectrum::{regularized_norm, sample_spectrum, SpectrumOptions};
use fourier_ratio::torus::{spectral_norms, TorusMeasure};
use num_complex::Complex64;
use proptest::prelude::*;

fn cloud(dim: usize, pts: &[f64], real: bool) -> DiscreteMeasure {
    let n = pts.len() / dim;
    let density = (0..n).map(|j| if real { Complex64::new(1.0 + j as f64, 0.0) } else { Complex64::new(1.0, j as f64) }).collect();
    DiscreteMeasure::from_parts(dim, pts[..n * dim].to_vec(), vec![1.0 / n as f64; n], density, "cloud", 0.0).unwrap()
}

fn direct() -> SpectrumOptions {
    SpectrumOptions { audit: false, force_direct: true, ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mollifiers_are_even(dim in 1usize..=3, tau in proptest::collection::vec(-3.0f64..3.0, 3)) {
        for psi in [Mollifier::bump(dim).unwrap(), Mollifier::band_limited(dim).unwrap()] {
            let t = &tau[..dim];
            let neg: Vec<f64> = t.iter().map(|x| -x).collect();
            prop_assert_eq!(psi.eval_frequency(t), psi.eval_frequency(&neg));
        }
    }

    #[test]
    fn band_limited_vanishes_outside_band(dim in 1usize..=3, a in 0.5f64..4.0, rho in 1.0f64..50.0) {
        let psi = Mollifier::new(Family::BandLimited, dim, a).unwrap();
        prop_assert_eq!(psi.freq_radial(rho * a), 0.0);
    }

    #[test]
    fn wider_window_never_lowers_norms(pts in proptest::collection::vec(-0.5f64..0.5, 6), c in 0.3f64..1.5, grow in 1.1f64..2.0) {
        let m = cloud(2, &pts, false);
        let psi = Mollifier::bump(2).unwrap();
        let small = sample_spectrum(&m, &psi, 3.0, &SpectrumOptions { window_multiple: Some(c), ..direct() }).unwrap();
        let big = sample_spectrum(&m, &psi, 3.0, &SpectrumOptions { window_multiple: Some(c * grow), ..direct() }).unwrap();
        for p in [1.0, 2.0, f64::INFINITY] {
            // the shared nodes are summed in a different order
            let (b, s) = (regularized_norm(&big, p).unwrap(), regularized_norm(&small, p).unwrap());
            prop_assert!(b >= s * (1.0 - 1e-14), "p = {}: {} < {}", p, b, s);
        }
    }

    #[test]
    fn real_density_norms_are_reflection_invariant(pts in proptest::collection::vec(-0.5f64..0.5, 8)) {
        // reflecting the cloud through the origin reflects the grid
        let m = cloud(2, &pts, true);
        let flipped: Vec<f64> = pts.iter().map(|x| -x).collect();
        let mf = cloud(2, &flipped, true);
        let psi = Mollifier::bump(2).unwrap();
        let opts = SpectrumOptions { window_multiple: Some(1.0), ..direct() };
        let a = sample_spectrum(&m, &psi, 2.0, &opts).unwrap();
        let b = sample_spectrum(&mf, &psi, 2.0, &opts).unwrap();
        for p in [1.0, 2.0] {
            let (x, y) = (regularized_norm(&a, p).unwrap(), regularized_norm(&b, p).unwrap());
            prop_assert!((x - y).abs() <= 1e-12 * x);
        }
    }

    #[test]
    fn dilation_scales_volume(pts in proptest::collection::vec(-1.0f64..1.0, 6), t in 1.5f64..4.0) {
        let m = cloud(2, &pts, true);
        let delta = 0.125;
        let v = neighborhood_volume(&m, delta).unwrap().volume;
        let vt = neighborhood_volume(&m.dilate(t), delta * t).unwrap().volume;
        prop_assert!((vt / (t * t * v) - 1.0).abs() < 0.05, "{} vs {}", vt, t * t * v);
    }

    #[test]
    fn torus_parseval_and_cauchy_schwarz(re in proptest::collection::vec(-1.0f64..1.0, 289), im in proptest::collection::vec(-1.0f64..1.0, 289), r in 0.5f64..1.1) {
        // T² block of radius 8: 17² coefficients
        let coeffs: Vec<Complex64> = re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect();
        let u = TorusMeasure::from_coefficients("random", 2, 8, coeffs).unwrap();
        let band: f64 = u.bands().iter().map(|b| b.energy * b.energy).sum();
        let coeff = u.coefficient_energy();
        prop_assert!((band - coeff).abs() <= 1e-12 * coeff);
        let psi = Mollifier::band_limited(2).unwrap();
        let nm = spectral_norms(&u, &psi, r, 4.0).unwrap();
        let (l1, l2) = (nm.seq_norm(1.0), nm.seq_norm(2.0));
        prop_assert!(l1 <= (nm.bands_used as f64).sqrt() * l2 * (1.0 + 1e-12));
        let fr = r.powf(-1.0) * l1 / l2;
        prop_assert!((nm.fr - fr).abs() <= 1e-13 * fr);
    }
}
