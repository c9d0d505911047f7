//! Generators and transforms against the closed forms and lattice counts of
//! the oracle crate.

use fourier_ratio::measure::{make_canonical_measure, suggested_samples, MeasureKind, MeasureParams};
use fourier_ratio::mollifier::Mollifier;
use fourier_ratio::spectrum::{measure_transform, transform_at};
use fourier_ratio::torus::{make_torus_measure, TorusKind, TorusParams};
use fr_oracles::{
    cantor_transform, circle_transform, lattice_band_count, plane_piece_transform, segment_transform, sphere_transform,
    torus_band_energies, torus_dirac_coefficient, torus_subtorus_coefficient,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-6;

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(7)
}

#[test]
fn segment_in_the_plane() {
    let m = make_canonical_measure(MeasureKind::Segment, &MeasureParams { dim: 2, ..Default::default() }, 1 << 16).unwrap();
    let mut g = rng();
    for _ in 0..40 {
        let xi = [g.gen_range(-20.0..20.0), g.gen_range(-20.0..20.0)];
        let o = segment_transform(1.0, xi[0]);
        assert!((measure_transform(&m, &xi) - o.value).norm() <= TOL + o.error_bound, "ξ = {xi:?}");
    }
}

#[test]
fn square_in_space() {
    let p = MeasureParams { dim: 3, k: 2, ..Default::default() };
    let m = make_canonical_measure(MeasureKind::KPlanePiece, &p, 2048 * 2048).unwrap();
    let mut g = rng();
    for _ in 0..10 {
        let xi = [g.gen_range(-5.0..5.0), g.gen_range(-5.0..5.0), g.gen_range(-5.0..5.0)];
        let o = plane_piece_transform(1.0, 2, &xi);
        assert!((measure_transform(&m, &xi) - o.value).norm() <= TOL + o.error_bound, "ξ = {xi:?}");
    }
}

#[test]
fn circle_and_sphere() {
    let mut g = rng();
    let plane = MeasureParams { dim: 2, ..Default::default() };
    let circle = make_canonical_measure(MeasureKind::Circle, &plane, suggested_samples(MeasureKind::Circle, &plane, 40.0, 1e-3)).unwrap();
    let space = MeasureParams { dim: 3, ..Default::default() };
    let sphere = make_canonical_measure(MeasureKind::Sphere, &space, suggested_samples(MeasureKind::Sphere, &space, 10.0, 1e-2)).unwrap();
    for _ in 0..30 {
        let rho = g.gen_range(0.0..40.0);
        let th = g.gen_range(0.0..std::f64::consts::TAU);
        let o = circle_transform(1.0, rho);
        let v = measure_transform(&circle, &[rho * th.cos(), rho * th.sin()]);
        assert!((v - o.value).norm() <= TOL + o.error_bound, "circle ρ = {rho}");
        let rho = rho / 4.0;
        let (a, b) = (g.gen_range(0.0..std::f64::consts::PI), th);
        let xi = [rho * a.sin() * b.cos(), rho * a.sin() * b.sin(), rho * a.cos()];
        let o = sphere_transform(1.0, rho);
        assert!((measure_transform(&sphere, &xi) - o.value).norm() <= TOL + o.error_bound, "sphere ρ = {rho}");
    }
}

#[test]
fn cantor_atoms() {
    let p = MeasureParams { dim: 1, depth: 12, ..Default::default() };
    let m = make_canonical_measure(MeasureKind::Cantor, &p, 1).unwrap();
    let psi = Mollifier::bump(1).unwrap();
    let mut g = rng();
    for _ in 0..40 {
        let xi = g.gen_range(-500.0..500.0);
        let o = cantor_transform(1.0 / 3.0, 12, xi);
        assert!((measure_transform(&m, &[xi]) - o.value).norm() <= TOL + o.error_bound, "ξ = {xi}");
        // the mollified transform divides back out
        let r = 4096.0;
        let v = transform_at(&m, &psi, r, &[xi]) / psi.freq_radial(xi.abs() / r);
        assert!((v - o.value).norm() <= TOL + o.error_bound);
    }
}

#[test]
fn torus_bands_match_lattice_enumeration() {
    for (kind, d, along, n) in [(TorusKind::Dirac, 3usize, 1usize, 8usize), (TorusKind::SubTorus, 3, 2, 8), (TorusKind::SubTorus, 2, 1, 20)] {
        let point = vec![0.3; d];
        let params = TorusParams { dim: d, along, point: Some(point.clone()), ..Default::default() };
        let u = make_torus_measure(kind, &params, n).unwrap();
        let m_max = (n * n) as u64;
        let axes: Vec<usize> = (0..along).collect();
        let want = match kind {
            TorusKind::Dirac => torus_band_energies(d, m_max, |k| torus_dirac_coefficient(&point, k)),
            _ => torus_band_energies(d, m_max, |k| torus_subtorus_coefficient(&axes, k)),
        };
        let bands = u.bands();
        for m in 0..=m_max {
            let (e, mult) = bands.iter().find(|b| b.m == m).map_or((0.0, 0), |b| (b.energy, b.multiplicity));
            assert!((e - want[m as usize].value).abs() <= 1e-10 + want[m as usize].error_bound, "{kind:?} T^{d} m = {m}");
            assert_eq!(mult, lattice_band_count(d, m));
        }
    }
}
