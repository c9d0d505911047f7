//! Published threshold values and the monotone blow-up of p* as κ → α/2.

use fourier_ratio::threshold::{parse_rational, threshold, Extended, Regime, Q};

fn q(s: &str) -> Q {
    parse_rational(s).unwrap()
}

fn p_star(d: u32, alpha: &str, kappa: &str) -> Extended {
    threshold(d, &q(alpha), &q(kappa)).unwrap().p_star
}

#[test]
fn curve_in_the_plane_gives_four() {
    let r = threshold(2, &q("1"), &q("0")).unwrap();
    assert_eq!(r.p_star, Extended::Finite(q("4")));
    assert_eq!(r.regime, Regime::Classical);
}

#[test]
fn curve_in_space_gives_six() {
    // 2d/k for a curve in ℝ³, the exponent the moment curve improves on
    assert_eq!(p_star(3, "1", "0"), Extended::Finite(q("6")));
}

#[test]
fn maximal_decay_is_rigid() {
    for (d, alpha) in [(2, "1"), (3, "2"), (3, "1"), (5, "7/3")] {
        let half = q(alpha) / q("2");
        let r = threshold(d, &q(alpha), &half).unwrap();
        assert_eq!(r.p_star, Extended::Infinite);
        assert_eq!(r.regime, Regime::Rigid);
    }
}

#[test]
fn hypersurfaces_with_k_nonvanishing_curvatures() {
    for d in 2..=6u32 {
        for k in 1..d {
            let kappa = format!("{}/2", d - 1 - k);
            assert_eq!(p_star(d, &(d - 1).to_string(), &kappa), Extended::Finite(q(&format!("{}/{k}", 2 * (k + 1)))));
        }
    }
}

#[test]
fn manifold_reduction() {
    for d in 1..=4u32 {
        for k in 1..d {
            assert_eq!(p_star(d, &k.to_string(), "0"), Extended::Finite(q(&format!("{}/{k}", 2 * d))));
        }
    }
}

#[test]
fn strictly_increasing_in_kappa() {
    let alpha = q("3/2");
    let mut last = q("0");
    for i in 0..50 {
        let kappa = &alpha / q("2") * q(&format!("{i}/50"));
        match threshold(3, &alpha, &kappa).unwrap().p_star {
            Extended::Finite(p) => {
                assert!(p > last);
                last = p;
            }
            Extended::Infinite => panic!("finite below α/2"),
        }
    }
}

#[test]
fn blows_up_near_half_alpha() {
    // p* = (d-α)·10ⁿ + 2 at κ = α/2 - 10⁻ⁿ, so the bound 10ⁿ/2 needs d - α ≥ 1/2
    for (d, alpha) in [(2u32, "1"), (3, "2"), (3, "5/2"), (6, "1/3")] {
        for n in 3..=9 {
            let eps = q(&format!("1/{}", 10u64.pow(n)));
            let kappa = q(alpha) / q("2") - eps;
            let Extended::Finite(p) = threshold(d, &q(alpha), &kappa).unwrap().p_star else { panic!() };
            assert!(p > q(&format!("{}/2", 10u64.pow(n))), "d={d} α={alpha} n={n}: {p}");
        }
    }
}
