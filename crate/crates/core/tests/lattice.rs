use lrlab::lattice::{convolution_constant_exact, sufficient_constant, torus_distance, uniform_integral, DecayFunction, SiteSet};
use proptest::prelude::*;

fn brute_conv(s: &SiteSet, f: &DecayFunction) -> f64 {
    let n = s.len();
    let mut best = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            let sum: f64 = (0..n).map(|z| f.at(s.distance(x, z)) * f.at(s.distance(z, y))).sum();
            best = best.max(sum / f.at(s.distance(x, y)));
        }
    }
    best
}

#[test]
fn path_and_ring_distances() {
    let p = SiteSet::path(6);
    let r = SiteSet::ring(6);
    assert_eq!(p.distance(0, 5), 5);
    assert_eq!(r.distance(0, 5), 1);
    assert_eq!(r.distance(1, 4), 3);
    assert_eq!(p.set_distance(&[0, 1], &[3, 5]), 2);
}

#[test]
fn torus_wraps_each_axis() {
    let t = SiteSet::torus(2, 3).unwrap();
    assert_eq!(t.len(), 36);
    let a = t.index_of(&[-2, 3]).unwrap();
    let b = t.index_of(&[3, -2]).unwrap();
    assert_eq!(t.distance(a, b), 2);
    assert_eq!(torus_distance(&[-2, 3], &[3, -2], 3).unwrap(), 2);
    assert!(torus_distance(&[4], &[0], 3).is_err());
    assert!(SiteSet::torus(1, 0).is_err());
}

#[test]
fn decay_values() {
    let f = DecayFunction::power(1);
    assert_eq!(f.at(0), 1.0);
    assert!((f.at(3) - 1.0 / 16.0).abs() < 1e-15);
    let g = DecayFunction::exp_power(0.5, 2);
    assert!((g.eval(1.0) - (-0.5f64).exp() / 8.0).abs() < 1e-15);
    assert!(f.value(-1.0).is_err());
}

#[test]
fn uniform_integral_on_ring_is_row_sum() {
    let r = SiteSet::ring(7);
    let f = DecayFunction::power(1);
    let want: f64 = (0..7).map(|y| f.at(r.distance(0, y))).sum();
    assert!((uniform_integral(&r, &f) - want).abs() < 1e-14);
}

#[test]
fn single_site_constants() {
    let s = SiteSet::path(1);
    let f = DecayFunction::power(1);
    assert_eq!(convolution_constant_exact(&s, &f).unwrap(), 1.0);
    assert_eq!(uniform_integral(&s, &f), 1.0);
}

#[test]
fn torus_constant_matches_reversed_enumeration() {
    let s = SiteSet::torus(1, 4).unwrap();
    let f = DecayFunction::exp_power(1.0, 1);
    let n = s.len();
    let mut best = 0.0f64;
    for x in (0..n).rev() {
        for y in (0..n).rev() {
            let sum: f64 = (0..n).rev().map(|z| f.at(s.distance(x, z)) * f.at(s.distance(z, y))).sum();
            best = best.max(sum / f.at(s.distance(x, y)));
        }
    }
    assert!((convolution_constant_exact(&s, &f).unwrap() - best).abs() < 1e-14);
}

#[test]
fn uniform_integral_of_path_peaks_at_centre() {
    let s = SiteSet::path(5);
    let f = DecayFunction::power(1);
    let centre: f64 = (0..5).map(|y| f.at(s.distance(2, y))).sum();
    assert!((uniform_integral(&s, &f) - centre).abs() < 1e-15);
}

#[test]
fn sufficient_constant_dominates_on_boxes() {
    for extent in [vec![5], vec![9], vec![3, 3], vec![4, 2], vec![2, 2, 2]] {
        let s = SiteSet::boxed(&extent);
        let f = DecayFunction::power(extent.len());
        assert!(convolution_constant_exact(&s, &f).unwrap() <= sufficient_constant(&s, &f), "{extent:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn metric_axioms(n in 2usize..12, periodic in any::<bool>(), i in 0usize..12, j in 0usize..12, k in 0usize..12) {
        let s = if periodic { SiteSet::ring(n) } else { SiteSet::path(n) };
        let (i, j, k) = (i % n, j % n, k % n);
        prop_assert_eq!(s.distance(i, j), s.distance(j, i));
        prop_assert_eq!(s.distance(i, i), 0);
        prop_assert!(s.distance(i, k) <= s.distance(i, j) + s.distance(j, k));
    }

    #[test]
    fn convolution_constant_matches_enumeration(n in 2usize..10, mu in 0.0f64..2.0, periodic in any::<bool>()) {
        let s = if periodic { SiteSet::ring(n) } else { SiteSet::path(n) };
        for f in [DecayFunction::power(1), DecayFunction::exp_power(mu, 1)] {
            let c = convolution_constant_exact(&s, &f).unwrap();
            prop_assert!((c - brute_conv(&s, &f)).abs() <= 1e-12 * c);
            prop_assert!(c >= 1.0);
        }
    }

    #[test]
    fn triangle_inequality_exhaustive(n in 2usize..=32, periodic in any::<bool>()) {
        let s = if periodic { SiteSet::ring(n) } else { SiteSet::path(n) };
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    prop_assert!(s.distance(i, k) <= s.distance(i, j) + s.distance(j, k));
                }
            }
        }
    }

    #[test]
    fn sufficient_constant_dominates_on_paths(n in 1usize..=16) {
        let s = SiteSet::path(n);
        let f = DecayFunction::power(1);
        prop_assert!(convolution_constant_exact(&s, &f).unwrap() <= sufficient_constant(&s, &f));
    }

    #[test]
    fn exponential_kind_is_dominated(mu in 0.0f64..4.0, r in 0u64..50, d in 1usize..4) {
        let p = DecayFunction::power(d).at(r);
        let e = DecayFunction::exp_power(mu, d).at(r);
        prop_assert!(e <= p);
        prop_assert_eq!(DecayFunction::exp_power(0.0, d).at(r), p);
    }

    #[test]
    fn exponential_weight_keeps_constant_bounded(mu in 0.0f64..3.0) {
        let s = SiteSet::path(9);
        let c0 = convolution_constant_exact(&s, &DecayFunction::power(1)).unwrap();
        let cm = convolution_constant_exact(&s, &DecayFunction::exp_power(mu, 1)).unwrap();
        prop_assert!(cm <= c0 * (1.0 + 1e-12));
    }
}
