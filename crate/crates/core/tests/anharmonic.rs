use lrlab::anharmonic::*;
use lrlab::harmonic::{corollary_bound, HarmonicSpec, SiteFunction, DEFAULT_EPS};
use lrlab::lattice::DecayFunction;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn spec() -> HarmonicSpec {
    HarmonicSpec::finite(1, 8, 1.0, vec![1.0]).unwrap()
}

fn fg() -> (SiteFunction, SiteFunction) {
    (
        SiteFunction::from_pairs(vec![(vec![0], C64::new(1.0, 0.2)), (vec![1], C64::new(0.0, -0.5))]),
        SiteFunction::from_pairs(vec![(vec![5], C64::new(0.3, 0.3))]),
    )
}

#[test]
fn zero_perturbation_is_harmonic() {
    let s = spec();
    let (f, g) = fg();
    for t in [0.0, 0.4, 1.3] {
        let a = anharmonic_bound(&s, &[], &f, &g, t, 1.0, DEFAULT_EPS).unwrap();
        let h = corollary_bound(&s, &f, &g, t, 1.0, DEFAULT_EPS).unwrap();
        assert!((a - h).abs() <= 1e-12 * h);
        let m = multisite_bound(&s, &[], &f, &g, t, 1.0, DEFAULT_EPS, 2.0).unwrap();
        assert!((m - h).abs() <= 1e-12 * h);
    }
}

#[test]
fn time_zero_prefactor() {
    let s = spec();
    let (f, g) = fg();
    let ms = vec![SiteMeasure::cosine(vec![2], C64::new(0.5, 0.1), 0.3).unwrap()];
    let b = anharmonic_bound(&s, &ms, &f, &g, 0.0, 1.0, 0.5).unwrap();
    let fm = DecayFunction::exp_power(1.0, 1);
    let mut pairs = 0.0;
    for (x, a) in f.iter() {
        for (y, c) in g.iter() {
            pairs += a.norm() * c.norm() * fm.at(s.distance(x, y));
        }
    }
    assert!((b - s.corollary_constant(1.0, 0.5) * pairs).abs() < 1e-12 * b);
}

#[test]
fn doubling_kappa_ratio() {
    let s = spec();
    let (f, g) = fg();
    let one = vec![SiteMeasure::cosine(vec![0], C64::new(0.4, 0.0), 0.5).unwrap()];
    let two = vec![SiteMeasure::cosine(vec![0], C64::new(0.4, 0.0), 1.0).unwrap()];
    let t = 0.7;
    let k = AnharmonicConstants::compute(&s, 1.0, DEFAULT_EPS).unwrap();
    let b1 = anharmonic_bound(&s, &one, &f, &g, t, 1.0, DEFAULT_EPS).unwrap();
    let b2 = anharmonic_bound(&s, &two, &f, &g, t, 1.0, DEFAULT_EPS).unwrap();
    let want = (k.c * kappa(&one) * k.c_d * t).exp();
    assert!((b2 / b1 - want).abs() < 1e-10 * want);
}

#[test]
fn kappa_mixed_sites_by_enumeration() {
    let ms = vec![
        SiteMeasure::cosine(vec![0], C64::new(1.0, 0.0), 0.5).unwrap(),
        SiteMeasure::cosine(vec![0], C64::new(0.0, 2.0), 0.25).unwrap(),
        SiteMeasure::cosine(vec![3], C64::new(1.0, 1.0), 0.7).unwrap(),
    ];
    let site0: f64 = 2.0 * 0.5 * 1.0 + 2.0 * 0.25 * 4.0;
    let site3 = 2.0 * 0.7 * 2.0;
    assert!((kappa(&ms) - site0.max(site3)).abs() < 1e-14);
}

#[test]
fn kappa_mu_single_site_reduction() {
    let s = spec();
    let fm = DecayFunction::exp_power(0.8, 1);
    let ms = vec![
        SiteMeasure::cosine(vec![0], C64::new(1.0, 0.5), 0.5).unwrap(),
        SiteMeasure::cosine(vec![2], C64::new(0.3, 0.0), 1.0).unwrap(),
    ];
    let multi: Vec<_> = ms.iter().map(|m| m.to_multi()).collect();
    let km = kappa_mu(&s, &multi, &fm);
    assert!(km.pass);
    assert!((km.kappa_mu - kappa(&ms) / fm.eval(0.0)).abs() < 1e-14);
    assert_eq!(kappa_mu(&s, &[], &fm).kappa_mu, 0.0);
}

#[test]
fn kappa_mu_two_sites() {
    let s = spec();
    let fm = DecayFunction::exp_power(1.0, 1);
    let atom = |sgn: f64| MultiAtom { re: vec![sgn * 1.0, sgn * 0.5], im: vec![0.0, sgn * 0.5], w: 0.4 };
    let m = MultiSiteMeasure::new(vec![vec![0], vec![1]], vec![atom(1.0), atom(-1.0)]).unwrap();
    let km = kappa_mu(&s, &[m], &fm);
    let z1 = (0.5f64 * 0.5 + 0.25).sqrt();
    let diag = (2.0 * 0.4 * 1.0f64).max(2.0 * 0.4 * z1 * z1);
    let off = 2.0 * 0.4 * 1.0 * z1 / fm.eval(1.0);
    assert!((km.kappa_mu - diag.max(off)).abs() < 1e-12);
}

#[test]
fn single_versus_multi_site_gap() {
    let s = spec();
    let (f, g) = fg();
    let ms = vec![SiteMeasure::cosine(vec![1], C64::new(0.6, 0.0), 0.5).unwrap()];
    let multi: Vec<_> = ms.iter().map(|m| m.to_multi()).collect();
    let t = 0.5;
    let single = anharmonic_bound(&s, &ms, &f, &g, t, 1.0, DEFAULT_EPS).unwrap();
    let multi_b = multisite_bound(&s, &multi, &f, &g, t, 1.0, DEFAULT_EPS, 1.0).unwrap();
    let k = AnharmonicConstants::compute(&s, 1.0, DEFAULT_EPS).unwrap();
    // F_μ(0) = 1 so κ_μ = κ; the exponents differ by the extra C_d factor
    let ratio = (k.c * kappa(&ms) * (k.c_d * k.c_d - k.c_d) * t).exp();
    assert!((multi_b / single - ratio).abs() < 1e-10 * ratio);
    assert!(multi_b >= single);
    assert!(multisite_bound(&s, &multi, &f, &g, t, 1.5, DEFAULT_EPS, 1.0).is_err());
}

#[test]
fn infinite_matches_finite_away_from_wrap() {
    let fin = HarmonicSpec::finite(1, 64, 1.0, vec![1.0]).unwrap();
    let inf = HarmonicSpec::infinite(1, 1.0, vec![1.0]).unwrap();
    let (f, g) = fg();
    for t in [0.0, 0.5, 1.0] {
        for mu in [0.5, 1.0] {
            let a = anharmonic_bound(&fin, &[], &f, &g, t, mu, DEFAULT_EPS).unwrap();
            let b = infinite_volume_bound(&inf, &[], &f, &g, t, mu, DEFAULT_EPS).unwrap();
            assert!((a - b).abs() <= 1e-9 * b);
        }
    }
    let ms = vec![SiteMeasure::cosine(vec![0], C64::new(0.5, 0.0), 1.0).unwrap()];
    let a = anharmonic_bound(&fin, &ms, &f, &g, 0.0, 1.0, DEFAULT_EPS).unwrap();
    let b = infinite_volume_bound(&inf, &ms, &f, &g, 0.0, 1.0, DEFAULT_EPS).unwrap();
    assert!((a - b).abs() <= 1e-9 * b);
    assert!(infinite_volume_bound(&fin, &ms, &f, &g, 0.0, 1.0, DEFAULT_EPS).is_err());
}

#[test]
fn torus_constant_below_lattice_constant() {
    let inf = HarmonicSpec::infinite(2, 1.0, vec![1.0, 1.0]).unwrap();
    let fin = HarmonicSpec::finite(2, 6, 1.0, vec![1.0, 1.0]).unwrap();
    let a = convolution_constant(&fin).unwrap();
    let b = convolution_constant(&inf).unwrap();
    assert!(a < b);
}

#[test]
fn measure_json_roundtrip() {
    let m = SiteMeasure::cosine(vec![3], C64::new(0.5, -0.25), 2.0).unwrap();
    let back = SiteMeasure::from_json(&m.to_json().unwrap()).unwrap();
    assert_eq!(m, back);
    let odd = r#"{"site":[0],"atoms":[{"re":1.0,"im":0.0,"w":1.0}]}"#;
    assert!(SiteMeasure::from_json(odd).is_err());
    let multi = r#"{"sites":[[0],[1]],"atoms":[{"re":[1,0],"im":[0,1],"w":0.5},{"re":[-1,0],"im":[0,-1],"w":0.5}]}"#;
    let mm = MultiSiteMeasure::from_json(multi).unwrap();
    assert_eq!(MultiSiteMeasure::from_json(&mm.to_json().unwrap()).unwrap(), mm);
}

proptest! {
    #[test]
    fn bounds_monotone(t1 in 0.0f64..2.0, dt in 0.0f64..1.0, w in 0.01f64..2.0, dw in 0.0f64..1.0) {
        let s = spec();
        let (f, g) = fg();
        let m = |w: f64| vec![SiteMeasure::cosine(vec![0], C64::new(0.5, 0.2), w).unwrap()];
        let a = anharmonic_bound(&s, &m(w), &f, &g, t1, 1.0, 0.5).unwrap();
        prop_assert!(anharmonic_bound(&s, &m(w), &f, &g, t1 + dt, 1.0, 0.5).unwrap() >= a);
        prop_assert!(anharmonic_bound(&s, &m(w), &f, &g, -(t1 + dt), 1.0, 0.5).unwrap() >= a);
        prop_assert!(anharmonic_bound(&s, &m(w + dw), &f, &g, t1, 1.0, 0.5).unwrap() >= a);
        let mm = |w: f64| vec![m(w)[0].to_multi()];
        let b = multisite_bound(&s, &mm(w), &f, &g, t1, 1.0, 0.5, 1.0).unwrap();
        prop_assert!(multisite_bound(&s, &mm(w + dw), &f, &g, t1, 1.0, 0.5, 1.0).unwrap() >= b);
    }
}
