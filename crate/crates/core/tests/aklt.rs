use lrlab::aklt::*;
use lrlab::linalg::{eigh, identity, op_norm, CMat, C64};
use lrlab::models;
use lrlab::quantum::spin::{heisenberg_bond, spin_matrices};
use lrlab::quantum::{Layout, LocalOperator, SolverMode, SpectralModel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LOG4: f64 = 1.386_294_361_119_890_6;

fn random_hermitian(rng: &mut ChaCha8Rng, d: usize) -> CMat {
    let m = CMat::from_fn(d, d, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> CMat {
    let h = random_hermitian(rng, d);
    lrlab::linalg::expm(&(h * C64::new(0.0, 2.0)))
}

#[test]
fn bond_is_spin_two_projector() {
    let p = aklt_bond_matrix();
    assert!(op_norm(&(&p * &p - &p)) < 1e-12);
    let (vals, _) = eigh(&p);
    assert!(vals[..4].iter().all(|v| v.abs() < 1e-12));
    assert!(vals[4..].iter().all(|v| (v - 1.0).abs() < 1e-12));
    for s in spin_matrices(3) {
        let tot = s.kronecker(&identity(3)) + identity(3).kronecker(&s);
        assert!(op_norm(&(&p * &tot - &tot * &p)) < 1e-12);
    }
    // Spin-2 subspace: S_tot² = 6 exactly there.
    let s = spin_matrices(3);
    let mut s2 = CMat::zeros(9, 9);
    for a in &s {
        let t = a.kronecker(&identity(3)) + identity(3).kronecker(a);
        s2 += &t * &t;
    }
    let (v2, u) = eigh(&s2);
    let u = u.to_complex();
    let cols: Vec<_> = (0..9).filter(|&k| (v2[k] - 6.0).abs() < 1e-9).map(|k| u.column(k).into_owned()).collect();
    let q = CMat::from_columns(&cols);
    assert!(op_norm(&(&q * q.adjoint() - &p)) < 1e-12);
}

#[test]
fn intertwiners_are_isometries() {
    let iw = Intertwiners::new();
    let (dw, dv) = iw.isometry_defects();
    assert!(dw < 1e-12 && dv < 1e-12);
    // ‖(W†⊗1)(|↑⟩⊗φ)‖² = 3/4.
    assert!((iw.c - 2.0 / 3f64.sqrt()).abs() < 1e-12);
}

#[test]
fn transfer_spectrum_and_action() {
    let e1 = transfer_map(&identity(3));
    let ev = e1.eigenvalues();
    let want = [1.0, -1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0];
    for (z, w) in ev.iter().zip(want) {
        assert!((z - C64::new(w, 0.0)).norm() < 1e-12, "{ev:?}");
    }
    assert!(op_norm(&(e1.apply(&identity(2)) - identity(2))) < 1e-12);
    let sz = lrlab::quantum::spin::pauli_z() * C64::new(1.0, 0.0);
    assert!(op_norm(&(e1.apply(&sz) + &sz * C64::new(1.0 / 3.0, 0.0))) < 1e-12);
}

#[test]
fn transfer_spectrum_basis_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let u = random_unitary(&mut rng, 3);
        let iw = Intertwiners::from_w(Intertwiners::new().w * &u);
        let ev = iw.transfer_map(&identity(3)).eigenvalues();
        assert!((ev[0].re - 1.0).abs() < 1e-12);
        assert!(ev[1..].iter().all(|z| (z - C64::new(-1.0 / 3.0, 0.0)).norm() < 1e-12));
    }
}

#[test]
fn fcs_basics() {
    assert!((fcs_expectation(&vec![identity(3); 5]).unwrap() - 1.0).norm() < 1e-12);
    let s = spin_matrices(3);
    for a in &s {
        assert!(fcs_expectation(std::slice::from_ref(a)).unwrap().norm() < 1e-12);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ops: Vec<CMat> = (0..3).map(|_| random_hermitian(&mut rng, 3)).collect();
    let base = fcs_expectation(&ops).unwrap();
    let mut padded = vec![identity(3); 2];
    padded.extend(ops.iter().cloned());
    padded.extend(vec![identity(3); 3]);
    assert!((fcs_expectation(&padded).unwrap() - base).norm() < 1e-12);
    assert!(fcs_expectation(&[CMat::zeros(2, 2)]).is_err());
}

#[test]
fn correlations() {
    for a in 1..=3 {
        for b in 1..=3 {
            if a != b {
                assert!(correlation(a, b, 2).unwrap().abs() < 1e-12);
            }
        }
        for r in 1..8 {
            let ratio = correlation(a, a, r + 1).unwrap() / correlation(a, a, r).unwrap();
            assert!((ratio.abs() - 1.0 / 3.0).abs() < 1e-12);
        }
    }
    // (4/3)(−1/3)^r for the valence-bond state.
    assert!((correlation(3, 3, 1).unwrap() + 4.0 / 9.0).abs() < 1e-13);
    assert!(correlation(3, 3, 0).is_err());
    let csv = correlation_csv(3, 3, &[1, 2, 3]).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn reduced_density_spectrum_closed_form() {
    for l in 1..=15 {
        let rho = reduced_density(l).unwrap();
        let (vals, _) = eigh(&rho);
        let q = (-1.0f64 / 3.0).powi(l as i32);
        let mut want = vec![(1.0 + 3.0 * q) / 4.0, (1.0 - q) / 4.0, (1.0 - q) / 4.0, (1.0 - q) / 4.0];
        want.sort_by(f64::total_cmp);
        for (v, w) in vals.iter().zip(&want) {
            assert!((v - w).abs() < 1e-13, "l={l}: {vals:?} vs {want:?}");
        }
        assert!((rho.trace().re - 1.0).abs() < 1e-13 && vals[0] > -1e-14);
    }
    let far = reduced_density(40).unwrap();
    let (vals, _) = eigh(&far);
    assert!(vals.iter().all(|v| (v - 0.25).abs() < 3f64.powi(-39).max(1e-14)));
}

#[test]
fn entropy_tends_to_log4() {
    let s: Vec<f64> = (1..=12).map(|l| interval_entropy(l).unwrap()).collect();
    assert!((s[0] - 3f64.ln()).abs() < 1e-12);
    assert!(s.windows(2).all(|w| w[1] > w[0]));
    assert!((s[11] - LOG4).abs() <= 1e-4);
    assert!(s.iter().all(|&v| v <= LOG4 + 1e-12));
    assert!(entropy_csv(&[1, 2]).unwrap().starts_with("length,entropy"));
}

/// Ground cluster of the open chain, averaged uniformly.
fn open_ground(n: usize) -> CMat {
    let phi = models::aklt(n, false).unwrap();
    let layout = Layout::uniform((0..n).collect(), 3);
    let m = SpectralModel::assemble(&phi, &[], &layout, SolverMode::Sparse { pairs: 5 }).unwrap();
    assert_eq!(m.ground_degeneracy(), 4);
    m.ground_vectors()
}

fn ed_interval_density(g: &CMat, n: usize, start: usize, len: usize) -> CMat {
    let dm = 3usize.pow(len as u32);
    let dr = 3usize.pow((n - start - len) as u32);
    let dl = 3usize.pow(start as u32);
    let mut rho = CMat::zeros(dm, dm);
    for k in 0..g.ncols() {
        for l in 0..dl {
            let block = CMat::from_fn(dm, dr, |m, r| g[(l * dm * dr + m * dr + r, k)]);
            rho += &block * block.adjoint();
        }
    }
    rho * C64::new(1.0 / g.ncols() as f64, 0.0)
}

#[test]
fn ed_cross_checks_on_open_chain() {
    let n = 10;
    let g = open_ground(n);
    let layout = Layout::uniform((0..n).collect(), 3);
    let rho = ed_interval_density(&g, n, 3, 4);
    let (ed_vals, _) = eigh(&rho);
    let (tm_vals, _) = eigh(&reduced_density(4).unwrap());
    let nonzero: Vec<f64> = ed_vals.iter().rev().take(4).rev().copied().collect();
    for (a, b) in nonzero.iter().zip(&tm_vals) {
        assert!((a - b).abs() < 1e-4, "{nonzero:?} vs {tm_vals:?}");
    }
    assert!(ed_vals.iter().rev().skip(4).all(|v| v.abs() < 1e-10));
    let s3 = &spin_matrices(3)[2];
    let op = LocalOperator::pair(4, s3, 5, s3).unwrap();
    let mut ev = 0.0;
    for k in 0..4 {
        let v = g.column(k).into_owned();
        ev += v.dotc(&op.apply(&layout, &v).unwrap()).re / 4.0;
    }
    assert!((ev - correlation(3, 3, 1).unwrap()).abs() < 1e-4);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ops: Vec<CMat> = (0..6).map(|_| random_hermitian(&mut rng, 3)).collect();
    let mut prod = ops[0].clone();
    for o in &ops[1..] {
        prod = prod.kronecker(o);
    }
    let big = LocalOperator::new((2..8).collect(), vec![3; 6], prod).unwrap();
    let mut ed = C64::new(0.0, 0.0);
    for k in 0..4 {
        let v = g.column(k).into_owned();
        ed += v.dotc(&big.apply(&layout, &v).unwrap()) / C64::new(4.0, 0.0);
    }
    let tm = fcs_expectation(&ops).unwrap();
    assert!((ed - tm).norm() < 1e-4 * ops.iter().map(op_norm).product::<f64>(), "{ed} vs {tm}");
}

#[test]
fn open_kernels_are_four_dimensional() {
    for n in 3..=8 {
        let r = aklt_gap(n, false).unwrap();
        assert_eq!(r.degeneracy, 4, "n={n}");
        assert!(r.e0.abs() < 1e-8 && r.gap > 0.1);
    }
}

#[test]
fn periodic_gaps() {
    let mut gaps = Vec::new();
    for n in [6, 8, 10] {
        let r = aklt_gap(n, true).unwrap();
        assert_eq!(r.degeneracy, 1);
        assert!(r.e0.abs() < 1e-8);
        gaps.push(r.gap);
    }
    assert!((gaps[2] - 0.4097).abs() < 0.1, "{gaps:?}");
}

#[test]
fn factorization_decays_like_one_third() {
    let rep = factorization_sweep(&aklt_bond_matrix(), 3, 10, 5, &[1, 2, 3]).unwrap();
    assert!(rep.residuals.windows(2).all(|w| w[1] < w[0]), "{rep:?}");
    let target = -(3f64.ln());
    assert!((rep.log_slope - target).abs() <= 0.15 * target.abs(), "{rep:?}");
}

#[test]
fn heisenberg_control_does_not_factorize() {
    let aklt = factorization_sweep(&aklt_bond_matrix(), 3, 8, 4, &[1, 2]).unwrap();
    let heis = factorization_sweep(&heisenberg_bond(3), 3, 8, 4, &[1, 2]).unwrap();
    assert!(heis.residuals[1] > 10.0 * aklt.residuals[1], "{heis:?} {aklt:?}");
}

#[test]
fn invalid_inputs() {
    assert!(factorization_residual(10, 1, 1).is_err());
    assert!(factorization_residual(10, 8, 2).is_err());
    assert!(reduced_density(0).is_err());
    assert!(aklt_gap(13, true).is_err());
}

#[test]
fn golden_document() {
    let g = golden_json().unwrap();
    let v: serde_json::Value = serde_json::from_str(&g).unwrap();
    assert_eq!(v["transfer_spectrum"].as_array().unwrap().len(), 4);
    assert_eq!(v["bond_projector"].as_array().unwrap().len(), 81);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn positive_observables_have_nonnegative_expectation(seed in 0u64..1000, n in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ops: Vec<CMat> = (0..n).map(|_| { let m = random_hermitian(&mut rng, 3); &m * &m }).collect();
        prop_assert!(fcs_expectation(&ops).unwrap().re >= -1e-14);
        prop_assert!(fcs_expectation(&ops).unwrap().im.abs() < 1e-12);
    }
}
