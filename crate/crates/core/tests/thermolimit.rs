use lrlab::harmonic::SiteFunction;
use lrlab::linalg::{op_norm, C64};
use lrlab::models::tfim;
use lrlab::quantum::spin::{pauli_x, pauli_z};
use lrlab::quantum::{Layout, LocalOperator, SolverMode, SpectralModel};
use lrlab::thermolimit::*;

fn center_z(seq: &VolumeSequence) -> LocalOperator {
    LocalOperator::single(seq.center(), pauli_z())
}

/// Direct ‖τ_t^{Λm}(A) − τ_t^{Λn}(A) ⊗ 1‖ from full evolutions.
fn direct_delta(sizes: &[usize], t: f64) -> f64 {
    let seq = VolumeSequence::centered_chain(sizes, 1.0, 1.0).unwrap();
    let a = center_z(&seq);
    let evolve = |vol: &[usize]| {
        let (phi, onsite) = tfim(sizes[1], 1.0, 1.0, false).unwrap();
        let phi = phi.restrict(vol);
        let onsite: Vec<_> = onsite.into_iter().filter(|h| vol.contains(&h.support()[0])).collect();
        let layout = Layout::new(vol.to_vec(), vec![2; vol.len()]).unwrap();
        let m = SpectralModel::assemble(&phi, &onsite, &layout, SolverMode::Dense).unwrap();
        m.heisenberg_evolve(&a, t).unwrap()
    };
    let vols = seq.volumes();
    let big = evolve(&vols[1]);
    let small = evolve(&vols[0]).embed_layout(big.layout()).unwrap();
    op_norm(&(big.matrix() - small.matrix()))
}

#[test]
fn batched_delta_matches_direct_evolution() {
    let seq = VolumeSequence::centered_chain(&[3, 5], 1.0, 1.0).unwrap();
    let a = center_z(&seq);
    let mut grid = TimeGrid::new(0.8, 2);
    grid.max_refinements = 0;
    let table = volume_convergence(&seq, &a, &grid).unwrap();
    let want = direct_delta(&[3, 5], 0.8);
    assert!((table.rows[0].delta - want).abs() < 1e-9, "{} vs {want}", table.rows[0].delta);
}

#[test]
fn nested_chains_converge_under_tail() {
    let seq = VolumeSequence::centered_chain(&[3, 5, 7, 9], 1.0, 1.0).unwrap();
    let a = center_z(&seq);
    let table = volume_convergence(&seq, &a, &TimeGrid::new(1.0, 16)).unwrap();
    assert_eq!(table.rows.len(), 3);
    assert!(table.strictly_decreasing);
    for r in &table.rows {
        assert!(r.delta > 0.0 && r.delta <= r.tail_bound, "{r:?}");
    }
    let csv = table.to_csv();
    assert!(csv.starts_with("n,m,delta,tail_bound,pass"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn trivial_observable_and_time_give_zero() {
    let seq = VolumeSequence::centered_chain(&[3, 5, 7], 1.0, 1.0).unwrap();
    let id = LocalOperator::single(seq.center(), lrlab::linalg::identity(2));
    let table = volume_convergence(&seq, &id, &TimeGrid::new(1.0, 8)).unwrap();
    assert!(table.rows.iter().all(|r| r.delta < 1e-10));
    let mut grid = TimeGrid::new(0.0, 2);
    grid.max_refinements = 0;
    let table = volume_convergence(&seq, &center_z(&seq), &grid).unwrap();
    assert!(table.rows.iter().all(|r| r.delta < 1e-10 && r.tail_bound == 0.0));
}

#[test]
fn pure_ising_center_is_conserved() {
    let seq = VolumeSequence::centered_chain(&[3, 5, 7], 1.0, 0.0).unwrap();
    let table = volume_convergence(&seq, &center_z(&seq), &TimeGrid::new(2.0, 8)).unwrap();
    assert!(table.rows.iter().all(|r| r.delta < 1e-10));
}

#[test]
fn invalid_sequences_rejected() {
    assert!(VolumeSequence::centered_chain(&[3, 4], 1.0, 1.0).is_err());
    assert!(VolumeSequence::centered_chain(&[], 1.0, 1.0).is_err());
    assert!(VolumeSequence::centered_chain(&[5, 5], 1.0, 1.0).is_err());
    let seq = VolumeSequence::centered_chain(&[3, 5], 1.0, 1.0).unwrap();
    let off = LocalOperator::single(0, pauli_x());
    assert!(volume_convergence(&seq, &off, &TimeGrid::new(1.0, 4)).is_err());
}

#[test]
fn tail_bound_vanishes_at_zero_and_grows() {
    assert_eq!(tail_bound(1.0, 4.0, 3.0, 0.0, 1.0), 0.0);
    let a = tail_bound(1.0, 4.0, 3.0, 0.5, 1.0);
    let b = tail_bound(1.0, 4.0, 3.0, 1.0, 1.0);
    assert!(a > 0.0 && b > a);
    let small = tail_bound(1.0, 1.0, 1.0, 1e-8, 1.0);
    assert!((small - 1e-16 * 2.0).abs() < 1e-20);
}

#[test]
fn harmonic_tori_approach_infinite_volume() {
    let f = SiteFunction::delta(vec![0]);
    let rows = harmonic_volume_convergence(1, 1.0, &[1.0], &f, 1.0, &[8, 16, 32, 64], 1e-11).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].difference <= w[0].difference + 1e-12, "{rows:?}");
    }
    assert!(rows.last().unwrap().difference <= 1e-6);
    assert!(rows.iter().all(|r| !r.wraparound));
}

#[test]
fn harmonic_wraparound_flagged_at_long_times() {
    let f = SiteFunction::delta(vec![0]);
    let rows = harmonic_volume_convergence(1, 1.0, &[1.0], &f, 10.0, &[8, 64], 1e-10).unwrap();
    assert!(rows[0].wraparound && rows[0].wrap_estimate > WRAP_TOL);
    assert!(!rows[1].wraparound);
}

#[test]
fn harmonic_zero_time_is_exact() {
    let f = SiteFunction::from_pairs(vec![(vec![0], C64::new(1.0, 0.5)), (vec![1], C64::new(-0.3, 0.0))]);
    let rows = harmonic_volume_convergence(1, 1.0, &[1.0], &f, 0.0, &[8, 16], 1e-11).unwrap();
    assert!(rows.iter().all(|r| r.difference < 1e-14));
}

fn dyson_setup() -> (SpectralModel, LocalOperator) {
    let (phi, onsite) = tfim(4, 1.0, 0.7, false).unwrap();
    let layout = Layout::new(vec![0, 1, 2, 3], vec![2; 4]).unwrap();
    let h0 = SpectralModel::assemble(&phi, &onsite, &layout, SolverMode::Dense).unwrap();
    (h0, LocalOperator::single(1, pauli_z()))
}

#[test]
fn dyson_remainders_below_bound() {
    let (h0, a) = dyson_setup();
    let v = LocalOperator::single(2, pauli_x() * C64::new(0.3, 0.0));
    let rep = dyson_truncation(&h0, &v, &a, 0.5, 5).unwrap();
    assert_eq!(rep.orders.len(), 6);
    assert!(rep.pass());
    for w in rep.orders.windows(2) {
        assert!(w[1].remainder < w[0].remainder);
    }
    assert!(rep.orders[5].remainder < 1e-6);
}

#[test]
fn dyson_first_order_matches_finite_difference() {
    let (h0, a) = dyson_setup();
    let t = 0.5;
    let v = LocalOperator::single(2, pauli_x());
    let rep = |s: f64| {
        let h = h0.dense_hamiltonian().unwrap();
        let full = h.with_matrix(h.matrix() + v.embed_layout(h.layout()).unwrap().matrix() * C64::new(s, 0.0)).unwrap();
        SpectralModel::from_dense(full).unwrap().heisenberg_evolve(&a, t).unwrap().into_matrix()
    };
    let eps = 1e-4;
    let fd_norm = op_norm(&((rep(eps) - rep(-eps)) / C64::new(2.0 * eps, 0.0)));
    let scaled = LocalOperator::single(2, pauli_x() * C64::new(eps, 0.0));
    let r = dyson_truncation(&h0, &scaled, &a, t, 1).unwrap();
    assert!((r.orders[1].term_norm / eps - fd_norm).abs() < 1e-6 * fd_norm.max(1.0));
}

#[test]
fn dyson_zero_and_commuting_perturbations() {
    let (h0, a) = dyson_setup();
    let zero = LocalOperator::single(2, pauli_x() * C64::new(0.0, 0.0));
    let r = dyson_truncation(&h0, &zero, &a, 0.5, 3).unwrap();
    assert!(r.orders.iter().all(|o| o.remainder < 1e-12));
    let h = h0.dense_hamiltonian().unwrap().clone();
    let commuting = h.scaled(C64::new(0.1, 0.0));
    let r = dyson_truncation(&h0, &commuting, &a, 0.5, 4).unwrap();
    assert!(r.pass());
    assert!(r.orders[4].remainder < 1e-5);
}
