//! One PASS/FAIL line per acceptance criterion, with pinned tolerances.
//! Run with `--nocapture` to see the table.

use lrlab::scenarios::{Config, Outcome, Scenario, Status};
use serde_json::Value;
use std::time::Instant;

const LR_TOL: f64 = 1e-8;
const ORACLE_TOL: f64 = 1e-8;
const SYMPLECTIC_TOL: f64 = 1e-9;
const BOGOLIUBOV_TOL: f64 = 1e-10;
const KERNEL_TOL: f64 = 1e-6;
const AKLT_SPECTRUM_TOL: f64 = 1e-12;
const AKLT_GAP_TOL: f64 = 0.1;
const AKLT_ENTROPY_TOL: f64 = 1e-4;
const AKLT_SLOPE_TOL: f64 = 0.15;
const PARTITION_TOL: f64 = 1e-12;
const PB_NORM_TOL: f64 = 1e-8;

struct Run {
    outcome: Outcome,
    seconds: f64,
}

fn run(kind: &str, seed: u64) -> Run {
    let sc = Scenario::default_for(kind).unwrap();
    let cfg = Config { seed, out: None, scenario: vec![sc.clone()] };
    let start = Instant::now();
    let outcome = sc.run(seed, &cfg.hash()).unwrap();
    Run { outcome, seconds: start.elapsed().as_secs_f64() }
}

fn checks(o: &Outcome) -> &Vec<Value> {
    o.summary["checks"].as_array().unwrap()
}

fn check<'a>(o: &'a Outcome, prefix: &str) -> &'a Value {
    checks(o).iter().find(|c| c["name"].as_str().unwrap().starts_with(prefix)).unwrap_or_else(|| panic!("no check '{prefix}'"))
}

fn value(o: &Outcome, prefix: &str) -> f64 {
    check(o, prefix)["value"].as_f64().unwrap()
}

fn flag(o: &Outcome, prefix: &str) -> bool {
    check(o, prefix)["pass"].as_bool().unwrap()
}

fn all_matching(o: &Outcome, contains: &str) -> bool {
    let sel: Vec<&Value> = checks(o).iter().filter(|c| c["name"].as_str().unwrap().contains(contains)).collect();
    !sel.is_empty() && sel.iter().all(|c| c["pass"].as_bool().unwrap())
}

struct Ledger {
    lines: Vec<(bool, String)>,
}

impl Ledger {
    fn record(&mut self, id: usize, ok: bool, text: String) {
        let line = format!("{} {id}. {text}", if ok { "PASS" } else { "FAIL" });
        println!("{line}");
        self.lines.push((ok, line));
    }
}

#[test]
fn acceptance() {
    let seed = 0;
    let mut ledger = Ledger { lines: Vec::new() };
    let kinds = ["lr-spin", "lr-harmonic", "thermolimit", "dyson", "clustering", "clustering-harmonic", "aklt", "gapped-approx"];
    let runs: Vec<(&str, Run)> = kinds.iter().map(|&k| (k, run(k, seed))).collect();
    let get = |k: &str| &runs.iter().find(|(n, _)| *n == k).unwrap().1;

    let r = get("lr-spin");
    let o = &r.outcome;
    let ex = value(o, "commutator minus bound");
    let ex_mu = value(o, "commutator minus exponential bound");
    let rows = o.summary["results"]["rows"].as_u64().unwrap();
    ledger.record(
        1,
        ex <= LR_TOL && ex_mu <= LR_TOL && rows == 41 && r.seconds < 60.0,
        format!("spin LR sweep: max excess {ex:.2e} / {ex_mu:.2e} (exp form) <= {LR_TOL:e} over {rows} points, {:.1} s < 60 s", r.seconds),
    );

    let series_start = Instant::now();
    let s = value(o, "series coefficient minus bound");
    let points = o.summary["results"]["series_points"].as_u64().unwrap();
    let series_ok = {
        let phi = lrlab::models::ising_bonds(5, 1.0).unwrap();
        let f = lrlab::lattice::DecayFunction::power(1);
        let path = lrlab::lattice::SiteSet::path(5);
        let mut ok = true;
        for x in 0..5 {
            for y in (0..5).filter(|&y| y != x) {
                for n in 1..=3 {
                    let a = lrlab::lrbounds::series_coefficient(&phi, &[x], &[y], n).unwrap();
                    ok &= a <= lrlab::lrbounds::series_coefficient_bound(&phi, &f, &path, &[x], &[y], n).unwrap();
                }
            }
        }
        ok
    };
    let secs = series_start.elapsed().as_secs_f64();
    ledger.record(
        2,
        s <= 0.0 && series_ok && points == 60 && secs < 5.0,
        format!("series coefficients: max a_n - bound {s:.2e} <= 0 over {points} (x, y, n) triples, {secs:.2} s < 5 s"),
    );

    let r = get("lr-harmonic");
    let o = &r.outcome;
    let (orc, sym, bog) = (value(o, "evolution vs symplectic"), value(o, "symplectic form"), value(o, "Bogoliubov"));
    let weyl = value(o, "Weyl commutator minus bound");
    let decay = flag(o, "finite kernel decay");
    ledger.record(
        3,
        orc <= ORACLE_TOL && sym <= SYMPLECTIC_TOL && bog <= BOGOLIUBOV_TOL && weyl <= 0.0 && decay && r.seconds < 60.0,
        format!(
            "harmonic exactness: oracle {orc:.1e} <= {ORACLE_TOL:e}, symplectic {sym:.1e} <= {SYMPLECTIC_TOL:e}, Bogoliubov {bog:.1e} <= {BOGOLIUBOV_TOL:e}, Weyl excess {weyl:.2e} <= 0, kernel bounds {decay}, {:.1} s < 60 s",
            r.seconds
        ),
    );
    let kd = value(o, "finite vs infinite kernels");
    let inf_decay = flag(o, "infinite kernel decay");
    ledger.record(4, kd <= KERNEL_TOL && inf_decay, format!("infinite-volume kernels: max difference {kd:.2e} <= {KERNEL_TOL:e}, pointwise bounds {inf_decay}"));

    let o = &get("thermolimit").outcome;
    let tails = all_matching(o, "minus tail bound");
    let dec = flag(o, "differences strictly decreasing");
    let deltas: Vec<String> =
        o.summary["results"]["spin"]["rows"].as_array().unwrap().iter().map(|r| format!("{:.2e}", r["delta"].as_f64().unwrap())).collect();
    let d = &get("dyson").outcome;
    let dyson = all_matching(d, "remainder minus bound");
    ledger.record(
        5,
        tails && dec && dyson,
        format!("thermodynamic limit: sup_t differences [{}] strictly decreasing {dec}, under tail bound {tails}; Dyson remainders n <= 5 under bound {dyson}", deltas.join(", ")),
    );

    let c = &get("clustering").outcome;
    let res = &c.summary["results"];
    let rate_ok = res["rate_pass"].as_bool().unwrap() && !res["trivial"].as_bool().unwrap();
    let mu = res["theorem_mu"].as_f64().unwrap();
    let ch = &get("clustering-harmonic").outcome;
    let rates: Vec<f64> =
        ch.summary["results"]["runs"].as_array().unwrap().iter().map(|r| r["report"]["series"]["fit"]["rate"].as_f64().unwrap_or(f64::NAN)).collect();
    let h_ok = rates.len() == 2 && rates[0] > 0.0 && rates[1] > rates[0];
    ledger.record(
        6,
        rate_ok && h_ok,
        format!("clustering: TFIM fitted rate >= certified mu = {mu:.4} {rate_ok}; harmonic rates omega=2: {:.3}, omega=8: {:.3}, increasing {h_ok}", rates[0], rates[1]),
    );

    let r = get("aklt");
    let a = &r.outcome;
    let spec_err = value(a, "transfer spectrum error");
    let ratio_err = value(a, "correlation ratio error");
    let kernels = all_matching(a, "4-dimensional kernel");
    let gap_dist = value(a, "periodic n = 10 gap");
    let ent = value(a, "entropy distance");
    let ed = value(a, "ED vs transfer-matrix");
    let slope = value(a, "factorization slope");
    ledger.record(
        7,
        spec_err <= AKLT_SPECTRUM_TOL
            && ratio_err <= AKLT_SPECTRUM_TOL
            && kernels
            && gap_dist <= AKLT_GAP_TOL
            && ent <= AKLT_ENTROPY_TOL
            && ed <= AKLT_ENTROPY_TOL
            && slope <= AKLT_SLOPE_TOL
            && r.seconds < 600.0,
        format!(
            "AKLT: E_1 spectrum {spec_err:.1e}, ratio {ratio_err:.1e} <= {AKLT_SPECTRUM_TOL:e}, kernel dim 4 for n = 3..8 {kernels}, |gap(10) - 0.4097| = {gap_dist:.3} <= {AKLT_GAP_TOL}, |S(12) - ln 4| = {ent:.1e} and ED {ed:.1e} <= {AKLT_ENTROPY_TOL:e}, slope error {:.1}% <= {}%, {:.0} s",
            100.0 * slope,
            100.0 * AKLT_SLOPE_TOL,
            r.seconds
        ),
    );

    let r = get("gapped-approx");
    let g = &r.outcome;
    let part = checks(g).iter().filter(|c| c["name"].as_str().unwrap().contains("partition")).map(|c| c["value"].as_f64().unwrap()).fold(0.0, f64::max);
    let gs = flag(g, "‖K_X ψ₀‖ decreasing");
    let step2 = all_matching(g, "step-2");
    let pa = all_matching(g, "‖P_α − P₀‖");
    let fin = flag(g, "final residual");
    let pb = checks(g).iter().filter(|c| c["name"].as_str().unwrap().ends_with("‖P_B‖")).map(|c| c["value"].as_f64().unwrap()).fold(0.0, f64::max);
    ledger.record(
        8,
        part <= PARTITION_TOL && gs && step2 && pa && fin && pb <= 1.0 + PB_NORM_TOL && r.seconds < 600.0,
        format!(
            "gapped approximation: partition {part:.1e} <= {PARTITION_TOL:e}, K residuals decreasing {gs}, step-2 {step2}, P_alpha {pa}, final residual decreasing {fin}, max ||P_B|| = {pb:.10} <= 1 + {PB_NORM_TOL:e}, {:.0} s",
            r.seconds
        ),
    );

    let mut all_kinds: Vec<&str> = kinds.to_vec();
    all_kinds.insert(2, "anharmonic-bounds");
    let mut identical = 0;
    let mut differing = Vec::new();
    for k in &all_kinds {
        let first = match runs.iter().find(|(n, _)| n == k) {
            Some((_, r)) => r.outcome.summary_json(),
            None => run(k, seed).outcome.summary_json(),
        };
        let second = run(k, seed).outcome;
        assert_ne!(second.status, Status::Fail, "{k}");
        if first.as_bytes() == second.summary_json().as_bytes() {
            identical += 1;
        } else {
            differing.push(*k);
        }
    }
    ledger.record(9, differing.is_empty(), format!("determinism: {identical}/{} scenario summaries byte-identical on rerun {differing:?}", all_kinds.len()));

    for (_, r) in &runs {
        assert_ne!(r.outcome.status, Status::Fail, "{}", r.outcome.kind);
    }
    let failed: Vec<&String> = ledger.lines.iter().filter(|(ok, _)| !ok).map(|(_, l)| l).collect();
    assert!(failed.is_empty(), "{failed:#?}");
}
