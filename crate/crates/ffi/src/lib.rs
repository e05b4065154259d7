//! C ABI for lrlab.
//!
//! Every function returns an `LrlabStatus`. Results are written through out
//! pointers. On failure a message is stored per thread and can be copied out
//! with `lrlab_last_error`. Handles are opaque and must be released with the
//! matching `*_free` function.

use lrlab::harmonic::{HarmonicSpec, SiteFunction};
use lrlab::lattice::{convolution_constant_exact, DecayFunction, SiteSet};
use lrlab::lrbounds::{lr_bound, Interaction};
use lrlab::quantum::spin::pauli_z;
use lrlab::quantum::{Layout, LocalOperator, SolverMode, SpectralModel};
use lrlab::scenarios::{Config, Outcome, Status};
use lrlab::{models, LabError};
use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LrlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Resource = 3,
    Unsupported = 4,
    Config = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LrlabSpinModel {
    Heisenberg = 0,
    Ising = 1,
    Tfim = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LrlabOutcomeStatus {
    Pass = 0,
    Warn = 1,
    Fail = 2,
}

/// Parsed and validated scenario configuration.
pub struct LrlabConfig {
    inner: Config,
}

/// Result of one scenario run.
pub struct LrlabOutcome {
    inner: Outcome,
}

/// Diagonalized open spin-1/2 chain.
pub struct LrlabChain {
    model: SpectralModel,
    phi: Interaction,
    sites: SiteSet,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &LabError) -> LrlabStatus {
    match e {
        LabError::Domain(_) => LrlabStatus::InvalidArgument,
        LabError::Resource(_) => LrlabStatus::Resource,
        LabError::Unsupported(_) => LrlabStatus::Unsupported,
        LabError::Config(_) => LrlabStatus::Config,
        LabError::Io(_) | LabError::Json(_) => LrlabStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (LrlabStatus, String)>) -> LrlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            LrlabStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            LrlabStatus::Panic
        }
    }
}

fn lab<T>(r: lrlab::Result<T>) -> Result<T, (LrlabStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null() -> (LrlabStatus, String) {
    (LrlabStatus::NullPointer, "null pointer argument".into())
}

fn invalid(msg: &str) -> (LrlabStatus, String) {
    (LrlabStatus::InvalidArgument, msg.into())
}

unsafe fn out_ref<'a, T>(p: *mut T) -> Result<&'a mut T, (LrlabStatus, String)> {
    p.as_mut().ok_or_else(null)
}

unsafe fn in_ref<'a, T>(p: *const T) -> Result<&'a T, (LrlabStatus, String)> {
    p.as_ref().ok_or_else(null)
}

unsafe fn in_str<'a>(p: *const c_char) -> Result<&'a str, (LrlabStatus, String)> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid("string is not valid UTF-8"))
}

/// Copies `s` with a trailing NUL into `buf`. `needed` receives the full
/// size including the NUL; a short buffer yields BUFFER_TOO_SMALL.
unsafe fn copy_out(s: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> Result<(), (LrlabStatus, String)> {
    let n = s.len() + 1;
    if let Some(nd) = needed.as_mut() {
        *nd = n;
    }
    if buf.is_null() || len < n {
        return Err((LrlabStatus::BufferTooSmall, format!("buffer of {len} bytes, {n} needed")));
    }
    std::ptr::copy_nonoverlapping(s.as_ptr(), buf as *mut u8, s.len());
    *buf.add(s.len()) = 0;
    Ok(())
}

/// Copies the last error message of this thread.
///
/// # Safety
/// `buf` must point to `len` writable bytes or be null; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn lrlab_last_error(buf: *mut c_char, len: usize, needed: *mut usize) -> LrlabStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    match copy_out(&msg, buf, len, needed) {
        Ok(()) => LrlabStatus::Ok,
        Err((s, _)) => s,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lrlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Parses and validates a TOML configuration.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrlab_config_parse(toml: *const c_char, out: *mut *mut LrlabConfig) -> LrlabStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = std::ptr::null_mut();
        let cfg = lab(Config::parse(in_str(toml)?))?;
        *out = Box::into_raw(Box::new(LrlabConfig { inner: cfg }));
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from `lrlab_config_parse` or be null.
#[no_mangle]
pub unsafe extern "C" fn lrlab_config_free(cfg: *mut LrlabConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lrlab_config_scenario_count(cfg: *const LrlabConfig, out: *mut usize) -> LrlabStatus {
    guard(|| {
        *out_ref(out)? = in_ref(cfg)?.inner.scenario.len();
        Ok(())
    })
}

/// SHA-256 of the canonical configuration, as 64 hex digits.
///
/// # Safety
/// `buf` must point to `len` writable bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn lrlab_config_hash(cfg: *const LrlabConfig, buf: *mut c_char, len: usize, needed: *mut usize) -> LrlabStatus {
    guard(|| copy_out(&in_ref(cfg)?.inner.hash(), buf, len, needed))
}

/// Runs scenario `index` (0-based) of `cfg`.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrlab_run_scenario(cfg: *const LrlabConfig, index: usize, out: *mut *mut LrlabOutcome) -> LrlabStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = std::ptr::null_mut();
        let cfg = &in_ref(cfg)?.inner;
        let sc = cfg.scenario.get(index).ok_or_else(|| invalid("scenario index out of range"))?;
        let outcome = lab(sc.run(cfg.seed, &cfg.hash()))?;
        *out = Box::into_raw(Box::new(LrlabOutcome { inner: outcome }));
        Ok(())
    })
}

/// # Safety
/// `outcome` must come from `lrlab_run_scenario` or be null.
#[no_mangle]
pub unsafe extern "C" fn lrlab_outcome_free(outcome: *mut LrlabOutcome) {
    if !outcome.is_null() {
        drop(Box::from_raw(outcome));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lrlab_outcome_status(outcome: *const LrlabOutcome, out: *mut LrlabOutcomeStatus) -> LrlabStatus {
    guard(|| {
        *out_ref(out)? = match in_ref(outcome)?.inner.status {
            Status::Pass => LrlabOutcomeStatus::Pass,
            Status::Warn => LrlabOutcomeStatus::Warn,
            Status::Fail => LrlabOutcomeStatus::Fail,
        };
        Ok(())
    })
}

/// Pretty-printed JSON summary of the outcome.
///
/// # Safety
/// `buf` must point to `len` writable bytes or be null; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn lrlab_outcome_summary(outcome: *const LrlabOutcome, buf: *mut c_char, len: usize, needed: *mut usize) -> LrlabStatus {
    guard(|| copy_out(&in_ref(outcome)?.inner.summary_json(), buf, len, needed))
}

/// Builds and diagonalizes an open chain of `n` spins (2 ≤ n ≤ 12).
/// `kind` is an `LrlabSpinModel` value.
/// Ising and Heisenberg use coupling `j`; TFIM adds the field `h`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrlab_chain_new(kind: u32, n: usize, j: f64, h: f64, out: *mut *mut LrlabChain) -> LrlabStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = std::ptr::null_mut();
        if !(2..=12).contains(&n) {
            return Err(invalid("chain length must lie in 2..=12"));
        }
        if !j.is_finite() || !h.is_finite() {
            return Err(invalid("couplings must be finite"));
        }
        let (bonds, fields) = match kind {
            k if k == LrlabSpinModel::Heisenberg as u32 => (lab(models::heisenberg(n, j, false))?, Vec::new()),
            k if k == LrlabSpinModel::Ising as u32 => (lab(models::ising_bonds(n, j))?, Vec::new()),
            k if k == LrlabSpinModel::Tfim as u32 => lab(models::tfim(n, j, h, false))?,
            _ => return Err(invalid("unknown spin model")),
        };
        let layout = Layout::uniform((0..n).collect(), 2);
        let model = lab(SpectralModel::assemble(&bonds, &fields, &layout, SolverMode::Dense))?;
        let mut phi = bonds;
        for f in fields {
            lab(phi.add(f))?;
        }
        *out = Box::into_raw(Box::new(LrlabChain { model, phi, sites: SiteSet::path(n) }));
        Ok(())
    })
}

/// # Safety
/// `chain` must come from `lrlab_chain_new` or be null.
#[no_mangle]
pub unsafe extern "C" fn lrlab_chain_free(chain: *mut LrlabChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lrlab_chain_ground_energy(chain: *const LrlabChain, out: *mut f64) -> LrlabStatus {
    guard(|| {
        *out_ref(out)? = in_ref(chain)?.model.ground_energy();
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lrlab_chain_gap(chain: *const LrlabChain, out: *mut f64) -> LrlabStatus {
    guard(|| {
        *out_ref(out)? = in_ref(chain)?.model.gap();
        Ok(())
    })
}

fn site_pair(c: &LrlabChain, a: usize, b: usize) -> Result<(LocalOperator, LocalOperator), (LrlabStatus, String)> {
    let n = c.sites.len();
    if a >= n || b >= n || a == b {
        return Err(invalid("sites must be distinct and inside the chain"));
    }
    Ok((LocalOperator::single(a, pauli_z()), LocalOperator::single(b, pauli_z())))
}

/// ‖[τ_t(σ³_a), σ³_b]‖.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lrlab_chain_commutator_norm(chain: *const LrlabChain, a: usize, b: usize, t: f64, out: *mut f64) -> LrlabStatus {
    guard(|| {
        let out = out_ref(out)?;
        let c = in_ref(chain)?;
        let (oa, ob) = site_pair(c, a, b)?;
        *out = lab(c.model.commutator_norm(&oa, &ob, t))?;
        Ok(())
    })
}

/// Lieb-Robinson bound for the same pair with F(r) = (1+r)^(−2).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lrlab_chain_lr_bound(chain: *const LrlabChain, a: usize, b: usize, t: f64, out: *mut f64) -> LrlabStatus {
    guard(|| {
        let out = out_ref(out)?;
        let c = in_ref(chain)?;
        site_pair(c, a, b)?;
        let f = DecayFunction::power(1);
        let conv = lab(convolution_constant_exact(&c.sites, &f))?;
        *out = lab(lr_bound(&c.phi, &f, conv, &c.sites, &[a], &[b], 1.0, 1.0, t))?;
        Ok(())
    })
}

/// ω(S^a_0 S^b_r) in the AKLT ground state, a, b ∈ {1, 2, 3}.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrlab_aklt_correlation(a: usize, b: usize, r: usize, out: *mut f64) -> LrlabStatus {
    guard(|| {
        *out_ref(out)? = lab(lrlab::aklt::correlation(a, b, r))?;
        Ok(())
    })
}

/// Entanglement entropy of an AKLT interval of `len` sites.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrlab_aklt_entropy(len: usize, out: *mut f64) -> LrlabStatus {
    guard(|| {
        *out_ref(out)? = lab(lrlab::aklt::interval_entropy(len))?;
        Ok(())
    })
}

/// ‖[W(τ_t δ_x), W(δ_y)]‖ for the harmonic chain on the torus (−L, L].
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrlab_harmonic_commutator(
    l: i64,
    omega: f64,
    lambda: f64,
    x: i64,
    y: i64,
    t: f64,
    out: *mut f64,
) -> LrlabStatus {
    guard(|| {
        let out = out_ref(out)?;
        let spec = lab(HarmonicSpec::finite(1, l, omega, vec![lambda]))?;
        let (f, g) = (SiteFunction::delta(vec![x]), SiteFunction::delta(vec![y]));
        *out = lab(lrlab::harmonic::weyl_commutator_norm(&spec, &f, &g, t))?;
        Ok(())
    })
}
