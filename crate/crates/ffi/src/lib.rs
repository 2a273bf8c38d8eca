//! C interface to the blindmatch QAP solvers.
//!
//! Every fallible function returns a [`BmStatus`]; `BM_STATUS_OK` is zero and
//! the other values mirror the library's error codes. After a failure,
//! [`bm_last_error_message`] describes it. Objects cross the boundary as
//! opaque pointers that the caller releases with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use blindmatch::lap::solve_lap_jv;
use blindmatch::qap::{
    solve_enumeration, solve_factorized_hahn_grant, FactorizedQap, HahnGrantConfig, LapBackend, QapSolveReport,
};
use blindmatch::Error;
use ndarray::{Array2, ArrayView2};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BmStatus {
    Ok = 0,
    MissingFile = 1,
    Io = 2,
    Manifest = 3,
    ShapeMismatch = 4,
    Checksum = 5,
    NonFinite = 6,
    ZeroRow = 7,
    Unlabeled = 8,
    InvalidLabels = 9,
    OutOfRange = 10,
    SingularKernel = 11,
    KindMismatch = 12,
    Asymmetric = 13,
    TooLarge = 14,
    Config = 15,
    InvalidPermutation = 16,
    Json = 17,
    NullPointer = 64,
    Panic = 65,
}

impl From<&Error> for BmStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::MissingFile(_) => Self::MissingFile,
            Error::Io { .. } => Self::Io,
            Error::Manifest { .. } => Self::Manifest,
            Error::ShapeMismatch(_) => Self::ShapeMismatch,
            Error::Checksum { .. } => Self::Checksum,
            Error::NonFinite { .. } => Self::NonFinite,
            Error::ZeroRow { .. } => Self::ZeroRow,
            Error::Unlabeled => Self::Unlabeled,
            Error::InvalidLabels(_) => Self::InvalidLabels,
            Error::OutOfRange(_) => Self::OutOfRange,
            Error::SingularKernel { .. } => Self::SingularKernel,
            Error::KindMismatch { .. } => Self::KindMismatch,
            Error::Asymmetric { .. } => Self::Asymmetric,
            Error::TooLarge(_) => Self::TooLarge,
            Error::Config(_) => Self::Config,
            Error::InvalidPermutation(_) => Self::InvalidPermutation,
            Error::Json(_) => Self::Json,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BmLapBackend {
    Jv = 0,
    Auction = 1,
}

/// Mirrors the solver configuration. `time_limit <= 0` means no limit.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BmHahnGrantConfig {
    pub lap: BmLapBackend,
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub tol_gap: f64,
    pub auction_eps0: f64,
    pub auction_decay: f64,
    pub auction_eps_floor: f64,
    pub max_iters: u64,
    pub time_limit: f64,
    pub primal_heuristic_seeds: u64,
    pub use_lap_primals: bool,
    pub seed: u64,
}

impl From<&HahnGrantConfig> for BmHahnGrantConfig {
    fn from(c: &HahnGrantConfig) -> Self {
        Self {
            lap: match c.lap {
                LapBackend::Jv => BmLapBackend::Jv,
                LapBackend::Auction => BmLapBackend::Auction,
            },
            tol_abs: c.tol_abs,
            tol_rel: c.tol_rel,
            tol_gap: c.tol_gap,
            auction_eps0: c.auction_eps0,
            auction_decay: c.auction_decay,
            auction_eps_floor: c.auction_eps_floor,
            max_iters: c.max_iters as u64,
            time_limit: c.time_limit.unwrap_or(0.0),
            primal_heuristic_seeds: c.primal_heuristic_seeds as u64,
            use_lap_primals: c.use_lap_primals,
            seed: c.seed,
        }
    }
}

impl From<&BmHahnGrantConfig> for HahnGrantConfig {
    fn from(c: &BmHahnGrantConfig) -> Self {
        Self {
            lap: match c.lap {
                BmLapBackend::Jv => LapBackend::Jv,
                BmLapBackend::Auction => LapBackend::Auction,
            },
            tol_abs: c.tol_abs,
            tol_rel: c.tol_rel,
            tol_gap: c.tol_gap,
            auction_eps0: c.auction_eps0,
            auction_decay: c.auction_decay,
            auction_eps_floor: c.auction_eps_floor,
            max_iters: usize::try_from(c.max_iters).unwrap_or(usize::MAX),
            time_limit: (c.time_limit > 0.0).then_some(c.time_limit),
            primal_heuristic_seeds: usize::try_from(c.primal_heuristic_seeds).unwrap_or(usize::MAX),
            use_lap_primals: c.use_lap_primals,
            seed: c.seed,
        }
    }
}

/// Opaque QAP instance.
pub struct BmQap(FactorizedQap);

/// Opaque solver report.
pub struct BmReport(QapSolveReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

enum Failure {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            BmStatus::Ok
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(&e.to_string());
            BmStatus::from(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            BmStatus::NullPointer
        }
        Err(_) => {
            set_error("internal panic");
            BmStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, what: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::Null(what))
    } else {
        Ok(())
    }
}

/// # Safety
/// `p` must be null or point to `n * n` readable doubles.
unsafe fn square<'a>(p: *const f64, n: usize, what: &'static str) -> Result<ArrayView2<'a, f64>, Failure> {
    non_null(p, what)?;
    let len = n.checked_mul(n).ok_or_else(|| Error::TooLarge(format!("{n} x {n}")))?;
    let data = std::slice::from_raw_parts(p, len);
    Ok(ArrayView2::from_shape((n, n), data).expect("length checked"))
}

/// Message for the most recent failure on this thread; empty after a
/// success. Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn bm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a QAP `scale * sum C1_ik C2_{p(i) p(k)} + offset` from two
/// row-major `n x n` matrices. With `balanced`, the cost tensor is
/// stored in the square form that tightens dual bounds.
///
/// # Safety
/// `c1` and `c2` must point to `n * n` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bm_qap_from_factors(
    c1: *const f64,
    c2: *const f64,
    n: usize,
    scale: f64,
    offset: f64,
    balanced: bool,
    out: *mut *mut BmQap,
) -> BmStatus {
    guard(|| {
        non_null(out, "out")?;
        let a: Array2<f64> = square(c1, n, "c1")?.to_owned();
        let b: Array2<f64> = square(c2, n, "c2")?.to_owned();
        let qap = if balanced {
            FactorizedQap::balanced(a, b, scale, offset)?
        } else {
            FactorizedQap::from_factors(a, b, scale, offset)?
        };
        *out = Box::into_raw(Box::new(BmQap(qap)));
        Ok(())
    })
}

/// # Safety
/// `qap` must come from `bm_qap_from_factors` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bm_qap_free(qap: *mut BmQap) {
    if !qap.is_null() {
        drop(Box::from_raw(qap));
    }
}

/// Problem size, or 0 for a null handle.
///
/// # Safety
/// `qap` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bm_qap_size(qap: *const BmQap) -> usize {
    qap.as_ref().map_or(0, |q| q.0.n())
}

/// Objective of `perm` in the original units.
///
/// # Safety
/// `perm` must point to `n` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bm_qap_objective(qap: *const BmQap, perm: *const usize, n: usize, out: *mut f64) -> BmStatus {
    guard(|| {
        let q = qap.as_ref().ok_or(Failure::Null("qap"))?;
        non_null(perm, "perm")?;
        non_null(out, "out")?;
        let p = std::slice::from_raw_parts(perm, n);
        blindmatch::perm::validate(p, q.0.n())?;
        *out = q.0.distortion_of(p);
        Ok(())
    })
}

/// Default solver configuration.
#[no_mangle]
pub extern "C" fn bm_hahn_grant_config_default() -> BmHahnGrantConfig {
    BmHahnGrantConfig::from(&HahnGrantConfig::default())
}

/// Runs the factorized dual-ascent solver. `cfg` may be null for defaults.
///
/// # Safety
/// `qap` must be a live handle, `cfg` null or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bm_solve_hahn_grant(
    qap: *const BmQap,
    cfg: *const BmHahnGrantConfig,
    out: *mut *mut BmReport,
) -> BmStatus {
    guard(|| {
        let q = qap.as_ref().ok_or(Failure::Null("qap"))?;
        non_null(out, "out")?;
        let cfg = cfg.as_ref().map(HahnGrantConfig::from).unwrap_or_default();
        let rep = solve_factorized_hahn_grant(&q.0, &cfg)?;
        *out = Box::into_raw(Box::new(BmReport(rep)));
        Ok(())
    })
}

/// Exact optimum by enumeration (small instances only).
///
/// # Safety
/// `qap` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bm_solve_enumeration(qap: *const BmQap, out: *mut *mut BmReport) -> BmStatus {
    guard(|| {
        let q = qap.as_ref().ok_or(Failure::Null("qap"))?;
        non_null(out, "out")?;
        *out = Box::into_raw(Box::new(BmReport(solve_enumeration(&q.0)?)));
        Ok(())
    })
}

/// # Safety
/// `report` must come from a solve call and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bm_report_free(report: *mut BmReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Length of the permutation, or 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bm_report_size(report: *const BmReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.primal_perm.len())
}

/// Copies the best permutation into `out`, which holds `len` entries.
///
/// # Safety
/// `report` must be a live handle and `out` must hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn bm_report_permutation(report: *const BmReport, out: *mut usize, len: usize) -> BmStatus {
    guard(|| {
        let r = report.as_ref().ok_or(Failure::Null("report"))?;
        non_null(out, "out")?;
        let perm = &r.0.primal_perm;
        if len < perm.len() {
            return Err(Error::ShapeMismatch(format!("buffer holds {len}, permutation has {}", perm.len())).into());
        }
        ptr::copy_nonoverlapping(perm.as_ptr(), out, perm.len());
        Ok(())
    })
}

/// Best objective found, in original units. NaN for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bm_report_primal_cost(report: *const BmReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.0.primal_cost)
}

/// Certified lower bound in original units. NaN for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bm_report_dual_bound(report: *const BmReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.0.dual_bound)
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bm_report_converged(report: *const BmReport) -> bool {
    report.as_ref().is_some_and(|r| r.0.converged)
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bm_report_iterations(report: *const BmReport) -> u64 {
    report.as_ref().map_or(0, |r| r.0.iterations as u64)
}

/// The report as a JSON string, or null on failure. Release it with
/// `bm_string_free`.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bm_report_to_json(report: *const BmReport) -> *mut c_char {
    let mut text = None;
    let status = guard(|| {
        let r = report.as_ref().ok_or(Failure::Null("report"))?;
        let s = serde_json::to_string(&r.0).map_err(Error::from)?;
        text = Some(CString::new(s).map_err(|e| Error::Config(e.to_string()))?);
        Ok(())
    });
    match (status, text) {
        (BmStatus::Ok, Some(s)) => s.into_raw(),
        _ => ptr::null_mut(),
    }
}

/// # Safety
/// `s` must be null or come from `bm_report_to_json`.
#[no_mangle]
pub unsafe extern "C" fn bm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Exact linear assignment on a row-major `n x n` cost matrix. Writes the
/// column of each row into `assignment` and the total cost into `objective`.
///
/// # Safety
/// `cost` must hold `n * n` doubles, `assignment` `n` writable values and
/// `objective` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bm_lap_jv(cost: *const f64, n: usize, assignment: *mut usize, objective: *mut f64) -> BmStatus {
    guard(|| {
        let c = square(cost, n, "cost")?;
        non_null(assignment, "assignment")?;
        non_null(objective, "objective")?;
        let sol = solve_lap_jv(c)?;
        ptr::copy_nonoverlapping(sol.assignment.as_ptr(), assignment, n);
        *objective = sol.objective;
        Ok(())
    })
}
