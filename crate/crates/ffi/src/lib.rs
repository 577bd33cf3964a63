//! C ABI for `bonus-core`.
//!
//! Every fallible function returns a [`BonusStatus`]; on failure the message
//! is available from [`bonus_last_error`] until the next call on the same
//! thread. Handles are opaque and must be released with their `_free`
//! function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bonus_core::engine::{run_bh, run_bonus, run_storey_bh, BonusConfig, RunResult};
use bonus_core::estimators::{fdp_bh, fdp_storey};
use bonus_core::harness::lemma_sweep;
use bonus_core::learners::{AgnosticLearner, LowRankLearner, TwoGroupLearner, TwoGroupOptions};
use bonus_core::rng::{derive_rng, stream};
use bonus_core::{BonusError, FdpKind, Learner, NullModel, Points};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BonusStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Numerical = 4,
    LearnerFailed = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BonusLearnerKind {
    /// `‖x‖²`.
    Agnostic = 0,
    /// Rank-k PCA by eigendecomposition.
    Pca = 1,
    /// Rank-k PCA by EM.
    EmPca = 2,
    /// Rank-k two-group maximum likelihood.
    TwoGroup = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BonusEstimator {
    Bh = 0,
    Storey = 1,
}

/// Row-major real observations under a standard Gaussian null.
pub struct BonusDataset {
    points: Points,
}

pub struct BonusResult {
    run: RunResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &BonusError) -> BonusStatus {
    match e {
        BonusError::DimensionMismatch { .. } => BonusStatus::DimensionMismatch,
        BonusError::Numerical(_) => BonusStatus::Numerical,
        BonusError::Learner { .. } => BonusStatus::LearnerFailed,
        _ => BonusStatus::InvalidArgument,
    }
}

fn fail(status: BonusStatus, message: impl Into<String>) -> BonusStatus {
    set_error(message.into());
    status
}

fn guard<F: FnOnce() -> Result<(), BonusStatus>>(f: F) -> BonusStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BonusStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(BonusStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: bonus_core::Result<T>) -> Result<T, BonusStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), BonusStatus> {
    if p.is_null() {
        Err(fail(BonusStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn bonus_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Copies `rows × dim` row-major values into a new dataset.
///
/// # Safety
/// `data` must point to `rows * dim` readable doubles and `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn bonus_dataset_new(
    data: *const f64,
    rows: usize,
    dim: usize,
    out: *mut *mut BonusDataset,
) -> BonusStatus {
    guard(|| {
        non_null(data, "data")?;
        non_null(out, "out")?;
        let len = rows
            .checked_mul(dim)
            .ok_or_else(|| fail(BonusStatus::InvalidArgument, "rows * dim overflows"))?;
        if dim == 0 {
            return Err(fail(BonusStatus::InvalidArgument, "dim must be positive"));
        }
        let values = std::slice::from_raw_parts(data, len).to_vec();
        let points = lift(Points::from_flat(dim, values))?;
        *out = Box::into_raw(Box::new(BonusDataset { points }));
        Ok(())
    })
}

/// # Safety
/// `dataset` must come from [`bonus_dataset_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn bonus_dataset_free(dataset: *mut BonusDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

#[no_mangle]
pub extern "C" fn bonus_fdp_bh(n: usize, n_tilde: usize, real_in_region: usize, synthetic_in_region: usize) -> f64 {
    fdp_bh(n, n_tilde, real_in_region, synthetic_in_region)
}

/// `+∞` when `synthetic_in_correction` is zero.
#[no_mangle]
pub extern "C" fn bonus_fdp_storey(
    real_in_correction: usize,
    synthetic_in_correction: usize,
    real_in_region: usize,
    synthetic_in_region: usize,
) -> f64 {
    fdp_storey(real_in_correction, synthetic_in_correction, real_in_region, synthetic_in_region)
}

unsafe fn write_mask(rejected: &[usize], n: usize, mask: *mut u8, count: *mut usize) {
    let mask = std::slice::from_raw_parts_mut(mask, n);
    mask.fill(0);
    for &i in rejected {
        mask[i] = 1;
    }
    if !count.is_null() {
        *count = rejected.len();
    }
}

unsafe fn pvalue_slice<'a>(pvalues: *const f64, n: usize, alpha: f64) -> Result<&'a [f64], BonusStatus> {
    if n > 0 {
        non_null(pvalues, "pvalues")?;
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(fail(BonusStatus::InvalidArgument, format!("alpha {alpha} outside (0, 1)")));
    }
    Ok(if n == 0 { &[] } else { std::slice::from_raw_parts(pvalues, n) })
}

/// Benjamini–Hochberg. Writes 1 into `mask[i]` for rejected hypotheses and 0
/// elsewhere; `count` may be null.
///
/// # Safety
/// `pvalues` must hold `n` doubles and `mask` must hold `n` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bonus_bh(pvalues: *const f64, n: usize, alpha: f64, mask: *mut u8, count: *mut usize) -> BonusStatus {
    guard(|| {
        let p = pvalue_slice(pvalues, n, alpha)?;
        non_null(mask, "mask")?;
        write_mask(&run_bh(p, alpha), n, mask, count);
        Ok(())
    })
}

/// Storey-BH with null-proportion threshold `lambda`.
///
/// # Safety
/// As for [`bonus_bh`].
#[no_mangle]
pub unsafe extern "C" fn bonus_storey_bh(
    pvalues: *const f64,
    n: usize,
    alpha: f64,
    lambda: f64,
    mask: *mut u8,
    count: *mut usize,
) -> BonusStatus {
    guard(|| {
        let p = pvalue_slice(pvalues, n, alpha)?;
        non_null(mask, "mask")?;
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(fail(BonusStatus::InvalidArgument, format!("lambda {lambda} outside (0, 1)")));
        }
        write_mask(&run_storey_bh(p, alpha, lambda), n, mask, count);
        Ok(())
    })
}

/// Runs BONuS on `dataset` against a standard Gaussian null with `n_tilde`
/// synthetic draws. `k` is the rank for the low-rank learners and ignored
/// by the agnostic one. Identical arguments give identical results.
///
/// # Safety
/// `dataset` must be a live handle and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bonus_run(
    dataset: *const BonusDataset,
    learner: BonusLearnerKind,
    k: usize,
    estimator: BonusEstimator,
    alpha: f64,
    n_tilde: usize,
    seed: u64,
    out: *mut *mut BonusResult,
) -> BonusStatus {
    guard(|| {
        non_null(dataset, "dataset")?;
        non_null(out, "out")?;
        let points = &(*dataset).points;
        let model = lift(NullModel::gaussian(points.dim()))?;
        let learner: Box<dyn Learner> = match learner {
            BonusLearnerKind::Agnostic => Box::new(AgnosticLearner::new(model.clone())),
            BonusLearnerKind::Pca => Box::new(LowRankLearner::eigen(k)),
            BonusLearnerKind::EmPca => Box::new(LowRankLearner::em(k)),
            BonusLearnerKind::TwoGroup => Box::new(TwoGroupLearner::new(TwoGroupOptions {
                k,
                ..TwoGroupOptions::default()
            })),
        };
        let kind = match estimator {
            BonusEstimator::Bh => FdpKind::Bh,
            BonusEstimator::Storey => FdpKind::storey(),
        };
        let config = BonusConfig::new(alpha, kind, n_tilde);
        let mut rng = derive_rng(seed, 0, stream::SYNTHETIC);
        let run = lift(run_bonus(points, learner.as_ref(), &model, &config, &mut rng))?;
        *out = Box::into_raw(Box::new(BonusResult { run }));
        Ok(())
    })
}

/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn bonus_result_rejected_count(result: *const BonusResult) -> usize {
    result.as_ref().map_or(0, |r| r.run.rejected.len())
}

/// Stopping step of the peeling loop (first step is 1); 0 for null.
///
/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn bonus_result_stopping_step(result: *const BonusResult) -> usize {
    result.as_ref().map_or(0, |r| r.run.t_hat)
}

/// Copies up to `capacity` rejected row indices (ascending) into `out` and
/// stores the number copied in `written`.
///
/// # Safety
/// `out` must hold `capacity` writable values; `written` may be null.
#[no_mangle]
pub unsafe extern "C" fn bonus_result_rejected(
    result: *const BonusResult,
    out: *mut usize,
    capacity: usize,
    written: *mut usize,
) -> BonusStatus {
    guard(|| {
        non_null(result, "result")?;
        let rejected = &(*result).run.rejected;
        let m = rejected.len().min(capacity);
        if m > 0 {
            non_null(out, "out")?;
            std::slice::from_raw_parts_mut(out, m).copy_from_slice(&rejected[..m]);
        }
        if !written.is_null() {
            *written = m;
        }
        Ok(())
    })
}

/// # Safety
/// `result` must come from [`bonus_run`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn bonus_result_free(result: *mut BonusResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Exhaustive hypergeometric check for `a ≤ a_max`, `b ≤ b_max`. Stores the
/// number of violated cases in `violations`.
///
/// # Safety
/// `violations` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bonus_lemma_check(a_max: u64, b_max: u64, violations: *mut usize) -> BonusStatus {
    guard(|| {
        non_null(violations, "violations")?;
        if a_max > 200 || b_max > 200 {
            return Err(fail(BonusStatus::InvalidArgument, "a_max and b_max must be at most 200"));
        }
        let report = lift(lemma_sweep(a_max, b_max))?;
        *violations = report.violations.len();
        Ok(())
    })
}
