//! C ABI for `givens-sweep`.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free`. Every fallible call returns a [`GsStatus`]
//! and leaves a message for [`gs_last_error`] on failure.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use givens_sweep::parallel::{build_partition, parallel_sweep};
use givens_sweep::schedule::{greedy_swaps, FamilyKey};
use givens_sweep::sweep::{
    predicted_rotation_flops, sweep, FamilyResult, ScoreFn, ScoreTable, SweepOptions,
};
use givens_sweep::{Dataset, Error, FactorMethod, Preprocess};

pub const GS_SCORE_RSS: u32 = 0;
pub const GS_SCORE_LOGLIK: u32 = 1;
pub const GS_SCORE_BIC: u32 = 2;

pub const GS_METHOD_QR: u32 = 0;
pub const GS_METHOD_CHOLESKY: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidDataset = 3,
    LimitExceeded = 4,
    Numerical = 5,
    NotFound = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Opaque dataset handle.
pub struct GsDataset {
    inner: Dataset,
}

/// Opaque score table handle.
pub struct GsScoreTable {
    table: ScoreTable,
    entries: Vec<(FamilyKey, FamilyResult)>,
    rotation_flops: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GsSweepOptions {
    /// One of the `GS_SCORE_*` constants.
    pub score: u32,
    /// One of the `GS_METHOD_*` constants.
    pub method: u32,
    pub include_empty: bool,
    pub center: bool,
    pub scale: bool,
    /// Power of two; 1 runs sequentially.
    pub workers: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GsFamily {
    /// 0-based variable id.
    pub response: usize,
    /// Bit `v` set when variable `v` is a parent.
    pub parents: u64,
    pub nparents: usize,
    pub rss: f64,
    pub score: f64,
    pub perfect_fit: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn status_of(err: &Error) -> GsStatus {
    match err {
        Error::InvalidDataset(_) => GsStatus::InvalidDataset,
        Error::LimitExceeded { .. } => GsStatus::LimitExceeded,
        e if e.is_numerical() => GsStatus::Numerical,
        _ => GsStatus::InvalidArgument,
    }
}

fn fail(err: Error) -> GsStatus {
    set_error(err.to_string());
    status_of(&err)
}

fn guard(f: impl FnOnce() -> GsStatus) -> GsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            GsStatus::Panic
        }
    }
}

/// Message for the most recent failure on this thread, or NULL. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Copies `n * m` column-major values into a new dataset with names X1..Xm.
///
/// # Safety
/// `values` must point to `n * m` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_dataset_new(
    values: *const f64,
    n: usize,
    m: usize,
    out: *mut *mut GsDataset,
) -> GsStatus {
    guard(|| {
        if values.is_null() || out.is_null() {
            set_error("null pointer");
            return GsStatus::NullPointer;
        }
        let Some(len) = n.checked_mul(m) else {
            set_error("n * m overflows");
            return GsStatus::InvalidArgument;
        };
        let data = std::slice::from_raw_parts(values, len).to_vec();
        match Dataset::new(n, m, data, givens_sweep::dataset::default_names(m)) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(GsDataset { inner }));
                GsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `dataset` must come from [`gs_dataset_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gs_dataset_free(dataset: *mut GsDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Writes the greedy schedule for `m` variables (1-based positions) into
/// `out`. `*len` receives the schedule length; pass `out = NULL` to query it.
///
/// # Safety
/// `len` must be writable; `out`, when non-null, must hold `cap` entries.
#[no_mangle]
pub unsafe extern "C" fn gs_greedy_swaps(
    m: usize,
    out: *mut u32,
    cap: usize,
    len: *mut usize,
) -> GsStatus {
    guard(|| {
        if len.is_null() {
            set_error("null pointer");
            return GsStatus::NullPointer;
        }
        let schedule = match greedy_swaps(m) {
            Ok(s) => s,
            Err(e) => return fail(e),
        };
        *len = schedule.len();
        if out.is_null() {
            return GsStatus::Ok;
        }
        if cap < schedule.len() {
            set_error(format!("buffer holds {cap}, need {}", schedule.len()));
            return GsStatus::BufferTooSmall;
        }
        let dst = std::slice::from_raw_parts_mut(out, schedule.len());
        for (d, i) in dst.iter_mut().zip(schedule.iter()) {
            *d = i as u32;
        }
        GsStatus::Ok
    })
}

/// Rotation flops of a full sequential sweep over `m` variables.
#[no_mangle]
pub extern "C" fn gs_predicted_rotation_flops(m: usize) -> u64 {
    if m < 2 {
        return 0;
    }
    predicted_rotation_flops(m)
}

#[no_mangle]
pub extern "C" fn gs_sweep_options_default() -> GsSweepOptions {
    GsSweepOptions {
        score: GS_SCORE_RSS,
        method: GS_METHOD_QR,
        include_empty: true,
        center: true,
        scale: false,
        workers: 1,
    }
}

fn sweep_options(raw: &GsSweepOptions) -> Result<SweepOptions, GsStatus> {
    let score = match raw.score {
        GS_SCORE_RSS => ScoreFn::Rss,
        GS_SCORE_LOGLIK => ScoreFn::GaussianLoglik,
        GS_SCORE_BIC => ScoreFn::Bic,
        other => {
            set_error(format!("unknown score {other}"));
            return Err(GsStatus::InvalidArgument);
        }
    };
    let method = match raw.method {
        GS_METHOD_QR => FactorMethod::Householder,
        GS_METHOD_CHOLESKY => FactorMethod::Cholesky,
        other => {
            set_error(format!("unknown method {other}"));
            return Err(GsStatus::InvalidArgument);
        }
    };
    Ok(SweepOptions {
        score,
        method,
        include_empty: raw.include_empty,
        ..SweepOptions::default()
    })
}

/// Scores every family of `dataset`. `options` may be NULL for defaults.
///
/// # Safety
/// `dataset` must be a live handle, `options` null or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gs_sweep(
    dataset: *const GsDataset,
    options: *const GsSweepOptions,
    out: *mut *mut GsScoreTable,
) -> GsStatus {
    guard(|| {
        if dataset.is_null() || out.is_null() {
            set_error("null pointer");
            return GsStatus::NullPointer;
        }
        let raw = if options.is_null() {
            gs_sweep_options_default()
        } else {
            *options
        };
        let opts = match sweep_options(&raw) {
            Ok(o) => o,
            Err(status) => return status,
        };
        let data = match (*dataset).inner.preprocess(Preprocess {
            center: raw.center,
            scale: raw.scale,
        }) {
            Ok(d) => d,
            Err(e) => return fail(e),
        };
        let result = if raw.workers == 1 {
            sweep(&data, &opts)
        } else {
            build_partition(data.m(), raw.workers)
                .and_then(|plan| parallel_sweep(&data, &plan, &opts))
        };
        match result {
            Ok(output) => {
                let entries = output.table.iter().map(|(k, r)| (k, r.clone())).collect();
                *out = Box::into_raw(Box::new(GsScoreTable {
                    table: output.table,
                    entries,
                    rotation_flops: output.ledger.rotation_flops,
                }));
                GsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `table` must come from [`gs_sweep`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gs_table_free(table: *mut GsScoreTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_table_len(table: *const GsScoreTable) -> usize {
    table.as_ref().map_or(0, |t| t.entries.len())
}

/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_table_rotation_flops(table: *const GsScoreTable) -> u64 {
    table.as_ref().map_or(0, |t| t.rotation_flops)
}

unsafe fn export(
    key: FamilyKey,
    result: &FamilyResult,
    out: *mut GsFamily,
    coefficients: *mut f64,
    cap: usize,
) -> GsStatus {
    *out = GsFamily {
        response: key.response,
        parents: key.parents,
        nparents: result.nparents,
        rss: result.rss,
        score: result.score,
        perfect_fit: result.perfect_fit,
    };
    if coefficients.is_null() {
        return GsStatus::Ok;
    }
    if cap < result.coefficients.len() {
        set_error(format!(
            "buffer holds {cap}, need {}",
            result.coefficients.len()
        ));
        return GsStatus::BufferTooSmall;
    }
    ptr::copy_nonoverlapping(
        result.coefficients.as_ptr(),
        coefficients,
        result.coefficients.len(),
    );
    GsStatus::Ok
}

/// Entry `index` in (response, parent mask) order. Coefficients, one per
/// parent in ascending id, go to `coefficients` when it is non-null.
///
/// # Safety
/// `table` must be live, `out` writable, `coefficients` null or `cap` long.
#[no_mangle]
pub unsafe extern "C" fn gs_table_get(
    table: *const GsScoreTable,
    index: usize,
    out: *mut GsFamily,
    coefficients: *mut f64,
    cap: usize,
) -> GsStatus {
    guard(|| {
        let Some(t) = table.as_ref() else {
            set_error("null pointer");
            return GsStatus::NullPointer;
        };
        if out.is_null() {
            set_error("null pointer");
            return GsStatus::NullPointer;
        }
        let Some((key, result)) = t.entries.get(index) else {
            set_error(format!("index {index} out of range"));
            return GsStatus::NotFound;
        };
        export(*key, result, out, coefficients, cap)
    })
}

/// Looks up one family by response id and parent bit mask.
///
/// # Safety
/// As for [`gs_table_get`].
#[no_mangle]
pub unsafe extern "C" fn gs_table_find(
    table: *const GsScoreTable,
    response: usize,
    parents: u64,
    out: *mut GsFamily,
    coefficients: *mut f64,
    cap: usize,
) -> GsStatus {
    guard(|| {
        let Some(t) = table.as_ref() else {
            set_error("null pointer");
            return GsStatus::NullPointer;
        };
        if out.is_null() {
            set_error("null pointer");
            return GsStatus::NullPointer;
        }
        let m = t.table.m();
        if response >= m || parents >> m != 0 || parents & (1 << response) != 0 {
            set_error("family outside this table");
            return GsStatus::InvalidArgument;
        }
        let key = match FamilyKey::new(response, parents) {
            Ok(k) => k,
            Err(e) => return fail(e),
        };
        match t.table.get(key) {
            Some(result) => export(key, result, out, coefficients, cap),
            None => {
                set_error("family not in table");
                GsStatus::NotFound
            }
        }
    })
}
