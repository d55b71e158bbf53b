//! C ABI for `fractrend`.
//!
//! Every function returns an [`FtStatus`]; results go through out-pointers.
//! On failure the message is kept per thread and can be read with
//! [`ft_last_error`]. Handles are opaque and must be released with their
//! matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use fractrend::fracsim::{simulate, FracParams, SimMethod};
use fractrend::fractest::{self, Alternative, Bandwidth, TestConfig, TrendOrder};
use fractrend::selection::{select_order, IcTrace, Penalty};
use fractrend::spectral::periodogram;
use fractrend::{Error, TimeSeries};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Status codes. `FT_STATUS_OK` is zero; everything else is an error.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtStatus {
    Ok = 0,
    NullPointer = 1,
    /// Argument outside its mathematical domain.
    Domain = 2,
    /// Design matrix has more columns than rows.
    Rank = 3,
    /// Malformed input (length mismatch, non-finite values, too short).
    Input = 4,
    /// Statistic undefined, e.g. zero residual variance.
    Degenerate = 5,
    /// Inconsistent configuration.
    Config = 6,
    Simulation = 7,
    /// Output buffer too small.
    Buffer = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtAlternative {
    TwoSided = 0,
    Greater = 1,
    Less = 2,
}

impl From<FtAlternative> for Alternative {
    fn from(a: FtAlternative) -> Self {
        match a {
            FtAlternative::TwoSided => Alternative::TwoSided,
            FtAlternative::Greater => Alternative::Greater,
            FtAlternative::Less => Alternative::Less,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtPenalty {
    Bic = 0,
    Hq = 1,
}

impl From<FtPenalty> for Penalty {
    fn from(p: FtPenalty) -> Self {
        match p {
            FtPenalty::Bic => Penalty::Bic,
            FtPenalty::Hq => Penalty::Hq,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtSimMethod {
    TypeI = 0,
    TypeII = 1,
}

/// Test settings. `m == 0` means use `alpha`; `k < 0` means choose the
/// trend order by information criterion up to `k_star`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FtTestOptions {
    pub delta0: f64,
    pub m: usize,
    pub alpha: f64,
    pub k: i64,
    pub k_star: usize,
    pub penalty: FtPenalty,
    pub alternative: FtAlternative,
    pub level: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FtTestOutput {
    pub t_stat: f64,
    pub lm_stat: f64,
    pub p_value: f64,
    pub m: usize,
    pub k_used: usize,
    /// 1 if H0 is rejected at `level`.
    pub reject: i32,
    /// 1 if the requested bandwidth was clamped to T/2.
    pub bandwidth_clamped: i32,
}

/// Opaque validated series.
pub struct FtSeries(TimeSeries);

/// Opaque information-criterion trace.
pub struct FtIcTrace(IcTrace);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> FtStatus {
    match e {
        Error::Domain(_) => FtStatus::Domain,
        Error::Rank { .. } => FtStatus::Rank,
        Error::Input(_) | Error::Data(_) => FtStatus::Input,
        Error::Degenerate(_) => FtStatus::Degenerate,
        Error::Config(_) => FtStatus::Config,
        Error::Simulation(_) | Error::Io(_) | Error::Json(_) => FtStatus::Simulation,
    }
}

struct Fail(FtStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> FtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FtStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            FtStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(FtStatus::NullPointer, format!("{what} is null"))
}

unsafe fn series_ref<'a>(s: *const FtSeries) -> Result<&'a TimeSeries, Fail> {
    s.as_ref().map(|s| &s.0).ok_or_else(|| null("series"))
}

/// Message for the last failing call on this thread, or null. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ft_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn ft_status_str(status: FtStatus) -> *const c_char {
    let s: &'static CStr = match status {
        FtStatus::Ok => c"ok",
        FtStatus::NullPointer => c"null pointer",
        FtStatus::Domain => c"domain error",
        FtStatus::Rank => c"rank error",
        FtStatus::Input => c"invalid input",
        FtStatus::Degenerate => c"degenerate statistic",
        FtStatus::Config => c"invalid configuration",
        FtStatus::Simulation => c"simulation failure",
        FtStatus::Buffer => c"buffer too small",
        FtStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Defaults: δ₀ = 0, α = 0.65, auto order with k* = 10 and BIC,
/// two-sided, level 0.05.
#[no_mangle]
pub extern "C" fn ft_test_options_default() -> FtTestOptions {
    FtTestOptions {
        delta0: 0.0,
        m: 0,
        alpha: fractest::DEFAULT_ALPHA,
        k: -1,
        k_star: 10,
        penalty: FtPenalty::Bic,
        alternative: FtAlternative::TwoSided,
        level: 0.05,
    }
}

/// Copies `len` values into a new series handle.
///
/// # Safety
/// `data` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ft_series_new(data: *const f64, len: usize, out: *mut *mut FtSeries) -> FtStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let ts = TimeSeries::new(slice::from_raw_parts(data, len).to_vec())?;
        *out = Box::into_raw(Box::new(FtSeries(ts)));
        Ok(())
    })
}

/// # Safety
/// `series` must come from [`ft_series_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ft_series_free(series: *mut FtSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// # Safety
/// `series` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ft_series_len(series: *const FtSeries) -> usize {
    series.as_ref().map_or(0, |s| s.0.len())
}

/// t statistic on an already detrended series.
///
/// # Safety
/// `series` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ft_t_statistic(series: *const FtSeries, delta0: f64, m: usize, out: *mut f64) -> FtStatus {
    guard(|| {
        let s = series_ref(series)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = fractest::t_statistic(s, delta0, m)?;
        Ok(())
    })
}

/// Writes the first `m` periodogram ordinates into `out` (capacity `cap`).
///
/// # Safety
/// `series` must be a live handle; `out` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn ft_periodogram(series: *const FtSeries, m: usize, out: *mut f64, cap: usize) -> FtStatus {
    guard(|| {
        let s = series_ref(series)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if cap < m {
            return Err(Fail(FtStatus::Buffer, format!("need {m} slots, have {cap}")));
        }
        let p = periodogram(s, m)?;
        slice::from_raw_parts_mut(out, m).copy_from_slice(&p.ordinates);
        Ok(())
    })
}

/// Detrends and tests `H0: δ = δ₀`.
///
/// # Safety
/// `series` must be a live handle; `options` readable; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ft_test(
    series: *const FtSeries,
    options: *const FtTestOptions,
    out: *mut FtTestOutput,
) -> FtStatus {
    guard(|| {
        let s = series_ref(series)?;
        let o = options.as_ref().ok_or_else(|| null("options"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let config = TestConfig {
            delta0: o.delta0,
            bandwidth: if o.m == 0 {
                Bandwidth::Exponent(o.alpha)
            } else {
                Bandwidth::Fixed(o.m)
            },
            trend_order: if o.k < 0 {
                TrendOrder::Auto {
                    k_star: o.k_star,
                    penalty: o.penalty.into(),
                }
            } else {
                TrendOrder::Fixed(o.k as usize)
            },
            alternative: o.alternative.into(),
            level: o.level,
        };
        let r = fractest::test_with_detrend(s, &config)?;
        *out = FtTestOutput {
            t_stat: r.t_stat,
            lm_stat: r.lm_stat,
            p_value: r.p_value,
            m: r.m,
            k_used: r.k_used,
            reject: r.reject_at_level as i32,
            bandwidth_clamped: r.bandwidth_clamped as i32,
        };
        Ok(())
    })
}

/// Information criterion for k = 0..=k_star.
///
/// # Safety
/// `series` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ft_select_order(
    series: *const FtSeries,
    k_star: usize,
    penalty: FtPenalty,
    out: *mut *mut FtIcTrace,
) -> FtStatus {
    guard(|| {
        let s = series_ref(series)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let trace = select_order(s, k_star, penalty.into())?;
        *out = Box::into_raw(Box::new(FtIcTrace(trace)));
        Ok(())
    })
}

/// # Safety
/// `trace` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ft_ic_trace_k_hat(trace: *const FtIcTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.k_hat)
}

/// Number of orders evaluated (k_star + 1).
///
/// # Safety
/// `trace` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ft_ic_trace_len(trace: *const FtIcTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.ic_values.len())
}

/// IC at order `k`. Writes -INFINITY for an exact fit.
///
/// # Safety
/// `trace` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ft_ic_trace_value(trace: *const FtIcTrace, k: usize, out: *mut f64) -> FtStatus {
    guard(|| {
        let t = trace.as_ref().ok_or_else(|| null("trace"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let v =
            t.0.ic_values
                .get(k)
                .ok_or_else(|| Fail(FtStatus::Domain, format!("order {k} exceeds k_star {}", t.0.k_max)))?;
        *out = v.unwrap_or(f64::NEG_INFINITY);
        Ok(())
    })
}

/// # Safety
/// `trace` must come from [`ft_select_order`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ft_ic_trace_free(trace: *mut FtIcTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Simulates `len` values of fractionally integrated noise into `out`.
/// Same seed, same output.
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ft_simulate(
    delta: f64,
    sd: f64,
    method: FtSimMethod,
    seed: u64,
    out: *mut f64,
    len: usize,
) -> FtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let method = match method {
            FtSimMethod::TypeI => SimMethod::TypeI,
            FtSimMethod::TypeII => SimMethod::TypeII,
        };
        let params = FracParams::new(delta, sd, method)?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let z = simulate(&params, len, &mut rng)?;
        slice::from_raw_parts_mut(out, len).copy_from_slice(z.values());
        Ok(())
    })
}

/// Asymptotic power at `c = δ√m` of the level-`level` test.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ft_asymptotic_local_power(
    c: f64,
    level: f64,
    alternative: FtAlternative,
    out: *mut f64,
) -> FtStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = fractest::asymptotic_local_power(c, level, alternative.into())?;
        Ok(())
    })
}
