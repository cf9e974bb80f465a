//! C ABI over `cdsbounds`.
//!
//! A `CdsModel` bundles the tenor grid, the illiquid contract, the market
//! quotes and the physical measure. Its no-arbitrage bounds and hedges are
//! computed once, in `cds_model_new`. Every fallible call returns a
//! `CdsStatus`; on failure `cds_last_error_message` describes the cause for
//! the calling thread.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use cdsbounds::gooddeal::price_from_rt;
use cdsbounds::hedging::{multi_cds_bounds, NoArbBounds};
use cdsbounds::lp::LpStatus;
use cdsbounds::measure::{PhysicalMeasure, RecoveryDensitySpec};
use cdsbounds::valuation::mean_pv;
use cdsbounds::{CdsSpec, Error, MarketQuote, Position, Side, TenorGrid};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    LpInfeasible = 3,
    LpUnbounded = 4,
    Unsupported = 5,
    OutOfRange = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdsSide {
    /// Least upper bound, dealer sells protection.
    Ask = 0,
    /// Greatest lower bound, dealer buys protection.
    Bid = 1,
}

impl From<CdsSide> for Side {
    fn from(s: CdsSide) -> Self {
        match s {
            CdsSide::Ask => Side::Ask,
            CdsSide::Bid => Side::Bid,
        }
    }
}

/// Opaque model handle.
pub struct CdsModel {
    grid: TenorGrid,
    illiquid: CdsSpec,
    quotes: Vec<MarketQuote>,
    measure: PhysicalMeasure,
    bounds: NoArbBounds,
}

impl CdsModel {
    fn position(&self, side: Side) -> Result<Position, Error> {
        Position::hedged(&self.illiquid, &self.quotes, self.bounds.hedge(side))
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> CdsStatus {
    match e {
        Error::InvalidArgument(_) | Error::NoDensity(_) => CdsStatus::InvalidArgument,
        Error::Lp(LpStatus::Infeasible) => CdsStatus::LpInfeasible,
        Error::Lp(_) => CdsStatus::LpUnbounded,
        Error::Unsupported(_) => CdsStatus::Unsupported,
        Error::PriceOutOfRange { .. } => CdsStatus::OutOfRange,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (CdsStatus, String)>) -> CdsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CdsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CdsStatus::Panic
        }
    }
}

fn lib<T>(r: Result<T, Error>) -> Result<T, (CdsStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (CdsStatus, String) {
    (CdsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn model_ref<'a>(model: *const CdsModel) -> Result<&'a CdsModel, (CdsStatus, String)> {
    unsafe { model.as_ref() }.ok_or_else(|| null("model"))
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], (CdsStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(unsafe { std::slice::from_raw_parts(ptr, len) })
}

/// Builds a model with the truncated-normal recovery law `(location, scale)`.
///
/// Quote maturities and the illiquid maturity are counts of periods of
/// length `quarter_years`; upfronts and spreads are decimals. The grid
/// covers the longest maturity. On success `*out` owns a new handle to be
/// released with `cds_model_free`.
///
/// # Safety
/// The three quote arrays must hold `n_quotes` elements and `out` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cds_model_new(
    quarter_years: f64,
    r_f: f64,
    quote_maturities: *const usize,
    upfronts: *const f64,
    spreads: *const f64,
    n_quotes: usize,
    illiquid_maturity: usize,
    illiquid_spread: f64,
    pd1: f64,
    recovery_location: f64,
    recovery_scale: f64,
    out: *mut *mut CdsModel,
) -> CdsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let m = unsafe { slice(quote_maturities, n_quotes, "quote_maturities")? };
        let u = unsafe { slice(upfronts, n_quotes, "upfronts")? };
        let w = unsafe { slice(spreads, n_quotes, "spreads")? };
        let quotes: Vec<MarketQuote> = (0..n_quotes).map(|p| MarketQuote::new(m[p], u[p], w[p])).collect();
        lib(cdsbounds::market::validate_quotes(&quotes))?;
        let all: Vec<usize> = m.iter().copied().chain([illiquid_maturity]).collect();
        let grid = lib(TenorGrid::covering(quarter_years, r_f, &all))?;
        let illiquid = CdsSpec::unit(illiquid_maturity, illiquid_spread);
        lib(illiquid.validate(&grid))?;
        let recovery = lib(RecoveryDensitySpec::truncated_normal(recovery_location, recovery_scale))?;
        let measure = lib(PhysicalMeasure::from_pd1(pd1, grid.horizon(), recovery))?;
        let bounds = lib(multi_cds_bounds(&grid, &illiquid, &quotes))?;
        let model = Box::new(CdsModel { grid, illiquid, quotes, measure, bounds });
        unsafe { *out = Box::into_raw(model) };
        Ok(())
    })
}

/// Releases a handle from `cds_model_new`. Null is a no-op.
///
/// # Safety
/// `model` must be null or a live handle not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cds_model_free(model: *mut CdsModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Replaces the recovery law with a two-point law on `{low, high}`.
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cds_model_set_two_point_recovery(
    model: *mut CdsModel,
    low: f64,
    high: f64,
    weight_low: f64,
) -> CdsStatus {
    guard(|| {
        let model = unsafe { model.as_mut() }.ok_or_else(|| null("model"))?;
        let spec = lib(RecoveryDensitySpec::two_point(low, high, weight_low))?;
        model.measure = model.measure.with_recovery(spec);
        Ok(())
    })
}

/// No-arbitrage ask (least upper bound) and bid (greatest lower bound).
///
/// # Safety
/// `model` must be a live handle; outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cds_model_bounds(model: *const CdsModel, v_lub: *mut f64, v_glb: *mut f64) -> CdsStatus {
    guard(|| {
        let model = unsafe { model_ref(model)? };
        if v_lub.is_null() || v_glb.is_null() {
            return Err(null("output"));
        }
        unsafe {
            *v_lub = model.bounds.v_lub;
            *v_glb = model.bounds.v_glb;
        }
        Ok(())
    })
}

/// Number of market quotes, the length `cds_model_hedge` needs.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cds_model_quote_count(model: *const CdsModel) -> usize {
    unsafe { model.as_ref() }.map_or(0, |m| m.quotes.len())
}

/// Hedge notionals and deposit in LP convention (sign-flipped on the bid
/// side), as `alphas[0..len]` and `*deposit`.
///
/// # Safety
/// `model` must be a live handle, `alphas` must hold `len` elements and
/// `deposit` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cds_model_hedge(
    model: *const CdsModel,
    side: CdsSide,
    alphas: *mut f64,
    len: usize,
    deposit: *mut f64,
) -> CdsStatus {
    guard(|| {
        let model = unsafe { model_ref(model)? };
        let v = model.bounds.hedge(side.into()).lp_vector();
        let k = v.len() - 1;
        if len < k {
            return Err((CdsStatus::BufferTooSmall, format!("need {k} slots, got {len}")));
        }
        if alphas.is_null() || deposit.is_null() {
            return Err(null("output"));
        }
        let out = unsafe { std::slice::from_raw_parts_mut(alphas, k) };
        out.copy_from_slice(&v[..k]);
        unsafe { *deposit = v[k] };
        Ok(())
    })
}

/// Expected PV of the hedged position under the physical measure.
///
/// # Safety
/// `model` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cds_model_mean_pv(model: *const CdsModel, side: CdsSide, out: *mut f64) -> CdsStatus {
    guard(|| {
        let model = unsafe { model_ref(model)? };
        if out.is_null() {
            return Err(null("out"));
        }
        let pos = lib(model.position(side.into()))?;
        let v = lib(mean_pv(&model.grid, &pos, &model.measure))?;
        unsafe { *out = v };
        Ok(())
    })
}

/// Good-deal bid and ask at expected return on capital at risk `r_t`.
///
/// # Safety
/// `model` must be a live handle; outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cds_model_gooddeal(
    model: *const CdsModel,
    r_t: f64,
    bid: *mut f64,
    ask: *mut f64,
) -> CdsStatus {
    guard(|| {
        let model = unsafe { model_ref(model)? };
        if bid.is_null() || ask.is_null() {
            return Err(null("output"));
        }
        let mut prices = [0.0; 2];
        for (slot, side) in prices.iter_mut().zip([Side::Bid, Side::Ask]) {
            let pos = lib(model.position(side))?;
            let d = lib(mean_pv(&model.grid, &pos, &model.measure))?.max(0.0);
            *slot = lib(price_from_rt(side, model.bounds.value(side), d, r_t))?;
        }
        unsafe {
            *bid = prices[0];
            *ask = prices[1];
        }
        Ok(())
    })
}

/// Copies the calling thread's last error message, NUL-terminated and
/// truncated to fit, into `buf`. Returns the full message length in bytes
/// excluding the terminator; pass a null `buf` to query it.
///
/// # Safety
/// `buf` must be null or hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn cds_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            let out = unsafe { std::slice::from_raw_parts_mut(buf as *mut u8, len) };
            out[..n].copy_from_slice(&bytes[..n]);
            out[n] = 0;
        }
        bytes.len()
    })
}
