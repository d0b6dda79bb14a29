//! C ABI for brequant.
//!
//! Models and quantizers are opaque heap handles created by `bq_*_new` /
//! `bq_design` and released with the matching `*_free`. Every fallible call
//! returns a [`BqStatus`]; the message of the last failure on the calling
//! thread is available from [`bq_last_error_message`]. Simplex points are
//! passed as `len` doubles that sum to one, with `len` equal to the number
//! of hypotheses.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use brequant::analysis::DesignOptions;
use brequant::io::{Quantizer, QuantizerFile};
use brequant::scalar::DesignReport;
use brequant::{
    bre_divergence, minimax_weight, BinaryGaussianModel, DetectionModel, Error, ExponentialTernaryModel, Model,
    SimplexPoint,
};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotConverged = 3,
    Numerical = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Opaque detection model.
pub struct BqModel {
    inner: Model,
}

/// Opaque designed quantizer; owns a copy of its model.
pub struct BqQuantizer {
    model: Model,
    quantizer: Quantizer,
    report: DesignReport,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct BqDesignOptions {
    /// Stopping tolerance on parameter movement; 0 keeps the default.
    pub tol: f64,
    /// Iteration cap; 0 keeps the default.
    pub max_iter: usize,
    /// Number of starts; 0 keeps the default.
    pub multistart: usize,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> BqStatus {
    match e {
        Error::Convergence { .. } => BqStatus::NotConverged,
        Error::Bracket { .. } | Error::OutOfImage(_) | Error::Degenerate(_) | Error::InconsistentThresholds { .. } => {
            BqStatus::Numerical
        }
        _ => BqStatus::InvalidArgument,
    }
}

fn guard<F: FnOnce() -> Result<BqStatus, (BqStatus, String)>>(f: F) -> BqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            BqStatus::Panic
        }
    }
}

fn fail(e: Error) -> (BqStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (BqStatus, String) {
    (BqStatus::NullPointer, format!("{what} is null"))
}

unsafe fn model_ref<'a>(m: *const BqModel) -> Result<&'a Model, (BqStatus, String)> {
    m.as_ref().map(|m| &m.inner).ok_or_else(|| null("model"))
}

unsafe fn quantizer_ref<'a>(q: *const BqQuantizer) -> Result<&'a BqQuantizer, (BqStatus, String)> {
    q.as_ref().ok_or_else(|| null("quantizer"))
}

unsafe fn read_point(p: *const f64, len: usize, model: &Model) -> Result<SimplexPoint, (BqStatus, String)> {
    if p.is_null() {
        return Err(null("point"));
    }
    if len != model.hypotheses() {
        return Err((
            BqStatus::InvalidArgument,
            format!("point has {len} coordinates, model has {} hypotheses", model.hypotheses()),
        ));
    }
    SimplexPoint::new(std::slice::from_raw_parts(p, len)).map_err(fail)
}

unsafe fn write_point(p: &SimplexPoint, out: *mut f64, len: usize) -> Result<(), (BqStatus, String)> {
    if out.is_null() {
        return Err(null("output buffer"));
    }
    if len < p.dim() {
        return Err((BqStatus::BufferTooSmall, format!("buffer holds {len} values, {} needed", p.dim())));
    }
    ptr::copy_nonoverlapping(p.coords().as_ptr(), out, p.dim());
    Ok(())
}

unsafe fn new_model(m: Result<Model, Error>, out: *mut *mut BqModel) -> BqStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = m.map_err(fail)?;
        *out = Box::into_raw(Box::new(BqModel { inner }));
        Ok(BqStatus::Ok)
    })
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bq_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn bq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Binary Gaussian shift model.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn bq_model_gaussian_new(
    mu: f64,
    sigma2: f64,
    c10: f64,
    c01: f64,
    out: *mut *mut BqModel,
) -> BqStatus {
    new_model(BinaryGaussianModel::new(mu, sigma2, c10, c01).map(Model::from), out)
}

/// Ternary exponential-rate model with unit costs.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn bq_model_exponential_new(
    lambda0: f64,
    lambda1: f64,
    lambda2: f64,
    out: *mut *mut BqModel,
) -> BqStatus {
    new_model(ExponentialTernaryModel::new(lambda0, lambda1, lambda2).map(Model::from), out)
}

/// # Safety
/// `model` must be null or a handle from `bq_model_*_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bq_model_free(model: *mut BqModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of hypotheses M, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn bq_model_hypotheses(model: *const BqModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.hypotheses())
}

/// Bayes risk `J(p)`.
///
/// # Safety
/// `model` must be live, `p` readable for `len` doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bq_risk(model: *const BqModel, p: *const f64, len: usize, out: *mut f64) -> BqStatus {
    guard(|| {
        let m = model_ref(model)?;
        let p = read_point(p, len, m)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = m.risk(&p);
        Ok(BqStatus::Ok)
    })
}

/// Divergence `d(p || a)`; `a` must be interior.
///
/// # Safety
/// `model` must be live, `p` and `a` readable for `len` doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bq_divergence(
    model: *const BqModel,
    p: *const f64,
    a: *const f64,
    len: usize,
    out: *mut f64,
) -> BqStatus {
    guard(|| {
        let m = model_ref(model)?;
        let p = read_point(p, len, m)?;
        let a = read_point(a, len, m)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = bre_divergence(m, &p, &a).map_err(fail)?.value();
        Ok(BqStatus::Ok)
    })
}

/// Single-cell minimax weight and its worst-case divergence.
///
/// # Safety
/// `model` must be live, `weight_out` writable for `len` doubles and
/// `worst_out` writable.
#[no_mangle]
pub unsafe extern "C" fn bq_minimax_weight(
    model: *const BqModel,
    weight_out: *mut f64,
    len: usize,
    worst_out: *mut f64,
) -> BqStatus {
    guard(|| {
        let m = model_ref(model)?;
        if worst_out.is_null() {
            return Err(null("worst_out"));
        }
        let (a, worst) = minimax_weight(m).map_err(fail)?;
        write_point(&a, weight_out, len)?;
        *worst_out = worst.value();
        Ok(BqStatus::Ok)
    })
}

#[no_mangle]
pub extern "C" fn bq_design_options_default() -> BqDesignOptions {
    BqDesignOptions { tol: 0.0, max_iter: 0, multistart: 0, seed: 0 }
}

fn design_options(o: Option<&BqDesignOptions>) -> Result<DesignOptions, (BqStatus, String)> {
    let mut d = DesignOptions::default();
    if let Some(o) = o {
        if o.tol < 0.0 || !o.tol.is_finite() {
            return Err((BqStatus::InvalidArgument, format!("tol must be nonnegative, got {}", o.tol)));
        }
        if o.tol > 0.0 {
            d.scalar.tol = o.tol;
            d.simplex.tol = o.tol;
        }
        if o.max_iter > 0 {
            d.scalar.max_iter = o.max_iter;
            d.simplex.max_iter = o.max_iter;
        }
        if o.multistart > 0 {
            d.scalar.multistart = o.multistart;
            d.simplex.multistart = o.multistart;
        }
        d.scalar.seed = o.seed;
        d.simplex.seed = o.seed;
    }
    Ok(d)
}

/// Minimax quantizer with `k` cells. Returns `NotConverged` with `*out`
/// still set when the iteration cap was reached.
///
/// # Safety
/// `model` must be live, `options` null or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bq_design(
    model: *const BqModel,
    k: usize,
    options: *const BqDesignOptions,
    out: *mut *mut BqQuantizer,
) -> BqStatus {
    guard(|| {
        let m = model_ref(model)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let opts = design_options(options.as_ref())?;
        let (quantizer, report) = Quantizer::design(m, k, &opts).map_err(fail)?;
        let converged = report.converged;
        *out = Box::into_raw(Box::new(BqQuantizer { model: m.clone(), quantizer, report }));
        if converged {
            Ok(BqStatus::Ok)
        } else {
            set_error(format!("design with K={k} did not converge"));
            Ok(BqStatus::NotConverged)
        }
    })
}

/// # Safety
/// `q` must be null or a quantizer handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bq_quantizer_free(q: *mut BqQuantizer) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

/// Number of cells K, or 0 for a null handle.
///
/// # Safety
/// `q` must be null or a live quantizer handle.
#[no_mangle]
pub unsafe extern "C" fn bq_quantizer_len(q: *const BqQuantizer) -> usize {
    q.as_ref().map_or(0, |q| q.quantizer.len())
}

/// Worst-case divergence recorded by the design.
///
/// # Safety
/// `q` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bq_quantizer_max_divergence(q: *const BqQuantizer, out: *mut f64) -> BqStatus {
    guard(|| {
        let q = quantizer_ref(q)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = q.report.max_divergence.value();
        Ok(BqStatus::Ok)
    })
}

/// Decision weight of cell `k`.
///
/// # Safety
/// `q` must be live and `out` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bq_quantizer_weight(q: *const BqQuantizer, k: usize, out: *mut f64, len: usize) -> BqStatus {
    guard(|| {
        let q = quantizer_ref(q)?;
        let w = q.quantizer.weights();
        let a =
            w.get(k).ok_or_else(|| (BqStatus::InvalidArgument, format!("cell {k} out of range (K = {})", w.len())))?;
        write_point(a, out, len)?;
        Ok(BqStatus::Ok)
    })
}

/// Cell index and decision weight for the prior `p`.
///
/// # Safety
/// `q` must be live, `p` readable for `len` doubles, `cell_out` writable and
/// `weight_out` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bq_quantize(
    q: *const BqQuantizer,
    p: *const f64,
    len: usize,
    cell_out: *mut usize,
    weight_out: *mut f64,
) -> BqStatus {
    guard(|| {
        let q = quantizer_ref(q)?;
        let p = read_point(p, len, &q.model)?;
        if cell_out.is_null() {
            return Err(null("cell_out"));
        }
        let (k, a) = q.quantizer.quantize(&q.model, &p).map_err(fail)?;
        write_point(&a, weight_out, len)?;
        *cell_out = k;
        Ok(BqStatus::Ok)
    })
}

/// Serialises the quantizer to JSON. Release the string with
/// `bq_string_free`.
///
/// # Safety
/// `q` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bq_quantizer_to_json(q: *const BqQuantizer, out: *mut *mut c_char) -> BqStatus {
    guard(|| {
        let q = quantizer_ref(q)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let json = QuantizerFile::new(&q.model, &q.quantizer, &q.report).to_json().map_err(fail)?;
        *out = CString::new(json).map_err(|e| (BqStatus::Numerical, e.to_string()))?.into_raw();
        Ok(BqStatus::Ok)
    })
}

/// Reads a quantizer written by `bq_quantizer_to_json` or the CLI.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bq_quantizer_from_json(json: *const c_char, out: *mut *mut BqQuantizer) -> BqStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| (BqStatus::InvalidArgument, e.to_string()))?;
        let file = QuantizerFile::from_json(text).map_err(fail)?;
        let quantizer = file.quantizer().map_err(fail)?;
        let (cell_maxima, max_divergence) = match &quantizer {
            Quantizer::Scalar(s) => brequant::scalar::max_divergence(&file.model, s),
            Quantizer::Simplex(s) => brequant::simplex_quant::simplex_max_divergence(&file.model, s).map_err(fail)?,
        };
        let report =
            DesignReport { iterations: file.iterations, converged: file.converged, max_divergence, cell_maxima };
        *out = Box::into_raw(Box::new(BqQuantizer { model: file.model, quantizer, report }));
        Ok(BqStatus::Ok)
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
