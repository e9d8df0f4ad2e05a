//! C interface to `heavyspec`.
//!
//! Conventions: every fallible function returns an [`HsStatus`] and writes
//! results through out-pointers. On failure a message is kept per thread and
//! can be read with [`hs_last_error`]. Objects are opaque handles created by
//! `*_new` and released by the matching `*_free`; freeing NULL is a no-op.
//! Array outputs take a capacity and report the full length, so callers can
//! query the size with a zero capacity first.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use heavyspec::error::Error;
use heavyspec::limits::{gap_limit, Law};
use heavyspec::linfield::{m_matrix, simulate_field, CoeffMatrix, CoeffTerm, FieldSpec};
use heavyspec::matrix::Matrix;
use heavyspec::rand_heavy::{a_of, tail_prob, NormalizingSeq, TailModel};
use heavyspec::spectra::{covariance_eigs, sym_eigenvalues, SymMatrix};
use heavyspec::tracyw::{default_grid, solve_painleve, PainleveGrid, DEFAULT_X0, DEFAULT_X_MIN};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    Unsupported = 4,
    Numerical = 5,
    Parse = 6,
    Io = 7,
    /// The output buffer was too small; the required length was still written.
    BufferTooSmall = 8,
    Panic = 99,
}

/// Noise distribution selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HsNoise {
    /// Symmetric Pareto-type law; `param` is the tail index.
    Pareto = 0,
    /// Student t; `param` is the degrees of freedom.
    StudentT = 1,
    /// `+-sqrt 3` with probability 1/6 each, 0 otherwise; `param` ignored.
    ThreePoint = 2,
    /// Standard normal; `param` ignored.
    Normal = 3,
}

/// Coefficient array `h_kl` of a linear field.
pub struct HsCoeffs(CoeffMatrix);

/// Tabulated Tracy–Widom F1.
pub struct HsTwTable(PainleveGrid);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> HsStatus {
    match e {
        Error::InvalidArgument(_)
        | Error::ShapeMismatch { .. }
        | Error::LengthMismatch { .. }
        | Error::EmptySupport
        | Error::ZeroSequence
        | Error::InsufficientData(_) => HsStatus::InvalidArgument,
        Error::OutOfRange { .. } | Error::MemoryBudget { .. } => HsStatus::OutOfRange,
        Error::UnsupportedVariant { .. } => HsStatus::Unsupported,
        Error::NoConvergence { .. }
        | Error::BlowUp { .. }
        | Error::DegenerateSpectrum(_)
        | Error::EnsembleFailed { .. } => HsStatus::Numerical,
        Error::Parse(_) => HsStatus::Parse,
        Error::Io(_) => HsStatus::Io,
    }
}

struct Fail(HsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(name: &str) -> Fail {
    Fail(HsStatus::NullPointer, format!("{name} is NULL"))
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> HsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            HsStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal panic: {msg}"));
            HsStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, value: T, name: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(name));
    }
    unsafe { out.write(value) };
    Ok(())
}

unsafe fn write_array(values: &[f64], out: *mut f64, cap: usize, len: *mut usize) -> Result<(), Fail> {
    unsafe { write(len, values.len(), "len")? };
    if values.len() > cap {
        return Err(Fail(
            HsStatus::BufferTooSmall,
            format!("need room for {} values, got {cap}", values.len()),
        ));
    }
    if !values.is_empty() {
        if out.is_null() {
            return Err(null("out"));
        }
        unsafe { ptr::copy_nonoverlapping(values.as_ptr(), out, values.len()) };
    }
    Ok(())
}

unsafe fn input<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(unsafe { slice::from_raw_parts(p, len) })
}

fn noise(kind: HsNoise, param: f64) -> Result<TailModel, Fail> {
    let m = match kind {
        HsNoise::Pareto => TailModel::pareto(param),
        HsNoise::StudentT => TailModel::student_t(param),
        HsNoise::ThreePoint => TailModel::ThreePoint,
        HsNoise::Normal => TailModel::StandardNormal,
    };
    m.validate()?;
    Ok(m)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn hs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// `P(|Z| > x)` for the chosen noise.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn hs_tail_prob(kind: HsNoise, param: f64, x: f64, out: *mut f64) -> HsStatus {
    guard(|| unsafe { write(out, tail_prob(&noise(kind, param)?, x)?, "out") })
}

/// Normalizing constant `a_k` with `P(|Z| > a_k) = 1/k`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn hs_a_of(kind: HsNoise, param: f64, k: u64, out: *mut f64) -> HsStatus {
    guard(|| unsafe { write(out, a_of(&noise(kind, param)?, k)?, "out") })
}

/// Builds a coefficient array from `len` triples `(k[i], l[i], h[i])`.
///
/// # Safety
/// `k`, `l` and `h` must each point to `len` readable values; `out` must be
/// valid for one write.
#[no_mangle]
pub unsafe extern "C" fn hs_coeffs_new(
    k: *const i64,
    l: *const i64,
    h: *const f64,
    len: usize,
    out: *mut *mut HsCoeffs,
) -> HsStatus {
    guard(|| {
        let (k, l, h) = unsafe { (input(k, len, "k")?, input(l, len, "l")?, input(h, len, "h")?) };
        let terms = (0..len).map(|i| CoeffTerm {
            k: k[i],
            l: l[i],
            h: h[i],
        });
        let c = CoeffMatrix::new(terms)?;
        unsafe { write(out, Box::into_raw(Box::new(HsCoeffs(c))), "out") }
    })
}

/// Releases a coefficient array.
///
/// # Safety
/// `c` must be NULL or a pointer returned by [`hs_coeffs_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hs_coeffs_free(c: *mut HsCoeffs) {
    if !c.is_null() {
        drop(unsafe { Box::from_raw(c) });
    }
}

/// Descending singular values of `M(s) = H(0) H(s)'`.
///
/// # Safety
/// `c` must be a live handle, `out` writable for `cap` values, `len` for one.
#[no_mangle]
pub unsafe extern "C" fn hs_coeffs_singular_values(
    c: *const HsCoeffs,
    lag: usize,
    out: *mut f64,
    cap: usize,
    len: *mut usize,
) -> HsStatus {
    guard(|| {
        let c = unsafe { c.as_ref() }.ok_or_else(|| null("coeffs"))?;
        let m = m_matrix(&c.0, lag)?;
        unsafe { write_array(&m.singular_values, out, cap, len) }
    })
}

/// Simulates `X(0)` (`p x n`) from the field and writes the descending
/// eigenvalues of `X(0) X(0)'` divided by `a_np^2` (unnormalized for light
/// tails). Pass NULL coefficients for iid noise.
///
/// # Safety
/// `c` must be NULL or a live handle, `out` writable for `cap` values, `len`
/// for one.
#[no_mangle]
pub unsafe extern "C" fn hs_simulate_eigenvalues(
    c: *const HsCoeffs,
    kind: HsNoise,
    param: f64,
    p: usize,
    n: usize,
    seed: u64,
    out: *mut f64,
    cap: usize,
    len: *mut usize,
) -> HsStatus {
    guard(|| {
        let coeffs = match unsafe { c.as_ref() } {
            Some(c) => c.0.clone(),
            None => CoeffMatrix::identity(),
        };
        let model = noise(kind, param)?;
        let real = simulate_field(&FieldSpec::new(coeffs, model, p, n, 0, seed))?;
        let mut values = covariance_eigs(&real.panels[0].matrix)?.values;
        if model.tail_index().is_some() {
            let a2 = NormalizingSeq::new(model)?.a_np_squared(n, p)?;
            values.iter_mut().for_each(|v| *v /= a2);
        }
        unsafe { write_array(&values, out, cap, len) }
    })
}

/// Descending eigenvalues of the symmetric `dim x dim` row-major matrix `a`.
///
/// # Safety
/// `a` must hold `dim * dim` values and `out` room for `dim`.
#[no_mangle]
pub unsafe extern "C" fn hs_sym_eigenvalues(a: *const f64, dim: usize, out: *mut f64) -> HsStatus {
    guard(|| {
        let cells = dim
            .checked_mul(dim)
            .ok_or_else(|| Fail(HsStatus::OutOfRange, "dimension overflows".into()))?;
        let a = unsafe { input(a, cells, "a")? };
        let sym = SymMatrix::new(Matrix::from_vec(dim, dim, a.to_vec())?)?;
        let values = sym_eigenvalues(&sym)?;
        let mut len = 0;
        unsafe { write_array(&values, out, dim, &mut len) }
    })
}

/// Atom of the self-normalized gap limit: location `1 - v2/v1`, mass `(v2/v1)^{alpha/2}`.
///
/// # Safety
/// `location` and `mass` must be valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn hs_gap_atom(alpha: f64, v1: f64, v2: f64, location: *mut f64, mass: *mut f64) -> HsStatus {
    guard(|| {
        let g = gap_limit(alpha, v1, v2)?;
        unsafe {
            write(location, g.atom_location, "location")?;
            write(mass, g.atom_mass, "mass")
        }
    })
}

/// Evaluates a limit law given as JSON, e.g. `{"law": "frechet", "alpha_half": 0.8}`.
/// Densities are returned for Marčenko–Pastur, distribution functions otherwise.
///
/// # Safety
/// `law_json` must be a NUL-terminated string and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn hs_law_eval(law_json: *const c_char, x: f64, out: *mut f64) -> HsStatus {
    guard(|| {
        if law_json.is_null() {
            return Err(null("law_json"));
        }
        let text = unsafe { CStr::from_ptr(law_json) }
            .to_str()
            .map_err(|e| Fail(HsStatus::Parse, e.to_string()))?;
        let law: Law = serde_json::from_str(text).map_err(|e| Fail(HsStatus::Parse, e.to_string()))?;
        let y = match law {
            Law::MarchenkoPastur { .. } | Law::AtomGivenLarge { .. } => law.eval(x)?,
            _ => law.cdf(x)?,
        };
        unsafe { write(out, y, "out") }
    })
}

/// Tabulates F1 with Painlevé step `step`; `step <= 0` selects the shared
/// default table.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn hs_tw_new(step: f64, out: *mut *mut HsTwTable) -> HsStatus {
    guard(|| {
        let grid = if step > 0.0 {
            solve_painleve(DEFAULT_X0, DEFAULT_X_MIN, step)?
        } else {
            default_grid()?.clone()
        };
        unsafe { write(out, Box::into_raw(Box::new(HsTwTable(grid))), "out") }
    })
}

/// Releases a Tracy–Widom table.
///
/// # Safety
/// `t` must be NULL or a pointer returned by [`hs_tw_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hs_tw_free(t: *mut HsTwTable) {
    if !t.is_null() {
        drop(unsafe { Box::from_raw(t) });
    }
}

/// `F1(s)`; 0 below the table and the Airy-tail value above it.
///
/// # Safety
/// `t` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn hs_tw_cdf(t: *const HsTwTable, s: f64, out: *mut f64) -> HsStatus {
    guard(|| {
        let t = unsafe { t.as_ref() }.ok_or_else(|| null("table"))?;
        if s.is_nan() {
            return Err(Fail(HsStatus::InvalidArgument, "s is NaN".into()));
        }
        unsafe { write(out, t.0.cdf_extended(s), "out") }
    })
}
