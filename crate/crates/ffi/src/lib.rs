//! C ABI over `spinrho`.
//!
//! Handles are opaque and owned by the caller once returned; free them with
//! the matching `*_free`. Every fallible call returns a [`SpinrhoStatus`] and
//! leaves a message for [`spinrho_last_error`] on failure. Array outputs
//! follow one convention: the caller passes a buffer and its capacity, the
//! library writes `min(len, cap)` items and always stores the full length in
//! `out_len`, so a first call with `cap = 0` sizes the buffer.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use spinrho::io::SystemFile;
use spinrho::sse::SolveOutcome;
use spinrho::sum_rules::torque_sum_rule;
use spinrho::total_spin::coefficients_for_spin;
use spinrho::{build_reduced_matrix, solve, DenseLimit, Error, SolveTolerances, SpinSystem};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinrhoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidSystem = 3,
    DenseLimitExceeded = 4,
    FieldsNotSupported = 5,
    Numerical = 6,
    Utf8 = 7,
    Panic = 8,
}

/// A Heisenberg cluster with optional local fields.
pub struct SpinrhoSystem {
    inner: SpinSystem,
}

/// Solved levels of a field-free system.
pub struct SpinrhoSpectrum {
    outcome: SolveOutcome,
    labels: Vec<Vec<(usize, usize)>>,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut e = e.borrow_mut();
        e.clear();
        e.extend(msg.bytes().filter(|&b| b != 0));
    });
}

struct Failure(SpinrhoStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::DenseLimitExceeded { .. } => SpinrhoStatus::DenseLimitExceeded,
            Error::FieldsNotSupported { .. } => SpinrhoStatus::FieldsNotSupported,
            Error::Numerical(_) => SpinrhoStatus::Numerical,
            Error::InvalidSystem(_) | Error::RepeatedIndex { .. } | Error::IndexOutOfRange { .. } => {
                SpinrhoStatus::InvalidSystem
            }
            _ => SpinrhoStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SpinrhoStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SpinrhoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpinrhoStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal panic: {msg}"));
            SpinrhoStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn copy_out<T: Copy>(items: &[T], buf: *mut T, cap: usize, out_len: *mut usize) -> Result<(), Failure> {
    if out_len.is_null() {
        return Err(null("out_len"));
    }
    let n = items.len().min(cap);
    if n > 0 {
        if buf.is_null() {
            return Err(null("buffer"));
        }
        ptr::copy_nonoverlapping(items.as_ptr(), buf, n);
    }
    *out_len = items.len();
    Ok(())
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL terminated,
/// truncated to `cap`) and returns its full length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn spinrho_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = e.len().min(cap - 1);
            ptr::copy_nonoverlapping(e.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn spinrho_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates an `n`-spin system with all couplings zero.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn spinrho_system_new(n_spins: usize, out: *mut *mut SpinrhoSystem) -> SpinrhoStatus {
    guard(|| store(out, SpinrhoSystem { inner: SpinSystem::new(n_spins)? }))
}

/// Parses a TOML system description (`n`, `couplings = [{ i, j, J }]`,
/// optional `fields`).
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn spinrho_system_from_toml(text: *const c_char, out: *mut *mut SpinrhoSystem) -> SpinrhoStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|e| Failure(SpinrhoStatus::Utf8, format!("system text is not UTF-8: {e}")))?;
        let sys = SystemFile::parse(text)?.to_system()?;
        store(out, SpinrhoSystem { inner: sys })
    })
}

/// # Safety
/// `sys` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn spinrho_system_free(sys: *mut SpinrhoSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// # Safety
/// `sys` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn spinrho_system_n_spins(sys: *const SpinrhoSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.inner.n_spins())
}

/// Sets `J_ij` (1-based, `i != j`).
///
/// # Safety
/// `sys` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn spinrho_system_set_coupling(sys: *mut SpinrhoSystem, i: usize, j: usize, value: f64) -> SpinrhoStatus {
    guard(|| {
        let sys = sys.as_mut().ok_or_else(|| null("sys"))?;
        Ok(sys.inner.set_coupling(i, j, value)?)
    })
}

/// Sets the field on `site` (1-based) from three doubles.
///
/// # Safety
/// `sys` must be a live handle and `h` point to three doubles.
#[no_mangle]
pub unsafe extern "C" fn spinrho_system_set_field(sys: *mut SpinrhoSystem, site: usize, h: *const f64) -> SpinrhoStatus {
    guard(|| {
        let sys = sys.as_mut().ok_or_else(|| null("sys"))?;
        if h.is_null() {
            return Err(null("h"));
        }
        let h = [*h, *h.add(1), *h.add(2)];
        Ok(sys.inner.set_field(site, h)?)
    })
}

/// Builds and solves the reduced eigenproblem. `tol` is used for both
/// clustering and the constraint filter; pass 0 for the default 1e-8.
///
/// # Safety
/// `sys` must be a live handle and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn spinrho_spectrum_solve(
    sys: *const SpinrhoSystem,
    tol: f64,
    out: *mut *mut SpinrhoSpectrum,
) -> SpinrhoStatus {
    guard(|| {
        let sys = as_ref(sys, "sys")?;
        let tol = if tol == 0.0 { SolveTolerances::default() } else { SolveTolerances { cluster: tol, constraint: tol } };
        let prob = build_reduced_matrix(&sys.inner)?;
        let outcome = solve(&prob, tol)?;
        let labels = prob.catalog().entries().iter().map(|m| m.pairs().to_vec()).collect();
        store(out, SpinrhoSpectrum { outcome, labels })
    })
}

/// # Safety
/// `spec` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn spinrho_spectrum_free(spec: *mut SpinrhoSpectrum) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Accepted energies in ascending order.
///
/// # Safety
/// `spec` must be a live handle; `buf` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn spinrho_spectrum_energies(
    spec: *const SpinrhoSpectrum,
    buf: *mut f64,
    cap: usize,
    out_len: *mut usize,
) -> SpinrhoStatus {
    guard(|| copy_out(&as_ref(spec, "spec")?.outcome.energies(), buf, cap, out_len))
}

/// Eigenvalues of the reduced matrix removed by the constraint filter.
///
/// # Safety
/// As for [`spinrho_spectrum_energies`].
#[no_mangle]
pub unsafe extern "C" fn spinrho_spectrum_rejected(
    spec: *const SpinrhoSpectrum,
    buf: *mut f64,
    cap: usize,
    out_len: *mut usize,
) -> SpinrhoStatus {
    guard(|| {
        let e: Vec<f64> = as_ref(spec, "spec")?.outcome.rejected.iter().map(|r| r.energy).collect();
        copy_out(&e, buf, cap, out_len)
    })
}

/// Number of basis operators, i.e. the length of coefficient vectors.
///
/// # Safety
/// `spec` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn spinrho_spectrum_basis_size(spec: *const SpinrhoSpectrum) -> usize {
    spec.as_ref().map_or(0, |s| s.labels.len())
}

/// Pairs of basis operator `index` as a flat `i1, j1, i2, j2, ...` array.
///
/// # Safety
/// `spec` must be a live handle; `buf` must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn spinrho_spectrum_basis_label(
    spec: *const SpinrhoSpectrum,
    index: usize,
    buf: *mut usize,
    cap: usize,
    out_len: *mut usize,
) -> SpinrhoStatus {
    guard(|| {
        let spec = as_ref(spec, "spec")?;
        let pairs = spec.labels.get(index).ok_or_else(|| {
            Failure(SpinrhoStatus::InvalidArgument, format!("basis index {index} out of range 0..{}", spec.labels.len()))
        })?;
        let flat: Vec<usize> = pairs.iter().flat_map(|&(i, j)| [i, j]).collect();
        copy_out(&flat, buf, cap, out_len)
    })
}

/// Coefficients (identity coefficient 1) of the G-invariant solution of
/// `level`, which is the level's eigenprojector divided by its multiplicity.
///
/// # Safety
/// `spec` must be a live handle; `buf` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn spinrho_spectrum_g_invariant(
    spec: *const SpinrhoSpectrum,
    level: usize,
    buf: *mut f64,
    cap: usize,
    out_len: *mut usize,
) -> SpinrhoStatus {
    guard(|| {
        let spec = as_ref(spec, "spec")?;
        let levels = &spec.outcome.levels;
        let lv = levels.get(level).ok_or_else(|| {
            Failure(SpinrhoStatus::InvalidArgument, format!("level {level} out of range 0..{}", levels.len()))
        })?;
        let g = lv
            .g_invariant()
            .ok_or_else(|| Failure(SpinrhoStatus::Numerical, format!("level {level} has no G-invariant solution")))?;
        copy_out(g.operator.coeffs().as_slice(), buf, cap, out_len)
    })
}

/// Coefficients `a_0 .. a_{floor(N/2)}` of the total-spin projector for
/// `S = two_s / 2`.
///
/// # Safety
/// `buf` must hold `cap` doubles and `out_len` be valid.
#[no_mangle]
pub unsafe extern "C" fn spinrho_total_spin_coefficients(
    n_spins: usize,
    two_s: u32,
    buf: *mut f64,
    cap: usize,
    out_len: *mut usize,
) -> SpinrhoStatus {
    guard(|| {
        let op = coefficients_for_spin(n_spins, two_s as f64 / 2.0)?;
        copy_out(op.coeffs(), buf, cap, out_len)
    })
}

/// Largest component of `⟨(h_i + Σ_j J_ij σ_j) × σ_i⟩` in the thermal
/// state at `beta`; zero up to rounding.
///
/// # Safety
/// `sys` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn spinrho_torque_residual(
    sys: *const SpinrhoSystem,
    site: usize,
    beta: f64,
    out: *mut f64,
) -> SpinrhoStatus {
    guard(|| {
        let sys = as_ref(sys, "sys")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let limit = DenseLimit::from_env()?;
        *out = torque_sum_rule(&sys.inner, site, beta, limit)?.residual;
        Ok(())
    })
}
