//! C ABI for `lpsparse`.
//!
//! Every function returns an [`LpsStatus`]; results are written through out
//! pointers. Operators and problems are opaque handles created by
//! `lps_*_new` and released with the matching `lps_*_free`. After a failure
//! `lps_last_error_message` describes it (per thread).

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use lpsparse::error::Error;
use lpsparse::experiments::fit_loglog_slope;
use lpsparse::operators::{DenseOperator, DiagonalOperator, ForwardOperator, LinearOperator};
use lpsparse::penalty::{kappa, WeightedPenalty};
use lpsparse::seqspace::{TruncatedSequence, WeightSequence};
use lpsparse::solvers::{solve_diagonal, solve_iterative, IterativeOptions, RegularizedProblem};
use lpsparse::thresholding::{effective_threshold, oracle_threshold, threshold, ThresholdSpec};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Divergence = 4,
    /// `p < 1` with a non-diagonal operator.
    Unsupported = 5,
    /// The iteration limit was reached; outputs hold the last iterate.
    NotConverged = 6,
    Panic = 7,
}

/// Opaque forward operator.
pub struct LpsOperator(ForwardOperator);

/// Opaque regularized problem (operator, data, alpha, penalty).
pub struct LpsProblem(RegularizedProblem);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpsSolveInfo {
    pub objective: f64,
    pub iterations: usize,
    /// NaN when no certificate exists (`p < 1`).
    pub certificate_residual: f64,
    pub converged: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> LpsStatus {
    match e {
        Error::DimensionMismatch { .. } => LpsStatus::DimensionMismatch,
        Error::Divergence(_) => LpsStatus::Divergence,
        Error::Unsupported(_) => LpsStatus::Unsupported,
        _ => LpsStatus::InvalidArgument,
    }
}

fn fail(e: Error) -> LpsStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> LpsStatus {
    set_error(format!("null pointer: {what}"));
    LpsStatus::NullPointer
}

fn guard<F: FnOnce() -> LpsStatus>(f: F) -> LpsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic".into());
            LpsStatus::Panic
        }
    }
}

/// Borrows `len` doubles; a null pointer is only accepted for `len == 0`.
unsafe fn input<'a>(p: *const f64, len: usize) -> Option<&'a [f64]> {
    if len == 0 {
        return Some(&[]);
    }
    if p.is_null() {
        None
    } else {
        Some(slice::from_raw_parts(p, len))
    }
}

unsafe fn output<'a>(p: *mut f64, len: usize) -> Option<&'a mut [f64]> {
    if len == 0 {
        return Some(&mut []);
    }
    if p.is_null() {
        None
    } else {
        Some(slice::from_raw_parts_mut(p, len))
    }
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes) and returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn lps_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// `H^p_alpha(x)`.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn lps_threshold(p: f64, alpha: f64, x: f64, out: *mut f64) -> LpsStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        if !x.is_finite() {
            return fail(Error::InvalidParameter(format!("x must be finite, got {x}")));
        }
        match ThresholdSpec::new(p, alpha) {
            Ok(s) => {
                *out = threshold(&s, x);
                LpsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Jump location of `H^p_alpha` for `0 <= p < 1`.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn lps_effective_threshold(p: f64, alpha: f64, out: *mut f64) -> LpsStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        match ThresholdSpec::new(p, alpha).and_then(|s| effective_threshold(&s)) {
            Ok(v) => {
                *out = v;
                LpsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Grid minimizer of `(y - x)^2 + alpha |y|^p` over `grid_points` points in
/// `[-grid_halfwidth, grid_halfwidth]`.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn lps_oracle_threshold(
    p: f64,
    alpha: f64,
    x: f64,
    grid_halfwidth: f64,
    grid_points: usize,
    out: *mut f64,
) -> LpsStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        match ThresholdSpec::new(p, alpha).and_then(|s| oracle_threshold(&s, x, grid_halfwidth, grid_points)) {
            Ok(v) => {
                *out = v;
                LpsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// `kappa(p, C, L)` of the lower bound on the Bregman distance.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn lps_kappa(p: f64, c: f64, l: f64, out: *mut f64) -> LpsStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        match kappa(p, c, l) {
            Ok(v) => {
                *out = v;
                LpsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Least-squares slope of `log ys` against `log xs`.
///
/// # Safety
/// `xs` and `ys` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lps_fit_loglog_slope(xs: *const f64, ys: *const f64, len: usize, out: *mut f64) -> LpsStatus {
    guard(|| {
        let (Some(xs), Some(ys)) = (input(xs, len), input(ys, len)) else {
            return null("xs/ys");
        };
        if out.is_null() {
            return null("out");
        }
        match fit_loglog_slope(xs, ys) {
            Ok(v) => {
                *out = v;
                LpsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

fn boxed<T>(v: T, out: *mut *mut T) -> LpsStatus {
    // SAFETY: callers check `out` for null first
    unsafe { *out = Box::into_raw(Box::new(v)) };
    LpsStatus::Ok
}

/// Dense `m x n` operator from a row-major matrix.
///
/// # Safety
/// `row_major` must point to `m * n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lps_operator_dense_new(
    m: usize,
    n: usize,
    row_major: *const f64,
    out: *mut *mut LpsOperator,
) -> LpsStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let Some(len) = m.checked_mul(n) else {
            return fail(Error::InvalidParameter("m * n overflows".into()));
        };
        let Some(a) = input(row_major, len) else {
            return null("row_major");
        };
        match DenseOperator::from_rows(m, n, a) {
            Ok(op) => boxed(LpsOperator(op.into()), out),
            Err(e) => fail(e),
        }
    })
}

/// Diagonal operator `(K u)_k = sigma_k u_k`.
///
/// # Safety
/// `sigma` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lps_operator_diagonal_new(
    n: usize,
    sigma: *const f64,
    out: *mut *mut LpsOperator,
) -> LpsStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let Some(s) = input(sigma, n) else {
            return null("sigma");
        };
        match DiagonalOperator::new(s.to_vec()) {
            Ok(op) => boxed(LpsOperator(op.into()), out),
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `op` must be null or a handle from `lps_operator_*_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lps_operator_free(op: *mut LpsOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Output and input dimensions `(m, n)`.
///
/// # Safety
/// `op` must be a live handle; `m` and `n` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lps_operator_dims(op: *const LpsOperator, m: *mut usize, n: *mut usize) -> LpsStatus {
    guard(|| {
        let Some(op) = op.as_ref() else {
            return null("op");
        };
        if m.is_null() || n.is_null() {
            return null("m/n");
        }
        *m = op.0.output_dim();
        *n = op.0.input_dim();
        LpsStatus::Ok
    })
}

/// Spectral norm `||K||`.
///
/// # Safety
/// `op` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lps_operator_norm(op: *const LpsOperator, out: *mut f64) -> LpsStatus {
    guard(|| {
        let Some(op) = op.as_ref() else {
            return null("op");
        };
        if out.is_null() {
            return null("out");
        }
        *out = op.0.operator_norm();
        LpsStatus::Ok
    })
}

/// `out = K u`.
///
/// # Safety
/// `u` must hold `n_in` doubles and `out` room for `m_out` doubles.
#[no_mangle]
pub unsafe extern "C" fn lps_operator_apply(
    op: *const LpsOperator,
    u: *const f64,
    n_in: usize,
    out: *mut f64,
    m_out: usize,
) -> LpsStatus {
    guard(|| {
        let Some(op) = op.as_ref() else {
            return null("op");
        };
        let (Some(u), Some(dst)) = (input(u, n_in), output(out, m_out)) else {
            return null("u/out");
        };
        if m_out != op.0.output_dim() {
            return fail(Error::DimensionMismatch { expected: op.0.output_dim(), got: m_out });
        }
        let r = TruncatedSequence::new(u.to_vec()).and_then(|u| op.0.apply(&u));
        match r {
            Ok(v) => {
                dst.copy_from_slice(&v);
                LpsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// `out = K* r`.
///
/// # Safety
/// `r` must hold `m_in` doubles and `out` room for `n_out` doubles.
#[no_mangle]
pub unsafe extern "C" fn lps_operator_adjoint_apply(
    op: *const LpsOperator,
    r: *const f64,
    m_in: usize,
    out: *mut f64,
    n_out: usize,
) -> LpsStatus {
    guard(|| {
        let Some(op) = op.as_ref() else {
            return null("op");
        };
        let (Some(r), Some(dst)) = (input(r, m_in), output(out, n_out)) else {
            return null("r/out");
        };
        if n_out != op.0.input_dim() {
            return fail(Error::DimensionMismatch { expected: op.0.input_dim(), got: n_out });
        }
        match op.0.adjoint_apply(r) {
            Ok(v) => {
                dst.copy_from_slice(v.as_slice());
                LpsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Problem `||K u - g||^2 + alpha sum_k w_k |u_k|^p`. The operator is copied,
/// so `op` may be freed afterwards. `weights` may be null for `w = 1`;
/// otherwise it holds `n` entries, `n` the operator's input dimension.
///
/// # Safety
/// `data` must hold `m` doubles, `weights` null or `n` doubles, `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn lps_problem_new(
    op: *const LpsOperator,
    data: *const f64,
    m: usize,
    alpha: f64,
    p: f64,
    weights: *const f64,
    n: usize,
    out: *mut *mut LpsProblem,
) -> LpsStatus {
    guard(|| {
        let Some(op) = op.as_ref() else {
            return null("op");
        };
        if out.is_null() {
            return null("out");
        }
        let Some(g) = input(data, m) else {
            return null("data");
        };
        if n != op.0.input_dim() {
            return fail(Error::DimensionMismatch { expected: op.0.input_dim(), got: n });
        }
        let w = if weights.is_null() {
            WeightSequence::uniform(n, 1.0)
        } else {
            WeightSequence::new(slice::from_raw_parts(weights, n).to_vec())
        };
        let prob = w
            .and_then(|w| WeightedPenalty::new(p, w))
            .and_then(|pen| RegularizedProblem::new(op.0.clone(), g.to_vec(), 0.0, alpha, pen));
        match prob {
            Ok(pr) => boxed(LpsProblem(pr), out),
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `prob` must be null or a handle from `lps_problem_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lps_problem_free(prob: *mut LpsProblem) {
    if !prob.is_null() {
        drop(Box::from_raw(prob));
    }
}

/// Value of the functional at `u`.
///
/// # Safety
/// `prob` must be a live handle, `u` must hold `n` doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lps_problem_objective(
    prob: *const LpsProblem,
    u: *const f64,
    n: usize,
    out: *mut f64,
) -> LpsStatus {
    guard(|| {
        let Some(prob) = prob.as_ref() else {
            return null("prob");
        };
        let Some(u) = input(u, n) else {
            return null("u");
        };
        if out.is_null() {
            return null("out");
        }
        match TruncatedSequence::new(u.to_vec()).and_then(|u| prob.0.objective(&u)) {
            Ok(v) => {
                *out = v;
                LpsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

unsafe fn write_solution(res: lpsparse::solvers::SolveResult, u_out: &mut [f64], info: *mut LpsSolveInfo) -> LpsStatus {
    if u_out.len() != res.u.len() {
        return fail(Error::DimensionMismatch { expected: res.u.len(), got: u_out.len() });
    }
    u_out.copy_from_slice(res.u.as_slice());
    if !info.is_null() {
        *info = LpsSolveInfo {
            objective: res.objective,
            iterations: res.iterations,
            certificate_residual: res.certificate_residual.unwrap_or(f64::NAN),
            converged: res.converged,
        };
    }
    if res.converged {
        LpsStatus::Ok
    } else {
        set_error("iteration limit reached before the tolerance was met".into());
        LpsStatus::NotConverged
    }
}

/// Exact minimizer for a diagonal operator.
///
/// # Safety
/// `u_out` must have room for `n` doubles; `info` null or writable.
#[no_mangle]
pub unsafe extern "C" fn lps_solve_diagonal(
    prob: *const LpsProblem,
    u_out: *mut f64,
    n: usize,
    info: *mut LpsSolveInfo,
) -> LpsStatus {
    guard(|| {
        let Some(prob) = prob.as_ref() else {
            return null("prob");
        };
        let Some(dst) = output(u_out, n) else {
            return null("u_out");
        };
        match solve_diagonal(&prob.0) {
            Ok(res) => write_solution(res, dst, info),
            Err(e) => fail(e),
        }
    })
}

/// Iterated thresholding from `u = 0`.
///
/// # Safety
/// `u_out` must have room for `n` doubles; `info` null or writable.
#[no_mangle]
pub unsafe extern "C" fn lps_solve_iterative(
    prob: *const LpsProblem,
    max_iter: usize,
    tol: f64,
    u_out: *mut f64,
    n: usize,
    info: *mut LpsSolveInfo,
) -> LpsStatus {
    guard(|| {
        let Some(prob) = prob.as_ref() else {
            return null("prob");
        };
        let Some(dst) = output(u_out, n) else {
            return null("u_out");
        };
        match solve_iterative(&prob.0, None, IterativeOptions { max_iter, tol }) {
            Ok(res) => write_solution(res, dst, info),
            Err(e) => fail(e),
        }
    })
}
