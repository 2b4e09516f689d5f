//! C ABI for the adgamp solver.
//!
//! The interface is handle-based: `adgamp_problem_new` allocates an opaque
//! problem object that owns the measurement matrix, the per-coordinate
//! channel lists, and the solver options; `adgamp_problem_solve` runs the
//! solver and stores the report inside the handle, from which the result
//! getters copy data out. Every function returns an `AdgampStatus` code (or
//! a pointer that is null on failure); the most recent failure message is
//! available per-thread via `adgamp_last_error_message`.
//!
//! All functions are safe to call from multiple threads as long as each
//! handle is used by one thread at a time.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use adgamp::channels::{InputChannel, OutputChannel};
use adgamp::engine::{self, SolveReport, SolverOptions};
use adgamp::linop::DenseOperator;
use adgamp::meanremoval;
use nalgebra::DMatrix;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdgampStatus {
    /// Success.
    AdgampOk = 0,
    /// A required pointer argument was null.
    AdgampNullPointer = 1,
    /// An argument value was out of range (dimensions, lengths, parameters).
    AdgampInvalidArgument = 2,
    /// The damping configuration failed validation.
    AdgampInvalidConfig = 3,
    /// The solver aborted with a numerical breakdown.
    AdgampBreakdown = 4,
    /// The solver aborted after too many consecutive rejected attempts.
    AdgampTooManyFails = 5,
    /// A channel evaluation failed (invalid channel parameters).
    AdgampChannelError = 6,
    /// Results were requested before a successful solve.
    AdgampNotSolved = 7,
    /// The callee panicked; the handle is left unchanged.
    AdgampInternalError = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().map(|c| if c == '\0' { ' ' } else { c }).collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(sanitized).unwrap());
}

/// Returns the error message of the most recent failure on this thread.
/// The pointer is owned by the library and valid until the next failing
/// call on the same thread; never free it.
#[no_mangle]
pub extern "C" fn adgamp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Opaque problem handle.
pub struct AdgampProblem {
    a: DMatrix<f64>,
    in_ch: Vec<InputChannel>,
    out_ch: Vec<OutputChannel>,
    opts: SolverOptions,
    mean_removal: bool,
    report: Option<SolveReport>,
    x_hat: Vec<f64>,
}

macro_rules! nonnull {
    ($p:expr) => {
        match unsafe { $p.as_mut() } {
            Some(r) => r,
            None => {
                set_error("null handle");
                return AdgampStatus::AdgampNullPointer;
            }
        }
    };
}

/// Allocates a problem for an `m x n` dense matrix given in row-major order
/// (`a[i*n + j]` is entry (i, j)). Channels default to a standard Gaussian
/// prior and a unit-variance AWGN likelihood on zero observations; options
/// default to adaptive damping with the cost check enabled. Returns null on
/// invalid input.
///
/// # Safety
/// `a` must point to at least `m * n` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn adgamp_problem_new(
    m: usize,
    n: usize,
    a: *const f64,
) -> *mut AdgampProblem {
    if a.is_null() {
        set_error("null matrix pointer");
        return std::ptr::null_mut();
    }
    if m == 0 || n == 0 || m.checked_mul(n).is_none() {
        set_error("matrix dimensions must be positive");
        return std::ptr::null_mut();
    }
    let coeffs = unsafe { slice::from_raw_parts(a, m * n) };
    if coeffs.iter().any(|v| !v.is_finite()) {
        set_error("matrix entries must be finite");
        return std::ptr::null_mut();
    }
    let problem = AdgampProblem {
        a: DMatrix::from_row_slice(m, n, coeffs),
        in_ch: vec![InputChannel::Gauss { mean: 0.0, var: 1.0 }; n],
        out_ch: vec![OutputChannel::Awgn { y: 0.0, noise_var: 1.0 }; m],
        opts: SolverOptions::default(),
        mean_removal: false,
        report: None,
        x_hat: Vec::new(),
    };
    Box::into_raw(Box::new(problem))
}

/// Frees a problem handle. Passing null is a no-op.
///
/// # Safety
/// `p` must be a pointer returned by `adgamp_problem_new` that has not been
/// freed already.
#[no_mangle]
pub unsafe extern "C" fn adgamp_problem_free(p: *mut AdgampProblem) {
    if !p.is_null() {
        drop(unsafe { Box::from_raw(p) });
    }
}

fn check_channel<T, F: FnOnce() -> T>(make: F, validate: fn(&T) -> bool) -> Option<T> {
    let ch = make();
    if validate(&ch) {
        Some(ch)
    } else {
        None
    }
}

/// Sets every input coordinate to a Bernoulli-Gaussian (spike-and-slab)
/// prior with activity rate `tau` and active component `N(mean, var)`.
///
/// # Safety
/// `p` must be a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn adgamp_problem_set_input_bernoulli_gauss(
    p: *mut AdgampProblem,
    tau: f64,
    mean: f64,
    var: f64,
) -> AdgampStatus {
    let problem = nonnull!(p);
    let ch = check_channel(
        || InputChannel::BernoulliGauss { tau, active_mean: mean, active_var: var },
        |c| c.validate().is_ok(),
    );
    match ch {
        Some(c) => {
            problem.in_ch = vec![c; problem.a.ncols()];
            AdgampStatus::AdgampOk
        }
        None => {
            set_error("invalid bernoulli-gauss parameters");
            AdgampStatus::AdgampInvalidArgument
        }
    }
}

/// Sets every input coordinate to a Gaussian `N(mean, var)` prior.
///
/// # Safety
/// `p` must be a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn adgamp_problem_set_input_gauss(
    p: *mut AdgampProblem,
    mean: f64,
    var: f64,
) -> AdgampStatus {
    let problem = nonnull!(p);
    match check_channel(|| InputChannel::Gauss { mean, var }, |c| c.validate().is_ok()) {
        Some(c) => {
            problem.in_ch = vec![c; problem.a.ncols()];
            AdgampStatus::AdgampOk
        }
        None => {
            set_error("invalid gaussian prior parameters");
            AdgampStatus::AdgampInvalidArgument
        }
    }
}

/// Sets every input coordinate to a Laplace prior with rate `lambda`.
///
/// # Safety
/// `p` must be a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn adgamp_problem_set_input_laplace(
    p: *mut AdgampProblem,
    lambda: f64,
) -> AdgampStatus {
    let problem = nonnull!(p);
    match check_channel(|| InputChannel::Laplace { lambda }, |c| c.validate().is_ok()) {
        Some(c) => {
            problem.in_ch = vec![c; problem.a.ncols()];
            AdgampStatus::AdgampOk
        }
        None => {
            set_error("invalid laplace parameter");
            AdgampStatus::AdgampInvalidArgument
        }
    }
}

unsafe fn observations<'a>(
    y: *const f64,
    len: usize,
    m: usize,
) -> Result<&'a [f64], AdgampStatus> {
    if y.is_null() {
        set_error("null observation pointer");
        return Err(AdgampStatus::AdgampNullPointer);
    }
    if len != m {
        set_error("observation length does not match the matrix row count");
        return Err(AdgampStatus::AdgampInvalidArgument);
    }
    Ok(unsafe { slice::from_raw_parts(y, len) })
}

/// Sets the likelihood to AWGN: `y_i = z_i + noise`, noise variance
/// `noise_var`. `len` must equal the matrix row count.
///
/// # Safety
/// `p` must be a live problem handle; `y` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn adgamp_problem_set_output_awgn(
    p: *mut AdgampProblem,
    y: *const f64,
    len: usize,
    noise_var: f64,
) -> AdgampStatus {
    let problem = nonnull!(p);
    let obs = match unsafe { observations(y, len, problem.a.nrows()) } {
        Ok(o) => o,
        Err(s) => return s,
    };
    if !(noise_var > 0.0) {
        set_error("noise variance must be positive");
        return AdgampStatus::AdgampInvalidArgument;
    }
    problem.out_ch = obs.iter().map(|&yi| OutputChannel::Awgn { y: yi, noise_var }).collect();
    AdgampStatus::AdgampOk
}

/// Sets the likelihood to a two-component Gaussian mixture: with probability
/// `1 - pi_out` the noise variance is `var_small`, otherwise `var_large`.
///
/// # Safety
/// `p` must be a live problem handle; `y` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn adgamp_problem_set_output_mixture(
    p: *mut AdgampProblem,
    y: *const f64,
    len: usize,
    pi_out: f64,
    var_small: f64,
    var_large: f64,
) -> AdgampStatus {
    let problem = nonnull!(p);
    let obs = match unsafe { observations(y, len, problem.a.nrows()) } {
        Ok(o) => o,
        Err(s) => return s,
    };
    let template = OutputChannel::Mixture { y: 0.0, pi_out, var_small, var_large };
    if template.validate().is_err() {
        set_error("invalid mixture parameters");
        return AdgampStatus::AdgampInvalidArgument;
    }
    problem.out_ch = obs
        .iter()
        .map(|&yi| OutputChannel::Mixture { y: yi, pi_out, var_small, var_large })
        .collect();
    AdgampStatus::AdgampOk
}

/// Sets the likelihood to one-bit observations `y_i = sgn(z_i)`; each entry
/// of `y` must be -1.0 or +1.0.
///
/// # Safety
/// `p` must be a live problem handle; `y` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn adgamp_problem_set_output_sign(
    p: *mut AdgampProblem,
    y: *const f64,
    len: usize,
) -> AdgampStatus {
    let problem = nonnull!(p);
    let obs = match unsafe { observations(y, len, problem.a.nrows()) } {
        Ok(o) => o,
        Err(s) => return s,
    };
    if obs.iter().any(|&v| v != 1.0 && v != -1.0) {
        set_error("sign observations must be -1 or +1");
        return AdgampStatus::AdgampInvalidArgument;
    }
    problem.out_ch = obs.iter().map(|&yi| OutputChannel::Sign { y: yi }).collect();
    AdgampStatus::AdgampOk
}

/// Overrides the damping controls. `t_max` is the iteration cap, `epsilon`
/// the relative stopping tolerance, `t_beta` the cost-window length,
/// `beta_min`/`beta_max` the damping-factor bounds, and `g_pass`/`g_fail`
/// the growth/shrink factors applied after accepted/rejected attempts.
///
/// # Safety
/// `p` must be a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn adgamp_problem_set_damping(
    p: *mut AdgampProblem,
    t_max: usize,
    epsilon: f64,
    t_beta: usize,
    beta_min: f64,
    beta_max: f64,
    g_pass: f64,
    g_fail: f64,
) -> AdgampStatus {
    let problem = nonnull!(p);
    let mut damping = problem.opts.damping.clone();
    damping.t_max = t_max;
    damping.epsilon = epsilon;
    damping.t_beta = t_beta;
    damping.beta_min = beta_min;
    damping.beta_max = beta_max;
    damping.g_pass = g_pass;
    damping.g_fail = g_fail;
    if damping.validate().is_err() {
        set_error("invalid damping configuration");
        return AdgampStatus::AdgampInvalidConfig;
    }
    problem.opts.damping = damping;
    AdgampStatus::AdgampOk
}

/// Enables or disables the adaptive cost check. With the check disabled and
/// `beta_min = beta_max = 1` the solver reproduces the original undamped
/// recursion.
///
/// # Safety
/// `p` must be a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn adgamp_problem_set_cost_check(
    p: *mut AdgampProblem,
    enabled: bool,
) -> AdgampStatus {
    let problem = nonnull!(p);
    problem.opts.cost_check = enabled;
    AdgampStatus::AdgampOk
}

/// Enables or disables the mean-removal wrapper (centering the matrix and
/// solving the augmented system).
///
/// # Safety
/// `p` must be a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn adgamp_problem_set_mean_removal(
    p: *mut AdgampProblem,
    enabled: bool,
) -> AdgampStatus {
    let problem = nonnull!(p);
    problem.mean_removal = enabled;
    AdgampStatus::AdgampOk
}

fn solve_inner(problem: &mut AdgampProblem) -> AdgampStatus {
    let outcome = if problem.mean_removal {
        meanremoval::run_mean_removed(
            &problem.a,
            &problem.in_ch,
            &problem.out_ch,
            problem.opts.clone(),
        )
        .map(|r| (r.solution.x_hat, r.inner))
    } else {
        let op = DenseOperator::new(problem.a.clone());
        engine::run(&op, &problem.in_ch, &problem.out_ch, problem.opts.clone()).map(|r| {
            let x = r.x_hat.clone();
            (x, r)
        })
    };
    match outcome {
        Ok((x_hat, report)) => {
            problem.x_hat = x_hat;
            problem.report = Some(report);
            AdgampStatus::AdgampOk
        }
        Err(e) => {
            set_error(&format!("{e}"));
            problem.report = None;
            problem.x_hat.clear();
            match e {
                engine::SolveError::TooManyFails { .. } => AdgampStatus::AdgampTooManyFails,
                engine::SolveError::Breakdown { .. } => AdgampStatus::AdgampBreakdown,
                engine::SolveError::InvalidConfig => AdgampStatus::AdgampInvalidConfig,
                engine::SolveError::DimensionMismatch => AdgampStatus::AdgampInvalidArgument,
                engine::SolveError::Channel(_) => AdgampStatus::AdgampChannelError,
            }
        }
    }
}

/// Runs the solver on the configured problem. On success the result getters
/// become available; on failure the previous result (if any) is cleared.
///
/// # Safety
/// `p` must be a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn adgamp_problem_solve(p: *mut AdgampProblem) -> AdgampStatus {
    let problem = nonnull!(p);
    match catch_unwind(AssertUnwindSafe(|| solve_inner(problem))) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic during solve");
            AdgampStatus::AdgampInternalError
        }
    }
}

/// Copies the recovered signal estimate into `out` (length must equal the
/// matrix column count).
///
/// # Safety
/// `p` must be a live problem handle; `out` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn adgamp_problem_x_hat(
    p: *mut AdgampProblem,
    out: *mut f64,
    len: usize,
) -> AdgampStatus {
    let problem = nonnull!(p);
    if problem.report.is_none() {
        set_error("no result available; call adgamp_problem_solve first");
        return AdgampStatus::AdgampNotSolved;
    }
    if out.is_null() {
        set_error("null output pointer");
        return AdgampStatus::AdgampNullPointer;
    }
    if len != problem.x_hat.len() {
        set_error("output length does not match the matrix column count");
        return AdgampStatus::AdgampInvalidArgument;
    }
    unsafe { slice::from_raw_parts_mut(out, len) }.copy_from_slice(&problem.x_hat);
    AdgampStatus::AdgampOk
}

macro_rules! report_getter {
    ($(#[$doc:meta])* $name:ident, $ty:ty, $field:expr) => {
        $(#[$doc])*
        ///
        /// # Safety
        /// `p` must be a live problem handle; `out` must be writable.
        #[no_mangle]
        pub unsafe extern "C" fn $name(p: *mut AdgampProblem, out: *mut $ty) -> AdgampStatus {
            let problem = nonnull!(p);
            let Some(report) = &problem.report else {
                set_error("no result available; call adgamp_problem_solve first");
                return AdgampStatus::AdgampNotSolved;
            };
            if out.is_null() {
                set_error("null output pointer");
                return AdgampStatus::AdgampNullPointer;
            }
            #[allow(clippy::redundant_closure_call)]
            unsafe {
                *out = ($field)(report);
            }
            AdgampStatus::AdgampOk
        }
    };
}

report_getter!(
    /// Number of accepted iterations of the last solve.
    adgamp_problem_iterations,
    usize,
    |r: &SolveReport| r.iterations
);
report_getter!(
    /// Number of rejected (retried) attempts of the last solve.
    adgamp_problem_retries,
    usize,
    |r: &SolveReport| r.fails
);
report_getter!(
    /// Whether the relative-change stopping rule fired (vs. the iteration cap).
    adgamp_problem_converged,
    bool,
    |r: &SolveReport| r.converged
);
report_getter!(
    /// Final accepted iteration cost of the last solve.
    adgamp_problem_final_cost,
    f64,
    |r: &SolveReport| r.final_cost
);

#[cfg(test)]
mod tests {
    use super::*;

    fn lsq_problem() -> (*mut AdgampProblem, Vec<f64>, Vec<f64>) {
        // Small well-posed Gaussian problem with a known dense solution.
        let (m, n) = (12usize, 4usize);
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let a: Vec<f64> = (0..m * n).map(|_| next()).collect();
        let x: Vec<f64> = (0..n).map(|_| next()).collect();
        let y: Vec<f64> = (0..m)
            .map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum::<f64>())
            .collect();
        let p = unsafe { adgamp_problem_new(m, n, a.as_ptr()) };
        assert!(!p.is_null());
        (p, x, y)
    }

    #[test]
    fn solve_recovers_gaussian_solution() {
        let (p, x, y) = lsq_problem();
        unsafe {
            assert_eq!(
                adgamp_problem_set_output_awgn(p, y.as_ptr(), y.len(), 1e-8),
                AdgampStatus::AdgampOk
            );
            assert_eq!(adgamp_problem_set_input_gauss(p, 0.0, 1.0), AdgampStatus::AdgampOk);
            assert_eq!(
                adgamp_problem_set_damping(p, 2000, 1e-10, 0, 0.01, 1.0, 1.1, 0.5),
                AdgampStatus::AdgampOk
            );
            assert_eq!(adgamp_problem_solve(p), AdgampStatus::AdgampOk);
            let mut out = vec![0.0; x.len()];
            assert_eq!(
                adgamp_problem_x_hat(p, out.as_mut_ptr(), out.len()),
                AdgampStatus::AdgampOk
            );
            for (a, b) in out.iter().zip(&x) {
                assert!((a - b).abs() < 1e-4, "{a} vs {b}");
            }
            let mut iters = 0usize;
            assert_eq!(adgamp_problem_iterations(p, &mut iters), AdgampStatus::AdgampOk);
            assert!(iters > 0);
            let mut conv = false;
            assert_eq!(adgamp_problem_converged(p, &mut conv), AdgampStatus::AdgampOk);
            assert!(conv);
            adgamp_problem_free(p);
        }
    }

    #[test]
    fn mean_removal_toggle_solves() {
        let (p, x, y) = lsq_problem();
        unsafe {
            assert_eq!(
                adgamp_problem_set_output_awgn(p, y.as_ptr(), y.len(), 1e-8),
                AdgampStatus::AdgampOk
            );
            assert_eq!(adgamp_problem_set_mean_removal(p, true), AdgampStatus::AdgampOk);
            assert_eq!(
                adgamp_problem_set_damping(p, 2000, 1e-10, 0, 0.01, 1.0, 1.1, 0.5),
                AdgampStatus::AdgampOk
            );
            assert_eq!(adgamp_problem_solve(p), AdgampStatus::AdgampOk);
            let mut out = vec![0.0; x.len()];
            assert_eq!(
                adgamp_problem_x_hat(p, out.as_mut_ptr(), out.len()),
                AdgampStatus::AdgampOk
            );
            for (a, b) in out.iter().zip(&x) {
                assert!((a - b).abs() < 1e-3, "{a} vs {b}");
            }
            adgamp_problem_free(p);
        }
    }

    #[test]
    fn error_paths_report_codes_and_messages() {
        unsafe {
            assert!(adgamp_problem_new(0, 4, [0.0].as_ptr()).is_null());
            assert!(adgamp_problem_new(2, 2, std::ptr::null()).is_null());
            let msg = std::ffi::CStr::from_ptr(adgamp_last_error_message());
            assert!(!msg.to_bytes().is_empty());

            let a = vec![1.0; 4];
            let p = adgamp_problem_new(2, 2, a.as_ptr());
            assert!(!p.is_null());
            assert_eq!(
                adgamp_problem_set_output_awgn(p, a.as_ptr(), 3, 1.0),
                AdgampStatus::AdgampInvalidArgument
            );
            assert_eq!(
                adgamp_problem_set_input_bernoulli_gauss(p, 2.0, 0.0, 1.0),
                AdgampStatus::AdgampInvalidArgument
            );
            assert_eq!(
                adgamp_problem_set_damping(p, 100, 1e-5, 0, 0.5, 0.1, 1.1, 0.5),
                AdgampStatus::AdgampInvalidConfig
            );
            let mut out = [0.0f64; 2];
            assert_eq!(
                adgamp_problem_x_hat(p, out.as_mut_ptr(), 2),
                AdgampStatus::AdgampNotSolved
            );
            let bad_sign = [0.5f64, 1.0];
            assert_eq!(
                adgamp_problem_set_output_sign(p, bad_sign.as_ptr(), 2),
                AdgampStatus::AdgampInvalidArgument
            );
            adgamp_problem_free(p);
            adgamp_problem_free(std::ptr::null_mut());
        }
    }

    #[test]
    fn sparse_recovery_through_ffi() {
        // Bernoulli-Gauss prior with a mixture likelihood, exercising the
        // adaptive path end to end through the C surface.
        let (m, n) = (60usize, 30usize);
        let mut state = 0x51f15eedu64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let a: Vec<f64> = (0..m * n).map(|_| next() / (n as f64).sqrt() * 3.4).collect();
        let x: Vec<f64> = (0..n)
            .map(|i| if i % 5 == 0 { next() * 2.0 } else { 0.0 })
            .collect();
        let y: Vec<f64> = (0..m)
            .map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum::<f64>())
            .collect();
        unsafe {
            let p = adgamp_problem_new(m, n, a.as_ptr());
            assert!(!p.is_null());
            assert_eq!(
                adgamp_problem_set_input_bernoulli_gauss(p, 0.2, 0.0, 1.0),
                AdgampStatus::AdgampOk
            );
            assert_eq!(
                adgamp_problem_set_output_mixture(p, y.as_ptr(), m, 0.05, 1e-8, 1e-2),
                AdgampStatus::AdgampOk
            );
            assert_eq!(adgamp_problem_solve(p), AdgampStatus::AdgampOk);
            let mut out = vec![0.0; n];
            assert_eq!(adgamp_problem_x_hat(p, out.as_mut_ptr(), n), AdgampStatus::AdgampOk);
            let num: f64 = out.iter().zip(&x).map(|(u, v)| (u - v) * (u - v)).sum();
            let den: f64 = x.iter().map(|v| v * v).sum();
            assert!(num / den < 1e-3, "nmse ratio {}", num / den);
            adgamp_problem_free(p);
        }
    }
}
