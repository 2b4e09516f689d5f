//! The adaptively damped GAMP main loop: initialization, one damped
//! iteration, the pass/fail damping controller, and termination.
//!
//! The solver exposes a `step` API so callers (and tests) can observe the
//! accepted state between attempts; `run` is the convenience loop. A failed
//! attempt never mutates the accepted state, it only shrinks the damping
//! factor and retries the same iteration.

use crate::channels::{ChannelError, InputChannel, OutputChannel};
use crate::cost::{self, NewtonConfig};
use crate::linop::LinearOperator;
use thiserror::Error;

const VAR_CLAMP_LO: f64 = 1e-12;
const VAR_CLAMP_HI: f64 = 1e12;
const NU_Z_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct DampingConfig {
    pub t_max: usize,
    /// Relative stopping tolerance on successive estimates.
    pub epsilon: f64,
    /// Cost-window length: a candidate passes if its cost is no worse than
    /// the maximum over the last `t_beta + 1` accepted costs.
    pub t_beta: usize,
    pub beta_max: f64,
    pub beta_min: f64,
    pub g_pass: f64,
    pub g_fail: f64,
    /// Safety cap converting a retry livelock into a diagnostic abort.
    pub max_consecutive_fails: usize,
    /// Damping of the `nu_r` update can be disabled independently.
    pub damp_nu_r: bool,
    /// Damping of the `nu_p` update can be disabled independently.
    pub damp_nu_p: bool,
}

impl Default for DampingConfig {
    fn default() -> Self {
        Self {
            t_max: 1000,
            epsilon: 1e-5,
            t_beta: 0,
            beta_max: 1.0,
            beta_min: 0.01,
            g_pass: 1.1,
            g_fail: 0.5,
            max_consecutive_fails: 50,
            damp_nu_r: true,
            damp_nu_p: true,
        }
    }
}

impl DampingConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        let ok = self.t_max >= 1
            && self.epsilon >= 0.0
            && self.beta_max > 0.0
            && self.beta_max <= 1.0
            && self.beta_min >= 0.0
            && self.beta_min <= self.beta_max
            && self.g_pass >= 1.0
            && self.g_fail < 1.0
            && self.g_fail > 0.0
            && self.max_consecutive_fails >= 1;
        if ok {
            Ok(())
        } else {
            Err(SolveError::InvalidConfig)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostMode {
    Map,
    Mmse,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub damping: DampingConfig,
    pub newton: NewtonConfig,
    pub mode: CostMode,
    /// With the cost check disabled every attempt is accepted; combined with
    /// `beta_min = beta_max = 1` this reproduces the original undamped GAMP.
    pub cost_check: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            damping: DampingConfig::default(),
            newton: NewtonConfig::default(),
            mode: CostMode::Mmse,
            cost_check: true,
        }
    }
}

/// All per-iteration vectors plus the damping state.
#[derive(Debug, Clone, PartialEq)]
pub struct GampState {
    pub x_hat: Vec<f64>,
    pub nu_x: Vec<f64>,
    /// Damped running mean of `x_hat` (R5).
    pub x_tilde: Vec<f64>,
    pub r_hat: Vec<f64>,
    pub nu_r: Vec<f64>,
    pub z_hat: Vec<f64>,
    pub nu_z: Vec<f64>,
    pub s_hat: Vec<f64>,
    pub nu_s: Vec<f64>,
    pub p_hat: Vec<f64>,
    pub nu_p: Vec<f64>,
    pub beta: f64,
    /// 1-based iteration counter of the next iteration to run.
    pub t: usize,
    /// Recorded costs of accepted iterations, with J(1) = +inf.
    pub cost_history: Vec<f64>,
}

/// The state produced by one damped iteration before acceptance.
#[derive(Debug, Clone)]
pub struct CandidateState {
    pub z_hat: Vec<f64>,
    pub nu_z: Vec<f64>,
    pub s_hat: Vec<f64>,
    pub nu_s: Vec<f64>,
    pub x_tilde: Vec<f64>,
    pub r_hat: Vec<f64>,
    pub nu_r: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub nu_x: Vec<f64>,
    pub nu_p: Vec<f64>,
    pub p_hat: Vec<f64>,
    pub ax: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct AcceptRecord {
    pub t: usize,
    pub beta: f64,
    pub cost: f64,
    /// Accepted through the `beta = beta_min` escape clause rather than the
    /// cost-window predicate.
    pub via_escape: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Accepted,
    Converged,
    /// The attempt failed the cost check (or broke down numerically) and the
    /// iteration will be retried with a smaller damping factor.
    Retried,
    MaxIterations,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("dimension mismatch between operator and channel lists")]
    DimensionMismatch,
    #[error("invalid damping configuration")]
    InvalidConfig,
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("numerical breakdown at iteration {t} with beta = {beta}")]
    Breakdown { t: usize, beta: f64 },
    #[error("damping controller exceeded {fails} consecutive failed attempts at iteration {t}")]
    TooManyFails { t: usize, fails: usize },
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub x_hat: Vec<f64>,
    pub nu_x: Vec<f64>,
    pub r_hat: Vec<f64>,
    pub nu_r: Vec<f64>,
    pub p_hat: Vec<f64>,
    pub nu_p: Vec<f64>,
    /// Number of accepted iterations.
    pub iterations: usize,
    /// Number of failed (retried) attempts.
    pub fails: usize,
    pub final_cost: f64,
    pub converged: bool,
    pub accepted: Vec<AcceptRecord>,
}

pub struct Solver<'a> {
    op: &'a dyn LinearOperator,
    in_ch: &'a [InputChannel],
    out_ch: &'a [OutputChannel],
    opts: SolverOptions,
    state: GampState,
    /// (R1)-(R2) depend only on the accepted `(p_hat, nu_p)`, which retries
    /// do not change; cache their outputs across retries of the same t.
    out_cache: Option<(Vec<f64>, Vec<f64>)>,
    consecutive_fails: usize,
    total_fails: usize,
    accepted: Vec<AcceptRecord>,
}

impl<'a> Solver<'a> {
    /// State initialization per the algorithm's (I2)-(I3), with zero
    /// pre-history for the damped quantities (never consulted at t = 1
    /// because beta(1) = 1 up to the beta_max clip).
    pub fn new(
        op: &'a dyn LinearOperator,
        in_ch: &'a [InputChannel],
        out_ch: &'a [OutputChannel],
        opts: SolverOptions,
    ) -> Result<Self, SolveError> {
        opts.damping.validate()?;
        let (m, n) = (op.rows(), op.cols());
        if in_ch.len() != n || out_ch.len() != m {
            return Err(SolveError::DimensionMismatch);
        }
        for ch in in_ch {
            ch.validate()?;
        }
        for ch in out_ch {
            ch.validate()?;
        }
        let mut x_hat = vec![0.0; n];
        let mut nu_x = vec![0.0; n];
        for (i, ch) in in_ch.iter().enumerate() {
            let (mean, var) = ch.prior_mean_var();
            x_hat[i] = mean;
            nu_x[i] = var;
        }
        let mut p_hat = vec![0.0; m];
        op.apply(&x_hat, &mut p_hat);
        let mut nu_p = vec![0.0; m];
        op.abs2_apply(&nu_x, &mut nu_p);
        for v in nu_p.iter_mut() {
            *v = v.clamp(VAR_CLAMP_LO, VAR_CLAMP_HI);
        }
        let state = GampState {
            x_tilde: x_hat.clone(),
            x_hat,
            nu_x,
            r_hat: vec![0.0; n],
            nu_r: vec![1.0; n],
            z_hat: vec![0.0; m],
            nu_z: vec![0.0; m],
            s_hat: vec![0.0; m],
            nu_s: vec![0.0; m],
            p_hat,
            nu_p,
            beta: 1.0f64.min(opts.damping.beta_max),
            t: 1,
            cost_history: vec![f64::INFINITY],
        };
        Ok(Self {
            op,
            in_ch,
            out_ch,
            opts,
            state,
            out_cache: None,
            consecutive_fails: 0,
            total_fails: 0,
            accepted: Vec::new(),
        })
    }

    pub fn state(&self) -> &GampState {
        &self.state
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    pub fn total_fails(&self) -> usize {
        self.total_fails
    }

    pub fn accepted_records(&self) -> &[AcceptRecord] {
        &self.accepted
    }

    fn output_posteriors(&mut self) -> Result<(Vec<f64>, Vec<f64>), SolveError> {
        if let Some((z, v)) = &self.out_cache {
            return Ok((z.clone(), v.clone()));
        }
        let m = self.op.rows();
        let mut z_hat = vec![0.0; m];
        let mut nu_z = vec![0.0; m];
        for i in 0..m {
            let (z, v) = match self.opts.mode {
                CostMode::Mmse => self.out_ch[i].posterior_z(self.state.p_hat[i], self.state.nu_p[i])?,
                CostMode::Map => self.out_ch[i].map_prox_z(self.state.p_hat[i], self.state.nu_p[i])?,
            };
            z_hat[i] = z;
            // Floor applied before the (R3) division.
            nu_z[i] = v.max(NU_Z_FLOOR * self.state.nu_p[i]);
        }
        self.out_cache = Some((z_hat.clone(), nu_z.clone()));
        Ok((z_hat, nu_z))
    }

    /// One damped iteration (R1)-(R11), producing the candidate state
    /// without touching the accepted one.
    pub fn iterate_once(&mut self, beta: f64) -> Result<CandidateState, SolveError> {
        let (m, n) = (self.op.rows(), self.op.cols());
        let (z_hat, nu_z) = self.output_posteriors()?;
        let st = &self.state;

        let mut nu_s = vec![0.0; m];
        let mut s_hat = vec![0.0; m];
        for i in 0..m {
            let fresh = (1.0 - nu_z[i] / st.nu_p[i]) / st.nu_p[i];
            nu_s[i] = (beta * fresh + (1.0 - beta) * st.nu_s[i]).max(0.0);
            s_hat[i] = beta * (z_hat[i] - st.p_hat[i]) / st.nu_p[i] + (1.0 - beta) * st.s_hat[i];
        }

        let mut x_tilde = vec![0.0; n];
        for i in 0..n {
            x_tilde[i] = beta * st.x_hat[i] + (1.0 - beta) * st.x_tilde[i];
        }

        let mut denom = vec![0.0; n];
        self.op.abs2_adjoint(&nu_s, &mut denom);
        let st = &self.state;
        let mut nu_r = vec![0.0; n];
        for i in 0..n {
            let fresh = 1.0 / denom[i];
            let v = if self.opts.damping.damp_nu_r {
                beta * fresh + (1.0 - beta) * st.nu_r[i]
            } else {
                fresh
            };
            nu_r[i] = v.clamp(VAR_CLAMP_LO, VAR_CLAMP_HI);
        }

        let mut ats = vec![0.0; n];
        self.op.adjoint(&s_hat, &mut ats);
        let st = &self.state;
        let mut r_hat = vec![0.0; n];
        for i in 0..n {
            r_hat[i] = x_tilde[i] + nu_r[i] * ats[i];
        }
        if r_hat.iter().any(|v| !v.is_finite()) {
            return Err(SolveError::Breakdown { t: st.t, beta });
        }

        let mut x_hat = vec![0.0; n];
        let mut nu_x = vec![0.0; n];
        for i in 0..n {
            let (x, v) = match self.opts.mode {
                CostMode::Mmse => self.in_ch[i].posterior_x(r_hat[i], nu_r[i])?,
                CostMode::Map => self.in_ch[i].map_prox_x(r_hat[i], nu_r[i])?,
            };
            x_hat[i] = x;
            nu_x[i] = v;
        }

        let mut nu_p_fresh = vec![0.0; m];
        self.op.abs2_apply(&nu_x, &mut nu_p_fresh);
        let st = &self.state;
        let mut nu_p = vec![0.0; m];
        for i in 0..m {
            let v = if self.opts.damping.damp_nu_p {
                beta * nu_p_fresh[i] + (1.0 - beta) * st.nu_p[i]
            } else {
                nu_p_fresh[i]
            };
            nu_p[i] = v.clamp(VAR_CLAMP_LO, VAR_CLAMP_HI);
        }

        let mut ax = vec![0.0; m];
        self.op.apply(&x_hat, &mut ax);
        let mut p_hat = vec![0.0; m];
        for i in 0..m {
            p_hat[i] = ax[i] - nu_p[i] * s_hat[i];
        }

        let cand = CandidateState {
            z_hat,
            nu_z,
            s_hat,
            nu_s,
            x_tilde,
            r_hat,
            nu_r,
            x_hat,
            nu_x,
            nu_p,
            p_hat,
            ax,
        };
        if cand.p_hat.iter().any(|v| !v.is_finite())
            || cand.x_hat.iter().any(|v| !v.is_finite())
            || cand.nu_p.iter().any(|v| !(*v > 0.0))
            || cand.nu_r.iter().any(|v| !(*v > 0.0))
        {
            return Err(SolveError::Breakdown { t: self.state.t, beta });
        }
        Ok(cand)
    }

    /// Cost of a candidate (R12). Returns the cost plus a "suspect" flag set
    /// when an MMSE row's moment-matching solve missed its tolerance.
    pub fn candidate_cost(&self, cand: &CandidateState) -> Result<(f64, bool), SolveError> {
        match self.opts.mode {
            CostMode::Map => Ok((
                cost::map_cost(&cand.x_hat, self.op, self.in_ch, self.out_ch)?,
                false,
            )),
            CostMode::Mmse => Ok(cost::mmse_cost(
                &cand.r_hat,
                &cand.nu_r,
                &cand.ax,
                &cand.p_hat,
                &cand.nu_p,
                self.in_ch,
                self.out_ch,
                &self.opts.newton,
            )?),
        }
    }

    fn window_max(&self) -> f64 {
        let hist = &self.state.cost_history;
        let take = (self.opts.damping.t_beta + 1).min(hist.len());
        hist[hist.len() - take..]
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// The pass/fail decision (R13)-(R18) applied to an externally computed
    /// candidate and cost. On pass the candidate becomes the accepted state.
    pub fn adapt_and_accept(
        &mut self,
        cand: CandidateState,
        j_new: f64,
        cost_suspect: bool,
    ) -> Result<StepOutcome, SolveError> {
        let cfg = &self.opts.damping;
        let at_beta_min = self.state.beta <= cfg.beta_min;
        let window_ok = j_new <= self.window_max();
        let pass = if !self.opts.cost_check {
            true
        } else if cost_suspect && !at_beta_min {
            // A failed moment-matching solve makes the cost unreliable.
            false
        } else {
            window_ok || at_beta_min
        };

        if !pass {
            self.total_fails += 1;
            self.consecutive_fails += 1;
            if self.consecutive_fails > cfg.max_consecutive_fails {
                return Err(SolveError::TooManyFails {
                    t: self.state.t,
                    fails: self.consecutive_fails,
                });
            }
            self.state.beta = cfg.beta_min.max(cfg.g_fail * self.state.beta);
            return Ok(StepOutcome::Retried);
        }

        let via_escape = self.opts.cost_check && !window_ok;
        let stop = {
            let num: f64 = self
                .state
                .x_hat
                .iter()
                .zip(&cand.x_hat)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let den: f64 = cand.x_hat.iter().map(|v| v * v).sum::<f64>().sqrt();
            if den < 1e-12 {
                num < cfg.epsilon
            } else {
                num / den < cfg.epsilon
            }
        };

        self.accepted.push(AcceptRecord {
            t: self.state.t,
            beta: self.state.beta,
            cost: j_new,
            via_escape,
        });
        self.state.cost_history.push(j_new);
        self.state.z_hat = cand.z_hat;
        self.state.nu_z = cand.nu_z;
        self.state.s_hat = cand.s_hat;
        self.state.nu_s = cand.nu_s;
        self.state.x_tilde = cand.x_tilde;
        self.state.r_hat = cand.r_hat;
        self.state.nu_r = cand.nu_r;
        self.state.x_hat = cand.x_hat;
        self.state.nu_x = cand.nu_x;
        self.state.nu_p = cand.nu_p;
        self.state.p_hat = cand.p_hat;
        self.state.beta = cfg.beta_max.min(cfg.g_pass * self.state.beta);
        self.state.t += 1;
        self.out_cache = None;
        self.consecutive_fails = 0;

        Ok(if stop {
            StepOutcome::Converged
        } else {
            StepOutcome::Accepted
        })
    }

    /// One attempt of the current iteration: iterate, score, adapt. A
    /// numerical breakdown is treated like a failed cost check while the
    /// damping factor can still shrink, and aborts otherwise.
    pub fn step(&mut self) -> Result<StepOutcome, SolveError> {
        if self.state.t > self.opts.damping.t_max {
            return Ok(StepOutcome::MaxIterations);
        }
        let beta = self.state.beta;
        let attempt = (|| -> Result<(CandidateState, f64, bool), SolveError> {
            let cand = self.iterate_once(beta)?;
            let (j, suspect) = if self.opts.cost_check {
                self.candidate_cost(&cand)?
            } else {
                (f64::INFINITY, false)
            };
            Ok((cand, j, suspect))
        })();
        match attempt {
            Ok((cand, j, suspect)) => self.adapt_and_accept(cand, j, suspect),
            Err(SolveError::Breakdown { t, beta }) => {
                let cfg = &self.opts.damping;
                if self.opts.cost_check && self.state.beta > cfg.beta_min {
                    self.total_fails += 1;
                    self.consecutive_fails += 1;
                    if self.consecutive_fails > cfg.max_consecutive_fails {
                        return Err(SolveError::TooManyFails {
                            t: self.state.t,
                            fails: self.consecutive_fails,
                        });
                    }
                    self.state.beta = cfg.beta_min.max(cfg.g_fail * self.state.beta);
                    Ok(StepOutcome::Retried)
                } else {
                    Err(SolveError::Breakdown { t, beta })
                }
            }
            Err(e) => Err(e),
        }
    }

    fn report(&self, converged: bool) -> SolveReport {
        SolveReport {
            x_hat: self.state.x_hat.clone(),
            nu_x: self.state.nu_x.clone(),
            r_hat: self.state.r_hat.clone(),
            nu_r: self.state.nu_r.clone(),
            p_hat: self.state.p_hat.clone(),
            nu_p: self.state.nu_p.clone(),
            iterations: self.state.t - 1,
            fails: self.total_fails,
            final_cost: *self.state.cost_history.last().unwrap(),
            converged,
            accepted: self.accepted.clone(),
        }
    }

    /// The outer loop, with an optional per-accepted-iteration trace
    /// callback of `(t, beta, cost, x_hat)`.
    pub fn run_with_trace(
        &mut self,
        mut trace: Option<&mut dyn FnMut(usize, f64, f64, &[f64])>,
    ) -> Result<SolveReport, SolveError> {
        loop {
            match self.step()? {
                StepOutcome::Accepted => {
                    if let Some(cb) = trace.as_deref_mut() {
                        let rec = self.accepted.last().unwrap();
                        cb(rec.t, rec.beta, rec.cost, &self.state.x_hat);
                    }
                }
                StepOutcome::Converged => {
                    if let Some(cb) = trace.as_deref_mut() {
                        let rec = self.accepted.last().unwrap();
                        cb(rec.t, rec.beta, rec.cost, &self.state.x_hat);
                    }
                    return Ok(self.report(true));
                }
                StepOutcome::Retried => {}
                StepOutcome::MaxIterations => return Ok(self.report(false)),
            }
        }
    }

    pub fn run(&mut self) -> Result<SolveReport, SolveError> {
        self.run_with_trace(None)
    }
}

/// Convenience wrapper: initialize and run in one call.
pub fn run(
    op: &dyn LinearOperator,
    in_ch: &[InputChannel],
    out_ch: &[OutputChannel],
    opts: SolverOptions,
) -> Result<SolveReport, SolveError> {
    Solver::new(op, in_ch, out_ch, opts)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::DenseOperator;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn scalar_problem(y: f64, nu_w: f64) -> (DenseOperator, Vec<InputChannel>, Vec<OutputChannel>) {
        (
            DenseOperator::from_rows(1, 1, &[1.0]),
            vec![InputChannel::Gauss { mean: 0.0, var: 1.0 }],
            vec![OutputChannel::Awgn { y, noise_var: nu_w }],
        )
    }

    #[test]
    fn initialize_sets_prior_statistics() {
        let (op, in_ch, out_ch) = scalar_problem(1.0, 1.0);
        let s = Solver::new(&op, &in_ch, &out_ch, SolverOptions::default()).unwrap();
        assert_eq!(s.state().p_hat, vec![0.0]);
        assert_eq!(s.state().nu_p, vec![1.0]);
        assert_eq!(s.state().t, 1);
        assert_eq!(s.state().cost_history, vec![f64::INFINITY]);
        assert_eq!(s.state().beta, 1.0);
    }

    #[test]
    fn initialize_bernoulli_gauss_prior_variance() {
        let op = DenseOperator::from_rows(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let in_ch = vec![InputChannel::BernoulliGauss { tau: 0.2, active_mean: 0.0, active_var: 1.0 }; 2];
        let out_ch = vec![OutputChannel::Awgn { y: 0.0, noise_var: 1.0 }; 2];
        let s = Solver::new(&op, &in_ch, &out_ch, SolverOptions::default()).unwrap();
        assert_eq!(s.state().x_hat, vec![0.0, 0.0]);
        assert_eq!(s.state().nu_x, vec![0.2, 0.2]);
        // Identity operator: nu_p(1) equals nu_x(1) elementwise.
        assert_eq!(s.state().nu_p, vec![0.2, 0.2]);
    }

    #[test]
    fn scalar_lmmse_fixed_point() {
        let (op, in_ch, out_ch) = scalar_problem(1.0, 1.0);
        let opts = SolverOptions {
            damping: DampingConfig { epsilon: 1e-10, ..Default::default() },
            ..Default::default()
        };
        let report = run(&op, &in_ch, &out_ch, opts).unwrap();
        assert!(report.converged);
        assert!((report.x_hat[0] - 0.5).abs() < 1e-6, "got {}", report.x_hat[0]);
    }

    #[test]
    fn dirac_rows_drive_s_exactly() {
        let op = DenseOperator::from_rows(1, 1, &[1.0]);
        let in_ch = vec![InputChannel::Gauss { mean: 1.0, var: 1.0 }];
        let out_ch = vec![OutputChannel::DiracZero];
        let mut s = Solver::new(&op, &in_ch, &out_ch, SolverOptions::default()).unwrap();
        let p1 = s.state().p_hat[0];
        let nu1 = s.state().nu_p[0];
        let cand = s.iterate_once(1.0).unwrap();
        assert_eq!(cand.z_hat[0], 0.0);
        assert!((cand.s_hat[0] - (-p1 / nu1)).abs() < 1e-15);
    }

    #[test]
    fn first_pass_always_accepts_against_infinite_cost() {
        let (op, in_ch, out_ch) = scalar_problem(1.0, 1.0);
        let mut s = Solver::new(&op, &in_ch, &out_ch, SolverOptions::default()).unwrap();
        let out = s.step().unwrap();
        assert!(matches!(out, StepOutcome::Accepted | StepOutcome::Converged));
        assert_eq!(s.state().t, 2);
        assert!(!s.accepted_records()[0].via_escape);
    }

    #[test]
    fn fail_halves_beta() {
        let (op, in_ch, out_ch) = scalar_problem(1.0, 1.0);
        let mut s = Solver::new(&op, &in_ch, &out_ch, SolverOptions::default()).unwrap();
        s.state.beta = 0.8;
        s.state.cost_history = vec![-1e9]; // force the window check to fail
        let cand = s.iterate_once(0.8).unwrap();
        let out = s.adapt_and_accept(cand, 0.0, false).unwrap();
        assert_eq!(out, StepOutcome::Retried);
        assert!((s.state().beta - 0.4).abs() < 1e-15);
        assert_eq!(s.state().t, 1);
    }

    #[test]
    fn beta_min_escape_clause() {
        let (op, in_ch, out_ch) = scalar_problem(1.0, 1.0);
        let mut s = Solver::new(&op, &in_ch, &out_ch, SolverOptions::default()).unwrap();
        s.state.beta = s.opts.damping.beta_min;
        s.state.cost_history = vec![-1e9];
        let cand = s.iterate_once(s.state.beta).unwrap();
        let out = s.adapt_and_accept(cand, 0.0, false).unwrap();
        assert!(matches!(out, StepOutcome::Accepted | StepOutcome::Converged));
        assert!(s.accepted_records().last().unwrap().via_escape);
    }

    #[test]
    fn zero_measurement_returns_prior_mean() {
        // All rows Dirac on z = A x with x forced to zero signal: the prior
        // mean is already the answer.
        let op = DenseOperator::from_rows(2, 2, &[0.0, 0.0, 0.0, 0.0]);
        let in_ch = vec![InputChannel::Gauss { mean: 0.3, var: 1.0 }; 2];
        let out_ch = vec![OutputChannel::DiracZero; 2];
        let report = run(&op, &in_ch, &out_ch, SolverOptions::default()).unwrap();
        assert!((report.x_hat[0] - 0.3).abs() < 1e-9);
        assert!((report.x_hat[1] - 0.3).abs() < 1e-9);
    }

    #[test]
    fn lasso_map_stationarity() {
        // MAP mode with Laplace prior + AWGN solves the LASSO; check the
        // subgradient optimality conditions at the fixed point.
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let (m, n) = (40, 20);
        let coeffs: Vec<f64> = (0..m * n)
            .map(|_| rng.gen::<f64>() - 0.5)
            .map(|v| v / (n as f64).sqrt() * 3.4)
            .collect();
        let op = DenseOperator::from_rows(m, n, &coeffs);
        let x_true: Vec<f64> = (0..n)
            .map(|_| if rng.gen::<f64>() < 0.25 { rng.gen::<f64>() - 0.5 } else { 0.0 })
            .collect();
        let nu_w: f64 = 1e-3;
        let mut y = vec![0.0; m];
        op.apply(&x_true, &mut y);
        for v in y.iter_mut() {
            *v += nu_w.sqrt() * (rng.gen::<f64>() - 0.5);
        }
        let lambda = 2.0;
        let in_ch = vec![InputChannel::Laplace { lambda }; n];
        let out_ch: Vec<_> = y.iter().map(|&yi| OutputChannel::Awgn { y: yi, noise_var: nu_w }).collect();
        let opts = SolverOptions {
            mode: CostMode::Map,
            damping: DampingConfig { epsilon: 1e-10, ..Default::default() },
            ..Default::default()
        };
        let report = run(&op, &in_ch, &out_ch, opts).unwrap();
        assert!(report.converged);
        let mut resid = vec![0.0; m];
        op.apply(&report.x_hat, &mut resid);
        for i in 0..m {
            resid[i] = (y[i] - resid[i]) / nu_w;
        }
        let mut grad = vec![0.0; n];
        op.adjoint(&resid, &mut grad);
        let inf_norm = grad.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
        assert!(inf_norm <= lambda * (1.0 + 1e-3), "subgradient bound violated: {inf_norm}");
        for i in 0..n {
            if report.x_hat[i].abs() > 1e-8 {
                assert!(
                    (grad[i] - lambda * report.x_hat[i].signum()).abs() <= lambda * 1e-3,
                    "support condition violated at {i}: grad {} x {}",
                    grad[i],
                    report.x_hat[i]
                );
            }
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let (op, in_ch, _) = scalar_problem(1.0, 1.0);
        let out_ch = vec![OutputChannel::Awgn { y: 0.0, noise_var: 1.0 }; 2];
        assert!(matches!(
            Solver::new(&op, &in_ch, &out_ch, SolverOptions::default()),
            Err(SolveError::DimensionMismatch)
        ));
    }
}
