//! Experiment harness: sweeps matrix difficulty, runs the solver variants
//! over many trials, and writes NMSE tables suitable for plotting.
//!
//! Determinism contract: per-trial seeds are pure functions of the root seed
//! and the cell coordinates, and aggregation is a fixed-order reduction, so a
//! run produces byte-identical `results.csv` whether trials execute serially
//! or on a thread pool. Wall-clock timings are therefore kept out of
//! `results.csv` and written to a separate `timings.csv`.

use crate::channels::{InputChannel, OutputChannel};
use crate::cost::NewtonConfig;
use crate::engine::{self, CostMode, DampingConfig, SolverOptions};
use crate::ensembles::{
    self, EnsembleKind, EnsembleSpec, MeasurementParams, MeasurementProcess, SignalSpec,
};
use crate::linop::DenseOperator;
use crate::meanremoval;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Deserialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("reading {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("writing {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("config parse: {0}")]
    Parse(#[from] toml::de::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    AwgnCs,
    RobustCs,
    OneBitCs,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::AwgnCs => "awgn_cs",
            Problem::RobustCs => "robust_cs",
            Problem::OneBitCs => "one_bit_cs",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Gamp,
    Adgamp,
    Mgamp,
    Madgamp,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Gamp => "gamp",
            SolverKind::Adgamp => "adgamp",
            SolverKind::Mgamp => "mgamp",
            SolverKind::Madgamp => "madgamp",
        }
    }

    fn mean_removed(self) -> bool {
        matches!(self, SolverKind::Mgamp | SolverKind::Madgamp)
    }

    fn adaptive(self) -> bool {
        matches!(self, SolverKind::Adgamp | SolverKind::Madgamp)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleName {
    NonzeroMean,
    LowRank,
    ColumnCorrelated,
    IllConditioned,
}

impl EnsembleName {
    pub fn name(self) -> &'static str {
        match self {
            EnsembleName::NonzeroMean => "nonzero_mean",
            EnsembleName::LowRank => "low_rank",
            EnsembleName::ColumnCorrelated => "column_correlated",
            EnsembleName::IllConditioned => "ill_conditioned",
        }
    }

    /// Maps a sweep value to a concrete ensemble parameter. Low-rank sweeps
    /// are expressed as the rank fraction R/N.
    fn kind_at(self, value: f64, n: usize) -> EnsembleKind {
        match self {
            EnsembleName::NonzeroMean => EnsembleKind::NonzeroMean { mu: value },
            EnsembleName::LowRank => {
                let rank = ((value * n as f64).round() as usize).max(1);
                EnsembleKind::LowRank { rank }
            }
            EnsembleName::ColumnCorrelated => EnsembleKind::ColumnCorrelated { rho: value },
            EnsembleName::IllConditioned => EnsembleKind::IllConditioned { kappa: value },
        }
    }
}

/// Partial damping overrides read from the config file and applied on top of
/// the per-problem defaults.
#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DampingOverrides {
    pub t_max: Option<usize>,
    pub epsilon: Option<f64>,
    pub t_beta: Option<usize>,
    pub beta_max: Option<f64>,
    pub beta_min: Option<f64>,
    pub g_pass: Option<f64>,
    pub g_fail: Option<f64>,
    pub max_consecutive_fails: Option<usize>,
    pub damp_nu_r: Option<bool>,
    pub damp_nu_p: Option<bool>,
}

impl DampingOverrides {
    fn apply(&self, mut d: DampingConfig) -> DampingConfig {
        if let Some(v) = self.t_max {
            d.t_max = v;
        }
        if let Some(v) = self.epsilon {
            d.epsilon = v;
        }
        if let Some(v) = self.t_beta {
            d.t_beta = v;
        }
        if let Some(v) = self.beta_max {
            d.beta_max = v;
        }
        if let Some(v) = self.beta_min {
            d.beta_min = v;
        }
        if let Some(v) = self.g_pass {
            d.g_pass = v;
        }
        if let Some(v) = self.g_fail {
            d.g_fail = v;
        }
        if let Some(v) = self.max_consecutive_fails {
            d.max_consecutive_fails = v;
        }
        if let Some(v) = self.damp_nu_r {
            d.damp_nu_r = v;
        }
        if let Some(v) = self.damp_nu_p {
            d.damp_nu_p = v;
        }
        d
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewtonOverrides {
    pub alpha: Option<f64>,
    pub phi: Option<f64>,
    pub i_max: Option<usize>,
    pub eps_inv: Option<f64>,
}

impl NewtonOverrides {
    fn apply(&self, mut c: NewtonConfig) -> NewtonConfig {
        if let Some(v) = self.alpha {
            c.alpha = v;
        }
        if let Some(v) = self.phi {
            c.phi = v;
        }
        if let Some(v) = self.i_max {
            c.i_max = v;
        }
        if let Some(v) = self.eps_inv {
            c.eps_inv = v;
        }
        c
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnsembleSection {
    kind: EnsembleName,
    sweep: Vec<f64>,
}

/// On-disk config. Fields without defaults are mandatory; the measurement
/// and damping settings default to the problem's published values.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: Problem,
    n: usize,
    m: usize,
    tau: f64,
    trials: usize,
    root_seed: u64,
    solvers: Vec<SolverKind>,
    output_dir: PathBuf,
    ensemble: EnsembleSection,
    snr_db: Option<f64>,
    outlier_frac: Option<f64>,
    outlier_snr_db: Option<f64>,
    #[serde(default)]
    damping: DampingOverrides,
    #[serde(default)]
    newton: NewtonOverrides,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub ensemble: EnsembleName,
    pub sweep: Vec<f64>,
    pub n: usize,
    pub m: usize,
    pub tau: f64,
    pub trials: usize,
    pub root_seed: u64,
    pub solvers: Vec<SolverKind>,
    pub output_dir: PathBuf,
    pub snr_db: f64,
    pub outlier_frac: f64,
    pub outlier_snr_db: f64,
    pub damping: DampingConfig,
    pub newton: NewtonConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, HarnessError> {
        let raw: RawConfig = toml::from_str(s)?;
        Self::from_raw(raw)
    }

    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        let s = std::fs::read_to_string(path)
            .map_err(|source| HarnessError::Read { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&s)
    }

    fn from_raw(raw: RawConfig) -> Result<Self, HarnessError> {
        if raw.ensemble.sweep.is_empty() {
            return Err(HarnessError::Config("ensemble sweep grid is empty".into()));
        }
        if raw.trials == 0 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        if raw.solvers.is_empty() {
            return Err(HarnessError::Config("solver list is empty".into()));
        }
        if !(raw.tau > 0.0 && raw.tau <= 1.0) {
            return Err(HarnessError::Config(format!("tau out of (0,1]: {}", raw.tau)));
        }
        // Published per-problem defaults; the robust problem damps a lot
        // harder and runs longer, the sign problem caps the step at 0.5.
        let mut damping = DampingConfig::default();
        match raw.problem {
            Problem::AwgnCs => {}
            Problem::RobustCs => {
                damping.beta_max = 0.1;
                damping.t_max = 2000;
            }
            Problem::OneBitCs => {
                damping.beta_max = 0.5;
            }
        }
        let damping = raw.damping.apply(damping);
        if damping.beta_min > damping.beta_max {
            return Err(HarnessError::Config("beta_min exceeds beta_max".into()));
        }
        Ok(Self {
            problem: raw.problem,
            ensemble: raw.ensemble.kind,
            sweep: raw.ensemble.sweep,
            n: raw.n,
            m: raw.m,
            tau: raw.tau,
            trials: raw.trials,
            root_seed: raw.root_seed,
            solvers: raw.solvers,
            output_dir: raw.output_dir,
            snr_db: raw.snr_db.unwrap_or(60.0),
            outlier_frac: raw.outlier_frac.unwrap_or(0.1),
            outlier_snr_db: raw.outlier_snr_db.unwrap_or(0.0),
            damping,
            newton: raw.newton.apply(NewtonConfig::default()),
        })
    }

    fn process(&self) -> MeasurementProcess {
        match self.problem {
            Problem::AwgnCs => MeasurementProcess::Awgn { snr_db: self.snr_db },
            Problem::RobustCs => MeasurementProcess::Robust {
                snr_db: self.snr_db,
                outlier_frac: self.outlier_frac,
                outlier_snr_db: self.outlier_snr_db,
            },
            Problem::OneBitCs => MeasurementProcess::OneBit,
        }
    }

    fn solver_options(&self, solver: SolverKind) -> SolverOptions {
        let mut damping = self.damping.clone();
        if !solver.adaptive() {
            damping.beta_min = 1.0;
            damping.beta_max = 1.0;
        }
        SolverOptions {
            damping,
            newton: self.newton,
            mode: CostMode::Mmse,
            cost_check: solver.adaptive(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrialResult {
    pub solver: SolverKind,
    pub sweep_value: f64,
    pub trial: usize,
    /// Raw error ratio ||x_hat - x||^2 / ||x||^2 (1.0 for aborted cells).
    pub nmse_ratio: f64,
    /// Clipped at 0 dB.
    pub nmse_db: f64,
    pub iterations: usize,
    pub retries: usize,
    pub converged: bool,
    pub aborted: bool,
    pub genie_db: f64,
    pub seconds: f64,
}

pub struct ResultTable {
    pub rows: Vec<TrialResult>,
    pub aborted_cells: usize,
}

fn nmse_ratio(x_hat: &[f64], x: &[f64]) -> f64 {
    let num: f64 = x_hat.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = x.iter().map(|v| v * v).sum();
    num / den
}

fn clip_db(ratio: f64) -> f64 {
    (10.0 * ratio.log10()).min(0.0)
}

/// Support-restricted ridge (LMMSE) estimate: solve
/// `(A_S^T A_S / nu_w + I / nu0) x_S = A_S^T y / nu_w` and report the NMSE
/// of the zero-padded result.
pub fn genie_nmse(
    a: &DMatrix<f64>,
    x: &[f64],
    support: &[usize],
    y: &[f64],
    nu_w: f64,
    nu0: f64,
) -> f64 {
    let m = a.nrows();
    let k = support.len();
    let nu_w = nu_w.max(1e-30);
    let a_s = DMatrix::from_fn(m, k, |i, j| a[(i, support[j])]);
    let mut lhs = a_s.tr_mul(&a_s) / nu_w;
    for i in 0..k {
        lhs[(i, i)] += 1.0 / nu0;
    }
    let rhs = a_s.tr_mul(&DVector::from_column_slice(y)) / nu_w;
    let sol = lhs
        .clone()
        .cholesky()
        .map(|c| c.solve(&rhs))
        .unwrap_or_else(|| lhs.lu().solve(&rhs).expect("ridge system is nonsingular"));
    let mut x_hat = vec![0.0; a.ncols()];
    for (j, &idx) in support.iter().enumerate() {
        x_hat[idx] = sol[j];
    }
    10.0 * nmse_ratio(&x_hat, x).log10()
}

/// One (sweep value, trial) cell: the shared problem instance and every
/// requested solver's result on it.
fn run_cell(cfg: &ExperimentConfig, sweep_idx: usize, trial: usize) -> Vec<TrialResult> {
    let value = cfg.sweep[sweep_idx];
    let cell_seed =
        ensembles::substream(cfg.root_seed, ((sweep_idx as u64) << 32) | trial as u64);
    let espec = EnsembleSpec {
        kind: cfg.ensemble.kind_at(value, cfg.n),
        m: cfg.m,
        n: cfg.n,
        seed: cell_seed,
    };
    let a = gen_valid_matrix(&espec);
    let sspec = SignalSpec {
        tau: cfg.tau,
        n: cfg.n,
        seed: cell_seed,
        center_active: cfg.problem == Problem::OneBitCs,
    };
    let (x, support) = ensembles::gen_signal(&sspec).expect("validated spec");
    let z = &a * DVector::from_column_slice(&x);
    let (y, params) =
        ensembles::gen_measurements(z.as_slice(), cfg.process(), cell_seed).expect("nonzero z");

    let in_ch =
        vec![InputChannel::BernoulliGauss { tau: cfg.tau, active_mean: 0.0, active_var: 1.0 }; cfg.n];
    let out_ch: Vec<OutputChannel> = match params {
        MeasurementParams::Awgn { noise_var } => y
            .iter()
            .map(|&yi| OutputChannel::Awgn { y: yi, noise_var: noise_var.max(1e-30) })
            .collect(),
        MeasurementParams::Robust { pi_out, nu_small, nu_large } => y
            .iter()
            .map(|&yi| OutputChannel::Mixture {
                y: yi,
                pi_out,
                var_small: nu_small.max(1e-30),
                var_large: nu_large.max(1e-30),
            })
            .collect(),
        MeasurementParams::OneBit => y.iter().map(|&yi| OutputChannel::Sign { y: yi }).collect(),
    };
    let genie_db = match params {
        MeasurementParams::Awgn { noise_var } => {
            genie_nmse(&a, &x, &support, &y, noise_var, 1.0)
        }
        // The robust genie uses the nominal (small) noise variance.
        MeasurementParams::Robust { nu_small, .. } => {
            genie_nmse(&a, &x, &support, &y, nu_small, 1.0)
        }
        MeasurementParams::OneBit => f64::NAN,
    };

    cfg.solvers
        .iter()
        .map(|&solver| {
            let opts = cfg.solver_options(solver);
            let started = Instant::now();
            let outcome = if solver.mean_removed() {
                meanremoval::run_mean_removed(&a, &in_ch, &out_ch, opts)
                    .map(|r| (r.solution.x_hat, r.inner))
            } else {
                let op = DenseOperator::new(a.clone());
                engine::run(&op, &in_ch, &out_ch, opts).map(|r| {
                    let x_hat = r.x_hat.clone();
                    (x_hat, r)
                })
            };
            let seconds = started.elapsed().as_secs_f64();
            match outcome {
                Ok((x_hat, report)) => {
                    let ratio = nmse_ratio(&x_hat, &x);
                    TrialResult {
                        solver,
                        sweep_value: value,
                        trial,
                        nmse_ratio: ratio,
                        nmse_db: clip_db(ratio),
                        iterations: report.iterations,
                        retries: report.fails,
                        converged: report.converged,
                        aborted: false,
                        genie_db,
                        seconds,
                    }
                }
                Err(_) => TrialResult {
                    solver,
                    sweep_value: value,
                    trial,
                    nmse_ratio: 1.0,
                    nmse_db: 0.0,
                    iterations: 0,
                    retries: 0,
                    converged: false,
                    aborted: true,
                    genie_db,
                    seconds,
                },
            }
        })
        .collect()
}

/// The low-rank sweep can produce a matrix whose product with a particular
/// sparse signal vanishes only with probability zero; other degeneracies are
/// absorbed by redrawing with a perturbed seed (bounded attempts).
fn gen_valid_matrix(spec: &EnsembleSpec) -> DMatrix<f64> {
    let mut s = *spec;
    for _ in 0..8 {
        match ensembles::gen_matrix(&s) {
            Ok(a) if a.iter().any(|&v| v != 0.0) => return a,
            _ => s.seed = s.seed.wrapping_add(1),
        }
    }
    panic!("could not draw a usable matrix for {spec:?}");
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable, HarnessError> {
    let cells: Vec<(usize, usize)> = (0..cfg.sweep.len())
        .flat_map(|s| (0..cfg.trials).map(move |t| (s, t)))
        .collect();
    let mut per_cell: Vec<Vec<TrialResult>> = cells
        .par_iter()
        .map(|&(s, t)| run_cell(cfg, s, t))
        .collect();
    let rows: Vec<TrialResult> = per_cell.drain(..).flatten().collect();
    let aborted_cells = rows.iter().filter(|r| r.aborted).count();
    let table = ResultTable { rows, aborted_cells };
    write_outputs(cfg, &table)?;
    Ok(table)
}

/// 17 significant digits, enough to round-trip an f64 exactly.
fn fmt(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    std::fs::write(path, contents)
        .map_err(|source| HarnessError::Write { path: path.to_path_buf(), source })
}

fn write_outputs(cfg: &ExperimentConfig, table: &ResultTable) -> Result<(), HarnessError> {
    std::fs::create_dir_all(&cfg.output_dir).map_err(|source| HarnessError::Write {
        path: cfg.output_dir.clone(),
        source,
    })?;

    // Per-trial table, deterministic; no timing columns.
    let mut results = String::from(
        "problem,ensemble,sweep_value,trial,solver,nmse_db,nmse_ratio,iterations,retries,converged,aborted,genie_db\n",
    );
    let mut timings = String::from("problem,ensemble,sweep_value,trial,solver,seconds\n");
    for r in &table.rows {
        let _ = writeln!(
            results,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            cfg.problem.name(),
            cfg.ensemble.name(),
            fmt(r.sweep_value),
            r.trial,
            r.solver.name(),
            fmt(r.nmse_db),
            fmt(r.nmse_ratio),
            r.iterations,
            r.retries,
            r.converged,
            r.aborted,
            fmt(r.genie_db),
        );
        let _ = writeln!(
            timings,
            "{},{},{},{},{},{}",
            cfg.problem.name(),
            cfg.ensemble.name(),
            fmt(r.sweep_value),
            r.trial,
            r.solver.name(),
            fmt(r.seconds),
        );
    }
    write_file(&cfg.output_dir.join("results.csv"), &results)?;
    write_file(&cfg.output_dir.join("timings.csv"), &timings)?;

    // Per sweep-point x solver aggregates. Mean NMSE is the dB of the mean
    // ratio, clipped at 0; timing stats go to the runtime table instead.
    let mut summary = String::from(
        "problem,ensemble,sweep_value,solver,trials,mean_nmse_db,mean_iterations,mean_retries,converged_frac,aborted,mean_genie_db\n",
    );
    let mut runtime = String::from(
        "problem,ensemble,sweep_value,solver,mean_seconds,median_seconds,mean_iterations\n",
    );
    for (si, &value) in cfg.sweep.iter().enumerate() {
        for &solver in &cfg.solvers {
            let group: Vec<&TrialResult> = table
                .rows
                .iter()
                .filter(|r| r.solver == solver && r.trial < cfg.trials)
                .filter(|r| (r.sweep_value - value).abs() == 0.0 && sweep_index(cfg, r) == si)
                .collect();
            let cnt = group.len() as f64;
            let mean_ratio = group.iter().map(|r| r.nmse_ratio).sum::<f64>() / cnt;
            let mean_iter = group.iter().map(|r| r.iterations as f64).sum::<f64>() / cnt;
            let mean_retries = group.iter().map(|r| r.retries as f64).sum::<f64>() / cnt;
            let conv = group.iter().filter(|r| r.converged).count() as f64 / cnt;
            let aborted = group.iter().filter(|r| r.aborted).count();
            let genies: Vec<f64> =
                group.iter().map(|r| r.genie_db).filter(|g| g.is_finite()).collect();
            let mean_genie = if genies.is_empty() {
                f64::NAN
            } else {
                // dB of the mean genie ratio, consistent with the solver column.
                let mr = genies.iter().map(|g| 10f64.powf(g / 10.0)).sum::<f64>()
                    / genies.len() as f64;
                10.0 * mr.log10()
            };
            let _ = writeln!(
                summary,
                "{},{},{},{},{},{},{},{},{},{},{}",
                cfg.problem.name(),
                cfg.ensemble.name(),
                fmt(value),
                solver.name(),
                group.len(),
                fmt(clip_db(mean_ratio)),
                fmt(mean_iter),
                fmt(mean_retries),
                fmt(conv),
                aborted,
                fmt(mean_genie),
            );
            let mut secs: Vec<f64> = group.iter().map(|r| r.seconds).collect();
            secs.sort_by(f64::total_cmp);
            let median = if secs.is_empty() {
                f64::NAN
            } else if secs.len() % 2 == 1 {
                secs[secs.len() / 2]
            } else {
                0.5 * (secs[secs.len() / 2 - 1] + secs[secs.len() / 2])
            };
            let mean_sec = secs.iter().sum::<f64>() / cnt;
            let _ = writeln!(
                runtime,
                "{},{},{},{},{},{},{}",
                cfg.problem.name(),
                cfg.ensemble.name(),
                fmt(value),
                solver.name(),
                fmt(mean_sec),
                fmt(median),
                fmt(mean_iter),
            );
        }
    }
    write_file(&cfg.output_dir.join("summary.csv"), &summary)?;
    write_file(&cfg.output_dir.join("runtime.csv"), &runtime)?;
    emit_plots(cfg, table)?;
    Ok(())
}

fn sweep_index(cfg: &ExperimentConfig, r: &TrialResult) -> usize {
    cfg.sweep
        .iter()
        .position(|&v| v == r.sweep_value)
        .expect("row came from the sweep grid")
}

/// One columnar plot-data file per panel (problem x ensemble kind):
/// sweep value, one mean-NMSE column per solver, trial count.
pub fn emit_plots(cfg: &ExperimentConfig, table: &ResultTable) -> Result<(), HarnessError> {
    if cfg.solvers.is_empty() {
        return Err(HarnessError::Config("no solvers to plot".into()));
    }
    let mut out = String::from("sweep_value");
    for &s in &cfg.solvers {
        let _ = write!(out, ",{}_nmse_db", s.name());
    }
    out.push_str(",trials\n");
    for (si, &value) in cfg.sweep.iter().enumerate() {
        let _ = write!(out, "{}", fmt(value));
        for &solver in &cfg.solvers {
            let ratios: Vec<f64> = table
                .rows
                .iter()
                .filter(|r| r.solver == solver && sweep_index(cfg, r) == si)
                .map(|r| r.nmse_ratio)
                .collect();
            let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
            let _ = write!(out, ",{}", fmt(clip_db(mean)));
        }
        let _ = writeln!(out, ",{}", cfg.trials);
    }
    let name = format!("plot_{}_{}.dat", cfg.problem.name(), cfg.ensemble.name());
    write_file(&cfg.output_dir.join(name), &out)
}

/// The built-in desk-scale configuration exercised by `adgamp smoke`.
pub fn smoke_config(output_dir: PathBuf, root_seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        problem: Problem::AwgnCs,
        ensemble: EnsembleName::NonzeroMean,
        sweep: vec![0.0, 1.0],
        n: 128,
        m: 64,
        tau: 0.2,
        trials: 5,
        root_seed,
        solvers: vec![SolverKind::Gamp, SolverKind::Adgamp, SolverKind::Mgamp, SolverKind::Madgamp],
        output_dir,
        snr_db: 60.0,
        outlier_frac: 0.1,
        outlier_snr_db: 0.0,
        damping: DampingConfig::default(),
        newton: NewtonConfig::default(),
    }
}
