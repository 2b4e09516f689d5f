//! Seeded generators for the benchmark problem instances: the four matrix
//! families, the Bernoulli-Gaussian signal, and the measurement processes.
//!
//! Everything is a pure function of (spec, seed). The matrix, signal, and
//! noise draws use decorrelated substreams derived from the seed, so changing
//! e.g. the signal spec leaves the matrix realization untouched.

use nalgebra::DMatrix;
use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::Normal;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EnsembleError {
    #[error("correlation must lie in [0, 1), got {0}")]
    InvalidCorrelation(f64),
    #[error("condition number must exceed 1, got {0}")]
    InvalidCondition(f64),
    #[error("rank must be positive")]
    ZeroRank,
    #[error("sparsity rate must lie in (0, 1], got {0}")]
    InvalidSparsity(f64),
    #[error("measurement scaling is degenerate: ||Ax|| = 0")]
    DegenerateSignal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnsembleKind {
    /// i.i.d. N(mu, 1/N) entries.
    NonzeroMean { mu: f64 },
    /// (1/N) U V with U an M x R and V an R x N i.i.d. standard normal pair.
    LowRank { rank: usize },
    /// Rows are independent stationary AR(1) chains with unit marginal
    /// variance and lag-1 correlation rho, scaled by 1/sqrt(N).
    ColumnCorrelated { rho: f64 },
    /// Random singular vectors with a geometric singular-value ladder whose
    /// extremes have ratio kappa, normalized so ||A||_F^2 = M.
    IllConditioned { kappa: f64 },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SignalSpec {
    pub tau: f64,
    pub n: usize,
    pub seed: u64,
    /// Subtract the empirical mean from the active entries (used by the
    /// sign-measurement experiments so not every measurement has one sign).
    pub center_active: bool,
}

/// splitmix64 finalizer; used to derive decorrelated substream seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Deterministic substream seed for a named domain.
pub fn substream(seed: u64, domain: u64) -> u64 {
    splitmix64(seed ^ splitmix64(domain))
}

const DOMAIN_MATRIX: u64 = 0x6d61_7472;
const DOMAIN_SIGNAL: u64 = 0x7369_676e;
const DOMAIN_NOISE: u64 = 0x6e6f_6973;

fn rng_for(seed: u64, domain: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(substream(seed, domain))
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).unwrap()
}

pub fn gen_matrix(spec: &EnsembleSpec) -> Result<DMatrix<f64>, EnsembleError> {
    let (m, n) = (spec.m, spec.n);
    let mut rng = rng_for(spec.seed, DOMAIN_MATRIX);
    let gauss = std_normal();
    match spec.kind {
        EnsembleKind::NonzeroMean { mu } => {
            let sd = (1.0 / n as f64).sqrt();
            Ok(DMatrix::from_fn(m, n, |_, _| mu + sd * gauss.sample(&mut rng)))
        }
        EnsembleKind::LowRank { rank } => {
            if rank == 0 {
                return Err(EnsembleError::ZeroRank);
            }
            let u = DMatrix::from_fn(m, rank, |_, _| gauss.sample(&mut rng));
            let v = DMatrix::from_fn(rank, n, |_, _| gauss.sample(&mut rng));
            Ok(u * v / n as f64)
        }
        EnsembleKind::ColumnCorrelated { rho } => {
            if !(0.0..1.0).contains(&rho) {
                return Err(EnsembleError::InvalidCorrelation(rho));
            }
            let innov = (1.0 - rho * rho).sqrt();
            let scale = (1.0 / n as f64).sqrt();
            let mut a = DMatrix::zeros(m, n);
            for i in 0..m {
                let mut prev = gauss.sample(&mut rng);
                a[(i, 0)] = scale * prev;
                for j in 1..n {
                    prev = rho * prev + innov * gauss.sample(&mut rng);
                    a[(i, j)] = scale * prev;
                }
            }
            Ok(a)
        }
        EnsembleKind::IllConditioned { kappa } => {
            if kappa <= 1.0 {
                return Err(EnsembleError::InvalidCondition(kappa));
            }
            let k = m.min(n);
            let g = DMatrix::from_fn(m, n, |_, _| gauss.sample(&mut rng));
            let svd = g.svd(true, true);
            let u = svd.u.expect("svd requested");
            let vt = svd.v_t.expect("svd requested");
            // Geometric ladder hitting sigma_max/sigma_min = kappa exactly,
            // then Frobenius normalization ||A||_F^2 = M.
            let sigmas: Vec<f64> = if k == 1 {
                vec![1.0]
            } else {
                let ratio = kappa.powf(1.0 / (k as f64 - 1.0));
                (0..k).map(|i| ratio.powi(-(i as i32))).collect()
            };
            let ss: f64 = sigmas.iter().map(|s| s * s).sum();
            let scale = (m as f64 / ss).sqrt();
            let mut a = DMatrix::zeros(m, n);
            for (i, s) in sigmas.iter().enumerate() {
                // a += scale * s * u_i v_i^T
                let ui = u.column(i);
                let vi = vt.row(i);
                for r in 0..m {
                    let f = scale * s * ui[r];
                    for c in 0..n {
                        a[(r, c)] += f * vi[c];
                    }
                }
            }
            Ok(a)
        }
    }
}

/// Bernoulli-Gaussian signal draw; returns the signal and its support.
/// An all-zero draw is redrawn from the continuation of the same stream.
pub fn gen_signal(spec: &SignalSpec) -> Result<(Vec<f64>, Vec<usize>), EnsembleError> {
    if !(spec.tau > 0.0 && spec.tau <= 1.0) {
        return Err(EnsembleError::InvalidSparsity(spec.tau));
    }
    let mut rng = rng_for(spec.seed, DOMAIN_SIGNAL);
    let gauss = std_normal();
    loop {
        let mut x = vec![0.0; spec.n];
        let mut support = Vec::new();
        for i in 0..spec.n {
            if rng.gen::<f64>() < spec.tau {
                x[i] = gauss.sample(&mut rng);
                support.push(i);
            }
        }
        if support.is_empty() {
            continue;
        }
        if spec.center_active {
            let mean: f64 = support.iter().map(|&i| x[i]).sum::<f64>() / support.len() as f64;
            for &i in &support {
                x[i] -= mean;
            }
        }
        return Ok((x, support));
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(tag = "process", rename_all = "snake_case")]
pub enum MeasurementProcess {
    Awgn { snr_db: f64 },
    Robust { snr_db: f64, outlier_frac: f64, outlier_snr_db: f64 },
    OneBit,
}

/// Channel parameters implied by the realized measurement process.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeasurementParams {
    Awgn { noise_var: f64 },
    Robust { pi_out: f64, nu_small: f64, nu_large: f64 },
    OneBit,
}

/// Draws y from z = Ax under the given process. Noise variances are set from
/// the empirical per-row signal power ||Ax||^2 / M and the target SNR, so the
/// realized SNR matches the definition E||z||^2 / E||y - z||^2 per instance.
pub fn gen_measurements(
    z: &[f64],
    process: MeasurementProcess,
    seed: u64,
) -> Result<(Vec<f64>, MeasurementParams), EnsembleError> {
    let m = z.len();
    let zp = z.iter().map(|v| v * v).sum::<f64>() / m as f64;
    if zp == 0.0 {
        return Err(EnsembleError::DegenerateSignal);
    }
    let mut rng = rng_for(seed, DOMAIN_NOISE);
    let gauss = std_normal();
    let var_at = |snr_db: f64| {
        if snr_db.is_infinite() {
            0.0
        } else {
            zp / 10f64.powf(snr_db / 10.0)
        }
    };
    match process {
        MeasurementProcess::Awgn { snr_db } => {
            let nu_w = var_at(snr_db);
            let sd = nu_w.sqrt();
            let y: Vec<f64> = z.iter().map(|&zi| zi + sd * gauss.sample(&mut rng)).collect();
            Ok((y, MeasurementParams::Awgn { noise_var: nu_w }))
        }
        MeasurementProcess::Robust { snr_db, outlier_frac, outlier_snr_db } => {
            let nu_small = var_at(snr_db);
            let nu_large = var_at(outlier_snr_db);
            // Exactly round(frac*M) outliers at uniformly random positions.
            let k = ((outlier_frac * m as f64).round() as usize).min(m);
            let mut idx: Vec<usize> = (0..m).collect();
            for i in 0..k {
                let j = rng.gen_range(i..m);
                idx.swap(i, j);
            }
            let mut outlier = vec![false; m];
            for &i in &idx[..k] {
                outlier[i] = true;
            }
            let y: Vec<f64> = z
                .iter()
                .enumerate()
                .map(|(i, &zi)| {
                    let nu = if outlier[i] { nu_large } else { nu_small };
                    zi + nu.sqrt() * gauss.sample(&mut rng)
                })
                .collect();
            Ok((y, MeasurementParams::Robust { pi_out: outlier_frac, nu_small, nu_large }))
        }
        MeasurementProcess::OneBit => {
            let y: Vec<f64> = z.iter().map(|&zi| if zi >= 0.0 { 1.0 } else { -1.0 }).collect();
            Ok((y, MeasurementParams::OneBit))
        }
    }
}
