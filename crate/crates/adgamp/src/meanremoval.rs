//! Zero-mean reformulation of the linear system.
//!
//! A matrix with a nonzero entry mean (or nonzero row/column means) couples
//! every coordinate through a near-rank-one component, which the scalar
//! variance recursion handles badly. We instead solve the augmented system
//!
//! ```text
//! [ z       ]   [ At        b12*gamma  b13*1 ] [ x       ]
//! [ z_{M+1} ] = [ b21*1^T  -b21*b12    0     ] [ x_{N+1} ]
//! [ z_{M+2} ]   [ b31*c^T   0         -b31*b13 ] [ x_{N+2} ]
//! ```
//!
//! where `At = A - gamma 1^T - 1 c^T` has exactly zero row and column means,
//! `z_{M+1} = z_{M+2} = 0` is enforced through Dirac-delta likelihoods, and
//! the two extra coordinates carry improper uniform priors. The first M rows
//! reproduce `z = A x` whenever `x_{N+1} = 1^T x / b12` and
//! `x_{N+2} = c^T x / b13`, which the Dirac rows pin down.

use crate::channels::{InputChannel, OutputChannel};
use crate::engine::{self, SolveError, SolveReport, SolverOptions};
use crate::linop::{DenseOperator, LinearOperator};
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MeanRemovalError {
    #[error("expected augmented length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// The centered factorization of `A` plus the augmented operator built on it.
pub struct MeanRemovalDecomposition {
    pub mu: f64,
    /// Row means, length M.
    pub gamma: Vec<f64>,
    /// Column means after removing the global mean, length N.
    pub c: Vec<f64>,
    pub b12: f64,
    pub b13: f64,
    pub b21: f64,
    pub b31: f64,
    tilde: DenseOperator,
}

impl MeanRemovalDecomposition {
    /// Centers a dense matrix and picks the scaling scalars so the mean-square
    /// entry size of the appended rows and columns matches that of the
    /// centered block.
    pub fn decompose(a: &DMatrix<f64>) -> Self {
        let (m, n) = (a.nrows(), a.ncols());
        assert!(m >= 1 && n >= 1);
        let mf = m as f64;
        let nf = n as f64;
        let mu = a.sum() / (mf * nf);
        let gamma: Vec<f64> = (0..m).map(|i| a.row(i).sum() / nf).collect();
        let c: Vec<f64> = (0..n).map(|j| a.column(j).sum() / mf - mu).collect();
        let mut tilde = a.clone();
        for i in 0..m {
            for j in 0..n {
                tilde[(i, j)] -= gamma[i] + c[j];
            }
        }
        // A centered block that is identically zero (e.g. rank-one A) leaves
        // no scale to match; borrow the scale of A itself, or unity.
        let mut frob = tilde.norm();
        if frob == 0.0 {
            frob = if a.norm() > 0.0 { a.norm() } else { 1.0 };
        }
        let gamma_norm = gamma.iter().map(|g| g * g).sum::<f64>().sqrt();
        let c_norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        // Mean-square entry of the centered block is frob^2/(MN); match the
        // appended column b12*gamma (M entries), column b13*1, and rows
        // b21*1^T, b31*c^T to it. A vanishing gamma or c makes the matching
        // column/row identically zero; keep the scalar well-sized anyway.
        let fallback = frob / (mf * nf).sqrt();
        let b12 = if gamma_norm > 0.0 { frob / (nf.sqrt() * gamma_norm) } else { fallback };
        let b13 = frob / (mf * nf).sqrt();
        let b21 = frob / (mf * nf).sqrt();
        let b31 = if c_norm > 0.0 { frob / (mf.sqrt() * c_norm) } else { fallback };
        Self { mu, gamma, c, b12, b13, b21, b31, tilde: DenseOperator::new(tilde) }
    }

    pub fn rows(&self) -> usize {
        self.tilde.rows()
    }

    pub fn cols(&self) -> usize {
        self.tilde.cols()
    }

    /// The centered block `At`.
    pub fn tilde(&self) -> &DenseOperator {
        &self.tilde
    }

    /// The augmented `(M+2) x (N+2)` operator. Blocks are applied separately;
    /// the augmented matrix is never materialized.
    pub fn augmented_op(&self) -> AugmentedOperator<'_> {
        AugmentedOperator { d: self }
    }

    /// Dense assembly of the augmented matrix, for small systems and tests.
    pub fn augmented_dense(&self) -> DMatrix<f64> {
        let (m, n) = (self.rows(), self.cols());
        let mut out = DMatrix::zeros(m + 2, n + 2);
        out.view_mut((0, 0), (m, n)).copy_from(self.tilde.matrix());
        for i in 0..m {
            out[(i, n)] = self.b12 * self.gamma[i];
            out[(i, n + 1)] = self.b13;
        }
        for j in 0..n {
            out[(m, j)] = self.b21;
            out[(m + 1, j)] = self.b31 * self.c[j];
        }
        out[(m, n)] = -self.b21 * self.b12;
        out[(m + 1, n + 1)] = -self.b31 * self.b13;
        out
    }

    /// Splits an augmented estimate into the signal part and the two appended
    /// coordinates, with their self-consistency residuals
    /// `|x_{N+1} - 1^T x / b12|` and `|x_{N+2} - c^T x / b13|`.
    pub fn extract_solution(&self, x_bar: &[f64]) -> Result<ExtractedSolution, MeanRemovalError> {
        let n = self.cols();
        if x_bar.len() != n + 2 {
            return Err(MeanRemovalError::LengthMismatch { expected: n + 2, got: x_bar.len() });
        }
        let x = x_bar[..n].to_vec();
        let sum: f64 = x.iter().sum();
        let cdot: f64 = self.c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
        let res_sum = (x_bar[n] - sum / self.b12).abs();
        let res_c = (x_bar[n + 1] - cdot / self.b13).abs();
        Ok(ExtractedSolution {
            x_hat: x,
            aux: [x_bar[n], x_bar[n + 1]],
            residuals: [res_sum, res_c],
        })
    }
}

pub struct ExtractedSolution {
    pub x_hat: Vec<f64>,
    /// The two appended coordinates.
    pub aux: [f64; 2],
    /// Consistency residuals of the appended coordinates.
    pub residuals: [f64; 2],
}

/// Appends the Dirac-delta output channels for the two constraint rows and
/// the improper uniform priors for the two appended coordinates.
pub fn augment_channels(
    in_ch: &[InputChannel],
    out_ch: &[OutputChannel],
) -> (Vec<InputChannel>, Vec<OutputChannel>) {
    let mut ins = in_ch.to_vec();
    ins.push(InputChannel::ImproperUniform);
    ins.push(InputChannel::ImproperUniform);
    let mut outs = out_ch.to_vec();
    outs.push(OutputChannel::DiracZero);
    outs.push(OutputChannel::DiracZero);
    (ins, outs)
}

/// Matrix-free view of the augmented operator.
pub struct AugmentedOperator<'a> {
    d: &'a MeanRemovalDecomposition,
}

impl LinearOperator for AugmentedOperator<'_> {
    fn rows(&self) -> usize {
        self.d.rows() + 2
    }

    fn cols(&self) -> usize {
        self.d.cols() + 2
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let d = self.d;
        let (m, n) = (d.rows(), d.cols());
        d.tilde.apply(&x[..n], &mut out[..m]);
        let (x1, x2) = (x[n], x[n + 1]);
        for i in 0..m {
            out[i] += d.b12 * d.gamma[i] * x1 + d.b13 * x2;
        }
        let sum: f64 = x[..n].iter().sum();
        let cdot: f64 = d.c.iter().zip(&x[..n]).map(|(ci, xi)| ci * xi).sum();
        out[m] = d.b21 * sum - d.b21 * d.b12 * x1;
        out[m + 1] = d.b31 * cdot - d.b31 * d.b13 * x2;
    }

    fn adjoint(&self, s: &[f64], out: &mut [f64]) {
        let d = self.d;
        let (m, n) = (d.rows(), d.cols());
        d.tilde.adjoint(&s[..m], &mut out[..n]);
        let (s1, s2) = (s[m], s[m + 1]);
        for j in 0..n {
            out[j] += d.b21 * s1 + d.b31 * d.c[j] * s2;
        }
        let gdot: f64 = d.gamma.iter().zip(&s[..m]).map(|(gi, si)| gi * si).sum();
        let sum: f64 = s[..m].iter().sum();
        out[n] = d.b12 * gdot - d.b21 * d.b12 * s1;
        out[n + 1] = d.b13 * sum - d.b31 * d.b13 * s2;
    }

    fn abs2_apply(&self, v: &[f64], out: &mut [f64]) {
        let d = self.d;
        let (m, n) = (d.rows(), d.cols());
        d.tilde.abs2_apply(&v[..n], &mut out[..m]);
        let (v1, v2) = (v[n], v[n + 1]);
        let b12_2 = d.b12 * d.b12;
        let b13_2 = d.b13 * d.b13;
        for i in 0..m {
            out[i] += b12_2 * d.gamma[i] * d.gamma[i] * v1 + b13_2 * v2;
        }
        let sum: f64 = v[..n].iter().sum();
        let c2dot: f64 = d.c.iter().zip(&v[..n]).map(|(ci, vi)| ci * ci * vi).sum();
        let b21_2 = d.b21 * d.b21;
        let b31_2 = d.b31 * d.b31;
        out[m] = b21_2 * sum + b21_2 * b12_2 * v1;
        out[m + 1] = b31_2 * c2dot + b31_2 * b13_2 * v2;
    }

    fn abs2_adjoint(&self, w: &[f64], out: &mut [f64]) {
        let d = self.d;
        let (m, n) = (d.rows(), d.cols());
        d.tilde.abs2_adjoint(&w[..m], &mut out[..n]);
        let (w1, w2) = (w[m], w[m + 1]);
        let b21_2 = d.b21 * d.b21;
        let b31_2 = d.b31 * d.b31;
        for j in 0..n {
            out[j] += b21_2 * w1 + b31_2 * d.c[j] * d.c[j] * w2;
        }
        let g2dot: f64 = d.gamma.iter().zip(&w[..m]).map(|(gi, wi)| gi * gi * wi).sum();
        let sum: f64 = w[..m].iter().sum();
        let b12_2 = d.b12 * d.b12;
        let b13_2 = d.b13 * d.b13;
        out[n] = b12_2 * g2dot + b21_2 * b12_2 * w1;
        out[n + 1] = b13_2 * sum + b31_2 * b13_2 * w2;
    }
}

/// Report of a mean-removed solve: the inner report is over the augmented
/// coordinates; the extracted signal estimate is what callers usually want.
pub struct MeanRemovedReport {
    pub solution: ExtractedSolution,
    pub inner: SolveReport,
}

/// Decompose, augment, solve, extract — the mean-removed variant of
/// [`engine::run`]. Combined with the damping controller this is the
/// fully robustified solver; with damping disabled it is the plain
/// mean-removed one.
pub fn run_mean_removed(
    a: &DMatrix<f64>,
    in_ch: &[InputChannel],
    out_ch: &[OutputChannel],
    opts: SolverOptions,
) -> Result<MeanRemovedReport, SolveError> {
    let d = MeanRemovalDecomposition::decompose(a);
    let (ins, outs) = augment_channels(in_ch, out_ch);
    let op = d.augmented_op();
    let inner = engine::run(&op, &ins, &outs, opts)?;
    let solution = d.extract_solution(&inner.x_hat).expect("augmented lengths agree");
    Ok(MeanRemovedReport { solution, inner })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::DampingConfig;
    use crate::linop;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_matrix(m: usize, n: usize, mean: f64, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        DMatrix::from_fn(m, n, |_, _| mean + rng.gen::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn all_ones_matrix_centers_to_zero() {
        let a = DMatrix::from_element(2, 2, 1.0);
        let d = MeanRemovalDecomposition::decompose(&a);
        assert_eq!(d.mu, 1.0);
        assert_eq!(d.gamma, vec![1.0, 1.0]);
        assert_eq!(d.c, vec![0.0, 0.0]);
        assert!(d.tilde.matrix().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn centered_matrix_is_untouched() {
        // Rows and columns already sum to zero.
        let a = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let d = MeanRemovalDecomposition::decompose(&a);
        assert_eq!(d.mu, 0.0);
        assert_eq!(d.gamma, vec![0.0, 0.0]);
        assert_eq!(d.c, vec![0.0, 0.0]);
        assert_eq!(d.tilde.matrix(), &a);
    }

    #[test]
    fn zero_mean_identities_and_reconstruction() {
        for seed in 0..100u64 {
            let (m, n) = (7, 11);
            let a = random_matrix(m, n, 0.7, seed);
            let d = MeanRemovalDecomposition::decompose(&a);
            let frob = a.norm();
            let tol = 1e-10 * frob;
            let t = d.tilde.matrix();
            // c^T 1 = 0, At 1 = 0, 1^T At = 0.
            assert!(d.c.iter().sum::<f64>().abs() < tol);
            for i in 0..m {
                assert!(t.row(i).sum().abs() < tol);
            }
            for j in 0..n {
                assert!(t.column(j).sum().abs() < tol);
            }
            // At + gamma 1^T + 1 c^T = A.
            for i in 0..m {
                for j in 0..n {
                    let back = t[(i, j)] + d.gamma[i] + d.c[j];
                    assert!((back - a[(i, j)]).abs() <= 1e-12 * frob);
                }
            }
        }
    }

    #[test]
    fn augmented_top_block_reproduces_ax() {
        let (m, n) = (8, 6);
        let a = random_matrix(m, n, 1.3, 5);
        let d = MeanRemovalDecomposition::decompose(&a);
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        let x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let mut x_bar = x.clone();
        let sum: f64 = x.iter().sum();
        let cdot: f64 = d.c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
        x_bar.push(sum / d.b12);
        x_bar.push(cdot / d.b13);
        let op = d.augmented_op();
        let z_bar = linop::apply(&op, &x_bar).unwrap();
        let z = &a * DMatrix::from_column_slice(n, 1, &x);
        for i in 0..m {
            assert!((z_bar[i] - z[(i, 0)]).abs() < 1e-10);
        }
        assert!(z_bar[m].abs() < 1e-10);
        assert!(z_bar[m + 1].abs() < 1e-10);
    }

    #[test]
    fn composite_matches_dense_assembly() {
        let (m, n) = (9, 5);
        let a = random_matrix(m, n, -0.4, 21);
        let d = MeanRemovalDecomposition::decompose(&a);
        let op = d.augmented_op();
        let dense = DenseOperator::new(d.augmented_dense());
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        for _ in 0..20 {
            let x: Vec<f64> = (0..n + 2).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
            let s: Vec<f64> = (0..m + 2).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
            let v: Vec<f64> = (0..n + 2).map(|_| rng.gen::<f64>()).collect();
            let w: Vec<f64> = (0..m + 2).map(|_| rng.gen::<f64>()).collect();
            let pairs = [
                (linop::apply(&op, &x).unwrap(), linop::apply(&dense, &x).unwrap()),
                (linop::adjoint(&op, &s).unwrap(), linop::adjoint(&dense, &s).unwrap()),
                (linop::abs2_apply(&op, &v).unwrap(), linop::abs2_apply(&dense, &v).unwrap()),
                (linop::abs2_adjoint(&op, &w).unwrap(), linop::abs2_adjoint(&dense, &w).unwrap()),
            ];
            for (got, want) in pairs {
                for (g, wv) in got.iter().zip(&want) {
                    assert!((g - wv).abs() < 1e-12 * (1.0 + wv.abs()));
                }
            }
        }
    }

    #[test]
    fn appended_rows_and_columns_match_tilde_scale() {
        let (m, n) = (32, 48);
        let a = random_matrix(m, n, 0.9, 3);
        let d = MeanRemovalDecomposition::decompose(&a);
        let t = d.tilde.matrix();
        let ms_tilde = t.iter().map(|x| x * x).sum::<f64>() / ((m * n) as f64);
        let ms = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
        let col1: Vec<f64> = d.gamma.iter().map(|g| d.b12 * g).collect();
        let col2 = vec![d.b13; m];
        let row1 = vec![d.b21; n];
        let row2: Vec<f64> = d.c.iter().map(|ci| d.b31 * ci).collect();
        for v in [col1, col2, row1, row2] {
            let r = ms(&v) / ms_tilde;
            assert!(r > 0.5 && r < 2.0, "mean-square ratio {r}");
        }
    }

    #[test]
    fn degenerate_row_and_column_means() {
        // Column-centered matrix: c = 0 exactly; decomposition must still
        // produce finite, positive scalars.
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -1.0, -2.0]);
        let d = MeanRemovalDecomposition::decompose(&a);
        assert!(d.c.iter().all(|&x| x.abs() < 1e-14));
        assert!(d.b31.is_finite() && d.b31 > 0.0);
        let dense = d.augmented_dense();
        assert!(dense.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn extraction_errors_and_passthrough() {
        let a = DMatrix::from_element(1, 1, 2.0);
        let d = MeanRemovalDecomposition::decompose(&a);
        assert!(matches!(
            d.extract_solution(&[1.0]),
            Err(MeanRemovalError::LengthMismatch { expected: 3, got: 1 })
        ));
        let s = d.extract_solution(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.x_hat, vec![0.0]);
        assert_eq!(s.residuals, [0.0, 0.0]);
    }

    #[test]
    fn augmented_channel_kinds() {
        let ins = vec![InputChannel::Gauss { mean: 0.0, var: 1.0 }; 3];
        let outs = vec![OutputChannel::Awgn { y: 0.0, noise_var: 1.0 }; 2];
        let (ai, ao) = augment_channels(&ins, &outs);
        assert_eq!(ai.len(), 5);
        assert_eq!(ao.len(), 4);
        assert!(matches!(ai[3], InputChannel::ImproperUniform));
        assert!(matches!(ai[4], InputChannel::ImproperUniform));
        assert!(matches!(ao[2], OutputChannel::DiracZero));
        assert!(matches!(ao[3], OutputChannel::DiracZero));
    }

    #[test]
    fn solve_small_consistent_system() {
        // Gaussian prior, light noise, strongly nonzero-mean matrix: the
        // mean-removed solve should recover x well and satisfy the appended
        // coordinates' consistency conditions.
        let (m, n) = (24, 8);
        let a = random_matrix(m, n, 1.0, 13);
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        let x0: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let z = &a * DMatrix::from_column_slice(n, 1, &x0);
        let nu_w = 1e-8;
        let in_ch = vec![InputChannel::Gauss { mean: 0.0, var: 1.0 }; n];
        let out_ch: Vec<_> = (0..m)
            .map(|i| OutputChannel::Awgn { y: z[(i, 0)], noise_var: nu_w })
            .collect();
        let opts = SolverOptions {
            damping: DampingConfig { epsilon: 1e-10, t_max: 4000, ..Default::default() },
            ..Default::default()
        };
        let rep = run_mean_removed(&a, &in_ch, &out_ch, opts).unwrap();
        let norm: f64 = x0.iter().map(|x| x * x).sum::<f64>().sqrt();
        let err: f64 = rep
            .solution
            .x_hat
            .iter()
            .zip(&x0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-3 * norm, "relative error {}", err / norm);
        let xn: f64 = rep.solution.x_hat.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(rep.solution.residuals[0] < 1e-6 * xn);
        assert!(rep.solution.residuals[1] < 1e-6 * xn);
    }
}
