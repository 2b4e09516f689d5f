//! Scalar prior (input) and likelihood (output) channels.
//!
//! An output channel supplies the posterior statistics of the tilted density
//! `p(y|z) N(z; p_hat, nu_p) / B` together with `ln B`; an input channel does
//! the same for `p(x) N(x; r_hat, nu_r) / C`. MAP mode replaces the posterior
//! mean with a proximal maximizer and the variance with `nu * g'`.
//!
//! All channels are immutable value objects; every operation is pure.

use crate::special::{
    ln_normal_pdf, logsumexp2, truncated_lower_moments, truncated_upper_moments,
};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),
    #[error("non-finite channel argument")]
    NonFinite,
    #[error("channel kind {0} is not supported in MAP mode")]
    UnsupportedMap(&'static str),
    #[error("channel kind {0} has no closed-form log density for the MAP cost")]
    UnsupportedMapCost(&'static str),
    #[error("invalid channel parameter: {0}")]
    InvalidParameter(&'static str),
}

/// Per-measurement likelihood channel `p(y_m | z_m)`.
#[derive(Debug, Clone, PartialEq)]
pub enum OutputChannel {
    /// `y = z + w`, `w ~ N(0, noise_var)`.
    Awgn { y: f64, noise_var: f64 },
    /// Two-component Gaussian noise: small-variance nominal component with
    /// probability `1 - pi_out`, large-variance outlier component otherwise.
    Mixture {
        y: f64,
        pi_out: f64,
        var_small: f64,
        var_large: f64,
    },
    /// `y = sgn(z)` with `y` in {-1, +1}.
    Sign { y: f64 },
    /// Hard constraint `z = 0` (Dirac-delta likelihood).
    DiracZero,
}

impl OutputChannel {
    pub fn validate(&self) -> Result<(), ChannelError> {
        match *self {
            OutputChannel::Awgn { noise_var, .. } if noise_var <= 0.0 => {
                Err(ChannelError::InvalidParameter("awgn noise_var must be > 0"))
            }
            OutputChannel::Mixture {
                pi_out,
                var_small,
                var_large,
                ..
            } if !(0.0..=1.0).contains(&pi_out) || var_small <= 0.0 || var_large <= var_small => {
                Err(ChannelError::InvalidParameter(
                    "mixture requires 0 <= pi_out <= 1 and 0 < var_small < var_large",
                ))
            }
            OutputChannel::Sign { y } if y != 1.0 && y != -1.0 => {
                Err(ChannelError::InvalidParameter("sign observation must be +-1"))
            }
            _ => Ok(()),
        }
    }

    /// MMSE posterior mean and variance of the tilted density.
    pub fn posterior_z(&self, p_hat: f64, nu_p: f64) -> Result<(f64, f64), ChannelError> {
        check_args(p_hat, nu_p)?;
        Ok(match *self {
            OutputChannel::Awgn { y, noise_var } => awgn_posterior(y, noise_var, p_hat, nu_p),
            OutputChannel::Mixture {
                y,
                pi_out,
                var_small,
                var_large,
            } => {
                let (la, ma, va) = awgn_branch(y, var_small, p_hat, nu_p);
                let (lb, mb, vb) = awgn_branch(y, var_large, p_hat, nu_p);
                let la = la + (1.0 - pi_out).ln();
                let lb = lb + pi_out.ln();
                let lse = logsumexp2(la, lb);
                let wa = (la - lse).exp();
                let wb = (lb - lse).exp();
                let mean = wa * ma + wb * mb;
                let var = wa * (va + ma * ma) + wb * (vb + mb * mb) - mean * mean;
                (mean, var.max(0.0))
            }
            OutputChannel::Sign { y } => {
                let (_, m, v) = if y >= 0.0 {
                    truncated_lower_moments(p_hat, nu_p)
                } else {
                    truncated_upper_moments(p_hat, nu_p)
                };
                (m, v)
            }
            OutputChannel::DiracZero => (0.0, 0.0),
        })
    }

    /// `ln B(p_hat, nu_p)`, the log of the tilted-density normalizer.
    pub fn log_partition_z(&self, p_hat: f64, nu_p: f64) -> Result<f64, ChannelError> {
        check_args(p_hat, nu_p)?;
        Ok(match *self {
            OutputChannel::Awgn { y, noise_var } => ln_normal_pdf(y, p_hat, nu_p + noise_var),
            OutputChannel::Mixture {
                y,
                pi_out,
                var_small,
                var_large,
            } => logsumexp2(
                (1.0 - pi_out).ln() + ln_normal_pdf(y, p_hat, nu_p + var_small),
                pi_out.ln() + ln_normal_pdf(y, p_hat, nu_p + var_large),
            ),
            OutputChannel::Sign { y } => {
                let (lm, _, _) = if y >= 0.0 {
                    truncated_lower_moments(p_hat, nu_p)
                } else {
                    truncated_upper_moments(p_hat, nu_p)
                };
                lm
            }
            OutputChannel::DiracZero => ln_normal_pdf(0.0, p_hat, nu_p),
        })
    }

    /// MAP proximal point of `-ln p(y|.)` at `p_hat` with stepsize `nu_p`,
    /// and the matching `nu_p * g'`.
    pub fn map_prox_z(&self, p_hat: f64, nu_p: f64) -> Result<(f64, f64), ChannelError> {
        check_args(p_hat, nu_p)?;
        match *self {
            OutputChannel::Awgn { y, noise_var } => Ok(awgn_posterior(y, noise_var, p_hat, nu_p)),
            OutputChannel::DiracZero => Ok((0.0, 0.0)),
            OutputChannel::Mixture {
                y,
                pi_out,
                var_small,
                var_large,
            } => Ok(mixture_prox(y, pi_out, var_small, var_large, p_hat, nu_p)),
            OutputChannel::Sign { .. } => Err(ChannelError::UnsupportedMap("sign")),
        }
    }

    /// `-ln p(y|z)` up to iterate-independent constants; `+inf` encodes an
    /// infeasible hard constraint.
    pub fn neg_log_likelihood(&self, z: f64) -> Result<f64, ChannelError> {
        Ok(match *self {
            OutputChannel::Awgn { y, noise_var } => {
                let d = y - z;
                d * d / (2.0 * noise_var)
            }
            OutputChannel::Mixture {
                y,
                pi_out,
                var_small,
                var_large,
            } => -logsumexp2(
                (1.0 - pi_out).ln() + ln_normal_pdf(y, z, var_small),
                pi_out.ln() + ln_normal_pdf(y, z, var_large),
            ),
            OutputChannel::Sign { y } => {
                let s = if z >= 0.0 { 1.0 } else { -1.0 };
                if s == y {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            OutputChannel::DiracZero => {
                if z == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        })
    }
}

/// Per-coefficient prior channel `p(x_n)`.
#[derive(Debug, Clone, PartialEq)]
pub enum InputChannel {
    /// Spike-and-slab: zero with probability `1 - tau`, otherwise
    /// `N(active_mean, active_var)`.
    BernoulliGauss {
        tau: f64,
        active_mean: f64,
        active_var: f64,
    },
    Gauss { mean: f64, var: f64 },
    Laplace { lambda: f64 },
    /// `p(x) propto 1`; used for the coordinates appended by mean removal.
    ImproperUniform,
}

impl InputChannel {
    pub fn validate(&self) -> Result<(), ChannelError> {
        match *self {
            InputChannel::BernoulliGauss {
                tau, active_var, ..
            } if !(0.0 < tau && tau <= 1.0) || active_var <= 0.0 => Err(
                ChannelError::InvalidParameter("bernoulli_gauss requires 0 < tau <= 1, var > 0"),
            ),
            InputChannel::Gauss { var, .. } if var <= 0.0 => {
                Err(ChannelError::InvalidParameter("gauss var must be > 0"))
            }
            InputChannel::Laplace { lambda } if lambda <= 0.0 => {
                Err(ChannelError::InvalidParameter("laplace lambda must be > 0"))
            }
            _ => Ok(()),
        }
    }

    /// Prior mean and variance, used for state initialization. The improper
    /// uniform prior has neither; (0, 1) is the conventional starting point
    /// and is overwritten by the first iteration.
    pub fn prior_mean_var(&self) -> (f64, f64) {
        match *self {
            InputChannel::BernoulliGauss {
                tau,
                active_mean,
                active_var,
            } => {
                let mean = tau * active_mean;
                let var = tau * (active_var + active_mean * active_mean) - mean * mean;
                (mean, var)
            }
            InputChannel::Gauss { mean, var } => (mean, var),
            InputChannel::Laplace { lambda } => (0.0, 2.0 / (lambda * lambda)),
            InputChannel::ImproperUniform => (0.0, 1.0),
        }
    }

    /// MMSE posterior mean and variance of the tilted density.
    pub fn posterior_x(&self, r_hat: f64, nu_r: f64) -> Result<(f64, f64), ChannelError> {
        check_args(r_hat, nu_r)?;
        Ok(match *self {
            InputChannel::Gauss { mean, var } => gauss_shrink(mean, var, r_hat, nu_r),
            InputChannel::ImproperUniform => (r_hat, nu_r),
            InputChannel::BernoulliGauss {
                tau,
                active_mean,
                active_var,
            } => {
                let l_spike = (1.0 - tau).ln() + ln_normal_pdf(0.0, r_hat, nu_r);
                let l_slab = tau.ln() + ln_normal_pdf(r_hat, active_mean, active_var + nu_r);
                let lse = logsumexp2(l_spike, l_slab);
                let pi_act = (l_slab - lse).exp();
                let (m, v) = gauss_shrink(active_mean, active_var, r_hat, nu_r);
                let mean = pi_act * m;
                let var = pi_act * (v + m * m) - mean * mean;
                (mean, var.max(0.0))
            }
            InputChannel::Laplace { lambda } => {
                let (lp, mp, vp, ln_, mn, vn) = laplace_pieces(lambda, r_hat, nu_r);
                let lse = logsumexp2(lp, ln_);
                let wp = (lp - lse).exp();
                let wn = (ln_ - lse).exp();
                let mean = wp * mp + wn * mn;
                let var = wp * (vp + mp * mp) + wn * (vn + mn * mn) - mean * mean;
                (mean, var.max(0.0))
            }
        })
    }

    /// `ln C(r_hat, nu_r)`; the improper uniform prior contributes 0 by
    /// convention (its constants cancel across iterations).
    pub fn log_partition_x(&self, r_hat: f64, nu_r: f64) -> Result<f64, ChannelError> {
        check_args(r_hat, nu_r)?;
        Ok(match *self {
            InputChannel::Gauss { mean, var } => ln_normal_pdf(r_hat, mean, var + nu_r),
            InputChannel::ImproperUniform => 0.0,
            InputChannel::BernoulliGauss {
                tau,
                active_mean,
                active_var,
            } => logsumexp2(
                (1.0 - tau).ln() + ln_normal_pdf(0.0, r_hat, nu_r),
                tau.ln() + ln_normal_pdf(r_hat, active_mean, active_var + nu_r),
            ),
            InputChannel::Laplace { lambda } => {
                let (lp, _, _, ln_, _, _) = laplace_pieces(lambda, r_hat, nu_r);
                (lambda / 2.0).ln() + logsumexp2(lp, ln_)
            }
        })
    }

    /// MAP proximal point of `-ln p(x)` at `r_hat` with stepsize `nu_r`.
    pub fn map_prox_x(&self, r_hat: f64, nu_r: f64) -> Result<(f64, f64), ChannelError> {
        check_args(r_hat, nu_r)?;
        match *self {
            InputChannel::Gauss { mean, var } => Ok(gauss_shrink(mean, var, r_hat, nu_r)),
            InputChannel::ImproperUniform => Ok((r_hat, nu_r)),
            InputChannel::Laplace { lambda } => {
                let thresh = lambda * nu_r;
                if r_hat.abs() <= thresh {
                    Ok((0.0, 0.0))
                } else {
                    Ok((r_hat - thresh * r_hat.signum(), nu_r))
                }
            }
            InputChannel::BernoulliGauss { .. } => {
                Err(ChannelError::UnsupportedMap("bernoulli_gauss"))
            }
        }
    }

    /// `-ln p(x)` up to iterate-independent constants.
    pub fn neg_log_prior(&self, x: f64) -> Result<f64, ChannelError> {
        match *self {
            InputChannel::Gauss { mean, var } => {
                let d = x - mean;
                Ok(d * d / (2.0 * var))
            }
            InputChannel::Laplace { lambda } => Ok(lambda * x.abs()),
            InputChannel::ImproperUniform => Ok(0.0),
            InputChannel::BernoulliGauss { .. } => {
                Err(ChannelError::UnsupportedMapCost("bernoulli_gauss"))
            }
        }
    }
}

fn check_args(center: f64, var: f64) -> Result<(), ChannelError> {
    if !center.is_finite() || !var.is_finite() {
        return Err(ChannelError::NonFinite);
    }
    if var <= 0.0 {
        return Err(ChannelError::NonPositiveVariance(var));
    }
    Ok(())
}

/// Gaussian-product posterior of `N(y; z, noise_var)` against `N(z; p, nu)`.
fn awgn_posterior(y: f64, noise_var: f64, p_hat: f64, nu_p: f64) -> (f64, f64) {
    let denom = nu_p + noise_var;
    let mean = p_hat + nu_p * (y - p_hat) / denom;
    let var = nu_p * noise_var / denom;
    (mean, var)
}

/// One mixture branch: log evidence plus branch posterior moments.
fn awgn_branch(y: f64, noise_var: f64, p_hat: f64, nu_p: f64) -> (f64, f64, f64) {
    let (m, v) = awgn_posterior(y, noise_var, p_hat, nu_p);
    (ln_normal_pdf(y, p_hat, nu_p + noise_var), m, v)
}

/// Posterior of `N(x; mean0, var0)` prior against `N(x; r, nu)` pseudo-data.
fn gauss_shrink(mean0: f64, var0: f64, r_hat: f64, nu_r: f64) -> (f64, f64) {
    let denom = var0 + nu_r;
    let mean = (var0 * r_hat + nu_r * mean0) / denom;
    let var = var0 * nu_r / denom;
    (mean, var)
}

/// Laplace tilted density splits into a positive and a negative truncated
/// Gaussian. Returns (log weight, mean, var) for each piece, with the common
/// `ln(lambda/2)` factor omitted from the weights.
fn laplace_pieces(lambda: f64, r_hat: f64, nu_r: f64) -> (f64, f64, f64, f64, f64, f64) {
    let shift = lambda * nu_r;
    let base = lambda * lambda * nu_r / 2.0;
    let (lmass_p, mp, vp) = truncated_lower_moments(r_hat - shift, nu_r);
    let (lmass_n, mn, vn) = truncated_upper_moments(r_hat + shift, nu_r);
    (
        base - lambda * r_hat + lmass_p,
        mp,
        vp,
        base + lambda * r_hat + lmass_n,
        mn,
        vn,
    )
}

/// Proximal step for the mixture likelihood: bisection on the stationarity
/// condition `(z - p_hat)/nu_p = d/dz ln p(y|z)`.
fn mixture_prox(
    y: f64,
    pi_out: f64,
    var_small: f64,
    var_large: f64,
    p_hat: f64,
    nu_p: f64,
) -> (f64, f64) {
    let dlog = |z: f64| -> f64 {
        let la = (1.0 - pi_out).ln() + ln_normal_pdf(y, z, var_small);
        let lb = pi_out.ln() + ln_normal_pdf(y, z, var_large);
        let lse = logsumexp2(la, lb);
        let wa = (la - lse).exp();
        let wb = (lb - lse).exp();
        (y - z) * (wa / var_small + wb / var_large)
    };
    let f = |z: f64| (z - p_hat) / nu_p - dlog(z);

    // f(z) -> -inf as z -> -inf and +inf as z -> +inf; expand until bracketed.
    let mut lo = p_hat.min(y);
    let mut hi = p_hat.max(y);
    let mut span = (hi - lo).max(nu_p.sqrt()).max(var_large.sqrt());
    while f(lo) > 0.0 {
        lo -= span;
        span *= 2.0;
    }
    span = (hi - lo).max(nu_p.sqrt()).max(var_large.sqrt());
    while f(hi) < 0.0 {
        hi += span;
        span *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let z = 0.5 * (lo + hi);

    // nu_z = nu_p * g' with g' = 1 / (1 + nu_p * psi''(z)), psi = -ln p(y|.)
    let la = (1.0 - pi_out).ln() + ln_normal_pdf(y, z, var_small);
    let lb = pi_out.ln() + ln_normal_pdf(y, z, var_large);
    let lse = logsumexp2(la, lb);
    let wa = (la - lse).exp();
    let wb = (lb - lse).exp();
    let ua = (y - z) / var_small;
    let ub = (y - z) / var_large;
    let dl = wa * ua + wb * ub;
    let ddl = wa * ua * ua + wb * ub * ub - dl * dl - (wa / var_small + wb / var_large);
    let denom = (1.0 - nu_p * ddl).max(1e-12);
    (z, nu_p / denom)
}
