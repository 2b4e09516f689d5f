//! Independent numerical oracles: adaptive quadrature for the tilted-density
//! moments, bisection for monotone scalar equations, and golden-section
//! minimization. These deliberately avoid the closed forms in `channels` so
//! they can serve as cross-checks; the CLI `oracle` subcommand prints their
//! values for a fixed set of fixtures.

use crate::channels::{InputChannel, OutputChannel};
use crate::special::{ln_normal_pdf, logsumexp2};

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), fm)
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (left, flm) = simpson(f, a, fa, m, fm);
        let (right, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, flm, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, right, frm, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb) = (f(a), f(b));
    let (whole, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, fm, tol, 48)
}

/// Integrate over a range split at the given interior breakpoints, so narrow
/// likelihood bumps are not stepped over. Each panel between breakpoints is
/// further subdivided on a fixed two-sided geometric ladder: an adaptive rule
/// seeded only with panel endpoints terminates at zero whenever the integrand
/// vanishes at those samples (e.g. an `x`-weighted integrand on a panel
/// starting at `x = 0`, or a density spike hugging a truncation boundary).
fn integrate_split<F: Fn(f64) -> f64>(f: &F, points: &mut Vec<f64>, tol: f64) -> f64 {
    const LADDER: [f64; 9] = [1e-4, 1e-3, 1e-2, 0.05, 0.15, 0.3, 0.5, 0.7, 0.9];
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup();
    let mut dense = Vec::with_capacity(points.len() * (2 * LADDER.len() + 1));
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        dense.push(a);
        for t in LADDER {
            dense.push(a + t * (b - a));
            dense.push(b - t * (b - a));
        }
    }
    dense.push(*points.last().unwrap());
    dense.sort_by(|a, b| a.partial_cmp(b).unwrap());
    dense.dedup();
    dense
        .windows(2)
        .map(|w| integrate(f, w[0], w[1], tol))
        .sum()
}

/// Zeroth/first/second moments of a nonnegative integrand.
fn moments<F: Fn(f64) -> f64>(f: &F, points: &[f64], tol: f64) -> (f64, f64, f64) {
    let mut p0 = points.to_vec();
    let mass = integrate_split(f, &mut p0, tol);
    let mut p1 = points.to_vec();
    let m1 = integrate_split(&|z| z * f(z), &mut p1, tol);
    let mean = m1 / mass;
    let mut p2 = points.to_vec();
    let m2 = integrate_split(&|z| (z - mean) * (z - mean) * f(z), &mut p2, tol);
    (mass, mean, m2 / mass)
}

/// Quadrature oracle for an output channel: `(ln B, z_hat, nu_z)` of the
/// tilted density `p(y|z) N(z; p_hat, nu_p)`. Dirac and sign supports are
/// handled by restricting the domain; everything else integrates a smooth
/// density over a generous window.
pub fn output_tilted_moments(ch: &OutputChannel, p_hat: f64, nu_p: f64) -> (f64, f64, f64) {
    let sigma = nu_p.sqrt();
    match *ch {
        OutputChannel::DiracZero => (ln_normal_pdf(0.0, p_hat, nu_p), 0.0, 0.0),
        OutputChannel::Sign { y } => {
            let (a, b) = if y >= 0.0 {
                (0.0, (p_hat + 14.0 * sigma).max(14.0 * sigma))
            } else {
                ((p_hat - 14.0 * sigma).min(-14.0 * sigma), 0.0)
            };
            // Peak-shift so the integrand is O(1): the Gaussian's maximum on
            // the half-line sits at the clamped p_hat.
            let z_star = p_hat.clamp(a, b);
            let peak = 0.5 * (z_star - p_hat) * (z_star - p_hat) / nu_p;
            let f = move |z: f64| (peak - 0.5 * (z - p_hat) * (z - p_hat) / nu_p).exp();
            // When p_hat lies outside the half-line the mass piles up within
            // ~nu_p/|p_hat| of the origin; a geometric ladder of breakpoints
            // next to the boundary keeps the adaptive rule from stepping
            // over that spike (whose interior peak none of [a, z_star, b]
            // touches for z-weighted integrands).
            let side = if y >= 0.0 { 1.0 } else { -1.0 };
            let mut pts = vec![a, z_star, b];
            for k in [1e-3, 1e-2, 0.1, 0.5, 1.0, 3.0] {
                pts.push((side * k * sigma).clamp(a, b));
            }
            let (mass, mean, var) = moments(&f, &pts, 1e-14);
            let ln_b = mass.ln() - peak - 0.5 * (crate::special::LN_2PI + nu_p.ln());
            (ln_b, mean, var)
        }
        OutputChannel::Awgn { .. } | OutputChannel::Mixture { .. } => {
            let ln_like = |z: f64| -> f64 {
                match *ch {
                    OutputChannel::Awgn { y, noise_var } => ln_normal_pdf(y, z, noise_var),
                    OutputChannel::Mixture {
                        y,
                        pi_out,
                        var_small,
                        var_large,
                    } => logsumexp2(
                        (1.0 - pi_out).ln() + ln_normal_pdf(y, z, var_small),
                        pi_out.ln() + ln_normal_pdf(y, z, var_large),
                    ),
                    _ => unreachable!(),
                }
            };
            let y = match *ch {
                OutputChannel::Awgn { y, .. } | OutputChannel::Mixture { y, .. } => y,
                _ => unreachable!(),
            };
            // Peak-shift the exponent so the integrand is O(1).
            let shift = ln_like(p_hat).max(ln_like(y));
            let f = move |z: f64| (ln_like(z) + ln_normal_pdf(z, p_hat, nu_p) - shift).exp();
            let lo = (p_hat - 14.0 * sigma).min(y - 14.0 * sigma);
            let hi = (p_hat + 14.0 * sigma).max(y + 14.0 * sigma);
            let pts = [lo, p_hat, y, hi];
            let (mass, mean, var) = moments(&f, &pts, 1e-14);
            (mass.ln() + shift, mean, var)
        }
    }
}

/// Quadrature oracle for an input channel: `(ln C, x_hat, nu_x)`. The
/// Bernoulli-Gaussian spike is accumulated analytically; only the slab is
/// integrated.
pub fn input_tilted_moments(ch: &InputChannel, r_hat: f64, nu_r: f64) -> (f64, f64, f64) {
    let sigma = nu_r.sqrt();
    match *ch {
        InputChannel::ImproperUniform => (0.0, r_hat, nu_r),
        InputChannel::Gauss { mean, var } => {
            let f = |x: f64| {
                (ln_normal_pdf(x, mean, var) + ln_normal_pdf(x, r_hat, nu_r)).exp()
            };
            let s0 = var.sqrt();
            let lo = (r_hat - 14.0 * sigma).min(mean - 14.0 * s0);
            let hi = (r_hat + 14.0 * sigma).max(mean + 14.0 * s0);
            let (mass, m, v) = moments(&f, &[lo, mean, r_hat, hi], 1e-14);
            (mass.ln(), m, v)
        }
        InputChannel::Laplace { lambda } => {
            let f = move |x: f64| {
                ((lambda / 2.0).ln() - lambda * x.abs() + ln_normal_pdf(x, r_hat, nu_r)).exp()
            };
            let lo = (r_hat - 14.0 * sigma).min(-14.0 / lambda);
            let hi = (r_hat + 14.0 * sigma).max(14.0 / lambda);
            let (mass, m, v) = moments(&f, &[lo, 0.0, r_hat, hi], 1e-14);
            (mass.ln(), m, v)
        }
        InputChannel::BernoulliGauss {
            tau,
            active_mean,
            active_var,
        } => {
            let spike_mass = (1.0 - tau) * ln_normal_pdf(0.0, r_hat, nu_r).exp();
            let f = move |x: f64| {
                (ln_normal_pdf(x, active_mean, active_var) + ln_normal_pdf(x, r_hat, nu_r)).exp()
            };
            let s0 = active_var.sqrt();
            let lo = (r_hat - 14.0 * sigma).min(active_mean - 14.0 * s0);
            let hi = (r_hat + 14.0 * sigma).max(active_mean + 14.0 * s0);
            let mut pts = vec![lo, active_mean, r_hat, hi];
            let slab_mass = tau * integrate_split(&f, &mut pts, 1e-15);
            let mut pts = vec![lo, active_mean, r_hat, hi];
            let slab_m1 = tau * integrate_split(&|x| x * f(x), &mut pts, 1e-15);
            let mut pts = vec![lo, active_mean, r_hat, hi];
            let slab_m2 = tau * integrate_split(&|x| x * x * f(x), &mut pts, 1e-15);
            let mass = spike_mass + slab_mass;
            let mean = slab_m1 / mass;
            let var = slab_m2 / mass - mean * mean;
            (mass.ln(), mean, var.max(0.0))
        }
    }
}

/// Bisection for a root of the increasing map `f` inside `[lo, hi]`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: u32) -> f64 {
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section minimization of a unimodal `f` on `[lo, hi]`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: u32) -> f64 {
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}
