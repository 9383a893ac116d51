//! Adaptive Simpson integration and the numerical references used to check
//! the closed forms.

use std::f64::consts::PI;

use crate::analysis::{psk_g, q_chiani, q_exact, AbepQuery, GaussianApproxParams};
use crate::error::Result;

const PANELS: usize = 2048;
const MAX_DEPTH: u32 = 40;

fn simpson_step(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson_step(fa, flm, fm, m - a);
    let right = simpson_step(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + refine(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Integral of `f` over `[a, b]` to roughly `rel_tol` relative accuracy.
///
/// A fixed composite pass over many panels sets the scale; each panel is then
/// refined adaptively against an absolute tolerance derived from it.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let h = (b - a) / PANELS as f64;
    let xs: Vec<f64> = (0..=2 * PANELS).map(|k| a + 0.5 * h * k as f64).collect();
    let fx: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let coarse: Vec<f64> = (0..PANELS)
        .map(|i| simpson_step(fx[2 * i], fx[2 * i + 1], fx[2 * i + 2], h))
        .collect();
    let scale: f64 = coarse.iter().map(|v| v.abs()).sum();
    if scale == 0.0 {
        return 0.0;
    }
    let tol = rel_tol * scale / PANELS as f64;
    (0..PANELS)
        .map(|i| {
            refine(
                &f,
                xs[2 * i],
                xs[2 * i + 2],
                fx[2 * i],
                fx[2 * i + 1],
                fx[2 * i + 2],
                coarse[i],
                tol,
                MAX_DEPTH,
            )
        })
        .sum()
}

fn gaussian_pdf(x: f64, mu: f64, var: f64) -> f64 {
    (-(x - mu).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

/// `E[Q(sqrt(s Y))]` for `Y` with density `y e^{-y}`, truncated at `y = 80`.
fn gamma2_average(q: impl Fn(f64) -> f64, s: f64, rel_tol: f64) -> f64 {
    // Put the finer grid where the integrand actually lives.
    let knee = (60.0 / s).min(80.0);
    let body = |y: f64| q((s * y).sqrt()) * y * (-y).exp();
    let head = integrate(body, 0.0, knee, rel_tol);
    if knee >= 80.0 {
        head
    } else {
        head + integrate(body, knee, 80.0, rel_tol)
    }
}

/// Beamforming ABEP as the average of the two-exponential `Q` approximation
/// over the Gaussian model of `v`, `E[Q~(sqrt(rho v^2 / 2))]`.
pub fn pb_abep_numeric(q: &AbepQuery, rel_tol: f64) -> Result<f64> {
    q.validate()?;
    let p = GaussianApproxParams::new(q.n);
    let sd = p.sigma_v2.sqrt();
    // The product of the Gaussian and the exponential peaks well below the
    // mean at high SNR, so the range is built around both.
    let peak = p.mu_v / (1.0 + p.sigma_v2 * q.rho / 2.0);
    let sd_post = (1.0 / p.sigma_v2 + q.rho / 2.0).powf(-0.5);
    let lo = (p.mu_v - 14.0 * sd).min(peak - 40.0 * sd_post);
    let hi = p.mu_v + 14.0 * sd;
    let near = (peak + 40.0 * sd_post).min(hi);
    let body = |v: f64| q_chiani((q.rho * v * v / 2.0).sqrt()) * gaussian_pdf(v, p.mu_v, p.sigma_v2);
    Ok(integrate(body, lo, peak, rel_tol) + integrate(body, peak, near, rel_tol) + integrate(body, near, hi, rel_tol))
}

/// Unconditional pairwise error probability between different antennas.
pub fn pep_numeric(q: &AbepQuery, rel_tol: f64) -> Result<f64> {
    q.validate()?;
    Ok(gamma2_average(q_exact, q.rho_n(), rel_tol))
}

/// PSK error probability of the surface given the right antenna.
pub fn psk_error_numeric(q: &AbepQuery, rel_tol: f64) -> Result<f64> {
    q.validate()?;
    let pref = 2.0 / (q.m.trailing_zeros() as f64).max(2.0);
    let mut sum = 0.0;
    for i in 1..=(q.m / 4).max(1) {
        sum += gamma2_average(q_exact, q.rho_n() * psk_g(i, q.m)?, rel_tol);
    }
    Ok(pref * sum)
}
