//! Reflection-vector optimizers for RIS-SSK with passive beamforming.
//!
//! The figure of merit is `d_min`, the smallest squared distance between the
//! noiseless received points `f^T Phi g_l` of any two transmit antennas. With
//! `c_p = f ⊙ (g_l - g_lhat)` for the antenna pair `p = (l, lhat)`, every
//! pairwise distance is `|c_p^T phi|^2`, so most of this module works on the
//! list of pair vectors.

mod sdr;

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};

pub use sdr::{sdr_beamform, solve_relaxation, RelaxedSolution, SdrDiagnostics, SdrOptions, SdrSolution};

/// Default cap on the number of grid points `brute_force_beamform` visits.
pub const BRUTE_FORCE_BUDGET: u128 = 1 << 20;

/// Unit-modulus reflection coefficients `exp(j theta_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionVector {
    theta: Vec<f64>,
    phi: Vec<Complex64>,
}

impl ReflectionVector {
    /// Phases are wrapped into `[0, 2pi)`.
    pub fn from_phases(theta: Vec<f64>) -> Self {
        let theta: Vec<f64> = theta.into_iter().map(wrap_phase).collect();
        let phi = theta.iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
        ReflectionVector { theta, phi }
    }

    /// Projects arbitrary complex entries onto the unit circle. Entries of
    /// zero magnitude get phase 0.
    pub fn from_unnormalized(values: &[Complex64]) -> Self {
        Self::from_phases(values.iter().map(|v| phase_or_zero(*v)).collect())
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn phases(&self) -> &[f64] {
        &self.theta
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.phi
    }

    /// Multiplies every coefficient by `exp(j angle)`.
    pub fn rotated(&self, angle: f64) -> Self {
        Self::from_phases(self.theta.iter().map(|t| t + angle).collect())
    }
}

pub(crate) fn wrap_phase(t: f64) -> f64 {
    let w = t.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

fn phase_or_zero(v: Complex64) -> f64 {
    if v.norm_sqr() == 0.0 {
        0.0
    } else {
        v.arg()
    }
}

/// Phases `theta_i = -arg(c_i)` that make `sum_i c_i exp(j theta_i)` real and
/// equal to `sum_i |c_i|`.
fn co_phase(c: &[Complex64]) -> ReflectionVector {
    ReflectionVector::from_phases(c.iter().map(|v| -phase_or_zero(*v)).collect())
}

/// Unordered antenna pairs `(l, lhat)` with `l < lhat`, in lexicographic order.
pub fn antenna_pairs(nt: usize) -> Vec<(usize, usize)> {
    (0..nt)
        .flat_map(|l| (l + 1..nt).map(move |k| (l, k)))
        .collect()
}

/// `c = f ⊙ (g_l - g_lhat)`.
pub fn pair_vector(ch: &ChannelRealization, l: usize, lhat: usize) -> Result<Vec<Complex64>> {
    ch.check_antenna(l)?;
    ch.check_antenna(lhat)?;
    if l == lhat {
        return Err(Error::InvalidParameter(format!(
            "pair needs two distinct antennas, got ({l}, {lhat})"
        )));
    }
    Ok(ch
        .f()
        .iter()
        .zip(ch.g_col(l).iter().zip(ch.g_col(lhat)))
        .map(|(f, (a, b))| f * (a - b))
        .collect())
}

pub(crate) fn all_pair_vectors(ch: &ChannelRealization) -> Vec<Vec<Complex64>> {
    antenna_pairs(ch.nt())
        .into_iter()
        .map(|(l, k)| pair_vector(ch, l, k).expect("pair indices in range"))
        .collect()
}

#[inline]
pub(crate) fn pair_distance(c: &[Complex64], phi: &[Complex64]) -> f64 {
    c.iter().zip(phi).map(|(c, p)| c * p).sum::<Complex64>().norm_sqr()
}

pub(crate) fn min_distance_over(pairs: &[Vec<Complex64>], phi: &[Complex64]) -> f64 {
    pairs
        .iter()
        .map(|c| pair_distance(c, phi))
        .fold(f64::INFINITY, f64::min)
}

fn check_phi(ch: &ChannelRealization, phi: &ReflectionVector) -> Result<()> {
    if phi.len() != ch.n() {
        return Err(Error::Dimension(format!(
            "reflection vector has {} entries, channel has {} elements",
            phi.len(),
            ch.n()
        )));
    }
    Ok(())
}

fn require_multi_antenna(ch: &ChannelRealization) -> Result<()> {
    if ch.nt() < 2 {
        return Err(Error::Dimension(format!(
            "need at least two transmit antennas, got {}",
            ch.nt()
        )));
    }
    Ok(())
}

/// `d_min = min_{l != lhat} |f^T Phi (g_l - g_lhat)|^2`.
pub fn min_pairwise_distance(ch: &ChannelRealization, phi: &ReflectionVector) -> Result<f64> {
    require_multi_antenna(ch)?;
    check_phi(ch, phi)?;
    Ok(min_distance_over(&all_pair_vectors(ch), phi.coefficients()))
}

/// Closed-form `d_min` maximizer for two transmit antennas.
pub fn optimal_two_tx(ch: &ChannelRealization) -> Result<ReflectionVector> {
    if ch.nt() != 2 {
        return Err(Error::Dimension(format!(
            "closed form needs exactly two transmit antennas, got {}",
            ch.nt()
        )));
    }
    Ok(co_phase(&pair_vector(ch, 0, 1)?))
}

/// Rank-one matrix `R = conj(c) c^T` with `phi^H R phi = |c^T phi|^2`,
/// returned row-major.
pub fn build_pair_matrix(
    ch: &ChannelRealization,
    l: usize,
    lhat: usize,
) -> Result<Vec<Vec<Complex64>>> {
    let c = pair_vector(ch, l, lhat)?;
    Ok(c.iter()
        .map(|a| c.iter().map(|b| a.conj() * b).collect())
        .collect())
}

/// The heuristic candidate set: one co-phasing vector per antenna pair.
pub fn low_complexity_candidates(ch: &ChannelRealization) -> Result<Vec<ReflectionVector>> {
    require_multi_antenna(ch)?;
    Ok(all_pair_vectors(ch).iter().map(|c| co_phase(c)).collect())
}

/// Best `d_min` candidate from [`low_complexity_candidates`]; the lowest
/// index wins ties.
pub fn low_complexity_beamform(ch: &ChannelRealization) -> Result<ReflectionVector> {
    let pairs = all_pair_vectors(ch);
    let candidates = low_complexity_candidates(ch)?;
    let (best, _) = argmax_first(
        candidates
            .iter()
            .map(|phi| min_distance_over(&pairs, phi.coefficients())),
    );
    Ok(candidates.into_iter().nth(best).expect("non-empty candidate set"))
}

/// Index and value of the maximum, keeping the first on ties.
pub(crate) fn argmax_first(values: impl Iterator<Item = f64>) -> (usize, f64) {
    values
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        })
}

pub fn brute_force_beamform(ch: &ChannelRealization, levels: usize) -> Result<ReflectionVector> {
    brute_force_beamform_with_budget(ch, levels, BRUTE_FORCE_BUDGET)
}

/// Exhaustive search over `theta_i in {2 pi k / levels}`. Grid points are
/// visited in odometer order (element 0 fastest) and the first maximizer is
/// kept.
pub fn brute_force_beamform_with_budget(
    ch: &ChannelRealization,
    levels: usize,
    budget: u128,
) -> Result<ReflectionVector> {
    require_multi_antenna(ch)?;
    if levels == 0 {
        return Err(Error::InvalidParameter("levels must be >= 1".into()));
    }
    let n = ch.n();
    let needed = (levels as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }

    let pairs = all_pair_vectors(ch);
    let rot: Vec<Complex64> = (0..levels)
        .map(|k| Complex64::from_polar(1.0, TAU * k as f64 / levels as f64))
        .collect();
    // terms[p][i][k] = c_{p,i} exp(j 2 pi k / levels)
    let terms: Vec<Vec<Vec<Complex64>>> = pairs
        .iter()
        .map(|c| c.iter().map(|ci| rot.iter().map(|r| ci * r).collect()).collect())
        .collect();

    let mut digits = vec![0usize; n];
    let mut best = (f64::NEG_INFINITY, digits.clone());
    loop {
        let d = terms
            .iter()
            .map(|t| {
                digits
                    .iter()
                    .enumerate()
                    .map(|(i, &k)| t[i][k])
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .fold(f64::INFINITY, f64::min);
        if d > best.0 {
            best = (d, digits.clone());
        }
        // advance odometer
        let mut i = 0;
        loop {
            if i == n {
                let theta = best
                    .1
                    .iter()
                    .map(|&k| TAU * k as f64 / levels as f64)
                    .collect();
                return Ok(ReflectionVector::from_phases(theta));
            }
            digits[i] += 1;
            if digits[i] < levels {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// Receive-SNR maximizing phases for a known active antenna `l`
/// (`theta_i = -arg f_i - arg g_il`).
pub fn intelligent_ris_phases(ch: &ChannelRealization, l: usize) -> Result<ReflectionVector> {
    ch.check_antenna(l)?;
    let c: Vec<Complex64> = ch.f().iter().zip(ch.g_col(l)).map(|(f, g)| f * g).collect();
    Ok(co_phase(&c))
}
