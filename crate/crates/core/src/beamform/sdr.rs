//! Semidefinite relaxation of the max-min distance problem, solved in
//! factored form and rounded back to a unit-modulus vector.
//!
//! The relaxed program is
//!
//! ```text
//! maximize  min_p tr(R_p V)   subject to  V ⪰ 0,  V_ii = 1
//! ```
//!
//! with `R_p = conj(c_p) c_p^T` for every antenna pair. Writing `V = X X^H`
//! with `X` an `N x r` matrix turns `V_ii = 1` into unit-norm rows of `X` and
//! `tr(R_p V)` into `||c_p^T X||^2`. The hard minimum is replaced by a soft
//! minimum `-tau log sum_p exp(-t_p / tau)`, which is maximized by projected
//! gradient ascent while `tau` is annealed towards zero. Gaussian
//! randomization `X r` followed by entrywise phase projection produces the
//! final reflection vector.

use num_complex::Complex64;
use rand::Rng;

use super::{all_pair_vectors, argmax_first, min_distance_over, require_multi_antenna, ReflectionVector};
use crate::channel::{complex_gaussian, ChannelRealization};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SdrOptions {
    /// Number of Gaussian randomization vectors.
    pub rounding_count: usize,
    /// Iteration cap per temperature stage.
    pub solver_iterations: usize,
    /// Columns of the factor `X`; `None` picks `min(N, ceil(sqrt(2K)) + 1)`.
    pub factor_rank: Option<usize>,
    /// Soft-min temperatures, each relative to the smallest pair distance at
    /// the start of its stage.
    pub softmin_temperature_schedule: Vec<f64>,
    /// Stage stops once the relative objective change falls below this.
    pub tolerance: f64,
    /// Element-wise coordinate-ascent sweeps applied to the best rounded
    /// candidates; 0 returns the best rounded candidate unchanged.
    pub refine_sweeps: usize,
    /// How many of the best rounded candidates are refined.
    pub refine_candidates: usize,
}

impl Default for SdrOptions {
    fn default() -> Self {
        SdrOptions {
            rounding_count: 100,
            solver_iterations: 500,
            factor_rank: None,
            softmin_temperature_schedule: vec![0.3, 0.1, 0.03, 0.01, 0.003, 0.001],
            tolerance: 1e-8,
            refine_sweeps: 3,
            refine_candidates: 10,
        }
    }
}

impl SdrOptions {
    pub fn validate(&self) -> Result<()> {
        if self.rounding_count == 0 {
            return Err(Error::InvalidParameter("rounding_count must be >= 1".into()));
        }
        if self.factor_rank == Some(0) {
            return Err(Error::InvalidParameter("factor_rank must be >= 1".into()));
        }
        if self.solver_iterations == 0 {
            return Err(Error::InvalidParameter("solver_iterations must be >= 1".into()));
        }
        if self.softmin_temperature_schedule.is_empty()
            || self.softmin_temperature_schedule.iter().any(|t| !(*t > 0.0))
        {
            return Err(Error::InvalidParameter(
                "temperature schedule must be non-empty and positive".into(),
            ));
        }
        Ok(())
    }

    pub fn rank_for(&self, n: usize, nt: usize) -> usize {
        self.factor_rank.unwrap_or_else(|| {
            let k = (nt * (nt - 1) / 2) as f64;
            ((2.0 * k).sqrt().ceil() as usize + 1).min(n)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdrDiagnostics {
    pub iterations: usize,
    /// Whether every stage met the tolerance before its iteration cap.
    pub converged: bool,
    pub final_softmin: f64,
    /// `min_p tr(R_p X X^H)` at the final factor. An estimate of the relaxed
    /// optimum, not a certified bound.
    pub relaxation_objective: f64,
    /// Index of the randomization vector the returned phases come from.
    pub chosen_candidate: usize,
    /// Best `d_min` among the rounded candidates, before refinement.
    pub rounded_d_min: f64,
    pub d_min: f64,
}

#[derive(Debug, Clone)]
pub struct RelaxedSolution {
    /// Row-major `N x r` factor with unit-norm rows.
    pub factor: Vec<Vec<Complex64>>,
    pub iterations: usize,
    pub converged: bool,
    pub final_softmin: f64,
    pub relaxation_objective: f64,
}

#[derive(Debug, Clone)]
pub struct SdrSolution {
    pub phi: ReflectionVector,
    pub diagnostics: SdrDiagnostics,
}

fn pair_values(pairs: &[Vec<Complex64>], x: &[Vec<Complex64>], rank: usize) -> Vec<(f64, Vec<Complex64>)> {
    pairs
        .iter()
        .map(|c| {
            let mut u = vec![Complex64::new(0.0, 0.0); rank];
            for (ci, row) in c.iter().zip(x) {
                for (uk, xk) in u.iter_mut().zip(row) {
                    *uk += ci * xk;
                }
            }
            (u.iter().map(|v| v.norm_sqr()).sum(), u)
        })
        .collect()
}

fn softmin(t: impl Iterator<Item = f64> + Clone, tau: f64) -> f64 {
    let m = t.clone().fold(f64::INFINITY, f64::min);
    let s: f64 = t.map(|v| (-(v - m) / tau).exp()).sum();
    m - tau * s.ln()
}

fn normalize_rows(x: &mut [Vec<Complex64>]) {
    for row in x.iter_mut() {
        let norm = row.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
        } else {
            row.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            row[0] = Complex64::new(1.0, 0.0);
        }
    }
}

/// Solves the factored relaxation starting from random unit-norm rows drawn
/// from `rng`.
pub fn solve_relaxation<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    opts: &SdrOptions,
    rng: &mut R,
) -> Result<RelaxedSolution> {
    require_multi_antenna(ch)?;
    opts.validate()?;
    let n = ch.n();
    let rank = opts.rank_for(n, ch.nt());
    let pairs = all_pair_vectors(ch);

    let mut x: Vec<Vec<Complex64>> = (0..n)
        .map(|_| (0..rank).map(|_| complex_gaussian(rng, 1.0)).collect())
        .collect();
    normalize_rows(&mut x);

    let lipschitz = pairs
        .iter()
        .map(|c| c.iter().map(|v| v.norm_sqr()).sum::<f64>())
        .fold(0.0, f64::max);
    if lipschitz == 0.0 {
        // every pair distance is identically zero
        return Ok(RelaxedSolution {
            factor: x,
            iterations: 0,
            converged: true,
            final_softmin: 0.0,
            relaxation_objective: 0.0,
        });
    }

    let mut step = 0.5 / lipschitz;
    let mut iterations = 0;
    let mut converged = true;
    let mut final_softmin = 0.0;

    for &rel_tau in &opts.softmin_temperature_schedule {
        let vals = pair_values(&pairs, &x, rank);
        let t_min = vals.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
        let tau = rel_tau * t_min.max(1e-12 * lipschitz * n as f64);
        let mut obj = softmin(vals.iter().map(|v| v.0), tau);
        let mut current = vals;
        let mut stage_done = false;

        for _ in 0..opts.solver_iterations {
            iterations += 1;
            // weights of the soft minimum
            let m = current.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
            let w: Vec<f64> = current.iter().map(|v| (-(v.0 - m) / tau).exp()).collect();
            let wsum: f64 = w.iter().sum();

            // ascent direction: sum_p w_p conj(c_p) (c_p^T X)
            let mut grad = vec![vec![Complex64::new(0.0, 0.0); rank]; n];
            for ((c, (_, u)), wp) in pairs.iter().zip(&current).zip(&w) {
                let wp = wp / wsum;
                for (gi, ci) in grad.iter_mut().zip(c) {
                    let coef = ci.conj() * wp;
                    for (g, uk) in gi.iter_mut().zip(u) {
                        *g += coef * uk;
                    }
                }
            }

            let mut accepted = None;
            for _ in 0..40 {
                let mut trial: Vec<Vec<Complex64>> = x
                    .iter()
                    .zip(&grad)
                    .map(|(row, g)| row.iter().zip(g).map(|(a, b)| a + b * step).collect())
                    .collect();
                normalize_rows(&mut trial);
                let vals = pair_values(&pairs, &trial, rank);
                let new_obj = softmin(vals.iter().map(|v| v.0), tau);
                if new_obj >= obj {
                    accepted = Some((trial, vals, new_obj));
                    step *= 1.5;
                    break;
                }
                step *= 0.5;
            }
            let Some((trial, vals, new_obj)) = accepted else {
                // no ascent step found: stationary to working precision
                stage_done = true;
                break;
            };
            let change = (new_obj - obj).abs() / obj.abs().max(f64::MIN_POSITIVE);
            x = trial;
            current = vals;
            obj = new_obj;
            if change < opts.tolerance {
                stage_done = true;
                break;
            }
        }
        converged &= stage_done;
        final_softmin = obj;
    }

    let relaxation_objective = pair_values(&pairs, &x, rank)
        .iter()
        .map(|v| v.0)
        .fold(f64::INFINITY, f64::min);
    Ok(RelaxedSolution {
        factor: x,
        iterations,
        converged,
        final_softmin,
        relaxation_objective,
    })
}

/// Relaxation, Gaussian randomization, then `refine_sweeps` rounds of
/// single-phase coordinate ascent on each of the `refine_candidates` best
/// rounded candidates. The solver
/// consumes its starting point from `rng` first, then the randomization
/// vectors, so two calls that differ only in `rounding_count` share their
/// leading candidates.
pub fn sdr_beamform<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    opts: &SdrOptions,
    rng: &mut R,
) -> Result<SdrSolution> {
    let relaxed = solve_relaxation(ch, opts, rng)?;
    let pairs = all_pair_vectors(ch);
    let rank = relaxed.factor.first().map_or(0, |r| r.len());

    let candidates: Vec<ReflectionVector> = (0..opts.rounding_count)
        .map(|_| {
            let r: Vec<Complex64> = (0..rank).map(|_| complex_gaussian(rng, 1.0)).collect();
            let raw: Vec<Complex64> = relaxed
                .factor
                .iter()
                .map(|row| row.iter().zip(&r).map(|(a, b)| a * b).sum())
                .collect();
            ReflectionVector::from_unnormalized(&raw)
        })
        .collect();
    let scores: Vec<f64> = candidates
        .iter()
        .map(|phi| min_distance_over(&pairs, phi.coefficients()))
        .collect();
    let (mut chosen, rounded_d_min) = argmax_first(scores.iter().copied());
    let mut phi = candidates[chosen].clone();
    let mut d_min = rounded_d_min;
    if opts.refine_sweeps > 0 && opts.refine_candidates > 0 {
        let mut order: Vec<usize> = (0..candidates.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        d_min = f64::NEG_INFINITY;
        for &k in order.iter().take(opts.refine_candidates) {
            let mut coeffs = candidates[k].coefficients().to_vec();
            refine_phases(&pairs, &mut coeffs, opts.refine_sweeps);
            let refined = ReflectionVector::from_unnormalized(&coeffs);
            let d = min_distance_over(&pairs, refined.coefficients());
            if d > d_min {
                (chosen, phi, d_min) = (k, refined, d);
            }
        }
    }
    Ok(SdrSolution {
        phi,
        diagnostics: SdrDiagnostics {
            iterations: relaxed.iterations,
            converged: relaxed.converged,
            final_softmin: relaxed.final_softmin,
            relaxation_objective: relaxed.relaxation_objective,
            chosen_candidate: chosen,
            rounded_d_min,
            d_min,
        },
    })
}

const REFINE_GRID: usize = 256;

/// Coordinate ascent on single phases: each element in turn moves to the
/// best of `REFINE_GRID` phases if that strictly raises the minimum pair
/// distance.
pub(crate) fn refine_phases(pairs: &[Vec<Complex64>], phi: &mut [Complex64], sweeps: usize) {
    let grid: Vec<Complex64> = (0..REFINE_GRID)
        .map(|k| Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / REFINE_GRID as f64))
        .collect();
    let mut sums: Vec<Complex64> = pairs
        .iter()
        .map(|c| c.iter().zip(phi.iter()).map(|(a, b)| a * b).sum())
        .collect();
    let mut current = sums.iter().map(|s| s.norm_sqr()).fold(f64::INFINITY, f64::min);
    for _ in 0..sweeps {
        let mut moved = false;
        for i in 0..phi.len() {
            let rest: Vec<Complex64> = sums.iter().zip(pairs).map(|(s, c)| s - c[i] * phi[i]).collect();
            let mut best = (current, None);
            for e in &grid {
                let d = rest
                    .iter()
                    .zip(pairs)
                    .map(|(r, c)| (r + c[i] * e).norm_sqr())
                    .fold(f64::INFINITY, f64::min);
                if d > best.0 {
                    best = (d, Some(*e));
                }
            }
            if let (d, Some(e)) = best {
                phi[i] = e;
                for ((s, r), c) in sums.iter_mut().zip(&rest).zip(pairs) {
                    *s = r + c[i] * e;
                }
                current = d;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamform::{
        brute_force_beamform, low_complexity_beamform, min_pairwise_distance, optimal_two_tx,
    };
    use crate::channel::{sample_channel, Purpose, StreamKey};

    fn chan(seed: u64, n: usize, nt: usize) -> ChannelRealization {
        sample_channel(n, nt, false, &mut StreamKey::channel(seed, 0).rng()).unwrap()
    }

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        StreamKey::new(seed, 0, 0, Purpose::Rounding).rng()
    }

    #[test]
    fn rank_rule() {
        let o = SdrOptions::default();
        assert_eq!(o.rank_for(4, 4), 4); // K = 6 -> ceil(3.46) + 1 = 5, capped at N
        assert_eq!(o.rank_for(64, 2), 3);
        assert_eq!(o.rank_for(64, 8), 9);
    }

    #[test]
    fn option_validation() {
        let bad = SdrOptions {
            rounding_count: 0,
            ..SdrOptions::default()
        };
        assert!(bad.validate().is_err());
        let bad = SdrOptions {
            factor_rank: Some(0),
            ..SdrOptions::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn output_is_unit_modulus_and_dmin_is_reproducible() {
        let ch = chan(1, 6, 4);
        let sol = sdr_beamform(&ch, &SdrOptions::default(), &mut rng(1)).unwrap();
        assert!(sol.phi.coefficients().iter().all(|p| (p.norm() - 1.0).abs() < 1e-12));
        let d = min_pairwise_distance(&ch, &sol.phi).unwrap();
        assert!((d - sol.diagnostics.d_min).abs() <= 1e-12 * d);
        assert!(sol.diagnostics.d_min <= sol.diagnostics.relaxation_objective * (1.0 + 1e-9));
    }

    #[test]
    fn two_tx_reaches_closed_form() {
        for s in 0..20 {
            let ch = chan(10 + s, 8, 2);
            let opt = min_pairwise_distance(&ch, &optimal_two_tx(&ch).unwrap()).unwrap();
            let sol = sdr_beamform(&ch, &SdrOptions::default(), &mut rng(s)).unwrap();
            assert!(sol.diagnostics.d_min >= 0.99 * opt, "seed {s}: {} vs {opt}", sol.diagnostics.d_min);
        }
    }

    #[test]
    fn more_rounding_never_hurts() {
        let ch = chan(3, 5, 4);
        let one = SdrOptions {
            rounding_count: 1,
            ..SdrOptions::default()
        };
        let a = sdr_beamform(&ch, &one, &mut rng(3)).unwrap();
        let b = sdr_beamform(&ch, &SdrOptions::default(), &mut rng(3)).unwrap();
        assert!(b.diagnostics.rounded_d_min >= a.diagnostics.rounded_d_min);
    }

    #[test]
    fn refinement_only_improves() {
        for s in 0..10 {
            let ch = chan(700 + s, 6, 4);
            let plain = SdrOptions {
                refine_sweeps: 0,
                ..SdrOptions::default()
            };
            let a = sdr_beamform(&ch, &plain, &mut rng(s)).unwrap();
            assert_eq!(a.diagnostics.d_min, a.diagnostics.rounded_d_min);
            let b = sdr_beamform(&ch, &SdrOptions::default(), &mut rng(s)).unwrap();
            assert_eq!(b.diagnostics.rounded_d_min, a.diagnostics.rounded_d_min);
            assert!(b.diagnostics.d_min >= a.diagnostics.d_min * (1.0 - 1e-12));
        }
    }

    #[test]
    fn competitive_with_grid_search_on_small_surface() {
        let mut good = 0;
        for s in 0..10 {
            let ch = chan(500 + s, 3, 4);
            let grid = min_pairwise_distance(&ch, &brute_force_beamform(&ch, 16).unwrap()).unwrap();
            let sol = sdr_beamform(&ch, &SdrOptions::default(), &mut rng(s)).unwrap();
            let low = min_pairwise_distance(&ch, &low_complexity_beamform(&ch).unwrap()).unwrap();
            assert!(sol.diagnostics.d_min > 0.0 && low > 0.0);
            if sol.diagnostics.d_min >= 0.95 * grid {
                good += 1;
            }
        }
        assert!(good >= 8, "{good}/10");
    }

    #[test]
    fn degenerate_channel() {
        let ch = chan(4, 4, 2);
        let same = ChannelRealization::new(
            vec![ch.g_col(0).to_vec(), ch.g_col(0).to_vec()],
            ch.f().to_vec(),
            None,
        )
        .unwrap();
        let sol = sdr_beamform(&same, &SdrOptions::default(), &mut rng(4)).unwrap();
        assert_eq!(sol.diagnostics.d_min, 0.0);
        assert_eq!(sol.phi.len(), 4);
    }
}
