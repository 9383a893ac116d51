//! Self-checks of the optimizers, detectors and closed forms.

use std::fmt;

use crate::analysis::{abep_pb_two_tx, pep_astbc, psk_error_given_antenna, AbepQuery, GaussianApproxParams};
use crate::astbc_link::{
    combined_metric, detect_fast_with, detect_optimal_with, equivalent_channels, joint_cost, psk_points,
    transmit_with, AstbcFrame,
};
use crate::beamform::{
    brute_force_beamform, low_complexity_beamform, min_pairwise_distance, optimal_two_tx, sdr_beamform,
    SdrOptions,
};
use crate::channel::{sample_channel, NoiseModel, Purpose, StreamKey};
use crate::error::Result;
use crate::harness::quadrature::{pb_abep_numeric, pep_numeric, psk_error_numeric};

use rand::Rng;

const SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationLevel {
    /// Reduced sample sizes, a few seconds.
    Fast,
    /// Full sample sizes.
    Full,
}

impl ValidationLevel {
    fn pick(self, fast: usize, full: usize) -> usize {
        match self {
            ValidationLevel::Fast => fast,
            ValidationLevel::Full => full,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: measured {:.6}, threshold {:.6} ({})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.threshold,
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub level: ValidationLevel,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn at_least(name: &'static str, measured: f64, threshold: f64, detail: String) -> CheckResult {
    CheckResult {
        name,
        passed: measured >= threshold,
        measured,
        threshold,
        detail,
    }
}

fn at_most(name: &'static str, measured: f64, threshold: f64, detail: String) -> CheckResult {
    CheckResult {
        name,
        passed: measured <= threshold,
        measured,
        threshold,
        detail,
    }
}

/// Fraction of channels (`N = 4`, `N_t = 4`) where the relaxation reaches
/// 95% of the 16-level grid optimum.
pub fn check_sdr_vs_grid(channels: usize) -> Result<CheckResult> {
    let opts = SdrOptions::default();
    let mut hits = 0;
    for t in 0..channels as u64 {
        let ch = sample_channel(4, 4, false, &mut StreamKey::channel(SEED, t).rng())?;
        let grid = min_pairwise_distance(&ch, &brute_force_beamform(&ch, 16)?)?;
        let mut rng = StreamKey::new(SEED, 0, t, Purpose::Rounding).rng();
        let sdr = sdr_beamform(&ch, &opts, &mut rng)?.diagnostics.d_min;
        if sdr >= 0.95 * grid {
            hits += 1;
        }
    }
    Ok(at_least(
        "sdr-vs-grid",
        hits as f64 / channels as f64,
        0.9,
        format!("{hits}/{channels} channels within 95% of the grid optimum"),
    ))
}

/// With two antennas the co-phasing candidate is the optimum and the
/// relaxation should land within 1% of it.
pub fn check_two_antenna_optimality(channels: usize) -> Result<Vec<CheckResult>> {
    let opts = SdrOptions::default();
    let (mut worst_lc, mut worst_sdr) = (0f64, f64::INFINITY);
    for t in 0..channels as u64 {
        let ch = sample_channel(8, 2, false, &mut StreamKey::channel(SEED + 1, t).rng())?;
        let opt = min_pairwise_distance(&ch, &optimal_two_tx(&ch)?)?;
        let lc = min_pairwise_distance(&ch, &low_complexity_beamform(&ch)?)?;
        worst_lc = worst_lc.max((lc - opt).abs() / opt);
        let mut rng = StreamKey::new(SEED + 1, 0, t, Purpose::Rounding).rng();
        worst_sdr = worst_sdr.min(sdr_beamform(&ch, &opts, &mut rng)?.diagnostics.d_min / opt);
    }
    Ok(vec![
        at_most(
            "two-antenna-low-complexity",
            worst_lc,
            1e-12,
            format!("largest relative gap to the optimum over {channels} channels"),
        ),
        at_least(
            "two-antenna-sdr",
            worst_sdr,
            0.99,
            format!("smallest ratio to the optimum over {channels} channels"),
        ),
    ])
}

/// Inner PSK decisions of the combining detector against exhaustive search
/// at the true antenna, and whole-frame agreement with joint ML at `rho N = 100`.
pub fn check_detectors(frames: usize) -> Result<Vec<CheckResult>> {
    let (n, nt, m) = (64, 4, 4);
    let noise = NoiseModel::from_snr(100.0 / n as f64)?;
    let psk = psk_points(m);
    let (mut inner_ok, mut agree) = (0usize, 0usize);
    for t in 0..frames as u64 {
        let ch = sample_channel(n, nt, false, &mut StreamKey::channel(SEED + 2, t).rng())?;
        let eqs = equivalent_channels(&ch)?;
        let mut bits = StreamKey::new(SEED + 2, 0, t, Purpose::Bits).rng();
        let frame = AstbcFrame::new(
            bits.random_range(0..nt),
            bits.random_range(0..m),
            bits.random_range(0..m),
            m,
        )?;
        let mut nrng = StreamKey::new(SEED + 2, 0, t, Purpose::Noise).rng();
        let (y1, y2) = transmit_with(&eqs[frame.antenna], &frame, &noise, &mut nrng);

        let eq = &eqs[frame.antenna];
        let cm = combined_metric(y1, y2, eq, &psk);
        let mut best = (f64::INFINITY, 0, 0);
        for k1 in 0..m {
            for k2 in 0..m {
                let c = joint_cost(y1, y2, eq, crate::astbc_link::psk_phase(k1, m), crate::astbc_link::psk_phase(k2, m));
                if c < best.0 {
                    best = (c, k1, k2);
                }
            }
        }
        if (cm.k1, cm.k2) == (best.1, best.2) {
            inner_ok += 1;
        }
        let fast = detect_fast_with(y1, y2, &eqs, &psk);
        let opt = detect_optimal_with(y1, y2, &eqs, &psk);
        if (fast.antenna, fast.k1, fast.k2) == (opt.antenna, opt.k1, opt.k2) {
            agree += 1;
        }
    }
    Ok(vec![
        at_least(
            "detector-inner-decisions",
            inner_ok as f64 / frames as f64,
            1.0,
            format!("{inner_ok}/{frames} frames match exhaustive search at the true antenna"),
        ),
        at_least(
            "detector-agreement",
            agree as f64 / frames as f64,
            0.99,
            format!("{agree}/{frames} frames agree with joint ML at rho N = 100"),
        ),
    ])
}

/// Sample moments of `v = sum |f_i| |g_i1 - g_i2|` at `N = 128` against the
/// Gaussian model.
pub fn check_clt_moments(draws: usize) -> Result<Vec<CheckResult>> {
    let n = 128;
    let p = GaussianApproxParams::new(n);
    let (mut s1, mut s2) = (0.0, 0.0);
    for t in 0..draws as u64 {
        let ch = sample_channel(n, 2, false, &mut StreamKey::channel(SEED + 3, t).rng())?;
        let v: f64 = (0..n).map(|i| ch.f()[i].norm() * (ch.g(i, 0) - ch.g(i, 1)).norm()).sum();
        s1 += v;
        s2 += v * v;
    }
    let k = draws as f64;
    let mean = s1 / k;
    let var = (s2 - k * mean * mean) / (k - 1.0);
    Ok(vec![
        at_most(
            "clt-mean",
            (mean / p.mu_v - 1.0).abs(),
            0.01,
            format!("sample mean {mean:.4} vs {:.4} over {draws} draws", p.mu_v),
        ),
        at_most(
            "clt-variance",
            (var / p.sigma_v2 - 1.0).abs(),
            0.05,
            format!("sample variance {var:.4} vs {:.4}", p.sigma_v2),
        ),
    ])
}

/// `(rho, N)` grid for the closed-form checks: `rho N` from 1 to 1000 at
/// three surface sizes.
pub fn closed_form_grid() -> Vec<(f64, usize)> {
    let mut g = Vec::new();
    for n in [8usize, 32, 128] {
        for rn in [1.0, 10.0, 100.0, 1000.0] {
            g.push((rn / n as f64, n));
        }
    }
    g
}

/// Largest relative deviation between each closed form and its numerical
/// integral over [`closed_form_grid`].
pub fn check_closed_forms() -> Result<Vec<CheckResult>> {
    let tol = 1e-9;
    let (mut pb, mut pep, mut pa) = (0f64, 0f64, 0f64);
    for (rho, n) in closed_form_grid() {
        let q2 = AbepQuery::new(rho, n, 2, 2)?;
        pb = pb.max((abep_pb_two_tx(&q2)?.value / pb_abep_numeric(&q2, tol)? - 1.0).abs());
        pep = pep.max((pep_astbc(&q2) / pep_numeric(&q2, tol)? - 1.0).abs());
        for m in [2, 4, 8] {
            let q = AbepQuery::new(rho, n, 2, m)?;
            pa = pa.max((psk_error_given_antenna(&q)? / psk_error_numeric(&q, tol)? - 1.0).abs());
        }
    }
    let detail = "largest relative deviation over 12 (rho, N) points".to_string();
    Ok(vec![
        at_most("closed-form-beamforming", pb, 1e-3, detail.clone()),
        at_most("closed-form-pep", pep, 1e-3, detail.clone()),
        at_most("closed-form-psk", pa, 1e-3, detail),
    ])
}

/// Runs every check at the given level.
pub fn validate_suite(level: ValidationLevel) -> Result<ValidationReport> {
    let mut checks = vec![check_sdr_vs_grid(level.pick(30, 100))?];
    checks.extend(check_two_antenna_optimality(level.pick(20, 100))?);
    checks.extend(check_detectors(level.pick(2_000, 10_000))?);
    checks.extend(check_clt_moments(level.pick(20_000, 100_000))?);
    checks.extend(check_closed_forms()?);
    Ok(ValidationReport { level, checks })
}
