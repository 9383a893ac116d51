//! Closed-form error-probability approximations.
//!
//! All expressions rest on a central-limit approximation of sums over the
//! `N` reflecting elements and are therefore most accurate for large `N`.
//! Union-bound based values can exceed one at low SNR; those are reported
//! clamped to `[0, 1/2]` in [`Abep::value`] with the unclamped number kept in
//! [`Abep::raw`].

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

/// Gaussian tail probability `Q(x) = P(Z > x)`.
pub fn q_exact(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Two-exponential approximation of `Q(x)` for `x >= 0`.
pub fn q_chiani(x: f64) -> f64 {
    let x2 = x * x;
    (-x2 / 2.0).exp() / 12.0 + (-2.0 * x2 / 3.0).exp() / 4.0
}

/// Parameters of a closed-form evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbepQuery {
    /// Linear transmit SNR.
    pub rho: f64,
    /// Reflecting elements.
    pub n: usize,
    /// Transmit antennas.
    pub nt: usize,
    /// PSK order of the surface (unused by the beamforming scheme).
    pub m: usize,
}

impl AbepQuery {
    pub fn new(rho: f64, n: usize, nt: usize, m: usize) -> Result<Self> {
        let q = AbepQuery { rho, n, nt, m };
        q.validate()?;
        Ok(q)
    }

    pub fn from_snr_db(snr_db: f64, n: usize, nt: usize, m: usize) -> Result<Self> {
        Self::new(10f64.powf(snr_db / 10.0), n, nt, m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) {
            return Err(Error::InvalidParameter(format!("rho must be > 0, got {}", self.rho)));
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter("N must be >= 1".into()));
        }
        if self.nt < 2 || !self.nt.is_power_of_two() {
            return Err(Error::NotPowerOfTwo("N_t", self.nt));
        }
        if self.m < 2 || !self.m.is_power_of_two() {
            return Err(Error::NotPowerOfTwo("M", self.m));
        }
        Ok(())
    }

    /// Product `rho N`, the only way the Alamouti expressions see `rho` and `N`.
    pub fn rho_n(&self) -> f64 {
        self.rho * self.n as f64
    }
}

/// A bound or approximation: `value` clamped for reporting, `raw` as computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Abep {
    pub value: f64,
    pub raw: f64,
}

impl Abep {
    fn clamped(raw: f64) -> Self {
        Abep {
            value: raw.clamp(0.0, 0.5),
            raw,
        }
    }

    fn exact(raw: f64) -> Self {
        Abep { value: raw, raw }
    }
}

/// Gaussian fit of `v = sum_i |f_i| |g_i1 - g_i2|`: mean, variance, and the
/// non-centrality `a^2 = mu_v^2` of `v^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianApproxParams {
    pub mu_v: f64,
    pub sigma_v2: f64,
    pub a2: f64,
}

impl GaussianApproxParams {
    pub fn new(n: usize) -> Self {
        let n = n as f64;
        GaussianApproxParams {
            mu_v: SQRT_2 / 4.0 * PI * n,
            sigma_v2: (2.0 - PI * PI / 8.0) * n,
            a2: PI * PI * n * n / 8.0,
        }
    }
}

/// MGF of `v^2` for Gaussian `v`, valid where `1 - 2 sigma^2 s > 0`.
pub fn mgf_noncentral_chisq(s: f64, params: &GaussianApproxParams) -> Result<f64> {
    let denom = 1.0 - 2.0 * params.sigma_v2 * s;
    if !(denom > 0.0) {
        return Err(Error::MgfPole { s, denom });
    }
    Ok(denom.powf(-0.5) * (params.a2 * s / denom).exp())
}

/// Average BEP of beamformed SSK with two transmit antennas.
pub fn abep_pb_two_tx(q: &AbepQuery) -> Result<Abep> {
    q.validate()?;
    if q.nt != 2 {
        return Err(Error::InvalidParameter(format!(
            "closed form is for N_t = 2, got {}",
            q.nt
        )));
    }
    let p = GaussianApproxParams::new(q.n);
    let v = mgf_noncentral_chisq(-q.rho / 4.0, &p)? / 12.0 + mgf_noncentral_chisq(-q.rho / 3.0, &p)? / 4.0;
    Ok(Abep::exact(v))
}

/// `g_PSK(i) = sin^2((2i - 1) pi / M)` for `1 <= i <= max(M/4, 1)`.
pub fn psk_g(i: usize, m: usize) -> Result<f64> {
    let top = (m / 4).max(1);
    if i == 0 || i > top {
        return Err(Error::IndexOutOfRange { index: i, bound: top + 1 });
    }
    Ok(((2 * i - 1) as f64 * PI / m as f64).sin().powi(2))
}

/// Average of `Q(sqrt(gamma x))`-type terms over a four-degree-of-freedom
/// chi-square, expressed through `p = (1 - sqrt(s / (2 + s))) / 2`.
fn dual_branch(s: f64) -> f64 {
    let p = 0.5 * (1.0 - (s / (2.0 + s)).sqrt());
    3.0 * p * p - 2.0 * p * p * p
}

/// Unconditional PEP between two hypotheses with different active antennas.
pub fn pep_astbc(q: &AbepQuery) -> f64 {
    dual_branch(q.rho_n())
}

/// Union bound on the antenna-index error probability.
pub fn antenna_error_bound(q: &AbepQuery) -> f64 {
    let m2 = (q.m * q.m) as f64;
    m2 * (q.nt - 1) as f64 * pep_astbc(q)
}

/// Source ABEP of the Alamouti scheme.
pub fn abep_source(q: &AbepQuery) -> Result<Abep> {
    q.validate()?;
    let nt = q.nt as f64;
    Ok(Abep::clamped(0.5 * antenna_error_bound(q) * nt / (nt - 1.0)))
}

fn psk_prefactor(m: usize) -> f64 {
    2.0 / (m.trailing_zeros() as f64).max(2.0)
}

/// PSK bit error probability of the surface given a correct antenna decision.
pub fn psk_error_given_antenna(q: &AbepQuery) -> Result<f64> {
    q.validate()?;
    let mut sum = 0.0;
    for i in 1..=(q.m / 4).max(1) {
        sum += dual_branch(q.rho_n() * psk_g(i, q.m)?);
    }
    Ok(psk_prefactor(q.m) * sum)
}

/// Surface ABEP: `P_e / 2 + (1 - P_e) P_A`.
pub fn abep_ris(q: &AbepQuery) -> Result<Abep> {
    q.validate()?;
    let pe = antenna_error_bound(q);
    let pa = psk_error_given_antenna(q)?;
    Ok(Abep::clamped(0.5 * pe + (1.0 - pe) * pa))
}

/// High-SNR source ABEP `(3/8) M^2 N_t (rho N)^-2`.
pub fn abep_source_asymptotic(q: &AbepQuery) -> f64 {
    0.375 * (q.m * q.m) as f64 * q.nt as f64 * q.rho_n().powi(-2)
}

/// High-SNR PSK error term.
pub fn psk_error_asymptotic(q: &AbepQuery) -> f64 {
    let sum: f64 = (1..=(q.m / 4).max(1))
        .map(|i| {
            let g = ((2 * i - 1) as f64 * PI / q.m as f64).sin().powi(2);
            (q.rho_n() * g).powi(-2)
        })
        .sum();
    1.5 / (q.m.trailing_zeros() as f64).max(2.0) * sum
}

/// High-SNR surface ABEP `P_e / 2 + P_A` with asymptotic terms.
pub fn abep_ris_asymptotic(q: &AbepQuery) -> f64 {
    let pe = 0.75 * (q.m * q.m) as f64 * (q.nt - 1) as f64 * q.rho_n().powi(-2);
    0.5 * pe + psk_error_asymptotic(q)
}

/// SNR in dB at which a decreasing function of SNR reaches `target`,
/// bracketed in `[lo_db, hi_db]` and found by bisection to 1e-9 dB.
pub fn snr_db_for(
    mut f: impl FnMut(f64) -> Result<f64>,
    target: f64,
    lo_db: f64,
    hi_db: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = (lo_db, hi_db);
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if !(flo >= target && fhi <= target) {
        return Err(Error::InvalidParameter(format!(
            "target {target} not bracketed: f({lo}) = {flo}, f({hi}) = {fhi}"
        )));
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Which closed form an analytic curve evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    BeamformingTwoTx,
    Alamouti,
    AlamoutiAsymptotic,
}

/// One row of an analytic curve; `ris` is absent for the beamforming scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub snr_db: f64,
    pub source: f64,
    pub ris: Option<f64>,
}

pub fn analytic_curve(kind: CurveKind, snr_db: &[f64], n: usize, nt: usize, m: usize) -> Result<Vec<CurvePoint>> {
    snr_db
        .iter()
        .map(|&db| {
            let q = AbepQuery::from_snr_db(db, n, nt, m)?;
            Ok(match kind {
                CurveKind::BeamformingTwoTx => CurvePoint {
                    snr_db: db,
                    source: abep_pb_two_tx(&q)?.value,
                    ris: None,
                },
                CurveKind::Alamouti => CurvePoint {
                    snr_db: db,
                    source: abep_source(&q)?.value,
                    ris: Some(abep_ris(&q)?.value),
                },
                CurveKind::AlamoutiAsymptotic => CurvePoint {
                    snr_db: db,
                    source: abep_source_asymptotic(&q),
                    ris: Some(abep_ris_asymptotic(&q)),
                },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(rho: f64, n: usize, nt: usize, m: usize) -> AbepQuery {
        AbepQuery::new(rho, n, nt, m).unwrap()
    }

    /// Composite Simpson on `[a, b]` with `2k` panels, used as an
    /// independent integration oracle.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, k: usize) -> f64 {
        let n = 2 * k;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn q_reference_values() {
        assert_eq!(q_exact(0.0), 0.5);
        let oracle = simpson(|t| (-t * t / 2.0).exp(), 0.0, 1.0, 2000) / (2.0 * PI).sqrt();
        assert!((q_exact(1.0) - (0.5 - oracle)).abs() < 1e-12);
        assert!((q_exact(1.0) - 0.158655253931457).abs() < 1e-13);
        for x in [0.1, 0.7, 1.9, 3.3, 5.0] {
            assert!((q_exact(-x) - (1.0 - q_exact(x))).abs() < 1e-15);
        }
    }

    #[test]
    fn chiani_values() {
        assert!((q_chiani(0.0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((q_chiani(1.0) - 0.178_898_501_4).abs() < 1e-9);
        // An upper bound on [1, 6], at most about 30% above the exact value.
        for i in 0..=50 {
            let x = 1.0 + 5.0 * i as f64 / 50.0;
            let rel = (q_chiani(x) - q_exact(x)) / q_exact(x);
            assert!(rel > 0.0 && rel < 0.3, "x = {x}: {rel}");
        }
    }

    #[test]
    fn gaussian_params() {
        let p = GaussianApproxParams::new(128);
        assert!((p.mu_v - 142.1723).abs() < 1e-3);
        assert!((p.sigma_v2 - 98.0863).abs() < 1e-3);
        assert!((p.a2 - p.mu_v * p.mu_v).abs() < 1e-9 * p.a2);
    }

    #[test]
    fn mgf_basics() {
        let p = GaussianApproxParams::new(16);
        assert_eq!(mgf_noncentral_chisq(0.0, &p).unwrap(), 1.0);
        let central = GaussianApproxParams { a2: 0.0, ..p };
        let s = -0.3;
        let expect = (1.0 - 2.0 * p.sigma_v2 * s).powf(-0.5);
        assert!((mgf_noncentral_chisq(s, &central).unwrap() - expect).abs() < 1e-15);
        let pole = 1.0 / (2.0 * p.sigma_v2) * (1.0 + 1e-12);
        assert!(matches!(mgf_noncentral_chisq(pole, &p), Err(Error::MgfPole { .. })));
        assert!(mgf_noncentral_chisq(2.0 * pole, &p).is_err());
    }

    #[test]
    fn pb_abep_limits_and_monotonicity() {
        let low = abep_pb_two_tx(&q(1e-12, 32, 2, 2)).unwrap().value;
        assert!((low - 1.0 / 3.0).abs() < 1e-9);
        let mut prev = f64::INFINITY;
        for db in (-40..=0).map(|d| d as f64) {
            let v = abep_pb_two_tx(&AbepQuery::from_snr_db(db, 32, 2, 2).unwrap()).unwrap().value;
            assert!(v > 0.0 && v <= 1.0 / 3.0 && v < prev);
            prev = v;
            let bigger = abep_pb_two_tx(&AbepQuery::from_snr_db(db, 64, 2, 2).unwrap()).unwrap().value;
            assert!(bigger < v);
        }
        assert!(abep_pb_two_tx(&q(1.0, 32, 4, 2)).is_err());
    }

    #[test]
    fn pb_abep_matches_integration() {
        // N = 128, rho tuned so the closed form is near 1e-4
        let n = 128;
        let target = 1e-4;
        let db = snr_db_for(
            |db| Ok(abep_pb_two_tx(&AbepQuery::from_snr_db(db, n, 2, 2)?)?.value),
            target,
            -60.0,
            20.0,
        )
        .unwrap();
        let rho = 10f64.powf(db / 10.0);
        let p = GaussianApproxParams::new(n);
        let sd = p.sigma_v2.sqrt();
        let pdf = |v: f64| (-(v - p.mu_v).powi(2) / (2.0 * p.sigma_v2)).exp() / (2.0 * PI * p.sigma_v2).sqrt();
        let oracle = simpson(
            |v| q_chiani((rho * v * v / 2.0).sqrt()) * pdf(v),
            p.mu_v - 14.0 * sd,
            p.mu_v + 14.0 * sd,
            20_000,
        );
        let closed = abep_pb_two_tx(&AbepQuery::new(rho, n, 2, 2).unwrap()).unwrap().value;
        assert!((closed - target).abs() < 1e-9);
        assert!((closed - oracle).abs() / oracle < 1e-3, "{closed} vs {oracle}");
    }

    #[test]
    fn psk_g_values() {
        assert!((psk_g(1, 2).unwrap() - 1.0).abs() < 1e-15);
        assert!((psk_g(1, 4).unwrap() - 0.5).abs() < 1e-15);
        assert!((psk_g(2, 8).unwrap() - 0.853553).abs() < 1e-6);
        assert!(psk_g(0, 8).is_err());
        assert!(psk_g(3, 8).is_err());
        assert!(psk_g(2, 4).is_err());
    }

    #[test]
    fn pep_values() {
        assert!((pep_astbc(&q(1e-15, 1, 2, 2)) - 0.5).abs() < 1e-7);
        let p = pep_astbc(&q(1.0, 2, 2, 2));
        // oracle: integrate Q(sqrt(rho x / 2)) against x / (4 N^2) exp(-x / (2N))
        let n = 2.0;
        let oracle = simpson(
            |x| q_exact((x / 2.0).sqrt()) * x / (4.0 * n * n) * (-x / (2.0 * n)).exp(),
            0.0,
            400.0,
            100_000,
        );
        assert!((p - oracle).abs() < 1e-9, "{p} vs {oracle}");
        assert!((p - 0.058058).abs() < 2e-6);

        let hi = pep_astbc(&q(100.0, 1, 2, 2));
        assert!((hi / 7.5e-5 - 1.0).abs() < 0.1);
    }

    #[test]
    fn source_abep() {
        let low = abep_source(&q(1e-15, 1, 2, 2)).unwrap();
        assert!((low.raw - 2.0).abs() < 1e-6);
        assert_eq!(low.value, 0.5);
        let hi = abep_source(&q(100.0, 1, 2, 2)).unwrap();
        assert!((hi.value / 3e-4 - 1.0).abs() < 0.05, "{}", hi.value);
        assert!((abep_source_asymptotic(&q(100.0, 1, 2, 2)) - 3e-4).abs() < 1e-15);
    }

    #[test]
    fn doubling_n_is_three_db() {
        for db in [-5.0, 0.0, 7.5] {
            let a = abep_source(&AbepQuery::from_snr_db(db, 64, 2, 2).unwrap()).unwrap();
            let b = abep_source(&AbepQuery::from_snr_db(db - 10.0 * 2f64.log10(), 128, 2, 2).unwrap()).unwrap();
            assert!((a.raw - b.raw).abs() <= 1e-12 * a.raw);
            let ra = abep_ris(&AbepQuery::new(2.0, 32, 4, 8).unwrap()).unwrap();
            let rb = abep_ris(&AbepQuery::new(1.0, 64, 4, 8).unwrap()).unwrap();
            assert!((ra.raw - rb.raw).abs() <= 1e-12 * ra.raw);
        }
    }

    #[test]
    fn ris_abep() {
        let query = q(100.0, 1, 2, 2);
        let pa = psk_error_given_antenna(&query).unwrap();
        assert!((psk_error_asymptotic(&query) - 7.5e-5).abs() < 1e-15);
        assert!((pa / 7.5e-5 - 1.0).abs() < 0.1);
        let total = abep_ris(&query).unwrap();
        assert!(total.value >= pa);
        let pe = antenna_error_bound(&query);
        assert!((total.raw - (0.5 * pe + (1.0 - pe) * pa)).abs() < 1e-18);
        for m in [2usize, 4, 8, 16] {
            for db in [-10.0, 0.0, 10.0, 20.0] {
                let qq = AbepQuery::from_snr_db(db, 16, 4, m).unwrap();
                let pa = psk_error_given_antenna(&qq).unwrap();
                assert!((0.0..=1.0).contains(&pa));
                assert!(abep_ris(&qq).unwrap().value >= pa.min(0.5));
            }
        }
    }

    #[test]
    fn asymptotic_slope_and_convergence() {
        let a = q(100.0, 4, 4, 8);
        let b = q(1000.0, 4, 4, 8);
        assert!((abep_source_asymptotic(&a) / abep_source_asymptotic(&b) - 100.0).abs() < 1e-9);
        assert!((abep_ris_asymptotic(&a) / abep_ris_asymptotic(&b) - 100.0).abs() < 1e-9);
        let mut prev = f64::INFINITY;
        for rho_n in [1e2, 1e3, 1e4, 1e5] {
            let qq = q(rho_n, 1, 2, 2);
            let ratio = abep_source_asymptotic(&qq) / abep_source(&qq).unwrap().raw;
            assert!(ratio > 1.0 && (ratio - 1.0) < prev);
            prev = ratio - 1.0;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn bisection() {
        let x = snr_db_for(|db| Ok(10f64.powf(-db / 10.0)), 1e-3, -10.0, 60.0).unwrap();
        assert!((x - 30.0).abs() < 1e-8);
        assert!(snr_db_for(|_| Ok(1.0), 0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn curves() {
        let grid = [0.0, 5.0, 10.0];
        let pb = analytic_curve(CurveKind::BeamformingTwoTx, &grid, 8, 2, 2).unwrap();
        assert!(pb.iter().all(|p| p.ris.is_none()));
        let al = analytic_curve(CurveKind::Alamouti, &grid, 8, 2, 2).unwrap();
        assert_eq!(al.len(), 3);
        assert!(al.windows(2).all(|w| w[1].source <= w[0].source));
    }

    #[test]
    fn query_validation() {
        assert!(AbepQuery::new(0.0, 4, 2, 2).is_err());
        assert!(AbepQuery::new(1.0, 0, 2, 2).is_err());
        assert!(AbepQuery::new(1.0, 4, 3, 2).is_err());
        assert!(AbepQuery::new(1.0, 4, 2, 6).is_err());
    }
}
