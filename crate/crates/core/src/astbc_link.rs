//! RIS-SSK with a virtual Alamouti code.
//!
//! The surface is split into two halves. In slot one the halves apply the
//! PSK phases `(a1, a2)`, in slot two `(pi - a2, -a1)`, which gives
//!
//! ```text
//! [y1]   [ e^{j a1}    e^{j a2} ] [h1]
//! [y2] = [-e^{-j a2}   e^{-j a1}] [h2] + w
//! ```
//!
//! with `h1`, `h2` the cascades of the active antenna through each half.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{sample_awgn, ChannelRealization, NoiseModel};
use crate::error::{Error, Result};
use crate::pb_link::{bits_to_index, index_to_bits, log2_exact};

/// One two-slot frame: active antenna plus the PSK indices `k1`, `k2`
/// (phases `2 pi k / M`) of the two sub-surfaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AstbcFrame {
    pub antenna: usize,
    pub k1: usize,
    pub k2: usize,
    pub m: usize,
}

impl AstbcFrame {
    pub fn new(antenna: usize, k1: usize, k2: usize, m: usize) -> Result<Self> {
        log2_exact("M", m)?;
        for k in [k1, k2] {
            if k >= m {
                return Err(Error::IndexOutOfRange { index: k, bound: m });
            }
        }
        Ok(AstbcFrame { antenna, k1, k2, m })
    }

    /// Builds a frame from `log2(nt)` source bits and `2 log2(m)` surface bits.
    pub fn from_bits(src_bits: &[u8], ris_bits: &[u8], nt: usize, m: usize) -> Result<Self> {
        let sym = crate::pb_link::encode_ssk(src_bits, nt)?;
        let (k1, k2) = ris_bits_to_indices(ris_bits, m)?;
        Self::new(sym.antenna(), k1, k2, m)
    }

    pub fn alpha1(&self) -> f64 {
        psk_phase(self.k1, self.m)
    }

    pub fn alpha2(&self) -> f64 {
        psk_phase(self.k2, self.m)
    }

    pub fn ris_bits(&self) -> Vec<u8> {
        let w = self.m.trailing_zeros() as usize;
        let mut b = index_to_bits(self.k1, w);
        b.extend(index_to_bits(self.k2, w));
        b
    }
}

/// Bits carried per two-slot frame: `log2(nt) + 2 log2(m)`.
pub fn bits_per_frame(nt: usize, m: usize) -> Result<usize> {
    Ok(log2_exact("N_t", nt)? + 2 * log2_exact("M", m)?)
}

/// Spectral efficiency in bits per channel use.
pub fn bits_per_channel_use(nt: usize, m: usize) -> Result<f64> {
    Ok(bits_per_frame(nt, m)? as f64 / 2.0)
}

pub fn psk_phase(k: usize, m: usize) -> f64 {
    TAU * k as f64 / m as f64
}

pub fn psk_points(m: usize) -> Vec<Complex64> {
    (0..m).map(|k| Complex64::from_polar(1.0, psk_phase(k, m))).collect()
}

fn ris_bits_to_indices(bits: &[u8], m: usize) -> Result<(usize, usize)> {
    let w = log2_exact("M", m)?;
    if bits.len() != 2 * w {
        return Err(Error::BitLength {
            expected: 2 * w,
            got: bits.len(),
        });
    }
    Ok((bits_to_index(&bits[..w]), bits_to_index(&bits[w..])))
}

/// Maps `2 log2(m)` bits to the two sub-surface phases. Each half is read as
/// a natural binary number `k` and mapped to `2 pi k / m`.
pub fn encode_ris_bits(bits: &[u8], m: usize) -> Result<(f64, f64)> {
    let (k1, k2) = ris_bits_to_indices(bits, m)?;
    Ok((psk_phase(k1, m), psk_phase(k2, m)))
}

/// Inverse of [`encode_ris_bits`] for phases on the PSK grid.
pub fn decode_ris_phases(alpha1: f64, alpha2: f64, m: usize) -> Result<Vec<u8>> {
    let w = log2_exact("M", m)?;
    let idx = |a: f64| ((a.rem_euclid(TAU) / TAU * m as f64).round() as usize) % m;
    let mut b = index_to_bits(idx(alpha1), w);
    b.extend(index_to_bits(idx(alpha2), w));
    Ok(b)
}

/// Alamouti code matrix for the phase pair `(a1, a2)`, row-major.
pub fn code_matrix(alpha1: f64, alpha2: f64) -> [[Complex64; 2]; 2] {
    let e = |a: f64| Complex64::from_polar(1.0, a);
    [[e(alpha1), e(alpha2)], [-e(-alpha2), e(-alpha1)]]
}

/// Per-antenna cascades through the two halves of the surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalentChannel {
    pub h1: Complex64,
    pub h2: Complex64,
}

impl EquivalentChannel {
    pub fn new(ch: &ChannelRealization, l: usize) -> Result<Self> {
        check_even(ch)?;
        ch.check_antenna(l)?;
        let half = ch.n() / 2;
        let f = ch.f();
        let g = ch.g_col(l);
        let h1 = f[..half].iter().zip(&g[..half]).map(|(a, b)| a * b).sum();
        let h2 = f[half..].iter().zip(&g[half..]).map(|(a, b)| a * b).sum();
        Ok(EquivalentChannel { h1, h2 })
    }

    /// `H_l = |h1|^2 + |h2|^2`.
    pub fn gain(&self) -> f64 {
        self.h1.norm_sqr() + self.h2.norm_sqr()
    }

    /// Noiseless `C h`.
    pub fn coded(&self, alpha1: f64, alpha2: f64) -> (Complex64, Complex64) {
        let c = code_matrix(alpha1, alpha2);
        (
            c[0][0] * self.h1 + c[0][1] * self.h2,
            c[1][0] * self.h1 + c[1][1] * self.h2,
        )
    }
}

fn check_even(ch: &ChannelRealization) -> Result<()> {
    if !ch.n().is_multiple_of(2) {
        return Err(Error::Dimension(format!(
            "Alamouti mode needs an even number of elements, got {}",
            ch.n()
        )));
    }
    Ok(())
}

pub fn equivalent_channels(ch: &ChannelRealization) -> Result<Vec<EquivalentChannel>> {
    (0..ch.nt()).map(|l| EquivalentChannel::new(ch, l)).collect()
}

pub fn transmit_astbc<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    frame: &AstbcFrame,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<(Complex64, Complex64)> {
    let eq = EquivalentChannel::new(ch, frame.antenna)?;
    Ok(transmit_with(&eq, frame, noise, rng))
}

pub(crate) fn transmit_with<R: Rng + ?Sized>(
    eq: &EquivalentChannel,
    frame: &AstbcFrame,
    noise: &NoiseModel,
    rng: &mut R,
) -> (Complex64, Complex64) {
    let (s1, s2) = eq.coded(frame.alpha1(), frame.alpha2());
    let w1 = sample_awgn(noise, rng);
    let w2 = sample_awgn(noise, rng);
    (s1 + w1, s2 + w2)
}

/// Alamouti combining: `r1 = y1 h1* + y2* h2`, `r2 = y1 h2* - y2* h1`.
pub fn combine(y1: Complex64, y2: Complex64, eq: &EquivalentChannel) -> (Complex64, Complex64) {
    (
        y1 * eq.h1.conj() + y2.conj() * eq.h2,
        y1 * eq.h2.conj() - y2.conj() * eq.h1,
    )
}

/// Result of an Alamouti detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AstbcDecision {
    pub antenna: usize,
    pub k1: usize,
    pub k2: usize,
    /// Number of scalar metric evaluations performed.
    pub metric_evaluations: usize,
}

impl AstbcDecision {
    pub fn same_hypothesis(&self, frame: &AstbcFrame) -> bool {
        self.antenna == frame.antenna && self.k1 == frame.k1 && self.k2 == frame.k2
    }
}

/// `||y - C h_l||^2` for one hypothesis.
pub fn joint_cost(y1: Complex64, y2: Complex64, eq: &EquivalentChannel, alpha1: f64, alpha2: f64) -> f64 {
    let (s1, s2) = eq.coded(alpha1, alpha2);
    (y1 - s1).norm_sqr() + (y2 - s2).norm_sqr()
}

/// Exhaustive joint ML over all `N_t M^2` hypotheses; the lexicographically
/// smallest `(l, k1, k2)` wins ties.
pub fn detect_astbc_optimal(
    y1: Complex64,
    y2: Complex64,
    ch: &ChannelRealization,
    m: usize,
) -> Result<AstbcDecision> {
    log2_exact("M", m)?;
    Ok(detect_optimal_with(y1, y2, &equivalent_channels(ch)?, &psk_points(m)))
}

pub(crate) fn detect_optimal_with(
    y1: Complex64,
    y2: Complex64,
    eqs: &[EquivalentChannel],
    psk: &[Complex64],
) -> AstbcDecision {
    let mut best = (f64::INFINITY, 0, 0, 0);
    let mut evals = 0;
    for (l, eq) in eqs.iter().enumerate() {
        for (k1, e1) in psk.iter().enumerate() {
            for (k2, e2) in psk.iter().enumerate() {
                let s1 = e1 * eq.h1 + e2 * eq.h2;
                let s2 = -e2.conj() * eq.h1 + e1.conj() * eq.h2;
                let cost = (y1 - s1).norm_sqr() + (y2 - s2).norm_sqr();
                evals += 1;
                if cost < best.0 {
                    best = (cost, l, k1, k2);
                }
            }
        }
    }
    AstbcDecision {
        antenna: best.1,
        k1: best.2,
        k2: best.3,
        metric_evaluations: evals,
    }
}

/// Per-antenna metric of the combining detector together with its inner
/// PSK decisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinedMetric {
    pub value: f64,
    pub k1: usize,
    pub k2: usize,
}

fn nearest_scaled(r: Complex64, scale: f64, psk: &[Complex64]) -> (usize, f64) {
    psk.iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bk, bd), (k, e)| {
            let d = (r - e * scale).norm_sqr();
            if d < bd {
                (k, d)
            } else {
                (bk, bd)
            }
        })
}

/// `D(l) = min_a1 |r1 - H_l e^{j a1}|^2 + min_a2 |r2 - H_l e^{j a2}|^2`.
pub fn combined_metric(y1: Complex64, y2: Complex64, eq: &EquivalentChannel, psk: &[Complex64]) -> CombinedMetric {
    let (r1, r2) = combine(y1, y2, eq);
    let gain = eq.gain();
    let (k1, d1) = nearest_scaled(r1, gain, psk);
    let (k2, d2) = nearest_scaled(r2, gain, psk);
    CombinedMetric {
        value: d1 + d2,
        k1,
        k2,
    }
}

/// Combining detector: antenna by `argmin_l D(l)`, then the inner PSK
/// decisions at that antenna. Costs `2 M` metric evaluations per antenna.
pub fn detect_astbc_fast(
    y1: Complex64,
    y2: Complex64,
    ch: &ChannelRealization,
    m: usize,
) -> Result<AstbcDecision> {
    log2_exact("M", m)?;
    Ok(detect_fast_with(y1, y2, &equivalent_channels(ch)?, &psk_points(m)))
}

pub(crate) fn detect_fast_with(
    y1: Complex64,
    y2: Complex64,
    eqs: &[EquivalentChannel],
    psk: &[Complex64],
) -> AstbcDecision {
    let mut best: Option<(usize, CombinedMetric)> = None;
    for (l, eq) in eqs.iter().enumerate() {
        let metric = combined_metric(y1, y2, eq, psk);
        if best.is_none_or(|(_, b)| metric.value < b.value) {
            best = Some((l, metric));
        }
    }
    let (antenna, metric) = best.expect("at least one antenna");
    AstbcDecision {
        antenna,
        k1: metric.k1,
        k2: metric.k2,
        metric_evaluations: eqs.len() * 2 * psk.len(),
    }
}
