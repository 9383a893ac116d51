//! SSK over the reflected link: bit mapping, transmission, ML detection, and
//! the RIS-free and intelligent-RIS reference links.
//!
//! Antenna indices are zero-based throughout the crate.

use num_complex::Complex64;
use rand::Rng;

use crate::beamform::{intelligent_ris_phases, ReflectionVector};
use crate::channel::{effective_gain, sample_awgn, ChannelRealization, NoiseModel};
use crate::error::{Error, Result};

/// One SSK symbol: the active antenna and the `log2(N_t)` bits it carries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SskSymbol {
    antenna: usize,
    nt: usize,
}

pub(crate) fn log2_exact(what: &'static str, v: usize) -> Result<usize> {
    if v < 2 || !v.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(what, v));
    }
    Ok(v.trailing_zeros() as usize)
}

/// Natural binary value of `bits`, most significant bit first.
pub(crate) fn bits_to_index(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as usize)
}

pub(crate) fn index_to_bits(index: usize, width: usize) -> Vec<u8> {
    (0..width).rev().map(|k| ((index >> k) & 1) as u8).collect()
}

impl SskSymbol {
    pub fn from_index(antenna: usize, nt: usize) -> Result<Self> {
        log2_exact("N_t", nt)?;
        if antenna >= nt {
            return Err(Error::IndexOutOfRange {
                index: antenna,
                bound: nt,
            });
        }
        Ok(SskSymbol { antenna, nt })
    }

    pub fn antenna(&self) -> usize {
        self.antenna
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn bits(&self) -> Vec<u8> {
        index_to_bits(self.antenna, self.nt.trailing_zeros() as usize)
    }
}

/// Maps `log2(nt)` bits (MSB first) to the active antenna.
pub fn encode_ssk(bits: &[u8], nt: usize) -> Result<SskSymbol> {
    let width = log2_exact("N_t", nt)?;
    if bits.len() != width {
        return Err(Error::BitLength {
            expected: width,
            got: bits.len(),
        });
    }
    SskSymbol::from_index(bits_to_index(bits), nt)
}

pub fn decode_ssk(antenna: usize, nt: usize) -> Result<Vec<u8>> {
    Ok(SskSymbol::from_index(antenna, nt)?.bits())
}

/// Number of differing bit labels between two antenna indices.
pub fn bit_errors(sent: usize, detected: usize) -> u32 {
    (sent ^ detected).count_ones()
}

pub fn transmit_pb<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    phi: &ReflectionVector,
    sym: &SskSymbol,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<Complex64> {
    Ok(effective_gain(ch, phi, sym.antenna())? + sample_awgn(noise, rng))
}

/// Index of the candidate closest to `y`; the lowest index wins ties.
pub fn nearest_point(y: Complex64, points: &[Complex64]) -> usize {
    points
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bd), (i, p)| {
            let d = (y - p).norm_sqr();
            if d < bd {
                (i, d)
            } else {
                (bi, bd)
            }
        })
        .0
}

/// Noiseless received point of every antenna under a fixed reflection vector.
pub fn constellation(ch: &ChannelRealization, phi: &ReflectionVector) -> Result<Vec<Complex64>> {
    (0..ch.nt()).map(|l| effective_gain(ch, phi, l)).collect()
}

/// `argmin_l |y - f^T Phi g_l|^2`.
pub fn detect_pb_ml(y: Complex64, ch: &ChannelRealization, phi: &ReflectionVector) -> Result<usize> {
    Ok(nearest_point(y, &constellation(ch, phi)?))
}

/// Plain SSK over the direct links: `y = d_l + w`, detected by nearest point.
pub fn transmit_detect_traditional_ssk<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    sym: &SskSymbol,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<usize> {
    let d = ch.direct().ok_or(Error::MissingDirectLink)?;
    ch.check_antenna(sym.antenna())?;
    let y = d[sym.antenna()] + sample_awgn(noise, rng);
    Ok(nearest_point(y, d))
}

/// Received points of the intelligent-RIS reference scheme. The surface
/// co-phases the cascade of whichever antenna is active, so hypothesis `l`
/// lands on the real point `sum_i |f_i| |g_il|`.
pub fn intelligent_constellation(ch: &ChannelRealization) -> Vec<Complex64> {
    (0..ch.nt())
        .map(|l| {
            let s: f64 = ch
                .f()
                .iter()
                .zip(ch.g_col(l))
                .map(|(f, g)| f.norm() * g.norm())
                .sum();
            Complex64::new(s, 0.0)
        })
        .collect()
}

/// One transmission of the intelligent-RIS reference: phases recomputed for
/// the true active antenna, ML detection over the per-hypothesis points.
pub fn transmit_detect_intelligent<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    sym: &SskSymbol,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<usize> {
    let phi = intelligent_ris_phases(ch, sym.antenna())?;
    let y = transmit_pb(ch, &phi, sym, noise, rng)?;
    Ok(nearest_point(y, &intelligent_constellation(ch)))
}
