//! Rayleigh fading links, receiver noise and the keyed random streams that
//! feed them.
//!
//! Every random draw in the crate comes from a [`StreamKey`]: a ChaCha8
//! generator whose key is derived from the global seed, the SNR point and the
//! purpose of the draw, and whose 64-bit stream id is the trial index. A trial
//! therefore sees the same numbers regardless of how many other trials run or
//! in which order, which makes sweeps reproducible under any worker count.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::beamform::ReflectionVector;
use crate::error::{Error, Result};

/// What a random stream is used for. Distinct purposes never share numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Purpose {
    Channel = 1,
    Bits = 2,
    Noise = 3,
    Rounding = 4,
    SolverInit = 5,
}

/// Address of one counter-based random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    /// SNR grid index; channel draws use 0 so that a trial's channel is
    /// shared across the grid.
    pub point: u32,
    pub trial: u64,
    pub purpose: Purpose,
}

impl StreamKey {
    pub fn new(seed: u64, point: u32, trial: u64, purpose: Purpose) -> Self {
        StreamKey {
            seed,
            point,
            trial,
            purpose,
        }
    }

    /// Stream for the channel of `trial`; independent of the SNR point.
    pub fn channel(seed: u64, trial: u64) -> Self {
        Self::new(seed, 0, trial, Purpose::Channel)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..12].copy_from_slice(&self.point.to_le_bytes());
        key[12] = self.purpose as u8;
        // Domain separator so an all-zero seed never yields an all-zero key.
        key[16..24].copy_from_slice(b"ris-ssk\0");
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.trial);
        rng
    }
}

/// Draws one circularly-symmetric complex Gaussian with the given total
/// variance (half of it on each of the real and imaginary parts).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// One draw of all links: `g[l][i]` is the gain from transmit antenna `l` to
/// element `i`, `f[i]` from element `i` to the destination, and `d[l]` the
/// optional direct source-to-destination link used by plain SSK.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    g: Vec<Vec<Complex64>>,
    f: Vec<Complex64>,
    d: Option<Vec<Complex64>>,
}

impl ChannelRealization {
    /// Builds a realization from the columns of `G` (one per transmit antenna).
    pub fn new(
        g_columns: Vec<Vec<Complex64>>,
        f: Vec<Complex64>,
        d: Option<Vec<Complex64>>,
    ) -> Result<Self> {
        if f.is_empty() {
            return Err(Error::Dimension("RIS must have at least one element".into()));
        }
        if g_columns.is_empty() {
            return Err(Error::Dimension("need at least one transmit antenna".into()));
        }
        if let Some(bad) = g_columns.iter().find(|c| c.len() != f.len()) {
            return Err(Error::Dimension(format!(
                "G column has {} rows, f has length {}",
                bad.len(),
                f.len()
            )));
        }
        if let Some(d) = &d {
            if d.len() != g_columns.len() {
                return Err(Error::Dimension(format!(
                    "direct link has {} entries for {} antennas",
                    d.len(),
                    g_columns.len()
                )));
            }
        }
        Ok(ChannelRealization {
            g: g_columns,
            f,
            d,
        })
    }

    /// Number of reflecting elements `N`.
    pub fn n(&self) -> usize {
        self.f.len()
    }

    /// Number of transmit antennas `N_t`.
    pub fn nt(&self) -> usize {
        self.g.len()
    }

    pub fn f(&self) -> &[Complex64] {
        &self.f
    }

    /// Column `l` of `G`.
    pub fn g_col(&self, l: usize) -> &[Complex64] {
        &self.g[l]
    }

    pub fn g(&self, i: usize, l: usize) -> Complex64 {
        self.g[l][i]
    }

    pub fn direct(&self) -> Option<&[Complex64]> {
        self.d.as_deref()
    }

    pub(crate) fn check_antenna(&self, l: usize) -> Result<()> {
        if l >= self.nt() {
            return Err(Error::IndexOutOfRange {
                index: l,
                bound: self.nt(),
            });
        }
        Ok(())
    }
}

/// Receiver noise: `n0` is the complex noise variance and `rho = 1 / n0` the
/// transmit SNR. `n0 = 0` is accepted as a noiseless mode (`rho` infinite).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    n0: f64,
}

impl NoiseModel {
    pub fn from_n0(n0: f64) -> Result<Self> {
        if !(n0 >= 0.0 && n0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be finite and >= 0, got {n0}"
            )));
        }
        Ok(NoiseModel { n0 })
    }

    pub fn from_snr(rho: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::InvalidParameter(format!("SNR must be > 0, got {rho}")));
        }
        Self::from_n0(1.0 / rho)
    }

    pub fn from_snr_db(snr_db: f64) -> Result<Self> {
        Self::from_snr(10f64.powf(snr_db / 10.0))
    }

    pub fn noiseless() -> Self {
        NoiseModel { n0: 0.0 }
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn rho(&self) -> f64 {
        1.0 / self.n0
    }
}

pub fn sample_channel<R: Rng + ?Sized>(
    n: usize,
    nt: usize,
    with_direct: bool,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if n == 0 || nt == 0 {
        return Err(Error::Dimension(format!(
            "zero dimension requested (n = {n}, nt = {nt})"
        )));
    }
    let g = (0..nt)
        .map(|_| (0..n).map(|_| complex_gaussian(rng, 1.0)).collect())
        .collect();
    let f = (0..n).map(|_| complex_gaussian(rng, 1.0)).collect();
    let d = with_direct.then(|| (0..nt).map(|_| complex_gaussian(rng, 1.0)).collect());
    ChannelRealization::new(g, f, d)
}

pub fn sample_awgn<R: Rng + ?Sized>(noise: &NoiseModel, rng: &mut R) -> Complex64 {
    if noise.n0 == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    complex_gaussian(rng, noise.n0)
}

/// Noiseless cascade `sum_i f_i g_il exp(j theta_i)` for active antenna `l`.
pub fn effective_gain(
    ch: &ChannelRealization,
    phi: &ReflectionVector,
    l: usize,
) -> Result<Complex64> {
    ch.check_antenna(l)?;
    if phi.len() != ch.n() {
        return Err(Error::Dimension(format!(
            "reflection vector has {} entries, channel has {} elements",
            phi.len(),
            ch.n()
        )));
    }
    Ok(cascade(ch.f(), ch.g_col(l), phi.coefficients()))
}

#[inline]
pub(crate) fn cascade(f: &[Complex64], g: &[Complex64], phi: &[Complex64]) -> Complex64 {
    f.iter()
        .zip(g)
        .zip(phi)
        .map(|((f, g), p)| f * g * p)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn shapes() {
        let mut rng = StreamKey::channel(1, 0).rng();
        let ch = sample_channel(4, 2, false, &mut rng).unwrap();
        assert_eq!(ch.n(), 4);
        assert_eq!(ch.nt(), 2);
        assert_eq!(ch.g_col(1).len(), 4);
        assert!(ch.direct().is_none());
        let ch = sample_channel(4, 2, true, &mut rng).unwrap();
        assert_eq!(ch.direct().unwrap().len(), 2);
    }

    #[test]
    fn zero_dimensions_rejected() {
        let mut rng = StreamKey::channel(1, 0).rng();
        assert!(sample_channel(0, 2, false, &mut rng).is_err());
        assert!(sample_channel(2, 0, false, &mut rng).is_err());
    }

    #[test]
    fn mismatched_shapes_rejected() {
        let r = ChannelRealization::new(vec![vec![c(1.0, 0.0); 3]], vec![c(1.0, 0.0); 2], None);
        assert!(matches!(r, Err(Error::Dimension(_))));
    }

    #[test]
    fn same_key_same_realization() {
        let a = sample_channel(8, 4, true, &mut StreamKey::channel(42, 17).rng()).unwrap();
        let b = sample_channel(8, 4, true, &mut StreamKey::channel(42, 17).rng()).unwrap();
        assert_eq!(a, b);
        let other = sample_channel(8, 4, true, &mut StreamKey::channel(42, 18).rng()).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn purposes_and_points_are_separated() {
        let base = StreamKey::new(5, 0, 3, Purpose::Noise);
        let x: u64 = base.rng().random();
        let y: u64 = StreamKey { purpose: Purpose::Bits, ..base }.rng().random();
        let z: u64 = StreamKey { point: 1, ..base }.rng().random();
        assert_ne!(x, y);
        assert_ne!(x, z);
    }

    #[test]
    fn unit_variance_entries() {
        let draws = 100_000u64;
        let (mut sum, mut sq) = (c(0.0, 0.0), 0.0);
        for t in 0..draws {
            let ch = sample_channel(1, 1, false, &mut StreamKey::channel(9, t).rng()).unwrap();
            let g = ch.g(0, 0);
            sum += g;
            sq += g.norm_sqr();
        }
        let mean = sum / draws as f64;
        let var = sq / draws as f64 - mean.norm_sqr();
        assert!((0.99..=1.01).contains(&var), "variance {var}");
        // 3 sigma on the mean of each component: 3 * sqrt(0.5 / 1e5)
        assert!(mean.re.abs() < 0.0068 && mean.im.abs() < 0.0068, "mean {mean}");
    }

    #[test]
    fn awgn_noiseless_and_variance() {
        let mut rng = StreamKey::new(1, 0, 0, Purpose::Noise).rng();
        assert_eq!(sample_awgn(&NoiseModel::noiseless(), &mut rng), c(0.0, 0.0));

        let unit = NoiseModel::from_n0(1.0).unwrap();
        let four = NoiseModel::from_n0(4.0).unwrap();
        let draws = 100_000;
        let (mut p1, mut re4) = (0.0, 0.0);
        for _ in 0..draws {
            p1 += sample_awgn(&unit, &mut rng).norm_sqr();
            re4 += sample_awgn(&four, &mut rng).re.powi(2);
        }
        let v1 = p1 / draws as f64;
        let v4 = re4 / draws as f64;
        assert!((0.99..=1.01).contains(&v1), "{v1}");
        assert!((v4 - 2.0).abs() < 0.04, "{v4}");
    }

    #[test]
    fn noise_model_relations() {
        let nm = NoiseModel::from_snr_db(10.0).unwrap();
        assert!((nm.rho() * nm.n0() - 1.0).abs() < 1e-15);
        assert!((nm.rho() - 10.0).abs() < 1e-12);
        assert!(NoiseModel::from_n0(-1.0).is_err());
        assert!(NoiseModel::from_snr(0.0).is_err());
    }

    #[test]
    fn gain_identity_reflection_and_phase_cancellation() {
        let mut rng = StreamKey::channel(3, 0).rng();
        let ch = sample_channel(5, 2, false, &mut rng).unwrap();
        let id = ReflectionVector::from_phases(vec![0.0; 5]);
        let expect: Complex64 = (0..5).map(|i| ch.f()[i] * ch.g(i, 1)).sum();
        assert!((effective_gain(&ch, &id, 1).unwrap() - expect).norm() < 1e-14);

        let ch = ChannelRealization::new(vec![vec![c(0.0, 1.0)]], vec![c(1.0, 0.0)], None).unwrap();
        let phi = ReflectionVector::from_phases(vec![-FRAC_PI_2]);
        let y = effective_gain(&ch, &phi, 0).unwrap();
        assert!((y - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn gain_matches_summation_oracle_and_is_linear() {
        let mut rng = StreamKey::channel(11, 0).rng();
        let ch = sample_channel(8, 3, false, &mut rng).unwrap();
        let theta: Vec<f64> = (0..8).map(|_| rng.random::<f64>() * 6.0).collect();
        let phi = ReflectionVector::from_phases(theta.clone());
        for l in 0..3 {
            let mut oracle = c(0.0, 0.0);
            for i in 0..8 {
                oracle += ch.f()[i] * ch.g(i, l) * c(theta[i].cos(), theta[i].sin());
            }
            let got = effective_gain(&ch, &phi, l).unwrap();
            assert!((got - oracle).norm() <= 1e-12 * oracle.norm());
        }

        // superposition in f
        let other = sample_channel(8, 3, false, &mut rng).unwrap();
        let fsum: Vec<Complex64> = ch.f().iter().zip(other.f()).map(|(a, b)| a + b).collect();
        let mixed = ChannelRealization::new(
            (0..3).map(|l| ch.g_col(l).to_vec()).collect(),
            fsum,
            None,
        )
        .unwrap();
        let swapped = ChannelRealization::new(
            (0..3).map(|l| ch.g_col(l).to_vec()).collect(),
            other.f().to_vec(),
            None,
        )
        .unwrap();
        let lhs = effective_gain(&mixed, &phi, 2).unwrap();
        let rhs = effective_gain(&ch, &phi, 2).unwrap() + effective_gain(&swapped, &phi, 2).unwrap();
        assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn gain_index_and_length_errors() {
        let mut rng = StreamKey::channel(3, 0).rng();
        let ch = sample_channel(4, 2, false, &mut rng).unwrap();
        let phi = ReflectionVector::from_phases(vec![0.0; 4]);
        assert!(matches!(
            effective_gain(&ch, &phi, 2),
            Err(Error::IndexOutOfRange { index: 2, bound: 2 })
        ));
        let short = ReflectionVector::from_phases(vec![0.0; 3]);
        assert!(effective_gain(&ch, &short, 0).is_err());
    }
}
