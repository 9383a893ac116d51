use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::config::{Scheme, SimConfig};
use super::output::BerRecord;
use crate::analysis::{abep_pb_two_tx, abep_ris, abep_source, AbepQuery};
use crate::astbc_link::{
    detect_fast_with, detect_optimal_with, equivalent_channels, psk_points, transmit_with, AstbcFrame,
    EquivalentChannel,
};
use crate::beamform::{low_complexity_beamform, optimal_two_tx, sdr_beamform};
use crate::channel::{sample_channel, NoiseModel, Purpose, StreamKey};
use crate::error::{Error, Result};
use crate::pb_link::{
    bit_errors, constellation, log2_exact, nearest_point, transmit_detect_intelligent,
    transmit_detect_traditional_ssk, SskSymbol,
};

const BATCH: u64 = 4096;

/// Per-trial state shared by every SNR point.
enum Link {
    Points(Vec<Complex64>),
    Intelligent,
    Traditional,
    Alamouti(Vec<EquivalentChannel>),
}

fn prepare(cfg: &SimConfig, trial: u64) -> Result<(crate::ChannelRealization, Link)> {
    let direct = cfg.scheme == Scheme::TraditionalSsk;
    let ch = sample_channel(cfg.n, cfg.nt, direct, &mut StreamKey::channel(cfg.seed, trial).rng())?;
    let link = match cfg.scheme {
        Scheme::Pb => Link::Points(constellation(&ch, &optimal_two_tx(&ch)?)?),
        Scheme::PbLowComplexity => Link::Points(constellation(&ch, &low_complexity_beamform(&ch)?)?),
        Scheme::PbSdr => {
            let mut rng = StreamKey::new(cfg.seed, 0, trial, Purpose::Rounding).rng();
            let sol = sdr_beamform(&ch, &cfg.sdr, &mut rng)?;
            Link::Points(constellation(&ch, &sol.phi)?)
        }
        Scheme::IntelligentRisSsk => Link::Intelligent,
        Scheme::TraditionalSsk => Link::Traditional,
        Scheme::AstbcFast | Scheme::AstbcOptimal => Link::Alamouti(equivalent_channels(&ch)?),
    };
    Ok((ch, link))
}

/// Source and surface bit errors of one trial at every listed SNR point.
fn run_trial(cfg: &SimConfig, trial: u64, points: &[usize], psk: &[Complex64]) -> Result<Vec<[u64; 2]>> {
    let (ch, link) = prepare(cfg, trial)?;
    let mut out = Vec::with_capacity(points.len());
    for &p in points {
        let noise = if cfg.noiseless {
            NoiseModel::noiseless()
        } else {
            NoiseModel::from_snr_db(cfg.snr_db[p])?
        };
        let mut bits = StreamKey::new(cfg.seed, p as u32, trial, Purpose::Bits).rng();
        let mut nrng = StreamKey::new(cfg.seed, p as u32, trial, Purpose::Noise).rng();
        let l = bits.random_range(0..cfg.nt);
        let errs = match &link {
            Link::Points(pts) => {
                let y = pts[l] + crate::channel::sample_awgn(&noise, &mut nrng);
                [bit_errors(l, nearest_point(y, pts)) as u64, 0]
            }
            Link::Intelligent => {
                let sym = SskSymbol::from_index(l, cfg.nt)?;
                [bit_errors(l, transmit_detect_intelligent(&ch, &sym, &noise, &mut nrng)?) as u64, 0]
            }
            Link::Traditional => {
                let sym = SskSymbol::from_index(l, cfg.nt)?;
                [bit_errors(l, transmit_detect_traditional_ssk(&ch, &sym, &noise, &mut nrng)?) as u64, 0]
            }
            Link::Alamouti(eqs) => {
                let k1 = bits.random_range(0..cfg.m);
                let k2 = bits.random_range(0..cfg.m);
                let frame = AstbcFrame { antenna: l, k1, k2, m: cfg.m };
                let (y1, y2) = transmit_with(&eqs[l], &frame, &noise, &mut nrng);
                let d = if cfg.scheme == Scheme::AstbcOptimal {
                    detect_optimal_with(y1, y2, eqs, psk)
                } else {
                    detect_fast_with(y1, y2, eqs, psk)
                };
                [
                    bit_errors(l, d.antenna) as u64,
                    (bit_errors(k1, d.k1) + bit_errors(k2, d.k2)) as u64,
                ]
            }
        };
        out.push(errs);
    }
    Ok(out)
}

fn analytic(cfg: &SimConfig, snr_db: f64) -> Result<(Option<f64>, Option<f64>)> {
    if cfg.scheme.is_astbc() {
        let q = AbepQuery::from_snr_db(snr_db, cfg.n, cfg.nt, cfg.m)?;
        return Ok((Some(abep_source(&q)?.value), Some(abep_ris(&q)?.value)));
    }
    if cfg.scheme.is_beamformed() && cfg.nt == 2 {
        let q = AbepQuery::from_snr_db(snr_db, cfg.n, 2, 2)?;
        return Ok((Some(abep_pb_two_tx(&q)?.value), None));
    }
    Ok((None, None))
}

/// Monte Carlo BER sweep over the configured SNR grid.
///
/// Trial `t` at grid point `p` draws its channel from a stream keyed on
/// `(seed, t)` only, and its bits and noise from streams keyed on
/// `(seed, p, t)`, so every point sees the same channels and the result does
/// not depend on the number of workers. With `target_errors` set, a point
/// stops at the first batch boundary where its error count (both streams for
/// the Alamouti schemes) reaches the target.
pub fn run_ber_sweep(cfg: &SimConfig) -> Result<Vec<BerRecord>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let astbc = cfg.scheme.is_astbc();
    let psk = if astbc { psk_points(cfg.m) } else { Vec::new() };

    let np = cfg.snr_db.len();
    let mut errors = vec![[0u64; 2]; np];
    let mut trials = vec![0u64; np];
    let mut seconds = vec![0f64; np];
    let mut active: Vec<usize> = (0..np).collect();
    let mut start = 0u64;

    while start < cfg.trials && !active.is_empty() {
        let end = (start + BATCH).min(cfg.trials);
        let clock = Instant::now();
        let batch = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|t| run_trial(cfg, t, &active, &psk))
                .try_reduce(
                    || vec![[0u64; 2]; active.len()],
                    |mut a, b| {
                        for (x, y) in a.iter_mut().zip(b) {
                            x[0] += y[0];
                            x[1] += y[1];
                        }
                        Ok(a)
                    },
                )
        })?;
        let share = clock.elapsed().as_secs_f64() / active.len() as f64;
        for (&p, e) in active.iter().zip(batch) {
            errors[p][0] += e[0];
            errors[p][1] += e[1];
            trials[p] = end;
            seconds[p] += share;
        }
        if let Some(target) = cfg.target_errors {
            active.retain(|&p| errors[p][0] < target || (astbc && errors[p][1] < target));
        }
        start = end;
    }

    let src_bits = log2_exact("N_t", cfg.nt)? as u64;
    let ris_bits = if astbc { 2 * log2_exact("M", cfg.m)? as u64 } else { 0 };
    (0..np)
        .map(|p| {
            let (analytic_source, analytic_ris) = analytic(cfg, cfg.snr_db[p])?;
            Ok(BerRecord {
                scheme: cfg.scheme,
                n: cfg.n,
                nt: cfg.nt,
                m: astbc.then_some(cfg.m),
                snr_db: cfg.snr_db[p],
                trials: trials[p],
                source_errors: errors[p][0],
                ris_errors: astbc.then_some(errors[p][1]),
                ber_source: errors[p][0] as f64 / (trials[p] * src_bits) as f64,
                ber_ris: astbc.then(|| errors[p][1] as f64 / (trials[p] * ris_bits) as f64),
                analytic_source,
                analytic_ris,
                seed: cfg.seed,
                wall_time_s: cfg.record_wall_time.then_some(seconds[p]),
            })
        })
        .collect()
}
