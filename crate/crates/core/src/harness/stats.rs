use super::output::BerRecord;
use crate::error::{Error, Result};

/// Which bit stream of a record to look at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Source,
    Ris,
}

impl Role {
    pub fn ber(&self, r: &BerRecord) -> Option<f64> {
        match self {
            Role::Source => Some(r.ber_source),
            Role::Ris => r.ber_ris,
        }
    }
}

/// Least-squares slope of `log10(BER)` against `snr_db / 10` over the records
/// whose BER lies in `(0, 0.1)`. A diversity order `d` shows up as slope `-d`.
pub fn estimate_diversity_slope(records: &[BerRecord], role: Role) -> Result<f64> {
    if let Some(first) = records.first() {
        if records.iter().any(|r| r.scheme != first.scheme) {
            return Err(Error::InvalidParameter(
                "records mix several schemes".into(),
            ));
        }
    }
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| {
            let b = role.ber(r)?;
            (b > 0.0 && b < 0.1).then(|| (r.snr_db / 10.0, b.log10()))
        })
        .collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 records with BER in (0, 0.1), found {}",
            pts.len()
        )));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("qualifying records share one SNR".into()));
    }
    Ok(sxy / sxx)
}

/// Wilson score interval for `errors` out of `bits` at normal quantile `z`.
pub fn wilson_interval(errors: u64, bits: u64, z: f64) -> (f64, f64) {
    if bits == 0 {
        return (0.0, 1.0);
    }
    let n = bits as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}
