use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::beamform::SdrOptions;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// Beamformed SSK with the closed-form two-antenna optimum.
    #[serde(rename = "pb")]
    Pb,
    #[serde(rename = "pb-lowcomplexity")]
    PbLowComplexity,
    #[serde(rename = "pb-sdr")]
    PbSdr,
    #[serde(rename = "intelligent-ris-ssk")]
    IntelligentRisSsk,
    #[serde(rename = "traditional-ssk")]
    TraditionalSsk,
    #[serde(rename = "astbc-fast")]
    AstbcFast,
    #[serde(rename = "astbc-optimal")]
    AstbcOptimal,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::Pb,
        Scheme::PbLowComplexity,
        Scheme::PbSdr,
        Scheme::IntelligentRisSsk,
        Scheme::TraditionalSsk,
        Scheme::AstbcFast,
        Scheme::AstbcOptimal,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Pb => "pb",
            Scheme::PbLowComplexity => "pb-lowcomplexity",
            Scheme::PbSdr => "pb-sdr",
            Scheme::IntelligentRisSsk => "intelligent-ris-ssk",
            Scheme::TraditionalSsk => "traditional-ssk",
            Scheme::AstbcFast => "astbc-fast",
            Scheme::AstbcOptimal => "astbc-optimal",
        }
    }

    pub fn is_astbc(&self) -> bool {
        matches!(self, Scheme::AstbcFast | Scheme::AstbcOptimal)
    }

    pub fn is_beamformed(&self) -> bool {
        matches!(self, Scheme::Pb | Scheme::PbLowComplexity | Scheme::PbSdr)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Scheme::ALL.iter().map(|s| s.name()).collect();
                Error::Config(format!("unknown scheme '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

/// Parses `start:stop:step` (inclusive of `stop` up to rounding) into a grid.
pub fn parse_snr_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let nums = parts
        .iter()
        .map(|p| p.parse::<f64>())
        .collect::<std::result::Result<Vec<f64>, _>>()
        .map_err(|e| Error::Config(format!("bad SNR range '{s}': {e}")))?;
    match nums[..] {
        [single] => Ok(vec![single]),
        [start, stop, step] => {
            if !(step > 0.0) || stop < start {
                return Err(Error::Config(format!(
                    "SNR range '{s}' needs step > 0 and stop >= start"
                )));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|k| start + k as f64 * step).collect())
        }
        _ => Err(Error::Config(format!(
            "SNR range '{s}' must be 'start:stop:step' or a single value"
        ))),
    }
}

/// Flat key-value configuration, as read from a TOML file or assembled from
/// command-line flags. Every key is optional so that sources can be layered.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub scheme: Option<Scheme>,
    pub n: Option<usize>,
    pub nt: Option<usize>,
    pub m: Option<usize>,
    /// `start:stop:step` in dB.
    pub snr: Option<String>,
    /// Explicit grid in dB; takes precedence over `snr`.
    pub snr_db: Option<Vec<f64>>,
    pub trials: Option<u64>,
    pub target_errors: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
    pub record_wall_time: Option<bool>,
    pub noiseless: Option<bool>,
    pub sdr_rounding_count: Option<usize>,
    pub sdr_solver_iterations: Option<usize>,
    pub sdr_factor_rank: Option<usize>,
    pub sdr_refine_sweeps: Option<usize>,
    pub sdr_refine_candidates: Option<usize>,
}

impl ConfigOverrides {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::format(path, e))
    }

    /// Fields set in `other` replace those in `self`.
    pub fn merged_with(mut self, other: ConfigOverrides) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            scheme,
            n,
            nt,
            m,
            snr,
            snr_db,
            trials,
            target_errors,
            seed,
            workers,
            output,
            record_wall_time,
            noiseless,
            sdr_rounding_count,
            sdr_solver_iterations,
            sdr_factor_rank,
            sdr_refine_sweeps,
            sdr_refine_candidates
        );
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scheme: Scheme,
    pub n: usize,
    pub nt: usize,
    /// PSK order of the surface; only meaningful for the Alamouti schemes.
    pub m: usize,
    pub snr_db: Vec<f64>,
    /// Trials per SNR point (upper limit when `target_errors` is set).
    pub trials: u64,
    /// Stop a point early once this many errors are collected.
    pub target_errors: Option<u64>,
    pub seed: u64,
    pub sdr: SdrOptions,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
    /// Fill the `wall_time_s` column. Off by default so that reruns produce
    /// identical bytes.
    pub record_wall_time: bool,
    /// Force `n0 = 0` at every point.
    pub noiseless: bool,
}

impl SimConfig {
    pub fn new(scheme: Scheme, n: usize, nt: usize, snr_db: Vec<f64>) -> Self {
        SimConfig {
            scheme,
            n,
            nt,
            m: 2,
            snr_db,
            trials: 100_000,
            target_errors: None,
            seed: 1,
            sdr: SdrOptions::default(),
            workers: None,
            output: None,
            record_wall_time: false,
            noiseless: false,
        }
    }

    pub fn from_overrides(o: ConfigOverrides) -> Result<Self> {
        let missing = |k: &str| Error::Config(format!("missing required key '{k}'"));
        let snr_db = match (o.snr_db, o.snr) {
            (Some(grid), _) => grid,
            (None, Some(range)) => parse_snr_range(&range)?,
            (None, None) => return Err(missing("snr")),
        };
        let mut cfg = SimConfig::new(
            o.scheme.ok_or_else(|| missing("scheme"))?,
            o.n.ok_or_else(|| missing("n"))?,
            o.nt.ok_or_else(|| missing("nt"))?,
            snr_db,
        );
        if let Some(m) = o.m {
            cfg.m = m;
        }
        if let Some(t) = o.trials {
            cfg.trials = t;
        }
        cfg.target_errors = o.target_errors;
        if let Some(s) = o.seed {
            cfg.seed = s;
        }
        cfg.workers = o.workers;
        cfg.output = o.output;
        cfg.record_wall_time = o.record_wall_time.unwrap_or(false);
        cfg.noiseless = o.noiseless.unwrap_or(false);
        if let Some(r) = o.sdr_rounding_count {
            cfg.sdr.rounding_count = r;
        }
        if let Some(i) = o.sdr_solver_iterations {
            cfg.sdr.solver_iterations = i;
        }
        if o.sdr_factor_rank.is_some() {
            cfg.sdr.factor_rank = o.sdr_factor_rank;
        }
        if let Some(r) = o.sdr_refine_sweeps {
            cfg.sdr.refine_sweeps = r;
        }
        if let Some(r) = o.sdr_refine_candidates {
            cfg.sdr.refine_candidates = r;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.snr_db.is_empty() {
            return bad("SNR grid is empty".into());
        }
        if self.snr_db.iter().any(|v| !v.is_finite()) {
            return bad("SNR grid contains a non-finite value".into());
        }
        if self.snr_db.windows(2).any(|w| w[1] <= w[0]) {
            return bad("SNR grid must be strictly increasing".into());
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.target_errors == Some(0) {
            return bad("target_errors must be >= 1".into());
        }
        if self.n == 0 {
            return bad("n must be >= 1".into());
        }
        if self.nt < 2 || !self.nt.is_power_of_two() {
            return bad(format!("nt must be a power of two >= 2, got {}", self.nt));
        }
        if self.scheme.is_astbc() {
            if self.m < 2 || !self.m.is_power_of_two() {
                return bad(format!("m must be a power of two >= 2, got {}", self.m));
            }
            if !self.n.is_multiple_of(2) {
                return bad(format!("Alamouti schemes need an even n, got {}", self.n));
            }
        }
        if self.scheme == Scheme::Pb && self.nt != 2 {
            return bad("scheme 'pb' uses the closed-form optimum and needs nt = 2".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be >= 1".into());
        }
        if self.snr_db.len() > u32::MAX as usize {
            return bad("SNR grid too long".into());
        }
        if self.scheme == Scheme::PbSdr {
            self.sdr.validate()?;
        }
        Ok(())
    }
}
