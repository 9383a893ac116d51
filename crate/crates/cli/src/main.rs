use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use ris_ssk::analysis::{analytic_curve, CurveKind};
use ris_ssk::beamform::{
    brute_force_beamform, low_complexity_beamform, min_pairwise_distance, optimal_two_tx, sdr_beamform,
};
use ris_ssk::channel::sample_channel;
use ris_ssk::harness::{
    format_sig9, parse_snr_range, run_ber_sweep, validate_suite, wilson_interval, write_csv, write_json,
    ConfigOverrides, ValidationLevel,
};
use ris_ssk::{Error, Purpose, Scheme, SimConfig, StreamKey};

#[derive(Parser)]
#[command(name = "ris-ssk", version, about = "RIS-assisted space shift keying simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo BER sweep; writes CSV.
    Sweep {
        #[command(flatten)]
        params: Params,
        /// Also write the records as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Closed-form ABEP curves only.
    Analytic {
        #[command(flatten)]
        params: Params,
        /// Use the high-SNR expressions (Alamouti schemes).
        #[arg(long)]
        asymptotic: bool,
    },
    /// Optimize the surface for one random channel and print diagnostics.
    Optimize {
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        nt: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Which channel of the seed's sequence to use.
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[arg(long, value_enum, default_value_t = Method::Sdr)]
        method: Method,
        /// Phase levels of the brute-force grid.
        #[arg(long, default_value_t = 16)]
        levels: usize,
        #[arg(long)]
        rounding_count: Option<usize>,
    },
    /// Run the self-check suite.
    Validate {
        #[arg(long, value_enum, default_value_t = Level::Fast)]
        level: Level,
    },
}

#[derive(Args)]
struct Params {
    /// TOML file with flat keys; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scheme: Option<Scheme>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    nt: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// SNR grid in dB as `start:stop:step` or a single value.
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Stop a point once this many bit errors are counted.
    #[arg(long)]
    target_errors: Option<u64>,
    /// Record wall time per point (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
    /// Zero noise.
    #[arg(long)]
    noiseless: bool,
}

impl Params {
    fn overrides(&self) -> anyhow::Result<ConfigOverrides> {
        let base = match &self.config {
            Some(p) => ConfigOverrides::from_file(p)?,
            None => ConfigOverrides::default(),
        };
        let flags = ConfigOverrides {
            scheme: self.scheme,
            n: self.n,
            nt: self.nt,
            m: self.m,
            snr: self.snr.clone(),
            trials: self.trials,
            target_errors: self.target_errors,
            seed: self.seed,
            workers: self.workers,
            output: self.out.clone(),
            record_wall_time: self.timing.then_some(true),
            noiseless: self.noiseless.then_some(true),
            ..Default::default()
        };
        let mut merged = base.merged_with(flags);
        if self.snr.is_some() {
            merged.snr_db = None;
        }
        Ok(merged)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Optimal,
    Lowcomplexity,
    Sdr,
    Bruteforce,
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Fast,
    Full,
}

/// Failures that map to a nonzero exit status without being program errors.
#[derive(Debug)]
struct ChecksFailed;

impl std::fmt::Display for ChecksFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("one or more validation checks failed")
    }
}

impl std::error::Error for ChecksFailed {}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => std::io::stdout().write_all(text.as_bytes()).context("writing to stdout"),
    }
}

fn sweep(params: &Params, json: Option<&Path>) -> anyhow::Result<()> {
    let cfg = SimConfig::from_overrides(params.overrides()?)?;
    let records = run_ber_sweep(&cfg)?;
    for r in &records {
        let src_bits = cfg.nt.trailing_zeros() as u64 * r.trials;
        let (lo, hi) = wilson_interval(r.source_errors, src_bits, 1.96);
        let mut line = format!(
            "{} snr={} dB: ber_source={} [{}, {}]",
            r.scheme,
            format_sig9(r.snr_db),
            format_sig9(r.ber_source),
            format_sig9(lo),
            format_sig9(hi)
        );
        if let Some(e) = r.ris_errors {
            let (lo, hi) = wilson_interval(e, 2 * cfg.m.trailing_zeros() as u64 * r.trials, 1.96);
            line += &format!(
                " ber_ris={} [{}, {}]",
                format_sig9(r.ber_ris.unwrap_or(0.0)),
                format_sig9(lo),
                format_sig9(hi)
            );
        }
        eprintln!("{line}");
    }
    match &cfg.output {
        Some(p) => write_csv(p, &records)?,
        None => {
            let mut buf = Vec::new();
            ris_ssk::harness::write_csv_to(&mut buf, &records)?;
            std::io::stdout().write_all(&buf)?;
        }
    }
    if let Some(p) = json {
        write_json(p, &records)?;
    }
    Ok(())
}

fn analytic(params: &Params, asymptotic: bool) -> anyhow::Result<()> {
    let o = params.overrides()?;
    let scheme = o.scheme.ok_or_else(|| Error::Config("missing required key 'scheme'".into()))?;
    let n = o.n.ok_or_else(|| Error::Config("missing required key 'n'".into()))?;
    let nt = o.nt.ok_or_else(|| Error::Config("missing required key 'nt'".into()))?;
    let m = o.m.unwrap_or(2);
    let grid = match (o.snr_db, o.snr) {
        (Some(g), _) => g,
        (None, Some(r)) => parse_snr_range(&r)?,
        (None, None) => return Err(Error::Config("missing required key 'snr'".into()).into()),
    };
    let kind = match (scheme.is_astbc(), scheme.is_beamformed(), asymptotic) {
        (true, _, false) => CurveKind::Alamouti,
        (true, _, true) => CurveKind::AlamoutiAsymptotic,
        (false, true, false) if nt == 2 => CurveKind::BeamformingTwoTx,
        _ => {
            return Err(Error::Config(format!(
                "no closed form for scheme '{scheme}' with nt = {nt}{}",
                if asymptotic { " (asymptotic)" } else { "" }
            ))
            .into())
        }
    };
    let mut text = String::from("snr_db,abep_source,abep_ris\n");
    for p in analytic_curve(kind, &grid, n, nt, m)? {
        text += &format!(
            "{},{},{}\n",
            format_sig9(p.snr_db),
            format_sig9(p.source),
            p.ris.map(format_sig9).unwrap_or_default()
        );
    }
    emit(o.output.as_deref(), &text)
}

#[allow(clippy::too_many_arguments)]
fn optimize(
    n: usize,
    nt: usize,
    seed: u64,
    trial: u64,
    method: Method,
    levels: usize,
    rounding_count: Option<usize>,
) -> anyhow::Result<()> {
    let ch = sample_channel(n, nt, false, &mut StreamKey::channel(seed, trial).rng())?;
    let mut text = String::new();
    let phi = match method {
        Method::Optimal => optimal_two_tx(&ch)?,
        Method::Lowcomplexity => low_complexity_beamform(&ch)?,
        Method::Bruteforce => brute_force_beamform(&ch, levels)?,
        Method::Sdr => {
            let mut opts = ris_ssk::SdrOptions::default();
            if let Some(r) = rounding_count {
                opts.rounding_count = r;
            }
            let mut rng = StreamKey::new(seed, 0, trial, Purpose::Rounding).rng();
            let sol = sdr_beamform(&ch, &opts, &mut rng)?;
            let d = &sol.diagnostics;
            text += &format!(
                "solver_iterations: {}\nconverged: {}\nrelaxation_objective: {}\nchosen_candidate: {}\nrounded_d_min: {}\n",
                d.iterations,
                d.converged,
                format_sig9(d.relaxation_objective),
                d.chosen_candidate,
                format_sig9(d.rounded_d_min)
            );
            sol.phi
        }
    };
    let d_min = min_pairwise_distance(&ch, &phi)?;
    let phases: Vec<String> = phi.phases().iter().map(|&t| format_sig9(t)).collect();
    let out = format!("n: {n}\nnt: {nt}\nd_min: {}\n{text}theta: {}\n", format_sig9(d_min), phases.join(","));
    emit(None, &out)
}

fn validate(level: Level) -> anyhow::Result<()> {
    let level = match level {
        Level::Fast => ValidationLevel::Fast,
        Level::Full => ValidationLevel::Full,
    };
    let report = validate_suite(level)?;
    for c in &report.checks {
        println!("{c}");
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(ChecksFailed.into())
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Sweep { params, json } => sweep(&params, json.as_deref()),
        Command::Analytic { params, asymptotic } => analytic(&params, asymptotic),
        Command::Optimize {
            n,
            nt,
            seed,
            trial,
            method,
            levels,
            rounding_count,
        } => optimize(n, nt, seed, trial, method, levels, rounding_count),
        Command::Validate { level } => validate(level),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<ChecksFailed>() => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_file_grid() {
        let cli = Cli::try_parse_from(["ris-ssk", "sweep", "--scheme", "pb", "--snr", "-4:4:2"]).unwrap();
        let Command::Sweep { params, .. } = cli.command else { panic!() };
        let o = params.overrides().unwrap();
        assert_eq!(o.scheme, Some(Scheme::Pb));
        assert_eq!(o.snr.as_deref(), Some("-4:4:2"));
        assert!(o.snr_db.is_none());
    }
}
