use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Scheme;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "scheme,n,nt,m,snr_db,trials,source_errors,ris_errors,ber_source,ber_ris,analytic_source,analytic_ris,seed,wall_time_s";

/// One simulated SNR point. Fields that do not apply to a scheme are `None`
/// and written as empty CSV cells (`null` in JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub scheme: Scheme,
    pub n: usize,
    pub nt: usize,
    pub m: Option<usize>,
    pub snr_db: f64,
    pub trials: u64,
    pub source_errors: u64,
    pub ris_errors: Option<u64>,
    pub ber_source: f64,
    pub ber_ris: Option<f64>,
    pub analytic_source: Option<f64>,
    pub analytic_ris: Option<f64>,
    pub seed: u64,
    pub wall_time_s: Option<f64>,
}

/// Formats with at most nine significant digits, in the style of `%.9g`.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

fn csv_row(r: &BerRecord) -> String {
    [
        r.scheme.name().to_string(),
        r.n.to_string(),
        r.nt.to_string(),
        opt(r.m, |v| v.to_string()),
        format_sig9(r.snr_db),
        r.trials.to_string(),
        r.source_errors.to_string(),
        opt(r.ris_errors, |v| v.to_string()),
        format_sig9(r.ber_source),
        opt(r.ber_ris, format_sig9),
        opt(r.analytic_source, format_sig9),
        opt(r.analytic_ris, format_sig9),
        r.seed.to_string(),
        opt(r.wall_time_s, format_sig9),
    ]
    .join(",")
}

pub fn write_csv_to<W: Write>(mut w: W, records: &[BerRecord]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", csv_row(r))?;
    }
    w.flush()
}

pub fn write_csv(path: &Path, records: &[BerRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(BufWriter::new(file), records).map_err(|e| Error::io(path, e))
}

pub fn write_json(path: &Path, records: &[BerRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, records).map_err(|e| Error::format(path, e))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_json(path: &Path) -> Result<Vec<BerRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| Error::format(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<BerRecord>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::format(path, e))?;
    let header = rdr.headers().map_err(|e| Error::format(path, e))?.clone();
    let expected: Vec<&str> = CSV_HEADER.split(',').collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::format(path, "unexpected CSV header"));
    }
    let mut out = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Error::format(path, e))?;
        let ctx = |col: &str, e: String| Error::format(path, format!("row {}: column {col}: {e}", line + 1));
        let field = |i: usize| row.get(i).unwrap_or("");
        macro_rules! req {
            ($i:expr, $t:ty) => {
                field($i).parse::<$t>().map_err(|e| ctx(expected[$i], e.to_string()))?
            };
        }
        macro_rules! optf {
            ($i:expr, $t:ty) => {
                match field($i) {
                    "" => None,
                    s => Some(s.parse::<$t>().map_err(|e| ctx(expected[$i], e.to_string()))?),
                }
            };
        }
        out.push(BerRecord {
            scheme: field(0).parse().map_err(|e: Error| ctx("scheme", e.to_string()))?,
            n: req!(1, usize),
            nt: req!(2, usize),
            m: optf!(3, usize),
            snr_db: req!(4, f64),
            trials: req!(5, u64),
            source_errors: req!(6, u64),
            ris_errors: optf!(7, u64),
            ber_source: req!(8, f64),
            ber_ris: optf!(9, f64),
            analytic_source: optf!(10, f64),
            analytic_ris: optf!(11, f64),
            seed: req!(12, u64),
            wall_time_s: optf!(13, f64),
        });
    }
    Ok(out)
}
