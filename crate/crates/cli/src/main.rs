use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crouzeix_lab::certifier::{
    certify, certify_as, classify, figure2_data, region_curves, replay_proofs, Certificate, RegionId,
};
use crouzeix_lab::dense::C64;
use crouzeix_lab::error::LabError;
use crouzeix_lab::json::{fmt_f64, to_json};
use crouzeix_lab::permutation::{verify_observation, PermSpec};
use crouzeix_lab::ratio::{worst_ratio_search, RatioResult, MAX_DEGREE};

const EXIT_FAIL: u8 = 1;
const EXIT_DOMAIN: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_PARSE: u8 = 4;

/// Header of the sweep CSV.
const CSV_HEADER: &str = "rho,r,region,kappa,norm_sq,c_upper,product,verdict";

#[derive(Parser, Debug)]
#[command(name = "crouzeix-lab", version, about = "Crouzeix-ratio certificates for 3x3 tridiagonal Toeplitz-diagonal matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certify one (rho, r) point and print the certificate as JSON.
    Verify {
        #[arg(long, allow_hyphen_values = true)]
        rho: f64,
        #[arg(long, allow_hyphen_values = true)]
        r: f64,
        /// Use this region's construction instead of the classified one.
        #[arg(long, value_enum)]
        region: Option<RegionArg>,
    },
    /// Certify every point of a grid.
    Sweep {
        /// `lo,hi,steps`; an inclusive uniform grid.
        #[arg(long, default_value = "1.01,50,100")]
        rho_range: String,
        /// `lo,hi,steps`, or `auto` / `auto,steps` for `1/sqrt(rho) < r <= 1`.
        #[arg(long, default_value = "auto")]
        r_range: String,
        /// Worker threads; `CROUZEIX_LAB_WORKERS` overrides.
        #[arg(long)]
        workers: Option<usize>,
        /// Output file; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Emit curve data for the region diagram or the boundary-curve bound.
    Figures {
        #[arg(value_enum)]
        which: Figure,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Largest rho of the region diagram.
        #[arg(long, default_value_t = 50.0)]
        rho_max: f64,
        /// Samples per curve.
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Replay every inequality chain numerically.
    Replay,
    /// Search for the worst Crouzeix ratio at (rho, r).
    Ratio {
        #[arg(long, allow_hyphen_values = true)]
        rho: f64,
        #[arg(long, allow_hyphen_values = true)]
        r: f64,
        #[arg(long, default_value_t = 6)]
        degree: usize,
        #[arg(long, default_value_t = 200)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check a matrix aI + DP with P given in cycle notation.
    Perm {
        /// Shift, e.g. `0`, `1+1i`, `-2i`.
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        a: String,
        /// Comma-separated diagonal of D, entries as in `--a`.
        #[arg(long, allow_hyphen_values = true)]
        diag: String,
        /// Cycle notation such as `(0 1)(2 3 4)`.
        #[arg(long, default_value = "")]
        perm: String,
        #[arg(long, default_value_t = 6)]
        degree: usize,
        #[arg(long, default_value_t = 200)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RegionArg {
    SmallR,
    Strip,
    Diagonalizable,
    LargeRhoR,
}

impl From<RegionArg> for RegionId {
    fn from(r: RegionArg) -> Self {
        match r {
            RegionArg::SmallR => RegionId::SmallR,
            RegionArg::Strip => RegionId::Strip,
            RegionArg::Diagonalizable => RegionId::Diagonalizable,
            RegionArg::LargeRhoR => RegionId::LargeRhoR,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Figure {
    Regions,
    Figure2,
}

/// Failure modes mapped to exit codes.
#[derive(Debug)]
enum CliError {
    Parse(String),
    Domain(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Domain(_) => EXIT_DOMAIN,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Parse(m) | CliError::Domain(m) | CliError::Io(m) => m,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        match e {
            LabError::Parse(m) => CliError::Parse(m),
            LabError::Dimension(m) => CliError::Parse(m),
            other => CliError::Domain(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(pass) => ExitCode::from(if pass { 0 } else { EXIT_FAIL }),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

/// Runs a subcommand; `Ok(pass)` selects exit code 0 or 1.
fn run(command: Command) -> Result<bool, CliError> {
    match command {
        Command::Verify { rho, r, region } => cmd_verify(rho, r, region),
        Command::Sweep {
            rho_range,
            r_range,
            workers,
            output,
            format,
        } => {
            let config = SweepConfig {
                rho: parse_range(&rho_range)?,
                r: parse_r_range(&r_range)?,
                workers: resolve_workers(workers)?,
                format,
            };
            cmd_sweep(&config, output)
        }
        Command::Figures {
            which,
            output,
            rho_max,
            points,
        } => cmd_figures(which, output, rho_max, points),
        Command::Replay => {
            let report = replay_proofs();
            print_json(&report)?;
            Ok(report.all_pass())
        }
        Command::Ratio {
            rho,
            r,
            degree,
            budget,
            seed,
        } => cmd_ratio(rho, r, degree, budget, seed),
        Command::Perm {
            a,
            diag,
            perm,
            degree,
            budget,
            seed,
        } => cmd_perm(&a, &diag, &perm, degree, budget, seed),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = to_json(value)?;
    let mut out = io::stdout().lock();
    writeln!(out, "{text}")?;
    out.flush()?;
    Ok(())
}

fn open_output(path: Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => {
            let f = File::create(&p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            Box::new(BufWriter::new(f))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_verify(rho: f64, r: f64, region: Option<RegionArg>) -> Result<bool, CliError> {
    if classify(rho, r) == RegionId::OutOfDomain {
        return Err(CliError::Domain(format!(
            "(rho, r) = ({rho}, {r}) is outside 1 < rho, 1/sqrt(rho) < r <= 1"
        )));
    }
    let cert = match region {
        Some(reg) => certify_as(rho, r, reg.into())?,
        None => certify(rho, r)?,
    };
    print_json(&cert)?;
    Ok(cert.verdict)
}

/// Inclusive uniform grid.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Range {
    lo: f64,
    hi: f64,
    steps: usize,
}

impl Range {
    fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        (0..self.steps)
            .map(|k| self.lo + (self.hi - self.lo) * k as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum RRange {
    Fixed(Range),
    /// `steps` points `1/sqrt(rho) + (1 - 1/sqrt(rho)) k / steps`, `k = 1..=steps`.
    Auto(Option<usize>),
}

#[derive(Debug, Clone, Copy)]
struct SweepConfig {
    rho: Range,
    r: RRange,
    workers: usize,
    format: Format,
}

fn parse_range(text: &str) -> Result<Range, CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(CliError::Parse(format!("range {text:?} must be lo,hi,steps")));
    }
    let num = |s: &str| {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| CliError::Parse(format!("bad number {s:?} in range {text:?}")))
    };
    let (lo, hi) = (num(parts[0])?, num(parts[1])?);
    let steps: usize = parts[2]
        .parse()
        .map_err(|_| CliError::Parse(format!("bad step count {:?} in range {text:?}", parts[2])))?;
    let ok = match steps {
        0 => false,
        1 => lo <= hi,
        _ => lo < hi,
    };
    if !ok {
        return Err(CliError::Parse(format!("range {text:?} needs lo < hi and steps >= 2 (or steps = 1)")));
    }
    Ok(Range { lo, hi, steps })
}

fn parse_r_range(text: &str) -> Result<RRange, CliError> {
    let t = text.trim();
    if t == "auto" {
        return Ok(RRange::Auto(None));
    }
    if let Some(rest) = t.strip_prefix("auto,") {
        let steps: usize = rest
            .trim()
            .parse()
            .ok()
            .filter(|&s| s >= 1)
            .ok_or_else(|| CliError::Parse(format!("bad step count in {text:?}")))?;
        return Ok(RRange::Auto(Some(steps)));
    }
    Ok(RRange::Fixed(parse_range(t)?))
}

fn resolve_workers(flag: Option<usize>) -> Result<usize, CliError> {
    if let Ok(v) = std::env::var("CROUZEIX_LAB_WORKERS") {
        return v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| CliError::Parse(format!("CROUZEIX_LAB_WORKERS = {v:?} is not a positive integer")));
    }
    match flag {
        Some(0) => Err(CliError::Parse("--workers must be >= 1".into())),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

/// Grid points in row-major order (rho outer, r inner).
fn sweep_points(config: &SweepConfig) -> Vec<(f64, f64)> {
    let mut pts = Vec::new();
    for rho in config.rho.values() {
        match config.r {
            RRange::Fixed(range) => pts.extend(range.values().into_iter().map(|r| (rho, r))),
            RRange::Auto(steps) => {
                let n = steps.unwrap_or(config.rho.steps);
                if !(rho > 1.0) {
                    pts.push((rho, f64::NAN));
                    continue;
                }
                let lo = 1.0 / rho.sqrt();
                pts.extend((1..=n).map(|k| (rho, (lo + (1.0 - lo) * k as f64 / n as f64).min(1.0))));
            }
        }
    }
    pts
}

enum SweepRecord {
    Certified(Box<Certificate>),
    Rejected { rho: f64, r: f64, reason: String },
}

impl SweepRecord {
    fn verdict(&self) -> bool {
        matches!(self, SweepRecord::Certified(c) if c.verdict)
    }

    fn csv_row(&self) -> String {
        match self {
            SweepRecord::Certified(c) => format!(
                "{},{},{},{},{},{},{},{}",
                fmt_f64(c.rho),
                fmt_f64(c.r),
                c.region,
                fmt_f64(c.kappa),
                fmt_f64(c.norm_sq_upper),
                c.c_upper.map(fmt_f64).unwrap_or_default(),
                fmt_f64(c.product),
                c.verdict
            ),
            SweepRecord::Rejected { rho, r, .. } => {
                format!("{},{},{},,,,,false", fmt_f64(*rho), fmt_f64(*r), RegionId::OutOfDomain)
            }
        }
    }

    fn json_value(&self) -> Result<serde_json::Value, CliError> {
        match self {
            SweepRecord::Certified(c) => serde_json::to_value(c.as_ref()).map_err(|e| CliError::Io(e.to_string())),
            SweepRecord::Rejected { rho, r, reason } => Ok(serde_json::json!({
                "region": RegionId::OutOfDomain,
                "rho": rho,
                "r": r,
                "verdict": false,
                "failure": reason,
            })),
        }
    }
}

fn sweep_one(rho: f64, r: f64) -> SweepRecord {
    match certify(rho, r) {
        Ok(c) => SweepRecord::Certified(Box::new(c)),
        Err(e) => SweepRecord::Rejected {
            rho,
            r,
            reason: e.to_string(),
        },
    }
}

fn cmd_sweep(config: &SweepConfig, output: Option<PathBuf>) -> Result<bool, CliError> {
    let points = sweep_points(config);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    let records: Vec<SweepRecord> = pool.install(|| points.par_iter().map(|&(rho, r)| sweep_one(rho, r)).collect());
    let all_pass = records.iter().all(SweepRecord::verdict);
    let mut out = open_output(output)?;
    match config.format {
        Format::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for rec in &records {
                writeln!(out, "{}", rec.csv_row())?;
            }
        }
        Format::Json => {
            let values = records.iter().map(SweepRecord::json_value).collect::<Result<Vec<_>, _>>()?;
            writeln!(out, "{}", to_json(&values)?)?;
        }
    }
    out.flush()?;
    Ok(all_pass)
}

fn cmd_figures(which: Figure, output: Option<PathBuf>, rho_max: f64, points: usize) -> Result<bool, CliError> {
    if !(rho_max > 1.0) || points < 2 {
        return Err(CliError::Parse("figures needs --rho-max > 1 and --points >= 2".into()));
    }
    let mut out = open_output(output)?;
    match which {
        Figure::Regions => {
            writeln!(out, "curve,rho,r")?;
            for p in region_curves(rho_max, points) {
                writeln!(out, "{},{},{}", p.curve, fmt_f64(p.rho), fmt_f64(p.r))?;
            }
        }
        Figure::Figure2 => {
            writeln!(out, "rho,value")?;
            for (rho, v) in figure2_data(points) {
                writeln!(out, "{},{}", fmt_f64(rho), fmt_f64(v))?;
            }
        }
    }
    out.flush()?;
    Ok(true)
}

#[derive(Serialize)]
struct RatioReport {
    rho: f64,
    r: f64,
    region: RegionId,
    certified: bool,
    limit: f64,
    result: RatioResult,
    pass: bool,
}

fn cmd_ratio(rho: f64, r: f64, degree: usize, budget: usize, seed: u64) -> Result<bool, CliError> {
    if degree > MAX_DEGREE {
        return Err(CliError::Parse(format!("--degree must be <= {MAX_DEGREE}")));
    }
    if budget == 0 {
        return Err(CliError::Parse("--budget must be >= 1".into()));
    }
    let region = classify(rho, r);
    if region == RegionId::OutOfDomain {
        return Err(CliError::Domain(format!(
            "(rho, r) = ({rho}, {r}) is outside 1 < rho, 1/sqrt(rho) < r <= 1"
        )));
    }
    let certified = certify(rho, r)?.verdict;
    let result = worst_ratio_search(rho, r, degree, budget, seed)?;
    let limit = 2.0 + 1e-6;
    let pass = result.best_ratio <= limit;
    print_json(&RatioReport {
        rho,
        r,
        region,
        certified,
        limit,
        result,
        pass,
    })?;
    Ok(pass)
}

/// `3`, `-0.5`, `2i`, `-i`, `1+1i`, `1.5-2e-3i`.
fn parse_complex(text: &str) -> Result<C64, CliError> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || CliError::Parse(format!("cannot parse complex number {text:?}"));
    if t.is_empty() {
        return Err(bad());
    }
    let imag = |s: &str| -> Result<f64, CliError> {
        match s {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => s.parse::<f64>().map_err(|_| bad()),
        }
    };
    if let Some(body) = t.strip_suffix('i') {
        // split at the last sign that is not part of an exponent
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
        return match split {
            Some(k) => Ok(C64::new(body[..k].parse::<f64>().map_err(|_| bad())?, imag(&body[k..])?)),
            None => Ok(C64::new(0.0, imag(body)?)),
        };
    }
    Ok(C64::new(t.parse::<f64>().map_err(|_| bad())?, 0.0))
}

fn cmd_perm(a: &str, diag: &str, perm: &str, degree: usize, budget: usize, seed: u64) -> Result<bool, CliError> {
    if degree > MAX_DEGREE {
        return Err(CliError::Parse(format!("--degree must be <= {MAX_DEGREE}")));
    }
    if budget == 0 {
        return Err(CliError::Parse("--budget must be >= 1".into()));
    }
    let a = parse_complex(a)?;
    let d = diag.split(',').map(parse_complex).collect::<Result<Vec<C64>, _>>()?;
    let p = PermSpec::parse_cycles(perm, Some(d.len()))?;
    let report = verify_observation(a, &d, &p, degree, budget, seed)?;
    print_json(&report)?;
    Ok(report.pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_parsing() {
        assert_eq!(parse_complex("0").unwrap(), C64::new(0.0, 0.0));
        assert_eq!(parse_complex("1+1i").unwrap(), C64::new(1.0, 1.0));
        assert_eq!(parse_complex("-2i").unwrap(), C64::new(0.0, -2.0));
        assert_eq!(parse_complex("i").unwrap(), C64::new(0.0, 1.0));
        assert_eq!(parse_complex("1.5e-3-2e+1i").unwrap(), C64::new(1.5e-3, -20.0));
        assert_eq!(parse_complex(" 3 - i ").unwrap(), C64::new(3.0, -1.0));
        for bad in ["", "x", "1+", "1+2j", "--1"] {
            assert!(parse_complex(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn ranges() {
        let r = parse_range("1,3,5").unwrap();
        assert_eq!(r.values(), vec![1.0, 1.5, 2.0, 2.5, 3.0]);
        assert_eq!(parse_range("2,2,1").unwrap().values(), vec![2.0]);
        for bad in ["1,2", "2,1,5", "1,1,3", "1,2,0", "a,2,3"] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
        assert_eq!(parse_r_range("auto").unwrap(), RRange::Auto(None));
        assert_eq!(parse_r_range("auto,7").unwrap(), RRange::Auto(Some(7)));
        assert!(parse_r_range("auto,0").is_err());
    }

    #[test]
    fn auto_sweep_points_stay_in_domain() {
        let config = SweepConfig {
            rho: parse_range("1.01,20,30").unwrap(),
            r: RRange::Auto(Some(25)),
            workers: 1,
            format: Format::Csv,
        };
        let pts = sweep_points(&config);
        assert_eq!(pts.len(), 30 * 25);
        assert!(pts.iter().all(|&(rho, r)| classify(rho, r) != RegionId::OutOfDomain));
    }
}
