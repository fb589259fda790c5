//! The `brs` command line: CSV tables for every library operation and the
//! four standard figure sets.
//!
//! Settings come from three layers, later ones winning: a JSON config file
//! (`--config`), whose top level mirrors [`BrsParams`] and may hold one
//! block per subcommand, then the flags. Every table header records the
//! resolved settings under their config key names, so a header can be fed
//! back as a config to reproduce the table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{Map, Value};

use crate::apps::{level_crossing, outage_sc, SampledEnvelopeScenario, ScScenario};
use crate::dist::{joint_cdf, joint_density, marginal_cdf, mgf, rho_bs, JointDensity, MgfPoint};
use crate::error::Error;
use crate::mc::{self, EnvelopePair, McEstimate};
use crate::model::BrsParams;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

const EXIT_OK: i32 = 0;
const EXIT_USAGE: i32 = 2;
const EXIT_NUMERICAL: i32 = 3;

const FIGURE_HELP: &str = "\
Default curve sets (used where a flag does not override them):
  rho     K = 1, m in {1, 2, 5, 20}, rho grid 0:0.05:0.95,0.999,1
  outage  K = 10, m in {1, 5}, rho in {0.3, 0.8}, gamma_th = 10 dB,
          gamma_bar 0:2:30 dB
  lcr/afd K = 10, m in {1, 5}, rho in {0.5, 0.9}, gamma_bar = 0 dB,
          u/sqrt(gamma_bar) -30:2:10 dB
All figures default to --mc 100000 --seed 1. The lcr column is LCR*Ts and
the afd column is AFD/Ts.";

#[derive(Parser, Debug)]
#[command(
    name = "brs",
    version,
    about = "Bivariate Rician shadowed fading: joint law, outage, LCR/AFD, Monte Carlo",
    after_help = "Exit codes: 0 success, 2 bad arguments or parameters, 3 numerical failure.\n\
                  BRS_THREADS caps the worker count."
)]
struct Cli {
    /// JSON settings; top level mirrors the parameters, with optional
    /// per-subcommand blocks. Flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (a directory for `figure`). Standard output otherwise.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct ParamArgs {
    /// Diffuse power per branch [default: 1]
    #[arg(long)]
    sigma2: Option<f64>,
    /// LOS to diffuse power ratio [default: 1]
    #[arg(long)]
    k_factor: Option<f64>,
    /// Nakagami shaping of the LOS amplitude, >= 0.5 [default: 2]
    #[arg(long)]
    m: Option<f64>,
    /// Correlation of the diffuse parts, in [0, 1] [default: 0.5]
    #[arg(long)]
    rho: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct McArgs {
    /// Monte Carlo draws; 0 disables the MC columns
    #[arg(long)]
    mc: Option<u64>,
    /// Seed of the Monte Carlo streams [default: 1]
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug, Default)]
struct LevelArgs {
    /// [default: 10]
    #[arg(long)]
    k_factor: Option<f64>,
    /// [default: 5]
    #[arg(long)]
    m: Option<f64>,
    /// Correlation between consecutive samples [default: 0.5]
    #[arg(long)]
    rho: Option<f64>,
    /// Average SNR in dB [default: 0]
    #[arg(long, allow_hyphen_values = true)]
    gamma_bar_db: Option<f64>,
    /// Threshold grid in dB relative to sqrt(gamma_bar) [default: -30:2:10]
    #[arg(long, allow_hyphen_values = true)]
    u_db: Option<String>,
    /// Sampling period in seconds [default: 0.001]
    #[arg(long)]
    ts: Option<f64>,
    #[command(flatten)]
    mc: McArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Joint envelope density along r1, at fixed r2 (r2 = r1 if omitted)
    Pdf {
        #[command(flatten)]
        params: ParamArgs,
        /// Grid `start:step:stop` or comma list [default: 0:0.1:3]
        #[arg(long)]
        r1: Option<String>,
        #[arg(long)]
        r2: Option<f64>,
    },
    /// Joint CDF along r1, at fixed r2 (r2 = r1 if omitted)
    Cdf {
        #[command(flatten)]
        params: ParamArgs,
        /// [default: 0:0.1:3]
        #[arg(long)]
        r1: Option<String>,
        #[arg(long)]
        r2: Option<f64>,
        /// Marginal CDF of one envelope instead
        #[arg(long)]
        marginal: bool,
    },
    /// Joint MGF of the powers, E[exp(theta1 P1 + theta2 P2)], along theta1
    Mgf {
        #[command(flatten)]
        params: ParamArgs,
        /// [default: 0]
        #[arg(long, allow_hyphen_values = true)]
        theta1: Option<String>,
        /// [default: 0]
        #[arg(long, allow_hyphen_values = true)]
        theta2: Option<f64>,
    },
    /// Power correlation coefficient versus rho, one column per m
    Rho {
        /// [default: 1]
        #[arg(long)]
        sigma2: Option<f64>,
        /// [default: 1]
        #[arg(long)]
        k_factor: Option<f64>,
        /// [default: 1,2,5,20]
        #[arg(long)]
        m_list: Option<String>,
        /// [default: 0:0.05:1]
        #[arg(long)]
        rho_grid: Option<String>,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Dual-branch selection combining outage versus average SNR
    Outage {
        /// [default: 10]
        #[arg(long)]
        k_factor: Option<f64>,
        /// [default: 5]
        #[arg(long)]
        m: Option<f64>,
        /// [default: 0.3]
        #[arg(long)]
        rho: Option<f64>,
        /// Average SNR grid in dB [default: 0:2:30]
        #[arg(long, allow_hyphen_values = true)]
        gamma_bar_db: Option<String>,
        /// Outage threshold in dB [default: 10]
        #[arg(long, allow_hyphen_values = true)]
        gamma_th_db: Option<f64>,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Level crossing rate (crossings per second) versus threshold
    Lcr(LevelArgs),
    /// Average fade duration (seconds) versus threshold
    Afd(LevelArgs),
    /// Monte Carlo moments and power correlation, optionally dumping pairs
    Simulate {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        mc: McArgs,
        /// Raw pairs as little-endian f64, r1 then r2
        #[arg(long)]
        dump_pairs: Option<PathBuf>,
    },
    /// One CSV per curve of a standard figure set, written into --out
    #[command(after_help = FIGURE_HELP)]
    Figure {
        which: FigureName,
        #[arg(long)]
        k_factor: Option<f64>,
        /// Single m instead of the default list
        #[arg(long)]
        m: Option<f64>,
        #[arg(long)]
        m_list: Option<String>,
        /// Single rho instead of the default list
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        rho_list: Option<String>,
        /// x grid of the rho figure
        #[arg(long)]
        rho_grid: Option<String>,
        /// x grid of the outage figure, or the level of the lcr/afd figures
        #[arg(long, allow_hyphen_values = true)]
        gamma_bar_db: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        gamma_th_db: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        u_db: Option<String>,
        #[command(flatten)]
        mc: McArgs,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum FigureName {
    Rho,
    Outage,
    Lcr,
    Afd,
}

impl FigureName {
    fn as_str(self) -> &'static str {
        match self {
            FigureName::Rho => "rho",
            FigureName::Outage => "outage",
            FigureName::Lcr => "lcr",
            FigureName::Afd => "afd",
        }
    }
}

// ---------------------------------------------------------------------------
// errors
// ---------------------------------------------------------------------------

#[derive(Debug)]
enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(e) if e.is_numerical() => EXIT_NUMERICAL,
            _ => EXIT_USAGE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(s) => f.write_str(s),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

// ---------------------------------------------------------------------------
// tables
// ---------------------------------------------------------------------------

/// A CSV table: `# key: value` header lines, a column line, numeric rows.
/// Empty cells are missing values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CurveTable {
    pub header: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl CurveTable {
    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.header {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| c.map(format_number).unwrap_or_default())
                .collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut table = CurveTable::default();
        let mut lines = text.lines();
        for line in lines.by_ref() {
            if let Some(rest) = line.strip_prefix("# ") {
                let (k, v) = rest
                    .split_once(": ")
                    .ok_or_else(|| format!("bad header line {line:?}"))?;
                table.header.push((k.to_string(), v.to_string()));
            } else {
                table.columns = line.split(',').map(str::to_string).collect();
                break;
            }
        }
        if table.columns.is_empty() {
            return Err("missing column line".into());
        }
        for line in lines {
            let row = line
                .split(',')
                .map(|c| {
                    if c.is_empty() {
                        Ok(None)
                    } else {
                        c.parse::<f64>()
                            .map(Some)
                            .map_err(|e| format!("{c:?}: {e}"))
                    }
                })
                .collect::<std::result::Result<Vec<_>, _>>()?;
            if row.len() != table.columns.len() {
                return Err(format!("row {line:?} has {} cells", row.len()));
            }
            table.rows.push(row);
        }
        Ok(table)
    }

    /// The header as a config object for reproducing the table.
    pub fn header_config(&self) -> Value {
        Value::Object(
            self.header
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                .collect(),
        )
    }
}

/// Shortest round-trip form; exponent notation outside `[1e-4, 1e15)`.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn format_list(v: &[f64]) -> String {
    v.iter()
        .map(|x| format_number(*x))
        .collect::<Vec<_>>()
        .join(",")
}

/// `start:step:stop` (inclusive), a number, or a comma list of either.
/// Returns the sorted, de-duplicated values.
pub fn parse_grid(spec: &str) -> std::result::Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let nums = part
            .split(':')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("{t:?} in {spec:?}: {e}"))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        match nums[..] {
            [x] => out.push(x),
            [a, step, b] => {
                if !(step > 0.0) || !(b >= a) || !a.is_finite() || !b.is_finite() {
                    return Err(format!("range {part:?} needs step > 0 and stop >= start"));
                }
                let n = ((b - a) / step + 1e-9).floor() as usize;
                if n > 1_000_000 {
                    return Err(format!("range {part:?} has too many points"));
                }
                out.extend((0..=n).map(|i| ((a + i as f64 * step) * 1e12).round() / 1e12));
            }
            _ => return Err(format!("{part:?} is not a number or start:step:stop")),
        }
    }
    if out.is_empty() {
        return Err(format!("empty grid {spec:?}"));
    }
    if out.iter().any(|x| !x.is_finite()) {
        return Err(format!("non-finite value in {spec:?}"));
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

// ---------------------------------------------------------------------------
// settings
// ---------------------------------------------------------------------------

/// Resolved key/value settings: config top level, then config blocks, then
/// flags.
struct Settings {
    values: Map<String, Value>,
    used: BTreeMap<String, String>,
    order: Vec<String>,
}

impl Settings {
    fn new(config: Option<&Value>, blocks: &[&str], flags: Map<String, Value>) -> CliResult<Self> {
        let mut values = Map::new();
        if let Some(cfg) = config {
            let Value::Object(top) = cfg else {
                return usage("config: top level must be a JSON object");
            };
            let mut layer = Some(top);
            merge_scalars(&mut values, top);
            for b in blocks {
                layer = layer.and_then(|l| l.get(*b)).and_then(Value::as_object);
                if let Some(obj) = layer {
                    merge_scalars(&mut values, obj);
                }
            }
        }
        values.extend(flags);
        Ok(Settings {
            values,
            used: BTreeMap::new(),
            order: Vec::new(),
        })
    }

    fn record(&mut self, key: &str, text: String) {
        if self.used.insert(key.to_string(), text).is_none() {
            self.order.push(key.to_string());
        }
    }

    fn raw(&self, key: &str) -> Option<&Value> {
        self.values.get(key).filter(|v| !v.is_null())
    }

    fn has(&self, key: &str) -> bool {
        self.raw(key).is_some()
    }

    fn f64(&mut self, key: &str, default: f64) -> CliResult<f64> {
        let v = match self.raw(key) {
            None => default,
            Some(Value::Number(n)) => n.as_f64().unwrap_or(f64::NAN),
            Some(Value::String(s)) => s
                .trim()
                .parse()
                .map_err(|e| CliError::Usage(format!("{key}: {s:?}: {e}")))?,
            Some(other) => return usage(format!("{key}: expected a number, got {other}")),
        };
        self.record(key, format_number(v));
        Ok(v)
    }

    fn u64(&mut self, key: &str, default: u64) -> CliResult<u64> {
        let v = match self.raw(key) {
            None => default,
            Some(Value::Number(n)) => n.as_u64().ok_or_else(|| {
                CliError::Usage(format!("{key}: expected a nonnegative integer, got {n}"))
            })?,
            Some(Value::String(s)) => s
                .trim()
                .parse()
                .map_err(|e| CliError::Usage(format!("{key}: {s:?}: {e}")))?,
            Some(other) => return usage(format!("{key}: expected an integer, got {other}")),
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    fn grid(&mut self, key: &str, default: &str) -> CliResult<Vec<f64>> {
        let parsed = match self.raw(key) {
            None => parse_grid(default),
            Some(Value::String(s)) => parse_grid(s),
            Some(Value::Number(n)) => Ok(vec![n.as_f64().unwrap_or(f64::NAN)]),
            Some(Value::Array(a)) => a
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| format!("non-numeric entry {x}")))
                .collect::<std::result::Result<Vec<_>, _>>()
                .and_then(|v| parse_grid(&format_list(&v))),
            Some(other) => Err(format!("expected a grid, got {other}")),
        };
        let v = parsed.map_err(|e| CliError::Usage(format!("{key}: {e}")))?;
        self.record(key, format_list(&v));
        Ok(v)
    }

    fn header(&self, command: &str) -> Vec<(String, String)> {
        let mut h = vec![
            ("version".to_string(), VERSION.to_string()),
            ("command".to_string(), command.to_string()),
        ];
        h.extend(self.order.iter().map(|k| (k.clone(), self.used[k].clone())));
        h
    }
}

fn merge_scalars(into: &mut Map<String, Value>, from: &Map<String, Value>) {
    for (k, v) in from {
        if !v.is_object() {
            into.insert(k.clone(), v.clone());
        }
    }
}

struct FlagMap(Map<String, Value>);

impl FlagMap {
    fn new() -> Self {
        FlagMap(Map::new())
    }

    fn num(&mut self, key: &str, v: Option<f64>) -> &mut Self {
        if let Some(v) = v {
            // non-finite values cannot be JSON numbers; keep them as text
            let value = serde_json::Number::from_f64(v)
                .map(Value::Number)
                .unwrap_or_else(|| Value::String(v.to_string()));
            self.0.insert(key.to_string(), value);
        }
        self
    }

    fn int(&mut self, key: &str, v: Option<u64>) -> &mut Self {
        if let Some(v) = v {
            self.0.insert(key.to_string(), Value::from(v));
        }
        self
    }

    fn text(&mut self, key: &str, v: &Option<String>) -> &mut Self {
        if let Some(v) = v {
            self.0.insert(key.to_string(), Value::String(v.clone()));
        }
        self
    }

    fn params(&mut self, p: &ParamArgs) -> &mut Self {
        self.num("sigma2", p.sigma2)
            .num("k_factor", p.k_factor)
            .num("m", p.m)
            .num("rho", p.rho)
    }

    fn mc(&mut self, a: &McArgs) -> &mut Self {
        self.int("mc", a.mc).int("seed", a.seed)
    }
}

fn params_from(s: &mut Settings, defaults: [f64; 4]) -> CliResult<BrsParams> {
    let sigma2 = s.f64("sigma2", defaults[0])?;
    let k = s.f64("k_factor", defaults[1])?;
    let m = s.f64("m", defaults[2])?;
    let rho = s.f64("rho", defaults[3])?;
    Ok(BrsParams::new(sigma2, k, m, rho)?)
}

fn mc_from(s: &mut Settings, default_n: u64) -> CliResult<(u64, u64)> {
    Ok((s.u64("mc", default_n)?, s.u64("seed", 1)?))
}

// ---------------------------------------------------------------------------
// entry points
// ---------------------------------------------------------------------------

/// Runs the command line, honouring `BRS_THREADS`. Returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let threads = match std::env::var("BRS_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Some(n),
            _ => {
                eprintln!("error: BRS_THREADS must be a positive integer, got {s:?}");
                return EXIT_USAGE;
            }
        },
        Err(_) => None,
    };
    run_with_threads(argv, threads)
}

/// [`run`] on a pool of `threads` workers (the global pool if `None`).
pub fn run_with_threads<I, T>(argv: I, threads: Option<usize>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match threads {
        None => execute(cli),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(cli)),
            Err(e) => Err(CliError::Usage(format!("thread pool: {e}"))),
        },
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn read_config(path: &Option<PathBuf>) -> CliResult<Option<Value>> {
    let Some(path) = path else { return Ok(None) };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}

fn execute(cli: Cli) -> CliResult<()> {
    let config = read_config(&cli.config)?;
    let cfg = config.as_ref();
    if let Command::Figure { which, .. } = &cli.command {
        let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
        let tables = figure(cfg, *which, &cli.command)?;
        fs::create_dir_all(&dir).map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
        for (name, table) in tables {
            write_table(Some(&dir.join(name)), &table)?;
        }
        return Ok(());
    }
    let table = match &cli.command {
        Command::Pdf { params, r1, r2 } => {
            let mut f = FlagMap::new();
            f.params(params).text("r1", r1).num("r2", *r2);
            cmd_pdf(Settings::new(cfg, &["pdf"], f.0)?)?
        }
        Command::Cdf {
            params,
            r1,
            r2,
            marginal,
        } => {
            let mut f = FlagMap::new();
            f.params(params).text("r1", r1).num("r2", *r2);
            if *marginal {
                f.0.insert("marginal".into(), Value::from(1));
            }
            cmd_cdf(Settings::new(cfg, &["cdf"], f.0)?)?
        }
        Command::Mgf {
            params,
            theta1,
            theta2,
        } => {
            let mut f = FlagMap::new();
            f.params(params)
                .text("theta1", theta1)
                .num("theta2", *theta2);
            cmd_mgf(Settings::new(cfg, &["mgf"], f.0)?)?
        }
        Command::Rho {
            sigma2,
            k_factor,
            m_list,
            rho_grid,
            mc,
        } => {
            let mut f = FlagMap::new();
            f.num("sigma2", *sigma2)
                .num("k_factor", *k_factor)
                .text("m_list", m_list)
                .text("rho_grid", rho_grid)
                .mc(mc);
            cmd_rho(Settings::new(cfg, &["rho"], f.0)?)?
        }
        Command::Outage {
            k_factor,
            m,
            rho,
            gamma_bar_db,
            gamma_th_db,
            mc,
        } => {
            let mut f = FlagMap::new();
            f.num("k_factor", *k_factor)
                .num("m", *m)
                .num("rho", *rho)
                .text("gamma_bar_db", gamma_bar_db)
                .num("gamma_th_db", *gamma_th_db)
                .mc(mc);
            let mut s = Settings::new(cfg, &["outage"], f.0)?;
            let k = s.f64("k_factor", 10.0)?;
            let m = s.f64("m", 5.0)?;
            let rho = s.f64("rho", 0.3)?;
            outage_table(s, "outage", k, m, rho, 0)?
        }
        Command::Lcr(a) | Command::Afd(a) => {
            let afd = matches!(cli.command, Command::Afd(_));
            let name = if afd { "afd" } else { "lcr" };
            let mut f = FlagMap::new();
            f.num("k_factor", a.k_factor)
                .num("m", a.m)
                .num("rho", a.rho)
                .num("gamma_bar_db", a.gamma_bar_db)
                .text("u_db", &a.u_db)
                .num("ts", a.ts)
                .mc(&a.mc);
            let mut s = Settings::new(cfg, &[name], f.0)?;
            let k = s.f64("k_factor", 10.0)?;
            let m = s.f64("m", 5.0)?;
            let rho = s.f64("rho", 0.5)?;
            let ts = s.f64("ts", 1e-3)?;
            level_table(s, name, afd, k, m, rho, ts, false, 0)?
        }
        Command::Simulate {
            params,
            mc,
            dump_pairs,
        } => {
            let mut f = FlagMap::new();
            f.params(params).mc(mc);
            cmd_simulate(
                Settings::new(cfg, &["simulate"], f.0)?,
                dump_pairs.as_deref(),
            )?
        }
        Command::Figure { .. } => unreachable!(),
    };
    write_table(cli.out.as_deref(), &table)
}

fn write_table(path: Option<&Path>, table: &CurveTable) -> CliResult<()> {
    let csv = table.to_csv();
    match path {
        Some(p) => fs::write(p, csv).map_err(|e| CliError::Usage(format!("{}: {e}", p.display()))),
        None => io::stdout()
            .write_all(csv.as_bytes())
            .map_err(|e| CliError::Usage(format!("stdout: {e}"))),
    }
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

const DEFAULT_PARAMS: [f64; 4] = [1.0, 1.0, 2.0, 0.5];

/// Evaluates `f` on every x in parallel, keeping x order.
fn par_rows<F>(xs: &[f64], f: F) -> CliResult<Vec<Vec<Option<f64>>>>
where
    F: Fn(f64) -> CliResult<Vec<Option<f64>>> + Sync,
{
    xs.par_iter().map(|&x| f(x)).collect()
}

fn cmd_pdf(mut s: Settings) -> CliResult<CurveTable> {
    let p = params_from(&mut s, DEFAULT_PARAMS)?;
    let r1s = s.grid("r1", "0:0.1:3")?;
    let r2 = if s.has("r2") {
        Some(s.f64("r2", 0.0)?)
    } else {
        None
    };
    let diagonal = matches!(joint_density(&p, 1.0, 1.0)?, JointDensity::Diagonal { .. });
    let rows = par_rows(&r1s, |r1| {
        let r2 = r2.unwrap_or(r1);
        Ok(match joint_density(&p, r1, r2)? {
            JointDensity::Finite(v) => vec![Some(r1), Some(r2), Some(v), None],
            JointDensity::Diagonal {
                marginal_density, ..
            } => vec![Some(r1), Some(r2), None, Some(marginal_density)],
        })
    })?;
    let mut header = s.header("pdf");
    if diagonal {
        header.push(("joint_law".into(), "collapsed onto r1 = r2".into()));
    }
    Ok(CurveTable {
        header,
        columns: ["r1", "r2", "pdf", "diagonal_marginal_pdf"]
            .map(String::from)
            .to_vec(),
        rows,
    })
}

fn cmd_cdf(mut s: Settings) -> CliResult<CurveTable> {
    let p = params_from(&mut s, DEFAULT_PARAMS)?;
    let r1s = s.grid("r1", "0:0.1:3")?;
    let marginal = s.has("marginal") && s.u64("marginal", 0)? != 0;
    if marginal {
        let rows = par_rows(&r1s, |r| Ok(vec![Some(r), Some(marginal_cdf(&p, r)?)]))?;
        return Ok(CurveTable {
            header: s.header("cdf"),
            columns: vec!["r".into(), "marginal_cdf".into()],
            rows,
        });
    }
    let r2 = if s.has("r2") {
        Some(s.f64("r2", 0.0)?)
    } else {
        None
    };
    let rows = par_rows(&r1s, |r1| {
        let r2 = r2.unwrap_or(r1);
        Ok(vec![Some(r1), Some(r2), Some(joint_cdf(&p, r1, r2)?)])
    })?;
    Ok(CurveTable {
        header: s.header("cdf"),
        columns: vec!["r1".into(), "r2".into(), "cdf".into()],
        rows,
    })
}

fn cmd_mgf(mut s: Settings) -> CliResult<CurveTable> {
    let p = params_from(&mut s, DEFAULT_PARAMS)?;
    let t1s = s.grid("theta1", "0")?;
    let t2 = s.f64("theta2", 0.0)?;
    let rows = par_rows(&t1s, |t1| {
        Ok(vec![
            Some(t1),
            Some(t2),
            Some(mgf(&p, MgfPoint::new(t1, t2))?),
        ])
    })?;
    Ok(CurveTable {
        header: s.header("mgf"),
        columns: vec!["theta1".into(), "theta2".into(), "mgf".into()],
        rows,
    })
}

fn mc_cells(e: Option<McEstimate>) -> [Option<f64>; 2] {
    match e {
        Some(e) => [Some(e.value), Some(e.std_error)],
        None => [None, None],
    }
}

/// Power correlation table; `single_m` gives x, y, y_mc, y_mc_se columns.
fn rho_table(
    mut s: Settings,
    command: &str,
    sigma2: f64,
    k: f64,
    ms: &[f64],
    rhos: &[f64],
    default_mc: u64,
) -> CliResult<CurveTable> {
    let (n, seed) = mc_from(&mut s, default_mc)?;
    let params: Vec<BrsParams> = ms
        .iter()
        .map(|&m| BrsParams::new(sigma2, k, m, rhos[0]))
        .collect::<Result<_, _>>()?;
    let rows = par_rows(rhos, |rho| {
        let mut row = vec![Some(rho)];
        for p in &params {
            let p = BrsParams::new(p.sigma2, p.k_factor, p.m, rho)?;
            row.push(Some(rho_bs(&p)?));
            if n > 0 {
                row.extend(mc_cells(Some(mc::estimate_moments(&p, n, seed)?.rho_bs)));
            }
        }
        Ok(row)
    })?;
    let mut columns = vec!["rho".to_string()];
    for &m in ms {
        let y = if ms.len() == 1 {
            "rho_bs".to_string()
        } else {
            format!("rho_bs_m{}", format_number(m))
        };
        if n > 0 {
            columns.extend([y.clone(), format!("{y}_mc"), format!("{y}_mc_se")]);
        } else {
            columns.push(y);
        }
    }
    Ok(CurveTable {
        header: s.header(command),
        columns,
        rows,
    })
}

fn cmd_rho(mut s: Settings) -> CliResult<CurveTable> {
    let sigma2 = s.f64("sigma2", 1.0)?;
    let k = s.f64("k_factor", 1.0)?;
    let ms = s.grid("m_list", "1,2,5,20")?;
    let rhos = s.grid("rho_grid", "0:0.05:1")?;
    rho_table(s, "rho", sigma2, k, &ms, &rhos, 0)
}

fn outage_table(
    mut s: Settings,
    command: &str,
    k: f64,
    m: f64,
    rho: f64,
    default_mc: u64,
) -> CliResult<CurveTable> {
    let gbs = s.grid("gamma_bar_db", "0:2:30")?;
    let th_db = s.f64("gamma_th_db", 10.0)?;
    let (n, seed) = mc_from(&mut s, default_mc)?;
    let gamma_th = db_to_linear(th_db);
    // validates every field before any work
    let unit = BrsParams::from_mean_power(1.0, k, m, rho)?;
    s.record("sigma2", "gamma_bar / (1 + k_factor)".into());

    let analytic = par_rows(&gbs, |db| {
        let sc = ScScenario {
            gamma_bar: db_to_linear(db),
            k_factor: k,
            m,
            rho,
            gamma_th,
        };
        Ok(vec![Some(db), Some(outage_sc(&sc)?)])
    })?;
    let mcs: Vec<Option<McEstimate>> = if n > 0 {
        // one set of unit-power draws serves every gamma_bar
        let thresholds: Vec<f64> = gbs.iter().map(|&db| gamma_th / db_to_linear(db)).collect();
        let events: Vec<Box<dyn Fn(&EnvelopePair) -> bool + Sync>> = thresholds
            .iter()
            .map(|&t| {
                Box::new(move |e: &EnvelopePair| e.r1 * e.r1 < t && e.r2 * e.r2 < t)
                    as Box<dyn Fn(&EnvelopePair) -> bool + Sync>
            })
            .collect();
        let refs: Vec<&(dyn Fn(&EnvelopePair) -> bool + Sync)> =
            events.iter().map(|b| b.as_ref()).collect();
        mc::estimate_probabilities(&unit, &refs, n, seed)?
            .into_iter()
            .map(|e| (e.value > 0.0 && e.value < 1.0).then_some(e))
            .collect()
    } else {
        vec![None; gbs.len()]
    };
    let rows = analytic
        .into_iter()
        .zip(mcs)
        .map(|(mut row, e)| {
            if n > 0 {
                row.extend(mc_cells(e));
            }
            row
        })
        .collect();
    let mut columns = vec!["gamma_bar_db".to_string(), "outage".to_string()];
    if n > 0 {
        columns.extend(["outage_mc".to_string(), "outage_mc_se".to_string()]);
    }
    Ok(CurveTable {
        header: s.header(command),
        columns,
        rows,
    })
}

/// LCR or AFD versus `u_db`; `normalized` reports LCR*Ts and AFD/Ts.
#[allow(clippy::too_many_arguments)]
fn level_table(
    mut s: Settings,
    command: &str,
    afd: bool,
    k: f64,
    m: f64,
    rho: f64,
    ts: f64,
    normalized: bool,
    default_mc: u64,
) -> CliResult<CurveTable> {
    let gb_db = s.f64("gamma_bar_db", 0.0)?;
    let u_dbs = s.grid("u_db", "-30:2:10")?;
    let (n, seed) = mc_from(&mut s, default_mc)?;
    let gamma_bar = db_to_linear(gb_db);
    let p = BrsParams::from_mean_power(gamma_bar, k, m, rho)?;
    s.record("sigma2", format_number(p.sigma2));
    let us: Vec<f64> = u_dbs
        .iter()
        .map(|&db| gamma_bar.sqrt() * 10f64.powf(db / 20.0))
        .collect();
    let scale = if normalized {
        1.0
    } else if afd {
        ts
    } else {
        1.0 / ts
    };

    let analytic: Vec<Option<f64>> = us
        .par_iter()
        .map(|&u| {
            let lc = level_crossing(&SampledEnvelopeScenario::new(p, ts, u)?)?;
            Ok(if afd {
                lc.afd.map(|a| a / ts * scale)
            } else {
                Some(lc.crossing * scale)
            })
        })
        .collect::<CliResult<_>>()?;
    let mcs: Vec<Option<McEstimate>> = if n > 0 {
        mc::estimate_level_crossings(&p, &us, n, seed)?
            .into_iter()
            .map(|e| {
                let est = if afd { e.afd_over_ts } else { Some(e.crossing) };
                // all-or-none counts give a zero standard error; leave blank
                est.filter(|x| x.std_error > 0.0).map(|x| McEstimate {
                    value: x.value * scale,
                    std_error: x.std_error * scale,
                    n: x.n,
                })
            })
            .collect()
    } else {
        vec![None; us.len()]
    };
    let rows = u_dbs
        .iter()
        .zip(analytic)
        .zip(mcs)
        .map(|((&x, y), e)| {
            let mut row = vec![Some(x), y];
            if n > 0 {
                row.extend(mc_cells(e));
            }
            row
        })
        .collect();
    let y = match (afd, normalized) {
        (true, true) => "afd_over_ts",
        (true, false) => "afd_s",
        (false, true) => "lcr_ts",
        (false, false) => "lcr_per_s",
    };
    let mut columns = vec!["u_db".to_string(), y.to_string()];
    if n > 0 {
        columns.extend([format!("{y}_mc"), format!("{y}_mc_se")]);
    }
    Ok(CurveTable {
        header: s.header(command),
        columns,
        rows,
    })
}

fn cmd_simulate(mut s: Settings, dump: Option<&Path>) -> CliResult<CurveTable> {
    let p = params_from(&mut s, DEFAULT_PARAMS)?;
    let (n, seed) = mc_from(&mut s, 100_000)?;
    if let Some(path) = dump {
        let file = fs::File::create(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let mut w = io::BufWriter::new(file);
        mc::write_pairs_le(&p, n, seed, &mut w)?;
    }
    let est = mc::estimate_moments(&p, n, seed)?;
    let pm = crate::dist::power_moments(&p)?;
    let mut columns = vec!["n".to_string()];
    let mut row = vec![Some(n as f64)];
    for (name, e, exact) in [
        ("m10", est.m10, pm.m10),
        ("m01", est.m01, pm.m01),
        ("m20", est.m20, pm.m20),
        ("m02", est.m02, pm.m02),
        ("m11", est.m11, pm.m11),
        ("rho_bs", est.rho_bs, rho_bs(&p)?),
    ] {
        columns.extend([
            format!("{name}_mc"),
            format!("{name}_mc_se"),
            name.to_string(),
        ]);
        row.extend([Some(e.value), Some(e.std_error), Some(exact)]);
    }
    Ok(CurveTable {
        header: s.header("simulate"),
        columns,
        rows: vec![row],
    })
}

// ---------------------------------------------------------------------------
// figures
// ---------------------------------------------------------------------------

const FIGURE_MC: u64 = 100_000;

fn figure(
    config: Option<&Value>,
    which: FigureName,
    cmd: &Command,
) -> CliResult<Vec<(String, CurveTable)>> {
    let Command::Figure {
        k_factor,
        m,
        m_list,
        rho,
        rho_list,
        rho_grid,
        gamma_bar_db,
        gamma_th_db,
        u_db,
        mc,
        ..
    } = cmd
    else {
        unreachable!()
    };
    let name = which.as_str();
    let mut f = FlagMap::new();
    f.num("k_factor", *k_factor)
        .num("m", *m)
        .text("m_list", m_list)
        .num("rho", *rho)
        .text("rho_list", rho_list)
        .text("rho_grid", rho_grid)
        .text("gamma_bar_db", gamma_bar_db)
        .num("gamma_th_db", *gamma_th_db)
        .text("u_db", u_db)
        .mc(mc);
    let flags = f.0;
    let blocks = ["figure", name];
    let settings = || Settings::new(config, &blocks, flags.clone());

    // curve lists: a single --m / --rho wins over the lists
    let probe = settings()?;
    let (default_k, default_ms, default_rhos) = match which {
        FigureName::Rho => (1.0, "1,2,5,20", ""),
        FigureName::Outage => (10.0, "1,5", "0.3,0.8"),
        FigureName::Lcr | FigureName::Afd => (10.0, "1,5", "0.5,0.9"),
    };
    let list = |key: &str, single: &str, default: &str| -> CliResult<Vec<f64>> {
        let mut s = settings()?;
        if probe.has(single) {
            Ok(vec![s.f64(single, 0.0)?])
        } else {
            s.grid(key, default)
        }
    };
    let ms = list("m_list", "m", default_ms)?;
    let command = format!("figure {name}");
    let mut out = Vec::new();

    if which == FigureName::Rho {
        for &m in &ms {
            let mut s = settings()?;
            s.record("m", format_number(m));
            let k = s.f64("k_factor", default_k)?;
            s.record("sigma2", "1".into());
            let rhos = s.grid("rho_grid", "0:0.05:0.95,0.999,1")?;
            let t = rho_table(s, &command, 1.0, k, &[m], &rhos, FIGURE_MC)?;
            out.push((format!("rho_m{}.csv", format_number(m)), t));
        }
        return Ok(out);
    }

    let rhos = list("rho_list", "rho", default_rhos)?;
    for &m in &ms {
        for &rho in &rhos {
            let mut s = settings()?;
            s.record("m", format_number(m));
            s.record("rho", format_number(rho));
            let k = s.f64("k_factor", default_k)?;
            let t = match which {
                FigureName::Outage => outage_table(s, &command, k, m, rho, FIGURE_MC)?,
                _ => {
                    let afd = which == FigureName::Afd;
                    s.record("ts", "1".into());
                    level_table(s, &command, afd, k, m, rho, 1.0, true, FIGURE_MC)?
                }
            };
            let file = format!("{name}_m{}_rho{}.csv", format_number(m), format_number(rho));
            out.push((file, t));
        }
    }
    Ok(out)
}
