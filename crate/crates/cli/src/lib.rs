//! `treecut` command-line interface. Each subcommand renders to CSV or JSON;
//! [`run`] returns the process exit code.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use treecut_core::counts::{compute_counts, split_distribution, SplitProbs, DEFAULT_EXACT_CUTOFF};
use treecut_core::family::{solve_constants, FamilyKind, FamilySpec};
use treecut_core::limit_laws::{
    limit_moments_one_sided, limit_moments_two_sided, limit_moments_two_sided_half, DEFAULT_S_MAX,
};
use treecut_core::moments::{compute_moments, Mode, MomentOptions, MomentValues, SizeOneCost, TollSpec, Variant};
use treecut_core::rational;
use treecut_core::simulator::{run_experiment, Engine, ExperimentConfig};
use treecut_core::verify::{run_battery, BatteryOptions, CRITERIA};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_ACCEPTANCE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "treecut", version, about = "Cost of cutting down very simple random trees")]
struct Cli {
    /// Output format (each subcommand has its own default).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Singularity constants tau, rho, b, c, sigma^2 (JSON).
    Constants(FamilyArgs),
    /// Weighted counts T_n and ln T_n (CSV).
    Counts {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 30)]
        nmax: usize,
        /// Largest n computed in exact rationals.
        #[arg(long, default_value_t = DEFAULT_EXACT_CUTOFF)]
        exact_cutoff: usize,
    },
    /// Splitting probabilities p_{n,k} (CSV).
    Probs {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        n: usize,
        /// Average p_{n,k} with p_{n,n-k}.
        #[arg(long)]
        symmetrized: bool,
    },
    /// Moments of the destruction cost (CSV columns n, s, mu).
    Moments {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        toll: TollArgs,
        #[arg(long, default_value_t = 50)]
        nmax: usize,
        #[arg(long, default_value_t = 2)]
        smax: usize,
        /// exact (rational, needs integer alpha) or float.
        #[arg(long, default_value = "float")]
        mode: String,
    },
    /// Moments m_0..m_smax of the limit law (JSON array).
    Limits {
        #[arg(long, value_enum)]
        regime: LimitArg,
        /// Toll exponent; ignored for two-half.
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_S_MAX)]
        smax: usize,
    },
    /// Monte Carlo estimates of the raw cost moments (JSON).
    Simulate {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        toll: TollArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 2)]
        smax: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// size-process or explicit (n <= 64).
        #[arg(long, default_value = "size-process")]
        engine: String,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Runs the acceptance battery (JSON report; exit code 2 if any criterion fails).
    Verify {
        /// Comma-separated criterion ids; all when omitted.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
        #[arg(long, default_value_t = 4)]
        workers: usize,
        #[arg(long, default_value_t = BatteryOptions::default().seed)]
        seed: u64,
        /// Also write the convergence rows as CSV to this file.
        #[arg(long)]
        rows: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LimitArg {
    Two,
    TwoHalf,
    One,
}

/// Family selection. Defaults to ordered trees (`--kind C --alpha0 1 --alpha1 1`).
#[derive(Debug, Args)]
struct FamilyArgs {
    /// Family kind A, B or C.
    #[arg(long)]
    kind: Option<String>,
    /// Rational such as 1, 3/2 or 0.5.
    #[arg(long)]
    alpha0: Option<String>,
    /// Arity for family B.
    #[arg(long)]
    d: Option<u32>,
    /// Second parameter for family C.
    #[arg(long)]
    alpha1: Option<String>,
    /// Plain-text key=value file (kind, alpha0, d, alpha1).
    #[arg(long, conflicts_with_all = ["kind", "alpha0", "d", "alpha1"])]
    family_config: Option<PathBuf>,
}

impl FamilyArgs {
    fn resolve(&self) -> Result<FamilySpec, String> {
        if let Some(path) = &self.family_config {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            return FamilySpec::from_config(&text).map_err(|e| e.to_string());
        }
        let Some(kind) = &self.kind else {
            if self.alpha0.is_some() || self.d.is_some() || self.alpha1.is_some() {
                return Err("--kind is required when family parameters are given".into());
            }
            return Ok(FamilySpec::ordered());
        };
        let kind: FamilyKind = kind.parse().map_err(|e: treecut_core::Error| e.to_string())?;
        let alpha0 = self.alpha0.as_deref().ok_or("--alpha0 is required")?;
        let alpha0 = rational::parse(alpha0).map_err(|e| e.to_string())?;
        let alpha1 = self
            .alpha1
            .as_deref()
            .map(rational::parse)
            .transpose()
            .map_err(|e| e.to_string())?;
        FamilySpec::new(kind, alpha0, self.d, alpha1).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Args)]
struct TollArgs {
    /// one or two.
    #[arg(long, default_value = "two")]
    variant: String,
    /// Toll exponent in t_n = n^alpha.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Cost of a single node: toll (t_1 = 1) or free (t_1 = 0).
    #[arg(long, default_value = "toll")]
    size_one: String,
}

impl TollArgs {
    fn resolve(&self) -> Result<(Variant, TollSpec), String> {
        let variant: Variant = self.variant.parse().map_err(err)?;
        let toll = TollSpec::power(self.alpha)
            .map_err(err)?
            .with_size_one(parse_size_one(&self.size_one)?);
        Ok((variant, toll))
    }
}

fn parse_size_one(s: &str) -> Result<SizeOneCost, String> {
    match s {
        "toll" => Ok(SizeOneCost::Toll),
        "free" => Ok(SizeOneCost::Free),
        other => Err(format!("--size-one must be toll or free, got {other:?}")),
    }
}

fn err(e: treecut_core::Error) -> String {
    e.to_string()
}

/// Output of the `simulate` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutput {
    pub config: ExperimentConfig,
    pub moment_estimates: Vec<f64>,
    pub standard_errors: Vec<f64>,
}

/// Rows with a header, rendered as CSV or as a JSON array of objects.
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    fn csv(&self) -> Result<String, String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(|e| e.to_string())?;
        for row in &self.rows {
            w.write_record(row.iter().map(cell)).map_err(|e| e.to_string())?;
        }
        let bytes = w.into_inner().map_err(|e| e.to_string())?;
        String::from_utf8(bytes).map_err(|e| e.to_string())
    }

    fn json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    Value::Object(
                        self.header
                            .iter()
                            .zip(row)
                            .map(|(h, v)| (h.to_string(), v.clone()))
                            .collect(),
                    )
                })
                .collect(),
        )
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

enum Rendered {
    Table(Table),
    Json(Value),
}

impl Rendered {
    fn render(&self, format: Option<Format>) -> Result<String, String> {
        match (self, format) {
            (Rendered::Table(t), None | Some(Format::Csv)) => t.csv(),
            (Rendered::Table(t), Some(Format::Json)) => pretty(&t.json()),
            (Rendered::Json(v), None | Some(Format::Json)) => pretty(v),
            (Rendered::Json(v), Some(Format::Csv)) => json_to_csv(v),
        }
    }
}

fn pretty(v: &Value) -> Result<String, String> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| e.to_string())
}

/// Flattens a JSON object (one row) or an array of numbers (`index, value`).
fn json_to_csv(v: &Value) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    match v {
        Value::Array(items) => {
            w.write_record(["index", "value"]).map_err(|e| e.to_string())?;
            for (i, item) in items.iter().enumerate() {
                w.write_record([i.to_string(), cell(item)]).map_err(|e| e.to_string())?;
            }
        }
        Value::Object(map) => {
            let mut keys = Vec::new();
            let mut values = Vec::new();
            for (k, v) in map {
                match v {
                    Value::Array(items) => {
                        for (i, item) in items.iter().enumerate() {
                            keys.push(format!("{k}_{}", i + 1));
                            values.push(cell(item));
                        }
                    }
                    Value::Object(_) => {}
                    other => {
                        keys.push(k.clone());
                        values.push(cell(other));
                    }
                }
            }
            w.write_record(&keys).map_err(|e| e.to_string())?;
            w.write_record(&values).map_err(|e| e.to_string())?;
        }
        _ => return Err("value has no CSV form".into()),
    }
    let bytes = w.into_inner().map_err(|e| e.to_string())?;
    String::from_utf8(bytes).map_err(|e| e.to_string())
}

/// Parses `args` (including the program name), runs one subcommand and
/// writes its output to `stdout` or `--out`.
pub fn run<W: Write>(args: &[String], stdout: &mut W) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok((text, code)) => {
            let written = match &cli.out {
                Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
                None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => code,
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_INVALID
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(String, i32), String> {
    let rendered = match &cli.command {
        Command::Constants(family) => constants(family)?,
        Command::Counts { family, nmax, exact_cutoff } => counts(family, *nmax, *exact_cutoff)?,
        Command::Probs { family, n, symmetrized } => probs(family, *n, *symmetrized)?,
        Command::Moments { family, toll, nmax, smax, mode } => moments(family, toll, *nmax, *smax, mode)?,
        Command::Limits { regime, alpha, smax } => limits(*regime, *alpha, *smax)?,
        Command::Simulate { family, toll, n, samples, smax, seed, engine, workers } => {
            let (variant, toll_spec) = toll.resolve()?;
            let mut config = ExperimentConfig::new(family.resolve()?, toll.alpha, *n, variant, *samples, *seed);
            config.size_one = toll_spec.size_one();
            config.s_max = *smax;
            config.engine = engine.parse::<Engine>().map_err(err)?;
            config.workers = *workers;
            simulate(config)?
        }
        Command::Verify { criteria, workers, seed, rows } => {
            return verify(criteria, *workers, *seed, rows.as_ref(), cli.format);
        }
    };
    Ok((rendered.render(cli.format)?, EXIT_OK))
}

fn constants(family: &FamilyArgs) -> Result<Rendered, String> {
    let k = solve_constants(&family.resolve()?).map_err(err)?;
    Ok(Rendered::Json(serde_json::to_value(k).map_err(|e| e.to_string())?))
}

fn counts(family: &FamilyArgs, nmax: usize, exact_cutoff: usize) -> Result<Rendered, String> {
    let spec = family.resolve()?;
    let c = compute_counts(&spec, nmax, exact_cutoff.min(nmax)).map_err(err)?;
    let rows = (1..=nmax)
        .map(|n| {
            let t = match c.exact(n) {
                Some(r) => json!(rational::format(r)),
                None => json!(c.log_value(n).exp()),
            };
            vec![json!(n), t, json!(c.log_value(n))]
        })
        .collect();
    Ok(Rendered::Table(Table { header: vec!["n", "t_n", "ln_t_n"], rows }))
}

fn probs(family: &FamilyArgs, n: usize, symmetrized: bool) -> Result<Rendered, String> {
    let spec = family.resolve()?;
    let c = compute_counts(&spec, n, n.min(DEFAULT_EXACT_CUTOFF)).map_err(err)?;
    let split = split_distribution(&c, n, symmetrized).map_err(err)?;
    let rows = match &split.probs {
        SplitProbs::Exact(v) => v
            .iter()
            .enumerate()
            .map(|(i, p)| vec![json!(i + 1), json!(rational::format(p))])
            .collect(),
        SplitProbs::Float(v) => v.iter().enumerate().map(|(i, p)| vec![json!(i + 1), json!(p)]).collect(),
    };
    Ok(Rendered::Table(Table { header: vec!["k", "p"], rows }))
}

fn moments(family: &FamilyArgs, toll: &TollArgs, nmax: usize, smax: usize, mode: &str) -> Result<Rendered, String> {
    let spec = family.resolve()?;
    let (variant, toll) = toll.resolve()?;
    let mode: Mode = mode.parse().map_err(err)?;
    let options = match mode {
        Mode::Exact => MomentOptions::exact(),
        Mode::Float => MomentOptions::default(),
    };
    let cutoff = if mode == Mode::Exact { nmax } else { 0 };
    let c = compute_counts(&spec, nmax, cutoff).map_err(err)?;
    let table = compute_moments(variant, &c, &toll, nmax, smax, options).map_err(err)?;
    let mut rows = Vec::new();
    for n in 1..=nmax {
        for s in 0..=smax {
            let mu = match &table.values {
                MomentValues::Exact(v) => json!(rational::format(&v[s][n - 1])),
                MomentValues::Float(v) => json!(v[s][n - 1]),
            };
            rows.push(vec![json!(n), json!(s), mu]);
        }
    }
    Ok(Rendered::Table(Table { header: vec!["n", "s", "mu"], rows }))
}

fn limits(regime: LimitArg, alpha: f64, smax: usize) -> Result<Rendered, String> {
    let m = match regime {
        LimitArg::Two => limit_moments_two_sided(alpha, smax),
        LimitArg::TwoHalf => limit_moments_two_sided_half(smax),
        LimitArg::One => limit_moments_one_sided(alpha, smax),
    }
    .map_err(err)?;
    Ok(Rendered::Json(json!(m.m)))
}

fn simulate(config: ExperimentConfig) -> Result<Rendered, String> {
    let stats = run_experiment(&config).map_err(err)?;
    let output = SimulationOutput {
        config,
        moment_estimates: stats.moment_estimates,
        standard_errors: stats.standard_errors,
    };
    Ok(Rendered::Json(serde_json::to_value(output).map_err(|e| e.to_string())?))
}

fn verify(
    criteria: &[u8],
    workers: usize,
    seed: u64,
    rows_path: Option<&PathBuf>,
    format: Option<Format>,
) -> Result<(String, i32), String> {
    if workers == 0 {
        return Err("--workers must be at least 1".into());
    }
    let ids: Vec<u8> = if criteria.is_empty() { CRITERIA.to_vec() } else { criteria.to_vec() };
    if let Some(bad) = ids.iter().find(|id| !CRITERIA.contains(id)) {
        return Err(format!("no criterion {bad}; valid ids are 1..=11"));
    }
    let report = run_battery(&ids, &BatteryOptions { workers, seed });
    for c in &report.criteria {
        eprintln!("{}", c.line());
    }
    let rows = Table {
        header: vec!["criterion", "n", "s", "normalized_moment", "limit_m_s", "relative_error"],
        rows: report
            .criteria
            .iter()
            .flat_map(|c| {
                c.convergence.iter().map(move |r| {
                    vec![
                        json!(c.id),
                        json!(r.n),
                        json!(r.s),
                        json!(r.normalized_moment),
                        json!(r.limit_m_s),
                        json!(r.relative_error),
                    ]
                })
            })
            .collect(),
    };
    if let Some(path) = rows_path {
        fs::write(path, rows.csv()?).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    let text = match format {
        Some(Format::Csv) => rows.csv()?,
        _ => serde_json::to_string_pretty(&report).map_err(|e| e.to_string())? + "\n",
    };
    let code = if report.all_passed { EXIT_OK } else { EXIT_ACCEPTANCE };
    Ok((text, code))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn object_flattens_to_one_csv_row() {
        let v = json!({"a": 1, "b": [2.5, 3], "c": {"skip": true}});
        assert_eq!(json_to_csv(&v).unwrap(), "a,b_1,b_2\n1,2.5,3\n");
    }

    #[test]
    fn number_array_becomes_index_value_rows() {
        assert_eq!(json_to_csv(&json!([1.0, 2.0])).unwrap(), "index,value\n0,1.0\n1,2.0\n");
    }

    #[test]
    fn missing_family_defaults_to_ordered_trees() {
        let args = FamilyArgs { kind: None, alpha0: None, d: None, alpha1: None, family_config: None };
        assert_eq!(args.resolve().unwrap(), FamilySpec::ordered());
        let partial = FamilyArgs { alpha0: Some("2".into()), ..args };
        assert!(partial.resolve().is_err());
    }

    #[test]
    fn size_one_values() {
        assert_eq!(parse_size_one("free").unwrap(), SizeOneCost::Free);
        assert!(parse_size_one("zero").is_err());
    }
}
