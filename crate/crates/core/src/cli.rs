//! Command-line front end.
//!
//! Exit codes: 0 success, 1 internal error, 2 invalid input (bad scenario,
//! empty sweep or grid, zero repetitions), 3 I/O failure, 4 oracle mismatch.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::attack::{
    analyze, bcp_comparator, AnalysisOptions, AttackSummary, Method, DEFAULT_SECURE_YEARS,
};
use crate::exactmath::{to_scientific, ExactProb};
use crate::genpoly::{pgfa_failure_prob_with, takeover_prob, takeover_prob_faulty_denominator, SlotModel};
use crate::hypergeom::{pool_breach_prob, ThresholdMode};
use crate::jhda::{
    jhda_exact, jhda_exact_layout, jhda_trials_layout, state_count, JhdaError, TrialConfig,
    DEFAULT_BUDGET,
};
use crate::params::{CommitteeLayout, Fraction, NetworkParams, ParamError, RawScenario};
use crate::simulate::{simulate_epochs, SimMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Mismatch(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Io { .. } => EXIT_IO,
            CliError::Mismatch(_) => EXIT_MISMATCH,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl From<ParamError> for CliError {
    fn from(e: ParamError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

fn stdout_err(e: io::Error) -> CliError {
    CliError::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

#[derive(Debug, Parser)]
#[command(name = "shardsec", version, about = "Sybil-attack security of sharded blockchains")]
pub struct Cli {
    /// Seed for every sampled estimate.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Pool-breach threshold convention.
    #[arg(long, global = true, default_value = "strict")]
    threshold_mode: ThresholdMode,
    /// Sybil count seated in committees during simulation.
    #[arg(long, global = true, default_value = "fixed")]
    sim_mode: SimMode,
    /// Largest state count exact enumeration may visit.
    #[arg(long, global = true, env = "SHARDSEC_BUDGET", default_value_t = DEFAULT_BUDGET)]
    budget: u128,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analyze one or more scenarios (JSON object, JSON array or CSV).
    Analyze(AnalyzeArgs),
    /// Evaluate a parameter sweep and print CSV.
    Sweep(SweepArgs),
    /// Check the generating-function result against exact enumeration.
    Verify(VerifyArgs),
    /// Time the generating-function and enumeration routes.
    Bench(BenchArgs),
    /// Monte-Carlo simulation of whole epochs.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    file: PathBuf,
    /// Also write one CSV row per scenario to this path.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// pgfa, jhda-exact or jhda-trials.
    #[arg(long, default_value = "pgfa")]
    method: Method,
    /// Trials for jhda-trials.
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,
    /// Let Sybil IDs fall into leftover selection-pool slots as well.
    #[arg(long)]
    leftover_slots: bool,
    /// Years-to-fail at or above which the scenario is reported secure.
    #[arg(long, default_value_t = Fraction::new(DEFAULT_SECURE_YEARS, 1))]
    secure_years: Fraction,
}

#[derive(Debug, Args)]
struct SweepArgs {
    file: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Grid bounds, e.g. "lambda=1..4,n=2..8,m_sel=0..12"; caps span 0..n.
    #[arg(long, default_value = "lambda=1..4,n=2..8,m_sel=0..12")]
    grid: String,
    /// Also check sampled estimates against each exact value.
    #[arg(long)]
    trials: Option<u64>,
    /// Print only the summary line.
    #[arg(long)]
    quiet: bool,
    #[arg(long, hide = true)]
    inject_denominator_fault: bool,
}

#[derive(Debug, Args)]
struct BenchArgs {
    file: PathBuf,
    #[arg(long, default_value_t = 3)]
    reps: u32,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    file: PathBuf,
    #[arg(long, default_value_t = 1_000_000)]
    epochs: u64,
    /// Write the per-committee Sybil-count histogram here as CSV.
    #[arg(long)]
    histogram: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    match &cli.command {
        Command::Analyze(a) => cmd_analyze(cli, a, out),
        Command::Sweep(a) => cmd_sweep(cli, &a.file, out),
        Command::Verify(a) => cmd_verify(cli, a, out, err),
        Command::Bench(a) => cmd_bench(cli, a, out),
        Command::Simulate(a) => cmd_simulate(cli, a, out),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads scenarios from a JSON object, a JSON array of objects, or CSV
/// (chosen by a `.csv` extension).
pub fn load_scenarios(path: &Path) -> Result<Vec<RawScenario>, CliError> {
    let text = read_file(path)?;
    let invalid = |e: String| CliError::Invalid(format!("{}: {e}", path.display()));
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let rows: Result<Vec<RawScenario>, _> = rdr.deserialize().collect();
        let rows = rows.map_err(|e| invalid(e.to_string()))?;
        if rows.is_empty() {
            return Err(invalid("no scenarios".into()));
        }
        return Ok(rows);
    }
    let value: Value = serde_json::from_str(&text).map_err(|e| invalid(e.to_string()))?;
    let rows = match value {
        Value::Array(items) => items
            .into_iter()
            .map(serde_json::from_value)
            .collect::<Result<Vec<RawScenario>, _>>(),
        other => serde_json::from_value(other).map(|r| vec![r]),
    }
    .map_err(|e| invalid(e.to_string()))?;
    if rows.is_empty() {
        return Err(invalid("no scenarios".into()));
    }
    Ok(rows)
}

fn load_params(path: &Path) -> Result<Vec<NetworkParams>, CliError> {
    load_scenarios(path)?
        .iter()
        .map(|raw| {
            NetworkParams::validate(raw).map_err(|e| match &raw.label {
                Some(label) => CliError::Invalid(format!("scenario {label:?}: {e}")),
                None => CliError::from(e),
            })
        })
        .collect()
}

fn analysis_options(cli: &Cli, a: &AnalyzeArgs) -> Result<AnalysisOptions, CliError> {
    Ok(AnalysisOptions {
        threshold_mode: cli.threshold_mode,
        slot_model: if a.leftover_slots {
            SlotModel::SelectionPool
        } else {
            SlotModel::CommitteeSlots
        },
        method: a.method,
        jhda_budget: cli.budget,
        trials: TrialConfig::new(a.trials, cli.seed).map_err(|e| CliError::Invalid(e.to_string()))?,
        secure_years: a.secure_years.as_ratio().clone(),
    })
}

fn analyze_all(params: &[NetworkParams], opts: &AnalysisOptions) -> Result<Vec<AttackSummary>, CliError> {
    params
        .par_iter()
        .map(|p| {
            analyze(p, opts).map_err(|e| match e {
                crate::attack::AnalysisError::Jhda(j) => CliError::Invalid(j.to_string()),
                other => CliError::Invalid(other.to_string()),
            })
        })
        .collect()
}

fn cmd_analyze(cli: &Cli, a: &AnalyzeArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let params = load_params(&a.file)?;
    let opts = analysis_options(cli, a)?;
    let summaries = analyze_all(&params, &opts)?;
    let rendered: Vec<_> = summaries.iter().map(AttackSummary::render).collect();
    let json = if rendered.len() == 1 {
        serde_json::to_string_pretty(&rendered[0])
    } else {
        serde_json::to_string_pretty(&rendered)
    }
    .map_err(|e| CliError::Internal(e.to_string()))?;
    writeln!(out, "{json}").map_err(stdout_err)?;
    if let Some(path) = &a.csv {
        let mut buf = Vec::new();
        write_report_csv(&summaries, &mut buf).map_err(|e| CliError::Internal(e.to_string()))?;
        fs::write(path, buf).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
    }
    Ok(EXIT_OK)
}

/// One row per scenario: parameters, then every displayed quantity.
pub fn write_report_csv<W: Write>(summaries: &[AttackSummary], out: W) -> csv::Result<()> {
    let mut w = csv_writer(out);
    w.write_record([
        "label", "N", "K", "M", "M_sel", "n", "lambda", "r", "R", "N_s", "threshold", "method",
        "P", "P_prime", "P_double_prime", "p_e", "E_s", "A", "secure",
    ])?;
    for s in summaries {
        let r = s.render();
        let sc = &r.scenario;
        w.write_record([
            sc.label.clone().unwrap_or_default(),
            sc.nodes.to_string(),
            sc.selection_pool.to_string(),
            sc.sybil_ids.to_string(),
            sc.selected_sybils.to_string(),
            sc.n.to_string(),
            r.lambda.to_string(),
            sc.r.to_string(),
            sc.pool_resiliency.to_string(),
            sc.rounds_per_year.to_string(),
            r.threshold.to_string(),
            r.method.to_string(),
            r.pool_breach,
            r.takeover,
            r.attack,
            r.p_e,
            r.expected_rounds,
            r.years,
            r.secure.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

/// Sweep description.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: RawScenario,
    /// Field name, or several names all set to the same value (e.g.
    /// `["M", "M_sel"]` for the worst case `M = M'`).
    pub axis: Axis,
    pub values: Vec<Value>,
    pub outputs: Vec<SweepOutput>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Axis {
    One(String),
    Many(Vec<String>),
}

impl Axis {
    fn fields(&self) -> Vec<&str> {
        match self {
            Axis::One(f) => vec![f.as_str()],
            Axis::Many(fs) => fs.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
pub enum SweepOutput {
    P,
    #[serde(rename = "P_prime")]
    PPrime,
    #[serde(rename = "P_double_prime")]
    PDoublePrime,
    A,
    #[serde(rename = "bcp")]
    Bcp,
}

impl SweepOutput {
    fn header(self) -> &'static str {
        match self {
            SweepOutput::P => "P",
            SweepOutput::PPrime => "P_prime",
            SweepOutput::PDoublePrime => "P_double_prime",
            SweepOutput::A => "A",
            SweepOutput::Bcp => "bcp",
        }
    }
}

const SWEEP_FIELDS: [&str; 8] = ["N", "K", "M", "M_sel", "n", "r", "R", "N_s"];

fn set_field(raw: &mut RawScenario, field: &str, value: &Value) -> Result<(), String> {
    let int = || {
        value
            .as_u64()
            .ok_or_else(|| format!("{field} needs a non-negative integer, got {value}"))
    };
    let frac = || -> Result<Fraction, String> {
        serde_json::from_value(value.clone()).map_err(|e| format!("{field}: {e}"))
    };
    match field {
        "N" => raw.nodes = int()?,
        "K" => raw.selection_pool = int()?,
        "M" => raw.sybil_ids = int()?,
        "M_sel" => raw.selected_sybils = int()?,
        "n" => raw.n = int()?,
        "N_s" => raw.rounds_per_year = int()?,
        "r" => raw.r = frac()?,
        "R" => raw.pool_resiliency = frac()?,
        other => {
            return Err(format!(
                "unknown sweep axis {other:?} (expected one of {})",
                SWEEP_FIELDS.join(", ")
            ))
        }
    }
    Ok(())
}

fn value_label(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Evaluates a sweep and writes CSV with one row per value.
pub fn run_sweep<W: Write>(spec: &SweepSpec, mode: ThresholdMode, out: W) -> Result<(), CliError> {
    if spec.values.is_empty() {
        return Err(CliError::Invalid("empty sweep".into()));
    }
    if spec.outputs.is_empty() {
        return Err(CliError::Invalid("sweep requests no outputs".into()));
    }
    let fields = spec.axis.fields();
    if fields.is_empty() {
        return Err(CliError::Invalid("sweep axis names no field".into()));
    }
    let points: Vec<NetworkParams> = spec
        .values
        .iter()
        .map(|v| {
            let mut raw = spec.base.clone();
            raw.lambda = None;
            for f in &fields {
                set_field(&mut raw, f, v).map_err(CliError::Invalid)?;
            }
            NetworkParams::validate(&raw).map_err(|e| {
                CliError::Invalid(format!("sweep point {}={}: {e}", fields.join("="), value_label(v)))
            })
        })
        .collect::<Result<_, _>>()?;

    let rows: Vec<Vec<String>> = points
        .par_iter()
        .zip(spec.values.par_iter())
        .map(|(p, v)| {
            let threshold = mode.threshold(p);
            let pool = crate::hypergeom::tail_at_least(
                &crate::hypergeom::HypergeomSpec::from_params(p),
                threshold,
            );
            let needs_takeover = spec
                .outputs
                .iter()
                .any(|o| matches!(o, SweepOutput::PPrime | SweepOutput::PDoublePrime | SweepOutput::A));
            let takeover = needs_takeover.then(|| pgfa_failure_prob_with(p, SlotModel::default()));
            let attack = takeover.as_ref().map(|t| pool.mul(t));
            let mut row = vec![value_label(v)];
            for o in &spec.outputs {
                row.push(match o {
                    SweepOutput::P => pool.to_scientific(3),
                    SweepOutput::PPrime => takeover.as_ref().expect("computed").to_scientific(3),
                    SweepOutput::PDoublePrime => attack.as_ref().expect("computed").to_scientific(3),
                    SweepOutput::A => {
                        crate::attack::years_to_fail(attack.as_ref().expect("computed"), p.rounds_per_year())
                            .display()
                    }
                    SweepOutput::Bcp => to_scientific(&bcp_comparator(p), 3),
                });
            }
            row
        })
        .collect();

    let mut w = csv_writer(out);
    let mut header = vec![fields.join("=")];
    header.extend(spec.outputs.iter().map(|o| o.header().to_string()));
    w.write_record(&header).map_err(|e| CliError::Internal(e.to_string()))?;
    for row in rows {
        w.write_record(&row).map_err(|e| CliError::Internal(e.to_string()))?;
    }
    w.flush().map_err(stdout_err)?;
    Ok(())
}

fn cmd_sweep(cli: &Cli, file: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let text = read_file(file)?;
    let spec: SweepSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", file.display())))?;
    run_sweep(&spec, cli.threshold_mode, out)?;
    Ok(EXIT_OK)
}

/// Bounds of the oracle grid. Capacities always range over `0..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    pub committees: RangeInclusive<u64>,
    pub sizes: RangeInclusive<u64>,
    pub sybils: RangeInclusive<u64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            committees: 1..=4,
            sizes: 2..=8,
            sybils: 0..=12,
        }
    }
}

impl GridSpec {
    /// Parses `"lambda=1..4,n=2..8,m_sel=0..12"`; omitted keys keep defaults.
    pub fn parse(text: &str) -> Result<GridSpec, CliError> {
        let mut grid = GridSpec::default();
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let bad = || CliError::Invalid(format!("bad grid component {part:?}"));
            let (key, range) = part.split_once('=').ok_or_else(bad)?;
            let (lo, hi) = match range.split_once("..") {
                Some((lo, hi)) => (lo, hi.trim_start_matches('=')),
                None => (range, range),
            };
            let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
            let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
            match key.trim() {
                "lambda" => grid.committees = lo..=hi,
                "n" => grid.sizes = lo..=hi,
                "m_sel" | "M_sel" => grid.sybils = lo..=hi,
                _ => return Err(bad()),
            }
        }
        if grid.committees.is_empty() || grid.sizes.is_empty() || grid.sybils.is_empty() {
            return Err(CliError::Invalid("empty grid".into()));
        }
        if *grid.committees.start() == 0 || *grid.sizes.start() == 0 {
            return Err(CliError::Invalid("grid needs lambda >= 1 and n >= 1".into()));
        }
        Ok(grid)
    }

    pub fn points(&self) -> Vec<CommitteeLayout> {
        let mut pts = Vec::new();
        for lambda in self.committees.clone() {
            for n in self.sizes.clone() {
                for cap in 0..=n {
                    for m in self.sybils.clone() {
                        pts.push(CommitteeLayout::new(lambda, n, cap, m));
                    }
                }
            }
        }
        pts
    }
}

/// Result of comparing both exact routes at one grid point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridCheck {
    pub layout: CommitteeLayout,
    pub pgfa: ExactProb,
    pub jhda: ExactProb,
    /// `Some(true)` when the sampled estimate fell inside the 4σ band.
    pub in_band: Option<bool>,
}

impl GridCheck {
    pub fn matches(&self) -> bool {
        self.pgfa == self.jhda
    }
}

/// Sampled estimate within four standard deviations of the exact value;
/// degenerate probabilities must match exactly.
pub fn within_four_sigma(exact: &ExactProb, failures: u64, trials: u64) -> bool {
    let p = exact.to_f64();
    let p_hat = failures as f64 / trials as f64;
    if exact.is_zero() || exact.is_one() {
        return p_hat == p;
    }
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    (p_hat - p).abs() <= 4.0 * sigma
}

pub fn run_grid(
    grid: &GridSpec,
    budget: u128,
    trials: Option<TrialConfig>,
    inject_fault: bool,
) -> Result<Vec<GridCheck>, JhdaError> {
    grid.points()
        .into_par_iter()
        .map(|layout| {
            let pgfa = if inject_fault {
                takeover_prob_faulty_denominator(&layout)
            } else {
                takeover_prob(&layout)
            };
            let jhda = jhda_exact_layout(&layout, budget)?;
            let in_band = trials.map(|cfg| {
                let est = jhda_trials_layout(&layout, cfg);
                within_four_sigma(&jhda, est.failures, est.trials)
            });
            Ok(GridCheck {
                layout,
                pgfa,
                jhda,
                in_band,
            })
        })
        .collect()
}

fn cmd_verify(cli: &Cli, a: &VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let grid = GridSpec::parse(&a.grid)?;
    let trials = a
        .trials
        .map(|t| TrialConfig::new(t, cli.seed))
        .transpose()
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    let start = Instant::now();
    let checks = run_grid(&grid, cli.budget, trials, a.inject_denominator_fault)
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    let elapsed = start.elapsed();

    if !a.quiet {
        let mut w = csv_writer(&mut *out);
        let mut header = vec!["lambda", "n", "cap", "m_sel", "pgfa", "jhda", "match"];
        if trials.is_some() {
            header.push("in_band");
        }
        w.write_record(&header).map_err(|e| CliError::Internal(e.to_string()))?;
        for c in &checks {
            let mut row = vec![
                c.layout.committees.to_string(),
                c.layout.size.to_string(),
                c.layout.capacity.to_string(),
                c.layout.sybils.to_string(),
                c.pgfa.to_string(),
                c.jhda.to_string(),
                c.matches().to_string(),
            ];
            if let Some(b) = c.in_band {
                row.push(b.to_string());
            }
            w.write_record(&row).map_err(|e| CliError::Internal(e.to_string()))?;
        }
        w.flush().map_err(stdout_err)?;
    }

    let mismatches = checks.iter().filter(|c| !c.matches()).count();
    let banded: Vec<bool> = checks.iter().filter_map(|c| c.in_band).collect();
    let in_band = banded.iter().filter(|&&b| b).count();
    let _ = write!(
        err,
        "verify: {} points, {} mismatches, {:.2}s",
        checks.len(),
        mismatches,
        elapsed.as_secs_f64()
    );
    if !banded.is_empty() {
        let _ = write!(err, ", {in_band}/{} sampled estimates within 4 sigma", banded.len());
    }
    let _ = writeln!(err);

    if mismatches > 0 {
        return Err(CliError::Mismatch(format!(
            "{mismatches} grid points disagree between the generating function and enumeration"
        )));
    }
    if !banded.is_empty() && (in_band as f64) < 0.95 * banded.len() as f64 {
        return Err(CliError::Mismatch(format!(
            "only {in_band}/{} sampled estimates within 4 sigma",
            banded.len()
        )));
    }
    Ok(EXIT_OK)
}

/// Timing of both exact routes for one scenario.
#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub label: Option<String>,
    pub lambda: u64,
    pub n: u64,
    pub capacity: u64,
    pub m_sel: u64,
    pub reps: u32,
    pub pgfa: RouteTiming,
    pub jhda_exact: RouteTiming,
    pub jhda_states: String,
    pub budget: String,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RouteTiming {
    Completed {
        mean_seconds: f64,
        #[serde(rename = "P_prime")]
        takeover: String,
    },
    Refused {
        reason: String,
    },
}

impl RouteTiming {
    pub fn completed(&self) -> bool {
        matches!(self, RouteTiming::Completed { .. })
    }
}

pub fn run_bench(params: &NetworkParams, reps: u32, budget: u128) -> Result<BenchReport, CliError> {
    if reps == 0 {
        return Err(CliError::Invalid("repetitions must be at least 1".into()));
    }
    let time = |f: &dyn Fn() -> ExactProb| {
        let start = Instant::now();
        let mut last = ExactProb::zero();
        for _ in 0..reps {
            last = f();
        }
        (start.elapsed().as_secs_f64() / reps as f64, last)
    };
    let (secs, pgfa) = time(&|| crate::genpoly::pgfa_failure_prob(params));
    let pgfa_timing = RouteTiming::Completed {
        mean_seconds: secs,
        takeover: pgfa.to_scientific(3),
    };
    let jhda_timing = match jhda_exact(params, budget) {
        Err(e) => RouteTiming::Refused {
            reason: e.to_string(),
        },
        Ok(first) => {
            let (secs, _) = time(&|| jhda_exact(params, budget).expect("within budget"));
            if first != pgfa {
                return Err(CliError::Mismatch(format!(
                    "enumeration gives {first}, generating function gives {pgfa}"
                )));
            }
            RouteTiming::Completed {
                mean_seconds: secs,
                takeover: first.to_scientific(3),
            }
        }
    };
    let layout = params.layout();
    Ok(BenchReport {
        label: params.label().map(str::to_string),
        lambda: layout.committees,
        n: layout.size,
        capacity: layout.capacity,
        m_sel: layout.sybils,
        reps,
        pgfa: pgfa_timing,
        jhda_exact: jhda_timing,
        jhda_states: state_count(&layout).to_string(),
        budget: budget.to_string(),
    })
}

fn cmd_bench(cli: &Cli, a: &BenchArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    if a.reps == 0 {
        return Err(CliError::Invalid("repetitions must be at least 1".into()));
    }
    let params = load_params(&a.file)?;
    let reports: Vec<BenchReport> = params
        .iter()
        .map(|p| run_bench(p, a.reps, cli.budget))
        .collect::<Result<_, _>>()?;
    let json = serde_json::to_string_pretty(&reports).map_err(|e| CliError::Internal(e.to_string()))?;
    writeln!(out, "{json}").map_err(stdout_err)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct SimulationReport<'a> {
    scenario: RawScenario,
    outcome: &'a crate::simulate::SimOutcome,
    takeover_rate: f64,
    breach_rate: f64,
    joint_rate: f64,
    #[serde(rename = "P_exact")]
    pool_breach_exact: String,
    #[serde(rename = "P_prime_exact")]
    takeover_exact: String,
    #[serde(rename = "P_double_prime_exact")]
    attack_exact: String,
}

fn cmd_simulate(cli: &Cli, a: &SimulateArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let params = load_params(&a.file)?;
    let mut reports = Vec::new();
    let mut outcomes = Vec::new();
    for p in &params {
        let threshold = cli.threshold_mode.threshold(p);
        let outcome = simulate_epochs(p, a.epochs, threshold, cli.seed, cli.sim_mode)
            .map_err(|e| CliError::Invalid(e.to_string()))?;
        outcomes.push((p.clone(), outcome));
    }
    for (p, outcome) in &outcomes {
        let pool = pool_breach_prob(p, cli.threshold_mode);
        let takeover = crate::genpoly::pgfa_failure_prob(p);
        reports.push(SimulationReport {
            scenario: p.to_raw(),
            outcome,
            takeover_rate: outcome.takeover_rate(),
            breach_rate: outcome.breach_rate(),
            joint_rate: outcome.joint_rate(),
            pool_breach_exact: pool.to_scientific(3),
            takeover_exact: takeover.to_scientific(3),
            attack_exact: pool.mul(&takeover).to_scientific(3),
        });
    }
    let json = if reports.len() == 1 {
        serde_json::to_string_pretty(&reports[0])
    } else {
        serde_json::to_string_pretty(&reports)
    }
    .map_err(|e| CliError::Internal(e.to_string()))?;
    writeln!(out, "{json}").map_err(stdout_err)?;
    if let Some(path) = &a.histogram {
        let mut buf = Vec::new();
        outcomes[0]
            .1
            .write_histogram_csv(&mut buf)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        fs::write(path, buf).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
    }
    Ok(EXIT_OK)
}
