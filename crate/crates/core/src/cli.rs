//! The `collusion-lab` command line.
//!
//! Every subcommand builds a [`Report`]: a JSON value, a flat table for CSV
//! output, and whether a checked property failed. Exit codes are 0 on
//! success, 1 when a property check fails, 2 on bad input and 3 when the
//! market solver fails.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use itertools::Itertools;
use num_bigint::BigInt;
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::error::{FisherError, IncentiveError, InstanceError, MechanismError, ModelError};
use crate::fisher::{mnw_solve, ZeroGoodPolicy, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::incentives::{
    exhaustive_search, OrdinalMechanism, RatioReport, RatioValue, SearchOptions, SearchResult,
};
use crate::instances::{self, Construction, PairedMechanism, ValuationFamily};
use crate::mechanisms::{
    coupling_violations, factorial_copies, probabilistic_serial, ps_via_rr_traced, round_robin,
};
use crate::model::{Instance, OrdinalProfile, Usage};
use crate::rational::{self, Rational};

/// Largest number of profiles `check-equivalence` will enumerate.
pub const EQUIVALENCE_LIMIT: u64 = 1_000_000;
pub const THREADS_ENV: &str = "COLLUSION_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "collusion-lab",
    version,
    about = "Fair-division mechanisms under coalition manipulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one mechanism on an instance.
    Run(RunArgs),
    /// Compare eating and Round-Robin-over-copies on every ordinal profile.
    CheckEquivalence(EquivalenceArgs),
    /// Exhaustive coalition-manipulation search.
    Search(SearchArgs),
    /// Evaluate a lower-bound construction against its expected ratios.
    Reproduce(ReproduceArgs),
    /// Emit a lower-bound construction or a random instance.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct InstanceSource {
    /// Instance JSON file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Instance JSON given inline.
    #[arg(long, conflicts_with = "input")]
    pub instance: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MechanismArg {
    Rr,
    Ps,
    PsViaRr,
    Mnw,
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: InstanceSource,
    #[arg(long, value_enum)]
    pub mechanism: MechanismArg,
    /// Use T = (n!)^m copies per good (ps-via-rr only).
    #[arg(long = "paper-T")]
    pub factorial_t: bool,
    /// Explicit copies per good (ps-via-rr only).
    #[arg(long = "T")]
    pub copies: Option<usize>,
    #[arg(long)]
    pub no_trace: bool,
    /// Relative price-change tolerance (mnw only).
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Split of goods nobody values: `uniform` or `agent:K` (mnw only).
    #[arg(long, default_value = "uniform")]
    pub zero_policy: String,
}

#[derive(Debug, clap::Args)]
pub struct EquivalenceArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long = "paper-T")]
    pub factorial_t: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrdinalArg {
    Rr,
    Ps,
}

impl From<OrdinalArg> for OrdinalMechanism {
    fn from(m: OrdinalArg) -> Self {
        match m {
            OrdinalArg::Rr => OrdinalMechanism::RoundRobin,
            OrdinalArg::Ps => OrdinalMechanism::ProbabilisticSerial,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Binary,
    UniformRational,
    PositiveRational,
}

impl From<FamilyArg> for ValuationFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Binary => ValuationFamily::Binary,
            FamilyArg::UniformRational => ValuationFamily::UniformRational,
            FamilyArg::PositiveRational => ValuationFamily::PositiveRational,
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub source: InstanceSource,
    #[arg(long, value_enum)]
    pub mechanism: OrdinalArg,
    /// Largest coalition size.
    #[arg(long, default_value_t = 1)]
    pub c: usize,
    /// Sweep every 0/1 instance of shape n x m.
    #[arg(long, requires_all = ["n", "m"])]
    pub binary: bool,
    /// Sweep this many random instances of shape n x m.
    #[arg(long, requires_all = ["n", "m", "seed"])]
    pub random: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, value_enum, default_value_t = FamilyArg::Binary)]
    pub family: FamilyArg,
    #[arg(long)]
    pub seed: Option<u64>,
    /// GIR over all manipulations (true) or only weakly improving ones.
    #[arg(long, action = clap::ArgAction::Set, default_value_t = true)]
    pub gir_literal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Bound {
    MnwGir,
    MnwSgir,
    PsGir,
    RrSgir,
}

#[derive(Debug, Clone, clap::Args)]
pub struct BoundParams {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub c: Option<usize>,
    #[arg(long = "T")]
    pub t: Option<usize>,
    /// Rational such as `1/100`.
    #[arg(long)]
    pub eps: Option<String>,
}

#[derive(Debug, clap::Args)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub bound: Bound,
    #[command(flatten)]
    pub params: BoundParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    MnwGir,
    MnwSgir,
    PsGir,
    RrSgir,
    Random,
}

#[derive(Debug, clap::Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub kind: GenKind,
    #[command(flatten)]
    pub params: BoundParams,
    /// Number of goods (random only).
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, value_enum, default_value_t = FamilyArg::Binary)]
    pub family: FamilyArg,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<MechanismError> for CliError {
    fn from(e: MechanismError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<InstanceError> for CliError {
    fn from(e: InstanceError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<FisherError> for CliError {
    fn from(e: FisherError) -> Self {
        match e {
            FisherError::Model(_) | FisherError::ZeroGoodPolicy(_) => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Solver(e.to_string()),
        }
    }
}

impl From<IncentiveError> for CliError {
    fn from(e: IncentiveError) -> Self {
        match e {
            IncentiveError::Fisher(f) => f.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

/// A flat table for CSV output.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub json: Value,
    pub table: Table,
    pub violation: bool,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        i32::from(self.violation)
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>, CliError> {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("values serialize");
                s.push('\n');
                Ok(s.into_bytes())
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let io = |e: csv::Error| CliError::Input(format!("csv: {e}"));
                w.write_record(&self.table.header).map_err(io)?;
                for row in &self.table.rows {
                    w.write_record(row).map_err(io)?;
                }
                w.into_inner()
                    .map_err(|e| CliError::Input(format!("csv: {e}")))
            }
        }
    }
}

pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::CheckEquivalence(args) => cmd_check_equivalence(args),
        Command::Search(args) => cmd_search(args),
        Command::Reproduce(args) => cmd_reproduce(args),
        Command::Gen(args) => cmd_gen(args),
    }
}

/// Parses arguments, runs the command, writes the report and returns the
/// process exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 {
                write!(stdout, "{e}")
            } else {
                write!(stderr, "{e}")
            };
            return code;
        }
    };
    let result =
        execute(&cli).and_then(|report| Ok((report.render(cli.format)?, report.exit_code())));
    match result {
        Ok((bytes, code)) => {
            let written = match &cli.output {
                Some(path) => {
                    std::fs::write(path, &bytes).map_err(|e| format!("{}: {e}", path.display()))
                }
                None => stdout.write_all(&bytes).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => code,
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    2
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

/// Caps the global thread pool from `COLLUSION_LAB_THREADS`.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        CliError::Input(format!(
            "{THREADS_ENV} must be a positive integer, got {raw:?}"
        ))
    })?;
    // A pool that already exists keeps its size.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

fn load_instance(source: &InstanceSource) -> Result<Instance, CliError> {
    let text = match (&source.input, &source.instance) {
        (Some(path), _) => std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?,
        (None, Some(inline)) => inline.clone(),
        (None, None) => {
            return Err(CliError::Input(
                "an instance is required (--input or --instance)".into(),
            ))
        }
    };
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("invalid instance JSON: {e}")))
}

fn parse_policy(raw: &str) -> Result<ZeroGoodPolicy, CliError> {
    if raw == "uniform" {
        return Ok(ZeroGoodPolicy::Uniform);
    }
    raw.strip_prefix("agent:")
        .and_then(|k| k.parse().ok())
        .map(ZeroGoodPolicy::ToAgent)
        .ok_or_else(|| CliError::Input(format!("unknown zero-good policy {raw:?}")))
}

fn shares_json(shares: &[Vec<Rational>]) -> Value {
    json!(shares
        .iter()
        .map(|row| row.iter().map(ToString::to_string).collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

fn share_table(shares: &[Vec<Rational>]) -> Table {
    let mut t = Table::new(&["agent", "good", "share"]);
    for (a, row) in shares.iter().enumerate() {
        for (g, x) in row.iter().enumerate() {
            t.push(vec![a.to_string(), g.to_string(), x.to_string()]);
        }
    }
    t
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("values serialize")
}

pub fn cmd_run(args: &RunArgs) -> Result<Report, CliError> {
    let inst = load_instance(&args.source)?;
    if args.mechanism != MechanismArg::PsViaRr && (args.factorial_t || args.copies.is_some()) {
        return Err(CliError::Input(
            "--paper-T and --T apply only to ps-via-rr".into(),
        ));
    }
    if args.factorial_t && args.copies.is_some() {
        return Err(CliError::Input(
            "--paper-T and --T are mutually exclusive".into(),
        ));
    }
    let (mut json, shares) = match args.mechanism {
        MechanismArg::Rr => {
            inst.validate(Usage::Ordinal)?;
            let (bundles, trace) = round_robin(&inst.ordinal_profile());
            let shares = bundles.to_fractional(inst.m()).shares;
            (
                json!({"mechanism": "RR", "bundles": bundles.bundles, "trace": to_json(&trace)}),
                shares,
            )
        }
        MechanismArg::Ps => {
            inst.validate(Usage::Ordinal)?;
            let (x, trace) = probabilistic_serial(&inst.ordinal_profile());
            (
                json!({"mechanism": "PS", "x": shares_json(&x.shares), "trace": to_json(&trace)}),
                x.shares,
            )
        }
        MechanismArg::PsViaRr => {
            inst.validate(Usage::Ordinal)?;
            let copies = if args.factorial_t {
                Some(factorial_copies(inst.n(), inst.m())?)
            } else {
                args.copies
            };
            let run = ps_via_rr_traced(&inst.ordinal_profile(), copies)?;
            let violations = coupling_violations(&run);
            let json = json!({
                "mechanism": "PS-via-RR",
                "x": shares_json(&run.allocation.shares),
                "T": run.copies,
                "coupling_violations": violations,
                "trace": {"eating": to_json(&run.ps_trace), "picks": to_json(&run.rr_trace)},
            });
            (json, run.allocation.shares)
        }
        MechanismArg::Mnw => {
            let policy = parse_policy(&args.zero_policy)?;
            let (x, outcome) = mnw_solve(&inst, &policy, args.tol, args.max_iter)?;
            let json = json!({
                "mechanism": "MNW",
                "x": shares_json(&x.shares),
                "p": to_json(&outcome.prices),
                "residuals": to_json(&outcome.residuals),
                "iters": outcome.iterations,
            });
            (json, x.shares)
        }
    };
    if args.no_trace {
        if let Some(map) = json.as_object_mut() {
            map.remove("trace");
        }
    }
    let violation = json
        .get("coupling_violations")
        .and_then(Value::as_array)
        .is_some_and(|v| !v.is_empty());
    Ok(Report {
        json,
        table: share_table(&shares),
        violation,
    })
}

fn profile_at(index: u64, perms: &[Vec<usize>], n: usize) -> OrdinalProfile {
    let base = perms.len() as u64;
    let mut rest = index;
    let mut orderings = vec![Vec::new(); n];
    for a in (0..n).rev() {
        orderings[a] = perms[(rest % base) as usize].clone();
        rest /= base;
    }
    OrdinalProfile { orderings }
}

pub fn cmd_check_equivalence(args: &EquivalenceArgs) -> Result<Report, CliError> {
    let (n, m) = (args.n, args.m);
    if n == 0 || m == 0 {
        return Err(CliError::Input("n and m must be positive".into()));
    }
    let fact: BigInt = (1..=m).map(BigInt::from).product();
    let count = num_traits::pow(fact, n);
    if count > BigInt::from(EQUIVALENCE_LIMIT) {
        return Err(IncentiveError::SearchTooLarge {
            count: count.to_string(),
            limit: EQUIVALENCE_LIMIT,
        }
        .into());
    }
    let count: u64 = count.try_into().expect("bounded by limit");
    let copies = if args.factorial_t {
        Some(factorial_copies(n, m)?)
    } else {
        None
    };
    let perms: Vec<Vec<usize>> = (0..m).permutations(m).collect();

    let checked: Vec<Result<Option<Value>, MechanismError>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let profile = profile_at(i, &perms, n);
            let (ps, _) = probabilistic_serial(&profile);
            let run = ps_via_rr_traced(&profile, copies)?;
            let coupling = coupling_violations(&run);
            Ok((run.allocation != ps || !coupling.is_empty()).then(|| {
                json!({
                    "profile": profile.orderings,
                    "ps": shares_json(&ps.shares),
                    "ps_via_rr": shares_json(&run.allocation.shares),
                    "T": run.copies,
                    "coupling_violations": coupling,
                })
            }))
        })
        .collect();
    let mut counterexample = None;
    for r in checked {
        if let Some(v) = r? {
            counterexample = Some(v);
            break;
        }
    }
    let pass = counterexample.is_none();
    let mut table = Table::new(&["n", "m", "copies", "profiles", "pass"]);
    let copies_label = if args.factorial_t {
        "factorial"
    } else {
        "minimal"
    };
    table.push(vec![
        n.to_string(),
        m.to_string(),
        copies_label.into(),
        count.to_string(),
        pass.to_string(),
    ]);
    Ok(Report {
        json: json!({
            "n": n,
            "m": m,
            "copies": copies_label,
            "profiles": count,
            "pass": pass,
            "counterexample": counterexample,
        }),
        table,
        violation: !pass,
    })
}

fn sweep_instances(args: &SearchArgs) -> Result<Vec<Instance>, CliError> {
    let shape = || -> Result<(usize, usize), CliError> {
        match (args.n, args.m) {
            (Some(n), Some(m)) if n > 0 && m > 0 => Ok((n, m)),
            _ => Err(CliError::Input("--n and --m must be positive".into())),
        }
    };
    if args.binary {
        let (n, m) = shape()?;
        if n * m > 20 {
            return Err(CliError::Input(format!(
                "2^{} binary instances is too many to sweep",
                n * m
            )));
        }
        Ok(instances::all_binary_instances(n, m).collect())
    } else if let Some(k) = args.random {
        let (n, m) = shape()?;
        let seed = args
            .seed
            .ok_or_else(|| CliError::Input("--random requires --seed".into()))?;
        Ok((0..k as u64)
            .map(|i| instances::random_instance(n, m, args.family.into(), seed.wrapping_add(i)))
            .collect())
    } else {
        Ok(vec![load_instance(&args.source)?])
    }
}

fn bound_ok(v: Option<RatioValue>, bound: usize) -> bool {
    v.map_or(true, |v| {
        v <= RatioValue::Finite(rational::int(bound as i64))
    })
}

/// Best finite value of one aggregate across a sweep, with the instance it
/// came from.
#[derive(Default)]
struct SweepBest<'a> {
    value: Option<&'a Rational>,
    witness: Option<(usize, &'a RatioReport)>,
    infinite: u64,
    infinite_witness: Option<(usize, &'a RatioReport)>,
}

impl<'a> SweepBest<'a> {
    fn offer(&mut self, idx: usize, agg: &'a crate::incentives::Aggregate) {
        if let Some(v) = &agg.value {
            if self.value.map_or(true, |best| v > best) {
                self.value = Some(v);
                self.witness = agg.witness.as_ref().map(|w| (idx, w));
            }
        }
        if self.infinite == 0 && agg.infinite > 0 {
            self.infinite_witness = agg.infinite_witness.as_ref().map(|w| (idx, w));
        }
        self.infinite += agg.infinite;
    }

    fn display(&self) -> Option<RatioValue> {
        match (self.value, self.infinite) {
            (Some(v), _) => Some(RatioValue::Finite(v.clone())),
            (None, 0) => None,
            (None, _) => Some(RatioValue::Infinite),
        }
    }

    fn supremum(&self) -> Option<RatioValue> {
        if self.infinite > 0 {
            Some(RatioValue::Infinite)
        } else {
            self.value.cloned().map(RatioValue::Finite)
        }
    }

    fn argmax(&self, instances: &[Instance]) -> Value {
        match self.witness.or(self.infinite_witness) {
            Some((idx, w)) => json!({
                "instance": idx,
                "valuations": shares_json(instances[idx].valuations()),
                "witness": to_json(w),
            }),
            None => Value::Null,
        }
    }
}

pub fn cmd_search(args: &SearchArgs) -> Result<Report, CliError> {
    let mechanism: OrdinalMechanism = args.mechanism.into();
    let options = SearchOptions {
        gir_literal: args.gir_literal,
    };
    let c = args.c;
    if c == 0 {
        return Err(CliError::Input("--c must be at least 1".into()));
    }
    let insts = sweep_instances(args)?;
    let results: Vec<SearchResult> = insts
        .par_iter()
        .map(|inst| exhaustive_search(mechanism, inst, c, options))
        .collect::<Result<_, _>>()?;

    let (mut ir, mut gir, mut sgir) = (
        SweepBest::default(),
        SweepBest::default(),
        SweepBest::default(),
    );
    let mut table = Table::new(&[
        "instance",
        "aggregate",
        "value",
        "coalition",
        "agent",
        "ratio",
        "truthful_utility",
        "manipulated_utility",
    ]);
    let mut feasible = 0u64;
    let mut profiles = 0u64;
    let mut ordering_ok = true;
    for (idx, r) in results.iter().enumerate() {
        ir.offer(idx, &r.ir);
        gir.offer(idx, &r.gir);
        sgir.offer(idx, &r.sgir);
        feasible += r.sgir_feasible;
        profiles += r.profiles_searched;
        if r.sgir_feasible > 0 {
            ordering_ok &= r.gir.supremum() <= r.sgir.supremum();
        }
        for (name, agg, value) in [
            ("ir", &r.ir, r.empirical_ir()),
            ("gir", &r.gir, r.empirical_gir()),
            ("sgir", &r.sgir, r.empirical_sgir()),
        ] {
            let Some(w) = agg.best_witness() else {
                continue;
            };
            let value = value.map(|v| v.to_string()).unwrap_or_default();
            let members = w.coalition.members().iter().join(" ");
            for (a, ratio) in &w.per_agent {
                table.push(vec![
                    idx.to_string(),
                    name.into(),
                    value.clone(),
                    members.clone(),
                    a.to_string(),
                    ratio.to_string(),
                    w.truthful_utility[a].to_string(),
                    w.manipulated_utility[a].to_string(),
                ]);
            }
        }
    }

    let ceilings = json!({
        "ir": bound_ok(ir.supremum(), 2),
        "gir": bound_ok(gir.supremum(), c + 1),
        "sgir": match mechanism {
            OrdinalMechanism::ProbabilisticSerial => Value::Bool(bound_ok(sgir.supremum(), c + 1)),
            OrdinalMechanism::RoundRobin => Value::Null,
        },
        "gir_le_sgir": ordering_ok,
    });
    let violation = ceilings
        .as_object()
        .expect("object")
        .values()
        .any(|v| v == &Value::Bool(false));

    let json = if results.len() == 1 && !args.binary && args.random.is_none() {
        let mut v = to_json(&results[0]);
        v["ceilings"] = ceilings;
        v
    } else {
        json!({
            "mechanism": mechanism,
            "c": c,
            "instances": results.len(),
            "empirical": {"ir": ir.display(), "gir": gir.display(), "sgir": sgir.display()},
            "infinite": {"ir": ir.infinite, "gir": gir.infinite, "sgir": sgir.infinite},
            "argmax": {"ir": ir.argmax(&insts), "gir": gir.argmax(&insts), "sgir": sgir.argmax(&insts)},
            "sgir_feasible": feasible,
            "profiles_searched": profiles,
            "ceilings": ceilings,
        })
    };
    Ok(Report {
        json,
        table,
        violation,
    })
}

fn parse_eps(raw: &Option<String>) -> Result<Rational, CliError> {
    match raw {
        Some(s) => rational::parse(s).map_err(|e| CliError::Input(format!("--eps: {e}"))),
        None => Ok(rational::frac(1, 100)),
    }
}

fn build_bound(bound: Bound, p: &BoundParams) -> Result<Construction, CliError> {
    Ok(match bound {
        Bound::MnwGir => instances::mnw_gir_instance(p.n.unwrap_or(4), p.c.unwrap_or(2))?,
        Bound::MnwSgir => instances::mnw_sgir_instance(p.n.unwrap_or(4), p.c.unwrap_or(2))?,
        Bound::PsGir => {
            instances::ps_gir_instance(p.n.unwrap_or(2), p.c.unwrap_or(1), p.t.unwrap_or(2))?
        }
        Bound::RrSgir => instances::rr_sgir_instance(&parse_eps(&p.eps)?)?,
    })
}

/// Relative tolerance for ratios computed through the market solver.
pub const MNW_RATIO_TOL: f64 = 1e-5;

pub fn cmd_reproduce(args: &ReproduceArgs) -> Result<Report, CliError> {
    let bundle = build_bound(args.bound, &args.params)?;
    let report = bundle.evaluate()?;
    let exact = matches!(bundle.mechanism, PairedMechanism::Ordinal(_));
    let mut matched = true;
    let mut table = Table::new(&["bound", "agent", "achieved", "expected", "limit"]);
    let mut achieved = serde_json::Map::new();
    let mut decimal = serde_json::Map::new();
    for (a, want) in &bundle.expected_ratios {
        let got = &report.per_agent[a];
        matched &= match (exact, got) {
            (true, _) => got == &RatioValue::Finite(want.clone()),
            (false, RatioValue::Finite(g)) => {
                let (g, w) = (rational::to_f64(g), rational::to_f64(want));
                (g - w).abs() <= MNW_RATIO_TOL * w.abs()
            }
            (false, RatioValue::Infinite) => false,
        };
        achieved.insert(a.to_string(), Value::String(got.to_string()));
        decimal.insert(a.to_string(), json!(got.to_f64()));
        table.push(vec![
            bundle.bound.into(),
            a.to_string(),
            got.to_string(),
            want.to_string(),
            bundle.expected_limit.to_string(),
        ]);
    }
    let json = json!({
        "bound": bundle.bound,
        "params": bundle.params,
        "achieved": achieved,
        "achieved_decimal": decimal,
        "expected": to_json(&bundle)["expected_ratios"],
        "expected_limit": bundle.expected_limit,
        "all_weakly_better": report.all_weakly_better,
        "tolerance": if exact { json!("exact") } else { json!(MNW_RATIO_TOL) },
        "match": matched,
    });
    Ok(Report {
        json,
        table,
        violation: !matched,
    })
}

pub fn cmd_gen(args: &GenArgs) -> Result<Report, CliError> {
    let bound = match args.kind {
        GenKind::MnwGir => Bound::MnwGir,
        GenKind::MnwSgir => Bound::MnwSgir,
        GenKind::PsGir => Bound::PsGir,
        GenKind::RrSgir => Bound::RrSgir,
        GenKind::Random => {
            let (n, m) = match (args.params.n, args.m) {
                (Some(n), Some(m)) if n > 0 && m > 0 => (n, m),
                _ => {
                    return Err(CliError::Input(
                        "gen random needs positive --n and --m".into(),
                    ))
                }
            };
            let seed = args
                .seed
                .ok_or_else(|| CliError::Input("gen random requires --seed".into()))?;
            let inst = instances::random_instance(n, m, args.family.into(), seed);
            return Ok(Report {
                json: to_json(&inst),
                table: share_table(inst.valuations()),
                violation: false,
            });
        }
    };
    let bundle = build_bound(bound, &args.params)?;
    Ok(Report {
        json: to_json(&bundle),
        table: share_table(bundle.instance.valuations()),
        violation: false,
    })
}
