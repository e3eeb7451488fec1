//! Command-line front end.
//!
//! Exit codes: 0 success, 1 certificate rejected by `verify`, 2 bad input
//! or missing H value, 3 length too small, 4 internal verification failure,
//! 10 exhausted, 11 not guaranteed, 12 budget or size limit exceeded.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::bounds::{self, BoundError, HTable, Mode};
use crate::certificate::{CertVerdict, Certificate, CertificateError};
use crate::coloring::{ColoringError, ColoringOracle};
use crate::exact::{self, CexVerdict, Decider, ExactError, NStatus, Target};
use crate::insensitivity::{self, InsensitivityError, Verdict};
use crate::solver::{self, BaseSource, SolveError, SolveOutcome, Strategy};
use crate::unions::{self, UnionsError, UnionsOutcome};

/// Budget for re-checking individual construction steps.
const STEP_CHECK_BUDGET: u64 = 1 << 20;

#[derive(Parser, Debug)]
#[command(name = "grt", version, about = "Variable-word colorings: bounds, constructions, witnesses and exact small values")]
pub struct Cli {
    /// Worker threads (default: all cores); results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate a bound function.
    Bounds(BoundsArgs),
    /// Build a witness by the pigeonhole construction.
    #[command(subcommand)]
    Construct(ConstructCommand),
    /// Search for a witness.
    #[command(subcommand)]
    Solve(SolveCommand),
    /// Check a certificate against a coloring.
    Verify(VerifyArgs),
    /// Determine exact minimal lengths by exhausting colorings.
    Exact(ExactArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BoundFn {
    /// The recursion f(k, j, m, r).
    F,
    /// The recursion with exact variable-word counts in the exponent.
    FTight,
    /// f(k, m, m, r) in the chosen mode.
    Sh,
    /// The chained bound for monochromatic words.
    Gr,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[arg(long = "fn", value_enum)]
    pub function: BoundFn,
    #[arg(long)]
    pub k: u64,
    #[arg(long)]
    pub m: u64,
    #[arg(long)]
    pub r: u64,
    /// Recursion index for f and f-tight (default: m).
    #[arg(long)]
    pub j: Option<u64>,
    /// paper or tight (used by sh and gr).
    #[arg(long, default_value = "paper")]
    pub mode: Mode,
    /// File of `m r H` lines supplying H values for gr.
    #[arg(long)]
    pub h_table: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum ConstructCommand {
    /// An m-dimensional word over [k+1] on which the coloring is (a,b)-insensitive.
    Insensitive(ConstructArgs),
}

#[derive(Args, Debug)]
pub struct ConstructArgs {
    #[arg(long)]
    pub k: u32,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub r: u32,
    #[arg(long)]
    pub a: u32,
    #[arg(long)]
    pub b: u32,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value = "tight")]
    pub mode: Mode,
    /// `seeded:SEED` or `table:PATH`, a coloring of W^{k+1}_v(n).
    #[arg(long)]
    pub coloring: String,
    /// Where to write the certificate.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Oracle evaluation limit.
    #[arg(long, default_value_t = insensitivity::DEFAULT_QUERY_BUDGET)]
    pub budget: u64,
}

#[derive(Subcommand, Debug)]
pub enum SolveCommand {
    /// An m-dimensional word over [k] whose reduced variable words share a color.
    Gr(SolveGrArgs),
    /// m block sets whose nonempty unions share a color.
    Unions(SolveUnionsArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum StrategyName {
    Direct,
    Inductive,
}

#[derive(Args, Debug)]
pub struct SolveGrArgs {
    #[arg(long)]
    pub k: u32,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub r: u32,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "direct")]
    pub strategy: StrategyName,
    #[arg(long, default_value = "tight")]
    pub mode: Mode,
    /// H values for the inductive strategy.
    #[arg(long)]
    pub h_table: Option<PathBuf>,
    /// Assume this base dimension instead of H(m, r); success is not guaranteed.
    #[arg(long = "override", conflicts_with = "h_table")]
    pub override_m: Option<u64>,
    /// Refuse to run the inductive strategy below its required length.
    #[arg(long)]
    pub strict: bool,
    #[arg(long, default_value_t = 1 << 28)]
    pub budget: u64,
    /// `seeded:SEED` or `table:PATH`, a coloring of W^k_v(n).
    #[arg(long)]
    pub coloring: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SolveUnionsArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub r: u32,
    #[arg(long, default_value_t = unions::DEFAULT_NODE_BUDGET)]
    pub budget: u64,
    /// `seeded:SEED` or `table:PATH`, a coloring of W^1_v(n).
    #[arg(long)]
    pub coloring: String,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub cert: PathBuf,
    /// `seeded:SEED` or `table:PATH`.
    #[arg(long)]
    pub coloring: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum TargetName {
    H,
    Sh,
    Gr,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DeciderName {
    Naive,
    Backtracking,
    Both,
}

#[derive(Args, Debug)]
pub struct ExactArgs {
    #[arg(long, value_enum)]
    pub target: TargetName,
    /// Alphabet parameter (sh and gr).
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub r: u32,
    /// Letters for sh (default: k and k+1).
    #[arg(long)]
    pub a: Option<u32>,
    #[arg(long)]
    pub b: Option<u32>,
    #[arg(long)]
    pub n_max: usize,
    /// Colorings (naive) or nodes (backtracking) allowed per length.
    #[arg(long, default_value_t = exact::DEFAULT_BUDGET)]
    pub budget: u64,
    #[arg(long, value_enum, default_value = "both")]
    pub decider: DeciderName,
    /// Directory for the report and counterexample tables.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Error, Debug)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("length {n} is below the required {required}")]
    LengthTooSmall { n: usize, required: String },
    #[error("internal verification failure: {0}")]
    Internal(String),
    #[error("certificate rejected: {0}")]
    Rejected(String),
    #[error("no witness exists at this length")]
    Exhausted,
    #[error("attempt below the guaranteed length did not succeed")]
    NotGuaranteed,
    #[error("{0}")]
    Budget(String),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Rejected(_) => 1,
            CliError::Usage(_) | CliError::Write { .. } => 2,
            CliError::LengthTooSmall { .. } => 3,
            CliError::Internal(_) => 4,
            CliError::Exhausted => 10,
            CliError::NotGuaranteed => 11,
            CliError::Budget(_) => 12,
        }
    }
}

impl From<BoundError> for CliError {
    fn from(e: BoundError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<ColoringError> for CliError {
    fn from(e: ColoringError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<InsensitivityError> for CliError {
    fn from(e: InsensitivityError) -> Self {
        match e {
            InsensitivityError::LengthTooSmall { n, required } => {
                CliError::LengthTooSmall { n, required: required.to_string() }
            }
            InsensitivityError::BudgetExceeded { .. } | InsensitivityError::TooLarge { .. } => {
                CliError::Budget(e.to_string())
            }
            InsensitivityError::PigeonholeFailure(_) | InsensitivityError::StepRelation(_) => {
                CliError::Internal(e.to_string())
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<UnionsError> for CliError {
    fn from(e: UnionsError) -> Self {
        match e {
            UnionsError::BudgetExceeded(_) => CliError::Budget(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::LengthTooSmall { n, required } => CliError::LengthTooSmall { n, required },
            SolveError::BudgetExceeded(_) | SolveError::TooLarge(_) => CliError::Budget(e.to_string()),
            SolveError::Unverified(_) => CliError::Internal(e.to_string()),
            SolveError::Insensitivity(e) => e.into(),
            SolveError::Unions(e) => e.into(),
            SolveError::Bound(e) => e.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<CertificateError> for CliError {
    fn from(e: CertificateError) -> Self {
        match e {
            CertificateError::Solve(e) => e.into(),
            CertificateError::Insensitivity(e) => e.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<ExactError> for CliError {
    fn from(e: ExactError) -> Self {
        match e {
            ExactError::Disagreement { .. } => CliError::Internal(e.to_string()),
            ExactError::Solve(e) => e.into(),
            ExactError::Unions(e) => e.into(),
            ExactError::Insensitivity(e) => e.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

/// Output produced before a failure is still printed.
pub struct Failure {
    pub output: String,
    pub error: CliError,
}

/// Runs a parsed command, returning its standard output.
pub fn run(cli: Cli) -> Result<String, Failure> {
    if let Some(t) = cli.threads {
        // a second initialisation in one process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
    }
    let mut out = String::new();
    let res = match cli.command {
        Command::Bounds(a) => cmd_bounds(a, &mut out),
        Command::Construct(ConstructCommand::Insensitive(a)) => cmd_construct(a, &mut out),
        Command::Solve(SolveCommand::Gr(a)) => cmd_solve_gr(a, &mut out),
        Command::Solve(SolveCommand::Unions(a)) => cmd_solve_unions(a, &mut out),
        Command::Verify(a) => cmd_verify(a, &mut out),
        Command::Exact(a) => cmd_exact(a, &mut out),
    };
    match res {
        Ok(()) => Ok(out),
        Err(error) => Err(Failure { output: out, error }),
    }
}

/// Parses `seeded:SEED` or `table:PATH` into an oracle of shape `(k, n, r)`.
pub fn coloring_source(source: &str, k: u32, n: usize, r: u32) -> Result<ColoringOracle, CliError> {
    if let Some(seed) = source.strip_prefix("seeded:") {
        let seed: u64 = seed
            .parse()
            .map_err(|_| CliError::Usage(format!("bad seed in {source:?}")))?;
        Ok(ColoringOracle::seeded(seed, k, n, r)?)
    } else if let Some(path) = source.strip_prefix("table:") {
        let c = ColoringOracle::load_table(Path::new(path))?;
        if (c.alphabet(), c.length(), c.colors()) != (k, n, r) {
            return Err(CliError::Usage(format!(
                "table is a coloring of ({}, {}, {}), expected ({k}, {n}, {r})",
                c.alphabet(),
                c.length(),
                c.colors()
            )));
        }
        Ok(c)
    } else {
        Err(CliError::Usage(format!(
            "coloring source must be seeded:SEED or table:PATH, got {source:?}"
        )))
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Write { path: path.to_path_buf(), source })
}

fn load_h_table(path: &Option<PathBuf>) -> Result<HTable, CliError> {
    match path {
        Some(p) => Ok(HTable::load(p)?),
        None => Ok(HTable::new()),
    }
}

fn cmd_bounds(a: BoundsArgs, out: &mut String) -> Result<(), CliError> {
    let j = a.j.unwrap_or(a.m);
    let (label, value) = match a.function {
        BoundFn::F => (format!("f k={} j={j} m={} r={}", a.k, a.m, a.r), bounds::f_paper(a.k, j, a.m, a.r)),
        BoundFn::FTight => (
            format!("f-tight k={} j={j} m={} r={}", a.k, a.m, a.r),
            bounds::f_tight(a.k, j, a.m, a.r),
        ),
        BoundFn::Sh => (
            format!("sh k={} m={} r={} mode={}", a.k, a.m, a.r, a.mode),
            bounds::sh_bound(a.k, a.m, a.r, a.mode),
        ),
        BoundFn::Gr => {
            let table = load_h_table(&a.h_table)?;
            (
                format!("gr k={} m={} r={} mode={}", a.k, a.m, a.r, a.mode),
                bounds::gr_bound(a.k, a.m, a.r, a.mode, &table)?,
            )
        }
    };
    let _ = writeln!(out, "# {label}");
    let _ = writeln!(out, "{}", bounds::describe(&value));
    let _ = writeln!(out, "{}", value.machine_line());
    Ok(())
}

fn cmd_construct(a: ConstructArgs, out: &mut String) -> Result<(), CliError> {
    let _ = writeln!(
        out,
        "# construct insensitive k={} m={} r={} a={} b={} n={} mode={} coloring={}",
        a.k, a.m, a.r, a.a, a.b, a.n, a.mode, a.coloring
    );
    let c = coloring_source(&a.coloring, a.k + 1, a.n, a.r)?;
    let built = insensitivity::construct_insensitive_within(a.k, a.m, a.r, a.a, a.b, a.n, &c, a.mode, a.budget)?;
    let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let _ = writeln!(out, "plan q {}", join(&built.plan.q));
    let _ = writeln!(out, "plan d {}", join(&built.plan.d));
    let mut step_failure = None;
    for s in &built.steps {
        let _ = write!(out, "step {} d={} t1={} t2={}", s.j, s.d, s.t1, s.t2);
        if built.plan.q[s.j - 1] != built.plan.q[s.j] + s.d - 1 {
            step_failure.get_or_insert(format!("step relation fails at step {}", s.j));
        }
        match insensitivity::verify_step_condition(&c, &s.word, s.j, a.a, a.b, STEP_CHECK_BUDGET) {
            Ok(Verdict::Pass) => out.push_str(" swap-check pass\n"),
            Ok(fail) => {
                out.push_str(" swap-check fail\n");
                step_failure.get_or_insert(format!("step {}: {fail}", s.j));
            }
            Err(InsensitivityError::BudgetExceeded { .. }) => out.push_str(" swap-check skipped\n"),
            Err(e) => return Err(e.into()),
        }
    }
    let _ = writeln!(out, "witness {}", built.claim.witness);
    let _ = writeln!(out, "queries {}", built.queries);
    if let Some(bound) = built.plan.query_bound(a.k) {
        let _ = writeln!(out, "query-bound {bound}");
    }
    let verdict = insensitivity::verify_insensitive(&c, &built.claim)?;
    let _ = writeln!(out, "verify {verdict}");
    if let Some(msg) = step_failure {
        return Err(CliError::Internal(msg));
    }
    if !verdict.is_pass() {
        return Err(CliError::Internal(verdict.to_string()));
    }
    if let Some(path) = &a.out {
        let cert = Certificate::Insensitive { claim: built.claim, mode: a.mode };
        write_file(path, &cert.to_string())?;
        let _ = writeln!(out, "certificate {}", path.display());
    }
    Ok(())
}

fn cmd_solve_gr(a: SolveGrArgs, out: &mut String) -> Result<(), CliError> {
    let strategy = match a.strategy {
        StrategyName::Direct => Strategy::DirectSearch { budget: a.budget },
        StrategyName::Inductive => Strategy::Inductive {
            mode: a.mode,
            base: match a.override_m {
                Some(m) => BaseSource::Override(m),
                None => BaseSource::Table(load_h_table(&a.h_table)?),
            },
            strict: a.strict,
            budget: a.budget,
        },
    };
    let strategy_label = match (&strategy, a.override_m) {
        (Strategy::DirectSearch { .. }, _) => "direct".to_string(),
        (_, Some(m)) => format!("inductive mode={} override={m}", a.mode),
        (_, None) => format!("inductive mode={}", a.mode),
    };
    let _ = writeln!(
        out,
        "# solve gr k={} m={} r={} n={} strategy={strategy_label} coloring={}",
        a.k, a.m, a.r, a.n, a.coloring
    );
    let c = Arc::new(coloring_source(&a.coloring, a.k, a.n, a.r)?);
    if matches!(strategy, Strategy::Inductive { .. }) {
        let req = solver::required_length(a.k as u64, a.m as u64, a.r as u64, &strategy)?;
        let _ = writeln!(out, "required-length {}", req.machine_line());
    }
    let outcome = solver::solve_gr(a.k, a.m, a.r, a.n, &c, &strategy)?;
    for line in outcome.trace() {
        let _ = writeln!(out, "trace {line}");
    }
    match outcome {
        SolveOutcome::Found(claim, _) => {
            let _ = writeln!(out, "result found");
            let _ = writeln!(out, "color {}", claim.color);
            let _ = writeln!(out, "witness {}", claim.witness);
            if let Some(path) = &a.out {
                write_file(path, &Certificate::Monochromatic(claim).to_string())?;
                let _ = writeln!(out, "certificate {}", path.display());
            }
            Ok(())
        }
        SolveOutcome::Exhausted(_) => {
            let _ = writeln!(out, "result exhausted");
            Err(CliError::Exhausted)
        }
        SolveOutcome::NotGuaranteed(_) => {
            let _ = writeln!(out, "result not-guaranteed");
            Err(CliError::NotGuaranteed)
        }
    }
}

fn cmd_solve_unions(a: SolveUnionsArgs, out: &mut String) -> Result<(), CliError> {
    let _ = writeln!(out, "# solve unions m={} n={} r={} coloring={}", a.m, a.n, a.r, a.coloring);
    let c = coloring_source(&a.coloring, 1, a.n, a.r)?;
    match unions::solve_unions(&c, a.m, a.budget)? {
        UnionsOutcome::Found(t, color) => {
            let _ = writeln!(out, "result found");
            let _ = writeln!(out, "color {color}");
            let _ = writeln!(out, "witness {t}");
            let _ = writeln!(out, "word {}", unions::blockseq_to_varword(&t, a.n)?);
            Ok(())
        }
        UnionsOutcome::Exhausted => {
            let _ = writeln!(out, "result exhausted");
            Err(CliError::Exhausted)
        }
    }
}

fn cmd_verify(a: VerifyArgs, out: &mut String) -> Result<(), CliError> {
    let cert = Certificate::load(&a.cert)?;
    let (k, n, r) = cert.shape();
    let c = coloring_source(&a.coloring, k, n, r)?;
    match cert.verify(&c)? {
        CertVerdict::Pass => {
            let _ = writeln!(out, "verify pass");
            Ok(())
        }
        CertVerdict::Fail(why) => {
            let _ = writeln!(out, "verify {why}");
            Err(CliError::Rejected(why))
        }
    }
}

fn cmd_exact(a: ExactArgs, out: &mut String) -> Result<(), CliError> {
    let target = match a.target {
        TargetName::H => Target::H { m: a.m, r: a.r },
        TargetName::Gr => Target::Gr { k: a.k, m: a.m, r: a.r },
        TargetName::Sh => Target::Sh {
            k: a.k,
            m: a.m,
            r: a.r,
            a: a.a.unwrap_or(a.k),
            b: a.b.unwrap_or(a.k + 1),
        },
    };
    let decider = match a.decider {
        DeciderName::Naive => Decider::Naive,
        DeciderName::Backtracking => Decider::Backtracking,
        DeciderName::Both => Decider::Both,
    };
    let res = exact::exact_minimal(&target, a.n_max, a.budget, decider)?;
    let mut report = res.report();
    let mut files = Vec::new();
    for rec in &res.records {
        if let NStatus::Counterexample(table) = &rec.status {
            match exact::verify_counterexample(&target, table, a.budget)? {
                CexVerdict::Pass => {
                    let _ = writeln!(report, "counterexample {} verified", rec.n);
                }
                CexVerdict::Fail(w) => {
                    out.push_str(&report);
                    return Err(CliError::Internal(format!("counterexample at n={} admits {w}", rec.n)));
                }
            }
            files.push((format!("counterexample-n{}.txt", rec.n), table.to_text()));
        }
    }
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.clone(), source })?;
        for (name, text) in &files {
            write_file(&dir.join(name), text)?;
        }
        write_file(&dir.join("report.txt"), &report)?;
    }
    out.push_str(&report);
    Ok(())
}
