//! Command-line front end.
//!
//! Exit codes: 0 success/all checks pass, 1 verification mismatch, 2 invalid
//! input, 3 numerical failure.  Numbers are written with 17 significant digits;
//! JSON keys follow struct field order, so identical flags give identical bytes
//! regardless of `--jobs`.

use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::barriers::{
    alpha_ledger, check_subsolution, scan_beta, verify_supersolution_with, EvalMode, SubsolutionCheck,
    VerificationReport,
};
use crate::error::Error;
use crate::freeboundary::{
    cap_constants, cap_divergence_check, indicial_roots, lawlor_cubic_min, near_half_pi_relations, CapConstants,
    CapPotential, DivergenceGrid, DivergenceReport, IndicialData, Side,
};
use crate::profile_ode::{ConePair, ProfileTrajectory, TerminalEvent};
use crate::reference::{matches_with, table, ReferenceRow, TableKind};
use crate::shooting::{family_sweep, solve_cone, solve_near_half_pi, SweepMode, SweepRequest};
use crate::tolerances::{RIGHT_ANGLE_SNAP, TABLE_TOL_ABS, TABLE_TOL_REL};

/// Exit code: success.
pub const EXIT_OK: i32 = 0;
/// Exit code: a verification or table comparison failed.
pub const EXIT_MISMATCH: i32 = 1;
/// Exit code: invalid input.
pub const EXIT_INVALID: i32 = 2;
/// Exit code: numerical failure.
pub const EXIT_NUMERICAL: i32 = 3;

/// Capillary minimal cones: shooting, barrier certificates and table reproduction.
#[derive(Debug, Parser)]
#[command(name = "cone", version)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

/// Flags shared by all subcommands.
#[derive(Debug, Args, Clone)]
struct Common {
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads for row-level parallelism.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: u32,
    /// Absolute table-match tolerance.
    #[arg(long, global = true, default_value_t = TABLE_TOL_ABS)]
    tol_abs: f64,
    /// Relative table-match tolerance.
    #[arg(long, global = true, default_value_t = TABLE_TOL_REL)]
    tol_rel: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for a cone by contact angle or by terminal value.
    Solve(SolveArgs),
    /// Families of profiles.
    #[command(subcommand)]
    Family(FamilyCmd),
    /// Sub- and supersolution computations.
    #[command(subcommand)]
    Barriers(BarriersCmd),
    /// Reference tables.
    #[command(subcommand)]
    Table(TableCmd),
    /// Free-boundary kernels.
    #[command(subcommand)]
    Fb(FbCmd),
    /// Machine-readable pass/fail reports.
    #[command(subcommand)]
    Verify(VerifyCmd),
}

#[derive(Debug, Args, Clone, Copy)]
struct PairArgs {
    /// Dimension parameter n.
    #[arg(long)]
    n: u32,
    /// Second factor dimension k (1 <= k <= n-2).
    #[arg(long)]
    k: u32,
}

impl PairArgs {
    fn pair(self) -> Result<ConePair, Error> {
        ConePair::new(self.n, self.k)
    }
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("target").required(true).args(["theta", "eps"])))]
struct SolveArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Contact angle (radians unless --degrees).
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Terminal value: the profile blows up at height -eps.
    #[arg(long)]
    eps: Option<f64>,
    /// Interpret --theta in degrees.
    #[arg(long)]
    degrees: bool,
}

#[derive(Debug, Subcommand)]
enum FamilyCmd {
    /// Integrate a family of profiles and report crossings or ordering.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepKind {
    Heights,
    Lambda,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// What to vary.
    #[arg(long, value_enum, default_value_t = SweepKind::Heights)]
    mode: SweepKind,
    /// Number of heights (the Lawson height is always added).
    #[arg(long, default_value_t = 12)]
    count: usize,
    /// Smallest height as a fraction of the Lawson height.
    #[arg(long, default_value_t = 0.2)]
    a_min: f64,
    /// Largest height as a fraction of the Lawson height.
    #[arg(long, default_value_t = 1.2)]
    a_max: f64,
    /// Fixed height for scale sweeps, as a fraction of the Lawson height.
    #[arg(long, default_value_t = 0.5)]
    a: f64,
    /// Scales for scale sweeps.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0])]
    lambdas: Vec<f64>,
}

#[derive(Debug, Subcommand)]
enum BarriersCmd {
    /// Subsolution check for an exponent alpha (defaults to the ledger value).
    Sub(SubArgs),
    /// Supersolution constants and extremal values for an exponent beta.
    Super(SuperArgs),
    /// Accepted beta values on a grid.
    ScanBeta(ScanArgs),
}

#[derive(Debug, Args)]
struct SubArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Exponent alpha in (2-n, 0).
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Table,
    Exact,
}

impl From<ModeArg> for EvalMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Table => EvalMode::Table,
            ModeArg::Exact => EvalMode::Exact,
        }
    }
}

#[derive(Debug, Args)]
struct SuperArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Exponent beta in (2-n, -1).
    #[arg(long, allow_negative_numbers = true)]
    beta: f64,
    /// Evaluation convention.
    #[arg(long, value_enum, default_value_t = ModeArg::Table)]
    mode: ModeArg,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Smallest beta (defaults just above 2-n).
    #[arg(long, allow_negative_numbers = true)]
    beta_min: Option<f64>,
    /// Largest beta.
    #[arg(long, allow_negative_numbers = true, default_value_t = -1.5)]
    beta_max: f64,
    /// Grid step.
    #[arg(long, default_value_t = 0.5)]
    step: f64,
    /// Evaluation convention.
    #[arg(long, value_enum, default_value_t = ModeArg::Table)]
    mode: ModeArg,
}

#[derive(Debug, Subcommand)]
enum TableCmd {
    /// Recompute reference rows and compare.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    /// Which table.
    #[arg(long, value_enum, default_value_t = TableKind::Appendix)]
    which: TableKind,
    /// Only rows with this n.
    #[arg(long)]
    n: Option<u32>,
    /// Only rows with this k.
    #[arg(long)]
    k: Option<u32>,
}

#[derive(Debug, Subcommand)]
enum FbCmd {
    /// Indicial roots.
    Indicial(IndicialArgs),
    /// Cap potential constants and divergence sample.
    Caps(CapsArgs),
    /// Near-free-boundary relations for a terminal value eps.
    Eps(EpsArgs),
}

#[derive(Debug, Args)]
struct IndicialArgs {
    /// Dimension parameter n.
    #[arg(long)]
    n: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SideArg {
    Plus,
    Minus,
}

#[derive(Debug, Args)]
struct CapsArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Side of the cone.
    #[arg(long, value_enum, default_value_t = SideArg::Plus)]
    side: SideArg,
    /// Vertical shift.
    #[arg(long, default_value_t = 0.0)]
    shift: f64,
}

#[derive(Debug, Args)]
struct EpsArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Terminal value.
    #[arg(long)]
    eps: f64,
}

#[derive(Debug, Subcommand)]
enum VerifyCmd {
    /// Subsolution certificate.
    Sub(SubArgs),
    /// Supersolution certificate.
    Super(SuperArgs),
    /// Cap potential certificate.
    Caps(CapsArgs),
    /// Indicial interval and its containment of (-2.9, -2.1) for n = 7.
    Indicial(IndicialArgs),
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

/// A CSV cell.
enum Cell {
    F(f64),
    U(u64),
    B(bool),
    S(String),
    None,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => format!("{x:.16e}"),
            Cell::U(x) => x.to_string(),
            Cell::B(b) => b.to_string(),
            Cell::S(s) => s.clone(),
            Cell::None => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}
impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::U(x as u64)
    }
}
impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::B(x)
    }
}
impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.to_string())
    }
}
impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::None, Cell::F)
    }
}

fn csv_text(header: &[&str], rows: &[Vec<Cell>]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r.iter().map(Cell::render)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
}

fn json_text<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable report");
    s.push('\n');
    s
}

struct Output {
    path: Option<PathBuf>,
}

impl Output {
    fn emit(&self, text: &str) -> Result<(), Error> {
        match &self.path {
            Some(p) => write_file(p, text),
            None => {
                std::io::stdout()
                    .write_all(text.as_bytes())
                    .map_err(|e| Error::InvalidInput(format!("cannot write to stdout: {e}")))
            }
        }
    }

    fn sidecar(&self, suffix: &str, text: &str) -> Result<(), Error> {
        match &self.path {
            Some(p) => write_file(&p.with_extension(suffix), text),
            None => Ok(()),
        }
    }
}

fn write_file(p: &Path, text: &str) -> Result<(), Error> {
    fs::write(p, text).map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", p.display())))
}

fn code_for(e: &Error) -> i32 {
    if e.is_input_error() {
        EXIT_INVALID
    } else {
        EXIT_NUMERICAL
    }
}

fn trajectory_rows(traj: &ProfileTrajectory) -> Vec<Vec<Cell>> {
    traj.samples.iter().map(|s| vec![s.t.into(), s.f.into(), s.fp.into()]).collect()
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SolveSidecar {
    n: u32,
    k: u32,
    a: f64,
    t_a: f64,
    theta: f64,
    eps: Option<f64>,
    t_hat_eps: Option<f64>,
    terminal: TerminalEvent,
}

fn cmd_solve(args: &SolveArgs, common: &Common, out: &Output) -> Result<i32, Error> {
    let pair = args.pair.pair()?;
    let (sol, eps, t_hat) = match (args.theta, args.eps) {
        (Some(theta), None) => {
            let mut th = if args.degrees { theta.to_radians() } else { theta };
            if (th - FRAC_PI_2).abs() <= RIGHT_ANGLE_SNAP {
                th = FRAC_PI_2;
            }
            (solve_cone(pair, th)?, None, None)
        }
        (None, Some(eps)) => {
            let s = solve_near_half_pi(pair, eps)?;
            (s.cone, Some(eps), Some(s.t_hat_eps))
        }
        _ => return Err(Error::InvalidInput("exactly one of --theta and --eps is required".into())),
    };
    let side = SolveSidecar {
        n: pair.n,
        k: pair.k,
        a: sol.a,
        t_a: sol.t_a,
        theta: sol.theta,
        eps,
        t_hat_eps: t_hat,
        terminal: sol.trajectory.terminal,
    };
    let csv = csv_text(&["t", "f", "fprime"], &trajectory_rows(&sol.trajectory));
    match common.format {
        Format::Csv => {
            out.emit(&csv)?;
            out.sidecar("json", &json_text(&side))?;
        }
        Format::Json => out.emit(&json_text(&side))?,
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SweepSummary {
    n: u32,
    k: u32,
    members: Vec<SweepMemberSummary>,
    max_crossings: Option<usize>,
    ordered: Option<bool>,
}

#[derive(Serialize)]
struct SweepMemberSummary {
    param: f64,
    lawson: bool,
    terminal: TerminalEvent,
}

fn terminal_name(t: &TerminalEvent) -> &'static str {
    match t {
        TerminalEvent::ZeroCrossing { .. } => "zero",
        TerminalEvent::Blowup { .. } => "blowup",
        TerminalEvent::LawsonExact => "lawson",
    }
}

fn cmd_sweep(args: &SweepArgs, common: &Common, out: &Output) -> Result<i32, Error> {
    let pair = args.pair.pair()?;
    let a_star = pair.a_star();
    let mode = match args.mode {
        SweepKind::Heights => {
            if args.count < 2 || !(args.a_min > 0.0 && args.a_max > args.a_min) {
                return Err(Error::InvalidInput("need --count >= 2 and 0 < --a-min < --a-max".into()));
            }
            let mut heights: Vec<f64> = (0..args.count)
                .map(|i| a_star * (args.a_min + (args.a_max - args.a_min) * i as f64 / (args.count - 1) as f64))
                .collect();
            if !heights.iter().any(|h| (h - a_star).abs() <= 1e-12 * a_star) {
                heights.push(a_star);
            }
            SweepMode::VaryHeight { heights }
        }
        SweepKind::Lambda => SweepMode::VaryLambda { a: args.a * a_star, lambdas: args.lambdas.clone() },
    };
    let is_heights = matches!(mode, SweepMode::VaryHeight { .. });
    let sweep = family_sweep(&SweepRequest { pair, mode })?;
    let lawson_flag = |p: f64| is_heights && (p - a_star).abs() <= 1e-12 * a_star;
    let summary = SweepSummary {
        n: pair.n,
        k: pair.k,
        members: sweep
            .members
            .iter()
            .map(|m| SweepMemberSummary { param: m.param, lawson: lawson_flag(m.param), terminal: m.trajectory.terminal })
            .collect(),
        max_crossings: is_heights.then(|| sweep.crossings.iter().map(|c| c.crossings).max().unwrap_or(0)),
        ordered: sweep.ordered,
    };
    let mut rows = Vec::new();
    for m in &sweep.members {
        for s in &m.trajectory.samples {
            rows.push(vec![
                m.param.into(),
                s.t.into(),
                s.f.into(),
                s.fp.into(),
                terminal_name(&m.trajectory.terminal).into(),
                lawson_flag(m.param).into(),
            ]);
        }
    }
    match common.format {
        Format::Csv => {
            out.emit(&csv_text(&["param", "t", "f", "fprime", "terminal", "lawson"], &rows))?;
            out.sidecar("summary.json", &json_text(&summary))?;
        }
        Format::Json => out.emit(&json_text(&summary))?,
    }
    Ok(EXIT_OK)
}

fn sub_check(args: &SubArgs) -> Result<SubsolutionCheck, Error> {
    let pair = args.pair.pair()?;
    let alpha = match args.alpha {
        Some(a) => a,
        None => alpha_ledger(pair)
            .ok_or_else(|| Error::InvalidInput(format!("no ledger exponent for ({}, {}); pass --alpha", pair.n, pair.k)))?,
    };
    check_subsolution(pair, alpha)
}

fn sub_rows(c: &SubsolutionCheck) -> (Vec<&'static str>, Vec<Vec<Cell>>) {
    (
        vec!["n", "k", "alpha", "t0", "margin", "g_min", "t_min", "g_t0", "max_g_prime", "verdict"],
        vec![vec![
            c.pair.n.into(),
            c.pair.k.into(),
            c.alpha.into(),
            c.t0.into(),
            c.margin.into(),
            c.g_min.into(),
            c.t_min.into(),
            c.g_t0.into(),
            c.max_g_prime.into(),
            c.verdict.into(),
        ]],
    )
}

const SUPER_HEADER: [&str; 17] = [
    "n", "k", "beta", "t0", "tau", "A", "rbar", "a1", "a0", "rbar_minus_a", "max_qhat", "max_k0", "max_k1", "min_p",
    "s1_ok", "s2_ok", "s3_ok",
];

fn super_row(r: &VerificationReport) -> Vec<Cell> {
    let p = r.params;
    vec![
        p.pair.n.into(),
        p.pair.k.into(),
        p.beta.into(),
        p.t0.into(),
        p.tau.into(),
        p.big_a.into(),
        p.rbar.into(),
        p.a1.into(),
        p.a0.into(),
        r.rbar_minus_a.into(),
        r.max_qhat.into(),
        r.max_k0.into(),
        r.max_k1.into(),
        r.min_p.into(),
        r.s1_ok.into(),
        r.s2_ok.into(),
        r.s3_ok.into(),
    ]
}

fn emit_table<T: Serialize>(common: &Common, out: &Output, header: &[&str], rows: &[Vec<Cell>], json: &T) -> Result<(), Error> {
    match common.format {
        Format::Csv => out.emit(&csv_text(header, rows)),
        Format::Json => out.emit(&json_text(json)),
    }
}

fn cmd_barriers(cmd: &BarriersCmd, common: &Common, out: &Output) -> Result<i32, Error> {
    match cmd {
        BarriersCmd::Sub(a) => {
            let c = sub_check(a)?;
            let (h, rows) = sub_rows(&c);
            emit_table(common, out, &h, &rows, &c)?;
        }
        BarriersCmd::Super(a) => {
            let r = verify_supersolution_with(a.pair.pair()?, a.beta, a.mode.into())?;
            emit_table(common, out, &SUPER_HEADER, &[super_row(&r)], &r)?;
        }
        BarriersCmd::ScanBeta(a) => {
            let pair = a.pair.pair()?;
            let lo = a.beta_min.unwrap_or(2.0 - pair.n as f64 + a.step);
            if !(a.step > 0.0) || lo > a.beta_max {
                return Err(Error::InvalidInput("need --step > 0 and --beta-min <= --beta-max".into()));
            }
            let count = ((a.beta_max - lo) / a.step + 1e-9).floor() as usize + 1;
            let grid: Vec<f64> = (0..count).map(|i| lo + a.step * i as f64).collect();
            let scan = scan_beta(pair, &grid, a.mode.into())?;
            let rows: Vec<Vec<Cell>> = scan.verdicts.iter().map(|(b, ok)| vec![(*b).into(), (*ok).into()]).collect();
            emit_table(common, out, &["beta", "accepted"], &rows, &scan)?;
        }
    }
    Ok(EXIT_OK)
}

/// One reproduced table row.
#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    /// Reference row.
    pub reference: ReferenceRow,
    /// Recomputed columns (supersolution tables).
    pub computed: Option<[f64; 5]>,
    /// `(S'1, S'2, S'3)` verdicts (supersolution tables).
    pub verdicts: Option<[bool; 3]>,
    /// Stability margin (subsolution table).
    pub margin: Option<f64>,
    /// Subsolution verdict (subsolution table).
    pub sub_verdict: Option<bool>,
    /// Row reproduced within tolerance with all verdicts true.
    pub matched: bool,
    /// Error message when the row could not be computed.
    pub error: Option<String>,
}

fn reproduce_row(r: &ReferenceRow, abs: f64, rel: f64) -> TableRow {
    let mut row =
        TableRow { reference: *r, computed: None, verdicts: None, margin: None, sub_verdict: None, matched: false, error: None };
    let pair = match ConePair::new(r.n, r.k) {
        Ok(p) => p,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    match r.table {
        TableKind::Appendix | TableKind::Quadratics => match verify_supersolution_with(pair, r.param, EvalMode::Table) {
            Ok(rep) => {
                let cols = rep.columns();
                let close = r.columns().is_none_or(|want| cols.iter().zip(want).all(|(g, w)| matches_with(*g, w, abs, rel)));
                row.computed = Some(cols);
                row.verdicts = Some([rep.s1_ok, rep.s2_ok, rep.s3_ok]);
                row.matched = close && rep.all_ok();
            }
            Err(e) => row.error = Some(e.to_string()),
        },
        TableKind::Alpha => match check_subsolution(pair, r.param) {
            Ok(c) => {
                row.margin = Some(c.margin);
                row.sub_verdict = Some(c.verdict);
                row.matched = c.margin > 0.0 && c.verdict;
            }
            Err(e) => row.error = Some(e.to_string()),
        },
    }
    row
}

fn cmd_table(args: &ReproduceArgs, common: &Common, out: &Output) -> Result<i32, Error> {
    let rows: Vec<ReferenceRow> = table(args.which)
        .into_iter()
        .filter(|r| args.n.is_none_or(|n| r.n == n) && args.k.is_none_or(|k| r.k == k))
        .collect();
    if rows.is_empty() {
        return Err(Error::InvalidInput("no reference rows match the filter".into()));
    }
    let (abs, rel) = (common.tol_abs, common.tol_rel);
    let done: Vec<TableRow> = rows.par_iter().map(|r| reproduce_row(r, abs, rel)).collect();
    let header = [
        "table", "n", "k", "param", "rbar_minus_a", "max_qhat", "max_k0", "max_k1", "min_p", "ref_rbar_minus_a",
        "ref_max_qhat", "ref_max_k0", "ref_max_k1", "ref_min_p", "s1_ok", "s2_ok", "s3_ok", "margin", "sub_verdict",
        "matched",
    ];
    let cells: Vec<Vec<Cell>> = done
        .iter()
        .map(|t| {
            let r = t.reference;
            let name = match r.table {
                TableKind::Appendix => "appendix",
                TableKind::Quadratics => "quadratics",
                TableKind::Alpha => "alpha",
            };
            let mut v: Vec<Cell> = vec![name.into(), r.n.into(), r.k.into(), r.param.into()];
            for i in 0..5 {
                v.push(t.computed.map(|c| c[i]).into());
            }
            for x in [r.rbar_minus_a, r.max_qhat, r.max_k0, r.max_k1, r.min_p] {
                v.push(x.into());
            }
            for i in 0..3 {
                v.push(t.verdicts.map_or(Cell::None, |b| b[i].into()));
            }
            v.push(t.margin.into());
            v.push(t.sub_verdict.map_or(Cell::None, Cell::B));
            v.push(t.matched.into());
            v
        })
        .collect();
    emit_table(common, out, &header, &cells, &done)?;
    Ok(if done.iter().all(|t| t.matched) { EXIT_OK } else { EXIT_MISMATCH })
}

fn side_of(s: SideArg) -> Side {
    match s {
        SideArg::Plus => Side::Plus,
        SideArg::Minus => Side::Minus,
    }
}

/// Cap potential report.
#[derive(Debug, Clone, Serialize)]
pub struct CapsReport {
    /// Normalising constant.
    pub constants: CapConstants,
    /// Divergence sample.
    pub divergence: DivergenceReport,
    /// Minimum of the one-sided calibration cubic on `[0, 1]`.
    pub cubic_min: f64,
    /// Where the cubic minimum is attained.
    pub cubic_argmin: f64,
    /// Divergence positive on the sample.
    pub pass: bool,
}

fn caps_report(a: &CapsArgs) -> Result<CapsReport, Error> {
    let pair = a.pair.pair()?;
    let side = side_of(a.side);
    let pot = CapPotential::new(pair, side, a.shift)?;
    let constants = cap_constants(pair, side)?;
    let divergence = cap_divergence_check(&pot, &DivergenceGrid::default())?;
    let cubic = lawlor_cubic_min();
    Ok(CapsReport { constants, divergence, cubic_min: cubic.value, cubic_argmin: cubic.x, pass: divergence.positive })
}

/// Indicial report.
#[derive(Debug, Clone, Serialize)]
pub struct IndicialReport {
    /// Roots.
    pub data: IndicialData,
    /// `(-gamma_high, -gamma_low)` when real.
    pub interval: Option<(f64, f64)>,
    /// Whether `(-2.9, -2.1)` lies inside the interval.
    pub contains_reference: bool,
}

fn indicial_report(n: u32) -> Result<IndicialReport, Error> {
    let data = indicial_roots(n)?;
    Ok(IndicialReport {
        data,
        interval: data.real.then(|| data.interval()),
        contains_reference: data.contains(-2.9, -2.1),
    })
}

fn cmd_fb(cmd: &FbCmd, common: &Common, out: &Output) -> Result<i32, Error> {
    match cmd {
        FbCmd::Indicial(a) => {
            let r = indicial_report(a.n)?;
            let d = r.data;
            let rows = vec![vec![d.n.into(), d.gamma_low.into(), d.gamma_high.into(), d.imag.into(), d.real.into()]];
            emit_table(common, out, &["n", "gamma_low", "gamma_high", "imag", "real"], &rows, &r)?;
        }
        FbCmd::Caps(a) => {
            let r = caps_report(a)?;
            let c = r.constants;
            let rows = vec![vec![
                c.pair.n.into(),
                c.pair.k.into(),
                c.computed.into(),
                c.listed.into(),
                c.matches_reference.into(),
                r.divergence.min_scaled.into(),
                r.cubic_min.into(),
            ]];
            emit_table(
                common,
                out,
                &["n", "k", "constant", "listed_constant", "constant_matches", "min_scaled_divergence", "cubic_min"],
                &rows,
                &r,
            )?;
        }
        FbCmd::Eps(a) => {
            let d = near_half_pi_relations(a.pair.pair()?, a.eps)?;
            let rows = vec![vec![
                d.pair.n.into(),
                d.pair.k.into(),
                d.eps.into(),
                d.theta.into(),
                d.t_eps.into(),
                d.t_hat_eps.into(),
                d.aperture_slope.into(),
                d.tan_defect.into(),
                d.theta_defect.into(),
                d.gap_defect.into(),
                d.t_defect.into(),
            ]];
            emit_table(
                common,
                out,
                &[
                    "n", "k", "eps", "theta", "t_eps", "t_hat_eps", "aperture_slope", "tan_defect", "theta_defect",
                    "gap_defect", "t_defect",
                ],
                &rows,
                &d,
            )?;
        }
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct FailedCertificate {
    pass: bool,
    reason: String,
}

fn cmd_verify(cmd: &VerifyCmd, out: &Output) -> Result<i32, Error> {
    let (text, pass) = match cmd {
        VerifyCmd::Sub(a) => {
            let c = sub_check(a)?;
            (json_text(&c), c.verdict && c.margin > 0.0)
        }
        VerifyCmd::Super(a) => match verify_supersolution_with(a.pair.pair()?, a.beta, a.mode.into()) {
            Ok(r) => (json_text(&r), r.all_ok()),
            // A failed precondition or a missing matching point is a failed certificate.
            Err(e @ (Error::ConditionFailed(_) | Error::NoTau)) => {
                (json_text(&FailedCertificate { pass: false, reason: e.to_string() }), false)
            }
            Err(e) => return Err(e),
        },
        VerifyCmd::Caps(a) => {
            let r = caps_report(a)?;
            (json_text(&r), r.pass)
        }
        VerifyCmd::Indicial(a) => {
            let r = indicial_report(a.n)?;
            (json_text(&r), r.data.real)
        }
    };
    out.emit(&text)?;
    Ok(if pass { EXIT_OK } else { EXIT_MISMATCH })
}

fn dispatch(cli: &Cli) -> Result<i32, Error> {
    let out = Output { path: cli.common.out.clone() };
    let common = &cli.common;
    match &cli.command {
        Command::Solve(a) => cmd_solve(a, common, &out),
        Command::Family(FamilyCmd::Sweep(a)) => cmd_sweep(a, common, &out),
        Command::Barriers(c) => cmd_barriers(c, common, &out),
        Command::Table(TableCmd::Reproduce(a)) => cmd_table(a, common, &out),
        Command::Fb(c) => cmd_fb(c, common, &out),
        Command::Verify(c) => cmd_verify(c, &out),
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.common.jobs as usize).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_NUMERICAL;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            code_for(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_formatting_is_fixed() {
        let t = csv_text(&["x", "ok"], &[vec![0.1.into(), true.into()]]);
        assert_eq!(t, "x,ok\n1.0000000000000001e-1,true\n");
    }

    #[test]
    fn parse_errors_are_invalid_input() {
        assert_eq!(run(["cone", "solve", "--n", "7"]), EXIT_INVALID);
        assert_eq!(run(["cone", "solve", "--n", "7", "--k", "1", "--theta", "1", "--eps", "0.01"]), EXIT_INVALID);
    }
}
