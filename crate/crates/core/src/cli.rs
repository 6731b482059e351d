//! The `fident` command line.
//!
//! ```text
//! fident check|rotations|identify|fit|demo <spec.json> [--tol T] [--format text|json]
//!        [--starts N] [--seed S] [--truncate on|off] [--generic]
//! ```
//!
//! Exit codes: 0 when the requested property holds, 1 when a condition or
//! identification check fails, 2 on invalid input.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::conditions::{self, CheckOptions, ConditionReport, ConditionSet};
use crate::error::FidentError;
use crate::estimation::{
    self, FitOptions, FitResult, GeneratorConfig, ModeCensus, TruncationHandling,
};
use crate::identification::{self, IdentificationReport, ParameterVector};
use crate::model::{assemble_sigma, FactorSolution, Metric, ModelSpec};
use crate::rotation::{self, AdmissibleRotationSet, RotationOptions, RotationStructure};
use crate::spec_file::{self, LoadedSpec, ModelSpecFile, SpecFileError};

/// Significant digits of every number the CLI prints.
pub const SIGNIFICANT_DIGITS: usize = 12;

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_INPUT: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "fident",
    version,
    about = "Rotational uniqueness and identification checks for oblique factor models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the uniqueness conditions and regularity.
    Check {
        #[command(flatten)]
        common: Common,
        /// Condition set whose joint satisfaction decides the exit code.
        #[arg(long, value_enum, default_value_t = SetArg::C1c4)]
        set: SetArg,
    },
    /// Solve for the admissible rotation set.
    Rotations {
        #[command(flatten)]
        common: Common,
    },
    /// Jacobian rank rule for local identification.
    Identify {
        #[command(flatten)]
        common: Common,
        /// Evaluate at random realizations even when values are given.
        #[arg(long)]
        generic: bool,
    },
    /// Multi-start least-squares fit with a mode census.
    Fit {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// End-to-end walkthrough on a generated (or supplied) model.
    Demo {
        /// Optional specification with full numeric values.
        spec: Option<PathBuf>,
        #[command(flatten)]
        opts: CommonOpts,
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long, default_value_t = 5)]
        p: usize,
        #[arg(long, default_value_t = 2)]
        m: usize,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Model specification file.
    spec: PathBuf,
    #[command(flatten)]
    opts: CommonOpts,
}

#[derive(Debug, Args, Clone, Copy)]
struct CommonOpts {
    /// Relative rank tolerance (fraction of the largest singular value).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Args, Clone, Copy)]
struct FitArgs {
    #[arg(long, default_value_t = 32)]
    starts: usize,
    /// Keep the polarity truncations of the pattern during fitting.
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    truncate: Toggle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SetArg {
    C1c3,
    C1c4,
    C2cstar,
}

impl From<SetArg> for ConditionSet {
    fn from(s: SetArg) -> Self {
        match s {
            SetArg::C1c3 => ConditionSet::C1C3,
            SetArg::C1c4 => ConditionSet::C1C4,
            SetArg::C2cstar => ConditionSet::C2CStar,
        }
    }
}

/// Captured result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug)]
enum CliError {
    Spec(SpecFileError),
    Model(FidentError),
    Usage(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Spec(e) => write!(f, "{e}"),
            CliError::Model(e) => write!(f, "{e}"),
            CliError::Usage(e) => write!(f, "{e}"),
        }
    }
}

impl From<SpecFileError> for CliError {
    fn from(e: SpecFileError) -> Self {
        CliError::Spec(e)
    }
}

impl From<FidentError> for CliError {
    fn from(e: FidentError) -> Self {
        CliError::Model(e)
    }
}

// ---------------------------------------------------------------- outputs

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutput {
    pub set: ConditionSet,
    pub pass: bool,
    pub failures: Vec<String>,
    pub report: ConditionReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationsOutput {
    pub unique: bool,
    pub set: AdmissibleRotationSet,
    /// Sign vectors of a finite set.
    pub members: Vec<Vec<i8>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartRecord {
    pub start_index: usize,
    pub discrepancy: f64,
    pub converged: bool,
    pub iterations: usize,
    pub orbit_label: Option<Vec<i8>>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutput {
    pub truncate: bool,
    pub starts: usize,
    pub seed: u64,
    pub best: ModelSpecFile,
    pub best_discrepancy: f64,
    pub results: Vec<StartRecord>,
    pub census: ModeCensus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoRotations {
    pub covariance_without_truncations: AdmissibleRotationSet,
    pub correlation_without_truncations: AdmissibleRotationSet,
    pub correlation_with_truncations: AdmissibleRotationSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoOutput {
    pub seed: u64,
    pub model: ModelSpecFile,
    pub check: CheckOutput,
    pub rotations: DemoRotations,
    pub identify: IdentificationReport,
    pub fit_without_truncations: FitOutput,
    pub fit_with_truncations: FitOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ErrorOutput {
    error: String,
}

// ---------------------------------------------------------------- numbers

fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

/// Round every floating-point number in `v` to [`SIGNIFICANT_DIGITS`].
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n
                .as_f64()
                .map(round_sig)
                .and_then(serde_json::Number::from_f64)
            {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Pretty JSON with rounded numbers and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("outputs serialize");
    round_json(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("values serialize");
    s.push('\n');
    s
}

/// A number with [`SIGNIFICANT_DIGITS`] significant digits, trailing zeros dropped.
pub fn fmt_num(x: f64) -> String {
    let r = round_sig(x);
    let a = r.abs();
    if r == 0.0 || (1e-4..1e12).contains(&a) {
        format!("{r}")
    } else if r.is_finite() {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

fn fmt_matrix(out: &mut String, name: &str, a: &DMatrix<f64>) {
    let _ = writeln!(out, "{name}:");
    for row in a.row_iter() {
        let cells: Vec<String> = row.iter().map(|&x| format!("{:>16}", fmt_num(x))).collect();
        let _ = writeln!(out, "  {}", cells.join(" "));
    }
}

fn fmt_signs(s: &[i8]) -> String {
    let parts: Vec<&str> = s.iter().map(|&x| if x < 0 { "-" } else { "+" }).collect();
    format!("({})", parts.join(""))
}

fn one_based(cols: &[usize]) -> String {
    cols.iter()
        .map(|k| (k + 1).to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

// ---------------------------------------------------------------- commands

fn validate_tol(tol: Option<f64>) -> Result<(), CliError> {
    match tol {
        Some(t) if !(t > 0.0 && t < 1.0) => Err(CliError::Usage(format!(
            "--tol must lie in (0, 1), got {t}"
        ))),
        _ => Ok(()),
    }
}

fn run_check(
    loaded: &LoadedSpec,
    opts: CommonOpts,
    set: ConditionSet,
) -> Result<CheckOutput, CliError> {
    let check_opts = CheckOptions {
        rank_tol: opts.tol,
        seed: opts.seed,
        ..CheckOptions::default()
    };
    let mut report = conditions::evaluate(&loaded.spec, loaded.solution.as_ref(), check_opts)?;
    if loaded.solution.is_none() {
        if let Some(lambda) = &loaded.lambda {
            report.c2 = conditions::check_c2(lambda, &loaded.spec.pattern, opts.tol)?;
            report.c4 = conditions::check_c4_with_values(&loaded.spec.pattern, lambda);
        }
    }
    let mut failures = report.failures(set);
    if !report.regularity.pass() {
        failures.push(regularity_message(&report));
    }
    Ok(CheckOutput {
        set,
        pass: failures.is_empty(),
        failures,
        report,
    })
}

fn regularity_message(report: &ConditionReport) -> String {
    let r = &report.regularity;
    let mut parts = Vec::new();
    if r.rank_ok == Some(false) {
        parts.push(format!(
            "(a) rank lambda = {:?} < m",
            r.lambda_rank.unwrap_or(0)
        ));
    }
    if r.psi_positive == Some(false) {
        parts.push("(b) psi not positive".to_string());
    }
    if !r.df_ok {
        parts.push(format!("(c) (p - m)^2 - p - m = {} < 0", r.df));
    }
    format!("regularity fails: {}", parts.join("; "))
}

fn rotations_for(
    lambda: &DMatrix<f64>,
    spec: &ModelSpec,
    tol: Option<f64>,
) -> Result<AdmissibleRotationSet, CliError> {
    let opts = RotationOptions {
        rank_tol: tol,
        ..RotationOptions::default()
    };
    Ok(rotation::admissible_rotations(
        lambda,
        &spec.pattern,
        spec.metric,
        opts,
    )?)
}

fn run_rotations(loaded: &LoadedSpec, opts: CommonOpts) -> Result<RotationsOutput, CliError> {
    let lambda = loaded
        .lambda
        .as_ref()
        .ok_or_else(|| CliError::Usage("rotations needs numeric lambda values".into()))?;
    let set = rotations_for(lambda, &loaded.spec, opts.tol)?;
    Ok(RotationsOutput {
        unique: set.is_identity(),
        members: set.sign_flip_members(),
        set,
    })
}

fn run_identify(
    loaded: &LoadedSpec,
    opts: CommonOpts,
    generic: bool,
) -> Result<IdentificationReport, CliError> {
    match (&loaded.solution, generic) {
        (Some(sol), false) => {
            let theta = ParameterVector::from_solution(&loaded.spec, sol)?;
            Ok(identification::wald_rank(&theta, opts.tol)?)
        }
        _ => Ok(identification::wald_rank_generic(
            &loaded.spec,
            opts.seed,
            opts.tol,
        )?),
    }
}

fn target_covariance(loaded: &LoadedSpec) -> Result<DMatrix<f64>, CliError> {
    match (&loaded.sample_cov, &loaded.solution) {
        (Some(s), _) => Ok(s.clone()),
        (None, Some(sol)) => Ok(assemble_sigma(sol)),
        (None, None) => Err(CliError::Usage(
            "fit needs sample_cov or a full numeric solution".into(),
        )),
    }
}

fn run_fit(
    spec: &ModelSpec,
    s_matrix: &DMatrix<f64>,
    seed: u64,
    args: FitArgs,
) -> Result<FitOutput, CliError> {
    if args.starts == 0 {
        return Err(CliError::Usage("--starts must be at least 1".into()));
    }
    let truncate = args.truncate == Toggle::On;
    let pattern = if truncate {
        spec.pattern.clone()
    } else {
        spec.pattern.without_truncations()
    };
    let opts = FitOptions {
        truncation: TruncationHandling::Project,
        ..FitOptions::default()
    };
    let results = estimation::fit(s_matrix, &pattern, spec.metric, args.starts, seed, &opts)?;
    let census = estimation::mode_census(&results, opts.orbit_tol);
    let best = &results[0];
    let best_spec = ModelSpec::new(pattern, spec.metric);
    Ok(FitOutput {
        truncate,
        starts: args.starts,
        seed,
        best: ModelSpecFile::from_model(&best_spec, Some(&best.solution)),
        best_discrepancy: best.discrepancy,
        results: results.iter().map(start_record).collect(),
        census,
    })
}

fn start_record(r: &FitResult) -> StartRecord {
    StartRecord {
        start_index: r.start_index,
        discrepancy: r.discrepancy,
        converged: r.converged,
        iterations: r.iterations,
        orbit_label: r.orbit_label.clone(),
        note: r.note.clone(),
    }
}

fn demo_model(
    spec: Option<&PathBuf>,
    p: usize,
    m: usize,
    seed: u64,
) -> Result<(ModelSpec, FactorSolution), CliError> {
    match spec {
        Some(path) => {
            let loaded = spec_file::load(path)?;
            let sol = loaded.solution.ok_or_else(|| {
                CliError::Usage("demo needs lambda, phi and psi in the specification".into())
            })?;
            Ok((loaded.spec, sol))
        }
        None => {
            let (pattern, sol) = estimation::generate_model(&GeneratorConfig::new(p, m, seed))?;
            Ok((ModelSpec::new(pattern, Metric::Correlation), sol))
        }
    }
}

fn run_demo(
    spec: ModelSpec,
    sol: FactorSolution,
    opts: CommonOpts,
    fit: FitArgs,
) -> Result<DemoOutput, CliError> {
    let loaded = LoadedSpec {
        lambda: Some(sol.lambda().clone()),
        solution: Some(sol.clone()),
        sample_cov: None,
        spec: spec.clone(),
    };
    let check = run_check(&loaded, opts, ConditionSet::C1C4)?;
    let bare = spec.pattern.without_truncations();
    let rotations = DemoRotations {
        covariance_without_truncations: rotations_for(
            sol.lambda(),
            &ModelSpec::new(bare.clone(), Metric::Covariance),
            opts.tol,
        )?,
        correlation_without_truncations: rotations_for(
            sol.lambda(),
            &ModelSpec::new(bare, Metric::Correlation),
            opts.tol,
        )?,
        correlation_with_truncations: rotations_for(sol.lambda(), &spec, opts.tol)?,
    };
    let identify = run_identify(&loaded, opts, false)?;
    let s_matrix = assemble_sigma(&sol);
    let off = FitArgs {
        truncate: Toggle::Off,
        ..fit
    };
    let on = FitArgs {
        truncate: Toggle::On,
        ..fit
    };
    Ok(DemoOutput {
        seed: opts.seed,
        model: ModelSpecFile::from_model(&spec, Some(&sol)),
        check,
        rotations,
        identify,
        fit_without_truncations: run_fit(&spec, &s_matrix, opts.seed, off)?,
        fit_with_truncations: run_fit(&spec, &s_matrix, opts.seed, on)?,
    })
}

// ---------------------------------------------------------------- text

fn text_check(out: &CheckOutput) -> String {
    let r = &out.report;
    let mut s = String::new();
    let verdict = |b: bool| if b { "pass" } else { "FAIL" };
    let _ = writeln!(
        s,
        "C1  {}  fixed zeros per column {:?} (need {})",
        verdict(r.c1.pass),
        r.c1.zero_counts,
        r.c1.required
    );
    let mode = match r.c2.mode {
        conditions::RankMode::AtValues => "at values",
        conditions::RankMode::Generic => "generic",
    };
    let _ = writeln!(
        s,
        "C2  {}  rank of each constrained submatrix {:?} (need {}, {mode})",
        verdict(r.c2.pass),
        r.c2.ranks,
        r.c2.required
    );
    let c3_detail = match (&r.c3.numeric, r.c3.imposed_by_metric) {
        (_, false) => "covariance metric leaves diag(phi) free".to_string(),
        (Some(n), true) => format!("max |diag(phi) - 1| = {}", fmt_num(n.max_deviation)),
        (None, true) => "imposed by the correlation metric".to_string(),
    };
    let _ = writeln!(s, "C3  {}  {c3_detail}", verdict(r.c3.pass));
    let trunc: Vec<String> =
        r.c4.truncated_rows
            .iter()
            .map(|t| t.map_or("-".to_string(), |j| (j + 1).to_string()))
            .collect();
    let _ = writeln!(
        s,
        "C4  {}  truncated row per column [{}]",
        verdict(r.c4.pass),
        trunc.join(", ")
    );
    let sel: Vec<String> = r
        .cstar
        .selected_rows
        .iter()
        .map(|t| t.map_or("-".to_string(), |j| (j + 1).to_string()))
        .collect();
    let _ = writeln!(
        s,
        "C*  {}  fixed-value row per column [{}]",
        verdict(r.cstar.pass),
        sel.join(", ")
    );
    let g = &r.regularity;
    let _ = writeln!(
        s,
        "regularity  {}  rank lambda {}, psi > 0 {}, df {}",
        verdict(g.pass()),
        g.lambda_rank.map_or("n/a".to_string(), |x| x.to_string()),
        g.psi_positive.map_or("n/a".to_string(), |x| x.to_string()),
        g.df
    );
    let c = &r.restrictions;
    let _ = writeln!(
        s,
        "restrictions  zeros {}, fixed values {}, truncations {}; minimal C1-C4 {}, C2-C* {}",
        c.fixed_zero_count,
        c.fixed_value_count,
        c.truncation_count,
        c.minimal_c1c4,
        c.minimal_c2cstar
    );
    let set = match out.set {
        ConditionSet::C1C3 => "C1-C3",
        ConditionSet::C1C4 => "C1-C4",
        ConditionSet::C2CStar => "C2-C*",
    };
    if out.pass {
        let _ = writeln!(s, "{set}: pass");
    } else {
        let _ = writeln!(s, "{set}: FAIL");
        for f in &out.failures {
            let _ = writeln!(s, "  {f}");
        }
    }
    s
}

fn text_rotation_set(s: &mut String, set: &AdmissibleRotationSet) {
    let desc = match &set.structure {
        RotationStructure::FullGroup => "FullGroup: no column is constrained".to_string(),
        RotationStructure::Underdetermined { columns } => {
            let dims: Vec<String> = columns
                .iter()
                .map(|&k| {
                    format!(
                        "column {} null-space dimension {}",
                        k + 1,
                        set.columns[k].nullspace_dim
                    )
                })
                .collect();
            format!("DiagonalScalings NOT established: {}", dims.join(", "))
        }
        RotationStructure::DiagonalScalings { .. } => {
            "DiagonalScalings (each column rescalable)".to_string()
        }
        RotationStructure::SignFlips { columns } => format!(
            "SignFlips ({} members, free column(s) {})",
            1usize << columns.len(),
            one_based(columns)
        ),
        RotationStructure::Identity => "Identity: globally rotationally unique".to_string(),
        RotationStructure::Empty => "Empty: no admissible rotation".to_string(),
    };
    let _ = writeln!(s, "{desc}");
    for (k, c) in set.columns.iter().enumerate() {
        let align = c.alignment.map_or("n/a".to_string(), fmt_num);
        let _ = writeln!(
            s,
            "  column {}: null space dim {}, axis alignment {}, {:?}",
            k + 1,
            c.nullspace_dim,
            align,
            c.freedom
        );
    }
    let members = set.sign_flip_members();
    if members.len() > 1 {
        let labels: Vec<String> = members.iter().map(|m| fmt_signs(m)).collect();
        let _ = writeln!(s, "  members: {}", labels.join(" "));
    }
}

fn text_rotations(out: &RotationsOutput) -> String {
    let mut s = String::new();
    text_rotation_set(&mut s, &out.set);
    let _ = writeln!(
        s,
        "{}",
        if out.unique {
            "unique: yes"
        } else {
            "unique: no"
        }
    );
    s
}

fn text_identify(r: &IdentificationReport) -> String {
    let mut s = String::new();
    let mode = match r.mode {
        conditions::RankMode::AtValues => "at values".to_string(),
        conditions::RankMode::Generic => format!("generic, draw ranks {:?}", r.draw_ranks),
    };
    let _ = writeln!(
        s,
        "parameters t = {}, moments s = {}, df = {}",
        r.t, r.s, r.df
    );
    let _ = writeln!(s, "jacobian rank = {} ({mode})", r.jacobian_rank);
    for (i, d) in r.null_directions.iter().enumerate() {
        let mut idx: Vec<usize> = (0..d.len()).collect();
        idx.sort_by(|&a, &b| d[b].abs().total_cmp(&d[a].abs()).then(a.cmp(&b)));
        let top: Vec<String> = idx
            .iter()
            .take(4)
            .filter(|&&j| d[j].abs() > 1e-8)
            .map(|&j| format!("{} {}", r.parameter_labels[j], fmt_num(d[j])))
            .collect();
        let _ = writeln!(s, "null direction {}: {}", i + 1, top.join(", "));
    }
    if !r.boundary_parameters.is_empty() {
        let names: Vec<&str> = r
            .boundary_parameters
            .iter()
            .map(|&j| r.parameter_labels[j].as_str())
            .collect();
        let _ = writeln!(s, "at truncation bound: {}", names.join(", "));
    }
    let _ = writeln!(
        s,
        "locally identified: {}",
        if r.locally_identified { "yes" } else { "no" }
    );
    s
}

fn text_fit(out: &FitOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} starts (seed {}), truncations {}",
        out.starts,
        out.seed,
        if out.truncate { "on" } else { "off" }
    );
    let _ = writeln!(s, "best discrepancy {}", fmt_num(out.best_discrepancy));
    if let Some(l) = &out.best.lambda {
        fmt_matrix(
            &mut s,
            "lambda",
            &DMatrix::from_row_iterator(out.best.p, out.best.m, l.iter().flatten().copied()),
        );
    }
    let _ = writeln!(
        s,
        "modes: {} labelled, {} unconverged start(s)",
        out.census.labelled_modes(),
        out.census.unconverged
    );
    for m in &out.census.modes {
        let label = m
            .label
            .as_deref()
            .map_or("outside orbit".to_string(), fmt_signs);
        let _ = writeln!(
            s,
            "  {label:>14}  {} start(s), discrepancy {} .. {}, spread {}",
            m.count,
            fmt_num(m.min_discrepancy),
            fmt_num(m.max_discrepancy),
            fmt_num(m.max_spread)
        );
    }
    let mut noted: Vec<_> = out.results.iter().filter(|r| r.note.is_some()).collect();
    noted.sort_by_key(|r| r.start_index);
    for r in noted {
        let _ = writeln!(
            s,
            "  start {}: {}",
            r.start_index,
            r.note.as_deref().unwrap_or_default()
        );
    }
    s
}

fn text_demo(out: &DemoOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "== model (p = {}, m = {}, seed {})",
        out.model.p, out.model.m, out.seed
    );
    if let Some(l) = &out.model.lambda {
        fmt_matrix(
            &mut s,
            "lambda",
            &DMatrix::from_row_iterator(out.model.p, out.model.m, l.iter().flatten().copied()),
        );
    }
    let _ = writeln!(s, "\n== check");
    s.push_str(&text_check(&out.check));
    let _ = writeln!(s, "\n== rotations, covariance metric, no truncations");
    text_rotation_set(&mut s, &out.rotations.covariance_without_truncations);
    let _ = writeln!(s, "\n== rotations, correlation metric, no truncations");
    text_rotation_set(&mut s, &out.rotations.correlation_without_truncations);
    let _ = writeln!(s, "\n== rotations, correlation metric, with truncations");
    text_rotation_set(&mut s, &out.rotations.correlation_with_truncations);
    let _ = writeln!(s, "\n== identify");
    s.push_str(&text_identify(&out.identify));
    let _ = writeln!(s, "\n== fit");
    s.push_str(&text_fit(&out.fit_without_truncations));
    let _ = writeln!(s);
    s.push_str(&text_fit(&out.fit_with_truncations));
    s
}

// ---------------------------------------------------------------- driver

fn emit<T: Serialize>(value: &T, format: Format, text: impl FnOnce(&T) -> String) -> String {
    match format {
        Format::Json => to_json(value),
        Format::Text => text(value),
    }
}

fn execute(cmd: Command) -> (Format, Result<(u8, String), CliError>) {
    match cmd {
        Command::Check { common, set } => {
            let f = common.opts.format;
            (
                f,
                (|| {
                    validate_tol(common.opts.tol)?;
                    let loaded = spec_file::load(&common.spec)?;
                    let out = run_check(&loaded, common.opts, set.into())?;
                    Ok((code(out.pass), emit(&out, f, text_check)))
                })(),
            )
        }
        Command::Rotations { common } => {
            let f = common.opts.format;
            (
                f,
                (|| {
                    validate_tol(common.opts.tol)?;
                    let loaded = spec_file::load(&common.spec)?;
                    let out = run_rotations(&loaded, common.opts)?;
                    Ok((code(out.unique), emit(&out, f, text_rotations)))
                })(),
            )
        }
        Command::Identify { common, generic } => {
            let f = common.opts.format;
            (
                f,
                (|| {
                    validate_tol(common.opts.tol)?;
                    let loaded = spec_file::load(&common.spec)?;
                    let out = run_identify(&loaded, common.opts, generic)?;
                    Ok((code(out.locally_identified), emit(&out, f, text_identify)))
                })(),
            )
        }
        Command::Fit { common, fit } => {
            let f = common.opts.format;
            (
                f,
                (|| {
                    validate_tol(common.opts.tol)?;
                    let loaded = spec_file::load(&common.spec)?;
                    let s_matrix = target_covariance(&loaded)?;
                    let out = run_fit(&loaded.spec, &s_matrix, common.opts.seed, fit)?;
                    let ok = out.results[0].converged;
                    Ok((code(ok), emit(&out, f, text_fit)))
                })(),
            )
        }
        Command::Demo {
            spec,
            opts,
            fit,
            p,
            m,
        } => {
            let f = opts.format;
            (
                f,
                (|| {
                    validate_tol(opts.tol)?;
                    let (model, sol) = demo_model(spec.as_ref(), p, m, opts.seed)?;
                    let out = run_demo(model, sol, opts, fit)?;
                    Ok((EXIT_PASS, emit(&out, f, text_demo)))
                })(),
            )
        }
    }
}

fn code(pass: bool) -> u8 {
    if pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

/// Parse `args` (including the program name) and run, capturing all output.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let informational = !e.use_stderr();
            let rendered = e.render().to_string();
            return if informational {
                Outcome {
                    code: EXIT_PASS,
                    stdout: rendered,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code: EXIT_INPUT,
                    stdout: String::new(),
                    stderr: rendered,
                }
            };
        }
    };
    match execute(cli.command) {
        (_, Ok((code, stdout))) => Outcome {
            code,
            stdout,
            stderr: String::new(),
        },
        (format, Err(e)) => {
            let message = e.to_string();
            Outcome {
                code: EXIT_INPUT,
                stdout: match format {
                    Format::Json => to_json(&ErrorOutput {
                        error: message.clone(),
                    }),
                    Format::Text => String::new(),
                },
                stderr: format!("error: {message}\n"),
            }
        }
    }
}

/// Entry point of the `fident` binary.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let outcome = run(args);
    print!("{}", outcome.stdout);
    eprint!("{}", outcome.stderr);
    ExitCode::from(outcome.code)
}
