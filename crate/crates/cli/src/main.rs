//! `gms`: generate instances, solve formulations, compare relaxations,
//! run the verification program and export models.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gms_core::bnb::{bnb_solve_traced, NodeTrace};
use gms_core::simplex::lp_solve_with_dump;
use gms_core::tightness::{compare_all, DEFAULT_SAMPLES};
use gms_core::verify::DEFAULT_SEED;
use gms_core::{
    build, generate, lp_format, validate, verify_paper, FormulationId, GenerationProfile, Instance, LpSolution,
    LpStatus, MipSolution, MipStatus,
};

/// Default branch-and-bound node budget.
const DEFAULT_NODE_LIMIT: usize = 100_000;

#[derive(Parser, Debug)]
#[command(name = "gms", version, about = "Maintenance scheduling formulations: build, solve, compare, verify")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Log solver diagnostics to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a seeded random instance as JSON.
    Gen(RunArgs),
    /// Solve the LP relaxation and the integer program of one formulation.
    Solve(RunArgs),
    /// Compare the relaxations of all 21 formulation pairs.
    Compare(RunArgs),
    /// Run every verification check and report pass/fail.
    VerifyPaper(RunArgs),
    /// Write one formulation as a CPLEX LP file.
    Export(RunArgs),
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// Formulation F1..F7.
    #[arg(long, value_parser = parse_formulation)]
    formulation: Option<FormulationId>,
    /// Instance JSON file.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Sampled vertices per relaxation for compare.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    /// Branch-and-bound LP solves before giving up.
    #[arg(long, default_value_t = DEFAULT_NODE_LIMIT)]
    node_limit: usize,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Enable the capacity coupling rows.
    #[arg(long, conflicts_with = "no_coupling")]
    coupling: bool,
    /// Disable the capacity coupling rows.
    #[arg(long)]
    no_coupling: bool,
    /// Per-node branch-and-bound trace as CSV (solve).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Number of periods (gen).
    #[arg(long, default_value_t = 12)]
    horizon: usize,
    /// Number of maintenance tasks (gen).
    #[arg(long, default_value_t = 3)]
    tasks: usize,
    /// Final simplex tableau of the root LP as text (solve).
    #[arg(long)]
    dump_tableau: Option<PathBuf>,
}

fn parse_formulation(s: &str) -> Result<FormulationId, String> {
    s.parse().map_err(|e: gms_core::Error| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Lp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CommandKind {
    Gen,
    Solve,
    Compare,
    VerifyPaper,
    Export,
}

/// Everything one invocation needs, after flag parsing.
#[derive(Debug, Clone)]
struct RunConfig {
    command: CommandKind,
    formulation: Option<FormulationId>,
    instance_path: Option<PathBuf>,
    seed: u64,
    samples: usize,
    node_limit: usize,
    output_path: Option<PathBuf>,
    format: Format,
    coupling: Option<bool>,
    trace_path: Option<PathBuf>,
    horizon: usize,
    tasks: usize,
    dump_tableau: Option<PathBuf>,
}

impl RunConfig {
    fn from_cli(command: Command) -> Result<Self, Failure> {
        let (kind, args) = match command {
            Command::Gen(a) => (CommandKind::Gen, a),
            Command::Solve(a) => (CommandKind::Solve, a),
            Command::Compare(a) => (CommandKind::Compare, a),
            Command::VerifyPaper(a) => (CommandKind::VerifyPaper, a),
            Command::Export(a) => (CommandKind::Export, a),
        };
        let (default_format, allowed): (Format, &[Format]) = match kind {
            CommandKind::Gen | CommandKind::Solve | CommandKind::VerifyPaper => (Format::Json, &[Format::Json]),
            CommandKind::Compare => (Format::Csv, &[Format::Csv, Format::Json]),
            CommandKind::Export => (Format::Lp, &[Format::Lp]),
        };
        let format = args.format.unwrap_or(default_format);
        if !allowed.contains(&format) {
            return Err(Failure::Usage(format!(
                "--format {} is not available for this command",
                format.to_possible_value().expect("no skipped variants").get_name()
            )));
        }
        let coupling = match (args.coupling, args.no_coupling) {
            (true, _) => Some(true),
            (_, true) => Some(false),
            _ => None,
        };
        let config = RunConfig {
            command: kind,
            formulation: args.formulation,
            instance_path: args.instance,
            seed: args.seed,
            samples: args.samples,
            node_limit: args.node_limit,
            output_path: args.out,
            format,
            coupling,
            trace_path: args.trace,
            horizon: args.horizon,
            tasks: args.tasks,
            dump_tableau: args.dump_tableau,
        };
        config.check_required()?;
        Ok(config)
    }

    fn check_required(&self) -> Result<(), Failure> {
        let needs_formulation = matches!(self.command, CommandKind::Solve | CommandKind::Export);
        let needs_instance = matches!(
            self.command,
            CommandKind::Solve | CommandKind::Export | CommandKind::Compare
        );
        if needs_formulation && self.formulation.is_none() {
            return Err(Failure::Usage("--formulation is required".into()));
        }
        if needs_instance && self.instance_path.is_none() {
            return Err(Failure::Usage("--instance is required".into()));
        }
        if self.node_limit == 0 {
            return Err(Failure::Usage("--node-limit must be positive".into()));
        }
        Ok(())
    }
}

/// Why a run did not succeed, mapped to the process exit status.
#[derive(Debug)]
enum Failure {
    /// Bad flag combination.
    Usage(String),
    /// Unreadable or malformed input file.
    Input(String),
    /// A solver stopped at its iteration or node limit; output was written.
    SolverLimit(String),
    /// At least one verification check failed; output was written.
    Verification(String),
    Other(anyhow::Error),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Input(_) => 2,
            Failure::SolverLimit(_) => 3,
            Failure::Verification(_) => 1,
            Failure::Other(_) => 4,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

impl From<gms_core::Error> for Failure {
    fn from(e: gms_core::Error) -> Self {
        Failure::Other(e.into())
    }
}

/// Line of the first occurrence of `"key"` in `text`, 1-based.
#[derive(Debug, Clone, PartialEq)]
enum Segment {
    Key(String),
    Index(usize),
}

/// Splits a violation field such as `tasks[0].duration` into path segments.
fn parse_field(field: &str) -> Vec<Segment> {
    let mut out = Vec::new();
    for part in field.split('.') {
        let mut pieces = part.split('[');
        if let Some(key) = pieces.next().filter(|k| !k.is_empty()) {
            out.push(Segment::Key(key.to_string()));
        }
        for index in pieces {
            if let Ok(i) = index.trim_end_matches(']').parse() {
                out.push(Segment::Index(i));
            }
        }
    }
    out
}

enum Frame {
    Object(Option<String>),
    Array(usize),
}

/// Line of the JSON value addressed by `field`, or of its deepest present ancestor.
fn line_of_field(text: &str, field: &str) -> Option<usize> {
    let target = parse_field(field);
    let mut stack: Vec<Frame> = Vec::new();
    let mut best: Option<(usize, usize)> = None;
    let mut line = 1;
    let mut expect_key = false;
    let mut chars = text.chars().peekable();
    let mut value_starts = |stack: &[Frame], line: usize| {
        let path: Vec<Segment> = stack
            .iter()
            .filter_map(|f| match f {
                Frame::Object(key) => key.clone().map(Segment::Key),
                Frame::Array(i) => Some(Segment::Index(*i)),
            })
            .collect();
        if path.len() == stack.len() && target.starts_with(&path) && best.is_none_or(|(depth, _)| path.len() > depth) {
            best = Some((path.len(), line));
        }
    };
    while let Some(c) = chars.next() {
        match c {
            '\n' => line += 1,
            '"' => {
                let mut s = String::new();
                while let Some(c) = chars.next() {
                    match c {
                        '\\' => {
                            chars.next();
                        }
                        '"' => break,
                        c => s.push(c),
                    }
                }
                if expect_key {
                    if let Some(Frame::Object(key)) = stack.last_mut() {
                        *key = Some(s);
                    }
                    expect_key = false;
                } else {
                    value_starts(&stack, line);
                }
            }
            '{' => {
                value_starts(&stack, line);
                stack.push(Frame::Object(None));
                expect_key = true;
            }
            '[' => {
                value_starts(&stack, line);
                stack.push(Frame::Array(0));
            }
            '}' | ']' => {
                stack.pop();
            }
            ',' => match stack.last_mut() {
                Some(Frame::Array(i)) => *i += 1,
                Some(Frame::Object(_)) => expect_key = true,
                None => {}
            },
            c if c.is_whitespace() || c == ':' => {}
            _ => {
                value_starts(&stack, line);
                while chars.peek().is_some_and(|c| !matches!(c, ',' | '}' | ']') && !c.is_whitespace()) {
                    chars.next();
                }
            }
        }
    }
    best.map(|(_, line)| line)
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let instance: Instance = serde_json::from_str(&text).map_err(|e| {
        let message = e.to_string();
        let message = message.split(" at line ").next().unwrap_or_default();
        Failure::Input(format!("{}:{}:{}: {message}", path.display(), e.line(), e.column()))
    })?;
    let violations = validate(&instance);
    if let Some(first) = violations.first() {
        let line = line_of_field(&text, &first.field).unwrap_or(1);
        let all: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(Failure::Input(format!(
            "{}:{line}: invalid instance: {}",
            path.display(),
            all.join("; ")
        )));
    }
    Ok(instance)
}

fn write_output(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).context("writing standard output")?;
            stdout.flush().context("writing standard output")
        }
    }
}

fn to_json(value: &impl Serialize) -> anyhow::Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn instance_for(config: &RunConfig) -> Result<Instance, Failure> {
    let path = config.instance_path.as_deref().expect("checked by check_required");
    let mut instance = load_instance(path)?;
    if let Some(enabled) = config.coupling {
        instance = instance.with_coupling(enabled);
        let violations = validate(&instance);
        if !violations.is_empty() {
            let all: Vec<String> = violations.iter().map(ToString::to_string).collect();
            return Err(Failure::Input(format!("{}: {}", path.display(), all.join("; "))));
        }
    }
    Ok(instance)
}

fn run_gen(config: &RunConfig) -> Result<(), Failure> {
    let profile = GenerationProfile {
        coupled: config.coupling.unwrap_or(false),
        ..GenerationProfile::default()
    };
    let instance =
        generate(config.seed, config.horizon, config.tasks, &profile).map_err(|e| Failure::Usage(e.to_string()))?;
    write_output(config.output_path.as_deref(), &instance.to_json_string())?;
    Ok(())
}

#[derive(Serialize)]
struct SolveReport<'a> {
    formulation: FormulationId,
    instance: String,
    coupling: bool,
    lp: &'a LpSolution,
    mip: &'a MipSolution,
}

fn run_solve(config: &RunConfig) -> Result<(), Failure> {
    let instance = instance_for(config)?;
    let id = config.formulation.expect("checked by check_required");
    let model = build(id, &instance)?;
    let (lp, dump) = lp_solve_with_dump(&model);
    if let Some(path) = &config.dump_tableau {
        fs::write(path, dump.to_text()).with_context(|| format!("writing {}", path.display()))?;
    }
    let mut trace_lines = vec![NodeTrace::CSV_HEADER.to_string()];
    let mip = bnb_solve_traced(&model, config.node_limit, |node| trace_lines.push(node.csv_line()));
    if let Some(path) = &config.trace_path {
        trace_lines.push(String::new());
        fs::write(path, trace_lines.join("\n")).with_context(|| format!("writing {}", path.display()))?;
    }
    let report = SolveReport {
        formulation: id,
        instance: instance.fingerprint(),
        coupling: instance.coupling_enabled,
        lp: &lp,
        mip: &mip,
    };
    write_output(config.output_path.as_deref(), &to_json(&report)?)?;
    if lp.status == LpStatus::IterationLimit {
        return Err(Failure::SolverLimit("root LP stopped at the iteration limit".into()));
    }
    if mip.status == MipStatus::NodeLimit {
        return Err(Failure::SolverLimit(format!(
            "branch and bound stopped after {} nodes; best bound {}, incumbent {}",
            mip.nodes, mip.best_bound, mip.objective
        )));
    }
    Ok(())
}

fn run_compare(config: &RunConfig) -> Result<(), Failure> {
    let instance = instance_for(config)?;
    let verdicts = compare_all(&instance, config.samples, config.seed)?;
    let text = match config.format {
        Format::Json => to_json(&verdicts)?,
        _ => {
            let mut lines = vec![gms_core::TightnessVerdict::CSV_HEADER.to_string()];
            lines.extend(verdicts.iter().map(|v| v.csv_line()));
            lines.push(String::new());
            lines.join("\n")
        }
    };
    write_output(config.output_path.as_deref(), &text)?;
    let undecided: usize = verdicts.iter().map(|v| v.undecided).sum();
    if undecided > 0 {
        return Err(Failure::SolverLimit(format!(
            "{undecided} membership tests stopped at the iteration limit"
        )));
    }
    Ok(())
}

fn run_verify(config: &RunConfig) -> Result<(), Failure> {
    let report = verify_paper(config.seed)?;
    match &config.output_path {
        Some(path) => {
            write_output(Some(path), &report.to_json())?;
            write_output(None, &report.to_text())?;
        }
        None => write_output(None, &report.to_text())?,
    }
    let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(format!("failed checks: {}", failed.join(", "))))
    }
}

fn run_export(config: &RunConfig) -> Result<(), Failure> {
    let instance = instance_for(config)?;
    let model = build(config.formulation.expect("checked by check_required"), &instance)?;
    write_output(config.output_path.as_deref(), &lp_format::to_lp_string(&model))?;
    Ok(())
}

fn run(config: &RunConfig) -> Result<(), Failure> {
    match config.command {
        CommandKind::Gen => run_gen(config),
        CommandKind::Solve => run_solve(config),
        CommandKind::Compare => run_compare(config),
        CommandKind::VerifyPaper => run_verify(config),
        CommandKind::Export => run_export(config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose {
        log::LevelFilter::Debug
    } else {
        log::LevelFilter::Warn
    };
    env_logger::Builder::new().filter_level(level).init();
    let outcome = RunConfig::from_cli(cli.command).and_then(|config| run(&config));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Usage(m) | Failure::Input(m) | Failure::SolverLimit(m) | Failure::Verification(m) => {
                    eprintln!("gms: {m}")
                }
                Failure::Other(e) => eprintln!("gms: {e:#}"),
            }
            ExitCode::from(failure.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "{\n  \"horizon\": 4,\n  \"tasks\": [\n    {\n      \"id\": \"a\\\"b\",\n      \"duration\": 2\n    },\n    {\n      \"id\": \"c\",\n      \"duration\": 0\n    }\n  ],\n  \"cost\": [[1.0], [2.0]]\n}\n";

    #[test]
    fn field_paths_split_into_segments() {
        assert_eq!(
            parse_field("tasks[1].duration"),
            vec![Segment::Key("tasks".into()), Segment::Index(1), Segment::Key("duration".into())]
        );
        assert_eq!(
            parse_field("cost[3][0]"),
            vec![Segment::Key("cost".into()), Segment::Index(3), Segment::Index(0)]
        );
    }

    #[test]
    fn fields_resolve_to_their_lines() {
        assert_eq!(line_of_field(TEXT, "horizon"), Some(2));
        assert_eq!(line_of_field(TEXT, "tasks[1].duration"), Some(10));
        assert_eq!(line_of_field(TEXT, "tasks[0].id"), Some(5));
        assert_eq!(line_of_field(TEXT, "cost[1]"), Some(13));
    }

    #[test]
    fn missing_fields_fall_back_to_the_deepest_ancestor() {
        assert_eq!(line_of_field(TEXT, "tasks[1].capacity"), Some(8));
        assert_eq!(line_of_field(TEXT, "demand"), Some(1));
    }
}
