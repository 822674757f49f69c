use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use oobc_core::class_table::ClassTable;
use oobc_core::engine::{explicit_entry, AnalysisOptions, Analyzer};
use oobc_core::frontend::parse_program;
use oobc_core::oracle::{run_concrete, Outcome};
use oobc_core::predicate::{parse_predicates, PredicateProgram};
use oobc_core::report::{parse_manifest, AnalysisReport, PermissionInputs, PermissionMap};

const EXIT_INPUT: u8 = 1;
const EXIT_INCOMPLETE: u8 = 2;

#[derive(Parser)]
#[command(name = "oobc", version, about = "Abstract interpretation of object-oriented bytecode")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Explore the reachable abstract states of a program and write reports.
    Analyze(AnalyzeArgs),
    /// Execute one entry point concretely.
    Run(RunArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    program: PathBuf,
    /// Call-site context depth.
    #[arg(long, default_value_t = 0)]
    k: usize,
    /// Share one global store across states (the default).
    #[arg(long, overrides_with = "no_widen")]
    widen: bool,
    /// Give every state its own store.
    #[arg(long, overrides_with = "widen")]
    no_widen: bool,
    /// Abstract garbage collection (per-state stores only).
    #[arg(long)]
    gc: bool,
    /// Stop after this many transitions per entry point.
    #[arg(long)]
    cutoff: Option<usize>,
    /// Extra entry point, written CLASS/METHOD. Repeatable.
    #[arg(long = "entry")]
    entries: Vec<String>,
    #[arg(long)]
    predicates: Option<PathBuf>,
    #[arg(long)]
    permission_map: Option<PathBuf>,
    /// Declared permissions, one per line.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    dot: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write every report into this directory.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct RunArgs {
    program: PathBuf,
    #[arg(long)]
    entry: String,
    #[arg(long, default_value_t = 10_000)]
    fuel: usize,
    /// Write the JSON trace here instead of printing a summary only.
    #[arg(long)]
    trace: Option<PathBuf>,
}

fn input_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_INPUT)
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_program(path: &Path) -> Result<ClassTable, String> {
    let text = read(path)?;
    let program = parse_program(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    ClassTable::new(&program).map_err(|e| format!("{}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<(), String> {
    std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn analyze(args: AnalyzeArgs) -> ExitCode {
    let ct = match load_program(&args.program) {
        Ok(ct) => ct,
        Err(e) => return input_error(e),
    };
    let predicates: Option<PredicateProgram> = match &args.predicates {
        None => None,
        Some(p) => match read(p).and_then(|t| parse_predicates(&t).map_err(|e| format!("{}: {e}", p.display()))) {
            Ok(prog) => Some(prog),
            Err(e) => return input_error(e),
        },
    };
    let perms = match &args.permission_map {
        None => None,
        Some(p) => {
            let map = match PermissionMap::load(p) {
                Ok(m) => m,
                Err(e) => return input_error(format!("{}: {e}", p.display())),
            };
            let declared = match &args.manifest {
                None => Vec::new(),
                Some(m) => match read(m) {
                    Ok(t) => parse_manifest(&t),
                    Err(e) => return input_error(e),
                },
            };
            Some(PermissionInputs { map, declared })
        }
    };
    if args.manifest.is_some() && perms.is_none() {
        return input_error("--manifest needs --permission-map");
    }
    let options = AnalysisOptions {
        k: args.k,
        widen: !args.no_widen,
        gc: args.gc,
        max_steps: args.cutoff,
        workers: args.workers,
        entries: args.entries.clone(),
        ..Default::default()
    };
    for e in &args.entries {
        if let Err(err) = explicit_entry(&ct, e) {
            return input_error(err);
        }
    }
    let mut analyzer = Analyzer::new(&ct, options);
    if let Some(p) = &predicates {
        analyzer = analyzer.with_predicates(p);
    }
    let result = match analyzer.run() {
        Ok(r) => r,
        Err(e) => return input_error(e),
    };
    if result.entries.is_empty() {
        eprintln!("warning: no entry points found; pass --entry CLASS/METHOD");
    }
    let report = AnalysisReport::build(&ct, &result, predicates.as_ref(), perms.as_ref());
    let outputs = [
        (args.dot.as_deref(), &report.dot),
        (args.json.as_deref(), &report.json),
    ];
    for (path, text) in outputs {
        if let Some(path) = path {
            if let Err(e) = write(path, text) {
                return input_error(e);
            }
        }
    }
    if let Some(dir) = &args.report {
        if let Err(e) = report.write_dir(dir) {
            return input_error(format!("{}: {e}", dir.display()));
        }
    }
    println!(
        "entries: {}  states: {}  transitions: {}  passes: {}",
        result.entries.len(),
        result.graph.len(),
        result.graph.edges.len(),
        result.passes
    );
    print!("{}", report.api_dump);
    if let Some(p) = &report.permissions {
        print!("{p}");
    }
    if result.incomplete() {
        eprintln!(
            "warning: analysis incomplete ({})",
            if result.graph.incomplete { "cutoff reached" } else { "states truncated" }
        );
        return ExitCode::from(EXIT_INCOMPLETE);
    }
    ExitCode::SUCCESS
}

fn run(args: RunArgs) -> ExitCode {
    let ct = match load_program(&args.program) {
        Ok(ct) => ct,
        Err(e) => return input_error(e),
    };
    if args.fuel == 0 {
        return input_error("--fuel must be positive");
    }
    let entry = match explicit_entry(&ct, &args.entry) {
        Ok(e) => e,
        Err(e) => return input_error(e),
    };
    let (trace, _) = run_concrete(&ct, &entry, args.fuel);
    if let Some(path) = &args.trace {
        let text = format!("{}\n", serde_json::to_string_pretty(&trace.to_json(&ct)).expect("serializable"));
        if let Err(e) = write(path, &text) {
            return input_error(e);
        }
    }
    let steps = trace.states.len() - 1;
    match &trace.outcome {
        Outcome::Halted => {
            println!("halted after {steps} steps");
            ExitCode::SUCCESS
        }
        Outcome::Error(e) => {
            println!("runtime error after {steps} steps: {e}");
            ExitCode::from(EXIT_INCOMPLETE)
        }
        Outcome::OutOfFuel => {
            println!("out of fuel after {steps} steps");
            ExitCode::from(EXIT_INCOMPLETE)
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Analyze(a) => analyze(a),
        Command::Run(r) => run(r),
    }
}
