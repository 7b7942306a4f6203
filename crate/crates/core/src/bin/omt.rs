//! `omt`: compile, solve and check model documents, print the tree, build
//! and verify the case-study corpus, and run the HTTP service.
//!
//! Exit status: 0 on success, 1 on a domain error (the error code is
//! printed on stderr), 2 on a usage error.

use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use omt_milp::api::{self, CheckSettings, Format};
use omt_milp::corpus::{self, CaseId, Scale, ALL_CASES};
use omt_milp::emit::write_model;
use omt_milp::lowering::{IfThenStrength, LowerOptions};
use omt_milp::model::Model;
use omt_milp::omt::{load_tree, NodeKind, OmtTree};
use omt_milp::oracle::{self, EnumerationLimits, SolveStatus};
use omt_milp::service::{self, ServiceConfig};

#[derive(Parser)]
#[command(name = "omt", version, about = "Typed MILP models: compile, solve, check, elicit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lower a model document and write it as LP or MPS.
    Compile {
        model: PathBuf,
        #[arg(long, value_parser = parse_format)]
        format: Format,
        #[arg(long = "if-then", value_parser = parse_strength, default_value = "strong")]
        if_then: IfThenStrength,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve a model by exhaustive enumeration.
    Solve {
        model: PathBuf,
        #[arg(long, default_value_t = oracle::DEFAULT_MAX_POINTS)]
        max_points: u128,
        #[arg(long)]
        json: bool,
    },
    /// Check every lowered constraint against its meaning over the variable box.
    Check {
        model: PathBuf,
        #[arg(long, default_value_t = oracle::DEFAULT_BOX_CAP)]
        box_cap: u128,
        /// Intervals each continuous range is sampled with.
        #[arg(long, default_value_t = 2)]
        steps: u32,
        #[arg(long = "if-then", value_parser = parse_strength, default_value = "strong")]
        if_then: IfThenStrength,
        #[arg(long)]
        json: bool,
    },
    /// Print the optimization modelling tree.
    Tree {
        #[arg(long)]
        json: bool,
    },
    /// Case-study models.
    Corpus {
        #[command(subcommand)]
        command: CorpusCommand,
    },
    /// Run the HTTP service.
    Serve {
        /// Defaults to the PORT environment variable, then 8080.
        #[arg(long)]
        port: Option<u16>,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Write a case study as a model document.
    Build {
        #[arg(value_parser = parse_case)]
        case: CaseId,
        /// Index set size, e.g. `--scale periods=4`; repeatable.
        #[arg(long = "scale", value_parser = parse_scale_entry)]
        scale: Vec<(String, u32)>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check that every case classifies to its expected OMT leaves.
    Verify {
        #[arg(long)]
        json: bool,
    },
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse()
}

fn parse_strength(s: &str) -> Result<IfThenStrength, String> {
    s.parse()
}

fn parse_case(s: &str) -> Result<CaseId, String> {
    s.parse().map_err(|e: corpus::CorpusError| e.to_string())
}

fn parse_scale_entry(s: &str) -> Result<(String, u32), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got {s:?}"))?;
    let v = v.parse().map_err(|_| format!("{v:?} is not a count"))?;
    Ok((k.to_string(), v))
}

/// A failure reported with exit status 1.
struct Failure {
    code: String,
    message: String,
    detail: Value,
}

impl From<api::Error> for Failure {
    fn from(e: api::Error) -> Self {
        Failure { code: e.code().to_string(), message: e.to_string(), detail: e.envelope() }
    }
}

impl Failure {
    fn new(code: &str, message: impl Into<String>) -> Failure {
        let message = message.into();
        Failure { code: code.to_string(), detail: json!({"code": code, "message": message, "subject": null}), message }
    }

    fn io(path: &Path, e: std::io::Error) -> Failure {
        Failure::new("IoError", format!("{}: {e}", path.display()))
    }
}

fn read_model(path: &Path) -> Result<Model, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    Ok(api::parse_model(&text)?)
}

fn write_out(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON value") + "\n"
}

fn solve(path: &Path, max_points: u128, as_json: bool) -> Result<(), Failure> {
    let model = read_model(path)?;
    let report = oracle::solve_by_enumeration(&model, &EnumerationLimits { max_points }).map_err(api::Error::from)?;
    if as_json {
        print!("{}", pretty(&report.to_json(model.variables())));
        return Ok(());
    }
    match report.status {
        SolveStatus::Infeasible => println!("status: infeasible"),
        SolveStatus::Optimal => {
            println!("status: optimal");
            if let Some(value) = report.objective_value {
                println!("value: {value}");
            }
            if let Some(w) = &report.witness {
                for v in model.variables() {
                    if let Some(x) = w.get(v.id) {
                        println!("{} = {x}", v.name);
                    }
                }
            }
        }
    }
    println!("points enumerated: {}", report.points_enumerated);
    Ok(())
}

fn check(path: &Path, settings: CheckSettings, as_json: bool) -> Result<(), Failure> {
    let model = read_model(path)?;
    let report = api::check(&model, &settings)?;
    if as_json {
        print!("{}", pretty(&report));
    } else {
        for c in report["constraints"].as_array().into_iter().flatten() {
            let mismatches = c["mismatches"].as_array().map_or(0, Vec::len);
            let verdict = if mismatches == 0 { "ok".to_string() } else { format!("{mismatches} mismatches") };
            println!("c{} {:?}: {} points, {verdict}", c["constraint"], c["label"].as_str().unwrap_or(""), c["points_checked"]);
        }
    }
    if report["holds"] == Value::Bool(true) {
        Ok(())
    } else {
        Err(Failure::new("EquivalenceViolated", "some lowered constraints disagree with their meaning"))
    }
}

fn print_node(tree: &OmtTree, id: u32, depth: usize) {
    let node = tree.node(id).expect("child ids are live");
    let pad = "    ".repeat(depth);
    let anchor = if node.anchored { " *" } else { "" };
    println!("{pad}[{}] {}{anchor}", node.id, node.label);
    match node.kind {
        NodeKind::Internal => {
            if let Some(q) = &node.question {
                println!("{pad}  ? {q}");
            }
            for child in &node.children {
                println!("{pad}  - {}", child.answer);
                print_node(tree, child.child, depth + 1);
            }
        }
        NodeKind::Leaf => {
            if let Some(t) = &node.template {
                let slots: Vec<String> = t.slots.iter().map(|s| format!("{}: {:?}", s.name, s.kind)).collect();
                println!("{pad}  {:?}({})", t.family, slots.join(", "));
            }
        }
    }
}

/// Depth-first from the root; `*` marks nodes the literature numbers.
fn tree(as_json: bool) {
    let tree = load_tree();
    if as_json {
        print!("{}", tree.to_json());
    } else {
        print_node(tree, tree.root(), 0);
    }
}

fn corpus_build(case: CaseId, entries: Vec<(String, u32)>, output: Option<&Path>) -> Result<(), Failure> {
    let mut scale: Scale = case.default_scale();
    scale.extend(entries);
    let model = corpus::build(case, &scale).map_err(api::Error::from)?;
    write_out(output, &write_model(&model))
}

fn corpus_verify(as_json: bool) -> Result<(), Failure> {
    let mut reports = Vec::new();
    for case in ALL_CASES {
        let model = corpus::build(case, &case.default_scale()).map_err(api::Error::from)?;
        reports.push(corpus::check_fidelity(case, &model));
    }
    if as_json {
        let list: Vec<Value> = reports
            .iter()
            .map(|r| {
                let mut v = serde_json::to_value(r).expect("report");
                v["holds"] = Value::Bool(r.holds());
                v
            })
            .collect();
        print!("{}", pretty(&json!({ "cases": list })));
    } else {
        for r in &reports {
            println!("{}: {}", r.case, if r.holds() { "ok" } else { "MISMATCH" });
        }
    }
    if reports.iter().all(corpus::FidelityReport::holds) {
        Ok(())
    } else {
        Err(Failure::new("NodeMapMismatch", "a case study classifies to unexpected OMT leaves"))
    }
}

fn serve(host: IpAddr, port: Option<u16>) -> Result<(), Failure> {
    let port = match port {
        Some(p) => p,
        None => match std::env::var("PORT") {
            Ok(v) => v.parse().map_err(|_| Failure::new("InvalidPort", format!("PORT={v:?} is not a port")))?,
            Err(_) => service::DEFAULT_PORT,
        },
    };
    let addr = SocketAddr::new(host, port);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::new("IoError", e.to_string()))?;
    eprintln!("listening on http://{addr}/api/v1");
    runtime.block_on(service::serve(addr, ServiceConfig::default())).map_err(|e| Failure::new("IoError", e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Compile { model, format, if_then, output } => {
            let text = api::compile(&read_model(&model)?, format, &LowerOptions::with_strength(if_then))?;
            write_out(output.as_deref(), &text)
        }
        Command::Solve { model, max_points, json } => solve(&model, max_points, json),
        Command::Check { model, box_cap, steps, if_then, json } => {
            let settings = CheckSettings { cap: box_cap, continuous_steps: steps, options: LowerOptions::with_strength(if_then) };
            check(&model, settings, json)
        }
        Command::Tree { json } => {
            tree(json);
            Ok(())
        }
        Command::Corpus { command: CorpusCommand::Build { case, scale, output } } => {
            corpus_build(case, scale, output.as_deref())
        }
        Command::Corpus { command: CorpusCommand::Verify { json } } => corpus_verify(json),
        Command::Serve { port, host } => serve(host, port),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let wants_json = std::env::args().any(|a| a == "--json");
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if wants_json {
                eprint!("{}", pretty(&f.detail));
            } else {
                eprintln!("error[{}]: {}", f.code, f.message);
            }
            ExitCode::from(1)
        }
    }
}
