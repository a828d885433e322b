mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nsr_core::graph::read_graph;
use nsr_core::pipeline::{run_pipeline, Artifact, StageContext, StageRecord, StageRegistry};
use nsr_core::Error;

use config::ConfigArgs;

const EXIT_USAGE: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_LOAD: u8 = 4;
const EXIT_WRITE: u8 = 5;

/// Exit code for a failure inside the named stage.
fn stage_exit(stage: &str) -> u8 {
    match stage {
        "embed" => 10,
        "merge" => 11,
        "score" => 12,
        "filter" => 13,
        "align" => 14,
        "laplacian" => 15,
        "spectral" => 16,
        "threshold" => 17,
        _ => 1,
    }
}

#[derive(Parser)]
#[command(name = "nsr", version, about = "Refine a fact graph and draw spectral conclusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage and write graph, filter, signal, conclusions and report.
    Run {
        /// Graph JSONL.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run one stage on an artifact file.
    Stage {
        /// embed, merge, score, filter, align, laplacian, spectral or threshold.
        name: String,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn config(e: Error) -> Self {
        Self::new(EXIT_CONFIG, e.to_string())
    }

    /// Side-input problems other than bad settings count as load failures.
    fn context(e: Error) -> Self {
        match e {
            Error::Config(_) => Self::config(e),
            e => Self::new(EXIT_LOAD, format!("load: {e}")),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            input,
            out_dir,
            config,
        } => run(input, out_dir, &config),
        Command::Stage {
            name,
            input,
            out,
            config,
        } => stage(&name, &input, &out, &config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("nsr: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn summarize(record: &StageRecord) {
    eprintln!(
        "{:<9} nodes={} entailment={} structural={}",
        record.stage, record.nodes, record.entailment_edges, record.structural_edges
    );
}

fn run(input: Option<PathBuf>, out_dir: Option<PathBuf>, args: &ConfigArgs) -> Result<(), Failure> {
    let settings = args.resolve().map_err(Failure::config)?;
    let input = input
        .or(settings.input)
        .ok_or_else(|| Failure::new(EXIT_USAGE, "run needs --input"))?;
    let out_dir = out_dir
        .or(settings.out_dir)
        .ok_or_else(|| Failure::new(EXIT_USAGE, "run needs --out-dir"))?;
    let ctx = StageContext::load(settings.pipeline).map_err(Failure::context)?;
    let graph = read_graph(&input)
        .map_err(|e| Failure::new(EXIT_LOAD, format!("load {}: {e}", input.display())))?;

    match run_pipeline(graph, &ctx) {
        Ok(run) => {
            run.report.stages.iter().for_each(summarize);
            run.write(&out_dir).map_err(|e| write_failure(&out_dir, e))?;
            eprintln!(
                "{} of {} conclusions asserted (tau_out = {})",
                run.conclusions.asserted(),
                run.conclusions.conclusions.len(),
                run.conclusions.tau_out
            );
            Ok(())
        }
        Err(err) => {
            err.report.stages.iter().for_each(summarize);
            // the partial report is a diagnostic aid; failing to write it
            // must not mask the stage error
            if std::fs::create_dir_all(&out_dir).is_ok() {
                let _ = std::fs::write(out_dir.join("report.json"), err.report.to_json());
            }
            Err(Failure::new(stage_exit(&err.stage), err.to_string()))
        }
    }
}

fn write_failure(path: &Path, e: Error) -> Failure {
    Failure::new(EXIT_WRITE, format!("write {}: {e}", path.display()))
}

fn stage(name: &str, input: &Path, out: &Path, args: &ConfigArgs) -> Result<(), Failure> {
    let registry = StageRegistry::builtin();
    if registry.get(name).is_none() {
        let names: Vec<_> = registry.names().collect();
        return Err(Failure::new(
            EXIT_USAGE,
            format!("unknown stage {name:?} (available: {})", names.join(", ")),
        ));
    }
    let settings = args.resolve().map_err(Failure::config)?;
    let ctx = StageContext::load(settings.pipeline).map_err(Failure::context)?;
    let artifact = Artifact::read(input)
        .map_err(|e| Failure::new(EXIT_LOAD, format!("load {}: {e}", input.display())))?;
    let (output, record) = registry
        .run(name, artifact, &ctx)
        .map_err(|e| Failure::new(stage_exit(name), format!("stage {name} failed: {e}")))?;
    summarize(&record);
    output.save(out).map_err(|e| write_failure(out, e))
}
