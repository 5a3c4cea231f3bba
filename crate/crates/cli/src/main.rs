use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rankone_cli::{run, Command, RunConfig};

/// Decide rank-one density of finite-band biorthogonal systems.
#[derive(Parser, Debug)]
#[command(name = "rankone", version, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Check the system conditions and biorthogonality of a truncation.
    Validate(Common),
    /// Emit the B-network of a spec.
    BuildGraph(Common),
    /// Decide density; exit 0 dense, 1 not dense, 2 inconclusive.
    Decide(Common),
    /// Extract and verify a ray witness.
    Witness(Common),
    /// Certify a ray through the flow-operator correspondence.
    Roundtrip(Common),
    /// Compare library results with brute-force references on a small instance.
    Oracle(Common),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    depth: usize,
    #[arg(long, default_value_t = 1_000.0)]
    threshold: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the ray of a NotDense verdict here.
    #[arg(long)]
    emit_witness: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::Validate(a) => (Command::Validate, a),
        Sub::BuildGraph(a) => (Command::BuildGraph, a),
        Sub::Decide(a) => (Command::Decide, a),
        Sub::Witness(a) => (Command::Witness, a),
        Sub::Roundtrip(a) => (Command::Roundtrip, a),
        Sub::Oracle(a) => (Command::Oracle, a),
    };
    let Format::Json = args.format;
    let config = RunConfig {
        command,
        spec_path: args.spec,
        depth: args.depth,
        threshold: args.threshold,
        tolerance: args.tol,
        output_path: args.output,
        witness_path: args.emit_witness,
        seed: args.seed,
    };
    match run(&config) {
        Ok(outcome) => {
            if config.output_path.is_none() {
                println!("{}", serde_json::to_string_pretty(&outcome.report).expect("reports serialize"));
            }
            eprintln!("{}: {}", command.name(), outcome.summary);
            ExitCode::from(outcome.exit_code)
        }
        Err(e) => {
            println!("{}", serde_json::to_string_pretty(&e.report(command)).expect("reports serialize"));
            eprintln!("{}: error: {e}", command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
