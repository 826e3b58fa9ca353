use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};

use netlms_cli::{run, Preset, RunConfig};

#[derive(Parser)]
#[command(name = "netlms", version, about = "Adaptive-network LMS experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or a JSON run file.
    #[command(group(ArgGroup::new("source").required(true).args(["preset", "config"])))]
    Run {
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        iters: Option<usize>,
        /// Allowed theory-vs-simulation deviation in dB.
        #[arg(long)]
        tol_db: Option<f64>,
        /// Worker threads for the Monte Carlo trials.
        #[arg(long)]
        threads: Option<usize>,
        /// Extra override, e.g. `--set model.mu=0.02`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print the run file of a preset.
    Show {
        #[arg(value_enum)]
        preset: Preset,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Show { preset, seed } => {
            println!("{}", serde_json::to_string_pretty(&preset.run_file(seed)).expect("serializable"));
            ExitCode::SUCCESS
        }
        Command::Run { preset, config, out, seed, trials, iters, tol_db, threads, overrides } => {
            let cfg = RunConfig {
                preset,
                config_path: config,
                output_dir: out,
                seed,
                trials,
                iters,
                tol_db,
                overrides,
                threads,
            };
            match run(&cfg) {
                Ok(outcome) => {
                    print!("{}", outcome.table);
                    println!("artifacts written to {}", cfg.output_dir.display());
                    if outcome.pass() {
                        ExitCode::SUCCESS
                    } else {
                        eprintln!("verdict: FAIL");
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
