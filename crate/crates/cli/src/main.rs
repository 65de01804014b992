use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thd_cli::{cmd_classify, cmd_export, cmd_run, cmd_trace, CliError, RunConfig, OUTPUT_DIR_ENV};
use thd_core::report::{Coloring, NetworkFormat};

/// Topological hierarchical decomposition of tabular data.
#[derive(Parser)]
#[command(name = "thd", version)]
struct Cli {
    /// Worker threads (defaults to one per core). Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose the configured dataset and write trees, summaries, networks,
    /// and a manifest.
    Run {
        config: PathBuf,
        /// Override a config field, e.g. `--set gain=3` or `--set stats.alpha=0.05`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory; beats the environment variable and the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Explain one row's path through a saved tree.
    Trace {
        tree: PathBuf,
        /// 0-based data row.
        row: usize,
        /// Label level counted as the bad outcome.
        #[arg(long)]
        risky: Option<String>,
        /// Verdict threshold on the risky fraction.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Export the network of one tree node.
    Export {
        tree: PathBuf,
        /// Node id such as `1.2`.
        node: String,
        /// graphml, dot, or json.
        #[arg(long, default_value = "graphml")]
        format: String,
        /// Color nodes by FEATURE (continuous) or FEATURE=LEVEL (categorical).
        #[arg(long)]
        color: Option<String>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Train on one file and predict the rows of another.
    Classify {
        config: PathBuf,
        train: PathBuf,
        test: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config, overrides, output_dir } => {
            let cfg = RunConfig::load(&config, &overrides)?;
            let out = output_dir
                .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
                .unwrap_or_else(|| cfg.output_dir.clone());
            let manifest = cmd_run(&cfg, &out)?;
            println!("wrote {} files to {}", manifest.files.len() + 1, out.display());
        }
        Command::Trace { tree, row, risky, threshold } => {
            let (_, text) = cmd_trace(&tree, row, risky.as_deref(), threshold)?;
            emit(None, &text)?;
        }
        Command::Export { tree, node, format, color, output } => {
            let format: NetworkFormat = format.parse()?;
            let coloring = color.map(|c| match c.split_once('=') {
                Some((feature, level)) => Coloring { feature: feature.into(), level: Some(level.into()) },
                None => Coloring { feature: c, level: None },
            });
            let doc = cmd_export(&tree, &node, format, coloring.as_ref())?;
            emit(output.as_deref(), &doc)?;
        }
        Command::Classify { config, train, test, overrides, output } => {
            let cfg = RunConfig::load(&config, &overrides)?;
            let result = cmd_classify(&cfg, &train, &test)?;
            emit(output.as_deref(), &result.csv)?;
            if let Some(acc) = result.accuracy {
                eprintln!("accuracy {}", thd_core::report::fmt_sig(acc));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(thd_cli::EXIT_USAGE as u8);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(thd_cli::EXIT_DATA as u8);
        }
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
