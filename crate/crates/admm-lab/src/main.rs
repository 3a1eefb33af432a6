use admm_lab::cli::{
    self, render_figure_table, render_lowerbound_table, CliError, SolveOverrides, ThetaMode,
};
use clap::{Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

/// Print to stdout, dying quietly with the conventional SIGPIPE status when
/// the consumer has hung up — `admm-lab ... | head` must not panic.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    if out.write_all(text.as_bytes()).and_then(|()| out.flush()).is_err() {
        std::process::exit(141);
    }
}

#[derive(Parser)]
#[command(name = "admm-lab", about = "Convergence laboratory for preconditioned ADMM variants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a solver config and write the trajectory CSV
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Override the step size from the config
        #[arg(long)]
        rho: Option<f64>,
        /// Override the iteration budget from the config
        #[arg(long)]
        iters: Option<usize>,
        /// Override the algorithm: admm or linadmm
        #[arg(long)]
        algo: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reproduce a benchmark figure (CSV per run plus rates.json)
    Figures {
        /// Figure index: 1 or 2
        #[arg(long)]
        which: u8,
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify the per-step, weighted, and Bregman-sum certificates on a run
    Certify {
        #[arg(long)]
        config: PathBuf,
        /// Splitting parameter in [0, 1); defaults to a grid search
        #[arg(long)]
        s: Option<f64>,
        /// Contraction parameter: 'auto' or an explicit value
        #[arg(long, default_value = "auto")]
        theta: String,
    },
    /// Tabulate worst-case rates and their realizing problem instances
    Lowerbound {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        lambda: f64,
        /// Step-size grid as lo:hi:n (log-spaced); defaults to 13 points
        /// spanning a decade either side of the optimal step size
        #[arg(long)]
        rho_grid: Option<String>,
    },
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Solve { config, rho, iters, algo, out } => {
            let overrides = SolveOverrides { rho, iters, algo };
            let report = cli::cmd_solve(&config, &overrides, &out)?;
            let json =
                serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
            emit(&format!("{json}\n"));
            Ok(())
        }
        Command::Figures { which, out } => {
            let summary = cli::cmd_figures(which, &out)?;
            emit(&render_figure_table(&summary));
            Ok(())
        }
        Command::Certify { config, s, theta } => {
            let mode = ThetaMode::parse(&theta)?;
            let summary = cli::cmd_certify(&config, s, &mode)?;
            let json =
                serde_json::to_string_pretty(&summary).map_err(|e| CliError::Io(e.to_string()))?;
            emit(&format!("{json}\n"));
            if summary.pass {
                Ok(())
            } else {
                Err(CliError::CheckFailed(format!(
                    "certificate violated: {}",
                    summary.first_violation.as_deref().unwrap_or("unknown")
                )))
            }
        }
        Command::Lowerbound { gamma, lambda, rho_grid } => {
            let table = cli::cmd_lowerbound(gamma, lambda, rho_grid.as_deref())?;
            emit(&render_lowerbound_table(&table));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
