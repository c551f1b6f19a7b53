use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use moistdg::driver::{convergence_study, run_with, CaseConfig, CaseKind};
use moistdg::error::Category;

#[derive(Parser)]
#[command(name = "moistdg", version, about = "DG solver for moist compressible flow with warm rain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one case to its end time.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override a setting, e.g. `--set mesh.h=500 --set time.dt=0.5`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Continue from a restart file.
        #[arg(long)]
        restart: Option<PathBuf>,
    },
    /// Run the `[convergence]` series of a config and print the rate table.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// List the available cases.
    ListCases,
}

fn exit_code(e: &moistdg::Error) -> ExitCode {
    match e.category() {
        Category::Config => ExitCode::from(2),
        Category::Numeric => ExitCode::from(3),
        Category::Io => ExitCode::from(4),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::ListCases => {
            for c in CaseKind::ALL {
                println!("{:<24} {}", c.name(), c.description());
            }
            Ok(())
        }
        Command::Run { config, set, restart } => CaseConfig::from_file(&config, &set)
            .and_then(|cfg| run_with(&cfg, restart.as_deref()))
            .map(|out| {
                let s = &out.summary;
                println!(
                    "{}: {} steps to t = {} s in {:.1} s wall, output in {}",
                    s.case,
                    s.steps,
                    s.t,
                    s.wall_seconds,
                    out.simulation.config.output.dir.display()
                );
            }),
        Command::Convergence { config, set } => {
            CaseConfig::from_file(&config, &set).and_then(|cfg| convergence_study(&cfg)).map(|rows| {
                println!("{:>8} {:>2} {:>8} {:>12} {:>14} {:>8}", "h", "k", "dt", "component", "error", "rate");
                for r in rows {
                    let rate = r.rate.map_or("undefined".to_string(), |v| format!("{v:.3}"));
                    println!(
                        "{:>8} {:>2} {:>8} {:>12} {:>14.6e} {:>8}",
                        r.h,
                        r.k,
                        r.dt,
                        moistdg::model::COMPONENT_NAMES[r.component],
                        r.error,
                        rate
                    );
                }
            })
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
