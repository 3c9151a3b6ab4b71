use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use entanglelink::job::{self, JobSpec};
use entanglelink::tables::{self, TableName};
use entanglelink::{fixtures, CliError};

#[derive(Parser)]
#[command(name = "entanglelink", version, about = "Link representations of entanglement entropies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a job file and write its outputs; prints a summary.
    Run { job: PathBuf },
    /// Reproduce a table as CSV (table1, table2, structured, page, sampling, all).
    Table {
        name: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run a job and print its radial link profile as CSV.
    Profile { job: PathBuf },
    /// Regenerate the shipped MPS fixtures.
    Fixture {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    entanglelink::configure_threads()?;
    match cli.command {
        Command::Run { job } => {
            let spec = JobSpec::load(&job)?;
            let res = job::run_job(&spec)?;
            let e = &res.report.errors;
            println!(
                "{}",
                serde_json::json!({
                    "n_sites": res.report.n_sites,
                    "epsilon": e.epsilon,
                    "delta_s": e.delta_s,
                    "delta_r_s": e.delta_r_s,
                    "config_hash": res.report.provenance.config_hash,
                })
            );
        }
        Command::Table { name, out } => {
            let names = if name == "all" { TableName::ALL.to_vec() } else { vec![name.parse()?] };
            for t in names {
                let path = tables::reproduce_table(t)?.write(&out)?;
                println!("{}", path.display());
            }
        }
        Command::Profile { job } => {
            let spec = JobSpec::load(&job)?;
            print!("{}", job::run_job(&spec)?.report.profile_csv()?);
        }
        Command::Fixture { out } => {
            let dir = out.unwrap_or_else(entanglelink::formats::fixture_dir);
            for p in fixtures::write_all(&dir)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
