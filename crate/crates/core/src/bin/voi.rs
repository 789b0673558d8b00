use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use voi::config::{parse_config, MethodChoice};
use voi::run::{run, trend, RunError};

#[derive(Parser)]
#[command(name = "voi", version, about = "Implementation-adjusted value of sample information")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate for every configured study and write results.csv plus trend files.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        method: Option<MethodChoice>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit moment matching for one study and write its trend and density files.
    Trend {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        study: usize,
    },
    /// Parse and validate a config, printing its normalised form.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn fail(e: RunError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { config } => {
            parse_config(&config).map(|c| println!("{}", c.to_json())).map_err(RunError::from)
        }
        Command::Trend { config, study } => parse_config(&config)
            .map_err(RunError::from)
            .and_then(|c| trend(&c, study))
            .map(|(curve, density)| println!("{}\n{}", curve.display(), density.display())),
        Command::Run { config, method, seed, out } => {
            parse_config(&config).map_err(RunError::from).and_then(|mut c| {
                c.method = method.unwrap_or(c.method);
                c.seed = seed.unwrap_or(c.seed);
                c.output_dir = out.unwrap_or(c.output_dir);
                let table = run(&c)?;
                println!("study,method,evsi,evsi_im,std_error,seconds");
                for r in &table.rows {
                    println!(
                        "{},{},{:.1},{:.1},{:.1},{:.2}",
                        r.study,
                        r.method.label(),
                        r.evsi.value,
                        r.evsi_im.value,
                        r.evsi_im.std_error,
                        r.seconds
                    );
                }
                Ok(())
            })
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}
