//! Command-line front end for `smallball-core`: closed-form constants,
//! eigenvalue fits, saddle-point and Monte Carlo comparisons, path sampling
//! and the acceptance suite.

pub mod args;
pub mod commands;
pub mod verify;

use clap::Parser;

pub use args::Cli;
pub use commands::{CliError, CliResult, Output};

use args::Command;

pub fn run(cli: &Cli) -> CliResult<Output> {
    if cli.workers == 0 {
        return Err(CliError::input("--workers must be at least 1"));
    }
    faer::set_global_parallelism(if cli.workers > 1 {
        faer::Par::rayon(cli.workers)
    } else {
        faer::Par::Seq
    });
    let w = cli.workers;
    match &cli.command {
        Command::Constant(a) => commands::cmd_constant(a, w),
        Command::Eigs(a) => commands::cmd_eigs(a, w),
        Command::Smallball(a) => commands::cmd_smallball(a, w),
        Command::Mc(a) => commands::cmd_mc(a, w),
        Command::Sample(a) => commands::cmd_sample(a, w),
        Command::Verify(a) => verify::cmd_verify(&a.only, w),
    }
}

/// Parses `argv` (program name first) and runs it. Usage errors map to exit code 2.
pub fn run_args<I, T>(argv: I) -> CliResult<Output>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(argv) {
        Ok(cli) => run(&cli),
        Err(e) if e.use_stderr() => Err(CliError::input(e.to_string())),
        Err(e) => Ok(Output {
            text: e.to_string(),
            exit_code: 0,
        }),
    }
}
