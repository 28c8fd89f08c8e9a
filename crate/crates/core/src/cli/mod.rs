//! The `relu-nmd` command line: `generate | decompose | cluster | compress | bench`.
//!
//! Exit codes are 0 on success, 1 for usage errors and 2 for runtime
//! failures. `RELU_NMD_THREADS` caps the number of concurrent bench runs.

mod commands;
mod config;

use std::ffi::OsString;

use clap::Parser;

pub use commands::{bench_threads, run, run_bench, BenchRow};
pub use config::{
    parse_config, read_config_file, CaseName, Cli, Command, CommandLine, Flags, GenKind, RunConfig, KEYS,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

pub const THREADS_ENV: &str = "RELU_NMD_THREADS";

pub(crate) fn split(cli: Cli) -> (Command, Flags) {
    match cli.command {
        CommandLine::Generate(f) => (Command::Generate, f),
        CommandLine::Decompose(f) => (Command::Decompose, f),
        CommandLine::Cluster(f) => (Command::Cluster, f),
        CommandLine::Compress(f) => (Command::Compress, f),
        CommandLine::Bench(f) => (Command::Bench, f),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to stderr, one line each.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (command, flags) = split(cli);
    if command == Command::Bench {
        if let Err(e) = bench_threads() {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    }
    let config = match parse_config(command, &flags) {
        Ok(c) => c,
        Err(errors) => {
            for e in errors {
                eprintln!("error: {e}");
            }
            return EXIT_USAGE;
        }
    };
    match run(&config) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}
