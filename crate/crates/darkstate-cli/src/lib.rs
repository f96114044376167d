//! Command-line front end: run configurations, solver dispatch, and
//! serialization to CSV, JSON and binary PPM heatmaps.
//!
//! All physical inputs are taken in units of gamma (times in 1/gamma); the
//! `--gamma` flag rescales them onto physical rates before dispatch.

pub mod colormap;
pub mod config;
pub mod output;
pub mod runner;

pub use config::{parse_config, Cli, RunConfig, UsageError};
pub use runner::run;

/// Full CLI entry point with the documented exit codes: 0 on success, 2 for
/// usage/configuration errors, 1 for runtime failures.
pub fn main_impl<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let config = match parse_config(cli) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match run(&config) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
