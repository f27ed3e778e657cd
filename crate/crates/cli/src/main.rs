mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use kicked_top::Error;
use serde_json::json;

use commands::{run, Failure};
use config::{Cli, RunConfig};

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_VERIFY: u8 = 3;

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidSpin(_) => "invalid_spin",
        Error::DimensionMismatch(_) => "dimension_mismatch",
        Error::NotHermitian { .. } => "not_hermitian",
        Error::NotUnitary { .. } => "not_unitary",
        Error::Lapack { .. } => "lapack",
        Error::Domain(_) => "domain",
        Error::UndefinedAtBoundary { .. } => "undefined_at_boundary",
        Error::NonIntegerWinding { .. } => "non_integer_winding",
        Error::Io(_) => "io",
        Error::NotChiralFrame => "not_chiral_frame",
    }
}

fn report(kind: &str, message: &str) {
    eprintln!("{}", json!({ "error": true, "kind": kind, "message": message }));
}

fn usage(message: &str) -> ExitCode {
    eprintln!("kicked-top: {message}");
    ExitCode::from(EXIT_USAGE)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let cfg = match (cli.config, cli.command) {
        (Some(_), Some(command)) => {
            return usage(&format!("--config cannot be combined with the '{}' subcommand", command.name()))
        }
        (Some(path), None) => match output::read_config(&path) {
            Ok(cfg) => cfg,
            Err(msg) => return usage(&msg),
        },
        (None, Some(command)) => RunConfig { command },
        (None, None) => return usage("a subcommand or --config is required (see --help)"),
    };
    if let Err(msg) = cfg.validate() {
        return usage(&msg);
    }

    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            return usage(&format!("--threads: {e}"));
        }
    }

    let out = cfg.output_path();
    let outcome = match run(&cfg, &out) {
        Ok(o) => o,
        Err(Failure::Numerical(e)) => {
            report(error_kind(&e), &e.to_string());
            return ExitCode::from(EXIT_NUMERICAL);
        }
        Err(Failure::Io(msg)) => {
            report("io", &msg);
            return ExitCode::from(EXIT_NUMERICAL);
        }
    };
    if let Err(msg) = output::write_sidecar(&out, &cfg, &outcome.derived) {
        report("io", &msg);
        return ExitCode::from(EXIT_NUMERICAL);
    }
    let fmt = cfg.command.output();
    if fmt.emit_plot_script {
        let json = matches!(fmt.format, config::OutFormat::Json);
        if let Err(msg) = output::write_plot_script(&out, cfg.command.name(), json) {
            report("io", &msg);
            return ExitCode::from(EXIT_NUMERICAL);
        }
    }
    if outcome.verify_failed {
        report("verify", "one or more invariant checks failed; see the sidecar");
        return ExitCode::from(EXIT_VERIFY);
    }
    ExitCode::SUCCESS
}
