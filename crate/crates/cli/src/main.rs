mod args;
mod commands;
mod plot;
mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use args::{BeltramiCommand, Cli, Command, DeformCommand};
use report::{parameter_sources, Context, UsageError};

/// Help text of the deepest subcommand named on the command line.
fn help_for(argv: &[String]) -> String {
    let mut cmd = Cli::command();
    cmd.build();
    for tok in argv.iter().skip(1) {
        if tok.starts_with('-') {
            continue;
        }
        match cmd.find_subcommand(tok) {
            Some(sub) => cmd = sub.clone(),
            None => break,
        }
    }
    cmd.render_help().to_string()
}

fn run(argv: Vec<String>) -> ExitCode {
    let matches = match Cli::command().try_get_matches_from(&argv) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind::*;
            return match e.kind() {
                DisplayHelp | DisplayVersion => {
                    let _ = e.print();
                    ExitCode::SUCCESS
                }
                DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = e.print();
                    ExitCode::from(1)
                }
                _ => {
                    eprintln!("{}", e.render());
                    eprintln!("{}", help_for(&argv));
                    ExitCode::from(1)
                }
            };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    let sources = parameter_sources(&matches);
    let mut ctx = Context::new();
    let (result, parameters) = match &cli.command {
        Command::Analyze(a) => (commands::analyze(a, &mut ctx), serde_json::to_value(a)),
        Command::Alpha(a) => (commands::alpha(a, &mut ctx), serde_json::to_value(a)),
        Command::Curvature(a) => (commands::curvature_cmd(a, &mut ctx), serde_json::to_value(a)),
        Command::Complete(a) => (commands::complete(a, &mut ctx), serde_json::to_value(a)),
        Command::Beltrami(BeltramiCommand::Decompose(a)) => {
            (commands::beltrami_decompose(a, &mut ctx), serde_json::to_value(a))
        }
        Command::Beltrami(BeltramiCommand::Solve(a)) => {
            (commands::beltrami_solve(a, &mut ctx), serde_json::to_value(a))
        }
        Command::Beltrami(BeltramiCommand::Roundtrip(a)) => {
            (commands::beltrami_roundtrip(a, &mut ctx), serde_json::to_value(a))
        }
        Command::Deform(DeformCommand::Convex(a)) => {
            (commands::deform_convex(a, &mut ctx), serde_json::to_value(a))
        }
        Command::Deform(DeformCommand::CompletePath(a)) => {
            (commands::deform_complete_path(a, &mut ctx), serde_json::to_value(a))
        }
        Command::Deform(DeformCommand::Revolve(a)) => {
            (commands::deform_revolve(a, &mut ctx), serde_json::to_value(a))
        }
        Command::Oracle(a) => (commands::oracle(a, &mut ctx), serde_json::to_value(a)),
    };
    let result = match result {
        Ok(r) => r,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}\n");
            eprintln!("{}", help_for(&argv));
            return ExitCode::from(1);
        }
        Err(e) => {
            eprintln!("numeric failure: {e:#}");
            return ExitCode::from(2);
        }
    };
    let report = ctx.finish(
        cli.command.name(),
        parameters.expect("argument structs serialize"),
        sources,
        result,
    );
    let mut out = std::io::stdout().lock();
    let written = serde_json::to_writer_pretty(&mut out, &report)
        .map_err(std::io::Error::from)
        .and_then(|_| writeln!(out));
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cannot write report: {e}");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    run(std::env::args().collect())
}
