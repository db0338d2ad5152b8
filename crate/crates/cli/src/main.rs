mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

fn run(cli: Cli) -> fieldcal::Result<()> {
    match cli.command {
        Command::MakeBank {
            n_items,
            out_bank,
            out_params,
        } => commands::make_bank(n_items, &out_bank, &out_params),
        Command::GenReference {
            bank,
            params,
            out,
            out_thetas,
            engine,
        } => commands::gen_reference(&bank, &params, &engine.resolve()?, &out, out_thetas.as_deref()),
        Command::Simulate {
            bank,
            ref_params,
            out,
            out_retention,
            out_profiles,
            surrogate,
            engine,
        } => commands::simulate(
            &bank,
            &ref_params,
            &engine.resolve()?,
            &surrogate.resolve()?,
            &out,
            &out_retention,
            out_profiles.as_deref(),
        ),
        Command::Sample {
            probs,
            bank,
            out,
            engine,
        } => commands::sample(&probs, &bank, &engine.resolve()?, &out),
        Command::Fit {
            responses,
            bank,
            anchors,
            out,
            out_group,
            out_diagnostics,
            engine,
        } => commands::fit(
            &responses,
            &bank,
            anchors.as_deref(),
            &engine.resolve()?,
            &out,
            &out_group,
            out_diagnostics.as_deref(),
        ),
        Command::Score {
            responses,
            bank,
            params,
            out,
            engine,
        } => commands::score(&responses, &bank, &params, &engine.resolve()?, &out),
        Command::Ctt {
            responses,
            bank,
            out,
            corrected_item_total,
        } => commands::ctt(&responses, &bank, corrected_item_total, &out),
        Command::Compare { files, out } => commands::compare(&files, &out),
        Command::Report {
            files,
            responses,
            bank,
            retention,
            out_dir,
            engine,
        } => commands::report(
            &files,
            &responses,
            &bank,
            retention.as_deref(),
            &engine.resolve()?,
            &out_dir,
        ),
        Command::Pipeline {
            out_dir,
            bank,
            ref_params,
            n_items,
            exclude,
            corrected_item_total,
            surrogate,
            engine,
        } => commands::pipeline(
            &out_dir,
            bank.as_deref(),
            ref_params.as_deref(),
            n_items,
            &exclude,
            corrected_item_total,
            &surrogate.resolve()?,
            &engine.resolve()?,
        ),
    }
}

fn error_line(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": kind, "message": message }).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("{}", error_line("usage", first));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(e.kind(), &e.to_string()));
            ExitCode::FAILURE
        }
    }
}
