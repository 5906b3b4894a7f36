//! `mpve` command-line front end.

mod args;
mod commands;
mod runlog;

use std::process::ExitCode;

use clap::{CommandFactory, Parser};

use args::{Cli, Command};
use commands::{Ctx, Failure};

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::GenScene(_) => "gen-scene",
        Command::Simulate(_) => "simulate",
        Command::Reconstruct(_) => "reconstruct",
        Command::Metrics(_) => "metrics",
        Command::AnalyzeSpectrum(_) => "analyze-spectrum",
        Command::AnalyzeSnr(_) => "analyze-snr",
        Command::AnalyzePsf(_) => "analyze-psf",
        Command::MakeDataset(_) => "make-dataset",
        Command::ExportPng(_) => "export-png",
    }
}

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    let threads = cli.threads.unwrap_or_else(rayon::current_num_threads);
    if let Some(n) = cli.threads {
        if n == 0 {
            clap::Error::raw(clap::error::ErrorKind::ValueValidation, "--threads must be at least 1\n")
                .with_cmd(&Cli::command())
                .exit();
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("thread pool is configured once");
    }
    let ctx = Ctx {
        log_path: cli.log.clone(),
        threads,
    };
    let name = subcommand_name(&cli.command);
    let result = match &cli.command {
        Command::GenScene(a) => commands::gen_scene(a, &ctx),
        Command::Simulate(a) => commands::simulate(a, &ctx),
        Command::Reconstruct(a) => commands::reconstruct_cmd(a, &ctx),
        Command::Metrics(a) => commands::metrics(a, &ctx),
        Command::AnalyzeSpectrum(a) => commands::analyze_spectrum(a, &ctx),
        Command::AnalyzeSnr(a) => commands::analyze_snr(a, &ctx),
        Command::AnalyzePsf(a) => commands::analyze_psf(a, &ctx),
        Command::MakeDataset(a) => commands::make_dataset_cmd(a, &ctx),
        Command::ExportPng(a) => commands::export_png(a, &ctx),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { stage, error }) => {
            // Bad values that only surface at run time are still usage errors.
            if matches!(error.downcast_ref::<mpve::Error>(), Some(mpve::Error::Usage(_))) {
                let mut cmd = Cli::command();
                let usage = cmd
                    .find_subcommand_mut(name)
                    .map(|c| c.render_usage().to_string())
                    .unwrap_or_default();
                eprintln!("error: {error:#}\n\n{usage}\n\nFor more information, try 'mpve {name} --help'.");
                return ExitCode::from(2);
            }
            eprintln!("error: {name} failed at stage `{stage}`: {error:#}");
            ExitCode::from(1)
        }
    }
}
