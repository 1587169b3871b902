mod commands;
mod config;
mod output;

use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;

use config::{Command, RunConfig};
use output::Output;

fn run(mut cfg: RunConfig) -> Result<()> {
    cfg.validate()?;
    cfg.resolve_output();
    let out = Output::create(cfg.common.output.as_deref().expect("resolved"))?;
    out.json("config.json", &cfg)?;
    let c = &cfg.common;
    match &cfg.command {
        Command::Fit(a) => commands::fit::run(c, a, &out),
        Command::Simulate(a) => commands::simulate::run(c, a, &out),
        Command::Forecast(a) => commands::forecast::run(c, a, &out),
        Command::Qirf(a) => commands::qirf::run(c, a, &out),
        Command::Stress(a) => commands::stress::run(c, a, &out),
        Command::Diagnose(a) => commands::diagnose::run(a, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cfg = RunConfig::parse();
    let command = cfg.command.name();
    match run(cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = match e.downcast_ref::<qvp_core::Error>() {
                Some(qvp_core::Error::Ingestion { .. }) => "ingestion",
                Some(qvp_core::Error::Parameter(_)) => "parameter",
                Some(qvp_core::Error::LevelMismatch { .. }) => "level_mismatch",
                Some(qvp_core::Error::Io(_)) => "io",
                Some(_) => "engine",
                None => "run",
            };
            let report = serde_json::json!({
                "command": command,
                "kind": kind,
                "error": format!("{e:#}"),
            });
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}
