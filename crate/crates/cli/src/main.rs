mod commands;
mod config;
mod output;

use std::fs;
use std::process::ExitCode;

use anyhow::Context;
use clap::{CommandFactory, FromArgMatches, Parser};
use serde_json::json;

use crate::commands::{Registry, RunError};
use crate::config::{parse_flags, ConfigError, RunConfig};

/// Route-to-chaos simulations for a tilted-lattice condensate and the kicked rotor.
#[derive(Parser, Debug)]
#[command(name = "chaostrack", version)]
struct Cli {
    /// Command to run (see the list below).
    command: String,

    /// `--config FILE`, `--jobs N`, `--out PATH`, `--format csv|json`, and
    /// `--<key> <value>` overrides for any configuration key.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "FLAGS")]
    args: Vec<String>,
}

fn error_record(e: &RunError) -> serde_json::Value {
    let mut rec = json!({ "error": e.kind(), "message": e.to_string() });
    match e {
        RunError::Config(ConfigError::Parse { line, key, .. }) => {
            rec["line"] = json!(line);
            rec["key"] = json!(key);
        }
        RunError::Config(ConfigError::Validation { key, .. }) => rec["key"] = json!(key),
        RunError::Point { name, value, .. } => {
            rec["parameter"] = json!(name);
            rec["value"] = json!(value);
        }
        _ => {}
    }
    rec
}

fn execute(registry: &Registry, cli: &Cli) -> Result<(), RunError> {
    let cmd = registry.get(&cli.command).ok_or_else(|| {
        RunError::Config(ConfigError::Flag(format!(
            "unknown command `{}`; expected one of: {}",
            cli.command,
            registry.names().join(", ")
        )))
    })?;
    let flags = parse_flags(&cli.args)?;
    let mut cfg = RunConfig::default();
    cmd.preset(&mut cfg);
    if let Some(path) = &flags.config {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {path}"))
            .map_err(|e| RunError::Failed(format!("{e:#}")))?;
        cfg.apply_document(&text)?;
    }
    cfg.apply_overrides(&flags.overrides)?;
    cfg.resolve()?;
    cfg.validate()?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = flags.jobs {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| RunError::Failed(e.to_string()))?;
    let mut table = pool.install(|| cmd.run(&cfg))?;
    table.command = cmd.name().to_string();
    table.config = cfg.entries();

    let text = if flags.json { table.to_json() } else { table.to_csv() };
    match &flags.out {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing {path}"))
            .map_err(|e| RunError::Failed(format!("{e:#}")))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let registry = Registry::standard();
    let matches = Cli::command().after_help(registry.help()).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match execute(&registry, &cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_record(&e));
            match e {
                RunError::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
