//! `plate-hom` command-line front end.
//!
//! Exit status: 0 success, 1 parse or validation error, 2 solver failure,
//! 3 failed property checks under `--check`.

mod args;
mod commands;
mod output;

use std::collections::HashSet;
use std::ffi::OsString;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use output::Run;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Solver(String),
}

impl From<plate_hom::Error> for Failure {
    fn from(e: plate_hom::Error) -> Self {
        match e {
            plate_hom::Error::NotConverged { .. }
            | plate_hom::Error::Indefinite(_)
            | plate_hom::Error::SingularReduction => Failure::Solver(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

/// Flag tokens from a TOML config, inserted before the explicit arguments.
/// Keys already given on the command line are skipped.
fn config_args(args: &[OsString]) -> Result<Vec<OsString>, String> {
    let strings: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut path = None;
    for (i, a) in strings.iter().enumerate() {
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else if a == "--config" {
            path = strings.get(i + 1).cloned();
        }
    }
    let Some(path) = path else {
        return Ok(Vec::new());
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let table: toml::Table = text.parse().map_err(|e| format!("config {path}: {e}"))?;
    let given: HashSet<&str> =
        strings.iter().filter_map(|a| a.strip_prefix("--")).map(|a| a.split('=').next().unwrap_or(a)).collect();
    let scalar = |key: &str, v: &toml::Value| -> Result<String, String> {
        match v {
            toml::Value::String(s) => Ok(s.clone()),
            toml::Value::Integer(i) => Ok(i.to_string()),
            toml::Value::Float(f) => Ok(f.to_string()),
            other => Err(format!("config key {key}: unsupported value {other}")),
        }
    };
    let mut out = Vec::new();
    for (key, value) in &table {
        if given.contains(key.as_str()) || key == "config" {
            continue;
        }
        match value {
            toml::Value::Boolean(true) => out.push(format!("--{key}")),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                let parts = items.iter().map(|v| scalar(key, v)).collect::<Result<Vec<_>, _>>()?;
                out.push(format!("--{key}={}", parts.join(",")));
            }
            v => out.push(format!("--{key}={}", scalar(key, v)?)),
        }
    }
    Ok(out.into_iter().map(OsString::from).collect())
}

fn parse() -> Result<Cli, ExitCode> {
    let args: Vec<OsString> = std::env::args_os().collect();
    let extra = match config_args(&args) {
        Ok(extra) => extra,
        Err(e) => {
            eprintln!("error: {e}");
            return Err(ExitCode::from(1));
        }
    };
    // Program name and subcommand come first; config flags follow.
    let mut full: Vec<OsString> = args.iter().take(2).cloned().collect();
    full.extend(extra);
    full.extend(args.iter().skip(2).cloned());
    Cli::try_parse_from(full).map_err(|e| {
        let _ = e.print();
        ExitCode::from(if e.use_stderr() { 1 } else { 0 })
    })
}

fn run(command: &Command) -> Result<bool, Failure> {
    let common = command.common();
    if common.deterministic {
        rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build_global()
            .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
    }
    let mut run = Run::new(&common.out)?;
    let passed = match command {
        Command::Homogenize(a) => commands::homogenize_cmd(a, &mut run),
        Command::GammaSweep(a) => commands::gamma_sweep_cmd(a, &mut run),
        Command::PlateSolve(a) => commands::plate_solve_cmd(a, &mut run),
        Command::Theorem1(a) => commands::theorem1_cmd(a, &mut run),
        Command::Griso(a) => commands::griso_cmd(a, &mut run),
        Command::GclosureSample(a) => commands::gclosure_cmd(a, &mut run),
        Command::Patchwork(a) => commands::patchwork_cmd(a, &mut run),
        Command::GenMicro(a) => commands::gen_micro_cmd(a, &mut run),
    }?;
    let parameters = serde_json::to_value(command).expect("arguments serialize");
    run.finish(command.name(), parameters, common.check.then_some(passed))?;
    Ok(passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match parse() {
        Ok(cli) => cli,
        Err(code) => return code,
    };
    match run(&cli.command) {
        Ok(passed) if passed || !cli.command.common().check => ExitCode::SUCCESS,
        Ok(_) => {
            eprintln!("{}: checks failed", cli.command.name());
            ExitCode::from(3)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("solver failure: {e}");
            ExitCode::from(2)
        }
    }
}
