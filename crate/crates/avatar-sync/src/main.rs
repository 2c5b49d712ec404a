use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use avatar_sync::config::{lint_config_file, load_config_file};
use avatar_sync::harness::{run_scenario, RunOptions, Scenario, TransportKind};
use avatar_sync::log::replay_log;
use avatar_sync::server::{Server, ServerOptions, LOG_DIR_ENV};
use avatar_sync_core::narrative::Severity;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "avatar-sync", version, about = "Shared-avatar session server and simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the session server.
    Serve {
        #[arg(long)]
        bind: SocketAddr,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "logs")]
        log_dir: PathBuf,
        /// WebSocket + static file listener; defaults to the bind port + 1.
        #[arg(long)]
        ws_bind: Option<SocketAddr>,
        /// Directory served over HTTP on the WebSocket port.
        #[arg(long)]
        web_root: Option<PathBuf>,
    },
    /// Simulated clients.
    Sim {
        #[command(subcommand)]
        command: SimCommand,
    },
    /// Session logs.
    Replay {
        #[command(subcommand)]
        command: ReplayCommand,
    },
    /// Story config files.
    Config {
        #[command(subcommand)]
        command: ConfigCommand,
    },
}

#[derive(Subcommand)]
enum SimCommand {
    /// Run one scenario and print its report as JSON.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Room seed; overrides the scenario's.
        #[arg(long)]
        seed: Option<u64>,
        /// Story config; overrides the scenario's.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = TransportKind::Tcp)]
        transport: TransportKind,
        /// Keep the room log here instead of a temporary directory.
        #[arg(long)]
        log_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ReplayCommand {
    /// Re-run a log through the reducer and compare every output.
    Verify {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum ConfigCommand {
    /// Print findings; fails when any is an error.
    Lint { file: PathBuf },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Serve {
            bind,
            config,
            seed,
            log_dir,
            ws_bind,
            web_root,
        } => serve(bind, &config, seed, log_dir, ws_bind, web_root),
        Command::Sim {
            command:
                SimCommand::Run {
                    scenario,
                    seed,
                    config,
                    transport,
                    log_dir,
                },
        } => sim_run(&scenario, seed, config, transport, log_dir),
        Command::Replay {
            command: ReplayCommand::Verify { log, config, seed },
        } => replay_verify(&log, &config, seed),
        Command::Config {
            command: ConfigCommand::Lint { file },
        } => lint(&file),
    }
}

fn serve(
    bind: SocketAddr,
    config: &Path,
    seed: u64,
    log_dir: PathBuf,
    ws_bind: Option<SocketAddr>,
    web_root: Option<PathBuf>,
) -> Result<ExitCode> {
    let config = Arc::new(load_config_file(config)?);
    let log_dir = std::env::var_os(LOG_DIR_ENV).map(PathBuf::from).unwrap_or(log_dir);
    let ws_bind = match ws_bind {
        Some(addr) => addr,
        None => {
            let port = bind.port().checked_add(1).filter(|_| bind.port() != 0);
            SocketAddr::new(bind.ip(), port.unwrap_or(0))
        }
    };
    let mut opts = ServerOptions::new(bind, config, seed, &log_dir);
    opts.ws_bind = Some(ws_bind);
    opts.web_root = web_root;
    let server = Server::start(opts)?;
    eprintln!("tcp       {}", server.tcp_addr());
    if let Some(ws) = server.ws_addr() {
        eprintln!("websocket ws://{ws}/");
    }
    eprintln!("logs      {}", log_dir.display());
    server.wait();
    Ok(ExitCode::SUCCESS)
}

fn sim_run(
    path: &Path,
    seed: Option<u64>,
    config: Option<PathBuf>,
    transport: TransportKind,
    log_dir: Option<PathBuf>,
) -> Result<ExitCode> {
    let scenario = Scenario::load(path).with_context(|| format!("loading {}", path.display()))?;
    let Some(config_path) = config.or_else(|| scenario.config.clone()) else {
        bail!("no story config: pass --config or set `config` in the scenario");
    };
    let config = Arc::new(load_config_file(&config_path)?);
    let opts = RunOptions {
        transport,
        seed,
        log_dir,
        ..RunOptions::default()
    };
    let report = run_scenario(&scenario, config, &opts)?;
    println!("{}", report.to_json());
    Ok(if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn replay_verify(log: &Path, config: &Path, seed: u64) -> Result<ExitCode> {
    let config = Arc::new(load_config_file(config)?);
    match replay_log(log, config, seed) {
        Ok(replay) => {
            let summary = serde_json::json!({
                "ok": true,
                "steps": replay.steps,
                "outputs": replay.outputs.len(),
                "truncated": replay.truncated,
                "score": replay.state.score(),
                "mission_complete": replay.state.mission_complete(),
                "state": serde_json::from_str::<serde_json::Value>(&replay.state.snapshot_json())?,
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            println!("{}", serde_json::json!({ "ok": false, "error": e.to_string() }));
            Ok(ExitCode::FAILURE)
        }
    }
}

fn lint(file: &Path) -> Result<ExitCode> {
    let findings = lint_config_file(file)?;
    for f in &findings {
        let level = match f.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        let field = if f.field.is_empty() { "<root>" } else { &f.field };
        println!("{level}: {field}: {}", f.message);
    }
    let errors = findings.iter().filter(|f| f.severity == Severity::Error).count();
    if errors == 0 {
        println!("{}: ok ({} warnings)", file.display(), findings.len());
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}
