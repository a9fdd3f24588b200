//! `fbnl`: command-line driver for the free-boundary laboratory.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::commands::{CliError, Ctx};
use crate::config::Config;
use crate::output::{Check, OutDir};

#[derive(Parser, Debug)]
#[command(name = "fbnl", version, about = "Fractional free-boundary laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file (`key = value` lines under `[section]` headers).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration entry, e.g. `--set grid.nx=128`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory; `FBNL_OUT` takes precedence when set.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Upper bound on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Shorthand for `--set params.s=...`.
    #[arg(long, global = true)]
    s: Option<f64>,
    /// Shorthand for `--set params.gamma=...`.
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Shorthand for `--set params.n=...`.
    #[arg(long, global = true)]
    n: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// One-dimensional constants C1s, A1, A2 and the amplitude A.
    Constants,
    /// Angular profile g with the functions f and F.
    Profile,
    /// Extension of x_+^beta against a direct fractional Laplacian.
    Extend,
    /// Energy minimizer with free-boundary report.
    Minimize,
    /// Weiss energy sweep at a free-boundary point.
    Weiss,
    /// Monneau functional sweep against the half-plane solution.
    Monneau,
    /// Blow-up sequence at a free-boundary point.
    Blowup,
    /// Contact density and growth at a free-boundary point.
    Density,
    /// Domain variation of a candidate against the half-plane solution.
    Domvar,
    /// Residual of the radial subsolution over a sweep of R.
    SubsolutionCheck,
    /// Linearized problem around the half-plane solution.
    Linearized,
    /// Full acceptance suite.
    VerifyAll,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Profile => "profile",
            Command::Extend => "extend",
            Command::Minimize => "minimize",
            Command::Weiss => "weiss",
            Command::Monneau => "monneau",
            Command::Blowup => "blowup",
            Command::Density => "density",
            Command::Domvar => "domvar",
            Command::SubsolutionCheck => "subsolution-check",
            Command::Linearized => "linearized",
            Command::VerifyAll => "verify-all",
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config, String> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            Config::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => Config::default(),
    };
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(s) = cli.s {
        cfg.set("params.s", &s.to_string());
    }
    if let Some(g) = cli.gamma {
        cfg.set("params.gamma", &g.to_string());
    }
    if let Some(n) = cli.n {
        cfg.set("params.n", &n.to_string());
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli) -> PathBuf {
    match std::env::var_os("FBNL_OUT") {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => cli.out.clone().unwrap_or_else(|| PathBuf::from("fbnl_out")),
    }
}

fn run(cli: &Cli) -> Result<Vec<Check>, CliError> {
    let start = Instant::now();
    let cfg = load_config(cli).map_err(CliError::Config)?;
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let params = commands::params_from(&cfg)?;
    let mut out = OutDir::open(&out_dir(cli)).map_err(CliError::Config)?;
    let mut ctx = Ctx { cfg: &cfg, out: &mut out, params, grid: None };
    let checks = match cli.command {
        Command::Constants => commands::constants(&mut ctx),
        Command::Profile => commands::profile(&mut ctx),
        Command::Extend => commands::extend(&mut ctx),
        Command::Minimize => commands::minimize(&mut ctx),
        Command::Weiss => commands::weiss(&mut ctx),
        Command::Monneau => commands::monneau(&mut ctx),
        Command::Blowup => commands::blowup(&mut ctx),
        Command::Density => commands::density(&mut ctx),
        Command::Domvar => commands::domvar(&mut ctx),
        Command::SubsolutionCheck => commands::subsolution_check(&mut ctx),
        Command::Linearized => commands::linearized(&mut ctx),
        Command::VerifyAll => commands::verify_all(&mut ctx),
    }?;
    let grid = ctx.grid.take();
    let d = params.derived();
    let manifest = json!({
        "command": cli.command.name(),
        "tool_version": env!("CARGO_PKG_VERSION"),
        "params": {
            "s": params.s, "gamma": params.gamma, "n": params.n,
            "alpha": d.alpha, "beta": d.beta, "kappa_vol": d.kappa_vol,
            "kappa_surf": d.kappa_surf, "energy_scale_exp": d.energy_scale_exp,
        },
        "grid": grid,
        "config_hash": cfg.hash(),
        "config": cfg.entries(),
        "wall_time_seconds": start.elapsed().as_secs_f64(),
        "outputs": out.entries,
        "checks": checks,
    });
    out.write_manifest(&manifest).map_err(CliError::Config)?;
    Ok(checks)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(checks) => {
            let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
            if failed.is_empty() {
                ExitCode::SUCCESS
            } else {
                eprintln!("fbnl: failed checks: {}", failed.join(", "));
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("fbnl: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
