//! `spinmetro`: Cramér–Rao bounds for a thermal spin probe read out through a
//! coarsened measurement reference.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 validation
//! failure.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod error;
mod report;

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spinmetro::coarsen::CoarseningModel;
use spinmetro::experiment::{bound, mc_validate, sweep, BoundReport, McConfig};
use spinmetro::measurement::standard_povm;

use config::{Format, Layer, RunConfig};
use error::{CliError, CliResult};

const MIN_SHOTS: u64 = 1_000;
const MIN_REPS: usize = 10;

#[derive(Parser)]
#[command(
    name = "spinmetro",
    version,
    about = "Cramér–Rao bounds for a thermal spin under a coarsened reference frame"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// QFI, standard-POVM CFI and both precisions at each η, checked against oracles.
    Bound(RunArgs),
    /// Precision table over the η grid.
    Sweep(RunArgs),
    /// Sample, fit by maximum likelihood and compare with the classical bound.
    McValidate(McArgs),
}

#[derive(Args, Default)]
struct RunArgs {
    /// `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<std::path::PathBuf>,
    /// fig1 | fig2 | fig3
    #[arg(long)]
    preset: Option<String>,
    /// physical | phenomenological
    #[arg(long)]
    mode: Option<String>,
    /// Spin quantum number, e.g. 1/2, 1, 3/2.
    #[arg(long)]
    spin: Option<String>,
    /// Field polar angle in radians; accepts forms like pi/3.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    omega: Option<String>,
    #[arg(long)]
    temperature: Option<String>,
    /// sech²(δ/2)/(4T), spin-½ phenomenological input.
    #[arg(long)]
    alpha: Option<String>,
    /// tanh²(δ/2), spin-½ phenomenological input.
    #[arg(long)]
    tanh2: Option<String>,
    /// Population of m = +1/2, spin-½ phenomenological input.
    #[arg(long)]
    p1: Option<String>,
    /// Jitter axis: x | y | z.
    #[arg(long)]
    axis: Option<String>,
    /// A single η instead of a grid.
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    eta_start: Option<String>,
    #[arg(long)]
    eta_stop: Option<String>,
    #[arg(long)]
    eta_count: Option<String>,
    /// Information used by sweep: quantum | classical.
    #[arg(long)]
    fisher: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<String>,
    /// csv | json
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct McArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Samples per replication (default 100000).
    #[arg(long)]
    shots: Option<String>,
    /// Number of replications (default 200).
    #[arg(long)]
    reps: Option<String>,
    /// Allowed relative deviation of the covariance trace (default 0.1).
    #[arg(long)]
    tolerance: Option<String>,
}

impl RunArgs {
    fn layer(&self) -> Layer {
        let pairs = [
            ("preset", &self.preset),
            ("mode", &self.mode),
            ("spin", &self.spin),
            ("theta", &self.theta),
            ("omega", &self.omega),
            ("temperature", &self.temperature),
            ("alpha", &self.alpha),
            ("tanh2", &self.tanh2),
            ("p1", &self.p1),
            ("axis", &self.axis),
            ("eta", &self.eta),
            ("eta_start", &self.eta_start),
            ("eta_stop", &self.eta_stop),
            ("eta_count", &self.eta_count),
            ("fisher", &self.fisher),
            ("seed", &self.seed),
            ("out", &self.out),
            ("format", &self.format),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.clone().map(|v| (k.to_string(), v)))
            .collect()
    }

    fn resolve(&self, extra: Layer) -> CliResult<RunConfig> {
        let file = match &self.config {
            Some(path) => config::read_config_file(path)?,
            None => Layer::new(),
        };
        let mut flags = self.layer();
        flags.extend(extra);
        config::resolve(file, flags)
    }
}

fn emit(config: &RunConfig, text: &str) -> CliResult<()> {
    match &config.out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

fn cmd_bound(args: &RunArgs) -> CliResult<()> {
    let config = args.resolve(Layer::new())?;
    let povm = standard_povm();
    let reports = config
        .etas
        .iter()
        .map(|&eta| {
            bound(
                &config.point,
                CoarseningModel::new(config.axis, eta)?,
                &povm,
            )
        })
        .collect::<spinmetro::Result<Vec<BoundReport>>>()?;
    let text = match config.format.unwrap_or(Format::Json) {
        Format::Json => report::bound_json(&config.echo, &reports, config.seed),
        Format::Csv => {
            let rows: Vec<_> = reports
                .iter()
                .map(|r| spinmetro::experiment::SweepRow {
                    eta: r.model.eta,
                    gamma: r.model.gamma(),
                    simultaneous: r.simultaneous,
                    independent: r.independent,
                    f11: r.qfi.get(0, 0),
                    f12: r.qfi.get(0, 1),
                    f22: r.qfi.get(1, 1),
                })
                .collect();
            report::sweep_csv(&rows)
        }
    };
    emit(&config, &text)
}

fn cmd_sweep(args: &RunArgs) -> CliResult<()> {
    let config = args.resolve(Layer::new())?;
    let rows = sweep(
        &config.point,
        config.axis,
        &config.etas,
        config.fisher,
        &standard_povm(),
    )?;
    let text = match config.format.unwrap_or(Format::Csv) {
        Format::Csv => report::sweep_csv(&rows),
        Format::Json => {
            let model = CoarseningModel::new(config.axis, config.etas[0])?;
            let notes = bound(&config.point, model, &standard_povm())
                .map(|r| r.errata_notes)
                .unwrap_or_default();
            report::sweep_json(&config.echo, &rows, &notes, config.seed)
        }
    };
    emit(&config, &text)
}

fn cmd_mc_validate(args: &McArgs) -> CliResult<()> {
    let extra: Layer = [
        ("shots", &args.shots),
        ("reps", &args.reps),
        ("tolerance", &args.tolerance),
    ]
    .into_iter()
    .filter_map(|(k, v)| v.clone().map(|v| (k.to_string(), v)))
    .collect();
    let mut config = args.run.resolve(extra)?;
    if config.format == Some(Format::Csv) {
        return Err(CliError::config("format", "mc-validate writes JSON only"));
    }
    if config.shots < MIN_SHOTS {
        return Err(CliError::config(
            "shots",
            format!("need at least {MIN_SHOTS}"),
        ));
    }
    if config.reps < MIN_REPS {
        return Err(CliError::config(
            "reps",
            format!("need at least {MIN_REPS}"),
        ));
    }
    let eta = config.etas[0];
    if config.etas.len() > 1 {
        log::info!("mc-validate runs at a single eta; using the first grid point {eta}");
    }
    config.echo.insert("eta".into(), serde_json::json!(eta));
    config.echo.remove("eta_grid");
    config
        .echo
        .insert("shots".into(), serde_json::json!(config.shots));
    config
        .echo
        .insert("reps".into(), serde_json::json!(config.reps));
    config
        .echo
        .insert("tolerance".into(), report::json_number(config.tolerance));

    let model = CoarseningModel::new(config.axis, eta)?;
    let povm = standard_povm();
    let mc = McConfig {
        n_shots: config.shots,
        n_reps: config.reps,
        seed: config.seed,
        tolerance: config.tolerance,
    };
    let result = mc_validate(&config.point, model, &povm, &mc)?;
    let notes = bound(&config.point, model, &povm)
        .map(|r| r.errata_notes)
        .unwrap_or_default();
    emit(&config, &report::mc_json(&config.echo, &result, &notes))?;
    if !result.identifiable {
        return Err(CliError::Validation(format!(
            "classical Fisher information is singular; not identifiable: {}",
            result.non_identifiable.join(", ")
        )));
    }
    if !result.pass {
        return Err(CliError::Validation(format!(
            "covariance trace ratio {} outside 1 ± {}",
            result
                .ratio
                .map(report::format_number)
                .unwrap_or_else(|| "nan".into()),
            config.tolerance
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Bound(args) => cmd_bound(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::McValidate(args) => cmd_mc_validate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spinmetro: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
