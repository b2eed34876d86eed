use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use quadfold::dynamics::PropagationSettings;
use quadfold::experiments::{
    linspace, resolved_parameters, run_comparison_with, run_detuning_scan_with,
    run_omega_scaling_with, Preset, ResolvedParameter, ScenarioConfig,
};
use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

mod config;
mod report;

const SCALING_TRAPS_MHZ: [f64; 4] = [40.0, 80.0, 160.0, 320.0];

#[derive(Parser, Debug)]
#[command(
    name = "quadfold",
    version,
    about = "Exact, effective and rotating-wave dynamics of quadrupole-driven ions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the effective Hamiltonian from the commutator formula and the closed form
    Heff(Source),
    /// Propagate one scenario and write trajectories plus a summary
    Run(Output),
    /// Sweep Delta2 and record populations of levels 1 and 3 at t_end
    Scan(ScanArgs),
    /// Stroboscopic deviation versus trap frequency (40, 80, 160, 320 MHz)
    Scaling(Output),
    /// List the built-in presets
    Presets,
}

#[derive(Args, Debug)]
struct Source {
    /// Built-in scenario (see `quadfold presets`)
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,

    /// Scenario JSON file
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override one config leaf, e.g. `--set nu_quad=0` or `--set params.nu_trap=40`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    #[arg(long, value_name = "BOOL", action = clap::ArgAction::Set)]
    micromotion_map: Option<bool>,

    /// Sampling interval in nanoseconds
    #[arg(long, value_name = "NS")]
    sample_dt_ns: Option<u64>,

    /// Relative tolerance of the exact integrator
    #[arg(long, value_name = "TOL")]
    rel_tol: Option<f64>,
}

#[derive(Args, Debug)]
struct Output {
    #[command(flatten)]
    source: Source,

    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[command(flatten)]
    output: Output,

    /// Lowest Delta2 in MHz
    #[arg(long, default_value_t = -5.0, allow_negative_numbers = true)]
    delta2_min: f64,

    /// Highest Delta2 in MHz
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    delta2_max: f64,

    #[arg(long, default_value_t = 201)]
    delta2_points: usize,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Engine(#[from] quadfold::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Engine(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

/// Fields shared by every summary.json.
#[derive(Serialize)]
struct Provenance<'a> {
    version: &'static str,
    command: &'static str,
    preset: Option<&'a str>,
    model: &'static str,
    parameters: Vec<ResolvedParameter>,
    assumptions: &'a [String],
    scenario: &'a ScenarioConfig,
    rel_tol: f64,
    abs_tol: f64,
    max_step_fraction: f64,
}

impl<'a> Provenance<'a> {
    fn new(
        command: &'static str,
        src: &'a Source,
        cfg: &'a ScenarioConfig,
        settings: &PropagationSettings,
    ) -> Self {
        Provenance {
            version: quadfold::VERSION,
            command,
            preset: src.preset.as_deref(),
            model: cfg.model.kind(),
            parameters: resolved_parameters(&cfg.model),
            assumptions: &cfg.assumptions,
            scenario: cfg,
            rel_tol: settings.rel_tol,
            abs_tol: settings.abs_tol,
            max_step_fraction: settings.max_step_fraction,
        }
    }
}

fn resolve(src: &Source) -> Result<(ScenarioConfig, PropagationSettings), CliError> {
    let base = config::load(src.preset.as_deref(), src.config.as_deref())?;
    let mut cfg = config::apply_overrides(&base, &src.overrides)?;
    if let Some(map) = src.micromotion_map {
        cfg.micromotion_map = map;
    }
    if let Some(ns) = src.sample_dt_ns {
        cfg.sample_dt = ns as f64 * 1e-3;
    }
    cfg.validate()?;
    let mut settings = cfg.settings();
    if let Some(tol) = src.rel_tol {
        settings.rel_tol = tol;
    }
    settings.validate()?;
    Ok((cfg, settings))
}

fn heff(src: &Source) -> Result<(), CliError> {
    let (cfg, _) = resolve(src)?;
    let sys = cfg.model.build()?;
    let engine = quadfold::effective::effective_hamiltonian(&sys);
    let closed = cfg.model.closed_heff();
    println!("model: {}  (entries in rad/us)", cfg.model.kind());
    println!("\nH_eff from nested commutator:\n{engine}");
    println!("H_eff closed form:\n{closed}");
    println!(
        "max |engine - closed form| = {:.3e} rad/us",
        engine.max_abs_diff(&closed)
    );
    Ok(())
}

fn run(out: &Output) -> Result<(), CliError> {
    let (cfg, settings) = resolve(&out.source)?;
    let res = run_comparison_with(&cfg, &settings)?;

    #[derive(Serialize)]
    struct Summary<'a> {
        #[serde(flatten)]
        provenance: Provenance<'a>,
        initial_state: &'a str,
        micromotion_map: bool,
        t_end_us: f64,
        sample_dt_us: f64,
        samples: usize,
        exact_max_norm_drift: f64,
        dev_effective: Map<String, Value>,
        dev_rwa: Map<String, Value>,
        deviation_details: Value,
    }
    let summary = Summary {
        provenance: Provenance::new("run", &out.source, &cfg, &settings),
        initial_state: &cfg.initial_state,
        micromotion_map: cfg.micromotion_map,
        t_end_us: cfg.t_end,
        sample_dt_us: cfg.sample_dt,
        samples: res.exact.len(),
        exact_max_norm_drift: res.metadata.exact_max_norm_drift,
        dev_effective: report::deviation_map(&res.dev_effective),
        dev_rwa: report::deviation_map(&res.dev_rwa),
        deviation_details: serde_json::json!({ "effective": res.dev_effective, "rwa": res.dev_rwa }),
    };
    let written = report::write_all(
        &out.out_dir,
        &[
            (
                "trajectories_exact.csv",
                report::trajectory_csv(&res.labels, &res.exact),
            ),
            (
                "trajectories_effective.csv",
                report::trajectory_csv(&res.labels, &res.effective),
            ),
            (
                "trajectories_rwa.csv",
                report::trajectory_csv(&res.labels, &res.rwa),
            ),
            ("summary.json", report::json(&summary)),
        ],
    )?;
    for d in &res.dev_effective {
        let rwa = res.dev_rwa_of(&d.label).map_or(f64::NAN, |r| r.gated());
        println!(
            "{:>10}: effective {:.4e}  rwa {:.4e}",
            report::column(&d.label),
            d.gated(),
            rwa
        );
    }
    list(&written);
    Ok(())
}

fn scan(args: &ScanArgs) -> Result<(), CliError> {
    let out = &args.output;
    let (cfg, settings) = resolve(&out.source)?;
    let ordered = args.delta2_min.is_finite()
        && args.delta2_max.is_finite()
        && args.delta2_min <= args.delta2_max;
    if !ordered || args.delta2_points == 0 {
        return Err(CliError::Usage(
            "Delta2 grid needs finite min <= max and at least one point".into(),
        ));
    }
    let grid = linspace(args.delta2_min, args.delta2_max, args.delta2_points);
    let rows = run_detuning_scan_with(&cfg, &grid, cfg.t_end, &settings)?;
    let max_dev =
        |f: fn(&quadfold::experiments::ScanRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);

    #[derive(Serialize)]
    struct Summary<'a> {
        #[serde(flatten)]
        provenance: Provenance<'a>,
        t_obs_us: f64,
        nu_delta2_min_mhz: f64,
        nu_delta2_max_mhz: f64,
        points: usize,
        max_dev_effective: Map<String, Value>,
        max_dev_rwa: Map<String, Value>,
    }
    let (d1, d3) = (
        max_dev(|r| (r.p1_eff - r.p1_exact).abs()),
        max_dev(|r| (r.p3_eff - r.p3_exact).abs()),
    );
    let mut eff = Map::new();
    eff.insert("P1".into(), d1.into());
    eff.insert("P3".into(), d3.into());
    let mut rwa = Map::new();
    rwa.insert(
        "P1".into(),
        max_dev(|r| (r.p1_rwa - r.p1_exact).abs()).into(),
    );
    let summary = Summary {
        provenance: Provenance::new("scan", &out.source, &cfg, &settings),
        t_obs_us: cfg.t_end,
        nu_delta2_min_mhz: grid[0],
        nu_delta2_max_mhz: grid[grid.len() - 1],
        points: rows.len(),
        max_dev_effective: eff,
        max_dev_rwa: rwa,
    };
    let written = report::write_all(
        &out.out_dir,
        &[
            ("scan.csv", report::scan_csv(&rows)),
            ("summary.json", report::json(&summary)),
        ],
    )?;
    println!("max |P1_eff - P1_exact| = {:.4e}", d1);
    println!("max |P3_eff - P3_exact| = {:.4e}", d3);
    list(&written);
    Ok(())
}

fn scaling(out: &Output) -> Result<(), CliError> {
    if out.source.micromotion_map == Some(false) {
        return Err(CliError::Usage(
            "scaling always uses the micromotion map".into(),
        ));
    }
    let (mut cfg, settings) = resolve(&out.source)?;
    cfg.micromotion_map = true;
    let res = run_omega_scaling_with(&cfg, &SCALING_TRAPS_MHZ, &settings)?;

    #[derive(Serialize)]
    struct Summary<'a> {
        #[serde(flatten)]
        provenance: Provenance<'a>,
        t_end_us: f64,
        sampling: &'static str,
        rows: &'a [quadfold::experiments::ScalingRow],
        slope: f64,
    }
    let summary = Summary {
        provenance: Provenance::new("scaling", &out.source, &cfg, &settings),
        t_end_us: cfg.t_end,
        sampling: "stroboscopic, t_n = n / nu_trap",
        rows: &res.rows,
        slope: res.slope,
    };
    let written = report::write_all(
        &out.out_dir,
        &[
            ("scaling.csv", report::scaling_csv(&res.rows)),
            ("summary.json", report::json(&summary)),
        ],
    )?;
    for r in &res.rows {
        println!("nu_trap {:>6} MHz: D = {:.4e}", r.nu_trap, r.deviation);
    }
    println!("log-log slope = {:.3}", res.slope);
    list(&written);
    Ok(())
}

fn presets() {
    for p in Preset::ALL {
        let cfg = p.config();
        println!("{p}: {}", p.description());
        println!("  model: {}", cfg.model.kind());
        let params: Vec<String> = cfg
            .model
            .named_values()
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        println!("  params [MHz]: {}", params.join(" "));
        println!(
            "  initial_state={:?} t_end={} us sample_dt={} us micromotion_map={} monitored={:?}",
            cfg.initial_state, cfg.t_end, cfg.sample_dt, cfg.micromotion_map, cfg.monitored
        );
    }
}

fn list(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Heff(src) => heff(src),
        Command::Run(out) => run(out),
        Command::Scan(args) => scan(args),
        Command::Scaling(out) => scaling(out),
        Command::Presets => {
            presets();
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
