//! The `vora-filter` command line.
//!
//! Exit codes: 0 success, 2 input error, 3 optimization stalled, 4
//! verification failure.
//!
//! When `--camera` or `--observer` is omitted, the file of the same name
//! in `$VORA_FILTER_DATA` is used if that variable is set, otherwise the
//! bundled fixture (synthetic Gaussian camera, CIE 1931 2° observer).

pub mod check;
mod svg;

use std::collections::HashSet;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use serde_json::json;

use crate::calculus::{BasisSpec, VoraProblem};
use crate::error::{Error, Result};
use crate::optimizer::{optimize, Init, Method, OptimizerConfig, Termination};
use crate::spectral::{
    format_value, load_filter, load_sensor_set, SensorSet, WavelengthGrid, CIE1931_2DEG_CSV,
    GAUSSIAN_CAMERA_CSV,
};
use crate::vora::{filtered_vora_value, vora_value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_STALLED: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

pub const DATA_DIR_ENV: &str = "VORA_FILTER_DATA";
pub const OBSERVER_FIXTURE: &str = "cie1931_2deg_5nm.csv";
pub const CAMERA_FIXTURE: &str = "gaussian_camera.csv";

const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Parser)]
#[command(
    name = "vora-filter",
    version,
    about = "Vora-Value evaluation and colorimetric filter design"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the camera's Vora-Value, optionally with a filter in front of it.
    Evaluate(EvaluateArgs),
    /// Design a filter that maximizes the filtered Vora-Value.
    Optimize(OptimizeArgs),
    /// Verify the analytic gradient and Hessian identities on random filters.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Camera sensitivities CSV (`wavelength,r,g,b`).
    #[arg(long)]
    pub camera: Option<PathBuf>,
    /// Observer colour matching functions CSV (`wavelength,x,y,z`).
    #[arg(long)]
    pub observer: Option<PathBuf>,
    /// Sampling grid as start:step:count.
    #[arg(long, default_value = "400:10:31")]
    pub grid: WavelengthGrid,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    /// Filter CSV (`wavelength,transmittance`).
    #[arg(long)]
    pub filter: Option<PathBuf>,
    /// Print one JSON line instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    /// Initial filter CSV; overrides --init.
    #[arg(long)]
    pub filter: Option<PathBuf>,
    /// grad or newton.
    #[arg(long, default_value = "grad")]
    pub method: Method,
    #[arg(long, default_value_t = 1e-4)]
    pub alpha: f64,
    /// Optimize over f = B c with a smooth basis, e.g. cosine:8.
    #[arg(long)]
    pub basis: Option<BasisSpec>,
    /// ones or random (seeded by --seed).
    #[arg(long, default_value = "ones")]
    pub init: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tol_obj: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_grad: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tau_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub tau_max: f64,
    /// Write the final filter CSV here.
    #[arg(long)]
    pub out_filter: Option<PathBuf>,
    /// Write the per-iteration trace CSV here.
    #[arg(long)]
    pub out_trace: Option<PathBuf>,
    /// Write an SVG plot of the filter and the Vora-Value trace here.
    #[arg(long)]
    pub out_svg: Option<PathBuf>,
    /// Write the basis coefficients CSV here (requires --basis).
    #[arg(long)]
    pub emit_coeffs: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long)]
    pub json: bool,
    /// Corrupt the analytic gradient (negative control for the suite).
    #[arg(long, hide = true)]
    pub sabotage: bool,
}

/// Parses `args` (including the program name) and runs the command,
/// writing to stdout/stderr. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(cli, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Evaluate(args) => cmd_evaluate(&args, out),
        Command::Optimize(args) => cmd_optimize(&args, out),
        Command::Check(args) => cmd_check(&args, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::NoAscent | Error::SingularSystem { .. } => EXIT_STALLED,
                _ => EXIT_INPUT,
            }
        }
    }
}

struct Loaded {
    label: String,
    sensors: SensorSet,
}

fn load_sensors(
    explicit: Option<&Path>,
    fixture_name: &str,
    bundled: &str,
    grid: WavelengthGrid,
) -> Result<Loaded> {
    if let Some(path) = explicit {
        return Ok(Loaded {
            label: path.display().to_string(),
            sensors: load_sensor_set(path, grid)?,
        });
    }
    if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
        let path = Path::new(&dir).join(fixture_name);
        return Ok(Loaded {
            label: path.display().to_string(),
            sensors: load_sensor_set(&path, grid)?,
        });
    }
    Ok(Loaded {
        label: format!("<bundled {fixture_name}>"),
        sensors: SensorSet::from_csv(bundled, grid).map_err(|e| Error::File {
            path: fixture_name.into(),
            source: Box::new(e),
        })?,
    })
}

fn load_inputs(inputs: &InputArgs) -> Result<(Loaded, Loaded)> {
    let camera = load_sensors(
        inputs.camera.as_deref(),
        CAMERA_FIXTURE,
        GAUSSIAN_CAMERA_CSV,
        inputs.grid,
    )?;
    let observer = load_sensors(
        inputs.observer.as_deref(),
        OBSERVER_FIXTURE,
        CIE1931_2DEG_CSV,
        inputs.grid,
    )?;
    Ok((camera, observer))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::from(e).in_file(path))
}

fn io(e: std::io::Error) -> Error {
    Error::Io(e)
}

pub fn cmd_evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> Result<i32> {
    let (camera, observer) = load_inputs(&args.inputs)?;
    let nu = vora_value(&camera.sensors, &observer.sensors)?;
    let filtered = match &args.filter {
        Some(path) => {
            let filter = load_filter(path, args.inputs.grid)?;
            Some(filtered_vora_value(
                &camera.sensors,
                &observer.sensors,
                &filter,
            )?)
        }
        None => None,
    };

    if args.json {
        let line = json!({
            "schema_version": SCHEMA_VERSION,
            "command": "evaluate",
            "grid": args.inputs.grid.to_string(),
            "camera": camera.label,
            "observer": observer.label,
            "vora": nu.value(),
            "filtered_vora": filtered.map(|v| v.value()),
        });
        writeln!(out, "{line}").map_err(io)?;
    } else {
        let grid = args.inputs.grid;
        writeln!(out, "grid           {grid} ({} samples)", grid.count()).map_err(io)?;
        writeln!(out, "camera         {}", camera.label).map_err(io)?;
        writeln!(out, "observer       {}", observer.label).map_err(io)?;
        writeln!(out, "vora           {:.12}", nu.value()).map_err(io)?;
        if let Some(v) = filtered {
            writeln!(out, "filtered vora  {:.12}", v.value()).map_err(io)?;
        }
    }
    Ok(EXIT_OK)
}

fn check_distinct(paths: &[Option<&Path>]) -> Result<()> {
    let mut seen = HashSet::new();
    for p in paths.iter().flatten() {
        if !seen.insert(p.to_path_buf()) {
            return Err(Error::InvalidConfig(format!(
                "path {} is used more than once",
                p.display()
            )));
        }
    }
    Ok(())
}

fn build_config(args: &OptimizeArgs) -> Result<OptimizerConfig> {
    let init = match (&args.filter, args.init.as_str()) {
        (Some(path), _) => {
            Init::Filter(load_filter(path, args.inputs.grid)?.transmittance().clone())
        }
        (None, "ones") => Init::Ones,
        (None, "random") => Init::Random(args.seed),
        (None, other) => {
            return Err(Error::InvalidConfig(format!(
                "--init must be ones or random, got {other:?}"
            )))
        }
    };
    let config = OptimizerConfig {
        method: args.method,
        alpha: args.alpha,
        max_iters: args.max_iters,
        tol_obj: args.tol_obj,
        tol_grad: args.tol_grad,
        tau_min: args.tau_min,
        tau_max: args.tau_max,
        init,
        basis: args.basis,
        ..OptimizerConfig::default()
    };
    config.validate()?;
    Ok(config)
}

pub fn cmd_optimize(args: &OptimizeArgs, out: &mut dyn Write) -> Result<i32> {
    check_distinct(&[
        args.inputs.camera.as_deref(),
        args.inputs.observer.as_deref(),
        args.filter.as_deref(),
        args.out_filter.as_deref(),
        args.out_trace.as_deref(),
        args.out_svg.as_deref(),
        args.emit_coeffs.as_deref(),
    ])?;
    if args.emit_coeffs.is_some() && args.basis.is_none() {
        return Err(Error::InvalidConfig(
            "--emit-coeffs requires --basis".into(),
        ));
    }
    let (camera, observer) = load_inputs(&args.inputs)?;
    let config = build_config(args)?;
    let report = optimize(&camera.sensors, &observer.sensors, &config)?;

    if let Some(path) = &args.out_filter {
        write_file(path, &report.final_filter.to_csv())?;
    }
    if let Some(path) = &args.out_trace {
        write_file(path, &report.trace_csv())?;
    }
    if let Some(path) = &args.out_svg {
        let wavelengths: Vec<f64> = args.inputs.grid.wavelengths().collect();
        let vora: Vec<f64> = report.iterations.iter().map(|r| r.vora).collect();
        let svg = svg::render(
            &wavelengths,
            report.final_filter.transmittance().as_slice(),
            &vora,
        );
        write_file(path, &svg)?;
    }
    if let (Some(path), Some(c)) = (&args.emit_coeffs, &report.coefficients) {
        write_file(path, &coefficients_csv(c))?;
    }

    if args.json {
        let line = json!({
            "schema_version": SCHEMA_VERSION,
            "command": "optimize",
            "method": report.method.to_string(),
            "alpha": report.alpha,
            "basis": args.basis.map(|b| b.to_string()),
            "initial_vora": report.initial_vora,
            "final_vora": report.final_vora,
            "steps": report.steps(),
            "termination": report.termination.to_string(),
        });
        writeln!(out, "{line}").map_err(io)?;
    } else {
        writeln!(out, "method         {}", report.method).map_err(io)?;
        if let Some(b) = &args.basis {
            writeln!(out, "basis          {b}").map_err(io)?;
        }
        writeln!(out, "initial vora   {:.12}", report.initial_vora).map_err(io)?;
        writeln!(out, "final vora     {:.12}", report.final_vora).map_err(io)?;
        writeln!(out, "steps          {}", report.steps()).map_err(io)?;
        writeln!(out, "termination    {}", report.termination).map_err(io)?;
    }
    Ok(match report.termination {
        Termination::Stalled => EXIT_STALLED,
        _ => EXIT_OK,
    })
}

/// CSV with header `index,coefficient`.
pub fn coefficients_csv(c: &DVector<f64>) -> String {
    let mut s = String::from("index,coefficient\n");
    for (i, v) in c.iter().enumerate() {
        s.push_str(&format!("{i},{}\n", format_value(*v)));
    }
    s
}

pub fn cmd_check(args: &CheckArgs, out: &mut dyn Write) -> Result<i32> {
    let (camera, observer) = load_inputs(&args.inputs)?;
    let problem = VoraProblem::new(&camera.sensors, &observer.sensors)?;
    let filters = check::random_filters(problem.dim(), args.trials, args.seed);
    let results = check::run_suite(&problem, &filters, args.sabotage)?;
    let all_passed = results.iter().all(check::IdentityCheck::passed);

    if args.json {
        let rows: Vec<_> = results
            .iter()
            .map(|r| {
                json!({
                    "identity": r.name,
                    "max_error": r.max_error,
                    "tolerance": r.tolerance,
                    "passed": r.passed(),
                })
            })
            .collect();
        let line = json!({
            "schema_version": SCHEMA_VERSION,
            "command": "check",
            "trials": args.trials,
            "seed": args.seed,
            "checks": rows,
            "passed": all_passed,
        });
        writeln!(out, "{line}").map_err(io)?;
    } else {
        writeln!(
            out,
            "{:<42} {:>12} {:>10}  status",
            "identity", "max error", "tolerance"
        )
        .map_err(io)?;
        for r in &results {
            writeln!(
                out,
                "{:<42} {:>12.3e} {:>10.0e}  {}",
                r.name,
                r.max_error,
                r.tolerance,
                if r.passed() { "ok" } else { "FAIL" }
            )
            .map_err(io)?;
        }
    }
    Ok(if all_passed { EXIT_OK } else { EXIT_VERIFY })
}
