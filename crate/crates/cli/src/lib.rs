//! `siaflow` command-line tool: simulate circuits, design actuators, fit the
//! plate-scaling law and run the shipped reproduction bundles.

pub mod bundles;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use siaflow_core::calibration::Measurement;
use siaflow_core::circuit::format_sig9;
use siaflow_core::{
    design_actuator, evaluate_fixed_sqrt, fit_poly2, fit_scaled_sqrt, simulate, FitModel, FitResult,
    MeasurementSet,
};

use bundles::Bundle;
use config::parse_config;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<siaflow_core::Error> for CliError {
    fn from(e: siaflow_core::Error) -> Self {
        use siaflow_core::Error as E;
        match e {
            E::NumericalDivergence { .. } | E::NoFeasibleDesign | E::DegenerateFit | E::ZeroVariance => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("i/o error: {e}"))
    }
}

#[derive(Debug, Parser)]
#[command(name = "siaflow", version, about = "Series inflatable actuator circuit toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a circuit config and write its trace and activation report.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: $SIAFLOW_OUT).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid-search a multi-chamber actuator design.
    Design {
        /// Joint rotation in degrees.
        #[arg(long)]
        theta: f64,
        /// Actuator height, mm.
        #[arg(long)]
        height: f64,
        /// Actuator width, mm.
        #[arg(long)]
        width: f64,
        /// Comma-separated candidate radii, mm.
        #[arg(long = "r-grid")]
        r_grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the plate-scaling models to pressure-drop data.
    Fit {
        /// Measurement CSV; defaults to the embedded characterisation table.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a shipped scenario and report its metrics.
    Reproduce {
        bundle: Bundle,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(summary) => {
            print!("{summary}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<String, CliError> {
    match cmd {
        Command::Simulate { config, out } => {
            let out = output::resolve_out_dir(out)?;
            cmd_simulate(&config, &out)
        }
        Command::Design {
            theta,
            height,
            width,
            r_grid,
            out,
        } => {
            let out = output::resolve_out_dir(out)?;
            cmd_design(theta, height, width, &r_grid, &out)
        }
        Command::Fit { data, out } => {
            let out = output::resolve_out_dir(out)?;
            cmd_fit(data.as_deref(), &out)
        }
        Command::Reproduce { bundle, out } => {
            let out = output::resolve_out_dir(out)?;
            cmd_reproduce(bundle, &out)
        }
    }
}

fn cmd_simulate(path: &Path, out: &Path) -> Result<String, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let doc = parse_config(&text).map_err(|errs| {
        let lines: Vec<String> = errs.iter().map(|e| format!("{}: {e}", path.display())).collect();
        CliError::Config(lines.join("\n"))
    })?;
    let circuit = doc.circuit()?;
    let trace = simulate(&circuit, &doc.sim_config()?)?;
    let scenario = bundles::Scenario {
        name: "simulate",
        doc,
        trace,
    };

    let mut csv = String::from("actuator,t_activation_source,t_activation_plateau,final_pressure\n");
    let mut report = format!(
        "activation at {}% of supply {} kPa\n\n{:<16}{:>14}{:>14}{:>16}\n",
        scenario.doc.sim.activation_fraction * 100.0,
        scenario.doc.supply_pressure() / 1e3,
        "actuator",
        "t_src [s]",
        "t_own [s]",
        "final [kPa]"
    );
    let fmt = |v: Option<f64>| v.map_or("not reached".to_string(), |x| format!("{x:.3}"));
    for name in scenario.trace.actuator_names() {
        let t_src = bundles::activation_vs_source(&scenario, name);
        let t_own = bundles::activation_vs_plateau(&scenario, name);
        let last = scenario.trace.pressure(name).and_then(|p| p.last().copied()).unwrap_or(0.0);
        let opt = |v: Option<f64>| v.map(format_sig9).unwrap_or_default();
        let _ = writeln!(csv, "{name},{},{},{}", opt(t_src), opt(t_own), format_sig9(last));
        let _ = writeln!(report, "{:<16}{:>14}{:>14}{:>16.3}", name, fmt(t_src), fmt(t_own), last / 1e3);
    }
    if !scenario.trace.clamps().is_empty() {
        let _ = writeln!(report, "\n{} volume clamp events", scenario.trace.clamps().len());
    }
    output::write_atomic(out, "trace.csv", &scenario.trace.to_csv())?;
    output::write_atomic(out, "activation.csv", &csv)?;
    output::write_atomic(out, "report.txt", &report)?;
    Ok(report)
}

fn cmd_design(theta_deg: f64, height: f64, width: f64, grid: &str, out: &Path) -> Result<String, CliError> {
    let radii = grid
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("--r-grid: `{}` is not a number", s.trim())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let design = design_actuator(theta_deg.to_radians(), height, width, &radii)?;
    let mut csv = String::from("index,r,c,phi_deg,alpha,bridge,gamma,lambda1_deg,lambda2_deg,lambda3_deg\n");
    for (i, c) in design.chambers.iter().enumerate() {
        let cols = [
            c.r,
            c.c,
            c.phi.to_degrees(),
            c.alpha,
            c.bridge,
            c.gamma,
            c.lambda1.to_degrees(),
            c.lambda2.to_degrees(),
            c.lambda3.to_degrees(),
        ];
        let _ = write!(csv, "{}", i + 1);
        for v in cols {
            let _ = write!(csv, ",{}", format_sig9(v));
        }
        csv.push('\n');
    }
    let c = &design.chambers[0];
    let report = format!(
        "theta {theta_deg} deg, H {height} mm, W {width} mm\n\
         n = {}, r = {:.3} mm, c = {:.3} mm\n\
         alpha = {:.3} mm, bridge = {:.3} mm, gamma = {:.3} mm\n",
        design.n, c.r, c.c, c.alpha, c.bridge, c.gamma
    );
    output::write_atomic(out, "design.csv", &csv)?;
    output::write_atomic(out, "design.txt", &report)?;
    Ok(report)
}

/// RMSE / R^2 published for each model (per-trial data, not the means).
fn published(model: FitModel) -> (f64, f64) {
    match model {
        FitModel::ScaledSqrt => (3.1, 0.89),
        FitModel::FixedSqrt => (3.15, 0.88),
        FitModel::Poly2 => (3.94, 0.84),
    }
}

pub fn read_measurements(text: &str) -> Result<MeasurementSet<f64>, CliError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| CliError::Config(format!("measurement CSV: {e}")))?;
    const COLS: [&str; 5] = ["n_plates", "mean_time", "std_time", "delta_t", "pressure_drop"];
    if header.iter().collect::<Vec<_>>() != COLS {
        return Err(CliError::Config(format!(
            "measurement CSV header must be `{}`",
            COLS.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| CliError::Config(format!("measurement CSV line {line}: {e}")))?;
        let num = |j: usize| -> Result<f64, CliError> {
            rec[j].parse::<f64>().map_err(|_| {
                CliError::Config(format!("measurement CSV line {line}: `{}` is not a number", &rec[j]))
            })
        };
        let n = num(0)?;
        if n < 0.0 || n.fract() != 0.0 {
            return Err(CliError::Config(format!("measurement CSV line {line}: bad plate count {n}")));
        }
        rows.push(Measurement {
            n_plates: n as u32,
            mean_time: num(1)?,
            std_time: num(2)?,
            delta_t: num(3)?,
            pressure_drop: num(4)?,
        });
    }
    Ok(MeasurementSet::new(rows)?)
}

pub fn fit_all(data: &MeasurementSet<f64>) -> Result<Vec<FitResult<f64>>, CliError> {
    let fixed = evaluate_fixed_sqrt(data, None)?;
    Ok(vec![fixed, fit_scaled_sqrt(data)?, fit_poly2(data)?])
}

fn cmd_fit(data: Option<&Path>, out: &Path) -> Result<String, CliError> {
    let set = match data {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            read_measurements(&text)?
        }
        None => MeasurementSet::table1(),
    };
    let fits = fit_all(&set)?;
    let mut csv = String::from("model,c1,c2,rmse,r_squared,published_rmse,published_r_squared\n");
    let mut report = format!(
        "{:<12}{:>12}{:>12}{:>10}{:>8}{:>12}{:>10}\n",
        "model", "c1", "c2", "rmse", "R2", "published rmse", "published R2"
    );
    for f in &fits {
        let (pr, pr2) = published(f.model);
        let c2 = f.coefficients.get(1).copied();
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            f.model,
            format_sig9(f.coefficients[0]),
            c2.map(format_sig9).unwrap_or_default(),
            format_sig9(f.rmse),
            format_sig9(f.r_squared),
            pr,
            pr2
        );
        let _ = writeln!(
            report,
            "{:<12}{:>12.4}{:>12}{:>10.3}{:>8.3}{:>12}{:>10}",
            f.model.to_string(),
            f.coefficients[0],
            c2.map_or("-".into(), |c| format!("{c:.4}")),
            f.rmse,
            f.r_squared,
            pr,
            pr2
        );
    }
    report.push_str(
        "\nFits use the mean pressure drop per resistor (N >= 1); the published\n\
         values were computed on individual trials.\n",
    );
    output::write_atomic(out, "fit.csv", &csv)?;
    output::write_atomic(out, "fit.txt", &report)?;
    Ok(report)
}

fn cmd_reproduce(bundle: Bundle, out: &Path) -> Result<String, CliError> {
    let run = bundles::reproduce(bundle)?;
    for s in &run.scenarios {
        output::write_atomic(out, &format!("{}.trace.csv", s.name), &s.trace.to_csv())?;
    }
    let stem = bundle.name();
    output::write_atomic(out, &format!("{stem}.metrics.csv"), &run.metrics_csv())?;
    let report = run.report();
    output::write_atomic(out, &format!("{stem}.report.txt"), &report)?;
    if let Some(c) = run.checks.iter().find(|c| !c.passed) {
        print!("{report}");
        return Err(CliError::Numerical(format!("check failed: {}", c.name)));
    }
    Ok(report)
}
