//! The `stepsim` command line: scenario runs, profile export and the
//! network service.

pub mod scenario;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use stepsim_core::export::{profile_csv, write_trace_csv};
use stepsim_core::profile::{plan_contour, plan_scurve, plan_trapezoid, MoveConstraints, SplineEnds};

use scenario::{RunError, Scenario};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_FAULT: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

/// Stepper drive-train simulator.
#[derive(Debug, Parser)]
#[command(name = "stepsim", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario file and write its trace CSV.
    Run {
        /// Scenario path, or the name of a shipped scenario.
        scenario: String,
        /// Trace destination; defaults to the scenario's `output`, else `<name>.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan a motion profile and write it as CSV, without the plant.
    Profile {
        kind: ProfileArg,
        /// steps
        #[arg(long, allow_negative_numbers = true)]
        distance: Option<i64>,
        /// steps/s
        #[arg(long)]
        vmax: Option<f64>,
        /// steps/s²
        #[arg(long)]
        accel: Option<f64>,
        /// steps/s²
        #[arg(long)]
        decel: Option<f64>,
        /// steps/s³, S-curve only
        #[arg(long)]
        jerk: Option<f64>,
        /// Contour waypoints as `t:position` pairs separated by commas.
        #[arg(long, allow_hyphen_values = true)]
        waypoints: Option<String>,
        /// Contour end condition.
        #[arg(long, value_enum, default_value = "clamped")]
        ends: EndsArg,
        /// Sampling period in s.
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        /// Destination; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the configured axes over WebSocket.
    Serve {
        #[arg(long)]
        port: u16,
        /// Axes file.
        #[arg(long)]
        config: PathBuf,
        /// Simulated seconds per wall second; 0 runs commands to completion.
        #[arg(long, default_value_t = 1.0)]
        time_factor: f64,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Trapezoid,
    Scurve,
    Contour,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EndsArg {
    Clamped,
    Natural,
}

/// Parses `argv` and runs the command.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match cli.command {
        Command::Run { scenario, out } => run(&scenario, out.as_deref()),
        Command::Profile { kind, distance, vmax, accel, decel, jerk, waypoints, ends, dt, out } => {
            let c = ProfileRequest { kind, distance, vmax, accel, decel, jerk, waypoints, ends, dt };
            profile(&c, out.as_deref())
        }
        Command::Serve { port, config, time_factor, host } => serve(&host, port, &config, time_factor),
    };
    ExitCode::from(code)
}

/// Finds a scenario by path, or by name under the data directory.
pub fn resolve_scenario(arg: &str) -> Option<PathBuf> {
    let direct = PathBuf::from(arg);
    if direct.is_file() {
        return Some(direct);
    }
    let dir = std::env::var_os("STEPSIM_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/data")))
        .join("scenarios");
    [dir.join(arg), dir.join(format!("{arg}.scenario"))].into_iter().find(|p| p.is_file())
}

fn run(arg: &str, out: Option<&Path>) -> u8 {
    let Some(path) = resolve_scenario(arg) else {
        eprintln!("error: scenario not found: {arg}");
        return EXIT_INVALID;
    };
    let scenario = match Scenario::load(&path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let dest = out
        .map(Path::to_path_buf)
        .or_else(|| scenario.output.clone())
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", scenario.name)));
    let (outcome, code) = match scenario.run() {
        Ok(o) => (o, EXIT_OK),
        Err(RunError::Invalid(msg)) => {
            eprintln!("error: {msg}");
            return EXIT_INVALID;
        }
        Err(RunError::Fault { outcome, reason }) => {
            eprintln!("fault: {reason}");
            (*outcome, EXIT_FAULT)
        }
    };
    if let Err(e) = write_trace_csv(&outcome.trace, &dest) {
        eprintln!("error: {e}");
        return EXIT_INVALID;
    }
    println!("{}", outcome.summary(&scenario.name));
    code
}

struct ProfileRequest {
    kind: ProfileArg,
    distance: Option<i64>,
    vmax: Option<f64>,
    accel: Option<f64>,
    decel: Option<f64>,
    jerk: Option<f64>,
    waypoints: Option<String>,
    ends: EndsArg,
    dt: f64,
}

fn parse_waypoints(s: &str) -> Result<Vec<(f64, f64)>, String> {
    s.split(',')
        .map(|pair| {
            let (t, p) = pair.split_once(':').ok_or_else(|| format!("waypoint `{pair}` is not `t:position`"))?;
            let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("waypoint `{pair}`: {e}"));
            Ok((num(t)?, num(p)?))
        })
        .collect()
}

fn plan(r: &ProfileRequest) -> Result<stepsim_core::profile::MotionProfile, String> {
    if !(r.dt > 0.0 && r.dt.is_finite()) {
        return Err(format!("--dt must be positive, got {}", r.dt));
    }
    if r.kind == ProfileArg::Contour {
        let w = r.waypoints.as_deref().ok_or("contour needs --waypoints")?;
        let ends = match r.ends {
            EndsArg::Clamped => SplineEnds::Clamped,
            EndsArg::Natural => SplineEnds::Natural,
        };
        return plan_contour(&parse_waypoints(w)?, ends).map_err(|e| e.to_string());
    }
    let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| format!("{flag} is required"));
    let distance = r.distance.ok_or("--distance is required")?;
    let vmax = need(r.vmax, "--vmax")?;
    let accel = need(r.accel, "--accel")?;
    let decel = need(r.decel, "--decel")?;
    let result = match r.kind {
        ProfileArg::Trapezoid => {
            // Jerk plays no part in a trapezoid.
            let c = MoveConstraints { v_max: vmax, a_max: accel, d_max: decel, j_max: r.jerk.unwrap_or(f64::MAX) };
            plan_trapezoid(distance, &c)
        }
        _ => {
            let c = MoveConstraints { v_max: vmax, a_max: accel, d_max: decel, j_max: need(r.jerk, "--jerk")? };
            plan_scurve(distance, &c)
        }
    };
    result.map_err(|e| e.to_string())
}

fn profile(r: &ProfileRequest, out: Option<&Path>) -> u8 {
    let profile = match plan(r) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let csv = profile_csv(&profile, r.dt);
    let phases: Vec<String> = profile.segments.iter().map(|s| format!("{}", s.duration)).collect();
    eprintln!("total time {} s; segments {} s", profile.total_time(), phases.join(", "));
    let written = match out {
        Some(path) => std::fs::write(path, csv).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().write_all(csv.as_bytes()).map_err(|e| e.to_string()),
    };
    match written {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

fn serve(host: &str, port: u16, config: &Path, time_factor: f64) -> u8 {
    let axes = match stepsim_service::load_axes_with_motors(config) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let service = match stepsim_service::Service::start(axes, time_factor) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: starting the runtime: {e}");
            return EXIT_INVALID;
        }
    };
    runtime.block_on(async move {
        let listener = match tokio::net::TcpListener::bind((host, port)).await {
            Ok(l) => l,
            Err(e) => {
                eprintln!("error: cannot listen on {host}:{port}: {e}");
                return EXIT_INVALID;
            }
        };
        if let Ok(addr) = listener.local_addr() {
            eprintln!("listening on ws://{addr}/ws/v1 with {} axes", service.axis_count());
        }
        match stepsim_service::serve(listener, service).await {
            Ok(()) => EXIT_OK,
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_INVALID
            }
        }
    })
}
