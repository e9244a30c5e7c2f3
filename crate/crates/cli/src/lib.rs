//! Batch front end: loads a system description, runs one study and writes
//! its tables to stdout and deterministic CSV files.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use cvsc_core::benchmark;
use cvsc_core::config::{apply_override, parse_scenario, parse_system_config};
use cvsc_core::dynamics::{
    run_scenario, summarize, trim_equilibrium, DynamicsError, Scenario, ScenarioSummary, SimSystem,
    TimeSeries, TrimOptions, UNIT_CHANNELS,
};
use cvsc_core::network::NetworkError;
use cvsc_core::smallsignal::{analyze, ka_sweep, linearize, log_grid, LinearizeError};
use cvsc_core::sysmodel::SystemModel;
use thiserror::Error;

pub const THREADS_ENV: &str = "CVSC_GRID_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "cvsc-grid",
    version,
    about = "Phasor simulation and small-signal studies of wind-supplied grids"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// System description; the built-in four-unit benchmark when omitted.
    #[arg(long)]
    pub system: Option<PathBuf>,
    /// Directory for CSV output, created if missing.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Parameter override such as `wpg.2.k_a=5` or `cvsc.*.k_e=0.3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the load flow for the dispatch in the system file.
    Powerflow(Common),
    /// Trim, linearize and list the system modes.
    Linearize(Common),
    /// Run a time-domain scenario.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenario: PathBuf,
        /// Step size in seconds, overriding the scenario file.
        #[arg(long)]
        dt: Option<f64>,
        /// Add reconstructed three-phase bus voltages to the network CSV.
        #[arg(long)]
        waveforms: bool,
    },
    /// Frequency response of the unit-1 v_dc to P_e channel for several angle gains.
    KaSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "1,5,10,20")]
        ka: Vec<f64>,
        /// Points on the logarithmic 0.1 to 1000 rad/s grid.
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Parse and check the inputs without running a study.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("integration error: {0}")]
    Integration(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Integration(_) => 4,
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::Model(_)
            | DynamicsError::Network(NetworkError::Model(_) | NetworkError::Reference(_)) => {
                CliError::Config(e.to_string())
            }
            DynamicsError::Integration { .. } => CliError::Integration(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

impl From<LinearizeError> for CliError {
    fn from(e: LinearizeError) -> Self {
        match e {
            LinearizeError::Dynamics(d) => d.into(),
            other => CliError::Solver(other.to_string()),
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Config(format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| io_error(path, e))
}

pub fn load_system(common: &Common) -> Result<SystemModel, CliError> {
    let mut model = match &common.system {
        Some(p) => parse_system_config(&read(p)?)
            .map_err(|e| CliError::Config(format!("{}:\n{e}", p.display())))?,
        None => benchmark::system(),
    };
    for s in &common.overrides {
        apply_override(&mut model, s).map_err(|e| CliError::Config(format!("--set {s}: {e}")))?;
    }
    Ok(model)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    parse_scenario(&read(path)?).map_err(|e| CliError::Config(format!("{}:\n{e}", path.display())))
}

/// Thread count from the environment; `None` leaves the default pool.
pub fn thread_limit() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!(
                "{THREADS_ENV} = {v:?} is not a positive integer"
            ))),
        },
    }
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| io_error(&path, e))
}

fn out_line(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Config(format!("stdout: {e}")))
}

/// Run one parsed command, writing human-readable output to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let pool = match thread_limit()? {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    }
    .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let mut buf = Vec::new();
    let result = pool.install(|| {
        let out: &mut dyn Write = &mut buf;
        match &cli.command {
            Command::Powerflow(c) => cmd_powerflow(c, out),
            Command::Linearize(c) => cmd_linearize(c, out),
            Command::Simulate {
                common,
                scenario,
                dt,
                waveforms,
            } => cmd_simulate(common, scenario, *dt, *waveforms, out),
            Command::KaSweep { common, ka, points } => cmd_ka_sweep(common, ka, *points, out),
            Command::Validate { common, scenario } => {
                cmd_validate(common, scenario.as_deref(), out)
            }
        }
    });
    out.write_all(&buf)
        .map_err(|e| CliError::Config(format!("stdout: {e}")))?;
    result
}

pub fn cmd_powerflow(common: &Common, out: &mut dyn Write) -> Result<(), CliError> {
    let model = load_system(common)?;
    let pf = cvsc_core::dynamics::solve_system_powerflow(&model)?;
    let s = model.network.bases.s_system;
    let mut table = format!(
        "converged in {} iterations, mismatch {:.3e} pu\n\n",
        pf.iterations, pf.mismatch
    );
    let mut buses = String::from("bus,v_pu,angle_deg\n");
    table.push_str("  bus    |V| (pu)   angle (deg)\n");
    for (id, v) in pf.ids.iter().zip(&pf.v) {
        let _ = writeln!(
            table,
            "{id:>5}  {:>10.4}  {:>12.4}",
            v.norm(),
            v.arg().to_degrees()
        );
        let _ = writeln!(
            buses,
            "{id},{:.16e},{:.16e}",
            v.norm(),
            v.arg().to_degrees()
        );
    }
    let mut units = String::from("unit,bus,p_mw,q_mvar\n");
    table.push_str("\n unit    bus      P (MW)    Q (Mvar)\n");
    for (k, u) in model.wpgs.iter().enumerate() {
        let (p, q) = (pf.p_gen[k] * s / 1e6, pf.q_gen[k] * s / 1e6);
        let _ = writeln!(table, "{:>5}  {:>5}  {p:>10.2}  {q:>10.2}", u.number, u.bus);
        let _ = writeln!(units, "{},{},{p:.16e},{q:.16e}", u.number, u.bus);
    }
    out_line(out, &table)?;
    if let Some(dir) = &common.out {
        write_file(dir, "powerflow_buses.csv", &buses)?;
        write_file(dir, "powerflow_units.csv", &units)?;
    }
    Ok(())
}

fn trimmed(model: SystemModel) -> Result<(SimSystem, Vec<f64>), CliError> {
    let mut sys = SimSystem::new(model)?;
    let tr = trim_equilibrium(&mut sys, TrimOptions::default())?;
    Ok((sys, tr.x))
}

pub fn cmd_linearize(common: &Common, out: &mut dyn Write) -> Result<(), CliError> {
    let (sys, x0) = trimmed(load_system(common)?)?;
    let lin = linearize(&sys, &x0)?;
    let report = analyze(&lin)?;
    let unstable = report
        .modes
        .iter()
        .filter(|m| m.eigenvalue.re > 0.0)
        .count();
    let mut text = report.to_table();
    let _ = writeln!(
        text,
        "\n{} states, {} core-dominated modes, {} with positive real part",
        lin.a.nrows(),
        report.core_modes().count(),
        unstable
    );
    out_line(out, &text)?;
    if let Some(dir) = &common.out {
        write_file(dir, "modes.csv", &report.to_csv())?;
    }
    Ok(())
}

fn csv_table(time: &[f64], names: &[&str], cols: &[&[f64]]) -> String {
    let mut s = String::from("time");
    for n in names {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    for (k, t) in time.iter().enumerate() {
        let _ = write!(s, "{t:.16e}");
        for c in cols {
            let _ = write!(s, ",{:.16e}", c[k]);
        }
        s.push('\n');
    }
    s
}

/// Per-unit CSVs (channel suffix stripped) and one network CSV.
pub fn series_csvs(ts: &TimeSeries, units: &[usize]) -> Vec<(String, String)> {
    let mut files = Vec::new();
    let mut taken = vec![false; ts.names.len()];
    for &n in units {
        let mut names = Vec::new();
        let mut cols = Vec::new();
        for ch in UNIT_CHANNELS {
            let full = format!("{ch}_{n}");
            if let Some(i) = ts.names.iter().position(|x| *x == full) {
                taken[i] = true;
                names.push(ch);
                cols.push(ts.data[i].as_slice());
            }
        }
        files.push((format!("wpg_{n}.csv"), csv_table(&ts.time, &names, &cols)));
    }
    let rest: Vec<usize> = (0..ts.names.len()).filter(|&i| !taken[i]).collect();
    let names: Vec<&str> = rest.iter().map(|&i| ts.names[i].as_str()).collect();
    let cols: Vec<&[f64]> = rest.iter().map(|&i| ts.data[i].as_slice()).collect();
    files.push(("network.csv".into(), csv_table(&ts.time, &names, &cols)));
    files
}

/// `metric,value` rows with fixed formatting.
pub fn summary_csv(status: &str, s: &ScenarioSummary) -> String {
    let mut rows: Vec<(String, f64)> = vec![
        ("sync_residual".into(), s.sync_residual),
        ("worst_energy_ratio".into(), s.worst_energy_ratio()),
        ("p_e_total_initial_w".into(), s.p_e_total_initial),
        ("p_e_total_final_w".into(), s.p_e_total_final),
        (
            "delta_p_e_total_w".into(),
            s.p_e_total_final - s.p_e_total_initial,
        ),
        ("p_load_initial_w".into(), s.p_load_initial),
        ("p_load_final_w".into(), s.p_load_final),
        ("delta_p_load_w".into(), s.p_load_final - s.p_load_initial),
        ("p_loss_initial_w".into(), s.p_loss_initial),
        ("p_loss_final_w".into(), s.p_loss_final),
        ("delta_p_loss_w".into(), s.p_loss_final - s.p_loss_initial),
    ];
    if let Some(v) = s.v_fault_min {
        rows.push(("v_fault_min_pu".into(), v));
    }
    for u in &s.units {
        let n = u.number;
        rows.extend([
            (format!("v_dc_max_{n}"), u.v_dc_max),
            (format!("v_dc_min_{n}"), u.v_dc_min),
            (format!("v_dc_final_{n}"), u.v_dc_final),
            (format!("v_dc_settling_time_{n}"), u.v_dc_settling_time),
            (format!("p_e_initial_{n}"), u.p_e_initial),
            (format!("p_e_min_{n}"), u.p_e_min),
            (format!("p_e_max_{n}"), u.p_e_max),
            (format!("p_e_final_{n}"), u.p_e_final),
            (format!("energy_residual_{n}"), u.energy_residual),
            (format!("energy_swing_{n}"), u.energy_swing),
        ]);
    }
    let mut text = format!("metric,value\nstatus,{status}\n");
    for (k, v) in rows {
        let _ = writeln!(text, "{k},{v:.16e}");
    }
    text
}

fn summary_text(s: &ScenarioSummary) -> String {
    let mw = |w: f64| w / 1e6;
    let mut t = String::new();
    let _ = writeln!(
        t,
        "capacitor-voltage sync residual  {:.3e}",
        s.sync_residual
    );
    let _ = writeln!(
        t,
        "worst energy-balance residual    {:.3e} of swing",
        s.worst_energy_ratio()
    );
    let _ = writeln!(
        t,
        "total P_e change {:.2} MW = load change {:.2} MW + loss change {:.2} MW",
        mw(s.p_e_total_final - s.p_e_total_initial),
        mw(s.p_load_final - s.p_load_initial),
        mw(s.p_loss_final - s.p_loss_initial)
    );
    if let Some(v) = s.v_fault_min {
        let _ = writeln!(t, "fault-point |V| minimum          {v:.4e} pu");
    }
    t.push_str("\n unit  v_dc max (V)  v_dc final (V)  settle (s)  P_e min (MW)  P_e final (MW)\n");
    for u in &s.units {
        let _ = writeln!(
            t,
            "{:>5}  {:>12.2}  {:>14.2}  {:>10.3}  {:>12.2}  {:>14.2}",
            u.number,
            u.v_dc_max,
            u.v_dc_final,
            u.v_dc_settling_time,
            mw(u.p_e_min),
            mw(u.p_e_final)
        );
    }
    t
}

pub fn cmd_simulate(
    common: &Common,
    scenario: &Path,
    dt: Option<f64>,
    waveforms: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let model = load_system(common)?;
    let mut sc = load_scenario(scenario)?;
    if let Some(dt) = dt {
        sc.dt = dt;
    }
    sc.validate().map_err(CliError::Config)?;
    let (sys, x0) = trimmed(model)?;
    let run = run_scenario(&sys, &sc, &x0)?;
    let status = match &run.error {
        None => "ok".to_string(),
        Some(e) => format!("failed: {}", e.to_string().replace(',', ";")),
    };
    let summary = (run.series.len() > 1).then(|| summarize(&sys, &run.series, sc.fault_window()));
    let mut text = format!(
        "{} samples, {} steps, {} Jacobian refreshes\n",
        run.series.len(),
        run.stats.steps,
        run.stats.jacobian_updates
    );
    if let Some(s) = &summary {
        text.push_str(&summary_text(s));
    }
    out_line(out, &text)?;
    if let Some(dir) = &common.out {
        let mut ts = run.series.filtered(&sc.outputs);
        if waveforms {
            ts = ts.with_waveforms(sys.model.network.bases.f_n);
        }
        let units: Vec<usize> = sys.units.iter().map(|u| u.number).collect();
        for (name, body) in series_csvs(&ts, &units) {
            write_file(dir, &name, &body)?;
        }
        let body = match &summary {
            Some(s) => summary_csv(&status, s),
            None => format!("metric,value\nstatus,{status}\n"),
        };
        write_file(dir, "summary.csv", &body)?;
    }
    match run.error {
        Some(e) => Err(CliError::Integration(e.to_string())),
        None => Ok(()),
    }
}

pub fn cmd_ka_sweep(
    common: &Common,
    ka: &[f64],
    points: usize,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if ka.is_empty() || ka.iter().any(|k| !(k.is_finite() && *k >= 0.0)) {
        return Err(CliError::Config(format!(
            "--ka values must be finite and non-negative: {ka:?}"
        )));
    }
    if points < 2 {
        return Err(CliError::Config("--points must be at least 2".into()));
    }
    let model = load_system(common)?;
    let omega = log_grid(0.1, 1000.0, points);
    let sweep = ka_sweep(&model, ka, &omega);
    let mut text = String::new();
    for (k, why) in &sweep.skipped {
        let _ = writeln!(text, "warning: k_a = {k} skipped: {why}");
    }
    text.push_str("    k_a   |G| at 0.1 rad/s   |G| at 1000 rad/s   dc gain\n");
    for c in &sweep.curves {
        let dc = c.dc_gain.map_or("-".to_string(), |g| format!("{g:.4e}"));
        let _ = writeln!(
            text,
            "{:>7}   {:>16.4e}   {:>17.4e}   {dc}",
            c.k_a,
            c.magnitude[0],
            c.magnitude[points - 1]
        );
    }
    out_line(out, &text)?;
    if sweep.curves.is_empty() {
        return Err(CliError::Solver("no angle gain could be analyzed".into()));
    }
    if let Some(dir) = &common.out {
        write_file(dir, "ka_sweep.csv", &sweep.to_csv())?;
    }
    Ok(())
}

pub fn cmd_validate(
    common: &Common,
    scenario: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let model = load_system(common)?;
    model.validate().map_err(|e| {
        CliError::Config(
            e.iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join("; "),
        )
    })?;
    let mut text = format!(
        "system ok: {} buses, {} branches, {} units\n",
        model.network.buses.len(),
        model.network.branches.len(),
        model.wpgs.len()
    );
    if let Some(p) = scenario {
        let sc = load_scenario(p)?;
        sc.validate().map_err(CliError::Config)?;
        let _ = writeln!(
            text,
            "scenario ok: {} events over {} s",
            sc.events.len(),
            sc.t_end
        );
    }
    out_line(out, &text)
}
