use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_cvsc-grid");

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data")
        .join(name)
}

fn cmd(args: &[&str]) -> Command {
    let mut c = Command::new(BIN);
    c.args(args).env_remove("CVSC_GRID_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    cmd(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn out_dir(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines
        .next()
        .unwrap()
        .split(',')
        .map(str::to_string)
        .collect();
    (
        header,
        lines
            .map(|l| l.split(',').map(str::to_string).collect())
            .collect(),
    )
}

fn metric(dir: &Path, key: &str) -> f64 {
    let (_, rows) = read_csv(&dir.join("summary.csv"));
    rows.iter()
        .find(|r| r[0] == key)
        .unwrap_or_else(|| panic!("no metric {key}"))[1]
        .parse()
        .unwrap()
}

const TWO_BUS: &str = "\
[bases]
s_system = 100e6
s_machine = 889e6
v_base = 230e3
f_n = 60

[buses]
1 generator 230e3
2 load 230e3

[branches]
1 2 0.0 0.1 0.0

[wpg.1]
bus = 1
slack = true
v_set = 1.0
";

#[test]
fn benchmark_powerflow_rows() {
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "pf");
    let o = run(&["powerflow", "--out", &out]);
    assert_eq!(o.status.code(), Some(0));
    let (h, rows) = read_csv(&Path::new(&out).join("powerflow_units.csv"));
    assert_eq!(h, ["unit", "bus", "p_mw", "q_mvar"]);
    assert_eq!(rows.len(), 4);
    // Units 1, 2 and 4 are dispatched; unit 3 is the slack and closes the balance.
    for (row, p) in rows.iter().zip([685.0, 665.0, f64::NAN, 650.0]) {
        if p.is_finite() {
            assert!((row[2].parse::<f64>().unwrap() - p).abs() < 1e-6, "{row:?}");
        }
    }
    let (h, buses) = read_csv(&Path::new(&out).join("powerflow_buses.csv"));
    assert_eq!(h, ["bus", "v_pu", "angle_deg"]);
    assert_eq!(buses.len(), 11);
}

#[test]
fn unloaded_network_sits_at_one_pu() {
    let tmp = TempDir::new().unwrap();
    let sys = write(&tmp, "two.system", TWO_BUS);
    let out = out_dir(&tmp, "pf");
    let o = run(&["powerflow", "--system", &sys, "--out", &out]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let (_, rows) = read_csv(&Path::new(&out).join("powerflow_buses.csv"));
    for r in rows {
        assert!((r[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn transfer_beyond_limit_diverges() {
    // P_max = V²/X = 10 pu = 1000 MW on the 100 MVA base.
    let tmp = TempDir::new().unwrap();
    let text = format!("{TWO_BUS}\n[loads]\n2 1500 0\n");
    let sys = write(&tmp, "two.system", &text);
    let o = run(&["powerflow", "--system", &sys]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mismatch"));
}

#[test]
fn config_errors_exit_two() {
    let tmp = TempDir::new().unwrap();
    let bad = write(
        &tmp,
        "bad.system",
        &TWO_BUS.replace("1 2 0.0 0.1 0.0", "1 2 0.0 0.0 0.0"),
    );
    let o = run(&["validate", "--system", &bad]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 12") && err.contains("1-2"), "{err}");

    assert_eq!(
        run(&["powerflow", "--set", "wpg.1.no_such_field=1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["powerflow", "--set", "wpg.1.k_a"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["simulate", "--scenario", "/nonexistent/x.scenario"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["powerflow", "--bogus"]).status.code(), Some(2));
    let o = cmd(&["validate"])
        .env("CVSC_GRID_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_shipped_inputs() {
    let sys = data("kundur.system");
    let sc = data("fault_line_7_8.scenario");
    let o = run(&[
        "validate",
        "--system",
        sys.to_str().unwrap(),
        "--scenario",
        sc.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("11 buses"));
}

#[test]
fn linearize_report() {
    let tmp = TempDir::new().unwrap();
    let a = out_dir(&tmp, "a");
    let b = out_dir(&tmp, "b");
    assert_eq!(run(&["linearize", "--out", &a]).status.code(), Some(0));
    let o = cmd(&["linearize", "--out", &b])
        .env("CVSC_GRID_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let ta = fs::read(Path::new(&a).join("modes.csv")).unwrap();
    assert_eq!(ta, fs::read(Path::new(&b).join("modes.csv")).unwrap());

    let (h, rows) = read_csv(&Path::new(&a).join("modes.csv"));
    assert_eq!(
        h[..7],
        [
            "index",
            "re",
            "im",
            "freq_hz",
            "damping_ratio",
            "dominant_state",
            "participation_top3"
        ]
    );
    assert_eq!(rows.len(), 64);
    assert_eq!(rows.iter().filter(|r| r[7] == "0").count(), 48);
    let mut zero = 0;
    for r in &rows {
        let (re, im): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        if re.hypot(im) < 1e-6 {
            zero += 1;
        } else {
            assert!(re < 0.0, "{r:?}");
        }
        assert_eq!(im == 0.0, r[3].is_empty() && r[4].is_empty());
    }
    assert_eq!(zero, 1);
    assert!(stdout(&o).contains("Dominant states"));
}

#[test]
fn simulate_load_step() {
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "load");
    let sc = data("loadstep.scenario");
    let o = run(&[
        "simulate",
        "--scenario",
        sc.to_str().unwrap(),
        "--out",
        &out,
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let dir = Path::new(&out);
    for n in 1..=4 {
        let (h, rows) = read_csv(&dir.join(format!("wpg_{n}.csv")));
        assert_eq!(h[0], "time");
        assert_eq!(h.len(), 14);
        assert!(rows.len() > 20_000);
    }
    let (h, _) = read_csv(&dir.join("network.csv"));
    assert!(h.contains(&"v_bus_9".to_string()) && h.contains(&"p_loss".to_string()));
    assert!(metric(dir, "sync_residual") < 1e-3);
    let injected = metric(dir, "delta_p_e_total_w");
    let consumed = metric(dir, "delta_p_load_w") + metric(dir, "delta_p_loss_w");
    assert!((injected - consumed).abs() < 0.01 * consumed);
    assert!(stdout(&o).contains("sync residual"));
}

#[test]
fn simulate_fault_reports_extremes() {
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "fault");
    let sc = data("fault_line_7_8.scenario");
    let o = run(&[
        "simulate",
        "--scenario",
        sc.to_str().unwrap(),
        "--out",
        &out,
        "--waveforms",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let dir = Path::new(&out);
    assert!(metric(dir, "v_dc_max_4") > 1110.0);
    assert!(metric(dir, "p_e_min_4").is_finite());
    assert!(metric(dir, "v_fault_min_pu") < 0.05);
    let (h, _) = read_csv(&dir.join("network.csv"));
    for ph in ["va_bus_7", "vb_bus_7", "vc_bus_7", "v_fault"] {
        assert!(h.contains(&ph.to_string()), "{ph}");
    }
}

#[test]
fn empty_scenario_is_flat_and_repeatable() {
    let tmp = TempDir::new().unwrap();
    let sc = write(
        &tmp,
        "empty.scenario",
        "[scenario]\nt_end = 1\ndt = 0.01\n\n[events]\n",
    );
    let a = out_dir(&tmp, "a");
    let b = out_dir(&tmp, "b");
    for out in [&a, &b] {
        assert_eq!(
            run(&["simulate", "--scenario", &sc, "--out", out])
                .status
                .code(),
            Some(0)
        );
    }
    for f in ["wpg_1.csv", "wpg_4.csv", "network.csv", "summary.csv"] {
        assert_eq!(
            fs::read(Path::new(&a).join(f)).unwrap(),
            fs::read(Path::new(&b).join(f)).unwrap(),
            "{f}"
        );
    }
    let dir = Path::new(&a);
    assert!(metric(dir, "sync_residual") < 1e-12);
    assert!(metric(dir, "energy_residual_1") < 1e-3);
    let (h, rows) = read_csv(&dir.join("wpg_2.csv"));
    assert_eq!(rows.len(), 101);
    for col in 1..rows[0].len() {
        let first: f64 = rows[0][col].parse().unwrap();
        // SI channels get floors of 1 W and 1 mA on units rated hundreds of MW.
        let floor = match h[col].as_str() {
            n if n.starts_with("p_") || n.starts_with("q_") => 1e6,
            "i_s" => 1e3,
            _ => 1.0,
        };
        for r in &rows {
            let v: f64 = r[col].parse().unwrap();
            assert!(
                (v - first).abs() <= 1e-6 * first.abs().max(floor),
                "column {}",
                h[col]
            );
        }
    }
    let o = run(&["simulate", "--scenario", &sc, "--out", &a, "--dt", "0.02"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read_csv(&dir.join("wpg_2.csv")).1.len(), 51);
}

#[test]
fn integration_failure_keeps_partial_output() {
    let tmp = TempDir::new().unwrap();
    let sc = write(
        &tmp,
        "crash.scenario",
        "[scenario]\nt_end = 3\ndt = 0.01\n\n[events]\n1.0 load_step bus=9 p_mw=1e6 q_mvar=0\n",
    );
    let out = out_dir(&tmp, "crash");
    let o = run(&[
        "simulate",
        "--scenario",
        &sc,
        "--out",
        &out,
        "--set",
        "wpg.*.c=1e-3",
    ]);
    assert_eq!(o.status.code(), Some(4));
    let summary = fs::read_to_string(Path::new(&out).join("summary.csv")).unwrap();
    assert!(summary
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("status,failed:"));
    let (_, rows) = read_csv(&Path::new(&out).join("wpg_1.csv"));
    let t_last: f64 = rows.last().unwrap()[0].parse().unwrap();
    assert!(t_last < 3.0);
}

#[test]
fn ka_sweep_columns() {
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "ka");
    let o = run(&["ka-sweep", "--ka", "10", "--points", "50", "--out", &out]);
    assert_eq!(o.status.code(), Some(0));
    let (h, rows) = read_csv(&Path::new(&out).join("ka_sweep.csv"));
    assert_eq!(h, ["omega_rad_s", "k_a_10"]);
    assert_eq!(rows.len(), 50);
    assert!(rows
        .iter()
        .all(|r| r[1].parse::<f64>().unwrap().is_finite()));

    let o = cmd(&["ka-sweep", "--out", &out])
        .env("CVSC_GRID_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let (h, rows) = read_csv(&Path::new(&out).join("ka_sweep.csv"));
    assert_eq!(h, ["omega_rad_s", "k_a_1", "k_a_5", "k_a_10", "k_a_20"]);
    let low: Vec<f64> = rows[0][1..].iter().map(|v| v.parse().unwrap()).collect();
    assert!(low.windows(2).all(|w| w[1] > w[0]), "{low:?}");

    let o = run(&["ka-sweep", "--ka", "0", "--points", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let dc: f64 = text
        .lines()
        .last()
        .unwrap()
        .split_whitespace()
        .last()
        .unwrap()
        .parse()
        .unwrap();
    assert!(dc.abs() < 1e-10, "{text}");
}
