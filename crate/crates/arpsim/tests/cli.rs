//! End-to-end tests of the `arpsim` binary: config resolution, precedence,
//! output formats, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn arpsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arpsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const FAST: &[&str] = &["--rel-tol", "1e-6", "--abs-tol", "1e-9"];

#[test]
fn simulate_preset_csv_shape() {
    let out = arpsim(
        &[
            &[
                "simulate",
                "--preset",
                "case2",
                "--model",
                "effective",
                "--samples",
                "3",
            ],
            FAST,
        ]
        .concat(),
    );
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4, "header + 3 samples, got: {text}");
    assert_eq!(lines[0], "t_us,P_g,P_i,P_r");
    assert!(!text.contains('\r'));
    for line in &lines[1..] {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields.len(), 4);
        let total: f64 = fields[1..].iter().sum();
        assert!(
            (total - 1.0).abs() < 1e-4,
            "populations must sum to 1: {line}"
        );
    }
}

#[test]
fn unknown_set_key_is_exit_2() {
    let out = arpsim(&[
        "simulate",
        "--preset",
        "case1",
        "--set",
        "pump.peak_rabbi=50",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("unknown key"),
        "stderr: {}",
        stderr(&out)
    );
}

#[test]
fn missing_scheme_source_is_exit_2() {
    let out = arpsim(&["simulate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("scheme source"),
        "stderr: {}",
        stderr(&out)
    );
}

#[test]
fn unreadable_config_is_exit_2() {
    let out = arpsim(&["check", "--config", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_key_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "preset = 'case1'\nsample = 7\n");
    let out = arpsim(&["check", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
}

#[test]
fn unwritable_out_is_exit_4() {
    let out = arpsim(
        &[
            &[
                "simulate",
                "--preset",
                "case2",
                "--model",
                "effective",
                "--samples",
                "3",
                "--out",
                "/nonexistent-dir/x.csv",
            ],
            FAST,
        ]
        .concat(),
    );
    assert_eq!(out.status.code(), Some(4), "stderr: {}", stderr(&out));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "preset = 'case2'\nmodel = 'effective'\nsamples = 9\nrel_tol = 1e-6\nabs_tol = 1e-9\n",
    );
    // File alone: 9 samples.
    let out = arpsim(&["simulate", "--config", &cfg]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 10);
    // --samples wins over the file.
    let out = arpsim(&["simulate", "--config", &cfg, "--samples", "4"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 5);
}

#[test]
fn set_flag_overrides_config_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "preset = 'case1'\n[overrides]\n'pump.peak_rabi' = 50.0\n",
    );
    // The [overrides] table applies...
    let out = arpsim(&["check", "--config", &cfg, "--format", "jsonl"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let base: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    let peak = base["report"]["omega_eff_peak_mhz"].as_f64().unwrap();
    // Omega_eff = 50*100/(2*1500) = 5/3 MHz.
    assert!((peak - 5.0 / 3.0).abs() < 1e-3, "peak = {peak}");
    // ...and --set beats it: 60*100/(2*1500) = 2 MHz.
    let out = arpsim(&[
        "check",
        "--config",
        &cfg,
        "--format",
        "jsonl",
        "--set",
        "pump.peak_rabi=60",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    let peak = v["report"]["omega_eff_peak_mhz"].as_f64().unwrap();
    assert!((peak - 2.0).abs() < 1e-3, "peak = {peak}");
}

#[test]
fn full_scheme_table_in_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[scheme]
t_start_us = -2.5
t_end_us = 2.5
case_tag = "pump_only_chirped"

[scheme.pump]
shape = "gaussian"
peak_rabi_mhz = 25.0
center_time_us = 0.0
width_us = 0.45
chirp_rate_mhz_per_us = 2.0
chirp_center_us = 0.0

[scheme.stokes]
shape = "gaussian"
peak_rabi_mhz = 25.0
center_time_us = 0.0
width_us = 0.45
chirp_rate_mhz_per_us = 0.0
chirp_center_us = 0.0

[scheme.atom]
delta0_mhz = 1500.0
gamma_ig_mhz = 6.0
gamma_ri_mhz = 3e-3
"#,
    );
    let out = arpsim(&["check", "--config", &cfg]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(
        stdout(&out).contains("alpha_eff            = 2.000000 MHz/us"),
        "{}",
        stdout(&out)
    );
}

#[test]
fn sweep_csv_and_plot_script() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("sweep.csv");
    let script = dir.path().join("sweep.gp");
    let out = arpsim(
        &[
            &[
                "sweep",
                "--preset",
                "case1",
                "--model",
                "schrodinger",
                "--parameter",
                "equal-peak-rabi",
                "--lo",
                "0",
                "--hi",
                "40",
                "--points",
                "3",
                "--samples",
                "16",
                "--out",
                data.to_str().unwrap(),
                "--plot-script",
                script.to_str().unwrap(),
                "--jobs",
                "2",
            ],
            FAST,
        ]
        .concat(),
    );
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = std::fs::read_to_string(&data).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "swept_value,P_g_final,P_i_final,P_r_final,P_i_peak,lz_probability"
    );
    assert_eq!(lines.len(), 4);
    // Monotone swept_value column.
    let vals: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(vals.windows(2).all(|w| w[0] < w[1]));
    let gp = std::fs::read_to_string(&script).unwrap();
    assert!(gp.contains("sweep.csv") && gp.contains("plot"), "{gp}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let args = |p: &Path| {
        [
            &[
                "simulate",
                "--preset",
                "case3",
                "--model",
                "lindblad",
                "--samples",
                "50",
                "--out",
                p.to_str().unwrap(),
            ],
            FAST,
        ]
        .concat()
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
    };
    for p in [&a, &b] {
        let out = Command::new(env!("CARGO_BIN_EXE_arpsim"))
            .args(args(p))
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", stderr(&out));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn jsonl_trajectory_format() {
    let out = arpsim(
        &[
            &[
                "simulate",
                "--preset",
                "case2",
                "--model",
                "effective",
                "--samples",
                "3",
                "--format",
                "jsonl",
            ],
            FAST,
        ]
        .concat(),
    );
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 3);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["t_us"].is_number() && v["P_r"].is_number());
    }
}

#[test]
fn dressed_emits_series() {
    let out = arpsim(&["dressed", "--preset", "case1", "--samples", "5"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6);
    assert!(lines[0].starts_with("t_us,omega_eff_mhz,"));
    assert!(lines[0].ends_with("c_g_minus,c_r_minus"));
}

#[test]
fn check_reports_no_sweep() {
    let out = arpsim(&[
        "check",
        "--preset",
        "case1",
        "--set",
        "pump.chirp_rate=0",
        "--set",
        "stokes.chirp_rate=0",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(
        stdout(&out).contains("no sweep; ARP inapplicable"),
        "{}",
        stdout(&out)
    );
}

#[test]
fn check_case1_passes_adiabaticity() {
    let out = arpsim(&["check", "--preset", "case1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("overall              : pass"), "{text}");
    assert!(
        text.contains("alpha_eff            = 8.400000 MHz/us"),
        "{text}"
    );
}
