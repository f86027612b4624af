//! Command-line front end: configuration parsing, preset invocation, sweep
//! execution, CSV/JSONL emission, plot-script generation, and the
//! adiabaticity check command.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 I/O failure.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    propagate, snapshot_series, InitialState, PropagateOptions, RhsKind, Trajectory,
};
use crate::effective::{adiabaticity_report, AdiabaticityReport};
use crate::error::{ArpError, Result};
use crate::experiments::{preset_by_name, run_sweep, SweepResult, SweepSpec, SweptParameter};
use crate::model::SchemeSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICS: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "arpsim",
    version,
    about = "Chirped two-photon adiabatic-rapid-passage simulator for a three-level ladder atom"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Propagate one scheme and emit the population trajectory.
    Simulate(SimulateArgs),
    /// Run a one-dimensional parameter sweep and emit the results table.
    Sweep(SweepArgs),
    /// Emit the dressed-state series (energies, mixing angle, coefficients).
    Dressed(DressedArgs),
    /// Print the adiabaticity report with pass/warn verdicts.
    Check(CheckArgs),
}

/// Options shared by every subcommand. Each flag has a config-file
/// equivalent of the same name; a flag always overrides the file value.
#[derive(Args, Debug, Clone, Default)]
struct CommonArgs {
    /// Built-in scheme: case1 | case2 | case3.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// TOML configuration file.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override a scheme field, e.g. --set pump.peak_rabi_mhz=80
    /// (unit-suffix-free aliases such as pump.peak_rabi are accepted).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Propagation model.
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    /// Output file; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Number of output samples (trajectory) or grid points (dressed).
    #[arg(long, value_name = "N")]
    samples: Option<usize>,
    /// Worker-thread cap for sweep parallelism.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Relative integration tolerance.
    #[arg(long, value_name = "TOL")]
    rel_tol: Option<f64>,
    /// Absolute integration tolerance.
    #[arg(long, value_name = "TOL")]
    abs_tol: Option<f64>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Also record coherence magnitudes |ρ_gi|, |ρ_ir|, |ρ_gr|.
    #[arg(long)]
    coherences: bool,
    /// Write a gnuplot script plotting the emitted file (requires --out).
    #[arg(long, value_name = "PATH")]
    plot_script: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Swept parameter.
    #[arg(long, value_enum)]
    parameter: Option<ParameterArg>,
    /// Lower end of the sweep range.
    #[arg(long)]
    lo: Option<f64>,
    /// Upper end of the sweep range.
    #[arg(long)]
    hi: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    points: Option<usize>,
    /// Fixed Stokes peak Rabi frequency (MHz) for ratio sweeps.
    #[arg(long, value_name = "MHZ")]
    stokes_ref: Option<f64>,
    /// Write a gnuplot script plotting the emitted file (requires --out).
    #[arg(long, value_name = "PATH")]
    plot_script: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DressedArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ModelArg {
    Schrodinger,
    Lindblad,
    Effective,
}

impl From<ModelArg> for RhsKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Schrodinger => RhsKind::Schrodinger,
            ModelArg::Lindblad => RhsKind::Lindblad,
            ModelArg::Effective => RhsKind::Effective,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ParameterArg {
    EqualPeakRabi,
    PumpToStokesRatio,
    ChirpRate,
    PulseWidth,
}

impl From<ParameterArg> for SweptParameter {
    fn from(p: ParameterArg) -> Self {
        match p {
            ParameterArg::EqualPeakRabi => SweptParameter::EqualPeakRabi,
            ParameterArg::PumpToStokesRatio => SweptParameter::PumpToStokesRatio,
            ParameterArg::ChirpRate => SweptParameter::ChirpRate,
            ParameterArg::PulseWidth => SweptParameter::PulseWidth,
        }
    }
}

/// The config-file schema. Every key has a same-named CLI flag; `[scheme]`
/// is the file-side alternative to `preset`, and `[overrides]` is the
/// file-side equivalent of repeated `--set`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    preset: Option<String>,
    scheme: Option<SchemeSpec>,
    model: Option<ModelArg>,
    format: Option<OutputFormat>,
    out: Option<PathBuf>,
    samples: Option<usize>,
    jobs: Option<usize>,
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    coherences: Option<bool>,
    overrides: Option<BTreeMap<String, toml::Value>>,
    sweep: Option<SweepFileConfig>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFileConfig {
    parameter: Option<ParameterArg>,
    lo: Option<f64>,
    hi: Option<f64>,
    points: Option<usize>,
    stokes_ref_mhz: Option<f64>,
}

/// A fully resolved run: scheme plus every execution setting.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scheme: SchemeSpec,
    pub model: RhsKind,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub samples: usize,
    pub jobs: Option<usize>,
    pub options: PropagateOptions,
}

fn load_file_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ArpError::Config(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| ArpError::Config(format!("{}: {e}", path.display())))
}

/// Applies one dotted-path override to a scheme. The final path segment may
/// omit its unit suffix (`pump.peak_rabi` resolves to `pump.peak_rabi_mhz`);
/// unknown keys are hard errors.
pub fn apply_override(scheme: &SchemeSpec, key: &str, raw: &str) -> Result<SchemeSpec> {
    let mut tree = toml::Value::try_from(scheme)
        .map_err(|e| ArpError::Config(format!("internal serialization failure: {e}")))?;
    set_path(&mut tree, key, raw)?;
    let updated: SchemeSpec = tree
        .try_into()
        .map_err(|e| ArpError::Config(format!("override '{key}={raw}': {e}")))?;
    updated.validate_physics()?;
    Ok(updated)
}

const UNIT_SUFFIXES: [&str; 3] = ["_mhz", "_us", "_mhz_per_us"];

fn resolve_leaf(table: &toml::value::Table, segment: &str, full_key: &str) -> Result<String> {
    if table.contains_key(segment) {
        return Ok(segment.to_string());
    }
    let candidates: Vec<String> = UNIT_SUFFIXES
        .iter()
        .map(|s| format!("{segment}{s}"))
        .filter(|k| table.contains_key(k))
        .collect();
    match candidates.len() {
        1 => Ok(candidates.into_iter().next().unwrap()),
        0 => Err(ArpError::Config(format!(
            "unknown key '{full_key}' (no field named '{segment}'; known fields: {})",
            table.keys().cloned().collect::<Vec<_>>().join(", ")
        ))),
        _ => Err(ArpError::Config(format!(
            "ambiguous key '{full_key}': could be {}",
            candidates.join(" or ")
        ))),
    }
}

fn set_path(tree: &mut toml::Value, key: &str, raw: &str) -> Result<()> {
    let segments: Vec<&str> = key.split('.').collect();
    let mut node = tree;
    for (i, seg) in segments.iter().enumerate() {
        let table = node.as_table_mut().ok_or_else(|| {
            ArpError::Config(format!(
                "key '{key}': '{}' is a scalar field, not a table",
                segments[..i].join(".")
            ))
        })?;
        let is_last = i + 1 == segments.len();
        let resolved = if is_last {
            resolve_leaf(table, seg, key)?
        } else if table.contains_key(*seg) {
            (*seg).to_string()
        } else {
            return Err(ArpError::Config(format!(
                "unknown key '{key}' (no section named '{seg}'; known: {})",
                table.keys().cloned().collect::<Vec<_>>().join(", ")
            )));
        };
        if is_last {
            let current = table.get(&resolved).expect("resolved key exists");
            let parsed = parse_value_like(current, raw, key)?;
            table.insert(resolved, parsed);
            return Ok(());
        }
        node = table.get_mut(&resolved).expect("resolved key exists");
    }
    unreachable!("empty override key rejected by the split above")
}

fn parse_value_like(current: &toml::Value, raw: &str, key: &str) -> Result<toml::Value> {
    match current {
        toml::Value::Boolean(_) => raw.parse::<bool>().map(toml::Value::Boolean).map_err(|_| {
            ArpError::Config(format!("key '{key}': expected true/false, got '{raw}'"))
        }),
        toml::Value::String(_) => Ok(toml::Value::String(raw.to_string())),
        toml::Value::Float(_) | toml::Value::Integer(_) => raw
            .parse::<f64>()
            .map(toml::Value::Float)
            .map_err(|_| ArpError::Config(format!("key '{key}': expected a number, got '{raw}'"))),
        other => Err(ArpError::Config(format!(
            "key '{key}': cannot override a value of type {}",
            other.type_str()
        ))),
    }
}

fn toml_to_string(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn resolve_scheme(common: &CommonArgs, file: &FileConfig) -> Result<SchemeSpec> {
    let mut scheme = if let Some(name) = &common.preset {
        if common.config.is_some() && file.scheme.is_some() {
            return Err(ArpError::Config(
                "both --preset and a [scheme] table were given; pick one scheme source".into(),
            ));
        }
        preset_by_name(name)?
    } else if let Some(s) = &file.scheme {
        if file.preset.is_some() {
            return Err(ArpError::Config(
                "config file sets both 'preset' and '[scheme]'; pick one scheme source".into(),
            ));
        }
        let s = *s;
        s.validate()?;
        s
    } else if let Some(name) = &file.preset {
        preset_by_name(name)?
    } else {
        return Err(ArpError::Config(
            "no scheme source: pass --preset NAME, or a --config file with 'preset' or '[scheme]'"
                .into(),
        ));
    };

    if let Some(overrides) = &file.overrides {
        for (key, value) in overrides {
            scheme = apply_override(&scheme, key, &toml_to_string(value))?;
        }
    }
    for pair in &common.set {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| ArpError::Config(format!("--set expects KEY=VALUE, got '{pair}'")))?;
        scheme = apply_override(&scheme, key.trim(), value.trim())?;
    }
    Ok(scheme)
}

fn resolve_run(common: &CommonArgs, coherences_flag: bool) -> Result<RunConfig> {
    let file = match &common.config {
        Some(path) => load_file_config(path)?,
        None => FileConfig::default(),
    };
    let scheme = resolve_scheme(common, &file)?;
    let model: RhsKind = common
        .model
        .or(file.model)
        .unwrap_or(ModelArg::Lindblad)
        .into();
    let defaults = PropagateOptions::default();
    let options = PropagateOptions {
        rel_tol: common.rel_tol.or(file.rel_tol).unwrap_or(defaults.rel_tol),
        abs_tol: common.abs_tol.or(file.abs_tol).unwrap_or(defaults.abs_tol),
        n_samples: common
            .samples
            .or(file.samples)
            .unwrap_or(defaults.n_samples),
        record_coherences: coherences_flag || file.coherences.unwrap_or(false),
    };
    Ok(RunConfig {
        scheme,
        model,
        format: common.format.or(file.format).unwrap_or(OutputFormat::Csv),
        out: common.out.clone().or(file.out),
        samples: options.n_samples,
        jobs: common.jobs.or(file.jobs),
        options,
    })
}

fn resolve_sweep(args: &SweepArgs, run: &RunConfig) -> Result<SweepSpec> {
    let file = match &args.common.config {
        Some(path) => load_file_config(path)?.sweep.unwrap_or_default(),
        None => SweepFileConfig::default(),
    };
    let parameter: SweptParameter = args
        .parameter
        .or(file.parameter)
        .ok_or_else(|| {
            ArpError::Config("sweep requires --parameter (or [sweep].parameter)".into())
        })?
        .into();
    let lo = args
        .lo
        .or(file.lo)
        .ok_or_else(|| ArpError::Config("sweep requires --lo (or [sweep].lo)".into()))?;
    let hi = args
        .hi
        .or(file.hi)
        .ok_or_else(|| ArpError::Config("sweep requires --hi (or [sweep].hi)".into()))?;
    let n_points = args
        .points
        .or(file.points)
        .ok_or_else(|| ArpError::Config("sweep requires --points (or [sweep].points)".into()))?;
    let spec = SweepSpec {
        template: run.scheme,
        parameter,
        lo,
        hi,
        n_points,
        stokes_ref_mhz: args.stokes_ref.or(file.stokes_ref_mhz),
        model: run.model,
        options: run.options,
    };
    spec.validate()?;
    Ok(spec)
}

/// 12 significant digits, locale-independent; the fixed width keeps repeated
/// runs byte-identical.
fn fmt(x: f64) -> String {
    format!("{x:.11e}")
}

/// Serializes a trajectory. CSV columns are exactly
/// `t_us,P_g,P_i,P_r[,coh_gi,coh_ir,coh_gr]`, LF line endings.
pub fn emit_trajectory(traj: &Trajectory, format: OutputFormat) -> String {
    let mut s = String::new();
    match format {
        OutputFormat::Csv => {
            s.push_str("t_us,P_g,P_i,P_r");
            if traj.coherences.is_some() {
                s.push_str(",coh_gi,coh_ir,coh_gr");
            }
            s.push('\n');
            for k in 0..traj.times_us.len() {
                let _ = write!(
                    s,
                    "{},{},{},{}",
                    fmt(traj.times_us[k]),
                    fmt(traj.p_g[k]),
                    fmt(traj.p_i[k]),
                    fmt(traj.p_r[k])
                );
                if let Some(coh) = &traj.coherences {
                    let _ = write!(
                        s,
                        ",{},{},{}",
                        fmt(coh[k][0]),
                        fmt(coh[k][1]),
                        fmt(coh[k][2])
                    );
                }
                s.push('\n');
            }
        }
        OutputFormat::Jsonl => {
            for k in 0..traj.times_us.len() {
                let mut row = serde_json::Map::new();
                row.insert("t_us".into(), traj.times_us[k].into());
                row.insert("P_g".into(), traj.p_g[k].into());
                row.insert("P_i".into(), traj.p_i[k].into());
                row.insert("P_r".into(), traj.p_r[k].into());
                if let Some(coh) = &traj.coherences {
                    row.insert("coh_gi".into(), coh[k][0].into());
                    row.insert("coh_ir".into(), coh[k][1].into());
                    row.insert("coh_gr".into(), coh[k][2].into());
                }
                s.push_str(&serde_json::Value::Object(row).to_string());
                s.push('\n');
            }
        }
    }
    s
}

/// Columns of a trajectory file: (times, P_g, P_i, P_r).
pub type TrajectoryColumns = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>);

/// Parses a CSV produced by [`emit_trajectory`] back into columns.
pub fn parse_trajectory_csv(text: &str) -> Result<TrajectoryColumns> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| ArpError::Config("empty trajectory file".into()))?;
    if !header.starts_with("t_us,P_g,P_i,P_r") {
        return Err(ArpError::Config(format!(
            "unexpected trajectory header '{header}'"
        )));
    }
    let mut cols: TrajectoryColumns = Default::default();
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 4 {
            return Err(ArpError::Config(format!(
                "short row {} in trajectory file",
                n + 2
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| ArpError::Config(format!("bad number '{s}' in trajectory file")))
        };
        cols.0.push(parse(fields[0])?);
        cols.1.push(parse(fields[1])?);
        cols.2.push(parse(fields[2])?);
        cols.3.push(parse(fields[3])?);
    }
    Ok(cols)
}

/// Serializes a sweep table. CSV columns are exactly
/// `swept_value,P_g_final,P_i_final,P_r_final,P_i_peak,lz_probability`.
pub fn emit_sweep(result: &SweepResult, format: OutputFormat) -> String {
    let mut s = String::new();
    match format {
        OutputFormat::Csv => {
            s.push_str("swept_value,P_g_final,P_i_final,P_r_final,P_i_peak,lz_probability\n");
            for r in &result.rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    fmt(r.value),
                    fmt(r.p_g_final),
                    fmt(r.p_i_final),
                    fmt(r.p_r_final),
                    fmt(r.p_i_peak),
                    fmt(r.lz_probability)
                );
            }
        }
        OutputFormat::Jsonl => {
            for r in &result.rows {
                s.push_str(&serde_json::to_string(r).expect("sweep row serializes"));
                s.push('\n');
            }
        }
    }
    s
}

/// A self-contained gnuplot script plotting the three population curves of
/// an emitted data file.
pub fn emit_plot_script(data_path: &Path, is_sweep: bool) -> String {
    let data = data_path.display();
    let (xlabel, xcol) = if is_sweep {
        ("swept value", 1)
    } else {
        ("t (us)", 1)
    };
    let titles = if is_sweep {
        ["P_g final", "P_i final", "P_r final"]
    } else {
        ["P_g", "P_i", "P_r"]
    };
    format!(
        "# gnuplot script: population curves from '{data}'\n\
         set datafile separator ','\n\
         set key autotitle columnheader outside\n\
         set xlabel '{xlabel}'\n\
         set ylabel 'population'\n\
         set yrange [-0.02:1.05]\n\
         set grid\n\
         plot '{data}' using {xcol}:2 with lines lw 2 title '{t0}', \\\n\
         \x20    '{data}' using {xcol}:3 with lines lw 2 title '{t1}', \\\n\
         \x20    '{data}' using {xcol}:4 with lines lw 2 title '{t2}'\n",
        t0 = titles[0],
        t1 = titles[1],
        t2 = titles[2],
    )
}

/// The adiabaticity report plus pass/warn verdicts as printed by `check`.
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutput {
    pub report: AdiabaticityReport,
    /// "pass" when ατ_p² ≥ 3 (and βτ_S² ≥ 3 where applicable).
    pub verdict_pulse_area: String,
    /// "pass" when P_LZ ≤ 0.01.
    pub verdict_landau_zener: String,
    pub overall: String,
    pub note: Option<String>,
}

pub fn run_check(scheme: &SchemeSpec, n_grid: usize) -> Result<CheckOutput> {
    let report = adiabaticity_report(scheme, n_grid)?;
    let verdict = |ok: bool| {
        if ok {
            "pass".to_string()
        } else {
            "warn".to_string()
        }
    };
    let pulse_ok = report.alpha_tau_p_sq.abs() >= 3.0
        && report
            .beta_tau_s_sq
            .is_none_or(|b| b == 0.0 || b.abs() >= 3.0);
    let lz_ok = report.lz_probability <= 0.01;
    let note = report
        .no_sweep
        .then(|| "no sweep; ARP inapplicable".to_string());
    let overall = verdict(pulse_ok && lz_ok && !report.no_sweep);
    Ok(CheckOutput {
        report,
        verdict_pulse_area: verdict(pulse_ok),
        verdict_landau_zener: verdict(lz_ok),
        overall,
        note,
    })
}

fn render_check_text(c: &CheckOutput) -> String {
    let r = &c.report;
    let mut s = String::new();
    let _ = writeln!(s, "adiabaticity report");
    let _ = writeln!(s, "  alpha*tau_p^2        = {:.6}", r.alpha_tau_p_sq);
    match r.beta_tau_s_sq {
        Some(b) => {
            let _ = writeln!(s, "  beta*tau_S^2         = {b:.6}");
        }
        None => {
            let _ = writeln!(s, "  beta*tau_S^2         = n/a (CW Stokes)");
        }
    }
    let _ = writeln!(s, "  pulse-area verdict   : {}", c.verdict_pulse_area);
    let _ = writeln!(
        s,
        "  peak Omega_eff       = {:.6} MHz",
        r.omega_eff_peak_mhz
    );
    let _ = writeln!(
        s,
        "  alpha_eff            = {:.6} MHz/us",
        r.alpha_eff_mhz_per_us
    );
    let _ = writeln!(s, "  sweep ratio (plain)  = {:.6e}", r.sweep_ratio_plain);
    let _ = writeln!(s, "  sweep ratio (angular)= {:.6e}", r.sweep_ratio_angular);
    let _ = writeln!(s, "  max local ratio      = {:.6e}", r.max_local_ratio);
    let _ = writeln!(s, "  P_LZ                 = {:.6e}", r.lz_probability);
    let _ = writeln!(s, "  Landau-Zener verdict : {}", c.verdict_landau_zener);
    if let Some(note) = &c.note {
        let _ = writeln!(s, "  note                 : {note}");
    }
    let _ = writeln!(s, "  overall              : {}", c.overall);
    s
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content.as_bytes()).map_err(ArpError::Io),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<i32> {
    let run = resolve_run(&args.common, args.coherences)?;
    if args.plot_script.is_some() && run.out.is_none() {
        return Err(ArpError::Config("--plot-script requires --out".into()));
    }
    let traj = propagate(run.model, &run.scheme, &InitialState::Ground, &run.options)?;
    write_output(&run.out, &emit_trajectory(&traj, run.format))?;
    if let Some(script) = &args.plot_script {
        let data = run.out.as_ref().expect("checked above");
        std::fs::write(script, emit_plot_script(data, false))?;
    }
    Ok(EXIT_OK)
}

fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    let run = resolve_run(&args.common, false)?;
    if args.plot_script.is_some() && run.out.is_none() {
        return Err(ArpError::Config("--plot-script requires --out".into()));
    }
    let spec = resolve_sweep(args, &run)?;
    let result = match run.jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| ArpError::Config(format!("--jobs {n}: {e}")))?;
            pool.install(|| run_sweep(&spec))?
        }
        None => run_sweep(&spec)?,
    };
    write_output(&run.out, &emit_sweep(&result, run.format))?;
    if let Some(script) = &args.plot_script {
        let data = run.out.as_ref().expect("checked above");
        std::fs::write(script, emit_plot_script(data, true))?;
    }
    let failures: Vec<&str> = result
        .rows
        .iter()
        .filter_map(|r| r.error.as_deref())
        .collect();
    if failures.is_empty() {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "arpsim: {} sweep point(s) failed: {}",
            failures.len(),
            failures.join("; ")
        );
        Ok(EXIT_NUMERICS)
    }
}

fn cmd_dressed(args: &DressedArgs) -> Result<i32> {
    let run = resolve_run(&args.common, false)?;
    let snaps = snapshot_series(&run.scheme, run.samples)?;
    let mut s = String::new();
    match run.format {
        OutputFormat::Csv => {
            s.push_str(
                "t_us,omega_eff_mhz,stark_g_mhz,stark_r_mhz,delta_eff_mhz,\
                 lambda_plus_mhz,lambda_minus_mhz,theta_rad,c_g_plus,c_r_plus,c_g_minus,c_r_minus\n",
            );
            for snap in &snaps {
                let (cgp, crp, cgm, crm) = snap.coeffs;
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    fmt(snap.t_us),
                    fmt(snap.omega_eff_mhz),
                    fmt(snap.stark_g_mhz),
                    fmt(snap.stark_r_mhz),
                    fmt(snap.delta_eff_mhz),
                    fmt(snap.lambda_plus_mhz),
                    fmt(snap.lambda_minus_mhz),
                    fmt(snap.theta_rad),
                    fmt(cgp),
                    fmt(crp),
                    fmt(cgm),
                    fmt(crm)
                );
            }
        }
        OutputFormat::Jsonl => {
            for snap in &snaps {
                s.push_str(&serde_json::to_string(snap).expect("snapshot serializes"));
                s.push('\n');
            }
        }
    }
    write_output(&run.out, &s)?;
    Ok(EXIT_OK)
}

fn cmd_check(args: &CheckArgs) -> Result<i32> {
    let run = resolve_run(&args.common, false)?;
    let check = run_check(&run.scheme, run.samples.max(2))?;
    let text = match run.format {
        OutputFormat::Csv => render_check_text(&check),
        OutputFormat::Jsonl => {
            format!(
                "{}\n",
                serde_json::to_string(&check).expect("check output serializes")
            )
        }
    };
    write_output(&run.out, &text)?;
    Ok(EXIT_OK)
}

fn exit_code_for(err: &ArpError) -> i32 {
    match err {
        ArpError::InvalidSpec(_) | ArpError::Config(_) | ArpError::Domain(_) => EXIT_CONFIG,
        ArpError::Numerics { .. } => EXIT_NUMERICS,
        ArpError::Io(_) => EXIT_IO,
    }
}

/// Parses `std::env::args`, dispatches, and returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Dressed(args) => cmd_dressed(args),
        Command::Check(args) => cmd_check(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("arpsim: error: {e}");
            exit_code_for(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{preset_case1, preset_case2};
    use crate::units::TWO_PI;

    #[test]
    fn override_with_exact_key() {
        let s = preset_case1();
        let s2 = apply_override(&s, "pump.peak_rabi_mhz", "80").unwrap();
        assert_eq!(s2.pump.peak_rabi_mhz, 80.0);
        assert_eq!(s2.stokes.peak_rabi_mhz, 100.0);
    }

    #[test]
    fn override_with_bare_alias() {
        let s = preset_case1();
        let s2 = apply_override(&s, "pump.peak_rabi", "0").unwrap();
        assert_eq!(s2.pump.peak_rabi_mhz, 0.0);
        let s3 = apply_override(&s, "t_start", "-4").unwrap();
        assert_eq!(s3.t_start_us, -4.0);
        let s4 = apply_override(&s, "atom.delta0", "2000").unwrap();
        assert_eq!(s4.atom.delta0_mhz, 2000.0);
    }

    #[test]
    fn override_unknown_key_is_hard_error() {
        let s = preset_case1();
        let err = apply_override(&s, "pump.peak_rabbi", "50").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("unknown key"), "message was: {msg}");
        assert!(msg.contains("peak_rabbi"), "message was: {msg}");
        assert!(apply_override(&s, "laser.peak_rabi", "50").is_err());
    }

    #[test]
    fn override_type_mismatch_is_error() {
        let s = preset_case1();
        assert!(apply_override(&s, "pump.peak_rabi", "fast").is_err());
        assert!(apply_override(&s, "units.rabi_2pi", "maybe").is_err());
        // A table is not assignable.
        assert!(apply_override(&s, "pump", "1").is_err());
    }

    #[test]
    fn override_string_and_bool_fields() {
        let s = preset_case1();
        let s2 = apply_override(&s, "units.chirp_2pi", "true").unwrap();
        assert!(s2.units.chirp_2pi);
        let s3 = apply_override(&s2, "units.chirp_2pi", "false").unwrap();
        assert_eq!(s3, s);
    }

    #[test]
    fn override_rejects_physical_nonsense() {
        let s = preset_case1();
        assert!(apply_override(&s, "pump.peak_rabi", "-5").is_err());
        assert!(apply_override(&s, "pump.width", "0").is_err());
    }

    #[test]
    fn trajectory_csv_round_trip() {
        let traj = Trajectory {
            kind: RhsKind::Schrodinger,
            scheme: preset_case2(),
            times_us: vec![0.0, 0.5, 1.0],
            p_g: vec![1.0, 0.5, 0.25],
            p_i: vec![0.0, 0.125, 1.0 / 3.0],
            p_r: vec![0.0, 0.375, 5.0 / 12.0],
            coherences: None,
            final_state: crate::dynamics::FinalState::Pure2([Default::default(); 2]),
            stats: Default::default(),
        };
        let csv = emit_trajectory(&traj, OutputFormat::Csv);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("t_us,P_g,P_i,P_r\n"));
        assert!(!csv.contains('\r'));
        let (t, pg, pi, pr) = parse_trajectory_csv(&csv).unwrap();
        for (a, b) in t.iter().zip(&traj.times_us) {
            assert!((a - b).abs() <= 1e-10);
        }
        for (a, b) in pg.iter().zip(&traj.p_g) {
            assert!((a - b).abs() <= 1e-10);
        }
        for (a, b) in pi.iter().zip(&traj.p_i) {
            assert!((a - b).abs() <= 1e-10);
        }
        for (a, b) in pr.iter().zip(&traj.p_r) {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn sweep_csv_header() {
        let result = SweepResult {
            parameter: SweptParameter::EqualPeakRabi,
            model: RhsKind::Schrodinger,
            stokes_ref_mhz: None,
            rows: vec![],
        };
        let csv = emit_sweep(&result, OutputFormat::Csv);
        assert_eq!(
            csv,
            "swept_value,P_g_final,P_i_final,P_r_final,P_i_peak,lz_probability\n"
        );
    }

    #[test]
    fn check_verdicts_case1() {
        let out = run_check(&preset_case1(), 801).unwrap();
        assert_eq!(out.verdict_pulse_area, "pass");
        assert_eq!(out.verdict_landau_zener, "pass");
        assert_eq!(out.overall, "pass");
        assert!(out.note.is_none());
        // P_LZ = exp(-pi * Omega_eff_ang^2 / (2 alpha_eff_ang)) with
        // Omega_eff = 100*100/(2*1500) MHz (x 2pi) and alpha_eff = 8.4 MHz/us.
        let w = TWO_PI * 100.0 * 100.0 / (2.0 * 1500.0);
        let expect = (-std::f64::consts::PI * w * w / (2.0 * 8.4)).exp();
        let rel = (out.report.lz_probability - expect).abs() / expect;
        assert!(
            rel < 1e-6,
            "lz = {}, expect = {expect}",
            out.report.lz_probability
        );
    }

    #[test]
    fn check_flags_no_sweep() {
        let mut s = preset_case1();
        s.pump.chirp_rate_mhz_per_us = 0.0;
        s.stokes.chirp_rate_mhz_per_us = 0.0;
        s.case_tag = crate::model::CaseTag::BothChirped; // tag unused by check
        let out = run_check(&s, 401).unwrap();
        assert!(out.report.no_sweep);
        assert_eq!(out.note.as_deref(), Some("no sweep; ARP inapplicable"));
        assert_eq!(out.overall, "warn");
    }

    #[test]
    fn plot_script_mentions_data_file() {
        let script = emit_plot_script(Path::new("runs/sweep.csv"), true);
        assert!(script.contains("runs/sweep.csv"));
        assert!(script.contains("gnuplot"));
        assert!(script.contains("using 1:4"));
    }
}
