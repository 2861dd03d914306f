//! The `wavesim` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::error::{Result, WaveError};
use crate::mesh::ElementKind;
use crate::newmark::resample;
use crate::output::{cwt_csv, field_csv, fmt_f64, line_plot, snapshots_csv, CsvTable, OutDir, Series};
use crate::scenario::{
    self, parse_assignment, prepare, set_path, ConvergenceAxis, Prepared, SimConfig, SolverKind, SweepAxis,
};

/// Environment variable holding the default worker thread count.
pub const THREADS_ENV: &str = "WAVESIM_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "wavesim", version, about = "Laplace-domain wavelet finite element wave simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation.
    Simulate(Common),
    /// Sweep mesh density or time step and report deviations from the finest run.
    Convergence {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        axis: AxisArg,
        /// Comma-separated sweep values.
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        values: Vec<f64>,
    },
    /// Vary crack depth or position and measure direct and flaw packets.
    CrackSweep {
        #[command(flatten)]
        common: Common,
        /// Depth ratios a/h, at the first configured crack's position.
        #[arg(long, value_delimiter = ',', num_args = 1.., conflicts_with = "locations", required_unless_present = "locations")]
        depths: Vec<f64>,
        /// Crack positions (m), at the first configured crack's depth.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        locations: Vec<f64>,
    },
    /// Dual-frequency burst on a beam with a time-frequency map at the mid-point.
    Dispersion(Common),
    /// Run the configured solver against a conventional Newmark reference.
    Compare(Common),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    Epw,
    Spp,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "wavesim-out")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Flags that replace config keys.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long, value_enum)]
    pub solver: Option<SolverArg>,
    #[arg(long, value_enum)]
    pub element: Option<ElementArg>,
    #[arg(long, conflicts_with = "epw")]
    pub elements: Option<usize>,
    #[arg(long)]
    pub epw: Option<f64>,
    #[arg(long, conflicts_with = "dt")]
    pub spp: Option<u32>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Simulated time (s).
    #[arg(long)]
    pub duration: Option<f64>,
    /// Material preset name.
    #[arg(long)]
    pub material: Option<String>,
    /// Arbitrary `key.path=value` assignment (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Lwfem,
    Newmark,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ElementArg {
    BswiRod,
    BswiBeam,
    FemRod,
    FemBeam,
}

impl From<ElementArg> for ElementKind {
    fn from(e: ElementArg) -> Self {
        match e {
            ElementArg::BswiRod => ElementKind::BswiRod,
            ElementArg::BswiBeam => ElementKind::BswiBeam,
            ElementArg::FemRod => ElementKind::FemRod,
            ElementArg::FemBeam => ElementKind::FemBeam,
        }
    }
}

impl Overrides {
    /// Applies the flags to a raw config document.
    pub fn apply(&self, doc: &mut Value) -> Result<()> {
        if let Some(s) = self.solver {
            let name = match s {
                SolverArg::Lwfem => "lwfem",
                SolverArg::Newmark => "newmark",
            };
            set_path(doc, "solver", json!(name))?;
        }
        if let Some(e) = self.element {
            set_path(doc, "mesh.element", serde_json::to_value(ElementKind::from(e)).expect("serializable"))?;
        }
        if let Some(n) = self.elements {
            set_path(doc, "mesh.elements", json!(n))?;
            set_path(doc, "mesh.epw", Value::Null)?;
        }
        if let Some(e) = self.epw {
            set_path(doc, "mesh.epw", json!(e))?;
            set_path(doc, "mesh.elements", Value::Null)?;
        }
        if let Some(s) = self.spp {
            set_path(doc, "grid.spp", json!(s))?;
            set_path(doc, "grid.dt", Value::Null)?;
        }
        if let Some(dt) = self.dt {
            set_path(doc, "grid.dt", json!(dt))?;
            set_path(doc, "grid.spp", Value::Null)?;
        }
        if let Some(d) = self.duration {
            set_path(doc, "grid.duration", json!(d))?;
        }
        if let Some(m) = &self.material {
            set_path(doc, "material", json!(m))?;
        }
        for a in &self.set {
            let (k, v) = parse_assignment(a)?;
            set_path(doc, &k, v)?;
        }
        Ok(())
    }
}

/// Reads the config file and applies the overrides.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| WaveError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut doc: Value =
        serde_json::from_str(&text).map_err(|e| WaveError::Config(format!("{}: invalid JSON: {e}", path.display())))?;
    if !doc.is_object() {
        return Err(WaveError::Config(format!("{}: top level must be an object", path.display())));
    }
    overrides.apply(&mut doc)?;
    SimConfig::from_value(doc)
}

/// Exit code for a failed run.
pub fn exit_code(e: &WaveError) -> i32 {
    match e {
        WaveError::Config(_) | WaveError::Domain(_) | WaveError::NoCrack | WaveError::InteriorLoad(_) => EXIT_CONFIG,
        WaveError::IllConditioned { .. }
        | WaveError::SingularFrequency { .. }
        | WaveError::Solver(_)
        | WaveError::SignalTooLong { .. }
        | WaveError::Analysis(_)
        | WaveError::Io(_) => EXIT_SOLVER,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("wavesim: {e}");
            exit_code(&e)
        }
    }
}

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Simulate(c) | Command::Dispersion(c) | Command::Compare(c) => c,
        Command::Convergence { common, .. } | Command::CrackSweep { common, .. } => common,
    }
}

pub fn execute(cmd: &Command) -> Result<()> {
    let c = common(cmd);
    let config = load_config(&c.config, &c.overrides)?;
    let threads = match c.threads {
        Some(0) => return Err(WaveError::Config("--threads must be at least 1".into())),
        Some(n) => n,
        None => rayon::current_num_threads(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| WaveError::Solver(format!("cannot start {threads} worker threads: {e}")))?;
    let out = OutDir::create(&c.out)?;
    pool.install(|| match cmd {
        Command::Simulate(_) => cmd_simulate(&config, &out, threads),
        Command::Convergence { axis, values, .. } => cmd_convergence(&config, *axis, values, &out, threads),
        Command::CrackSweep { depths, locations, .. } => cmd_crack_sweep(&config, depths, locations, &out, threads),
        Command::Dispersion(_) => cmd_dispersion(&config, &out, threads),
        Command::Compare(_) => cmd_compare(&config, &out, threads),
    })
}

fn resolved(p: &Prepared) -> Value {
    json!({
        "elements": p.mesh.element_count(),
        "nodes": p.mesh.node_count(),
        "dofs": p.system.n_dof(),
        "epw": p.config.effective_epw(),
        "f_max_hz": p.config.f_max(),
        "dt_s": p.dt,
        "samples": p.samples,
        "laplace_n": p.grid.map(|g| g.n),
        "sigma_per_s": p.grid.map(|g| g.sigma),
        "window_s": p.grid.map(|g| g.window()),
        "material": p.material,
        "section": p.section,
        "cracks": p.mesh.cracks.iter().map(|c| &c.spec).collect::<Vec<_>>(),
        "probes": p.probes.iter().map(|pr| json!({"label": pr.label, "x": pr.x, "component": pr.component})).collect::<Vec<_>>(),
    })
}

fn notes(config: &SimConfig) -> Vec<&'static str> {
    let mut n = vec!["crack depth ratios are relative to the section height h"];
    if config.solver == SolverKind::Newmark {
        n.push("Newmark runs use average acceleration with the consistent mass matrix");
    }
    n
}

fn metadata(command: &str, config: &SimConfig, threads: usize, extra: Value) -> Value {
    let mut v = json!({
        "tool": "wavesim",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "threads": threads,
        "config": config.to_value(),
        "notes": notes(config),
    });
    if let (Some(obj), Value::Object(more)) = (v.as_object_mut(), extra) {
        obj.extend(more);
    }
    v
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, fmt_f64)
}

fn cmd_simulate(config: &SimConfig, out: &OutDir, threads: usize) -> Result<()> {
    let p = prepare(config)?;
    let r = scenario::simulate(&p)?;
    out.write("waveforms.csv", &field_csv(&r.waveforms))?;
    if !r.snapshots.is_empty() {
        out.write("snapshots.csv", &snapshots_csv(&r.snapshots))?;
    }
    if let Some(map) = &r.spectrum {
        out.write("spectrum.csv", &cwt_csv(map))?;
    }
    let series: Vec<Series> = (0..r.waveforms.channels())
        .map(|i| Series::from_field(&r.waveforms, i, r.waveforms.labels[i].clone()))
        .collect();
    out.write("waveforms.svg", &line_plot("Probe responses", "t (ms)", "displacement", &series))?;
    out.write_json(
        "run.json",
        &metadata("simulate", config, threads, json!({ "resolved": resolved(&p), "summary": r.summary })),
    )?;
    match r.summary.group_velocity {
        Some(v) => println!("group velocity {v:.1} m/s"),
        None => println!("{} arrivals at the receiver", r.summary.arrivals.len()),
    }
    if r.summary.no_crack {
        println!("no crack");
    }
    Ok(())
}

fn cmd_convergence(config: &SimConfig, axis: AxisArg, values: &[f64], out: &OutDir, threads: usize) -> Result<()> {
    if values.len() < 2 {
        return Err(WaveError::Config("convergence needs at least two values".into()));
    }
    let axis = match axis {
        AxisArg::Epw => ConvergenceAxis::Epw,
        AxisArg::Spp => ConvergenceAxis::Spp,
    };
    let r = scenario::convergence(config, axis, values)?;
    let mut t = CsvTable::new(["value", "elements", "dt_s", "deviation"]);
    for row in &r.rows {
        t.push(vec![fmt_f64(row.value), row.elements.to_string(), fmt_f64(row.dt), fmt_f64(row.deviation)]);
    }
    out.write("convergence.csv", &t.render())?;
    let name = match axis {
        ConvergenceAxis::Epw => "EPW",
        ConvergenceAxis::Spp => "SPP",
    };
    let dev = Series::new(
        "relative L2 deviation",
        r.rows.iter().map(|x| x.value).collect(),
        r.rows.iter().map(|x| x.deviation).collect(),
    );
    out.write("convergence.svg", &line_plot(&format!("Deviation from the finest {name}"), name, "deviation", &[dev]))?;
    let overlay: Vec<Series> = r
        .runs
        .iter()
        .zip(&r.rows)
        .map(|(f, row)| {
            let i = f.labels.iter().position(|l| *l == r.probe).unwrap_or(0);
            Series::from_field(f, i, format!("{name} {}", row.value))
        })
        .collect();
    out.write("convergence_waveforms.svg", &line_plot(&format!("{} response", r.probe), "t (ms)", "displacement", &overlay))?;
    out.write_json(
        "run.json",
        &metadata("convergence", config, threads, json!({ "axis": axis, "values": values, "probe": r.probe, "rows": r.rows })),
    )?;
    for row in &r.rows {
        println!("{name} {:>8} deviation {:.4e}", row.value, row.deviation);
    }
    Ok(())
}

fn cmd_crack_sweep(config: &SimConfig, depths: &[f64], locations: &[f64], out: &OutDir, threads: usize) -> Result<()> {
    if config.cracks.is_empty() {
        return Err(WaveError::Config("crack-sweep needs at least one crack in the config".into()));
    }
    let axis = if depths.is_empty() {
        SweepAxis::Location(locations.to_vec())
    } else {
        SweepAxis::Depth(depths.to_vec())
    };
    let r = scenario::crack_sweep(config, &axis)?;
    let mut t = CsvTable::new([
        "position_m",
        "depth_ratio",
        "direct_amplitude",
        "direct_arrival_s",
        "flaw_amplitude",
        "flaw_arrival_s",
        "flaw_arrivals",
        "below_detection",
    ]);
    for row in &r.rows {
        let m = &row.metrics;
        t.push(vec![
            fmt_f64(row.position),
            fmt_f64(row.depth_ratio),
            fmt_f64(m.direct_amplitude),
            fmt_f64(m.direct_arrival),
            fmt_f64(m.flaw_amplitude),
            opt(m.flaw_arrival),
            m.flaw_arrivals.to_string(),
            m.below_detection.to_string(),
        ]);
    }
    out.write("crack_metrics.csv", &t.render())?;

    let recv = r.baseline.labels.iter().position(|l| l == "receiver").unwrap_or(r.baseline.channels() - 1);
    let labels: Vec<String> = r.rows.iter().map(|row| format!("x={} a/h={}", row.position, row.depth_ratio)).collect();
    let mut cols = vec![r.baseline.values[recv].clone()];
    cols.extend(r.runs.iter().map(|f| f.values[recv].clone()));
    let receiver = crate::laplace::TimeSeriesField {
        dt: r.baseline.dt,
        labels: std::iter::once("uncracked".to_string()).chain(labels.iter().cloned()).collect(),
        positions: vec![r.baseline.positions[recv]; cols.len()],
        values: cols,
    };
    out.write("crack_waveforms.csv", &field_csv(&receiver))?;
    let series: Vec<Series> = (0..receiver.channels())
        .map(|i| Series::from_field(&receiver, i, receiver.labels[i].clone()))
        .collect();
    out.write("crack_sweep.svg", &line_plot("Receiver response", "t (ms)", "displacement", &series))?;
    let axis_name = if depths.is_empty() { "location" } else { "depth" };
    out.write_json(
        "run.json",
        &metadata("crack-sweep", config, threads, json!({ "axis": axis_name, "rows": r.rows })),
    )?;
    for row in &r.rows {
        let m = &row.metrics;
        println!(
            "x={} a/h={} direct {:.4e} flaw {:.4e} ({} gated arrivals)",
            row.position, row.depth_ratio, m.direct_amplitude, m.flaw_amplitude, m.flaw_arrivals
        );
    }
    Ok(())
}

fn cmd_dispersion(config: &SimConfig, out: &OutDir, threads: usize) -> Result<()> {
    let resolved_config = scenario::dispersion_config(config);
    let p = prepare(&resolved_config)?;
    let r = scenario::dispersion(config)?;
    out.write("waveforms.csv", &field_csv(&r.run.waveforms))?;
    out.write("cwt.csv", &cwt_csv(&r.cwt))?;
    let mut t = CsvTable::new(["frequency_hz", "peak_time_s", "peak_amplitude", "half_amplitude_duration_s"]);
    for pk in &r.packets {
        t.push(vec![
            fmt_f64(pk.frequency),
            fmt_f64(pk.peak_time),
            fmt_f64(pk.peak_amplitude),
            fmt_f64(pk.half_amplitude_duration),
        ]);
    }
    out.write("dispersion_packets.csv", &t.render())?;
    let idx = r.run.waveforms.labels.iter().position(|l| *l == r.probe).unwrap_or(0);
    out.write(
        "waveforms.svg",
        &line_plot(&format!("{} response", r.probe), "t (ms)", "displacement", &[Series::from_field(&r.run.waveforms, idx, r.probe.clone())]),
    )?;
    let ridges: Vec<f64> = r.cwt.ridges(0.05).into_iter().map(|i| r.cwt.frequencies[i]).collect();
    let profile = Series::new("max |W|", r.cwt.frequencies.iter().map(|f| f * 1e-3).collect(), r.cwt.frequency_profile());
    out.write("cwt_profile.svg", &line_plot("CWT magnitude by frequency", "f (kHz)", "|W|", &[profile]))?;
    out.write_json(
        "run.json",
        &metadata(
            "dispersion",
            &resolved_config,
            threads,
            json!({ "resolved": resolved(&p), "probe": r.probe, "ridges_hz": ridges, "packets": r.packets, "summary": r.run.summary }),
        ),
    )?;
    println!("CWT ridges at {:?} kHz", ridges.iter().map(|f| f * 1e-3).collect::<Vec<_>>());
    Ok(())
}

fn cmd_compare(config: &SimConfig, out: &OutDir, threads: usize) -> Result<()> {
    let started = Instant::now();
    let r = scenario::compare(config)?;
    let total = started.elapsed().as_secs_f64();
    let a = &r.primary.waveforms;
    let b = &r.reference.waveforms;
    let tag = |s: SolverKind| match s {
        SolverKind::Lwfem => "lwfem",
        SolverKind::Newmark => "newmark",
    };
    let (ta, tb) = (tag(r.primary.summary.solver), tag(r.reference.summary.solver));
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for (i, l) in a.labels.iter().enumerate() {
        labels.push(format!("{ta}:{l}"));
        values.push(a.values[i].clone());
        labels.push(format!("{tb}-reference:{l}"));
        values.push(resample(&b.values[i], b.dt, a.dt, a.len()));
    }
    let aligned = crate::laplace::TimeSeriesField {
        dt: a.dt,
        positions: vec![0.0; labels.len()],
        labels,
        values,
    };
    out.write("compare.csv", &field_csv(&aligned))?;
    let series: Vec<Series> = (0..aligned.channels())
        .map(|i| Series::from_field(&aligned, i, aligned.labels[i].clone()))
        .collect();
    out.write("compare.svg", &line_plot("Solver comparison", "t (ms)", "displacement", &series))?;
    let p_ref = prepare(&scenario::baseline_config(config))?;
    let p = prepare(config)?;
    out.write_json(
        "run.json",
        &metadata(
            "compare",
            config,
            threads,
            json!({
                "resolved": resolved(&p),
                "reference": { "config": scenario::baseline_config(config).to_value(), "resolved": resolved(&p_ref) },
                "deviations": r.deviations.iter().map(|(l, d)| json!({"probe": l, "relative_l2": d})).collect::<Vec<_>>(),
                "runtime_s": { "primary": r.primary.summary.elapsed_seconds, "reference": r.reference.summary.elapsed_seconds, "total": total },
            }),
        ),
    )?;
    log::info!(
        "solve time: {ta} {:.3} s, {tb} reference {:.3} s",
        r.primary.summary.elapsed_seconds,
        r.reference.summary.elapsed_seconds
    );
    for (l, d) in &r.deviations {
        println!("{l}: relative L2 deviation {d:.4e}");
    }
    Ok(())
}
