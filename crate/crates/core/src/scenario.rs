//! Simulation configuration and the scenario runners behind the CLI.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::{
    self, crack_metrics, cwt_spectrum, envelope, group_velocity, pick_arrivals, reflection_paths, Arrival,
    CrackGate, CrackMetrics, CwtMap, Snapshot,
};
use crate::element::{CrackSpec, MaterialProps, SectionProps, DEFAULT_SHEAR_COEFFICIENT};
use crate::error::{Result, WaveError};
use crate::excitation::{dual_toneburst, hanning_toneburst, min_wavelength, SampledSignal};
use crate::laplace::{run_lwfem, LaplaceGrid, Observe, TimeSeriesField, DEFAULT_WINDOW_DECAY};
use crate::mesh::{
    assemble, build_load_vector, build_mesh, BoundaryCondition, Component, ElementKind, GlobalSystem, LoadSpec,
    Mesh1D, MeshSpec, Probe,
};
use crate::newmark::{newmark_solve, relative_l2_deviation, NewmarkParams};

/// Highest frequency of interest relative to the highest carrier.
pub const F_MAX_FACTOR: f64 = 1.5;
/// Element count of the dispersion scenario.
pub const DISPERSION_ELEMENTS: usize = 36;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    #[default]
    Lwfem,
    Newmark,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Geometry {
    pub length: f64,
    pub width: f64,
    pub height: f64,
    pub shear_coefficient: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            length: 1.5,
            width: 0.02,
            height: 0.02,
            shear_coefficient: DEFAULT_SHEAR_COEFFICIENT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaterialChoice {
    Preset(String),
    Explicit(MaterialProps),
}

impl Default for MaterialChoice {
    fn default() -> Self {
        MaterialChoice::Preset("steel".into())
    }
}

impl MaterialChoice {
    pub fn resolve(&self) -> Result<MaterialProps> {
        match self {
            MaterialChoice::Preset(name) => MaterialProps::preset(name)
                .ok_or_else(|| WaveError::Config(format!("unknown material preset '{name}' (known: steel, aluminum)"))),
            MaterialChoice::Explicit(m) => {
                m.validate()?;
                Ok(*m)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    pub element: ElementKind,
    pub elements: Option<usize>,
    pub epw: Option<f64>,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            element: ElementKind::BswiRod,
            elements: None,
            epw: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub spp: Option<u32>,
    pub dt: Option<f64>,
    /// Simulated time (s).
    pub duration: f64,
    /// Highest frequency of interest (Hz); defaults to 1.5× the highest carrier.
    pub f_max: Option<f64>,
    pub window_decay: f64,
    pub sigma: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            spp: None,
            dt: None,
            duration: 1.2e-3,
            f_max: None,
            window_decay: DEFAULT_WINDOW_DECAY,
            sigma: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExcitationKind {
    #[default]
    Toneburst,
    Dual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum End {
    #[default]
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExcitationConfig {
    pub kind: ExcitationKind,
    pub fc: f64,
    pub fc2: f64,
    pub cycles: u32,
    pub amplitude: f64,
    pub at: End,
    pub component: Option<Component>,
}

impl Default for ExcitationConfig {
    fn default() -> Self {
        Self {
            kind: ExcitationKind::Toneburst,
            fc: 100e3,
            fc2: 200e3,
            cycles: 5,
            amplitude: 1.0,
            at: End::Left,
            component: None,
        }
    }
}

impl ExcitationConfig {
    pub fn highest_frequency(&self) -> f64 {
        match self.kind {
            ExcitationKind::Toneburst => self.fc,
            ExcitationKind::Dual => self.fc.max(self.fc2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrackConfig {
    /// Distance from the left end (m).
    pub position: f64,
    /// Crack depth over section height.
    pub depth_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub x: f64,
    #[serde(default)]
    pub component: Option<Component>,
    #[serde(default)]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Observation points; defaults to the mid-point and the right end.
    pub probes: Vec<ProbeConfig>,
    pub snapshot_times: Vec<f64>,
    /// Write the receiver's CWT map.
    pub spectrum: bool,
    pub cwt_frequencies: Vec<f64>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            probes: Vec::new(),
            snapshot_times: Vec::new(),
            spectrum: false,
            cwt_frequencies: (1..=30).map(|i| i as f64 * 10e3).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub threshold: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            threshold: analysis::DEFAULT_THRESHOLD,
        }
    }
}

/// Reference run settings for `compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineConfig {
    pub element: Option<ElementKind>,
    pub epw: f64,
    pub spp: u32,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            element: None,
            epw: 20.0,
            spp: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub geometry: Geometry,
    pub material: MaterialChoice,
    pub mesh: MeshConfig,
    pub grid: GridConfig,
    pub excitation: ExcitationConfig,
    pub cracks: Vec<CrackConfig>,
    pub bc: [BoundaryCondition; 2],
    pub solver: SolverKind,
    pub outputs: OutputConfig,
    pub analysis: AnalysisConfig,
    pub baseline: BaselineConfig,
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| WaveError::Config(format!("invalid JSON: {e}")))?;
        Self::from_value(v)
    }

    pub fn from_value(v: Value) -> Result<Self> {
        let c: SimConfig = serde_json::from_value(v).map_err(|e| WaveError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        for (name, v) in [("length", g.length), ("width", g.width), ("height", g.height)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(WaveError::Config(format!("geometry.{name} must be positive, got {v}")));
            }
        }
        self.material.resolve()?;
        self.section()?;
        match (self.mesh.elements, self.mesh.epw) {
            (Some(_), Some(_)) => {
                return Err(WaveError::Config("mesh.elements and mesh.epw are mutually exclusive".into()))
            }
            (Some(0), None) => return Err(WaveError::Config("mesh.elements must be at least 1".into())),
            (None, Some(e)) if !(e > 0.0) || !e.is_finite() => {
                return Err(WaveError::Config(format!("mesh.epw must be positive, got {e}")))
            }
            _ => {}
        }
        match (self.grid.spp, self.grid.dt) {
            (Some(_), Some(_)) => return Err(WaveError::Config("grid.spp and grid.dt are mutually exclusive".into())),
            (Some(0), None) => return Err(WaveError::Config("grid.spp must be at least 1".into())),
            (None, Some(d)) if !(d > 0.0) || !d.is_finite() => {
                return Err(WaveError::Config(format!("grid.dt must be positive, got {d}")))
            }
            _ => {}
        }
        if !(self.grid.duration > 0.0) || !self.grid.duration.is_finite() {
            return Err(WaveError::Config(format!("grid.duration must be positive, got {}", self.grid.duration)));
        }
        if !(self.grid.window_decay > 0.0 && self.grid.window_decay < 1.0) {
            return Err(WaveError::Config("grid.window_decay must lie in (0, 1)".into()));
        }
        if let Some(f) = self.grid.f_max {
            if !(f > 0.0) || !f.is_finite() {
                return Err(WaveError::Config(format!("grid.f_max must be positive, got {f}")));
            }
        }
        if let Some(s) = self.grid.sigma {
            if !(s > 0.0) || !s.is_finite() {
                return Err(WaveError::Config(format!("grid.sigma must be positive, got {s}")));
            }
        }
        let e = &self.excitation;
        if !(e.fc > 0.0) || !(e.fc2 > 0.0) || e.cycles == 0 || !e.amplitude.is_finite() {
            return Err(WaveError::Config("excitation needs positive frequencies and at least one cycle".into()));
        }
        for c in &self.cracks {
            if !(c.depth_ratio >= 0.0 && c.depth_ratio < 1.0) {
                return Err(WaveError::Config(format!("crack depth ratio must lie in [0, 1), got {}", c.depth_ratio)));
            }
            if !(c.position > 0.0 && c.position < g.length) {
                return Err(WaveError::Config(format!(
                    "crack position {} must lie strictly inside the beam (0, {})",
                    c.position, g.length
                )));
            }
        }
        if !self.cracks.is_empty() && !self.mesh.element.is_beam() {
            return Err(WaveError::Config("cracks require a beam element".into()));
        }
        if !(self.analysis.threshold > 0.0 && self.analysis.threshold < 1.0) {
            return Err(WaveError::Config("analysis.threshold must lie in (0, 1)".into()));
        }
        if self.outputs.cwt_frequencies.is_empty() {
            return Err(WaveError::Config("outputs.cwt_frequencies must not be empty".into()));
        }
        Ok(())
    }

    pub fn section(&self) -> Result<SectionProps> {
        let g = &self.geometry;
        SectionProps::new(g.width, g.height, g.shear_coefficient)
    }

    pub fn f_max(&self) -> f64 {
        self.grid.f_max.unwrap_or(F_MAX_FACTOR * self.excitation.highest_frequency())
    }

    /// Default element density: 0.45 per wavelength for wavelet elements,
    /// 20 for conventional ones.
    pub fn effective_epw(&self) -> Option<f64> {
        match (self.mesh.elements, self.mesh.epw) {
            (Some(_), _) => None,
            (None, Some(e)) => Some(e),
            (None, None) => Some(if self.mesh.element.is_wavelet() { 0.45 } else { 20.0 }),
        }
    }

    pub fn element_count(&self) -> Result<usize> {
        if let Some(n) = self.mesh.elements {
            return Ok(n);
        }
        let mat = self.material.resolve()?;
        let epw = self.effective_epw().expect("epw set when elements is not");
        Ok(elements_for_epw(self.geometry.length, epw, mat.bar_velocity(), self.f_max()))
    }

    /// Default temporal density: 2 steps per period for the Laplace
    /// solver on rods, 20 for beams and for Newmark.
    pub fn time_step(&self) -> f64 {
        match (self.grid.dt, self.grid.spp) {
            (Some(dt), _) => dt,
            (None, Some(spp)) => 1.0 / (self.f_max() * spp as f64),
            (None, None) => {
                let spp = match self.solver {
                    SolverKind::Lwfem if !self.mesh.element.is_beam() => 2.0,
                    _ => 20.0,
                };
                1.0 / (self.f_max() * spp)
            }
        }
    }
}

/// `ceil(L · EPW / λ_min)` with `λ_min = c / f_max`.
pub fn elements_for_epw(length: f64, epw: f64, wave_speed: f64, f_max: f64) -> usize {
    let lambda = min_wavelength(wave_speed, f_max);
    ((length * epw / lambda - 1e-9).ceil() as usize).max(1)
}

/// Sets `path` (dot separated) in a JSON document, creating objects.
pub fn set_path(doc: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut cur = doc;
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(WaveError::Config(format!("invalid key path '{path}'")));
    }
    for (i, p) in parts.iter().enumerate() {
        if !cur.is_object() {
            return Err(WaveError::Config(format!("'{}' is not an object", parts[..i].join("."))));
        }
        let obj = cur.as_object_mut().expect("object");
        if i + 1 == parts.len() {
            obj.insert((*p).to_string(), value);
            return Ok(());
        }
        cur = obj.entry((*p).to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!()
}

/// Parses `key.path=value`; the value is read as JSON, falling back to a string.
pub fn parse_assignment(s: &str) -> Result<(String, Value)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| WaveError::Config(format!("override '{s}' is not of the form key.path=value")))?;
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.trim().to_string(), value))
}

/// Everything a single run needs, resolved from a config.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: SimConfig,
    pub material: MaterialProps,
    pub section: SectionProps,
    pub mesh: Mesh1D,
    pub system: GlobalSystem,
    pub component: Component,
    pub load: Vec<f64>,
    pub probes: Vec<Probe>,
    pub receiver: usize,
    pub signal: SampledSignal,
    pub dt: f64,
    /// Output samples covering the requested duration.
    pub samples: usize,
    pub grid: Option<LaplaceGrid>,
}

pub fn prepare(config: &SimConfig) -> Result<Prepared> {
    config.validate()?;
    let material = config.material.resolve()?;
    let section = config.section()?;
    let kind = config.mesh.element;
    let length = config.geometry.length;
    let cracks = config
        .cracks
        .iter()
        .map(|c| CrackSpec::new(c.position, c.depth_ratio * section.height, &material, &section))
        .collect::<Result<Vec<_>>>()?;
    let spec = MeshSpec {
        length,
        n_elements: config.element_count()?,
        kind,
        material,
        section,
        cracks,
        bc: config.bc,
    };
    let mesh = build_mesh(&spec)?;
    let system = assemble(&mesh)?;
    let component = kind.components()[0];

    let exc = &config.excitation;
    let load_component = exc.component.unwrap_or(component);
    let node = match exc.at {
        End::Left => 0,
        End::Right => mesh.last_node(),
    };
    let load = build_load_vector(&system, &LoadSpec { node, component: load_component }, exc.amplitude)?;

    let probe_cfg = if config.outputs.probes.is_empty() {
        vec![
            ProbeConfig {
                x: 0.5 * length,
                component: None,
                label: Some("mid".into()),
            },
            ProbeConfig {
                x: length,
                component: None,
                label: Some("receiver".into()),
            },
        ]
    } else {
        config.outputs.probes.clone()
    };
    let probes = probe_cfg
        .iter()
        .map(|p| {
            let c = p.component.unwrap_or(component);
            let label = p.label.clone().unwrap_or_else(|| format!("x={}:{}", p.x, c.tag()));
            mesh.probe(&system, p.x, c, label)
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| WaveError::Config(e.to_string()))?;
    let receiver = probes.iter().position(|p| p.label == "receiver").unwrap_or(probes.len() - 1);

    let dt = config.time_step();
    let signal = match exc.kind {
        ExcitationKind::Toneburst => hanning_toneburst(exc.fc, exc.cycles, dt)?,
        ExcitationKind::Dual => dual_toneburst(exc.fc, exc.fc2, dt)?,
    };
    let samples = (config.grid.duration / dt + 1e-9).floor() as usize + 1;
    let grid = match config.solver {
        SolverKind::Lwfem => {
            let mut g = LaplaceGrid::for_duration(dt, config.grid.duration, config.grid.window_decay)?;
            if let Some(s) = config.grid.sigma {
                g.sigma = s;
            }
            Some(g)
        }
        SolverKind::Newmark => None,
    };
    Ok(Prepared {
        config: config.clone(),
        material,
        section,
        mesh,
        system,
        component,
        load,
        probes,
        receiver,
        signal,
        dt,
        samples,
        grid,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub solver: SolverKind,
    pub elements: usize,
    pub dofs: usize,
    pub dt: f64,
    pub samples: usize,
    pub laplace_n: Option<usize>,
    pub sigma: Option<f64>,
    pub arrivals: Vec<Arrival>,
    pub group_velocity: Option<f64>,
    pub crack: Option<CrackMetrics>,
    pub no_crack: bool,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub waveforms: TimeSeriesField,
    pub snapshots: Vec<Snapshot>,
    pub spectrum: Option<CwtMap>,
    pub summary: RunSummary,
}

fn solve(p: &Prepared, observe: Observe<'_>) -> Result<TimeSeriesField> {
    let field = match p.grid {
        Some(grid) => run_lwfem(&p.system, &p.load, &p.signal.samples, &grid, observe)?,
        None => newmark_solve(
            &p.system,
            &p.load,
            &p.signal.samples,
            &NewmarkParams::average_acceleration(p.dt, p.samples - 1),
            observe,
        )?,
    };
    Ok(field.truncated(p.samples))
}

/// Mesh-wide history of the primary component at every node.
fn nodal_field(p: &Prepared, all: &TimeSeriesField) -> TimeSeriesField {
    let mut labels = Vec::new();
    let mut positions = Vec::new();
    let mut values = Vec::new();
    for (node, (x, dof)) in p.mesh.node_dofs(&p.system, p.component).into_iter().enumerate() {
        labels.push(format!("n{node}:{}", p.component.tag()));
        positions.push(x);
        values.push(match dof {
            Some(d) => all.values[d].clone(),
            None => vec![0.0; all.len()],
        });
    }
    TimeSeriesField {
        dt: all.dt,
        labels,
        positions,
        values,
    }
}

fn crack_gate(p: &Prepared, position: f64) -> CrackGate {
    CrackGate {
        direct_path: p.probes[p.receiver].x,
        burst_center: 0.5 * p.signal.duration,
        burst_duration: p.signal.duration,
        flaw_paths: reflection_paths(p.config.geometry.length, position),
        threshold: p.config.analysis.threshold,
    }
}

/// Runs one simulation and its standard post-processing.
pub fn simulate(p: &Prepared) -> Result<RunResult> {
    simulate_with_baseline(p, None)
}

/// As [`simulate`], with the receiver history of an uncracked run for the
/// crack metrics.
pub fn simulate_with_baseline(p: &Prepared, baseline: Option<&[f64]>) -> Result<RunResult> {
    let start = Instant::now();
    let want_snapshots = !p.config.outputs.snapshot_times.is_empty();
    let (waveforms, snapshots) = if want_snapshots {
        let all = solve(p, Observe::AllDofs)?;
        let probes: Vec<Vec<f64>> = p
            .probes
            .iter()
            .map(|pr| (0..all.len()).map(|i| pr.weights.iter().map(|&(d, w)| all.values[d][i] * w).sum()).collect())
            .collect();
        let wf = TimeSeriesField {
            dt: all.dt,
            labels: p.probes.iter().map(|pr| pr.label.clone()).collect(),
            positions: p.probes.iter().map(|pr| pr.x).collect(),
            values: probes,
        };
        let nodal = nodal_field(p, &all);
        let snaps = p
            .config
            .outputs
            .snapshot_times
            .iter()
            .map(|&t| analysis::snapshot(&nodal, t))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| WaveError::Config(e.to_string()))?;
        (wf, snaps)
    } else {
        (solve(p, Observe::Probes(&p.probes))?, Vec::new())
    };
    let elapsed = start.elapsed().as_secs_f64();

    let receiver = &waveforms.values[p.receiver];
    let threshold = p.config.analysis.threshold;
    let length = p.config.geometry.length;
    let env = envelope(receiver, waveforms.dt)?;
    let arrivals = pick_arrivals(&env, threshold, p.signal.duration)?;
    let receiver_x = p.probes[p.receiver].x;
    // the end-reflection pair only isolates single packets on rods; beam
    // packets split between the two flexural branches
    let is_rod = !p.mesh.kind.is_beam();
    let group_velocity = if is_rod && arrivals.len() >= 2 && (receiver_x - length).abs() < 1e-9 * length {
        group_velocity(&arrivals, &[length, 3.0 * length]).ok()
    } else {
        None
    };
    let crack = match p.config.cracks.first() {
        Some(c) if c.depth_ratio > 0.0 => Some(crack_metrics(receiver, waveforms.dt, &crack_gate(p, c.position), baseline)?),
        _ => None,
    };
    let spectrum = if p.config.outputs.spectrum {
        Some(cwt_spectrum(receiver, waveforms.dt, &p.config.outputs.cwt_frequencies).map_err(|e| WaveError::Config(e.to_string()))?)
    } else {
        None
    };
    Ok(RunResult {
        summary: RunSummary {
            solver: p.config.solver,
            elements: p.mesh.element_count(),
            dofs: p.system.n_dof(),
            dt: p.dt,
            samples: p.samples,
            laplace_n: p.grid.map(|g| g.n),
            sigma: p.grid.map(|g| g.sigma),
            arrivals,
            group_velocity,
            no_crack: crack.is_none(),
            crack,
            elapsed_seconds: elapsed,
        },
        waveforms,
        snapshots,
        spectrum,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvergenceAxis {
    Epw,
    Spp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub value: f64,
    pub elements: usize,
    pub dt: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceResult {
    pub rows: Vec<ConvergenceRow>,
    pub probe: String,
    pub runs: Vec<TimeSeriesField>,
}

fn probe_index(field: &TimeSeriesField, preferred: &str) -> usize {
    field.labels.iter().position(|l| l == preferred).unwrap_or(0)
}

/// Runs `config` at each value of `axis`; deviations are measured against
/// the largest value at the mid-point probe.
pub fn convergence(config: &SimConfig, axis: ConvergenceAxis, values: &[f64]) -> Result<ConvergenceResult> {
    if values.len() < 2 {
        return Err(WaveError::Config("a convergence sweep needs at least two values".into()));
    }
    let mut runs = Vec::with_capacity(values.len());
    let mut meta = Vec::with_capacity(values.len());
    for &v in values {
        let mut c = config.clone();
        match axis {
            ConvergenceAxis::Epw => {
                c.mesh.epw = Some(v);
                c.mesh.elements = None;
            }
            ConvergenceAxis::Spp => {
                if !(v >= 1.0) || v.fract() != 0.0 {
                    return Err(WaveError::Config(format!("SPP values must be positive integers, got {v}")));
                }
                c.grid.spp = Some(v as u32);
                c.grid.dt = None;
            }
        }
        let p = prepare(&c)?;
        let field = solve(&p, Observe::Probes(&p.probes))?;
        meta.push((p.mesh.element_count(), p.dt));
        runs.push(field);
    }
    let reference = values
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > values[best] { i } else { best });
    let idx = probe_index(&runs[reference], "mid");
    let probe = runs[reference].labels[idx].clone();
    let r = &runs[reference];
    let rows = values
        .iter()
        .zip(&runs)
        .zip(&meta)
        .map(|((&v, run), &(elements, dt))| {
            Ok(ConvergenceRow {
                value: v,
                elements,
                dt,
                deviation: relative_l2_deviation(&run.values[idx], run.dt, &r.values[idx], r.dt)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceResult { rows, probe, runs })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Depth ratios at a fixed position.
    Depth(Vec<f64>),
    /// Positions (m) at a fixed depth ratio.
    Location(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrackSweepRow {
    pub position: f64,
    pub depth_ratio: f64,
    pub metrics: CrackMetrics,
}

#[derive(Debug, Clone)]
pub struct CrackSweepResult {
    pub rows: Vec<CrackSweepRow>,
    pub baseline: TimeSeriesField,
    pub runs: Vec<TimeSeriesField>,
}

/// One run per crack configuration plus an uncracked baseline.
pub fn crack_sweep(config: &SimConfig, axis: &SweepAxis) -> Result<CrackSweepResult> {
    let length = config.geometry.length;
    let base_crack = config.cracks.first().cloned().unwrap_or(CrackConfig {
        position: 0.5 * length,
        depth_ratio: 0.2,
    });
    let cases: Vec<CrackConfig> = match axis {
        SweepAxis::Depth(d) => d
            .iter()
            .map(|&r| CrackConfig {
                position: base_crack.position,
                depth_ratio: r,
            })
            .collect(),
        SweepAxis::Location(x) => x
            .iter()
            .map(|&p| CrackConfig {
                position: p,
                depth_ratio: base_crack.depth_ratio,
            })
            .collect(),
    };
    if cases.is_empty() {
        return Err(WaveError::Config("crack sweep needs at least one value".into()));
    }
    let mut plain = config.clone();
    plain.cracks.clear();
    plain.outputs.snapshot_times.clear();
    plain.outputs.spectrum = false;
    let base_run = simulate(&prepare(&plain)?)?;
    let base = base_run.waveforms;
    let recv = probe_index(&base, "receiver");

    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for case in cases {
        let mut c = plain.clone();
        c.cracks = vec![case.clone()];
        let p = prepare(&c)?;
        let r = simulate_with_baseline(&p, Some(&base.values[recv]))?;
        let metrics = match r.summary.crack {
            Some(m) => m,
            // zero depth: same topology as the baseline, nothing to detect
            None => crack_metrics(
                &r.waveforms.values[recv],
                r.waveforms.dt,
                &crack_gate(&p, case.position),
                Some(&base.values[recv]),
            )?,
        };
        rows.push(CrackSweepRow {
            position: case.position,
            depth_ratio: case.depth_ratio,
            metrics,
        });
        runs.push(r.waveforms);
    }
    Ok(CrackSweepResult { rows, baseline: base, runs })
}

/// Beam with the dual-frequency burst, observed at the mid-point.
pub fn dispersion_config(config: &SimConfig) -> SimConfig {
    let mut c = config.clone();
    c.excitation.kind = ExcitationKind::Dual;
    if !c.mesh.element.is_beam() {
        c.mesh.element = ElementKind::BswiBeam;
    }
    if c.mesh.epw.is_none() && c.mesh.elements.is_none() {
        c.mesh.elements = Some(DISPERSION_ELEMENTS);
    }
    c.cracks.clear();
    if c.outputs.probes.is_empty() {
        c.outputs.probes = vec![ProbeConfig {
            x: 0.5 * c.geometry.length,
            component: None,
            label: Some("mid".into()),
        }];
    }
    c
}

/// One carrier's packet at the dispersion probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionPacket {
    pub frequency: f64,
    pub peak_time: f64,
    pub peak_amplitude: f64,
    /// Width of the band-limited envelope at half its maximum (s).
    pub half_amplitude_duration: f64,
}

#[derive(Debug, Clone)]
pub struct DispersionResult {
    pub run: RunResult,
    pub cwt: CwtMap,
    pub probe: String,
    pub packets: Vec<DispersionPacket>,
}

pub fn dispersion(config: &SimConfig) -> Result<DispersionResult> {
    let c = dispersion_config(config);
    let p = prepare(&c)?;
    let run = simulate(&p)?;
    let idx = probe_index(&run.waveforms, "mid");
    let signal = &run.waveforms.values[idx];
    let dt = run.waveforms.dt;
    let cwt = cwt_spectrum(signal, dt, &c.outputs.cwt_frequencies).map_err(|e| WaveError::Config(e.to_string()))?;
    let carriers = &p.signal.center_frequencies;
    // each carrier gets the band up to halfway to its neighbour
    let half_width = if carriers.len() > 1 {
        0.5 * (carriers[1] - carriers[0]).abs()
    } else {
        0.5 * carriers[0]
    };
    let packets = carriers
        .iter()
        .map(|&fc| {
            let env = analysis::band_envelope(signal, dt, fc - half_width, fc + half_width)?;
            let i = env.argmax();
            Ok(DispersionPacket {
                frequency: fc,
                peak_time: i as f64 * dt,
                peak_amplitude: env.magnitude[i],
                half_amplitude_duration: analysis::half_amplitude_duration(&env.magnitude, dt),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DispersionResult {
        probe: run.waveforms.labels[idx].clone(),
        run,
        cwt,
        packets,
    })
}

/// Counterpart config for the Newmark reference run.
pub fn baseline_config(config: &SimConfig) -> SimConfig {
    let mut c = config.clone();
    c.solver = SolverKind::Newmark;
    c.mesh.element = config.baseline.element.unwrap_or(match config.mesh.element {
        ElementKind::BswiRod | ElementKind::FemRod => ElementKind::FemRod,
        ElementKind::BswiBeam | ElementKind::FemBeam => ElementKind::FemBeam,
    });
    c.mesh.elements = None;
    c.mesh.epw = Some(config.baseline.epw);
    c.grid.spp = Some(config.baseline.spp);
    c.grid.dt = None;
    c.outputs.snapshot_times.clear();
    c
}

#[derive(Debug, Clone)]
pub struct CompareResult {
    pub primary: RunResult,
    pub reference: RunResult,
    /// Relative L2 deviation per probe, primary against reference.
    pub deviations: Vec<(String, f64)>,
}

pub fn compare(config: &SimConfig) -> Result<CompareResult> {
    let primary = simulate(&prepare(config)?)?;
    let reference = simulate(&prepare(&baseline_config(config))?)?;
    let deviations = primary
        .waveforms
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let a = &primary.waveforms;
            let b = &reference.waveforms;
            Ok((l.clone(), relative_l2_deviation(&a.values[i], a.dt, &b.values[i], b.dt)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CompareResult {
        primary,
        reference,
        deviations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = SimConfig::default();
        let back = SimConfig::from_value(c.to_value()).unwrap();
        assert_eq!(c, back);
        assert_eq!(c.element_count().unwrap(), 20);
        assert!((c.time_step() - 1.0 / 300e3).abs() < 1e-15);
    }

    #[test]
    fn material_forms() {
        let c = SimConfig::from_json(r#"{"material": "aluminum"}"#).unwrap();
        assert_eq!(c.material.resolve().unwrap(), MaterialProps::aluminum());
        let c = SimConfig::from_json(
            r#"{"material": {"youngs_modulus": 1e9, "poisson_ratio": 0.25, "density": 1000}}"#,
        )
        .unwrap();
        assert_eq!(c.material.resolve().unwrap().density, 1000.0);
        assert!(SimConfig::from_json(r#"{"material": "unobtainium"}"#).is_err());
    }

    #[test]
    fn invalid_configs() {
        for bad in [
            r#"{"mesh": {"elements": 4, "epw": 0.5}}"#,
            r#"{"geometry": {"length": -1}}"#,
            r#"{"grid": {"spp": 0}}"#,
            r#"{"cracks": [{"position": 0.5, "depth_ratio": 0.2}]}"#,
            r#"{"mesh": {"element": "bswi-beam"}, "cracks": [{"position": 2.0, "depth_ratio": 0.2}]}"#,
            r#"{"unknown": 1}"#,
            r#"not json"#,
        ] {
            assert!(matches!(SimConfig::from_json(bad), Err(WaveError::Config(_))), "{bad}");
        }
    }

    #[test]
    fn epw_rounding() {
        let c0 = (200e9f64 / 7800.0).sqrt();
        assert_eq!(elements_for_epw(1.5, 0.45, c0, 150e3), 20);
        assert_eq!(elements_for_epw(1.5, 0.15, c0, 150e3), 7);
        assert_eq!(elements_for_epw(1.5, 0.6, c0, 150e3), 27);
        assert_eq!(elements_for_epw(1.5, 20.0, c0, 150e3), 889);
    }

    #[test]
    fn overrides() {
        let mut v = SimConfig::default().to_value();
        let (k, val) = parse_assignment("grid.duration=0.002").unwrap();
        set_path(&mut v, &k, val).unwrap();
        let (k, val) = parse_assignment("material=aluminum").unwrap();
        set_path(&mut v, &k, val).unwrap();
        let c = SimConfig::from_value(v).unwrap();
        assert_eq!(c.grid.duration, 0.002);
        assert_eq!(c.material, MaterialChoice::Preset("aluminum".into()));
        assert!(parse_assignment("novalue").is_err());
    }

    #[test]
    fn prepare_defaults() {
        let p = prepare(&SimConfig::default()).unwrap();
        assert_eq!(p.probes.len(), 2);
        assert_eq!(p.probes[p.receiver].label, "receiver");
        assert_eq!(p.signal.samples[0], 0.0);
        let g = p.grid.unwrap();
        assert!(g.window() >= 2.0 * p.config.grid.duration);
    }

    #[test]
    fn baseline_uses_conventional_elements() {
        let mut c = SimConfig::default();
        c.mesh.element = ElementKind::BswiBeam;
        let b = baseline_config(&c);
        assert_eq!(b.mesh.element, ElementKind::FemBeam);
        assert_eq!(b.solver, SolverKind::Newmark);
        assert_eq!(b.grid.spp, Some(20));
    }
}
