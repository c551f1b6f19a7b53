//! Run configuration: TOML files with `section.key = value` command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dg::{SipParams, SipPenaltyMode};
use crate::error::{Error, Result};
use crate::init::{BubbleParams, GravityWaveParams, RainThermalParams, TemperatureProfileParams};
use crate::microphysics::MicrophysicsParams;
use crate::thermo::ThermoConstants;
use crate::timestep::SpongeLayer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    /// Inertia-gravity waves in a saturated, cloudy atmosphere.
    MoistGravityWave,
    /// The same waves over a saturated base state without cloud water.
    GravityWaveNoCloud,
    /// Warm bubble in a saturated neutral atmosphere.
    BryanFritsch,
    /// Saturated atmosphere at rest over flat ground, with a sponge layer.
    HydrostaticRest,
    /// Moist thermal in unsaturated air producing rain.
    RainThermal,
}

impl CaseKind {
    pub const ALL: [CaseKind; 5] = [
        CaseKind::MoistGravityWave,
        CaseKind::GravityWaveNoCloud,
        CaseKind::BryanFritsch,
        CaseKind::HydrostaticRest,
        CaseKind::RainThermal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaseKind::MoistGravityWave => "moist_gravity_wave",
            CaseKind::GravityWaveNoCloud => "gravity_wave_no_cloud",
            CaseKind::BryanFritsch => "bryan_fritsch",
            CaseKind::HydrostaticRest => "hydrostatic_rest",
            CaseKind::RainThermal => "rain_thermal",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            CaseKind::MoistGravityWave => "inertia-gravity waves in a saturated atmosphere with clouds (300 km x 10 km)",
            CaseKind::GravityWaveNoCloud => "inertia-gravity waves, saturated vapour and no initial clouds (300 km x 10 km)",
            CaseKind::BryanFritsch => "moist warm bubble, theta_e = 320 K, q_w = 0.02 (20 km x 10 km)",
            CaseKind::HydrostaticRest => "saturated atmosphere at rest, flat ground, sponge above 15 km (35 km x 40 km)",
            CaseKind::RainThermal => "moist thermal in unsaturated air with warm rain (3.6 km x 2.4 km)",
        }
    }

    /// Case defaults: `(x_extent, z_extent, t_end, h, k, dt, rain)`.
    pub fn defaults(self) -> CaseDefaults {
        let d = |x_extent, z_extent, t_end, h, k, dt, rain| CaseDefaults { x_extent, z_extent, t_end, h, k, dt, rain };
        match self {
            CaseKind::MoistGravityWave | CaseKind::GravityWaveNoCloud => d(300e3, 10e3, 3600.0, 1000.0, 1, 1.0, false),
            CaseKind::BryanFritsch => d(20e3, 10e3, 1000.0, 100.0, 1, 0.08, false),
            CaseKind::HydrostaticRest => d(35e3, 40e3, 3600.0, 1000.0, 2, 0.5, true),
            CaseKind::RainThermal => d(3600.0, 2400.0, 600.0, 50.0, 1, 0.04, true),
        }
    }
}

impl fmt::Display for CaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseKind::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::config(format!("unknown case '{s}' (see list-cases)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseDefaults {
    pub x_extent: f64,
    pub z_extent: f64,
    pub t_end: f64,
    pub h: f64,
    pub k: usize,
    pub dt: f64,
    pub rain: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    /// Element size; used when `nx`/`nz` are not given.
    pub h: Option<f64>,
    pub nx: Option<usize>,
    pub nz: Option<usize>,
    pub x_extent: Option<f64>,
    pub z_extent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscretisationConfig {
    pub k: Option<usize>,
    /// Artificial-viscosity scale; 0 disables the interior-penalty term.
    pub gamma: f64,
    pub sigma: f64,
    pub penalty: SipPenaltyMode,
}

impl Default for DiscretisationConfig {
    fn default() -> Self {
        Self { k: None, gamma: 0.0, sigma: 4.0, penalty: SipPenaltyMode::Standard }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    /// Fixed step; rounded down so that an integer number of steps reaches `t_end`.
    pub dt: Option<f64>,
    /// Used instead of `dt` when given: `dt` from the initial wave speeds.
    pub cfl: Option<f64>,
    pub t_end: Option<f64>,
    /// Steps between progress lines on standard output (0 = silent).
    pub report_interval: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpongeConfig {
    /// Bottom of the layer (m); the top is the domain top.
    pub z_d: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VtkFormat {
    #[default]
    Ascii,
    Binary,
}

impl FromStr for VtkFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ascii" => Ok(VtkFormat::Ascii),
            "binary" => Ok(VtkFormat::Binary),
            other => Err(Error::config(format!("unknown VTK format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Simulated seconds between VTK snapshots; none writes only the first and last.
    pub snapshot_interval: Option<f64>,
    /// Steps between diagnostics rows.
    pub diagnostic_interval: usize,
    pub format: VtkFormat,
    pub write_snapshots: bool,
    /// Write a restart file at the end of the run.
    pub restart: bool,
    /// Number of equidistant modal snapshots kept for space-time error norms (0 = none).
    pub norm_snapshots: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("output"),
            snapshot_interval: None,
            diagnostic_interval: 10,
            format: VtkFormat::Ascii,
            write_snapshots: true,
            restart: true,
            norm_snapshots: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    pub rain: Option<bool>,
    /// Surface pressure of the base state (Pa); defaults to `p_ref`, or 8.5e4 for the rain thermal.
    pub surface_pressure: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    /// Runs compared against the reference: `[h, k, dt]` triples.
    pub runs: Vec<[f64; 3]>,
    pub reference: [f64; 3],
    #[serde(default = "default_norm_snapshots")]
    pub snapshots: usize,
}

fn default_norm_snapshots() -> usize {
    30
}

/// A complete run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub case: CaseKind,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub discretisation: DiscretisationConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub sponge: Option<SpongeConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub constants: ThermoConstants,
    #[serde(default)]
    pub microphysics: MicrophysicsParams,
    #[serde(default)]
    pub gravity_wave: GravityWaveParams,
    #[serde(default)]
    pub bubble: BubbleParams,
    #[serde(default)]
    pub rain_thermal: RainThermalParams,
    #[serde(default)]
    pub temperature_profile: TemperatureProfileParams,
    #[serde(default)]
    pub convergence: Option<ConvergenceConfig>,
}

/// Numbers derived from a validated config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedSettings {
    pub nx: usize,
    pub nz: usize,
    pub x_extent: f64,
    pub z_extent: f64,
    pub k: usize,
    pub t_end: f64,
    /// `None` when the step comes from the CFL number.
    pub dt: Option<f64>,
    pub rain: bool,
    pub surface_pressure: f64,
    pub report_interval: usize,
}

impl CaseConfig {
    pub fn new(case: CaseKind) -> Self {
        Self {
            case,
            mesh: MeshConfig::default(),
            discretisation: DiscretisationConfig::default(),
            time: TimeConfig::default(),
            sponge: None,
            output: OutputConfig::default(),
            physics: PhysicsConfig::default(),
            constants: ThermoConstants::default(),
            microphysics: MicrophysicsParams::default(),
            gravity_wave: GravityWaveParams { clouds: case != CaseKind::GravityWaveNoCloud, ..Default::default() },
            bubble: BubbleParams::default(),
            rain_thermal: RainThermalParams::default(),
            temperature_profile: TemperatureProfileParams::default(),
            convergence: None,
        }
    }

    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut value: toml::Table = text.parse().map_err(|e| Error::config(format!("invalid TOML: {e}")))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let mut cfg: CaseConfig = value.try_into().map_err(|e: toml::de::Error| Error::config(e.to_string()))?;
        if cfg.case == CaseKind::GravityWaveNoCloud {
            cfg.gravity_wave.clouds = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, overrides).map_err(|e| match e {
            Error::Config(m) => Error::config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// SHA-256 of the canonical serialisation, ignoring output settings and the end time.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputConfig::default();
        c.time.t_end = None;
        c.time.report_interval = None;
        c.convergence = None;
        let digest = Sha256::digest(c.to_toml_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn sip(&self) -> SipParams {
        SipParams { sigma: self.discretisation.sigma, mode: self.discretisation.penalty }
    }

    pub fn sponge_layer(&self) -> Option<SpongeLayer> {
        let z_t = self.mesh.z_extent.unwrap_or(self.case.defaults().z_extent);
        self.sponge.map(|s| SpongeLayer { z_d: s.z_d, z_t, alpha: s.alpha })
    }

    pub fn resolve(&self) -> Result<ResolvedSettings> {
        let d = self.case.defaults();
        let x_extent = self.mesh.x_extent.unwrap_or(d.x_extent);
        let z_extent = self.mesh.z_extent.unwrap_or(d.z_extent);
        let h = self.mesh.h.unwrap_or(d.h);
        let cells = |extent: f64, what: &str| -> Result<usize> {
            if !(h > 0.0) {
                return Err(Error::config(format!("mesh.h must be positive, got {h}")));
            }
            let n = (extent / h).round();
            if (n * h - extent).abs() > 1e-9 * extent || n < 1.0 {
                return Err(Error::config(format!("{what} extent {extent} m is not a multiple of h = {h} m")));
            }
            Ok(n as usize)
        };
        let nx = match self.mesh.nx {
            Some(n) => n,
            None => cells(x_extent, "x")?,
        };
        let nz = match self.mesh.nz {
            Some(n) => n,
            None => cells(z_extent, "z")?,
        };
        let default_pressure = match self.case {
            CaseKind::RainThermal => self.rain_thermal.p_surface,
            _ => self.constants.p_ref,
        };
        let dt = match (self.time.cfl, self.time.dt) {
            (Some(_), _) => None,
            (None, Some(dt)) => Some(dt),
            (None, None) => Some(d.dt),
        };
        Ok(ResolvedSettings {
            nx,
            nz,
            x_extent,
            z_extent,
            k: self.discretisation.k.unwrap_or(d.k),
            t_end: self.time.t_end.unwrap_or(d.t_end),
            dt,
            rain: self.physics.rain.unwrap_or(d.rain),
            surface_pressure: self.physics.surface_pressure.unwrap_or(default_pressure),
            report_interval: self.time.report_interval.unwrap_or(100),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.resolve()?;
        if r.nx == 0 || r.nz == 0 {
            return Err(Error::config("mesh needs at least one element in each direction"));
        }
        if !(r.x_extent > 0.0 && r.z_extent > 0.0) {
            return Err(Error::config("domain extents must be positive"));
        }
        if !(r.t_end >= 0.0 && r.t_end.is_finite()) {
            return Err(Error::config(format!("t_end must be non-negative, got {}", r.t_end)));
        }
        if let Some(dt) = r.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::config(format!("dt must be positive, got {dt}")));
            }
        }
        if let Some(cfl) = self.time.cfl {
            if !(cfl > 0.0) {
                return Err(Error::config(format!("cfl must be positive, got {cfl}")));
            }
        }
        if !(self.discretisation.gamma >= 0.0) {
            return Err(Error::config("gamma must be non-negative"));
        }
        if !(self.discretisation.sigma > 0.0) {
            return Err(Error::config("sigma must be positive"));
        }
        if self.discretisation.gamma > 0.0 {
            self.sip().penalty(r.k, 1.0)?;
        }
        if self.output.diagnostic_interval == 0 {
            return Err(Error::config("output.diagnostic_interval must be at least 1"));
        }
        if let Some(s) = self.output.snapshot_interval {
            if !(s > 0.0) {
                return Err(Error::config("output.snapshot_interval must be positive"));
            }
        }
        if let Some(s) = self.sponge_layer() {
            s.validate()?;
        }
        self.constants.validate()?;
        self.microphysics.validate()?;
        if self.case == CaseKind::RainThermal {
            self.rain_thermal.validate()?;
        }
        Ok(())
    }
}

/// Parses the right-hand side of `--set` as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    let probe = format!("v = {raw}");
    match probe.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Applies `section.key=value` (any depth) to a TOML table.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::config(format!("override '{spec}' is not of the form key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').map(str::trim).collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::config(format!("override '{spec}' has an empty key")));
    }
    let mut t = table;
    for key in &keys[..keys.len() - 1] {
        let entry = t.entry(key.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        t = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(format!("override '{spec}': '{key}' is not a section")))?;
    }
    t.insert(keys[keys.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}
