//! Case set-up and the time loop.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::{CaseConfig, CaseKind, ResolvedSettings};
use super::io::{
    read_restart, sample_snapshot, write_restart, write_vtk, CsvWriter, RestartData, RestartHeader, Snapshot,
};
use super::solver::{MoistSolver, PointExtrema};
use crate::dg::{build_mesh, AlphaField, DgField, DgSpace};
use crate::error::{Error, Result};
use crate::init::{
    bryan_fritsch_state, gravity_wave_perturbation, hydrostatic_temperature_profile, rain_thermal_state,
    BubbleParams, GravityWaveParams, HydrostaticProfile, RainThermalParams, DZ_PROFILE,
};
use crate::model::{BaseStatePoint, ConservedState, MoistModel};
use crate::timestep::{apply_sponge, estimate_dt, ssprk43_step, RkWorkspace, SpongeLayer};

pub const DIAGNOSTICS_COLUMNS: [&str; 9] = [
    "t",
    "mass_dry",
    "mass_water",
    "rain_fallout",
    "max_speed",
    "min_T",
    "max_T",
    "l2_rho_d_pert",
    "l2_E_pert",
];

const EXTREMA_COLUMNS: [&str; 10] = [
    "t",
    "min_rho_v",
    "max_rho_v",
    "min_rho_c",
    "max_rho_c",
    "min_rho_r",
    "max_rho_r",
    "min_T",
    "max_T",
    "max_recovery_iterations",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass_dry: f64,
    pub mass_water: f64,
    pub rain_fallout: f64,
    pub max_speed: f64,
    pub min_t: f64,
    pub max_t: f64,
    pub l2_rho_d_pert: f64,
    pub l2_e_pert: f64,
    pub extrema: PointExtrema,
}

impl DiagnosticsRecord {
    pub fn row(&self) -> [f64; 9] {
        [
            self.t,
            self.mass_dry,
            self.mass_water,
            self.rain_fallout,
            self.max_speed,
            self.min_t,
            self.max_t,
            self.l2_rho_d_pert,
            self.l2_e_pert,
        ]
    }

    fn extrema_row(&self) -> [f64; 10] {
        let e = &self.extrema;
        [
            self.t,
            e.min_rho_v,
            e.max_rho_v,
            e.min_rho_c,
            e.max_rho_c,
            e.min_rho_r,
            e.max_rho_r,
            e.min_t,
            e.max_t,
            e.max_recovery_iterations as f64,
        ]
    }
}

/// Hydrostatic base state of a case, covering the whole domain height.
pub fn build_profile(cfg: &CaseConfig, s: &ResolvedSettings) -> Result<HydrostaticProfile> {
    let c = &cfg.constants;
    match cfg.case {
        CaseKind::MoistGravityWave | CaseKind::GravityWaveNoCloud => {
            gravity_params(cfg, s).profile(c, s.surface_pressure)
        }
        CaseKind::BryanFritsch => BubbleParams { height: s.z_extent, ..cfg.bubble }.profile(c, s.surface_pressure),
        CaseKind::HydrostaticRest => {
            hydrostatic_temperature_profile(c, &cfg.temperature_profile, s.surface_pressure, s.z_extent, DZ_PROFILE)
        }
        CaseKind::RainThermal => rain_params(cfg, s).profile(c),
    }
}

fn gravity_params(cfg: &CaseConfig, s: &ResolvedSettings) -> GravityWaveParams {
    GravityWaveParams {
        length: s.x_extent,
        height: s.z_extent,
        clouds: cfg.case != CaseKind::GravityWaveNoCloud,
        ..cfg.gravity_wave
    }
}

fn rain_params(cfg: &CaseConfig, s: &ResolvedSettings) -> RainThermalParams {
    RainThermalParams { height: s.z_extent, p_surface: s.surface_pressure, ..cfg.rain_thermal }
}

/// Pointwise initial perturbation of a case.
pub fn initial_perturbation(
    cfg: &CaseConfig,
    s: &ResolvedSettings,
) -> impl Fn(f64, f64, &BaseStatePoint) -> Result<ConservedState> + Sync {
    let c = cfg.constants;
    let case = cfg.case;
    let gw = gravity_params(cfg, s);
    let bubble = cfg.bubble;
    let rain = rain_params(cfg, s);
    move |x, z, b| match case {
        CaseKind::MoistGravityWave | CaseKind::GravityWaveNoCloud => gravity_wave_perturbation(&c, b, &gw, x, z),
        CaseKind::BryanFritsch => bryan_fritsch_state(&c, b, &bubble, x, z),
        CaseKind::HydrostaticRest => Ok(ConservedState::default()),
        CaseKind::RainThermal => rain_thermal_state(&c, b, &rain, x, z),
    }
}

/// A run in progress.
pub struct Simulation {
    pub config: CaseConfig,
    pub settings: ResolvedSettings,
    pub profile: HydrostaticProfile,
    pub solver: MoistSolver,
    pub u: DgField,
    pub t: f64,
    pub step: usize,
    pub dt: f64,
    pub n_steps: usize,
    pub sponge: Option<SpongeLayer>,
    workspace: RkWorkspace,
}

impl Simulation {
    pub fn new(config: &CaseConfig) -> Result<Self> {
        config.validate()?;
        let settings = config.resolve()?;
        let profile = build_profile(config, &settings)?;
        let mesh = build_mesh(settings.nx, settings.nz, settings.x_extent, settings.z_extent, true)?;
        let space = DgSpace::new(mesh, settings.k);
        let model = MoistModel::new(config.constants, config.microphysics, settings.rain);
        let mut solver =
            MoistSolver::new(space, model, |z| profile.at(z), config.discretisation.gamma, config.sip())?;
        let u = solver.initial_field(initial_perturbation(config, &settings))?;
        let (dt, n_steps) = match settings.dt {
            Some(dt) => step_count(settings.t_end, dt),
            None => {
                let cfl = config.time.cfl.expect("cfl set when dt is not");
                let speeds = solver.element_wave_speeds(&u);
                step_count(settings.t_end, estimate_dt(&solver.space, cfl, |e| speeds[e])?)
            }
        };
        let workspace = RkWorkspace::new(&u);
        Ok(Self {
            config: config.clone(),
            settings,
            profile,
            solver,
            u,
            t: 0.0,
            step: 0,
            dt,
            n_steps,
            sponge: config.sponge_layer(),
            workspace,
        })
    }

    /// Continues from a restart file written by a run with the same physics and discretisation.
    pub fn from_restart(config: &CaseConfig, path: &Path) -> Result<Self> {
        let data = read_restart(path)?;
        let mut sim = Self::new(config)?;
        if data.header.config_hash != config.hash() {
            return Err(Error::config(format!("{}: restart was written with a different configuration", path.display())));
        }
        if data.header.n_elements != sim.solver.space.n_elements() || data.header.k != sim.settings.k {
            return Err(Error::config(format!("{}: restart does not match the mesh", path.display())));
        }
        sim.u = data.u;
        sim.solver.aux = data.aux;
        let mesh = &sim.solver.space.mesh;
        sim.solver.alpha = if data.header.alpha_element.iter().all(|&a| a == 0.0) {
            AlphaField::zeros(mesh, 2)
        } else {
            AlphaField::from_element_values(mesh, 2, data.header.alpha_element)
        };
        sim.solver.fallout = data.header.fallout;
        sim.solver.fallout_profile = data.header.fallout_profile;
        sim.t = data.header.time;
        sim.step = data.header.step;
        Ok(sim)
    }

    pub fn restart_data(&self) -> RestartData {
        RestartData {
            header: RestartHeader {
                config_hash: self.config.hash(),
                time: self.t,
                step: self.step,
                fallout: self.solver.fallout,
                fallout_profile: self.solver.fallout_profile.clone(),
                k: self.settings.k,
                n_elements: self.solver.space.n_elements(),
                alpha_element: self.solver.alpha.element.clone(),
            },
            u: self.u.clone(),
            aux: self.solver.aux.clone(),
        }
    }

    pub fn finished(&self) -> bool {
        self.step >= self.n_steps
    }

    /// One SSPRK(4,3) step followed by the sponge.
    pub fn advance(&mut self) -> Result<()> {
        let (step, time) = (self.step, self.t);
        let ctx = |e: Error| Error::AtStep { step: step + 1, time, source: Box::new(e) };
        ssprk43_step(&mut self.solver, &mut self.u, self.dt, &mut self.workspace).map_err(ctx)?;
        if let Some(s) = &self.sponge {
            apply_sponge(&self.solver.space, &mut self.u, s).map_err(ctx)?;
            use crate::timestep::Evolution;
            self.solver.after_stage(&self.u).map_err(ctx)?;
        }
        self.step += 1;
        self.t = self.step as f64 * self.dt;
        Ok(())
    }

    pub fn diagnostics(&self) -> DiagnosticsRecord {
        let (mass_dry, mass_water) = self.solver.masses(&self.u);
        let (l2_rho_d_pert, l2_e_pert) = self.solver.l2_perturbations(&self.u);
        let e = self.solver.extrema;
        DiagnosticsRecord {
            t: self.t,
            mass_dry,
            mass_water,
            rain_fallout: self.solver.fallout,
            max_speed: e.max_speed,
            min_t: e.min_t,
            max_t: e.max_t,
            l2_rho_d_pert,
            l2_e_pert,
            extrema: e,
        }
    }

    pub fn snapshot(&self) -> Result<Snapshot> {
        let title = format!("moistdg {} t={} step={}", self.config.case, self.t, self.step);
        sample_snapshot(
            &self.solver.space,
            &self.solver.model,
            &self.u,
            &self.solver.aux,
            &|z| self.profile.at(z),
            &title,
        )
    }
}

/// `(dt, n)` with `n dt = t_end` and `dt` not above the requested step.
pub fn step_count(t_end: f64, dt: f64) -> (f64, usize) {
    if t_end == 0.0 {
        return (dt, 0);
    }
    let n = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    (t_end / n as f64, n)
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub case: String,
    pub status: String,
    pub config_hash: String,
    pub steps: usize,
    pub dt: f64,
    pub t: f64,
    pub wall_seconds: f64,
    pub nx: usize,
    pub nz: usize,
    pub k: usize,
    pub initial: Option<DiagnosticsRecord>,
    pub last: Option<DiagnosticsRecord>,
    pub snapshots: Vec<PathBuf>,
}

/// Everything a finished run leaves behind in memory.
pub struct RunOutcome {
    pub summary: RunSummary,
    pub diagnostics: Vec<DiagnosticsRecord>,
    /// Modal snapshots at the equidistant norm times (`output.norm_snapshots`).
    pub norm_snapshots: Vec<(f64, DgField)>,
    pub simulation: Simulation,
}

/// Runs a case to `t_end`, writing diagnostics, snapshots, a restart file and a summary.
pub fn run_case(config: &CaseConfig) -> Result<RunOutcome> {
    run_with(config, None)
}

pub fn run_with(config: &CaseConfig, restart: Option<&Path>) -> Result<RunOutcome> {
    let wall = Instant::now();
    let out = &config.output;
    std::fs::create_dir_all(&out.dir).map_err(|e| Error::io(&out.dir, e))?;
    std::fs::write(out.dir.join("config.toml"), config.to_toml_string()).map_err(|e| Error::io(&out.dir, e))?;
    let mut sim = match restart {
        Some(p) => Simulation::from_restart(config, p)?,
        None => Simulation::new(config)?,
    };
    sim.profile.write_csv(&out.dir.join("profile.csv"))?;

    let mut summary = RunSummary {
        case: config.case.to_string(),
        status: "running".into(),
        config_hash: config.hash(),
        steps: sim.step,
        dt: sim.dt,
        t: sim.t,
        wall_seconds: 0.0,
        nx: sim.settings.nx,
        nz: sim.settings.nz,
        k: sim.settings.k,
        initial: None,
        last: None,
        snapshots: Vec::new(),
    };
    let result = time_loop(&mut sim, &mut summary);
    summary.wall_seconds = wall.elapsed().as_secs_f64();
    summary.steps = sim.step;
    summary.t = sim.t;
    let (diagnostics, norm_snapshots) = match result {
        Ok(v) => {
            summary.status = "completed".into();
            v
        }
        Err(e) => {
            summary.status = format!("failed: {e}");
            write_summary(&out.dir, &summary)?;
            return Err(e);
        }
    };
    write_summary(&out.dir, &summary)?;
    Ok(RunOutcome { summary, diagnostics, norm_snapshots, simulation: sim })
}

fn write_summary(dir: &Path, summary: &RunSummary) -> Result<()> {
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(summary).expect("summary serialises");
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

type LoopOutput = (Vec<DiagnosticsRecord>, Vec<(f64, DgField)>);

fn time_loop(sim: &mut Simulation, summary: &mut RunSummary) -> Result<LoopOutput> {
    let cfg = sim.config.clone();
    let out = &cfg.output;
    let mut diag_csv = CsvWriter::create(&out.dir.join("diagnostics.csv"), &DIAGNOSTICS_COLUMNS)?;
    let mut ext_csv = CsvWriter::create(&out.dir.join("extrema.csv"), &EXTREMA_COLUMNS)?;
    let mut records = Vec::new();
    let mut record = |sim: &Simulation, records: &mut Vec<DiagnosticsRecord>| -> Result<DiagnosticsRecord> {
        let d = sim.diagnostics();
        diag_csv.row(&d.row())?;
        ext_csv.row(&d.extrema_row())?;
        records.push(d);
        Ok(d)
    };
    let first = record(sim, &mut records)?;
    summary.initial = Some(first);

    let snapshot_every = match out.snapshot_interval {
        Some(s) => Some(((s / sim.dt).round() as usize).max(1)),
        None => None,
    };
    let mut snapshot_index = 0;
    let mut write_snapshot = |sim: &Simulation, summary: &mut RunSummary| -> Result<()> {
        if !out.write_snapshots {
            return Ok(());
        }
        let path = out.dir.join(format!("snapshot_{snapshot_index:05}.vtk"));
        snapshot_index += 1;
        write_vtk(&sim.snapshot()?, &path, out.format)?;
        summary.snapshots.push(path);
        Ok(())
    };
    write_snapshot(sim, summary)?;

    let m = out.norm_snapshots;
    let norm_every = if m > 0 {
        if !sim.n_steps.is_multiple_of(m) {
            return Err(Error::Harness(format!(
                "{} steps cannot be split into {m} equidistant snapshots",
                sim.n_steps
            )));
        }
        Some(sim.n_steps / m)
    } else {
        None
    };
    let mut norm_snapshots = Vec::new();
    let report = sim.settings.report_interval;
    while !sim.finished() {
        sim.advance()?;
        let n = sim.step;
        if n.is_multiple_of(out.diagnostic_interval) || sim.finished() {
            record(sim, &mut records)?;
        }
        if snapshot_every.is_some_and(|s| n.is_multiple_of(s)) && !sim.finished() {
            write_snapshot(sim, summary)?;
        }
        if norm_every.is_some_and(|s| n.is_multiple_of(s)) {
            norm_snapshots.push((sim.t, sim.u.clone()));
        }
        if report > 0 && (n.is_multiple_of(report) || sim.finished()) {
            println!(
                "step {n:>8}  t = {:>10.3} s  max|u| = {:.6e} m/s  dt = {} s",
                sim.t, sim.solver.extrema.max_speed, sim.dt
            );
        }
    }
    if sim.n_steps > 0 {
        write_snapshot(sim, summary)?;
    }
    summary.last = records.last().copied();
    if out.restart {
        write_restart(&out.dir.join("restart.bin"), &sim.restart_data())?;
    }
    let mut fall = CsvWriter::create(&out.dir.join("fallout.csv"), &["x", "fallout"])?;
    for (x, f) in sim.solver.bottom_facet_centres().iter().zip(&sim.solver.fallout_profile) {
        fall.row(&[*x, *f])?;
    }
    Ok((records, norm_snapshots))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_count_hits_t_end() {
        assert_eq!(step_count(3600.0, 1.0), (1.0, 3600));
        let (dt, n) = step_count(1000.0, 0.3);
        assert_eq!(n, 3334);
        assert!((dt * n as f64 - 1000.0).abs() < 1e-9 && dt <= 0.3);
        assert_eq!(step_count(0.0, 0.5).1, 0);
    }
}
