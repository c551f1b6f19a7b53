//! Pointwise initial perturbations of the benchmark cases.

use serde::{Deserialize, Serialize};

use super::profile::{
    hydrostatic_no_cloud, hydrostatic_relative_humidity, hydrostatic_saturated_qw, saturated_theta_e_block,
    vapour_pressure_from_humidity, HydrostaticProfile, WaterContent, DZ_PROFILE,
};
use super::solve::bracketed_root;
use crate::error::{Error, Result};
use crate::model::{BaseStatePoint, ConservedState};
use crate::thermo::ThermoConstants;

/// How the moist-density perturbation follows from the dry one in the gravity-wave set-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoistPerturbation {
    /// `ρ_m' = q_w ρ_d'`, keeping the total water ratio fixed.
    #[default]
    TotalWater,
    /// `ρ_m' = ρ_d' − ρ_vs'`.
    DryMinusVapour,
}

/// Moist inertia-gravity waves in a periodic channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GravityWaveParams {
    pub theta0: f64,
    /// Brunt-Väisälä frequency squared (1/s²) in `θ̄_e = Θ_0 exp(N² z / g)`.
    pub n2: f64,
    /// Total water ratio; ignored when the base state has no cloud.
    pub q_w: f64,
    /// With false, vapour is at saturation and there is no cloud water.
    pub clouds: bool,
    pub delta_theta: f64,
    pub a: f64,
    pub length: f64,
    pub height: f64,
    pub velocity: [f64; 2],
    pub moist_perturbation: MoistPerturbation,
}

impl Default for GravityWaveParams {
    fn default() -> Self {
        Self {
            theta0: 300.0,
            n2: 1e-4,
            q_w: 0.02,
            clouds: true,
            delta_theta: 0.01,
            a: 5e3,
            length: 300e3,
            height: 10e3,
            velocity: [20.0, 0.0],
            moist_perturbation: MoistPerturbation::TotalWater,
        }
    }
}

impl GravityWaveParams {
    pub fn base_theta_e(&self, c: &ThermoConstants, z: f64) -> f64 {
        self.theta0 * (self.n2 * z / c.g).exp()
    }

    pub fn theta_e_perturbation(&self, x: f64, z: f64) -> f64 {
        let dx = (x - 0.5 * self.length) / self.a;
        self.delta_theta / (1.0 + dx * dx) * (std::f64::consts::PI * z / self.height).sin()
    }

    fn water(&self) -> WaterContent {
        if self.clouds {
            WaterContent::Total(self.q_w)
        } else {
            WaterContent::SaturatedVapour
        }
    }

    pub fn profile(&self, c: &ThermoConstants, p_surface: f64) -> Result<HydrostaticProfile> {
        let th = |z: f64| self.base_theta_e(c, z);
        if self.clouds {
            hydrostatic_saturated_qw(c, th, self.q_w, p_surface, self.height, DZ_PROFILE)
        } else {
            hydrostatic_no_cloud(c, th, p_surface, self.height, DZ_PROFILE)
        }
    }
}

/// Total-energy perturbation of a state with the given primitives.
fn energy_perturbation(
    c: &ThermoConstants,
    base: &BaseStatePoint,
    rho_d: f64,
    rho_v: f64,
    rho_c: f64,
    t: f64,
    velocity: [f64; 2],
) -> f64 {
    let rho = rho_d + rho_v + rho_c + base.rho_r_bar;
    let kinetic = 0.5 * rho * (velocity[0] * velocity[0] + velocity[1] * velocity[1]);
    c.internal_energy(rho_d, rho_v, rho_c, base.rho_r_bar, t) + kinetic - base.e_bar
}

/// Perturbation of `θ_e` at unchanged pressure and saturation, moving with a uniform velocity.
pub fn gravity_wave_perturbation(
    c: &ThermoConstants,
    base: &BaseStatePoint,
    params: &GravityWaveParams,
    x: f64,
    z: f64,
) -> Result<ConservedState> {
    let theta_pert = params.theta_e_perturbation(x, z);
    let u = params.velocity;
    let (rho_d, rho_v, rho_c, t) = if theta_pert == 0.0 {
        (base.rho_d_bar, base.rho_v_bar, base.rho_c_bar, base.t_bar)
    } else {
        let theta_e = params.base_theta_e(c, z) + theta_pert;
        let (rho_d, rho_vs, t) = saturated_theta_e_block(c, base.p_bar, theta_e, params.water(), base.t_bar)
            .map_err(|e| Error::domain(format!("gravity-wave perturbation at (x = {x}, z = {z}): {e}")))?;
        let rho_m = match (params.clouds, params.moist_perturbation) {
            (false, _) => rho_vs,
            (true, MoistPerturbation::TotalWater) => base.rho_m_bar + params.q_w * (rho_d - base.rho_d_bar),
            (true, MoistPerturbation::DryMinusVapour) => {
                base.rho_m_bar + (rho_d - base.rho_d_bar) - (rho_vs - base.rho_v_bar)
            }
        };
        if rho_m < rho_vs {
            return Err(Error::domain(format!(
                "gravity-wave perturbation at (x = {x}, z = {z}) leaves the air undersaturated"
            )));
        }
        (rho_d, rho_vs, rho_m - rho_vs, t)
    };
    let rho = rho_d + rho_v + rho_c + base.rho_r_bar;
    Ok(ConservedState {
        rho_d_pert: rho_d - base.rho_d_bar,
        rho_m_pert: rho_v + rho_c - base.rho_m_bar,
        rho_r_pert: 0.0,
        momentum: [rho * u[0], rho * u[1]],
        energy_pert: energy_perturbation(c, base, rho_d, rho_v, rho_c, t, u),
    })
}

/// Warm bubble in a saturated, neutrally stable atmosphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BubbleParams {
    pub theta_e: f64,
    pub q_w: f64,
    pub x_c: f64,
    pub z_c: f64,
    pub x_r: f64,
    pub z_r: f64,
    /// Peak potential-temperature perturbation (K).
    pub amplitude: f64,
    /// Reference potential temperature of the matching dry test (K).
    pub theta_ref: f64,
    pub height: f64,
}

impl Default for BubbleParams {
    fn default() -> Self {
        Self {
            theta_e: 320.0,
            q_w: 0.02,
            x_c: 10e3,
            z_c: 2e3,
            x_r: 2e3,
            z_r: 2e3,
            amplitude: 2.0,
            theta_ref: 300.0,
            height: 10e3,
        }
    }
}

impl BubbleParams {
    pub fn theta_perturbation(&self, x: f64, z: f64) -> f64 {
        let l = ((x - self.x_c) / self.x_r).hypot((z - self.z_c) / self.z_r).min(1.0);
        let cos = (0.5 * std::f64::consts::PI * l).cos();
        if l >= 1.0 {
            0.0
        } else {
            self.amplitude * cos * cos
        }
    }

    pub fn profile(&self, c: &ThermoConstants, p_surface: f64) -> Result<HydrostaticProfile> {
        hydrostatic_saturated_qw(c, |_| self.theta_e, self.q_w, p_surface, self.height, DZ_PROFILE)
    }
}

/// `θ_d(p, T) (1 + q_vs(p, T)/ε)`, increasing in `T` below the boiling point.
fn buoyancy_temperature(c: &ThermoConstants, p: f64, t: f64) -> f64 {
    let es = c.es(t);
    c.dry_potential_temperature(p, t) * (1.0 + es / (p - es))
}

/// Temperature with the prescribed density-potential-temperature excess at pressure `p`.
pub fn bryan_fritsch_temperature(c: &ThermoConstants, base: &BaseStatePoint, params: &BubbleParams, theta_pert: f64) -> Result<f64> {
    let p = base.p_bar;
    // θ_ρ0 (1 + q_w) with θ_ρ0 the unperturbed density potential temperature
    let target = buoyancy_temperature(c, p, base.t_bar) * (theta_pert / params.theta_ref + 1.0);
    let mut hi = 400.0;
    if c.es(hi) >= 0.99 * p {
        hi = bracketed_root(|t| c.es(t) - 0.99 * p, 150.0, 400.0, f64::NAN, 1e-10, "boiling point")?;
    }
    bracketed_root(|t| buoyancy_temperature(c, p, t) - target, 150.0, hi, base.t_bar, 1e-12, "bubble temperature")
}

/// Bubble state: same dry and moist densities, warmer air, vapour back at saturation.
pub fn bryan_fritsch_state(
    c: &ThermoConstants,
    base: &BaseStatePoint,
    params: &BubbleParams,
    x: f64,
    z: f64,
) -> Result<ConservedState> {
    let theta_pert = params.theta_perturbation(x, z);
    if theta_pert == 0.0 {
        return Ok(ConservedState::default());
    }
    let t = bryan_fritsch_temperature(c, base, params, theta_pert)
        .map_err(|e| Error::domain(format!("bubble at (x = {x}, z = {z}): {e}")))?;
    let rho_v = c.saturation_vapour_density(t).min(base.rho_m_bar);
    let rho_c = base.rho_m_bar - rho_v;
    Ok(ConservedState {
        energy_pert: energy_perturbation(c, base, base.rho_d_bar, rho_v, rho_c, t, [0.0, 0.0]),
        ..ConservedState::default()
    })
}

/// Shape of the humidity transition between `r_2` and `r_1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BubbleShape {
    /// `cos²(π (r − r_2) / (2 (r_1 − r_2)))`, continuous at both radii.
    #[default]
    Continuous,
    /// `cos²(π (r − r_1) / (2 (r_1 − r_2)))`, jumps at `r_1`.
    Literal,
}

/// Moist bubble rising through a stable, unsaturated atmosphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RainThermalParams {
    pub humidity: f64,
    pub t_surface: f64,
    pub p_surface: f64,
    pub stratification: f64,
    pub r1: f64,
    pub r2: f64,
    pub c_x: f64,
    pub c_z: f64,
    pub height: f64,
    pub shape: BubbleShape,
}

impl Default for RainThermalParams {
    fn default() -> Self {
        Self {
            humidity: 0.2,
            t_surface: 283.0,
            p_surface: 8.5e4,
            stratification: 1.3e-5,
            r1: 300.0,
            r2: 200.0,
            c_x: 1800.0,
            c_z: 800.0,
            height: 2400.0,
            shape: BubbleShape::Continuous,
        }
    }
}

impl RainThermalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.humidity > 0.0 && self.humidity < 1.0) {
            return Err(Error::config("background humidity must lie in (0, 1)"));
        }
        if !(self.r1 > self.r2 && self.r2 > 0.0) {
            return Err(Error::config("bubble radii need r1 > r2 > 0"));
        }
        Ok(())
    }

    pub fn relative_humidity(&self, x: f64, z: f64) -> f64 {
        let r = (x - self.c_x).hypot(z - self.c_z);
        if r >= self.r1 {
            return self.humidity;
        }
        if r < self.r2 {
            return 1.0;
        }
        let shift = match self.shape {
            BubbleShape::Continuous => r - self.r2,
            BubbleShape::Literal => r - self.r1,
        };
        let cos = (std::f64::consts::PI * shift / (2.0 * (self.r1 - self.r2))).cos();
        self.humidity + (1.0 - self.humidity) * cos * cos
    }

    pub fn profile(&self, c: &ThermoConstants) -> Result<HydrostaticProfile> {
        self.validate()?;
        hydrostatic_relative_humidity(
            c,
            self.humidity,
            self.t_surface,
            self.p_surface,
            self.stratification,
            self.height,
            DZ_PROFILE,
        )
    }
}

/// Moister bubble at unchanged pressure and temperature.
pub fn rain_thermal_state(
    c: &ThermoConstants,
    base: &BaseStatePoint,
    params: &RainThermalParams,
    x: f64,
    z: f64,
) -> Result<ConservedState> {
    let h = params.relative_humidity(x, z);
    if h == params.humidity {
        return Ok(ConservedState::default());
    }
    let t = base.t_bar;
    let e = vapour_pressure_from_humidity(c, base.p_bar, c.es(t), h);
    let rho_v = e / (c.r_v * t);
    let rho_d = (base.p_bar - e) / (c.r_d * t);
    Ok(ConservedState {
        rho_d_pert: rho_d - base.rho_d_bar,
        rho_m_pert: rho_v - base.rho_m_bar,
        energy_pert: energy_perturbation(c, base, rho_d, rho_v, 0.0, t, [0.0, 0.0]),
        ..ConservedState::default()
    })
}
