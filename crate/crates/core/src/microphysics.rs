//! Kessler-type warm-rain source terms, rain sedimentation speed, and the
//! pointwise saturation adjustment that splits the moist density into vapour
//! and cloud water.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thermo::ThermoConstants;

/// `Γ(4.5) = 105 √π / 16`.
pub const GAMMA_4_5: f64 = 105.0 * 1.772_453_850_905_516_f64 / 16.0;

/// Density of liquid water, used when `rho_w_mode = liquid_water`.
pub const LIQUID_WATER_DENSITY: f64 = 1000.0;

/// Which density enters the `(π ρ_w N_0)^(-1/8)` factor of the fall speed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RainDensityMode {
    /// `ρ_w = ρ_v + ρ_c + ρ_r`.
    #[default]
    TotalWater,
    /// `ρ_w = 1000 kg/m³`.
    LiquidWater,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MicrophysicsParams {
    /// Auto-conversion threshold.
    pub q_au: f64,
    /// Raindrop size distribution intercept (m⁻⁴).
    #[serde(rename = "N0r")]
    pub n0r: f64,
    /// Fall-speed coefficient (m^½/s).
    pub v0r: f64,
    /// Relative energy-residual tolerance of the saturation adjustment.
    pub newton_tol: f64,
    /// Newton iterations before falling back to bisection.
    pub newton_max_iter: usize,
    pub rho_w_mode: RainDensityMode,
}

impl Default for MicrophysicsParams {
    fn default() -> Self {
        Self {
            q_au: 0.0,
            n0r: 8.0e6,
            v0r: 130.0,
            newton_tol: 1e-12,
            newton_max_iter: 25,
            rho_w_mode: RainDensityMode::TotalWater,
        }
    }
}

impl MicrophysicsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.q_au >= 0.0) {
            return Err(Error::config(format!("q_au must be non-negative, got {}", self.q_au)));
        }
        if !(self.n0r > 0.0 && self.v0r > 0.0) {
            return Err(Error::config("N0r and v0r must be positive"));
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iter == 0 {
            return Err(Error::config("newton_tol must be positive and newton_max_iter non-zero"));
        }
        Ok(())
    }
}

/// Evaporation of rain into undersaturated air. Clamped to be non-negative.
#[inline]
pub fn source_evaporation(c: &ThermoConstants, t: f64, rho_r: f64, rho_vs: f64, rho_v: f64) -> f64 {
    let rho_r = rho_r.max(0.0);
    if rho_r == 0.0 {
        return 0.0;
    }
    let s = (3.86e-3 - 9.41e-5 * (t - c.t_ref))
        * (1.0 + 9.1 * rho_r.powf(3.0 / 16.0))
        * (rho_vs.max(0.0) - rho_v.max(0.0))
        * rho_r.sqrt();
    s.max(0.0)
}

/// Auto-conversion of cloud water into rain.
#[inline]
pub fn source_autoconversion(p: &MicrophysicsParams, rho_c: f64, rho: f64) -> f64 {
    0.001 * (rho_c.max(0.0) - p.q_au * rho.max(0.0)).max(0.0)
}

/// Accretion of cloud droplets by rain.
#[inline]
pub fn source_accretion(rho_c: f64, rho_r: f64) -> f64 {
    let rho_r = rho_r.max(0.0);
    if rho_r == 0.0 {
        return 0.0;
    }
    1.72 * rho_c.max(0.0) * rho_r.powf(7.0 / 8.0)
}

/// Mean terminal fall speed of rain (m/s, positive downwards).
#[inline]
pub fn terminal_rain_velocity(p: &MicrophysicsParams, rho_v: f64, rho_c: f64, rho_r: f64) -> f64 {
    let rho_r = rho_r.max(0.0);
    let rho_w = match p.rho_w_mode {
        RainDensityMode::TotalWater => rho_v.max(0.0) + rho_c.max(0.0) + rho_r,
        RainDensityMode::LiquidWater => LIQUID_WATER_DENSITY,
    };
    if rho_r == 0.0 || rho_w <= 0.0 {
        return 0.0;
    }
    (std::f64::consts::PI * rho_w * p.n0r).powf(-0.125) * p.v0r * GAMMA_4_5 / 6.0 * rho_r.powf(0.125)
}

/// All three microphysical conversion rates at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SourceRates {
    pub evaporation: f64,
    pub autoconversion: f64,
    pub accretion: f64,
}

impl SourceRates {
    pub fn evaluate(
        c: &ThermoConstants,
        p: &MicrophysicsParams,
        t: f64,
        rho_v: f64,
        rho_c: f64,
        rho_r: f64,
        rho: f64,
    ) -> Self {
        let rho_vs = c.saturation_vapour_density(t);
        Self {
            evaporation: source_evaporation(c, t, rho_r, rho_vs, rho_v),
            autoconversion: source_autoconversion(p, rho_c, rho),
            accretion: source_accretion(rho_c, rho_r),
        }
    }

    /// Net production of rain (`S_au + S_ac - S_ev`); the moist density gets the negative.
    #[inline]
    pub fn rain_production(&self) -> f64 {
        self.autoconversion + self.accretion - self.evaporation
    }
}

/// Output of the saturation adjustment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveredState {
    pub rho_v: f64,
    pub rho_c: f64,
    pub t: f64,
    pub iterations: usize,
    pub saturated: bool,
}

const T_MIN: f64 = 150.0;
const T_MAX: f64 = 400.0;

/// Energy residual of the adjustment system after eliminating `ρ_v` and `ρ_c`.
struct EnergyResidual<'a> {
    c: &'a ThermoConstants,
    rho_d: f64,
    rho_m: f64,
    rho_r: f64,
    rho_e: f64,
}

impl EnergyResidual<'_> {
    /// Residual, its derivative in T, the vapour density, and whether the saturated branch is active.
    #[inline]
    fn eval(&self, t: f64) -> (f64, f64, f64, bool) {
        let c = self.c;
        let (rho_vs, drho) = c.saturation_vapour_density_with_derivative(t);
        let fixed = c.c_vd * self.rho_d + c.c_l * (self.rho_m + self.rho_r);
        let dc = c.c_vv - c.c_l;
        let lat = c.l_ref - c.r_v * c.t_ref;
        if rho_vs < self.rho_m {
            let cv = fixed + dc * rho_vs;
            let r = cv * (t - c.t_ref) + rho_vs * lat - self.rho_e;
            let dr = cv + drho * (dc * (t - c.t_ref) + lat);
            (r, dr, rho_vs, true)
        } else {
            let cv = fixed + dc * self.rho_m;
            let r = cv * (t - c.t_ref) + self.rho_m * lat - self.rho_e;
            (r, cv, self.rho_m, false)
        }
    }
}

/// Recovers `(ρ_v, ρ_c, T)` from `(ρ_d, ρ_m, ρ_r, ρe)` such that vapour never
/// exceeds saturation and all cloud water evaporates in undersaturated air.
///
/// The vapour density is eliminated as `min(e_s(T)/(R_v T), ρ_m)`, leaving a
/// monotone scalar energy residual in `T`. That residual is solved with a
/// bracketed Newton iteration started from `t_guess`; steps leaving the
/// bracket are replaced by bisection, and after `newton_max_iter` iterations
/// the solver continues by pure bisection.
pub fn condensation_recover(
    c: &ThermoConstants,
    p: &MicrophysicsParams,
    rho_d: f64,
    rho_m: f64,
    rho_r: f64,
    rho_e: f64,
    t_guess: f64,
) -> Result<RecoveredState> {
    if !(rho_d > 0.0) || !rho_d.is_finite() {
        return Err(Error::domain(format!("dry density must be positive, got {rho_d}")));
    }
    if !(rho_m >= 0.0) || !rho_m.is_finite() {
        return Err(Error::domain(format!("moist density must be non-negative, got {rho_m}")));
    }
    if !rho_r.is_finite() || !rho_e.is_finite() {
        return Err(Error::domain(format!("non-finite input (rho_r = {rho_r}, rho_e = {rho_e})")));
    }

    let lat = c.l_ref - c.r_v * c.t_ref;
    let cv_unsat = c.volumetric_heat_capacity(rho_d, rho_m, 0.0, rho_r);
    if !(cv_unsat > 0.0) {
        return Err(Error::domain(format!("heat capacity must be positive, got {cv_unsat}")));
    }
    // Root of the undersaturated branch; exact when it is the active one.
    let t_unsat = c.t_ref + (rho_e - rho_m * lat) / cv_unsat;
    if rho_m == 0.0 || (t_unsat > 0.0 && c.saturation_vapour_density(t_unsat) >= rho_m) {
        if !(T_MIN..=T_MAX).contains(&t_unsat) {
            return Err(Error::Convergence {
                what: format!("temperature {t_unsat} K outside [{T_MIN}, {T_MAX}] K"),
                residual: f64::NAN,
            });
        }
        return Ok(RecoveredState { rho_v: rho_m, rho_c: 0.0, t: t_unsat, iterations: 0, saturated: false });
    }

    // Saturated: latent heating puts the root above t_unsat.
    let f = EnergyResidual { c, rho_d, rho_m, rho_r, rho_e };
    // ρe can cancel to ~0 near T_ref, so measure the residual against its largest term
    let magnitude = rho_e.abs() + rho_m * lat.abs() + cv_unsat * (t_unsat - c.t_ref).abs() + 1.0;
    let scale = p.newton_tol * magnitude;
    let mut lo = T_MIN.max(t_unsat);
    let mut hi = T_MAX;
    let (r_lo, ..) = f.eval(lo);
    let (r_hi, ..) = f.eval(hi);
    if r_lo > 0.0 || r_hi < 0.0 {
        return Err(Error::Convergence {
            what: format!("no temperature root in [{lo}, {hi}] K"),
            residual: if r_lo > 0.0 { r_lo } else { r_hi },
        });
    }

    let mut t = if t_guess.is_finite() { t_guess.clamp(lo, hi) } else { 0.5 * (lo + hi) };
    let mut iterations = 0;
    let max_total = p.newton_max_iter + 200;
    loop {
        iterations += 1;
        let (r, dr, rho_v, saturated) = f.eval(t);
        if r.abs() <= scale {
            // One more Newton correction polishes the root to round-off.
            let polished = t - r / dr;
            let t = if polished > lo && polished < hi { polished } else { t };
            let rho_v = if saturated { c.saturation_vapour_density(t).min(rho_m) } else { rho_v };
            return Ok(RecoveredState { rho_v, rho_c: rho_m - rho_v, t, iterations, saturated });
        }
        if r < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let newton = t - r / dr;
        let next = if iterations <= p.newton_max_iter && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * hi || iterations >= max_total || next == t {
            let (r, _, rho_v, _) = f.eval(next);
            if r.abs() <= scale.max(1e3 * f64::EPSILON * magnitude) {
                return Ok(RecoveredState { rho_v, rho_c: rho_m - rho_v, t: next, iterations, saturated });
            }
            return Err(Error::Convergence { what: "saturation adjustment".into(), residual: r });
        }
        t = next;
    }
}
