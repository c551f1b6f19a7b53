//! Moist-air thermodynamics with constant specific heats.
//!
//! Everything here is a pure scalar function of an immutable
//! [`ThermoConstants`] record, cheap enough to call per quadrature point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equation-of-state parameters for moist air at the reference temperature.
///
/// Field names in configuration files follow the conventional symbols
/// (`c_l`, `c_pd`, `L_ref`, `R_d`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermoConstants {
    /// Specific heat of liquid water (J/kg/K).
    pub c_l: f64,
    /// Specific heat of dry air at constant pressure (J/kg/K).
    pub c_pd: f64,
    /// Specific heat of water vapour at constant pressure (J/kg/K).
    pub c_pv: f64,
    /// Specific heat of dry air at constant volume (J/kg/K).
    pub c_vd: f64,
    /// Specific heat of water vapour at constant volume (J/kg/K).
    pub c_vv: f64,
    /// Saturation vapour pressure over water at `t_ref` (Pa).
    pub e_ref: f64,
    /// Latent heat of vaporisation at `t_ref` (J/kg).
    #[serde(rename = "L_ref")]
    pub l_ref: f64,
    /// Gas constant of dry air (J/kg/K).
    #[serde(rename = "R_d")]
    pub r_d: f64,
    /// Gas constant of water vapour (J/kg/K).
    #[serde(rename = "R_v")]
    pub r_v: f64,
    /// Reference temperature (K).
    #[serde(rename = "T_ref")]
    pub t_ref: f64,
    /// Reference pressure (Pa).
    pub p_ref: f64,
    /// Ratio of gas constants, nominally `r_d / r_v`.
    pub epsilon: f64,
    /// Gravitational acceleration (m/s²).
    pub g: f64,
}

impl Default for ThermoConstants {
    fn default() -> Self {
        Self {
            c_l: 4218.0,
            c_pd: 1005.0,
            c_pv: 1850.0,
            c_vd: 718.0,
            c_vv: 1390.0,
            e_ref: 610.7,
            l_ref: 2.835e6,
            r_d: 287.05,
            r_v: 461.51,
            t_ref: 273.15,
            p_ref: 1.0e5,
            epsilon: 0.622,
            g: 9.81,
        }
    }
}

fn check_temperature(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("temperature must be positive and finite, got {t}")))
    }
}

impl ThermoConstants {
    /// Checks positivity of every constant and consistency of `epsilon` with `R_d / R_v`.
    /// `g` may be zero (used for free-stream tests).
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("c_l", self.c_l),
            ("c_pd", self.c_pd),
            ("c_pv", self.c_pv),
            ("c_vd", self.c_vd),
            ("c_vv", self.c_vv),
            ("e_ref", self.e_ref),
            ("L_ref", self.l_ref),
            ("R_d", self.r_d),
            ("R_v", self.r_v),
            ("T_ref", self.t_ref),
            ("p_ref", self.p_ref),
            ("epsilon", self.epsilon),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(format!("constant {name} must be positive, got {value}")));
            }
        }
        if !(self.g.is_finite() && self.g >= 0.0) {
            return Err(Error::config(format!("constant g must be non-negative, got {}", self.g)));
        }
        let ratio = self.r_d / self.r_v;
        if ((self.epsilon - ratio) / ratio).abs() > 1e-3 {
            return Err(Error::config(format!(
                "epsilon = {} inconsistent with R_d/R_v = {ratio}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Exponent `(c_pv - c_l) / R_v` of the power-law factor in `e_s`.
    #[inline]
    fn es_power(&self) -> f64 {
        (self.c_pv - self.c_l) / self.r_v
    }

    /// Saturation vapour pressure without argument checks. Hot-path variant.
    #[inline]
    pub fn es(&self, t: f64) -> f64 {
        let dc = self.c_pv - self.c_l;
        let a = (self.l_ref - dc * self.t_ref) / self.r_v;
        self.e_ref * (t / self.t_ref).powf(self.es_power()) * (a * (1.0 / self.t_ref - 1.0 / t)).exp()
    }

    /// `d e_s / dT`, from the logarithmic derivative of the closed form.
    #[inline]
    pub fn des_dt(&self, t: f64) -> f64 {
        let dc = self.c_pv - self.c_l;
        let a = (self.l_ref - dc * self.t_ref) / self.r_v;
        self.es(t) * (self.es_power() / t + a / (t * t))
    }

    /// Saturation vapour pressure over liquid water (Pa) from the integrated
    /// Clausius-Clapeyron relation with a linear latent heat.
    pub fn saturation_vapour_pressure(&self, t: f64) -> Result<f64> {
        check_temperature(t)?;
        Ok(self.es(t))
    }

    /// Vapour density at saturation, `e_s(T) / (R_v T)`.
    #[inline]
    pub fn saturation_vapour_density(&self, t: f64) -> f64 {
        self.es(t) / (self.r_v * t)
    }

    /// `d/dT [e_s(T) / (R_v T)]`.
    #[inline]
    pub fn dsaturation_vapour_density_dt(&self, t: f64) -> f64 {
        (self.des_dt(t) - self.es(t) / t) / (self.r_v * t)
    }

    /// `e_s/(R_v T)` and its temperature derivative from a single `e_s` evaluation.
    #[inline]
    pub fn saturation_vapour_density_with_derivative(&self, t: f64) -> (f64, f64) {
        let dc = self.c_pv - self.c_l;
        let a = (self.l_ref - dc * self.t_ref) / self.r_v;
        let es = self.es(t);
        let des = es * (self.es_power() / t + a / (t * t));
        let rv_t = self.r_v * t;
        (es / rv_t, (des - es / t) / rv_t)
    }

    /// Equation of state `p = (ρ_d R_d + ρ_v R_v) T`.
    #[inline]
    pub fn pressure(&self, rho_d: f64, rho_v: f64, t: f64) -> f64 {
        (rho_d * self.r_d + rho_v * self.r_v) * t
    }

    /// Heat capacity at constant volume per unit volume (J/m³/K).
    #[inline]
    pub fn volumetric_heat_capacity(&self, rho_d: f64, rho_v: f64, rho_c: f64, rho_r: f64) -> f64 {
        self.c_vd * rho_d + self.c_vv * rho_v + self.c_l * (rho_c + rho_r)
    }

    /// Internal energy density `ρe` (J/m³), i.e. total energy without the kinetic part.
    #[inline]
    pub fn internal_energy(&self, rho_d: f64, rho_v: f64, rho_c: f64, rho_r: f64, t: f64) -> f64 {
        self.volumetric_heat_capacity(rho_d, rho_v, rho_c, rho_r) * (t - self.t_ref)
            + rho_v * (self.l_ref - self.r_v * self.t_ref)
    }

    /// Inverse of [`Self::internal_energy`] in `T` at fixed densities.
    pub fn temperature_from_internal_energy(
        &self,
        rho_d: f64,
        rho_v: f64,
        rho_c: f64,
        rho_r: f64,
        rho_e: f64,
    ) -> Result<f64> {
        let cv = self.volumetric_heat_capacity(rho_d, rho_v, rho_c, rho_r);
        if !(cv.is_finite() && cv > 0.0) {
            return Err(Error::domain(format!("heat capacity must be positive, got {cv}")));
        }
        Ok(self.t_ref + (rho_e - rho_v * (self.l_ref - self.r_v * self.t_ref)) / cv)
    }

    /// Saturation mixing ratio `q_vs = ε e_s / (p - e_s)`.
    pub fn saturation_mixing_ratio(&self, p: f64, t: f64) -> Result<f64> {
        check_temperature(t)?;
        let es = self.es(t);
        if !(p > es) {
            return Err(Error::domain(format!(
                "pressure {p} Pa does not exceed saturation vapour pressure {es} Pa"
            )));
        }
        Ok(self.epsilon * es / (p - es))
    }

    /// Ratio of heat capacities of the moist mixture.
    #[inline]
    pub fn gamma_m(&self, rho_d: f64, rho_v: f64, rho_c: f64, rho_r: f64) -> f64 {
        let cv = self.volumetric_heat_capacity(rho_d, rho_v, rho_c, rho_r);
        (cv + rho_d * self.r_d + rho_v * self.r_v) / cv
    }

    /// Speed of sound in moist air, `sqrt(γ_m p / ρ)`.
    pub fn moist_sound_speed(&self, state: &MoistPoint) -> Result<f64> {
        let rho = state.total_density();
        if !(rho > 0.0 && state.p > 0.0) {
            return Err(Error::domain(format!(
                "sound speed needs positive density and pressure, got rho = {rho}, p = {}",
                state.p
            )));
        }
        Ok(self.sound_speed_unchecked(state))
    }

    #[inline]
    pub fn sound_speed_unchecked(&self, s: &MoistPoint) -> f64 {
        let gamma = self.gamma_m(s.rho_d, s.rho_v, s.rho_c, s.rho_r);
        (gamma * s.p / s.total_density()).sqrt()
    }

    /// Latent heat of vaporisation, linear in temperature.
    #[inline]
    pub fn latent_heat(&self, t: f64) -> f64 {
        self.l_ref + (self.c_pv - self.c_l) * (t - self.t_ref)
    }

    /// Wet equivalent potential temperature for total water mixing ratio `q_w`.
    pub fn wet_equivalent_potential_temperature(&self, rho_d: f64, rho_v: f64, t: f64, q_w: f64) -> f64 {
        let cp = self.c_pd + self.c_l * q_w;
        let p_d = rho_d * self.r_d * t;
        t * (p_d / self.p_ref).powf(-self.r_d / cp) * (self.latent_heat(t) * rho_v / (rho_d * cp * t)).exp()
    }

    /// Dry potential temperature `T (p_ref / p)^(R_d / c_pd)`.
    #[inline]
    pub fn dry_potential_temperature(&self, p: f64, t: f64) -> f64 {
        t * (self.p_ref / p).powf(self.r_d / self.c_pd)
    }

    /// Density potential temperature `θ_d (1 + q_v / ε)`.
    pub fn density_potential_temperature(&self, p: f64, t: f64, q_v: f64) -> f64 {
        self.dry_potential_temperature(p, t) * (1.0 + q_v / self.epsilon)
    }

    /// Relative humidity expressed through mixing ratios,
    /// `(q_v / q_vs) (1 + q_vs/ε) / (1 + q_v/ε)`.
    pub fn relative_humidity(&self, q_v: f64, q_vs: f64) -> f64 {
        q_v / q_vs * (1.0 + q_vs / self.epsilon) / (1.0 + q_v / self.epsilon)
    }
}

/// Densities and pressure at one point, enough to evaluate `γ_m` and `c_m`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MoistPoint {
    pub rho_d: f64,
    pub rho_v: f64,
    pub rho_c: f64,
    pub rho_r: f64,
    pub p: f64,
}

impl MoistPoint {
    #[inline]
    pub fn total_density(&self) -> f64 {
        self.rho_d + self.rho_v + self.rho_c + self.rho_r
    }
}

/// Mixing ratios with respect to the dry density.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MoistureFractions {
    pub q_d: f64,
    pub q_v: f64,
    pub q_c: f64,
    pub q_r: f64,
    pub q_w: f64,
    pub q_vs: f64,
    pub relative_humidity: f64,
}

impl MoistureFractions {
    pub fn from_densities(c: &ThermoConstants, rho_d: f64, rho_v: f64, rho_c: f64, rho_r: f64, t: f64) -> Self {
        let q_v = rho_v / rho_d;
        let q_vs = c.saturation_vapour_density(t) / rho_d;
        Self {
            q_d: 1.0,
            q_v,
            q_c: rho_c / rho_d,
            q_r: rho_r / rho_d,
            q_w: (rho_v + rho_c + rho_r) / rho_d,
            q_vs,
            relative_humidity: c.relative_humidity(q_v, q_vs),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn defaults_are_consistent() {
        ThermoConstants::default().validate().unwrap();
    }

    #[test]
    fn es_at_reference_temperature() {
        let c = ThermoConstants::default();
        assert_eq!(c.saturation_vapour_pressure(273.15).unwrap(), 610.7);
    }

    #[test]
    fn es_rejects_bad_temperature() {
        let c = ThermoConstants::default();
        assert!(c.saturation_vapour_pressure(0.0).is_err());
        assert!(c.saturation_vapour_pressure(-3.0).is_err());
        assert!(c.saturation_vapour_pressure(f64::NAN).is_err());
    }

    #[test]
    fn es_strictly_increasing() {
        let c = ThermoConstants::default();
        let mut prev = c.es(200.0);
        for t in 201..=330 {
            let e = c.es(t as f64);
            assert!(e > prev, "not increasing at {t}");
            prev = e;
        }
        assert!(c.es(253.15) < 610.7);
    }

    #[test]
    fn des_dt_matches_finite_difference() {
        let c = ThermoConstants::default();
        for t in [230.0, 273.15, 300.0] {
            let h = 1e-4;
            let fd = (c.es(t + h) - c.es(t - h)) / (2.0 * h);
            assert!(rel(c.des_dt(t), fd) < 1e-8);
            let fd = (c.saturation_vapour_density(t + h) - c.saturation_vapour_density(t - h)) / (2.0 * h);
            assert!(rel(c.dsaturation_vapour_density_dt(t), fd) < 1e-8);
            let (v, d) = c.saturation_vapour_density_with_derivative(t);
            assert!(rel(v, c.saturation_vapour_density(t)) < 1e-15);
            assert!(rel(d, c.dsaturation_vapour_density_dt(t)) < 1e-14);
        }
    }

    #[test]
    fn pressure_examples() {
        let c = ThermoConstants::default();
        assert_eq!(c.pressure(0.0, 0.0, 300.0), 0.0);
        assert!(rel(c.pressure(1.0, 0.0, 273.15), 287.05 * 273.15) < 1e-15);
        assert!(rel(c.pressure(1.0, 0.01, 280.0), (287.05 + 4.6151) * 280.0) < 1e-14);
    }

    #[test]
    fn pressure_is_linear() {
        let c = ThermoConstants::default();
        let (d, v, t) = (0.9, 0.012, 281.0);
        let h = 1e-3;
        let base = c.pressure(d, v, t);
        let slope_d = (c.pressure(d + h, v, t) - base) / h;
        let slope_d2 = (c.pressure(d + 2.0 * h, v, t) - c.pressure(d + h, v, t)) / h;
        assert!(rel(slope_d, slope_d2) < 1e-9);
        assert!(rel(slope_d, c.r_d * t) < 1e-9);
        let slope_t = (c.pressure(d, v, t + h) - base) / h;
        assert!(rel(slope_t, d * c.r_d + v * c.r_v) < 1e-9);
    }

    #[test]
    fn internal_energy_examples() {
        let c = ThermoConstants::default();
        assert_eq!(c.internal_energy(0.0, 0.0, 0.0, 0.0, 290.0), 0.0);
        assert_eq!(c.internal_energy(1.0, 0.0, 0.0, 0.0, c.t_ref), 0.0);
        let oracle = (718.0 + 1390.0 * 0.01 + 4218.0 * 0.001) * (290.0 - 273.15) + 0.01 * (2.835e6 - 461.51 * 273.15);
        assert!(rel(c.internal_energy(1.0, 0.01, 0.001, 0.0, 290.0), oracle) < 1e-14);
    }

    #[test]
    fn temperature_inversion() {
        let c = ThermoConstants::default();
        assert_eq!(c.temperature_from_internal_energy(1.0, 0.0, 0.0, 0.0, 0.0).unwrap(), c.t_ref);
        let e = (718.0 + 1390.0 * 0.01) * (285.0 - 273.15) + 0.01 * (2.835e6 - 461.51 * 273.15);
        assert!(rel(c.temperature_from_internal_energy(1.0, 0.01, 0.0, 0.0, e).unwrap(), 285.0) < 1e-13);
        assert!(c.temperature_from_internal_energy(0.0, 0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn saturation_mixing_ratio_examples() {
        let c = ThermoConstants::default();
        let t = 290.0;
        let es = c.es(t);
        assert!(rel(c.saturation_mixing_ratio(2.0 * es, t).unwrap(), c.epsilon) < 1e-15);
        let oracle = 0.622 * 610.7 / (1e5 - 610.7);
        assert!(rel(c.saturation_mixing_ratio(1e5, 273.15).unwrap(), oracle) < 1e-15);
        let es = c.es(283.0);
        assert!(rel(c.saturation_mixing_ratio(8.5e4, 283.0).unwrap(), 0.622 * es / (8.5e4 - es)) < 1e-15);
        assert!(c.saturation_mixing_ratio(es * 0.5, 283.0).is_err());
    }

    #[test]
    fn sound_speed_dry_limit() {
        let c = ThermoConstants::default();
        let s = MoistPoint { rho_d: 1.2, p: 1e5, ..Default::default() };
        assert!(rel(c.gamma_m(1.2, 0.0, 0.0, 0.0), (718.0 + 287.05) / 718.0) < 1e-15);
        let oracle = ((718.0 + 287.05) / 718.0 * 1e5 / 1.2f64).sqrt();
        assert!(rel(c.moist_sound_speed(&s).unwrap(), oracle) < 1e-15);
        assert!(c.moist_sound_speed(&MoistPoint::default()).is_err());
    }

    #[test]
    fn sound_speed_moist_is_slower() {
        let c = ThermoConstants::default();
        let dry = c.gamma_m(1.0, 0.0, 0.0, 0.0);
        let moist = c.gamma_m(1.0, 0.02, 0.0, 0.0);
        let num = 718.0 + 0.02 * 1390.0 + 287.05 + 0.02 * 461.51;
        let den = 718.0 + 0.02 * 1390.0;
        assert!(rel(moist, num / den) < 1e-15);
        assert!(moist < dry);
        assert!(c.gamma_m(1.0, 0.0, 0.003, 0.0) < dry);
        assert!(c.gamma_m(1.0, 0.0, 0.0, 0.001) < dry);
        assert!(moist > 1.0);
    }

    #[test]
    fn theta_e_reference_state() {
        let c = ThermoConstants::default();
        let t = 291.3;
        let rho_d = c.p_ref / (c.r_d * t);
        assert!(rel(c.wet_equivalent_potential_temperature(rho_d, 0.0, t, 0.02), t) < 1e-15);
    }

    #[test]
    fn density_potential_temperature_examples() {
        let c = ThermoConstants::default();
        assert_eq!(c.density_potential_temperature(c.p_ref, 280.0, 0.0), 280.0);
        let expect = 260.0 * 2f64.powf(287.05 / 1005.0);
        assert!(rel(c.density_potential_temperature(5e4, 260.0, 0.0), expect) < 1e-15);
        let dry = c.density_potential_temperature(8e4, 270.0, 0.0);
        assert!(rel(c.density_potential_temperature(8e4, 270.0, c.epsilon), 2.0 * dry) < 1e-15);
    }

    #[test]
    fn relative_humidity_saturated_is_one() {
        let c = ThermoConstants::default();
        assert!(rel(c.relative_humidity(0.013, 0.013), 1.0) < 1e-15);
        let f = MoistureFractions::from_densities(&c, 1.0, c.saturation_vapour_density(285.0), 0.0, 0.0, 285.0);
        assert!(rel(f.relative_humidity, 1.0) < 1e-14);
        assert_eq!(f.q_d, 1.0);
    }
}
