//! Hydrostatic base states on a fine uniform z grid.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::solve::bracketed_root;
use crate::error::{Error, Result};
use crate::model::BaseStatePoint;
use crate::thermo::ThermoConstants;

/// Default spacing of the profile grid (m).
pub const DZ_PROFILE: f64 = 10.0;

const T_LO: f64 = 150.0;
const T_HI: f64 = 400.0;
const T_TOL: f64 = 1e-12;

/// Nodal base-state values plus cubic interpolation in z.
#[derive(Debug, Clone, PartialEq)]
pub struct HydrostaticProfile {
    pub dz: f64,
    pub z: Vec<f64>,
    pub p: Vec<f64>,
    pub rho_d: Vec<f64>,
    pub rho_v: Vec<f64>,
    pub rho_c: Vec<f64>,
    pub rho_r: Vec<f64>,
    pub t: Vec<f64>,
    pub e: Vec<f64>,
    pub constants: ThermoConstants,
}

/// Algebraic state at one node, given the pressure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeState {
    pub rho_d: f64,
    pub rho_v: f64,
    pub rho_c: f64,
    pub t: f64,
    /// Density that enters `dp/dz = −ρ_w g`.
    pub weight: f64,
}

/// How the total water enters a saturated θ_e block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaterContent {
    /// Fixed total water mixing ratio; cloud water makes up the difference.
    Total(f64),
    /// Water vapour exactly at saturation and no cloud (`q_w = ρ_vs/ρ_d`).
    SaturatedVapour,
}

/// Solves `p = (ρ_d R_d + ρ_vs R_v) T`, `ρ_vs = e_s(T)/(R_v T)`, `θ_e(ρ_d, ρ_vs, T) = θ_e`
/// for `(ρ_d, ρ_vs, T)` at fixed pressure.
pub fn saturated_theta_e_block(
    c: &ThermoConstants,
    p: f64,
    theta_e: f64,
    water: WaterContent,
    t_guess: f64,
) -> Result<(f64, f64, f64)> {
    if !(p > 0.0) || !theta_e.is_finite() {
        return Err(Error::domain(format!("invalid block input p = {p}, theta_e = {theta_e}")));
    }
    let hi = dry_pressure_limit(c, p)?;
    let state = |t: f64| {
        let es = c.es(t);
        let rho_vs = es / (c.r_v * t);
        let rho_d = (p - es) / (c.r_d * t);
        (rho_d, rho_vs)
    };
    let resid = |t: f64| {
        let (rho_d, rho_vs) = state(t);
        let q_w = match water {
            WaterContent::Total(q) => q,
            WaterContent::SaturatedVapour => rho_vs / rho_d,
        };
        // log form keeps the residual finite close to the upper limit
        let cp = c.c_pd + c.c_l * q_w;
        t.ln() - c.r_d / cp * (rho_d * c.r_d * t / c.p_ref).ln() + c.latent_heat(t) * rho_vs / (rho_d * cp * t)
            - theta_e.ln()
    };
    let t = bracketed_root(resid, T_LO, hi, t_guess, T_TOL, "theta_e block")?;
    let (rho_d, rho_vs) = state(t);
    Ok((rho_d, rho_vs, t))
}

/// Temperature just below the point where `e_s(T)` reaches `p` (no dry air left).
fn dry_pressure_limit(c: &ThermoConstants, p: f64) -> Result<f64> {
    if c.es(T_HI) < 0.999 * p {
        return Ok(T_HI);
    }
    if c.es(T_LO) >= 0.999 * p {
        return Err(Error::domain(format!("pressure {p} Pa below saturation pressure at {T_LO} K")));
    }
    bracketed_root(|t| c.es(t) - 0.999 * p, T_LO, T_HI, f64::NAN, 1e-10, "saturation limit")
}

/// Vapour pressure `e` with relative humidity `h` at pressure `p`: the smaller root of
/// `e² − (p + r e_s + h e_s (1 − r)) e + h e_s p = 0` with `r = R_d / (R_v ε)`,
/// which is `e² − (p + e_s) e + h e_s p` when `ε = R_d / R_v`.
pub fn vapour_pressure_from_humidity(c: &ThermoConstants, p: f64, es: f64, h: f64) -> f64 {
    let r = c.r_d / (c.r_v * c.epsilon);
    let b = p + r * es + h * es * (1.0 - r);
    let disc = (b * b - 4.0 * h * es * p).max(0.0);
    2.0 * h * es * p / (b + disc.sqrt())
}

impl HydrostaticProfile {
    /// Integrates `dp/dz = −ρ_w(z, p) g` with RK4 from `p(0) = p_surface`;
    /// `block(z, p, t_guess)` returns the algebraic state at that height and pressure.
    pub fn integrate<B>(c: &ThermoConstants, z_top: f64, dz: f64, p_surface: f64, block: B) -> Result<Self>
    where
        B: Fn(f64, f64, f64) -> Result<NodeState>,
    {
        if !(z_top > 0.0 && dz > 0.0 && p_surface > 0.0) {
            return Err(Error::config(format!(
                "profile needs positive height, spacing and surface pressure (got {z_top}, {dz}, {p_surface})"
            )));
        }
        let n = (z_top / dz).ceil().max(1.0) as usize;
        let dz = z_top / n as f64;
        let g = c.g;
        let mut prof = Self {
            dz,
            z: Vec::with_capacity(n + 1),
            p: Vec::with_capacity(n + 1),
            rho_d: Vec::with_capacity(n + 1),
            rho_v: Vec::with_capacity(n + 1),
            rho_c: Vec::with_capacity(n + 1),
            rho_r: Vec::with_capacity(n + 1),
            t: Vec::with_capacity(n + 1),
            e: Vec::with_capacity(n + 1),
            constants: *c,
        };
        let with_z = |z: f64, r: Result<NodeState>| r.map_err(|e| Error::domain(format!("profile at z = {z} m: {e}")));
        let mut p = p_surface;
        let mut node = with_z(0.0, block(0.0, p, 288.0))?;
        for i in 0..=n {
            let z = i as f64 * dz;
            prof.push(c, z, p, &node);
            if i == n {
                break;
            }
            let tg = node.t;
            let k1 = -node.weight * g;
            let s2 = with_z(z + 0.5 * dz, block(z + 0.5 * dz, p + 0.5 * dz * k1, tg))?;
            let k2 = -s2.weight * g;
            let s3 = with_z(z + 0.5 * dz, block(z + 0.5 * dz, p + 0.5 * dz * k2, s2.t))?;
            let k3 = -s3.weight * g;
            let s4 = with_z(z + dz, block(z + dz, p + dz * k3, s3.t))?;
            let k4 = -s4.weight * g;
            p += dz / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            let z_next = (i + 1) as f64 * dz;
            node = with_z(z_next, block(z_next, p, s4.t))?;
        }
        Ok(prof)
    }

    fn push(&mut self, c: &ThermoConstants, z: f64, p: f64, s: &NodeState) {
        self.z.push(z);
        self.p.push(p);
        self.rho_d.push(s.rho_d);
        self.rho_v.push(s.rho_v);
        self.rho_c.push(s.rho_c);
        self.rho_r.push(0.0);
        self.t.push(s.t);
        self.e.push(c.internal_energy(s.rho_d, s.rho_v, s.rho_c, 0.0, s.t));
    }

    pub fn z_top(&self) -> f64 {
        *self.z.last().unwrap()
    }

    /// Four-point Lagrange interpolation on the uniform grid.
    fn interp(&self, values: &[f64], z: f64) -> f64 {
        let n = values.len();
        if n < 4 {
            let i = ((z / self.dz).floor().max(0.0) as usize).min(n - 2);
            let s = z / self.dz - i as f64;
            return values[i] * (1.0 - s) + values[i + 1] * s;
        }
        let s = z / self.dz;
        let i0 = (s.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let x = s - i0 as f64;
        let l0 = -(x - 1.0) * (x - 2.0) * (x - 3.0) / 6.0;
        let l1 = x * (x - 2.0) * (x - 3.0) / 2.0;
        let l2 = -x * (x - 1.0) * (x - 3.0) / 2.0;
        let l3 = x * (x - 1.0) * (x - 2.0) / 6.0;
        l0 * values[i0] + l1 * values[i0 + 1] + l2 * values[i0 + 2] + l3 * values[i0 + 3]
    }

    /// Base state at height `z`; `p̄` and `Ē` follow from the interpolated
    /// densities and temperature so the point is exactly consistent with the EOS.
    pub fn at(&self, z: f64) -> BaseStatePoint {
        BaseStatePoint::from_primitives(
            &self.constants,
            self.interp(&self.rho_d, z),
            self.interp(&self.rho_v, z),
            self.interp(&self.rho_c, z),
            self.interp(&self.rho_r, z),
            self.interp(&self.t, z),
        )
    }

    /// Interpolated hydrostatic pressure (as integrated, not recomputed).
    pub fn pressure_at(&self, z: f64) -> f64 {
        self.interp(&self.p, z)
    }

    /// Largest `|dp/dz + ρ g|` over interior nodes (central differences).
    pub fn hydrostatic_residual(&self) -> f64 {
        (1..self.z.len() - 1)
            .map(|i| {
                let dp = (self.p[i + 1] - self.p[i - 1]) / (2.0 * self.dz);
                let rho = self.rho_d[i] + self.rho_v[i] + self.rho_c[i] + self.rho_r[i];
                (dp + rho * self.constants.g).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("z,p,rho_d,rho_v,rho_c,T\n");
        for i in 0..self.z.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.z[i], self.p[i], self.rho_d[i], self.rho_v[i], self.rho_c[i], self.t[i]
            ));
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

/// Saturated base state with constant total water `q_w` and prescribed `θ_e(z)`.
pub fn hydrostatic_saturated_qw<F>(
    c: &ThermoConstants,
    theta_e: F,
    q_w: f64,
    p_surface: f64,
    z_top: f64,
    dz: f64,
) -> Result<HydrostaticProfile>
where
    F: Fn(f64) -> f64,
{
    if !(q_w > 0.0) {
        return Err(Error::config(format!("q_w must be positive, got {q_w}")));
    }
    HydrostaticProfile::integrate(c, z_top, dz, p_surface, |z, p, tg| {
        let (rho_d, rho_vs, t) = saturated_theta_e_block(c, p, theta_e(z), WaterContent::Total(q_w), tg)?;
        let rho_c = q_w * rho_d - rho_vs;
        if rho_c < 0.0 {
            return Err(Error::domain(format!("q_w = {q_w} is below saturation ({})", rho_vs / rho_d)));
        }
        Ok(NodeState { rho_d, rho_v: rho_vs, rho_c, t, weight: (1.0 + q_w) * rho_d })
    })
}

/// Saturated base state without cloud water and prescribed `θ_e(z)`.
pub fn hydrostatic_no_cloud<F>(c: &ThermoConstants, theta_e: F, p_surface: f64, z_top: f64, dz: f64) -> Result<HydrostaticProfile>
where
    F: Fn(f64) -> f64,
{
    HydrostaticProfile::integrate(c, z_top, dz, p_surface, |z, p, tg| {
        let (rho_d, rho_vs, t) = saturated_theta_e_block(c, p, theta_e(z), WaterContent::SaturatedVapour, tg)?;
        Ok(NodeState { rho_d, rho_v: rho_vs, rho_c: 0.0, t, weight: rho_d + rho_vs })
    })
}

/// Parameters of `T̄(z) = T_str + (T_sl − T_str) exp(−z / H_scal)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemperatureProfileParams {
    pub t_sl: f64,
    pub t_str: f64,
    pub h_scal: f64,
}

impl Default for TemperatureProfileParams {
    fn default() -> Self {
        Self { t_sl: 288.15, t_str: 213.15, h_scal: 10_000.0 }
    }
}

impl TemperatureProfileParams {
    pub fn temperature(&self, z: f64) -> f64 {
        self.t_str + (self.t_sl - self.t_str) * (-z / self.h_scal).exp()
    }
}

/// Saturated, cloud-free base state with a prescribed temperature profile.
pub fn hydrostatic_temperature_profile(
    c: &ThermoConstants,
    params: &TemperatureProfileParams,
    p_surface: f64,
    z_top: f64,
    dz: f64,
) -> Result<HydrostaticProfile> {
    if !(params.t_sl > params.t_str && params.t_str > 0.0 && params.h_scal > 0.0) {
        return Err(Error::config("temperature profile needs T_sl > T_str > 0 and H_scal > 0"));
    }
    HydrostaticProfile::integrate(c, z_top, dz, p_surface, |z, p, _| {
        let t = params.temperature(z);
        let es = c.es(t);
        if !(p > es) {
            return Err(Error::domain(format!("pressure {p} Pa below saturation pressure {es} Pa")));
        }
        let rho_vs = es / (c.r_v * t);
        let rho_d = (p - es) / (c.r_d * t);
        Ok(NodeState { rho_d, rho_v: rho_vs, rho_c: 0.0, t, weight: rho_d + rho_vs })
    })
}

/// Base state with constant relative humidity and `θ̄_d = Θ exp(S z)`.
pub fn hydrostatic_relative_humidity(
    c: &ThermoConstants,
    humidity: f64,
    t_surface: f64,
    p_surface: f64,
    stratification: f64,
    z_top: f64,
    dz: f64,
) -> Result<HydrostaticProfile> {
    if !(humidity > 0.0 && humidity < 1.0) {
        return Err(Error::config(format!("relative humidity must lie in (0, 1), got {humidity}")));
    }
    let theta0 = c.dry_potential_temperature(p_surface, t_surface);
    HydrostaticProfile::integrate(c, z_top, dz, p_surface, |z, p, _| {
        let theta = theta0 * (stratification * z).exp();
        let t = theta / (c.p_ref / p).powf(c.r_d / c.c_pd);
        let e = vapour_pressure_from_humidity(c, p, c.es(t), humidity);
        let rho_v = e / (c.r_v * t);
        let rho_d = (p - e) / (c.r_d * t);
        Ok(NodeState { rho_d, rho_v, rho_c: 0.0, t, weight: rho_d + rho_v })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c() -> ThermoConstants {
        ThermoConstants::default()
    }

    #[test]
    fn humidity_quadratic_root() {
        let c = c();
        let (p, t, h) = (8.5e4, 283.0, 0.2);
        let es = c.es(t);
        let e = vapour_pressure_from_humidity(&c, p, es, h);
        let rho_v = e / (c.r_v * t);
        let rho_d = (p - e) / (c.r_d * t);
        let q_vs = c.saturation_vapour_density(t) / rho_d;
        assert!((c.relative_humidity(rho_v / rho_d, q_vs) - h).abs() < 1e-13);
        assert!((vapour_pressure_from_humidity(&c, p, es, 1.0) - es).abs() < 1e-9);
    }

    #[test]
    fn saturated_profile_basic_properties() {
        let c = c();
        let prof = hydrostatic_saturated_qw(&c, |_| 320.0, 0.02, 1e5, 2000.0, DZ_PROFILE).unwrap();
        assert_eq!(prof.p[0], 1e5);
        assert!(prof.p.windows(2).all(|w| w[1] < w[0]));
        for i in 0..prof.z.len() {
            let p = c.pressure(prof.rho_d[i], prof.rho_v[i], prof.t[i]);
            assert!(((p - prof.p[i]) / prof.p[i]).abs() < 1e-10);
            assert!((prof.rho_v[i] - c.saturation_vapour_density(prof.t[i])).abs() < 1e-14);
            assert!(((prof.rho_v[i] + prof.rho_c[i]) / prof.rho_d[i] - 0.02).abs() < 1e-12);
            let th = c.wet_equivalent_potential_temperature(prof.rho_d[i], prof.rho_v[i], prof.t[i], 0.02);
            assert!((th - 320.0).abs() < 1e-9);
        }
        // p_ref / H with H = R_d T / g ≈ 8.4 km
        assert!(prof.hydrostatic_residual() < 1e-6 * 1e5 / 8.4e3);
    }

    #[test]
    fn interpolation_is_exact_at_nodes_and_consistent() {
        let c = c();
        let prof = hydrostatic_temperature_profile(&c, &TemperatureProfileParams::default(), 1e5, 1000.0, 10.0).unwrap();
        for i in [0, 7, 50, 100] {
            let b = prof.at(prof.z[i]);
            assert!((b.t_bar - prof.t[i]).abs() < 1e-12);
            assert!(((b.p_bar - prof.p[i]) / prof.p[i]).abs() < 1e-12);
        }
        let b = prof.at(123.4);
        assert!((b.t_bar - TemperatureProfileParams::default().temperature(123.4)).abs() < 1e-7);
    }

    #[test]
    fn no_cloud_profile_has_no_cloud() {
        let c = c();
        let prof = hydrostatic_no_cloud(&c, |z| 300.0 * (1e-4 * z / 9.81).exp(), 1e5, 1000.0, 10.0).unwrap();
        assert!(prof.rho_c.iter().all(|&v| v == 0.0));
        assert_eq!(prof.p[0], 1e5);
    }

    #[test]
    fn humidity_profile_surface() {
        let c = c();
        let prof = hydrostatic_relative_humidity(&c, 0.2, 283.0, 8.5e4, 1.3e-5, 500.0, 10.0).unwrap();
        assert_eq!(prof.p[0], 8.5e4);
        assert!((prof.t[0] - 283.0).abs() < 1e-12);
        for i in 0..prof.z.len() {
            let q_vs = c.saturation_vapour_density(prof.t[i]) / prof.rho_d[i];
            assert!((c.relative_humidity(prof.rho_v[i] / prof.rho_d[i], q_vs) - 0.2).abs() < 1e-10);
        }
    }
}
