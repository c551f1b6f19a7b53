//! The moist Euler system in perturbation form, written as a balance law
//! `∂U/∂t + ∇·F(U) = G(U)` with `U = (ρ_d', ρ_m', ρ_r', ρu, ρw, E')`.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::microphysics::{self, MicrophysicsParams, SourceRates};
use crate::thermo::ThermoConstants;

/// Number of conserved components in two space dimensions.
pub const NCOMP: usize = 6;
pub const RHO_D: usize = 0;
pub const RHO_M: usize = 1;
pub const RHO_R: usize = 2;
pub const MOM_X: usize = 3;
pub const MOM_Z: usize = 4;
pub const ENERGY: usize = 5;

/// Number of secondary (recovered) components stored as fields: `ρ_v', ρ_c', T'`.
pub const NSECONDARY: usize = 3;

/// Names of the conserved components, in storage order.
pub const COMPONENT_NAMES: [&str; NCOMP] = ["rho_d_pert", "rho_m_pert", "rho_r_pert", "mom_x", "mom_z", "E_pert"];

/// Conserved perturbation state at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConservedState {
    pub rho_d_pert: f64,
    pub rho_m_pert: f64,
    pub rho_r_pert: f64,
    pub momentum: [f64; 2],
    pub energy_pert: f64,
}

impl ConservedState {
    pub fn from_slice(u: &[f64]) -> Self {
        Self {
            rho_d_pert: u[RHO_D],
            rho_m_pert: u[RHO_M],
            rho_r_pert: u[RHO_R],
            momentum: [u[MOM_X], u[MOM_Z]],
            energy_pert: u[ENERGY],
        }
    }

    pub fn to_array(&self) -> [f64; NCOMP] {
        [
            self.rho_d_pert,
            self.rho_m_pert,
            self.rho_r_pert,
            self.momentum[0],
            self.momentum[1],
            self.energy_pert,
        ]
    }

    /// Density perturbation `ρ' = ρ_d' + ρ_m' + ρ_r'`.
    #[inline]
    pub fn density_pert(&self) -> f64 {
        self.rho_d_pert + self.rho_m_pert + self.rho_r_pert
    }
}

/// Hydrostatic base state sampled at one height.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BaseStatePoint {
    pub rho_d_bar: f64,
    pub rho_v_bar: f64,
    pub rho_c_bar: f64,
    pub rho_m_bar: f64,
    pub rho_r_bar: f64,
    pub rho_bar: f64,
    pub p_bar: f64,
    pub e_bar: f64,
    pub t_bar: f64,
}

impl BaseStatePoint {
    /// Builds a base point whose pressure and energy are computed from the densities and
    /// temperature, so the point is exactly consistent with the equation of state.
    pub fn from_primitives(c: &ThermoConstants, rho_d: f64, rho_v: f64, rho_c: f64, rho_r: f64, t: f64) -> Self {
        Self {
            rho_d_bar: rho_d,
            rho_v_bar: rho_v,
            rho_c_bar: rho_c,
            rho_m_bar: rho_v + rho_c,
            rho_r_bar: rho_r,
            rho_bar: rho_d + rho_v + rho_c + rho_r,
            p_bar: c.pressure(rho_d, rho_v, t),
            e_bar: c.internal_energy(rho_d, rho_v, rho_c, rho_r, t),
            t_bar: t,
        }
    }
}

/// Quantities derived from the conserved state that the flux and sources need.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SecondaryState {
    pub rho_v: f64,
    pub rho_c: f64,
    pub t: f64,
    pub p_pert: f64,
    pub u: [f64; 2],
    pub v_r: f64,
    pub c_m: f64,
}

/// Boundary treatment for non-periodic facets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    SlipWall,
}

impl FromStr for BoundaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slip_wall" | "slip" | "wall" => Ok(BoundaryKind::SlipWall),
            other => Err(Error::config(format!("unknown boundary kind '{other}'"))),
        }
    }
}

/// Reflects the momentum across the wall, `m⁺ = m⁻ - 2 (m⁻·n) n`; everything else is copied.
#[inline]
pub fn boundary_state(u_minus: &ConservedState, n: [f64; 2], kind: BoundaryKind) -> ConservedState {
    match kind {
        BoundaryKind::SlipWall => {
            let mn = u_minus.momentum[0] * n[0] + u_minus.momentum[1] * n[1];
            ConservedState {
                momentum: [u_minus.momentum[0] - 2.0 * mn * n[0], u_minus.momentum[1] - 2.0 * mn * n[1]],
                ..*u_minus
            }
        }
    }
}

/// Physical flux tensor, one row per conserved component, columns `(x, z)`.
pub type FluxTensor = [[f64; 2]; NCOMP];

/// The perturbation-form moist system with optional warm-rain microphysics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoistModel {
    pub thermo: ThermoConstants,
    pub micro: MicrophysicsParams,
    /// When false, rain is neither produced nor sedimented.
    pub rain: bool,
}

/// Total densities at a point.
#[derive(Debug, Clone, Copy)]
struct Totals {
    rho_d: f64,
    rho_m: f64,
    rho_r: f64,
    rho: f64,
}

#[inline]
fn totals(u: &ConservedState, base: &BaseStatePoint) -> Totals {
    let rho_d = base.rho_d_bar + u.rho_d_pert;
    let rho_m = base.rho_m_bar + u.rho_m_pert;
    let rho_r = base.rho_r_bar + u.rho_r_pert;
    Totals { rho_d, rho_m, rho_r, rho: rho_d + rho_m + rho_r }
}

impl MoistModel {
    pub fn new(thermo: ThermoConstants, micro: MicrophysicsParams, rain: bool) -> Self {
        Self { thermo, micro, rain }
    }

    #[inline]
    fn fall_speed(&self, rho_v: f64, rho_c: f64, rho_r: f64) -> f64 {
        if self.rain {
            microphysics::terminal_rain_velocity(&self.micro, rho_v, rho_c, rho_r)
        } else {
            0.0
        }
    }

    /// Solves the saturation adjustment at one point and fills in the remaining secondaries.
    pub fn recover_secondary(&self, u: &ConservedState, base: &BaseStatePoint, t_guess: f64) -> Result<SecondaryState> {
        self.recover_secondary_counted(u, base, t_guess).map(|(s, _)| s)
    }

    /// As [`MoistModel::recover_secondary`], also returning the adjustment iteration count.
    pub fn recover_secondary_counted(
        &self,
        u: &ConservedState,
        base: &BaseStatePoint,
        t_guess: f64,
    ) -> Result<(SecondaryState, usize)> {
        let tot = totals(u, base);
        if !(tot.rho > 0.0) {
            return Err(Error::domain(format!("total density must be positive, got {}", tot.rho)));
        }
        let kinetic = 0.5 * (u.momentum[0] * u.momentum[0] + u.momentum[1] * u.momentum[1]) / tot.rho;
        let rho_e = base.e_bar + u.energy_pert - kinetic;
        let rec = microphysics::condensation_recover(
            &self.thermo,
            &self.micro,
            tot.rho_d,
            tot.rho_m,
            tot.rho_r,
            rho_e,
            t_guess,
        )?;
        Ok((self.complete_secondary(u, base, rec.rho_v, rec.rho_c, rec.t), rec.iterations))
    }

    /// Secondary state from already-known `(ρ_v, ρ_c, T)`, e.g. evaluated from projected fields.
    #[inline]
    pub fn complete_secondary(
        &self,
        u: &ConservedState,
        base: &BaseStatePoint,
        rho_v: f64,
        rho_c: f64,
        t: f64,
    ) -> SecondaryState {
        let tot = totals(u, base);
        let vel = [u.momentum[0] / tot.rho, u.momentum[1] / tot.rho];
        let p = self.thermo.pressure(tot.rho_d, rho_v, t);
        // ρ_v + ρ_c may differ slightly from ρ_m for projected fields
        let gamma = self.thermo.gamma_m(tot.rho_d, rho_v, rho_c, tot.rho_r.max(0.0));
        let c_m = (gamma * p.max(0.0) / tot.rho).sqrt();
        SecondaryState {
            rho_v,
            rho_c,
            t,
            p_pert: p - base.p_bar,
            u: vel,
            v_r: self.fall_speed(rho_v, rho_c, tot.rho_r),
            c_m,
        }
    }

    /// Secondary state from the projected perturbations `(ρ_v', ρ_c', T')`.
    #[inline]
    pub fn secondary_from_perturbations(
        &self,
        u: &ConservedState,
        base: &BaseStatePoint,
        aux: &[f64],
    ) -> SecondaryState {
        self.complete_secondary(u, base, base.rho_v_bar + aux[0], base.rho_c_bar + aux[1], base.t_bar + aux[2])
    }

    /// Physical flux of the perturbation system.
    #[inline]
    pub fn physical_flux(&self, u: &ConservedState, s: &SecondaryState, base: &BaseStatePoint) -> FluxTensor {
        let tot = totals(u, base);
        let [ux, uz] = s.u;
        let rain_flux = tot.rho_r * s.v_r;
        let mut f = [[0.0; 2]; NCOMP];
        f[RHO_D] = [tot.rho_d * ux, tot.rho_d * uz];
        f[RHO_M] = [tot.rho_m * ux, tot.rho_m * uz];
        f[RHO_R] = [tot.rho_r * ux, tot.rho_r * (uz - s.v_r)];
        f[MOM_X] = [tot.rho * ux * ux + s.p_pert, tot.rho * ux * uz - rain_flux * ux];
        f[MOM_Z] = [tot.rho * uz * ux, tot.rho * uz * uz - rain_flux * uz + s.p_pert];
        let enthalpy = base.e_bar + u.energy_pert + base.p_bar + s.p_pert;
        let rain_energy = (self.thermo.c_l * (s.t - self.thermo.t_ref) + 0.5 * (ux * ux + uz * uz)) * rain_flux;
        f[ENERGY] = [enthalpy * ux, enthalpy * uz - rain_energy];
        f
    }

    /// Gravity and microphysics sources.
    #[inline]
    pub fn source_vector(&self, u: &ConservedState, s: &SecondaryState, base: &BaseStatePoint) -> [f64; NCOMP] {
        let g = self.thermo.g;
        let rho_pert = u.density_pert();
        let mut out = [0.0; NCOMP];
        if self.rain {
            let tot = totals(u, base);
            let rates = SourceRates::evaluate(&self.thermo, &self.micro, s.t, s.rho_v, s.rho_c, tot.rho_r, tot.rho);
            let prod = rates.rain_production();
            out[RHO_M] = -prod;
            out[RHO_R] = prod;
        }
        out[MOM_Z] = -rho_pert * g;
        out[ENERGY] = -(base.rho_bar + rho_pert) * g * s.u[1];
        out
    }

    /// One-sided wave-speed bound `|u·n| + |v_r e_z·n| + c_m`.
    #[inline]
    pub fn wave_speed(&self, s: &SecondaryState, n: [f64; 2]) -> f64 {
        (s.u[0] * n[0] + s.u[1] * n[1]).abs() + (s.v_r * n[1]).abs() + s.c_m
    }

    #[inline]
    pub fn max_wave_speed(&self, s_minus: &SecondaryState, s_plus: &SecondaryState, n: [f64; 2]) -> f64 {
        self.wave_speed(s_minus, n).max(self.wave_speed(s_plus, n))
    }

    /// Lax-Friedrichs numerical flux in direction `n` (from the minus to the plus side).
    #[inline]
    pub fn lax_friedrichs_flux(
        &self,
        u_minus: &ConservedState,
        s_minus: &SecondaryState,
        u_plus: &ConservedState,
        s_plus: &SecondaryState,
        base: &BaseStatePoint,
        n: [f64; 2],
    ) -> [f64; NCOMP] {
        let fm = self.physical_flux(u_minus, s_minus, base);
        let fp = self.physical_flux(u_plus, s_plus, base);
        let lambda = self.max_wave_speed(s_minus, s_plus, n);
        let um = u_minus.to_array();
        let up = u_plus.to_array();
        let mut out = [0.0; NCOMP];
        for c in 0..NCOMP {
            let mean = 0.5 * ((fm[c][0] + fp[c][0]) * n[0] + (fm[c][1] + fp[c][1]) * n[1]);
            out[c] = mean + 0.5 * lambda * (um[c] - up[c]);
        }
        out
    }
}
