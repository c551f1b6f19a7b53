//! The semi-discrete moist operator: residual assembly, secondary recovery and rain outflow.

use rayon::prelude::*;
use serde::Serialize;

use crate::dg::{AlphaField, BoundaryTag, DgField, DgSpace, FacetScratch, SipParams};
use crate::error::{Error, Location, Result};
use crate::model::{
    boundary_state, BaseStatePoint, BoundaryKind, ConservedState, MoistModel, SecondaryState, ENERGY, NCOMP,
    NSECONDARY, RHO_D, RHO_M, RHO_R,
};
use crate::timestep::Evolution;

/// Diffusion kind per conserved component: rain uses `|u − v_r e_z|`, the rest `|u|`.
pub const VISCOSITY_KIND: [usize; NCOMP] = [0, 0, 1, 0, 0, 0];

/// Extrema of the recovered fields over all volume quadrature points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointExtrema {
    pub max_speed: f64,
    pub min_t: f64,
    pub max_t: f64,
    pub min_rho_v: f64,
    pub max_rho_v: f64,
    pub min_rho_c: f64,
    pub max_rho_c: f64,
    pub min_rho_r: f64,
    pub max_rho_r: f64,
    pub max_recovery_iterations: usize,
}

impl PointExtrema {
    fn empty() -> Self {
        Self {
            max_speed: 0.0,
            min_t: f64::INFINITY,
            max_t: f64::NEG_INFINITY,
            min_rho_v: f64::INFINITY,
            max_rho_v: f64::NEG_INFINITY,
            min_rho_c: f64::INFINITY,
            max_rho_c: f64::NEG_INFINITY,
            min_rho_r: f64::INFINITY,
            max_rho_r: f64::NEG_INFINITY,
            max_recovery_iterations: 0,
        }
    }

    fn add(&mut self, s: &SecondaryState, rho_r: f64, iterations: usize) {
        self.max_speed = self.max_speed.max((s.u[0] * s.u[0] + s.u[1] * s.u[1]).sqrt());
        self.min_t = self.min_t.min(s.t);
        self.max_t = self.max_t.max(s.t);
        self.min_rho_v = self.min_rho_v.min(s.rho_v);
        self.max_rho_v = self.max_rho_v.max(s.rho_v);
        self.min_rho_c = self.min_rho_c.min(s.rho_c);
        self.max_rho_c = self.max_rho_c.max(s.rho_c);
        self.min_rho_r = self.min_rho_r.min(rho_r);
        self.max_rho_r = self.max_rho_r.max(rho_r);
        self.max_recovery_iterations = self.max_recovery_iterations.max(iterations);
    }

    fn merge(mut self, o: Self) -> Self {
        self.max_speed = self.max_speed.max(o.max_speed);
        self.min_t = self.min_t.min(o.min_t);
        self.max_t = self.max_t.max(o.max_t);
        self.min_rho_v = self.min_rho_v.min(o.min_rho_v);
        self.max_rho_v = self.max_rho_v.max(o.max_rho_v);
        self.min_rho_c = self.min_rho_c.min(o.min_rho_c);
        self.max_rho_c = self.max_rho_c.max(o.max_rho_c);
        self.min_rho_r = self.min_rho_r.min(o.min_rho_r);
        self.max_rho_r = self.max_rho_r.max(o.max_rho_r);
        self.max_recovery_iterations = self.max_recovery_iterations.max(o.max_recovery_iterations);
        self
    }
}

/// Everything a run needs to evaluate `L(U)`.
pub struct MoistSolver {
    pub space: DgSpace,
    pub model: MoistModel,
    /// Base state per z-slot of [`DgSpace::z_levels`].
    pub base: Vec<BaseStatePoint>,
    /// Projected secondary perturbations `(ρ_v', ρ_c', T')`.
    pub aux: DgField,
    pub gamma: f64,
    pub sip: SipParams,
    pub alpha: AlphaField,
    pub extrema: PointExtrema,
    /// Accumulated rain outflow through the bottom boundary (kg/m).
    pub fallout: f64,
    /// Bottom facets and their accumulated outflow.
    pub bottom_facets: Vec<usize>,
    pub fallout_profile: Vec<f64>,
    last_bottom_flux: Vec<f64>,
    facet_scratch: FacetScratch,
    sip_scratch: FacetScratch,
}

impl MoistSolver {
    pub fn new(
        space: DgSpace,
        model: MoistModel,
        base_at: impl Fn(f64) -> BaseStatePoint,
        gamma: f64,
        sip: SipParams,
    ) -> Result<Self> {
        if !(gamma >= 0.0) {
            return Err(Error::config(format!("artificial viscosity scale must be non-negative, got {gamma}")));
        }
        let base: Vec<BaseStatePoint> = space.z_levels().into_iter().map(base_at).collect();
        if let Some(b) = base.iter().find(|b| !(b.rho_d_bar > 0.0 && b.p_bar > 0.0 && b.t_bar > 0.0)) {
            return Err(Error::domain(format!("invalid base state {b:?}")));
        }
        let bottom_facets: Vec<usize> = space
            .mesh
            .boundary_facets()
            .filter(|(_, f)| f.boundary == Some(BoundaryTag::Bottom))
            .map(|(id, _)| id)
            .collect();
        let n_bottom = bottom_facets.len();
        let alpha = AlphaField::zeros(&space.mesh, 2);
        let aux = space.zeros(NSECONDARY);
        Ok(Self {
            space,
            model,
            base,
            aux,
            gamma,
            sip,
            alpha,
            extrema: PointExtrema::empty(),
            fallout: 0.0,
            bottom_facets,
            fallout_profile: vec![0.0; n_bottom],
            last_bottom_flux: vec![0.0; n_bottom],
            facet_scratch: FacetScratch::default(),
            sip_scratch: FacetScratch::default(),
        })
    }

    /// Projects the pointwise initial perturbation `init(x, z, base)` and recovers the secondaries.
    pub fn initial_field<F>(&mut self, init: F) -> Result<DgField>
    where
        F: Fn(f64, f64, &BaseStatePoint) -> Result<ConservedState> + Sync,
    {
        let base = &self.base;
        let u = self.space.l2_project(NCOMP, |pt, out| {
            let s = init(pt.x, pt.z, &base[pt.zslot]).map_err(|e| {
                e.at(Location { element: pt.element, point: pt.q, x: pt.x, z: pt.z })
            })?;
            out.copy_from_slice(&s.to_array());
            Ok(())
        })?;
        self.after_stage(&u)?;
        Ok(u)
    }

    /// `∫ ρ̄_d` and `∫ (ρ̄_m + ρ̄_r)` over the domain.
    pub fn base_masses(&self) -> (f64, f64) {
        let re = &self.space.re;
        let mut dry = 0.0;
        let mut water = 0.0;
        for (e, el) in self.space.mesh.elements.iter().enumerate() {
            let jac = el.jacobian();
            for q in 0..re.nq {
                let b = &self.base[self.space.volume_zslot(e, q)];
                dry += re.vol_weights[q] * jac * b.rho_d_bar;
                water += re.vol_weights[q] * jac * (b.rho_m_bar + b.rho_r_bar);
            }
        }
        (dry, water)
    }

    /// Secondary state at each volume point of element `e` from the projected secondaries.
    pub fn element_secondaries(&self, u: &DgField, e: usize) -> Vec<(ConservedState, SecondaryState, usize)> {
        let re = &self.space.re;
        let mut uq = vec![0.0; re.nq * NCOMP];
        let mut aq = vec![0.0; re.nq * NSECONDARY];
        self.space.eval_volume(u, e, &mut uq);
        self.space.eval_volume(&self.aux, e, &mut aq);
        (0..re.nq)
            .map(|q| {
                let zs = self.space.volume_zslot(e, q);
                let cs = ConservedState::from_slice(&uq[q * NCOMP..(q + 1) * NCOMP]);
                let s = self.model.secondary_from_perturbations(
                    &cs,
                    &self.base[zs],
                    &aq[q * NSECONDARY..(q + 1) * NSECONDARY],
                );
                (cs, s, zs)
            })
            .collect()
    }

    /// Largest wave speed `|u| + |v_r| + c_m` over the volume points of every element.
    pub fn element_wave_speeds(&self, u: &DgField) -> Vec<f64> {
        (0..self.space.n_elements())
            .into_par_iter()
            .map(|e| {
                self.element_secondaries(u, e)
                    .iter()
                    .map(|(_, s, _)| s.u[0].hypot(s.u[1]) + s.v_r.abs() + s.c_m)
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    /// Pointwise saturation adjustment at the volume points, L² projection of the
    /// secondary perturbations, and the artificial-viscosity coefficient.
    pub fn recover(&mut self, u: &DgField) -> Result<()> {
        let space = &self.space;
        let re = &space.re;
        let (nq, nm) = (re.nq, re.nm);
        let model = &self.model;
        let base = &self.base;
        let old = &self.aux;
        let mut aux = space.zeros(NSECONDARY);
        let mut speeds = vec![0.0; space.n_elements() * 2];
        let extrema = aux
            .coeffs
            .par_chunks_mut(NSECONDARY * nm)
            .zip(speeds.par_chunks_mut(2))
            .enumerate()
            .map_init(
                || (vec![0.0; nq * NCOMP], vec![0.0; nq * NSECONDARY]),
                |(uq, aq), (e, (coef, sp))| -> Result<PointExtrema> {
                    space.eval_volume(u, e, uq);
                    space.eval_volume(old, e, aq);
                    let mut ext = PointExtrema::empty();
                    let jac = space.mesh.elements[e].jacobian();
                    let mut norms = [0.0; 2];
                    for q in 0..nq {
                        let b = &base[space.volume_zslot(e, q)];
                        let up = &uq[q * NCOMP..(q + 1) * NCOMP];
                        let cs = ConservedState::from_slice(up);
                        let (s, iterations) = if up.iter().all(|&v| v == 0.0) {
                            // the base state is its own recovery
                            (model.complete_secondary(&cs, b, b.rho_v_bar, b.rho_c_bar, b.t_bar), 0)
                        } else {
                            let t_guess = b.t_bar + aq[q * NSECONDARY + 2];
                            model.recover_secondary_counted(&cs, b, t_guess).map_err(|err| {
                                let pt = space.volume_point(e, q);
                                err.at(Location { element: e, point: q, x: pt.x, z: pt.z })
                            })?
                        };
                        ext.add(&s, b.rho_r_bar + cs.rho_r_pert, iterations);
                        let vals = [s.rho_v - b.rho_v_bar, s.rho_c - b.rho_c_bar, s.t - b.t_bar];
                        let w = re.vol_weights[q];
                        let phi = &re.vol_phi[q * nm..(q + 1) * nm];
                        for (c, v) in vals.iter().enumerate() {
                            for (r, p) in coef[c * nm..(c + 1) * nm].iter_mut().zip(phi) {
                                *r += w * v * p;
                            }
                        }
                        let uz_rain = s.u[1] - s.v_r;
                        norms[0] += w * jac * (s.u[0] * s.u[0] + s.u[1] * s.u[1]);
                        norms[1] += w * jac * (s.u[0] * s.u[0] + uz_rain * uz_rain);
                    }
                    sp[0] = 0.5 * self.gamma * norms[0].sqrt();
                    sp[1] = 0.5 * self.gamma * norms[1].sqrt();
                    Ok(ext)
                },
            )
            .try_reduce(PointExtrema::empty, |a, b| Ok(a.merge(b)))?;
        self.aux = aux;
        self.extrema = extrema;
        self.alpha = if self.gamma > 0.0 {
            AlphaField::from_element_values(&space.mesh, 2, speeds)
        } else {
            AlphaField::zeros(&space.mesh, 2)
        };
        Ok(())
    }

    /// Residual `r(U)` with `M dU/dt = −r`.
    pub fn residual(&mut self, u: &DgField, r: &mut DgField) -> Result<()> {
        r.fill(0.0);
        let model = &self.model;
        let base = &self.base;
        self.space.volume_residual(
            u,
            Some(&self.aux),
            |pt, uq, aq, flux, src| {
                let b = &base[pt.zslot];
                let cs = ConservedState::from_slice(uq);
                let s = model.secondary_from_perturbations(&cs, b, aq);
                flux.copy_from_slice(&model.physical_flux(&cs, &s, b));
                src.copy_from_slice(&model.source_vector(&cs, &s, b));
                Ok(())
            },
            r,
        )?;
        self.space.compute_facet_fluxes(
            u,
            Some(&self.aux),
            |pt, um, am, plus, out| {
                let b = &base[pt.zslot];
                let cm = ConservedState::from_slice(um);
                let mut sm = model.secondary_from_perturbations(&cm, b, am);
                let flux = match plus {
                    Some((up, ap)) => {
                        let cp = ConservedState::from_slice(up);
                        let sp = model.secondary_from_perturbations(&cp, b, ap);
                        model.lax_friedrichs_flux(&cm, &sm, &cp, &sp, b, pt.normal)
                    }
                    None => {
                        // rain only leaves through the bottom; other walls are closed to it
                        let bottom = pt.boundary == Some(BoundaryTag::Bottom);
                        if !bottom {
                            sm.v_r = 0.0;
                        }
                        let cp = boundary_state(&cm, pt.normal, BoundaryKind::SlipWall);
                        let sp = model.complete_secondary(&cp, b, sm.rho_v, sm.rho_c, sm.t);
                        let sp = SecondaryState { v_r: sm.v_r, ..sp };
                        model.lax_friedrichs_flux(&cm, &sm, &cp, &sp, b, pt.normal)
                    }
                };
                out.copy_from_slice(&flux);
                Ok(())
            },
            &mut self.facet_scratch,
        )?;
        let nq1 = self.space.re.nq1;
        let w1 = &self.space.re.weights1;
        let values = &self.facet_scratch.values;
        for (slot, &id) in self.bottom_facets.iter().enumerate() {
            let half_len = 0.5 * self.space.mesh.facets[id].length;
            self.last_bottom_flux[slot] =
                (0..nq1).map(|qf| half_len * w1[qf] * values[(id * nq1 + qf) * NCOMP + RHO_R]).sum();
        }
        self.space.gather_facet_fluxes(&self.facet_scratch.values, NCOMP, r);
        if self.gamma > 0.0 {
            self.space.sip_residual(u, &self.alpha, &VISCOSITY_KIND, &self.sip, &mut self.sip_scratch, r)?;
        }
        Ok(())
    }

    /// Total dry and water masses including the base state.
    pub fn masses(&self, u: &DgField) -> (f64, f64) {
        let (dry0, water0) = self.base_masses();
        let s = &self.space;
        (dry0 + s.integrate(u, RHO_D), water0 + s.integrate(u, RHO_M) + s.integrate(u, RHO_R))
    }

    pub fn l2_perturbations(&self, u: &DgField) -> (f64, f64) {
        (self.space.l2_norm(u, RHO_D), self.space.l2_norm(u, ENERGY))
    }

    /// Rain flux integrated over the bottom facets by the most recent residual.
    pub fn last_bottom_outflow(&self) -> f64 {
        self.last_bottom_flux.iter().sum()
    }

    /// Centre x coordinate of each bottom facet, aligned with [`MoistSolver::fallout_profile`].
    pub fn bottom_facet_centres(&self) -> Vec<f64> {
        self.bottom_facets
            .iter()
            .map(|&id| {
                let f = &self.space.mesh.facets[id];
                let el = &self.space.mesh.elements[f.minus];
                el.x0 + 0.5 * el.hx
            })
            .collect()
    }
}

impl Evolution for MoistSolver {
    fn rate(&mut self, u: &DgField, du: &mut DgField) -> Result<()> {
        self.residual(u, du)?;
        self.space.apply_inverse_mass(du)?;
        du.coeffs.iter_mut().for_each(|v| *v = -*v);
        Ok(())
    }

    fn after_stage(&mut self, u: &DgField) -> Result<()> {
        if let Some((e, c)) = u.first_non_finite() {
            return Err(Error::State(format!("component {c} of element {e} is not finite")));
        }
        self.recover(u)
    }

    fn commit_stage_flux(&mut self, dt_weight: f64) {
        for (acc, f) in self.fallout_profile.iter_mut().zip(&self.last_bottom_flux) {
            *acc += dt_weight * f;
        }
        self.fallout += dt_weight * self.last_bottom_flux.iter().sum::<f64>();
    }
}
