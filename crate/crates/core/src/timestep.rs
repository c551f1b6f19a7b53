//! Explicit time integration, sponge relaxation and step-size estimation.

use serde::{Deserialize, Serialize};

use crate::dg::{DgField, DgSpace};
use crate::error::{Error, Result};

/// Semi-discrete system `du/dt = L(u) = M⁻¹(−r(u))`.
pub trait Evolution {
    /// Writes `L(u)` into `du`, using whatever auxiliary state the last
    /// [`Evolution::after_stage`] call left behind.
    fn rate(&mut self, u: &DgField, du: &mut DgField) -> Result<()>;

    /// Called with every new stage value (secondary recovery).
    fn after_stage(&mut self, _u: &DgField) -> Result<()> {
        Ok(())
    }

    /// The most recent [`Evolution::rate`] enters the step with weight `dt_weight`
    /// (used to accumulate boundary outflow consistently with the update).
    fn commit_stage_flux(&mut self, _dt_weight: f64) {}
}

/// Scratch storage for the Runge-Kutta stages.
#[derive(Debug, Clone)]
pub struct RkWorkspace {
    u0: DgField,
    du: DgField,
}

impl RkWorkspace {
    pub fn new(template: &DgField) -> Self {
        Self { u0: template.clone(), du: template.clone() }
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!("time step must be positive, got {dt}")))
    }
}

/// `uⁿ = uⁿ⁻¹ + dt L(uⁿ⁻¹)`
pub fn explicit_euler_step<E: Evolution>(ev: &mut E, u: &mut DgField, dt: f64, ws: &mut RkWorkspace) -> Result<()> {
    check_dt(dt)?;
    ev.rate(u, &mut ws.du)?;
    ev.commit_stage_flux(dt);
    u.axpby(1.0, dt, &ws.du);
    ev.after_stage(u)
}

/// Four-stage, third-order SSP Runge-Kutta step:
/// `u¹ = uⁿ + dt/2 L(uⁿ)`, `u² = u¹ + dt/2 L(u¹)`,
/// `u³ = 2/3 uⁿ + 1/3 u² + dt/6 L(u²)`, `uⁿ⁺¹ = u³ + dt/2 L(u³)`.
pub fn ssprk43_step<E: Evolution>(ev: &mut E, u: &mut DgField, dt: f64, ws: &mut RkWorkspace) -> Result<()> {
    check_dt(dt)?;
    ws.u0.coeffs.copy_from_slice(&u.coeffs);
    // stage rates enter uⁿ⁺¹ with weights 1/6, 1/6, 1/6, 1/2
    ev.rate(u, &mut ws.du)?;
    ev.commit_stage_flux(dt / 6.0);
    u.axpby(1.0, 0.5 * dt, &ws.du);
    ev.after_stage(u)?;

    ev.rate(u, &mut ws.du)?;
    ev.commit_stage_flux(dt / 6.0);
    u.axpby(1.0, 0.5 * dt, &ws.du);
    ev.after_stage(u)?;

    ev.rate(u, &mut ws.du)?;
    ev.commit_stage_flux(dt / 6.0);
    u.axpby(1.0 / 3.0, 2.0 / 3.0, &ws.u0);
    u.axpby(1.0, dt / 6.0, &ws.du);
    ev.after_stage(u)?;

    ev.rate(u, &mut ws.du)?;
    ev.commit_stage_flux(0.5 * dt);
    u.axpby(1.0, 0.5 * dt, &ws.du);
    ev.after_stage(u)
}

/// Upper relaxation layer `δ(z) = α/2 (1 − cos(π (z − z_D)/(z_T − z_D)))` for `z ≥ z_D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpongeLayer {
    pub z_d: f64,
    pub z_t: f64,
    pub alpha: f64,
}

impl SpongeLayer {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config(format!("sponge alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if !(self.z_d < self.z_t) {
            return Err(Error::config(format!("sponge needs z_D < z_T, got {} >= {}", self.z_d, self.z_t)));
        }
        Ok(())
    }

    #[inline]
    pub fn delta(&self, z: f64) -> f64 {
        if z <= self.z_d {
            0.0
        } else {
            let s = ((z - self.z_d) / (self.z_t - self.z_d)).min(1.0);
            0.5 * self.alpha * (1.0 - (std::f64::consts::PI * s).cos())
        }
    }
}

/// `U ← Π[(1 − δ) U]`: relaxes perturbation fields towards zero by L² projection.
pub fn apply_sponge(space: &DgSpace, u: &mut DgField, sponge: &SpongeLayer) -> Result<()> {
    let nc = u.n_comp;
    let nm = space.re.nm;
    let relaxed = {
        let src = &*u;
        space.l2_project(nc, |pt, out| {
            let d = sponge.delta(pt.z);
            let phi = &space.re.vol_phi[pt.q * nm..(pt.q + 1) * nm];
            let coef = src.element(pt.element);
            for (c, o) in out.iter_mut().enumerate() {
                let v: f64 = phi.iter().zip(&coef[c * nm..(c + 1) * nm]).map(|(p, a)| p * a).sum();
                *o = (1.0 - d) * v;
            }
            Ok(())
        })?
    };
    *u = relaxed;
    Ok(())
}

/// `dt = cfl · min_K h_K / (Λ_K (2k + 1))`; `lambda(e)` is the largest wave speed in element `e`.
pub fn estimate_dt<F>(space: &DgSpace, cfl: f64, lambda: F) -> Result<f64>
where
    F: Fn(usize) -> f64,
{
    if !(cfl > 0.0) {
        return Err(Error::config(format!("cfl must be positive, got {cfl}")));
    }
    let k = space.k() as f64;
    let mut dt = f64::INFINITY;
    for (e, el) in space.mesh.elements.iter().enumerate() {
        let l = lambda(e);
        if !l.is_finite() || l < 0.0 {
            return Err(Error::State(format!("wave speed {l} in element {e}")));
        }
        if l > 0.0 {
            dt = dt.min(cfl * el.hx.min(el.hz) / (l * (2.0 * k + 1.0)));
        }
    }
    if dt.is_infinite() {
        return Err(Error::State("all wave speeds are zero".into()));
    }
    Ok(dt)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::dg::StructuredQuadMesh;

    /// `du/dt = λ u` on a single scalar coefficient.
    struct Linear {
        lambda: f64,
        committed: f64,
    }

    impl Evolution for Linear {
        fn rate(&mut self, u: &DgField, du: &mut DgField) -> Result<()> {
            du.coeffs[0] = self.lambda * u.coeffs[0];
            Ok(())
        }
        fn commit_stage_flux(&mut self, w: f64) {
            self.committed += w;
        }
    }

    fn scalar(v: f64) -> DgField {
        let mut f = DgField::zeros(0, 1, 1);
        f.coeffs[0] = v;
        f
    }

    #[test]
    fn zero_rate_is_identity() {
        let mut ev = Linear { lambda: 0.0, committed: 0.0 };
        let mut u = scalar(3.0);
        let mut ws = RkWorkspace::new(&u);
        ssprk43_step(&mut ev, &mut u, 0.1, &mut ws).unwrap();
        assert_eq!(u.coeffs[0], 3.0);
        explicit_euler_step(&mut ev, &mut u, 0.1, &mut ws).unwrap();
        assert_eq!(u.coeffs[0], 3.0);
        assert!(ssprk43_step(&mut ev, &mut u, 0.0, &mut ws).is_err());
    }

    #[test]
    fn euler_decay() {
        let mut ev = Linear { lambda: -1.0, committed: 0.0 };
        let mut u = scalar(1.0);
        let mut ws = RkWorkspace::new(&u);
        explicit_euler_step(&mut ev, &mut u, 0.1, &mut ws).unwrap();
        assert!((u.coeffs[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn stage_weights_sum_to_dt() {
        let mut ev = Linear { lambda: -0.3, committed: 0.0 };
        let mut u = scalar(1.0);
        let mut ws = RkWorkspace::new(&u);
        ssprk43_step(&mut ev, &mut u, 0.4, &mut ws).unwrap();
        assert!((ev.committed - 0.4).abs() < 1e-15);
    }

    #[test]
    fn third_order_on_linear_decay() {
        // a pure quadrature problem would show fourth order (the weights reproduce Simpson's rule)
        let solve = |n: usize| {
            let t_end = 2.0;
            let dt = t_end / n as f64;
            let mut ev = Linear { lambda: -1.5, committed: 0.0 };
            let mut u = scalar(1.0);
            let mut ws = RkWorkspace::new(&u);
            for _ in 0..n {
                ssprk43_step(&mut ev, &mut u, dt, &mut ws).unwrap();
            }
            (u.coeffs[0] - (-1.5 * t_end).exp()).abs()
        };
        let (e1, e2, e3) = (solve(10), solve(20), solve(40));
        let r1 = (e1 / e2).log2();
        let r2 = (e2 / e3).log2();
        assert!((r1 - 3.0).abs() < 0.3 && (r2 - 3.0).abs() < 0.3, "rates {r1} {r2}");
    }

    #[test]
    fn sponge_profile() {
        let s = SpongeLayer { z_d: 15e3, z_t: 35e3, alpha: 0.1 };
        s.validate().unwrap();
        assert_eq!(s.delta(15e3), 0.0);
        assert_eq!(s.delta(1e3), 0.0);
        assert!((s.delta(35e3) - 0.1).abs() < 1e-16);
        assert!((s.delta(25e3) - 0.05).abs() < 1e-16);
        assert!(SpongeLayer { alpha: 0.0, ..s }.validate().is_err());
        assert!(SpongeLayer { z_d: 40e3, ..s }.validate().is_err());
    }

    #[test]
    fn sponge_leaves_lower_region_alone() {
        let mesh = Arc::new(StructuredQuadMesh::build(2, 4, 2.0, 4.0, false).unwrap());
        let space = DgSpace::new(mesh, 2);
        let mut u = space
            .l2_project(2, |p, v| {
                v[0] = 1.0 + p.x * p.z;
                v[1] = -2.0;
                Ok(())
            })
            .unwrap();
        let orig = u.clone();
        let sponge = SpongeLayer { z_d: 2.0, z_t: 4.0, alpha: 0.5 };
        apply_sponge(&space, &mut u, &sponge).unwrap();
        for e in 0..space.n_elements() {
            let below = space.mesh.elements[e].z0 + space.mesh.elements[e].hz <= 2.0;
            for (a, b) in u.element(e).iter().zip(orig.element(e)) {
                if below {
                    assert!((a - b).abs() < 1e-14);
                }
            }
            if !below {
                // blended values lie between 0 and the original
                let mut vals = vec![0.0; space.re.nq * 2];
                let mut ovals = vals.clone();
                space.eval_volume(&u, e, &mut vals);
                space.eval_volume(&orig, e, &mut ovals);
                for q in 0..space.re.nq {
                    let d = sponge.delta(space.volume_point(e, q).z);
                    for c in 0..2 {
                        assert!((vals[q * 2 + c] - (1.0 - d) * ovals[q * 2 + c]).abs() < 0.05);
                    }
                }
            }
        }
    }

    #[test]
    fn dt_scaling() {
        let build = |h: f64, k: usize| {
            let mesh = Arc::new(StructuredQuadMesh::build(2, 2, 2.0 * h, 2.0 * h, false).unwrap());
            estimate_dt(&DgSpace::new(mesh, k), 1.0, |_| 340.0).unwrap()
        };
        assert!((build(2000.0, 1) / build(1000.0, 1) - 2.0).abs() < 1e-14);
        assert!((build(1000.0, 3) / build(1000.0, 1) - 3.0 / 7.0).abs() < 1e-14);
        let mesh = Arc::new(StructuredQuadMesh::build(1, 1, 1.0, 1.0, false).unwrap());
        assert!(estimate_dt(&DgSpace::new(mesh, 1), 1.0, |_| f64::NAN).is_err());
    }
}
