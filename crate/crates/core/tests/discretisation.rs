mod common;

use std::f64::consts::PI;

use common::small;
use moistdg::dg::{build_mesh, DgField, DgSpace};
use moistdg::driver::{rain_fallout_increment, space_time_l2_error, CaseKind, Simulation};
use moistdg::microphysics::RainDensityMode;
use moistdg::model::{NCOMP, RHO_R};
use moistdg::timestep::{ssprk43_step, Evolution, RkWorkspace};
use moistdg::Result;

fn periodic_space(n: usize, k: usize) -> DgSpace {
    DgSpace::new(build_mesh(n, n, 1.0, 1.0, true).unwrap(), k)
}

fn smooth(x: f64, z: f64) -> f64 {
    (2.0 * PI * x).sin() * (PI * z).cos() + 0.3 * (2.0 * PI * (x + z)).cos()
}

/// `‖u − f‖_{L²}` with a quadrature one order finer than the solver's own.
fn error_against(space: &DgSpace, u: &DgField, f: impl Fn(f64, f64) -> f64) -> f64 {
    let (nodes, weights) = moistdg::dg::gauss_legendre(space.k() + 4);
    let mut sum = 0.0;
    for (e, el) in space.mesh.elements.iter().enumerate() {
        for (i, &a) in nodes.iter().enumerate() {
            for (j, &b) in nodes.iter().enumerate() {
                let [x, z] = el.map([a, b]);
                let d = space.eval_reference(u, e, [a, b])[0] - f(x, z);
                sum += weights[i] * weights[j] * el.jacobian() * d * d;
            }
        }
    }
    sum.sqrt()
}

fn rates(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[test]
fn l2_projection_converges_at_order_k_plus_one() {
    for k in 1..=3 {
        let errors: Vec<f64> = [4, 8, 16]
            .iter()
            .map(|&n| {
                let space = periodic_space(n, k);
                let u = space
                    .l2_project(1, |pt, out| {
                        out[0] = smooth(pt.x, pt.z);
                        Ok(())
                    })
                    .unwrap();
                error_against(&space, &u, smooth)
            })
            .collect();
        let r = rates(&errors);
        assert!(r.last().unwrap() > &(k as f64 + 0.8), "k = {k}: errors {errors:?}, rates {r:?}");
    }
}

/// `∂u/∂t + a·∇u = 0` with an upwind flux; `a` is horizontal, so the walls carry no flux.
struct Advection<'a> {
    space: &'a DgSpace,
    a: [f64; 2],
    scratch: moistdg::dg::FacetScratch,
}

impl Evolution for Advection<'_> {
    fn rate(&mut self, u: &DgField, du: &mut DgField) -> Result<()> {
        let a = self.a;
        du.fill(0.0);
        self.space.volume_residual(
            u,
            None,
            |_, v, _, flux, src| {
                flux[0] = [a[0] * v[0], a[1] * v[0]];
                src[0] = 0.0;
                Ok(())
            },
            du,
        )?;
        self.space.facet_residual(
            u,
            None,
            |p, um, _, plus, out| {
                let an = a[0] * p.normal[0] + a[1] * p.normal[1];
                let up = plus.map_or(um[0], |(v, _)| v[0]);
                out[0] = an * if an >= 0.0 { um[0] } else { up };
                Ok(())
            },
            &mut self.scratch,
            du,
        )?;
        du.coeffs.iter_mut().for_each(|v| *v = -*v);
        self.space.apply_inverse_mass(du)
    }
}

#[test]
fn scalar_advection_converges_at_order_k_plus_one() {
    let a = [1.0, 0.0];
    let t_end = 0.25;
    for k in 1..=2 {
        let errors: Vec<f64> = [4, 8, 16]
            .iter()
            .map(|&n| {
                let space = periodic_space(n, k);
                let mut u = space
                    .l2_project(1, |pt, out| {
                        out[0] = smooth(pt.x, pt.z);
                        Ok(())
                    })
                    .unwrap();
                let steps = 20 * n * (k + 1);
                let dt = t_end / steps as f64;
                let mut ev = Advection { space: &space, a, scratch: Default::default() };
                let mut ws = RkWorkspace::new(&u);
                for _ in 0..steps {
                    ssprk43_step(&mut ev, &mut u, dt, &mut ws).unwrap();
                }
                error_against(&space, &u, |x, z| smooth(x - a[0] * t_end, z - a[1] * t_end))
            })
            .collect();
        let r = rates(&errors);
        assert!(r.last().unwrap() > &(k as f64 + 0.7), "k = {k}: errors {errors:?}, rates {r:?}");
    }
}

#[test]
fn space_time_error_examples() {
    let space = periodic_space(3, 2);
    let a = space
        .l2_project(2, |pt, out| {
            out[0] = smooth(pt.x, pt.z);
            out[1] = pt.x * pt.z;
            Ok(())
        })
        .unwrap();
    let same = space_time_l2_error(&space, std::slice::from_ref(&a), &space, std::slice::from_ref(&a), &[0, 1]).unwrap();
    assert!(same.iter().all(|&e| e < 1e-15), "{same:?}");

    // a unit offset on the unit square in each of four snapshots: sqrt(4 · 1) = 2
    let mut shifted = a.clone();
    for e in 0..shifted.n_elements {
        let v = shifted.get(e, 1, 0);
        shifted.set(e, 1, 0, v + 2.0);
    }
    let snaps = vec![a.clone(); 4];
    let refs = vec![shifted.clone(); 4];
    let err = space_time_l2_error(&space, &snaps, &space, &refs, &[0, 1]).unwrap();
    assert!(err[0] < 1e-15);
    assert!((err[1] - 2.0).abs() < 1e-13, "{err:?}");

    // against zero the error is the L² norm; x z has ‖·‖² = 1/9 on the unit square
    let zero = space.zeros(2);
    let err = space_time_l2_error(&space, std::slice::from_ref(&a), &space, &[zero], &[1]).unwrap();
    assert!((err[0] - 1.0 / 3.0).abs() < 1e-14, "{err:?}");

    let coarse = DgSpace::new(build_mesh(2, 2, 1.0, 1.0, true).unwrap(), 2);
    assert!(space_time_l2_error(&coarse, std::slice::from_ref(&a), &space, &[a.clone(), a.clone()], &[0]).is_err());
}

#[test]
fn space_time_error_against_finer_reference() {
    let f = |x: f64, z: f64| x * x * z + 0.5 * z;
    let coarse = DgSpace::new(build_mesh(2, 2, 1.0, 1.0, true).unwrap(), 2);
    let fine = DgSpace::new(build_mesh(4, 4, 1.0, 1.0, true).unwrap(), 3);
    let project = |s: &DgSpace| {
        s.l2_project(1, |pt, out| {
            out[0] = f(pt.x, pt.z);
            Ok(())
        })
        .unwrap()
    };
    // both spaces contain x² z exactly
    let err = space_time_l2_error(&coarse, &[project(&coarse)], &fine, &[project(&fine)], &[0]).unwrap();
    assert!(err[0] < 1e-13, "{err:?}");
}

#[test]
fn uniform_rain_fallout_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(CaseKind::RainThermal, 12, 8, 2, 0.1, 0.1, dir.path());
    cfg.microphysics.rho_w_mode = RainDensityMode::LiquidWater;
    let mut sim = Simulation::new(&cfg).unwrap();
    let width = sim.solver.space.mesh.x_extent();
    let rho_r = 2.5e-4;
    let mut u = sim.solver.space.zeros(NCOMP);
    for e in 0..u.n_elements {
        // the constant mode is 1/2 on the reference square
        u.set(e, RHO_R, 0, 2.0 * rho_r);
    }
    sim.solver.recover(&u).unwrap();
    let dt = 0.7;
    // Γ(4.5) = 11.6317283965674...; v_r = (π ρ_l N0)^(-1/8) v0 Γ(4.5)/6 ρ_r^(1/8)
    let gamma = 11.631_728_396_567_45;
    let v_r = (PI * 1000.0 * 8.0e6_f64).powf(-0.125) * 130.0 * gamma / 6.0 * rho_r.powf(0.125);
    let expected = dt * rho_r * v_r * width;
    let got = rain_fallout_increment(&sim.solver, &u, dt);
    assert!(((got - expected) / expected).abs() < 1e-12, "{got} vs {expected}");
}

#[test]
fn rest_state_residual_vanishes_for_every_case() {
    let dir = tempfile::tempdir().unwrap();
    for case in CaseKind::ALL {
        let cfg = small(case, 8, 6, 2, 0.1, 0.1, dir.path());
        let mut sim = Simulation::new(&cfg).unwrap();
        let u = sim.solver.space.zeros(NCOMP);
        sim.solver.recover(&u).unwrap();
        let mut r = sim.solver.space.zeros(NCOMP);
        sim.solver.residual(&u, &mut r).unwrap();
        let max = r.coeffs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(max <= 1e-9, "{case}: max |r| = {max:e}");
    }
}
