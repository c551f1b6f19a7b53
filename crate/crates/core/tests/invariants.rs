use proptest::prelude::*;

use moistdg::dg::{build_mesh, DgSpace, FacetScratch};
use moistdg::microphysics::{self, condensation_recover, MicrophysicsParams, RainDensityMode};
use moistdg::model::{boundary_state, BaseStatePoint, BoundaryKind, ConservedState, MoistModel, NCOMP};
use moistdg::thermo::ThermoConstants;
use moistdg::timestep::{apply_sponge, SpongeLayer};

fn c() -> ThermoConstants {
    ThermoConstants::default()
}

fn model() -> MoistModel {
    MoistModel::new(c(), MicrophysicsParams::default(), true)
}

fn base() -> BaseStatePoint {
    let c = c();
    let t = 285.0;
    BaseStatePoint::from_primitives(&c, 1.1, c.saturation_vapour_density(t), 1e-4, 0.0, t)
}

fn unit(angle: f64) -> [f64; 2] {
    [angle.cos(), angle.sin()]
}

prop_compose! {
    /// A perturbation of `base()` with its secondary state, away from any singular limit.
    fn moist_point()(
        d in -0.2..0.2f64,
        m in -1e-3..2e-3f64,
        r in 0.0..3e-3f64,
        mx in -40.0..40.0f64,
        mz in -40.0..40.0f64,
        e in -2e4..2e4f64,
        split in 0.0..1.0f64,
        t in -15.0..15.0f64,
    ) -> (ConservedState, moistdg::model::SecondaryState) {
        let b = base();
        let u = ConservedState { rho_d_pert: d, rho_m_pert: m, rho_r_pert: r, momentum: [mx, mz], energy_pert: e };
        let rho_m = b.rho_m_bar + m;
        let s = model().complete_secondary(&u, &b, split * rho_m, (1.0 - split) * rho_m, b.t_bar + t);
        (u, s)
    }
}

proptest! {
    #[test]
    fn recovery_splits_moisture_and_returns_the_temperature(
        t in 235.0..310.0f64,
        rho_d in 0.3..1.3f64,
        humidity in 0.05..1.0f64,
        rho_c in prop_oneof![Just(0.0), 1e-7..4e-3f64],
        rho_r in prop_oneof![Just(0.0), 1e-7..4e-3f64],
        offset in -40.0..40.0f64,
    ) {
        let c = c();
        let p = MicrophysicsParams::default();
        let rho_vs = c.saturation_vapour_density(t);
        let rho_v = if rho_c > 0.0 { rho_vs } else { humidity * rho_vs };
        let rho_m = rho_v + rho_c;
        let rho_e = c.internal_energy(rho_d, rho_v, rho_c, rho_r, t);
        let rec = condensation_recover(&c, &p, rho_d, rho_m, rho_r, rho_e, t + offset).unwrap();
        prop_assert_eq!(rec.rho_v + rec.rho_c, rho_m);
        prop_assert!(rec.rho_c >= 0.0 && rec.rho_v >= 0.0);
        prop_assert!((rec.t - t).abs() <= 1e-8 * t, "T {} vs {}", rec.t, t);
        let vs = c.saturation_vapour_density(rec.t);
        prop_assert!(rec.rho_v <= vs * (1.0 + 1e-10));
        if rec.rho_c > 0.0 {
            prop_assert!((rec.rho_v - vs).abs() <= 1e-10 * vs);
        }
        prop_assert!((rec.rho_c - rho_c).abs() <= 1e-9 * rho_m.max(1e-6));
    }

    #[test]
    fn lax_friedrichs_is_consistent_and_conservative(
        (um, sm) in moist_point(),
        (up, sp) in moist_point(),
        angle in 0.0..std::f64::consts::TAU,
    ) {
        let m = model();
        let b = base();
        let n = unit(angle);
        let f = m.physical_flux(&um, &sm, &b);
        let same = m.lax_friedrichs_flux(&um, &sm, &um, &sm, &b, n);
        let fwd = m.lax_friedrichs_flux(&um, &sm, &up, &sp, &b, n);
        let back = m.lax_friedrichs_flux(&up, &sp, &um, &sm, &b, [-n[0], -n[1]]);
        for c in 0..NCOMP {
            let fn_ = f[c][0] * n[0] + f[c][1] * n[1];
            let scale = 1.0 + f[c][0].abs() + f[c][1].abs();
            prop_assert!((same[c] - fn_).abs() <= 1e-13 * scale);
            prop_assert!((fwd[c] + back[c]).abs() <= 1e-13 * (1.0 + fwd[c].abs()));
        }
    }

    #[test]
    fn slip_wall_reflection_is_an_involution(
        (u, _) in moist_point(),
        angle in 0.0..std::f64::consts::TAU,
    ) {
        let n = unit(angle);
        let w = boundary_state(&u, n, BoundaryKind::SlipWall);
        let back = boundary_state(&w, n, BoundaryKind::SlipWall);
        let dot = |a: [f64; 2]| a[0] * n[0] + a[1] * n[1];
        let cross = |a: [f64; 2]| a[0] * n[1] - a[1] * n[0];
        prop_assert!((dot(w.momentum) + dot(u.momentum)).abs() <= 1e-12 * 40.0);
        prop_assert!((cross(w.momentum) - cross(u.momentum)).abs() <= 1e-12 * 40.0);
        prop_assert_eq!((w.rho_d_pert, w.rho_m_pert, w.rho_r_pert, w.energy_pert),
            (u.rho_d_pert, u.rho_m_pert, u.rho_r_pert, u.energy_pert));
        for (a, b) in back.momentum.iter().zip(u.momentum) {
            prop_assert!((a - b).abs() <= 1e-12 * 40.0);
        }
    }

    #[test]
    fn no_dry_air_crosses_a_slip_wall(
        (u, s) in moist_point(),
        angle in 0.0..std::f64::consts::TAU,
    ) {
        let m = model();
        let b = base();
        let n = unit(angle);
        let w = boundary_state(&u, n, BoundaryKind::SlipWall);
        let sw = m.complete_secondary(&w, &b, s.rho_v, s.rho_c, s.t);
        let f = m.lax_friedrichs_flux(&u, &s, &w, &sw, &b, n);
        prop_assert!(f[0].abs() <= 1e-13 * (1.0 + b.rho_d_bar * 40.0));
    }

    #[test]
    fn microphysics_rates_are_non_negative(
        t in 230.0..310.0f64,
        rho_v in 0.0..3e-2f64,
        rho_vs in 0.0..3e-2f64,
        rho_c in 0.0..5e-3f64,
        rho_r in 0.0..5e-3f64,
        rho in 0.3..1.3f64,
        q_au in 0.0..1e-3f64,
        literal in any::<bool>(),
    ) {
        let c = c();
        let p = MicrophysicsParams {
            q_au,
            rho_w_mode: if literal { RainDensityMode::TotalWater } else { RainDensityMode::LiquidWater },
            ..MicrophysicsParams::default()
        };
        prop_assert!(microphysics::source_evaporation(&c, t, rho_r, rho_vs, rho_v) >= 0.0);
        prop_assert!(microphysics::source_autoconversion(&p, rho_c, rho) >= 0.0);
        prop_assert!(microphysics::source_accretion(rho_c, rho_r) >= 0.0);
        let v = microphysics::terminal_rain_velocity(&p, rho_v, rho_c, rho_r);
        prop_assert!(v >= 0.0 && v.is_finite());
        if rho_r == 0.0 {
            prop_assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn sponge_coefficient_stays_in_range(
        z_d in 0.0..9e3f64,
        depth in 100.0..5e3f64,
        alpha in 1e-3..1.0f64,
        a in 0.0..1.0f64,
        b in 0.0..1.0f64,
    ) {
        let s = SpongeLayer { z_d, z_t: z_d + depth, alpha };
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (zl, zh) = (lo * (z_d + depth), hi * (z_d + depth));
        prop_assert!((0.0..=alpha).contains(&s.delta(zl)));
        prop_assert!(s.delta(zl) <= s.delta(zh));
        prop_assert_eq!(s.delta(z_d), 0.0);
        prop_assert!((s.delta(z_d + depth) - alpha).abs() <= 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sponge_never_grows_the_field_and_spares_the_lower_region(
        coeffs in prop::collection::vec(-1.0..1.0f64, 4 * 6 * 9),
        alpha in 0.05..1.0f64,
    ) {
        let space = DgSpace::new(build_mesh(4, 6, 4.0, 6.0, true).unwrap(), 2);
        let mut u = space.zeros(1);
        u.coeffs.copy_from_slice(&coeffs);
        let before = u.clone();
        apply_sponge(&space, &mut u, &SpongeLayer { z_d: 3.0, z_t: 6.0, alpha }).unwrap();
        prop_assert!(space.l2_norm(&u, 0) <= space.l2_norm(&before, 0) * (1.0 + 1e-14));
        for e in 0..12 {
            for (a, b) in u.element(e).iter().zip(before.element(e)) {
                prop_assert!((a - b).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn conservative_facet_fluxes_telescope(
        coeffs in prop::collection::vec(-1.0..1.0f64, 5 * 3 * 2 * 4),
        ax in -2.0..2.0f64,
        az in -2.0..2.0f64,
    ) {
        let space = DgSpace::new(build_mesh(5, 3, 1.0, 0.6, true).unwrap(), 1);
        let mut u = space.zeros(2);
        u.coeffs.copy_from_slice(&coeffs);
        let mut r = space.zeros(2);
        space
            .facet_residual(
                &u,
                None,
                |p, um, _, plus, out| {
                    let an = ax * p.normal[0] + az * p.normal[1];
                    match plus {
                        Some((up, _)) => {
                            for c in 0..2 {
                                out[c] = 0.5 * an * (um[c] + up[c]) + 0.5 * an.abs() * (um[c] - up[c]);
                            }
                        }
                        // closed walls
                        None => out.fill(0.0),
                    }
                    Ok(())
                },
                &mut FacetScratch::default(),
                &mut r,
            )
            .unwrap();
        for c in 0..2 {
            let total: f64 = (0..r.n_elements).map(|e| r.get(e, c, 0)).sum();
            let scale: f64 = r.coeffs.iter().map(|v| v.abs()).sum::<f64>() + 1.0;
            prop_assert!(total.abs() <= 1e-14 * scale, "component {}: {}", c, total);
        }
    }
}
