//! Space-time error norms, convergence tables and the bottom rain outflow.

use std::path::Path;

use super::config::CaseConfig;
use super::run::run_case;
use super::solver::MoistSolver;
use crate::dg::{DgField, DgSpace};
use crate::error::{Error, Result};
use crate::model::{ConservedState, COMPONENT_NAMES, NCOMP, NSECONDARY, RHO_R};

/// `sqrt(Σ_i ‖a(t_i) − ref(t_i)‖²_{L²})` per component, with the reference supplied as a
/// pointwise function `reference(i, x, z, out)` evaluated at the quadrature points of `space`.
pub fn space_time_l2_error_with<F>(space: &DgSpace, snaps: &[DgField], components: &[usize], reference: F) -> Result<Vec<f64>>
where
    F: Fn(usize, f64, f64, &mut [f64]) -> Result<()>,
{
    let re = &space.re;
    let mut sums = vec![0.0; components.len()];
    for (i, a) in snaps.iter().enumerate() {
        if a.n_elements != space.n_elements() || a.k != space.k() {
            return Err(Error::Harness(format!("snapshot {i} does not live on the given space")));
        }
        if let Some(&c) = components.iter().find(|&&c| c >= a.n_comp) {
            return Err(Error::Harness(format!("component {c} out of range")));
        }
        let mut vals = vec![0.0; re.nq * a.n_comp];
        let mut r = vec![0.0; a.n_comp];
        for e in 0..space.n_elements() {
            space.eval_volume(a, e, &mut vals);
            let jac = space.mesh.elements[e].jacobian();
            for q in 0..re.nq {
                let pt = space.volume_point(e, q);
                reference(i, pt.x, pt.z, &mut r)?;
                for (s, &c) in sums.iter_mut().zip(components) {
                    let d = vals[q * a.n_comp + c] - r[c];
                    *s += re.vol_weights[q] * jac * d * d;
                }
            }
        }
    }
    Ok(sums.into_iter().map(f64::sqrt).collect())
}

/// Space-time error of `snaps` against reference snapshots on a (nested, finer) mesh,
/// evaluating the reference exactly at the coarse quadrature points.
pub fn space_time_l2_error(
    space: &DgSpace,
    snaps: &[DgField],
    ref_space: &DgSpace,
    ref_snaps: &[DgField],
    components: &[usize],
) -> Result<Vec<f64>> {
    if snaps.len() != ref_snaps.len() || snaps.is_empty() {
        return Err(Error::Harness(format!(
            "snapshot count mismatch: {} against {} reference snapshots",
            snaps.len(),
            ref_snaps.len()
        )));
    }
    space_time_l2_error_with(space, snaps, components, |i, x, z, out| {
        let v = ref_space
            .evaluate_point(&ref_snaps[i], x, z)
            .ok_or_else(|| Error::Harness(format!("point ({x}, {z}) lies outside the reference mesh")))?;
        if v.len() != out.len() {
            return Err(Error::Harness("reference has a different number of components".into()));
        }
        out.copy_from_slice(&v);
        Ok(())
    })
}

/// Observed order `log₂(e_coarse / e_fine)`; `None` when either error is zero or not finite.
pub fn observed_rate(e_coarse: f64, e_fine: f64) -> Option<f64> {
    (e_coarse > 0.0 && e_fine > 0.0 && e_coarse.is_finite() && e_fine.is_finite()).then(|| (e_coarse / e_fine).log2())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub k: usize,
    pub dt: f64,
    pub component: usize,
    pub error: f64,
    /// Rate against the next coarser run of the same order.
    pub rate: Option<f64>,
}

/// Attaches rates to rows sorted by `(k, component, h descending)`.
pub fn attach_rates(rows: &mut [ConvergenceRow]) {
    rows.sort_by(|a, b| (a.k, a.component).cmp(&(b.k, b.component)).then(b.h.total_cmp(&a.h)));
    for i in 1..rows.len() {
        let (prev, cur) = (&rows[i - 1], &rows[i]);
        if prev.k == cur.k && prev.component == cur.component {
            rows[i].rate = observed_rate(prev.error, cur.error);
        }
    }
}

pub fn write_convergence_csv(path: &Path, rows: &[ConvergenceRow]) -> Result<()> {
    let mut text = String::from("h,k,dt,component,error,rate\n");
    for r in rows {
        let rate = r.rate.map_or_else(|| "undefined".to_string(), |v| format!("{v:.4}"));
        text.push_str(&format!("{},{},{},{},{:e},{rate}\n", r.h, r.k, r.dt, COMPONENT_NAMES[r.component], r.error));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs every configuration of `cfg.convergence` plus the reference and tabulates errors
/// of all conserved components.
pub fn convergence_study(cfg: &CaseConfig) -> Result<Vec<ConvergenceRow>> {
    let conv = cfg
        .convergence
        .clone()
        .ok_or_else(|| Error::config("convergence study needs a [convergence] section"))?;
    if conv.runs.is_empty() || conv.snapshots == 0 {
        return Err(Error::config("convergence study needs runs and at least one snapshot"));
    }
    let run = |[h, k, dt]: [f64; 3], name: &str| -> Result<(DgSpace, Vec<DgField>, f64)> {
        let mut c = cfg.clone();
        c.mesh.h = Some(h);
        c.mesh.nx = None;
        c.mesh.nz = None;
        c.discretisation.k = Some(k as usize);
        c.time.dt = Some(dt);
        c.time.cfl = None;
        c.output.dir = cfg.output.dir.join(name);
        c.output.norm_snapshots = conv.snapshots;
        c.output.write_snapshots = false;
        c.output.restart = false;
        c.convergence = None;
        let out = run_case(&c)?;
        let snaps = out.norm_snapshots.into_iter().map(|(_, u)| u).collect();
        Ok((out.simulation.solver.space, snaps, out.simulation.dt))
    };
    let [rh, rk, rdt] = conv.reference;
    let (ref_space, ref_snaps, _) = run(conv.reference, &format!("reference_h{rh}_k{rk}_dt{rdt}"))?;
    let components: Vec<usize> = (0..NCOMP).collect();
    let mut rows = Vec::new();
    for spec in &conv.runs {
        let [h, k, dt] = *spec;
        let (space, snaps, dt_used) = run(*spec, &format!("run_h{h}_k{k}_dt{dt}"))?;
        let errors = space_time_l2_error(&space, &snaps, &ref_space, &ref_snaps, &components)?;
        for (c, e) in errors.into_iter().enumerate() {
            rows.push(ConvergenceRow { h, k: k as usize, dt: dt_used, component: c, error: e, rate: None });
        }
    }
    attach_rates(&mut rows);
    write_convergence_csv(&cfg.output.dir.join("convergence.csv"), &rows)?;
    Ok(rows)
}

/// `dt ∫_bottom ρ_r v_r dx` from the traces of the current state.
pub fn rain_fallout_increment(solver: &MoistSolver, u: &DgField, dt: f64) -> f64 {
    let space = &solver.space;
    let re = &space.re;
    let (nm, nq1) = (re.nm, re.nq1);
    let mut total = 0.0;
    let mut uq = vec![0.0; nq1 * NCOMP];
    let mut aq = vec![0.0; nq1 * NSECONDARY];
    for &id in &solver.bottom_facets {
        let f = &space.mesh.facets[id];
        let phi = &re.face_phi[f.minus_face as usize];
        crate::dg::field::eval_points(phi, nq1, nm, NCOMP, u.element(f.minus), &mut uq);
        crate::dg::field::eval_points(phi, nq1, nm, NSECONDARY, solver.aux.element(f.minus), &mut aq);
        for qf in 0..nq1 {
            let b = &solver.base[space.facet_zslot(id, qf)];
            let cs = ConservedState::from_slice(&uq[qf * NCOMP..(qf + 1) * NCOMP]);
            let s = solver.model.secondary_from_perturbations(&cs, b, &aq[qf * NSECONDARY..(qf + 1) * NSECONDARY]);
            let rho_r = b.rho_r_bar + uq[qf * NCOMP + RHO_R];
            total += 0.5 * f.length * re.weights1[qf] * rho_r * s.v_r;
        }
    }
    dt * total
}
