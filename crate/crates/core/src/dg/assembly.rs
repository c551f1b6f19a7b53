//! Matrix-free residual assembly, `M du/dt = −r`.
//!
//! Facet terms use a two-pass scheme: numerical fluxes are first written to a
//! per-facet buffer in parallel, then each element gathers its own faces.

use rayon::prelude::*;

use super::field::{eval_points, DgField, DgSpace, VolumePoint};
use super::mesh::BoundaryTag;
use crate::error::{Error, Location, Result};

/// Facet quadrature point handed to numerical-flux callbacks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacetPoint {
    pub facet: usize,
    pub q: usize,
    pub x: f64,
    pub z: f64,
    pub normal: [f64; 2],
    pub boundary: Option<BoundaryTag>,
    pub zslot: usize,
}

/// Traces on the plus side of a facet; `None` on the domain boundary.
pub type PlusTrace<'a> = Option<(&'a [f64], &'a [f64])>;

/// Reusable facet buffer.
#[derive(Debug, Clone, Default)]
pub struct FacetScratch {
    pub values: Vec<f64>,
}

impl DgSpace {
    #[inline]
    pub fn facet_point(&self, facet: usize, qf: usize) -> FacetPoint {
        let f = &self.mesh.facets[facet];
        let el = &self.mesh.elements[f.minus];
        let [x, z] = el.map(f.minus_face.point(self.re.nodes1[qf]));
        FacetPoint { facet, q: qf, x, z, normal: f.normal, boundary: f.boundary, zslot: self.facet_zslot(facet, qf) }
    }

    /// Adds `−(F, ∇V)_K − (G, V)_K` for every element.
    ///
    /// `kernel(point, u, aux, flux, source)` fills the flux rows `flux[c] = [F_x, F_z]`
    /// and the source `source[c]` of every component.
    pub fn volume_residual<K>(&self, u: &DgField, aux: Option<&DgField>, kernel: K, residual: &mut DgField) -> Result<()>
    where
        K: Fn(&VolumePoint, &[f64], &[f64], &mut [[f64; 2]], &mut [f64]) -> Result<()> + Sync,
    {
        let re = &self.re;
        let (nc, nm, nq) = (u.n_comp, re.nm, re.nq);
        let na = aux.map_or(0, |a| a.n_comp);
        residual.coeffs.par_chunks_mut(nc * nm).enumerate().try_for_each_init(
            || (vec![0.0; nq * nc], vec![0.0; nq * na], vec![[0.0; 2]; nc], vec![0.0; nc]),
            |(uq, aq, flux, src), (e, r)| -> Result<()> {
                eval_points(&re.vol_phi, nq, nm, nc, u.element(e), uq);
                if let Some(a) = aux {
                    eval_points(&re.vol_phi, nq, nm, na, a.element(e), aq);
                }
                let el = &self.mesh.elements[e];
                // w·J·∂x φ = w·(hz/2)·∂ξ φ,  w·J·∂z φ = w·(hx/2)·∂η φ
                let (sx, sz, jac) = (0.5 * el.hz, 0.5 * el.hx, el.jacobian());
                for q in 0..nq {
                    let pt = self.volume_point(e, q);
                    let uqp = &uq[q * nc..(q + 1) * nc];
                    let aqp = &aq[q * na..(q + 1) * na];
                    kernel(&pt, uqp, aqp, flux, src).map_err(|err| {
                        err.at(Location { element: e, point: q, x: pt.x, z: pt.z })
                    })?;
                    let w = re.vol_weights[q];
                    let phi = &re.vol_phi[q * nm..(q + 1) * nm];
                    let dxi = &re.vol_dxi[q * nm..(q + 1) * nm];
                    let deta = &re.vol_deta[q * nm..(q + 1) * nm];
                    for ((row, fl), g) in r.chunks_exact_mut(nm).zip(flux.iter()).zip(src.iter()) {
                        let (fx, fz, g) = (w * sx * fl[0], w * sz * fl[1], w * jac * g);
                        for (((rm, a), b), p) in row.iter_mut().zip(dxi).zip(deta).zip(phi) {
                            *rm -= fx * a + fz * b + g * p;
                        }
                    }
                }
                Ok(())
            },
        )
    }

    /// Adds `Σ_F (F_n, ⟦V⟧)_F` over all facets.
    ///
    /// `kernel(point, u⁻, aux⁻, plus, out)` writes the numerical flux `F_n` along
    /// the facet normal; on boundary facets `plus` is `None` and the kernel
    /// supplies its own exterior state. The jump there is `V⁻`.
    pub fn facet_residual<K>(
        &self,
        u: &DgField,
        aux: Option<&DgField>,
        kernel: K,
        scratch: &mut FacetScratch,
        residual: &mut DgField,
    ) -> Result<()>
    where
        K: Fn(&FacetPoint, &[f64], &[f64], PlusTrace<'_>, &mut [f64]) -> Result<()> + Sync,
    {
        self.compute_facet_fluxes(u, aux, kernel, scratch)?;
        self.gather_facet_fluxes(&scratch.values, u.n_comp, residual);
        Ok(())
    }

    /// First pass: numerical fluxes at all facet points, `values[(facet·nq1 + qf)·nc + c]`.
    pub fn compute_facet_fluxes<K>(
        &self,
        u: &DgField,
        aux: Option<&DgField>,
        kernel: K,
        scratch: &mut FacetScratch,
    ) -> Result<()>
    where
        K: Fn(&FacetPoint, &[f64], &[f64], PlusTrace<'_>, &mut [f64]) -> Result<()> + Sync,
    {
        let re = &self.re;
        let (nc, nm, nq1) = (u.n_comp, re.nm, re.nq1);
        let na = aux.map_or(0, |a| a.n_comp);
        let facets = &self.mesh.facets;
        scratch.values.resize(facets.len() * nq1 * nc, 0.0);
        scratch.values.par_chunks_mut(nq1 * nc).enumerate().try_for_each_init(
            || (vec![0.0; nq1 * nc], vec![0.0; nq1 * na], vec![0.0; nq1 * nc], vec![0.0; nq1 * na]),
            |(um, am, up, ap), (id, out)| -> Result<()> {
                let f = &facets[id];
                let mf = f.minus_face as usize;
                eval_points(&re.face_phi[mf], nq1, nm, nc, u.element(f.minus), um);
                if let Some(a) = aux {
                    eval_points(&re.face_phi[mf], nq1, nm, na, a.element(f.minus), am);
                }
                if let Some(p) = f.plus {
                    let pf = f.plus_face as usize;
                    eval_points(&re.face_phi[pf], nq1, nm, nc, u.element(p), up);
                    if let Some(a) = aux {
                        eval_points(&re.face_phi[pf], nq1, nm, na, a.element(p), ap);
                    }
                }
                for qf in 0..nq1 {
                    let pt = self.facet_point(id, qf);
                    let plus = f
                        .plus
                        .map(|_| (&up[qf * nc..(qf + 1) * nc], &ap[qf * na..(qf + 1) * na]));
                    kernel(&pt, &um[qf * nc..(qf + 1) * nc], &am[qf * na..(qf + 1) * na], plus, &mut out[qf * nc..(qf + 1) * nc])
                        .map_err(|err| err.at(Location { element: f.minus, point: qf, x: pt.x, z: pt.z }))?;
                }
                Ok(())
            },
        )
    }

    /// Second pass: each element adds `±(F_n, φ)` from its four faces.
    pub fn gather_facet_fluxes(&self, values: &[f64], nc: usize, residual: &mut DgField) {
        let re = &self.re;
        let (nm, nq1) = (re.nm, re.nq1);
        residual.coeffs.par_chunks_mut(nc * nm).enumerate().for_each(|(e, r)| {
            for (lf, face) in self.mesh.element_faces[e].iter().enumerate() {
                let f = &self.mesh.facets[face.facet];
                let sign = if face.is_minus { 1.0 } else { -1.0 };
                let half_len = 0.5 * f.length;
                let vals = &values[face.facet * nq1 * nc..(face.facet + 1) * nq1 * nc];
                let phi = &re.face_phi[lf];
                for ((ph, vq), w) in phi.chunks_exact(nm).zip(vals.chunks_exact(nc)).zip(&re.weights1) {
                    let s = sign * half_len * w;
                    for (row, v) in r.chunks_exact_mut(nm).zip(vq) {
                        let v = s * v;
                        for (rm, p) in row.iter_mut().zip(ph) {
                            *rm += v * p;
                        }
                    }
                }
            }
        });
    }
}

/// Aborts on the first non-finite coefficient.
pub fn check_finite(field: &DgField, what: &str) -> Result<()> {
    match field.first_non_finite() {
        None => Ok(()),
        Some((e, c)) => Err(Error::State(format!("{what}: non-finite coefficient in element {e}, component {c}"))),
    }
}
