use std::sync::Arc;

use rayon::prelude::*;

use super::basis::{basis_eval, RefElement};
use super::mesh::{Orientation, StructuredQuadMesh};
use crate::error::{Error, Result};

/// Modal coefficients of a vector-valued 𝒬^k field, indexed `(element, component, mode)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DgField {
    pub k: usize,
    pub n_elements: usize,
    pub n_comp: usize,
    pub nm: usize,
    pub coeffs: Vec<f64>,
}

impl DgField {
    pub fn zeros(k: usize, n_elements: usize, n_comp: usize) -> Self {
        let nm = (k + 1) * (k + 1);
        Self { k, n_elements, n_comp, nm, coeffs: vec![0.0; n_elements * n_comp * nm] }
    }

    /// Coefficients of one element, `[c·nm + m]`.
    #[inline]
    pub fn element(&self, e: usize) -> &[f64] {
        let s = self.n_comp * self.nm;
        &self.coeffs[e * s..(e + 1) * s]
    }

    #[inline]
    pub fn element_mut(&mut self, e: usize) -> &mut [f64] {
        let s = self.n_comp * self.nm;
        &mut self.coeffs[e * s..(e + 1) * s]
    }

    #[inline]
    pub fn get(&self, e: usize, c: usize, m: usize) -> f64 {
        self.coeffs[(e * self.n_comp + c) * self.nm + m]
    }

    #[inline]
    pub fn set(&mut self, e: usize, c: usize, m: usize, v: f64) {
        self.coeffs[(e * self.n_comp + c) * self.nm + m] = v;
    }

    pub fn fill(&mut self, v: f64) {
        self.coeffs.iter_mut().for_each(|x| *x = v);
    }

    pub fn same_shape(&self, other: &DgField) -> bool {
        self.k == other.k && self.n_elements == other.n_elements && self.n_comp == other.n_comp
    }

    /// `self ← a·self + b·x`
    pub fn axpby(&mut self, a: f64, b: f64, x: &DgField) {
        debug_assert!(self.same_shape(x));
        self.coeffs.par_iter_mut().zip(x.coeffs.par_iter()).for_each(|(s, &xv)| *s = a * *s + b * xv);
    }

    /// `self ← a·x + b·y`
    pub fn assign_combination(&mut self, a: f64, x: &DgField, b: f64, y: &DgField) {
        debug_assert!(self.same_shape(x) && self.same_shape(y));
        self.coeffs
            .par_iter_mut()
            .zip(x.coeffs.par_iter().zip(y.coeffs.par_iter()))
            .for_each(|(s, (&xv, &yv))| *s = a * xv + b * yv);
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// First element/component holding a non-finite coefficient.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.coeffs.iter().position(|c| !c.is_finite()).map(|i| {
            let ec = i / self.nm;
            (ec / self.n_comp, ec % self.n_comp)
        })
    }
}

/// Volume quadrature point handed to pointwise callbacks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumePoint {
    pub element: usize,
    pub q: usize,
    pub x: f64,
    pub z: f64,
    /// Index into [`DgSpace::z_levels`].
    pub zslot: usize,
}

/// Mesh, reference element and the derived tables shared by all fields of one run.
#[derive(Debug, Clone)]
pub struct DgSpace {
    pub mesh: Arc<StructuredQuadMesh>,
    pub re: RefElement,
}

impl DgSpace {
    pub fn new(mesh: Arc<StructuredQuadMesh>, k: usize) -> Self {
        Self { mesh, re: RefElement::new(k) }
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.re.k
    }

    #[inline]
    pub fn n_elements(&self) -> usize {
        self.mesh.n_elements()
    }

    pub fn zeros(&self, n_comp: usize) -> DgField {
        DgField::zeros(self.re.k, self.n_elements(), n_comp)
    }

    /// Every height at which pointwise data are needed: volume rows first
    /// (`j·nq1 + qz`), then the horizontal node rows.
    pub fn z_levels(&self) -> Vec<f64> {
        let nq1 = self.re.nq1;
        let m = &self.mesh;
        let mut z = Vec::with_capacity(m.nz * nq1 + m.nz + 1);
        for j in 0..m.nz {
            let (z0, hz) = (m.z_nodes[j], m.z_nodes[j + 1] - m.z_nodes[j]);
            for &s in &self.re.nodes1 {
                z.push(z0 + 0.5 * (s + 1.0) * hz);
            }
        }
        z.extend_from_slice(&m.z_nodes);
        z
    }

    #[inline]
    pub fn volume_zslot(&self, e: usize, q: usize) -> usize {
        self.mesh.elements[e].j * self.re.nq1 + q / self.re.nq1
    }

    /// z-slot of facet point `qf`.
    #[inline]
    pub fn facet_zslot(&self, facet: usize, qf: usize) -> usize {
        let f = &self.mesh.facets[facet];
        match f.orientation {
            Orientation::Vertical => f.row * self.re.nq1 + qf,
            Orientation::Horizontal => self.mesh.nz * self.re.nq1 + f.row,
        }
    }

    #[inline]
    pub fn volume_point(&self, e: usize, q: usize) -> VolumePoint {
        let [x, z] = self.mesh.elements[e].map(self.re.vol_points[q]);
        VolumePoint { element: e, q, x, z, zslot: self.volume_zslot(e, q) }
    }

    /// Diagonal mass entry of element `e` (the same for every mode).
    #[inline]
    pub fn mass_diagonal(&self, e: usize) -> f64 {
        self.mesh.elements[e].jacobian()
    }

    pub fn apply_mass(&self, field: &mut DgField) {
        let s = field.n_comp * field.nm;
        field.coeffs.par_chunks_mut(s).enumerate().for_each(|(e, c)| {
            let j = self.mass_diagonal(e);
            c.iter_mut().for_each(|v| *v *= j);
        });
    }

    pub fn apply_inverse_mass(&self, field: &mut DgField) -> Result<()> {
        if let Some(e) = (0..self.n_elements()).find(|&e| !(self.mass_diagonal(e) > 0.0)) {
            return Err(Error::Mesh(format!("element {e} has a non-positive Jacobian")));
        }
        let s = field.n_comp * field.nm;
        field.coeffs.par_chunks_mut(s).enumerate().for_each(|(e, c)| {
            let inv = 1.0 / self.mass_diagonal(e);
            c.iter_mut().for_each(|v| *v *= inv);
        });
        Ok(())
    }

    /// Values at the volume quadrature points of element `e`, `out[q·n_comp + c]`.
    pub fn eval_volume(&self, field: &DgField, e: usize, out: &mut [f64]) {
        eval_points(&self.re.vol_phi, self.re.nq, self.re.nm, field.n_comp, field.element(e), out);
    }

    /// Values at an arbitrary reference point of element `e`.
    pub fn eval_reference(&self, field: &DgField, e: usize, xi: [f64; 2]) -> Vec<f64> {
        let (phi, _) = basis_eval(self.re.k, xi);
        let coef = field.element(e);
        (0..field.n_comp)
            .map(|c| phi.iter().zip(&coef[c * field.nm..(c + 1) * field.nm]).map(|(p, a)| p * a).sum())
            .collect()
    }

    /// Element containing `(x, z)` and the reference coordinates there.
    pub fn locate(&self, x: f64, z: f64) -> Option<(usize, [f64; 2])> {
        let m = &self.mesh;
        let find = |nodes: &[f64], v: f64| -> Option<usize> {
            let n = nodes.len() - 1;
            if v < nodes[0] || v > nodes[n] {
                return None;
            }
            Some(nodes.partition_point(|&a| a <= v).saturating_sub(1).min(n - 1))
        };
        let i = find(&m.x_nodes, x)?;
        let j = find(&m.z_nodes, z)?;
        let e = j * m.nx + i;
        let el = &m.elements[e];
        let xi = [2.0 * (x - el.x0) / el.hx - 1.0, 2.0 * (z - el.z0) / el.hz - 1.0];
        Some((e, xi))
    }

    /// Field value at a physical point, or `None` outside the domain.
    pub fn evaluate_point(&self, field: &DgField, x: f64, z: f64) -> Option<Vec<f64>> {
        self.locate(x, z).map(|(e, xi)| self.eval_reference(field, e, xi))
    }

    /// L² projection of a pointwise function sampled at the volume quadrature points.
    pub fn l2_project<F>(&self, n_comp: usize, f: F) -> Result<DgField>
    where
        F: Fn(&VolumePoint, &mut [f64]) -> Result<()> + Sync,
    {
        let mut out = self.zeros(n_comp);
        let re = &self.re;
        out.coeffs.par_chunks_mut(n_comp * re.nm).enumerate().try_for_each_init(
            || vec![0.0; n_comp],
            |vals, (e, coef)| -> Result<()> {
                for q in 0..re.nq {
                    let pt = self.volume_point(e, q);
                    f(&pt, vals)?;
                    // mass is J·I, so the quadrature weight's J cancels
                    let w = re.vol_weights[q];
                    let phi = &re.vol_phi[q * re.nm..(q + 1) * re.nm];
                    for (c, &v) in vals.iter().enumerate() {
                        if !v.is_finite() {
                            return Err(Error::State(format!(
                                "projected function is not finite (component {c})"
                            ))
                            .at(crate::error::Location { element: e, point: q, x: pt.x, z: pt.z }));
                        }
                        let row = &mut coef[c * re.nm..(c + 1) * re.nm];
                        for (r, &p) in row.iter_mut().zip(phi) {
                            *r += w * v * p;
                        }
                    }
                }
                Ok(())
            },
        )?;
        Ok(out)
    }

    /// `∫_Ω u_c dx`, summed in element order.
    pub fn integrate(&self, field: &DgField, c: usize) -> f64 {
        // mode 0 is the constant 1/2, so ∫_K u = 2·J·u_0
        (0..field.n_elements).map(|e| 2.0 * self.mass_diagonal(e) * field.get(e, c, 0)).sum()
    }

    /// `‖u_c‖_{L²(Ω)}` from the modal coefficients.
    pub fn l2_norm(&self, field: &DgField, c: usize) -> f64 {
        let nm = field.nm;
        (0..field.n_elements)
            .map(|e| {
                let a = &field.element(e)[c * nm..(c + 1) * nm];
                self.mass_diagonal(e) * a.iter().map(|v| v * v).sum::<f64>()
            })
            .sum::<f64>()
            .sqrt()
    }
}

pub(crate) fn eval_points(phi: &[f64], np: usize, nm: usize, nc: usize, coef: &[f64], out: &mut [f64]) {
    let coef = &coef[..nc * nm];
    for (row, o) in phi[..np * nm].chunks_exact(nm).zip(out[..np * nc].chunks_exact_mut(nc)) {
        for (v, a) in o.iter_mut().zip(coef.chunks_exact(nm)) {
            *v = row.iter().zip(a).map(|(p, a)| p * a).sum();
        }
    }
}
