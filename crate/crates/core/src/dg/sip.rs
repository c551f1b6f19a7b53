//! Symmetric interior penalty form
//! `A(U, V) = Σ_K (α∇U, ∇V)_K − Σ_F [({α∇U}·n, ⟦V⟧) + (⟦U⟧, {α∇V}·n) − (η α⟦U⟧, ⟦V⟧)]`
//! over interior facets, with a continuous coefficient α.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assembly::FacetScratch;
use super::field::{DgField, DgSpace};
use super::viscosity::AlphaField;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SipPenaltyMode {
    /// `η = σ k² / h_F`
    #[default]
    Standard,
    /// `η = σ h_F² / k`
    Literal,
}

impl FromStr for SipPenaltyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Self::Standard),
            "literal" => Ok(Self::Literal),
            other => Err(Error::config(format!("unknown sip_penalty_mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SipParams {
    pub sigma: f64,
    pub mode: SipPenaltyMode,
}

impl Default for SipParams {
    fn default() -> Self {
        Self { sigma: 4.0, mode: SipPenaltyMode::Standard }
    }
}

impl SipParams {
    pub fn penalty(&self, k: usize, h: f64) -> Result<f64> {
        match self.mode {
            SipPenaltyMode::Standard => Ok(self.sigma * (k * k) as f64 / h),
            SipPenaltyMode::Literal if k == 0 => {
                Err(Error::config("literal SIP penalty is undefined for k = 0"))
            }
            SipPenaltyMode::Literal => Ok(self.sigma * h * h / k as f64),
        }
    }
}

impl DgSpace {
    /// Adds the SIP rows `A(U, φ)`; component `c` uses coefficient kind `kind_of[c]`.
    pub fn sip_residual(
        &self,
        u: &DgField,
        alpha: &AlphaField,
        kind_of: &[usize],
        params: &SipParams,
        scratch: &mut FacetScratch,
        residual: &mut DgField,
    ) -> Result<()> {
        if !(params.sigma > 0.0) {
            return Err(Error::config(format!("SIP penalty parameter must be positive, got {}", params.sigma)));
        }
        assert_eq!(kind_of.len(), u.n_comp);
        if alpha.max() == 0.0 {
            return Ok(());
        }
        let re = &self.re;
        let (nc, nm, nq, nq1, k) = (u.n_comp, re.nm, re.nq, re.nq1, re.k);
        let mesh = &self.mesh;

        // per facet point and component: a = −α{∇U}·n + ηα⟦U⟧, b = −α⟦U⟧
        let facets = &mesh.facets;
        let width = nq1 * 2 * nc;
        scratch.values.resize(facets.len() * width, 0.0);
        let penalties: Vec<f64> =
            facets.iter().map(|f| params.penalty(k, f.h_normal)).collect::<Result<_>>()?;
        let n_kinds = alpha.n_kinds;
        scratch.values.par_chunks_mut(width).enumerate().for_each_init(
            || (vec![0.0; 2 * nm], vec![0.0; n_kinds]),
            |(dn, a_k), (id, out)| {
                let f = &facets[id];
                let Some(p) = f.plus else {
                    out.fill(0.0);
                    return;
                };
                let n = f.normal;
                let (mf, pf) = (f.minus_face as usize, f.plus_face as usize);
                let (em, ep) = (&mesh.elements[f.minus], &mesh.elements[p]);
                let (cm, cp) = (u.element(f.minus), u.element(p));
                let (gxm, gzm) = (2.0 * n[0] / em.hx, 2.0 * n[1] / em.hz);
                let (gxp, gzp) = (2.0 * n[0] / ep.hx, 2.0 * n[1] / ep.hz);
                for (qf, o) in out.chunks_exact_mut(2 * nc).enumerate() {
                    let xi = f.minus_face.point(re.nodes1[qf]);
                    let sl = qf * nm..(qf + 1) * nm;
                    let (phm, php) = (&re.face_phi[mf][sl.clone()], &re.face_phi[pf][sl.clone()]);
                    let (dxm, dzm) = (&re.face_dxi[mf][sl.clone()], &re.face_deta[mf][sl.clone()]);
                    let (dxp, dzp) = (&re.face_dxi[pf][sl.clone()], &re.face_deta[pf][sl]);
                    let (dnm, dnp) = dn.split_at_mut(nm);
                    for (d, (x, z)) in dnm.iter_mut().zip(dxm.iter().zip(dzm)) {
                        *d = gxm * x + gzm * z;
                    }
                    for (d, (x, z)) in dnp.iter_mut().zip(dxp.iter().zip(dzp)) {
                        *d = gxp * x + gzp * z;
                    }
                    for (kind, a) in a_k.iter_mut().enumerate() {
                        *a = alpha.at(f.minus, kind, xi);
                    }
                    for ((c, oc), (am, ap)) in
                        o.chunks_exact_mut(2).enumerate().zip(cm.chunks_exact(nm).zip(cp.chunks_exact(nm)))
                    {
                        let a_c = a_k[kind_of[c]];
                        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
                        let jump = dot(am, phm) - dot(ap, php);
                        let dn_mean = 0.5 * (dot(am, dnm) + dot(ap, dnp));
                        oc[0] = -a_c * dn_mean + penalties[id] * a_c * jump;
                        oc[1] = -a_c * jump;
                    }
                }
            },
        );

        let values = &scratch.values;
        residual.coeffs.par_chunks_mut(nc * nm).enumerate().for_each_init(
            || (vec![0.0; 2 * nc], vec![0.0; nm], vec![0.0; n_kinds]),
            |(grad, dn, a_k), (e, r)| {
                let el = &mesh.elements[e];
                let coef = u.element(e);
                let (rx, rz) = (el.hz / el.hx, el.hx / el.hz);
                // volume: (α∇U, ∇φ)_K
                for q in 0..nq {
                    let sl = q * nm..(q + 1) * nm;
                    let (dxi, deta) = (&re.vol_dxi[sl.clone()], &re.vol_deta[sl]);
                    for (kind, a) in a_k.iter_mut().enumerate() {
                        *a = re.vol_weights[q] * alpha.at(e, kind, re.vol_points[q]);
                    }
                    for (g, a) in grad.chunks_exact_mut(2).zip(coef.chunks_exact(nm)) {
                        g[0] = a.iter().zip(dxi).map(|(x, y)| x * y).sum();
                        g[1] = a.iter().zip(deta).map(|(x, y)| x * y).sum();
                    }
                    for ((row, g), kind) in r.chunks_exact_mut(nm).zip(grad.chunks_exact(2)).zip(kind_of) {
                        let wa = a_k[*kind];
                        if wa == 0.0 {
                            continue;
                        }
                        let (gx, gz) = (wa * rx * g[0], wa * rz * g[1]);
                        for (rm, (x, z)) in row.iter_mut().zip(dxi.iter().zip(deta)) {
                            *rm += gx * x + gz * z;
                        }
                    }
                }
                // interior facets
                for (lf, face) in mesh.element_faces[e].iter().enumerate() {
                    let f = &facets[face.facet];
                    if f.plus.is_none() {
                        continue;
                    }
                    let sign = if face.is_minus { 1.0 } else { -1.0 };
                    let (gx, gz) = (2.0 * f.normal[0] / el.hx, 2.0 * f.normal[1] / el.hz);
                    let vals = &values[face.facet * width..(face.facet + 1) * width];
                    for (qf, vq) in vals.chunks_exact(2 * nc).enumerate() {
                        let s = 0.5 * f.length * re.weights1[qf];
                        let sl = qf * nm..(qf + 1) * nm;
                        let (ph, dx, dz) =
                            (&re.face_phi[lf][sl.clone()], &re.face_dxi[lf][sl.clone()], &re.face_deta[lf][sl]);
                        for (d, (x, z)) in dn.iter_mut().zip(dx.iter().zip(dz)) {
                            *d = gx * x + gz * z;
                        }
                        for (row, v) in r.chunks_exact_mut(nm).zip(vq.chunks_exact(2)) {
                            let (a, b) = (sign * s * v[0], 0.5 * s * v[1]);
                            for (rm, (p, d)) in row.iter_mut().zip(ph.iter().zip(dn.iter())) {
                                *rm += a * p + b * d;
                            }
                        }
                    }
                }
            },
        );
        Ok(())
    }
}
