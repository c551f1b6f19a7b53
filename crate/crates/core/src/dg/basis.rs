//! Orthonormal tensor-product Legendre basis on the reference square and
//! the reference-element tables used by assembly.

use super::quadrature::{gauss_legendre, legendre_with_derivative};

/// L²(-1, 1)-orthonormal Legendre polynomial of degree `n` and its derivative.
#[inline]
pub fn legendre_orthonormal(n: usize, x: f64) -> (f64, f64) {
    let (p, d) = legendre_with_derivative(n, x);
    let s = ((2 * n + 1) as f64 / 2.0).sqrt();
    (s * p, s * d)
}

/// Values and reference gradients of all `(k+1)²` modes at `(ξ, η)`.
/// Mode `m = j·(k+1) + i` is `P_i(ξ) P_j(η)`.
pub fn basis_eval(k: usize, point: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
    let n1 = k + 1;
    let px: Vec<_> = (0..n1).map(|i| legendre_orthonormal(i, point[0])).collect();
    let pz: Vec<_> = (0..n1).map(|j| legendre_orthonormal(j, point[1])).collect();
    let mut values = Vec::with_capacity(n1 * n1);
    let mut grads = Vec::with_capacity(n1 * n1);
    for (vz, dz) in &pz {
        for (vx, dx) in &px {
            values.push(vx * vz);
            grads.push([dx * vz, vx * dz]);
        }
    }
    (values, grads)
}

/// Local faces of the reference square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LocalFace {
    Left = 0,
    Right = 1,
    Bottom = 2,
    Top = 3,
}

impl LocalFace {
    pub const ALL: [LocalFace; 4] = [LocalFace::Left, LocalFace::Right, LocalFace::Bottom, LocalFace::Top];

    /// Reference coordinates of the face point with parameter `s ∈ [-1, 1]`.
    pub fn point(self, s: f64) -> [f64; 2] {
        match self {
            LocalFace::Left => [-1.0, s],
            LocalFace::Right => [1.0, s],
            LocalFace::Bottom => [s, -1.0],
            LocalFace::Top => [s, 1.0],
        }
    }
}

/// Tabulated basis data for order `k` with `k + 2` Gauss points per direction.
#[derive(Debug, Clone)]
pub struct RefElement {
    pub k: usize,
    /// Modes per element, `(k+1)²`.
    pub nm: usize,
    /// Quadrature points per direction.
    pub nq1: usize,
    /// Volume quadrature points, `nq1²`.
    pub nq: usize,
    pub nodes1: Vec<f64>,
    pub weights1: Vec<f64>,
    /// `[q·nm + m]`
    pub vol_phi: Vec<f64>,
    pub vol_dxi: Vec<f64>,
    pub vol_deta: Vec<f64>,
    pub vol_weights: Vec<f64>,
    pub vol_points: Vec<[f64; 2]>,
    /// Per local face, `[qf·nm + m]`.
    pub face_phi: [Vec<f64>; 4],
    pub face_dxi: [Vec<f64>; 4],
    pub face_deta: [Vec<f64>; 4],
}

impl RefElement {
    pub fn new(k: usize) -> Self {
        Self::with_quadrature(k, k + 2)
    }

    pub fn with_quadrature(k: usize, nq1: usize) -> Self {
        let nm = (k + 1) * (k + 1);
        let (nodes1, weights1) = gauss_legendre(nq1);
        let nq = nq1 * nq1;
        let mut vol_phi = Vec::with_capacity(nq * nm);
        let mut vol_dxi = Vec::with_capacity(nq * nm);
        let mut vol_deta = Vec::with_capacity(nq * nm);
        let mut vol_weights = Vec::with_capacity(nq);
        let mut vol_points = Vec::with_capacity(nq);
        for qz in 0..nq1 {
            for qx in 0..nq1 {
                let p = [nodes1[qx], nodes1[qz]];
                let (v, g) = basis_eval(k, p);
                vol_phi.extend_from_slice(&v);
                vol_dxi.extend(g.iter().map(|g| g[0]));
                vol_deta.extend(g.iter().map(|g| g[1]));
                vol_weights.push(weights1[qx] * weights1[qz]);
                vol_points.push(p);
            }
        }
        let mut face_phi: [Vec<f64>; 4] = Default::default();
        let mut face_dxi: [Vec<f64>; 4] = Default::default();
        let mut face_deta: [Vec<f64>; 4] = Default::default();
        for face in LocalFace::ALL {
            let f = face as usize;
            for &s in &nodes1 {
                let (v, g) = basis_eval(k, face.point(s));
                face_phi[f].extend_from_slice(&v);
                face_dxi[f].extend(g.iter().map(|g| g[0]));
                face_deta[f].extend(g.iter().map(|g| g[1]));
            }
        }
        Self {
            k,
            nm,
            nq1,
            nq,
            nodes1,
            weights1,
            vol_phi,
            vol_dxi,
            vol_deta,
            vol_weights,
            vol_points,
            face_phi,
            face_dxi,
            face_deta,
        }
    }
}
