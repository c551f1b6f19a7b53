use rayon::prelude::*;

use super::field::DgSpace;
use super::mesh::StructuredQuadMesh;

/// Continuous, piecewise-bilinear diffusion coefficient with several independent
/// kinds (e.g. one for the air velocity, one for the rain velocity).
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaField {
    pub nx: usize,
    pub nz: usize,
    pub n_kinds: usize,
    /// Element constants, `[e·n_kinds + kind]`.
    pub element: Vec<f64>,
    /// Vertex values, `[(j·(nx+1) + i)·n_kinds + kind]`.
    pub vertex: Vec<f64>,
}

impl AlphaField {
    pub fn zeros(mesh: &StructuredQuadMesh, n_kinds: usize) -> Self {
        Self {
            nx: mesh.nx,
            nz: mesh.nz,
            n_kinds,
            element: vec![0.0; mesh.n_elements() * n_kinds],
            vertex: vec![0.0; (mesh.nx + 1) * (mesh.nz + 1) * n_kinds],
        }
    }

    /// Vertex averaging of element constants: each vertex takes the arithmetic
    /// mean over its adjacent elements (wrapping in x when periodic).
    pub fn from_element_values(mesh: &StructuredQuadMesh, n_kinds: usize, element: Vec<f64>) -> Self {
        let (nx, nz) = (mesh.nx, mesh.nz);
        assert_eq!(element.len(), nx * nz * n_kinds);
        let mut vertex = vec![0.0; (nx + 1) * (nz + 1) * n_kinds];
        for j in 0..=nz {
            for i in 0..=nx {
                let mut cols: Vec<usize> = Vec::with_capacity(2);
                if mesh.periodic_x {
                    cols.push((i + nx - 1) % nx);
                    cols.push(i % nx);
                    cols.dedup();
                } else {
                    if i > 0 {
                        cols.push(i - 1);
                    }
                    if i < nx {
                        cols.push(i);
                    }
                }
                let rows: Vec<usize> = [j.checked_sub(1), (j < nz).then_some(j)].into_iter().flatten().collect();
                let count = (cols.len() * rows.len()) as f64;
                for kind in 0..n_kinds {
                    let mut s = 0.0;
                    for &r in &rows {
                        for &c in &cols {
                            s += element[(r * nx + c) * n_kinds + kind];
                        }
                    }
                    vertex[(j * (nx + 1) + i) * n_kinds + kind] = s / count;
                }
            }
        }
        Self { nx, nz, n_kinds, element, vertex }
    }

    /// Corner values of element `(i, j)` for one kind: `[bottom-left, bottom-right, top-left, top-right]`.
    #[inline]
    pub fn corners(&self, e: usize, kind: usize) -> [f64; 4] {
        let (i, j) = (e % self.nx, e / self.nx);
        let v = |ii: usize, jj: usize| self.vertex[(jj * (self.nx + 1) + ii) * self.n_kinds + kind];
        [v(i, j), v(i + 1, j), v(i, j + 1), v(i + 1, j + 1)]
    }

    /// Bilinear interpolation at reference point `xi` of element `e`.
    #[inline]
    pub fn at(&self, e: usize, kind: usize, xi: [f64; 2]) -> f64 {
        let [a, b, c, d] = self.corners(e, kind);
        let (sx, sz) = (0.5 * (1.0 + xi[0]), 0.5 * (1.0 + xi[1]));
        (1.0 - sz) * ((1.0 - sx) * a + sx * b) + sz * ((1.0 - sx) * c + sx * d)
    }

    pub fn max(&self) -> f64 {
        self.vertex.iter().copied().fold(0.0, f64::max)
    }
}

/// `α_K = γ · ½ · ‖s‖_{L²(K)}` for each kind of speed `s`, made continuous by vertex averaging.
///
/// `speed(e, q, out)` writes the speed of every kind at volume point `q` of element `e`.
pub fn artificial_viscosity_coefficient<F>(space: &DgSpace, gamma: f64, n_kinds: usize, speed: F) -> AlphaField
where
    F: Fn(usize, usize, &mut [f64]) + Sync,
{
    let mesh = &space.mesh;
    if gamma == 0.0 {
        return AlphaField::zeros(mesh, n_kinds);
    }
    let re = &space.re;
    let mut element = vec![0.0; mesh.n_elements() * n_kinds];
    element.par_chunks_mut(n_kinds).enumerate().for_each_init(
        || vec![0.0; n_kinds],
        |s, (e, out)| {
            let jac = mesh.elements[e].jacobian();
            out.iter_mut().for_each(|v| *v = 0.0);
            for q in 0..re.nq {
                speed(e, q, s);
                for (o, v) in out.iter_mut().zip(s.iter()) {
                    *o += re.vol_weights[q] * jac * v * v;
                }
            }
            out.iter_mut().for_each(|v| *v = 0.5 * gamma * v.sqrt());
        },
    );
    AlphaField::from_element_values(mesh, n_kinds, element)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;

    fn space(periodic: bool) -> DgSpace {
        DgSpace::new(Arc::new(StructuredQuadMesh::build(4, 3, 8.0, 3.0, periodic).unwrap()), 2)
    }

    #[test]
    fn zero_speed_or_gamma() {
        let s = space(false);
        let a = artificial_viscosity_coefficient(&s, 0.3, 2, |_, _, o| o.fill(0.0));
        assert_eq!(a.max(), 0.0);
        let b = artificial_viscosity_coefficient(&s, 0.0, 2, |_, _, o| o.fill(5.0));
        assert_eq!(b.max(), 0.0);
    }

    #[test]
    fn uniform_speed_survives_averaging() {
        for periodic in [false, true] {
            let s = space(periodic);
            let (gamma, a) = (0.25, 3.0);
            let alpha = artificial_viscosity_coefficient(&s, gamma, 1, |_, _, o| o[0] = a);
            let area: f64 = s.mesh.elements[0].area();
            let expected = gamma * 0.5 * a * area.sqrt();
            for v in alpha.element.iter().chain(&alpha.vertex) {
                assert!((v - expected).abs() < 1e-12);
            }
            assert!((alpha.at(5, 0, [0.3, -0.8]) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn averaging_is_continuous_across_the_periodic_seam() {
        let s = space(true);
        let mesh = &s.mesh;
        let vals: Vec<f64> = (0..mesh.n_elements()).map(|e| e as f64).collect();
        let a = AlphaField::from_element_values(mesh, 1, vals);
        for j in 0..mesh.nz {
            let first = j * mesh.nx;
            let last = first + mesh.nx - 1;
            for s in [-1.0, 0.0, 0.5, 1.0] {
                assert!((a.at(first, 0, [-1.0, s]) - a.at(last, 0, [1.0, s])).abs() < 1e-14);
            }
        }
        // corner vertex of a non-periodic mesh has one neighbour
        let s2 = space(false);
        let vals: Vec<f64> = (0..s2.mesh.n_elements()).map(|e| e as f64).collect();
        let b = AlphaField::from_element_values(&s2.mesh, 1, vals);
        assert_eq!(b.vertex[0], 0.0);
        assert_eq!(b.vertex[1], 0.5);
    }
}
