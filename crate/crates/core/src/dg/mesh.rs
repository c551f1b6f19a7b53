//! Structured tensor-product quadrilateral mesh of a rectangle `[0, Lx] × [0, Lz]`.
//!
//! Elements are numbered row by row, `e = j·nx + i`, with `i` along x.
//! Every facet carries one fixed unit normal: for interior facets it points
//! from the left/lower element (the *minus* side) to the right/upper one,
//! for boundary facets it is the outward normal of the domain.

use serde::{Deserialize, Serialize};

use super::basis::LocalFace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryTag {
    Bottom,
    Top,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Facet along z (normal ±x).
    Vertical,
    /// Facet along x (normal ±z).
    Horizontal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Element {
    pub i: usize,
    pub j: usize,
    pub x0: f64,
    pub z0: f64,
    pub hx: f64,
    pub hz: f64,
}

impl Element {
    /// Determinant of the affine map from the reference square.
    #[inline]
    pub fn jacobian(&self) -> f64 {
        0.25 * self.hx * self.hz
    }

    #[inline]
    pub fn area(&self) -> f64 {
        self.hx * self.hz
    }

    #[inline]
    pub fn map(&self, xi: [f64; 2]) -> [f64; 2] {
        [self.x0 + 0.5 * (xi[0] + 1.0) * self.hx, self.z0 + 0.5 * (xi[1] + 1.0) * self.hz]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Facet {
    pub orientation: Orientation,
    /// Element on the minus side (the only element for boundary facets).
    pub minus: usize,
    pub minus_face: LocalFace,
    /// Element on the plus side; `None` on the domain boundary.
    pub plus: Option<usize>,
    pub plus_face: LocalFace,
    pub boundary: Option<BoundaryTag>,
    pub normal: [f64; 2],
    pub length: f64,
    /// Element size across the facet (minimum of both sides).
    pub h_normal: f64,
    /// Element row for vertical facets, node row for horizontal facets.
    pub row: usize,
}

/// Reference to one face of an element and the facet behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceRef {
    pub facet: usize,
    /// True when the element is the minus side (or the facet is a boundary facet).
    pub is_minus: bool,
}

#[derive(Debug, Clone)]
pub struct StructuredQuadMesh {
    pub nx: usize,
    pub nz: usize,
    pub x_nodes: Vec<f64>,
    pub z_nodes: Vec<f64>,
    pub periodic_x: bool,
    pub elements: Vec<Element>,
    pub facets: Vec<Facet>,
    /// Faces of each element in `LocalFace` order.
    pub element_faces: Vec<[FaceRef; 4]>,
}

impl StructuredQuadMesh {
    /// Uniform mesh of `[0, x_extent] × [0, z_extent]`.
    pub fn build(nx: usize, nz: usize, x_extent: f64, z_extent: f64, periodic_x: bool) -> Result<Self> {
        if nx == 0 || nz == 0 {
            return Err(Error::Mesh(format!("element counts must be positive, got {nx} x {nz}")));
        }
        if !(x_extent > 0.0 && z_extent > 0.0) || !x_extent.is_finite() || !z_extent.is_finite() {
            return Err(Error::Mesh(format!("extents must be positive, got {x_extent} x {z_extent}")));
        }
        let xs = (0..=nx).map(|i| x_extent * i as f64 / nx as f64).collect();
        let zs = (0..=nz).map(|j| z_extent * j as f64 / nz as f64).collect();
        Self::from_nodes(xs, zs, periodic_x)
    }

    /// Tensor mesh from strictly increasing node coordinates.
    pub fn from_nodes(x_nodes: Vec<f64>, z_nodes: Vec<f64>, periodic_x: bool) -> Result<Self> {
        if x_nodes.len() < 2 || z_nodes.len() < 2 {
            return Err(Error::Mesh("need at least one element per direction".into()));
        }
        for w in x_nodes.windows(2).chain(z_nodes.windows(2)) {
            if !(w[1] > w[0]) {
                return Err(Error::Mesh("node coordinates must be strictly increasing".into()));
            }
        }
        let nx = x_nodes.len() - 1;
        let nz = z_nodes.len() - 1;
        let mut elements = Vec::with_capacity(nx * nz);
        for j in 0..nz {
            for i in 0..nx {
                elements.push(Element {
                    i,
                    j,
                    x0: x_nodes[i],
                    z0: z_nodes[j],
                    hx: x_nodes[i + 1] - x_nodes[i],
                    hz: z_nodes[j + 1] - z_nodes[j],
                });
            }
        }
        let eid = |i: usize, j: usize| j * nx + i;
        let dummy = FaceRef { facet: usize::MAX, is_minus: true };
        let mut element_faces = vec![[dummy; 4]; nx * nz];
        let mut facets = Vec::new();

        // vertical facets, row by row
        for j in 0..nz {
            let hz = z_nodes[j + 1] - z_nodes[j];
            for i in 0..=nx {
                let facet = if i == 0 {
                    if periodic_x {
                        continue; // the wrap-around facet is created at i == nx
                    }
                    Facet {
                        orientation: Orientation::Vertical,
                        minus: eid(0, j),
                        minus_face: LocalFace::Left,
                        plus: None,
                        plus_face: LocalFace::Right,
                        boundary: Some(BoundaryTag::Left),
                        normal: [-1.0, 0.0],
                        length: hz,
                        h_normal: elements[eid(0, j)].hx,
                        row: j,
                    }
                } else if i == nx {
                    if periodic_x {
                        let (a, b) = (eid(nx - 1, j), eid(0, j));
                        Facet {
                            orientation: Orientation::Vertical,
                            minus: a,
                            minus_face: LocalFace::Right,
                            plus: Some(b),
                            plus_face: LocalFace::Left,
                            boundary: None,
                            normal: [1.0, 0.0],
                            length: hz,
                            h_normal: elements[a].hx.min(elements[b].hx),
                            row: j,
                        }
                    } else {
                        Facet {
                            orientation: Orientation::Vertical,
                            minus: eid(nx - 1, j),
                            minus_face: LocalFace::Right,
                            plus: None,
                            plus_face: LocalFace::Left,
                            boundary: Some(BoundaryTag::Right),
                            normal: [1.0, 0.0],
                            length: hz,
                            h_normal: elements[eid(nx - 1, j)].hx,
                            row: j,
                        }
                    }
                } else {
                    let (a, b) = (eid(i - 1, j), eid(i, j));
                    Facet {
                        orientation: Orientation::Vertical,
                        minus: a,
                        minus_face: LocalFace::Right,
                        plus: Some(b),
                        plus_face: LocalFace::Left,
                        boundary: None,
                        normal: [1.0, 0.0],
                        length: hz,
                        h_normal: elements[a].hx.min(elements[b].hx),
                        row: j,
                    }
                };
                facets.push(facet);
            }
        }
        // horizontal facets, node row by node row
        for j in 0..=nz {
            for i in 0..nx {
                let hx = x_nodes[i + 1] - x_nodes[i];
                let facet = if j == 0 {
                    Facet {
                        orientation: Orientation::Horizontal,
                        minus: eid(i, 0),
                        minus_face: LocalFace::Bottom,
                        plus: None,
                        plus_face: LocalFace::Top,
                        boundary: Some(BoundaryTag::Bottom),
                        normal: [0.0, -1.0],
                        length: hx,
                        h_normal: elements[eid(i, 0)].hz,
                        row: 0,
                    }
                } else if j == nz {
                    Facet {
                        orientation: Orientation::Horizontal,
                        minus: eid(i, nz - 1),
                        minus_face: LocalFace::Top,
                        plus: None,
                        plus_face: LocalFace::Bottom,
                        boundary: Some(BoundaryTag::Top),
                        normal: [0.0, 1.0],
                        length: hx,
                        h_normal: elements[eid(i, nz - 1)].hz,
                        row: nz,
                    }
                } else {
                    let (a, b) = (eid(i, j - 1), eid(i, j));
                    Facet {
                        orientation: Orientation::Horizontal,
                        minus: a,
                        minus_face: LocalFace::Top,
                        plus: Some(b),
                        plus_face: LocalFace::Bottom,
                        boundary: None,
                        normal: [0.0, 1.0],
                        length: hx,
                        h_normal: elements[a].hz.min(elements[b].hz),
                        row: j,
                    }
                };
                facets.push(facet);
            }
        }
        for (id, f) in facets.iter().enumerate() {
            element_faces[f.minus][f.minus_face as usize] = FaceRef { facet: id, is_minus: true };
            if let Some(p) = f.plus {
                element_faces[p][f.plus_face as usize] = FaceRef { facet: id, is_minus: false };
            }
        }
        debug_assert!(element_faces.iter().flatten().all(|r| r.facet != usize::MAX));
        Ok(Self { nx, nz, x_nodes, z_nodes, periodic_x, elements, facets, element_faces })
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn x_extent(&self) -> f64 {
        self.x_nodes[self.nx] - self.x_nodes[0]
    }

    pub fn z_extent(&self) -> f64 {
        self.z_nodes[self.nz] - self.z_nodes[0]
    }

    pub fn interior_facets(&self) -> impl Iterator<Item = &Facet> {
        self.facets.iter().filter(|f| f.plus.is_some())
    }

    pub fn boundary_facets(&self) -> impl Iterator<Item = (usize, &Facet)> {
        self.facets.iter().enumerate().filter(|(_, f)| f.boundary.is_some())
    }

    /// Smallest element edge length.
    pub fn min_h(&self) -> f64 {
        self.elements.iter().map(|e| e.hx.min(e.hz)).fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(m: &StructuredQuadMesh) -> (usize, usize) {
        let interior = m.interior_facets().count();
        (interior, m.facets.len() - interior)
    }

    #[test]
    fn single_element() {
        let m = StructuredQuadMesh::build(1, 1, 1.0, 1.0, false).unwrap();
        assert_eq!(m.n_elements(), 1);
        assert_eq!(counts(&m), (0, 4));
    }

    #[test]
    fn two_elements() {
        let m = StructuredQuadMesh::build(2, 1, 2.0, 1.0, false).unwrap();
        assert_eq!(counts(&m), (1, 6));
        let p = StructuredQuadMesh::build(2, 1, 2.0, 1.0, true).unwrap();
        assert_eq!(counts(&p), (2, 4));
        assert!(p
            .boundary_facets()
            .all(|(_, f)| matches!(f.boundary, Some(BoundaryTag::Bottom | BoundaryTag::Top))));
    }

    #[test]
    fn facet_count_formula() {
        for (nx, nz, periodic) in [(3, 4, false), (3, 4, true), (7, 2, true), (1, 5, false)] {
            let m = StructuredQuadMesh::build(nx, nz, 10.0, 5.0, periodic).unwrap();
            let (interior, boundary) = counts(&m);
            let vertical_interior = if periodic { nx * nz } else { (nx - 1) * nz };
            assert_eq!(interior, vertical_interior + nx * (nz - 1));
            assert_eq!(boundary, 2 * nx + if periodic { 0 } else { 2 * nz });
            // every element sees four faces, each interior facet is seen twice
            let seen: usize = m.element_faces.iter().map(|f| f.len()).sum();
            assert_eq!(seen, 2 * interior + boundary);
            for f in &m.facets {
                assert!((f.normal[0].hypot(f.normal[1]) - 1.0).abs() < 1e-15);
            }
            assert!(m.elements.iter().all(|e| e.jacobian() > 0.0));
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(StructuredQuadMesh::build(0, 1, 1.0, 1.0, false).is_err());
        assert!(StructuredQuadMesh::build(1, 1, 0.0, 1.0, false).is_err());
        assert!(StructuredQuadMesh::from_nodes(vec![0.0, 0.0], vec![0.0, 1.0], false).is_err());
    }
}
