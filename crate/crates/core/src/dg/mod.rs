//! Discretisation building blocks: quadrature, basis, mesh, fields, residual
//! assembly, interior-penalty diffusion and the artificial-viscosity field.

pub mod assembly;
pub mod basis;
pub mod field;
pub mod mesh;
pub mod quadrature;
pub mod sip;
pub mod viscosity;

pub use assembly::{FacetPoint, FacetScratch, PlusTrace};
pub use basis::{basis_eval, LocalFace, RefElement};
pub use field::{DgField, DgSpace, VolumePoint};
pub use mesh::{BoundaryTag, Element, Facet, Orientation, StructuredQuadMesh};
pub use quadrature::{gauss_legendre, quadrature_rule, QuadratureRule};
pub use sip::{SipParams, SipPenaltyMode};
pub use viscosity::{artificial_viscosity_coefficient, AlphaField};

use std::sync::Arc;

use crate::error::Result;

/// Uniform structured mesh of `[0, x_extent] × [0, z_extent]`.
pub fn build_mesh(nx: usize, nz: usize, x_extent: f64, z_extent: f64, periodic_x: bool) -> Result<Arc<StructuredQuadMesh>> {
    StructuredQuadMesh::build(nx, nz, x_extent, z_extent, periodic_x).map(Arc::new)
}
