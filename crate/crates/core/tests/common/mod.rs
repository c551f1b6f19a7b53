#![allow(dead_code)]

use std::path::Path;

use moistdg::driver::{CaseConfig, CaseKind};

/// A coarse, quick configuration of `case` writing into `dir`.
pub fn small(case: CaseKind, nx: usize, nz: usize, k: usize, dt: f64, t_end: f64, dir: &Path) -> CaseConfig {
    let mut c = CaseConfig::new(case);
    c.mesh.nx = Some(nx);
    c.mesh.nz = Some(nz);
    c.discretisation.k = Some(k);
    c.time.dt = Some(dt);
    c.time.t_end = Some(t_end);
    c.time.report_interval = Some(0);
    c.output.dir = dir.to_path_buf();
    c
}
