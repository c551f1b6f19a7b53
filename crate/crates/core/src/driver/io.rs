//! Snapshot, restart and CSV output.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::VtkFormat;
use crate::dg::{basis_eval, DgField, DgSpace};
use crate::error::{Error, Result};
use crate::model::{BaseStatePoint, ConservedState, MoistModel, NCOMP, NSECONDARY};

/// Point fields of a snapshot, in file order.
pub const SNAPSHOT_FIELDS: [&str; 14] = [
    "rho_d_pert",
    "rho_m_pert",
    "rho_r_pert",
    "mom_x",
    "mom_z",
    "E_pert",
    "rho_v",
    "rho_c",
    "T",
    "p_pert",
    "u_x",
    "u_z",
    "theta_e",
    "theta_rho_pert",
];

/// Equispaced sample coordinates `ξ_i = −1 + (2i + 1)/(k + 1)`, cell centres of a `(k+1)` split.
pub fn sample_nodes(k: usize) -> Vec<f64> {
    (0..=k).map(|i| -1.0 + (2 * i + 1) as f64 / (k + 1) as f64).collect()
}

/// Sampled point data on the structured grid of a snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub title: String,
    /// Points per direction `(x, z)`.
    pub dims: [usize; 2],
    /// `(x, z)` of each point, x fastest.
    pub points: Vec<[f64; 2]>,
    pub fields: Vec<(String, Vec<f64>)>,
}

impl Snapshot {
    pub fn field(&self, name: &str) -> Option<&[f64]> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }
}

/// Samples the conserved fields and the pointwise recovered quantities.
///
/// `base_at(z)` supplies the base state at the sample heights.
pub fn sample_snapshot(
    space: &DgSpace,
    model: &MoistModel,
    u: &DgField,
    aux: &DgField,
    base_at: &dyn Fn(f64) -> BaseStatePoint,
    title: &str,
) -> Result<Snapshot> {
    let mesh = &space.mesh;
    let k = space.k();
    let ns = k + 1;
    let nodes = sample_nodes(k);
    let dims = [mesh.nx * ns, mesh.nz * ns];
    let npts = dims[0] * dims[1];
    let mut points = vec![[0.0; 2]; npts];
    let mut values = vec![vec![0.0; npts]; SNAPSHOT_FIELDS.len()];
    // basis values at the sample points, shared by all elements
    let phis: Vec<Vec<f64>> = (0..ns * ns).map(|s| basis_eval(k, [nodes[s % ns], nodes[s / ns]]).0).collect();
    let nm = space.re.nm;
    let c = &model.thermo;
    let mut bases: Vec<Option<BaseStatePoint>> = vec![None; dims[1]];
    for (e, el) in mesh.elements.iter().enumerate() {
        let coef = u.element(e);
        let acoef = aux.element(e);
        for (s, phi) in phis.iter().enumerate() {
            let (si, sj) = (s % ns, s / ns);
            let [x, z] = el.map([nodes[si], nodes[sj]]);
            let gi = (el.i * ns + si) + (el.j * ns + sj) * dims[0];
            points[gi] = [x, z];
            let mut uq = [0.0; NCOMP];
            for (cc, v) in uq.iter_mut().enumerate() {
                *v = phi.iter().zip(&coef[cc * nm..(cc + 1) * nm]).map(|(p, a)| p * a).sum();
            }
            let mut aq = [0.0; NSECONDARY];
            for (cc, v) in aq.iter_mut().enumerate() {
                *v = phi.iter().zip(&acoef[cc * nm..(cc + 1) * nm]).map(|(p, a)| p * a).sum();
            }
            let row = el.j * ns + sj;
            let b = *bases[row].get_or_insert_with(|| base_at(z));
            let cs = ConservedState::from_slice(&uq);
            let sec = if uq.iter().all(|&v| v == 0.0) {
                model.complete_secondary(&cs, &b, b.rho_v_bar, b.rho_c_bar, b.t_bar)
            } else {
                model.recover_secondary(&cs, &b, b.t_bar + aq[2]).map_err(|err| {
                    err.at(crate::error::Location { element: e, point: s, x, z })
                })?
            };
            let rho_d = b.rho_d_bar + cs.rho_d_pert;
            let rho_r = b.rho_r_bar + cs.rho_r_pert;
            let q_w = (sec.rho_v + sec.rho_c + rho_r) / rho_d;
            let p = b.p_bar + sec.p_pert;
            let theta_rho = c.density_potential_temperature(p, sec.t, sec.rho_v / rho_d);
            let theta_rho_bar = c.density_potential_temperature(b.p_bar, b.t_bar, b.rho_v_bar / b.rho_d_bar);
            let row_vals = [
                uq[0],
                uq[1],
                uq[2],
                uq[3],
                uq[4],
                uq[5],
                sec.rho_v,
                sec.rho_c,
                sec.t,
                sec.p_pert,
                sec.u[0],
                sec.u[1],
                c.wet_equivalent_potential_temperature(rho_d, sec.rho_v, sec.t, q_w),
                theta_rho - theta_rho_bar,
            ];
            for (f, v) in row_vals.iter().enumerate() {
                values[f][gi] = *v;
            }
        }
    }
    let fields = SNAPSHOT_FIELDS.iter().map(|s| s.to_string()).zip(values).collect();
    Ok(Snapshot { title: title.to_string(), dims, points, fields })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Legacy VTK structured grid, ASCII or big-endian binary.
pub fn write_vtk(snap: &Snapshot, path: &Path, format: VtkFormat) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = create(path)?;
    let n = snap.points.len();
    let title: String = snap.title.chars().filter(|c| *c != '\n').take(255).collect();
    let mode = match format {
        VtkFormat::Ascii => "ASCII",
        VtkFormat::Binary => "BINARY",
    };
    write!(
        w,
        "# vtk DataFile Version 3.0\n{title}\n{mode}\nDATASET STRUCTURED_GRID\nDIMENSIONS {} {} 1\nPOINTS {n} double\n",
        snap.dims[0], snap.dims[1]
    )
    .map_err(io)?;
    let write_values = |w: &mut BufWriter<File>, vals: &mut dyn Iterator<Item = f64>| -> std::io::Result<()> {
        match format {
            VtkFormat::Ascii => {
                for v in vals {
                    // shortest round-trip representation
                    writeln!(w, "{v:?}")?;
                }
            }
            VtkFormat::Binary => {
                for v in vals {
                    w.write_all(&v.to_be_bytes())?;
                }
                w.write_all(b"\n")?;
            }
        }
        Ok(())
    };
    write_values(&mut w, &mut snap.points.iter().flat_map(|p| [p[0], p[1], 0.0])).map_err(io)?;
    writeln!(w, "POINT_DATA {n}").map_err(io)?;
    for (name, vals) in &snap.fields {
        write!(w, "SCALARS {name} double 1\nLOOKUP_TABLE default\n").map_err(io)?;
        write_values(&mut w, &mut vals.iter().copied()).map_err(io)?;
    }
    w.flush().map_err(io)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl Cursor<'_> {
    fn bad(&self, message: impl Into<String>) -> Error {
        Error::Format { path: self.path.to_path_buf(), message: message.into() }
    }

    fn line(&mut self) -> Result<&str> {
        let rest = &self.data[self.pos..];
        if rest.is_empty() {
            return Err(self.bad("unexpected end of file"));
        }
        let end = rest.iter().position(|&b| b == b'\n').unwrap_or(rest.len());
        self.pos += (end + 1).min(rest.len());
        std::str::from_utf8(&rest[..end]).map(str::trim_end).map_err(|_| self.bad("non-UTF-8 header line"))
    }

    fn values(&mut self, n: usize, binary: bool) -> Result<Vec<f64>> {
        if binary {
            let bytes = self.data.get(self.pos..self.pos + 8 * n).ok_or_else(|| self.bad("truncated binary block"))?;
            let vals = bytes.chunks_exact(8).map(|c| f64::from_be_bytes(c.try_into().unwrap())).collect();
            self.pos += 8 * n;
            if self.data.get(self.pos) == Some(&b'\n') {
                self.pos += 1;
            }
            Ok(vals)
        } else {
            (0..n)
                .map(|_| {
                    let l = self.line()?.trim().to_string();
                    l.parse::<f64>().map_err(|_| self.bad(format!("bad number '{l}'")))
                })
                .collect()
        }
    }
}

/// Reads a file written by [`write_vtk`].
pub fn read_vtk(path: &Path) -> Result<Snapshot> {
    let mut data = Vec::new();
    File::open(path).and_then(|mut f| f.read_to_end(&mut data)).map_err(|e| Error::io(path, e))?;
    let mut c = Cursor { data: &data, pos: 0, path };
    if !c.line()?.starts_with("# vtk DataFile") {
        return Err(c.bad("missing VTK header"));
    }
    let title = c.line()?.to_string();
    let encoding = c.line()?.to_string();
    let binary = match encoding.as_str() {
        "ASCII" => false,
        "BINARY" => true,
        other => return Err(c.bad(format!("unknown encoding '{other}'"))),
    };
    if c.line()? != "DATASET STRUCTURED_GRID" {
        return Err(c.bad("only STRUCTURED_GRID datasets are supported"));
    }
    let dims_line = c.line()?.to_string();
    let dims: Vec<usize> = dims_line.split_whitespace().skip(1).filter_map(|s| s.parse().ok()).collect();
    if dims.len() != 3 || dims[2] != 1 {
        return Err(c.bad(format!("bad DIMENSIONS line '{dims_line}'")));
    }
    let n = dims[0] * dims[1];
    let pts_line = c.line()?.to_string();
    if pts_line != format!("POINTS {n} double") {
        return Err(c.bad(format!("bad POINTS line '{pts_line}'")));
    }
    let xyz = c.values(3 * n, binary)?;
    let points = xyz.chunks_exact(3).map(|p| [p[0], p[1]]).collect();
    if c.line()? != format!("POINT_DATA {n}") {
        return Err(c.bad("missing POINT_DATA"));
    }
    let mut fields = Vec::new();
    while c.pos < data.len() {
        let head = c.line()?.to_string();
        if head.is_empty() {
            continue;
        }
        let parts: Vec<&str> = head.split_whitespace().collect();
        if parts.len() < 3 || parts[0] != "SCALARS" {
            return Err(c.bad(format!("unexpected line '{head}'")));
        }
        if c.line()? != "LOOKUP_TABLE default" {
            return Err(c.bad("missing LOOKUP_TABLE"));
        }
        fields.push((parts[1].to_string(), c.values(n, binary)?));
    }
    Ok(Snapshot { title, dims: [dims[0], dims[1]], points, fields })
}

/// Header of a restart file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartHeader {
    pub config_hash: String,
    pub time: f64,
    pub step: usize,
    pub fallout: f64,
    pub fallout_profile: Vec<f64>,
    pub k: usize,
    pub n_elements: usize,
    /// Element artificial-viscosity constants.
    pub alpha_element: Vec<f64>,
}

/// Modal state needed to continue a run bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartData {
    pub header: RestartHeader,
    pub u: DgField,
    pub aux: DgField,
}

const RESTART_MAGIC: &[u8] = b"MOISTDG-RESTART 1\n";

pub fn write_restart(path: &Path, data: &RestartData) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = create(path)?;
    w.write_all(RESTART_MAGIC).map_err(io)?;
    let header = serde_json::to_string(&data.header).expect("header serialises");
    writeln!(w, "{header}").map_err(io)?;
    for v in data.u.coeffs.iter().chain(&data.aux.coeffs) {
        w.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_restart(path: &Path) -> Result<RestartData> {
    let mut bytes = Vec::new();
    File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(|e| Error::io(path, e))?;
    let bad = |m: &str| Error::Format { path: PathBuf::from(path), message: m.to_string() };
    let rest = bytes.strip_prefix(RESTART_MAGIC).ok_or_else(|| bad("not a restart file"))?;
    let nl = rest.iter().position(|&b| b == b'\n').ok_or_else(|| bad("missing header"))?;
    let header: RestartHeader =
        serde_json::from_slice(&rest[..nl]).map_err(|e| bad(&format!("bad header: {e}")))?;
    let body = &rest[nl + 1..];
    let mut u = DgField::zeros(header.k, header.n_elements, NCOMP);
    let mut aux = DgField::zeros(header.k, header.n_elements, NSECONDARY);
    if body.len() != 8 * (u.coeffs.len() + aux.coeffs.len()) {
        return Err(bad("coefficient block has the wrong length"));
    }
    let mut vals = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    u.coeffs.iter_mut().chain(aux.coeffs.iter_mut()).for_each(|v| *v = vals.next().unwrap());
    Ok(RestartData { header, u, aux })
}

/// CSV with a header row; each record is flushed so partial runs keep their rows.
pub struct CsvWriter {
    w: BufWriter<File>,
    path: PathBuf,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let mut s = Self { w: create(path)?, path: path.to_path_buf() };
        s.raw_row(&header.join(","))?;
        Ok(s)
    }

    fn raw_row(&mut self, line: &str) -> Result<()> {
        writeln!(self.w, "{line}").and_then(|_| self.w.flush()).map_err(|e| Error::io(&self.path, e))
    }

    pub fn row(&mut self, values: &[f64]) -> Result<()> {
        let line: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
        self.raw_row(&line.join(","))
    }
}

