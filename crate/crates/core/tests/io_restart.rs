mod common;

use common::small;
use moistdg::driver::{
    read_restart, read_vtk, run_case, run_with, write_restart, write_vtk, CaseKind, Simulation, VtkFormat,
    SNAPSHOT_FIELDS,
};
use moistdg::model::NCOMP;

#[test]
fn vtk_round_trip_is_bit_exact_in_both_encodings() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(CaseKind::BryanFritsch, 8, 4, 2, 0.1, 0.3, dir.path());
    let mut sim = Simulation::new(&cfg).unwrap();
    while !sim.finished() {
        sim.advance().unwrap();
    }
    let snap = sim.snapshot().unwrap();
    assert_eq!(snap.dims, [24, 12]);
    let names: Vec<&str> = snap.fields.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, SNAPSHOT_FIELDS);
    for format in [VtkFormat::Ascii, VtkFormat::Binary] {
        let path = dir.path().join(format!("{format:?}.vtk"));
        write_vtk(&snap, &path, format).unwrap();
        let back = read_vtk(&path).unwrap();
        assert_eq!(back.dims, snap.dims);
        assert_eq!(back.points, snap.points);
        for ((na, a), (nb, b)) in snap.fields.iter().zip(&back.fields) {
            assert_eq!(na, nb);
            assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()), "{na} differs in {format:?}");
        }
    }
}

#[test]
fn rest_state_snapshot_has_zero_perturbations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(CaseKind::HydrostaticRest, 5, 8, 1, 0.5, 0.0, dir.path());
    let sim = Simulation::new(&cfg).unwrap();
    let snap = sim.snapshot().unwrap();
    for name in ["rho_d_pert", "rho_m_pert", "rho_r_pert", "mom_x", "mom_z", "E_pert", "u_x", "u_z"] {
        assert!(snap.field(name).unwrap().iter().all(|&v| v == 0.0), "{name}");
    }
    let p = snap.field("p_pert").unwrap();
    assert!(p.iter().all(|v| v.abs() < 1e-9), "{:?}", p.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
}

#[test]
fn restart_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(CaseKind::RainThermal, 24, 16, 1, 0.1, 0.3, dir.path());
    let mut sim = Simulation::new(&cfg).unwrap();
    while !sim.finished() {
        sim.advance().unwrap();
    }
    let data = sim.restart_data();
    let path = dir.path().join("r.bin");
    write_restart(&path, &data).unwrap();
    let back = read_restart(&path).unwrap();
    assert_eq!(back.header, data.header);
    assert_eq!(back.u.n_comp, NCOMP);
    assert!(back.u.coeffs.iter().zip(&data.u.coeffs).all(|(a, b)| a.to_bits() == b.to_bits()));
    assert!(back.aux.coeffs.iter().zip(&data.aux.coeffs).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn resumed_run_matches_uninterrupted_run_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let mut full = small(CaseKind::RainThermal, 24, 16, 1, 0.1, 0.6, &dir.path().join("full"));
    full.discretisation.gamma = 0.06;
    let straight = run_case(&full).unwrap();

    let mut first = full.clone();
    first.time.t_end = Some(0.3);
    first.output.dir = dir.path().join("first");
    run_case(&first).unwrap();
    let mut second = full.clone();
    second.output.dir = dir.path().join("second");
    let resumed = run_with(&second, Some(&first.output.dir.join("restart.bin"))).unwrap();

    let (a, b) = (&straight.simulation, &resumed.simulation);
    assert_eq!((a.step, a.t), (b.step, b.t));
    assert!(a.u.coeffs.iter().zip(&b.u.coeffs).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert_eq!(a.solver.fallout.to_bits(), b.solver.fallout.to_bits());
}

#[test]
fn restart_with_different_physics_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(CaseKind::RainThermal, 24, 16, 1, 0.1, 0.1, dir.path());
    run_case(&cfg).unwrap();
    let mut other = cfg.clone();
    other.discretisation.gamma = 0.5;
    other.output.dir = dir.path().join("other");
    let err = run_with(&other, Some(&dir.path().join("restart.bin"))).err().unwrap();
    assert_eq!(err.category(), moistdg::error::Category::Config);
}

#[test]
fn identical_runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(CaseKind::MoistGravityWave, 12, 4, 1, 2.0, 10.0, &dir.path().join("a"));
    let a = run_case(&cfg).unwrap();
    let mut cfg_b = cfg.clone();
    cfg_b.output.dir = dir.path().join("b");
    let b = run_case(&cfg_b).unwrap();
    assert!(a.simulation.u.coeffs.iter().zip(&b.simulation.u.coeffs).all(|(x, y)| x.to_bits() == y.to_bits()));
    let read = |d: &std::path::Path| std::fs::read(d.join("diagnostics.csv")).unwrap();
    assert_eq!(read(&cfg.output.dir), read(&cfg_b.output.dir));
}

#[test]
fn zero_length_run_writes_initial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(CaseKind::GravityWaveNoCloud, 12, 4, 1, 1.0, 0.0, dir.path());
    let out = run_case(&cfg).unwrap();
    assert_eq!(out.summary.steps, 0);
    assert_eq!(out.diagnostics.len(), 1);
    for f in ["config.toml", "profile.csv", "diagnostics.csv", "summary.json", "snapshot_00000.vtk", "restart.bin"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "completed");
}
