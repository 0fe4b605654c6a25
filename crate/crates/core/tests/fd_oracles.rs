//! Finite-difference verification of every assembled derivative, on meshes
//! small enough that the whole suite runs in seconds.

use capbridge_core::calculus::{self, FluxIntegrand};
use capbridge_core::distance::ObstacleField;
use capbridge_core::mesh::{gen, RegionFilter, ShellMesh};
use capbridge_core::vec3::vec3;
use capbridge_core::verify::{
    self, derivative_suite, fd_gradient, fd_hessian, seeded_field, EPS_SWEEP,
};

fn obstacles() -> Vec<ObstacleField> {
    vec![
        ObstacleField::sphere(vec3(0.0, 0.0, 1.0), 1.0).unwrap(),
        ObstacleField::plane(0.0, vec3(0.0, 0.0, 1.0)).unwrap(),
    ]
}

#[test]
fn suite_on_icosphere() {
    let mesh = gen::icosphere(0.7, 2).unwrap();
    let checks = derivative_suite(&mesh, &obstacles(), 20, 1234).unwrap();
    let failed: Vec<_> = checks.iter().filter(|c| !c.passed()).collect();
    assert!(
        failed.is_empty(),
        "{} of {} checks failed, worst: {:?}",
        failed.len(),
        checks.len(),
        failed
            .iter()
            .max_by(|a, b| a.relative_error.total_cmp(&b.relative_error))
    );
}

#[test]
fn suite_on_labeled_cylinder() {
    // Regions and triple lines present: exercises region-filtered areas.
    let mesh = gen::cylinder(1.0, -0.1, 0.1, 0.3).unwrap();
    let checks = derivative_suite(&mesh, &obstacles(), 20, 99).unwrap();
    let failed: Vec<_> = checks.iter().filter(|c| !c.passed()).collect();
    assert!(
        failed.is_empty(),
        "{} of {} checks failed: {failed:?}",
        failed.len(),
        checks.len()
    );
}

#[test]
fn fd_gradient_known_values() {
    let mesh = gen::icosphere(1.0, 2).unwrap();

    // Constant field: area gradient is zero.
    let c = capbridge_core::mesh::VertexField::constant(mesh.vertex_count(), vec3(1.0, -0.5, 2.0));
    let fd = fd_gradient(
        |m: &ShellMesh| Ok(m.surface_area(RegionFilter::All)),
        &mesh,
        &c,
        &EPS_SWEEP,
    )
    .unwrap();
    assert!(fd.value.abs() < 1e-10);

    // Identity field: volume scales as (1 + eps)^3, so dF = 3F.
    let s = capbridge_core::mesh::VertexField::from_fn(mesh.vertex_count(), |v| mesh.position(v));
    let vol = mesh.enclosed_volume().unwrap();
    let fd = fd_gradient(|m: &ShellMesh| m.enclosed_volume(), &mesh, &s, &EPS_SWEEP).unwrap();
    assert!(
        (fd.value - 3.0 * vol).abs() <= 1e-8 * vol,
        "dF = {} vs 3F = {}",
        fd.value,
        3.0 * vol
    );

    // And the assembled gradient agrees with the sweep on a random field.
    let v = seeded_field(mesh.vertex_count(), 7);
    let assembled = calculus::d_area(&mesh, RegionFilter::All, &v);
    let fd = fd_gradient(
        |m: &ShellMesh| Ok(m.surface_area(RegionFilter::All)),
        &mesh,
        &v,
        &EPS_SWEEP,
    )
    .unwrap();
    let best = fd
        .curve
        .iter()
        .map(|(_, val)| (val - assembled).abs() / assembled.abs())
        .fold(f64::INFINITY, f64::min);
    assert!(best <= 1e-6, "best relative error {best:.3e}");
}

#[test]
fn fd_hessian_known_values() {
    let mesh = gen::icosphere(1.0, 2).unwrap();
    let s = capbridge_core::mesh::VertexField::from_fn(mesh.vertex_count(), |v| mesh.position(v));

    let area = mesh.surface_area(RegionFilter::All);
    let fd = fd_hessian(
        |m: &ShellMesh| Ok(m.surface_area(RegionFilter::All)),
        &mesh,
        &s,
        &s,
        1e-4,
    )
    .unwrap();
    assert!((fd - 2.0 * area).abs() <= 1e-5 * area, "d2S = {fd}");

    let vol = mesh.enclosed_volume().unwrap();
    let fd = fd_hessian(|m: &ShellMesh| m.enclosed_volume(), &mesh, &s, &s, 1e-4).unwrap();
    assert!((fd - 6.0 * vol).abs() <= 1e-5 * vol, "d2F = {fd}");

    // Mixed second derivative of the gravity flux against the formula.
    let g = vec3(0.1, -0.3, -1.0).normalized(0.0).unwrap();
    let pair = FluxIntegrand::Gravity(g);
    let v = seeded_field(mesh.vertex_count(), 31);
    let w = seeded_field(mesh.vertex_count(), 32);
    let formula = calculus::d2_flux(&mesh, &pair, &v, &w);
    let fd = fd_hessian(
        |m: &ShellMesh| Ok(calculus::flux(m, &pair)),
        &mesh,
        &v,
        &w,
        1e-3,
    )
    .unwrap();
    assert!(
        (fd - formula).abs() <= 1e-4 * formula.abs(),
        "{fd} vs {formula}"
    );
}

#[test]
fn error_curve_has_a_minimum_below_tolerance() {
    // The characteristic V: truncation decays, round-off grows; somewhere in
    // between the error must undercut the suite tolerance.
    let mesh = gen::icosphere(1.0, 2).unwrap();
    let v = seeded_field(mesh.vertex_count(), 55);
    let assembled = calculus::d_area(&mesh, RegionFilter::All, &v);
    let fd = fd_gradient(
        |m: &ShellMesh| Ok(m.surface_area(RegionFilter::All)),
        &mesh,
        &v,
        &EPS_SWEEP,
    )
    .unwrap();
    let errs: Vec<f64> = fd
        .curve
        .iter()
        .map(|(_, val)| (val - assembled).abs() / assembled.abs())
        .collect();
    let min = errs.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(min <= verify::GRADIENT_TOL);
    // Both ends of the sweep are worse than the interior minimum.
    assert!(errs[0] > min && errs[errs.len() - 1] > min);
}

#[test]
fn suite_runtime_is_bounded() {
    use std::time::Instant;
    let start = Instant::now();
    let mesh = gen::icosphere(0.9, 2).unwrap();
    let checks = derivative_suite(&mesh, &obstacles(), 20, 5).unwrap();
    assert!(checks.iter().all(|c| c.passed()));
    let mesh = gen::cylinder(1.0, -0.1, 0.1, 0.25).unwrap();
    let checks = derivative_suite(&mesh, &obstacles(), 20, 6).unwrap();
    assert!(checks.iter().all(|c| c.passed()));
    assert!(
        start.elapsed().as_secs() < 60,
        "oracle suite exceeded its runtime budget"
    );
}
