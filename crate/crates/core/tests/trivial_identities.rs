//! Exact discrete identities of the shape-derivative machinery:
//! translations, rotations and scalings with known closed-form derivatives.

use capbridge_core::calculus::{self, FluxIntegrand};
use capbridge_core::mesh::{gen, RegionFilter, ShellMesh, VertexField};
use capbridge_core::vec3::{vec3, Vec3};
use capbridge_core::verify::seeded_field;

const TOL: f64 = 1e-12;

fn meshes() -> Vec<ShellMesh> {
    vec![
        gen::icosphere(1.0, 2).unwrap(),
        gen::cylinder(1.0, -0.3, 0.4, 0.3).unwrap(),
        gen::box_surface(vec3(-0.5, -1.0, 0.25), vec3(1.5, 0.5, 2.0)).unwrap(),
    ]
}

fn identity_field(mesh: &ShellMesh) -> VertexField {
    VertexField::from_fn(mesh.vertex_count(), |v| mesh.position(v))
}

#[test]
fn first_derivatives_vanish_for_translations() {
    for mesh in meshes() {
        let c = VertexField::constant(mesh.vertex_count(), vec3(0.7, -1.3, 0.4));
        let scale = mesh.surface_area(RegionFilter::All);
        assert!(calculus::d_area(&mesh, RegionFilter::All, &c).abs() <= TOL * scale);
        let vol = mesh.enclosed_volume().unwrap().abs();
        assert!(calculus::d_flux(&mesh, &FluxIntegrand::Volume, &c).abs() <= TOL * vol.max(1.0));
    }
}

#[test]
fn identity_field_scales_area_and_volume() {
    for mesh in meshes() {
        let s = identity_field(&mesh);
        let area = mesh.surface_area(RegionFilter::All);
        // d/de (1+e)^2 S at 0 = 2 S.
        let d = calculus::d_area(&mesh, RegionFilter::All, &s);
        assert!((d - 2.0 * area).abs() <= TOL * area);
        // d2/de2 (1+e)^2 S at 0 = 2 S.
        let d2 = calculus::d2_area(&mesh, RegionFilter::All, &s, &s);
        assert!((d2 - 2.0 * area).abs() <= TOL * area);

        let vol = mesh.enclosed_volume().unwrap();
        // d/de (1+e)^3 F at 0 = 3 F, second derivative 6 F.
        let d = calculus::d_flux(&mesh, &FluxIntegrand::Volume, &s);
        assert!((d - 3.0 * vol).abs() <= TOL * vol.abs());
        let d2 = calculus::d2_flux(&mesh, &FluxIntegrand::Volume, &s, &s);
        assert!((d2 - 6.0 * vol).abs() <= TOL * vol.abs());
    }
}

#[test]
fn second_derivatives_vanish_for_translations() {
    for mesh in meshes() {
        let c = VertexField::constant(mesh.vertex_count(), vec3(-0.2, 0.9, 1.1));
        let area = mesh.surface_area(RegionFilter::All);
        assert!(calculus::d2_area(&mesh, RegionFilter::All, &c, &c).abs() <= TOL * area);
        assert!(
            calculus::d2_flux(&mesh, &FluxIntegrand::Volume, &c, &c).abs()
                <= TOL * mesh.enclosed_volume().unwrap().abs().max(1.0)
        );
    }
}

#[test]
fn normal_derivative_of_rigid_rotation() {
    // dn[omega x s] = omega x n, exactly per face.
    let omega = vec3(0.3, -1.1, 0.7);
    for mesh in meshes() {
        let v = VertexField::from_fn(mesh.vertex_count(), |i| omega.cross(mesh.position(i)));
        let dn = calculus::d_normal(&mesh, &v);
        for f in 0..mesh.face_count() {
            let expect = omega.cross(mesh.face_normal(f));
            assert!(
                (dn[f] - expect).norm() <= 1e-13 * omega.norm(),
                "face {f}: {:?} vs {expect:?}",
                dn[f]
            );
        }
        // Rotation fields are tangentially divergence-free per face.
        let jac = calculus::tangential_jacobian(&mesh, &v);
        for m in jac {
            assert!(m.trace().abs() <= 1e-12 * omega.norm());
        }
    }
}

#[test]
fn normal_derivative_of_scaling_vanishes() {
    for mesh in meshes() {
        let s = identity_field(&mesh);
        for dn in calculus::d_normal(&mesh, &s) {
            assert!(dn.norm() <= 1e-13);
        }
        for ddn in calculus::d2_normal(&mesh, &s, &s) {
            assert!(ddn.norm() <= 1e-13);
        }
    }
}

#[test]
fn tangential_jacobian_closed_forms() {
    for mesh in meshes() {
        // V(s) = s gives the tangent projector; constants give zero.
        let s = identity_field(&mesh);
        let jac = calculus::tangential_jacobian(&mesh, &s);
        for (f, m) in jac.iter().enumerate() {
            let n = mesh.face_normal(f);
            let projector = capbridge_core::Mat3::identity().sub_mat(n.outer(n));
            assert!(m.sub_mat(projector).max_abs() <= 1e-12);
        }
        let c = VertexField::constant(mesh.vertex_count(), vec3(4.0, 5.0, -6.0));
        for m in calculus::tangential_jacobian(&mesh, &c) {
            assert!(m.max_abs() <= 1e-12);
        }
    }
}

#[test]
fn material_divergence_derivative_identities() {
    let mesh = gen::icosphere(1.0, 1).unwrap();
    let s = identity_field(&mesh);
    // V = W = s: -tr((I - n n^T)^2) + 0 = -2 per face.
    for d in calculus::d_tangential_div(&mesh, &s, &s) {
        assert!((d + 2.0).abs() <= 1e-12);
    }
    let c = VertexField::constant(mesh.vertex_count(), vec3(1.0, 2.0, 3.0));
    for d in calculus::d_tangential_div(&mesh, &c, &c) {
        assert!(d.abs() <= 1e-12);
    }
    // Exact swap symmetry on random fields.
    let v = seeded_field(mesh.vertex_count(), 11);
    let w = seeded_field(mesh.vertex_count(), 12);
    let vw = calculus::d_tangential_div(&mesh, &v, &w);
    let wv = calculus::d_tangential_div(&mesh, &w, &v);
    for (a, b) in vw.iter().zip(&wv) {
        assert!((a - b).abs() <= 1e-13 * a.abs().max(1.0));
    }
}

#[test]
fn second_derivatives_are_symmetric() {
    for mesh in meshes() {
        let v = seeded_field(mesh.vertex_count(), 21);
        let w = seeded_field(mesh.vertex_count(), 22);
        let a_vw = calculus::d2_area(&mesh, RegionFilter::All, &v, &w);
        let a_wv = calculus::d2_area(&mesh, RegionFilter::All, &w, &v);
        assert!((a_vw - a_wv).abs() <= 1e-13 * a_vw.abs().max(1.0));

        for pair in [
            FluxIntegrand::Volume,
            FluxIntegrand::Gravity(vec3(0.0, 0.0, -1.0)),
            FluxIntegrand::Centroid(1),
        ] {
            let f_vw = calculus::d2_flux(&mesh, &pair, &v, &w);
            let f_wv = calculus::d2_flux(&mesh, &pair, &w, &v);
            assert!((f_vw - f_wv).abs() <= 1e-13 * f_vw.abs().max(1.0));

            // ddn is symmetric per face as well.
            let vw = calculus::d2_normal(&mesh, &v, &w);
            let wv = calculus::d2_normal(&mesh, &w, &v);
            for (x, y) in vw.iter().zip(&wv) {
                assert!((*x - *y).norm() <= 1e-13);
            }
        }
    }
}

#[test]
fn flux_integrand_instances() {
    let pair = FluxIntegrand::Volume;
    assert!((pair.f2(vec3(3.0, 0.0, 0.0)) - vec3(1.0, 0.0, 0.0)).norm() < 1e-15);

    let pair = FluxIntegrand::Gravity(vec3(0.0, 0.0, 1.0));
    assert!((pair.f2(vec3(0.0, 0.0, 2.0)) - vec3(0.0, 0.0, 2.0)).norm() < 1e-15);

    let pair = FluxIntegrand::Centroid(0);
    assert!((pair.f2(vec3(2.0, 5.0, 7.0)) - vec3(2.0, 0.0, 0.0)).norm() < 1e-15);
}

#[test]
fn gravity_gradient_reduces_to_weighted_normal_flux() {
    // On a closed mesh, dG[V] also equals int <V, n> <g, s> ds; the two
    // assembly routes must agree to round-off.
    let mesh = gen::icosphere(1.0, 2).unwrap();
    let g = vec3(0.2, 0.3, -0.9).normalized(0.0).unwrap();
    let v = seeded_field(mesh.vertex_count(), 33);
    let assembled = calculus::d_flux(&mesh, &FluxIntegrand::Gravity(g), &v);

    let rule = capbridge_core::quad::DEGREE_4;
    let mut direct = 0.0;
    for f in 0..mesh.face_count() {
        let t = mesh.triangle(f);
        let p = [
            mesh.position(t[0] as usize),
            mesh.position(t[1] as usize),
            mesh.position(t[2] as usize),
        ];
        let vv = [v[t[0] as usize], v[t[1] as usize], v[t[2] as usize]];
        let n = mesh.face_normal(f);
        let mut face = 0.0;
        for q in rule {
            let s = p[0] * q.bary[0] + p[1] * q.bary[1] + p[2] * q.bary[2];
            let vq = vv[0] * q.bary[0] + vv[1] * q.bary[1] + vv[2] * q.bary[2];
            face += q.weight * vq.dot(n) * g.dot(s);
        }
        direct += face * mesh.face_area(f);
    }
    assert!(
        (assembled - direct).abs() <= 1e-12 * direct.abs().max(1.0),
        "{assembled} vs {direct}"
    );
}

#[test]
fn volume_gradient_routes_agree() {
    let mesh = gen::cylinder(0.8, -0.2, 0.5, 0.25).unwrap();
    let v = seeded_field(mesh.vertex_count(), 44);
    let via_flux = calculus::d_flux(&mesh, &FluxIntegrand::Volume, &v);
    let direct = calculus::d_volume_direct(&mesh, &v);
    assert!((via_flux - direct).abs() <= 1e-12 * direct.abs().max(1.0));
}

fn main_scale_check(v: Vec3) -> f64 {
    v.norm()
}

#[test]
fn gravity_stationary_under_rotation_about_gravity_axis() {
    let g = vec3(0.0, 0.0, -1.0);
    let mesh = gen::icosphere(1.0, 2).unwrap();
    let omega = vec3(0.0, 0.0, 2.0); // rotation about the gravity axis
    let v = VertexField::from_fn(mesh.vertex_count(), |i| omega.cross(mesh.position(i)));
    let d = calculus::d_flux(&mesh, &FluxIntegrand::Gravity(g), &v);
    assert!(d.abs() <= 1e-12 * main_scale_check(omega).max(1.0));
}
