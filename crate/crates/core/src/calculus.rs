//! First- and second-order shape derivatives of the interface functionals,
//! assembled face by face over piecewise-linear perturbation fields.
//!
//! Everything here is curvature-free: only tangential Jacobians of the
//! perturbation fields and material derivatives of the outer normal appear,
//! so the expressions are exact on meshes of planar triangles and match
//! finite differences of the discrete functionals to truncation error. All
//! second-order forms assume the two perturbation fields are independent
//! (`dV[W] = 0`), realized discretely by attaching nodal values to vertex
//! indices and never transporting them.

use crate::mesh::{RegionFilter, ShellMesh, VertexField};
use crate::quad::{self, QuadPoint};
use crate::vec3::{vec3, Mat3, Vec3};
use alloc::vec::Vec;

/// Per-face geometry needed by the derivative formulas: outer normal, area,
/// corner positions and the (constant) surface gradients of the three nodal
/// hat functions.
#[derive(Debug, Clone, Copy)]
pub struct FaceBasis {
    pub normal: Vec3,
    pub area: f64,
    pub corners: [Vec3; 3],
    pub grads: [Vec3; 3],
}

pub fn face_basis(mesh: &ShellMesh, f: usize) -> FaceBasis {
    let t = mesh.triangle(f);
    let corners = [
        mesh.position(t[0] as usize),
        mesh.position(t[1] as usize),
        mesh.position(t[2] as usize),
    ];
    let normal = mesh.face_normal(f);
    let area = mesh.face_area(f);
    let scale = 1.0 / (2.0 * area);
    let grads = [
        normal.cross(corners[2] - corners[1]) * scale,
        normal.cross(corners[0] - corners[2]) * scale,
        normal.cross(corners[1] - corners[0]) * scale,
    ];
    FaceBasis {
        normal,
        area,
        corners,
        grads,
    }
}

/// Face-constant derivative data of one perturbation field: tangential
/// Jacobian `D_G V`, tangential divergence, and the material derivative of
/// the outer normal `dn[V] = -(D_G V)^T n`.
#[derive(Debug, Clone, Copy)]
pub struct FaceDeformation {
    pub jac: Mat3,
    pub div: f64,
    pub dn: Vec3,
}

pub fn face_deformation(basis: &FaceBasis, v: [Vec3; 3]) -> FaceDeformation {
    let mut jac = Mat3::ZERO;
    for k in 0..3 {
        jac = jac.add_mat(v[k].outer(basis.grads[k]));
    }
    let div = jac.trace();
    let dn = -(jac.transpose().apply(basis.normal));
    FaceDeformation { jac, div, dn }
}

fn field_at(mesh: &ShellMesh, field: &VertexField, f: usize) -> [Vec3; 3] {
    let t = mesh.triangle(f);
    [
        field[t[0] as usize],
        field[t[1] as usize],
        field[t[2] as usize],
    ]
}

/// Tangential Jacobian `D_G V` per face.
pub fn tangential_jacobian(mesh: &ShellMesh, v: &VertexField) -> Vec<Mat3> {
    (0..mesh.face_count())
        .map(|f| {
            let basis = face_basis(mesh, f);
            face_deformation(&basis, field_at(mesh, v, f)).jac
        })
        .collect()
}

/// Material derivative of the face normals, `dn[V]` per face.
pub fn d_normal(mesh: &ShellMesh, v: &VertexField) -> Vec<Vec3> {
    (0..mesh.face_count())
        .map(|f| {
            let basis = face_basis(mesh, f);
            face_deformation(&basis, field_at(mesh, v, f)).dn
        })
        .collect()
}

/// Material derivative of the tangential divergence,
/// `d(div_G V)[W] = -tr(D_G V D_G W) + <(D_G V)^T n, (D_G W)^T n>`, per face.
pub fn d_tangential_div(mesh: &ShellMesh, v: &VertexField, w: &VertexField) -> Vec<f64> {
    (0..mesh.face_count())
        .map(|f| {
            let basis = face_basis(mesh, f);
            let a = face_deformation(&basis, field_at(mesh, v, f));
            let b = face_deformation(&basis, field_at(mesh, w, f));
            -a.jac.trace_mul(b.jac) + a.dn.dot(b.dn)
        })
        .collect()
}

/// Second material derivative of the outer normal for one face.
pub fn face_d2_normal(basis: &FaceBasis, a: &FaceDeformation, b: &FaceDeformation) -> Vec3 {
    -(b.jac.transpose().apply(a.dn)) - (a.jac.transpose().apply(b.dn))
        - basis.normal * a.dn.dot(b.dn)
}

/// Second material derivative of the face normals, `d2n[V, W]` per face.
pub fn d2_normal(mesh: &ShellMesh, v: &VertexField, w: &VertexField) -> Vec<Vec3> {
    (0..mesh.face_count())
        .map(|f| {
            let basis = face_basis(mesh, f);
            let a = face_deformation(&basis, field_at(mesh, v, f));
            let b = face_deformation(&basis, field_at(mesh, w, f));
            face_d2_normal(&basis, &a, &b)
        })
        .collect()
}

/// First shape derivative of the area of the faces selected by `filter`:
/// `dS[V] = int div_G V ds`.
pub fn d_area(mesh: &ShellMesh, filter: RegionFilter, v: &VertexField) -> f64 {
    let mut acc = 0.0;
    for f in 0..mesh.face_count() {
        if !filter.matches(mesh.region(f)) {
            continue;
        }
        let basis = face_basis(mesh, f);
        let a = face_deformation(&basis, field_at(mesh, v, f));
        acc += basis.area * a.div;
    }
    acc
}

/// Second shape derivative of the selected area:
/// `d2S[V, W] = int div V div W - tr(D_G V D_G W) + <(D_G V)^T n, (D_G W)^T n> ds`.
pub fn d2_area(mesh: &ShellMesh, filter: RegionFilter, v: &VertexField, w: &VertexField) -> f64 {
    let mut acc = 0.0;
    for f in 0..mesh.face_count() {
        if !filter.matches(mesh.region(f)) {
            continue;
        }
        let basis = face_basis(mesh, f);
        let a = face_deformation(&basis, field_at(mesh, v, f));
        let b = face_deformation(&basis, field_at(mesh, w, f));
        acc += basis.area * face_d2_area_density(&a, &b);
    }
    acc
}

#[inline]
pub fn face_d2_area_density(a: &FaceDeformation, b: &FaceDeformation) -> f64 {
    a.div * b.div - a.jac.trace_mul(b.jac) + a.dn.dot(b.dn)
}

/// Integrand triple of a "flux" functional `J(G) = int <f2(s), n> ds`,
/// together with its first and second material derivatives. Instances cover
/// the enclosed volume, the gravitational energy, and the volume-centroid
/// numerators.
#[derive(Debug, Clone, Copy)]
pub enum FluxIntegrand {
    /// `f2 = s / 3`; the flux is the enclosed volume.
    Volume,
    /// `f2 = (g_i s_i^2 / 2)_i`; the flux is the gravitational energy.
    Gravity(Vec3),
    /// `f2 = (s_i^2 / 2) e_i`; the flux is the volume moment along `axis`.
    Centroid(usize),
}

impl FluxIntegrand {
    pub fn f2(&self, s: Vec3) -> Vec3 {
        match self {
            FluxIntegrand::Volume => s / 3.0,
            FluxIntegrand::Gravity(g) => {
                vec3(0.5 * g.x * s.x * s.x, 0.5 * g.y * s.y * s.y, 0.5 * g.z * s.z * s.z)
            }
            FluxIntegrand::Centroid(i) => {
                let mut out = Vec3::ZERO;
                out[*i] = 0.5 * s[*i] * s[*i];
                out
            }
        }
    }

    pub fn df2(&self, s: Vec3, v: Vec3) -> Vec3 {
        match self {
            FluxIntegrand::Volume => v / 3.0,
            FluxIntegrand::Gravity(g) => vec3(g.x * s.x * v.x, g.y * s.y * v.y, g.z * s.z * v.z),
            FluxIntegrand::Centroid(i) => {
                let mut out = Vec3::ZERO;
                out[*i] = s[*i] * v[*i];
                out
            }
        }
    }

    pub fn d2f2(&self, _s: Vec3, v: Vec3, w: Vec3) -> Vec3 {
        match self {
            FluxIntegrand::Volume => Vec3::ZERO,
            FluxIntegrand::Gravity(g) => vec3(g.x * v.x * w.x, g.y * v.y * w.y, g.z * v.z * w.z),
            FluxIntegrand::Centroid(i) => {
                let mut out = Vec3::ZERO;
                out[*i] = v[*i] * w[*i];
                out
            }
        }
    }

    /// Quadrature rule covering this integrand's polynomial degree in all
    /// first- and second-derivative terms (deliberately one degree generous
    /// for the curved-in-s integrands).
    pub fn rule(&self) -> &'static [QuadPoint] {
        match self {
            FluxIntegrand::Volume => quad::DEGREE_2,
            FluxIntegrand::Gravity(_) | FluxIntegrand::Centroid(_) => quad::DEGREE_4,
        }
    }
}

/// Value of the flux functional `int <f2, n> ds` over the whole mesh.
pub fn flux(mesh: &ShellMesh, pair: &FluxIntegrand) -> f64 {
    let rule = pair.rule();
    let mut acc = 0.0;
    for f in 0..mesh.face_count() {
        let basis = face_basis(mesh, f);
        let mut face = 0.0;
        for q in rule {
            let s = basis.corners[0] * q.bary[0]
                + basis.corners[1] * q.bary[1]
                + basis.corners[2] * q.bary[2];
            face += q.weight * pair.f2(s).dot(basis.normal);
        }
        acc += face * basis.area;
    }
    acc
}

/// First shape derivative of a flux functional on one face (density to be
/// multiplied by the face area).
pub fn face_d_flux_density(
    basis: &FaceBasis,
    pair: &FluxIntegrand,
    a: &FaceDeformation,
    v: [Vec3; 3],
) -> f64 {
    let mut acc = 0.0;
    for q in pair.rule() {
        let s = basis.corners[0] * q.bary[0]
            + basis.corners[1] * q.bary[1]
            + basis.corners[2] * q.bary[2];
        let vq = v[0] * q.bary[0] + v[1] * q.bary[1] + v[2] * q.bary[2];
        let f2 = pair.f2(s);
        acc += q.weight
            * (f2.dot(basis.normal) * a.div + pair.df2(s, vq).dot(basis.normal) + f2.dot(a.dn));
    }
    acc
}

/// `dJ2[V] = int <f2, n> div V + <df2[V], n> + <f2, dn[V]> ds`.
pub fn d_flux(mesh: &ShellMesh, pair: &FluxIntegrand, v: &VertexField) -> f64 {
    let mut acc = 0.0;
    for f in 0..mesh.face_count() {
        let basis = face_basis(mesh, f);
        let vv = field_at(mesh, v, f);
        let a = face_deformation(&basis, vv);
        acc += basis.area * face_d_flux_density(&basis, pair, &a, vv);
    }
    acc
}

/// Full second shape derivative of a flux functional on one face (density).
#[allow(clippy::too_many_arguments)]
pub fn face_d2_flux_density(
    basis: &FaceBasis,
    pair: &FluxIntegrand,
    a: &FaceDeformation,
    b: &FaceDeformation,
    v: [Vec3; 3],
    w: [Vec3; 3],
) -> f64 {
    let ddn = face_d2_normal(basis, a, b);
    let mat_div = -a.jac.trace_mul(b.jac) + a.dn.dot(b.dn);
    let mut acc = 0.0;
    for q in pair.rule() {
        let s = basis.corners[0] * q.bary[0]
            + basis.corners[1] * q.bary[1]
            + basis.corners[2] * q.bary[2];
        let vq = v[0] * q.bary[0] + v[1] * q.bary[1] + v[2] * q.bary[2];
        let wq = w[0] * q.bary[0] + w[1] * q.bary[1] + w[2] * q.bary[2];
        let f2 = pair.f2(s);
        let f2n = f2.dot(basis.normal);
        let dv = pair.df2(s, vq);
        let dw = pair.df2(s, wq);
        acc += q.weight
            * (f2n * (a.div * b.div + mat_div)
                + (dv.dot(basis.normal) + f2.dot(a.dn)) * b.div
                + (dw.dot(basis.normal) + f2.dot(b.dn)) * a.div
                + dv.dot(b.dn)
                + dw.dot(a.dn)
                + pair.d2f2(s, vq, wq).dot(basis.normal)
                + f2.dot(ddn));
    }
    acc
}

/// `d2J2[V, W]`, the symmetric second shape derivative of a flux functional.
pub fn d2_flux(mesh: &ShellMesh, pair: &FluxIntegrand, v: &VertexField, w: &VertexField) -> f64 {
    let mut acc = 0.0;
    for f in 0..mesh.face_count() {
        let basis = face_basis(mesh, f);
        let vv = field_at(mesh, v, f);
        let ww = field_at(mesh, w, f);
        let a = face_deformation(&basis, vv);
        let b = face_deformation(&basis, ww);
        acc += basis.area * face_d2_flux_density(&basis, pair, &a, &b, vv, ww);
    }
    acc
}

/// Exact first derivative of the enclosed volume, `dF[V] = int <V, n> ds`
/// (closed meshes); cheaper than the flux form and equal to it.
pub fn d_volume_direct(mesh: &ShellMesh, v: &VertexField) -> f64 {
    let mut acc = 0.0;
    for f in 0..mesh.face_count() {
        let basis = face_basis(mesh, f);
        let vv = field_at(mesh, v, f);
        let mean = (vv[0] + vv[1] + vv[2]) / 3.0;
        acc += basis.area * mean.dot(basis.normal);
    }
    acc
}
