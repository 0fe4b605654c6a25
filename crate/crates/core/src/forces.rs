//! Post-processing of a converged bridge into pressure and surface-tension
//! forces on each obstacle, plus the closed-form sphere-plate reference.

use crate::mathx;
use crate::mesh::{Region, ShellMesh};
use crate::vec3::Vec3;
use crate::{Error, Result};
use alloc::format;

/// Forces on one obstacle, already scaled by the surface tension.
#[derive(Debug, Clone, Copy)]
pub struct ObstacleForces {
    /// Pressure contribution `lambda_vol * int_LS n ds`.
    pub pressure: Vec3,
    /// Surface-tension contribution `int_contact_line mu ds` with `mu` the
    /// air-side co-normal (the meniscus pulls the contact line).
    pub tension: Vec3,
}

impl ObstacleForces {
    pub fn total(&self) -> Vec3 {
        self.pressure + self.tension
    }
}

/// Integrate the force on `obstacle` from the wetted faces and the contact
/// line. Both integrands are constant per cell or edge, so plain sums are
/// exact.
pub fn obstacle_forces(
    mesh: &ShellMesh,
    lambda_vol: f64,
    obstacle: u32,
    sigma: f64,
) -> Result<ObstacleForces> {
    let mut pressure = Vec3::ZERO;
    let mut wetted = false;
    for f in 0..mesh.face_count() {
        if mesh.region(f) == Region::Solid(obstacle) {
            wetted = true;
            pressure += mesh.face_normal(f) * mesh.face_area(f);
        }
    }
    if !wetted {
        return Err(Error::InvalidParameter(format!(
            "obstacle {obstacle} has no wetted faces"
        )));
    }
    pressure = pressure * lambda_vol;

    let mut tension = Vec3::ZERO;
    for te in mesh.triple_edges() {
        if te.obstacle != obstacle {
            continue;
        }
        let [a, b] = te.verts;
        let len = (mesh.position(a as usize) - mesh.position(b as usize)).norm();
        tension += mesh.edge_outward_conormal(te.air_face as usize, a, b) * len;
    }

    Ok(ObstacleForces {
        pressure: pressure * sigma,
        tension: tension * sigma,
    })
}

/// Closed-form total force for a sphere touching a plate:
/// `F_t = 2 pi sigma R (sin(psi) sin(theta1 + psi) - H R sin^2(psi))`,
/// with filling angle `psi` and wetting angle `theta1` in radians and the
/// non-dimensional curvature `h_r = H * R` supplied from tabulated data.
pub fn sphere_plate_reference_force(
    radius: f64,
    sigma: f64,
    psi: f64,
    theta1: f64,
    h_r: f64,
) -> f64 {
    let s = mathx::sin(psi);
    2.0 * core::f64::consts::PI * sigma * radius * (s * mathx::sin(theta1 + psi) - h_r * s * s)
}
