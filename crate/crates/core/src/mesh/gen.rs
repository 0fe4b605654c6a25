//! Built-in mesh generators: the initial cylinder, icospheres and boxes.

use super::{Region, ShellMesh};
use crate::mathx;
use crate::vec3::{vec3, Vec3};
use crate::{Error, Result};
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

const TAU: f64 = core::f64::consts::TAU;

/// Closed triangulated cylinder around the `x3` axis with planar caps.
///
/// The side wall is tagged liquid-air; the top cap (at `z_max`) is tagged as
/// the liquid-solid interface of obstacle 0 and the bottom cap as obstacle 1.
pub fn cylinder(radius: f64, z_min: f64, z_max: f64, target_edge_length: f64) -> Result<ShellMesh> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cylinder radius must be > 0, got {radius}"
        )));
    }
    if !(z_max > z_min) {
        return Err(Error::InvalidParameter(format!(
            "cylinder requires z_max > z_min, got [{z_min}, {z_max}]"
        )));
    }
    if !(target_edge_length > 0.0) {
        return Err(Error::InvalidParameter(
            "target edge length must be > 0".into(),
        ));
    }
    let n_theta = mathx::round(TAU * radius / target_edge_length) as i64;
    if n_theta < 6 {
        return Err(Error::InvalidParameter(format!(
            "edge length {target_edge_length} too coarse to close a cylinder of radius {radius}"
        )));
    }
    let n_theta = n_theta as usize;
    let row_height = target_edge_length * mathx::sqrt(3.0) / 2.0;
    let n_rows = mathx::round((z_max - z_min) / row_height).max(1.0) as usize;
    let n_rings = mathx::round(radius / row_height).max(1.0) as usize;

    let mut verts: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    let mut regions: Vec<Region> = Vec::new();

    // Side-wall rings, bottom to top; ring j lives at z_min + j dz.
    let dz = (z_max - z_min) / n_rows as f64;
    let ring_at = |verts: &mut Vec<Vec3>, r: f64, z: f64, m: usize| -> Vec<u32> {
        (0..m)
            .map(|k| {
                let th = TAU * k as f64 / m as f64;
                verts.push(vec3(r * mathx::cos(th), r * mathx::sin(th), z));
                (verts.len() - 1) as u32
            })
            .collect()
    };

    let side_rings: Vec<Vec<u32>> = (0..=n_rows)
        .map(|j| ring_at(&mut verts, radius, z_min + j as f64 * dz, n_theta))
        .collect();

    for j in 0..n_rows {
        let lo = &side_rings[j];
        let hi = &side_rings[j + 1];
        for k in 0..n_theta {
            let k1 = (k + 1) % n_theta;
            faces.push([lo[k], lo[k1], hi[k]]);
            regions.push(Region::Air);
            faces.push([hi[k], lo[k1], hi[k1]]);
            regions.push(Region::Air);
        }
    }

    // Caps: concentric rings stitched inward, ending in a fan to the center.
    // `flip` reverses winding so the bottom cap faces -x3.
    let build_cap = |verts: &mut Vec<Vec3>,
                         faces: &mut Vec<[u32; 3]>,
                         regions: &mut Vec<Region>,
                         boundary: &[u32],
                         z: f64,
                         region: Region,
                         flip: bool| {
        let mut outer: Vec<u32> = boundary.to_vec();
        let push_face = |faces: &mut Vec<[u32; 3]>, regions: &mut Vec<Region>, t: [u32; 3]| {
            faces.push(if flip { [t[0], t[2], t[1]] } else { t });
            regions.push(region);
        };
        for k in (1..n_rings).rev() {
            let m_in = ((n_theta * k + n_rings / 2) / n_rings).max(3);
            let r_in = radius * k as f64 / n_rings as f64;
            let inner = ring_at(verts, r_in, z, m_in);
            // Stitch the annulus with a two-pointer sweep by angle.
            let m_out = outer.len();
            let (mut io, mut ii) = (0usize, 0usize);
            while io < m_out || ii < m_in {
                let next_out = (io + 1) as f64 / m_out as f64;
                let next_in = (ii + 1) as f64 / m_in as f64;
                if io < m_out && (ii == m_in || next_out <= next_in) {
                    push_face(
                        faces,
                        regions,
                        [outer[io % m_out], outer[(io + 1) % m_out], inner[ii % m_in]],
                    );
                    io += 1;
                } else {
                    push_face(
                        faces,
                        regions,
                        [outer[io % m_out], inner[(ii + 1) % m_in], inner[ii % m_in]],
                    );
                    ii += 1;
                }
            }
            outer = inner;
        }
        verts.push(vec3(0.0, 0.0, z));
        let center = (verts.len() - 1) as u32;
        let m = outer.len();
        for k in 0..m {
            push_face(faces, regions, [outer[k], outer[(k + 1) % m], center]);
        }
    };

    build_cap(
        &mut verts,
        &mut faces,
        &mut regions,
        &side_rings[n_rows],
        z_max,
        Region::Solid(0),
        false,
    );
    build_cap(
        &mut verts,
        &mut faces,
        &mut regions,
        &side_rings[0],
        z_min,
        Region::Solid(1),
        true,
    );

    ShellMesh::new(verts, faces, regions)
}

/// Icosphere of the given radius, centered at the origin, all faces
/// liquid-air. `subdivisions = k` yields `20 * 4^k` faces.
pub fn icosphere(radius: f64, subdivisions: usize) -> Result<ShellMesh> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter("icosphere radius must be > 0".into()));
    }
    let phi = (1.0 + mathx::sqrt(5.0)) / 2.0;
    let mut verts: Vec<Vec3> = [
        vec3(-1.0, phi, 0.0),
        vec3(1.0, phi, 0.0),
        vec3(-1.0, -phi, 0.0),
        vec3(1.0, -phi, 0.0),
        vec3(0.0, -1.0, phi),
        vec3(0.0, 1.0, phi),
        vec3(0.0, -1.0, -phi),
        vec3(0.0, 1.0, -phi),
        vec3(phi, 0.0, -1.0),
        vec3(phi, 0.0, 1.0),
        vec3(-phi, 0.0, -1.0),
        vec3(-phi, 0.0, 1.0),
    ]
    .into_iter()
    .map(|v| v.normalized(0.0).unwrap() * radius)
    .collect();

    let mut faces: Vec<[u32; 3]> = alloc::vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoint: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        let mut mid = |a: u32, b: u32, verts: &mut Vec<Vec3>| -> u32 {
            let key = if a < b { (a, b) } else { (b, a) };
            *midpoint.entry(key).or_insert_with(|| {
                let m = (verts[a as usize] + verts[b as usize]) * 0.5;
                verts.push(m.normalized(0.0).unwrap() * radius);
                (verts.len() - 1) as u32
            })
        };
        let mut next: Vec<[u32; 3]> = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }

    let regions = alloc::vec![Region::Air; faces.len()];
    ShellMesh::new(verts, faces, regions)
}

/// Axis-aligned box surface mesh (12 triangles, outward orientation), all
/// faces liquid-air.
pub fn box_surface(lo: Vec3, hi: Vec3) -> Result<ShellMesh> {
    for i in 0..3 {
        if !(hi[i] > lo[i]) {
            return Err(Error::InvalidParameter("box extents must be positive".into()));
        }
    }
    let v = |x: usize, y: usize, z: usize| {
        vec3(
            if x == 0 { lo.x } else { hi.x },
            if y == 0 { lo.y } else { hi.y },
            if z == 0 { lo.z } else { hi.z },
        )
    };
    // Vertex i encodes (x, y, z) bits as i = x + 2y + 4z.
    let verts: Vec<Vec3> = (0..8).map(|i| v(i & 1, (i >> 1) & 1, (i >> 2) & 1)).collect();
    let quads: [[u32; 4]; 6] = [
        [0, 2, 3, 1], // z = lo, normal -e3
        [4, 5, 7, 6], // z = hi, normal +e3
        [0, 1, 5, 4], // y = lo, normal -e2
        [2, 6, 7, 3], // y = hi, normal +e2
        [0, 4, 6, 2], // x = lo, normal -e1
        [1, 3, 7, 5], // x = hi, normal +e1
    ];
    let mut faces = Vec::with_capacity(12);
    for q in quads {
        faces.push([q[0], q[1], q[2]]);
        faces.push([q[0], q[2], q[3]]);
    }
    let regions = alloc::vec![Region::Air; faces.len()];
    ShellMesh::new(verts, faces, regions)
}
