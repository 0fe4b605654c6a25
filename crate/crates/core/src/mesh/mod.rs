//! Labeled triangle shell mesh (topological dimension 2 embedded in 3D),
//! region bookkeeping, and the base interface functionals.
//!
//! Faces carry a [`Region`] tag: the liquid-air interface or a liquid-solid
//! interface of one obstacle. Edges whose two faces carry different tags form
//! the solid-gas-liquid triple lines; their topology is derived once at
//! construction and kept fixed, while vertex positions may be updated in
//! place (the per-face geometry is refreshed on every update).

pub mod gen;

use crate::mathx;
use crate::vec3::{vec3, Vec3};
use crate::{Error, Result};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Face tag: liquid-air, or liquid-solid against obstacle `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Air,
    Solid(u32),
}

/// Face selector for region-wise quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionFilter {
    All,
    Air,
    Solid(u32),
}

impl RegionFilter {
    #[inline]
    pub fn matches(self, r: Region) -> bool {
        match self {
            RegionFilter::All => true,
            RegionFilter::Air => r == Region::Air,
            RegionFilter::Solid(i) => r == Region::Solid(i),
        }
    }
}

/// An edge of the triple (contact) line of one obstacle.
#[derive(Debug, Clone, Copy)]
pub struct TripleEdge {
    pub verts: [u32; 2],
    pub air_face: u32,
    pub solid_face: u32,
    pub obstacle: u32,
}

/// Piecewise-linear nodal vector data (one `Vec3` per mesh vertex).
#[derive(Debug, Clone, PartialEq)]
pub struct VertexField {
    pub values: Vec<Vec3>,
}

impl VertexField {
    pub fn zeros(n: usize) -> Self {
        VertexField {
            values: vec![Vec3::ZERO; n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize) -> Vec3) -> Self {
        VertexField {
            values: (0..n).map(&mut f).collect(),
        }
    }

    /// Constant field.
    pub fn constant(n: usize, v: Vec3) -> Self {
        VertexField {
            values: vec![v; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.norm()))
    }
}

impl core::ops::Index<usize> for VertexField {
    type Output = Vec3;
    fn index(&self, i: usize) -> &Vec3 {
        &self.values[i]
    }
}

impl core::ops::IndexMut<usize> for VertexField {
    fn index_mut(&mut self, i: usize) -> &mut Vec3 {
        &mut self.values[i]
    }
}

/// Physical parameters of the interface-energy functional.
#[derive(Debug, Clone)]
pub struct EnergyParams {
    /// Relative adhesion coefficient per obstacle, `beta = cos(contact angle)`.
    pub betas: Vec<f64>,
    /// Bond number (scales the gravitational term).
    pub bond: f64,
    /// Unit vector entering the gravitational energy integrand.
    pub gravity: Vec3,
    /// Prescribed liquid volume.
    pub target_volume: f64,
    /// Surface tension scale; only used to dimensionalize output forces.
    pub sigma: f64,
}

impl EnergyParams {
    pub fn new(betas: Vec<f64>, bond: f64, gravity: Vec3, target_volume: f64) -> Result<Self> {
        for (i, b) in betas.iter().enumerate() {
            if !(b.is_finite() && *b > -1.0 && *b < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "adhesion coefficient of obstacle {i} must lie in (-1, 1), got {b}"
                )));
            }
        }
        if !(bond.is_finite() && bond >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bond number must be >= 0, got {bond}"
            )));
        }
        if !(target_volume.is_finite() && target_volume > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "target volume must be > 0, got {target_volume}"
            )));
        }
        let gravity = gravity
            .normalized(1e-12)
            .ok_or_else(|| Error::InvalidParameter("gravity direction is zero".into()))?;
        Ok(EnergyParams {
            betas,
            bond,
            gravity,
            target_volume,
            sigma: 1.0,
        })
    }
}

/// Labeled triangulated shell mesh.
///
/// Topology (triangles, regions, triple lines) is fixed at construction;
/// vertex positions may be moved via [`ShellMesh::set_positions`], which
/// refreshes the per-face geometry and re-checks for degenerate triangles.
#[derive(Debug, Clone)]
pub struct ShellMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
    regions: Vec<Region>,

    face_normals: Vec<Vec3>,
    face_areas: Vec<f64>,

    vertex_faces: Vec<Vec<u32>>,
    /// Obstacles each vertex touches (sorted, deduplicated).
    vertex_contacts: Vec<Vec<u32>>,
    /// Indices into `triple_edges`, per vertex.
    vertex_triple_edges: Vec<Vec<u32>>,
    triple_edges: Vec<TripleEdge>,

    closed: bool,
    oriented: bool,
}

fn edge_key(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl ShellMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>, regions: Vec<Region>) -> Result<Self> {
        if regions.len() != triangles.len() {
            return Err(Error::InvalidParameter(format!(
                "{} region tags for {} triangles",
                regions.len(),
                triangles.len()
            )));
        }
        if triangles.is_empty() {
            return Err(Error::InvalidParameter("mesh has no triangles".into()));
        }
        for v in &vertices {
            if !v.is_finite() {
                return Err(Error::InvalidParameter("non-finite vertex position".into()));
            }
        }
        let nv = vertices.len() as u32;
        for (f, t) in triangles.iter().enumerate() {
            if t[0] >= nv || t[1] >= nv || t[2] >= nv {
                return Err(Error::InvalidParameter(format!(
                    "triangle {f} references a vertex out of range"
                )));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::DegenerateGeometry(format!(
                    "triangle {f} has repeated vertices"
                )));
            }
        }

        // Edge census: (key, face, oriented as (a, b) with a < b?).
        let mut edges: Vec<((u32, u32), u32, bool)> = Vec::with_capacity(triangles.len() * 3);
        for (f, t) in triangles.iter().enumerate() {
            for k in 0..3 {
                let a = t[k];
                let b = t[(k + 1) % 3];
                edges.push((edge_key(a, b), f as u32, a < b));
            }
        }
        edges.sort_unstable_by_key(|(k, f, _)| (*k, *f));

        let mut closed = true;
        let mut oriented = true;
        let mut triple_edges: Vec<TripleEdge> = Vec::new();
        let mut i = 0;
        while i < edges.len() {
            let key = edges[i].0;
            let mut j = i + 1;
            while j < edges.len() && edges[j].0 == key {
                j += 1;
            }
            match j - i {
                1 => closed = false,
                2 => {
                    let (_, f0, d0) = edges[i];
                    let (_, f1, d1) = edges[i + 1];
                    if d0 == d1 {
                        oriented = false;
                    }
                    let r0 = regions[f0 as usize];
                    let r1 = regions[f1 as usize];
                    if r0 != r1 {
                        match (r0, r1) {
                            (Region::Air, Region::Solid(ob)) => triple_edges.push(TripleEdge {
                                verts: [key.0, key.1],
                                air_face: f0,
                                solid_face: f1,
                                obstacle: ob,
                            }),
                            (Region::Solid(ob), Region::Air) => triple_edges.push(TripleEdge {
                                verts: [key.0, key.1],
                                air_face: f1,
                                solid_face: f0,
                                obstacle: ob,
                            }),
                            // Solid-solid seams carry no contact-line semantics.
                            _ => {}
                        }
                    }
                }
                n => {
                    return Err(Error::NonManifold(format!(
                        "edge ({}, {}) shared by {n} faces",
                        key.0, key.1
                    )))
                }
            }
            i = j;
        }

        let mut vertex_faces = vec![Vec::new(); vertices.len()];
        for (f, t) in triangles.iter().enumerate() {
            for &v in t {
                vertex_faces[v as usize].push(f as u32);
            }
        }

        let mut vertex_contacts: Vec<Vec<u32>> = vec![Vec::new(); vertices.len()];
        for (f, t) in triangles.iter().enumerate() {
            if let Region::Solid(ob) = regions[f] {
                for &v in t {
                    let c = &mut vertex_contacts[v as usize];
                    if !c.contains(&ob) {
                        c.push(ob);
                    }
                }
            }
        }
        for c in &mut vertex_contacts {
            c.sort_unstable();
        }

        let mut vertex_triple_edges: Vec<Vec<u32>> = vec![Vec::new(); vertices.len()];
        for (e, te) in triple_edges.iter().enumerate() {
            for &v in &te.verts {
                vertex_triple_edges[v as usize].push(e as u32);
            }
        }
        // Triple lines must be simple closed polylines: exactly two incident
        // triple edges per obstacle at each contact vertex.
        for (v, list) in vertex_triple_edges.iter().enumerate() {
            let mut per_ob: Vec<(u32, usize)> = Vec::new();
            for &e in list {
                let ob = triple_edges[e as usize].obstacle;
                match per_ob.iter_mut().find(|(o, _)| *o == ob) {
                    Some((_, c)) => *c += 1,
                    None => per_ob.push((ob, 1)),
                }
            }
            for (ob, c) in per_ob {
                if c != 2 {
                    return Err(Error::NonManifold(format!(
                        "vertex {v} has {c} triple-line edges of obstacle {ob}"
                    )));
                }
            }
        }

        let mut mesh = ShellMesh {
            vertices,
            triangles,
            regions,
            face_normals: Vec::new(),
            face_areas: Vec::new(),
            vertex_faces,
            vertex_contacts,
            vertex_triple_edges,
            triple_edges,
            closed,
            oriented,
        };
        mesh.refresh_geometry()?;
        Ok(mesh)
    }

    /// Recompute per-face normals and areas from current vertex positions.
    fn refresh_geometry(&mut self) -> Result<()> {
        let tol = self.degenerate_area_tol();
        self.face_normals.clear();
        self.face_areas.clear();
        self.face_normals.reserve(self.triangles.len());
        self.face_areas.reserve(self.triangles.len());
        for (f, t) in self.triangles.iter().enumerate() {
            let a = self.vertices[t[0] as usize];
            let b = self.vertices[t[1] as usize];
            let c = self.vertices[t[2] as usize];
            let cross = (b - a).cross(c - a);
            let two_area = cross.norm();
            if !(two_area.is_finite()) || 0.5 * two_area <= tol {
                return Err(Error::DegenerateGeometry(format!(
                    "triangle {f} has area {:.3e} below tolerance {:.3e}",
                    0.5 * two_area,
                    tol
                )));
            }
            self.face_normals.push(cross / two_area);
            self.face_areas.push(0.5 * two_area);
        }
        Ok(())
    }

    /// Area below which a triangle counts as degenerate.
    pub fn degenerate_area_tol(&self) -> f64 {
        let d = self.bounding_box_diagonal();
        1e-14 * d * d
    }

    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = vec3(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = -lo;
        for v in &self.vertices {
            for i in 0..3 {
                lo[i] = lo[i].min(v[i]);
                hi[i] = hi[i].max(v[i]);
            }
        }
        (lo, hi)
    }

    pub fn bounding_box_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    // Plain accessors.

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn position(&self, v: usize) -> Vec3 {
        self.vertices[v]
    }

    pub fn triangle(&self, f: usize) -> [u32; 3] {
        self.triangles[f]
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn region(&self, f: usize) -> Region {
        self.regions[f]
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn face_normal(&self, f: usize) -> Vec3 {
        self.face_normals[f]
    }

    pub fn face_area(&self, f: usize) -> f64 {
        self.face_areas[f]
    }

    pub fn faces_of_vertex(&self, v: usize) -> &[u32] {
        &self.vertex_faces[v]
    }

    /// Obstacles whose liquid-solid interface touches vertex `v`.
    pub fn vertex_contacts(&self, v: usize) -> &[u32] {
        &self.vertex_contacts[v]
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn is_oriented(&self) -> bool {
        self.oriented
    }

    pub fn triple_edges(&self) -> &[TripleEdge] {
        &self.triple_edges
    }

    /// Whether vertex `v` lies on the triple line of `obstacle`.
    pub fn on_triple_line(&self, v: usize, obstacle: u32) -> bool {
        self.vertex_triple_edges[v]
            .iter()
            .any(|&e| self.triple_edges[e as usize].obstacle == obstacle)
    }

    /// Whether vertex `v` lies on any triple line.
    pub fn on_any_triple_line(&self, v: usize) -> bool {
        !self.vertex_triple_edges[v].is_empty()
    }

    /// Vertices on the triple line of `obstacle`, sorted.
    pub fn triple_vertices(&self, obstacle: u32) -> Vec<u32> {
        let mut out: Vec<u32> = self
            .triple_edges
            .iter()
            .filter(|e| e.obstacle == obstacle)
            .flat_map(|e| e.verts)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Replace all vertex positions, refreshing face geometry.
    pub fn set_positions(&mut self, positions: Vec<Vec3>) -> Result<()> {
        if positions.len() != self.vertices.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} positions, got {}",
                self.vertices.len(),
                positions.len()
            )));
        }
        for v in &positions {
            if !v.is_finite() {
                return Err(Error::InvalidParameter("non-finite vertex position".into()));
            }
        }
        self.vertices = positions;
        self.refresh_geometry()
    }

    /// Copy of the mesh with vertices displaced by `t * field`.
    pub fn displaced(&self, field: &VertexField, t: f64) -> Result<ShellMesh> {
        if field.len() != self.vertices.len() {
            return Err(Error::InvalidParameter(
                "field length does not match vertex count".into(),
            ));
        }
        let mut out = self.clone();
        let positions = self
            .vertices
            .iter()
            .zip(&field.values)
            .map(|(&p, &d)| p + d * t)
            .collect();
        out.set_positions(positions)?;
        Ok(out)
    }

    /// Area-weighted average of incident face normals, normalized.
    pub fn vertex_normal(&self, v: usize) -> Result<Vec3> {
        let faces = &self.vertex_faces[v];
        if faces.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "vertex {v} has no incident faces"
            )));
        }
        let mut acc = Vec3::ZERO;
        for &f in faces {
            acc += self.face_normals[f as usize] * self.face_areas[f as usize];
        }
        acc.normalized(1e-12 * self.bounding_box_diagonal().max(1.0))
            .ok_or_else(|| {
                Error::DegenerateGeometry(format!("vertex {v} normal average vanishes"))
            })
    }

    /// Unit in-face direction orthogonal to edge `(a, b)` of face `f`,
    /// pointing out of the face across that edge.
    pub fn edge_outward_conormal(&self, f: usize, a: u32, b: u32) -> Vec3 {
        let t = self.triangles[f];
        let opp = *t
            .iter()
            .find(|&&v| v != a && v != b)
            .expect("edge must belong to face");
        let pa = self.vertices[a as usize];
        let pb = self.vertices[b as usize];
        let po = self.vertices[opp as usize];
        let tangent = (pb - pa).normalized(0.0).expect("edge of positive length");
        let q = po - (pa + pb) * 0.5;
        let toward = q - tangent * q.dot(tangent);
        -(toward.normalized(0.0).expect("non-degenerate face"))
    }

    /// Edge-length-weighted co-normal pair `(mu_air, mu_solid)` at a vertex of
    /// the triple line of `obstacle`.
    ///
    /// `mu_air` is averaged over the incident air-side faces and points away
    /// from the liquid-air region; `mu_solid` analogously for the
    /// liquid-solid faces of the obstacle.
    pub fn triple_conormals(&self, v: usize, obstacle: u32) -> Result<(Vec3, Vec3)> {
        let mut mu_air = Vec3::ZERO;
        let mut mu_solid = Vec3::ZERO;
        let mut found = false;
        for &e in &self.vertex_triple_edges[v] {
            let te = &self.triple_edges[e as usize];
            if te.obstacle != obstacle {
                continue;
            }
            found = true;
            let [a, b] = te.verts;
            let len = (self.vertices[a as usize] - self.vertices[b as usize]).norm();
            mu_air += self.edge_outward_conormal(te.air_face as usize, a, b) * len;
            mu_solid += self.edge_outward_conormal(te.solid_face as usize, a, b) * len;
        }
        if !found {
            return Err(Error::NotOnTripleLine {
                vertex: v,
                obstacle: obstacle as usize,
            });
        }
        let mu_air = mu_air
            .normalized(1e-12)
            .ok_or(Error::DegenerateContact { vertex: v })?;
        let mu_solid = mu_solid
            .normalized(1e-12)
            .ok_or(Error::DegenerateContact { vertex: v })?;
        Ok((mu_air, mu_solid))
    }

    /// `<mu_solid, mu_air>` at every triple-line vertex of `obstacle`; at a
    /// stationary contact line this equals the adhesion coefficient.
    pub fn contact_angle_cosines(&self, obstacle: u32) -> Result<Vec<f64>> {
        self.triple_vertices(obstacle)
            .iter()
            .map(|&v| {
                let (mu_air, mu_solid) = self.triple_conormals(v as usize, obstacle)?;
                Ok(mu_solid.dot(mu_air))
            })
            .collect()
    }

    // Interface functionals.

    /// Total area of the faces selected by `filter`.
    pub fn surface_area(&self, filter: RegionFilter) -> f64 {
        self.triangles
            .iter()
            .enumerate()
            .filter(|(f, _)| filter.matches(self.regions[*f]))
            .map(|(f, _)| self.face_areas[f])
            .sum()
    }

    fn require_closed_oriented(&self) -> Result<()> {
        if !self.closed {
            return Err(Error::OpenMesh);
        }
        if !self.oriented {
            return Err(Error::InconsistentOrientation);
        }
        Ok(())
    }

    /// Enclosed volume via the boundary flux of `s / 3`.
    pub fn enclosed_volume(&self) -> Result<f64> {
        self.require_closed_oriented()?;
        let mut vol = 0.0;
        for (f, t) in self.triangles.iter().enumerate() {
            let a = self.vertices[t[0] as usize];
            let b = self.vertices[t[1] as usize];
            let c = self.vertices[t[2] as usize];
            let centroid = (a + b + c) / 3.0;
            vol += self.face_areas[f] * centroid.dot(self.face_normals[f]) / 3.0;
        }
        Ok(vol)
    }

    /// Gravitational energy `int_Omega <g, x> dx` as a boundary flux,
    /// integrated exactly (quadratic integrand).
    pub fn gravitational_energy(&self, gravity: Vec3) -> Result<f64> {
        self.require_closed_oriented()?;
        let rule = crate::quad::DEGREE_2;
        let mut acc = 0.0;
        for (f, t) in self.triangles.iter().enumerate() {
            let p = [
                self.vertices[t[0] as usize],
                self.vertices[t[1] as usize],
                self.vertices[t[2] as usize],
            ];
            let n = self.face_normals[f];
            let mut face = 0.0;
            for q in rule {
                let s = p[0] * q.bary[0] + p[1] * q.bary[1] + p[2] * q.bary[2];
                let g_tilde = vec3(
                    0.5 * gravity.x * s.x * s.x,
                    0.5 * gravity.y * s.y * s.y,
                    0.5 * gravity.z * s.z * s.z,
                );
                face += q.weight * g_tilde.dot(n);
            }
            acc += face * self.face_areas[f];
        }
        Ok(acc)
    }

    /// Unscaled volume-centroid numerator `int_Omega x_i dx` as a boundary
    /// flux (the division by the fixed target volume happens in the solver).
    pub fn centroid_moment(&self, axis: usize) -> Result<f64> {
        self.require_closed_oriented()?;
        let rule = crate::quad::DEGREE_2;
        let mut acc = 0.0;
        for (f, t) in self.triangles.iter().enumerate() {
            let p = [
                self.vertices[t[0] as usize],
                self.vertices[t[1] as usize],
                self.vertices[t[2] as usize],
            ];
            let n = self.face_normals[f];
            let mut face = 0.0;
            for q in rule {
                let s = p[0] * q.bary[0] + p[1] * q.bary[1] + p[2] * q.bary[2];
                face += q.weight * 0.5 * s[axis] * s[axis] * n[axis];
            }
            acc += face * self.face_areas[f];
        }
        Ok(acc)
    }

    /// Total interface energy `S_LA - sum_i beta_i S_LS_i + b G`.
    pub fn interface_energy(&self, params: &EnergyParams) -> Result<f64> {
        let mut e = self.surface_area(RegionFilter::Air);
        for (i, beta) in params.betas.iter().enumerate() {
            e -= beta * self.surface_area(RegionFilter::Solid(i as u32));
        }
        if params.bond != 0.0 {
            e += params.bond * self.gravitational_energy(params.gravity)?;
        }
        Ok(e)
    }

    /// Mean edge length over all faces.
    pub fn mean_edge_length(&self) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for t in &self.triangles {
            for k in 0..3 {
                let a = t[k];
                let b = t[(k + 1) % 3];
                if a < b {
                    sum += (self.vertices[a as usize] - self.vertices[b as usize]).norm();
                    count += 1;
                }
            }
        }
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }

    /// Minimum incident edge length per vertex.
    pub fn min_incident_edge_lengths(&self) -> Vec<f64> {
        let mut out = vec![f64::INFINITY; self.vertices.len()];
        for t in &self.triangles {
            for k in 0..3 {
                let a = t[k] as usize;
                let b = t[(k + 1) % 3] as usize;
                let len = (self.vertices[a] - self.vertices[b]).norm();
                out[a] = out[a].min(len);
                out[b] = out[b].min(len);
            }
        }
        out
    }

    /// `acos` clamped to valid range, exposed for contact-angle reporting.
    pub fn angle_from_cosine(c: f64) -> f64 {
        mathx::acos(c.clamp(-1.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::gen;

    fn single_triangle(a: Vec3, b: Vec3, c: Vec3) -> ShellMesh {
        ShellMesh::new(
            alloc::vec![a, b, c],
            alloc::vec![[0, 1, 2]],
            alloc::vec![Region::Air],
        )
        .unwrap()
    }

    #[test]
    fn face_normal_follows_winding() {
        let m = single_triangle(
            vec3(0.0, 0.0, 0.0),
            vec3(1.0, 0.0, 0.0),
            vec3(0.0, 1.0, 0.0),
        );
        assert!((m.face_normal(0) - vec3(0.0, 0.0, 1.0)).norm() < 1e-15);
        assert!((m.surface_area(RegionFilter::All) - 0.5).abs() < 1e-15);

        let flipped = single_triangle(
            vec3(0.0, 0.0, 0.0),
            vec3(0.0, 1.0, 0.0),
            vec3(1.0, 0.0, 0.0),
        );
        assert!((flipped.face_normal(0) - vec3(0.0, 0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn degenerate_triangle_rejected() {
        let r = ShellMesh::new(
            alloc::vec![
                vec3(0.0, 0.0, 0.0),
                vec3(1.0, 0.0, 0.0),
                vec3(2.0, 0.0, 0.0)
            ],
            alloc::vec![[0, 1, 2]],
            alloc::vec![Region::Air],
        );
        assert!(matches!(r, Err(Error::DegenerateGeometry(_))));

        let r = ShellMesh::new(
            alloc::vec![vec3(0.0, 0.0, 0.0), vec3(1.0, 0.0, 0.0)],
            alloc::vec![[0, 1, 1]],
            alloc::vec![Region::Air],
        );
        assert!(matches!(r, Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn open_mesh_refuses_volume() {
        let m = single_triangle(
            vec3(0.0, 0.0, 0.0),
            vec3(1.0, 0.0, 0.0),
            vec3(0.0, 1.0, 0.0),
        );
        assert!(!m.is_closed());
        assert!(matches!(m.enclosed_volume(), Err(Error::OpenMesh)));
        assert!(matches!(
            m.gravitational_energy(vec3(0.0, 0.0, -1.0)),
            Err(Error::OpenMesh)
        ));
    }

    #[test]
    fn icosphere_normals_point_outward() {
        let m = gen::icosphere(1.0, 2).unwrap();
        assert!(m.is_closed() && m.is_oriented());
        for f in 0..m.face_count() {
            let t = m.triangle(f);
            let centroid = (m.position(t[0] as usize)
                + m.position(t[1] as usize)
                + m.position(t[2] as usize))
                / 3.0;
            assert!(m.face_normal(f).dot(centroid) > 0.0, "face {f} inward");
        }
    }

    #[test]
    fn vertex_normal_flat_patch_and_octahedron() {
        // Fan of four coplanar triangles around an interior vertex.
        let verts = alloc::vec![
            vec3(0.0, 0.0, 0.0),
            vec3(1.0, 0.0, 0.0),
            vec3(0.0, 1.0, 0.0),
            vec3(-1.0, 0.0, 0.0),
            vec3(0.0, -1.0, 0.0),
        ];
        let faces = alloc::vec![[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 1]];
        let regions = alloc::vec![Region::Air; 4];
        let m = ShellMesh::new(verts, faces, regions).unwrap();
        assert!((m.vertex_normal(0).unwrap() - vec3(0.0, 0.0, 1.0)).norm() < 1e-14);

        // Regular octahedron: the vertex normal is the coordinate axis.
        let verts = alloc::vec![
            vec3(1.0, 0.0, 0.0),
            vec3(-1.0, 0.0, 0.0),
            vec3(0.0, 1.0, 0.0),
            vec3(0.0, -1.0, 0.0),
            vec3(0.0, 0.0, 1.0),
            vec3(0.0, 0.0, -1.0),
        ];
        let faces = alloc::vec![
            [0, 2, 4],
            [2, 1, 4],
            [1, 3, 4],
            [3, 0, 4],
            [2, 0, 5],
            [1, 2, 5],
            [3, 1, 5],
            [0, 3, 5],
        ];
        let m = ShellMesh::new(verts, faces, alloc::vec![Region::Air; 8]).unwrap();
        assert!((m.vertex_normal(4).unwrap() - vec3(0.0, 0.0, 1.0)).norm() < 1e-14);
        assert!((m.vertex_normal(0).unwrap() - vec3(1.0, 0.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn vertex_normal_error_improves_under_refinement() {
        // Levels 0 and 1 are exactly radial by symmetry; the generic behavior
        // starts at level 2.
        let mut worst = alloc::vec::Vec::new();
        for k in [2usize, 3] {
            let m = gen::icosphere(1.0, k).unwrap();
            let mut w = 0.0f64;
            for v in 0..m.vertex_count() {
                let exact = m.position(v).normalized(0.0).unwrap();
                let n = m.vertex_normal(v).unwrap();
                w = w.max(ShellMesh::angle_from_cosine(n.dot(exact)));
            }
            worst.push(w);
        }
        assert!(worst[1] < worst[0]);
    }

    #[test]
    fn cube_volume_exact_and_translation_invariant() {
        let m = gen::box_surface(vec3(0.0, 0.0, 0.0), vec3(1.0, 1.0, 1.0)).unwrap();
        assert!((m.enclosed_volume().unwrap() - 1.0).abs() < 1e-14);

        let shift = vec3(37.5, -12.25, 901.0);
        let field = VertexField::constant(m.vertex_count(), shift);
        let moved = m.displaced(&field, 1.0).unwrap();
        let rel = (moved.enclosed_volume().unwrap() - 1.0).abs();
        assert!(rel < 1e-10, "translation changed volume by {rel:.3e}");
    }

    #[test]
    fn cube_gravity_energy_and_centroid() {
        let m = gen::box_surface(vec3(0.0, 0.0, 0.0), vec3(1.0, 1.0, 1.0)).unwrap();
        // int_cube <(0,0,-1), x> dx = -1/2.
        let g = m.gravitational_energy(vec3(0.0, 0.0, -1.0)).unwrap();
        assert!((g + 0.5).abs() < 1e-14);

        assert!((m.centroid_moment(0).unwrap() - 0.5).abs() < 1e-14);

        // Cube shifted by (2, 0, 0): moment becomes (0.5 + 2) * volume.
        let shifted = m
            .displaced(&VertexField::constant(m.vertex_count(), vec3(2.0, 0.0, 0.0)), 1.0)
            .unwrap();
        assert!((shifted.centroid_moment(0).unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn gravity_invariant_under_orthogonal_translation() {
        let m = gen::icosphere(0.8, 2).unwrap();
        let g = vec3(0.0, 0.0, -1.0);
        let e0 = m.gravitational_energy(g).unwrap();
        // Translate orthogonally to gravity.
        let moved = m
            .displaced(&VertexField::constant(m.vertex_count(), vec3(2.5, -1.5, 0.0)), 1.0)
            .unwrap();
        let e1 = moved.gravitational_energy(g).unwrap();
        assert!((e0 - e1).abs() < 1e-10 * e0.abs().max(1.0));
    }

    #[test]
    fn icosphere_area_converges_at_second_order() {
        let exact = 4.0 * core::f64::consts::PI;
        let a2 = gen::icosphere(1.0, 2).unwrap().surface_area(RegionFilter::All);
        let a3 = gen::icosphere(1.0, 3).unwrap().surface_area(RegionFilter::All);
        assert!(a2 < exact && a3 < exact);
        let ratio = (exact - a2) / (exact - a3);
        assert!((3.5..4.5).contains(&ratio), "Richardson ratio {ratio}");
    }

    #[test]
    fn cylinder_matches_reference_resolution() {
        let m = gen::cylinder(1.0, -0.1, 0.1, 0.0685).unwrap();
        assert!(m.is_closed() && m.is_oriented());
        // Comparable to the reference initial mesh of 3,686 triangles.
        let count = m.face_count();
        assert!(
            (3300..=4100).contains(&count),
            "cylinder has {count} triangles"
        );

        let exact = core::f64::consts::PI * 0.2;
        let vol = m.enclosed_volume().unwrap();
        assert!((vol - exact).abs() / exact < 2e-3, "volume {vol}");

        // Caps are planar: solid faces have normals exactly +-e3.
        for f in 0..m.face_count() {
            match m.region(f) {
                Region::Solid(0) => {
                    assert!((m.face_normal(f) - vec3(0.0, 0.0, 1.0)).norm() < 1e-12)
                }
                Region::Solid(1) => {
                    assert!((m.face_normal(f) - vec3(0.0, 0.0, -1.0)).norm() < 1e-12)
                }
                _ => {}
            }
        }
    }

    #[test]
    fn cylinder_triple_lines_and_conormals() {
        let m = gen::cylinder(1.0, -0.5, 0.5, 0.35).unwrap();
        // Both caps produce one closed contact ring each.
        for ob in [0u32, 1] {
            let ring = m.triple_vertices(ob);
            assert!(!ring.is_empty());
            for &v in &ring {
                let (mu_air, mu_solid) = m.triple_conormals(v as usize, ob).unwrap();
                let p = m.position(v as usize);
                let radial = vec3(p.x, p.y, 0.0).normalized(0.0).unwrap();
                let axial = if ob == 0 { 1.0 } else { -1.0 };
                // Air side: axial, away from the side wall; solid side: radial.
                assert!((mu_air - vec3(0.0, 0.0, axial)).norm() < 1e-9);
                assert!((mu_solid - radial).norm() < 1e-9);
                // Right-angle junction.
                assert!(mu_air.dot(mu_solid).abs() < 1e-9);
            }
        }
        // Vertices away from the rings are not on a triple line.
        let interior = (0..m.vertex_count())
            .find(|&v| !m.on_any_triple_line(v))
            .unwrap();
        assert!(matches!(
            m.triple_conormals(interior, 0),
            Err(Error::NotOnTripleLine { .. })
        ));
    }

    #[test]
    fn region_partition_consistency() {
        let m = gen::cylinder(1.0, -0.5, 0.5, 0.35).unwrap();
        let a_all = m.surface_area(RegionFilter::All);
        let a_sum = m.surface_area(RegionFilter::Air)
            + m.surface_area(RegionFilter::Solid(0))
            + m.surface_area(RegionFilter::Solid(1));
        assert!((a_all - a_sum).abs() < 1e-12 * a_all);

        // Triple edges are exactly the edges with differently-tagged faces.
        for te in m.triple_edges() {
            assert_eq!(m.region(te.air_face as usize), Region::Air);
            assert_eq!(m.region(te.solid_face as usize), Region::Solid(te.obstacle));
        }
    }
}
