//! Isotropic remeshing that restores triangle quality after the sliding
//! phase, preserving region tags and the contact-line topology.
//!
//! Split-long / collapse-short / valence-improving flips / tangential
//! smoothing, with three vertex classes: interior liquid-air vertices move
//! tangentially only, liquid-solid vertices are re-projected onto their
//! obstacle, and triple-line vertices move along the contact polyline (ring
//! neighbor smoothing plus obstacle projection). Flips never cross regions
//! or touch contact-line edges.

use crate::distance::ObstacleField;
use crate::mathx;
use crate::mesh::{Region, RegionFilter, ShellMesh};
use crate::vec3::Vec3;
use crate::{Error, Result};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone)]
pub struct RemeshParams {
    pub target_edge_length: f64,
    /// Full split/collapse/flip/smooth sweeps.
    pub iterations: usize,
    /// Smoothing passes per sweep.
    pub smooth_passes: usize,
}

impl Default for RemeshParams {
    fn default() -> Self {
        RemeshParams {
            target_edge_length: 0.0,
            iterations: 4,
            smooth_passes: 1,
        }
    }
}

/// Edge length that yields roughly `cells` equilateral triangles at the
/// mesh's current total area.
pub fn edge_length_for_cell_count(mesh: &ShellMesh, cells: usize) -> f64 {
    let area = mesh.surface_area(RegionFilter::All);
    mathx::sqrt(4.0 * area / (mathx::sqrt(3.0) * cells.max(1) as f64))
}

/// Newton projection onto the zero level of a distance field:
/// `x <- x - dist(x) grad(x)` until `|dist| <= 1e-10`.
pub fn project_to_surface(point: Vec3, field: &ObstacleField) -> Result<Vec3> {
    let mut x = point;
    for _ in 0..50 {
        let d = field.dist(x)?;
        if d.abs() <= 1e-10 {
            return Ok(x);
        }
        x -= field.grad(x)? * d;
    }
    let residual = field.dist(x)?.abs();
    if residual <= 1e-10 {
        Ok(x)
    } else {
        Err(Error::ProjectionFailed { point, residual })
    }
}

/// Closest point on a triangle (Ericson, Real-Time Collision Detection).
fn closest_on_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Reference geometry of the input mesh: a spatial index over the liquid-air
/// faces for projecting moved air vertices back onto the surface, and the
/// contact polylines for keeping triple vertices on their rings.
struct RefSurface {
    faces: Vec<[Vec3; 3]>,
    grid: alloc::collections::BTreeMap<(i32, i32, i32), Vec<u32>>,
    cell: f64,
    /// Contact-ring segments per obstacle: `(obstacle, a, b)`.
    rings: Vec<(u32, Vec3, Vec3)>,
}

impl RefSurface {
    fn build(mesh: &ShellMesh, cell: f64) -> RefSurface {
        let mut faces = Vec::new();
        let mut grid: alloc::collections::BTreeMap<(i32, i32, i32), Vec<u32>> =
            alloc::collections::BTreeMap::new();
        let key = |x: f64| mathx::floor(x / cell) as i32;
        for f in 0..mesh.face_count() {
            if mesh.region(f) != Region::Air {
                continue;
            }
            let t = mesh.triangle(f);
            let tri = [
                mesh.position(t[0] as usize),
                mesh.position(t[1] as usize),
                mesh.position(t[2] as usize),
            ];
            let id = faces.len() as u32;
            faces.push(tri);
            let (mut lo, mut hi) = (tri[0], tri[0]);
            for p in &tri[1..] {
                for i in 0..3 {
                    lo[i] = lo[i].min(p[i]);
                    hi[i] = hi[i].max(p[i]);
                }
            }
            for ix in key(lo.x)..=key(hi.x) {
                for iy in key(lo.y)..=key(hi.y) {
                    for iz in key(lo.z)..=key(hi.z) {
                        grid.entry((ix, iy, iz)).or_default().push(id);
                    }
                }
            }
        }
        let rings = mesh
            .triple_edges()
            .iter()
            .map(|te| {
                (
                    te.obstacle,
                    mesh.position(te.verts[0] as usize),
                    mesh.position(te.verts[1] as usize),
                )
            })
            .collect();
        RefSurface {
            faces,
            grid,
            cell,
            rings,
        }
    }

    /// Closest point on the liquid-air reference surface.
    fn project_air(&self, p: Vec3) -> Vec3 {
        let key = |x: f64| mathx::floor(x / self.cell) as i32;
        let (cx, cy, cz) = (key(p.x), key(p.y), key(p.z));
        let mut best = p;
        let mut best_d = f64::INFINITY;
        let mut scan = |radius: i32, best: &mut Vec3, best_d: &mut f64| {
            for ix in cx - radius..=cx + radius {
                for iy in cy - radius..=cy + radius {
                    for iz in cz - radius..=cz + radius {
                        // Only the new shell of the expanding search.
                        if ix.abs_diff(cx).max(iy.abs_diff(cy)).max(iz.abs_diff(cz))
                            != radius as u32
                        {
                            continue;
                        }
                        let Some(ids) = self.grid.get(&(ix, iy, iz)) else {
                            continue;
                        };
                        for &id in ids {
                            let [a, b, c] = self.faces[id as usize];
                            let q = closest_on_triangle(p, a, b, c);
                            let d = (q - p).norm_sq();
                            if d < *best_d {
                                *best_d = d;
                                *best = q;
                            }
                        }
                    }
                }
            }
        };
        let mut radius = 0;
        loop {
            scan(radius, &mut best, &mut best_d);
            if best_d.is_finite() {
                // One extra shell so a slightly closer face in the next ring
                // is not missed.
                scan(radius + 1, &mut best, &mut best_d);
                return best;
            }
            radius += 1;
            if radius > 64 {
                // Far outside the index; brute force.
                for tri in &self.faces {
                    let q = closest_on_triangle(p, tri[0], tri[1], tri[2]);
                    let d = (q - p).norm_sq();
                    if d < best_d {
                        best_d = d;
                        best = q;
                    }
                }
                return best;
            }
        }
    }

    /// Closest point on the input contact ring of `obstacle`.
    fn project_ring(&self, obstacle: u32, p: Vec3) -> Vec3 {
        let mut best = p;
        let mut best_d = f64::INFINITY;
        for &(ob, a, b) in &self.rings {
            if ob != obstacle {
                continue;
            }
            let ab = b - a;
            let t = (ab.dot(p - a) / ab.norm_sq()).clamp(0.0, 1.0);
            let q = a + ab * t;
            let d = (q - p).norm_sq();
            if d < best_d {
                best_d = d;
                best = q;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VertKind {
    Air,
    Solid(u32),
    Triple(u32),
}

struct EditMesh {
    verts: Vec<Vec3>,
    kind: Vec<VertKind>,
    faces: Vec<[u32; 3]>,
    region: Vec<Option<Region>>,
    vfaces: Vec<Vec<u32>>,
}

impl EditMesh {
    fn from_shell(mesh: &ShellMesh) -> Self {
        let nv = mesh.vertex_count();
        let mut kind = vec![VertKind::Air; nv];
        for v in 0..nv {
            let contacts = mesh.vertex_contacts(v);
            if mesh.on_any_triple_line(v) {
                let ob = contacts
                    .iter()
                    .copied()
                    .find(|&ob| mesh.on_triple_line(v, ob))
                    .unwrap_or(contacts[0]);
                kind[v] = VertKind::Triple(ob);
            } else if let Some(&ob) = contacts.first() {
                kind[v] = VertKind::Solid(ob);
            }
        }
        EditMesh {
            verts: mesh.positions().to_vec(),
            kind,
            faces: mesh.triangles().to_vec(),
            region: mesh.regions().iter().map(|r| Some(*r)).collect(),
            vfaces: (0..nv)
                .map(|v| mesh.faces_of_vertex(v).to_vec())
                .collect(),
        }
    }

    fn alive(&self, f: u32) -> bool {
        self.region[f as usize].is_some()
    }

    fn face_verts(&self, f: u32) -> [u32; 3] {
        self.faces[f as usize]
    }

    /// Alive faces containing both endpoints.
    fn edge_faces(&self, a: u32, b: u32) -> Vec<u32> {
        self.vfaces[a as usize]
            .iter()
            .copied()
            .filter(|&f| self.alive(f) && self.face_verts(f).contains(&b))
            .collect()
    }

    fn face_geometry(&self, t: [u32; 3]) -> (Vec3, f64) {
        let a = self.verts[t[0] as usize];
        let b = self.verts[t[1] as usize];
        let c = self.verts[t[2] as usize];
        let cross = (b - a).cross(c - a);
        (cross, 0.5 * cross.norm())
    }

    /// Sorted alive edges as (a, b) with a < b.
    fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for (f, t) in self.faces.iter().enumerate() {
            if self.region[f].is_none() {
                continue;
            }
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn is_feature_edge(&self, a: u32, b: u32) -> bool {
        let fs = self.edge_faces(a, b);
        fs.len() == 2 && self.region[fs[0] as usize] != self.region[fs[1] as usize]
    }

    /// Obstacle to project a new vertex of this edge onto, if any.
    fn edge_obstacle(&self, a: u32, b: u32) -> Option<u32> {
        let fs = self.edge_faces(a, b);
        let mut solid = None;
        for f in fs {
            if let Some(Region::Solid(i)) = self.region[f as usize] {
                solid = Some(i);
            }
        }
        solid
    }

    fn neighbors(&self, v: u32) -> Vec<u32> {
        let mut out = Vec::new();
        for &f in &self.vfaces[v as usize] {
            if !self.alive(f) {
                continue;
            }
            for &w in &self.face_verts(f) {
                if w != v && !out.contains(&w) {
                    out.push(w);
                }
            }
        }
        out
    }

    fn remove_face_from(&mut self, v: u32, f: u32) {
        let list = &mut self.vfaces[v as usize];
        if let Some(pos) = list.iter().position(|&x| x == f) {
            list.swap_remove(pos);
        }
    }

    fn push_face(&mut self, t: [u32; 3], region: Region) -> u32 {
        let f = self.faces.len() as u32;
        self.faces.push(t);
        self.region.push(Some(region));
        for &v in &t {
            self.vfaces[v as usize].push(f);
        }
        f
    }

    fn kill_face(&mut self, f: u32) {
        let t = self.face_verts(f);
        self.region[f as usize] = None;
        for &v in &t {
            self.remove_face_from(v, f);
        }
    }

    fn split(
        &mut self,
        a: u32,
        b: u32,
        obstacles: &[ObstacleField],
        refsurf: &RefSurface,
    ) -> Result<()> {
        let fs = self.edge_faces(a, b);
        if fs.len() != 2 {
            return Ok(());
        }
        let mut mid = (self.verts[a as usize] + self.verts[b as usize]) * 0.5;
        let feature = self.is_feature_edge(a, b);
        let kind = if feature {
            let ob = self.edge_obstacle(a, b).unwrap_or(0);
            mid = refsurf.project_ring(ob, mid);
            mid = project_to_surface(mid, &obstacles[ob as usize])?;
            VertKind::Triple(ob)
        } else if let Some(ob) = self.edge_obstacle(a, b) {
            mid = project_to_surface(mid, &obstacles[ob as usize])?;
            VertKind::Solid(ob)
        } else {
            mid = refsurf.project_air(mid);
            VertKind::Air
        };
        let m = self.verts.len() as u32;
        self.verts.push(mid);
        self.kind.push(kind);
        self.vfaces.push(Vec::new());

        for f in fs {
            let t = self.face_verts(f);
            let region = self.region[f as usize].unwrap();
            // Replace the split edge endpoint pair, preserving orientation.
            let mut t1 = t;
            let mut t2 = t;
            for k in 0..3 {
                if t[k] == a && t[(k + 1) % 3] == b {
                    t1[(k + 1) % 3] = m; // (.., a, m, ..)
                    t2[k] = m; // (.., m, b, ..)
                } else if t[k] == b && t[(k + 1) % 3] == a {
                    t1[(k + 1) % 3] = m;
                    t2[k] = m;
                }
            }
            self.kill_face(f);
            self.push_face(t1, region);
            self.push_face(t2, region);
        }
        Ok(())
    }

    /// Try to collapse edge (a, b); returns whether it happened.
    fn collapse(
        &mut self,
        a: u32,
        b: u32,
        obstacles: &[ObstacleField],
        refsurf: &RefSurface,
    ) -> Result<bool> {
        let fs = self.edge_faces(a, b);
        if fs.len() != 2 {
            return Ok(false);
        }
        // Link condition: shared neighbors must be exactly the two opposite
        // vertices of the shared faces.
        let na = self.neighbors(a);
        let nb = self.neighbors(b);
        let common: Vec<u32> = na.iter().copied().filter(|v| nb.contains(v)).collect();
        if common.len() != 2 {
            return Ok(false);
        }

        let ka = self.kind[a as usize];
        let kb = self.kind[b as usize];
        let feature = self.is_feature_edge(a, b);
        // Collapse target: position, kind, and which endpoint survives.
        let (target, kind) = match (ka, kb) {
            (VertKind::Triple(i), VertKind::Triple(j)) => {
                if i != j || !feature {
                    return Ok(false); // chord across a contact ring
                }
                let mid = refsurf
                    .project_ring(i, (self.verts[a as usize] + self.verts[b as usize]) * 0.5);
                (project_to_surface(mid, &obstacles[i as usize])?, VertKind::Triple(i))
            }
            (VertKind::Triple(i), _) => (self.verts[a as usize], VertKind::Triple(i)),
            (_, VertKind::Triple(j)) => (self.verts[b as usize], VertKind::Triple(j)),
            (VertKind::Solid(i), VertKind::Solid(j)) => {
                if i != j {
                    return Ok(false);
                }
                let mid = (self.verts[a as usize] + self.verts[b as usize]) * 0.5;
                (project_to_surface(mid, &obstacles[i as usize])?, VertKind::Solid(i))
            }
            (VertKind::Air, VertKind::Air) => {
                let mid = (self.verts[a as usize] + self.verts[b as usize]) * 0.5;
                (refsurf.project_air(mid), VertKind::Air)
            }
            (VertKind::Solid(i), VertKind::Air) => (self.verts[a as usize], VertKind::Solid(i)),
            (VertKind::Air, VertKind::Solid(j)) => (self.verts[b as usize], VertKind::Solid(j)),
        };

        // Geometric guard: surviving faces must keep positive area and not
        // flip against their current normal.
        let old_a = self.verts[a as usize];
        let survivors: Vec<u32> = self.vfaces[a as usize]
            .iter()
            .chain(self.vfaces[b as usize].iter())
            .copied()
            .filter(|&f| self.alive(f) && !fs.contains(&f))
            .collect();
        for &f in &survivors {
            let t = self.face_verts(f);
            let (old_cross, _) = self.face_geometry(t);
            let nt: Vec<Vec3> = t
                .iter()
                .map(|&v| {
                    if v == a || v == b {
                        target
                    } else {
                        self.verts[v as usize]
                    }
                })
                .collect();
            let cross = (nt[1] - nt[0]).cross(nt[2] - nt[0]);
            if 0.5 * cross.norm() < 1e-14 || cross.dot(old_cross) <= 0.0 {
                return Ok(false);
            }
        }
        let _ = old_a;

        // Execute: b merges into a.
        for f in fs {
            self.kill_face(f);
        }
        let bfaces: Vec<u32> = self.vfaces[b as usize].clone();
        for f in bfaces {
            if !self.alive(f) {
                continue;
            }
            let t = &mut self.faces[f as usize];
            for v in t.iter_mut() {
                if *v == b {
                    *v = a;
                }
            }
            self.remove_face_from(b, f);
            self.vfaces[a as usize].push(f);
        }
        self.verts[a as usize] = target;
        self.kind[a as usize] = kind;
        Ok(true)
    }

    fn valence(&self, v: u32) -> usize {
        self.vfaces[v as usize]
            .iter()
            .filter(|&&f| self.alive(f))
            .count()
    }

    fn flip(&mut self, a: u32, b: u32) -> bool {
        let fs = self.edge_faces(a, b);
        if fs.len() != 2 {
            return false;
        }
        let (f1, f2) = (fs[0], fs[1]);
        if self.region[f1 as usize] != self.region[f2 as usize] {
            return false;
        }
        let region = self.region[f1 as usize].unwrap();
        let t1 = self.face_verts(f1);
        let t2 = self.face_verts(f2);
        let c = *t1.iter().find(|&&v| v != a && v != b).unwrap();
        let d = *t2.iter().find(|&&v| v != a && v != b).unwrap();
        if c == d || !self.edge_faces(c, d).is_empty() {
            return false;
        }

        // Valence balancing: move all four valences towards 6.
        let dev = |v: i64| (v - 6) * (v - 6);
        let (va, vb, vc, vd) = (
            self.valence(a) as i64,
            self.valence(b) as i64,
            self.valence(c) as i64,
            self.valence(d) as i64,
        );
        let before = dev(va) + dev(vb) + dev(vc) + dev(vd);
        let after = dev(va - 1) + dev(vb - 1) + dev(vc + 1) + dev(vd + 1);
        if after >= before {
            return false;
        }

        // Orientation bookkeeping: express f1 as (a', b', c) with the shared
        // edge traversed a' -> b'.
        let (aa, bb) = {
            let k = t1.iter().position(|&v| v == c).unwrap();
            (t1[(k + 1) % 3], t1[(k + 2) % 3])
        };
        let new1 = [aa, d, c];
        let new2 = [bb, c, d];
        let (cross1, area1) = self.face_geometry(new1);
        let (cross2, area2) = self.face_geometry(new2);
        let (old_cross1, _) = self.face_geometry(t1);
        let (old_cross2, _) = self.face_geometry(t2);
        let old_dir = old_cross1 + old_cross2;
        if area1 < 1e-14
            || area2 < 1e-14
            || cross1.dot(old_dir) <= 0.0
            || cross2.dot(old_dir) <= 0.0
        {
            return false;
        }

        self.kill_face(f1);
        self.kill_face(f2);
        self.push_face(new1, region);
        self.push_face(new2, region);
        true
    }

    fn vertex_normal(&self, v: u32) -> Option<Vec3> {
        let mut acc = Vec3::ZERO;
        for &f in &self.vfaces[v as usize] {
            if self.alive(f) {
                let (cross, _) = self.face_geometry(self.face_verts(f));
                acc += cross;
            }
        }
        acc.normalized(1e-14)
    }

    /// Ring neighbors of a triple vertex along its contact polyline.
    fn triple_ring_neighbors(&self, v: u32) -> Vec<u32> {
        self.neighbors(v)
            .into_iter()
            .filter(|&w| {
                matches!(self.kind[w as usize], VertKind::Triple(_)) && {
                    let (x, y) = if v < w { (v, w) } else { (w, v) };
                    self.is_feature_edge(x, y)
                }
            })
            .collect()
    }

    fn smooth(
        &mut self,
        relax: f64,
        obstacles: &[ObstacleField],
        refsurf: &RefSurface,
    ) -> Result<()> {
        let nv = self.verts.len();
        for v in 0..nv as u32 {
            if self.vfaces[v as usize].iter().all(|&f| !self.alive(f)) {
                continue;
            }
            match self.kind[v as usize] {
                VertKind::Air => {
                    let nbrs = self.neighbors(v);
                    if nbrs.len() < 3 {
                        continue;
                    }
                    let mut c = Vec3::ZERO;
                    for &w in &nbrs {
                        c += self.verts[w as usize];
                    }
                    c = c / nbrs.len() as f64;
                    let d = c - self.verts[v as usize];
                    if let Some(n) = self.vertex_normal(v) {
                        let tangential = d - n * n.dot(d);
                        self.verts[v as usize] += tangential * relax;
                    }
                }
                VertKind::Solid(ob) => {
                    let nbrs = self.neighbors(v);
                    if nbrs.len() < 3 {
                        continue;
                    }
                    let mut c = Vec3::ZERO;
                    for &w in &nbrs {
                        c += self.verts[w as usize];
                    }
                    c = c / nbrs.len() as f64;
                    let moved =
                        self.verts[v as usize] + (c - self.verts[v as usize]) * relax;
                    self.verts[v as usize] =
                        project_to_surface(moved, &obstacles[ob as usize])?;
                }
                VertKind::Triple(ob) => {
                    let ring = self.triple_ring_neighbors(v);
                    if ring.len() != 2 {
                        continue;
                    }
                    let c = (self.verts[ring[0] as usize] + self.verts[ring[1] as usize]) * 0.5;
                    let moved = refsurf.project_ring(
                        ob,
                        self.verts[v as usize] + (c - self.verts[v as usize]) * relax,
                    );
                    self.verts[v as usize] =
                        project_to_surface(moved, &obstacles[ob as usize])?;
                }
            }
        }
        Ok(())
    }

    fn compact(self) -> Result<ShellMesh> {
        let mut vert_map = vec![u32::MAX; self.verts.len()];
        let mut verts = Vec::new();
        let mut faces = Vec::new();
        let mut regions = Vec::new();
        for (f, t) in self.faces.iter().enumerate() {
            let Some(region) = self.region[f] else { continue };
            let mut mapped = [0u32; 3];
            for (k, &v) in t.iter().enumerate() {
                if vert_map[v as usize] == u32::MAX {
                    vert_map[v as usize] = verts.len() as u32;
                    verts.push(self.verts[v as usize]);
                }
                mapped[k] = vert_map[v as usize];
            }
            faces.push(mapped);
            regions.push(region);
        }
        ShellMesh::new(verts, faces, regions)
    }
}

/// Isotropic remesh towards `params.target_edge_length`, preserving region
/// tags, contact lines and obstacle adherence.
pub fn remesh(
    mesh: &ShellMesh,
    params: &RemeshParams,
    obstacles: &[ObstacleField],
) -> Result<ShellMesh> {
    let target = params.target_edge_length;
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "remesh target edge length must be > 0, got {target}"
        )));
    }
    for v in 0..mesh.vertex_count() {
        for &ob in mesh.vertex_contacts(v) {
            if ob as usize >= obstacles.len() {
                return Err(Error::InvalidParameter(format!(
                    "mesh references obstacle {ob} but only {} fields given",
                    obstacles.len()
                )));
            }
        }
    }
    let refsurf = RefSurface::build(mesh, (2.0 * target).max(2.0 * mesh.mean_edge_length()));
    let mut edit = EditMesh::from_shell(mesh);
    let long = 4.0 / 3.0 * target;
    let short = 4.0 / 5.0 * target;

    for _ in 0..params.iterations {
        // Split long edges, longest first.
        let mut edges: Vec<(f64, u32, u32)> = edit
            .edges()
            .into_iter()
            .map(|(a, b)| {
                (
                    (edit.verts[a as usize] - edit.verts[b as usize]).norm(),
                    a,
                    b,
                )
            })
            .filter(|&(len, _, _)| len > long)
            .collect();
        edges.sort_unstable_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
        for (_, a, b) in edges {
            let len = (edit.verts[a as usize] - edit.verts[b as usize]).norm();
            if len > long {
                edit.split(a, b, obstacles, &refsurf)?;
            }
        }

        // Collapse short edges, shortest first.
        let mut edges: Vec<(f64, u32, u32)> = edit
            .edges()
            .into_iter()
            .map(|(a, b)| {
                (
                    (edit.verts[a as usize] - edit.verts[b as usize]).norm(),
                    a,
                    b,
                )
            })
            .filter(|&(len, _, _)| len < short)
            .collect();
        edges.sort_unstable_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        for (_, a, b) in edges {
            if edit.edge_faces(a, b).len() != 2 {
                continue;
            }
            let len = (edit.verts[a as usize] - edit.verts[b as usize]).norm();
            if len < short {
                edit.collapse(a, b, obstacles, &refsurf)?;
            }
        }

        // Valence-improving flips.
        for (a, b) in edit.edges() {
            if !edit.is_feature_edge(a, b) {
                edit.flip(a, b);
            }
        }

        for _ in 0..params.smooth_passes {
            edit.smooth(0.4, obstacles, &refsurf)?;
        }
    }

    edit.compact()
}
