//! Constrained stationarity system and the two-phase outer solver.
//!
//! The unknowns are vertex motions plus Lagrange multipliers for the volume
//! constraint, one distance constraint per wetted vertex, and optional
//! volume-centroid constraints. Each step solves one symmetric saddle-point
//! (KKT) system: in the smoothing phase the shape block is the H^1 inner
//! product over full 3-component nodal fields (vertices may slide), in the
//! Newton phase it is the exact second shape derivative of the Lagrangian
//! over a reduced motion basis (normal motion in the interior, the local
//! co-normal plane on the contact lines).

pub mod kkt;

use crate::calculus::{self, FluxIntegrand};
use crate::distance::ObstacleField;
use crate::mesh::{EnergyParams, Region, ShellMesh, VertexField};
use crate::vec3::Vec3;
use crate::{Error, KernelHint, Result};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use kkt::{SolveStats, SparseSym, SymmetricBuilder};

/// Shape degrees of freedom: one unit direction per dof, attached to a vertex.
#[derive(Debug, Clone)]
pub struct MotionBasis {
    /// `(vertex, unit direction)` per shape dof.
    pub dirs: Vec<(u32, Vec3)>,
    /// Dof range of vertex `v` is `offsets[v]..offsets[v + 1]`.
    pub offsets: Vec<usize>,
    /// Whether this is the reduced (Newton-phase) basis.
    pub reduced: bool,
}

impl MotionBasis {
    /// Full nodal basis: three coordinate dofs per vertex (smoothing phase).
    pub fn full(mesh: &ShellMesh) -> MotionBasis {
        let nv = mesh.vertex_count();
        let mut dirs = Vec::with_capacity(3 * nv);
        let mut offsets = Vec::with_capacity(nv + 1);
        for v in 0..nv {
            offsets.push(dirs.len());
            for axis in 0..3 {
                dirs.push((v as u32, Vec3::axis(axis)));
            }
        }
        offsets.push(dirs.len());
        MotionBasis {
            dirs,
            offsets,
            reduced: false,
        }
    }

    /// Reduced basis: interior vertices move along the vertex normal only;
    /// triple-line vertices move in the plane of the two contact co-normals.
    pub fn reduced(mesh: &ShellMesh) -> Result<MotionBasis> {
        let nv = mesh.vertex_count();
        let mut dirs = Vec::with_capacity(nv + mesh.triple_edges().len());
        let mut offsets = Vec::with_capacity(nv + 1);
        for v in 0..nv {
            offsets.push(dirs.len());
            if mesh.on_any_triple_line(v) {
                let obstacles: Vec<u32> = mesh
                    .vertex_contacts(v)
                    .iter()
                    .copied()
                    .filter(|&ob| mesh.on_triple_line(v, ob))
                    .collect();
                if obstacles.len() != 1 {
                    return Err(Error::InvalidParameter(format!(
                        "vertex {v} lies on triple lines of {} obstacles",
                        obstacles.len()
                    )));
                }
                let (mu_air, mu_solid) = mesh.triple_conormals(v, obstacles[0])?;
                if mu_air.cross(mu_solid).norm() < 1e-6 {
                    return Err(Error::DegenerateContact { vertex: v });
                }
                dirs.push((v as u32, mu_air));
                dirs.push((v as u32, mu_solid));
            } else {
                dirs.push((v as u32, mesh.vertex_normal(v)?));
            }
        }
        offsets.push(dirs.len());
        Ok(MotionBasis {
            dirs,
            offsets,
            reduced: true,
        })
    }

    pub fn dof_count(&self) -> usize {
        self.dirs.len()
    }

    pub fn dofs_of_vertex(&self, v: usize) -> core::ops::Range<usize> {
        self.offsets[v]..self.offsets[v + 1]
    }

    /// Expand reduced coefficients into a nodal displacement field.
    pub fn prolong(&self, coeffs: &[f64], nv: usize) -> VertexField {
        let mut field = VertexField::zeros(nv);
        for (dof, &(v, dir)) in self.dirs.iter().enumerate() {
            field[v as usize] += dir * coeffs[dof];
        }
        field
    }
}

/// Constraint bookkeeping: one distance constraint per wetted vertex and
/// obstacle, the volume constraint, and optional centroid components.
#[derive(Debug, Clone)]
pub struct Constraints {
    /// `(vertex, obstacle)`, sorted by vertex.
    pub distance: Vec<(u32, u32)>,
    /// Active centroid axes (subset of `{0, 1, 2}`) and their targets.
    pub centroid_axes: Vec<usize>,
    pub centroid_targets: Vec<f64>,
}

impl Constraints {
    pub fn build(mesh: &ShellMesh, centroid_axes: &[usize], centroid_targets: &[f64]) -> Self {
        let mut distance = Vec::new();
        for v in 0..mesh.vertex_count() {
            for &ob in mesh.vertex_contacts(v) {
                distance.push((v as u32, ob));
            }
        }
        Constraints {
            distance,
            centroid_axes: centroid_axes.to_vec(),
            centroid_targets: centroid_targets.to_vec(),
        }
    }

    pub fn count(&self) -> usize {
        self.distance.len() + 1 + self.centroid_axes.len()
    }
}

/// Lagrange multipliers, aligned with [`Constraints`].
#[derive(Debug, Clone)]
pub struct Multipliers {
    pub volume: f64,
    pub distance: Vec<f64>,
    pub centroid: Vec<f64>,
}

impl Multipliers {
    pub fn zeros(constraints: &Constraints) -> Self {
        Multipliers {
            volume: 0.0,
            distance: vec![0.0; constraints.distance.len()],
            centroid: vec![0.0; constraints.centroid_axes.len()],
        }
    }
}

/// Shape block of the KKT system.
#[derive(Debug, Clone, Copy)]
pub enum HessianMode {
    /// Exact second shape derivative of the Lagrangian.
    Exact,
    /// H^1 inner product with smoothing weight `gamma` (Sobolev descent).
    Sobolev { gamma: f64 },
}

/// Assembled KKT system: symmetric matrix over shape dofs and multipliers,
/// right-hand side `-residual`, and layout metadata.
pub struct KktSystem {
    pub matrix: SparseSym,
    pub rhs: Vec<f64>,
    pub n_shape: usize,
    /// Columns eliminated last (volume and centroid rows couple globally).
    pub dense_cols: Vec<usize>,
    /// l2 norm of the full residual (gradient and constraint parts).
    pub residual_norm: f64,
}

/// Gradient of the interface energy in the given basis (no multiplier terms).
pub fn energy_gradient(
    mesh: &ShellMesh,
    params: &EnergyParams,
    basis: &MotionBasis,
) -> Vec<f64> {
    let mut g = vec![0.0f64; basis.dof_count()];
    let gravity_pair = FluxIntegrand::Gravity(params.gravity);
    for f in 0..mesh.face_count() {
        let fb = calculus::face_basis(mesh, f);
        let coef_area = match mesh.region(f) {
            Region::Air => 1.0,
            Region::Solid(i) => -params.betas[i as usize],
        };
        let tri = mesh.triangle(f);
        for (corner, &vert) in tri.iter().enumerate() {
            for dof in basis.dofs_of_vertex(vert as usize) {
                let dir = basis.dirs[dof].1;
                let mut val = coef_area * fb.area * dir.dot(fb.grads[corner]);
                if params.bond != 0.0 {
                    let mut nodal = [Vec3::ZERO; 3];
                    nodal[corner] = dir;
                    let defo = calculus::face_deformation(&fb, nodal);
                    val += params.bond
                        * fb.area
                        * calculus::face_d_flux_density(&fb, &gravity_pair, &defo, nodal);
                }
                g[dof] += val;
            }
        }
    }
    g
}

/// Constraint Jacobian columns in the given basis.
pub struct ConstraintColumns {
    /// `dF[e_r]` for every shape dof (globally coupled).
    pub volume: Vec<f64>,
    /// Distance rows: `(dof, value)` entries per constraint.
    pub distance: Vec<Vec<(usize, f64)>>,
    /// Centroid rows, scaled by `1 / V0` (globally coupled).
    pub centroid: Vec<Vec<f64>>,
}

pub fn constraint_columns(
    mesh: &ShellMesh,
    params: &EnergyParams,
    obstacles: &[ObstacleField],
    constraints: &Constraints,
    basis: &MotionBasis,
) -> Result<ConstraintColumns> {
    let n = basis.dof_count();
    let mut volume = vec![0.0f64; n];
    for f in 0..mesh.face_count() {
        let fb = calculus::face_basis(mesh, f);
        let tri = mesh.triangle(f);
        for &vert in tri.iter() {
            for dof in basis.dofs_of_vertex(vert as usize) {
                let dir = basis.dirs[dof].1;
                volume[dof] += fb.area / 3.0 * dir.dot(fb.normal);
            }
        }
    }

    let mut distance = Vec::with_capacity(constraints.distance.len());
    for &(v, ob) in &constraints.distance {
        let grad = obstacles[ob as usize].grad(mesh.position(v as usize))?;
        let entries = basis
            .dofs_of_vertex(v as usize)
            .map(|dof| (dof, basis.dirs[dof].1.dot(grad)))
            .collect();
        distance.push(entries);
    }

    let mut centroid = Vec::with_capacity(constraints.centroid_axes.len());
    for &axis in &constraints.centroid_axes {
        let pair = FluxIntegrand::Centroid(axis);
        let mut col = vec![0.0f64; n];
        for f in 0..mesh.face_count() {
            let fb = calculus::face_basis(mesh, f);
            let tri = mesh.triangle(f);
            for (corner, &vert) in tri.iter().enumerate() {
                for dof in basis.dofs_of_vertex(vert as usize) {
                    let dir = basis.dirs[dof].1;
                    let mut nodal = [Vec3::ZERO; 3];
                    nodal[corner] = dir;
                    let defo = calculus::face_deformation(&fb, nodal);
                    col[dof] += fb.area
                        * calculus::face_d_flux_density(&fb, &pair, &defo, nodal)
                        / params.target_volume;
                }
            }
        }
        centroid.push(col);
    }

    Ok(ConstraintColumns {
        volume,
        distance,
        centroid,
    })
}

/// Constraint residual values in layout order (distance, volume, centroid).
pub fn constraint_values(
    mesh: &ShellMesh,
    params: &EnergyParams,
    obstacles: &[ObstacleField],
    constraints: &Constraints,
) -> Result<Vec<f64>> {
    let mut c = Vec::with_capacity(constraints.count());
    for &(v, ob) in &constraints.distance {
        c.push(obstacles[ob as usize].dist(mesh.position(v as usize))?);
    }
    c.push(mesh.enclosed_volume()? - params.target_volume);
    for (&axis, &target) in constraints
        .centroid_axes
        .iter()
        .zip(&constraints.centroid_targets)
    {
        c.push(mesh.centroid_moment(axis)? / params.target_volume - target);
    }
    Ok(c)
}

/// Residual summary used for history rows and convergence checks.
#[derive(Debug, Clone, Copy)]
pub struct ResidualInfo {
    /// l2 norm of the full KKT right-hand side.
    pub norm: f64,
    pub energy: f64,
    /// `|F - V0| / V0`.
    pub volume_err: f64,
    /// Largest `|dist|` over constrained vertices.
    pub dist_err: f64,
}

fn norm2(v: &[f64]) -> f64 {
    crate::mathx::sqrt(v.iter().map(|x| x * x).sum())
}

/// Assemble the gradient of the Lagrangian and the constraint values; the
/// negated concatenation is the KKT right-hand side.
pub fn residual_vector(
    mesh: &ShellMesh,
    params: &EnergyParams,
    obstacles: &[ObstacleField],
    constraints: &Constraints,
    multipliers: &Multipliers,
    basis: &MotionBasis,
) -> Result<Vec<f64>> {
    let cols = constraint_columns(mesh, params, obstacles, constraints, basis)?;
    let mut grad = energy_gradient(mesh, params, basis);
    for (dof, v) in cols.volume.iter().enumerate() {
        grad[dof] += multipliers.volume * v;
    }
    for (ci, entries) in cols.distance.iter().enumerate() {
        for &(dof, v) in entries {
            grad[dof] += multipliers.distance[ci] * v;
        }
    }
    for (ci, col) in cols.centroid.iter().enumerate() {
        for (dof, v) in col.iter().enumerate() {
            grad[dof] += multipliers.centroid[ci] * v;
        }
    }
    grad.extend(constraint_values(mesh, params, obstacles, constraints)?);
    Ok(grad)
}

/// Assemble the full KKT system for a step in the given mode.
pub fn assemble_kkt(
    mesh: &ShellMesh,
    params: &EnergyParams,
    obstacles: &[ObstacleField],
    constraints: &Constraints,
    multipliers: &Multipliers,
    basis: &MotionBasis,
    mode: HessianMode,
) -> Result<KktSystem> {
    let ns = basis.dof_count();
    let nc = constraints.count();
    let n = ns + nc;
    let dist_row = |ci: usize| ns + ci;
    let vol_row = ns + constraints.distance.len();
    let cent_row = |ci: usize| vol_row + 1 + ci;

    let mut builder = SymmetricBuilder::new(n);

    // Shape-shape block.
    match mode {
        HessianMode::Sobolev { gamma } => {
            for f in 0..mesh.face_count() {
                let fb = calculus::face_basis(mesh, f);
                let tri = mesh.triangle(f);
                for ci in 0..3 {
                    for cj in ci..3 {
                        let mass = if ci == cj { fb.area / 6.0 } else { fb.area / 12.0 };
                        let scalar = gamma * fb.area * fb.grads[ci].dot(fb.grads[cj]) + mass;
                        for di in basis.dofs_of_vertex(tri[ci] as usize) {
                            for dj in basis.dofs_of_vertex(tri[cj] as usize) {
                                if ci == cj && dj < di {
                                    continue;
                                }
                                let v =
                                    scalar * basis.dirs[di].1.dot(basis.dirs[dj].1);
                                builder.add(di, dj, v);
                            }
                        }
                    }
                }
            }
        }
        HessianMode::Exact => {
            let gravity_pair = FluxIntegrand::Gravity(params.gravity);
            let centroid_pairs: Vec<(FluxIntegrand, f64)> = constraints
                .centroid_axes
                .iter()
                .enumerate()
                .map(|(ci, &axis)| {
                    (
                        FluxIntegrand::Centroid(axis),
                        multipliers.centroid[ci] / params.target_volume,
                    )
                })
                .collect();
            // Per-face local dofs: (dof index, corner, direction).
            let mut local: Vec<(usize, usize, Vec3)> = Vec::with_capacity(9);
            for f in 0..mesh.face_count() {
                let fb = calculus::face_basis(mesh, f);
                let coef_area = match mesh.region(f) {
                    Region::Air => 1.0,
                    Region::Solid(i) => -params.betas[i as usize],
                };
                let tri = mesh.triangle(f);
                local.clear();
                for (corner, &vert) in tri.iter().enumerate() {
                    for dof in basis.dofs_of_vertex(vert as usize) {
                        local.push((dof, corner, basis.dirs[dof].1));
                    }
                }
                for a in 0..local.len() {
                    let (dof_a, ca, dir_a) = local[a];
                    let mut nodal_a = [Vec3::ZERO; 3];
                    nodal_a[ca] = dir_a;
                    let defo_a = calculus::face_deformation(&fb, nodal_a);
                    for b in a..local.len() {
                        let (dof_b, cb, dir_b) = local[b];
                        let mut nodal_b = [Vec3::ZERO; 3];
                        nodal_b[cb] = dir_b;
                        let defo_b = calculus::face_deformation(&fb, nodal_b);

                        let mut v = coef_area
                            * calculus::face_d2_area_density(&defo_a, &defo_b);
                        if multipliers.volume != 0.0 {
                            v += multipliers.volume
                                * calculus::face_d2_flux_density(
                                    &fb,
                                    &FluxIntegrand::Volume,
                                    &defo_a,
                                    &defo_b,
                                    nodal_a,
                                    nodal_b,
                                );
                        }
                        if params.bond != 0.0 {
                            v += params.bond
                                * calculus::face_d2_flux_density(
                                    &fb,
                                    &gravity_pair,
                                    &defo_a,
                                    &defo_b,
                                    nodal_a,
                                    nodal_b,
                                );
                        }
                        for (pair, weight) in &centroid_pairs {
                            if *weight != 0.0 {
                                v += *weight
                                    * calculus::face_d2_flux_density(
                                        &fb, pair, &defo_a, &defo_b, nodal_a, nodal_b,
                                    );
                            }
                        }
                        builder.add(dof_a, dof_b, v * fb.area);
                    }
                }
            }
            // Distance-constraint curvature, local to each constrained vertex.
            for (ci, &(vert, ob)) in constraints.distance.iter().enumerate() {
                let lambda = multipliers.distance[ci];
                if lambda == 0.0 {
                    continue;
                }
                let hess = obstacles[ob as usize].hess(mesh.position(vert as usize))?;
                let dofs: Vec<usize> = basis.dofs_of_vertex(vert as usize).collect();
                for (i, &di) in dofs.iter().enumerate() {
                    for &dj in &dofs[i..] {
                        let v = lambda
                            * basis.dirs[di].1.dot(hess.apply(basis.dirs[dj].1));
                        builder.add(di, dj, v);
                    }
                }
            }
        }
    }

    // Constraint columns (first-order in both modes).
    let cols = constraint_columns(mesh, params, obstacles, constraints, basis)?;
    for (dof, &v) in cols.volume.iter().enumerate() {
        if v != 0.0 {
            builder.add(dof, vol_row, v);
        }
    }
    for (ci, entries) in cols.distance.iter().enumerate() {
        for &(dof, v) in entries {
            builder.add(dof, dist_row(ci), v);
        }
    }
    for (ci, col) in cols.centroid.iter().enumerate() {
        for (dof, &v) in col.iter().enumerate() {
            if v != 0.0 {
                builder.add(dof, cent_row(ci), v);
            }
        }
    }

    // Right-hand side: -(grad L; constraint values).
    let mut rhs = energy_gradient(mesh, params, basis);
    for (dof, v) in cols.volume.iter().enumerate() {
        rhs[dof] += multipliers.volume * v;
    }
    for (ci, entries) in cols.distance.iter().enumerate() {
        for &(dof, v) in entries {
            rhs[dof] += multipliers.distance[ci] * v;
        }
    }
    for (ci, col) in cols.centroid.iter().enumerate() {
        for (dof, v) in col.iter().enumerate() {
            rhs[dof] += multipliers.centroid[ci] * v;
        }
    }
    rhs.extend(constraint_values(mesh, params, obstacles, constraints)?);
    let residual_norm = norm2(&rhs);
    for v in &mut rhs {
        *v = -*v;
    }

    let mut dense_cols = vec![vol_row];
    dense_cols.extend((0..constraints.centroid_axes.len()).map(cent_row));

    Ok(KktSystem {
        matrix: builder.build(),
        rhs,
        n_shape: ns,
        dense_cols,
        residual_norm,
    })
}

/// Outer-iteration phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Smooth,
    Newton,
}

/// One history row per outer iteration.
#[derive(Debug, Clone, Copy)]
pub struct HistoryRow {
    pub iter: usize,
    pub phase: Phase,
    pub energy: f64,
    pub residual: f64,
    pub volume_err: f64,
    pub dist_err: f64,
}

/// Remeshing directive between the smoothing and Newton phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RemeshTarget {
    /// Keep the mesh as is.
    None,
    /// Isotropic remesh towards a triangle count.
    Cells(usize),
    /// Isotropic remesh towards an edge length.
    EdgeLength(f64),
}

/// Outer-solver configuration.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// H^1 smoothing weight of the Sobolev phase.
    pub gamma: f64,
    /// Number of smoothing steps before the Newton phase.
    pub n_smooth_steps: usize,
    /// Residual l2 target of the Newton phase.
    pub newton_tol: f64,
    /// Total outer-iteration budget (both phases).
    pub max_iters: usize,
    /// Cap on a Newton-phase vertex displacement, as a fraction of the local
    /// minimum incident edge length (the whole step is scaled down).
    pub step_limit_fraction: f64,
    pub remesh: RemeshTarget,
    /// Active volume-centroid constraint axes with targets.
    pub centroid_axes: Vec<usize>,
    pub centroid_targets: Vec<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gamma: 1.0,
            n_smooth_steps: 5,
            newton_tol: 1e-8,
            max_iters: 60,
            step_limit_fraction: 0.4,
            remesh: RemeshTarget::None,
            centroid_axes: Vec::new(),
            centroid_targets: Vec::new(),
        }
    }
}

/// Statistics of one accepted step.
#[derive(Debug, Clone, Copy)]
pub struct StepStats {
    pub residual_before: ResidualInfo,
    /// Final scale applied to the KKT direction.
    pub scale: f64,
    pub max_displacement: f64,
    pub solve: SolveStats,
}

/// Solver state: mesh, multipliers and iteration history.
pub struct Solver<'a> {
    pub mesh: ShellMesh,
    pub params: EnergyParams,
    pub obstacles: &'a [ObstacleField],
    pub constraints: Constraints,
    pub multipliers: Multipliers,
    pub config: SolverConfig,
    pub history: Vec<HistoryRow>,
    iter: usize,
}

/// Outcome of a full run.
#[derive(Debug, Clone, Copy)]
pub struct RunSummary {
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
}

impl<'a> Solver<'a> {
    pub fn new(
        mesh: ShellMesh,
        params: EnergyParams,
        obstacles: &'a [ObstacleField],
        config: SolverConfig,
    ) -> Result<Self> {
        if params.betas.len() != obstacles.len() {
            return Err(Error::InvalidParameter(format!(
                "{} adhesion coefficients for {} obstacles",
                params.betas.len(),
                obstacles.len()
            )));
        }
        if config.centroid_axes.len() != config.centroid_targets.len() {
            return Err(Error::InvalidParameter(
                "centroid axes and targets differ in length".into(),
            ));
        }
        let constraints =
            Constraints::build(&mesh, &config.centroid_axes, &config.centroid_targets);
        let multipliers = Multipliers::zeros(&constraints);
        Ok(Solver {
            mesh,
            params,
            obstacles,
            constraints,
            multipliers,
            config,
            history: Vec::new(),
            iter: 0,
        })
    }

    fn kernel_hint(&self) -> KernelHint {
        let all_planes = self
            .obstacles
            .iter()
            .all(|o| matches!(o, ObstacleField::Plane(_)));
        if all_planes && self.constraints.centroid_axes.is_empty() {
            KernelHint::Translation
        } else {
            KernelHint::Tangential
        }
    }

    fn residual_info(&self, rhs_norm: f64) -> Result<ResidualInfo> {
        let volume = self.mesh.enclosed_volume()?;
        let mut dist_err = 0.0f64;
        for &(v, ob) in &self.constraints.distance {
            dist_err = dist_err.max(
                self.obstacles[ob as usize]
                    .dist(self.mesh.position(v as usize))?
                    .abs(),
            );
        }
        Ok(ResidualInfo {
            norm: rhs_norm,
            energy: self.mesh.interface_energy(&self.params)?,
            volume_err: (volume - self.params.target_volume).abs()
                / self.params.target_volume,
            dist_err,
        })
    }

    /// Residual summary in the basis of the given phase.
    pub fn residual(&self, phase: Phase) -> Result<ResidualInfo> {
        let basis = match phase {
            Phase::Smooth => MotionBasis::full(&self.mesh),
            Phase::Newton => MotionBasis::reduced(&self.mesh)?,
        };
        let r = residual_vector(
            &self.mesh,
            &self.params,
            self.obstacles,
            &self.constraints,
            &self.multipliers,
            &basis,
        )?;
        self.residual_info(norm2(&r))
    }

    /// Apply a solved KKT direction with step limiting and inversion halving.
    fn apply_step(
        &mut self,
        basis: &MotionBasis,
        solution: &[f64],
        limit_fraction: Option<f64>,
    ) -> Result<(f64, f64)> {
        let nv = self.mesh.vertex_count();
        let ns = basis.dof_count();
        let field = basis.prolong(&solution[..ns], nv);

        let mut scale = 1.0f64;
        if let Some(frac) = limit_fraction {
            let min_edges = self.mesh.min_incident_edge_lengths();
            for v in 0..nv {
                let d = field[v].norm();
                if d > 0.0 {
                    scale = scale.min(frac * min_edges[v] / d);
                }
            }
            scale = scale.min(1.0);
        }

        let old_normals: Vec<Vec3> =
            (0..self.mesh.face_count()).map(|f| self.mesh.face_normal(f)).collect();
        for attempt in 0..=10 {
            if attempt == 10 {
                return Err(Error::StepFailed(
                    "vertex update still inverts triangles after 10 halvings".into(),
                ));
            }
            match self.mesh.displaced(&field, scale) {
                Ok(moved) => {
                    let inverted = (0..moved.face_count())
                        .any(|f| moved.face_normal(f).dot(old_normals[f]) <= 0.0);
                    if !inverted {
                        self.mesh = moved;
                        break;
                    }
                }
                Err(Error::DegenerateGeometry(_)) => {}
                Err(e) => return Err(e),
            }
            scale *= 0.5;
        }

        // Multiplier updates share the step scale.
        let nd = self.constraints.distance.len();
        for (ci, l) in self.multipliers.distance.iter_mut().enumerate() {
            *l += scale * solution[ns + ci];
        }
        self.multipliers.volume += scale * solution[ns + nd];
        for (ci, l) in self.multipliers.centroid.iter_mut().enumerate() {
            *l += scale * solution[ns + nd + 1 + ci];
        }

        let max_disp = field.max_norm() * scale;
        Ok((scale, max_disp))
    }

    /// One H^1-smoothed step over full nodal fields (vertices may slide).
    pub fn sobolev_step(&mut self) -> Result<StepStats> {
        let basis = MotionBasis::full(&self.mesh);
        let system = assemble_kkt(
            &self.mesh,
            &self.params,
            self.obstacles,
            &self.constraints,
            &self.multipliers,
            &basis,
            HessianMode::Sobolev {
                gamma: self.config.gamma,
            },
        )?;
        let residual_before = self.residual_info(system.residual_norm)?;
        let (solution, solve) = kkt::solve_symmetric(
            &system.matrix,
            &system.rhs,
            system.n_shape,
            &system.dense_cols,
            self.kernel_hint(),
        )?;
        let (scale, max_displacement) = self.apply_step(&basis, &solution, None)?;
        Ok(StepStats {
            residual_before,
            scale,
            max_displacement,
            solve,
        })
    }

    /// One exact-Hessian Newton step on the reduced motion basis.
    pub fn newton_step(&mut self) -> Result<StepStats> {
        let basis = MotionBasis::reduced(&self.mesh)?;
        let system = assemble_kkt(
            &self.mesh,
            &self.params,
            self.obstacles,
            &self.constraints,
            &self.multipliers,
            &basis,
            HessianMode::Exact,
        )?;
        let residual_before = self.residual_info(system.residual_norm)?;
        let (solution, solve) = kkt::solve_symmetric(
            &system.matrix,
            &system.rhs,
            system.n_shape,
            &system.dense_cols,
            self.kernel_hint(),
        )?;
        let (scale, max_displacement) = self.apply_step(
            &basis,
            &solution,
            Some(self.config.step_limit_fraction),
        )?;
        Ok(StepStats {
            residual_before,
            scale,
            max_displacement,
            solve,
        })
    }

    fn push_history(&mut self, phase: Phase, info: ResidualInfo) {
        self.history.push(HistoryRow {
            iter: self.iter,
            phase,
            energy: info.energy,
            residual: info.norm,
            volume_err: info.volume_err,
            dist_err: info.dist_err,
        });
    }

    fn converged(&self, info: &ResidualInfo) -> bool {
        info.norm <= self.config.newton_tol
            && info.volume_err <= 1e-8
            && info.dist_err <= 1e-8 * self.mesh.bounding_box_diagonal()
    }

    /// Remesh towards the configured target, rebuild constraints and reset
    /// all multipliers (vertex identity is lost across a remesh).
    pub fn remesh_and_reset(&mut self) -> Result<()> {
        let target = match self.config.remesh {
            RemeshTarget::None => return Ok(()),
            RemeshTarget::EdgeLength(l) => l,
            RemeshTarget::Cells(cells) => {
                crate::remesh::edge_length_for_cell_count(&self.mesh, cells)
            }
        };
        let params = crate::remesh::RemeshParams {
            target_edge_length: target,
            ..Default::default()
        };
        self.mesh = crate::remesh::remesh(&self.mesh, &params, self.obstacles)?;
        self.constraints = Constraints::build(
            &self.mesh,
            &self.config.centroid_axes,
            &self.config.centroid_targets,
        );
        self.multipliers = Multipliers::zeros(&self.constraints);
        Ok(())
    }

    /// Full two-phase drive: smoothing steps, remesh, Newton to tolerance.
    pub fn run(&mut self) -> Result<RunSummary> {
        for _ in 0..self.config.n_smooth_steps {
            if self.iter >= self.config.max_iters {
                break;
            }
            let stats = self.sobolev_step()?;
            self.push_history(Phase::Smooth, stats.residual_before);
            self.iter += 1;
        }
        self.remesh_and_reset()?;

        let mut fallbacks = 0usize;
        loop {
            let info = self.residual(Phase::Newton)?;
            self.push_history(Phase::Newton, info);
            if self.converged(&info) {
                return Ok(RunSummary {
                    converged: true,
                    iterations: self.iter,
                    final_residual: info.norm,
                });
            }
            if self.iter >= self.config.max_iters {
                return Err(Error::NonConvergence {
                    residual: info.norm,
                    iterations: self.iter,
                });
            }
            match self.newton_step() {
                Ok(_) => {
                    fallbacks = 0;
                }
                Err(Error::SingularSystem { hint, bad_pivots }) => {
                    // A smoothing step usually moves the state off the
                    // degenerate configuration; give up if it keeps recurring.
                    fallbacks += 1;
                    if fallbacks > 3 {
                        return Err(Error::SingularSystem { hint, bad_pivots });
                    }
                    self.sobolev_step()?;
                }
                Err(e) => return Err(e),
            }
            self.iter += 1;
        }
    }
}
