//! Independent finite-difference oracles backing every derivative claim.
//!
//! Perturbation fields are attached to vertex indices and are not
//! transported under deformation; the mixed 4-point Hessian stencil therefore
//! realizes the independence assumption `dV[W] = 0` used by the symmetric
//! second-derivative formulas.

use crate::calculus::{self, FluxIntegrand};
use crate::distance::ObstacleField;
use crate::mesh::{RegionFilter, ShellMesh, VertexField};
use crate::vec3::vec3;
use crate::Result;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

/// Default epsilon sweep, log-spaced from 1e-2 down to 1e-7.
pub const EPS_SWEEP: [f64; 11] = [
    1e-2, 3.162e-3, 1e-3, 3.162e-4, 1e-4, 3.162e-5, 1e-5, 3.162e-6, 1e-6, 3.162e-7, 1e-7,
];

/// Central-difference gradient of a mesh functional along a nodal field.
#[derive(Debug, Clone)]
pub struct FdGradient {
    /// Value at the plateau epsilon.
    pub value: f64,
    /// Epsilon at which consecutive sweep values agree best.
    pub eps: f64,
    /// Full `(eps, central difference)` curve.
    pub curve: Vec<(f64, f64)>,
}

/// `(J(mesh + eps V) - J(mesh - eps V)) / (2 eps)` over an epsilon sweep.
pub fn fd_gradient<J>(
    functional: J,
    mesh: &ShellMesh,
    v: &VertexField,
    eps_sweep: &[f64],
) -> Result<FdGradient>
where
    J: Fn(&ShellMesh) -> Result<f64>,
{
    let mut curve = Vec::with_capacity(eps_sweep.len());
    for &eps in eps_sweep {
        let plus = functional(&mesh.displaced(v, eps)?)?;
        let minus = functional(&mesh.displaced(v, -eps)?)?;
        curve.push((eps, (plus - minus) / (2.0 * eps)));
    }
    // Pick the flattest spot of the curve: where successive epsilons agree,
    // truncation and round-off are both small.
    let mut best = 0;
    let mut best_gap = f64::INFINITY;
    for i in 0..curve.len().saturating_sub(1) {
        let gap = (curve[i].1 - curve[i + 1].1).abs();
        if gap < best_gap {
            best_gap = gap;
            best = i;
        }
    }
    Ok(FdGradient {
        value: curve[best].1,
        eps: curve[best].0,
        curve,
    })
}

/// Mixed second-order central difference
/// `[J(+e,+d) - J(+e,-d) - J(-e,+d) + J(-e,-d)] / (4 e d)` with `e = d = eps`
/// and untransported fields.
pub fn fd_hessian<J>(
    functional: J,
    mesh: &ShellMesh,
    v: &VertexField,
    w: &VertexField,
    eps: f64,
) -> Result<f64>
where
    J: Fn(&ShellMesh) -> Result<f64>,
{
    let eval = |sv: f64, sw: f64| -> Result<f64> {
        let moved = mesh.displaced(v, sv)?.displaced(w, sw)?;
        functional(&moved)
    };
    Ok(
        (eval(eps, eps)? - eval(eps, -eps)? - eval(-eps, eps)? + eval(-eps, -eps)?)
            / (4.0 * eps * eps),
    )
}

// Deterministic field synthesis (no RNG dependency): splitmix64.

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn unit(state: &mut u64) -> f64 {
    (splitmix64(state) >> 11) as f64 / (1u64 << 53) as f64
}

/// Reproducible nodal vector field with components in `[-1, 1]`.
pub fn seeded_field(n: usize, seed: u64) -> VertexField {
    let mut state = seed.wrapping_mul(0x5851_F42D_4C95_7F2D).wrapping_add(1);
    VertexField::from_fn(n, |_| {
        vec3(
            2.0 * unit(&mut state) - 1.0,
            2.0 * unit(&mut state) - 1.0,
            2.0 * unit(&mut state) - 1.0,
        )
    })
}

/// One derivative-consistency check result.
#[derive(Debug, Clone)]
pub struct DerivativeCheck {
    pub label: String,
    /// Best relative mismatch between formula and finite differences over the
    /// epsilon sweep.
    pub relative_error: f64,
    pub tolerance: f64,
}

impl DerivativeCheck {
    pub fn passed(&self) -> bool {
        self.relative_error <= self.tolerance
    }
}

fn rel_err(formula: f64, fd: f64) -> f64 {
    (formula - fd).abs() / formula.abs().max(1e-10)
}

fn best_gradient_error<J>(
    functional: J,
    mesh: &ShellMesh,
    v: &VertexField,
    formula: f64,
) -> Result<f64>
where
    J: Fn(&ShellMesh) -> Result<f64>,
{
    let sweep = fd_gradient(functional, mesh, v, &EPS_SWEEP)?;
    Ok(sweep
        .curve
        .iter()
        .map(|&(_, fd)| rel_err(formula, fd))
        .fold(f64::INFINITY, f64::min))
}

fn best_hessian_error<J>(
    functional: J,
    mesh: &ShellMesh,
    v: &VertexField,
    w: &VertexField,
    formula: f64,
) -> Result<f64>
where
    J: Fn(&ShellMesh) -> Result<f64> + Copy,
{
    let mut best = f64::INFINITY;
    for eps in [1e-2, 3.162e-3, 1e-3, 3.162e-4, 1e-4] {
        let fd = fd_hessian(functional, mesh, v, w, eps)?;
        best = best.min(rel_err(formula, fd));
    }
    Ok(best)
}

/// Gradient tolerance of the oracle suite.
pub const GRADIENT_TOL: f64 = 1e-6;
/// Hessian tolerance of the oracle suite.
pub const HESSIAN_TOL: f64 = 1e-4;

/// Run the full first/second-order consistency suite on one mesh.
///
/// Checks every functional the solver assembles (region areas, volume,
/// gravity, centroid moments, and distance-constraint rows for the given
/// obstacles) against central differences for `n_fields` seeded random nodal
/// fields.
pub fn derivative_suite(
    mesh: &ShellMesh,
    obstacles: &[ObstacleField],
    n_fields: usize,
    seed: u64,
) -> Result<Vec<DerivativeCheck>> {
    let mut checks = Vec::new();
    let nv = mesh.vertex_count();
    let gravity = vec3(0.25, -0.6, 0.75).normalized(0.0).unwrap();

    let mut filters = alloc::vec![(RegionFilter::All, String::from("S"))];
    if mesh
        .regions()
        .iter()
        .any(|r| *r == crate::mesh::Region::Air)
    {
        filters.push((RegionFilter::Air, String::from("S_air")));
    }
    let mut solids: Vec<u32> = mesh
        .regions()
        .iter()
        .filter_map(|r| match r {
            crate::mesh::Region::Solid(i) => Some(*i),
            _ => None,
        })
        .collect();
    solids.sort_unstable();
    solids.dedup();
    for i in &solids {
        filters.push((RegionFilter::Solid(*i), format!("S_solid{i}")));
    }

    let fluxes: Vec<(FluxIntegrand, String)> = [
        (FluxIntegrand::Volume, String::from("F")),
        (FluxIntegrand::Gravity(gravity), String::from("G")),
        (FluxIntegrand::Centroid(0), String::from("C_x")),
        (FluxIntegrand::Centroid(1), String::from("C_y")),
        (FluxIntegrand::Centroid(2), String::from("C_z")),
    ]
    .into();

    for k in 0..n_fields {
        let v = seeded_field(nv, seed.wrapping_add(2 * k as u64));
        let w = seeded_field(nv, seed.wrapping_add(2 * k as u64 + 1));

        for (filter, name) in &filters {
            let filter = *filter;
            let grad = calculus::d_area(mesh, filter, &v);
            let err = best_gradient_error(|m| Ok(m.surface_area(filter)), mesh, &v, grad)?;
            checks.push(DerivativeCheck {
                label: format!("d{name}[v{k}]"),
                relative_error: err,
                tolerance: GRADIENT_TOL,
            });

            let hess = calculus::d2_area(mesh, filter, &v, &w);
            let err =
                best_hessian_error(|m| Ok(m.surface_area(filter)), mesh, &v, &w, hess)?;
            checks.push(DerivativeCheck {
                label: format!("d2{name}[v{k}, w{k}]"),
                relative_error: err,
                tolerance: HESSIAN_TOL,
            });
        }

        for (pair, name) in &fluxes {
            let grad = calculus::d_flux(mesh, pair, &v);
            let err = best_gradient_error(|m| Ok(calculus::flux(m, pair)), mesh, &v, grad)?;
            checks.push(DerivativeCheck {
                label: format!("d{name}[v{k}]"),
                relative_error: err,
                tolerance: GRADIENT_TOL,
            });

            let hess = calculus::d2_flux(mesh, pair, &v, &w);
            let err =
                best_hessian_error(|m| Ok(calculus::flux(m, pair)), mesh, &v, &w, hess)?;
            checks.push(DerivativeCheck {
                label: format!("d2{name}[v{k}, w{k}]"),
                relative_error: err,
                tolerance: HESSIAN_TOL,
            });
        }

        for (oi, field) in obstacles.iter().enumerate() {
            // Distance-constraint row of a deterministic sample vertex.
            let vert = (k * 7919 + 13 * oi) % nv;
            let x = mesh.position(vert);
            let grad = field.d_dist(x, v[vert])?;
            let functional =
                |m: &ShellMesh| -> Result<f64> { field.dist(m.position(vert)) };
            let err = best_gradient_error(functional, mesh, &v, grad)?;
            checks.push(DerivativeCheck {
                label: format!("d dist{oi}[v{k}] at vertex {vert}"),
                relative_error: err,
                tolerance: GRADIENT_TOL,
            });

            let hess = field.d2_dist(x, v[vert], w[vert])?;
            let err = best_hessian_error(functional, mesh, &v, &w, hess)?;
            checks.push(DerivativeCheck {
                label: format!("d2 dist{oi}[v{k}, w{k}] at vertex {vert}"),
                relative_error: err,
                tolerance: HESSIAN_TOL,
            });
        }
    }

    Ok(checks)
}
