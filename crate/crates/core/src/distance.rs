//! Signed-distance descriptions of the solid obstacles, with first and
//! second spatial derivatives.
//!
//! Convention: negative inside the solid. For the analytic fields the
//! gradient has unit norm away from the singular set; grid-backed fields are
//! interpolations and only approximately eikonal (construction reports the
//! deviation so callers can warn).

use crate::mathx;
use crate::vec3::{vec3, Mat3, Vec3};
use crate::{Error, Result};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

/// Signed distance field of one obstacle.
#[derive(Debug, Clone)]
pub enum ObstacleField {
    Sphere(SphereField),
    Plane(PlaneField),
    Grid(GridField),
}

impl ObstacleField {
    /// Analytic sphere: `dist(x) = |x - c| - R`.
    pub fn sphere(center: Vec3, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sphere radius must be > 0, got {radius}"
            )));
        }
        Ok(ObstacleField::Sphere(SphereField { center, radius }))
    }

    /// Affine half-space: `dist(x) = <normal, x> + offset`, solid on the
    /// negative side.
    pub fn plane(offset: f64, normal: Vec3) -> Result<Self> {
        let normal = normal
            .normalized(1e-12)
            .ok_or_else(|| Error::InvalidParameter("plane normal is zero".into()))?;
        Ok(ObstacleField::Plane(PlaneField { offset, normal }))
    }

    /// Sampled field on a regular grid; see [`GridField::new`].
    pub fn grid(grid: GridField) -> Self {
        ObstacleField::Grid(grid)
    }

    pub fn dist(&self, x: Vec3) -> Result<f64> {
        match self {
            ObstacleField::Sphere(s) => s.dist(x),
            ObstacleField::Plane(p) => Ok(p.dist(x)),
            ObstacleField::Grid(g) => g.sample(&g.values, x),
        }
    }

    pub fn grad(&self, x: Vec3) -> Result<Vec3> {
        match self {
            ObstacleField::Sphere(s) => s.grad(x),
            ObstacleField::Plane(p) => Ok(p.normal),
            ObstacleField::Grid(g) => g.grad(x),
        }
    }

    pub fn hess(&self, x: Vec3) -> Result<Mat3> {
        match self {
            ObstacleField::Sphere(s) => s.hess(x),
            ObstacleField::Plane(_) => Ok(Mat3::ZERO),
            ObstacleField::Grid(g) => g.hess(x),
        }
    }

    /// Material derivative of the distance under transport: `<grad, v>`.
    pub fn d_dist(&self, x: Vec3, v: Vec3) -> Result<f64> {
        Ok(self.grad(x)?.dot(v))
    }

    /// Second material derivative: `v^T H w`.
    pub fn d2_dist(&self, x: Vec3, v: Vec3, w: Vec3) -> Result<f64> {
        Ok(self.hess(x)?.apply(w).dot(v))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ObstacleField::Sphere(_) => "sphere",
            ObstacleField::Plane(_) => "plane",
            ObstacleField::Grid(_) => "levelset",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SphereField {
    pub center: Vec3,
    pub radius: f64,
}

impl SphereField {
    fn offset(&self, x: Vec3) -> Result<(Vec3, f64)> {
        let d = x - self.center;
        let r = d.norm();
        if r <= 1e-12 * self.radius {
            return Err(Error::SingularPoint(x));
        }
        Ok((d, r))
    }

    pub fn dist(&self, x: Vec3) -> Result<f64> {
        let (_, r) = self.offset(x)?;
        Ok(r - self.radius)
    }

    pub fn grad(&self, x: Vec3) -> Result<Vec3> {
        let (d, r) = self.offset(x)?;
        Ok(d / r)
    }

    pub fn hess(&self, x: Vec3) -> Result<Mat3> {
        let (d, r) = self.offset(x)?;
        let u = d / r;
        Ok(Mat3::identity().sub_mat(u.outer(u)).scale(1.0 / r))
    }
}

#[derive(Debug, Clone)]
pub struct PlaneField {
    pub offset: f64,
    pub normal: Vec3,
}

impl PlaneField {
    pub fn dist(&self, x: Vec3) -> f64 {
        self.normal.dot(x) + self.offset
    }
}

/// Regular-grid sampled signed distance with precomputed derivative grids.
///
/// Distance, gradient and Hessian grids are each interpolated trilinearly;
/// the gradient and Hessian samples come from second-order central
/// differences of the level (differentiate-then-interpolate). Queries outside
/// the node-aligned domain are errors, never extrapolations.
#[derive(Debug, Clone)]
pub struct GridField {
    dims: [usize; 3],
    origin: Vec3,
    spacing: f64,
    values: Vec<f64>,
    grads: [Vec<f64>; 3],
    // Symmetric Hessian components in order xx, yy, zz, xy, xz, yz.
    hessians: [Vec<f64>; 6],
}

impl GridField {
    /// Build from `dims[0] * dims[1] * dims[2]` samples in x-fastest order.
    pub fn new(dims: [usize; 3], origin: Vec3, spacing: f64, values: Vec<f64>) -> Result<Self> {
        if dims.iter().any(|&d| d < 4) {
            return Err(Error::InvalidParameter(
                "level-set grid needs at least 4 nodes per axis".into(),
            ));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid spacing must be > 0, got {spacing}"
            )));
        }
        if values.len() != dims[0] * dims[1] * dims[2] {
            return Err(Error::InvalidParameter(format!(
                "expected {} grid samples, got {}",
                dims[0] * dims[1] * dims[2],
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("grid contains non-finite values".into()));
        }

        let idx = |i: usize, j: usize, k: usize| i + dims[0] * (j + dims[1] * k);
        // One-sided at the boundary, central inside.
        let diff = |values: &[f64], axis: usize, i: usize, j: usize, k: usize| -> f64 {
            let pos = [i, j, k];
            let n = dims[axis];
            let at = |p: usize| {
                let mut q = pos;
                q[axis] = p;
                values[idx(q[0], q[1], q[2])]
            };
            let p = pos[axis];
            if p == 0 {
                (at(1) - at(0)) / spacing
            } else if p == n - 1 {
                (at(n - 1) - at(n - 2)) / spacing
            } else {
                (at(p + 1) - at(p - 1)) / (2.0 * spacing)
            }
        };

        let total = values.len();
        let mut grads: [Vec<f64>; 3] = [
            Vec::with_capacity(total),
            Vec::with_capacity(total),
            Vec::with_capacity(total),
        ];
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    for axis in 0..3 {
                        grads[axis].push(diff(&values, axis, i, j, k));
                    }
                }
            }
        }

        let mut hessians: [Vec<f64>; 6] = Default::default();
        for h in &mut hessians {
            h.reserve(total);
        }
        // (axis differentiated, gradient component) pairs for xx, yy, zz, xy, xz, yz.
        let pairs = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    for (slot, (axis, comp)) in pairs.iter().enumerate() {
                        hessians[slot].push(diff(&grads[*comp], *axis, i, j, k));
                    }
                }
            }
        }

        Ok(GridField {
            dims,
            origin,
            spacing,
            values,
            grads,
            hessians,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Trilinear interpolation of one sample grid at `x`.
    fn sample(&self, samples: &[f64], x: Vec3) -> Result<f64> {
        let mut cell = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for axis in 0..3 {
            let t = (x[axis] - self.origin[axis]) / self.spacing;
            if !(t >= 0.0 && t <= (self.dims[axis] - 1) as f64) {
                return Err(Error::OutOfDomain(x));
            }
            let cap = self.dims[axis] - 2;
            let c = (mathx::floor(t) as usize).min(cap);
            cell[axis] = c;
            frac[axis] = t - c as f64;
        }
        let idx = |i: usize, j: usize, k: usize| i + self.dims[0] * (j + self.dims[1] * k);
        let mut acc = 0.0;
        for dz in 0..2 {
            for dy in 0..2 {
                for dx in 0..2 {
                    let w = (if dx == 0 { 1.0 - frac[0] } else { frac[0] })
                        * (if dy == 0 { 1.0 - frac[1] } else { frac[1] })
                        * (if dz == 0 { 1.0 - frac[2] } else { frac[2] });
                    acc += w * samples[idx(cell[0] + dx, cell[1] + dy, cell[2] + dz)];
                }
            }
        }
        Ok(acc)
    }

    pub fn grad(&self, x: Vec3) -> Result<Vec3> {
        Ok(vec3(
            self.sample(&self.grads[0], x)?,
            self.sample(&self.grads[1], x)?,
            self.sample(&self.grads[2], x)?,
        ))
    }

    pub fn hess(&self, x: Vec3) -> Result<Mat3> {
        let xx = self.sample(&self.hessians[0], x)?;
        let yy = self.sample(&self.hessians[1], x)?;
        let zz = self.sample(&self.hessians[2], x)?;
        let xy = self.sample(&self.hessians[3], x)?;
        let xz = self.sample(&self.hessians[4], x)?;
        let yz = self.sample(&self.hessians[5], x)?;
        Ok(Mat3::from_rows(
            vec3(xx, xy, xz),
            vec3(xy, yy, yz),
            vec3(xz, yz, zz),
        ))
    }

    /// Largest deviation of `|grad|` from 1 over interior nodes within three
    /// spacings of the zero level (where constraint queries live). Values
    /// above ~0.1 suggest the input is not an approximate signed distance.
    /// Medial-axis kinks deep inside the solid are expected and ignored.
    pub fn max_eikonal_deviation(&self) -> f64 {
        let idx = |i: usize, j: usize, k: usize| i + self.dims[0] * (j + self.dims[1] * k);
        let band = 3.0 * self.spacing;
        let mut worst = 0.0f64;
        for k in 1..self.dims[2] - 1 {
            for j in 1..self.dims[1] - 1 {
                for i in 1..self.dims[0] - 1 {
                    let p = idx(i, j, k);
                    if self.values[p].abs() > band {
                        continue;
                    }
                    let g = vec3(self.grads[0][p], self.grads[1][p], self.grads[2][p]);
                    worst = worst.max((g.norm() - 1.0).abs());
                }
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::seeded_field;

    #[test]
    fn sphere_field_examples() {
        let f = ObstacleField::sphere(vec3(0.0, 0.0, 2.0), 1.0).unwrap();
        assert!((f.dist(Vec3::ZERO).unwrap() - 1.0).abs() < 1e-15);
        assert!((f.grad(Vec3::ZERO).unwrap() - vec3(0.0, 0.0, -1.0)).norm() < 1e-15);
        // On the surface: zero distance, radial unit gradient.
        let p = vec3(0.0, 1.0, 2.0);
        assert!(f.dist(p).unwrap().abs() < 1e-15);
        assert!((f.grad(p).unwrap() - vec3(0.0, 1.0, 0.0)).norm() < 1e-15);
        // Negative inside.
        assert!(f.dist(vec3(0.0, 0.0, 1.5)).unwrap() < 0.0);
        // Singular at the center.
        assert!(matches!(
            f.dist(vec3(0.0, 0.0, 2.0)),
            Err(Error::SingularPoint(_))
        ));
    }

    #[test]
    fn plane_field_examples() {
        let f = ObstacleField::plane(0.0, vec3(0.0, 0.0, 1.0)).unwrap();
        assert!((f.dist(vec3(0.0, 0.0, 0.5)).unwrap() - 0.5).abs() < 1e-15);
        assert!(f.dist(vec3(3.0, -2.0, -0.25)).unwrap() < 0.0);
        assert_eq!(f.hess(Vec3::ZERO).unwrap(), Mat3::ZERO);
        assert!((f.grad(vec3(9.0, 9.0, 9.0)).unwrap().norm() - 1.0).abs() < 1e-15);
    }

    fn fd_grad(f: &ObstacleField, x: Vec3, h: f64) -> Vec3 {
        let mut g = Vec3::ZERO;
        for i in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            g[i] = (f.dist(xp).unwrap() - f.dist(xm).unwrap()) / (2.0 * h);
        }
        g
    }

    fn fd_hess(f: &ObstacleField, x: Vec3, h: f64) -> Mat3 {
        let mut rows = [Vec3::ZERO; 3];
        for i in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let gp = f.grad(xp).unwrap();
            let gm = f.grad(xm).unwrap();
            for j in 0..3 {
                rows[j][i] = (gp[j] - gm[j]) / (2.0 * h);
            }
        }
        Mat3::from_rows(rows[0], rows[1], rows[2])
    }

    fn sample_points(n: usize, seed: u64) -> Vec<Vec3> {
        seeded_field(n, seed)
            .values
            .iter()
            .map(|v| vec3(0.4 * v.x, 0.4 * v.y, 0.8 + 0.5 * v.z))
            .collect()
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let fields = [
            ObstacleField::sphere(vec3(0.1, -0.2, 2.0), 1.3).unwrap(),
            ObstacleField::plane(0.3, vec3(0.1, 0.2, 1.0)).unwrap(),
        ];
        for f in &fields {
            for &x in &sample_points(100, 7) {
                let g = f.grad(x).unwrap();
                assert!((g.norm() - 1.0).abs() < 1e-12, "eikonal violated");
                assert!((g - fd_grad(f, x, 1e-6)).norm() < 1e-8);
                let h = f.hess(x).unwrap();
                assert!(h.sub_mat(h.transpose()).max_abs() < 1e-14);
                assert!(h.sub_mat(fd_hess(f, x, 1e-5)).max_abs() < 1e-6);
            }
        }
    }

    fn sphere_grid(spacing: f64) -> GridField {
        let sphere = SphereField {
            center: vec3(0.0, 0.0, 0.0),
            radius: 1.0,
        };
        let n = (4.0 / spacing) as usize + 1;
        let origin = vec3(-2.0, -2.0, -2.0);
        let mut values = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let p = origin + vec3(i as f64, j as f64, k as f64) * spacing;
                    values.push(p.norm() - sphere.radius);
                }
            }
        }
        GridField::new([n, n, n], origin, spacing, values).unwrap()
    }

    #[test]
    fn grid_dist_error_scales_with_spacing_squared() {
        // Off-node error of the trilinear interpolant is O(h^2).
        let probe = vec3(0.83, 0.41, 0.37);
        let exact = probe.norm() - 1.0;
        let mut errs = Vec::new();
        for spacing in [0.2, 0.1, 0.05] {
            let g = ObstacleField::grid(sphere_grid(spacing));
            errs.push((g.dist(probe).unwrap() - exact).abs());
        }
        assert!(errs[2] < errs[0]);
        assert!(errs[2] < 0.05 * 0.05, "error {:.3e} not O(h^2)", errs[2]);
    }

    #[test]
    fn grid_reproduces_affine_plane_exactly() {
        let normal = vec3(0.0, 0.0, 1.0);
        let n = 8;
        let spacing = 0.5;
        let origin = vec3(-2.0, -2.0, -2.0);
        let mut values = Vec::new();
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let p = origin + vec3(i as f64, j as f64, k as f64) * spacing;
                    values.push(normal.dot(p) + 0.25);
                }
            }
        }
        let g = ObstacleField::grid(GridField::new([n, n, n], origin, spacing, values).unwrap());
        // Trilinear interpolation reproduces affine functions; interior
        // central differences of an affine level are exact.
        let p = vec3(0.13, -0.4, 0.77);
        assert!((g.dist(p).unwrap() - (p.z + 0.25)).abs() < 1e-13);
        assert!((g.grad(p).unwrap() - normal).norm() < 1e-13);
        assert!(g.hess(p).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn grid_rejects_out_of_domain_queries() {
        let g = ObstacleField::grid(sphere_grid(0.25));
        assert!(matches!(
            g.dist(vec3(5.0, 0.0, 0.0)),
            Err(Error::OutOfDomain(_))
        ));
        assert!(matches!(
            g.grad(vec3(0.0, -9.0, 0.0)),
            Err(Error::OutOfDomain(_))
        ));
    }

    #[test]
    fn grid_eikonal_deviation_reported() {
        let g = sphere_grid(0.1);
        // A sampled true distance field stays close to |grad| = 1 ...
        assert!(g.max_eikonal_deviation() < 0.1);
        // ... while a doubled field does not.
        let doubled: Vec<f64> = g.values().iter().map(|v| 2.0 * v).collect();
        let bad = GridField::new(g.dims(), g.origin(), g.spacing(), doubled).unwrap();
        assert!(bad.max_eikonal_deviation() > 0.5);
    }
}

/// Construction summary a front end can surface to users.
pub fn describe(field: &ObstacleField) -> String {
    match field {
        ObstacleField::Sphere(s) => format!(
            "sphere(center = ({}, {}, {}), radius = {})",
            s.center.x, s.center.y, s.center.z, s.radius
        ),
        ObstacleField::Plane(p) => format!(
            "plane(normal = ({}, {}, {}), offset = {})",
            p.normal.x, p.normal.y, p.normal.z, p.offset
        ),
        ObstacleField::Grid(g) => format!(
            "levelset({}x{}x{}, spacing = {})",
            g.dims[0], g.dims[1], g.dims[2], g.spacing
        ),
    }
}
