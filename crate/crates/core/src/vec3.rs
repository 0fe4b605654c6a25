//! Minimal 3D vector and matrix types used throughout the crate.
//!
//! All geometric quantities are dimensionless `f64`. The types are plain
//! value types; no SIMD, no generics.

use crate::mathx;
use core::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, Neg, Sub, SubAssign};

/// A point or vector in 3-space.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub const fn vec3(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3 { x, y, z }
}

impl Vec3 {
    pub const ZERO: Vec3 = vec3(0.0, 0.0, 0.0);

    pub fn axis(i: usize) -> Vec3 {
        let mut v = Vec3::ZERO;
        v[i] = 1.0;
        v
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        vec3(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        mathx::sqrt(self.norm_sq())
    }

    /// Unit vector in the same direction; `None` when the norm is below `eps`.
    pub fn normalized(self, eps: f64) -> Option<Vec3> {
        let n = self.norm();
        if n <= eps {
            None
        } else {
            Some(self / n)
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Outer product `self * o^T`.
    pub fn outer(self, o: Vec3) -> Mat3 {
        Mat3::from_rows(o * self.x, o * self.y, o * self.z)
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index out of range: {i}"),
        }
    }
}

impl IndexMut<usize> for Vec3 {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        match i {
            0 => &mut self.x,
            1 => &mut self.y,
            2 => &mut self.z,
            _ => panic!("Vec3 index out of range: {i}"),
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        vec3(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        vec3(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        vec3(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        vec3(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    #[inline]
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn div(self, s: f64) -> Vec3 {
        vec3(self.x / s, self.y / s, self.z / s)
    }
}

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Mat3 {
    pub rows: [Vec3; 3],
}

impl Mat3 {
    pub const ZERO: Mat3 = Mat3 {
        rows: [Vec3::ZERO; 3],
    };

    pub fn identity() -> Mat3 {
        Mat3::from_rows(vec3(1.0, 0.0, 0.0), vec3(0.0, 1.0, 0.0), vec3(0.0, 0.0, 1.0))
    }

    pub const fn from_rows(r0: Vec3, r1: Vec3, r2: Vec3) -> Mat3 {
        Mat3 { rows: [r0, r1, r2] }
    }

    pub fn transpose(self) -> Mat3 {
        Mat3::from_rows(
            vec3(self.rows[0].x, self.rows[1].x, self.rows[2].x),
            vec3(self.rows[0].y, self.rows[1].y, self.rows[2].y),
            vec3(self.rows[0].z, self.rows[1].z, self.rows[2].z),
        )
    }

    pub fn trace(self) -> f64 {
        self.rows[0].x + self.rows[1].y + self.rows[2].z
    }

    /// Matrix-vector product.
    #[inline]
    pub fn apply(self, v: Vec3) -> Vec3 {
        vec3(self.rows[0].dot(v), self.rows[1].dot(v), self.rows[2].dot(v))
    }

    /// Matrix-matrix product `self * o`.
    pub fn mul_mat(self, o: Mat3) -> Mat3 {
        let ot = o.transpose();
        Mat3::from_rows(
            vec3(
                self.rows[0].dot(ot.rows[0]),
                self.rows[0].dot(ot.rows[1]),
                self.rows[0].dot(ot.rows[2]),
            ),
            vec3(
                self.rows[1].dot(ot.rows[0]),
                self.rows[1].dot(ot.rows[1]),
                self.rows[1].dot(ot.rows[2]),
            ),
            vec3(
                self.rows[2].dot(ot.rows[0]),
                self.rows[2].dot(ot.rows[1]),
                self.rows[2].dot(ot.rows[2]),
            ),
        )
    }

    /// trace(self * o), without forming the product.
    pub fn trace_mul(self, o: Mat3) -> f64 {
        let ot = o.transpose();
        self.rows[0].dot(ot.rows[0]) + self.rows[1].dot(ot.rows[1]) + self.rows[2].dot(ot.rows[2])
    }

    pub fn scale(self, s: f64) -> Mat3 {
        Mat3::from_rows(self.rows[0] * s, self.rows[1] * s, self.rows[2] * s)
    }

    pub fn add_mat(self, o: Mat3) -> Mat3 {
        Mat3::from_rows(
            self.rows[0] + o.rows[0],
            self.rows[1] + o.rows[1],
            self.rows[2] + o.rows[2],
        )
    }

    pub fn sub_mat(self, o: Mat3) -> Mat3 {
        Mat3::from_rows(
            self.rows[0] - o.rows[0],
            self.rows[1] - o.rows[1],
            self.rows[2] - o.rows[2],
        )
    }

    pub fn max_abs(self) -> f64 {
        self.rows[0]
            .max_abs()
            .max(self.rows[1].max_abs())
            .max(self.rows[2].max_abs())
    }
}
