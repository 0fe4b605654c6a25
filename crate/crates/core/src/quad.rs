//! Quadrature rules on the reference triangle, in barycentric coordinates.
//!
//! Weights sum to 1; multiply by the physical triangle area. Rules are exact
//! for polynomials up to the stated degree on planar triangles.

/// One quadrature point: barycentric coordinates and weight.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub bary: [f64; 3],
    pub weight: f64,
}

const fn qp(a: f64, b: f64, c: f64, w: f64) -> QuadPoint {
    QuadPoint {
        bary: [a, b, c],
        weight: w,
    }
}

/// Centroid rule, exact for degree 1.
pub const DEGREE_1: &[QuadPoint] = &[qp(
    1.0 / 3.0,
    1.0 / 3.0,
    1.0 / 3.0,
    1.0,
)];

/// Edge-midpoint rule, exact for degree 2.
pub const DEGREE_2: &[QuadPoint] = &[
    qp(0.5, 0.5, 0.0, 1.0 / 3.0),
    qp(0.0, 0.5, 0.5, 1.0 / 3.0),
    qp(0.5, 0.0, 0.5, 1.0 / 3.0),
];

// Dunavant 6-point rule, exact for degree 4 (covers the cubic integrands of
// the gravity functional with positive weights).
const D4_W1: f64 = 0.223_381_589_678_011;
const D4_A1: f64 = 0.108_103_018_168_070;
const D4_B1: f64 = 0.445_948_490_915_965;
const D4_W2: f64 = 0.109_951_743_655_322;
const D4_A2: f64 = 0.816_847_572_980_459;
const D4_B2: f64 = 0.091_576_213_509_771;

/// Six-point rule, exact for degree 4.
pub const DEGREE_4: &[QuadPoint] = &[
    qp(D4_A1, D4_B1, D4_B1, D4_W1),
    qp(D4_B1, D4_A1, D4_B1, D4_W1),
    qp(D4_B1, D4_B1, D4_A1, D4_W1),
    qp(D4_A2, D4_B2, D4_B2, D4_W2),
    qp(D4_B2, D4_A2, D4_B2, D4_W2),
    qp(D4_B2, D4_B2, D4_A2, D4_W2),
];

/// Smallest rule exact for the requested polynomial degree.
pub fn rule(degree: usize) -> &'static [QuadPoint] {
    match degree {
        0 | 1 => DEGREE_1,
        2 => DEGREE_2,
        _ => DEGREE_4,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Exact integrals of x^p y^q over the unit reference triangle:
    // p! q! / (p + q + 2)!
    fn exact_monomial(p: u32, q: u32) -> f64 {
        fn fact(n: u32) -> f64 {
            (1..=n).map(|k| k as f64).product()
        }
        fact(p) * fact(q) / fact(p + q + 2)
    }

    fn integrate(rule: &[QuadPoint], p: u32, q: u32) -> f64 {
        // Reference triangle (0,0), (1,0), (0,1); area 1/2.
        rule.iter()
            .map(|pt| {
                let x = pt.bary[1];
                let y = pt.bary[2];
                pt.weight * x.powi(p as i32) * y.powi(q as i32)
            })
            .sum::<f64>()
            * 0.5
    }

    #[test]
    fn rules_are_exact_to_stated_degree() {
        for (rule, degree) in [(DEGREE_1, 1u32), (DEGREE_2, 2), (DEGREE_4, 4)] {
            for p in 0..=degree {
                for q in 0..=(degree - p) {
                    let got = integrate(rule, p, q);
                    let want = exact_monomial(p, q);
                    assert!(
                        (got - want).abs() < 1e-15,
                        "degree-{degree} rule failed on x^{p} y^{q}: {got} vs {want}"
                    );
                }
            }
        }
    }
}
