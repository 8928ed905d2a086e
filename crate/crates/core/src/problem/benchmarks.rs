//! Built-in benchmark problems.
//!
//! The manufactured sources evaluate the strong operator on the closed-form
//! solutions:
//! `f = -(div A)·∇u - A:∇²u + (div b) u + b·∇u + c u`.

use super::{Mat2, Problem};
use crate::error::{Error, Result};
use crate::mesh::{Domain, Point};

pub const PROBLEM_KEYS: [&str; 3] = ["smooth", "lshape", "convection"];

pub fn problem_by_key(key: &str) -> Result<Problem> {
    match key {
        "smooth" => Ok(smooth_problem()),
        "lshape" => Ok(lshape_problem()),
        "convection" => Ok(convection_problem()),
        other => Err(Error::InvalidParameter(format!(
            "unknown problem '{other}' (expected one of {})",
            PROBLEM_KEYS.join(", ")
        ))),
    }
}

fn strong_operator(
    a: Mat2,
    div_a: Point,
    b: Point,
    div_b: f64,
    c: f64,
    u: f64,
    grad: Point,
    hess: Mat2,
) -> f64 {
    let a_hess =
        a[0][0] * hess[0][0] + a[0][1] * hess[0][1] + a[1][0] * hess[1][0] + a[1][1] * hess[1][1];
    -(div_a[0] * grad[0] + div_a[1] * grad[1]) - a_hess
        + div_b * u
        + b[0] * grad[0]
        + b[1] * grad[1]
        + c * u
}

mod smooth {
    use super::*;

    pub fn u(x: Point) -> f64 {
        let s = x[0] * x[0] + x[1] * x[1];
        (1.0 - 10.0 * s) * (-5.0 * s).exp()
    }

    /// `u = φ(s)` with `s = |x|^2`, `φ'(s) = e^{-5s}(50s - 15)`.
    pub fn grad(x: Point) -> Point {
        let s = x[0] * x[0] + x[1] * x[1];
        let g = (-5.0 * s).exp() * (50.0 * s - 15.0);
        [2.0 * g * x[0], 2.0 * g * x[1]]
    }

    /// `∇²u = 2φ'(s) I + 4φ''(s) x xᵀ`, `φ''(s) = e^{-5s}(125 - 250s)`.
    pub fn hess(x: Point) -> Mat2 {
        let s = x[0] * x[0] + x[1] * x[1];
        let e = (-5.0 * s).exp();
        let d1 = e * (50.0 * s - 15.0);
        let d2 = e * (125.0 - 250.0 * s);
        [
            [2.0 * d1 + 4.0 * d2 * x[0] * x[0], 4.0 * d2 * x[0] * x[1]],
            [4.0 * d2 * x[0] * x[1], 2.0 * d1 + 4.0 * d2 * x[1] * x[1]],
        ]
    }

    pub fn a(x: Point) -> Mat2 {
        let off = 9.0 * x[0] * x[1];
        [[10.0 + x[0].cos(), off], [off, 10.0 + x[1].sin()]]
    }

    pub fn div_a(x: Point) -> Point {
        [-x[0].sin() + 9.0 * x[0], 9.0 * x[1] + x[1].cos()]
    }

    pub fn b(x: Point) -> Point {
        [x[0].sin(), x[1].cos()]
    }

    pub fn div_b(x: Point) -> f64 {
        x[0].cos() - x[1].sin()
    }

    pub fn f(x: Point) -> f64 {
        strong_operator(a(x), div_a(x), b(x), div_b(x), 1.0, u(x), grad(x), hess(x))
    }
}

/// Smooth solution `u = (1 - 10|x|^2) exp(-5|x|^2)` on `(-1, 1)^2` with
/// `A = [[10 + cos x1, 9 x1 x2], [9 x1 x2, 10 + sin x2]]`, `b = (sin x1, cos x2)`, `c = 1`.
pub fn smooth_problem() -> Problem {
    Problem::new("smooth", Domain::UnitSquareShifted)
        .with_diffusion(smooth::a, Some(std::sync::Arc::new(smooth::div_a)))
        .with_convection(smooth::b, smooth::div_b)
        .with_reaction(|_| 1.0)
        .with_source(smooth::f)
        .with_exact(smooth::u, smooth::grad)
}

mod lshape {
    use super::*;
    use std::f64::consts::PI;

    const ALPHA: f64 = 2.0 / 3.0;

    /// Polar coordinates with the angle in `[0, 2π)`.
    pub fn polar(x: Point) -> (f64, f64) {
        let r = x[0].hypot(x[1]);
        let mut phi = x[1].atan2(x[0]);
        if phi < 0.0 {
            phi += 2.0 * PI;
        }
        (r, phi)
    }

    pub fn u(x: Point) -> f64 {
        let (r, phi) = polar(x);
        r.powf(ALPHA) * (ALPHA * phi).sin()
    }

    /// `u = Im z^α`, so `∇u = α r^{α-1} (sin((α-1)φ), cos((α-1)φ))`.
    pub fn grad(x: Point) -> Point {
        let (r, phi) = polar(x);
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let k = ALPHA * r.powf(ALPHA - 1.0);
        [
            k * ((ALPHA - 1.0) * phi).sin(),
            k * ((ALPHA - 1.0) * phi).cos(),
        ]
    }

    /// Hessian of the harmonic function `Im z^α`.
    pub fn hess(x: Point) -> Mat2 {
        let (r, phi) = polar(x);
        let k = ALPHA * (ALPHA - 1.0) * r.powf(ALPHA - 2.0);
        let (s, c) = ((ALPHA - 2.0) * phi).sin_cos();
        [[k * s, k * c], [k * c, -k * s]]
    }

    pub fn a(x: Point) -> Mat2 {
        let s = x[0] * x[0] + x[1] * x[1];
        [[5.0 + s * x[0].cos(), s * s], [s * s, 5.0 + s * x[1].sin()]]
    }

    pub fn div_a(x: Point) -> Point {
        let s = x[0] * x[0] + x[1] * x[1];
        [
            2.0 * x[0] * x[0].cos() - s * x[0].sin() + 4.0 * s * x[1],
            4.0 * s * x[0] + 2.0 * x[1] * x[1].sin() + s * x[1].cos(),
        ]
    }

    pub fn f(x: Point) -> f64 {
        strong_operator(a(x), div_a(x), [1.0, 1.0], 0.0, 1.0, u(x), grad(x), hess(x))
    }
}

/// Corner singularity `u = r^{2/3} sin(2φ/3)` on the L-shaped domain with
/// `A = [[5 + |x|^2 cos x1, |x|^4], [|x|^4, 5 + |x|^2 sin x2]]`, `b = (1, 1)`, `c = 1`.
pub fn lshape_problem() -> Problem {
    Problem::new("lshape", Domain::LShape)
        .with_diffusion(lshape::a, Some(std::sync::Arc::new(lshape::div_a)))
        .with_convection(|_| [1.0, 1.0], |_| 0.0)
        .with_reaction(|_| 1.0)
        .with_source(lshape::f)
        .with_exact(lshape::u, lshape::grad)
}

/// Boundary pulse: 1 on `0.2005 <= x1 <= 0.4995`, linear ramps down to 0 at
/// `x1 = 0.2` and `x1 = 0.5` on the bottom edge, 0 elsewhere on the boundary.
pub fn pulse(x: Point) -> f64 {
    if x[1].abs() > 1e-12 {
        return 0.0;
    }
    let x1 = x[0];
    if (0.2005..=0.4995).contains(&x1) {
        1.0
    } else if (0.2..0.2005).contains(&x1) {
        (x1 - 0.2) / 0.0005
    } else if x1 > 0.4995 && x1 <= 0.5 {
        (0.5 - x1) / 0.0005
    } else {
        0.0
    }
}

/// Rotating transport of a boundary pulse on `(0, 1)^2`: `A = 10^{-3} I`,
/// `b = (x2, 1/2 - x1)`, `c = f = 0`. No exact solution.
pub fn convection_problem() -> Problem {
    Problem::new("convection", Domain::UnitSquare)
        .with_diffusion(
            |_| [[1e-3, 0.0], [0.0, 1e-3]],
            Some(std::sync::Arc::new(|_| [0.0, 0.0])),
        )
        .with_convection(|x| [x[1], 0.5 - x[0]], |_| 0.0)
        .with_dirichlet(pulse)
}
