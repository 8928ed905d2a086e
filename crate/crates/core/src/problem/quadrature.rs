//! Quadrature on the reference triangle `{x, y >= 0, x + y <= 1}` and on `[0, 1]`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mesh::{signed_area, Point};

pub const MAX_DEGREE: usize = 10;
pub const DEFAULT_DEGREE: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule<P> {
    pub points: Vec<P>,
    /// Positive weights summing to the reference measure.
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Points in barycentric coordinates; weights sum to 1/2.
pub type TriangleRule = QuadratureRule<[f64; 3]>;
/// Points in `[0, 1]`; weights sum to 1.
pub type SegmentRule = QuadratureRule<f64>;

impl<P> QuadratureRule<P> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

impl TriangleRule {
    /// Integrates `f` over the triangle with the given (counter-clockwise) corners.
    pub fn integrate(&self, corners: &[Point; 3], mut f: impl FnMut(Point) -> f64) -> f64 {
        let jac = 2.0 * signed_area(&corners[0], &corners[1], &corners[2]);
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(b, w)| w * f(map_barycentric(corners, b)))
            .sum::<f64>()
            * jac
    }
}

impl SegmentRule {
    /// Integrates `f` along the straight segment `a -> b`.
    pub fn integrate(&self, a: Point, b: Point, mut f: impl FnMut(Point) -> f64) -> f64 {
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&s, w)| w * f([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]))
            .sum::<f64>()
            * len
    }
}

/// Quadrature for the dual-segment fluxes of the box method.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FluxRule {
    /// One point at the segment midpoint.
    Midpoint,
    /// The configured segment rule.
    #[default]
    Gauss,
}

impl std::str::FromStr for FluxRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "midpoint" => Ok(FluxRule::Midpoint),
            "gauss" => Ok(FluxRule::Gauss),
            _ => Err(Error::InvalidParameter(format!(
                "unknown flux rule '{s}' (midpoint|gauss)"
            ))),
        }
    }
}

/// Triangle and segment rules of one configured degree.
#[derive(Clone, Debug, PartialEq)]
pub struct Quadrature {
    pub triangle: TriangleRule,
    pub segment: SegmentRule,
    pub flux: FluxRule,
}

impl Quadrature {
    pub fn new(degree: usize) -> Result<Self> {
        Ok(Self {
            triangle: triangle_quadrature(degree)?,
            segment: segment_quadrature(degree)?,
            flux: FluxRule::default(),
        })
    }

    pub fn with_flux(self, flux: FluxRule) -> Self {
        Self { flux, ..self }
    }

    pub fn degree(&self) -> usize {
        self.triangle.degree
    }
}

impl Default for Quadrature {
    fn default() -> Self {
        Self::new(DEFAULT_DEGREE).expect("default degree is supported")
    }
}

pub fn map_barycentric(corners: &[Point; 3], b: &[f64; 3]) -> Point {
    [
        b[0] * corners[0][0] + b[1] * corners[1][0] + b[2] * corners[2][0],
        b[0] * corners[0][1] + b[1] * corners[1][1] + b[2] * corners[2][1],
    ]
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss-Legendre rule on `[0, 1]` exact for polynomials of the given degree.
pub fn segment_quadrature(degree: usize) -> Result<SegmentRule> {
    if !(1..=MAX_DEGREE).contains(&degree) {
        return Err(Error::UnsupportedDegree(degree));
    }
    let n = (degree + 2) / 2;
    let (x, w) = gauss_legendre(n);
    Ok(SegmentRule {
        points: x.iter().map(|x| 0.5 * (x + 1.0)).collect(),
        weights: w.iter().map(|w| 0.5 * w).collect(),
        degree,
    })
}

fn symmetric_orbit(points: &mut Vec<[f64; 3]>, weights: &mut Vec<f64>, a: f64, w: f64) {
    let b = 1.0 - 2.0 * a;
    for p in [[b, a, a], [a, b, a], [a, a, b]] {
        points.push(p);
        weights.push(0.5 * w);
    }
}

/// Triangle rule exact for polynomials of the given total degree.
///
/// Degrees 1, 2, 3-4 and 5 use the centroid rule, the 3-point edge-interior
/// rule, the 6-point and the 7-point symmetric rules; higher degrees use a
/// collapsed Gauss-Legendre product rule. All weights are positive.
pub fn triangle_quadrature(degree: usize) -> Result<TriangleRule> {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match degree {
        1 => {
            points.push([1.0 / 3.0; 3]);
            weights.push(0.5);
        }
        2 => symmetric_orbit(&mut points, &mut weights, 1.0 / 6.0, 1.0 / 3.0),
        3 | 4 => {
            symmetric_orbit(
                &mut points,
                &mut weights,
                0.445_948_490_915_965,
                0.223_381_589_678_011,
            );
            symmetric_orbit(
                &mut points,
                &mut weights,
                0.091_576_213_509_771,
                0.109_951_743_655_322,
            );
        }
        5 => {
            let r = 15f64.sqrt();
            points.push([1.0 / 3.0; 3]);
            weights.push(0.5 * 9.0 / 40.0);
            symmetric_orbit(
                &mut points,
                &mut weights,
                (6.0 - r) / 21.0,
                (155.0 - r) / 1200.0,
            );
            symmetric_orbit(
                &mut points,
                &mut weights,
                (6.0 + r) / 21.0,
                (155.0 + r) / 1200.0,
            );
        }
        6..=MAX_DEGREE => {
            // x = u, y = (1 - u) v with Jacobian (1 - u): degree+1 in u, degree in v.
            let (xu, wu) = gauss_legendre((degree + 3) / 2);
            let (xv, wv) = gauss_legendre((degree + 2) / 2);
            for (u, wu) in xu.iter().zip(&wu) {
                let u = 0.5 * (u + 1.0);
                for (v, wv) in xv.iter().zip(&wv) {
                    let v = 0.5 * (v + 1.0);
                    let (x, y) = (u, (1.0 - u) * v);
                    points.push([1.0 - x - y, x, y]);
                    weights.push(0.25 * wu * wv * (1.0 - u));
                }
            }
        }
        _ => return Err(Error::UnsupportedDegree(degree)),
    }
    Ok(TriangleRule {
        points,
        weights,
        degree,
    })
}
