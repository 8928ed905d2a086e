use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use super::{dist, Mesh, Point, Triangle};
use crate::error::{Error, Result};

/// Computational domains of the built-in benchmarks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    /// `(-1, 1)^2`
    UnitSquareShifted,
    /// `(-1, 1)^2 \ [0, 1] x [-1, 0]`
    LShape,
    /// `(0, 1)^2`
    UnitSquare,
}

impl Domain {
    pub fn area(self) -> f64 {
        match self {
            Domain::UnitSquareShifted => 4.0,
            Domain::LShape => 3.0,
            Domain::UnitSquare => 1.0,
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Domain::UnitSquareShifted => "unit_square_shifted",
            Domain::LShape => "l_shape",
            Domain::UnitSquare => "unit_square",
        }
    }

    /// Closed-domain membership test with a small absolute tolerance.
    pub fn contains(self, p: Point) -> bool {
        let eps = 1e-12;
        let inside = |lo: f64, hi: f64, x: f64| x >= lo - eps && x <= hi + eps;
        match self {
            Domain::UnitSquareShifted => inside(-1.0, 1.0, p[0]) && inside(-1.0, 1.0, p[1]),
            Domain::UnitSquare => inside(0.0, 1.0, p[0]) && inside(0.0, 1.0, p[1]),
            Domain::LShape => {
                inside(-1.0, 1.0, p[0]) && inside(-1.0, 1.0, p[1]) && !(p[0] > eps && p[1] < -eps)
            }
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit_square_shifted" => Ok(Domain::UnitSquareShifted),
            "l_shape" | "lshape" => Ok(Domain::LShape),
            "unit_square" => Ok(Domain::UnitSquare),
            other => Err(Error::InvalidParameter(format!("unknown domain '{other}'"))),
        }
    }
}

/// Vertices addressed by integer lattice coordinates so shared corners are
/// created once.
struct LatticeBuilder {
    origin: Point,
    step: f64,
    ids: HashMap<(i64, i64), usize>,
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
}

impl LatticeBuilder {
    fn new(origin: Point, step: f64) -> Self {
        Self {
            origin,
            step,
            ids: HashMap::new(),
            vertices: Vec::new(),
            triangles: Vec::new(),
        }
    }

    fn vertex(&mut self, i: i64, j: i64) -> usize {
        let (origin, step) = (self.origin, self.step);
        let vertices = &mut self.vertices;
        *self.ids.entry((i, j)).or_insert_with(|| {
            vertices.push([origin[0] + i as f64 * step, origin[1] + j as f64 * step]);
            vertices.len() - 1
        })
    }

    /// Square with lower-left lattice corner `(i, j)` and side 2 lattice
    /// steps, split into four triangles through its center.
    fn criss_cross(&mut self, i: i64, j: i64) {
        let c00 = self.vertex(i, j);
        let c10 = self.vertex(i + 2, j);
        let c11 = self.vertex(i + 2, j + 2);
        let c01 = self.vertex(i, j + 2);
        let m = self.vertex(i + 1, j + 1);
        self.triangles
            .extend([[c00, c10, m], [c10, c11, m], [c11, c01, m], [c01, c00, m]]);
    }

    /// Square with lower-left lattice corner `(i, j)` and side 1 lattice
    /// step, split along its south-west/north-east diagonal.
    fn diagonal(&mut self, i: i64, j: i64) {
        let c00 = self.vertex(i, j);
        let c10 = self.vertex(i + 1, j);
        let c11 = self.vertex(i + 1, j + 1);
        let c01 = self.vertex(i, j + 1);
        self.triangles.extend([[c00, c10, c11], [c00, c11, c01]]);
    }

    fn finish(self) -> Result<Mesh> {
        let triangles = self
            .triangles
            .iter()
            .map(|&v| Triangle::new(v, longest_edge(&self.vertices, v)))
            .collect();
        Mesh::new(self.vertices, triangles, 0)
    }
}

/// Longest edge, ties broken by the smaller id of the opposite vertex.
fn longest_edge(vertices: &[Point], v: [usize; 3]) -> usize {
    let len = |k: usize| dist(&vertices[v[k]], &vertices[v[(k + 1) % 3]]);
    let mut best = 0;
    for k in 1..3 {
        let (lk, lb) = (len(k), len(best));
        let tol = 1e-12 * lk.max(lb);
        let opposite = |e: usize| v[(e + 2) % 3];
        if lk > lb + tol || ((lk - lb).abs() <= tol && opposite(k) < opposite(best)) {
            best = k;
        }
    }
    best
}

/// Initial triangulations of the benchmark domains.
///
/// With `subdivisions = n`:
/// * `UnitSquareShifted`: `2n x 2n` squares, each cut into 4 triangles through
///   its center (16 triangles for `n = 1`);
/// * `LShape`: the three unit squares cut into `n x n` squares, each cut into 4
///   triangles through its center (12 triangles for `n = 1`);
/// * `UnitSquare`: `4n x 4n` squares, each cut along one diagonal (32
///   triangles for `n = 1`).
///
/// Reference edges are the longest edges.
pub fn build_initial_mesh(domain: Domain, subdivisions: usize) -> Result<Mesh> {
    if subdivisions == 0 {
        return Err(Error::InvalidParameter(
            "subdivision count must be at least 1".into(),
        ));
    }
    let n = subdivisions as i64;
    match domain {
        Domain::UnitSquareShifted => {
            let mut b = LatticeBuilder::new([-1.0, -1.0], 0.5 / n as f64);
            for j in 0..2 * n {
                for i in 0..2 * n {
                    b.criss_cross(2 * i, 2 * j);
                }
            }
            b.finish()
        }
        Domain::LShape => {
            let mut b = LatticeBuilder::new([-1.0, -1.0], 0.5 / n as f64);
            // unit squares [-1,0]x[-1,0], [-1,0]x[0,1], [0,1]x[0,1]
            for (si, sj) in [(0, 0), (0, 1), (1, 1)] {
                for j in 0..n {
                    for i in 0..n {
                        b.criss_cross(2 * (si * n + i), 2 * (sj * n + j));
                    }
                }
            }
            b.finish()
        }
        Domain::UnitSquare => {
            let mut b = LatticeBuilder::new([0.0, 0.0], 0.25 / n as f64);
            for j in 0..4 * n {
                for i in 0..4 * n {
                    b.diagonal(i, j);
                }
            }
            b.finish()
        }
    }
}
