//! Conforming triangulations, newest vertex bisection and dual (box) meshes.
//!
//! Local edge `k` of a triangle joins `vertices[k]` and `vertices[(k + 1) % 3]`.
//! All triangles are stored counter-clockwise.

mod build;
mod dual;
mod io;
mod refine;

pub use build::{build_initial_mesh, Domain};
pub use dual::{
    internal_segment, sub_volume_barycentric, sub_volume_triangles, DualMesh, FluxSegment,
};
pub use io::{read_mesh, write_mesh};
pub use refine::{refine, shape_class_bounds, uniform_refine, MarkSet, Refinement};

use std::collections::HashMap;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeMarker {
    Interior,
    Dirichlet,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Triangle {
    pub vertices: [usize; 3],
    /// Local index of the reference edge (the edge bisected by NVB).
    pub ref_edge: usize,
    pub boundary: [EdgeMarker; 3],
}

impl Triangle {
    pub fn new(vertices: [usize; 3], ref_edge: usize) -> Self {
        Self {
            vertices,
            ref_edge,
            boundary: [EdgeMarker::Interior; 3],
        }
    }

    /// Vertex ids of local edge `k`.
    pub fn edge(&self, k: usize) -> [usize; 2] {
        [self.vertices[k], self.vertices[(k + 1) % 3]]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    /// Sorted vertex ids.
    pub vertices: [usize; 2],
    pub owners: (usize, Option<usize>),
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.owners.1.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<Triangle>,
    pub edges: Vec<Edge>,
    /// Global edge id of each local edge.
    pub triangle_edges: Vec<[usize; 3]>,
    pub generation: usize,
}

pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    /// Builds the edge adjacency and boundary markers. Rejects non-positive
    /// areas, repeated vertices and edges shared by more than two triangles.
    pub fn new(
        vertices: Vec<Point>,
        mut triangles: Vec<Triangle>,
        generation: usize,
    ) -> Result<Self> {
        for (i, p) in vertices.iter().enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::InvalidMesh(format!(
                    "vertex {i} has non-finite coordinates"
                )));
            }
        }
        let mut lookup: HashMap<(usize, usize), usize> =
            HashMap::with_capacity(triangles.len() * 2);
        let mut edges: Vec<Edge> = Vec::with_capacity(triangles.len() * 3 / 2 + 4);
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let [a, b, c] = tri.vertices;
            if a == b || b == c || a == c {
                return Err(Error::InvalidMesh(format!("triangle {t} repeats a vertex")));
            }
            if let Some(&v) = tri.vertices.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} references missing vertex {v}"
                )));
            }
            if tri.ref_edge > 2 {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} has reference edge {}",
                    tri.ref_edge
                )));
            }
            let area = signed_area(&vertices[a], &vertices[b], &vertices[c]);
            if area <= 0.0 {
                return Err(Error::DegenerateTriangle { triangle: t, area });
            }
            let mut ids = [0; 3];
            for (k, id) in ids.iter_mut().enumerate() {
                let [p, q] = tri.edge(k);
                let key = edge_key(p, q);
                *id = match lookup.get(&key) {
                    Some(&e) => {
                        let edge = &mut edges[e];
                        if edge.owners.1.is_some() {
                            return Err(Error::InvalidMesh(format!(
                                "edge ({}, {}) has more than two triangles",
                                key.0, key.1
                            )));
                        }
                        edge.owners.1 = Some(t);
                        e
                    }
                    None => {
                        lookup.insert(key, edges.len());
                        edges.push(Edge {
                            vertices: [key.0, key.1],
                            owners: (t, None),
                        });
                        edges.len() - 1
                    }
                };
            }
            triangle_edges.push(ids);
        }
        for (tri, ids) in triangles.iter_mut().zip(&triangle_edges) {
            for k in 0..3 {
                tri.boundary[k] = if edges[ids[k]].is_boundary() {
                    EdgeMarker::Dirichlet
                } else {
                    EdgeMarker::Interior
                };
            }
        }
        Ok(Self {
            vertices,
            triangles,
            edges,
            triangle_edges,
            generation,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t].vertices;
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        signed_area(&a, &b, &c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.area(t)).sum()
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.corners(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        dist(&a, &b).max(dist(&b, &c)).max(dist(&c, &a))
    }

    /// Constant gradients of the three barycentric coordinates on `t`.
    pub fn barycentric_gradients(&self, t: usize) -> [Point; 3] {
        let [p0, p1, p2] = self.corners(t);
        let det = 2.0 * signed_area(&p0, &p1, &p2);
        [
            [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
            [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
            [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
        ]
    }

    /// Gradient of the P1 function with nodal values `u` restricted to `t`.
    pub fn gradient(&self, t: usize, u: &[f64]) -> Point {
        let g = self.barycentric_gradients(t);
        let v = self.triangles[t].vertices;
        let mut out = [0.0; 2];
        for k in 0..3 {
            out[0] += u[v[k]] * g[k][0];
            out[1] += u[v[k]] * g[k][1];
        }
        out
    }

    /// Maps barycentric coordinates on `t` to a physical point.
    pub fn map_point(&self, t: usize, bary: [f64; 3]) -> Point {
        let [a, b, c] = self.corners(t);
        [
            bary[0] * a[0] + bary[1] * b[0] + bary[2] * c[0],
            bary[0] * a[1] + bary[1] * b[1] + bary[2] * c[1],
        ]
    }

    /// Per-vertex flag, `true` for vertices on the boundary.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut flags = vec![false; self.num_vertices()];
        for e in self.edges.iter().filter(|e| e.is_boundary()) {
            flags[e.vertices[0]] = true;
            flags[e.vertices[1]] = true;
        }
        flags
    }

    /// Local mesh size `h_T = |T|^(1/2)` and its maximum.
    pub fn mesh_size(&self) -> (Vec<f64>, f64) {
        let h: Vec<f64> = (0..self.num_triangles())
            .map(|t| self.area(t).sqrt())
            .collect();
        let max = h.iter().copied().fold(0.0, f64::max);
        (h, max)
    }

    /// `max_T diam(T) / |T|^(1/2)`.
    pub fn shape_regularity(&self) -> f64 {
        (0..self.num_triangles())
            .map(|t| self.diameter(t) / self.area(t).sqrt())
            .fold(0.0, f64::max)
    }

    /// Smallest interior angle over all triangles, in radians.
    pub fn min_angle(&self) -> f64 {
        (0..self.num_triangles())
            .flat_map(|t| triangle_angles(&self.corners(t)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Topological conformity: every edge has one or two owners, every
    /// vertex touches zero or two boundary edges, and the Euler
    /// characteristic is that of a disk. Hanging nodes violate the latter two.
    pub fn check_conformity(&self) -> Result<()> {
        let mut boundary_degree = vec![0usize; self.num_vertices()];
        for e in self.edges.iter().filter(|e| e.is_boundary()) {
            boundary_degree[e.vertices[0]] += 1;
            boundary_degree[e.vertices[1]] += 1;
        }
        if let Some(v) = boundary_degree.iter().position(|&d| d != 0 && d != 2) {
            return Err(Error::InvalidMesh(format!(
                "vertex {v} touches {} boundary edges (hanging node)",
                boundary_degree[v]
            )));
        }
        let mut used = vec![false; self.num_vertices()];
        for t in &self.triangles {
            for &v in &t.vertices {
                used[v] = true;
            }
        }
        if let Some(v) = used.iter().position(|&u| !u) {
            return Err(Error::InvalidMesh(format!(
                "vertex {v} belongs to no triangle"
            )));
        }
        let euler =
            self.num_vertices() as i64 - self.edges.len() as i64 + self.num_triangles() as i64;
        if euler != 1 {
            return Err(Error::InvalidMesh(format!(
                "Euler characteristic {euler}, expected 1"
            )));
        }
        Ok(())
    }
}

pub fn signed_area(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Shoelace area of a simple polygon, positive when counter-clockwise.
pub fn polygon_area(points: &[Point]) -> f64 {
    let n = points.len();
    let mut twice = 0.0;
    for i in 0..n {
        let p = points[i];
        let q = points[(i + 1) % n];
        twice += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * twice
}

pub fn dist(a: &Point, b: &Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn midpoint(a: &Point, b: &Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

pub fn triangle_angles(p: &[Point; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for k in 0..3 {
        let a = p[k];
        let b = p[(k + 1) % 3];
        let c = p[(k + 2) % 3];
        let u = [b[0] - a[0], b[1] - a[1]];
        let v = [c[0] - a[0], c[1] - a[1]];
        let cross = u[0] * v[1] - u[1] * v[0];
        let dot = u[0] * v[0] + u[1] * v[1];
        out[k] = cross.abs().atan2(dot);
    }
    out
}
