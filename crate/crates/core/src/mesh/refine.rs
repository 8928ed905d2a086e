//! Newest vertex bisection.
//!
//! Refinement works on edges. Every marked triangle marks its reference edge;
//! the closure then marks the reference edge of every triangle that owns a
//! marked edge, until nothing changes. Each triangle is then bisected
//! recursively: the reference edge first, and a child is bisected again when
//! its reference edge (a parent edge) is marked. Each child's reference edge
//! is the edge opposite the new vertex.

use std::collections::VecDeque;

use super::{midpoint, Mesh, Triangle};
use crate::error::{Error, Result};

/// Sorted, duplicate-free set of triangle ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MarkSet(Vec<usize>);

impl MarkSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn all(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, t: usize) -> bool {
        self.0.binary_search(&t).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn is_subset(&self, other: &MarkSet) -> bool {
        self.iter().all(|t| other.contains(t))
    }
}

impl FromIterator<usize> for MarkSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut v: Vec<usize> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }
}

/// A refined mesh together with its relation to the coarse mesh.
#[derive(Clone, Debug)]
pub struct Refinement {
    pub mesh: Mesh,
    /// Coarse ancestor of each fine triangle.
    pub parent: Vec<usize>,
    /// Number of coarse vertices; these keep their ids in the fine mesh.
    pub coarse_vertices: usize,
    /// Coarse edge endpoints of each new vertex `coarse_vertices + k`.
    pub new_vertex_parents: Vec<[usize; 2]>,
}

impl Refinement {
    /// Refinement that changes nothing.
    pub fn identity(mesh: &Mesh) -> Self {
        Self {
            mesh: mesh.clone(),
            parent: (0..mesh.num_triangles()).collect(),
            coarse_vertices: mesh.num_vertices(),
            new_vertex_parents: Vec::new(),
        }
    }
}

/// Coarsest conforming NVB refinement of `mesh` in which every triangle of
/// `marked` is bisected at least once.
pub fn refine(mesh: &Mesh, marked: &MarkSet) -> Result<Refinement> {
    if let Some(t) = marked.iter().find(|&t| t >= mesh.num_triangles()) {
        return Err(Error::InvalidParameter(format!(
            "marked triangle {t} not in mesh with {} triangles",
            mesh.num_triangles()
        )));
    }
    let mut edge_marked = vec![false; mesh.edges.len()];
    let mut queue = VecDeque::new();
    for t in marked.iter() {
        let e = mesh.triangle_edges[t][mesh.triangles[t].ref_edge];
        if !edge_marked[e] {
            edge_marked[e] = true;
            queue.push_back(e);
        }
    }
    close_marking(mesh, &mut edge_marked, queue);
    Ok(bisect_marked_edges(mesh, &edge_marked))
}

/// Bisects every edge once more via three bisections per triangle; each
/// triangle yields four children.
pub fn uniform_refine(mesh: &Mesh) -> Result<Refinement> {
    Ok(bisect_marked_edges(mesh, &vec![true; mesh.edges.len()]))
}

fn close_marking(mesh: &Mesh, edge_marked: &mut [bool], mut queue: VecDeque<usize>) {
    while let Some(e) = queue.pop_front() {
        let (a, b) = mesh.edges[e].owners;
        for t in std::iter::once(a).chain(b) {
            let r = mesh.triangle_edges[t][mesh.triangles[t].ref_edge];
            if !edge_marked[r] {
                edge_marked[r] = true;
                queue.push_back(r);
            }
        }
    }
}

struct Bisector<'a> {
    edge_marked: &'a [bool],
    midpoint_of: Vec<usize>,
    triangles: Vec<Triangle>,
    parent: Vec<usize>,
}

impl Bisector<'_> {
    /// `vertices[0]..vertices[1]` is the reference edge; `edges` holds the
    /// coarse edge id of each local edge when it is (a copy of) one.
    fn split(&mut self, vertices: [usize; 3], edges: [Option<usize>; 3], ancestor: usize) {
        match edges[0] {
            Some(e) if self.edge_marked[e] => {
                let [p0, p1, p2] = vertices;
                let m = self.midpoint_of[e];
                self.split([p2, p0, m], [edges[2], None, None], ancestor);
                self.split([p1, p2, m], [edges[1], None, None], ancestor);
            }
            _ => {
                self.triangles.push(Triangle::new(vertices, 0));
                self.parent.push(ancestor);
            }
        }
    }
}

fn bisect_marked_edges(mesh: &Mesh, edge_marked: &[bool]) -> Refinement {
    let mut vertices = mesh.vertices.clone();
    let mut new_vertex_parents = Vec::new();
    let mut midpoint_of = vec![usize::MAX; mesh.edges.len()];
    for (e, edge) in mesh.edges.iter().enumerate() {
        if edge_marked[e] {
            let [a, b] = edge.vertices;
            midpoint_of[e] = vertices.len();
            vertices.push(midpoint(&mesh.vertices[a], &mesh.vertices[b]));
            new_vertex_parents.push([a, b]);
        }
    }
    let mut bisector = Bisector {
        edge_marked,
        midpoint_of,
        triangles: Vec::with_capacity(mesh.num_triangles() + 2 * new_vertex_parents.len()),
        parent: Vec::with_capacity(mesh.num_triangles() + 2 * new_vertex_parents.len()),
    };
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let ids = mesh.triangle_edges[t];
        if ids.iter().all(|&e| !edge_marked[e]) {
            bisector.triangles.push(tri.clone());
            bisector.parent.push(t);
            continue;
        }
        let r = tri.ref_edge;
        let rot = [r, (r + 1) % 3, (r + 2) % 3];
        bisector.split(rot.map(|k| tri.vertices[k]), rot.map(|k| Some(ids[k])), t);
    }
    let Bisector {
        triangles, parent, ..
    } = bisector;
    // Children of positively oriented triangles are positively oriented, so
    // construction cannot fail on a valid input mesh.
    let fine = Mesh::new(vertices, triangles, mesh.generation + 1)
        .expect("bisection of a valid mesh is valid");
    Refinement {
        mesh: fine,
        parent,
        coarse_vertices: mesh.num_vertices(),
        new_vertex_parents,
    }
}

/// Minimum angle and maximal shape constant over the triangles reachable
/// from `mesh` by newest vertex bisection. Every NVB descendant falls into
/// the similarity classes produced by two rounds of uniform refinement, so
/// these are bounds for all later meshes.
pub fn shape_class_bounds(mesh: &Mesh) -> Result<(f64, f64)> {
    let mut m = mesh.clone();
    let mut min_angle = m.min_angle();
    let mut sigma = m.shape_regularity();
    for _ in 0..2 {
        m = uniform_refine(&m)?.mesh;
        min_angle = min_angle.min(m.min_angle());
        sigma = sigma.max(m.shape_regularity());
        let single = refine(&m, &MarkSet::from_iter([0]))?.mesh;
        min_angle = min_angle.min(single.min_angle());
        sigma = sigma.max(single.shape_regularity());
    }
    Ok((min_angle, sigma))
}
