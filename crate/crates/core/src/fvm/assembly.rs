use rayon::prelude::*;
use serde::Serialize;

use super::sparse::SparseMatrix;
use crate::error::{Error, Result};
use crate::mesh::{dist, internal_segment, sub_volume_barycentric, DualMesh, Mesh, Point};
use crate::problem::{FluxRule, Mat2, Problem, Quadrature};

/// `M[k][l]`: contribution of trial function `λ_l` to the equation of local vertex `k`.
pub type LocalMatrix = [[f64; 3]; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Discretization {
    Fvm,
    Fem,
}

/// Interior-vertex system with the Dirichlet lift folded into `rhs`.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub kind: Discretization,
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    /// Vertex of each unknown.
    pub unknowns: Vec<usize>,
    /// Unknown of each vertex; `None` on the Dirichlet boundary.
    pub row_of: Vec<Option<usize>>,
    /// `g(a_i)` on boundary vertices, zero elsewhere.
    pub dirichlet_values: Vec<f64>,
    /// Element matrices, kept for evaluating the discrete form on arbitrary fields.
    pub local: Vec<LocalMatrix>,
    /// Per-vertex load: `∫_{V_i} f` (FVM) or `∫ f φ_i` (FEM).
    pub load: Vec<f64>,
}

impl LinearSystem {
    pub fn num_unknowns(&self) -> usize {
        self.unknowns.len()
    }

    /// Per-vertex value of the discrete form `B(u, χ_i)` (or `B(u, φ_i)`) for
    /// nodal values `u`; rows of boundary vertices are meaningless.
    pub fn apply(&self, mesh: &Mesh, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; mesh.num_vertices()];
        for (tri, m) in mesh.triangles.iter().zip(&self.local) {
            let v = tri.vertices;
            for k in 0..3 {
                out[v[k]] += (0..3).map(|l| m[k][l] * u[v[l]]).sum::<f64>();
            }
        }
        out
    }

    /// `load_i - B(u, ·)_i` on interior vertices, zero on the boundary.
    pub fn balance_residual(&self, mesh: &Mesh, u: &[f64]) -> Vec<f64> {
        let bu = self.apply(mesh, u);
        (0..mesh.num_vertices())
            .map(|i| match self.row_of[i] {
                Some(_) => self.load[i] - bu[i],
                None => 0.0,
            })
            .collect()
    }

    /// Full nodal vector from interior unknowns and the Dirichlet data.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut u = self.dirichlet_values.clone();
        for (r, &v) in self.unknowns.iter().enumerate() {
            u[v] = x[r];
        }
        u
    }

    /// Interior unknowns of a full nodal vector.
    pub fn restrict(&self, u: &[f64]) -> Vec<f64> {
        self.unknowns.iter().map(|&v| u[v]).collect()
    }
}

fn mat_vec(a: &Mat2, x: &Point) -> Point {
    [
        a[0][0] * x[0] + a[0][1] * x[1],
        a[1][0] * x[0] + a[1][1] * x[1],
    ]
}

fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn check_area(mesh: &Mesh, t: usize) -> Result<()> {
    let area = mesh.area(t);
    if area > 0.0 {
        Ok(())
    } else {
        Err(Error::DegenerateTriangle { triangle: t, area })
    }
}

/// Box-method element matrix and load of triangle `t`.
pub fn fvm_local(
    mesh: &Mesh,
    problem: &Problem,
    quad: &Quadrature,
    t: usize,
) -> (LocalMatrix, [f64; 3]) {
    let grads = mesh.barycentric_gradients(t);
    let mut m = [[0.0; 3]; 3];
    let midpoint_rule = ([0.5], [1.0]);
    let (points, weights): (&[f64], &[f64]) = match quad.flux {
        FluxRule::Midpoint => (&midpoint_rule.0, &midpoint_rule.1),
        FluxRule::Gauss => (&quad.segment.points, &quad.segment.weights),
    };
    for j in 0..3 {
        let (edge_mid, centroid, n) = internal_segment(mesh, t, j);
        let len = dist(&edge_mid, &centroid);
        // segment from the midpoint of edge (j, j+1) to the centroid
        let mut start = [0.0; 3];
        start[j] = 0.5;
        start[(j + 1) % 3] = 0.5;
        for (&s, &w) in points.iter().zip(weights) {
            let bary: [f64; 3] = std::array::from_fn(|i| (1.0 - s) * start[i] + s / 3.0);
            let x = mesh.map_point(t, bary);
            let a = (problem.diffusion)(x);
            let bn = dot(&(problem.convection)(x), &n);
            for l in 0..3 {
                let flux = w * len * (-dot(&mat_vec(&a, &grads[l]), &n) + bn * bary[l]);
                m[j][l] += flux;
                m[(j + 1) % 3][l] -= flux;
            }
        }
    }
    let scale = mesh.area(t) / 3.0;
    let mut load = [0.0; 3];
    for k in 0..3 {
        for piece in sub_volume_barycentric(k) {
            for (q, w) in quad.triangle.points.iter().zip(&quad.triangle.weights) {
                let lam: [f64; 3] =
                    std::array::from_fn(|i| (0..3).map(|c| q[c] * piece[c][i]).sum());
                let x = mesh.map_point(t, lam);
                let w = w * scale;
                load[k] += w * (problem.source)(x);
                let c = (problem.reaction)(x);
                for l in 0..3 {
                    m[k][l] += w * c * lam[l];
                }
            }
        }
    }
    (m, load)
}

/// P1 Galerkin element matrix and load of triangle `t` for
/// `∫ (A∇u − b u)·∇w + c u w`.
pub fn fem_local(
    mesh: &Mesh,
    problem: &Problem,
    quad: &Quadrature,
    t: usize,
) -> (LocalMatrix, [f64; 3]) {
    let grads = mesh.barycentric_gradients(t);
    let jac = 2.0 * mesh.area(t);
    let mut m = [[0.0; 3]; 3];
    let mut load = [0.0; 3];
    for (lam, w) in quad.triangle.points.iter().zip(&quad.triangle.weights) {
        let x = mesh.map_point(t, *lam);
        let w = w * jac;
        let a = (problem.diffusion)(x);
        let b = (problem.convection)(x);
        let c = (problem.reaction)(x);
        let f = (problem.source)(x);
        for k in 0..3 {
            load[k] += w * f * lam[k];
            for l in 0..3 {
                let diffusion = dot(&mat_vec(&a, &grads[l]), &grads[k]);
                let convection = lam[l] * dot(&b, &grads[k]);
                m[k][l] += w * (diffusion - convection + c * lam[l] * lam[k]);
            }
        }
    }
    (m, load)
}

fn assemble(
    mesh: &Mesh,
    problem: &Problem,
    kind: Discretization,
    local: impl Fn(usize) -> (LocalMatrix, [f64; 3]) + Sync + Send,
) -> Result<LinearSystem> {
    (0..mesh.num_triangles()).try_for_each(|t| check_area(mesh, t))?;
    let elements: Vec<_> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(&local)
        .collect();

    let boundary = mesh.boundary_vertices();
    let nv = mesh.num_vertices();
    let mut row_of = vec![None; nv];
    let mut unknowns = Vec::new();
    let mut dirichlet_values = vec![0.0; nv];
    for v in 0..nv {
        if boundary[v] {
            dirichlet_values[v] = (problem.dirichlet)(mesh.vertices[v]);
        } else {
            row_of[v] = Some(unknowns.len());
            unknowns.push(v);
        }
    }

    let mut triplets = Vec::with_capacity(9 * mesh.num_triangles());
    let mut rhs = vec![0.0; unknowns.len()];
    let mut load = vec![0.0; nv];
    for (tri, (m, f)) in mesh.triangles.iter().zip(&elements) {
        let v = tri.vertices;
        for k in 0..3 {
            load[v[k]] += f[k];
            let Some(r) = row_of[v[k]] else { continue };
            rhs[r] += f[k];
            for l in 0..3 {
                match row_of[v[l]] {
                    Some(c) => triplets.push((r, c, m[k][l])),
                    None => rhs[r] -= m[k][l] * dirichlet_values[v[l]],
                }
            }
        }
    }
    let n = unknowns.len();
    Ok(LinearSystem {
        kind,
        matrix: SparseMatrix::from_triplets(n, n, triplets),
        rhs,
        unknowns,
        row_of,
        dirichlet_values,
        local: elements.into_iter().map(|(m, _)| m).collect(),
        load,
    })
}

/// Vertex-centered finite volume system: one balance equation per interior box.
pub fn assemble_fvm(
    mesh: &Mesh,
    dual: &DualMesh,
    problem: &Problem,
    quad: &Quadrature,
) -> Result<LinearSystem> {
    if dual.interior_mask.len() != mesh.num_vertices() {
        return Err(Error::InvalidParameter(
            "dual mesh does not belong to the mesh".into(),
        ));
    }
    assemble(mesh, problem, Discretization::Fvm, |t| {
        fvm_local(mesh, problem, quad, t)
    })
}

/// P1 finite element system with the same Dirichlet treatment.
pub fn assemble_fem(mesh: &Mesh, problem: &Problem, quad: &Quadrature) -> Result<LinearSystem> {
    assemble(mesh, problem, Discretization::Fem, |t| {
        fem_local(mesh, problem, quad, t)
    })
}
