//! Vertex-centered finite volume discretization, a P1 finite element
//! reference, interpolation and error norms.

mod assembly;
mod solve;
mod sparse;

pub use assembly::{
    assemble_fem, assemble_fvm, fem_local, fvm_local, Discretization, LinearSystem, LocalMatrix,
};
pub use solve::{solve, SolveInfo, RESIDUAL_TOLERANCE};
pub use sparse::SparseMatrix;

use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{DualMesh, Mesh, Point, Refinement};
use crate::problem::{Problem, TriangleRule};

/// Continuous piecewise affine function given by its nodal values.
#[derive(Clone, Debug)]
pub struct SolutionField {
    pub mesh: Arc<Mesh>,
    pub values: Vec<f64>,
}

impl SolutionField {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), mesh.num_vertices(), "one value per vertex");
        Self { mesh, values }
    }

    /// Nodal interpolant of `u`.
    pub fn interpolate(mesh: Arc<Mesh>, u: impl Fn(Point) -> f64) -> Self {
        let values = mesh.vertices.iter().map(|&p| u(p)).collect();
        Self { mesh, values }
    }

    pub fn gradient(&self, t: usize) -> Point {
        self.mesh.gradient(t, &self.values)
    }

    pub fn value_at(&self, t: usize, bary: &[f64; 3]) -> f64 {
        let v = self.mesh.triangles[t].vertices;
        (0..3).map(|k| bary[k] * self.values[v[k]]).sum()
    }

    /// `vertex_id value` lines.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{i} {v:e}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ErrorNorms {
    pub l2: f64,
    pub h1_semi: f64,
    pub h1: f64,
}

impl ErrorNorms {
    fn from_squares(l2_sq: f64, semi_sq: f64) -> Self {
        Self {
            l2: l2_sq.sqrt(),
            h1_semi: semi_sq.sqrt(),
            h1: (l2_sq + semi_sq).sqrt(),
        }
    }
}

/// Norms of `u - u_h` for the exact solution of `problem`, by elementwise quadrature.
pub fn error_norms(
    u_h: &SolutionField,
    problem: &Problem,
    rule: &TriangleRule,
) -> Result<ErrorNorms> {
    let exact = problem.exact.as_ref().ok_or(Error::NoExactSolution)?;
    Ok(difference_norms(
        u_h,
        rule,
        |x| (exact.value)(x),
        |x| (exact.gradient)(x),
    ))
}

/// Norms of `u_h` itself.
pub fn field_norms(u_h: &SolutionField, rule: &TriangleRule) -> ErrorNorms {
    difference_norms(u_h, rule, |_| 0.0, |_| [0.0, 0.0])
}

fn difference_norms(
    u_h: &SolutionField,
    rule: &TriangleRule,
    u: impl Fn(Point) -> f64,
    grad_u: impl Fn(Point) -> Point,
) -> ErrorNorms {
    let mesh = &u_h.mesh;
    let (mut l2, mut semi) = (0.0, 0.0);
    for t in 0..mesh.num_triangles() {
        let g = u_h.gradient(t);
        let jac = 2.0 * mesh.area(t);
        for (b, w) in rule.points.iter().zip(&rule.weights) {
            let x = mesh.map_point(t, *b);
            let e = u(x) - u_h.value_at(t, b);
            let ge = grad_u(x);
            l2 += w * jac * e * e;
            semi += w * jac * ((ge[0] - g[0]).powi(2) + (ge[1] - g[1]).powi(2));
        }
    }
    ErrorNorms::from_squares(l2, semi)
}

/// Norms of the difference of two fields on the same mesh.
pub fn discrete_difference_norms(
    a: &SolutionField,
    b: &SolutionField,
    rule: &TriangleRule,
) -> ErrorNorms {
    assert_eq!(a.values.len(), b.values.len());
    let diff = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
    field_norms(&SolutionField::new(a.mesh.clone(), diff), rule)
}

/// Box values of the dual interpolant: `(I* v)|_{V_i} = v(a_i)`.
pub fn interpolate_dual(v: &SolutionField, dual: &DualMesh) -> Vec<f64> {
    assert_eq!(dual.box_areas.len(), v.values.len());
    v.values.clone()
}

/// Represents a coarse field on a finer nested mesh: old vertices keep
/// their values, each new vertex takes the mean of its edge endpoints.
pub fn prolong(
    coarse: &SolutionField,
    refinement: &Refinement,
    fine: Arc<Mesh>,
) -> Result<SolutionField> {
    let nc = refinement.coarse_vertices;
    if coarse.values.len() != nc
        || fine.num_vertices() != nc + refinement.new_vertex_parents.len()
        || refinement.parent.len() != fine.num_triangles()
    {
        return Err(Error::NotNested(format!(
            "coarse field has {} values, refinement expects {nc} coarse and {} fine vertices",
            coarse.values.len(),
            fine.num_vertices()
        )));
    }
    let mut values = coarse.values.clone();
    values.extend(
        refinement
            .new_vertex_parents
            .iter()
            .map(|&[a, b]| 0.5 * (coarse.values[a] + coarse.values[b])),
    );
    Ok(SolutionField::new(fine, values))
}

#[cfg(test)]
mod tests;
