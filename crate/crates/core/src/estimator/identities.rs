//! Box-wise residual identities linking the estimator to the discrete scheme.

use std::sync::Arc;

use rayon::prelude::*;

use super::{edge_normal, facet_owners, jump_at, residual_at};
use crate::error::{Error, Result};
use crate::fvm::{prolong, LinearSystem, SolutionField};
use crate::mesh::{midpoint, sub_volume_barycentric, Refinement};
use crate::problem::{Problem, Quadrature};

/// Per-vertex defects (zero on boundary vertices) and their maximum modulus.
#[derive(Clone, Debug)]
pub struct BoxDefects {
    pub per_vertex: Vec<f64>,
    pub max: f64,
}

impl BoxDefects {
    fn new(per_vertex: Vec<f64>) -> Self {
        let max = per_vertex.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Self { per_vertex, max }
    }
}

/// `Σ_T ∫_{V_i∩T} R − Σ_F ∫_{F∩V_i} J` for every interior box, restricted to
/// the edges accepted by `include_edge`.
fn residual_box_integrals(
    v: &SolutionField,
    problem: &Problem,
    quad: &Quadrature,
    include_edge: impl Fn(usize) -> bool + Sync,
) -> Vec<f64> {
    let mesh = &v.mesh;
    let tri = &quad.triangle;
    let volume: Vec<[f64; 3]> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let scale = mesh.area(t) / 3.0;
            std::array::from_fn(|k| {
                sub_volume_barycentric(k)
                    .iter()
                    .map(|piece| {
                        tri.points
                            .iter()
                            .zip(&tri.weights)
                            .map(|(q, w)| {
                                let lam = std::array::from_fn(|i| {
                                    (0..3).map(|c| q[c] * piece[c][i]).sum()
                                });
                                w * scale * residual_at(problem, v, t, &lam)
                            })
                            .sum::<f64>()
                    })
                    .sum()
            })
        })
        .collect();
    let jumps: Vec<Option<[f64; 2]>> = (0..mesh.edges.len())
        .into_par_iter()
        .map(|e| {
            let owners = facet_owners(mesh, e).ok().filter(|_| include_edge(e))?;
            let n = edge_normal(mesh, e, owners[0]);
            let [a, b] = mesh.edges[e].vertices;
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            let m = midpoint(&pa, &pb);
            let half = |p| {
                quad.segment
                    .integrate(p, m, |x| jump_at(problem, v, owners, n, x))
            };
            Some([half(pa), half(pb)])
        })
        .collect();

    let mut out = vec![0.0; mesh.num_vertices()];
    for (tri, r) in mesh.triangles.iter().zip(&volume) {
        for k in 0..3 {
            out[tri.vertices[k]] += r[k];
        }
    }
    for (edge, j) in mesh.edges.iter().zip(&jumps) {
        if let Some([ja, jb]) = j {
            out[edge.vertices[0]] -= ja;
            out[edge.vertices[1]] -= jb;
        }
    }
    for (o, boundary) in out.iter_mut().zip(mesh.boundary_vertices()) {
        if boundary {
            *o = 0.0;
        }
    }
    out
}

/// Per interior box, `Σ_T ∫_{V_i∩T} R(u_h) − Σ_F ∫_{F∩V_i} J(u_h)`. For the
/// finite volume solution this vanishes up to the flux quadrature error; for
/// any other field it equals the box balance residual.
pub fn check_discrete_orthogonality(
    u_h: &SolutionField,
    problem: &Problem,
    quad: &Quadrature,
) -> BoxDefects {
    BoxDefects::new(residual_box_integrals(u_h, problem, quad, |_| true))
}

/// Mismatch per fine interior box between the coarse residuals tested with
/// the fine box, `Σ ⟨R_◊(u_◊), χ_i⟩ − Σ ⟨J_◊(u_◊), χ_i⟩` over coarse elements
/// and coarse edges, and the fine discrete form `B_×(u_× − P u_◊, χ_i)`.
pub fn check_defect_identity(
    coarse: &SolutionField,
    refinement: &Refinement,
    fine: &SolutionField,
    fine_system: &LinearSystem,
    problem: &Problem,
    quad: &Quadrature,
) -> Result<BoxDefects> {
    let mesh = &fine.mesh;
    if mesh.num_triangles() != refinement.parent.len()
        || mesh.num_vertices() != refinement.mesh.num_vertices()
    {
        return Err(Error::NotNested(
            "fine field does not live on the refined mesh".into(),
        ));
    }
    let lifted = prolong(coarse, refinement, Arc::clone(mesh))?;
    // fine edges lying on coarse edges separate triangles with different ancestors
    let on_coarse_edge = |e: usize| match mesh.edges[e].owners {
        (t0, Some(t1)) => refinement.parent[t0] != refinement.parent[t1],
        _ => false,
    };
    let lhs = residual_box_integrals(&lifted, problem, quad, on_coarse_edge);
    let b_fine = fine_system.apply(mesh, &fine.values);
    let b_lifted = fine_system.apply(mesh, &lifted.values);
    let mismatch = (0..mesh.num_vertices())
        .map(|i| match fine_system.row_of[i] {
            Some(_) => lhs[i] - (b_fine[i] - b_lifted[i]),
            None => 0.0,
        })
        .collect();
    Ok(BoxDefects::new(mismatch))
}
