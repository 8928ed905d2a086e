//! Weighted residual error indicators and data oscillations.
//!
//! For a discrete field `u_h` the volume residual is
//! `R = f + (div A)·∇u_h − (div b) u_h − b·∇u_h − c u_h` and the normal jump
//! across an interior edge is `J = (A∇u_h|_T − A∇u_h|_T')·n`, where `n`
//! always points from the lower into the higher triangle id.

mod identities;

pub use identities::{check_defect_identity, check_discrete_orthogonality, BoxDefects};

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fvm::SolutionField;
use crate::mesh::{dist, Mesh, Point};
use crate::problem::{Problem, Quadrature, SegmentRule, TriangleRule};

/// Relative finite-difference step for `div A` when no closed form is known.
const FD_STEP: f64 = 1e-4;

/// Per-element squared indicators and oscillations.
#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorField {
    pub eta_sq: Vec<f64>,
    pub osc_sq: Vec<f64>,
    pub eta_sq_total: f64,
    pub osc_sq_total: f64,
}

impl IndicatorField {
    fn new(eta_sq: Vec<f64>, osc_sq: Vec<f64>) -> Self {
        let eta_sq_total = eta_sq.iter().sum();
        let osc_sq_total = osc_sq.iter().sum();
        Self {
            eta_sq,
            osc_sq,
            eta_sq_total,
            osc_sq_total,
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta_sq_total.sqrt()
    }

    pub fn osc(&self) -> f64 {
        self.osc_sq_total.sqrt()
    }

    /// CSV with header `element_id,eta_sq,osc_sq`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "element_id,eta_sq,osc_sq")?;
        for (t, (e, o)) in self.eta_sq.iter().zip(&self.osc_sq).enumerate() {
            writeln!(out, "{t},{e:e},{o:e}")?;
        }
        Ok(())
    }
}

/// `R(x)` on triangle `t`, where `bary` are the barycentric coordinates of `x`.
pub fn residual_at(problem: &Problem, u_h: &SolutionField, t: usize, bary: &[f64; 3]) -> f64 {
    let mesh = &u_h.mesh;
    let x = mesh.map_point(t, *bary);
    let g = u_h.gradient(t);
    let u = u_h.value_at(t, bary);
    let step = FD_STEP * mesh.area(t).sqrt();
    let div_a = problem.div_diffusion(x, step);
    let b = (problem.convection)(x);
    (problem.source)(x) + div_a[0] * g[0] + div_a[1] * g[1]
        - (problem.convection_divergence)(x) * u
        - (b[0] * g[0] + b[1] * g[1])
        - (problem.reaction)(x) * u
}

/// Values of `R` at the points of `rule` on triangle `t`.
pub fn element_residual(
    problem: &Problem,
    u_h: &SolutionField,
    t: usize,
    rule: &TriangleRule,
) -> Vec<f64> {
    rule.points
        .iter()
        .map(|b| residual_at(problem, u_h, t, b))
        .collect()
}

/// Unit normal of edge `e` pointing from triangle `from` into the other owner.
pub(crate) fn edge_normal(mesh: &Mesh, e: usize, from: usize) -> Point {
    let [a, b] = mesh.edges[e].vertices;
    let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
    let len = dist(&pa, &pb);
    let n = [(pb[1] - pa[1]) / len, (pa[0] - pb[0]) / len];
    let c = mesh.centroid(from);
    // points away from the centroid of `from`
    if n[0] * (pa[0] - c[0]) + n[1] * (pa[1] - c[1]) >= 0.0 {
        n
    } else {
        [-n[0], -n[1]]
    }
}

/// `(A∇u_h|_{order[0]} − A∇u_h|_{order[1]})·n` at `x`.
pub(crate) fn jump_at(
    problem: &Problem,
    u_h: &SolutionField,
    order: [usize; 2],
    n: Point,
    x: Point,
) -> f64 {
    let a = (problem.diffusion)(x);
    let g0 = u_h.gradient(order[0]);
    let g1 = u_h.gradient(order[1]);
    let d = [g0[0] - g1[0], g0[1] - g1[1]];
    (a[0][0] * d[0] + a[0][1] * d[1]) * n[0] + (a[1][0] * d[0] + a[1][1] * d[1]) * n[1]
}

/// Owners of interior edge `e`, lower triangle id first.
pub fn facet_owners(mesh: &Mesh, e: usize) -> Result<[usize; 2]> {
    match mesh.edges[e].owners {
        (t0, Some(t1)) => Ok([t0.min(t1), t0.max(t1)]),
        (_, None) => Err(Error::BoundaryFacet(e)),
    }
}

/// Values of `J` at the points of `rule` along edge `e`, traversed from its
/// lower to its higher vertex id. `order` lists the two owners, the first
/// gradient being taken in `order[0]`; swapping them negates `J`.
pub fn facet_jump(
    problem: &Problem,
    u_h: &SolutionField,
    e: usize,
    order: [usize; 2],
    rule: &SegmentRule,
) -> Result<Vec<f64>> {
    let mesh = &u_h.mesh;
    let owners = facet_owners(mesh, e)?;
    if order != owners && order != [owners[1], owners[0]] {
        return Err(Error::InvalidParameter(format!(
            "triangles {order:?} do not own edge {e}"
        )));
    }
    let n = edge_normal(mesh, e, owners[0]);
    let [a, b] = mesh.edges[e].vertices;
    let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
    Ok(rule
        .points
        .iter()
        .map(|&s| {
            let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            jump_at(problem, u_h, order, n, x)
        })
        .collect())
}

/// `(‖v‖², ‖v − mean(v)‖²)` from point values and already scaled weights.
fn norm_and_oscillation(
    values: &[f64],
    weights: impl Iterator<Item = f64> + Clone,
    measure: f64,
) -> (f64, f64) {
    let mean = values
        .iter()
        .zip(weights.clone())
        .map(|(v, w)| w * v)
        .sum::<f64>()
        / measure;
    values
        .iter()
        .zip(weights)
        .fold((0.0, 0.0), |(n, o), (v, w)| {
            (n + w * v * v, o + w * (v - mean) * (v - mean))
        })
}

/// `η_T² = h_T²‖R‖²_T + h_T Σ ‖J‖²_F` over the interior edges of `T`, and the
/// matching oscillations with the integral means removed; `h_T = |T|^(1/2)`.
/// Each interior edge contributes to both of its triangles.
pub fn compute_indicators(
    u_h: &SolutionField,
    problem: &Problem,
    quad: &Quadrature,
) -> IndicatorField {
    let mesh = &u_h.mesh;
    let tri = &quad.triangle;
    let mut elements: Vec<(f64, f64)> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let area = mesh.area(t);
            let r = element_residual(problem, u_h, t, tri);
            let (norm, osc) =
                norm_and_oscillation(&r, tri.weights.iter().map(|w| 2.0 * area * w), area);
            (area * norm, area * osc)
        })
        .collect();
    let edges: Vec<Option<([usize; 2], f64, f64)>> = (0..mesh.edges.len())
        .into_par_iter()
        .map(|e| {
            let owners = facet_owners(mesh, e).ok()?;
            let j = facet_jump(problem, u_h, e, owners, &quad.segment).expect("interior edge");
            let [a, b] = mesh.edges[e].vertices;
            let len = dist(&mesh.vertices[a], &mesh.vertices[b]);
            let (norm, osc) =
                norm_and_oscillation(&j, quad.segment.weights.iter().map(|w| len * w), len);
            Some((owners, norm, osc))
        })
        .collect();
    for (owners, norm, osc) in edges.into_iter().flatten() {
        for t in owners {
            let h = mesh.area(t).sqrt();
            elements[t].0 += h * norm;
            elements[t].1 += h * osc;
        }
    }
    let (eta_sq, osc_sq) = elements.into_iter().unzip();
    IndicatorField::new(eta_sq, osc_sq)
}

#[cfg(test)]
mod tests;
