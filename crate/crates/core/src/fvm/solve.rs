use std::sync::Arc;

use faer::prelude::*;
use serde::Serialize;

use super::{LinearSystem, SolutionField};
use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Required relative residual `‖Ax − b‖ / ‖b‖`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
const REFINEMENT_STEPS: usize = 3;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SolveInfo {
    pub n_unknowns: usize,
    pub nnz: usize,
    pub relative_residual: f64,
    /// Iterative refinement steps applied after the factorization.
    pub refinement_steps: usize,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn residual(system: &LinearSystem, x: &[f64]) -> Vec<f64> {
    let ax = system.matrix.mul_vec(x);
    system.rhs.iter().zip(ax).map(|(b, a)| b - a).collect()
}

/// Solves by sparse LU with partial pivoting, followed by at most a few
/// steps of iterative refinement.
pub fn solve(mesh: &Arc<Mesh>, system: &LinearSystem) -> Result<(SolutionField, SolveInfo)> {
    let n = system.num_unknowns();
    let failure = |reason: String| Error::SolverFailure {
        n_elements: mesh.num_triangles(),
        n_unknowns: n,
        min_h: mesh.mesh_size().0.into_iter().fold(f64::INFINITY, f64::min),
        reason,
    };
    let mut info = SolveInfo {
        n_unknowns: n,
        nnz: system.matrix.nnz(),
        relative_residual: 0.0,
        refinement_steps: 0,
    };
    if n == 0 {
        return Ok((SolutionField::new(mesh.clone(), system.expand(&[])), info));
    }
    let matrix = system
        .matrix
        .to_faer()
        .ok_or_else(|| failure("invalid sparse structure".into()))?;
    let lu = matrix
        .sp_lu()
        .map_err(|e| failure(format!("factorization failed: {e:?}")))?;
    let lu_solve = |b: &[f64]| -> Vec<f64> {
        let col = lu.solve(Col::from_fn(b.len(), |i| b[i]));
        (0..b.len()).map(|i| col[i]).collect()
    };

    let scale = norm(&system.rhs).max(f64::MIN_POSITIVE);
    let mut x = lu_solve(&system.rhs);
    let mut r = residual(system, &x);
    info.relative_residual = norm(&r) / scale;
    while info.relative_residual > 1e-3 * RESIDUAL_TOLERANCE
        && info.refinement_steps < REFINEMENT_STEPS
    {
        let dx = lu_solve(&r);
        let candidate: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let rc = residual(system, &candidate);
        let rel = norm(&rc) / scale;
        info.refinement_steps += 1;
        if !(rel < info.relative_residual) {
            break;
        }
        (x, r, info.relative_residual) = (candidate, rc, rel);
    }
    if !info.relative_residual.is_finite() || x.iter().any(|v| !v.is_finite()) {
        return Err(failure("non-finite solution; matrix is singular".into()));
    }
    if info.relative_residual > RESIDUAL_TOLERANCE {
        return Err(failure(format!(
            "relative residual {:.3e} exceeds {RESIDUAL_TOLERANCE:e}",
            info.relative_residual
        )));
    }
    Ok((SolutionField::new(mesh.clone(), system.expand(&x)), info))
}
