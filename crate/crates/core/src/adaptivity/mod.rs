//! Two-stage bulk marking, the solve-estimate-mark-refine loop and
//! convergence analytics.

mod marking;
mod rates;
mod trace;

pub use marking::{doerfler_mark, mark_two_stage, MarkingParams};
pub use rates::{
    benchmark_region, concentration, fit_rate, log_log_slope, quasi_orthogonality_ratios,
    Concentration, Quantity, RateWindow, Region, MIN_FIT_ROWS,
};
pub use trace::{AdaptiveTrace, TraceRow, TRACE_HEADER};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{check_defect_identity, check_discrete_orthogonality, compute_indicators};
use crate::fvm::{
    assemble_fem, assemble_fvm, discrete_difference_norms, error_norms, prolong, solve,
    SolutionField,
};
use crate::mesh::{
    build_initial_mesh, refine, shape_class_bounds, uniform_refine, DualMesh, MarkSet, Mesh,
    Refinement,
};
use crate::problem::{Problem, Quadrature, TriangleRule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RefinementMode {
    Adaptive,
    Uniform,
}

impl fmt::Display for RefinementMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RefinementMode::Adaptive => "adaptive",
            RefinementMode::Uniform => "uniform",
        })
    }
}

impl FromStr for RefinementMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaptive" => Ok(RefinementMode::Adaptive),
            "uniform" => Ok(RefinementMode::Uniform),
            _ => Err(Error::InvalidParameter(format!(
                "unknown mode '{s}' (adaptive|uniform)"
            ))),
        }
    }
}

/// Optional per-level checks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Diagnostics {
    pub orthogonality: bool,
    pub defect_identity: bool,
    pub quasi_orthogonality: bool,
    pub fem_comparison: bool,
}

impl Diagnostics {
    pub const NAMES: [&'static str; 4] = [
        "orthogonality",
        "defect_identity",
        "quasi_orthogonality",
        "fem_comparison",
    ];

    pub fn all() -> Self {
        Self {
            orthogonality: true,
            defect_identity: true,
            quasi_orthogonality: true,
            fem_comparison: true,
        }
    }

    pub fn enable(&mut self, name: &str) -> Result<()> {
        match name {
            "orthogonality" => self.orthogonality = true,
            "defect_identity" => self.defect_identity = true,
            "quasi_orthogonality" => self.quasi_orthogonality = true,
            "fem_comparison" => self.fem_comparison = true,
            "all" => *self = Self::all(),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown diagnostic '{name}' (one of {}, all)",
                    Self::NAMES.join(", ")
                )))
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct LoopConfig {
    pub marking: MarkingParams,
    pub mode: RefinementMode,
    /// Stop once a solved mesh has at least this many elements.
    pub max_elements: usize,
    /// Stop after this many solve-estimate-mark-refine iterations.
    pub max_iterations: usize,
    pub quadrature: Quadrature,
    pub initial_subdivisions: usize,
    pub diagnostics: Diagnostics,
    /// Region for the refinement concentration check on adaptive runs.
    pub region: Option<Region>,
    /// Keep every solution and refinement (memory heavy).
    pub keep_snapshots: bool,
    /// Record wall time per level; off for byte-reproducible traces.
    pub record_timing: bool,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            marking: MarkingParams::default(),
            mode: RefinementMode::Adaptive,
            max_elements: 1_000_000,
            max_iterations: 100,
            quadrature: Quadrature::default(),
            initial_subdivisions: 1,
            diagnostics: Diagnostics::default(),
            region: None,
            keep_snapshots: false,
            record_timing: true,
        }
    }
}

/// Mesh checks run on every level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeometryReport {
    /// `|Σ|V_i| − |Ω|| / |Ω|`
    pub box_area_error: f64,
    /// `max |V_i∩T| / (|T|/3) − 1`
    pub sub_volume_error: f64,
    pub conforming: bool,
    pub min_angle: f64,
    pub angle_floor: f64,
    pub shape_regularity: f64,
    pub shape_ceiling: f64,
}

impl GeometryReport {
    pub fn holds(&self) -> bool {
        self.box_area_error <= 1e-12
            && self.sub_volume_error <= 1e-13
            && self.conforming
            && self.min_angle >= self.angle_floor - 1e-12
            && self.shape_regularity <= self.shape_ceiling + 1e-12
    }
}

/// Neumaier summation; the plain sum of a million box areas drifts past the
/// tolerance of the area check.
fn compensated_sum(values: &[f64]) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for &v in values {
        let t = sum + v;
        c += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + c
}

fn geometry_report(
    mesh: &Mesh,
    dual: &DualMesh,
    domain_area: f64,
    bounds: (f64, f64),
) -> GeometryReport {
    let total = compensated_sum(&dual.box_areas);
    let sub_volume_error = dual
        .sub_volumes
        .iter()
        .enumerate()
        .flat_map(|(t, s)| {
            let third = mesh.area(t) / 3.0;
            s.iter().map(move |v| (v - third).abs() / third)
        })
        .fold(0.0, f64::max);
    GeometryReport {
        box_area_error: (total - domain_area).abs() / domain_area,
        sub_volume_error,
        conforming: mesh.check_conformity().is_ok(),
        min_angle: mesh.min_angle(),
        angle_floor: bounds.0,
        shape_regularity: mesh.shape_regularity(),
        shape_ceiling: bounds.1,
    }
}

/// Finite volume against finite element accuracy on one mesh.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FemComparison {
    pub fvm_h1_error: f64,
    pub fem_h1_error: f64,
    pub fvm_osc: f64,
    pub fem_osc: f64,
    /// `(‖u−u_FVM‖ + osc_FVM) / (‖u−u_FEM‖ + osc_FEM)`
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelDiagnostics {
    pub level: usize,
    pub n_elements: usize,
    pub geometry: GeometryReport,
    /// Largest box defect of the discrete orthogonality relation.
    pub orthogonality_defect: Option<f64>,
    /// `‖f‖_{L²(Ω)}`, the scale for the box defects.
    pub source_l2: Option<f64>,
    /// Largest mismatch of the defect identity against the previous level.
    pub defect_identity: Option<f64>,
    /// `‖u_ℓ − u_{ℓ−1}‖²_{H¹}` on the current mesh.
    pub increment_h1_sq: Option<f64>,
    pub fem: Option<FemComparison>,
    pub concentration: Option<Concentration>,
}

/// Solution of one level and the refinement leading to the next.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub solution: SolutionField,
    pub marked: MarkSet,
    pub refinement: Option<Refinement>,
}

#[derive(Debug)]
pub struct AdaptiveRun {
    pub trace: AdaptiveTrace,
    pub diagnostics: Vec<LevelDiagnostics>,
    pub snapshots: Vec<Snapshot>,
    /// Last mesh produced; refined past the last solve when the iteration cap ends the loop.
    pub final_mesh: Arc<Mesh>,
    pub final_solution: Option<SolutionField>,
    /// Error that ended the loop early; the trace holds the levels before it.
    pub failure: Option<Error>,
}

impl AdaptiveRun {
    pub fn quasi_orthogonality(&self) -> Result<Vec<f64>> {
        let increments: Vec<f64> = self
            .diagnostics
            .iter()
            .skip(1)
            .map_while(|d| d.increment_h1_sq)
            .collect();
        if increments.len() + 1 < self.diagnostics.len() {
            return Err(Error::InsufficientData(
                "solution increments were not recorded".into(),
            ));
        }
        let eta: Vec<f64> = self.trace.rows.iter().map(|r| r.eta).collect();
        quasi_orthogonality_ratios(&increments, &eta)
    }
}

/// `‖u_{k+1} − u_k‖²_{H¹}` between stored consecutive snapshots.
pub fn solution_increments(snapshots: &[Snapshot], rule: &TriangleRule) -> Result<Vec<f64>> {
    snapshots
        .windows(2)
        .map(|pair| {
            let refinement = pair[0]
                .refinement
                .as_ref()
                .ok_or_else(|| Error::InsufficientData("snapshot lacks its refinement".into()))?;
            let lifted = prolong(&pair[0].solution, refinement, pair[1].solution.mesh.clone())?;
            Ok(discrete_difference_norms(&pair[1].solution, &lifted, rule)
                .h1
                .powi(2))
        })
        .collect()
}

fn source_norm(mesh: &Mesh, problem: &Problem, rule: &TriangleRule) -> f64 {
    (0..mesh.num_triangles())
        .map(|t| rule.integrate(&mesh.corners(t), |x| (problem.source)(x).powi(2)))
        .sum::<f64>()
        .sqrt()
}

fn fem_comparison(
    mesh: &Arc<Mesh>,
    problem: &Problem,
    quad: &Quadrature,
    fvm_h1_error: f64,
    fvm_osc: f64,
) -> Result<FemComparison> {
    let system = assemble_fem(mesh, problem, quad)?;
    let (u, _) = solve(mesh, &system)?;
    let fem_h1_error = error_norms(&u, problem, &quad.triangle)?.h1;
    let fem_osc = compute_indicators(&u, problem, quad).osc();
    Ok(FemComparison {
        fvm_h1_error,
        fem_h1_error,
        fvm_osc,
        fem_osc,
        ratio: (fvm_h1_error + fvm_osc) / (fem_h1_error + fem_osc),
    })
}

/// Iterates solve, estimate, mark (estimator and oscillation criteria) and
/// refine from the initial mesh of `problem.domain`. In uniform mode every
/// element is refined into four.
///
/// Configuration errors are returned as `Err`; a failure inside the loop
/// ends it and is reported in [`AdaptiveRun::failure`] next to the partial trace.
pub fn adaptive_loop(problem: &Problem, config: &LoopConfig) -> Result<AdaptiveRun> {
    let marking = MarkingParams::new(config.marking.theta, config.marking.theta_prime)?;
    if config.max_iterations == 0 || config.max_elements == 0 {
        return Err(Error::InvalidParameter(
            "max_iterations and max_elements must be positive".into(),
        ));
    }
    let quad = &config.quadrature;
    let initial = build_initial_mesh(problem.domain, config.initial_subdivisions)?;
    let bounds = shape_class_bounds(&initial)?;
    let domain_area = problem.domain.area();
    let region = config.region.map(|r| (r, r.area_fraction(problem.domain)));
    let diag = config.diagnostics;

    let mut run = AdaptiveRun {
        trace: AdaptiveTrace::default(),
        diagnostics: Vec::new(),
        snapshots: Vec::new(),
        final_mesh: Arc::new(initial),
        final_solution: None,
        failure: None,
    };
    let mut previous: Option<(SolutionField, Refinement)> = None;
    for level in 0.. {
        let start = Instant::now();
        let mesh = run.final_mesh.clone();
        let step = (|| -> Result<_> {
            let dual = DualMesh::new(&mesh);
            let geometry = geometry_report(&mesh, &dual, domain_area, bounds);
            let system = assemble_fvm(&mesh, &dual, problem, quad)?;
            drop(dual);
            let (u, info) = solve(&mesh, &system)?;
            let indicators = compute_indicators(&u, problem, quad);
            let errors = match problem.exact {
                Some(_) => Some(error_norms(&u, problem, &quad.triangle)?),
                None => None,
            };
            let (m_eta, m) = match config.mode {
                RefinementMode::Adaptive => {
                    mark_two_stage(&indicators.eta_sq, &indicators.osc_sq, &marking)?
                }
                RefinementMode::Uniform => {
                    let all = MarkSet::all(mesh.num_triangles());
                    (all.clone(), all)
                }
            };

            let mut d = LevelDiagnostics {
                level,
                n_elements: mesh.num_triangles(),
                geometry,
                orthogonality_defect: None,
                source_l2: None,
                defect_identity: None,
                increment_h1_sq: None,
                fem: None,
                concentration: None,
            };
            if diag.orthogonality {
                d.orthogonality_defect = Some(check_discrete_orthogonality(&u, problem, quad).max);
                d.source_l2 = Some(source_norm(&mesh, problem, &quad.triangle));
            }
            if let Some((prev_u, refinement)) = &previous {
                if diag.defect_identity {
                    d.defect_identity = Some(
                        check_defect_identity(prev_u, refinement, &u, &system, problem, quad)?.max,
                    );
                }
                if diag.quasi_orthogonality {
                    let lifted = prolong(prev_u, refinement, mesh.clone())?;
                    d.increment_h1_sq = Some(
                        discrete_difference_norms(&u, &lifted, &quad.triangle)
                            .h1
                            .powi(2),
                    );
                }
            }
            if diag.fem_comparison {
                if let Some(e) = errors {
                    d.fem = Some(fem_comparison(
                        &mesh,
                        problem,
                        quad,
                        e.h1,
                        indicators.osc(),
                    )?);
                }
            }
            if let (Some((r, fraction)), RefinementMode::Adaptive) = (region, config.mode) {
                d.concentration = Some(concentration(&mesh, &m, &r, fraction));
            }

            let osc_in_eta: f64 = m_eta.iter().map(|t| indicators.osc_sq[t]).sum();
            let row = TraceRow {
                level,
                n_elements: mesh.num_triangles(),
                n_vertices: mesh.num_vertices(),
                eta: indicators.eta(),
                osc: indicators.osc(),
                h1_error: errors.map(|e| e.h1),
                l2_error: errors.map(|e| e.l2),
                n_marked_eta: m_eta.len(),
                n_marked_total: m.len(),
                mark_ratio: if m_eta.is_empty() {
                    1.0
                } else {
                    m.len() as f64 / m_eta.len() as f64
                },
                osc_fraction: if indicators.osc_sq_total > 0.0 {
                    osc_in_eta / indicators.osc_sq_total
                } else {
                    1.0
                },
                solve_residual: info.relative_residual,
                wall_time_s: None,
            };
            Ok((u, m, row, d))
        })();
        let (u, marked, mut row, d) = match step {
            Ok(s) => s,
            Err(e) => {
                run.failure = Some(e);
                break;
            }
        };

        let finished = mesh.num_triangles() >= config.max_elements || marked.is_empty();
        let refinement = if finished {
            None
        } else {
            let r = match config.mode {
                RefinementMode::Adaptive => refine(&mesh, &marked),
                RefinementMode::Uniform => uniform_refine(&mesh),
            };
            match r {
                Ok(r) => Some(r),
                Err(e) => {
                    run.failure = Some(e);
                    None
                }
            }
        };
        if config.record_timing {
            row.wall_time_s = Some(start.elapsed().as_secs_f64());
        }
        run.trace.rows.push(row);
        run.diagnostics.push(d);
        if config.keep_snapshots {
            run.snapshots.push(Snapshot {
                solution: u.clone(),
                marked,
                refinement: refinement.clone(),
            });
        }
        run.final_solution = Some(u.clone());
        let Some(refinement) = refinement else { break };
        run.final_mesh = Arc::new(refinement.mesh.clone());
        if level + 1 >= config.max_iterations {
            break;
        }
        previous = Some((u, refinement));
    }
    Ok(run)
}

#[cfg(test)]
mod tests;
