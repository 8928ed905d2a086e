//! Coefficient data of `div(-A grad u + b u) + c u = f` with Dirichlet data `g`.

mod benchmarks;
pub mod quadrature;

pub use benchmarks::{
    convection_problem, lshape_problem, problem_by_key, smooth_problem, PROBLEM_KEYS,
};
pub use quadrature::{
    segment_quadrature, triangle_quadrature, FluxRule, Quadrature, QuadratureRule, SegmentRule,
    TriangleRule,
};

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::mesh::{Domain, Mesh, Point};

pub type Mat2 = [[f64; 2]; 2];
pub type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Point) -> Point + Send + Sync>;
pub type MatrixField = Arc<dyn Fn(Point) -> Mat2 + Send + Sync>;

#[derive(Clone)]
pub struct ExactSolution {
    pub value: ScalarField,
    pub gradient: VectorField,
}

/// PDE data. `diffusion` must be symmetric; `convection_divergence` must be
/// the divergence of `convection`.
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub domain: Domain,
    pub diffusion: MatrixField,
    /// Row-wise divergence of `A`; finite differences are used when absent.
    pub diffusion_divergence: Option<VectorField>,
    pub convection: VectorField,
    pub convection_divergence: ScalarField,
    pub reaction: ScalarField,
    pub source: ScalarField,
    pub dirichlet: ScalarField,
    pub exact: Option<ExactSolution>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("has_exact", &self.exact.is_some())
            .finish_non_exhaustive()
    }
}

impl Problem {
    /// `-Δu = 0` with zero boundary data on `domain`.
    pub fn new(name: impl Into<String>, domain: Domain) -> Self {
        Self {
            name: name.into(),
            domain,
            diffusion: Arc::new(|_| [[1.0, 0.0], [0.0, 1.0]]),
            diffusion_divergence: Some(Arc::new(|_| [0.0, 0.0])),
            convection: Arc::new(|_| [0.0, 0.0]),
            convection_divergence: Arc::new(|_| 0.0),
            reaction: Arc::new(|_| 0.0),
            source: Arc::new(|_| 0.0),
            dirichlet: Arc::new(|_| 0.0),
            exact: None,
        }
    }

    /// Sets `A`; pass `None` for the divergence to fall back on finite differences.
    pub fn with_diffusion(
        mut self,
        a: impl Fn(Point) -> Mat2 + Send + Sync + 'static,
        div_a: Option<VectorField>,
    ) -> Self {
        self.diffusion = Arc::new(a);
        self.diffusion_divergence = div_a;
        self
    }

    pub fn with_convection(
        mut self,
        b: impl Fn(Point) -> Point + Send + Sync + 'static,
        div_b: impl Fn(Point) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.convection = Arc::new(b);
        self.convection_divergence = Arc::new(div_b);
        self
    }

    pub fn with_reaction(mut self, c: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        self.reaction = Arc::new(c);
        self
    }

    pub fn with_source(mut self, f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        self.source = Arc::new(f);
        self
    }

    pub fn with_dirichlet(mut self, g: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        self.dirichlet = Arc::new(g);
        self
    }

    /// Sets the exact solution and uses its trace as Dirichlet data.
    pub fn with_exact(
        mut self,
        u: impl Fn(Point) -> f64 + Send + Sync + 'static,
        grad_u: impl Fn(Point) -> Point + Send + Sync + 'static,
    ) -> Self {
        let value: ScalarField = Arc::new(u);
        self.dirichlet = value.clone();
        self.exact = Some(ExactSolution {
            value,
            gradient: Arc::new(grad_u),
        });
        self
    }

    /// Row-wise divergence of `A` at `x`; central differences with step
    /// `step` when no closed form was supplied.
    pub fn div_diffusion(&self, x: Point, step: f64) -> Point {
        match &self.diffusion_divergence {
            Some(d) => d(x),
            None => {
                let a = &self.diffusion;
                let ax = |s: f64| a([x[0] + s, x[1]]);
                let ay = |s: f64| a([x[0], x[1] + s]);
                let (xp, xm, yp, ym) = (ax(step), ax(-step), ay(step), ay(-step));
                let h2 = 2.0 * step;
                [
                    (xp[0][0] - xm[0][0]) / h2 + (yp[0][1] - ym[0][1]) / h2,
                    (xp[1][0] - xm[1][0]) / h2 + (yp[1][1] - ym[1][1]) / h2,
                ]
            }
        }
    }
}

/// Eigenvalues `(min, max)` of a symmetric 2x2 matrix.
pub fn symmetric_eigenvalues(a: &Mat2) -> (f64, f64) {
    let mean = 0.5 * (a[0][0] + a[1][1]);
    let radius = (0.5 * (a[0][0] - a[1][1])).hypot(0.5 * (a[0][1] + a[1][0]));
    (mean - radius, mean + radius)
}

/// Sampled data-assumption diagnostics.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AssumptionReport {
    /// `min_x λ_min(A(x))`
    pub lambda_min: f64,
    /// `max_x λ_max(A(x))`
    pub lambda_max: f64,
    /// `max_x λ_min(A(x))`
    pub max_lambda_min: f64,
    /// `min_x (div b / 2 + c)`
    pub min_half_divb_plus_c: f64,
    /// Largest `|A_12 - A_21|` seen.
    pub max_asymmetry: f64,
    pub samples: usize,
}

impl AssumptionReport {
    pub fn is_elliptic(&self) -> bool {
        self.lambda_min > 0.0 && self.max_asymmetry == 0.0
    }

    pub fn drift_condition_holds(&self) -> bool {
        self.min_half_divb_plus_c >= 0.0
    }
}

/// Samples `A`, `b` and `c` at every mesh vertex and at the points of a
/// triangle rule with at least `samples_per_element` points in every element.
pub fn check_assumptions(
    problem: &Problem,
    mesh: &Mesh,
    samples_per_element: usize,
) -> AssumptionReport {
    let rule = (1..=quadrature::MAX_DEGREE)
        .map(|d| triangle_quadrature(d).expect("degree in range"))
        .find(|r| r.len() >= samples_per_element.max(1))
        .unwrap_or_else(|| triangle_quadrature(quadrature::MAX_DEGREE).expect("degree in range"));
    let mut report = AssumptionReport {
        lambda_min: f64::INFINITY,
        lambda_max: f64::NEG_INFINITY,
        max_lambda_min: f64::NEG_INFINITY,
        min_half_divb_plus_c: f64::INFINITY,
        max_asymmetry: 0.0,
        samples: 0,
    };
    let mut sample = |x: Point| {
        let a = (problem.diffusion)(x);
        let (lo, hi) = symmetric_eigenvalues(&a);
        report.lambda_min = report.lambda_min.min(lo);
        report.lambda_max = report.lambda_max.max(hi);
        report.max_lambda_min = report.max_lambda_min.max(lo);
        report.max_asymmetry = report.max_asymmetry.max((a[0][1] - a[1][0]).abs());
        let drift = 0.5 * (problem.convection_divergence)(x) + (problem.reaction)(x);
        report.min_half_divb_plus_c = report.min_half_divb_plus_c.min(drift);
        report.samples += 1;
    };
    mesh.vertices.iter().for_each(|&p| sample(p));
    for t in 0..mesh.num_triangles() {
        let corners = mesh.corners(t);
        for b in &rule.points {
            sample(quadrature::map_barycentric(&corners, b));
        }
    }
    report
}
