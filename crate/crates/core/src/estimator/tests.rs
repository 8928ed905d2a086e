use std::sync::Arc;

use approx::assert_relative_eq;
use proptest::prelude::*;

use super::*;
use crate::fvm::{assemble_fvm, solve};
use crate::mesh::{
    build_initial_mesh, refine, uniform_refine, Domain, DualMesh, MarkSet, Refinement, Triangle,
};
use crate::problem::{smooth_problem, triangle_quadrature};

fn corner_refined(domain: Domain, steps: usize) -> Mesh {
    let mut mesh = build_initial_mesh(domain, 1).unwrap();
    for _ in 0..steps {
        let marked: MarkSet = (0..mesh.num_triangles())
            .filter(|&t| {
                let c = mesh.centroid(t);
                c[0].hypot(c[1]) < 0.4
            })
            .collect();
        mesh = refine(&mesh, &marked).unwrap().mesh;
    }
    mesh
}

fn fvm(mesh: &Arc<Mesh>, problem: &Problem) -> (SolutionField, crate::fvm::LinearSystem) {
    let system = assemble_fvm(mesh, &DualMesh::new(mesh), problem, &Quadrature::default()).unwrap();
    (solve(mesh, &system).unwrap().0, system)
}

/// Constant anisotropic diffusion, constant drift, no reaction, constant source.
fn polynomial_problem() -> Problem {
    Problem::new("poly", Domain::LShape)
        .with_diffusion(|_| [[2.0, 0.3], [0.3, 1.0]], None)
        .with_convection(|_| [1.0, -0.5], |_| 0.0)
        .with_source(|_| 1.0)
        .with_dirichlet(|x| x[0] - 0.5 * x[1])
}

#[test]
fn residual_vanishes_for_affine_laplace_data() {
    let mesh = Arc::new(corner_refined(Domain::LShape, 2));
    let problem =
        Problem::new("laplace", Domain::LShape).with_diffusion(|_| [[3.0, 1.0], [1.0, 2.0]], None);
    let u = SolutionField::interpolate(mesh.clone(), |x| 4.0 * x[0] - x[1] + 2.0);
    let rule = triangle_quadrature(4).unwrap();
    for t in 0..mesh.num_triangles() {
        assert!(element_residual(&problem, &u, t, &rule)
            .iter()
            .all(|r| r.abs() <= 1e-9));
    }
    let field = compute_indicators(&u, &problem, &Quadrature::default());
    assert!(field.eta_sq_total <= 1e-20);
}

#[test]
fn residual_of_zero_field_is_the_source() {
    let mesh = Arc::new(build_initial_mesh(Domain::UnitSquare, 1).unwrap());
    let problem = smooth_problem().with_source(|_| 1.0);
    let u = SolutionField::interpolate(mesh.clone(), |_| 0.0);
    let rule = triangle_quadrature(3).unwrap();
    for t in 0..mesh.num_triangles() {
        assert!(element_residual(&problem, &u, t, &rule)
            .iter()
            .all(|&r| r == 1.0));
    }
}

/// `f − div(−A∇u_T + b u_T) − c u_T` by Richardson-extrapolated central differences.
fn fd_residual(problem: &Problem, u: &SolutionField, t: usize, x: Point) -> f64 {
    let g = u.gradient(t);
    let v = u.mesh.triangles[t].vertices[0];
    let p0 = u.mesh.vertices[v];
    let affine = |y: Point| u.values[v] + g[0] * (y[0] - p0[0]) + g[1] * (y[1] - p0[1]);
    let flux = |y: Point| {
        let a = (problem.diffusion)(y);
        let b = (problem.convection)(y);
        let uy = affine(y);
        [
            -(a[0][0] * g[0] + a[0][1] * g[1]) + b[0] * uy,
            -(a[1][0] * g[0] + a[1][1] * g[1]) + b[1] * uy,
        ]
    };
    let div = |h: f64| {
        let dx = (flux([x[0] + h, x[1]])[0] - flux([x[0] - h, x[1]])[0]) / (2.0 * h);
        let dy = (flux([x[0], x[1] + h])[1] - flux([x[0], x[1] - h])[1]) / (2.0 * h);
        dx + dy
    };
    let h = 1e-3;
    let div = (4.0 * div(h / 2.0) - div(h)) / 3.0;
    (problem.source)(x) - div - (problem.reaction)(x) * affine(x)
}

#[test]
fn element_residual_matches_finite_difference_oracle() {
    let problem = smooth_problem();
    let exact = problem.exact.clone().unwrap();
    let mesh = Arc::new(
        uniform_refine(&build_initial_mesh(Domain::UnitSquareShifted, 1).unwrap())
            .unwrap()
            .mesh,
    );
    let u = SolutionField::interpolate(mesh.clone(), |x| (exact.value)(x));
    let rule = triangle_quadrature(4).unwrap();
    for t in 0..mesh.num_triangles() {
        let jac = 2.0 * mesh.area(t);
        let r = element_residual(&problem, &u, t, &rule);
        let integral: f64 = r.iter().zip(&rule.weights).map(|(r, w)| w * jac * r).sum();
        let magnitude: f64 = r
            .iter()
            .zip(&rule.weights)
            .map(|(r, w)| w * jac * r.abs())
            .sum();
        let oracle: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(b, w)| w * jac * fd_residual(&problem, &u, t, mesh.map_point(t, *b)))
            .sum();
        assert!(
            (integral - oracle).abs() <= 1e-4 * magnitude,
            "t={t}: {integral} vs {oracle}"
        );
    }
}

#[test]
fn jump_vanishes_for_affine_field_and_continuous_diffusion() {
    let mesh = Arc::new(corner_refined(Domain::LShape, 3));
    let problem = crate::problem::lshape_problem();
    let u = SolutionField::interpolate(mesh.clone(), |x| 1.0 + x[0] + 2.0 * x[1]);
    let rule = crate::problem::segment_quadrature(4).unwrap();
    for e in 0..mesh.edges.len() {
        if let Ok(owners) = facet_owners(&mesh, e) {
            let j = facet_jump(&problem, &u, e, owners, &rule).unwrap();
            assert!(j.iter().all(|v| v.abs() <= 1e-12));
        }
    }
}

#[test]
fn hat_function_jump_by_hand() {
    // 4x4 squares of side s = 1/4 split along the SW-NE diagonal; hat at
    // z = (1/2, 1/2). Across the edge z -> z + (s, 0) the gradient is
    // (-1/s, 1/s) below and (-1/s, 0) above, so the gradient difference has
    // normal component ±1/s = ±4, positive when n points upwards.
    let mesh = Arc::new(build_initial_mesh(Domain::UnitSquare, 1).unwrap());
    let z = mesh.vertices.iter().position(|p| *p == [0.5, 0.5]).unwrap();
    let w = mesh
        .vertices
        .iter()
        .position(|p| *p == [0.75, 0.5])
        .unwrap();
    let e = mesh
        .edges
        .iter()
        .position(|e| e.vertices == [z.min(w), z.max(w)])
        .unwrap();
    let u = SolutionField::new(
        mesh.clone(),
        (0..mesh.num_vertices())
            .map(|i| f64::from(i == z))
            .collect(),
    );
    let problem = Problem::new("laplace", Domain::UnitSquare);
    let owners = facet_owners(&mesh, e).unwrap();
    let (below, above) = if mesh.centroid(owners[0])[1] < mesh.centroid(owners[1])[1] {
        (owners[0], owners[1])
    } else {
        (owners[1], owners[0])
    };
    let rule = crate::problem::segment_quadrature(2).unwrap();
    let up = facet_jump(&problem, &u, e, [below, above], &rule).unwrap();
    let down = facet_jump(&problem, &u, e, [above, below], &rule).unwrap();
    let expected = if below == owners[0] { 4.0 } else { -4.0 };
    for (a, b) in up.iter().zip(&down) {
        assert_relative_eq!(*a, expected, max_relative = 1e-14);
        assert_eq!(*a, -*b);
    }
    // edges away from the support of the hat carry no jump
    let far = mesh
        .edges
        .iter()
        .position(|e| e.vertices.iter().all(|&v| mesh.vertices[v][0] <= 0.25))
        .unwrap();
    if let Ok(o) = facet_owners(&mesh, far) {
        assert!(facet_jump(&problem, &u, far, o, &rule)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
    }
}

#[test]
fn boundary_facets_are_rejected() {
    let mesh = Arc::new(build_initial_mesh(Domain::UnitSquare, 1).unwrap());
    let e = mesh.edges.iter().position(|e| e.is_boundary()).unwrap();
    let u = SolutionField::interpolate(mesh.clone(), |_| 0.0);
    let t = mesh.edges[e].owners.0;
    let rule = crate::problem::segment_quadrature(2).unwrap();
    let problem = Problem::new("laplace", Domain::UnitSquare);
    assert!(matches!(
        facet_jump(&problem, &u, e, [t, t], &rule),
        Err(Error::BoundaryFacet(_))
    ));
}

#[test]
fn oscillation_on_reference_triangle() {
    // R = x - 1/3 has zero mean on the reference triangle and
    // ∫ (x - 1/3)^2 = 1/12 - 1/9 + 1/18 = 1/36; h_T^2 = |T| = 1/2.
    let mesh = Arc::new(
        Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![Triangle::new([0, 1, 2], 1)],
            0,
        )
        .unwrap(),
    );
    let u = SolutionField::interpolate(mesh.clone(), |_| 0.0);
    let quad = Quadrature::default();
    let centered = compute_indicators(
        &u,
        &Problem::new("c", Domain::UnitSquare).with_source(|x| x[0] - 1.0 / 3.0),
        &quad,
    );
    assert_relative_eq!(centered.osc_sq[0], 1.0 / 72.0, max_relative = 1e-13);
    assert_relative_eq!(centered.eta_sq[0], 1.0 / 72.0, max_relative = 1e-13);
    // R = x: ∫ x^2 = 1/12, oscillation unchanged
    let raw = compute_indicators(
        &u,
        &Problem::new("r", Domain::UnitSquare).with_source(|x| x[0]),
        &quad,
    );
    assert_relative_eq!(raw.eta_sq[0], 1.0 / 24.0, max_relative = 1e-13);
    assert_relative_eq!(raw.osc_sq[0], 1.0 / 72.0, max_relative = 1e-13);
}

#[test]
fn constant_residual_and_jumps_have_no_oscillation() {
    let mesh = Arc::new(corner_refined(Domain::UnitSquareShifted, 2));
    let problem = Problem::new("f=1", Domain::UnitSquareShifted).with_source(|_| 1.0);
    let u = SolutionField::interpolate(mesh.clone(), |x| (5.0 * x[0]).sin() * x[1]);
    let field = compute_indicators(&u, &problem, &Quadrature::default());
    assert!(field.eta_sq_total > 0.0);
    assert!(field.osc_sq.iter().all(|&o| o <= 1e-28));
}

#[test]
fn indicators_are_deterministic_and_dump_to_csv() {
    let problem = smooth_problem();
    let mesh = Arc::new(corner_refined(Domain::UnitSquareShifted, 3));
    let (u, _) = fvm(&mesh, &problem);
    let quad = Quadrature::default();
    let a = compute_indicators(&u, &problem, &quad);
    let b = compute_indicators(&u, &problem, &quad);
    assert_eq!(a, b);
    let mut buf = Vec::new();
    a.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("element_id,eta_sq,osc_sq"));
    assert_eq!(text.lines().count(), mesh.num_triangles() + 1);
}

#[test]
fn orthogonality_is_exact_for_polynomial_data() {
    let problem = polynomial_problem();
    let mesh = Arc::new(corner_refined(Domain::LShape, 4));
    let (u, system) = fvm(&mesh, &problem);
    let defects = check_discrete_orthogonality(&u, &problem, &Quadrature::default());
    assert!(defects.max <= 1e-10, "{:e}", defects.max);

    // a field that does not solve the scheme reproduces its box residual
    let v = SolutionField::interpolate(mesh.clone(), |x| (3.0 * x[0] * x[1]).cos());
    let defects = check_discrete_orthogonality(&v, &problem, &Quadrature::default());
    let balance = system.balance_residual(&mesh, &v.values);
    assert!(defects.max > 1e-3);
    for (d, r) in defects.per_vertex.iter().zip(&balance) {
        assert!((d - r).abs() <= 1e-10);
    }
}

#[test]
fn defect_identity_on_trivial_and_uniform_refinements() {
    let quad = Quadrature::default();
    let problem = polynomial_problem();
    let coarse_mesh = Arc::new(corner_refined(Domain::LShape, 2));
    let (coarse, coarse_system) = fvm(&coarse_mesh, &problem);

    let same = Refinement::identity(&coarse_mesh);
    let d =
        check_defect_identity(&coarse, &same, &coarse, &coarse_system, &problem, &quad).unwrap();
    let orth = check_discrete_orthogonality(&coarse, &problem, &quad);
    assert!(d.max <= orth.max + 1e-12);

    let laplace = Problem::new("laplace", Domain::LShape).with_source(|_| 1.0);
    let (coarse, _) = fvm(&coarse_mesh, &laplace);
    let r = uniform_refine(&coarse_mesh).unwrap();
    let fine_mesh = Arc::new(r.mesh.clone());
    let (fine, fine_system) = fvm(&fine_mesh, &laplace);
    let d = check_defect_identity(&coarse, &r, &fine, &fine_system, &laplace, &quad).unwrap();
    assert!(d.max <= 1e-10, "{:e}", d.max);
}

#[test]
fn defect_identity_rejects_foreign_fields() {
    let quad = Quadrature::default();
    let problem = polynomial_problem();
    let mesh = Arc::new(corner_refined(Domain::LShape, 1));
    let (u, system) = fvm(&mesh, &problem);
    let r = uniform_refine(&mesh).unwrap();
    assert!(matches!(
        check_defect_identity(&u, &r, &u, &system, &problem, &quad),
        Err(Error::NotNested(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn oscillation_never_exceeds_indicator(
        values in prop::collection::vec(-2.0f64..2.0, 200),
        steps in 0usize..3,
    ) {
        let mesh = Arc::new(corner_refined(Domain::LShape, steps));
        let u = SolutionField::new(
            mesh.clone(),
            (0..mesh.num_vertices()).map(|i| values[i % values.len()]).collect(),
        );
        let field = compute_indicators(&u, &crate::problem::lshape_problem(), &Quadrature::default());
        for (e, o) in field.eta_sq.iter().zip(&field.osc_sq) {
            prop_assert!(*o >= 0.0);
            prop_assert!(o.sqrt() <= e.sqrt() * (1.0 + 1e-13));
        }
        let total: f64 = field.eta_sq.iter().sum();
        prop_assert_eq!(total, field.eta_sq_total);
    }
}
