use std::sync::Arc;

use approx::assert_relative_eq;
use proptest::prelude::*;

use super::*;
use crate::mesh::{
    build_initial_mesh, refine, uniform_refine, Domain, DualMesh, MarkSet, Mesh, Triangle,
};
use crate::problem::{smooth_problem, triangle_quadrature, FluxRule, Quadrature};

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

fn uniform(domain: Domain, levels: usize) -> Mesh {
    let mut mesh = build_initial_mesh(domain, 1).unwrap();
    for _ in 0..levels {
        mesh = uniform_refine(&mesh).unwrap().mesh;
    }
    mesh
}

fn fvm_system(mesh: &Mesh, problem: &Problem) -> LinearSystem {
    assemble_fvm(mesh, &DualMesh::new(mesh), problem, &Quadrature::default()).unwrap()
}

fn fvm_solution(mesh: Mesh, problem: &Problem) -> SolutionField {
    let mesh = Arc::new(mesh);
    let system = fvm_system(&mesh, problem);
    solve(&mesh, &system).unwrap().0
}

fn fem_solution(mesh: Mesh, problem: &Problem) -> SolutionField {
    let mesh = Arc::new(mesh);
    let system = assemble_fem(&mesh, problem, &Quadrature::default()).unwrap();
    solve(&mesh, &system).unwrap().0
}

#[test]
fn laplace_box_matrix_equals_stiffness_matrix() {
    // piecewise constant diffusion aligned with the initial mesh
    let piecewise = Problem::new("pw", Domain::LShape).with_diffusion(
        |x| {
            if x[0] > 0.0 {
                [[3.0, 1.0], [1.0, 2.0]]
            } else {
                [[1.0, 0.0], [0.0, 1.0]]
            }
        },
        None,
    );
    for (mesh, problem) in [
        (
            uniform(Domain::UnitSquare, 2),
            Problem::new("laplace", Domain::UnitSquare),
        ),
        (
            corner_refined(Domain::LShape, 5),
            Problem::new("laplace", Domain::LShape),
        ),
        (corner_refined(Domain::LShape, 4), piecewise),
    ] {
        let fvm = fvm_system(&mesh, &problem);
        let fem = assemble_fem(&mesh, &problem, &Quadrature::default()).unwrap();
        assert!(fvm.matrix.max_abs_diff(&fem.matrix) <= 1e-13);
    }
}

#[test]
fn flux_rules_agree_for_constant_coefficients() {
    let mesh = corner_refined(Domain::LShape, 4);
    let dual = DualMesh::new(&mesh);
    let system = |problem: &Problem, flux| {
        assemble_fvm(
            &mesh,
            &dual,
            problem,
            &Quadrature::default().with_flux(flux),
        )
        .unwrap()
    };
    // the flux integrand is affine along each segment
    let constant = Problem::new("const", Domain::LShape)
        .with_diffusion(|_| [[2.0, 0.5], [0.5, 1.0]], None)
        .with_convection(|_| [1.0, -2.0], |_| 0.0);
    let (a, b) = (
        system(&constant, FluxRule::Midpoint),
        system(&constant, FluxRule::Gauss),
    );
    assert!(a.matrix.max_abs_diff(&b.matrix) <= 1e-13);
    let smooth = Problem {
        domain: Domain::LShape,
        ..smooth_problem()
    };
    let (a, b) = (
        system(&smooth, FluxRule::Midpoint),
        system(&smooth, FluxRule::Gauss),
    );
    assert!(a.matrix.max_abs_diff(&b.matrix) > 1e-8);
}

#[test]
fn unit_source_gives_box_areas() {
    let mesh = corner_refined(Domain::LShape, 3);
    let dual = DualMesh::new(&mesh);
    let problem = Problem::new("f=1", Domain::LShape).with_source(|_| 1.0);
    let system = fvm_system(&mesh, &problem);
    for (r, &v) in system.unknowns.iter().enumerate() {
        assert_relative_eq!(system.rhs[r], dual.box_areas[v], max_relative = 1e-13);
    }
}

#[test]
fn constant_field_has_zero_balance() {
    let mesh = corner_refined(Domain::UnitSquareShifted, 3);
    let problem = Problem::new("const", Domain::UnitSquareShifted)
        .with_diffusion(|x| [[2.0 + x[0], 0.5], [0.5, 1.0 + x[1] * x[1]]], None)
        .with_dirichlet(|_| 1.0);
    let system = fvm_system(&mesh, &problem);
    let ones = vec![1.0; mesh.num_vertices()];
    assert!(system
        .balance_residual(&mesh, &ones)
        .iter()
        .all(|r| r.abs() <= 1e-13));
    let x = system.restrict(&ones);
    let ax = system.matrix.mul_vec(&x);
    for (a, b) in ax.iter().zip(&system.rhs) {
        assert!((a - b).abs() <= 1e-13);
    }
}

#[test]
fn single_interior_vertex_by_hand() {
    // four right isosceles triangles around (1/2, 1/2): stiffness diagonal
    // 4 * (cot 45° + cot 45°) / 2 = 4, box area 4 * (1/4) / 3 = 1/3
    let mesh = Mesh::new(
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]],
        vec![
            Triangle::new([0, 1, 4], 0),
            Triangle::new([1, 2, 4], 0),
            Triangle::new([2, 3, 4], 0),
            Triangle::new([3, 0, 4], 0),
        ],
        0,
    )
    .unwrap();
    let problem = Problem::new("1x1", Domain::UnitSquare).with_source(|_| 1.0);
    let system = fvm_system(&mesh, &problem);
    assert_eq!(system.num_unknowns(), 1);
    assert_relative_eq!(system.matrix.get(0, 0), 4.0, max_relative = 1e-14);
    assert_relative_eq!(system.rhs[0], 1.0 / 3.0, max_relative = 1e-14);
    let u = fvm_solution(mesh, &problem);
    assert_relative_eq!(u.values[4], 1.0 / 12.0, max_relative = 1e-14);
    assert_eq!(&u.values[..4], &[0.0; 4]);
}

#[test]
fn affine_solutions_are_reproduced() {
    let ell = |x: Point| 2.0 * x[0] - 3.0 * x[1] + 1.0;
    let mesh = corner_refined(Domain::LShape, 5);
    let problem = Problem::new("affine", Domain::LShape).with_exact(ell, |_| [2.0, -3.0]);
    let interp = SolutionField::interpolate(Arc::new(mesh.clone()), ell);
    let system = fvm_system(&mesh, &problem);
    assert!(system
        .balance_residual(&mesh, &interp.values)
        .iter()
        .all(|r| r.abs() <= 1e-12));
    let u = fvm_solution(mesh, &problem);
    for (a, b) in u.values.iter().zip(&interp.values) {
        assert!((a - b).abs() <= 1e-12);
    }
    let rule = triangle_quadrature(4).unwrap();
    assert!(error_norms(&u, &problem, &rule).unwrap().h1 <= 1e-12);
}

#[test]
fn computed_solution_balances_every_box() {
    let problem = smooth_problem();
    let mesh = Arc::new(corner_refined(Domain::UnitSquareShifted, 4));
    let system = fvm_system(&mesh, &problem);
    let (u, info) = solve(&mesh, &system).unwrap();
    assert!(info.relative_residual <= RESIDUAL_TOLERANCE);
    let scale = system.load.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let worst = system
        .balance_residual(&mesh, &u.values)
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(worst <= 1e-9 * scale, "{worst:e}");
}

#[test]
fn smooth_problem_converges_at_expected_rates() {
    let problem = smooth_problem();
    let rule = triangle_quadrature(6).unwrap();
    let errors: Vec<ErrorNorms> = (1..=4)
        .map(|level| {
            let u = fvm_solution(uniform(Domain::UnitSquareShifted, level), &problem);
            error_norms(&u, &problem, &rule).unwrap()
        })
        .collect();
    let last = errors.len() - 1;
    let h1_ratio = errors[last - 1].h1 / errors[last].h1;
    assert!((1.7..=2.3).contains(&h1_ratio), "{errors:?}");
    // observed L2 order from three nested meshes
    let order = (errors[last - 1].l2 / errors[last].l2).log2();
    assert!(order >= 1.8, "L2 order {order}");
}

#[test]
fn fem_and_fvm_are_both_first_order_and_close() {
    let problem = smooth_problem();
    let rule = triangle_quadrature(6).unwrap();
    let mut previous: Option<(f64, f64)> = None;
    for level in 2..=4 {
        let mesh = uniform(Domain::UnitSquareShifted, level);
        let fvm = fvm_solution(mesh.clone(), &problem);
        let fem = fem_solution(mesh, &problem);
        let e_fvm = error_norms(&fvm, &problem, &rule).unwrap().h1;
        let e_fem = error_norms(&fem, &problem, &rule).unwrap().h1;
        let gap = discrete_difference_norms(&fvm, &fem, &rule).h1;
        assert!(gap <= e_fvm + e_fem);
        if let Some((p_fvm, p_fem)) = previous {
            assert!((1.7..=2.3).contains(&(p_fvm / e_fvm)));
            assert!((1.7..=2.3).contains(&(p_fem / e_fem)));
        }
        previous = Some((e_fvm, e_fem));
    }
}

#[test]
fn fem_matrix_is_symmetric_without_convection() {
    let mesh = corner_refined(Domain::UnitSquareShifted, 3);
    let mut problem = smooth_problem();
    problem.convection = Arc::new(|_| [0.0, 0.0]);
    problem.convection_divergence = Arc::new(|_| 0.0);
    let system = assemble_fem(&mesh, &problem, &Quadrature::default()).unwrap();
    assert!(system.matrix.max_abs_diff(&system.matrix.transpose()) <= 1e-13);
}

#[test]
fn dual_interpolant_of_constant() {
    let mesh = Arc::new(corner_refined(Domain::LShape, 2));
    let dual = DualMesh::new(&mesh);
    let v = SolutionField::interpolate(mesh, |_| 3.0);
    assert!(interpolate_dual(&v, &dual).iter().all(|&c| c == 3.0));
}

#[test]
fn dual_interpolant_preserves_element_and_facet_means() {
    let mesh = Arc::new(corner_refined(Domain::LShape, 3));
    let dual = DualMesh::new(&mesh);
    let v = SolutionField::interpolate(mesh.clone(), |x| (3.0 * x[0]).sin() + x[1] * x[1]);
    let star = interpolate_dual(&v, &dual);
    let quad = Quadrature::default();
    for t in 0..mesh.num_triangles() {
        let verts = mesh.triangles[t].vertices;
        let corners = mesh.corners(t);
        let exact = quad.triangle.integrate(&corners, |x| {
            let lam = barycentric_of(&corners, x);
            (0..3).map(|k| lam[k] * v.values[verts[k]]).sum()
        });
        let boxes: f64 = (0..3)
            .map(|k| dual.sub_volumes[t][k] * star[verts[k]])
            .sum();
        assert!((exact - boxes).abs() <= 1e-13 * mesh.area(t).max(1e-300) * 10.0);
    }
    for e in &mesh.edges {
        let [a, b] = e.vertices;
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let m = crate::mesh::midpoint(&pa, &pb);
        let line = |x: Point| {
            let s = crate::mesh::dist(&pa, &x) / crate::mesh::dist(&pa, &pb);
            (1.0 - s) * v.values[a] + s * v.values[b]
        };
        let exact = quad.segment.integrate(pa, pb, line);
        let halves =
            quad.segment.integrate(pa, m, |_| star[a]) + quad.segment.integrate(m, pb, |_| star[b]);
        assert!((exact - halves).abs() <= 1e-14);
    }
}

fn barycentric_of(p: &[Point; 3], x: Point) -> [f64; 3] {
    let area = crate::mesh::signed_area(&p[0], &p[1], &p[2]);
    [
        crate::mesh::signed_area(&x, &p[1], &p[2]) / area,
        crate::mesh::signed_area(&p[0], &x, &p[2]) / area,
        crate::mesh::signed_area(&p[0], &p[1], &x) / area,
    ]
}

#[test]
fn prolongation_represents_the_same_function() {
    let coarse = Arc::new(corner_refined(Domain::LShape, 2));
    let marked: MarkSet = (0..coarse.num_triangles()).step_by(3).collect();
    let r = refine(&coarse, &marked).unwrap();
    let fine = Arc::new(r.mesh.clone());
    let rule = triangle_quadrature(2).unwrap();

    let u = SolutionField::interpolate(coarse.clone(), |x| (2.0 * x[0]).cos() * x[1]);
    let p = prolong(&u, &r, fine.clone()).unwrap();
    let (nc, nf) = (field_norms(&u, &rule), field_norms(&p, &rule));
    assert!((nc.h1 - nf.h1).abs() <= 1e-13 * nc.h1);
    assert!((nc.l2 - nf.l2).abs() <= 1e-12 * nc.l2);

    let ell = |x: Point| 1.5 - x[0] + 4.0 * x[1];
    let affine = prolong(&SolutionField::interpolate(coarse, ell), &r, fine.clone()).unwrap();
    for (v, p) in affine.values.iter().zip(&fine.vertices) {
        assert!((v - ell(*p)).abs() <= 1e-14);
    }
}

#[test]
fn prolongation_rejects_foreign_meshes() {
    let coarse = Arc::new(corner_refined(Domain::LShape, 1));
    let other = Arc::new(build_initial_mesh(Domain::UnitSquare, 1).unwrap());
    let r = uniform_refine(&other).unwrap();
    let u = SolutionField::interpolate(coarse, |_| 1.0);
    assert!(matches!(
        prolong(&u, &r, Arc::new(r.mesh.clone())),
        Err(Error::NotNested(_))
    ));
}

#[test]
fn degenerate_triangle_aborts_assembly() {
    let mut mesh = build_initial_mesh(Domain::UnitSquare, 1).unwrap();
    let t = mesh.triangles[0].vertices;
    mesh.vertices[t[2]] = crate::mesh::midpoint(&mesh.vertices[t[0]], &mesh.vertices[t[1]]);
    let problem = Problem::new("laplace", Domain::UnitSquare);
    let err = assemble_fvm(
        &mesh,
        &DualMesh::new(&mesh),
        &problem,
        &Quadrature::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::DegenerateTriangle { .. }));
}

#[test]
fn singular_system_is_reported_with_mesh_statistics() {
    let mesh = Arc::new(uniform(Domain::UnitSquare, 1));
    let problem = Problem::new("zero", Domain::UnitSquare)
        .with_diffusion(|_| [[0.0, 0.0], [0.0, 0.0]], None)
        .with_source(|_| 1.0);
    let system = fvm_system(&mesh, &problem);
    match solve(&mesh, &system) {
        Err(Error::SolverFailure {
            n_elements,
            n_unknowns,
            ..
        }) => {
            assert_eq!(n_elements, mesh.num_triangles());
            assert_eq!(n_unknowns, system.num_unknowns());
        }
        other => panic!("expected a solver failure, got {other:?}"),
    }
}

#[test]
fn solution_export_format() {
    let mesh = Arc::new(build_initial_mesh(Domain::UnitSquare, 1).unwrap());
    let u = SolutionField::interpolate(mesh.clone(), |x| x[0]);
    let mut buf = Vec::new();
    u.write(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), mesh.num_vertices());
    let (id, value) = text.lines().nth(1).unwrap().split_once(' ').unwrap();
    assert_eq!(id, "1");
    assert_eq!(value.parse::<f64>().unwrap(), mesh.vertices[1][0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fvm_rows_annihilate_constants_without_reaction(
        steps in 0usize..4,
        a11 in 0.5f64..4.0,
        a12 in -0.4f64..0.4,
        bx in -2.0f64..2.0,
    ) {
        // with div b = 0 and c = 0 a constant has no net flux through a closed box
        let mesh = corner_refined(Domain::UnitSquareShifted, steps);
        let problem = Problem::new("p", Domain::UnitSquareShifted)
            .with_diffusion(move |_| [[a11, a12], [a12, 1.0]], None)
            .with_convection(move |_| [bx, 0.0], |_| 0.0);
        let system = fvm_system(&mesh, &problem);
        let bu = system.apply(&mesh, &vec![1.0; mesh.num_vertices()]);
        for (v, r) in system.row_of.iter().enumerate() {
            if r.is_some() {
                prop_assert!(bu[v].abs() <= 1e-12);
            }
        }
    }
}
