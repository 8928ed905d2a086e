use super::*;
use crate::problem::{lshape_problem, smooth_problem};

fn config(max_iterations: usize) -> LoopConfig {
    LoopConfig {
        max_iterations,
        record_timing: false,
        ..LoopConfig::default()
    }
}

fn csv(run: &AdaptiveRun) -> String {
    let mut buf = Vec::new();
    run.trace.write_csv(&mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn single_iteration_solves_once_and_refines() {
    let run = adaptive_loop(&smooth_problem(), &config(1)).unwrap();
    assert!(run.failure.is_none());
    assert_eq!(run.trace.len(), 1);
    let row = &run.trace.rows[0];
    assert!(run.final_mesh.num_triangles() > row.n_elements);
    assert_eq!(
        run.final_solution.as_ref().unwrap().values.len(),
        row.n_vertices
    );
}

#[test]
fn element_cap_stops_before_refining() {
    let cfg = LoopConfig {
        max_elements: 200,
        ..config(100)
    };
    let run = adaptive_loop(&lshape_problem(), &cfg).unwrap();
    let rows = &run.trace.rows;
    let last = rows.last().unwrap();
    assert!(last.n_elements >= 200);
    assert!(rows[..rows.len() - 1].iter().all(|r| r.n_elements < 200));
    assert_eq!(run.final_mesh.num_triangles(), last.n_elements);
    assert!(rows.windows(2).all(|w| w[1].n_elements > w[0].n_elements));
}

#[test]
fn trace_is_reproducible_without_timing() {
    let p = lshape_problem();
    let a = adaptive_loop(&p, &config(6)).unwrap();
    let b = adaptive_loop(&p, &config(6)).unwrap();
    assert_eq!(csv(&a), csv(&b));
    assert!(a.trace.rows.iter().all(|r| r.wall_time_s.is_none()));
}

#[test]
fn uniform_mode_quadruples() {
    let cfg = LoopConfig {
        mode: RefinementMode::Uniform,
        ..config(3)
    };
    let run = adaptive_loop(&smooth_problem(), &cfg).unwrap();
    for w in run.trace.rows.windows(2) {
        assert_eq!(w[1].n_elements, 4 * w[0].n_elements);
    }
    for r in &run.trace.rows {
        assert_eq!(r.n_marked_total, r.n_elements);
        assert_eq!(r.mark_ratio, 1.0);
        assert_eq!(r.osc_fraction, 1.0);
    }
}

#[test]
fn marking_columns_are_consistent() {
    let run = adaptive_loop(&lshape_problem(), &config(8)).unwrap();
    for r in &run.trace.rows {
        assert!(r.n_marked_eta >= 1 && r.n_marked_total >= r.n_marked_eta);
        assert_eq!(
            r.mark_ratio,
            r.n_marked_total as f64 / r.n_marked_eta as f64
        );
        assert!((0.0..=1.0 + 1e-12).contains(&r.osc_fraction));
        assert!(r.solve_residual <= crate::fvm::RESIDUAL_TOLERANCE);
        assert!(r.osc <= r.eta);
        assert!(r.h1_error.is_some() && r.l2_error.is_some());
    }
}

#[test]
fn exact_discrete_solution_ends_loop() {
    // zero data: the discrete solution vanishes identically and nothing is marked
    let p = Problem::new("zero", crate::mesh::Domain::UnitSquare);
    let run = adaptive_loop(&p, &config(10)).unwrap();
    assert_eq!(run.trace.len(), 1);
    assert_eq!(run.trace.rows[0].eta, 0.0);
    assert_eq!(run.trace.rows[0].n_marked_total, 0);
}

#[test]
fn geometry_holds_on_every_level() {
    let run = adaptive_loop(&lshape_problem(), &config(10)).unwrap();
    for d in &run.diagnostics {
        assert!(d.geometry.holds(), "level {}: {:?}", d.level, d.geometry);
    }
}

#[test]
fn stored_increments_match_recorded_ones() {
    let cfg = LoopConfig {
        keep_snapshots: true,
        diagnostics: Diagnostics {
            quasi_orthogonality: true,
            ..Diagnostics::default()
        },
        ..config(5)
    };
    let run = adaptive_loop(&smooth_problem(), &cfg).unwrap();
    assert_eq!(run.snapshots.len(), 5);
    // the last snapshot's refinement leads past the last solve
    let stored = solution_increments(&run.snapshots, &cfg.quadrature.triangle).unwrap();
    let recorded: Vec<f64> = run.diagnostics[1..]
        .iter()
        .map(|d| d.increment_h1_sq.unwrap())
        .collect();
    assert_eq!(stored.len(), recorded.len());
    for (s, r) in stored.iter().zip(&recorded) {
        assert!((s - r).abs() <= 1e-12 * r.max(1e-300));
    }
    let ratios = run.quasi_orthogonality().unwrap();
    assert_eq!(ratios.len(), 4);
}

#[test]
fn diagnostics_are_opt_in() {
    let run = adaptive_loop(&smooth_problem(), &config(3)).unwrap();
    for d in &run.diagnostics {
        assert!(d.orthogonality_defect.is_none() && d.fem.is_none() && d.increment_h1_sq.is_none());
    }
    assert!(run.quasi_orthogonality().is_err());
    let mut diag = Diagnostics::default();
    diag.enable("fem_comparison").unwrap();
    assert!(diag.fem_comparison);
    assert!(diag.enable("nonsense").is_err());
}

#[test]
fn invalid_configuration_is_rejected() {
    let p = smooth_problem();
    let bad = LoopConfig {
        marking: MarkingParams {
            theta: 0.3,
            theta_prime: 0.6,
        },
        ..config(2)
    };
    assert!(matches!(
        adaptive_loop(&p, &bad),
        Err(Error::InvalidParameter(_))
    ));
    assert!(adaptive_loop(&p, &config(0)).is_err());
    assert_eq!(
        "uniform".parse::<RefinementMode>().unwrap(),
        RefinementMode::Uniform
    );
    assert!("random".parse::<RefinementMode>().is_err());
}

#[test]
fn solver_failure_keeps_partial_trace() {
    let p = smooth_problem()
        .with_diffusion(|_| [[0.0, 0.0], [0.0, 0.0]], None)
        .with_convection(|_| [0.0, 0.0], |_| 0.0);
    let p = Problem {
        reaction: std::sync::Arc::new(|_| 0.0),
        ..p
    };
    let run = adaptive_loop(&p, &config(3)).unwrap();
    assert!(run.trace.is_empty());
    assert!(matches!(run.failure, Some(Error::SolverFailure { .. })));
}

#[test]
fn compensated_sum_recovers_lost_digits() {
    let mut values = vec![1.0];
    values.extend(std::iter::repeat_n(1e-16, 1000));
    assert_eq!(compensated_sum(&values), 1.0 + 1e-13);
    assert_eq!(compensated_sum(&[]), 0.0);
}
