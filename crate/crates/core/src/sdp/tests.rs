use super::*;
use crate::dissipativity::SupplyRate;
use crate::linalg::{inertia, max_eig_sym, Matrix, SymMatrix};

fn m(rows: &[&[f64]]) -> Matrix<f64> {
    Matrix::from_f64_rows(rows).unwrap()
}

fn convex_vertices() -> Vec<Matrix<f64>> {
    vec![m(&[&[0.0, 1.0], &[-1.0, -5.0]]), m(&[&[0.0, 1.0], &[-5.0, -5.0]])]
}

fn double_well_vertices() -> Vec<Matrix<f64>> {
    vec![m(&[&[0.0, 1.0], &[2.0, -5.0]]), m(&[&[0.0, 1.0], &[-5.0, -5.0]])]
}

fn solve_default(p: &SdpProblem<f64>) -> SdpResult<f64> {
    solve(p, &SdpSettings::default()).unwrap()
}

#[test]
fn convex_duffing_is_feasible_with_positive_definite_storage() {
    let problem = SdpProblem::lyapunov(&convex_vertices(), 0.0, 0.01);
    let res = solve_default(&problem);
    assert_eq!(res.status, SdpStatus::Feasible);
    let p = res.p.unwrap();
    assert_eq!(inertia(&p).unwrap().neg, 0);
    for r in verify_solution(&p, &problem).unwrap() {
        assert!(r <= 1e-6);
    }
}

#[test]
fn scalar_stable_system() {
    let problem = SdpProblem::lyapunov(&[m(&[&[-1.0]])], 0.0, 0.01);
    let res = solve_default(&problem);
    assert!(res.is_feasible());
    assert!(res.p.unwrap().get(0, 0) > 0.0);
}

#[test]
fn rotation_is_infeasible_at_zero_rate() {
    let a = m(&[&[0.0, 1.0], &[-1.0, 0.0]]);
    let problem = SdpProblem::lyapunov(std::slice::from_ref(&a), 0.0, 0.01);
    assert_eq!(solve_default(&problem).status, SdpStatus::Infeasible);

    // Grid oracle: no symmetric P in a box certifies the rotation.
    let grid: Vec<f64> = (-20..=20).map(|k| k as f64 * 0.5).collect();
    let lc = LyapunovConstraint::new(a, 0.0, 0.01);
    for &p11 in &grid {
        for &p12 in &grid {
            for &p22 in &grid {
                let p = SymMatrix::from_f64_rows(&[[p11, p12], [p12, p22]]).unwrap();
                assert!(max_eig_sym(&lc.residual(&p)).unwrap() > 0.0);
            }
        }
    }
}

#[test]
fn printed_convex_storage_verifies() {
    let p = SymMatrix::from_f64_rows(&[[0.8696, 0.1482], [0.1482, 0.1304]]).unwrap();
    let problem = SdpProblem::lyapunov(&convex_vertices(), 0.0, 0.01);
    for r in verify_solution(&p, &problem).unwrap() {
        assert!(r <= 0.05, "residual {r}");
    }
}

#[test]
fn identity_against_negative_identity() {
    let problem = SdpProblem::lyapunov(&[m(&[&[-1.0, 0.0], &[0.0, -1.0]])], 0.0, 0.0);
    let r = verify_solution(&SymMatrix::identity(2), &problem).unwrap();
    assert!((r[0] + 2.0).abs() < 1e-14);
}

#[test]
fn printed_gain_storage_verifies_on_loop_vertices() {
    let p = SymMatrix::from_f64_rows(&[
        [-0.5522, 0.0498, -0.0171],
        [0.0498, 1.4946, 0.3068],
        [-0.0171, 0.3068, 0.0576],
    ])
    .unwrap();
    let gamma: f64 = 0.5636;
    let supply = SupplyRate::new(
        SymMatrix::identity(1).scale(-1.0),
        Matrix::zeros(1, 1),
        SymMatrix::identity(1).scale(gamma * gamma),
    )
    .unwrap();
    let constraints = [-1.0, 1.0]
        .iter()
        .map(|&a| {
            Constraint::Bordered(BorderedConstraint {
                a: m(&[&[0.0, 1.0, 0.0], &[a, -5.0, -1.0], &[1.0, 0.0, 0.0]]),
                b: m(&[&[0.0], &[1.0], &[0.0]]),
                c: m(&[&[1.0, 0.0, 0.0]]),
                d: Matrix::zeros(1, 1),
                supply: supply.clone(),
                lambda: 2.0,
                epsilon: 0.01,
            })
        })
        .collect();
    let problem = SdpProblem::new(3, constraints);
    for r in verify_solution(&p, &problem).unwrap() {
        assert!(r <= 0.05, "residual {r}");
    }
}

#[test]
fn verify_rejects_wrong_dimension() {
    let problem = SdpProblem::lyapunov(&convex_vertices(), 0.0, 0.01);
    assert!(verify_solution(&SymMatrix::identity(3), &problem).is_err());
}

#[test]
fn margin_scales_with_norm_bound() {
    let base = SdpProblem::lyapunov(&double_well_vertices(), 2.0, 0.0).with_objective(Objective::MaximizeMargin);
    let t1 = solve_default(&base).margin.unwrap();
    let t2 = solve_default(&base.clone().with_norm_bound(20.0)).margin.unwrap();
    assert!(t1 > 0.0);
    assert!((t2 - 2.0 * t1).abs() <= 1e-6 * (1.0 + t2.abs()), "{t1} {t2}");
}

#[test]
fn homogeneity_of_certificates() {
    let problem = SdpProblem::lyapunov(&double_well_vertices(), 2.0, 0.01);
    let p = solve_default(&problem).p.unwrap();
    for c in [0.5, 2.0] {
        let scaled = SdpProblem::lyapunov(&double_well_vertices(), 2.0, 0.01 * c);
        for r in verify_solution(&p.scale(c), &scaled).unwrap() {
            assert!(r <= 1e-9);
        }
    }
}

#[test]
fn entry_equalities_are_honoured() {
    let problem = SdpProblem::lyapunov(&convex_vertices(), 0.0, 0.01)
        .with_equalities(vec![Equality::entry(2, 0, 0, 1.0), Equality::entry(2, 0, 1, 0.1)]);
    let res = solve_default(&problem);
    assert!(res.is_feasible());
    let p = res.p.unwrap();
    assert!((p.get(0, 0) - 1.0).abs() < 1e-9);
    assert!((p.get(1, 0) - 0.1).abs() < 1e-9);
}

#[test]
fn contradictory_equalities_are_infeasible() {
    let problem = SdpProblem::lyapunov(&convex_vertices(), 0.0, 0.01)
        .with_equalities(vec![Equality::entry(2, 0, 0, 1.0), Equality::entry(2, 0, 0, 2.0)]);
    assert_eq!(solve_default(&problem).status, SdpStatus::Infeasible);
    let outside =
        SdpProblem::lyapunov(&convex_vertices(), 0.0, 0.01).with_equalities(vec![Equality::entry(2, 0, 0, 50.0)]);
    assert_eq!(solve_default(&outside).status, SdpStatus::Infeasible);
}

#[test]
fn passivity_border_yields_matching_coupling() {
    let supply = SupplyRate::new(SymMatrix::zeros(1), Matrix::identity(1), SymMatrix::zeros(1)).unwrap();
    let constraints = [-3.0, 3.0]
        .iter()
        .map(|&k| {
            Constraint::Bordered(BorderedConstraint {
                a: m(&[&[0.0, 1.0], &[-k, -5.0]]),
                b: m(&[&[0.0], &[1.0]]),
                c: m(&[&[-1.0, 0.0]]),
                d: Matrix::zeros(1, 1),
                supply: supply.clone(),
                lambda: 2.0,
                epsilon: 0.01,
            })
        })
        .collect();
    let problem = SdpProblem::new(2, constraints);
    let res = solve_default(&problem);
    assert!(res.is_feasible(), "{:?}", res.stats);
    let p = res.p.unwrap();
    assert!((p.get(0, 1) + 1.0).abs() < 1e-7);
    assert!(p.get(1, 1).abs() < 1e-7);
    assert_eq!(inertia(&p).unwrap().neg, 1);
}

#[test]
fn results_are_deterministic() {
    let problem = SdpProblem::lyapunov(&double_well_vertices(), 2.0, 0.01);
    let a = solve_default(&problem);
    let b = solve_default(&problem);
    assert_eq!(a.status, b.status);
    assert_eq!(a.p.unwrap(), b.p.unwrap());
}

#[test]
fn warm_start_reaches_same_verdict() {
    let problem = SdpProblem::lyapunov(&double_well_vertices(), 2.0, 0.01);
    let cold = solve_default(&problem);
    let settings = SdpSettings {
        warm_start: cold.p.clone(),
        ..SdpSettings::default()
    };
    let warm = solve(&problem, &settings).unwrap();
    assert!(warm.is_feasible());
}

#[test]
fn single_precision_solve() {
    let vertices: Vec<Matrix<f32>> = convex_vertices().iter().map(|a| a.cast()).collect();
    let problem = SdpProblem::lyapunov(&vertices, 0.0, 0.01);
    let res = solve(&problem, &SdpSettings::default()).unwrap();
    assert!(res.is_feasible(), "{:?}", res.stats);
}

#[test]
fn malformed_problems_are_rejected() {
    let empty: SdpProblem<f64> = SdpProblem::new(2, vec![]);
    assert!(solve(&empty, &SdpSettings::default()).is_err());
    let bad = SdpProblem::lyapunov(&convex_vertices(), -1.0, 0.01);
    assert!(solve(&bad, &SdpSettings::default()).is_err());
    let unbounded = SdpProblem::lyapunov(&convex_vertices(), 0.0, 0.01).with_norm_bound(f64::INFINITY);
    assert!(solve(&unbounded, &SdpSettings::default()).is_err());
}

#[test]
fn margin_matches_reference_optimum() {
    // Optima computed independently with an interior-point conic solver.
    let dw = SdpProblem::lyapunov(&double_well_vertices(), 2.0, 0.0).with_objective(Objective::MaximizeMargin);
    let cv = SdpProblem::lyapunov(&convex_vertices(), 0.0, 0.0).with_objective(Objective::MaximizeMargin);
    assert!((solve_default(&dw).margin.unwrap() - 3.203617068).abs() < 1e-6);
    assert!((solve_default(&cv).margin.unwrap() - 3.572400869).abs() < 1e-6);
}
