use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::*;
use crate::dominance::solve_dominance;
use crate::linalg::{sym_eigen, SymMatrix};

fn model(name: &str, params: &[(&str, f64)]) -> ModelDef<f64> {
    let p: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    builtin(name, &p).unwrap()
}

fn m(rows: &[&[f64]]) -> Matrix<f64> {
    Matrix::from_f64_rows(rows).unwrap()
}

#[test]
fn jacobians_match_finite_differences() {
    let mut rng = StdRng::seed_from_u64(7);
    for &name in builtin_names() {
        let md = model(name, &[]);
        for _ in 0..20 {
            let x: Vec<f64> = (0..md.n()).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let exact = md.jacobian(&x);
            let fd = md.finite_difference_jacobian(&x, 1e-6);
            let err = exact.sub(&fd).max_abs() / (1.0 + exact.max_abs());
            assert!(err <= 1e-5, "{name} at {x:?}: {err}");
        }
    }
}

#[test]
fn jacobians_stay_inside_declared_hull() {
    let mut rng = StdRng::seed_from_u64(11);
    for &name in builtin_names() {
        let md = model(name, &[]);
        if name == "duffing_polynomial" {
            continue;
        }
        for _ in 0..50 {
            let x: Vec<f64> = (0..md.n()).map(|_| rng.gen_range(-6.0..6.0)).collect();
            let diff = md.jacobian(&x).sub(md.template());
            for r in 0..md.n() {
                for c in 0..md.n() {
                    let v = diff[(r, c)];
                    match md.nonlinear_entries().iter().find(|e| e.row == r && e.col == c) {
                        Some(e) => assert!(v >= e.lo - 1e-12 && v <= e.hi + 1e-12, "{name}"),
                        None => assert_eq!(v, 0.0, "{name} entry ({r},{c})"),
                    }
                }
            }
        }
    }
}

#[test]
fn polynomial_spring_hull_holds_on_its_region() {
    let md = model("duffing_polynomial", &[]);
    let e = &md.nonlinear_entries()[0];
    assert!((e.lo + 5.0).abs() < 1e-12 && (e.hi - 2.0).abs() < 1e-12);
    for k in 0..=100 {
        let x = -5.0 + 0.1 * k as f64;
        let v = md.jacobian(&[x, 0.0])[(1, 0)];
        assert!(v >= e.lo - 1e-12 && v <= e.hi + 1e-12);
    }
}

#[test]
fn convex_spring_entry_bounds() {
    let md = model("duffing_convex", &[]);
    let e = &md.nonlinear_entries()[0];
    assert_eq!((e.row, e.col, e.lo, e.hi), (1, 0, -5.0, -1.0));
}

#[test]
fn double_well_vertices() {
    let fam = model("duffing_double_well", &[]).jacobian_vertices().unwrap();
    assert_eq!(
        fam.vertices(),
        &[m(&[&[0.0, 1.0], &[-5.0, -5.0]]), m(&[&[0.0, 1.0], &[2.0, -5.0]])]
    );
}

#[test]
fn dc_motor_electrical_row() {
    let md = model("duffing_dc", &[]);
    let j = md.jacobian(&[0.3, -0.2, 0.1]);
    assert_eq!(j.row_slice(2), &[0.0, -10.0, -10.0]);
    assert_eq!(md.jacobian_vertices().unwrap().len(), 2);
}

#[test]
fn dc_pi_vertices() {
    let fam = model("duffing_dc_pi", &[]).jacobian_vertices().unwrap();
    assert_eq!(fam.len(), 2);
    assert_eq!(fam.n(), 4);
    assert_eq!(fam.vertices()[0].row_slice(2), &[-1.0, -10.0, -10.0, 5.0]);
    let physical = model("duffing_dc_pi", &[("pi_voltage_input", 1.0)])
        .jacobian_vertices()
        .unwrap();
    assert_eq!(physical.vertices()[0].row_slice(2), &[-10.0, -10.0, -10.0, 50.0]);
}

#[test]
fn pendulum_field() {
    let md = model("pendulum", &[("c", 0.5), ("u", 0.2)]);
    let f = md.vector_field(&[1.0, 2.0]);
    assert_eq!(f[0], 2.0);
    assert!((f[1] - (-(1.0f64).sin() - 1.0 + 0.2)).abs() < 1e-15);
}

#[test]
fn linear_model_has_one_vertex() {
    let fam = model("linear", &[("a", -2.0)]).jacobian_vertices().unwrap();
    assert_eq!(fam.len(), 1);
    let tanh_lin = model("mass_spring_tanh_PI", &[("k_p", 0.0)])
        .jacobian_vertices()
        .unwrap();
    assert_eq!(tanh_lin.len(), 1);
}

#[test]
fn unbounded_entry_is_reported() {
    let md = ModelDef::<f64>::linear(m(&[&[-1.0]])).unwrap();
    let open = ModelDef::new(
        "cubic",
        vec!["x".into()],
        BTreeMap::new(),
        md.field_fn(),
        std::sync::Arc::new(|_: &[f64]| Matrix::zeros(1, 1)),
        Matrix::zeros(1, 1),
        vec![EntryBound {
            row: 0,
            col: 0,
            lo: f64::NEG_INFINITY,
            hi: 0.0,
            label: "-3x^2".into(),
        }],
        None,
    )
    .unwrap();
    assert!(matches!(open.jacobian_vertices(), Err(Error::UnboundedEntry(_))));
}

#[test]
fn parameter_errors() {
    assert!(matches!(
        builtin::<f64>("lorenz", &BTreeMap::new()),
        Err(Error::UnknownModel(_))
    ));
    let bad = |k: &str, v: f64| {
        let p = BTreeMap::from([(k.to_string(), v)]);
        builtin::<f64>("duffing_dc", &p)
    };
    assert!(matches!(bad("L", 0.0), Err(Error::ParameterOutOfRange(_))));
    assert!(matches!(bad("dalpha_lo", 0.0), Err(Error::ParameterOutOfRange(_))));
    assert!(bad("nope", 1.0).is_err());
    let p = BTreeMap::from([("output".to_string(), 2.0)]);
    assert!(matches!(
        builtin::<f64>("mass_spring_tanh_PI", &p),
        Err(Error::ParameterOutOfRange(_))
    ));
}

#[test]
fn samples_along_position() {
    let md = model("duffing_polynomial", &[]);
    let grid = coordinate_grid(&[0.0, 0.0], 0, -5.0, 5.0, 50).unwrap();
    let samples = md.jacobian_samples(&grid).unwrap();
    assert_eq!(samples.len(), 50);
    let ks: Vec<f64> = samples.iter().map(|a| -a[(1, 0)]).collect();
    assert!((ks[0] - 5.0).abs() < 1e-12);
    assert!(ks.iter().all(|&k| (-2.0..=5.0 + 1e-12).contains(&k)));
    let one = md.jacobian_samples(&[vec![0.0, 0.0]]).unwrap();
    assert_eq!(one.len(), 1);
    assert!(md.jacobian_samples(&[]).is_err());
}

#[test]
fn exponential_decay_endpoint() {
    let md = model("linear", &[]);
    let traj = integrate(&md, &[1.0], 1e-3, 10.0).unwrap();
    assert_eq!(traj.len(), 10_001);
    assert!((traj.last()[0] - (-10.0f64).exp()).abs() < 1e-6);
}

#[test]
fn bad_grids_and_divergence() {
    let md = model("linear", &[("a", 1.0)]);
    assert!(integrate(&md, &[1.0], 0.0, 1.0).is_err());
    assert!(integrate(&md, &[1.0], 0.1, 0.01).is_err());
    assert!(integrate(&md, &[1.0, 2.0], 0.1, 1.0).is_err());
    match integrate(&md, &[1.0], 0.1, 1000.0) {
        Err(Error::Divergence { time }) => assert!(time > 300.0 && time < 400.0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn halving_step_changes_endpoint_little() {
    for (name, x0) in [
        ("duffing_dc", vec![0.05, 0.0, 0.0]),
        ("duffing_dc_pi", vec![0.05, 0.0, 0.0, 0.0]),
    ] {
        let md = model(name, &[]);
        let a = integrate(&md, &x0, 1e-3, 20.0).unwrap();
        let b = integrate(&md, &x0, 5e-4, 20.0).unwrap();
        let (ea, eb) = (a.last(), b.last());
        let diff: f64 = ea.iter().zip(eb).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = eb.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(diff <= 1e-4 * (1.0 + scale), "{name}: {diff}");
    }
}

#[test]
fn prolonged_linear_matches_exponential() {
    let md = ModelDef::linear(m(&[&[-1.0, 0.0], &[0.0, -3.0]])).unwrap();
    let (_, dx) = integrate_prolonged(&md, &[1.0, 1.0], &[2.0, -1.0], 1e-3, 1.0).unwrap();
    assert!((dx.last()[0] - 2.0 * (-1.0f64).exp()).abs() < 1e-9);
    assert!((dx.last()[1] + (-3.0f64).exp()).abs() < 1e-9);
    let (_, zero) = integrate_prolonged(&md, &[1.0, 1.0], &[0.0, 0.0], 1e-3, 1.0).unwrap();
    assert!(zero.states.iter().all(|v| v.iter().all(|&x| x == 0.0)));
}

#[test]
fn prolonged_matches_finite_difference_of_flows() {
    let md = model("duffing_double_well", &[]);
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..3 {
        let x0 = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let dx0 = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let (_, dx) = integrate_prolonged(&md, &x0, &dx0, 1e-3, 2.0).unwrap();
        let base = integrate(&md, &x0, 1e-3, 2.0).unwrap();
        let mut errs = Vec::new();
        for h in [1e-4, 1e-5] {
            let moved = integrate(&md, &[x0[0] + h * dx0[0], x0[1] + h * dx0[1]], 1e-3, 2.0).unwrap();
            let fd: Vec<f64> = moved.last().iter().zip(base.last()).map(|(a, b)| (a - b) / h).collect();
            let e: f64 = fd
                .iter()
                .zip(dx.last())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            errs.push(e);
        }
        assert!(errs[0] < 1e-3, "{errs:?}");
        assert!(errs[1] < errs[0] * 0.2 + 1e-8, "{errs:?}");
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(lo).signum() == f(mid).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn saturated_feedback_settles_on_shifted_equilibrium() {
    let root = bisect(|x| (2.0 * x).tanh() - x, 0.5, 2.0);
    assert!((root - 0.9575).abs() < 1e-4);
    let md = model("mass_spring_tanh_P", &[]);
    let traj = integrate(&md, &[1.0, 0.0], 1e-3, 100.0).unwrap();
    match classify_attractor(&traj, 0.5, None) {
        AttractorClass::FixedPoint { state } => assert!((state[0] - root).abs() < 1e-3, "{state:?}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn dc_motor_settles() {
    let md = model("duffing_dc", &[]);
    let traj = integrate(&md, &[0.05, 0.0, 0.0], 1e-3, 300.0).unwrap();
    match classify_attractor(&traj, 0.5, None) {
        AttractorClass::FixedPoint { state } => assert!((state[0] - 1.8955).abs() < 1e-3, "{state:?}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn dc_pi_loop_oscillates() {
    let md = model("duffing_dc_pi", &[]);
    let traj = integrate(&md, &[0.05, 0.0, 0.0, 0.0], 1e-3, 300.0).unwrap();
    let class = classify_attractor(&traj, 0.5, None);
    assert!(matches!(class, AttractorClass::PeriodicOrbit { .. }), "{class:?}");
    // Same verdict on a shifted tail window and a halved step.
    assert_eq!(classify_attractor(&traj, 0.3, None).kind(), "periodic_orbit");
    let fine = integrate(&md, &[0.05, 0.0, 0.0, 0.0], 5e-4, 300.0).unwrap();
    assert_eq!(classify_attractor(&fine, 0.5, None).kind(), "periodic_orbit");
}

#[test]
fn linear_pi_loop_settles_and_saturated_loop_oscillates() {
    let lin = model("mass_spring_tanh_PI", &[("k_p", 0.0)]);
    let traj = integrate(&lin, &[1.0, 0.0, 0.0], 1e-3, 400.0).unwrap();
    assert_eq!(classify_attractor(&traj, 0.5, None).kind(), "fixed_point");
    let sat = model("mass_spring_tanh_PI", &[]);
    let traj = integrate(&sat, &[1.0, 0.0, 0.0], 1e-3, 400.0).unwrap();
    let class = classify_attractor(&traj, 0.5, None);
    assert!(matches!(class, AttractorClass::PeriodicOrbit { .. }), "{class:?}");
}

#[test]
fn short_tail_is_unknown() {
    let traj = integrate(&model("linear", &[]), &[1.0], 0.1, 10.0).unwrap();
    assert_eq!(classify_attractor(&traj, 0.5, None).kind(), "unknown");
}

fn double_well_certificate() -> SymMatrix<f64> {
    let fam = model("duffing_double_well", &[]).jacobian_vertices().unwrap();
    solve_dominance(&fam, 2.0, 0.01).unwrap().p
}

#[test]
fn incremental_decay_with_certificate() {
    let md = model("duffing_double_well", &[]);
    let p = double_well_certificate();
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..5 {
        let x0 = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let y0 = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let v = check_incremental_decay(&md, &p, 2.0, &x0, &y0, 1e-3, 5.0).unwrap();
        assert!(v.holds, "{v:?}");
    }
    let same = check_incremental_decay(&md, &p, 2.0, &[0.3, 0.1], &[0.3, 0.1], 1e-3, 1.0).unwrap();
    assert!(same.holds);
    assert_eq!(same.worst_violation, 0.0);
}

#[test]
fn identity_storage_violates_decay() {
    let md = model("duffing_double_well", &[]);
    let p = SymMatrix::identity(2);
    let mut rng = StdRng::seed_from_u64(9);
    let violated = (0..20).any(|_| {
        let x0 = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let y0 = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        !check_incremental_decay(&md, &p, 2.0, &x0, &y0, 1e-3, 5.0)
            .unwrap()
            .holds
    });
    assert!(violated);
}

#[test]
fn cone_is_forward_invariant() {
    let md = model("duffing_double_well", &[]);
    let p = double_well_certificate();
    let eig = sym_eigen(&p).unwrap();
    let dx0: Vec<f64> = (0..2).map(|i| eig.vectors[(i, 0)]).collect();
    assert!(eig.values[0] < 0.0);
    let v = cone_invariance_check(&md, &p, &[0.5, -1.0], &dx0, 1e-3, 5.0).unwrap();
    assert!(v.holds, "{v:?}");
    let outside: Vec<f64> = (0..2).map(|i| eig.vectors[(i, 1)]).collect();
    assert!(matches!(
        cone_invariance_check(&md, &p, &[0.5, -1.0], &outside, 1e-3, 5.0),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn linear_cone_matches_exponential() {
    let a = m(&[&[1.0, 0.0], &[0.0, -2.0]]);
    let md = ModelDef::linear(a).unwrap();
    let p = SymMatrix::from_f64_rows(&[[-1.0, 0.0], [0.0, 1.0]]).unwrap();
    let dx0 = [1.0, 0.9];
    let v = cone_invariance_check(&md, &p, &[0.0, 0.0], &dx0, 1e-3, 3.0).unwrap();
    assert!(v.holds);
    // e^{At}δx0 = (e^t, 0.9e^{−2t}); the ratio decreases monotonically.
    let t: f64 = 3.0;
    let (a1, a2) = (t.exp(), 0.9 * (-2.0 * t).exp());
    let expected = (a2 * a2 - a1 * a1) / (a1 * a1 + a2 * a2);
    let (_, dx) = integrate_prolonged(&md, &[0.0, 0.0], &dx0, 1e-3, 3.0).unwrap();
    let z = dx.last();
    let got = p.quad_form(z) / (z[0] * z[0] + z[1] * z[1]);
    assert!((got - expected).abs() < 1e-8);
}

#[test]
fn csv_export_format() {
    let traj = integrate(&model("linear", &[]), &[1.0], 0.5, 1.0).unwrap();
    let csv = traj.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,x1");
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[1], "0.00000000000e0,1.00000000000e0");
    let v: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
    assert!((v - (-0.5f64).exp()).abs() < 1e-3);
}

#[test]
fn open_family_products() {
    let pi = model("pi_controller", &[]).open_family().unwrap();
    assert_eq!(pi.vertices().len(), 2);
    assert!(pi.varying_output());
    let duff = model("duffing", &[("dalpha_lo", -3.0), ("dalpha_hi", 3.0)])
        .open_family()
        .unwrap();
    assert_eq!(duff.vertices().len(), 2);
    assert!(model("duffing_dc_pi", &[]).open_family().is_err());
}
