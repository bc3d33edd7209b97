use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zpc::qp::{check_kkt, solve, QpOptions, QpProblem, QpStatus};

/// Box-constrained separable QPs have the clamped unconstrained minimizer as
/// their solution.
#[test]
fn diagonal_box_qps_match_clamping() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let d = rng.random_range(1..8);
        let h = DVector::from_fn(d, |_, _| rng.random_range(0.1..4.0));
        let f = DVector::from_fn(d, |_, _| rng.random_range(-5.0..5.0));
        let lo = DVector::from_fn(d, |_, _| rng.random_range(-2.0..0.0));
        let hi = DVector::from_fn(d, |i, _| lo[i] + rng.random_range(0.1..3.0));
        let mut a = DMatrix::zeros(2 * d, d);
        let mut b = DVector::zeros(2 * d);
        for i in 0..d {
            a[(i, i)] = 1.0;
            b[i] = hi[i];
            a[(d + i, i)] = -1.0;
            b[d + i] = -lo[i];
        }
        let p = QpProblem::new(DMatrix::from_diagonal(&h), f.clone()).with_ineq(a, b);
        let s = solve(&p, &QpOptions::default()).unwrap();
        assert_eq!(s.status, QpStatus::Optimal);
        for i in 0..d {
            let expect = (-f[i] / h[i]).clamp(lo[i], hi[i]);
            assert!((s.x[i] - expect).abs() < 1e-6, "{} vs {}", s.x[i], expect);
        }
        assert!(check_kkt(&p, &s).passes(1e-6));
    }
}

#[test]
fn equality_constrained_projection() {
    // min ½‖x − a‖² s.t. 1ᵀx = 1
    let a = DVector::from_vec(vec![0.3, -1.0, 2.0]);
    let p = QpProblem::new(DMatrix::identity(3, 3), -&a).with_eq(
        DMatrix::from_element(1, 3, 1.0),
        DVector::from_element(1, 1.0),
    );
    let s = solve(&p, &QpOptions::default()).unwrap();
    let shift = (1.0 - a.sum()) / 3.0;
    assert!((&s.x - a.add_scalar(shift)).amax() < 1e-8);
}

#[test]
fn contradictory_bounds_are_reported_infeasible() {
    let a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
    let b = DVector::from_vec(vec![-1.0, -1.0]);
    let p = QpProblem::new(DMatrix::identity(1, 1), DVector::zeros(1)).with_ineq(a, b);
    let s = solve(&p, &QpOptions::default()).unwrap();
    assert_ne!(s.status, QpStatus::Optimal);
}

#[test]
fn malformed_problems_are_rejected() {
    let p = QpProblem::new(DMatrix::identity(2, 2), DVector::zeros(3));
    assert!(solve(&p, &QpOptions::default()).is_err());
}
