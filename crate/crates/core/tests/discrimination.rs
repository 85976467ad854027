mod common;

use approx::assert_abs_diff_eq;
use common::*;
use proptest::prelude::*;
use unambig::discrimination::SINGULAR_TOL;
use unambig::linalg::min_eigenvalue;
use unambig::prelude::*;

fn q3(v: f64) -> FailureAssignment {
    FailureAssignment::uniform(3, v).unwrap()
}

#[test]
fn equal_overlap_failure_matrix_is_singular() {
    let g = gram(&case1(0.5));
    let c = failure_matrix(&g, &q3(0.5)).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert_abs_diff_eq!(c.entries()[(i, j)].re, 0.5, epsilon = 1e-12);
        }
    }
    assert_abs_diff_eq!(c.min_eigenvalue(), 0.0, epsilon = 1e-12);
}

#[test]
fn identity_gram_with_zero_failure_is_zero_matrix() {
    let g = gram(&basis(3));
    let c = failure_matrix(&g, &q3(0.0)).unwrap();
    assert_eq!(c.entries(), &CMatrix::zeros(3, 3));
    assert_eq!(c.rank(), 0);
}

#[test]
fn sacrificed_state_failure_matrix_has_rank_one() {
    let g = gram(&case2());
    let q = FailureAssignment::new(vec![1.0, 1.0 / 3.0, 1.0 / 3.0]).unwrap();
    let c = failure_matrix(&g, &q).unwrap();
    assert_eq!(c.rank(), 1);
    let mut eig: Vec<f64> = c.entries().clone().symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    assert_abs_diff_eq!(eig[0], 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(eig[1], 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(eig[2], 5.0 / 3.0, epsilon = 1e-12);
}

#[test]
fn dimension_mismatch_is_rejected() {
    let g = gram(&basis(3));
    let q = FailureAssignment::uniform(2, 0.5).unwrap();
    assert!(matches!(failure_matrix(&g, &q), Err(Error::Dimension { .. })));
}

#[test]
fn feasibility_examples() {
    let g = gram(&case1(0.5));
    let f = feasibility(&g, &q3(0.5)).unwrap();
    assert!(f.psd && f.singular);

    let f = feasibility(&g, &q3(1.0)).unwrap();
    assert!(f.psd && !f.singular);

    let f = feasibility(&g, &q3(0.1)).unwrap();
    assert!(!f.psd);
    assert_abs_diff_eq!(f.min_eigenvalue, -0.4, epsilon = 1e-12);
}

#[test]
fn projection_examples() {
    let g = gram(&case1(0.5));
    for start in [0.5, 0.2, 0.9] {
        let q = boundary_project(&g, &q3(start)).unwrap();
        for v in q.q() {
            assert_abs_diff_eq!(*v, 0.5, epsilon = 1e-12);
        }
    }
    // The lower block of C is [[0, 0.9], [0.9, 0]], so the shift is positive
    // and q_1 = 1 would leave the cube.
    let g = gram(&case1(0.9));
    let q = FailureAssignment::new(vec![1.0, 0.0, 0.0]).unwrap();
    assert!(matches!(boundary_project(&g, &q), Err(Error::ProjectionOutsideCube { .. })));
}

#[test]
fn two_state_examples() {
    let e = StateEnsemble::from_real(&[vec![1.0, 0.0], vec![0.6, 0.8]], None).unwrap();
    let sol = solve_two_state(&gram(&e), e.priors()).unwrap();
    assert_abs_diff_eq!(sol.q()[0], 0.6, epsilon = 1e-12);
    assert_abs_diff_eq!(sol.q()[1], 0.6, epsilon = 1e-12);
    assert_abs_diff_eq!(sol.success, 0.4, epsilon = 1e-12);

    let e = StateEnsemble::from_real(&[vec![1.0, 0.0], vec![0.0, 1.0]], Some(vec![0.3, 0.7])).unwrap();
    let sol = solve_two_state(&gram(&e), e.priors()).unwrap();
    assert_eq!(sol.q(), &[0.0, 0.0]);
    assert_eq!(sol.success, 1.0);

    let e = StateEnsemble::from_real(&[vec![1.0, 0.0], vec![0.5, 0.75f64.sqrt()]], Some(vec![0.9, 0.1])).unwrap();
    let sol = solve_two_state(&gram(&e), e.priors()).unwrap();
    let oracle = hyperbola_oracle(0.5, [0.9, 0.1], 1e-3);
    assert!(sol.failure <= oracle + 1e-12);
    assert!(oracle - sol.failure < 1e-3);
    assert!(sol.q().iter().all(|v| (0.0..=1.0).contains(v)));

    assert!(solve_two_state(&gram(&basis(3)), &equal_priors(3)).is_err());
}

#[test]
fn three_state_examples() {
    let sol = solve_three_state(&gram(&case1(0.5)), &equal_priors(3)).unwrap();
    for v in sol.q() {
        assert_abs_diff_eq!(*v, 0.5, epsilon = 1e-9);
    }
    assert_abs_diff_eq!(sol.failure, 0.5, epsilon = 1e-9);
    assert_eq!(sol.delta, Some(0.0));
    assert_eq!(sol.rank, 1);

    let sol = solve_three_state(&gram(&case2()), &equal_priors(3)).unwrap();
    let want = [1.0, 1.0 / 3.0, 1.0 / 3.0];
    for (v, w) in sol.q().iter().zip(want) {
        assert_abs_diff_eq!(*v, w, epsilon = 1e-9);
    }
    assert_abs_diff_eq!(sol.failure, 5.0 / 9.0, epsilon = 1e-9);
    assert_eq!(sol.rank, 1);

    let sol = solve_three_state(&gram(&case3()), &equal_priors(3)).unwrap();
    let want = [2.0 / 3.0, 2.0 / 9.0, 2.0 / 9.0];
    for (v, w) in sol.q().iter().zip(want) {
        assert_abs_diff_eq!(*v, w, epsilon = 1e-9);
    }
    assert_abs_diff_eq!(sol.failure, 10.0 / 27.0, epsilon = 1e-9);
    assert_eq!(sol.rank, 2);
}

#[test]
fn two_overlap_branches() {
    let sol = solve_three_state_two_overlap(1.0 / 3f64.sqrt(), 1.0 / 3.0).unwrap();
    assert_abs_diff_eq!(sol.failure, 5.0 / 9.0, epsilon = 1e-12);
    assert_eq!(sol.rank, 1);
    let sol = solve_three_state_two_overlap(1.0 / 3.0, 1.0 / 9.0).unwrap();
    assert_abs_diff_eq!(sol.failure, 10.0 / 27.0, epsilon = 1e-12);
    assert_eq!(sol.rank, 2);
    let sol = solve_three_state_two_overlap(0.4, 0.4).unwrap();
    for v in sol.q() {
        assert_abs_diff_eq!(*v, 0.4, epsilon = 1e-12);
    }
    assert!(solve_three_state_two_overlap(0.5, 0.0).is_err());
    assert!(solve_three_state_two_overlap(0.9, 0.5).is_err());
    assert!(solve_three_state_two_overlap(1.0, 1.0).is_err());
}

#[test]
fn numeric_examples() {
    let sol = solve_numeric(&gram(&case1(0.5)), &equal_priors(3)).unwrap();
    assert_abs_diff_eq!(sol.failure, 0.5, epsilon = 1e-6);
    assert_eq!(sol.method, SolverMethod::Numeric);

    for n in 2..=5 {
        let sol = solve_numeric(&gram(&basis(n)), &equal_priors(n)).unwrap();
        assert!(sol.q().iter().all(|v| *v == 0.0));
        assert_eq!(sol.failure, 0.0);
    }
}

#[test]
fn numeric_matches_every_analytic_case() {
    let cases = [case1(0.2), case1(0.5), case1(0.8), case2(), case3()];
    for e in cases {
        let g = gram(&e);
        let a = solve_three_state(&g, e.priors()).unwrap();
        let n = solve_numeric(&g, e.priors()).unwrap();
        assert!((a.failure - n.failure).abs() < 1e-6, "{} vs {}", a.failure, n.failure);
    }
}

#[test]
fn unequal_priors_route_to_numeric() {
    let e = StateEnsemble::from_real(
        &[vec![1.0, 0.0, 0.0], vec![0.5, 0.75f64.sqrt(), 0.0], vec![0.5, 0.0, 0.75f64.sqrt()]],
        Some(vec![0.5, 0.3, 0.2]),
    )
    .unwrap();
    let sol = solve(&gram(&e), e.priors(), SolverSelector::Auto).unwrap();
    assert_eq!(sol.method, SolverMethod::Numeric);
    assert!(solve(&gram(&e), e.priors(), SolverSelector::Analytic).is_err());
}

fn check_invariants(g: &GramMatrix, priors: &[f64], sol: &DiscriminationSolution) -> Result<(), TestCaseError> {
    prop_assert!(sol.q().iter().all(|v| (0.0..=1.0).contains(v)));
    let c = failure_matrix(g, &sol.assignment).unwrap();
    prop_assert!(c.min_eigenvalue().abs() <= SINGULAR_TOL, "lambda_min {}", c.min_eigenvalue());
    let q: f64 = sol.q().iter().zip(priors).map(|(q, p)| q * p).sum();
    prop_assert!((q - sol.failure).abs() <= 1e-12);
    prop_assert!((sol.success - (1.0 - sol.failure)).abs() <= 1e-15);
    prop_assert_eq!(sol.rank, c.rank());
    Ok(())
}

fn random_priors(seed: u64, n: usize) -> Vec<f64> {
    use rand::Rng;
    let mut r = rng(seed ^ 0x9e37_79b9);
    let w: Vec<f64> = (0..n).map(|_| r.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn uniform_shift_moves_the_spectrum(seed in any::<u64>(), n in 2usize..6, q0 in 0.0..1.0f64, t in -0.5..0.5f64) {
        let e = random_ensemble(n, true, &mut rng(seed));
        let g = gram(&e);
        let base = FailureAssignment::uniform(n, q0).unwrap();
        let shifted = FailureAssignment::uniform(n, q0 + t);
        prop_assume!(shifted.is_ok());
        let a = failure_matrix(&g, &base).unwrap().min_eigenvalue();
        let b = failure_matrix(&g, &shifted.unwrap()).unwrap().min_eigenvalue();
        prop_assert!((b - (a + t)).abs() <= 1e-12);
    }

    #[test]
    fn two_state_solutions_sit_on_the_hyperbola(overlap in 0.0..0.99f64, angle in 0.0..6.3f64, eta in 0.05..0.95f64) {
        let s = overlap * num_complex::Complex64::from_polar(1.0, angle);
        let b = (1.0 - overlap * overlap).sqrt();
        let e = StateEnsemble::new(
            vec![CVector::from_vec(vec![c(1.0), c(0.0)]), CVector::from_vec(vec![s, c(b)])],
            Some(vec![eta, 1.0 - eta]),
        ).unwrap();
        let g = gram(&e);
        let sol = solve_two_state(&g, e.priors()).unwrap();
        let o2 = g.get(0, 1).norm_sqr();
        prop_assert!((sol.q()[0] * sol.q()[1] - o2).abs() <= 1e-12);
        check_invariants(&g, e.priors(), &sol)?;
        let oracle = hyperbola_oracle(g.get(0, 1).norm(), [e.priors()[0], e.priors()[1]], 1e-4);
        prop_assert!(sol.failure <= oracle + 1e-12);
        prop_assert!(oracle - sol.failure < 1e-3);
    }

    #[test]
    fn equal_overlaps_fail_with_probability_s(s in 0.01..0.99f64) {
        let e = case1(s);
        let g = gram(&e);
        let sol = solve_three_state(&g, e.priors()).unwrap();
        prop_assert!((sol.failure - s).abs() < 1e-9);
        prop_assert_eq!(sol.delta, Some(0.0));
        prop_assert_eq!(sol.rank, 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn three_state_solutions_are_valid(seed in any::<u64>()) {
        let e = random_ensemble(3, false, &mut rng(seed));
        let g = gram(&e);
        let sol = solve(&g, e.priors(), SolverSelector::Auto).unwrap();
        check_invariants(&g, e.priors(), &sol)?;
        if sol.delta == Some(0.0) {
            for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                let minor = sol.q()[i] * sol.q()[j] - g.get(i, j).norm_sqr();
                prop_assert!(minor.abs() <= 1e-9, "minor ({i},{j}) = {minor}");
            }
            prop_assert_eq!(sol.rank, 1);
        }
    }

    #[test]
    fn analytic_and_numeric_agree(seed in any::<u64>()) {
        let e = random_ensemble(3, false, &mut rng(seed));
        let g = gram(&e);
        let a = solve(&g, e.priors(), SolverSelector::Analytic).unwrap();
        let n = solve_numeric(&g, e.priors()).unwrap();
        prop_assert!((a.failure - n.failure).abs() < 1e-6, "{} vs {}", a.failure, n.failure);
    }

    #[test]
    fn numeric_solutions_are_valid_and_bounded(seed in any::<u64>(), n in 2usize..5, complex in any::<bool>()) {
        let e = random_ensemble(n, complex, &mut rng(seed));
        let g = gram(&e);
        let priors = random_priors(seed, n);
        let sol = solve_numeric(&g, &priors).unwrap();
        check_invariants(&g, &priors, &sol)?;

        // Shifting every q_i by 1 - λ_min(O) is always feasible.
        let upper = 1.0 - min_eigenvalue(g.entries());
        prop_assert!(sol.failure <= upper + 1e-9);

        // Every pair obeys its own two-state bound.
        for i in 0..n {
            for j in i + 1..n {
                let w = priors[i] + priors[j];
                let pair = hyperbola_oracle(g.get(i, j).norm(), [priors[i] / w, priors[j] / w], 1e-4);
                prop_assert!(sol.failure >= w * (pair - 1e-3) - 1e-9);
            }
        }
    }
}
