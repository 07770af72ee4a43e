//! Banded factorization, inverse iteration, bootstrap selection, and the
//! eigenvector utilities.

use approx::assert_relative_eq;
use hofid::stencil::quadrature_weights;
use hofid::{
    banded_lu, catalog, count_sign_changes, default_sign_threshold, eig_compute, init_approx,
    normalize, BandedMatrix, EndpointPolicy, Error, Grid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::f64::consts::PI;

fn tridiag(n: usize, lo: f64, d: f64, up: f64) -> BandedMatrix {
    let mut m = BandedMatrix::zeros(n, 1, 1);
    for i in 0..n {
        m.set(i, i, d);
        if i > 0 {
            m.set(i, i - 1, lo);
        }
        if i + 1 < n {
            m.set(i, i + 1, up);
        }
    }
    m
}

#[test]
fn banded_lu_solves_a_hand_checked_system() {
    // tridiag(-1, 2, -1) x = e_1 has the closed-form solution (3, 2, 1)/4
    let lu = banded_lu(tridiag(3, -1.0, 2.0, -1.0)).unwrap();
    let x = lu.solve(&[1.0, 0.0, 0.0]);
    let want = [0.75, 0.5, 0.25];
    for (got, want) in x.iter().zip(want) {
        assert_relative_eq!(got, &want, max_relative = 1e-14);
    }
}

#[test]
fn banded_lu_residuals_stay_at_machine_scale() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for trial in 0..20 {
        let n = rng.random_range(5..60);
        let kl = rng.random_range(1..4usize.min(n));
        let ku = rng.random_range(1..4usize.min(n));
        let mut m = BandedMatrix::zeros(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                m.set(i, j, rng.random_range(-1.0..1.0));
            }
            // diagonal dominance keeps the growth factor tame
            m.add(i, i, 8.0);
        }
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = banded_lu(m.clone()).unwrap().solve(&b);
        let ax = m.matvec(&x);
        let err = ax
            .iter()
            .zip(&b)
            .map(|(a, bi)| (a - bi).abs())
            .fold(0.0f64, f64::max);
        assert!(err <= 1e-12, "trial {trial}: residual {err}");
    }
}

#[test]
fn inverse_iteration_locks_onto_the_nearest_eigenvalue() {
    let mut m = BandedMatrix::zeros(3, 0, 0);
    m.set(0, 0, 1.0);
    m.set(1, 1, 4.0);
    m.set(2, 2, 9.0);
    let (inc, y) = eig_compute(&m, 3.9, &[0.3, 1.0, 0.2], 1e-13, 60).unwrap();
    assert_relative_eq!(3.9 + inc, 4.0, max_relative = 1e-12);
    // the eigenvector concentrates on the matching coordinate
    assert!(y[1].abs() > 0.999);
    assert!(y[0].abs() < 1e-6 && y[2].abs() < 1e-6);
}

#[test]
fn inverse_iteration_survives_an_exactly_singular_shift() {
    // eigenvalues are 2 - sqrt(2), 2, 2 + sqrt(2); shifting by exactly 2
    // makes the first factorization singular and must not derail the solve
    let m = tridiag(3, -1.0, 2.0, -1.0);
    let y0 = [0.9, 0.05, -1.1];
    let (inc, y) = eig_compute(&m, 2.0, &y0, 1e-13, 60).unwrap();
    assert!((2.0 + inc - 2.0).abs() <= 1e-10, "increment {inc}");
    // eigenvector for lambda = 2 is (1, 0, -1)/sqrt(2)
    assert_relative_eq!(y[0].abs(), 1.0 / 2.0f64.sqrt(), max_relative = 1e-8);
    assert!(y[1].abs() <= 1e-8);
}

#[test]
fn bootstrap_matches_the_coarse_laplacian_spectrum() {
    let problem = catalog("sine", &BTreeMap::new()).unwrap();
    let n0 = 40;
    let h = PI / n0 as f64;
    for k in 0..4usize {
        let boot = init_approx(&problem, k, n0, EndpointPolicy::Dirichlet).unwrap();
        let mode = (k + 1) as f64;
        let lam_exact = 4.0 * (mode * h / 2.0).sin().powi(2) / (h * h);
        assert_relative_eq!(boot.pair.lambda, lam_exact, max_relative = 1e-9);
        assert_eq!(boot.pair.zero_count, k);
        assert!(boot.index_matched);
        assert_eq!(boot.grid.n_intervals(), n0);
    }
}

#[test]
fn bootstrap_rejects_unreachable_indices() {
    let problem = catalog("sine", &BTreeMap::new()).unwrap();
    assert!(matches!(
        init_approx(&problem, 50, 20, EndpointPolicy::Dirichlet),
        Err(Error::IndexOutOfRange { .. })
    ));
}

#[test]
fn sign_change_counting_handles_noise_and_degeneracy() {
    assert_eq!(count_sign_changes(&[1.0, -1.0, 1.0], 0.0).unwrap(), 2);
    assert_eq!(count_sign_changes(&[1.0, 1.0, 1.0], 0.0).unwrap(), 0);
    // entries below the threshold are skipped, not counted as crossings
    assert_eq!(count_sign_changes(&[1.0, 1e-12, -1.0], 1e-9).unwrap(), 1);
    assert_eq!(count_sign_changes(&[0.5, 0.0, -0.5], 0.0).unwrap(), 1);
    assert_eq!(
        count_sign_changes(&[-0.2, 0.3, -0.4, 0.5, -0.6], 0.0).unwrap(),
        4
    );
    assert!(matches!(
        count_sign_changes(&[1e-12, -1e-13], 1e-9),
        Err(Error::DegenerateVector { .. })
    ));

    let y = [1.0, -1e-9, 2.0];
    let thr = default_sign_threshold(&y);
    assert_eq!(count_sign_changes(&y, thr).unwrap(), 0);
}

#[test]
fn normalization_is_idempotent_and_sign_deterministic() {
    let grid = Grid::uniform(0.0, 2.0, 32).unwrap();
    let v = quadrature_weights(&grid);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let y: Vec<f64> = (0..33).map(|_| rng.random_range(-2.0..2.0)).collect();

    let a = normalize(&y, &v).unwrap();
    let weighted: f64 = a.iter().zip(&v).map(|(ai, vi)| vi * ai * ai).sum();
    assert_relative_eq!(weighted, 1.0, max_relative = 1e-12);

    let b = normalize(&a, &v).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_relative_eq!(x, y, max_relative = 1e-13);
    }

    // a global sign flip lands on the same representative
    let flipped: Vec<f64> = y.iter().map(|v| -v).collect();
    let c = normalize(&flipped, &v).unwrap();
    for (x, y) in a.iter().zip(&c) {
        assert_relative_eq!(x, y, max_relative = 1e-13);
    }

    assert!(normalize(&vec![0.0; 33], &v).is_err());
    assert!(matches!(
        normalize(&[1.0, 2.0], &v),
        Err(Error::DimensionMismatch { .. })
    ));
}
