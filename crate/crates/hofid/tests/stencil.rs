//! Weight generation checked against classical tables, the defining moment
//! conditions, and exact differentiation of polynomials.

use approx::assert_relative_eq;
use hofid::stencil::{
    fd_weights, lagrange_value, quadrature_weights, stencil_plan, Stencil, MAX_SPACING_RATIO,
};
use hofid::{Error, Grid};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn factorial(m: usize) -> f64 {
    (1..=m).map(|v| v as f64).product()
}

/// Strictly increasing nodes with adjacent spacing ratios well inside the
/// admissible range.
fn graded_nodes(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut x = rng.random_range(-2.0..2.0);
    let mut h = rng.random_range(0.05..0.5);
    let mut nodes = vec![x];
    for _ in 1..len {
        h *= rng.random_range(0.6..1.6);
        x += h;
        nodes.push(x);
    }
    nodes
}

#[test]
fn classical_central_second_derivative() {
    let h = 0.1;
    let w = fd_weights(&[-h, 0.0, h], 0.0, 2).unwrap();
    let want = [1.0 / (h * h), -2.0 / (h * h), 1.0 / (h * h)];
    for (got, want) in w.iter().zip(want) {
        assert_relative_eq!(got, &want, max_relative = 1e-13);
    }
}

#[test]
fn classical_one_sided_first_derivative() {
    // forward fourth-order formula at the left end of five uniform nodes
    let h = 0.2;
    let nodes: Vec<f64> = (0..5).map(|j| j as f64 * h).collect();
    let w = fd_weights(&nodes, 0.0, 1).unwrap();
    let want = [-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -0.25];
    for (got, want) in w.iter().zip(want) {
        assert_relative_eq!(got, &(want / h), max_relative = 1e-12);
    }
}

#[test]
fn moment_conditions_hold_on_graded_nodes() {
    // sum_j w_j (x_j - x)^m must equal m! when m = nu and 0 otherwise,
    // for every m below the node count; checked term by term against the
    // magnitude actually summed so cancellation is accounted for
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..60 {
        let len = rng.random_range(3..=9);
        let nu = rng.random_range(1..=2.min(len - 1));
        let nodes = graded_nodes(&mut rng, len);
        let i = rng.random_range(0..len);
        let w = fd_weights(&nodes, nodes[i], nu).unwrap();
        for m in 0..len {
            let mut sum = 0.0;
            let mut mag = 0.0f64;
            for (wj, xj) in w.iter().zip(&nodes) {
                let term = wj * (xj - nodes[i]).powi(m as i32);
                sum += term;
                mag = mag.max(term.abs());
            }
            let want = if m == nu { factorial(m) } else { 0.0 };
            assert!(
                (sum - want).abs() <= 1e-9 * mag.max(1.0),
                "moment {m} of nu={nu} stencil on {len} nodes: got {sum}, want {want}"
            );
        }
    }
}

#[test]
fn differentiates_polynomials_exactly() {
    // a formula on L nodes must be exact for every polynomial of degree
    // below L; the derivative oracle is evaluated from the coefficients
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let len = rng.random_range(4..=10);
        let nu = rng.random_range(1..=2usize);
        let nodes = graded_nodes(&mut rng, len);
        let i = rng.random_range(0..len);
        let coeffs: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let eval = |x: f64| -> f64 { coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c) };
        let deriv = |x: f64, nu: usize| -> f64 {
            let mut total = 0.0;
            for (m, c) in coeffs.iter().enumerate() {
                if m >= nu {
                    let fall: f64 = (m - nu + 1..=m).map(|v| v as f64).product();
                    total += c * fall * x.powi((m - nu) as i32);
                }
            }
            total
        };
        let w = fd_weights(&nodes, nodes[i], nu).unwrap();
        let got: f64 = w.iter().zip(&nodes).map(|(wj, xj)| wj * eval(*xj)).sum();
        let want = deriv(nodes[i], nu);
        let scale: f64 = w
            .iter()
            .zip(&nodes)
            .map(|(wj, xj)| (wj * eval(*xj)).abs())
            .fold(1.0, f64::max);
        assert!(
            (got - want).abs() <= 1e-9 * scale,
            "degree-{} polynomial, nu={nu}: got {got}, want {want}",
            len - 1
        );
    }
}

proptest! {
    #[test]
    fn weights_are_translation_and_dilation_covariant(
        shift in -50.0f64..50.0,
        scale in 0.1f64..30.0,
        seed in 0u64..1000,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nodes = graded_nodes(&mut rng, 6);
        let nu = 1 + (seed % 2) as usize;
        let i = (seed % 6) as usize;
        let base = fd_weights(&nodes, nodes[i], nu).unwrap();

        let moved: Vec<f64> = nodes.iter().map(|x| x + shift).collect();
        let w_moved = fd_weights(&moved, moved[i], nu).unwrap();
        for (a, b) in base.iter().zip(&w_moved) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }

        let dilated: Vec<f64> = nodes.iter().map(|x| scale * x).collect();
        let w_dilated = fd_weights(&dilated, dilated[i], nu).unwrap();
        let factor = scale.powi(nu as i32);
        for (a, b) in base.iter().zip(&w_dilated) {
            prop_assert!((a / factor - b).abs() <= 1e-9 * (a / factor).abs().max(1.0));
        }
    }
}

#[test]
fn rejects_extreme_spacing_ratios() {
    let nodes = [0.0, 0.001, 0.002, 0.2];
    match fd_weights(&nodes, 0.002, 2) {
        Err(Error::IllConditionedStencil { ratio, limit, .. }) => {
            assert!(ratio > MAX_SPACING_RATIO);
            assert_eq!(limit, MAX_SPACING_RATIO);
        }
        other => panic!("expected a conditioning error, got {other:?}"),
    }
}

#[test]
fn rejects_malformed_node_sets() {
    assert!(matches!(
        fd_weights(&[0.0, 1.0, 1.0], 0.0, 1),
        Err(Error::BadStencil(_))
    ));
    assert!(matches!(
        fd_weights(&[0.0, 1.0, 2.0], 0.5, 1),
        Err(Error::BadStencil(_))
    ));
    assert!(matches!(
        fd_weights(&[0.0, 1.0], 0.0, 2),
        Err(Error::BadStencil(_))
    ));
}

#[test]
fn plan_is_symmetric_inside_and_shifted_at_boundaries() {
    assert_eq!(stencil_plan(4, 2, 20, 40).unwrap(), (2, 2));
    assert_eq!(stencil_plan(4, 2, 1, 40).unwrap(), (1, 4));
    assert_eq!(stencil_plan(4, 2, 0, 40).unwrap(), (0, 5));
    assert_eq!(stencil_plan(4, 2, 39, 40).unwrap(), (4, 1));
    assert_eq!(stencil_plan(4, 2, 40, 40).unwrap(), (5, 0));
    // one-sided rows keep s + r = p + nu - 1 so the order is preserved
    for i in 0..=12 {
        let (s, r) = stencil_plan(6, 2, i, 12).unwrap();
        assert!(s <= i && i + r <= 12);
        if (3..=9).contains(&i) {
            assert_eq!((s, r), (3, 3));
        } else {
            assert_eq!(s + r, 7);
        }
    }
}

#[test]
fn plan_rejects_grids_too_coarse_for_the_order() {
    match stencil_plan(8, 2, 3, 8) {
        Err(Error::GridTooCoarse { needed, .. }) => assert_eq!(needed, 10),
        other => panic!("expected a coarseness error, got {other:?}"),
    }
    assert!(stencil_plan(5, 2, 0, 40).is_err());
    assert!(stencil_plan(14, 2, 0, 40).is_err());
    assert!(stencil_plan(4, 3, 0, 40).is_err());
}

#[test]
fn stencil_applies_to_grid_samples() {
    let n = 24;
    let h = 1.0 / n as f64;
    let points: Vec<f64> = (0..=n).map(|j| j as f64 * h).collect();
    let y2: Vec<f64> = points.iter().map(|x| x * x).collect();
    let y3: Vec<f64> = points.iter().map(|x| x * x * x).collect();
    for i in 0..=n {
        let st = Stencil::at(&points, i, 4, 2).unwrap();
        assert_relative_eq!(st.apply(&y2, i), 2.0, max_relative = 1e-9);
        assert_relative_eq!(st.apply(&y3, i), 6.0 * points[i], epsilon = 1e-8);
    }
}

#[test]
fn quadrature_integrates_linears_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut points = vec![-1.3];
    for _ in 0..40 {
        let step = rng.random_range(0.02..0.3);
        points.push(points.last().unwrap() + step);
    }
    let (a, b) = (points[0], points[40]);
    let grid = Grid::new(points.clone(), 0).unwrap();
    let v = quadrature_weights(&grid);
    assert_eq!(v.len(), points.len());
    let total: f64 = v.iter().sum();
    assert_relative_eq!(total, b - a, max_relative = 1e-13);
    let first_moment: f64 = v.iter().zip(&points).map(|(vi, xi)| vi * xi).sum();
    assert_relative_eq!(first_moment, (b * b - a * a) / 2.0, max_relative = 1e-12);
}

#[test]
fn lagrange_interpolation_reproduces_quadratics() {
    let xs = [0.0, 0.7, 1.1, 2.4];
    let f = |x: f64| 3.0 - 2.0 * x + 0.5 * x * x;
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    for &x in &xs {
        assert_relative_eq!(lagrange_value(&xs, &ys, x), f(x), max_relative = 1e-13);
    }
    for &x in &[0.3, 1.0, 2.0] {
        assert_relative_eq!(lagrange_value(&xs, &ys, x), f(x), max_relative = 1e-12);
    }
}
