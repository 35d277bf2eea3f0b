//! Lattice height `α` against brute-force oracles and its transformation laws.

use nalgebra::DMatrix;
use oppenheim_core::group_actions::haar_so;
use oppenheim_core::lattices::{alpha, siegel_transform, AlphaMode, BallIndicator, Lattice};
use oppenheim_core::linalg::exterior_operator_norms;
use oppenheim_core::stats::stream_rng;
use proptest::prelude::*;
use rand::Rng;
use proptest::test_runner::Config;

fn config(cases: u32) -> Config {
    Config { cases, failure_persistence: None, ..Config::default() }
}

/// Scales to determinant 1, swapping two columns first if needed.
fn unimodular(mut m: DMatrix<f64>) -> Option<DMatrix<f64>> {
    let d = m.determinant();
    let s = m.singular_values();
    if d.abs() < 1e-3 || s.max() / s.min() > 20.0 {
        return None;
    }
    if d < 0.0 {
        m.swap_columns(0, 1);
    }
    let n = m.nrows() as f64;
    Some(m / d.abs().powf(1.0 / n))
}

fn matrix(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-2.0..2.0f64, n * n)
        .prop_filter_map("well-conditioned", move |v| unimodular(DMatrix::from_vec(n, n, v)))
}

fn spd_unimodular(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-1.0..1.0f64, n * n).prop_map(move |v| {
        let b = DMatrix::from_vec(n, n, v);
        let a = &b * b.transpose() + DMatrix::identity(n, n) * 0.5;
        let d = a.determinant();
        a / d.powf(1.0 / n as f64)
    })
}

/// Shortest nonzero vector length by scanning a coefficient box that provably
/// contains the minimizer: `‖x‖ ≤ ‖Bx‖ / σ_min(B)`.
fn brute_min_norm(b: &DMatrix<f64>) -> f64 {
    let n = b.nrows();
    let upper = (0..n).map(|j| b.column(j).norm()).fold(f64::INFINITY, f64::min);
    let r = (upper / b.singular_values().min()).floor() as i64;
    let mut x = vec![-r; n];
    let mut best = upper;
    loop {
        if x.iter().any(|&c| c != 0) {
            let v = b * nalgebra::DVector::from_iterator(n, x.iter().map(|&c| c as f64));
            best = best.min(v.norm());
        }
        let mut k = 0;
        while k < n && x[k] == r {
            x[k] = -r;
            k += 1;
        }
        if k == n {
            return best;
        }
        x[k] += 1;
    }
}

proptest! {
    #![proptest_config(config(64))]

    /// In dimension 3 with covolume 1, a primitive plane has covolume equal to
    /// the length of its primitive normal in the dual lattice, so
    /// `α = max(1, 1/λ₁(Λ), 1/λ₁(Λ*))`.
    #[test]
    fn alpha_matches_successive_minima_oracle_in_dimension_three(b in matrix(3)) {
        let dual = b.clone().try_inverse().unwrap().transpose();
        let want = 1f64.max(1.0 / brute_min_norm(&b)).max(1.0 / brute_min_norm(&dual));
        let got = alpha(&Lattice::new(b).unwrap(), AlphaMode::Exact).unwrap().value;
        prop_assert!((got - want).abs() <= 1e-9 * want, "{got} vs {want}");
    }

    #[test]
    fn alpha_matches_shortest_vector_in_dimension_two(b in matrix(2)) {
        let want = 1f64.max(1.0 / brute_min_norm(&b));
        let got = alpha(&Lattice::new(b).unwrap(), AlphaMode::Exact).unwrap().value;
        prop_assert!((got - want).abs() <= 1e-9 * want);
    }

    #[test]
    fn certified_bounds_bracket_exact(b in matrix(4)) {
        let lat = Lattice::new(b).unwrap();
        let exact = alpha(&lat, AlphaMode::Exact).unwrap().value;
        match alpha(&lat, AlphaMode::Certified).unwrap().mode {
            oppenheim_core::lattices::AlphaQuality::Certified { lower, upper } => {
                prop_assert!(lower <= exact * (1.0 + 1e-9) && exact <= upper * (1.0 + 1e-9));
            }
            other => prop_assert!(false, "unexpected quality {other:?}"),
        }
    }
}

proptest! {
    #![proptest_config(config(500))]

    #[test]
    fn alpha_is_submultiplicative_for_diagonal_factors(d in proptest::collection::vec(-1.5..1.5f64, 4), g in matrix(4)) {
        let mean = d.iter().sum::<f64>() / 4.0;
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(4, d.iter().map(|x| (x - mean).exp())));
        let lhs = alpha(&Lattice::new(&a * &g).unwrap(), AlphaMode::Exact).unwrap().value;
        let fa = alpha(&Lattice::new(a).unwrap(), AlphaMode::Exact).unwrap().value;
        let fg = alpha(&Lattice::new(g).unwrap(), AlphaMode::Exact).unwrap().value;
        prop_assert!(lhs <= fa * fg * (1.0 + 1e-6), "{lhs} > {fa}·{fg}");
    }

    /// A self-adjoint factor acts through its eigenvalues: the bound uses `α`
    /// of the diagonalized factor.
    #[test]
    fn self_adjoint_factor_is_bounded_by_its_diagonalization(a in spd_unimodular(4), g in matrix(4)) {
        let eig = a.clone().symmetric_eigen().eigenvalues;
        let diag = DMatrix::from_diagonal(&eig);
        let lhs = alpha(&Lattice::new(&a * &g).unwrap(), AlphaMode::Exact).unwrap().value;
        let fa = alpha(&Lattice::new(diag).unwrap(), AlphaMode::Exact).unwrap().value;
        let fg = alpha(&Lattice::new(g).unwrap(), AlphaMode::Exact).unwrap().value;
        prop_assert!(lhs <= fa * fg * (1.0 + 1e-6), "{lhs} > {fa}·{fg}");
    }

    #[test]
    fn alpha_ratio_is_bounded_by_exterior_norms(g1 in matrix(4), g2 in matrix(4)) {
        let num = alpha(&Lattice::new(&g1 * &g2).unwrap(), AlphaMode::Exact).unwrap().value;
        let den = alpha(&Lattice::new(g2).unwrap(), AlphaMode::Exact).unwrap().value;
        let bound = exterior_operator_norms(&g1.try_inverse().unwrap()).into_iter().fold(0.0, f64::max);
        prop_assert!(num / den <= bound * (1.0 + 1e-6));
    }
}

proptest! {
    #![proptest_config(config(100))]

    #[test]
    fn alpha_is_rotation_invariant(g in matrix(4), seed in any::<u64>()) {
        let k = haar_so(4, &mut stream_rng(seed, 0));
        let a = alpha(&Lattice::new(g.clone()).unwrap(), AlphaMode::Exact).unwrap().value;
        let b = alpha(&Lattice::new(k * g).unwrap(), AlphaMode::Exact).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-9 * a);
    }
}

/// A random basis with condition number at most 100, from a fixed stream.
fn conditioned(rng: &mut impl rand::Rng, n: usize) -> DMatrix<f64> {
    loop {
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let s = m.singular_values();
        if s.max() / s.min() <= 100.0 {
            let d: f64 = m.determinant();
            return m / d.abs().powf(1.0 / n as f64);
        }
    }
}

/// The counting function of the unit ball is dominated by `c·α` for one
/// constant `c`. The constant is fitted on one sample and then checked on a
/// fresh one. A sample maximum is not an upper bound, so the check allows 50%
/// headroom over the fitted value.
#[test]
fn unit_ball_counts_are_dominated_by_alpha() {
    let ratios = |stream: u64| -> Vec<f64> {
        let mut rng = stream_rng(17, stream);
        (0..500)
            .map(|_| {
                let lat = Lattice::new(conditioned(&mut rng, 4)).unwrap();
                let f = siegel_transform(&BallIndicator(1.0), &lat).unwrap();
                f / alpha(&lat, AlphaMode::Exact).unwrap().value
            })
            .collect()
    };
    let c = ratios(1).into_iter().fold(0.0, f64::max);
    assert!(c > 0.0, "degenerate fit");
    let worst = ratios(2).into_iter().fold(0.0, f64::max);
    assert!(worst <= 1.5 * c, "fresh ratio {worst} exceeds fitted {c}");
}

/// With `α(a)` read as the height of the lattice `aℤⁿ`, the product bound
/// fails for some non-diagonal self-adjoint `a`.
#[test]
fn product_bound_needs_the_diagonalized_factor() {
    let mut rng = stream_rng(5, 0);
    let violated = (0..2000).any(|_| {
        let b = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
        let a: DMatrix<f64> = &b * b.transpose() + DMatrix::identity(4, 4) * 0.5;
        let det: f64 = a.determinant();
        let a = &a / det.powf(0.25);
        let g = conditioned(&mut rng, 4);
        let lhs = alpha(&Lattice::new(&a * &g).unwrap(), AlphaMode::Exact).unwrap().value;
        let fa = alpha(&Lattice::new(a).unwrap(), AlphaMode::Exact).unwrap().value;
        let fg = alpha(&Lattice::new(g).unwrap(), AlphaMode::Exact).unwrap().value;
        lhs > fa * fg * (1.0 + 1e-6)
    });
    assert!(violated);
}
