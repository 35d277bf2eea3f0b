//! Joint counts against full-box enumeration, shard independence, and
//! covariance under integral changes of variables.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use oppenheim_core::counting::{count_joint, CountQuery, Interval};
use oppenheim_core::forms::{FormPair, LinearForm, PairType, QuadraticForm};
use proptest::prelude::*;
use proptest::test_runner::Config;

fn config(cases: u32) -> Config {
    Config { cases, failure_persistence: None, ..Config::default() }
}

fn type_one_pair(n: usize) -> impl Strategy<Value = FormPair> {
    (proptest::collection::vec(-1.0..1.0f64, n * n), proptest::collection::vec(-1.0..1.0f64, n)).prop_filter_map(
        "type I with indefinite kernel",
        move |(g, l)| {
            let g = DMatrix::from_vec(n, n, g);
            let q = QuadraticForm::new((&g + g.transpose()) * 0.5).ok()?;
            let pair = FormPair::new(q, LinearForm::new(l).ok()?).ok()?;
            let s = pair.cached_signature_on_kernel;
            (matches!(pair.cached_type, PairType::TypeI(_)) && s.pos > 0 && s.neg > 0).then_some(pair)
        },
    )
}

fn window() -> impl Strategy<Value = (Interval, Interval)> {
    (-3.0..1.0f64, 0.3..4.0f64, -1.5..0.5f64, 0.3..2.0f64)
        .prop_map(|(a, la, b, lb)| (Interval::new(a, a + la).unwrap(), Interval::new(b, b + lb).unwrap()))
}

fn values(pair: &FormPair, v: &[i64]) -> (f64, f64) {
    let x: Vec<f64> = v.iter().map(|&c| c as f64).collect();
    (pair.q.eval(&x), pair.l.eval(&x))
}

/// All nonzero `v` with `‖g⁻¹v‖ < t` (for `g = Id` the ordinary ball) that land
/// in the window, by scanning a box of half-width `r`.
fn brute_force(pair: &FormPair, inside: impl Fn(&[i64]) -> bool, r: i64, i: Interval, j: Interval) -> BTreeSet<Vec<i64>> {
    let n = pair.dim();
    let mut v = vec![-r; n];
    let mut out = BTreeSet::new();
    loop {
        if v.iter().any(|&c| c != 0) && inside(&v) {
            let (qv, lv) = values(pair, &v);
            if i.contains(qv) && j.contains(lv) {
                out.insert(v.clone());
            }
        }
        let mut k = 0;
        while k < n && v[k] == r {
            v[k] = -r;
            k += 1;
        }
        if k == n {
            return out;
        }
        v[k] += 1;
    }
}

fn norm_sq(v: &[i64]) -> i64 {
    v.iter().map(|c| c * c).sum()
}

fn witnesses(pair: &FormPair, t: f64, i: Interval, j: Interval, shards: usize) -> BTreeSet<Vec<i64>> {
    let q = CountQuery { pair: pair.clone(), t, i, j, collect_witnesses: true };
    let r = count_joint(&q, shards).unwrap();
    let w: BTreeSet<_> = r.witnesses.unwrap().into_iter().collect();
    assert_eq!(w.len() as u64, r.n_count);
    w
}

/// A product of elementary integer matrices: determinant 1, integer inverse.
fn integral_unimodular(n: usize) -> impl Strategy<Value = DMatrix<i64>> {
    proptest::collection::vec((0..n, 0..n, prop_oneof![Just(-1i64), Just(1)]), 1..6).prop_map(move |ops| {
        let mut g = DMatrix::<i64>::identity(n, n);
        for (a, b, s) in ops {
            if a != b {
                let row = g.row(b).clone_owned() * s;
                let mut target = g.row_mut(a);
                target += row;
            }
        }
        g
    })
}

proptest! {
    #![proptest_config(config(50))]

    #[test]
    fn counts_match_brute_force_in_dimension_four(pair in type_one_pair(4), t in 3.0..15.0f64, (i, j) in window()) {
        let want = brute_force(&pair, |v| (norm_sq(v) as f64) < t * t, t.ceil() as i64, i, j);
        prop_assert_eq!(witnesses(&pair, t, i, j, 4), want);
    }

    #[test]
    fn counts_match_brute_force_in_dimension_five(pair in type_one_pair(5), t in 3.0..9.0f64, (i, j) in window()) {
        let want = brute_force(&pair, |v| (norm_sq(v) as f64) < t * t, t.ceil() as i64, i, j);
        prop_assert_eq!(witnesses(&pair, t, i, j, 4), want);
    }
}

proptest! {
    #![proptest_config(config(20))]

    #[test]
    fn counts_do_not_depend_on_shards(pair in type_one_pair(5), t in 5.0..20.0f64, (i, j) in window()) {
        let count = |s| count_joint(&CountQuery { pair: pair.clone(), t, i, j, collect_witnesses: false }, s).unwrap();
        let (a, b, c) = (count(1), count(4), count(16));
        prop_assert_eq!(a.n_count, b.n_count);
        prop_assert_eq!(a.n_count, c.n_count);
        prop_assert_eq!(a.n_count, a.shards.iter().map(|s| s.count).sum::<u64>());
        prop_assert_eq!(c.n_count, c.shards.iter().map(|s| s.count).sum::<u64>());
    }

    /// For `g ∈ SL_n(ℤ)`, `v ↦ g v` maps the witnesses of `(λq∘g, μl∘g)` on
    /// `λI × μJ` onto the witnesses of `(q, l)` on `I × J` in the `g`-ball.
    #[test]
    fn witnesses_transform_under_integral_changes_of_variables(
        pair in type_one_pair(4),
        g in integral_unimodular(4),
        lambda in 0.5..2.0f64,
        mu in prop_oneof![-2.0..-0.5f64, 0.5..2.0f64],
        t in 3.0..8.0f64,
        (i, j) in window(),
    ) {
        let gf = g.map(|x| x as f64);
        let moved = pair.transform(&gf, lambda, mu).unwrap();
        let scale = |w: Interval, c: f64| if c > 0.0 {
            Interval::new(c * w.lo, c * w.hi).unwrap()
        } else {
            Interval::new(c * w.hi, c * w.lo).unwrap()
        };
        let image: BTreeSet<Vec<i64>> = witnesses(&moved, t, scale(i, lambda), scale(j, mu), 2)
            .into_iter()
            .map(|v| (&g * nalgebra::DVector::from_vec(v)).iter().copied().collect())
            .collect();
        let ginv = gf.clone().try_inverse().unwrap();
        let in_g_ball = |w: &[i64]| (&ginv * nalgebra::DVector::from_iterator(4, w.iter().map(|&c| c as f64))).norm() < t;
        // The g-ball lies in the box of half-width t·‖g‖.
        let r = (t * gf.norm()).ceil() as i64;
        prop_assert_eq!(image, brute_force(&pair, in_g_ball, r, i, j));
    }
}
