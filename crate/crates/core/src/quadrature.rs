//! Gauss–Legendre rules, adaptive interval quadrature and product rules on
//! spheres.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::{FiniteAboveNegOneF64, GaussJacobi, GaussLegendre};

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pairs: Vec<(f64, f64)>,
}

impl Rule {
    pub fn gauss_legendre(m: usize) -> Self {
        let m = NonZeroUsize::new(m.max(1)).expect("m >= 1");
        Self { pairs: GaussLegendre::new(m).as_node_weight_pairs().to_vec() }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Nodes and weights mapped affinely onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        self.pairs.iter().map(move |&(x, w)| (c + h * x, h * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn panel_rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| Rule::gauss_legendre(10))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// Limit on accepted panels before [`adaptive`] gives up.
pub const MAX_PANELS: usize = 1 << 16;

/// Adaptive bisection with a 10-point Gauss–Legendre panel rule.
///
/// A panel is accepted when its value and the sum over its halves differ by
/// at most `max(abs_tol, rel_tol·|estimate|)` scaled by the panel's share of
/// `[a, b]`.
pub fn adaptive(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<Integral> {
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0 });
    }
    let rule = panel_rule();
    let total = (b - a).abs();
    let whole = rule.integrate(a, b, &mut f);
    let scale_hint = whole.abs();
    let mut stack = vec![(a, b, whole, 0u32)];
    let mut value = 0.0;
    let mut error = 0.0;
    let mut panels = 0usize;
    while let Some((lo, hi, est, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(lo, mid, &mut f);
        let right = rule.integrate(mid, hi, &mut f);
        let refined = left + right;
        let diff = (refined - est).abs();
        let share = (hi - lo).abs() / total;
        let tol = abs_tol.max(rel_tol * scale_hint.max(refined.abs())) * share;
        if diff <= tol || depth >= 50 || mid == lo || mid == hi {
            value += refined;
            error += diff;
            panels += 1;
            if panels > MAX_PANELS {
                return Err(Error::NonConvergence(format!("adaptive quadrature exceeded {MAX_PANELS} panels")));
            }
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    Ok(Integral { value, error })
}

/// `γ_k`, the surface measure of the unit sphere `S^k ⊂ ℝ^{k+1}`.
pub fn sphere_area(k: usize) -> f64 {
    let m = (k + 1) as f64;
    2.0 * PI.powf(m / 2.0) / statrs::function::gamma::gamma(m / 2.0)
}

/// A product rule on `S^k` with resolution `res` per angle.
///
/// `S⁰` is the two points `±1` with unit weight each. `S¹` uses `2·res`
/// equispaced angles. For `k ≥ 2` the height `t = cos θ` carries the
/// Gauss–Jacobi rule for the weight `(1 − t²)^{(k−2)/2}` and the rest
/// recurses, so the rule is exact on low-degree polynomials. Weights sum to
/// `γ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereRule {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    pub fn new(k: usize, res: usize) -> Self {
        let res = res.max(1);
        let (points, weights) = match k {
            0 => (vec![vec![1.0], vec![-1.0]], vec![1.0, 1.0]),
            1 => {
                let m = 2 * res;
                let h = 2.0 * PI / m as f64;
                ((0..m).map(|i| {
                    let phi = (i as f64 + 0.5) * h;
                    vec![phi.cos(), phi.sin()]
                })
                .collect(), vec![h; m])
            }
            _ => {
                let inner = SphereRule::new(k - 1, res);
                let ab = FiniteAboveNegOneF64::new((k as f64 - 2.0) / 2.0).expect("exponent >= 0");
                let rule = GaussJacobi::new(NonZeroUsize::new(res).expect("res >= 1"), ab, ab);
                let mut pts = Vec::with_capacity(res * inner.points.len());
                let mut wts = Vec::with_capacity(pts.capacity());
                for &(c, wt) in rule.as_node_weight_pairs() {
                    let s = (1.0 - c * c).max(0.0).sqrt();
                    for (p, &wi) in inner.points.iter().zip(&inner.weights) {
                        let mut v = Vec::with_capacity(k + 1);
                        v.push(c);
                        v.extend(p.iter().map(|x| s * x));
                        pts.push(v);
                        wts.push(wt * wi);
                    }
                }
                (pts, wts)
            }
        };
        Self { dim: k, points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
