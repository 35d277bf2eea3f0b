//! Volumes `V_{T,I,J}` of `{v : ‖v‖ < T, q(v) ∈ I, l(v) ∈ J}`, the growth
//! constant `C(q, l)`, the kernel `J_f`, and numerical checks of the limit
//! identities behind the passage from lattice counts to volumes.
//!
//! Coordinates for the volume: `v = σe + Px` with `e = ℓ/|ℓ|` and `P` an
//! orthonormal basis of `ker l`. Completing the square in `x` gives
//! `q(v) = yᵀMy + κσ²` with `M = PᵀQP`, `y = x + σM⁻¹PᵀQe`. In the eigenbasis
//! `z` of `M` the ball becomes `|z + σ·shift| < √(T² − σ²)`.

mod kernel;

pub use kernel::*;

use rayon::prelude::*;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::counting::Interval;
use crate::error::{Error, Result};
use crate::forms::{kernel_basis, FormPair, PairType};
use crate::linalg::symmetric_eigen;
use crate::quadrature::{Rule, SphereRule};
use crate::stats::{shard_sizes, stream_rng, Welford};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VolumeMethod {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeOptions {
    pub method: VolumeMethod,
    /// Finest refinement level of the quadrature; the error estimate is the
    /// change from the previous level.
    pub level: usize,
    pub samples: u64,
    pub seed: u64,
    pub shards: usize,
}

impl Default for VolumeOptions {
    fn default() -> Self {
        Self { method: VolumeMethod::Quadrature, level: 2, samples: 1_000_000, seed: 0, shards: 1 }
    }
}

impl VolumeOptions {
    pub fn quadrature(level: usize) -> Self {
        Self { method: VolumeMethod::Quadrature, level, ..Self::default() }
    }

    pub fn monte_carlo(samples: u64, seed: u64, shards: usize) -> Self {
        Self { method: VolumeMethod::MonteCarlo, samples, seed, shards, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeReport {
    #[serde(rename = "V")]
    pub v: f64,
    pub method: VolumeMethod,
    /// Standard error (Monte Carlo) or last refinement delta (quadrature).
    pub error_estimate: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "I")]
    pub i: Interval,
    #[serde(rename = "J")]
    pub j: Interval,
    pub samples: Option<u64>,
    pub level: Option<usize>,
}

/// The pair in `(σ, z)` coordinates.
#[derive(Debug, Clone)]
struct Split {
    m: usize,
    l_norm: f64,
    kappa: f64,
    /// Eigenvalues of `M`, ascending.
    lam: Vec<f64>,
    shift: Vec<f64>,
    pos: Vec<usize>,
    neg: Vec<usize>,
}

impl Split {
    fn new(pair: &FormPair) -> Result<Self> {
        if !matches!(pair.cached_type, PairType::TypeI(_)) {
            return Err(Error::NotTypeI(pair.cached_type.to_string()));
        }
        let ell = pair.l.coeffs();
        let l_norm = ell.norm();
        let e = ell / l_norm;
        let q = pair.q.gram();
        let p = kernel_basis(&pair.l);
        let (lam, u) = symmetric_eigen(&(p.transpose() * q * &p));
        let ub = u.transpose() * (p.transpose() * q * &e);
        let m = lam.len();
        let shift: Vec<f64> = (0..m).map(|i| -ub[i] / lam[i]).collect();
        let kappa = e.dot(&(q * &e)) - (0..m).map(|i| ub[i] * ub[i] / lam[i]).sum::<f64>();
        let pos: Vec<usize> = (0..m).filter(|&i| lam[i] > 0.0).collect();
        let neg: Vec<usize> = (0..m).filter(|&i| lam[i] < 0.0).collect();
        if pos.is_empty() || neg.is_empty() {
            return Err(Error::NotTypeI("restriction to ker l is definite".into()));
        }
        Ok(Self { m, l_norm, kappa, lam, shift, pos, neg })
    }

    /// `σ`-range allowed by `J` and the ball.
    fn sigma_range(&self, t: f64, j: Interval) -> Option<(f64, f64)> {
        let lo = (j.lo / self.l_norm).max(-t);
        let hi = (j.hi / self.l_norm).min(t);
        (lo < hi).then_some((lo, hi))
    }

    fn shift_norm_sq(&self) -> f64 {
        self.shift.iter().map(|x| x * x).sum()
    }
}

/// `cosh^a u · sinh^b u` as a sum of exponentials `c_k e^{ku}`.
fn hyperbolic_expansion(a: usize, b: usize) -> Vec<(f64, f64)> {
    // Coefficients of (X + 1/X)^a (X − 1/X)^b, indexed by exponent + (a + b).
    let deg = a + b;
    let mut coef = vec![0.0; 2 * deg + 1];
    coef[deg] = 1.0;
    let mut mul = |sign: f64| {
        let mut next = vec![0.0; coef.len()];
        for (k, &c) in coef.iter().enumerate() {
            if c != 0.0 {
                next[k + 1] += c;
                next[k - 1] += sign * c;
            }
        }
        coef = next;
    };
    // Degree never exceeds `deg`, so the index stays inside the buffer.
    for _ in 0..a {
        mul(1.0);
    }
    for _ in 0..b {
        mul(-1.0);
    }
    let scale = 0.5f64.powi(deg as i32);
    coef.iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(k, c)| (k as f64 - deg as f64, c * scale))
        .collect()
}

fn integrate_expansion(exp: &[(f64, f64)], u0: f64, u1: f64) -> f64 {
    exp.iter()
        .map(|&(k, c)| if k == 0.0 { c * (u1 - u0) } else { c * (k * u0).exp() * (k * (u1 - u0)).exp_m1() / k })
        .sum()
}

/// Per-sphere-node constants: `|a|²` and `a·shift` with `a_i = ω_i/√|λ_i|`.
fn sphere_node_constants(rule: &SphereRule, idx: &[usize], split: &Split) -> Vec<(f64, f64, f64)> {
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(w, &wt)| {
            let mut a2 = 0.0;
            let mut ad = 0.0;
            for (k, &i) in idx.iter().enumerate() {
                let s = 1.0 / split.lam[i].abs().sqrt();
                a2 += w[k] * w[k] * s * s;
                ad += w[k] * s * split.shift[i];
            }
            (wt, a2, ad)
        })
        .collect()
}

const GRID: usize = 12;

/// Subintervals of `[0, u_hi]` where `g < 0`, given `g(u_hi) > 0`.
fn negative_set(g: impl Fn(f64) -> f64, u_hi: f64, out: &mut Vec<(f64, f64)>) {
    out.clear();
    let h = u_hi / GRID as f64;
    let mut prev_u = 0.0;
    let mut prev_g = g(0.0);
    let mut open = (prev_g < 0.0).then_some(0.0);
    for k in 1..=GRID {
        let u = k as f64 * h;
        let gu = g(u);
        if (prev_g < 0.0) != (gu < 0.0) {
            let root = illinois(&g, prev_u, u, prev_g, gu);
            match open.take() {
                Some(start) => out.push((start, root)),
                None => open = Some(root),
            }
        }
        prev_u = u;
        prev_g = gu;
    }
    if let Some(start) = open {
        out.push((start, u_hi));
    }
}

fn illinois(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut ga: f64, mut gb: f64) -> f64 {
    let mut side = 0i8;
    for _ in 0..100 {
        let c = (a * gb - b * ga) / (gb - ga);
        let gc = g(c);
        if gc == 0.0 || (b - a).abs() <= 1e-14 * (1.0 + b.abs()) {
            return c;
        }
        if (gc < 0.0) == (gb < 0.0) {
            b = c;
            gb = gc;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            ga = gc;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        }
    }
    0.5 * (a + b)
}

/// Quadrature at one refinement level.
fn polar_volume(split: &Split, t: f64, i: Interval, j: Interval, level: usize) -> f64 {
    let Some((s_lo, s_hi)) = split.sigma_range(t, j) else {
        return 0.0;
    };
    let scale = 1usize << level;
    let n_sigma = 8 * scale;
    let n_zeta = 8 * scale;
    let res = 6 * scale;
    let pdim = split.pos.len();
    let ndim = split.neg.len();
    let rule_p = SphereRule::new(pdim - 1, res);
    let rule_n = SphereRule::new(ndim - 1, res);
    let cp = sphere_node_constants(&rule_p, &split.pos, split);
    let cn = sphere_node_constants(&rule_n, &split.neg, split);
    let exp_pos = hyperbolic_expansion(pdim - 1, ndim - 1);
    let exp_neg = hyperbolic_expansion(ndim - 1, pdim - 1);
    let jac: f64 = split.lam.iter().map(|l| l.abs().powf(-0.5)).product();
    let half_m = (split.m as f64 - 2.0) / 2.0;
    let d2_unit = split.shift_norm_sq();
    let sigma_rule = Rule::gauss_legendre(n_sigma);
    let zeta_rule = Rule::gauss_legendre(n_zeta);

    let sigma_nodes: Vec<(f64, f64)> = sigma_rule.mapped(s_lo, s_hi).collect();
    let partial: Vec<f64> = sigma_nodes
        .par_iter()
        .map(|&(sigma, ws)| {
            let rho2 = t * t - sigma * sigma;
            let d2 = sigma * sigma * d2_unit;
            // yᵀMy is confined to [λ_min, λ_max]·(ρ + |d|)² on the ball.
            let reach = (rho2.sqrt() + d2.sqrt()).powi(2);
            let zlo = (i.lo - split.kappa * sigma * sigma).max(split.lam[0] * reach);
            let zhi = (i.hi - split.kappa * sigma * sigma).min(split.lam[split.m - 1] * reach);
            let mut pieces = Vec::with_capacity(2);
            if zhi > 0.0 {
                pieces.push((zlo.max(0.0), zhi, true));
            }
            if zlo < 0.0 {
                pieces.push((zlo, zhi.min(0.0), false));
            }
            let mut intervals = Vec::with_capacity(4);
            let mut acc = 0.0;
            for (za, zb, positive) in pieces {
                for (zeta, wz) in zeta_rule.mapped(za, zb) {
                    let rz = zeta.abs().sqrt();
                    let expn = if positive { &exp_pos } else { &exp_neg };
                    let mut w_sum = 0.0;
                    for &(wp, a2, ad) in &cp {
                        for &(wn, b2, bd) in &cn {
                            // |z(u) + d|² − ρ² with z = √|ζ|(cosh u·a, sinh u·b) for ζ > 0
                            // and the roles of cosh and sinh swapped for ζ < 0.
                            let (cc, ss, c1, s1) =
                                if positive { (a2, b2, ad, bd) } else { (b2, a2, bd, ad) };
                            let g = |u: f64| {
                                let (sh, ch) = (u.sinh(), u.cosh());
                                rz * rz * (cc * ch * ch + ss * sh * sh)
                                    + 2.0 * rz * sigma * (c1 * ch + s1 * sh)
                                    + d2
                                    - rho2
                            };
                            let reach = (rho2.sqrt() + d2.sqrt()) / (rz * (cc + ss).sqrt());
                            let u_hi = reach.asinh() * (1.0 + 1e-12) + 1e-12;
                            negative_set(g, u_hi, &mut intervals);
                            let mut e = 0.0;
                            for &(u0, u1) in &intervals {
                                e += integrate_expansion(expn, u0, u1);
                            }
                            w_sum += wp * wn * e;
                        }
                    }
                    acc += wz * 0.5 * jac * rz.powf(2.0 * half_m) * w_sum;
                }
            }
            ws * acc
        })
        .collect();
    partial.iter().sum()
}

/// Monte Carlo over `(σ, z₂, …)` with the exact Lebesgue length of the fiber
/// in the direction of the largest `|λ|`.
fn fiber_monte_carlo(split: &Split, t: f64, i: Interval, j: Interval, samples: u64, seed: u64, shards: usize) -> (f64, f64) {
    let Some((s_lo, s_hi)) = split.sigma_range(t, j) else {
        return (0.0, 0.0);
    };
    let m = split.m;
    let piv = (0..m).max_by(|&a, &b| split.lam[a].abs().total_cmp(&split.lam[b].abs())).unwrap();
    let rest: Vec<usize> = (0..m).filter(|&k| k != piv).collect();
    let sizes = shard_sizes(samples, shards);
    let parts: Vec<Welford> = sizes
        .par_iter()
        .enumerate()
        .map(|(shard, &count)| {
            let mut rng = stream_rng(seed, shard as u64);
            let mut acc = Welford::default();
            for _ in 0..count {
                let sigma = s_lo + (s_hi - s_lo) * rng.random::<f64>();
                let rho = (t * t - sigma * sigma).sqrt();
                let mut ball = rho * rho;
                let mut q_rest = split.kappa * sigma * sigma;
                for &k in &rest {
                    let d = sigma * split.shift[k];
                    let z = -d + rho * (2.0 * rng.random::<f64>() - 1.0);
                    ball -= (z + d) * (z + d);
                    q_rest += split.lam[k] * z * z;
                }
                let len = if ball > 0.0 {
                    let c = -sigma * split.shift[piv];
                    let r = ball.sqrt();
                    fiber_length(split.lam[piv], q_rest, i, c - r, c + r)
                } else {
                    0.0
                };
                acc.push((s_hi - s_lo) * (2.0 * rho).powi(m as i32 - 1) * len);
            }
            acc
        })
        .collect();
    let mut total = Welford::default();
    for p in &parts {
        total.merge(p);
    }
    (total.mean, total.stderr())
}

/// Length of `{z ∈ (a, b) : λz² + rest ∈ I}`.
fn fiber_length(lambda: f64, rest: f64, i: Interval, a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = ((i.lo - rest) / lambda, (i.hi - rest) / lambda);
    if lambda < 0.0 {
        std::mem::swap(&mut lo, &mut hi);
    }
    if hi <= 0.0 {
        return 0.0;
    }
    let overlap = |x: f64, y: f64| (y.min(b) - x.max(a)).max(0.0);
    let sh = hi.sqrt();
    if lo <= 0.0 {
        overlap(-sh, sh)
    } else {
        let sl = lo.sqrt();
        overlap(-sh, -sl) + overlap(sl, sh)
    }
}

/// `V_{T,I,J}(q, l)` for a type I pair whose restriction to `ker l` is
/// indefinite.
pub fn volume_joint(pair: &FormPair, t: f64, i: Interval, j: Interval, opts: &VolumeOptions) -> Result<VolumeReport> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("T must be positive, got {t}")));
    }
    let split = Split::new(pair)?;
    let (v, error_estimate, samples, level) = match opts.method {
        VolumeMethod::Quadrature => {
            // The error estimate compares against the previous level.
            if opts.level == 0 {
                return Err(Error::InvalidInput("quadrature level must be at least 1".into()));
            }
            let fine = polar_volume(&split, t, i, j, opts.level);
            let coarse = polar_volume(&split, t, i, j, opts.level - 1);
            (fine, (fine - coarse).abs(), None, Some(opts.level))
        }
        VolumeMethod::MonteCarlo => {
            if opts.samples < 2 {
                return Err(Error::InvalidInput("Monte Carlo needs at least 2 samples".into()));
            }
            let (mean, se) = fiber_monte_carlo(&split, t, i, j, opts.samples, opts.seed, opts.shards);
            (mean, se, Some(opts.samples), None)
        }
    };
    Ok(VolumeReport { v: v.max(0.0), method: opts.method, error_estimate, t, i, j, samples, level })
}

/// Fitted growth constant with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantFit {
    #[serde(rename = "C")]
    pub c: f64,
    /// Coefficient of `1/T` in the fit.
    pub slope: f64,
    pub t_list: Vec<f64>,
    /// `V / (T^{n−3}|I||J|)` per `T`.
    pub normalized: Vec<f64>,
    pub residuals: Vec<f64>,
    pub volumes: Vec<VolumeReport>,
    /// `I` contains every value of `q` on the largest ball.
    pub q_inactive: bool,
    /// `J` contains every value of `l` on the largest ball.
    pub l_inactive: bool,
}

/// Fits `V/(T^{n−3}|I||J|) ≈ C + b/T` by least squares.
pub fn estimate_c(pair: &FormPair, t_list: &[f64], i: Interval, j: Interval, opts: &VolumeOptions) -> Result<ConstantFit> {
    if t_list.len() < 3 || t_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("estimate_C needs at least 3 increasing T values".into()));
    }
    let n = pair.dim() as i32;
    let volumes = t_list.iter().map(|&t| volume_joint(pair, t, i, j, opts)).collect::<Result<Vec<_>>>()?;
    let norm = |t: f64| t.powi(n - 3) * i.len() * j.len();
    let normalized: Vec<f64> = volumes.iter().map(|r| r.v / norm(r.t)).collect();
    let errs: Vec<f64> = volumes.iter().map(|r| r.error_estimate / norm(r.t)).collect();
    let xs: Vec<f64> = t_list.iter().map(|t| 1.0 / t).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = normalized.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&normalized).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let c = my - slope * mx;
    let residuals: Vec<f64> = xs.iter().zip(&normalized).map(|(x, y)| y - (c + slope * x)).collect();
    for w in 1..normalized.len() - 1 {
        let before = (normalized[w] - normalized[w - 1]).abs();
        let after = (normalized[w + 1] - normalized[w]).abs();
        let noise = 3.0 * (errs[w - 1] + 2.0 * errs[w] + errs[w + 1]) + 1e-12 * normalized[w].abs();
        if after > before + noise {
            return Err(Error::NonConvergence(format!(
                "normalized volume changes grow: {before:e} then {after:e} at T = {}",
                t_list[w + 1]
            )));
        }
    }
    let t_max = *t_list.last().unwrap();
    let (qvals, _) = symmetric_eigen(pair.q.gram());
    let q_reach = qvals.iter().fold(0.0f64, |m, v| m.max(v.abs())) * t_max * t_max;
    let l_reach = pair.l.coeffs().norm() * t_max;
    Ok(ConstantFit {
        c,
        slope,
        t_list: t_list.to_vec(),
        normalized,
        residuals,
        volumes,
        q_inactive: i.lo <= -q_reach && i.hi >= q_reach,
        l_inactive: j.lo <= -l_reach && j.hi >= l_reach,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{LinearForm, QuadraticForm};
    use std::f64::consts::PI;

    fn flagship() -> FormPair {
        let q = QuadraticForm::from_diagonal(&[1.0, 2f64.sqrt(), 3f64.sqrt(), -(5f64.sqrt()), -(7f64.sqrt())]);
        let l = LinearForm::new(vec![0.0, 0.0, 0.0, 1.0, 2f64.cbrt()]).unwrap();
        FormPair::new(q, l).unwrap()
    }

    fn iv(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    #[test]
    fn expansion_matches_direct_evaluation() {
        for (a, b) in [(0, 0), (2, 0), (0, 2), (1, 1), (3, 2)] {
            let e = hyperbolic_expansion(a, b);
            for u in [0.0, 0.3, 1.7] {
                let direct = (u as f64).cosh().powi(a as i32) * (u as f64).sinh().powi(b as i32);
                let series: f64 = e.iter().map(|(k, c)| c * (k * u).exp()).sum();
                assert!((direct - series).abs() < 1e-12 * (1.0 + direct.abs()));
            }
        }
    }

    #[test]
    fn fiber_length_examples() {
        // z² ∈ (1, 4) on (−10, 10): two intervals of length 1.
        assert!((fiber_length(1.0, 0.0, iv(1.0, 4.0), -10.0, 10.0) - 2.0).abs() < 1e-15);
        assert!((fiber_length(-1.0, 0.0, iv(-4.0, -1.0), 0.0, 10.0) - 1.0).abs() < 1e-15);
        assert_eq!(fiber_length(1.0, 5.0, iv(1.0, 4.0), -10.0, 10.0), 0.0);
        assert!((fiber_length(1.0, 0.0, iv(-1.0, 4.0), -1.0, 10.0) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn inactive_constraints_give_ball_volume() {
        let pair = FormPair::canonical(4, 2).unwrap();
        let t: f64 = 3.0;
        let big = iv(-1e3, 1e3);
        let ball = PI * PI / 2.0 * t.powi(4);
        let quad = volume_joint(&pair, t, big, big, &VolumeOptions::quadrature(2)).unwrap();
        assert!((quad.v / ball - 1.0).abs() < 1e-3, "quadrature {} vs {ball}", quad.v);
        let mc = volume_joint(&pair, t, big, big, &VolumeOptions::monte_carlo(200_000, 5, 2)).unwrap();
        assert!((mc.v - ball).abs() < 4.0 * mc.error_estimate, "mc {} ± {} vs {ball}", mc.v, mc.error_estimate);
    }

    #[test]
    fn volume_is_symmetric_in_j() {
        let pair = flagship();
        let i = iv(-1.0, 1.0);
        let j = iv(0.2, 0.9);
        let a = volume_joint(&pair, 20.0, i, j, &VolumeOptions::quadrature(1)).unwrap();
        let b = volume_joint(&pair, 20.0, i, j.negate(), &VolumeOptions::quadrature(1)).unwrap();
        assert!((a.v - b.v).abs() < 1e-9 * a.v);
    }

    #[test]
    fn quadrature_agrees_with_monte_carlo_on_flagship() {
        let pair = flagship();
        let i = iv(-1.0, 1.0);
        let quad = volume_joint(&pair, 30.0, i, i, &VolumeOptions::quadrature(2)).unwrap();
        let mc = volume_joint(&pair, 30.0, i, i, &VolumeOptions::monte_carlo(400_000, 11, 4)).unwrap();
        let tol = 3.0 * (quad.error_estimate.powi(2) + mc.error_estimate.powi(2)).sqrt();
        assert!((quad.v - mc.v).abs() < tol, "{} vs {} (tol {tol})", quad.v, mc.v);
        assert!(quad.error_estimate < 1e-4 * quad.v, "refinement delta {}", quad.error_estimate);
    }

    #[test]
    fn definite_kernel_is_rejected() {
        let q = QuadraticForm::from_diagonal(&[1.0, 1.0, 1.0, -1.0]);
        let l = LinearForm::new(vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        let pair = FormPair::new(q, l).unwrap();
        assert!(matches!(volume_joint(&pair, 5.0, iv(-1.0, 1.0), iv(-1.0, 1.0), &VolumeOptions::default()), Err(Error::NotTypeI(_))));
    }
}
