//! Test functions, the kernel `J_f`, sphere constants, and the two limit
//! identities that relate `K`-averages along `a_t` to integrals over the
//! null cone of `q₀` on `ker l₀`.
//!
//! Arguments are always ordered `(ζ, s)` = (value of `q₀`, value of `l₀`).

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group_actions::HaarSampler;
use crate::quadrature::{sphere_area, Rule};
use crate::stats::{shard_sizes, stream_rng, Welford};

/// `cos⁴(π(x − c)/(2w))` on `(c − w, c + w)` and zero elsewhere; `C³`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Taper {
    pub center: f64,
    pub width: f64,
}

impl Taper {
    pub fn new(center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite() && center.is_finite()) {
            return Err(Error::InvalidInput(format!("taper width must be positive, got {width}")));
        }
        Ok(Self { center, width })
    }

    pub fn lo(&self) -> f64 {
        self.center - self.width
    }

    pub fn hi(&self) -> f64 {
        self.center + self.width
    }

    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.width;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        let c = (0.5 * PI * u).cos();
        let c2 = c * c;
        c2 * c2
    }

    /// `∫ taper = 3w/4`.
    pub fn integral(&self) -> f64 {
        0.75 * self.width
    }
}

/// Smoothness of every test function built from [`Taper`] windows.
pub const SMOOTHNESS: &str = "C3";

/// A product of tapers in canonical coordinates, supported in `x_n > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub p: usize,
    pub q: usize,
    pub windows: Vec<Taper>,
    pub scale: f64,
}

impl KernelSpec {
    pub fn new(p: usize, q: usize, windows: Vec<Taper>, scale: f64) -> Result<Self> {
        let spec = Self { p, q, windows, scale };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 1 || self.q < 2 || self.p + self.q < 4 {
            return Err(Error::BadSignature { p: self.p, q: self.q });
        }
        if self.windows.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: self.windows.len() });
        }
        if self.windows.iter().any(|w| !(w.width > 0.0)) {
            return Err(Error::InvalidInput("taper widths must be positive".into()));
        }
        if self.windows[self.n() - 1].lo() <= 0.0 {
            return Err(Error::InvalidInput("support must lie in x_n > 0".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.p + self.q
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = self.scale;
        for (w, &xi) in self.windows.iter().zip(x) {
            if acc == 0.0 {
                break;
            }
            acc *= w.eval(xi);
        }
        acc
    }

    pub fn support_radius(&self) -> f64 {
        self.windows.iter().map(|w| w.lo().abs().max(w.hi().abs()).powi(2)).sum::<f64>().sqrt()
    }

    /// `∫_{ℝⁿ} f`.
    pub fn integral(&self) -> f64 {
        self.scale * self.windows.iter().map(Taper::integral).product::<f64>()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { scale: self.scale * factor, ..self.clone() }
    }
}

/// `c_{p,q} = 2^{(p+q−2)/2} / (γ_{p−1} γ_{q−1})`.
pub fn c_pq(p: usize, q: usize) -> f64 {
    assert!(p >= 1 && q >= 1, "c_pq needs p, q >= 1");
    let n = (p + q) as f64;
    2f64.powf((n - 2.0) / 2.0) / (sphere_area(p - 1) * sphere_area(q - 1))
}

/// The constant `κ` with `J_f(‖v‖e^{−t}, q₀(v), l₀(v)) ≈ κ e^{(n−3)t} ∫_K f(a_t k v) dk`
/// for `K = SO(p) × SO(q−1)`.
///
/// Each block contributes the area of its orbit sphere; an `SO(1)` block has
/// a one-point orbit and contributes 1. When both blocks have size at least 2
/// this equals `1/c_{p,q−1}`.
pub fn kernel_constant(p: usize, q: usize) -> f64 {
    assert!(p >= 1 && q >= 2, "kernel_constant needs p >= 1, q >= 2");
    let orbit = |m: usize| if m >= 2 { sphere_area(m - 1) } else { 1.0 };
    let n = (p + q) as f64;
    orbit(p) * orbit(q - 1) / 2f64.powf((n - 3.0) / 2.0)
}

/// Tensor Gauss–Legendre rule of order `m` per axis over a box.
fn tensor_gl(lo: &[f64], hi: &[f64], m: usize, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let d = lo.len();
    if d == 0 {
        return f(&[]);
    }
    let rule = Rule::gauss_legendre(m);
    let axes: Vec<Vec<(f64, f64)>> = (0..d).map(|k| rule.mapped(lo[k], hi[k]).collect()).collect();
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for k in 0..d {
            let (xk, wk) = axes[k][idx[k]];
            x[k] = xk;
            w *= wk;
        }
        total += w * f(&x);
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < m {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == d {
                return total;
            }
        }
    }
}

/// Doubles the per-axis order until successive values agree to `rel_tol`.
/// Returns the value and the last change.
fn converged_tensor(lo: &[f64], hi: &[f64], rel_tol: f64, max_evals: f64, mut f: impl FnMut(&[f64]) -> f64) -> Result<(f64, f64)> {
    let d = lo.len() as i32;
    let mut m = 8usize;
    let mut prev = tensor_gl(lo, hi, m / 2, &mut f);
    loop {
        let cur = tensor_gl(lo, hi, m, &mut f);
        let delta = (cur - prev).abs();
        if delta <= rel_tol * cur.abs() || (cur == 0.0 && prev == 0.0) {
            return Ok((cur, delta));
        }
        m *= 2;
        if (m as f64).powi(d) > max_evals {
            return Err(Error::NonConvergence(format!("tensor quadrature: change {delta:e} at order {}", m / 2)));
        }
        prev = cur;
    }
}

const JF_TOL: f64 = 1e-6;
const MAX_EVALS: f64 = 1.7e7;

/// `J_f(r, ζ, s) = r^{−(n−3)} ∫ f(r, x₂, x₃, …, x_{n−1}, s) dx₃⋯dx_{n−1}`, where
/// `x₂` solves `q₀(r, x₂, …, x_{n−1}, s) = ζ`.
pub fn j_f(spec: &KernelSpec, r: f64, zeta: f64, s: f64) -> Result<f64> {
    Ok(j_f_detailed(spec, r, zeta, s)?.0)
}

/// [`j_f`] together with its last refinement change.
pub fn j_f_detailed(spec: &KernelSpec, r: f64, zeta: f64, s: f64) -> Result<(f64, f64)> {
    spec.validate()?;
    if r <= 1e-9 {
        return Err(Error::UnsupportedR(r));
    }
    let n = spec.n();
    let p = spec.p;
    let w = &spec.windows;
    if w[0].eval(r) == 0.0 || w[n - 1].eval(s) == 0.0 {
        return Ok((0.0, 0.0));
    }
    let lo: Vec<f64> = w[2..n - 1].iter().map(Taper::lo).collect();
    let hi: Vec<f64> = w[2..n - 1].iter().map(Taper::hi).collect();
    let mut x = vec![0.0; n];
    x[0] = r;
    x[n - 1] = s;
    let (val, delta) = converged_tensor(&lo, &hi, JF_TOL, MAX_EVALS, |y| {
        // Coordinates 2..=p enter q₀ positively, p+1..=n−2 negatively.
        let mut signed = 0.0;
        for (k, &yk) in y.iter().enumerate() {
            let idx = k + 2;
            x[idx] = yk;
            signed += if idx <= p { yk * yk } else { -yk * yk };
        }
        x[1] = (zeta - signed + s * s) / (2.0 * r);
        spec.eval(&x)
    })?;
    let norm = r.powi(n as i32 - 3);
    Ok((val / norm, delta / norm))
}

/// Target values `(r, ζ, s)` of `(‖v‖e^{−t}, q₀(v), l₀(v))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelTarget {
    pub r: f64,
    pub zeta: f64,
    pub s: f64,
}

/// How the `K`-integral is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KSampling {
    /// Plain Haar draws from [`HaarSampler`].
    Haar,
    /// Importance sampling of the orbit spheres restricted to the support
    /// box of `f`, with the exact Haar density as weight.
    Cap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelLimitRow {
    pub t: f64,
    /// Estimate of `∫_K f(a_t k v) dk`.
    pub k_average: f64,
    pub stderr: f64,
    pub j_f: f64,
    /// `κ e^{(n−3)t} ∫_K f(a_t k v) dk` with κ from [`kernel_constant`].
    pub scaled: f64,
    pub gap: f64,
    /// Same with `c_{p,q−1}` in place of κ.
    pub scaled_c_pq: f64,
    pub gap_c_pq: f64,
    /// `J_f / (e^{(n−3)t} ∫_K f)`.
    pub implied_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelLimitReport {
    pub spec: KernelSpec,
    pub target: KernelTarget,
    pub sampling: KSampling,
    pub samples: u64,
    pub seed: u64,
    pub kernel_constant: f64,
    pub c_p_qm1: f64,
    pub rows: Vec<KernelLimitRow>,
    /// Gaps are non-increasing in `t` up to three standard errors.
    pub gap_decreasing: bool,
    pub final_gap: f64,
}

/// The vector `v` in diagonal coordinates with `‖v‖ = r e^t`, `q₀(v) = ζ`,
/// `l₀(v) = s`: `(A, 0, …, B, 0, …, s)` with `A` at 0 and `B` at `p`.
fn orbit_radii(target: &KernelTarget, t: f64) -> Result<(f64, f64)> {
    let big = target.r * t.exp();
    let a2 = 0.5 * (big * big + target.zeta);
    let b2 = 0.5 * (big * big - target.zeta) - target.s * target.s;
    if a2 <= 0.0 || b2 <= 0.0 {
        return Err(Error::InvalidInput(format!("no vector realizes the target at t = {t}")));
    }
    Ok((a2.sqrt(), b2.sqrt()))
}

/// Canonical coordinates of `a_t` applied to a vector given in diagonal
/// coordinates (`u` at 0, `w` at `p`).
fn flow_from_diagonal(diag: &[f64], p: usize, t: f64, out: &mut [f64]) {
    let n = diag.len();
    let (u, w) = (diag[0], diag[p]);
    out[0] = (-t).exp() * FRAC_1_SQRT_2 * (u + w);
    out[1] = t.exp() * FRAC_1_SQRT_2 * (u - w);
    out[2..p + 1].copy_from_slice(&diag[1..p]);
    out[p + 1..n].copy_from_slice(&diag[p + 1..n]);
}

/// Estimates `∫_K f(a_t k v) dk` for every `t`, with the same draws reused
/// across `t`.
fn k_averages(spec: &KernelSpec, target: &KernelTarget, t_list: &[f64], samples: u64, seed: u64, shards: usize, sampling: KSampling) -> Result<Vec<Welford>> {
    let (p, q, n) = (spec.p, spec.q, spec.n());
    let radii = t_list.iter().map(|&t| orbit_radii(target, t)).collect::<Result<Vec<_>>>()?;
    let w = &spec.windows;
    let box_p: Vec<Taper> = w[2..p + 1].to_vec();
    let box_n: Vec<Taper> = w[p + 1..n - 1].to_vec();
    let vol_p: f64 = box_p.iter().map(|b| 2.0 * b.width).product();
    let vol_n: f64 = box_n.iter().map(|b| 2.0 * b.width).product();
    let sizes = shard_sizes(samples, shards);
    let parts: Vec<Result<Vec<Welford>>> = sizes
        .par_iter()
        .enumerate()
        .map(|(shard, &count)| {
            let mut acc = vec![Welford::default(); t_list.len()];
            let mut diag = vec![0.0; n];
            let mut x = vec![0.0; n];
            match sampling {
                KSampling::Haar => {
                    let mut sampler = HaarSampler::with_stream(p, q, seed, shard as u64)?;
                    let c = sampler.change_of_basis.clone();
                    for _ in 0..count {
                        let k = sampler.sample();
                        for (ti, (&t, &(a, b))) in t_list.iter().zip(&radii).enumerate() {
                            diag.iter_mut().for_each(|d| *d = 0.0);
                            diag[0] = a;
                            diag[p] = b;
                            diag[n - 1] = target.s;
                            let v = &c * nalgebra::DVector::from_column_slice(&diag);
                            let kv = &k.matrix * v;
                            for (i, xi) in x.iter_mut().enumerate() {
                                *xi = kv[i];
                            }
                            x[0] *= (-t).exp();
                            x[1] *= t.exp();
                            acc[ti].push(spec.eval(&x));
                        }
                    }
                }
                KSampling::Cap => {
                    let mut rng = stream_rng(seed, shard as u64);
                    let mut yp = vec![0.0; box_p.len()];
                    let mut yn = vec![0.0; box_n.len()];
                    for _ in 0..count {
                        for (y, b) in yp.iter_mut().zip(&box_p) {
                            *y = b.lo() + 2.0 * b.width * rng.random::<f64>();
                        }
                        for (y, b) in yn.iter_mut().zip(&box_n) {
                            *y = b.lo() + 2.0 * b.width * rng.random::<f64>();
                        }
                        let yp2: f64 = yp.iter().map(|y| y * y).sum();
                        let yn2: f64 = yn.iter().map(|y| y * y).sum();
                        for (ti, (&t, &(a, b))) in t_list.iter().zip(&radii).enumerate() {
                            let plus = hemisphere_points(p, a, yp2, vol_p);
                            let minus = hemisphere_points(q - 1, b, yn2, vol_n);
                            let mut total = 0.0;
                            for &(u, wu) in plus.as_slice() {
                                for &(wv, ww) in minus.as_slice() {
                                    diag[0] = u;
                                    diag[1..p].copy_from_slice(&yp);
                                    diag[p] = wv;
                                    diag[p + 1..n - 1].copy_from_slice(&yn);
                                    diag[n - 1] = target.s;
                                    flow_from_diagonal(&diag, p, t, &mut x);
                                    total += wu * ww * spec.eval(&x);
                                }
                            }
                            acc[ti].push(total);
                        }
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    let mut merged = vec![Welford::default(); t_list.len()];
    for part in parts {
        for (m, a) in merged.iter_mut().zip(part?) {
            m.merge(&a);
        }
    }
    Ok(merged)
}

/// Points of the orbit sphere of radius `rad` in a block of size `m` whose
/// remaining coordinates have squared norm `y2`, with importance weights
/// relative to a uniform draw from a box of volume `vol`.
fn hemisphere_points(m: usize, rad: f64, y2: f64, vol: f64) -> Points {
    let mut out = Points::default();
    if m == 1 {
        // SO(1) is trivial: the orbit is the single point `rad`.
        out.push((rad, 1.0));
        return out;
    }
    if y2 >= rad * rad {
        return out;
    }
    let u = (rad * rad - y2).sqrt();
    // dσ = (rad/|u|) dy on each hemisphere, normalized by γ_{m−1} rad^{m−1}.
    let weight = vol * (rad / u) / (sphere_area(m - 1) * rad.powi(m as i32 - 1));
    out.push((u, weight));
    out.push((-u, weight));
    out
}

#[derive(Default, Clone, Copy)]
struct Points {
    p: [(f64, f64); 2],
    len: usize,
}

impl Points {
    fn push(&mut self, x: (f64, f64)) {
        self.p[self.len] = x;
        self.len += 1;
    }

    fn as_slice(&self) -> &[(f64, f64)] {
        &self.p[..self.len]
    }
}

/// Compares `κ e^{(n−3)t} ∫_K f(a_t k v) dk` with `J_f(r, ζ, s)` along
/// `v = v_t` realizing the target at each `t`.
///
/// `f` must vanish for `x₁ ≤ 0`: the orbit also passes near `x₁ = −r`, where
/// `J_f` does not look.
pub fn verify_kernel_limit(
    spec: &KernelSpec,
    target: KernelTarget,
    t_list: &[f64],
    samples: u64,
    seed: u64,
    shards: usize,
    sampling: KSampling,
) -> Result<KernelLimitReport> {
    spec.validate()?;
    if spec.windows[0].lo() <= 0.0 {
        return Err(Error::InvalidInput("kernel check needs f supported in x_1 > 0".into()));
    }
    if t_list.is_empty() || t_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("t_list must be nonempty and increasing".into()));
    }
    if samples < 2 {
        return Err(Error::InvalidInput("need at least 2 samples".into()));
    }
    let n = spec.n() as i32;
    let kappa = kernel_constant(spec.p, spec.q);
    let c = c_pq(spec.p, spec.q - 1);
    let jf = j_f(spec, target.r, target.zeta, target.s)?;
    let avgs = k_averages(spec, &target, t_list, samples, seed, shards, sampling)?;
    let rel = |x: f64| if jf != 0.0 { (x - jf).abs() / jf.abs() } else { x.abs() };
    let rows: Vec<KernelLimitRow> = t_list
        .iter()
        .zip(&avgs)
        .map(|(&t, w)| {
            let growth = ((n - 3) as f64 * t).exp();
            let scaled = kappa * growth * w.mean;
            let scaled_c_pq = c * growth * w.mean;
            KernelLimitRow {
                t,
                k_average: w.mean,
                stderr: w.stderr(),
                j_f: jf,
                scaled,
                gap: rel(scaled),
                scaled_c_pq,
                gap_c_pq: rel(scaled_c_pq),
                implied_constant: if w.mean != 0.0 { jf / (growth * w.mean) } else { f64::NAN },
            }
        })
        .collect();
    let gap_decreasing = rows.windows(2).all(|w| {
        let slack = 3.0 * kappa * ((n - 3) as f64 * w[1].t).exp() * w[1].stderr / jf.abs().max(f64::MIN_POSITIVE);
        w[1].gap <= w[0].gap + slack
    });
    let final_gap = rows.last().map(|r| r.gap).unwrap_or(f64::NAN);
    Ok(KernelLimitReport {
        spec: spec.clone(),
        target,
        sampling,
        samples,
        seed,
        kernel_constant: kappa,
        c_p_qm1: c,
        rows,
        gap_decreasing,
        final_gap,
    })
}

/// A separable test function `h(w, ζ, s)` on `ℝⁿ × ℝ × ℝ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSpec {
    pub p: usize,
    pub q: usize,
    /// One window per coordinate of `w`.
    pub point: Vec<Taper>,
    pub zeta: Taper,
    pub s: Taper,
    pub scale: f64,
}

impl LimitSpec {
    pub fn n(&self) -> usize {
        self.p + self.q
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 1 || self.q < 2 || self.p + self.q < 4 {
            return Err(Error::BadSignature { p: self.p, q: self.q });
        }
        if self.point.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: self.point.len() });
        }
        if self.point[0].lo() <= 0.0 {
            return Err(Error::InvalidInput("h must vanish for w_1 <= 0".into()));
        }
        Ok(())
    }

    pub fn eval(&self, w: &[f64], zeta: f64, s: f64) -> f64 {
        let mut acc = self.scale * self.zeta.eval(zeta) * self.s.eval(s);
        for (t, &x) in self.point.iter().zip(w) {
            if acc == 0.0 {
                break;
            }
            acc *= t.eval(x);
        }
        acc
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { scale: self.scale * factor, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    #[serde(rename = "T")]
    pub t: f64,
    /// `T^{−(n−3)} ∫ h(v/T, q₀(v), l₀(v)) dv`.
    pub lhs: f64,
    pub lhs_delta: f64,
    pub gap: f64,
    pub gap_c_pq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub spec: LimitSpec,
    pub samples: u64,
    pub seed: u64,
    /// `κ ∫_K ∫∫∫ h(r k⁻¹e₁, ζ, s) r^{n−3} dr/(2r) dζ ds dm(k)`.
    pub rhs: f64,
    pub rhs_stderr: f64,
    /// The same cone integral with `c_{p,q−1}` in place of κ.
    pub rhs_c_pq: f64,
    pub rows: Vec<LimitRow>,
}

/// Left side at one `T`, after the substitution `v = T·w`, `x₂ ↦ ζ`:
/// `∫ h((w₁, w₂, w₃, …, s/T), ζ, s) dw₁ dw₃⋯dw_{n−1} dζ ds / (2w₁)`.
fn limit_lhs(h: &LimitSpec, t: f64) -> Result<(f64, f64)> {
    let n = h.n();
    let p = h.p;
    let mut lo = vec![h.point[0].lo()];
    let mut hi = vec![h.point[0].hi()];
    for win in &h.point[2..n - 1] {
        lo.push(win.lo());
        hi.push(win.hi());
    }
    lo.extend([h.zeta.lo(), h.s.lo()]);
    hi.extend([h.zeta.hi(), h.s.hi()]);
    let t2 = t * t;
    let mut w = vec![0.0; n];
    converged_tensor(&lo, &hi, 1e-6, MAX_EVALS, |x| {
        let d = x.len();
        let (zeta, s) = (x[d - 2], x[d - 1]);
        let w1 = x[0];
        w[0] = w1;
        let mut signed = 0.0;
        for (k, &xk) in x[1..d - 2].iter().enumerate() {
            let idx = k + 2;
            w[idx] = xk;
            signed += if idx <= p { xk * xk } else { -xk * xk };
        }
        w[1] = (zeta + s * s - t2 * signed) / (2.0 * t2 * w1);
        w[n - 1] = s / t;
        h.eval(&w, zeta, s) / (2.0 * w1)
    })
}

/// `∫₀^∞ Π_i h_i(r ω_i) r^{n−3} dr/(2r)` for a unit direction `ω` on the cone.
fn radial_integral(h: &LimitSpec, omega: &[f64], rule: &Rule) -> f64 {
    let n = h.n();
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    for (win, &o) in h.point.iter().zip(omega) {
        if o.abs() < 1e-15 {
            if win.eval(0.0) == 0.0 {
                return 0.0;
            }
            continue;
        }
        let (a, b) = (win.lo() / o, win.hi() / o);
        lo = lo.max(a.min(b));
        hi = hi.min(a.max(b));
    }
    if !(lo < hi) || !hi.is_finite() {
        return 0.0;
    }
    let mut pt = vec![0.0; n];
    rule.integrate(lo, hi, |r| {
        for (x, &o) in pt.iter_mut().zip(omega) {
            *x = r * o;
        }
        let mut acc = 1.0;
        for (win, &x) in h.point.iter().zip(&pt) {
            acc *= win.eval(x);
        }
        acc * r.powi(n as i32 - 4) * 0.5
    })
}

/// Both sides of the cone-limit identity for a separable `h`.
///
/// The right side draws `k` from Haar measure on `K` and integrates the
/// radial factor by Gauss–Legendre; the `ζ` and `s` factors are exact.
pub fn verify_limit_integral(h: &LimitSpec, t_list: &[f64], samples: u64, seed: u64, shards: usize) -> Result<LimitReport> {
    h.validate()?;
    if samples < 2 {
        return Err(Error::InvalidInput("need at least 2 samples".into()));
    }
    let (p, q, n) = (h.p, h.q, h.n());
    let rule = Rule::gauss_legendre(32);
    let sizes = shard_sizes(samples, shards);
    let parts: Vec<Result<Welford>> = sizes
        .par_iter()
        .enumerate()
        .map(|(shard, &count)| {
            let mut sampler = HaarSampler::with_stream(p, q, seed, shard as u64)?;
            let mut acc = Welford::default();
            let mut omega = vec![0.0; n];
            for _ in 0..count {
                let k = sampler.sample();
                // k⁻¹e₁ = kᵀe₁ is the first row of k.
                for (j, o) in omega.iter_mut().enumerate() {
                    *o = k.matrix[(0, j)];
                }
                acc.push(radial_integral(h, &omega, &rule));
            }
            Ok(acc)
        })
        .collect();
    let mut total = Welford::default();
    for part in parts {
        total.merge(&part?);
    }
    let factor = h.scale * h.zeta.integral() * h.s.integral();
    let kappa = kernel_constant(p, q);
    let c = c_pq(p, q - 1);
    let rhs = kappa * factor * total.mean;
    let rhs_c_pq = c * factor * total.mean;
    let rel = |a: f64, b: f64| if b != 0.0 { (a - b).abs() / b.abs() } else { a.abs() };
    let rows = t_list
        .iter()
        .map(|&t| {
            let (lhs, lhs_delta) = limit_lhs(h, t)?;
            Ok(LimitRow { t, lhs, lhs_delta, gap: rel(lhs, rhs), gap_c_pq: rel(lhs, rhs_c_pq) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LimitReport {
        spec: h.clone(),
        samples,
        seed,
        rhs,
        rhs_stderr: kappa * factor * total.stderr(),
        rhs_c_pq,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tp(c: f64, w: f64) -> Taper {
        Taper::new(c, w).unwrap()
    }

    fn bump_32() -> KernelSpec {
        KernelSpec::new(3, 2, vec![tp(1.0, 0.5), tp(0.0, 0.6), tp(0.1, 0.7), tp(-0.2, 0.8), tp(1.0, 0.5)], 1.0).unwrap()
    }

    #[test]
    fn constants() {
        assert_relative_eq!(c_pq(2, 2), 1.0 / (2.0 * PI * PI), max_relative = 1e-14);
        assert_relative_eq!(kernel_constant(3, 3), 1.0 / c_pq(3, 2), max_relative = 1e-14);
        // SO(1) factor: half of 1/c.
        assert_relative_eq!(kernel_constant(3, 2), 0.5 / c_pq(3, 1), max_relative = 1e-14);
    }

    #[test]
    fn taper_integral() {
        let t = tp(0.3, 0.4);
        let v = Rule::gauss_legendre(40).integrate(t.lo(), t.hi(), |x| t.eval(x));
        assert_relative_eq!(v, t.integral(), max_relative = 1e-12);
        assert_eq!(t.eval(0.71), 0.0);
    }

    #[test]
    fn j_f_rejects_small_r_and_vanishes_off_support() {
        let f = bump_32();
        assert!(matches!(j_f(&f, 1e-10, 0.0, 1.0), Err(Error::UnsupportedR(_))));
        assert_eq!(j_f(&f, 3.0, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(j_f(&f, 1.0, 0.0, 2.0).unwrap(), 0.0);
        let a = j_f(&f, 1.0, 0.1, 1.0).unwrap();
        assert!(a > 0.0);
        assert_relative_eq!(j_f(&f.scaled(2.0), 1.0, 0.1, 1.0).unwrap(), 2.0 * a, max_relative = 1e-12);
    }

    #[test]
    fn kernel_spec_validation() {
        let mut w = vec![tp(1.0, 0.5); 5];
        w[4] = tp(0.2, 0.5);
        assert!(KernelSpec::new(3, 2, w, 1.0).is_err());
        assert!(KernelSpec::new(3, 2, vec![tp(1.0, 0.5); 4], 1.0).is_err());
        assert!(KernelSpec::new(2, 1, vec![tp(1.0, 0.5); 3], 1.0).is_err());
    }

    #[test]
    fn cap_and_haar_sampling_agree_at_small_t() {
        let f = bump_32();
        let target = KernelTarget { r: 1.0, zeta: 0.1, s: 1.0 };
        let cap = verify_kernel_limit(&f, target, &[0.5], 20_000, 3, 2, KSampling::Cap).unwrap();
        let haar = verify_kernel_limit(&f, target, &[0.5], 200_000, 3, 2, KSampling::Haar).unwrap();
        let (a, b) = (cap.rows[0], haar.rows[0]);
        let tol = 4.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
        assert!((a.k_average - b.k_average).abs() < tol, "{} vs {} (tol {tol})", a.k_average, b.k_average);
    }

    #[test]
    fn limit_sides_vanish_for_zero_h() {
        let h = LimitSpec { p: 2, q: 2, point: vec![tp(0.6, 0.4), tp(0.0, 0.5), tp(0.0, 0.5), tp(0.0, 0.5)], zeta: tp(0.0, 1.0), s: tp(0.5, 0.5), scale: 0.0 };
        let r = verify_limit_integral(&h, &[10.0], 100, 1, 1).unwrap();
        assert_eq!(r.rhs, 0.0);
        assert_eq!(r.rows[0].lhs, 0.0);
    }
}
