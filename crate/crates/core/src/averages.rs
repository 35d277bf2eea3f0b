//! Spherical averages over `K` along the flow `a_t`: moments of the height
//! `α` and Siegel transforms of compactly supported bumps.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group_actions::{orbit_lattice, HaarSampler};
use crate::lattices::{alpha, siegel_transform, AlphaMode, CompactFn};
use crate::stats::{shard_sizes, AverageEstimate, Welford};
use crate::volumetrics::Taper;

/// Fewest samples behind any reported average.
pub const MIN_SAMPLES: u64 = 1000;

/// Denominator bound for rational-direction detection.
pub const DIRECTION_DENOMINATOR_BOUND: i64 = 1_000_000;

/// `|d·x − round(d·x)|` at or below this counts as an exact hit.
const RATIONAL_RESIDUE: f64 = 1e-9;

/// A coordinate whose best residue over `d ≤ bound` exceeds this is treated as
/// irrational; residues in between are inconclusive.
const IRRATIONAL_RESIDUE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McOptions {
    pub samples: u64,
    pub seed: u64,
    pub shards: usize,
}

impl McOptions {
    pub fn new(samples: u64, seed: u64, shards: usize) -> Self {
        Self { samples, seed, shards: shards.max(1) }
    }
}

fn check_mc(opts: &McOptions) -> Result<()> {
    if opts.samples < MIN_SAMPLES {
        return Err(Error::InvalidInput(format!("samples = {} below minimum {MIN_SAMPLES}", opts.samples)));
    }
    Ok(())
}

fn check_grid(t_grid: &[f64], min_len: usize) -> Result<()> {
    if t_grid.len() < min_len || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(format!("need {min_len} or more strictly increasing times")));
    }
    Ok(())
}

/// Haar average over `K` of `obs(a_t k g₀ℤⁿ)`. Shard `i` draws from stream
/// `stream_base + i`; shard accumulators merge in index order.
fn k_average<F>(p: usize, q: usize, g0: &DMatrix<f64>, t: f64, opts: &McOptions, stream_base: u64, obs: F) -> Result<AverageEstimate>
where
    F: Fn(&crate::lattices::Lattice) -> Result<f64> + Sync,
{
    check_mc(opts)?;
    if g0.nrows() != p + q || g0.ncols() != p + q {
        return Err(Error::DimensionMismatch { expected: p + q, got: g0.nrows() });
    }
    let sizes = shard_sizes(opts.samples, opts.shards);
    let parts: Vec<Result<Welford>> = sizes
        .par_iter()
        .enumerate()
        .map(|(i, &m)| {
            let mut sampler = HaarSampler::with_stream(p, q, opts.seed, stream_base + i as u64)?;
            let mut acc = Welford::default();
            for _ in 0..m {
                let k = sampler.sample();
                acc.push(obs(&orbit_lattice(g0, t, &k)?)?);
            }
            Ok(acc)
        })
        .collect();
    let mut total = Welford::default();
    for part in parts {
        total.merge(&part?);
    }
    Ok(AverageEstimate::from_welford(&total, t, opts.seed))
}

/// Monte Carlo estimate of `∫_K α(a_t k g₀ℤⁿ)^δ dm(k)` with exact `α`.
pub fn spherical_average_alpha(p: usize, q: usize, g0: &DMatrix<f64>, t: f64, delta: f64, opts: &McOptions) -> Result<AverageEstimate> {
    alpha_average_on_streams(p, q, g0, t, delta, opts, 0)
}

fn alpha_average_on_streams(
    p: usize,
    q: usize,
    g0: &DMatrix<f64>,
    t: f64,
    delta: f64,
    opts: &McOptions,
    stream_base: u64,
) -> Result<AverageEstimate> {
    if p < 2 {
        return Err(Error::BadSignature { p, q });
    }
    if !(0.0..2.0).contains(&delta) {
        return Err(Error::InvalidInput(format!("delta = {delta} outside [0, 2)")));
    }
    k_average(p, q, g0, t, opts, stream_base, |lat| Ok(alpha(lat, AlphaMode::Exact)?.value.powf(delta)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "bounded-consistent")]
    BoundedConsistent,
    #[serde(rename = "suspect-growth")]
    SuspectGrowth,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::BoundedConsistent => "bounded-consistent",
            Verdict::SuspectGrowth => "suspect-growth",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundednessReport {
    pub p: usize,
    pub q: usize,
    pub delta: f64,
    pub rows: Vec<AverageEstimate>,
    /// Running maximum of the means and the stderr of the row attaining it.
    pub running_max: Vec<(f64, f64)>,
    pub verdict: Verdict,
}

/// Scans `t_grid`; time `i` uses streams `i·2³² + shard`, so rows are
/// independent. The verdict is a consistency check on a finite grid: the last
/// three running maxima must agree pairwise within three combined stderrs.
pub fn boundedness_scan(p: usize, q: usize, g0: &DMatrix<f64>, delta: f64, t_grid: &[f64], opts: &McOptions) -> Result<BoundednessReport> {
    check_grid(t_grid, 3)?;
    let rows = t_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| alpha_average_on_streams(p, q, g0, t, delta, opts, (i as u64) << 32))
        .collect::<Result<Vec<_>>>()?;
    let mut running_max: Vec<(f64, f64)> = Vec::with_capacity(rows.len());
    for r in &rows {
        let next = match running_max.last() {
            Some(&(m, s)) if m >= r.mean => (m, s),
            _ => (r.mean, r.stderr),
        };
        running_max.push(next);
    }
    let tail = &running_max[running_max.len() - 3..];
    let stable = tail.iter().enumerate().all(|(a, &(ma, sa))| {
        tail[a + 1..].iter().all(|&(mb, sb)| (ma - mb).abs() <= 3.0 * (sa * sa + sb * sb).sqrt())
    });
    let verdict = if stable { Verdict::BoundedConsistent } else { Verdict::SuspectGrowth };
    Ok(BoundednessReport { p, q, delta, rows, running_max, verdict })
}

/// `f(v) = scale·Π wᵢ(vᵢ)` for cosine-taper windows `wᵢ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub windows: Vec<Taper>,
    pub scale: f64,
}

impl Bump {
    pub fn new(windows: Vec<Taper>, scale: f64) -> Self {
        Self { windows, scale }
    }

    pub fn dim(&self) -> usize {
        self.windows.len()
    }

    pub fn integral(&self) -> f64 {
        self.scale * self.windows.iter().map(Taper::integral).product::<f64>()
    }
}

impl CompactFn for Bump {
    fn radius(&self) -> f64 {
        self.windows.iter().map(|w| w.lo().abs().max(w.hi().abs()).powi(2)).sum::<f64>().sqrt()
    }

    fn eval(&self, v: &[f64]) -> f64 {
        let mut acc = self.scale;
        for (w, &x) in self.windows.iter().zip(v) {
            if acc == 0.0 {
                break;
            }
            acc *= w.eval(x);
        }
        acc
    }
}

/// Whether the line `ℝ·u` meets `ℤⁿ ∖ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Direction {
    /// `k0·u = primitive`, a primitive integer vector.
    Rational { primitive: Vec<i64>, k0: f64 },
    Irrational { worst_residue: f64 },
    /// No decision possible with denominators up to the bound.
    Ambiguous { worst_residue: f64 },
}

/// Best residue `|d·x − round(d·x)|` over continued-fraction denominators
/// `d ≤ bound`, and the first denominator reaching [`RATIONAL_RESIDUE`].
fn continued_fraction_hit(x: f64, bound: i64) -> (Option<i64>, f64) {
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut y = x;
    let mut best = f64::INFINITY;
    for _ in 0..64 {
        let a = y.floor();
        let ai = a as i128;
        let (h2, k2) = (ai * h1 + h0, ai * k1 + k0);
        if k2 > bound as i128 {
            break;
        }
        let residue = (k2 as f64 * x - h2 as f64).abs();
        best = best.min(residue);
        if residue <= RATIONAL_RESIDUE {
            return (Some(k2 as i64), residue);
        }
        let frac = y - a;
        if frac <= 0.0 {
            break;
        }
        y = 1.0 / frac;
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
    }
    (None, best)
}

/// Rational-direction test for `u` with denominators up to `bound`.
pub fn detect_direction(u: &[f64], bound: i64) -> Result<Direction> {
    let (j, &pivot) = u
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .ok_or_else(|| Error::InvalidInput("empty direction".into()))?;
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(Error::InvalidInput("direction must be a nonzero finite vector".into()));
    }
    let ratios: Vec<f64> = u.iter().map(|&x| x / pivot).collect();
    let mut lcm = 1i64;
    let mut worst = 0.0f64;
    let mut undecided = false;
    for (i, &x) in ratios.iter().enumerate() {
        if i == j {
            continue;
        }
        match continued_fraction_hit(x, bound) {
            (Some(d), r) => {
                worst = worst.max(r);
                lcm = num_integer::lcm(lcm, d);
                if lcm > bound {
                    return Ok(Direction::Ambiguous { worst_residue: worst });
                }
            }
            (None, r) => {
                if r > IRRATIONAL_RESIDUE {
                    return Ok(Direction::Irrational { worst_residue: r });
                }
                worst = worst.max(r);
                undecided = true;
            }
        }
    }
    if undecided {
        return Ok(Direction::Ambiguous { worst_residue: worst });
    }
    let mut primitive: Vec<i64> = ratios.iter().map(|&x| (x * lcm as f64).round() as i64).collect();
    let g = primitive.iter().fold(0i64, |g, &m| num_integer::gcd(g, m));
    primitive.iter_mut().for_each(|m| *m /= g);
    if primitive[j] < 0 {
        primitive.iter_mut().for_each(|m| *m = -*m);
    }
    let k0 = primitive[j] as f64 / u[j];
    Ok(Direction::Rational { primitive, k0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquiRow {
    pub estimate: AverageEstimate,
    pub gap: f64,
    pub relative_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquiReport {
    pub p: usize,
    pub q: usize,
    pub f: Bump,
    pub integral: f64,
    pub direction: Direction,
    /// `Σ_{m≠0} f(m·k₀·e_n)`; zero unless the direction is rational.
    pub correction: f64,
    pub dense_prediction: f64,
    pub fixed_prediction: Option<f64>,
    /// The prediction the gaps refer to.
    pub prediction: f64,
    /// Set when the direction test was inconclusive; the dense prediction is used.
    pub ambiguous: bool,
    pub rows: Vec<EquiRow>,
}

/// `Σ_{m≠0} f(m·k₀·e_n)`. The vector `k₀·e_n` is the image under `g₀` of
/// the primitive point on `ℝ·g₀⁻¹e_n`; `a_t k` fixes it.
fn fixed_vector_sum(f: &Bump, k0: f64) -> f64 {
    let n = f.dim();
    let r = f.radius();
    let mmax = (r / k0.abs()).floor() as i64;
    let mut v = vec![0.0; n];
    let mut total = 0.0;
    for m in (-mmax..=mmax).filter(|&m| m != 0) {
        v[n - 1] = m as f64 * k0;
        total += f.eval(&v);
    }
    total
}

/// Estimates `A(t) = ∫_K f̃(a_t k g₀ℤⁿ) dm(k)` along `t_grid` and compares
/// with the Siegel-formula limit for the detected orbit-closure case.
pub fn equidistribution_check(p: usize, q: usize, f: &Bump, g0: &DMatrix<f64>, t_grid: &[f64], opts: &McOptions) -> Result<EquiReport> {
    let n = p + q;
    if f.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.dim() });
    }
    check_grid(t_grid, 1)?;
    let mut en = DVector::zeros(n);
    en[n - 1] = 1.0;
    let u = g0
        .clone()
        .lu()
        .solve(&en)
        .ok_or_else(|| Error::InvalidInput("g0 is singular".into()))?;
    let direction = detect_direction(u.as_slice(), DIRECTION_DENOMINATOR_BOUND)?;
    let integral = f.integral();
    let (correction, ambiguous) = match &direction {
        Direction::Rational { k0, .. } => (fixed_vector_sum(f, *k0), false),
        Direction::Irrational { .. } => (0.0, false),
        Direction::Ambiguous { .. } => (0.0, true),
    };
    let fixed_prediction = matches!(direction, Direction::Rational { .. }).then_some(integral + correction);
    let prediction = fixed_prediction.unwrap_or(integral);
    let rows = t_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let estimate = k_average(p, q, g0, t, opts, (i as u64) << 32, |lat| siegel_transform(f, lat))?;
            let gap = (estimate.mean - prediction).abs();
            Ok(EquiRow { estimate, gap, relative_gap: gap / prediction.abs() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EquiReport {
        p,
        q,
        f: f.clone(),
        integral,
        direction,
        correction,
        dense_prediction: integral,
        fixed_prediction,
        prediction,
        ambiguous,
        rows,
    })
}
