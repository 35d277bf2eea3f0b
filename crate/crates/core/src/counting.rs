//! Exact counts `N_{T,I,J}(q, l) = #{v ∈ ℤⁿ∖0 : ‖v‖ < T, q(v) ∈ I, l(v) ∈ J}`.
//!
//! Two pivot coordinates are singled out: `y`, where `|l_y|` is largest, and
//! `z`, where `q` restricted to the line `l = const` has the largest
//! quadratic coefficient. The remaining `n − 2` coordinates `w` are
//! enumerated inside the ball. For fixed `w`, `l ∈ J` confines `y` to a slab
//! of half-width `Δ` around `y_c(z)`, and `q(w, y_c(z), z)` is a quadratic
//! `G(z)`. Along the slab `q` moves by at most `E`, so only integers `z` with
//! `G(z) ∈ (a − E, b + E)` can contribute; each surviving `(y, z)` is then
//! tested exactly. Every test is a strict inequality.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::FormPair;

pub const T_GUARD: f64 = 1e4;
/// Largest supported dimension.
pub const MAX_DIM: usize = 8;
/// Pivot coefficients below this are treated as zero.
pub const PIVOT_TOL: f64 = 1e-12;
/// Relative distance to an interval endpoint that is logged as a boundary hit.
pub const BOUNDARY_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidInput(format!("empty interval ({lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    pub fn negate(&self) -> Self {
        Self { lo: -self.hi, hi: -self.lo }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    fn near_boundary(&self, x: f64) -> bool {
        let scale = 1.0 + x.abs();
        (x - self.lo).abs() <= BOUNDARY_MARGIN * scale || (x - self.hi).abs() <= BOUNDARY_MARGIN * scale
    }
}

#[derive(Debug, Clone)]
pub struct CountQuery {
    pub pair: FormPair,
    pub t: f64,
    pub i: Interval,
    pub j: Interval,
    pub collect_witnesses: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShardCount {
    /// Inclusive range of the outer free coordinate.
    pub lo: i64,
    pub hi: i64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    #[serde(rename = "N")]
    pub n_count: u64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "I")]
    pub i: Interval,
    #[serde(rename = "J")]
    pub j: Interval,
    pub shards: Vec<ShardCount>,
    /// Points whose `q` or `l` value lay within the boundary margin.
    pub boundary_hits: u64,
    pub witnesses: Option<Vec<Vec<i64>>>,
    pub wall_time: f64,
}

/// Precomputed pivots and per-pair constants.
struct Plan {
    n: usize,
    a: DMatrix<f64>,
    l: DVector<f64>,
    y: usize,
    /// `None` when every candidate has a vanishing quadratic coefficient.
    z: Option<usize>,
    /// Remaining coordinates when `z` is a pivot; otherwise `z` is the last
    /// coordinate not equal to `y` and is scanned over its full range.
    free: Vec<usize>,
    z_coord: usize,
    /// Quadratic coefficient of `G`.
    alpha: f64,
    /// `y_c(z) = c0 + c1·z`.
    c1: f64,
}

impl Plan {
    fn new(pair: &FormPair) -> Result<Self> {
        let n = pair.dim();
        if !(2..=MAX_DIM).contains(&n) {
            return Err(Error::InvalidInput(format!("counting needs 2 <= n <= {MAX_DIM}")));
        }
        let a = pair.q.gram().clone();
        let l = pair.l.coeffs().clone();
        let y = (0..n).max_by(|&i, &j| l[i].abs().total_cmp(&l[j].abs())).unwrap();
        let coef = |i: usize| {
            let r = l[i] / l[y];
            a[(i, i)] - 2.0 * r * a[(i, y)] + r * r * a[(y, y)]
        };
        let mut others: Vec<usize> = (0..n).filter(|&i| i != y).collect();
        let best = others.iter().copied().max_by(|&i, &j| coef(i).abs().total_cmp(&coef(j).abs()));
        let (z, z_coord) = match best {
            Some(i) if coef(i).abs() >= PIVOT_TOL => (Some(i), i),
            Some(i) => (None, i),
            None => return Err(Error::DegeneratePivot("no coordinate besides the l-pivot".into())),
        };
        others.retain(|&i| i != z_coord);
        Ok(Self {
            n,
            alpha: coef(z_coord),
            c1: -l[z_coord] / l[y],
            a,
            l,
            y,
            z,
            free: others,
            z_coord,
        })
    }
}

/// Integers in `[lo, hi]` widened by a relative `1e−9`, clipped to `[−r, r]`.
fn int_range(lo: f64, hi: f64, r: i64) -> (i64, i64) {
    let lo = if lo.is_finite() { ((lo - 1e-9 * (1.0 + lo.abs())).ceil() as i64).max(-r) } else { -r };
    let hi = if hi.is_finite() { ((hi + 1e-9 * (1.0 + hi.abs())).floor() as i64).min(r) } else { r };
    (lo, hi)
}

/// Integer ranges of `z` (within `[−r, r]`) where `lo < αz² + βz + γ < hi`
/// may hold.
fn quadratic_ranges(alpha: f64, beta: f64, gamma: f64, lo: f64, hi: f64, r: i64) -> ZRanges {
    let (alpha, beta, gamma, lo, hi) =
        if alpha > 0.0 { (alpha, beta, gamma, lo, hi) } else { (-alpha, -beta, -gamma, -hi, -lo) };
    let z0 = -beta / (2.0 * alpha);
    let m = gamma - beta * beta / (4.0 * alpha);
    let big_b = (hi - m) / alpha;
    let mut out = ZRanges::default();
    if big_b <= 0.0 {
        return out;
    }
    let small_a = ((lo - m) / alpha).max(0.0);
    let (sa, sb) = (small_a.sqrt(), big_b.sqrt());
    let left = int_range(z0 - sb, z0 - sa, r);
    let right = int_range(z0 + sa, z0 + sb, r);
    if left.0 <= left.1 {
        out.push(left);
    }
    if right.0 <= right.1 {
        if out.len == 1 && right.0 <= out.r[0].1 + 1 {
            out.r[0].1 = out.r[0].1.max(right.1);
        } else {
            out.push(right);
        }
    }
    out
}

/// At most two integer ranges, stored inline.
#[derive(Default, Clone, Copy)]
struct ZRanges {
    r: [(i64, i64); 2],
    len: usize,
}

impl ZRanges {
    fn push(&mut self, x: (i64, i64)) {
        self.r[self.len] = x;
        self.len += 1;
    }

    fn as_slice(&self) -> &[(i64, i64)] {
        &self.r[..self.len]
    }
}

/// Per-outer-coordinate tallies: counts per `T` bucket plus witnesses.
#[derive(Default)]
struct Tally {
    buckets: Vec<u64>,
    boundary: u64,
    witnesses: Vec<Vec<i64>>,
}

struct Scan<'a> {
    plan: &'a Plan,
    /// Increasing thresholds `T_k²`; a point lands in the first `k` with `‖v‖² < T_k²`.
    t2: &'a [f64],
    i: Interval,
    j: Interval,
    collect: bool,
}

impl Scan<'_> {
    fn tmax(&self) -> f64 {
        self.t2.last().copied().unwrap_or(0.0).sqrt()
    }

    fn run_outer(&self, w0: i64) -> Tally {
        let mut tally = Tally { buckets: vec![0; self.t2.len()], ..Default::default() };
        let mut v = vec![0i64; self.plan.n];
        if self.plan.free.is_empty() {
            self.slab(&mut v, 0.0, &mut tally);
            return tally;
        }
        let c0 = self.plan.free[0];
        v[c0] = w0;
        let used = (w0 * w0) as f64;
        if used >= *self.t2.last().unwrap() {
            return tally;
        }
        self.recurse(&mut v, 1, used, &mut tally);
        tally
    }

    fn recurse(&self, v: &mut [i64], depth: usize, used: f64, tally: &mut Tally) {
        let t2max = *self.t2.last().unwrap();
        if depth == self.plan.free.len() {
            self.slab(v, (t2max - used).max(0.0), tally);
            return;
        }
        let c = self.plan.free[depth];
        let r = (t2max - used).sqrt().ceil() as i64;
        for x in -r..=r {
            let u = used + (x * x) as f64;
            if u >= t2max {
                continue;
            }
            v[c] = x;
            self.recurse(v, depth + 1, u, tally);
        }
        v[c] = 0;
    }

    /// All `(y, z)` completions of the free coordinates in `v`.
    fn slab(&self, v: &mut [i64], rho2: f64, tally: &mut Tally) {
        let p = self.plan;
        let (y, zc) = (p.y, p.z_coord);
        let rho = if p.free.is_empty() { self.tmax() } else { rho2.sqrt() };
        let r = rho.ceil() as i64;
        v[y] = 0;
        v[zc] = 0;
        let ly = p.l[y];
        let lw: f64 = p.free.iter().map(|&k| p.l[k] * v[k] as f64).sum();
        let mid = 0.5 * (self.j.lo + self.j.hi);
        let delta = 0.5 * self.j.len() / ly.abs();
        let c0 = (mid - lw) / ly;

        let z_ranges = if p.z.is_some() {
            // u0 = w + c0·e_y, d = e_z + c1·e_y
            let mut u0 = [0.0f64; MAX_DIM];
            for (dst, &x) in u0.iter_mut().zip(v.iter()) {
                *dst = x as f64;
            }
            u0[y] = c0;
            let mut au0 = [0.0f64; MAX_DIM];
            for i in 0..p.n {
                au0[i] = (0..p.n).map(|k| p.a[(i, k)] * u0[k]).sum();
            }
            let gamma: f64 = (0..p.n).map(|i| u0[i] * au0[i]).sum();
            let beta = 2.0 * (au0[zc] + p.c1 * au0[y]);
            let lin_y = 2.0 * (au0[y] - p.a[(y, y)] * c0);
            let ayy = p.a[(y, y)].abs();
            let d = 2.0 * ayy * (rho + delta) + 2.0 * p.a[(y, zc)].abs() * rho + lin_y.abs();
            let e = d * delta + ayy * delta * delta;
            let slack = e * (1.0 + 1e-9) + 1e-9 * (1.0 + gamma.abs());
            quadratic_ranges(p.alpha, beta, gamma, self.i.lo - slack, self.i.hi + slack, r)
        } else {
            let mut z = ZRanges::default();
            z.push((-r, r));
            z
        };

        for &(zlo, zhi) in z_ranges.as_slice() {
            for z in zlo..=zhi {
                v[zc] = z;
                let lz = lw + p.l[zc] * z as f64;
                let (ya, yb) = ((self.j.lo - lz) / ly, (self.j.hi - lz) / ly);
                let (ya, yb) = if ya < yb { (ya, yb) } else { (yb, ya) };
                let (ylo, yhi) = int_range(ya, yb, r);
                for yv in ylo..=yhi {
                    v[y] = yv;
                    self.test_point(v, tally);
                }
            }
        }
        v[y] = 0;
        v[zc] = 0;
    }

    fn test_point(&self, v: &[i64], tally: &mut Tally) {
        let norm2: i64 = v.iter().map(|x| x * x).sum();
        if norm2 == 0 {
            return;
        }
        let nf = norm2 as f64;
        let Some(bucket) = self.t2.iter().position(|&t2| nf < t2) else {
            return;
        };
        let p = self.plan;
        let lval: f64 = v.iter().zip(p.l.iter()).map(|(&x, c)| x as f64 * c).sum();
        if !self.j.contains(lval) {
            if self.j.near_boundary(lval) {
                tally.boundary += 1;
            }
            return;
        }
        let qval = quad(&p.a, v);
        if self.j.near_boundary(lval) || self.i.near_boundary(qval) {
            tally.boundary += 1;
        }
        if self.i.contains(qval) {
            tally.buckets[bucket] += 1;
            if self.collect {
                tally.witnesses.push(v.to_vec());
            }
        }
    }
}

fn quad(a: &DMatrix<f64>, v: &[i64]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        if v[i] == 0 {
            continue;
        }
        let xi = v[i] as f64;
        s += a[(i, i)] * xi * xi;
        for j in i + 1..n {
            s += 2.0 * a[(i, j)] * xi * v[j] as f64;
        }
    }
    s
}

fn outer_range(plan: &Plan, tmax: f64) -> (i64, i64) {
    if plan.free.is_empty() {
        (0, 0)
    } else {
        let r = tmax.ceil() as i64;
        (-r, r)
    }
}

fn split(lo: i64, hi: i64, shards: usize) -> Vec<(i64, i64)> {
    let total = (hi - lo + 1) as u64;
    let sizes = crate::stats::shard_sizes(total, shards.max(1).min(total as usize));
    let mut out = Vec::new();
    let mut start = lo;
    for s in sizes {
        out.push((start, start + s as i64 - 1));
        start += s as i64;
    }
    out
}

struct ScanOutput {
    /// Per shard: per-bucket counts.
    shard_buckets: Vec<((i64, i64), Vec<u64>)>,
    boundary: u64,
    witnesses: Vec<Vec<i64>>,
}

fn scan(pair: &FormPair, t_list: &[f64], i: Interval, j: Interval, shards: usize, collect: bool) -> Result<ScanOutput> {
    let tmax = *t_list.last().ok_or_else(|| Error::InvalidInput("empty T list".into()))?;
    if !(tmax > 0.0) || t_list.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidInput("T must be positive".into()));
    }
    if t_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("T list must be strictly increasing".into()));
    }
    if tmax > T_GUARD {
        return Err(Error::GuardExceeded(format!("T = {tmax} exceeds {T_GUARD}")));
    }
    let plan = Plan::new(pair)?;
    let t2: Vec<f64> = t_list.iter().map(|t| t * t).collect();
    let sc = Scan { plan: &plan, t2: &t2, i, j, collect };
    let (lo, hi) = outer_range(&plan, tmax);
    let tallies: Vec<Tally> = (lo..=hi).into_par_iter().map(|w0| sc.run_outer(w0)).collect();
    let mut shard_buckets = Vec::new();
    for (slo, shi) in split(lo, hi, shards) {
        let mut b = vec![0u64; t2.len()];
        for t in &tallies[(slo - lo) as usize..=(shi - lo) as usize] {
            for (acc, x) in b.iter_mut().zip(&t.buckets) {
                *acc += x;
            }
        }
        shard_buckets.push(((slo, shi), b));
    }
    let boundary = tallies.iter().map(|t| t.boundary).sum();
    let witnesses = tallies.into_iter().flat_map(|t| t.witnesses).collect();
    Ok(ScanOutput { shard_buckets, boundary, witnesses })
}

pub fn count_joint(query: &CountQuery, shards: usize) -> Result<CountReport> {
    let start = Instant::now();
    let out = scan(&query.pair, &[query.t], query.i, query.j, shards, query.collect_witnesses)?;
    let shards: Vec<ShardCount> = out
        .shard_buckets
        .iter()
        .map(|&((lo, hi), ref b)| ShardCount { lo, hi, count: b[0] })
        .collect();
    Ok(CountReport {
        n_count: shards.iter().map(|s| s.count).sum(),
        t: query.t,
        i: query.i,
        j: query.j,
        shards,
        boundary_hits: out.boundary,
        witnesses: query.collect_witnesses.then_some(out.witnesses),
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Cumulative counts for each `T` in `t_list` from one pass at the largest.
pub fn count_scan(query: &CountQuery, t_list: &[f64], shards: usize) -> Result<Vec<CountReport>> {
    let start = Instant::now();
    let out = scan(&query.pair, t_list, query.i, query.j, shards, false)?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut reports = Vec::with_capacity(t_list.len());
    for (k, &t) in t_list.iter().enumerate() {
        let shards: Vec<ShardCount> = out
            .shard_buckets
            .iter()
            .map(|&((lo, hi), ref b)| ShardCount { lo, hi, count: b[..=k].iter().sum() })
            .collect();
        reports.push(CountReport {
            n_count: shards.iter().map(|s| s.count).sum(),
            t,
            i: query.i,
            j: query.j,
            shards,
            boundary_hits: out.boundary,
            witnesses: None,
            wall_time: elapsed,
        });
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{LinearForm, QuadraticForm};

    fn brute(pair: &FormPair, t: f64, i: Interval, j: Interval) -> u64 {
        let n = pair.dim();
        let r = t.ceil() as i64;
        let mut v = vec![-r; n];
        let mut count = 0;
        loop {
            let n2: i64 = v.iter().map(|x| x * x).sum();
            if n2 > 0 && (n2 as f64) < t * t {
                let fv: Vec<f64> = v.iter().map(|&x| x as f64).collect();
                if i.contains(pair.q.eval(&fv)) && j.contains(pair.l.eval(&fv)) {
                    count += 1;
                }
            }
            let mut k = 0;
            while k < n {
                v[k] += 1;
                if v[k] <= r {
                    break;
                }
                v[k] = -r;
                k += 1;
            }
            if k == n {
                return count;
            }
        }
    }

    fn unit_interval() -> Interval {
        Interval::new(-1.0, 1.0).unwrap()
    }

    #[test]
    fn canonical_pair_matches_brute_force() {
        let pair = FormPair::canonical(4, 2).unwrap();
        let q = CountQuery { pair: pair.clone(), t: 12.0, i: unit_interval(), j: unit_interval(), collect_witnesses: false };
        let got = count_joint(&q, 3).unwrap();
        assert_eq!(got.n_count, brute(&pair, 12.0, unit_interval(), unit_interval()));
        assert!(got.n_count > 0);
    }

    #[test]
    fn tiny_ball_is_empty() {
        let pair = FormPair::canonical(4, 2).unwrap();
        let q = CountQuery { pair, t: 0.5, i: unit_interval(), j: unit_interval(), collect_witnesses: false };
        assert_eq!(count_joint(&q, 1).unwrap().n_count, 0);
    }

    #[test]
    fn irrational_pair_matches_brute_force() {
        let g = DMatrix::from_row_slice(4, 4, &[
            1.0, 0.3, 0.0, 0.1, 0.3, -2f64.sqrt(), 0.2, 0.0, 0.0, 0.2, 3f64.sqrt(), -0.4, 0.1, 0.0, -0.4, -0.7,
        ]);
        let pair = FormPair::new(
            QuadraticForm::new(g).unwrap(),
            LinearForm::new(vec![0.2, -1.0, 5f64.sqrt() - 2.0, 0.6]).unwrap(),
        )
        .unwrap();
        let i = Interval::new(-2.0, 3.0).unwrap();
        let j = Interval::new(-0.5, 1.5).unwrap();
        let q = CountQuery { pair: pair.clone(), t: 10.0, i, j, collect_witnesses: false };
        assert_eq!(count_joint(&q, 4).unwrap().n_count, brute(&pair, 10.0, i, j));
    }

    #[test]
    fn scan_is_cumulative() {
        let pair = FormPair::canonical(4, 2).unwrap();
        let q = CountQuery { pair, t: 10.0, i: unit_interval(), j: unit_interval(), collect_witnesses: false };
        let scan = count_scan(&q, &[5.0, 10.0], 2).unwrap();
        assert_eq!(scan[1].n_count, count_joint(&q, 1).unwrap().n_count);
        let q5 = CountQuery { t: 5.0, ..q };
        assert_eq!(scan[0].n_count, count_joint(&q5, 1).unwrap().n_count);
    }

    #[test]
    fn quadratic_ranges_cover_solutions() {
        // 2z² − 3z + 1 ∈ (0, 10)
        let rs = quadratic_ranges(2.0, -3.0, 1.0, 0.0, 10.0, 100);
        for z in -100i64..=100 {
            let g = 2.0 * (z * z) as f64 - 3.0 * z as f64 + 1.0;
            if 0.0 < g && g < 10.0 {
                assert!(rs.as_slice().iter().any(|&(a, b)| a <= z && z <= b), "z = {z}");
            }
        }
    }
}
