//! Lattices `gℤⁿ`, short-vector enumeration, the height function
//! `α(Λ) = max ‖v₁ ∧ ⋯ ∧ v_i‖⁻¹` and the Siegel transform.
//!
//! The minimum of `‖v₁ ∧ ⋯ ∧ v_i‖` is attained on a primitive sublattice,
//! so only primitive sublattices are enumerated.

use nalgebra::DMatrix;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{enumerate_ball, gram_schmidt, lll, to_f64, unimodular_completion, wedge_norm};

const LLL_DELTA: f64 = 0.99;
/// Relative slack on enumeration radii.
const RADIUS_SLACK: f64 = 1e-9;
pub const EXACT_MAX_DIM: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    basis: DMatrix<f64>,
}

impl Lattice {
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        if !basis.is_square() || basis.nrows() == 0 {
            return Err(Error::InvalidInput("lattice basis must be square".into()));
        }
        let sv = basis.clone().singular_values();
        let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &s| (a.min(s), b.max(s)));
        if !(lo > 0.0) || !(hi / lo).is_finite() || hi / lo > 1e14 {
            return Err(Error::InvalidInput("lattice basis is singular".into()));
        }
        Ok(Self { basis })
    }

    /// Like [`Lattice::new`] but requires `|det − 1| < 1e−9`.
    pub fn unimodular(basis: DMatrix<f64>) -> Result<Self> {
        let l = Self::new(basis)?;
        let d = l.basis.determinant();
        if (d - 1.0).abs() >= 1e-9 {
            return Err(Error::InvalidInput(format!("determinant {d} is not 1")));
        }
        Ok(l)
    }

    pub fn standard(n: usize) -> Self {
        Self { basis: DMatrix::identity(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn covolume(&self) -> f64 {
        self.basis.determinant().abs()
    }

    pub fn point(&self, coords: &[i64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.basis[(i, j)] * coords[j] as f64).sum())
            .collect()
    }

    /// LLL-reduced basis `B·U` and the transform `U`.
    pub fn reduced(&self) -> (DMatrix<f64>, DMatrix<i64>) {
        lll(&self.basis, LLL_DELTA)
    }
}

/// All `v ∈ ℤⁿ∖{0}` with `‖g v‖ ≤ radius`, closed under negation, sorted by
/// norm and then lexicographically.
pub fn shortest_vectors(lattice: &Lattice, radius: f64) -> Result<Vec<Vec<i64>>> {
    if !(radius > 0.0) {
        return Err(Error::InvalidInput("radius must be positive".into()));
    }
    let (red, u) = lattice.reduced();
    let mut found: Vec<(f64, Vec<i64>)> = Vec::new();
    let r2 = radius * radius;
    enumerate_ball(&red, radius, |x, _| {
        let coords = apply(&u, x);
        let norm_sq = lattice.point(&coords).iter().map(|v| v * v).sum::<f64>();
        if norm_sq <= r2 {
            found.push((norm_sq, coords));
        }
    })?;
    found.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| b.1.cmp(&a.1)));
    Ok(found.into_iter().map(|(_, v)| v).collect())
}

fn apply(u: &DMatrix<i64>, x: &[i64]) -> Vec<i64> {
    (0..u.nrows()).map(|i| (0..u.ncols()).map(|j| u[(i, j)] * x[j]).sum()).collect()
}

fn is_primitive(x: &[i64]) -> bool {
    x.iter().fold(0i64, |g, &c| g.gcd(&c)) == 1
}

/// First nonzero coordinate positive.
fn sign_normalized(x: &[i64]) -> bool {
    x.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
}

/// Hermite constant `γ_k` (known values for `k ≤ 8`, `1 + k/4` beyond).
pub fn hermite_constant(k: usize) -> f64 {
    match k {
        0 | 1 => 1.0,
        2 => (4.0f64 / 3.0).sqrt(),
        3 => 2f64.powf(1.0 / 3.0),
        4 => 2f64.sqrt(),
        5 => 8f64.powf(1.0 / 5.0),
        6 => (64.0f64 / 3.0).powf(1.0 / 6.0),
        7 => 64f64.powf(1.0 / 7.0),
        8 => 2.0,
        _ => 1.0 + k as f64 / 4.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlphaMode {
    Exact,
    Certified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AlphaQuality {
    Exact,
    Certified { lower: f64, upper: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaResult {
    pub value: f64,
    pub witness_rank: usize,
    /// Integer coordinates of generators of the optimal sublattice.
    pub witness_vectors: Vec<Vec<i64>>,
    pub mode: AlphaQuality,
    /// Per rank `i = 1..=n`: the minimal covolume (Exact) or its upper bound
    /// from the reduced basis (Certified).
    pub rank_minima: Vec<f64>,
}

/// Minimal covolume of a rank-`i` primitive sublattice of the lattice spanned
/// by the columns of `b` (`ambient × k`), with a witness in `b`-coordinates.
fn min_covolume(b: &DMatrix<f64>, i: usize) -> Result<(f64, Vec<Vec<i64>>)> {
    let k = b.ncols();
    if i == 0 {
        return Ok((1.0, Vec::new()));
    }
    if i == k {
        return Ok((wedge_norm(b), (0..k).map(|j| unit_vec(k, j)).collect()));
    }
    let (red, u) = lll(b, LLL_DELTA);
    let gs = gram_schmidt(&red);
    let mut best: f64 = gs.norms_sq[..i].iter().map(|s| s.sqrt()).product();
    let mut best_w: Vec<Vec<i64>> = (0..i).map(|j| unit_vec(k, j)).collect();
    let gamma_sqrt = hermite_constant(i).sqrt();
    let radius = gamma_sqrt * best.powf(1.0 / i as f64) * (1.0 + RADIUS_SLACK);

    let mut cands: Vec<(f64, Vec<i64>)> = Vec::new();
    enumerate_ball(&red, radius, |x, n2| {
        if sign_normalized(x) && is_primitive(x) {
            cands.push((n2.sqrt(), x.to_vec()));
        }
    })?;
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| b.1.cmp(&a.1)));

    for (len, x) in cands {
        if len > gamma_sqrt * best.powf(1.0 / i as f64) * (1.0 + RADIUS_SLACK) {
            break;
        }
        if i == 1 {
            if len < best * (1.0 - 1e-12) {
                best = len;
                best_w = vec![x];
            }
            continue;
        }
        let c = unimodular_completion(&x)?;
        let cf = to_f64(&c);
        let b1 = &red * cf.column(0);
        let rest = &red * cf.columns(1, k - 1);
        let b1n = b1.norm_squared();
        let proj = DMatrix::from_fn(rest.nrows(), k - 1, |r, j| {
            let col = rest.column(j);
            col[r] - b1[r] * b1.dot(&col) / b1n
        });
        let (sub, sub_w) = min_covolume(&proj, i - 1)?;
        let cand = len * sub;
        if cand < best * (1.0 - 1e-12) {
            best = cand;
            let rest_i = c.columns(1, k - 1).into_owned();
            let mut w = vec![x.clone()];
            w.extend(sub_w.iter().map(|y| apply(&rest_i, y)));
            best_w = w;
        }
    }
    let witness = best_w.iter().map(|x| apply(&u, x)).collect();
    Ok((best, witness))
}

fn unit_vec(k: usize, j: usize) -> Vec<i64> {
    let mut v = vec![0; k];
    v[j] = 1;
    v
}

pub fn alpha(lattice: &Lattice, mode: AlphaMode) -> Result<AlphaResult> {
    match mode {
        AlphaMode::Exact => alpha_exact(lattice),
        AlphaMode::Certified => Ok(alpha_certified(lattice)),
    }
}

fn alpha_exact(lattice: &Lattice) -> Result<AlphaResult> {
    let n = lattice.dim();
    if n > EXACT_MAX_DIM {
        return Err(Error::ModeUnavailable(format!("exact alpha requires n <= 5, got {n}")));
    }
    let mut minima = Vec::with_capacity(n);
    let mut best = (0.0f64, 0usize, Vec::new());
    for i in 1..=n {
        let (c, w) = min_covolume(lattice.basis(), i)?;
        minima.push(c);
        if 1.0 / c > best.0 * (1.0 + 1e-12) {
            best = (1.0 / c, i, w);
        }
    }
    Ok(AlphaResult {
        value: best.0,
        witness_rank: best.1,
        witness_vectors: best.2,
        mode: AlphaQuality::Exact,
        rank_minima: minima,
    })
}

/// Bounds from an LLL basis: leading-block covolumes bound each rank minimum
/// above; `λ_j ≥ min_{k≥j} |b*_k|` with Minkowski's second theorem bounds
/// it below. The reported value is the lower bound, which is attained by the
/// leading block.
fn alpha_certified(lattice: &Lattice) -> AlphaResult {
    let n = lattice.dim();
    let (red, u) = lattice.reduced();
    let gs = gram_schmidt(&red);
    let lens: Vec<f64> = gs.norms_sq.iter().map(|s| s.sqrt()).collect();
    let tail_min: Vec<f64> = (0..n).map(|j| lens[j..].iter().copied().fold(f64::INFINITY, f64::min)).collect();
    let mut upper_cov = Vec::with_capacity(n);
    let (mut lo_alpha, mut hi_alpha, mut rank) = (0.0f64, 0.0f64, 0usize);
    let (mut up, mut lam) = (1.0, 1.0);
    for i in 1..=n {
        up *= lens[i - 1];
        lam *= tail_min[i - 1];
        let lower_cov = lam / hermite_constant(i).powf(i as f64 / 2.0);
        upper_cov.push(up);
        if 1.0 / up > lo_alpha * (1.0 + 1e-12) {
            lo_alpha = 1.0 / up;
            rank = i;
        }
        hi_alpha = hi_alpha.max(1.0 / lower_cov);
    }
    let hi_alpha = hi_alpha.max(lo_alpha);
    AlphaResult {
        value: lo_alpha,
        witness_rank: rank,
        witness_vectors: (0..rank).map(|j| u.column(j).iter().copied().collect()).collect(),
        mode: AlphaQuality::Certified { lower: lo_alpha, upper: hi_alpha },
        rank_minima: upper_cov,
    }
}

/// A function on `ℝⁿ` vanishing outside the closed ball of `radius()`.
pub trait CompactFn: Sync {
    fn radius(&self) -> f64;
    fn eval(&self, v: &[f64]) -> f64;
}

/// Indicator of the closed ball of radius `r`.
#[derive(Debug, Clone, Copy)]
pub struct BallIndicator(pub f64);

impl CompactFn for BallIndicator {
    fn radius(&self) -> f64 {
        self.0
    }
    fn eval(&self, v: &[f64]) -> f64 {
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 <= self.0 * self.0 {
            1.0
        } else {
            0.0
        }
    }
}

/// A closure together with its support radius.
pub struct Supported<F> {
    pub radius: f64,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> CompactFn for Supported<F> {
    fn radius(&self) -> f64 {
        self.radius
    }
    fn eval(&self, v: &[f64]) -> f64 {
        (self.f)(v)
    }
}

/// `f̃(Λ) = Σ_{v ∈ Λ∖0} f(v)`.
pub fn siegel_transform(f: &dyn CompactFn, lattice: &Lattice) -> Result<f64> {
    let vs = shortest_vectors(lattice, f.radius())?;
    Ok(vs.iter().map(|c| f.eval(&lattice.point(c))).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn diag(d: &[f64]) -> Lattice {
        Lattice::new(DMatrix::from_diagonal(&DVector::from_row_slice(d))).unwrap()
    }

    #[test]
    fn shortest_vector_examples() {
        let z3 = Lattice::standard(3);
        let vs = shortest_vectors(&z3, 1.5).unwrap();
        assert_eq!(vs.len(), 18);
        assert!(vs.iter().all(|v| vs.contains(&v.iter().map(|c| -c).collect())));
        assert!(shortest_vectors(&Lattice::standard(2), 0.5).unwrap().is_empty());
        let vs = shortest_vectors(&diag(&[0.5, 2.0]), 0.6).unwrap();
        assert_eq!(vs, vec![vec![1, 0], vec![-1, 0]]);
    }

    #[test]
    fn alpha_examples() {
        let r = alpha(&Lattice::standard(4), AlphaMode::Exact).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.witness_rank, 1);
        assert_eq!(r.witness_vectors, vec![vec![1, 0, 0, 0]]);

        let r = alpha(&diag(&[0.5, 2.0, 1.0, 1.0]), AlphaMode::Exact).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        assert_eq!(r.witness_rank, 1);

        let e = std::f64::consts::E;
        let r = alpha(&diag(&[1.0 / e, e, 1.0, 1.0, 1.0]), AlphaMode::Exact).unwrap();
        assert!((r.value - e).abs() < 1e-12);
        assert!(matches!(
            alpha(&Lattice::standard(6), AlphaMode::Exact),
            Err(Error::ModeUnavailable(_))
        ));
    }

    #[test]
    fn certified_brackets_exact() {
        let g: DMatrix<f64> = DMatrix::from_row_slice(4, 4, &[
            1.0, 0.3, -0.2, 0.7, 0.0, 0.9, 0.4, -0.1, 0.2, 0.0, 1.4, 0.5, -0.3, 0.6, 0.0, 0.8,
        ]);
        let g = &g / g.determinant().abs().powf(0.25);
        let l = Lattice::new(g).unwrap();
        let ex = alpha(&l, AlphaMode::Exact).unwrap();
        let ce = alpha(&l, AlphaMode::Certified).unwrap();
        let AlphaQuality::Certified { lower, upper } = ce.mode else { panic!() };
        assert!(lower <= ex.value * (1.0 + 1e-9) && ex.value <= upper * (1.0 + 1e-9));
    }

    #[test]
    fn siegel_examples() {
        assert_eq!(siegel_transform(&BallIndicator(1.5), &Lattice::standard(3)).unwrap(), 18.0);
        assert_eq!(siegel_transform(&BallIndicator(0.5), &Lattice::standard(4)).unwrap(), 0.0);
        let tent = Supported {
            radius: 1.2,
            f: |v: &[f64]| (1.0 - v.iter().map(|x| x * x).sum::<f64>().sqrt()).max(0.0),
        };
        assert_eq!(siegel_transform(&tent, &Lattice::standard(2)).unwrap(), 0.0);
    }

    #[test]
    fn witness_realizes_value() {
        let g = DMatrix::from_row_slice(3, 3, &[0.2, 0.1, 0.0, 0.0, 3.0, 0.4, 0.0, 0.0, 1.0 / 0.6]);
        let l = Lattice::new(g).unwrap();
        let r = alpha(&l, AlphaMode::Exact).unwrap();
        let cols: Vec<f64> = r.witness_vectors.iter().flat_map(|c| l.point(c)).collect();
        let m = DMatrix::from_column_slice(3, r.witness_rank, &cols);
        assert!((wedge_norm(&m) - 1.0 / r.value).abs() < 1e-9);
    }
}
