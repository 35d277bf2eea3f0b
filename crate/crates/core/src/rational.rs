//! Exact linear algebra over `ℚ` for span membership and rank.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;

pub fn q_int(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

pub fn q_frac(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `"a"`, `"-a/b"` or a finite decimal such as `"0.25"`.
pub fn parse_rational(s: &str) -> Option<Q> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().ok()?;
        let b: BigInt = b.trim().parse().ok()?;
        if b.is_zero() {
            return None;
        }
        return Some(Q::new(a, b));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        let num: BigInt = digits.parse().ok()?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        let r = Q::new(num, den);
        return Some(if neg { -r } else { r });
    }
    s.parse::<BigInt>().ok().map(Q::from_integer)
}

pub fn to_f64(x: &Q) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

/// Row space of a set of vectors, kept in reduced row-echelon form.
#[derive(Debug, Clone, Default)]
pub struct RationalSpan {
    dim: usize,
    rows: Vec<Vec<Q>>,
    pivots: Vec<usize>,
}

impl RationalSpan {
    pub fn new(dim: usize) -> Self {
        Self { dim, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn from_vectors<'a>(dim: usize, vs: impl IntoIterator<Item = &'a [Q]>) -> Self {
        let mut s = Self::new(dim);
        for v in vs {
            s.insert(v);
        }
        s
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    fn reduce(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(v.len(), self.dim);
        let mut w = v.to_vec();
        for (row, &piv) in self.rows.iter().zip(&self.pivots) {
            if w[piv].is_zero() {
                continue;
            }
            let c = w[piv].clone();
            for (wj, rj) in w.iter_mut().zip(row).skip(piv) {
                if !rj.is_zero() {
                    *wj -= &c * rj;
                }
            }
        }
        w
    }

    pub fn contains(&self, v: &[Q]) -> bool {
        self.reduce(v).iter().all(Zero::is_zero)
    }

    /// Adds `v`; returns whether the rank grew.
    pub fn insert(&mut self, v: &[Q]) -> bool {
        let mut w = self.reduce(v);
        let Some(piv) = w.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = Q::one() / &w[piv];
        for x in w.iter_mut() {
            if !x.is_zero() {
                *x *= &inv;
            }
        }
        for row in self.rows.iter_mut() {
            if row[piv].is_zero() {
                continue;
            }
            let c = row[piv].clone();
            for (rj, wj) in row.iter_mut().zip(&w) {
                if !wj.is_zero() {
                    *rj -= &c * wj;
                }
            }
        }
        let at = self.pivots.partition_point(|&p| p < piv);
        self.rows.insert(at, w);
        self.pivots.insert(at, piv);
        true
    }

    /// `self ∩ other = {0}`, decided by `rank(self + other) = rank self + rank other`.
    pub fn meets_trivially(&self, other: &RationalSpan) -> bool {
        let mut sum = self.clone();
        other.rows.iter().all(|r| sum.insert(r))
    }
}

pub fn max_abs(v: &[Q]) -> Q {
    v.iter().map(|x| x.abs()).max().unwrap_or_else(Q::zero)
}
