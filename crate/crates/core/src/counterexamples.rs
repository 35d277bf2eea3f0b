//! The families `(q_β, l_β)` of signature (2,2) and (2,3), and scans of the
//! normalized counts along increasing `T`.
//!
//! Sig22: `q_β = x₁² + x₂² − βx₃² − (βx₃ + x₄)²`, `l_β = βx₃ + x₄`.
//! Sig23: `q_β = x₁² + x₂² − β(x₃² + x₄²) − (βx₃ + βx₄ + x₅)²`,
//! `l_β = βx₃ + βx₄ + x₅`.
//!
//! In both, `q_β + l_β² = x₁² + x₂² − βΣᵢ₌₃ xᵢ²` is the auxiliary form `q'`
//! on the first `n − 1` coordinates.

use nalgebra::DMatrix;
use num_traits::{FromPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::counting::{count_joint, CountQuery, Interval};
use crate::error::{Error, Result};
use crate::forms::{FormPair, LinearForm, QuadraticForm};
use crate::rational::{q_int, Q};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    Sig22,
    Sig23,
}

impl Variant {
    pub fn dim(&self) -> usize {
        match self {
            Variant::Sig22 => 4,
            Variant::Sig23 => 5,
        }
    }

    /// Squared factor `c²` in the witness norm bound `‖v‖ ≤ c·T`.
    ///
    /// Sig22: `|x₄| ≤ ½ + β|x₃| ≤ T` for large `T`, so `c² = 2`. Sig23:
    /// `|x₅| ≤ ½ + β|x₃ + x₄| ≤ √2·T`, so `c² = 3`.
    pub fn norm_factor_sq(&self) -> u32 {
        match self {
            Variant::Sig22 => 2,
            Variant::Sig23 => 3,
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sig22" => Ok(Variant::Sig22),
            "sig23" => Ok(Variant::Sig23),
            _ => Err(Error::Parse(format!("unknown variant {s:?}, expected sig22 or sig23"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaFamily {
    pub beta: f64,
    pub variant: Variant,
    /// Human-readable origin of `beta`.
    pub label: String,
}

impl BetaFamily {
    pub fn new(beta: f64, variant: Variant) -> Result<Self> {
        if !(beta.is_finite() && beta != 0.0) {
            return Err(Error::InvalidInput(format!("beta must be finite and nonzero, got {beta}")));
        }
        Ok(Self { beta, variant, label: format!("{beta}") })
    }

    /// `Σ_{k=1}^{terms} 2^{−k!}`. In double precision terms with `k ≥ 5`
    /// fall below the last bit, so the stored value has denominator `2²⁴`.
    pub fn liouville(terms: u32, variant: Variant) -> Result<Self> {
        if terms == 0 {
            return Err(Error::InvalidInput("liouville needs at least one term".into()));
        }
        let mut beta = 0.0;
        let mut fact: i32 = 1;
        for k in 1..=terms as i32 {
            fact = fact.saturating_mul(k);
            beta += 2f64.powi(-fact.min(1100));
        }
        Ok(Self { beta, variant, label: format!("liouville:{terms}") })
    }

    /// `(√5 − 1)/2`, badly approximable.
    pub fn golden(variant: Variant) -> Self {
        Self { beta: (5f64.sqrt() - 1.0) / 2.0, variant, label: "golden".into() }
    }

    /// Parses `liouville:K`, `golden`, `sqrt2m1` or a decimal value.
    pub fn parse(spec: &str, variant: Variant) -> Result<Self> {
        let s = spec.trim();
        if let Some(k) = s.strip_prefix("liouville:") {
            let k: u32 = k.parse().map_err(|_| Error::Parse(format!("bad term count in {s:?}")))?;
            return Self::liouville(k, variant);
        }
        match s {
            "golden" => Ok(Self::golden(variant)),
            "sqrt2m1" => Ok(Self { beta: 2f64.sqrt() - 1.0, variant, label: "sqrt2m1".into() }),
            _ => {
                let b: f64 = s.parse().map_err(|_| Error::Parse(format!("bad beta {s:?}")))?;
                Self::new(b, variant)
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.variant.dim()
    }

    /// Whether `β ∈ (1/2, 1)`, the range used by the witness construction.
    pub fn in_analysis_range(&self) -> bool {
        self.beta > 0.5 && self.beta < 1.0
    }
}

/// Gram matrix and linear coefficients of `(q_β, l_β)` over any field.
fn assemble<T>(variant: Variant, beta: &T, one: &T) -> (Vec<Vec<T>>, Vec<T>)
where
    T: Clone + Zero + std::ops::Mul<Output = T> + std::ops::Add<Output = T> + std::ops::Neg<Output = T>,
{
    let n = variant.dim();
    let mut g = vec![vec![T::zero(); n]; n];
    g[0][0] = one.clone();
    g[1][1] = one.clone();
    // l = Σ_{i ∈ tail} β xᵢ + x_n; q = x₁² + x₂² − βΣ_{tail} xᵢ² − l².
    let mut l = vec![T::zero(); n];
    for c in l.iter_mut().take(n - 1).skip(2) {
        *c = beta.clone();
    }
    l[n - 1] = one.clone();
    for i in 2..n {
        for j in 2..n {
            let mut e = -(l[i].clone() * l[j].clone());
            if i == j && i < n - 1 {
                e = e + -beta.clone();
            }
            g[i][j] = e;
        }
    }
    (g, l)
}

/// Exact Gram matrix and linear form at a rational `β`.
pub fn exact_coefficients(variant: Variant, beta: &Q) -> (Vec<Vec<Q>>, Vec<Q>) {
    assemble(variant, beta, &q_int(1))
}

pub fn build_pair(family: &BetaFamily) -> Result<FormPair> {
    let (g, l) = assemble(family.variant, &family.beta, &1.0);
    let n = family.dim();
    let gram = DMatrix::from_fn(n, n, |i, j| g[i][j]);
    FormPair::new(QuadraticForm::new(gram)?, LinearForm::new(l)?)
}

/// `q'(x) = x₁² + x₂² − βΣ_{i≥3} xᵢ²` on `ℤ^{n−1}`.
fn auxiliary(beta: f64, x: &[i64]) -> f64 {
    let head = (x[0] * x[0] + x[1] * x[1]) as f64;
    let tail: i64 = x[2..].iter().map(|c| c * c).sum();
    head - beta * tail as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessSet {
    /// Vectors produced by the lift.
    pub count: u64,
    /// Lifted vectors failing an exact constraint check.
    pub violations: u64,
    /// The first few witnesses, in enumeration order.
    pub examples: Vec<Vec<i64>>,
}

const WITNESS_EXAMPLES: usize = 32;

/// Exact check of `q_β(v) ∈ [−1, 2]`, `l_β(v) ∈ [−1, 1]` and
/// `‖v‖² ≤ c²T²` at the rational value of the stored `β`.
pub fn witness_is_valid(family: &BetaFamily, v: &[i64], t: f64) -> bool {
    let (Some(beta), Some(tq)) = (Q::from_f64(family.beta), Q::from_f64(t)) else {
        return false;
    };
    let n = family.dim();
    let head = q_int(v[0] * v[0] + v[1] * v[1]);
    let tail_sq = q_int(v[2..n - 1].iter().map(|c| c * c).sum());
    let tail_sum = q_int(v[2..n - 1].iter().sum());
    let l = &beta * tail_sum + q_int(v[n - 1]);
    let q = head - &beta * tail_sq - &l * &l;
    let norm_sq = q_int(v.iter().map(|c| c * c).sum());
    let bound = &tq * &tq * q_int(family.variant.norm_factor_sq() as i64);
    q >= q_int(-1) && q <= q_int(2) && l >= q_int(-1) && l <= q_int(1) && norm_sq <= bound
}

/// Integer points `x ∈ ℤ^{n−1}` with `‖x‖ ≤ T` and `q'(x) ∈ [1/β, 2]`,
/// lifted by `x_n = round(−βΣ_{i≥3} xᵢ)`.
pub fn lifted_witnesses(family: &BetaFamily, t: f64) -> Result<WitnessSet> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("T must be positive, got {t}")));
    }
    let beta = family.beta;
    if beta <= 0.0 {
        return Err(Error::InvalidInput("witness construction needs beta > 0".into()));
    }
    let n = family.dim();
    let tails = n - 3;
    let (lo, hi) = (1.0 / beta, 2.0);
    let tt = t * t;
    let b = t.floor() as i64;
    let mut out = WitnessSet { count: 0, violations: 0, examples: Vec::new() };
    let mut tail = vec![-b; tails];
    let mut x = vec![0i64; n - 1];
    let mut v = vec![0i64; n];
    'odometer: loop {
        let tail_sq: i64 = tail.iter().map(|c| c * c).sum();
        if (tail_sq as f64) <= tt {
            let shift = beta * tail_sq as f64;
            let room = tt - tail_sq as f64;
            let x1max = room.sqrt().floor() as i64;
            for x1 in -x1max..=x1max {
                let r1 = room - (x1 * x1) as f64;
                // x₂² ∈ [lo + shift − x₁², hi + shift − x₁²] ∩ [0, r1].
                let s_lo = (lo + shift - (x1 * x1) as f64).max(0.0);
                let s_hi = (hi + shift - (x1 * x1) as f64).min(r1);
                if s_hi < s_lo {
                    continue;
                }
                let a = s_lo.sqrt().floor().max(0.0) as i64;
                let c = s_hi.sqrt().ceil() as i64;
                for m in a..=c {
                    for x2 in if m == 0 { vec![0] } else { vec![m, -m] } {
                        x[0] = x1;
                        x[1] = x2;
                        x[2..].copy_from_slice(&tail);
                        let qv = auxiliary(beta, &x);
                        let norm = (x1 * x1 + x2 * x2 + tail_sq) as f64;
                        if qv < lo || qv > hi || norm > tt {
                            continue;
                        }
                        v[..n - 1].copy_from_slice(&x);
                        let tail_sum: i64 = tail.iter().sum();
                        v[n - 1] = (-beta * tail_sum as f64).round() as i64;
                        out.count += 1;
                        if !witness_is_valid(family, &v, t) {
                            out.violations += 1;
                        }
                        if out.examples.len() < WITNESS_EXAMPLES {
                            out.examples.push(v.clone());
                        }
                    }
                }
            }
        }
        for c in tail.iter_mut() {
            if *c < b {
                *c += 1;
                continue 'odometer;
            }
            *c = -b;
        }
        break;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeRow {
    pub t: f64,
    /// `N_{T,I,J}(q_β, l_β)`.
    pub n_count: u64,
    /// `N/T^{n−3}`.
    pub ratio: f64,
    /// Count with `I` replaced by `(1/β, 2)`.
    pub n_aux_window: u64,
    pub boundary_hits: u64,
    pub witnesses: WitnessSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeReport {
    pub family: BetaFamily,
    pub in_analysis_range: bool,
    pub i: Interval,
    pub j: Interval,
    pub rows: Vec<SpikeRow>,
    /// max/min of the ratio over the upper half of the scanned `T`.
    pub spread: f64,
    pub threshold: f64,
    pub non_stabilizing: bool,
}

pub const SPIKE_THRESHOLD: f64 = 1.5;

pub fn default_windows() -> (Interval, Interval) {
    (Interval { lo: -1.0, hi: 2.0 }, Interval { lo: -1.0, hi: 1.0 })
}

/// Counts, normalized ratios and lifted witnesses along `t_list`.
pub fn spike_scan(family: &BetaFamily, t_list: &[f64], i: Interval, j: Interval, shards: usize) -> Result<SpikeReport> {
    if i.lo > -1.0 || i.hi < 2.0 || j.lo > -1.0 || j.hi < 1.0 {
        return Err(Error::InvalidInput("I must contain [-1, 2] and J must contain [-1, 1]".into()));
    }
    if t_list.is_empty() || t_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("T list must be nonempty and strictly increasing".into()));
    }
    let pair = build_pair(family)?;
    let n = family.dim();
    let aux_i = Interval::new(1.0 / family.beta, 2.0)?;
    let mut rows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let main = count_joint(&CountQuery { pair: pair.clone(), t, i, j, collect_witnesses: false }, shards)?;
        let aux = count_joint(&CountQuery { pair: pair.clone(), t, i: aux_i, j, collect_witnesses: false }, shards)?;
        rows.push(SpikeRow {
            t,
            n_count: main.n_count,
            ratio: main.n_count as f64 / t.powi(n as i32 - 3),
            n_aux_window: aux.n_count,
            boundary_hits: main.boundary_hits,
            witnesses: lifted_witnesses(family, t)?,
        });
    }
    let upper = &rows[rows.len() / 2..];
    let max = upper.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let min = upper.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let spread = if min > 0.0 { max / min } else { f64::INFINITY };
    Ok(SpikeReport {
        family: family.clone(),
        in_analysis_range: family.in_analysis_range(),
        i,
        j,
        rows,
        spread,
        threshold: SPIKE_THRESHOLD,
        non_stabilizing: spread > SPIKE_THRESHOLD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{classify_pair, PairType, Signature};

    #[test]
    fn families_are_type_one_with_expected_kernel_signature() {
        let b = 2f64.sqrt() - 1.0;
        let p = build_pair(&BetaFamily::new(b, Variant::Sig22).unwrap()).unwrap();
        assert_eq!(classify_pair(&p).unwrap(), PairType::TypeI(2));
        assert_eq!(p.cached_signature_on_kernel, Signature { pos: 2, neg: 1 });
        let p = build_pair(&BetaFamily::new(b, Variant::Sig23).unwrap()).unwrap();
        assert_eq!(classify_pair(&p).unwrap(), PairType::TypeI(2));
        assert_eq!(p.cached_signature_on_kernel, Signature { pos: 2, neg: 2 });
    }

    #[test]
    fn liouville_values() {
        let f = BetaFamily::liouville(3, Variant::Sig22).unwrap();
        assert_eq!(f.beta, 0.5 + 0.25 + 1.0 / 64.0);
        let f8 = BetaFamily::liouville(8, Variant::Sig22).unwrap();
        assert_eq!(f8.beta, f.beta + 2f64.powi(-24));
        assert!(f8.in_analysis_range());
        assert!(!BetaFamily::new(0.3, Variant::Sig22).unwrap().in_analysis_range());
        assert!(BetaFamily::new(0.0, Variant::Sig22).is_err());
    }

    #[test]
    fn witnesses_satisfy_constraints() {
        for variant in [Variant::Sig22, Variant::Sig23] {
            let fam = BetaFamily::golden(variant);
            let w = lifted_witnesses(&fam, 20.0).unwrap();
            assert!(w.count > 0);
            assert_eq!(w.violations, 0);
        }
    }

    #[test]
    fn scan_windows_are_validated() {
        let fam = BetaFamily::golden(Variant::Sig22);
        let narrow = Interval::new(-0.5, 2.0).unwrap();
        let (_, j) = default_windows();
        assert!(spike_scan(&fam, &[10.0], narrow, j, 1).is_err());
    }
}
