//! Quadratic and linear forms, pairs of them, and their classification under
//! the action `(q, l) ↦ (λ·q∘g, μ·l∘g)` of `SL_n(ℝ)` and nonzero scalars.
//!
//! Sign convention: a type I pair is normalized so that the quadratic form is
//! negative on the `q`-orthogonal complement of `ker l` (as in the canonical
//! pair `2x₁x₂ + x₃² + ⋯ + x_{p+1}² − x_{p+2}² − ⋯ − x_n²`, `x_n`). The label
//! `TypeI(p)` then records the number of positive directions on `ker l`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{max_abs_diff, symmetric_eigen};

/// Relative eigenvalue cutoff below which a form counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForm {
    gram: DMatrix<f64>,
}

impl QuadraticForm {
    pub fn new(gram: DMatrix<f64>) -> Result<Self> {
        if !gram.is_square() || gram.nrows() == 0 {
            return Err(Error::InvalidInput("gram matrix must be square and nonempty".into()));
        }
        if max_abs_diff(&gram, &gram.transpose()) > SYMMETRY_TOL {
            return Err(Error::InvalidInput("gram matrix is not symmetric".into()));
        }
        Ok(Self { gram: (&gram + gram.transpose()) * 0.5 })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self { gram: DMatrix::from_diagonal(&DVector::from_row_slice(diag)) }
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.gram[(i, j)] * v[j];
            }
            acc += v[i] * row;
        }
        acc
    }

    /// `(λ·q)(g x)`: the Gram matrix `λ gᵀ Q g`.
    pub fn transform(&self, g: &DMatrix<f64>, lambda: f64) -> Self {
        let m = g.transpose() * &self.gram * g * lambda;
        Self { gram: (&m + m.transpose()) * 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearForm {
    coeffs: DVector<f64>,
}

impl LinearForm {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().all(|c| c.abs() <= 1e-12) {
            return Err(Error::InvalidInput("linear form is zero".into()));
        }
        Ok(Self { coeffs: DVector::from_vec(coeffs) })
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &DVector<f64> {
        &self.coeffs
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        self.coeffs.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// `μ·l(g x)`.
    pub fn transform(&self, g: &DMatrix<f64>, mu: f64) -> Self {
        Self { coeffs: g.transpose() * &self.coeffs * mu }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub pos: usize,
    pub neg: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairType {
    TypeI(usize),
    TypeII(usize),
    Degenerate,
}

impl std::fmt::Display for PairType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PairType::TypeI(p) => write!(f, "TypeI({p})"),
            PairType::TypeII(p) => write!(f, "TypeII({p})"),
            PairType::Degenerate => write!(f, "Degenerate"),
        }
    }
}

/// A quadratic form together with a linear form on the same space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormPair {
    pub q: QuadraticForm,
    pub l: LinearForm,
    pub cached_type: PairType,
    /// Raw inertia of `q` restricted to `ker l` (zero directions excluded).
    pub cached_signature_on_kernel: Signature,
}

impl FormPair {
    pub fn new(q: QuadraticForm, l: LinearForm) -> Result<Self> {
        if q.dim() != l.dim() {
            return Err(Error::DimensionMismatch { expected: q.dim(), got: l.dim() });
        }
        let (cached_type, sig) = classify_raw(&q, &l)?;
        Ok(Self { q, l, cached_type, cached_signature_on_kernel: sig })
    }

    pub fn dim(&self) -> usize {
        self.q.dim()
    }

    /// The pair `(λ·q∘g, μ·l∘g)`.
    pub fn transform(&self, g: &DMatrix<f64>, lambda: f64, mu: f64) -> Result<Self> {
        Self::new(self.q.transform(g, lambda), self.l.transform(g, mu))
    }

    /// Canonical type I pair of signature data `p` in dimension `n`:
    /// `2x₁x₂ + x₃² + ⋯ + x_{p+1}² − x_{p+2}² − ⋯ − x_n²` with `l = x_n`.
    pub fn canonical(n: usize, p: usize) -> Result<Self> {
        Self::new(QuadraticForm::new(canonical_gram(n, p)?)?, LinearForm::new(unit(n, n - 1))?)
    }
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// Gram matrix of `2x₁x₂ + x₃² + ⋯ + x_{p+1}² − x_{p+2}² − ⋯ − x_n²`.
pub fn canonical_gram(n: usize, p: usize) -> Result<DMatrix<f64>> {
    if n < 3 || p == 0 || p > n - 1 {
        return Err(Error::BadSignature { p, q: n.saturating_sub(p) });
    }
    let mut m = DMatrix::zeros(n, n);
    m[(0, 1)] = 1.0;
    m[(1, 0)] = 1.0;
    for i in 2..n {
        m[(i, i)] = if i <= p { 1.0 } else { -1.0 };
    }
    Ok(m)
}

pub fn signature(q: &QuadraticForm) -> Result<Signature> {
    let (vals, _) = symmetric_eigen(q.gram());
    inertia(&vals, spectral_radius(&vals))
}

fn spectral_radius(vals: &[f64]) -> f64 {
    vals.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn inertia(vals: &[f64], scale: f64) -> Result<Signature> {
    let cutoff = DEGENERACY_TOL * scale;
    let mut sig = Signature { pos: 0, neg: 0 };
    for &v in vals {
        if v.abs() <= cutoff {
            return Err(Error::DegenerateForm { eigenvalue: v, cutoff });
        }
        if v > 0.0 {
            sig.pos += 1;
        } else {
            sig.neg += 1;
        }
    }
    Ok(sig)
}

/// Orthonormal basis (columns) of `ker l`.
pub fn kernel_basis(l: &LinearForm) -> DMatrix<f64> {
    let n = l.dim();
    let mut m = DMatrix::zeros(n, n + 1);
    m.set_column(0, l.coeffs());
    for i in 0..n {
        m[(i, i + 1)] = 1.0;
    }
    let q = m.qr().q();
    q.columns(1, n - 1).into_owned()
}

/// Gram matrix of `q` pulled back along an orthonormal basis of `ker l`.
pub fn restrict_to_kernel(q: &QuadraticForm, l: &LinearForm) -> Result<QuadraticForm> {
    if q.dim() != l.dim() {
        return Err(Error::DimensionMismatch { expected: q.dim(), got: l.dim() });
    }
    let p = kernel_basis(l);
    QuadraticForm::new(symmetrize(&(p.transpose() * q.gram() * &p)))
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn classify_raw(q: &QuadraticForm, l: &LinearForm) -> Result<(PairType, Signature)> {
    let (qvals, _) = symmetric_eigen(q.gram());
    let scale = spectral_radius(&qvals);
    let qsig = inertia(&qvals, scale)?;
    let p = kernel_basis(l);
    let m = symmetrize(&(p.transpose() * q.gram() * &p));
    let (kvals, _) = symmetric_eigen(&m);
    let cutoff = DEGENERACY_TOL * scale;
    let zeros = kvals.iter().filter(|v| v.abs() <= cutoff).count();
    let sig = Signature {
        pos: kvals.iter().filter(|&&v| v > cutoff).count(),
        neg: kvals.iter().filter(|&&v| v < -cutoff).count(),
    };
    let ty = match zeros {
        0 => {
            // det Q = det M · κ · |ℓ|⁻²  ⇒  sign κ = sign det Q · sign det M
            let neg_q = qsig.neg % 2 == 1;
            let neg_m = sig.neg % 2 == 1;
            let kappa_negative = neg_q != neg_m;
            PairType::TypeI(if kappa_negative { sig.pos } else { sig.neg })
        }
        1 => PairType::TypeII(qsig.pos.min(qsig.neg)),
        _ => PairType::Degenerate,
    };
    Ok((ty, sig))
}

pub fn classify_pair(pair: &FormPair) -> Result<PairType> {
    Ok(classify_raw(&pair.q, &pair.l)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CanonicalTarget {
    TypeI(usize),
    TypeII(usize),
}

/// `(g, λ, μ)` with `det g = 1`, `λ·q(g x) = q₀(x)` and `μ·l(g x) = x_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalReduction {
    pub g: DMatrix<f64>,
    pub lambda: f64,
    pub mu: f64,
    pub target: CanonicalTarget,
}

impl CanonicalReduction {
    /// Largest componentwise residual of the two defining identities.
    pub fn residual(&self, pair: &FormPair) -> Result<f64> {
        let n = pair.dim();
        let p = match self.target {
            CanonicalTarget::TypeI(p) => p,
            CanonicalTarget::TypeII(_) => {
                return Err(Error::ModeUnavailable("type II reduction".into()))
            }
        };
        let q0 = canonical_gram(n, p)?;
        let lhs = pair.q.transform(&self.g, self.lambda);
        let lin = pair.l.transform(&self.g, self.mu);
        let e_n = DVector::from_vec(unit(n, n - 1));
        let lin_err = (lin.coeffs() - e_n).amax();
        Ok(max_abs_diff(lhs.gram(), &q0).max(lin_err))
    }
}

const RESCALE_LIMIT: f64 = 1e8;

pub fn reduce_to_canonical(pair: &FormPair) -> Result<CanonicalReduction> {
    let n = pair.dim();
    let p = match classify_pair(pair)? {
        PairType::TypeI(p) => p,
        other => return Err(Error::NotTypeI(other.to_string())),
    };
    if p == 0 || p >= n - 1 {
        return Err(Error::NotTypeI(format!("TypeI({p}) has a definite kernel restriction")));
    }
    if let Some(red) = scalar_multiple_of_canonical(pair, p) {
        return Ok(red);
    }

    let ell = pair.l.coeffs();
    let kernel = kernel_basis(&pair.l);
    let m = symmetrize(&(kernel.transpose() * pair.q.gram() * &kernel));
    let w0 = ell / ell.norm_squared();
    let b = kernel.transpose() * pair.q.gram() * &w0;
    let y = m
        .clone()
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::NotTypeI("kernel restriction is singular".into()))?;
    // l(w) = 1 and w is q-orthogonal to ker l
    let w = &w0 - &kernel * y;
    let kappa = pair.q.eval(w.as_slice());
    let sign = if kappa < 0.0 { 1.0 } else { -1.0 };
    let kappa = sign * kappa;

    let (vals, vecs) = symmetric_eigen(&(m * sign));
    let mut pos: Vec<DVector<f64>> = Vec::new();
    let mut neg: Vec<DVector<f64>> = Vec::new();
    for (i, &v) in vals.iter().enumerate().rev() {
        let scale = 1.0 / v.abs().sqrt();
        if scale > RESCALE_LIMIT {
            return Err(Error::IllConditioned(scale));
        }
        let col = &kernel * vecs.column(i) * scale;
        if v > 0.0 {
            pos.push(col);
        } else {
            neg.push(col);
        }
    }
    // neg was filled from the least negative eigenvalue; keep the order stable
    if pos.len() != p || neg.is_empty() {
        return Err(Error::NotTypeI("kernel restriction is not indefinite".into()));
    }
    let tau = 1.0 / (-kappa).sqrt();
    if tau > RESCALE_LIMIT {
        return Err(Error::IllConditioned(tau));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let c_plus = pos.remove(0);
    let c_minus = neg.remove(0);
    let mut cols: Vec<DVector<f64>> = vec![(&c_plus + &c_minus) * s, (&c_plus - &c_minus) * s];
    cols.extend(pos);
    cols.extend(neg);
    cols.push(w * tau);
    let mut big_g = DMatrix::from_columns(&cols);
    let mut det = big_g.determinant();
    if det < 0.0 {
        big_g.swap_columns(0, 1);
        det = -det;
    }
    let c = det.powf(-1.0 / n as f64);
    Ok(CanonicalReduction {
        g: big_g * c,
        lambda: sign / (c * c),
        mu: 1.0 / (c * tau),
        target: CanonicalTarget::TypeI(p),
    })
}

fn scalar_multiple_of_canonical(pair: &FormPair, p: usize) -> Option<CanonicalReduction> {
    let n = pair.dim();
    let q0 = canonical_gram(n, p).ok()?;
    let ell = pair.l.coeffs();
    let mu_inv = ell[n - 1];
    if mu_inv == 0.0 || ell.rows(0, n - 1).amax() > 1e-14 * mu_inv.abs() {
        return None;
    }
    let scale = pair.q.gram()[(0, 1)];
    if scale == 0.0 || max_abs_diff(pair.q.gram(), &(&q0 * scale)) > 1e-14 * scale.abs() {
        return None;
    }
    Some(CanonicalReduction {
        g: DMatrix::identity(n, n),
        lambda: 1.0 / scale,
        mu: 1.0 / mu_inv,
        target: CanonicalTarget::TypeI(p),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fraction {
    pub num: i64,
    pub den: i64,
}

impl Fraction {
    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalityHit {
    pub alpha: Fraction,
    pub beta: Fraction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalityReport {
    pub denominator_bound: i64,
    pub beta_range: f64,
    pub resolution: f64,
    pub hits: Vec<RationalityHit>,
    /// "detected" or "not detected at this resolution".
    pub verdict: String,
}

const RATIONALITY_RESOLUTION: f64 = 1e-9;
const BETA_RANGE: f64 = 4.0;

/// Grid search for `(α, β)` making `α·q + β·l²` proportional to a rational
/// form whose entries have denominators at most `denominator_bound`.
///
/// Grid: `α ∈ {0, 1}` and `β = k/d` with `d ≤ bound`, `|β| ≤ 4`. The
/// combination is normalized by its largest entry before the rounding test.
pub fn rationality_scan(pair: &FormPair, denominator_bound: i64) -> RationalityReport {
    let bound = denominator_bound.max(1);
    let ell = pair.l.coeffs();
    let l2 = ell * ell.transpose();
    let mut betas: Vec<Fraction> = Vec::new();
    for den in 1..=bound {
        let kmax = (BETA_RANGE * den as f64).floor() as i64;
        for num in -kmax..=kmax {
            if num_integer::gcd(num, den) == 1 {
                betas.push(Fraction { num, den });
            }
        }
    }
    let mut hits = Vec::new();
    let one = Fraction { num: 1, den: 1 };
    if is_projectively_rational(&l2, bound) {
        hits.push(RationalityHit { alpha: Fraction { num: 0, den: 1 }, beta: one });
    }
    for beta in betas {
        let combo = pair.q.gram() + &l2 * beta.value();
        if is_projectively_rational(&combo, bound) {
            hits.push(RationalityHit { alpha: one, beta });
        }
    }
    let verdict =
        if hits.is_empty() { "not detected at this resolution" } else { "detected" }.to_string();
    RationalityReport {
        denominator_bound: bound,
        beta_range: BETA_RANGE,
        resolution: RATIONALITY_RESOLUTION,
        hits,
        verdict,
    }
}

fn is_projectively_rational(m: &DMatrix<f64>, bound: i64) -> bool {
    let scale = m.amax();
    if scale <= 1e-12 {
        return false;
    }
    let pivot = m.iter().copied().find(|v| v.abs() == scale).unwrap_or(scale);
    m.iter().all(|&v| near_rational(v / pivot, bound))
}

fn near_rational(x: f64, bound: i64) -> bool {
    (1..=bound).any(|den| {
        let d = den as f64;
        ((x * d).round() / d - x).abs() <= RATIONALITY_RESOLUTION
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sl(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        loop {
            let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0f64..1.0));
            let d = m.determinant();
            if d.abs() > 0.05 {
                let mut m = m * d.abs().powf(-1.0 / n as f64);
                if d < 0.0 {
                    m.swap_columns(0, 1);
                }
                return m;
            }
        }
    }

    fn q0_pair(n: usize, p: usize) -> FormPair {
        FormPair::canonical(n, p).unwrap()
    }

    #[test]
    fn signature_examples() {
        let s = signature(&QuadraticForm::from_diagonal(&[1.0, 1.0, 1.0, -1.0])).unwrap();
        assert_eq!(s, Signature { pos: 3, neg: 1 });
        let q0 = QuadraticForm::new(canonical_gram(5, 3).unwrap()).unwrap();
        assert_eq!(signature(&q0).unwrap(), Signature { pos: 3, neg: 2 });
        let a = DMatrix::from_row_slice(2, 2, &[1.3, -0.4, 2.2, 0.7]);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -3.0]));
        let g = QuadraticForm::new(symmetrize(&(&a * d * a.transpose()))).unwrap();
        assert_eq!(signature(&g).unwrap(), Signature { pos: 1, neg: 1 });
    }

    #[test]
    fn degenerate_form_rejected() {
        let q = QuadraticForm::from_diagonal(&[1.0, 0.0, -1.0]);
        assert!(matches!(signature(&q), Err(Error::DegenerateForm { .. })));
    }

    #[test]
    fn kernel_restriction_examples() {
        let pair = q0_pair(5, 3);
        let r = restrict_to_kernel(&pair.q, &pair.l).unwrap();
        assert_eq!(r.dim(), 4);
        assert_eq!(signature(&r).unwrap(), Signature { pos: 3, neg: 1 });

        let q = QuadraticForm::from_diagonal(&[1.0, -1.0]);
        let l = LinearForm::new(vec![1.0, 0.0]).unwrap();
        let r = restrict_to_kernel(&q, &l).unwrap();
        assert_eq!(signature(&r).unwrap(), Signature { pos: 0, neg: 1 });
        assert!((r.gram()[(0, 0)] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn classify_canonical_pairs() {
        assert_eq!(classify_pair(&q0_pair(5, 3)).unwrap(), PairType::TypeI(3));
        // 2x1x2 + x3^2 - x4^2 + 2x5x6 with l = x6: type II
        let mut g = DMatrix::zeros(6, 6);
        g[(0, 1)] = 1.0;
        g[(1, 0)] = 1.0;
        g[(2, 2)] = 1.0;
        g[(3, 3)] = -1.0;
        g[(4, 5)] = 1.0;
        g[(5, 4)] = 1.0;
        let pair = FormPair::new(
            QuadraticForm::new(g).unwrap(),
            LinearForm::new(vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap(),
        )
        .unwrap();
        assert!(matches!(pair.cached_type, PairType::TypeII(_)));
        assert!(reduce_to_canonical(&pair).is_err());
    }

    #[test]
    fn canonical_pair_reduces_to_identity() {
        let pair = q0_pair(5, 3);
        let red = reduce_to_canonical(&pair).unwrap();
        assert_eq!(red.g, DMatrix::identity(5, 5));
        assert_eq!((red.lambda, red.mu), (1.0, 1.0));

        let scaled = FormPair::new(
            pair.q.transform(&DMatrix::identity(5, 5), 2.0),
            pair.l.transform(&DMatrix::identity(5, 5), 3.0),
        )
        .unwrap();
        let red = reduce_to_canonical(&scaled).unwrap();
        assert_eq!(red.g, DMatrix::identity(5, 5));
        assert!((red.lambda - 0.5).abs() < 1e-15 && (red.mu - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn reduction_round_trip_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(n, p) in &[(4usize, 2usize), (5, 3), (6, 3)] {
            let base = q0_pair(n, p);
            for _ in 0..100 {
                let g = random_sl(n, &mut rng);
                let lambda = rng.random_range(0.3..3.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
                let mu = rng.random_range(0.3..3.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
                let pair = base.transform(&g, lambda, mu).unwrap();
                assert_eq!(pair.cached_type, PairType::TypeI(p));
                let red = reduce_to_canonical(&pair).unwrap();
                assert!((red.g.determinant() - 1.0).abs() < 1e-9);
                let res = red.residual(&pair).unwrap();
                assert!(res < 1e-9, "residual {res} for n={n} p={p}");
            }
        }
    }

    #[test]
    fn sylvester_inertia_is_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let n = rng.random_range(2..7);
            let diag: Vec<f64> = (0..n)
                .map(|_| rng.random_range(0.5..2.0) * if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect();
            let q = QuadraticForm::from_diagonal(&diag);
            let a = random_sl(n, &mut rng);
            let moved = q.transform(&a, 1.0);
            assert_eq!(signature(&q).unwrap(), signature(&moved).unwrap());
        }
    }

    #[test]
    fn classification_is_invariant_under_equivalence() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for &(n, p) in &[(4usize, 1usize), (4, 2), (5, 2), (5, 3), (6, 4)] {
            let base = q0_pair(n, p);
            for _ in 0..50 {
                let g = random_sl(n, &mut rng);
                let lambda: f64 = rng.random_range(-2.0..2.0);
                let mu: f64 = rng.random_range(-2.0..2.0);
                if lambda.abs() < 0.1 || mu.abs() < 0.1 {
                    continue;
                }
                let moved = base.transform(&g, lambda, mu).unwrap();
                assert_eq!(moved.cached_type, base.cached_type);
            }
        }
    }

    #[test]
    fn rationality_scan_examples() {
        let pair = q0_pair(5, 3);
        let report = rationality_scan(&pair, 10);
        assert!(report.hits.iter().any(|h| h.alpha.num == 1 && h.beta.num == 0));

        // q0 + sqrt2 l0^2: the rational member sits at beta = -sqrt2, off grid
        let ell = pair.l.coeffs();
        let g = pair.q.gram() + ell * ell.transpose() * 2f64.sqrt();
        let shifted = FormPair::new(QuadraticForm::new(g).unwrap(), pair.l.clone()).unwrap();
        let report = rationality_scan(&shifted, 20);
        assert!(report.hits.iter().all(|h| h.alpha.num == 0));
    }
}
