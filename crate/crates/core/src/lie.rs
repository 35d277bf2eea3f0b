//! Exact decomposition of `sl_n` as a module over `h = so(p, q−1)` and the
//! bracket relations between its pieces.
//!
//! Coordinates: `h` acts on the first `n − 1` coordinates and preserves
//! `J = diag(1,…,1, −1,…,−1)` (`p` plus signs, `q − 1` minus signs); the last
//! coordinate is the distinguished one. All arithmetic is over `ℚ`.
//!
//! For finite nonzero `ξ`, `h ⊕ u^ξ` is the orthogonal algebra of
//! `J ⊕ (−1/ξ)·x_n²`. At `ξ = ∞`, `h ⊕ u⁻` preserves the degenerate form
//! `J ⊕ 0`; at `ξ = 0`, `h ⊕ u⁺` preserves `x_n²`.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{q_int, RationalSpan, Q};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    H,
    S,
    UPlus,
    UMinus,
    T,
    Mixed,
}

/// `ξ ∈ ℚ ∪ {∞}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum XiParam {
    Finite(Q),
    Infinity,
}

impl XiParam {
    pub fn neg(&self) -> Self {
        match self {
            XiParam::Finite(x) => XiParam::Finite(-x.clone()),
            XiParam::Infinity => XiParam::Infinity,
        }
    }

    pub fn is_degenerate_end(&self) -> bool {
        match self {
            XiParam::Finite(x) => x.is_zero(),
            XiParam::Infinity => true,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "inf" | "infinity" | "Infinity" | "∞" => Some(XiParam::Infinity),
            other => crate::rational::parse_rational(other).map(XiParam::Finite),
        }
    }
}

impl std::fmt::Display for XiParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            XiParam::Finite(x) => write!(f, "{x}"),
            XiParam::Infinity => write!(f, "Infinity"),
        }
    }
}

/// An `n × n` traceless rational matrix with its component in the decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct LieElement {
    n: usize,
    p: usize,
    entries: Vec<Q>,
    tag: Component,
}

impl LieElement {
    fn raw(n: usize, p: usize, entries: Vec<Q>) -> Self {
        let mut e = Self { n, p, entries, tag: Component::Mixed };
        e.tag = e.classify();
        e
    }

    pub fn zero(n: usize, p: usize) -> Self {
        Self::raw(n, p, vec![Q::zero(); n * n])
    }

    /// `E_ij` (0-indexed); only valid in `sl_n` for `i ≠ j`.
    pub fn unit(n: usize, p: usize, i: usize, j: usize) -> Self {
        let mut v = vec![Q::zero(); n * n];
        v[i * n + j] = Q::one();
        Self::raw(n, p, v)
    }

    pub fn from_entries(n: usize, p: usize, entries: Vec<Q>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: entries.len() });
        }
        let tr: Q = (0..n).map(|i| entries[i * n + i].clone()).sum();
        if !tr.is_zero() {
            return Err(Error::InvalidInput(format!("trace {tr} is not zero")));
        }
        Ok(Self::raw(n, p, entries))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tag(&self) -> Component {
        self.tag
    }

    pub fn entries(&self) -> &[Q] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> &Q {
        &self.entries[i * self.n + j]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    pub fn add(&self, other: &Self) -> Self {
        let e = self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect();
        Self::raw(self.n, self.p, e)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let e = self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect();
        Self::raw(self.n, self.p, e)
    }

    pub fn scale(&self, c: &Q) -> Self {
        Self::raw(self.n, self.p, self.entries.iter().map(|a| a * c).collect())
    }

    fn matmul(&self, other: &Self) -> Vec<Q> {
        let n = self.n;
        let mut out = vec![Q::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = &self.entries[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = &other.entries[k * n + j];
                    if !b.is_zero() {
                        out[i * n + j] += a * b;
                    }
                }
            }
        }
        out
    }

    /// `Xᵀ·D + D·X = 0` for the diagonal form `D`.
    pub fn preserves_diagonal_form(&self, diag: &[Q]) -> bool {
        let n = self.n;
        (0..n).all(|i| {
            (0..n).all(|j| (self.get(j, i) * &diag[j] + &diag[i] * self.get(i, j)).is_zero())
        })
    }

    fn sign(&self, i: usize) -> Q {
        if i < self.p {
            Q::one()
        } else {
            -Q::one()
        }
    }

    /// Components `[h, s, u⁺, u⁻, t]` of the direct-sum projection.
    pub fn project(&self) -> [LieElement; 5] {
        let n = self.n;
        let m = n - 1;
        let zero = || vec![Q::zero(); n * n];
        let (mut h, mut s, mut up, mut um, mut t) = (zero(), zero(), zero(), zero(), zero());
        let a = -self.get(m, m) / q_int(m as i64);
        for i in 0..m {
            up[i * n + m] = self.get(i, m).clone();
            um[m * n + i] = self.get(m, i).clone();
            t[i * n + i] = a.clone();
        }
        t[m * n + m] = self.get(m, m).clone();
        let half = Q::new(1.into(), 2.into());
        for i in 0..m {
            for j in 0..m {
                let mut y = self.get(i, j).clone();
                if i == j {
                    y -= &a;
                }
                let mut yt = self.get(j, i).clone();
                if i == j {
                    yt -= &a;
                }
                // (J Yᵀ J)_ij = J_i J_j Y_ji
                let jyj = self.sign(i) * self.sign(j) * yt;
                h[i * n + j] = (&y - &jyj) * &half;
                s[i * n + j] = (&y + &jyj) * &half;
            }
        }
        let mk = |e| LieElement { n, p: self.p, entries: e, tag: Component::Mixed };
        let mut out = [mk(h), mk(s), mk(up), mk(um), mk(t)];
        let tags = [Component::H, Component::S, Component::UPlus, Component::UMinus, Component::T];
        for (e, tag) in out.iter_mut().zip(tags) {
            e.tag = tag;
        }
        out
    }

    fn classify(&self) -> Component {
        if self.n < 2 || self.is_zero() {
            return Component::H;
        }
        let parts = self.project();
        let nonzero: Vec<_> = parts.iter().filter(|c| !c.is_zero()).collect();
        if nonzero.len() == 1 {
            nonzero[0].tag
        } else {
            Component::Mixed
        }
    }

    /// Entries as `"a/b"` strings, row by row.
    pub fn to_strings(&self) -> Vec<Vec<String>> {
        self.entries.chunks(self.n).map(|r| r.iter().map(|x| x.to_string()).collect()).collect()
    }
}

/// Exact commutator `XY − YX`.
pub fn bracket(x: &LieElement, y: &LieElement) -> Result<LieElement> {
    if x.n != y.n {
        return Err(Error::DimensionMismatch { expected: x.n, got: y.n });
    }
    if x.p != y.p {
        return Err(Error::InvalidInput("elements built for different signatures".into()));
    }
    let a = x.matmul(y);
    let b = y.matmul(x);
    Ok(LieElement::raw(x.n, x.p, a.into_iter().zip(b).map(|(a, b)| a - b).collect()))
}

/// `Φ: u⁺ → u⁻`, `E_in ↦ ±E_ni` with the sign of the `i`-th diagonal entry of `J`.
pub fn phi_map(v: &LieElement) -> Result<LieElement> {
    if v.tag != Component::UPlus && !v.is_zero() {
        return Err(Error::WrongComponent("u_plus"));
    }
    let n = v.n;
    let m = n - 1;
    let mut e = vec![Q::zero(); n * n];
    for i in 0..m {
        e[m * n + i] = v.sign(i) * v.get(i, m);
    }
    Ok(LieElement::raw(n, v.p, e))
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub p: usize,
    pub q: usize,
    pub h: Vec<LieElement>,
    pub s: Vec<LieElement>,
    pub u_plus: Vec<LieElement>,
    pub u_minus: Vec<LieElement>,
    pub t: Vec<LieElement>,
}

pub fn build_decomposition(p: usize, q: usize) -> Result<Decomposition> {
    if p < 1 || q < 2 || p + q < 4 {
        return Err(Error::BadSignature { p, q });
    }
    let n = p + q;
    let m = n - 1;
    let sgn = |i: usize| if i < p { 1i64 } else { -1 };
    let pair = |i: usize, j: usize, eps: i64| {
        LieElement::unit(n, p, i, j).add(&LieElement::unit(n, p, j, i).scale(&q_int(eps)))
    };
    let mut h = Vec::new();
    let mut s = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let eps = sgn(i) * sgn(j);
            h.push(pair(i, j, -eps));
            s.push(pair(i, j, eps));
        }
    }
    for i in 0..m - 1 {
        s.push(LieElement::unit(n, p, i, i).sub(&LieElement::unit(n, p, i + 1, i + 1)));
    }
    let u_plus = (0..m).map(|i| LieElement::unit(n, p, i, m)).collect();
    let u_minus = (0..m).map(|i| LieElement::unit(n, p, m, i)).collect();
    let mut tv = vec![Q::zero(); n * n];
    for i in 0..m {
        tv[i * n + i] = Q::one();
    }
    tv[m * n + m] = q_int(-(m as i64));
    let t = vec![LieElement::raw(n, p, tv)];
    Ok(Decomposition { p, q, h, s, u_plus, u_minus, t })
}

impl Decomposition {
    pub fn n(&self) -> usize {
        self.p + self.q
    }

    pub fn dims(&self) -> [usize; 5] {
        [self.h.len(), self.s.len(), self.u_plus.len(), self.u_minus.len(), self.t.len()]
    }

    pub fn component(&self, c: Component) -> &[LieElement] {
        match c {
            Component::H => &self.h,
            Component::S => &self.s,
            Component::UPlus => &self.u_plus,
            Component::UMinus => &self.u_minus,
            Component::T => &self.t,
            Component::Mixed => &[],
        }
    }

    /// Basis of `u^ξ = (Id + ξΦ)u⁺`; `u^∞ = u⁻`.
    pub fn u_xi_basis(&self, xi: &XiParam) -> Vec<LieElement> {
        match xi {
            XiParam::Infinity => self.u_minus.clone(),
            XiParam::Finite(x) => self
                .u_plus
                .iter()
                .map(|e| e.add(&phi_map(e).expect("u_plus basis").scale(x)))
                .collect(),
        }
    }

    /// `J` extended by `c` in the last slot.
    pub fn diagonal_form(&self, last: Q) -> Vec<Q> {
        let n = self.n();
        let mut d: Vec<Q> = (0..n - 1).map(|i| if i < self.p { Q::one() } else { -Q::one() }).collect();
        d.push(last);
        d
    }

    /// Diagonal form preserved by `h ⊕ u^ξ`: `J ⊕ (−1/ξ)` up to scale.
    pub fn preserved_form(&self, xi: &XiParam) -> Vec<Q> {
        match xi {
            XiParam::Infinity => self.diagonal_form(Q::zero()),
            XiParam::Finite(x) if x.is_zero() => {
                let mut d = vec![Q::zero(); self.n()];
                d[self.n() - 1] = Q::one();
                d
            }
            XiParam::Finite(x) => self.diagonal_form(-Q::one() / x),
        }
    }
}

fn flatten(basis: &[LieElement]) -> RationalSpan {
    let dim = basis.first().map(|e| e.n * e.n).unwrap_or(0);
    RationalSpan::from_vectors(dim, basis.iter().map(|e| e.entries()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketWitness {
    pub left: Vec<Vec<String>>,
    pub right: Vec<Vec<String>>,
    pub bracket: Vec<Vec<String>>,
}

impl BracketWitness {
    fn new(x: &LieElement, y: &LieElement, b: &LieElement) -> Self {
        Self { left: x.to_strings(), right: y.to_strings(), bracket: b.to_strings() }
    }
}

/// First bracket of basis elements leaving the span, if any.
pub fn closure_witness(basis: &[LieElement]) -> Option<BracketWitness> {
    let span = flatten(basis);
    for (i, x) in basis.iter().enumerate() {
        for y in &basis[i + 1..] {
            let b = bracket(x, y).expect("same algebra");
            if !span.contains(b.entries()) {
                return Some(BracketWitness::new(x, y, &b));
            }
        }
    }
    None
}

/// First `[x, y]` with `x ∈ a`, `y ∈ b` outside `span(target)`, if any.
pub fn inclusion_witness(
    a: &[LieElement],
    b: &[LieElement],
    target: &[LieElement],
) -> Option<BracketWitness> {
    let n = a.first().or(b.first()).map(|e| e.n).unwrap_or(0);
    let span = RationalSpan::from_vectors(n * n, target.iter().map(|e| e.entries()));
    for x in a {
        for y in b {
            let br = bracket(x, y).expect("same algebra");
            if !span.contains(br.entries()) {
                return Some(BracketWitness::new(x, y, &br));
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationCheck {
    pub relation: String,
    pub xi: Option<String>,
    /// Whether the relation holds.
    pub holds: bool,
    /// Whether it is supposed to hold.
    pub expected: bool,
    /// Recorded for reference only; excluded from the verdict.
    pub informational: bool,
    pub witness: Option<BracketWitness>,
}

impl RelationCheck {
    pub fn passed(&self) -> bool {
        self.informational || self.holds == self.expected
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Report {
    pub p: usize,
    pub q: usize,
    pub dims: [usize; 5],
    pub checks: Vec<RelationCheck>,
    pub all_passed: bool,
}

fn concat(parts: &[&[LieElement]]) -> Vec<LieElement> {
    parts.iter().flat_map(|p| p.iter().cloned()).collect()
}

fn check(relation: &str, xi: Option<&XiParam>, expected: bool, witness: Option<BracketWitness>) -> RelationCheck {
    RelationCheck {
        relation: relation.to_string(),
        xi: xi.map(|x| x.to_string()),
        holds: witness.is_none(),
        expected,
        informational: false,
        witness,
    }
}

fn form_witness(basis: &[LieElement], form: &[Q]) -> Option<BracketWitness> {
    basis
        .iter()
        .find(|e| !e.preserves_diagonal_form(form))
        .map(|e| BracketWitness { left: e.to_strings(), right: Vec::new(), bracket: Vec::new() })
}

pub fn check_table1_relations(p: usize, q: usize, xi_list: &[XiParam]) -> Result<Table1Report> {
    let d = build_decomposition(p, q)?;
    let n = d.n();
    let (h, s, up, um, t) = (&d.h[..], &d.s[..], &d.u_plus[..], &d.u_minus[..], &d.t[..]);
    let sl_n1 = concat(&[h, s]);
    let all = concat(&[h, s, up, um, t]);
    let candidates: Vec<(&str, Vec<LieElement>)> = vec![
        ("h", h.to_vec()),
        ("h+t", concat(&[h, t])),
        ("h+u+", concat(&[h, up])),
        ("h+u-", concat(&[h, um])),
        ("h+u++t", concat(&[h, up, t])),
        ("h+u-+t", concat(&[h, um, t])),
        ("sl_{n-1}", sl_n1.clone()),
        ("sl_{n-1}+u+", concat(&[&sl_n1, up])),
        ("sl_{n-1}+u-", concat(&[&sl_n1, um])),
        ("sl_{n-1}+t", concat(&[&sl_n1, t])),
        ("sl_{n-1}+u++t", concat(&[&sl_n1, up, t])),
        ("sl_{n-1}+u-+t", concat(&[&sl_n1, um, t])),
        ("sl_n", all.clone()),
    ];
    let mut checks = Vec::new();
    for (name, basis) in &candidates {
        checks.push(check(&format!("closed({name})"), None, true, closure_witness(basis)));
    }
    let mut spans = check("direct sum spans sl_n", None, true, None);
    spans.holds = flatten(&all).rank() == n * n - 1;
    checks.push(spans);

    for xi in xi_list {
        let u = d.u_xi_basis(xi);
        let u_neg = d.u_xi_basis(&xi.neg());
        let hu = concat(&[h, &u]);
        let end = xi.is_degenerate_end();
        let x = Some(xi);

        checks.push(check("closed(h+u^xi)", x, true, closure_witness(&hu)));
        let form = d.preserved_form(xi);
        checks.push(check("h+u^xi preserves J+(-1/xi)x_n^2", x, true, form_witness(&hu, &form)));
        if let (false, XiParam::Finite(v)) = (end, xi) {
            let mut dim = check("dim(h+u^xi) = dim so(n)", x, true, None);
            dim.holds = hu.len() == n * (n - 1) / 2 && flatten(&hu).rank() == hu.len();
            checks.push(dim);
            let literal = d.diagonal_form(v.clone());
            let mut lit = check("h+u^xi preserves J+xi*x_n^2", x, false, form_witness(&hu, &literal));
            lit.informational = true;
            checks.push(lit);
        }
        checks.push(check("[t,u^xi] in u^-xi", x, true, inclusion_witness(t, &u, &u_neg)));
        checks.push(check("[s,u^xi] in u^-xi", x, true, inclusion_witness(s, &u, &u_neg)));
        checks.push(check("[h,u^xi] in u^xi", x, true, inclusion_witness(h, &u, &u)));
        checks.push(check("closed(h+u^xi+t)", x, end, closure_witness(&concat(&[h, &u, t]))));
        checks.push(check("closed(sl_{n-1}+u^xi)", x, end, closure_witness(&concat(&[&sl_n1, &u]))));
        checks.push(check("closed(u^xi)", x, end, closure_witness(&u)));
    }
    let all_passed = checks.iter().all(RelationCheck::passed);
    Ok(Table1Report { p, q, dims: d.dims(), checks, all_passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q_frac;

    fn xi(num: i64, den: i64) -> XiParam {
        XiParam::Finite(q_frac(num, den))
    }

    #[test]
    fn dimensions() {
        assert_eq!(build_decomposition(3, 2).unwrap().dims(), [6, 9, 4, 4, 1]);
        assert_eq!(build_decomposition(2, 2).unwrap().dims(), [3, 5, 3, 3, 1]);
        assert!(matches!(build_decomposition(1, 2), Err(Error::BadSignature { .. })));
        let d = build_decomposition(2, 2).unwrap();
        let t = &d.t[0];
        let diag: Vec<Q> = (0..4).map(|i| t.get(i, i).clone()).collect();
        assert_eq!(diag, vec![q_int(1), q_int(1), q_int(1), q_int(-3)]);
    }

    #[test]
    fn basis_tags_match_components() {
        let d = build_decomposition(3, 2).unwrap();
        for c in [Component::H, Component::S, Component::UPlus, Component::UMinus, Component::T] {
            assert!(d.component(c).iter().all(|e| e.tag() == c), "{c:?}");
        }
        let j = d.diagonal_form(Q::zero());
        for e in &d.h {
            assert!(e.preserves_diagonal_form(&j));
            assert!(e.get(4, 4).is_zero());
        }
    }

    #[test]
    fn bracket_examples() {
        let (n, p) = (5, 3);
        let x = LieElement::unit(n, p, 0, 1);
        assert!(bracket(&x, &x).unwrap().is_zero());
        let y = LieElement::unit(n, p, 1, 0);
        let expected = LieElement::unit(n, p, 0, 0).sub(&LieElement::unit(n, p, 1, 1));
        assert_eq!(bracket(&x, &y).unwrap(), expected);
        let d = build_decomposition(3, 2).unwrap();
        let e1n = LieElement::unit(n, p, 0, n - 1);
        assert_eq!(bracket(&d.t[0], &e1n).unwrap(), e1n.scale(&q_int(n as i64)));
        let other = LieElement::zero(4, 2);
        assert!(matches!(bracket(&x, &other), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn phi_examples() {
        let (n, p) = (5, 3);
        let e = |i, j| LieElement::unit(n, p, i, j);
        assert_eq!(phi_map(&e(0, 4)).unwrap(), e(4, 0));
        assert_eq!(phi_map(&e(3, 4)).unwrap(), e(4, 3).scale(&q_int(-1)));
        let v = e(0, 4).scale(&q_int(2)).add(&e(3, 4).scale(&q_int(7)));
        let w = e(4, 0).scale(&q_int(2)).sub(&e(4, 3).scale(&q_int(7)));
        assert_eq!(phi_map(&v).unwrap(), w);
        assert!(matches!(phi_map(&e(4, 0)), Err(Error::WrongComponent(_))));
    }

    #[test]
    fn u_xi_examples() {
        let d = build_decomposition(2, 2).unwrap();
        assert_eq!(d.u_xi_basis(&xi(0, 1)), d.u_plus);
        assert_eq!(d.u_xi_basis(&XiParam::Infinity), d.u_minus);
        let first = &d.u_xi_basis(&xi(1, 1))[0];
        assert_eq!(*first, LieElement::unit(4, 2, 0, 3).add(&LieElement::unit(4, 2, 3, 0)));
    }

    #[test]
    fn table_relations_hold() {
        let list = [xi(1, 1), xi(-2, 1), xi(1, 3), xi(0, 1), XiParam::Infinity];
        let report = check_table1_relations(3, 2, &list).unwrap();
        for c in &report.checks {
            assert!(c.passed(), "{} at {:?}", c.relation, c.xi);
        }
        assert!(report.all_passed);
        let literal: Vec<_> = report
            .checks
            .iter()
            .filter(|c| c.relation.contains("xi*x_n^2"))
            .collect();
        assert!(!literal.is_empty() && literal.iter().all(|c| !c.holds));
    }

    #[test]
    fn so_q1_in_signature_22() {
        let d = build_decomposition(2, 2).unwrap();
        let hu = concat(&[&d.h, &d.u_xi_basis(&xi(1, 1))]);
        assert_eq!(hu.len(), 6);
        assert!(closure_witness(&hu).is_none());
    }

    #[test]
    fn dimension_identity() {
        for n in 4..=8usize {
            let total = (n - 1) * (n - 2) / 2 + n * (n - 1) / 2 - 1 + 2 * (n - 1) + 1;
            assert_eq!(total, n * n - 1);
            let d = build_decomposition(2, n - 2).unwrap();
            assert_eq!(d.dims().iter().sum::<usize>(), n * n - 1);
        }
    }
}
