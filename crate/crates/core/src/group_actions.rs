//! The diagonal flow `a_t`, the compact group `K = SO(p) × SO(q−1)` inside
//! `H = SO(q₀, l₀)`, and orbit lattices `a_t k g₀ ℤⁿ`.
//!
//! Everything lives in the coordinates of the canonical pair
//! `q₀ = 2x₁x₂ + x₃² + ⋯ + x_{p+1}² − x_{p+2}² − ⋯ − x_n²`, `l₀ = x_n`, where
//! `(p, q)` is the signature of `q₀` and `n = p + q`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::canonical_gram;
use crate::lattices::Lattice;
use crate::linalg::{max_abs_diff, orthonormalize};
use crate::stats::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Preserves {
    pub q0: bool,
    pub l0: bool,
    pub euclidean: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub matrix: DMatrix<f64>,
    pub preserves: Preserves,
}

impl GroupElement {
    pub fn identity(n: usize) -> Self {
        Self {
            matrix: DMatrix::identity(n, n),
            preserves: Preserves { q0: true, l0: true, euclidean: true },
        }
    }

    /// Checks each claimed flag against `q₀` of signature `(p, n − p)`.
    pub fn verify(&self, p: usize, tol: f64) -> Result<bool> {
        let m = &self.matrix;
        let n = m.nrows();
        let mut ok = true;
        if self.preserves.q0 {
            let q0 = canonical_gram(n, p)?;
            ok &= max_abs_diff(&(m.transpose() * &q0 * m), &q0) < tol;
        }
        if self.preserves.l0 {
            ok &= (0..n).all(|j| (m[(n - 1, j)] - if j == n - 1 { 1.0 } else { 0.0 }).abs() < tol);
        }
        if self.preserves.euclidean {
            ok &= max_abs_diff(&(m.transpose() * m), &DMatrix::identity(n, n)) < tol;
        }
        Ok(ok)
    }
}

/// `a_t = diag(e^{−t}, e^{t}, 1, …, 1)`.
pub fn a_t(n: usize, t: f64) -> GroupElement {
    let mut m = DMatrix::identity(n, n);
    m[(0, 0)] = (-t).exp();
    m[(1, 1)] = t.exp();
    GroupElement { matrix: m, preserves: Preserves { q0: true, l0: true, euclidean: t == 0.0 } }
}

/// Orthogonal `C` with `Cᵀ Q₀ C = diag(1×p, −1×(q−1), −1)`.
///
/// Diagonal coordinate 0 is `(x₁+x₂)/√2`, coordinate `p` is `(x₁−x₂)/√2`.
pub fn change_of_basis(p: usize, q: usize) -> DMatrix<f64> {
    let n = p + q;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut c = DMatrix::zeros(n, n);
    c[(0, 0)] = s;
    c[(1, 0)] = s;
    c[(0, p)] = s;
    c[(1, p)] = -s;
    for j in 1..p {
        c[(j + 1, j)] = 1.0;
    }
    for j in p + 1..n {
        c[(j, j)] = 1.0;
    }
    c
}

/// Haar-uniform element of `SO(m)`.
pub fn haar_so(m: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    if m == 0 {
        return DMatrix::zeros(0, 0);
    }
    let g = DMatrix::from_fn(m, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut q = orthonormalize(&g);
    if q.determinant() < 0.0 {
        let neg = -q.column(0).into_owned();
        q.set_column(0, &neg);
    }
    q
}

/// Sampler for Haar measure on `K ≅ SO(p) × SO(q−1)` in canonical coordinates.
#[derive(Debug, Clone)]
pub struct HaarSampler {
    pub p: usize,
    pub q: usize,
    pub seed: u64,
    pub stream: u64,
    pub change_of_basis: DMatrix<f64>,
    rng: ChaCha8Rng,
}

impl HaarSampler {
    pub fn new(p: usize, q: usize, seed: u64) -> Result<Self> {
        Self::with_stream(p, q, seed, 0)
    }

    pub fn with_stream(p: usize, q: usize, seed: u64, stream: u64) -> Result<Self> {
        if p < 1 || q < 2 {
            return Err(Error::BadSignature { p, q });
        }
        Ok(Self {
            p,
            q,
            seed,
            stream,
            change_of_basis: change_of_basis(p, q),
            rng: stream_rng(seed, stream),
        })
    }

    pub fn n(&self) -> usize {
        self.p + self.q
    }

    /// Embeds block rotations (diagonal coordinates) into canonical coordinates.
    pub fn assemble(&self, k_plus: &DMatrix<f64>, k_minus: &DMatrix<f64>) -> GroupElement {
        let n = self.n();
        let mut kd = DMatrix::identity(n, n);
        kd.view_mut((0, 0), (self.p, self.p)).copy_from(k_plus);
        kd.view_mut((self.p, self.p), (self.q - 1, self.q - 1)).copy_from(k_minus);
        let c = &self.change_of_basis;
        GroupElement {
            matrix: c * kd * c.transpose(),
            preserves: Preserves { q0: true, l0: true, euclidean: true },
        }
    }

    pub fn sample(&mut self) -> GroupElement {
        let kp = haar_so(self.p, &mut self.rng);
        let km = haar_so(self.q - 1, &mut self.rng);
        self.assemble(&kp, &km)
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// The lattice `a_t · k · g₀ ℤⁿ`.
pub fn orbit_lattice(g0: &DMatrix<f64>, t: f64, k: &GroupElement) -> Result<Lattice> {
    let n = g0.nrows();
    if k.matrix.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, got: k.matrix.nrows() });
    }
    let d = g0.determinant();
    if (d - 1.0).abs() >= 1e-9 {
        return Err(Error::InvalidInput(format!("det g0 = {d}, expected 1")));
    }
    Lattice::new(a_t(n, t).matrix * &k.matrix * g0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_t_examples() {
        assert_eq!(a_t(5, 0.0).matrix, DMatrix::identity(5, 5));
        let a = a_t(5, 1.0);
        assert!(a.verify(3, 1e-12).unwrap());
        let sv = a.matrix.clone().singular_values();
        assert!((sv.max() - 1f64.exp()).abs() < 1e-12);
        let prod = a_t(4, 0.7).matrix * a_t(4, -1.9).matrix;
        assert!(max_abs_diff(&prod, &a_t(4, -1.2).matrix) < 1e-12);
    }

    #[test]
    fn change_of_basis_diagonalizes_q0() {
        for &(p, q) in &[(3usize, 2usize), (2, 2), (4, 3), (1, 3)] {
            let c = change_of_basis(p, q);
            let n = p + q;
            assert!(max_abs_diff(&(c.transpose() * &c), &DMatrix::identity(n, n)) < 1e-12);
            let d = c.transpose() * canonical_gram(n, p).unwrap() * &c;
            for i in 0..n {
                let want = if i < p { 1.0 } else { -1.0 };
                assert!((d[(i, i)] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn samples_lie_in_k() {
        let mut s = HaarSampler::new(3, 2, 42).unwrap();
        for _ in 0..200 {
            let k = s.sample();
            assert!(k.verify(3, 1e-9).unwrap());
            assert!((k.matrix.determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn orbit_lattice_trivial() {
        let l = orbit_lattice(&DMatrix::identity(4, 4), 0.0, &GroupElement::identity(4)).unwrap();
        assert_eq!(l.basis(), &DMatrix::identity(4, 4));
        assert!(orbit_lattice(&(DMatrix::identity(3, 3) * 2.0), 0.0, &GroupElement::identity(3)).is_err());
    }
}
