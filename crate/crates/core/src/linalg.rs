//! Dense floating-point helpers: symmetric eigen-decomposition, Gram–Schmidt,
//! LLL reduction, Fincke–Pohst enumeration and exterior-power norms.
//!
//! Lattice bases are stored column-wise (`ambient × rank`), matching the
//! convention `Λ = B·ℤᵏ`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_integer::Integer;

use crate::error::{Error, Result};

/// Node budget for enumeration before giving up loudly.
pub const NODE_GUARD: f64 = 1e9;

/// Eigenvalues (ascending) and matching orthonormal eigenvectors (columns).
pub fn symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Gram–Schmidt data of a column basis: squared lengths `|b*_i|²` and the
/// lower-triangular coefficients `mu[(i, j)] = <b_i, b*_j> / |b*_j|²`.
#[derive(Debug, Clone)]
pub struct GramSchmidt {
    pub bstar: DMatrix<f64>,
    pub norms_sq: Vec<f64>,
    pub mu: DMatrix<f64>,
}

pub fn gram_schmidt(b: &DMatrix<f64>) -> GramSchmidt {
    let (d, k) = b.shape();
    let mut bstar = DMatrix::zeros(d, k);
    let mut mu = DMatrix::identity(k, k);
    let mut norms_sq = vec![0.0; k];
    for i in 0..k {
        let mut v: DVector<f64> = b.column(i).into_owned();
        // modified Gram–Schmidt: subtract projections one at a time
        for j in 0..i {
            let bj = bstar.column(j);
            let coeff = if norms_sq[j] > 0.0 { bj.dot(&v) / norms_sq[j] } else { 0.0 };
            v -= bj * coeff;
        }
        for j in 0..i {
            let bj = bstar.column(j);
            mu[(i, j)] = if norms_sq[j] > 0.0 { bj.dot(&b.column(i)) / norms_sq[j] } else { 0.0 };
        }
        norms_sq[i] = v.norm_squared();
        bstar.set_column(i, &v);
    }
    GramSchmidt { bstar, norms_sq, mu }
}

/// LLL-reduce the columns of `b` (parameter `delta`, typically 0.99).
///
/// Returns the reduced basis `b·u` together with the unimodular integer
/// transform `u`.
pub fn lll(b: &DMatrix<f64>, delta: f64) -> (DMatrix<f64>, DMatrix<i64>) {
    let k = b.ncols();
    let mut basis = b.clone();
    let mut u = DMatrix::<i64>::identity(k, k);
    if k <= 1 {
        return (basis, u);
    }
    let mut gs = gram_schmidt(&basis);
    let mut idx = 1;
    let mut iterations = 0usize;
    while idx < k {
        iterations += 1;
        if iterations > 100_000 {
            break;
        }
        let mut changed = false;
        for j in (0..idx).rev() {
            let q = gs.mu[(idx, j)].round();
            if q != 0.0 {
                let col_j = basis.column(j).into_owned();
                let mut col = basis.column_mut(idx);
                col -= col_j * q;
                let qi = q as i64;
                for r in 0..k {
                    u[(r, idx)] -= qi * u[(r, j)];
                }
                // keep mu consistent for the remaining j without full recompute
                for l in 0..=j {
                    let m = if l == j { 1.0 } else { gs.mu[(j, l)] };
                    gs.mu[(idx, l)] -= q * m;
                }
                changed = true;
            }
        }
        if changed {
            gs = gram_schmidt(&basis);
        }
        let m = gs.mu[(idx, idx - 1)];
        if gs.norms_sq[idx] >= (delta - m * m) * gs.norms_sq[idx - 1] {
            idx += 1;
        } else {
            basis.swap_columns(idx, idx - 1);
            u.swap_columns(idx, idx - 1);
            gs = gram_schmidt(&basis);
            idx = idx.saturating_sub(1).max(1);
        }
    }
    (basis, u)
}

/// Upper estimate of the Fincke–Pohst tree size: the number of integer
/// points in the Gram–Schmidt bounding box of the ball.
pub fn predicted_nodes(norms_sq: &[f64], radius: f64) -> f64 {
    norms_sq
        .iter()
        .map(|&b| if b > 0.0 { 1.0 + 2.0 * radius / b.sqrt() } else { f64::INFINITY })
        .product()
}

/// Visit every nonzero integer coefficient vector `x` with `|B x| ≤ radius`
/// (plus a relative slack of 1e-12; callers filter exactly). `b` should be
/// LLL-reduced for efficiency. The visitor receives `x` and `|B x|²`.
pub fn enumerate_ball<F>(b: &DMatrix<f64>, radius: f64, mut visit: F) -> Result<()>
where
    F: FnMut(&[i64], f64),
{
    let k = b.ncols();
    let gs = gram_schmidt(b);
    let predicted = predicted_nodes(&gs.norms_sq, radius);
    if predicted > NODE_GUARD {
        return Err(Error::ExplosionGuard { predicted, limit: NODE_GUARD });
    }
    let r2 = radius * radius * (1.0 + 1e-12);
    let mut x = vec![0i64; k];
    // partial[i] = squared length contributed by levels > i
    let mut partial = vec![0.0; k + 1];
    enumerate_level(&gs, k, r2, &mut x, &mut partial, &mut visit);
    Ok(())
}

fn enumerate_level<F>(
    gs: &GramSchmidt,
    level: usize,
    r2: f64,
    x: &mut Vec<i64>,
    partial: &mut Vec<f64>,
    visit: &mut F,
) where
    F: FnMut(&[i64], f64),
{
    if level == 0 {
        if x.iter().any(|&c| c != 0) {
            visit(x, partial[0]);
        }
        return;
    }
    let i = level - 1;
    let k = x.len();
    let mut center = 0.0;
    for j in (i + 1)..k {
        center -= gs.mu[(j, i)] * x[j] as f64;
    }
    let bi = gs.norms_sq[i];
    let remaining = r2 - partial[level];
    if remaining < 0.0 || bi <= 0.0 {
        return;
    }
    let half = (remaining / bi).sqrt();
    let lo = (center - half).ceil() as i64;
    let hi = (center + half).floor() as i64;
    for c in lo..=hi {
        let d = c as f64 - center;
        let contrib = bi * d * d;
        if contrib > remaining {
            continue;
        }
        x[i] = c;
        partial[i] = partial[level] + contrib;
        enumerate_level(gs, i, r2, x, partial, visit);
    }
    x[i] = 0;
}

/// Integer matrix of determinant 1 whose first column is the primitive
/// vector `x`.
pub fn unimodular_completion(x: &[i64]) -> Result<DMatrix<i64>> {
    let k = x.len();
    let g = x.iter().fold(0i64, |acc, &c| acc.gcd(&c));
    if g != 1 {
        return Err(Error::InvalidInput(format!("vector {x:?} is not primitive")));
    }
    // Row operations V with V·x = e_1, tracked together with W = V⁻¹.
    let mut y = x.to_vec();
    let mut w = DMatrix::<i64>::identity(k, k);
    loop {
        let nonzero: Vec<usize> = (0..k).filter(|&i| y[i] != 0).collect();
        if nonzero.len() == 1 {
            break;
        }
        let pivot = *nonzero.iter().min_by_key(|&&i| y[i].abs()).unwrap();
        for &j in &nonzero {
            if j == pivot {
                continue;
            }
            let q = y[j].div_euclid(y[pivot]);
            if q != 0 {
                y[j] -= q * y[pivot];
                // V row j -= q V row pivot  <=>  W col pivot += q W col j
                for r in 0..k {
                    w[(r, pivot)] += q * w[(r, j)];
                }
            }
        }
    }
    let pos = (0..k).find(|&i| y[i] != 0).unwrap();
    if pos != 0 {
        y.swap(0, pos);
        w.swap_columns(0, pos);
    }
    if y[0] < 0 {
        // negate row 0 of V <=> negate column 0 of W
        for r in 0..k {
            w[(r, 0)] = -w[(r, 0)];
        }
    }
    // fix determinant sign using a column other than the first
    if k > 1 && int_det_sign(&w) < 0 {
        for r in 0..k {
            w[(r, 1)] = -w[(r, 1)];
        }
    }
    Ok(w)
}

fn int_det_sign(m: &DMatrix<i64>) -> i32 {
    let d = to_f64(m).determinant();
    if d < 0.0 {
        -1
    } else {
        1
    }
}

pub fn to_f64(m: &DMatrix<i64>) -> DMatrix<f64> {
    m.map(|v| v as f64)
}

/// `‖v₁ ∧ ⋯ ∧ v_k‖` for the columns of `v`, i.e. `sqrt(det(VᵀV))`.
pub fn wedge_norm(v: &DMatrix<f64>) -> f64 {
    if v.ncols() == 0 {
        return 1.0;
    }
    let gs = gram_schmidt(v);
    gs.norms_sq.iter().map(|s| s.sqrt()).product()
}

/// Operator norms of `∧ʲ m` for `j = 1..=n`: products of the `j` largest
/// singular values.
pub fn exterior_operator_norms(m: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 1.0;
    sv.iter()
        .map(|s| {
            acc *= s;
            acc
        })
        .collect()
}

/// Max-norm of the entrywise difference.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square() && max_abs_diff(m, &m.transpose()) <= tol
}

/// Sign-fixed QR orthonormalization: the Q factor of `m` with columns flipped
/// so that R has a positive diagonal.
pub fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols() {
        if r[(j, j)] < 0.0 {
            let neg = -q.column(j).into_owned();
            q.set_column(j, &neg);
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lll_keeps_lattice_and_shortens() {
        let b = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 100.0, 1.0, 0.0, 57.0, 33.0, 1.0]);
        let (red, u) = lll(&b, 0.99);
        assert!(max_abs_diff(&(&b * to_f64(&u)), &red) < 1e-9);
        assert!((to_f64(&u).determinant().abs() - 1.0).abs() < 1e-9);
        for j in 0..3 {
            assert!(red.column(j).norm() < 2.0);
        }
    }

    #[test]
    fn completion_has_given_first_column() {
        for x in [vec![3i64, 5, 7], vec![0, 0, 1], vec![-4, 9], vec![6, 10, 15, 0]] {
            let u = unimodular_completion(&x).unwrap();
            for (i, &c) in x.iter().enumerate() {
                assert_eq!(u[(i, 0)], c);
            }
            assert!((to_f64(&u).determinant() - 1.0).abs() < 1e-9);
        }
        assert!(unimodular_completion(&[2, 4]).is_err());
    }

    #[test]
    fn enumerate_unit_lattice() {
        let b = DMatrix::<f64>::identity(3, 3);
        let mut count = 0;
        enumerate_ball(&b, 1.5, |_, _| count += 1).unwrap();
        assert_eq!(count, 18);
    }

    #[test]
    fn exterior_norms_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 0.5, 2.0]));
        let norms = exterior_operator_norms(&m);
        assert!((norms[0] - 3.0).abs() < 1e-12);
        assert!((norms[1] - 6.0).abs() < 1e-12);
        assert!((norms[2] - 3.0).abs() < 1e-12);
    }
}
