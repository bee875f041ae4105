//! Exact dense linear algebra over the integers and rationals.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type IntMatrix = Vec<Vec<BigInt>>;
pub type RatMatrix = Vec<Vec<BigRational>>;

pub fn to_rational_matrix(m: &[Vec<BigInt>]) -> RatMatrix {
    m.iter()
        .map(|row| row.iter().cloned().map(BigRational::from_integer).collect())
        .collect()
}

pub fn identity(n: usize) -> IntMatrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect()
}

pub fn transpose<T: Clone>(m: &[Vec<T>]) -> Vec<Vec<T>> {
    if m.is_empty() {
        return Vec::new();
    }
    (0..m[0].len()).map(|j| m.iter().map(|row| row[j].clone()).collect()).collect()
}

pub fn mat_mul(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> IntMatrix {
    let inner = b.len();
    let cols = if inner == 0 { 0 } else { b[0].len() };
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).map(|k| &row[k] * &b[k][j]).sum())
                .collect()
        })
        .collect()
}

pub fn mat_vec(a: &[Vec<BigInt>], v: &[BigInt]) -> Vec<BigInt> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn rat_mat_vec(a: &[Vec<BigRational>], v: &[BigRational]) -> Vec<BigRational> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

/// Determinant by fraction-free (Bareiss) elimination.
pub fn determinant(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a: IntMatrix = m.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

/// Diagonal entries of a congruence diagonalization `P^T M P = D` of a
/// symmetric rational matrix, computed by symmetric Gaussian elimination.
pub fn congruence_diagonal(m: &[Vec<BigRational>]) -> Vec<BigRational> {
    let n = m.len();
    let mut a: RatMatrix = m.to_vec();
    let mut diag = Vec::with_capacity(n);
    for k in 0..n {
        if a[k][k].is_zero() {
            if let Some(i) = (k + 1..n).find(|&i| !a[i][i].is_zero()) {
                a.swap(i, k);
                for row in a.iter_mut() {
                    row.swap(i, k);
                }
            } else if let Some(j) = (k + 1..n).find(|&j| !a[k][j].is_zero()) {
                // a_kk = 0 = a_jj, a_kj != 0: replace e_k by e_k + e_j.
                for c in 0..n {
                    let v = a[j][c].clone();
                    a[k][c] += v;
                }
                for r in 0..n {
                    let v = a[r][j].clone();
                    a[r][k] += v;
                }
            }
        }
        let pivot = a[k][k].clone();
        diag.push(pivot.clone());
        if pivot.is_zero() {
            // Row k is zero beyond this point: e_k spans part of the radical.
            continue;
        }
        for i in k + 1..n {
            if a[i][k].is_zero() {
                continue;
            }
            let f = &a[i][k] / &pivot;
            for j in k..n {
                let v = &f * &a[k][j];
                a[i][j] -= v;
            }
            for r in 0..n {
                let v = &f * &a[r][k];
                a[r][i] -= v;
            }
        }
    }
    diag
}

/// Solves `A x = b` for square nonsingular rational `A`.
pub fn solve(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = a.len();
    let mut m: RatMatrix = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    for k in 0..n {
        let p = (k..n).find(|&i| !m[i][k].is_zero())?;
        m.swap(p, k);
        let pivot = m[k][k].clone();
        for j in k..=n {
            m[k][j] = &m[k][j] / &pivot;
        }
        for i in 0..n {
            if i != k && !m[i][k].is_zero() {
                let f = m[i][k].clone();
                for j in k..=n {
                    let v = &f * &m[k][j];
                    m[i][j] -= v;
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n].clone()).collect())
}

pub fn inverse(a: &[Vec<BigRational>]) -> Option<RatMatrix> {
    let n = a.len();
    let cols = (0..n)
        .map(|j| {
            let e: Vec<BigRational> = (0..n)
                .map(|i| if i == j { BigRational::one() } else { BigRational::zero() })
                .collect();
            solve(a, &e)
        })
        .collect::<Option<Vec<_>>>()?;
    Some(transpose(&cols))
}

/// Rank of a rational matrix.
pub fn rank(m: &[Vec<BigRational>]) -> usize {
    let mut a: RatMatrix = m.to_vec();
    let rows = a.len();
    if rows == 0 {
        return 0;
    }
    let cols = a[0].len();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(p, r);
        for i in r + 1..rows {
            if !a[i][c].is_zero() {
                let f = &a[i][c] / &a[r][c];
                for j in c..cols {
                    let v = &f * &a[r][j];
                    a[i][j] -= v;
                }
            }
        }
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

/// A basis (as columns, returned as a list of vectors) of the integer kernel
/// `{x in Z^n : A x = 0}` for an integer matrix `A` with `n` columns.
///
/// Column operations bring `A` to column echelon form while tracking a
/// unimodular `U`; the columns of `U` whose image vanishes span the kernel
/// as a saturated sublattice.
pub fn integer_kernel(rows: &[Vec<BigInt>], n: usize) -> Vec<Vec<BigInt>> {
    let mut a: IntMatrix = rows.to_vec();
    let mut u = identity(n);
    let mut pivot = 0;
    for r in 0..a.len() {
        if pivot == n {
            break;
        }
        // Euclid on the columns pivot..n restricted to row r.
        loop {
            let nz: Vec<usize> = (pivot..n).filter(|&c| !a[r][c].is_zero()).collect();
            if nz.is_empty() {
                break;
            }
            let m = *nz.iter().min_by_key(|&&c| a[r][c].abs()).unwrap();
            swap_cols(&mut a, &mut u, pivot, m);
            if nz.len() == 1 {
                pivot += 1;
                break;
            }
            for c in pivot + 1..n {
                if a[r][c].is_zero() {
                    continue;
                }
                let q = a[r][c].div_floor(&a[r][pivot]);
                add_col_multiple(&mut a, &mut u, c, pivot, &(-q));
            }
        }
    }
    let mut basis: Vec<Vec<BigInt>> = (pivot..n).map(|c| u.iter().map(|row| row[c].clone()).collect()).collect();
    size_reduce(&mut basis);
    basis
}

fn swap_cols(a: &mut IntMatrix, u: &mut IntMatrix, i: usize, j: usize) {
    if i == j {
        return;
    }
    for row in a.iter_mut().chain(u.iter_mut()) {
        row.swap(i, j);
    }
}

// col[dst] += k * col[src]
fn add_col_multiple(a: &mut IntMatrix, u: &mut IntMatrix, dst: usize, src: usize, k: &BigInt) {
    for row in a.iter_mut().chain(u.iter_mut()) {
        let v = &row[src] * k;
        row[dst] += v;
    }
}

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Greedy pairwise size reduction in the Euclidean norm. Keeps the span and
/// the lattice generated, shortens entries so later enumerations stay cheap.
pub fn size_reduce(basis: &mut [Vec<BigInt>]) {
    let k = basis.len();
    loop {
        let mut changed = false;
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                let nj = dot(&basis[j], &basis[j]);
                if nj.is_zero() {
                    continue;
                }
                let d = dot(&basis[i], &basis[j]);
                // nearest integer to d / nj
                let q = (BigInt::from(2) * &d + &nj).div_floor(&(BigInt::from(2) * &nj));
                if q.is_zero() {
                    continue;
                }
                let bj = basis[j].clone();
                let before = dot(&basis[i], &basis[i]);
                let cand: Vec<BigInt> = basis[i].iter().zip(&bj).map(|(x, y)| x - &q * y).collect();
                if dot(&cand, &cand) < before {
                    basis[i] = cand;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::int;

    fn m(rows: &[&[i64]]) -> IntMatrix {
        rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect()
    }

    #[test]
    fn bareiss_determinant() {
        assert_eq!(determinant(&m(&[&[0, 1], &[1, 0]])), int(-1));
        assert_eq!(determinant(&m(&[&[2, -1, 0], &[-1, 2, -1], &[0, -1, 2]])), int(4));
        assert_eq!(determinant(&m(&[&[1, 2], &[2, 4]])), int(0));
        assert_eq!(determinant(&m(&[&[0, 0, 1], &[0, 1, 0], &[1, 0, 0]])), int(-1));
    }

    #[test]
    fn diagonalization_of_hyperbolic_plane() {
        let d = congruence_diagonal(&to_rational_matrix(&m(&[&[0, 1], &[1, 0]])));
        let pos = d.iter().filter(|x| x.is_positive()).count();
        let neg = d.iter().filter(|x| x.is_negative()).count();
        assert_eq!((pos, neg), (1, 1));
    }

    #[test]
    fn kernel_of_single_form() {
        let k = integer_kernel(&m(&[&[2, 3, 0]]), 3);
        assert_eq!(k.len(), 2);
        for v in &k {
            assert_eq!(int(2) * &v[0] + int(3) * &v[1], int(0));
        }
        // saturation: the lattice spanned contains (3,-2,0) and (0,0,1) with index 1
        let det = determinant(&vec![
            vec![k[0][0].clone(), k[1][0].clone()],
            vec![k[0][2].clone(), k[1][2].clone()],
        ]);
        assert_eq!(det.abs(), int(3));
    }

    #[test]
    fn kernel_of_full_rank_is_empty() {
        assert!(integer_kernel(&m(&[&[1, 0], &[0, 1]]), 2).is_empty());
        assert_eq!(integer_kernel(&[], 2).len(), 2);
    }

    #[test]
    fn inverse_round_trip() {
        let a = to_rational_matrix(&m(&[&[2, 1], &[1, -1]]));
        let inv = inverse(&a).unwrap();
        let prod: Vec<Vec<BigRational>> = (0..2)
            .map(|i| (0..2).map(|j| (0..2).map(|k| &a[i][k] * &inv[k][j]).sum()).collect())
            .collect();
        assert_eq!(prod[0][0], BigRational::one());
        assert_eq!(prod[0][1], BigRational::zero());
        assert!(inverse(&to_rational_matrix(&m(&[&[1, 2], &[2, 4]]))).is_none());
    }
}
