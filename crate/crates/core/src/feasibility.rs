//! Exact feasibility of open regions of the positive cone.
//!
//! A region is given by linear equalities `q(e_i, x) = 0` and strict
//! inequalities `q(o_j, x) > 0`, intersected with the component of
//! `{q(x,x) > 0}` containing a reference point. Everything is homogeneous, so
//! the problem is decided in the affine chart through the projection `c` of
//! the reference onto the equality subspace: points are `c + u` with `u` in
//! the negative-definite complement `U = E^perp ∩ c^perp`, and positivity
//! becomes the open ball `-q(u,u) < q(c,c)`.
//!
//! The open polyhedron `Q = {u : q(o_j, c + u) > 0}` meets that ball iff `Q`
//! is non-empty and the closest point of its closure (in the metric
//! `N(u) = -q(u,u)`) lies strictly inside the ball. Non-emptiness is an exact
//! linear program; the closest point is found by enumerating active sets.
//! A witness is then produced by moving from the closest point towards a
//! strictly feasible point until the ball condition holds.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::arith::rat_from_int;
use crate::error::Result;
use crate::lattice::Lattice;
use crate::linalg::{self, RatMatrix};
use crate::vector::{LatticeVector, RationalVector};

/// Searches for a point `x` with `q(e, x) = 0` for every `e` in `equalities`,
/// `q(o, x) > 0` for every `o` in `inequalities`, and `x` in the positive
/// cone of `reference`. Returns the primitive integral vector on the ray of
/// such a point, or `None` when the region is empty.
pub fn interior_point(
    lattice: &Lattice,
    reference: &RationalVector,
    equalities: &[LatticeVector],
    inequalities: &[LatticeVector],
) -> Result<Option<LatticeVector>> {
    lattice.check_reference(reference)?;
    for v in equalities.iter().chain(inequalities) {
        lattice.check_rank(v.len())?;
    }
    let Some(center) = project_to_equalities(lattice, reference, equalities) else {
        return Ok(None);
    };
    let satisfied = |x: &RationalVector| inequalities.iter().all(|o| lattice.q_mixed(o, x).is_positive());
    if satisfied(&center) {
        return Ok(Some(center.ray_primitive()));
    }

    let mut normals = equalities.to_vec();
    normals.push(center.ray_primitive());
    let chart = lattice.restrict_to_orthogonal(&normals)?.embedding;
    if chart.is_empty() {
        return Ok(None);
    }
    let m = chart.len();
    // N(y) = y^T metric y with metric = -(gram restricted to the chart)
    let metric: RatMatrix = (0..m)
        .map(|i| (0..m).map(|j| rat_from_int(&-lattice.q(&chart[i], &chart[j]))).collect())
        .collect();
    let radius = lattice.q_rat(&center, &center);
    // q(o_j, c + sum y_i u_i) = b_j + a_j . y
    let b: Vec<BigRational> = inequalities.iter().map(|o| lattice.q_mixed(o, &center)).collect();
    let a: Vec<Vec<BigRational>> = inequalities
        .iter()
        .map(|o| chart.iter().map(|u| rat_from_int(&lattice.q(o, u))).collect())
        .collect();

    let Some(strict) = strictly_feasible(&a, &b) else {
        return Ok(None);
    };
    let Some(closest) = closest_point(&metric, &a, &b) else {
        return Ok(None);
    };
    if norm(&metric, &closest) >= radius {
        return Ok(None);
    }
    // closest + eps (strict - closest) is strictly feasible for every eps in (0, 1]
    let step: Vec<BigRational> = strict.iter().zip(&closest).map(|(s, c)| s - c).collect();
    let mut eps = BigRational::one();
    loop {
        let y: Vec<BigRational> = closest.iter().zip(&step).map(|(c, d)| c + d * &eps).collect();
        if norm(&metric, &y) < radius {
            let mut x = center.coords().to_vec();
            for (yi, u) in y.iter().zip(&chart) {
                for (xk, uk) in x.iter_mut().zip(u.coords()) {
                    *xk += yi * rat_from_int(uk);
                }
            }
            let x = RationalVector::new(x);
            debug_assert!(satisfied(&x));
            debug_assert!(lattice.in_positive_cone(&x, reference));
            return Ok(Some(x.ray_primitive()));
        }
        eps /= BigRational::from_integer(BigInt::from(2));
    }
}

/// Orthogonal projection of `reference` onto `{x : q(e,x) = 0 for all e}`.
/// `None` unless the span of `equalities` is negative definite, which is
/// exactly when the subspace meets the positive cone.
fn project_to_equalities(
    lattice: &Lattice,
    reference: &RationalVector,
    equalities: &[LatticeVector],
) -> Option<RationalVector> {
    if equalities.is_empty() {
        return Some(reference.clone());
    }
    let k = equalities.len();
    let gram: RatMatrix = (0..k)
        .map(|i| (0..k).map(|j| rat_from_int(&lattice.q(&equalities[i], &equalities[j]))).collect())
        .collect();
    let diag = linalg::congruence_diagonal(&gram);
    if !diag.iter().all(|d| d.is_negative()) {
        return None;
    }
    let rhs: Vec<BigRational> = equalities.iter().map(|e| lattice.q_mixed(e, reference)).collect();
    let lambda = linalg::solve(&gram, &rhs)?;
    let mut c = reference.coords().to_vec();
    for (l, e) in lambda.iter().zip(equalities) {
        for (ci, ei) in c.iter_mut().zip(e.coords()) {
            *ci -= l * rat_from_int(ei);
        }
    }
    Some(RationalVector::new(c))
}

fn norm(metric: &RatMatrix, y: &[BigRational]) -> BigRational {
    let my = linalg::rat_mat_vec(metric, y);
    y.iter().zip(&my).map(|(a, b)| a * b).sum()
}

/// A point `y` with `b_j + a_j . y > 0` for all `j`, if one exists.
///
/// Solved as the homogenized program
/// `max t  s.t.  t <= alpha b_j + a_j . u,  t <= alpha <= 1,  |u_i| <= 1,  t <= 1`;
/// the region is non-empty iff the optimum is positive, and then `u / alpha`
/// is strictly feasible.
fn strictly_feasible(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let m = a.first().map_or(0, Vec::len);
    if b.iter().all(|x| x.is_positive()) {
        return Some(vec![BigRational::zero(); m]);
    }
    // variables: t, alpha, u+ (m), u- (m)
    let nv = 2 + 2 * m;
    let zero = BigRational::zero;
    let one = BigRational::one;
    let mut rows: Vec<Vec<BigRational>> = Vec::new();
    let mut rhs: Vec<BigRational> = Vec::new();
    for (aj, bj) in a.iter().zip(b) {
        let mut row = vec![zero(); nv];
        row[0] = one();
        row[1] = -bj.clone();
        for i in 0..m {
            row[2 + i] = -aj[i].clone();
            row[2 + m + i] = aj[i].clone();
        }
        rows.push(row);
        rhs.push(zero());
    }
    let mut unit = |idx: &[(usize, i64)], bound: i64| {
        let mut row = vec![zero(); nv];
        for &(i, c) in idx {
            row[i] = BigRational::from_integer(BigInt::from(c));
        }
        rows.push(row);
        rhs.push(BigRational::from_integer(BigInt::from(bound)));
    };
    unit(&[(0, 1), (1, -1)], 0);
    unit(&[(1, 1)], 1);
    unit(&[(0, 1)], 1);
    for i in 0..2 * m {
        unit(&[(2 + i, 1)], 1);
    }
    let mut objective = vec![zero(); nv];
    objective[0] = one();
    let x = simplex_max(&rows, &rhs, &objective);
    if !x[0].is_positive() {
        return None;
    }
    let alpha = &x[1];
    Some((0..m).map(|i| (&x[2 + i] - &x[2 + m + i]) / alpha).collect())
}

/// `max c.x` subject to `A x <= b`, `x >= 0`, with `b >= 0` and a bounded
/// optimum. Dense tableau, Bland's rule (terminates without cycling).
fn simplex_max(a: &[Vec<BigRational>], b: &[BigRational], c: &[BigRational]) -> Vec<BigRational> {
    let rows = a.len();
    let nv = c.len();
    let width = nv + rows + 1;
    let mut t: Vec<Vec<BigRational>> = Vec::with_capacity(rows + 1);
    for (i, (ai, bi)) in a.iter().zip(b).enumerate() {
        debug_assert!(!bi.is_negative());
        let mut row = vec![BigRational::zero(); width];
        row[..nv].clone_from_slice(ai);
        row[nv + i] = BigRational::one();
        row[width - 1] = bi.clone();
        t.push(row);
    }
    // objective row holds reduced costs c_j - z_j, maximize
    let mut obj = vec![BigRational::zero(); width];
    obj[..nv].clone_from_slice(c);
    t.push(obj);
    let mut basis: Vec<usize> = (nv..nv + rows).collect();
    loop {
        let Some(enter) = (0..width - 1).find(|&j| t[rows][j].is_positive()) else {
            break;
        };
        let mut leave: Option<(usize, BigRational)> = None;
        for i in 0..rows {
            if t[i][enter].is_positive() {
                let ratio = &t[i][width - 1] / &t[i][enter];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let (pr, _) = leave.expect("bounded program");
        let piv = t[pr][enter].clone();
        for x in t[pr].iter_mut() {
            *x /= &piv;
        }
        let pivot_row = t[pr].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i == pr || row[enter].is_zero() {
                continue;
            }
            let f = row[enter].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x -= &f * p;
                }
            }
        }
        basis[pr] = enter;
    }
    let mut x = vec![BigRational::zero(); nv];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < nv {
            x[bv] = t[i][width - 1].clone();
        }
    }
    x
}

/// Point of `{y : b_j + a_j . y >= 0}` minimizing `y^T metric y`, or `None`
/// for an empty polyhedron.
///
/// The minimizer is the metric projection of the origin onto the affine hull
/// of the face it lies on, so it is found among the projections onto
/// `{a_j . y = -b_j, j in S}` over independent subsets `S` of size at most
/// the dimension.
fn closest_point(metric: &RatMatrix, a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let m = metric.len();
    let feasible = |y: &[BigRational]| {
        a.iter()
            .zip(b)
            .all(|(aj, bj)| !(bj + aj.iter().zip(y).map(|(p, q)| p * q).sum::<BigRational>()).is_negative())
    };
    let origin = vec![BigRational::zero(); m];
    if feasible(&origin) {
        return Some(origin);
    }
    let inv = linalg::inverse(metric).expect("metric is definite");
    // only constraints violated at the origin or tight candidates matter; all
    // are kept since a face of the optimum may involve satisfied ones
    let n = a.len();
    let mut best: Option<(BigRational, Vec<BigRational>)> = None;
    let mut subset = Vec::new();
    for size in 1..=m.min(n) {
        subsets(n, size, 0, &mut subset, &mut |s| {
            if let Some(y) = project_affine(&inv, a, b, s) {
                if feasible(&y) {
                    let val = norm(metric, &y);
                    if best.as_ref().is_none_or(|(bv, _)| val < *bv) {
                        best = Some((val, y));
                    }
                }
            }
        });
    }
    best.map(|(_, y)| y)
}

fn subsets(n: usize, size: usize, start: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if cur.len() == size {
        f(cur);
        return;
    }
    for i in start..n {
        if n - i < size - cur.len() {
            break;
        }
        cur.push(i);
        subsets(n, size, i + 1, cur, f);
        cur.pop();
    }
}

/// Minimizer of `y^T M y` on `{a_j . y = -b_j : j in s}`: `y = M^{-1} A^T mu`
/// with `(A M^{-1} A^T) mu = -b`. `None` when the rows are dependent.
fn project_affine(
    inv: &RatMatrix,
    a: &[Vec<BigRational>],
    b: &[BigRational],
    s: &[usize],
) -> Option<Vec<BigRational>> {
    let cols: Vec<Vec<BigRational>> = s.iter().map(|&j| linalg::rat_mat_vec(inv, &a[j])).collect();
    let k = s.len();
    let gram: RatMatrix = (0..k)
        .map(|p| (0..k).map(|q| a[s[p]].iter().zip(&cols[q]).map(|(x, y)| x * y).sum()).collect())
        .collect();
    let rhs: Vec<BigRational> = s.iter().map(|&j| -b[j].clone()).collect();
    let mu = linalg::solve(&gram, &rhs)?;
    let m = inv.len();
    let mut y = vec![BigRational::zero(); m];
    for (mi, col) in mu.iter().zip(&cols) {
        for (yi, ci) in y.iter_mut().zip(col) {
            *yi += mi * ci;
        }
    }
    Some(y)
}
