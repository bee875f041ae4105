//! Finite enumeration kernels: lattice points in ellipsoids, short vectors of
//! negative-definite lattices, vectors of a given square, and the search for
//! walls separating two points of the positive cone.
//!
//! Every wall search reduces to slices `{s : q(s,v) = t, q(s,s) = d}` for a
//! timelike integral `v`. Such a slice is a coset of the negative-definite
//! lattice `v^perp` intersected with an ellipsoid, so it is finite and is
//! listed exactly by Fincke–Pohst style bound propagation.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{bezout, content, integers_within, rat_from_int};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::linalg::{self, RatMatrix};
use crate::vector::{LatticeVector, RationalVector};

/// Which negative classes count as walls.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WallSpec {
    squares: Vec<i64>,
    #[serde(default)]
    require_reflective: bool,
}

impl WallSpec {
    pub fn new(squares: impl IntoIterator<Item = i64>, require_reflective: bool) -> Result<Self> {
        let set: BTreeSet<i64> = squares.into_iter().collect();
        if set.is_empty() {
            return Err(Error::InvalidSpec("no squares given".into()));
        }
        if let Some(bad) = set.iter().find(|&&d| d >= 0) {
            return Err(Error::InvalidSpec(format!("square {bad} is not negative")));
        }
        Ok(WallSpec { squares: set.into_iter().collect(), require_reflective })
    }

    /// Walls of square -2 only; the K3 model.
    pub fn roots() -> Self {
        WallSpec { squares: vec![-2], require_reflective: false }
    }

    /// Ascending (most negative first).
    pub fn squares(&self) -> &[i64] {
        &self.squares
    }

    pub fn require_reflective(&self) -> bool {
        self.require_reflective
    }

    /// `max |d|` over the allowed squares.
    pub fn max_abs_square(&self) -> i64 {
        self.squares.iter().map(|d| d.abs()).max().unwrap_or(0)
    }

    pub fn allows(&self, lattice: &Lattice, s: &LatticeVector) -> bool {
        let sq = lattice.square(s);
        sq.to_i64().is_some_and(|d| self.squares.contains(&d))
            && s.is_primitive()
            && (!self.require_reflective || is_reflective(lattice, s))
    }

    /// Parses `"-2,-4"`.
    pub fn parse(squares: &str, require_reflective: bool) -> Result<Self> {
        let vals = squares
            .split(',')
            .map(|t| t.trim().parse::<i64>().map_err(|_| Error::Parse(format!("bad square {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        WallSpec::new(vals, require_reflective)
    }
}

/// `2 q(e_i, s)` divisible by `q(s,s)` for every basis vector.
pub fn is_reflective(lattice: &Lattice, s: &LatticeVector) -> bool {
    let sq = lattice.square(s);
    if sq.is_zero() {
        return false;
    }
    lattice.dual_form(s).iter().all(|f| (f * BigInt::from(2) % &sq).is_zero())
}

/// A primitive negative class up to sign; its orthogonal hyperplane cuts the
/// positive cone.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Wall {
    vector: LatticeVector,
    #[serde(with = "bigint_json")]
    square: BigInt,
}

impl Wall {
    /// Canonicalizes `v` (primitive, first nonzero coordinate positive).
    pub fn new(lattice: &Lattice, v: &LatticeVector) -> Result<Self> {
        lattice.check_rank(v.len())?;
        if v.is_zero() {
            return Err(Error::ZeroVector);
        }
        let vector = v.canonical();
        let square = lattice.square(&vector);
        if !square.is_negative() {
            return Err(Error::InvalidSpec(format!("{vector} has square {square}, walls must be negative")));
        }
        Ok(Wall { vector, square })
    }

    pub(crate) fn from_canonical(vector: LatticeVector, square: BigInt) -> Self {
        Wall { vector, square }
    }

    pub fn vector(&self) -> &LatticeVector {
        &self.vector
    }

    pub fn square(&self) -> &BigInt {
        &self.square
    }

    /// `±vector`, oriented so that `q(result, x) > 0`; `None` when `x` lies on the wall.
    pub fn oriented_towards(&self, lattice: &Lattice, x: &RationalVector) -> Option<LatticeVector> {
        let p = lattice.q_mixed(&self.vector, x);
        match p.cmp(&BigRational::zero()) {
            Ordering::Greater => Some(self.vector.clone()),
            Ordering::Less => Some(-&self.vector),
            Ordering::Equal => None,
        }
    }

    /// Sign of `q(vector, x)`.
    pub fn side(&self, lattice: &Lattice, x: &RationalVector) -> i8 {
        crate::arith::sign_of(&lattice.q_mixed(&self.vector, x))
    }
}

impl Ord for Wall {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.square, &self.vector).cmp(&(&other.square, &other.vector))
    }
}

impl PartialOrd for Wall {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Wall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.vector.fmt(f)
    }
}

pub(crate) mod bigint_json {
    use num_bigint::BigInt;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        crate::vector::int_to_json(x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        crate::vector::int_from_json(&v).ok_or_else(|| D::Error::custom("expected an integer"))
    }
}

/// Lattice points of an ellipsoid `{x in Z^n : (x - c)^T P (x - c) <= R}` for
/// a positive-definite rational `P`.
///
/// The decomposition `P = sum_i d_i (y_i + sum_{j>i} mu_ij y_j)^2` is computed
/// once; every query with a new center and radius then walks coordinates from
/// the last to the first, each range bounded by the residual budget.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    diag: Vec<BigRational>,
    mu: RatMatrix,
}

impl Ellipsoid {
    /// `None` unless `form` is positive definite.
    pub fn new(form: &RatMatrix) -> Option<Self> {
        let n = form.len();
        let mut a = form.clone();
        for i in 0..n {
            if !a[i][i].is_positive() {
                return None;
            }
            for j in i + 1..n {
                a[j][i] = a[i][j].clone();
                a[i][j] = &a[i][j] / &a[i][i];
            }
            for k in i + 1..n {
                for l in k..n {
                    let v = &a[k][i] * &a[i][l];
                    a[k][l] -= v;
                }
            }
        }
        let diag = (0..n).map(|i| a[i][i].clone()).collect();
        Some(Ellipsoid { diag, mu: a })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// All integer points within squared radius `radius` of `center`.
    pub fn points(&self, center: &[BigRational], radius: &BigRational) -> Vec<Vec<BigInt>> {
        let n = self.dim();
        let mut out = Vec::new();
        if radius.is_negative() {
            return out;
        }
        if n == 0 {
            out.push(Vec::new());
            return out;
        }
        let mut x = vec![BigInt::zero(); n];
        self.descend(n - 1, center, radius.clone(), &mut x, &mut out);
        out
    }

    fn descend(&self, i: usize, c: &[BigRational], budget: BigRational, x: &mut Vec<BigInt>, out: &mut Vec<Vec<BigInt>>) {
        let mut m = c[i].clone();
        for j in i + 1..self.dim() {
            let y = rat_from_int(&x[j]) - &c[j];
            m -= &self.mu[i][j] * y;
        }
        let bound = &budget / &self.diag[i];
        for xi in integers_within(&m, &bound) {
            let d = rat_from_int(&xi) - &m;
            let rest = &budget - &self.diag[i] * &d * &d;
            x[i] = xi;
            if i == 0 {
                out.push(x.clone());
            } else {
                self.descend(i - 1, c, rest, x, out);
            }
        }
    }
}

/// All `v` with `min_square <= q(v,v) < 0` in a negative-definite lattice,
/// one per `±` pair (first nonzero coordinate positive), lexicographically sorted.
pub fn definite_short_vectors(lattice: &Lattice, min_square: i64) -> Result<Vec<LatticeVector>> {
    if !lattice.is_negative_definite() {
        return Err(Error::NotNegativeDefinite(lattice.signature()));
    }
    if min_square >= 0 {
        return Err(Error::InvalidSpec(format!("min_square {min_square} must be negative")));
    }
    let form = negated(&linalg::to_rational_matrix(lattice.gram()));
    let ell = Ellipsoid::new(&form).ok_or(Error::NotNegativeDefinite(lattice.signature()))?;
    let center = vec![BigRational::zero(); lattice.rank()];
    let radius = BigRational::from_integer(BigInt::from(-min_square));
    let mut out: Vec<LatticeVector> = ell
        .points(&center, &radius)
        .into_iter()
        .map(LatticeVector::new)
        .filter(|v| !v.is_zero() && v.is_sign_normalized())
        .collect();
    out.sort();
    Ok(out)
}

/// Brute-force scan of the box `max |v_i| <= bound` for vectors of square
/// `square`. Kept deliberately naive: it is the reference the exact
/// enumerators are checked against.
pub fn vectors_of_square(lattice: &Lattice, square: i64, bound: i64) -> Vec<LatticeVector> {
    let n = lattice.rank();
    let gram: Vec<Vec<i128>> = lattice
        .gram()
        .iter()
        .map(|r| r.iter().map(|x| x.to_i128().expect("gram entry fits in i128")).collect())
        .collect();
    let target = square as i128;
    let mut out = Vec::new();
    let mut v = vec![-bound; n];
    loop {
        let mut q: i128 = 0;
        for i in 0..n {
            let vi = v[i] as i128;
            if vi == 0 {
                continue;
            }
            let mut row: i128 = 0;
            for j in 0..n {
                row += gram[i][j] * v[j] as i128;
            }
            q += vi * row;
        }
        if q == target {
            out.push(LatticeVector::from_i64s(&v));
        }
        // odometer
        let mut k = n;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if v[k] < bound {
                v[k] += 1;
                break;
            }
            v[k] = -bound;
        }
    }
}

fn negated(m: &RatMatrix) -> RatMatrix {
    m.iter().map(|r| r.iter().map(|x| -x).collect()).collect()
}

/// Enumerates the slices `{s in Z^n : q(s,v) = t, q(s,s) = d}` for a fixed
/// timelike integral `v`.
///
/// `s = s_p + B k` where `s_p` solves the linear condition (Bezout) and the
/// columns of `B` span `v^perp`; the square condition becomes an ellipsoid in
/// `k` because `-q` is positive definite on `v^perp`.
#[derive(Debug, Clone)]
pub(crate) struct Slicer {
    form: Vec<BigInt>,
    gcd: BigInt,
    bezout: Vec<BigInt>,
    basis: Vec<LatticeVector>,
    /// `-B^T G B`
    metric: RatMatrix,
    ellipsoid: Ellipsoid,
}

impl Slicer {
    pub(crate) fn new(lattice: &Lattice, v: &LatticeVector) -> Result<Self> {
        let vv = lattice.square(v);
        if !vv.is_positive() {
            return Err(Error::NotPositive(v.to_string()));
        }
        let form = lattice.dual_form(v);
        let (gcd, bez) = bezout(&form);
        let restriction = lattice.restrict_to_hyperplane(v)?;
        let basis = restriction.embedding;
        let metric = negated(&linalg::to_rational_matrix(restriction.sublattice.gram()));
        let ellipsoid = Ellipsoid::new(&metric).ok_or(Error::NotHyperbolic(lattice.signature()))?;
        Ok(Slicer { form, gcd, bezout: bez, basis, metric, ellipsoid })
    }

    /// All integral `s` with `q(s,v) = t` and `q(s,s) = d` (both signs of
    /// nothing: `t` fixes the orientation).
    pub(crate) fn slice(&self, lattice: &Lattice, t: &BigInt, d: &BigInt) -> Vec<LatticeVector> {
        if !(t % &self.gcd).is_zero() {
            return Vec::new();
        }
        let k = t / &self.gcd;
        let sp = LatticeVector::new(self.bezout.iter().map(|u| u * &k).collect());
        debug_assert_eq!(
            self.form.iter().zip(sp.coords()).map(|(a, b)| a * b).sum::<BigInt>(),
            *t
        );
        let spq = lattice.square(&sp);
        let h: Vec<BigRational> = self.basis.iter().map(|b| rat_from_int(&lattice.q(b, &sp))).collect();
        if self.basis.is_empty() {
            return if spq == *d { vec![sp] } else { Vec::new() };
        }
        let center = linalg::solve(&self.metric, &h).expect("metric is definite");
        let hc: BigRational = h.iter().zip(&center).map(|(a, b)| a * b).sum();
        let radius = rat_from_int(&(-d)) + rat_from_int(&spq) + hc;
        self.ellipsoid
            .points(&center, &radius)
            .into_iter()
            .map(|kv| {
                let mut s = sp.coords().to_vec();
                for (ki, b) in kv.iter().zip(&self.basis) {
                    if ki.is_zero() {
                        continue;
                    }
                    for (si, bi) in s.iter_mut().zip(b.coords()) {
                        *si += ki * bi;
                    }
                }
                LatticeVector::new(s)
            })
            .filter(|s| lattice.square(s) == *d)
            .collect()
    }
}

fn check_timelike(lattice: &Lattice, x: &RationalVector) -> Result<()> {
    if !lattice.is_hyperbolic() {
        return Err(Error::NotHyperbolic(lattice.signature()));
    }
    lattice.check_rank(x.len())?;
    if !lattice.q_rat(x, x).is_positive() {
        return Err(Error::NotPositive(x.to_string()));
    }
    Ok(())
}

fn accept(lattice: &Lattice, spec: &WallSpec, s: &LatticeVector) -> bool {
    s.is_primitive() && (!spec.require_reflective || is_reflective(lattice, s))
}

/// Walls containing a timelike point (the `t = 0` slices).
fn walls_through_timelike(lattice: &Lattice, slicer: &Slicer, spec: &WallSpec) -> Vec<Wall> {
    let mut out = Vec::new();
    for &d in spec.squares() {
        let d = BigInt::from(d);
        for s in slicer.slice(lattice, &BigInt::zero(), &d) {
            if accept(lattice, spec, &s) && s.is_sign_normalized() {
                out.push(Wall::from_canonical(s, d.clone()));
            }
        }
    }
    out.sort();
    out
}

/// Largest `t >= 0` with `t^2 q1 < D (a^2 - q0 q1)`; `None` when no positive `t` qualifies.
fn t_range(q0: &BigInt, q1: &BigInt, a: &BigInt, depth: &BigInt) -> Option<BigInt> {
    let rhs = depth * (a * a - q0 * q1);
    if !rhs.is_positive() {
        return None;
    }
    // t^2 < rhs / q1
    let mut t: BigInt = (&rhs / q1).sqrt();
    while &t * &t * q1 >= rhs {
        t -= 1;
    }
    (t.is_positive()).then_some(t)
}

fn range_values(upto: &BigInt) -> Vec<BigInt> {
    let mut out = Vec::new();
    let mut t = BigInt::one();
    while &t <= upto {
        out.push(t.clone());
        t += 1;
    }
    out
}

/// Walls `s` in `spec` with `q(s,v0) > 0 > q(s,v1)`, returned canonically
/// (primitive, first nonzero coordinate positive) and sorted by
/// `(square, coordinates)`. Both inequalities are strict: a wall through
/// either endpoint is never reported.
///
/// Writing `s = (t / q(v0,v0)) v0 + s'` with `t = q(s,v0)`, Cauchy–Schwarz in
/// the negative-definite `v0^perp` turns `q(s,v1) < 0` into
/// `t^2 q(v1,v1) < |d| (q(v0,v1)^2 - q(v0,v0) q(v1,v1))`, so only finitely
/// many slices need to be listed.
pub fn separating_walls(
    lattice: &Lattice,
    v0: &RationalVector,
    v1: &RationalVector,
    spec: &WallSpec,
) -> Result<Vec<Wall>> {
    check_timelike(lattice, v0)?;
    check_timelike(lattice, v1)?;
    if !lattice.q_rat(v0, v1).is_positive() {
        return Err(Error::NotPositive(v1.to_string()));
    }
    let w0 = v0.ray_primitive();
    let w1 = v1.ray_primitive();
    let slicer = Slicer::new(lattice, &w0)?;
    let q0 = lattice.square(&w0);
    let q1 = lattice.square(&w1);
    let a = lattice.q(&w0, &w1);
    let mut jobs = Vec::new();
    for &d in spec.squares() {
        if let Some(tmax) = t_range(&q0, &q1, &a, &BigInt::from(-d)) {
            for t in range_values(&tmax) {
                jobs.push((t, BigInt::from(d)));
            }
        }
    }
    let mut walls: Vec<Wall> = jobs
        .par_iter()
        .flat_map_iter(|(t, d)| {
            slicer
                .slice(lattice, t, d)
                .into_iter()
                .filter(|s| lattice.q(s, &w1).is_negative() && accept(lattice, spec, s))
                .map(|s| Wall::from_canonical(s.canonical(), d.clone()))
        })
        .collect();
    walls.sort();
    walls.dedup();
    Ok(walls)
}

/// Walls `s` with `0 < q(s, w) <= bound` where `w` is the primitive integral
/// vector on the ray of `x`; each returned canonically with its side sign.
pub fn walls_in_band(
    lattice: &Lattice,
    x: &RationalVector,
    spec: &WallSpec,
    bound: &BigInt,
) -> Result<Vec<Wall>> {
    check_timelike(lattice, x)?;
    let w = x.ray_primitive();
    let slicer = Slicer::new(lattice, &w)?;
    let mut jobs = Vec::new();
    for &d in spec.squares() {
        for t in range_values(bound) {
            jobs.push((t, BigInt::from(d)));
        }
    }
    let mut walls: Vec<Wall> = jobs
        .par_iter()
        .flat_map_iter(|(t, d)| {
            slicer
                .slice(lattice, t, d)
                .into_iter()
                .filter(|s| accept(lattice, spec, s))
                .map(|s| Wall::from_canonical(s.canonical(), d.clone()))
        })
        .collect();
    walls.sort();
    walls.dedup();
    Ok(walls)
}

/// Walls through `v`.
///
/// For timelike `v` the answer is exact and `search_bound` is unused. For `v`
/// on the boundary of the positive cone the set can be infinite; the search
/// is then restricted to coordinates bounded by `search_bound`.
pub fn walls_containing(
    lattice: &Lattice,
    v: &RationalVector,
    spec: &WallSpec,
    search_bound: i64,
) -> Result<Vec<Wall>> {
    if !lattice.is_hyperbolic() {
        return Err(Error::NotHyperbolic(lattice.signature()));
    }
    lattice.check_rank(v.len())?;
    let vv = lattice.q_rat(v, v);
    if vv.is_negative() || v.is_zero() {
        return Err(Error::NotPositive(v.to_string()));
    }
    let w = v.ray_primitive();
    if vv.is_positive() {
        let slicer = Slicer::new(lattice, &w)?;
        return Ok(walls_through_timelike(lattice, &slicer, spec));
    }
    let mut out = Vec::new();
    for &d in spec.squares() {
        for s in vectors_of_square(lattice, d, search_bound) {
            if s.is_sign_normalized() && accept(lattice, spec, &s) && lattice.q(&s, &w).is_zero() {
                out.push(Wall::from_canonical(s, BigInt::from(d)));
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Upper bound on `q(s, w)` for walls separating a timelike integral `w`
/// from a primitive integral isotropic `r` in the same closed cone.
///
/// Along the ray `w + lambda r` the wall is crossed at `lambda* = t / m` with
/// `t = q(s,w)` and `m = |q(s,r)| >= 1`. Projecting `r` to the orthogonal
/// complement of the crossing point and applying Cauchy–Schwarz there gives
/// `m^2 (q0 + 2 lambda* a) <= D a^2`, hence `t <= (D a^2 / m - q0 m) / (2a)`,
/// which is largest at `m = 1`.
pub(crate) fn cusp_band(q0: &BigInt, a: &BigInt, depth: &BigInt) -> BigInt {
    let num = depth * a * a - q0;
    if !num.is_positive() {
        return BigInt::zero();
    }
    num / (BigInt::from(2) * a)
}

/// Walls `s` with `q(s,w) > 0 > q(s,r)` for timelike `w` and isotropic `r`.
pub fn walls_separating_from_cusp(
    lattice: &Lattice,
    w: &RationalVector,
    r: &LatticeVector,
    spec: &WallSpec,
) -> Result<Vec<Wall>> {
    let wi = w.ray_primitive();
    let q0 = lattice.square(&wi);
    let a = lattice.q(&wi, r);
    if !a.is_positive() {
        return Err(Error::NotPositive(r.to_string()));
    }
    let band = cusp_band(&q0, &a, &BigInt::from(spec.max_abs_square()));
    if band.is_zero() {
        return Ok(Vec::new());
    }
    let walls = walls_in_band(lattice, w, spec, &band)?;
    Ok(walls
        .into_iter()
        .filter(|s| {
            let o = s.oriented_towards(lattice, w).expect("band walls avoid w");
            lattice.q(&o, r).is_negative()
        })
        .collect())
}

/// Content of the linear form `q(v, .)`; `q(v, L)` is this multiple of `Z`.
pub fn divisibility(lattice: &Lattice, v: &LatticeVector) -> BigInt {
    content(&lattice.dual_form(v))
}

/// Canonical integral wall through a rational direction, if it is negative.
pub fn wall_from_rational(lattice: &Lattice, x: &RationalVector) -> Result<Wall> {
    Wall::new(lattice, &x.ray_primitive())
}
