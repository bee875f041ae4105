//! Integral quadratic lattices: the model of a second-cohomology lattice with
//! its Beauville–Bogomolov–Fujiki form.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{bezout, rat_from_int};
use crate::error::{Error, Result};
use crate::linalg::{self, IntMatrix};
use crate::vector::{int_from_json, int_to_json, LatticeVector, RationalVector};

/// Counts of positive and negative squares in a diagonalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub positive: usize,
    pub negative: usize,
}

impl Signature {
    pub fn new(positive: usize, negative: usize) -> Self {
        Signature { positive, negative }
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.positive, self.negative)
    }
}

/// A free abelian group `Z^rank` with a symmetric integral bilinear form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    name: String,
    gram: IntMatrix,
    signature: Signature,
    discriminant: BigInt,
}

/// Anything that can be paired against a lattice.
pub trait Coordinates {
    fn rational_coords(&self) -> Vec<BigRational>;
    fn coord_len(&self) -> usize;
}

impl Coordinates for LatticeVector {
    fn rational_coords(&self) -> Vec<BigRational> {
        self.coords().iter().map(rat_from_int).collect()
    }
    fn coord_len(&self) -> usize {
        self.len()
    }
}

impl Coordinates for RationalVector {
    fn rational_coords(&self) -> Vec<BigRational> {
        self.coords().to_vec()
    }
    fn coord_len(&self) -> usize {
        self.len()
    }
}

/// Result of projecting `y` to the orthogonal complement of `x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Projection {
    /// `q(x,y) / q(x,x)`
    pub coefficient: BigRational,
    /// `y - coefficient * x`, orthogonal to `x`
    pub tilde_y: RationalVector,
    /// `q(x,x) * tilde_y`, integral
    pub y_prime_unscaled: LatticeVector,
    pub y_prime_unscaled_square: BigInt,
    /// primitive part of `y_prime_unscaled` (not sign-normalized)
    pub y_prime: LatticeVector,
    pub y_prime_square: BigInt,
}

/// Integral basis of `x^perp` with its induced form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HyperplaneRestriction {
    pub sublattice: Lattice,
    /// One column per sublattice basis vector, in ambient coordinates.
    pub embedding: Vec<LatticeVector>,
}

impl HyperplaneRestriction {
    /// Ambient coordinates of a sublattice vector.
    pub fn lift(&self, coords: &[BigInt]) -> LatticeVector {
        let rank = self.embedding.first().map_or(0, LatticeVector::len);
        let mut out = vec![BigInt::zero(); rank];
        for (c, col) in coords.iter().zip(&self.embedding) {
            for (o, e) in out.iter_mut().zip(col.coords()) {
                *o += c * e;
            }
        }
        LatticeVector::new(out)
    }
}

impl Lattice {
    /// Validates a symmetric integer matrix and computes its invariants.
    pub fn new(name: impl Into<String>, gram: IntMatrix) -> Result<Self> {
        let n = gram.len();
        if n == 0 {
            return Err(Error::EmptyGram);
        }
        for (i, row) in gram.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotSquare { row: i, expected: n, found: row.len() });
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if gram[i][j] != gram[j][i] {
                    return Err(Error::Asymmetric { row: i, col: j });
                }
            }
        }
        let signature = signature_of(&gram);
        let discriminant = linalg::determinant(&gram).abs();
        Ok(Lattice { name: name.into(), gram, signature, discriminant })
    }

    pub fn from_i64(name: impl Into<String>, gram: &[&[i64]]) -> Result<Self> {
        let g = gram.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
        Lattice::new(name, g)
    }

    /// Orthogonal direct sum.
    pub fn direct_sum(name: impl Into<String>, parts: &[&Lattice]) -> Result<Self> {
        let n: usize = parts.iter().map(|p| p.rank()).sum();
        let mut gram = vec![vec![BigInt::zero(); n]; n];
        let mut off = 0;
        for p in parts {
            for i in 0..p.rank() {
                for j in 0..p.rank() {
                    gram[off + i][off + j] = p.gram[i][j].clone();
                }
            }
            off += p.rank();
        }
        Lattice::new(name, gram)
    }

    /// Form multiplied by `k`.
    pub fn scaled(&self, name: impl Into<String>, k: i64) -> Result<Self> {
        let g = self.gram.iter().map(|r| r.iter().map(|x| x * k).collect()).collect();
        Lattice::new(name, g)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rank(&self) -> usize {
        self.gram.len()
    }

    pub fn gram(&self) -> &IntMatrix {
        &self.gram
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn kernel_dimension(&self) -> usize {
        self.rank() - self.signature.positive - self.signature.negative
    }

    /// `|det(gram)|`, zero when degenerate.
    pub fn discriminant(&self) -> &BigInt {
        &self.discriminant
    }

    pub fn is_degenerate(&self) -> bool {
        self.discriminant.is_zero()
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.signature.positive == 1 && self.kernel_dimension() == 0
    }

    pub fn is_negative_definite(&self) -> bool {
        self.signature.negative == self.rank()
    }

    /// True when every `q(v,v)` is even.
    pub fn is_even(&self) -> bool {
        (0..self.rank()).all(|i| (&self.gram[i][i] % BigInt::from(2)).is_zero())
    }

    pub fn check_rank(&self, len: usize) -> Result<()> {
        if len != self.rank() {
            return Err(Error::RankMismatch { expected: self.rank(), found: len });
        }
        Ok(())
    }

    /// `gram * v`, the coefficients of the linear form `q(v, .)`.
    pub fn dual_form(&self, v: &LatticeVector) -> Vec<BigInt> {
        linalg::mat_vec(&self.gram, v.coords())
    }

    /// `q(v,w)` for integral vectors. Panics on rank mismatch.
    pub fn q(&self, v: &LatticeVector, w: &LatticeVector) -> BigInt {
        assert_eq!(v.len(), self.rank());
        assert_eq!(w.len(), self.rank());
        let mut total = BigInt::zero();
        for (i, vi) in v.coords().iter().enumerate() {
            if vi.is_zero() {
                continue;
            }
            let row: BigInt = self.gram[i].iter().zip(w.coords()).map(|(g, x)| g * x).sum();
            total += vi * row;
        }
        total
    }

    pub fn square(&self, v: &LatticeVector) -> BigInt {
        self.q(v, v)
    }

    /// `q(s, x)` for integral `s` and rational `x`.
    pub fn q_mixed(&self, s: &LatticeVector, x: &RationalVector) -> BigRational {
        assert_eq!(x.len(), self.rank());
        let form = self.dual_form(s);
        form.iter()
            .zip(x.coords())
            .filter(|(f, _)| !f.is_zero())
            .map(|(f, xi)| xi * f)
            .sum()
    }

    /// `q(x, y)` for rational vectors.
    pub fn q_rat(&self, x: &RationalVector, y: &RationalVector) -> BigRational {
        assert_eq!(x.len(), self.rank());
        assert_eq!(y.len(), self.rank());
        let mut total = BigRational::zero();
        for (i, xi) in x.coords().iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            let row: BigRational = self.gram[i]
                .iter()
                .zip(y.coords())
                .filter(|(g, _)| !g.is_zero())
                .map(|(g, yj)| yj * g)
                .sum();
            total += xi * row;
        }
        total
    }

    /// The bilinear form on integral or rational vectors, rank-checked.
    pub fn pairing<V: Coordinates, W: Coordinates>(&self, v: &V, w: &W) -> Result<BigRational> {
        self.check_rank(v.coord_len())?;
        self.check_rank(w.coord_len())?;
        let x = RationalVector::new(v.rational_coords());
        let y = RationalVector::new(w.rational_coords());
        Ok(self.q_rat(&x, &y))
    }

    /// Image of a homology class in rational cohomology coordinates.
    ///
    /// `v` is read in the dual basis (the values of a functional on the basis
    /// vectors); the result is the rational vector `w` with `q(w, e_i) = v_i`,
    /// i.e. `gram^{-1} v`. Multiplying by the discriminant clears all
    /// denominators.
    pub fn homology_image(&self, v: &LatticeVector) -> Result<RationalVector> {
        self.check_rank(v.len())?;
        if self.is_degenerate() {
            return Err(Error::Degenerate);
        }
        let g = linalg::to_rational_matrix(&self.gram);
        let rhs: Vec<BigRational> = v.coords().iter().map(rat_from_int).collect();
        let w = linalg::solve(&g, &rhs).ok_or(Error::Degenerate)?;
        Ok(RationalVector::new(w))
    }

    /// Decomposes `y = coefficient * x + tilde_y` with `tilde_y` orthogonal
    /// to `x`, and returns the integral rescaling `q(x,x) * tilde_y`.
    pub fn orthogonal_project(&self, x: &LatticeVector, y: &LatticeVector) -> Result<Projection> {
        self.check_rank(x.len())?;
        self.check_rank(y.len())?;
        let xx = self.square(x);
        if xx.is_zero() {
            return Err(Error::Isotropic(x.to_string()));
        }
        let xy = self.q(x, y);
        let coefficient = BigRational::new(xy.clone(), xx.clone());
        let tilde_y = &y.to_rational() - &x.to_rational().scale(&coefficient);
        // q(x,x) y - q(x,y) x
        let unscaled = &y.scale(&xx) - &x.scale(&xy);
        let unscaled_sq = self.square(&unscaled);
        let prim = unscaled.primitive();
        let prim_sq = self.square(&prim);
        Ok(Projection {
            coefficient,
            tilde_y,
            y_prime_unscaled: unscaled,
            y_prime_unscaled_square: unscaled_sq,
            y_prime: prim,
            y_prime_square: prim_sq,
        })
    }

    /// Integral basis of `{v : q(v,x) = 0}` and the induced lattice.
    pub fn restrict_to_hyperplane(&self, x: &LatticeVector) -> Result<HyperplaneRestriction> {
        self.restrict_to_orthogonal(std::slice::from_ref(x))
    }

    /// Integral basis of the common orthogonal complement of `xs`.
    pub fn restrict_to_orthogonal(&self, xs: &[LatticeVector]) -> Result<HyperplaneRestriction> {
        for x in xs {
            self.check_rank(x.len())?;
            if x.is_zero() {
                return Err(Error::ZeroVector);
            }
        }
        let forms: Vec<Vec<BigInt>> = xs.iter().map(|x| self.dual_form(x)).collect();
        let basis = linalg::integer_kernel(&forms, self.rank());
        let embedding: Vec<LatticeVector> = basis.into_iter().map(LatticeVector::new).collect();
        Ok(HyperplaneRestriction { sublattice: self.induced(&embedding)?, embedding })
    }

    /// Lattice spanned by `basis` with the restricted form.
    pub fn induced(&self, basis: &[LatticeVector]) -> Result<Lattice> {
        let k = basis.len();
        if k == 0 {
            // The zero lattice: represent it by an empty gram with no invariants.
            return Ok(Lattice {
                name: format!("{}|0", self.name),
                gram: Vec::new(),
                signature: Signature::new(0, 0),
                discriminant: BigInt::one(),
            });
        }
        let gram = (0..k)
            .map(|i| (0..k).map(|j| self.q(&basis[i], &basis[j])).collect())
            .collect();
        Lattice::new(format!("{}|perp", self.name), gram)
    }

    /// Validates the positive-cone preconditions: signature `(1, m)` and a
    /// positive reference vector.
    pub fn check_reference(&self, reference: &RationalVector) -> Result<()> {
        if !self.is_hyperbolic() {
            return Err(Error::NotHyperbolic(self.signature));
        }
        self.check_rank(reference.len())?;
        if !self.q_rat(reference, reference).is_positive() {
            return Err(Error::ReferenceNotPositive(reference.to_string()));
        }
        Ok(())
    }

    /// Membership in the component of `{q(v,v) > 0}` containing `reference`.
    pub fn is_positive<V: Coordinates>(&self, v: &V, reference: &RationalVector) -> Result<bool> {
        self.check_reference(reference)?;
        self.check_rank(v.coord_len())?;
        let v = RationalVector::new(v.rational_coords());
        Ok(self.in_positive_cone(&v, reference))
    }

    /// Unchecked variant of [`Lattice::is_positive`].
    pub(crate) fn in_positive_cone(&self, v: &RationalVector, reference: &RationalVector) -> bool {
        self.q_rat(v, v).is_positive() && self.q_rat(v, reference).is_positive()
    }

    /// Generator of the radical when it is one-dimensional.
    pub fn kernel_vectors(&self) -> Vec<LatticeVector> {
        linalg::integer_kernel(&self.gram, self.rank())
            .into_iter()
            .map(LatticeVector::new)
            .collect()
    }

    /// Linear functional `phi` with `phi(v) = content(v)`, from Bezout.
    pub(crate) fn bezout_functional(v: &LatticeVector) -> (BigInt, Vec<BigInt>) {
        bezout(v.coords())
    }

    /// JSON interchange form `{"name":..., "gram":[[...]]}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "name": self.name,
            "gram": self.gram.iter().map(|r| r.iter().map(int_to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let name = value
            .get("name")
            .and_then(|n| n.as_str())
            .unwrap_or("unnamed")
            .to_string();
        let gram = parse_gram(value.get("gram").ok_or_else(|| Error::Parse("missing \"gram\"".into()))?)?;
        Lattice::new(name, gram)
    }
}

pub(crate) fn parse_gram(value: &serde_json::Value) -> Result<IntMatrix> {
    let rows = value.as_array().ok_or_else(|| Error::Parse("gram must be an array".into()))?;
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            row.as_array()
                .ok_or_else(|| Error::Parse(format!("gram row {i} must be an array")))?
                .iter()
                .enumerate()
                .map(|(j, x)| int_from_json(x).ok_or_else(|| Error::Parse(format!("gram entry ({i},{j}) is not an integer"))))
                .collect()
        })
        .collect()
}

fn signature_of(gram: &IntMatrix) -> Signature {
    let d = linalg::congruence_diagonal(&linalg::to_rational_matrix(gram));
    Signature::new(
        d.iter().filter(|x| x.is_positive()).count(),
        d.iter().filter(|x| x.is_negative()).count(),
    )
}

/// Standard building blocks.
pub mod blocks {
    use super::*;

    pub fn hyperbolic_plane() -> Lattice {
        Lattice::from_i64("U", &[&[0, 1], &[1, 0]]).expect("valid")
    }

    /// Rank-one lattice `<d>`.
    pub fn rank_one(d: i64) -> Lattice {
        Lattice::from_i64(format!("<{d}>"), &[&[d]]).expect("valid")
    }

    /// Positive-definite E8 root lattice (Cartan matrix, Bourbaki labelling).
    pub fn e8() -> Lattice {
        let edges = [(0, 2), (1, 3), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7)];
        let mut g = vec![vec![0i64; 8]; 8];
        for (i, row) in g.iter_mut().enumerate() {
            row[i] = 2;
        }
        for (a, b) in edges {
            g[a][b] = -1;
            g[b][a] = -1;
        }
        let rows: Vec<&[i64]> = g.iter().map(Vec::as_slice).collect();
        Lattice::from_i64("E8", &rows).expect("valid")
    }

    /// `U^3 + E8(-1)^2`.
    pub fn k3() -> Lattice {
        let u = hyperbolic_plane();
        let e = e8().scaled("E8(-1)", -1).expect("valid");
        Lattice::direct_sum("K3", &[&u, &u, &u, &e, &e]).expect("valid")
    }

    /// `K3 + <-2(n-1)>`, the lattice of the Hilbert scheme of n points.
    pub fn k3n(n: i64) -> Lattice {
        assert!(n >= 2);
        Lattice::direct_sum(format!("K3[{n}]"), &[&k3(), &rank_one(-2 * (n - 1))]).expect("valid")
    }
}
