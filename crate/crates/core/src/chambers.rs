//! Chambers of the wall arrangement inside the positive cone: membership,
//! reduction to a base chamber by reflections, facets, flags of faces and
//! breadth-first exploration of the tessellation.
//!
//! A chamber is identified by the set of walls separating it from a fixed
//! base point (its key). Facets are decided exactly: a candidate wall is a
//! facet when the open region "on the wall, strictly inside every other
//! candidate, positive" is non-empty. The candidate list comes from a band
//! around the chamber witness; it is certified complete by checking that the
//! cone cut out by the facets has all its extreme rays in the closed positive
//! cone and that no wall separates the witness from any of them. When that
//! certificate cannot be produced within the search bound the result is
//! flagged [`SearchStatus::Incomplete`] instead of being silently truncated.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{rat_from_int, sign_of};
use crate::enumeration::{
    is_reflective, separating_walls, walls_containing, walls_in_band, walls_separating_from_cusp, Wall, WallSpec,
};
use crate::error::{Error, Result};
use crate::feasibility::interior_point;
use crate::lattice::Lattice;
use crate::linalg;
use crate::vector::{LatticeVector, RationalVector};

/// Default upper limit on the band `q(s, w) <= bound` used to collect facet
/// candidates.
pub const DEFAULT_SEARCH_BOUND: i64 = 256;

/// A connected component of the positive cone minus the walls, held by an
/// interior point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chamber {
    witness: RationalVector,
    base_witness: RationalVector,
    crossing_set: Vec<Wall>,
    spec: WallSpec,
}

impl Chamber {
    /// Validates that both points are positive and on no wall, and records
    /// the walls separating them.
    pub fn new(lattice: &Lattice, witness: &RationalVector, base_witness: &RationalVector, spec: &WallSpec) -> Result<Self> {
        lattice.check_reference(base_witness)?;
        lattice.check_rank(witness.len())?;
        if !lattice.in_positive_cone(witness, base_witness) {
            return Err(Error::NotPositive(witness.to_string()));
        }
        if let Some(w) = walls_containing(lattice, base_witness, spec, 0)?.first() {
            return Err(Error::BasePointOnWall(w.to_string()));
        }
        if let Some(w) = walls_containing(lattice, witness, spec, 0)?.first() {
            return Err(Error::PointOnWall(w.to_string()));
        }
        let crossing_set = separating_walls(lattice, base_witness, witness, spec)?;
        Ok(Chamber {
            witness: witness.clone(),
            base_witness: base_witness.clone(),
            crossing_set,
            spec: spec.clone(),
        })
    }

    pub fn witness(&self) -> &RationalVector {
        &self.witness
    }

    pub fn base_witness(&self) -> &RationalVector {
        &self.base_witness
    }

    /// Walls separating this chamber from the base chamber, sorted; this is
    /// the chamber's key.
    pub fn crossing_set(&self) -> &[Wall] {
        &self.crossing_set
    }

    pub fn spec(&self) -> &WallSpec {
        &self.spec
    }

    /// Whether `x` lies in this (open) chamber.
    pub fn contains(&self, lattice: &Lattice, x: &RationalVector) -> Result<bool> {
        if !lattice.in_positive_cone(x, &self.witness) {
            return Ok(false);
        }
        if !walls_containing(lattice, x, &self.spec, 0)?.is_empty() {
            return Ok(false);
        }
        same_chamber(lattice, &self.witness, x, &self.spec)
    }
}

/// No wall strictly separates `v` from `w`.
///
/// Points lying on walls are accepted; a wall through either point never
/// counts as separating, so for such points this answers "the two points lie
/// in the closure of a common chamber along the segment".
pub fn same_chamber(lattice: &Lattice, v: &RationalVector, w: &RationalVector, spec: &WallSpec) -> Result<bool> {
    Ok(separating_walls(lattice, v, w, spec)?.is_empty())
}

/// `x - 2 q(x,s)/q(s,s) s`.
pub fn reflect_point(lattice: &Lattice, s: &LatticeVector, x: &RationalVector) -> RationalVector {
    let ss = lattice.square(s);
    let f = lattice.q_mixed(s, x) * BigRational::from_integer(BigInt::from(2)) / rat_from_int(&ss);
    x - &s.to_rational().scale(&f)
}

/// Integral reflection of a lattice vector; the caller guarantees `s` is reflective.
pub(crate) fn reflect_vector(lattice: &Lattice, s: &LatticeVector, x: &LatticeVector) -> LatticeVector {
    let ss = lattice.square(s);
    let f = BigInt::from(2) * lattice.q(s, x) / ss;
    x - &s.scale(&f)
}

/// First basis index on which the reflection in `s` fails to be integral.
pub(crate) fn non_integral_index(lattice: &Lattice, s: &LatticeVector) -> Option<usize> {
    let ss = lattice.square(s);
    lattice
        .dual_form(s)
        .iter()
        .position(|f| !(f * BigInt::from(2) % &ss).is_zero())
}

/// Outcome of [`reduce_to_base`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reduction {
    /// Walls reflected in, in order of application.
    pub word: Vec<Wall>,
    /// The image of `v` after all reflections; lies in the base chamber.
    pub image: RationalVector,
    /// Primitive integral vector on the ray of `image`.
    pub canonical: LatticeVector,
    /// Size of the separating set before each step and after the last.
    pub separating_counts: Vec<usize>,
}

/// Moves `v` into the chamber of `base` by repeatedly reflecting in the
/// smallest (by square, then coordinates) wall separating them.
///
/// Every step must shrink the separating set; for an arrangement of mirrors
/// of a reflection group this is the exchange property, and any failure is
/// reported as [`Error::ReductionStalled`] rather than looping.
pub fn reduce_to_base(lattice: &Lattice, v: &RationalVector, base: &RationalVector, spec: &WallSpec) -> Result<Reduction> {
    lattice.check_reference(base)?;
    lattice.check_rank(v.len())?;
    if !lattice.in_positive_cone(v, base) {
        return Err(Error::NotPositive(v.to_string()));
    }
    let mut x = v.clone();
    let mut sep = separating_walls(lattice, base, &x, spec)?;
    let mut word = Vec::new();
    let mut counts = vec![sep.len()];
    while let Some(s) = sep.first().cloned() {
        if let Some(i) = non_integral_index(lattice, s.vector()) {
            return Err(Error::NonIntegralReflection { wall: s.to_string(), basis_index: i });
        }
        let next = reflect_point(lattice, s.vector(), &x);
        let after = separating_walls(lattice, base, &next, spec)?;
        if after.len() >= sep.len() {
            return Err(Error::ReductionStalled { wall: s.to_string(), before: sep.len(), after: after.len() });
        }
        counts.push(after.len());
        word.push(s);
        x = next;
        sep = after;
    }
    Ok(Reduction { word, canonical: x.ray_primitive(), image: x, separating_counts: counts })
}

/// A point of an open chamber whose closure contains `x`, chosen
/// deterministically; `x` itself when it lies on no wall.
///
/// The direction is the first moment-curve vector `(1, k, k^2, ...)` off all
/// walls through `x`, and the step is halved until no wall is crossed.
pub fn perturb_off_walls(lattice: &Lattice, x: &RationalVector, spec: &WallSpec) -> Result<RationalVector> {
    lattice.check_reference(x)?;
    let through = walls_containing(lattice, x, spec, 0)?;
    if through.is_empty() {
        return Ok(x.clone());
    }
    let start = x.ray_primitive().to_rational();
    let n = lattice.rank();
    for k in 2i64.. {
        let mut u = Vec::with_capacity(n);
        let mut p = BigInt::one();
        for _ in 0..n {
            u.push(p.clone());
            p *= k;
        }
        let u = LatticeVector::new(u);
        if through.iter().any(|s| lattice.q(s.vector(), &u).is_zero()) {
            continue;
        }
        let mut eps = BigRational::new(BigInt::one(), BigInt::from(2));
        for _ in 0..128 {
            let y = &start + &u.to_rational().scale(&eps);
            if lattice.in_positive_cone(&y, &start)
                && walls_containing(lattice, &y, spec, 0)?.is_empty()
                && separating_walls(lattice, &start, &y, spec)?.is_empty()
            {
                return Ok(y);
            }
            eps /= BigRational::from_integer(BigInt::from(2));
        }
    }
    unreachable!("the moment curve leaves every finite set of hyperplanes")
}

/// Whether a facet search proved it found every facet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Certified,
    Incomplete,
}

impl SearchStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SearchStatus::Certified => "certified",
            SearchStatus::Incomplete => "incomplete",
        }
    }
}

/// A facet of a chamber.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Face {
    pub supporting_wall: Wall,
    /// Sign of `q(wall, witness)`: `+1` when the canonical wall vector points
    /// into the chamber.
    pub orientation: i8,
    /// Primitive integral point on the wall, positive, strictly inside every
    /// other candidate inequality.
    pub witness_on_wall: LatticeVector,
}

impl Face {
    /// The wall vector pointing into the chamber.
    pub fn inward(&self) -> LatticeVector {
        if self.orientation > 0 {
            self.supporting_wall.vector().clone()
        } else {
            -self.supporting_wall.vector()
        }
    }
}

/// Facets of one chamber.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FacetReport {
    /// Sorted by wall.
    pub faces: Vec<Face>,
    pub status: SearchStatus,
    /// Largest band `q(s, w) <= band` searched.
    #[serde(with = "crate::enumeration::bigint_json")]
    pub band: BigInt,
    /// Extreme rays of the closed chamber (primitive integral), when certified.
    pub rays: Vec<LatticeVector>,
}

impl FacetReport {
    pub fn walls(&self) -> Vec<Wall> {
        self.faces.iter().map(|f| f.supporting_wall.clone()).collect()
    }
}

/// Facets of `chamber`, searching candidate walls in growing bands up to
/// `search_bound`.
pub fn facet_walls(lattice: &Lattice, chamber: &Chamber, search_bound: i64) -> Result<FacetReport> {
    facets_at(lattice, chamber.witness(), chamber.spec(), search_bound)
}

/// [`facet_walls`] for the chamber of a wall-free positive point.
///
/// Facets are invariants of the chamber, so the band search may move to a
/// different interior point: whenever the extreme rays of the current facet
/// cone sum to a verified point of the same chamber with a smaller square
/// than the current search point, the search restarts from there. This keeps
/// the needed band small for witnesses with large coordinates.
pub fn facets_at(lattice: &Lattice, witness: &RationalVector, spec: &WallSpec, search_bound: i64) -> Result<FacetReport> {
    lattice.check_reference(witness)?;
    if let Some(w) = walls_containing(lattice, witness, spec, 0)?.first() {
        return Err(Error::PointOnWall(w.to_string()));
    }
    let cap = BigInt::from(search_bound.max(1));
    let initial = BigInt::from((2 * spec.max_abs_square()).max(4)).min(cap.clone());
    let mut point = witness.clone();
    let mut band = initial.clone();
    let mut extra: BTreeSet<Wall> = BTreeSet::new();
    let mut moves = 0;
    let mut known: Vec<Face> = Vec::new();
    loop {
        let mut candidates: BTreeSet<Wall> = walls_in_band(lattice, &point, spec, &band)?.into_iter().collect();
        candidates.extend(extra.iter().cloned());
        prune_redundant(lattice, &point, &mut candidates, &known);
        let mut rounds = 0;
        let faces = loop {
            let faces = facets_among(lattice, &point, &candidates)?;
            match certify(lattice, &point, spec, &faces)? {
                Certificate::Certified(rays) => {
                    let faces = reorient(lattice, faces, witness);
                    return Ok(FacetReport { faces, status: SearchStatus::Certified, band, rays });
                }
                Certificate::Missing(walls) => {
                    let before = candidates.len();
                    candidates.extend(walls.iter().cloned());
                    extra.extend(walls);
                    rounds += 1;
                    if candidates.len() == before || rounds > 64 {
                        break faces;
                    }
                }
                Certificate::Unbounded => break faces,
            }
        };
        known = faces.clone();
        if moves < 8 {
            if let Some(better) = better_point(lattice, &point, spec, &faces)? {
                point = better;
                band = initial.clone();
                moves += 1;
                continue;
            }
        }
        if band >= cap {
            let faces = reorient(lattice, facets_among(lattice, &point, &candidates)?, witness);
            return Ok(FacetReport { faces, status: SearchStatus::Incomplete, band, rays: Vec::new() });
        }
        band = (&band * BigInt::from(2)).min(cap.clone());
    }
}

/// Drops candidates that are non-negative on every extreme ray of the cone
/// cut out by `known` facets. That cone contains the chamber, so such a wall
/// cannot support a facet; skipping it saves one feasibility problem each.
fn prune_redundant(lattice: &Lattice, point: &RationalVector, candidates: &mut BTreeSet<Wall>, known: &[Face]) {
    let normals: Vec<LatticeVector> = known.iter().map(Face::inward).collect();
    let Some(rays) = extreme_rays(lattice, &normals) else {
        return;
    };
    let kept: BTreeSet<&Wall> = known.iter().map(|f| &f.supporting_wall).collect();
    candidates.retain(|w| {
        if kept.contains(w) {
            return true;
        }
        let o = w.oriented_towards(lattice, point).expect("candidates avoid the search point");
        rays.iter().any(|r| lattice.q(&o, r).is_negative())
    });
}

/// Sum of the non-spacelike extreme rays of the facet cone, if it is a point
/// of the same chamber with a smaller primitive square.
fn better_point(lattice: &Lattice, point: &RationalVector, spec: &WallSpec, faces: &[Face]) -> Result<Option<RationalVector>> {
    let normals: Vec<LatticeVector> = faces.iter().map(Face::inward).collect();
    let Some(rays) = extreme_rays(lattice, &normals) else {
        return Ok(None);
    };
    let wi = point.ray_primitive();
    let mut sum = vec![BigInt::zero(); lattice.rank()];
    for r in &rays {
        if !lattice.square(r).is_negative() && lattice.q(r, &wi).is_positive() {
            for (a, b) in sum.iter_mut().zip(r.coords()) {
                *a += b;
            }
        }
    }
    let y = LatticeVector::new(sum);
    if y.is_zero() {
        return Ok(None);
    }
    let y = y.primitive();
    if lattice.square(&y) >= lattice.square(&wi) {
        return Ok(None);
    }
    let y = y.to_rational();
    if !lattice.in_positive_cone(&y, point)
        || !walls_containing(lattice, &y, spec, 0)?.is_empty()
        || !separating_walls(lattice, point, &y, spec)?.is_empty()
    {
        return Ok(None);
    }
    Ok(Some(y))
}

fn facets_among(lattice: &Lattice, witness: &RationalVector, candidates: &BTreeSet<Wall>) -> Result<Vec<Face>> {
    let walls: Vec<&Wall> = candidates.iter().collect();
    let inward: Vec<LatticeVector> = walls
        .iter()
        .map(|w| w.oriented_towards(lattice, witness).expect("candidates avoid the witness"))
        .collect();
    let found: Vec<Option<Face>> = (0..walls.len())
        .into_par_iter()
        .map(|i| {
            let others: Vec<LatticeVector> =
                inward.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, o)| o.clone()).collect();
            let point = interior_point(lattice, witness, std::slice::from_ref(&inward[i]), &others)?;
            Ok(point.map(|p| Face {
                supporting_wall: walls[i].clone(),
                orientation: walls[i].side(lattice, witness),
                witness_on_wall: p,
            }))
        })
        .collect::<Result<_>>()?;
    Ok(found.into_iter().flatten().collect())
}

enum Certificate {
    Certified(Vec<LatticeVector>),
    Missing(Vec<Wall>),
    Unbounded,
}

/// Checks that the cone `{q(o, x) >= 0 : o inward facet normal}` equals the
/// closed chamber: pointed, all extreme rays in the closed positive cone, and
/// no wall separating the witness from any ray.
fn certify(lattice: &Lattice, witness: &RationalVector, spec: &WallSpec, faces: &[Face]) -> Result<Certificate> {
    let mut normals: Vec<LatticeVector> = faces.iter().map(Face::inward).collect();
    if lattice.rank() == 2 {
        if let Some(boundary) = isotropic_boundary(lattice, witness) {
            normals.extend(boundary);
        }
    }
    let Some(rays) = extreme_rays(lattice, &normals) else {
        return Ok(Certificate::Unbounded);
    };
    let wi = witness.ray_primitive();
    let mut missing: BTreeSet<Wall> = BTreeSet::new();
    for r in &rays {
        let sq = lattice.square(r);
        if sq.is_negative() || !lattice.q(r, &wi).is_positive() {
            return Ok(Certificate::Unbounded);
        }
        let sep = if sq.is_positive() {
            separating_walls(lattice, witness, &r.to_rational(), spec)?
        } else {
            walls_separating_from_cusp(lattice, witness, r, spec)?
        };
        missing.extend(sep);
    }
    if missing.is_empty() {
        Ok(Certificate::Certified(rays))
    } else {
        Ok(Certificate::Missing(missing.into_iter().collect()))
    }
}

/// Extreme rays (primitive, sorted) of `{x : q(o, x) >= 0 for all normals}`,
/// or `None` when that cone is not pointed.
fn extreme_rays(lattice: &Lattice, normals: &[LatticeVector]) -> Option<Vec<LatticeVector>> {
    let n = lattice.rank();
    let forms: Vec<Vec<BigInt>> = normals.iter().map(|o| lattice.dual_form(o)).collect();
    if forms.is_empty() || linalg::rank(&linalg::to_rational_matrix(&forms)) < n {
        return None;
    }
    let mut rays: BTreeSet<LatticeVector> = BTreeSet::new();
    let mut subset = Vec::new();
    choose(forms.len(), n - 1, 0, &mut subset, &mut |s| {
        let rows: Vec<Vec<BigInt>> = s.iter().map(|&i| forms[i].clone()).collect();
        let ker = linalg::integer_kernel(&rows, n);
        if ker.len() != 1 {
            return;
        }
        let r = LatticeVector::new(ker[0].clone());
        for cand in [r.clone(), -&r] {
            let inside = forms
                .iter()
                .all(|f| !f.iter().zip(cand.coords()).map(|(a, b)| a * b).sum::<BigInt>().is_negative());
            if inside {
                rays.insert(cand);
            }
        }
    });
    Some(rays.into_iter().collect())
}

fn choose(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if cur.len() == k {
        f(cur);
        return;
    }
    for i in start..n {
        if n - i < k - cur.len() {
            break;
        }
        cur.push(i);
        choose(n, k, i + 1, cur, f);
        cur.pop();
    }
}

/// For rank two: the two primitive isotropic vectors bounding the positive
/// cone of `witness`, when they are rational.
fn isotropic_boundary(lattice: &Lattice, witness: &RationalVector) -> Option<[LatticeVector; 2]> {
    let g = lattice.gram();
    let (a, b, c) = (&g[0][0], &g[0][1], &g[1][1]);
    let disc: BigInt = b * b - a * c;
    if !disc.is_positive() {
        return None;
    }
    let s = Roots::sqrt(&disc);
    if &s * &s != disc {
        return None;
    }
    let (r1, r2) = if a.is_zero() {
        (LatticeVector::new(vec![BigInt::one(), BigInt::zero()]), LatticeVector::new(vec![c.clone(), -(b * BigInt::from(2))]))
    } else {
        (LatticeVector::new(vec![-b + &s, a.clone()]), LatticeVector::new(vec![-b - &s, a.clone()]))
    };
    let orient = |r: LatticeVector| {
        let r = r.primitive();
        if lattice.q_mixed(&r, witness).is_negative() {
            -r
        } else {
            r
        }
    };
    Some([orient(r1), orient(r2)])
}

/// Pairs of facets whose walls meet in a codimension-two face of the chamber.
pub fn ridges(lattice: &Lattice, witness: &RationalVector, faces: &[Face]) -> Result<Vec<(Wall, Wall)>> {
    let inward: Vec<LatticeVector> = faces.iter().map(Face::inward).collect();
    let pairs: Vec<(usize, usize)> = (0..faces.len()).flat_map(|i| (i + 1..faces.len()).map(move |j| (i, j))).collect();
    let found: Vec<Option<(Wall, Wall)>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let others: Vec<LatticeVector> = inward
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != i && k != j)
                .map(|(_, o)| o.clone())
                .collect();
            let eq = [inward[i].clone(), inward[j].clone()];
            Ok(interior_point(lattice, witness, &eq, &others)?
                .map(|_| (faces[i].supporting_wall.clone(), faces[j].supporting_wall.clone())))
        })
        .collect::<Result<_>>()?;
    Ok(found.into_iter().flatten().collect())
}

/// One step of a flag: the primitive projected wall vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct FlagEntry {
    /// Canonical (first nonzero coordinate positive) primitive vector.
    pub vector: LatticeVector,
    /// Square of `vector`.
    #[serde(with = "crate::enumeration::bigint_json")]
    pub square: BigInt,
    /// Square of the integral projection before removing its content.
    #[serde(with = "crate::enumeration::bigint_json")]
    pub unscaled_square: BigInt,
    /// `+1` when `vector` points the same way as the oriented projection.
    pub orientation: i8,
}

impl FlagEntry {
    pub fn oriented(&self) -> LatticeVector {
        if self.orientation > 0 {
            self.vector.clone()
        } else {
            -&self.vector
        }
    }
}

/// Integral encoding of a chain of nested faces.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Flag {
    pub entries: Vec<FlagEntry>,
}

impl Flag {
    pub fn depth(&self) -> usize {
        self.entries.len()
    }

    /// Squares and unscaled squares of the entries; invariant under isometries.
    pub fn invariant(&self) -> Vec<(BigInt, BigInt)> {
        self.entries.iter().map(|e| (e.square.clone(), e.unscaled_square.clone())).collect()
    }
}

/// Encodes a chain of walls `x_1, x_2, ...` (each oriented towards the
/// chamber) as successive integral projections: entry `k+1` is `x_{k+1}`
/// projected into the orthogonal complement of the earlier entries via
/// `y <- q(p,p) y - q(y,p) p`, then made primitive.
///
/// A projection with non-negative square means the walls do not meet inside
/// the positive cone, and the chain is rejected.
pub fn encode_flag(lattice: &Lattice, chain: &[LatticeVector], spec: &WallSpec) -> Result<Flag> {
    let mut entries: Vec<FlagEntry> = Vec::with_capacity(chain.len());
    for (k, x) in chain.iter().enumerate() {
        lattice.check_rank(x.len())?;
        if x.is_zero() {
            return Err(Error::ZeroVector);
        }
        if !spec.allows(lattice, &x.primitive()) {
            return Err(Error::InvalidSpec(format!("{x} is not a wall of the given spec")));
        }
        let mut y = x.clone();
        let mut sign = 1i8;
        for e in &entries {
            let p = e.oriented();
            let pp = lattice.square(&p);
            let yp = lattice.q(&y, &p);
            y = &y.scale(&pp) - &p.scale(&yp);
            if pp.is_negative() {
                sign = -sign;
            }
        }
        let unscaled_square = lattice.square(&y);
        if !unscaled_square.is_negative() {
            return Err(Error::ChainOutsidePositiveCone { entry: k + 1, square: unscaled_square.to_string() });
        }
        let prim = y.primitive();
        let oriented = if sign > 0 { prim } else { -prim };
        let vector = oriented.canonical();
        let orientation = if vector == oriented { 1 } else { -1 };
        entries.push(FlagEntry { square: lattice.square(&vector), vector, unscaled_square, orientation });
    }
    Ok(Flag { entries })
}

/// A chamber reached by [`explore_tessellation`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChamberNode {
    pub id: usize,
    /// Number of walls separating it from the base chamber.
    pub depth: usize,
    /// Sorted separating walls.
    pub key: Vec<Wall>,
    pub witness: RationalVector,
    pub facets: FacetReport,
    /// Facet pairs meeting in a codimension-two face.
    pub ridges: Vec<(Wall, Wall)>,
}

/// Adjacency across a facet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub wall: Wall,
}

/// The chamber graph around a base chamber.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tessellation {
    pub base_witness: RationalVector,
    pub spec: WallSpec,
    pub depth: usize,
    /// Ordered by depth, then key.
    pub nodes: Vec<ChamberNode>,
    /// Ordered by `(from, to)`; `from` is the shallower chamber.
    pub edges: Vec<Edge>,
}

impl Tessellation {
    pub fn status(&self) -> SearchStatus {
        self.nodes.iter().map(|n| n.facets.status).max().unwrap_or(SearchStatus::Certified)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let nodes: Vec<serde_json::Value> = self
            .nodes
            .iter()
            .map(|n| {
                serde_json::json!({
                    "id": n.id,
                    "depth": n.depth,
                    "key": n.key.iter().map(Wall::vector).collect::<Vec<_>>(),
                    "key_hash": format!("{:016x}", key_hash(&n.key)),
                    "witness": n.witness,
                    "facets": n.facets.faces.iter().map(|f| f.supporting_wall.vector()).collect::<Vec<_>>(),
                    "status": n.facets.status,
                })
            })
            .collect();
        let edges: Vec<serde_json::Value> = self
            .edges
            .iter()
            .map(|e| serde_json::json!({"from": e.from, "to": e.to, "wall": e.wall.vector()}))
            .collect();
        serde_json::json!({
            "base_witness": self.base_witness,
            "squares": self.spec.squares(),
            "depth": self.depth,
            "status": self.status(),
            "nodes": nodes,
            "edges": edges,
        })
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph tessellation {\n");
        for n in &self.nodes {
            let _ = writeln!(out, "  n{} [label=\"#{:08x} {}\"];", n.id, key_hash(&n.key) >> 32, n.witness);
        }
        for e in &self.edges {
            let _ = writeln!(out, "  n{} -- n{} [label=\"{}\"];", e.from, e.to, e.wall);
        }
        out.push_str("}\n");
        out
    }

    pub fn node_by_key(&self, key: &[Wall]) -> Option<&ChamberNode> {
        self.nodes.iter().find(|n| n.key == key)
    }
}

/// FNV-1a over the textual key; stable across platforms and releases.
pub fn key_hash(key: &[Wall]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let text = key.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(";");
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Breadth-first search over chambers up to `depth` crossings from the
/// chamber of `base`.
///
/// Crossing a facet whose reflection is integral maps the whole chamber
/// (witness, facets, ridges) by that reflection, which is exact and avoids
/// recomputation. Other facets are crossed by stepping off the facet's
/// witness and recomputing the facets of the new chamber.
pub fn explore_tessellation(
    lattice: &Lattice,
    base: &RationalVector,
    spec: &WallSpec,
    depth: usize,
    search_bound: i64,
) -> Result<Tessellation> {
    let base_chamber = Chamber::new(lattice, base, base, spec)?;
    let facets = facet_walls(lattice, &base_chamber, search_bound)?;
    let base_ridges = ridges(lattice, base, &facets.faces)?;
    let mut nodes = vec![ChamberNode {
        id: 0,
        depth: 0,
        key: Vec::new(),
        witness: base.clone(),
        facets,
        ridges: base_ridges,
    }];
    let mut index: BTreeMap<Vec<Wall>, usize> = BTreeMap::new();
    index.insert(Vec::new(), 0);
    let mut edges = Vec::new();
    let mut frontier = vec![0usize];
    for level in 0..depth {
        // children keyed by their crossing set; the first (parent, wall) in
        // order supplies the geometry
        let mut proposals: BTreeMap<Vec<Wall>, (usize, Face)> = BTreeMap::new();
        let mut pending_edges: Vec<(usize, Vec<Wall>, Wall)> = Vec::new();
        for &p in &frontier {
            let node = &nodes[p];
            for face in &node.facets.faces {
                let wall = &face.supporting_wall;
                if node.key.binary_search(wall).is_ok() {
                    continue;
                }
                let mut key = node.key.clone();
                let pos = key.binary_search(wall).unwrap_err();
                key.insert(pos, wall.clone());
                proposals.entry(key.clone()).or_insert_with(|| (p, face.clone()));
                pending_edges.push((p, key, wall.clone()));
            }
        }
        let children: Vec<(Vec<Wall>, RationalVector, FacetReport, Vec<(Wall, Wall)>)> = proposals
            .into_par_iter()
            .map(|(key, (p, face))| {
                let (w, f, r) = cross(lattice, &nodes[p], &face, spec, search_bound)?;
                Ok((key, w, f, r))
            })
            .collect::<Result<_>>()?;
        let mut next = Vec::new();
        for (key, witness, facets, ridges) in children {
            let id = nodes.len();
            index.insert(key.clone(), id);
            nodes.push(ChamberNode { id, depth: level + 1, key, witness, facets, ridges });
            next.push(id);
        }
        for (p, key, wall) in pending_edges {
            edges.push(Edge { from: p, to: index[&key], wall });
        }
        frontier = next;
    }
    edges.sort_by(|a, b| (a.from, a.to).cmp(&(b.from, b.to)));
    Ok(Tessellation { base_witness: base.clone(), spec: spec.clone(), depth, nodes, edges })
}

type Crossed = (RationalVector, FacetReport, Vec<(Wall, Wall)>);

fn cross(lattice: &Lattice, node: &ChamberNode, face: &Face, spec: &WallSpec, search_bound: i64) -> Result<Crossed> {
    let s = face.supporting_wall.vector();
    if is_reflective(lattice, s) {
        let witness = reflect_point(lattice, s, &node.witness);
        let map = |v: &LatticeVector| reflect_vector(lattice, s, v);
        let mut faces: Vec<Face> = node
            .facets
            .faces
            .iter()
            .map(|f| {
                let inward = map(&f.inward());
                let wall = Wall::new(lattice, &inward).expect("isometries map walls to walls");
                let orientation = if wall.vector() == &inward { 1 } else { -1 };
                Face { supporting_wall: wall, orientation, witness_on_wall: map(&f.witness_on_wall) }
            })
            .collect();
        faces.sort_by(|a, b| a.supporting_wall.cmp(&b.supporting_wall));
        let mut rays: Vec<LatticeVector> = node.facets.rays.iter().map(map).collect();
        rays.sort();
        let facets = FacetReport { faces, status: node.facets.status, band: node.facets.band.clone(), rays };
        let mut ridges: Vec<(Wall, Wall)> = node
            .ridges
            .iter()
            .map(|(a, b)| {
                let a = Wall::new(lattice, &map(a.vector())).expect("wall");
                let b = Wall::new(lattice, &map(b.vector())).expect("wall");
                if a <= b {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect();
        ridges.sort();
        return Ok((witness, facets, ridges));
    }
    // Step off a point of the facet to the far side: q(o, p + eps o) = eps q(o,o) < 0.
    // The sum of the parent's extreme rays on the wall is a relative-interior
    // point of the facet with small coordinates, which keeps later band
    // searches short; the LP witness on the wall is the fallback.
    let mut starts = Vec::new();
    let on_wall: Vec<&LatticeVector> = node.facets.rays.iter().filter(|r| lattice.q(r, s).is_zero()).collect();
    if on_wall.len() + 1 >= lattice.rank() {
        let mut sum = vec![BigInt::zero(); lattice.rank()];
        for r in &on_wall {
            for (a, b) in sum.iter_mut().zip(r.coords()) {
                *a += b;
            }
        }
        starts.push(LatticeVector::new(sum).to_rational());
    }
    starts.push(face.witness_on_wall.to_rational());
    let away = face.inward();
    for p in &starts {
        let mut eps = BigRational::one();
        for _ in 0..64 {
            let x = p + &away.to_rational().scale(&eps);
            if lattice.in_positive_cone(&x, &node.witness)
                && walls_containing(lattice, &x, spec, 0)?.is_empty()
                && separating_walls(lattice, &node.witness, &x, spec)? == std::slice::from_ref(&face.supporting_wall)
            {
                return settle(lattice, x, spec, search_bound);
            }
            eps /= BigRational::from_integer(BigInt::from(2));
        }
    }
    Err(Error::CrossingFailed(face.supporting_wall.to_string()))
}

/// Facets of the chamber of a freshly found point, with the witness replaced
/// by the sum of the extreme rays when the chamber is certified.
fn settle(lattice: &Lattice, x: RationalVector, spec: &WallSpec, search_bound: i64) -> Result<Crossed> {
    let facets = facets_at(lattice, &x, spec, search_bound)?;
    let witness = match facets.status {
        SearchStatus::Certified if !facets.rays.is_empty() => {
            let mut sum = vec![BigInt::zero(); lattice.rank()];
            for r in &facets.rays {
                for (a, b) in sum.iter_mut().zip(r.coords()) {
                    *a += b;
                }
            }
            LatticeVector::new(sum).to_rational()
        }
        _ => x,
    };
    let facets = FacetReport { faces: reorient(lattice, facets.faces, &witness), ..facets };
    let r = ridges(lattice, &witness, &facets.faces)?;
    Ok((witness, facets, r))
}

/// Orientations relative to the caller's witness (the search may have used
/// another point of the same chamber, which gives the same signs).
fn reorient(lattice: &Lattice, mut faces: Vec<Face>, witness: &RationalVector) -> Vec<Face> {
    for f in &mut faces {
        f.orientation = sign_of(&lattice.q_mixed(f.supporting_wall.vector(), witness));
        debug_assert_ne!(f.orientation, 0);
    }
    faces
}
