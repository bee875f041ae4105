//! Isometries of a lattice and orbit computations under finitely many
//! generators: reflections, bounded orbit exploration with a three-valued
//! equality test, orbit representatives for lattices with a one-dimensional
//! kernel, and face-orbit censuses over an explored tessellation.
//!
//! Orbits of an arithmetic group are infinite in general, so every orbit
//! search here is bounded by a word length and a coordinate box. Positive
//! answers ("same orbit") are always backed by an explicit word; negative
//! answers are only given when an invariant separates the two inputs or the
//! bounded search closed up on a whole finite orbit.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::arith::content;
use crate::chambers::{encode_flag, explore_tessellation, facets_at, non_integral_index, Flag, SearchStatus};
use crate::enumeration::{divisibility, is_reflective, vectors_of_square, WallSpec};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::linalg::{self, IntMatrix};
use crate::vector::{int_from_json, int_to_json, LatticeVector, RationalVector};

/// An integral isometry, stored as the matrix whose columns are the images
/// of the basis vectors (so `apply(v) = M v`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Isometry {
    matrix: IntMatrix,
}

impl Serialize for Isometry {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl Isometry {
    /// Checks `M^T G M = G` and `det M = +-1`.
    pub fn new(lattice: &Lattice, matrix: IntMatrix) -> Result<Self> {
        let n = lattice.rank();
        if matrix.len() != n {
            return Err(Error::RankMismatch { expected: n, found: matrix.len() });
        }
        for row in &matrix {
            if row.len() != n {
                return Err(Error::RankMismatch { expected: n, found: row.len() });
            }
        }
        let pulled = linalg::mat_mul(&linalg::transpose(&matrix), &linalg::mat_mul(lattice.gram(), &matrix));
        if &pulled != lattice.gram() || linalg::determinant(&matrix).abs() != BigInt::one() {
            return Err(Error::NotAnIsometry);
        }
        Ok(Isometry { matrix })
    }

    pub fn identity(rank: usize) -> Self {
        Isometry { matrix: linalg::identity(rank) }
    }

    /// `v -> -v`.
    pub fn negation(rank: usize) -> Self {
        let mut matrix = linalg::identity(rank);
        for (i, row) in matrix.iter_mut().enumerate() {
            row[i] = -BigInt::one();
        }
        Isometry { matrix }
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.matrix.len()
    }

    pub fn is_identity(&self) -> bool {
        self.matrix == linalg::identity(self.rank())
    }

    pub fn apply(&self, v: &LatticeVector) -> LatticeVector {
        LatticeVector::new(linalg::mat_vec(&self.matrix, v.coords()))
    }

    /// `self` after `other`.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry { matrix: linalg::mat_mul(&self.matrix, &other.matrix) }
    }

    pub fn inverse(&self) -> Isometry {
        let inv = linalg::inverse(&linalg::to_rational_matrix(&self.matrix)).expect("isometries are invertible");
        let matrix = inv
            .into_iter()
            .map(|row| row.into_iter().map(|x| x.to_integer()).collect())
            .collect();
        Isometry { matrix }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.matrix
                .iter()
                .map(|r| serde_json::Value::Array(r.iter().map(int_to_json).collect()))
                .collect(),
        )
    }
}

/// The reflection `x -> x - 2 q(x,s)/q(s,s) s`, when it is integral.
pub fn reflection(lattice: &Lattice, s: &LatticeVector) -> Result<Isometry> {
    lattice.check_rank(s.len())?;
    if s.is_zero() {
        return Err(Error::ZeroVector);
    }
    let ss = lattice.square(s);
    if ss.is_zero() {
        return Err(Error::Isotropic(s.to_string()));
    }
    if let Some(i) = non_integral_index(lattice, s) {
        return Err(Error::NonIntegralReflection { wall: s.to_string(), basis_index: i });
    }
    let n = lattice.rank();
    let form = lattice.dual_form(s);
    // column j is the image of e_j
    let mut matrix = linalg::identity(n);
    for (j, f) in form.iter().enumerate() {
        let c = BigInt::from(2) * f / &ss;
        for (i, row) in matrix.iter_mut().enumerate() {
            row[j] -= &c * &s.coords()[i];
        }
    }
    Ok(Isometry { matrix })
}

/// Whether the reflection in `s` is integral, after checking that an
/// integral reflection obeys `|q(s,s)| <= 2 * discriminant`.
///
/// For primitive `s` an integral reflection forces `q(s,s)` to divide
/// `2 * div(s)`, and `div(s)` divides the discriminant; a violation means the
/// lattice data is inconsistent. Degenerate lattices have no such bound.
pub fn check_square_bound_reflective(lattice: &Lattice, s: &LatticeVector) -> Result<bool> {
    lattice.check_rank(s.len())?;
    if s.is_zero() {
        return Err(Error::ZeroVector);
    }
    let s = s.primitive();
    if !is_reflective(lattice, &s) {
        return Ok(false);
    }
    let delta = lattice.discriminant();
    if !delta.is_zero() && lattice.square(&s).abs() > BigInt::from(2) * delta {
        return Err(Error::Internal(format!(
            "integral reflection in {s} with |q(s,s)| = {} above 2 * discriminant = {}",
            lattice.square(&s).abs(),
            BigInt::from(2) * delta
        )));
    }
    Ok(true)
}

/// Integral reflections in small vectors (at most two nonzero coordinates,
/// or every `{-1,0,1}` vector in rank at most 6), plus `-1`.
pub fn small_isometry_generators(lattice: &Lattice) -> Vec<Isometry> {
    let n = lattice.rank();
    let mut candidates: BTreeSet<LatticeVector> = BTreeSet::new();
    if n <= 6 {
        let mut v = vec![-1i64; n];
        loop {
            let lv = LatticeVector::from_i64s(&v);
            if !lv.is_zero() {
                candidates.insert(lv.canonical());
            }
            let mut i = 0;
            while i < n && v[i] == 1 {
                v[i] = -1;
                i += 1;
            }
            if i == n {
                break;
            }
            v[i] += 1;
        }
    } else {
        for i in 0..n {
            candidates.insert(LatticeVector::basis(n, i));
            for j in i + 1..n {
                for sj in [-1i64, 1] {
                    let mut v = vec![0i64; n];
                    v[i] = 1;
                    v[j] = sj;
                    candidates.insert(LatticeVector::from_i64s(&v));
                }
            }
        }
    }
    let mut out: BTreeSet<Isometry> = candidates
        .iter()
        .filter(|s| !lattice.square(s).is_zero())
        .filter_map(|s| reflection(lattice, s).ok())
        .collect();
    out.insert(Isometry::negation(n));
    out.into_iter().collect()
}

/// Parses a generator list: either a JSON array of matrices or an object
/// `{"generators": [...]}`. Matrices are row lists with `image = M v`.
pub fn load_generators(lattice: &Lattice, value: &serde_json::Value) -> Result<Vec<Isometry>> {
    let list = match value {
        serde_json::Value::Array(a) => a,
        serde_json::Value::Object(o) => o
            .get("generators")
            .and_then(|g| g.as_array())
            .ok_or_else(|| Error::Parse("expected a \"generators\" array".into()))?,
        _ => return Err(Error::Parse("expected a list of matrices".into())),
    };
    list.iter()
        .map(|m| {
            let rows = m.as_array().ok_or_else(|| Error::Parse("matrix must be an array of rows".into()))?;
            let matrix = rows
                .iter()
                .map(|r| {
                    r.as_array()
                        .ok_or_else(|| Error::Parse("matrix row must be an array".into()))?
                        .iter()
                        .map(|x| int_from_json(x).ok_or_else(|| Error::Parse(format!("matrix entry {x} is not an integer"))))
                        .collect::<Result<Vec<BigInt>>>()
                })
                .collect::<Result<IntMatrix>>()?;
            Isometry::new(lattice, matrix)
        })
        .collect()
}

fn check_generators(lattice: &Lattice, generators: &[Isometry]) -> Result<()> {
    for g in generators {
        if g.rank() != lattice.rank() {
            return Err(Error::RankMismatch { expected: lattice.rank(), found: g.rank() });
        }
    }
    Ok(())
}

/// Coordinate box used by orbit searches started at `tuple`.
pub fn orbit_box(tuple: &[LatticeVector]) -> BigInt {
    let m: BigInt = tuple.iter().map(LatticeVector::max_abs).max().unwrap_or_default();
    std::cmp::max(m * BigInt::from(4), BigInt::from(8))
}

/// Result of a bounded breadth-first orbit search.
#[derive(Debug, Clone)]
struct Exploration {
    visited: HashSet<Vec<LatticeVector>>,
    /// The search closed up: every generator image of every visited element
    /// was visited, within the box and the word budget.
    complete: bool,
}

fn explore(start: &[LatticeVector], generators: &[Isometry], budget: usize) -> Exploration {
    let bound = orbit_box(start);
    let mut visited: HashSet<Vec<LatticeVector>> = HashSet::new();
    visited.insert(start.to_vec());
    let mut frontier: VecDeque<(Vec<LatticeVector>, usize)> = VecDeque::from([(start.to_vec(), 0)]);
    let mut complete = true;
    while let Some((t, len)) = frontier.pop_front() {
        for g in generators {
            let image: Vec<LatticeVector> = t.iter().map(|v| g.apply(v)).collect();
            if visited.contains(&image) {
                continue;
            }
            if len >= budget || image.iter().any(|v| v.max_abs() > bound) {
                complete = false;
                continue;
            }
            visited.insert(image.clone());
            frontier.push_back((image, len + 1));
        }
    }
    Exploration { visited, complete }
}

/// Least element found in a bounded orbit search, in the order of
/// [`orbit_order`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrbitRep {
    pub rep: LatticeVector,
    /// Number of orbit elements visited.
    pub explored: usize,
    /// Whether the search exhausted the whole orbit.
    pub complete: bool,
}

/// Least orbit element (by [`orbit_order`]) reachable by words of length at
/// most `word_budget` inside the automatic box `max(8, 4 max|v|)`.
///
/// Equal outputs prove that two vectors share an orbit. Unequal outputs are
/// conclusive only when `complete` is set; see [`orbit_relation`].
pub fn canonical_orbit_rep(lattice: &Lattice, v: &LatticeVector, generators: &[Isometry], word_budget: usize) -> Result<OrbitRep> {
    lattice.check_rank(v.len())?;
    check_generators(lattice, generators)?;
    let e = explore(std::slice::from_ref(v), generators, word_budget);
    let rep = e.visited.iter().map(|t| &t[0]).min_by(|a, b| orbit_order(a, b)).expect("start is visited").clone();
    Ok(OrbitRep { rep, explored: e.visited.len(), complete: e.complete })
}

/// Order used to pick orbit representatives: smaller `max|v_i|` first, then
/// lexicographic. Small elements are reached from every starting point of
/// the orbit, so the choice depends little on where the search began.
pub fn orbit_order(a: &LatticeVector, b: &LatticeVector) -> std::cmp::Ordering {
    a.max_abs().cmp(&b.max_abs()).then_with(|| a.cmp(b))
}

/// Three-valued orbit equality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitRelation {
    Same,
    Different,
    Inconclusive,
}

impl OrbitRelation {
    pub fn as_str(self) -> &'static str {
        match self {
            OrbitRelation::Same => "same",
            OrbitRelation::Different => "different",
            OrbitRelation::Inconclusive => "inconclusive",
        }
    }
}

/// Decides whether `v` and `w` lie in one orbit of the group generated by
/// `generators`, as far as a bounded search can tell.
///
/// `Different` is returned when the square or the divisibility differ (both
/// are invariants of the full isometry group) or when the orbit of either
/// vector was exhausted without meeting the other.
pub fn orbit_relation(
    lattice: &Lattice,
    v: &LatticeVector,
    w: &LatticeVector,
    generators: &[Isometry],
    word_budget: usize,
) -> Result<OrbitRelation> {
    lattice.check_rank(v.len())?;
    lattice.check_rank(w.len())?;
    check_generators(lattice, generators)?;
    if v == w {
        return Ok(OrbitRelation::Same);
    }
    if lattice.square(v) != lattice.square(w) || divisibility(lattice, v) != divisibility(lattice, w) || content(v.coords()) != content(w.coords()) {
        return Ok(OrbitRelation::Different);
    }
    let ev = explore(std::slice::from_ref(v), generators, word_budget);
    if ev.visited.contains(std::slice::from_ref(w)) {
        return Ok(OrbitRelation::Same);
    }
    let ew = explore(std::slice::from_ref(w), generators, word_budget);
    if ev.visited.iter().any(|t| ew.visited.contains(t)) {
        return Ok(OrbitRelation::Same);
    }
    if ev.complete || ew.complete {
        return Ok(OrbitRelation::Different);
    }
    Ok(OrbitRelation::Inconclusive)
}

/// Splitting `Z^n = L0 + <l>` of a lattice whose form has a one-dimensional
/// kernel spanned by `l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegenerateSplit {
    /// Primitive kernel generator, first nonzero coordinate positive.
    pub kernel_gen: LatticeVector,
    /// Integral functional with `phi(l) = 1`; the complement is its kernel.
    pub functional: Vec<BigInt>,
    /// Basis of the complement `L0`, in ambient coordinates.
    pub complement_basis: Vec<LatticeVector>,
    /// `L0` with the induced (non-degenerate) form.
    pub complement: Lattice,
    /// Inverse of the unimodular matrix with columns `complement_basis, l`.
    to_split: IntMatrix,
}

impl DegenerateSplit {
    pub fn new(lattice: &Lattice) -> Result<Self> {
        let kernel = lattice.kernel_vectors();
        if kernel.len() != 1 {
            return Err(Error::KernelDimension(kernel.len()));
        }
        let l = kernel[0].canonical();
        let (g, functional) = Lattice::bezout_functional(&l);
        debug_assert!(g.is_one());
        let n = lattice.rank();
        let mut basis = linalg::integer_kernel(&[functional.clone()], n);
        linalg::size_reduce(&mut basis);
        let complement_basis: Vec<LatticeVector> = basis.into_iter().map(LatticeVector::new).collect();
        let mut complement = lattice.induced(&complement_basis)?;
        complement = Lattice::new(format!("{}/ker", lattice.name()), complement.gram().clone())?;
        let mut columns: Vec<Vec<BigInt>> = complement_basis.iter().map(|b| b.coords().to_vec()).collect();
        columns.push(l.coords().to_vec());
        let change = linalg::transpose(&columns);
        let inv = linalg::inverse(&linalg::to_rational_matrix(&change)).ok_or(Error::Degenerate)?;
        let to_split = inv
            .into_iter()
            .map(|row| row.into_iter().map(|x| x.to_integer()).collect())
            .collect();
        Ok(DegenerateSplit { kernel_gen: l, functional, complement_basis, complement, to_split })
    }

    /// `(coordinates in L0, k)` with `v = sum c_i b_i + k l`.
    pub fn decompose(&self, v: &LatticeVector) -> (Vec<BigInt>, BigInt) {
        let mut c = linalg::mat_vec(&self.to_split, v.coords());
        let k = c.pop().expect("rank >= 1");
        (c, k)
    }

    pub fn compose(&self, coords: &[BigInt], k: &BigInt) -> LatticeVector {
        let mut v = self.kernel_gen.scale(k);
        for (c, b) in coords.iter().zip(&self.complement_basis) {
            v = &v + &b.scale(c);
        }
        v
    }

    /// Component of `v` in `L0`, in ambient coordinates.
    pub fn complement_part(&self, v: &LatticeVector) -> LatticeVector {
        let (c, _) = self.decompose(v);
        self.compose(&c, &BigInt::zero())
    }

    /// `d` with `Hom(L0, Z) . a0 = d Z`: the content of the `L0`-coordinates.
    pub fn ideal_generator(&self, v: &LatticeVector) -> BigInt {
        content(&self.decompose(v).0)
    }

    fn conjugate(&self, block: impl Fn(&[BigInt], &BigInt) -> (Vec<BigInt>, BigInt), rank: usize) -> Isometry {
        let mut matrix = vec![vec![BigInt::zero(); rank]; rank];
        for j in 0..rank {
            let (c, k) = self.decompose(&LatticeVector::basis(rank, j));
            let (c, k) = block(&c, &k);
            let image = self.compose(&c, &k);
            for (i, x) in image.into_coords().into_iter().enumerate() {
                matrix[i][j] = x;
            }
        }
        Isometry { matrix }
    }

    /// Extension of an isometry of `L0` fixing `l`.
    pub fn lift(&self, g: &Isometry) -> Isometry {
        let rank = self.kernel_gen.len();
        self.conjugate(|c, k| (linalg::mat_vec(g.matrix(), c), k.clone()), rank)
    }

    /// `x -> x + m * c_i(x) l`, where `c_i` is the `i`-th `L0`-coordinate.
    pub fn transvection(&self, i: usize, m: &BigInt) -> Isometry {
        let rank = self.kernel_gen.len();
        self.conjugate(|c, k| (c.to_vec(), k + m * &c[i]), rank)
    }

    /// Identity on `L0`, `l -> -l`.
    pub fn kernel_flip(&self) -> Isometry {
        let rank = self.kernel_gen.len();
        self.conjugate(|c, k| (c.to_vec(), -k), rank)
    }
}

/// Generators used to check orbit representatives of a degenerate lattice:
/// lifts of [`small_isometry_generators`] of the complement and the kernel
/// transvections `x -> x +- 2^j c_i(x) l` for `j = 0..3`.
///
/// The flip `l -> -l` is left out on purpose: it identifies `k` with `-k`
/// modulo `d`, which the representative family does not quotient by.
pub fn kernel_generators(split: &DegenerateSplit) -> Vec<Isometry> {
    let mut out: BTreeSet<Isometry> = small_isometry_generators(&split.complement)
        .iter()
        .map(|g| split.lift(g))
        .collect();
    for i in 0..split.complement_basis.len() {
        for j in 0..4u32 {
            let m = BigInt::from(1i64 << j);
            out.insert(split.transvection(i, &m));
            out.insert(split.transvection(i, &-m));
        }
    }
    out.into_iter().collect()
}

/// Representatives of the vectors of square `r` in a lattice with a
/// one-dimensional kernel `<l>`: for every complement representative `a0`,
/// the vectors `a0 + k l` with `0 <= k < d`, where `d Z` is the image of
/// `a0` under all functionals on the complement.
///
/// `base_reps` are orbit representatives in the complement; they may be
/// given in ambient coordinates, and only their complement part is used.
/// Zero complement parts (kernel vectors, possible only for `r = 0`) have
/// infinitely many orbits and are skipped.
pub fn kneser_degenerate_reps(lattice: &Lattice, r: i64, base_reps: &[LatticeVector]) -> Result<Vec<LatticeVector>> {
    let split = DegenerateSplit::new(lattice)?;
    let r = BigInt::from(r);
    let mut out: BTreeSet<LatticeVector> = BTreeSet::new();
    for a in base_reps {
        lattice.check_rank(a.len())?;
        let a0 = split.complement_part(a);
        let sq = lattice.square(&a0);
        if sq != r {
            return Err(Error::SquareMismatch { vector: a.to_string(), expected: r.to_string(), found: sq.to_string() });
        }
        if a0.is_zero() {
            continue;
        }
        let d = split.ideal_generator(&a0);
        let mut k = BigInt::zero();
        while k < d {
            out.insert(&a0 + &split.kernel_gen.scale(&k));
            k += 1;
        }
    }
    Ok(out.into_iter().collect())
}

/// Brute-force orbit representatives of the nonzero vectors of square `r`
/// with coordinates in `[-bound, bound]`, under [`small_isometry_generators`].
/// Vectors whose bounded orbits meet are merged; the result may still
/// contain several representatives of one true orbit.
pub fn base_orbit_reps(lattice: &Lattice, r: i64, bound: i64, word_budget: usize) -> Vec<LatticeVector> {
    let generators = small_isometry_generators(lattice);
    let vectors: Vec<LatticeVector> = vectors_of_square(lattice, r, bound).into_iter().filter(|v| !v.is_zero()).collect();
    let mut owner: HashMap<Vec<LatticeVector>, usize> = HashMap::new();
    let mut reps: Vec<LatticeVector> = Vec::new();
    for v in vectors {
        let key = vec![v.clone()];
        if owner.contains_key(&key) {
            continue;
        }
        let e = explore(&key, &generators, word_budget);
        let hit = e.visited.iter().find_map(|t| owner.get(t).copied());
        let class = match hit {
            Some(c) => c,
            None => {
                reps.push(v.clone());
                reps.len() - 1
            }
        };
        for t in e.visited {
            owner.entry(t).or_insert(class);
        }
    }
    reps.into_iter()
        .map(|v| {
            let e = explore(std::slice::from_ref(&v), &generators, word_budget);
            e.visited.into_iter().map(|mut t| t.remove(0)).min_by(orbit_order).expect("nonempty")
        })
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Reflections in the facets of the chamber of `base` that are integral.
pub fn facet_reflections(lattice: &Lattice, base: &RationalVector, spec: &WallSpec, search_bound: i64) -> Result<Vec<Isometry>> {
    let report = facets_at(lattice, base, spec, search_bound)?;
    Ok(report
        .faces
        .iter()
        .filter_map(|f| reflection(lattice, f.supporting_wall.vector()).ok())
        .collect())
}

/// One line of a face-orbit census.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CensusRow {
    /// 1 for facets, 2 for codimension-two faces.
    pub codim: usize,
    /// Crossing depth of the chambers contributing.
    pub depth: usize,
    /// Flags encoded at this depth.
    pub flags: usize,
    /// Orbit classes first met at this depth.
    pub new_orbits: usize,
    /// Classes met so far, this depth included.
    pub total_orbits: usize,
    /// New classes whose squares coincide with an earlier class, so their
    /// distinctness is not proven.
    pub inconclusive: usize,
    /// Range of the unscaled squares over the flags' last entries.
    #[serde(serialize_with = "opt_bigint")]
    pub min_unscaled_square: Option<BigInt>,
    #[serde(serialize_with = "opt_bigint")]
    pub max_unscaled_square: Option<BigInt>,
}

fn opt_bigint<S: Serializer>(x: &Option<BigInt>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => int_to_json(v).serialize(s),
        None => s.serialize_none(),
    }
}

/// Orbit classes of oriented face flags met while exploring a tessellation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Census {
    pub lattice: String,
    pub squares: Vec<i64>,
    pub depth: usize,
    pub word_budget: usize,
    pub generators: usize,
    pub chambers: usize,
    pub status: SearchStatus,
    pub rows: Vec<CensusRow>,
}

impl Census {
    /// New-orbit counts per depth for one codimension.
    pub fn saturation(&self, codim: usize) -> Vec<usize> {
        self.rows.iter().filter(|r| r.codim == codim).map(|r| r.new_orbits).collect()
    }

    /// Orbit classes after the last depth, per codimension.
    pub fn totals(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for r in &self.rows {
            out.insert(r.codim, r.total_orbits);
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("census serializes");
        let profile: BTreeMap<String, Vec<usize>> =
            [1, 2].iter().map(|&c| (format!("codim{c}"), self.saturation(c))).collect();
        v["saturation"] = serde_json::to_value(profile).expect("profile serializes");
        v
    }

    pub fn to_text(&self) -> String {
        let header = ["codim", "depth", "flags", "new", "total", "inconclusive", "min_sq", "max_sq"];
        let cell = |x: &Option<BigInt>| x.as_ref().map(|v| v.to_string()).unwrap_or_else(|| "-".into());
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.codim.to_string(),
                    r.depth.to_string(),
                    r.flags.to_string(),
                    r.new_orbits.to_string(),
                    r.total_orbits.to_string(),
                    r.inconclusive.to_string(),
                    cell(&r.min_unscaled_square),
                    cell(&r.max_unscaled_square),
                ]
            })
            .collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|i| rows.iter().map(|r| r[i].len()).chain([header[i].len()]).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# {} squares {:?} depth {} budget {} generators {} chambers {} status {}",
            self.lattice,
            self.squares,
            self.depth,
            self.word_budget,
            self.generators,
            self.chambers,
            self.status.as_str()
        );
        let line = |cells: Vec<String>| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        let _ = writeln!(out, "{}", line(header.iter().map(|h| h.to_string()).collect()));
        for r in rows {
            let _ = writeln!(out, "{}", line(r));
        }
        out
    }
}

struct FlagRecord {
    codim: usize,
    depth: usize,
    tuple: Vec<LatticeVector>,
    flag: Flag,
}

/// Explores the tessellation around `base` to `depth` crossings, encodes
/// every facet and every ordered pair of facets meeting in a codimension-two
/// face as a [`Flag`], and groups the flags into orbits of the group
/// generated by `generators`.
///
/// Flags are compared as tuples of oriented projected vectors. A flag joins
/// an existing class when its bounded orbit search meets a tuple already
/// seen in that class; otherwise it opens a new class. A new class counts as
/// proven distinct when its square invariants differ from every earlier
/// class, and as inconclusive otherwise.
pub fn face_orbit_census(
    lattice: &Lattice,
    base: &RationalVector,
    spec: &WallSpec,
    generators: &[Isometry],
    depth: usize,
    word_budget: usize,
    search_bound: i64,
) -> Result<Census> {
    check_generators(lattice, generators)?;
    let tess = explore_tessellation(lattice, base, spec, depth, search_bound)?;
    let mut records: Vec<FlagRecord> = Vec::new();
    for node in &tess.nodes {
        for face in &node.facets.faces {
            let tuple = vec![face.inward()];
            let flag = encode_flag(lattice, &tuple, spec)?;
            records.push(FlagRecord { codim: 1, depth: node.depth, tuple: oriented(&flag), flag });
        }
        for (a, b) in &node.ridges {
            let inward = |w: &crate::enumeration::Wall| {
                node.facets
                    .faces
                    .iter()
                    .find(|f| &f.supporting_wall == w)
                    .map(|f| f.inward())
                    .expect("ridge walls are facets")
            };
            let (oa, ob) = (inward(a), inward(b));
            for chain in [[oa.clone(), ob.clone()], [ob, oa]] {
                let flag = encode_flag(lattice, &chain, spec)?;
                records.push(FlagRecord { codim: 2, depth: node.depth, tuple: oriented(&flag), flag });
            }
        }
    }

    let mut owner: HashMap<Vec<LatticeVector>, usize> = HashMap::new();
    let mut class_invariants: Vec<(usize, Vec<(BigInt, BigInt)>)> = Vec::new();
    let mut rows = Vec::new();
    for codim in [1usize, 2] {
        let mut total = 0;
        for d in 0..=depth {
            let level: Vec<&FlagRecord> = records.iter().filter(|r| r.codim == codim && r.depth == d).collect();
            let pending: Vec<&FlagRecord> = level.iter().copied().filter(|r| !owner.contains_key(&r.tuple)).collect();
            let explored: Vec<Exploration> = pending.par_iter().map(|r| explore(&r.tuple, generators, word_budget)).collect();
            let (mut new_orbits, mut inconclusive) = (0, 0);
            for (r, e) in pending.iter().zip(explored) {
                if owner.contains_key(&r.tuple) {
                    continue;
                }
                let hit = e.visited.iter().filter_map(|t| owner.get(t).copied()).min();
                let class = match hit {
                    Some(c) => c,
                    None => {
                        let inv = r.flag.invariant();
                        if class_invariants.iter().any(|(c, i)| *c == codim && *i == inv) {
                            inconclusive += 1;
                        }
                        class_invariants.push((codim, inv));
                        new_orbits += 1;
                        class_invariants.len() - 1
                    }
                };
                for t in e.visited {
                    owner.entry(t).or_insert(class);
                }
            }
            total += new_orbits;
            let squares = level.iter().map(|r| r.flag.entries.last().expect("nonempty flag").unscaled_square.clone());
            let (min, max) = squares.fold((None, None), |(lo, hi): (Option<BigInt>, Option<BigInt>), s| {
                (Some(lo.map_or(s.clone(), |x| x.min(s.clone()))), Some(hi.map_or(s.clone(), |x| x.max(s))))
            });
            rows.push(CensusRow {
                codim,
                depth: d,
                flags: level.len(),
                new_orbits,
                total_orbits: total,
                inconclusive,
                min_unscaled_square: min,
                max_unscaled_square: max,
            });
        }
    }
    Ok(Census {
        lattice: lattice.name().to_string(),
        squares: spec.squares().to_vec(),
        depth,
        word_budget,
        generators: generators.len(),
        chambers: tess.nodes.len(),
        status: tess.status(),
        rows,
    })
}

fn oriented(flag: &Flag) -> Vec<LatticeVector> {
    flag.entries.iter().map(|e| e.oriented()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chambers::perturb_off_walls;
    use crate::lattice::blocks::*;

    fn v(c: &[i64]) -> LatticeVector {
        LatticeVector::from_i64s(c)
    }

    fn u_a1() -> Lattice {
        Lattice::direct_sum("U+A1m2", &[&hyperbolic_plane(), &rank_one(-2)]).unwrap()
    }

    fn u_2a1() -> Lattice {
        Lattice::direct_sum("U+2A1m2", &[&hyperbolic_plane(), &rank_one(-2), &rank_one(-2)]).unwrap()
    }

    #[test]
    fn reflection_in_a_coordinate_root() {
        let l = u_a1();
        let r = reflection(&l, &v(&[0, 0, 1])).unwrap();
        assert_eq!(r.apply(&v(&[0, 0, 1])), v(&[0, 0, -1]));
        assert_eq!(r.apply(&v(&[1, 0, 0])), v(&[1, 0, 0]));
        assert_eq!(r.apply(&v(&[0, 1, 0])), v(&[0, 1, 0]));
        assert!(r.compose(&r).is_identity());
    }

    #[test]
    fn reflection_in_hyperbolic_plane_swaps_basis() {
        let l = hyperbolic_plane();
        let r = reflection(&l, &v(&[1, -1])).unwrap();
        assert_eq!(r.apply(&v(&[1, 0])), v(&[0, 1]));
        assert_eq!(r.apply(&v(&[0, 1])), v(&[1, 0]));
    }

    #[test]
    fn reflection_integrality() {
        let l = Lattice::direct_sum("A1m4+U", &[&rank_one(-4), &hyperbolic_plane()]).unwrap();
        let r = reflection(&l, &v(&[1, 0, 0])).unwrap();
        assert_eq!(r.apply(&v(&[1, 0, 0])), v(&[-1, 0, 0]));
        let err = reflection(&u_a1(), &v(&[1, -2, 0])).unwrap_err();
        assert!(matches!(err, Error::NonIntegralReflection { basis_index: 1, .. }), "{err:?}");
        assert!(matches!(reflection(&l, &v(&[0, 1, 0])), Err(Error::Isotropic(_))));
        assert!(matches!(reflection(&l, &v(&[0, 0, 0])), Err(Error::ZeroVector)));
    }

    #[test]
    fn isometry_validation_and_group_operations() {
        let l = u_2a1();
        assert!(matches!(Isometry::new(&l, linalg::identity(3)), Err(Error::RankMismatch { .. })));
        let mut m = linalg::identity(4);
        m[0][0] = BigInt::from(2);
        assert!(matches!(Isometry::new(&l, m), Err(Error::NotAnIsometry)));
        let a = reflection(&l, &v(&[1, -1, 0, 0])).unwrap();
        let b = reflection(&l, &v(&[0, 1, 1, 0])).unwrap();
        let ab = a.compose(&b);
        let checked = Isometry::new(&l, ab.matrix().clone()).unwrap();
        assert_eq!(checked, ab);
        let inv = ab.inverse();
        assert!(Isometry::new(&l, inv.matrix().clone()).is_ok());
        assert!(ab.compose(&inv).is_identity());
        let x = v(&[3, -1, 2, 5]);
        assert_eq!(l.square(&ab.apply(&x)), l.square(&x));
    }

    #[test]
    fn generators_round_trip_through_json() {
        let l = u_a1();
        let gens = small_isometry_generators(&l);
        let json = serde_json::Value::Array(gens.iter().map(Isometry::to_json).collect());
        assert_eq!(load_generators(&l, &json).unwrap(), gens);
        let wrapped = serde_json::json!({ "generators": json });
        assert_eq!(load_generators(&l, &wrapped).unwrap(), gens);
        let bad = serde_json::json!([[[2, 0, 0], [0, 1, 0], [0, 0, 1]]]);
        assert!(matches!(load_generators(&l, &bad), Err(Error::NotAnIsometry)));
        assert!(matches!(load_generators(&l, &serde_json::json!(3)), Err(Error::Parse(_))));
    }

    #[test]
    fn unimodular_reflective_walls_are_roots() {
        let l = k3();
        assert!(matches!(check_square_bound_reflective(&l, &v(&[0; 22])), Err(Error::ZeroVector)));
        let mut basis_root = vec![0i64; 22];
        basis_root[6] = 1;
        assert!(check_square_bound_reflective(&l, &v(&basis_root)).unwrap());
        let mut minus_four = vec![0i64; 22];
        minus_four[0] = 1;
        minus_four[1] = -2;
        assert!(!check_square_bound_reflective(&l, &v(&minus_four)).unwrap());
    }

    #[test]
    fn hilbert_scheme_summand_is_reflective_within_bound() {
        for n in 2..=5 {
            let l = k3n(n);
            let mut e = vec![0i64; 23];
            e[22] = 1;
            assert_eq!(l.square(&v(&e)), BigInt::from(-2 * (n - 1)));
            assert!(check_square_bound_reflective(&l, &v(&e)).unwrap());
        }
    }

    #[test]
    fn fixed_vector_is_its_own_rep() {
        let l = u_a1();
        let gens = vec![reflection(&l, &v(&[0, 0, 1])).unwrap()];
        let rep = canonical_orbit_rep(&l, &v(&[2, 3, 0]), &gens, 4).unwrap();
        assert_eq!(rep.rep, v(&[2, 3, 0]));
        assert!(rep.complete);
        assert_eq!(rep.explored, 1);
    }

    #[test]
    fn two_reflection_orbit() {
        let l = u_a1();
        let gens = vec![reflection(&l, &v(&[0, 0, 1])).unwrap(), reflection(&l, &v(&[1, -1, 0])).unwrap()];
        let rep = canonical_orbit_rep(&l, &v(&[0, 0, 1]), &gens, 6).unwrap();
        assert_eq!(rep.rep, v(&[0, 0, -1]));
        assert!(rep.complete);
        assert_eq!(orbit_relation(&l, &v(&[0, 0, 1]), &v(&[0, 0, -1]), &gens, 4).unwrap(), OrbitRelation::Same);
        // different squares
        assert_eq!(orbit_relation(&l, &v(&[0, 0, 1]), &v(&[1, 0, 0]), &gens, 4).unwrap(), OrbitRelation::Different);
        // both orbits are finite and disjoint
        assert_eq!(orbit_relation(&l, &v(&[0, 0, 1]), &v(&[1, -1, 0]), &gens, 6).unwrap(), OrbitRelation::Different);
    }

    #[test]
    fn orbit_relation_admits_ignorance() {
        let l = u_a1();
        let gens = vec![reflection(&l, &v(&[0, 1, 1])).unwrap(), reflection(&l, &v(&[1, 0, 1])).unwrap()];
        // same square and divisibility, nothing explored
        let rel = orbit_relation(&l, &v(&[0, 0, 1]), &v(&[2, 4, 3]), &gens, 0).unwrap();
        assert_eq!(rel, OrbitRelation::Inconclusive);
    }

    #[test]
    fn root_orbit_counts_stabilize() {
        let l = u_a1();
        let gens = small_isometry_generators(&l);
        let roots = vectors_of_square(&l, -2, 5);
        let counts: Vec<usize> = [4usize, 6, 8]
            .iter()
            .map(|&b| {
                roots
                    .iter()
                    .map(|r| canonical_orbit_rep(&l, r, &gens, b).unwrap().rep)
                    .collect::<BTreeSet<_>>()
                    .len()
            })
            .collect();
        assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{counts:?}");
        assert_eq!(counts[1], counts[2], "{counts:?}");
    }

    #[test]
    fn split_of_a_degenerate_lattice() {
        let l = Lattice::direct_sum("Z0+U+A1m2", &[&rank_one(0), &hyperbolic_plane(), &rank_one(-2)]).unwrap();
        let split = DegenerateSplit::new(&l).unwrap();
        assert_eq!(split.kernel_gen, v(&[1, 0, 0, 0]));
        assert_eq!(split.complement.signature(), crate::Signature::new(1, 2));
        let x = v(&[5, -2, 3, 7]);
        let (c, k) = split.decompose(&x);
        assert_eq!(split.compose(&c, &k), x);
        for g in kernel_generators(&split) {
            assert!(Isometry::new(&l, g.matrix().clone()).is_ok());
            assert_eq!(g.apply(&split.kernel_gen), split.kernel_gen);
        }
        let flip = split.kernel_flip();
        assert_eq!(flip.apply(&split.kernel_gen), -&split.kernel_gen);
        assert!(matches!(DegenerateSplit::new(&hyperbolic_plane()), Err(Error::KernelDimension(0))));
    }

    fn connected_reps(l: &Lattice, r: i64, reps: &[LatticeVector], budget: usize) {
        let split = DegenerateSplit::new(l).unwrap();
        let gens = kernel_generators(&split);
        let rep_set: BTreeSet<&LatticeVector> = reps.iter().collect();
        for x in vectors_of_square(l, r, 8) {
            if split.complement_part(&x).is_zero() {
                continue;
            }
            let e = explore(std::slice::from_ref(&x), &gens, budget);
            let hits: Vec<&LatticeVector> = e.visited.iter().map(|t| &t[0]).filter(|y| rep_set.contains(y)).collect();
            assert_eq!(hits.len(), 1, "{x} reaches {hits:?}");
        }
    }

    #[test]
    fn kneser_reps_of_a_rank_one_complement() {
        let l = Lattice::direct_sum("Z0+A1m2", &[&rank_one(0), &rank_one(-2)]).unwrap();
        let reps = kneser_degenerate_reps(&l, -2, &[v(&[0, 1])]).unwrap();
        assert_eq!(reps, vec![v(&[0, 1])]);
        connected_reps(&l, -2, &reps, 6);
        let reps = kneser_degenerate_reps(&l, -8, &[v(&[0, 2])]).unwrap();
        assert_eq!(reps, vec![v(&[0, 2]), v(&[1, 2])]);
        connected_reps(&l, -8, &reps, 6);
    }

    #[test]
    fn kneser_reps_of_isotropic_classes() {
        let l = Lattice::direct_sum("Z0+U", &[&rank_one(0), &hyperbolic_plane()]).unwrap();
        let split = DegenerateSplit::new(&l).unwrap();
        let base: Vec<LatticeVector> = base_orbit_reps(&split.complement, 0, 4, 4)
            .iter()
            .map(|c| split.compose(c.coords(), &BigInt::zero()))
            .collect();
        let mut with_zero = base.clone();
        with_zero.push(v(&[0, 0, 0]));
        let reps = kneser_degenerate_reps(&l, 0, &with_zero).unwrap();
        for a in &base {
            let d = split.ideal_generator(a);
            let count = reps.iter().filter(|r| &split.complement_part(r) == a).count();
            assert_eq!(BigInt::from(count), d);
        }
        assert!(reps.iter().all(|r| !split.complement_part(r).is_zero()));
    }

    #[test]
    fn kneser_errors_and_empty_cases() {
        let l = Lattice::direct_sum("Z0+A1m2", &[&rank_one(0), &rank_one(-2)]).unwrap();
        assert!(kneser_degenerate_reps(&l, -6, &[]).unwrap().is_empty());
        let err = kneser_degenerate_reps(&l, -4, &[v(&[0, 1])]).unwrap_err();
        assert!(matches!(err, Error::SquareMismatch { .. }));
        assert!(matches!(kneser_degenerate_reps(&u_a1(), -2, &[]), Err(Error::KernelDimension(0))));
    }

    #[test]
    fn census_at_depth_zero_sees_the_base_chamber() {
        let l = u_a1();
        let spec = WallSpec::roots();
        let base = perturb_off_walls(&l, &v(&[1, 1, 0]).to_rational(), &spec).unwrap();
        let gens = facet_reflections(&l, &base, &spec, 1024).unwrap();
        let c = face_orbit_census(&l, &base, &spec, &gens, 0, 4, 1024).unwrap();
        assert_eq!(c.chambers, 1);
        let facets = facets_at(&l, &base, &spec, 1024).unwrap().faces.len();
        assert_eq!(c.rows[0].flags, facets);
        assert_eq!(c.rows.iter().filter(|r| r.codim == 1).count(), 1);
    }

    #[test]
    fn census_saturates_for_the_root_arrangement() {
        let l = u_a1();
        let spec = WallSpec::roots();
        let base = perturb_off_walls(&l, &v(&[1, 1, 0]).to_rational(), &spec).unwrap();
        let gens = facet_reflections(&l, &base, &spec, 1024).unwrap();
        let c = face_orbit_census(&l, &base, &spec, &gens, 4, 4, 1024).unwrap();
        assert_eq!(c.status, SearchStatus::Certified);
        let profile = c.saturation(1);
        assert_eq!(profile.len(), 5);
        assert_eq!(&profile[3..], &[0, 0], "{profile:?}");
        let text = c.to_text();
        assert!(text.lines().nth(1).unwrap().contains("inconclusive"));
        assert!(c.to_json()["saturation"]["codim1"].is_array());
    }

    #[test]
    fn codimension_two_flags_obey_the_root_bound() {
        let l = u_2a1();
        let spec = WallSpec::roots();
        let base = perturb_off_walls(&l, &v(&[1, 1, 0, 0]).to_rational(), &spec).unwrap();
        let gens = facet_reflections(&l, &base, &spec, 1024).unwrap();
        let c = face_orbit_census(&l, &base, &spec, &gens, 3, 4, 1024).unwrap();
        for row in c.rows.iter().filter(|r| r.codim == 2 && r.flags > 0) {
            assert!(row.min_unscaled_square.as_ref().unwrap() >= &BigInt::from(-8), "{row:?}");
            assert!(row.max_unscaled_square.as_ref().unwrap() < &BigInt::zero(), "{row:?}");
        }
    }
}
