//! Fixtures shared by the benchmarks.

use hkcone::catalog::Catalog;
use hkcone::chambers::perturb_off_walls;
use hkcone::enumeration::WallSpec;
use hkcone::{Lattice, LatticeVector, RationalVector};

/// A catalog lattice with a wall-free base point near `(1, 1, 0, ...)`.
pub struct Fixture {
    pub lattice: Lattice,
    pub spec: WallSpec,
    pub base: RationalVector,
}

impl Fixture {
    pub fn new(name: &str, squares: &[i64]) -> Self {
        let lattice = Catalog::builtin().expect("catalog").get(name).expect("entry").lattice.clone();
        let spec = WallSpec::new(squares.iter().copied(), false).expect("spec");
        let mut c = vec![0i64; lattice.rank()];
        c[0] = 1;
        c[1] = 1;
        let base = perturb_off_walls(&lattice, &LatticeVector::from_i64s(&c).to_rational(), &spec).expect("base");
        Fixture { lattice, spec, base }
    }

    /// A positive class `k` chambers-ish away from the base: the base scaled
    /// along the first hyperbolic coordinate.
    pub fn far_point(&self, k: i64) -> RationalVector {
        let mut c = vec![0i64; self.lattice.rank()];
        c[0] = 1;
        c[1] = k;
        for x in c.iter_mut().skip(2) {
            *x = 1;
        }
        LatticeVector::from_i64s(&c).to_rational()
    }
}
