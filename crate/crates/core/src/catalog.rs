//! Shipped lattice data for named deformation types and toy lattices.
//!
//! Every entry is re-validated when loaded: the Gram matrix must define a
//! lattice, and the recorded signature and discriminant must equal the
//! recomputed ones. Entries named `K3` and `K3[n]` are additionally checked
//! against the known invariants of those lattices.

use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Serialize, Serializer};

use crate::arith::{format_rational, parse_rational};
use crate::error::{Error, Result};
use crate::lattice::{parse_gram, Lattice, Signature};

/// Environment variable naming a catalog file that replaces the built-in one.
pub const CATALOG_PATH_VAR: &str = "MBM_CATALOG_PATH";

const BUILTIN: &str = include_str!("../data/catalog.json");

/// Fujiki constant `c` in `int a^{2n} = c q(a)^n`, when recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FujikiConstant {
    Known(u64),
    Unknown,
}

impl Serialize for FujikiConstant {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            FujikiConstant::Known(c) => s.serialize_u64(*c),
            FujikiConstant::Unknown => s.serialize_str("unknown"),
        }
    }
}

/// Bound `C` on `|q(s,s)|` for wall classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SquareBound {
    Known(i64),
    /// Not established; the value is a working assumption.
    Conjectural(String),
}

impl SquareBound {
    /// The number to use for desk-scale computations.
    pub fn value(&self) -> Option<i64> {
        match self {
            SquareBound::Known(c) => Some(*c),
            SquareBound::Conjectural(v) => v.parse().ok(),
        }
    }
}

impl Serialize for SquareBound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SquareBound::Known(c) => s.serialize_i64(*c),
            SquareBound::Conjectural(v) => s.serialize_str(&format!("conjectural:{v}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CatalogEntry {
    pub name: String,
    #[serde(skip)]
    pub lattice: Lattice,
    pub signature: Signature,
    #[serde(with = "crate::enumeration::bigint_json")]
    pub discriminant: BigInt,
    pub fujiki_constant: FujikiConstant,
    pub mbm_square_bound: SquareBound,
    /// Lower bound on squares of curve classes, for Hilbert schemes.
    #[serde(serialize_with = "opt_rational")]
    pub curve_square_bound: Option<BigRational>,
    pub notes: Vec<String>,
}

fn opt_rational<S: Serializer>(x: &Option<BigRational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(r) => s.serialize_str(&format_rational(r)),
        None => s.serialize_none(),
    }
}

impl CatalogEntry {
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("entry serializes");
        v["gram"] = self.lattice.to_json()["gram"].clone();
        v
    }
}

/// A validated list of entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Catalog {
    entries: Vec<CatalogEntry>,
}

impl Catalog {
    /// The catalog compiled into the library.
    pub fn builtin() -> Result<Self> {
        Self::from_json_str(BUILTIN)
    }

    /// The file named by `MBM_CATALOG_PATH` if set, else the built-in data.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(CATALOG_PATH_VAR) {
            Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
            _ => Self::builtin(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let list = value.as_array().ok_or_else(|| Error::Parse("catalog must be a JSON array".into()))?;
        let entries = list.iter().map(parse_entry).collect::<Result<Vec<_>>>()?;
        for (i, e) in entries.iter().enumerate() {
            if entries[..i].iter().any(|f| f.name == e.name) {
                return Err(Error::Catalog { entry: e.name.clone(), reason: "duplicate name".into() });
            }
        }
        Ok(Catalog { entries })
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&CatalogEntry> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::UnknownLattice(name.to_string()))
    }
}

/// Loads and validates a catalog file.
pub fn load_catalog(path: &Path) -> Result<Vec<CatalogEntry>> {
    Ok(Catalog::load(path)?.entries)
}

fn catalog_err(entry: &str, reason: impl Into<String>) -> Error {
    Error::Catalog { entry: entry.to_string(), reason: reason.into() }
}

fn parse_entry(value: &serde_json::Value) -> Result<CatalogEntry> {
    let name = value
        .get("name")
        .and_then(|n| n.as_str())
        .ok_or_else(|| Error::Parse("catalog entry without a name".into()))?
        .to_string();
    let field = |key: &str| value.get(key).ok_or_else(|| catalog_err(&name, format!("missing field {key}")));

    let gram = parse_gram(field("gram")?).map_err(|e| catalog_err(&name, e.to_string()))?;
    let lattice = Lattice::new(name.clone(), gram).map_err(|e| catalog_err(&name, e.to_string()))?;

    let sig = field("signature")?
        .as_array()
        .filter(|a| a.len() == 2)
        .and_then(|a| Some(Signature::new(a[0].as_u64()? as usize, a[1].as_u64()? as usize)))
        .ok_or_else(|| catalog_err(&name, "signature must be [p, m]"))?;
    let discriminant = crate::vector::int_from_json(field("discriminant")?)
        .ok_or_else(|| catalog_err(&name, "discriminant must be an integer"))?;
    if lattice.signature() != sig {
        return Err(catalog_err(&name, format!("recorded signature {sig} but the gram matrix has {}", lattice.signature())));
    }
    if lattice.discriminant() != &discriminant {
        return Err(catalog_err(
            &name,
            format!("recorded discriminant {discriminant} but the gram matrix has {}", lattice.discriminant()),
        ));
    }

    let fujiki_constant = match field("fujiki_constant")? {
        serde_json::Value::String(s) if s == "unknown" => FujikiConstant::Unknown,
        v => match v.as_u64() {
            Some(c) if c > 0 => FujikiConstant::Known(c),
            _ => return Err(catalog_err(&name, "fujiki_constant must be a positive integer or \"unknown\"")),
        },
    };
    let mbm_square_bound = match field("mbm_square_bound")? {
        serde_json::Value::String(s) => match s.strip_prefix("conjectural:") {
            Some(v) => SquareBound::Conjectural(v.to_string()),
            None => return Err(catalog_err(&name, "mbm_square_bound string must start with \"conjectural:\"")),
        },
        v => SquareBound::Known(
            v.as_i64()
                .filter(|c| *c > 0)
                .ok_or_else(|| catalog_err(&name, "mbm_square_bound must be a positive integer"))?,
        ),
    };
    let curve_square_bound = match value.get("curve_square_bound") {
        None | Some(serde_json::Value::Null) => None,
        Some(v) => Some(
            v.as_str()
                .and_then(parse_rational)
                .ok_or_else(|| catalog_err(&name, "curve_square_bound must be a rational string"))?,
        ),
    };
    let notes = match value.get("notes") {
        None => Vec::new(),
        Some(serde_json::Value::String(s)) => vec![s.clone()],
        Some(serde_json::Value::Array(a)) => a
            .iter()
            .map(|n| n.as_str().map(str::to_string))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| catalog_err(&name, "notes must be strings"))?,
        Some(_) => return Err(catalog_err(&name, "notes must be a string or a list of strings")),
    };

    let entry = CatalogEntry {
        name,
        lattice,
        signature: sig,
        discriminant,
        fujiki_constant,
        mbm_square_bound,
        curve_square_bound,
        notes,
    };
    check_named_invariants(&entry)?;
    Ok(entry)
}

/// `K3[n]` for `n >= 2`, parsed from the entry name.
fn hilbert_scheme_points(name: &str) -> Option<i64> {
    let n: i64 = name.strip_prefix("K3[")?.strip_suffix(']')?.parse().ok()?;
    (n >= 2).then_some(n)
}

fn double_factorial_ratio(n: i64) -> u64 {
    // (2n)! / (n! 2^n) = 1 * 3 * 5 * ... * (2n - 1)
    (1..=n).map(|k| (2 * k - 1) as u64).product()
}

fn check_named_invariants(e: &CatalogEntry) -> Result<()> {
    let l = &e.lattice;
    if e.name == "K3" {
        if l.rank() != 22 || l.signature() != Signature::new(3, 19) || !l.discriminant().to_i64().is_some_and(|d| d == 1) {
            return Err(catalog_err(&e.name, "a K3 lattice has rank 22, signature (3, 19) and discriminant 1"));
        }
        if !l.is_even() {
            return Err(catalog_err(&e.name, "a K3 lattice is even"));
        }
    }
    if let Some(n) = hilbert_scheme_points(&e.name) {
        if l.rank() != 23 || l.signature() != Signature::new(3, 20) {
            return Err(catalog_err(&e.name, "a K3[n] lattice has rank 23 and signature (3, 20)"));
        }
        if l.discriminant() != &BigInt::from(2 * (n - 1)) {
            return Err(catalog_err(&e.name, format!("a K3[{n}] lattice has discriminant {}", 2 * (n - 1))));
        }
        if let FujikiConstant::Known(c) = e.fujiki_constant {
            if c != double_factorial_ratio(n) {
                return Err(catalog_err(&e.name, format!("Fujiki constant of K3[{n}] is {}", double_factorial_ratio(n))));
            }
        }
        if let Some(b) = &e.curve_square_bound {
            if b != &BigRational::new(BigInt::from(-(n + 3)), BigInt::from(2)) {
                return Err(catalog_err(&e.name, format!("curve square bound of K3[{n}] is -({n}+3)/2")));
            }
        }
        if let SquareBound::Known(c) = e.mbm_square_bound {
            if c != 2 * (n - 1) * (n - 1) * (n + 3) {
                return Err(catalog_err(&e.name, format!("square bound of K3[{n}] is 2(n-1)^2(n+3)")));
            }
        }
    }
    Ok(())
}
