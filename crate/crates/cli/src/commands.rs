use std::collections::BTreeMap;
use std::path::Path;

use hkcone::catalog::{Catalog, CatalogEntry};
use hkcone::chambers::{encode_flag, explore_tessellation, facets_at, perturb_off_walls, reduce_to_base, Face};
use hkcone::enumeration::{definite_short_vectors, separating_walls, vectors_of_square, Wall, WallSpec};
use hkcone::orbits::{
    base_orbit_reps, canonical_orbit_rep, check_square_bound_reflective, face_orbit_census, facet_reflections,
    kneser_degenerate_reps, load_generators, orbit_relation, small_isometry_generators, DegenerateSplit, Isometry,
};
use hkcone::{Error, Lattice, LatticeVector, RationalVector, Result};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::render;
use crate::{Command, Format, LatticeArgs, SpecArgs};

/// A command result with its available renderings.
pub struct Output {
    json: Value,
    text: Option<String>,
    dot: Option<String>,
}

impl Output {
    fn json(json: Value) -> Self {
        Output { json, text: None, dot: None }
    }

    pub fn render(&self, format: Format) -> Option<String> {
        match format {
            Format::Json => Some(format!("{}\n", serde_json::to_string_pretty(&self.json).expect("json"))),
            Format::Text => Some(self.text.clone().unwrap_or_else(|| render::text(&self.json))),
            Format::Dot => self.dot.clone(),
        }
    }
}

struct Loaded {
    lattice: Lattice,
    entry: Option<CatalogEntry>,
}

fn load_lattice(args: &LatticeArgs) -> Result<Loaded> {
    if let Some(path) = &args.lattice_file {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)?;
        return Ok(Loaded { lattice: Lattice::from_json(&value)?, entry: None });
    }
    let name = args.lattice.as_deref().expect("clap enforces a lattice source");
    let catalog = Catalog::from_env()?;
    let entry = catalog.get(name)?.clone();
    Ok(Loaded { lattice: entry.lattice.clone(), entry: Some(entry) })
}

fn spec(args: &SpecArgs) -> Result<WallSpec> {
    WallSpec::parse(&args.squares, args.reflective)
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn walls_json(walls: &[Wall]) -> Value {
    Value::Array(walls.iter().map(|w| json!(w.vector())).collect())
}

fn face_json(f: &Face) -> Value {
    json!({
        "wall": f.supporting_wall.vector(),
        "square": int_json(f.supporting_wall.square()),
        "orientation": f.orientation,
        "witness_on_wall": f.witness_on_wall,
    })
}

/// Integers as JSON numbers when they fit, strings otherwise.
fn int_json(x: &BigInt) -> Value {
    i64::try_from(x).map(Value::from).unwrap_or_else(|_| Value::from(x.to_string()))
}

/// A wall-free point near `base`, and whether it had to move.
fn chamber_point(l: &Lattice, base: &RationalVector, spec: &WallSpec) -> Result<(RationalVector, bool)> {
    let p = perturb_off_walls(l, base, spec)?;
    let moved = &p != base;
    Ok((p, moved))
}

pub fn run(command: &Command, _format: Format, seed: u64) -> Result<Output> {
    match command {
        Command::Info { lattice } => info(lattice),
        Command::Enumerate { lattice, square, bound, primitive } => enumerate(lattice, *square, *bound, *primitive),
        Command::Separate { lattice, v0, v1, spec: s } => {
            let l = load_lattice(lattice)?.lattice;
            let walls = separating_walls(&l, v0, v1, &spec(s)?)?;
            let text = walls.iter().map(|w| format!("{w}\n")).collect();
            Ok(Output { json: walls_json(&walls), text: Some(text), dot: None })
        }
        Command::Reduce { lattice, v, base, spec: s } => {
            let l = load_lattice(lattice)?.lattice;
            let red = reduce_to_base(&l, v, base, &spec(s)?)?;
            Ok(Output::json(json!({
                "word": walls_json(&red.word),
                "image": red.image,
                "canonical": red.canonical,
                "separating_counts": red.separating_counts,
            })))
        }
        Command::Facets { lattice, base, spec: s, search_bound } => {
            let l = load_lattice(lattice)?.lattice;
            let spec = spec(s)?;
            let (witness, moved) = chamber_point(&l, base, &spec)?;
            let rep = facets_at(&l, &witness, &spec, *search_bound)?;
            Ok(Output::json(json!({
                "base": base,
                "witness": witness,
                "perturbed": moved,
                "status": rep.status,
                "band": rep.band.to_string(),
                "facets": rep.faces.iter().map(face_json).collect::<Vec<_>>(),
                "rays": rep.rays,
            })))
        }
        Command::Flag { lattice, chain, spec: s } => {
            let l = load_lattice(lattice)?.lattice;
            let vectors = chain
                .iter()
                .flat_map(|c| c.split(';'))
                .filter(|c| !c.trim().is_empty())
                .map(LatticeVector::parse)
                .collect::<Result<Vec<_>>>()?;
            let flag = encode_flag(&l, &vectors, &spec(s)?)?;
            Ok(Output::json(json!({ "depth": flag.depth(), "entries": flag.entries })))
        }
        Command::Explore { lattice, base, spec: s, depth, search_bound } => {
            let l = load_lattice(lattice)?.lattice;
            let spec = spec(s)?;
            let (witness, moved) = chamber_point(&l, base, &spec)?;
            let t = explore_tessellation(&l, &witness, &spec, *depth, *search_bound)?;
            let mut j = t.to_json();
            j["base"] = json!(base);
            j["perturbed"] = json!(moved);
            let mut text = String::new();
            for n in &t.nodes {
                text.push_str(&format!(
                    "node {} depth {} key {:016x} witness {} facets {} {}\n",
                    n.id,
                    n.depth,
                    hkcone::chambers::key_hash(&n.key),
                    n.witness,
                    n.facets.faces.len(),
                    n.facets.status.as_str()
                ));
            }
            for e in &t.edges {
                text.push_str(&format!("edge {} -- {} {}\n", e.from, e.to, e.wall));
            }
            Ok(Output { json: j, text: Some(text), dot: Some(t.to_dot()) })
        }
        Command::Orbits { lattice, v, w, generators, budget } => {
            let l = load_lattice(lattice)?.lattice;
            let gens = match generators {
                Some(p) => load_generators(&l, &read_json(p)?)?,
                None => small_isometry_generators(&l),
            };
            let rep = canonical_orbit_rep(&l, v, &gens, *budget)?;
            let mut j = json!({
                "v": v,
                "rep": rep.rep,
                "explored": rep.explored,
                "complete": rep.complete,
                "generators": gens.len(),
                "budget": budget,
            });
            if let Some(w) = w {
                j["w"] = json!(w);
                j["relation"] = json!(orbit_relation(&l, v, w, &gens, *budget)?);
            }
            Ok(Output::json(j))
        }
        Command::Kneser { lattice, r, base_reps, bound, budget } => {
            let l = load_lattice(lattice)?.lattice;
            let split = DegenerateSplit::new(&l)?;
            let base: Vec<LatticeVector> = if base_reps.is_empty() {
                base_orbit_reps(&split.complement, *r, *bound, *budget)
                    .iter()
                    .map(|c| split.compose(c.coords(), &BigInt::zero()))
                    .collect()
            } else {
                base_reps.clone()
            };
            let reps = kneser_degenerate_reps(&l, *r, &base)?;
            let ideals: Vec<Value> = base
                .iter()
                .map(|a| {
                    let a0 = split.complement_part(a);
                    json!({ "base_rep": a0, "ideal": split.ideal_generator(&a0).to_string() })
                })
                .collect();
            Ok(Output::json(json!({
                "kernel": split.kernel_gen,
                "r": r,
                "base_reps": ideals,
                "reps": reps,
            })))
        }
        Command::Census { lattice, base, spec: s, depth, budget, generators, search_bound } => {
            let l = load_lattice(lattice)?.lattice;
            let spec = spec(s)?;
            let (witness, _) = chamber_point(&l, base, &spec)?;
            let gens: Vec<Isometry> = match generators {
                Some(p) => load_generators(&l, &read_json(p)?)?,
                None => facet_reflections(&l, &witness, &spec, *search_bound)?,
            };
            let c = face_orbit_census(&l, &witness, &spec, &gens, *depth, *budget, *search_bound)?;
            let mut j = c.to_json();
            j["witness"] = json!(witness);
            Ok(Output { json: j, text: Some(c.to_text()), dot: None })
        }
        Command::ValidateCatalog { catalog, samples } => validate_catalog(catalog.as_deref(), *samples, seed),
    }
}

fn info(args: &LatticeArgs) -> Result<Output> {
    let Loaded { lattice: l, entry } = load_lattice(args)?;
    let sig = l.signature();
    let mut j = json!({
        "name": l.name(),
        "rank": l.rank(),
        "signature": [sig.positive, sig.negative],
        "discriminant": int_json(l.discriminant()),
        "kernel_dimension": l.kernel_dimension(),
        "even": l.is_even(),
    });
    if let Some(e) = entry {
        let meta = e.to_json();
        for key in ["fujiki_constant", "mbm_square_bound", "curve_square_bound", "notes"] {
            j[key] = meta[key].clone();
        }
    }
    Ok(Output::json(j))
}

fn enumerate(args: &LatticeArgs, square: i64, bound: Option<i64>, primitive: bool) -> Result<Output> {
    let l = load_lattice(args)?.lattice;
    let mut vectors = match bound {
        Some(b) => vectors_of_square(&l, square, b),
        None if l.is_negative_definite() && square < 0 => {
            let mut out = Vec::new();
            for v in definite_short_vectors(&l, square)? {
                if l.square(&v) == BigInt::from(square) {
                    out.push(-&v);
                    out.push(v);
                }
            }
            out.sort();
            out
        }
        None => {
            return Err(Error::InvalidSpec(
                "--box is required unless the lattice is negative definite and the square negative".into(),
            ))
        }
    };
    if primitive {
        vectors.retain(LatticeVector::is_primitive);
    }
    Ok(Output::json(json!({ "square": square, "count": vectors.len(), "vectors": vectors })))
}

/// Sparse random vectors: 1 to 4 nonzero coordinates in `[-3, 3]`.
fn random_candidate(rng: &mut ChaCha8Rng, rank: usize) -> Vec<i64> {
    let mut c = vec![0i64; rank];
    let k = rng.gen_range(1..=4.min(rank));
    for _ in 0..k {
        let i = rng.gen_range(0..rank);
        c[i] = rng.gen_range(-3..=3);
    }
    c
}

fn validate_catalog(path: Option<&Path>, samples: usize, seed: u64) -> Result<Output> {
    let catalog = match path {
        Some(p) => Catalog::load(p)?,
        None => Catalog::from_env()?,
    };
    let mut entries = Vec::new();
    for (idx, e) in catalog.entries().iter().enumerate() {
        let l = &e.lattice;
        let mut j = json!({
            "name": e.name,
            "rank": l.rank(),
            "signature": [e.signature.positive, e.signature.negative],
            "discriminant": int_json(&e.discriminant),
            "valid": true,
        });
        if l.is_degenerate() {
            j["reflection_check"] = json!({ "skipped": "degenerate lattice, no discriminant bound" });
            entries.push(j);
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(idx as u64));
        let mut by_square: BTreeMap<String, usize> = BTreeMap::new();
        let mut negative = 0;
        for _ in 0..samples {
            let c = random_candidate(&mut rng, l.rank());
            let s = LatticeVector::from_i64s(&c);
            if s.is_zero() {
                continue;
            }
            let s = s.primitive();
            if !l.square(&s).is_negative() {
                continue;
            }
            negative += 1;
            if check_square_bound_reflective(l, &s)? {
                *by_square.entry(l.square(&s).to_string()).or_default() += 1;
            }
        }
        j["reflection_check"] = json!({
            "samples": samples,
            "negative": negative,
            "bound": int_json(&(&e.discriminant * BigInt::from(2))),
            "reflective_by_square": by_square,
        });
        entries.push(j);
    }
    Ok(Output::json(json!({ "entries": entries, "valid": true, "seed": seed })))
}
