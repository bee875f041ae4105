use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hkcone::{LatticeVector, RationalVector};

mod commands;
mod render;

#[derive(Parser, Debug)]
#[command(name = "hkcone", version, about = "Exact wall-and-chamber geometry of hyperbolic lattices")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Seed for randomized checks.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    /// Worker threads for parallel sections (output does not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
    Dot,
}

#[derive(Args, Debug, Clone)]
pub struct LatticeArgs {
    /// Catalog entry name (see `validate-catalog`).
    #[arg(long, conflicts_with = "lattice_file", required_unless_present = "lattice_file")]
    pub lattice: Option<String>,
    /// JSON file `{"name": ..., "gram": [[...]]}`.
    #[arg(long)]
    pub lattice_file: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SpecArgs {
    /// Allowed wall squares, comma separated (e.g. `-2,-4`).
    #[arg(long, default_value = "-2", allow_hyphen_values = true)]
    pub squares: String,
    /// Keep only walls whose reflection is integral.
    #[arg(long)]
    pub reflective: bool,
}

fn lattice_vector(s: &str) -> Result<LatticeVector, String> {
    LatticeVector::parse(s).map_err(|e| e.to_string())
}

fn rational_vector(s: &str) -> Result<RationalVector, String> {
    RationalVector::parse(s).map_err(|e| e.to_string())
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Rank, signature, discriminant and catalog metadata.
    Info {
        #[command(flatten)]
        lattice: LatticeArgs,
    },
    /// Vectors of a given square (exact in negative-definite lattices,
    /// otherwise inside a coordinate box).
    Enumerate {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, allow_hyphen_values = true)]
        square: i64,
        /// Coordinate box `max |v_i| <= box`; required for indefinite lattices.
        #[arg(long = "box")]
        bound: Option<i64>,
        /// Only primitive vectors.
        #[arg(long)]
        primitive: bool,
    },
    /// Walls strictly separating two positive classes.
    Separate {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, value_parser = rational_vector, allow_hyphen_values = true)]
        v0: RationalVector,
        #[arg(long, value_parser = rational_vector, allow_hyphen_values = true)]
        v1: RationalVector,
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Reflect a positive class into the chamber of a base class.
    Reduce {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, value_parser = rational_vector, allow_hyphen_values = true)]
        v: RationalVector,
        #[arg(long, value_parser = rational_vector, allow_hyphen_values = true)]
        base: RationalVector,
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Facets of the chamber of a base class.
    Facets {
        #[command(flatten)]
        lattice: LatticeArgs,
        /// Moved off any wall it lies on.
        #[arg(long, value_parser = rational_vector, allow_hyphen_values = true)]
        base: RationalVector,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = hkcone::chambers::DEFAULT_SEARCH_BOUND)]
        search_bound: i64,
    },
    /// Integral flag encoding of a chain of walls.
    Flag {
        #[command(flatten)]
        lattice: LatticeArgs,
        /// Walls in order, each oriented towards the chamber; repeat the flag
        /// or separate vectors with `;`.
        #[arg(long, required = true, allow_hyphen_values = true)]
        chain: Vec<String>,
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Breadth-first exploration of chambers around a base class.
    Explore {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, value_parser = rational_vector, allow_hyphen_values = true)]
        base: RationalVector,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long, default_value_t = hkcone::chambers::DEFAULT_SEARCH_BOUND)]
        search_bound: i64,
    },
    /// Bounded orbit search: representative of `v`, or relation to `w`.
    Orbits {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, value_parser = lattice_vector, allow_hyphen_values = true)]
        v: LatticeVector,
        #[arg(long, value_parser = lattice_vector, allow_hyphen_values = true)]
        w: Option<LatticeVector>,
        /// JSON list of generator matrices; defaults to reflections in small
        /// vectors and -1.
        #[arg(long)]
        generators: Option<PathBuf>,
        #[arg(long, default_value_t = 6)]
        budget: usize,
    },
    /// Orbit representatives of a square in a lattice with a one-dimensional kernel.
    Kneser {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, allow_hyphen_values = true)]
        r: i64,
        /// Complement representatives; computed by brute force when omitted.
        #[arg(long = "base-rep", value_parser = lattice_vector, allow_hyphen_values = true)]
        base_reps: Vec<LatticeVector>,
        /// Box for the brute-force complement representatives.
        #[arg(long = "box", default_value_t = 4)]
        bound: i64,
        #[arg(long, default_value_t = 4)]
        budget: usize,
    },
    /// Orbit census of facets and codimension-two faces.
    Census {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, value_parser = rational_vector, allow_hyphen_values = true)]
        base: RationalVector,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        /// Word length for orbit searches (default: 4).
        #[arg(long, default_value_t = 4)]
        budget: usize,
        /// JSON generator list; defaults to the integral reflections in the
        /// base chamber's facets.
        #[arg(long)]
        generators: Option<PathBuf>,
        #[arg(long, default_value_t = hkcone::chambers::DEFAULT_SEARCH_BOUND)]
        search_bound: i64,
    },
    /// Validate the catalog and search for integral reflections violating
    /// the discriminant bound.
    ValidateCatalog {
        /// Catalog file (default: $MBM_CATALOG_PATH or the built-in catalog).
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Random candidates per entry.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: cannot configure threads: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli.command, cli.format, cli.seed) {
        Ok(out) => match out.render(cli.format) {
            Some(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            None => {
                eprintln!("error: --format {} is not available for this subcommand", format!("{:?}", cli.format).to_lowercase());
                ExitCode::from(2)
            }
        },
        Err(e) => {
            let body = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{body}");
            ExitCode::from(1)
        }
    }
}
