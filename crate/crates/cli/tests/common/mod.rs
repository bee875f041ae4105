#![allow(dead_code)]

use std::path::PathBuf;
use std::process::Command;

/// Golden cases: file stem and arguments.
pub const CASES: &[(&str, &[&str])] = &[
    ("info_k3", &["info", "--lattice", "K3"]),
    ("info_k3n2_text", &["info", "--lattice", "K3[2]", "--format", "text"]),
    ("info_file", &["info", "--lattice-file", "tests/golden/lattice_a2m.json"]),
    ("enumerate_e8", &["enumerate", "--lattice", "E8m", "--square", "-2"]),
    ("enumerate_u_box", &["enumerate", "--lattice", "U+A1m2", "--square", "-2", "--box", "3", "--primitive"]),
    ("separate_u_a1", &["separate", "--lattice", "U+A1m2", "--v0", "1,1,0", "--v1", "3,2,2", "--squares", "-2"]),
    ("separate_rational", &["separate", "--lattice", "U+2A1m2", "--v0", "2,3/2,0,0", "--v1", "5,4,1,1", "--squares", "-2,-4"]),
    ("reduce_u_a1", &["reduce", "--lattice", "U+A1m2", "--v", "3,2,2", "--base", "1,1,0", "--squares", "-2"]),
    ("reduce_deep", &["reduce", "--lattice", "U+2A1m2", "--v", "9,5,3,2", "--base", "5,4,1/3,1/7"]),
    ("facets_u_a1", &["facets", "--lattice", "U+A1m2", "--base", "3,2,0"]),
    ("facets_two_squares", &["facets", "--lattice", "U+2A1m2", "--base", "5,4,1/3,1/7", "--squares", "-2,-4"]),
    ("facets_text", &["facets", "--lattice", "A1+A1m2", "--base", "3,1", "--format", "text"]),
    ("flag_orthogonal", &["flag", "--lattice", "U+2A1m2", "--chain", "0,0,1,0;0,0,0,1"]),
    ("flag_reflective", &["flag", "--lattice", "U+A1m2+A1m4", "--chain", "0,0,1,0", "--chain", "1,-1,0,0", "--squares", "-2,-4"]),
    ("explore_u_a1", &["explore", "--lattice", "U+A1m2", "--base", "3,2,0", "--depth", "2"]),
    ("explore_dot", &["explore", "--lattice", "U+2A1m2", "--base", "5,4,1/3,1/7", "--depth", "2", "--format", "dot"]),
    ("explore_text", &["explore", "--lattice", "U+2A1m2", "--base", "5,4,1/3,1/7", "--squares", "-2,-4", "--depth", "1", "--format", "text"]),
    ("orbits_rep", &["orbits", "--lattice", "U+A1m2", "--v", "2,4,3"]),
    ("orbits_relation", &["orbits", "--lattice", "U+A1m2", "--v", "0,0,1", "--w", "1,-1,0"]),
    ("kneser_z0_a1", &["kneser", "--lattice", "Z0+A1m2", "--r", "-2"]),
    ("kneser_z0_u", &["kneser", "--lattice", "Z0+U", "--r", "2"]),
    ("census_u_a1", &["census", "--lattice", "U+A1m2", "--base", "3,2,0", "--depth", "4"]),
    ("census_text", &["census", "--lattice", "U+2A1m2", "--base", "5,4,1/3,1/7", "--depth", "2", "--format", "text"]),
    ("validate_catalog", &["validate-catalog", "--samples", "500", "--seed", "7"]),
    ("error_unknown_lattice", &["info", "--lattice", "Nope"]),
    ("error_reference_not_positive", &["reduce", "--lattice", "U+A1m2", "--v", "3,2,2", "--base", "1,1,1"]),
    ("error_not_positive", &["separate", "--lattice", "U+A1m2", "--v0", "1,1,0", "--v1", "0,0,1"]),
    ("error_usage", &["frobnicate"]),
    ("error_format", &["info", "--lattice", "K3", "--format", "dot"]),
];

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Run {
    /// Exit code, stdout and the first stderr line (usage messages carry
    /// clap's wording, which is not part of the contract).
    pub fn transcript(&self) -> String {
        let first = self.stderr.lines().next().unwrap_or("");
        format!("exit: {}\n--- stdout\n{}--- stderr\n{}\n", self.code, self.stdout, first)
    }
}

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn run(args: &[&str], threads: Option<usize>) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hkcone"));
    cmd.current_dir(crate_dir()).env_remove("MBM_CATALOG_PATH").args(args);
    if let Some(t) = threads {
        cmd.args(["--threads", &t.to_string()]);
    }
    let out = cmd.output().expect("spawn hkcone");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).expect("utf-8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf-8 stderr"),
    }
}

pub fn golden_path(name: &str) -> PathBuf {
    crate_dir().join("tests/golden").join(format!("{name}.out"))
}

/// Runs every case and returns the names whose transcript differs from the
/// golden file.
pub fn golden_mismatches(threads: Option<usize>) -> Vec<String> {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let mut bad = Vec::new();
    for (name, args) in CASES {
        let got = run(args, threads).transcript();
        let path = golden_path(name);
        if update {
            std::fs::write(&path, &got).expect("write golden");
            continue;
        }
        match std::fs::read_to_string(&path) {
            Ok(want) if want == got => {}
            _ => bad.push(name.to_string()),
        }
    }
    bad
}
