//! Byte-for-byte comparison of CLI output against `tests/golden/*.out`.
//! Regenerate with `UPDATE_GOLDEN=1 cargo test -p hkcone-cli --test golden`.

mod common;

#[test]
fn golden_transcripts_match() {
    let bad = common::golden_mismatches(None);
    assert!(bad.is_empty(), "golden mismatches: {bad:?}");
}

#[test]
fn json_outputs_reparse() {
    for (name, args) in common::CASES {
        let run = common::run(args, None);
        let is_json = !args.contains(&"text") && !args.contains(&"dot");
        if run.code == 0 && is_json {
            serde_json::from_str::<serde_json::Value>(&run.stdout).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        if run.code == 1 {
            let err: serde_json::Value = serde_json::from_str(run.stderr.trim()).expect("error json");
            assert!(err["error"]["kind"].is_string(), "{name}");
        }
    }
}

#[test]
fn exit_codes() {
    assert_eq!(common::run(&["info", "--lattice", "K3"], None).code, 0);
    assert_eq!(common::run(&["info", "--lattice", "Nope"], None).code, 1);
    assert_eq!(common::run(&["frobnicate"], None).code, 2);
    assert_eq!(common::run(&["separate", "--lattice", "U"], None).code, 2);
}

#[test]
fn catalog_path_override() {
    let dir = std::env::temp_dir().join(format!("hkcone-catalog-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("catalog.json");
    std::fs::write(
        &path,
        r#"[{"name": "Tiny", "gram": [[2]], "signature": [1, 0], "discriminant": 2,
            "fujiki_constant": "unknown", "mbm_square_bound": "conjectural:2"}]"#,
    )
    .unwrap();
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_hkcone"))
        .env("MBM_CATALOG_PATH", &path)
        .args(["info", "--lattice", "Tiny"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rank"], 1);
}
