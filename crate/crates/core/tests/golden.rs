//! Byte-exact CLI runs over tests/corpus. Set TROPIVOL_BLESS=1 to rewrite
//! the expected files.

mod common;

use std::process::Command;
use std::time::Instant;

use common::{corpus, run_case};

#[test]
fn corpus_matches_expected() {
    let bless = std::env::var_os("TROPIVOL_BLESS").is_some();
    let start = Instant::now();
    let files = corpus();
    assert!(files.len() >= 10, "corpus looks truncated");
    let mut failures = Vec::new();
    for sx in &files {
        let got = run_case(sx);
        let expected_path = sx.with_extension("expected");
        if bless {
            std::fs::write(&expected_path, &got).unwrap();
            continue;
        }
        let want =
            std::fs::read_to_string(&expected_path).unwrap_or_else(|_| panic!("missing {}", expected_path.display()));
        if got != want {
            failures.push(format!("{}:\n--- want\n{want}--- got\n{got}", sx.display()));
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
    assert!(start.elapsed().as_secs() < 60);
}

#[test]
fn runs_are_deterministic() {
    for sx in corpus() {
        assert_eq!(run_case(&sx), run_case(&sx), "{}", sx.display());
    }
}

#[test]
fn gen_respects_seed() {
    let gen = |seed: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_tropivol"))
            .args(["gen", "fubini", "--count", "3"])
            .env("TROPIVOL_SEED", seed)
            .output()
            .unwrap();
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap()
    };
    assert_eq!(gen("17"), gen("17"));
    assert_ne!(gen("17"), gen("18"));
}

#[test]
fn usage_errors_exit_one() {
    let out = Command::new(env!("CARGO_BIN_EXE_tropivol")).arg("vol").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_tropivol")).args(["vol", "/nonexistent.sx"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
