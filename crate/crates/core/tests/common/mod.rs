//! Corpus runner shared by the golden and acceptance targets. Each `.sx`
//! starts with a `; tropivol <verb> [flags]` line; the matching `.expected`
//! holds stdout, then stderr, then `[exit N]`.

use std::path::{Path, PathBuf};
use std::process::Command;

pub fn corpus() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "sx"))
        .collect();
    files.sort();
    files
}

pub fn run_case(sx: &Path) -> String {
    let text = std::fs::read_to_string(sx).unwrap();
    let header = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix("; tropivol "))
        .unwrap_or_else(|| panic!("{} lacks a '; tropivol <verb>' header", sx.display()));
    let mut words = header.split_whitespace();
    let verb = words.next().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tropivol"))
        .current_dir(sx.parent().unwrap())
        .arg(verb)
        .arg(sx.file_name().unwrap())
        .args(words)
        .output()
        .unwrap();
    format!(
        "{}{}[exit {}]\n",
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
        out.status.code().unwrap()
    )
}
