use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use tropivol::cli::{self, Options};

#[derive(Parser)]
#[command(name = "tropivol", version, about = "Exact volumes, integrals and conductors over a discretely valued field")]
struct Args {
    /// vol, integrate, fubini, project, cov, truncate, motivic, compare, conductor, trace,
    /// additivity, snf, zbar, rfubini, or gen
    verb: String,
    /// Input document, or the document kind for `gen`
    input: String,
    #[arg(long)]
    json: bool,
    #[arg(long, value_name = "N")]
    oracle_lmax: Option<u32>,
    #[arg(long, value_name = "N")]
    oracle_imax: Option<u32>,
    /// Number of documents for `gen`
    #[arg(long, default_value_t = 10)]
    count: usize,
}

fn emit(stdout: &str, stderr: &str, code: i32) -> ExitCode {
    let _ = std::io::stdout().write_all(stdout.as_bytes());
    let _ = std::io::stderr().write_all(stderr.as_bytes());
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which is reserved here for an unequal check
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if args.verb == "gen" {
        let seed = match std::env::var("TROPIVOL_SEED") {
            Ok(s) => match s.trim().parse::<u64>() {
                Ok(v) => v,
                Err(_) => {
                    return emit("", &format!("error: TROPIVOL_SEED must be an unsigned integer, got '{s}'\n"), 1)
                }
            },
            Err(_) => 0,
        };
        return match cli::generate(&args.input, seed, args.count) {
            Ok(text) => emit(&text, "", 0),
            Err(e) => emit("", &format!("error: {e}\n"), 1),
        };
    }
    let path = PathBuf::from(&args.input);
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => return emit("", &format!("error: {}: {e}\n", path.display()), 1),
    };
    let opts = Options { json: args.json, oracle_imax: args.oracle_imax, oracle_lmax: args.oracle_lmax };
    let out = cli::run(&args.verb, &text, &opts);
    // diagnostics that carry a line:col position get the file name in front
    let stderr: String = out
        .stderr
        .lines()
        .map(|l| match l.split_once(": ") {
            Some((kind, rest)) if rest.starts_with(|c: char| c.is_ascii_digit()) => {
                format!("{kind}: {}:{rest}\n", path.display())
            }
            _ => format!("{l}\n"),
        })
        .collect();
    emit(&out.stdout, &stderr, out.code)
}
