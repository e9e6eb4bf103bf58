//! Command dispatch: parse a document, run the verb, render text or JSON.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Map, Value};

use crate::conductor::{additivity_check, artin_conductor, chai_combine, torus_conductor, trace_decomposition};
use crate::dsl;
use crate::gen::{Gen, GroupKind};
use crate::intlat::{smith_normal_form, IntMatrix};
use crate::motivic::{compare_check, haar_integral, motivic_integral, virtual_dim, PoincareElement, VirtualDim};
use crate::residue::residue_fubini_check;
use crate::sexpr::{parse, Atom, Fields, Kind, Node, ParseError};
use crate::vfcells::{
    apply_affine_map, cov_check, fubini_check, integrate, integrate_threshold, oracle_bounds, projection_check,
    truncate, vol, vol_truncation_oracle, DefinableSet,
};
use crate::zbar::{bigint_json, ZBar};

pub const VERBS: &[&str] = &[
    "vol",
    "integrate",
    "fubini",
    "project",
    "cov",
    "truncate",
    "motivic",
    "compare",
    "conductor",
    "trace",
    "additivity",
    "snf",
    "zbar",
    "rfubini",
];

#[derive(Debug, Clone, Default)]
pub struct Options {
    pub json: bool,
    pub oracle_imax: Option<u32>,
    pub oracle_lmax: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

/// One rendered result: ordered `key = value` lines and the JSON object.
struct Report {
    lines: Vec<(String, String)>,
    json: Map<String, Value>,
    /// `Some(false)` for a check that came out unequal.
    check: Option<bool>,
}

impl Report {
    fn new(verb: &str) -> Self {
        let mut json = Map::new();
        json.insert("verb".into(), json!(verb));
        Report { lines: Vec::new(), json, check: None }
    }

    fn put(&mut self, key: &str, text: impl ToString, value: Value) {
        self.lines.push((key.to_string(), text.to_string()));
        self.json.insert(key.replace(' ', "_"), value);
    }

    fn zbar(&mut self, key: &str, z: &ZBar) {
        self.put(key, z, z.to_json());
    }

    fn flag(&mut self, key: &str, b: bool) {
        self.put(key, b, json!(b));
    }

    fn equal(&mut self, b: bool) {
        self.flag("equal", b);
        self.check = Some(b);
    }

    fn rational(&mut self, key: &str, q: &BigRational) {
        let s = dsl::render_rational(q);
        self.put(key, &s, json!(s));
    }

    fn text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.lines {
            writeln!(s, "{k} = {v}").unwrap();
        }
        s
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Parse(#[from] ParseError),
}

fn at<E: std::fmt::Display>(node: &Node) -> impl Fn(E) -> ParseError + '_ {
    move |e| node.error(e.to_string())
}

fn args_exact<'a>(node: &'a Node, n: usize, shape: &str) -> Result<&'a [Node], ParseError> {
    let a = node.args();
    if a.len() != n {
        return Err(node.error(format!("expected {shape}")));
    }
    Ok(a)
}

fn matrix_json(m: &IntMatrix) -> Value {
    Value::Array(m.to_rows().iter().map(|r| Value::Array(r.iter().map(bigint_json).collect())).collect())
}

fn ints_text(v: &[BigInt]) -> String {
    format!("[{}]", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "))
}

fn ints_json(v: &[BigInt]) -> Value {
    Value::Array(v.iter().map(bigint_json).collect())
}

fn poly_json(p: &PoincareElement) -> Value {
    Value::Array(p.coeffs().iter().map(|(e, c)| json!([e, bigint_json(c)])).collect())
}

fn vdim(r: &mut Report, key: &str, d: &VirtualDim) {
    r.put(key, d, d.to_json());
}

fn run_one(verb: &str, doc: &Node, opts: &Options) -> Result<Report, CliError> {
    match doc.head() {
        Some(h) if h == verb => {}
        Some(h) => return Err(doc.error(format!("document is ({h} …) but the verb is {verb}")).into()),
        None => return Err(doc.error(format!("expected a ({verb} …) document")).into()),
    }
    let mut r = Report::new(verb);
    match verb {
        "vol" => {
            let a = dsl::set(&args_exact(doc, 1, "(vol <set>)")?[0])?;
            r.zbar("vol", &vol(&a));
            if opts.oracle_imax.is_some() || opts.oracle_lmax.is_some() {
                oracle(&mut r, &a, opts);
            }
        }
        "integrate" => {
            let a = args_exact(doc, 2, "(integrate <set> <dimfun>)")?;
            let (set, phi) = (dsl::set(&a[0])?, dsl::dimfun(&a[1])?);
            r.zbar("integral", &integrate(&set, &phi).map_err(at(doc))?);
            r.zbar("threshold", &integrate_threshold(&set, &phi).map_err(at(doc))?);
        }
        "fubini" => {
            let a = args_exact(doc, 3, "(fubini <set> <set> <dimfun>)")?;
            let res = fubini_check(&dsl::set(&a[0])?, &dsl::set(&a[1])?, &dsl::dimfun(&a[2])?).map_err(at(doc))?;
            r.zbar("iterated", &res.iterated);
            r.zbar("joint", &res.joint);
            r.equal(res.equal);
        }
        "project" => {
            let a = args_exact(doc, 4, "(project <set> <set> <dimfun> <dimfun>)")?;
            let res =
                projection_check(&dsl::set(&a[0])?, &dsl::set(&a[1])?, &dsl::dimfun(&a[2])?, &dsl::dimfun(&a[3])?)
                    .map_err(at(doc))?;
            r.put("probes", res.probes, json!(res.probes));
            r.equal(res.equal);
        }
        "cov" => {
            let a = args_exact(doc, 3, "(cov <set> <map> <dimfun>)")?;
            let (set, map, phi) = (dsl::set(&a[0])?, dsl::map(&a[1])?, dsl::dimfun(&a[2])?);
            let (_, jac) = apply_affine_map(&set, &map).map_err(at(doc))?;
            let res = cov_check(&set, &map, &phi).map_err(at(doc))?;
            r.put("ordjac", jac, json!(jac));
            r.zbar("lhs", &res.lhs);
            r.zbar("rhs", &res.rhs);
            r.equal(res.equal);
        }
        "truncate" => {
            let a = args_exact(doc, 2, "(truncate <set> (level l))")?;
            let set = dsl::set(&a[0])?;
            let f = dsl_level(&a[1])?;
            let image = truncate(&set, f).map_err(at(doc))?;
            r.zbar("dim", &image.dimension());
        }
        "motivic" => {
            let body = &args_exact(doc, 1, "(motivic <weak-neron>) or (motivic <haar>)")?[0];
            let (p, d) = if body.head() == Some("haar") {
                let (gk, g, gamma) = dsl::haar(body)?;
                haar_integral(&gk, g, gamma).map_err(at(body))?
            } else {
                let p = motivic_integral(&dsl::weak_neron(body)?);
                let d = virtual_dim(&p);
                (p, d)
            };
            r.put("integral", &p, poly_json(&p));
            vdim(&mut r, "vdim", &d);
        }
        "compare" => {
            let a = args_exact(doc, 3, "(compare <weak-neron> <set> <dimfun>)")?;
            let res =
                compare_check(&dsl::weak_neron(&a[0])?, &dsl::set(&a[1])?, &dsl::dimfun(&a[2])?).map_err(at(doc))?;
            vdim(&mut r, "lhs", &res.lhs);
            r.zbar("rhs", &res.rhs);
            r.equal(res.equal);
        }
        "conductor" => {
            let body = &args_exact(doc, 1, "(conductor <galmod>) or (conductor (chai …))")?[0];
            if body.head() == Some("chai") {
                let f = Fields::new(body, &["ct", "ca", "gamma"], &[])?;
                let get = |k: &str| -> Result<&Node, ParseError> {
                    f.single(k)?.ok_or_else(|| body.error(format!("missing ({k} …)")))
                };
                let c = chai_combine(&get("ct")?.as_rational()?, &get("ca")?.as_rational()?, &get("gamma")?.as_int()?)
                    .map_err(at(body))?;
                r.rational("c", &c);
            } else {
                let m = dsl::galmod(body)?;
                r.rational("c", &torus_conductor(&m).map_err(at(body))?);
                r.rational("artin", &artin_conductor(&m).map_err(at(body))?);
                r.put("e", m.ramification_index(), json!(m.ramification_index()));
            }
        }
        "trace" => {
            let m = dsl::galmod(&args_exact(doc, 1, "(trace <galmod>)")?[0])?;
            let t = trace_decomposition(&m);
            r.put("trace", &t.trace, matrix_json(&t.trace));
            r.put("bpart", &t.b_part, matrix_json(&t.b_part));
            r.put("split rank", t.split_part.free_rank, json!(t.split_part.free_rank));
            r.put("split generators", &t.split_generators, matrix_json(&t.split_generators));
            r.put("isogeny cokernel", ints_text(&t.isogeny_cokernel), ints_json(&t.isogeny_cokernel));
        }
        "additivity" => {
            let a = args_exact(doc, 2, "(additivity <galmod> (injection (mat …)))")?;
            let m = dsl::galmod(&a[0])?;
            let inj = match (a[1].head(), a[1].args()) {
                (Some("injection"), [mat]) => dsl::matrix(mat)?,
                _ => return Err(a[1].error("expected (injection (mat …))").into()),
            };
            let res = additivity_check(&m, &inj).map_err(at(&a[1]))?;
            r.rational("c(middle)", &res.c_middle);
            r.rational("c(sub)", &res.c_sub);
            r.rational("c(quotient)", &res.c_quotient);
            r.rational("sum", &res.sum());
            r.equal(res.equal);
        }
        "snf" => {
            let m = dsl::matrix(&args_exact(doc, 1, "(snf (mat …))")?[0])?;
            let s = smith_normal_form(&m);
            r.put("d", ints_text(&s.d), ints_json(&s.d));
            r.put("u", &s.u, matrix_json(&s.u));
            r.put("v", &s.v, matrix_json(&s.v));
        }
        "zbar" => {
            let v = zbar_expr(&args_exact(doc, 1, "(zbar <expr>)")?[0])?;
            r.zbar("value", &v);
        }
        "rfubini" => {
            let a = args_exact(doc, 3, "(rfubini <rset> <rset> (values (row …)…))")?;
            let (x, y) = (dsl::rset(&a[0])?, dsl::rset(&a[1])?);
            if a[2].head() != Some("values") {
                return Err(a[2].error("expected (values (row …)…)").into());
            }
            let rows = a[2]
                .args()
                .iter()
                .map(|row| row.args().iter().map(dsl::zbar).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?;
            let res = residue_fubini_check(&x, &y, &rows).map_err(at(doc))?;
            r.zbar("iterated", &res.iterated);
            r.zbar("joint", &res.joint);
            r.equal(res.equal);
        }
        other => return Err(doc.error(format!("unknown verb '{other}'")).into()),
    }
    Ok(r)
}

fn dsl_level(node: &Node) -> Result<u32, ParseError> {
    match (node.head(), node.args()) {
        (Some("level"), [l]) => {
            let v = l.as_usize()?;
            u32::try_from(v).map_err(|_| l.error("level is too large"))
        }
        _ => Err(node.error("expected (level l)")),
    }
}

fn zbar_expr(node: &Node) -> Result<ZBar, ParseError> {
    match node.head() {
        Some(op @ ("oplus" | "odot")) => {
            let vals = node.args().iter().map(zbar_expr).collect::<Result<Vec<_>, _>>()?;
            Ok(if op == "oplus" {
                vals.iter().fold(ZBar::NegInf, |a, b| a.oplus(b))
            } else {
                vals.iter().fold(ZBar::zero(), |a, b| a.odot(b))
            })
        }
        Some(other) => Err(node.error(format!("unknown operation '{other}'"))),
        None => dsl::zbar(node),
    }
}

fn oracle(r: &mut Report, a: &DefinableSet, opts: &Options) {
    let bounds = oracle_bounds(a);
    let imax = opts.oracle_imax.unwrap_or_else(|| bounds.map_or(3, |(i, _)| i as u32));
    let lmax = opts.oracle_lmax.unwrap_or_else(|| bounds.map_or(10, |(_, l)| l as u32));
    let rep = vol_truncation_oracle(a, imax, lmax);
    r.zbar("oracle", &rep.value);
    r.flag("stabilized", rep.stabilized);
    r.flag("monotone", rep.monotone);
    let seq: Vec<String> = rep.i_sequence.iter().map(|z| z.to_string()).collect();
    let seq_json = Value::Array(rep.i_sequence.iter().map(ZBar::to_json).collect());
    r.put("i-sequence", format!("[{}]", seq.join(", ")), seq_json);
}

/// Runs `verb` on every expression of the document in turn.
pub fn run(verb: &str, text: &str, opts: &Options) -> Outcome {
    if !VERBS.contains(&verb) {
        return Outcome {
            stdout: String::new(),
            stderr: format!("error: unknown verb '{verb}'; expected one of {}\n", VERBS.join(", ")),
            code: 1,
        };
    }
    let docs = match parse(text) {
        Ok(d) => d,
        Err(e) => return Outcome { stdout: String::new(), stderr: format!("error: {e}\n"), code: 1 },
    };
    let mut warnings = String::new();
    for d in &docs {
        warn_large(d, &mut warnings);
    }
    let mut reports = Vec::new();
    for d in &docs {
        match run_one(verb, d, opts) {
            Ok(r) => reports.push(r),
            Err(e) => return Outcome { stdout: String::new(), stderr: format!("{warnings}error: {e}\n"), code: 1 },
        }
    }
    let code = if reports.iter().any(|r| r.check == Some(false)) { 2 } else { 0 };
    let stdout = if opts.json {
        let mut vals: Vec<Value> = reports.into_iter().map(|r| Value::Object(r.json)).collect();
        let v = if vals.len() == 1 { vals.remove(0) } else { Value::Array(vals) };
        serde_json::to_string_pretty(&v).expect("serializable") + "\n"
    } else {
        reports.iter().map(Report::text).collect::<Vec<_>>().join("\n")
    };
    Outcome { stdout, stderr: warnings, code }
}

/// Numbers past 2^32 are exact but slow the order-set searches down badly.
fn warn_large(node: &Node, out: &mut String) {
    let limit = BigInt::from(1u64 << 32);
    let big = |v: &BigInt| v.magnitude() > limit.magnitude();
    match &node.kind {
        Kind::Atom(Atom::Int(v)) if big(v) => {
            writeln!(out, "warning: {}: coefficient {v} exceeds 2^32", node.pos).unwrap();
        }
        Kind::Atom(Atom::Rational(q)) if big(q.numer()) || big(q.denom()) => {
            writeln!(out, "warning: {}: coefficient {} exceeds 2^32", node.pos, dsl::render_rational(q)).unwrap();
        }
        Kind::List(items) => items.iter().for_each(|n| warn_large(n, out)),
        Kind::Atom(_) => {}
    }
}

pub const GEN_KINDS: &[&str] = &["vol", "integrate", "fubini", "cov", "additivity"];

/// `count` random documents for `kind`, reproducible from `seed`.
pub fn generate(kind: &str, seed: u64, count: usize) -> Result<String, String> {
    let mut g = Gen::new(seed);
    let mut out = String::new();
    for i in 0..count {
        if i > 0 {
            out.push('\n');
        }
        let doc = match kind {
            "vol" => format!("(vol {})", dsl::render_set(&DefinableSet::from_cell(g.oracle_cell()))),
            "integrate" => {
                let p = g.profile(2);
                let c = g.centers(p.n);
                let k = g.int(1, 2) as usize;
                let a = g.set_with_centers(p, &c, k);
                let phi = g.dimfun_with_centers(p, &c, true);
                format!("(integrate {} {})", dsl::render_set(&a), dsl::render_dimfun(&phi))
            }
            "fubini" => {
                let (px, py) = (g.profile(1), g.profile(1));
                let (cx, cy) = (g.centers(px.n), g.centers(py.n));
                let ax = g.set_with_centers(px, &cx, 1);
                let ay = g.set_with_centers(py, &cy, 1);
                let phi = g.product_dimfun(px, py, &cx, &cy);
                format!("(fubini {} {} {})", dsl::render_set(&ax), dsl::render_set(&ay), dsl::render_dimfun(&phi))
            }
            "cov" => {
                let p = g.profile(2);
                let c = g.centers(p.n);
                let a = g.set_with_centers(p, &c, 1);
                let map = g.affine_map(p.n);
                let (image, _) = apply_affine_map(&a, &map).expect("arity");
                let phi = g.dimfun_with_centers(p, image.cells()[0].centers(), true);
                format!("(cov {} {} {})", dsl::render_set(&a), dsl::render_map(&map), dsl::render_dimfun(&phi))
            }
            "additivity" => {
                let kind = [GroupKind::Z2, GroupKind::Z3, GroupKind::S3][g.int(0, 2) as usize];
                let (m, inj) = g.exact_sequence(kind);
                let inj = if inj.cols() == 0 { IntMatrix::zeros(inj.rows(), 0) } else { inj };
                format!("(additivity {} (injection {}))", dsl::render_galmod(&m), dsl::render_matrix(&inj))
            }
            other => return Err(format!("unknown generator '{other}'; expected one of {}", GEN_KINDS.join(", "))),
        };
        out.push_str(&doc);
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn text(verb: &str, doc: &str) -> Outcome {
        run(verb, doc, &Options::default())
    }

    #[test]
    fn named_outputs() {
        let o = text("vol", "(vol (vfcell (n 1) (ordset (cell (ge (1) 3)))))");
        assert_eq!((o.stdout.as_str(), o.code), ("vol = -3\n", 0));
        let o = text(
            "conductor",
            "(conductor (galmod (rank 2) (gen (mat (row 0 1) (row 1 0))) (filtration (g0 all) (g1 id))))",
        );
        assert!(o.stdout.starts_with("c = 1/2\n"), "{o:?}");
        let o = text("zbar", "(zbar (odot -inf +inf))");
        assert_eq!(o.stdout, "value = -inf\n");
    }

    #[test]
    fn errors_and_exit_codes() {
        let o = text("vol", "(vol (vfcell");
        assert_eq!(o.code, 1);
        assert!(o.stderr.contains("1:13"), "{}", o.stderr);
        let o = text("fubini", "(fubini (vfcell (n 1)) (vfcell (n 1)) (dimfun (profile 1 0 0) (piece all (const 0))))");
        assert_eq!(o.code, 1);
        assert!(o.stderr.contains("arity"), "{}", o.stderr);
        let o = text(
            "compare",
            "(compare (weak-neron (dimx 1) (comp (poly (2 1)) (dim 1) (ord 0))) (vfcell (n 1) (ordset (cell (ge (1) 1)))) (dimfun (profile 1 0 0) (piece all (const 0))))",
        );
        assert_eq!(o.code, 2);
        assert!(o.stdout.contains("equal = false"));
        assert_eq!(text("vol", "(integrate)").code, 1);
        assert_eq!(text("nope", "(nope)").code, 1);
        let o = text("zbar", "(zbar (odot 1 8589934592))");
        assert_eq!((o.stdout.as_str(), o.code), ("value = 8589934593\n", 0));
        assert_eq!(o.stderr, "warning: 1:15: coefficient 8589934592 exceeds 2^32\n");
    }

    #[test]
    fn json_output() {
        let o = run("vol", "(vol (vfcell (n 1)))", &Options { json: true, ..Options::default() });
        let v: Value = serde_json::from_str(&o.stdout).unwrap();
        assert_eq!(v["vol"], json!({"posinf": true}));
        assert_eq!(v["verb"], json!("vol"));
    }

    #[test]
    fn generated_documents_run() {
        for kind in GEN_KINDS {
            let docs = generate(kind, 11, 4).unwrap();
            let o = text(kind, &docs);
            assert_eq!(o.code, 0, "{kind}: {}\n{}", o.stderr, docs);
        }
    }
}
