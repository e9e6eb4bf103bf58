//! Decoding DSL expressions into engine values, and writing values back.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::conductor::RamifiedGaloisModule;
use crate::intlat::{GroupAction, IntMatrix};
use crate::motivic::{Component, PoincareElement, WeakNeronData};
use crate::padic::PadicConstant;
use crate::presburger::{AffineForm, PresburgerCell, PresburgerSet};
use crate::residue::{Marker, ResidueCell, ResidueSet};
use crate::sexpr::{Fields, Kind, Node, ParseError};
use crate::vfcells::{AcConstraint, AffineMap, DefinableSet, DimFunction, Piece, Profile, VFCell};
use crate::zbar::ZBar;

type Result<T> = std::result::Result<T, ParseError>;

fn expect_head(n: &Node, head: &str) -> Result<()> {
    match n.head() {
        Some(h) if h == head => Ok(()),
        _ => Err(n.error(format!("expected ({head} …), found {}", short(n)))),
    }
}

fn short(n: &Node) -> String {
    let s = n.to_string();
    if s.chars().count() > 40 {
        format!("{}…", s.chars().take(40).collect::<String>())
    } else {
        s
    }
}

pub fn zbar(n: &Node) -> Result<ZBar> {
    match n.symbol() {
        Some("-inf") => Ok(ZBar::NegInf),
        Some("+inf") | Some("inf") => Ok(ZBar::PosInf),
        _ => Ok(ZBar::Fin(n.as_int().map_err(|_| n.error(format!("expected an integer or ±inf, found {n}")))?)),
    }
}

/// `((e d) …)`, `()` for zero, or an integer constant.
pub fn padic(n: &Node) -> Result<PadicConstant> {
    if let Kind::Atom(_) = n.kind {
        return Ok(PadicConstant::from_terms([(0, n.as_rational()?)]));
    }
    let mut terms = Vec::new();
    for t in n.expect_list()? {
        let pair = t.expect_list()?;
        if pair.len() != 2 {
            return Err(t.error("expected (exponent digit)"));
        }
        terms.push((pair[0].as_i64()?, pair[1].as_rational()?));
    }
    PadicConstant::new(terms).map_err(|e| n.error(e.to_string()))
}

fn int_vec(n: &Node) -> Result<Vec<BigInt>> {
    n.expect_list()?.iter().map(Node::as_int).collect()
}

/// `(cell (ge (a…) b) (le (a…) b) (eq (a…) b) (cong (a…) r m))`.
pub fn pcell(n: &Node, dim: usize) -> Result<PresburgerCell> {
    expect_head(n, "cell")?;
    let mut cell = PresburgerCell::universe(dim);
    for c in n.args() {
        let args = c.args();
        let want = if c.head() == Some("cong") { 3 } else { 2 };
        if args.len() != want {
            return Err(c.error(format!("({} …) takes {want} arguments", c.head().unwrap_or("?"))));
        }
        let coeffs = int_vec(&args[0])?;
        let b = args[1].as_int()?;
        let r = match c.head() {
            Some("ge") => cell.add_ge(coeffs, b),
            Some("le") => cell.add_le(coeffs, b),
            Some("eq") => cell.add_eq(coeffs, b),
            Some("cong") => cell.add_cong(coeffs, b, args[2].as_int()?),
            _ => return Err(c.error(format!("unknown constraint {}", short(c)))),
        };
        r.map_err(|e| c.error(e.to_string()))?;
    }
    Ok(cell)
}

fn pcells(nodes: &[Node], dim: usize) -> Result<PresburgerSet> {
    let cells = nodes.iter().map(|c| pcell(c, dim)).collect::<Result<Vec<_>>>()?;
    Ok(PresburgerSet::new(dim, cells).expect("uniform dimension"))
}

/// `(pset (r k) (cell …)…)`.
pub fn pset(n: &Node) -> Result<PresburgerSet> {
    expect_head(n, "pset")?;
    let f = Fields::new(n, &["r"], &["cell"])?;
    let r = f.single("r")?.ok_or_else(|| n.error("missing (r …) in pset"))?.as_usize()?;
    pcells(&n.args().iter().filter(|a| a.head() == Some("cell")).cloned().collect::<Vec<_>>(), r)
}

pub fn marker(n: &Node) -> Result<Marker> {
    match (n.symbol(), n.head()) {
        (Some("free"), _) => Ok(Marker::free()),
        (Some("nonzero"), _) => Ok(Marker::nonzero()),
        (_, Some("fixed")) if n.args().len() == 1 => Ok(Marker::fixed(n.args()[0].as_rational()?)),
        (_, Some("avoid")) => Ok(Marker::avoiding(n.args().iter().map(Node::as_rational).collect::<Result<Vec<_>>>()?)),
        _ => Err(n.error(format!("expected a residue marker, found {}", short(n)))),
    }
}

/// `(cell marker… )` or `(cell (opaque d) marker…)`.
pub fn rcell(n: &Node) -> Result<ResidueCell> {
    expect_head(n, "cell")?;
    let mut opaque = None;
    let mut coords = Vec::new();
    for a in n.args() {
        if a.head() == Some("opaque") {
            if opaque.is_some() {
                return Err(a.error("duplicate key 'opaque'"));
            }
            let d = a.args().first().ok_or_else(|| a.error("(opaque d) needs a dimension"))?;
            opaque = Some(d.as_usize()? as u64);
        } else {
            coords.push(marker(a)?);
        }
    }
    Ok(match opaque {
        Some(d) => ResidueCell::opaque_with_coords(d, coords),
        None => ResidueCell::new(coords),
    })
}

/// `(residue (m k) (cell …)…)` or `(rset (m k) (cell …)…)`.
pub fn rset(n: &Node) -> Result<ResidueSet> {
    let head = n.head().unwrap_or("");
    if head != "residue" && head != "rset" {
        return Err(n.error(format!("expected (rset …), found {}", short(n))));
    }
    let f = Fields::new(n, &["m"], &["cell"])?;
    let cells = f.all("cell").map(rcell).collect::<Result<Vec<_>>>()?;
    let m = match f.single("m")? {
        Some(m) => m.as_usize()?,
        None => match cells.iter().find(|c| !c.is_opaque() || c.arity() > 0) {
            Some(c) => c.arity(),
            None => 0,
        },
    };
    ResidueSet::new(m, cells).map_err(|e| n.error(e.to_string()))
}

/// `(vfcell (n k) (r k) (center c…) (acdepth l…) (ac spec…) (ordset (cell …)…) (residue …))`.
pub fn vfcell(node: &Node) -> Result<VFCell> {
    expect_head(node, "vfcell")?;
    let f = Fields::new(node, &["n", "r", "center", "acdepth", "ac", "ordset", "residue"], &[])?;
    let n = f.single("n")?.ok_or_else(|| node.error("missing (n …) in vfcell"))?.as_usize()?;
    let r = match f.single("r")? {
        Some(v) => v.as_usize()?,
        None => 0,
    };
    let arity = |key: &str, got: usize, at: &Node| -> Result<()> {
        if got != n {
            return Err(at.error(format!("({key} …) has {got} entries for n = {n}")));
        }
        Ok(())
    };
    let centers = match f.get("center") {
        Some(c) => {
            let v = c.args().iter().map(padic).collect::<Result<Vec<_>>>()?;
            arity("center", v.len(), c)?;
            v
        }
        None => vec![PadicConstant::zero(); n],
    };
    let depths: Option<Vec<usize>> = match f.get("acdepth") {
        Some(d) => {
            let v = d.args().iter().map(Node::as_usize).collect::<Result<Vec<_>>>()?;
            arity("acdepth", v.len(), d)?;
            if let Some(k) = v.iter().position(|&x| x == 0) {
                return Err(d.args()[k].error("angular component depth must be positive"));
            }
            Some(v)
        }
        None => None,
    };
    let ac = match f.get("ac") {
        Some(a) => {
            let mut out = Vec::new();
            let mut it = a.args().iter();
            while let Some(tok) = it.next() {
                let j = out.len();
                match tok.symbol() {
                    Some("free") => out.push(AcConstraint::FreeUnit {
                        depth: depths.as_ref().map_or(1, |d| d.get(j).copied().unwrap_or(1)),
                    }),
                    Some("fixed") => {
                        let digits = it.next().ok_or_else(|| tok.error("fixed needs a digit list"))?;
                        let ds = digits.expect_list()?.iter().map(Node::as_rational).collect::<Result<Vec<_>>>()?;
                        if let Some(d) = depths.as_ref().and_then(|d| d.get(j)) {
                            if *d != ds.len() {
                                return Err(digits.error(format!("{} digits given for depth {d}", ds.len())));
                            }
                        }
                        out.push(AcConstraint::fixed(ds).map_err(|e| digits.error(e.to_string()))?);
                    }
                    _ => return Err(tok.error(format!("expected free or fixed, found {tok}"))),
                }
            }
            arity("ac", out.len(), a)?;
            out
        }
        None => match &depths {
            Some(d) => d.iter().map(|&depth| AcConstraint::FreeUnit { depth }).collect(),
            None => vec![AcConstraint::FreeUnit { depth: 1 }; n],
        },
    };
    let ord_set = match f.get("ordset") {
        Some(o) => pcells(o.args(), n + r)?,
        None => PresburgerSet::universe(n + r),
    };
    let residue = match f.get("residue") {
        Some(res) => rset(res)?,
        None => ResidueSet::point(),
    };
    VFCell::new(centers, ac, ord_set, residue).map_err(|e| node.error(e.to_string()))
}

/// `(profile n m r)`.
pub fn profile(node: &Node) -> Result<Profile> {
    expect_head(node, "profile")?;
    let a = node.args();
    if a.len() != 3 {
        return Err(node.error("(profile n m r) takes three counts"));
    }
    Ok(Profile::new(a[0].as_usize()?, a[1].as_usize()?, a[2].as_usize()?))
}

/// A single `(vfcell …)` or `(union (profile n m r) (vfcell …)…)`.
pub fn set(node: &Node) -> Result<DefinableSet> {
    match node.head() {
        Some("vfcell") => Ok(DefinableSet::from_cell(vfcell(node)?)),
        Some("union") => {
            let f = Fields::new(node, &["profile"], &["vfcell"])?;
            let cells = f.all("vfcell").map(vfcell).collect::<Result<Vec<_>>>()?;
            let p = match f.get("profile") {
                Some(p) => profile(p)?,
                None => {
                    cells.first().map(VFCell::profile).ok_or_else(|| node.error("empty union needs (profile n m r)"))?
                }
            };
            DefinableSet::new(p, cells).map_err(|e| node.error(e.to_string()))
        }
        _ => Err(node.error(format!("expected (vfcell …) or (union …), found {}", short(node)))),
    }
}

/// `(form (a…) offset)` or `(const v)`, in `dim` variables.
pub fn form(node: &Node, dim: usize) -> Result<AffineForm> {
    match node.head() {
        Some("const") if node.args().len() == 1 => Ok(AffineForm::constant(dim, zbar(&node.args()[0])?)),
        Some("form") if node.args().len() == 2 => {
            let coeffs = int_vec(&node.args()[0])?;
            if coeffs.len() != dim {
                return Err(node.error(format!("form has {} coefficients, expected {dim}", coeffs.len())));
            }
            match zbar(&node.args()[1])? {
                ZBar::Fin(k) => Ok(AffineForm::linear(coeffs, k)),
                inf => Ok(AffineForm::constant(dim, inf)),
            }
        }
        _ => Err(node.error(format!("expected (form (a…) b) or (const v), found {}", short(node)))),
    }
}

/// `(dimfun (profile n m r)? (piece <vfcell>|all <form>)…)`.
pub fn dimfun(node: &Node) -> Result<DimFunction> {
    expect_head(node, "dimfun")?;
    let f = Fields::new(node, &["profile"], &["piece"])?;
    let mut declared = match f.get("profile") {
        Some(p) => Some(profile(p)?),
        None => None,
    };
    let mut pieces = Vec::new();
    for p in f.all("piece") {
        let a = p.args();
        if a.len() != 2 {
            return Err(p.error("(piece <cell> <form>) takes two arguments"));
        }
        let cell = if a[0].symbol() == Some("all") {
            VFCell::universe(declared.ok_or_else(|| a[0].error("'all' needs a (profile n m r) entry"))?)
        } else {
            vfcell(&a[0])?
        };
        let pr = *declared.get_or_insert(cell.profile());
        if cell.profile() != pr {
            return Err(a[0].error(format!("piece lies in {} but the function lives on {pr}", cell.profile())));
        }
        pieces.push(Piece::new(cell, form(&a[1], pr.int_dim())?).map_err(|e| p.error(e.to_string()))?);
    }
    let pr = declared.ok_or_else(|| node.error("dimfun without pieces needs (profile n m r)"))?;
    DimFunction::new(pr, pieces).map_err(|e| node.error(e.to_string()))
}

/// `(map (scale a…) (offset b…))`.
pub fn map(node: &Node) -> Result<AffineMap> {
    expect_head(node, "map")?;
    let f = Fields::new(node, &["scale", "offset"], &[])?;
    let scale = f.require("scale")?.args().iter().map(padic).collect::<Result<Vec<_>>>()?;
    let offset = match f.get("offset") {
        Some(o) => o.args().iter().map(padic).collect::<Result<Vec<_>>>()?,
        None => vec![PadicConstant::zero(); scale.len()],
    };
    AffineMap::new(scale, offset).map_err(|e| node.error(e.to_string()))
}

/// `(poly (e c)…)`.
pub fn poly(node: &Node) -> Result<PoincareElement> {
    expect_head(node, "poly")?;
    let mut pairs = Vec::new();
    for t in node.args() {
        let p = t.expect_list()?;
        if p.len() != 2 {
            return Err(t.error("expected (exponent coefficient)"));
        }
        pairs.push((p[0].as_i64()?, p[1].as_int()?));
    }
    Ok(PoincareElement::from_pairs(pairs))
}

/// `(weak-neron (dimx d) (comp (poly …) (dim k) (ord o))…)`.
pub fn weak_neron(node: &Node) -> Result<WeakNeronData> {
    expect_head(node, "weak-neron")?;
    let f = Fields::new(node, &["dimx"], &["comp"])?;
    let dim_x = f.single("dimx")?.ok_or_else(|| node.error("missing (dimx …)"))?.as_i64()?;
    let mut comps = Vec::new();
    for c in f.all("comp") {
        let cf = Fields::new(c, &["poly", "dim", "ord"], &[])?;
        comps.push(Component {
            poincare: poly(cf.require("poly")?)?,
            dim: cf.single("dim")?.ok_or_else(|| c.error("missing (dim …)"))?.as_i64()?,
            ord_omega: match cf.single("ord")? {
                Some(o) => o.as_i64()?,
                None => 0,
            },
        });
    }
    WeakNeronData::new(dim_x, comps).map_err(|e| node.error(e.to_string()))
}

/// `(haar (poly …) (g k) (gamma c))`.
pub fn haar(node: &Node) -> Result<(PoincareElement, i64, i64)> {
    expect_head(node, "haar")?;
    let f = Fields::new(node, &["poly", "g", "gamma"], &[])?;
    let g = f.single("g")?.ok_or_else(|| node.error("missing (g …)"))?.as_i64()?;
    let gamma = f.single("gamma")?.ok_or_else(|| node.error("missing (gamma …)"))?.as_i64()?;
    Ok((poly(f.require("poly")?)?, g, gamma))
}

/// `(mat (row …)…)`.
pub fn matrix(node: &Node) -> Result<IntMatrix> {
    expect_head(node, "mat")?;
    let rows = node
        .args()
        .iter()
        .map(|r| {
            expect_head(r, "row")?;
            r.args().iter().map(Node::as_int).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let cols = rows.first().map_or(0, Vec::len);
    IntMatrix::from_big_rows(rows, cols).map_err(|e| node.error(e.to_string()))
}

/// `(galmod (rank n) (gen (mat …))… (filtration (g0 all) (g1 id)))`; a
/// level is `all`, `id`, `(elems i…)` or `(gen (mat …)…)`.
pub fn galmod(node: &Node) -> Result<RamifiedGaloisModule> {
    expect_head(node, "galmod")?;
    let f = Fields::new(node, &["rank", "filtration"], &["gen"])?;
    let rank = f.single("rank")?.ok_or_else(|| node.error("missing (rank …)"))?.as_usize()?;
    let gens = f
        .all("gen")
        .map(|g| match g.args() {
            [m] => matrix(m),
            _ => Err(g.error("(gen (mat …)) takes one matrix")),
        })
        .collect::<Result<Vec<_>>>()?;
    let action = GroupAction::from_generators(rank, gens).map_err(|e| node.error(e.to_string()))?;
    let filtration = match f.get("filtration") {
        None => return Ok(RamifiedGaloisModule::tame(action)),
        Some(fl) => fl,
    };
    let mut levels = Vec::new();
    for (i, lvl) in filtration.args().iter().enumerate() {
        if lvl.head() != Some(&format!("g{i}")) || lvl.args().is_empty() {
            return Err(lvl.error(format!("expected (g{i} …)")));
        }
        let spec = &lvl.args()[0];
        let idx = match (spec.symbol(), spec.head()) {
            (Some("all"), _) => (0..action.order()).collect(),
            (Some("id"), _) => vec![action.identity_index()],
            (_, Some("elems")) => spec.args().iter().map(Node::as_usize).collect::<Result<Vec<_>>>()?,
            (_, Some("gen")) => {
                let ms = spec.args().iter().map(matrix).collect::<Result<Vec<_>>>()?;
                action.subgroup_generated_by(&ms).map_err(|e| spec.error(e.to_string()))?
            }
            _ => return Err(spec.error(format!("expected all, id, (elems …) or (gen …), found {}", short(spec)))),
        };
        levels.push(idx);
    }
    RamifiedGaloisModule::new(action, levels).map_err(|e| filtration.error(e.to_string()))
}

pub fn render_form(f: &AffineForm) -> String {
    if !f.offset.is_finite() {
        return format!("(const {})", f.offset);
    }
    let mut s = String::from("(form (");
    for (i, c) in f.coeffs.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        write!(s, "{c}").unwrap();
    }
    write!(s, ") {})", f.offset).unwrap();
    s
}

pub fn render_profile(p: Profile) -> String {
    format!("(profile {} {} {})", p.n, p.m, p.r)
}

pub fn render_set(a: &DefinableSet) -> String {
    if a.cells().len() == 1 {
        return a.cells()[0].to_string();
    }
    let mut s = format!("(union {}", render_profile(a.profile()));
    for c in a.cells() {
        write!(s, " {c}").unwrap();
    }
    s.push(')');
    s
}

pub fn render_dimfun(phi: &DimFunction) -> String {
    let mut s = format!("(dimfun {}", render_profile(phi.profile()));
    for p in phi.pieces() {
        write!(s, " (piece {} {})", p.cell, render_form(&p.form)).unwrap();
    }
    s.push(')');
    s
}

impl std::fmt::Display for DefinableSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&render_set(self))
    }
}

impl std::fmt::Display for DimFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&render_dimfun(self))
    }
}

pub fn render_map(m: &AffineMap) -> String {
    let list = |v: &[PadicConstant]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ");
    format!("(map (scale {}) (offset {}))", list(&m.scale), list(&m.offset))
}

pub fn render_matrix(m: &IntMatrix) -> String {
    let mut s = String::from("(mat");
    for r in m.to_rows() {
        s.push_str(" (row");
        for v in r {
            write!(s, " {v}").unwrap();
        }
        s.push(')');
    }
    s.push(')');
    s
}

/// Filtration levels are written as explicit element lists.
pub fn render_galmod(m: &RamifiedGaloisModule) -> String {
    let mut s = format!("(galmod (rank {})", m.rank());
    for g in m.action().generators() {
        write!(s, " (gen {})", render_matrix(g)).unwrap();
    }
    s.push_str(" (filtration");
    for (i, lvl) in m.filtration().iter().enumerate() {
        let idx: Vec<String> = lvl.iter().map(|x| x.to_string()).collect();
        write!(s, " (g{i} (elems {}))", idx.join(" ")).unwrap();
    }
    s.push_str("))");
    s
}

pub fn render_rational(q: &BigRational) -> String {
    if q.denom() == &BigInt::from(1) || q.is_zero() {
        q.to_integer().to_string()
    } else {
        q.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sexpr::parse_one;
    use crate::vfcells::vol;

    fn p(s: &str) -> Node {
        parse_one(s).unwrap()
    }

    #[test]
    fn vfcell_forms() {
        let c = vfcell(&p("(vfcell (n 1) (acdepth 2) (ac fixed (1 0)) (ordset (cell (eq (1) 2))))")).unwrap();
        assert_eq!(vol(&DefinableSet::from_cell(c.clone())), ZBar::from(-4));
        let again = vfcell(&p(&c.to_string())).unwrap();
        assert_eq!(again, c);
        let e = vfcell(&p("(vfcell (n 2) (center ()))")).unwrap_err();
        assert!(e.message.contains("center"));
        let e = vfcell(&p("(vfcell (n 1) (acdepth 3) (ac fixed (1 0)))")).unwrap_err();
        assert!(e.message.contains("depth 3"));
    }

    #[test]
    fn residue_and_forms() {
        let r = rset(&p("(rset (m 2) (cell free (fixed 1/2)) (cell (opaque 3)))")).unwrap();
        assert_eq!(r.dimension(), ZBar::from(3));
        let f = form(&p("(form (1 -2) -inf)"), 2).unwrap();
        assert_eq!(f.offset, ZBar::NegInf);
        assert!(form(&p("(form (1) 0)"), 2).is_err());
        let phi = dimfun(&p("(dimfun (profile 1 0 0) (piece all (const 0)))")).unwrap();
        assert_eq!(render_dimfun(&phi), "(dimfun (profile 1 0 0) (piece (vfcell (n 1) (r 0) (center ()) (acdepth 1) (ac free) (ordset (cell)) (residue (m 0) (cell))) (form (0) 0)))");
        assert_eq!(dimfun(&p(&render_dimfun(&phi))).unwrap().pieces()[0].form, phi.pieces()[0].form);
    }

    #[test]
    fn galois_modules() {
        let m = galmod(&p("(galmod (rank 2) (gen (mat (row 0 1) (row 1 0))) (filtration (g0 all) (g1 id)))")).unwrap();
        assert_eq!(m.action().order(), 2);
        let again = galmod(&p(&render_galmod(&m))).unwrap();
        assert_eq!(again, m);
        assert!(galmod(&p("(galmod (rank 2) (gen (mat (row 0 1) (row 1 0))) (filtration (g1 all)))")).is_err());
    }
}
