//! One pass/fail line per acceptance criterion. The report goes straight to
//! the stderr handle so it shows up without `--nocapture`.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;

use tropivol::conductor::{
    additivity_check, chai_combine, chai_gamma, torus_conductor, trace_decomposition, RamifiedGaloisModule,
};
use tropivol::gen::{Gen, GroupKind};
use tropivol::intlat::{GroupAction, IntMatrix};
use tropivol::motivic::{compare_check, haar_integral, Component, PoincareElement, VirtualDim, WeakNeronData};
use tropivol::padic::PadicConstant;
use tropivol::presburger::{AffineForm, PresburgerCell, PresburgerSet};
use tropivol::residue::residue_fubini_check;
use tropivol::vfcells::{
    cov_check, fubini_check, integrate, integrate_threshold, oracle_bounds, projection_check, vol,
    vol_truncation_oracle, AcConstraint, AffineMap, DefinableSet, DimFunction, Profile, VFCell,
};
use tropivol::ZBar;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:?}, limit {limit:?}"))
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn line1() -> DefinableSet {
    DefinableSet::from_cell(VFCell::universe(Profile::new(1, 0, 0)))
}

fn ord_cell(c: PresburgerCell) -> DefinableSet {
    DefinableSet::from_cell(VFCell::simple(PresburgerSet::from_cell(c)))
}

// Max-plus model on i128 with sentinels, kept apart from the library type.
const NEG: i128 = i128::MIN;
const POS: i128 = i128::MAX;

fn m_oplus(a: i128, b: i128) -> i128 {
    a.max(b)
}

fn m_odot(a: i128, b: i128) -> i128 {
    if a == NEG || b == NEG {
        NEG
    } else if a == POS || b == POS {
        POS
    } else {
        a + b
    }
}

fn to_model(z: &ZBar) -> i128 {
    match z {
        ZBar::NegInf => NEG,
        ZBar::PosInf => POS,
        ZBar::Fin(v) => i128::try_from(v).unwrap(),
    }
}

fn c1_semiring() -> Outcome {
    let start = Instant::now();
    let mut g = Gen::new(1);
    let mut triples: Vec<[ZBar; 3]> = (0..10_000).map(|_| [g.zbar(), g.zbar(), g.zbar()]).collect();
    let reps = [ZBar::NegInf, ZBar::from(4), ZBar::PosInf];
    for a in &reps {
        for b in &reps {
            triples.push([a.clone(), b.clone(), ZBar::from(-7)]);
        }
    }
    for [a, b, c] in &triples {
        let (ma, mb) = (to_model(a), to_model(b));
        ensure(to_model(&a.oplus(b)) == m_oplus(ma, mb), || format!("{a} ⊕ {b} disagrees with the model"))?;
        ensure(to_model(&a.odot(b)) == m_odot(ma, mb), || format!("{a} ⊙ {b} disagrees with the model"))?;
        ensure(a.oplus(b) == b.oplus(a) && a.odot(b) == b.odot(a), || format!("commutativity at {a}, {b}"))?;
        ensure(a.oplus(b).oplus(c) == a.oplus(&b.oplus(c)), || format!("⊕ associativity at {a}, {b}, {c}"))?;
        ensure(a.odot(b).odot(c) == a.odot(&b.odot(c)), || format!("⊙ associativity at {a}, {b}, {c}"))?;
        ensure(a.odot(&b.oplus(c)) == a.odot(b).oplus(&a.odot(c)), || format!("distributivity at {a}, {b}, {c}"))?;
        ensure(ZBar::NegInf.odot(a) == ZBar::NegInf, || format!("-inf does not absorb {a}"))?;
        ensure(ZBar::NegInf.oplus(a) == *a && ZBar::zero().odot(a) == *a, || format!("units fail at {a}"))?;
    }
    within(start, Duration::from_secs(1))?;
    Ok(format!("{} triples", triples.len()))
}

fn c2_oracle() -> Outcome {
    let start = Instant::now();
    let mut g = Gen::new(2);
    let mut checked = 0;
    while checked < 200 {
        let a = DefinableSet::from_cell(g.oracle_cell());
        let (i_star, l_star) = oracle_bounds(&a).ok_or("generated cell is unbounded")?;
        let r = vol_truncation_oracle(&a, i_star as u32 + 1, l_star as u32 + 1);
        let v = vol(&a);
        ensure(r.value == v, || format!("vol {v} but oracle {} on {a}", r.value))?;
        ensure(r.stabilized && r.monotone, || format!("oracle sequences misbehave on {a}: {r:?}"))?;
        checked += 1;
    }
    within(start, Duration::from_secs(10))?;
    Ok(format!("{checked} cells"))
}

fn c3_named() -> Outcome {
    let ring = ord_cell(PresburgerCell::universe(1).ge(&[1], 0));
    let ball = ord_cell(PresburgerCell::universe(1).ge(&[1], 3));
    let shell = DefinableSet::from_cell(
        VFCell::new(
            vec![PadicConstant::zero()],
            vec![AcConstraint::fixed(vec![q(1, 1), q(0, 1)]).unwrap()],
            PresburgerSet::from_cell(PresburgerCell::universe(1).eq(&[1], 2)),
            tropivol::residue::ResidueSet::point(),
        )
        .unwrap(),
    );
    let got = [vol(&ring), vol(&ball), vol(&line1()), vol(&shell)];
    let want = [ZBar::from(0), ZBar::from(-3), ZBar::PosInf, ZBar::from(-4)];
    ensure(got == want, || format!("got {got:?}"))?;
    Ok("0, -3, +inf, -4".into())
}

fn random_instance(g: &mut Gen) -> (DefinableSet, DimFunction, DimFunction) {
    let p = g.profile(2);
    let c = g.centers(p.n);
    let k = g.int(1, 3) as usize;
    let a = g.set_with_centers(p, &c, k);
    (a, g.dimfun_with_centers(p, &c, true), g.dimfun_with_centers(p, &c, true))
}

fn c4_threshold() -> Outcome {
    let mut g = Gen::new(4);
    for _ in 0..200 {
        let (a, phi, psi) = random_instance(&mut g);
        let i = integrate(&a, &phi).map_err(|e| e.to_string())?;
        let t = integrate_threshold(&a, &phi).map_err(|e| e.to_string())?;
        ensure(i == t, || format!("integral {i} but threshold {t} for {phi} on {a}"))?;
        // φ ≤ φ ⊕ ψ and φ ⊙ 1 ≥ φ pointwise
        let upper = integrate(&a, &phi.oplus(&psi).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let shifted = integrate(&a, &phi.odot_const(&ZBar::from(1))).map_err(|e| e.to_string())?;
        ensure(i <= upper && i <= shifted, || format!("monotonicity fails for {phi} on {a}"))?;
    }
    Ok("200 instances".into())
}

fn c5_fubini() -> Outcome {
    let start = Instant::now();
    let mut g = Gen::new(5);
    let mut infinite = 0;
    for _ in 0..120 {
        let (px, py) = (g.profile(1), g.profile(1));
        let (cx, cy) = (g.centers(px.n), g.centers(py.n));
        let ax = g.set_with_centers(px, &cx, 1);
        let ay = g.set_with_centers(py, &cy, 1);
        let phi = g.product_dimfun(px, py, &cx, &cy);
        if phi.pieces().iter().any(|p| p.form.is_constant() && !p.form.eval(&[]).is_finite()) {
            infinite += 1;
        }
        let r = fubini_check(&ax, &ay, &phi).map_err(|e| e.to_string())?;
        ensure(r.equal, || format!("iterated {} joint {} for {phi}", r.iterated, r.joint))?;
    }
    ensure(infinite > 0, || "no instance carried an infinite piece".into())?;
    within(start, Duration::from_secs(10))?;
    Ok(format!("120 instances, {infinite} with infinite pieces"))
}

fn c6_cov() -> Outcome {
    let mut g = Gen::new(6);
    for _ in 0..120 {
        let p = g.profile(2);
        let c = g.centers(p.n);
        let a = g.set_with_centers(p, &c, 1);
        let map = g.affine_map(p.n);
        let image = tropivol::vfcells::apply_affine_map(&a, &map).map_err(|e| e.to_string())?.0;
        let phi = g.dimfun_with_centers(p, image.cells()[0].centers(), true);
        let r = cov_check(&a, &map, &phi).map_err(|e| e.to_string())?;
        ensure(r.equal, || format!("lhs {} rhs {} for {a} under {map:?}", r.lhs, r.rhs))?;
    }
    let ring = ord_cell(PresburgerCell::universe(1).ge(&[1], 0));
    let map = AffineMap::new(vec![PadicConstant::uniformizer_power(1)], vec![PadicConstant::zero()]).unwrap();
    let r = cov_check(&ring, &map, &DimFunction::constant(Profile::new(1, 0, 0), ZBar::zero()))
        .map_err(|e| e.to_string())?;
    ensure(r.lhs.to_i64() == Some(-1) && r.equal, || format!("uniformizer map gives {} vs {}", r.lhs, r.rhs))?;
    Ok(format!("120 maps; uniformizer map {} = {}", r.lhs, r.rhs))
}

fn c7_linearity() -> Outcome {
    let mut g = Gen::new(7);
    for _ in 0..100 {
        let (a, phi, psi) = random_instance(&mut g);
        let int = |f: &DimFunction| integrate(&a, f).map_err(|e| e.to_string());
        let s = phi.oplus(&psi).map_err(|e| e.to_string())?;
        ensure(int(&s)? == int(&phi)?.oplus(&int(&psi)?), || format!("⊕-linearity fails for {phi}, {psi}"))?;
        let c = g.zbar();
        ensure(int(&phi.odot_const(&c))? == int(&phi)?.odot(&c), || format!("⊙-linearity fails for {phi}, {c}"))?;
    }
    let mut probes = 0;
    for _ in 0..60 {
        let (px, py) = (g.profile(1), g.profile(1));
        let (cx, cy) = (g.centers(px.n), g.centers(py.n));
        let ax = g.set_with_centers(px, &cx, 1);
        let ay = g.set_with_centers(py, &cy, 1);
        let psi = g.dimfun_with_centers(px, &cx, true);
        let phi = g.product_dimfun(px, py, &cx, &cy);
        let r = projection_check(&ax, &ay, &psi, &phi).map_err(|e| e.to_string())?;
        ensure(r.equal, || format!("projection formula fails for {psi}, {phi}: {:?}", r.values))?;
        probes += r.probes;
    }
    Ok(format!("100 linear instances, {probes} fibers"))
}

fn c8_residue_fubini() -> Outcome {
    let mut g = Gen::new(8);
    for _ in 0..200 {
        let (mx, my) = (g.int(0, 2) as usize, g.int(0, 2) as usize);
        let (x, y) = (g.residue(mx), g.residue(my));
        let rows: Vec<Vec<ZBar>> = x.cells().iter().map(|_| y.cells().iter().map(|_| g.zbar()).collect()).collect();
        let r = residue_fubini_check(&x, &y, &rows).map_err(|e| e.to_string())?;
        // direct max over pairs of cells
        let mut direct = ZBar::NegInf;
        for (cx, row) in x.cells().iter().zip(&rows) {
            for (cy, v) in y.cells().iter().zip(row) {
                direct = direct.oplus(&ZBar::from(cx.dim() + cy.dim()).odot(v));
            }
        }
        ensure(r.equal && r.joint == direct, || format!("{x} × {y}: {r:?}, direct {direct}"))?;
    }
    Ok("200 instances".into())
}

fn c9_haar() -> Outcome {
    let mut g = Gen::new(9);
    let mut n = 0;
    for gdim in 0..=2 {
        for gamma in -5..=5 {
            for _ in 0..3 {
                let class = g.fiber_class(gdim);
                let (_, d) = haar_integral(&class, gdim, gamma).map_err(|e| e.to_string())?;
                ensure(d == VirtualDim::from_zbar(&ZBar::from(-gamma)), || {
                    format!("{class}, g={gdim}, γ={gamma}: {d}")
                })?;
                n += 1;
            }
        }
    }
    Ok(format!("{n} classes"))
}

fn c10_compare() -> Outcome {
    let p1 = Profile::new(1, 0, 0);
    let sphere = ord_cell(PresburgerCell::universe(1).eq(&[1], 0));
    for gamma in -3..=3 {
        let w = WeakNeronData::new(1, vec![Component { poincare: PoincareElement::gm(), dim: 1, ord_omega: gamma }])
            .map_err(|e| e.to_string())?;
        let r =
            compare_check(&w, &sphere, &DimFunction::constant(p1, ZBar::from(-gamma))).map_err(|e| e.to_string())?;
        ensure(r.equal, || format!("γ={gamma}: {} vs {}", r.lhs, r.rhs))?;
    }
    let w = WeakNeronData::new(1, vec![Component { poincare: PoincareElement::lefschetz(), dim: 1, ord_omega: 0 }])
        .map_err(|e| e.to_string())?;
    let ball = ord_cell(PresburgerCell::universe(1).ge(&[1], 1));
    let r = compare_check(&w, &ball, &DimFunction::constant(p1, ZBar::zero())).map_err(|e| e.to_string())?;
    ensure(!r.equal, || "mismatched instance compared equal".into())?;
    Ok(format!("equal for γ in -3..3; mismatch {} vs {}", r.lhs, r.rhs))
}

fn c11_swap() -> Outcome {
    let start = Instant::now();
    let action = GroupAction::from_generators(2, vec![IntMatrix::from_rows(&[[0, 1], [1, 0]])]).unwrap();
    let g2 = RamifiedGaloisModule::tame(action);
    let t = trace_decomposition(&g2);
    ensure(t.b_part == IntMatrix::from_rows(&[[1], [-1]]), || format!("bPart {}", t.b_part))?;
    ensure(t.split_part.free_rank == 1 && t.split_generators == IntMatrix::from_rows(&[[1], [1]]), || {
        format!("split part rank {} generated by {}", t.split_part.free_rank, t.split_generators)
    })?;
    ensure(t.isogeny_cokernel == vec![BigInt::from(2)], || format!("isogeny cokernel {:?}", t.isogeny_cokernel))?;
    let r = additivity_check(&g2, &IntMatrix::from_rows(&[[1], [-1]])).map_err(|e| e.to_string())?;
    let c = |m: &RamifiedGaloisModule| torus_conductor(m).map_err(|e| e.to_string());
    let (c1, c2, c3) = (c(&r.sub)?, c(&g2)?, c(&r.quotient)?);
    ensure(c1 == q(1, 2) && c2 == q(1, 2) && c3 == q(0, 1), || format!("conductors {c1}, {c2}, {c3}"))?;
    ensure(r.equal && r.sum() == r.c_middle, || format!("additivity {r:?}"))?;
    within(start, Duration::from_secs(1))?;
    Ok(format!("c(G1) = {c1}, c(G2) = {c2}, c(G3) = {c3}"))
}

fn c12_chai() -> Outcome {
    let c = chai_combine(&q(1, 2), &q(0, 1), &BigInt::from(0)).map_err(|e| e.to_string())?;
    ensure(c == q(1, 2), || format!("chai_combine gave {c}"))?;
    let mut g = Gen::new(12);
    for i in 0..60 {
        let kind = [GroupKind::Z2, GroupKind::Z3, GroupKind::S3][i % 3];
        let (m, inj) = g.exact_sequence(kind);
        let r = additivity_check(&m, &inj).map_err(|e| e.to_string())?;
        let gamma = chai_gamma(&r.c_middle, &r.c_sub, &r.c_quotient).map_err(|e| e.to_string())?;
        let back = chai_combine(&r.c_sub, &r.c_quotient, &gamma).map_err(|e| e.to_string())?;
        ensure(back == r.c_middle, || format!("round trip {back} vs {}", r.c_middle))?;
        let shifted = &r.c_middle + q(1, 2);
        ensure(chai_gamma(&shifted, &r.c_sub, &r.c_quotient).is_err(), || "non-integral γ accepted".into())?;
    }
    Ok("1/2; 60 sequences".into())
}

/// A bounded cell around the origin in `n` coordinates with a random affine
/// density normalized to integrate to 0.
fn normalized_factor(g: &mut Gen, n: usize) -> Result<(DefinableSet, AffineForm), String> {
    let all: Vec<usize> = (0..n).collect();
    let cell = g.pcell(n, &all, (-2, 2), 3, 3);
    let set = DefinableSet::from_cell(VFCell::simple(PresburgerSet::from_cell(cell)));
    let coeffs: Vec<i64> = (0..n).map(|_| g.int(-2, 2)).collect();
    let raw = AffineForm::from_i64(&coeffs, 0);
    let p = Profile::new(n, 0, 0);
    let total =
        integrate(&set, &DimFunction::affine(p, raw.clone()).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let offset = total.to_i64().ok_or("factor set is empty")?;
    Ok((set, AffineForm::from_i64(&coeffs, -offset)))
}

fn c13_product_group() -> Outcome {
    let mut g = Gen::new(13);
    let mut done = 0;
    while done < 50 {
        let (t, a) = (g.int(1, 2) as usize, g.int(1, 2) as usize);
        let Ok((st, ft)) = normalized_factor(&mut g, t) else { continue };
        let Ok((sa, fa)) = normalized_factor(&mut g, a) else { continue };
        let (pt, pa) = (Profile::new(t, 0, 0), Profile::new(a, 0, 0));
        let it = integrate(&st, &DimFunction::affine(pt, ft.clone()).unwrap()).map_err(|e| e.to_string())?;
        let ia = integrate(&sa, &DimFunction::affine(pa, fa.clone()).unwrap()).map_err(|e| e.to_string())?;
        let tv: Vec<usize> = (0..t).collect();
        let av: Vec<usize> = (t..t + a).collect();
        let density = ft.embed(t + a, &tv).odot(&fa.embed(t + a, &av));
        let product = st.product(&sa);
        let ig =
            integrate(&product, &DimFunction::affine(pt.product(&pa), density).unwrap()).map_err(|e| e.to_string())?;
        ensure(it == ZBar::zero() && ia == ZBar::zero() && ig == it.odot(&ia), || {
            format!("T: {it}, A: {ia}, T×A: {ig} on {product}")
        })?;
        done += 1;
    }
    Ok("50 product instances, 0 = 0 ⊙ 0".into())
}

fn c14_corpus() -> Outcome {
    let start = Instant::now();
    let files = common::corpus();
    for sx in &files {
        let want =
            std::fs::read_to_string(sx.with_extension("expected")).map_err(|e| format!("{}: {e}", sx.display()))?;
        ensure(common::run_case(sx) == want, || format!("{} differs", sx.display()))?;
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!("{} files", files.len()))
}

#[test]
fn acceptance() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 14] = [
        ("semiring laws", c1_semiring),
        ("closed-form volume vs truncation oracle", c2_oracle),
        ("named volumes", c3_named),
        ("integral equals threshold; monotone", c4_threshold),
        ("Fubini", c5_fubini),
        ("change of variables", c6_cov),
        ("linearity and projection formula", c7_linearity),
        ("residue Fubini", c8_residue_fubini),
        ("Haar virtual dimension", c9_haar),
        ("motivic comparison", c10_compare),
        ("swap lattice example", c11_swap),
        ("conductor combinator", c12_chai),
        ("product group integral", c13_product_group),
        ("CLI golden corpus", c14_corpus),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let r = f();
        let t = start.elapsed();
        match &r {
            Ok(detail) => {
                let _ = writeln!(std::io::stderr(), "[{:>2}] PASS {name}: {detail} ({t:.2?})", i + 1);
            }
            Err(why) => {
                let _ = writeln!(std::io::stderr(), "[{:>2}] FAIL {name}: {why} ({t:.2?})", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
