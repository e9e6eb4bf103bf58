use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

use tropivol::dsl;
use tropivol::gen::Gen;
use tropivol::intlat::{smith_normal_form, IntMatrix};
use tropivol::motivic::{virtual_dim, PoincareElement};
use tropivol::sexpr::{parse, parse_one, Atom, Kind, Node, Pos};
use tropivol::vfcells::{integrate, vol, DimFunction};
use tropivol::ZBar;

fn zbar() -> impl Strategy<Value = ZBar> {
    prop_oneof![
        1 => Just(ZBar::NegInf),
        1 => Just(ZBar::PosInf),
        6 => any::<i32>().prop_map(|v| ZBar::from(v as i64)),
    ]
}

fn node(kind: Kind) -> Node {
    Node { kind, pos: Pos::default() }
}

fn tree() -> impl Strategy<Value = Node> {
    let leaf = prop_oneof![
        "[a-z][a-z0-9-]{0,6}".prop_map(|s| node(Kind::Atom(Atom::Symbol(s)))),
        any::<i64>().prop_map(|v| node(Kind::Atom(Atom::Int(v.into())))),
        (any::<i32>(), 2i32..50).prop_map(|(p, q)| {
            let r = BigRational::new(p.into(), q.into());
            node(Kind::Atom(if r.is_integer() { Atom::Int(r.to_integer()) } else { Atom::Rational(r) }))
        }),
    ];
    leaf.prop_recursive(4, 40, 6, |inner| prop::collection::vec(inner, 0..6).prop_map(|v| node(Kind::List(v))))
}

fn matrix() -> impl Strategy<Value = IntMatrix> {
    (1usize..4, 1usize..4).prop_flat_map(|(r, c)| {
        prop::collection::vec(-6i64..=6, r * c).prop_map(move |v| {
            let rows: Vec<Vec<i64>> = v.chunks(c).map(<[i64]>::to_vec).collect();
            IntMatrix::from_rows(&rows)
        })
    })
}

fn poly() -> impl Strategy<Value = PoincareElement> {
    prop::collection::vec((-4i64..=4, -3i64..=3), 0..4).prop_map(|p| PoincareElement::from_i64_pairs(&p))
}

proptest! {
    #[test]
    fn semiring_laws(a in zbar(), b in zbar(), c in zbar()) {
        prop_assert_eq!(a.oplus(&b), b.oplus(&a));
        prop_assert_eq!(a.odot(&b), b.odot(&a));
        prop_assert_eq!(a.oplus(&b).oplus(&c), a.oplus(&b.oplus(&c)));
        prop_assert_eq!(a.odot(&b).odot(&c), a.odot(&b.odot(&c)));
        prop_assert_eq!(a.odot(&b.oplus(&c)), a.odot(&b).oplus(&a.odot(&c)));
        prop_assert_eq!(ZBar::NegInf.odot(&a), ZBar::NegInf);
        prop_assert_eq!(a.oplus(&a), a.clone());
    }

    #[test]
    fn zbar_text_and_json_round_trip(a in zbar()) {
        prop_assert_eq!(a.to_string().parse::<ZBar>().unwrap(), a.clone());
        prop_assert_eq!(ZBar::from_json(&a.to_json()), Some(a));
    }

    #[test]
    fn sexpr_render_reparses(t in tree()) {
        let text = t.to_string();
        let back = parse_one(&text).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn snf_invariants(m in matrix()) {
        let s = smith_normal_form(&m);
        let d = s.u.mul(&m).unwrap().mul(&s.v).unwrap();
        for i in 0..d.rows() {
            for j in 0..d.cols() {
                let want = if i == j && i < s.d.len() { s.d[i].clone() } else { BigInt::zero() };
                prop_assert_eq!(d.get(i, j), &want);
            }
        }
        let r = s.rank();
        prop_assert!(s.d[..r].iter().all(|x| *x > BigInt::zero()) && s.d[r..].iter().all(Zero::is_zero));
        prop_assert!(s.d.windows(2).all(|w| w[1].is_multiple_of(&w[0])));
        prop_assert!(s.u.determinant().unwrap().abs().is_one());
        prop_assert!(s.v.determinant().unwrap().abs().is_one());
    }

    #[test]
    fn poincare_ring(a in poly(), b in poly(), c in poly()) {
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        prop_assert_eq!(a.mul(&PoincareElement::one()), a.clone());
        prop_assert_eq!(virtual_dim(&a.mul(&b)), virtual_dim(&a).odot(&virtual_dim(&b)));
    }

    #[test]
    fn generated_sets_round_trip_through_the_dsl(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let p = g.profile(2);
        let c = g.centers(p.n);
        let a = g.set_with_centers(p, &c, 2);
        let phi = g.dimfun_with_centers(p, &c, true);
        let text = format!("{a}");
        let back = dsl::set(&parse_one(&text).unwrap()).unwrap();
        prop_assert_eq!(back.to_string(), text);
        let ftext = format!("{phi}");
        let fback = dsl::dimfun(&parse_one(&ftext).unwrap()).unwrap();
        prop_assert_eq!(fback.to_string(), ftext);
        prop_assert_eq!(integrate(&back, &fback).unwrap(), integrate(&a, &phi).unwrap());
    }

    #[test]
    fn volume_of_unions_and_products(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let p = g.profile(2);
        let c = g.centers(p.n);
        let a = g.set_with_centers(p, &c, 1);
        let b = g.set_with_centers(p, &c, 1);
        prop_assert_eq!(vol(&a.union(&b).unwrap()), vol(&a).oplus(&vol(&b)));
        prop_assert_eq!(vol(&a.product(&b)), vol(&a).odot(&vol(&b)));
        let zero = DimFunction::constant(p, ZBar::zero());
        prop_assert_eq!(integrate(&a, &zero).unwrap(), vol(&a));
    }

    #[test]
    fn generated_documents_reparse(seed in any::<u64>()) {
        for kind in tropivol::cli::GEN_KINDS {
            let text = tropivol::cli::generate(kind, seed, 1).unwrap();
            let docs = parse(&text).unwrap();
            let rendered: Vec<String> = docs.iter().map(Node::to_string).collect();
            prop_assert_eq!(parse(&rendered.join("\n")).unwrap(), docs);
        }
    }
}
