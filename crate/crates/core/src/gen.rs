//! Seeded random instances for property tests and `tropivol gen`.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conductor::RamifiedGaloisModule;
use crate::intlat::{GroupAction, IntMatrix};
use crate::motivic::PoincareElement;
use crate::padic::PadicConstant;
use crate::presburger::{AffineForm, PresburgerCell, PresburgerSet};
use crate::residue::{Marker, ResidueCell, ResidueSet};
use crate::vfcells::{AcConstraint, AffineMap, DefinableSet, DimFunction, Piece, Profile, VFCell};
use crate::zbar::ZBar;

pub struct Gen {
    rng: ChaCha8Rng,
}

/// Finite groups used for Galois lattices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    Z2,
    Z3,
    S3,
}

fn q(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn int(&mut self, lo: i64, hi: i64) -> i64 {
        self.rng.gen_range(lo..=hi)
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    /// Mostly small integers, with each infinity now and then.
    pub fn zbar(&mut self) -> ZBar {
        match self.int(0, 9) {
            0 => ZBar::NegInf,
            1 => ZBar::PosInf,
            _ => ZBar::from(self.int(-20, 20)),
        }
    }

    pub fn nonzero_digit(&mut self) -> BigRational {
        let v = self.int(1, 4);
        let d = BigRational::new(BigInt::from(v), BigInt::from(self.int(1, 2)));
        if self.chance(0.3) {
            -d
        } else {
            d
        }
    }

    /// A short expansion with valuation in `[lo, hi]`, or zero.
    pub fn padic(&mut self, lo: i64, hi: i64) -> PadicConstant {
        if self.chance(0.3) {
            return PadicConstant::zero();
        }
        let o = self.int(lo, hi);
        let terms = (0..self.int(1, 3)).map(|k| (o + 2 * k, self.nonzero_digit())).collect::<Vec<_>>();
        PadicConstant::from_terms(terms)
    }

    pub fn ac(&mut self, max_depth: usize) -> AcConstraint {
        let depth = self.int(1, max_depth as i64) as usize;
        if self.chance(0.5) {
            AcConstraint::FreeUnit { depth }
        } else {
            let mut d = vec![self.nonzero_digit()];
            for _ in 1..depth {
                d.push(if self.chance(0.4) { q(0) } else { self.nonzero_digit() });
            }
            AcConstraint::Fixed(d)
        }
    }

    /// Box `[lo_i, lo_i + w_i]` on the listed variables plus a few random
    /// constraints with coefficients up to `coeff`.
    pub fn pcell(&mut self, dim: usize, boxed: &[usize], lo: (i64, i64), width: i64, coeff: i64) -> PresburgerCell {
        let mut c = PresburgerCell::universe(dim);
        for &v in boxed {
            let l = self.int(lo.0, lo.1);
            let mut unit = vec![0; dim];
            unit[v] = 1;
            c = c.ge(&unit, l).le(&unit, l + self.int(0, width));
        }
        for _ in 0..self.int(0, 2) {
            let a: Vec<i64> = (0..dim).map(|_| self.int(-coeff, coeff)).collect();
            if a.iter().all(|&x| x == 0) {
                continue;
            }
            let b = self.int(-coeff, coeff);
            c = if self.chance(0.5) { c.ge(&a, b) } else { c.le(&a, b) };
        }
        if self.chance(0.2) && dim > 0 {
            let a: Vec<i64> = (0..dim).map(|_| self.int(0, 2)).collect();
            if a.iter().any(|&x| x != 0) {
                let m = self.int(2, 3);
                c = c.cong(&a, self.int(0, m - 1), m);
            }
        }
        c
    }

    pub fn residue(&mut self, m: usize) -> ResidueSet {
        let mut s = ResidueSet::empty(m);
        for _ in 0..self.int(1, 2) {
            let coords = (0..m)
                .map(|_| match self.int(0, 3) {
                    0 => Marker::fixed(q(self.int(-2, 2))),
                    1 => Marker::nonzero(),
                    _ => Marker::free(),
                })
                .collect();
            s.push(ResidueCell::new(coords)).expect("arity");
        }
        s
    }

    /// A cell whose order set bounds every valuation, sized for the
    /// truncation oracle: `n ≤ 2`, depths at most 3, coefficients up to 9.
    pub fn oracle_cell(&mut self) -> VFCell {
        let n = self.int(1, 2) as usize;
        let r = self.int(0, 1) as usize;
        let centers = (0..n).map(|_| self.padic(-2, 2)).collect();
        let ac = (0..n).map(|_| self.ac(3)).collect();
        let all: Vec<usize> = (0..n + r).collect();
        let cells = (0..self.int(1, 2)).map(|_| self.pcell(n + r, &all, (-2, 2), 3, 9)).collect();
        let ord = PresburgerSet::new(n + r, cells).expect("dimension");
        let m = self.int(0, 1) as usize;
        let residue = self.residue(m);
        VFCell::new(centers, ac, ord, residue).expect("well-formed")
    }

    /// Cells sharing one vector of centers, with mostly bounded order sets.
    pub fn set_with_centers(&mut self, p: Profile, centers: &[PadicConstant], cells: usize) -> DefinableSet {
        let out = (0..cells)
            .map(|_| {
                let d = p.int_dim();
                let mut boxed: Vec<usize> = (0..d).filter(|_| self.chance(0.7)).collect();
                boxed.sort_unstable();
                let pc = self.pcell(d, &boxed, (-2, 3), 3, 4);
                let ac = (0..p.n).map(|_| self.ac(2)).collect();
                let res = self.residue(p.m);
                VFCell::new(centers.to_vec(), ac, PresburgerSet::from_cell(pc), res).expect("well-formed")
            })
            .collect();
        DefinableSet::new(p, out).expect("profile")
    }

    pub fn centers(&mut self, n: usize) -> Vec<PadicConstant> {
        (0..n).map(|_| self.padic(-1, 2)).collect()
    }

    pub fn profile(&mut self, max_n: usize) -> Profile {
        Profile::new(self.int(1, max_n as i64) as usize, self.int(0, 1) as usize, self.int(0, 1) as usize)
    }

    pub fn form(&mut self, dim: usize, allow_inf: bool) -> AffineForm {
        if allow_inf && self.chance(0.1) {
            return AffineForm::constant(dim, if self.chance(0.5) { ZBar::NegInf } else { ZBar::PosInf });
        }
        let coeffs: Vec<i64> = (0..dim).map(|_| self.int(-2, 2)).collect();
        AffineForm::from_i64(&coeffs, self.int(-5, 5))
    }

    /// One to three pieces over the given centers.
    pub fn dimfun_with_centers(&mut self, p: Profile, centers: &[PadicConstant], allow_inf: bool) -> DimFunction {
        let pieces = (0..self.int(1, 3))
            .map(|_| {
                let d = p.int_dim();
                let boxed: Vec<usize> = (0..d).filter(|_| self.chance(0.4)).collect();
                let pc = self.pcell(d, &boxed, (-3, 3), 4, 3);
                let ac = (0..p.n).map(|_| self.ac(2)).collect();
                let res = self.residue(p.m);
                let cell = VFCell::new(centers.to_vec(), ac, PresburgerSet::from_cell(pc), res).expect("well-formed");
                Piece::new(cell, self.form(d, allow_inf)).expect("arity")
            })
            .collect();
        DimFunction::new(p, pieces).expect("profile")
    }

    /// A function on `x × y` whose pieces may couple the factors; the
    /// x-coordinates of a coupled piece are boxed.
    pub fn product_dimfun(
        &mut self,
        px: Profile,
        py: Profile,
        cx: &[PadicConstant],
        cy: &[PadicConstant],
    ) -> DimFunction {
        let p = px.product(&py);
        let d = p.int_dim();
        let xvars: Vec<usize> = (0..px.n).chain(px.n + py.n..px.n + py.n + px.r).collect();
        let mut centers = cx.to_vec();
        centers.extend(cy.iter().cloned());
        let pieces = (0..self.int(1, 3))
            .map(|_| {
                let coupled = self.chance(0.4);
                let pc = if coupled {
                    self.pcell(d, &xvars, (-2, 3), 2, 2)
                } else {
                    let cxs = self.pcell(xvars.len(), &[], (0, 0), 0, 3);
                    let yvars: Vec<usize> = (0..d).filter(|v| !xvars.contains(v)).collect();
                    let cys = self.pcell(yvars.len(), &[], (0, 0), 0, 3);
                    cxs.embed(d, &xvars).meet(&cys.embed(d, &yvars))
                };
                let ac = (0..p.n).map(|_| self.ac(2)).collect();
                let res = self.residue(p.m);
                let cell = VFCell::new(centers.clone(), ac, PresburgerSet::from_cell(pc), res).expect("well-formed");
                Piece::new(cell, self.form(d, true)).expect("arity")
            })
            .collect();
        DimFunction::new(p, pieces).expect("profile")
    }

    /// `y ↦ a y + b` with `ord a_i ∈ [-2, 2]` and unit parts of a few digits.
    pub fn affine_map(&mut self, n: usize) -> AffineMap {
        let scale = (0..n)
            .map(|_| {
                let o = self.int(-2, 2);
                let digits = (0..self.int(1, 3))
                    .map(|k| (o + k, if k == 0 { self.nonzero_digit() } else { q(self.int(-2, 2)) }));
                PadicConstant::from_terms(digits.collect::<Vec<_>>())
            })
            .collect();
        let offset = (0..n).map(|_| self.padic(-1, 3)).collect();
        AffineMap::new(scale, offset).expect("nonzero scale")
    }

    /// A class of degree `2g` with positive leading coefficient.
    pub fn fiber_class(&mut self, g: i64) -> PoincareElement {
        let mut pairs = vec![(2 * g, BigInt::from(self.int(1, 3)))];
        for e in 0..2 * g {
            if self.chance(0.5) {
                pairs.push((e, BigInt::from(self.int(-3, 3))));
            }
        }
        PoincareElement::from_pairs(pairs)
    }

    fn unimodular(&mut self, n: usize) -> IntMatrix {
        let mut u = IntMatrix::identity(n);
        if n < 2 {
            return u;
        }
        for _ in 0..self.int(0, 4) {
            let i = self.int(0, n as i64 - 1) as usize;
            let mut j = self.int(0, n as i64 - 2) as usize;
            if j >= i {
                j += 1;
            }
            let k = BigInt::from(self.int(-2, 2));
            let mut e = IntMatrix::identity(n);
            e.set(i, j, k);
            u = e.mul(&u).expect("square");
        }
        u
    }

    /// A Γ-equivariant inclusion of lattices `sub → middle` with torsion-free
    /// cokernel, presented as the middle module and the inclusion matrix.
    pub fn exact_sequence(&mut self, kind: GroupKind) -> (RamifiedGaloisModule, IntMatrix) {
        let blocks = basic_modules(kind);
        // the first block is faithful, so the sum is too
        let mut chosen = vec![0usize];
        for _ in 0..self.int(0, 2) {
            chosen.push(self.int(0, blocks.len() as i64 - 1) as usize);
        }
        chosen.shuffle(&mut self.rng);
        let ngens = blocks[0].gens.len();
        let n: usize = chosen.iter().map(|&b| blocks[b].rank).sum();
        let mut gens = vec![IntMatrix::zeros(n, n); ngens];
        let mut sub_cols: Vec<Vec<BigInt>> = Vec::new();
        let mut at = 0;
        for &b in &chosen {
            let blk = &blocks[b];
            for (g, m) in gens.iter_mut().zip(&blk.gens) {
                for i in 0..blk.rank {
                    for j in 0..blk.rank {
                        g.set(at + i, at + j, m.get(i, j).clone());
                    }
                }
            }
            let pick = self.int(0, blk.subs.len() as i64) as usize;
            if pick < blk.subs.len() {
                for col in &blk.subs[pick] {
                    let mut v = vec![BigInt::from(0); n];
                    for (i, x) in col.iter().enumerate() {
                        v[at + i] = BigInt::from(*x);
                    }
                    sub_cols.push(v);
                }
            }
            at += blk.rank;
        }
        let u = self.unimodular(n);
        let u_inv = crate::intlat::unimodular_inverse(&u).expect("unimodular");
        let gens: Vec<IntMatrix> = gens.iter().map(|g| u.mul(g).unwrap().mul(&u_inv).unwrap()).collect();
        let inj = if sub_cols.is_empty() {
            IntMatrix::zeros(n, 0)
        } else {
            u.mul(&IntMatrix::from_columns(n, &sub_cols)).unwrap()
        };
        let action = GroupAction::from_generators(n, gens).expect("finite group");
        let module = self.filtered(action, kind);
        (module, inj)
    }

    /// Tame chain, or now and then a longer synthetic chain.
    fn filtered(&mut self, action: GroupAction, kind: GroupKind) -> RamifiedGaloisModule {
        if self.chance(0.7) {
            return RamifiedGaloisModule::tame(action);
        }
        let all: Vec<usize> = (0..action.order()).collect();
        let id = vec![action.identity_index()];
        let middle = match kind {
            GroupKind::S3 => {
                // the rotation subgroup: elements of order dividing 3
                let rot: Vec<usize> = (0..action.order())
                    .filter(|&i| {
                        let e = &action.elements()[i];
                        let e3 = e.mul(e).unwrap().mul(e).unwrap();
                        e3 == IntMatrix::identity(action.rank())
                    })
                    .collect();
                rot
            }
            _ => all.clone(),
        };
        let mut chain = vec![all];
        for _ in 0..self.int(1, 2) {
            chain.push(middle.clone());
        }
        chain.push(id);
        RamifiedGaloisModule::new(action, chain).expect("valid chain")
    }
}

struct Block {
    rank: usize,
    gens: Vec<IntMatrix>,
    /// Equivariant saturated sublattices, as column lists.
    subs: Vec<Vec<Vec<i64>>>,
}

fn basic_modules(kind: GroupKind) -> Vec<Block> {
    let m = |rows: &[&[i64]]| IntMatrix::from_rows(rows);
    match kind {
        GroupKind::Z2 => vec![
            Block { rank: 2, gens: vec![m(&[&[0, 1], &[1, 0]])], subs: vec![vec![vec![1, 1]], vec![vec![1, -1]]] },
            Block { rank: 1, gens: vec![m(&[&[1]])], subs: vec![vec![vec![1]]] },
            Block { rank: 1, gens: vec![m(&[&[-1]])], subs: vec![vec![vec![1]]] },
        ],
        GroupKind::Z3 => vec![
            Block {
                rank: 3,
                gens: vec![m(&[&[0, 0, 1], &[1, 0, 0], &[0, 1, 0]])],
                subs: vec![vec![vec![1, 1, 1]], vec![vec![1, -1, 0], vec![0, 1, -1]]],
            },
            Block { rank: 1, gens: vec![m(&[&[1]])], subs: vec![vec![vec![1]]] },
            Block { rank: 2, gens: vec![m(&[&[0, -1], &[1, -1]])], subs: vec![] },
        ],
        GroupKind::S3 => vec![
            Block {
                rank: 3,
                gens: vec![m(&[&[0, 1, 0], &[1, 0, 0], &[0, 0, 1]]), m(&[&[0, 0, 1], &[1, 0, 0], &[0, 1, 0]])],
                subs: vec![vec![vec![1, 1, 1]], vec![vec![1, -1, 0], vec![0, 1, -1]]],
            },
            Block { rank: 1, gens: vec![m(&[&[1]]), m(&[&[1]])], subs: vec![vec![vec![1]]] },
            Block { rank: 1, gens: vec![m(&[&[-1]]), m(&[&[1]])], subs: vec![vec![vec![1]]] },
            // augmentation kernel with basis e1 - e2, e2 - e3
            Block { rank: 2, gens: vec![m(&[&[-1, 1], &[0, 1]]), m(&[&[0, -1], &[1, -1]])], subs: vec![] },
        ],
    }
}
