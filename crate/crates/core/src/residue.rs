//! Coordinate-shaped constructible sets in affine space over the residue
//! field, with dimension bookkeeping and the residue-ring integral.

use std::collections::BTreeSet;
use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;

use crate::zbar::ZBar;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ResidueError {
    #[error("expected {expected} values, found {found}")]
    Arity { expected: usize, found: usize },
    #[error("residue cells disagree on arity ({0} vs {1})")]
    MixedArity(usize, usize),
    #[error("cannot intersect an opaque residue class with a constrained cell")]
    OpaqueIntersection,
    #[error("membership in an opaque residue class is not decidable")]
    OpaqueMembership,
}

/// Constraint on one residue coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Marker {
    /// Any value outside the listed finite set.
    Free(BTreeSet<BigRational>),
    Fixed(BigRational),
}

impl Marker {
    pub fn free() -> Self {
        Marker::Free(BTreeSet::new())
    }

    pub fn nonzero() -> Self {
        Marker::Free(BTreeSet::from([BigRational::zero()]))
    }

    pub fn fixed(q: BigRational) -> Self {
        Marker::Fixed(q)
    }

    pub fn avoiding(values: impl IntoIterator<Item = BigRational>) -> Self {
        Marker::Free(values.into_iter().collect())
    }

    pub fn is_free(&self) -> bool {
        matches!(self, Marker::Free(_))
    }

    pub fn admits(&self, v: &BigRational) -> bool {
        match self {
            Marker::Free(avoid) => !avoid.contains(v),
            Marker::Fixed(q) => q == v,
        }
    }

    /// Both constraints at once; `None` when no value satisfies them.
    pub fn meet(&self, other: &Marker) -> Option<Marker> {
        match (self, other) {
            (Marker::Free(a), Marker::Free(b)) => Some(Marker::Free(a.union(b).cloned().collect())),
            (Marker::Free(a), Marker::Fixed(q)) | (Marker::Fixed(q), Marker::Free(a)) => {
                (!a.contains(q)).then(|| Marker::Fixed(q.clone()))
            }
            (Marker::Fixed(p), Marker::Fixed(q)) => (p == q).then(|| Marker::Fixed(p.clone())),
        }
    }
}

impl fmt::Display for Marker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Marker::Free(a) if a.is_empty() => f.write_str("free"),
            Marker::Free(a) if a.len() == 1 && a.contains(&BigRational::zero()) => f.write_str("nonzero"),
            Marker::Free(a) => {
                f.write_str("(avoid")?;
                for q in a {
                    write!(f, " {q}")?;
                }
                f.write_str(")")
            }
            Marker::Fixed(q) => write!(f, "(fixed {q})"),
        }
    }
}

/// A product of coordinate markers, or an opaque class of declared
/// dimension. An opaque cell without coordinates fits any arity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ResidueCell {
    coords: Vec<Marker>,
    opaque: Option<u64>,
}

impl ResidueCell {
    pub fn new(coords: Vec<Marker>) -> Self {
        ResidueCell { coords, opaque: None }
    }

    pub fn point() -> Self {
        ResidueCell::new(Vec::new())
    }

    pub fn opaque(dim: u64) -> Self {
        ResidueCell { coords: Vec::new(), opaque: Some(dim) }
    }

    pub fn opaque_with_coords(dim: u64, coords: Vec<Marker>) -> Self {
        ResidueCell { coords, opaque: Some(dim) }
    }

    pub fn free(arity: usize) -> Self {
        ResidueCell::new(vec![Marker::free(); arity])
    }

    pub fn coords(&self) -> &[Marker] {
        &self.coords
    }

    pub fn declared_dim(&self) -> Option<u64> {
        self.opaque
    }

    pub fn is_opaque(&self) -> bool {
        self.opaque.is_some()
    }

    pub fn arity(&self) -> usize {
        self.coords.len()
    }

    pub fn fits(&self, arity: usize) -> bool {
        self.coords.len() == arity || (self.opaque.is_some() && self.coords.is_empty())
    }

    pub fn dim(&self) -> i64 {
        match self.opaque {
            Some(d) => d as i64,
            None => self.coords.iter().filter(|m| m.is_free()).count() as i64,
        }
    }

    pub fn product(&self, other: &ResidueCell) -> ResidueCell {
        let mut coords = self.coords.clone();
        coords.extend(other.coords.iter().cloned());
        let opaque = match (self.opaque, other.opaque) {
            (None, None) => None,
            _ => Some((self.dim() + other.dim()) as u64),
        };
        ResidueCell { coords, opaque }
    }

    pub fn contains(&self, t: &[BigRational]) -> Result<bool, ResidueError> {
        if self.opaque.is_some() {
            return Err(ResidueError::OpaqueMembership);
        }
        if t.len() != self.coords.len() {
            return Err(ResidueError::Arity { expected: self.coords.len(), found: t.len() });
        }
        Ok(self.coords.iter().zip(t).all(|(m, v)| m.admits(v)))
    }

    fn is_unconstrained(&self) -> bool {
        self.opaque.is_none() && self.coords.iter().all(|m| matches!(m, Marker::Free(a) if a.is_empty()))
    }

    /// `Ok(None)` for an empty intersection.
    pub fn meet(&self, other: &ResidueCell) -> Result<Option<ResidueCell>, ResidueError> {
        if self.is_opaque() || other.is_opaque() {
            return match (self.is_unconstrained(), other.is_unconstrained()) {
                (true, _) => Ok(Some(other.clone())),
                (_, true) => Ok(Some(self.clone())),
                _ => Err(ResidueError::OpaqueIntersection),
            };
        }
        if self.arity() != other.arity() {
            return Err(ResidueError::MixedArity(self.arity(), other.arity()));
        }
        let mut coords = Vec::with_capacity(self.arity());
        for (a, b) in self.coords.iter().zip(&other.coords) {
            match a.meet(b) {
                Some(m) => coords.push(m),
                None => return Ok(None),
            }
        }
        Ok(Some(ResidueCell::new(coords)))
    }

    /// Keeps the listed coordinates. Opaque cells have no coordinate
    /// structure to split, so they are returned whole.
    pub fn restrict(&self, coords: &[usize]) -> ResidueCell {
        if self.opaque.is_some() {
            return self.clone();
        }
        ResidueCell::new(coords.iter().map(|&i| self.coords[i].clone()).collect())
    }
}

impl fmt::Display for ResidueCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(cell")?;
        if let Some(d) = self.opaque {
            write!(f, " (opaque {d})")?;
        }
        for m in &self.coords {
            write!(f, " {m}")?;
        }
        f.write_str(")")
    }
}

/// Finite union of residue cells of a common arity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ResidueSet {
    arity: usize,
    cells: Vec<ResidueCell>,
}

impl ResidueSet {
    pub fn new(arity: usize, cells: Vec<ResidueCell>) -> Result<Self, ResidueError> {
        for c in &cells {
            if !c.fits(arity) {
                return Err(ResidueError::MixedArity(arity, c.arity()));
            }
        }
        Ok(ResidueSet { arity, cells })
    }

    pub fn empty(arity: usize) -> Self {
        ResidueSet { arity, cells: Vec::new() }
    }

    /// The one-point space `k^0`.
    pub fn point() -> Self {
        ResidueSet { arity: 0, cells: vec![ResidueCell::point()] }
    }

    /// `k^arity`.
    pub fn affine(arity: usize) -> Self {
        ResidueSet { arity, cells: vec![ResidueCell::free(arity)] }
    }

    pub fn from_cell(cell: ResidueCell) -> Self {
        ResidueSet { arity: cell.arity(), cells: vec![cell] }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn cells(&self) -> &[ResidueCell] {
        &self.cells
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn has_opaque(&self) -> bool {
        self.cells.iter().any(ResidueCell::is_opaque)
    }

    /// Dimension of the Zariski closure; `-inf` for the empty set.
    pub fn dimension(&self) -> ZBar {
        self.cells.iter().map(|c| ZBar::from(c.dim())).max().unwrap_or(ZBar::NegInf)
    }

    pub fn push(&mut self, cell: ResidueCell) -> Result<(), ResidueError> {
        if !cell.fits(self.arity) {
            return Err(ResidueError::MixedArity(self.arity, cell.arity()));
        }
        self.cells.push(cell);
        Ok(())
    }

    pub fn union(&self, other: &ResidueSet) -> Result<ResidueSet, ResidueError> {
        if self.arity != other.arity {
            return Err(ResidueError::MixedArity(self.arity, other.arity));
        }
        let mut cells = self.cells.clone();
        cells.extend(other.cells.iter().cloned());
        Ok(ResidueSet { arity: self.arity, cells })
    }

    pub fn product(&self, other: &ResidueSet) -> ResidueSet {
        let cells = self.cells.iter().flat_map(|a| other.cells.iter().map(move |b| a.product(b))).collect();
        ResidueSet { arity: self.arity + other.arity, cells }
    }

    pub fn intersect(&self, other: &ResidueSet) -> Result<ResidueSet, ResidueError> {
        if self.arity != other.arity {
            return Err(ResidueError::MixedArity(self.arity, other.arity));
        }
        let mut cells = Vec::new();
        for a in &self.cells {
            for b in &other.cells {
                if let Some(c) = a.meet(b)? {
                    cells.push(c);
                }
            }
        }
        Ok(ResidueSet { arity: self.arity, cells })
    }

    pub fn contains(&self, t: &[BigRational]) -> Result<bool, ResidueError> {
        for c in &self.cells {
            if c.contains(t)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn restrict(&self, coords: &[usize]) -> ResidueSet {
        ResidueSet { arity: coords.len(), cells: self.cells.iter().map(|c| c.restrict(coords)).collect() }
    }

    /// `⊕` over cells of `dim(cell) ⊙ value`.
    pub fn integrate(&self, values: &[ZBar]) -> Result<ZBar, ResidueError> {
        integrate_residue(self, values)
    }
}

impl fmt::Display for ResidueSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(rset")?;
        for c in &self.cells {
            write!(f, " {c}")?;
        }
        f.write_str(")")
    }
}

pub fn integrate_residue(s: &ResidueSet, values: &[ZBar]) -> Result<ZBar, ResidueError> {
    if values.len() != s.cells.len() {
        return Err(ResidueError::Arity { expected: s.cells.len(), found: values.len() });
    }
    Ok(s.cells.iter().zip(values).map(|(c, v)| ZBar::from(c.dim()).odot(v)).fold(ZBar::NegInf, |acc, x| acc.oplus(&x)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FubiniResult {
    pub iterated: ZBar,
    pub joint: ZBar,
    pub equal: bool,
}

/// Both sides of the product-integral identity for a function constant on
/// each pair of cells.
pub fn residue_fubini_check(x: &ResidueSet, y: &ResidueSet, phi: &[Vec<ZBar>]) -> Result<FubiniResult, ResidueError> {
    if phi.len() != x.cells.len() {
        return Err(ResidueError::Arity { expected: x.cells.len(), found: phi.len() });
    }
    let mut inner = Vec::with_capacity(phi.len());
    for row in phi {
        inner.push(integrate_residue(y, row)?);
    }
    let iterated = integrate_residue(x, &inner)?;

    let prod = x.product(y);
    let flat: Vec<ZBar> = phi.iter().flatten().cloned().collect();
    let joint = integrate_residue(&prod, &flat)?;
    Ok(FubiniResult { equal: iterated == joint, iterated, joint })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(v: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(v))
    }

    #[test]
    fn dimension_examples() {
        let s = ResidueSet::from_cell(ResidueCell::new(vec![Marker::free(), Marker::fixed(q(0))]));
        assert_eq!(s.dimension(), ZBar::from(1));
        assert_eq!(ResidueSet::empty(2).dimension(), ZBar::NegInf);
        let mut u = ResidueSet::affine(2);
        u.push(ResidueCell::new(vec![Marker::fixed(q(1)), Marker::fixed(q(2))])).unwrap();
        assert_eq!(u.dimension(), ZBar::from(2));
    }

    #[test]
    fn integrate_examples() {
        assert_eq!(ResidueSet::affine(2).integrate(&[ZBar::from(-3)]).unwrap(), ZBar::from(-1));
        assert_eq!(ResidueSet::empty(1).integrate(&[]).unwrap(), ZBar::NegInf);
        let mut s = ResidueSet::affine(1);
        s.push(ResidueCell::new(vec![Marker::fixed(q(4))])).unwrap();
        assert_eq!(s.integrate(&[ZBar::from(0), ZBar::from(5)]).unwrap(), ZBar::from(5));
        assert!(matches!(s.integrate(&[ZBar::zero()]), Err(ResidueError::Arity { .. })));
    }

    #[test]
    fn product_examples() {
        let p = ResidueSet::affine(1).product(&ResidueSet::affine(2));
        assert_eq!(p.dimension(), ZBar::from(3));
        assert!(ResidueSet::affine(1).product(&ResidueSet::empty(1)).is_empty());
        let o = ResidueSet::from_cell(ResidueCell::opaque(4)).product(&ResidueSet::point());
        assert_eq!(o.dimension(), ZBar::from(4));
        assert!(o.cells()[0].is_opaque());
    }

    #[test]
    fn fubini_examples() {
        let k = ResidueSet::affine(1);
        let r = residue_fubini_check(&k, &k, &[vec![ZBar::zero()]]).unwrap();
        assert_eq!((r.iterated, r.joint, r.equal), (ZBar::from(2), ZBar::from(2), true));

        let mut x = ResidueSet::new(1, vec![ResidueCell::new(vec![Marker::fixed(q(0))])]).unwrap();
        x.push(ResidueCell::free(1)).unwrap();
        let r = residue_fubini_check(&x, &k, &[vec![ZBar::zero()], vec![ZBar::from(-2)]]).unwrap();
        assert_eq!((r.iterated, r.joint, r.equal), (ZBar::from(1), ZBar::from(1), true));

        let r = residue_fubini_check(&ResidueSet::empty(1), &k, &[]).unwrap();
        assert_eq!((r.iterated, r.joint, r.equal), (ZBar::NegInf, ZBar::NegInf, true));
    }

    #[test]
    fn meets() {
        let nz = ResidueCell::new(vec![Marker::nonzero()]);
        let zero = ResidueCell::new(vec![Marker::fixed(q(0))]);
        assert_eq!(nz.meet(&zero).unwrap(), None);
        let one = ResidueCell::new(vec![Marker::fixed(q(1))]);
        assert_eq!(nz.meet(&one).unwrap(), Some(one.clone()));
        let op = ResidueCell::opaque(2);
        assert_eq!(op.meet(&ResidueCell::point()).unwrap(), Some(op.clone()));
        assert_eq!(op.meet(&one), Err(ResidueError::OpaqueIntersection));
    }

    #[test]
    fn rendering() {
        let c = ResidueCell::new(vec![
            Marker::free(),
            Marker::nonzero(),
            Marker::fixed(q(3)),
            Marker::avoiding([q(1), q(2)]),
        ]);
        assert_eq!(c.to_string(), "(cell free nonzero (fixed 3) (avoid 1 2))");
        assert_eq!(ResidueCell::opaque(2).to_string(), "(cell (opaque 2))");
    }
}
