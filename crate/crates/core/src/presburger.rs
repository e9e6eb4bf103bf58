//! Conjunctive linear/congruence cells in `Z^r`, finite unions of them, and
//! exact suprema of affine objectives over their integer points.
//!
//! Integer feasibility is decided by the Omega test: equalities are
//! parametrized through Smith normal form, inequalities are eliminated
//! variable by variable with real and dark shadows and splinters when the
//! elimination is not exact.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::intlat::{smith_normal_form, IntMatrix};
use crate::zbar::ZBar;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PresburgerError {
    #[error("expected {expected} coefficients, found {found}")]
    Arity { expected: usize, found: usize },
    #[error("congruence modulus must be at least 2, found {0}")]
    Modulus(BigInt),
    #[error("variable index {index} out of range for dimension {dim}")]
    Index { index: usize, dim: usize },
    #[error("cells of a union must share their dimension ({0} vs {1})")]
    MixedDimension(usize, usize),
}

/// `coeffs · x ≥ bound`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Inequality {
    pub coeffs: Vec<BigInt>,
    pub bound: BigInt,
}

/// `coeffs · x ≡ residue (mod modulus)`, with `0 ≤ residue < modulus`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Congruence {
    pub coeffs: Vec<BigInt>,
    pub residue: BigInt,
    pub modulus: BigInt,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PresburgerCell {
    dim: usize,
    inequalities: Vec<Inequality>,
    congruences: Vec<Congruence>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PresburgerSet {
    dim: usize,
    cells: Vec<PresburgerCell>,
}

/// `coeffs · x + offset`; when the offset is infinite the form is constant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AffineForm {
    pub coeffs: Vec<BigInt>,
    pub offset: ZBar,
}

fn dot(a: &[BigInt], x: &[BigInt]) -> BigInt {
    a.iter().zip(x).map(|(p, q)| p * q).sum()
}

fn to_big(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

impl PresburgerCell {
    pub fn universe(dim: usize) -> Self {
        PresburgerCell { dim, inequalities: Vec::new(), congruences: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn inequalities(&self) -> &[Inequality] {
        &self.inequalities
    }

    pub fn congruences(&self) -> &[Congruence] {
        &self.congruences
    }

    fn check_arity(&self, coeffs: &[BigInt]) -> Result<(), PresburgerError> {
        if coeffs.len() != self.dim {
            return Err(PresburgerError::Arity { expected: self.dim, found: coeffs.len() });
        }
        Ok(())
    }

    pub fn add_ge(&mut self, coeffs: Vec<BigInt>, bound: BigInt) -> Result<(), PresburgerError> {
        self.check_arity(&coeffs)?;
        self.inequalities.push(Inequality { coeffs, bound });
        Ok(())
    }

    pub fn add_le(&mut self, coeffs: Vec<BigInt>, bound: BigInt) -> Result<(), PresburgerError> {
        let neg = coeffs.iter().map(|c| -c).collect();
        self.add_ge(neg, -bound)
    }

    pub fn add_eq(&mut self, coeffs: Vec<BigInt>, value: BigInt) -> Result<(), PresburgerError> {
        self.add_ge(coeffs.clone(), value.clone())?;
        self.add_le(coeffs, value)
    }

    pub fn add_cong(&mut self, coeffs: Vec<BigInt>, residue: BigInt, modulus: BigInt) -> Result<(), PresburgerError> {
        self.check_arity(&coeffs)?;
        if modulus < BigInt::from(2) {
            return Err(PresburgerError::Modulus(modulus));
        }
        let residue = residue.mod_floor(&modulus);
        self.congruences.push(Congruence { coeffs, residue, modulus });
        Ok(())
    }

    /// Small-integer builder; panics on arity errors.
    pub fn ge(mut self, coeffs: &[i64], bound: i64) -> Self {
        self.add_ge(to_big(coeffs), bound.into()).expect("arity");
        self
    }

    pub fn le(mut self, coeffs: &[i64], bound: i64) -> Self {
        self.add_le(to_big(coeffs), bound.into()).expect("arity");
        self
    }

    pub fn eq(mut self, coeffs: &[i64], value: i64) -> Self {
        self.add_eq(to_big(coeffs), value.into()).expect("arity");
        self
    }

    pub fn cong(mut self, coeffs: &[i64], residue: i64, modulus: i64) -> Self {
        self.add_cong(to_big(coeffs), residue.into(), modulus.into()).expect("valid congruence");
        self
    }

    pub fn contains(&self, x: &[BigInt]) -> bool {
        assert_eq!(x.len(), self.dim);
        self.inequalities.iter().all(|c| dot(&c.coeffs, x) >= c.bound)
            && self.congruences.iter().all(|c| (dot(&c.coeffs, x) - &c.residue).is_multiple_of(&c.modulus))
    }

    /// Conjunction of two cells of the same dimension.
    pub fn meet(&self, other: &PresburgerCell) -> PresburgerCell {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        out.inequalities.extend(other.inequalities.iter().cloned());
        out.congruences.extend(other.congruences.iter().cloned());
        out
    }

    /// Re-indexes into `Z^new_dim`, sending variable `i` to `map[i]`.
    pub fn embed(&self, new_dim: usize, map: &[usize]) -> PresburgerCell {
        assert_eq!(map.len(), self.dim);
        let spread = |coeffs: &[BigInt]| {
            let mut out = vec![BigInt::zero(); new_dim];
            for (i, c) in coeffs.iter().enumerate() {
                out[map[i]] += c;
            }
            out
        };
        PresburgerCell {
            dim: new_dim,
            inequalities: self
                .inequalities
                .iter()
                .map(|c| Inequality { coeffs: spread(&c.coeffs), bound: c.bound.clone() })
                .collect(),
            congruences: self
                .congruences
                .iter()
                .map(|c| Congruence {
                    coeffs: spread(&c.coeffs),
                    residue: c.residue.clone(),
                    modulus: c.modulus.clone(),
                })
                .collect(),
        }
    }

    /// Substitutes fixed values. `None` when a constraint becomes false.
    pub fn slice(&self, values: &[Option<BigInt>]) -> Option<PresburgerCell> {
        assert_eq!(values.len(), self.dim);
        let keep: Vec<usize> = (0..self.dim).filter(|&i| values[i].is_none()).collect();
        let split = |coeffs: &[BigInt]| -> (Vec<BigInt>, BigInt) {
            let mut fixed = BigInt::zero();
            for (i, c) in coeffs.iter().enumerate() {
                if let Some(v) = &values[i] {
                    fixed += c * v;
                }
            }
            (keep.iter().map(|&i| coeffs[i].clone()).collect(), fixed)
        };
        let mut out = PresburgerCell::universe(keep.len());
        for c in &self.inequalities {
            let (coeffs, fixed) = split(&c.coeffs);
            let bound = &c.bound - fixed;
            if coeffs.iter().all(Zero::is_zero) {
                if !bound.is_positive() {
                    continue;
                }
                return None;
            }
            out.inequalities.push(Inequality { coeffs, bound });
        }
        for c in &self.congruences {
            let (coeffs, fixed) = split(&c.coeffs);
            let residue = (&c.residue - fixed).mod_floor(&c.modulus);
            if coeffs.iter().all(Zero::is_zero) {
                if residue.is_zero() {
                    continue;
                }
                return None;
            }
            out.congruences.push(Congruence { coeffs, residue, modulus: c.modulus.clone() });
        }
        Some(out)
    }

    /// The image of the cell under `x ↦ x + shift`.
    pub fn translate(&self, shift: &[BigInt]) -> PresburgerCell {
        assert_eq!(shift.len(), self.dim);
        PresburgerCell {
            dim: self.dim,
            inequalities: self
                .inequalities
                .iter()
                .map(|c| Inequality { coeffs: c.coeffs.clone(), bound: &c.bound + dot(&c.coeffs, shift) })
                .collect(),
            congruences: self
                .congruences
                .iter()
                .map(|c| Congruence {
                    coeffs: c.coeffs.clone(),
                    residue: (&c.residue + dot(&c.coeffs, shift)).mod_floor(&c.modulus),
                    modulus: c.modulus.clone(),
                })
                .collect(),
        }
    }

    /// Whether every constraint mentions only variables in `vars`.
    pub fn supported_in(&self, vars: &[usize]) -> bool {
        let inside = |coeffs: &[BigInt]| coeffs.iter().enumerate().all(|(i, c)| c.is_zero() || vars.contains(&i));
        self.inequalities.iter().all(|c| inside(&c.coeffs)) && self.congruences.iter().all(|c| inside(&c.coeffs))
    }

    /// Keeps only the constraints supported in `vars` and re-indexes them
    /// into `Z^vars.len()` in the given order. Exact as a projection only
    /// when no constraint couples `vars` with the other variables.
    pub fn restrict(&self, vars: &[usize]) -> PresburgerCell {
        let pick = |coeffs: &[BigInt]| vars.iter().map(|&i| coeffs[i].clone()).collect();
        let mut out = PresburgerCell::universe(vars.len());
        let mine: Vec<bool> = (0..self.dim).map(|i| vars.contains(&i)).collect();
        let inside = |coeffs: &[BigInt]| coeffs.iter().enumerate().all(|(i, c)| c.is_zero() || mine[i]);
        for c in &self.inequalities {
            if inside(&c.coeffs) {
                out.inequalities.push(Inequality { coeffs: pick(&c.coeffs), bound: c.bound.clone() });
            }
        }
        for c in &self.congruences {
            if inside(&c.coeffs) {
                out.congruences.push(Congruence {
                    coeffs: pick(&c.coeffs),
                    residue: c.residue.clone(),
                    modulus: c.modulus.clone(),
                });
            }
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        !omega::cell_feasible(self, None)
    }

    fn feasible_with(&self, extra: &Inequality) -> bool {
        omega::cell_feasible(self, Some(extra))
    }

    /// Exact supremum of `coeffs · x` over the cell, with no offset.
    pub fn sup_linear(&self, coeffs: &[BigInt]) -> ZBar {
        assert_eq!(coeffs.len(), self.dim);
        if self.is_empty() {
            return ZBar::NegInf;
        }
        if coeffs.iter().all(Zero::is_zero) {
            return ZBar::zero();
        }
        if self.unbounded_along(coeffs) {
            return ZBar::PosInf;
        }
        let at_least = |t: &BigInt| self.feasible_with(&Inequality { coeffs: coeffs.to_vec(), bound: t.clone() });
        // gallop to a bracket lo feasible, hi infeasible
        let (mut lo, mut hi);
        let zero = BigInt::zero();
        if at_least(&zero) {
            lo = zero;
            let mut step = BigInt::one();
            loop {
                let t = &lo + &step;
                if at_least(&t) {
                    lo = t;
                    step *= 2;
                } else {
                    hi = t;
                    break;
                }
            }
        } else {
            hi = zero;
            let mut step = BigInt::one();
            loop {
                let t = &hi - &step;
                if at_least(&t) {
                    lo = t;
                    break;
                }
                hi = t;
                step *= 2;
            }
        }
        while &hi - &lo > BigInt::one() {
            let mid: BigInt = (&lo + &hi).div_floor(&BigInt::from(2));
            if at_least(&mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        ZBar::Fin(lo)
    }

    /// Whether the rational recession cone contains a ray along which
    /// `coeffs · x` increases. Assumes the cell is nonempty.
    fn unbounded_along(&self, coeffs: &[BigInt]) -> bool {
        let mut ray = PresburgerCell::universe(self.dim);
        for c in &self.inequalities {
            ray.inequalities.push(Inequality { coeffs: c.coeffs.clone(), bound: BigInt::zero() });
        }
        ray.inequalities.push(Inequality { coeffs: coeffs.to_vec(), bound: BigInt::one() });
        !ray.is_empty()
    }

    /// Some integer point of the cell, if any.
    pub fn witness(&self) -> Option<Vec<BigInt>> {
        let mut cell = self.clone();
        let mut point = Vec::with_capacity(self.dim);
        for i in 0..self.dim {
            if cell.is_empty() {
                return None;
            }
            // pick the feasible value of the next variable closest to 0
            let mut unit = vec![BigInt::zero(); cell.dim];
            unit[0] = BigInt::one();
            let up = cell.sup_linear(&unit);
            unit[0] = -BigInt::one();
            let down = cell.sup_linear(&unit);
            let lo = match down {
                ZBar::Fin(v) => Some(-v),
                _ => None,
            };
            let hi = up.as_fin().cloned();
            let mut candidates: Vec<BigInt> = Vec::new();
            match (&lo, &hi) {
                (Some(l), Some(h)) => {
                    if l.is_positive() {
                        candidates.push(l.clone());
                    } else if h.is_negative() {
                        candidates.push(h.clone());
                    }
                }
                (Some(l), None) if l.is_positive() => candidates.push(l.clone()),
                (None, Some(h)) if h.is_negative() => candidates.push(h.clone()),
                _ => {}
            }
            let start = candidates.pop().unwrap_or_else(BigInt::zero);
            // scan outward from start, staying inside [lo, hi]
            let mut found = None;
            let mut k = BigInt::zero();
            loop {
                for v in [&start + &k, &start - &k] {
                    if lo.as_ref().is_some_and(|l| &v < l) || hi.as_ref().is_some_and(|h| &v > h) {
                        continue;
                    }
                    let mut vals = vec![None; cell.dim];
                    vals[0] = Some(v.clone());
                    if let Some(s) = cell.slice(&vals) {
                        if !s.is_empty() {
                            found = Some((v, s));
                            break;
                        }
                    }
                }
                if found.is_some() {
                    break;
                }
                k += 1;
                debug_assert!(k < BigInt::from(1_000_000), "witness search diverged at variable {i}");
            }
            let (v, rest) = found.expect("nonempty cell has a point");
            point.push(v);
            cell = rest;
        }
        Some(point)
    }
}

impl PresburgerSet {
    pub fn empty(dim: usize) -> Self {
        PresburgerSet { dim, cells: Vec::new() }
    }

    pub fn universe(dim: usize) -> Self {
        PresburgerSet { dim, cells: vec![PresburgerCell::universe(dim)] }
    }

    pub fn new(dim: usize, cells: Vec<PresburgerCell>) -> Result<Self, PresburgerError> {
        for c in &cells {
            if c.dim != dim {
                return Err(PresburgerError::MixedDimension(dim, c.dim));
            }
        }
        Ok(PresburgerSet { dim, cells })
    }

    pub fn from_cell(cell: PresburgerCell) -> Self {
        PresburgerSet { dim: cell.dim, cells: vec![cell] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> &[PresburgerCell] {
        &self.cells
    }

    pub fn contains(&self, x: &[BigInt]) -> bool {
        self.cells.iter().any(|c| c.contains(x))
    }

    pub fn is_empty(&self) -> bool {
        self.cells.iter().all(PresburgerCell::is_empty)
    }

    pub fn union(&self, other: &PresburgerSet) -> PresburgerSet {
        assert_eq!(self.dim, other.dim);
        let mut cells = self.cells.clone();
        cells.extend(other.cells.iter().cloned());
        PresburgerSet { dim: self.dim, cells }
    }

    pub fn intersect(&self, other: &PresburgerSet) -> PresburgerSet {
        assert_eq!(self.dim, other.dim);
        let cells = self.cells.iter().flat_map(|a| other.cells.iter().map(move |b| a.meet(b))).collect();
        PresburgerSet { dim: self.dim, cells }
    }

    pub fn meet_cell(&self, cell: &PresburgerCell) -> PresburgerSet {
        PresburgerSet { dim: self.dim, cells: self.cells.iter().map(|a| a.meet(cell)).collect() }
    }

    /// Sup of an affine form: `-inf` on the empty set, `+inf` when unbounded.
    pub fn sup_affine(&self, f: &AffineForm) -> ZBar {
        assert_eq!(f.coeffs.len(), self.dim, "form arity");
        match &f.offset {
            ZBar::NegInf => ZBar::NegInf,
            ZBar::PosInf => {
                if self.is_empty() {
                    ZBar::NegInf
                } else {
                    ZBar::PosInf
                }
            }
            ZBar::Fin(k) => {
                let mut best = ZBar::NegInf;
                for c in &self.cells {
                    best = best.oplus(&c.sup_linear(&f.coeffs));
                    if best == ZBar::PosInf {
                        break;
                    }
                }
                best.shift(k)
            }
        }
    }

    /// Substitutes values for a subset of variables; the result lives in the
    /// remaining variables, in their original order.
    pub fn slice(&self, assignments: &[(usize, BigInt)]) -> Result<PresburgerSet, PresburgerError> {
        let mut values = vec![None; self.dim];
        for (i, v) in assignments {
            if *i >= self.dim {
                return Err(PresburgerError::Index { index: *i, dim: self.dim });
            }
            values[*i] = Some(v.clone());
        }
        Ok(self.slice_values(&values))
    }

    pub fn slice_values(&self, values: &[Option<BigInt>]) -> PresburgerSet {
        let dim = values.iter().filter(|v| v.is_none()).count();
        let cells = self.cells.iter().filter_map(|c| c.slice(values)).collect();
        PresburgerSet { dim, cells }
    }

    /// Cartesian product; points are concatenations.
    pub fn product(&self, other: &PresburgerSet) -> PresburgerSet {
        let dim = self.dim + other.dim;
        let left: Vec<usize> = (0..self.dim).collect();
        let right: Vec<usize> = (self.dim..dim).collect();
        let mut cells = Vec::with_capacity(self.cells.len() * other.cells.len());
        for a in &self.cells {
            let ea = a.embed(dim, &left);
            for b in &other.cells {
                cells.push(ea.meet(&b.embed(dim, &right)));
            }
        }
        PresburgerSet { dim, cells }
    }

    pub fn embed(&self, new_dim: usize, map: &[usize]) -> PresburgerSet {
        PresburgerSet { dim: new_dim, cells: self.cells.iter().map(|c| c.embed(new_dim, map)).collect() }
    }

    pub fn translate(&self, shift: &[BigInt]) -> PresburgerSet {
        PresburgerSet { dim: self.dim, cells: self.cells.iter().map(|c| c.translate(shift)).collect() }
    }

    /// Drops cells with no integer points.
    pub fn pruned(&self) -> PresburgerSet {
        PresburgerSet { dim: self.dim, cells: self.cells.iter().filter(|c| !c.is_empty()).cloned().collect() }
    }

    /// Integer bounds of one variable, `(inf, sup)`.
    pub fn var_bounds(&self, var: usize) -> (ZBar, ZBar) {
        let mut unit = vec![BigInt::zero(); self.dim];
        unit[var] = BigInt::one();
        let hi = self.sup_affine(&AffineForm::linear(unit.clone(), BigInt::zero()));
        unit[var] = -BigInt::one();
        let lo = match self.sup_affine(&AffineForm::linear(unit, BigInt::zero())) {
            ZBar::Fin(v) => ZBar::Fin(-v),
            ZBar::PosInf => ZBar::NegInf,
            ZBar::NegInf => ZBar::PosInf,
        };
        (lo, hi)
    }

    pub fn max_abs_coefficient(&self) -> BigInt {
        let mut m = BigInt::zero();
        for c in &self.cells {
            for i in &c.inequalities {
                for v in i.coeffs.iter().chain(std::iter::once(&i.bound)) {
                    m = m.max(v.abs());
                }
            }
            for g in &c.congruences {
                for v in g.coeffs.iter().chain([&g.residue, &g.modulus]) {
                    m = m.max(v.abs());
                }
            }
        }
        m
    }
}

impl AffineForm {
    pub fn linear(coeffs: Vec<BigInt>, offset: BigInt) -> Self {
        AffineForm { coeffs, offset: ZBar::Fin(offset) }
    }

    pub fn constant(dim: usize, value: ZBar) -> Self {
        AffineForm { coeffs: vec![BigInt::zero(); dim], offset: value }
    }

    pub fn from_i64(coeffs: &[i64], offset: i64) -> Self {
        AffineForm::linear(to_big(coeffs), offset.into())
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_constant(&self) -> bool {
        !self.offset.is_finite() || self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn eval(&self, x: &[BigInt]) -> ZBar {
        match &self.offset {
            ZBar::Fin(k) => ZBar::Fin(dot(&self.coeffs, x) + k),
            other => other.clone(),
        }
    }

    /// Pointwise `⊙`.
    pub fn odot(&self, other: &AffineForm) -> AffineForm {
        assert_eq!(self.dim(), other.dim());
        let offset = self.offset.odot(&other.offset);
        let coeffs = if offset.is_finite() {
            self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect()
        } else {
            vec![BigInt::zero(); self.dim()]
        };
        AffineForm { coeffs, offset }
    }

    /// `self ⊙ c` for a constant `c`.
    pub fn odot_const(&self, c: &ZBar) -> AffineForm {
        self.odot(&AffineForm::constant(self.dim(), c.clone()))
    }

    pub fn embed(&self, new_dim: usize, map: &[usize]) -> AffineForm {
        let mut coeffs = vec![BigInt::zero(); new_dim];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[map[i]] += c;
        }
        AffineForm { coeffs, offset: self.offset.clone() }
    }

    /// The form `x ↦ self(x - shift)`.
    pub fn translate(&self, shift: &[BigInt]) -> AffineForm {
        match &self.offset {
            ZBar::Fin(k) => AffineForm::linear(self.coeffs.clone(), k - dot(&self.coeffs, shift)),
            _ => self.clone(),
        }
    }

    /// Partial evaluation: fixes the given variables.
    pub fn slice_values(&self, values: &[Option<BigInt>]) -> AffineForm {
        let mut offset = self.offset.clone();
        let mut coeffs = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            match &values[i] {
                Some(v) => offset = offset.shift(&(c * v)),
                None => coeffs.push(c.clone()),
            }
        }
        if !offset.is_finite() {
            coeffs.iter_mut().for_each(|c| *c = BigInt::zero());
        }
        AffineForm { coeffs, offset }
    }

    pub fn restrict(&self, vars: &[usize]) -> AffineForm {
        AffineForm { coeffs: vars.iter().map(|&i| self.coeffs[i].clone()).collect(), offset: self.offset.clone() }
    }
}

fn write_coeffs(f: &mut fmt::Formatter<'_>, coeffs: &[BigInt]) -> fmt::Result {
    f.write_str("(")?;
    for (i, c) in coeffs.iter().enumerate() {
        if i > 0 {
            f.write_str(" ")?;
        }
        write!(f, "{c}")?;
    }
    f.write_str(")")
}

/// Renders as `(cell (ge (1 0) 3) (cong (0 1) 1 2))`.
impl fmt::Display for PresburgerCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(cell")?;
        for i in &self.inequalities {
            f.write_str(" (ge ")?;
            write_coeffs(f, &i.coeffs)?;
            write!(f, " {})", i.bound)?;
        }
        for g in &self.congruences {
            f.write_str(" (cong ")?;
            write_coeffs(f, &g.coeffs)?;
            write!(f, " {} {})", g.residue, g.modulus)?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for AffineForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.offset.is_finite() {
            return write!(f, "{}", self.offset);
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() {
                "-"
            } else if first {
                ""
            } else {
                "+"
            };
            let mag = c.abs();
            if first {
                write!(f, "{sign}")?;
            } else {
                write!(f, " {sign} ")?;
            }
            if mag.is_one() {
                write!(f, "x{i}")?;
            } else {
                write!(f, "{mag}*x{i}")?;
            }
            first = false;
        }
        let k = self.offset.as_fin().expect("finite");
        if first {
            write!(f, "{k}")
        } else if k.is_zero() {
            Ok(())
        } else if k.is_negative() {
            write!(f, " - {}", k.abs())
        } else {
            write!(f, " + {k}")
        }
    }
}

mod omega {
    use super::*;

    /// `a · x ≥ b`, or `a · x = b` when stored as an equality.
    #[derive(Clone, Debug)]
    struct Row {
        a: Vec<BigInt>,
        b: BigInt,
    }

    pub(super) fn cell_feasible(cell: &PresburgerCell, extra: Option<&Inequality>) -> bool {
        let base = cell.dim;
        let n = base + cell.congruences.len();
        let widen = |coeffs: &[BigInt]| {
            let mut a = coeffs.to_vec();
            a.resize(n, BigInt::zero());
            a
        };
        let mut ineqs: Vec<Row> =
            cell.inequalities.iter().chain(extra).map(|c| Row { a: widen(&c.coeffs), b: c.bound.clone() }).collect();
        if n == base && ineqs.is_empty() {
            return true;
        }
        // a·x ≡ r (mod m)  becomes  a·x - m t = r
        let eqs: Vec<Row> = cell
            .congruences
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let mut a = widen(&c.coeffs);
                a[base + k] = -c.modulus.clone();
                Row { a, b: c.residue.clone() }
            })
            .collect();
        ineqs.shrink_to_fit();
        feasible(n, eqs, ineqs)
    }

    fn feasible(n: usize, eqs: Vec<Row>, ineqs: Vec<Row>) -> bool {
        if eqs.is_empty() {
            return feasible_ineqs(n, ineqs);
        }
        let m = eqs.len();
        let mut entries = Vec::with_capacity(m * n);
        for r in &eqs {
            entries.extend(r.a.iter().cloned());
        }
        let mat = IntMatrix::new(m, n, entries).expect("shape");
        let rhs: Vec<BigInt> = eqs.iter().map(|r| r.b.clone()).collect();
        let snf = smith_normal_form(&mat);
        let rank = snf.rank();
        let ub = snf.u.mul_vec(&rhs);
        let mut y0 = vec![BigInt::zero(); n];
        for (i, v) in ub.iter().enumerate() {
            if i < rank {
                let (q, r) = v.div_rem(&snf.d[i]);
                if !r.is_zero() {
                    return false;
                }
                y0[i] = q;
            } else if !v.is_zero() {
                return false;
            }
        }
        // x = x0 + N t with t ∈ Z^(n - rank)
        let x0 = snf.v.mul_vec(&y0);
        let free = n - rank;
        let null: Vec<Vec<BigInt>> = (rank..n).map(|j| snf.v.column(j)).collect();
        let rows = ineqs
            .into_iter()
            .map(|r| Row { a: null.iter().map(|col| dot(&r.a, col)).collect(), b: &r.b - dot(&r.a, &x0) })
            .collect();
        feasible_ineqs(free, rows)
    }

    enum Normalized {
        Infeasible,
        Equalities(Vec<Row>, Vec<Row>),
        Rows(Vec<Row>),
    }

    fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
        a.div_ceil(b)
    }

    fn normalize(rows: Vec<Row>) -> Normalized {
        let mut best: BTreeMap<Vec<BigInt>, BigInt> = BTreeMap::new();
        for r in rows {
            let g = r.a.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
            if g.is_zero() {
                if r.b.is_positive() {
                    return Normalized::Infeasible;
                }
                continue;
            }
            let a: Vec<BigInt> = r.a.iter().map(|x| x / &g).collect();
            let b = ceil_div(&r.b, &g);
            match best.get_mut(&a) {
                Some(old) => {
                    if b > *old {
                        *old = b;
                    }
                }
                None => {
                    best.insert(a, b);
                }
            }
        }
        let mut eqs = Vec::new();
        for (a, b) in &best {
            let neg: Vec<BigInt> = a.iter().map(|x| -x).collect();
            if let Some(nb) = best.get(&neg) {
                // a·x ≥ b and a·x ≤ -nb
                let upper = -nb;
                if *b > upper {
                    return Normalized::Infeasible;
                }
                if *b == upper && a < &neg {
                    eqs.push(Row { a: a.clone(), b: b.clone() });
                }
            }
        }
        let rows: Vec<Row> = best.into_iter().map(|(a, b)| Row { a, b }).collect();
        if eqs.is_empty() {
            Normalized::Rows(rows)
        } else {
            Normalized::Equalities(eqs, rows)
        }
    }

    fn feasible_ineqs(n: usize, rows: Vec<Row>) -> bool {
        let mut rows = rows;
        loop {
            rows = match normalize(rows) {
                Normalized::Infeasible => return false,
                Normalized::Equalities(eqs, rest) => return feasible(n, eqs, rest),
                Normalized::Rows(r) => r,
            };
            if rows.is_empty() {
                return true;
            }

            let mut lower = vec![0usize; n];
            let mut upper = vec![0usize; n];
            for r in &rows {
                for (k, c) in r.a.iter().enumerate() {
                    if c.is_positive() {
                        lower[k] += 1;
                    } else if c.is_negative() {
                        upper[k] += 1;
                    }
                }
            }
            // a variable bounded on one side only can absorb its constraints
            if let Some(k) = (0..n).find(|&k| (lower[k] == 0) != (upper[k] == 0)) {
                rows.retain(|r| r.a[k].is_zero());
                continue;
            }

            let candidates: Vec<usize> = (0..n).filter(|&k| lower[k] > 0).collect();
            let exact_for = |k: usize| {
                rows.iter().all(|r| !r.a[k].is_positive() || r.a[k].is_one())
                    || rows.iter().all(|r| !r.a[k].is_negative() || (-&r.a[k]).is_one())
            };
            let cost = |k: usize| lower[k] * upper[k];
            let exact = candidates.iter().copied().filter(|&k| exact_for(k)).min_by_key(|&k| cost(k));
            let k = match exact {
                Some(k) => k,
                None => *candidates.iter().min_by_key(|&&k| cost(k)).expect("some variable occurs"),
            };

            let (mut others, mut lows, mut ups) = (Vec::new(), Vec::new(), Vec::new());
            for r in rows {
                if r.a[k].is_positive() {
                    lows.push(r);
                } else if r.a[k].is_negative() {
                    ups.push(r);
                } else {
                    others.push(r);
                }
            }
            let combine = |lo: &Row, up: &Row, dark: bool| {
                let p = &lo.a[k];
                let q = -&up.a[k];
                let a: Vec<BigInt> = lo.a.iter().zip(&up.a).map(|(x, y)| &q * x + p * y).collect();
                let mut b = &q * &lo.b + p * &up.b;
                if dark {
                    b += (p - 1) * (&q - 1);
                }
                Row { a, b }
            };
            let mut real = others.clone();
            for lo in &lows {
                for up in &ups {
                    real.push(combine(lo, up, false));
                }
            }
            if exact.is_some() {
                rows = real;
                continue;
            }
            if !feasible_ineqs(n, real) {
                return false;
            }
            let mut dark = others.clone();
            for lo in &lows {
                for up in &ups {
                    dark.push(combine(lo, up, true));
                }
            }
            if feasible_ineqs(n, dark) {
                return true;
            }
            let all: Vec<Row> = others.iter().chain(&lows).chain(&ups).cloned().collect();
            let qmax = ups.iter().map(|r| -&r.a[k]).max().expect("upper bounds exist");
            for lo in &lows {
                let p = &lo.a[k];
                let limit = (&qmax * p - &qmax - p).div_floor(&qmax);
                let mut i = BigInt::zero();
                while i <= limit {
                    let eq = Row { a: lo.a.clone(), b: &lo.b + &i };
                    if feasible(n, vec![eq], all.clone()) {
                        return true;
                    }
                    i += 1;
                }
            }
            return false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn emptiness_examples() {
        assert!(PresburgerCell::universe(1).ge(&[1], 1).ge(&[-1], 0).is_empty());
        assert!(!PresburgerCell::universe(1).ge(&[1], 0).cong(&[1], 1, 2).is_empty());
        assert!(PresburgerCell::universe(1).cong(&[2], 1, 2).is_empty());
        assert!(!PresburgerCell::universe(0).is_empty());
        assert!(PresburgerSet::empty(2).is_empty());
    }

    #[test]
    fn integer_gaps_are_detected() {
        // 2 ≤ 3x ≤ 2 has a rational but no integer solution
        assert!(PresburgerCell::universe(1).ge(&[3], 2).le(&[3], 2).is_empty());
        // 27 ≤ 11x + 13y ≤ 45, -10 ≤ 7x - 9y ≤ 4: the classic Omega example
        let c = PresburgerCell::universe(2).ge(&[11, 13], 27).le(&[11, 13], 45).ge(&[7, -9], -10).le(&[7, -9], 4);
        assert!(c.is_empty());
    }

    #[test]
    fn sup_examples() {
        let s = PresburgerSet::from_cell(PresburgerCell::universe(1).ge(&[1], 2));
        assert_eq!(s.sup_affine(&AffineForm::from_i64(&[-1], 0)), ZBar::from(-2));
        assert_eq!(PresburgerSet::empty(1).sup_affine(&AffineForm::from_i64(&[1], 0)), ZBar::NegInf);
        let even = PresburgerSet::from_cell(PresburgerCell::universe(1).ge(&[1], 0).cong(&[1], 0, 2));
        assert_eq!(even.sup_affine(&AffineForm::from_i64(&[1], 0)), ZBar::PosInf);
        assert_eq!(even.sup_affine(&AffineForm::constant(1, ZBar::PosInf)), ZBar::PosInf);
        assert_eq!(PresburgerSet::empty(1).sup_affine(&AffineForm::constant(1, ZBar::PosInf)), ZBar::NegInf);
        assert_eq!(even.sup_affine(&AffineForm::constant(1, ZBar::NegInf)), ZBar::NegInf);
    }

    #[test]
    fn sup_respects_congruences() {
        let s = PresburgerSet::from_cell(PresburgerCell::universe(1).ge(&[1], -20).le(&[1], 10).cong(&[1], 2, 3));
        assert_eq!(s.sup_affine(&AffineForm::from_i64(&[1], 0)), ZBar::from(8));
        assert_eq!(s.sup_affine(&AffineForm::from_i64(&[-1], 0)), ZBar::from(19));
    }

    #[test]
    fn slice_examples() {
        let s = PresburgerSet::from_cell(PresburgerCell::universe(2).ge(&[1, 1], 3));
        let t = s.slice(&[(0, b(1))]).unwrap();
        assert_eq!(t.cells()[0].inequalities(), &[Inequality { coeffs: vec![b(1)], bound: b(2) }]);

        let odd = PresburgerSet::from_cell(PresburgerCell::universe(1).cong(&[1], 1, 2));
        assert!(odd.slice(&[(0, b(2))]).unwrap().is_empty());

        let s = PresburgerSet::from_cell(PresburgerCell::universe(2).ge(&[1, -1], 0).ge(&[0, 1], 0));
        let t = s.slice(&[(1, b(5))]).unwrap();
        assert_eq!(t.dim(), 1);
        assert_eq!(t.cells()[0].inequalities(), &[Inequality { coeffs: vec![b(1)], bound: b(5) }]);
        assert!(s.slice(&[(2, b(0))]).is_err());
    }

    #[test]
    fn product_examples() {
        let a = PresburgerSet::from_cell(PresburgerCell::universe(1).ge(&[1], 0));
        let c = PresburgerSet::from_cell(PresburgerCell::universe(1).ge(&[1], 1));
        let p = a.product(&c);
        assert_eq!(p.dim(), 2);
        assert!(p.contains(&[b(0), b(1)]));
        assert!(!p.contains(&[b(0), b(0)]));
        assert!(a.product(&PresburgerSet::empty(1)).is_empty());
        let two = a.union(&c);
        assert_eq!(two.product(&c).cells().len(), 2);
    }

    #[test]
    fn witness_lies_in_cell() {
        let c = PresburgerCell::universe(2).ge(&[1, 1], 7).le(&[1, -1], -3).cong(&[1, 2], 1, 5);
        let w = c.witness().unwrap();
        assert!(c.contains(&w));
        assert!(PresburgerCell::universe(1).cong(&[2], 1, 4).witness().is_none());
    }

    #[test]
    fn var_bounds() {
        let s = PresburgerSet::from_cell(PresburgerCell::universe(2).ge(&[1, 0], -3).le(&[1, 1], 4).ge(&[0, 1], 0));
        assert_eq!(s.var_bounds(0), (ZBar::from(-3), ZBar::from(4)));
        assert_eq!(s.var_bounds(1), (ZBar::from(0), ZBar::from(7)));
    }
}
