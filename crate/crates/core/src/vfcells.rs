//! Valued-field cells with constant centers, their volumes and the integral of
//! dimensional functions over them.
//!
//! A cell in `h[n, m, r]` is cut out coordinatewise: `y_i - c_i` has
//! valuation `γ_i` and a prescribed angular component of depth `ℓ_i`, the tuple
//! `(γ, z)` lies in a Presburger set, and the residue coordinates lie in a
//! residue set independent of everything else.
//!
//! Volumes come from the closed form
//! `sup_{(γ,z)} Σ_i (-γ_i - ℓ_i + d_i) ⊙ dim(residue)` with `d_i = ℓ_i` for
//! a free unit condition and `d_i = 0` for fixed digits. The literal
//! truncation limit is available as an oracle.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::padic::{series_inverse, series_mul, PadicConstant};
use crate::presburger::{AffineForm, PresburgerCell, PresburgerError, PresburgerSet};
use crate::residue::{Marker, ResidueCell, ResidueError, ResidueSet};
use crate::zbar::ZBar;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VfError {
    #[error("arity mismatch: {0}")]
    Arity(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("cells with distinct centers at coordinate {0} cannot be intersected exactly")]
    Unaligned(usize),
    #[error("coupled piece has an unbounded marginal on the first factor")]
    Unbounded,
    #[error("map coefficient {0} is zero")]
    Singular(usize),
    #[error("invalid angular component: {0}")]
    InvalidAc(String),
    #[error(transparent)]
    Presburger(#[from] PresburgerError),
    #[error(transparent)]
    Residue(#[from] ResidueError),
}

/// Counts of valued-field, residue and value-group coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Profile {
    pub n: usize,
    pub m: usize,
    pub r: usize,
}

impl Profile {
    pub fn new(n: usize, m: usize, r: usize) -> Self {
        Profile { n, m, r }
    }

    pub fn product(&self, other: &Profile) -> Profile {
        Profile { n: self.n + other.n, m: self.m + other.m, r: self.r + other.r }
    }

    /// Dimension of the `(γ, z)` space.
    pub fn int_dim(&self) -> usize {
        self.n + self.r
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h[{}, {}, {}]", self.n, self.m, self.r)
    }
}

/// Condition on the angular component of `y_i - c_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AcConstraint {
    /// Any unit of `R/𝔪^depth`; the same set at every depth.
    FreeUnit { depth: usize },
    /// Exactly these leading digits; the first is nonzero.
    Fixed(Vec<BigRational>),
}

impl AcConstraint {
    pub fn fixed(digits: Vec<BigRational>) -> Result<Self, VfError> {
        match digits.first() {
            None => Err(VfError::InvalidAc("fixed angular component with no digits".into())),
            Some(d) if d.is_zero() => Err(VfError::InvalidAc("leading angular digit must be nonzero".into())),
            Some(_) => Ok(AcConstraint::Fixed(digits)),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            AcConstraint::FreeUnit { depth } => *depth,
            AcConstraint::Fixed(d) => d.len(),
        }
    }

    /// `ℓ - d`: digits pinned beyond the valuation.
    fn pinned(&self) -> i64 {
        match self {
            AcConstraint::FreeUnit { .. } => 0,
            AcConstraint::Fixed(d) => d.len() as i64,
        }
    }

    pub fn admits(&self, unit_digits: &[BigRational]) -> bool {
        match self {
            AcConstraint::FreeUnit { .. } => true,
            AcConstraint::Fixed(d) => unit_digits.len() >= d.len() && unit_digits[..d.len()] == d[..],
        }
    }

    /// Both conditions on the same difference `y - c`.
    fn meet(&self, other: &AcConstraint) -> Option<AcConstraint> {
        match (self, other) {
            (AcConstraint::FreeUnit { depth: a }, AcConstraint::FreeUnit { depth: b }) => {
                Some(AcConstraint::FreeUnit { depth: *a.max(b) })
            }
            (AcConstraint::FreeUnit { .. }, f) | (f, AcConstraint::FreeUnit { .. }) => Some(f.clone()),
            (AcConstraint::Fixed(a), AcConstraint::Fixed(b)) => {
                let k = a.len().min(b.len());
                (a[..k] == b[..k]).then(|| AcConstraint::Fixed(if a.len() >= b.len() { a } else { b }.clone()))
            }
        }
    }

    /// Multiplies by a unit whose leading digits are `unit`.
    fn scaled(&self, unit: &[BigRational]) -> AcConstraint {
        match self {
            AcConstraint::FreeUnit { depth } => AcConstraint::FreeUnit { depth: *depth },
            AcConstraint::Fixed(d) => AcConstraint::Fixed(series_mul(unit, d, d.len())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VFCell {
    centers: Vec<PadicConstant>,
    ac: Vec<AcConstraint>,
    ord_set: PresburgerSet,
    residue: ResidueSet,
    r: usize,
}

impl VFCell {
    pub fn new(
        centers: Vec<PadicConstant>,
        ac: Vec<AcConstraint>,
        ord_set: PresburgerSet,
        residue: ResidueSet,
    ) -> Result<Self, VfError> {
        let n = centers.len();
        if ac.len() != n {
            return Err(VfError::Arity(format!("{} centers but {} ac constraints", n, ac.len())));
        }
        if ord_set.dim() < n {
            return Err(VfError::Arity(format!(
                "order set has {} variables, fewer than the {n} valuations",
                ord_set.dim()
            )));
        }
        for a in &ac {
            if a.depth() == 0 {
                return Err(VfError::InvalidAc("angular component depth must be positive".into()));
            }
        }
        let r = ord_set.dim() - n;
        Ok(VFCell { centers, ac, ord_set, residue, r })
    }

    /// `{ y : ord(y_i) satisfies ord_set }` with free units, centers 0, no
    /// residue or value-group coordinates.
    pub fn simple(ord_set: PresburgerSet) -> Self {
        let n = ord_set.dim();
        VFCell {
            centers: vec![PadicConstant::zero(); n],
            ac: vec![AcConstraint::FreeUnit { depth: 1 }; n],
            ord_set,
            residue: ResidueSet::point(),
            r: 0,
        }
    }

    /// All of `h[n, m, r]` up to the centers (a measure-zero set).
    pub fn universe(p: Profile) -> Self {
        VFCell {
            centers: vec![PadicConstant::zero(); p.n],
            ac: vec![AcConstraint::FreeUnit { depth: 1 }; p.n],
            ord_set: PresburgerSet::universe(p.int_dim()),
            residue: ResidueSet::affine(p.m),
            r: p.r,
        }
    }

    pub fn profile(&self) -> Profile {
        Profile { n: self.centers.len(), m: self.residue.arity(), r: self.r }
    }

    pub fn centers(&self) -> &[PadicConstant] {
        &self.centers
    }

    pub fn ac(&self) -> &[AcConstraint] {
        &self.ac
    }

    pub fn ord_set(&self) -> &PresburgerSet {
        &self.ord_set
    }

    pub fn residue(&self) -> &ResidueSet {
        &self.residue
    }

    pub fn with_residue(mut self, residue: ResidueSet) -> Self {
        self.residue = residue;
        self
    }

    /// The volume density `Σ_i (-γ_i - (ℓ_i - d_i))` as a form in `(γ, z)`.
    pub fn density(&self) -> AffineForm {
        let n = self.centers.len();
        let mut coeffs = vec![BigInt::zero(); n + self.r];
        for c in coeffs.iter_mut().take(n) {
            *c = -BigInt::one();
        }
        let pinned: i64 = self.ac.iter().map(AcConstraint::pinned).sum();
        AffineForm::linear(coeffs, BigInt::from(-pinned))
    }

    /// Closed-form volume.
    pub fn vol(&self) -> ZBar {
        self.ord_set.sup_affine(&self.density()).odot(&self.residue.dimension())
    }

    fn mentions_gamma(&self, j: usize) -> bool {
        self.ord_set.cells().iter().any(|c| {
            c.inequalities().iter().any(|i| !i.coeffs[j].is_zero())
                || c.congruences().iter().any(|g| !g.coeffs[j].is_zero())
        })
    }

    /// Coordinate `j` ranges over everything but the center.
    fn unconstrained(&self, j: usize) -> bool {
        matches!(self.ac[j], AcConstraint::FreeUnit { .. }) && !self.mentions_gamma(j)
    }

    /// Intersection with `other`. Coordinates must share their center unless
    /// one side leaves the coordinate unconstrained. `uses_gamma[j]` marks
    /// coordinates whose valuation a form on `other` refers to; those keep
    /// `other`'s center. `Ok(None)` for a visibly empty result.
    pub fn intersect(&self, other: &VFCell, uses_gamma: &[bool]) -> Result<Option<VFCell>, VfError> {
        if self.profile() != other.profile() {
            return Err(VfError::Arity(format!(
                "cannot intersect cells in {} and {}",
                self.profile(),
                other.profile()
            )));
        }
        let n = self.centers.len();
        let mut centers = Vec::with_capacity(n);
        let mut ac = Vec::with_capacity(n);
        for j in 0..n {
            if self.centers[j] == other.centers[j] {
                match self.ac[j].meet(&other.ac[j]) {
                    Some(a) => ac.push(a),
                    None => return Ok(None),
                }
                centers.push(self.centers[j].clone());
            } else if other.unconstrained(j) && !uses_gamma[j] {
                centers.push(self.centers[j].clone());
                ac.push(self.ac[j].clone());
            } else if self.unconstrained(j) {
                centers.push(other.centers[j].clone());
                ac.push(other.ac[j].clone());
            } else {
                return Err(VfError::Unaligned(j));
            }
        }
        let residue = self.residue.intersect(&other.residue)?;
        if residue.is_empty() {
            return Ok(None);
        }
        let ord_set = self.ord_set.intersect(&other.ord_set);
        Ok(Some(VFCell { centers, ac, ord_set, residue, r: self.r }))
    }

    pub fn product(&self, other: &VFCell) -> VFCell {
        let (nx, ny) = (self.centers.len(), other.centers.len());
        let (rx, ry) = (self.r, other.r);
        let dim = nx + ny + rx + ry;
        let xmap: Vec<usize> = (0..nx).chain(nx + ny..nx + ny + rx).collect();
        let ymap: Vec<usize> = (nx..nx + ny).chain(nx + ny + rx..dim).collect();
        let ord_set = self.ord_set.embed(dim, &xmap).intersect(&other.ord_set.embed(dim, &ymap));
        let mut centers = self.centers.clone();
        centers.extend(other.centers.iter().cloned());
        let mut ac = self.ac.clone();
        ac.extend(other.ac.iter().cloned());
        VFCell { centers, ac, ord_set, residue: self.residue.product(&other.residue), r: rx + ry }
    }

    /// Reorders the valued-field coordinates: new coordinate `k` is old `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> VFCell {
        let n = self.centers.len();
        assert_eq!(perm.len(), n);
        let mut map = vec![0; n + self.r];
        for (k, &old) in perm.iter().enumerate() {
            map[old] = k;
        }
        for z in 0..self.r {
            map[n + z] = n + z;
        }
        VFCell {
            centers: perm.iter().map(|&i| self.centers[i].clone()).collect(),
            ac: perm.iter().map(|&i| self.ac[i].clone()).collect(),
            ord_set: self.ord_set.embed(n + self.r, &map),
            residue: self.residue.clone(),
            r: self.r,
        }
    }

    /// Valuations and leading digits of `y - c`; `None` if some `y_i = c_i`.
    fn offsets(&self, y: &[PadicConstant]) -> Option<Vec<(i64, Vec<BigRational>)>> {
        y.iter()
            .zip(&self.centers)
            .zip(&self.ac)
            .map(|((yi, ci), a)| {
                let u = yi.sub(ci);
                Some((u.ord()?, u.ac(a.depth())?))
            })
            .collect()
    }

    pub fn contains(&self, p: &Point) -> Result<bool, VfError> {
        self.check_point(p)?;
        let Some(offs) = self.offsets(&p.y) else {
            return Ok(false);
        };
        if !self.ac.iter().zip(&offs).all(|(a, (_, d))| a.admits(d)) {
            return Ok(false);
        }
        let mut g: Vec<BigInt> = offs.iter().map(|(o, _)| BigInt::from(*o)).collect();
        g.extend(p.z.iter().cloned());
        Ok(self.ord_set.contains(&g) && self.residue.contains(&p.t)?)
    }

    fn check_point(&self, p: &Point) -> Result<(), VfError> {
        let pr = self.profile();
        if p.y.len() != pr.n || p.t.len() != pr.m || p.z.len() != pr.r {
            return Err(VfError::Arity(format!("point does not lie in {pr}")));
        }
        Ok(())
    }

    /// The `(γ, z)` coordinates of a point of the cell.
    fn int_coords(&self, p: &Point) -> Option<Vec<BigInt>> {
        let offs = self.offsets(&p.y)?;
        let mut g: Vec<BigInt> = offs.iter().map(|(o, _)| BigInt::from(*o)).collect();
        g.extend(p.z.iter().cloned());
        Some(g)
    }
}

impl fmt::Display for VFCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.profile();
        write!(f, "(vfcell (n {}) (r {}) (center", p.n, p.r)?;
        for c in &self.centers {
            write!(f, " {c}")?;
        }
        f.write_str(") (acdepth")?;
        for a in &self.ac {
            write!(f, " {}", a.depth())?;
        }
        f.write_str(") (ac")?;
        for a in &self.ac {
            match a {
                AcConstraint::FreeUnit { .. } => f.write_str(" free")?,
                AcConstraint::Fixed(d) => {
                    f.write_str(" fixed (")?;
                    for (i, x) in d.iter().enumerate() {
                        if i > 0 {
                            f.write_str(" ")?;
                        }
                        write!(f, "{x}")?;
                    }
                    f.write_str(")")?;
                }
            }
        }
        f.write_str(") (ordset")?;
        for c in self.ord_set.cells() {
            write!(f, " {c}")?;
        }
        write!(f, ") (residue (m {})", self.residue.arity())?;
        for c in self.residue.cells() {
            write!(f, " {c}")?;
        }
        f.write_str("))")
    }
}

/// A point of `h[n, m, r]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Point {
    pub y: Vec<PadicConstant>,
    pub t: Vec<BigRational>,
    pub z: Vec<BigInt>,
}

/// Finite union of cells sharing a profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefinableSet {
    profile: Profile,
    cells: Vec<VFCell>,
}

impl DefinableSet {
    pub fn new(profile: Profile, cells: Vec<VFCell>) -> Result<Self, VfError> {
        for (i, c) in cells.iter().enumerate() {
            if c.profile() != profile {
                return Err(VfError::Arity(format!("cell {i} lies in {} but the set lies in {profile}", c.profile())));
            }
        }
        Ok(DefinableSet { profile, cells })
    }

    pub fn from_cell(cell: VFCell) -> Self {
        DefinableSet { profile: cell.profile(), cells: vec![cell] }
    }

    pub fn empty(profile: Profile) -> Self {
        DefinableSet { profile, cells: Vec::new() }
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn cells(&self) -> &[VFCell] {
        &self.cells
    }

    pub fn union(&self, other: &DefinableSet) -> Result<DefinableSet, VfError> {
        let mut cells = self.cells.clone();
        cells.extend(other.cells.iter().cloned());
        DefinableSet::new(self.profile, cells)
    }

    pub fn product(&self, other: &DefinableSet) -> DefinableSet {
        let cells = self.cells.iter().flat_map(|a| other.cells.iter().map(move |b| a.product(b))).collect();
        DefinableSet { profile: self.profile.product(&other.profile), cells }
    }

    pub fn contains(&self, p: &Point) -> Result<bool, VfError> {
        for c in &self.cells {
            if c.contains(p)? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// One affine piece of a dimensional function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub cell: VFCell,
    /// A form in the cell's `(γ, z)` coordinates.
    pub form: AffineForm,
}

impl Piece {
    pub fn new(cell: VFCell, form: AffineForm) -> Result<Self, VfError> {
        if form.dim() != cell.profile().int_dim() {
            return Err(VfError::Arity(format!(
                "form has {} coefficients, the cell has {} integer coordinates",
                form.dim(),
                cell.profile().int_dim()
            )));
        }
        Ok(Piece { cell, form })
    }

    fn uses_gamma(&self) -> Vec<bool> {
        let n = self.cell.centers.len();
        let finite = self.form.offset.is_finite();
        (0..n).map(|j| finite && !self.form.coeffs[j].is_zero()).collect()
    }
}

/// Piecewise affine `Z̄`-valued function; overlapping pieces combine by `⊕`
/// and points outside every piece carry `-inf`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimFunction {
    profile: Profile,
    pieces: Vec<Piece>,
}

impl DimFunction {
    pub fn new(profile: Profile, pieces: Vec<Piece>) -> Result<Self, VfError> {
        for (i, p) in pieces.iter().enumerate() {
            if p.cell.profile() != profile {
                return Err(VfError::Arity(format!(
                    "piece {i} lies in {} but the function lives on {profile}",
                    p.cell.profile()
                )));
            }
        }
        Ok(DimFunction { profile, pieces })
    }

    /// The constant function on all of `h[n, m, r]`.
    pub fn constant(profile: Profile, value: ZBar) -> Self {
        let cell = VFCell::universe(profile);
        let form = AffineForm::constant(profile.int_dim(), value);
        DimFunction { profile, pieces: vec![Piece { cell, form }] }
    }

    /// A single affine form on all of `h[n, m, r]`.
    pub fn affine(profile: Profile, form: AffineForm) -> Result<Self, VfError> {
        Ok(DimFunction { profile, pieces: vec![Piece::new(VFCell::universe(profile), form)?] })
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Pointwise `d ⊙ φ`.
    pub fn odot_const(&self, d: &ZBar) -> DimFunction {
        DimFunction {
            profile: self.profile,
            pieces: self.pieces.iter().map(|p| Piece { cell: p.cell.clone(), form: p.form.odot_const(d) }).collect(),
        }
    }

    /// Pointwise `φ ⊕ ψ`.
    pub fn oplus(&self, other: &DimFunction) -> Result<DimFunction, VfError> {
        let mut pieces = self.pieces.clone();
        pieces.extend(other.pieces.iter().cloned());
        DimFunction::new(self.profile, pieces)
    }

    pub fn eval(&self, p: &Point) -> Result<ZBar, VfError> {
        let mut best = ZBar::NegInf;
        for piece in &self.pieces {
            if piece.cell.contains(p)? {
                let g = piece.cell.int_coords(p).expect("point lies in the cell");
                best = best.oplus(&piece.form.eval(&g));
            }
        }
        Ok(best)
    }
}

pub fn vol(a: &DefinableSet) -> ZBar {
    a.cells.iter().fold(ZBar::NegInf, |acc, c| acc.oplus(&c.vol()))
}

fn check_profiles(a: &DefinableSet, phi: &DimFunction) -> Result<(), VfError> {
    if a.profile != phi.profile {
        return Err(VfError::Arity(format!("set lies in {} but the function lives on {}", a.profile, phi.profile)));
    }
    Ok(())
}

/// The cells `a ∩ piece` for every cell of `a` and every piece, with the
/// piece's form.
fn restricted_pieces(a: &DefinableSet, phi: &DimFunction) -> Result<Vec<(VFCell, AffineForm)>, VfError> {
    check_profiles(a, phi)?;
    let mut out = Vec::new();
    for cell in &a.cells {
        for piece in &phi.pieces {
            if let Some(c) = cell.intersect(&piece.cell, &piece.uses_gamma())? {
                out.push((c, piece.form.clone()));
            }
        }
    }
    Ok(out)
}

/// `∫_a φ = ⊕_pieces sup_{(γ,z)} (density + form) ⊙ dim(residue)`.
pub fn integrate(a: &DefinableSet, phi: &DimFunction) -> Result<ZBar, VfError> {
    let mut total = ZBar::NegInf;
    for (cell, form) in restricted_pieces(a, phi)? {
        let v = cell.ord_set.sup_affine(&cell.density().odot(&form)).odot(&cell.residue.dimension());
        total = total.oplus(&v);
    }
    Ok(total)
}

/// `sup_α (α ⊙ Vol{φ ≥ α})`, evaluated with `α` as an extra integer
/// coordinate constrained by `form - α ≥ 0`.
pub fn integrate_threshold(a: &DefinableSet, phi: &DimFunction) -> Result<ZBar, VfError> {
    let mut total = ZBar::NegInf;
    for (cell, form) in restricted_pieces(a, phi)? {
        let resdim = cell.residue.dimension();
        let v = match &form.offset {
            ZBar::NegInf => ZBar::NegInf,
            // {φ ≥ α} is the whole piece for every α
            ZBar::PosInf => {
                if cell.ord_set.is_empty() {
                    ZBar::NegInf
                } else {
                    ZBar::PosInf
                }
            }
            ZBar::Fin(k) => {
                let d = cell.profile().int_dim();
                let mut map: Vec<usize> = (0..d).collect();
                let lifted = cell.ord_set.embed(d + 1, &map);
                let mut level = PresburgerCell::universe(d + 1);
                let mut coeffs = form.coeffs.clone();
                coeffs.push(-BigInt::one());
                level.add_ge(coeffs, -k)?;
                let lifted = lifted.meet_cell(&level);
                map.truncate(d);
                let mut objective = cell.density().embed(d + 1, &map);
                objective.coeffs[d] = BigInt::one();
                lifted.sup_affine(&objective)
            }
        };
        total = total.oplus(&v.odot(&resdim));
    }
    Ok(total)
}

/// Valuation condition of one coordinate inside a truncation window.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum GammaSpec {
    Exact(i64),
    AtLeast(i64),
}

struct CoordOption {
    gamma: GammaSpec,
    markers: Vec<Marker>,
    free: i64,
}

/// Digit pattern of `y = c + u` on positions `[start, start + len)` for each
/// admissible valuation of `u`, where digits below `start` must vanish.
fn coord_options(center: &PadicConstant, ac: &AcConstraint, start: i64, len: i64) -> Vec<CoordOption> {
    let end = start + len;
    let lowest = center.ord().map_or(start, |o| o.min(start));
    let fixed_digit = |p: i64, g: i64| -> Option<BigRational> {
        // digit of y at p when it is determined, given ord u = g
        if p < g {
            return Some(center.digit(p));
        }
        if let AcConstraint::Fixed(xi) = ac {
            let k = (p - g) as usize;
            if k < xi.len() {
                return Some(center.digit(p) + &xi[k]);
            }
        }
        None
    };
    let below_ok = |g: i64| -> bool {
        (lowest..start).all(|p| match fixed_digit(p, g) {
            Some(d) => d.is_zero(),
            // a free position, or the leading position of a free unit when
            // the center digit there is nonzero, can be set to 0
            None => p != g || !center.digit(p).is_zero(),
        })
    };
    let mut out = Vec::new();
    for g in lowest..end {
        if !below_ok(g) {
            continue;
        }
        let mut markers = Vec::with_capacity(len as usize);
        let mut free = 0;
        for p in start..end {
            match fixed_digit(p, g) {
                Some(d) => markers.push(Marker::Fixed(d)),
                None => {
                    free += 1;
                    if p == g {
                        markers.push(Marker::avoiding([center.digit(p)]));
                    } else {
                        markers.push(Marker::free());
                    }
                }
            }
        }
        out.push(CoordOption { gamma: GammaSpec::Exact(g), markers, free });
    }
    if below_ok(end) {
        let markers = (start..end).map(|p| Marker::Fixed(center.digit(p))).collect();
        out.push(CoordOption { gamma: GammaSpec::AtLeast(end), markers, free: 0 });
    }
    out
}

/// Memoized decision of which valuation patterns meet the order set.
struct Feasibility<'a> {
    cell: &'a VFCell,
    cache: HashMap<Vec<GammaSpec>, bool>,
}

impl<'a> Feasibility<'a> {
    fn new(cell: &'a VFCell) -> Self {
        Feasibility { cell, cache: HashMap::new() }
    }

    fn check(&mut self, specs: &[GammaSpec]) -> bool {
        if let Some(&v) = self.cache.get(specs) {
            return v;
        }
        let n = specs.len();
        let dim = n + self.cell.r;
        let mut values = vec![None; dim];
        let mut extra = PresburgerCell::universe(dim);
        for (j, s) in specs.iter().enumerate() {
            match s {
                GammaSpec::Exact(g) => values[j] = Some(BigInt::from(*g)),
                GammaSpec::AtLeast(g) => {
                    let mut unit = vec![BigInt::zero(); dim];
                    unit[j] = BigInt::one();
                    extra.add_ge(unit, BigInt::from(*g)).expect("arity");
                }
            }
        }
        let ok = !self.cell.ord_set.meet_cell(&extra).slice_values(&values).is_empty();
        self.cache.insert(specs.to_vec(), ok);
        ok
    }
}

/// Enumerates feasible valuation patterns of one cell inside a window, in
/// order of decreasing free digit count. `visit` returns false to stop.
fn window_patterns(
    cell: &VFCell,
    feas: &mut Feasibility<'_>,
    start: i64,
    len: i64,
    mut visit: impl FnMut(&[&CoordOption], i64) -> bool,
) {
    let options: Vec<Vec<CoordOption>> =
        cell.centers.iter().zip(&cell.ac).map(|(c, a)| coord_options(c, a, start, len)).collect();
    if options.iter().any(Vec::is_empty) {
        return;
    }
    let mut combos: Vec<(i64, Vec<usize>)> = Vec::new();
    let mut idx = vec![0usize; options.len()];
    loop {
        let free = idx.iter().enumerate().map(|(j, &k)| options[j][k].free).sum();
        combos.push((free, idx.clone()));
        let mut j = 0;
        loop {
            if j == idx.len() {
                break;
            }
            idx[j] += 1;
            if idx[j] < options[j].len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == idx.len() {
            break;
        }
    }
    combos.sort_by_key(|c| std::cmp::Reverse(c.0));
    for (free, combo) in combos {
        let specs: Vec<GammaSpec> = combo.iter().enumerate().map(|(j, &k)| options[j][k].gamma.clone()).collect();
        if feas.check(&specs) {
            let chosen: Vec<&CoordOption> = combo.iter().enumerate().map(|(j, &k)| &options[j][k]).collect();
            if !visit(&chosen, free) {
                return;
            }
        }
    }
}

/// Dimension of the digit image of `ϖ^i (A ∩ h^{≤i})` modulo `ϖ^ℓ`.
fn window_dim(cells: &mut [(VFCell, HashMap<Vec<GammaSpec>, bool>)], i: i64, ell: i64) -> ZBar {
    let mut best = ZBar::NegInf;
    for (cell, cache) in cells.iter_mut() {
        let resdim = cell.residue.dimension();
        if resdim == ZBar::NegInf {
            continue;
        }
        let mut feas = Feasibility { cell, cache: std::mem::take(cache) };
        let mut found = None;
        window_patterns(feas.cell, &mut feas, -i, ell, |_, free| {
            found = Some(free);
            false
        });
        *cache = feas.cache;
        if let Some(free) = found {
            best = best.oplus(&ZBar::from(free).odot(&resdim));
        }
    }
    best
}

/// The image of `a ⊆ R^n` in `(R/ϖ^ℓ)^n`, as a residue set with `n·ℓ`
/// digit coordinates followed by the residue coordinates.
pub fn truncate(a: &DefinableSet, ell: u32) -> Result<ResidueSet, VfError> {
    if ell == 0 {
        return Err(VfError::Domain("truncation level must be positive".into()));
    }
    let n = a.profile.n;
    for (k, cell) in a.cells.iter().enumerate() {
        for j in 0..n {
            let (lo, _) = cell.ord_set.var_bounds(j);
            let integral_center = cell.centers[j].ord().is_none_or(|o| o >= 0);
            if (lo < ZBar::zero() && !cell.ord_set.is_empty()) || !integral_center {
                return Err(VfError::Domain(format!("cell {k} is not contained in R^{n} (coordinate {j})")));
            }
        }
    }
    let mut out = ResidueSet::empty(n * ell as usize + a.profile.m);
    for cell in &a.cells {
        let mut feas = Feasibility::new(cell);
        let mut cells = Vec::new();
        window_patterns(cell, &mut feas, 0, ell as i64, |chosen, _| {
            let markers: Vec<Marker> = chosen.iter().flat_map(|o| o.markers.iter().cloned()).collect();
            cells.push(ResidueCell::new(markers));
            true
        });
        let digits = ResidueSet::new(n * ell as usize, cells)?;
        out = out.union(&digits.product(&cell.residue))?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleReport {
    pub value: ZBar,
    pub stabilized: bool,
    /// Both limits were certified by the a priori bound rather than by
    /// repeated values.
    pub proven: bool,
    /// `ell_sequences[i][ℓ-1]` is the value at shift `i` and level `ℓ`.
    pub ell_sequences: Vec<Vec<ZBar>>,
    pub i_sequence: Vec<ZBar>,
    pub monotone: bool,
}

/// Levels past which both truncation sequences are constant, when every
/// valuation is bounded on the order sets: `(i*, ℓ*(i*))`.
pub fn oracle_bounds(a: &DefinableSet) -> Option<(i64, i64)> {
    let mut lowest = 0i64;
    let mut reach = 0i64;
    for cell in &a.cells {
        if cell.ord_set.is_empty() || cell.residue.is_empty() {
            continue;
        }
        for j in 0..a.profile.n {
            let (lo, hi) = cell.ord_set.var_bounds(j);
            let (lo, hi) = (lo.to_i64()?, hi.to_i64()?);
            let o = cell.centers[j].ord().unwrap_or(lo).min(lo);
            lowest = lowest.min(o);
            reach = reach.max(hi + cell.ac[j].depth() as i64);
        }
    }
    let i_star = -lowest;
    Some((i_star, (i_star + reach + 1).max(1)))
}

fn three_equal(seq: &[ZBar]) -> bool {
    seq.len() >= 3 && seq[seq.len() - 3..].windows(2).all(|w| w[0] == w[1])
}

/// `Vol` as the literal limit `lim_i lim_ℓ (n i + dim((A^{|i})_{|ℓ}) - ℓ n)`.
pub fn vol_truncation_oracle(a: &DefinableSet, i_max: u32, ell_max: u32) -> OracleReport {
    let n = a.profile.n as i64;
    let mut cells: Vec<(VFCell, HashMap<Vec<GammaSpec>, bool>)> =
        a.cells.iter().map(|c| (c.clone(), HashMap::new())).collect();
    let bounds = oracle_bounds(a);
    let mut ell_sequences = Vec::new();
    let mut i_sequence = Vec::new();
    let mut ell_stable = true;
    for i in 0..=i_max as i64 {
        let seq: Vec<ZBar> = (1..=ell_max as i64)
            .map(|ell| window_dim(&mut cells, i, ell).shift(&BigInt::from(n * i - ell * n)))
            .collect();
        let proven = bounds.is_some_and(|(_, l)| l - i_max as i64 + i <= ell_max as i64);
        ell_stable &= proven || three_equal(&seq);
        i_sequence.push(seq.last().cloned().unwrap_or(ZBar::NegInf));
        ell_sequences.push(seq);
    }
    let i_proven = bounds.is_some_and(|(i, l)| i <= i_max as i64 && l <= ell_max as i64);
    let stabilized = ell_stable && (i_proven || three_equal(&i_sequence));
    let monotone =
        ell_sequences.iter().all(|s| s.windows(2).all(|w| w[0] >= w[1])) && i_sequence.windows(2).all(|w| w[0] <= w[1]);
    OracleReport {
        value: i_sequence.last().cloned().unwrap_or(ZBar::NegInf),
        stabilized,
        proven: i_proven,
        ell_sequences,
        i_sequence,
        monotone,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckResult {
    pub lhs: ZBar,
    pub rhs: ZBar,
    pub equal: bool,
}

impl CheckResult {
    fn new(lhs: ZBar, rhs: ZBar) -> Self {
        CheckResult { equal: lhs == rhs, lhs, rhs }
    }
}

/// Coordinate bookkeeping for `h[nx,mx,rx] × h[ny,my,ry]`, whose integer
/// coordinates are ordered `(γx, γy, zx, zy)`.
struct Split {
    x: Profile,
    y: Profile,
    xvars: Vec<usize>,
    yvars: Vec<usize>,
}

impl Split {
    fn new(x: Profile, y: Profile) -> Self {
        let (nx, ny, rx, ry) = (x.n, y.n, x.r, y.r);
        let xvars = (0..nx).chain(nx + ny..nx + ny + rx).collect();
        let yvars = (nx..nx + ny).chain(nx + ny + rx..nx + ny + rx + ry).collect();
        Split { x, y, xvars, yvars }
    }

    fn residue_part(&self, cell: &ResidueCell) -> Result<(ResidueCell, ResidueCell), VfError> {
        if cell.is_opaque() {
            return match (self.x.m, self.y.m, cell.arity()) {
                (_, _, 0) if self.x.m == 0 => Ok((ResidueCell::point(), cell.clone())),
                (_, 0, _) => Ok((cell.clone(), ResidueCell::point())),
                _ => Err(VfError::Domain("opaque residue class spans both factors".into())),
            };
        }
        let xs: Vec<usize> = (0..self.x.m).collect();
        let ys: Vec<usize> = (self.x.m..self.x.m + self.y.m).collect();
        Ok((cell.restrict(&xs), cell.restrict(&ys)))
    }

    fn vf_part(&self, cell: &VFCell, range: std::ops::Range<usize>) -> (Vec<PadicConstant>, Vec<AcConstraint>) {
        (cell.centers[range.clone()].to_vec(), cell.ac[range].to_vec())
    }

    /// Writes one piece on the product as a union of product pieces
    /// `(Px × Py, fx + fy)`.
    #[allow(clippy::type_complexity)]
    fn product_pieces(&self, piece: &Piece) -> Result<Vec<(VFCell, AffineForm, VFCell, AffineForm)>, VfError> {
        let (nx, ny) = (self.x.n, self.y.n);
        let (cx, ax) = self.vf_part(&piece.cell, 0..nx);
        let (cy, ay) = self.vf_part(&piece.cell, nx..nx + ny);
        let finite = piece.form.offset.is_finite();
        let fx = if finite {
            piece.form.restrict(&self.xvars).odot_const(&ZBar::zero())
        } else {
            AffineForm::constant(self.x.int_dim(), ZBar::zero())
        };
        let fx = AffineForm { coeffs: fx.coeffs, offset: ZBar::zero() };
        let fy = piece.form.restrict(&self.yvars);

        let mut residues = Vec::new();
        for rc in piece.cell.residue.cells() {
            residues.push(self.residue_part(rc)?);
        }
        let mut out = Vec::new();
        for oc in piece.cell.ord_set.cells() {
            let mut parts: Vec<(PresburgerCell, AffineForm, PresburgerCell, AffineForm)> = Vec::new();
            let separable =
                oc.inequalities().iter().map(|i| &i.coeffs).chain(oc.congruences().iter().map(|c| &c.coeffs)).all(
                    |coeffs| {
                        let touches = |vars: &[usize]| vars.iter().any(|&v| !coeffs[v].is_zero());
                        !(touches(&self.xvars) && touches(&self.yvars))
                    },
                );
            if separable {
                parts.push((oc.restrict(&self.xvars), fx.clone(), oc.restrict(&self.yvars), fy.clone()));
            } else {
                // enumerate the x-marginal box and slice
                let set = PresburgerSet::from_cell(oc.clone());
                let mut ranges = Vec::new();
                for &v in &self.xvars {
                    let (lo, hi) = set.var_bounds(v);
                    match (lo.to_i64(), hi.to_i64()) {
                        (Some(l), Some(h)) => ranges.push(l..=h),
                        _ if set.is_empty() => ranges.clear(),
                        _ => return Err(VfError::Unbounded),
                    }
                }
                if ranges.len() != self.xvars.len() {
                    continue;
                }
                let total: i128 = ranges.iter().map(|r| (r.end() - r.start() + 1) as i128).product();
                if total > 200_000 {
                    return Err(VfError::Domain("coupled piece has too many fibers".into()));
                }
                for pt in box_points(&ranges) {
                    let mut values = vec![None; piece.cell.profile().int_dim()];
                    for (k, &v) in self.xvars.iter().enumerate() {
                        values[v] = Some(BigInt::from(pt[k]));
                    }
                    let Some(fiber) = oc.slice(&values) else { continue };
                    if fiber.is_empty() {
                        continue;
                    }
                    let mut xcell = PresburgerCell::universe(self.xvars.len());
                    for (k, v) in pt.iter().enumerate() {
                        let mut unit = vec![BigInt::zero(); self.xvars.len()];
                        unit[k] = BigInt::one();
                        xcell.add_eq(unit, BigInt::from(*v))?;
                    }
                    let xpoint: Vec<BigInt> = pt.iter().map(|&v| BigInt::from(v)).collect();
                    let fxv = AffineForm::constant(self.xvars.len(), fx.eval(&xpoint));
                    parts.push((xcell, fxv, fiber, fy.clone()));
                }
            }
            for (px, fxp, py, fyp) in parts {
                for (rx, ry) in &residues {
                    let xres = ResidueSet::new(self.x.m, vec![rx.clone()])?;
                    let yres = ResidueSet::new(self.y.m, vec![ry.clone()])?;
                    let xc = VFCell::new(cx.clone(), ax.clone(), PresburgerSet::from_cell(px.clone()), xres)?;
                    let yc = VFCell::new(cy.clone(), ay.clone(), PresburgerSet::from_cell(py.clone()), yres)?;
                    out.push((xc, fxp.clone(), yc, fyp.clone()));
                }
            }
        }
        Ok(out)
    }
}

fn box_points(ranges: &[std::ops::RangeInclusive<i64>]) -> Vec<Vec<i64>> {
    let mut pts = vec![Vec::new()];
    for r in ranges {
        let mut next = Vec::new();
        for p in &pts {
            for v in r.clone() {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        pts = next;
    }
    pts
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FubiniReport {
    pub iterated: ZBar,
    pub joint: ZBar,
    pub equal: bool,
}

/// `∫_x ∫_y φ` against `∫_{x×y} φ`. The inner integral is a function of
/// `x` given piecewise by integrating each product piece over `y`.
pub fn fubini_check(ax: &DefinableSet, ay: &DefinableSet, phi: &DimFunction) -> Result<FubiniReport, VfError> {
    let prod = ax.profile.product(&ay.profile);
    if phi.profile != prod {
        return Err(VfError::Arity(format!("function lives on {} but the product is {prod}", phi.profile)));
    }
    let joint = integrate(&ax.product(ay), phi)?;

    let split = Split::new(ax.profile, ay.profile);
    let mut outer = Vec::new();
    for piece in &phi.pieces {
        for (xc, fx, yc, fy) in split.product_pieces(piece)? {
            let inner = DimFunction::new(ay.profile, vec![Piece::new(yc, fy)?])?;
            let c = integrate(ay, &inner)?;
            outer.push(Piece::new(xc, fx.odot_const(&c))?);
        }
    }
    let iterated = integrate(ax, &DimFunction::new(ax.profile, outer)?)?;
    Ok(FubiniReport { equal: iterated == joint, iterated, joint })
}

/// The function `y ↦ φ(x, y)` for a fixed point `x` of the first factor.
pub fn fiber(phi: &DimFunction, x_profile: Profile, y_profile: Profile, x: &Point) -> Result<DimFunction, VfError> {
    let split = Split::new(x_profile, y_profile);
    let nx = x_profile.n;
    let mut pieces = Vec::new();
    for piece in &phi.pieces {
        let cell = &piece.cell;
        let mut gx = Vec::with_capacity(nx);
        let mut inside = true;
        for j in 0..nx {
            let u = x.y[j].sub(&cell.centers[j]);
            match (u.ord(), u.ac(cell.ac[j].depth())) {
                (Some(o), Some(d)) if cell.ac[j].admits(&d) => gx.push(BigInt::from(o)),
                _ => inside = false,
            }
        }
        if !inside {
            continue;
        }
        let mut values = vec![None; cell.profile().int_dim()];
        for (j, g) in gx.iter().enumerate() {
            values[split.xvars[j]] = Some(g.clone());
        }
        for (k, z) in x.z.iter().enumerate() {
            values[split.xvars[nx + k]] = Some(z.clone());
        }
        let ord_set = cell.ord_set.slice_values(&values);
        let mut yres = ResidueSet::empty(y_profile.m);
        for rc in cell.residue.cells() {
            let (rx, ry) = split.residue_part(rc)?;
            if rx.is_opaque() || rx.contains(&x.t)? {
                yres.push(ry)?;
            }
        }
        if yres.is_empty() {
            continue;
        }
        let (cy, ay) = split.vf_part(cell, nx..nx + y_profile.n);
        let ycell = VFCell::new(cy, ay, ord_set, yres)?;
        pieces.push(Piece::new(ycell, piece.form.slice_values(&values))?);
    }
    DimFunction::new(y_profile, pieces)
}

/// Concrete points of a cell: a few valuation tuples near a witness of
/// each order-set cell, with admissible digits and residues.
pub fn probe_points(cell: &VFCell, per_axis: i64) -> Result<Vec<Point>, VfError> {
    let pr = cell.profile();
    if cell.residue.has_opaque() && pr.m > 0 {
        return Err(VfError::Domain("cannot probe an opaque residue class".into()));
    }
    let mut residues = Vec::new();
    for rc in cell.residue.cells() {
        if rc.is_opaque() {
            residues.push(Vec::new());
            continue;
        }
        residues.push(rc.coords().iter().map(admissible_value).collect::<Vec<_>>());
    }
    let mut out = Vec::new();
    for oc in cell.ord_set.cells() {
        let Some(w) = oc.witness() else { continue };
        let offsets: Vec<std::ops::RangeInclusive<i64>> = (0..pr.n).map(|_| 0..=per_axis - 1).collect();
        for delta in box_points(&offsets) {
            let mut g = w.clone();
            for (j, d) in delta.iter().enumerate() {
                g[j] += BigInt::from(*d);
            }
            if !oc.contains(&g) {
                continue;
            }
            let y = (0..pr.n)
                .map(|j| {
                    let gamma = g[j].to_i64().expect("small valuation");
                    let digits = match &cell.ac[j] {
                        AcConstraint::Fixed(d) => d.clone(),
                        AcConstraint::FreeUnit { .. } => vec![BigRational::one()],
                    };
                    let u =
                        PadicConstant::from_terms(digits.into_iter().enumerate().map(|(k, d)| (gamma + k as i64, d)));
                    cell.centers[j].add(&u)
                })
                .collect::<Vec<_>>();
            let z = g[pr.n..].to_vec();
            for t in &residues {
                out.push(Point { y: y.clone(), t: t.clone(), z: z.clone() });
            }
        }
    }
    Ok(out)
}

fn admissible_value(m: &Marker) -> BigRational {
    match m {
        Marker::Fixed(q) => q.clone(),
        Marker::Free(avoid) => (0..)
            .map(|k| BigRational::from_integer(BigInt::from(k)))
            .find(|q| !avoid.contains(q))
            .expect("finite avoid set"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectionReport {
    pub probes: usize,
    /// `(x-point index, ∫_y ψ(x) ⊙ φ(x,y), ψ(x) ⊙ ∫_y φ(x,y))` for each probe.
    pub values: Vec<(usize, ZBar, ZBar)>,
    pub equal: bool,
}

/// Checks `∫_y ψ(x) ⊙ φ(x, y) = ψ(x) ⊙ ∫_y φ(x, y)` on probe points `x` of `ax`.
pub fn projection_check(
    ax: &DefinableSet,
    ay: &DefinableSet,
    psi: &DimFunction,
    phi: &DimFunction,
) -> Result<ProjectionReport, VfError> {
    check_profiles(ax, psi)?;
    if phi.profile != ax.profile.product(&ay.profile) {
        return Err(VfError::Arity("function is not defined on the product".into()));
    }
    let mut values = Vec::new();
    let mut probes = 0;
    for cell in &ax.cells {
        for x in probe_points(cell, 3)? {
            let s = psi.eval(&x)?;
            let f = fiber(phi, ax.profile, ay.profile, &x)?;
            let lhs = integrate(ay, &f.odot_const(&s))?;
            let rhs = s.odot(&integrate(ay, &f)?);
            values.push((probes, lhs, rhs));
            probes += 1;
        }
    }
    let equal = values.iter().all(|(_, l, r)| l == r);
    Ok(ProjectionReport { probes, values, equal })
}

/// Coordinatewise `y_i ↦ a_i y_i + b_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineMap {
    pub scale: Vec<PadicConstant>,
    pub offset: Vec<PadicConstant>,
}

impl AffineMap {
    pub fn new(scale: Vec<PadicConstant>, offset: Vec<PadicConstant>) -> Result<Self, VfError> {
        if scale.len() != offset.len() {
            return Err(VfError::Arity("scale and offset lengths differ".into()));
        }
        if let Some(i) = scale.iter().position(PadicConstant::is_zero) {
            return Err(VfError::Singular(i));
        }
        Ok(AffineMap { scale, offset })
    }

    pub fn apply(&self, y: &[PadicConstant]) -> Vec<PadicConstant> {
        y.iter().zip(&self.scale).zip(&self.offset).map(|((v, a), b)| a.mul(v).add(b)).collect()
    }

    /// `ord Jac = Σ ord a_i`.
    pub fn ord_jac(&self) -> i64 {
        self.scale.iter().map(|a| a.ord().expect("nonzero scale")).sum()
    }

    fn shifts(&self, r: usize) -> Vec<BigInt> {
        let mut s: Vec<BigInt> = self.scale.iter().map(|a| BigInt::from(a.ord().expect("nonzero"))).collect();
        s.extend(std::iter::repeat_n(BigInt::zero(), r));
        s
    }

    /// On every pair of probe points: `ord(F x - F y) = ord a + ord(x - y)` and
    /// the angular components multiply, coordinate by coordinate.
    pub fn jacobian_property_holds(&self, points: &[Point]) -> bool {
        for p in points {
            for q in points {
                for i in 0..self.scale.len() {
                    let d = p.y[i].sub(&q.y[i]);
                    if d.is_zero() {
                        continue;
                    }
                    let fd = self.apply(&p.y)[i].sub(&self.apply(&q.y)[i]);
                    let a = &self.scale[i];
                    if fd.ord() != Some(a.ord().unwrap() + d.ord().unwrap()) {
                        return false;
                    }
                    let k = 3;
                    if fd.ac(k).unwrap() != series_mul(&a.ac(k).unwrap(), &d.ac(k).unwrap(), k) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

fn map_cell(cell: &VFCell, map: &AffineMap) -> VFCell {
    let centers = map.apply(&cell.centers);
    let ac = cell.ac.iter().zip(&map.scale).map(|(a, s)| a.scaled(&s.ac(a.depth()).expect("nonzero"))).collect();
    VFCell {
        centers,
        ac,
        ord_set: cell.ord_set.translate(&map.shifts(cell.r)),
        residue: cell.residue.clone(),
        r: cell.r,
    }
}

/// Image of `a` under the map, and the constant `ord Jac`.
pub fn apply_affine_map(a: &DefinableSet, map: &AffineMap) -> Result<(DefinableSet, i64), VfError> {
    if map.scale.len() != a.profile.n {
        return Err(VfError::Arity(format!(
            "map acts on {} coordinates, the set has {}",
            map.scale.len(),
            a.profile.n
        )));
    }
    let cells = a.cells.iter().map(|c| map_cell(c, map)).collect();
    Ok((DefinableSet { profile: a.profile, cells }, map.ord_jac()))
}

/// Preimage of an image-side cell; `source` is the cell it came from.
fn pull_back(cell: &VFCell, image_of: &VFCell, source: &VFCell, map: &AffineMap) -> VFCell {
    let n = cell.centers.len();
    let mut centers = Vec::with_capacity(n);
    for j in 0..n {
        if cell.centers[j] == image_of.centers[j] {
            centers.push(source.centers[j].clone());
        } else {
            // only reached for unconstrained coordinates, where the center
            // does not enter any volume
            let top = cell.centers[j].terms().iter().chain(map.offset[j].terms()).map(|(e, _)| *e).max().unwrap_or(0);
            let diff = cell.centers[j].sub(&map.offset[j]);
            centers.push(diff.div_truncated(&map.scale[j], top + 64).expect("nonzero scale"));
        }
    }
    let ac = cell
        .ac
        .iter()
        .zip(&map.scale)
        .map(|(a, s)| {
            let l = a.depth();
            a.scaled(&series_inverse(&s.ac(l).expect("nonzero"), l))
        })
        .collect();
    let back: Vec<BigInt> = map.shifts(cell.r).iter().map(|s| -s).collect();
    VFCell { centers, ac, ord_set: cell.ord_set.translate(&back), residue: cell.residue.clone(), r: cell.r }
}

/// `∫_a (φ ∘ F) ⊙ (-ord Jac F)` against `∫_{F(a)} φ`.
pub fn cov_check(a: &DefinableSet, map: &AffineMap, phi: &DimFunction) -> Result<CheckResult, VfError> {
    let (image, ord_jac) = apply_affine_map(a, map)?;
    check_profiles(&image, phi)?;
    let samples: Vec<Point> = a
        .cells
        .iter()
        .filter(|c| !c.residue.has_opaque() || c.profile().m == 0)
        .map(|c| probe_points(c, 2))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .take(12)
        .collect();
    if !map.jacobian_property_holds(&samples) {
        return Err(VfError::Domain("map fails the Jacobian property".into()));
    }
    let rhs = integrate(&image, phi)?;

    let shift = map.shifts(a.profile.r);
    let minus_jac = ZBar::from(-ord_jac);
    let mut pulled = Vec::new();
    for (source, img) in a.cells.iter().zip(&image.cells) {
        for piece in &phi.pieces {
            let Some(meet) = img.intersect(&piece.cell, &piece.uses_gamma())? else { continue };
            let cell = pull_back(&meet, img, source, map);
            let form = piece.form.translate(&shift.iter().map(|s| -s).collect::<Vec<_>>());
            pulled.push(Piece::new(cell, form.odot_const(&minus_jac))?);
        }
    }
    let lhs = integrate(a, &DimFunction::new(a.profile, pulled)?)?;
    Ok(CheckResult::new(lhs, rhs))
}
