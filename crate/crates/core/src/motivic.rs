//! Motivic classes through their Poincaré polynomials in `Z[T, T^-1]`, where
//! the Lefschetz class is `T^2` and the virtual dimension is half the degree.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::padic::PadicConstant;
use crate::presburger::{PresburgerCell, PresburgerSet};
use crate::residue::{ResidueCell, ResidueSet};
use crate::vfcells::{integrate, AcConstraint, DefinableSet, DimFunction, Profile, VFCell, VfError};
use crate::zbar::ZBar;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MotivicError {
    #[error("invalid component {index}: {reason}")]
    InvalidComponent { index: usize, reason: String },
    #[error("invalid special fiber: {0}")]
    InvalidSpecialFiber(String),
    #[error(transparent)]
    Vf(#[from] VfError),
}

/// Laurent polynomial with integer coefficients; no zero coefficients stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct PoincareElement {
    coeffs: BTreeMap<i64, BigInt>,
}

impl PoincareElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(0, BigInt::one())
    }

    pub fn monomial(e: i64, c: BigInt) -> Self {
        Self::from_pairs([(e, c)])
    }

    /// `P(L) = T^2`.
    pub fn lefschetz() -> Self {
        Self::monomial(2, BigInt::one())
    }

    /// `P(G_m) = T^2 - 1`.
    pub fn gm() -> Self {
        Self::from_pairs([(2, BigInt::one()), (0, -BigInt::one())])
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (i64, BigInt)>) -> Self {
        let mut coeffs: BTreeMap<i64, BigInt> = BTreeMap::new();
        for (e, c) in pairs {
            *coeffs.entry(e).or_insert_with(BigInt::zero) += c;
        }
        coeffs.retain(|_, c| !c.is_zero());
        PoincareElement { coeffs }
    }

    pub fn from_i64_pairs(pairs: &[(i64, i64)]) -> Self {
        Self::from_pairs(pairs.iter().map(|&(e, c)| (e, BigInt::from(c))))
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, BigInt> {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn leading_coefficient(&self) -> Option<&BigInt> {
        self.coeffs.values().next_back()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_pairs(self.coeffs.iter().chain(&other.coeffs).map(|(e, c)| (*e, c.clone())))
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::from_pairs(self.coeffs.iter().flat_map(|(a, x)| other.coeffs.iter().map(move |(b, y)| (a + b, x * y))))
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        Self::from_pairs(self.coeffs.iter().map(|(e, c)| (*e, c * k)))
    }

    /// Multiplication by `T^k`.
    pub fn shift(&self, k: i64) -> Self {
        PoincareElement { coeffs: self.coeffs.iter().map(|(e, c)| (e + k, c.clone())).collect() }
    }

    pub fn virtual_dim(&self) -> VirtualDim {
        virtual_dim(self)
    }
}

/// Renders in descending degree, e.g. `T^-2 - T^-4`, `0` for zero.
impl fmt::Display for PoincareElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (e, c)) in self.coeffs.iter().rev().enumerate() {
            let mag = c.abs();
            match (i, c.is_negative()) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            match (*e, mag.is_one()) {
                (0, _) => write!(f, "{mag}")?,
                (1, true) => f.write_str("T")?,
                (1, false) => write!(f, "{mag}*T")?,
                (e, true) => write!(f, "T^{e}")?,
                (e, false) => write!(f, "{mag}*T^{e}")?,
            }
        }
        Ok(())
    }
}

/// A virtual dimension in `(1/2)Z ∪ {-inf}`, stored doubled.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VirtualDim {
    pub doubled: ZBar,
}

impl VirtualDim {
    pub fn from_zbar(z: &ZBar) -> Self {
        VirtualDim { doubled: z.odot(z) }
    }

    /// The integer value, if there is one.
    pub fn to_zbar(&self) -> Option<ZBar> {
        match &self.doubled {
            ZBar::Fin(d) if d % 2 != BigInt::zero() => None,
            ZBar::Fin(d) => Some(ZBar::Fin(d / 2)),
            inf => Some(inf.clone()),
        }
    }

    pub fn odot(&self, other: &VirtualDim) -> VirtualDim {
        VirtualDim { doubled: self.doubled.odot(&other.doubled) }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match &self.doubled {
            ZBar::Fin(d) => serde_json::json!({ "doubled": crate::zbar::bigint_json(d) }),
            z => z.to_json(),
        }
    }
}

impl fmt::Display for VirtualDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_zbar() {
            Some(z) => write!(f, "{z}"),
            None => write!(f, "{}/2", self.doubled),
        }
    }
}

pub fn virtual_dim(p: &PoincareElement) -> VirtualDim {
    VirtualDim { doubled: p.degree().map_or(ZBar::NegInf, ZBar::from) }
}

/// A connected component of the special fiber of a weak Néron model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub poincare: PoincareElement,
    pub dim: i64,
    /// Order of the form along the component.
    pub ord_omega: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeakNeronData {
    dim_x: i64,
    components: Vec<Component>,
}

fn check_class(p: &PoincareElement, dim: i64) -> Result<(), String> {
    match (p.degree(), p.leading_coefficient()) {
        (Some(d), Some(c)) if d == 2 * dim && c.is_positive() => Ok(()),
        (Some(d), Some(c)) if d == 2 * dim => Err(format!("leading coefficient {c} is not positive")),
        (Some(d), _) => Err(format!("degree {d} is not twice the dimension {dim}")),
        _ => Err("class is zero".into()),
    }
}

impl WeakNeronData {
    pub fn new(dim_x: i64, components: Vec<Component>) -> Result<Self, MotivicError> {
        if dim_x < 0 {
            return Err(MotivicError::InvalidSpecialFiber(format!("negative dimension {dim_x}")));
        }
        for (index, c) in components.iter().enumerate() {
            let bad = |reason: String| MotivicError::InvalidComponent { index, reason };
            if c.dim < 0 || c.dim > dim_x {
                return Err(bad(format!("dimension {} outside [0, {dim_x}]", c.dim)));
            }
            check_class(&c.poincare, c.dim).map_err(bad)?;
        }
        Ok(WeakNeronData { dim_x, components })
    }

    pub fn dim_x(&self) -> i64 {
        self.dim_x
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }
}

/// `T^{-2 dim X} Σ_C P(C) T^{-2 ord_C ω}`.
pub fn motivic_integral(w: &WeakNeronData) -> PoincareElement {
    w.components
        .iter()
        .fold(PoincareElement::zero(), |acc, c| acc.add(&c.poincare.shift(-2 * c.ord_omega)))
        .shift(-2 * w.dim_x)
}

/// `L^{-γ-g} [G_k]` for a smooth group of pure dimension `g` whose canonical
/// form has valuation `γ`; its virtual dimension is `-γ`.
pub fn haar_integral(gk: &PoincareElement, g: i64, gamma: i64) -> Result<(PoincareElement, VirtualDim), MotivicError> {
    check_class(gk, g).map_err(MotivicError::InvalidSpecialFiber)?;
    let p = gk.shift(-2 * (gamma + g));
    let d = virtual_dim(&p);
    assert_eq!(d, VirtualDim::from_zbar(&ZBar::from(-gamma)));
    Ok((p, d))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompareResult {
    pub lhs: VirtualDim,
    pub rhs: ZBar,
    pub equal: bool,
}

/// Virtual dimension of the motivic integral against the dimensional
/// integral of a cell presentation of the same variety.
pub fn compare_check(w: &WeakNeronData, a: &DefinableSet, phi: &DimFunction) -> Result<CompareResult, MotivicError> {
    let lhs = virtual_dim(&motivic_integral(w));
    let rhs = integrate(a, phi)?;
    let equal = lhs == VirtualDim::from_zbar(&rhs);
    Ok(CompareResult { lhs, rhs, equal })
}

/// For each component `C`: points reducing into `C`, presented as an opaque
/// residue class of dimension `dim C` times `{ord y_i ≥ 1}^{dim X}`, with
/// the constant density `-ord_C ω`.
pub fn neron_cell_presentation(w: &WeakNeronData) -> Vec<(DefinableSet, DimFunction)> {
    let n = w.dim_x as usize;
    let profile = Profile::new(n, 0, 0);
    w.components
        .iter()
        .map(|c| {
            let mut ord = PresburgerCell::universe(n);
            for i in 0..n {
                let mut unit = vec![0; n];
                unit[i] = 1;
                ord = ord.ge(&unit, 1);
            }
            let cell = VFCell::new(
                vec![PadicConstant::zero(); n],
                vec![AcConstraint::FreeUnit { depth: 1 }; n],
                PresburgerSet::from_cell(ord),
                ResidueSet::from_cell(ResidueCell::opaque(c.dim as u64)),
            )
            .expect("well-formed cell");
            (DefinableSet::from_cell(cell), DimFunction::constant(profile, ZBar::from(-c.ord_omega)))
        })
        .collect()
}

/// `⊕` of the integrals of a presentation's parts.
pub fn presentation_integral(parts: &[(DefinableSet, DimFunction)]) -> Result<ZBar, VfError> {
    parts.iter().try_fold(ZBar::NegInf, |acc, (a, phi)| Ok(acc.oplus(&integrate(a, phi)?)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vd(v: i64) -> VirtualDim {
        VirtualDim::from_zbar(&ZBar::from(v))
    }

    #[test]
    fn virtual_dimensions() {
        assert_eq!(virtual_dim(&PoincareElement::lefschetz()), vd(1));
        assert_eq!(virtual_dim(&PoincareElement::zero()).doubled, ZBar::NegInf);
        assert_eq!(virtual_dim(&PoincareElement::gm().shift(-4)), vd(-1));
        let half = virtual_dim(&PoincareElement::from_i64_pairs(&[(3, 1)]));
        assert_eq!(half.to_string(), "3/2");
        assert_eq!(half.to_zbar(), None);
    }

    #[test]
    fn rendering() {
        assert_eq!(PoincareElement::gm().shift(-4).to_string(), "T^-2 - T^-4");
        assert_eq!(PoincareElement::from_i64_pairs(&[(1, -2), (0, 3)]).to_string(), "-2*T + 3");
        assert_eq!(PoincareElement::zero().to_string(), "0");
    }

    #[test]
    fn motivic_integral_examples() {
        for gamma in -3..=3 {
            let w =
                WeakNeronData::new(1, vec![Component { poincare: PoincareElement::gm(), dim: 1, ord_omega: gamma }])
                    .unwrap();
            let p = motivic_integral(&w);
            assert_eq!(p, PoincareElement::gm().shift(-2 - 2 * gamma));
            assert_eq!(virtual_dim(&p), vd(-gamma));
        }
        let pt =
            WeakNeronData::new(0, vec![Component { poincare: PoincareElement::one(), dim: 0, ord_omega: 0 }]).unwrap();
        assert_eq!(motivic_integral(&pt), PoincareElement::one());

        let two = WeakNeronData::new(
            1,
            vec![
                Component { poincare: PoincareElement::gm(), dim: 1, ord_omega: 0 },
                Component { poincare: PoincareElement::gm(), dim: 1, ord_omega: 2 },
            ],
        )
        .unwrap();
        assert_eq!(virtual_dim(&motivic_integral(&two)), vd(0));
    }

    #[test]
    fn haar_examples() {
        assert_eq!(haar_integral(&PoincareElement::gm(), 1, 0).unwrap().1, vd(0));
        let two = PoincareElement::gm().scale(&BigInt::from(2));
        assert_eq!(haar_integral(&two, 1, 3).unwrap().1, vd(-3));
        assert_eq!(haar_integral(&PoincareElement::one(), 0, -2).unwrap().1, vd(2));
        assert!(matches!(haar_integral(&PoincareElement::gm(), 2, 0), Err(MotivicError::InvalidSpecialFiber(_))));
    }

    #[test]
    fn compare_examples() {
        let p1 = Profile::new(1, 0, 0);
        let sphere =
            DefinableSet::from_cell(VFCell::simple(PresburgerSet::from_cell(PresburgerCell::universe(1).eq(&[1], 0))));
        for gamma in -3..=3 {
            let w =
                WeakNeronData::new(1, vec![Component { poincare: PoincareElement::gm(), dim: 1, ord_omega: gamma }])
                    .unwrap();
            let r = compare_check(&w, &sphere, &DimFunction::constant(p1, ZBar::from(-gamma))).unwrap();
            assert!(r.equal);
            assert_eq!(r.rhs, ZBar::from(-gamma));
        }
        let w = WeakNeronData::new(1, vec![Component { poincare: PoincareElement::lefschetz(), dim: 1, ord_omega: 0 }])
            .unwrap();
        let ball =
            DefinableSet::from_cell(VFCell::simple(PresburgerSet::from_cell(PresburgerCell::universe(1).ge(&[1], 1))));
        let r = compare_check(&w, &ball, &DimFunction::constant(p1, ZBar::zero())).unwrap();
        assert_eq!((r.lhs, r.rhs.clone(), r.equal), (vd(0), ZBar::from(-1), false));
    }

    #[test]
    fn presentation_matches_motivic_side() {
        let w = WeakNeronData::new(
            2,
            vec![
                Component {
                    poincare: PoincareElement::from_i64_pairs(&[(4, 1), (2, 3), (0, 1)]),
                    dim: 2,
                    ord_omega: 1,
                },
                Component { poincare: PoincareElement::lefschetz(), dim: 1, ord_omega: -1 },
            ],
        )
        .unwrap();
        let parts = neron_cell_presentation(&w);
        let v = presentation_integral(&parts).unwrap();
        assert_eq!(VirtualDim::from_zbar(&v), virtual_dim(&motivic_integral(&w)));
    }

    #[test]
    fn rejects_bad_components() {
        let bad = WeakNeronData::new(
            1,
            vec![Component { poincare: PoincareElement::from_i64_pairs(&[(2, -1)]), dim: 1, ord_omega: 0 }],
        );
        assert!(matches!(bad, Err(MotivicError::InvalidComponent { index: 0, .. })));
        let big =
            WeakNeronData::new(0, vec![Component { poincare: PoincareElement::lefschetz(), dim: 1, ord_omega: 0 }]);
        assert!(big.is_err());
    }
}
