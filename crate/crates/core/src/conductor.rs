//! Base change conductors of tori from Galois lattices with a lower
//! ramification filtration, the trace-map description of the maximal split
//! subtorus, and the additivity identities relating conductors in exact
//! sequences.
//!
//! The Artin conductor is `Σ_i (|G_i| / |G_0|) · (n - rank V^{G_i})`, the
//! standard lower-numbering formula evaluated on `V ⊗ Q`; a torus has
//! conductor half the Artin conductor of its cocharacter module. Since `V`
//! and its dual have the same fixed ranks, character modules give the same
//! value.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::intlat::{
    cokernel_invariants, fixed_space_rank, invariant_lattice, kernel_basis, smith_normal_form, solve_injective,
    unimodular_inverse, Cokernel, GroupAction, IntMatrix, LatticeError,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConductorError {
    #[error("invalid filtration: {0}")]
    Filtration(String),
    #[error("injection is not equivariant for group element {0}")]
    NotEquivariant(usize),
    #[error("injection has torsion cokernel {0:?}; the quotient is not a lattice")]
    TorsionQuotient(Vec<BigInt>),
    #[error("conductor total {0} is negative")]
    Negative(BigRational),
    #[error("c(G) - c(T) - c(A) = {0} is not an integer")]
    NonIntegral(BigRational),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// A Galois lattice with a descending chain `G_0 ⊇ G_1 ⊇ … ⊇ {1}` of
/// subgroups, given by element indices; `G_0` is the whole group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RamifiedGaloisModule {
    action: GroupAction,
    filtration: Vec<Vec<usize>>,
}

impl RamifiedGaloisModule {
    pub fn new(action: GroupAction, filtration: Vec<Vec<usize>>) -> Result<Self, ConductorError> {
        let bad = |s: &str| Err(ConductorError::Filtration(s.into()));
        let filtration: Vec<Vec<usize>> = filtration
            .into_iter()
            .map(|mut g| {
                g.sort_unstable();
                g.dedup();
                g
            })
            .collect();
        let Some(first) = filtration.first() else {
            return bad("empty chain");
        };
        if first.len() != action.order() {
            return bad("G0 must be the whole group");
        }
        for g in &filtration {
            action.check_subgroup(g)?;
        }
        for w in filtration.windows(2) {
            if !w[1].iter().all(|i| w[0].binary_search(i).is_ok()) {
                return bad("chain does not descend");
            }
        }
        let trivial = vec![action.identity_index()];
        if filtration.last() != Some(&trivial) {
            return bad("chain must terminate at the trivial group");
        }
        Ok(RamifiedGaloisModule { action, filtration })
    }

    /// The tame chain `G_0 = Γ ⊇ G_1 = 1`.
    pub fn tame(action: GroupAction) -> Self {
        let all: Vec<usize> = (0..action.order()).collect();
        let id = vec![action.identity_index()];
        let filtration = if all.len() == 1 { vec![all] } else { vec![all, id] };
        RamifiedGaloisModule { action, filtration }
    }

    pub fn action(&self) -> &GroupAction {
        &self.action
    }

    pub fn rank(&self) -> usize {
        self.action.rank()
    }

    pub fn filtration(&self) -> &[Vec<usize>] {
        &self.filtration
    }

    /// `e(K'/K)`, taken to be `|G_0|`.
    pub fn ramification_index(&self) -> usize {
        self.filtration[0].len()
    }

    /// The direct sum of two modules for the same group and filtration.
    pub fn direct_sum(&self, other: &RamifiedGaloisModule) -> Result<RamifiedGaloisModule, ConductorError> {
        if self.action.order() != other.action.order() || self.filtration != other.filtration {
            return Err(ConductorError::Filtration("summands have different groups or chains".into()));
        }
        let (a, b) = (self.rank(), other.rank());
        let images =
            self.action.elements().iter().zip(other.action.elements()).map(|(x, y)| block_diag(x, y, a, b)).collect();
        let action = self.action.with_elements(a + b, images)?;
        Ok(RamifiedGaloisModule { action, filtration: self.filtration.clone() })
    }
}

fn block_diag(x: &IntMatrix, y: &IntMatrix, a: usize, b: usize) -> IntMatrix {
    let mut m = IntMatrix::zeros(a + b, a + b);
    for i in 0..a {
        for j in 0..a {
            m.set(i, j, x.get(i, j).clone());
        }
    }
    for i in 0..b {
        for j in 0..b {
            m.set(a + i, a + j, y.get(i, j).clone());
        }
    }
    m
}

pub fn artin_conductor(v: &RamifiedGaloisModule) -> Result<BigRational, ConductorError> {
    let n = v.rank();
    let g0 = BigInt::from(v.filtration[0].len());
    let mut total = BigRational::zero();
    for g in &v.filtration {
        let fixed = fixed_space_rank(&v.action, g)?;
        total += BigRational::new(BigInt::from(g.len() * (n - fixed)), g0.clone());
    }
    Ok(total)
}

/// Half the Artin conductor of the cocharacter module.
pub fn torus_conductor(cochar: &RamifiedGaloisModule) -> Result<BigRational, ConductorError> {
    Ok(artin_conductor(cochar)? / BigInt::from(2))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceDecomposition {
    /// `tr = Σ_σ σ`.
    pub trace: IntMatrix,
    /// Basis of `ker(tr)`, the character module of `T^b`, as columns.
    pub b_part: IntMatrix,
    /// Structure of `X / ker(tr)`, the characters of the maximal split subtorus.
    pub split_part: Cokernel,
    /// Basis of `X^Γ`, the saturation of `tr(X)`, as columns; `X / ker(tr)`
    /// maps isomorphically onto the lattice it spans.
    pub split_generators: IntMatrix,
    /// Invariant factors of `X / (ker(tr) + X^Γ)`.
    pub isogeny_cokernel: Vec<BigInt>,
}

/// Flips each column so its first nonzero entry is positive.
fn sign_normalized(m: &IntMatrix) -> IntMatrix {
    let cols: Vec<Vec<BigInt>> = m
        .columns()
        .into_iter()
        .map(|c| match c.iter().find(|x| !x.is_zero()) {
            Some(x) if x.is_negative() => c.iter().map(|v| -v).collect(),
            _ => c,
        })
        .collect();
    IntMatrix::from_columns(m.rows(), &cols)
}

pub fn trace_decomposition(x: &RamifiedGaloisModule) -> TraceDecomposition {
    let trace = x.action.trace_matrix();
    let b_part = sign_normalized(&kernel_basis(&trace));
    let split_part = cokernel_invariants(&b_part);
    let fixed = invariant_lattice(&x.action);
    let split_generators = sign_normalized(&fixed);
    let both = b_part.hconcat(&fixed).expect("same height");
    let isogeny_cokernel = cokernel_invariants(&both).torsion;
    TraceDecomposition { trace, b_part, split_part, split_generators, isogeny_cokernel }
}

/// `c(G) = c(T) + c(A) + γ` for `0 → T → G → A → 0`; a negative total is
/// inconsistent.
pub fn chai_combine(c_t: &BigRational, c_a: &BigRational, gamma: &BigInt) -> Result<BigRational, ConductorError> {
    let total = c_t + c_a + BigRational::from_integer(gamma.clone());
    if total.is_negative() {
        return Err(ConductorError::Negative(total));
    }
    Ok(total)
}

/// Recovers `γ = c(G) - c(T) - c(A)`, which must be an integer.
pub fn chai_gamma(c_g: &BigRational, c_t: &BigRational, c_a: &BigRational) -> Result<BigInt, ConductorError> {
    let g = c_g - c_t - c_a;
    if !g.is_integer() {
        return Err(ConductorError::NonIntegral(g));
    }
    Ok(g.to_integer())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdditivityResult {
    pub sub: RamifiedGaloisModule,
    pub quotient: RamifiedGaloisModule,
    pub c_middle: BigRational,
    pub c_sub: BigRational,
    pub c_quotient: BigRational,
    pub equal: bool,
}

impl AdditivityResult {
    pub fn sum(&self) -> BigRational {
        &self.c_sub + &self.c_quotient
    }
}

/// Splits `middle` along the saturated sublattice spanned by the columns of
/// `injection`, with the induced actions on both pieces, and compares
/// `c(middle)` with `c(sub) + c(quotient)`.
pub fn additivity_check(
    middle: &RamifiedGaloisModule,
    injection: &IntMatrix,
) -> Result<AdditivityResult, ConductorError> {
    let n = middle.rank();
    if injection.rows() != n {
        return Err(LatticeError::Shape(format!("injection has {} rows, module has rank {n}", injection.rows())).into());
    }
    let coker = cokernel_invariants(injection);
    if !coker.torsion.is_empty() {
        return Err(ConductorError::TorsionQuotient(coker.torsion));
    }
    let k = injection.cols();
    if n - coker.free_rank != k {
        return Err(LatticeError::Shape("injection is not injective".into()).into());
    }
    let snf = smith_normal_form(injection);
    let u_inv = unimodular_inverse(&snf.u)?;

    let mut sub_images = Vec::new();
    let mut quot_images = Vec::new();
    for (idx, g) in middle.action.elements().iter().enumerate() {
        let moved = g.mul(injection)?;
        let h = match solve_injective(injection, &moved) {
            Ok(h) => h,
            Err(LatticeError::NoIntegerSolution) => return Err(ConductorError::NotEquivariant(idx)),
            Err(e) => return Err(e.into()),
        };
        sub_images.push(h);
        let conj = snf.u.mul(g)?.mul(&u_inv)?;
        let mut q = IntMatrix::zeros(n - k, n - k);
        for i in 0..n - k {
            for j in 0..n - k {
                q.set(i, j, conj.get(k + i, k + j).clone());
            }
        }
        quot_images.push(q);
    }
    let sub = RamifiedGaloisModule {
        action: middle.action.with_elements(k, sub_images)?,
        filtration: middle.filtration.clone(),
    };
    let quotient = RamifiedGaloisModule {
        action: middle.action.with_elements(n - k, quot_images)?,
        filtration: middle.filtration.clone(),
    };
    let c_middle = torus_conductor(middle)?;
    let c_sub = torus_conductor(&sub)?;
    let c_quotient = torus_conductor(&quotient)?;
    let equal = c_middle == &c_sub + &c_quotient;
    Ok(AdditivityResult { sub, quotient, c_middle, c_sub, c_quotient, equal })
}
