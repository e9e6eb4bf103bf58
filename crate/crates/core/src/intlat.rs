//! Exact integer-lattice algebra: Smith normal form, kernels, cokernels and
//! fixed sublattices of finite matrix groups.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LatticeError {
    #[error("matrix shape mismatch: {0}")]
    Shape(String),
    #[error("group element {index} has determinant {det}, expected ±1")]
    NotInvertible { index: usize, det: BigInt },
    #[error("element list does not contain the identity")]
    MissingIdentity,
    #[error("element list is not closed under product: {0}")]
    NotClosed(String),
    #[error("subgroup index {0} is out of range")]
    BadIndex(usize),
    #[error("group generated by the given matrices exceeds {0} elements")]
    GroupTooLarge(usize),
    #[error("linear system has no integer solution")]
    NoIntegerSolution,
}

/// Dense integer matrix in row-major order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, entries: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    pub fn new(rows: usize, cols: usize, entries: Vec<BigInt>) -> Result<Self, LatticeError> {
        if entries.len() != rows * cols {
            return Err(LatticeError::Shape(format!("{} entries for a {rows}x{cols} matrix", entries.len())));
        }
        Ok(IntMatrix { rows, cols, entries })
    }

    /// Builds a matrix from rows of small integers. Panics on ragged input.
    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged matrix rows");
            entries.extend(r.as_ref().iter().map(|&v| BigInt::from(v)));
        }
        IntMatrix { rows: rows.len(), cols, entries }
    }

    pub fn from_big_rows(rows: Vec<Vec<BigInt>>, cols: usize) -> Result<Self, LatticeError> {
        let mut entries = Vec::with_capacity(rows.len() * cols);
        let nrows = rows.len();
        for r in rows {
            if r.len() != cols {
                return Err(LatticeError::Shape("ragged rows".into()));
            }
            entries.extend(r);
        }
        Ok(IntMatrix { rows: nrows, cols, entries })
    }

    /// Matrix whose columns are the given vectors, each of length `rows`.
    pub fn from_columns(rows: usize, columns: &[Vec<BigInt>]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows);
            for (i, v) in c.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn columns(&self) -> Vec<Vec<BigInt>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> Result<IntMatrix, LatticeError> {
        if self.cols != other.rows {
            return Err(LatticeError::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn add(&self, other: &IntMatrix) -> Result<IntMatrix, LatticeError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LatticeError::Shape("cannot add matrices of different shapes".into()));
        }
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect();
        Ok(IntMatrix { rows: self.rows, cols: self.cols, entries })
    }

    pub fn sub(&self, other: &IntMatrix) -> Result<IntMatrix, LatticeError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LatticeError::Shape("cannot subtract matrices of different shapes".into()));
        }
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect();
        Ok(IntMatrix { rows: self.rows, cols: self.cols, entries })
    }

    /// Vertical concatenation.
    pub fn stack(blocks: &[IntMatrix], cols: usize) -> Result<IntMatrix, LatticeError> {
        let mut entries = Vec::new();
        let mut rows = 0;
        for b in blocks {
            if b.cols != cols {
                return Err(LatticeError::Shape("stacked blocks differ in width".into()));
            }
            rows += b.rows;
            entries.extend(b.entries.iter().cloned());
        }
        Ok(IntMatrix { rows, cols, entries })
    }

    /// Horizontal concatenation.
    pub fn hconcat(&self, other: &IntMatrix) -> Result<IntMatrix, LatticeError> {
        if self.rows != other.rows {
            return Err(LatticeError::Shape("concatenated blocks differ in height".into()));
        }
        let mut cols = self.columns();
        cols.extend(other.columns());
        Ok(IntMatrix::from_columns(self.rows, &cols))
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> Result<BigInt, LatticeError> {
        if self.rows != self.cols {
            return Err(LatticeError::Shape("determinant of a non-square matrix".into()));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(BigInt::one());
        }
        let mut a = self.to_rows();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                    Some(i) => {
                        a.swap(i, k);
                        sign = -sign;
                    }
                    None => return Ok(BigInt::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                    a[i][j] = v;
                }
            }
            prev = a[k][k].clone();
        }
        Ok(sign * &a[n - 1][n - 1])
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.entries.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.entries.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[dst] += k * row[src]
    fn add_row_multiple(&mut self, dst: usize, src: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let v = self.get(dst, j) + k * self.get(src, j);
            self.set(dst, j, v);
        }
    }

    /// col[dst] += k * col[src]
    fn add_col_multiple(&mut self, dst: usize, src: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let v = self.get(i, dst) + k * self.get(i, src);
            self.set(i, dst, v);
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let v = -self.get(i, j);
            self.set(i, j, v);
        }
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for i in 0..self.rows {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str("[")?;
            for (j, v) in self.row(i).iter().enumerate() {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{v}")?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

/// Result of a Smith normal form computation: `u * m * v` is diagonal with
/// diagonal `d`, `d[i] | d[i+1]`, and `u`, `v` unimodular.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snf {
    pub d: Vec<BigInt>,
    pub u: IntMatrix,
    pub v: IntMatrix,
}

impl Snf {
    pub fn rank(&self) -> usize {
        self.d.iter().take_while(|x| !x.is_zero()).count()
    }
}

/// Smith normal form. The pivot is always the entry of smallest nonzero
/// absolute value in the active block, ties broken by row-major position.
pub fn smith_normal_form(m: &IntMatrix) -> Snf {
    let (rows, cols) = (m.rows, m.cols);
    let mut a = m.clone();
    let mut u = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);
    let steps = rows.min(cols);

    for t in 0..steps {
        while let Some((pi, pj)) = smallest_pivot(&a, t) {
            a.swap_rows(t, pi);
            u.swap_rows(t, pi);
            a.swap_cols(t, pj);
            v.swap_cols(t, pj);

            let pivot = a.get(t, t).clone();
            let mut dirty = false;
            for i in t + 1..rows {
                let q = a.get(i, t).div_floor(&pivot);
                let neg = -q;
                a.add_row_multiple(i, t, &neg);
                u.add_row_multiple(i, t, &neg);
                if !a.get(i, t).is_zero() {
                    dirty = true;
                }
            }
            for j in t + 1..cols {
                let q = a.get(t, j).div_floor(&pivot);
                let neg = -q;
                a.add_col_multiple(j, t, &neg);
                v.add_col_multiple(j, t, &neg);
                if !a.get(t, j).is_zero() {
                    dirty = true;
                }
            }
            if dirty {
                continue;
            }
            // divisibility of the remaining block by the pivot
            let offending = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !a.get(i, j).is_multiple_of(&pivot)));
            match offending {
                Some(i) => {
                    let one = BigInt::one();
                    a.add_row_multiple(t, i, &one);
                    u.add_row_multiple(t, i, &one);
                }
                None => break,
            }
        }
        if a.get(t, t).is_negative() {
            a.negate_row(t);
            u.negate_row(t);
        }
    }

    let d = (0..steps).map(|i| a.get(i, i).clone()).collect();
    Snf { d, u, v }
}

fn smallest_pivot(a: &IntMatrix, t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, BigInt)> = None;
    for i in t..a.rows {
        for j in t..a.cols {
            let x = a.get(i, j);
            if x.is_zero() {
                continue;
            }
            let ab = x.abs();
            if best.as_ref().is_none_or(|(_, _, b)| ab < *b) {
                best = Some((i, j, ab));
            }
        }
    }
    best.map(|(i, j, _)| (i, j))
}

/// Structure of `coker(m : Z^cols -> Z^rows)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cokernel {
    /// Invariant factors greater than one.
    pub torsion: Vec<BigInt>,
    pub free_rank: usize,
}

pub fn cokernel_invariants(m: &IntMatrix) -> Cokernel {
    let snf = smith_normal_form(m);
    let rank = snf.rank();
    let torsion = snf.d.iter().filter(|x| **x > BigInt::one()).cloned().collect();
    Cokernel { torsion, free_rank: m.rows - rank }
}

/// Saturated Z-basis of `{x : m x = 0}`, returned as the columns of a
/// `cols x k` matrix in column Hermite form.
pub fn kernel_basis(m: &IntMatrix) -> IntMatrix {
    let snf = smith_normal_form(m);
    let rank = snf.rank();
    let basis: Vec<Vec<BigInt>> = (rank..m.cols).map(|j| snf.v.column(j)).collect();
    let basis = IntMatrix::from_columns(m.cols, &basis);
    column_hermite(&basis)
}

/// Z-basis of the column lattice of `m`, in column Hermite form.
pub fn column_lattice_basis(m: &IntMatrix) -> IntMatrix {
    column_hermite(m)
}

/// Rank over Q.
pub fn rank(m: &IntMatrix) -> usize {
    smith_normal_form(m).rank()
}

/// Canonical basis of the column lattice: the transpose of the row Hermite
/// normal form of `m^T` with zero rows dropped. Pivots are positive and the
/// entries after each pivot row are reduced into `[0, pivot)`.
pub(crate) fn column_hermite(m: &IntMatrix) -> IntMatrix {
    let mut a = m.transpose();
    let (rows, cols) = (a.rows, a.cols);
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        // gcd elimination in column c among rows r..
        loop {
            let pivot = (r..rows)
                .filter(|&i| !a.get(i, c).is_zero())
                .min_by(|&x, &y| a.get(x, c).abs().cmp(&a.get(y, c).abs()));
            let Some(p) = pivot else { break };
            a.swap_rows(r, p);
            let mut done = true;
            for i in r + 1..rows {
                if a.get(i, c).is_zero() {
                    continue;
                }
                let q = a.get(i, c).div_floor(a.get(r, c));
                a.add_row_multiple(i, r, &(-q));
                if !a.get(i, c).is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if a.get(r, c).is_zero() {
            continue;
        }
        if a.get(r, c).is_negative() {
            a.negate_row(r);
        }
        let pivot = a.get(r, c).clone();
        for i in 0..r {
            let q = a.get(i, c).div_floor(&pivot);
            a.add_row_multiple(i, r, &(-q));
        }
        r += 1;
    }
    let kept: Vec<Vec<BigInt>> = (0..r).map(|i| a.row(i).to_vec()).collect();
    IntMatrix::from_columns(m.rows, &kept)
}

/// Unique integer solution `x` of `m x = b` for each column `b` of `rhs`,
/// when `m` has full column rank.
pub fn solve_injective(m: &IntMatrix, rhs: &IntMatrix) -> Result<IntMatrix, LatticeError> {
    if m.rows != rhs.rows {
        return Err(LatticeError::Shape("right-hand side height differs".into()));
    }
    let snf = smith_normal_form(m);
    let rank = snf.rank();
    if rank != m.cols {
        return Err(LatticeError::Shape("matrix is not injective".into()));
    }
    let mut cols = Vec::with_capacity(rhs.cols);
    for b in rhs.columns() {
        let ub = snf.u.mul_vec(&b);
        if ub[rank..].iter().any(|x| !x.is_zero()) {
            return Err(LatticeError::NoIntegerSolution);
        }
        let mut y = Vec::with_capacity(m.cols);
        for i in 0..rank {
            let (q, r) = ub[i].div_rem(&snf.d[i]);
            if !r.is_zero() {
                return Err(LatticeError::NoIntegerSolution);
            }
            y.push(q);
        }
        cols.push(snf.v.mul_vec(&y));
    }
    Ok(IntMatrix::from_columns(m.cols, &cols))
}

/// Inverse of a unimodular matrix.
pub fn unimodular_inverse(m: &IntMatrix) -> Result<IntMatrix, LatticeError> {
    if m.rows != m.cols {
        return Err(LatticeError::Shape("inverse of a non-square matrix".into()));
    }
    solve_injective(m, &IntMatrix::identity(m.rows))
}

/// A finite group acting on `Z^rank`, given by its complete element list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupAction {
    rank: usize,
    generators: Vec<IntMatrix>,
    elements: Vec<IntMatrix>,
}

pub const MAX_GROUP_ORDER: usize = 5040;

impl GroupAction {
    /// Validates an explicit element list: square matrices of determinant
    /// ±1, the identity present, closed under product.
    pub fn new(rank: usize, generators: Vec<IntMatrix>, elements: Vec<IntMatrix>) -> Result<Self, LatticeError> {
        for (i, e) in elements.iter().chain(&generators).enumerate() {
            if e.rows != rank || e.cols != rank {
                return Err(LatticeError::Shape(format!("element {i} is not {rank}x{rank}")));
            }
        }
        for (index, e) in elements.iter().enumerate() {
            let det = e.determinant()?;
            if det.abs() != BigInt::one() {
                return Err(LatticeError::NotInvertible { index, det });
            }
        }
        let id = IntMatrix::identity(rank);
        if !elements.contains(&id) {
            return Err(LatticeError::MissingIdentity);
        }
        let lookup: HashMap<&IntMatrix, usize> = elements.iter().enumerate().map(|(i, e)| (e, i)).collect();
        for (i, a) in elements.iter().enumerate() {
            for (j, b) in elements.iter().enumerate() {
                let p = a.mul(b)?;
                if !lookup.contains_key(&p) {
                    return Err(LatticeError::NotClosed(format!("product of elements {i} and {j} is missing")));
                }
            }
        }
        for g in &generators {
            if !lookup.contains_key(g) {
                return Err(LatticeError::NotClosed("generator missing from element list".into()));
            }
        }
        Ok(GroupAction { rank, generators, elements })
    }

    /// Enumerates the group generated by `generators`. The identity is
    /// always element 0; the rest follow breadth-first order.
    pub fn from_generators(rank: usize, generators: Vec<IntMatrix>) -> Result<Self, LatticeError> {
        let elements = closure(rank, &generators)?;
        Self::new(rank, generators, elements)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn generators(&self) -> &[IntMatrix] {
        &self.generators
    }

    pub fn elements(&self) -> &[IntMatrix] {
        &self.elements
    }

    pub fn index_of(&self, m: &IntMatrix) -> Option<usize> {
        self.elements.iter().position(|e| e == m)
    }

    pub fn identity_index(&self) -> usize {
        self.index_of(&IntMatrix::identity(self.rank)).expect("validated group has identity")
    }

    /// Checks that an index set is closed under product.
    pub fn check_subgroup(&self, subgroup: &[usize]) -> Result<(), LatticeError> {
        for &i in subgroup {
            if i >= self.elements.len() {
                return Err(LatticeError::BadIndex(i));
            }
        }
        if subgroup.is_empty() {
            return Err(LatticeError::NotClosed("empty subgroup".into()));
        }
        for &i in subgroup {
            for &j in subgroup {
                let p = self.elements[i].mul(&self.elements[j])?;
                match self.index_of(&p) {
                    Some(k) if subgroup.contains(&k) => {}
                    _ => {
                        return Err(LatticeError::NotClosed(format!(
                            "product of elements {i} and {j} leaves the subgroup"
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    /// Indices of the subgroup generated by the given matrices.
    pub fn subgroup_generated_by(&self, gens: &[IntMatrix]) -> Result<Vec<usize>, LatticeError> {
        let elems = closure(self.rank, gens)?;
        let mut idx = Vec::with_capacity(elems.len());
        for e in &elems {
            match self.index_of(e) {
                Some(i) => idx.push(i),
                None => return Err(LatticeError::NotClosed("subgroup generator is not a group element".into())),
            }
        }
        idx.sort_unstable();
        Ok(idx)
    }

    /// Same abstract group acting through `images[i]` for element `i`.
    pub fn with_elements(&self, rank: usize, images: Vec<IntMatrix>) -> Result<Self, LatticeError> {
        let gens = self
            .generators
            .iter()
            .map(|g| images[self.index_of(g).expect("generator is an element")].clone())
            .collect();
        Ok(GroupAction { rank, generators: gens, elements: images })
    }

    /// Sum of all elements (the trace or norm map).
    pub fn trace_matrix(&self) -> IntMatrix {
        let mut acc = IntMatrix::zeros(self.rank, self.rank);
        for e in &self.elements {
            acc = acc.add(e).expect("same shape");
        }
        acc
    }
}

fn closure(rank: usize, generators: &[IntMatrix]) -> Result<Vec<IntMatrix>, LatticeError> {
    for g in generators {
        if g.rows != rank || g.cols != rank {
            return Err(LatticeError::Shape(format!("generator is not {rank}x{rank}")));
        }
    }
    let id = IntMatrix::identity(rank);
    let mut seen: HashMap<IntMatrix, usize> = HashMap::new();
    let mut elements = vec![id.clone()];
    seen.insert(id.clone(), 0);
    let mut queue = VecDeque::from([id]);
    while let Some(x) = queue.pop_front() {
        for g in generators {
            let y = x.mul(g)?;
            if !seen.contains_key(&y) {
                if elements.len() >= MAX_GROUP_ORDER {
                    return Err(LatticeError::GroupTooLarge(MAX_GROUP_ORDER));
                }
                seen.insert(y.clone(), elements.len());
                elements.push(y.clone());
                queue.push_back(y);
            }
        }
    }
    Ok(elements)
}

/// `dim_Q` of the common fixed space of the subgroup.
pub fn fixed_space_rank(a: &GroupAction, subgroup: &[usize]) -> Result<usize, LatticeError> {
    a.check_subgroup(subgroup)?;
    let id = IntMatrix::identity(a.rank);
    let blocks: Vec<IntMatrix> = subgroup.iter().map(|&i| a.elements[i].sub(&id)).collect::<Result<_, _>>()?;
    let stacked = IntMatrix::stack(&blocks, a.rank)?;
    Ok(a.rank - rank(&stacked))
}

/// Saturated basis of the lattice fixed by the whole group.
pub fn invariant_lattice(a: &GroupAction) -> IntMatrix {
    let id = IntMatrix::identity(a.rank);
    let blocks: Vec<IntMatrix> = a.elements.iter().map(|e| e.sub(&id).expect("same shape")).collect();
    let stacked = IntMatrix::stack(&blocks, a.rank).expect("same width");
    kernel_basis(&stacked)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn check_snf(m: &IntMatrix) -> Snf {
        let s = smith_normal_form(m);
        let prod = s.u.mul(m).unwrap().mul(&s.v).unwrap();
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                let expect = if i == j { s.d[i].clone() } else { BigInt::zero() };
                assert_eq!(*prod.get(i, j), expect);
            }
        }
        assert_eq!(s.u.determinant().unwrap().abs(), BigInt::one());
        assert_eq!(s.v.determinant().unwrap().abs(), BigInt::one());
        s
    }

    #[test]
    fn snf_examples() {
        assert_eq!(check_snf(&IntMatrix::from_rows(&[[1, 1], [-1, 1]])).d, big(&[1, 2]));
        assert_eq!(check_snf(&IntMatrix::identity(3)).d, big(&[1, 1, 1]));
        assert_eq!(check_snf(&IntMatrix::from_rows(&[[0, 0], [0, 0]])).d, big(&[0, 0]));
        assert_eq!(check_snf(&IntMatrix::from_rows(&[[2, 0], [0, 3]])).d, big(&[1, 6]));
    }

    #[test]
    fn snf_of_rectangular_matrices() {
        let m = IntMatrix::from_rows(&[[2, 4, 4], [-6, 6, 12], [10, -4, -16]]);
        assert_eq!(check_snf(&m).d, big(&[2, 6, 12]));
        let wide = IntMatrix::from_rows(&[[1, 2, 3]]);
        assert_eq!(check_snf(&wide).d, big(&[1]));
        let empty = IntMatrix::zeros(0, 3);
        assert!(check_snf(&empty).d.is_empty());
    }

    #[test]
    fn cokernel_examples() {
        let c = cokernel_invariants(&IntMatrix::from_rows(&[[1, 1], [-1, 1]]));
        assert_eq!((c.torsion, c.free_rank), (big(&[2]), 0));
        let c = cokernel_invariants(&IntMatrix::identity(2));
        assert_eq!((c.torsion, c.free_rank), (vec![], 0));
        let c = cokernel_invariants(&IntMatrix::from_rows(&[[2, 0], [0, 3]]));
        assert_eq!((c.torsion, c.free_rank), (big(&[6]), 0));
        let c = cokernel_invariants(&IntMatrix::from_rows(&[[2], [0]]));
        assert_eq!((c.torsion, c.free_rank), (big(&[2]), 1));
    }

    #[test]
    fn kernel_examples() {
        let k = kernel_basis(&IntMatrix::from_rows(&[[1, 1], [1, 1]]));
        assert_eq!(k.columns(), vec![big(&[1, -1])]);
        assert_eq!(kernel_basis(&IntMatrix::identity(2)).cols(), 0);
        let k = kernel_basis(&IntMatrix::zeros(2, 2));
        assert_eq!(k.cols(), 2);
        assert_eq!(k, IntMatrix::identity(2));
    }

    #[test]
    fn kernel_is_saturated() {
        // 2x + 4y = 0 has kernel Z(2,-1), not the finite-index Z(4,-2)
        let k = kernel_basis(&IntMatrix::from_rows(&[[2, 4]]));
        assert_eq!(k.columns(), vec![big(&[2, -1])]);
    }

    #[test]
    fn group_validation() {
        let swap = IntMatrix::from_rows(&[[0, 1], [1, 0]]);
        let g = GroupAction::from_generators(2, vec![swap.clone()]).unwrap();
        assert_eq!(g.order(), 2);
        assert_eq!(g.identity_index(), 0);

        let missing_id = GroupAction::new(2, vec![], vec![swap.clone()]);
        assert_eq!(missing_id.unwrap_err(), LatticeError::MissingIdentity);

        let not_closed =
            GroupAction::new(2, vec![], vec![IntMatrix::identity(2), IntMatrix::from_rows(&[[1, 1], [0, 1]])]);
        assert!(matches!(not_closed, Err(LatticeError::NotClosed(_))));

        let singular = GroupAction::new(1, vec![], vec![IntMatrix::identity(1), IntMatrix::from_rows(&[[2]])]);
        assert!(matches!(singular, Err(LatticeError::NotInvertible { .. })));

        let infinite = GroupAction::from_generators(2, vec![IntMatrix::from_rows(&[[1, 1], [0, 1]])]);
        assert!(matches!(infinite, Err(LatticeError::GroupTooLarge(_))));
    }

    #[test]
    fn fixed_space_examples() {
        let swap = GroupAction::from_generators(2, vec![IntMatrix::from_rows(&[[0, 1], [1, 0]])]).unwrap();
        assert_eq!(fixed_space_rank(&swap, &[0, 1]).unwrap(), 1);
        assert_eq!(fixed_space_rank(&swap, &[0]).unwrap(), 2);
        assert!(matches!(fixed_space_rank(&swap, &[1]), Err(LatticeError::NotClosed(_))));

        let sign = GroupAction::from_generators(1, vec![IntMatrix::from_rows(&[[-1]])]).unwrap();
        assert_eq!(fixed_space_rank(&sign, &[0, 1]).unwrap(), 0);
    }

    #[test]
    fn solve_and_inverse() {
        let m = IntMatrix::from_rows(&[[2, 1], [1, 1]]);
        let inv = unimodular_inverse(&m).unwrap();
        assert_eq!(m.mul(&inv).unwrap(), IntMatrix::identity(2));
        let inj = IntMatrix::from_rows(&[[1], [-1]]);
        let rhs = IntMatrix::from_rows(&[[-1], [1]]);
        assert_eq!(solve_injective(&inj, &rhs).unwrap(), IntMatrix::from_rows(&[[-1]]));
        let bad = IntMatrix::from_rows(&[[1], [1]]);
        assert_eq!(solve_injective(&inj, &bad), Err(LatticeError::NoIntegerSolution));
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        let m = IntMatrix::from_rows(&[[0, 2, 1], [3, -1, 4], [5, 0, -2]]);
        // 0*(2-0) - 2*(-6-20) + 1*(0+5) = 57
        assert_eq!(m.determinant().unwrap(), BigInt::from(57));
    }
}
