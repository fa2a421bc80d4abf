//! Dense square matrices over cyclotomic scalars.
//!
//! Dimensions 1–4 are what the rest of the crate uses (single-qudit gates and
//! their tensor squares); nothing here hard-codes that bound. Matrices are
//! canonical entry-wise because [`Cyclo`] is canonical, so derived equality and
//! hashing are exact field-level equality.

use std::fmt;

use thiserror::Error;

use crate::cyclotomic::{CRational, Cyclo};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatrixError {
    #[error("dimension mismatch: {0}x{0} vs {1}x{1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix is singular")]
    Singular,
    #[error("matrix dimension {0} is not a perfect square")]
    NotSquareOfSquare(usize),
}

/// A square matrix with exact cyclotomic entries, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CMatrix {
    dim: usize,
    entries: Vec<Cyclo>,
}

impl CMatrix {
    pub fn new(dim: usize, entries: Vec<Cyclo>) -> Self {
        assert!(dim >= 1, "matrices must be at least 1x1");
        assert_eq!(entries.len(), dim * dim, "entry count must be dim²");
        CMatrix { dim, entries }
    }

    pub fn from_rows(rows: Vec<Vec<Cyclo>>) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "rows must form a square");
        CMatrix { dim, entries: rows.into_iter().flatten().collect() }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = CMatrix::zero(dim);
        for i in 0..dim {
            m[(i, i)] = Cyclo::one();
        }
        m
    }

    pub fn zero(dim: usize) -> Self {
        CMatrix { dim, entries: vec![Cyclo::zero(); dim * dim] }
    }

    pub fn scalar(dim: usize, c: Cyclo) -> Self {
        let mut m = CMatrix::zero(dim);
        for i in 0..dim {
            m[(i, i)] = c.clone();
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Cyclo] {
        &self.entries
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim, "dimension mismatch in matrix product");
        let d = self.dim;
        let mut out = CMatrix::zero(d);
        for i in 0..d {
            for k in 0..d {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..d {
                    let b = &other[(k, j)];
                    if b.is_zero() {
                        continue;
                    }
                    let prod = a.mul(b);
                    out[(i, j)] = out[(i, j)].add(&prod);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim);
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.add(b))
            .collect();
        CMatrix { dim: self.dim, entries }
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim);
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.sub(b))
            .collect();
        CMatrix { dim: self.dim, entries }
    }

    pub fn neg(&self) -> CMatrix {
        CMatrix { dim: self.dim, entries: self.entries.iter().map(Cyclo::neg).collect() }
    }

    pub fn scale(&self, c: &Cyclo) -> CMatrix {
        CMatrix { dim: self.dim, entries: self.entries.iter().map(|e| e.mul(c)).collect() }
    }

    pub fn scale_rational(&self, r: &CRational) -> CMatrix {
        CMatrix { dim: self.dim, entries: self.entries.iter().map(|e| e.scale(r)).collect() }
    }

    pub fn transpose(&self) -> CMatrix {
        let d = self.dim;
        let mut out = CMatrix::zero(d);
        for i in 0..d {
            for j in 0..d {
                out[(j, i)] = self[(i, j)].clone();
            }
        }
        out
    }

    pub fn conj(&self) -> CMatrix {
        CMatrix { dim: self.dim, entries: self.entries.iter().map(Cyclo::conj).collect() }
    }

    pub fn conj_transpose(&self) -> CMatrix {
        self.transpose().conj()
    }

    /// Kronecker product, `self ⊗ other`.
    pub fn tensor(&self, other: &CMatrix) -> CMatrix {
        let (da, db) = (self.dim, other.dim);
        let d = da * db;
        let mut out = CMatrix::zero(d);
        for i in 0..da {
            for j in 0..da {
                let a = &self[(i, j)];
                if a.is_zero() {
                    continue;
                }
                for k in 0..db {
                    for l in 0..db {
                        let b = &other[(k, l)];
                        if b.is_zero() {
                            continue;
                        }
                        out[(i * db + k, j * db + l)] = a.mul(b);
                    }
                }
            }
        }
        out
    }

    pub fn trace(&self) -> Cyclo {
        let mut t = Cyclo::zero();
        for i in 0..self.dim {
            t = t.add(&self[(i, i)]);
        }
        t
    }

    /// Exact determinant by fraction-producing Gaussian elimination.
    pub fn det(&self) -> Cyclo {
        let d = self.dim;
        let mut rows: Vec<Vec<Cyclo>> = (0..d)
            .map(|i| (0..d).map(|j| self[(i, j)].clone()).collect())
            .collect();
        let mut det = Cyclo::one();
        for col in 0..d {
            let pivot_row = (col..d).find(|&r| !rows[r][col].is_zero());
            let Some(pr) = pivot_row else {
                return Cyclo::zero();
            };
            if pr != col {
                rows.swap(pr, col);
                det = det.neg();
            }
            let pivot = rows[col][col].clone();
            det = det.mul(&pivot);
            let pinv = pivot.inv().expect("nonzero pivot");
            for r in col + 1..d {
                if rows[r][col].is_zero() {
                    continue;
                }
                let factor = rows[r][col].mul(&pinv);
                for c in col..d {
                    let delta = factor.mul(&rows[col][c]);
                    rows[r][c] = rows[r][c].sub(&delta);
                }
            }
        }
        det
    }

    /// Exact inverse via Gauss–Jordan on the augmented system.
    pub fn inverse(&self) -> Result<CMatrix, MatrixError> {
        let d = self.dim;
        let mut left: Vec<Vec<Cyclo>> = (0..d)
            .map(|i| (0..d).map(|j| self[(i, j)].clone()).collect())
            .collect();
        let mut right: Vec<Vec<Cyclo>> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| if i == j { Cyclo::one() } else { Cyclo::zero() })
                    .collect()
            })
            .collect();
        for col in 0..d {
            let pivot_row = (col..d).find(|&r| !left[r][col].is_zero());
            let Some(pr) = pivot_row else {
                return Err(MatrixError::Singular);
            };
            left.swap(pr, col);
            right.swap(pr, col);
            let pinv = left[col][col].inv().expect("nonzero pivot");
            for c in 0..d {
                left[col][c] = left[col][c].mul(&pinv);
                right[col][c] = right[col][c].mul(&pinv);
            }
            for r in 0..d {
                if r == col || left[r][col].is_zero() {
                    continue;
                }
                let factor = left[r][col].clone();
                for c in 0..d {
                    let dl = factor.mul(&left[col][c]);
                    left[r][c] = left[r][c].sub(&dl);
                    let dr = factor.mul(&right[col][c]);
                    right[r][c] = right[r][c].sub(&dr);
                }
            }
        }
        Ok(CMatrix::from_rows(right))
    }

    pub fn pow(&self, e: u64) -> CMatrix {
        let mut acc = CMatrix::identity(self.dim);
        let mut sq = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul(&sq);
            }
        }
        acc
    }

    pub fn is_identity(&self) -> bool {
        self.as_scalar().map(|c| c.is_one()).unwrap_or(false)
    }

    /// If the matrix is c·I, return c.
    pub fn as_scalar(&self) -> Option<Cyclo> {
        let d = self.dim;
        let c = self[(0, 0)].clone();
        for i in 0..d {
            for j in 0..d {
                if i == j {
                    if self[(i, j)] != c {
                        return None;
                    }
                } else if !self[(i, j)].is_zero() {
                    return None;
                }
            }
        }
        Some(c)
    }

    pub fn is_unitary(&self) -> bool {
        self.mul(&self.conj_transpose()).is_identity()
    }

    pub fn commutes_with(&self, other: &CMatrix) -> bool {
        self.mul(other) == other.mul(self)
    }

    /// Characteristic polynomial coefficients [c_0, …, c_{d-1}, 1] with
    /// p(x) = x^d + c_{d-1}x^{d-1} + … + c_0, computed exactly
    /// (Faddeev–LeVerrier).
    pub fn charpoly(&self) -> Vec<Cyclo> {
        let d = self.dim;
        let mut coeffs = vec![Cyclo::zero(); d + 1];
        coeffs[d] = Cyclo::one();
        let mut m = CMatrix::identity(d);
        for k in 1..=d {
            m = self.mul(&m);
            let c = m
                .trace()
                .scale(&CRational::new((-1i64).into(), (k as i64).into()));
            coeffs[d - k] = c.clone();
            for i in 0..d {
                m[(i, i)] = m[(i, i)].add(&c);
            }
        }
        coeffs
    }

    /// Deterministic key for the characteristic polynomial, shared by similar
    /// matrices.
    pub fn charpoly_key(&self) -> String {
        let cp = self.charpoly();
        let parts: Vec<String> = cp.iter().map(|c| c.to_string()).collect();
        parts.join(";")
    }

    /// First nonzero entry in row-major order.
    pub fn leading_entry(&self) -> Option<(usize, &Cyclo)> {
        self.entries.iter().enumerate().find(|(_, e)| !e.is_zero())
    }

    /// Scale so the first nonzero entry (row-major) becomes 1. Projective
    /// canonical form: two matrices are equal up to a scalar iff their
    /// normal forms are equal.
    pub fn projective_normal_form(&self) -> CMatrix {
        match self.leading_entry() {
            None => self.clone(),
            Some((_, lead)) => {
                let inv = lead.inv().expect("leading entry is nonzero");
                self.scale(&inv)
            }
        }
    }

    /// If `self = c · other` for a scalar c, return c.
    pub fn scalar_multiple_of(&self, other: &CMatrix) -> Option<Cyclo> {
        if self.dim != other.dim {
            return None;
        }
        let (pos, lead) = other.leading_entry()?;
        let c = self.entries[pos].div(lead).ok()?;
        if *self == other.scale(&c) {
            Some(c)
        } else {
            None
        }
    }

    /// Deterministic byte key of the canonical entries.
    pub fn canonical_key(&self) -> String {
        let parts: Vec<String> = self.entries.iter().map(|e| e.to_string()).collect();
        format!("{}[{}]", self.dim, parts.join(","))
    }

    /// Apply to a column vector.
    pub fn apply(&self, v: &[Cyclo]) -> Vec<Cyclo> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| {
                let mut acc = Cyclo::zero();
                for j in 0..self.dim {
                    if !self[(i, j)].is_zero() && !v[j].is_zero() {
                        acc = acc.add(&self[(i, j)].mul(&v[j]));
                    }
                }
                acc
            })
            .collect()
    }

    /// Exactly one nonzero entry per row and per column.
    pub fn is_generalized_permutation(&self) -> bool {
        let d = self.dim;
        let mut col_seen = vec![false; d];
        for i in 0..d {
            let mut row_count = 0;
            for j in 0..d {
                if !self[(i, j)].is_zero() {
                    row_count += 1;
                    if col_seen[j] {
                        return false;
                    }
                    col_seen[j] = true;
                }
            }
            if row_count != 1 {
                return false;
            }
        }
        col_seen.into_iter().all(|s| s)
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.dim;
        (0..d).all(|i| (0..d).all(|j| i == j || self[(i, j)].is_zero()))
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Cyclo;
    fn index(&self, (i, j): (usize, usize)) -> &Cyclo {
        &self.entries[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cyclo {
        &mut self.entries[i * self.dim + j]
    }
}

impl fmt::Display for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim {
            write!(f, "[")?;
            for j in 0..self.dim {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self[(i, j)])?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CMatrix({})", self.canonical_key())
    }
}

// ---------------------------------------------------------------------------
// standard gates, used across tests and the catalog
// ---------------------------------------------------------------------------

pub mod gates {
    use super::CMatrix;
    use crate::cyclotomic::{CRational, Cyclo};

    fn c(s: &str) -> Cyclo {
        crate::cyclotomic::parse_cyclo(s).expect("valid literal")
    }

    pub fn pauli_x() -> CMatrix {
        CMatrix::from_rows(vec![
            vec![c("0"), c("1")],
            vec![c("1"), c("0")],
        ])
    }

    pub fn pauli_z() -> CMatrix {
        CMatrix::from_rows(vec![
            vec![c("1"), c("0")],
            vec![c("0"), c("-1")],
        ])
    }

    pub fn pauli_y() -> CMatrix {
        CMatrix::from_rows(vec![
            vec![c("0"), c("-w4^1")],
            vec![c("w4^1"), c("0")],
        ])
    }

    /// diag(1, ζ_{2m}) — the m-th root of Z.
    pub fn z_root(m: u32) -> CMatrix {
        CMatrix::from_rows(vec![
            vec![Cyclo::one(), Cyclo::zero()],
            vec![Cyclo::zero(), Cyclo::root_of_unity(2 * m, 1)],
        ])
    }

    pub fn hadamard() -> CMatrix {
        // 1/√2 = (ω₈ + ω₈⁷)/2
        let h = c("1/2*w8^1 + 1/2*w8^7");
        CMatrix::from_rows(vec![
            vec![h.clone(), h.clone()],
            vec![h.clone(), h.neg()],
        ])
    }

    pub fn phase_gate() -> CMatrix {
        CMatrix::from_rows(vec![
            vec![c("1"), c("0")],
            vec![c("0"), c("w4^1")],
        ])
    }

    pub fn cz() -> CMatrix {
        let mut m = CMatrix::identity(4);
        m[(3, 3)] = Cyclo::from_integer(-1);
        m
    }

    pub fn cnot() -> CMatrix {
        let mut m = CMatrix::zero(4);
        m[(0, 0)] = Cyclo::one();
        m[(1, 1)] = Cyclo::one();
        m[(2, 3)] = Cyclo::one();
        m[(3, 2)] = Cyclo::one();
        m
    }

    pub fn swap() -> CMatrix {
        let mut m = CMatrix::zero(4);
        m[(0, 0)] = Cyclo::one();
        m[(1, 2)] = Cyclo::one();
        m[(2, 1)] = Cyclo::one();
        m[(3, 3)] = Cyclo::one();
        m
    }

    pub fn scaled(m: &CMatrix, num: i64, den: i64) -> CMatrix {
        m.scale_rational(&CRational::new(num.into(), den.into()))
    }
}

#[cfg(test)]
mod tests {
    use super::gates::*;
    use super::*;
    use crate::cyclotomic::parse_cyclo;

    fn c(s: &str) -> Cyclo {
        parse_cyclo(s).unwrap()
    }

    #[test]
    fn pauli_relations() {
        let x = pauli_x();
        let z = pauli_z();
        let y = pauli_y();
        assert!(x.pow(2).is_identity());
        assert!(z.pow(2).is_identity());
        assert_eq!(x.mul(&z).scale(&c("w4^1")), y);
        assert!(!x.commutes_with(&z));
        assert!(x.is_unitary() && z.is_unitary() && y.is_unitary());
    }

    #[test]
    fn hadamard_conjugation() {
        let h = hadamard();
        assert!(h.is_unitary());
        assert_eq!(h.mul(&pauli_z()).mul(&h.conj_transpose()), pauli_x());
        assert_eq!(h.mul(&pauli_x()).mul(&h.conj_transpose()), pauli_z());
    }

    #[test]
    fn determinant_and_inverse() {
        let h = hadamard();
        assert_eq!(h.det(), Cyclo::from_integer(-1));
        let hinv = h.inverse().unwrap();
        assert!(h.mul(&hinv).is_identity());
        assert_eq!(hinv, h.conj_transpose());

        let singular = CMatrix::from_rows(vec![
            vec![c("1"), c("1")],
            vec![c("1"), c("1")],
        ]);
        assert!(singular.det().is_zero());
        assert_eq!(singular.inverse(), Err(MatrixError::Singular));
    }

    #[test]
    fn tensor_products() {
        let x = pauli_x();
        let z = pauli_z();
        let xz = x.tensor(&z);
        assert_eq!(xz.dim(), 4);
        assert_eq!(xz[(0, 2)], Cyclo::one());
        assert_eq!(xz[(1, 3)], Cyclo::from_integer(-1));
        // (A⊗B)(C⊗D) = AC⊗BD
        let lhs = x.tensor(&z).mul(&z.tensor(&x));
        let rhs = x.mul(&z).tensor(&z.mul(&x));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn charpoly_is_similarity_invariant() {
        let h = hadamard();
        let p = phase_gate();
        let x = pauli_x();
        let conj = p.mul(&x).mul(&p.inverse().unwrap());
        assert_eq!(x.charpoly_key(), conj.charpoly_key());
        // X and H share eigenvalues ±1; the phase gate does not
        assert_eq!(x.charpoly_key(), h.charpoly_key());
        assert_ne!(x.charpoly_key(), p.charpoly_key());
        // trace and det appear as coefficients
        let cp = x.charpoly();
        assert_eq!(cp[0], Cyclo::from_integer(-1)); // det(X) = -1 → c0 = det·(-1)^d
        assert_eq!(cp[1], Cyclo::zero());
    }

    #[test]
    fn charpoly_constant_term_sign() {
        // c0 = (-1)^d det
        let p = phase_gate();
        let cp = p.charpoly();
        assert_eq!(cp[0], p.det()); // d = 2: (-1)² det = det
    }

    #[test]
    fn projective_normal_form_collapses_scalars() {
        let x = pauli_x();
        let scaled = x.scale(&c("w8^3"));
        assert_eq!(scaled.projective_normal_form(), x.projective_normal_form());
        assert_eq!(scaled.scalar_multiple_of(&x), Some(c("w8^3")));
        assert_eq!(x.scalar_multiple_of(&pauli_z()), None);
    }

    #[test]
    fn generalized_permutation_detection() {
        assert!(pauli_x().is_generalized_permutation());
        assert!(swap().is_generalized_permutation());
        assert!(cz().is_generalized_permutation());
        assert!(!hadamard().is_generalized_permutation());
        assert!(cz().is_diagonal());
        assert!(!cnot().is_diagonal());
    }

    #[test]
    fn scalar_detection() {
        let m = CMatrix::scalar(3, c("w4^1"));
        assert_eq!(m.as_scalar(), Some(c("w4^1")));
        assert!(CMatrix::identity(4).is_identity());
        assert_eq!(pauli_x().as_scalar(), None);
    }
}
