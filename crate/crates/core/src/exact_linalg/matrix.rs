use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{IntPolynomial, LatticeVector};
use crate::error::{Error, Result};

/// Dense integer matrix with arbitrary-precision entries, stored row-major.
///
/// Zero-sized shapes are only produced by block extraction (the `k = 0`
/// families have empty Λ and M blocks); every parsing constructor rejects them.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<BigInt>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::dim(format!("matrix shape {rows}x{cols} has an empty side")));
        }
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(IntMatrix { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[BigInt]>>(rows: &[R]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(|row| row.as_ref().len()).unwrap_or(0);
        if rows.iter().any(|row| row.as_ref().len() != c) {
            return Err(Error::dim("ragged rows"));
        }
        let data = rows.iter().flat_map(|row| row.as_ref().iter().cloned()).collect();
        Self::new(r, c, data)
    }

    /// Convenience constructor for small literal matrices.
    pub fn from_i64<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        let rows: Vec<Vec<BigInt>> = rows
            .iter()
            .map(|row| row.as_ref().iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    /// Elementary transvection `I + c·E_ij`.
    pub fn transvection(n: usize, i: usize, j: usize, c: i64) -> Self {
        assert!(i != j && i < n && j < n);
        let mut m = Self::identity(n);
        m.data[i * n + j] = BigInt::from(c);
        m
    }

    /// Column vector as an `n x 1` matrix.
    pub fn column(v: &[BigInt]) -> Self {
        IntMatrix { rows: v.len(), cols: 1, data: v.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: BigInt) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn row_vectors(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        t
    }

    pub fn scaled(&self, c: i64) -> Self {
        let c = BigInt::from(c);
        IntMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * &c).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    let e = self.get(i, j);
                    if i == j {
                        e.is_one()
                    } else {
                        e.is_zero()
                    }
                })
            })
    }

    pub fn max_abs_entry(&self) -> BigInt {
        self.data.iter().map(|x| x.abs()).max().unwrap_or_else(BigInt::zero)
    }

    /// Copy of the `r x c` block whose top-left corner is `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, r: usize, c: usize) -> Self {
        assert!(r0 + r <= self.rows && c0 + c <= self.cols, "block out of range");
        let mut b = Self::zeros(r, c);
        for i in 0..r {
            for j in 0..c {
                b.data[i * c + j] = self.get(r0 + i, c0 + j).clone();
            }
        }
        b
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, block: &IntMatrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols, "block out of range");
        for i in 0..block.rows {
            for j in 0..block.cols {
                self.set(r0 + i, c0 + j, block.get(i, j).clone());
            }
        }
    }

    pub fn checked_mul(&self, rhs: &IntMatrix) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::dim(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = rhs.get(l, j);
                    if !b.is_zero() {
                        out.data[i * rhs.cols + j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| {
                let mut acc = BigInt::zero();
                for (a, x) in self.row(i).iter().zip(v) {
                    if !a.is_zero() && !x.is_zero() {
                        acc += a * x;
                    }
                }
                acc
            })
            .collect()
    }

    pub fn pow(&self, e: u64) -> Result<Self> {
        self.require_square()?;
        let mut result = Self::identity(self.rows);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Ok(result)
    }

    pub fn trace(&self) -> BigInt {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i).clone()).sum()
    }

    fn require_square(&self) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::dim(format!("expected a square matrix, got {}x{}", self.rows, self.cols)))
        }
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> Result<BigInt> {
        self.require_square()?;
        let n = self.rows;
        if n == 0 {
            return Ok(BigInt::one());
        }
        let mut m: Vec<Vec<BigInt>> = self.row_vectors();
        let mut negate = false;
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if m[k][k].is_zero() {
                match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                    Some(p) => {
                        m.swap(k, p);
                        negate = !negate;
                    }
                    None => return Ok(BigInt::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
                    m[i][j] = v;
                }
                m[i][k] = BigInt::zero();
            }
            prev = m[k][k].clone();
        }
        let d = m[n - 1][n - 1].clone();
        Ok(if negate { -d } else { d })
    }

    /// Rank over the rationals, by fraction-free row echelon reduction.
    pub fn rank(&self) -> usize {
        let mut m = self.row_vectors();
        let (rows, cols) = (self.rows, self.cols);
        let mut prev = BigInt::one();
        let mut r = 0;
        for c in 0..cols {
            if r == rows {
                break;
            }
            let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
                continue;
            };
            m.swap(r, p);
            for i in r + 1..rows {
                for j in c + 1..cols {
                    let v = (&m[r][c] * &m[i][j] - &m[i][c] * &m[r][j]) / &prev;
                    m[i][j] = v;
                }
                m[i][c] = BigInt::zero();
            }
            prev = m[r][c].clone();
            r += 1;
        }
        r
    }

    /// Dimension of the rational null space `{x : m x = 0}`.
    pub fn kernel_rank_over_rationals(&self) -> usize {
        self.cols - self.rank()
    }

    /// Reduced row echelon form over Q; returns the reduced rows and pivot columns.
    fn rref(&self) -> (Vec<Vec<BigRational>>, Vec<usize>) {
        let mut m: Vec<Vec<BigRational>> = (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| BigRational::from_integer(x.clone())).collect())
            .collect();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !m[i][c].is_zero()) else {
                continue;
            };
            m.swap(r, p);
            let inv = m[r][c].recip();
            for x in m[r].iter_mut() {
                *x = &*x * &inv;
            }
            for i in 0..self.rows {
                if i != r && !m[i][c].is_zero() {
                    let f = m[i][c].clone();
                    for j in 0..self.cols {
                        let delta = &f * &m[r][j];
                        m[i][j] -= delta;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    /// Basis of the rational null space, each vector cleared of denominators
    /// and reduced to a primitive integer vector.
    pub fn kernel_basis(&self) -> Vec<LatticeVector> {
        let (m, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![BigRational::zero(); self.cols];
                v[f] = BigRational::one();
                for (row, &p) in pivots.iter().enumerate() {
                    v[p] = -m[row][f].clone();
                }
                LatticeVector::from_rationals(&v)
            })
            .collect()
    }

    /// Exact inverse of a matrix with determinant ±1.
    pub fn inverse_unimodular(&self) -> Result<Self> {
        self.require_square()?;
        let d = self.det()?;
        if d.abs() != BigInt::one() {
            return Err(Error::Precondition(format!("matrix is not unimodular (det = {d})")));
        }
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        aug.set_block(0, 0, self);
        aug.set_block(0, n, &Self::identity(n));
        let (m, pivots) = aug.rref();
        debug_assert_eq!(pivots, (0..n).collect::<Vec<_>>());
        let mut inv = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let q = &m[i][n + j];
                if !q.is_integer() {
                    return Err(Error::Inconsistent("non-integral inverse of a unimodular matrix".into()));
                }
                inv.set(i, j, q.to_integer());
            }
        }
        Ok(inv)
    }

    /// Monic characteristic polynomial `det(xI - m)` via the Faddeev-LeVerrier
    /// recursion; every division is exact over the integers.
    pub fn char_poly(&self) -> Result<IntPolynomial> {
        self.require_square()?;
        let n = self.rows;
        let mut coeffs = vec![BigInt::zero(); n + 1];
        coeffs[n] = BigInt::one();
        let mut aux = Self::zeros(n, n);
        for k in 1..=n {
            let mut next = self * &aux;
            for i in 0..n {
                next.data[i * n + i] += &coeffs[n - k + 1];
            }
            let t = (self * &next).trace();
            coeffs[n - k] = -(t / BigInt::from(k));
            aux = next;
        }
        Ok(IntPolynomial::new(coeffs))
    }
}

impl Mul<&IntMatrix> for &IntMatrix {
    type Output = IntMatrix;

    fn mul(self, rhs: &IntMatrix) -> IntMatrix {
        self.checked_mul(rhs).expect("matrix product dimension mismatch")
    }
}

impl Add<&IntMatrix> for &IntMatrix {
    type Output = IntMatrix;

    fn add(self, rhs: &IntMatrix) -> IntMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix sum shape mismatch");
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        IntMatrix { rows: self.rows, cols: self.cols, data }
    }
}

impl Sub<&IntMatrix> for &IntMatrix {
    type Output = IntMatrix;

    fn sub(self, rhs: &IntMatrix) -> IntMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix difference shape mismatch");
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        IntMatrix { rows: self.rows, cols: self.cols, data }
    }
}

impl Neg for &IntMatrix {
    type Output = IntMatrix;

    fn neg(self) -> IntMatrix {
        IntMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| -x).collect() }
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "[")?;
            for (j, x) in self.row(i).iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl Serialize for IntMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> =
            (0..self.rows).map(|i| self.row(i).iter().map(|x| x.to_string()).collect()).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<IntLiteral>> = Vec::deserialize(d)?;
        let rows: Vec<Vec<BigInt>> = rows.into_iter().map(|r| r.into_iter().map(|x| x.0).collect()).collect();
        IntMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// An integer read either from a decimal string or from a JSON number.
#[derive(Clone, Debug)]
pub(crate) struct IntLiteral(pub BigInt);

impl<'de> Deserialize<'de> for IntLiteral {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Str(String),
            Int(i64),
        }
        match Raw::deserialize(d)? {
            Raw::Str(s) => s
                .trim()
                .parse::<BigInt>()
                .map(IntLiteral)
                .map_err(|e| serde::de::Error::custom(format!("bad integer {s:?}: {e}"))),
            Raw::Int(i) => Ok(IntLiteral(BigInt::from(i))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_i64(rows).unwrap()
    }

    #[test]
    fn det_examples() {
        assert_eq!(IntMatrix::identity(3).det().unwrap(), BigInt::one());
        assert_eq!(m(&[&[2, 1], &[1, 1]]).det().unwrap(), BigInt::one());
        assert_eq!(m(&[&[0, -1], &[1, 0]]).det().unwrap(), BigInt::one());
        assert_eq!(m(&[&[0, 1, 0], &[1, 0, 0], &[0, 0, 1]]).det().unwrap(), BigInt::from(-1));
        assert_eq!(m(&[&[1, 2], &[2, 4]]).det().unwrap(), BigInt::zero());
    }

    #[test]
    fn det_rejects_non_square() {
        assert!(matches!(m(&[&[1, 2, 3]]).det(), Err(Error::Dimension(_))));
    }

    #[test]
    fn char_poly_examples() {
        assert_eq!(IntMatrix::identity(2).char_poly().unwrap(), IntPolynomial::from_i64(&[1, -2, 1]));
        assert_eq!(m(&[&[2, 1], &[1, 1]]).char_poly().unwrap(), IntPolynomial::from_i64(&[1, -3, 1]));
        assert_eq!(m(&[&[0, -1], &[1, 0]]).char_poly().unwrap(), IntPolynomial::from_i64(&[1, 0, 1]));
    }

    #[test]
    fn kernel_rank_examples() {
        assert_eq!(IntMatrix::zeros(2, 2).kernel_rank_over_rationals(), 2);
        let id = IntMatrix::identity(3);
        assert_eq!((&id - &id).kernel_rank_over_rationals(), 3);
        let e12 = IntMatrix::transvection(3, 0, 1, 1);
        assert_eq!((&e12 - &id).kernel_rank_over_rationals(), 2);
    }

    #[test]
    fn kernel_basis_spans_kernel() {
        let a = m(&[&[1, 2, 3], &[2, 4, 6]]);
        let basis = a.kernel_basis();
        assert_eq!(basis.len(), 2);
        for v in &basis {
            assert!(a.mul_vec(v.entries()).iter().all(Zero::is_zero));
            assert!(v.is_primitive());
        }
    }

    #[test]
    fn inverse_of_unimodular() {
        let a = m(&[&[2, 1], &[1, 1]]);
        let inv = a.inverse_unimodular().unwrap();
        assert_eq!(inv, m(&[&[1, -1], &[-1, 2]]));
        assert!(m(&[&[2, 0], &[0, 1]]).inverse_unimodular().is_err());
    }

    #[test]
    fn json_accepts_strings_and_numbers() {
        let a: IntMatrix = serde_json::from_str(r#"[["2", 1], [1, "1"]]"#).unwrap();
        assert_eq!(a, m(&[&[2, 1], &[1, 1]]));
        assert_eq!(serde_json::to_string(&a).unwrap(), r#"[["2","1"],["1","1"]]"#);
    }
}
