//! Exact integer linear algebra and integer polynomial arithmetic.
//!
//! Everything here works over arbitrary-precision integers (or rationals for
//! null spaces); there are no floating-point or fixed-width code paths.

mod lattice;
mod matrix;
mod poly;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

pub use lattice::LatticeVector;
pub(crate) use matrix::IntLiteral;
pub use matrix::IntMatrix;
pub use poly::IntPolynomial;

use crate::error::{Error, Result};

/// Largest matrix size accepted by [`has_root_of_unity_eigenvalue`].
pub const MAX_ROOT_OF_UNITY_SIZE: usize = 16;

pub fn det(m: &IntMatrix) -> Result<BigInt> {
    m.det()
}

pub fn char_poly(m: &IntMatrix) -> Result<IntPolynomial> {
    m.char_poly()
}

pub fn kernel_rank_over_rationals(m: &IntMatrix) -> usize {
    m.kernel_rank_over_rationals()
}

pub fn totient(d: u64) -> u64 {
    let mut n = d;
    let mut result = d;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            while n.is_multiple_of(p) {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

/// The `d`-th cyclotomic polynomial, obtained by dividing `x^d - 1` by
/// `Φ_e` for every proper divisor `e` of `d`.
pub fn cyclotomic_poly(d: u64) -> Result<IntPolynomial> {
    if d == 0 {
        return Err(Error::Domain("cyclotomic index must be at least 1".into()));
    }
    let mut memo = BTreeMap::new();
    Ok(cyclotomic_memo(d, &mut memo))
}

fn cyclotomic_memo(d: u64, memo: &mut BTreeMap<u64, IntPolynomial>) -> IntPolynomial {
    if let Some(p) = memo.get(&d) {
        return p.clone();
    }
    let mut q = IntPolynomial::x_pow_minus_one(d as usize);
    for e in (1..d).filter(|&e| d.is_multiple_of(e)) {
        let phi_e = cyclotomic_memo(e, memo);
        let (quot, rem) = q.div_rem_monic(&phi_e).expect("cyclotomic polynomials are monic");
        debug_assert!(rem.is_zero());
        q = quot;
    }
    memo.insert(d, q.clone());
    q
}

/// Orders `d` whose primitive roots of unity have degree `φ(d) ≤ MAX_ROOT_OF_UNITY_SIZE`.
/// Since `φ(d) ≥ sqrt(d/2)`, every such `d` is at most `2·16²`.
fn root_of_unity_orders() -> &'static [(u64, u64)] {
    static TABLE: OnceLock<Vec<(u64, u64)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let cap = MAX_ROOT_OF_UNITY_SIZE as u64;
        (1..=2 * cap * cap).map(|d| (d, totient(d))).filter(|&(_, phi)| phi <= cap).collect()
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum RootOfUnityVerdict {
    /// Some eigenvalue is a primitive `order`-th root of unity (smallest such order).
    Yes { order: u64 },
    No,
}

/// Tests whether some eigenvalue of `m` is a root of unity by checking
/// `Φ_d | char_poly(m)` for every `d` with `φ(d) ≤ size`.
pub fn has_root_of_unity_eigenvalue(m: &IntMatrix) -> Result<RootOfUnityVerdict> {
    if !m.is_square() {
        return Err(Error::dim(format!("expected a square matrix, got {}x{}", m.rows(), m.cols())));
    }
    let s = m.rows();
    if s > MAX_ROOT_OF_UNITY_SIZE {
        return Err(Error::Unsupported(format!(
            "root-of-unity test is limited to size {MAX_ROOT_OF_UNITY_SIZE}, got {s}"
        )));
    }
    let cp = m.char_poly()?;
    let mut memo = BTreeMap::new();
    for &(d, phi) in root_of_unity_orders() {
        if phi as usize > s {
            continue;
        }
        let cyc = cyclotomic_memo(d, &mut memo);
        if cyc.divides(&cp)? {
            return Ok(RootOfUnityVerdict::Yes { order: d });
        }
    }
    Ok(RootOfUnityVerdict::No)
}

/// Completes a primitive vector `w` to a matrix `A ∈ SL(n, Z)` with `A e_1 = w`.
///
/// Builds `U ∈ SL(n, Z)` with `U w = e_1` from 2x2 extended-gcd steps on the
/// pairs `(w_0, w_i)`, tracking `U^{-1}` alongside, and returns `A = U^{-1}`.
pub fn unimodular_completion(w: &LatticeVector) -> Result<IntMatrix> {
    let n = w.dim();
    if n == 0 {
        return Err(Error::dim("cannot complete a vector of dimension 0"));
    }
    let g = w.gcd();
    if !g.is_one() {
        return Err(Error::NotPrimitive { gcd: g });
    }
    let mut v: Vec<BigInt> = w.entries().to_vec();
    let mut a = IntMatrix::identity(n);
    for i in 1..n {
        if v[i].is_zero() {
            continue;
        }
        let (x, y) = (v[0].clone(), v[i].clone());
        let eg = x.extended_gcd(&y);
        let (mut gcd, mut s, mut t) = (eg.gcd, eg.x, eg.y);
        if gcd.is_negative() {
            gcd = -gcd;
            s = -s;
            t = -t;
        }
        let (xg, yg) = (&x / &gcd, &y / &gcd);
        // Row step on (0, i): [[s, t], [-y/g, x/g]], determinant (s x + t y)/g = 1.
        // Its inverse [[x/g, -t], [y/g, s]] multiplies A from the right.
        for r in 0..n {
            let c0 = a.get(r, 0).clone();
            let ci = a.get(r, i).clone();
            a.set(r, 0, &c0 * &xg + &ci * &yg);
            a.set(r, i, &ci * &s - &c0 * &t);
        }
        v[0] = gcd;
        v[i] = BigInt::zero();
    }
    if v[0].is_negative() {
        if n == 1 {
            return Err(Error::Precondition("(-1) has no completion in SL(1, Z)".into()));
        }
        // diag(-1, -1, 1, ...) is its own inverse.
        for r in 0..n {
            let c0 = -a.get(r, 0).clone();
            let c1 = -a.get(r, 1).clone();
            a.set(r, 0, c0);
            a.set(r, 1, c1);
        }
    }
    debug_assert_eq!(a.col(0), w.entries().to_vec());
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_i64(rows).unwrap()
    }

    #[test]
    fn cyclotomic_examples() {
        assert_eq!(cyclotomic_poly(1).unwrap(), IntPolynomial::from_i64(&[-1, 1]));
        assert_eq!(cyclotomic_poly(4).unwrap(), IntPolynomial::from_i64(&[1, 0, 1]));
        assert_eq!(cyclotomic_poly(6).unwrap(), IntPolynomial::from_i64(&[1, -1, 1]));
        assert!(matches!(cyclotomic_poly(0), Err(Error::Domain(_))));
    }

    #[test]
    fn cyclotomic_product_is_x_pow_minus_one() {
        for big_n in 1..=30u64 {
            let prod = (1..=big_n)
                .filter(|d| big_n % d == 0)
                .fold(IntPolynomial::one(), |acc, d| &acc * &cyclotomic_poly(d).unwrap());
            assert_eq!(prod, IntPolynomial::x_pow_minus_one(big_n as usize), "N = {big_n}");
        }
    }

    #[test]
    fn cyclotomic_degree_is_totient() {
        for d in 1..=60u64 {
            assert_eq!(cyclotomic_poly(d).unwrap().degree(), Some(totient(d) as usize));
        }
    }

    #[test]
    fn root_of_unity_examples() {
        assert_eq!(
            has_root_of_unity_eigenvalue(&m(&[&[0, -1], &[1, 0]])).unwrap(),
            RootOfUnityVerdict::Yes { order: 4 }
        );
        assert_eq!(has_root_of_unity_eigenvalue(&m(&[&[2, 1], &[1, 1]])).unwrap(), RootOfUnityVerdict::No);
        for k in 1..=4 {
            assert_eq!(
                has_root_of_unity_eigenvalue(&IntMatrix::identity(k)).unwrap(),
                RootOfUnityVerdict::Yes { order: 1 }
            );
        }
        assert!(matches!(has_root_of_unity_eigenvalue(&IntMatrix::identity(17)), Err(Error::Unsupported(_))));
        assert!(has_root_of_unity_eigenvalue(&m(&[&[1, 2]])).is_err());
    }

    #[test]
    fn golden_matrix_remainders_are_nonzero() {
        // The only orders with φ(d) ≤ 2.
        let cp = m(&[&[2, 1], &[1, 1]]).char_poly().unwrap();
        for d in [1u64, 2, 3, 4, 6] {
            let (_, r) = cp.div_rem_monic(&cyclotomic_poly(d).unwrap()).unwrap();
            assert!(!r.is_zero(), "d = {d}");
        }
    }

    #[test]
    fn completion_examples() {
        assert_eq!(unimodular_completion(&LatticeVector::from_i64(&[1, 0, 0])).unwrap(), IntMatrix::identity(3));
        for w in [vec![2, 3], vec![6, 10, 15], vec![-1, 0], vec![0, -1], vec![0, 0, 1], vec![-3, 5, 0, 7]] {
            let w = LatticeVector::from_i64(&w);
            let a = unimodular_completion(&w).unwrap();
            assert_eq!(a.det().unwrap(), BigInt::one(), "{w}");
            assert_eq!(a.col(0), w.entries().to_vec(), "{w}");
        }
        assert!(matches!(
            unimodular_completion(&LatticeVector::from_i64(&[4, 6])),
            Err(Error::NotPrimitive { gcd }) if gcd == BigInt::from(2)
        ));
    }

    fn square(max: i64) -> impl Strategy<Value = IntMatrix> {
        (1usize..=4).prop_flat_map(move |n| {
            prop::collection::vec(-max..=max, n * n).prop_map(move |d| {
                IntMatrix::new(n, n, d.into_iter().map(BigInt::from).collect()).unwrap()
            })
        })
    }

    fn unimodular(n: usize) -> impl Strategy<Value = IntMatrix> {
        prop::collection::vec((0..n, 0..n, -3i64..=3), 0..12).prop_map(move |ops| {
            ops.into_iter()
                .filter(|(i, j, _)| i != j)
                .fold(IntMatrix::identity(n), |acc, (i, j, c)| &acc * &IntMatrix::transvection(n, i, j, c))
        })
    }

    proptest! {
        #[test]
        fn det_is_multiplicative((a, b) in (1usize..=4).prop_flat_map(|n| {
            let e = prop::collection::vec(-9i64..=9, n * n);
            (e.clone(), e).prop_map(move |(x, y)| (
                IntMatrix::new(n, n, x.into_iter().map(BigInt::from).collect()).unwrap(),
                IntMatrix::new(n, n, y.into_iter().map(BigInt::from).collect()).unwrap(),
            ))
        })) {
            prop_assert_eq!((&a * &b).det().unwrap(), a.det().unwrap() * b.det().unwrap());
        }

        #[test]
        fn char_poly_is_conjugation_invariant((a, p) in (1usize..=4).prop_flat_map(|n| {
            (prop::collection::vec(-6i64..=6, n * n), unimodular(n)).prop_map(move |(x, p)| (
                IntMatrix::new(n, n, x.into_iter().map(BigInt::from).collect()).unwrap(), p,
            ))
        })) {
            let conj = &(&p.inverse_unimodular().unwrap() * &a) * &p;
            prop_assert_eq!(conj.char_poly().unwrap(), a.char_poly().unwrap());
        }

        #[test]
        fn char_poly_matches_determinant_evaluation(a in square(7), x in -20i64..=20) {
            // det(xI - A) evaluated directly at an integer point.
            let n = a.rows();
            let mut shifted = IntMatrix::identity(n);
            for i in 0..n {
                shifted.set(i, i, BigInt::from(x));
            }
            let direct = (&shifted - &a).det().unwrap();
            prop_assert_eq!(a.char_poly().unwrap().eval(&BigInt::from(x)), direct);
        }

        #[test]
        fn rank_matches_rational_elimination(a in (1usize..=4, 1usize..=5).prop_flat_map(|(r, c)| {
            prop::collection::vec(-3i64..=3, r * c).prop_map(move |d| {
                IntMatrix::new(r, c, d.into_iter().map(BigInt::from).collect()).unwrap()
            })
        })) {
            let basis = a.kernel_basis();
            prop_assert_eq!(basis.len(), a.kernel_rank_over_rationals());
            for v in basis {
                prop_assert!(a.mul_vec(v.entries()).iter().all(Zero::is_zero));
            }
        }

        #[test]
        fn root_of_unity_iff_power_fixes_a_vector(a in (1usize..=4).prop_flat_map(unimodular)) {
            let verdict = has_root_of_unity_eigenvalue(&a).unwrap();
            let n = a.rows();
            let orders: Vec<u64> = root_of_unity_orders().iter()
                .filter(|&&(_, phi)| phi as usize <= n).map(|&(d, _)| d).collect();
            let fixed = |d: u64| (&a.pow(d).unwrap() - &IntMatrix::identity(n)).kernel_rank_over_rationals() >= 1;
            match verdict {
                RootOfUnityVerdict::Yes { order } => prop_assert!(fixed(order)),
                RootOfUnityVerdict::No => prop_assert!(orders.iter().all(|&d| !fixed(d))),
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn completion_postconditions(w in (1usize..=6).prop_flat_map(|n| prop::collection::vec(-50i64..=50, n))) {
            let w = LatticeVector::from_i64(&w);
            prop_assume!(w.is_primitive());
            prop_assume!(!(w.dim() == 1 && w.entries()[0].is_negative()));
            let a = unimodular_completion(&w).unwrap();
            prop_assert_eq!(a.det().unwrap(), BigInt::one());
            prop_assert_eq!(a.col(0), w.entries().to_vec());
        }
    }
}
