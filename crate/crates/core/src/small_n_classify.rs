//! Groups of `SL(n, Z)` for `n ≤ 3` with a common rational eigenvector, and
//! their conjugation into the block form
//! `K = [[±1, Z^{n-1}], [0, GL(n-1, Z)]]`.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::dual_dynamics::{orbit_bfs, OrbitReport};
use crate::error::{Error, Result};
use crate::exact_linalg::{unimodular_completion, IntMatrix, LatticeVector};

pub const MAX_GENERATORS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Eigenvector common to the generators themselves.
    Gamma,
    /// Eigenvector common to the transposed generators.
    Transpose,
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenvectorCertificate {
    pub side: Side,
    /// The matrices the eigenvector belongs to (transposed when `side` says so).
    pub generators: Vec<IntMatrix>,
    pub vector: LatticeVector,
    pub signs: Vec<i8>,
}

impl EigenvectorCertificate {
    /// `B w = ω(B) w` for every generator, and `w` primitive.
    pub fn verify(&self) -> bool {
        self.vector.is_primitive()
            && self.generators.len() == self.signs.len()
            && self.generators.iter().zip(&self.signs).all(|(b, &s)| {
                LatticeVector::new(b.mul_vec(self.vector.entries())) == self.vector.scale(&s.into())
            })
    }
}

fn check_inputs(generators: &[IntMatrix], n: usize) -> Result<()> {
    if n > 3 {
        return Err(Error::OutOfScope(format!("the common-eigenvector dichotomy is limited to n ≤ 3, got n = {n}")));
    }
    if n == 0 {
        return Err(Error::dim("n must be positive"));
    }
    if generators.len() > MAX_GENERATORS {
        return Err(Error::Unsupported(format!(
            "{} generators would need {} sign patterns; pass a generating subset of at most {MAX_GENERATORS}",
            generators.len(),
            1u64 << generators.len().min(63)
        )));
    }
    for (i, b) in generators.iter().enumerate() {
        if b.rows() != n || b.cols() != n {
            return Err(Error::dim(format!("generator {i} is {}x{}, expected {n}x{n}", b.rows(), b.cols())));
        }
        if !b.det()?.is_one() {
            return Err(Error::Precondition(format!("generator {i} is not in SL({n}, Z)")));
        }
    }
    Ok(())
}

fn normalize_sign(v: LatticeVector) -> LatticeVector {
    match v.entries().iter().find(|x| !x.is_zero()) {
        Some(x) if x.is_negative() => v.neg(),
        _ => v,
    }
}

/// Depth-first search over sign patterns in lexicographic order (`+1` before
/// `-1`, first generator most significant), pruning a prefix as soon as the
/// stacked kernel `∩ ker(B - εI)` becomes trivial.
fn search(gens: &[IntMatrix], n: usize, stacked: &mut Vec<Vec<BigInt>>, signs: &mut Vec<i8>) -> Option<LatticeVector> {
    let kernel = |rows: &Vec<Vec<BigInt>>| -> Vec<LatticeVector> {
        if rows.is_empty() {
            return (0..n).map(|i| LatticeVector::unit(n, i)).collect();
        }
        IntMatrix::from_rows(rows).expect("rectangular").kernel_basis()
    };
    let depth = signs.len();
    if depth == gens.len() {
        return kernel(stacked).into_iter().next().map(normalize_sign);
    }
    for eps in [1i8, -1] {
        let shifted = &gens[depth] - &IntMatrix::identity(n).scaled(eps as i64);
        let before = stacked.len();
        stacked.extend(shifted.row_vectors());
        if !kernel(stacked).is_empty() {
            signs.push(eps);
            if let Some(v) = search(gens, n, stacked, signs) {
                return Some(v);
            }
            signs.pop();
        }
        stacked.truncate(before);
    }
    None
}

/// Common eigenvector of the given matrices with eigenvalues `±1`.
pub fn detect_on_side(generators: &[IntMatrix], n: usize, side: Side) -> Result<Option<EigenvectorCertificate>> {
    check_inputs(generators, n)?;
    let gens: Vec<IntMatrix> = match side {
        Side::Gamma => generators.to_vec(),
        Side::Transpose => generators.iter().map(IntMatrix::transpose).collect(),
    };
    let mut signs = Vec::with_capacity(gens.len());
    let found = search(&gens, n, &mut Vec::new(), &mut signs);
    Ok(found.map(|vector| EigenvectorCertificate { side, generators: gens, vector, signs }))
}

/// Searches `Γ` first, then `Γ^t`.
pub fn detect_common_eigenvector(generators: &[IntMatrix], n: usize) -> Result<Option<EigenvectorCertificate>> {
    match detect_on_side(generators, n, Side::Gamma)? {
        Some(c) => Ok(Some(c)),
        None => detect_on_side(generators, n, Side::Transpose),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConjugationResult {
    pub side: Side,
    pub conjugator: IntMatrix,
    pub conjugated: Vec<IntMatrix>,
    pub pattern_ok: bool,
}

/// `[[±1, *], [0, C]]` with `det C = ±1`.
pub fn in_k_pattern(b: &IntMatrix) -> bool {
    let n = b.rows();
    b.get(0, 0).abs().is_one()
        && (1..n).all(|i| b.get(i, 0).is_zero())
        && (n == 1 || b.block(1, 1, n - 1, n - 1).det().is_ok_and(|d| d.abs().is_one()))
}

/// Conjugates the certified matrices by `A = unimodular_completion(w)`, so
/// that `A e_1 = w` and every `A^{-1} B A` lies in `K`.
pub fn conjugate_into_k(cert: &EigenvectorCertificate) -> Result<ConjugationResult> {
    if !cert.verify() {
        return Err(Error::Precondition("certificate does not satisfy B w = ω(B) w".into()));
    }
    let a = unimodular_completion(&cert.vector)?;
    let a_inv = a.inverse_unimodular()?;
    let mut conjugated = Vec::with_capacity(cert.generators.len());
    for (i, (b, &s)) in cert.generators.iter().zip(&cert.signs).enumerate() {
        let c = &(&a_inv * b) * &a;
        let first_col_ok = c.get(0, 0) == &BigInt::from(s);
        if !first_col_ok || !in_k_pattern(&c) {
            return Err(Error::Inconsistent(format!("generator {i} conjugates to {c}, which is not in K")));
        }
        conjugated.push(c);
    }
    Ok(ConjugationResult { side: cert.side, conjugator: a, conjugated, pattern_ok: true })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    Verified,
    Cited,
}

#[derive(Clone, Debug, Serialize)]
pub struct NarrativeStep {
    pub status: StepStatus,
    pub text: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SideResult {
    pub certificate: EigenvectorCertificate,
    pub conjugation: ConjugationResult,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassificationReport {
    pub n: usize,
    pub summary: String,
    pub degenerate: bool,
    pub hypothesis: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_side: Option<SideResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transpose_side: Option<SideResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub non_ergodicity_witness: Option<OrbitReport>,
    pub steps: Vec<NarrativeStep>,
}

fn side_result(generators: &[IntMatrix], n: usize, side: Side) -> Result<Option<SideResult>> {
    let Some(certificate) = detect_on_side(generators, n, side)? else { return Ok(None) };
    let conjugation = conjugate_into_k(&certificate)?;
    Ok(Some(SideResult { certificate, conjugation }))
}

/// Runs the common-eigenvector search on both sides and, when the transposed
/// side succeeds, exhibits the finite dual orbit `{±w}` that makes the torus
/// action non-ergodic.
pub fn classify_small_n(generators: &[IntMatrix], n: usize) -> Result<ClassificationReport> {
    check_inputs(generators, n)?;
    let minus_id = IntMatrix::identity(n).scaled(-1);
    let degenerate = generators.iter().all(|b| b.is_identity() || *b == minus_id);
    let gamma_side = side_result(generators, n, Side::Gamma)?;
    let transpose_side = side_result(generators, n, Side::Transpose)?;
    let verified = |text: String| NarrativeStep { status: StepStatus::Verified, text };
    let cited = |text: &str| NarrativeStep { status: StepStatus::Cited, text: text.into() };
    let mut steps = vec![cited(
        "assuming the Furman–Shalom invariant subspace criterion: a rigid action that is not strongly ergodic \
         forces a common rational eigenvector of Γ or of Γ^t",
    )];
    let mut witness = None;
    for (label, side) in [("Γ", &gamma_side), ("Γ^t", &transpose_side)] {
        match side {
            Some(r) => steps.push(verified(format!(
                "{label}: common eigenvector {} with signs {:?}; A = {} conjugates every generator into K",
                r.certificate.vector, r.certificate.signs, r.conjugation.conjugator
            ))),
            None => steps.push(verified(format!("{label}: every sign-pattern kernel intersection is zero"))),
        }
    }
    if gamma_side.is_some() {
        steps.push(cited("Γ ⊂ K is incompatible with rigidity: Z^n ⋊ K^t maps onto Z ⋊ Z/2Z, destroying relative property (T)"));
    }
    if let Some(r) = &transpose_side {
        let orbit = orbit_bfs(&r.certificate.vector, &r.certificate.generators, 2 * generators.len().max(1) + 2)?;
        if !orbit.verify_closed() {
            return Err(Error::Inconsistent(format!("dual orbit of {} is not closed", r.certificate.vector)));
        }
        steps.push(verified(format!(
            "dual orbit of {} under the transposes is finite ({} points), so Γ ↷ T^{n} is not ergodic",
            r.certificate.vector,
            orbit.orbit().map_or(0, |o| o.len())
        )));
        steps.push(cited("K^t ↷ T^n is not ergodic; quotients by amenable normal subgroups keep the dichotomy"));
        witness = Some(orbit);
    }
    let summary = match (&gamma_side, &transpose_side) {
        (_, Some(_)) => "Γ^t ⊂ K detected; non-ergodicity witness produced".to_string(),
        (Some(_), None) => "Γ ⊂ K detected".to_string(),
        (None, None) => "no common eigenvector on either side".to_string(),
    };
    let summary = if degenerate { format!("degenerate (amenable) group; {summary}") } else { summary };
    Ok(ClassificationReport {
        n,
        summary,
        degenerate,
        hypothesis: "Γ is non-amenable (not decided; the conclusions are conditional on it)".into(),
        gamma_side,
        transpose_side,
        non_ergodicity_witness: witness,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_i64(rows).unwrap()
    }

    #[test]
    fn upper_triangular_fixes_e1() {
        let c = detect_common_eigenvector(&[m(&[&[1, 1], &[0, 1]])], 2).unwrap().unwrap();
        assert_eq!(c.side, Side::Gamma);
        assert_eq!(c.vector, LatticeVector::from_i64(&[1, 0]));
        assert_eq!(c.signs, vec![1]);
        let r = conjugate_into_k(&c).unwrap();
        assert!(r.conjugator.is_identity());
        assert_eq!(r.conjugated, vec![m(&[&[1, 1], &[0, 1]])]);
    }

    #[test]
    fn sl2_has_no_common_eigenvector() {
        let gens = [m(&[&[0, -1], &[1, 0]]), m(&[&[1, 1], &[0, 1]])];
        assert!(detect_common_eigenvector(&gens, 2).unwrap().is_none());
        let r = classify_small_n(&gens, 2).unwrap();
        assert_eq!(r.summary, "no common eigenvector on either side");
    }

    #[test]
    fn completion_with_first_column_2_3() {
        let a = unimodular_completion(&LatticeVector::from_i64(&[2, 3])).unwrap();
        let t = m(&[&[1, 1], &[0, 1]]);
        let b = &(&a * &t) * &a.inverse_unimodular().unwrap();
        let c = detect_on_side(&[b], 2, Side::Gamma).unwrap().unwrap();
        assert_eq!(c.vector, LatticeVector::from_i64(&[2, 3]));
        let r = conjugate_into_k(&c).unwrap();
        assert_eq!(r.conjugator.col(0), LatticeVector::from_i64(&[2, 3]).into_entries());
        assert!(in_k_pattern(&r.conjugated[0]));
    }

    #[test]
    fn transpose_side_yields_a_witness() {
        let k_gens = [m(&[&[1, 1, 0], &[0, 2, 1], &[0, 1, 1]]), m(&[&[-1, 0, 2], &[0, 0, 1], &[0, 1, 0]])];
        let gens: Vec<IntMatrix> = k_gens.iter().map(IntMatrix::transpose).collect();
        let r = classify_small_n(&gens, 3).unwrap();
        assert!(r.summary.starts_with("Γ^t ⊂ K detected"));
        let orbit = r.non_ergodicity_witness.unwrap();
        assert!(orbit.verify_closed());
        assert_eq!(orbit.orbit().unwrap().len(), 2);
    }

    #[test]
    fn sl3_generators_have_none() {
        let gens: Vec<IntMatrix> =
            crate::group_model::sl_generators(3).into_iter().step_by(2).collect();
        let r = classify_small_n(&gens, 3).unwrap();
        assert_eq!(r.summary, "no common eigenvector on either side");
        assert!(!r.degenerate);
    }

    #[test]
    fn identity_group_is_degenerate() {
        let r = classify_small_n(&[IntMatrix::identity(3)], 3).unwrap();
        assert!(r.degenerate);
        assert!(r.summary.starts_with("degenerate"));
    }

    #[test]
    fn guards() {
        assert!(matches!(detect_common_eigenvector(&[IntMatrix::identity(4)], 4), Err(Error::OutOfScope(_))));
        let many = vec![IntMatrix::identity(2); 21];
        assert!(matches!(detect_common_eigenvector(&many, 2), Err(Error::Unsupported(_))));
        assert!(detect_common_eigenvector(&[m(&[&[2, 0], &[0, 1]])], 2).is_err());
    }

    #[test]
    fn transpose_symmetry() {
        let gens = [m(&[&[1, 0], &[5, 1]])];
        let left = detect_on_side(&gens, 2, Side::Transpose).unwrap().unwrap();
        let flipped: Vec<IntMatrix> = gens.iter().map(IntMatrix::transpose).collect();
        let right = detect_on_side(&flipped, 2, Side::Gamma).unwrap().unwrap();
        assert_eq!(left.vector, right.vector);
        assert_eq!(left.signs, right.signs);
    }
}
