use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact_linalg::{IntMatrix, LatticeVector};
use crate::group_model::{conj_action, quotient_pi, transpose_dual, GroupPresentation, HPoint, Remark4Family};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightProfile {
    /// Triangular window `L + 1 - |j|`.
    Fejer,
    /// Equal weights over a finite orbit.
    OrbitAverage,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeneratorDeviation {
    pub generator: String,
    pub deviation: f64,
    pub deviation_sq: f64,
    /// Exact squared deviation as a reduced fraction, when it is rational.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_sq: Option<String>,
}

impl GeneratorDeviation {
    fn exact(generator: String, sq: &BigRational) -> Self {
        let f = sq.to_f64().unwrap_or(f64::NAN);
        GeneratorDeviation { generator, deviation: f.sqrt(), deviation_sq: f, exact_sq: Some(sq.to_string()) }
    }
}

/// A unit-norm, mean-zero trigonometric polynomial `Σ c_ξ χ_ξ` together with
/// its deviations `‖g·a - a‖₂` under the generators of the acting family.
#[derive(Clone, Debug, Serialize)]
pub struct ASIWitness {
    pub family: String,
    pub seed: LatticeVector,
    pub window: usize,
    pub profile: WeightProfile,
    pub support: Vec<LatticeVector>,
    pub coefficients: Vec<f64>,
    pub deviations: Vec<GeneratorDeviation>,
    pub mean: f64,
    pub l2_norm: f64,
    #[serde(skip)]
    weights: Vec<BigInt>,
}

impl ASIWitness {
    fn from_weights(
        family: String,
        seed: LatticeVector,
        window: usize,
        profile: WeightProfile,
        support: Vec<LatticeVector>,
        weights: Vec<BigInt>,
    ) -> Self {
        let total: f64 = weights.iter().map(|w| w.to_f64().unwrap().powi(2)).sum::<f64>().sqrt();
        let coefficients: Vec<f64> = weights.iter().map(|w| w.to_f64().unwrap() / total).collect();
        let l2_norm = coefficients.iter().map(|c| c * c).sum::<f64>().sqrt();
        let mean = support.iter().zip(&coefficients).filter(|(x, _)| x.is_zero()).map(|(_, c)| c).sum();
        ASIWitness { family, seed, window, profile, support, coefficients, deviations: Vec::new(), mean, l2_norm, weights }
    }

    /// Exact `‖σ a - a‖₂²` where `σ` maps the character `χ_ξ` to `χ_{act(ξ)}`.
    pub fn deviation_sq_under<F>(&self, act: F) -> BigRational
    where
        F: Fn(&LatticeVector) -> LatticeVector,
    {
        shifted_deviation_sq(&self.support, &self.weights, act)
    }

    /// Exact squared deviation under `A` acting on character indices.
    pub fn lambda_deviation_sq(&self, a: &IntMatrix) -> BigRational {
        self.deviation_sq_under(|x| LatticeVector::new(a.mul_vec(x.entries())))
    }

    /// Squared deviations of the witness lifted to `Z^{k+n}` (characters
    /// supported on `Z^k × {0}`) under every `Γ` generator, each paired with the
    /// deviation under its image `π(γ) ∈ Λ`.
    pub fn lift_deviations(&self, p: &GroupPresentation) -> Result<Vec<(BigRational, BigRational)>> {
        let k = p.spec.k;
        if self.seed.dim() != k {
            return Err(Error::dim(format!("witness lives in dimension {}, family has k = {k}", self.seed.dim())));
        }
        let zero_n = LatticeVector::zero(p.spec.n);
        let lifted: Vec<LatticeVector> =
            self.support.iter().map(|v| HPoint::new(v.clone(), zero_n.clone()).concat()).collect();
        Ok(p.generators(crate::group_model::SubgroupTag::Gamma)
            .iter()
            .map(|g| {
                let up = shifted_deviation_sq(&lifted, &self.weights, |x| {
                    conj_action(g, &HPoint::from_concat(&p.spec, x).expect("lifted dimension")).concat()
                });
                (up, self.lambda_deviation_sq(&quotient_pi(g)))
            })
            .collect())
    }
}

fn shifted_deviation_sq<F>(support: &[LatticeVector], weights: &[BigInt], act: F) -> BigRational
where
    F: Fn(&LatticeVector) -> LatticeVector,
{
    let original: HashMap<&LatticeVector, &BigInt> = support.iter().zip(weights).collect();
    let mut moved: HashMap<LatticeVector, BigInt> = HashMap::new();
    for (x, w) in support.iter().zip(weights) {
        *moved.entry(act(x)).or_default() += w;
    }
    let mut sum = BigInt::zero();
    for (y, w) in &moved {
        let d = w - original.get(y).copied().cloned().unwrap_or_default();
        sum += &d * &d;
    }
    for (x, w) in &original {
        if !moved.contains_key(*x) {
            sum += *w * *w;
        }
    }
    let norm: BigInt = weights.iter().map(|w| w * w).sum();
    BigRational::new(sum, norm)
}

/// Closed form of the squared shift deviation of a normalized Fejér window of
/// half-width `L`: `6 / (2L² + 4L + 3)`.
pub fn fejer_shift_deviation_sq(window: usize) -> BigRational {
    let l = BigInt::from(window);
    BigRational::new(BigInt::from(6), BigInt::from(2) * &l * &l + BigInt::from(4) * &l + BigInt::from(3))
}

/// Fejér-weighted sum of the characters `χ_{A^j ξ}`, `|j| ≤ L`, for the lattice
/// automorphism `A` (the torus acts through `(A^{-1})^t`).
pub fn asi_witness(a: &IntMatrix, xi: &LatticeVector, window: usize) -> Result<ASIWitness> {
    if !a.is_square() || a.rows() != xi.dim() {
        return Err(Error::dim(format!("A is {}x{} but ξ has length {}", a.rows(), a.cols(), xi.dim())));
    }
    if xi.is_zero() {
        return Err(Error::Domain("ξ must be nonzero: the constant character is excluded".into()));
    }
    let a_inv = a.inverse_unimodular()?;
    let l = window as i64;
    let mut forward = vec![xi.clone()];
    for _ in 0..window {
        let next = LatticeVector::new(a.mul_vec(forward.last().unwrap().entries()));
        forward.push(next);
    }
    let mut backward = vec![xi.clone()];
    for _ in 0..window {
        let next = LatticeVector::new(a_inv.mul_vec(backward.last().unwrap().entries()));
        backward.push(next);
    }
    let support: Vec<LatticeVector> = backward[1..].iter().rev().chain(forward.iter()).cloned().collect();
    let distinct: HashSet<&LatticeVector> = support.iter().collect();
    if distinct.len() != support.len() {
        return Err(Error::Precondition(format!(
            "the orbit of {xi} repeats within the window of half-width {window}; coefficients would alias"
        )));
    }
    let weights: Vec<BigInt> = (-l..=l).map(|j| BigInt::from(l + 1 - j.abs())).collect();
    let mut w = ASIWitness::from_weights(format!("A = {a}"), xi.clone(), window, WeightProfile::Fejer, support, weights);
    let sq = w.lambda_deviation_sq(a);
    w.deviations.push(GeneratorDeviation::exact(format!("{a}"), &sq));
    Ok(w)
}

/// Equal-weight sum over a finite orbit: exactly invariant, hence deviation 0.
pub fn invariant_witness(a: &IntMatrix, xi: &LatticeVector, orbit: &[LatticeVector]) -> Result<ASIWitness> {
    if orbit.iter().any(LatticeVector::is_zero) {
        return Err(Error::Domain("orbit contains the zero character".into()));
    }
    let weights = vec![BigInt::from(1); orbit.len()];
    let mut w = ASIWitness::from_weights(
        format!("A = {a}"),
        xi.clone(),
        0,
        WeightProfile::OrbitAverage,
        orbit.to_vec(),
        weights,
    );
    let sq = w.lambda_deviation_sq(a);
    w.deviations.push(GeneratorDeviation::exact(format!("{a}"), &sq));
    Ok(w)
}

/// Fejér sum of `exp(2πi q θ_1)`, `q = 1..=L`, for the affine family.
///
/// The linear generators act on character indices through `(B^{-1})^t`, which
/// fixes multiples of `e_1`; a translation by `α e_i` multiplies `χ_ξ` by
/// `exp(-2πi α ξ_i)`.
pub fn affine_asi_witness(family: &Remark4Family, window: usize) -> Result<ASIWitness> {
    if window == 0 {
        return Err(Error::Precondition("window must be at least 1".into()));
    }
    let n = family.n;
    let support: Vec<LatticeVector> =
        (1..=window).map(|q| LatticeVector::unit(n, 0).scale(&BigInt::from(q))).collect();
    let weights: Vec<BigInt> = (1..=window).map(|q| BigInt::from(window + 1 - q)).collect();
    let mut w = ASIWitness::from_weights(
        format!("affine family on T^{n}, alpha = {}/{}", family.alpha.numerator, family.alpha.denominator),
        LatticeVector::unit(n, 0),
        window,
        WeightProfile::Fejer,
        support,
        weights,
    );
    for b in &family.linear_generators {
        let dual = transpose_dual(b)?;
        let sq = w.deviation_sq_under(|x| LatticeVector::new(dual.mul_vec(x.entries())));
        w.deviations.push(GeneratorDeviation::exact(format!("{b}"), &sq));
    }
    let (num, den) = (&family.alpha.numerator, &family.alpha.denominator);
    for t in &family.translation_generators {
        let mut sq = 0.0;
        for (xi, c) in w.support.iter().zip(&w.coefficients) {
            let pairing: BigInt = xi.entries().iter().zip(t.entries()).map(|(a, b)| a * b).sum();
            let frac = (pairing * num).mod_floor(den).to_f64().unwrap() / den.to_f64().unwrap();
            let phase = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * frac);
            sq += c * c * (phase - 1.0).norm_sqr();
        }
        w.deviations.push(GeneratorDeviation {
            generator: format!("translation by alpha*{t}"),
            deviation: sq.sqrt(),
            deviation_sq: sq,
            exact_sq: None,
        });
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_model::{build_remark4_family, build_theorem1_family, AlphaSurrogate};

    fn golden() -> IntMatrix {
        IntMatrix::from_i64(&[[2, 1], [1, 1]]).unwrap()
    }

    /// Direct coefficient arithmetic: normalized Fejér vector against its shift.
    fn brute_force_sq(window: usize) -> f64 {
        let l = window as i64;
        let w: Vec<f64> = (-l..=l).map(|j| (l + 1 - j.abs()) as f64).collect();
        let s: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let c: Vec<f64> = w.iter().map(|x| x / s).collect();
        let mut sq = 0.0;
        for j in 0..=c.len() {
            let a = if j < c.len() { c[j] } else { 0.0 };
            let b = if j > 0 { c[j - 1] } else { 0.0 };
            sq += (a - b).powi(2);
        }
        sq
    }

    #[test]
    fn identity_character_is_invariant() {
        let w = invariant_witness(&IntMatrix::identity(1), &LatticeVector::from_i64(&[1]), &[LatticeVector::from_i64(&[1])])
            .unwrap();
        assert_eq!(w.deviations[0].deviation, 0.0);
        assert!((w.l2_norm - 1.0).abs() < 1e-12);
        // A fixed character cannot carry a Fejér window.
        assert!(asi_witness(&IntMatrix::identity(2), &LatticeVector::from_i64(&[1, 0]), 3).is_err());
    }

    #[test]
    fn fejer_matches_closed_form_and_brute_force() {
        for l in [1usize, 2, 8, 16, 64] {
            let w = asi_witness(&golden(), &LatticeVector::from_i64(&[1, 0]), l).unwrap();
            let exact = w.lambda_deviation_sq(&golden());
            assert_eq!(exact, fejer_shift_deviation_sq(l));
            assert!((w.deviations[0].deviation_sq - brute_force_sq(l)).abs() < 1e-12);
            assert!(w.deviations[0].deviation <= (2.0 / (l as f64 + 1.0)).sqrt());
            assert!(w.mean.abs() <= 1e-12);
            assert!((w.l2_norm - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn window_doubling_shrinks_deviation() {
        for l in [8usize, 16, 32, 64] {
            let a = fejer_shift_deviation_sq(l).to_f64().unwrap().sqrt();
            let b = fejer_shift_deviation_sq(2 * l).to_f64().unwrap().sqrt();
            assert!(b <= 0.75 * a);
        }
    }

    #[test]
    fn lift_matches_lambda_deviation() {
        let p = build_theorem1_family(2, 2, &[golden()]).unwrap();
        let w = asi_witness(&golden(), &LatticeVector::from_i64(&[1, 0]), 10).unwrap();
        for (up, down) in w.lift_deviations(&p).unwrap() {
            assert_eq!(up, down);
        }
    }

    #[test]
    fn affine_witness_examples() {
        let half = AlphaSurrogate::new(BigInt::from(500_000), BigInt::from(1_000_000), 0.0).unwrap();
        let fam = build_remark4_family(3, half).unwrap();
        let w = affine_asi_witness(&fam, 1).unwrap();
        let nl = fam.linear_generators.len();
        assert!(w.deviations[..nl].iter().all(|d| d.deviation_sq == 0.0));
        assert!((w.deviations[nl].deviation_sq - 4.0).abs() < 1e-12);
        assert_eq!(w.deviations[nl + 1].deviation_sq, 0.0);

        let fam = build_remark4_family(3, AlphaSurrogate::default_irrational()).unwrap();
        let w = affine_asi_witness(&fam, 16).unwrap();
        let alpha = fam.alpha.value();
        let direct: f64 = w
            .coefficients
            .iter()
            .enumerate()
            .map(|(i, c)| c * c * 4.0 * (std::f64::consts::PI * (i + 1) as f64 * alpha).sin().powi(2))
            .sum();
        assert!((w.deviations[nl].deviation_sq - direct).abs() < 1e-9);
    }
}
