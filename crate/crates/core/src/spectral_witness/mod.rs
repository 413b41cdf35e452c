//! Numeric side of strong ergodicity: compressed averaging operators, explicit
//! almost-invariant functions, and a validator for candidate coupling
//! sequences on the torus.
//!
//! Everything computed here is evidence. Finite compressions bound operator
//! norms from below only, and witnesses exhibit the failure of strong
//! ergodicity one window at a time.

mod compression;
mod measure;
mod witness;

pub use compression::{compression_norm, CompressedOperator, Exclusion, SpectralReport};
pub use measure::{
    cosine_test_functions, validate_measure_sequence, DiscreteMeasure, MeasureCheck, TestFunctions, Tolerances,
    ValidationReport,
};
pub use witness::{
    affine_asi_witness, asi_witness, fejer_shift_deviation_sq, invariant_witness, ASIWitness, GeneratorDeviation,
    WeightProfile,
};

use serde::Serialize;

use crate::dual_dynamics::{cyclic_lambda_ergodicity, Outcome};
use crate::error::Result;
use crate::exact_linalg::LatticeVector;
use crate::group_model::{sl_generators, GroupPresentation};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SpectralOptions {
    pub radius: u32,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
    pub window: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions { radius: 12, tolerance: 1e-8, max_iterations: 100_000, seed: 0, window: 128 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StrongOutcome {
    NotStronglyErgodic,
    StronglyErgodicEvidence,
    Inconclusive,
}

/// Lifted deviation under one `Γ` generator next to the deviation of its
/// image in `Λ`, both exact.
#[derive(Clone, Debug, Serialize)]
pub struct LiftCheck {
    pub generator: usize,
    pub lifted_sq: String,
    pub lambda_sq: String,
    pub equal: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StrongErgodicityReport {
    pub outcome: StrongOutcome,
    pub reduction: String,
    pub citation: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<ASIWitness>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub lift: Vec<LiftCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evidence: Option<SpectralReport>,
}

const REDUCTION: &str = "Γ ↷ Ĥ is strongly ergodic iff Λ ↷ T^k is strongly ergodic";

/// Reduces strong ergodicity of `Γ ↷ Ĥ` to that of `Λ ↷ T^k` and attaches a
/// witness (cyclic `Λ`) or spectral evidence (`k = 0`, or non-cyclic `Λ`).
pub fn strong_ergodicity_verdict(p: &GroupPresentation, opts: &SpectralOptions) -> Result<StrongErgodicityReport> {
    let (k, n) = (p.spec.k, p.spec.n);
    if k == 0 {
        let evidence = compression_norm(
            &sl_generators(n),
            Exclusion::Origin,
            opts.radius,
            opts.tolerance,
            opts.max_iterations,
            opts.seed,
        )?;
        let gap = evidence.converged && evidence.norm_estimate < 1.0 - 10.0 * opts.tolerance;
        return Ok(StrongErgodicityReport {
            outcome: if gap { StrongOutcome::StronglyErgodicEvidence } else { StrongOutcome::Inconclusive },
            reduction: format!("k = 0: Γ = SL({n},Z) acting on T^{n}"),
            citation: format!("SL({n},Z) ↷ T^{n} has spectral gap; compression norm on Z^{n} - {{0}} reported as evidence"),
            witness: None,
            lift: Vec::new(),
            evidence: Some(evidence),
        });
    }
    let Some(a) = p.cyclic_generator() else {
        let evidence = compression_norm(
            &p.lambda_generators,
            Exclusion::Origin,
            opts.radius,
            opts.tolerance,
            opts.max_iterations,
            opts.seed,
        )?;
        return Ok(StrongErgodicityReport {
            outcome: StrongOutcome::Inconclusive,
            reduction: REDUCTION.into(),
            citation: "strong ergodicity of Λ ↷ T^k is not finitely certifiable; compression evidence only".into(),
            witness: None,
            lift: Vec::new(),
            evidence: Some(evidence),
        });
    };
    let ergodic = cyclic_lambda_ergodicity(&a)?;
    let witness = if ergodic.outcome == Outcome::NotErgodic {
        let xi = ergodic.witness.clone().expect("non-ergodic verdicts carry a witness");
        let orbit = ergodic.orbit.as_ref().and_then(|o| o.orbit()).expect("finite orbit").to_vec();
        invariant_witness(&a, &xi, &orbit)?
    } else {
        asi_witness(&a, &LatticeVector::unit(k, 0), opts.window)?
    };
    let lift = witness
        .lift_deviations(p)?
        .into_iter()
        .enumerate()
        .map(|(i, (up, down))| LiftCheck { generator: i, lifted_sq: up.to_string(), lambda_sq: down.to_string(), equal: up == down })
        .collect();
    Ok(StrongErgodicityReport {
        outcome: StrongOutcome::NotStronglyErgodic,
        reduction: REDUCTION.into(),
        citation: "Λ ≅ Z is amenable, so Λ ↷ T^k is not strongly ergodic".into(),
        witness: Some(witness),
        lift,
        evidence: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_linalg::IntMatrix;
    use crate::group_model::build_theorem1_family;

    #[test]
    fn verdict_examples() {
        let opts = SpectralOptions { radius: 6, tolerance: 1e-10, window: 32, ..Default::default() };
        let golden = IntMatrix::from_i64(&[[2, 1], [1, 1]]).unwrap();
        let r = strong_ergodicity_verdict(&build_theorem1_family(2, 2, &[golden]).unwrap(), &opts).unwrap();
        assert_eq!(r.outcome, StrongOutcome::NotStronglyErgodic);
        assert!(r.lift.iter().all(|l| l.equal));
        assert_eq!(r.witness.unwrap().profile, WeightProfile::Fejer);

        let r = strong_ergodicity_verdict(&build_theorem1_family(0, 2, &[]).unwrap(), &opts).unwrap();
        assert_eq!(r.outcome, StrongOutcome::StronglyErgodicEvidence);
        assert!(r.evidence.unwrap().norm_estimate < 1.0);

        let r = strong_ergodicity_verdict(&build_theorem1_family(1, 2, &[IntMatrix::identity(1)]).unwrap(), &opts).unwrap();
        assert_eq!(r.outcome, StrongOutcome::NotStronglyErgodic);
        let w = r.witness.unwrap();
        assert_eq!(w.profile, WeightProfile::OrbitAverage);
        assert_eq!(w.deviations[0].deviation, 0.0);
    }
}
