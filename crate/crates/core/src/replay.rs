//! End-to-end replay of the block-matrix family: builds `Γ` from a single
//! `A ∈ SL(k, Z)` and checks rigidity, ergodicity, strong ergodicity and
//! freeness against the profile the theory predicts for that `A`.

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::dual_dynamics::{ergodicity_check, freeness_check, ErgodicityVerdict, FreenessReport, Outcome};
use crate::error::{Error, Result};
use crate::exact_linalg::{has_root_of_unity_eigenvalue, IntMatrix, LatticeVector, RootOfUnityVerdict};
use crate::group_model::build_theorem1_family;
use crate::relt_certificate::{build_certificate, check_certificate, CertificateReport};
use crate::report::{Report, Status};
use crate::spectral_witness::{
    asi_witness, fejer_shift_deviation_sq, strong_ergodicity_verdict, SpectralOptions, StrongErgodicityReport,
    StrongOutcome,
};

pub const DECAY_WINDOWS: [usize; 5] = [16, 32, 64, 128, 256];

#[derive(Clone, Debug, Serialize)]
pub struct ReplayOptions {
    pub bound: usize,
    pub radius: u32,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub window: usize,
    pub samples: usize,
    pub word_length: usize,
    pub seed: u64,
    pub decay_windows: Vec<usize>,
}

impl Default for ReplayOptions {
    fn default() -> Self {
        ReplayOptions {
            bound: 100_000,
            radius: 12,
            tolerance: 1e-8,
            max_iterations: 100_000,
            window: 128,
            samples: 1000,
            word_length: 6,
            seed: 0,
            decay_windows: DECAY_WINDOWS.to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mark {
    Holds,
    Fails,
    Evidence,
    Inconclusive,
}

impl Mark {
    fn glyph(self) -> &'static str {
        match self {
            Mark::Holds => "✓",
            Mark::Fails => "✗",
            Mark::Evidence => "evidence✓",
            Mark::Inconclusive => "?",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Facet {
    pub property: &'static str,
    pub expected: Mark,
    pub observed: Mark,
    pub status: Status,
}

impl Facet {
    fn new(property: &'static str, expected: Mark, observed: Mark) -> Self {
        let status = match (expected, observed) {
            (_, Mark::Inconclusive) => Status::Inconclusive,
            (e, o) if e == o => Status::Consistent,
            (Mark::Evidence, Mark::Holds) => Status::Consistent,
            _ => Status::Contradiction,
        };
        Facet { property, expected, observed, status }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayRow {
    pub window: usize,
    pub deviation: f64,
    pub bound: f64,
    pub exact_sq: String,
    pub closed_form_sq: String,
    pub within_bound: bool,
    pub matches_closed_form: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StrongSection {
    pub verdict: StrongErgodicityReport,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub decay: Vec<DecayRow>,
    pub strictly_decreasing: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReplayReport {
    pub k: usize,
    pub n: usize,
    pub a: IntMatrix,
    pub profile: Vec<Facet>,
    pub status: Status,
    pub rigidity: CertificateReport,
    pub ergodicity: ErgodicityVerdict,
    pub strong_ergodicity: StrongSection,
    pub freeness: FreenessReport,
}

pub const CITATIONS: [(&str, &str); 5] = [
    ("profile", "Γ ↷ Ĥ: rigid, free, measure preserving; ergodic iff Λ ↷ T^k is; never strongly ergodic when Λ is cyclic and k ≥ 1"),
    ("rigidity", "relative property (T) of Z^n ⊂ Z^n ⋊ SL(n,Z), transported by embeddings and the bounded generation H₁ = K·L·K·L"),
    ("ergodicity", "Γ ↷ Ĥ is ergodic iff every nonzero dual point of Z^k has an infinite Λ-orbit"),
    ("strong_ergodicity", "Γ ↷ Ĥ is strongly ergodic iff Λ ↷ T^k is; an amenable Λ ≅ Z admits almost invariant functions"),
    ("freeness", "a nonidentity automorphism fixes a proper closed subtorus, which is a null set"),
];

impl ReplayReport {
    pub fn profile_line(&self) -> String {
        self.profile.iter().map(|f| format!("{} {}", f.property, f.observed.glyph())).collect::<Vec<_>>().join(", ")
    }

    pub fn facet(&self, property: &str) -> Option<&Facet> {
        self.profile.iter().find(|f| f.property == property)
    }

    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }

    pub fn to_report(&self) -> Result<Report> {
        let mut r = Report::new();
        let cite = |name: &str| CITATIONS.iter().find(|(n, _)| *n == name).map(|(_, c)| *c).unwrap_or_default();
        #[derive(Serialize)]
        struct Head<'a> {
            k: usize,
            n: usize,
            a: &'a IntMatrix,
            summary: String,
            status: Status,
            exit_code: i32,
            facets: &'a [Facet],
        }
        let head = Head {
            k: self.k,
            n: self.n,
            a: &self.a,
            summary: self.profile_line(),
            status: self.status,
            exit_code: self.exit_code(),
            facets: &self.profile,
        };
        r.push("profile", cite("profile"), &head)?;
        r.push("rigidity", cite("rigidity"), &self.rigidity)?;
        r.push("ergodicity", cite("ergodicity"), &self.ergodicity)?;
        r.push("strong_ergodicity", cite("strong_ergodicity"), &self.strong_ergodicity)?;
        r.push("freeness", cite("freeness"), &self.freeness)?;
        Ok(r)
    }
}

fn expected_ergodic(k: usize, a: &IntMatrix) -> Result<bool> {
    if k == 0 {
        return Ok(true);
    }
    Ok(has_root_of_unity_eigenvalue(a)? == RootOfUnityVerdict::No)
}

fn decay_table(a: &IntMatrix, windows: &[usize]) -> Result<(Vec<DecayRow>, bool)> {
    let xi = LatticeVector::unit(a.rows(), 0);
    let mut rows = Vec::with_capacity(windows.len());
    for &l in windows {
        let w = asi_witness(a, &xi, l)?;
        let exact: BigRational = w.lambda_deviation_sq(a);
        let closed = fejer_shift_deviation_sq(l);
        let deviation = exact.to_f64().unwrap_or(f64::NAN).sqrt();
        let bound = (2.0 / (l as f64 + 1.0)).sqrt();
        rows.push(DecayRow {
            window: l,
            deviation,
            bound,
            exact_sq: exact.to_string(),
            closed_form_sq: closed.to_string(),
            within_bound: deviation <= bound + 1e-9,
            matches_closed_form: exact == closed,
        });
    }
    let decreasing = rows.windows(2).all(|p| p[1].deviation < p[0].deviation);
    Ok((rows, decreasing))
}

/// Builds the family for `(k, n, A)` and runs the four checks. For `k = 0`
/// pass a `0 × 0` matrix.
pub fn run_theorem1_replay(k: usize, n: usize, a: &IntMatrix, opts: &ReplayOptions) -> Result<ReplayReport> {
    let lambda: Vec<IntMatrix> = if k == 0 { Vec::new() } else { vec![a.clone()] };
    let p = build_theorem1_family(k, n, &lambda).map_err(|e| e.in_section("build"))?;

    let rigidity = build_certificate(&p)
        .and_then(|cert| check_certificate(&cert, &p, opts.samples, opts.seed))
        .map_err(|e| e.in_section("rigidity"))?;
    let rigid = if rigidity.all_passed && rigidity.conclusion_reached && rigidity.acyclic {
        Mark::Holds
    } else {
        Mark::Fails
    };

    let ergodicity = ergodicity_check(&p, opts.bound, opts.radius).map_err(|e| e.in_section("ergodicity"))?;
    let expect_erg = expected_ergodic(k, a).map_err(|e| e.in_section("ergodicity"))?;
    let observed_erg = match ergodicity.outcome {
        Outcome::Ergodic => Mark::Holds,
        Outcome::NotErgodic if ergodicity.orbit.as_ref().is_none_or(|o| o.verify_closed()) => Mark::Fails,
        Outcome::NotErgodic => Mark::Inconclusive,
        Outcome::Inconclusive => Mark::Inconclusive,
    };

    let spectral = SpectralOptions {
        radius: opts.radius,
        tolerance: opts.tolerance,
        max_iterations: opts.max_iterations,
        seed: opts.seed,
        window: opts.window,
    };
    let verdict = strong_ergodicity_verdict(&p, &spectral).map_err(|e| e.in_section("strong_ergodicity"))?;
    let (decay, strictly_decreasing) = if k > 0 && expect_erg {
        decay_table(a, &opts.decay_windows).map_err(|e| e.in_section("strong_ergodicity"))?
    } else {
        (Vec::new(), false)
    };
    let expected_strong = if k == 0 { Mark::Evidence } else { Mark::Fails };
    let observed_strong = match verdict.outcome {
        StrongOutcome::NotStronglyErgodic => {
            let lifted = verdict.lift.iter().all(|l| l.equal);
            let decays = decay.is_empty() || (strictly_decreasing && decay.iter().all(|r| r.within_bound));
            if lifted && decays {
                Mark::Fails
            } else {
                Mark::Inconclusive
            }
        }
        StrongOutcome::StronglyErgodicEvidence => Mark::Evidence,
        StrongOutcome::Inconclusive => Mark::Inconclusive,
    };

    let freeness = freeness_check(&p, opts.word_length).map_err(|e| e.in_section("freeness"))?;
    let free = if freeness.all_free { Mark::Holds } else { Mark::Fails };

    let profile = vec![
        Facet::new("rigid", Mark::Holds, rigid),
        Facet::new("ergodic", if expect_erg { Mark::Holds } else { Mark::Fails }, observed_erg),
        Facet::new("strongly ergodic", expected_strong, observed_strong),
        Facet::new("free", Mark::Holds, free),
    ];
    let status = profile.iter().fold(Status::Consistent, |s, f| s.combine(f.status));
    Ok(ReplayReport {
        k,
        n,
        a: a.clone(),
        profile,
        status,
        rigidity,
        ergodicity,
        strong_ergodicity: StrongSection { verdict, decay, strictly_decreasing },
        freeness,
    })
}

/// Parses a matrix literal such as `[[2,1],[1,1]]`; `[]` is the empty matrix.
pub fn parse_matrix(s: &str) -> Result<IntMatrix> {
    if serde_json::from_str::<Vec<serde_json::Value>>(s).is_ok_and(|v| v.is_empty()) {
        return Ok(IntMatrix::zeros(0, 0));
    }
    serde_json::from_str(s).map_err(|e| Error::Parse(format!("matrix {s:?}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> ReplayOptions {
        ReplayOptions { samples: 20, radius: 5, word_length: 4, window: 32, ..Default::default() }
    }

    #[test]
    fn parse_matrix_forms() {
        assert_eq!(parse_matrix("[[2,1],[1,1]]").unwrap(), IntMatrix::from_i64(&[[2, 1], [1, 1]]).unwrap());
        assert_eq!(parse_matrix("[[\"-3\"]]").unwrap(), IntMatrix::from_i64(&[[-3]]).unwrap());
        assert_eq!(parse_matrix("[]").unwrap().rows(), 0);
        assert!(parse_matrix("[[1,2],[3]]").is_err());
        assert!(parse_matrix("[[1.5]]").is_err());
    }

    #[test]
    fn identity_lambda_is_rigid_not_ergodic() {
        let r = run_theorem1_replay(1, 2, &IntMatrix::identity(1), &quick()).unwrap();
        assert_eq!(r.status, Status::Consistent, "{}", r.profile_line());
        assert_eq!(r.facet("rigid").unwrap().observed, Mark::Holds);
        assert_eq!(r.facet("ergodic").unwrap().observed, Mark::Fails);
        assert_eq!(r.ergodicity.witness, Some(LatticeVector::from_i64(&[1])));
        assert_eq!(r.ergodicity.orbit.as_ref().unwrap().orbit().unwrap(), &[LatticeVector::from_i64(&[1])]);
    }

    #[test]
    fn finite_order_lambda_is_not_ergodic() {
        let a = IntMatrix::from_i64(&[[0, -1], [1, 0]]).unwrap();
        let r = run_theorem1_replay(2, 2, &a, &quick()).unwrap();
        assert_eq!(r.status, Status::Consistent, "{}", r.profile_line());
        assert_eq!(r.facet("ergodic").unwrap().observed, Mark::Fails);
        assert_eq!(r.ergodicity.orbit.as_ref().unwrap().orbit().unwrap().len(), 4);
    }

    #[test]
    fn decay_rows_follow_the_closed_form() {
        let a = IntMatrix::from_i64(&[[2, 1], [1, 1]]).unwrap();
        let (rows, dec) = decay_table(&a, &[4, 8, 16]).unwrap();
        assert!(dec);
        assert!(rows.iter().all(|r| r.matches_closed_form && r.within_bound));
        assert_eq!(rows[0].exact_sq, "2/17");
    }

    #[test]
    fn errors_carry_section_labels() {
        let a = IntMatrix::from_i64(&[[2, 0], [0, 1]]).unwrap();
        let e = run_theorem1_replay(2, 2, &a, &quick()).unwrap_err();
        assert!(e.to_string().starts_with("build: "), "{e}");
    }

    #[test]
    fn report_has_five_cited_sections() {
        let r = run_theorem1_replay(1, 2, &IntMatrix::identity(1), &quick()).unwrap().to_report().unwrap();
        let names: Vec<&str> = r.sections.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["profile", "rigidity", "ergodicity", "strong_ergodicity", "freeness"]);
        assert!(r.sections.iter().all(|s| !s.citation.is_empty()));
    }
}
