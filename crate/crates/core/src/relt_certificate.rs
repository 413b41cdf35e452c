//! Bounded generation of `H_1` by the subgroups `K_i` and `L`, and a checkable
//! certificate chain concluding that `H < G` has the relative property (T).
//!
//! The chain has four kinds of steps:
//!
//! * an axiom, the pair `Z^n ⊂ Z^n ⋊ SL(n, Z)` for `n ≥ 2`, which is trusted;
//! * embeddings of that pair into `H_2`, carrying `Z^n` onto `L` or onto a `K_i`;
//! * bounded generation `H_1 = K L K L` with `K = K_1 ⋯ K_k`;
//! * monotonicity: shrinking the small subgroup or enlarging the ambient group.
//!
//! Everything except the axiom is verified mechanically by [`check_certificate`].

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_linalg::{IntMatrix, LatticeVector};
use crate::group_model::{
    random_h1, transpose_dual, BlockSpec, GroupElement, GroupPresentation, SubgroupTag,
};

/// `h = k_1 · l_1 · k_2 · l_2` with `k_i ∈ K` and `l_i ∈ L`.
#[derive(Clone, Debug, Serialize)]
pub struct KLKLWitness {
    pub target: GroupElement,
    pub factors: [GroupElement; 4],
}

impl KLKLWitness {
    pub fn recompose(&self) -> GroupElement {
        self.factors.iter().fold(GroupElement::identity(self.target.spec()), |acc, f| acc.mul(f))
    }

    /// Exact recomposition and block-pattern membership of each factor.
    pub fn verify(&self) -> std::result::Result<(), String> {
        let tags = [SubgroupTag::K, SubgroupTag::L, SubgroupTag::K, SubgroupTag::L];
        for (i, (f, t)) in self.factors.iter().zip(tags).enumerate() {
            if !f.belongs_to(t) {
                return Err(format!("factor {} = {f} is not in {t}", i + 1));
            }
        }
        let r = self.recompose();
        if r != self.target {
            return Err(format!("factors recompose to {r}, expected {}", self.target));
        }
        Ok(())
    }
}

/// Writes `h = (M, u, w) ∈ H_1` as `(M_1,0,0)(0,0,e_1)(M_2,0,0)(0,0,w-e_1)`,
/// where `M_1` has first column `u - M(w - e_1)` and zeros elsewhere, and
/// `M_2 = M - M_1`.
pub fn klkl_decompose(h: &GroupElement) -> Result<KLKLWitness> {
    if !h.belongs_to(SubgroupTag::H1) {
        return Err(Error::Membership { tag: "H1".into(), detail: format!("{h}") });
    }
    let spec = h.spec();
    let (k, n) = (spec.k, spec.n);
    let m = h.m_block();
    let u = h.u();
    let e1 = LatticeVector::unit(n, 0).into_entries();
    let w2: Vec<BigInt> = h.w().iter().zip(&e1).map(|(a, b)| a - b).collect();
    let mw2 = m.mul_vec(&w2);
    let mut m1 = IntMatrix::zeros(k, n);
    for i in 0..k {
        m1.set(i, 0, &u[i] - &mw2[i]);
    }
    let m2 = &m - &m1;
    let zk = vec![BigInt::zero(); k];
    let zn = vec![BigInt::zero(); n];
    let zm = IntMatrix::zeros(k, n);
    let witness = KLKLWitness {
        target: h.clone(),
        factors: [
            GroupElement::h1(spec, &m1, &zk, &zn)?,
            GroupElement::h1(spec, &zm, &zk, &e1)?,
            GroupElement::h1(spec, &m2, &zk, &zn)?,
            GroupElement::h1(spec, &zm, &zk, &w2)?,
        ],
    };
    witness.verify().map_err(Error::Inconsistent)?;
    Ok(witness)
}

/// Splits `g ∈ K` into `k` commuting factors, the `i`-th carrying row `i` of
/// the M-block.
pub fn k_row_decompose(g: &GroupElement) -> Result<Vec<GroupElement>> {
    if !g.belongs_to(SubgroupTag::K) {
        return Err(Error::Membership { tag: "K".into(), detail: format!("{g}") });
    }
    let spec = g.spec();
    let m = g.m_block();
    let zk = vec![BigInt::zero(); spec.k];
    let zn = vec![BigInt::zero(); spec.n];
    (0..spec.k)
        .map(|i| {
            let mut mi = IntMatrix::zeros(spec.k, spec.n);
            for j in 0..spec.n {
                mi.set(i, j, m.get(i, j).clone());
            }
            GroupElement::h1(spec, &mi, &zk, &zn)
        })
        .collect()
}

/// Homomorphisms `Z^n ⋊ SL(n, Z) → H_2`. Source elements are `(n+1)`-square
/// affine matrices `[[s, x], [0, 1]]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "into", rename_all = "snake_case")]
pub enum EmbeddingKind {
    /// `(x, s) ↦` the element with `S = s` and translation `w = x`.
    L,
    /// `(x, s) ↦` the element with `S = (s^{-1})^t` and `M = X·S`, where `X`
    /// has `x^t` in row `row` and zeros elsewhere.
    KRow { row: usize },
}

impl EmbeddingKind {
    pub fn target(&self) -> SubgroupTag {
        match *self {
            EmbeddingKind::L => SubgroupTag::L,
            EmbeddingKind::KRow { row } => SubgroupTag::KRow(row),
        }
    }

    pub fn apply(&self, spec: BlockSpec, source: &IntMatrix) -> Result<GroupElement> {
        let n = spec.n;
        if source.rows() != n + 1 || source.cols() != n + 1 {
            return Err(Error::dim(format!("source element must be {0}x{0}", n + 1)));
        }
        let s = source.block(0, 0, n, n);
        let x = source.col(n)[..n].to_vec();
        let id_k = IntMatrix::identity(spec.k);
        let zk = vec![BigInt::zero(); spec.k];
        match *self {
            EmbeddingKind::L => GroupElement::from_blocks(spec, &id_k, &IntMatrix::zeros(spec.k, n), &s, &zk, &x),
            EmbeddingKind::KRow { row } => {
                if row >= spec.k {
                    return Err(Error::dim(format!("row {row} out of range for k = {}", spec.k)));
                }
                let s_dual = transpose_dual(&s)?;
                let mut xm = IntMatrix::zeros(spec.k, n);
                for (j, v) in x.into_iter().enumerate() {
                    xm.set(row, j, v);
                }
                GroupElement::from_blocks(spec, &id_k, &(&xm * &s_dual), &s_dual, &zk, &vec![BigInt::zero(); n])
            }
        }
    }
}

/// Generators of `Z^n ⋊ SL(n, Z)`: unit translations first, then transvections.
pub fn source_generators(n: usize) -> Vec<(String, IntMatrix)> {
    let mut out = Vec::new();
    for i in 0..n {
        let mut t = IntMatrix::identity(n + 1);
        t.set(i, n, BigInt::one());
        out.push((format!("t{}", i + 1), t));
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                for sign in [1i64, -1] {
                    let mut s = IntMatrix::identity(n + 1);
                    s.set_block(0, 0, &IntMatrix::transvection(n, i, j, sign));
                    let tag = if sign > 0 { "+" } else { "-" };
                    out.push((format!("E{}{}{tag}", i + 1, j + 1), s));
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorImage {
    pub label: String,
    pub source: IntMatrix,
    pub image: IntMatrix,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StoredWitness {
    pub target: IntMatrix,
    pub factors: Vec<IntMatrix>,
    /// Row splittings of the two `K` factors.
    pub k_rows: Vec<Vec<IntMatrix>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Replace the small subgroup by a subgroup of it.
    Smaller,
    /// Replace the ambient group by a group containing it.
    Larger,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepKind {
    Axiom {
        pair: String,
        n: usize,
    },
    Embedding {
        map: EmbeddingKind,
        source_pair: String,
        generator_images: Vec<GeneratorImage>,
    },
    BoundedGeneration {
        factors: Vec<SubgroupTag>,
        product_length: usize,
        witnesses: Vec<StoredWitness>,
    },
    Monotonicity {
        direction: Direction,
        sub: SubgroupTag,
        sup: SubgroupTag,
    },
}

/// `small < ambient` has the relative property (T).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelTPair {
    pub small: SubgroupTag,
    pub ambient: SubgroupTag,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Step {
    pub id: usize,
    pub premises: Vec<usize>,
    #[serde(flatten)]
    pub kind: StepKind,
    /// `None` for the axiom, whose pair lives outside the block family.
    pub conclusion: Option<RelTPair>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelTCertificate {
    pub spec: BlockSpec,
    pub steps: Vec<Step>,
    pub conclusion: RelTPair,
    pub statement: String,
    pub interpretation: String,
}

const AXIOM_PAIR: &str = "Z^n ⊂ Z^n ⋊ SL(n,Z)";

fn pattern(k: usize) -> Vec<SubgroupTag> {
    let ks: Vec<SubgroupTag> = (0..k).map(SubgroupTag::KRow).collect();
    if k == 0 {
        return vec![SubgroupTag::L];
    }
    ks.iter().copied().chain([SubgroupTag::L]).chain(ks.iter().copied()).chain([SubgroupTag::L]).collect()
}

fn store(w: &KLKLWitness) -> Result<StoredWitness> {
    Ok(StoredWitness {
        target: w.target.matrix().clone(),
        factors: w.factors.iter().map(|f| f.matrix().clone()).collect(),
        k_rows: [&w.factors[0], &w.factors[2]]
            .into_iter()
            .map(|f| Ok(k_row_decompose(f)?.iter().map(|g| g.matrix().clone()).collect()))
            .collect::<Result<_>>()?,
    })
}

pub fn build_certificate(p: &GroupPresentation) -> Result<RelTCertificate> {
    let spec = p.spec;
    if spec.n < 2 {
        return Err(Error::Hypothesis("the axiom pair needs n ≥ 2".into()));
    }
    let h2 = SubgroupTag::H2;
    let mut steps = vec![Step {
        id: 0,
        premises: vec![],
        kind: StepKind::Axiom { pair: AXIOM_PAIR.into(), n: spec.n },
        conclusion: None,
    }];
    let maps: Vec<EmbeddingKind> =
        std::iter::once(EmbeddingKind::L).chain((0..spec.k).map(|row| EmbeddingKind::KRow { row })).collect();
    for map in maps {
        let generator_images = source_generators(spec.n)
            .into_iter()
            .map(|(label, source)| {
                let image = map.apply(spec, &source)?.matrix().clone();
                Ok(GeneratorImage { label, source, image })
            })
            .collect::<Result<_>>()?;
        steps.push(Step {
            id: steps.len(),
            premises: vec![0],
            kind: StepKind::Embedding { map, source_pair: AXIOM_PAIR.into(), generator_images },
            conclusion: Some(RelTPair { small: map.target(), ambient: h2 }),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let witnesses = (0..3).map(|_| store(&klkl_decompose(&random_h1(spec, 100, &mut rng))?)).collect::<Result<_>>()?;
    let factors = pattern(spec.k);
    let embed_ids: Vec<usize> = (1..steps.len()).collect();
    let bg = steps.len();
    steps.push(Step {
        id: bg,
        premises: embed_ids,
        kind: StepKind::BoundedGeneration { product_length: factors.len(), factors, witnesses },
        conclusion: Some(RelTPair { small: SubgroupTag::H1, ambient: h2 }),
    });
    steps.push(Step {
        id: bg + 1,
        premises: vec![bg],
        kind: StepKind::Monotonicity { direction: Direction::Smaller, sub: SubgroupTag::H, sup: SubgroupTag::H1 },
        conclusion: Some(RelTPair { small: SubgroupTag::H, ambient: h2 }),
    });
    steps.push(Step {
        id: bg + 2,
        premises: vec![bg + 1],
        kind: StepKind::Monotonicity { direction: Direction::Larger, sub: h2, sup: SubgroupTag::G },
        conclusion: Some(RelTPair { small: SubgroupTag::H, ambient: SubgroupTag::G }),
    });
    Ok(RelTCertificate {
        spec,
        steps,
        conclusion: RelTPair { small: SubgroupTag::H, ambient: SubgroupTag::G },
        statement: "Γ ↷ Ĥ rigid".into(),
        interpretation: "relative property (T) of H < G = H ⋊ Γ read as rigidity of L∞(Ĥ) ⊂ L∞(Ĥ) ⋊ Γ; \
            monotonicity applied to subgroup containments"
            .into(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub sampled: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct StepReport {
    pub id: usize,
    pub kind: &'static str,
    pub trusted: bool,
    pub passed: bool,
    pub checks: Vec<CheckLine>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateReport {
    pub acyclic: bool,
    pub conclusion_reached: bool,
    pub all_passed: bool,
    pub steps: Vec<StepReport>,
}

impl CertificateReport {
    pub fn failures(&self) -> impl Iterator<Item = &StepReport> {
        self.steps.iter().filter(|s| !s.passed)
    }
}

struct Checker<'a> {
    spec: BlockSpec,
    p: &'a GroupPresentation,
    samples: usize,
    rng: ChaCha8Rng,
}

struct Lines {
    checks: Vec<CheckLine>,
    counterexample: Option<String>,
}

impl Lines {
    fn new() -> Self {
        Lines { checks: Vec::new(), counterexample: None }
    }

    fn push(&mut self, name: &str, sampled: bool, result: std::result::Result<String, String>) {
        let (passed, detail) = match result {
            Ok(d) => (true, d),
            Err(d) => {
                if self.counterexample.is_none() {
                    self.counterexample = Some(d.clone());
                }
                (false, d)
            }
        };
        self.checks.push(CheckLine { name: name.into(), passed, sampled, detail });
    }
}

impl Checker<'_> {
    fn element(&self, m: &IntMatrix) -> std::result::Result<GroupElement, String> {
        GroupElement::new(self.spec, m.clone()).map_err(|e| format!("{m} is not an element of G: {e}"))
    }

    fn random_source_word(&mut self, gens: &[(String, IntMatrix)], images: &[GroupElement]) -> (IntMatrix, GroupElement) {
        let len = self.rng.gen_range(1..=8);
        let mut src = IntMatrix::identity(self.spec.n + 1);
        let mut img = GroupElement::identity(self.spec);
        for _ in 0..len {
            let i = self.rng.gen_range(0..gens.len());
            if self.rng.gen_bool(0.5) {
                src = &src * &gens[i].1;
                img = img.mul(&images[i]);
            } else {
                src = &src * &gens[i].1.inverse_unimodular().expect("unimodular");
                img = img.mul(&images[i].inverse());
            }
        }
        (src, img)
    }

    fn embedding(&mut self, map: EmbeddingKind, table: &[GeneratorImage], out: &mut Lines) {
        let spec = self.spec;
        let images: std::result::Result<Vec<GroupElement>, String> = table
            .iter()
            .map(|g| {
                let e = self.element(&g.image)?;
                if e.belongs_to(SubgroupTag::H2) {
                    Ok(e)
                } else {
                    Err(format!("image of {} = {e} is not in H2", g.label))
                }
            })
            .collect();
        let images = match images {
            Ok(v) => v,
            Err(e) => return out.push("images lie in H2", false, Err(e)),
        };
        out.push("images lie in H2", false, Ok(format!("{} generator images", images.len())));

        let mut pair_result = Ok(format!("{} generator pairs", table.len() * table.len()));
        'pairs: for (a, ia) in table.iter().zip(&images) {
            for (b, ib) in table.iter().zip(&images) {
                let want = match map.apply(spec, &(&a.source * &b.source)) {
                    Ok(w) => w,
                    Err(e) => {
                        pair_result = Err(format!("formula undefined on ({}, {}): {e}", a.label, b.label));
                        break 'pairs;
                    }
                };
                let got = ia.mul(ib);
                if got != want {
                    pair_result = Err(format!(
                        "pair ({}, {}): image({})·image({}) = {got} but the image of the product is {want}",
                        a.label, b.label, a.label, b.label
                    ));
                    break 'pairs;
                }
            }
        }
        out.push("homomorphism on generator pairs", false, pair_result);

        let gens: Vec<(String, IntMatrix)> = table.iter().map(|g| (g.label.clone(), g.source.clone())).collect();
        let mut word_result = Ok(format!("{} random words", self.samples));
        let mut seen: HashMap<IntMatrix, IntMatrix> = HashMap::new();
        let mut injective = Ok(String::new());
        for _ in 0..self.samples {
            let (src, img) = self.random_source_word(&gens, &images);
            let (src2, _) = self.random_source_word(&gens, &images);
            let formula = map.apply(spec, &src).map_err(|e| e.to_string());
            let formula2 = map.apply(spec, &src2).map_err(|e| e.to_string());
            let product = map.apply(spec, &(&src * &src2)).map_err(|e| e.to_string());
            match (formula, formula2, product) {
                (Ok(f), Ok(f2), Ok(fp)) => {
                    if word_result.is_ok() && img != f {
                        word_result = Err(format!("word with value {src}: table product {img} differs from {f}"));
                    }
                    if word_result.is_ok() && f.mul(&f2) != fp {
                        word_result = Err(format!("formula is not multiplicative on ({src}, {src2})"));
                    }
                    if let Some(prev) = seen.insert(f.matrix().clone(), src.clone()) {
                        if prev != src && injective.is_ok() {
                            injective = Err(format!("{prev} and {src} have the same image {f}"));
                        }
                    }
                }
                (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => {
                    word_result = Err(e);
                    break;
                }
            }
        }
        out.push("homomorphism on random words", true, word_result);
        out.push("injective on sampled words", true, injective.map(|_| format!("{} distinct values", seen.len())));

        let n = spec.n;
        let target = map.target();
        let claimed: Vec<&GroupElement> = images[..n].iter().collect();
        let expected: HashSet<&GroupElement> = self.p.generators(target).iter().collect();
        let translations = if let Some(bad) = claimed.iter().find(|g| !g.belongs_to(target)) {
            Err(format!("image {bad} of a translation is not in {target}"))
        } else if claimed.iter().copied().collect::<HashSet<_>>() != expected {
            Err(format!("images of the unit translations differ from the generators of {target}"))
        } else {
            Ok(format!("Z^n maps onto the generators of {target}"))
        };
        out.push("distinguished Z^n onto target", false, translations);
    }

    fn bounded_generation(&mut self, factors: &[SubgroupTag], length: usize, stored: &[StoredWitness], out: &mut Lines) {
        let expect = pattern(self.spec.k);
        out.push(
            "factor pattern",
            false,
            if factors == expect.as_slice() && length == expect.len() {
                Ok(format!("{} factors", length))
            } else {
                Err(format!("expected {expect:?} of length {}, found {factors:?} of length {length}", expect.len()))
            },
        );
        for (i, s) in stored.iter().enumerate() {
            out.push(&format!("stored witness {}", i + 1), false, self.stored(s));
        }
        let mut result = Ok(format!("{} random H1 elements with entries in [-10^6, 10^6]", self.samples));
        for _ in 0..self.samples {
            let h = random_h1(self.spec, 1_000_000, &mut self.rng);
            let check = klkl_decompose(&h).map_err(|e| e.to_string()).and_then(|w| {
                for f in [&w.factors[0], &w.factors[2]] {
                    let rows = k_row_decompose(f).map_err(|e| e.to_string())?;
                    let back = rows.iter().fold(GroupElement::identity(self.spec), |a, r| a.mul(r));
                    if back != *f || rows.iter().enumerate().any(|(i, r)| !r.belongs_to(SubgroupTag::KRow(i))) {
                        return Err(format!("row splitting of {f} failed"));
                    }
                }
                Ok(())
            });
            if let Err(e) = check {
                result = Err(format!("{h}: {e}"));
                break;
            }
        }
        out.push("decomposition on random elements", true, result);
    }

    fn stored(&self, s: &StoredWitness) -> std::result::Result<String, String> {
        let target = self.element(&s.target)?;
        if s.factors.len() != 4 {
            return Err(format!("expected 4 factors, found {}", s.factors.len()));
        }
        let f: Vec<GroupElement> = s.factors.iter().map(|m| self.element(m)).collect::<std::result::Result<_, _>>()?;
        let w = KLKLWitness { target, factors: [f[0].clone(), f[1].clone(), f[2].clone(), f[3].clone()] };
        w.verify()?;
        for (rows, kf) in s.k_rows.iter().zip([&f[0], &f[2]]) {
            let rows: Vec<GroupElement> = rows.iter().map(|m| self.element(m)).collect::<std::result::Result<_, _>>()?;
            if let Some((i, r)) = rows.iter().enumerate().find(|(i, r)| !r.belongs_to(SubgroupTag::KRow(*i))) {
                return Err(format!("row factor {r} is not in K_{}", i + 1));
            }
            let back = rows.iter().fold(GroupElement::identity(self.spec), |a, r| a.mul(r));
            if back != *kf {
                return Err(format!("row factors recompose to {back}, expected {kf}"));
            }
        }
        Ok("recomposes exactly".into())
    }

    fn containment(&self, sub: SubgroupTag, sup: SubgroupTag) -> std::result::Result<String, String> {
        match self.p.generators(sub).iter().find(|g| !g.belongs_to(sup)) {
            Some(g) => Err(format!("generator {g} of {sub} is not in {sup}")),
            None => Ok(format!("{sub} ⊆ {sup} on {} generators", self.p.generators(sub).len())),
        }
    }
}

/// Verifies every mechanical step of `cert` against the presentation, with
/// `samples` random words and decompositions drawn from a `seed`ed generator.
pub fn check_certificate(
    cert: &RelTCertificate,
    p: &GroupPresentation,
    samples: usize,
    seed: u64,
) -> Result<CertificateReport> {
    if cert.spec != p.spec {
        return Err(Error::dim(format!(
            "certificate is for (k={}, n={}), presentation is (k={}, n={})",
            cert.spec.k, cert.spec.n, p.spec.k, p.spec.n
        )));
    }
    let mut checker = Checker { spec: p.spec, p, samples, rng: ChaCha8Rng::seed_from_u64(seed) };
    let by_id: HashMap<usize, &Step> = cert.steps.iter().map(|s| (s.id, s)).collect();
    let mut acyclic = by_id.len() == cert.steps.len();
    let mut reports = Vec::with_capacity(cert.steps.len());
    for (pos, step) in cert.steps.iter().enumerate() {
        let mut lines = Lines::new();
        let premises_ok = step.premises.iter().all(|q| cert.steps[..pos].iter().any(|s| s.id == *q));
        acyclic &= premises_ok;
        lines.push(
            "premises precede the step",
            false,
            if premises_ok { Ok(format!("{:?}", step.premises)) } else { Err(format!("premises {:?} not all earlier", step.premises)) },
        );
        let premise_pairs: Vec<Option<RelTPair>> =
            step.premises.iter().filter_map(|q| by_id.get(q)).map(|s| s.conclusion).collect();
        let (kind, trusted) = match &step.kind {
            StepKind::Axiom { n, .. } => {
                lines.push(
                    "n ≥ 2",
                    false,
                    if *n >= 2 && *n == p.spec.n { Ok(format!("n = {n}")) } else { Err(format!("axiom stated for n = {n}")) },
                );
                ("axiom", true)
            }
            StepKind::Embedding { map, generator_images, .. } => {
                let concl = RelTPair { small: map.target(), ambient: SubgroupTag::H2 };
                lines.push(
                    "conclusion matches the map",
                    false,
                    if step.conclusion == Some(concl) { Ok(format!("{} < H2", map.target())) } else { Err(format!("claimed {:?}", step.conclusion)) },
                );
                lines.push(
                    "premise is the axiom",
                    false,
                    if premise_pairs == vec![None] { Ok("axiom".into()) } else { Err("embedding must rest on the axiom alone".into()) },
                );
                checker.embedding(*map, generator_images, &mut lines);
                ("embedding", false)
            }
            StepKind::BoundedGeneration { factors, product_length, witnesses } => {
                let covered: HashSet<RelTPair> = premise_pairs.iter().flatten().copied().collect();
                let missing: Vec<SubgroupTag> = factors
                    .iter()
                    .copied()
                    .filter(|f| !covered.contains(&RelTPair { small: *f, ambient: SubgroupTag::H2 }))
                    .collect();
                lines.push(
                    "every factor has a premise",
                    false,
                    if missing.is_empty() { Ok("covered".into()) } else { Err(format!("no premise for {missing:?} < H2")) },
                );
                lines.push(
                    "conclusion",
                    false,
                    if step.conclusion == Some(RelTPair { small: SubgroupTag::H1, ambient: SubgroupTag::H2 }) {
                        Ok("H1 < H2".into())
                    } else {
                        Err(format!("claimed {:?}", step.conclusion))
                    },
                );
                checker.bounded_generation(factors, *product_length, witnesses, &mut lines);
                ("bounded_generation", false)
            }
            StepKind::Monotonicity { direction, sub, sup } => {
                let shape = match (premise_pairs.as_slice(), step.conclusion) {
                    ([Some(prev)], Some(next)) => {
                        let ok = match direction {
                            Direction::Smaller => next.ambient == prev.ambient && next.small == *sub && prev.small == *sup,
                            Direction::Larger => next.small == prev.small && prev.ambient == *sub && next.ambient == *sup,
                        };
                        if ok {
                            Ok(format!("{} < {} from {} < {}", next.small, next.ambient, prev.small, prev.ambient))
                        } else {
                            Err(format!("{direction:?} step from {prev:?} to {next:?} via {sub} ⊆ {sup} does not fit"))
                        }
                    }
                    _ => Err("monotonicity needs exactly one premise and a conclusion".into()),
                };
                lines.push("step shape", false, shape);
                lines.push("containment on generators", false, checker.containment(*sub, *sup));
                ("monotonicity", false)
            }
        };
        let passed = lines.checks.iter().all(|c| c.passed);
        reports.push(StepReport {
            id: step.id,
            kind,
            trusted,
            passed,
            checks: lines.checks,
            counterexample: lines.counterexample,
        });
    }
    let conclusion_reached = cert.steps.last().and_then(|s| s.conclusion) == Some(cert.conclusion)
        && cert.conclusion == RelTPair { small: SubgroupTag::H, ambient: SubgroupTag::G };
    let all_passed = acyclic && conclusion_reached && reports.iter().all(|r| r.passed);
    Ok(CertificateReport { acyclic, conclusion_reached, all_passed, steps: reports })
}
