//! The block groups `G ⊃ H_2 ⊃ H_1 ⊃ H` and `Γ`, their generators, and the
//! conjugation action of `Γ` on the translation lattice `H ≅ Z^{k+n}`.
//!
//! Elements are stored as full `(k+n+1)`-square matrices; block views are
//! derived on demand. Block layout (rows and columns):
//!
//! ```text
//!   0..k        Λ-block      M-block     u (Z^k translation)
//!   k..k+n      0            s-block     w (Z^n translation)
//!   k+n         0            0           1
//! ```

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_linalg::{IntMatrix, LatticeVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockSpec {
    pub k: usize,
    pub n: usize,
}

impl BlockSpec {
    /// Spec for the theorem-level families; requires `n ≥ 2`.
    pub fn new(k: usize, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Hypothesis(format!("the construction needs n ≥ 2, got n = {n}")));
        }
        Ok(BlockSpec { k, n })
    }

    /// Full matrix size `k + n + 1`.
    pub fn size(&self) -> usize {
        self.k + self.n + 1
    }

    /// Rank of the translation lattice, `k + n`.
    pub fn lattice_dim(&self) -> usize {
        self.k + self.n
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SubgroupTag {
    G,
    Gamma,
    H,
    H1,
    H2,
    K,
    L,
    /// `K_i`, zero-based row index of the M-block.
    KRow(usize),
}

impl fmt::Display for SubgroupTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubgroupTag::G => write!(f, "G"),
            SubgroupTag::Gamma => write!(f, "Γ"),
            SubgroupTag::H => write!(f, "H"),
            SubgroupTag::H1 => write!(f, "H1"),
            SubgroupTag::H2 => write!(f, "H2"),
            SubgroupTag::K => write!(f, "K"),
            SubgroupTag::L => write!(f, "L"),
            SubgroupTag::KRow(i) => write!(f, "K_{}", i + 1),
        }
    }
}

impl Serialize for SubgroupTag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SubgroupTag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(match s.as_str() {
            "G" => SubgroupTag::G,
            "Γ" | "Gamma" => SubgroupTag::Gamma,
            "H" => SubgroupTag::H,
            "H1" => SubgroupTag::H1,
            "H2" => SubgroupTag::H2,
            "K" => SubgroupTag::K,
            "L" => SubgroupTag::L,
            other => {
                let i = other
                    .strip_prefix("K_")
                    .and_then(|i| i.parse::<usize>().ok())
                    .filter(|&i| i >= 1)
                    .ok_or_else(|| serde::de::Error::custom(format!("unknown subgroup tag {other:?}")))?;
                SubgroupTag::KRow(i - 1)
            }
        })
    }
}

/// Element of `G`, stored as its full matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GroupElement {
    spec: BlockSpec,
    mat: IntMatrix,
}

impl GroupElement {
    /// Validates the block pattern of `G`: zero lower-left blocks, bottom row
    /// `(0, …, 0, 1)`, `det(s) = 1` and `det(Λ) = ±1`.
    pub fn new(spec: BlockSpec, mat: IntMatrix) -> Result<Self> {
        let size = spec.size();
        if mat.rows() != size || mat.cols() != size {
            return Err(Error::dim(format!(
                "element of the (k={}, n={}) family must be {size}x{size}, got {}x{}",
                spec.k,
                spec.n,
                mat.rows(),
                mat.cols()
            )));
        }
        let (k, n) = (spec.k, spec.n);
        for i in k..size {
            for j in 0..k {
                if !mat.get(i, j).is_zero() {
                    return Err(Error::Precondition(format!("entry ({i},{j}) below the Λ-block is nonzero")));
                }
            }
        }
        for j in 0..size - 1 {
            if !mat.get(size - 1, j).is_zero() {
                return Err(Error::Precondition("bottom row must be (0, …, 0, 1)".into()));
            }
        }
        if !mat.get(size - 1, size - 1).is_one() {
            return Err(Error::Precondition("bottom-right entry must be 1".into()));
        }
        let s = mat.block(k, k, n, n);
        if !s.det()?.is_one() {
            return Err(Error::Precondition("the SL(n, Z) block must have determinant 1".into()));
        }
        if k > 0 && !mat.block(0, 0, k, k).det()?.abs().is_one() {
            return Err(Error::Precondition("the Λ-block must be unimodular".into()));
        }
        Ok(GroupElement { spec, mat })
    }

    pub fn identity(spec: BlockSpec) -> Self {
        GroupElement { spec, mat: IntMatrix::identity(spec.size()) }
    }

    /// Assembles an element from its blocks.
    pub fn from_blocks(
        spec: BlockSpec,
        lambda: &IntMatrix,
        m: &IntMatrix,
        s: &IntMatrix,
        u: &[BigInt],
        w: &[BigInt],
    ) -> Result<Self> {
        let (k, n) = (spec.k, spec.n);
        let shapes_ok = lambda.rows() == k
            && lambda.cols() == k
            && m.rows() == k
            && m.cols() == n
            && s.rows() == n
            && s.cols() == n
            && u.len() == k
            && w.len() == n;
        if !shapes_ok {
            return Err(Error::dim(format!("block shapes do not match (k={k}, n={n})")));
        }
        let mut mat = IntMatrix::identity(spec.size());
        mat.set_block(0, 0, lambda);
        mat.set_block(0, k, m);
        mat.set_block(k, k, s);
        mat.set_block(0, k + n, &IntMatrix::column(u));
        mat.set_block(k, k + n, &IntMatrix::column(w));
        Self::new(spec, mat)
    }

    /// `(M, u, w)` element of `H_1`.
    pub fn h1(spec: BlockSpec, m: &IntMatrix, u: &[BigInt], w: &[BigInt]) -> Result<Self> {
        Self::from_blocks(spec, &IntMatrix::identity(spec.k), m, &IntMatrix::identity(spec.n), u, w)
    }

    /// Element of `Γ` with the given linear blocks.
    pub fn gamma(spec: BlockSpec, lambda: &IntMatrix, m: &IntMatrix, s: &IntMatrix) -> Result<Self> {
        Self::from_blocks(spec, lambda, m, s, &vec![BigInt::zero(); spec.k], &vec![BigInt::zero(); spec.n])
    }

    /// Pure translation by `(v, w) ∈ H`.
    pub fn translation(spec: BlockSpec, p: &HPoint) -> Result<Self> {
        Self::from_blocks(
            spec,
            &IntMatrix::identity(spec.k),
            &IntMatrix::zeros(spec.k, spec.n),
            &IntMatrix::identity(spec.n),
            p.v.entries(),
            p.w.entries(),
        )
    }

    pub fn spec(&self) -> BlockSpec {
        self.spec
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.mat
    }

    pub fn lambda_block(&self) -> IntMatrix {
        self.mat.block(0, 0, self.spec.k, self.spec.k)
    }

    pub fn m_block(&self) -> IntMatrix {
        self.mat.block(0, self.spec.k, self.spec.k, self.spec.n)
    }

    pub fn s_block(&self) -> IntMatrix {
        self.mat.block(self.spec.k, self.spec.k, self.spec.n, self.spec.n)
    }

    pub fn u(&self) -> Vec<BigInt> {
        let (k, n) = (self.spec.k, self.spec.n);
        (0..k).map(|i| self.mat.get(i, k + n).clone()).collect()
    }

    pub fn w(&self) -> Vec<BigInt> {
        let (k, n) = (self.spec.k, self.spec.n);
        (k..k + n).map(|i| self.mat.get(i, k + n).clone()).collect()
    }

    /// The `(k+n)`-square linear part.
    pub fn linear(&self) -> IntMatrix {
        let d = self.spec.lattice_dim();
        self.mat.block(0, 0, d, d)
    }

    /// The translation column `(u, w)`.
    pub fn translation_part(&self) -> HPoint {
        HPoint { v: LatticeVector::new(self.u()), w: LatticeVector::new(self.w()) }
    }

    pub fn is_identity(&self) -> bool {
        self.mat.is_identity()
    }

    pub fn mul(&self, rhs: &GroupElement) -> GroupElement {
        assert_eq!(self.spec, rhs.spec, "elements of different families");
        GroupElement { spec: self.spec, mat: &self.mat * &rhs.mat }
    }

    pub fn inverse(&self) -> GroupElement {
        let inv = self.mat.inverse_unimodular().expect("group elements are unimodular");
        GroupElement { spec: self.spec, mat: inv }
    }

    pub fn pow(&self, e: i64) -> GroupElement {
        let base = if e < 0 { self.inverse() } else { self.clone() };
        GroupElement { spec: self.spec, mat: base.mat.pow(e.unsigned_abs()).expect("square") }
    }

    /// Block-pattern membership test.
    ///
    /// For `G` and `Γ` the Λ-block is only required to lie in `SL(k, Z)`:
    /// membership in a particular finitely generated `Λ` is not decided.
    pub fn belongs_to(&self, tag: SubgroupTag) -> bool {
        let (k, n) = (self.spec.k, self.spec.n);
        let lambda_id = self.lambda_block().is_identity();
        let s_id = self.s_block().is_identity();
        let m_zero = self.m_block().is_zero();
        let u_zero = self.u().iter().all(Zero::is_zero);
        let w_zero = self.w().iter().all(Zero::is_zero);
        let lambda_sl = k == 0 || self.lambda_block().det().map(|d| d.is_one()).unwrap_or(false);
        match tag {
            SubgroupTag::G => lambda_sl,
            SubgroupTag::Gamma => lambda_sl && u_zero && w_zero,
            SubgroupTag::H => lambda_id && s_id && m_zero,
            SubgroupTag::H1 => lambda_id && s_id,
            SubgroupTag::H2 => lambda_id,
            SubgroupTag::K => lambda_id && s_id && u_zero && w_zero,
            SubgroupTag::L => lambda_id && s_id && m_zero && u_zero,
            SubgroupTag::KRow(i) => {
                i < k
                    && lambda_id
                    && s_id
                    && u_zero
                    && w_zero
                    && (0..k).filter(|&r| r != i).all(|r| (0..n).all(|c| self.mat.get(r, k + c).is_zero()))
            }
        }
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.mat)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.mat)
    }
}

impl Serialize for GroupElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.mat.serialize(s)
    }
}

/// Exact block-pattern membership of `g` in the subgroup named by `tag`.
pub fn membership(spec: &BlockSpec, g: &GroupElement, tag: SubgroupTag) -> Result<bool> {
    if g.spec != *spec {
        return Err(Error::dim(format!(
            "element belongs to the (k={}, n={}) family, expected (k={}, n={})",
            g.spec.k, g.spec.n, spec.k, spec.n
        )));
    }
    if let SubgroupTag::KRow(i) = tag {
        if i >= spec.k {
            return Err(Error::dim(format!("K_{} does not exist for k = {}", i + 1, spec.k)));
        }
    }
    Ok(g.belongs_to(tag))
}

/// Point `(v, w)` of the lattice `H ≅ Z^k ⊕ Z^n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HPoint {
    pub v: LatticeVector,
    pub w: LatticeVector,
}

impl HPoint {
    pub fn new(v: LatticeVector, w: LatticeVector) -> Self {
        HPoint { v, w }
    }

    pub fn from_i64(v: &[i64], w: &[i64]) -> Self {
        HPoint { v: LatticeVector::from_i64(v), w: LatticeVector::from_i64(w) }
    }

    pub fn from_concat(spec: &BlockSpec, x: &LatticeVector) -> Result<Self> {
        if x.dim() != spec.lattice_dim() {
            return Err(Error::dim(format!("expected a vector of length {}, got {}", spec.lattice_dim(), x.dim())));
        }
        let e = x.entries();
        Ok(HPoint {
            v: LatticeVector::new(e[..spec.k].to_vec()),
            w: LatticeVector::new(e[spec.k..].to_vec()),
        })
    }

    pub fn concat(&self) -> LatticeVector {
        let mut e = self.v.entries().to_vec();
        e.extend_from_slice(self.w.entries());
        LatticeVector::new(e)
    }
}

/// Conjugation action of `γ` on `H`: `(v, w) ↦ (λv + m w, s w)`, the
/// translation column of `γ h γ^{-1}`.
pub fn conj_action(gamma: &GroupElement, p: &HPoint) -> HPoint {
    let (lambda, m, s) = (gamma.lambda_block(), gamma.m_block(), gamma.s_block());
    let lv = lambda.mul_vec(p.v.entries());
    let mw = m.mul_vec(p.w.entries());
    let v = lv.into_iter().zip(mw).map(|(a, b)| a + b).collect();
    HPoint { v: LatticeVector::new(v), w: LatticeVector::new(s.mul_vec(p.w.entries())) }
}

/// Splits `g ∈ G` as `h·γ` with `h ∈ H` and `γ ∈ Γ`.
pub fn semidirect_split(g: &GroupElement) -> Result<(GroupElement, GroupElement)> {
    if !g.belongs_to(SubgroupTag::G) {
        return Err(Error::Membership { tag: "G".into(), detail: format!("{g}") });
    }
    let spec = g.spec;
    let h = GroupElement::translation(spec, &g.translation_part())?;
    let gamma = GroupElement::gamma(spec, &g.lambda_block(), &g.m_block(), &g.s_block())?;
    debug_assert_eq!(h.mul(&gamma), *g);
    Ok((h, gamma))
}

/// The quotient homomorphism `Γ → Λ`, reading off the Λ-block.
pub fn quotient_pi(gamma: &GroupElement) -> IntMatrix {
    gamma.lambda_block()
}

/// Inverse transpose `(A^{-1})^t` of a unimodular matrix: the torus map
/// dual to the lattice automorphism `A`.
pub fn transpose_dual(a: &IntMatrix) -> Result<IntMatrix> {
    Ok(a.inverse_unimodular()?.transpose())
}

/// `2n(n-1)` elementary transvections `I ± E_ij`, `i ≠ j`, generating `SL(n, Z)`.
pub fn sl_generators(n: usize) -> Vec<IntMatrix> {
    let mut out = Vec::with_capacity(2 * n * n.saturating_sub(1));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                out.push(IntMatrix::transvection(n, i, j, 1));
                out.push(IntMatrix::transvection(n, i, j, -1));
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    Theorem1,
    Remark4,
    Quotient,
    Diagonal,
}

/// A member of the block family together with explicit generators for every
/// named subgroup.
#[derive(Clone, Debug)]
pub struct GroupPresentation {
    pub spec: BlockSpec,
    pub family: FamilyTag,
    pub lambda_generators: Vec<IntMatrix>,
    gamma: Vec<GroupElement>,
    h: Vec<GroupElement>,
    h1: Vec<GroupElement>,
    h2: Vec<GroupElement>,
    g: Vec<GroupElement>,
    k_gens: Vec<GroupElement>,
    l_gens: Vec<GroupElement>,
    k_rows: Vec<Vec<GroupElement>>,
}

impl GroupPresentation {
    pub fn generators(&self, tag: SubgroupTag) -> &[GroupElement] {
        match tag {
            SubgroupTag::G => &self.g,
            SubgroupTag::Gamma => &self.gamma,
            SubgroupTag::H => &self.h,
            SubgroupTag::H1 => &self.h1,
            SubgroupTag::H2 => &self.h2,
            SubgroupTag::K => &self.k_gens,
            SubgroupTag::L => &self.l_gens,
            SubgroupTag::KRow(i) => self.k_rows.get(i).map(Vec::as_slice).unwrap_or(&[]),
        }
    }

    /// `Λ = A^Z` (or trivial) — the case with exact decision procedures.
    pub fn is_cyclic(&self) -> bool {
        self.spec.k > 0 && self.lambda_generators.len() <= 1
    }

    /// The generator `A` of a cyclic `Λ`; the identity when `Λ` is trivial.
    pub fn cyclic_generator(&self) -> Option<IntMatrix> {
        if !self.is_cyclic() {
            return None;
        }
        Some(self.lambda_generators.first().cloned().unwrap_or_else(|| IntMatrix::identity(self.spec.k)))
    }

    /// Linear parts of the `Γ` generators, acting on `Z^{k+n}`.
    pub fn gamma_linear_generators(&self) -> Vec<IntMatrix> {
        self.gamma.iter().map(GroupElement::linear).collect()
    }

    pub fn all_tags(&self) -> Vec<SubgroupTag> {
        let mut tags = vec![
            SubgroupTag::G,
            SubgroupTag::Gamma,
            SubgroupTag::H,
            SubgroupTag::H1,
            SubgroupTag::H2,
            SubgroupTag::K,
            SubgroupTag::L,
        ];
        tags.extend((0..self.spec.k).map(SubgroupTag::KRow));
        tags
    }

    pub fn to_doc(&self) -> PresentationDoc {
        PresentationDoc {
            k: self.spec.k,
            n: self.spec.n,
            lambda: self.lambda_generators.clone(),
            family: self.family,
            alpha: None,
        }
    }
}

/// Builds the family for `Λ = ⟨lambda_generators⟩ ⊂ SL(k, Z)`, with `SL(n, Z)`
/// generated by elementary transvections.
pub fn build_theorem1_family(k: usize, n: usize, lambda_generators: &[IntMatrix]) -> Result<GroupPresentation> {
    let spec = BlockSpec::new(k, n)?;
    for (i, a) in lambda_generators.iter().enumerate() {
        if a.rows() != k || a.cols() != k {
            return Err(Error::dim(format!("Λ generator {i} must be {k}x{k}, got {}x{}", a.rows(), a.cols())));
        }
        let d = a.det()?;
        if !d.is_one() {
            return Err(Error::Precondition(format!("Λ generator {i} has determinant {d}, expected 1")));
        }
    }
    let zero_k = vec![BigInt::zero(); k];
    let zero_n = vec![BigInt::zero(); n];
    let id_k = IntMatrix::identity(k);
    let id_n = IntMatrix::identity(n);
    let zero_m = IntMatrix::zeros(k, n);

    let lambda_part: Vec<GroupElement> = lambda_generators
        .iter()
        .map(|a| GroupElement::gamma(spec, a, &zero_m, &id_n))
        .collect::<Result<_>>()?;
    let sl_part: Vec<GroupElement> = sl_generators(n)
        .iter()
        .map(|s| GroupElement::gamma(spec, &id_k, &zero_m, s))
        .collect::<Result<_>>()?;
    let mut k_rows = vec![Vec::new(); k];
    for i in 0..k {
        for j in 0..n {
            let mut m = zero_m.clone();
            m.set(i, j, BigInt::one());
            k_rows[i].push(GroupElement::h1(spec, &m, &zero_k, &zero_n)?);
        }
    }
    let k_gens: Vec<GroupElement> = k_rows.iter().flatten().cloned().collect();
    let u_units: Vec<GroupElement> = (0..k)
        .map(|i| GroupElement::translation(spec, &HPoint::new(LatticeVector::unit(k, i), LatticeVector::zero(n))))
        .collect::<Result<_>>()?;
    let l_gens: Vec<GroupElement> = (0..n)
        .map(|i| GroupElement::translation(spec, &HPoint::new(LatticeVector::zero(k), LatticeVector::unit(n, i))))
        .collect::<Result<_>>()?;

    let h: Vec<GroupElement> = u_units.iter().chain(&l_gens).cloned().collect();
    let h1: Vec<GroupElement> = h.iter().chain(&k_gens).cloned().collect();
    let h2: Vec<GroupElement> = h1.iter().chain(&sl_part).cloned().collect();
    let gamma: Vec<GroupElement> = lambda_part.iter().chain(&sl_part).chain(&k_gens).cloned().collect();
    let g: Vec<GroupElement> = gamma.iter().chain(&h).cloned().collect();

    Ok(GroupPresentation {
        spec,
        family: FamilyTag::Theorem1,
        lambda_generators: lambda_generators.to_vec(),
        gamma,
        h,
        h1,
        h2,
        g,
        k_gens,
        l_gens,
        k_rows,
    })
}

/// Symmetric generating set: every generator and its inverse, deduplicated.
pub fn symmetrize(gens: &[IntMatrix]) -> Result<Vec<IntMatrix>> {
    let mut out: Vec<IntMatrix> = Vec::with_capacity(2 * gens.len());
    for g in gens {
        for h in [g.clone(), g.inverse_unimodular()?] {
            if !out.contains(&h) {
                out.push(h);
            }
        }
    }
    Ok(out)
}

/// Random word of the given length in the generators of `tag` and their inverses.
pub fn random_word<R: Rng>(p: &GroupPresentation, tag: SubgroupTag, length: usize, rng: &mut R) -> GroupElement {
    let gens = p.generators(tag);
    let mut g = GroupElement::identity(p.spec);
    if gens.is_empty() {
        return g;
    }
    for _ in 0..length {
        let s = &gens[rng.gen_range(0..gens.len())];
        g = if rng.gen_bool(0.5) { g.mul(s) } else { g.mul(&s.inverse()) };
    }
    g
}

/// Random `(M, u, w) ∈ H_1` with entries drawn uniformly from `[-bound, bound]`.
pub fn random_h1<R: Rng>(spec: BlockSpec, bound: i64, rng: &mut R) -> GroupElement {
    let mut draw = |len: usize| (0..len).map(|_| BigInt::from(rng.gen_range(-bound..=bound))).collect::<Vec<_>>();
    let m = if spec.k == 0 {
        IntMatrix::zeros(0, spec.n)
    } else {
        IntMatrix::new(spec.k, spec.n, draw(spec.k * spec.n)).expect("shape")
    };
    let u = draw(spec.k);
    let w = draw(spec.n);
    GroupElement::h1(spec, &m, &u, &w).expect("H1 blocks are well formed")
}

// ---------------------------------------------------------------------------
// Affine family: linear maps fixing the first coordinate plus α-translations.

/// Rational stand-in `numerator / denominator` for an irrational rotation
/// number, with a declared error bound on `|α - numerator/denominator|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaSurrogate {
    #[serde(with = "bigint_string")]
    pub numerator: BigInt,
    #[serde(with = "bigint_string")]
    pub denominator: BigInt,
    pub error_bound: f64,
}

/// Minimum denominator accepted for an α surrogate.
pub const MIN_ALPHA_DENOMINATOR: i64 = 1_000_000;

impl AlphaSurrogate {
    pub fn new(numerator: BigInt, denominator: BigInt, error_bound: f64) -> Result<Self> {
        if denominator < BigInt::from(MIN_ALPHA_DENOMINATOR) {
            return Err(Error::Precondition(format!(
                "α surrogate denominator must be at least {MIN_ALPHA_DENOMINATOR}, got {denominator}"
            )));
        }
        if error_bound.is_nan() || error_bound < 0.0 {
            return Err(Error::Precondition("α error bound must be nonnegative".into()));
        }
        Ok(AlphaSurrogate { numerator, denominator, error_bound })
    }

    /// Rounds `x` to the nearest multiple of `1/denominator`.
    pub fn from_f64(x: f64, denominator: u64) -> Result<Self> {
        let num = (x * denominator as f64).round();
        Self::new(BigInt::from(num as i64), BigInt::from(denominator), 0.5 / denominator as f64)
    }

    /// Default surrogate: `√2 - 1` to twelve decimal places.
    pub fn default_irrational() -> Self {
        Self::from_f64(std::f64::consts::SQRT_2 - 1.0, 1_000_000_000_000).expect("valid surrogate")
    }

    pub fn value(&self) -> f64 {
        use num_traits::ToPrimitive;
        let q = num_rational::BigRational::new(self.numerator.clone(), self.denominator.clone());
        q.to_f64().unwrap_or(f64::NAN)
    }
}

pub(crate) mod bigint_string {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        Ok(crate::exact_linalg::IntLiteral::deserialize(d)?.0)
    }
}

/// Torus map `θ ↦ Bθ + α t` with `B ∈ SL(n, Z)` and `t ∈ Z^n`; the translation
/// is kept symbolically as its integer coefficient vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct AffineMap {
    pub linear: IntMatrix,
    pub alpha_shift: LatticeVector,
}

impl AffineMap {
    pub fn linear(b: IntMatrix) -> Self {
        let n = b.rows();
        AffineMap { linear: b, alpha_shift: LatticeVector::zero(n) }
    }

    pub fn translation(x: LatticeVector) -> Self {
        AffineMap { linear: IntMatrix::identity(x.dim()), alpha_shift: x }
    }

    pub fn is_translation(&self) -> bool {
        self.linear.is_identity()
    }

    /// `self ∘ other`: `θ ↦ B1(B2 θ + α t2) + α t1`.
    pub fn compose(&self, other: &AffineMap) -> AffineMap {
        let shifted = self.linear.mul_vec(other.alpha_shift.entries());
        let t = shifted.iter().zip(self.alpha_shift.entries()).map(|(a, b)| a + b).collect();
        AffineMap { linear: &self.linear * &other.linear, alpha_shift: LatticeVector::new(t) }
    }

    pub fn inverse(&self) -> Result<AffineMap> {
        let inv = self.linear.inverse_unimodular()?;
        let t = inv.mul_vec(self.alpha_shift.entries()).into_iter().map(|x| -x).collect();
        Ok(AffineMap { linear: inv, alpha_shift: LatticeVector::new(t) })
    }
}

/// `B ∘ T_x ∘ B^{-1} = T_{Bx}`, checked by composing the affine maps.
#[derive(Clone, Debug, Serialize)]
pub struct ConjugationFact {
    pub linear_index: usize,
    pub translation_index: usize,
    pub image_shift: LatticeVector,
    pub verified: bool,
}

/// Affine action on `T^n` generated by linear maps preserving the first
/// coordinate and the translations `θ ↦ θ + α e_i`.
#[derive(Clone, Debug, Serialize)]
pub struct Remark4Family {
    pub n: usize,
    pub alpha: AlphaSurrogate,
    pub linear_generators: Vec<IntMatrix>,
    pub translation_generators: Vec<LatticeVector>,
    pub facts: Vec<ConjugationFact>,
}

impl Remark4Family {
    pub fn generators(&self) -> Vec<AffineMap> {
        self.linear_generators
            .iter()
            .cloned()
            .map(AffineMap::linear)
            .chain(self.translation_generators.iter().cloned().map(AffineMap::translation))
            .collect()
    }

    pub fn to_doc(&self) -> PresentationDoc {
        PresentationDoc { k: 0, n: self.n, lambda: Vec::new(), family: FamilyTag::Remark4, alpha: Some(self.alpha.clone()) }
    }
}

/// Linear generators, all of the lower-triangular shape `[[1, 0], [Z^{n-1}, SL(n-1, Z)]]`:
/// the `n-1` shears `I + E_{i,0}`, the `(n-1)(n-2)` transvections of the
/// `SL(n-1, Z)` block, and one order-four rotation of coordinates 1 and 2.
pub fn build_remark4_family(n: usize, alpha: AlphaSurrogate) -> Result<Remark4Family> {
    if n < 3 {
        return Err(Error::Hypothesis(format!("the affine family needs n ≥ 3, got n = {n}")));
    }
    let mut linear = Vec::new();
    let mut rotation = IntMatrix::identity(n);
    rotation.set(1, 1, BigInt::zero());
    rotation.set(2, 2, BigInt::zero());
    rotation.set(1, 2, BigInt::from(-1));
    rotation.set(2, 1, BigInt::one());
    linear.push(rotation);
    for i in 1..n {
        linear.push(IntMatrix::transvection(n, i, 0, 1));
    }
    for i in 1..n {
        for j in 1..n {
            if i != j {
                linear.push(IntMatrix::transvection(n, i, j, 1));
            }
        }
    }
    let translations: Vec<LatticeVector> = (0..n).map(|i| LatticeVector::unit(n, i)).collect();
    let mut facts = Vec::new();
    for (li, b) in linear.iter().enumerate() {
        let bm = AffineMap::linear(b.clone());
        let binv = bm.inverse()?;
        for (ti, x) in translations.iter().enumerate() {
            let conj = bm.compose(&AffineMap::translation(x.clone())).compose(&binv);
            let image = LatticeVector::new(b.mul_vec(x.entries()));
            let verified = conj == AffineMap::translation(image.clone());
            facts.push(ConjugationFact { linear_index: li, translation_index: ti, image_shift: image, verified });
        }
    }
    Ok(Remark4Family { n, alpha, linear_generators: linear, translation_generators: translations, facts })
}

// ---------------------------------------------------------------------------
// Derived actions: Γ acting through π, diagonally, and the mixed product.

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivedActionKind {
    /// `γ·x = π(γ) x` on `Z^k`.
    Quotient,
    /// `γ·(x, x') = (γx, γx')` on `Z^{k+n} ⊕ Z^{k+n}`.
    Diagonal,
    /// `γ·(x, x') = (π(γ)x, γx')` on `Z^k ⊕ Z^{k+n}`.
    Mixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DerivedAction {
    pub kind: DerivedActionKind,
    pub spec: BlockSpec,
}

impl DerivedAction {
    pub fn dim(&self) -> usize {
        let (k, d) = (self.spec.k, self.spec.lattice_dim());
        match self.kind {
            DerivedActionKind::Quotient => k,
            DerivedActionKind::Diagonal => 2 * d,
            DerivedActionKind::Mixed => k + d,
        }
    }

    pub fn act(&self, gamma: &GroupElement, x: &LatticeVector) -> Result<LatticeVector> {
        if x.dim() != self.dim() {
            return Err(Error::dim(format!("expected a vector of length {}, got {}", self.dim(), x.dim())));
        }
        let (k, d) = (self.spec.k, self.spec.lattice_dim());
        let e = x.entries();
        let single = |slice: &[BigInt]| -> Result<Vec<BigInt>> {
            let p = HPoint::from_concat(&self.spec, &LatticeVector::new(slice.to_vec()))?;
            Ok(conj_action(gamma, &p).concat().into_entries())
        };
        let pi = quotient_pi(gamma);
        let out = match self.kind {
            DerivedActionKind::Quotient => pi.mul_vec(e),
            DerivedActionKind::Diagonal => {
                let mut a = single(&e[..d])?;
                a.extend(single(&e[d..])?);
                a
            }
            DerivedActionKind::Mixed => {
                let mut a = pi.mul_vec(&e[..k]);
                a.extend(single(&e[k..])?);
                a
            }
        };
        Ok(LatticeVector::new(out))
    }

    /// Matrix of `γ` in this action.
    pub fn matrix_of(&self, gamma: &GroupElement) -> IntMatrix {
        let (k, d) = (self.spec.k, self.spec.lattice_dim());
        let lin = gamma.linear();
        let pi = quotient_pi(gamma);
        let mut out = IntMatrix::zeros(self.dim(), self.dim());
        match self.kind {
            DerivedActionKind::Quotient => out.set_block(0, 0, &pi),
            DerivedActionKind::Diagonal => {
                out.set_block(0, 0, &lin);
                out.set_block(d, d, &lin);
            }
            DerivedActionKind::Mixed => {
                out.set_block(0, 0, &pi);
                out.set_block(k, k, &lin);
            }
        }
        out
    }
}

pub fn build_quotient_and_diagonal(p: &GroupPresentation) -> Vec<DerivedAction> {
    [DerivedActionKind::Quotient, DerivedActionKind::Diagonal, DerivedActionKind::Mixed]
        .into_iter()
        .map(|kind| DerivedAction { kind, spec: p.spec })
        .collect()
}

// ---------------------------------------------------------------------------
// Presentation documents.

/// On-disk presentation: `{"k", "n", "lambda": [[[..]]], "family", "alpha"?}`
/// with matrix entries as decimal strings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PresentationDoc {
    #[serde(default)]
    pub k: usize,
    pub n: usize,
    #[serde(default)]
    pub lambda: Vec<IntMatrix>,
    pub family: FamilyTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<AlphaSurrogate>,
}

#[derive(Clone, Debug)]
pub enum LoadedFamily {
    Block(GroupPresentation),
    Affine(Remark4Family),
}

impl PresentationDoc {
    pub fn build(&self) -> Result<LoadedFamily> {
        match self.family {
            FamilyTag::Remark4 => {
                let alpha = self.alpha.clone().unwrap_or_else(AlphaSurrogate::default_irrational);
                Ok(LoadedFamily::Affine(build_remark4_family(self.n, alpha)?))
            }
            tag => {
                let mut p = build_theorem1_family(self.k, self.n, &self.lambda)?;
                p.family = tag;
                Ok(LoadedFamily::Block(p))
            }
        }
    }

    pub fn build_block(&self) -> Result<GroupPresentation> {
        match self.build()? {
            LoadedFamily::Block(p) => Ok(p),
            LoadedFamily::Affine(_) => {
                Err(Error::Precondition("this operation needs a block-family presentation, not the affine family".into()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m(rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_i64(rows).unwrap()
    }

    fn golden() -> IntMatrix {
        m(&[&[2, 1], &[1, 1]])
    }

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn builds_degenerate_and_concrete_families() {
        let p = build_theorem1_family(0, 2, &[]).unwrap();
        assert_eq!(p.generators(SubgroupTag::Gamma).len(), 4);
        assert_eq!(p.generators(SubgroupTag::H).len(), 2);
        assert!(p.generators(SubgroupTag::K).is_empty());

        let p = build_theorem1_family(2, 2, &[golden()]).unwrap();
        assert!(p.is_cyclic());
        assert_eq!(p.generators(SubgroupTag::Gamma).len(), 1 + 4 + 4);
        assert_eq!(p.generators(SubgroupTag::KRow(1)).len(), 2);

        let p = build_theorem1_family(1, 2, &[IntMatrix::identity(1)]).unwrap();
        assert_eq!(p.cyclic_generator().unwrap(), IntMatrix::identity(1));
    }

    #[test]
    fn rejects_bad_hypotheses() {
        assert!(matches!(build_theorem1_family(1, 1, &[]), Err(Error::Hypothesis(_))));
        assert!(matches!(build_theorem1_family(2, 2, &[m(&[&[2, 0], &[0, 1]])]), Err(Error::Precondition(_))));
        assert!(matches!(build_theorem1_family(2, 2, &[m(&[&[0, 1], &[1, 0]])]), Err(Error::Precondition(_))));
        assert!(matches!(build_theorem1_family(2, 2, &[IntMatrix::identity(3)]), Err(Error::Dimension(_))));
    }

    #[test]
    fn generators_carry_their_tags() {
        let p = build_theorem1_family(2, 3, &[golden()]).unwrap();
        for tag in p.all_tags() {
            for g in p.generators(tag) {
                assert!(membership(&p.spec, g, tag).unwrap(), "{g} not in {tag}");
            }
        }
    }

    #[test]
    fn membership_examples() {
        let spec = BlockSpec::new(2, 2).unwrap();
        let p = build_theorem1_family(2, 2, &[golden()]).unwrap();
        let id = GroupElement::identity(spec);
        for tag in p.all_tags() {
            assert!(membership(&spec, &id, tag).unwrap());
        }
        let mut mm = IntMatrix::zeros(2, 2);
        mm.set(0, 1, BigInt::from(5));
        let kel = GroupElement::h1(spec, &mm, &big(&[0, 0]), &big(&[0, 0])).unwrap();
        assert!(kel.belongs_to(SubgroupTag::K));
        assert!(!kel.belongs_to(SubgroupTag::H));
        let lam = GroupElement::gamma(spec, &golden(), &IntMatrix::zeros(2, 2), &IntMatrix::identity(2)).unwrap();
        assert!(!lam.belongs_to(SubgroupTag::H2));
        assert!(lam.belongs_to(SubgroupTag::Gamma));
        let other = GroupElement::identity(BlockSpec::new(1, 2).unwrap());
        assert!(matches!(membership(&spec, &other, SubgroupTag::H), Err(Error::Dimension(_))));
        assert!(membership(&spec, &id, SubgroupTag::KRow(2)).is_err());
    }

    #[test]
    fn conj_action_examples() {
        let spec = BlockSpec::new(1, 2).unwrap();
        let p = HPoint::from_i64(&[3], &[5, -2]);
        assert_eq!(conj_action(&GroupElement::identity(spec), &p), p);

        let g = GroupElement::gamma(spec, &IntMatrix::identity(1), &m(&[&[1, 0]]), &IntMatrix::identity(2)).unwrap();
        assert_eq!(conj_action(&g, &p), HPoint::from_i64(&[8], &[5, -2]));
        // Full 4x4 conjugation oracle.
        let h = GroupElement::translation(spec, &p).unwrap();
        let conj = g.mul(&h).mul(&g.inverse());
        assert!(conj.belongs_to(SubgroupTag::H));
        assert_eq!(conj.translation_part(), conj_action(&g, &p));

        let s = m(&[&[1, 1], &[0, 1]]);
        let g = GroupElement::gamma(spec, &IntMatrix::identity(1), &IntMatrix::zeros(1, 2), &s).unwrap();
        assert_eq!(conj_action(&g, &p), HPoint::from_i64(&[3], &[3, -2]));
    }

    #[test]
    fn transpose_dual_examples() {
        assert_eq!(transpose_dual(&IntMatrix::identity(3)).unwrap(), IntMatrix::identity(3));
        assert_eq!(transpose_dual(&m(&[&[1, 1], &[0, 1]])).unwrap(), m(&[&[1, 0], &[-1, 1]]));
        let a = m(&[&[2, 1, 0], &[1, 1, 0], &[3, 2, 1]]);
        assert_eq!(transpose_dual(&transpose_dual(&a).unwrap()).unwrap(), a);
        assert!(transpose_dual(&m(&[&[2, 0], &[0, 1]])).is_err());
    }

    #[test]
    fn split_examples() {
        let spec = BlockSpec::new(1, 2).unwrap();
        let h = GroupElement::translation(spec, &HPoint::from_i64(&[4], &[1, 2])).unwrap();
        let (hh, gg) = semidirect_split(&h).unwrap();
        assert_eq!((hh, gg.is_identity()), (h.clone(), true));
        let g = GroupElement::gamma(spec, &IntMatrix::identity(1), &m(&[&[1, 0]]), &IntMatrix::identity(2)).unwrap();
        let (hh, gg) = semidirect_split(&g).unwrap();
        assert!(hh.is_identity());
        assert_eq!(gg, g);
    }

    #[test]
    fn quotient_pi_examples() {
        let p = build_theorem1_family(2, 2, &[golden()]).unwrap();
        let sl = &p.generators(SubgroupTag::Gamma)[1];
        assert!(quotient_pi(sl).is_identity());
        assert_eq!(quotient_pi(&p.generators(SubgroupTag::Gamma)[0]), golden());
    }

    #[test]
    fn remark4_family_shape() {
        let fam = build_remark4_family(3, AlphaSurrogate::default_irrational()).unwrap();
        assert_eq!(fam.linear_generators.len(), 1 + 2 + 2);
        assert_eq!(fam.translation_generators.len(), 3);
        assert!(fam.facts.iter().all(|f| f.verified));
        for b in &fam.linear_generators {
            assert!(b.det().unwrap().is_one());
            assert!(b.row(0).iter().enumerate().all(|(j, x)| if j == 0 { x.is_one() } else { x.is_zero() }));
        }
        let t = AffineMap::translation(LatticeVector::unit(3, 0));
        assert_eq!(t.compose(&t), AffineMap::translation(LatticeVector::from_i64(&[2, 0, 0])));
        let b = AffineMap::linear(fam.linear_generators[1].clone());
        let conj = b.compose(&t).compose(&b.inverse().unwrap());
        assert_eq!(conj, AffineMap::translation(LatticeVector::from_i64(&[1, 1, 0])));
        assert!(matches!(build_remark4_family(2, AlphaSurrogate::default_irrational()), Err(Error::Hypothesis(_))));
        assert!(AlphaSurrogate::new(BigInt::from(1), BigInt::from(2), 0.0).is_err());
    }

    #[test]
    fn derived_actions() {
        let p = build_theorem1_family(2, 2, &[golden()]).unwrap();
        let acts = build_quotient_and_diagonal(&p);
        let sl = &p.generators(SubgroupTag::Gamma)[1];
        let lam = &p.generators(SubgroupTag::Gamma)[0];
        let x = LatticeVector::from_i64(&[3, -1]);
        assert_eq!(acts[0].act(sl, &x).unwrap(), x);
        assert_eq!(acts[0].act(lam, &x).unwrap(), LatticeVector::from_i64(&[5, 2]));

        let single = LatticeVector::from_i64(&[1, 2, 3, 4]);
        let mut pair = single.entries().to_vec();
        pair.extend(big(&[0, 0, 0, 0]));
        let moved = acts[1].act(lam, &LatticeVector::new(pair)).unwrap();
        let expect = conj_action(lam, &HPoint::from_concat(&p.spec, &single).unwrap()).concat();
        assert_eq!(moved.entries()[..4], expect.entries()[..]);

        let mut mixed = x.entries().to_vec();
        mixed.extend(single.entries().iter().cloned());
        let moved = acts[2].act(lam, &LatticeVector::new(mixed)).unwrap();
        assert_eq!(moved.entries()[..2], big(&[5, 2])[..]);
        assert_eq!(moved.entries()[2..], expect.entries()[..]);
    }

    #[test]
    fn presentation_doc_round_trip() {
        let p = build_theorem1_family(2, 2, &[golden()]).unwrap();
        let json = serde_json::to_string(&p.to_doc()).unwrap();
        assert_eq!(json, r#"{"k":2,"n":2,"lambda":[[["2","1"],["1","1"]]],"family":"theorem1"}"#);
        let doc: PresentationDoc = serde_json::from_str(&json).unwrap();
        assert_eq!(doc.build_block().unwrap().lambda_generators, vec![golden()]);
        let doc: PresentationDoc = serde_json::from_str(r#"{"n":3,"family":"remark4"}"#).unwrap();
        assert!(matches!(doc.build().unwrap(), LoadedFamily::Affine(_)));
    }

    fn gamma_element(seed: u64) -> (GroupPresentation, GroupElement) {
        let p = build_theorem1_family(2, 2, &[golden()]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_word(&p, SubgroupTag::Gamma, 6, &mut rng);
        (p, g)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn conj_action_matches_full_conjugation(seed in any::<u64>(), v in prop::collection::vec(-50i64..=50, 4)) {
            let (p, g) = gamma_element(seed);
            let pt = HPoint::from_i64(&v[..2], &v[2..]);
            let h = GroupElement::translation(p.spec, &pt).unwrap();
            let conj = g.mul(&h).mul(&g.inverse());
            prop_assert_eq!(conj.translation_part(), conj_action(&g, &pt));
        }
    }

    proptest! {
        #[test]
        fn conj_action_is_an_action(s1 in any::<u64>(), s2 in any::<u64>(), v in prop::collection::vec(-50i64..=50, 4)) {
            let (_, g1) = gamma_element(s1);
            let (_, g2) = gamma_element(s2);
            let pt = HPoint::from_i64(&v[..2], &v[2..]);
            prop_assert_eq!(conj_action(&g1.mul(&g2), &pt), conj_action(&g1, &conj_action(&g2, &pt)));
        }

        #[test]
        fn split_recomposes(seed in any::<u64>()) {
            let p = build_theorem1_family(2, 2, &[golden()]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_word(&p, SubgroupTag::G, 8, &mut rng);
            let (h, gamma) = semidirect_split(&g).unwrap();
            prop_assert!(h.belongs_to(SubgroupTag::H));
            prop_assert!(gamma.belongs_to(SubgroupTag::Gamma));
            prop_assert_eq!(h.mul(&gamma), g);
        }

        #[test]
        fn pi_is_multiplicative(s1 in any::<u64>(), s2 in any::<u64>()) {
            let (_, g1) = gamma_element(s1);
            let (_, g2) = gamma_element(s2);
            prop_assert_eq!(quotient_pi(&g1.mul(&g2)), &quotient_pi(&g1) * &quotient_pi(&g2));
        }

        #[test]
        fn sublattice_action_factors_through_lambda(seed in any::<u64>(), v in prop::collection::vec(-50i64..=50, 2)) {
            let (_, g) = gamma_element(seed);
            let pt = HPoint::from_i64(&v, &[0, 0]);
            let image = conj_action(&g, &pt);
            prop_assert!(image.w.is_zero());
            prop_assert_eq!(image.v, LatticeVector::new(quotient_pi(&g).mul_vec(pt.v.entries())));
        }
    }
}
