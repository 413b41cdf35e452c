//! Ergodicity of the torus actions through the orbit criterion on the dual
//! lattice: the action is ergodic exactly when every nonzero lattice point
//! has an infinite orbit.

use std::collections::{HashSet, VecDeque};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact_linalg::{has_root_of_unity_eigenvalue, IntMatrix, LatticeVector, RootOfUnityVerdict};
use crate::group_model::{symmetrize, GroupPresentation};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum OrbitStatus {
    /// Closure reached; the orbit is listed in ascending order.
    Finite { orbit: Vec<LatticeVector> },
    ExceededBound { bound: usize, visited: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitReport {
    pub seed: LatticeVector,
    #[serde(flatten)]
    pub status: OrbitStatus,
    pub generators: Vec<IntMatrix>,
}

impl OrbitReport {
    pub fn is_finite(&self) -> bool {
        matches!(self.status, OrbitStatus::Finite { .. })
    }

    pub fn orbit(&self) -> Option<&[LatticeVector]> {
        match &self.status {
            OrbitStatus::Finite { orbit } => Some(orbit),
            OrbitStatus::ExceededBound { .. } => None,
        }
    }

    /// Exact check that a finite orbit contains the seed and is closed under
    /// every generator and its inverse. Always false for unfinished orbits.
    pub fn verify_closed(&self) -> bool {
        let Some(orbit) = self.orbit() else { return false };
        let set: HashSet<&LatticeVector> = orbit.iter().collect();
        if !set.contains(&self.seed) {
            return false;
        }
        let Ok(gens) = symmetrize(&self.generators) else { return false };
        orbit.iter().all(|x| gens.iter().all(|g| set.contains(&LatticeVector::new(g.mul_vec(x.entries())))))
    }
}

/// Primes used for the residue screen, all below `2^31` so products fit in `u64`.
const SCREEN_PRIMES: [u64; 3] = [2_147_483_647, 2_147_483_629, 2_147_483_587];

struct ModMatrix {
    n: usize,
    data: Vec<u64>,
}

fn residue(x: &BigInt, p: u64) -> u64 {
    x.mod_floor(&BigInt::from(p)).to_u64().expect("residue fits")
}

impl ModMatrix {
    fn new(m: &IntMatrix, p: u64) -> Self {
        ModMatrix { n: m.rows(), data: m.entries().iter().map(|x| residue(x, p)).collect() }
    }

    fn apply_into(&self, v: &[u64], p: u64, out: &mut [u64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            let acc: u128 = row.iter().zip(v).map(|(&a, &b)| a as u128 * b as u128).sum();
            *o = (acc % p as u128) as u64;
        }
    }

    fn apply(&self, v: &[u64], p: u64) -> Vec<u64> {
        let mut out = vec![0; self.n];
        self.apply_into(v, p, &mut out);
        out
    }
}

enum Screen {
    /// More than `bound` distinct residues, hence more than `bound` lattice points.
    Exceeded,
    /// The residue orbit closed; the integer orbit may still be larger.
    Closed,
}

fn residue_bfs(seed: &LatticeVector, gens: &[IntMatrix], bound: usize, p: u64) -> Screen {
    let mods: Vec<ModMatrix> = gens.iter().map(|g| ModMatrix::new(g, p)).collect();
    let start: Vec<u64> = seed.entries().iter().map(|x| residue(x, p)).collect();
    if mods.len() == 1 {
        // Orbit of a single matrix: x, Ax, …, A^bound x are pairwise distinct
        // unless A^j x = x for some 1 ≤ j ≤ bound.
        let mut cur = start.clone();
        let mut next = vec![0; cur.len()];
        for _ in 0..bound {
            mods[0].apply_into(&cur, p, &mut next);
            std::mem::swap(&mut cur, &mut next);
            if cur == start {
                return Screen::Closed;
            }
        }
        return Screen::Exceeded;
    }
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(start.clone());
    queue.push_back(start);
    while let Some(x) = queue.pop_front() {
        for g in &mods {
            let y = g.apply(&x, p);
            if seen.insert(y.clone()) {
                if seen.len() > bound {
                    return Screen::Exceeded;
                }
                queue.push_back(y);
            }
        }
    }
    Screen::Closed
}

fn exact_bfs(seed: &LatticeVector, gens: &[IntMatrix], bound: usize) -> Option<Vec<LatticeVector>> {
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    let mut orbit = vec![seed.clone()];
    let mut queue = VecDeque::new();
    seen.insert(seed.canonical_bytes());
    queue.push_back(seed.clone());
    while let Some(x) = queue.pop_front() {
        for g in gens {
            let y = LatticeVector::new(g.mul_vec(x.entries()));
            if seen.insert(y.canonical_bytes()) {
                if seen.len() > bound {
                    return None;
                }
                orbit.push(y.clone());
                queue.push_back(y);
            }
        }
    }
    orbit.sort();
    Some(orbit)
}

/// Breadth-first orbit of `seed` under `generators` and their inverses, stopping
/// once more than `bound` distinct points have been seen.
///
/// Points are first tracked modulo a large prime; more than `bound` residues
/// already proves the integer orbit exceeds the bound. When the residue orbit
/// closes, the integer orbit is recomputed exactly.
pub fn orbit_bfs(seed: &LatticeVector, generators: &[IntMatrix], bound: usize) -> Result<OrbitReport> {
    if seed.is_zero() {
        return Err(Error::Domain("the zero vector is fixed by every generator; the orbit criterion excludes it".into()));
    }
    if bound == 0 {
        return Err(Error::Precondition("orbit bound must be at least 1".into()));
    }
    for g in generators {
        if !g.is_square() || g.rows() != seed.dim() {
            return Err(Error::dim(format!(
                "generator of shape {}x{} cannot act on a vector of length {}",
                g.rows(),
                g.cols(),
                seed.dim()
            )));
        }
    }
    let gens: Vec<IntMatrix> = symmetrize(generators)?.into_iter().filter(|g| !g.is_identity()).collect();
    let report = |status| OrbitReport { seed: seed.clone(), status, generators: generators.to_vec() };
    let exceeded = || OrbitStatus::ExceededBound { bound, visited: bound + 1 };
    if gens.is_empty() {
        return Ok(report(OrbitStatus::Finite { orbit: vec![seed.clone()] }));
    }
    // A single symmetric pair {A, A^-1} only needs the forward walk.
    let walk: Vec<IntMatrix> =
        if gens.len() == 2 && (&gens[0] * &gens[1]).is_identity() { vec![gens[0].clone()] } else { gens.clone() };
    for p in SCREEN_PRIMES {
        if let Screen::Exceeded = residue_bfs(seed, &walk, bound, p) {
            return Ok(report(exceeded()));
        }
    }
    Ok(report(match exact_bfs(seed, &gens, bound) {
        Some(orbit) => OrbitStatus::Finite { orbit },
        None => exceeded(),
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ergodic,
    NotErgodic,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErgodicityCertificate {
    /// `k = 0`: there is no nonzero point of `Z^k` to test.
    Vacuous,
    /// No eigenvalue of `A` is a root of unity, so `A^m - I` is nonsingular for all `m ≥ 1`.
    NoRootOfUnity { char_poly: String, statement: String },
    /// A nonzero point with a finite, exactly closed orbit.
    FiniteOrbit { order: Option<u64> },
    /// Every primitive seed in the ball exceeded the exploration bound.
    ExplorationBound { radius: u32, bound: usize, seeds: usize },
}

/// Runtime re-check that points `(v, w)` with `w ≠ 0` have large `Γ`-orbits.
#[derive(Clone, Debug, Serialize)]
pub struct ReductionCheck {
    pub samples: usize,
    pub bound: usize,
    pub all_exceeded: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<LatticeVector>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErgodicityVerdict {
    pub outcome: Outcome,
    pub certificate: ErgodicityCertificate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<LatticeVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orbit: Option<OrbitReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduction: Option<ReductionCheck>,
}

/// Exact ergodicity decision for `Λ = A^Z` acting on `Z^k`.
pub fn cyclic_lambda_ergodicity(a: &IntMatrix) -> Result<ErgodicityVerdict> {
    if !a.is_square() {
        return Err(Error::dim(format!("expected a square matrix, got {}x{}", a.rows(), a.cols())));
    }
    if a.rows() == 0 {
        return Ok(ErgodicityVerdict {
            outcome: Outcome::Ergodic,
            certificate: ErgodicityCertificate::Vacuous,
            witness: None,
            orbit: None,
            reduction: None,
        });
    }
    let det = a.det()?;
    if det.magnitude() != &num_bigint::BigUint::from(1u32) {
        return Err(Error::Precondition(format!("A must be unimodular, det = {det}")));
    }
    match has_root_of_unity_eigenvalue(a)? {
        RootOfUnityVerdict::No => Ok(ErgodicityVerdict {
            outcome: Outcome::Ergodic,
            certificate: ErgodicityCertificate::NoRootOfUnity {
                char_poly: a.char_poly()?.to_string(),
                statement: "A^m - I nonsingular for all m >= 1".into(),
            },
            witness: None,
            orbit: None,
            reduction: None,
        }),
        RootOfUnityVerdict::Yes { order } => {
            let power = &a.pow(order)? - &IntMatrix::identity(a.rows());
            let witness = power.kernel_basis().into_iter().next().ok_or_else(|| {
                Error::Inconsistent(format!("A^{order} - I has trivial kernel despite a root-of-unity eigenvalue"))
            })?;
            let orbit = orbit_bfs(&witness, std::slice::from_ref(a), order as usize + 1)?;
            if !orbit.verify_closed() {
                return Err(Error::Inconsistent(format!("orbit of {witness} under A did not close within {order} steps")));
            }
            Ok(ErgodicityVerdict {
                outcome: Outcome::NotErgodic,
                certificate: ErgodicityCertificate::FiniteOrbit { order: Some(order) },
                witness: Some(witness),
                orbit: Some(orbit),
                reduction: None,
            })
        }
    }
}

/// Largest bound used when re-checking the reduction on sampled points.
const REDUCTION_BOUND_CAP: usize = 1000;
const REDUCTION_SAMPLES: usize = 6;

fn reduction_check(p: &GroupPresentation, bound: usize) -> Result<ReductionCheck> {
    let (k, n) = (p.spec.k, p.spec.n);
    let gens = p.gamma_linear_generators();
    let sample_bound = bound.min(REDUCTION_BOUND_CAP);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut points = Vec::new();
    for i in 0..n.min(REDUCTION_SAMPLES) {
        let mut e = vec![BigInt::zero(); k + n];
        e[k + i] = BigInt::from(1);
        points.push(LatticeVector::new(e));
    }
    while points.len() < REDUCTION_SAMPLES {
        let mut e: Vec<BigInt> = (0..k + n).map(|_| BigInt::from(rng.gen_range(-3i64..=3))).collect();
        if e[k..].iter().all(Zero::is_zero) {
            e[k] = BigInt::from(1);
        }
        points.push(LatticeVector::new(e));
    }
    let mut counterexample = None;
    for x in &points {
        if orbit_bfs(x, &gens, sample_bound)?.is_finite() {
            counterexample = Some(x.clone());
            break;
        }
    }
    Ok(ReductionCheck { samples: points.len(), bound: sample_bound, all_exceeded: counterexample.is_none(), counterexample })
}

/// Primitive vectors of max-norm at most `radius`, in lexicographic order.
pub fn primitive_seeds(dim: usize, radius: u32) -> Vec<LatticeVector> {
    let r = radius as i64;
    let mut out = Vec::new();
    let mut cur = vec![-r; dim];
    if dim == 0 {
        return out;
    }
    loop {
        let v = LatticeVector::from_i64(&cur);
        if v.is_primitive() {
            out.push(v);
        }
        let mut i = dim;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < r {
                cur[i] += 1;
                break;
            }
            cur[i] = -r;
        }
    }
}

/// Ergodicity of `Γ ↷ Ĥ` via the `Λ ↷ Z^k` criterion: exact for cyclic `Λ`,
/// a bounded search over primitive seeds otherwise.
pub fn ergodicity_check(p: &GroupPresentation, bound: usize, radius: u32) -> Result<ErgodicityVerdict> {
    if p.spec.k == 0 {
        return Ok(ErgodicityVerdict {
            outcome: Outcome::Ergodic,
            certificate: ErgodicityCertificate::Vacuous,
            witness: None,
            orbit: None,
            reduction: None,
        });
    }
    let reduction = reduction_check(p, bound)?;
    let mut verdict = if let Some(a) = p.cyclic_generator() {
        cyclic_lambda_ergodicity(&a)?
    } else {
        let mut found = None;
        let seeds = primitive_seeds(p.spec.k, radius);
        for seed in &seeds {
            let report = orbit_bfs(seed, &p.lambda_generators, bound)?;
            if report.is_finite() {
                found = Some(report);
                break;
            }
        }
        match found {
            Some(orbit) => ErgodicityVerdict {
                outcome: Outcome::NotErgodic,
                certificate: ErgodicityCertificate::FiniteOrbit { order: None },
                witness: Some(orbit.seed.clone()),
                orbit: Some(orbit),
                reduction: None,
            },
            None => ErgodicityVerdict {
                outcome: Outcome::Inconclusive,
                certificate: ErgodicityCertificate::ExplorationBound { radius, bound, seeds: seeds.len() },
                witness: None,
                orbit: None,
                reduction: None,
            },
        }
    };
    if !reduction.all_exceeded && verdict.outcome == Outcome::Ergodic {
        verdict.outcome = Outcome::Inconclusive;
    }
    verdict.reduction = Some(reduction);
    Ok(verdict)
}

#[derive(Clone, Debug, Serialize)]
pub struct FreenessReport {
    pub word_length: usize,
    pub lattice_dim: usize,
    /// Distinct nonidentity group elements examined.
    pub elements_checked: usize,
    pub per_length: Vec<usize>,
    pub max_fixed_dim: usize,
    pub all_free: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<IntMatrix>,
}

/// Sweeps every element of word length at most `word_length` in the `Γ`
/// generators and measures the dimension of its fixed subtorus,
/// `dim ker(g - I)`, which must stay below `k + n`.
pub fn freeness_check(p: &GroupPresentation, word_length: usize) -> Result<FreenessReport> {
    if word_length == 0 {
        return Err(Error::Precondition("word length must be at least 1".into()));
    }
    let d = p.spec.lattice_dim();
    let gens: Vec<IntMatrix> =
        symmetrize(&p.gamma_linear_generators())?.into_iter().filter(|g| !g.is_identity()).collect();
    let id = IntMatrix::identity(d);
    let key = |m: &IntMatrix| -> Vec<u8> { LatticeVector::new(m.entries().to_vec()).canonical_bytes() };

    let mut prev_keys: HashSet<Vec<u8>> = HashSet::new();
    let mut cur_keys: HashSet<Vec<u8>> = HashSet::from([key(&id)]);
    let mut frontier = vec![id.clone()];
    let mut per_length = Vec::with_capacity(word_length);
    let mut max_fixed_dim = 0;
    let mut violations = Vec::new();
    let mut checked = 0;
    for len in 1..=word_length {
        let keep = len < word_length;
        let mut next_keys: HashSet<Vec<u8>> = HashSet::new();
        let mut next = Vec::new();
        for w in &frontier {
            for g in &gens {
                let m = w * g;
                let k = key(&m);
                if prev_keys.contains(&k) || cur_keys.contains(&k) || !next_keys.insert(k) {
                    continue;
                }
                let fixed = (&m - &id).kernel_rank_over_rationals();
                max_fixed_dim = max_fixed_dim.max(fixed);
                if fixed >= d && violations.len() < 8 {
                    violations.push(m.clone());
                }
                if keep {
                    next.push(m);
                }
            }
        }
        checked += next_keys.len();
        per_length.push(next_keys.len());
        prev_keys = std::mem::replace(&mut cur_keys, next_keys);
        frontier = next;
    }
    Ok(FreenessReport {
        word_length,
        lattice_dim: d,
        elements_checked: checked,
        per_length,
        max_fixed_dim,
        all_free: max_fixed_dim < d,
        violations,
    })
}

#[cfg(test)]
/// Orbit sizes of `x` under `A` computed by direct iteration.
pub(crate) fn iterate_orbit(a: &IntMatrix, x: &LatticeVector, cap: usize) -> Option<usize> {
    let mut seen = std::collections::HashMap::new();
    let mut cur = x.clone();
    for i in 0..cap {
        if seen.insert(cur.clone(), i).is_some() {
            return Some(seen.len());
        }
        cur = LatticeVector::new(a.mul_vec(cur.entries()));
    }
    None
}
