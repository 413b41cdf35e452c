use std::collections::HashMap;

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact_linalg::IntMatrix;

/// Lattice points removed from the ball before compressing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Exclusion {
    None,
    Origin,
    /// The sublattice `Z^k × {0}` of the first `k` coordinates.
    Sublattice { k: usize },
}

impl Exclusion {
    fn excludes(&self, x: &[i64]) -> bool {
        match *self {
            Exclusion::None => false,
            Exclusion::Origin => x.iter().all(|&c| c == 0),
            Exclusion::Sublattice { k } => x[k.min(x.len())..].iter().all(|&c| c == 0),
        }
    }
}

/// The averaging operator `M = (1/2|S|) Σ (π(g) + π(g^{-1}))` restricted to
/// the max-norm ball of a given radius minus the excluded points, stored as a
/// sparse symmetric matrix.
#[derive(Clone, Debug)]
pub struct CompressedOperator {
    dim: usize,
    points: Vec<Vec<i64>>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

fn to_i64_matrix(g: &IntMatrix) -> Result<Vec<i64>> {
    g.entries()
        .iter()
        .map(|x| x.to_i64().ok_or_else(|| Error::Unsupported(format!("generator entry {x} does not fit in 64 bits"))))
        .collect()
}

fn apply_i64(g: &[i64], x: &[i64]) -> Option<Vec<i64>> {
    let n = x.len();
    (0..n)
        .map(|i| {
            g[i * n..(i + 1) * n]
                .iter()
                .zip(x)
                .try_fold(0i64, |acc, (&a, &b)| acc.checked_add(a.checked_mul(b)?))
        })
        .collect()
}

impl CompressedOperator {
    pub fn build(generators: &[IntMatrix], exclusion: Exclusion, radius: u32) -> Result<Self> {
        if radius == 0 {
            return Err(Error::Precondition("radius must be at least 1".into()));
        }
        let dim = match generators.first() {
            Some(g) => g.rows(),
            None => return Err(Error::Precondition("at least one generator is required".into())),
        };
        if generators.iter().any(|g| !g.is_square() || g.rows() != dim) {
            return Err(Error::dim("generators must be square matrices of one common size"));
        }
        let r = radius as i64;
        let mut points = Vec::new();
        let mut cur = vec![-r; dim];
        'outer: loop {
            if !exclusion.excludes(&cur) {
                points.push(cur.clone());
            }
            for i in (0..dim).rev() {
                if cur[i] < r {
                    cur[i] += 1;
                    continue 'outer;
                }
                cur[i] = -r;
            }
            break;
        }
        if points.is_empty() {
            return Err(Error::Domain("no lattice points remain after exclusion".into()));
        }
        let index: HashMap<&[i64], usize> = points.iter().enumerate().map(|(i, p)| (p.as_slice(), i)).collect();
        let mats: Vec<(Vec<i64>, Vec<i64>)> = generators
            .iter()
            .map(|g| Ok((to_i64_matrix(g)?, to_i64_matrix(&g.inverse_unimodular()?)?)))
            .collect::<Result<_>>()?;
        let w = 1.0 / (2.0 * generators.len() as f64);
        let mut adjacency = Vec::with_capacity(points.len());
        for x in &points {
            let mut row: HashMap<usize, f64> = HashMap::new();
            for (g, ginv) in &mats {
                for h in [g, ginv] {
                    if let Some(j) = apply_i64(h, x).and_then(|y| index.get(y.as_slice()).copied()) {
                        *row.entry(j).or_default() += w;
                    }
                }
            }
            let mut row: Vec<(usize, f64)> = row.into_iter().collect();
            row.sort_unstable_by_key(|&(j, _)| j);
            adjacency.push(row);
        }
        Ok(CompressedOperator { dim, points, adjacency })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<i64>] {
        &self.points
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.adjacency) {
            *o = row.iter().map(|&(j, w)| w * x[j]).sum();
        }
    }

    /// Row-major dense copy, for cross-checking with dense eigensolvers.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n * n];
        for (i, row) in self.adjacency.iter().enumerate() {
            for &(j, w) in row {
                out[i * n + j] = w;
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub lattice_dim: usize,
    pub excluded: Exclusion,
    pub radius: u32,
    pub generators: usize,
    pub points: usize,
    pub norm_estimate: f64,
    pub iterations: usize,
    pub tolerance: f64,
    pub converged: bool,
    pub residual: f64,
    /// Lattice point carrying the largest component of the final iterate.
    pub peak_point: Vec<i64>,
    pub status: &'static str,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Largest eigenvalue of the compressed averaging operator by power iteration
/// on `M²` from a seeded positive start vector.
///
/// Iteration stops once successive estimates differ by less than `tolerance`.
/// The result bounds the norm of `M` on the whole lattice from below.
pub fn compression_norm(
    generators: &[IntMatrix],
    exclusion: Exclusion,
    radius: u32,
    tolerance: f64,
    max_iterations: usize,
    seed: u64,
) -> Result<SpectralReport> {
    let op = CompressedOperator::build(generators, exclusion, radius)?;
    let n = op.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let s = norm(&x);
    x.iter_mut().for_each(|v| *v /= s);
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut estimate = 0.0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iterations {
        iterations += 1;
        op.apply(&x, &mut y);
        let next = norm(&y);
        op.apply(&y, &mut z);
        let zn = norm(&z);
        if zn == 0.0 {
            estimate = 0.0;
            converged = true;
            break;
        }
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi = zi / zn;
        }
        let delta = (next - estimate).abs();
        estimate = next;
        if delta < tolerance {
            converged = true;
            break;
        }
    }
    op.apply(&x, &mut y);
    op.apply(&y, &mut z);
    let theta = norm(&y).powi(2);
    let residual = norm(&z.iter().zip(&x).map(|(a, b)| a - theta * b).collect::<Vec<_>>());
    let peak = x
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| op.points()[i].clone())
        .unwrap_or_default();
    Ok(SpectralReport {
        lattice_dim: op.dim(),
        excluded: exclusion,
        radius,
        generators: generators.len(),
        points: n,
        norm_estimate: estimate,
        iterations,
        tolerance,
        converged,
        residual,
        peak_point: peak,
        status: "evidence",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_model::sl_generators;
    use nalgebra::{DMatrix, SymmetricEigen};

    fn sl2_half() -> Vec<IntMatrix> {
        vec![IntMatrix::transvection(2, 0, 1, 1), IntMatrix::transvection(2, 1, 0, 1)]
    }

    fn dense_top(op: &CompressedOperator) -> f64 {
        let n = op.len();
        let m = DMatrix::from_row_slice(n, n, &op.to_dense());
        SymmetricEigen::new(m).eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    #[test]
    fn origin_included_is_invariant() {
        let r = compression_norm(&sl2_half(), Exclusion::None, 6, 1e-13, 100_000, 0).unwrap();
        assert!((r.norm_estimate - 1.0).abs() < 1e-9, "{}", r.norm_estimate);
        assert_eq!(r.peak_point, vec![0, 0]);
    }

    #[test]
    fn identity_generator_gives_one() {
        let r = compression_norm(&[IntMatrix::identity(2)], Exclusion::Origin, 3, 1e-12, 100, 0).unwrap();
        assert!((r.norm_estimate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn operator_is_symmetric() {
        let op = CompressedOperator::build(&sl_generators(2), Exclusion::Origin, 4).unwrap();
        let n = op.len();
        let d = op.to_dense();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(d[i * n + j], d[j * n + i]);
            }
        }
    }

    #[test]
    fn matches_dense_oracle_on_sl2() {
        let op = CompressedOperator::build(&sl2_half(), Exclusion::Origin, 10).unwrap();
        assert_eq!(op.len(), 440);
        let oracle = dense_top(&op);
        let r = compression_norm(&sl2_half(), Exclusion::Origin, 10, 1e-13, 200_000, 0).unwrap();
        assert!(r.converged);
        assert!((r.norm_estimate - oracle).abs() < 1e-6, "{} vs {oracle}", r.norm_estimate);
        assert!(r.norm_estimate < 1.0);
    }

    #[test]
    fn sublattice_exclusion_and_errors() {
        let op = CompressedOperator::build(&[IntMatrix::identity(3)], Exclusion::Sublattice { k: 1 }, 1).unwrap();
        assert_eq!(op.len(), 27 - 3);
        assert!(matches!(
            CompressedOperator::build(&[IntMatrix::identity(1)], Exclusion::Sublattice { k: 1 }, 2),
            Err(Error::Domain(_))
        ));
        assert!(CompressedOperator::build(&[], Exclusion::None, 2).is_err());
    }
}
