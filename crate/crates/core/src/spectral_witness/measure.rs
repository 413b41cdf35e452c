use std::io::{Read, Write};
use std::path::Path;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_linalg::IntMatrix;

const MAGIC: &[u8; 4] = b"TNU1";
const MASS_TOLERANCE: f64 = 1e-10;

/// Finitely supported probability measure on `X × X`, where `X` is the grid
/// `(Z/R)^dim` of a torus. Cells are indexed in mixed radix, first coordinate
/// least significant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub dim: u32,
    pub resolution: u64,
    pub entries: Vec<(u64, u64, f64)>,
}

impl DiscreteMeasure {
    pub fn new(dim: u32, resolution: u64, entries: Vec<(u64, u64, f64)>) -> Result<Self> {
        let m = DiscreteMeasure { dim, resolution, entries };
        m.validate()?;
        Ok(m)
    }

    pub fn cells(&self) -> u64 {
        self.resolution.pow(self.dim)
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.resolution < 2 {
            return Err(Error::Precondition("grid needs dim ≥ 1 and resolution ≥ 2".into()));
        }
        let cells = self.resolution.checked_pow(self.dim).ok_or_else(|| Error::Unsupported("grid too large".into()))?;
        for &(x, y, w) in &self.entries {
            if x >= cells || y >= cells {
                return Err(Error::Precondition(format!("cell ({x}, {y}) lies outside the grid of {cells} cells")));
            }
            if w.is_nan() || w < 0.0 {
                return Err(Error::Precondition(format!("negative or NaN weight {w} at ({x}, {y})")));
            }
        }
        let total: f64 = self.entries.iter().map(|e| e.2).sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Precondition(format!("total mass {total} differs from 1")));
        }
        Ok(())
    }

    pub fn marginals(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.cells() as usize;
        let (mut mx, mut my) = (vec![0.0; n], vec![0.0; n]);
        for &(x, y, w) in &self.entries {
            mx[x as usize] += w;
            my[y as usize] += w;
        }
        (mx, my)
    }

    pub fn diagonal_mass(&self) -> f64 {
        self.entries.iter().filter(|e| e.0 == e.1).map(|e| e.2).sum()
    }

    /// `(μ × μ)`: the uniform product measure.
    pub fn product(dim: u32, resolution: u64) -> Result<Self> {
        let n = resolution.pow(dim);
        let w = 1.0 / (n * n) as f64;
        Self::new(dim, resolution, (0..n).flat_map(|x| (0..n).map(move |y| (x, y, w))).collect())
    }

    /// The diagonal copy of `μ`.
    pub fn diagonal(dim: u32, resolution: u64) -> Result<Self> {
        let n = resolution.pow(dim);
        Self::new(dim, resolution, (0..n).map(|x| (x, x, 1.0 / n as f64)).collect())
    }

    /// Graph `(id × φ)_* μ` of the grid map induced by `phi`.
    pub fn graph(phi: &IntMatrix, resolution: u64) -> Result<Self> {
        let map = GridMap::new(phi, resolution)?;
        let n = map.cells;
        Self::new(map.dim as u32, resolution, (0..n).map(|x| (x, map.apply(x), 1.0 / n as f64)).collect())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let m: DiscreteMeasure = serde_json::from_reader(std::fs::File::open(path)?)?;
        m.validate()?;
        Ok(m)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_vec(self)?)?;
        Ok(())
    }

    /// Binary layout, little-endian: magic `TNU1`, `u32` dim, `u32` resolution,
    /// `u64` count, then `count` records of `(u64 x, u64 y, f64 weight)`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + 24 * self.entries.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.dim.to_le_bytes());
        out.extend_from_slice(&(self.resolution as u32).to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u64).to_le_bytes());
        for &(x, y, w) in &self.entries {
            out.extend_from_slice(&x.to_le_bytes());
            out.extend_from_slice(&y.to_le_bytes());
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(mut bytes: &[u8]) -> Result<Self> {
        let mut take = |n: usize| -> Result<Vec<u8>> {
            let mut buf = vec![0u8; n];
            bytes.read_exact(&mut buf).map_err(|_| Error::Parse("truncated measure file".into()))?;
            Ok(buf)
        };
        if take(4)? != MAGIC {
            return Err(Error::Parse("bad magic: not a TNU1 measure file".into()));
        }
        let u32_at = |b: Vec<u8>| u32::from_le_bytes(b.try_into().unwrap());
        let u64_at = |b: Vec<u8>| u64::from_le_bytes(b.try_into().unwrap());
        let dim = u32_at(take(4)?);
        let resolution = u32_at(take(4)?) as u64;
        let count = u64_at(take(8)?);
        let mut entries = Vec::new();
        for _ in 0..count {
            let x = u64_at(take(8)?);
            let y = u64_at(take(8)?);
            let w = f64::from_le_bytes(take(8)?.try_into().unwrap());
            entries.push((x, y, w));
        }
        Self::new(dim, resolution, entries)
    }

    /// Reads either format, choosing by the leading magic bytes.
    pub fn read_any(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        if bytes.starts_with(MAGIC) {
            Self::from_bytes(&bytes)
        } else {
            let m: DiscreteMeasure = serde_json::from_slice(&bytes)?;
            m.validate()?;
            Ok(m)
        }
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        std::fs::File::create(path)?.write_all(&self.to_bytes())?;
        Ok(())
    }
}

/// A linear torus map reduced modulo the grid resolution, acting on cells.
struct GridMap {
    dim: usize,
    resolution: u64,
    cells: u64,
    mat: Vec<u64>,
}

impl GridMap {
    fn new(g: &IntMatrix, resolution: u64) -> Result<Self> {
        if !g.is_square() {
            return Err(Error::dim("grid maps must be square"));
        }
        let det = g.det()?;
        if !det.gcd(&BigInt::from(resolution)).to_u64().is_some_and(|d| d == 1) {
            return Err(Error::Precondition(format!(
                "generator {g} is not invertible modulo {resolution} (det = {det}); its pushforward does not permute grid cells"
            )));
        }
        let r = BigInt::from(resolution);
        let mat = g.entries().iter().map(|x| x.mod_floor(&r).to_u64().unwrap()).collect();
        let dim = g.rows();
        Ok(GridMap { dim, resolution, cells: resolution.pow(dim as u32), mat })
    }

    fn decode(&self, mut c: u64) -> Vec<u64> {
        (0..self.dim)
            .map(|_| {
                let d = c % self.resolution;
                c /= self.resolution;
                d
            })
            .collect()
    }

    fn encode(&self, v: &[u64]) -> u64 {
        v.iter().rev().fold(0, |acc, &d| acc * self.resolution + d)
    }

    fn apply(&self, c: u64) -> u64 {
        let x = self.decode(c);
        let y: Vec<u64> = (0..self.dim)
            .map(|i| {
                let s: u128 = (0..self.dim).map(|j| self.mat[i * self.dim + j] as u128 * x[j] as u128).sum();
                (s % self.resolution as u128) as u64
            })
            .collect();
        self.encode(&y)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Tolerances {
    pub marginal: f64,
    pub diagonal: f64,
    pub correlation: f64,
    pub pushforward: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { marginal: 1e-9, diagonal: 1e-9, correlation: 1e-6, pushforward: 1e-9 }
    }
}

/// Grid-sampled test functions `f`, `g` on `X`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TestFunctions {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasureCheck {
    pub marginal_error: f64,
    pub marginals_pass: bool,
    pub diagonal_mass: f64,
    pub diagonal_pass: bool,
    pub correlation_gap: f64,
    pub correlation_pass: bool,
    pub pushforward_distances: Vec<f64>,
    pub pushforward_pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub resolution: u64,
    pub dim: u32,
    pub measures: Vec<MeasureCheck>,
    pub correlation_gap_decreasing: bool,
    pub pushforward_decreasing: bool,
    pub tolerances: Tolerances,
}

/// Sums weights per cell key and returns them sorted by key.
fn aggregate(cells: impl Iterator<Item = (u64, f64)>) -> Vec<(u64, f64)> {
    let mut v: Vec<(u64, f64)> = cells.collect();
    v.sort_unstable_by_key(|e| e.0);
    let mut out: Vec<(u64, f64)> = Vec::with_capacity(v.len());
    for (c, w) in v {
        match out.last_mut() {
            Some(last) if last.0 == c => last.1 += w,
            _ => out.push((c, w)),
        }
    }
    out
}

/// `Σ |a(c) - b(c)|` over the union of supports of two sorted cell lists.
fn total_variation(a: &[(u64, f64)], b: &[(u64, f64)]) -> f64 {
    let (mut i, mut j, mut tv) = (0, 0, 0.0);
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) if x.0 == y.0 => {
                tv += (x.1 - y.1).abs();
                i += 1;
                j += 1;
            }
            (Some(x), Some(y)) if x.0 < y.0 => {
                tv += x.1;
                i += 1;
            }
            (Some(x), None) => {
                tv += x.1;
                i += 1;
            }
            (_, Some(y)) => {
                tv += y.1;
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    tv
}

fn nonincreasing(xs: impl Iterator<Item = f64>) -> bool {
    let v: Vec<f64> = xs.collect();
    v.windows(2).all(|w| w[1] <= w[0])
}

/// Checks a candidate sequence of couplings against the four conditions of
/// the rigidity criterion: uniform marginals, no diagonal mass, decorrelation
/// of `f(x) g(y)`, and asymptotic invariance under the diagonal action.
pub fn validate_measure_sequence(
    measures: &[DiscreteMeasure],
    generators: &[IntMatrix],
    tests: &TestFunctions,
    tol: Tolerances,
) -> Result<ValidationReport> {
    let Some(first) = measures.first() else {
        return Err(Error::Precondition("at least one measure is required".into()));
    };
    let (dim, resolution) = (first.dim, first.resolution);
    if let Some(m) = measures.iter().find(|m| m.dim != dim || m.resolution != resolution) {
        return Err(Error::dim(format!(
            "grid mismatch: ({dim}, {resolution}) versus ({}, {})",
            m.dim, m.resolution
        )));
    }
    let n = first.cells();
    if n > u64::from(u32::MAX) {
        return Err(Error::Unsupported(format!("grid of {n} cells is too large for pair indexing")));
    }
    if tests.f.len() as u64 != n || tests.g.len() as u64 != n {
        return Err(Error::dim(format!("test functions must be sampled on all {n} grid cells")));
    }
    let maps: Vec<GridMap> = generators
        .iter()
        .map(|g| {
            if g.rows() != dim as usize {
                return Err(Error::dim(format!("generator is {}x{}, grid has dimension {dim}", g.rows(), g.cols())));
            }
            GridMap::new(g, resolution)
        })
        .collect::<Result<_>>()?;
    let perms: Vec<Vec<u64>> = maps.iter().map(|g| (0..n).map(|c| g.apply(c)).collect()).collect();
    let uniform = 1.0 / n as f64;
    let target: f64 = tests.f.iter().zip(&tests.g).map(|(a, b)| a * b).sum::<f64>() * uniform;

    let mut checks = Vec::with_capacity(measures.len());
    for m in measures {
        let (mx, my) = m.marginals();
        let marginal_error = mx.iter().chain(&my).map(|v| (v - uniform).abs()).fold(0.0, f64::max);
        let diagonal_mass = m.diagonal_mass();
        let corr: f64 = m.entries.iter().map(|&(x, y, w)| w * tests.f[x as usize] * tests.g[y as usize]).sum();
        let correlation_gap = (corr - target).abs();

        let base = aggregate(m.entries.iter().map(|&(x, y, w)| (x * n + y, w)));
        let pushforward_distances: Vec<f64> = perms
            .iter()
            .map(|perm| {
                let pushed = aggregate(base.iter().map(|&(c, w)| (perm[(c / n) as usize] * n + perm[(c % n) as usize], w)));
                total_variation(&base, &pushed)
            })
            .collect();
        checks.push(MeasureCheck {
            marginal_error,
            marginals_pass: marginal_error <= tol.marginal,
            diagonal_mass,
            diagonal_pass: diagonal_mass <= tol.diagonal,
            correlation_gap,
            correlation_pass: correlation_gap <= tol.correlation,
            pushforward_pass: pushforward_distances.iter().all(|&d| d <= tol.pushforward),
            pushforward_distances,
        });
    }
    Ok(ValidationReport {
        resolution,
        dim,
        correlation_gap_decreasing: nonincreasing(checks.iter().map(|c| c.correlation_gap)),
        pushforward_decreasing: nonincreasing(
            checks.iter().map(|c| c.pushforward_distances.iter().copied().fold(0.0, f64::max)),
        ),
        measures: checks,
        tolerances: tol,
    })
}

/// `cos(2π x_1)` sampled on the grid, a convenient correlated test pair.
pub fn cosine_test_functions(dim: u32, resolution: u64) -> TestFunctions {
    let n = resolution.pow(dim);
    let f: Vec<f64> = (0..n)
        .map(|c| (2.0 * std::f64::consts::PI * (c % resolution) as f64 / resolution as f64).cos())
        .collect();
    TestFunctions { g: f.clone(), f }
}
