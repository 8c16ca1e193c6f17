//! Joint distributions and the information functionals evaluated on them.
//!
//! All logarithms are base 2 and `0 · log 0 = 0`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Total mass must equal one within this tolerance, otherwise the
/// constructor rescales.
pub const MASS_TOL: f64 = 1e-12;

/// A joint distribution `P(x, y)` over `n × m` labels.
///
/// Construction rescales inputs whose mass is positive but differs from one,
/// so matrices written with integer numerators (`[[1, 4], [4, 0]]` for
/// `(1/9)[[1, 4], [4, 0]]`) are accepted. [`Correlation::was_renormalized`]
/// records whether that happened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CorrelationJson", into = "CorrelationJson")]
pub struct Correlation {
    entries: DMatrix<f64>,
    renormalized: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CorrelationJson {
    matrix: Vec<Vec<f64>>,
}

impl TryFrom<CorrelationJson> for Correlation {
    type Error = Error;

    fn try_from(json: CorrelationJson) -> Result<Self> {
        Correlation::from_rows(&json.matrix)
    }
}

impl From<Correlation> for CorrelationJson {
    fn from(p: Correlation) -> Self {
        CorrelationJson { matrix: p.to_rows() }
    }
}

impl Correlation {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::InvalidDistribution("empty matrix".into()));
        }
        for (idx, &v) in entries.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "non-finite entry at flat index {idx}"
                )));
            }
            if v < 0.0 {
                let (x, y) = (idx % entries.nrows(), idx / entries.nrows());
                return Err(Error::InvalidDistribution(format!(
                    "negative entry {v} at ({x}, {y})"
                )));
            }
        }
        let total = entries.sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("total mass is zero".into()));
        }
        let renormalized = (total - 1.0).abs() > MASS_TOL;
        let entries = if renormalized { entries / total } else { entries };
        Ok(Correlation {
            entries,
            renormalized,
        })
    }

    /// Builds from row-major data; rows must all have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != m) {
            return Err(Error::InvalidDistribution(format!(
                "row {bad} has length {}, expected {m}",
                rows[bad].len()
            )));
        }
        Self::new(DMatrix::from_fn(n, m, |x, y| rows[x][y]))
    }

    pub fn diagonal(weights: &[f64]) -> Result<Self> {
        let k = weights.len();
        Self::new(DMatrix::from_fn(k, k, |i, j| if i == j { weights[i] } else { 0.0 }))
    }

    /// The independent distribution `p(x) q(y)`.
    pub fn product(p: &[f64], q: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_fn(p.len(), q.len(), |x, y| p[x] * q[y]))
    }

    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.entries[(x, y)]
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn was_renormalized(&self) -> bool {
        self.renormalized
    }

    pub fn transpose(&self) -> Correlation {
        Correlation {
            entries: self.entries.transpose(),
            renormalized: self.renormalized,
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    pub fn rows(&self) -> RowFamily {
        RowFamily {
            rows: self.to_rows(),
        }
    }

    /// Largest `|P(x,y) - P(x)P(y)|`.
    pub fn distance_from_product(&self) -> f64 {
        let px = marginal_x(self);
        let py = marginal_y(self);
        let mut worst = 0.0f64;
        for x in 0..self.nrows() {
            for y in 0..self.ncols() {
                worst = worst.max((self.get(x, y) - px[x] * py[y]).abs());
            }
        }
        worst
    }

    /// Bits per party needed to record the labels, `(⌈log₂ n⌉, ⌈log₂ m⌉)`.
    /// Display only.
    pub fn label_bits(&self) -> (u32, u32) {
        (ceil_log2(self.nrows()), ceil_log2(self.ncols()))
    }
}

fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

/// A probability vector (marginal of a [`Correlation`]).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalVector(Vec<f64>);

impl MarginalVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Index<usize> for MarginalVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// The unnormalized rows `P_x` of a correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct RowFamily {
    rows: Vec<Vec<f64>>,
}

impl RowFamily {
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn total_mass(&self) -> f64 {
        self.rows.iter().flatten().sum()
    }
}

pub fn marginal_x(p: &Correlation) -> MarginalVector {
    MarginalVector(p.entries.row_iter().map(|r| r.sum()).collect())
}

pub fn marginal_y(p: &Correlation) -> MarginalVector {
    MarginalVector(p.entries.column_iter().map(|c| c.sum()).collect())
}

/// `I(X;Y)` in bits.
pub fn mutual_information(p: &Correlation) -> f64 {
    let px = marginal_x(p);
    let py = marginal_y(p);
    let mut total = 0.0;
    for x in 0..p.nrows() {
        for y in 0..p.ncols() {
            let pxy = p.get(x, y);
            if pxy > 0.0 {
                total += pxy * (pxy / (px[x] * py[y])).log2();
            }
        }
    }
    // Rounding can leave a tiny negative value for product inputs.
    total.max(0.0)
}

/// `F(p, q) = Σ √p_i √q_i`. Inputs need not be normalized.
pub fn classical_fidelity(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "fidelity of vectors with lengths {} and {}",
            p.len(),
            q.len()
        )));
    }
    Ok(p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum())
}

/// Shannon entropy in bits.
pub fn shannon_entropy(v: &[f64]) -> f64 {
    let h: f64 = v
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    h.max(0.0)
}
