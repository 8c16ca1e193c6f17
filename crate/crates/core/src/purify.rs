//! Pure bipartite states, Schmidt spectra and the correspondence between
//! diagonal-form factorizations and purifications.
//!
//! States are real amplitude matrices `M` across a fixed bipartition. When a
//! state also carries classical labels `x` (Alice) and `y` (Bob), rows are
//! indexed `x * d_A + a` and columns `y * d_B + b`; the label registers are
//! kept implicit and the label distribution is the squared Frobenius mass of
//! each `(x, y)` block.

use nalgebra::{DMatrix, SVD};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::conditions::{check_all, Alpha, ConditionReport, SchmidtSpectrum};
use crate::correlation::Correlation;
use crate::factorize::{matrix_to_rows, DiagonalPsdFactorization, Lambda};
use crate::linalg::{max_abs, psd_sqrt};
use crate::{Error, Result};

/// Allowed deviation of `Σ |M(a,b)|²` from one.
pub const NORM_TOL: f64 = 1e-12;

/// Squared singular values below this are treated as zero.
pub const SPECTRUM_CUTOFF: f64 = 1e-12;

/// `|ψ⟩ = Σ M(a,b) |a⟩|b⟩` with unit Frobenius norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateJson", into = "StateJson")]
pub struct PureStateMatrix {
    amplitudes: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct StateJson {
    amplitudes: Vec<Vec<f64>>,
}

impl TryFrom<StateJson> for PureStateMatrix {
    type Error = Error;

    fn try_from(json: StateJson) -> Result<Self> {
        let rows = json.amplitudes.len();
        let cols = json.amplitudes.first().map_or(0, Vec::len);
        if json.amplitudes.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged amplitude rows".into()));
        }
        PureStateMatrix::new(DMatrix::from_fn(rows, cols, |i, j| json.amplitudes[i][j]))
    }
}

impl From<PureStateMatrix> for StateJson {
    fn from(s: PureStateMatrix) -> Self {
        StateJson {
            amplitudes: s.amplitudes.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }
}

impl PureStateMatrix {
    pub fn new(amplitudes: DMatrix<f64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidState("empty amplitude matrix".into()));
        }
        if amplitudes.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let norm2 = amplitudes.norm_squared();
        if (norm2 - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("squared norm {norm2} is not 1")));
        }
        Ok(PureStateMatrix { amplitudes })
    }

    /// Rescales a nonzero matrix to unit norm.
    pub fn normalized(amplitudes: DMatrix<f64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidState("amplitudes are zero or non-finite".into()));
        }
        Ok(PureStateMatrix {
            amplitudes: amplitudes / norm,
        })
    }

    pub fn amplitudes(&self) -> &DMatrix<f64> {
        &self.amplitudes
    }

    /// `|ψ⟩ = Σ_i √λ_i |i⟩|i⟩`.
    pub fn from_spectrum(spectrum: &SchmidtSpectrum) -> Self {
        let coeffs = spectrum.coefficients();
        PureStateMatrix {
            amplitudes: crate::linalg::diag_matrix(&coeffs),
        }
    }
}

/// Squared singular values of the amplitude matrix.
pub fn schmidt_spectrum(state: &PureStateMatrix) -> SchmidtSpectrum {
    let sv = state.amplitudes.clone().svd(false, false).singular_values;
    let weights: Vec<f64> = sv.iter().map(|s| s * s).filter(|&l| l > SPECTRUM_CUTOFF).collect();
    SchmidtSpectrum::new(weights).expect("unit-norm state has a positive singular value")
}

/// `Σ √P(x,y) |x⟩|y⟩|x⟩|y⟩` split as `A A₁ | B B₁`, with rows `(x, a₁)` and
/// columns `(y, b₁)`. Its Schmidt coefficients are the singular values of the
/// entrywise square root of `P`.
pub fn canonical_purification(p: &Correlation) -> PureStateMatrix {
    let (n, m) = (p.nrows(), p.ncols());
    let mut amps = DMatrix::zeros(n * n, m * m);
    for x in 0..n {
        for y in 0..m {
            amps[(x * n + x, y * m + y)] = p.get(x, y).sqrt();
        }
    }
    PureStateMatrix::normalized(amps).expect("correlation has unit mass")
}

/// The canonical purification of a `2 × 2` target with a CNOT from `A₁`
/// onto `B₁`: `Σ √P(x,y) |x⟩|y⟩|x⟩|x ⊕ y⟩`.
pub fn cnot_purification(p: &Correlation) -> Result<PureStateMatrix> {
    if p.nrows() != 2 || p.ncols() != 2 {
        return Err(Error::Unsupported(format!(
            "the CNOT purification needs a 2x2 target, got {}x{}",
            p.nrows(),
            p.ncols()
        )));
    }
    let mut amps = DMatrix::zeros(4, 4);
    for x in 0..2 {
        for y in 0..2 {
            amps[(x * 2 + x, y * 2 + (x ^ y))] = p.get(x, y).sqrt();
        }
    }
    PureStateMatrix::normalized(amps)
}

/// Vector families `{v_x^i}`, `{w_y^i}`: `v[x]` is `d_A × k` with column `i`
/// equal to `v_x^i`, and likewise for `w[y]`. The induced state has block
/// `(x, y)` equal to `v_x w_yᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PurificationBundle {
    v: Vec<DMatrix<f64>>,
    w: Vec<DMatrix<f64>>,
}

impl PurificationBundle {
    pub fn new(v: Vec<DMatrix<f64>>, w: Vec<DMatrix<f64>>) -> Result<Self> {
        let Some(first) = v.first().or(w.first()) else {
            return Err(Error::DimensionMismatch("empty vector families".into()));
        };
        if v.is_empty() || w.is_empty() {
            return Err(Error::DimensionMismatch("empty vector family".into()));
        }
        let k = first.ncols();
        let (da, db) = (v[0].nrows(), w[0].nrows());
        if v.iter().any(|m| m.ncols() != k || m.nrows() != da)
            || w.iter().any(|m| m.ncols() != k || m.nrows() != db)
        {
            return Err(Error::DimensionMismatch("vector families disagree in shape".into()));
        }
        Ok(PurificationBundle { v, w })
    }

    /// Splits an arbitrary purification of an `n × m` label distribution
    /// into vector families through its Schmidt decomposition
    /// `M = Σ_i s_i α_i β_iᵀ`, taking `V_i = √s_i α_i` and `W_i = √s_i β_i`.
    /// The resulting bundle has `Λ = diag(s_i)`.
    pub fn from_state(state: &PureStateMatrix, n: usize, m: usize) -> Result<Self> {
        let amps = state.amplitudes();
        if n == 0 || m == 0 || amps.nrows() % n != 0 || amps.ncols() % m != 0 {
            return Err(Error::DimensionMismatch(format!(
                "a {}x{} state cannot carry {n}x{m} labels",
                amps.nrows(),
                amps.ncols()
            )));
        }
        let (da, db) = (amps.nrows() / n, amps.ncols() / m);
        let svd = SVD::new(amps.clone(), true, true);
        let u = svd.u.as_ref().expect("requested");
        let vt = svd.v_t.as_ref().expect("requested");
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i].powi(2) > SPECTRUM_CUTOFF)
            .collect();
        let k = keep.len();
        let v = (0..n)
            .map(|x| {
                DMatrix::from_fn(da, k, |a, c| {
                    let i = keep[c];
                    u[(x * da + a, i)] * svd.singular_values[i].sqrt()
                })
            })
            .collect();
        let w = (0..m)
            .map(|y| {
                DMatrix::from_fn(db, k, |b, c| {
                    let i = keep[c];
                    vt[(i, y * db + b)] * svd.singular_values[i].sqrt()
                })
            })
            .collect();
        PurificationBundle::new(v, w)
    }

    pub fn k(&self) -> usize {
        self.v[0].ncols()
    }

    pub fn v(&self) -> &[DMatrix<f64>] {
        &self.v
    }

    pub fn w(&self) -> &[DMatrix<f64>] {
        &self.w
    }

    fn gram_sum(family: &[DMatrix<f64>]) -> DMatrix<f64> {
        let k = family[0].ncols();
        family.iter().fold(DMatrix::zeros(k, k), |acc, f| acc + f.transpose() * f)
    }

    /// Unnormalized amplitude matrix of the induced state.
    pub fn amplitudes(&self) -> DMatrix<f64> {
        let (da, db) = (self.v[0].nrows(), self.w[0].nrows());
        let mut out = DMatrix::zeros(self.v.len() * da, self.w.len() * db);
        for (x, vx) in self.v.iter().enumerate() {
            for (y, wy) in self.w.iter().enumerate() {
                out.view_mut((x * da, y * db), (da, db)).copy_from(&(vx * wy.transpose()));
            }
        }
        out
    }

    pub fn state(&self) -> Result<PureStateMatrix> {
        PureStateMatrix::normalized(self.amplitudes())
    }

    /// Probability of each label pair after tracing out everything else.
    pub fn label_distribution(&self) -> Result<Correlation> {
        let table = DMatrix::from_fn(self.v.len(), self.w.len(), |x, y| {
            (&self.v[x] * self.w[y].transpose()).norm_squared()
        });
        Correlation::new(table)
    }

    /// The diagonal of `Σ_x ⟨v_x^j|v_x^i⟩`.
    pub fn lambda(&self) -> Result<Lambda> {
        let g = Self::gram_sum(&self.v);
        Lambda::from_sqrt(g.diagonal().iter().map(|v| v.max(0.0)).collect())
    }

    /// Largest deviation from `Σ_x ⟨v_x^j|v_x^i⟩ = Σ_y ⟨w_y^j|w_y^i⟩ = δ_ij √λ_i`.
    pub fn invariant_violation(&self) -> f64 {
        let gv = Self::gram_sum(&self.v);
        let gw = Self::gram_sum(&self.w);
        let mut worst = max_abs(&(&gv - &gw));
        for i in 0..gv.nrows() {
            for j in 0..gv.ncols() {
                if i != j {
                    worst = worst.max(gv[(i, j)].abs()).max(gw[(i, j)].abs());
                }
            }
        }
        worst
    }
}

/// `v_x = √C_x` and `w_y = √D_y`: column `i` of each root is the vector
/// `v_x^i` (respectively `w_y^i`).
pub fn factorization_to_purification(f: &DiagonalPsdFactorization) -> Result<PurificationBundle> {
    let v = f.c().iter().map(|c| psd_sqrt(&c.transpose())).collect::<Result<_>>()?;
    let w = f.d().iter().map(psd_sqrt).collect::<Result<_>>()?;
    PurificationBundle::new(v, w)
}

/// Gram matrices `C_x(j, i) = ⟨v_x^j|v_x^i⟩`, `D_y(j, i) = ⟨w_y^j|w_y^i⟩`,
/// with `Λ` read from the diagonal of `Σ_x C_x`. Bundles that break the
/// orthogonality invariant still convert; the defect shows up in
/// [`DiagonalPsdFactorization::feasibility`].
pub fn purification_to_factorization(bundle: &PurificationBundle) -> Result<DiagonalPsdFactorization> {
    let c = bundle.v.iter().map(|v| v.transpose() * v).collect();
    let d = bundle.w.iter().map(|w| w.transpose() * w).collect();
    DiagonalPsdFactorization::new(c, d, bundle.lambda()?)
}

/// `n_samples` i.i.d. draws of `(x, y)` with probability `tr(C_x D_y)`,
/// returned as an `n × m` table of counts.
pub fn sample_protocol(f: &DiagonalPsdFactorization, n_samples: u64, rng_seed: u64) -> Result<Vec<Vec<u64>>> {
    let table = f.table();
    let worst = table.min();
    if worst < -1e-10 {
        return Err(Error::NegativeProbability(worst));
    }
    let probs: Vec<f64> = table.transpose().iter().map(|v| v.max(0.0)).collect();
    let total: f64 = probs.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidDistribution("factorization table has zero mass".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = n_samples;
    let mut mass_left = 1.0;
    for (i, p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let share = p / total;
        if i + 1 == probs.len() || mass_left <= share {
            counts[i] = remaining;
            break;
        }
        let q = (share / mass_left).clamp(0.0, 1.0);
        let drawn = Binomial::new(remaining, q).expect("q in [0, 1]").sample(&mut rng);
        counts[i] = drawn;
        remaining -= drawn;
        mass_left -= share;
    }
    let m = f.m();
    Ok(counts.chunks(m).map(<[u64]>::to_vec).collect())
}

/// Runs the pure-seed conditions on the canonical purification of a
/// classical-classical seed. Any purification of the seed can produce
/// whatever the seed can, so a violation rules the seed out.
pub fn mixed_seed_check(target: &Correlation, seed: &Correlation, alphas: &[Alpha]) -> Result<ConditionReport> {
    let spectrum = schmidt_spectrum(&canonical_purification(seed));
    check_all(&spectrum, target, alphas)
}

/// JSON rows of a bundle's induced (normalized) state.
pub fn state_rows(state: &PureStateMatrix) -> Vec<Vec<f64>> {
    matrix_to_rows(state.amplitudes())
}
