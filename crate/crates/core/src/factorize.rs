//! Diagonal-form PSD factorizations.
//!
//! A diagonal form of `P` is a family of real PSD `k × k` matrices `C_x`,
//! `D_y` with `P(x, y) = tr(C_x D_y)` and `Σ_x C_x = Σ_y D_y = Λ`, where `Λ` is
//! diagonal with entries `√λ_i`. A pure seed with squared Schmidt
//! coefficients `λ` can produce `P` exactly when such a factorization exists.
//!
//! [`alternate`] searches for one by minimizing
//! `Σ_{x,y} (P(x,y) - tr(C_x D_y))²`: with one family fixed the problem in the
//! other is a convex QP over the product of PSD cones intersected with the
//! affine set `Σ C_x = Λ`, solved by [`solve_subproblem`]. The outer problem is
//! non-convex, so the search restarts from several random initial `D` and keeps
//! the best run.
//!
//! Only real symmetric factors are searched. Complex Hermitian diagonal forms
//! can exist where real ones do not, so a failed search is weaker evidence
//! than it looks.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::SchmidtSpectrum;
use crate::correlation::Correlation;
use crate::linalg::{diag_matrix, max_abs, min_eigenvalue, symmetrize, trace_product};
use crate::purify::{canonical_purification, cnot_purification, schmidt_spectrum};
use crate::{Error, Result};

/// Tolerance for the PSD and marginal-sum invariants of a factorization.
pub const FEASIBILITY_TOL: f64 = 1e-8;

pub const DEFAULT_RNG_SEED: u64 = 20_240_917;

/// The diagonal `Λ = diag(√λ_1, …, √λ_k)`.
///
/// Stored as the square-rooted entries. Use [`Lambda::squared`] for the
/// squared Schmidt coefficients; the two are easy to mix up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Lambda {
    sqrt: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Lambda {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Lambda::from_sqrt(v)
    }
}

impl From<Lambda> for Vec<f64> {
    fn from(l: Lambda) -> Self {
        l.sqrt
    }
}

impl Lambda {
    /// From the diagonal entries `√λ_i` directly.
    pub fn from_sqrt(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidLambda("no entries".into()));
        }
        if let Some(bad) = entries.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidLambda(format!("entry {bad} is not a nonnegative number")));
        }
        if entries.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidLambda("all entries are zero".into()));
        }
        Ok(Lambda { sqrt: entries })
    }

    /// From squared Schmidt coefficients `λ_i`; stores `√λ_i`.
    pub fn from_squared(entries: Vec<f64>) -> Result<Self> {
        if let Some(bad) = entries.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidLambda(format!("entry {bad} is not a nonnegative number")));
        }
        Self::from_sqrt(entries.into_iter().map(f64::sqrt).collect())
    }

    pub fn from_spectrum(spectrum: &SchmidtSpectrum) -> Self {
        Lambda {
            sqrt: spectrum.coefficients(),
        }
    }

    pub fn sqrt_entries(&self) -> &[f64] {
        &self.sqrt
    }

    pub fn squared(&self) -> Vec<f64> {
        self.sqrt.iter().map(|v| v * v).collect()
    }

    pub fn len(&self) -> usize {
        self.sqrt.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sqrt.is_empty()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        diag_matrix(&self.sqrt)
    }

    /// The squared entries as a Schmidt spectrum (zeros dropped).
    pub fn spectrum(&self) -> Result<SchmidtSpectrum> {
        SchmidtSpectrum::new(self.squared())
    }

    pub fn sorted_descending(&self) -> Lambda {
        let mut sqrt = self.sqrt.clone();
        sqrt.sort_by(|a, b| b.total_cmp(a));
        Lambda { sqrt }
    }
}

/// PSD factors `{C_x}`, `{D_y}` with diagonal marginal sum `Λ`.
///
/// [`DiagonalPsdFactorization::new`] checks shapes and symmetry only; the
/// PSD and sum invariants are measured by [`DiagonalPsdFactorization::feasibility`]
/// and by [`verify`], so candidates from files can be loaded and then judged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FactorizationJson", into = "FactorizationJson")]
pub struct DiagonalPsdFactorization {
    c: Vec<DMatrix<f64>>,
    d: Vec<DMatrix<f64>>,
    lambda: Lambda,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FactorizationJson {
    lambda: Vec<f64>,
    #[serde(rename = "C")]
    c: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "D")]
    d: Vec<Vec<Vec<f64>>>,
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let k = rows.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != k) {
        return Err(Error::DimensionMismatch(format!(
            "factor row of length {} in a {k}-row matrix",
            bad.len()
        )));
    }
    Ok(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
}

pub(crate) fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl TryFrom<FactorizationJson> for DiagonalPsdFactorization {
    type Error = Error;

    fn try_from(json: FactorizationJson) -> Result<Self> {
        let c = json.c.iter().map(|m| matrix_from_rows(m)).collect::<Result<_>>()?;
        let d = json.d.iter().map(|m| matrix_from_rows(m)).collect::<Result<_>>()?;
        DiagonalPsdFactorization::new(c, d, Lambda::from_sqrt(json.lambda)?)
    }
}

impl From<DiagonalPsdFactorization> for FactorizationJson {
    fn from(f: DiagonalPsdFactorization) -> Self {
        FactorizationJson {
            lambda: f.lambda.sqrt.clone(),
            c: f.c.iter().map(matrix_to_rows).collect(),
            d: f.d.iter().map(matrix_to_rows).collect(),
        }
    }
}

impl DiagonalPsdFactorization {
    pub fn new(c: Vec<DMatrix<f64>>, d: Vec<DMatrix<f64>>, lambda: Lambda) -> Result<Self> {
        let k = lambda.len();
        if c.is_empty() || d.is_empty() {
            return Err(Error::DimensionMismatch("factor lists must be nonempty".into()));
        }
        for (label, family) in [("C", &c), ("D", &d)] {
            for (i, m) in family.iter().enumerate() {
                if m.nrows() != k || m.ncols() != k {
                    return Err(Error::DimensionMismatch(format!(
                        "{label}[{i}] is {}x{}, lambda has {k} entries",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                let asym = max_abs(&(m - m.transpose()));
                if asym > FEASIBILITY_TOL * max_abs(m).max(1.0) {
                    return Err(Error::DimensionMismatch(format!(
                        "{label}[{i}] is not symmetric (asymmetry {asym:e})"
                    )));
                }
            }
        }
        Ok(DiagonalPsdFactorization {
            c: c.iter().map(symmetrize).collect(),
            d: d.iter().map(symmetrize).collect(),
            lambda,
        })
    }

    pub fn c(&self) -> &[DMatrix<f64>] {
        &self.c
    }

    pub fn d(&self) -> &[DMatrix<f64>] {
        &self.d
    }

    pub fn lambda(&self) -> &Lambda {
        &self.lambda
    }

    pub fn k(&self) -> usize {
        self.lambda.len()
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn m(&self) -> usize {
        self.d.len()
    }

    /// The table `tr(C_x D_y)`.
    pub fn table(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n(), self.m(), |x, y| trace_product(&self.c[x], &self.d[y]))
    }

    /// The generated correlation, i.e. [`table`](Self::table) as a distribution.
    pub fn to_correlation(&self) -> Result<Correlation> {
        let t = self.table();
        let worst = t.min();
        if worst < -1e-10 {
            return Err(Error::NegativeProbability(worst));
        }
        Correlation::new(t.map(|v| v.max(0.0)))
    }

    /// Largest violation among `|Σ C - Λ|`, `|Σ D - Λ|` (entrywise) and the
    /// magnitudes of negative eigenvalues.
    pub fn feasibility(&self) -> f64 {
        let lam = self.lambda.matrix();
        let sum_c = self.c.iter().fold(DMatrix::zeros(self.k(), self.k()), |acc, m| acc + m);
        let sum_d = self.d.iter().fold(DMatrix::zeros(self.k(), self.k()), |acc, m| acc + m);
        let mut worst = max_abs(&(sum_c - &lam)).max(max_abs(&(sum_d - &lam)));
        for m in self.c.iter().chain(&self.d) {
            worst = worst.max(-min_eigenvalue(m));
        }
        worst
    }

    /// Swaps the roles of the two parties: a factorization of `Pᵀ`.
    pub fn transpose(&self) -> Self {
        DiagonalPsdFactorization {
            c: self.d.clone(),
            d: self.c.clone(),
            lambda: self.lambda.clone(),
        }
    }
}

/// `Σ_{x,y} (P(x,y) - tr(C_x D_y))²`.
pub fn objective(p: &Correlation, c: &[DMatrix<f64>], d: &[DMatrix<f64>]) -> f64 {
    block_objective(p.entries(), c, d)
}

fn block_objective(p: &DMatrix<f64>, c: &[DMatrix<f64>], d: &[DMatrix<f64>]) -> f64 {
    let mut total = 0.0;
    for (x, cx) in c.iter().enumerate() {
        for (y, dy) in d.iter().enumerate() {
            let r = p[(x, y)] - trace_product(cx, dy);
            total += r * r;
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSettings {
    /// Accelerated projected-gradient iterations per subproblem.
    pub max_iters: usize,
    /// Stop once the gradient-mapping norm falls below this.
    pub stationarity_tol: f64,
    /// Step-halving attempts per iteration before giving up.
    pub max_backtracks: usize,
    /// Newton iterations per projection onto the feasible set.
    pub projection_iters: usize,
    /// Accepted violation of `Σ C_x = Λ` before the final exact correction.
    pub projection_tol: f64,
}

impl Default for SubproblemSettings {
    fn default() -> Self {
        SubproblemSettings {
            max_iters: 15,
            stationarity_tol: 1e-12,
            max_backtracks: 30,
            projection_iters: 50,
            projection_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveSettings {
    pub max_outer_iters: usize,
    /// A run counts as converged once the objective drops to this value.
    pub residual_tol: f64,
    /// Stop when the relative improvement over `stall_window` outer
    /// iterations is below this.
    pub stall_tol: f64,
    pub stall_window: usize,
    pub restarts: usize,
    /// Restart `i` is seeded with `rng_seed + i`.
    pub rng_seed: u64,
    pub subproblem: SubproblemSettings,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings {
            max_outer_iters: 500,
            residual_tol: 1e-9,
            stall_tol: 1e-12,
            stall_window: 10,
            restarts: 10,
            rng_seed: DEFAULT_RNG_SEED,
            subproblem: SubproblemSettings::default(),
        }
    }
}

impl SolveSettings {
    pub fn validate(&self) -> Result<()> {
        let sub = &self.subproblem;
        let positive = [
            ("residual_tol", self.residual_tol),
            ("stall_tol", self.stall_tol),
            ("stationarity_tol", sub.stationarity_tol),
            ("projection_tol", sub.projection_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidSettings(format!("{name} must be positive, got {v}")));
            }
        }
        let counts = [
            ("max_outer_iters", self.max_outer_iters),
            ("stall_window", self.stall_window),
            ("restarts", self.restarts),
            ("max_iters", sub.max_iters),
            ("projection_iters", sub.projection_iters),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidSettings(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveOutcome {
    #[serde(flatten)]
    pub factorization: DiagonalPsdFactorization,
    pub objective: f64,
    pub iterations: usize,
    pub restart_index: usize,
    pub converged: bool,
    /// Objective after every outer iteration.
    #[serde(skip)]
    pub history: Vec<f64>,
}

/// `count` random PSD `k × k` matrices, each a sum of `terms` outer products
/// `b bᵀ` with `b ~ N(0, I_k)`.
pub fn init_factors(rng_seed: u64, k: usize, count: usize, terms: usize) -> Vec<DMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    (0..count)
        .map(|_| {
            let mut m = DMatrix::zeros(k, k);
            for _ in 0..terms {
                let b = nalgebra::DVector::<f64>::from_fn(k, |_, _| rng.sample(StandardNormal));
                m += &b * b.transpose();
            }
            m
        })
        .collect()
}

/// Works on the support of `Λ` (strictly positive diagonal) only: factors are
/// forced to vanish on rows and columns where `Λ` is zero.
struct Block<'a> {
    p: &'a DMatrix<f64>,
    fixed: Vec<DMatrix<f64>>,
    lambda: Vec<f64>,
    settings: &'a SubproblemSettings,
    /// Multiplier from the previous projection; consecutive projections are
    /// close, so it is a good Newton start.
    multiplier: std::cell::RefCell<Option<DMatrix<f64>>>,
}

fn sum_of(ms: &[DMatrix<f64>]) -> DMatrix<f64> {
    let k = ms[0].nrows();
    ms.iter().fold(DMatrix::zeros(k, k), |acc, m| acc + m)
}

type Eig = SymmetricEigen<f64, nalgebra::Dyn>;

fn shifted_eigs(z: &[DMatrix<f64>], shift: &DMatrix<f64>) -> Vec<Eig> {
    z.iter().map(|zx| SymmetricEigen::new(symmetrize(&(zx + shift)))).collect()
}

fn psd_part(eig: &Eig) -> DMatrix<f64> {
    let mut scaled = eig.eigenvectors.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= eig.eigenvalues[j].max(0.0);
    }
    symmetrize(&(scaled * eig.eigenvectors.transpose()))
}

fn dual_value(eigs: &[Eig], mult: &DMatrix<f64>, lam: &DMatrix<f64>) -> f64 {
    let quad: f64 = eigs
        .iter()
        .flat_map(|e| e.eigenvalues.iter())
        .map(|&d| d.max(0.0).powi(2))
        .sum();
    0.5 * quad - mult.dot(lam)
}

/// Solves `(Σ_x J_x + μ I) Δ = r`, where `J_x` is the generalized Jacobian of
/// the PSD clamp at `Z_x + M`, over an orthonormal basis of symmetric
/// matrices. `μ = ‖r‖` keeps the system definite.
fn newton_direction(eigs: &[Eig], residual: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let k = residual.nrows();
    let basis: Vec<DMatrix<f64>> = (0..k)
        .flat_map(|i| (i..k).map(move |j| (i, j)))
        .map(|(i, j)| {
            let mut e = DMatrix::zeros(k, k);
            if i == j {
                e[(i, i)] = 1.0;
            } else {
                e[(i, j)] = std::f64::consts::FRAC_1_SQRT_2;
                e[(j, i)] = std::f64::consts::FRAC_1_SQRT_2;
            }
            e
        })
        .collect();
    let omegas: Vec<DMatrix<f64>> = eigs
        .iter()
        .map(|e| {
            let d = &e.eigenvalues;
            DMatrix::from_fn(k, k, |i, j| {
                let (a, b) = (d[i], d[j]);
                if a > 0.0 && b > 0.0 {
                    1.0
                } else if a <= 0.0 && b <= 0.0 {
                    0.0
                } else {
                    (a.max(0.0) - b.max(0.0)) / (a - b)
                }
            })
        })
        .collect();
    let s = basis.len();
    let images: Vec<DMatrix<f64>> = basis
        .iter()
        .map(|e| {
            eigs.iter().zip(&omegas).fold(DMatrix::zeros(k, k), |acc, (eig, om)| {
                let q = &eig.eigenvectors;
                let inner = (q.transpose() * e * q).component_mul(om);
                acc + q * inner * q.transpose()
            })
        })
        .collect();
    let mu = residual.norm().max(1e-15);
    let h = DMatrix::from_fn(s, s, |a, b| basis[a].dot(&images[b]) + if a == b { mu } else { 0.0 });
    let rhs = nalgebra::DVector::from_fn(s, |a, _| basis[a].dot(residual));
    let coeffs = h.cholesky()?.solve(&rhs);
    Some(basis.iter().zip(coeffs.iter()).fold(DMatrix::zeros(k, k), |acc, (e, c)| acc + e * *c))
}

impl Block<'_> {
    fn k(&self) -> usize {
        self.lambda.len()
    }

    fn center(&self, n: usize) -> Vec<DMatrix<f64>> {
        let c = diag_matrix(&self.lambda) / n as f64;
        vec![c; n]
    }

    fn affine_project(&self, z: &mut [DMatrix<f64>]) {
        let n = z.len() as f64;
        let excess = (sum_of(z) - diag_matrix(&self.lambda)) / n;
        for m in z.iter_mut() {
            *m = symmetrize(&(&*m - &excess));
        }
    }

    /// Exact projection onto `{C_x ⪰ 0, Σ C_x = Λ}`.
    ///
    /// The minimizer is `C_x = Π(Z_x + M)` where `Π` clamps negative
    /// eigenvalues and the symmetric multiplier `M` solves
    /// `Σ_x Π(Z_x + M) = Λ`. `M` minimizes the convex dual
    /// `θ(M) = ½ Σ_x ‖Π(Z_x + M)‖² - ⟨M, Λ⟩` and is found by a damped
    /// semismooth Newton method. A final convex step toward `Λ/n` removes the
    /// rounding-level eigenvalue deficit left after restoring the sum exactly.
    fn project(&self, z: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
        let n = z.len();
        let lam = diag_matrix(&self.lambda);
        let z: Vec<DMatrix<f64>> = z.iter().map(symmetrize).collect();
        let affine = (&lam - sum_of(&z)) / n as f64;
        let mut mult = affine.clone();
        let mut eigs = shifted_eigs(&z, &mult);
        let mut theta = dual_value(&eigs, &mult, &lam);
        if let Some(prev) = self.multiplier.borrow().as_ref() {
            let prev_eigs = shifted_eigs(&z, prev);
            let prev_theta = dual_value(&prev_eigs, prev, &lam);
            if prev_theta < theta {
                mult = prev.clone();
                eigs = prev_eigs;
                theta = prev_theta;
            }
        }

        for _ in 0..self.settings.projection_iters {
            let residual = &lam - sum_of(&eigs.iter().map(psd_part).collect::<Vec<_>>());
            if max_abs(&residual) <= self.settings.projection_tol {
                break;
            }
            let gradient_step = &residual / n as f64;
            let mut dir = newton_direction(&eigs, &residual).unwrap_or_else(|| gradient_step.clone());
            let mut slope = -residual.dot(&dir);
            if !(slope < 0.0) {
                dir = gradient_step;
                slope = -residual.dot(&dir);
            }
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..20 {
                let trial = &mult + &dir * t;
                let trial_eigs = shifted_eigs(&z, &trial);
                let trial_theta = dual_value(&trial_eigs, &trial, &lam);
                // θ loses precision to cancellation near the solution, where
                // a shrinking residual is the better acceptance test
                let trial_residual = (&lam - sum_of(&trial_eigs.iter().map(psd_part).collect::<Vec<_>>())).norm();
                if trial_theta <= theta + 1e-4 * t * slope || trial_residual <= 0.5 * residual.norm() {
                    mult = trial;
                    eigs = trial_eigs;
                    theta = trial_theta;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        *self.multiplier.borrow_mut() = Some(mult);
        let mut x: Vec<DMatrix<f64>> = eigs.iter().map(psd_part).collect();
        self.affine_project(&mut x);
        self.repair(x)
    }

    fn repair(&self, mut x: Vec<DMatrix<f64>>) -> Vec<DMatrix<f64>> {
        let n = x.len();
        let floor = self.lambda.iter().copied().fold(f64::INFINITY, f64::min) / n as f64;
        let deficit = x
            .iter()
            .map(|m| -min_eigenvalue(m))
            .fold(0.0, f64::max);
        if deficit > 0.0 {
            // eig((1-t) C + t Λ/n) ≥ -(1-t) deficit + t floor ≥ 0
            let t = (deficit / (deficit + floor) * (1.0 + 1e-9)).min(1.0);
            let center = diag_matrix(&self.lambda) / n as f64;
            for m in x.iter_mut() {
                *m = &*m * (1.0 - t) + &center * t;
            }
        }
        x
    }

    fn objective(&self, c: &[DMatrix<f64>]) -> f64 {
        block_objective(self.p, c, &self.fixed)
    }

    fn gradient(&self, c: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
        c.iter()
            .enumerate()
            .map(|(x, cx)| {
                let mut g = DMatrix::zeros(self.k(), self.k());
                for (y, dy) in self.fixed.iter().enumerate() {
                    let r = self.p[(x, y)] - trace_product(cx, dy);
                    g -= dy * (2.0 * r);
                }
                g
            })
            .collect()
    }

    /// Monotone accelerated projected gradient from a feasible start.
    fn solve(&self, start: Vec<DMatrix<f64>>) -> Vec<DMatrix<f64>> {
        // the Hessian is 2 Σ_y D_y ⊗ D_y; its top eigenvalue is that of the
        // Gram matrix ⟨D_y, D_y'⟩, never more than 2 Σ ‖D_y‖²
        let m = self.fixed.len();
        let gram = DMatrix::from_fn(m, m, |a, b| self.fixed[a].dot(&self.fixed[b]));
        let lipschitz = 2.0 * SymmetricEigen::new(gram).eigenvalues.max();
        if lipschitz <= 0.0 {
            return start;
        }
        let base_step = 1.0 / lipschitz;

        let mut x = start;
        let mut fx = self.objective(&x);
        let mut y = x.clone();
        let mut momentum = 1.0f64;

        for _ in 0..self.settings.max_iters {
            let fy = self.objective(&y);
            let grad = self.gradient(&y);
            let mut step = base_step;
            let mut accepted = None;
            for _ in 0..=self.settings.max_backtracks {
                let trial: Vec<_> = y.iter().zip(&grad).map(|(yi, gi)| yi - gi * step).collect();
                let z = self.project(&trial);
                let fz = self.objective(&z);
                let mut linear = 0.0;
                let mut dist2 = 0.0;
                for ((zi, yi), gi) in z.iter().zip(&y).zip(&grad) {
                    let diff = zi - yi;
                    linear += diff.dot(gi);
                    dist2 += diff.norm_squared();
                }
                let bound = fy + linear + dist2 / (2.0 * step);
                let grad_norm = grad.iter().map(|g| g.norm_squared()).sum::<f64>().sqrt();
                // the projection is exact only to ~1e-12, which the linear term feels
                let slack = 1e-11 * grad_norm + 1e-15 * fy;
                if fz <= bound + slack {
                    accepted = Some((z, fz, dist2.sqrt() / step));
                    break;
                }
                step *= 0.5;
            }
            let Some((z, fz, mapping_norm)) = accepted else {
                break;
            };

            let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            if fz <= fx {
                let prev = std::mem::replace(&mut x, z);
                fx = fz;
                let beta = (momentum - 1.0) / next_momentum;
                y = x.iter().zip(&prev).map(|(a, b)| a + (a - b) * beta).collect();
                momentum = next_momentum;
            } else {
                // no progress from the extrapolated point: restart momentum at x
                y = x.clone();
                momentum = 1.0;
            }
            if mapping_norm <= self.settings.stationarity_tol || fx == 0.0 {
                break;
            }
        }
        x
    }
}

fn support_of(lambda: &Lambda) -> Vec<usize> {
    lambda
        .sqrt_entries()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, _)| i)
        .collect()
}

fn restrict(m: &DMatrix<f64>, support: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(support.len(), support.len(), |i, j| m[(support[i], support[j])])
}

fn embed(m: &DMatrix<f64>, support: &[usize], k: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(k, k);
    for (i, &si) in support.iter().enumerate() {
        for (j, &sj) in support.iter().enumerate() {
            out[(si, sj)] = m[(i, j)];
        }
    }
    out
}

fn solve_raw(
    p: &DMatrix<f64>,
    fixed: &[DMatrix<f64>],
    lambda: &Lambda,
    settings: &SubproblemSettings,
    warm: Option<&[DMatrix<f64>]>,
) -> Vec<DMatrix<f64>> {
    let k = lambda.len();
    let support = support_of(lambda);
    let block = Block {
        p,
        fixed: fixed.iter().map(|d| restrict(d, &support)).collect(),
        lambda: support.iter().map(|&i| lambda.sqrt_entries()[i]).collect(),
        settings,
        multiplier: std::cell::RefCell::new(None),
    };
    let n = p.nrows();
    let start = match warm {
        Some(w) => block.project(&w.iter().map(|c| restrict(c, &support)).collect::<Vec<_>>()),
        None => block.center(n),
    };
    block
        .solve(start)
        .iter()
        .map(|c| embed(c, &support, k))
        .collect()
}

/// Minimizes `Σ (P(x,y) - tr(C_x D_y))²` over PSD `C_x` with `Σ C_x = Λ`,
/// holding `fixed = {D_y}`. Pass `Pᵀ` and `{C_x}` to update the other side.
///
/// Starts from `warm` (projected onto the feasible set) or from `C_x = Λ/n`.
/// The returned point is always feasible and never has a larger objective than
/// the start.
pub fn solve_subproblem(
    p: &Correlation,
    fixed: &[DMatrix<f64>],
    lambda: &Lambda,
    settings: &SubproblemSettings,
    warm: Option<&[DMatrix<f64>]>,
) -> Result<Vec<DMatrix<f64>>> {
    let k = lambda.len();
    if fixed.len() != p.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{} fixed factors for {} columns",
            fixed.len(),
            p.ncols()
        )));
    }
    if let Some(w) = warm {
        if w.len() != p.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{} warm-start factors for {} rows",
                w.len(),
                p.nrows()
            )));
        }
    }
    let all = fixed.iter().chain(warm.into_iter().flatten());
    if let Some(bad) = all.clone().find(|m| m.nrows() != k || m.ncols() != k) {
        return Err(Error::DimensionMismatch(format!(
            "factor is {}x{}, lambda has {k} entries",
            bad.nrows(),
            bad.ncols()
        )));
    }
    Ok(solve_raw(p.entries(), fixed, lambda, settings, warm))
}

/// One alternating run from the initial `D` seeded by `rng_seed + restart_index`.
pub fn run_restart(
    p: &Correlation,
    lambda: &Lambda,
    settings: &SolveSettings,
    restart_index: usize,
) -> Result<SolveOutcome> {
    settings.validate()?;
    let k = lambda.len();
    let pt = p.entries().transpose();
    let seed = settings.rng_seed.wrapping_add(restart_index as u64);
    let mut d = init_factors(seed, k, p.ncols(), k);
    let mut c: Option<Vec<DMatrix<f64>>> = None;
    let mut history = Vec::new();
    let mut converged = false;

    for iter in 0..settings.max_outer_iters {
        let new_c = solve_raw(p.entries(), &d, lambda, &settings.subproblem, c.as_deref());
        // the first D step starts from the (infeasible) random draw, projected
        d = solve_raw(&pt, &new_c, lambda, &settings.subproblem, Some(&d));
        c = Some(new_c);
        let f = block_objective(p.entries(), c.as_deref().unwrap_or_default(), &d);
        history.push(f);
        if f <= settings.residual_tol {
            converged = true;
            break;
        }
        if iter >= settings.stall_window {
            let before = history[iter - settings.stall_window];
            if before - f <= settings.stall_tol * before {
                break;
            }
        }
    }
    let c = c.unwrap_or_default();
    let objective = *history.last().unwrap_or(&f64::INFINITY);
    Ok(SolveOutcome {
        factorization: DiagonalPsdFactorization::new(c, d, lambda.clone())?,
        objective,
        iterations: history.len(),
        restart_index,
        converged,
        history,
    })
}

/// Multi-restart alternating minimization. Restarts run in parallel; the
/// lowest objective wins, ties going to the lower restart index, so the result
/// does not depend on scheduling.
pub fn alternate(p: &Correlation, lambda: &Lambda, settings: &SolveSettings) -> Result<SolveOutcome> {
    settings.validate()?;
    let runs: Vec<SolveOutcome> = (0..settings.restarts)
        .into_par_iter()
        .map(|i| run_restart(p, lambda, settings, i))
        .collect::<Result<_>>()?;
    let best = runs
        .into_iter()
        .reduce(|best, run| if run.objective < best.objective { run } else { best })
        .expect("restarts >= 1");
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verification {
    /// `max |P(x,y) - tr(C_x D_y)|`.
    pub residual: f64,
    /// See [`DiagonalPsdFactorization::feasibility`].
    pub feasibility: f64,
    pub ok: bool,
}

pub fn verify(p: &Correlation, f: &DiagonalPsdFactorization, tol: f64) -> Result<Verification> {
    if f.n() != p.nrows() || f.m() != p.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "factorization is {}x{}, target is {}x{}",
            f.n(),
            f.m(),
            p.nrows(),
            p.ncols()
        )));
    }
    let residual = max_abs(&(p.entries() - f.table()));
    let feasibility = f.feasibility();
    Ok(Verification {
        residual,
        feasibility,
        ok: residual <= tol && feasibility <= tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PurificationKind {
    /// `Σ √P(x,y) |x⟩|y⟩|x⟩|y⟩`.
    Canonical,
    /// The canonical state with a CNOT applied across the two copy registers.
    Cnot,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaCandidate {
    pub construction: PurificationKind,
    pub lambda: Lambda,
}

/// Diagonals `Λ` (sorted descending) that are known to admit a diagonal form
/// of `P`, read off the Schmidt coefficients of explicit purifications. The
/// CNOT construction is only defined for `2 × 2` targets and is omitted
/// otherwise.
pub fn lambda_candidates_from_purifications(p: &Correlation) -> Vec<LambdaCandidate> {
    let mut out = vec![LambdaCandidate {
        construction: PurificationKind::Canonical,
        lambda: Lambda::from_spectrum(&schmidt_spectrum(&canonical_purification(p))),
    }];
    if let Ok(state) = cnot_purification(p) {
        out.push(LambdaCandidate {
            construction: PurificationKind::Cnot,
            lambda: Lambda::from_spectrum(&schmidt_spectrum(&state)),
        });
    }
    out
}

/// A random diagonal-form factorization with `Σ λ = 1`, so that its table is a
/// valid correlation. Factors have random ranks between 1 and `k`.
pub fn random_diagonal_factorization<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    m: usize,
    k: usize,
) -> DiagonalPsdFactorization {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    let lambda = Lambda::from_sqrt(raw.iter().map(|v| v / norm).collect()).expect("positive entries");
    let c = random_family(rng, n, &lambda);
    let d = random_family(rng, m, &lambda);
    DiagonalPsdFactorization::new(c, d, lambda).expect("shapes agree")
}

fn random_family<R: Rng + ?Sized>(rng: &mut R, count: usize, lambda: &Lambda) -> Vec<DMatrix<f64>> {
    let k = lambda.len();
    loop {
        let raw: Vec<DMatrix<f64>> = (0..count)
            .map(|_| {
                let rank = rng.random_range(1..=k);
                let mut g = DMatrix::zeros(k, k);
                for _ in 0..rank {
                    let b = nalgebra::DVector::<f64>::from_fn(k, |_, _| rng.sample(StandardNormal));
                    g += &b * b.transpose();
                }
                g
            })
            .collect();
        let total = sum_of(&raw);
        let eig = SymmetricEigen::new(total.clone());
        if eig.eigenvalues.min() < 1e-6 * eig.eigenvalues.max() {
            continue;
        }
        // W = Λ^{1/2} S^{-1/2} so that Σ W G_x Wᵀ = Λ
        let inv_sqrt = {
            let q = &eig.eigenvectors;
            let mut scaled = q.clone();
            for (j, mut col) in scaled.column_iter_mut().enumerate() {
                col /= eig.eigenvalues[j].sqrt();
            }
            scaled * q.transpose()
        };
        let half = diag_matrix(&lambda.sqrt_entries().iter().map(|v| v.sqrt()).collect::<Vec<_>>());
        let w = &half * inv_sqrt;
        return raw.iter().map(|g| symmetrize(&(&w * g * w.transpose()))).collect();
    }
}
