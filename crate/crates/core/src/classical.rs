//! Classical seeds.
//!
//! Local quantum operations on a classical-classical seed can be replaced by
//! the classical channels `P(x'|x) = Σ_i |⟨x'|E_i|x⟩|²` read off their Kraus
//! operators, so producing `P₂` from `P₁` amounts to finding column-stochastic
//! `A`, `B` with `P₂ = A P₁ Bᵀ`. [`classical_feasible_search`] looks for such a
//! pair heuristically.
//!
//! For diagonal seeds and the target `½ I₂` the entries of `A` and `B` are
//! forced into `{0, 1}`, which turns feasibility into SUBSET-SUM. The builders
//! here produce the quantum and classical hardness instances from a
//! SUBSET-SUM instance, and [`decide_diagonal_to_half_identity`] decides the
//! classical family exactly.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::SchmidtSpectrum;
use crate::correlation::Correlation;
use crate::factorize::{matrix_to_rows, DiagonalPsdFactorization, Lambda};
use crate::linalg::{diag_matrix, max_abs};
use crate::{Error, Result};

/// Tolerance on `Σ E_i† E_i = I`.
pub const TRACE_PRESERVING_TOL: f64 = 1e-8;

/// Largest instance the oracle accepts.
pub const MAX_ORACLE_ITEMS: usize = 50;

/// Instances up to this size are enumerated exhaustively.
const EXHAUSTIVE_ITEMS: usize = 20;

/// Largest half stored in memory by the meet-in-the-middle search.
const MAX_STORED_HALF: usize = 22;

/// `P(x'|x) = Σ_i |⟨x'|E_i|x⟩|²` as a `d' × d` column-stochastic matrix.
pub fn kraus_to_stochastic(kraus: &[DMatrix<Complex64>]) -> Result<DMatrix<f64>> {
    let first = kraus
        .first()
        .ok_or_else(|| Error::DimensionMismatch("no Kraus operators".into()))?;
    let (dout, din) = first.shape();
    if kraus.iter().any(|e| e.shape() != (dout, din)) {
        return Err(Error::DimensionMismatch("Kraus operators differ in shape".into()));
    }
    let mut gram = DMatrix::<Complex64>::zeros(din, din);
    for e in kraus {
        gram += e.adjoint() * e;
    }
    gram -= DMatrix::<Complex64>::identity(din, din);
    let deviation = gram.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    if deviation > TRACE_PRESERVING_TOL {
        return Err(Error::NotTracePreserving(deviation));
    }
    let mut out = DMatrix::zeros(dout, din);
    for e in kraus {
        out += e.map(|z| z.norm_sqr());
    }
    Ok(out)
}

/// Column-stochastic `A` (`k₁ × r₁`) and `B` (`k₂ × r₂`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PairJson", into = "PairJson")]
pub struct StochasticTransformPair {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct PairJson {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
}

fn from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::DimensionMismatch("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

impl TryFrom<PairJson> for StochasticTransformPair {
    type Error = Error;

    fn try_from(json: PairJson) -> Result<Self> {
        StochasticTransformPair::new(from_rows(&json.a)?, from_rows(&json.b)?)
    }
}

impl From<StochasticTransformPair> for PairJson {
    fn from(p: StochasticTransformPair) -> Self {
        PairJson {
            a: p.a.row_iter().map(|r| r.iter().copied().collect()).collect(),
            b: p.b.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }
}

fn check_stochastic(m: &DMatrix<f64>, name: &str) -> Result<DMatrix<f64>> {
    if m.is_empty() {
        return Err(Error::InvalidDistribution(format!("{name} is empty")));
    }
    if let Some(bad) = m.iter().find(|v| !v.is_finite() || **v < -1e-12) {
        return Err(Error::InvalidDistribution(format!("{name} has entry {bad}")));
    }
    let clamped = m.map(|v| v.max(0.0));
    for (j, col) in clamped.column_iter().enumerate() {
        let s = col.sum();
        if (s - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidDistribution(format!("column {j} of {name} sums to {s}")));
        }
    }
    Ok(clamped)
}

impl StochasticTransformPair {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        Ok(StochasticTransformPair {
            a: check_stochastic(&a, "A")?,
            b: check_stochastic(&b, "B")?,
        })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// `A P₁ Bᵀ`.
    pub fn apply(&self, p1: &Correlation) -> Result<DMatrix<f64>> {
        if self.a.ncols() != p1.nrows() || self.b.ncols() != p1.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "pair expects a {}x{} seed, got {}x{}",
                self.a.ncols(),
                self.b.ncols(),
                p1.nrows(),
                p1.ncols()
            )));
        }
        Ok(&self.a * p1.entries() * self.b.transpose())
    }
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

fn project_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let p = project_simplex(col.as_slice());
        col.copy_from_slice(&p);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalSearchSettings {
    pub max_outer_iters: usize,
    pub inner_iters: usize,
    /// Converged once `‖P₂ - A P₁ Bᵀ‖_F²` drops to this.
    pub tol: f64,
    pub stall_tol: f64,
    pub stall_window: usize,
    pub restarts: usize,
    pub rng_seed: u64,
}

impl Default for ClassicalSearchSettings {
    fn default() -> Self {
        ClassicalSearchSettings {
            max_outer_iters: 500,
            inner_iters: 100,
            tol: 1e-9,
            stall_tol: 1e-12,
            stall_window: 10,
            restarts: 10,
            rng_seed: crate::factorize::DEFAULT_RNG_SEED,
        }
    }
}

impl ClassicalSearchSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.stall_tol > 0.0) {
            return Err(Error::InvalidSettings("tolerances must be positive".into()));
        }
        if self.max_outer_iters == 0 || self.inner_iters == 0 || self.restarts == 0 || self.stall_window == 0 {
            return Err(Error::InvalidSettings("iteration counts must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalSearchOutcome {
    pub pair: StochasticTransformPair,
    /// `‖P₂ - A P₁ Bᵀ‖_F²`.
    pub residual: f64,
    pub converged: bool,
    pub restart_index: usize,
    /// Residual after every half-iteration (an `A` update or a `B` update).
    #[serde(skip)]
    pub history: Vec<f64>,
}

fn residual(p2: &DMatrix<f64>, a: &DMatrix<f64>, p1: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (p2 - a * p1 * b.transpose()).norm_squared()
}

/// Minimizes `‖T - X N‖²` over column-stochastic `X` by projected gradient
/// with step `1 / (2 ‖N‖²)`.
fn solve_left(target: &DMatrix<f64>, n: &DMatrix<f64>, start: DMatrix<f64>, iters: usize) -> DMatrix<f64> {
    let lipschitz = 2.0 * n.norm_squared();
    if lipschitz == 0.0 {
        return start;
    }
    let step = 1.0 / lipschitz;
    let mut x = start;
    let mut fx = (target - &x * n).norm_squared();
    for _ in 0..iters {
        let grad = (&x * n - target) * n.transpose() * 2.0;
        let cand = project_columns(&(&x - grad * step));
        let fc = (target - &cand * n).norm_squared();
        let moved = max_abs(&(&cand - &x));
        if fc > fx {
            break;
        }
        x = cand;
        fx = fc;
        if moved < 1e-15 {
            break;
        }
    }
    x
}

fn random_stochastic(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut m = DMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>() + 1e-3);
    for mut col in m.column_iter_mut() {
        let s = col.sum();
        col /= s;
    }
    m
}

fn search_restart(
    p1: &Correlation,
    p2: &Correlation,
    settings: &ClassicalSearchSettings,
    restart_index: usize,
) -> Result<ClassicalSearchOutcome> {
    let (e1, e2) = (p1.entries(), p2.entries());
    let mut rng = ChaCha8Rng::seed_from_u64(settings.rng_seed.wrapping_add(restart_index as u64));
    let mut a = random_stochastic(&mut rng, e2.nrows(), e1.nrows());
    let mut b = random_stochastic(&mut rng, e2.ncols(), e1.ncols());
    let mut history = Vec::new();
    let mut converged = false;
    let e2t = e2.transpose();
    for iter in 0..settings.max_outer_iters {
        // A update: P₂ ≈ A (P₁ Bᵀ)
        a = solve_left(e2, &(e1 * b.transpose()), a, settings.inner_iters);
        history.push(residual(e2, &a, e1, &b));
        // B update: P₂ᵀ ≈ B (P₁ᵀ Aᵀ)
        b = solve_left(&e2t, &(e1.transpose() * a.transpose()), b, settings.inner_iters);
        let f = residual(e2, &a, e1, &b);
        history.push(f);
        if f <= settings.tol {
            converged = true;
            break;
        }
        if iter >= settings.stall_window {
            let before = history[2 * (iter - settings.stall_window) + 1];
            if before - f <= settings.stall_tol * before {
                break;
            }
        }
    }
    Ok(ClassicalSearchOutcome {
        pair: StochasticTransformPair::new(a, b)?,
        residual: *history.last().unwrap_or(&f64::INFINITY),
        converged,
        restart_index,
        history,
    })
}

/// Heuristic search for column-stochastic `A`, `B` with `P₂ = A P₁ Bᵀ`.
/// A result with `converged = false` means no pair was found, not that none
/// exists.
pub fn classical_feasible_search(
    p1: &Correlation,
    p2: &Correlation,
    settings: &ClassicalSearchSettings,
) -> Result<ClassicalSearchOutcome> {
    settings.validate()?;
    let runs: Vec<_> = (0..settings.restarts)
        .into_par_iter()
        .map(|i| search_restart(p1, p2, settings, i))
        .collect::<Result<_>>()?;
    Ok(runs
        .into_iter()
        .reduce(|best, run| if run.residual < best.residual { run } else { best })
        .expect("restarts >= 1"))
}

/// Positive integers `a_1 … a_r`; asks for a subset summing to `Σ a_i / 2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "InstanceJson", into = "InstanceJson")]
pub struct SubsetSumInstance {
    items: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    items: Vec<u64>,
}

impl TryFrom<InstanceJson> for SubsetSumInstance {
    type Error = Error;

    fn try_from(json: InstanceJson) -> Result<Self> {
        SubsetSumInstance::new(json.items)
    }
}

impl From<SubsetSumInstance> for InstanceJson {
    fn from(i: SubsetSumInstance) -> Self {
        InstanceJson { items: i.items }
    }
}

impl SubsetSumInstance {
    pub fn new(items: Vec<u64>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidInstance("no items".into()));
        }
        if items.contains(&0) {
            return Err(Error::InvalidInstance("items must be positive".into()));
        }
        Ok(SubsetSumInstance { items })
    }

    pub fn items(&self) -> &[u64] {
        &self.items
    }

    pub fn total(&self) -> u128 {
        self.items.iter().map(|&v| v as u128).sum()
    }

    /// `λ_i = a_i / Σ a` in item order.
    pub fn weights(&self) -> Vec<f64> {
        let total = self.total() as f64;
        self.items.iter().map(|&v| v as f64 / total).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubsetSumAnswer {
    pub satisfiable: bool,
    /// Item indices of a subset summing to half the total; empty when
    /// unsatisfiable.
    pub witness: Vec<usize>,
}

fn mask_sum(items: &[u64], mask: u64) -> u128 {
    items
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, &v)| v as u128)
        .sum()
}

fn mask_indices(mask: u64, offset: usize) -> Vec<usize> {
    (0..64).filter(|i| mask >> i & 1 == 1).map(|i| i + offset).collect()
}

/// All subset sums of `items` in mask order, built incrementally.
fn all_subset_sums(items: &[u64]) -> Vec<u128> {
    let mut sums = vec![0u128; 1 << items.len()];
    for (i, &v) in items.iter().enumerate() {
        let half = 1usize << i;
        for mask in 0..half {
            sums[half + mask] = sums[mask] + v as u128;
        }
    }
    sums
}

/// Exact SUBSET-SUM for at most [`MAX_ORACLE_ITEMS`] items: exhaustive
/// enumeration up to 20 items, meet-in-the-middle beyond.
pub fn subset_sum_oracle(inst: &SubsetSumInstance) -> Result<SubsetSumAnswer> {
    let items = inst.items();
    let r = items.len();
    if r > MAX_ORACLE_ITEMS {
        return Err(Error::InstanceTooLarge(r));
    }
    let total = inst.total();
    let no = SubsetSumAnswer {
        satisfiable: false,
        witness: Vec::new(),
    };
    if total % 2 == 1 {
        return Ok(no);
    }
    let target = total / 2;

    if r <= EXHAUSTIVE_ITEMS {
        let sums = all_subset_sums(items);
        return Ok(match sums.iter().position(|&s| s == target) {
            Some(mask) => SubsetSumAnswer {
                satisfiable: true,
                witness: mask_indices(mask as u64, 0),
            },
            None => no,
        });
    }

    let left_len = (r / 2).min(MAX_STORED_HALF);
    let (left, right) = items.split_at(left_len);
    let mut stored: Vec<(u128, u32)> = all_subset_sums(left)
        .into_iter()
        .enumerate()
        .map(|(mask, s)| (s, mask as u32))
        .collect();
    stored.sort_unstable();
    let found = (0u64..1 << right.len()).into_par_iter().find_map_first(|mask| {
        let s = mask_sum(right, mask);
        if s > target {
            return None;
        }
        let need = target - s;
        let at = stored.partition_point(|&(v, _)| v < need);
        match stored.get(at) {
            Some(&(v, lmask)) if v == need => Some((lmask as u64, mask)),
            _ => None,
        }
    });
    Ok(match found {
        Some((lmask, rmask)) => {
            let mut witness = mask_indices(lmask, 0);
            witness.extend(mask_indices(rmask, left_len));
            SubsetSumAnswer {
                satisfiable: true,
                witness,
            }
        }
        None => no,
    })
}

/// The target `½ I₂`.
pub fn half_identity() -> Correlation {
    Correlation::diagonal(&[0.5, 0.5]).expect("valid")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantumHardnessInstance {
    /// `λ_i = a_i / Σ a`, sorted descending.
    pub spectrum: SchmidtSpectrum,
    /// `item_order[i]` is the item behind `spectrum.lambdas()[i]`.
    pub item_order: Vec<usize>,
    pub target: Correlation,
}

impl QuantumHardnessInstance {
    /// Spectrum positions of the given item indices.
    pub fn positions_of(&self, items: &[usize]) -> Vec<usize> {
        items
            .iter()
            .filter_map(|it| self.item_order.iter().position(|o| o == it))
            .collect()
    }
}

pub fn build_quantum_hardness_instance(inst: &SubsetSumInstance) -> Result<QuantumHardnessInstance> {
    let mut item_order: Vec<usize> = (0..inst.items().len()).collect();
    // stable, so equal items keep their input order, as SchmidtSpectrum's sort does
    item_order.sort_by(|&i, &j| inst.items()[j].cmp(&inst.items()[i]));
    Ok(QuantumHardnessInstance {
        spectrum: SchmidtSpectrum::new(inst.weights())?,
        item_order,
        target: half_identity(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalHardnessInstance {
    /// `diag(λ_1, …, λ_r)` in item order.
    pub seed: Correlation,
    pub target: Correlation,
}

pub fn build_classical_hardness_instance(inst: &SubsetSumInstance) -> Result<ClassicalHardnessInstance> {
    Ok(ClassicalHardnessInstance {
        seed: Correlation::diagonal(&inst.weights())?,
        target: half_identity(),
    })
}

/// Exact answer for a diagonal seed and target `½ I₂`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactDecision {
    pub feasible: bool,
    /// `A = B` with 0/1 entries grouping the seed's outcomes; present when
    /// feasible.
    pub pair: Option<StochasticTransformPair>,
}

fn grouping_pair(r: usize, first_group: &[usize]) -> Result<StochasticTransformPair> {
    let a = DMatrix::from_fn(2, r, |row, j| {
        let in_first = first_group.contains(&j);
        f64::from(u8::from((row == 0) == in_first))
    });
    StochasticTransformPair::new(a.clone(), a)
}

/// Decides whether the diagonal seed of `inst` can reach `½ I₂`.
///
/// `P₂(1,2) = 0` forces `A(1,j) B(2,j) = A(2,j) B(1,j) = 0` for every `j`,
/// so with unit column sums `A = B` is a 0/1 grouping matrix and the diagonal
/// of `P₂` is the mass of a group of outcomes and of its complement.
/// Feasibility is therefore exactly the question of a group with half the
/// total weight, answered here by a table of reachable integer sums.
pub fn decide_diagonal_to_half_identity(inst: &SubsetSumInstance) -> Result<ExactDecision> {
    let items = inst.items();
    if items.len() > MAX_ORACLE_ITEMS {
        return Err(Error::InstanceTooLarge(items.len()));
    }
    let total = inst.total();
    let infeasible = ExactDecision {
        feasible: false,
        pair: None,
    };
    if total % 2 == 1 {
        return Ok(infeasible);
    }
    let half = total / 2;
    if items.len() > EXHAUSTIVE_ITEMS + 4 {
        // the table can grow like 2^r; large instances go through the oracle
        let answer = subset_sum_oracle(inst)?;
        return Ok(match answer.satisfiable {
            true => ExactDecision {
                feasible: true,
                pair: Some(grouping_pair(items.len(), &answer.witness)?),
            },
            false => infeasible,
        });
    }
    // reachable sum -> first group of outcomes reaching it
    let mut reach: std::collections::BTreeMap<u128, u64> = std::collections::BTreeMap::new();
    reach.insert(0, 0);
    for (j, &a) in items.iter().enumerate() {
        let grown: Vec<(u128, u64)> = reach
            .iter()
            .map(|(&s, &g)| (s + a as u128, g | 1 << j))
            .filter(|&(s, _)| s <= half)
            .collect();
        for (s, g) in grown {
            reach.entry(s).or_insert(g);
        }
        if let Some(&group) = reach.get(&half) {
            return Ok(ExactDecision {
                feasible: true,
                pair: Some(grouping_pair(items.len(), &mask_indices(group, 0))?),
            });
        }
    }
    Ok(infeasible)
}

/// Floating-point variant for a diagonal seed given as a correlation: looks
/// for a group of outcomes with mass `½` within `tol`. Errors unless the seed
/// is diagonal and the target is `½ I₂`.
pub fn decide_diagonal_seed(seed: &Correlation, target: &Correlation, tol: f64) -> Result<ExactDecision> {
    let half = half_identity();
    if target.nrows() != 2 || target.ncols() != 2 || max_abs(&(target.entries() - half.entries())) > tol {
        return Err(Error::Unsupported("the exact path needs the target ½·I₂".into()));
    }
    let e = seed.entries();
    let r = e.nrows();
    let off_diagonal = (0..r)
        .flat_map(|i| (0..e.ncols()).map(move |j| (i, j)))
        .any(|(i, j)| i != j && e[(i, j)] > tol);
    if e.ncols() != r || off_diagonal {
        return Err(Error::Unsupported("the exact path needs a diagonal seed".into()));
    }
    if r > MAX_ORACLE_ITEMS {
        return Err(Error::InstanceTooLarge(r));
    }
    let weights: Vec<f64> = (0..r).map(|i| e[(i, i)]).collect();
    let found = find_half_mass(&weights, tol);
    Ok(match found {
        Some(group) => ExactDecision {
            feasible: true,
            pair: Some(grouping_pair(r, &group)?),
        },
        None => ExactDecision {
            feasible: false,
            pair: None,
        },
    })
}

/// Sorted two-list search over floating subset masses.
fn find_half_mass(weights: &[f64], tol: f64) -> Option<Vec<usize>> {
    let split = weights.len() / 2;
    let (left, right) = weights.split_at(split);
    let masses = |part: &[f64]| -> Vec<(f64, u64)> {
        let mut out = vec![(0.0, 0u64)];
        for (i, &w) in part.iter().enumerate() {
            let grown: Vec<_> = out.iter().map(|&(s, m)| (s + w, m | 1 << i)).collect();
            out.extend(grown);
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    };
    let l = masses(left);
    let rgt = masses(right);
    // two pointers: l ascending, rgt descending
    let (mut i, mut j) = (0usize, rgt.len());
    while i < l.len() && j > 0 {
        let s = l[i].0 + rgt[j - 1].0;
        if (s - 0.5).abs() <= tol {
            let mut group = mask_indices(l[i].1, 0);
            group.extend(mask_indices(rgt[j - 1].1, split));
            return Some(group);
        }
        if s < 0.5 {
            i += 1;
        } else {
            j -= 1;
        }
    }
    None
}

/// Measure in the Schmidt basis and report whether the outcome lies in
/// `subset` (spectrum positions): `C₁ = D₁ = diag(√λ_i)` over the subset,
/// `C₂ = D₂` over the complement.
pub fn schmidt_basis_protocol(spectrum: &SchmidtSpectrum, subset: &[usize]) -> Result<DiagonalPsdFactorization> {
    let lambdas = spectrum.lambdas();
    if let Some(&bad) = subset.iter().find(|&&i| i >= lambdas.len()) {
        return Err(Error::DimensionMismatch(format!(
            "index {bad} outside a spectrum of rank {}",
            lambdas.len()
        )));
    }
    let mut inside = vec![false; lambdas.len()];
    for &i in subset {
        inside[i] = true;
    }
    let mass: f64 = (0..lambdas.len()).filter(|&i| inside[i]).map(|i| lambdas[i]).sum();
    if (mass - 0.5).abs() > 1e-10 {
        return Err(Error::SubsetMass(mass));
    }
    let coeffs = spectrum.coefficients();
    let part = |want: bool| -> DMatrix<f64> {
        diag_matrix(
            &coeffs
                .iter()
                .zip(&inside)
                .map(|(&c, &b)| if b == want { c } else { 0.0 })
                .collect::<Vec<_>>(),
        )
    };
    let (first, second) = (part(true), part(false));
    DiagonalPsdFactorization::new(
        vec![first.clone(), second.clone()],
        vec![first, second],
        Lambda::from_spectrum(spectrum),
    )
}

/// JSON rows of a stochastic matrix.
pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    matrix_to_rows(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorize::verify;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kraus_examples() {
        let id = DMatrix::<Complex64>::identity(2, 2);
        assert_abs_diff_eq!(kraus_to_stochastic(&[id]).unwrap(), DMatrix::identity(2, 2), epsilon = 1e-15);

        let h = 0.5f64.sqrt();
        let had = DMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)]);
        let s = kraus_to_stochastic(&[had]).unwrap();
        assert!(s.iter().all(|&v| (v - 0.5).abs() < 1e-12));

        // depolarizing channel with p = 0.3
        let p = 0.3f64;
        let x = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let y = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let z = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        let kraus = vec![
            DMatrix::<Complex64>::identity(2, 2) * c((1.0 - p).sqrt(), 0.0),
            x * c((p / 3.0).sqrt(), 0.0),
            y * c((p / 3.0).sqrt(), 0.0),
            z * c((p / 3.0).sqrt(), 0.0),
        ];
        let s = kraus_to_stochastic(&kraus).unwrap();
        let flip = 2.0 * p / 3.0;
        let expect = DMatrix::from_row_slice(2, 2, &[1.0 - flip, flip, flip, 1.0 - flip]);
        assert_abs_diff_eq!(s, expect, epsilon = 1e-12);

        let lossy = DMatrix::<Complex64>::identity(2, 2) * c(0.9, 0.0);
        assert!(matches!(kraus_to_stochastic(&[lossy]), Err(Error::NotTracePreserving(_))));
        assert!(kraus_to_stochastic(&[]).is_err());
    }

    #[test]
    fn simplex_projection() {
        assert_eq!(project_simplex(&[0.2, 0.8]), vec![0.2, 0.8]);
        let p = project_simplex(&[2.0, 0.0]);
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-15);
        let p = project_simplex(&[0.5, 0.5, 0.5]);
        for v in p {
            assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn pair_validation_and_json() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.0, 0.7]);
        let pair = StochasticTransformPair::new(a.clone(), a.clone()).unwrap();
        let s = serde_json::to_string(&pair).unwrap();
        assert!(s.contains("\"A\"") && s.contains("\"B\""));
        let back: StochasticTransformPair = serde_json::from_str(&s).unwrap();
        assert_eq!(back, pair);
        let bad = DMatrix::from_row_slice(2, 1, &[0.5, 0.6]);
        assert!(StochasticTransformPair::new(bad, a).is_err());
    }

    #[test]
    fn search_identity() {
        let p = Correlation::from_rows(&[vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
        let out = classical_feasible_search(&p, &p, &ClassicalSearchSettings::default()).unwrap();
        assert!(out.converged, "{}", out.residual);
    }

    #[test]
    fn search_grouping_example() {
        let p1 = Correlation::diagonal(&[1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]).unwrap();
        let out = classical_feasible_search(&p1, &half_identity(), &ClassicalSearchSettings::default()).unwrap();
        assert!(out.converged, "{}", out.residual);
    }

    #[test]
    fn search_infeasible_example() {
        let p1 = Correlation::diagonal(&[0.25, 0.75]).unwrap();
        let out = classical_feasible_search(&p1, &half_identity(), &ClassicalSearchSettings::default()).unwrap();
        assert!(!out.converged);
        assert!(out.residual > 1e-3, "{}", out.residual);
    }

    #[test]
    fn search_history_is_monotone() {
        let p1 = Correlation::diagonal(&[0.2, 0.3, 0.5]).unwrap();
        let p2 = Correlation::from_rows(&[vec![0.3, 0.1], vec![0.2, 0.4]]).unwrap();
        for i in 0..5 {
            let out = search_restart(&p1, &p2, &ClassicalSearchSettings::default(), i).unwrap();
            for w in out.history.windows(2) {
                assert!(w[1] <= w[0] + 1e-15);
            }
        }
    }

    #[test]
    fn oracle_examples() {
        let ans = subset_sum_oracle(&SubsetSumInstance::new(vec![1, 2, 3]).unwrap()).unwrap();
        assert!(ans.satisfiable);
        let sum: u64 = ans.witness.iter().map(|&i| [1, 2, 3][i]).sum();
        assert_eq!(sum, 3);
        assert!(!subset_sum_oracle(&SubsetSumInstance::new(vec![1, 1, 1]).unwrap()).unwrap().satisfiable);
        let ans = subset_sum_oracle(&SubsetSumInstance::new(vec![5, 5]).unwrap()).unwrap();
        assert_eq!(ans.witness.len(), 1);
        assert!(!subset_sum_oracle(&SubsetSumInstance::new(vec![2, 3]).unwrap()).unwrap().satisfiable);
        let big = SubsetSumInstance::new(vec![1; 51]).unwrap();
        assert!(matches!(subset_sum_oracle(&big), Err(Error::InstanceTooLarge(51))));
        assert!(SubsetSumInstance::new(vec![]).is_err());
        assert!(SubsetSumInstance::new(vec![0, 1]).is_err());
    }

    #[test]
    fn oracle_meet_in_the_middle() {
        // 24 items: the only witnesses pair 2^21 with one of the two small items
        let mut items: Vec<u64> = (0..22).map(|i| 1u64 << i).collect();
        items.push(1);
        items.push(2);
        let inst = SubsetSumInstance::new(items.clone()).unwrap();
        let ans = subset_sum_oracle(&inst).unwrap();
        assert!(ans.satisfiable);
        let s: u128 = ans.witness.iter().map(|&i| items[i] as u128).sum();
        assert_eq!(s * 2, inst.total());

        let odd_heavy: Vec<u64> = (0..23).map(|_| 2).chain([1_000_001, 1]).collect();
        let inst = SubsetSumInstance::new(odd_heavy).unwrap();
        assert!(!subset_sum_oracle(&inst).unwrap().satisfiable);
    }

    #[test]
    fn builders() {
        let q = build_quantum_hardness_instance(&SubsetSumInstance::new(vec![1, 2, 3]).unwrap()).unwrap();
        assert_abs_diff_eq!(q.spectrum.lambdas()[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(q.spectrum.lambdas()[1], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.spectrum.lambdas()[2], 1.0 / 6.0, epsilon = 1e-15);
        assert_eq!(q.item_order, vec![2, 1, 0]);
        assert_eq!(q.target, half_identity());
        let c = build_classical_hardness_instance(&SubsetSumInstance::new(vec![1, 1]).unwrap()).unwrap();
        assert_eq!(c.seed, half_identity());
    }

    #[test]
    fn protocol_examples() {
        let s = SchmidtSpectrum::new(vec![0.5, 0.5]).unwrap();
        let f = schmidt_basis_protocol(&s, &[0]).unwrap();
        assert!(verify(&half_identity(), &f, 1e-12).unwrap().ok);
        assert!(matches!(schmidt_basis_protocol(&s, &[]), Err(Error::SubsetMass(_))));

        let s = SchmidtSpectrum::new(vec![0.5, 1.0 / 3.0, 1.0 / 6.0]).unwrap();
        let f = schmidt_basis_protocol(&s, &[1, 2]).unwrap();
        assert!(verify(&half_identity(), &f, 1e-12).unwrap().ok);
        assert!(schmidt_basis_protocol(&s, &[3]).is_err());
    }

    #[test]
    fn exact_decisions() {
        for (items, feasible) in [(vec![1, 1], true), (vec![1, 2, 3], true), (vec![2, 3], false), (vec![1, 3], false)] {
            let inst = SubsetSumInstance::new(items).unwrap();
            let d = decide_diagonal_to_half_identity(&inst).unwrap();
            assert_eq!(d.feasible, feasible);
            let seed = build_classical_hardness_instance(&inst).unwrap().seed;
            if let Some(pair) = &d.pair {
                let out = pair.apply(&seed).unwrap();
                assert!(max_abs(&(out - half_identity().entries())) < 1e-12);
            }
            let f = decide_diagonal_seed(&seed, &half_identity(), 1e-12).unwrap();
            assert_eq!(f.feasible, feasible);
        }
        let not_diag = Correlation::from_rows(&[vec![0.5, 0.1], vec![0.0, 0.4]]).unwrap();
        assert!(decide_diagonal_seed(&not_diag, &half_identity(), 1e-12).is_err());
    }

    proptest! {
        #[test]
        fn kraus_output_is_stochastic(seed in 0u64..1000, d in 1usize..4, count in 1usize..4) {
            // random isometry split into Kraus blocks
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows = d * count;
            let g = DMatrix::<Complex64>::from_fn(rows, d, |_, _| {
                c(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            let q = g.qr().q();
            let kraus: Vec<_> = (0..count).map(|i| q.rows(i * d, d).into_owned()).collect();
            let s = kraus_to_stochastic(&kraus).unwrap();
            for col in s.column_iter() {
                prop_assert!((col.sum() - 1.0).abs() < 1e-8);
            }
        }

        #[test]
        fn simplex_projection_is_feasible_and_closest(v in proptest::collection::vec(-3.0f64..3.0, 1..8)) {
            let p = project_simplex(&v);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            // optimality: <v - p, q - p> <= 0 for simplex vertices q
            for k in 0..v.len() {
                let inner: f64 = (0..v.len())
                    .map(|i| (v[i] - p[i]) * (f64::from(u8::from(i == k)) - p[i]))
                    .sum();
                prop_assert!(inner <= 1e-10);
            }
        }

        #[test]
        fn quantum_reduction(items in proptest::collection::vec(1u64..20, 1..=12)) {
            let inst = SubsetSumInstance::new(items.clone()).unwrap();
            let ans = subset_sum_oracle(&inst).unwrap();
            let q = build_quantum_hardness_instance(&inst).unwrap();
            if ans.satisfiable {
                let f = schmidt_basis_protocol(&q.spectrum, &q.positions_of(&ans.witness)).unwrap();
                prop_assert!(verify(&q.target, &f, 1e-10).unwrap().ok);
            } else {
                prop_assert!(ans.witness.is_empty());
            }
        }

        #[test]
        fn classical_exact_paths_agree(items in proptest::collection::vec(1u64..30, 1..=12)) {
            let inst = SubsetSumInstance::new(items).unwrap();
            let oracle = subset_sum_oracle(&inst).unwrap().satisfiable;
            let seed = build_classical_hardness_instance(&inst).unwrap().seed;
            let exact = decide_diagonal_to_half_identity(&inst).unwrap();
            let float = decide_diagonal_seed(&seed, &half_identity(), 1e-12).unwrap();
            prop_assert_eq!(exact.feasible, oracle);
            prop_assert_eq!(float.feasible, oracle);
        }
    }
}
