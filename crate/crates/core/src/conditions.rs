//! Necessary conditions for a pure seed to produce a target correlation.
//!
//! Every check compares a seed-side quantity (a function of the squared
//! Schmidt coefficients `λ`) with a target-side quantity computed from `P`.
//! All conditions are necessary only: a failed record rules the pair out, but
//! passing every record proves nothing. The verdict vocabulary is therefore
//! limited to [`Verdict::RuledOut`] and [`Verdict::NotRuledOut`].
//!
//! Comparisons carry a slack of [`SLACK`] (scaled by the magnitude of the
//! compared quantities once they exceed one) in the seed's favour, so
//! floating-point ties never produce a false rejection.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::correlation::{
    classical_fidelity, marginal_x, marginal_y, mutual_information, shannon_entropy, Correlation,
};
use crate::{Error, Result};

pub const SLACK: f64 = 1e-10;

/// Squared Schmidt coefficients `λ_1 ≥ … ≥ λ_r > 0`, summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchmidtSpectrum {
    lambdas: Vec<f64>,
}

impl SchmidtSpectrum {
    /// Accepts nonnegative weights in any order. Zeros are dropped, the rest
    /// are sorted descending and rescaled to unit mass if needed.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(bad) = weights.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidSpectrum(format!("entry {bad} is not a nonnegative number")));
        }
        let mut lambdas: Vec<f64> = weights.into_iter().filter(|&v| v > 0.0).collect();
        if lambdas.is_empty() {
            return Err(Error::InvalidSpectrum("no positive entries".into()));
        }
        lambdas.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = lambdas.iter().sum();
        if (total - 1.0).abs() > crate::correlation::MASS_TOL {
            lambdas.iter_mut().for_each(|v| *v /= total);
        }
        Ok(SchmidtSpectrum { lambdas })
    }

    /// From Schmidt coefficients `√λ_i` (amplitudes, not probabilities).
    pub fn from_coefficients(coefficients: &[f64]) -> Result<Self> {
        if let Some(bad) = coefficients.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidSpectrum(format!("coefficient {bad} is negative")));
        }
        Self::new(coefficients.iter().map(|c| c * c).collect())
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// The Schmidt coefficients `√λ_i`.
    pub fn coefficients(&self) -> Vec<f64> {
        self.lambdas.iter().map(|l| l.sqrt()).collect()
    }

    pub fn rank(&self) -> usize {
        self.lambdas.len()
    }

    /// `λ_r`, the smallest squared coefficient.
    pub fn smallest(&self) -> f64 {
        *self.lambdas.last().expect("spectrum is never empty")
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.lambdas.iter().map(|l| l * l).sum()
    }

    /// Entanglement entropy `-Σ λ log₂ λ`.
    pub fn entropy(&self) -> f64 {
        shannon_entropy(&self.lambdas)
    }
}

/// A Rényi order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alpha {
    Finite(f64),
    Infinity,
}

impl Alpha {
    pub fn validate(self) -> Result<Self> {
        match self {
            Alpha::Infinity => Ok(self),
            Alpha::Finite(a) if a.is_infinite() && a > 0.0 => Ok(Alpha::Infinity),
            Alpha::Finite(a) if (0.5..1.0).contains(&a) || (a > 1.0 && a.is_finite()) => Ok(self),
            Alpha::Finite(a) => Err(Error::InvalidAlpha(a)),
        }
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Finite(a) => write!(f, "{a}"),
            Alpha::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for Alpha {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if matches!(s.to_ascii_lowercase().as_str(), "inf" | "infinity" | "∞") {
            return Ok(Alpha::Infinity);
        }
        let value: f64 = s
            .parse()
            .map_err(|_| Error::InvalidSettings(format!("cannot parse alpha {s:?}")))?;
        Alpha::Finite(value).validate()
    }
}

impl Serialize for Alpha {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Alpha::Finite(a) => serializer.serialize_f64(*a),
            Alpha::Infinity => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Alpha {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let alpha = match Raw::deserialize(deserializer)? {
            Raw::Num(a) => Alpha::Finite(a).validate(),
            Raw::Text(s) => s.parse(),
        };
        alpha.map_err(serde::de::Error::custom)
    }
}

/// `{0.5, 0.75, 2, 3, ∞}`: both Rényi regimes plus the closed-form limit.
pub fn default_alphas() -> Vec<Alpha> {
    vec![
        Alpha::Finite(0.5),
        Alpha::Finite(0.75),
        Alpha::Finite(2.0),
        Alpha::Finite(3.0),
        Alpha::Infinity,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    /// Sandwiched Rényi mutual-information monotonicity.
    Renyi,
    /// Upper bound on the smallest squared Schmidt coefficient.
    MinSchmidt,
    /// Holevo-type bound `I(P) ≤ H(λ)`.
    Holevo,
    /// Plain mutual-information monotonicity `I(P) ≤ 2 H(λ)`.
    MutualInformation,
    /// `Σ λ² ≤ 1 - V′₂² / r`.
    V2,
    /// `Σ_ij F(P_i, P_j)² ≥ Σ λ²`.
    FidelitySum,
}

impl fmt::Display for ConditionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ConditionKind::Renyi => "renyi",
            ConditionKind::MinSchmidt => "min_schmidt",
            ConditionKind::Holevo => "holevo",
            ConditionKind::MutualInformation => "mutual_information",
            ConditionKind::V2 => "v2",
            ConditionKind::FidelitySum => "fidelity_sum",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRecord {
    pub name: ConditionKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha: Option<Alpha>,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl ConditionRecord {
    fn new(name: ConditionKind, lhs: f64, rhs: f64, satisfied: bool) -> Self {
        ConditionRecord {
            name,
            alpha: None,
            lhs,
            rhs,
            satisfied,
            note: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    RuledOut,
    NotRuledOut,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::RuledOut => "RULED_OUT",
            Verdict::NotRuledOut => "NOT_RULED_OUT",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub conditions: Vec<ConditionRecord>,
    pub verdict: Verdict,
}

impl ConditionReport {
    pub fn from_records(conditions: Vec<ConditionRecord>) -> Self {
        let verdict = if conditions.iter().all(|c| c.satisfied) {
            Verdict::NotRuledOut
        } else {
            Verdict::RuledOut
        };
        ConditionReport {
            conditions,
            verdict,
        }
    }

    pub fn find(&self, kind: ConditionKind) -> Option<&ConditionRecord> {
        self.conditions.iter().find(|c| c.name == kind)
    }

    pub fn failed(&self) -> impl Iterator<Item = &ConditionRecord> {
        self.conditions.iter().filter(|c| !c.satisfied)
    }
}

fn slack(a: f64, b: f64) -> f64 {
    SLACK * a.abs().max(b.abs()).max(1.0)
}

fn at_most(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + slack(lhs, rhs)
}

fn at_least(lhs: f64, rhs: f64) -> bool {
    lhs >= rhs - slack(lhs, rhs)
}

/// Rényi conditions for each order in `alphas`.
///
/// Seed side: `(Σ λ_i^{2/α-1})^α`, or `Σ 1/λ_i` at `α = ∞`. Target side:
/// `Σ P^α / (P(x)P(y))^{α-1}` over cells with positive mass, or
/// `max P / (P(x)P(y))` at `α = ∞`.
pub fn check_renyi(
    spectrum: &SchmidtSpectrum,
    p: &Correlation,
    alphas: &[Alpha],
) -> Result<Vec<ConditionRecord>> {
    let px = marginal_x(p);
    let py = marginal_y(p);
    let cells: Vec<(f64, f64)> = (0..p.nrows())
        .flat_map(|x| (0..p.ncols()).map(move |y| (x, y)))
        .filter(|&(x, y)| p.get(x, y) > 0.0 && px[x] > 0.0 && py[y] > 0.0)
        .map(|(x, y)| (p.get(x, y), px[x] * py[y]))
        .collect();

    alphas
        .iter()
        .map(|&alpha| {
            let alpha = alpha.validate()?;
            let (lhs, rhs, satisfied) = match alpha {
                Alpha::Infinity => {
                    let lhs: f64 = spectrum.lambdas.iter().map(|l| 1.0 / l).sum();
                    let rhs = cells.iter().map(|(pxy, prod)| pxy / prod).fold(0.0, f64::max);
                    (lhs, rhs, at_least(lhs, rhs))
                }
                Alpha::Finite(a) => {
                    let exponent = 2.0 / a - 1.0;
                    let lhs = spectrum
                        .lambdas
                        .iter()
                        .map(|l| l.powf(exponent))
                        .sum::<f64>()
                        .powf(a);
                    let rhs: f64 = cells
                        .iter()
                        .map(|(pxy, prod)| pxy.powf(a) / prod.powf(a - 1.0))
                        .sum();
                    let ok = if a < 1.0 { at_most(lhs, rhs) } else { at_least(lhs, rhs) };
                    (lhs, rhs, ok)
                }
            };
            Ok(ConditionRecord {
                alpha: Some(alpha),
                ..ConditionRecord::new(ConditionKind::Renyi, lhs, rhs, satisfied)
            })
        })
        .collect()
}

/// The target-side bound `min_{P(x,y)>0} P(x)P(y) / P(x,y)` on `λ_r`.
pub fn min_schmidt_bound(p: &Correlation) -> f64 {
    let px = marginal_x(p);
    let py = marginal_y(p);
    let mut bound = f64::INFINITY;
    for x in 0..p.nrows() {
        for y in 0..p.ncols() {
            let pxy = p.get(x, y);
            if pxy > 0.0 {
                bound = bound.min(px[x] * py[y] / pxy);
            }
        }
    }
    bound
}

pub fn check_min_schmidt(spectrum: &SchmidtSpectrum, p: &Correlation) -> ConditionRecord {
    let lhs = spectrum.smallest();
    let rhs = min_schmidt_bound(p);
    ConditionRecord::new(ConditionKind::MinSchmidt, lhs, rhs, at_most(lhs, rhs))
}

/// `I(P) ≤ -Σ λ log₂ λ`.
pub fn check_holevo(spectrum: &SchmidtSpectrum, p: &Correlation) -> ConditionRecord {
    let lhs = mutual_information(p);
    let rhs = spectrum.entropy();
    ConditionRecord::new(ConditionKind::Holevo, lhs, rhs, at_most(lhs, rhs))
}

/// The weaker baseline `I(P) ≤ -2 Σ λ log₂ λ` from monotonicity of mutual
/// information, reported next to [`check_holevo`] for comparison.
pub fn check_mutual_information(spectrum: &SchmidtSpectrum, p: &Correlation) -> ConditionRecord {
    let lhs = mutual_information(p);
    let rhs = 2.0 * spectrum.entropy();
    ConditionRecord::new(ConditionKind::MutualInformation, lhs, rhs, at_most(lhs, rhs))
}

/// `V′₂ = Σ_y (Σ_x P(x) |P(y|x) - P(y)|²)^{1/2}`, skipping rows with zero mass.
pub fn v2_classical(p: &Correlation) -> f64 {
    let px = marginal_x(p);
    let py = marginal_y(p);
    (0..p.ncols())
        .map(|y| {
            (0..p.nrows())
                .filter(|&x| px[x] > 0.0)
                .map(|x| {
                    let dev = p.get(x, y) / px[x] - py[y];
                    px[x] * dev * dev
                })
                .sum::<f64>()
                .sqrt()
        })
        .sum()
}

/// `Σ λ² ≤ 1 - V′₂² / r`, with `r` the seed's Schmidt rank.
pub fn check_v2(spectrum: &SchmidtSpectrum, p: &Correlation) -> ConditionRecord {
    let r = spectrum.rank();
    let v2 = v2_classical(p);
    let lhs = spectrum.sum_of_squares();
    let rhs = 1.0 - v2 * v2 / r as f64;
    let mut record = ConditionRecord::new(ConditionKind::V2, lhs, rhs, at_most(lhs, rhs));
    if r > p.nrows().min(p.ncols()) {
        record.note = Some(format!(
            "r = {r} is the seed Schmidt rank and exceeds min(n, m) = {}, an upper bound on the PSD rank of the target",
            p.nrows().min(p.ncols())
        ));
    }
    record
}

/// `Σ_ij F(P_i, P_j)²` over the unnormalized rows of `P`.
pub fn fidelity_sum(p: &Correlation) -> f64 {
    let rows = p.rows();
    let rows = rows.rows();
    let mut total = 0.0;
    for a in rows {
        for b in rows {
            // rows of one matrix always have equal length
            let f = classical_fidelity(a, b).unwrap_or(0.0);
            total += f * f;
        }
    }
    total
}

pub fn check_fidelity_sum(spectrum: &SchmidtSpectrum, p: &Correlation) -> ConditionRecord {
    let lhs = fidelity_sum(p);
    let rhs = spectrum.sum_of_squares();
    ConditionRecord::new(ConditionKind::FidelitySum, lhs, rhs, at_least(lhs, rhs))
}

/// Runs every check. Rényi records come first, one per order.
pub fn check_all(
    spectrum: &SchmidtSpectrum,
    p: &Correlation,
    alphas: &[Alpha],
) -> Result<ConditionReport> {
    let mut records = check_renyi(spectrum, p, alphas)?;
    records.push(check_min_schmidt(spectrum, p));
    records.push(check_holevo(spectrum, p));
    records.push(check_mutual_information(spectrum, p));
    records.push(check_v2(spectrum, p));
    records.push(check_fidelity_sum(spectrum, p));
    Ok(ConditionReport::from_records(records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn spectrum(v: &[f64]) -> SchmidtSpectrum {
        SchmidtSpectrum::new(v.to_vec()).unwrap()
    }

    fn corr(rows: &[&[f64]]) -> Correlation {
        Correlation::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn example1() -> Correlation {
        Correlation::diagonal(&[0.3, 0.7]).unwrap()
    }

    fn example3() -> Correlation {
        corr(&[&[2.0, 6.0], &[3.0, 0.0]])
    }

    fn example5() -> Correlation {
        corr(&[&[4.0, 1.0, 1.0], &[1.0, 1.0, 0.0], &[1.0, 0.0, 1.0]])
    }

    #[test]
    fn spectrum_normalizes_and_sorts() {
        let s = spectrum(&[1.0, 0.0, 3.0]);
        assert_eq!(s.lambdas(), &[0.75, 0.25]);
        assert_eq!(s.rank(), 2);
        assert!(SchmidtSpectrum::new(vec![]).is_err());
        assert!(SchmidtSpectrum::new(vec![0.5, -0.5]).is_err());
        let c = SchmidtSpectrum::from_coefficients(&[1.0 / 3.0, 8f64.sqrt() / 3.0]).unwrap();
        assert_abs_diff_eq!(c.lambdas()[0], 8.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn alpha_parsing() {
        assert_eq!("inf".parse::<Alpha>().unwrap(), Alpha::Infinity);
        assert_eq!("0.5".parse::<Alpha>().unwrap(), Alpha::Finite(0.5));
        assert!("1".parse::<Alpha>().is_err());
        assert!("0.4".parse::<Alpha>().is_err());
        assert!("abc".parse::<Alpha>().is_err());
        let s = serde_json::to_string(&Alpha::Infinity).unwrap();
        assert_eq!(s, r#""inf""#);
        assert_eq!(serde_json::from_str::<Alpha>("2.0").unwrap(), Alpha::Finite(2.0));
    }

    #[test]
    fn renyi_infinity_example1() {
        let recs = check_renyi(&spectrum(&[0.5, 0.5]), &example1(), &[Alpha::Infinity]).unwrap();
        assert_abs_diff_eq!(recs[0].lhs, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(recs[0].rhs, 1.0 / 0.3, epsilon = 1e-12);
        assert!(recs[0].satisfied);
    }

    #[test]
    fn renyi_product_target_always_passes() {
        let p = Correlation::product(&[0.3, 0.7], &[0.2, 0.5, 0.3]).unwrap();
        for s in [&[1.0][..], &[0.5, 0.5], &[0.9, 0.05, 0.05]] {
            let recs = check_renyi(&spectrum(s), &p, &default_alphas()).unwrap();
            assert!(recs.iter().all(|r| r.satisfied), "{recs:?}");
        }
    }

    #[test]
    fn renyi_product_seed_cannot_make_a_bit() {
        let p = Correlation::diagonal(&[0.5, 0.5]).unwrap();
        let recs = check_renyi(&spectrum(&[1.0]), &p, &[Alpha::Finite(2.0)]).unwrap();
        assert_abs_diff_eq!(recs[0].lhs, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(recs[0].rhs, 2.0, epsilon = 1e-12);
        assert!(!recs[0].satisfied);
    }

    #[test]
    fn renyi_rejects_bad_orders() {
        let s = spectrum(&[1.0]);
        let p = example1();
        assert_eq!(
            check_renyi(&s, &p, &[Alpha::Finite(1.0)]),
            Err(Error::InvalidAlpha(1.0))
        );
        assert!(check_renyi(&s, &p, &[Alpha::Finite(0.25)]).is_err());
        assert!(check_renyi(&s, &p, &[Alpha::Finite(-3.0)]).is_err());
    }

    #[test]
    fn min_schmidt_examples() {
        let r = check_min_schmidt(&spectrum(&[0.5, 0.5]), &example1());
        assert_abs_diff_eq!(r.rhs, 0.3, epsilon = 1e-12);
        assert!(!r.satisfied);

        let r = check_min_schmidt(&spectrum(&[0.5, 0.5]), &example5());
        assert_abs_diff_eq!(r.rhs, 0.4, epsilon = 1e-12);
        assert!(!r.satisfied);

        let p2 = corr(&[&[1.0, 4.0], &[4.0, 0.0]]);
        assert!(check_min_schmidt(&spectrum(&[8.0 / 9.0, 1.0 / 9.0]), &p2).satisfied);
    }

    #[test]
    fn holevo_examples() {
        let p2 = corr(&[&[1.0, 4.0], &[4.0, 0.0]]);
        let r = check_holevo(&spectrum(&[8.0 / 9.0, 1.0 / 9.0]), &p2);
        assert!((r.lhs - 0.59).abs() < 0.005);
        assert!((r.rhs - 0.5033).abs() < 5e-4);
        assert!(!r.satisfied);
        assert!(check_mutual_information(&spectrum(&[8.0 / 9.0, 1.0 / 9.0]), &p2).satisfied);

        let bit = Correlation::diagonal(&[0.5, 0.5]).unwrap();
        assert!(check_holevo(&spectrum(&[0.5, 0.5]), &bit).satisfied);
        assert!(!check_holevo(&spectrum(&[1.0]), &example3()).satisfied);
    }

    #[test]
    fn v2_values() {
        let v = v2_classical(&example3());
        assert!((1.0 - v * v / 2.0 - 0.7769).abs() < 5e-4);
        let prod = Correlation::product(&[0.4, 0.6], &[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(v2_classical(&prod), 0.0, epsilon = 1e-12);
        // each column: (2 · ½ · ¼)^{1/2} = ½
        let bit = Correlation::diagonal(&[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(v2_classical(&bit), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn v2_condition_examples() {
        let r = check_v2(&spectrum(&[0.9, 0.1]), &example3());
        assert_abs_diff_eq!(r.lhs, 0.82, epsilon = 1e-12);
        assert!(!r.satisfied);
        let r = check_v2(&spectrum(&[21.0 / 25.0, 4.0 / 25.0]), &example3());
        assert_abs_diff_eq!(r.lhs, 457.0 / 625.0, epsilon = 1e-12);
        assert!(r.satisfied);
        let prod = Correlation::product(&[0.4, 0.6], &[0.5, 0.5]).unwrap();
        assert!(check_v2(&spectrum(&[1.0]), &prod).satisfied);
    }

    #[test]
    fn v2_note_flags_large_rank() {
        let r = check_v2(&spectrum(&[0.4, 0.3, 0.3]), &example3());
        assert!(r.note.is_some());
        assert!(check_v2(&spectrum(&[0.5, 0.5]), &example3()).note.is_none());
    }

    #[test]
    fn fidelity_examples() {
        let r = check_fidelity_sum(&spectrum(&[21.0 / 25.0, 4.0 / 25.0]), &example3());
        assert_abs_diff_eq!(r.lhs, 85.0 / 121.0, epsilon = 1e-12);
        assert!(!r.satisfied);
        let r = check_fidelity_sum(&spectrum(&[0.5, 0.5]), &example5());
        assert_abs_diff_eq!(r.lhs, 0.82, epsilon = 1e-12);
        assert!(r.satisfied);
        let bit = Correlation::diagonal(&[0.5, 0.5]).unwrap();
        let r = check_fidelity_sum(&spectrum(&[1.0]), &bit);
        assert_abs_diff_eq!(r.lhs, 0.5, epsilon = 1e-12);
        // F(P_i, P_i) = ½ for each row, cross terms vanish: Σ F² = ½ < 1
        assert!(!r.satisfied);
    }

    #[test]
    fn check_all_examples() {
        let rep = check_all(&spectrum(&[0.5, 0.5]), &example1(), &default_alphas()).unwrap();
        assert_eq!(rep.verdict, Verdict::RuledOut);
        let failed: Vec<_> = rep.failed().map(|r| r.name).collect();
        assert_eq!(failed, vec![ConditionKind::MinSchmidt]);

        let p = corr(&[&[1.0, 1.0], &[1.0, 0.0]]);
        let rep = check_all(&spectrum(&[0.8, 0.2]), &p, &default_alphas()).unwrap();
        assert_eq!(rep.verdict, Verdict::NotRuledOut, "{rep:?}");

        let prod = Correlation::product(&[0.1, 0.9], &[0.5, 0.25, 0.25]).unwrap();
        let rep = check_all(&spectrum(&[1.0]), &prod, &default_alphas()).unwrap();
        assert_eq!(rep.verdict, Verdict::NotRuledOut);
    }

    #[test]
    fn report_json_shape() {
        let rep = check_all(&spectrum(&[0.5, 0.5]), &example1(), &[Alpha::Infinity]).unwrap();
        let v = serde_json::to_value(&rep).unwrap();
        assert_eq!(v["verdict"], "RULED_OUT");
        assert_eq!(v["conditions"][0]["name"], "renyi");
        assert_eq!(v["conditions"][0]["alpha"], "inf");
        assert!(v["conditions"][1].get("alpha").is_none());
        let back: ConditionReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, rep);
    }

    fn arb_case() -> impl Strategy<Value = (SchmidtSpectrum, Correlation)> {
        let spec = prop::collection::vec(0.01f64..1.0, 1..5)
            .prop_map(|v| SchmidtSpectrum::new(v).unwrap());
        let p = (1usize..4, 1usize..4).prop_flat_map(|(n, m)| {
            prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..1.0], n * m).prop_filter_map(
                "zero mass",
                move |v| Correlation::new(nalgebra::DMatrix::from_vec(n, m, v)).ok(),
            )
        });
        (spec, p)
    }

    proptest! {
        #[test]
        fn min_schmidt_implies_renyi_infinity((s, p) in arb_case()) {
            if check_min_schmidt(&s, &p).satisfied {
                let rec = &check_renyi(&s, &p, &[Alpha::Infinity]).unwrap()[0];
                prop_assert!(rec.satisfied);
            }
        }

        #[test]
        fn holevo_implies_doubled_baseline((s, p) in arb_case()) {
            if check_holevo(&s, &p).satisfied {
                prop_assert!(check_mutual_information(&s, &p).satisfied);
            }
        }

        #[test]
        fn min_schmidt_is_permutation_covariant((s, p) in arb_case()) {
            let (n, m) = (p.nrows(), p.ncols());
            let q = Correlation::new(nalgebra::DMatrix::from_fn(n, m, |x, y| p.get(n - 1 - x, (y + 1) % m))).unwrap();
            prop_assert!((min_schmidt_bound(&p) - min_schmidt_bound(&q)).abs() <= 1e-12 * min_schmidt_bound(&p).max(1.0));
            prop_assert_eq!(check_min_schmidt(&s, &p).satisfied, check_min_schmidt(&s, &q).satisfied);
        }

        #[test]
        fn product_targets_pass_everything(
            s in prop::collection::vec(0.01f64..1.0, 1..5),
            a in prop::collection::vec(0.01f64..1.0, 1..4),
            b in prop::collection::vec(0.01f64..1.0, 1..4),
        ) {
            let s = SchmidtSpectrum::new(s).unwrap();
            let sa: f64 = a.iter().sum();
            let sb: f64 = b.iter().sum();
            let a: Vec<f64> = a.iter().map(|v| v / sa).collect();
            let b: Vec<f64> = b.iter().map(|v| v / sb).collect();
            let p = Correlation::product(&a, &b).unwrap();
            let rep = check_all(&s, &p, &default_alphas()).unwrap();
            prop_assert_eq!(rep.verdict, Verdict::NotRuledOut, "{:?}", rep);
        }
    }
}
