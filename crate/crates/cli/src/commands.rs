use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use corrgen_core::classical::{
    build_classical_hardness_instance, build_quantum_hardness_instance, classical_feasible_search,
    decide_diagonal_seed, decide_diagonal_to_half_identity, schmidt_basis_protocol, subset_sum_oracle,
    ClassicalSearchSettings, SubsetSumInstance,
};
use corrgen_core::conditions::{check_all, default_alphas, Alpha, SchmidtSpectrum};
use corrgen_core::factorize::{alternate, lambda_candidates_from_purifications, verify, Lambda, SolveSettings};
use corrgen_core::purify::{canonical_purification, sample_protocol, schmidt_spectrum, PureStateMatrix};
use corrgen_core::{Correlation, DiagonalPsdFactorization, Verdict};
use serde_json::{json, Value};

use crate::args::{
    CheckArgs, ClassicalArgs, FactorizeArgs, LambdaCandidatesArgs, PipelineArgs, ReduceArgs, SeedArgs,
    SimulateArgs, SolverArgs, VerifyArgs,
};

/// Tolerance for recognising a diagonal seed and the target `½ I₂` in the
/// exact classical path.
const EXACT_PATH_TOL: f64 = 1e-12;

/// A finished command: its JSON report and process exit code.
pub struct Report {
    pub value: Value,
    pub code: i32,
}

impl Report {
    fn ok(value: Value) -> Self {
        Report { value, code: 0 }
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{} is not valid JSON", path.display()))
}

fn read_correlation(path: &Path) -> Result<Correlation> {
    let v = read_json(path)?;
    serde_json::from_value(v).with_context(|| format!("{} is not a correlation", path.display()))
}

fn read_factorization(path: &Path) -> Result<DiagonalPsdFactorization> {
    let v = read_json(path)?;
    serde_json::from_value(v).with_context(|| format!("{} is not a factorization", path.display()))
}

/// The Schmidt spectrum behind `--schmidt` or `--seed`. Classical seeds are
/// replaced by their canonical purification.
fn seed_spectrum(seed: &SeedArgs) -> Result<(SchmidtSpectrum, &'static str)> {
    if let Some(list) = &seed.schmidt {
        return Ok((SchmidtSpectrum::new(list.clone())?, "pure"));
    }
    let path = seed.seed.as_deref().context("either --seed or --schmidt is required")?;
    let v = read_json(path)?;
    if v.get("amplitudes").is_some() {
        let state: PureStateMatrix = serde_json::from_value(v).context("invalid pure state")?;
        Ok((schmidt_spectrum(&state), "pure"))
    } else if v.get("matrix").is_some() {
        let p: Correlation = serde_json::from_value(v).context("invalid classical seed")?;
        Ok((schmidt_spectrum(&canonical_purification(&p)), "classical_canonical_purification"))
    } else {
        bail!("{} holds neither \"amplitudes\" nor \"matrix\"", path.display())
    }
}

fn solve_settings(s: &SolverArgs) -> SolveSettings {
    SolveSettings {
        restarts: s.restarts,
        rng_seed: s.seed_rng,
        residual_tol: s.tol,
        max_outer_iters: s.max_iters,
        ..Default::default()
    }
}

fn target_warning(p: &Correlation) -> Option<String> {
    p.was_renormalized()
        .then(|| "target did not sum to one and was renormalized".to_string())
}

pub fn check(args: &CheckArgs) -> Result<Report> {
    let p = read_correlation(&args.target)?;
    let (spectrum, kind) = seed_spectrum(&args.seed)?;
    let alphas = args.alphas.clone().unwrap_or_else(default_alphas);
    let report = check_all(&spectrum, &p, &alphas)?;
    let code = if report.verdict == Verdict::RuledOut { 2 } else { 0 };
    let mut value = json!({
        "seed": {"kind": kind, "spectrum": spectrum.lambdas()},
        "conditions": report.conditions,
        "verdict": report.verdict,
    });
    if let Some(w) = target_warning(&p) {
        value["warning"] = json!(w);
    }
    Ok(Report { value, code })
}

fn lambda_from(values: &[f64], squared: bool, k: Option<usize>) -> Result<Lambda> {
    let lambda = if squared {
        Lambda::from_squared(values.to_vec())?
    } else {
        Lambda::from_sqrt(values.to_vec())?
    };
    if let Some(k) = k {
        if k != lambda.len() {
            bail!("--k {k} does not match the {} entries of --lambda", lambda.len());
        }
    }
    Ok(lambda)
}

pub fn factorize(args: &FactorizeArgs) -> Result<Report> {
    let p = read_correlation(&args.target)?;
    let lambda = lambda_from(&args.lambda, args.squared, args.k)?;
    let out = alternate(&p, &lambda, &solve_settings(&args.solver))?;
    let mut value = serde_json::to_value(&out)?;
    value["result"] = json!(if out.converged { "factorization_found" } else { "no_factorization_found" });
    Ok(Report::ok(value))
}

pub fn verify_cmd(args: &VerifyArgs) -> Result<Report> {
    let p = read_correlation(&args.target)?;
    let f = read_factorization(&args.factorization)?;
    let v = verify(&p, &f, args.tol)?;
    Ok(Report {
        value: serde_json::to_value(v)?,
        code: if v.ok { 0 } else { 2 },
    })
}

pub fn simulate(args: &SimulateArgs) -> Result<Report> {
    let f = read_factorization(&args.factorization)?;
    let counts = sample_protocol(&f, args.samples, args.seed_rng)?;
    let empirical: Vec<Vec<f64>> = counts
        .iter()
        .map(|row| {
            row.iter()
                .map(|&c| if args.samples == 0 { 0.0 } else { c as f64 / args.samples as f64 })
                .collect()
        })
        .collect();
    Ok(Report::ok(json!({
        "samples": args.samples,
        "seed_rng": args.seed_rng,
        "counts": counts,
        "empirical": empirical,
    })))
}

pub fn classical(args: &ClassicalArgs) -> Result<Report> {
    let p1 = read_correlation(&args.seed)?;
    let p2 = read_correlation(&args.target)?;
    let settings = ClassicalSearchSettings {
        restarts: args.solver.restarts,
        rng_seed: args.solver.seed_rng,
        tol: args.solver.tol,
        max_outer_iters: args.solver.max_iters,
        ..Default::default()
    };
    let search = classical_feasible_search(&p1, &p2, &settings)?;
    let exact = decide_diagonal_seed(&p1, &p2, EXACT_PATH_TOL).ok();
    let summary = match (&exact, search.converged) {
        (Some(d), _) if d.feasible => "feasible (exact)",
        (Some(_), _) => "infeasible (exact)",
        (None, true) => "pair found",
        (None, false) => "no pair found; this is not a proof of infeasibility",
    };
    Ok(Report::ok(json!({
        "search": search,
        "exact": exact,
        "result": summary,
    })))
}

pub fn reduce(args: &ReduceArgs) -> Result<Report> {
    let inst = match (&args.items, &args.instance) {
        (Some(items), _) => SubsetSumInstance::new(items.clone())?,
        (None, Some(path)) => serde_json::from_value(read_json(path)?).context("invalid instance")?,
        (None, None) => bail!("either --items or --instance is required"),
    };
    let oracle = subset_sum_oracle(&inst)?;
    let quantum = build_quantum_hardness_instance(&inst)?;
    let protocol = if oracle.satisfiable {
        Some(schmidt_basis_protocol(&quantum.spectrum, &quantum.positions_of(&oracle.witness))?)
    } else {
        None
    };
    let classical = build_classical_hardness_instance(&inst)?;
    let exact = decide_diagonal_to_half_identity(&inst)?;
    Ok(Report::ok(json!({
        "items": inst.items(),
        "oracle": oracle,
        "quantum": {
            "spectrum": quantum.spectrum.lambdas(),
            "item_order": quantum.item_order,
            "target": quantum.target,
            "protocol": protocol,
        },
        "classical": {
            "seed": classical.seed,
            "target": classical.target,
            "exact": exact,
        },
    })))
}

pub fn lambda_candidates(args: &LambdaCandidatesArgs) -> Result<Report> {
    let p = read_correlation(&args.target)?;
    Ok(Report::ok(json!({ "candidates": lambda_candidates_from_purifications(&p) })))
}

pub fn pipeline(args: &PipelineArgs) -> Result<Report> {
    let p = read_correlation(&args.target)?;
    let (spectrum, kind) = seed_spectrum(&args.seed)?;
    let alphas: Vec<Alpha> = args.alphas.clone().unwrap_or_else(default_alphas);
    let report = check_all(&spectrum, &p, &alphas)?;
    let check = json!({
        "seed": {"kind": kind, "spectrum": spectrum.lambdas()},
        "conditions": report.conditions,
        "verdict": report.verdict,
    });
    if report.verdict == Verdict::RuledOut {
        return Ok(Report {
            value: json!({"check": check, "result": "ruled_out"}),
            code: 2,
        });
    }
    let lambda = Lambda::from_spectrum(&spectrum);
    let out = alternate(&p, &lambda, &solve_settings(&args.solver))?;
    let (result, code) = if out.converged {
        ("witness_found", 0)
    } else {
        ("no_factorization_found", 3)
    };
    Ok(Report {
        value: json!({"check": check, "factorization": out, "result": result}),
        code,
    })
}
