//! Browser front end: small experiments, the overlap law and the functional
//! digraph of two random bijections, all returned as JSON strings.

use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

use subcorr::harness::{self, histogram, roc_points, split_scores, ExperimentConfig};
use subcorr::model::{sample_subset, Permutation};
use subcorr::theory::{
    build_digraph, core_set, decompose, hypergeom_pmf, hypergeom_support, mc_overlap_law,
};
use subcorr::rng;

/// Largest trial count a page may request; keeps the tab responsive.
pub const MAX_TRIALS: usize = 200;

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

/// Runs an experiment config and returns the trials, ROC curve and one
/// histogram per hypothesis.
pub fn experiment_report(config_json: &str, bins: usize) -> Result<String, String> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(|e| e.to_string())?;
    if cfg.trials_per_hypothesis > MAX_TRIALS {
        return Err(format!("at most {MAX_TRIALS} trials per hypothesis in the browser"));
    }
    let run = cfg.resolve().map_err(|e| e.to_string())?;
    let records = harness::run_experiment(&cfg).map_err(|e| e.to_string())?;
    let (null_scores, alt_scores) = split_scores(&records);
    let roc = roc_points(&null_scores, &alt_scores).map_err(|e| e.to_string())?;
    let hist_null = histogram(&null_scores, bins).map_err(|e| e.to_string())?;
    let hist_alt = histogram(&alt_scores, bins).map_err(|e| e.to_string())?;
    Ok(to_json(&json!({
        "m": run.m,
        "tau": run.tau,
        "auc": roc.auc,
        "roc": roc.points.iter().map(|p| [p.fpr, p.tpr]).collect::<Vec<_>>(),
        "null": null_scores,
        "alt": alt_scores,
        "hist_null": hist_null,
        "hist_alt": hist_alt,
    })))
}

/// Exact law of the common-vertex count next to a Monte Carlo estimate.
pub fn overlap_report(n: usize, s: usize, trials: usize, seed: u64) -> Result<String, String> {
    let exact = hypergeom_support(n, s)
        .map(|t| hypergeom_pmf(n, s, t).map(|p| (t, p)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let empirical = mc_overlap_law(n, s, trials, seed).map_err(|e| e.to_string())?;
    Ok(to_json(&json!({
        "mean": (s * s) as f64 / n as f64,
        "exact": exact,
        "empirical": empirical,
    })))
}

/// Path and cycle lengths of the digraph of two random bijections and the
/// resulting core set.
pub fn digraph_report(n: usize, s: usize, seed: u64) -> Result<String, String> {
    if n < 2 || s == 0 || s > n {
        return Err(format!("need n >= 2 and 1 <= s <= n, got n = {n}, s = {s}"));
    }
    let mut r = rng::stream(seed, "web-digraph");
    let pi = Permutation::random(n, &mut r);
    let pit = Permutation::random(n, &mut r);
    let idx1 = sample_subset(n, s, &mut r);
    let idx2 = sample_subset(n, s, &mut r);
    let d = build_digraph(&pi, &pit, &idx1, &idx2);
    let dec = decompose(&d).map_err(|e| e.to_string())?;
    let core = core_set(&pi, &pit, &idx1, &idx2);
    Ok(to_json(&json!({
        "nodes": d.nodes.len(),
        "arcs": d.arcs.len(),
        "paths": dec.paths.iter().map(Vec::len).collect::<Vec<_>>(),
        "cycles": (0..dec.cycles.len()).map(|c| dec.cycle_len(&d, c)).collect::<Vec<_>>(),
        "core": core.vertices.iter().map(|&a| idx1[a]).collect::<Vec<_>>(),
    })))
}

#[wasm_bindgen]
pub fn run_experiment(config_json: &str, bins: usize) -> Result<String, JsValue> {
    experiment_report(config_json, bins).map_err(|e| JsValue::from_str(&e))
}

// seeds cross the boundary as u32 so plain JS numbers work

#[wasm_bindgen]
pub fn overlap_law(n: usize, s: usize, trials: usize, seed: u32) -> Result<String, JsValue> {
    overlap_report(n, s, trials, seed.into()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn digraph(n: usize, s: usize, seed: u32) -> Result<String, JsValue> {
    digraph_report(n, s, seed.into()).map_err(|e| JsValue::from_str(&e))
}
