//! Browser bindings. Every export returns a JSON string; errors come back
//! as `{"error": "..."}` so the page never has to catch exceptions.

use arq_consensus::channel::{fate_distribution, LinkParams};
use arq_consensus::engine::{AlgorithmKind, Network};
use arq_consensus::harness::{run_experiment, ExperimentConfig, Preset};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

type Outcome = Result<Value, String>;

fn into_json(outcome: Outcome) -> String {
    outcome.unwrap_or_else(|message| json!({ "error": message })).to_string()
}

fn preset_config(graph: &str, algo: &str, q: f64, tau_max: u32) -> Result<ExperimentConfig, String> {
    let preset = Preset::from_name(graph).map_err(|e| e.to_string())?;
    let algorithm: AlgorithmKind = algo.parse().map_err(|e: arq_consensus::Error| e.to_string())?;
    ExperimentConfig::preset(preset, algorithm, q, tau_max).map_err(|e| e.to_string())
}

/// Probabilities of delivery after 0..=tau retransmissions, then of a drop.
pub fn fate_distribution_value(q: f64, tau_max: u32) -> Outcome {
    let params = LinkParams::new(q, tau_max).map_err(|e| e.to_string())?;
    let probs = fate_distribution(params);
    let labels: Vec<String> = (0..=tau_max).map(|r| format!("delay {r}")).chain(["dropped".to_string()]).collect();
    Ok(json!({ "labels": labels, "probabilities": probs }))
}

/// One replica on a preset graph: per-node ratios, network-mean running
/// sum and total mass per slot.
pub fn simulate_value(graph: &str, algo: &str, q: f64, tau_max: u32, iters: usize, seed: u64) -> Outcome {
    let mut cfg = preset_config(graph, algo, q, tau_max)?;
    cfg.iterations = iters.clamp(1, 5000);
    cfg.seeds = vec![seed];
    let z_star = cfg.z_star();
    let result = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let trace = &result.traces[0];
    let n = trace.node_count();
    let z: Vec<Vec<f64>> = (0..n).map(|j| trace.rows.iter().map(|r| r.z[j]).collect()).collect();
    Ok(json!({
        "z_star": z_star,
        "z": z,
        "mean_sigma": trace.rows.iter().map(|r| r.mean_sigma()).collect::<Vec<_>>(),
        "total_x": trace.rows.iter().map(|r| r.total_x()).collect::<Vec<_>>(),
        "final_error": result.metrics.last().map(|m| m.abs_error),
    }))
}

/// Mean relative error at every slot for each retransmission limit.
pub fn error_sweep_value(graph: &str, algo: &str, q: f64, taus: &str, replicas: u32, iters: usize) -> Outcome {
    let taus: Vec<u32> = taus
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| format!("bad retransmission limit `{}`", t.trim())))
        .collect::<Result<_, _>>()?;
    let mut series = Vec::new();
    for &tau in &taus {
        let mut cfg = preset_config(graph, algo, q, tau)?;
        cfg.iterations = iters.clamp(1, 2000);
        cfg.seeds = (0..u64::from(replicas.clamp(1, 50))).collect();
        let result = run_experiment(&cfg).map_err(|e| e.to_string())?;
        series.push(json!({
            "tau_max": tau,
            "mean_rel_error": result.metrics.iter().map(|m| m.mean_rel_error).collect::<Vec<_>>(),
        }));
    }
    Ok(json!({ "series": series }))
}

/// Number of nodes and directed links of a preset.
pub fn graph_info_value(graph: &str) -> Outcome {
    let preset = Preset::from_name(graph).map_err(|e| e.to_string())?;
    let net = Network::new(preset.graph());
    let edges: Vec<[usize; 2]> = net.graph().edges().iter().map(|l| [l.src + 1, l.dst + 1]).collect();
    Ok(json!({ "nodes": net.node_count(), "edges": edges, "x0": preset.x0() }))
}

#[wasm_bindgen(js_name = fateDistribution)]
pub fn fate_distribution_js(q: f64, tau_max: u32) -> String {
    into_json(fate_distribution_value(q, tau_max))
}

#[wasm_bindgen(js_name = simulate)]
pub fn simulate_js(graph: &str, algo: &str, q: f64, tau_max: u32, iters: u32, seed: u32) -> String {
    into_json(simulate_value(graph, algo, q, tau_max, iters as usize, u64::from(seed)))
}

#[wasm_bindgen(js_name = errorSweep)]
pub fn error_sweep_js(graph: &str, algo: &str, q: f64, taus: &str, replicas: u32, iters: u32) -> String {
    into_json(error_sweep_value(graph, algo, q, taus, replicas, iters as usize))
}

#[wasm_bindgen(js_name = graphInfo)]
pub fn graph_info_js(graph: &str) -> String {
    into_json(graph_info_value(graph))
}
