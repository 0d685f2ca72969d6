//! WebAssembly bindings behind `www/index.html`.
//!
//! Each export returns a JSON string so the page needs no glue beyond
//! `JSON.parse`. The `*_json` functions hold the logic and run natively too.

use patrolgame::allocation::{allocate_bipartite_side, modified_bisection};
use patrolgame::strategy::{
    synthesize_bipartite, synthesize_complete, synthesize_star, StrategyResult,
};
use patrolgame::{
    hitting_time_probabilities, validate_attack_durations, AttackDurations, GraphFamily,
    GraphTopology,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest graph the page accepts; keeps the curves quick to compute.
const MAX_NODES: usize = 16;

#[derive(Serialize)]
struct SolveView {
    #[serde(flatten)]
    result: StrategyResult,
    tau: Vec<u32>,
    /// `curves[j][k-1]`: worst-case probability over start nodes that node
    /// `j` is visited within `k` steps.
    curves: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct SplitPoint {
    b_p: u64,
    w_p: Option<f64>,
    w_q: Option<f64>,
}

#[derive(Serialize)]
struct CoOptimizeView {
    tau_p: Vec<u32>,
    tau_q: Vec<u32>,
    b_p: u64,
    b_q: u64,
    mu: f64,
    /// `w_p` and `w_q` for every even split; `null` where a side has no valid allocation.
    curve: Vec<SplitPoint>,
    probes: Vec<u64>,
}

fn parse_tau(text: &str) -> Result<Vec<u32>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<u32>()
                .map_err(|_| format!("'{s}' is not a positive integer"))
        })
        .collect()
}

fn graph(family: &str, n_p: usize, n_q: usize) -> Result<GraphTopology, String> {
    let n = n_p + n_q;
    if n > MAX_NODES {
        return Err(format!("at most {MAX_NODES} nodes"));
    }
    let g = match family {
        "complete" => GraphTopology::complete(n),
        "bipartite" => GraphTopology::complete_bipartite(n_p, n_q),
        "star" => GraphTopology::star(n),
        other => return Err(format!("unknown family '{other}'")),
    };
    g.map_err(|e| e.to_string())
}

/// Synthesizes a strategy for `family` with `n_p + n_q` nodes (complete and
/// star only use the total) and returns it with capture curves.
pub fn solve_json(family: &str, n_p: usize, n_q: usize, tau: &str) -> Result<String, String> {
    let g = graph(family, n_p, n_q)?;
    let tau = AttackDurations::new(parse_tau(tau)?).map_err(|e| e.to_string())?;
    if tau.len() != g.n() {
        return Err(format!("need {} durations, got {}", g.n(), tau.len()));
    }
    let report = validate_attack_durations(&g, &tau).map_err(|e| e.to_string())?;
    if !report.nontrivial {
        return Err(report.notes);
    }
    let result = match g.family() {
        GraphFamily::Complete => synthesize_complete(&tau),
        GraphFamily::CompleteBipartite { n_p, .. } => {
            let (tp, tq) = tau.as_slice().split_at(n_p);
            synthesize_bipartite(&g, tp, tq)
        }
        _ => synthesize_star(&tau),
    }
    .map_err(|e| e.to_string())?;

    let horizon = 2 * tau.max() as usize;
    let f = hitting_time_probabilities(&result.p, horizon).map_err(|e| e.to_string())?;
    let n = g.n();
    let curves = (0..n)
        .map(|j| {
            (1..=horizon)
                .map(|k| {
                    (0..n)
                        .map(|i| f.cumulative(i, j, k))
                        .fold(f64::INFINITY, f64::min)
                })
                .collect()
        })
        .collect();
    let view = SolveView {
        result,
        tau: tau.as_slice().to_vec(),
        curves,
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

/// Splits an even budget across a complete bipartite graph and traces the
/// side values over every split.
pub fn co_optimize_json(n_p: usize, n_q: usize, budget: u64) -> Result<String, String> {
    if n_p + n_q > MAX_NODES {
        return Err(format!("at most {MAX_NODES} nodes"));
    }
    let (result, probes) = modified_bisection(n_p, n_q, budget).map_err(|e| e.to_string())?;
    let split = result.split.expect("bipartite allocations carry a split");
    let side = |n: usize, b: u64| allocate_bipartite_side(n, b).ok().map(|s| s.w);
    let curve = (2 * n_p as u64..=budget - 2 * n_q as u64)
        .step_by(2)
        .map(|b_p| SplitPoint {
            b_p,
            w_p: side(n_p, b_p),
            w_q: side(n_q, budget - b_p),
        })
        .collect();
    let view = CoOptimizeView {
        tau_p: split.tau_p,
        tau_q: split.tau_q,
        b_p: split.b_p,
        b_q: split.b_q,
        mu: result.mu,
        curve,
        probes: probes.iter().map(|p| p.b_p).collect(),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn solve(family: &str, n_p: usize, n_q: usize, tau: &str) -> Result<String, JsValue> {
    solve_json(family, n_p, n_q, tau).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn co_optimize(n_p: usize, n_q: usize, budget: u32) -> Result<String, JsValue> {
    co_optimize_json(n_p, n_q, u64::from(budget)).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn solve_star() {
        let v: Value = serde_json::from_str(&solve_json("star", 3, 0, "2,2,2").unwrap()).unwrap();
        assert!((v["mu"].as_f64().unwrap() - 0.5).abs() < 1e-9);
        let curves = v["curves"].as_array().unwrap();
        assert_eq!(curves.len(), 3);
        assert_eq!(curves[0].as_array().unwrap().len(), 4);
        // The worst pair's curve passes through mu at its own duration.
        let at_tau = curves
            .iter()
            .map(|c| c[1].as_f64().unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!((at_tau - 0.5).abs() < 1e-9);
    }

    #[test]
    fn solve_rejects_bad_input() {
        assert!(solve_json("complete", 3, 0, "2,2").is_err());
        assert!(solve_json("complete", 3, 0, "3,3,3").is_err());
        assert!(solve_json("ring", 3, 0, "2,2,2").is_err());
        assert!(solve_json("complete", 3, 0, "2,x,2").is_err());
    }

    #[test]
    fn co_optimize_example() {
        let v: Value = serde_json::from_str(&co_optimize_json(3, 2, 20).unwrap()).unwrap();
        assert_eq!(v["b_p"], 14);
        assert_eq!(v["tau_p"], serde_json::json!([6, 4, 4]));
        assert_eq!(v["probes"], serde_json::json!([12, 14, 14, 16]));
        let curve = v["curve"].as_array().unwrap();
        assert_eq!(curve.first().unwrap()["b_p"], 6);
        assert_eq!(curve.last().unwrap()["b_p"], 16);
        assert!(co_optimize_json(2, 2, 11).is_err());
    }
}
