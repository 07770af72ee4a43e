//! Result emitters. JSON carries the full run record; CSV carries the
//! eigenfunction and stepsize profile; table is a human-readable summary.

use anyhow::Result;
use hofid::{EndpointPolicy, SlProblem, Solution, SolverConfig};
use serde_json::{json, Value};
use std::time::{SystemTime, UNIX_EPOCH};

fn policy_name(policy: EndpointPolicy) -> &'static str {
    match policy {
        EndpointPolicy::Dirichlet => "dirichlet",
        EndpointPolicy::EquationAtEndpoint => "equation",
    }
}

fn run_record(problem: &SlProblem, cfg: &SolverConfig, k: usize, sol: &Solution) -> Value {
    json!({
        "problem": problem.definition(),
        "k": k,
        "config": {
            "orders": cfg.orders,
            "tols": cfg.tols,
            "n0": cfg.n0,
            "max_n": cfg.max_n,
            "max_mesh_iters": cfg.max_mesh_iters,
            "ratio_cap": cfg.ratio_cap,
            "endpoint_policy": policy_name(cfg.policy),
        },
        "lambda": sol.lambda,
        "n": sol.grid.n_intervals(),
        "e_r": sol.e_r,
        "e_a": sol.e_a,
        "zero_count": sol.zero_count,
        "converged": sol.converged,
        "bootstrap_fallback": sol.bootstrap_fallback,
        "history": sol.history,
        "timestamp": SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    })
}

pub fn json(
    problem: &SlProblem,
    cfg: &SolverConfig,
    results: &[(usize, Solution)],
) -> Result<String> {
    let mut runs: Vec<Value> = results
        .iter()
        .map(|(k, s)| run_record(problem, cfg, *k, s))
        .collect();
    let doc = if runs.len() == 1 {
        runs.pop().unwrap()
    } else {
        Value::Array(runs)
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

/// Columns x, y, h where h is the width of the interval ending at x
/// (blank on the first row). Boundary points are included.
pub fn csv(sol: &Solution) -> String {
    let x = sol.grid.points();
    let mut out = String::from("x,y,h\n");
    for i in 0..x.len() {
        if i == 0 {
            out.push_str(&format!("{:?},{:?},\n", x[0], sol.y[0]));
        } else {
            out.push_str(&format!(
                "{:?},{:?},{:?}\n",
                x[i],
                sol.y[i],
                x[i] - x[i - 1]
            ));
        }
    }
    out
}

pub fn table(results: &[(usize, Solution)]) -> String {
    let mut out = format!(
        "{:>4}  {:>23}  {:>8}  {:>9}  {:>9}  {:>6}  status\n",
        "k", "lambda", "n", "E_r", "E_a", "iters"
    );
    for (k, s) in results {
        let iters: usize = s.history.iter().map(|r| r.mesh_iters).sum();
        out.push_str(&format!(
            "{:>4}  {:>23}  {:>8}  {:>9.2e}  {:>9.2e}  {:>6}  {}\n",
            k,
            format!("{:.15e}", s.lambda),
            s.grid.n_intervals(),
            s.e_r,
            s.e_a,
            iters,
            if s.converged { "ok" } else { "not converged" },
        ));
    }
    out
}
