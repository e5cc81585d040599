//! Inverse local time of the process restricted to [0, b] against Θ^b.

use serde_json::json;
use slt_core::restricted::{sigma_b_experiment, SigmaSpec};

use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::output::{f17, Check, Csv, Outcome};

const SIGMA_TOL: f64 = 0.1;
const CENSOR_TOL: f64 = 0.05;

pub fn restricted(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let spec = SigmaSpec {
        params: cfg.params()?,
        eps: cfg.eps,
        b: cfg.b,
        q_list: cfg.q_list.clone(),
        replicas: cfg.replicas,
        bandwidth: cfg.bandwidth,
        horizon: cfg.restricted_horizon,
        shortcut_depth: cfg.shortcut_depth,
        seed: cfg.seed,
        threads: cfg.threads,
    };
    let res = sigma_b_experiment(&spec)?;
    let mut csv = Csv::new(&[
        "q",
        "empirical_exponent",
        "theta_b",
        "rel_diff",
        "censored_frac",
    ]);
    let mut checks = vec![Check::new(
        "censoring",
        res.censored_frac < CENSOR_TOL,
        format!("{} of {} replicas censored", res.censored, res.replicas),
    )];
    let mut rows = Vec::new();
    for r in &res.rows {
        csv.row(&[
            f17(r.q),
            f17(r.empirical),
            f17(r.theta_b),
            f17(r.rel_diff),
            f17(res.censored_frac),
        ]);
        if r.q > 0.0 {
            checks.push(Check::new(
                format!("exponent at q={}", r.q),
                r.rel_diff < SIGMA_TOL,
                format!(
                    "{:.5} vs {:.5} (rel {:.4})",
                    r.empirical, r.theta_b, r.rel_diff
                ),
            ));
        }
        rows.push(json!({"q": r.q, "empirical": r.empirical, "bandwidth_w": r.empirical_w,
                         "bandwidth_half_w": r.empirical_half, "theta_b": r.theta_b, "rel_diff": r.rel_diff}));
    }
    Ok(Outcome {
        csv,
        metrics: json!({
            "rows": rows,
            "censored": res.censored,
            "censored_frac": res.censored_frac,
            "moments": res.moments,
        }),
        checks,
        extra_files: Vec::new(),
    })
}
