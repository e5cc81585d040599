//! Checks against closed forms: squared Bessel moments and Hölder
//! constants, and the special-function identities.

use serde_json::json;
use slt_core::estimators::mean_and_stderr;
use slt_core::marks::{besq_from_zero, holder_quotient};
use slt_core::sampling::{replicate, RngStream};
use slt_core::specfun::{
    holder_moment_bound, laplace_transform_w, poisson_mdp, theta_b_closed, theta_b_integral,
};

use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::output::{f17, Check, Csv, Outcome};

const MOMENT_SE: f64 = 3.0;
const THETA_TOL: f64 = 1e-8;
const LAPLACE_TOL: f64 = 1e-6;

/// (δ, x0, t) for the transition moment checks.
const BESQ_CASES: [(f64, f64, f64); 4] = [
    (1.0, 0.0, 1.0),
    (2.0, 3.0, 0.5),
    (5.0, 0.0, 1.0),
    (0.5, 2.0, 2.0),
];

/// (α, q, η) with η^{1+α} > q.
const LAPLACE_TRIPLES: [(f64, f64, f64); 10] = [
    (0.3, 0.5, 1.5),
    (0.3, 1.0, 2.0),
    (0.4, 0.1, 0.5),
    (0.5, 0.5, 1.2),
    (0.5, 1.0, 1.5),
    (0.5, 2.0, 2.5),
    (0.6, 1.5, 2.0),
    (0.7, 0.5, 1.0),
    (0.7, 1.0, 2.0),
    (0.7, 3.0, 3.0),
];

const MDP_TIMES: [f64; 4] = [1e3, 1e4, 1e5, 1e6];
const MDP_ZD: [(f64, f64); 3] = [(1.0, 0.5), (2.0, 0.5), (2.0, 0.1)];

/// Sample variance and its standard error from the fourth central moment.
fn variance_and_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let m2 = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = v.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    (m2 * n / (n - 1.0), ((m4 - m2 * m2) / n).sqrt())
}

/// Transition mean and variance of BESQ(δ) from `draws` exact draws per
/// case, and E[D_γ^p] over `replicas` BESQ(besq_dim) paths from 0 on
/// `mark_resolution` grid points of [0, 1].
pub fn besq(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let mut csv = Csv::new(&[
        "check",
        "delta",
        "x0",
        "t",
        "estimate",
        "reference",
        "stderr",
    ]);
    let mut checks = Vec::new();
    let mut cases = Vec::new();
    for (k, &(delta, x0, t)) in BESQ_CASES.iter().enumerate() {
        let mut s = RngStream::new(cfg.seed, k as u64);
        let xs = (0..cfg.draws)
            .map(|_| besq_from_zero(delta, x0, &[0.0, t], &mut s).map(|v| v[1]))
            .collect::<Result<Vec<f64>, _>>()?;
        let (mean, se_mean) = mean_and_stderr(&xs);
        let (var, se_var) = variance_and_stderr(&xs);
        let (ref_mean, ref_var) = (x0 + delta * t, 4.0 * x0 * t + 2.0 * delta * t * t);
        for (name, est, reference, se) in [
            ("mean", mean, ref_mean, se_mean),
            ("variance", var, ref_var, se_var),
        ] {
            csv.row(&[
                name.into(),
                f17(delta),
                f17(x0),
                f17(t),
                f17(est),
                f17(reference),
                f17(se),
            ]);
            checks.push(Check::new(
                format!("BESQ({delta}) from {x0} at t={t}: {name}"),
                (est - reference).abs() <= MOMENT_SE * se,
                format!(
                    "{est:.5} vs {reference:.5}, {:.2} s.e.",
                    (est - reference).abs() / se
                ),
            ));
        }
        cases.push(json!({"delta": delta, "x0": x0, "t": t, "mean": mean, "variance": var}));
    }
    let m = cfg.mark_resolution - 1;
    let grid: Vec<f64> = (0..=m).map(|j| j as f64 / m as f64).collect();
    let (dim, gamma_exp, p) = (cfg.besq_dim, cfg.holder_gamma, cfg.p);
    let values: Vec<CliResult<f64>> = replicate(cfg.seed, cfg.replicas, cfg.threads, |_, mut s| {
        let path = besq_from_zero(dim, 0.0, &grid, &mut s)?;
        Ok(holder_quotient(&path, &grid, gamma_exp)?.powf(p))
    });
    let values = values.into_iter().collect::<CliResult<Vec<f64>>>()?;
    let (moment, se) = mean_and_stderr(&values);
    let bound = holder_moment_bound(dim, 0.0, p, gamma_exp)?;
    csv.row(&[
        "holder_moment".into(),
        f17(dim),
        f17(0.0),
        f17(1.0),
        f17(moment),
        f17(bound),
        f17(se),
    ]);
    checks.push(Check::new(
        "grid Hölder moment below the bound",
        moment <= bound,
        format!("E[D^{p}] = {moment:.4e} ± {se:.2e} vs bound {bound:.4e}"),
    ));
    Ok(Outcome {
        csv,
        metrics: json!({
            "transitions": cases,
            "holder": {"dim": dim, "gamma": gamma_exp, "p": p, "paths": cfg.replicas,
                       "grid_points": grid.len(), "moment": moment, "stderr": se, "bound": bound},
        }),
        checks,
        extra_files: Vec::new(),
    })
}

/// Closed-form against integral Θ^b on a grid, the Laplace transform of
/// W^{(q)}, and the Poisson moderate-deviation bound.
pub fn specfun_check(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let mut csv = Csv::new(&[
        "alpha",
        "b",
        "q",
        "theta_closed",
        "theta_integral",
        "rel_diff",
    ]);
    let mut worst = 0.0f64;
    for alpha in [0.3, 0.5, 0.7] {
        for b in [0.5, 1.0, 2.0] {
            for q in [0.1, 0.5, 1.0, 2.0, 5.0] {
                let closed = theta_b_closed(alpha, cfg.a, b, q)?;
                let integral = theta_b_integral(alpha, cfg.a, b, q)?;
                let rel = (closed - integral).abs() / closed.abs();
                worst = worst.max(rel);
                csv.row(&[
                    f17(alpha),
                    f17(b),
                    f17(q),
                    f17(closed),
                    f17(integral),
                    f17(rel),
                ]);
            }
        }
    }
    let mut laplace = Vec::new();
    let mut worst_laplace = 0.0f64;
    for (alpha, q, eta) in LAPLACE_TRIPLES {
        let value = laplace_transform_w(alpha, q, eta)?;
        let exact = 1.0 / (eta.powf(1.0 + alpha) - q);
        let rel = (value - exact).abs() / exact;
        worst_laplace = worst_laplace.max(rel);
        laplace.push(json!({"alpha": alpha, "q": q, "eta": eta, "value": value, "exact": exact, "rel_diff": rel}));
    }
    let mut mdp = Vec::new();
    let mut mdp_ok = true;
    for t in MDP_TIMES {
        for (z, delta) in MDP_ZD {
            let r = poisson_mdp(t, z, delta)?;
            mdp_ok &= r.lhs <= r.rhs;
            mdp.push(json!({"t": t, "z": z, "delta": delta, "lhs": r.lhs, "rhs": r.rhs}));
        }
    }
    let checks = vec![
        Check::new(
            "closed-form and integral exponents agree",
            worst < THETA_TOL,
            format!("max rel diff {worst:.3e} < {THETA_TOL:e}"),
        ),
        Check::new(
            "Laplace transform of the scale function",
            worst_laplace < LAPLACE_TOL,
            format!("max rel diff {worst_laplace:.3e} < {LAPLACE_TOL:e}"),
        ),
        Check::new(
            "Poisson moderate-deviation bound",
            mdp_ok,
            format!("{} (t, z, delta) cases", mdp.len()),
        ),
    ];
    Ok(Outcome {
        csv,
        metrics: json!({
            "theta_max_rel_diff": worst,
            "laplace_max_rel_diff": worst_laplace,
            "laplace": laplace,
            "poisson_mdp": mdp,
        }),
        checks,
        extra_files: Vec::new(),
    })
}
