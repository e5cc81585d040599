//! Path-level experiments: raw paths, jump intensity, crossings, piling.

use serde_json::json;
use slt_core::estimators::{crossing_of, ks_uniform, slope_fit, CrossingRecord};
use slt_core::marks::pile_jumps;
use slt_core::sampling::{replicate, RngStream};
use slt_core::stablepath::{
    levy_tail, simulate_path, write_skeleton, JumpEvent, PathStep, PathStream,
};

use super::MarkSource;
use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::output::{f17, Check, Csv, Outcome};

/// Largest allowed |z| for the jump counts.
const INTENSITY_Z: f64 = 3.0;
/// KS significance level for the undershoot ratio.
const KS_LEVEL: f64 = 0.01;
/// Smallest H-decade sample that gets its own KS test.
const MIN_DECADE: usize = 20;
const PILE_SLOPE_TOL: f64 = 0.15;

/// One path: grid values as CSV and the binary skeleton.
pub fn simulate(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let mut s = RngStream::new(cfg.seed, 0);
    let path = simulate_path(
        cfg.params()?,
        cfg.horizon,
        cfg.eps,
        cfg.dt,
        cfg.small_jumps,
        &mut s,
    )?;
    let mut csv = Csv::new(&["t", "x"]);
    for (k, &x) in path.values.iter().enumerate() {
        csv.row(&[f17(path.grid_time(k)), f17(x)]);
    }
    let mut dump = Vec::new();
    write_skeleton(&path, &mut dump)?;
    Ok(Outcome {
        csv,
        metrics: json!({
            "jumps": path.jumps.len(),
            "grid_points": path.values.len(),
            "dt": path.dt,
            "final_value": path.final_value(),
        }),
        checks: Vec::new(),
        extra_files: vec![("skeleton.bin".into(), dump)],
    })
}

/// Jumps above x per unit time against a·Πbar(x), x = 2ε·2^k for k < 6.
pub fn intensity(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let spec = cfg.path_spec()?;
    let xs: Vec<f64> = (1..=6).map(|k| cfg.eps * 2f64.powi(k)).collect();
    let per_replica: Vec<CliResult<Vec<u64>>> =
        replicate(cfg.seed, cfg.replicas, cfg.threads, |_, mut s| {
            let mut counts = vec![0u64; xs.len()];
            for step in PathStream::new(&spec, cfg.horizon, &mut s)? {
                if let PathStep::Jump(j) = step {
                    for (c, &x) in counts.iter_mut().zip(&xs) {
                        *c += u64::from(j.dx > x);
                    }
                }
            }
            Ok(counts)
        });
    let mut totals = vec![0u64; xs.len()];
    for r in per_replica {
        for (t, c) in totals.iter_mut().zip(r?) {
            *t += c;
        }
    }
    let exposure = cfg.replicas as f64 * cfg.horizon;
    let mut csv = Csv::new(&["x", "count", "rate", "expected", "z"]);
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for (&x, &n) in xs.iter().zip(&totals) {
        let expected = cfg.a * levy_tail(cfg.alpha, x)?;
        let (rate, z) = if exposure > 0.0 {
            let rate = n as f64 / exposure;
            let se = (n.max(1) as f64).sqrt() / exposure;
            (rate, (rate - expected) / se)
        } else {
            (0.0, 0.0)
        };
        csv.row(&[f17(x), n.to_string(), f17(rate), f17(expected), f17(z)]);
        if exposure > 0.0 {
            checks.push(Check::new(
                format!("intensity x={x:.4e}"),
                z.abs() <= INTENSITY_Z,
                format!("rate {rate:.6e} vs {expected:.6e}, z = {z:.3}"),
            ));
        }
        rows.push(json!({"x": x, "count": n, "rate": rate, "expected": expected, "z": z}));
    }
    Ok(Outcome {
        csv,
        metrics: json!({"exposure": exposure, "rows": rows}),
        checks,
        extra_files: Vec::new(),
    })
}

/// Crossings of `cfg.level` pooled over replicas, with KS tests of U.
pub fn crossings(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let spec = cfg.path_spec()?;
    let kernel = cfg.kernel()?;
    let y = cfg.level;
    let per_replica: Vec<CliResult<Vec<CrossingRecord>>> =
        replicate(cfg.seed, cfg.replicas, cfg.threads, |_, mut s| {
            let stream = PathStream::new(&spec, cfg.horizon, &mut s)?;
            let mut marks = MarkSource::new(&kernel, &s);
            let mut out = Vec::new();
            for step in stream {
                if let PathStep::Jump(j) = step {
                    if j.x_pre < y && y < j.x_post() {
                        let mark = marks.mark(j.dx);
                        out.extend(crossing_of(&j, y, Some(&mark)));
                    }
                }
            }
            Ok(out)
        });
    let mut records = Vec::new();
    for r in per_replica {
        records.extend(r?);
    }
    let mut csv = Csv::new(&["t", "A", "B", "H", "U", "markval"]);
    for r in &records {
        csv.row(&[
            f17(r.t),
            f17(r.a),
            f17(r.b),
            f17(r.h),
            f17(r.u),
            f17(r.markval.unwrap_or(0.0)),
        ]);
    }
    let mut checks = Vec::new();
    let mut pooled = serde_json::Value::Null;
    let mut decades = Vec::new();
    if !records.is_empty() {
        let u: Vec<f64> = records.iter().map(|r| r.u).collect();
        let ks = ks_uniform(&u)?;
        checks.push(Check::new(
            "undershoot ratio uniform (pooled)",
            ks.p_value > KS_LEVEL,
            format!("n = {}, D = {:.4}, p = {:.4}", u.len(), ks.d, ks.p_value),
        ));
        pooled = json!({"n": u.len(), "d": ks.d, "p_value": ks.p_value});
        let mut by_decade: std::collections::BTreeMap<i32, Vec<f64>> = Default::default();
        for r in &records {
            by_decade
                .entry(r.h.log10().floor() as i32)
                .or_default()
                .push(r.u);
        }
        for (dec, us) in by_decade {
            if us.len() < MIN_DECADE {
                decades.push(json!({"decade": dec, "n": us.len(), "tested": false}));
                continue;
            }
            let ks = ks_uniform(&us)?;
            checks.push(Check::new(
                format!("undershoot ratio uniform (H in [1e{dec}, 1e{}))", dec + 1),
                ks.p_value > KS_LEVEL,
                format!("n = {}, D = {:.4}, p = {:.4}", us.len(), ks.d, ks.p_value),
            ));
            decades.push(json!({"decade": dec, "n": us.len(), "tested": true, "d": ks.d, "p_value": ks.p_value}));
        }
    }
    Ok(Outcome {
        csv,
        metrics: json!({"level": y, "crossings": records.len(), "pooled": pooled, "decades": decades}),
        checks,
        extra_files: Vec::new(),
    })
}

/// True when each pile's intervals are pairwise disjoint and every jump
/// sits in exactly one pile.
fn piles_are_valid(piles: &[Vec<usize>], jumps: &[JumpEvent]) -> bool {
    let mut seen = vec![false; jumps.len()];
    for pile in piles {
        for &i in pile {
            if std::mem::replace(&mut seen[i], true) {
                return false;
            }
        }
        let mut spans: Vec<(f64, f64)> = pile
            .iter()
            .map(|&i| (jumps[i].x_pre, jumps[i].x_post()))
            .collect();
        spans.sort_by(|p, q| p.0.total_cmp(&q.0));
        if spans.windows(2).any(|w| w[0].1 >= w[1].0) {
            return false;
        }
    }
    seen.into_iter().all(|b| b)
}

/// Piles of one path and the decay of the largest jump per pile.
pub fn piling(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let mut s = RngStream::new(cfg.seed, 0);
    let path = simulate_path(
        cfg.params()?,
        cfg.horizon,
        cfg.eps,
        cfg.dt,
        cfg.small_jumps,
        &mut s,
    )?;
    let set = pile_jumps(&path.jumps);
    let maxes = set.max_jumps(&path.jumps);
    let mut csv = Csv::new(&["k", "pile_size", "max_jump"]);
    for (k, (pile, &m)) in set.piles.iter().zip(&maxes).enumerate() {
        csv.row(&[(k + 1).to_string(), pile.len().to_string(), f17(m)]);
    }
    let valid = piles_are_valid(&set.piles, &path.jumps);
    let mut checks = vec![Check::new(
        "piles partition the jumps into disjoint intervals",
        valid,
        format!("{} jumps in {} piles", path.jumps.len(), set.len()),
    )];
    let target = -1.0 / cfg.alpha;
    let k_max = set.len() / 2;
    let mut slope = serde_json::Value::Null;
    if k_max >= cfg.fit_k_min + 2 {
        let ks: Vec<f64> = (cfg.fit_k_min..=k_max).map(|k| (k as f64).ln()).collect();
        let ms: Vec<f64> = (cfg.fit_k_min..=k_max).map(|k| maxes[k - 1].ln()).collect();
        let fit = slope_fit(&ks, &ms)?;
        checks.push(Check::new(
            "max jump per pile decays like k^(-1/alpha)",
            super::within(fit.slope, target, PILE_SLOPE_TOL),
            format!(
                "slope {:.4} ± {:.4} over k = {}..={k_max}, target {target:.4} ± {PILE_SLOPE_TOL}",
                fit.slope, fit.stderr, cfg.fit_k_min
            ),
        ));
        slope = json!({"slope": fit.slope, "stderr": fit.stderr, "k_min": cfg.fit_k_min, "k_max": k_max});
    }
    Ok(Outcome {
        csv,
        metrics: json!({
            "jumps": path.jumps.len(),
            "piles": set.len(),
            "valid": valid,
            "target_slope": target,
            "fit": slope,
        }),
        checks,
        extra_files: Vec::new(),
    })
}
