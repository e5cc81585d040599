//! Local-time experiments: the uniform sweep, rates per unit local time,
//! the exponential law at an independent time, and increment scaling.

use serde_json::json;
use slt_core::estimators::{
    crossing_of, increment_scaling, mean_and_stderr, slope_fit, theorem1_sweep, EstimatorKind,
    IncrementScalingSpec,
};
use slt_core::marks::{attach_marks, mark_constant_c};
use slt_core::sampling::{replicate, RngStream};
use slt_core::specfun::{gamma, lemma7_prob};
use slt_core::stablepath::{
    occupation_local_time, simulate_path, Bins, OccupationAccumulator, PassageTracker, PathStep,
    PathStream,
};

use super::{within, MarkSource};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{f17, Check, Csv, Outcome};
use crate::RunOptions;

const RATE_SLOPE_TOL: f64 = 0.05;
const RATE_CONST_TOL: f64 = 0.10;
const EXP_LAW_TOL: f64 = 0.05;
const PASSAGE_SE: f64 = 3.0;
const LEMMA7_TOL: f64 = 0.03;
const SCALING_TOL: f64 = 0.1;
/// Stream for the closed-form mark constants, which draw nothing.
const CONSTANT_STREAM: u64 = u64::MAX;

fn mark_c(cfg: &ExperimentConfig) -> CliResult<f64> {
    let kernel = cfg.kernel()?;
    Ok(cfg.a
        * mark_constant_c(
            &kernel,
            cfg.alpha,
            &mut RngStream::new(cfg.seed, CONSTANT_STREAM),
        )?)
}

/// Replica means of the sup error for each h, against a bandwidth-w
/// baseline, and the bandwidth error sup|ℓ̂_w − ℓ̂_{w/2}|.
pub fn theorem1(cfg: &ExperimentConfig, opts: RunOptions) -> CliResult<Outcome> {
    let params = cfg.params()?;
    let kernel = cfg.kernel()?;
    let c = mark_c(cfg)?;
    let (levels, times, hs) = (cfg.level_grid(), cfg.time_grid(), cfg.h_list());
    let w = cfg.bandwidth;
    let per_replica: Vec<CliResult<(Vec<f64>, f64, f64)>> =
        replicate(cfg.seed, cfg.replicas, cfg.threads, |_, mut s| {
            let path = simulate_path(
                params,
                cfg.horizon,
                cfg.eps,
                cfg.dt,
                cfg.small_jumps,
                &mut s,
            )?;
            let marks = attach_marks(&kernel, &path.jumps, &mut s);
            let base = occupation_local_time(&path, &levels, w, &times)?;
            let half = occupation_local_time(&path, &levels, 0.5 * w, &times)?;
            let bw = base
                .ell
                .iter()
                .zip(&half.ell)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            let sweep = theorem1_sweep(&path, &marks, kernel.q, c, &hs, &base)?;
            Ok((sweep.sup_error, bw, sweep.runtime_s))
        });
    let n = cfg.replicas as f64;
    let mut err = vec![0.0; hs.len()];
    let (mut bw, mut runtime) = (0.0, 0.0);
    for r in per_replica {
        let (e, b, t) = r?;
        for (acc, v) in err.iter_mut().zip(e) {
            *acc += v / n;
        }
        bw += b / n;
        runtime += t;
    }
    let mut csv = Csv::new(&["h", "sup_error", "levels", "times", "runtime_s"]);
    for (&h, &e) in hs.iter().zip(&err) {
        let rt = if opts.timing {
            runtime / hs.len() as f64
        } else {
            0.0
        };
        csv.row(&[
            f17(h),
            f17(e),
            levels.len().to_string(),
            times.len().to_string(),
            f17(rt),
        ]);
    }
    let (first, last) = (err[0], *err.last().expect("h list is non-empty"));
    let bound = (0.5 * first).max(2.0 * bw);
    let inversions = err.windows(2).filter(|p| p[1] > p[0]).count();
    let checks = vec![
        Check::new(
            "sup error at the smallest h",
            last <= bound,
            format!("{last:.4} <= max(0.5 x {first:.4}, 2 x bandwidth error {bw:.4}) = {bound:.4}"),
        ),
        Check::new(
            "sup errors non-increasing up to one inversion",
            inversions <= 1,
            format!("{inversions} inversions"),
        ),
    ];
    Ok(Outcome {
        csv,
        metrics: json!({
            "c": c,
            "c_circ": 1.0 / c,
            "sup_error": err,
            "bandwidth_error": bw,
            "inversions": inversions,
        }),
        checks,
        extra_files: Vec::new(),
    })
}

struct RateFit {
    slope: f64,
    stderr: f64,
    constant: f64,
}

/// Free slope, and the constant with the slope pinned at `target`.
fn fit_rates(hs: &[f64], rates: &[f64], target: f64) -> CliResult<RateFit> {
    if rates.iter().any(|&r| !(r > 0.0)) {
        return Err(CliError::Core(slt_core::Error::Numeric(
            "a rate is zero; lengthen the horizon or add replicas".into(),
        )));
    }
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = rates.iter().map(|r| r.ln()).collect();
    let fit = slope_fit(&xs, &ys)?;
    let log_c = xs.iter().zip(&ys).map(|(x, y)| y - target * x).sum::<f64>() / xs.len() as f64;
    Ok(RateFit {
        slope: fit.slope,
        stderr: fit.stderr,
        constant: log_c.exp(),
    })
}

/// JUMPSIZE and MARK counts at one level per unit local time, pooled over
/// replicas of streamed paths.
pub fn rates(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let spec = cfg.path_spec()?;
    let kernel = cfg.kernel()?;
    let hs = cfg.h_list();
    let (y, w) = (cfg.level, cfg.bandwidth);
    let kinds = [EstimatorKind::JumpSize, EstimatorKind::Mark];
    let per_replica: Vec<CliResult<(f64, Vec<Vec<u64>>)>> =
        replicate(cfg.seed, cfg.replicas, cfg.threads, |_, mut s| {
            let stream = PathStream::new(&spec, cfg.horizon, &mut s)?;
            let mut marks = MarkSource::new(&kernel, &s);
            let mut acc = OccupationAccumulator::new(Bins::centered(&[y], w)?);
            let mut counts = vec![vec![0u64; hs.len()]; kinds.len()];
            for step in stream {
                match step {
                    PathStep::Segment { .. } => acc.add_step(&step),
                    PathStep::Jump(j) => {
                        if !(j.x_pre < y && y < j.x_post()) {
                            continue;
                        }
                        let mark = marks.mark(j.dx);
                        let r = crossing_of(&j, y, Some(&mark)).expect("jump crosses the level");
                        for (row, kind) in counts.iter_mut().zip(kinds) {
                            for (c, &h) in row.iter_mut().zip(&hs) {
                                *c += u64::from(kind.accepts(&r, h)?);
                            }
                        }
                    }
                }
            }
            Ok((acc.time[0] / w, counts))
        });
    let mut ell = 0.0;
    let mut totals = vec![vec![0u64; hs.len()]; kinds.len()];
    for r in per_replica {
        let (l, counts) = r?;
        ell += l;
        for (t_row, c_row) in totals.iter_mut().zip(counts) {
            for (t, c) in t_row.iter_mut().zip(c_row) {
                *t += c;
            }
        }
    }
    let mut csv = Csv::new(&["kind", "h", "count", "local_time", "rate"]);
    let mut rates = vec![Vec::with_capacity(hs.len()); kinds.len()];
    for (k, kind) in kinds.iter().enumerate() {
        for (&h, &n) in hs.iter().zip(&totals[k]) {
            let rate = if ell > 0.0 { n as f64 / ell } else { 0.0 };
            rates[k].push(rate);
            csv.row(&[
                kind.name().to_string(),
                f17(h),
                n.to_string(),
                f17(ell),
                f17(rate),
            ]);
        }
    }
    let alpha = cfg.alpha;
    let derived = cfg.a * (1.0 + alpha) / gamma(1.0 - alpha);
    let stated = derived * alpha;
    let mark_target = mark_c(cfg)?;
    let slope_jump = -alpha;
    let slope_mark = -alpha / kernel.q;
    let jump = fit_rates(&hs, &rates[0], slope_jump)?;
    let mark = fit_rates(&hs, &rates[1], slope_mark)?;
    let rel = |c: f64, t: f64| (c - t).abs() / t;
    let matches = match (
        rel(jump.constant, derived) <= RATE_CONST_TOL,
        rel(jump.constant, stated) <= RATE_CONST_TOL,
    ) {
        (true, _) => "(1+alpha)/Gamma(1-alpha)",
        (false, true) => "(1+alpha)alpha/Gamma(1-alpha)",
        (false, false) => "neither",
    };
    let checks = vec![
        Check::new(
            "JUMPSIZE rate slope",
            within(jump.slope, slope_jump, RATE_SLOPE_TOL),
            format!("{:.4} ± {:.4} vs {slope_jump} ± {RATE_SLOPE_TOL}", jump.slope, jump.stderr),
        ),
        Check::new(
            "JUMPSIZE rate constant",
            matches != "neither",
            format!(
                "{:.5}; candidates {derived:.5} (rel {:.3}) and {stated:.5} (rel {:.3}); matches {matches}",
                jump.constant,
                rel(jump.constant, derived),
                rel(jump.constant, stated)
            ),
        ),
        Check::new(
            "MARK rate slope",
            within(mark.slope, slope_mark, RATE_SLOPE_TOL),
            format!("{:.4} ± {:.4} vs {slope_mark} ± {RATE_SLOPE_TOL}", mark.slope, mark.stderr),
        ),
        Check::new(
            "MARK rate constant",
            rel(mark.constant, mark_target) <= RATE_CONST_TOL,
            format!("{:.5} vs {mark_target:.5} (rel {:.3})", mark.constant, rel(mark.constant, mark_target)),
        ),
    ];
    Ok(Outcome {
        csv,
        metrics: json!({
            "level": y,
            "local_time": ell,
            "jumpsize": {"slope": jump.slope, "stderr": jump.stderr, "constant": jump.constant,
                         "derived_constant": derived, "stated_constant": stated, "matches": matches},
            "mark": {"slope": mark.slope, "stderr": mark.stderr, "constant": mark.constant, "target": mark_target},
        }),
        checks,
        extra_files: Vec::new(),
    })
}

/// ℓ̂^0(λ) and first-passage probabilities before λ ~ Exp(1).
pub fn passage(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    if cfg.a != 1.0 {
        return Err(CliError::Usage("passage needs a = 1".into()));
    }
    let spec = cfg.path_spec()?;
    let w = cfg.bandwidth;
    let levels = [-(2f64.ln()), 0.5, 1.0];
    let per_replica: Vec<CliResult<(f64, f64, [bool; 3])>> =
        replicate(cfg.seed, cfg.replicas, cfg.threads, |_, mut s| {
            let lambda = s.exp1();
            let mut full = OccupationAccumulator::new(Bins::centered(&[0.0], w)?);
            let mut half = OccupationAccumulator::new(Bins::centered(&[0.0], 0.5 * w)?);
            let mut tracker = PassageTracker::new(&levels);
            for step in PathStream::new(&spec, lambda, &mut s)? {
                full.add_step(&step);
                half.add_step(&step);
                tracker.observe(&step);
            }
            let hit = [0, 1, 2].map(|i| tracker.times[i].is_finite());
            Ok((full.time[0] / w, half.time[0] / (0.5 * w), hit))
        });
    let mut ell_w = Vec::with_capacity(cfg.replicas);
    let mut ell_half = Vec::with_capacity(cfg.replicas);
    let mut hits = [0usize; 3];
    for r in per_replica {
        let (a, b, h) = r?;
        ell_w.push(a);
        ell_half.push(b);
        for (acc, hit) in hits.iter_mut().zip(h) {
            *acc += usize::from(hit);
        }
    }
    let n = cfg.replicas as f64;
    let (m_w, se_w) = mean_and_stderr(&ell_w);
    let (m_half, se_half) = mean_and_stderr(&ell_half);
    let exp_mean = 1.0 / (1.0 + cfg.alpha);
    let budget = EXP_LAW_TOL * exp_mean + (m_w - m_half).abs();
    let mut csv = Csv::new(&[
        "quantity",
        "level",
        "estimate",
        "stderr",
        "reference",
        "rel_diff",
    ]);
    let rel = |x: f64, r: f64| (x - r).abs() / r;
    csv.row(&[
        "local_time_w".into(),
        f17(0.0),
        f17(m_w),
        f17(se_w),
        f17(exp_mean),
        f17(rel(m_w, exp_mean)),
    ]);
    csv.row(&[
        "local_time_half_w".into(),
        f17(0.0),
        f17(m_half),
        f17(se_half),
        f17(exp_mean),
        f17(rel(m_half, exp_mean)),
    ]);
    let mut checks = vec![Check::new(
        "mean local time at an Exp(1) time",
        (m_half - exp_mean).abs() <= budget,
        format!("{m_half:.5} vs 1/(1+alpha) = {exp_mean:.5}, allowed {budget:.5} (5% + |w vs w/2| {:.5})", (m_w - m_half).abs()),
    )];
    let mut probs = Vec::new();
    for (i, &y) in levels.iter().enumerate() {
        let p = hits[i] as f64 / n;
        let se = (p * (1.0 - p) / n).sqrt();
        let reference = if y < 0.0 {
            y.exp()
        } else {
            lemma7_prob(cfg.alpha, y)?
        };
        csv.row(&[
            "passage_before_exp".into(),
            f17(y),
            f17(p),
            f17(se),
            f17(reference),
            f17(rel(p, reference)),
        ]);
        let check = if y < 0.0 {
            Check::new(
                format!("P(T_{y:.4} < lambda) = exp(y)"),
                (p - reference).abs() <= PASSAGE_SE * se,
                format!(
                    "{p:.5} vs {reference:.5}, {:.2} s.e.",
                    (p - reference).abs() / se
                ),
            )
        } else {
            Check::new(
                format!("P(T_{y} < lambda) against quadrature"),
                rel(p, reference) <= LEMMA7_TOL,
                format!(
                    "{p:.5} ± {se:.5} vs {reference:.5} (rel {:.4})",
                    rel(p, reference)
                ),
            )
        };
        checks.push(check);
        probs.push(json!({"level": y, "estimate": p, "stderr": se, "reference": reference}));
    }
    Ok(Outcome {
        csv,
        metrics: json!({
            "local_time_mean_w": m_w,
            "local_time_mean_half_w": m_half,
            "expected": exp_mean,
            "passage": probs,
        }),
        checks,
        extra_files: Vec::new(),
    })
}

/// E|ℓ̂^{c+d/2}(T) − ℓ̂^{c−d/2}(T)|^p against d on log-log axes.
pub fn scaling(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let seps = cfg.separations();
    let c = cfg.pair_center;
    let spec = IncrementScalingSpec {
        path: cfg.path_spec()?,
        pairs: seps.iter().map(|d| (c - 0.5 * d, c + 0.5 * d)).collect(),
        p: cfg.p,
        horizon: cfg.horizon,
        bandwidth: cfg.bandwidth,
        replicas: cfg.replicas,
        seed: cfg.seed,
        threads: cfg.threads,
    };
    let res = increment_scaling(&spec)?;
    let mut csv = Csv::new(&["sep", "p", "moment_estimate", "stderr"]);
    for ((&d, &m), &se) in res.sep.iter().zip(&res.moment).zip(&res.stderr) {
        csv.row(&[f17(d), f17(cfg.p), f17(m), f17(se)]);
    }
    let target = cfg.p * cfg.alpha / 2.0;
    let checks = vec![Check::new(
        "increment moment exponent",
        within(res.exponent, target, SCALING_TOL),
        format!(
            "{:.4} ± {:.4} vs p·alpha/2 = {target} ± {SCALING_TOL}",
            res.exponent, res.exponent_stderr
        ),
    )];
    Ok(Outcome {
        csv,
        metrics: json!({
            "exponent": res.exponent,
            "exponent_stderr": res.exponent_stderr,
            "target": target,
            "pair_center": c,
        }),
        checks,
        extra_files: Vec::new(),
    })
}
