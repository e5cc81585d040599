use super::*;
use crate::estimators::{ks_two_sample, mean_and_stderr};
use crate::specfun::holder_moment_bound;
use crate::stablepath::{simulate_path, PathSkeleton, SmallJumpMode, StableParams};
use proptest::prelude::*;

fn unit_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| j as f64 / (n - 1) as f64).collect()
}

fn jump(t: f64, x_pre: f64, dx: f64) -> JumpEvent {
    JumpEvent { t, x_pre, dx }
}

#[test]
fn hat_unit_path_is_a_tent() {
    let k = MarkKernel::hat(5).unwrap();
    let m = sample_unit_path(&k, &mut RngStream::new(1, 0));
    assert_eq!(&*m.unit, &[0.0, 0.25, 0.5, 0.25, 0.0]);
    assert_eq!(m.x, 1.0);
    assert!(MarkKernel::hat(1).is_err());
}

#[test]
fn scale_and_eval() {
    let unit = sample_unit_path(&MarkKernel::hat(3).unwrap(), &mut RngStream::new(1, 0));
    assert_eq!(scale_mark(&unit, 1.0), unit);
    let m = scale_mark(&unit, 2.0);
    assert_eq!(eval_mark(&m, 0.5), 0.5);
    assert_eq!(eval_mark(&m, 1.0), 1.0);
    assert_eq!(eval_mark(&m, -1.0), 0.0);
    assert_eq!(eval_mark(&m, 0.0), 0.0);
    assert_eq!(eval_mark(&m, 2.0), 0.0);
    assert_eq!(eval_mark(&m, 2.5), 0.0);
    let back = scale_mark(&m, 0.5);
    assert!((back.x - 1.0).abs() < 1e-15 && (back.scale - 1.0).abs() < 1e-15);

    let custom = MarkPath::unit(1.0, vec![0.0, 0.3, 0.9, 0.0]);
    let mid = eval_mark(&custom, 0.5);
    assert!((mid - 0.6).abs() < 1e-15);
}

#[test]
fn hat_field_matches_closed_form() {
    let unit = sample_unit_path(&MarkKernel::hat(3).unwrap(), &mut RngStream::new(1, 0));
    for &x in &[0.37, 1.0, 2.5] {
        let m = scale_mark(&unit, x);
        for k in 0..50 {
            let s = x * k as f64 / 49.0;
            let want = if s > 0.0 && s < x { s.min(x - s) } else { 0.0 };
            assert!((eval_mark(&m, s) - want).abs() < 1e-14);
        }
    }
}

#[test]
fn besq_absorbed_at_zero_dimension() {
    let grid = unit_grid(11);
    let x = besq_from_zero(0.0, 0.0, &grid, &mut RngStream::new(3, 0)).unwrap();
    assert!(x.iter().all(|&v| v == 0.0));
    assert!(besq_from_zero(1.0, 0.0, &[0.0, 0.5, 0.5], &mut RngStream::new(3, 0)).is_err());
}

#[test]
fn besq_transition_moments() {
    let mut s = RngStream::new(11, 0);
    let v: Vec<f64> = (0..100_000)
        .map(|_| besq_from_zero(1.0, 0.0, &[0.0, 1.0], &mut s).unwrap()[1])
        .collect();
    let (m, se) = mean_and_stderr(&v);
    assert!((m - 1.0).abs() < 3.0 * se, "mean {m} se {se}");

    let v: Vec<f64> = (0..100_000)
        .map(|_| besq_from_zero(2.0, 3.0, &[0.0, 0.5], &mut s).unwrap()[1])
        .collect();
    let (m, _) = mean_and_stderr(&v);
    assert!((m - 4.0).abs() < 0.03);
    let sq: Vec<f64> = v.iter().map(|x| (x - 4.0).powi(2)).collect();
    let (var, se) = mean_and_stderr(&sq);
    assert!((var - 7.0).abs() < 3.0 * se, "var {var} se {se}");
}

/// Euler–Maruyama with fine steps as an independent oracle for the variance.
#[test]
fn besq_variance_against_euler_scheme() {
    let mut s = RngStream::new(12, 0);
    let steps = 400;
    let h = 0.5 / steps as f64;
    let v: Vec<f64> = (0..20_000)
        .map(|_| {
            let mut x: f64 = 3.0;
            for _ in 0..steps {
                x = (x + 2.0 * h + 2.0 * x.max(0.0).sqrt() * h.sqrt() * s.normal()).max(0.0);
            }
            x
        })
        .collect();
    let sq: Vec<f64> = v.iter().map(|x| (x - 4.0).powi(2)).collect();
    let (var, se) = mean_and_stderr(&sq);
    assert!((var - 7.0).abs() < 3.0 * se + 0.1, "euler var {var}");
}

#[test]
fn bridge_is_pinned_and_nonnegative() {
    let mut s = RngStream::new(5, 0);
    for &n in &[2usize, 3, 11, 101] {
        let m = besq_bridge(0.5, n, &mut s).unwrap();
        assert_eq!(m.unit.len(), n);
        assert_eq!(m.unit[0], 0.0);
        assert_eq!(m.unit[n - 1], 0.0);
        assert!(m.unit.iter().all(|&v| v >= 0.0));
    }
    assert!(besq_bridge(1.0, 11, &mut s).is_err());
}

#[test]
fn bridge_midpoint_matches_refined_bridge() {
    let draws = 10_000;
    let sample = |n: usize, seed: u64| {
        let mut s = RngStream::new(seed, 0);
        let v: Vec<f64> = (0..draws)
            .map(|_| eval_mark(&besq_bridge(0.5, n, &mut s).unwrap(), 0.5))
            .collect();
        mean_and_stderr(&v)
    };
    let (m1, s1) = sample(11, 21);
    let (m2, s2) = sample(101, 22);
    assert!(
        (m1 - m2).abs() < 3.0 * (s1 * s1 + s2 * s2).sqrt(),
        "{m1} vs {m2}"
    );
}

#[test]
fn bridge_reversal_law() {
    let mut s = RngStream::new(9, 0);
    let (mut q1, mut q3) = (Vec::new(), Vec::new());
    for _ in 0..10_000 {
        let m = besq_bridge(0.5, 5, &mut s).unwrap();
        q1.push(m.unit[1]);
        q3.push(m.unit[3]);
    }
    let ks = ks_two_sample(&q1, &q3).unwrap();
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn mark_constants() {
    let mut s = RngStream::new(1, 0);
    let hat = mark_constant_c(&MarkKernel::hat(3).unwrap(), 0.5, &mut s).unwrap();
    assert!((hat - 0.398942280401433).abs() < 1e-12);
    let besq = mark_constant_c(&MarkKernel::besq_exc(0.5, 11).unwrap(), 0.5, &mut s).unwrap();
    assert!((besq - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    let k = MarkKernel::custom(Arc::new(HatSampler), 0.4, 3).unwrap();
    assert!(matches!(
        mark_constant_c(&k, 0.5, &mut s),
        Err(Error::Unsupported(_))
    ));
}

#[derive(Debug)]
struct HatSampler;

impl UnitPathSampler for HatSampler {
    fn sample(&self, resolution: usize, _s: &mut RngStream) -> Vec<f64> {
        hat_samples(resolution)
    }
}

#[derive(Debug)]
struct BridgeSampler(f64);

impl UnitPathSampler for BridgeSampler {
    fn sample(&self, resolution: usize, s: &mut RngStream) -> Vec<f64> {
        besq_bridge(self.0, resolution, s).unwrap().unit.to_vec()
    }
}

#[test]
fn custom_hat_constant_by_monte_carlo() {
    let k = MarkKernel::custom(Arc::new(HatSampler), 1.0, 3).unwrap();
    let c = mark_constant_c(&k, 0.5, &mut RngStream::new(2, 0)).unwrap();
    let want = 2f64.powf(-0.5) / gamma(0.5);
    assert!((c / want - 1.0).abs() < 0.02, "{c} vs {want}");
}

/// Monte Carlo of E Z(U)^α for the bridge against the closed BESQ constant.
#[test]
fn besq_constant_by_monte_carlo() {
    let k = MarkKernel::custom(Arc::new(BridgeSampler(0.5)), 1.0, 201).unwrap();
    let c = mark_constant_c_mc(&k, 0.5, 20_000, &mut RngStream::new(4, 0)).unwrap();
    assert!(
        (c / std::f64::consts::FRAC_1_SQRT_2 - 1.0).abs() < 0.03,
        "{c}"
    );
}

#[test]
fn holder_examples() {
    let g = [0.0, 0.5, 1.0];
    assert_eq!(holder_quotient(&[2.0, 2.0, 2.0], &g, 0.5).unwrap(), 0.0);
    let v = holder_quotient(&[0.0, 1.0, 0.0], &g, 0.5).unwrap();
    assert!((v - std::f64::consts::SQRT_2).abs() < 1e-15);
    assert!(holder_quotient(&[0.0], &[0.0], 0.5).is_err());
    assert!(holder_quotient(&[0.0, 1.0], &[0.0, 1.0], 0.0).is_err());
}

#[test]
fn holder_matches_brute_force_on_random_vectors() {
    let mut s = RngStream::new(8, 0);
    for _ in 0..200 {
        let f: Vec<f64> = (0..100).map(|_| s.normal()).collect();
        let g = unit_grid(100);
        for &gam in &[0.05, 0.2, 0.5, 0.9] {
            assert_eq!(
                holder_quotient(&f, &g, gam).unwrap(),
                holder_quotient_brute(&f, &g, gam).unwrap()
            );
        }
    }
}

#[test]
fn holder_moment_of_besq_below_bound() {
    let n = 201;
    let grid = unit_grid(n);
    let mut s = RngStream::new(6, 0);
    let v: Vec<f64> = (0..500)
        .map(|_| {
            let x = besq_from_zero(5.0, 0.0, &grid, &mut s).unwrap();
            holder_quotient(&x, &grid, 0.2).unwrap().powi(8)
        })
        .collect();
    let (m, _) = mean_and_stderr(&v);
    assert!(m <= holder_moment_bound(5.0, 0.0, 8.0, 0.2).unwrap());
}

/// Naive first fit: compare against every member of every pile.
fn naive_piles(jumps: &[JumpEvent]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..jumps.len()).collect();
    order.sort_by(|&i, &j| {
        jumps[j]
            .dx
            .partial_cmp(&jumps[i].dx)
            .unwrap()
            .then(jumps[i].t.partial_cmp(&jumps[j].t).unwrap())
    });
    let mut piles: Vec<Vec<usize>> = Vec::new();
    for i in order {
        let (a, b) = (jumps[i].x_pre, jumps[i].x_post());
        let fits = |p: &Vec<usize>| {
            p.iter()
                .all(|&m| jumps[m].x_post() < a || jumps[m].x_pre > b)
        };
        match piles.iter().position(fits) {
            Some(k) => piles[k].push(i),
            None => piles.push(vec![i]),
        }
    }
    piles
}

fn check_pile_invariants(jumps: &[JumpEvent], set: &PileSet) {
    let mut seen = vec![false; jumps.len()];
    for pile in &set.piles {
        for &i in pile {
            assert!(!seen[i]);
            seen[i] = true;
        }
        let mut spans: Vec<(f64, f64)> = pile
            .iter()
            .map(|&i| (jumps[i].x_pre, jumps[i].x_post()))
            .collect();
        spans.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        assert!(spans.windows(2).all(|w| w[0].1 < w[1].0));
        assert!(pile.iter().all(|&i| jumps[i].dx <= jumps[pile[0]].dx));
    }
    assert!(seen.iter().all(|&v| v));
}

fn random_jumps(s: &mut RngStream, n: usize) -> Vec<JumpEvent> {
    (0..n)
        .map(|k| jump(k as f64, 4.0 * s.uniform() - 2.0, 0.5 * s.uniform().powi(2)))
        .collect()
}

#[test]
fn piling_small_cases() {
    assert_eq!(pile_jumps(&[jump(0.1, 0.0, 1.0)]).piles, vec![vec![0]]);
    let two = [jump(0.1, 0.0, 1.0), jump(0.2, 0.5, 1.0)];
    assert_eq!(pile_jumps(&two).piles, vec![vec![0], vec![1]]);
    let touching = [jump(0.1, 0.0, 1.0), jump(0.2, 1.0, 0.5)];
    assert_eq!(pile_jumps(&touching).len(), 2);
    let tie = [jump(0.3, 5.0, 1.0), jump(0.1, 0.0, 1.0)];
    assert_eq!(pile_jumps(&tie).piles, vec![vec![1, 0]]);
    assert!(pile_jumps(&[]).is_empty());
}

#[test]
fn piling_matches_naive_scan() {
    for seed in 0..100 {
        let mut s = RngStream::new(seed, 0);
        let n = 1 + uniform_len(&mut s);
        let jumps = random_jumps(&mut s, n);
        let set = pile_jumps(&jumps);
        assert_eq!(set.piles, naive_piles(&jumps));
        check_pile_invariants(&jumps, &set);
    }
}

fn uniform_len(s: &mut RngStream) -> usize {
    crate::sampling::uniform_index(s, 200)
}

#[test]
fn piling_invariants_on_a_path() {
    let p = StableParams::new(0.5, 1.0).unwrap();
    let path = simulate_path(
        p,
        2.0,
        0.01,
        0.01,
        SmallJumpMode::DriftOnly,
        &mut RngStream::new(3, 0),
    )
    .unwrap();
    let set = pile_jumps(&path.jumps);
    check_pile_invariants(&path.jumps, &set);
    let maxes = set.max_jumps(&path.jumps);
    assert!(maxes.windows(2).all(|w| w[0] >= w[1]));
}

fn one_jump_path(dx: f64) -> PathSkeleton {
    let p = StableParams::new(0.5, 1.0).unwrap();
    PathSkeleton::from_parts(
        p,
        1.0,
        0.01,
        SmallJumpMode::DriftOnly,
        vec![0.0, 0.0],
        &[(0.5, dx)],
    )
    .unwrap()
}

#[test]
fn cmj_single_hat_jump() {
    let path = one_jump_path(2.0);
    let unit = sample_unit_path(&MarkKernel::hat(3).unwrap(), &mut RngStream::new(1, 0));
    let marks = vec![scale_mark(&unit, 2.0)];
    let levels: Vec<f64> = (0..=30).map(|k| -0.5 + 0.1 * k as f64).collect();
    let z = cmj_aggregate(&path, &marks, &levels, 1.0).unwrap();
    for (y, v) in levels.iter().zip(&z) {
        let want = if *y > 0.0 && *y < 2.0 {
            y.min(2.0 - y)
        } else {
            0.0
        };
        assert!((v - want).abs() < 1e-14, "y={y}");
    }
    assert!(cmj_aggregate(&path, &marks, &levels, 0.4)
        .unwrap()
        .iter()
        .all(|&v| v == 0.0));
    assert!(cmj_aggregate(&path, &[], &levels, 1.0).is_err());
}

#[test]
fn cmj_is_additive_over_disjoint_jumps() {
    let p = StableParams::new(0.5, 1.0).unwrap();
    let path = PathSkeleton::from_parts(
        p,
        1.0,
        0.01,
        SmallJumpMode::DriftOnly,
        vec![0.0, -3.0],
        &[(0.2, 1.0), (0.8, 0.5)],
    )
    .unwrap();
    let unit = sample_unit_path(&MarkKernel::hat(3).unwrap(), &mut RngStream::new(1, 0));
    let marks = attach_marks(
        &MarkKernel::hat(3).unwrap(),
        &path.jumps,
        &mut RngStream::new(1, 0),
    );
    assert_eq!(marks[0], scale_mark(&unit, 1.0));
    let levels: Vec<f64> = (0..=40).map(|k| -3.0 + 0.1 * k as f64).collect();
    let z = cmj_aggregate(&path, &marks, &levels, 1.0).unwrap();
    for (i, &y) in levels.iter().enumerate() {
        let want: f64 = path
            .jumps
            .iter()
            .zip(&marks)
            .map(|(j, m)| eval_mark(m, y - j.x_pre))
            .sum();
        assert_eq!(z[i], want);
    }
}

#[test]
fn cmj_holder_quotient_stable_under_refinement() {
    let p = StableParams::new(0.5, 1.0).unwrap();
    let path = simulate_path(
        p,
        1.0,
        1e-3,
        0.01,
        SmallJumpMode::DriftOnly,
        &mut RngStream::new(17, 0),
    )
    .unwrap();
    let kernel = MarkKernel::hat(3).unwrap();
    let marks = attach_marks(&kernel, &path.jumps, &mut RngStream::new(17, 1));
    let quotient = |step: f64| {
        let levels: Vec<f64> = (0..=(2.0 / step).round() as usize)
            .map(|k| -1.0 + k as f64 * step)
            .collect();
        let z = cmj_aggregate(&path, &marks, &levels, 1.0).unwrap();
        holder_quotient(&z, &levels, 0.3).unwrap()
    };
    let coarse = quotient(0.02);
    let fine = quotient(0.005);
    assert!(coarse.is_finite() && fine.is_finite());
    assert!(fine < 2.0 * coarse, "{coarse} -> {fine}");
}

proptest! {
    #[test]
    fn prop_hat_mark_bounded_by_distance_to_ends(x in 0.01f64..10.0, u in -0.5f64..1.5) {
        let unit = sample_unit_path(&MarkKernel::hat(3).unwrap(), &mut RngStream::new(1, 0));
        let m = scale_mark(&unit, x);
        let s = u * x;
        let v = eval_mark(&m, s);
        prop_assert!(v >= 0.0);
        prop_assert!(v <= s.max(0.0).min((x - s).max(0.0)) + 1e-12);
    }

    #[test]
    fn prop_holder_optimized_equals_brute(seed in 0u64..10_000, n in 2usize..60, gam in 0.01f64..1.5) {
        let mut s = RngStream::new(seed, 0);
        let f: Vec<f64> = (0..n).map(|_| s.normal()).collect();
        let mut g: Vec<f64> = Vec::with_capacity(n);
        let mut t = 0.0;
        for _ in 0..n {
            t += 0.01 + s.uniform();
            g.push(t);
        }
        prop_assert_eq!(holder_quotient(&f, &g, gam).unwrap(), holder_quotient_brute(&f, &g, gam).unwrap());
    }

    #[test]
    fn prop_piling_is_a_disjoint_partition(seed in 0u64..10_000, n in 1usize..120) {
        let mut s = RngStream::new(seed, 1);
        let jumps = random_jumps(&mut s, n);
        let set = pile_jumps(&jumps);
        check_pile_invariants(&jumps, &set);
        prop_assert_eq!(set.piles, naive_piles(&jumps));
    }
}
