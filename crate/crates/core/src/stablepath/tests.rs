use super::*;
use crate::quad::{integrate, QuadOptions};

const A: f64 = 0.5;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn levy_density(alpha: f64, x: f64) -> f64 {
    (1.0 + alpha) * alpha / gamma(1.0 - alpha) * x.powf(-alpha - 2.0)
}

/// ∫_a^∞ f for f decaying like x^{−p}, via x = a·u^{−1/(p−1)}.
fn tail_integral<F: Fn(f64) -> f64>(f: F, a: f64, p: f64) -> f64 {
    let k = 1.0 / (p - 1.0);
    let g = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let x = a * u.powf(-k);
        f(x) * a * k * u.powf(-k - 1.0)
    };
    integrate(g, 0.0, 1.0, quad()).unwrap().value
}

fn quad() -> QuadOptions {
    QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-12,
        max_intervals: 4000,
    }
}

fn params() -> StableParams {
    StableParams::new(A, 1.0).unwrap()
}

#[test]
fn levy_tail_values_and_quadrature() {
    assert!((levy_tail(0.5, 1.0).unwrap() - 0.282_094_791_773_878_14).abs() < 1e-12);
    for &x in &[0.01, 0.3, 1.0, 7.0] {
        let q = tail_integral(|z| levy_density(A, z), x, 2.5);
        assert!(rel(levy_tail(A, x).unwrap(), q) < 1e-8);
    }
    let xs = [0.1, 1.0, 10.0, 1e3, 1e6];
    let v: Vec<f64> = xs.iter().map(|&x| levy_tail(A, x).unwrap()).collect();
    assert!(v.windows(2).all(|w| w[1] < w[0]));
    assert!(v[4] < 1e-8);
    assert!(levy_tail(A, 0.0).is_err());
    assert!(levy_tail(A, -1.0).is_err());
}

#[test]
fn levy_double_tail_values() {
    let q = tail_integral(|z| levy_tail(A, z).unwrap(), 1.0, 1.5);
    assert!((levy_double_tail(A, 1.0).unwrap() - 0.564_189_583_547_756_3).abs() < 1e-12);
    assert!(rel(levy_double_tail(A, 1.0).unwrap(), q) < 1e-8);
    let h = 1e-4;
    for &x in &[0.5, 1.0, 3.0] {
        let d = -(levy_double_tail(A, x + h).unwrap() - levy_double_tail(A, x - h).unwrap())
            / (2.0 * h);
        assert!(rel(d, levy_tail(A, x).unwrap()) < 1e-5);
    }
    assert!(levy_double_tail(A, 1e12).unwrap() < 1e-5);
}

#[test]
fn compensator_and_variance() {
    let q = tail_integral(|z| z * levy_density(A, z), 1.0, 1.5);
    assert!((compensator_drift(A, 1.0).unwrap() - 0.846_284_375_321_634_5).abs() < 1e-12);
    assert!(rel(compensator_drift(A, 1.0).unwrap(), q) < 1e-8);
    let q = tail_integral(|z| z * levy_density(A, z), 0.01, 1.5);
    assert!(rel(compensator_drift(A, 0.01).unwrap(), q) < 1e-8);
    assert!((compensator_drift(A, 0.01).unwrap() - 8.462_843_753_216_345).abs() < 1e-10);
    let ratio = compensator_drift(A, 1e-6).unwrap() / compensator_drift(A, 1e-4).unwrap();
    assert!(rel(ratio, 10.0) < 1e-12);

    let q = integrate(|z| z * z * levy_density(A, z), 0.0, 1.0, quad())
        .unwrap()
        .value;
    assert!(rel(small_jump_variance(A, 1.0).unwrap(), q) < 1e-8);
    assert!(
        rel(
            small_jump_variance(A, 1.0).unwrap(),
            1.5 / std::f64::consts::PI.sqrt()
        ) < 1e-14
    );
    let q = integrate(|z| z * z * levy_density(A, z), 0.0, 1e-4, quad())
        .unwrap()
        .value;
    assert!(rel(small_jump_variance(A, 1e-4).unwrap(), q) < 1e-8);
    assert!((small_jump_variance(A, 1e-4).unwrap() - 0.008_462_843_753_216_345).abs() < 1e-12);
    assert!(small_jump_variance(A, 1e-12).unwrap() < 1e-5);
    assert!(compensator_drift(A, 0.0).is_err());
}

#[test]
fn simulate_is_deterministic_and_valid() {
    let p = params();
    let a = simulate_path(
        p,
        1.0,
        1e-3,
        1e-3,
        SmallJumpMode::DriftOnly,
        &mut RngStream::new(42, 0),
    )
    .unwrap();
    let b = simulate_path(
        p,
        1.0,
        1e-3,
        1e-3,
        SmallJumpMode::DriftOnly,
        &mut RngStream::new(42, 0),
    )
    .unwrap();
    assert_eq!(a, b);
    assert_eq!(a.values[0], 0.0);
    assert_eq!(a.values.len(), 1001);
    assert!(a.jumps.windows(2).all(|w| w[0].t < w[1].t));
    assert!(a.jumps.iter().all(|j| j.dx > 1e-3));
    let expected = levy_tail(A, 1e-3).unwrap();
    assert!((expected - 8920.620580763856).abs() < 1e-6);
    assert!((a.jumps.len() as f64 - expected).abs() < 3.0 * expected.sqrt());
    // grid values include every jump at or before the grid time
    for k in [1usize, 250, 777, 1000] {
        let tk = a.grid_time(k);
        let jsum: f64 = a.jumps.iter().filter(|j| j.t <= tk).map(|j| j.dx).sum();
        let drift = -compensator_drift(A, 1e-3).unwrap() * tk;
        assert!((a.values[k] - (jsum + drift)).abs() < 1e-9, "k={k}");
    }
}

#[test]
fn jump_x_pre_is_path_value() {
    let p = params();
    let path = simulate_path(
        p,
        0.5,
        1e-2,
        1e-2,
        SmallJumpMode::Gaussian,
        &mut RngStream::new(1, 3),
    )
    .unwrap();
    let mut last = 0.0;
    for step in path.steps() {
        match step {
            PathStep::Segment { x0, x1, .. } => {
                assert!((x0 - last).abs() < 1e-12);
                last = x1;
            }
            PathStep::Jump(j) => {
                assert_eq!(j.x_pre, last);
                last = j.x_post();
            }
        }
    }
    assert!((last - path.final_value()).abs() < 1e-12);
}

#[test]
fn resource_cap_refuses() {
    let err = simulate_path_capped(
        params(),
        1.0,
        1e-3,
        1e-3,
        SmallJumpMode::DriftOnly,
        1e3,
        &mut RngStream::new(1, 0),
    )
    .unwrap_err();
    match err {
        Error::ResourceCap { expected, cap } => {
            assert!(expected > 8000.0 && cap == 1e3);
            assert!(err.to_string().contains("expected"));
        }
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn stream_matches_skeleton() {
    let spec = PathSpec::new(params(), 1e-3, 1e-3, SmallJumpMode::Gaussian).unwrap();
    let path = simulate_path(
        params(),
        1.0,
        1e-3,
        1e-3,
        SmallJumpMode::Gaussian,
        &mut RngStream::new(5, 2),
    )
    .unwrap();
    let stream = PathStream::new(&spec, 1.0, &mut RngStream::new(5, 2)).unwrap();
    let a: Vec<PathStep> = path.steps().collect();
    let b: Vec<PathStep> = stream.collect();
    assert_eq!(a.len(), b.len());
    assert_eq!(a, b);
    let unbounded = PathStream::new(&spec, f64::INFINITY, &mut RngStream::new(5, 2)).unwrap();
    let c: Vec<PathStep> = steps_until(unbounded, 1.0).collect();
    assert_eq!(a, c);
}

#[test]
fn mean_zero_median_of_means() {
    let p = params();
    let groups = 20;
    let per = 500;
    let mut means = Vec::new();
    for g in 0..groups {
        let mut sum = 0.0;
        for r in 0..per {
            let mut s = RngStream::new(77, (g * per + r) as u64);
            sum += simulate_path(p, 1.0, 1e-2, 1e-2, SmallJumpMode::DriftOnly, &mut s)
                .unwrap()
                .final_value();
        }
        means.push(sum / per as f64);
    }
    let mut sorted = means.clone();
    sorted.sort_by(f64::total_cmp);
    let median = 0.5 * (sorted[groups / 2 - 1] + sorted[groups / 2]);
    let m = means.iter().sum::<f64>() / groups as f64;
    let spread = (means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (groups - 1) as f64).sqrt()
        / (groups as f64).sqrt();
    assert!(
        median.abs() < 5.0 * spread,
        "median {median} spread {spread}"
    );
}

#[test]
fn gaussian_mode_continuous_part_variance() {
    let p = params();
    let eps = 1e-2;
    let n = 4000;
    let finals: Vec<f64> = (0..n)
        .map(|i| {
            *simulate_path(
                p,
                1.0,
                eps,
                0.1,
                SmallJumpMode::Gaussian,
                &mut RngStream::new(8, i),
            )
            .unwrap()
            .continuous
            .last()
            .unwrap()
        })
        .collect();
    let mu = compensator_drift(A, eps).unwrap();
    let var = small_jump_variance(A, eps).unwrap();
    let m = finals.iter().sum::<f64>() / n as f64;
    let v = finals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!((m + mu).abs() < 3.0 * (var / n as f64).sqrt());
    assert!((v - var).abs() < 3.0 * var * (2.0 / n as f64).sqrt());
}

#[test]
fn time_scale_doubles_intensity() {
    let p2 = StableParams::new(A, 2.0).unwrap();
    let spec = PathSpec::new(p2, 1e-2, 1e-2, SmallJumpMode::DriftOnly).unwrap();
    assert!(rel(spec.jump_rate(), 2.0 * levy_tail(A, 1e-2).unwrap()) < 1e-15);
    assert!(rel(spec.drift(), 2.0 * compensator_drift(A, 1e-2).unwrap()) < 1e-15);
    let total: usize = (0..200)
        .map(|i| {
            simulate_path(
                p2,
                1.0,
                1e-2,
                1e-2,
                SmallJumpMode::DriftOnly,
                &mut RngStream::new(4, i),
            )
            .unwrap()
            .jumps
            .len()
        })
        .sum();
    let expected = 200.0 * spec.jump_rate();
    assert!((total as f64 - expected).abs() < 3.0 * expected.sqrt());
}

fn constant_path(horizon: f64, n: usize) -> PathSkeleton {
    PathSkeleton::from_parts(
        params(),
        horizon,
        1e-3,
        SmallJumpMode::DriftOnly,
        vec![0.0; n + 1],
        &[],
    )
    .unwrap()
}

#[test]
fn occupation_constant_path() {
    let path = constant_path(2.0, 10);
    let w = 0.1;
    let f = occupation_local_time(&path, &[-0.1, 0.0, 0.1], w, &[0.0, 1.0, 2.0]).unwrap();
    assert!((f.get(1, 2) - 2.0 / w).abs() < 1e-12);
    assert!((f.get(1, 1) - 1.0 / w).abs() < 1e-12);
    assert_eq!(f.get(0, 2), 0.0);
    // half-open bins: x = 0 belongs to [0.05−0.1, 0.05) only if strictly inside
    let f = occupation_local_time(&path, &[-0.05, 0.05], w, &[2.0]).unwrap();
    assert_eq!(f.get(0, 0), 0.0);
    assert!((f.get(1, 0) - 2.0 / w).abs() < 1e-12);
}

#[test]
fn occupation_monotone_and_tiles() {
    let path = simulate_path(
        params(),
        1.0,
        1e-3,
        1e-3,
        SmallJumpMode::Gaussian,
        &mut RngStream::new(9, 1),
    )
    .unwrap();
    let w = 0.05;
    let (lo, hi) = path.steps().fold((0.0f64, 0.0f64), |(lo, hi), s| match s {
        PathStep::Segment { x0, x1, .. } => (lo.min(x0).min(x1), hi.max(x0).max(x1)),
        PathStep::Jump(j) => (lo.min(j.x_pre), hi.max(j.x_post())),
    });
    let i0 = (lo / w).floor() as i64 - 1;
    let i1 = (hi / w).ceil() as i64 + 1;
    let levels: Vec<f64> = (i0..=i1).map(|i| i as f64 * w).collect();
    let times: Vec<f64> = (0..=10).map(|j| j as f64 * 0.1).collect();
    let f = occupation_local_time(&path, &levels, w, &times).unwrap();
    for i in 0..levels.len() {
        assert!(f.row(i).windows(2).all(|p| p[1] >= p[0]));
    }
    let total: f64 = (0..levels.len()).map(|i| f.final_value(i)).sum::<f64>() * w;
    assert!((total - 1.0).abs() < 1e-9, "tiling total {total}");
}

#[test]
fn inverse_local_time_cases() {
    let times: Vec<f64> = (0..10).map(|j| j as f64).collect();
    let ell: Vec<f64> = (0..10).map(|j| j as f64 * 0.1).collect();
    let f = LocalTimeField::new(vec![0.0], times, 0.1, ell).unwrap();
    assert_eq!(inverse_local_time(&f, 0.0, 0.25).unwrap(), 3.0);
    assert_eq!(inverse_local_time(&f, 0.0, 5.0).unwrap(), f64::INFINITY);
    assert!(inverse_local_time(&f, 0.3, 0.1).is_err());

    let path = simulate_path(
        params(),
        1.0,
        1e-3,
        1e-3,
        SmallJumpMode::DriftOnly,
        &mut RngStream::new(2, 0),
    )
    .unwrap();
    let times: Vec<f64> = (0..=100).map(|j| j as f64 * 0.01).collect();
    let f = occupation_local_time(&path, &[0.0], 0.02, &times).unwrap();
    assert_eq!(inverse_local_time(&f, 0.0, 0.0).unwrap(), 0.01);
}

#[test]
fn first_passage_cases() {
    let path = simulate_path(
        params(),
        2.0,
        1e-3,
        1e-3,
        SmallJumpMode::DriftOnly,
        &mut RngStream::new(3, 0),
    )
    .unwrap();
    assert_eq!(first_passage(&path, 0.0), 0.0);
    let t1 = first_passage(&path, -0.1);
    let t2 = first_passage(&path, -0.2);
    assert!(t2 >= t1);

    // continuous part falls at rate 1; a jump at t=0.5 from −0.5 to 1.5 skips level 1.6
    let n = 100;
    let cont: Vec<f64> = (0..=n).map(|k| -(k as f64) * 0.01).collect();
    let path = PathSkeleton::from_parts(
        params(),
        1.0,
        1e-3,
        SmallJumpMode::DriftOnly,
        cont,
        &[(0.5, 2.0)],
    )
    .unwrap();
    assert_eq!(first_passage(&path, 1.6), f64::INFINITY);
    assert!((first_passage(&path, 1.0) - 1.0).abs() < 1e-12);
    assert!((first_passage(&path, 1.2) - 0.8).abs() < 1e-12);
    assert!((first_passage(&path, -0.25) - 0.25).abs() < 1e-12);
    assert_eq!(first_passage(&path, 5.0), f64::INFINITY);
}

#[test]
fn zero_horizon_path() {
    let p = simulate_path(
        params(),
        0.0,
        1e-3,
        1e-3,
        SmallJumpMode::DriftOnly,
        &mut RngStream::new(1, 0),
    )
    .unwrap();
    assert_eq!(p.values, vec![0.0]);
    assert!(p.jumps.is_empty());
    assert_eq!(p.steps().count(), 0);
}

#[test]
fn dump_round_trip() {
    let path = simulate_path(
        params(),
        0.3,
        1e-2,
        1e-2,
        SmallJumpMode::Gaussian,
        &mut RngStream::new(6, 4),
    )
    .unwrap();
    let mut buf = Vec::new();
    write_skeleton(&path, &mut buf).unwrap();
    assert_eq!(&buf[..8], b"SLTSKEL\0");
    let back = read_skeleton(&buf[..]).unwrap();
    assert_eq!(back, path);
    buf[0] = b'X';
    assert!(read_skeleton(&buf[..]).is_err());
}
